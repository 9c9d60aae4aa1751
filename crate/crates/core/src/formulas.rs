//! Closed-form bookkeeping identities: the minus-part λ transfer under a
//! degree-p shift, the norm defect exponent between tower levels, and the
//! Z_p-rank bookkeeping tied to the Leopoldt defect.
//!
//! These are pure integer identities with executable, test-anchored homes;
//! nothing here is derived from number-field data.

use thiserror::Error;

/// Errors from the closed-form identities.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    /// The defect exponent needs n >= N.
    #[error("level order violated: n = {n} < N = {base}")]
    LevelOrder { n: u64, base: u64 },
    /// The exact value does not fit in 128 bits.
    #[error("result exceeds 128-bit integer range")]
    Overflow,
}

/// Inputs for the minus-part λ transfer. `degree` is [L:K] (= p for the
/// instance implemented here), `ram_e` the ramification index (also p for
/// the inert shift), `half_degree` is [K_j : Q]/2.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KidaInput {
    pub degree: u64,
    pub lambda_minus_k: u64,
    pub ram_e: u64,
    pub half_degree: u64,
}

/// λ^-(L) = [L:K]·λ^-(K) + (e-1)·half_degree.
pub fn kida_lambda_minus(input: KidaInput) -> u128 {
    input.degree as u128 * input.lambda_minus_k as u128
        + (input.ram_e as u128 - 1) * input.half_degree as u128
}

/// Inputs for the norm defect exponent between levels N and n of the
/// tower, with d the half-degree of the base layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NormDefectInput {
    pub n: u64,
    pub base: u64,
    pub d: u64,
    pub p: u64,
}

/// The defect group has order p^(p^(n-N)·d); this returns the exponent
/// p^(n-N)·d exactly.
pub fn hasse_norm_defect_exponent(input: NormDefectInput) -> Result<u128, FormulaError> {
    if input.n < input.base {
        return Err(FormulaError::LevelOrder {
            n: input.n,
            base: input.base,
        });
    }
    let gap = u32::try_from(input.n - input.base).map_err(|_| FormulaError::Overflow)?;
    let power = (input.p as u128)
        .checked_pow(gap)
        .ok_or(FormulaError::Overflow)?;
    power.checked_mul(input.d as u128).ok_or(FormulaError::Overflow)
}

/// Rank bookkeeping: r2 complex-embedding pairs and the Leopoldt defect.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RankBookkeeping {
    pub r2: u64,
    pub defect: u64,
}

/// Z_p-rank of the Galois group of the maximal abelian p-ramified
/// extension: r2 + 1 + defect.
pub fn omega_rank(input: RankBookkeeping) -> u128 {
    input.r2 as u128 + 1 + input.defect as u128
}

/// Z_p-rank over the plus part: defect + 1 (exactly one Z_p-extension is
/// expected when the defect vanishes).
pub fn m_plus_rank(input: RankBookkeeping) -> u128 {
    input.defect as u128 + 1
}
