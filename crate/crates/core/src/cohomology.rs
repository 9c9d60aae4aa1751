//! Tate cohomology of a finite abelian p-group carrying an action of the
//! cyclic group of prime order p.
//!
//! The action is given by a single automorphism nu with nu^p = identity. The
//! two operators of interest are s = nu - 1 and the algebraic norm
//! N = 1 + nu + ... + nu^{p-1}; the hat cohomology groups are
//! H^0 = Ker(s)/Im(N) and H^1 = Ker(N)/Im(s). Both are elementary abelian
//! because N - p factors through s.

use crate::padic::PrimeContext;
use crate::pgroup::{
    quotient_of_subgroup, random_automorphism, FinitePGroup, GroupElement, PGroupError, PGroupHom,
};
use thiserror::Error;

/// Errors from module construction and cohomology computations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CohomologyError {
    /// The action is not an endomorphism of the stated group.
    #[error("action must map the group to itself")]
    ActionShape,
    /// The action does not have order dividing p.
    #[error("the p-th power of the action is not the identity")]
    ActionOrder,
    /// Underlying group machinery failed.
    #[error(transparent)]
    PGroup(#[from] PGroupError),
}

/// A finite abelian p-group together with an order-p action.
#[derive(Clone, Debug)]
pub struct FModule {
    group: FinitePGroup,
    action: PGroupHom,
}

impl FModule {
    /// Builds a module, checking that the action is an order-dividing-p
    /// automorphism of the group.
    pub fn new(group: FinitePGroup, action: PGroupHom) -> Result<Self, CohomologyError> {
        if action.domain() != &group || action.codomain() != &group {
            return Err(CohomologyError::ActionShape);
        }
        let mut power = PGroupHom::identity(&group);
        for _ in 0..group.ctx().p() {
            power = action.compose(&power)?;
        }
        if power != PGroupHom::identity(&group) {
            return Err(CohomologyError::ActionOrder);
        }
        Ok(FModule { group, action })
    }

    /// The module with the trivial action.
    pub fn trivial(group: FinitePGroup) -> Self {
        let action = PGroupHom::identity(&group);
        FModule { group, action }
    }

    /// The underlying group.
    pub fn group(&self) -> &FinitePGroup {
        &self.group
    }

    /// The generator nu of the action.
    pub fn action(&self) -> &PGroupHom {
        &self.action
    }

    /// The operator s = nu - 1.
    pub fn s_operator(&self) -> PGroupHom {
        let columns: Vec<Vec<u64>> = (0..self.group.p_rank())
            .map(|j| {
                let img = &self.action.generator_image(j) - &self.group.generator(j);
                img.coords().to_vec()
            })
            .collect();
        PGroupHom::from_columns(&self.group, &self.group, &columns)
            .expect("difference of endomorphisms is well defined")
    }

    /// The norm operator 1 + nu + ... + nu^{p-1}.
    pub fn norm_operator(&self) -> PGroupHom {
        let columns: Vec<Vec<u64>> = (0..self.group.p_rank())
            .map(|j| {
                let mut acc = self.group.zero();
                let mut term = self.group.generator(j);
                for _ in 0..self.group.ctx().p() {
                    acc = &acc + &term;
                    term = self.action.apply(&term);
                }
                acc.coords().to_vec()
            })
            .collect();
        PGroupHom::from_columns(&self.group, &self.group, &columns)
            .expect("sum of endomorphisms is well defined")
    }
}

/// H^0 = Ker(nu - 1) / Im(norm).
pub fn h_hat_0(module: &FModule) -> Result<FinitePGroup, CohomologyError> {
    let s = module.s_operator();
    let norm = module.norm_operator();
    let kernel = s.kernel_generators()?;
    let image: Vec<GroupElement> = (0..module.group.p_rank())
        .map(|j| norm.generator_image(j))
        .collect();
    Ok(quotient_of_subgroup(&kernel, &image, &module.group)?)
}

/// H^1 = Ker(norm) / Im(nu - 1).
pub fn h_hat_1(module: &FModule) -> Result<FinitePGroup, CohomologyError> {
    let s = module.s_operator();
    let norm = module.norm_operator();
    let kernel = norm.kernel_generators()?;
    let image: Vec<GroupElement> = (0..module.group.p_rank())
        .map(|j| s.generator_image(j))
        .collect();
    Ok(quotient_of_subgroup(&kernel, &image, &module.group)?)
}

/// The induced module base x Z[F]: p copies of the base group with the
/// action cyclically permuting the copies. Induced modules are
/// cohomologically trivial.
pub fn induced_module(base: &FinitePGroup) -> Result<FModule, CohomologyError> {
    let ctx = base.ctx();
    let p = ctx.p() as usize;
    let mut factors = Vec::new();
    for &a in base.factors() {
        factors.extend(std::iter::repeat_n(a, p));
    }
    let group = FinitePGroup::new(ctx, factors)?;
    let rank = group.p_rank();
    let columns: Vec<Vec<u64>> = (0..rank)
        .map(|j| {
            let base_index = j / p;
            let copy = j % p;
            let target = base_index * p + (copy + 1) % p;
            let mut col = vec![0u64; rank];
            col[target] = 1;
            col
        })
        .collect();
    let action = PGroupHom::from_columns(&group, &group, &columns)?;
    FModule::new(group, action)
}

/// One un-conjugated building block: uniform exponent, explicit action.
fn block(ctx: PrimeContext, kind: u32, exponent: u32, unit_step: u64) -> (Vec<u32>, Vec<Vec<u64>>) {
    let p = ctx.p() as usize;
    match kind {
        // Trivial action on a single cyclic factor.
        0 => (vec![exponent], vec![vec![1]]),
        // Multiplication by a p-th root of unity 1 + c p^{e-1} (e >= 2).
        1 => {
            let unit = 1 + unit_step * ctx.p_pow(exponent - 1);
            (vec![exponent], vec![vec![unit]])
        }
        // Regular representation: p copies permuted cyclically.
        2 => {
            let factors = vec![exponent; p];
            let columns = (0..p)
                .map(|j| {
                    let mut col = vec![0u64; p];
                    col[(j + 1) % p] = 1;
                    col
                })
                .collect();
            (factors, columns)
        }
        // Companion of 1 + x + ... + x^{p-1} on p-1 factors.
        _ => {
            let rank = p - 1;
            let factors = vec![exponent; rank];
            let minus_one = ctx.p_pow(exponent) - 1;
            let columns = (0..rank)
                .map(|j| {
                    let mut col = vec![0u64; rank];
                    if j + 1 < rank {
                        col[j + 1] = 1;
                    } else {
                        col = vec![minus_one; rank];
                    }
                    col
                })
                .collect();
            (factors, columns)
        }
    }
}

/// Samples a random module: a block sum of trivial, root-of-unity, regular,
/// and companion pieces, conjugated by a random automorphism.
pub fn random_f_module<R: rand::Rng + ?Sized>(
    ctx: PrimeContext,
    rng: &mut R,
    max_blocks: usize,
    max_exponent: u32,
) -> Result<FModule, CohomologyError> {
    assert!(max_exponent >= 1 && max_exponent < ctx.precision());
    let block_count = rng.gen_range(1..=max_blocks.max(1));
    let mut blocks = Vec::new();
    for _ in 0..block_count {
        let kind = rng.gen_range(0..4u32);
        let exponent = if kind == 1 && max_exponent >= 2 {
            rng.gen_range(2..=max_exponent)
        } else {
            rng.gen_range(1..=max_exponent)
        };
        let kind = if kind == 1 && max_exponent < 2 { 0 } else { kind };
        let unit_step = rng.gen_range(1..ctx.p());
        blocks.push(block(ctx, kind, exponent, unit_step));
    }
    blocks.sort_by(|a, b| b.0[0].cmp(&a.0[0]));

    let factors: Vec<u32> = blocks.iter().flat_map(|(f, _)| f.iter().copied()).collect();
    let group = FinitePGroup::new(ctx, factors)?;
    let rank = group.p_rank();
    let mut columns = vec![vec![0u64; rank]; rank];
    let mut offset = 0;
    for (block_factors, block_columns) in &blocks {
        let size = block_factors.len();
        for (j, col) in block_columns.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                columns[offset + j][offset + i] = v;
            }
        }
        offset += size;
    }
    let action = PGroupHom::from_columns(&group, &group, &columns)?;

    let conj = random_automorphism(&group, rng)?;
    let conj_inv = conj.inverse()?;
    let twisted = conj.compose(&action)?.compose(&conj_inv)?;
    FModule::new(group, twisted)
}
