//! The Iwasawa algebra Λ = Z_p[[T]] at working precision: polynomials over
//! Z/p^K standing in for power series, exact as long as degrees stay under
//! a configured cap.
//!
//! Levels are normalized so that ω_0 = T and ω_n = (1+T)^(p^n) - 1; the
//! transition elements are ν_(n,m) = ω_n / ω_m for n >= m (an exact
//! division in Λ). Division with remainder, Weierstrass preparation, and
//! membership in ideals (h, p^B) are all computed coefficient-exactly.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

use crate::padic::{PAdicInt, PrimeContext};

/// Errors from Λ-level arithmetic.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LambdaError {
    /// ω_n would need degree p^n past the configured cap.
    #[error("level {level} needs degree p^{level} = {needed}, beyond the cap {cap}")]
    LevelTooLarge { level: u32, needed: u128, cap: u64 },
    /// Division by a polynomial whose leading coefficient is not a unit.
    #[error("divisor leading coefficient {0} is not a unit")]
    NotMonic(u64),
    /// The operand vanishes identically at the working precision.
    #[error("element is zero at working precision")]
    ZeroAtPrecision,
    /// A bounded search ran out of room.
    #[error("no level within the degree cap {cap} satisfies the congruence")]
    NotFoundWithinCap { cap: u64 },
}

/// A truncated power series: polynomial over Z/p^K, constant term first.
/// Trailing zero coefficients are always trimmed, so the zero element has
/// an empty coefficient vector and no degree.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct LambdaElt {
    ctx: PrimeContext,
    coeffs: Vec<u64>,
}

impl LambdaElt {
    pub fn zero(ctx: PrimeContext) -> Self {
        LambdaElt {
            ctx,
            coeffs: Vec::new(),
        }
    }

    pub fn one(ctx: PrimeContext) -> Self {
        LambdaElt::constant(ctx, 1)
    }

    /// The variable T.
    pub fn t(ctx: PrimeContext) -> Self {
        LambdaElt::monomial(ctx, 1, 1)
    }

    pub fn constant(ctx: PrimeContext, c: u64) -> Self {
        LambdaElt::from_coeffs(ctx, &[c])
    }

    /// c * T^deg.
    pub fn monomial(ctx: PrimeContext, c: u64, deg: usize) -> Self {
        let mut coeffs = vec![0; deg + 1];
        coeffs[deg] = c;
        LambdaElt::from_coeffs(ctx, &coeffs)
    }

    /// Coefficients as residues, constant term first.
    pub fn from_coeffs(ctx: PrimeContext, coeffs: &[u64]) -> Self {
        let mut c: Vec<u64> = coeffs.iter().map(|&x| ctx.reduce_u64(x)).collect();
        while c.last() == Some(&0) {
            c.pop();
        }
        LambdaElt { ctx, coeffs: c }
    }

    /// Coefficients as signed integers, constant term first.
    pub fn from_i64_coeffs(ctx: PrimeContext, coeffs: &[i64]) -> Self {
        let c: Vec<u64> = coeffs.iter().map(|&x| ctx.reduce_i64(x)).collect();
        LambdaElt::from_coeffs(ctx, &c)
    }

    pub fn context(&self) -> PrimeContext {
        self.ctx
    }

    /// Degree, or None for the zero element.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Coefficient of T^i as a residue (0 beyond the degree).
    pub fn coeff(&self, i: usize) -> u64 {
        self.coeffs.get(i).copied().unwrap_or(0)
    }

    /// All coefficients, constant term first.
    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn leading_coeff(&self) -> u64 {
        self.coeffs.last().copied().unwrap_or(0)
    }

    pub fn constant_term(&self) -> u64 {
        self.coeff(0)
    }

    /// Smallest p-valuation over all coefficients; K for the zero element.
    pub fn min_coeff_valuation(&self) -> u32 {
        self.coeffs
            .iter()
            .map(|&c| self.ctx.valuation_of(c))
            .min()
            .unwrap_or(self.ctx.precision())
    }

    /// Monic with every lower coefficient divisible by p. The constant 1
    /// counts as the distinguished polynomial of degree zero.
    pub fn is_distinguished(&self) -> bool {
        if self.is_zero() || self.leading_coeff() != 1 {
            return false;
        }
        let d = self.coeffs.len() - 1;
        self.coeffs[..d].iter().all(|&c| self.ctx.valuation_of(c) >= 1)
    }

    pub fn is_monic(&self) -> bool {
        self.leading_coeff() == 1
    }

    /// Evaluation at a scalar, by Horner's rule.
    pub fn eval(&self, x: PAdicInt) -> PAdicInt {
        let ctx = self.ctx;
        let mut acc = PAdicInt::zero(ctx);
        for &c in self.coeffs.iter().rev() {
            acc = acc * x + PAdicInt::new(ctx, c);
        }
        acc
    }

    /// Multiplication by the scalar c.
    pub fn scale(&self, c: u64) -> LambdaElt {
        let c = self.ctx.reduce_u64(c);
        let coeffs: Vec<u64> = self.coeffs.iter().map(|&a| self.ctx.mul_raw(a, c)).collect();
        LambdaElt::from_coeffs(self.ctx, &coeffs)
    }

    /// Multiplication by T^k.
    pub fn shift_up(&self, k: usize) -> LambdaElt {
        if self.is_zero() {
            return self.clone();
        }
        let mut coeffs = vec![0; k];
        coeffs.extend_from_slice(&self.coeffs);
        LambdaElt { ctx: self.ctx, coeffs }
    }

    /// Exact division by p^e; requires every coefficient valuation >= e.
    pub fn shift_down_p(&self, e: u32) -> LambdaElt {
        let q = self.ctx.p_pow(e);
        let coeffs: Vec<u64> = self
            .coeffs
            .iter()
            .map(|&c| {
                assert_eq!(c % q, 0, "coefficient {c} not divisible by p^{e}");
                c / q
            })
            .collect();
        LambdaElt::from_coeffs(self.ctx, &coeffs)
    }

    /// f = q g + r with deg r < deg g; g must have a unit leading
    /// coefficient. The pair (q, r) is unique at the working precision.
    pub fn divide(&self, g: &LambdaElt) -> Result<(LambdaElt, LambdaElt), LambdaError> {
        assert_eq!(self.ctx, g.ctx, "mixed prime contexts in divide");
        let ctx = self.ctx;
        if g.is_zero() {
            return Err(LambdaError::ZeroAtPrecision);
        }
        let lead = g.leading_coeff();
        if ctx.valuation_of(lead) > 0 {
            return Err(LambdaError::NotMonic(lead));
        }
        let lead_inv = ctx.invert_raw(lead).expect("unit leading coefficient");
        let dg = g.coeffs.len() - 1;
        let mut rem = self.coeffs.clone();
        if rem.len() <= dg {
            return Ok((LambdaElt::zero(ctx), self.clone()));
        }
        let mut quot = vec![0u64; rem.len() - dg];
        for k in (dg..rem.len()).rev() {
            let q = ctx.mul_raw(rem[k], lead_inv);
            if q == 0 {
                continue;
            }
            quot[k - dg] = q;
            for j in 0..=dg {
                let sub = ctx.mul_raw(q, g.coeffs[j]);
                rem[k - dg + j] = ctx.sub_raw(rem[k - dg + j], sub);
            }
            debug_assert_eq!(rem[k], 0);
        }
        rem.truncate(dg);
        Ok((
            LambdaElt::from_coeffs(ctx, &quot),
            LambdaElt::from_coeffs(ctx, &rem),
        ))
    }

    /// Weierstrass preparation: p^μ · unit · distinguished, exact at
    /// precision. Fails with ZeroAtPrecision on the zero element.
    pub fn weierstrass_prepare(&self) -> Result<WeierstrassForm, LambdaError> {
        weierstrass_prepare(self)
    }
}

fn check_same_ctx(a: &LambdaElt, b: &LambdaElt) {
    assert_eq!(a.ctx, b.ctx, "mixed prime contexts: {:?} vs {:?}", a.ctx, b.ctx);
}

impl Add for &LambdaElt {
    type Output = LambdaElt;
    fn add(self, rhs: &LambdaElt) -> LambdaElt {
        check_same_ctx(self, rhs);
        let ctx = self.ctx;
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let coeffs: Vec<u64> = (0..n)
            .map(|i| ctx.add_raw(self.coeff(i), rhs.coeff(i)))
            .collect();
        LambdaElt::from_coeffs(ctx, &coeffs)
    }
}

impl Sub for &LambdaElt {
    type Output = LambdaElt;
    fn sub(self, rhs: &LambdaElt) -> LambdaElt {
        check_same_ctx(self, rhs);
        let ctx = self.ctx;
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let coeffs: Vec<u64> = (0..n)
            .map(|i| ctx.sub_raw(self.coeff(i), rhs.coeff(i)))
            .collect();
        LambdaElt::from_coeffs(ctx, &coeffs)
    }
}

impl Mul for &LambdaElt {
    type Output = LambdaElt;
    fn mul(self, rhs: &LambdaElt) -> LambdaElt {
        check_same_ctx(self, rhs);
        let ctx = self.ctx;
        if self.is_zero() || rhs.is_zero() {
            return LambdaElt::zero(ctx);
        }
        let m = ctx.modulus() as u128;
        let mut acc = vec![0u128; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                acc[i + j] += (a as u128 * b as u128) % m;
            }
        }
        let coeffs: Vec<u64> = acc.iter().map(|&s| (s % m) as u64).collect();
        LambdaElt::from_coeffs(ctx, &coeffs)
    }
}

impl Neg for &LambdaElt {
    type Output = LambdaElt;
    fn neg(self) -> LambdaElt {
        let coeffs: Vec<u64> = self.coeffs.iter().map(|&c| self.ctx.neg_raw(c)).collect();
        LambdaElt::from_coeffs(self.ctx, &coeffs)
    }
}

fn fmt_poly(elt: &LambdaElt, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if elt.is_zero() {
        return write!(f, "0");
    }
    let mut first = true;
    for (i, &c) in elt.coeffs.iter().enumerate() {
        if c == 0 {
            continue;
        }
        if !first {
            write!(f, " + ")?;
        }
        first = false;
        match i {
            0 => write!(f, "{c}")?,
            1 if c == 1 => write!(f, "T")?,
            1 => write!(f, "{c}*T")?,
            _ if c == 1 => write!(f, "T^{i}")?,
            _ => write!(f, "{c}*T^{i}")?,
        }
    }
    Ok(())
}

impl fmt::Debug for LambdaElt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_poly(self, f)
    }
}

impl fmt::Display for LambdaElt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_poly(self, f)
    }
}

/// p^mu_exponent * unit * distinguished, with the product reproducing the
/// prepared element exactly at the working precision.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeierstrassForm {
    pub mu_exponent: u32,
    pub distinguished: LambdaElt,
    pub unit: LambdaElt,
}

/// Binary exponentiation of a polynomial.
fn poly_pow(base: &LambdaElt, mut exp: u64) -> LambdaElt {
    let mut base = base.clone();
    let mut acc = LambdaElt::one(base.ctx);
    while exp > 0 {
        if exp & 1 == 1 {
            acc = &acc * &base;
        }
        base = &base * &base;
        exp >>= 1;
    }
    acc
}

/// ω_n = (1+T)^(p^n) - 1, normalized so ω_0 = T. Errors when p^n exceeds
/// the degree cap.
pub fn omega(ctx: PrimeContext, n: u32, degree_cap: u64) -> Result<LambdaElt, LambdaError> {
    let needed = (ctx.p() as u128)
        .checked_pow(n)
        .unwrap_or(u128::MAX);
    if needed > degree_cap as u128 {
        return Err(LambdaError::LevelTooLarge {
            level: n,
            needed,
            cap: degree_cap,
        });
    }
    let one_plus_t = LambdaElt::from_coeffs(ctx, &[1, 1]);
    let pw = poly_pow(&one_plus_t, needed as u64);
    Ok(&pw - &LambdaElt::one(ctx))
}

/// ν_(n,m) = ω_n / ω_m for n >= m, an exact division in Λ.
pub fn nu(ctx: PrimeContext, n: u32, m: u32, degree_cap: u64) -> Result<LambdaElt, LambdaError> {
    assert!(n >= m, "nu requires n >= m, got ({n}, {m})");
    let top = omega(ctx, n, degree_cap)?;
    if n == m {
        return Ok(LambdaElt::one(ctx));
    }
    let bottom = omega(ctx, m, degree_cap)?;
    let (q, r) = top.divide(&bottom)?;
    debug_assert!(r.is_zero(), "omega({n}) not divisible by omega({m})");
    Ok(q)
}

/// Power-series inverse of a unit mod (p, T^len): coefficients over Z/p.
fn series_inverse_mod_p(ctx: PrimeContext, w: &[u64], len: usize) -> Vec<u64> {
    let p = ctx.p();
    let w0 = w[0] % p;
    debug_assert_ne!(w0, 0);
    // Inverse of w0 in Z/p by Fermat.
    let mut inv0 = 1u64;
    let mut base = w0;
    let mut e = p - 2;
    while e > 0 {
        if e & 1 == 1 {
            inv0 = inv0 * base % p;
        }
        base = base * base % p;
        e >>= 1;
    }
    let mut out = vec![0u64; len];
    out[0] = inv0;
    for k in 1..len {
        let mut s = 0u64;
        for j in 1..=k.min(w.len() - 1) {
            s = (s + w[j] % p * out[k - j]) % p;
        }
        out[k] = (p - s) % p * inv0 % p;
    }
    out
}

/// Weierstrass preparation of f: the unique factorization
/// f = p^μ · u(T) · P(T) with u a unit and P distinguished of degree d,
/// computed by lifting the coprime factorization (T^d, unit part) of
/// f/p^μ mod p through K linear Hensel steps. For polynomial input the
/// unit factor is itself a polynomial of degree deg(f) - d.
pub fn weierstrass_prepare(f: &LambdaElt) -> Result<WeierstrassForm, LambdaError> {
    let ctx = f.ctx;
    if f.is_zero() {
        return Err(LambdaError::ZeroAtPrecision);
    }
    let mu = f.min_coeff_valuation();
    let f0 = f.shift_down_p(mu);
    // Weierstrass degree: least index with a unit coefficient.
    let d = f0
        .coeffs
        .iter()
        .position(|&c| ctx.valuation_of(c) == 0)
        .expect("f/p^mu has a unit coefficient");
    if d == 0 {
        return Ok(WeierstrassForm {
            mu_exponent: mu,
            distinguished: LambdaElt::one(ctx),
            unit: f0,
        });
    }
    let big_d = f0.coeffs.len() - 1;
    // Residual factorization mod p: f0 = T^d * w with w a unit series.
    let w: Vec<u64> = f0.coeffs[d..].iter().map(|&c| c % ctx.p()).collect();
    // P = T^d + (lower, all divisible by p); U = unit polynomial, deg <= D-d.
    let mut p_lift = LambdaElt::monomial(ctx, 1, d);
    let mut u_lift = LambdaElt::from_coeffs(ctx, &w);
    let w_inv = series_inverse_mod_p(ctx, &w, d);
    let w_inv_poly = LambdaElt::from_coeffs(ctx, &w_inv);
    for step in 1..ctx.precision() {
        let prod = &p_lift * &u_lift;
        let err = &f0 - &prod;
        if err.is_zero() {
            break;
        }
        let pe = ctx.p_pow(step);
        debug_assert!(
            err.min_coeff_valuation() >= step,
            "Hensel step {step} lost exactness"
        );
        let e_red: Vec<u64> = err.coeffs.iter().map(|&c| c / pe % ctx.p()).collect();
        let e_poly = LambdaElt::from_coeffs(ctx, &e_red);
        // Solve T^d * dU + w * dP = e mod p with deg dP < d:
        // dP = e * w^(-1) truncated below T^d, dU = (e - w dP) / T^d.
        let dp_full = &e_poly * &w_inv_poly;
        let dp_coeffs: Vec<u64> = (0..d).map(|i| dp_full.coeff(i) % ctx.p()).collect();
        let dp = LambdaElt::from_coeffs(ctx, &dp_coeffs);
        let w_poly = LambdaElt::from_coeffs(ctx, &w);
        let num = &e_poly - &(&w_poly * &dp);
        let du_coeffs: Vec<u64> = (d..num.coeffs.len().max(d))
            .map(|i| num.coeff(i) % ctx.p())
            .collect();
        let du = LambdaElt::from_coeffs(ctx, &du_coeffs);
        p_lift = &p_lift + &dp.scale(pe);
        u_lift = &u_lift + &du.scale(pe);
    }
    debug_assert!(p_lift.is_distinguished());
    debug_assert_eq!(p_lift.degree(), Some(d));
    debug_assert!(u_lift.coeffs.len() <= big_d - d + 1);
    debug_assert_eq!(&(&p_lift * &u_lift), &f0, "preparation does not reconstruct");
    Ok(WeierstrassForm {
        mu_exponent: mu,
        distinguished: p_lift,
        unit: u_lift,
    })
}

/// Whether f lies in the ideal (h, p^B): the division remainder of f by h
/// must vanish mod p^B. h needs a unit leading coefficient.
pub fn membership_in(f: &LambdaElt, h: &LambdaElt, bound: u32) -> Result<bool, LambdaError> {
    let (_, r) = f.divide(h)?;
    Ok(r.min_coeff_valuation() >= bound)
}

/// Least m >= 1 with ν_(m,0) ∈ (h, p^B), scanning while p^m stays under
/// the degree cap.
pub fn min_level_for_membership(
    ctx: PrimeContext,
    h: &LambdaElt,
    bound: u32,
    degree_cap: u64,
) -> Result<u32, LambdaError> {
    let mut m = 1u32;
    loop {
        match nu(ctx, m, 0, degree_cap) {
            Ok(nu_m) => {
                if membership_in(&nu_m, h, bound)? {
                    return Ok(m);
                }
                m += 1;
            }
            Err(LambdaError::LevelTooLarge { .. }) => {
                return Err(LambdaError::NotFoundWithinCap { cap: degree_cap })
            }
            Err(e) => return Err(e),
        }
    }
}

/// Witness for the doubled-level congruence: at level M the division of
/// ν_(2M,0) by f·ω_M leaves a remainder that vanishes mod p^B, with Q the
/// quotient.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NmmWitness {
    pub level: u32,
    pub quotient: LambdaElt,
    pub remainder: LambdaElt,
}

/// Finds the least M >= 1 with ν_(2M,0) ≡ Q·f·ω_M mod p^B, scanning while
/// p^(2M) stays under the degree cap. The returned witness is re-verified
/// by reconstruction before it is handed back.
pub fn nmm_congruence_search(
    ctx: PrimeContext,
    f: &LambdaElt,
    bound: u32,
    degree_cap: u64,
) -> Result<NmmWitness, LambdaError> {
    if f.is_zero() {
        return Err(LambdaError::ZeroAtPrecision);
    }
    if ctx.valuation_of(f.leading_coeff()) > 0 {
        return Err(LambdaError::NotMonic(f.leading_coeff()));
    }
    let mut m = 1u32;
    loop {
        let nu_2m = match nu(ctx, 2 * m, 0, degree_cap) {
            Ok(v) => v,
            Err(LambdaError::LevelTooLarge { .. }) => {
                return Err(LambdaError::NotFoundWithinCap { cap: degree_cap })
            }
            Err(e) => return Err(e),
        };
        let omega_m = omega(ctx, m, degree_cap)?;
        let divisor = f * &omega_m;
        let (q, r) = nu_2m.divide(&divisor)?;
        if r.min_coeff_valuation() >= bound {
            let rebuilt = &(&q * &divisor) + &r;
            assert_eq!(rebuilt, nu_2m, "congruence witness fails reconstruction");
            return Ok(NmmWitness {
                level: m,
                quotient: q,
                remainder: r,
            });
        }
        m += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(p: u64, k: u32) -> PrimeContext {
        PrimeContext::new(p, k).unwrap()
    }

    fn cap(ctx: PrimeContext) -> u64 {
        ctx.p().pow(8)
    }

    #[test]
    fn omega_small_levels() {
        let c = ctx(3, 5);
        assert_eq!(omega(c, 0, cap(c)).unwrap(), LambdaElt::t(c));
        let w1 = omega(c, 1, cap(c)).unwrap();
        assert_eq!(w1, LambdaElt::from_coeffs(c, &[0, 3, 3, 1]));
    }

    #[test]
    fn omega_respects_cap() {
        let c = ctx(3, 5);
        let err = omega(c, 3, 9).unwrap_err();
        assert_eq!(
            err,
            LambdaError::LevelTooLarge {
                level: 3,
                needed: 27,
                cap: 9
            }
        );
    }

    #[test]
    fn nu_one_zero() {
        let c = ctx(3, 5);
        let v = nu(c, 1, 0, cap(c)).unwrap();
        assert_eq!(v, LambdaElt::from_coeffs(c, &[3, 3, 1]));
    }

    #[test]
    fn nu_value_at_zero_is_p_power() {
        let c = ctx(3, 6);
        for (n, m) in [(1u32, 0u32), (2, 0), (2, 1), (3, 1)] {
            let v = nu(c, n, m, cap(c)).unwrap();
            assert_eq!(v.constant_term(), c.p().pow(n - m), "nu({n},{m})(0)");
        }
    }

    #[test]
    fn divide_example() {
        let c = ctx(3, 5);
        let f = nu(c, 1, 0, cap(c)).unwrap();
        let g = LambdaElt::t(c);
        let (q, r) = f.divide(&g).unwrap();
        assert_eq!(q, LambdaElt::from_coeffs(c, &[3, 1]));
        assert_eq!(r, LambdaElt::constant(c, 3));
    }

    #[test]
    fn divide_rejects_nonunit_lead() {
        let c = ctx(3, 4);
        let f = LambdaElt::from_coeffs(c, &[1, 1]);
        let g = LambdaElt::from_coeffs(c, &[1, 3]);
        assert_eq!(f.divide(&g).unwrap_err(), LambdaError::NotMonic(3));
    }

    #[test]
    fn divide_by_nonmonic_unit_lead() {
        let c = ctx(5, 4);
        let f = LambdaElt::from_coeffs(c, &[7, 3, 2, 9]);
        let g = LambdaElt::from_coeffs(c, &[1, 4, 2]);
        let (q, r) = f.divide(&g).unwrap();
        assert_eq!(&(&q * &g) + &r, f);
        assert!(r.degree().is_none_or(|d| d < 2));
    }

    #[test]
    fn weierstrass_trivial_cases() {
        let c = ctx(3, 5);
        // p(T + p): mu = 1, already distinguished.
        let f = LambdaElt::from_coeffs(c, &[9, 3]);
        let w = f.weierstrass_prepare().unwrap();
        assert_eq!(w.mu_exponent, 1);
        assert_eq!(w.distinguished, LambdaElt::from_coeffs(c, &[3, 1]));
        assert_eq!(w.unit, LambdaElt::one(c));
        // T^2 + p: distinguished as is.
        let f = LambdaElt::from_coeffs(c, &[3, 0, 1]);
        let w = f.weierstrass_prepare().unwrap();
        assert_eq!(w.mu_exponent, 0);
        assert_eq!(w.distinguished, f);
        assert_eq!(w.unit, LambdaElt::one(c));
        // 2 + T: a unit, distinguished part 1.
        let f = LambdaElt::from_coeffs(c, &[2, 1]);
        let w = f.weierstrass_prepare().unwrap();
        assert_eq!(w.mu_exponent, 0);
        assert_eq!(w.distinguished, LambdaElt::one(c));
        assert_eq!(w.unit, f);
    }

    #[test]
    fn weierstrass_rejects_zero() {
        let c = ctx(3, 4);
        assert_eq!(
            LambdaElt::zero(c).weierstrass_prepare().unwrap_err(),
            LambdaError::ZeroAtPrecision
        );
    }

    #[test]
    fn membership_example() {
        let c = ctx(3, 8);
        // T^2 - p is distinguished; nu(m,0) mod (T, p^B) leaves p^m.
        let h = LambdaElt::t(c);
        assert_eq!(min_level_for_membership(c, &h, 4, cap(c)).unwrap(), 4);
        assert_eq!(min_level_for_membership(c, &h, 1, cap(c)).unwrap(), 1);
    }

    #[test]
    fn membership_cap_exhaustion() {
        let c = ctx(3, 8);
        let h = LambdaElt::t(c);
        let err = min_level_for_membership(c, &h, 8, 27).unwrap_err();
        assert_eq!(err, LambdaError::NotFoundWithinCap { cap: 27 });
    }

    #[test]
    fn distinguished_predicate() {
        let c = ctx(3, 4);
        assert!(LambdaElt::from_coeffs(c, &[3, 6, 1]).is_distinguished());
        assert!(LambdaElt::one(c).is_distinguished());
        assert!(!LambdaElt::from_coeffs(c, &[1, 1]).is_distinguished());
        assert!(!LambdaElt::from_coeffs(c, &[3, 2]).is_distinguished());
        assert!(!LambdaElt::zero(c).is_distinguished());
    }

    #[test]
    fn eval_matches_direct_sum() {
        let c = ctx(5, 4);
        let f = LambdaElt::from_coeffs(c, &[7, 0, 3, 1]);
        let x = PAdicInt::new(c, 12);
        let direct = PAdicInt::new(c, 7)
            + PAdicInt::new(c, 3) * x.pow(2)
            + x.pow(3);
        assert_eq!(f.eval(x), direct);
    }
}
