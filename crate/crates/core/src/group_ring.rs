//! The group ring Z_p[G] of a cyclic group of order p at working
//! precision, presented as Z/p^K[s]/((1+s)^p - 1) with s = σ - 1 for a
//! chosen generator σ.
//!
//! The star of the module is the algebraic norm 𝒩 = 1 + σ + ... + σ^(p-1),
//! whose expansion in s satisfies the exact identities
//! 𝒩 = p·u(s) + s^(p-1) with u a unit, and 𝒩 = p + s·f(s).

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::padic::PrimeContext;

/// An element of Z/p^K[s]/((1+s)^p - 1), stored on the basis
/// 1, s, ..., s^(p-1).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GroupRingElt {
    ctx: PrimeContext,
    coeffs: Vec<u64>,
}

impl GroupRingElt {
    pub fn zero(ctx: PrimeContext) -> Self {
        GroupRingElt {
            ctx,
            coeffs: vec![0; ctx.p() as usize],
        }
    }

    pub fn one(ctx: PrimeContext) -> Self {
        let mut e = GroupRingElt::zero(ctx);
        e.coeffs[0] = 1;
        e
    }

    /// s = σ - 1.
    pub fn s(ctx: PrimeContext) -> Self {
        let mut e = GroupRingElt::zero(ctx);
        e.coeffs[1] = 1;
        e
    }

    /// σ = 1 + s, the chosen generator.
    pub fn sigma(ctx: PrimeContext) -> Self {
        let mut e = GroupRingElt::zero(ctx);
        e.coeffs[0] = 1;
        e.coeffs[1] = 1;
        e
    }

    /// Coefficients on the basis 1, s, ..., s^(p-1); extra entries reduce
    /// through the relation (1+s)^p = 1.
    pub fn from_coeffs(ctx: PrimeContext, coeffs: &[u64]) -> Self {
        let p = ctx.p() as usize;
        let mut acc = vec![0u64; coeffs.len().max(p)];
        for (i, &c) in coeffs.iter().enumerate() {
            acc[i] = ctx.reduce_u64(c);
        }
        reduce_in_place(ctx, &mut acc);
        acc.truncate(p);
        GroupRingElt { ctx, coeffs: acc }
    }

    pub fn context(&self) -> PrimeContext {
        self.ctx
    }

    /// Coefficient of s^i.
    pub fn coeff(&self, i: usize) -> u64 {
        self.coeffs.get(i).copied().unwrap_or(0)
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    /// Exact division of every coefficient by p.
    pub fn shift_down_p(&self) -> GroupRingElt {
        let p = self.ctx.p();
        let coeffs: Vec<u64> = self
            .coeffs
            .iter()
            .map(|&c| {
                assert_eq!(c % p, 0, "coefficient {c} not divisible by p");
                c / p
            })
            .collect();
        GroupRingElt {
            ctx: self.ctx,
            coeffs,
        }
    }
}

/// Reduces coefficients of s^p and beyond through
/// s^p = -sum_(k=1..p-1) C(p,k) s^k.
fn reduce_in_place(ctx: PrimeContext, acc: &mut Vec<u64>) {
    let p = ctx.p() as usize;
    let binoms = binomial_row(ctx, ctx.p());
    for i in (p..acc.len()).rev() {
        let c = acc[i];
        if c == 0 {
            continue;
        }
        acc[i] = 0;
        // s^i = s^(i-p) * s^p.
        for k in 1..p {
            let sub = ctx.mul_raw(c, binoms[k]);
            acc[i - p + k] = ctx.sub_raw(acc[i - p + k], sub);
        }
    }
    while acc.len() > p {
        debug_assert_eq!(*acc.last().unwrap(), 0);
        acc.pop();
    }
}

/// Row n of Pascal's triangle mod p^K: entries C(n,0) .. C(n,n).
fn binomial_row(ctx: PrimeContext, n: u64) -> Vec<u64> {
    let mut row = vec![1u64];
    for _ in 0..n {
        let mut next = vec![1u64; row.len() + 1];
        for i in 1..row.len() {
            next[i] = ctx.add_raw(row[i - 1], row[i]);
        }
        row = next;
    }
    row
}

fn check_same_ctx(a: &GroupRingElt, b: &GroupRingElt) {
    assert_eq!(a.ctx, b.ctx, "mixed prime contexts in group ring");
}

impl Add for &GroupRingElt {
    type Output = GroupRingElt;
    fn add(self, rhs: &GroupRingElt) -> GroupRingElt {
        check_same_ctx(self, rhs);
        let coeffs: Vec<u64> = self
            .coeffs
            .iter()
            .zip(&rhs.coeffs)
            .map(|(&a, &b)| self.ctx.add_raw(a, b))
            .collect();
        GroupRingElt {
            ctx: self.ctx,
            coeffs,
        }
    }
}

impl Sub for &GroupRingElt {
    type Output = GroupRingElt;
    fn sub(self, rhs: &GroupRingElt) -> GroupRingElt {
        check_same_ctx(self, rhs);
        let coeffs: Vec<u64> = self
            .coeffs
            .iter()
            .zip(&rhs.coeffs)
            .map(|(&a, &b)| self.ctx.sub_raw(a, b))
            .collect();
        GroupRingElt {
            ctx: self.ctx,
            coeffs,
        }
    }
}

impl Neg for &GroupRingElt {
    type Output = GroupRingElt;
    fn neg(self) -> GroupRingElt {
        let coeffs: Vec<u64> = self.coeffs.iter().map(|&c| self.ctx.neg_raw(c)).collect();
        GroupRingElt {
            ctx: self.ctx,
            coeffs,
        }
    }
}

impl Mul for &GroupRingElt {
    type Output = GroupRingElt;
    fn mul(self, rhs: &GroupRingElt) -> GroupRingElt {
        check_same_ctx(self, rhs);
        let ctx = self.ctx;
        let p = ctx.p() as usize;
        let mut acc = vec![0u64; 2 * p - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                let prod = ctx.mul_raw(a, b);
                acc[i + j] = ctx.add_raw(acc[i + j], prod);
            }
        }
        reduce_in_place(ctx, &mut acc);
        acc.truncate(p);
        GroupRingElt { ctx, coeffs: acc }
    }
}

impl fmt::Debug for GroupRingElt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c == 0 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match i {
                0 => write!(f, "{c}")?,
                1 if c == 1 => write!(f, "s")?,
                1 => write!(f, "{c}*s")?,
                _ if c == 1 => write!(f, "s^{i}")?,
                _ => write!(f, "{c}*s^{i}")?,
            }
        }
        Ok(())
    }
}

/// The algebraic norm 𝒩 = 1 + σ + σ^2 + ... + σ^(p-1), expanded on the
/// s-basis by repeated multiplication.
pub fn algebraic_norm(ctx: PrimeContext) -> GroupRingElt {
    let sigma = GroupRingElt::sigma(ctx);
    let mut acc = GroupRingElt::one(ctx);
    let mut pow = GroupRingElt::one(ctx);
    for _ in 1..ctx.p() {
        pow = &pow * &sigma;
        acc = &acc + &pow;
    }
    acc
}

/// The two exact shapes of the algebraic norm:
/// 𝒩 = p·u(s) + s^(p-1) with u(0) = 1, and 𝒩 = p + s·f(s).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormDecomposition {
    pub norm: GroupRingElt,
    /// u, with 𝒩 = p·u + s^(p-1).
    pub unit_part: GroupRingElt,
    /// f, with 𝒩 = p + s·f.
    pub tail_part: GroupRingElt,
}

/// Splits 𝒩 both ways and checks each reconstruction exactly.
pub fn norm_decomposition(ctx: PrimeContext) -> NormDecomposition {
    let p = ctx.p() as usize;
    let norm = algebraic_norm(ctx);
    // u = (N - s^(p-1)) / p.
    let mut top = GroupRingElt::zero(ctx);
    top.coeffs[p - 1] = 1;
    let unit_part = (&norm - &top).shift_down_p();
    assert_eq!(unit_part.coeff(0), 1, "norm unit part must have u(0) = 1");
    // f from N - p = s * f.
    let mut f = GroupRingElt::zero(ctx);
    for i in 1..p {
        f.coeffs[i - 1] = norm.coeff(i);
    }
    let tail_part = f;
    // Reconstructions.
    let p_scalar = GroupRingElt::from_coeffs(ctx, &[ctx.p()]);
    let rebuilt_a = &(&p_scalar * &unit_part) + &top;
    assert_eq!(rebuilt_a, norm);
    let s = GroupRingElt::s(ctx);
    let rebuilt_b = &(&s * &tail_part) + &p_scalar;
    assert_eq!(rebuilt_b, norm);
    NormDecomposition {
        norm,
        unit_part,
        tail_part,
    }
}
