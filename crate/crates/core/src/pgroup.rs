//! Finite abelian p-groups in invariant-factor form, homomorphisms between
//! them, Smith normal form over Z/p^K, subgroup and quotient presentations,
//! and the norm/lift transition checker.
//!
//! A group is stored as a nonincreasing exponent sequence a_1 >= ... >=
//! a_r >= 1, meaning the direct sum of the cyclic groups Z/p^{a_i}. Elements
//! carry one residue per factor. Every exponent must stay strictly below the
//! context precision K so that relation arithmetic over Z/p^K (in particular
//! the faithful diagonal relations p^{a_i}) remains exact.

use crate::padic::{PadicError, PrimeContext};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Add, Neg, Sub};
use thiserror::Error;

/// Errors from group construction and structural computations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PGroupError {
    /// Exponent sequence is not nonincreasing, or an exponent is outside 1..K.
    #[error("invalid invariant factors {factors:?} for precision {precision}")]
    InvalidFactors { factors: Vec<u32>, precision: u32 },
    /// A diagonal entry of the reduced relation matrix has valuation >= K, so
    /// the true quotient may be infinite or larger than representable.
    #[error("quotient coordinate {index} is undetermined at working precision")]
    PrecisionExhausted { index: usize },
    /// A matrix or generator set has the wrong dimensions.
    #[error("shape {rows}x{cols} does not match expected {expected_rows}x{expected_cols}")]
    ShapeMismatch {
        rows: usize,
        cols: usize,
        expected_rows: usize,
        expected_cols: usize,
    },
    /// An element was given the wrong number of coordinates.
    #[error("expected {expected} coordinates, got {found}")]
    CoordinateCount { expected: usize, found: usize },
    /// Column j of a homomorphism matrix is not killed by the order of
    /// domain generator j.
    #[error("column {column} does not define a homomorphism")]
    NotWellDefined { column: usize },
    /// Operands belong to different groups or contexts.
    #[error("operands belong to different groups or contexts")]
    GroupMismatch,
    /// A required element lies outside the span of the given generators.
    #[error("element is not in the span of the given generators")]
    NotInSpan,
    /// Underlying residue arithmetic failed.
    #[error(transparent)]
    Padic(#[from] PadicError),
}

/// A finite abelian p-group in invariant-factor form.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinitePGroup {
    ctx: PrimeContext,
    factors: Vec<u32>,
}

impl FinitePGroup {
    /// Builds the group with the given nonincreasing exponent sequence.
    pub fn new(ctx: PrimeContext, factors: Vec<u32>) -> Result<Self, PGroupError> {
        let ordered = factors.windows(2).all(|w| w[0] >= w[1]);
        let in_range = factors.iter().all(|&a| a >= 1 && a < ctx.precision());
        if !ordered || !in_range {
            return Err(PGroupError::InvalidFactors {
                factors,
                precision: ctx.precision(),
            });
        }
        Ok(FinitePGroup { ctx, factors })
    }

    /// The trivial group.
    pub fn trivial(ctx: PrimeContext) -> Self {
        FinitePGroup {
            ctx,
            factors: Vec::new(),
        }
    }

    /// The cyclic group Z/p^exponent.
    pub fn cyclic(ctx: PrimeContext, exponent: u32) -> Result<Self, PGroupError> {
        FinitePGroup::new(ctx, vec![exponent])
    }

    /// Direct sum, with the merged exponents re-sorted nonincreasing.
    pub fn direct_sum(&self, other: &FinitePGroup) -> Result<Self, PGroupError> {
        if self.ctx != other.ctx {
            return Err(PGroupError::GroupMismatch);
        }
        let mut factors = self.factors.clone();
        factors.extend_from_slice(&other.factors);
        factors.sort_unstable_by(|a, b| b.cmp(a));
        FinitePGroup::new(self.ctx, factors)
    }

    /// The residue context.
    pub fn ctx(&self) -> PrimeContext {
        self.ctx
    }

    /// The invariant-factor exponents, nonincreasing.
    pub fn factors(&self) -> &[u32] {
        &self.factors
    }

    /// Number of cyclic factors.
    pub fn p_rank(&self) -> usize {
        self.factors.len()
    }

    /// log_p of the group order.
    pub fn order_exponent(&self) -> u64 {
        self.factors.iter().map(|&a| a as u64).sum()
    }

    /// Exponent of the largest cyclic factor (0 for the trivial group).
    pub fn exponent_exp(&self) -> u32 {
        self.factors.first().copied().unwrap_or(0)
    }

    /// Exponent of the smallest cyclic factor (0 for the trivial group).
    pub fn subexponent_exp(&self) -> u32 {
        self.factors.last().copied().unwrap_or(0)
    }

    /// (p-rank, exponent, subexponent, log_p order), with the convention
    /// (0, 1, 1, 0) for the trivial group.
    pub fn group_invariants(&self) -> (usize, u64, u64, u64) {
        (
            self.p_rank(),
            self.ctx.p_pow(self.exponent_exp()),
            self.ctx.p_pow(self.subexponent_exp()),
            self.order_exponent(),
        )
    }

    /// p^{a_i}, the modulus of coordinate i.
    pub fn factor_modulus(&self, i: usize) -> u64 {
        self.ctx.p_pow(self.factors[i])
    }

    /// The zero element.
    pub fn zero(&self) -> GroupElement {
        GroupElement {
            group: self.clone(),
            coords: vec![0; self.factors.len()],
        }
    }

    /// The i-th standard generator.
    pub fn generator(&self, i: usize) -> GroupElement {
        let mut coords = vec![0; self.factors.len()];
        coords[i] = 1;
        GroupElement {
            group: self.clone(),
            coords,
        }
    }

    /// Builds an element from coordinates, reducing each mod p^{a_i}.
    pub fn element(&self, coords: Vec<u64>) -> Result<GroupElement, PGroupError> {
        if coords.len() != self.factors.len() {
            return Err(PGroupError::CoordinateCount {
                expected: self.factors.len(),
                found: coords.len(),
            });
        }
        let coords = coords
            .iter()
            .enumerate()
            .map(|(i, &c)| c % self.factor_modulus(i))
            .collect();
        Ok(GroupElement {
            group: self.clone(),
            coords,
        })
    }

    /// The group order if it does not exceed `cap`.
    pub fn size_capped(&self, cap: u64) -> Option<u64> {
        let mut size: u64 = 1;
        for _ in 0..self.order_exponent() {
            size = size.checked_mul(self.ctx.p())?;
            if size > cap {
                return None;
            }
        }
        Some(size)
    }

    /// Iterates over all elements in mixed-radix order.
    pub fn elements(&self) -> Elements {
        Elements {
            group: self.clone(),
            moduli: (0..self.factors.len())
                .map(|i| self.factor_modulus(i))
                .collect(),
            next: Some(vec![0; self.factors.len()]),
        }
    }

    /// Samples a uniformly random element.
    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> GroupElement {
        let coords = (0..self.factors.len())
            .map(|i| rng.gen_range(0..self.factor_modulus(i)))
            .collect();
        GroupElement {
            group: self.clone(),
            coords,
        }
    }
}

impl fmt::Display for FinitePGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .factors
            .iter()
            .map(|&a| {
                if a == 1 {
                    format!("Z/{}", self.ctx.p())
                } else {
                    format!("Z/{}^{}", self.ctx.p(), a)
                }
            })
            .collect();
        write!(f, "{}", parts.join(" x "))
    }
}

impl fmt::Debug for FinitePGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {}^{})", self, self.ctx.p(), self.ctx.precision())
    }
}

/// Iterator over all elements of a finite p-group.
pub struct Elements {
    group: FinitePGroup,
    moduli: Vec<u64>,
    next: Option<Vec<u64>>,
}

impl Iterator for Elements {
    type Item = GroupElement;

    fn next(&mut self) -> Option<GroupElement> {
        let current = self.next.take()?;
        let mut incremented = current.clone();
        let mut carried = true;
        for (c, &m) in incremented.iter_mut().zip(&self.moduli) {
            if *c + 1 < m {
                *c += 1;
                carried = false;
                break;
            }
            *c = 0;
        }
        if !carried {
            self.next = Some(incremented);
        }
        Some(GroupElement {
            group: self.group.clone(),
            coords: current,
        })
    }
}

/// An element of a finite abelian p-group, one residue per factor.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupElement {
    group: FinitePGroup,
    coords: Vec<u64>,
}

impl GroupElement {
    /// The group this element belongs to.
    pub fn group(&self) -> &FinitePGroup {
        &self.group
    }

    /// The coordinates, coordinate i reduced mod p^{a_i}.
    pub fn coords(&self) -> &[u64] {
        &self.coords
    }

    /// Whether all coordinates vanish.
    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&c| c == 0)
    }

    /// Multiplies by an integer scalar.
    pub fn scale(&self, k: u64) -> GroupElement {
        let coords = self
            .coords
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let m = self.group.factor_modulus(i) as u128;
                ((k as u128 * c as u128) % m) as u64
            })
            .collect();
        GroupElement {
            group: self.group.clone(),
            coords,
        }
    }

    /// k with ord(x) = p^k.
    pub fn order_exponent(&self) -> u32 {
        self.group
            .factors
            .iter()
            .zip(&self.coords)
            .map(|(&a, &c)| a - self.group.ctx.valuation_of(c).min(a))
            .max()
            .unwrap_or(0)
    }

    /// The order of the element as a p-power.
    pub fn element_order(&self) -> u64 {
        self.group.ctx.p_pow(self.order_exponent())
    }
}

fn coordwise<F>(lhs: &GroupElement, rhs: &GroupElement, op: F) -> GroupElement
where
    F: Fn(u128, u128, u128) -> u128,
{
    assert_eq!(lhs.group, rhs.group, "group element operands must match");
    let coords = lhs
        .coords
        .iter()
        .zip(&rhs.coords)
        .enumerate()
        .map(|(i, (&a, &b))| {
            let m = lhs.group.factor_modulus(i) as u128;
            op(a as u128, b as u128, m) as u64
        })
        .collect();
    GroupElement {
        group: lhs.group.clone(),
        coords,
    }
}

impl Add for &GroupElement {
    type Output = GroupElement;

    fn add(self, rhs: &GroupElement) -> GroupElement {
        coordwise(self, rhs, |a, b, m| (a + b) % m)
    }
}

impl Sub for &GroupElement {
    type Output = GroupElement;

    fn sub(self, rhs: &GroupElement) -> GroupElement {
        coordwise(self, rhs, |a, b, m| (a + m - b) % m)
    }
}

impl Neg for &GroupElement {
    type Output = GroupElement;

    fn neg(self) -> GroupElement {
        let zero = self.group.zero();
        &zero - self
    }
}

/// A dense matrix of residues mod p^K used for relation and map bookkeeping.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResidueMatrix {
    ctx: PrimeContext,
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

impl ResidueMatrix {
    /// A zero matrix of the given shape.
    pub fn new(ctx: PrimeContext, rows: usize, cols: usize) -> Self {
        ResidueMatrix {
            ctx,
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    /// The identity matrix of size n.
    pub fn identity(ctx: PrimeContext, n: usize) -> Self {
        let mut m = ResidueMatrix::new(ctx, n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    /// Builds a matrix from equal-length rows.
    pub fn from_rows(ctx: PrimeContext, rows: &[Vec<u64>]) -> Result<Self, PGroupError> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut m = ResidueMatrix::new(ctx, nrows, ncols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != ncols {
                return Err(PGroupError::ShapeMismatch {
                    rows: 1,
                    cols: row.len(),
                    expected_rows: 1,
                    expected_cols: ncols,
                });
            }
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        Ok(m)
    }

    /// Builds a matrix from equal-length columns over `rows` coordinates.
    pub fn from_columns(
        ctx: PrimeContext,
        rows: usize,
        columns: &[Vec<u64>],
    ) -> Result<Self, PGroupError> {
        let mut m = ResidueMatrix::new(ctx, rows, columns.len());
        for (j, col) in columns.iter().enumerate() {
            if col.len() != rows {
                return Err(PGroupError::ShapeMismatch {
                    rows: col.len(),
                    cols: 1,
                    expected_rows: rows,
                    expected_cols: 1,
                });
            }
            for (i, &v) in col.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        Ok(m)
    }

    /// The residue context.
    pub fn ctx(&self) -> PrimeContext {
        self.ctx
    }

    /// Number of rows.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of columns.
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// The entry at (row, col).
    pub fn at(&self, row: usize, col: usize) -> u64 {
        self.data[row * self.cols + col]
    }

    /// Sets the entry at (row, col), reduced mod p^K.
    pub fn set(&mut self, row: usize, col: usize, value: u64) {
        self.data[row * self.cols + col] = self.ctx.reduce_u64(value);
    }

    /// Matrix-vector product mod p^K.
    pub fn mul_vec(&self, v: &[u64]) -> Vec<u64> {
        assert_eq!(v.len(), self.cols, "vector length must match column count");
        let m = self.ctx.modulus() as u128;
        (0..self.rows)
            .map(|i| {
                let mut acc: u128 = 0;
                for (j, &vj) in v.iter().enumerate() {
                    acc = (acc + self.at(i, j) as u128 * vj as u128 % m) % m;
                }
                acc as u64
            })
            .collect()
    }

    #[cfg_attr(not(test), allow(dead_code))]
    pub(crate) fn mat_mul(&self, rhs: &ResidueMatrix) -> ResidueMatrix {
        assert_eq!(self.cols, rhs.rows, "inner dimensions must match");
        let m = self.ctx.modulus() as u128;
        let mut out = ResidueMatrix::new(self.ctx, self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..rhs.cols {
                let mut acc: u128 = 0;
                for j in 0..self.cols {
                    acc = (acc + self.at(i, j) as u128 * rhs.at(j, k) as u128 % m) % m;
                }
                out.set(i, k, acc as u64);
            }
        }
        out
    }

    pub(crate) fn augment_cols(&self, right: &ResidueMatrix) -> ResidueMatrix {
        assert_eq!(self.rows, right.rows, "row counts must match");
        let mut out = ResidueMatrix::new(self.ctx, self.rows, self.cols + right.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(i, j, self.at(i, j));
            }
            for j in 0..right.cols {
                out.set(i, self.cols + j, right.at(i, j));
            }
        }
        out
    }

    fn row_swap(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(i * self.cols + c, j * self.cols + c);
        }
    }

    fn col_swap(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for r in 0..self.rows {
            self.data.swap(r * self.cols + i, r * self.cols + j);
        }
    }

    fn row_scale(&mut self, i: usize, f: u64) {
        for c in 0..self.cols {
            let v = self.ctx.mul_raw(self.at(i, c), f);
            self.set(i, c, v);
        }
    }

    fn col_scale(&mut self, i: usize, f: u64) {
        for r in 0..self.rows {
            let v = self.ctx.mul_raw(self.at(r, i), f);
            self.set(r, i, v);
        }
    }

    /// row_dst += f * row_src
    fn row_axpy(&mut self, dst: usize, src: usize, f: u64) {
        debug_assert_ne!(dst, src);
        for c in 0..self.cols {
            let v = self
                .ctx
                .add_raw(self.at(dst, c), self.ctx.mul_raw(f, self.at(src, c)));
            self.set(dst, c, v);
        }
    }

    /// col_dst += f * col_src
    fn col_axpy(&mut self, dst: usize, src: usize, f: u64) {
        debug_assert_ne!(dst, src);
        for r in 0..self.rows {
            let v = self
                .ctx
                .add_raw(self.at(r, dst), self.ctx.mul_raw(f, self.at(r, src)));
            self.set(r, dst, v);
        }
    }
}

pub(crate) struct SmithDecomposition {
    /// Valuations of the pivot entries, nondecreasing.
    pub(crate) diag: Vec<u32>,
    pub(crate) u: ResidueMatrix,
    pub(crate) u_inv: ResidueMatrix,
    pub(crate) v: ResidueMatrix,
    #[cfg_attr(not(test), allow(dead_code))]
    pub(crate) v_inv: ResidueMatrix,
}

fn exact_div_pow(ctx: PrimeContext, value: u64, val: u32) -> u64 {
    let q = ctx.p_pow(val);
    debug_assert_eq!(value % q, 0, "division by p^{} must be exact", val);
    value / q
}

/// Diagonalizes `a` as U * a * V = diag(p^{d_0}, p^{d_1}, ...) over Z/p^K,
/// with the pivot valuations nondecreasing and all transforms invertible.
pub(crate) fn smith_decompose(a: &ResidueMatrix) -> SmithDecomposition {
    let ctx = a.ctx();
    let precision = ctx.precision();
    let mut work = a.clone();
    let mut u = ResidueMatrix::identity(ctx, a.rows());
    let mut u_inv = ResidueMatrix::identity(ctx, a.rows());
    let mut v = ResidueMatrix::identity(ctx, a.cols());
    let mut v_inv = ResidueMatrix::identity(ctx, a.cols());
    let mut diag = Vec::new();

    let steps = a.rows().min(a.cols());
    for t in 0..steps {
        let mut best: Option<(usize, usize, u32)> = None;
        for r in t..a.rows() {
            for c in t..a.cols() {
                let val = ctx.valuation_of(work.at(r, c));
                if val < precision && best.is_none_or(|(_, _, bv)| val < bv) {
                    best = Some((r, c, val));
                }
            }
        }
        let Some((pr, pc, pv)) = best else {
            break;
        };

        work.row_swap(t, pr);
        u.row_swap(t, pr);
        u_inv.col_swap(t, pr);
        work.col_swap(t, pc);
        v.col_swap(t, pc);
        v_inv.row_swap(t, pc);

        let unit = exact_div_pow(ctx, work.at(t, t), pv);
        let unit_inv = ctx.invert_raw(unit).expect("pivot cofactor is a unit");
        work.row_scale(t, unit_inv);
        u.row_scale(t, unit_inv);
        u_inv.col_scale(t, unit);
        debug_assert_eq!(work.at(t, t), ctx.p_pow(pv));

        for r in t + 1..a.rows() {
            let entry = work.at(r, t);
            if entry != 0 {
                let f = ctx.neg_raw(exact_div_pow(ctx, entry, pv));
                work.row_axpy(r, t, f);
                u.row_axpy(r, t, f);
                u_inv.col_axpy(t, r, ctx.neg_raw(f));
            }
        }
        for c in t + 1..a.cols() {
            let entry = work.at(t, c);
            if entry != 0 {
                let f = ctx.neg_raw(exact_div_pow(ctx, entry, pv));
                work.col_axpy(c, t, f);
                v.col_axpy(c, t, f);
                v_inv.row_axpy(t, c, ctx.neg_raw(f));
            }
        }
        diag.push(pv);
    }

    SmithDecomposition {
        diag,
        u,
        u_inv,
        v,
        v_inv,
    }
}

/// Invariant factors of (Z/p^K)^{ambient_rank} modulo the column span of
/// `relations`, via valuation-pivot diagonalization.
pub fn smith_normal_form(
    relations: &ResidueMatrix,
    ambient_rank: usize,
) -> Result<FinitePGroup, PGroupError> {
    Ok(quotient_presentation(relations, ambient_rank)?.group)
}

/// A quotient (Z/p^K)^m / (column span) together with the coordinate change
/// between ambient vectors and invariant-factor coordinates.
#[derive(Clone, Debug)]
pub struct QuotientPresentation {
    group: FinitePGroup,
    u: ResidueMatrix,
    u_inv: ResidueMatrix,
    /// (diagonal index, exponent) per kept factor, exponents nonincreasing.
    kept: Vec<(usize, u32)>,
}

/// Presents (Z/p^K)^{ambient_rank} modulo the column span of `relations`,
/// keeping the transforms needed to map vectors into the quotient and back.
pub fn quotient_presentation(
    relations: &ResidueMatrix,
    ambient_rank: usize,
) -> Result<QuotientPresentation, PGroupError> {
    if relations.rows() != ambient_rank {
        return Err(PGroupError::ShapeMismatch {
            rows: relations.rows(),
            cols: relations.cols(),
            expected_rows: ambient_rank,
            expected_cols: relations.cols(),
        });
    }
    let dec = smith_decompose(relations);
    if dec.diag.len() < ambient_rank {
        return Err(PGroupError::PrecisionExhausted {
            index: dec.diag.len(),
        });
    }
    let mut kept: Vec<(usize, u32)> = Vec::new();
    for (i, &d) in dec.diag.iter().enumerate().rev() {
        if d > 0 {
            kept.push((i, d));
        }
    }
    let factors: Vec<u32> = kept.iter().map(|&(_, d)| d).collect();
    let group = FinitePGroup::new(relations.ctx(), factors)?;
    Ok(QuotientPresentation {
        group,
        u: dec.u,
        u_inv: dec.u_inv,
        kept,
    })
}

impl QuotientPresentation {
    /// The quotient group in invariant-factor form.
    pub fn group(&self) -> &FinitePGroup {
        &self.group
    }

    /// Rank of the ambient free module.
    pub fn ambient_rank(&self) -> usize {
        self.u.rows()
    }

    /// Image of an ambient vector in the quotient.
    pub fn coords_of(&self, ambient: &[u64]) -> GroupElement {
        let y = self.u.mul_vec(ambient);
        let coords = self.kept.iter().map(|&(i, _)| y[i]).collect();
        self.group
            .element(coords)
            .expect("kept coordinates match the factor count")
    }

    /// A representative ambient vector for a quotient element.
    pub fn ambient_rep_of(&self, x: &GroupElement) -> Vec<u64> {
        assert_eq!(
            x.group(),
            &self.group,
            "element must belong to this quotient"
        );
        let mut y = vec![0u64; self.ambient_rank()];
        for (j, &(i, _)) in self.kept.iter().enumerate() {
            y[i] = x.coords()[j];
        }
        self.u_inv.mul_vec(&y)
    }
}

/// Generators (as ambient vectors over Z/p^K) of the kernel of the map
/// (Z/p^K)^c -> direct sum of Z/p^{e_i}, x -> (map * x mod p^{e_i}).
pub fn kernel_mod_moduli(
    map: &ResidueMatrix,
    row_exponents: &[u32],
) -> Result<Vec<Vec<u64>>, PGroupError> {
    if map.rows() != row_exponents.len() {
        return Err(PGroupError::ShapeMismatch {
            rows: map.rows(),
            cols: map.cols(),
            expected_rows: row_exponents.len(),
            expected_cols: map.cols(),
        });
    }
    let ctx = map.ctx();
    let r = map.rows();
    let c = map.cols();
    let mut diag = ResidueMatrix::new(ctx, r, r);
    for (i, &e) in row_exponents.iter().enumerate() {
        debug_assert!(e < ctx.precision(), "moduli must stay below precision");
        diag.set(i, i, ctx.p_pow(e));
    }
    let joint = map.augment_cols(&diag);
    let dec = smith_decompose(&joint);
    let mut gens = Vec::new();
    for (i, &d) in dec.diag.iter().enumerate() {
        let scale = ctx.p_pow(ctx.precision() - d);
        let gen: Vec<u64> = (0..c).map(|row| ctx.mul_raw(dec.v.at(row, i), scale)).collect();
        gens.push(gen);
    }
    for free in dec.diag.len()..c + r {
        let gen: Vec<u64> = (0..c).map(|row| dec.v.at(row, free)).collect();
        gens.push(gen);
    }
    Ok(gens)
}

fn generator_matrix(
    gens: &[GroupElement],
    ambient: &FinitePGroup,
) -> Result<ResidueMatrix, PGroupError> {
    for g in gens {
        if g.group() != ambient {
            return Err(PGroupError::GroupMismatch);
        }
    }
    let cols: Vec<Vec<u64>> = gens.iter().map(|g| g.coords().to_vec()).collect();
    ResidueMatrix::from_columns(ambient.ctx(), ambient.p_rank(), &cols)
}

/// Invariant factors of the subgroup generated by `gens` inside `ambient`.
pub fn subgroup_invariants(
    gens: &[GroupElement],
    ambient: &FinitePGroup,
) -> Result<FinitePGroup, PGroupError> {
    let a = generator_matrix(gens, ambient)?;
    let kernel = kernel_mod_moduli(&a, ambient.factors())?;
    let relations = ResidueMatrix::from_columns(ambient.ctx(), gens.len(), &kernel)?;
    smith_normal_form(&relations, gens.len())
}

/// Coefficients expressing `target` in terms of `gens`, or None if `target`
/// lies outside their span.
pub fn solve_in_subgroup(
    gens: &[GroupElement],
    target: &GroupElement,
) -> Result<Option<Vec<u64>>, PGroupError> {
    let ambient = target.group().clone();
    let a = generator_matrix(gens, &ambient)?;
    let ctx = ambient.ctx();
    let r = ambient.p_rank();
    let g = gens.len();
    if r == 0 {
        return Ok(Some(vec![0; g]));
    }
    let mut diag = ResidueMatrix::new(ctx, r, r);
    for i in 0..r {
        diag.set(i, i, ambient.factor_modulus(i));
    }
    let joint = a.augment_cols(&diag);
    let dec = smith_decompose(&joint);
    let s = dec.u.mul_vec(target.coords());
    let mut y = vec![0u64; g + r];
    for (i, &d) in dec.diag.iter().enumerate() {
        if ctx.valuation_of(s[i]) < d {
            return Ok(None);
        }
        y[i] = exact_div_pow(ctx, s[i], d);
    }
    for &si in s.iter().skip(dec.diag.len()) {
        if si != 0 {
            return Ok(None);
        }
    }
    let z = dec.v.mul_vec(&y);
    let coeffs: Vec<u64> = z[..g].to_vec();
    #[cfg(debug_assertions)]
    {
        let mut acc = ambient.zero();
        for (c, gen) in coeffs.iter().zip(gens) {
            acc = &acc + &gen.scale(*c);
        }
        debug_assert_eq!(&acc, target, "solver must reproduce the target");
    }
    Ok(Some(coeffs))
}

/// Invariant factors of H/N for H = <gens_h> and N = <gens_n> <= H, both
/// inside `ambient`.
pub fn quotient_of_subgroup(
    gens_h: &[GroupElement],
    gens_n: &[GroupElement],
    ambient: &FinitePGroup,
) -> Result<FinitePGroup, PGroupError> {
    let a = generator_matrix(gens_h, ambient)?;
    let mut relations = kernel_mod_moduli(&a, ambient.factors())?;
    for n in gens_n {
        let coeffs = solve_in_subgroup(gens_h, n)?.ok_or(PGroupError::NotInSpan)?;
        relations.push(coeffs);
    }
    let rel = ResidueMatrix::from_columns(ambient.ctx(), gens_h.len(), &relations)?;
    smith_normal_form(&rel, gens_h.len())
}

/// A homomorphism between finite abelian p-groups, stored as the matrix whose
/// column j is the image of domain generator j in codomain coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PGroupHom {
    domain: FinitePGroup,
    codomain: FinitePGroup,
    /// Row-major, rows = codomain rank, entry (i, j) reduced mod p^{b_i}.
    matrix: Vec<u64>,
}

impl PGroupHom {
    /// Builds a homomorphism from generator-image columns, checking that
    /// column j is killed by p^{a_j}.
    pub fn from_columns(
        domain: &FinitePGroup,
        codomain: &FinitePGroup,
        columns: &[Vec<u64>],
    ) -> Result<Self, PGroupError> {
        if domain.ctx() != codomain.ctx() {
            return Err(PGroupError::GroupMismatch);
        }
        if columns.len() != domain.p_rank() {
            return Err(PGroupError::ShapeMismatch {
                rows: codomain.p_rank(),
                cols: columns.len(),
                expected_rows: codomain.p_rank(),
                expected_cols: domain.p_rank(),
            });
        }
        let ctx = domain.ctx();
        let rows = codomain.p_rank();
        let cols = domain.p_rank();
        let mut matrix = vec![0u64; rows * cols];
        for (j, col) in columns.iter().enumerate() {
            if col.len() != rows {
                return Err(PGroupError::CoordinateCount {
                    expected: rows,
                    found: col.len(),
                });
            }
            let order = ctx.p_pow(domain.factors()[j]) as u128;
            for (i, &raw) in col.iter().enumerate() {
                let m = codomain.factor_modulus(i) as u128;
                let entry = (raw as u128 % m) as u64;
                if !(order * entry as u128).is_multiple_of(m) {
                    return Err(PGroupError::NotWellDefined { column: j });
                }
                matrix[i * cols + j] = entry;
            }
        }
        Ok(PGroupHom {
            domain: domain.clone(),
            codomain: codomain.clone(),
            matrix,
        })
    }

    /// Builds a homomorphism from the images of the domain generators.
    pub fn from_generator_images(
        domain: &FinitePGroup,
        images: &[GroupElement],
    ) -> Result<Self, PGroupError> {
        if images.is_empty() {
            return Err(PGroupError::CoordinateCount {
                expected: domain.p_rank().max(1),
                found: 0,
            });
        }
        let codomain = images[0].group().clone();
        for img in images {
            if img.group() != &codomain {
                return Err(PGroupError::GroupMismatch);
            }
        }
        let columns: Vec<Vec<u64>> = images.iter().map(|x| x.coords().to_vec()).collect();
        PGroupHom::from_columns(domain, &codomain, &columns)
    }

    /// The identity endomorphism.
    pub fn identity(g: &FinitePGroup) -> Self {
        PGroupHom::multiplication_by(g, 1)
    }

    /// The zero homomorphism.
    pub fn zero_map(domain: &FinitePGroup, codomain: &FinitePGroup) -> Self {
        PGroupHom {
            domain: domain.clone(),
            codomain: codomain.clone(),
            matrix: vec![0; codomain.p_rank() * domain.p_rank()],
        }
    }

    /// The multiplication-by-k endomorphism.
    pub fn multiplication_by(g: &FinitePGroup, k: u64) -> Self {
        let rank = g.p_rank();
        let mut matrix = vec![0u64; rank * rank];
        for i in 0..rank {
            matrix[i * rank + i] = k % g.factor_modulus(i);
        }
        PGroupHom {
            domain: g.clone(),
            codomain: g.clone(),
            matrix,
        }
    }

    /// The domain group.
    pub fn domain(&self) -> &FinitePGroup {
        &self.domain
    }

    /// The codomain group.
    pub fn codomain(&self) -> &FinitePGroup {
        &self.codomain
    }

    /// The matrix entry at (row, col).
    pub fn entry(&self, row: usize, col: usize) -> u64 {
        self.matrix[row * self.domain.p_rank() + col]
    }

    /// The image of domain generator j.
    pub fn generator_image(&self, j: usize) -> GroupElement {
        let coords = (0..self.codomain.p_rank())
            .map(|i| self.entry(i, j))
            .collect();
        self.codomain
            .element(coords)
            .expect("matrix rows match the codomain rank")
    }

    /// Applies the map to an element of the domain.
    pub fn apply(&self, x: &GroupElement) -> GroupElement {
        assert_eq!(
            x.group(),
            &self.domain,
            "argument must belong to the domain"
        );
        let coords = (0..self.codomain.p_rank())
            .map(|i| {
                let m = self.codomain.factor_modulus(i) as u128;
                let mut acc: u128 = 0;
                for (j, &c) in x.coords().iter().enumerate() {
                    acc = (acc + self.entry(i, j) as u128 * c as u128 % m) % m;
                }
                acc as u64
            })
            .collect();
        GroupElement {
            group: self.codomain.clone(),
            coords,
        }
    }

    /// self after inner: the composite map inner.domain -> self.codomain.
    pub fn compose(&self, inner: &PGroupHom) -> Result<PGroupHom, PGroupError> {
        if inner.codomain != self.domain {
            return Err(PGroupError::GroupMismatch);
        }
        let columns: Vec<Vec<u64>> = (0..inner.domain.p_rank())
            .map(|j| self.apply(&inner.generator_image(j)).coords().to_vec())
            .collect();
        PGroupHom::from_columns(&inner.domain, &self.codomain, &columns)
    }

    /// Invariant factors of the image subgroup.
    pub fn image_invariants(&self) -> Result<FinitePGroup, PGroupError> {
        let gens: Vec<GroupElement> = (0..self.domain.p_rank())
            .map(|j| self.generator_image(j))
            .collect();
        subgroup_invariants(&gens, &self.codomain)
    }

    /// Whether the image is the whole codomain.
    pub fn is_surjective(&self) -> Result<bool, PGroupError> {
        Ok(self.image_invariants()?.factors() == self.codomain.factors())
    }

    /// The inverse of a bijective endomorphism-like map.
    pub fn inverse(&self) -> Result<PGroupHom, PGroupError> {
        if self.domain.factors() != self.codomain.factors() {
            return Err(PGroupError::GroupMismatch);
        }
        let images: Vec<GroupElement> = (0..self.domain.p_rank())
            .map(|j| self.generator_image(j))
            .collect();
        let columns: Vec<Vec<u64>> = (0..self.codomain.p_rank())
            .map(|i| {
                solve_in_subgroup(&images, &self.codomain.generator(i))?
                    .ok_or(PGroupError::NotInSpan)
            })
            .collect::<Result<_, _>>()?;
        PGroupHom::from_columns(&self.codomain, &self.domain, &columns)
    }

    /// Generators of the kernel subgroup of the domain.
    pub fn kernel_generators(&self) -> Result<Vec<GroupElement>, PGroupError> {
        let ctx = self.domain.ctx();
        let rows = self.codomain.p_rank();
        let cols = self.domain.p_rank();
        let mut map = ResidueMatrix::new(ctx, rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                map.set(i, j, self.entry(i, j));
            }
        }
        let raw = kernel_mod_moduli(&map, self.codomain.factors())?;
        raw.into_iter().map(|v| self.domain.element(v)).collect()
    }
}

/// Samples a random automorphism of `g`, falling back to the identity if no
/// invertible matrix is found within a bounded number of draws.
pub fn random_automorphism<R: rand::Rng + ?Sized>(
    g: &FinitePGroup,
    rng: &mut R,
) -> Result<PGroupHom, PGroupError> {
    let ctx = g.ctx();
    for _ in 0..200 {
        let columns: Vec<Vec<u64>> = (0..g.p_rank())
            .map(|j| {
                let a_j = g.factors()[j];
                (0..g.p_rank())
                    .map(|i| {
                        let b_i = g.factors()[i];
                        if b_i > a_j {
                            ctx.p_pow(b_i - a_j) * rng.gen_range(0..ctx.p_pow(a_j))
                        } else {
                            rng.gen_range(0..ctx.p_pow(b_i))
                        }
                    })
                    .collect()
            })
            .collect();
        let candidate = PGroupHom::from_columns(g, g, &columns)?;
        if candidate.is_surjective()? {
            return Ok(candidate);
        }
    }
    Ok(PGroupHom::identity(g))
}

/// Controls the exhaustive/sampled element checks in the transition checker.
#[derive(Clone, Copy, Debug)]
pub struct TransitionCheckOptions {
    /// Largest group order checked by full enumeration.
    pub enumeration_cap: u64,
    /// Number of random elements drawn when enumeration is skipped.
    pub sample_count: u64,
    /// Seed for the sampling generator.
    pub seed: u64,
}

impl Default for TransitionCheckOptions {
    fn default() -> Self {
        TransitionCheckOptions {
            enumeration_cap: 100_000,
            sample_count: 10_000,
            seed: 0x5EED_1A5B,
        }
    }
}

/// Outcome of checking the norm/lift transition relations between two
/// consecutive levels A and B.
#[derive(Clone, Debug, Serialize)]
pub struct TransitionReport {
    /// N: B -> A is surjective.
    pub norm_surjective: bool,
    /// p-rank(A) = p-rank(B).
    pub equal_p_ranks: bool,
    /// log_p |B| = log_p |A| + p-rank(A).
    pub index_matches_rank: bool,
    /// N after iota is multiplication by p on A.
    pub norm_after_lift_is_mult_p: bool,
    /// All four hypotheses above.
    pub hypotheses_hold: bool,
    /// iota(A) is contained in pB (checked when the hypotheses hold).
    pub conclusion_a: Option<bool>,
    /// The subexponent of A exceeds p, enabling the stronger conclusions.
    pub subexponent_exceeds_p: bool,
    /// iota(A) = pB.
    pub lift_image_equals_p_b: Option<bool>,
    /// B[p] = Ker N.
    pub socle_equals_norm_kernel: Option<bool>,
    /// Ker N is contained in iota(A).
    pub norm_kernel_in_lift_image: Option<bool>,
    /// ord(x) = p * ord(iota(N x)) for every nonzero x in B.
    pub order_identity_holds: Option<bool>,
    /// All of the stronger conclusions above.
    pub conclusion_b: Option<bool>,
    /// The order identity was checked by full enumeration of B.
    pub order_check_exhaustive: bool,
    /// Number of samples drawn when enumeration was skipped.
    pub order_check_samples: u64,
}

/// Checks the hypotheses and conclusions of the norm/lift transition
/// relations for consecutive-level groups A and B.
pub fn check_transition_lemma(
    a: &FinitePGroup,
    b: &FinitePGroup,
    norm: &PGroupHom,
    iota: &PGroupHom,
    options: TransitionCheckOptions,
) -> Result<TransitionReport, PGroupError> {
    if norm.domain() != b || norm.codomain() != a || iota.domain() != a || iota.codomain() != b {
        return Err(PGroupError::GroupMismatch);
    }
    let ctx = a.ctx();
    let p = ctx.p();

    let norm_surjective = norm.is_surjective()?;
    let equal_p_ranks = a.p_rank() == b.p_rank();
    let index_matches_rank = b.order_exponent() == a.order_exponent() + a.p_rank() as u64;
    let norm_after_lift = norm.compose(iota)?;
    let norm_after_lift_is_mult_p = norm_after_lift == PGroupHom::multiplication_by(a, p);
    let hypotheses_hold =
        norm_surjective && equal_p_ranks && index_matches_rank && norm_after_lift_is_mult_p;
    let subexponent_exceeds_p = a.subexponent_exp() >= 2;

    let mut report = TransitionReport {
        norm_surjective,
        equal_p_ranks,
        index_matches_rank,
        norm_after_lift_is_mult_p,
        hypotheses_hold,
        conclusion_a: None,
        subexponent_exceeds_p,
        lift_image_equals_p_b: None,
        socle_equals_norm_kernel: None,
        norm_kernel_in_lift_image: None,
        order_identity_holds: None,
        conclusion_b: None,
        order_check_exhaustive: false,
        order_check_samples: 0,
    };
    if !hypotheses_hold {
        return Ok(report);
    }

    let conclusion_a = (0..b.p_rank())
        .all(|i| (0..a.p_rank()).all(|j| iota.entry(i, j).is_multiple_of(p)));
    report.conclusion_a = Some(conclusion_a);

    if !subexponent_exceeds_p {
        return Ok(report);
    }

    let iota_gens: Vec<GroupElement> = (0..a.p_rank()).map(|j| iota.generator_image(j)).collect();
    let p_b_gens: Vec<GroupElement> = (0..b.p_rank()).map(|i| b.generator(i).scale(p)).collect();
    let iota_image = subgroup_invariants(&iota_gens, b)?;
    let p_b = subgroup_invariants(&p_b_gens, b)?;
    let lift_image_equals_p_b = conclusion_a && iota_image.factors() == p_b.factors();
    report.lift_image_equals_p_b = Some(lift_image_equals_p_b);

    let kernel = norm.kernel_generators()?;
    let kernel_size = subgroup_invariants(&kernel, b)?.order_exponent();
    let socle_in_kernel = (0..b.p_rank()).all(|i| {
        let gen = b.generator(i).scale(ctx.p_pow(b.factors()[i] - 1));
        norm.apply(&gen).is_zero()
    });
    let socle_equals_norm_kernel = socle_in_kernel && kernel_size == b.p_rank() as u64;
    report.socle_equals_norm_kernel = Some(socle_equals_norm_kernel);

    let mut norm_kernel_in_lift_image = true;
    for gen in &kernel {
        if solve_in_subgroup(&iota_gens, gen)?.is_none() {
            norm_kernel_in_lift_image = false;
            break;
        }
    }
    report.norm_kernel_in_lift_image = Some(norm_kernel_in_lift_image);

    let order_identity = |x: &GroupElement| {
        let through = iota.apply(&norm.apply(x));
        x.order_exponent() == 1 + through.order_exponent()
    };
    let mut order_identity_holds = true;
    if b.size_capped(options.enumeration_cap).is_some() {
        report.order_check_exhaustive = true;
        for x in b.elements() {
            if !x.is_zero() && !order_identity(&x) {
                order_identity_holds = false;
                break;
            }
        }
    } else {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(options.seed);
        let mut drawn = 0;
        while drawn < options.sample_count {
            let x = b.sample(&mut rng);
            drawn += 1;
            if !x.is_zero() && !order_identity(&x) {
                order_identity_holds = false;
                break;
            }
        }
        report.order_check_samples = drawn;
    }
    report.order_identity_holds = Some(order_identity_holds);
    report.conclusion_b = Some(
        lift_image_equals_p_b
            && socle_equals_norm_kernel
            && norm_kernel_in_lift_image
            && order_identity_holds,
    );
    Ok(report)
}
