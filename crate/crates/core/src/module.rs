//! Finitely generated torsion modules over the power-series ring, given as
//! direct sums of cyclic factors plus optional finite glue, together with
//! their finite levels X/(omega_n X + nu_{n,0} Y), the connecting maps
//! between consecutive levels, and growth-invariant bookkeeping.

use crate::lambda::{self, LambdaElt, LambdaError};
use crate::padic::PrimeContext;
use crate::pgroup::{
    quotient_presentation, smith_decompose, solve_in_subgroup, subgroup_invariants,
    FinitePGroup, GroupElement, PGroupError, PGroupHom, QuotientPresentation, ResidueMatrix,
};
use std::ops::{Add, Neg, Sub};
use thiserror::Error;

/// Errors from module construction, level computation, and fitting.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModuleError {
    /// A torsion exponent must satisfy 1 <= e < precision.
    #[error("torsion exponent {exponent} at factor {index} must lie in 1..{max}")]
    InvalidExponent { index: usize, exponent: u32, max: u32 },
    /// Polynomial factors must be distinguished and nonconstant.
    #[error("polynomial factor {index} must be distinguished of positive degree")]
    NotDistinguished { index: usize },
    /// Polynomial factors carry a positive multiplicity.
    #[error("polynomial factor {index} must have multiplicity at least 1")]
    ZeroMultiplicity { index: usize },
    /// A supplied polynomial uses a different prime or precision.
    #[error("component {index} uses a different prime context")]
    ContextMismatch { index: usize },
    /// An element was given with the wrong number of components.
    #[error("expected {expected_mu}+{expected_lambda} components, found {found_mu}+{found_lambda}")]
    ComponentCount {
        expected_mu: usize,
        expected_lambda: usize,
        found_mu: usize,
        found_lambda: usize,
    },
    /// Two elements or specs belong to different modules.
    #[error("elements belong to different modules")]
    ModuleMismatch,
    /// A glue generator must meet both the torsion part and the polynomial
    /// part, otherwise its class spans nothing finite.
    #[error("glue generator {index} needs nonzero torsion and polynomial parts")]
    GlueNotFinite { index: usize },
    /// The requested level quotient is not finite at the working precision.
    #[error("the level-{level} quotient is not finite at the working precision")]
    InfiniteQuotient { level: u32 },
    /// The T-coinvariants are not finite at the working precision.
    #[error("the T-coinvariants are not finite at the working precision")]
    InfiniteCoinvariants,
    /// Growth fitting needs three consecutive levels.
    #[error("need at least {needed} consecutive levels, found {found}")]
    InsufficientLevels { needed: usize, found: usize },
    /// The observed sizes admit no exact mu/lambda/nu fit.
    #[error("the computed sizes admit no exact growth fit")]
    NoExactFit,
    /// A bounded exponent search ran out of room.
    #[error("no exponent up to {bound} satisfies the membership")]
    SearchExhausted { bound: u32 },
    /// The element's orbit never settled onto a torsion order.
    #[error("element order did not stabilize; not of torsion type")]
    NotTorsionType,
    /// Tower levels must be consecutive integers.
    #[error("tower levels must be consecutive, got {found} after {previous}")]
    LevelOrder { previous: u32, found: u32 },
    /// A tower needs a nonempty level range.
    #[error("level range {n_min}..={n_max} is empty")]
    EmptyLevelRange { n_min: u32, n_max: u32 },
    /// The requested level is not part of the tower.
    #[error("level {level} is outside the computed tower range")]
    LevelOutOfRange { level: u32 },
    /// Norm and lift failed the compatibility identity.
    #[error("norm and lift fail the compatibility identity at level {level}")]
    TowerConsistency { level: u32 },
    /// Polynomial arithmetic failure.
    #[error(transparent)]
    Lambda(#[from] LambdaError),
    /// Linear-algebra failure other than a detected infinite quotient.
    #[error(transparent)]
    PGroup(#[from] PGroupError),
}

/// A direct sum of cyclic torsion factors: Lambda/(p^{e_i}) for each entry of
/// `mu_factors` and Lambda/(f_j^{k_j}) for each `(f_j, k_j)` with f_j
/// distinguished and nonconstant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ElementaryModule {
    ctx: PrimeContext,
    mu_factors: Vec<u32>,
    lambda_factors: Vec<(LambdaElt, u32)>,
    lambda_moduli: Vec<LambdaElt>,
}

impl ElementaryModule {
    pub fn new(
        ctx: PrimeContext,
        mu_factors: Vec<u32>,
        lambda_factors: Vec<(LambdaElt, u32)>,
    ) -> Result<Self, ModuleError> {
        for (i, &e) in mu_factors.iter().enumerate() {
            if e == 0 || e >= ctx.precision() {
                return Err(ModuleError::InvalidExponent {
                    index: i,
                    exponent: e,
                    max: ctx.precision(),
                });
            }
        }
        let mut lambda_moduli = Vec::with_capacity(lambda_factors.len());
        for (j, (f, k)) in lambda_factors.iter().enumerate() {
            if f.context() != ctx {
                return Err(ModuleError::ContextMismatch { index: j });
            }
            if !f.is_distinguished() || f.degree().unwrap_or(0) == 0 {
                return Err(ModuleError::NotDistinguished { index: j });
            }
            if *k == 0 {
                return Err(ModuleError::ZeroMultiplicity { index: j });
            }
            let mut power = LambdaElt::one(ctx);
            for _ in 0..*k {
                power = &power * f;
            }
            lambda_moduli.push(power);
        }
        Ok(ElementaryModule {
            ctx,
            mu_factors,
            lambda_factors,
            lambda_moduli,
        })
    }

    pub fn ctx(&self) -> PrimeContext {
        self.ctx
    }

    /// Torsion exponents e_i of the p-power factors.
    pub fn mu_factors(&self) -> &[u32] {
        &self.mu_factors
    }

    /// The (f_j, k_j) pairs of the polynomial factors.
    pub fn lambda_factors(&self) -> &[(LambdaElt, u32)] {
        &self.lambda_factors
    }

    /// The full modulus f_j^{k_j} of polynomial factor j.
    pub fn lambda_modulus(&self, j: usize) -> &LambdaElt {
        &self.lambda_moduli[j]
    }

    pub fn mu_count(&self) -> usize {
        self.mu_factors.len()
    }

    pub fn lambda_count(&self) -> usize {
        self.lambda_factors.len()
    }

    /// Largest torsion exponent among the p-power factors, 0 if none.
    pub fn torsion_exponent_bound(&self) -> u32 {
        self.mu_factors.iter().copied().max().unwrap_or(0)
    }

    /// Product of all polynomial moduli; multiplies the polynomial part to
    /// zero, so it maps the whole module into its p-power-torsion span.
    pub fn lambda_annihilator(&self) -> LambdaElt {
        let mut acc = LambdaElt::one(self.ctx);
        for m in &self.lambda_moduli {
            acc = &acc * m;
        }
        acc
    }

    /// Sum of the polynomial moduli degrees.
    pub fn lambda_degree(&self) -> usize {
        self.lambda_moduli
            .iter()
            .map(|m| m.degree().unwrap_or(0))
            .sum()
    }

    fn reduce_mu(&self, i: usize, poly: &LambdaElt) -> LambdaElt {
        let q = self.ctx.p_pow(self.mu_factors[i]);
        let coeffs: Vec<u64> = poly.coeffs().iter().map(|&c| c % q).collect();
        LambdaElt::from_coeffs(self.ctx, &coeffs)
    }

    fn reduce_lambda(&self, j: usize, poly: &LambdaElt) -> LambdaElt {
        poly.divide(&self.lambda_moduli[j])
            .expect("modulus is monic")
            .1
    }

    pub fn zero_element(&self) -> ModuleElement {
        ModuleElement {
            base: self.clone(),
            mu: vec![LambdaElt::zero(self.ctx); self.mu_count()],
            lambda: vec![LambdaElt::zero(self.ctx); self.lambda_count()],
        }
    }

    /// The standard generator 1 of p-power factor i.
    pub fn mu_generator(&self, i: usize) -> ModuleElement {
        let mut x = self.zero_element();
        x.mu[i] = LambdaElt::one(self.ctx);
        x
    }

    /// The standard generator 1 of polynomial factor j.
    pub fn lambda_generator(&self, j: usize) -> ModuleElement {
        let mut x = self.zero_element();
        x.lambda[j] = LambdaElt::one(self.ctx);
        x
    }

    /// An element from per-factor components, reduced canonically.
    pub fn element(
        &self,
        mu_parts: Vec<LambdaElt>,
        lambda_parts: Vec<LambdaElt>,
    ) -> Result<ModuleElement, ModuleError> {
        if mu_parts.len() != self.mu_count() || lambda_parts.len() != self.lambda_count() {
            return Err(ModuleError::ComponentCount {
                expected_mu: self.mu_count(),
                expected_lambda: self.lambda_count(),
                found_mu: mu_parts.len(),
                found_lambda: lambda_parts.len(),
            });
        }
        for (idx, part) in mu_parts.iter().chain(lambda_parts.iter()).enumerate() {
            if part.context() != self.ctx {
                return Err(ModuleError::ContextMismatch { index: idx });
            }
        }
        let mu = mu_parts
            .iter()
            .enumerate()
            .map(|(i, c)| self.reduce_mu(i, c))
            .collect();
        let lambda = lambda_parts
            .iter()
            .enumerate()
            .map(|(j, c)| self.reduce_lambda(j, c))
            .collect();
        Ok(ModuleElement {
            base: self.clone(),
            mu,
            lambda,
        })
    }

    /// All factor generators, p-power factors first.
    pub fn generators(&self) -> Vec<ModuleElement> {
        let mut gens = Vec::with_capacity(self.mu_count() + self.lambda_count());
        for i in 0..self.mu_count() {
            gens.push(self.mu_generator(i));
        }
        for j in 0..self.lambda_count() {
            gens.push(self.lambda_generator(j));
        }
        gens
    }
}

/// An element of an elementary module, stored as one canonically reduced
/// polynomial per cyclic factor. In a glue quotient the same data serves as
/// a representative of its class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModuleElement {
    base: ElementaryModule,
    mu: Vec<LambdaElt>,
    lambda: Vec<LambdaElt>,
}

impl ModuleElement {
    pub fn base(&self) -> &ElementaryModule {
        &self.base
    }

    pub fn mu_component(&self, i: usize) -> &LambdaElt {
        &self.mu[i]
    }

    pub fn lambda_component(&self, j: usize) -> &LambdaElt {
        &self.lambda[j]
    }

    pub fn is_zero(&self) -> bool {
        self.mu.iter().all(|c| c.is_zero()) && self.lambda.iter().all(|c| c.is_zero())
    }

    pub fn mu_part_is_zero(&self) -> bool {
        self.mu.iter().all(|c| c.is_zero())
    }

    pub fn lambda_part_is_zero(&self) -> bool {
        self.lambda.iter().all(|c| c.is_zero())
    }

    /// The element with the polynomial components zeroed.
    pub fn mu_projection(&self) -> ModuleElement {
        let mut x = self.clone();
        for c in &mut x.lambda {
            *c = LambdaElt::zero(self.base.ctx);
        }
        x
    }

    /// The element with the p-power components zeroed.
    pub fn lambda_projection(&self) -> ModuleElement {
        let mut x = self.clone();
        for c in &mut x.mu {
            *c = LambdaElt::zero(self.base.ctx);
        }
        x
    }

    /// Scalar multiple by an integer residue.
    pub fn scale(&self, k: u64) -> ModuleElement {
        let ctx = self.base.ctx;
        self.scale_poly(&LambdaElt::constant(ctx, ctx.reduce_u64(k)))
    }

    /// Multiplication by a ring element, reduced componentwise.
    pub fn scale_poly(&self, h: &LambdaElt) -> ModuleElement {
        let mu = self
            .mu
            .iter()
            .enumerate()
            .map(|(i, c)| self.base.reduce_mu(i, &(c * h)))
            .collect();
        let lambda = self
            .lambda
            .iter()
            .enumerate()
            .map(|(j, c)| self.base.reduce_lambda(j, &(c * h)))
            .collect();
        ModuleElement {
            base: self.base.clone(),
            mu,
            lambda,
        }
    }

    /// Multiplication by T.
    pub fn mul_t(&self) -> ModuleElement {
        self.scale_poly(&LambdaElt::t(self.base.ctx))
    }
}

fn elementwise(
    a: &ModuleElement,
    b: &ModuleElement,
    f: impl Fn(&LambdaElt, &LambdaElt) -> LambdaElt,
) -> ModuleElement {
    assert_eq!(a.base, b.base, "elements must share a module");
    let mu = a
        .mu
        .iter()
        .zip(&b.mu)
        .enumerate()
        .map(|(i, (x, y))| a.base.reduce_mu(i, &f(x, y)))
        .collect();
    let lambda = a
        .lambda
        .iter()
        .zip(&b.lambda)
        .enumerate()
        .map(|(j, (x, y))| a.base.reduce_lambda(j, &f(x, y)))
        .collect();
    ModuleElement {
        base: a.base.clone(),
        mu,
        lambda,
    }
}

impl Add for &ModuleElement {
    type Output = ModuleElement;
    fn add(self, rhs: &ModuleElement) -> ModuleElement {
        elementwise(self, rhs, |x, y| x + y)
    }
}

impl Sub for &ModuleElement {
    type Output = ModuleElement;
    fn sub(self, rhs: &ModuleElement) -> ModuleElement {
        elementwise(self, rhs, |x, y| x - y)
    }
}

impl Neg for &ModuleElement {
    type Output = ModuleElement;
    fn neg(self) -> ModuleElement {
        let zero = self.base.zero_element();
        &zero - self
    }
}

/// An elementary module glued along finitely many relations: the quotient of
/// the base by the span of the glue generators. Each glue generator must
/// meet both parts, so that its residual class (torsion part, 0) spans a
/// finite submodule: it is killed by p^c with c the largest torsion exponent
/// and by the product of the polynomial moduli.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GlueQuotient {
    base: ElementaryModule,
    glue: Vec<ModuleElement>,
}

impl GlueQuotient {
    pub fn new(base: ElementaryModule, glue: Vec<ModuleElement>) -> Result<Self, ModuleError> {
        for (t, g) in glue.iter().enumerate() {
            if g.base != base {
                return Err(ModuleError::ModuleMismatch);
            }
            if g.mu_part_is_zero() || g.lambda_part_is_zero() {
                return Err(ModuleError::GlueNotFinite { index: t });
            }
        }
        Ok(GlueQuotient { base, glue })
    }

    pub fn base(&self) -> &ElementaryModule {
        &self.base
    }

    pub fn glue(&self) -> &[ModuleElement] {
        &self.glue
    }

    /// The annihilator certificate (c, G) for the glue image: every glue
    /// class is killed by p^c and by G, so the image spans a finite
    /// submodule without any enumeration.
    pub fn annihilator_pair(&self) -> (u32, LambdaElt) {
        (
            self.base.torsion_exponent_bound(),
            self.base.lambda_annihilator(),
        )
    }

    /// Representatives of the residual finite classes: each glue generator
    /// with its polynomial part zeroed.
    pub fn glue_image_reps(&self) -> Vec<ModuleElement> {
        self.glue.iter().map(|g| g.mu_projection()).collect()
    }
}

/// Either a plain elementary module or a glue quotient of one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IwasawaModule {
    Elementary(ElementaryModule),
    Glue(GlueQuotient),
}

impl IwasawaModule {
    pub fn base(&self) -> &ElementaryModule {
        match self {
            IwasawaModule::Elementary(m) => m,
            IwasawaModule::Glue(g) => g.base(),
        }
    }

    pub fn ctx(&self) -> PrimeContext {
        self.base().ctx()
    }

    pub fn is_glue(&self) -> bool {
        matches!(self, IwasawaModule::Glue(_))
    }

    /// The glue generators, empty for a plain elementary module.
    pub fn glue_generators(&self) -> &[ModuleElement] {
        match self {
            IwasawaModule::Elementary(_) => &[],
            IwasawaModule::Glue(g) => g.glue(),
        }
    }

    /// Representatives of the residual finite classes spanned by the glue.
    pub fn glue_image_generators(&self) -> Vec<ModuleElement> {
        match self {
            IwasawaModule::Elementary(_) => Vec::new(),
            IwasawaModule::Glue(g) => g.glue_image_reps(),
        }
    }
}

impl From<ElementaryModule> for IwasawaModule {
    fn from(m: ElementaryModule) -> Self {
        IwasawaModule::Elementary(m)
    }
}

impl From<GlueQuotient> for IwasawaModule {
    fn from(g: GlueQuotient) -> Self {
        IwasawaModule::Glue(g)
    }
}

/// A finite list of elements marking out a submodule. Whether the list is
/// closed under scalars only or under the full ring action is decided by the
/// operation that consumes it: tower data treats it as a scalar-span, the
/// decomposition operations close it under T.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct SubmoduleSpec {
    generators: Vec<ModuleElement>,
}

impl SubmoduleSpec {
    pub fn empty() -> Self {
        SubmoduleSpec {
            generators: Vec::new(),
        }
    }

    pub fn new(generators: Vec<ModuleElement>) -> Self {
        SubmoduleSpec { generators }
    }

    /// The spec listing every factor generator of the module.
    pub fn whole(module: &ElementaryModule) -> Self {
        SubmoduleSpec {
            generators: module.generators(),
        }
    }

    pub fn generators(&self) -> &[ModuleElement] {
        &self.generators
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }
}

#[derive(Clone, Debug)]
struct Block {
    offset: usize,
    size: usize,
    modulus: LambdaElt,
    p_relation: Option<u32>,
}

/// The level-n coordinate system: one polynomial block per cyclic factor,
/// with T acting by the companion matrix of the block modulus (omega_n for
/// p-power factors, f^k for polynomial factors).
#[derive(Clone, Debug)]
struct LevelBasis {
    ctx: PrimeContext,
    blocks: Vec<Block>,
}

impl LevelBasis {
    fn for_level(module: &ElementaryModule, n: u32, degree_cap: u64) -> Result<Self, ModuleError> {
        let ctx = module.ctx();
        let omega_n = lambda::omega(ctx, n, degree_cap)?;
        let mu_size = omega_n.degree().expect("omega_n is monic");
        let mut blocks = Vec::new();
        let mut offset = 0;
        for &e in module.mu_factors() {
            blocks.push(Block {
                offset,
                size: mu_size,
                modulus: omega_n.clone(),
                p_relation: Some(e),
            });
            offset += mu_size;
        }
        for j in 0..module.lambda_count() {
            let modulus = module.lambda_modulus(j).clone();
            let size = modulus.degree().expect("modulus is monic");
            blocks.push(Block {
                offset,
                size,
                modulus,
                p_relation: None,
            });
            offset += size;
        }
        Ok(LevelBasis { ctx, blocks })
    }

    fn rank(&self) -> usize {
        self.blocks.iter().map(|b| b.size).sum()
    }

    /// Multiplication by T, reducing each block by its companion modulus.
    fn apply_t(&self, v: &[u64]) -> Vec<u64> {
        let ctx = self.ctx;
        let mut out = vec![0u64; v.len()];
        for b in &self.blocks {
            let lo = b.offset;
            let top = v[lo + b.size - 1];
            for a in (1..b.size).rev() {
                out[lo + a] = v[lo + a - 1];
            }
            out[lo] = 0;
            if top != 0 {
                for a in 0..b.size {
                    let m = b.modulus.coeff(a);
                    if m != 0 {
                        out[lo + a] = ctx.sub_raw(out[lo + a], ctx.mul_raw(top, m));
                    }
                }
            }
        }
        out
    }

    /// Multiplication by a polynomial, by Horner's rule over apply_t.
    fn multiply_poly(&self, v: &[u64], h: &LambdaElt) -> Vec<u64> {
        let ctx = self.ctx;
        let mut acc = vec![0u64; v.len()];
        let Some(d) = h.degree() else {
            return acc;
        };
        for a in (0..=d).rev() {
            acc = self.apply_t(&acc);
            let c = h.coeff(a);
            if c != 0 {
                for (slot, &x) in acc.iter_mut().zip(v) {
                    *slot = ctx.add_raw(*slot, ctx.mul_raw(c, x));
                }
            }
        }
        acc
    }

    /// Coordinates of an element, reducing each component by its block
    /// modulus first.
    fn vector_of(&self, x: &ModuleElement) -> Vec<u64> {
        debug_assert_eq!(
            self.blocks.len(),
            x.base.mu_count() + x.base.lambda_count(),
            "basis and element must describe the same module"
        );
        let mut v = vec![0u64; self.rank()];
        let comps = x.mu.iter().chain(x.lambda.iter());
        for (b, comp) in self.blocks.iter().zip(comps) {
            let rem = comp.divide(&b.modulus).expect("modulus is monic").1;
            for (a, &c) in rem.coeffs().iter().enumerate() {
                v[b.offset + a] = c;
            }
        }
        v
    }
}

/// One computed level: the finite group X/(omega_n X + nu_{n,0} Y) together
/// with its coordinate system.
#[derive(Clone, Debug)]
pub struct LevelData {
    n: u32,
    basis: LevelBasis,
    presentation: QuotientPresentation,
}

impl LevelData {
    pub fn level(&self) -> u32 {
        self.n
    }

    pub fn group(&self) -> &FinitePGroup {
        self.presentation.group()
    }

    /// The class of an element in this level's group.
    pub fn element_coords(&self, x: &ModuleElement) -> GroupElement {
        self.presentation.coords_of(&self.basis.vector_of(x))
    }

    /// Images of the full T-orbit span of the given elements: each
    /// generator together with T, T^2, ... times it, enough to span its
    /// closure under the ring action at this level.
    pub fn lambda_span(&self, gens: &[ModuleElement]) -> Vec<GroupElement> {
        let rank = self.basis.rank();
        let mut out = Vec::with_capacity(gens.len() * rank);
        for g in gens {
            let mut v = self.basis.vector_of(g);
            for _ in 0..rank.max(1) {
                out.push(self.presentation.coords_of(&v));
                v = self.basis.apply_t(&v);
            }
        }
        out
    }

    /// Images of T times each group generator.
    pub fn t_image_generators(&self) -> Vec<GroupElement> {
        let g = self.group().clone();
        (0..g.p_rank())
            .map(|i| {
                let rep = self.presentation.ambient_rep_of(&g.generator(i));
                self.presentation.coords_of(&self.basis.apply_t(&rep))
            })
            .collect()
    }
}

/// The finite level X/(omega_n X + nu_{n,0} Y) with its coordinate data.
///
/// Relations: p^{e_i} on each basis monomial of a p-power block, omega_n on
/// each basis monomial of a polynomial block, one scalar column nu_{n,0} y
/// per Y-generator (the T-orbit of such a column lands in omega_n X, so no
/// closure columns are needed), and the full T-orbit of each glue generator.
pub fn finite_level_data(
    module: &IwasawaModule,
    y: &SubmoduleSpec,
    n: u32,
    degree_cap: u64,
) -> Result<LevelData, ModuleError> {
    let base = module.base();
    let ctx = base.ctx();
    for g in y.generators() {
        if g.base != *base {
            return Err(ModuleError::ModuleMismatch);
        }
    }
    let basis = LevelBasis::for_level(base, n, degree_cap)?;
    let rank = basis.rank();
    let mut cols: Vec<Vec<u64>> = Vec::new();
    for b in &basis.blocks {
        if let Some(e) = b.p_relation {
            let pe = ctx.p_pow(e);
            for a in 0..b.size {
                let mut col = vec![0u64; rank];
                col[b.offset + a] = pe;
                cols.push(col);
            }
        }
    }
    let omega_n = lambda::omega(ctx, n, degree_cap)?;
    for b in &basis.blocks {
        if b.p_relation.is_some() {
            continue;
        }
        let rem = omega_n.divide(&b.modulus).expect("modulus is monic").1;
        let mut w = vec![0u64; rank];
        for (a, &c) in rem.coeffs().iter().enumerate() {
            w[b.offset + a] = c;
        }
        for _ in 0..b.size {
            cols.push(w.clone());
            w = basis.apply_t(&w);
        }
    }
    if !y.is_empty() {
        let nu_n0 = lambda::nu(ctx, n, 0, degree_cap)?;
        for g in y.generators() {
            let v = basis.vector_of(g);
            cols.push(basis.multiply_poly(&v, &nu_n0));
        }
    }
    for g in module.glue_generators() {
        let mut v = basis.vector_of(g);
        for _ in 0..rank {
            cols.push(v.clone());
            v = basis.apply_t(&v);
        }
    }
    let rel = ResidueMatrix::from_columns(ctx, rank, &cols)?;
    match quotient_presentation(&rel, rank) {
        Ok(presentation) => Ok(LevelData {
            n,
            basis,
            presentation,
        }),
        Err(PGroupError::PrecisionExhausted { .. }) => {
            Err(ModuleError::InfiniteQuotient { level: n })
        }
        Err(e) => Err(ModuleError::PGroup(e)),
    }
}

/// Invariant factors of the finite level X/(omega_n X + nu_{n,0} Y).
pub fn finite_level(
    module: &IwasawaModule,
    y: &SubmoduleSpec,
    n: u32,
    degree_cap: u64,
) -> Result<FinitePGroup, ModuleError> {
    finite_level_data(module, y, n, degree_cap).map(|d| d.group().clone())
}

/// One rung of a tower: the level data plus the connecting maps to and from
/// the previous level (absent on the lowest rung).
#[derive(Clone, Debug)]
pub struct TowerLevel {
    data: LevelData,
    norm_to_prev: Option<PGroupHom>,
    lift_from_prev: Option<PGroupHom>,
}

impl TowerLevel {
    pub fn level(&self) -> u32 {
        self.data.level()
    }

    pub fn group(&self) -> &FinitePGroup {
        self.data.group()
    }

    pub fn data(&self) -> &LevelData {
        &self.data
    }

    /// The canonical projection onto the previous level.
    pub fn norm_to_prev(&self) -> Option<&PGroupHom> {
        self.norm_to_prev.as_ref()
    }

    /// Multiplication by nu_{n,n-1} from the previous level into this one.
    pub fn lift_from_prev(&self) -> Option<&PGroupHom> {
        self.lift_from_prev.as_ref()
    }
}

/// A consecutive run of finite levels with norm and lift maps between them.
#[derive(Clone, Debug)]
pub struct Tower {
    module: IwasawaModule,
    y: SubmoduleSpec,
    degree_cap: u64,
    levels: Vec<TowerLevel>,
}

fn hom_from_images(
    domain: &FinitePGroup,
    codomain: &FinitePGroup,
    images: Vec<GroupElement>,
) -> Result<PGroupHom, PGroupError> {
    if images.is_empty() {
        Ok(PGroupHom::zero_map(domain, codomain))
    } else {
        PGroupHom::from_generator_images(domain, &images)
    }
}

fn multiplication_hom(data: &LevelData, h: &LambdaElt) -> Result<PGroupHom, PGroupError> {
    let g = data.group().clone();
    let images: Vec<GroupElement> = (0..g.p_rank())
        .map(|i| {
            let rep = data.presentation.ambient_rep_of(&g.generator(i));
            data.presentation
                .coords_of(&data.basis.multiply_poly(&rep, h))
        })
        .collect();
    hom_from_images(&g, &g, images)
}

fn project_vector(hi: &LevelData, lo: &LevelData, v: &[u64]) -> Vec<u64> {
    let ctx = hi.basis.ctx;
    let mut out = vec![0u64; lo.basis.rank()];
    for (bh, bl) in hi.basis.blocks.iter().zip(&lo.basis.blocks) {
        if bh.p_relation.is_some() {
            let poly = LambdaElt::from_coeffs(ctx, &v[bh.offset..bh.offset + bh.size]);
            let rem = poly.divide(&bl.modulus).expect("modulus is monic").1;
            for (a, &c) in rem.coeffs().iter().enumerate() {
                out[bl.offset + a] = c;
            }
        } else {
            out[bl.offset..bl.offset + bl.size]
                .copy_from_slice(&v[bh.offset..bh.offset + bh.size]);
        }
    }
    out
}

fn embed_vector(lo: &LevelData, hi: &LevelData, v: &[u64]) -> Vec<u64> {
    let mut out = vec![0u64; hi.basis.rank()];
    for (bl, bh) in lo.basis.blocks.iter().zip(&hi.basis.blocks) {
        out[bh.offset..bh.offset + bl.size].copy_from_slice(&v[bl.offset..bl.offset + bl.size]);
    }
    out
}

impl Tower {
    /// Computes all levels n_min..=n_max sequentially, then connects them.
    pub fn build(
        module: &IwasawaModule,
        y: &SubmoduleSpec,
        n_min: u32,
        n_max: u32,
        degree_cap: u64,
    ) -> Result<Tower, ModuleError> {
        if n_min > n_max {
            return Err(ModuleError::EmptyLevelRange { n_min, n_max });
        }
        let data = (n_min..=n_max)
            .map(|n| finite_level_data(module, y, n, degree_cap))
            .collect::<Result<Vec<_>, _>>()?;
        Tower::from_level_data(module.clone(), y.clone(), degree_cap, data)
    }

    /// Assembles a tower from independently computed levels, building the
    /// norm (canonical projection) and lift (multiplication by nu_{n,n-1})
    /// maps and verifying norm after lift is multiplication by nu_{n,n-1}.
    pub fn from_level_data(
        module: IwasawaModule,
        y: SubmoduleSpec,
        degree_cap: u64,
        data: Vec<LevelData>,
    ) -> Result<Tower, ModuleError> {
        if data.is_empty() {
            return Err(ModuleError::InsufficientLevels {
                needed: 1,
                found: 0,
            });
        }
        for pair in data.windows(2) {
            if pair[1].n != pair[0].n + 1 {
                return Err(ModuleError::LevelOrder {
                    previous: pair[0].n,
                    found: pair[1].n,
                });
            }
        }
        let ctx = module.ctx();
        let mut levels: Vec<TowerLevel> = Vec::with_capacity(data.len());
        for (idx, d) in data.into_iter().enumerate() {
            if idx == 0 {
                levels.push(TowerLevel {
                    data: d,
                    norm_to_prev: None,
                    lift_from_prev: None,
                });
                continue;
            }
            let lo = &levels[idx - 1].data;
            let hi = &d;
            let hi_group = hi.group().clone();
            let lo_group = lo.group().clone();
            let norm_images: Vec<GroupElement> = (0..hi_group.p_rank())
                .map(|i| {
                    let rep = hi.presentation.ambient_rep_of(&hi_group.generator(i));
                    lo.presentation.coords_of(&project_vector(hi, lo, &rep))
                })
                .collect();
            let norm = hom_from_images(&hi_group, &lo_group, norm_images)?;
            let nu_step = lambda::nu(ctx, hi.n, lo.n, degree_cap)?;
            let lift_images: Vec<GroupElement> = (0..lo_group.p_rank())
                .map(|i| {
                    let rep = lo.presentation.ambient_rep_of(&lo_group.generator(i));
                    let up = embed_vector(lo, hi, &rep);
                    hi.presentation
                        .coords_of(&hi.basis.multiply_poly(&up, &nu_step))
                })
                .collect();
            let lift = hom_from_images(&lo_group, &hi_group, lift_images)?;
            let composite = norm.compose(&lift)?;
            let expected = multiplication_hom(lo, &nu_step)?;
            if composite != expected {
                return Err(ModuleError::TowerConsistency { level: hi.n });
            }
            levels.push(TowerLevel {
                data: d,
                norm_to_prev: Some(norm),
                lift_from_prev: Some(lift),
            });
        }
        Ok(Tower {
            module,
            y,
            degree_cap,
            levels,
        })
    }

    pub fn module(&self) -> &IwasawaModule {
        &self.module
    }

    pub fn y(&self) -> &SubmoduleSpec {
        &self.y
    }

    pub fn degree_cap(&self) -> u64 {
        self.degree_cap
    }

    pub fn levels(&self) -> &[TowerLevel] {
        &self.levels
    }

    pub fn n_min(&self) -> u32 {
        self.levels[0].level()
    }

    pub fn n_max(&self) -> u32 {
        self.levels[self.levels.len() - 1].level()
    }

    pub fn level(&self, n: u32) -> Option<&TowerLevel> {
        if n < self.n_min() || n > self.n_max() {
            return None;
        }
        self.levels.get((n - self.n_min()) as usize)
    }

    pub fn group_at(&self, n: u32) -> Option<&FinitePGroup> {
        self.level(n).map(|l| l.group())
    }

    /// The class of an element at level n.
    pub fn element_at(&self, x: &ModuleElement, n: u32) -> Result<GroupElement, ModuleError> {
        if x.base != *self.module.base() {
            return Err(ModuleError::ModuleMismatch);
        }
        let lvl = self
            .level(n)
            .ok_or(ModuleError::LevelOutOfRange { level: n })?;
        Ok(lvl.data.element_coords(x))
    }

    /// (level, base-p logarithm of the level size) for every computed level.
    pub fn log_sizes(&self) -> Vec<(u32, u64)> {
        self.levels
            .iter()
            .map(|l| (l.level(), l.group().order_exponent()))
            .collect()
    }

    /// Invariant factors of X_n / T X_n.
    pub fn t_quotient_at(&self, n: u32) -> Result<FinitePGroup, ModuleError> {
        let lvl = self
            .level(n)
            .ok_or(ModuleError::LevelOutOfRange { level: n })?;
        let g = lvl.group().clone();
        if g.p_rank() == 0 {
            return Ok(g);
        }
        let gens: Vec<GroupElement> = (0..g.p_rank()).map(|i| g.generator(i)).collect();
        let t_images = lvl.data.t_image_generators();
        Ok(crate::pgroup::quotient_of_subgroup(&gens, &t_images, &g)?)
    }
}

/// An exact fit of the level sizes to log_p |X_n| = mu p^n + lambda n + nu.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrowthFit {
    pub mu: u64,
    pub lambda: u64,
    pub nu: i64,
    /// Least computed level from which every later level matches the fit.
    pub n0_fit: u32,
}

fn ipow(base: i128, exp: u32) -> i128 {
    let mut acc = 1i128;
    for _ in 0..exp {
        acc *= base;
    }
    acc
}

pub(crate) fn fit_from_log_sizes(p: u64, sizes: &[(u32, u64)]) -> Result<GrowthFit, ModuleError> {
    if sizes.len() < 3 {
        return Err(ModuleError::InsufficientLevels {
            needed: 3,
            found: sizes.len(),
        });
    }
    let p = p as i128;
    let &(n2, s2) = &sizes[sizes.len() - 3];
    let &(n1, s1) = &sizes[sizes.len() - 2];
    let &(n0, s0) = &sizes[sizes.len() - 1];
    let d1 = s1 as i128 - s2 as i128;
    let d2 = s0 as i128 - s1 as i128;
    let q = ipow(p, n2) * (p - 1) * (p - 1);
    let diff = d2 - d1;
    if diff < 0 || diff % q != 0 {
        return Err(ModuleError::NoExactFit);
    }
    let mu = diff / q;
    let lambda = d1 - mu * ipow(p, n2) * (p - 1);
    if lambda < 0 {
        return Err(ModuleError::NoExactFit);
    }
    let nu = s0 as i128 - mu * ipow(p, n0) - lambda * n0 as i128;
    let predict = |n: u32| mu * ipow(p, n) + lambda * n as i128 + nu;
    if predict(n1) != s1 as i128 || predict(n2) != s2 as i128 {
        return Err(ModuleError::NoExactFit);
    }
    let mut n0_fit = sizes[0].0;
    for &(n, s) in sizes.iter().rev() {
        if predict(n) != s as i128 {
            n0_fit = n + 1;
            break;
        }
    }
    Ok(GrowthFit {
        mu: mu as u64,
        lambda: lambda as u64,
        nu: nu as i64,
        n0_fit,
    })
}

/// Fits mu, lambda, nu exactly from the last three levels of the tower and
/// reports the least level from which the formula holds on every computed
/// level.
pub fn fit_invariants(tower: &Tower) -> Result<GrowthFit, ModuleError> {
    fit_from_log_sizes(tower.module.ctx().p(), &tower.log_sizes())
}

/// Verdict of a membership test that is exact when negative and verified
/// through a finite range of levels when positive.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MembershipVerdict {
    /// A level where the membership provably fails.
    DisprovedAt(u32),
    /// Membership held at every checked level.
    ConsistentThrough(u32),
}

impl MembershipVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, MembershipVerdict::ConsistentThrough(_))
    }
}

/// Whether `target` lies in the T-closed span of `gens`, checked at levels
/// 1..=max_level. A negative answer is exact; a positive answer certifies
/// the membership at every checked level.
pub fn lambda_span_contains(
    module: &IwasawaModule,
    gens: &[ModuleElement],
    target: &ModuleElement,
    max_level: u32,
    degree_cap: u64,
) -> Result<MembershipVerdict, ModuleError> {
    let empty = SubmoduleSpec::empty();
    for n in 1..=max_level {
        let data = finite_level_data(module, &empty, n, degree_cap)?;
        let span = data.lambda_span(gens);
        let target_class = data.element_coords(target);
        if solve_in_subgroup(&span, &target_class)?.is_none() {
            return Ok(MembershipVerdict::DisprovedAt(n));
        }
    }
    Ok(MembershipVerdict::ConsistentThrough(max_level))
}

/// The coarse type of an element: which parts survive after adjusting by
/// the glue.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ElementClass {
    FiniteType,
    MuType,
    LambdaType,
    IndecomposedCandidate {
        mu_part: Box<ModuleElement>,
        lambda_part: Box<ModuleElement>,
    },
}

fn mu_side(base: &ElementaryModule) -> Result<ElementaryModule, ModuleError> {
    ElementaryModule::new(base.ctx(), base.mu_factors().to_vec(), Vec::new())
}

fn lambda_side(base: &ElementaryModule) -> Result<ElementaryModule, ModuleError> {
    ElementaryModule::new(base.ctx(), Vec::new(), base.lambda_factors().to_vec())
}

/// Classifies an element by which of its parts can be cancelled against the
/// glue: an element is finite precisely when its torsion part lies in the
/// T-closed span of the glue torsion parts and its polynomial part lies in
/// the span of the glue polynomial parts. For a plain elementary module the
/// spans are zero and the test degenerates to which components vanish.
pub fn classify_element(
    module: &IwasawaModule,
    x: &ModuleElement,
    verify_levels: u32,
    degree_cap: u64,
) -> Result<ElementClass, ModuleError> {
    if x.base != *module.base() {
        return Err(ModuleError::ModuleMismatch);
    }
    let (mu_cancels, lambda_cancels) = match module {
        IwasawaModule::Elementary(_) => (x.mu_part_is_zero(), x.lambda_part_is_zero()),
        IwasawaModule::Glue(g) => {
            let mside = mu_side(g.base())?;
            let lside = lambda_side(g.base())?;
            let mu_gens: Vec<ModuleElement> = g
                .glue()
                .iter()
                .map(|t| mside.element(t.mu.clone(), Vec::new()))
                .collect::<Result<_, _>>()?;
            let la_gens: Vec<ModuleElement> = g
                .glue()
                .iter()
                .map(|t| lside.element(Vec::new(), t.lambda.clone()))
                .collect::<Result<_, _>>()?;
            let xm = mside.element(x.mu.clone(), Vec::new())?;
            let xl = lside.element(Vec::new(), x.lambda.clone())?;
            let m_in = lambda_span_contains(
                &mside.clone().into(),
                &mu_gens,
                &xm,
                verify_levels,
                degree_cap,
            )?
            .holds();
            let l_in = lambda_span_contains(
                &lside.clone().into(),
                &la_gens,
                &xl,
                verify_levels,
                degree_cap,
            )?
            .holds();
            (m_in, l_in)
        }
    };
    Ok(match (mu_cancels, lambda_cancels) {
        (true, true) => ElementClass::FiniteType,
        (false, true) => ElementClass::MuType,
        (true, false) => ElementClass::LambdaType,
        (false, false) => ElementClass::IndecomposedCandidate {
            mu_part: Box::new(x.mu_projection()),
            lambda_part: Box::new(x.lambda_projection()),
        },
    })
}

/// Generator lists for the canonical submodules: L (polynomial part plus
/// glue image), M (torsion part plus glue image), F (glue image), and
/// D = L + M.
#[derive(Clone, Debug)]
pub struct LmfdParts {
    pub l: SubmoduleSpec,
    pub m: SubmoduleSpec,
    pub f: SubmoduleSpec,
    pub d: SubmoduleSpec,
}

pub fn submodules_lmfd(module: &IwasawaModule) -> LmfdParts {
    let base = module.base();
    let phi = module.glue_image_generators();
    let mu_gens: Vec<ModuleElement> = (0..base.mu_count()).map(|i| base.mu_generator(i)).collect();
    let la_gens: Vec<ModuleElement> = (0..base.lambda_count())
        .map(|j| base.lambda_generator(j))
        .collect();
    let mut l = la_gens.clone();
    l.extend(phi.iter().cloned());
    let mut m = mu_gens.clone();
    m.extend(phi.iter().cloned());
    let mut d = la_gens;
    d.extend(mu_gens);
    d.extend(phi.iter().cloned());
    LmfdParts {
        l: SubmoduleSpec::new(l),
        m: SubmoduleSpec::new(m),
        f: SubmoduleSpec::new(phi),
        d: SubmoduleSpec::new(d),
    }
}

/// A polynomial G with G X contained in the torsion-plus-glue span: the
/// product of all polynomial moduli kills every polynomial component.
pub fn decomposition_witness_polynomial(module: &IwasawaModule) -> LambdaElt {
    module.base().lambda_annihilator()
}

/// The least exponents (l, d) with p^l x in the L-span and p^d x in the
/// D-span, searched up to `bound` and level-checked as in
/// `lambda_span_contains`.
pub fn l_and_d_orders(
    module: &IwasawaModule,
    x: &ModuleElement,
    bound: u32,
    verify_levels: u32,
    degree_cap: u64,
) -> Result<(u32, u32), ModuleError> {
    let parts = submodules_lmfd(module);
    let ctx = module.ctx();
    let search = |gens: &[ModuleElement]| -> Result<u32, ModuleError> {
        for j in 0..=bound.min(ctx.precision()) {
            let scaled = x.scale(ctx.p_pow(j));
            if lambda_span_contains(module, gens, &scaled, verify_levels, degree_cap)?.holds() {
                return Ok(j);
            }
        }
        Err(ModuleError::SearchExhausted { bound })
    };
    let ell = search(parts.l.generators())?;
    let delta = search(parts.d.generators())?;
    Ok((ell, delta))
}

/// The stabilized order of T^j x for large j: the order of the image of x
/// in the module with its glue-spanned finite part removed. Exact for
/// elementary modules; for glue quotients the T-orbit is iterated until the
/// level order stabilizes.
pub fn essential_order(
    module: &IwasawaModule,
    x: &ModuleElement,
    max_level: u32,
    degree_cap: u64,
) -> Result<u64, ModuleError> {
    if x.base != *module.base() {
        return Err(ModuleError::ModuleMismatch);
    }
    let ctx = module.ctx();
    match module {
        IwasawaModule::Elementary(m) => {
            if !x.lambda_part_is_zero() {
                return Err(ModuleError::NotTorsionType);
            }
            let mut exp = 0u32;
            for (i, comp) in x.mu.iter().enumerate() {
                let e = m.mu_factors()[i];
                let v = comp.min_coeff_valuation().min(e);
                exp = exp.max(e - v);
            }
            Ok(ctx.p_pow(exp))
        }
        IwasawaModule::Glue(g) => {
            let (c, gpoly) = g.annihilator_pair();
            let dg = gpoly.degree().unwrap_or(0) as u32;
            let window = 3usize;
            let iters = (dg * c) as usize + window;
            let data = finite_level_data(module, &SubmoduleSpec::empty(), max_level, degree_cap)?;
            let mut z = x.clone();
            let mut history = Vec::with_capacity(iters + 1);
            for _ in 0..=iters {
                history.push(data.element_coords(&z).element_order());
                z = z.mul_t();
            }
            let tail = history[history.len() - 1];
            if history[history.len() - 1 - window..]
                .iter()
                .all(|&o| o == tail)
            {
                Ok(tail)
            } else {
                Err(ModuleError::NotTorsionType)
            }
        }
    }
}

/// The p-rank of the T-closed span of x_n - z_n inside the tower's level-n
/// group.
pub fn distance(
    tower: &Tower,
    x: &ModuleElement,
    z: &ModuleElement,
    n: u32,
) -> Result<u64, ModuleError> {
    let w = x - z;
    if w.base != *tower.module().base() {
        return Err(ModuleError::ModuleMismatch);
    }
    let lvl = tower
        .level(n)
        .ok_or(ModuleError::LevelOutOfRange { level: n })?;
    let span = lvl.data.lambda_span(std::slice::from_ref(&w));
    let sub = subgroup_invariants(&span, lvl.group())?;
    Ok(sub.p_rank() as u64)
}

/// Presentation of the T-coinvariants X/TX on the factor generators: one
/// coordinate per cyclic factor, relations p^{e_i}, constant terms of the
/// polynomial moduli, and constant-term columns of the glue generators.
pub fn t_coinvariants(module: &IwasawaModule) -> Result<QuotientPresentation, ModuleError> {
    let base = module.base();
    let ctx = base.ctx();
    let rank = base.mu_count() + base.lambda_count();
    let mut cols: Vec<Vec<u64>> = Vec::new();
    for (i, &e) in base.mu_factors().iter().enumerate() {
        let mut col = vec![0u64; rank];
        col[i] = ctx.p_pow(e);
        cols.push(col);
    }
    for j in 0..base.lambda_count() {
        let mut col = vec![0u64; rank];
        col[base.mu_count() + j] = base.lambda_modulus(j).constant_term();
        cols.push(col);
    }
    for g in module.glue_generators() {
        let mut col = vec![0u64; rank];
        for (i, comp) in g.mu.iter().enumerate() {
            col[i] = comp.constant_term();
        }
        for (j, comp) in g.lambda.iter().enumerate() {
            col[base.mu_count() + j] = comp.constant_term();
        }
        cols.push(col);
    }
    let rel = ResidueMatrix::from_columns(ctx, rank, &cols)?;
    match quotient_presentation(&rel, rank) {
        Ok(p) => Ok(p),
        Err(PGroupError::PrecisionExhausted { .. }) => Err(ModuleError::InfiniteCoinvariants),
        Err(e) => Err(ModuleError::PGroup(e)),
    }
}

fn coinvariant_class(
    module: &IwasawaModule,
    pres: &QuotientPresentation,
    x: &ModuleElement,
) -> GroupElement {
    let base = module.base();
    let mut v = vec![0u64; base.mu_count() + base.lambda_count()];
    for (i, comp) in x.mu.iter().enumerate() {
        v[i] = comp.constant_term();
    }
    for (j, comp) in x.lambda.iter().enumerate() {
        v[base.mu_count() + j] = comp.constant_term();
    }
    pres.coords_of(&v)
}

/// The scalar-span cohomology layer at level n together with its expected
/// stable shape.
#[derive(Clone, Debug)]
pub struct H1Report {
    /// (omega_n X + nu_{n,0} Y) / omega_n X.
    pub group: FinitePGroup,
    /// The image of Y in X/TX, the shape the groups settle into.
    pub stable_form: FinitePGroup,
    pub matches_stable_form: bool,
}

/// Computes Y_n / omega_n X at level n of the tower and compares it with
/// the image of Y in the T-coinvariants.
pub fn h1_iwasawa(tower: &Tower, n: u32) -> Result<H1Report, ModuleError> {
    let module = tower.module();
    let ctx = module.ctx();
    let data = finite_level_data(module, &SubmoduleSpec::empty(), n, tower.degree_cap())?;
    let group = if tower.y().is_empty() {
        FinitePGroup::trivial(ctx)
    } else {
        let nu_n0 = lambda::nu(ctx, n, 0, tower.degree_cap())?;
        let images: Vec<GroupElement> = tower
            .y()
            .generators()
            .iter()
            .map(|g| {
                let v = data.basis.vector_of(g);
                data.presentation
                    .coords_of(&data.basis.multiply_poly(&v, &nu_n0))
            })
            .collect();
        subgroup_invariants(&images, data.group())?
    };
    let coinv = t_coinvariants(module)?;
    let stable_form = if tower.y().is_empty() {
        FinitePGroup::trivial(ctx)
    } else {
        let images: Vec<GroupElement> = tower
            .y()
            .generators()
            .iter()
            .map(|g| coinvariant_class(module, &coinv, g))
            .collect();
        subgroup_invariants(&images, coinv.group())?
    };
    let matches_stable_form = group.factors() == stable_form.factors();
    Ok(H1Report {
        group,
        stable_form,
        matches_stable_form,
    })
}

fn zp_image_contains(m: &ResidueMatrix, target: &[u64]) -> bool {
    let ctx = m.ctx();
    let dec = smith_decompose(m);
    let s = dec.u.mul_vec(target);
    for (i, &si) in s.iter().enumerate() {
        match dec.diag.get(i) {
            Some(&d) => {
                if ctx.valuation_of(si) < d {
                    return false;
                }
            }
            None => {
                if si != 0 {
                    return false;
                }
            }
        }
    }
    true
}

/// Whether every Y-generator lies in TX. For an elementary module this is
/// exact: a torsion component lies in T times its factor exactly when its
/// constant term vanishes modulo p^{e_i}, and a polynomial component exactly
/// when it lies in the image of the companion matrix of T, decided by a
/// Smith decomposition. For a glue quotient the membership is level-checked
/// against the span of T times the factor generators.
pub fn property_f_check(
    module: &IwasawaModule,
    y: &SubmoduleSpec,
    verify_levels: u32,
    degree_cap: u64,
) -> Result<bool, ModuleError> {
    let base = module.base();
    let ctx = base.ctx();
    for g in y.generators() {
        if g.base != *base {
            return Err(ModuleError::ModuleMismatch);
        }
    }
    match module {
        IwasawaModule::Elementary(_) => {
            for g in y.generators() {
                for (i, comp) in g.mu.iter().enumerate() {
                    if ctx.valuation_of(comp.constant_term()) < base.mu_factors()[i] {
                        return Ok(false);
                    }
                }
                for (j, comp) in g.lambda.iter().enumerate() {
                    let modulus = base.lambda_modulus(j);
                    let size = modulus.degree().expect("modulus is monic");
                    let mini = LevelBasis {
                        ctx,
                        blocks: vec![Block {
                            offset: 0,
                            size,
                            modulus: modulus.clone(),
                            p_relation: None,
                        }],
                    };
                    let cols: Vec<Vec<u64>> = (0..size)
                        .map(|a| {
                            let mut e = vec![0u64; size];
                            e[a] = 1;
                            mini.apply_t(&e)
                        })
                        .collect();
                    let mat = ResidueMatrix::from_columns(ctx, size, &cols)?;
                    let mut target = vec![0u64; size];
                    for (a, &c) in comp.coeffs().iter().enumerate() {
                        target[a] = c;
                    }
                    if !zp_image_contains(&mat, &target) {
                        return Ok(false);
                    }
                }
            }
            Ok(true)
        }
        IwasawaModule::Glue(_) => {
            let t_gens: Vec<ModuleElement> =
                base.generators().iter().map(|g| g.mul_t()).collect();
            for g in y.generators() {
                if !lambda_span_contains(module, &t_gens, g, verify_levels, degree_cap)?.holds() {
                    return Ok(false);
                }
            }
            Ok(true)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::PAdicInt;

    fn ctx(p: u64, k: u32) -> PrimeContext {
        PrimeContext::new(p, k).unwrap()
    }

    fn elem_mod(ctx: PrimeContext, mu: &[u32], la: &[(LambdaElt, u32)]) -> IwasawaModule {
        ElementaryModule::new(ctx, mu.to_vec(), la.to_vec())
            .unwrap()
            .into()
    }

    fn t_minus_p(ctx: PrimeContext) -> LambdaElt {
        LambdaElt::from_i64_coeffs(ctx, &[-(ctx.p() as i64), 1])
    }

    const CAP: u64 = 1 << 12;

    #[test]
    fn constructor_rejects_bad_factors() {
        let c = ctx(3, 6);
        assert_eq!(
            ElementaryModule::new(c, vec![0], vec![]).unwrap_err(),
            ModuleError::InvalidExponent {
                index: 0,
                exponent: 0,
                max: 6
            }
        );
        assert_eq!(
            ElementaryModule::new(c, vec![6], vec![]).unwrap_err(),
            ModuleError::InvalidExponent {
                index: 0,
                exponent: 6,
                max: 6
            }
        );
        let not_dist = LambdaElt::from_i64_coeffs(c, &[1, 1]);
        assert_eq!(
            ElementaryModule::new(c, vec![], vec![(not_dist, 1)]).unwrap_err(),
            ModuleError::NotDistinguished { index: 0 }
        );
        assert_eq!(
            ElementaryModule::new(c, vec![], vec![(t_minus_p(c), 0)]).unwrap_err(),
            ModuleError::ZeroMultiplicity { index: 0 }
        );
    }

    #[test]
    fn glue_needs_both_parts() {
        let c = ctx(3, 6);
        let base = ElementaryModule::new(c, vec![2], vec![(t_minus_p(c), 1)]).unwrap();
        let mu_only = base.mu_generator(0);
        assert_eq!(
            GlueQuotient::new(base.clone(), vec![mu_only]).unwrap_err(),
            ModuleError::GlueNotFinite { index: 0 }
        );
        let both = &base.mu_generator(0).scale(3) + &base.lambda_generator(0);
        let gq = GlueQuotient::new(base, vec![both]).unwrap();
        let (c_exp, gpoly) = gq.annihilator_pair();
        assert_eq!(c_exp, 2);
        assert_eq!(gpoly, t_minus_p(ctx(3, 6)));
    }

    #[test]
    fn mu_levels_match_rank_growth() {
        let c = ctx(3, 5);
        let x = elem_mod(c, &[1], &[]);
        let y = SubmoduleSpec::empty();
        for n in 0..=2u32 {
            let g = finite_level(&x, &y, n, CAP).unwrap();
            let rank = 3usize.pow(n);
            assert_eq!(g.factors(), vec![1u32; rank].as_slice());
        }
    }

    #[test]
    fn lambda_level_matches_valuation_oracle() {
        for p in [3u64, 5] {
            let c = ctx(p, 7);
            let x = elem_mod(c, &[], &[(t_minus_p(c), 1)]);
            let y = SubmoduleSpec::empty();
            for n in 0..=2u32 {
                let g = finite_level(&x, &y, n, CAP).unwrap();
                let base = PAdicInt::from_i64(c, 1 + p as i64);
                let power = base.pow(p.pow(n));
                let val = c.valuation_of(c.sub_raw(power.value(), 1));
                assert_eq!(val, n + 1);
                assert_eq!(g.factors(), &[n + 1]);
            }
        }
    }

    #[test]
    fn whole_y_on_t_factor_gives_cyclic_levels() {
        let c = ctx(3, 6);
        let t = LambdaElt::t(c);
        let base = ElementaryModule::new(c, vec![], vec![(t, 1)]).unwrap();
        let y = SubmoduleSpec::whole(&base);
        let x: IwasawaModule = base.into();
        assert_eq!(finite_level(&x, &y, 0, CAP).unwrap().p_rank(), 0);
        for n in 1..=3u32 {
            assert_eq!(finite_level(&x, &y, n, CAP).unwrap().factors(), &[n]);
        }
        assert_eq!(
            finite_level(&x, &SubmoduleSpec::empty(), 1, CAP).unwrap_err(),
            ModuleError::InfiniteQuotient { level: 1 }
        );
    }

    #[test]
    fn level_sizes_multiply_over_direct_sums() {
        let c = ctx(3, 7);
        let x = elem_mod(c, &[1], &[(t_minus_p(c), 1)]);
        let y = SubmoduleSpec::empty();
        for n in 1..=2u32 {
            let g = finite_level(&x, &y, n, CAP).unwrap();
            assert_eq!(g.order_exponent(), 3u64.pow(n) + n as u64 + 1);
        }
    }

    #[test]
    fn vectors_commute_with_t_action() {
        let c = ctx(3, 5);
        let base = ElementaryModule::new(c, vec![2], vec![(t_minus_p(c), 2)]).unwrap();
        let x = base
            .element(
                vec![LambdaElt::from_i64_coeffs(c, &[2, 1, 0, 4])],
                vec![LambdaElt::from_i64_coeffs(c, &[1, 7])],
            )
            .unwrap();
        let module: IwasawaModule = base.clone().into();
        let data = finite_level_data(&module, &SubmoduleSpec::empty(), 1, CAP).unwrap();
        let via_element = data.basis.vector_of(&x.mul_t());
        let via_vector = data.basis.apply_t(&data.basis.vector_of(&x));
        assert_eq!(via_element, via_vector);
        let z = base.lambda_generator(0);
        let sum_first = data.basis.vector_of(&(&x + &z));
        let mut sum_after = data.basis.vector_of(&x);
        for (slot, &v) in sum_after.iter_mut().zip(&data.basis.vector_of(&z)) {
            *slot = c.add_raw(*slot, v);
        }
        assert_eq!(sum_first, sum_after);
    }

    #[test]
    fn tower_connects_levels_consistently() {
        let c = ctx(3, 7);
        let x = elem_mod(c, &[], &[(t_minus_p(c), 1)]);
        let tower = Tower::build(&x, &SubmoduleSpec::empty(), 0, 3, CAP).unwrap();
        for lvl in tower.levels() {
            if let Some(norm) = lvl.norm_to_prev() {
                assert!(norm.is_surjective().unwrap());
            }
        }
        let gen = x.base().lambda_generator(0);
        for n in 0..3u32 {
            let lifted = tower
                .level(n + 1)
                .unwrap()
                .lift_from_prev()
                .unwrap()
                .apply(&tower.element_at(&gen, n).unwrap());
            let scaled = tower.element_at(&gen, n + 1).unwrap().scale(3);
            assert_eq!(lifted, scaled);
        }
    }

    #[test]
    fn growth_fits_match_known_invariants() {
        let c6 = ctx(3, 6);
        let mu_tower = Tower::build(
            &elem_mod(c6, &[1], &[]),
            &SubmoduleSpec::empty(),
            1,
            4,
            CAP,
        )
        .unwrap();
        let fit = fit_invariants(&mu_tower).unwrap();
        assert_eq!((fit.mu, fit.lambda, fit.nu), (1, 0, 0));

        let c7 = ctx(3, 7);
        let la_tower = Tower::build(
            &elem_mod(c7, &[], &[(t_minus_p(c7), 1)]),
            &SubmoduleSpec::empty(),
            0,
            3,
            CAP,
        )
        .unwrap();
        let fit = fit_invariants(&la_tower).unwrap();
        assert_eq!((fit.mu, fit.lambda, fit.nu), (0, 1, 1));
        assert_eq!(fit.n0_fit, 0);

        let mixed = Tower::build(
            &elem_mod(c7, &[1], &[(t_minus_p(c7), 1)]),
            &SubmoduleSpec::empty(),
            1,
            3,
            CAP,
        )
        .unwrap();
        let fit = fit_invariants(&mixed).unwrap();
        assert_eq!((fit.mu, fit.lambda, fit.nu), (1, 1, 1));
    }

    #[test]
    fn fit_solver_edge_cases() {
        assert_eq!(
            fit_from_log_sizes(3, &[(1, 1), (2, 2)]).unwrap_err(),
            ModuleError::InsufficientLevels {
                needed: 3,
                found: 2
            }
        );
        assert_eq!(
            fit_from_log_sizes(3, &[(1, 1), (2, 2), (3, 4)]).unwrap_err(),
            ModuleError::NoExactFit
        );
        let fit = fit_from_log_sizes(3, &[(0, 5), (1, 2), (2, 3), (3, 4)]).unwrap();
        assert_eq!((fit.mu, fit.lambda, fit.nu, fit.n0_fit), (0, 1, 1, 1));
    }

    #[test]
    fn classify_elementary_elements() {
        let c = ctx(3, 6);
        let base = ElementaryModule::new(c, vec![2], vec![(t_minus_p(c), 1)]).unwrap();
        let module: IwasawaModule = base.clone().into();
        assert_eq!(
            classify_element(&module, &base.zero_element(), 2, CAP).unwrap(),
            ElementClass::FiniteType
        );
        assert_eq!(
            classify_element(&module, &base.mu_generator(0), 2, CAP).unwrap(),
            ElementClass::MuType
        );
        assert_eq!(
            classify_element(&module, &base.lambda_generator(0), 2, CAP).unwrap(),
            ElementClass::LambdaType
        );
        let mixed = &base.mu_generator(0) + &base.lambda_generator(0);
        match classify_element(&module, &mixed, 2, CAP).unwrap() {
            ElementClass::IndecomposedCandidate { mu_part, lambda_part } => {
                assert_eq!(*mu_part, base.mu_generator(0));
                assert_eq!(*lambda_part, base.lambda_generator(0));
            }
            other => panic!("expected a mixed candidate, got {other:?}"),
        }
    }

    #[test]
    fn classify_glue_elements() {
        let c = ctx(3, 6);
        let base = ElementaryModule::new(c, vec![2], vec![(t_minus_p(c), 1)]).unwrap();
        let g = &base.mu_generator(0).scale(3) + &base.lambda_generator(0);
        let module: IwasawaModule = GlueQuotient::new(base.clone(), vec![g]).unwrap().into();
        let phi = base.mu_generator(0).scale(3);
        assert_eq!(
            classify_element(&module, &phi, 3, CAP).unwrap(),
            ElementClass::FiniteType
        );
        assert_eq!(
            classify_element(&module, &base.lambda_generator(0), 3, CAP).unwrap(),
            ElementClass::FiniteType
        );
        assert_eq!(
            classify_element(&module, &base.mu_generator(0), 3, CAP).unwrap(),
            ElementClass::MuType
        );
    }

    #[test]
    fn lmfd_parts_and_intersection_sizes() {
        let c = ctx(3, 6);
        let base = ElementaryModule::new(c, vec![2], vec![(t_minus_p(c), 1)]).unwrap();
        let elementary: IwasawaModule = base.clone().into();
        let parts = submodules_lmfd(&elementary);
        assert!(parts.f.is_empty());
        assert_eq!(parts.l.generators().len(), 1);
        assert_eq!(parts.m.generators().len(), 1);
        assert_eq!(parts.d.generators().len(), 2);

        let g = &base.mu_generator(0).scale(3) + &base.lambda_generator(0);
        let glued: IwasawaModule = GlueQuotient::new(base, vec![g]).unwrap().into();
        let parts = submodules_lmfd(&glued);
        assert_eq!(parts.f.generators().len(), 1);
        let data = finite_level_data(&glued, &SubmoduleSpec::empty(), 2, CAP).unwrap();
        let size = |gens: &[ModuleElement]| -> i64 {
            subgroup_invariants(&data.lambda_span(gens), data.group())
                .unwrap()
                .order_exponent() as i64
        };
        let l = size(parts.l.generators());
        let m = size(parts.m.generators());
        let d = size(parts.d.generators());
        let f = size(parts.f.generators());
        assert_eq!(l + m - d, f);
    }

    #[test]
    fn l_and_d_order_examples() {
        let c = ctx(3, 6);
        let base = ElementaryModule::new(c, vec![2], vec![(t_minus_p(c), 1)]).unwrap();
        let elementary: IwasawaModule = base.clone().into();
        let (ell, delta) = l_and_d_orders(&elementary, &base.mu_generator(0), 4, 2, CAP).unwrap();
        assert_eq!((ell, delta), (2, 0));
        let (ell, delta) =
            l_and_d_orders(&elementary, &base.lambda_generator(0), 4, 2, CAP).unwrap();
        assert_eq!((ell, delta), (0, 0));

        let g = &base.mu_generator(0).scale(3) + &base.lambda_generator(0);
        let glued: IwasawaModule = GlueQuotient::new(base.clone(), vec![g]).unwrap().into();
        let (ell, delta) = l_and_d_orders(&glued, &base.mu_generator(0), 4, 3, CAP).unwrap();
        assert_eq!((ell, delta), (1, 0));
    }

    #[test]
    fn essential_orders_match_hand_computation() {
        let c = ctx(3, 7);
        let base =
            ElementaryModule::new(c, vec![3, 2], vec![(t_minus_p(c), 1)]).unwrap();
        let elementary: IwasawaModule = base.clone().into();
        let x = base.mu_generator(0).scale(3);
        assert_eq!(essential_order(&elementary, &x, 3, CAP).unwrap(), 9);
        assert_eq!(
            essential_order(&elementary, &base.lambda_generator(0), 3, CAP).unwrap_err(),
            ModuleError::NotTorsionType
        );

        let g = &base.mu_generator(1).scale(3) + &base.lambda_generator(0);
        let glued: IwasawaModule = GlueQuotient::new(base.clone(), vec![g]).unwrap().into();
        let phi = base.mu_generator(1).scale(3);
        assert_eq!(essential_order(&glued, &phi, 3, CAP).unwrap(), 1);
        let mixed = &base.mu_generator(0).scale(3) + &phi;
        assert_eq!(essential_order(&glued, &mixed, 3, CAP).unwrap(), 9);
    }

    #[test]
    fn distance_examples() {
        let c = ctx(3, 5);
        let mu_mod = elem_mod(c, &[1], &[]);
        let tower = Tower::build(&mu_mod, &SubmoduleSpec::empty(), 1, 2, CAP).unwrap();
        let gen = mu_mod.base().mu_generator(0);
        let zero = mu_mod.base().zero_element();
        assert_eq!(distance(&tower, &gen, &zero, 1).unwrap(), 3);
        assert_eq!(distance(&tower, &gen, &zero, 2).unwrap(), 9);
        assert_eq!(distance(&tower, &gen, &gen, 2).unwrap(), 0);

        let c7 = ctx(3, 7);
        let la_mod = elem_mod(c7, &[], &[(t_minus_p(c7), 1)]);
        let tower = Tower::build(&la_mod, &SubmoduleSpec::empty(), 1, 2, CAP).unwrap();
        let gen = la_mod.base().lambda_generator(0);
        let zero = la_mod.base().zero_element();
        assert_eq!(distance(&tower, &gen, &zero, 2).unwrap(), 1);
    }

    #[test]
    fn coinvariants_match_hand_presentations() {
        let c = ctx(3, 6);
        assert_eq!(
            t_coinvariants(&elem_mod(c, &[1], &[]))
                .unwrap()
                .group()
                .factors(),
            &[1]
        );
        assert_eq!(
            t_coinvariants(&elem_mod(c, &[], &[(t_minus_p(c), 1)]))
                .unwrap()
                .group()
                .factors(),
            &[1]
        );
        let t = LambdaElt::t(c);
        assert_eq!(
            t_coinvariants(&elem_mod(c, &[], &[(t, 1)])).unwrap_err(),
            ModuleError::InfiniteCoinvariants
        );
        let base = ElementaryModule::new(c, vec![2], vec![(t_minus_p(c), 1)]).unwrap();
        let g = &base.mu_generator(0).scale(3) + &base.lambda_generator(0);
        let glued: IwasawaModule = GlueQuotient::new(base, vec![g]).unwrap().into();
        assert_eq!(t_coinvariants(&glued).unwrap().group().factors(), &[2]);
    }

    #[test]
    fn h1_examples() {
        let c = ctx(3, 7);
        let base = ElementaryModule::new(c, vec![], vec![(t_minus_p(c), 1)]).unwrap();
        let whole = SubmoduleSpec::whole(&base);
        let x: IwasawaModule = base.clone().into();
        let tower = Tower::build(&x, &whole, 0, 2, CAP).unwrap();
        for n in 0..=2u32 {
            let report = h1_iwasawa(&tower, n).unwrap();
            assert_eq!(report.group.factors(), &[1]);
            assert!(report.matches_stable_form);
        }
        let empty_tower = Tower::build(&x, &SubmoduleSpec::empty(), 0, 2, CAP).unwrap();
        let report = h1_iwasawa(&empty_tower, 1).unwrap();
        assert_eq!(report.group.p_rank(), 0);
        assert!(report.matches_stable_form);

        let mu_base = ElementaryModule::new(c, vec![1], vec![]).unwrap();
        let inside = SubmoduleSpec::new(vec![mu_base.mu_generator(0).mul_t()]);
        let mu_mod: IwasawaModule = mu_base.into();
        let tower = Tower::build(&mu_mod, &inside, 1, 2, CAP).unwrap();
        let report = h1_iwasawa(&tower, 2).unwrap();
        assert_eq!(report.group.p_rank(), 0);
        assert!(report.matches_stable_form);
    }

    #[test]
    fn property_f_examples() {
        let c = ctx(3, 6);
        let mu_base = ElementaryModule::new(c, vec![1], vec![]).unwrap();
        let mu_mod: IwasawaModule = mu_base.clone().into();
        let on_gen = SubmoduleSpec::new(vec![mu_base.mu_generator(0)]);
        assert!(!property_f_check(&mu_mod, &on_gen, 2, CAP).unwrap());
        let shifted = SubmoduleSpec::new(vec![mu_base.mu_generator(0).mul_t()]);
        assert!(property_f_check(&mu_mod, &shifted, 2, CAP).unwrap());

        let la_base = ElementaryModule::new(c, vec![], vec![(t_minus_p(c), 1)]).unwrap();
        let la_mod: IwasawaModule = la_base.clone().into();
        let p_gen = SubmoduleSpec::new(vec![la_base.lambda_generator(0).scale(3)]);
        assert!(property_f_check(&la_mod, &p_gen, 2, CAP).unwrap());
        let unit = SubmoduleSpec::new(vec![la_base.lambda_generator(0)]);
        assert!(!property_f_check(&la_mod, &unit, 2, CAP).unwrap());

        let base = ElementaryModule::new(c, vec![2], vec![(t_minus_p(c), 1)]).unwrap();
        let g = &base.mu_generator(0).scale(3) + &base.lambda_generator(0);
        let glued: IwasawaModule = GlueQuotient::new(base.clone(), vec![g]).unwrap().into();
        let in_tx = SubmoduleSpec::new(vec![base.mu_generator(0).mul_t()]);
        assert!(property_f_check(&glued, &in_tx, 2, CAP).unwrap());
        let out_tx = SubmoduleSpec::new(vec![base.mu_generator(0)]);
        assert!(!property_f_check(&glued, &out_tx, 2, CAP).unwrap());
    }

    #[test]
    fn glue_collapse_keeps_levels_constant() {
        let c = ctx(3, 7);
        let base = ElementaryModule::new(c, vec![1], vec![(t_minus_p(c), 1)]).unwrap();
        let g = &base.mu_generator(0) + &base.lambda_generator(0);
        let glued: IwasawaModule = GlueQuotient::new(base, vec![g]).unwrap().into();
        let tower = Tower::build(&glued, &SubmoduleSpec::empty(), 1, 3, CAP).unwrap();
        for lvl in tower.levels() {
            assert_eq!(lvl.group().factors(), &[1]);
        }
        let fit = fit_invariants(&tower).unwrap();
        assert_eq!((fit.mu, fit.lambda, fit.nu), (0, 0, 1));
    }
}
