//! Exact arithmetic for Iwasawa-theoretic computations at a fixed odd prime p.
//!
//! Everything here works to a declared p-adic precision K: scalars live in
//! Z/p^K, power series are truncated to polynomials with coefficients in
//! Z/p^K, and every answer is either exact at that precision or an explicit
//! error. There is no floating point anywhere in the workspace.
//!
//! The layers, bottom to top:
//!
//! * [`padic`]: scalars in Z/p^K with valuation, inversion, powering.
//! * [`lambda`]: the Iwasawa algebra Λ = Z_p\[\[T\]\] at precision, with the
//!   cyclotomic elements ω_n = (1+T)^(p^n) - 1 and ν_(n,m) = ω_n/ω_m,
//!   division with remainder, Weierstrass preparation, ideal membership.
//! * [`group_ring`]: Z_p\[s\]/((1+s)^p - 1) and the algebraic norm element.
//! * [`pgroup`]: finite abelian p-groups, homomorphisms, Smith normal form
//!   over Z/p^K, and the norm/lift transition lemma checker.
//! * [`cohomology`]: Tate cohomology of a cyclic p-group action.
//! * [`module`]: elementary Λ-modules and glue quotients, finite tower
//!   levels X/(ω_n X + ν_(n,0) Y), growth-invariant fitting, the L/M/F/D
//!   submodule bookkeeping, essential orders, and tower element checks.
//! * [`stabilization`]: Fukuda-style stabilization detection and the
//!   visibility index of a submodule.
//! * [`formulas`]: closed-form identities (Kida's minus-part transfer,
//!   Hasse norm defect exponents, reflection-style rank bookkeeping).
//! * [`modspec`] and [`runner`]: the on-disk problem format and the
//!   deterministic text reports shared by the CLI and the browser demo.
//!
//! Indexing convention: levels are normalized so that ω_0 = T. Quotients by
//! the full first layer therefore use ν_(n,0) where classical sources
//! sometimes write ν_(n,1) with ω_1 = T.

pub mod cohomology;
pub mod formulas;
pub mod group_ring;
pub mod lambda;
pub mod modspec;
pub mod module;
pub mod padic;
pub mod pgroup;
pub mod runner;
pub mod stabilization;

pub use padic::{PAdicInt, PadicError, PrimeContext};
