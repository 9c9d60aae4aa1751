//! Fukuda-type stabilization detection on towers: isomorphism stabilization,
//! p-rank stabilization, and T-coinvariant stabilization, together with
//! per-part stability indices and the visibility index of a submodule with
//! respect to an ideal.

use crate::lambda::LambdaElt;
use crate::module::{
    finite_level_data, h1_iwasawa, lambda_span_contains, submodules_lmfd, LevelData,
    ModuleElement, ModuleError, SubmoduleSpec, Tower,
};
use crate::padic::PrimeContext;
use crate::pgroup::{solve_in_subgroup, subgroup_invariants, FinitePGroup, PGroupError};
use thiserror::Error;

/// Errors from stabilization detection and visibility search.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StabilizationError {
    /// A criterion fired but a later computed level contradicts its
    /// conclusion; this cannot happen for a genuine tower and signals an
    /// implementation bug.
    #[error("criterion {criterion} fired at level {fired_at} but level {violated_at} contradicts it")]
    PostFireViolation {
        criterion: u32,
        fired_at: u32,
        violated_at: u32,
    },
    /// No computed level makes every sampled element visible.
    #[error("no computed level makes every sampled element of C visible")]
    NotVisibleWithinRange,
    #[error(transparent)]
    Module(#[from] ModuleError),
}

impl From<PGroupError> for StabilizationError {
    fn from(e: PGroupError) -> Self {
        StabilizationError::Module(ModuleError::PGroup(e))
    }
}

/// The ideal against which visibility is measured.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IdealChoice {
    /// The maximal ideal (p, T).
    Maximal,
    /// The ideal (p).
    P,
    /// The ideal (T).
    T,
}

/// Per-part stability indices: the least computed level from which the
/// tracked quantity is constant through the top of the tower (a suffix of at
/// least two levels), or None if it never settles in range.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartStability {
    /// Invariant factors of the level image of the glue span.
    pub f_index: Option<u32>,
    /// p-rank of the level image of the polynomial-part span.
    pub l_index: Option<u32>,
    /// Agreement of Y_n / omega_n X with the image of Y in X/TX.
    pub h_index: Option<u32>,
    /// p-rank of the level image of the torsion-part span.
    pub m_index: Option<u32>,
}

/// Result of scanning a tower for the three stabilization criteria.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StabilizationReport {
    /// First n with X_n isomorphic to X_{n+1} via a surjective norm.
    pub criterion1_level: Option<u32>,
    /// First n with p-rk(X_n) = p-rk(X_{n+1}) > 0.
    pub criterion2_level: Option<u32>,
    /// First n with V_n isomorphic to V_{n+1} and nonzero, V_n = X_n/TX_n.
    pub criterion3_level: Option<u32>,
    /// Criterion 1 fired: the levels are isomorphic from there on and the
    /// limit is finite.
    pub x_finite: bool,
    /// Criterion 2 fired: the p-rank is stable and the mu invariant is 0.
    pub mu_zero: bool,
    /// Criterion 3 fired: the T-coinvariants are stable from there on.
    pub h_stable: bool,
    /// Stability indices of the four tracked parts.
    pub parts: PartStability,
    /// Default visibility index: least computed level at which every
    /// sampled element of X outside the maximal-ideal span is nonzero.
    pub visibility_index: Option<u32>,
    /// Least computed level from which all four parts are stable.
    pub stabilization_index: Option<u32>,
}

fn scalar_samples(ctx: PrimeContext, ideal: IdealChoice) -> Vec<LambdaElt> {
    let one = LambdaElt::one(ctx);
    let two = LambdaElt::constant(ctx, 2);
    let one_plus_t = LambdaElt::from_coeffs(ctx, &[1, 1]);
    match ideal {
        IdealChoice::Maximal => vec![one, two, one_plus_t],
        IdealChoice::P => vec![one, two, LambdaElt::t(ctx), one_plus_t],
        IdealChoice::T => vec![one, two, LambdaElt::constant(ctx, ctx.p()), one_plus_t],
    }
}

fn ideal_multipliers(ctx: PrimeContext, ideal: IdealChoice) -> Vec<LambdaElt> {
    match ideal {
        IdealChoice::Maximal => vec![LambdaElt::constant(ctx, ctx.p()), LambdaElt::t(ctx)],
        IdealChoice::P => vec![LambdaElt::constant(ctx, ctx.p())],
        IdealChoice::T => vec![LambdaElt::t(ctx)],
    }
}

/// Zero-class test data: the module's own top level when it is finite, the
/// tower's top level otherwise.
fn zero_class_data(tower: &Tower) -> Result<LevelData, StabilizationError> {
    match finite_level_data(
        tower.module(),
        &SubmoduleSpec::empty(),
        tower.n_max(),
        tower.degree_cap(),
    ) {
        Ok(d) => Ok(d),
        Err(ModuleError::InfiniteQuotient { .. }) => Ok(tower
            .level(tower.n_max())
            .expect("tower top level exists")
            .data()
            .clone()),
        Err(e) => Err(e.into()),
    }
}

/// Whether x lies in the T-closed span of the ideal multiples of C's
/// generators, checked in the module itself when its levels are finite and
/// along the tower's own levels otherwise. A negative verdict is exact.
fn in_ideal_span(
    tower: &Tower,
    ic_gens: &[ModuleElement],
    x: &ModuleElement,
) -> Result<bool, StabilizationError> {
    let max_level = tower.n_max().max(1);
    match lambda_span_contains(tower.module(), ic_gens, x, max_level, tower.degree_cap()) {
        Ok(verdict) => Ok(verdict.holds()),
        Err(ModuleError::InfiniteQuotient { .. }) => {
            for lvl in tower.levels() {
                let span = lvl.data().lambda_span(ic_gens);
                let target = lvl.data().element_coords(x);
                if solve_in_subgroup(&span, &target)?.is_none() {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        Err(e) => Err(e.into()),
    }
}

/// Least computed level v such that every sampled element of C outside I*C
/// has nonzero image at level v. Samples are scalar multiples of the
/// generators plus pairwise generator sums; representatives of the zero
/// class and members of the I*C span are dropped (the latter decided by the
/// level-checked span membership, so I*C relations like T = p in
/// Lambda/(T - p) are respected). C = 0, or a C entirely inside I*C,
/// returns the lowest computed level by convention (the quantifier is
/// vacuous). Visibility is monotone along the tower (norms carry level n+1
/// images onto level n images), so the minimum is well-defined;
/// NotVisibleWithinRange if no computed level works.
pub fn visibility_index(
    tower: &Tower,
    c: &SubmoduleSpec,
    ideal: IdealChoice,
) -> Result<u32, StabilizationError> {
    if c.is_empty() {
        return Ok(tower.n_min());
    }
    for g in c.generators() {
        if g.base() != tower.module().base() {
            return Err(ModuleError::ModuleMismatch.into());
        }
    }
    let ctx = tower.module().ctx();
    let mut samples: Vec<ModuleElement> = Vec::new();
    for g in c.generators() {
        for s in scalar_samples(ctx, ideal) {
            samples.push(g.scale_poly(&s));
        }
    }
    for (i, gi) in c.generators().iter().enumerate() {
        for gj in c.generators().iter().skip(i + 1) {
            samples.push(gi + gj);
        }
    }
    let top = zero_class_data(tower)?;
    samples.retain(|x| !top.element_coords(x).is_zero());
    let ic_gens: Vec<ModuleElement> = c
        .generators()
        .iter()
        .flat_map(|g| {
            ideal_multipliers(ctx, ideal)
                .into_iter()
                .map(|m| g.scale_poly(&m))
        })
        .collect();
    let mut kept = Vec::with_capacity(samples.len());
    for x in samples {
        if !in_ideal_span(tower, &ic_gens, &x)? {
            kept.push(x);
        }
    }
    if kept.is_empty() {
        return Ok(tower.n_min());
    }
    for k in tower.n_min()..=tower.n_max() {
        let all_visible = kept
            .iter()
            .map(|x| tower.element_at(x, k))
            .collect::<Result<Vec<_>, _>>()?
            .iter()
            .all(|img| !img.is_zero());
        if all_visible {
            return Ok(k);
        }
    }
    Err(StabilizationError::NotVisibleWithinRange)
}

fn span_invariants(
    data: &LevelData,
    gens: &[ModuleElement],
) -> Result<FinitePGroup, StabilizationError> {
    if gens.is_empty() {
        return Ok(FinitePGroup::trivial(data.group().ctx()));
    }
    Ok(subgroup_invariants(&data.lambda_span(gens), data.group())?)
}

fn suffix_constant_index<T: PartialEq>(vals: &[T], n_min: u32) -> Option<u32> {
    if vals.len() < 2 {
        return None;
    }
    let mut idx = vals.len() - 1;
    while idx > 0 && vals[idx - 1] == vals[idx] {
        idx -= 1;
    }
    if vals.len() - idx >= 2 {
        Some(n_min + idx as u32)
    } else {
        None
    }
}

fn suffix_true_index(flags: &[bool], n_min: u32) -> Option<u32> {
    if flags.len() < 2 {
        return None;
    }
    let mut idx = flags.len();
    while idx > 0 && flags[idx - 1] {
        idx -= 1;
    }
    if flags.len() - idx >= 2 {
        Some(n_min + idx as u32)
    } else {
        None
    }
}

/// Scans consecutive level pairs bottom-up, reports the first level at which
/// each criterion fires, and verifies each fired criterion's conclusion
/// against every later computed level. Also computes the per-part stability
/// indices, their combined stabilization index, and the default visibility
/// index (C = whole module, I = maximal ideal).
pub fn detect(tower: &Tower) -> Result<StabilizationReport, StabilizationError> {
    let levels = tower.levels();
    if levels.len() < 2 {
        return Err(ModuleError::InsufficientLevels {
            needed: 2,
            found: levels.len(),
        }
        .into());
    }
    let n_min = tower.n_min();
    let n_max = tower.n_max();
    let at = |n: u32| &levels[(n - n_min) as usize];

    let v_groups = (n_min..=n_max)
        .map(|n| tower.t_quotient_at(n))
        .collect::<Result<Vec<_>, _>>()?;
    let v_at = |n: u32| &v_groups[(n - n_min) as usize];

    let mut criterion1_level = None;
    let mut criterion2_level = None;
    let mut criterion3_level = None;
    for n in n_min..n_max {
        let a = at(n).group();
        let b = at(n + 1).group();
        if criterion1_level.is_none()
            && a.factors() == b.factors()
            && at(n + 1)
                .norm_to_prev()
                .expect("upper levels carry norms")
                .is_surjective()?
        {
            criterion1_level = Some(n);
        }
        if criterion2_level.is_none() && a.p_rank() == b.p_rank() && a.p_rank() > 0 {
            criterion2_level = Some(n);
        }
        if criterion3_level.is_none()
            && v_at(n).factors() == v_at(n + 1).factors()
            && v_at(n).p_rank() > 0
        {
            criterion3_level = Some(n);
        }
    }

    if let Some(n) = criterion1_level {
        for m in n + 1..=n_max {
            let same = at(m).group().factors() == at(n).group().factors();
            let surjective = at(m)
                .norm_to_prev()
                .expect("upper levels carry norms")
                .is_surjective()?;
            if !same || !surjective {
                return Err(StabilizationError::PostFireViolation {
                    criterion: 1,
                    fired_at: n,
                    violated_at: m,
                });
            }
        }
    }
    if let Some(n) = criterion2_level {
        for m in n + 1..=n_max {
            if at(m).group().p_rank() != at(n).group().p_rank() {
                return Err(StabilizationError::PostFireViolation {
                    criterion: 2,
                    fired_at: n,
                    violated_at: m,
                });
            }
        }
    }
    if let Some(n) = criterion3_level {
        for m in n + 1..=n_max {
            if v_at(m).factors() != v_at(n).factors() {
                return Err(StabilizationError::PostFireViolation {
                    criterion: 3,
                    fired_at: n,
                    violated_at: m,
                });
            }
        }
    }

    let lmfd = submodules_lmfd(tower.module());
    let mut f_vals: Vec<Vec<u32>> = Vec::new();
    let mut l_vals: Vec<usize> = Vec::new();
    let mut m_vals: Vec<usize> = Vec::new();
    let mut h_flags: Vec<bool> = Vec::new();
    for lvl in levels {
        let data = lvl.data();
        f_vals.push(span_invariants(data, lmfd.f.generators())?.factors().to_vec());
        l_vals.push(span_invariants(data, lmfd.l.generators())?.p_rank());
        m_vals.push(span_invariants(data, lmfd.m.generators())?.p_rank());
        h_flags.push(h1_iwasawa(tower, lvl.level())?.matches_stable_form);
    }
    let parts = PartStability {
        f_index: suffix_constant_index(&f_vals, n_min),
        l_index: suffix_constant_index(&l_vals, n_min),
        h_index: suffix_true_index(&h_flags, n_min),
        m_index: suffix_constant_index(&m_vals, n_min),
    };
    let stabilization_index = match (parts.f_index, parts.l_index, parts.h_index, parts.m_index) {
        (Some(f), Some(l), Some(h), Some(m)) => Some(f.max(l).max(h).max(m)),
        _ => None,
    };

    let whole = SubmoduleSpec::whole(tower.module().base());
    let visibility_index = match visibility_index(tower, &whole, IdealChoice::Maximal) {
        Ok(v) => Some(v),
        Err(StabilizationError::NotVisibleWithinRange) => None,
        Err(e) => return Err(e),
    };

    Ok(StabilizationReport {
        criterion1_level,
        criterion2_level,
        criterion3_level,
        x_finite: criterion1_level.is_some(),
        mu_zero: criterion2_level.is_some(),
        h_stable: criterion3_level.is_some(),
        parts,
        visibility_index,
        stabilization_index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::module::{ElementaryModule, GlueQuotient, IwasawaModule};

    fn ctx(p: u64, k: u32) -> PrimeContext {
        PrimeContext::new(p, k).unwrap()
    }

    fn t_minus_p(ctx: PrimeContext) -> LambdaElt {
        LambdaElt::from_i64_coeffs(ctx, &[-(ctx.p() as i64), 1])
    }

    const CAP: u64 = 1 << 12;

    #[test]
    fn lambda_tower_fires_rank_criterion() {
        let c = ctx(3, 7);
        let base = ElementaryModule::new(c, vec![], vec![(t_minus_p(c), 1)]).unwrap();
        let x: IwasawaModule = base.into();
        let tower = Tower::build(&x, &SubmoduleSpec::empty(), 0, 3, CAP).unwrap();
        let report = detect(&tower).unwrap();
        assert_eq!(report.criterion1_level, None);
        assert_eq!(report.criterion2_level, Some(0));
        assert_eq!(report.criterion3_level, Some(0));
        assert!(!report.x_finite);
        assert!(report.mu_zero);
        assert!(report.h_stable);
        assert_eq!(report.stabilization_index, Some(0));
        assert_eq!(report.visibility_index, Some(0));
    }

    #[test]
    fn mu_tower_never_fires_rank_criteria() {
        let c = ctx(3, 6);
        let base = ElementaryModule::new(c, vec![1], vec![]).unwrap();
        let x: IwasawaModule = base.into();
        let tower = Tower::build(&x, &SubmoduleSpec::empty(), 1, 4, CAP).unwrap();
        let report = detect(&tower).unwrap();
        assert_eq!(report.criterion1_level, None);
        assert_eq!(report.criterion2_level, None);
        assert_eq!(report.criterion3_level, Some(1));
        assert!(!report.x_finite);
        assert!(!report.mu_zero);
        assert_eq!(report.parts.m_index, None);
        assert_eq!(report.parts.l_index, Some(1));
        assert_eq!(report.stabilization_index, None);
        assert_eq!(report.visibility_index, Some(1));
    }

    #[test]
    fn constant_glue_tower_fires_isomorphism_criterion() {
        let c = ctx(3, 7);
        let base = ElementaryModule::new(c, vec![1], vec![(t_minus_p(c), 1)]).unwrap();
        let g = &base.mu_generator(0) + &base.lambda_generator(0);
        let glued: IwasawaModule = GlueQuotient::new(base, vec![g]).unwrap().into();
        let tower = Tower::build(&glued, &SubmoduleSpec::empty(), 1, 3, CAP).unwrap();
        let report = detect(&tower).unwrap();
        assert_eq!(report.criterion1_level, Some(1));
        assert_eq!(report.criterion2_level, Some(1));
        assert!(report.x_finite);
        assert_eq!(report.stabilization_index, Some(1));
    }

    #[test]
    fn detect_needs_two_levels() {
        let c = ctx(3, 6);
        let base = ElementaryModule::new(c, vec![1], vec![]).unwrap();
        let x: IwasawaModule = base.into();
        let tower = Tower::build(&x, &SubmoduleSpec::empty(), 1, 1, CAP).unwrap();
        assert_eq!(
            detect(&tower).unwrap_err(),
            StabilizationError::Module(ModuleError::InsufficientLevels {
                needed: 2,
                found: 1
            })
        );
    }

    #[test]
    fn visibility_conventions_and_delay() {
        let c = ctx(3, 7);
        let base = ElementaryModule::new(c, vec![], vec![(t_minus_p(c), 1)]).unwrap();
        let x: IwasawaModule = base.clone().into();
        let plain = Tower::build(&x, &SubmoduleSpec::empty(), 0, 3, CAP).unwrap();
        assert_eq!(
            visibility_index(&plain, &SubmoduleSpec::empty(), IdealChoice::Maximal).unwrap(),
            0
        );
        let whole = SubmoduleSpec::whole(&base);
        assert_eq!(
            visibility_index(&plain, &whole, IdealChoice::Maximal).unwrap(),
            0
        );

        let y = SubmoduleSpec::new(vec![base.lambda_generator(0)]);
        let tower = Tower::build(&x, &y, 1, 3, CAP).unwrap();
        let nu_10 = crate::lambda::nu(c, 1, 0, CAP).unwrap();
        let dies_at_one = base.lambda_generator(0).scale_poly(&nu_10);
        let spec = SubmoduleSpec::new(vec![dies_at_one.clone()]);
        assert!(tower.element_at(&dies_at_one, 1).unwrap().is_zero());
        assert_eq!(
            visibility_index(&tower, &spec, IdealChoice::Maximal).unwrap(),
            2
        );

        let nu_30 = crate::lambda::nu(c, 3, 0, CAP).unwrap();
        let dies_everywhere = base.lambda_generator(0).scale_poly(&nu_30);
        let spec = SubmoduleSpec::new(vec![dies_everywhere]);
        assert_eq!(
            visibility_index(&tower, &spec, IdealChoice::Maximal).unwrap_err(),
            StabilizationError::NotVisibleWithinRange
        );
    }

    #[test]
    fn visibility_respects_ideal_choice() {
        let c = ctx(3, 7);
        let base = ElementaryModule::new(c, vec![], vec![(t_minus_p(c), 1)]).unwrap();
        let x: IwasawaModule = base.clone().into();
        let tower = Tower::build(&x, &SubmoduleSpec::empty(), 0, 2, CAP).unwrap();
        let whole = SubmoduleSpec::whole(&base);
        for ideal in [IdealChoice::Maximal, IdealChoice::P, IdealChoice::T] {
            assert_eq!(visibility_index(&tower, &whole, ideal).unwrap(), 0);
        }
    }

    #[test]
    fn zero_class_samples_are_dropped() {
        let c = ctx(3, 7);
        let base = ElementaryModule::new(c, vec![1], vec![(t_minus_p(c), 1)]).unwrap();
        let g = &base.mu_generator(0) + &base.lambda_generator(0);
        let glued: IwasawaModule = GlueQuotient::new(base.clone(), vec![g.clone()]).unwrap().into();
        let tower = Tower::build(&glued, &SubmoduleSpec::empty(), 1, 3, CAP).unwrap();
        let spec = SubmoduleSpec::new(vec![g]);
        assert_eq!(
            visibility_index(&tower, &spec, IdealChoice::Maximal).unwrap(),
            1
        );
    }
}
