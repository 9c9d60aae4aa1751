//! Deterministic plain-text reports shared by the command-line driver and
//! the browser demo.
//!
//! Every function renders UTF-8 text with LF line endings and no
//! timestamps or other ambient state, so identical inputs produce
//! byte-identical reports. Tables are TSV with a header row; scalar
//! reports are `key=value` lines in a fixed order.

use std::fmt::Write as _;

use crate::cohomology::{h_hat_0, h_hat_1, CohomologyError, FModule};
use crate::formulas::{
    hasse_norm_defect_exponent, kida_lambda_minus, m_plus_rank, omega_rank, FormulaError,
    KidaInput, NormDefectInput, RankBookkeeping,
};
use crate::group_ring::{norm_decomposition, GroupRingElt};
use crate::lambda::{
    min_level_for_membership, nmm_congruence_search, nu, omega, LambdaElt, LambdaError,
};
use crate::modspec::TowerSpec;
use crate::module::{fit_invariants, GrowthFit, ModuleError, Tower};
use crate::padic::PrimeContext;
use crate::pgroup::TransitionReport;
use crate::stabilization::StabilizationReport;

/// Builds the tower a specification describes, level by level in order.
pub fn build_tower(spec: &TowerSpec) -> Result<Tower, ModuleError> {
    Tower::build(&spec.module, &spec.y, spec.n_min, spec.n_max, spec.degree_cap)
}

/// One TSV row per level: n, log_p_size, p_rank, exponent_exp,
/// subexponent_exp.
pub fn simulate_report(tower: &Tower) -> String {
    let mut out = String::from("n\tlog_p_size\tp_rank\texponent_exp\tsubexponent_exp\n");
    for level in tower.levels() {
        let group = level.group();
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            level.level(),
            group.order_exponent(),
            group.p_rank(),
            group.exponent_exp(),
            group.subexponent_exp()
        )
        .expect("string writes cannot fail");
    }
    out
}

/// Fits the growth exponents and renders them as key=value lines.
pub fn fit_report(fit: &GrowthFit) -> String {
    format!(
        "mu={}\nlambda={}\nnu={}\nn0_fit={}\n",
        fit.mu, fit.lambda, fit.nu, fit.n0_fit
    )
}

fn opt_u32(value: Option<u32>) -> String {
    match value {
        Some(v) => v.to_string(),
        None => "none".to_string(),
    }
}

/// Renders a stabilization report as key=value lines in a fixed order.
pub fn stabilize_report(report: &StabilizationReport) -> String {
    let mut out = String::new();
    let pairs = [
        ("criterion1_level", opt_u32(report.criterion1_level)),
        ("criterion2_level", opt_u32(report.criterion2_level)),
        ("criterion3_level", opt_u32(report.criterion3_level)),
        ("x_finite", report.x_finite.to_string()),
        ("mu_zero", report.mu_zero.to_string()),
        ("h_stable", report.h_stable.to_string()),
        ("f_index", opt_u32(report.parts.f_index)),
        ("l_index", opt_u32(report.parts.l_index)),
        ("h_index", opt_u32(report.parts.h_index)),
        ("m_index", opt_u32(report.parts.m_index)),
        ("stabilization_index", opt_u32(report.stabilization_index)),
        ("visibility_index", opt_u32(report.visibility_index)),
    ];
    for (key, value) in pairs {
        writeln!(out, "{key}={value}").expect("string writes cannot fail");
    }
    out
}

/// Least level m with nu_(m,0) in (h, p^bound), as a single key=value line.
pub fn membership_report(
    ctx: PrimeContext,
    h: &LambdaElt,
    bound: u32,
    degree_cap: u64,
) -> Result<String, LambdaError> {
    let m = min_level_for_membership(ctx, h, bound, degree_cap)?;
    Ok(format!("m={m}\n"))
}

fn fnv64<I: Iterator<Item = u64>>(values: I) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for value in values {
        for byte in value.to_le_bytes() {
            hash ^= byte as u64;
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    hash
}

/// Searches for the congruence witness nu_(2M,0) = Q f omega_M mod
/// p^bound and reconstructs it independently. The flag is false only if
/// the reconstruction fails, which indicates an internal defect.
pub fn nmm_report(
    ctx: PrimeContext,
    f: &LambdaElt,
    bound: u32,
    degree_cap: u64,
) -> Result<(String, bool), LambdaError> {
    let witness = nmm_congruence_search(ctx, f, bound, degree_cap)?;
    let m = witness.level;
    let lhs = nu(ctx, 2 * m, 0, degree_cap)?;
    let rhs = &(&witness.quotient * f) * &omega(ctx, m, degree_cap)?;
    let difference = &lhs - &rhs;
    let verified = difference.is_zero() || difference.min_coeff_valuation() >= bound;
    let degree = match witness.quotient.degree() {
        Some(d) => d.to_string(),
        None => "none".to_string(),
    };
    let digest = fnv64(witness.quotient.coeffs().iter().copied());
    let remainder_valuation = if witness.remainder.is_zero() {
        ctx.precision().to_string()
    } else {
        witness.remainder.min_coeff_valuation().to_string()
    };
    let text = format!(
        "M={m}\nQ_degree={degree}\nQ_digest={digest:016x}\n\
         remainder_min_valuation={remainder_valuation}\nverified={verified}\n"
    );
    Ok((text, verified))
}

fn order_string(p: u64, exponent: u64) -> String {
    u32::try_from(exponent)
        .ok()
        .and_then(|e| (p as u128).checked_pow(e))
        .map(|order| order.to_string())
        .unwrap_or_else(|| format!("{p}^{exponent}"))
}

/// Orders of the two Tate cohomology groups, plus whether they agree. The
/// flag is false exactly when the order equality fails.
pub fn cohomology_report(module: &FModule) -> Result<(String, bool), CohomologyError> {
    let p = module.group().ctx().p();
    let h0 = h_hat_0(module)?;
    let h1 = h_hat_1(module)?;
    let equal = h0.order_exponent() == h1.order_exponent();
    let text = format!(
        "h0_log_order={}\nh1_log_order={}\nh0_order={}\nh1_order={}\nherbrand_equal={equal}\n",
        h0.order_exponent(),
        h1.order_exponent(),
        order_string(p, h0.order_exponent()),
        order_string(p, h1.order_exponent()),
    );
    Ok((text, equal))
}

fn opt_bool(value: Option<bool>) -> String {
    match value {
        Some(v) => v.to_string(),
        None => "none".to_string(),
    }
}

/// Renders a transition report as key=value lines. The flag is false
/// exactly when the hypotheses hold but a checked conclusion fails.
pub fn transition_report_text(report: &TransitionReport) -> (String, bool) {
    let mut out = String::new();
    let pairs = [
        ("norm_surjective", report.norm_surjective.to_string()),
        ("equal_p_ranks", report.equal_p_ranks.to_string()),
        ("index_matches_rank", report.index_matches_rank.to_string()),
        (
            "norm_after_lift_is_mult_p",
            report.norm_after_lift_is_mult_p.to_string(),
        ),
        ("hypotheses_hold", report.hypotheses_hold.to_string()),
        ("conclusion_a", opt_bool(report.conclusion_a)),
        (
            "subexponent_exceeds_p",
            report.subexponent_exceeds_p.to_string(),
        ),
        ("lift_image_equals_p_b", opt_bool(report.lift_image_equals_p_b)),
        (
            "socle_equals_norm_kernel",
            opt_bool(report.socle_equals_norm_kernel),
        ),
        (
            "norm_kernel_in_lift_image",
            opt_bool(report.norm_kernel_in_lift_image),
        ),
        ("order_identity_holds", opt_bool(report.order_identity_holds)),
        ("conclusion_b", opt_bool(report.conclusion_b)),
        (
            "order_check_exhaustive",
            report.order_check_exhaustive.to_string(),
        ),
        ("order_check_samples", report.order_check_samples.to_string()),
    ];
    for (key, value) in pairs {
        writeln!(out, "{key}={value}").expect("string writes cannot fail");
    }
    let ok = if report.hypotheses_hold {
        report.conclusion_a == Some(true)
            && (!report.subexponent_exceeds_p || report.conclusion_b == Some(true))
    } else {
        true
    };
    (out, ok)
}

/// Lambda-minus under a degree-[L:K] base change with ramification e.
pub fn kida_report(input: KidaInput) -> String {
    format!("lambda_minus={}\n", kida_lambda_minus(input))
}

/// Log order of the norm defect group between two tower levels.
pub fn hasse_report(input: NormDefectInput) -> Result<String, FormulaError> {
    let exponent = hasse_norm_defect_exponent(input)?;
    Ok(format!("defect_log_order={exponent}\n"))
}

/// Splits the algebraic norm both ways and re-checks each identity. The
/// flag is false only if a reconstruction fails.
pub fn norm_report(ctx: PrimeContext) -> (String, bool) {
    let p = ctx.p();
    let decomposition = norm_decomposition(ctx);
    let p_const = GroupRingElt::from_coeffs(ctx, &[p]);
    let s = GroupRingElt::s(ctx);
    let mut s_power = GroupRingElt::one(ctx);
    for _ in 0..p - 1 {
        s_power = &s_power * &s;
    }
    let unit_split = &(&p_const * &decomposition.unit_part) + &s_power;
    let unit_split_ok = (&unit_split - &decomposition.norm).is_zero();
    let tail_split = &p_const + &(&s * &decomposition.tail_part);
    let tail_split_ok = (&tail_split - &decomposition.norm).is_zero();
    let s_norm_zero = (&s * &decomposition.norm).is_zero();
    let unit_constant = decomposition.unit_part.coeff(0);
    let unit_constant_is_unit = !unit_constant.is_multiple_of(p);
    let ok = unit_split_ok && tail_split_ok && s_norm_zero && unit_constant_is_unit;
    let text = format!(
        "p={p}\nunit_constant={unit_constant}\nunit_constant_is_unit={unit_constant_is_unit}\n\
         norm_equals_p_unit_plus_s_power={unit_split_ok}\n\
         norm_equals_p_plus_s_tail={tail_split_ok}\ns_times_norm_is_zero={s_norm_zero}\n"
    );
    (text, ok)
}

/// Rank bookkeeping for the p-ramified Galois group and its plus part.
pub fn rank_report(input: RankBookkeeping) -> String {
    format!(
        "omega_rank={}\nm_plus_rank={}\n",
        omega_rank(input),
        m_plus_rank(input)
    )
}

/// Convenience wrapper: fit straight from a specification.
pub fn fit_from_spec(spec: &TowerSpec) -> Result<GrowthFit, ModuleError> {
    let tower = build_tower(spec)?;
    fit_invariants(&tower)
}
