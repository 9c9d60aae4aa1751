//! Browser bindings: tower tabulation with growth fitting, Weierstrass
//! preparation, and Tate cohomology orders.
//!
//! Each export takes plain text and returns a plain-text report built by
//! the same renderers the command-line driver uses, so the page shows
//! byte-identical output. Every failure becomes a single `error: ...`
//! line instead of an exception.

use wasm_bindgen::prelude::*;

use iwasawa_lab::lambda::{weierstrass_prepare, LambdaElt};
use iwasawa_lab::modspec::{parse_action_spec, parse_module_spec};
use iwasawa_lab::module::fit_invariants;
use iwasawa_lab::padic::PrimeContext;
use iwasawa_lab::runner;

fn error_line(err: impl std::fmt::Display) -> String {
    format!("error: {err}\n")
}

/// Tabulates the tower a specification document describes, one TSV row
/// per level, and appends the fitted growth exponents.
#[wasm_bindgen]
pub fn tower_report(spec_json: &str) -> String {
    let spec = match parse_module_spec(spec_json, None) {
        Ok(spec) => spec,
        Err(e) => return error_line(e),
    };
    let tower = match runner::build_tower(&spec) {
        Ok(tower) => tower,
        Err(e) => return error_line(e),
    };
    let mut out = runner::simulate_report(&tower);
    out.push('\n');
    match fit_invariants(&tower) {
        Ok(fit) => out.push_str(&runner::fit_report(&fit)),
        Err(e) => out.push_str(&format!("fit_unavailable={e}\n")),
    }
    out
}

/// Factors a polynomial over Z/p^K as p^mu * unit * distinguished and
/// re-checks the product. Coefficients are comma-separated integers,
/// constant term first; negatives are reduced into range.
#[wasm_bindgen]
pub fn prepare_report(p: u64, precision: u32, coeffs: &str) -> String {
    let ctx = match PrimeContext::new(p, precision) {
        Ok(ctx) => ctx,
        Err(e) => return error_line(e),
    };
    let parsed: Result<Vec<i64>, _> = coeffs
        .split(',')
        .map(|part| part.trim().parse::<i64>())
        .collect();
    let values = match parsed {
        Ok(values) => values,
        Err(_) => return error_line("coefficients must be comma-separated integers"),
    };
    let f = LambdaElt::from_i64_coeffs(ctx, &values);
    let form = match weierstrass_prepare(&f) {
        Ok(form) => form,
        Err(e) => return error_line(e),
    };
    let rebuilt = (&form.unit * &form.distinguished).scale(ctx.p_pow(form.mu_exponent));
    let exact = rebuilt == f;
    format!(
        "input={f}\nmu_exponent={}\ndistinguished={}\nunit={}\nreconstruction_exact={exact}\n",
        form.mu_exponent, form.distinguished, form.unit
    )
}

/// Orders of the two Tate cohomology groups of a cyclic-action document,
/// plus whether they agree.
#[wasm_bindgen]
pub fn cohomology_report(spec_json: &str) -> String {
    let module = match parse_action_spec(spec_json) {
        Ok(module) => module,
        Err(e) => return error_line(e),
    };
    match runner::cohomology_report(&module) {
        Ok((text, _)) => text,
        Err(e) => error_line(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tower_report_tabulates_and_fits() {
        let text = tower_report(
            r#"{"p": 3, "precision": 8, "lambda_factors": [[6558, 1]], "levels": [1, 3]}"#,
        );
        assert!(text.starts_with("n\tlog_p_size\tp_rank\texponent_exp\tsubexponent_exp\n"));
        assert!(text.contains("1\t2\t1\t2\t2\n"));
        assert!(text.contains("\nmu=0\nlambda=1\nnu=1\n"));
    }

    #[test]
    fn tower_report_maps_failures_to_error_lines() {
        let text = tower_report(r#"{"p": 4, "precision": 8, "levels": [1, 2]}"#);
        assert!(text.starts_with("error: "));
        assert_eq!(text.lines().count(), 1);
    }

    #[test]
    fn prepare_report_reconstructs_a_known_factorization() {
        let text = prepare_report(3, 8, "9, 3, 1");
        assert!(text.contains("mu_exponent=0\n"));
        assert!(text.contains("reconstruction_exact=true\n"));

        let scaled = prepare_report(3, 8, "-9, 0, 3");
        assert!(scaled.contains("mu_exponent=1\n"));
        assert!(scaled.contains("reconstruction_exact=true\n"));
    }

    #[test]
    fn prepare_report_rejects_bad_inputs() {
        assert!(prepare_report(4, 8, "1").starts_with("error: "));
        assert!(prepare_report(3, 8, "1, x").starts_with("error: "));
        assert!(prepare_report(3, 8, "0").starts_with("error: "));
    }

    #[test]
    fn cohomology_report_checks_the_order_equality() {
        let text = cohomology_report(r#"{"p": 3, "precision": 4, "factors": [1]}"#);
        assert!(text.contains("h0_order=3\n"));
        assert!(text.contains("herbrand_equal=true\n"));

        let bad = cohomology_report(r#"{"p": 3, "precision": 4, "factors": [1], "extra": 1}"#);
        assert!(bad.starts_with("error: "));
    }
}
