//! Strict structured-text input formats: tower specifications, cyclic
//! group actions, and norm/lift transition data.
//!
//! Documents are JSON with a fixed key set. Unknown keys, missing keys,
//! and out-of-range values are all rejected with a line/column diagnostic
//! before any computation starts, so a rejected input never partially
//! executes.

use serde::Deserialize;
use thiserror::Error;

use crate::cohomology::{CohomologyError, FModule};
use crate::lambda::LambdaElt;
use crate::module::{
    ElementaryModule, GlueQuotient, IwasawaModule, ModuleElement, ModuleError, SubmoduleSpec,
};
use crate::padic::{PadicError, PrimeContext};
use crate::pgroup::{FinitePGroup, PGroupError, PGroupHom, TransitionCheckOptions};

/// Rejection reasons for input documents.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecError {
    /// Malformed document; the message names the line and column.
    #[error("syntax: {0}")]
    Syntax(String),
    /// Invalid prime or precision.
    #[error("prime context: {0}")]
    Prime(#[from] PadicError),
    /// The factors or elements do not form a valid module.
    #[error("module: {0}")]
    Module(#[from] ModuleError),
    /// The factors or columns do not form a valid group datum.
    #[error("group: {0}")]
    Group(#[from] PGroupError),
    /// The action columns do not define a group action of order p.
    #[error("action: {0}")]
    Cohomology(#[from] CohomologyError),
    /// A coefficient fell outside the coefficient ring.
    #[error("{field} entry {index}: coefficient {value} is outside [0, {bound})")]
    CoefficientRange {
        field: &'static str,
        index: usize,
        value: u64,
        bound: u64,
    },
    /// An element or column list had the wrong number of entries.
    #[error("{field} entry {index}: expected {expected} entries, found {found}")]
    EntryCount {
        field: &'static str,
        index: usize,
        expected: usize,
        found: usize,
    },
    /// A column list had the wrong number of columns.
    #[error("{field}: expected {expected} columns, found {found}")]
    ColumnCount {
        field: &'static str,
        expected: usize,
        found: usize,
    },
    /// The requested level range is inverted.
    #[error("levels: n_min {n_min} exceeds n_max {n_max}")]
    LevelOrder { n_min: u32, n_max: u32 },
    /// A degree cap of zero forbids every computation.
    #[error("degree_cap must be positive")]
    DegreeCapZero,
}

/// Tower specification document.
///
/// `mu_factors` lists exponents e with factors Lambda/(p^e); each entry of
/// `lambda_factors` is the coefficient list (constant term first) of a
/// distinguished polynomial f with factor Lambda/(f). `glue` and `Y` list
/// elements of the direct sum, one coefficient list per factor, in
/// mu-then-lambda order. `levels` is the inclusive pair [n_min, n_max].
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModuleSpecFile {
    /// Odd prime p.
    pub p: u64,
    /// Working precision K; coefficients live in Z/p^K.
    pub precision: u32,
    /// Optional cap on polynomial degrees; defaults to p^8.
    #[serde(default)]
    pub degree_cap: Option<u64>,
    /// Exponents of the mu-type factors Lambda/(p^e).
    #[serde(default)]
    pub mu_factors: Vec<u32>,
    /// Coefficient lists of the lambda-type moduli, constant term first.
    #[serde(default)]
    pub lambda_factors: Vec<Vec<u64>>,
    /// Elements whose span is divided out; each needs a nonzero part in
    /// both the mu and lambda blocks.
    #[serde(default)]
    pub glue: Vec<Vec<Vec<u64>>>,
    /// Generators of the auxiliary submodule Y.
    #[serde(default, rename = "Y")]
    pub y: Vec<Vec<Vec<u64>>>,
    /// Inclusive level range [n_min, n_max].
    pub levels: (u32, u32),
}

/// A fully validated tower specification, ready to run.
#[derive(Debug, Clone)]
pub struct TowerSpec {
    /// Coefficient ring context.
    pub ctx: PrimeContext,
    /// The module whose tower is computed.
    pub module: IwasawaModule,
    /// Auxiliary submodule entering each level quotient.
    pub y: SubmoduleSpec,
    /// First level.
    pub n_min: u32,
    /// Last level.
    pub n_max: u32,
    /// Degree cap for all polynomial computations.
    pub degree_cap: u64,
}

/// Default degree cap p^8, saturating for very large primes.
pub fn default_degree_cap(p: u64) -> u64 {
    p.checked_pow(8).unwrap_or(u64::MAX)
}

fn from_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, SpecError> {
    serde_json::from_str(text).map_err(|e| SpecError::Syntax(e.to_string()))
}

fn check_coeffs(
    field: &'static str,
    index: usize,
    coeffs: &[u64],
    bound: u64,
) -> Result<(), SpecError> {
    for &value in coeffs {
        if value >= bound {
            return Err(SpecError::CoefficientRange {
                field,
                index,
                value,
                bound,
            });
        }
    }
    Ok(())
}

fn elements_of(
    field: &'static str,
    lists: &[Vec<Vec<u64>>],
    base: &ElementaryModule,
) -> Result<Vec<ModuleElement>, SpecError> {
    let ctx = base.ctx();
    let components = base.mu_count() + base.lambda_count();
    let mut out = Vec::with_capacity(lists.len());
    for (index, entry) in lists.iter().enumerate() {
        if entry.len() != components {
            return Err(SpecError::EntryCount {
                field,
                index,
                expected: components,
                found: entry.len(),
            });
        }
        let mut polys = Vec::with_capacity(components);
        for coeffs in entry {
            check_coeffs(field, index, coeffs, ctx.modulus())?;
            polys.push(LambdaElt::from_coeffs(ctx, coeffs));
        }
        let lambda_parts = polys.split_off(base.mu_count());
        out.push(base.element(polys, lambda_parts)?);
    }
    Ok(out)
}

/// Validates a parsed tower document. `ambient_cap` (the environment
/// override) applies when the document sets no `degree_cap` of its own.
pub fn resolve_module_spec(
    file: &ModuleSpecFile,
    ambient_cap: Option<u64>,
) -> Result<TowerSpec, SpecError> {
    let ctx = PrimeContext::new(file.p, file.precision)?;
    let bound = ctx.modulus();
    let mut lambda_pairs = Vec::with_capacity(file.lambda_factors.len());
    for (index, coeffs) in file.lambda_factors.iter().enumerate() {
        check_coeffs("lambda_factors", index, coeffs, bound)?;
        lambda_pairs.push((LambdaElt::from_coeffs(ctx, coeffs), 1));
    }
    let base = ElementaryModule::new(ctx, file.mu_factors.clone(), lambda_pairs)?;
    let glue = elements_of("glue", &file.glue, &base)?;
    let y_gens = elements_of("Y", &file.y, &base)?;
    let module = if glue.is_empty() {
        IwasawaModule::from(base)
    } else {
        IwasawaModule::from(GlueQuotient::new(base, glue)?)
    };
    let (n_min, n_max) = file.levels;
    if n_min > n_max {
        return Err(SpecError::LevelOrder { n_min, n_max });
    }
    let degree_cap = match file.degree_cap {
        Some(0) => return Err(SpecError::DegreeCapZero),
        Some(cap) => cap,
        None => ambient_cap.unwrap_or_else(|| default_degree_cap(file.p)),
    };
    Ok(TowerSpec {
        ctx,
        module,
        y: SubmoduleSpec::new(y_gens),
        n_min,
        n_max,
        degree_cap,
    })
}

/// Parses and validates a tower document in one step.
pub fn parse_module_spec(text: &str, ambient_cap: Option<u64>) -> Result<TowerSpec, SpecError> {
    let file: ModuleSpecFile = from_json(text)?;
    resolve_module_spec(&file, ambient_cap)
}

/// Cyclic-action document: a finite abelian p-group with an optional
/// generator action given column by column (one image per group
/// generator, in coordinates). A missing `action` means the trivial one.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionSpecFile {
    /// Odd prime p.
    pub p: u64,
    /// Working precision K.
    pub precision: u32,
    /// Cyclic factor exponents, largest first.
    pub factors: Vec<u32>,
    /// Images of the group generators under the acting generator.
    #[serde(default)]
    pub action: Option<Vec<Vec<u64>>>,
}

fn hom_from_columns(
    field: &'static str,
    domain: &FinitePGroup,
    codomain: &FinitePGroup,
    columns: &[Vec<u64>],
    bound: u64,
) -> Result<PGroupHom, SpecError> {
    if columns.len() != domain.p_rank() {
        return Err(SpecError::ColumnCount {
            field,
            expected: domain.p_rank(),
            found: columns.len(),
        });
    }
    if columns.is_empty() {
        return Ok(PGroupHom::zero_map(domain, codomain));
    }
    let mut images = Vec::with_capacity(columns.len());
    for (index, column) in columns.iter().enumerate() {
        if column.len() != codomain.p_rank() {
            return Err(SpecError::EntryCount {
                field,
                index,
                expected: codomain.p_rank(),
                found: column.len(),
            });
        }
        check_coeffs(field, index, column, bound)?;
        images.push(codomain.element(column.clone())?);
    }
    Ok(PGroupHom::from_generator_images(domain, &images)?)
}

/// Parses and validates a cyclic-action document.
pub fn parse_action_spec(text: &str) -> Result<FModule, SpecError> {
    let file: ActionSpecFile = from_json(text)?;
    let ctx = PrimeContext::new(file.p, file.precision)?;
    let group = FinitePGroup::new(ctx, file.factors.clone())?;
    match &file.action {
        None => Ok(FModule::trivial(group)),
        Some(columns) => {
            let hom = hom_from_columns("action", &group, &group, columns, ctx.modulus())?;
            Ok(FModule::new(group, hom)?)
        }
    }
}

/// Norm/lift transition document: groups A and B with a norm map
/// N: B -> A (one column per B-generator, in A-coordinates) and a lift
/// iota: A -> B (one column per A-generator, in B-coordinates).
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionSpecFile {
    /// Odd prime p.
    pub p: u64,
    /// Working precision K.
    pub precision: u32,
    /// Cyclic factor exponents of A, largest first.
    pub a_factors: Vec<u32>,
    /// Cyclic factor exponents of B, largest first.
    pub b_factors: Vec<u32>,
    /// Columns of N: B -> A.
    pub norm: Vec<Vec<u64>>,
    /// Columns of iota: A -> B.
    pub iota: Vec<Vec<u64>>,
    /// Largest group order checked by full enumeration.
    #[serde(default)]
    pub enumeration_cap: Option<u64>,
    /// Number of random samples when enumeration is skipped.
    #[serde(default)]
    pub sample_count: Option<u64>,
    /// Seed for the sampling generator.
    #[serde(default)]
    pub seed: Option<u64>,
}

/// Validated transition data, ready for the lemma checker.
#[derive(Debug, Clone)]
pub struct TransitionData {
    /// Lower-level group A.
    pub a: FinitePGroup,
    /// Upper-level group B.
    pub b: FinitePGroup,
    /// Norm map N: B -> A.
    pub norm: PGroupHom,
    /// Lift iota: A -> B.
    pub iota: PGroupHom,
    /// Enumeration and sampling bounds for the check.
    pub options: TransitionCheckOptions,
}

/// Parses and validates a transition document.
pub fn parse_transition_spec(text: &str) -> Result<TransitionData, SpecError> {
    let file: TransitionSpecFile = from_json(text)?;
    let ctx = PrimeContext::new(file.p, file.precision)?;
    let a = FinitePGroup::new(ctx, file.a_factors.clone())?;
    let b = FinitePGroup::new(ctx, file.b_factors.clone())?;
    let norm = hom_from_columns("norm", &b, &a, &file.norm, ctx.modulus())?;
    let iota = hom_from_columns("iota", &a, &b, &file.iota, ctx.modulus())?;
    let defaults = TransitionCheckOptions::default();
    let options = TransitionCheckOptions {
        enumeration_cap: file.enumeration_cap.unwrap_or(defaults.enumeration_cap),
        sample_count: file.sample_count.unwrap_or(defaults.sample_count),
        seed: file.seed.unwrap_or(defaults.seed),
    };
    Ok(TransitionData {
        a,
        b,
        norm,
        iota,
        options,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohomology::{h_hat_0, h_hat_1};
    use crate::pgroup::check_transition_lemma;

    #[test]
    fn tower_document_round_trip() {
        let text = r#"{
            "p": 3,
            "precision": 6,
            "mu_factors": [1],
            "lambda_factors": [[726, 1]],
            "levels": [1, 3]
        }"#;
        let spec = parse_module_spec(text, None).unwrap();
        assert_eq!(spec.ctx.p(), 3);
        assert_eq!(spec.module.base().mu_count(), 1);
        assert_eq!(spec.module.base().lambda_count(), 1);
        assert!(!spec.module.is_glue());
        assert!(spec.y.is_empty());
        assert_eq!((spec.n_min, spec.n_max), (1, 3));
        assert_eq!(spec.degree_cap, 6561);
    }

    #[test]
    fn cap_precedence_is_file_then_ambient_then_default() {
        let with_cap = r#"{"p": 3, "precision": 4, "mu_factors": [1],
            "degree_cap": 100, "levels": [1, 2]}"#;
        let spec = parse_module_spec(with_cap, Some(50)).unwrap();
        assert_eq!(spec.degree_cap, 100);

        let without_cap = r#"{"p": 3, "precision": 4, "mu_factors": [1],
            "levels": [1, 2]}"#;
        let spec = parse_module_spec(without_cap, Some(50)).unwrap();
        assert_eq!(spec.degree_cap, 50);
        let spec = parse_module_spec(without_cap, None).unwrap();
        assert_eq!(spec.degree_cap, 6561);
    }

    #[test]
    fn unknown_keys_and_syntax_errors_carry_diagnostics() {
        let unknown = r#"{"p": 3, "precision": 4, "mu_factors": [1],
            "levels": [1, 2], "extra": 1}"#;
        let err = parse_module_spec(unknown, None).unwrap_err();
        match err {
            SpecError::Syntax(msg) => {
                assert!(msg.contains("extra"), "message: {msg}");
                assert!(msg.contains("line"), "message: {msg}");
            }
            other => panic!("expected syntax error, got {other:?}"),
        }

        let negative = r#"{"p": 3, "precision": 4, "mu_factors": [1],
            "lambda_factors": [[-3, 1]], "levels": [1, 2]}"#;
        assert!(matches!(
            parse_module_spec(negative, None),
            Err(SpecError::Syntax(_))
        ));
    }

    #[test]
    fn out_of_range_coefficients_are_rejected() {
        let text = r#"{"p": 3, "precision": 4, "lambda_factors": [[81, 1]],
            "levels": [1, 2]}"#;
        assert_eq!(
            parse_module_spec(text, None).unwrap_err(),
            SpecError::CoefficientRange {
                field: "lambda_factors",
                index: 0,
                value: 81,
                bound: 81,
            }
        );
    }

    #[test]
    fn non_distinguished_moduli_are_rejected() {
        let text = r#"{"p": 3, "precision": 4, "lambda_factors": [[1, 1]],
            "levels": [1, 2]}"#;
        assert!(matches!(
            parse_module_spec(text, None),
            Err(SpecError::Module(ModuleError::NotDistinguished { index: 0 }))
        ));
    }

    #[test]
    fn glue_and_y_elements_resolve() {
        let text = r#"{
            "p": 3,
            "precision": 6,
            "mu_factors": [1],
            "lambda_factors": [[726, 1]],
            "glue": [[[1], [1]]],
            "Y": [[[0], [1]]],
            "levels": [1, 2]
        }"#;
        let spec = parse_module_spec(text, None).unwrap();
        assert!(spec.module.is_glue());
        assert_eq!(spec.module.glue_generators().len(), 1);
        assert_eq!(spec.y.generators().len(), 1);
        assert!(spec.y.generators()[0].mu_part_is_zero());
    }

    #[test]
    fn wrong_component_count_is_rejected() {
        let text = r#"{
            "p": 3,
            "precision": 6,
            "mu_factors": [1],
            "lambda_factors": [[726, 1]],
            "glue": [[[1]]],
            "levels": [1, 2]
        }"#;
        assert_eq!(
            parse_module_spec(text, None).unwrap_err(),
            SpecError::EntryCount {
                field: "glue",
                index: 0,
                expected: 2,
                found: 1,
            }
        );
    }

    #[test]
    fn level_and_cap_validation() {
        let inverted = r#"{"p": 3, "precision": 4, "mu_factors": [1],
            "levels": [3, 1]}"#;
        assert_eq!(
            parse_module_spec(inverted, None).unwrap_err(),
            SpecError::LevelOrder { n_min: 3, n_max: 1 }
        );
        let zero_cap = r#"{"p": 3, "precision": 4, "mu_factors": [1],
            "degree_cap": 0, "levels": [1, 2]}"#;
        assert_eq!(
            parse_module_spec(zero_cap, None).unwrap_err(),
            SpecError::DegreeCapZero
        );
    }

    #[test]
    fn action_documents_build_modules() {
        let trivial = r#"{"p": 3, "precision": 4, "factors": [1]}"#;
        let module = parse_action_spec(trivial).unwrap();
        assert_eq!(h_hat_0(&module).unwrap().order_exponent(), 1);
        assert_eq!(h_hat_1(&module).unwrap().order_exponent(), 1);

        let shift = r#"{"p": 3, "precision": 4, "factors": [1, 1, 1],
            "action": [[0, 1, 0], [0, 0, 1], [1, 0, 0]]}"#;
        let module = parse_action_spec(shift).unwrap();
        assert_eq!(h_hat_0(&module).unwrap().order_exponent(), 0);
        assert_eq!(h_hat_1(&module).unwrap().order_exponent(), 0);

        let bad = r#"{"p": 3, "precision": 4, "factors": [1],
            "action": [[2]]}"#;
        assert!(matches!(
            parse_action_spec(bad),
            Err(SpecError::Cohomology(_))
        ));
    }

    #[test]
    fn transition_documents_feed_the_checker() {
        let text = r#"{
            "p": 3,
            "precision": 5,
            "a_factors": [2],
            "b_factors": [3],
            "norm": [[1]],
            "iota": [[3]]
        }"#;
        let data = parse_transition_spec(text).unwrap();
        let report =
            check_transition_lemma(&data.a, &data.b, &data.norm, &data.iota, data.options)
                .unwrap();
        assert!(report.hypotheses_hold);
        assert_eq!(report.conclusion_b, Some(true));
    }
}
