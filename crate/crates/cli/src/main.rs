//! Command-line driver: tower tabulation, growth fitting, stabilization
//! detection, ideal-membership and congruence searches, Tate cohomology,
//! transition checks, and closed-form identities.
//!
//! Output is UTF-8 with LF line endings and is byte-identical for
//! identical inputs, regardless of thread count. Every failure prints one
//! machine-parsable `error: ...` line on standard error and exits with a
//! code that identifies the failure family.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use iwasawa_lab::formulas::{KidaInput, NormDefectInput, RankBookkeeping};
use iwasawa_lab::lambda::{LambdaElt, LambdaError};
use iwasawa_lab::modspec::{
    default_degree_cap, parse_action_spec, parse_module_spec, parse_transition_spec, SpecError,
    TowerSpec,
};
use iwasawa_lab::module::{finite_level_data, fit_invariants, ModuleError, Tower};
use iwasawa_lab::padic::PrimeContext;
use iwasawa_lab::pgroup::check_transition_lemma;
use iwasawa_lab::runner;
use iwasawa_lab::stabilization::{detect, StabilizationError};

const ENV_DEGREE_CAP: &str = "IWLAB_DEGREE_CAP";

#[derive(Parser)]
#[command(
    name = "iwasawa-lab",
    version,
    about = "Exact tower computations over Z_p[[T]] at fixed precision"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate tower levels as TSV: size, rank, and exponent data
    Simulate(TowerArgs),
    /// Fit the growth exponents mu, lambda, nu from the last levels
    Fit(TowerArgs),
    /// Detect stabilization criteria and indices along the tower
    Stabilize(TowerArgs),
    /// Least level m with nu_(m,0) in the ideal (h, p^B)
    Membership(MembershipArgs),
    /// Doubled-level congruence witness nu_(2M,0) = Q f omega_M mod p^B
    Nmm(NmmArgs),
    /// Tate cohomology orders for a cyclic action document
    Cohomology(DocumentArgs),
    /// Norm/lift transition relations for a two-group document
    CheckAb(DocumentArgs),
    /// Closed-form identities: base change, norm defects, norm splits
    Formulas(FormulasArgs),
}

#[derive(Args)]
struct TowerArgs {
    /// Path to the tower specification document
    #[arg(long)]
    spec: PathBuf,
    /// Override the document's level range, written A..B
    #[arg(long)]
    levels: Option<String>,
    /// Worker threads for per-level computation
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Reformat the report for reading; default output is for pipelines
    #[arg(long)]
    pretty: bool,
}

#[derive(Args)]
struct MembershipArgs {
    /// Odd prime p
    #[arg(long)]
    p: u64,
    /// Coefficients of h, constant term first, comma-separated
    #[arg(long)]
    h: String,
    /// Congruence exponent B
    #[arg(long = "B")]
    bound: u32,
    /// Report the least qualifying level (always on; kept for scripts)
    #[arg(long)]
    find_min: bool,
    /// Working precision; defaults to B + 2
    #[arg(long)]
    precision: Option<u32>,
    /// Reformat the report for reading
    #[arg(long)]
    pretty: bool,
}

#[derive(Args)]
struct NmmArgs {
    /// Odd prime p
    #[arg(long)]
    p: u64,
    /// Coefficients of f, constant term first, comma-separated
    #[arg(long)]
    f: String,
    /// Congruence exponent B
    #[arg(long = "B")]
    bound: u32,
    /// Working precision; defaults to B + 2
    #[arg(long)]
    precision: Option<u32>,
    /// Reformat the report for reading
    #[arg(long)]
    pretty: bool,
}

#[derive(Args)]
struct DocumentArgs {
    /// Path to the input document
    #[arg(long)]
    spec: PathBuf,
    /// Reformat the report for reading
    #[arg(long)]
    pretty: bool,
}

#[derive(Args)]
struct FormulasArgs {
    #[command(subcommand)]
    formula: Formula,
}

#[derive(Subcommand)]
enum Formula {
    /// Lambda-minus after base change: degree*lambda + (e-1)*half_degree
    Kida {
        /// Extension degree [L:K]
        #[arg(long)]
        degree: u64,
        /// Lambda-minus of the base field
        #[arg(long)]
        lambda_minus_k: u64,
        /// Ramification index e
        #[arg(long)]
        ram_e: u64,
        /// Half the degree count entering the ramification term
        #[arg(long)]
        half_degree: u64,
        /// Reformat the report for reading
        #[arg(long)]
        pretty: bool,
    },
    /// Norm defect log order p^(n-N)*d between levels N and n
    Hasse {
        /// Upper level n
        #[arg(long)]
        n: u64,
        /// Base level N
        #[arg(long)]
        base: u64,
        /// Local degree factor d
        #[arg(long)]
        d: u64,
        /// Odd prime p
        #[arg(long)]
        p: u64,
        /// Reformat the report for reading
        #[arg(long)]
        pretty: bool,
    },
    /// Split the algebraic norm as p*u + s^(p-1) and p + s*f, rechecked
    Norm {
        /// Odd prime p
        #[arg(long)]
        p: u64,
        /// Working precision; defaults to 6
        #[arg(long)]
        precision: Option<u32>,
        /// Reformat the report for reading
        #[arg(long)]
        pretty: bool,
    },
    /// Rank bookkeeping: omega rank r2 + 1 + defect and plus-part rank
    Rank {
        /// Number of complex places r2
        #[arg(long)]
        r2: u64,
        /// Leopoldt defect
        #[arg(long)]
        defect: u64,
        /// Reformat the report for reading
        #[arg(long)]
        pretty: bool,
    },
}

#[derive(Debug)]
struct Failure {
    code: u8,
    reason: String,
}

fn fail(code: u8, reason: impl Display) -> Failure {
    Failure {
        code,
        reason: reason.to_string(),
    }
}

fn module_failure(err: ModuleError) -> Failure {
    match &err {
        ModuleError::InfiniteQuotient { level } => {
            fail(3, format!("infinite quotient at level {level}"))
        }
        ModuleError::InfiniteCoinvariants => fail(3, "infinite T-coinvariants"),
        ModuleError::NoExactFit => fail(4, "no exact growth fit for the computed levels"),
        ModuleError::SearchExhausted { bound } => {
            fail(6, format!("search exhausted below p^{bound}"))
        }
        _ => fail(2, err),
    }
}

fn stabilization_failure(err: StabilizationError) -> Failure {
    match err {
        StabilizationError::PostFireViolation {
            criterion,
            fired_at,
            violated_at,
        } => fail(
            5,
            format!(
                "criterion {criterion} fired at level {fired_at} but fails at level {violated_at}"
            ),
        ),
        StabilizationError::NotVisibleWithinRange => {
            fail(6, "no level in range makes every sampled class visible")
        }
        StabilizationError::Module(err) => module_failure(err),
    }
}

fn lambda_failure(err: LambdaError) -> Failure {
    match &err {
        LambdaError::NotFoundWithinCap { cap } => {
            fail(6, format!("no level below the degree cap {cap} qualifies"))
        }
        _ => fail(2, err),
    }
}

fn spec_failure(err: SpecError) -> Failure {
    fail(2, err)
}

fn read_document(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| fail(2, format!("{}: {e}", path.display())))
}

fn ambient_degree_cap() -> Result<Option<u64>, Failure> {
    match std::env::var(ENV_DEGREE_CAP) {
        Ok(raw) => match raw.parse::<u64>() {
            Ok(0) => Err(fail(2, format!("{ENV_DEGREE_CAP} must be positive"))),
            Ok(cap) => Ok(Some(cap)),
            Err(_) => Err(fail(
                2,
                format!("{ENV_DEGREE_CAP}={raw} is not an unsigned integer"),
            )),
        },
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(fail(2, format!("{ENV_DEGREE_CAP}: {e}"))),
    }
}

fn parse_level_range(raw: &str) -> Result<(u32, u32), Failure> {
    let parsed = raw.split_once("..").and_then(|(a, b)| {
        let a = a.trim().parse::<u32>().ok()?;
        let b = b.trim().parse::<u32>().ok()?;
        Some((a, b))
    });
    match parsed {
        Some((a, b)) if a <= b => Ok((a, b)),
        Some((a, b)) => Err(fail(2, format!("levels {a}..{b} are inverted"))),
        None => Err(fail(2, format!("levels must be written A..B, got {raw}"))),
    }
}

fn parse_coeffs(raw: &str) -> Result<Vec<u64>, Failure> {
    raw.split(',')
        .map(|part| {
            part.trim()
                .parse::<u64>()
                .map_err(|_| fail(2, format!("coefficient {part:?} is not an unsigned integer")))
        })
        .collect()
}

fn load_tower_spec(args: &TowerArgs) -> Result<TowerSpec, Failure> {
    let text = read_document(&args.spec)?;
    let ambient = ambient_degree_cap()?;
    let mut spec = parse_module_spec(&text, ambient).map_err(spec_failure)?;
    if let Some(raw) = &args.levels {
        let (n_min, n_max) = parse_level_range(raw)?;
        spec.n_min = n_min;
        spec.n_max = n_max;
    }
    Ok(spec)
}

fn build_tower(spec: &TowerSpec, threads: usize) -> Result<Tower, Failure> {
    if threads <= 1 {
        return runner::build_tower(spec).map_err(module_failure);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| fail(1, format!("thread pool: {e}")))?;
    let levels: Vec<u32> = (spec.n_min..=spec.n_max).collect();
    let results: Vec<Result<_, ModuleError>> = pool.install(|| {
        levels
            .par_iter()
            .map(|&n| finite_level_data(&spec.module, &spec.y, n, spec.degree_cap))
            .collect()
    });
    let mut data = Vec::with_capacity(results.len());
    for result in results {
        data.push(result.map_err(module_failure)?);
    }
    Tower::from_level_data(spec.module.clone(), spec.y.clone(), spec.degree_cap, data)
        .map_err(module_failure)
}

fn scalar_ctx(p: u64, precision: Option<u32>, bound: u32) -> Result<PrimeContext, Failure> {
    let precision = precision.unwrap_or(bound.saturating_add(2));
    PrimeContext::new(p, precision).map_err(|e| fail(2, e))
}

/// Aligns a TSV table into padded columns.
fn pretty_table(tsv: &str) -> String {
    let rows: Vec<Vec<&str>> = tsv
        .lines()
        .map(|line| line.split('\t').collect())
        .collect();
    let columns = rows.iter().map(Vec::len).max().unwrap_or(0);
    let mut widths = vec![0usize; columns];
    for row in &rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let mut out = String::new();
    for row in &rows {
        let mut line = String::new();
        for (i, cell) in row.iter().enumerate() {
            if i > 0 {
                line.push_str("  ");
            }
            line.push_str(&format!("{cell:<width$}", width = widths[i]));
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

/// Rewrites key=value lines as aligned "key = value" lines.
fn pretty_pairs(text: &str) -> String {
    let pairs: Vec<(&str, &str)> = text
        .lines()
        .filter_map(|line| line.split_once('='))
        .collect();
    let width = pairs.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut out = String::new();
    for (key, value) in pairs {
        out.push_str(&format!("{key:<width$} = {value}\n"));
    }
    out
}

fn emit(text: &str, pretty: bool, table: bool) -> Result<(), Failure> {
    use std::io::Write as _;
    let mut out = std::io::stdout().lock();
    let written = if pretty {
        let formatted = if table {
            pretty_table(text)
        } else {
            pretty_pairs(text)
        };
        out.write_all(formatted.as_bytes())
    } else {
        out.write_all(text.as_bytes())
    };
    written.map_err(|e| fail(1, format!("stdout: {e}")))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Simulate(args) => {
            let spec = load_tower_spec(&args)?;
            let tower = build_tower(&spec, args.threads)?;
            emit(&runner::simulate_report(&tower), args.pretty, true)?;
            Ok(())
        }
        Command::Fit(args) => {
            let spec = load_tower_spec(&args)?;
            let tower = build_tower(&spec, args.threads)?;
            let fit = fit_invariants(&tower).map_err(module_failure)?;
            emit(&runner::fit_report(&fit), args.pretty, false)?;
            Ok(())
        }
        Command::Stabilize(args) => {
            let spec = load_tower_spec(&args)?;
            let tower = build_tower(&spec, args.threads)?;
            let report = detect(&tower).map_err(stabilization_failure)?;
            emit(&runner::stabilize_report(&report), args.pretty, false)?;
            Ok(())
        }
        Command::Membership(args) => {
            let ctx = scalar_ctx(args.p, args.precision, args.bound)?;
            let cap = ambient_degree_cap()?.unwrap_or_else(|| default_degree_cap(args.p));
            let coeffs = parse_coeffs(&args.h)?;
            for &c in &coeffs {
                if c >= ctx.modulus() {
                    return Err(fail(
                        2,
                        format!("coefficient {c} is outside [0, {})", ctx.modulus()),
                    ));
                }
            }
            let h = LambdaElt::from_coeffs(ctx, &coeffs);
            let text =
                runner::membership_report(ctx, &h, args.bound, cap).map_err(lambda_failure)?;
            emit(&text, args.pretty, false)?;
            Ok(())
        }
        Command::Nmm(args) => {
            let ctx = scalar_ctx(args.p, args.precision, args.bound)?;
            let cap = ambient_degree_cap()?.unwrap_or_else(|| default_degree_cap(args.p));
            let coeffs = parse_coeffs(&args.f)?;
            for &c in &coeffs {
                if c >= ctx.modulus() {
                    return Err(fail(
                        2,
                        format!("coefficient {c} is outside [0, {})", ctx.modulus()),
                    ));
                }
            }
            let f = LambdaElt::from_coeffs(ctx, &coeffs);
            let (text, verified) =
                runner::nmm_report(ctx, &f, args.bound, cap).map_err(lambda_failure)?;
            emit(&text, args.pretty, false)?;
            if !verified {
                return Err(fail(1, "congruence witness failed reconstruction"));
            }
            Ok(())
        }
        Command::Cohomology(args) => {
            let text = read_document(&args.spec)?;
            let module = parse_action_spec(&text).map_err(spec_failure)?;
            let (report, equal) = runner::cohomology_report(&module)
                .map_err(|e| fail(2, e))?;
            emit(&report, args.pretty, false)?;
            if !equal {
                return Err(fail(7, "cohomology orders differ"));
            }
            Ok(())
        }
        Command::CheckAb(args) => {
            let text = read_document(&args.spec)?;
            let data = parse_transition_spec(&text).map_err(spec_failure)?;
            let report =
                check_transition_lemma(&data.a, &data.b, &data.norm, &data.iota, data.options)
                    .map_err(|e| fail(2, e))?;
            let (rendered, ok) = runner::transition_report_text(&report);
            emit(&rendered, args.pretty, false)?;
            if !ok {
                return Err(fail(7, "transition conclusions fail for this input"));
            }
            Ok(())
        }
        Command::Formulas(args) => match args.formula {
            Formula::Kida {
                degree,
                lambda_minus_k,
                ram_e,
                half_degree,
                pretty,
            } => {
                if ram_e == 0 {
                    return Err(fail(2, "ramification index must be positive"));
                }
                let text = runner::kida_report(KidaInput {
                    degree,
                    lambda_minus_k,
                    ram_e,
                    half_degree,
                });
                emit(&text, pretty, false)?;
                Ok(())
            }
            Formula::Hasse {
                n,
                base,
                d,
                p,
                pretty,
            } => {
                let text = runner::hasse_report(NormDefectInput { n, base, d, p })
                    .map_err(|e| fail(2, e))?;
                emit(&text, pretty, false)?;
                Ok(())
            }
            Formula::Norm {
                p,
                precision,
                pretty,
            } => {
                let ctx = PrimeContext::new(p, precision.unwrap_or(6)).map_err(|e| fail(2, e))?;
                let (text, ok) = runner::norm_report(ctx);
                emit(&text, pretty, false)?;
                if !ok {
                    return Err(fail(7, "norm identities fail at this precision"));
                }
                Ok(())
            }
            Formula::Rank { r2, defect, pretty } => {
                let text = runner::rank_report(RankBookkeeping { r2, defect });
                emit(&text, pretty, false)?;
                Ok(())
            }
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.reason);
            ExitCode::from(failure.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn failure_codes_follow_the_error_family() {
        assert_eq!(
            module_failure(ModuleError::InfiniteQuotient { level: 2 }).code,
            3
        );
        assert_eq!(module_failure(ModuleError::NoExactFit).code, 4);
        assert_eq!(
            module_failure(ModuleError::SearchExhausted { bound: 4 }).code,
            6
        );
        assert_eq!(module_failure(ModuleError::ModuleMismatch).code, 2);
        assert_eq!(
            stabilization_failure(StabilizationError::PostFireViolation {
                criterion: 2,
                fired_at: 1,
                violated_at: 3,
            })
            .code,
            5
        );
        assert_eq!(
            lambda_failure(LambdaError::NotFoundWithinCap { cap: 81 }).code,
            6
        );
        assert_eq!(lambda_failure(LambdaError::NotMonic(3)).code, 2);
    }

    #[test]
    fn level_range_and_coefficient_parsing() {
        assert_eq!(parse_level_range("1..5").unwrap(), (1, 5));
        assert_eq!(parse_level_range(" 2 .. 2 ").unwrap(), (2, 2));
        assert_eq!(parse_level_range("5..1").unwrap_err().code, 2);
        assert_eq!(parse_level_range("3").unwrap_err().code, 2);
        assert_eq!(parse_coeffs("0, 1").unwrap(), vec![0, 1]);
        assert_eq!(parse_coeffs("0,x").unwrap_err().code, 2);
    }

    #[test]
    fn pretty_formatting_is_lossless_on_keys() {
        let table = pretty_table("a\tlong_header\n1\t2\n");
        assert_eq!(table, "a  long_header\n1  2\n");
        let pairs = pretty_pairs("mu=1\nlambda=0\n");
        assert_eq!(pairs, "mu     = 1\nlambda = 0\n");
    }
}
