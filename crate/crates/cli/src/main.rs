//! Batch front end: every library operation behind a subcommand, JSON in and
//! JSON out, reproducible seeds. Exit codes: 0 success, 1 input error,
//! 2 verification failure.

use a_geom::a_space::{AFormJson, compatible_projector, douglas};
use a_geom::geodesics::{make_tangent, minimal_curve, race};
use a_geom::isometry::{AIsometry, AUnitary, check_isometry, conjugator, dense_wold, isometry_section};
use a_geom::krein::{self, KreinInstance};
use a_geom::numerics::{CMatrix, svd_norm};
use a_geom::sequences::{SeqOperator, divergence_demo, seq_adjointability, seq_bounded_on_h, seq_is_l_isometry, seq_wold};
use a_geom::suite;
use a_geom::{AForm, Error as LibError};
use clap::{Parser, Subcommand};
use serde::Serialize;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

#[derive(Parser)]
#[command(name = "a-geom", version, about = "Operator calculus for weighted inner products")]
struct Cli {
    /// Residual tolerance for command-level verdicts.
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol: f64,

    /// Seed for the randomized subcommands (race, suite).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Write the JSON report to this path instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Isometry, symmetrizability and adjoint diagnostics for an operator.
    Check {
        /// Weight matrix JSON (or {"matrix": ..., "psd_checked": ...}).
        #[arg(long)]
        form: PathBuf,
        /// Operator JSON.
        #[arg(long)]
        op: PathBuf,
    },
    /// Projection onto the span of a frame, orthogonal for the weighted
    /// inner product.
    Project {
        #[arg(long)]
        form: PathBuf,
        /// Full-column-rank frame whose span is the target subspace.
        #[arg(long)]
        basis: PathBuf,
    },
    /// Solvability of LHS * X = RHS for Hermitian PSD LHS, three ways.
    Douglas {
        #[arg(long)]
        lhs: PathBuf,
        #[arg(long)]
        rhs: PathBuf,
    },
    /// Cross section: the A-unitary carrying a base isometry to a target.
    Section {
        #[arg(long)]
        form: PathBuf,
        #[arg(long)]
        base: PathBuf,
        #[arg(long)]
        target: PathBuf,
    },
    /// Conjugator K with (K H) T1 = T2, given H intertwining the final
    /// projections.
    Conjugate {
        #[arg(long)]
        form: PathBuf,
        #[arg(long)]
        t1: PathBuf,
        #[arg(long)]
        t2: PathBuf,
        #[arg(long)]
        intertwiner: PathBuf,
    },
    /// Norm-preserving Hermitian extension of XP past the projection P.
    Extend {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        p: PathBuf,
        /// Optional explicit scale for the constructive route.
        #[arg(long)]
        m: Option<f64>,
        /// auto (constructive with fallback) or dykstra.
        #[arg(long, default_value = "auto")]
        method: String,
    },
    /// Build the minimal curve through a base isometry with a given velocity
    /// and verify it stays isometric at sampled times.
    Geodesic {
        #[arg(long)]
        form: PathBuf,
        #[arg(long)]
        base: PathBuf,
        #[arg(long)]
        velocity: PathBuf,
        /// Sample count on [-pi, pi].
        #[arg(long, default_value_t = 21)]
        samples: usize,
    },
    /// Race the minimal curve against random same-endpoint competitors.
    Race {
        #[arg(long)]
        form: PathBuf,
        #[arg(long)]
        base: PathBuf,
        #[arg(long)]
        velocity: PathBuf,
        /// Endpoint parameter in [0, pi].
        #[arg(long)]
        t1: f64,
        #[arg(long, default_value_t = 200)]
        trials: usize,
    },
    /// Weighted sequence-space diagnostics on the named built-in operators.
    Seq {
        #[command(subcommand)]
        command: SeqCommand,
    },
    /// Dense Wold split of an operator (trivial for invertible isometries).
    Wold {
        #[arg(long)]
        form: PathBuf,
        #[arg(long)]
        op: PathBuf,
    },
    /// Run the full verification suite.
    Suite,
}

#[derive(Subcommand)]
enum SeqCommand {
    /// Index-level Wold decomposition over [1, horizon].
    Wold {
        #[arg(long)]
        op: String,
        #[arg(long, default_value_t = 1000)]
        horizon: u64,
    },
    /// Adjointability evidence at the horizon.
    Adjoint {
        #[arg(long)]
        op: String,
        #[arg(long, default_value_t = 100_000)]
        horizon: u64,
    },
    /// Isometry and boundedness diagnostics for one operator.
    Check {
        #[arg(long)]
        op: String,
        #[arg(long, default_value_t = 100_000)]
        horizon: u64,
    },
    /// Partial sums of the divergent witness series.
    Demo {
        #[arg(long, default_value_t = 1_000_000)]
        horizon: u64,
    },
}

enum Failure {
    Input(String),
    Verification(String),
}

impl From<LibError> for Failure {
    fn from(e: LibError) -> Self {
        match e {
            LibError::NoConvergence { .. } => Failure::Verification(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

fn load_matrix(path: &Path) -> Result<CMatrix, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

/// Weight files may be a bare matrix or the {"matrix", "psd_checked"} wrapper.
fn load_form(path: &Path) -> Result<Arc<AForm>, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    if let Ok(wrapped) = serde_json::from_str::<AFormJson>(&text) {
        return Ok(wrapped.into_form()?);
    }
    let matrix: CMatrix = serde_json::from_str(&text)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    Ok(AForm::new(matrix)?)
}

fn load_builtin(name: &str) -> Result<SeqOperator, Failure> {
    SeqOperator::builtin(name).ok_or_else(|| {
        Failure::Input(format!(
            "unknown operator '{name}' (expected one of {})",
            a_geom::sequences::BUILTIN_NAMES.join(", ")
        ))
    })
}

fn emit(out: &Option<PathBuf>, report: &impl Serialize) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(report)
        .map_err(|e| Failure::Input(format!("serialization: {e}")))?;
    text.push('\n');
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

#[derive(Serialize)]
struct CheckReport {
    conditioning: f64,
    ill_conditioned: bool,
    isometric: bool,
    isometry_defect: f64,
    lambda_witness: f64,
    a_symmetric: bool,
    banach_norm: f64,
    l_norm: f64,
    adjoint: CMatrix,
}

#[derive(Serialize)]
struct ProjectReport {
    q: CMatrix,
    idempotency_residual: f64,
    a_symmetry_residual: f64,
    l_model_hermitian_defect: f64,
    rank: usize,
}

#[derive(Serialize)]
struct SectionReport {
    sigma: CMatrix,
    reconstruction_residual: f64,
    a_unitarity_residual: f64,
    fixes_base: bool,
}

#[derive(Serialize)]
struct ConjugateReport {
    k: CMatrix,
    combined: CMatrix,
    reconstruction_residual: f64,
    a_unitarity_residual: f64,
}

#[derive(Serialize)]
struct ExtendReport {
    #[serde(flatten)]
    report: krein::KreinReport,
    check: krein::ExtensionCheck,
    original_norm_xp: f64,
}

#[derive(Serialize)]
struct GeodesicSample {
    t: f64,
    isometry_residual: f64,
    speed: f64,
}

#[derive(Serialize)]
struct GeodesicReport {
    generator: CMatrix,
    generator_l: CMatrix,
    extension_method: Option<krein::KreinMethod>,
    speed_scale: f64,
    samples: Vec<GeodesicSample>,
    max_isometry_residual: f64,
}

#[derive(Serialize)]
struct SeqCheckReport {
    operator: String,
    horizon: u64,
    is_flat_isometry: bool,
    bounded: a_geom::sequences::BoundednessReport,
}

#[derive(Serialize)]
struct DemoReport {
    horizon: u64,
    terms: usize,
    final_sum: f64,
    monotone: bool,
    /// Dyadically sampled partial sums (term index, value).
    checkpoints: Vec<(usize, f64)>,
}

#[derive(Serialize)]
struct SuiteReport {
    seed: u64,
    all_passed: bool,
    outcomes: Vec<suite::CriterionOutcome>,
}

fn tangent_from_files(
    form: &Path,
    base: &Path,
    velocity: &Path,
) -> Result<a_geom::geodesics::TangentVector, Failure> {
    let form = load_form(form)?;
    let t = AIsometry::new(form.clone(), load_matrix(base)?)?;
    let v = load_matrix(velocity)?;
    Ok(make_tangent(&t, &v)?)
}

fn run(cli: &Cli) -> Result<bool, Failure> {
    if cli.tol.is_nan() || cli.tol <= 0.0 {
        return Err(Failure::Input(format!(
            "tolerance must be positive, got {}",
            cli.tol
        )));
    }
    match &cli.command {
        Command::Check { form, op } => {
            let form = load_form(form)?;
            let b = load_matrix(op)?;
            let iso = check_isometry(&form, &b)?;
            let report = CheckReport {
                conditioning: form.conditioning(),
                ill_conditioned: form.ill_conditioned(),
                isometric: iso.defect <= cli.tol,
                isometry_defect: iso.defect,
                lambda_witness: iso.lambda_witness,
                a_symmetric: form.is_a_symmetric(&b, cli.tol),
                banach_norm: form.banach_norm(&b),
                l_norm: form.l_norm(&b),
                adjoint: form.a_adjoint(&b),
            };
            emit(&cli.out, &report)?;
            Ok(true)
        }
        Command::Project { form, basis } => {
            let form = load_form(form)?;
            let f = load_matrix(basis)?;
            let proj = compatible_projector(&form, &f)?;
            let q = proj.matrix();
            let ql = proj.l_model();
            let report = ProjectReport {
                idempotency_residual: svd_norm(&(&q.matmul(q) - q)),
                a_symmetry_residual: svd_norm(
                    &(&form.matrix().matmul(q) - &q.adjoint().matmul(form.matrix())),
                ),
                l_model_hermitian_defect: ql.hermitian_defect(),
                rank: proj.rank(),
                q: q.clone(),
            };
            let ok = report.idempotency_residual <= cli.tol
                && report.a_symmetry_residual <= cli.tol;
            emit(&cli.out, &report)?;
            Ok(ok)
        }
        Command::Douglas { lhs, rhs } => {
            let a = load_matrix(lhs)?;
            let b = load_matrix(rhs)?;
            let report = douglas(&a, &b)?;
            emit(&cli.out, &report)?;
            Ok(true)
        }
        Command::Section { form, base, target } => {
            let form = load_form(form)?;
            let t0 = AIsometry::new(form.clone(), load_matrix(base)?)?;
            let t = AIsometry::new(form.clone(), load_matrix(target)?)?;
            let sigma = isometry_section(&t0, &t)?;
            let a = form.matrix();
            let report = SectionReport {
                reconstruction_residual: sigma
                    .matrix()
                    .matmul(t0.matrix())
                    .max_abs_diff(t.matrix()),
                a_unitarity_residual: sigma
                    .matrix()
                    .adjoint()
                    .matmul(a)
                    .matmul(sigma.matrix())
                    .max_abs_diff(a),
                fixes_base: isometry_section(&t0, &t0)?
                    .matrix()
                    .max_abs_diff(&CMatrix::identity(form.dim()))
                    <= cli.tol,
                sigma: sigma.matrix().clone(),
            };
            let ok = report.reconstruction_residual <= cli.tol
                && report.a_unitarity_residual <= cli.tol;
            emit(&cli.out, &report)?;
            Ok(ok)
        }
        Command::Conjugate {
            form,
            t1,
            t2,
            intertwiner,
        } => {
            let form = load_form(form)?;
            let t1 = AIsometry::new(form.clone(), load_matrix(t1)?)?;
            let t2 = AIsometry::new(form.clone(), load_matrix(t2)?)?;
            let h = AUnitary::new(form.clone(), load_matrix(intertwiner)?)?;
            let k = conjugator(&t1, &t2, &h)?;
            let combined = k.matrix().matmul(h.matrix());
            let a = form.matrix();
            let report = ConjugateReport {
                reconstruction_residual: combined.matmul(t1.matrix()).max_abs_diff(t2.matrix()),
                a_unitarity_residual: k
                    .matrix()
                    .adjoint()
                    .matmul(a)
                    .matmul(k.matrix())
                    .max_abs_diff(a),
                k: k.matrix().clone(),
                combined,
            };
            let ok = report.reconstruction_residual <= cli.tol
                && report.a_unitarity_residual <= cli.tol;
            emit(&cli.out, &report)?;
            Ok(ok)
        }
        Command::Extend { x, p, m, method } => {
            let inst = KreinInstance::new(load_matrix(x)?, load_matrix(p)?)?;
            let report = match method.as_str() {
                "auto" => krein::extend_paper(&inst, *m)?,
                "dykstra" => krein::extend_dykstra(&inst)?,
                other => {
                    return Err(Failure::Input(format!(
                        "unknown method '{other}' (expected auto or dykstra)"
                    )));
                }
            };
            let check = krein::verify_extension(&inst, &report.z);
            let ok = check.constraint_residual <= krein::CONSTRAINT_TOL
                && check.norm <= 1.0 + krein::NORM_SLACK;
            emit(
                &cli.out,
                &ExtendReport {
                    original_norm_xp: inst.original_norm_xp(),
                    check,
                    report,
                },
            )?;
            Ok(ok)
        }
        Command::Geodesic {
            form,
            base,
            velocity,
            samples,
        } => {
            let tangent = tangent_from_files(form, base, velocity)?;
            let curve = minimal_curve(&tangent)?;
            let form = tangent.base().form().clone();
            let a = form.matrix();
            let count = (*samples).max(2);
            let mut sample_reports = Vec::with_capacity(count);
            let mut worst: f64 = 0.0;
            for k in 0..count {
                let t = -PI + 2.0 * PI * (k as f64) / (count as f64 - 1.0);
                let point = curve.point(t);
                let residual =
                    svd_norm(&(&point.adjoint().matmul(a).matmul(&point) - a)) / form.norm_a();
                worst = worst.max(residual);
                sample_reports.push(GeodesicSample {
                    t,
                    isometry_residual: residual,
                    speed: svd_norm(&curve.velocity_l(t)),
                });
            }
            let report = GeodesicReport {
                generator: curve.generator().clone(),
                generator_l: curve.generator_l().clone(),
                extension_method: curve.extension_method(),
                speed_scale: curve.speed_scale(),
                samples: sample_reports,
                max_isometry_residual: worst,
            };
            let ok = report.max_isometry_residual <= cli.tol;
            emit(&cli.out, &report)?;
            Ok(ok)
        }
        Command::Race {
            form,
            base,
            velocity,
            t1,
            trials,
        } => {
            let tangent = tangent_from_files(form, base, velocity)?;
            let report = race(&tangent, *t1, *trials, cli.seed)?;
            let ok = report.violations == 0;
            emit(&cli.out, &report)?;
            Ok(ok)
        }
        Command::Seq { command } => match command {
            SeqCommand::Wold { op, horizon } => {
                let operator = load_builtin(op)?;
                let report = seq_wold(&operator, *horizon)?;
                emit(&cli.out, &report)?;
                Ok(true)
            }
            SeqCommand::Adjoint { op, horizon } => {
                let operator = load_builtin(op)?;
                let report = seq_adjointability(&operator, *horizon)?;
                emit(&cli.out, &report)?;
                Ok(true)
            }
            SeqCommand::Check { op, horizon } => {
                let operator = load_builtin(op)?;
                let report = SeqCheckReport {
                    operator: op.clone(),
                    horizon: *horizon,
                    is_flat_isometry: seq_is_l_isometry(&operator, (*horizon).min(100_000)),
                    bounded: seq_bounded_on_h(&operator, *horizon)?,
                };
                emit(&cli.out, &report)?;
                Ok(true)
            }
            SeqCommand::Demo { horizon } => {
                let sums = divergence_demo(*horizon);
                let monotone = sums.windows(2).all(|p| p[1] > p[0]);
                let mut checkpoints = Vec::new();
                let mut idx = 1usize;
                while idx <= sums.len() {
                    checkpoints.push((idx, sums[idx - 1]));
                    idx *= 2;
                }
                if *checkpoints.last().map(|(i, _)| i).unwrap_or(&0) != sums.len() {
                    checkpoints.push((sums.len(), *sums.last().unwrap_or(&0.0)));
                }
                let report = DemoReport {
                    horizon: *horizon,
                    terms: sums.len(),
                    final_sum: sums.last().copied().unwrap_or(0.0),
                    monotone,
                    checkpoints,
                };
                emit(&cli.out, &report)?;
                Ok(true)
            }
        },
        Command::Wold { form, op } => {
            let form = load_form(form)?;
            let t = AIsometry::new(form, load_matrix(op)?)?;
            let report = dense_wold(&t)?;
            emit(&cli.out, &report)?;
            Ok(true)
        }
        Command::Suite => {
            let outcomes = suite::run_all(cli.seed);
            for outcome in &outcomes {
                eprintln!("{}", outcome.summary_line());
            }
            let all_passed = outcomes.iter().all(|o| o.passed);
            let report = SuiteReport {
                seed: cli.seed,
                all_passed,
                outcomes,
            };
            emit(&cli.out, &report)?;
            if all_passed {
                Ok(true)
            } else {
                Err(Failure::Verification("suite criteria failed".into()))
            }
        }
    }
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: &'a str,
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("A_GEOM_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(Failure::Input(msg)) => {
            let _ = emit(&cli.out, &ErrorReport { error: &msg });
            ExitCode::from(1)
        }
        Err(Failure::Verification(msg)) => {
            let _ = emit(&cli.out, &ErrorReport { error: &msg });
            ExitCode::from(2)
        }
    }
}
