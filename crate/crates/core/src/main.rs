use clap::{Args, Parser, Subcommand, ValueEnum};
use engelbook::foliation::{construct_xi_prime, portrait_csv, portrait_svg};
use engelbook::model_file::load_model_file;
use engelbook::pipeline::{
    assemble, binding_probe_segment, build_binding_engel, build_collar_engel, collar_invariants, collar_probe_segment,
    looseness_probe, model_catalog, model_names, Params, SampleConfig,
};
use engelbook::invariants::Loop;
use engelbook::report;
use engelbook::{Error, Tolerances};
use serde_json::json;
use std::f64::consts::FRAC_PI_4;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "engelbook", version, about = "Verify Engel and even contact structures adapted to open books")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// List the catalog models.
    ListModels,
    /// Run every check of a catalog model or a model file.
    Verify(VerifyArgs),
    /// Build the collar and binding pieces for (lambda, k) and certify the gluing.
    Construct(ConstructArgs),
    /// Characteristic foliation of the disk page of xi' for odd k.
    Foliation(FoliationArgs),
    /// Twisting and rotation numbers of the collar piece.
    Invariants(InvariantsArgs),
    /// Rotations of X along a segment of the collar or binding piece.
    ProbeLooseness(ProbeArgs),
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 1e-9)]
    rank_tol: f64,
    #[arg(long, default_value_t = 1e-12)]
    zero_tol: f64,
    #[arg(long, default_value_t = 1e-9)]
    slope_tol: f64,
    #[arg(long, default_value_t = 0.25)]
    residual_tol: f64,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn config(&self) -> SampleConfig {
        SampleConfig {
            samples: self.samples,
            seed: self.seed,
            tol: Tolerances { rank: self.rank_tol, zero: self.zero_tol, slope: self.slope_tol, residual: self.residual_tol },
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Json,
    Text,
}

#[derive(Clone, Copy, ValueEnum)]
enum PortraitFormat {
    Csv,
    Svg,
    Json,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, conflicts_with = "file", required_unless_present = "file")]
    model: Option<String>,
    #[arg(long)]
    file: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    k: Option<i64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    n: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    theta0: Option<f64>,
    #[arg(long, value_enum, default_value = "json")]
    format: ReportFormat,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ConstructArgs {
    #[arg(long, allow_hyphen_values = true)]
    lambda: i64,
    #[arg(long, allow_hyphen_values = true)]
    k: i64,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    r0: Option<f64>,
    #[arg(long, value_enum, default_value = "json")]
    format: ReportFormat,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct FoliationArgs {
    #[arg(long, allow_hyphen_values = true)]
    k: i64,
    /// Grid points per side of the portrait.
    #[arg(long, default_value_t = 41)]
    grid: usize,
    #[arg(long, value_enum, default_value = "csv")]
    format: PortraitFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InvariantsArgs {
    #[arg(long, allow_hyphen_values = true)]
    lambda: i64,
    #[arg(long, allow_hyphen_values = true)]
    k: i64,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long, default_value_t = 0.25)]
    residual_tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PieceKind {
    Collar,
    Binding,
}

#[derive(Clone, Copy, ValueEnum)]
enum SegmentKind {
    /// The collar phi-circle.
    Phi,
    /// The binding y-circle (before the shear).
    Y,
    /// A short segment traversed forward and back.
    Short,
}

#[derive(Args)]
struct ProbeArgs {
    #[arg(long, value_enum)]
    piece: PieceKind,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0)]
    lambda: i64,
    #[arg(long, allow_hyphen_values = true)]
    k: i64,
    /// Binding parameter; defaults to k + lambda.
    #[arg(long, allow_hyphen_values = true)]
    l: Option<i64>,
    #[arg(long, value_enum)]
    segment: Option<SegmentKind>,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(Error),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Construction(_)
            | Error::NoConvergence(_)
            | Error::Degenerate(..)
            | Error::NotIsolated(..)
            | Error::Resolution(_)
            | Error::LeavesPlane(_)
            | Error::ZeroVector(_)
            | Error::SingularPullback(_)
            | Error::NonLinear(_) => Failure::Runtime(e),
            _ => Failure::Usage(e),
        }
    }
}

fn write_out(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Usage(Error::Io(format!("{}: {e}", p.display())))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn render(v: &serde_json::Value, f: ReportFormat) -> String {
    match f {
        ReportFormat::Json => report::to_json_string(v),
        ReportFormat::Text => report::to_text(v),
    }
}

fn verdict(pass: bool) -> u8 {
    if pass {
        0
    } else {
        1
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.cmd {
        Cmd::ListModels => {
            let mut s = String::new();
            for name in model_names() {
                let m = model_catalog(name, &Params::default())?;
                s.push_str(&format!("{name:24} {}\n", m.description));
            }
            print!("{s}");
            Ok(0)
        }
        Cmd::Verify(a) => {
            let cfg = a.common.config();
            let params = Params { k: a.k, eps: a.eps, a: a.a, n: a.n, theta0: a.theta0, ..Params::default() };
            let (model, source) = match (&a.model, &a.file) {
                (Some(m), _) => (model_catalog(m, &params)?, json!({ "model": m })),
                (None, Some(f)) => (load_model_file(f)?, json!({ "file": f.display().to_string() })),
                (None, None) => unreachable!("clap requires --model or --file"),
            };
            let checks = model.verify(&cfg)?;
            let v = report::verify_report(source, &params, &cfg, &checks, model.expected_pass);
            write_out(&a.common.out, &render(&v, a.format))?;
            Ok(verdict(v["overall_pass"].as_bool() == Some(true)))
        }
        Cmd::Construct(a) => {
            let cfg = a.common.config();
            let r = assemble(a.lambda, a.k, a.a, a.r0, &cfg)?;
            let v = report::pipeline_json(&r, &cfg);
            write_out(&a.common.out, &render(&v, a.format))?;
            Ok(verdict(r.overall_pass))
        }
        Cmd::Foliation(a) => {
            let xi = construct_xi_prime(a.k)?;
            let pb = xi.form.page_pullback();
            let text = match a.format {
                PortraitFormat::Csv => portrait_csv(&pb, 1.0, a.grid),
                PortraitFormat::Svg => portrait_svg(&pb, 1.0, a.grid, &xi.report.singularities),
                PortraitFormat::Json => report::to_json_string(&json!({
                    "tool_version": engelbook::TOOL_VERSION,
                    "k": a.k,
                    "singularities": report::singularities_json(&xi.report),
                    "arrangement": xi.form.arrangement(),
                    "checks": [report::check_json(&xi.contact), report::check_json(&xi.normal_form)],
                })),
            };
            write_out(&a.out, &text)?;
            Ok(verdict(xi.report.euler_identity))
        }
        Cmd::Invariants(a) => {
            let tol = Tolerances { residual: a.residual_tol, ..Tolerances::default() };
            let (inv, check) = collar_invariants(a.lambda, a.k, a.a.unwrap_or(FRAC_PI_4), &tol)?;
            let v = json!({
                "tool_version": engelbook::TOOL_VERSION,
                "conventions": report::conventions(),
                "invariants": inv,
                "expected": { "tw_gamma_x": 0, "tw_gamma_y": a.lambda, "tw_gamma_phi": a.k, "rotation_k": a.k },
                "overall_pass": check.pass,
            });
            write_out(&a.out, &report::to_json_string(&v))?;
            Ok(verdict(check.pass))
        }
        Cmd::ProbeLooseness(a) => {
            let tol = Tolerances::default();
            let (piece, default_seg) = match a.piece {
                PieceKind::Collar => (build_collar_engel(a.lambda, a.k, FRAC_PI_4)?, SegmentKind::Phi),
                PieceKind::Binding => (build_binding_engel(a.l.unwrap_or(a.k + a.lambda), a.k, 1.0)?, SegmentKind::Y),
            };
            let seg = match a.segment.unwrap_or(default_seg) {
                SegmentKind::Phi => collar_probe_segment(),
                SegmentKind::Y => binding_probe_segment(1.0),
                SegmentKind::Short => Loop {
                    label: "short".into(),
                    base: vec![0.0, 0.0, 0.1 + 0.65 * matches!(a.piece, PieceKind::Binding) as i64 as f64, 0.0],
                    segments: vec![vec![0.0, 0.0, 0.0, 0.3], vec![0.0, 0.0, 0.0, -0.3]],
                },
            };
            let count = looseness_probe(&piece, &seg, &tol)?;
            let v = json!({ "piece": piece.name, "segment": seg.label, "rotations": count });
            write_out(&a.out, &report::to_json_string(&v))?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(e)) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::from(1)
        }
    }
}
