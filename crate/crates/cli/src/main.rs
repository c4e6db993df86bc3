use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use twistrec::{Mode, Normalization, Variant};
use twistrec_cli::{run, CliError, Command, CurveSpec, RunConfig, Suite, TwistSpec};

#[derive(Parser)]
#[command(name = "twistrec", version, about = "Topological recursion on twisted spectral curves")]
struct Cli {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for sampled points.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of sampled points or tuples.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Print the resolved configuration and exit.
    #[arg(long, global = true)]
    print_config: bool,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Dimension counts for the moduli space and Hitchin base.
    Dims {
        #[arg(long)]
        rank: Option<i64>,
        #[arg(long)]
        deg_l: Option<i64>,
        #[arg(long)]
        genus: Option<i64>,
        #[arg(long, allow_hyphen_values = true)]
        degree: Option<i64>,
        #[arg(long)]
        trace_free: bool,
    },
    /// Exact expressions or sampled values of W_{g,n}.
    Recursion {
        #[command(flatten)]
        curve: CurveArgs,
        #[command(flatten)]
        rec: RecArgs,
    },
    /// Period matrix, lambda coordinate and cycle data.
    Periods {
        #[command(flatten)]
        curve: CurveArgs,
    },
    /// Run verification suites and emit a JSON-lines report.
    Verify {
        /// Comma-separated suites, or `all`.
        #[arg(long, value_delimiter = ',')]
        suite: Vec<String>,
        #[command(flatten)]
        curve: CurveArgs,
        #[command(flatten)]
        rec: RecArgs,
        #[command(flatten)]
        fam: FamilyArgs,
    },
}

#[derive(Args)]
struct CurveArgs {
    /// `airy`, or a JSON curve object.
    #[arg(long)]
    curve: Option<String>,
    /// JSON twist object, or `none`.
    #[arg(long)]
    twist: Option<String>,
    /// Contour clearance in branch-point spacings.
    #[arg(long)]
    separation: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Ordinary,
    HitchinGlobal,
    Twisted,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Evaluable,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormArg {
    SigmaBase,
    ResidueLemma,
}

#[derive(Args)]
struct RecArgs {
    /// Genus; with --n selects the single pair (g, n).
    #[arg(long)]
    g: Option<u32>,
    #[arg(long)]
    n: Option<u32>,
    /// Every stable pair up to (g, n) instead of only (g, n).
    #[arg(long)]
    up_to: bool,
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long, value_enum)]
    normalization: Option<NormArg>,
    #[arg(long)]
    series_order: Option<i32>,
    #[arg(long)]
    contour_nodes: Option<usize>,
}

#[derive(Args)]
struct FamilyArgs {
    /// Deformation direction as `re,im`.
    #[arg(long, allow_hyphen_values = true)]
    direction: Option<String>,
    #[arg(long)]
    radius: Option<f64>,
    /// Finite-difference step.
    #[arg(long)]
    steps: Option<f64>,
    #[arg(long)]
    tol_properties: Option<f64>,
    #[arg(long)]
    tol_rauch: Option<f64>,
    #[arg(long)]
    tol_dm_cubic: Option<f64>,
    #[arg(long)]
    tol_taylor: Option<f64>,
}

fn json_arg<T: serde::de::DeserializeOwned>(what: &str, s: &str) -> Result<T, CliError> {
    serde_json::from_str(s).map_err(|e| CliError::Config(format!("--{what}: {e}")))
}

fn apply_curve(cfg: &mut RunConfig, a: &CurveArgs) -> Result<(), CliError> {
    if let Some(c) = &a.curve {
        cfg.curve = if c.trim() == "airy" { CurveSpec::Airy } else { json_arg("curve", c)? };
    }
    if let Some(t) = &a.twist {
        cfg.twist = if t.trim() == "none" { None } else { Some(json_arg::<TwistSpec>("twist", t)?) };
    }
    if let Some(s) = a.separation {
        cfg.separation = s;
    }
    Ok(())
}

fn apply_rec(cfg: &mut RunConfig, a: &RecArgs) {
    let r = &mut cfg.recursion;
    if a.g.is_some() || a.n.is_some() {
        r.g_max = a.g.unwrap_or(r.g_max);
        r.n_max = a.n.unwrap_or(r.n_max);
        r.single = !a.up_to;
    } else if a.up_to {
        r.single = false;
    }
    if let Some(v) = a.variant {
        r.variant = match v {
            VariantArg::Ordinary => Variant::Ordinary,
            VariantArg::HitchinGlobal => Variant::HitchinGlobal,
            VariantArg::Twisted => Variant::Twisted,
        };
    }
    if let Some(m) = a.mode {
        r.mode = match m {
            ModeArg::Exact => Mode::Exact,
            ModeArg::Evaluable => Mode::Evaluable,
        };
    }
    if let Some(n) = a.normalization {
        r.normalization = match n {
            NormArg::SigmaBase => Normalization::SigmaBase,
            NormArg::ResidueLemma => Normalization::ResidueLemma,
        };
    }
    r.series_order = a.series_order.unwrap_or(r.series_order);
    r.contour_nodes = a.contour_nodes.unwrap_or(r.contour_nodes);
}

fn apply_family(cfg: &mut RunConfig, a: &FamilyArgs) -> Result<(), CliError> {
    if let Some(d) = &a.direction {
        let parts: Vec<f64> = d.split(',').map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|e| CliError::Config(format!("--direction: {e}")))?;
        cfg.family.direction = match parts[..] {
            [re] => [re, 0.0],
            [re, im] => [re, im],
            _ => return Err(CliError::Config("--direction takes `re,im`".into())),
        };
    }
    let f = &mut cfg.family;
    f.radius = a.radius.unwrap_or(f.radius);
    f.steps = a.steps.unwrap_or(f.steps);
    let t = &mut cfg.tolerances;
    t.properties = a.tol_properties.unwrap_or(t.properties);
    t.rauch = a.tol_rauch.unwrap_or(t.rauch);
    t.dm_cubic = a.tol_dm_cubic.unwrap_or(t.dm_cubic);
    t.taylor = a.tol_taylor.unwrap_or(t.taylor);
    Ok(())
}

fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            RunConfig::from_json(&text)?
        }
        None => RunConfig::default(),
    };
    match &cli.command {
        Sub::Dims { rank, deg_l, genus, degree, trace_free } => {
            cfg.command = Command::Dims;
            let m = &mut cfg.moduli;
            m.rank = rank.unwrap_or(m.rank);
            m.deg_l = deg_l.unwrap_or(m.deg_l);
            m.genus = genus.unwrap_or(m.genus);
            m.degree = degree.unwrap_or(m.degree);
            m.trace_free |= trace_free;
        }
        Sub::Recursion { curve, rec } => {
            cfg.command = Command::Recursion;
            apply_curve(&mut cfg, curve)?;
            apply_rec(&mut cfg, rec);
        }
        Sub::Periods { curve } => {
            cfg.command = Command::Periods;
            apply_curve(&mut cfg, curve)?;
        }
        Sub::Verify { suite, curve, rec, fam } => {
            cfg.command = Command::Verify;
            if suite.iter().any(|s| s == "all") {
                cfg.suite = Suite::ALL.to_vec();
            } else if !suite.is_empty() {
                cfg.suite = suite.iter().map(|s| s.parse()).collect::<Result<_, _>>()?;
            }
            apply_curve(&mut cfg, curve)?;
            apply_rec(&mut cfg, rec);
            apply_family(&mut cfg, fam)?;
        }
    }
    if let Some(o) = &cli.out {
        cfg.output.dir = o.clone();
    }
    cfg.seed = cli.seed.unwrap_or(cfg.seed);
    cfg.samples = cli.samples.unwrap_or(cfg.samples);
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: --threads: {e}");
            return ExitCode::from(2);
        }
    }
    let cfg = match resolve(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    if cli.print_config {
        println!("{}", cfg.to_json());
        return ExitCode::SUCCESS;
    }
    match run(&cfg) {
        Ok(out) => {
            print!("{}", out.stdout);
            if !out.pass {
                eprintln!("one or more checks failed");
            }
            ExitCode::from(out.exit_code())
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
