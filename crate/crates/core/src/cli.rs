//! Command-line driver: `lattice`, `moments`, `tilde` and `amenability`.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::amenability::{self, Verdict, DEFAULT_KMAX, DEFAULT_MARGIN};
use crate::backends::{Backend, Source};
use crate::error::{Error, Result};
use crate::lattice::{self, build_lattice, default_max_bound, DEFAULT_SEED};
use crate::moments::{self, MomentTable};
use crate::reconstruct::{closure, seeds_from_lattice, universal_hom_dims, ClosureOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "qlattice", version, about = "Standard-invariant lattices, moments and amenability reports")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    /// Backend JSON file.
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, env = "QLATTICE_THREADS")]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Dot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Cumulant,
    Oracle,
    Closure,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Test {
    Kesten,
    Lattice,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the lattice and verify axioms, shift and Bratteli data.
    Lattice {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 4)]
        bound: usize,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Moment table `w ↦ dim Hom(1, v^{⊗w})`.
    Moments {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 6)]
        max_len: usize,
    },
    /// Moments of the pair obtained by a free Haar unitary twist.
    Tilde {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 6)]
        max_len: usize,
        #[arg(long, value_enum, default_value_t = Method::All)]
        method: Method,
        /// Lattice bound for the closure seeds.
        #[arg(long)]
        bound: Option<usize>,
    },
    /// Kesten or lattice amenability verdict.
    Amenability {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Test::Kesten)]
        test: Test,
        #[arg(long, default_value_t = DEFAULT_KMAX)]
        kmax: usize,
        #[arg(long, default_value_t = DEFAULT_MARGIN)]
        margin: f64,
        /// Exit with status 3 on an inconclusive verdict.
        #[arg(long)]
        strict: bool,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Lattice { common, .. }
            | Command::Moments { common, .. }
            | Command::Tilde { common, .. }
            | Command::Amenability { common, .. } => common,
        }
    }
}

/// Validated settings shared by every subcommand.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub backend: Backend,
    pub tol: f64,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    fn new(c: &Common) -> Result<RunConfig> {
        if !(c.tol > 0.0 && c.tol <= 1e-3) {
            return Err(Error::Invalid(format!("--tol must lie in (0, 1e-3], got {}", c.tol)));
        }
        let backend = Backend::load(&c.spec, c.tol)?;
        Ok(RunConfig { backend, tol: c.tol, seed: c.seed, out: c.out.clone() })
    }
}

/// A finished command: text for stdout or `--out`, and an exit status.
struct Outcome {
    text: String,
    code: i32,
}

fn json_text<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Io(_)
        | Error::Json(_)
        | Error::Invalid(_)
        | Error::Domain(_)
        | Error::Unsupported(_)
        | Error::SignatureMismatch { .. } => EXIT_CONFIG,
        _ => EXIT_FAILED,
    }
}

fn cmd_lattice(cfg: &RunConfig, bound: usize, format: Format, err: &mut dyn Write) -> Result<Outcome> {
    let max = default_max_bound(cfg.backend.n);
    if bound > max {
        return Err(Error::Invalid(format!("--bound {bound} exceeds the maximum {max} for n = {}", cfg.backend.n)));
    }
    let report = lattice::lattice_report(&cfg.backend, bound, cfg.tol, cfg.seed)?;
    let code = if report.passed { EXIT_OK } else { EXIT_FAILED };
    if !report.passed {
        let _ = writeln!(err, "lattice verification failed: max axiom residual {:.3e}", report.axioms.max_residual());
        if let Some(e) = &report.bratteli_error {
            let _ = writeln!(err, "bratteli: {e}");
        }
    }
    let text = match format {
        Format::Json => json_text(&report)?,
        Format::Dot => match &report.bratteli {
            Some(b) => b.to_dot(),
            None => return Ok(Outcome { text: String::new(), code: EXIT_FAILED }),
        },
    };
    Ok(Outcome { text, code })
}

fn cmd_moments(cfg: &RunConfig, max_len: usize) -> Result<Outcome> {
    if let Some(max) = cfg.backend.max_moment_len() {
        if max_len > max {
            return Err(Error::Invalid(format!("--max-len {max_len} exceeds the maximum {max} for this backend")));
        }
    }
    let t = moments::moments_from_backend(&cfg.backend, max_len)?;
    Ok(Outcome { text: json_text(&t)?, code: EXIT_OK })
}

fn closure_table(cfg: &RunConfig, max_len: usize, bound: Option<usize>) -> Result<MomentTable> {
    let bound = bound.unwrap_or_else(|| default_max_bound(cfg.backend.n));
    let l = build_lattice(&cfg.backend, bound, cfg.tol)?;
    let seeds = seeds_from_lattice(&l, bound.saturating_sub(1));
    let mut opts = ClosureOptions::new(max_len, cfg.tol);
    opts.seed = cfg.seed;
    let cc = closure(&cfg.backend.duality, &seeds, &opts)?;
    universal_hom_dims(&cc, max_len)
}

fn cmd_tilde(cfg: &RunConfig, max_len: usize, method: Method, bound: Option<usize>, err: &mut dyn Write) -> Result<Outcome> {
    let dual = match &cfg.backend.source {
        Source::DualGroup(d) => Some(d),
        _ => None,
    };
    if method == Method::Oracle && dual.is_none() {
        return Err(Error::Invalid("method 'oracle' needs a dual_group backend".into()));
    }
    let source = moments::moments_from_backend(&cfg.backend, max_len)?;
    let mut tables: Vec<(&str, MomentTable)> = Vec::new();
    if matches!(method, Method::Cumulant | Method::All) {
        tables.push(("cumulant", moments::tilde_moments(&source)?));
    }
    if let (Method::Oracle | Method::All, Some(d)) = (method, dual) {
        tables.push(("oracle", moments::word_oracle_tilde(d, max_len)?));
    }
    if matches!(method, Method::Closure | Method::All) {
        tables.push(("closure", closure_table(cfg, max_len, bound)?));
    }
    let mut disagreement = None;
    for pair in tables.windows(2) {
        if let Some(w) = pair[0].1.first_difference(&pair[1].1) {
            let _ = writeln!(err, "{} and {} differ at word '{w}'", pair[0].0, pair[1].0);
            disagreement.get_or_insert(w.to_string());
        }
    }
    let alternating_match = tables.iter().all(|(_, t)| {
        t.entries.iter().filter(|(w, _)| w.is_alternating() && w.len() % 2 == 0).all(|(w, v)| source.entries.get(w) == Some(v))
    });
    let code = if disagreement.is_none() { EXIT_OK } else { EXIT_FAILED };
    let report = json!({
        "backend": cfg.backend.kind(),
        "method": method,
        "max_len": max_len,
        "agree": disagreement.is_none(),
        "first_difference": disagreement,
        "alternating_match": alternating_match,
        "tables": tables.iter().map(|(k, t)| (k.to_string(), serde_json::to_value(t).expect("table"))).collect::<serde_json::Map<_, _>>(),
    });
    Ok(Outcome { text: json_text(&report)?, code })
}

fn cmd_amenability(cfg: &RunConfig, test: Test, kmax: usize, margin: f64, strict: bool, err: &mut dyn Write) -> Result<Outcome> {
    if !(margin > 0.0 && margin < 1.0 / 3.0) {
        return Err(Error::Invalid(format!("--margin must lie in (0, 1/3), got {margin}")));
    }
    let report = match test {
        Test::Kesten => amenability::kesten_report(&cfg.backend, kmax, margin)?,
        Test::Lattice => amenability::lattice_report(&cfg.backend, kmax, margin, cfg.tol)?,
    };
    let code = if strict && report.verdict == Verdict::Inconclusive {
        let _ = writeln!(err, "verdict inconclusive at k_max = {kmax}");
        EXIT_INCONCLUSIVE
    } else {
        EXIT_OK
    };
    Ok(Outcome { text: json_text(&report)?, code })
}

fn execute(cmd: &Command, err: &mut dyn Write) -> Result<(Outcome, Option<PathBuf>)> {
    let cfg = RunConfig::new(cmd.common())?;
    let outcome = match cmd {
        Command::Lattice { bound, format, .. } => cmd_lattice(&cfg, *bound, *format, err)?,
        Command::Moments { max_len, .. } => cmd_moments(&cfg, *max_len)?,
        Command::Tilde { max_len, method, bound, .. } => cmd_tilde(&cfg, *max_len, *method, *bound, err)?,
        Command::Amenability { test, kmax, margin, strict, .. } => {
            cmd_amenability(&cfg, *test, *kmax, *margin, *strict, err)?
        }
    };
    Ok((outcome, cfg.out))
}

/// Runs a parsed command, writing machine output to `out` (or `--out`) and
/// diagnostics to `err`. Returns the exit status.
pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let threads = cli.command.common().threads;
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_CONFIG;
        }
    };
    let mut diag = Vec::new();
    let result = pool.install(|| execute(&cli.command, &mut diag));
    let _ = err.write_all(&diag);
    match result {
        Ok((outcome, path)) => {
            let written = match path {
                Some(p) => std::fs::write(&p, &outcome.text),
                None => out.write_all(outcome.text.as_bytes()),
            };
            match written {
                Ok(()) => outcome.code,
                Err(e) => {
                    let _ = writeln!(err, "error: {e}");
                    EXIT_CONFIG
                }
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code_for(&e)
        }
    }
}

/// Parses `args` (including the program name) and runs them.
pub fn run_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli, out, err),
        Err(e) => {
            let _ = write!(err, "{e}");
            if e.use_stderr() {
                EXIT_CONFIG
            } else {
                EXIT_OK
            }
        }
    }
}
