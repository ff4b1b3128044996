//! Command-line interface: `verify`, `list` and `describe`.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails, 2 on input
//! errors (unknown pair, malformed pair file, bad flags).

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use nalgebra::{DMatrix, SymmetricEigen};

use crate::catalog::{self, CatalogEntry};
use crate::pairfile::load_pair_file;
use crate::projective::{benenti_data, is_diagonalizable, ProjectivePair, DEFAULT_T_GRID};
use crate::verify::{sample_points, verify_pair, Check, VerifyConfig};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "projeq", version, about = "Verify projectively equivalent metric pairs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run verification checks on a pair and write a TOML report.
    Verify(VerifyArgs),
    /// List the built-in catalog.
    List,
    /// Summarise a pair: dimension, signatures and the spectrum of L.
    Describe(DescribeArgs),
}

#[derive(Debug, clap::Args)]
struct VerifyArgs {
    /// Catalog name or path to a pair file.
    pair: String,
    /// Number of sampled points.
    #[arg(long, default_value_t = 20)]
    points: usize,
    /// Jet order of the metrics.
    #[arg(long, default_value_t = 4)]
    order: usize,
    /// Pass threshold for every residual.
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    /// Comma-separated parameter values for the Killing family.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    t_grid: Option<Vec<f64>>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Comma-separated subset of: basic, connection, killing, ricci-comm,
    /// carter, poisson, commutator, decompose, drift.
    #[arg(long, value_delimiter = ',')]
    checks: Option<Vec<Check>>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Debug, clap::Args)]
struct DescribeArgs {
    /// Catalog name or path to a pair file.
    pair: String,
    #[arg(long, default_value_t = 5)]
    points: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

/// A pair resolved from the command line.
pub struct ResolvedPair {
    pub name: String,
    pub pair: ProjectivePair,
    pub entry: Option<CatalogEntry>,
}

/// Looks `name_or_path` up in the catalog, falling back to a pair file on disk.
pub fn resolve_pair(name_or_path: &str) -> Result<ResolvedPair, String> {
    if let Ok(entry) = catalog::get_entry(name_or_path) {
        return Ok(ResolvedPair {
            name: entry.name.to_string(),
            pair: entry.pair.clone(),
            entry: Some(entry),
        });
    }
    let path = Path::new(name_or_path);
    if !path.exists() {
        return Err(format!(
            "`{name_or_path}` is neither a catalog entry nor an existing file (try `projeq list`)"
        ));
    }
    let file = load_pair_file(path).map_err(|e| match e.position() {
        Some(_) => format!("{}:{e}", path.display()),
        None => e.to_string(),
    })?;
    Ok(ResolvedPair {
        name: file.name.unwrap_or_else(|| path.display().to_string()),
        pair: file.pair,
        entry: None,
    })
}

/// Runs the CLI with explicit arguments and output streams; returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_PASS };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{rendered}");
            } else {
                let _ = write!(out, "{rendered}");
            }
            return code;
        }
    };
    match cli.command {
        Command::List => {
            let _ = write!(out, "{}", list_text());
            EXIT_PASS
        }
        Command::Describe(args) => match resolve_pair(&args.pair) {
            Ok(resolved) => match describe_text(&resolved, args.points, args.seed) {
                Ok(text) => {
                    let _ = write!(out, "{text}");
                    EXIT_PASS
                }
                Err(e) => {
                    let _ = writeln!(err, "error: {e}");
                    EXIT_INPUT
                }
            },
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                EXIT_INPUT
            }
        },
        Command::Verify(args) => cmd_verify(args, out, err),
    }
}

fn cmd_verify(args: VerifyArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let resolved = match resolve_pair(&args.pair) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_INPUT;
        }
    };
    let config = VerifyConfig {
        points: args.points,
        order: args.order,
        tolerance: args.tol,
        t_grid: args.t_grid.unwrap_or_else(|| DEFAULT_T_GRID.to_vec()),
        seed: args.seed,
        checks: args.checks.unwrap_or_else(|| Check::ALL.to_vec()),
        jobs: args.jobs,
    };
    let report = match verify_pair(&resolved.name, &resolved.pair, &config) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_INPUT;
        }
    };
    let text = report.to_toml();
    match &args.report {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                let _ = writeln!(err, "error: cannot write {}: {e}", path.display());
                return EXIT_INPUT;
            }
        }
        None => {
            let _ = write!(out, "{text}");
        }
    }
    for c in &report.summary.checks {
        let max = c
            .max_residual
            .map_or_else(|| "n/a".to_string(), |m| format!("{m:.3e}"));
        let _ = writeln!(
            err,
            "{:<11} {:>5} records  {:>5} failed  max residual {max}",
            c.check, c.records, c.failed
        );
    }
    let verdict = if report.passed() { "PASS" } else { "FAIL" };
    let _ = writeln!(err, "{}: {verdict}", resolved.name);
    if report.passed() {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

fn list_text() -> String {
    let mut s = String::new();
    for entry in catalog::entries() {
        let _ = writeln!(
            s,
            "{:<18} dim {}  {:<10}  {}",
            entry.name,
            entry.pair.dim(),
            if entry.expected_equivalent { "equivalent" } else { "control" },
            entry.signature
        );
    }
    s
}

/// `(positive, negative)` eigenvalue counts of a symmetric matrix.
pub fn signature(values: &[f64], n: usize) -> (usize, usize) {
    let eig = SymmetricEigen::new(DMatrix::from_row_slice(n, n, values));
    let pos = eig.eigenvalues.iter().filter(|v| **v > 0.0).count();
    let neg = eig.eigenvalues.iter().filter(|v| **v < 0.0).count();
    (pos, neg)
}

fn signature_name(sig: (usize, usize), n: usize) -> String {
    let kind = match sig {
        (p, 0) if p == n => "Riemannian",
        (0, q) if q == n => "negative definite",
        (p, 1) | (1, p) if p + 1 == n => "Lorentzian",
        _ => "indefinite",
    };
    format!("({}, {}) {kind}", sig.0, sig.1)
}

fn format_complex(z: &nalgebra::Complex<f64>) -> String {
    if z.im.abs() <= 1e-12 * z.re.abs().max(1.0) {
        format!("{:.6}", z.re)
    } else {
        format!("{:.6}{:+.6}i", z.re, z.im)
    }
}

fn describe_text(resolved: &ResolvedPair, points: usize, seed: u64) -> Result<String, String> {
    let pair = &resolved.pair;
    let n = pair.dim();
    let mut s = String::new();
    let _ = writeln!(s, "pair: {}", resolved.name);
    let _ = writeln!(s, "dimension: {n}");
    let _ = writeln!(s, "coordinates: {}", pair.coordinates().join(", "));
    let domain: Vec<String> = pair
        .coordinates()
        .iter()
        .zip(pair.domain())
        .map(|(c, (lo, hi))| format!("{c} in ({lo}, {hi})"))
        .collect();
    let _ = writeln!(s, "domain: {}", domain.join(", "));
    if let Some(entry) = &resolved.entry {
        let _ = writeln!(
            s,
            "expected: {}",
            if entry.expected_equivalent {
                "projectively equivalent"
            } else {
                "not projectively equivalent (control)"
            }
        );
        let _ = writeln!(s, "provenance: {}", entry.provenance);
    }
    let samples = sample_points(pair, points.max(1), seed).map_err(|e| e.to_string())?;
    let _ = writeln!(s, "samples: {} (seed {seed})", samples.len());
    let mut g_sigs = Vec::new();
    let mut gbar_sigs = Vec::new();
    let mut diagonalizable = 0;
    for sample in &samples {
        let p = &sample.point;
        let g = pair.g().values_at(p).map_err(|e| e.to_string())?;
        let gbar = pair.gbar().values_at(p).map_err(|e| e.to_string())?;
        let (gs, gbs) = (signature(&g, n), signature(&gbar, n));
        g_sigs.push(gs);
        gbar_sigs.push(gbs);
        let data = benenti_data(pair, p, 1).map_err(|e| e.to_string())?;
        let mut ev = data.eigenvalues();
        ev.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
        let diag = is_diagonalizable(&data.l.values(), n, 1e-6);
        if diag {
            diagonalizable += 1;
        }
        let coords: Vec<String> = p.iter().map(|v| format!("{v:.6}")).collect();
        let _ = writeln!(s, "  at ({})", coords.join(", "));
        let _ = writeln!(s, "    g signature:    {}", signature_name(gs, n));
        let _ = writeln!(s, "    gbar signature: {}", signature_name(gbs, n));
        let evs: Vec<String> = ev.iter().map(format_complex).collect();
        let _ = writeln!(s, "    L eigenvalues:  {}", evs.join(", "));
        let _ = writeln!(s, "    L diagonalizable: {}", if diag { "yes" } else { "no" });
    }
    let uniform = |sigs: &[(usize, usize)]| {
        if sigs.windows(2).all(|w| w[0] == w[1]) {
            signature_name(sigs[0], n)
        } else {
            "varies over samples".to_string()
        }
    };
    let _ = writeln!(s, "g: {}", uniform(&g_sigs));
    let _ = writeln!(s, "gbar: {}", uniform(&gbar_sigs));
    let _ = writeln!(
        s,
        "L diagonalizable at {diagonalizable} of {} samples",
        samples.len()
    );
    Ok(s)
}
