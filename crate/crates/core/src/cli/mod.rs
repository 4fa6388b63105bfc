//! Command-line front end: `run`, `sweep`, `qfunc`, `ep-scan` and `fit`.
//!
//! Exit status is 0 on success, 1 for configuration errors, 2 when a
//! requested detection branch has zero probability and 3 for other
//! numerical failures. Failures are reported as a JSON record on stderr.

mod config;
mod record;

pub use config::{parse_f64_grid, parse_usize_grid, Command, DeltaSpec, Flags, PhaseModeArg, RunConfig};
pub use record::{format_f64, RunRecord};

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::analysis::{husimi_q, quadrature_stats, select_optimal_n, GridSpec, QGrid};
use crate::error::{Error, Result};
use crate::optimizer::{
    ep_scan, fit_cat_extension, fit_protocol, sweep_grid, FitOptions, FitResult, SweepOptions, SweepRow,
};
use crate::protocol::{extend_to_cat, run_generalized_protocol, CatResult, ProtocolResult, ProtocolSpec};

#[derive(Debug, Parser)]
#[command(name = "nonclassical", version, about = "Nonclassical state preparation by repeated photon subtraction and displacement")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Run one protocol and write a JSON record.
    Run(Flags),
    /// Sweep an (|alpha|, N) grid and write surface and optimal-N CSVs.
    Sweep(Flags),
    /// Husimi Q function of a protocol output on a grid.
    Qfunc(Flags),
    /// Entanglement potential against N for several k, with and without the cat click.
    EpScan(Flags),
    /// Run one protocol and fit the target family.
    Fit(Flags),
}

/// Relative shift above which `--convergence-check` reports a failure.
pub const CONVERGENCE_TOLERANCE: f64 = 1e-6;

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::ZeroProbability { .. } => 2,
        Error::InvalidArgument(_)
        | Error::InvalidDensity(_)
        | Error::DimensionMismatch { .. }
        | Error::CutoffTooSmall { .. }
        | Error::PadOverflow { .. }
        | Error::IndexOutOfRange { .. } => 1,
        _ => 3,
    }
}

fn report_error(err: &Error) -> i32 {
    let code = exit_code(err);
    let record = serde_json::json!({ "error": err.kind(), "message": err.to_string(), "exit_code": code });
    eprintln!("{record}");
    code
}

/// Parses `args` (program name first), runs the command and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = e.print();
                return if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand { 1 } else { 0 };
            }
            return report_error(&Error::InvalidArgument(e.to_string().trim().to_string()));
        }
    };
    let (command, flags) = match cli.command {
        Sub::Run(f) => (Command::Run, f),
        Sub::Sweep(f) => (Command::Sweep, f),
        Sub::Qfunc(f) => (Command::Qfunc, f),
        Sub::EpScan(f) => (Command::EpScan, f),
        Sub::Fit(f) => (Command::Fit, f),
    };
    let result = RunConfig::from_flags(command, flags).and_then(|cfg| match cfg.command {
        Command::Run | Command::Fit => cmd_run(&cfg),
        Command::Sweep => cmd_sweep(&cfg),
        Command::Qfunc => cmd_qfunc(&cfg),
        Command::EpScan => cmd_ep_scan(&cfg),
    });
    match result {
        Ok(code) => code,
        Err(e) => report_error(&e),
    }
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::InvalidArgument(format!("cannot create {}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| Error::InvalidArgument(format!("cannot write {}: {e}", path.display())))
}

/// Protocol spec described by a config, optionally at another cutoff.
pub fn protocol_spec(cfg: &RunConfig, cutoff: Option<usize>) -> ProtocolSpec {
    let mut spec = ProtocolSpec::new(cfg.alpha(), cfg.k, cfg.n);
    if let Some(d) = cutoff.or(cfg.cutoff) {
        spec = spec.with_cutoff(d);
    }
    match &cfg.delta {
        DeltaSpec::Explicit(v) => spec.with_delta(v.clone()),
        DeltaSpec::Radial(m) => {
            let odd: Vec<usize> = (1..cfg.k).step_by(2).collect();
            spec.with_radial_tweak(*m, &odd)
        }
    }
}

/// Everything `run` and `fit` compute for one cutoff.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub result: ProtocolResult,
    pub cat: Option<CatResult>,
    pub fit: Option<FitResult>,
}

impl RunOutcome {
    /// Scalars compared by the convergence check.
    pub fn scalars(&self) -> Vec<(&'static str, f64)> {
        let q = quadrature_stats(&self.result.final_state, self.result.spec.alpha.arg());
        let mut v = vec![
            ("success_probability", self.result.success_probability),
            ("mean_photon_number", self.result.final_state.mean_photon_number()),
            ("var_x", q.var_x),
            ("var_p", q.var_p),
        ];
        if let Some(c) = &self.cat {
            v.push(("cat_total_success", c.total_success));
            v.push(("cat_mean_photon_number", c.state.mean_photon_number()));
        }
        if let Some(f) = &self.fit {
            v.push(("fidelity", f.fidelity));
        }
        v
    }
}

pub fn execute_run(cfg: &RunConfig, cutoff: Option<usize>, target_cutoff: Option<usize>) -> Result<RunOutcome> {
    let result = run_generalized_protocol(&protocol_spec(cfg, cutoff))?;
    let cat = cfg.cat.then(|| extend_to_cat(&result)).transpose()?;
    let options = FitOptions { phase_mode: cfg.phase_mode, target_cutoff, ..FitOptions::default() };
    let fit = if !cfg.fit {
        None
    } else if let Some(c) = &cat {
        Some(fit_cat_extension(&result, c, &options)?)
    } else {
        Some(fit_protocol(&result, &options)?)
    };
    Ok(RunOutcome { result, cat, fit })
}

/// Largest relative change between matching scalars.
pub fn max_relative_shift(base: &[(&'static str, f64)], other: &[(&'static str, f64)]) -> (f64, &'static str) {
    base.iter().zip(other).fold((0.0, ""), |acc, (&(name, a), &(_, b))| {
        let shift = if a.abs() > f64::MIN_POSITIVE { (a - b).abs() / a.abs() } else { (a - b).abs() };
        if shift > acc.0 { (shift, name) } else { acc }
    })
}

fn cmd_run(cfg: &RunConfig) -> Result<i32> {
    let base = execute_run(cfg, None, None)?;
    let convergence = if cfg.convergence_check {
        let d = base.result.spec.cutoff;
        let doubled = execute_run(cfg, Some(2 * d), Some(d))?;
        let (shift, worst) = max_relative_shift(&base.scalars(), &doubled.scalars());
        Some(record::ConvergenceRecord {
            cutoff: 2 * d,
            max_relative_shift: shift,
            worst_scalar: worst.to_string(),
            passed: shift < CONVERGENCE_TOLERANCE,
        })
    } else {
        None
    };
    let record = RunRecord::new(cfg, &base, convergence.clone());
    let path = with_suffix(&cfg.prefix(), ".json");
    let json = serde_json::to_string_pretty(&record).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    write_file(&path, &(json + "\n"))?;

    let r = &base.result;
    let mut line = format!(
        "{}: |alpha|={} k={} N={} cutoff={} success={:.6} <n>={:.6} var_p={:.6}",
        cfg.command.as_str(),
        cfg.alpha_abs,
        cfg.k,
        cfg.n,
        r.spec.cutoff,
        r.success_probability,
        r.final_state.mean_photon_number(),
        record.quadratures.var_p,
    );
    if let Some(c) = &base.cat {
        let _ = write!(line, " cat_success={:.6}", c.total_success);
    }
    if let Some(f) = &base.fit {
        let _ = write!(line, " fidelity={:.6} z={:.6}{:+.6}i", f.fidelity, f.z.re, f.z.im);
    }
    if let Some(c) = &convergence {
        let _ = write!(line, " convergence_shift={:.3e}{}", c.max_relative_shift, if c.passed { "" } else { " (NOT CONVERGED)" });
    }
    let _ = write!(line, " -> {}", path.display());
    println!("{line}");
    Ok(0)
}

fn sweep_options(cfg: &RunConfig) -> SweepOptions {
    SweepOptions {
        alpha_phase: cfg.alpha_phase,
        cutoff: cfg.cutoff,
        cat: cfg.cat,
        ep: cfg.ep,
        fidelity: cfg.fit,
        embed_cutoff: cfg.embed_cutoff,
        fit: FitOptions { phase_mode: cfg.phase_mode, ..FitOptions::default() },
    }
}

fn csv_error(e: &Error) -> String {
    format!("{}: {}", e.kind(), e).replace([',', '\n', '\r'], ";")
}

/// Surface CSV text for sweep rows.
pub fn surface_csv(rows: &[SweepRow], ep: bool, fidelity: bool) -> String {
    let mut out = String::from("alpha_abs,alpha_phase,N,k,var_p,var_x,product,squeezing_db,success_prob");
    if ep {
        out.push_str(",ep");
    }
    if fidelity {
        out.push_str(",fidelity");
    }
    out.push_str(",error\n");
    for row in rows {
        let _ = write!(out, "{},{},{},{}", format_f64(row.alpha_abs), format_f64(row.alpha_phase), row.n, row.k);
        let extra = ep as usize + fidelity as usize;
        match &row.outcome {
            Ok(m) => {
                for v in [m.var_p, m.var_x, m.product, m.squeezing_db, m.success_prob] {
                    let _ = write!(out, ",{}", format_f64(v));
                }
                if ep {
                    let _ = write!(out, ",{}", m.ep.map(format_f64).unwrap_or_default());
                }
                if fidelity {
                    let _ = write!(out, ",{}", m.fidelity.map(format_f64).unwrap_or_default());
                }
                out.push_str(",\n");
            }
            Err(e) => {
                out.push_str(&",".repeat(5 + extra));
                let _ = writeln!(out, ",{}", csv_error(e));
            }
        }
    }
    out
}

/// Optimal-`N` curve from the rows of one `k`, `(|alpha|, N*)` per `|alpha|`.
pub fn white_curve(rows: &[SweepRow], alpha_grid: &[f64], n_grid: &[usize]) -> Vec<(f64, Option<usize>)> {
    alpha_grid
        .iter()
        .map(|&a| {
            let row: Vec<Option<(f64, f64)>> = n_grid
                .iter()
                .map(|&n| {
                    rows.iter()
                        .find(|r| r.alpha_abs == a && r.n == n)
                        .and_then(|r| r.outcome.as_ref().ok())
                        .map(|m| (m.var_p, m.product))
                })
                .collect();
            (a, select_optimal_n(&row).map(|i| n_grid[i - 1]))
        })
        .collect()
}

fn cmd_sweep(cfg: &RunConfig) -> Result<i32> {
    let opts = sweep_options(cfg);
    let mut rows = Vec::new();
    let mut first_k_rows = Vec::new();
    for (i, &k) in cfg.grid_k.iter().enumerate() {
        let block = sweep_grid(&cfg.grid_alpha, &cfg.grid_n, k, &opts)?;
        if i == 0 {
            first_k_rows = block.clone();
        }
        rows.extend(block);
    }
    let prefix = cfg.prefix();
    let surface_path = with_suffix(&prefix, "_surface.csv");
    write_file(&surface_path, &surface_csv(&rows, cfg.ep, cfg.fit))?;

    let curve = white_curve(&first_k_rows, &cfg.grid_alpha, &cfg.grid_n);
    let mut white = String::from("alpha_abs,N_star\n");
    for (a, n) in &curve {
        let _ = writeln!(white, "{},{}", format_f64(*a), n.map(|n| n.to_string()).unwrap_or_default());
    }
    let white_path = with_suffix(&prefix, "_white.csv");
    write_file(&white_path, &white)?;

    let failed = rows.iter().filter(|r| r.outcome.is_err()).count();
    println!(
        "sweep: {} rows, {} failed -> {}, {}",
        rows.len(),
        failed,
        surface_path.display(),
        white_path.display()
    );
    if failed == rows.len() {
        let all_zero = rows.iter().all(|r| matches!(r.outcome, Err(Error::ZeroProbability { .. })));
        return Ok(if all_zero { 2 } else { 3 });
    }
    Ok(0)
}

/// `re,im,q` CSV text.
pub fn q_csv(q: &QGrid) -> String {
    let mut out = String::from("re,im,q\n");
    for (j, &y) in q.im_axis.iter().enumerate() {
        for (i, &x) in q.re_axis.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", format_f64(x), format_f64(y), format_f64(q.at(i, j)));
        }
    }
    out
}

fn cmd_qfunc(cfg: &RunConfig) -> Result<i32> {
    let result = run_generalized_protocol(&protocol_spec(cfg, None))?;
    let grid = cfg.q_grid.unwrap_or_else(|| GridSpec::default_for(cfg.alpha_abs));
    let prefix = cfg.prefix();
    let q = husimi_q(&result.final_state, &grid)?;
    let path = with_suffix(&prefix, "_q.csv");
    write_file(&path, &q_csv(&q))?;
    let (x, y, peak) = q.peak();
    let mut line = format!(
        "qfunc: success={:.6} peak={:.6} at ({:.4}, {:.4}) sum={:.6} -> {}",
        result.success_probability,
        peak,
        x,
        y,
        q.riemann_sum(),
        path.display()
    );
    if cfg.cat {
        let cat = extend_to_cat(&result)?;
        let qc = husimi_q(&cat.state, &grid)?;
        let cpath = with_suffix(&prefix, "_cat_q.csv");
        write_file(&cpath, &q_csv(&qc))?;
        let _ = write!(line, ", cat sum={:.6} -> {}", qc.riemann_sum(), cpath.display());
    }
    println!("{line}");
    Ok(0)
}

fn cmd_ep_scan(cfg: &RunConfig) -> Result<i32> {
    let opts = sweep_options(cfg);
    let rows = ep_scan(cfg.alpha_abs, &cfg.grid_k, &cfg.grid_n, &opts)?;
    let mut out = String::from("k,variant,N,ep,");
    if cfg.fit {
        out.push_str("fidelity,");
    }
    out.push_str("success_prob,error\n");
    for r in &rows {
        let _ = write!(out, "{},{},{}", r.k, r.variant.as_str(), r.n);
        match &r.outcome {
            Ok(m) => {
                let _ = write!(out, ",{}", m.ep.map(format_f64).unwrap_or_default());
                if cfg.fit {
                    let _ = write!(out, ",{}", m.fidelity.map(format_f64).unwrap_or_default());
                }
                let _ = writeln!(out, ",{},", format_f64(m.success_prob));
            }
            Err(e) => {
                out.push_str(if cfg.fit { ",,," } else { ",," });
                let _ = writeln!(out, ",{}", csv_error(e));
            }
        }
    }
    let path = with_suffix(&cfg.prefix(), "_ep.csv");
    write_file(&path, &out)?;
    let mut line = String::from("ep-scan:");
    for &k in &cfg.grid_k {
        for variant in ["generalized", "cat"] {
            let best = rows
                .iter()
                .filter(|r| r.k == k && r.variant.as_str() == variant)
                .filter_map(|r| r.outcome.as_ref().ok().and_then(|m| m.ep).map(|e| (r.n, e)))
                .fold(None, |acc: Option<(usize, f64)>, (n, e)| match acc {
                    Some((_, b)) if b >= e => acc,
                    _ => Some((n, e)),
                });
            if let Some((n, e)) = best {
                let _ = write!(line, " k={k}/{variant}: max EP {e:.4} at N={n};");
            }
        }
    }
    let _ = write!(line, " -> {}", path.display());
    println!("{line}");
    if rows.iter().all(|r| r.outcome.is_err()) {
        return Ok(2);
    }
    Ok(0)
}
