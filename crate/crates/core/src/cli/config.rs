//! Run configuration: flags, flat `key = value` files and validation.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use num_complex::Complex64 as C64;
use sha2::{Digest, Sha256};

use crate::analysis::{Axis, GridSpec};
use crate::error::{Error, Result};
use crate::optimizer::PhaseMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Run,
    Sweep,
    Qfunc,
    EpScan,
    Fit,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Run => "run",
            Command::Sweep => "sweep",
            Command::Qfunc => "qfunc",
            Command::EpScan => "ep-scan",
            Command::Fit => "fit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PhaseModeArg {
    Match,
    Full,
}

/// Options shared by every subcommand. Each may also come from `--config`;
/// flags given on the command line win.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Flat `key = value` configuration file (keys are flag names without dashes).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Initial coherent amplitude |alpha|.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Phase of alpha in radians.
    #[arg(long, allow_hyphen_values = true)]
    pub alpha_phase: Option<f64>,
    /// Number of positions on the circle.
    #[arg(long)]
    pub k: Option<usize>,
    /// Clicks per position.
    #[arg(long)]
    pub n: Option<usize>,
    /// Per-position offsets `re:im,re:im,...` (position 0 first) or `radial:MAG`
    /// for an inward radial offset at every odd position.
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<String>,
    /// Fock-space cutoff (default ceil(4|alpha|^2 + 8|alpha| + 20)).
    #[arg(long)]
    pub cutoff: Option<usize>,
    /// |alpha| grid, `start:stop:step` or a comma list.
    #[arg(long)]
    pub grid_alpha: Option<String>,
    /// N grid, `start:stop` or a comma list.
    #[arg(long)]
    pub grid_n: Option<String>,
    /// k values, comma list.
    #[arg(long)]
    pub grid_k: Option<String>,
    /// Q-function real axis `min:max:count`.
    #[arg(long, allow_hyphen_values = true)]
    pub grid_re: Option<String>,
    /// Q-function imaginary axis `min:max:count`.
    #[arg(long, allow_hyphen_values = true)]
    pub grid_im: Option<String>,
    /// Add one more click to produce the cat state.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub cat: Option<bool>,
    /// Fit the target family and report the fidelity.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub fit: Option<bool>,
    /// Add the entanglement potential to sweep rows.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub ep: Option<bool>,
    /// How the squeezing phase/magnitude is fitted.
    #[arg(long, value_enum)]
    pub phase_mode: Option<PhaseModeArg>,
    /// Cutoff of the beam-splitter embedding used for the entanglement potential
    /// (default: the protocol cutoff).
    #[arg(long)]
    pub embed_cutoff: Option<usize>,
    /// Output path prefix (default: `<command>-<config hash>` in the working directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Repeat the run at twice the cutoff and report the largest relative shift.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub convergence_check: Option<bool>,
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| Error::InvalidArgument(format!("cannot parse {key} = {value:?}")))
}

impl Flags {
    /// Reads a flat `key = value` file; `#` starts a comment.
    pub fn from_file(path: &Path) -> Result<Flags> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidArgument(format!("cannot read config {}: {e}", path.display())))?;
        Flags::from_text(&text)
    }

    pub fn from_text(text: &str) -> Result<Flags> {
        let mut f = Flags::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("config line {}: expected key = value", lineno + 1)))?;
            let key = key.trim().replace('_', "-");
            let value = value.trim();
            match key.as_str() {
                "alpha" => f.alpha = Some(parse_value(&key, value)?),
                "alpha-phase" => f.alpha_phase = Some(parse_value(&key, value)?),
                "k" => f.k = Some(parse_value(&key, value)?),
                "n" => f.n = Some(parse_value(&key, value)?),
                "delta" => f.delta = Some(value.to_string()),
                "cutoff" => f.cutoff = Some(parse_value(&key, value)?),
                "grid-alpha" => f.grid_alpha = Some(value.to_string()),
                "grid-n" => f.grid_n = Some(value.to_string()),
                "grid-k" => f.grid_k = Some(value.to_string()),
                "grid-re" => f.grid_re = Some(value.to_string()),
                "grid-im" => f.grid_im = Some(value.to_string()),
                "cat" => f.cat = Some(parse_value(&key, value)?),
                "fit" => f.fit = Some(parse_value(&key, value)?),
                "ep" => f.ep = Some(parse_value(&key, value)?),
                "phase-mode" => {
                    f.phase_mode = Some(
                        PhaseModeArg::from_str(value, true)
                            .map_err(|_| Error::InvalidArgument(format!("unknown phase-mode {value:?}")))?,
                    )
                }
                "embed-cutoff" => f.embed_cutoff = Some(parse_value(&key, value)?),
                "out" => f.out = Some(PathBuf::from(value)),
                "convergence-check" => f.convergence_check = Some(parse_value(&key, value)?),
                _ => return Err(Error::InvalidArgument(format!("config line {}: unknown key {key:?}", lineno + 1))),
            }
        }
        Ok(f)
    }

    /// Fields set in `self` win over those in `base`.
    pub fn or(self, base: Flags) -> Flags {
        Flags {
            config: self.config.or(base.config),
            alpha: self.alpha.or(base.alpha),
            alpha_phase: self.alpha_phase.or(base.alpha_phase),
            k: self.k.or(base.k),
            n: self.n.or(base.n),
            delta: self.delta.or(base.delta),
            cutoff: self.cutoff.or(base.cutoff),
            grid_alpha: self.grid_alpha.or(base.grid_alpha),
            grid_n: self.grid_n.or(base.grid_n),
            grid_k: self.grid_k.or(base.grid_k),
            grid_re: self.grid_re.or(base.grid_re),
            grid_im: self.grid_im.or(base.grid_im),
            cat: self.cat.or(base.cat),
            fit: self.fit.or(base.fit),
            ep: self.ep.or(base.ep),
            phase_mode: self.phase_mode.or(base.phase_mode),
            embed_cutoff: self.embed_cutoff.or(base.embed_cutoff),
            out: self.out.or(base.out),
            convergence_check: self.convergence_check.or(base.convergence_check),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DeltaSpec {
    Explicit(Vec<C64>),
    Radial(f64),
}

/// Validated configuration of one command.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub alpha_abs: f64,
    pub alpha_phase: f64,
    pub k: usize,
    pub n: usize,
    pub delta: DeltaSpec,
    pub cutoff: Option<usize>,
    pub grid_alpha: Vec<f64>,
    pub grid_n: Vec<usize>,
    pub grid_k: Vec<usize>,
    pub q_grid: Option<GridSpec>,
    pub cat: bool,
    pub fit: bool,
    pub ep: bool,
    pub phase_mode: PhaseMode,
    pub embed_cutoff: Option<usize>,
    pub out: Option<PathBuf>,
    pub convergence_check: bool,
}

fn parse_delta(s: &str) -> Result<DeltaSpec> {
    let s = s.trim();
    if let Some(mag) = s.strip_prefix("radial:") {
        let m: f64 = parse_value("delta", mag)?;
        if !(m.is_finite() && m >= 0.0) {
            return Err(Error::InvalidArgument(format!("radial delta must be finite and >= 0, got {m}")));
        }
        return Ok(DeltaSpec::Radial(m));
    }
    if s.is_empty() {
        return Ok(DeltaSpec::Explicit(Vec::new()));
    }
    s.split(',')
        .map(|item| {
            let (re, im) = item
                .split_once(':')
                .ok_or_else(|| Error::InvalidArgument(format!("delta entry {item:?} must be re:im")))?;
            let c = C64::new(parse_value("delta", re)?, parse_value("delta", im)?);
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(Error::InvalidArgument(format!("delta entry {item:?} is not finite")));
            }
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()
        .map(DeltaSpec::Explicit)
}

/// `start:stop:step` (inclusive) or a comma list.
pub fn parse_f64_grid(key: &str, s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let v = match parts.as_slice() {
        [start, stop, step] => {
            let (a, b, h): (f64, f64, f64) = (parse_value(key, start)?, parse_value(key, stop)?, parse_value(key, step)?);
            if !(h > 0.0) || !(b >= a) || !a.is_finite() || !b.is_finite() {
                return Err(Error::InvalidArgument(format!("{key}: bad range {s:?}")));
            }
            let count = ((b - a) / h + 1e-9).floor() as usize + 1;
            (0..count).map(|i| a + h * i as f64).map(|x| (x * 1e12).round() / 1e12).collect()
        }
        [single] => single.split(',').map(|x| parse_value(key, x)).collect::<Result<Vec<f64>>>()?,
        _ => return Err(Error::InvalidArgument(format!("{key}: expected start:stop:step or a list, got {s:?}"))),
    };
    if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument(format!("{key}: grid must be nonempty and finite")));
    }
    Ok(v)
}

/// `start:stop` (inclusive) or a comma list.
pub fn parse_usize_grid(key: &str, s: &str) -> Result<Vec<usize>> {
    let v: Vec<usize> = match s.split_once(':') {
        Some((a, b)) => {
            let (a, b): (usize, usize) = (parse_value(key, a)?, parse_value(key, b)?);
            (a..=b).collect()
        }
        None => s.split(',').map(|x| parse_value(key, x)).collect::<Result<_>>()?,
    };
    if v.is_empty() {
        return Err(Error::InvalidArgument(format!("{key}: grid must be nonempty")));
    }
    Ok(v)
}

fn parse_axis(key: &str, s: &str) -> Result<Axis> {
    let parts: Vec<&str> = s.split(':').collect();
    let [min, max, count] = parts.as_slice() else {
        return Err(Error::InvalidArgument(format!("{key}: expected min:max:count, got {s:?}")));
    };
    let axis = Axis::new(parse_value(key, min)?, parse_value(key, max)?, parse_value(key, count)?);
    if axis.count == 0 || !(axis.max >= axis.min) || !axis.min.is_finite() || !axis.max.is_finite() {
        return Err(Error::InvalidArgument(format!("{key}: bad axis {s:?}")));
    }
    Ok(axis)
}

impl RunConfig {
    pub fn from_flags(command: Command, flags: Flags) -> Result<RunConfig> {
        let flags = match &flags.config {
            Some(path) => flags.clone().or(Flags::from_file(path)?),
            None => flags,
        };
        let needs_alpha = command != Command::Sweep;
        let alpha_abs = match flags.alpha {
            Some(a) => a,
            None if needs_alpha => return Err(Error::InvalidArgument(format!("{} needs --alpha", command.as_str()))),
            None => 0.0,
        };
        if !(alpha_abs.is_finite() && alpha_abs >= 0.0) {
            return Err(Error::InvalidArgument(format!("--alpha must be finite and >= 0, got {alpha_abs}")));
        }
        let alpha_phase = flags.alpha_phase.unwrap_or(0.0);
        if !alpha_phase.is_finite() {
            return Err(Error::InvalidArgument("--alpha-phase must be finite".into()));
        }
        let k = flags.k.unwrap_or(2);
        if k < 2 {
            return Err(Error::InvalidArgument(format!("--k must be >= 2, got {k}")));
        }
        let n = match flags.n {
            Some(n) => n,
            None if matches!(command, Command::Run | Command::Qfunc | Command::Fit) => {
                return Err(Error::InvalidArgument(format!("{} needs --n", command.as_str())))
            }
            None => 0,
        };
        let delta = parse_delta(flags.delta.as_deref().unwrap_or(""))?;
        if let Some(d) = flags.cutoff {
            if d < 2 {
                return Err(Error::InvalidArgument(format!("--cutoff must be >= 2, got {d}")));
            }
        }
        let (default_n, default_k) = match command {
            Command::EpScan => ("1:20", "2,3,4"),
            _ => ("1:30", "2"),
        };
        let grid_alpha = parse_f64_grid("grid-alpha", flags.grid_alpha.as_deref().unwrap_or("0.2:4:0.2"))?;
        if grid_alpha.iter().any(|&a| a < 0.0) {
            return Err(Error::InvalidArgument("grid-alpha values must be >= 0".into()));
        }
        let grid_n = parse_usize_grid("grid-n", flags.grid_n.as_deref().unwrap_or(default_n))?;
        let grid_k = parse_usize_grid("grid-k", flags.grid_k.as_deref().unwrap_or(default_k))?;
        if grid_k.iter().any(|&k| k < 2) {
            return Err(Error::InvalidArgument("grid-k values must be >= 2".into()));
        }
        let q_grid = match (&flags.grid_re, &flags.grid_im) {
            (None, None) => None,
            (Some(re), Some(im)) => Some(GridSpec { re: parse_axis("grid-re", re)?, im: parse_axis("grid-im", im)? }),
            (Some(re), None) => {
                let a = parse_axis("grid-re", re)?;
                Some(GridSpec { re: a, im: a })
            }
            (None, Some(im)) => {
                let a = parse_axis("grid-im", im)?;
                Some(GridSpec { re: a, im: a })
            }
        };
        let embed_cutoff = flags.embed_cutoff;
        if let Some(e) = embed_cutoff.filter(|&e| e < 2) {
            return Err(Error::InvalidArgument(format!("--embed-cutoff must be >= 2, got {e}")));
        }
        let convergence_check = flags.convergence_check.unwrap_or(false);
        if convergence_check && !matches!(command, Command::Run | Command::Fit) {
            return Err(Error::InvalidArgument("--convergence-check applies to run and fit".into()));
        }
        Ok(RunConfig {
            command,
            alpha_abs,
            alpha_phase,
            k,
            n,
            delta,
            cutoff: flags.cutoff,
            grid_alpha,
            grid_n,
            grid_k,
            q_grid,
            cat: flags.cat.unwrap_or(false),
            fit: flags.fit.unwrap_or(command == Command::Fit),
            ep: flags.ep.unwrap_or(false),
            phase_mode: match flags.phase_mode {
                Some(PhaseModeArg::Full) => PhaseMode::FullSearch,
                _ => PhaseMode::MatchPhotonNumber,
            },
            embed_cutoff,
            out: flags.out,
            convergence_check,
        })
    }

    pub fn alpha(&self) -> C64 {
        C64::from_polar(self.alpha_abs, self.alpha_phase)
    }

    /// Hex SHA-256 of every setting except the output path.
    pub fn hash(&self) -> String {
        let canonical = format!("{:?}", RunConfig { out: None, ..self.clone() });
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    /// Output prefix: `--out`, or `<command>-<hash>` in the working directory.
    pub fn prefix(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(format!("{}-{}", self.command.as_str(), &self.hash()[..12])))
    }
}
