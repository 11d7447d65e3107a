//! Run configuration: command-line flags layered over an optional
//! `key=value` file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;

use crate::Failure;

/// Keys accepted in a config file, with their canonical names.
const KEYS: &[(&str, &str)] = &[
    ("w", "w"),
    ("dx", "dx"),
    ("delta_x", "dx"),
    ("dy", "dy"),
    ("delta_y", "dy"),
    ("chi_steps", "chi_steps"),
    ("chi-steps", "chi_steps"),
    ("t", "t"),
    ("alpha", "alpha"),
    ("grid_n", "grid_n"),
    ("grid-n", "grid_n"),
    ("grid_span", "grid_span"),
    ("grid-span", "grid_span"),
    ("seed", "seed"),
    ("samples", "samples"),
    ("out", "out"),
    ("format", "format"),
];

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Plain-text key=value file; flags given on the command line win.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Pointer width W.
    #[arg(long, allow_negative_numbers = true)]
    pub w: Option<f64>,
    /// Horizontal displacement in arm I (default 0.1 W).
    #[arg(long, allow_negative_numbers = true)]
    pub dx: Option<f64>,
    /// Vertical displacement in arm II (default 0.1 W).
    #[arg(long, allow_negative_numbers = true)]
    pub dy: Option<f64>,
    /// Number of phases in [0, 2π) for neutron sweeps.
    #[arg(long = "chi-steps")]
    pub chi_steps: Option<usize>,
    /// Absorber transmissivity.
    #[arg(long, allow_negative_numbers = true)]
    pub t: Option<f64>,
    /// Spin rotation angle of the weak magnetic field.
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    /// Grid points per axis.
    #[arg(long = "grid-n")]
    pub grid_n: Option<usize>,
    /// Grid half-span in units of W.
    #[arg(long = "grid-span", allow_negative_numbers = true)]
    pub grid_span: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Monte Carlo samples (photon ensembles) or neutrons per phase (counts).
    #[arg(long)]
    pub samples: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated subset of {csv, pgm}.
    #[arg(long)]
    pub format: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Formats {
    pub csv: bool,
    pub pgm: bool,
}

/// Fully resolved and validated parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub width: f64,
    pub dx: f64,
    pub dy: f64,
    pub chi_steps: usize,
    pub transmissivity: f64,
    pub alpha: f64,
    pub grid_n: usize,
    pub grid_span: f64,
    pub seed: u64,
    pub samples: Option<u64>,
    pub out: PathBuf,
    pub formats: Formats,
}

pub fn parse_file(text: &str) -> Result<BTreeMap<String, String>, Failure> {
    let mut map = BTreeMap::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("config line {}: expected key=value", no + 1)))?;
        let key = k.trim().to_ascii_lowercase();
        let canonical = KEYS
            .iter()
            .find(|(alias, _)| *alias == key)
            .map(|(_, c)| *c)
            .ok_or_else(|| {
                Failure::Usage(format!(
                    "config line {}: unknown key `{}`",
                    no + 1,
                    k.trim()
                ))
            })?;
        map.insert(canonical.to_string(), v.trim().to_string());
    }
    Ok(map)
}

fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, Failure> {
    v.parse()
        .map_err(|_| Failure::Usage(format!("invalid value `{v}` for `{key}`")))
}

fn parse_formats(s: &str) -> Result<Formats, Failure> {
    let mut f = Formats {
        csv: false,
        pgm: false,
    };
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.to_ascii_lowercase().as_str() {
            "csv" => f.csv = true,
            "pgm" => f.pgm = true,
            other => return Err(Failure::Usage(format!("unknown format `{other}`"))),
        }
    }
    if !(f.csv || f.pgm) {
        return Err(Failure::Usage("no output format selected".into()));
    }
    Ok(f)
}

impl RunConfig {
    pub fn resolve(flags: &Flags) -> Result<Self, Failure> {
        let file = match &flags.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
                parse_file(&text)?
            }
            None => BTreeMap::new(),
        };
        let get = |key: &str| file.get(key).map(String::as_str);
        macro_rules! pick {
            ($flag:expr, $key:literal, $default:expr) => {
                match ($flag, get($key)) {
                    (Some(v), _) => v,
                    (None, Some(s)) => parse($key, s)?,
                    (None, None) => $default,
                }
            };
        }
        let width: f64 = pick!(flags.w, "w", 1.0);
        let cfg = RunConfig {
            width,
            dx: pick!(flags.dx, "dx", 0.1 * width),
            dy: pick!(flags.dy, "dy", 0.1 * width),
            chi_steps: pick!(flags.chi_steps, "chi_steps", 100),
            transmissivity: pick!(flags.t, "t", 0.5),
            alpha: pick!(flags.alpha, "alpha", 0.2),
            grid_n: pick!(
                flags.grid_n,
                "grid_n",
                cheshire_core::pointer::DEFAULT_POINTS
            ),
            grid_span: pick!(
                flags.grid_span,
                "grid_span",
                cheshire_core::pointer::DEFAULT_HALF_SPAN
            ),
            seed: pick!(flags.seed, "seed", cheshire_core::verify::DEFAULT_SEED),
            samples: match (flags.samples, get("samples")) {
                (Some(v), _) => Some(v),
                (None, Some(s)) => Some(parse("samples", s)?),
                (None, None) => None,
            },
            out: pick!(flags.out.clone(), "out", PathBuf::from("out")),
            formats: match (&flags.format, get("format")) {
                (Some(s), _) => parse_formats(s)?,
                (None, Some(s)) => parse_formats(s)?,
                (None, None) => Formats {
                    csv: true,
                    pgm: true,
                },
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), Failure> {
        let bad = |m: String| Err(Failure::Usage(m));
        if !(self.width > 0.0 && self.width.is_finite()) {
            return bad(format!("w must be positive, got {}", self.width));
        }
        if !(self.dx >= 0.0 && self.dy >= 0.0 && self.dx.is_finite() && self.dy.is_finite()) {
            return bad(format!(
                "displacements must be non-negative, got dx={} dy={}",
                self.dx, self.dy
            ));
        }
        if !(self.grid_span > 0.0 && self.grid_span.is_finite()) {
            return bad(format!(
                "grid-span must be positive, got {}",
                self.grid_span
            ));
        }
        if self.grid_n < 16 {
            return bad(format!("grid-n must be at least 16, got {}", self.grid_n));
        }
        if !(0.0..=1.0).contains(&self.transmissivity) {
            return bad(format!("t must lie in [0, 1], got {}", self.transmissivity));
        }
        if !self.alpha.is_finite() {
            return bad(format!("alpha must be finite, got {}", self.alpha));
        }
        if self.chi_steps == 0 {
            return bad("chi-steps must be at least 1".into());
        }
        if self.samples == Some(0) {
            return bad("samples must be positive".into());
        }
        Ok(())
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    pub fn ensure_out_dir(&self) -> Result<(), Failure> {
        fs::create_dir_all(&self.out)
            .map_err(|e| Failure::Usage(format!("cannot create {}: {e}", self.out.display())))?;
        writable(&self.out)
    }
}

fn writable(dir: &Path) -> Result<(), Failure> {
    let md = fs::metadata(dir).map_err(|e| Failure::Usage(format!("{}: {e}", dir.display())))?;
    if md.permissions().readonly() {
        return Err(Failure::Usage(format!("{} is not writable", dir.display())));
    }
    Ok(())
}
