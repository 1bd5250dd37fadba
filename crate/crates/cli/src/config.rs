//! Run configuration: raw `key = value` settings from flags, config files and
//! emitted headers, and their validated, typed form.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;
use std::path::Path;

use hse_core::drives::{floquet_eigenstates, Arc};
use hse_core::moments::{K_MAX_DEFAULT, K_MAX_LIMIT};
use hse_core::rng::substream;
use hse_core::su2::{bloch_to_spinor, haar_random_spinor};
use hse_core::{DriveKind, DriveProtocol, SamplePolicy, Spinor};

use crate::error::{CliError, CliResult};

/// Raw settings keyed by flag name without the leading dashes (`theta-x`, `kmax`, ...).
pub type Settings = BTreeMap<String, String>;

/// Keys understood by every simulation subcommand.
pub const RUN_KEYS: &[&str] = &[
    "drive", "theta-x", "theta-y", "theta-z", "omega2", "init", "steps", "kmax", "samples", "seed", "out", "jobs",
];

/// Header and config-file keys accept `_` in place of `-`.
pub fn normalize_key(key: &str) -> String {
    key.trim().replace('_', "-")
}

/// Parses a `key = value` file. `#` starts a comment; blank lines are ignored.
pub fn parse_config_file(text: &str, path: &Path, allowed: &[&str]) -> CliResult<Settings> {
    let mut out = Settings::new();
    for (i, line) in text.lines().enumerate() {
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(CliError::Malformed {
                path: path.to_path_buf(),
                line: i + 1,
                msg: "expected `key = value`".into(),
            });
        };
        let key = normalize_key(key);
        check_key(&key, allowed)?;
        out.insert(key, value.trim().to_string());
    }
    Ok(out)
}

pub fn check_key(key: &str, allowed: &[&str]) -> CliResult<()> {
    if allowed.contains(&key) {
        Ok(())
    } else {
        Err(CliError::usage(key, "unknown or not applicable to this command"))
    }
}

/// Angle in radians from `1.2`, `0.38pi`, `pi/8`, `-pi`, `3pi/4` or `0.5π`.
pub fn parse_angle(field: &str, text: &str) -> CliResult<f64> {
    let s = text.trim().to_ascii_lowercase().replace('π', "pi");
    let bad = || CliError::usage(field, format!("invalid angle `{text}`"));
    let value = match s.find("pi") {
        None => s.parse::<f64>().map_err(|_| bad())?,
        Some(idx) => {
            let coef = s[..idx].trim().trim_end_matches('*').trim();
            let coef = match coef {
                "" | "+" => 1.0,
                "-" => -1.0,
                c => c.parse::<f64>().map_err(|_| bad())?,
            };
            let rest = s[idx + 2..].trim();
            let div = if rest.is_empty() {
                1.0
            } else {
                rest.strip_prefix('/').ok_or_else(bad)?.trim().parse::<f64>().map_err(|_| bad())?
            };
            coef * PI / div
        }
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(CliError::usage(field, format!("angle `{text}` is not finite")))
    }
}

pub fn parse_u64(field: &str, text: &str) -> CliResult<u64> {
    text.trim().parse().map_err(|_| CliError::usage(field, format!("expected a non-negative integer, got `{text}`")))
}

pub fn parse_f64(field: &str, text: &str) -> CliResult<f64> {
    let v: f64 = text.trim().parse().map_err(|_| CliError::usage(field, format!("expected a number, got `{text}`")))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::usage(field, "must be finite"))
    }
}

/// Initial state of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitSpec {
    /// Bloch angles `(θ, φ)`.
    Angles(f64, f64),
    /// The `U_F` eigenstate along the rotation axis (Floquet drive only).
    FloquetEigenstate,
    /// Haar-random, drawn from substream `trial` of the seed.
    HaarRandom,
}

impl InitSpec {
    fn parse(text: &str) -> CliResult<Self> {
        match text.trim() {
            "floquet-eigenstate" => Ok(InitSpec::FloquetEigenstate),
            "haar-random" => Ok(InitSpec::HaarRandom),
            s => {
                let inner = s.trim_start_matches('(').trim_end_matches(')');
                let (theta, phi) = inner.split_once(',').ok_or_else(|| {
                    CliError::usage("init", format!("expected (theta,phi), floquet-eigenstate or haar-random, got `{text}`"))
                })?;
                Ok(InitSpec::Angles(parse_angle("init", theta)?, parse_angle("init", phi)?))
            }
        }
    }

    fn canonical(&self) -> String {
        match self {
            InitSpec::Angles(theta, phi) => format!("({theta},{phi})"),
            InitSpec::FloquetEigenstate => "floquet-eigenstate".into(),
            InitSpec::HaarRandom => "haar-random".into(),
        }
    }
}

/// A validated simulation configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub drive: DriveKind,
    pub theta_x: f64,
    pub theta_y: f64,
    pub theta_z: f64,
    /// Second frequency, custom drive only.
    pub omega2: Option<f64>,
    pub init: InitSpec,
    pub steps: u64,
    pub kmax: usize,
    pub samples: SamplePolicy,
    pub seed: u64,
}

fn parse_drive(text: &str) -> CliResult<DriveKind> {
    match text.trim() {
        "floquet" => Ok(DriveKind::Floquet),
        "smoothqp" | "smooth-qp" => Ok(DriveKind::SmoothQp),
        "fibonacci" => Ok(DriveKind::Fibonacci),
        "custom" => Ok(DriveKind::CustomPiecewise),
        other => Err(CliError::usage("drive", format!("unknown drive `{other}` (floquet, smoothqp, fibonacci, custom)"))),
    }
}

fn parse_samples(text: &str) -> CliResult<SamplePolicy> {
    let s = text.trim();
    if s == "all" {
        return Ok(SamplePolicy::Every);
    }
    if s == "geom" {
        return Ok(SamplePolicy::default());
    }
    if let Some(n) = s.strip_prefix("geom:") {
        let points = parse_u64("samples", n)? as usize;
        if points < 2 {
            return Err(CliError::usage("samples", "geometric grids need at least 2 points"));
        }
        return Ok(SamplePolicy::Geometric { points });
    }
    let mut times = Vec::new();
    for part in s.split(',') {
        times.push(parse_u64("samples", part)?);
    }
    Ok(SamplePolicy::Explicit(times))
}

impl RunConfig {
    pub fn from_settings(s: &Settings) -> CliResult<Self> {
        let drive = match s.get("drive") {
            Some(d) => parse_drive(d)?,
            None => DriveKind::Fibonacci,
        };
        let angle = |key: &str, default: f64| match s.get(key) {
            Some(v) => parse_angle(key, v),
            None => Ok(default),
        };
        let forbid = |key: &str| {
            if s.contains_key(key) {
                Err(CliError::usage(key, format!("not adjustable for the {} drive", drive.name())))
            } else {
                Ok(())
            }
        };
        let (theta_x, theta_y, theta_z, omega2) = match drive {
            DriveKind::Floquet => {
                forbid("theta-z")?;
                forbid("omega2")?;
                (angle("theta-x", PI / 8.0)?, angle("theta-y", PI / 8.0)?, 0.0, None)
            }
            DriveKind::SmoothQp => {
                for key in ["theta-x", "theta-y", "theta-z", "omega2"] {
                    forbid(key)?;
                }
                (0.0, 0.0, 0.0, None)
            }
            DriveKind::Fibonacci => {
                forbid("theta-y")?;
                forbid("omega2")?;
                (angle("theta-x", 0.38 * PI)?, 0.0, angle("theta-z", 0.22 * PI)?, None)
            }
            DriveKind::CustomPiecewise => {
                forbid("theta-y")?;
                let w = s
                    .get("omega2")
                    .ok_or_else(|| CliError::usage("omega2", "required for the custom drive"))
                    .and_then(|v| parse_angle("omega2", v))?;
                if !(w > 0.0 && w < TAU) {
                    return Err(CliError::usage("omega2", "must lie in (0, 2pi)"));
                }
                (angle("theta-x", 0.38 * PI)?, 0.0, angle("theta-z", 0.22 * PI)?, Some(w))
            }
        };

        let init = match s.get("init") {
            Some(v) => InitSpec::parse(v)?,
            None => InitSpec::Angles(0.0, 0.0),
        };
        if init == InitSpec::FloquetEigenstate && drive != DriveKind::Floquet {
            return Err(CliError::usage("init", "floquet-eigenstate needs --drive floquet"));
        }
        let steps = match s.get("steps") {
            Some(v) => parse_u64("steps", v)?,
            None => 987,
        };
        if steps == 0 {
            return Err(CliError::usage("steps", "must be at least 1"));
        }
        let kmax = match s.get("kmax") {
            Some(v) => parse_u64("kmax", v)? as usize,
            None => K_MAX_DEFAULT,
        };
        if !(1..=K_MAX_LIMIT).contains(&kmax) {
            return Err(CliError::usage("kmax", format!("must be in 1..={K_MAX_LIMIT}")));
        }
        let samples = match s.get("samples") {
            Some(v) => parse_samples(v)?,
            None => SamplePolicy::default(),
        };
        let seed = match s.get("seed") {
            Some(v) => parse_u64("seed", v)?,
            None => 0,
        };
        let cfg = RunConfig { drive, theta_x, theta_y, theta_z, omega2, init, steps, kmax, samples, seed };
        if cfg.sample_times().is_empty() {
            return Err(CliError::usage("samples", "no sample time within [1, steps]"));
        }
        Ok(cfg)
    }

    pub fn protocol(&self) -> CliResult<DriveProtocol> {
        Ok(match self.drive {
            DriveKind::Floquet => DriveProtocol::floquet(self.theta_x, self.theta_y),
            DriveKind::SmoothQp => DriveProtocol::smooth_qp(),
            DriveKind::Fibonacci => DriveProtocol::fibonacci(self.theta_x, self.theta_z),
            DriveKind::CustomPiecewise => {
                let w = self.omega2.expect("validated");
                let boundary = TAU - w;
                DriveProtocol::custom(
                    w,
                    vec![
                        Arc { start: 0.0, end: boundary, kick: [self.theta_x, 0.0, 0.0] },
                        Arc { start: boundary, end: TAU, kick: [0.0, 0.0, self.theta_z] },
                    ],
                )?
            }
        })
    }

    /// Initial state for trial `trial` (only Haar-random inputs depend on it).
    pub fn initial_state(&self, trial: u64) -> CliResult<Spinor> {
        Ok(match self.init {
            InitSpec::Angles(theta, phi) => bloch_to_spinor(theta, phi),
            InitSpec::FloquetEigenstate => floquet_eigenstates(self.theta_x, self.theta_y)?[0],
            InitSpec::HaarRandom => haar_random_spinor(&mut substream(self.seed, trial)),
        })
    }

    pub fn sample_times(&self) -> Vec<u64> {
        self.samples.times(self.drive, self.steps)
    }

    /// Angle fields that apply to the drive, in canonical form.
    pub fn drive_pairs(&self) -> Vec<(&'static str, String)> {
        let mut v = vec![("drive", self.drive.name().to_string())];
        match self.drive {
            DriveKind::Floquet => {
                v.push(("theta_x", self.theta_x.to_string()));
                v.push(("theta_y", self.theta_y.to_string()));
            }
            DriveKind::SmoothQp => {}
            DriveKind::Fibonacci => {
                v.push(("theta_x", self.theta_x.to_string()));
                v.push(("theta_z", self.theta_z.to_string()));
            }
            DriveKind::CustomPiecewise => {
                v.push(("theta_x", self.theta_x.to_string()));
                v.push(("theta_z", self.theta_z.to_string()));
                v.push(("omega2", self.omega2.expect("validated").to_string()));
            }
        }
        v
    }

    /// Every field of the configuration, in canonical form.
    pub fn pairs(&self) -> Vec<(&'static str, String)> {
        let mut v = self.drive_pairs();
        v.push(("init", self.init.canonical()));
        v.push(("steps", self.steps.to_string()));
        v.push(("kmax", self.kmax.to_string()));
        v.push(("samples", self.samples.to_string()));
        v.push(("seed", self.seed.to_string()));
        v
    }
}

/// Two header lines: `# hse <command>` and `# key=value, key=value, ...`.
pub fn header(command: &str, pairs: &[(&str, String)]) -> String {
    let mut s = format!("# hse {command}\n# ");
    for (i, (k, v)) in pairs.iter().enumerate() {
        if i > 0 {
            s.push_str(", ");
        }
        let _ = write!(s, "{k}={v}");
    }
    s.push('\n');
    s
}

/// Recovers the command and its settings from the first two lines of an output file.
pub fn parse_header(text: &str, path: &Path) -> CliResult<(String, Settings)> {
    let malformed = |line: usize, msg: &str| CliError::Malformed { path: path.to_path_buf(), line, msg: msg.into() };
    let mut lines = text.lines();
    let command = lines
        .next()
        .and_then(|l| l.strip_prefix("# hse "))
        .map(|c| c.trim().to_string())
        .ok_or_else(|| malformed(1, "not an hse output file (missing `# hse <command>`)"))?;
    let body = lines.next().and_then(|l| l.strip_prefix("# ")).ok_or_else(|| malformed(2, "missing configuration line"))?;
    let mut settings = Settings::new();
    for pair in body.split(", ") {
        let (k, v) = pair.split_once('=').ok_or_else(|| malformed(2, "expected key=value pairs"))?;
        settings.insert(normalize_key(k), v.trim().to_string());
    }
    Ok((command, settings))
}
