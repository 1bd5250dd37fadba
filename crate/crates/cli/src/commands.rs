//! The subcommands. Each takes merged settings and writes its output files.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use hse_core::channels::{depolarization_residual, fit_power_law};
use hse_core::drives::evolve;
use hse_core::moments::{delta_series, delta_series_from_states};
use hse_core::rng::seeded;
use hse_core::tomo::{recover, simulate_records, RecordFile, TomoCalibration};
use hse_core::{DeltaSeries, DriveKind, Spinor};

use crate::config::{header, parse_angle, parse_f64, parse_u64, RunConfig, Settings, RUN_KEYS};
use crate::error::{CliError, CliResult};
use crate::plot;

pub const SIMULATE: &str = "simulate";
pub const SWEEP: &str = "sweep";
pub const TWIRL_CHECK: &str = "twirl-check";
pub const TOMO_DEMO: &str = "tomo-demo";

/// Settings keys accepted by `command`.
pub fn allowed_keys(command: &str) -> Vec<&'static str> {
    let mut keys = RUN_KEYS.to_vec();
    match command {
        SWEEP => keys.extend(["grid", "trials"]),
        TWIRL_CHECK => {
            keys.retain(|k| !matches!(*k, "init" | "steps" | "kmax" | "samples"));
            keys.extend(["times", "trials"]);
        }
        TOMO_DEMO => keys.extend(["shots", "l0", "l1", "pe", "records"]),
        _ => {}
    }
    keys
}

pub fn run(command: &str, settings: &Settings) -> CliResult<()> {
    match command {
        SIMULATE => simulate(settings),
        SWEEP => sweep(settings),
        TWIRL_CHECK => twirl_check(settings),
        TOMO_DEMO => tomo_demo(settings),
        other => Err(CliError::usage("command", format!("`{other}` cannot be replayed"))),
    }
}

fn out_path(settings: &Settings) -> Option<PathBuf> {
    settings.get("out").map(PathBuf::from)
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Writes to `path`, or to standard output without one.
fn emit(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => write_file(p, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| CliError::io(Path::new("<stdout>"), e))
        }
    }
}

fn push_rows(s: &mut String, series: &DeltaSeries) {
    for r in &series.records {
        let _ = writeln!(s, "{},{},{}", r.t, r.k, r.delta);
    }
}

fn positive(settings: &Settings, key: &str, default: u64) -> CliResult<u64> {
    let v = match settings.get(key) {
        Some(v) => parse_u64(key, v)?,
        None => default,
    };
    if v == 0 {
        return Err(CliError::usage(key, "must be at least 1"));
    }
    Ok(v)
}

fn jobs(settings: &Settings) -> CliResult<usize> {
    let default = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1) as u64;
    Ok(positive(settings, "jobs", default)? as usize)
}

/// `Δ⁽ᵏ⁾(T)` for one configuration.
pub fn simulate(settings: &Settings) -> CliResult<()> {
    let cfg = RunConfig::from_settings(settings)?;
    let protocol = cfg.protocol()?;
    let psi0 = cfg.initial_state(0)?;
    let series = delta_series(&protocol, psi0, cfg.kmax, &cfg.sample_times())?;
    let mut s = header(SIMULATE, &cfg.pairs());
    let _ = writeln!(s, "# initial={psi0}");
    s.push_str("T,k,delta\n");
    push_rows(&mut s, &series);
    emit(out_path(settings).as_deref(), &s)
}

fn parse_grid(text: &str) -> CliResult<Vec<(f64, f64)>> {
    let mut grid = Vec::new();
    for point in text.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let (a, b) = point
            .split_once(':')
            .ok_or_else(|| CliError::usage("grid", format!("expected `angle:angle`, got `{point}`")))?;
        grid.push((parse_angle("grid", a)?, parse_angle("grid", b)?));
    }
    if grid.is_empty() {
        return Err(CliError::usage("grid", "empty parameter grid"));
    }
    Ok(grid)
}

/// One `Δ⁽ᵏ⁾` block per grid point and trial, computed in parallel and written in
/// grid order.
pub fn sweep(settings: &Settings) -> CliResult<()> {
    let base = RunConfig::from_settings(settings)?;
    let grid = parse_grid(settings.get("grid").map(String::as_str).unwrap_or(""))?;
    let trials = positive(settings, "trials", 1)?;
    let (first, second) = match base.drive {
        DriveKind::Floquet => ("theta_x", "theta_y"),
        DriveKind::Fibonacci | DriveKind::CustomPiecewise => ("theta_x", "theta_z"),
        DriveKind::SmoothQp => return Err(CliError::usage("grid", "the smoothqp drive has no adjustable angles")),
    };
    let tasks: Vec<(usize, u64, RunConfig)> = grid
        .iter()
        .enumerate()
        .flat_map(|(i, &(a, b))| {
            let mut cfg = base.clone();
            cfg.theta_x = a;
            if base.drive == DriveKind::Floquet {
                cfg.theta_y = b;
            } else {
                cfg.theta_z = b;
            }
            (0..trials).map(move |trial| (i, trial, cfg.clone()))
        })
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs(settings)?)
        .build()
        .map_err(|e| CliError::usage("jobs", e.to_string()))?;
    let times = base.sample_times();
    let blocks: Vec<CliResult<String>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|(i, trial, cfg)| {
                let psi0 = cfg.initial_state(*trial)?;
                let series = delta_series(&cfg.protocol()?, psi0, cfg.kmax, &times)?;
                let (a, b) = grid[*i];
                let mut s = format!("# block={i}, {first}={a}, {second}={b}, trial={trial}, initial={psi0}\n");
                push_rows(&mut s, &series);
                Ok(s)
            })
            .collect()
    });

    let mut pairs = base.pairs();
    let grid_text: Vec<String> = grid.iter().map(|(a, b)| format!("{a}:{b}")).collect();
    pairs.push(("grid", grid_text.join(";")));
    pairs.push(("trials", trials.to_string()));
    let mut s = header(SWEEP, &pairs);
    s.push_str("T,k,delta\n");
    for block in blocks {
        s.push_str(&block?);
    }
    emit(out_path(settings).as_deref(), &s)
}

fn parse_times(text: &str) -> CliResult<Vec<u64>> {
    let mut times = Vec::new();
    for part in text.split(',') {
        let t = parse_u64("times", part)?;
        if t == 0 {
            return Err(CliError::usage("times", "times start at 1"));
        }
        times.push(t);
    }
    times.sort_unstable();
    times.dedup();
    Ok(times)
}

/// Residual distance of the time-averaged channel from the fully depolarizing one.
pub fn twirl_check(settings: &Settings) -> CliResult<()> {
    let cfg = RunConfig::from_settings(settings)?;
    let protocol = cfg.protocol()?;
    let times = parse_times(settings.get("times").map(String::as_str).unwrap_or("100,1000,10000,100000"))?;
    let trials = positive(settings, "trials", 10)?;
    let reports = depolarization_residual(&protocol, &times, trials as usize, &mut seeded(cfg.seed));

    let mut pairs = cfg.drive_pairs();
    let times_text: Vec<String> = times.iter().map(u64::to_string).collect();
    pairs.push(("times", times_text.join(",")));
    pairs.push(("trials", trials.to_string()));
    pairs.push(("seed", cfg.seed.to_string()));
    let mut s = header(TWIRL_CHECK, &pairs);
    s.push_str("T,trial,residual\n");
    for r in &reports {
        let _ = writeln!(s, "{},{},{}", r.t, r.trial, r.residual);
    }
    match fit_power_law(&reports) {
        Some((a, p)) => {
            let _ = writeln!(s, "# fit: residual = A*T^(-p), A={a}, p={p}");
        }
        None => s.push_str("# fit: unavailable (needs two distinct T with positive mean residual)\n"),
    }
    emit(out_path(settings).as_deref(), &s)
}

fn calibration(settings: &Settings) -> CliResult<TomoCalibration> {
    let default = TomoCalibration::default();
    let get = |key: &str, d: f64| settings.get(key).map_or(Ok(d), |v| parse_f64(key, v));
    let cal = TomoCalibration { l0: get("l0", default.l0)?, l1: get("l1", default.l1)?, p_e: get("pe", default.p_e)? };
    cal.validate().map_err(|e| CliError::usage(if matches!(e, hse_core::Error::InvalidEfficiency(_)) { "pe" } else { "l0" }, e.to_string()))?;
    Ok(cal)
}

fn read_records(path: &Path) -> CliResult<RecordFile> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    RecordFile::parse(&text).map_err(|e| match e {
        hse_core::Error::Parse { line, msg } => CliError::Malformed { path: path.to_path_buf(), line, msg },
        other => CliError::NoData { path: path.to_path_buf(), msg: other.to_string() },
    })
}

/// Forward-simulates tomography records for a trajectory (or re-ingests a record
/// file), reconstructs the states and computes `Δ⁽ᵏ⁾` from them.
pub fn tomo_demo(settings: &Settings) -> CliResult<()> {
    let cfg = RunConfig::from_settings(settings)?;
    let stem = out_path(settings).ok_or_else(|| CliError::usage("out", "tomo-demo needs an output stem"))?;
    let mut pairs = cfg.pairs();

    let file = match settings.get("records") {
        Some(path) => {
            for key in ["shots", "l0", "l1", "pe"] {
                if settings.contains_key(key) {
                    return Err(CliError::usage(key, "taken from the record file when --records is given"));
                }
            }
            pairs.push(("records", path.clone()));
            let mut file = read_records(Path::new(path))?;
            file.records.sort_by_key(|(t, _)| *t);
            file
        }
        None => {
            let cal = calibration(settings)?;
            let shots = match settings.get("shots") {
                Some(v) => parse_u64("shots", v)?,
                None => 0,
            };
            pairs.extend([
                ("shots", shots.to_string()),
                ("l0", cal.l0.to_string()),
                ("l1", cal.l1.to_string()),
                ("pe", cal.p_e.to_string()),
            ]);
            let steps = usize::try_from(cfg.steps).map_err(|_| CliError::usage("steps", "too large"))?;
            let trajectory = evolve(&cfg.protocol()?, cfg.initial_state(0)?, steps);
            let records = simulate_records(&trajectory.states, &cal, shots, cfg.seed);
            RecordFile { calibration: cal, seed: cfg.seed, records: records.into_iter().enumerate().map(|(t, r)| (t as u64, r)).collect() }
        }
    };

    let mut states: Vec<Spinor> = Vec::with_capacity(file.records.len());
    let mut traj = header(TOMO_DEMO, &pairs);
    traj.push_str("t,x,y,z\n");
    for (t, rec) in &file.records {
        let psi = recover(rec, &file.calibration)?.state;
        let b = psi.bloch();
        let _ = writeln!(traj, "{t},{},{},{}", b.x, b.y, b.z);
        states.push(psi);
    }
    let times: Vec<u64> = cfg.sample_times().into_iter().filter(|&t| t as usize <= states.len()).collect();
    if times.is_empty() {
        return Err(CliError::NoData { path: stem, msg: "no records to analyse".into() });
    }
    let series = delta_series_from_states(states, cfg.kmax, &times, cfg.protocol()?.to_string(), "reconstructed".into())?;
    let mut delta = header(TOMO_DEMO, &pairs);
    delta.push_str("T,k,delta\n");
    push_rows(&mut delta, &series);

    let with_suffix = |suffix: &str| {
        let mut p = stem.clone().into_os_string();
        p.push(suffix);
        PathBuf::from(p)
    };
    write_file(&with_suffix(".records"), &file.to_text())?;
    write_file(&with_suffix(".trajectory.csv"), &traj)?;
    write_file(&with_suffix(".delta.csv"), &delta)
}

/// Renders a `T,k,delta` file as an SVG.
pub fn plot(input: &Path, out: &Path) -> CliResult<()> {
    let text = fs::read_to_string(input).map_err(|e| CliError::io(input, e))?;
    let series = plot::read_delta_csv(&text, input)?;
    write_file(out, &plot::render_svg(&series, input)?)
}

/// Re-runs the command recorded in the header of `file`.
pub fn replay(file: &Path, overrides: &Settings) -> CliResult<()> {
    let text = fs::read_to_string(file).map_err(|e| CliError::io(file, e))?;
    let (command, mut settings) = crate::config::parse_header(&text, file)?;
    let allowed = allowed_keys(&command);
    for key in settings.keys() {
        crate::config::check_key(key, &allowed)?;
    }
    settings.extend(overrides.clone());
    run(&command, &settings)
}
