//! Six-sequence photoluminescence tomography: forward model, shot noise, linear
//! inversion, polarization correction and purification.
//!
//! Coherences follow the forward relations: sequences 3/4 measure `β` (the imaginary
//! part of `⟨0|ρ|1⟩`) and sequences 5/6 measure `α` (its real part).

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::rng::substream;
use crate::su2::{bloch_to_spinor, BlochVector, DensityMatrix2, Spinor};

/// Readout calibration: PL rates of `|0⟩`, `|1⟩` (counts per shot) and the
/// polarization efficiency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TomoCalibration {
    pub l0: f64,
    pub l1: f64,
    pub p_e: f64,
}

impl TomoCalibration {
    pub fn new(l0: f64, l1: f64, p_e: f64) -> Result<Self> {
        let cal = Self { l0, l1, p_e };
        cal.validate()?;
        Ok(cal)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.l1 > 0.0 && self.l0 > self.l1 && self.l0.is_finite()) {
            return Err(Error::Calibration(format!("need l0 > l1 > 0 (l0 = {}, l1 = {})", self.l0, self.l1)));
        }
        if !(self.p_e > 0.0 && self.p_e <= 1.0) {
            return Err(Error::InvalidEfficiency(self.p_e));
        }
        Ok(())
    }

    /// Contrast `L01 = l0 − l1`.
    pub fn contrast(&self) -> f64 {
        self.l0 - self.l1
    }
}

impl Default for TomoCalibration {
    fn default() -> Self {
        Self { l0: 1.0, l1: 0.7, p_e: 0.92 }
    }
}

/// Expected PL counts per shot of the six tomography sequences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TomoRecord {
    pub e: [f64; 6],
    /// Shots per sequence; 0 marks noiseless expectations.
    pub shots: u64,
}

/// Linear-inversion estimate `ρ = [[p0, α+iβ], [α−iβ, p1]]`. May be unphysical.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructedState {
    pub p0: f64,
    pub p1: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl ReconstructedState {
    pub fn from_bloch(r: &BlochVector) -> Self {
        let p0 = (1.0 + r.z) / 2.0;
        Self { p0, p1: 1.0 - p0, alpha: r.x / 2.0, beta: -r.y / 2.0 }
    }

    pub fn from_density(rho: &DensityMatrix2) -> Self {
        Self::from_bloch(&rho.bloch())
    }

    /// `(2α, −2β, p0 − p1)`.
    pub fn bloch(&self) -> BlochVector {
        BlochVector::new(2.0 * self.alpha, -2.0 * self.beta, self.p0 - self.p1)
    }

    /// `α² + β² ≤ p0·p1`
    pub fn is_physical(&self) -> bool {
        self.alpha * self.alpha + self.beta * self.beta <= self.p0 * self.p1 + 1e-15
    }
}

/// Noiseless expectations `E1..E6` for `rho`.
pub fn pl_expectations(rho: &DensityMatrix2, cal: &TomoCalibration) -> TomoRecord {
    let s = ReconstructedState::from_density(rho);
    let (l0, l1) = (cal.l0, cal.l1);
    let pair = |x: f64| (l0 * (1.0 - 2.0 * x) / 2.0 + l1 * (1.0 + 2.0 * x) / 2.0, l0 * (1.0 + 2.0 * x) / 2.0 + l1 * (1.0 - 2.0 * x) / 2.0);
    let (e3, e4) = pair(s.beta);
    let (e5, e6) = pair(s.alpha);
    TomoRecord {
        e: [l0 * s.p0 + l1 * s.p1, l0 * s.p1 + l1 * s.p0, e3, e4, e5, e6],
        shots: 0,
    }
}

/// Replaces every `E_i` by `Poisson(N·E_i)/N`.
pub fn add_shot_noise<R: Rng + ?Sized>(record: &TomoRecord, shots: u64, rng: &mut R) -> TomoRecord {
    let n = shots.max(1) as f64;
    let mut e = record.e;
    for v in e.iter_mut() {
        let lambda = *v * n;
        *v = if lambda > 0.0 {
            Poisson::new(lambda).map(|p| p.sample(rng)).unwrap_or(lambda) / n
        } else {
            0.0
        };
    }
    TomoRecord { e, shots: shots.max(1) }
}

/// Linear inversion of the six relations.
pub fn reconstruct(record: &TomoRecord, cal: &TomoCalibration) -> Result<ReconstructedState> {
    let l01 = cal.contrast();
    if !(l01 > 0.0) {
        return Err(Error::Calibration(format!("L01 = {l01} must be positive")));
    }
    let e = &record.e;
    let p0 = 0.5 + (e[0] - e[1]) / (2.0 * l01);
    Ok(ReconstructedState {
        p0,
        p1: 1.0 - p0,
        alpha: (e[5] - e[4]) / (2.0 * l01),
        beta: (e[3] - e[2]) / (2.0 * l01),
    })
}

/// Undoes incomplete polarization `ρ_mixed = p_e ρ + (1−p_e) I/2` by scaling the
/// Bloch vector by `1/p_e`.
pub fn polarization_correct(state: &ReconstructedState, p_e: f64) -> Result<ReconstructedState> {
    if !(p_e > 0.0 && p_e <= 1.0) {
        return Err(Error::InvalidEfficiency(p_e));
    }
    Ok(ReconstructedState::from_bloch(&state.bloch().scaled(1.0 / p_e)))
}

/// Forward model of incomplete polarization, the inverse of [`polarization_correct`].
pub fn depolarize(rho: &DensityMatrix2, p_e: f64) -> DensityMatrix2 {
    DensityMatrix2::from_bloch(&rho.bloch().scaled(p_e))
}

/// Pure state along the reconstructed Bloch direction.
pub fn purify(state: &ReconstructedState) -> Result<Spinor> {
    let r = state.bloch();
    let norm = r.norm();
    if !(norm > 1e-9) {
        return Err(Error::UndefinedDirection { norm });
    }
    let u = r.scaled(1.0 / norm);
    Ok(bloch_to_spinor(u.z.clamp(-1.0, 1.0).acos(), u.y.atan2(u.x)))
}

/// Outcome of reconstructing one state: purified spinor plus the raw Bloch norm
/// before it was clipped to the sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Recovered {
    pub state: Spinor,
    pub raw: ReconstructedState,
    pub corrected_norm: f64,
}

/// Reconstruct → correct → purify.
pub fn recover(record: &TomoRecord, cal: &TomoCalibration) -> Result<Recovered> {
    let raw = reconstruct(record, cal)?;
    let corrected = polarization_correct(&raw, cal.p_e)?;
    Ok(Recovered { state: purify(&corrected)?, raw, corrected_norm: corrected.bloch().norm() })
}

/// Forward-simulated records for a trajectory: depolarize by `p_e`, compute the
/// expectations, then add Poisson noise (stream `t` of `seed`) unless `shots == 0`.
pub fn simulate_records(states: &[Spinor], cal: &TomoCalibration, shots: u64, seed: u64) -> Vec<TomoRecord> {
    states
        .iter()
        .enumerate()
        .map(|(t, psi)| {
            let rec = pl_expectations(&depolarize(&psi.density(), cal.p_e), cal);
            if shots == 0 {
                rec
            } else {
                add_shot_noise(&rec, shots, &mut substream(seed, t as u64))
            }
        })
        .collect()
}

/// Contents of a record file: calibration, seed and one record per time step.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordFile {
    pub calibration: TomoCalibration,
    pub seed: u64,
    pub records: Vec<(u64, TomoRecord)>,
}

impl RecordFile {
    /// Line-oriented text: `#` header lines with `l0`, `l1`, `p_e`, `seed`, then
    /// `t E1 E2 E3 E4 E5 E6 shots` with 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let c = &self.calibration;
        let _ = writeln!(s, "# l0 = {}", sci(c.l0));
        let _ = writeln!(s, "# l1 = {}", sci(c.l1));
        let _ = writeln!(s, "# p_e = {}", sci(c.p_e));
        let _ = writeln!(s, "# seed = {}", self.seed);
        let _ = writeln!(s, "# t E1 E2 E3 E4 E5 E6 shots");
        for (t, r) in &self.records {
            let _ = write!(s, "{t}");
            for v in r.e {
                let _ = write!(s, " {}", sci(v));
            }
            let _ = writeln!(s, " {}", r.shots);
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut l0 = None;
        let mut l1 = None;
        let mut p_e = None;
        let mut seed = None;
        let mut records = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            let err = |msg: String| Error::Parse { line: lineno, msg };
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(rest) = trimmed.strip_prefix('#') {
                if let Some((key, value)) = rest.split_once('=') {
                    let value = value.trim();
                    let num = || value.parse::<f64>().map_err(|e| err(format!("bad value for {}: {e}", key.trim())));
                    match key.trim() {
                        "l0" => l0 = Some(num()?),
                        "l1" => l1 = Some(num()?),
                        "p_e" => p_e = Some(num()?),
                        "seed" => seed = Some(value.parse::<u64>().map_err(|e| err(format!("bad seed: {e}")))?),
                        _ => {}
                    }
                }
                continue;
            }
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            if fields.len() != 8 {
                return Err(err(format!("expected 8 fields (t E1..E6 shots), found {}", fields.len())));
            }
            let t = fields[0].parse::<u64>().map_err(|e| err(format!("bad t: {e}")))?;
            let mut e = [0.0; 6];
            for (j, v) in e.iter_mut().enumerate() {
                *v = fields[j + 1].parse::<f64>().map_err(|x| err(format!("bad E{}: {x}", j + 1)))?;
            }
            let shots = fields[7].parse::<u64>().map_err(|x| err(format!("bad shots: {x}")))?;
            records.push((t, TomoRecord { e, shots }));
        }
        let missing = |name: &str| Error::Parse { line: 0, msg: format!("missing header `{name}`") };
        let calibration = TomoCalibration {
            l0: l0.ok_or_else(|| missing("l0"))?,
            l1: l1.ok_or_else(|| missing("l1"))?,
            p_e: p_e.ok_or_else(|| missing("p_e"))?,
        };
        Ok(Self { calibration, seed: seed.ok_or_else(|| missing("seed"))?, records })
    }
}

fn sci(v: f64) -> String {
    format!("{v:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drives::{evolve, DriveProtocol};
    use crate::su2::haar_random_spinor;
    use proptest::prelude::{any, proptest};
    use proptest::prop_assert_eq;

    fn cal() -> TomoCalibration {
        TomoCalibration::new(1.0, 0.7, 0.92).unwrap()
    }

    #[test]
    fn expectations_examples() {
        let c = TomoCalibration::new(1.0, 0.7, 1.0).unwrap();
        let r = pl_expectations(&Spinor::zero().density(), &c);
        let want = [1.0, 0.7, 0.85, 0.85, 0.85, 0.85];
        for (x, w) in r.e.iter().zip(want) {
            assert!((x - w).abs() < 1e-15);
        }
        let r = pl_expectations(&DensityMatrix2::maximally_mixed(), &c);
        assert!(r.e.iter().all(|x| (x - 0.85).abs() < 1e-15));
        let r = pl_expectations(&Spinor::plus().density(), &c);
        let want = [0.85, 0.85, 0.85, 0.85, 0.7, 1.0];
        for (x, w) in r.e.iter().zip(want) {
            assert!((x - w).abs() < 1e-15);
        }
        assert_eq!(r.shots, 0);
    }

    #[test]
    fn noiseless_records_have_equal_pair_sums() {
        let mut rng = crate::rng::seeded(1);
        for _ in 0..50 {
            let rho = depolarize(&haar_random_spinor(&mut rng).density(), 0.8);
            let e = pl_expectations(&rho, &cal()).e;
            assert!((e[0] + e[1] - e[2] - e[3]).abs() < 1e-10);
            assert!((e[2] + e[3] - e[4] - e[5]).abs() < 1e-10);
        }
    }

    #[test]
    fn reconstruction_round_trip_and_flat_record() {
        let mut rng = crate::rng::seeded(2);
        for _ in 0..100 {
            let r = haar_random_spinor(&mut rng).bloch().scaled(rng.random_range(0.0..1.0));
            let rho = DensityMatrix2::from_bloch(&r);
            let got = reconstruct(&pl_expectations(&rho, &cal()), &cal()).unwrap();
            let want = ReconstructedState::from_density(&rho);
            assert!((got.p0 - want.p0).abs() < 1e-12);
            assert!((got.alpha - want.alpha).abs() < 1e-12);
            assert!((got.beta - want.beta).abs() < 1e-12);
            assert_eq!(got.p0 + got.p1, 1.0);
        }
        let flat = TomoRecord { e: [0.9; 6], shots: 0 };
        let s = reconstruct(&flat, &cal()).unwrap();
        assert_eq!((s.p0, s.alpha, s.beta), (0.5, 0.0, 0.0));
        let bad = TomoCalibration { l0: 0.5, l1: 0.5, p_e: 1.0 };
        assert!(matches!(reconstruct(&flat, &bad), Err(Error::Calibration(_))));
        assert!(TomoCalibration::new(0.6, 0.7, 0.9).is_err());
        assert!(TomoCalibration::new(1.0, 0.7, 0.0).is_err());
    }

    #[test]
    fn reconstruction_is_linear() {
        let a = TomoRecord { e: [1.0, 0.7, 0.8, 0.9, 0.75, 0.95], shots: 0 };
        let b = TomoRecord { e: [0.72, 0.98, 0.91, 0.79, 0.88, 0.82], shots: 0 };
        let w = 0.3;
        let mut mix = [0.0; 6];
        for i in 0..6 {
            mix[i] = w * a.e[i] + (1.0 - w) * b.e[i];
        }
        let ra = reconstruct(&a, &cal()).unwrap();
        let rb = reconstruct(&b, &cal()).unwrap();
        let rm = reconstruct(&TomoRecord { e: mix, shots: 0 }, &cal()).unwrap();
        assert!((rm.p0 - (w * ra.p0 + (1.0 - w) * rb.p0)).abs() < 1e-12);
        assert!((rm.alpha - (w * ra.alpha + (1.0 - w) * rb.alpha)).abs() < 1e-12);
        assert!((rm.beta - (w * ra.beta + (1.0 - w) * rb.beta)).abs() < 1e-12);
    }

    #[test]
    fn shot_noise_statistics() {
        let rec = pl_expectations(&Spinor::plus().density(), &cal());
        let n = 400u64;
        let draws = 10_000;
        let mut rng = crate::rng::seeded(5);
        let mut mean = [0.0; 6];
        let mut sq = [0.0; 6];
        for _ in 0..draws {
            let noisy = add_shot_noise(&rec, n, &mut rng);
            assert_eq!(noisy.shots, n);
            for i in 0..6 {
                mean[i] += noisy.e[i] / draws as f64;
                sq[i] += noisy.e[i] * noisy.e[i] / draws as f64;
            }
        }
        for i in 0..6 {
            let var = sq[i] - mean[i] * mean[i];
            let want = rec.e[i] / n as f64;
            assert!((mean[i] - rec.e[i]).abs() < 5.0 * (want / draws as f64).sqrt());
            assert!((var / want - 1.0).abs() < 0.1, "variance ratio {}", var / want);
        }
        let a = add_shot_noise(&rec, 1000, &mut crate::rng::seeded(9));
        let b = add_shot_noise(&rec, 1000, &mut crate::rng::seeded(9));
        assert_eq!(a, b);
    }

    #[test]
    fn reconstruction_error_scales_as_inverse_sqrt_shots() {
        let rho = depolarize(&crate::su2::bloch_to_spinor(1.1, 0.5).density(), 0.92);
        let clean = pl_expectations(&rho, &cal());
        let truth = rho.bloch();
        let rms = |shots: u64| {
            let mut rng = crate::rng::seeded(shots);
            let trials = 400;
            let s: f64 = (0..trials)
                .map(|_| reconstruct(&add_shot_noise(&clean, shots, &mut rng), &cal()).unwrap().bloch().sub(&truth).norm().powi(2))
                .sum();
            (s / trials as f64).sqrt()
        };
        let ratio = rms(100) / rms(10_000);
        assert!((ratio - 10.0).abs() < 2.0, "ratio {ratio}");
    }

    #[test]
    fn polarization_examples() {
        let s = ReconstructedState::from_bloch(&BlochVector::new(0.2, -0.3, 0.4));
        assert_eq!(polarization_correct(&s, 1.0).unwrap(), s);
        let mixed = ReconstructedState::from_bloch(&BlochVector::new(0.0, 0.0, 0.92));
        let fixed = polarization_correct(&mixed, 0.92).unwrap();
        assert!((fixed.p0 - 1.0).abs() < 1e-15 && fixed.p1.abs() < 1e-15);
        assert!(matches!(polarization_correct(&s, 0.0), Err(Error::InvalidEfficiency(_))));
        assert!(polarization_correct(&s, 1.5).is_err());

        let mut rng = crate::rng::seeded(3);
        for _ in 0..50 {
            let psi = haar_random_spinor(&mut rng);
            let mixed = ReconstructedState::from_density(&depolarize(&psi.density(), 0.92));
            let back = purify(&polarization_correct(&mixed, 0.92).unwrap()).unwrap();
            assert!((back.overlap(&psi) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn purify_examples() {
        let half = ReconstructedState::from_bloch(&BlochVector::new(0.0, 0.0, 0.5));
        assert!((purify(&half).unwrap().overlap(&Spinor::zero()) - 1.0).abs() < 1e-15);
        let psi = crate::su2::bloch_to_spinor(2.2, 4.0);
        let pure = ReconstructedState::from_density(&psi.density());
        assert!((purify(&pure).unwrap().overlap(&psi) - 1.0).abs() < 1e-12);
        let zero = ReconstructedState::from_bloch(&BlochVector::default());
        assert!(matches!(purify(&zero), Err(Error::UndefinedDirection { .. })));
    }

    #[test]
    fn noiseless_pipeline_recovers_trajectory() {
        let d = DriveProtocol::fibonacci(0.38 * std::f64::consts::PI, 0.22 * std::f64::consts::PI);
        let tr = evolve(&d, Spinor::plus(), 100);
        let c = cal();
        let records = simulate_records(&tr.states, &c, 0, 0);
        for (psi, rec) in tr.states.iter().zip(&records) {
            let got = recover(rec, &c).unwrap();
            assert!((got.state.overlap(psi) - 1.0).abs() < 1e-10);
            assert!((got.corrected_norm - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn record_file_parse_errors_name_the_line() {
        let text = "# l0 = 1\n# l1 = 0.7\n# p_e = 0.9\n# seed = 1\n0 1 2 3 4 5 6 0\n1 1 2 3 x 5 6 0\n";
        match RecordFile::parse(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 6),
            other => panic!("unexpected {other:?}"),
        }
        let short = "# l0 = 1\n# l1 = 0.7\n# p_e = 0.9\n# seed = 1\n0 1 2 3\n";
        assert!(matches!(RecordFile::parse(short), Err(Error::Parse { line: 5, .. })));
        assert!(RecordFile::parse("0 1 2 3 4 5 6 0\n").is_err());
    }

    proptest! {
        #[test]
        fn record_file_round_trip_is_bit_exact(
            es in proptest::collection::vec(proptest::array::uniform6(0.0..3.0f64), 1..20),
            seed in any::<u64>(),
            shots in 0..1_000_000u64,
            l0 in 0.5..2.0f64,
        ) {
            let file = RecordFile {
                calibration: TomoCalibration { l0, l1: l0 * 0.7, p_e: 0.92 },
                seed,
                records: es.iter().enumerate().map(|(t, e)| (t as u64, TomoRecord { e: *e, shots })).collect(),
            };
            let parsed = RecordFile::parse(&file.to_text()).unwrap();
            prop_assert_eq!(&parsed, &file);
            prop_assert_eq!(parsed.to_text(), file.to_text());
        }
    }
}
