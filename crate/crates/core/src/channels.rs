//! Time-averaging (1-twirl) channel of a drive and the dephasing channels that
//! describe its infinite-time limit for the smooth quasiperiodic drive.

use rand::Rng;

use crate::drives::DriveProtocol;
use crate::moments::{delta_series, DeltaSeries};
use crate::su2::{
    bloch_to_spinor, conjugate_channel, haar_random_spinor, BlochVector, DensityMatrix2, Spinor,
    UnitaryProduct,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Outcome of averaging one input state for `t` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelReport {
    pub protocol: String,
    pub t: u64,
    pub trial: usize,
    /// Trace distance of the channel output from `I/2`.
    pub residual: f64,
    pub input: String,
}

/// `(1/T) Σ_{t=0}^{T−1} U(t) ρ U(t)†` with `U(0) = I`.
pub fn time_avg_channel(protocol: &DriveProtocol, rho: &DensityMatrix2, steps: u64) -> DensityMatrix2 {
    let mut out = None;
    time_avg_checkpoints(protocol, rho, &[steps.max(1)], |_, avg| out = Some(avg));
    out.unwrap_or(*rho)
}

/// Runs the time average once up to the largest checkpoint, reporting the average at
/// every checkpoint in `checkpoints` (ascending, ≥ 1).
fn time_avg_checkpoints<F>(protocol: &DriveProtocol, rho: &DensityMatrix2, checkpoints: &[u64], mut emit: F)
where
    F: FnMut(u64, DensityMatrix2),
{
    let t_max = checkpoints.last().copied().unwrap_or(0);
    let mut u = UnitaryProduct::new();
    let mut sum = [crate::moments::ComplexSum::default(); 4];
    let mut next = 0;
    for t in 0..t_max {
        if t > 0 {
            u.push(&protocol.kick(t).expect("t ≥ 1"));
        }
        let c = conjugate_channel(u.value(), rho);
        for (s, v) in sum.iter_mut().zip(c.m.iter().flatten()) {
            *s += *v;
        }
        let done = t + 1;
        while next < checkpoints.len() && checkpoints[next] == done {
            let w = done as f64;
            let m = [
                [sum[0].sum() / w, sum[1].sum() / w],
                [sum[2].sum() / w, sum[3].sum() / w],
            ];
            emit(done, DensityMatrix2 { m });
            next += 1;
        }
    }
}

/// Projects the Bloch vector onto `axis` (a fully dephasing Pauli channel).
pub fn dephasing_channel(axis: Axis, rho: &DensityMatrix2) -> DensityMatrix2 {
    let r = rho.bloch();
    let kept = match axis {
        Axis::X => BlochVector::new(r.x, 0.0, 0.0),
        Axis::Y => BlochVector::new(0.0, r.y, 0.0),
        Axis::Z => BlochVector::new(0.0, 0.0, r.z),
    };
    let mut out = DensityMatrix2::from_bloch(&kept);
    // keep the input trace
    let tr = rho.trace().re;
    if tr != 1.0 {
        out = out.scale(tr);
    }
    out
}

/// `𝒩_z ∘ 𝒩_x`, the infinite-time average of the smooth quasiperiodic drive.
pub fn twirl_limit(rho: &DensityMatrix2) -> DensityMatrix2 {
    dephasing_channel(Axis::Z, &dephasing_channel(Axis::X, rho))
}

/// Residual `½‖𝒯_T[ρ] − I/2‖₁` for `trials` Haar-random pure inputs at every `T`.
///
/// Reports are sorted by `T`, then by trial.
pub fn depolarization_residual<R: Rng + ?Sized>(
    protocol: &DriveProtocol,
    t_list: &[u64],
    trials: usize,
    rng: &mut R,
) -> Vec<ChannelReport> {
    let inputs: Vec<Spinor> = (0..trials).map(|_| haar_random_spinor(rng)).collect();
    let mut reports = Vec::new();
    for (trial, psi) in inputs.iter().enumerate() {
        reports.extend(residuals_for_input(protocol, &psi.density(), t_list, trial, psi.to_string()));
    }
    reports.sort_by_key(|r| (r.t, r.trial));
    reports
}

/// Residuals of a single input at each `T` in `t_list` (computed in one pass).
pub fn residuals_for_input(
    protocol: &DriveProtocol,
    rho: &DensityMatrix2,
    t_list: &[u64],
    trial: usize,
    input: String,
) -> Vec<ChannelReport> {
    let mut times: Vec<u64> = t_list.iter().copied().filter(|&t| t >= 1).collect();
    times.sort_unstable();
    times.dedup();
    let mixed = DensityMatrix2::maximally_mixed();
    let name = protocol.to_string();
    let mut out = Vec::with_capacity(times.len());
    time_avg_checkpoints(protocol, rho, &times, |t, avg| {
        out.push(ChannelReport {
            protocol: name.clone(),
            t,
            trial,
            residual: avg.trace_distance(&mixed).clamp(0.0, 1.0),
            input: input.clone(),
        });
    });
    out
}

/// Least-squares fit of `residual ≈ A · T^(−p)` to the per-`T` mean residuals.
///
/// Returns `(A, p)`, or `None` with fewer than two distinct positive points.
pub fn fit_power_law(reports: &[ChannelReport]) -> Option<(f64, f64)> {
    let mut by_t: Vec<(u64, f64, usize)> = Vec::new();
    for r in reports {
        match by_t.iter_mut().find(|e| e.0 == r.t) {
            Some(e) => {
                e.1 += r.residual;
                e.2 += 1;
            }
            None => by_t.push((r.t, r.residual, 1)),
        }
    }
    let pts: Vec<(f64, f64)> = by_t
        .iter()
        .map(|&(t, s, n)| (t as f64, s / n as f64))
        .filter(|&(_, y)| y > 0.0)
        .map(|(t, y)| (t.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some(((my - slope * mx).exp(), -slope))
}

/// Initial state found by a grid search whose `Δ⁽²⁾(T)` stays largest, i.e. a
/// witness that the drive is not a 2-design over time.
#[derive(Debug, Clone)]
pub struct PlateauWitness {
    pub theta: f64,
    pub phi: f64,
    pub series: DeltaSeries,
    pub delta2: f64,
}

/// Scans a `polar × azimuthal` grid of initial states and returns the one with the
/// largest `Δ⁽²⁾` at `steps`.
pub fn second_moment_witness(protocol: &DriveProtocol, steps: u64, polar: usize, azimuthal: usize) -> PlateauWitness {
    let mut best: Option<PlateauWitness> = None;
    let times = [steps / 100, steps / 10, steps];
    let times: Vec<u64> = {
        let mut v: Vec<u64> = times.iter().copied().filter(|&t| t >= 1).collect();
        v.dedup();
        v
    };
    for i in 0..polar.max(1) {
        let theta = std::f64::consts::PI * (i as f64 + 0.5) / polar.max(1) as f64;
        for j in 0..azimuthal.max(1) {
            let phi = std::f64::consts::TAU * j as f64 / azimuthal.max(1) as f64;
            let series = delta_series(protocol, bloch_to_spinor(theta, phi), 2, &times).expect("valid sample times");
            let delta2 = series.value(2, steps).unwrap_or(0.0);
            if best.as_ref().is_none_or(|b| delta2 > b.delta2) {
                best = Some(PlateauWitness { theta, phi, series, delta2 });
            }
        }
    }
    best.expect("non-empty grid")
}
