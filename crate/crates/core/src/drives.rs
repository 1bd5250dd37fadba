//! Kicked drive protocols and state trajectories.
//!
//! A drive applies the kick `V_t = exp(-i g(ω₂ t)·σ)` at each integer time `t ≥ 1`.
//! The circle coordinate is evaluated as `2π · frac(t · ω₂/2π)` so that rational
//! rotations (the Floquet drive) land on arc boundaries exactly.

use std::f64::consts::{PI, TAU};
use std::fmt;

use crate::error::{Error, Result};
use crate::su2::{apply, exp_kick, rot_x, rot_y, rot_z, compose, BlochVector, Spinor, Unitary2};

/// Points within this distance (radians) of an arc boundary snap onto it.
pub const ARC_SNAP: f64 = 1e-12;

/// Steps between spinor renormalizations in long trajectories.
pub const RENORMALIZE_INTERVAL: u64 = 10_000;

/// Golden ratio `(1+√5)/2`, the second frequency of the smooth quasiperiodic drive.
pub fn golden_omega2() -> f64 {
    (1.0 + 5f64.sqrt()) / 2.0
}

/// `π(3−√5)`, the second frequency of the Fibonacci drive.
pub fn fibonacci_omega2() -> f64 {
    PI * (3.0 - 5f64.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DriveKind {
    Floquet,
    SmoothQp,
    Fibonacci,
    CustomPiecewise,
}

impl DriveKind {
    pub fn name(self) -> &'static str {
        match self {
            DriveKind::Floquet => "floquet",
            DriveKind::SmoothQp => "smoothqp",
            DriveKind::Fibonacci => "fibonacci",
            DriveKind::CustomPiecewise => "custom",
        }
    }
}

impl fmt::Display for DriveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One piece `[start, end)` of a piecewise-constant kick field on the circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub start: f64,
    pub end: f64,
    pub kick: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
struct Piece {
    arc: Arc,
    unitary: Unitary2,
}

#[derive(Debug, Clone, PartialEq)]
enum Field {
    Piecewise(Vec<Piece>),
    Smooth,
}

/// A fully specified drive: kind, kick angles and second frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct DriveProtocol {
    kind: DriveKind,
    theta_x: f64,
    theta_y: f64,
    theta_z: f64,
    omega2: f64,
    // ω₂ / 2π, stored separately so the Fibonacci slope is exact to the last bit
    turns: f64,
    field: Field,
}

impl DriveProtocol {
    /// Alternating `U_x`, `U_y` kicks (`ω₂ = π`).
    pub fn floquet(theta_x: f64, theta_y: f64) -> Self {
        let arcs = vec![
            Arc { start: 0.0, end: PI, kick: [0.0, theta_y, 0.0] },
            Arc { start: PI, end: TAU, kick: [theta_x, 0.0, 0.0] },
        ];
        Self {
            kind: DriveKind::Floquet,
            theta_x,
            theta_y,
            theta_z: 0.0,
            omega2: PI,
            turns: 0.5,
            field: Field::Piecewise(pieces(&arcs)),
        }
    }

    /// Smoothly kicked quasiperiodic drive with `ω₂ = (1+√5)/2`.
    ///
    /// Equivalent to `U(t) = U_z^t U_x^t` with `θ_z = ω₂`, `θ_x = 1`.
    pub fn smooth_qp() -> Self {
        let omega2 = golden_omega2();
        Self {
            kind: DriveKind::SmoothQp,
            theta_x: 1.0,
            theta_y: 0.0,
            theta_z: omega2,
            omega2,
            turns: omega2 / TAU,
            field: Field::Smooth,
        }
    }

    /// Fibonacci drive: `U_x` on `[0, 2π−ω₂)`, `U_z` on `[2π−ω₂, 2π)`, `ω₂ = π(3−√5)`.
    pub fn fibonacci(theta_x: f64, theta_z: f64) -> Self {
        let omega2 = fibonacci_omega2();
        let turns = (3.0 - 5f64.sqrt()) / 2.0;
        let boundary = TAU * (1.0 - turns);
        let arcs = vec![
            Arc { start: 0.0, end: boundary, kick: [theta_x, 0.0, 0.0] },
            Arc { start: boundary, end: TAU, kick: [0.0, 0.0, theta_z] },
        ];
        Self {
            kind: DriveKind::Fibonacci,
            theta_x,
            theta_y: 0.0,
            theta_z,
            omega2,
            turns,
            field: Field::Piecewise(pieces(&arcs)),
        }
    }

    /// User-defined piecewise-constant field. Arcs must partition `[0, 2π)` in order.
    pub fn custom(omega2: f64, arcs: Vec<Arc>) -> Result<Self> {
        if !omega2.is_finite() {
            return Err(Error::InvalidArcs("omega2 must be finite".into()));
        }
        validate_arcs(&arcs)?;
        Ok(Self {
            kind: DriveKind::CustomPiecewise,
            theta_x: 0.0,
            theta_y: 0.0,
            theta_z: 0.0,
            omega2,
            turns: omega2 / TAU,
            field: Field::Piecewise(pieces(&arcs)),
        })
    }

    pub fn kind(&self) -> DriveKind {
        self.kind
    }

    pub fn theta_x(&self) -> f64 {
        self.theta_x
    }

    pub fn theta_y(&self) -> f64 {
        self.theta_y
    }

    pub fn theta_z(&self) -> f64 {
        self.theta_z
    }

    pub fn omega2(&self) -> f64 {
        self.omega2
    }

    pub fn arcs(&self) -> Vec<Arc> {
        match &self.field {
            Field::Piecewise(p) => p.iter().map(|p| p.arc).collect(),
            Field::Smooth => Vec::new(),
        }
    }

    /// Circle coordinate `ω₂ t mod 2π` in `[0, 2π)`.
    pub fn phase(&self, t: u64) -> f64 {
        let frac = (t as f64 * self.turns).rem_euclid(1.0);
        TAU * frac
    }

    /// Index of the arc hit at time `t`; `None` for the smooth drive.
    pub fn arc_index(&self, t: u64) -> Option<usize> {
        match &self.field {
            Field::Piecewise(p) => Some(locate(p, self.phase(t))),
            Field::Smooth => None,
        }
    }

    /// Kick `V_t` for `t ≥ 1`.
    pub fn kick(&self, t: u64) -> Result<Unitary2> {
        if t == 0 {
            return Err(Error::KickAtZero);
        }
        Ok(self.kick_unchecked(t))
    }

    #[inline]
    fn kick_unchecked(&self, t: u64) -> Unitary2 {
        match &self.field {
            Field::Piecewise(p) => p[locate(p, self.phase(t))].unitary,
            Field::Smooth => exp_kick(smooth_g(self.omega2 * t as f64)),
        }
    }

    /// Lazily evolved states `ψ(0), ψ(1), …`.
    pub fn states(&self, psi0: Spinor) -> StateStream<'_> {
        StateStream { protocol: self, state: psi0, t: 0 }
    }
}

impl fmt::Display for DriveProtocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            DriveKind::Floquet => write!(f, "floquet(theta_x={}, theta_y={})", self.theta_x, self.theta_y),
            DriveKind::SmoothQp => write!(f, "smoothqp(omega2={})", self.omega2),
            DriveKind::Fibonacci => {
                write!(f, "fibonacci(theta_x={}, theta_z={})", self.theta_x, self.theta_z)
            }
            DriveKind::CustomPiecewise => {
                write!(f, "custom(omega2={}, arcs=[", self.omega2)?;
                for (i, a) in self.arcs().iter().enumerate() {
                    if i > 0 {
                        f.write_str("; ")?;
                    }
                    write!(f, "{}:{}:{},{},{}", a.start, a.end, a.kick[0], a.kick[1], a.kick[2])?;
                }
                f.write_str("])")
            }
        }
    }
}

fn pieces(arcs: &[Arc]) -> Vec<Piece> {
    arcs.iter().map(|&arc| Piece { arc, unitary: exp_kick(arc.kick) }).collect()
}

fn validate_arcs(arcs: &[Arc]) -> Result<()> {
    let first = arcs.first().ok_or_else(|| Error::InvalidArcs("no arcs".into()))?;
    if first.start.abs() > ARC_SNAP {
        return Err(Error::InvalidArcs(format!("first arc starts at {} instead of 0", first.start)));
    }
    for (i, a) in arcs.iter().enumerate() {
        if !(a.start < a.end) || a.kick.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArcs(format!("arc {i} is empty or non-finite")));
        }
        if let Some(next) = arcs.get(i + 1) {
            if (next.start - a.end).abs() > ARC_SNAP {
                return Err(Error::InvalidArcs(format!(
                    "gap or overlap between arc {i} (end {}) and arc {} (start {})",
                    a.end,
                    i + 1,
                    next.start
                )));
            }
        }
    }
    let last = arcs.last().unwrap();
    if (last.end - TAU).abs() > ARC_SNAP {
        return Err(Error::InvalidArcs(format!("last arc ends at {} instead of 2π", last.end)));
    }
    Ok(())
}

// Half-open lookup; phases within ARC_SNAP of a boundary are moved onto it, so the
// arc starting at that boundary wins.
#[inline]
fn locate(pieces: &[Piece], phase: f64) -> usize {
    if TAU - phase <= ARC_SNAP {
        return 0;
    }
    for (i, p) in pieces.iter().enumerate() {
        let end = p.arc.end;
        if phase < end && end - phase > ARC_SNAP {
            return i;
        }
    }
    pieces.len() - 1
}

/// Kick field of the smooth quasiperiodic drive,
/// `(c/sin c)·(sin 1·cos(2φ−ω₂), sin 1·sin(2φ−ω₂), cos 1·sin ω₂)` with
/// `cos c = cos ω₂ cos 1`.
pub fn smooth_g(phi: f64) -> [f64; 3] {
    let omega2 = golden_omega2();
    let c = (omega2.cos() * 1f64.cos()).acos();
    let scale = c / c.sin();
    let (s2, c2) = (2.0 * phi - omega2).sin_cos();
    [
        scale * 1f64.sin() * c2,
        scale * 1f64.sin() * s2,
        scale * 1f64.cos() * omega2.sin(),
    ]
}

/// Kick unitary at time `t ≥ 1`.
pub fn kick_at(protocol: &DriveProtocol, t: u64) -> Result<Unitary2> {
    protocol.kick(t)
}

/// First `length` characters of the Fibonacci word, by the rule
/// `W⁽ᵏ⁺¹⁾ = W⁽ᵏ⁾ W⁽ᵏ⁻¹⁾`, `W⁽⁰⁾ = 1`, `W⁽¹⁾ = 0`.
pub fn fibonacci_word_substitution(length: usize) -> Vec<u8> {
    let mut prev = vec![1u8];
    let mut cur = vec![0u8];
    while cur.len() < length {
        let next = [cur.as_slice(), prev.as_slice()].concat();
        prev = cur;
        cur = next;
    }
    cur.truncate(length);
    cur
}

/// Characters at `t = 1..=length` of the rotation word: 0 when `ω₂ t mod 2π` lies on
/// the x-kick arc `[0, 2π−ω₂)`, 1 otherwise.
pub fn fibonacci_word_circle(length: usize) -> Vec<u8> {
    let drive = DriveProtocol::fibonacci(1.0, 1.0);
    (1..=length as u64)
        .map(|t| drive.arc_index(t).unwrap_or(0) as u8)
        .collect()
}

/// Sequence of states of one driven evolution.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub initial: Spinor,
    pub states: Vec<Spinor>,
    pub protocol: DriveProtocol,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn bloch(&self) -> Vec<BlochVector> {
        self.states.iter().map(Spinor::bloch).collect()
    }
}

/// States at `t = 0, …, steps−1`.
pub fn evolve(protocol: &DriveProtocol, psi0: Spinor, steps: usize) -> Trajectory {
    Trajectory {
        initial: psi0,
        states: protocol.states(psi0).take(steps).collect(),
        protocol: protocol.clone(),
    }
}

/// Iterator over `ψ(0), ψ(1), …` produced by [`DriveProtocol::states`].
#[derive(Debug, Clone)]
pub struct StateStream<'a> {
    protocol: &'a DriveProtocol,
    state: Spinor,
    t: u64,
}

impl Iterator for StateStream<'_> {
    type Item = Spinor;

    #[inline]
    fn next(&mut self) -> Option<Spinor> {
        let out = self.state;
        self.t += 1;
        let mut next = apply(&self.protocol.kick_unchecked(self.t), &self.state);
        if self.t.is_multiple_of(RENORMALIZE_INTERVAL) {
            next = next.renormalized();
        }
        self.state = next;
        Some(out)
    }
}

/// The two eigenvectors of `U_F = e^{-iθ_y σ_y} e^{-iθ_x σ_x}`, phase-fixed so the
/// first nonzero component is real and positive. The first has Bloch vector along
/// the rotation axis of `U_F`, the second opposite to it.
pub fn floquet_eigenstates(theta_x: f64, theta_y: f64) -> Result<[Spinor; 2]> {
    let uf = compose(&rot_y(theta_y), &rot_x(theta_x));
    let axis = rotation_axis(&uf).ok_or(Error::DegenerateFloquet)?;
    let n = BlochVector::from_array(axis);
    Ok([bloch_spinor(&n).phase_fixed(), bloch_spinor(&n.scaled(-1.0)).phase_fixed()])
}

/// Unit rotation axis of an SU(2) element `q₀ I − i q·σ`, or `None` when `q ≈ 0`.
pub fn rotation_axis(u: &Unitary2) -> Option<[f64; 3]> {
    // remove any global phase so that det = 1
    let phase = u.det().sqrt();
    let m = [[u.m[0][0] / phase, u.m[0][1] / phase], [u.m[1][0] / phase, u.m[1][1] / phase]];
    let q = [
        -(m[0][1].im + m[1][0].im) / 2.0,
        (m[1][0].re - m[0][1].re) / 2.0,
        (m[1][1].im - m[0][0].im) / 2.0,
    ];
    let norm = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt();
    if norm < 1e-12 {
        return None;
    }
    let sign = if (m[0][0] + m[1][1]).re < 0.0 { -1.0 } else { 1.0 };
    Some([sign * q[0] / norm, sign * q[1] / norm, sign * q[2] / norm])
}

fn bloch_spinor(r: &BlochVector) -> Spinor {
    let theta = r.z.clamp(-1.0, 1.0).acos();
    let phi = r.y.atan2(r.x);
    crate::su2::bloch_to_spinor(theta, phi)
}

/// Builds `U_z^t U_x U_z^{-(t-1)}` for the smooth drive, `θ_z = ω₂`, `θ_x = 1`.
pub fn smooth_kick_by_products(t: u64) -> Unitary2 {
    let uz = rot_z(golden_omega2());
    let ux = rot_x(1.0);
    compose(&uz.pow(t as i64), &compose(&ux, &uz.pow(-(t as i64 - 1))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::su2::{bloch_to_spinor, rotation};

    #[test]
    fn substitution_word_prefixes() {
        assert_eq!(fibonacci_word_substitution(8), vec![0, 1, 0, 0, 1, 0, 1, 0]);
        assert_eq!(fibonacci_word_substitution(2), vec![0, 1]);
        assert_eq!(fibonacci_word_substitution(1), vec![0]);
        let zeros = fibonacci_word_substitution(987).iter().filter(|&&c| c == 0).count();
        assert_eq!(zeros, 610);
    }

    #[test]
    fn circle_word_prefix_and_density() {
        assert_eq!(fibonacci_word_circle(5), vec![0, 1, 0, 0, 1]);
        assert_eq!(fibonacci_word_circle(8), fibonacci_word_substitution(8));
        let n = 100_000;
        let zeros = fibonacci_word_circle(n).iter().filter(|&&c| c == 0).count();
        let frac = zeros as f64 / n as f64;
        assert!((frac - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-4, "{frac}");
    }

    #[test]
    fn circle_and_substitution_words_agree() {
        let n = 100_000;
        let a = fibonacci_word_substitution(n);
        let b = fibonacci_word_circle(n);
        let mismatch = a.iter().zip(&b).position(|(x, y)| x != y);
        assert_eq!(mismatch, None, "first mismatch at index {mismatch:?}");
    }

    #[test]
    fn smooth_g_has_norm_c() {
        let omega2 = golden_omega2();
        let c = (omega2.cos() * 1f64.cos()).acos();
        assert!(c > 0.0 && c < PI);
        for i in 0..50 {
            let g = smooth_g(0.37 * i as f64 - 4.0);
            let n = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
            assert!((n - c).abs() < 1e-14);
        }
        let g = smooth_g(omega2);
        assert!((g[2] - c / c.sin() * 1f64.cos() * omega2.sin()).abs() < 1e-15);
    }

    #[test]
    fn smooth_kick_matches_conjugated_product() {
        let omega2 = golden_omega2();
        for t in 1..=100u64 {
            let direct = exp_kick(smooth_g(omega2 * t as f64));
            assert!(direct.max_diff(&smooth_kick_by_products(t)) < 1e-10, "t = {t}");
        }
        let first = DriveProtocol::smooth_qp().kick(1).unwrap();
        assert!(first.max_diff(&compose(&rot_z(omega2), &rot_x(1.0))) < 1e-10);
        // the kick axis equals g/|g|, angle c
        let g = smooth_g(omega2);
        let c = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
        let u = rotation([g[0] / c, g[1] / c, g[2] / c], c).unwrap();
        assert!(u.max_diff(&compose(&rot_z(omega2), &rot_x(1.0))) < 1e-10);
    }

    #[test]
    fn floquet_kick_order_and_period() {
        let (tx, ty) = (PI / 8.0, PI / 7.0);
        let d = DriveProtocol::floquet(tx, ty);
        assert_eq!(d.kick(1).unwrap(), rot_x(tx));
        assert_eq!(d.kick(2).unwrap(), rot_y(ty));
        for t in 1..5_000u64 {
            assert_eq!(d.kick(t).unwrap(), d.kick(t + 2).unwrap());
        }
        assert_eq!(d.kick(0), Err(Error::KickAtZero));
    }

    #[test]
    fn fibonacci_kick_order() {
        let d = DriveProtocol::fibonacci(0.38 * PI, 0.22 * PI);
        let ux = rot_x(0.38 * PI);
        let uz = rot_z(0.22 * PI);
        let want = [ux, uz, ux, ux, uz, ux, uz, ux];
        for (t, w) in (1..=8).zip(want) {
            assert_eq!(d.kick(t).unwrap(), w, "t = {t}");
        }
    }

    #[test]
    fn custom_arcs_validation() {
        let ok = DriveProtocol::custom(
            1.3,
            vec![
                Arc { start: 0.0, end: 2.0, kick: [0.1, 0.0, 0.0] },
                Arc { start: 2.0, end: TAU, kick: [0.0, 0.0, 0.2] },
            ],
        )
        .unwrap();
        assert_eq!(ok.kind(), DriveKind::CustomPiecewise);
        // phase 1.3 is in the first arc, 2.6 in the second
        assert_eq!(ok.kick(1).unwrap(), exp_kick([0.1, 0.0, 0.0]));
        assert_eq!(ok.kick(2).unwrap(), exp_kick([0.0, 0.0, 0.2]));

        let gap = vec![
            Arc { start: 0.0, end: 2.0, kick: [0.1, 0.0, 0.0] },
            Arc { start: 2.5, end: TAU, kick: [0.0, 0.0, 0.2] },
        ];
        assert!(matches!(DriveProtocol::custom(1.0, gap), Err(Error::InvalidArcs(_))));
        let short = vec![Arc { start: 0.0, end: 6.0, kick: [0.1, 0.0, 0.0] }];
        assert!(DriveProtocol::custom(1.0, short).is_err());
        assert!(DriveProtocol::custom(1.0, vec![]).is_err());
    }

    #[test]
    fn boundary_snapping_is_deterministic() {
        // ω₂ = π/2 puts t = 1 exactly on the boundary at π/2 (arc 1 wins)
        let d = DriveProtocol::custom(
            PI / 2.0,
            vec![
                Arc { start: 0.0, end: PI / 2.0, kick: [0.1, 0.0, 0.0] },
                Arc { start: PI / 2.0, end: TAU, kick: [0.0, 0.2, 0.0] },
            ],
        )
        .unwrap();
        assert_eq!(d.arc_index(1), Some(1));
        assert_eq!(d.arc_index(4), Some(0));
    }

    #[test]
    fn evolve_examples() {
        let psi0 = bloch_to_spinor(0.4, 1.1);
        let d = DriveProtocol::fibonacci(0.38 * PI, 0.22 * PI);
        let tr = evolve(&d, psi0, 1);
        assert_eq!(tr.states, vec![psi0]);

        let tr = evolve(&d, psi0, 50);
        assert_eq!(tr.states[0], psi0);
        for t in 1..50 {
            let want = apply(&d.kick(t as u64).unwrap(), &tr.states[t - 1]);
            assert_eq!(tr.states[t], want);
        }
        let again = evolve(&d, psi0, 50);
        assert_eq!(tr.states, again.states);
    }

    #[test]
    fn smooth_drive_matches_closed_form() {
        let omega2 = golden_omega2();
        let psi0 = bloch_to_spinor(0.0, 0.0);
        let d = DriveProtocol::smooth_qp();
        let mut worst: f64 = 0.0;
        for (t, psi) in d.states(psi0).take(10_001).enumerate() {
            let closed = compose(&rot_z(omega2 * t as f64), &rot_x(t as f64));
            let want = apply(&closed, &psi0);
            worst = worst.max(1.0 - psi.overlap(&want));
            // amplitude comparison up to global phase
            let phase = want.inner(&psi);
            let phase = phase / phase.norm();
            let d0 = (psi.a - want.a * phase).norm().max((psi.b - want.b * phase).norm());
            assert!(d0 < 1e-9, "t = {t}: {d0}");
        }
        assert!(worst < 1e-12);
    }

    #[test]
    fn floquet_eigenstates_examples() {
        let [p, m] = floquet_eigenstates(PI / 8.0, 0.0).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((p.a.re - h).abs() < 1e-12 && (p.b.re.abs() - h).abs() < 1e-12);
        assert!((m.a.re - h).abs() < 1e-12);
        assert!((p.b.re + m.b.re).abs() < 1e-12);

        let (tx, ty) = (PI / 8.0, PI / 8.0);
        let uf = compose(&rot_y(ty), &rot_x(tx));
        let states = floquet_eigenstates(tx, ty).unwrap();
        for s in &states {
            assert!((s.inner(&apply(&uf, s)).norm() - 1.0).abs() < 1e-12);
            assert!(s.a.im.abs() < 1e-15 && s.a.re > 0.0);
        }
        assert!(states[0].inner(&states[1]).norm() < 1e-12);

        assert_eq!(floquet_eigenstates(0.0, 0.0), Err(Error::DegenerateFloquet));
        assert_eq!(floquet_eigenstates(PI, 0.0), Err(Error::DegenerateFloquet));
    }

    #[test]
    fn floquet_eigenstate_returns_every_period() {
        let (tx, ty) = (PI / 8.0, PI / 8.0);
        let [psi, _] = floquet_eigenstates(tx, ty).unwrap();
        let tr = evolve(&DriveProtocol::floquet(tx, ty), psi, 400);
        for t in (0..400).step_by(2) {
            assert!((tr.states[t].overlap(&psi) - 1.0).abs() < 1e-12);
        }
    }
}
