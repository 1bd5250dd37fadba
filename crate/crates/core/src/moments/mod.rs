//! Temporal-ensemble and Haar moments in the symmetric (Dicke) subspace, and the
//! trace distances `Δ⁽ᵏ⁾(T)` between them.
//!
//! Every `(|ψ⟩⟨ψ|)^{⊗k}` is supported on the `(k+1)`-dimensional symmetric subspace,
//! so moments are stored as `(k+1)×(k+1)` matrices in the Dicke basis
//! `|D_k,m⟩`, `m` = number of excitations.

mod eigen;
mod matrix;
mod sum;

use std::fmt;

use num_complex::Complex64 as C64;

pub use eigen::{hermitian_eigenvalues, MAX_DIM};
pub use matrix::CMatrix;
pub use sum::{ComplexSum, NeumaierSum};

use crate::drives::{DriveKind, DriveProtocol};
use crate::error::{Error, Result};
use crate::su2::Spinor;

/// Hard cap on the moment order handled by [`delta_series`].
pub const K_MAX_LIMIT: usize = 8;
/// Default number of moments tracked.
pub const K_MAX_DEFAULT: usize = 4;

/// Amplitudes of `|ψ⟩^{⊗k}` in the Dicke basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DickeVector {
    pub k: usize,
    pub amplitudes: Vec<C64>,
}

impl DickeVector {
    pub fn inner(&self, other: &DickeVector) -> C64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(x, y)| x.conj() * y).sum()
    }
}

/// `√C(k, m)` for `m = 0..=k`.
fn sqrt_binomials(k: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(k + 1);
    let mut c = 1.0f64;
    for m in 0..=k {
        out.push(c.sqrt());
        c = c * (k - m) as f64 / (m + 1) as f64;
    }
    out
}

/// `c_m = √C(k,m) · a^{k−m} · b^m`.
pub fn embed_symmetric(psi: &Spinor, k: usize) -> DickeVector {
    let roots = sqrt_binomials(k);
    let mut amplitudes = vec![C64::new(0.0, 0.0); k + 1];
    embed_into(psi, &roots, &mut amplitudes);
    DickeVector { k, amplitudes }
}

#[inline]
fn embed_into(psi: &Spinor, roots: &[f64], out: &mut [C64]) {
    let mut bpow = C64::new(1.0, 0.0);
    for (o, r) in out.iter_mut().zip(roots) {
        *o = bpow * *r;
        bpow *= psi.b;
    }
    let mut apow = C64::new(1.0, 0.0);
    for o in out.iter_mut().rev() {
        *o *= apow;
        apow *= psi.a;
    }
}

/// k-th moment of an ensemble, held as a compensated sum of outer products.
///
/// `weight` counts accumulated states; the moment itself is `sum / weight`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMoment {
    k: usize,
    // upper triangle, row-major, (k+1)(k+2)/2 entries
    sums: Vec<ComplexSum>,
    weight: u64,
    roots: Vec<f64>,
}

impl SymmetricMoment {
    /// Moment with no states accumulated.
    pub fn empty(k: usize) -> Self {
        let d = k + 1;
        Self {
            k,
            sums: vec![ComplexSum::default(); d * (d + 1) / 2],
            weight: 0,
            roots: sqrt_binomials(k),
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn weight(&self) -> u64 {
        self.weight
    }

    pub fn dim(&self) -> usize {
        self.k + 1
    }

    /// Adds `|ψ⟩⟨ψ|^{⊗k}` to the running mean.
    #[inline]
    pub fn accumulate(&mut self, psi: &Spinor) {
        let d = self.k + 1;
        let mut buf = [C64::new(0.0, 0.0); K_MAX_LIMIT + 1];
        if d <= buf.len() {
            embed_into(psi, &self.roots, &mut buf[..d]);
            self.push_outer(&buf[..d]);
        } else {
            let v = embed_symmetric(psi, self.k);
            self.push_outer(&v.amplitudes);
        }
    }

    #[inline]
    fn push_outer(&mut self, v: &[C64]) {
        let d = v.len();
        let mut idx = 0;
        for i in 0..d {
            let vi = v[i];
            for vj in &v[i..d] {
                self.sums[idx] += vi * vj.conj();
                idx += 1;
            }
        }
        self.weight += 1;
    }

    /// Weighted average of two moments of the same order.
    pub fn merge(&self, other: &SymmetricMoment) -> Result<SymmetricMoment> {
        if self.k != other.k {
            return Err(Error::OrderMismatch { left: self.k, right: other.k });
        }
        Ok(SymmetricMoment {
            k: self.k,
            sums: self.sums.iter().zip(&other.sums).map(|(a, b)| a.merge(b)).collect(),
            weight: self.weight + other.weight,
            roots: self.roots.clone(),
        })
    }

    /// The mean `sum / weight` as a full Hermitian matrix (zeros when empty).
    pub fn matrix(&self) -> CMatrix {
        let d = self.k + 1;
        let mut m = CMatrix::zeros(d);
        if self.weight == 0 {
            return m;
        }
        let w = self.weight as f64;
        let mut idx = 0;
        for i in 0..d {
            for j in i..d {
                let v = self.sums[idx].sum() / w;
                idx += 1;
                if i == j {
                    m[(i, i)] = C64::new(v.re, 0.0);
                } else {
                    m[(i, j)] = v;
                    m[(j, i)] = v.conj();
                }
            }
        }
        m
    }

    /// Exact moment given as a matrix, treated as a single unit-weight sample.
    fn from_matrix(k: usize, m: &CMatrix) -> Self {
        let mut out = Self::empty(k);
        let d = k + 1;
        let mut idx = 0;
        for i in 0..d {
            for j in i..d {
                out.sums[idx] = ComplexSum::new(m[(i, j)]);
                idx += 1;
            }
        }
        out.weight = 1;
        out
    }
}

/// Accumulates `psi` into `moment` and returns it.
pub fn accumulate(mut moment: SymmetricMoment, psi: &Spinor) -> SymmetricMoment {
    moment.accumulate(psi);
    moment
}

/// Moment of the single pure state `psi`.
pub fn state_moment(psi: &Spinor, k: usize) -> SymmetricMoment {
    accumulate(SymmetricMoment::empty(k), psi)
}

/// Haar k-th moment: the normalized symmetric projector, `I_{k+1}/(k+1)` in the
/// Dicke basis.
pub fn haar_moment(k: usize) -> SymmetricMoment {
    let m = CMatrix::identity(k + 1).scale(1.0 / (k + 1) as f64);
    SymmetricMoment::from_matrix(k, &m)
}

/// `½‖A − B‖₁`, clamped to `[0, 1]`.
pub fn trace_distance(a: &SymmetricMoment, b: &SymmetricMoment) -> Result<f64> {
    if a.k != b.k {
        return Err(Error::OrderMismatch { left: a.k, right: b.k });
    }
    trace_distance_matrices(&a.matrix(), &b.matrix())
}

/// `½‖A − B‖₁` for Hermitian matrices of equal size.
pub fn trace_distance_matrices(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::OrderMismatch { left: a.dim(), right: b.dim() });
    }
    let eig = hermitian_eigenvalues(&a.sub(b))?;
    Ok((0.5 * eig.iter().map(|x| x.abs()).sum::<f64>()).clamp(0.0, 1.0))
}

/// Traces one copy out of a k-copy symmetric operator, giving the `(k−1)`-copy
/// operator in its own Dicke basis.
///
/// Uses `|D_k,m⟩ = √((k−m)/k) |D_{k−1},m⟩|0⟩ + √(m/k) |D_{k−1},m−1⟩|1⟩`.
pub fn partial_trace_one_copy(m: &CMatrix) -> Result<CMatrix> {
    let d = m.dim();
    if d < 2 {
        return Err(Error::InvalidOrder(0));
    }
    let k = (d - 1) as f64;
    let mut out = CMatrix::zeros(d - 1);
    for i in 0..d {
        for j in 0..d {
            let v = m[(i, j)];
            if i < d - 1 && j < d - 1 {
                let w = (((k - i as f64) * (k - j as f64)).sqrt()) / k;
                out[(i, j)] += v * w;
            }
            if i > 0 && j > 0 {
                let w = ((i as f64) * (j as f64)).sqrt() / k;
                out[(i - 1, j - 1)] += v * w;
            }
        }
    }
    Ok(out)
}

/// One sampled trace distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaRecord {
    pub t: u64,
    pub k: usize,
    pub delta: f64,
}

/// `Δ⁽ᵏ⁾(T)` for one run, sorted by `(k, T)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaSeries {
    pub protocol: String,
    pub initial: String,
    pub records: Vec<DeltaRecord>,
}

impl DeltaSeries {
    /// `(T, Δ)` pairs of order `k`, ascending in `T`.
    pub fn series(&self, k: usize) -> Vec<(u64, f64)> {
        self.records.iter().filter(|r| r.k == k).map(|r| (r.t, r.delta)).collect()
    }

    pub fn value(&self, k: usize, t: u64) -> Option<f64> {
        self.records.iter().find(|r| r.k == k && r.t == t).map(|r| r.delta)
    }

    pub fn k_max(&self) -> usize {
        self.records.iter().map(|r| r.k).max().unwrap_or(0)
    }
}

/// Single pass over the trajectory of `psi0`, emitting `Δ⁽ᵏ⁾(T)` for `k = 1..=k_max`
/// at every sample time `T` (which must be ≥ 1 and strictly increasing).
pub fn delta_series(
    protocol: &DriveProtocol,
    psi0: Spinor,
    k_max: usize,
    sample_times: &[u64],
) -> Result<DeltaSeries> {
    delta_series_from_states(protocol.states(psi0), k_max, sample_times, protocol.to_string(), psi0.to_string())
}

/// Same as [`delta_series`] over an arbitrary state sequence `ψ(0), ψ(1), …`.
pub fn delta_series_from_states<I>(
    states: I,
    k_max: usize,
    sample_times: &[u64],
    protocol: String,
    initial: String,
) -> Result<DeltaSeries>
where
    I: IntoIterator<Item = Spinor>,
{
    if k_max == 0 || k_max > K_MAX_LIMIT {
        return Err(Error::InvalidOrder(k_max));
    }
    validate_sample_times(sample_times)?;
    let haar: Vec<CMatrix> = (1..=k_max).map(|k| haar_moment(k).matrix()).collect();
    let mut moments: Vec<SymmetricMoment> = (1..=k_max).map(SymmetricMoment::empty).collect();
    let mut per_k: Vec<Vec<DeltaRecord>> = vec![Vec::with_capacity(sample_times.len()); k_max];

    let mut next = 0;
    let mut states = states.into_iter();
    let t_max = sample_times.last().copied().unwrap_or(0);
    let mut t = 0u64;
    while t < t_max {
        let psi = states.next().ok_or_else(|| {
            Error::InvalidSampleTimes(format!("state sequence ended after {t} states"))
        })?;
        for m in moments.iter_mut() {
            m.accumulate(&psi);
        }
        t += 1;
        if sample_times[next] == t {
            for (i, m) in moments.iter().enumerate() {
                let delta = trace_distance_matrices(&m.matrix(), &haar[i])?;
                per_k[i].push(DeltaRecord { t, k: i + 1, delta });
            }
            next += 1;
        }
    }
    Ok(DeltaSeries { protocol, initial, records: per_k.into_iter().flatten().collect() })
}

fn validate_sample_times(times: &[u64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidSampleTimes("no sample times".into()));
    }
    if times[0] == 0 {
        return Err(Error::InvalidSampleTimes("sample times start at T = 1".into()));
    }
    if let Some(w) = times.windows(2).find(|w| w[0] >= w[1]) {
        return Err(Error::InvalidSampleTimes(format!("not strictly increasing at {} → {}", w[0], w[1])));
    }
    Ok(())
}

/// Sample-time policy for [`delta_series`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SamplePolicy {
    /// About `points` geometrically spaced integers in `[1, T_max]`.
    Geometric { points: usize },
    /// Every `T` in `1..=T_max`.
    Every,
    /// Explicit times; entries above `T_max` are dropped.
    Explicit(Vec<u64>),
}

impl Default for SamplePolicy {
    fn default() -> Self {
        SamplePolicy::Geometric { points: 100 }
    }
}

impl fmt::Display for SamplePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SamplePolicy::Geometric { points } => write!(f, "geom:{points}"),
            SamplePolicy::Every => f.write_str("all"),
            SamplePolicy::Explicit(v) => {
                let s: Vec<String> = v.iter().map(u64::to_string).collect();
                write!(f, "{}", s.join(","))
            }
        }
    }
}

impl SamplePolicy {
    /// Sorted, deduplicated sample times up to and including `t_max`. Geometric
    /// grids for the Fibonacci drive also contain every Fibonacci number ≤ `t_max`.
    pub fn times(&self, kind: DriveKind, t_max: u64) -> Vec<u64> {
        let mut v = match self {
            SamplePolicy::Geometric { points } => {
                let mut v = geometric_times(t_max, *points);
                if kind == DriveKind::Fibonacci {
                    v.extend(fibonacci_numbers_up_to(t_max));
                }
                v
            }
            SamplePolicy::Every => (1..=t_max).collect(),
            SamplePolicy::Explicit(list) => list.iter().copied().filter(|&t| t >= 1 && t <= t_max).collect(),
        };
        v.sort_unstable();
        v.dedup();
        v
    }
}

/// Roughly `points` distinct integers spaced geometrically over `[1, t_max]`,
/// always including `1` and `t_max`.
pub fn geometric_times(t_max: u64, points: usize) -> Vec<u64> {
    if t_max == 0 {
        return Vec::new();
    }
    let points = points.max(2);
    let ratio = (t_max as f64).ln() / (points - 1) as f64;
    let mut v: Vec<u64> = (0..points)
        .map(|i| ((ratio * i as f64).exp().round() as u64).clamp(1, t_max))
        .collect();
    v.push(t_max);
    v.sort_unstable();
    v.dedup();
    v
}

/// Fibonacci numbers `1, 2, 3, 5, …` not exceeding `t_max`.
pub fn fibonacci_numbers_up_to(t_max: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let (mut a, mut b) = (1u64, 2u64);
    while a <= t_max {
        out.push(a);
        let c = a.saturating_add(b);
        a = b;
        b = c;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::su2::{bloch_to_spinor, haar_random_spinor};
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn embed_examples() {
        let v = embed_symmetric(&Spinor::zero(), 3);
        assert_eq!(v.amplitudes, vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]);
        let v = embed_symmetric(&Spinor::plus(), 2);
        let want = [0.5, FRAC_1_SQRT_2, 0.5];
        for (x, w) in v.amplitudes.iter().zip(want) {
            assert!((x.re - w).abs() < 1e-15 && x.im.abs() < 1e-15);
        }
    }

    #[test]
    fn embedding_preserves_powers_of_overlap() {
        let mut rng = crate::rng::seeded(21);
        for k in 1..=8 {
            for _ in 0..20 {
                let psi = haar_random_spinor(&mut rng);
                let chi = haar_random_spinor(&mut rng);
                let lhs = embed_symmetric(&psi, k).inner(&embed_symmetric(&chi, k));
                let rhs = psi.inner(&chi).powi(k as i32);
                assert!((lhs - rhs).norm() < 1e-13);
                let n: f64 = embed_symmetric(&psi, k).amplitudes.iter().map(|c| c.norm_sqr()).sum();
                assert!((n - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn haar_moments_are_normalized_identities() {
        assert_eq!(haar_moment(1).matrix(), CMatrix::identity(2).scale(0.5));
        assert_eq!(haar_moment(2).matrix(), CMatrix::identity(3).scale(1.0 / 3.0));
    }

    #[test]
    fn haar_moment_matches_sampling() {
        let mut rng = crate::rng::seeded(8);
        for k in 1..=4 {
            let mut m = SymmetricMoment::empty(k);
            for _ in 0..100_000 {
                m.accumulate(&haar_random_spinor(&mut rng));
            }
            let d = trace_distance(&m, &haar_moment(k)).unwrap();
            assert!(d < 0.01, "k = {k}: {d}");
        }
    }

    #[test]
    fn accumulate_examples() {
        let psi = bloch_to_spinor(1.0, 0.3);
        let m = state_moment(&psi, 3);
        assert_eq!(m.weight(), 1);
        assert!(m.matrix().max_abs_diff(&CMatrix::outer(&embed_symmetric(&psi, 3).amplitudes)) < 1e-15);

        let mut many = SymmetricMoment::empty(3);
        for _ in 0..1000 {
            many.accumulate(&psi);
        }
        assert!(many.matrix().max_abs_diff(&m.matrix()) < 1e-14);

        let mut mix = SymmetricMoment::empty(1);
        mix.accumulate(&Spinor::zero());
        mix.accumulate(&Spinor::one());
        assert!(mix.matrix().max_abs_diff(&CMatrix::from_real_diagonal(&[0.5, 0.5])) < 1e-16);
    }

    #[test]
    fn trace_distance_examples() {
        let psi = bloch_to_spinor(2.0, 0.7);
        let x = state_moment(&psi, 2);
        assert!(trace_distance(&x, &x).unwrap() < 1e-15);
        let d = trace_distance(&state_moment(&Spinor::zero(), 1), &haar_moment(1)).unwrap();
        assert!((d - 0.5).abs() < 1e-15);
        for k in 1..=8 {
            let d = trace_distance(&state_moment(&psi, k), &haar_moment(k)).unwrap();
            assert!((d - k as f64 / (k + 1) as f64).abs() < 1e-12);
        }
        assert_eq!(
            trace_distance(&x, &haar_moment(3)),
            Err(Error::OrderMismatch { left: 2, right: 3 })
        );
    }

    #[test]
    fn partial_trace_consistency() {
        let mut rng = crate::rng::seeded(31);
        let states: Vec<Spinor> = (0..200).map(|_| haar_random_spinor(&mut rng)).collect();
        for k in 2..=8 {
            let mut hi = SymmetricMoment::empty(k);
            let mut lo = SymmetricMoment::empty(k - 1);
            for s in &states {
                hi.accumulate(s);
                lo.accumulate(s);
            }
            let reduced = partial_trace_one_copy(&hi.matrix()).unwrap();
            assert!(reduced.max_abs_diff(&lo.matrix()) < 1e-10, "k = {k}");
        }
        let h = partial_trace_one_copy(&haar_moment(4).matrix()).unwrap();
        assert!(h.max_abs_diff(&haar_moment(3).matrix()) < 1e-15);
    }

    #[test]
    fn streaming_equals_batch_and_merge_is_order_free() {
        let mut rng = crate::rng::seeded(44);
        let states: Vec<Spinor> = (0..5_000).map(|_| haar_random_spinor(&mut rng)).collect();
        let k = 3;
        let mut stream = SymmetricMoment::empty(k);
        states.iter().for_each(|s| stream.accumulate(s));
        let mut batch = CMatrix::zeros(k + 1);
        for s in &states {
            batch = batch.add(&CMatrix::outer(&embed_symmetric(s, k).amplitudes));
        }
        let batch = batch.scale(1.0 / states.len() as f64);
        assert!(stream.matrix().max_abs_diff(&batch) < 1e-12);

        let parts: Vec<SymmetricMoment> = states
            .chunks(700)
            .map(|c| c.iter().fold(SymmetricMoment::empty(k), accumulate))
            .collect();
        let fwd = parts.iter().skip(1).fold(parts[0].clone(), |a, b| a.merge(b).unwrap());
        let rev = parts.iter().rev().skip(1).fold(parts[parts.len() - 1].clone(), |a, b| a.merge(b).unwrap());
        assert_eq!(fwd.weight(), 5_000);
        assert!(fwd.matrix().max_abs_diff(&rev.matrix()) < 1e-12);
        assert!(fwd.matrix().max_abs_diff(&stream.matrix()) < 1e-12);
        assert!(SymmetricMoment::empty(2).merge(&SymmetricMoment::empty(3)).is_err());
    }

    #[test]
    fn delta_series_first_sample_is_pure_state_value() {
        let psi0 = bloch_to_spinor(0.9, 0.2);
        for d in [
            DriveProtocol::floquet(0.3, 0.5),
            DriveProtocol::smooth_qp(),
            DriveProtocol::fibonacci(0.38 * std::f64::consts::PI, 0.22 * std::f64::consts::PI),
        ] {
            let s = delta_series(&d, psi0, 4, &[1, 2, 10]).unwrap();
            for k in 1..=4 {
                let v = s.value(k, 1).unwrap();
                assert!((v - k as f64 / (k + 1) as f64).abs() < 1e-10);
            }
            assert_eq!(s.records.len(), 12);
            let keys: Vec<(usize, u64)> = s.records.iter().map(|r| (r.k, r.t)).collect();
            let mut sorted = keys.clone();
            sorted.sort();
            assert_eq!(keys, sorted);
            assert!(s.records.iter().all(|r| (0.0..=1.0).contains(&r.delta)));
        }
    }

    #[test]
    fn delta_series_rejects_bad_arguments() {
        let d = DriveProtocol::smooth_qp();
        let z = Spinor::zero();
        assert!(matches!(delta_series(&d, z, 0, &[1]), Err(Error::InvalidOrder(0))));
        assert!(matches!(delta_series(&d, z, 9, &[1]), Err(Error::InvalidOrder(9))));
        assert!(delta_series(&d, z, 2, &[]).is_err());
        assert!(delta_series(&d, z, 2, &[0, 3]).is_err());
        assert!(delta_series(&d, z, 2, &[5, 3]).is_err());
    }

    #[test]
    fn sample_policies() {
        let g = geometric_times(1000, 100);
        assert_eq!(g.first(), Some(&1));
        assert_eq!(g.last(), Some(&1000));
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!(g.len() > 50 && g.len() <= 101);

        assert_eq!(fibonacci_numbers_up_to(20), vec![1, 2, 3, 5, 8, 13]);
        let f = SamplePolicy::default().times(DriveKind::Fibonacci, 987);
        assert!(fibonacci_numbers_up_to(987).iter().all(|x| f.contains(x)));
        assert_eq!(SamplePolicy::Every.times(DriveKind::Floquet, 5), vec![1, 2, 3, 4, 5]);
        assert_eq!(SamplePolicy::Explicit(vec![9, 0, 3, 3, 50]).times(DriveKind::Floquet, 10), vec![3, 9]);
        assert_eq!(geometric_times(1, 100), vec![1]);
    }
}
