//! Qubit states, density matrices and SU(2) rotations.
//!
//! Rotations follow the kick convention `exp(-i θ n·σ)` with no factor of one half
//! in the exponent, so a rotation by `θ` turns the Bloch vector by `2θ` about `n`.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::ops::Mul;

use num_complex::Complex64 as C64;
use rand::Rng;

use crate::error::{Error, Result};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Compositions between two re-unitarization steps in long products.
pub const REUNITARIZE_INTERVAL: u64 = 10_000;

/// Pure qubit state `a|0⟩ + b|1⟩`. The global phase carries no meaning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spinor {
    pub a: C64,
    pub b: C64,
}

impl Spinor {
    /// Builds a spinor and rescales it to unit norm.
    ///
    /// Returns `None` for the zero vector.
    pub fn normalized(a: C64, b: C64) -> Option<Self> {
        let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
        if n == 0.0 || !n.is_finite() {
            return None;
        }
        Some(Self { a: a / n, b: b / n })
    }

    pub fn zero() -> Self {
        Self { a: ONE, b: ZERO }
    }

    pub fn one() -> Self {
        Self { a: ZERO, b: ONE }
    }

    pub fn plus() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self { a: C64::new(h, 0.0), b: C64::new(h, 0.0) }
    }

    pub fn minus() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self { a: C64::new(h, 0.0), b: C64::new(-h, 0.0) }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.a.norm_sqr() + self.b.norm_sqr()
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &Spinor) -> C64 {
        self.a.conj() * other.a + self.b.conj() * other.b
    }

    /// `|⟨self|other⟩|`, the phase-insensitive overlap.
    pub fn overlap(&self, other: &Spinor) -> f64 {
        self.inner(other).norm()
    }

    pub fn renormalized(&self) -> Spinor {
        let n = self.norm_sqr().sqrt();
        Spinor { a: self.a / n, b: self.b / n }
    }

    /// Same ray, with the first nonzero component made real and positive.
    pub fn phase_fixed(&self) -> Spinor {
        let lead = if self.a.norm() > 1e-14 { self.a } else { self.b };
        if lead.norm() == 0.0 {
            return *self;
        }
        let phase = lead.conj() / lead.norm();
        Spinor { a: self.a * phase, b: self.b * phase }
    }

    pub fn bloch(&self) -> BlochVector {
        spinor_to_bloch(self)
    }

    /// Polar and azimuthal Bloch angles `(θ, φ)` with `φ ∈ [0, 2π)`.
    pub fn bloch_angles(&self) -> (f64, f64) {
        let r = self.bloch();
        let theta = r.z.clamp(-1.0, 1.0).acos();
        let phi = r.y.atan2(r.x).rem_euclid(TAU);
        (theta, phi)
    }

    pub fn density(&self) -> DensityMatrix2 {
        density(self)
    }
}

impl fmt::Display for Spinor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (theta, phi) = self.bloch_angles();
        write!(f, "bloch(theta={theta}, phi={phi})")
    }
}

/// Spinor `(cos(θ/2), e^{iφ} sin(θ/2))` for polar angle `θ` and azimuth `φ`.
pub fn bloch_to_spinor(theta: f64, phi: f64) -> Spinor {
    let (s, c) = (theta / 2.0).sin_cos();
    Spinor { a: C64::new(c, 0.0), b: C64::from_polar(s, phi) }
}

/// Bloch vector `⟨ψ|σ|ψ⟩`.
pub fn spinor_to_bloch(psi: &Spinor) -> BlochVector {
    let cross = psi.a.conj() * psi.b;
    BlochVector {
        x: 2.0 * cross.re,
        y: 2.0 * cross.im,
        z: psi.a.norm_sqr() - psi.b.norm_sqr(),
    }
}

/// Uniform draw on the Bloch sphere from `u, v ∈ [0, 1)`.
pub fn haar_spinor_from_uniforms(u: f64, v: f64) -> Spinor {
    bloch_to_spinor((1.0 - 2.0 * u).clamp(-1.0, 1.0).acos(), TAU * v)
}

pub fn haar_random_spinor<R: Rng + ?Sized>(rng: &mut R) -> Spinor {
    let u: f64 = rng.random();
    let v: f64 = rng.random();
    haar_spinor_from_uniforms(u, v)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn from_array(v: [f64; 3]) -> Self {
        Self { x: v[0], y: v[1], z: v[2] }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn dot(&self, other: &BlochVector) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn scaled(&self, s: f64) -> BlochVector {
        BlochVector::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn sub(&self, other: &BlochVector) -> BlochVector {
        BlochVector::new(self.x - other.x, self.y - other.y, self.z - other.z)
    }

    /// Rodrigues rotation by `angle` about the unit vector `axis`.
    pub fn rotated(&self, axis: [f64; 3], angle: f64) -> BlochVector {
        let k = BlochVector::from_array(axis);
        let (s, c) = angle.sin_cos();
        let kxv = BlochVector::new(
            k.y * self.z - k.z * self.y,
            k.z * self.x - k.x * self.z,
            k.x * self.y - k.y * self.x,
        );
        let kdv = k.dot(self);
        BlochVector::new(
            self.x * c + kxv.x * s + k.x * kdv * (1.0 - c),
            self.y * c + kxv.y * s + k.y * kdv * (1.0 - c),
            self.z * c + kxv.z * s + k.z * kdv * (1.0 - c),
        )
    }
}

/// 2×2 unitary, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unitary2 {
    pub m: [[C64; 2]; 2],
}

impl Unitary2 {
    pub fn identity() -> Self {
        Self { m: [[ONE, ZERO], [ZERO, ONE]] }
    }

    /// Wraps a matrix after checking `U U† = I` within `1e-12` entrywise.
    pub fn from_matrix(m: [[C64; 2]; 2]) -> Option<Self> {
        let u = Self { m };
        (u.unitarity_error() <= 1e-12).then_some(u)
    }

    pub fn dagger(&self) -> Self {
        let m = &self.m;
        Self { m: [[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]] }
    }

    pub fn det(&self) -> C64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn trace(&self) -> C64 {
        self.m[0][0] + self.m[1][1]
    }

    /// Largest entrywise deviation of `U U†` from the identity.
    pub fn unitarity_error(&self) -> f64 {
        let p = mat_mul(&self.m, &self.dagger().m);
        let mut err: f64 = 0.0;
        for (i, row) in p.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let target = if i == j { ONE } else { ZERO };
                err = err.max((v - target).norm());
            }
        }
        err
    }

    /// Largest entrywise difference from `other`.
    pub fn max_diff(&self, other: &Unitary2) -> f64 {
        let mut err: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                err = err.max((self.m[i][j] - other.m[i][j]).norm());
            }
        }
        err
    }

    /// One Newton step toward the nearest unitary: `U ← (3U − U U† U) / 2`.
    pub fn reunitarized(&self) -> Self {
        let uuu = mat_mul(&mat_mul(&self.m, &self.dagger().m), &self.m);
        let mut m = [[ZERO; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                m[i][j] = (self.m[i][j] * 3.0 - uuu[i][j]) * 0.5;
            }
        }
        Self { m }
    }

    pub fn apply(&self, psi: &Spinor) -> Spinor {
        apply(self, psi)
    }

    /// Integer power by repeated squaring; negative powers use the adjoint.
    pub fn pow(&self, n: i64) -> Self {
        let mut base = if n < 0 { self.dagger() } else { *self };
        let mut e = n.unsigned_abs();
        let mut acc = Self::identity();
        while e > 0 {
            if e & 1 == 1 {
                acc = compose(&base, &acc);
            }
            base = compose(&base, &base);
            e >>= 1;
        }
        acc
    }
}

impl Mul for Unitary2 {
    type Output = Unitary2;

    fn mul(self, rhs: Unitary2) -> Unitary2 {
        compose(&self, &rhs)
    }
}

fn mat_mul(a: &[[C64; 2]; 2], b: &[[C64; 2]; 2]) -> [[C64; 2]; 2] {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

/// `cos(angle)·I − i·sin(angle)·(axis·σ)`.
pub fn rotation(axis: [f64; 3], angle: f64) -> Result<Unitary2> {
    let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::NonUnitAxis { norm });
    }
    Ok(rotation_unchecked(axis, angle))
}

fn rotation_unchecked(n: [f64; 3], angle: f64) -> Unitary2 {
    let (s, c) = angle.sin_cos();
    // -i s (nx σx + ny σy + nz σz)
    Unitary2 {
        m: [
            [C64::new(c, -s * n[2]), C64::new(-s * n[1], -s * n[0])],
            [C64::new(s * n[1], -s * n[0]), C64::new(c, s * n[2])],
        ],
    }
}

/// `exp(-i g·σ)`; the identity for `|g| < 1e-14`.
pub fn exp_kick(g: [f64; 3]) -> Unitary2 {
    let norm = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
    if norm < 1e-14 {
        return Unitary2::identity();
    }
    rotation_unchecked([g[0] / norm, g[1] / norm, g[2] / norm], norm)
}

/// `e^{-iθσ_x}`, `e^{-iθσ_y}`, `e^{-iθσ_z}`.
pub fn rot_x(theta: f64) -> Unitary2 {
    rotation_unchecked([1.0, 0.0, 0.0], theta)
}

pub fn rot_y(theta: f64) -> Unitary2 {
    rotation_unchecked([0.0, 1.0, 0.0], theta)
}

pub fn rot_z(theta: f64) -> Unitary2 {
    rotation_unchecked([0.0, 0.0, 1.0], theta)
}

pub fn apply(u: &Unitary2, psi: &Spinor) -> Spinor {
    Spinor {
        a: u.m[0][0] * psi.a + u.m[0][1] * psi.b,
        b: u.m[1][0] * psi.a + u.m[1][1] * psi.b,
    }
}

/// Matrix product `second · first` (apply `first`, then `second`).
pub fn compose(second: &Unitary2, first: &Unitary2) -> Unitary2 {
    Unitary2 { m: mat_mul(&second.m, &first.m) }
}

pub fn density(psi: &Spinor) -> DensityMatrix2 {
    DensityMatrix2 {
        m: [
            [C64::new(psi.a.norm_sqr(), 0.0), psi.a * psi.b.conj()],
            [psi.b * psi.a.conj(), C64::new(psi.b.norm_sqr(), 0.0)],
        ],
    }
}

/// `U ρ U†`
pub fn conjugate_channel(u: &Unitary2, rho: &DensityMatrix2) -> DensityMatrix2 {
    DensityMatrix2 { m: mat_mul(&mat_mul(&u.m, &rho.m), &u.dagger().m) }
}

/// Running left product `V_t ⋯ V_1` that re-unitarizes every
/// [`REUNITARIZE_INTERVAL`] factors.
#[derive(Debug, Clone)]
pub struct UnitaryProduct {
    value: Unitary2,
    factors: u64,
}

impl Default for UnitaryProduct {
    fn default() -> Self {
        Self::new()
    }
}

impl UnitaryProduct {
    pub fn new() -> Self {
        Self { value: Unitary2::identity(), factors: 0 }
    }

    pub fn push(&mut self, kick: &Unitary2) {
        self.value = compose(kick, &self.value);
        self.factors += 1;
        if self.factors.is_multiple_of(REUNITARIZE_INTERVAL) {
            self.value = self.value.reunitarized();
        }
    }

    pub fn value(&self) -> &Unitary2 {
        &self.value
    }

    pub fn factors(&self) -> u64 {
        self.factors
    }
}

/// 2×2 density matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix2 {
    pub m: [[C64; 2]; 2],
}

impl DensityMatrix2 {
    pub fn maximally_mixed() -> Self {
        Self::from_bloch(&BlochVector::default())
    }

    /// `(I + r·σ) / 2`; valid whenever `|r| ≤ 1`.
    pub fn from_bloch(r: &BlochVector) -> Self {
        Self {
            m: [
                [C64::new((1.0 + r.z) / 2.0, 0.0), C64::new(r.x / 2.0, -r.y / 2.0)],
                [C64::new(r.x / 2.0, r.y / 2.0), C64::new((1.0 - r.z) / 2.0, 0.0)],
            ],
        }
    }

    pub fn bloch(&self) -> BlochVector {
        BlochVector {
            x: 2.0 * self.m[1][0].re,
            y: 2.0 * self.m[1][0].im,
            z: (self.m[0][0] - self.m[1][1]).re,
        }
    }

    pub fn trace(&self) -> C64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn hermiticity_error(&self) -> f64 {
        let m = &self.m;
        (m[0][1] - m[1][0].conj())
            .norm()
            .max(m[0][0].im.abs())
            .max(m[1][1].im.abs())
    }

    /// Eigenvalues `(1 ∓ |r|)/2`, ascending.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let t = self.trace().re;
        let r = self.bloch().norm();
        [(t - r) / 2.0, (t + r) / 2.0]
    }

    /// Checks Hermiticity and unit trace within `1e-12`, eigenvalues `≥ -1e-10`.
    pub fn is_valid(&self) -> bool {
        self.hermiticity_error() <= 1e-12
            && (self.trace() - ONE).norm() <= 1e-12
            && self.eigenvalues()[0] >= -1e-10
    }

    /// Half the trace norm of the difference; for qubits this is `|r₁ − r₂| / 2`.
    pub fn trace_distance(&self, other: &DensityMatrix2) -> f64 {
        self.bloch().sub(&other.bloch()).norm() / 2.0
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut m = self.m;
        m.iter_mut().flatten().for_each(|v| *v *= s);
        Self { m }
    }

    pub fn add(&self, other: &DensityMatrix2) -> Self {
        let mut m = self.m;
        for i in 0..2 {
            for j in 0..2 {
                m[i][j] += other.m[i][j];
            }
        }
        Self { m }
    }

    pub fn max_diff(&self, other: &DensityMatrix2) -> f64 {
        let mut err: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                err = err.max((self.m[i][j] - other.m[i][j]).norm());
            }
        }
        err
    }
}

/// Pauli matrices `σ_x, σ_y, σ_z`.
pub fn pauli() -> [[[C64; 2]; 2]; 3] {
    [
        [[ZERO, ONE], [ONE, ZERO]],
        [[ZERO, -I], [I, ZERO]],
        [[ONE, ZERO], [ZERO, -ONE]],
    ]
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_angle(phi: f64) -> f64 {
    phi.rem_euclid(TAU)
}

/// Shorthand for `x·π`.
pub fn pi_times(x: f64) -> f64 {
    x * PI
}
