//! Eigenvalues of small Hermitian matrices by cyclic complex Jacobi rotations.

use num_complex::Complex64 as C64;

use super::matrix::CMatrix;
use crate::error::{Error, Result};

/// Largest dimension accepted by [`hermitian_eigenvalues`].
pub const MAX_DIM: usize = 16;

const HERMITIAN_TOL: f64 = 1e-10;
const MAX_SWEEPS: usize = 64;

/// All eigenvalues of a Hermitian matrix (dimension ≤ 16), ascending.
///
/// The sweep order is fixed, so results are bit-reproducible.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Result<Vec<f64>> {
    let n = m.dim();
    if n > MAX_DIM {
        return Err(Error::InvalidOrder(n));
    }
    let deviation = m.hermiticity_error();
    if deviation > HERMITIAN_TOL {
        return Err(Error::NonHermitian { deviation });
    }

    // Hermitian part of the input.
    let mut a = m.add(&m.adjoint()).scale(0.5);
    for i in 0..n {
        a[(i, i)] = C64::new(a[(i, i)].re, 0.0);
    }
    let scale = a.frobenius_norm();
    if scale == 0.0 {
        return Ok(vec![0.0; n]);
    }

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum();
        if off.sqrt() <= 1e-17 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, p, q);
            }
        }
    }

    let mut eig: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    eig.sort_by(|x, y| x.total_cmp(y));
    Ok(eig)
}

// Zeroes a[p][q] with W = D·R, where D = diag(1, e^{-iφ}) on (p, q) makes the pivot
// real and R is the classic real Jacobi rotation. Applies A ← W† A W.
fn rotate(a: &mut CMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    if mag <= f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
        a[(p, q)] = C64::new(0.0, 0.0);
        a[(q, p)] = C64::new(0.0, 0.0);
        return;
    }
    let theta = (aqq - app) / (2.0 * mag);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let phase = apq / mag; // e^{iφ}
    let e = phase.conj(); // e^{-iφ}

    let wpp = C64::new(c, 0.0);
    let wpq = C64::new(s, 0.0);
    let wqp = -e * s;
    let wqq = e * c;

    let n = a.dim();
    // columns: A ← A W
    for r in 0..n {
        let arp = a[(r, p)];
        let arq = a[(r, q)];
        a[(r, p)] = arp * wpp + arq * wqp;
        a[(r, q)] = arp * wpq + arq * wqq;
    }
    // rows: A ← W† A
    for r in 0..n {
        let apr = a[(p, r)];
        let aqr = a[(q, r)];
        a[(p, r)] = wpp.conj() * apr + wqp.conj() * aqr;
        a[(q, r)] = wpq.conj() * apr + wqq.conj() * aqr;
    }
    a[(p, q)] = C64::new(0.0, 0.0);
    a[(q, p)] = C64::new(0.0, 0.0);
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
}
