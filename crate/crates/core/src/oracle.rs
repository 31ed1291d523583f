//! Independent reference computations used to validate the primary
//! algorithms: a dense eigensolver, power iteration for operator norms,
//! and the discriminant as a monodromy trace.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::coeffs::PeriodicSeq;
use crate::linalg;
use crate::transfer;

/// Eigenvalues by Hessenberg reduction and shifted QR (complex Schur form).
pub fn eigenvalues_dense(m: &DMatrix<Complex64>) -> Vec<Complex64> {
    let schur = m.clone().schur();
    let (_, t) = schur.unpack();
    (0..t.nrows()).map(|i| t[(i, i)]).collect()
}

/// Arguments in `[0, 2π)` of the dense eigenvalues.
pub fn eigenangles_dense(m: &DMatrix<Complex64>) -> Vec<f64> {
    eigenvalues_dense(m)
        .into_iter()
        .map(|z| z.arg().rem_euclid(TAU))
        .collect()
}

/// Largest singular value by power iteration on `MᴴM`.
pub fn power_norm(m: &DMatrix<Complex64>, iterations: usize) -> f64 {
    let g = m.adjoint() * m;
    let mut x: Vec<Complex64> = (0..g.ncols())
        .map(|i| Complex64::new(1.0 + (0.37 * i as f64).sin(), 0.1 * (i as f64).cos()))
        .collect();
    let mut lambda = 0.0;
    for _ in 0..iterations {
        let y = linalg::matvec(&g, &x);
        let ny = linalg::vec_norm(&y);
        if ny == 0.0 {
            return 0.0;
        }
        lambda = ny / linalg::vec_norm(&x);
        x = y.into_iter().map(|v| v / ny).collect();
    }
    lambda.sqrt()
}

/// `Δ(z)` as the trace of the one-period transfer product.
pub fn discriminant_by_trace(seq: &PeriodicSeq, z: Complex64) -> Complex64 {
    transfer::monodromy(seq, z)
        .expect("z is on the unit circle")
        .trace()
}
