//! Finite windows of the extended CMV matrix, operator norms of
//! differences, and the spectrum-movement check.
//!
//! Row/column `n` corresponds to the basis vector `δ_n`. The matrix is the
//! product `𝓔 = 𝓛𝓜` of block-diagonal unitaries, where `𝓛` carries the
//! blocks `Θ(α_{2j})` on `(2j, 2j+1)` and `𝓜` the blocks `Θ(α_{2j+1})` on
//! `(2j+1, 2j+2)`, with `Θ(α) = [[ᾱ, ρ], [ρ, −α]]`. Even rows have their
//! four nonzero entries in columns `n−1..=n+2`, odd rows in `n−2..=n+1`.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coeffs::{rho_of, CoefficientWindow, PeriodicSeq};
use crate::error::{Error, Result};
use crate::floquet::{self, BandStructure};
use crate::linalg;
use crate::odometer::{lift, SamplingFn};

/// Rows excluded from each end of a window when estimating norms.
pub const NORM_PADDING: usize = 8;

/// Minimum number of interior rows used for norm estimates.
pub const NORM_MIN_ROWS: usize = 64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// The nonzero row of `𝓛` or `𝓜` with index `m`, as `[(col, value); 2]`.
/// `first_even` selects the factor whose blocks start on even indices.
#[inline]
fn factor_row<F: Fn(i64) -> Complex64>(alpha: &F, m: i64, first_even: bool) -> [(i64, Complex64); 2] {
    let block_start = m.rem_euclid(2) == 0;
    if block_start == first_even {
        // first row of the block Θ(α_m) on (m, m+1)
        let a = alpha(m);
        [(m, a.conj()), (m + 1, Complex64::new(rho_of(a), 0.0))]
    } else {
        // second row of the block Θ(α_{m−1}) on (m−1, m)
        let a = alpha(m - 1);
        [(m - 1, Complex64::new(rho_of(a), 0.0)), (m, -a)]
    }
}

/// Row `n` of `𝓔 = 𝓛𝓜`: the first column index and the four entries.
pub(crate) fn row_entries<F: Fn(i64) -> Complex64>(alpha: F, n: i64) -> (i64, [Complex64; 4]) {
    let start = if n.rem_euclid(2) == 0 { n - 1 } else { n - 2 };
    let mut vals = [ZERO; 4];
    for (m, l) in factor_row(&alpha, n, true) {
        for (col, v) in factor_row(&alpha, m, false) {
            vals[(col - start) as usize] += l * v;
        }
    }
    (start, vals)
}

/// A square truncation of the extended CMV matrix on indices
/// `offset..offset+dim`, stored by rows of four entries.
#[derive(Debug, Clone, PartialEq)]
pub struct CmvWindow {
    offset: i64,
    dim: usize,
    rows: Vec<(i64, [Complex64; 4])>,
    source: CoefficientWindow,
}

impl CmvWindow {
    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The coefficients `α(offset−2 ..= offset+dim+1)` the window was built from.
    pub fn source(&self) -> &CoefficientWindow {
        &self.source
    }

    /// Entry at global indices `(row, col)`; zero outside the band or window.
    pub fn entry(&self, row: i64, col: i64) -> Complex64 {
        let end = self.offset + self.dim as i64;
        if row < self.offset || row >= end || col < self.offset || col >= end {
            return ZERO;
        }
        let (start, vals) = &self.rows[(row - self.offset) as usize];
        let k = col - start;
        if (0..4).contains(&k) {
            vals[k as usize]
        } else {
            ZERO
        }
    }

    /// Nonzero entries within the window as `(row, col, value)`, global indices.
    pub fn nonzeros(&self) -> Vec<(i64, i64, Complex64)> {
        let end = self.offset + self.dim as i64;
        let mut out = Vec::new();
        for (i, (start, vals)) in self.rows.iter().enumerate() {
            let row = self.offset + i as i64;
            for (k, &v) in vals.iter().enumerate() {
                let col = start + k as i64;
                if col >= self.offset && col < end && v != ZERO {
                    out.push((row, col, v));
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::from_element(self.dim, self.dim, ZERO);
        for (row, col, v) in self.nonzeros() {
            m[((row - self.offset) as usize, (col - self.offset) as usize)] = v;
        }
        m
    }

    /// Matrix–vector product on the window.
    pub fn apply(&self, u: &[Complex64]) -> Result<Vec<Complex64>> {
        if u.len() != self.dim {
            return Err(Error::LengthMismatch {
                expected: self.dim,
                got: u.len(),
            });
        }
        let end = self.offset + self.dim as i64;
        Ok(self
            .rows
            .iter()
            .map(|(start, vals)| {
                vals.iter()
                    .enumerate()
                    .filter_map(|(k, v)| {
                        let col = start + k as i64;
                        (col >= self.offset && col < end)
                            .then(|| v * u[(col - self.offset) as usize])
                    })
                    .sum()
            })
            .collect())
    }
}

/// Assemble rows `offset..offset+dim` of `𝓔` from the coefficient window.
pub fn assemble_window(alpha: &CoefficientWindow, offset: i64, dim: usize) -> Result<CmvWindow> {
    if dim < 4 {
        return Err(Error::OutOfRange {
            name: "dim",
            value: dim as f64,
            range: ">= 4",
        });
    }
    if offset.rem_euclid(2) != 0 {
        return Err(Error::Misaligned(offset));
    }
    let (lo, hi) = (offset - 2, offset + dim as i64 + 1);
    alpha.require(lo, hi)?;
    let rows = (offset..offset + dim as i64)
        .map(|n| row_entries(|m| alpha.get(m), n))
        .collect();
    let source = CoefficientWindow {
        start: lo,
        values: (lo..=hi).map(|n| alpha.get(n)).collect(),
        r: alpha.r,
    };
    Ok(CmvWindow {
        offset,
        dim,
        rows,
        source,
    })
}

/// Norm of `𝓔_a − 𝓔_b` estimated from the rows `pad..pad+rows` of a
/// window of `rows + 2·pad` rows, so that no kept row is truncated.
pub fn diff_norm_window(a: &PeriodicSeq, b: &PeriodicSeq, rows: usize) -> f64 {
    let rows = rows + rows % 2;
    let pad = NORM_PADDING as i64;
    let total = rows + 2 * NORM_PADDING;
    let mut d = DMatrix::from_element(rows, total, ZERO);
    for i in 0..rows {
        let n = i as i64;
        let (sa, va) = row_entries(|m| a.eval(m), n);
        let (sb, vb) = row_entries(|m| b.eval(m), n);
        debug_assert_eq!(sa, sb);
        for k in 0..4 {
            let col = sa + k as i64 + pad;
            d[(i, col as usize)] = va[k] - vb[k];
        }
    }
    linalg::largest_singular_value(&d)
}

fn lcm(a: usize, b: usize) -> usize {
    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    a / gcd(a, b) * b
}

/// `max_Θ ‖E_a(Θ) − E_b(Θ)‖` over the Floquet fibres of a common period:
/// a coarse `Θ` scan followed by golden-section refinement of the best
/// brackets.
pub fn diff_norm_fibres(a: &PeriodicSeq, b: &PeriodicSeq) -> f64 {
    let p = lcm(a.period(), b.period());
    let (ra, rb) = (a.repeat(p / a.period()), b.repeat(p / b.period()));
    let fibre = |theta: f64| {
        let d = floquet::floquet_matrix(&ra, theta).entries - floquet::floquet_matrix(&rb, theta).entries;
        linalg::largest_singular_value(&d)
    };
    const SCAN: usize = 64;
    let h = TAU / SCAN as f64;
    let vals: Vec<f64> = (0..SCAN).map(|j| fibre(j as f64 * h)).collect();
    let mut order: Vec<usize> = (0..SCAN).collect();
    order.sort_by(|&i, &j| vals[j].total_cmp(&vals[i]));
    let mut best = vals[order[0]];
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    for &j in order.iter().take(3) {
        let (mut lo, mut hi) = ((j as f64 - 1.0) * h, (j as f64 + 1.0) * h);
        let mut x1 = hi - inv_phi * (hi - lo);
        let mut x2 = lo + inv_phi * (hi - lo);
        let (mut f1, mut f2) = (fibre(x1), fibre(x2));
        while hi - lo > 1e-10 {
            if f1 < f2 {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + inv_phi * (hi - lo);
                f2 = fibre(x2);
            } else {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - inv_phi * (hi - lo);
                f1 = fibre(x1);
            }
        }
        best = best.max(f1).max(f2);
    }
    best
}

/// `‖𝓔_a − 𝓔_b‖` for periodic sequences: the larger of the padded window
/// estimate over several common periods and the Floquet-fibre maximum.
/// Both are lower bounds that converge to the norm; the window estimate
/// alone falls short by a relative `O(1/rows²)`.
pub fn diff_norm_periodic(a: &PeriodicSeq, b: &PeriodicSeq) -> f64 {
    let p = lcm(a.period(), b.period());
    diff_norm_window(a, b, NORM_MIN_ROWS.max(8 * p)).max(diff_norm_fibres(a, b))
}

/// `‖𝓔_f − 𝓔_g‖` for two sampling functions (at `ω = 0`). Whenever
/// `sup_distance(f, g) < ε²/72` this is at most `ε`.
pub fn diff_norm_bound(f: &SamplingFn, g: &SamplingFn) -> f64 {
    let k = f.level().max(g.level());
    let (fl, gl) = (
        lift(f, k).expect("level is at least f's"),
        lift(g, k).expect("level is at least g's"),
    );
    diff_norm_periodic(&fl.to_periodic(), &gl.to_periodic())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MovementReport {
    pub bound: f64,
    pub max_displacement: f64,
    pub grid_size: usize,
    pub passed: bool,
}

/// Tolerance added to the norm estimate when judging spectrum movement.
pub const MOVEMENT_TOLERANCE: f64 = 1e-8;

/// Sample the spectrum of `𝓔_f` and measure how far each sample is from
/// the spectrum of `𝓔_g`; every displacement must stay within
/// `‖𝓔_f − 𝓔_g‖`.
pub fn spectrum_movement_check(
    f: &PeriodicSeq,
    g: &PeriodicSeq,
    grid_size: usize,
) -> Result<MovementReport> {
    let bf = floquet::band_structure(f)?;
    let bg = floquet::band_structure(g)?;
    let bound = diff_norm_periodic(f, g);
    let max_displacement = spectrum_displacement(&bf, &bg, grid_size);
    Ok(MovementReport {
        bound,
        max_displacement,
        grid_size,
        passed: max_displacement <= bound + MOVEMENT_TOLERANCE,
    })
}

/// `max_{z ∈ Σ(a)} dist(z, Σ(b))` over a grid on the bands of `a`,
/// including every band edge.
pub fn spectrum_displacement(a: &BandStructure, b: &BandStructure, grid_size: usize) -> f64 {
    let total: f64 = a.bands.iter().map(|bd| bd.width()).sum();
    let mut worst = 0.0f64;
    for band in &a.bands {
        let n = ((band.width() / total.max(1e-300)) * grid_size as f64).ceil() as usize + 1;
        for j in 0..=n {
            let theta = band.lo + band.width() * j as f64 / n as f64;
            worst = worst.max(b.chord_distance(theta));
        }
    }
    worst
}

/// One resolvent sample on the Floquet matrix `E_q(Θ)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ResolventSample {
    pub resolvent_norm: f64,
    pub distance: f64,
}

impl ResolventSample {
    /// `‖(E − z)⁻¹‖ · dist(z, σ(E))`, equal to one for unitary `E`.
    pub fn product(&self) -> f64 {
        self.resolvent_norm * self.distance
    }
}

/// Resolvent norm from the smallest singular value of `E_q(Θ) − z`, and
/// the distance from `z` to the eigenvalues found by band bisection.
pub fn resolvent_sample(bands: &BandStructure, seq: &PeriodicSeq, theta: f64, z: Complex64) -> ResolventSample {
    let e = floquet::floquet_matrix(seq, theta);
    let shifted = &e.entries - DMatrix::from_diagonal_element(e.q, e.q, z);
    let smin = linalg::smallest_singular_value(&shifted);
    let distance = bands
        .eigenangles(theta)
        .iter()
        .map(|&t| (Complex64::from_polar(1.0, t) - z).norm())
        .fold(f64::INFINITY, f64::min);
    ResolventSample {
        resolvent_norm: 1.0 / smin,
        distance,
    }
}

/// Points on the unit circle at chord distance at least `min_dist` from
/// all eigenvalues of `E_q(Θ)`, used as off-spectrum resolvent probes.
pub fn off_spectrum_points(bands: &BandStructure, theta: f64, count: usize, min_dist: f64, mut next: impl FnMut() -> f64) -> Vec<Complex64> {
    let eig = bands.eigenangles(theta);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let t = next() * TAU;
        let z = Complex64::from_polar(1.0, t);
        let d = eig
            .iter()
            .map(|&e| (Complex64::from_polar(1.0, e) - z).norm())
            .fold(f64::INFINITY, f64::min);
        if d >= min_dist {
            out.push(z);
        }
    }
    out
}
