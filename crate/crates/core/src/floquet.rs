//! Floquet theory for periodic coefficients.
//!
//! Restricting `𝓔` to `X_Θ = {u : u_{m+q} = e^{iΘ} u_m}` gives the `q×q`
//! unitary `E_q(Θ)`, and
//!
//! ```text
//! det(z − E_q(Θ)) = (∏ρ_j) · z^{q/2} · [Δ(z) − 2 cos Θ]
//! ```
//!
//! defines the discriminant `Δ`, a Laurent polynomial with terms
//! `z^{−q/2} … z^{q/2}` that is real on the circle. The spectrum is
//! `{|Δ| ≤ 2}`: `q` closed bands on each of which `Δ` is strictly monotone,
//! separated by gaps that may be closed.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cmv::row_entries;
use crate::coeffs::PeriodicSeq;
use crate::error::{Error, Result};
use crate::linalg::{self, Lu};
use crate::specmeasure;

/// Chord width below which a gap counts as closed.
pub const CLOSED_GAP_CHORD: f64 = 1e-9;

/// Largest imaginary part tolerated (relative to the coefficient scale)
/// when reconstructing `Δ` on the circle.
pub const REALNESS_TOL: f64 = 1e-10;

/// Initial number of derivative samples per unit of `q`.
const GRID_PER_BAND: usize = 64;

/// Cap on the critical-point search grid.
const MAX_GRID: usize = 1 << 22;

/// Gaps narrower than this (in angle) after bisection are refined from
/// eigenvectors of `E_q(0)` or `E_q(π)`.
const POLISH_WIDTH: f64 = 1e-3;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `E_q(Θ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FloquetMatrix {
    pub q: usize,
    pub theta: f64,
    pub entries: DMatrix<Complex64>,
}

/// Fold rows `0..q` of `𝓔` onto `X_Θ`: column `c = m + l·q` contributes
/// to column `m` with weight `e^{ilΘ}`.
pub fn floquet_matrix(seq: &PeriodicSeq, theta: f64) -> FloquetMatrix {
    let q = seq.period();
    let qi = q as i64;
    let mut entries = DMatrix::from_element(q, q, ZERO);
    for row in 0..qi {
        let (start, vals) = row_entries(|n| seq.eval(n), row);
        for (k, v) in vals.iter().enumerate() {
            let col = start + k as i64;
            let l = col.div_euclid(qi);
            let phase = match l {
                0 => Complex64::new(1.0, 0.0),
                _ => Complex64::from_polar(1.0, l as f64 * theta),
            };
            entries[(row as usize, col.rem_euclid(qi) as usize)] += v * phase;
        }
    }
    FloquetMatrix { q, theta, entries }
}

/// `Δ(z) = Σ_{m=−q/2}^{q/2} d_m z^m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discriminant {
    pub q: usize,
    /// `laurent_coeffs[k]` multiplies `z^{k − q/2}`.
    #[serde(with = "crate::coeffs::complex_pairs")]
    pub laurent_coeffs: Vec<Complex64>,
    pub rho_product: f64,
    /// Largest `|Im Δ|` seen on the circle before symmetrization.
    pub max_imag: f64,
}

impl Discriminant {
    fn half(&self) -> i64 {
        (self.q / 2) as i64
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let h = self.half();
        let mut acc = ZERO;
        for c in self.laurent_coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc * z.powi(-(h as i32))
    }

    /// `Δ(e^{iθ})`, real by construction.
    pub fn at(&self, theta: f64) -> f64 {
        let h = self.half();
        let mut s = self.laurent_coeffs[h as usize].re;
        for m in 1..=h {
            let d = self.laurent_coeffs[(h + m) as usize];
            s += 2.0 * (d * Complex64::from_polar(1.0, m as f64 * theta)).re;
        }
        s
    }

    /// `dΔ(e^{iθ})/dθ`.
    pub fn derivative(&self, theta: f64) -> f64 {
        let h = self.half();
        let mut s = 0.0;
        for m in 1..=h {
            let d = self.laurent_coeffs[(h + m) as usize];
            s -= 2.0 * m as f64 * (d * Complex64::from_polar(1.0, m as f64 * theta)).im;
        }
        s
    }

    /// `d²Δ(e^{iθ})/dθ²`.
    pub fn second_derivative(&self, theta: f64) -> f64 {
        let h = self.half();
        let mut s = 0.0;
        for m in 1..=h {
            let d = self.laurent_coeffs[(h + m) as usize];
            s -= 2.0 * (m * m) as f64 * (d * Complex64::from_polar(1.0, m as f64 * theta)).re;
        }
        s
    }

    /// Size of the largest coefficient, used to scale tolerances.
    pub fn scale(&self) -> f64 {
        self.laurent_coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// Reconstruct `Δ` from `det(z − E_q(π/2))` at the `q+1` roots of unity.
pub fn discriminant(seq: &PeriodicSeq) -> Result<Discriminant> {
    let q = seq.period();
    let n = q + 1;
    let e = floquet_matrix(seq, FRAC_PI_2).entries;
    let nodes: Vec<Complex64> = (0..n)
        .map(|j| Complex64::from_polar(1.0, TAU * j as f64 / n as f64))
        .collect();
    let values: Vec<Complex64> = nodes
        .iter()
        .map(|&z| (DMatrix::from_diagonal_element(q, q, z) - &e).determinant())
        .collect();
    let rho_product = seq.rho_product();
    let raw: Vec<Complex64> = (0..n)
        .map(|k| {
            let s: Complex64 = values
                .iter()
                .zip(&nodes)
                .map(|(p, z)| p * z.powi(-(k as i32)))
                .sum();
            s / (n as f64 * rho_product)
        })
        .collect();
    let mut disc = Discriminant {
        q,
        laurent_coeffs: raw.clone(),
        rho_product,
        max_imag: 0.0,
    };
    if !raw.iter().all(|c| c.is_finite()) {
        return Err(Error::NotReal(f64::INFINITY));
    }
    let max_imag = (0..1024)
        .map(|j| disc.eval(Complex64::from_polar(1.0, TAU * j as f64 / 1024.0)).im.abs())
        .fold(0.0, f64::max);
    if max_imag > REALNESS_TOL * disc.scale().max(1.0) {
        return Err(Error::NotReal(max_imag));
    }
    for k in 0..n {
        disc.laurent_coeffs[k] = 0.5 * (raw[k] + raw[q - k].conj());
    }
    disc.max_imag = max_imag;
    Ok(disc)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub index: usize,
    /// Start angle in `[0, 2π)`.
    pub lo: f64,
    /// End angle, `lo ≤ hi < lo + 2π`.
    pub hi: f64,
    /// `Δ` increases from `lo` to `hi`.
    pub increasing: bool,
    /// Equilibrium measure of the band.
    pub mass: f64,
}

impl Band {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, theta: f64) -> bool {
        let t = (theta - self.lo).rem_euclid(TAU);
        t <= self.width()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    /// Upper edge of the preceding band.
    pub lo: f64,
    /// Lower edge of the following band (unwrapped so that `hi ≥ lo`).
    pub hi: f64,
    pub chord: f64,
    pub open: bool,
    /// `Δ ≥ 2` inside the gap (`+1`) or `Δ ≤ −2` (`−1`).
    pub sign: i8,
}

/// Bands and gaps of a periodic sequence. `gaps[i]` precedes `bands[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandStructure {
    pub q: usize,
    pub bands: Vec<Band>,
    pub gaps: Vec<Gap>,
    pub discriminant: Discriminant,
    pub grid: usize,
}

pub fn chord(a: f64, b: f64) -> f64 {
    2.0 * ((b - a) / 2.0).sin().abs()
}

fn bisect(mut a: f64, mut b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

fn critical_points(disc: &Discriminant, grid: usize) -> Vec<f64> {
    let h = TAU / grid as f64;
    let shift = 0.3719 * h;
    let mut out = Vec::new();
    let mut prev_t = shift;
    let mut prev = disc.derivative(prev_t);
    for j in 1..=grid {
        let t = shift + j as f64 * h;
        let d = disc.derivative(t);
        if (d > 0.0) != (prev > 0.0) {
            let c = bisect(prev_t, t, |x| disc.derivative(x));
            out.push(c.rem_euclid(TAU));
        }
        prev_t = t;
        prev = d;
    }
    out.sort_by(f64::total_cmp);
    out
}

/// Refine the two eigenvalues of `E_q(Θ)` nearest `e^{ic}` by shifted
/// subspace iteration; returns their angles relative to `c`, sorted.
fn polish_pair(seq: &PeriodicSeq, c: f64, sign: i8) -> Option<(f64, f64)> {
    let theta = if sign > 0 { 0.0 } else { PI };
    let e = floquet_matrix(seq, theta).entries;
    let q = e.nrows();
    let shift = Complex64::from_polar(1.0, c);
    let lu = Lu::new(&(&e - DMatrix::from_diagonal_element(q, q, shift)));
    let mut x: Vec<Vec<Complex64>> = (0..2)
        .map(|k| {
            (0..q)
                .map(|j| Complex64::from_polar(1.0, 0.7 * (j * (k + 1)) as f64 + 0.3 * k as f64))
                .collect()
        })
        .collect();
    linalg::orthonormalize(&mut x);
    for _ in 0..6 {
        for v in x.iter_mut() {
            *v = lu.solve(v);
        }
        linalg::orthonormalize(&mut x);
    }
    let ex: Vec<Vec<Complex64>> = x.iter().map(|v| linalg::matvec(&e, v)).collect();
    let dot = |a: &[Complex64], b: &[Complex64]| -> Complex64 { a.iter().zip(b).map(|(p, r)| p.conj() * r).sum() };
    let h = linalg::Mat2::new(dot(&x[0], &ex[0]), dot(&x[0], &ex[1]), dot(&x[1], &ex[0]), dot(&x[1], &ex[1]));
    let angles: Vec<f64> = linalg::eigenvalues_2x2(&h)
        .iter()
        .map(|l| (l * shift.conj()).arg())
        .collect();
    let (a, b) = (angles[0].min(angles[1]), angles[0].max(angles[1]));
    (a.abs() < 10.0 * POLISH_WIDTH && b.abs() < 10.0 * POLISH_WIDTH).then_some((a, b))
}

/// Bands, gaps and per-band equilibrium masses.
pub fn band_structure(seq: &PeriodicSeq) -> Result<BandStructure> {
    let disc = discriminant(seq)?;
    let q = seq.period();
    let mut grid = GRID_PER_BAND * q;
    let crit = loop {
        let c = critical_points(&disc, grid);
        if c.len() == q {
            break c;
        }
        if grid >= MAX_GRID {
            return Err(Error::BandCount {
                expected: q,
                found: c.len(),
                grid,
            });
        }
        grid *= 2;
    };
    let vals: Vec<f64> = crit.iter().map(|&c| disc.at(c)).collect();
    for i in 0..q {
        let (a, b) = (vals[i], vals[(i + 1) % q]);
        if (a > 0.0) == (b > 0.0) || a.abs() < 2.0 - 1e-6 {
            return Err(Error::BandCount {
                expected: q,
                found: 0,
                grid,
            });
        }
    }

    // raw edges: lo_i near crit[i], hi_i near crit[i+1]
    let mut lo = vec![0.0; q];
    let mut hi = vec![0.0; q];
    for i in 0..q {
        let a = crit[i];
        let b = if i + 1 < q { crit[i + 1] } else { crit[0] + TAU };
        let (va, vb) = (vals[i], vals[(i + 1) % q]);
        lo[i] = if va.abs() <= 2.0 {
            a
        } else {
            let t = 2.0 * va.signum();
            bisect(a, b, |x| disc.at(x) - t)
        };
        hi[i] = if vb.abs() <= 2.0 {
            b
        } else {
            let t = 2.0 * vb.signum();
            bisect(a, b, |x| disc.at(x) - t)
        };
    }

    // gap i sits between hi[i-1] and lo[i], around crit[i]
    let mut gaps = Vec::with_capacity(q);
    for i in 0..q {
        let prev = if i == 0 { q - 1 } else { i - 1 };
        let sign: i8 = if vals[i] > 0.0 { 1 } else { -1 };
        let mut g_lo = hi[prev];
        let mut g_hi = lo[i];
        if i == 0 {
            g_lo -= TAU;
        }
        if g_hi - g_lo < POLISH_WIDTH {
            if let Some((da, db)) = polish_pair(seq, crit[i], sign) {
                g_lo = crit[i] + da;
                g_hi = crit[i] + db;
                hi[prev] = if i == 0 { g_lo + TAU } else { g_lo };
                lo[i] = g_hi;
            }
        }
        let ch = chord(g_lo, g_hi);
        gaps.push(Gap {
            lo: g_lo.rem_euclid(TAU),
            hi: g_lo.rem_euclid(TAU) + (g_hi - g_lo),
            chord: ch,
            open: ch > CLOSED_GAP_CHORD,
            sign,
        });
    }

    let bands = (0..q)
        .map(|i| {
            let l = lo[i].rem_euclid(TAU);
            let h = l + (hi[i] - lo[i]).max(0.0);
            Band {
                index: i,
                lo: l,
                hi: h,
                increasing: vals[(i + 1) % q] > vals[i],
                mass: specmeasure::band_mass(&disc, l, h),
            }
        })
        .collect();
    Ok(BandStructure {
        q,
        bands,
        gaps,
        discriminant: disc,
        grid,
    })
}

impl BandStructure {
    pub fn contains(&self, theta: f64) -> bool {
        self.bands.iter().any(|b| b.contains(theta))
    }

    /// Chord distance from `e^{iθ}` to the spectrum.
    pub fn chord_distance(&self, theta: f64) -> f64 {
        if self.contains(theta) {
            return 0.0;
        }
        self.bands
            .iter()
            .map(|b| chord(theta, b.lo).min(chord(theta, b.hi)))
            .fold(f64::INFINITY, f64::min)
    }

    /// Lebesgue measure of the spectrum.
    pub fn total_measure(&self) -> f64 {
        self.bands.iter().map(Band::width).sum()
    }

    pub fn open_gap_count(&self) -> usize {
        self.gaps.iter().filter(|g| g.open).count()
    }

    pub fn closed_gaps(&self) -> Vec<usize> {
        (0..self.q).filter(|&i| !self.gaps[i].open).collect()
    }

    pub fn all_gaps_open(&self) -> bool {
        self.gaps.iter().all(|g| g.open)
    }

    /// The `q` eigenangles of `E_q(Θ)`, solving `Δ = 2 cos Θ` once per band.
    pub fn eigenangles(&self, theta: f64) -> Vec<f64> {
        let target = 2.0 * theta.cos();
        let d = &self.discriminant;
        let mut out: Vec<f64> = self
            .bands
            .iter()
            .map(|b| {
                let f = |x: f64| d.at(x) - target;
                let (fl, fh) = (f(b.lo), f(b.hi));
                let t = if fl == 0.0 || b.width() == 0.0 {
                    b.lo
                } else if fh == 0.0 {
                    b.hi
                } else if (fl > 0.0) == (fh > 0.0) {
                    // target at the edge up to round-off
                    if fl.abs() < fh.abs() {
                        b.lo
                    } else {
                        b.hi
                    }
                } else {
                    bisect(b.lo, b.hi, f)
                };
                t.rem_euclid(TAU)
            })
            .collect();
        out.sort_by(f64::total_cmp);
        out
    }

    /// Smallest chord width over the open gaps.
    pub fn min_gap(&self) -> Result<f64> {
        self.gaps
            .iter()
            .filter(|g| g.open)
            .map(|g| g.chord)
            .min_by(f64::total_cmp)
            .ok_or(Error::NoOpenGaps)
    }
}

pub fn eigenangles(bs: &BandStructure, theta: f64) -> Vec<f64> {
    bs.eigenangles(theta)
}

pub fn min_gap(bs: &BandStructure) -> Result<f64> {
    bs.min_gap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::make_periodic;
    use crate::oracle;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_seq(rng: &mut ChaCha8Rng, q: usize, r: f64) -> PeriodicSeq {
        let v: Vec<Complex64> = (0..q)
            .map(|_| Complex64::from_polar(r * rng.gen::<f64>().sqrt(), rng.gen::<f64>() * TAU))
            .collect();
        make_periodic(&v, r).unwrap()
    }

    fn is_unitary(m: &DMatrix<Complex64>, tol: f64) -> bool {
        let g = m.adjoint() * m;
        (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| (g[(i, j)] - if i == j { c(1.0, 0.0) } else { ZERO }).norm() < tol))
    }

    #[test]
    fn free_floquet_eigenvalues() {
        let s = PeriodicSeq::constant(ZERO, 0.1).unwrap();
        for theta in [0.3, 1.0, 2.5] {
            let e = floquet_matrix(&s, theta).entries;
            let mut got = oracle::eigenangles_dense(&e);
            got.sort_by(f64::total_cmp);
            let mut want = vec![theta, TAU - theta];
            want.sort_by(f64::total_cmp);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn unitary_and_theta_periodic() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = random_seq(&mut rng, 4, 0.9);
        for _ in 0..100 {
            let t = rng.gen::<f64>() * TAU;
            let e = floquet_matrix(&s, t).entries;
            assert!(is_unitary(&e, 1e-12));
            let e2 = floquet_matrix(&s, t + TAU).entries;
            assert!((e - e2).iter().all(|d| d.norm() < 1e-14));
        }
    }

    #[test]
    fn free_discriminant() {
        for q in [2usize, 4, 6, 8, 16] {
            let s = PeriodicSeq::constant(ZERO, 0.1).unwrap().repeat(q / 2);
            let d = discriminant(&s).unwrap();
            for (k, coef) in d.laurent_coeffs.iter().enumerate() {
                let want = if k == 0 || k == q { 1.0 } else { 0.0 };
                assert!((coef - c(want, 0.0)).norm() < 1e-12, "q={q} k={k}");
            }
        }
        let d = discriminant(&PeriodicSeq::constant(ZERO, 0.1).unwrap()).unwrap();
        assert!((d.at(0.0) - 2.0).abs() < 1e-14);
        assert!(d.at(FRAC_PI_2).abs() < 1e-14);
        assert!((d.at(PI) + 2.0).abs() < 1e-14);
    }

    #[test]
    fn determinant_identity_and_trace_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for q in [2usize, 4, 6, 8] {
            let s = random_seq(&mut rng, q, 0.8);
            let d = discriminant(&s).unwrap();
            for _ in 0..50 {
                let z = Complex64::from_polar(1.0, rng.gen::<f64>() * TAU);
                let t = rng.gen::<f64>() * TAU;
                let lhs = (DMatrix::from_diagonal_element(q, q, z) - floquet_matrix(&s, t).entries).determinant();
                let rhs = s.rho_product() * z.powi((q / 2) as i32) * (d.eval(z) - 2.0 * t.cos());
                assert!((lhs - rhs).norm() <= 1e-9 * lhs.norm().max(1e-3));
                let tr = crate::transfer::monodromy(&s, z).unwrap().trace();
                assert!((tr - d.eval(z)).norm() < 1e-9 * d.scale());
            }
        }
    }

    #[test]
    fn free_band_structure_covers_circle() {
        let s = PeriodicSeq::constant(ZERO, 0.1).unwrap();
        let bs = band_structure(&s).unwrap();
        assert_eq!(bs.bands.len(), 2);
        assert_eq!(bs.open_gap_count(), 0);
        assert!((bs.total_measure() - TAU).abs() < 1e-9);
        assert!(matches!(bs.min_gap(), Err(Error::NoOpenGaps)));
    }

    #[test]
    fn constant_half_gap() {
        let s = PeriodicSeq::constant(c(0.5, 0.0), 0.6).unwrap();
        let bs = band_structure(&s).unwrap();
        let open: Vec<&Gap> = bs.gaps.iter().filter(|g| g.open).collect();
        assert_eq!(open.len(), 1);
        let g = open[0];
        let half = 2.0 * 0.5f64.asin();
        assert!((g.lo - (TAU - half)).abs() < 1e-9, "{g:?}");
        assert!((g.hi - (TAU + half)).abs() < 1e-9);
        assert!((bs.min_gap().unwrap() - 3f64.sqrt()).abs() < 1e-9);
        // brute-force union of eigenangles over a Θ grid
        let mut inner = f64::INFINITY;
        for j in 0..2000 {
            let t = PI * j as f64 / 1999.0;
            for a in oracle::eigenangles_dense(&floquet_matrix(&s, t).entries) {
                let a = if a > PI { a - TAU } else { a };
                inner = inner.min(a.abs());
            }
        }
        assert!((inner - half).abs() < 1e-6);
    }

    #[test]
    fn eigenangles_against_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for q in [2usize, 4, 6, 8] {
            let s = random_seq(&mut rng, q, 0.7);
            let bs = band_structure(&s).unwrap();
            for _ in 0..10 {
                let t = 0.05 + rng.gen::<f64>() * (PI - 0.1);
                let got = bs.eigenangles(t);
                let mut want = oracle::eigenangles_dense(&floquet_matrix(&s, t).entries);
                want.sort_by(f64::total_cmp);
                for (g, w) in got.iter().zip(&want) {
                    let d = (g - w).rem_euclid(TAU);
                    assert!(d.min(TAU - d) < 1e-9, "q={q}: {got:?} vs {want:?}");
                }
            }
        }
    }

    #[test]
    fn free_eigenangles_at_quarter_turn() {
        let s = PeriodicSeq::constant(ZERO, 0.1).unwrap();
        let bs = band_structure(&s).unwrap();
        let a = bs.eigenangles(FRAC_PI_2);
        assert!((a[0] - FRAC_PI_2).abs() < 1e-12 && (a[1] - 3.0 * FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn band_laws_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for q in [2usize, 4, 6, 8, 16] {
            let s = random_seq(&mut rng, q, 0.8);
            let bs = band_structure(&s).unwrap();
            assert_eq!(bs.bands.len(), q);
            for b in &bs.bands {
                assert!(b.width() <= TAU / q as f64 + 1e-9);
                assert!((bs.discriminant.at(b.lo).abs() - 2.0).abs() < 1e-9);
                assert!((bs.discriminant.at(b.hi).abs() - 2.0).abs() < 1e-9);
                assert!((b.mass - 1.0 / q as f64).abs() < 1e-6, "q={q} mass {}", b.mass);
                let mut last = bs.discriminant.at(b.lo);
                for j in 1..=64 {
                    let v = bs.discriminant.at(b.lo + b.width() * j as f64 / 65.0);
                    assert_eq!(v > last, b.increasing);
                    last = v;
                }
            }
        }
    }

    #[test]
    fn closed_gaps_detected_after_repeat() {
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        let s = random_seq(&mut rng, 2, 0.6);
        let bs = band_structure(&s.repeat(2)).unwrap();
        assert_eq!(bs.bands.len(), 4);
        assert_eq!(bs.open_gap_count(), 2);
        for g in bs.gaps.iter().filter(|g| !g.open) {
            assert!(g.chord < 1e-12, "{g:?}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn min_gap_rotation_invariant(shift in 0.0f64..TAU, a in 0.2f64..0.8) {
            // rotating all coefficients α_n ↦ e^{-iφ}... rotates the spectrum;
            // here we rotate band angles directly
            let s = PeriodicSeq::constant(c(a, 0.0), 0.9).unwrap();
            let bs = band_structure(&s).unwrap();
            let g = bs.min_gap().unwrap();
            let rotated: Vec<f64> = bs.gaps.iter().filter(|g| g.open).map(|g| chord(g.lo + shift, g.hi + shift)).collect();
            let m = rotated.into_iter().fold(f64::INFINITY, f64::min);
            prop_assert!((m - g).abs() < 1e-12);
        }
    }
}
