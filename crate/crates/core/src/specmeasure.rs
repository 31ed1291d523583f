//! Floquet solutions, spectral densities, and `L^t` band integrals.
//!
//! For `z = e^{iθ}` inside a band, `ψ = arccos(Δ(z)/2) ∈ (0, π)` and the
//! two Floquet solutions `φ±` span the bounded solutions of `𝓔φ = zφ`,
//! with `φ±_{n+lq} = e^{±ilψ} φ±_n` and `Σ_{j<q} |φ±_j|² = 1`. The
//! equilibrium density is `V = |dψ/dθ|/(qπ) = |Δ′(θ)| / (2qπ sin ψ)`,
//! and the spectral measure of a finitely supported `u` has density
//!
//! ```text
//! g(θ) = c_q · (|Uu⁺|² + |Uu⁻|²) · V(θ),   Uu± = (q/2) Σ_n conj(φ±_n) u_n
//! ```
//!
//! with the normalization constant `c_q = 2/q` that makes `∫g = ‖u‖²`.

use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coeffs::PeriodicSeq;
use crate::error::{Error, Result};
use crate::floquet::{self, BandStructure, Discriminant};
use crate::linalg;
use crate::quadrature::{self, Estimate};

/// Distance of `|Δ|` from 2 below which a point counts as a band edge.
pub const EDGE_MARGIN: f64 = 1e-9;

/// Residual accepted for Floquet null vectors.
pub const RESIDUAL_TOL: f64 = 1e-9;

/// Offset below which band integrands are evaluated from their edge
/// asymptotics rather than at the (unrepresentable) node itself.
pub const EDGE_LAYER: f64 = 1e-7;

/// Panels per half band used for equilibrium masses.
const MASS_PANELS: usize = 8;

/// Panels per half interval used by default for density integrals.
pub const DEFAULT_PANELS: usize = 8;


/// `ψ(z) = arccos(Δ(z)/2)`.
pub fn psi_of(z: Complex64, disc: &Discriminant) -> Result<f64> {
    crate::transfer::check_unimodular(z)?;
    let d = disc.at(z.arg());
    if d.abs() > 2.0 + EDGE_MARGIN {
        return Err(Error::OffSpectrum { delta_abs: d.abs() });
    }
    Ok((d / 2.0).clamp(-1.0, 1.0).acos())
}

/// `V(θ) = |Δ′(θ)| / (2qπ sin ψ)`.
///
/// Where `4 − Δ²` drops to round-off level the quotient is evaluated in
/// its limiting form: at a closed gap `Δ′` and `sin ψ` vanish together and
/// `V → √(2|Δ″|)/(2qπ)`; at an open edge the denominator is floored, which
/// only affects nodes within round-off of the edge.
pub fn equilibrium_value(disc: &Discriminant, theta: f64) -> f64 {
    let delta = disc.at(theta);
    let prod = (2.0 - delta) * (2.0 + delta);
    let denom = 2.0 * disc.q as f64 * PI;
    let d1 = disc.derivative(theta).abs();
    let scale = disc.scale().max(1.0);
    let floor = 1e-14 * scale * scale;
    if prod < 1e-8 * scale * scale {
        let d2 = disc.second_derivative(theta).abs();
        if d1 * d1 < 1e-6 * scale * d2.max(1.0) {
            return (2.0 * d2).sqrt() / denom;
        }
        if prod < floor {
            return 2.0 * d1 / (denom * floor.sqrt());
        }
    }
    d1 / (denom * prod.sqrt() / 2.0)
}

/// `∫_lo^hi V dθ` for a band.
pub fn band_mass(disc: &Discriminant, lo: f64, hi: f64) -> f64 {
    quadrature::integrate(|t| equilibrium_value(disc, t), lo, hi, 2, MASS_PANELS)
}

/// The equilibrium density on the bands of a periodic sequence.
#[derive(Debug, Clone)]
pub struct EquilibriumDensity {
    pub bands: BandStructure,
}

impl EquilibriumDensity {
    /// `V(θ)` on the bands, zero off them.
    pub fn eval(&self, theta: f64) -> f64 {
        if self.bands.contains(theta) {
            equilibrium_value(&self.bands.discriminant, theta)
        } else {
            0.0
        }
    }

    pub fn band_masses(&self) -> Vec<f64> {
        self.bands.bands.iter().map(|b| b.mass).collect()
    }
}

pub fn equilibrium_density(seq: &PeriodicSeq) -> Result<EquilibriumDensity> {
    Ok(EquilibriumDensity {
        bands: floquet::band_structure(seq)?,
    })
}

/// A finitely supported vector `u_start, …`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteVector {
    pub start: i64,
    #[serde(with = "crate::coeffs::complex_pairs")]
    pub values: Vec<Complex64>,
}

impl FiniteVector {
    pub fn new(start: i64, values: Vec<Complex64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("source vector"));
        }
        Ok(FiniteVector { start, values })
    }

    /// `δ_n`.
    pub fn delta(n: i64) -> Self {
        FiniteVector {
            start: n,
            values: vec![Complex64::new(1.0, 0.0)],
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        FiniteVector {
            start: self.start,
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.values.iter().enumerate().map(move |(k, &v)| (self.start + k as i64, v))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloquetSolution {
    pub z: Complex64,
    pub psi: f64,
    #[serde(with = "crate::coeffs::complex_pairs")]
    pub phi_plus: Vec<Complex64>,
    #[serde(with = "crate::coeffs::complex_pairs")]
    pub phi_minus: Vec<Complex64>,
    pub residual: f64,
}

impl FloquetSolution {
    /// `φ±_n` for any integer `n`, by the quasi-periodic extension.
    pub fn extend(&self, plus: bool, n: i64) -> Complex64 {
        let phi = if plus { &self.phi_plus } else { &self.phi_minus };
        let q = phi.len() as i64;
        let l = n.div_euclid(q);
        let sign = if plus { 1.0 } else { -1.0 };
        phi[n.rem_euclid(q) as usize] * Complex64::from_polar(1.0, sign * l as f64 * self.psi)
    }
}

fn null_pair(seq: &PeriodicSeq, z: Complex64, psi: f64) -> (Vec<Complex64>, Vec<Complex64>, f64) {
    let q = seq.period();
    let mut residual = 0.0f64;
    let mut solve = |theta: f64| {
        let m = floquet::floquet_matrix(seq, theta).entries - DMatrix::from_diagonal_element(q, q, z);
        let (v, _) = linalg::null_vector(&m);
        residual = residual.max(linalg::vec_norm(&linalg::matvec(&m, &v)));
        v
    };
    let p = solve(psi);
    let m = solve(-psi);
    (p, m, residual)
}

/// The Floquet solutions at a band-interior point `z`.
pub fn floquet_solution(seq: &PeriodicSeq, z: Complex64) -> Result<FloquetSolution> {
    let disc = floquet::discriminant(seq)?;
    floquet_solution_with(seq, &disc, z)
}

pub fn floquet_solution_with(seq: &PeriodicSeq, disc: &Discriminant, z: Complex64) -> Result<FloquetSolution> {
    let psi = psi_of(z, disc)?;
    let d = disc.at(z.arg()).abs();
    if d >= 2.0 - EDGE_MARGIN {
        return Err(Error::NearBandEdge {
            delta_abs: d,
            margin: EDGE_MARGIN,
        });
    }
    let (phi_plus, phi_minus, residual) = null_pair(seq, z, psi);
    if residual > RESIDUAL_TOL {
        return Err(Error::Residual(residual));
    }
    Ok(FloquetSolution {
        z,
        psi,
        phi_plus,
        phi_minus,
        residual,
    })
}

/// `g_{α,u}` as a callable on the circle.
#[derive(Debug, Clone)]
pub struct DensityField {
    pub seq: PeriodicSeq,
    pub bands: BandStructure,
    pub u: FiniteVector,
    pub normalization_correction: f64,
}

impl DensityField {
    pub fn new(seq: &PeriodicSeq, u: &FiniteVector) -> Result<Self> {
        if u.values.is_empty() {
            return Err(Error::Empty("source vector"));
        }
        let bands = floquet::band_structure(seq)?;
        Ok(DensityField {
            seq: seq.clone(),
            u: u.clone(),
            normalization_correction: 2.0 / seq.period() as f64,
            bands,
        })
    }

    /// `g(θ)` inside a band; callers guarantee band membership.
    fn eval_inside(&self, theta: f64) -> f64 {
        let disc = &self.bands.discriminant;
        let q = self.seq.period();
        let delta = disc.at(theta);
        let psi = (delta / 2.0).clamp(-1.0, 1.0).acos();
        let z = Complex64::from_polar(1.0, theta);
        let (pp, pm, _) = null_pair(&self.seq, z, psi);
        let sol = FloquetSolution {
            z,
            psi,
            phi_plus: pp,
            phi_minus: pm,
            residual: 0.0,
        };
        let half_q = q as f64 / 2.0;
        let transform = |plus: bool| -> Complex64 {
            self.u
                .iter()
                .map(|(n, un)| sol.extend(plus, n).conj() * un)
                .sum::<Complex64>()
                * half_q
        };
        let weight = transform(true).norm_sqr() + transform(false).norm_sqr();
        self.normalization_correction * weight * equilibrium_value(disc, theta)
    }

    /// `g(θ)`, zero off the spectrum.
    pub fn eval(&self, theta: f64) -> f64 {
        if self.bands.contains(theta) {
            self.eval_inside(theta)
        } else {
            0.0
        }
    }

    /// `∫ g dθ` over the bands.
    pub fn total_mass(&self, panels: usize) -> Estimate {
        let parts: Vec<Estimate> = self
            .bands
            .bands
            .par_iter()
            .map(|b| {
                let flags = band_flags(&self.bands, b);
                edge_integral(|t| self.eval_inside(t), |v| v, b.lo, b.hi, flags, 2, panels)
            })
            .collect();
        sum_estimates(&parts)
    }
}

/// Whether `theta` is the edge of a band next to an open gap, where band
/// densities blow up like `dist^{−1/2}`.
fn open_edge(bs: &BandStructure, theta: f64) -> bool {
    let near = |a: f64| {
        let d = (a - theta).rem_euclid(TAU);
        d.min(TAU - d) < 1e-12
    };
    bs.gaps.iter().any(|g| g.open && (near(g.lo) || near(g.hi)))
}

/// `field` at offset `d` from `edge` in direction `dir`. Inside the edge
/// layer, of thickness [`EDGE_LAYER`] capped at half the interval length
/// `len`, the value at the layer boundary is continued by the
/// `dist^{−1/2}` law at open edges and as a constant elsewhere.
fn layered(field: impl Fn(f64) -> f64, edge: f64, dir: f64, d: f64, len: f64, singular: bool) -> f64 {
    let layer = EDGE_LAYER.min(0.5 * len);
    if d >= layer {
        return field(edge + dir * d);
    }
    let v = field(edge + dir * layer);
    if singular {
        v * (layer / d).sqrt()
    } else {
        v
    }
}

/// `∫_lo^hi field` with edge-layer handling; `singular` flags the two
/// endpoints.
fn edge_integral(
    field: impl Fn(f64) -> f64,
    post: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    singular: [bool; 2],
    m: u32,
    panels: usize,
) -> Estimate {
    quadrature::integrate_offsets_with_error(
        |n| {
            let v = if n.from_lo {
                layered(&field, lo, 1.0, n.offset, hi - lo, singular[0])
            } else {
                layered(&field, hi, -1.0, n.offset, hi - lo, singular[1])
            };
            post(v)
        },
        lo,
        hi,
        m,
        panels,
    )
}

fn band_flags(bs: &BandStructure, b: &floquet::Band) -> [bool; 2] {
    [open_edge(bs, b.lo), open_edge(bs, b.hi)]
}

fn sum_estimates(parts: &[Estimate]) -> Estimate {
    Estimate {
        value: parts.iter().map(|e| e.value).sum(),
        error: parts.iter().map(|e| e.error).sum(),
    }
}

/// Samples of `g` over the bands, with the mass and its normalization
/// metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralDensity {
    pub grid: Vec<(f64, f64)>,
    pub u: FiniteVector,
    pub total_mass: f64,
    pub tolerance: f64,
    /// Mass computed with the verbatim `q/2` transform and no correction.
    pub verbatim_mass: f64,
    /// Factor `2/q` applied to the verbatim density.
    pub normalization_correction: f64,
}

/// Sample `g_{α,u}` on the quadrature nodes of every band (which cluster
/// at the band edges) and integrate it.
pub fn density(seq: &PeriodicSeq, u: &FiniteVector) -> Result<SpectralDensity> {
    let field = DensityField::new(seq, u)?;
    let mass = field.total_mass(DEFAULT_PANELS);
    let mut thetas: Vec<f64> = field
        .bands
        .bands
        .iter()
        .flat_map(|b| quadrature::edge_nodes(b.lo, b.hi, 2, 2).into_iter().map(|(t, _)| t))
        .collect();
    thetas.sort_by(f64::total_cmp);
    let grid = thetas
        .par_iter()
        .map(|&t| (t.rem_euclid(TAU), field.eval_inside(t)))
        .collect();
    Ok(SpectralDensity {
        grid,
        u: u.clone(),
        total_mass: mass.value,
        tolerance: mass.error,
        verbatim_mass: mass.value / field.normalization_correction,
        normalization_correction: field.normalization_correction,
    })
}

/// Largest substitution exponent used for `L^t` integrals; beyond it the
/// substituted nodes underflow before they resolve the edge.
const MAX_POWER: u32 = 16;

fn lt_power(t: f64) -> u32 {
    quadrature::power_for(t / 2.0).min(MAX_POWER)
}

fn check_t(t: f64) -> Result<()> {
    if !(t > 1.0 && t < 2.0) {
        return Err(Error::OutOfRange {
            name: "t",
            value: t,
            range: "(1, 2)",
        });
    }
    Ok(())
}

/// `∫_bands |field|^t dθ`, with edge substitution matched to the
/// `dist^{−t/2}` edge behaviour.
pub fn lt_integral(
    bands: &BandStructure,
    field: impl Fn(f64) -> f64 + Sync,
    t: f64,
    panels: usize,
) -> Result<Estimate> {
    check_t(t)?;
    let m = lt_power(t);
    let parts: Vec<Estimate> = bands
        .bands
        .par_iter()
        .map(|b| edge_integral(&field, |v| v.abs().powf(t), b.lo, b.hi, band_flags(bands, b), m, panels))
        .collect();
    Ok(sum_estimates(&parts))
}

/// `lt_integral` values at `panels, 2·panels, 4·panels, …`.
pub fn lt_refinement(
    bands: &BandStructure,
    field: impl Fn(f64) -> f64 + Sync,
    t: f64,
    panels: usize,
    levels: usize,
) -> Result<Vec<f64>> {
    check_t(t)?;
    let m = lt_power(t);
    Ok((0..levels)
        .map(|l| {
            bands
                .bands
                .par_iter()
                .map(|b| edge_integral(&field, |v| v.abs().powf(t), b.lo, b.hi, band_flags(bands, b), m, panels << l))
                .map(|e| e.value)
                .sum()
        })
        .collect())
}

/// `∫ |g_a − g_b|^t dθ` over the union of both spectra.
pub fn density_distance(a: &PeriodicSeq, b: &PeriodicSeq, u: &FiniteVector, t: f64) -> Result<f64> {
    let fa = DensityField::new(a, u)?;
    let fb = DensityField::new(b, u)?;
    density_distance_fields(&fa, &fb, t, DEFAULT_PANELS).map(|e| e.value)
}

/// [`density_distance`] on prepared fields, with an error estimate.
pub fn density_distance_fields(fa: &DensityField, fb: &DensityField, t: f64, panels: usize) -> Result<Estimate> {
    check_t(t)?;
    if fa.seq == fb.seq && fa.u == fb.u {
        return Ok(Estimate { value: 0.0, error: 0.0 });
    }
    let mut cuts: Vec<f64> = fa
        .bands
        .bands
        .iter()
        .chain(&fb.bands.bands)
        .flat_map(|b| [b.lo.rem_euclid(TAU), b.hi.rem_euclid(TAU)])
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|x, y| (*x - *y).abs() < 1e-15);
    let n = cuts.len();
    let pieces: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let lo = cuts[i];
            let hi = if i + 1 < n { cuts[i + 1] } else { cuts[0] + TAU };
            (lo, hi)
        })
        .filter(|(lo, hi)| hi - lo > 1e-15)
        .filter(|(lo, hi)| {
            let mid = 0.5 * (lo + hi);
            fa.bands.contains(mid) || fb.bands.contains(mid)
        })
        .collect();
    let m = lt_power(t);
    let parts: Vec<Estimate> = pieces
        .par_iter()
        .map(|&(lo, hi)| {
            let mid = 0.5 * (lo + hi);
            let (ina, inb) = (fa.bands.contains(mid), fb.bands.contains(mid));
            let (sa, sb) = (
                [ina && open_edge(&fa.bands, lo), ina && open_edge(&fa.bands, hi)],
                [inb && open_edge(&fb.bands, lo), inb && open_edge(&fb.bands, hi)],
            );
            let value = |field: &DensityField, inside: bool, singular: [bool; 2], n: &quadrature::EdgeNode| {
                if !inside {
                    return 0.0;
                }
                let eval = |x: f64| field.eval_inside(x);
                if n.from_lo {
                    layered(eval, lo, 1.0, n.offset, hi - lo, singular[0])
                } else {
                    layered(eval, hi, -1.0, n.offset, hi - lo, singular[1])
                }
            };
            quadrature::integrate_offsets_with_error(
                |n| (value(fa, ina, sa, n) - value(fb, inb, sb, n)).abs().powf(t),
                lo,
                hi,
                m,
                panels,
            )
        })
        .collect();
    Ok(sum_estimates(&parts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::make_periodic;
    use std::f64::consts::FRAC_PI_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn free() -> PeriodicSeq {
        PeriodicSeq::constant(c(0.0, 0.0), 0.1).unwrap()
    }

    #[test]
    fn psi_examples() {
        let d = floquet::discriminant(&free()).unwrap();
        assert!(psi_of(c(1.0, 0.0), &d).unwrap().abs() < 1e-7);
        assert!((psi_of(c(0.0, 1.0), &d).unwrap() - FRAC_PI_2).abs() < 1e-14);
        for th in [0.3, 2.0, -1.2, 4.0] {
            let z = Complex64::from_polar(1.0, th);
            let want = th.rem_euclid(TAU);
            let want = if want > PI { TAU - want } else { want };
            assert!((psi_of(z, &d).unwrap() - want).abs() < 1e-12);
        }
        let half = floquet::discriminant(&PeriodicSeq::constant(c(0.5, 0.0), 0.6).unwrap()).unwrap();
        assert!(matches!(psi_of(c(1.0, 0.0), &half), Err(Error::OffSpectrum { .. })));
        assert!(psi_of(c(2.0, 0.0), &d).is_err());
    }

    #[test]
    fn free_equilibrium_density() {
        for q in [2usize, 4, 8] {
            let e = equilibrium_density(&free().repeat(q / 2)).unwrap();
            for j in 0..50 {
                let th = 0.01 + j as f64 * 0.123;
                if (e.bands.discriminant.at(th).abs() - 2.0).abs() > 1e-6 {
                    assert!((e.eval(th) - 1.0 / TAU).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn equilibrium_mass_and_lower_bound() {
        let s = PeriodicSeq::constant(c(0.5, 0.0), 0.6).unwrap();
        let e = equilibrium_density(&s).unwrap();
        for b in &e.bands.bands {
            assert!((b.mass - 0.5).abs() < 1e-6);
            for j in 1..=256 {
                let th = b.lo + b.width() * j as f64 / 257.0;
                assert!(e.eval(th) >= 1.0 / TAU - 1e-9);
            }
        }
    }

    #[test]
    fn free_floquet_solution() {
        let th = 0.9;
        let z = Complex64::from_polar(1.0, th);
        let sol = floquet_solution(&free(), z).unwrap();
        assert!(sol.residual < 1e-12);
        assert!((sol.psi - th).abs() < 1e-12);
        assert!((sol.phi_plus[0].norm() - 1.0).abs() < 1e-12 && sol.phi_plus[1].norm() < 1e-12);
        assert!((sol.phi_minus[1].norm() - 1.0).abs() < 1e-12 && sol.phi_minus[0].norm() < 1e-12);
        let edge = floquet_solution(&free(), c(1.0, 0.0));
        assert!(matches!(edge, Err(Error::NearBandEdge { .. })));
    }

    #[test]
    fn extension_solves_eigen_equation_across_seams() {
        let s = make_periodic(&[c(0.3, 0.1), c(-0.4, 0.2), c(0.1, -0.5), c(0.2, 0.2)], 0.6).unwrap();
        let bs = floquet::band_structure(&s).unwrap();
        let b = bs.bands[1];
        let th = b.lo + 0.37 * b.width();
        let z = Complex64::from_polar(1.0, th);
        let sol = floquet_solution(&s, z).unwrap();
        let overlap: Complex64 = sol.phi_plus.iter().zip(&sol.phi_minus).map(|(a, b)| a.conj() * b).sum();
        assert!(overlap.norm() < 0.999);
        let win = s.window(-14, 26);
        let w = crate::cmv::assemble_window(&win, -12, 36).unwrap();
        for plus in [true, false] {
            let u: Vec<Complex64> = (-12..24).map(|n| sol.extend(plus, n)).collect();
            let eu = w.apply(&u).unwrap();
            for n in -8..20 {
                let i = (n + 12) as usize;
                assert!((eu[i] - z * u[i]).norm() < 1e-10, "n={n}");
            }
        }
    }

    #[test]
    fn free_density_is_flat() {
        let d = density(&free(), &FiniteVector::delta(0)).unwrap();
        assert!((d.total_mass - 1.0).abs() < 1e-10);
        for (t, g) in &d.grid {
            let tol = if t.sin().abs() > 1e-3 { 1e-10 } else { 1e-6 };
            assert!((g - 1.0 / TAU).abs() < tol);
        }
        let d4 = density(&free().repeat(2), &FiniteVector::delta(0)).unwrap();
        assert!((d4.total_mass - 1.0).abs() < 1e-10);
        assert!((d4.verbatim_mass - 2.0).abs() < 1e-9);
    }

    #[test]
    fn constant_half_density() {
        let s = PeriodicSeq::constant(c(0.5, 0.0), 0.6).unwrap();
        let f = DensityField::new(&s, &FiniteVector::delta(0)).unwrap();
        assert!((f.total_mass(DEFAULT_PANELS).value - 1.0).abs() < 1e-4);
        assert_eq!(f.eval(0.0), 0.0);
        assert_eq!(f.eval(0.5), 0.0);
        let u = FiniteVector::new(0, vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 1.0)]).unwrap();
        let f = DensityField::new(&s, &u).unwrap();
        assert!((f.total_mass(DEFAULT_PANELS).value - 2.0).abs() < 1e-4);
    }

    #[test]
    fn density_is_quadratic_in_u() {
        let s = make_periodic(&[c(0.3, 0.1), c(-0.4, 0.2)], 0.6).unwrap();
        let u = FiniteVector::new(-1, vec![c(0.5, 0.1), c(-0.2, 0.7), c(0.3, 0.0)]).unwrap();
        let d1 = density(&s, &u).unwrap();
        let d2 = density(&s, &u.scale(c(2.0, 0.0))).unwrap();
        for ((_, a), (_, b)) in d1.grid.iter().zip(&d2.grid) {
            assert!((4.0 * a - b).abs() <= 1e-10 * b.abs().max(1.0));
        }
        assert!((d2.total_mass - 4.0 * d1.total_mass).abs() < 1e-9);
        assert!(density(&s, &FiniteVector { start: 0, values: vec![] }).is_err());
    }

    #[test]
    fn density_independent_of_viewing_period() {
        let s = make_periodic(&[c(0.3, 0.1), c(-0.4, 0.2)], 0.6).unwrap();
        let u = FiniteVector::delta(1);
        let a = DensityField::new(&s, &u).unwrap();
        let b = DensityField::new(&s.repeat(2), &u).unwrap();
        for j in 0..40 {
            let th = 0.05 + j as f64 * 0.157;
            if a.bands.contains(th) && b.bands.contains(th) {
                assert!((a.eval(th) - b.eval(th)).abs() < 1e-8 * a.eval(th).max(1.0));
            }
        }
    }

    #[test]
    fn lt_free_value_and_t_range() {
        let bs = floquet::band_structure(&free()).unwrap();
        let v = lt_integral(&bs, |_| 1.0 / TAU, 1.5, 8).unwrap();
        assert!((v.value - TAU.powf(-0.5)).abs() < 1e-12);
        assert!(lt_integral(&bs, |_| 1.0, 2.0, 8).is_err());
        assert!(lt_integral(&bs, |_| 1.0, 1.0, 8).is_err());
    }

    #[test]
    fn lt_refinement_converges_and_grows_toward_two() {
        let s = PeriodicSeq::constant(c(0.5, 0.0), 0.6).unwrap();
        let e = equilibrium_density(&s).unwrap();
        let disc = e.bands.discriminant.clone();
        let v = |x: f64| equilibrium_value(&disc, x);
        let r = lt_refinement(&e.bands, v, 1.5, 4, 4).unwrap();
        for w in r.windows(2) {
            assert!((w[1] - w[0]).abs() < 1e-3);
        }
        let sweep: Vec<f64> = [1.5, 1.9, 1.99]
            .iter()
            .map(|&t| lt_integral(&e.bands, v, t, 8).unwrap().value)
            .collect();
        assert!(sweep[0] < sweep[1] && sweep[1] < sweep[2]);
    }

    #[test]
    fn density_distance_trend_and_triangle() {
        let u = FiniteVector::delta(0);
        let base = PeriodicSeq::constant(c(0.5, 0.0), 0.7).unwrap();
        assert_eq!(density_distance(&base, &base, &u, 1.5).unwrap(), 0.0);
        let mut last = f64::INFINITY;
        for k in 0..5 {
            let h = 0.01 / 2f64.powi(k);
            let other = PeriodicSeq::constant(c(0.5 + h, 0.0), 0.7).unwrap();
            let d = density_distance(&base, &other, &u, 1.5).unwrap();
            assert!(d < last, "k={k}: {d} vs {last}");
            last = d;
        }
        let t = 1.5;
        let a = PeriodicSeq::constant(c(0.5, 0.0), 0.7).unwrap();
        let b = make_periodic(&[c(0.52, 0.0), c(0.49, 0.01)], 0.7).unwrap();
        let cc = PeriodicSeq::constant(c(0.47, 0.02), 0.7).unwrap();
        let n = |x: &PeriodicSeq, y: &PeriodicSeq| density_distance(x, y, &u, t).unwrap().powf(1.0 / t);
        assert!(n(&a, &cc) <= n(&a, &b) + n(&b, &cc) + 1e-6);
    }
}
