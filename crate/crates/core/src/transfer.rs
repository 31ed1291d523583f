//! Two-step transfer matrices for the eigen-equation `𝓔u = zu`.
//!
//! For odd `n`, rows `n+1` and `n+2` of `(𝓔 − z)u = 0` determine
//! `(u_{n+2}, u_{n+3})` from `(u_n, u_{n+1})`:
//!
//! ```text
//! A_n = 1/(z ρ_{n+1} ρ_{n+2}) · [[a11, a12], [a21, a22]]
//! a11 = ρ_{n+2} ρ_n
//! a12 = −ρ_{n+2} (α_n + z α_{n+1})
//! a21 = −ρ_n (z ᾱ_{n+1} + ᾱ_{n+2})
//! a22 = (ᾱ_{n+2} α_{n+1} + z)(ᾱ_{n+1} α_n + z) + ᾱ_{n+2} ρ²_{n+1} α_n
//! ```
//!
//! with `det A_n = ρ_n / ρ_{n+2}`. Rescaling the top row by `ρ_{n+2}` and the
//! left column by `1/ρ_n` gives the determinant-one form `𝔄_n`.

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::sync::{Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coeffs::{rho_of, PeriodicSeq, VerblunskyValue};
use crate::error::{Error, Result};
use crate::linalg::Mat2;

/// Tolerance on `|z| = 1` for spectral parameters.
pub const UNIMODULAR_TOL: f64 = 1e-12;

/// Safety factor applied to the sampled Lipschitz constant.
pub const LIPSCHITZ_SAFETY: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferMatrix {
    pub entries: Mat2,
    pub z: Complex64,
    pub triple: [Complex64; 3],
    pub unimodular: bool,
}

impl TransferMatrix {
    pub fn det(&self) -> Complex64 {
        self.entries.det()
    }

    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        self.entries.apply(v)
    }
}

pub(crate) fn check_unimodular(z: Complex64) -> Result<()> {
    if !z.is_finite() || (z.norm() - 1.0).abs() > UNIMODULAR_TOL {
        return Err(Error::NotUnimodular(z));
    }
    Ok(())
}

/// `A_n` from raw coefficients, no validation.
#[inline]
pub(crate) fn a_matrix(a0: Complex64, a1: Complex64, a2: Complex64, z: Complex64) -> Mat2 {
    let (r0, r1, r2) = (rho_of(a0), rho_of(a1), rho_of(a2));
    let a11 = Complex64::new(r2 * r0, 0.0);
    let a12 = -r2 * (a0 + z * a1);
    let a21 = -r0 * (z * a1.conj() + a2.conj());
    let a22 = (a2.conj() * a1 + z) * (a1.conj() * a0 + z) + a2.conj() * (r1 * r1) * a0;
    Mat2::new(a11, a12, a21, a22).scale(1.0 / (z * (r1 * r2)))
}

#[inline]
fn unimodular_from(a: &Mat2, r0: f64, r2: f64) -> Mat2 {
    let m = a.0;
    Mat2::new(m[0][0] * (r2 / r0), m[0][1] * r2, m[1][0] / r0, m[1][1])
}

/// `A_n` for the triple `(α_n, α_{n+1}, α_{n+2})`.
pub fn build_a(
    alpha_n: VerblunskyValue,
    alpha_n1: VerblunskyValue,
    alpha_n2: VerblunskyValue,
    z: Complex64,
) -> Result<TransferMatrix> {
    check_unimodular(z)?;
    let triple = [alpha_n.value(), alpha_n1.value(), alpha_n2.value()];
    Ok(TransferMatrix {
        entries: a_matrix(triple[0], triple[1], triple[2], z),
        z,
        triple,
        unimodular: false,
    })
}

/// `𝔄_n = diag(ρ_{n+2}, 1) · A_n · diag(1/ρ_n, 1)`, of determinant one. It
/// propagates `(ρ_n u_n, u_{n+1})` to `(ρ_{n+2} u_{n+2}, u_{n+3})`.
pub fn build_a_unimodular(
    alpha_n: VerblunskyValue,
    alpha_n1: VerblunskyValue,
    alpha_n2: VerblunskyValue,
    z: Complex64,
) -> Result<TransferMatrix> {
    let a = build_a(alpha_n, alpha_n1, alpha_n2, z)?;
    Ok(TransferMatrix {
        entries: unimodular_from(&a.entries, alpha_n.rho().get(), alpha_n2.rho().get()),
        unimodular: true,
        ..a
    })
}

/// `A_n` read from a periodic sequence.
pub fn step(seq: &PeriodicSeq, n: i64, z: Complex64) -> Mat2 {
    a_matrix(seq.eval(n), seq.eval(n + 1), seq.eval(n + 2), z)
}

/// `A_{n+2(steps−1)} ··· A_{n+2} A_n` for odd `n_start`.
pub fn product(seq: &PeriodicSeq, z: Complex64, n_start: i64, steps: usize) -> Result<Mat2> {
    check_unimodular(z)?;
    if n_start.rem_euclid(2) != 1 {
        return Err(Error::Invalid(format!("transfer products start at odd n, got {n_start}")));
    }
    let mut p = Mat2::IDENTITY;
    for s in 0..steps as i64 {
        p = step(seq, n_start + 2 * s, z) * p;
    }
    Ok(p)
}

/// Determinant-one version of [`product`].
pub fn product_unimodular(seq: &PeriodicSeq, z: Complex64, n_start: i64, steps: usize) -> Result<Mat2> {
    check_unimodular(z)?;
    if n_start.rem_euclid(2) != 1 {
        return Err(Error::Invalid(format!("transfer products start at odd n, got {n_start}")));
    }
    let mut p = Mat2::IDENTITY;
    for s in 0..steps as i64 {
        let n = n_start + 2 * s;
        p = unimodular_from(&step(seq, n, z), seq.rho(n), seq.rho(n + 2)) * p;
    }
    Ok(p)
}

/// Transfer matrix over one period, `(u_1, u_2) ↦ (u_{q+1}, u_{q+2})`.
pub fn monodromy(seq: &PeriodicSeq, z: Complex64) -> Result<Mat2> {
    product(seq, z, 1, seq.period() / 2)
}

/// `max(‖Ax‖, ‖A²x‖, ‖A⁻¹x‖, ‖A⁻²x‖)` for a unit vector `x`.
pub fn four_block(a: &Mat2, x: [Complex64; 2]) -> Result<f64> {
    let nx = (x[0].norm_sqr() + x[1].norm_sqr()).sqrt();
    if (nx - 1.0).abs() > 1e-12 {
        return Err(Error::NotNormalized(nx));
    }
    let inv = a.inverse()?;
    let norm = |v: [Complex64; 2]| (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    let (ax, ix) = (a.apply(x), inv.apply(x));
    Ok([norm(ax), norm(a.apply(ax)), norm(ix), norm(inv.apply(ix))]
        .into_iter()
        .fold(0.0, f64::max))
}

/// A sampled bound on the sensitivity of `A_n` to its coefficient triple:
/// `‖A(α) − A(α̃)‖ ≤ L · max_i |α_i − α̃_i|` on the closed `r`-polydisk,
/// uniformly in `|z| = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzModulus {
    pub r: f64,
    pub l: f64,
}

const MODULUS_STEPS: usize = 5;
const ANGLE_STEPS: usize = 8;
const Z_STEPS: usize = 16;
const FD_STEP: f64 = 1e-6;

fn disk_grid(r: f64) -> Vec<Complex64> {
    let mut pts = vec![Complex64::new(0.0, 0.0)];
    for m in 1..MODULUS_STEPS {
        let rad = r * m as f64 / (MODULUS_STEPS - 1) as f64;
        for a in 0..ANGLE_STEPS {
            let t = TAU * (a as f64 + 0.5 * (m % 2) as f64) / ANGLE_STEPS as f64;
            pts.push(Complex64::from_polar(rad, t));
        }
    }
    pts
}

/// Sum over the six real coordinates of `‖∂A‖`, by central differences.
fn sensitivity(t: [Complex64; 3], z: Complex64, r: f64) -> f64 {
    let mut total = 0.0;
    for i in 0..3 {
        for dir in [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)] {
            let h = FD_STEP;
            let (mut tp, mut tm) = (t, t);
            tp[i] += dir * h;
            tm[i] -= dir * h;
            // keep the stencil inside the disk
            let clip = |v: Complex64| {
                let cap = (r + h).min(0.5 * (1.0 + r));
                if v.norm() > cap {
                    v * (cap / v.norm())
                } else {
                    v
                }
            };
            let (tp, tm) = ([clip(tp[0]), clip(tp[1]), clip(tp[2])], [clip(tm[0]), clip(tm[1]), clip(tm[2])]);
            let span = (tp[i] - tm[i]).norm();
            if span == 0.0 {
                continue;
            }
            let d = a_matrix(tp[0], tp[1], tp[2], z) - a_matrix(tm[0], tm[1], tm[2], z);
            total += d.spectral_norm() / span;
        }
    }
    total
}

/// Grid estimate of `L(r)`, times [`LIPSCHITZ_SAFETY`].
pub fn estimate_lipschitz(r: f64) -> Result<LipschitzModulus> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidRadius {
            r,
            reason: "must lie in (0, 1)".into(),
        });
    }
    let disk = disk_grid(r);
    let zs: Vec<Complex64> = (0..Z_STEPS)
        .map(|j| Complex64::from_polar(1.0, TAU * (j as f64 + 0.25) / Z_STEPS as f64))
        .collect();
    let n = disk.len();
    let max = (0..n * n)
        .into_par_iter()
        .map(|ij| {
            let (a0, a1) = (disk[ij / n], disk[ij % n]);
            let mut best = 0.0f64;
            for &a2 in &disk {
                for &z in &zs {
                    best = best.max(sensitivity([a0, a1, a2], z, r));
                }
            }
            best
        })
        .reduce(|| 0.0, f64::max);
    Ok(LipschitzModulus {
        r,
        l: LIPSCHITZ_SAFETY * max,
    })
}

fn cache() -> &'static Mutex<HashMap<u64, LipschitzModulus>> {
    static CACHE: OnceLock<Mutex<HashMap<u64, LipschitzModulus>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// [`estimate_lipschitz`], memoized per `r`.
pub fn lipschitz(r: f64) -> Result<LipschitzModulus> {
    let key = r.to_bits();
    if let Some(m) = cache().lock().expect("lipschitz cache poisoned").get(&key) {
        return Ok(*m);
    }
    let m = estimate_lipschitz(r)?;
    cache().lock().expect("lipschitz cache poisoned").insert(key, m);
    Ok(m)
}

/// `γ(k, q, r) = k^{−q} / L(r)`: triples within `γ` of each other give
/// transfer matrices within `k^{−q}`.
pub fn gamma(k: u32, q: u32, r: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::OutOfRange {
            name: "k",
            value: 0.0,
            range: ">= 1",
        });
    }
    let l = lipschitz(r)?.l;
    Ok((k as f64).powf(-(q as f64)) / l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::make_periodic;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn v(a: Complex64) -> VerblunskyValue {
        VerblunskyValue::new(a).unwrap()
    }

    fn disk_point(rng: &mut ChaCha8Rng, r: f64) -> Complex64 {
        Complex64::from_polar(r * rng.gen::<f64>().sqrt(), rng.gen::<f64>() * TAU)
    }

    /// Solve rows n+1, n+2 of (𝓔 − z)u = 0 for (u_{n+2}, u_{n+3}).
    fn solve_rows(t: [Complex64; 3], z: Complex64, un: Complex64, un1: Complex64) -> [Complex64; 2] {
        let [a0, a1, a2] = t;
        let (r0, r1, r2) = (rho_of(a0), rho_of(a1), rho_of(a2));
        // row n+1: z u_{n+1} = ᾱ1 ρ0 u_n − ᾱ1 α0 u_{n+1} + ᾱ2 ρ1 u_{n+2} + ρ2 ρ1 u_{n+3}
        // row n+2: z u_{n+2} = ρ1 ρ0 u_n − ρ1 α0 u_{n+1} − ᾱ2 α1 u_{n+2} − ρ2 α1 u_{n+3}
        let m = Mat2::new(
            a2.conj() * r1,
            c(r2 * r1, 0.0),
            -a2.conj() * a1 - z,
            -r2 * a1,
        );
        let rhs = [
            z * un1 - a1.conj() * r0 * un + a1.conj() * a0 * un1,
            -(r1 * r0) * un + r1 * a0 * un1,
        ];
        m.inverse().unwrap().apply(rhs)
    }

    #[test]
    fn free_cases() {
        let zero = v(c(0.0, 0.0));
        let a = build_a(zero, zero, zero, c(1.0, 0.0)).unwrap();
        assert_eq!(a.entries, Mat2::IDENTITY);
        let a = build_a(zero, zero, zero, c(0.0, 1.0)).unwrap();
        let want = Mat2::diag(c(0.0, -1.0), c(0.0, 1.0));
        assert!((a.entries - want).spectral_norm() < 1e-15);
        let u = build_a_unimodular(zero, zero, zero, c(1.0, 0.0)).unwrap();
        assert_eq!(u.entries, Mat2::IDENTITY);
    }

    #[test]
    fn half_constant_triple() {
        let h = v(c(0.5, 0.0));
        let z = c(1.0, 0.0);
        let a = build_a(h, h, h, z).unwrap();
        assert!((a.det() - c(1.0, 0.0)).norm() < 1e-13);
        let (un, un1) = (c(0.3, -0.2), c(1.1, 0.4));
        let got = a.apply([un, un1]);
        let want = solve_rows([c(0.5, 0.0); 3], z, un, un1);
        assert!((got[0] - want[0]).norm() < 1e-13 && (got[1] - want[1]).norm() < 1e-13);
    }

    #[test]
    fn rejects_off_circle() {
        let zero = v(c(0.0, 0.0));
        assert!(matches!(build_a(zero, zero, zero, c(1.1, 0.0)), Err(Error::NotUnimodular(_))));
    }

    #[test]
    fn random_triples_det_and_recurrence() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            let t = [disk_point(&mut rng, 0.95), disk_point(&mut rng, 0.95), disk_point(&mut rng, 0.95)];
            let z = Complex64::from_polar(1.0, rng.gen::<f64>() * TAU);
            let a = build_a(v(t[0]), v(t[1]), v(t[2]), z).unwrap();
            let want = rho_of(t[0]) / rho_of(t[2]);
            assert!((a.det() - want).norm() < 1e-12);
            let u = build_a_unimodular(v(t[0]), v(t[1]), v(t[2]), z).unwrap();
            assert!((u.det() - 1.0).norm() < 1e-12);
            let d_out = Mat2::diag(c(rho_of(t[2]), 0.0), c(1.0, 0.0));
            let d_in = Mat2::diag(c(1.0 / rho_of(t[0]), 0.0), c(1.0, 0.0));
            assert!((d_out * a.entries * d_in - u.entries).spectral_norm() < 1e-12 * a.entries.spectral_norm().max(1.0));
            let (un, un1) = (disk_point(&mut rng, 1.0), disk_point(&mut rng, 1.0));
            let got = a.apply([un, un1]);
            let want = solve_rows(t, z, un, un1);
            let scale = 1.0 + want[0].norm() + want[1].norm();
            assert!((got[0] - want[0]).norm() < 1e-11 * scale);
            assert!((got[1] - want[1]).norm() < 1e-11 * scale);
        }
    }

    #[test]
    fn products() {
        let zero = make_periodic(&[c(0.0, 0.0)], 0.1).unwrap();
        let z = Complex64::from_polar(1.0, 0.7);
        let p = product(&zero, z, 1, 5).unwrap();
        assert!((p - Mat2::diag(z.powi(-5), z.powi(5))).spectral_norm() < 1e-14);
        assert!(product(&zero, z, 2, 1).is_err());

        let seq = make_periodic(&[c(0.3, 0.2), c(-0.5, 0.1), c(0.0, 0.7), c(0.4, -0.4)], 0.8).unwrap();
        let p = product(&seq, z, 1, 7).unwrap();
        let want = seq.rho(1) / seq.rho(15);
        assert!((p.det() - want).norm() < 1e-11);
        let p1 = product(&seq, z, 1, 2).unwrap();
        let p2 = product(&seq, z, 1, 4).unwrap();
        assert!((p1 * p1 - p2).spectral_norm() < 1e-10);
        let pu = product_unimodular(&seq, z, 3, 5).unwrap();
        assert!((pu.det() - 1.0).norm() < 1e-12);
    }

    #[test]
    fn four_block_examples() {
        let x = [c(1.0, 0.0), c(0.0, 0.0)];
        assert_eq!(four_block(&Mat2::IDENTITY, x).unwrap(), 1.0);
        let d = Mat2::diag(c(2.0, 0.0), c(0.5, 0.0));
        assert_eq!(four_block(&d, x).unwrap(), 4.0);
        let rot = Mat2::new(c(0.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0));
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((four_block(&rot, [c(s, 0.0), c(0.0, s)]).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(four_block(&d, [c(2.0, 0.0), c(0.0, 0.0)]), Err(Error::NotNormalized(_))));
        let sing = Mat2::diag(c(1.0, 0.0), c(0.0, 0.0));
        assert!(matches!(four_block(&sing, x), Err(Error::Singular)));
    }

    #[test]
    fn gamma_properties() {
        let l = lipschitz(0.5).unwrap().l;
        assert!(l.is_finite() && l > 0.0);
        assert_eq!(gamma(1, 7, 0.5).unwrap(), 1.0 / l);
        assert!(lipschitz(0.9).unwrap().l >= l);
        assert!(gamma(2, 4, 0.5).unwrap() > gamma(3, 4, 0.5).unwrap());
        assert!(gamma(2, 4, 0.5).unwrap() > gamma(2, 6, 0.5).unwrap());
        assert!(gamma(0, 2, 0.5).is_err());
    }

    #[test]
    fn gamma_contract_audit() {
        let r = 0.9;
        let g = gamma(2, 4, r).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut probes = 0;
        while probes < 10_000 {
            let t: [Complex64; 3] = std::array::from_fn(|_| disk_point(&mut rng, r));
            let s: [Complex64; 3] = std::array::from_fn(|i| t[i] + disk_point(&mut rng, g));
            if s.iter().any(|x| x.norm() > r) {
                continue;
            }
            probes += 1;
            let z = Complex64::from_polar(1.0, rng.gen::<f64>() * TAU);
            let d = a_matrix(t[0], t[1], t[2], z) - a_matrix(s[0], s[1], s[2], z);
            assert!(d.spectral_norm() < 2f64.powi(-4));
        }
    }

    proptest! {
        #[test]
        fn four_block_lower_bound(
            th in 0.0f64..TAU, ph in 0.0f64..TAU, ps in 0.0f64..TAU,
            log_c in 0.0f64..6.0, s in 0.01f64..100.0,
            xa in 0.0f64..TAU, xb in 0.0f64..TAU, xw in 0.0f64..1.0,
        ) {
            // A = U diag(s, s/cond) V with unitary U, V
            let cond = 10f64.powf(log_c);
            let u = Mat2::new(c(th.cos(), 0.0), Complex64::from_polar(-th.sin(), ph), Complex64::from_polar(th.sin(), -ph), c(th.cos(), 0.0));
            let vv = Mat2::new(c(ps.cos(), 0.0), c(-ps.sin(), 0.0), c(ps.sin(), 0.0), c(ps.cos(), 0.0));
            let a = u * Mat2::diag(c(s, 0.0), c(s / cond, 0.0)) * vv;
            let x = [Complex64::from_polar(xw.sqrt(), xa), Complex64::from_polar((1.0 - xw).sqrt(), xb)];
            let nx = (x[0].norm_sqr() + x[1].norm_sqr()).sqrt();
            let x = [x[0] / nx, x[1] / nx];
            prop_assert!(four_block(&a, x).unwrap() >= 0.5);
        }
    }
}
