//! Gordon certificates: a sequence that repeats on windows of length
//! `q_k` up to `γ(k, q_k, r)/4` has no `ℓ²` eigenvectors. This module checks
//! that hypothesis on a finite window, measures the four-block growth of
//! transfer products, and builds sampling functions that satisfy it to a
//! prescribed depth.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coeffs::{CoefficientWindow, PeriodicSeq};
use crate::error::{Error, Result};
use crate::linalg::Mat2;
use crate::odometer::{lift, sup_distance, OdometerPoint, SamplingFn};
use crate::transfer;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GordonEntry {
    pub k: u32,
    pub q_k: usize,
    /// Largest `|α(n)|` over `[−2q_k+1, 2q_k+1]`.
    pub r_k: f64,
    /// The declared bound fed to `γ`.
    pub r: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GordonCertificate {
    pub window: CoefficientWindow,
    pub entries: Vec<GordonEntry>,
}

impl GordonCertificate {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    /// Largest `k` such that every scheduled depth up to it passes.
    pub fn deepest_pass(&self) -> Option<u32> {
        self.entries.iter().take_while(|e| e.pass).last().map(|e| e.k)
    }
}

/// Check `max_{−q_k+1 ≤ n ≤ q_k+1} |α(n) − α(n ± q_k)| ≤ γ(k, q_k, r)/4`
/// for every `(k, q_k)` of the schedule.
pub fn check_gordon(alpha: &CoefficientWindow, schedule: &[(u32, usize)]) -> Result<GordonCertificate> {
    let mut last_q = 0;
    let mut entries = Vec::with_capacity(schedule.len());
    for &(k, q) in schedule {
        if q == 0 || q % 2 != 0 {
            return Err(Error::Invalid(format!("q_k must be positive and even, got {q}")));
        }
        if q <= last_q {
            return Err(Error::Invalid("q_k must be strictly increasing".into()));
        }
        last_q = q;
        let qi = q as i64;
        alpha.require(-2 * qi + 1, 2 * qi + 1)?;
        let lhs = (-qi + 1..=qi + 1)
            .map(|n| {
                let a = alpha.get(n);
                (a - alpha.get(n + qi)).norm().max((a - alpha.get(n - qi)).norm())
            })
            .fold(0.0, f64::max);
        let rhs = transfer::gamma(k, q as u32, alpha.r)? / 4.0;
        entries.push(GordonEntry {
            k,
            q_k: q,
            r_k: alpha.max_modulus(-2 * qi + 1, 2 * qi + 1),
            r: alpha.r,
            lhs,
            rhs,
            pass: lhs <= rhs,
        });
    }
    Ok(GordonCertificate {
        window: alpha.clone(),
        entries,
    })
}

fn norm2(v: [Complex64; 2]) -> f64 {
    (v[0].norm_sqr() + v[1].norm_sqr()).sqrt()
}

/// `max_{a=±1,±2} ‖φ(a·q_k + 1)‖ / ‖φ(1)‖` for the solution of `𝓔φ = zφ`
/// with `φ(1) = (u_1, u_2)`, propagated by two-step transfer matrices.
pub fn growth_ratio(seq: &PeriodicSeq, z: Complex64, q_k: usize, init: Option<[Complex64; 2]>) -> Result<f64> {
    if q_k == 0 || q_k % 2 != 0 {
        return Err(Error::Invalid(format!("q_k must be positive and even, got {q_k}")));
    }
    let phi1 = init.unwrap_or([Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
    let n1 = norm2(phi1);
    if n1 == 0.0 {
        return Err(Error::Invalid("initial condition must be nonzero".into()));
    }
    let qi = q_k as i64;
    let half = q_k / 2;
    let fwd1 = transfer::product(seq, z, 1, half)?;
    let fwd2 = transfer::product(seq, z, 1, q_k)?;
    let back1: Mat2 = transfer::product(seq, z, -qi + 1, half)?.inverse()?;
    let back2: Mat2 = transfer::product(seq, z, -2 * qi + 1, q_k)?.inverse()?;
    Ok([fwd1, fwd2, back1, back2]
        .iter()
        .map(|m| norm2(m.apply(phi1)))
        .fold(0.0, f64::max)
        / n1)
}

/// Per-depth record of the approximant construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GordonStage {
    pub k: u32,
    pub level: u32,
    /// Period `j_k` of the stage approximant.
    pub period: usize,
    /// Gordon scale `q_k = j_k · k`.
    pub q_k: usize,
    pub gamma: f64,
    /// Bound the stage perturbation had to respect.
    pub bound: f64,
    pub perturbation_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GordonApproximant {
    pub g: SamplingFn,
    pub stages: Vec<GordonStage>,
    pub certificate: GordonCertificate,
    pub sup_distance: f64,
    pub omega: OdometerPoint,
}

/// Smallest perturbation bound treated as representable.
const MIN_BOUND: f64 = 1e-15;

/// Build `g = f + t_1 + … + t_K` with `t_k` a random table at level
/// `level(f) + k`, so that `g_k = f + t_1 + … + t_k` has period
/// `j_k = 2^{level(f)+k}` and `‖g − g_k‖ < γ(k, j_k·k, R)/8`. Then `g`
/// satisfies the Gordon inequality at `q_k = j_k·k` for every `k ≤ K`.
pub fn construct_gordon_approximant(f: &SamplingFn, eps: f64, depth: u32, seed: u64) -> Result<GordonApproximant> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::OutOfRange {
            name: "eps",
            value: eps,
            range: "(0, ∞)",
        });
    }
    if depth == 0 {
        return Err(Error::OutOfRange {
            name: "depth",
            value: 0.0,
            range: ">= 1",
        });
    }
    let base = f.max_modulus();
    let radius = if f.r() > base { f.r() } else { 0.5 * (1.0 + base) };
    let slack = eps.min(radius - base);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = f.with_radius(radius)?;
    let mut stages: Vec<GordonStage> = Vec::new();
    let mut total = 0.0;
    for k in 1..=depth {
        let level = f.level() + k;
        let period = 1usize << level;
        let q_k = period * k as usize;
        let gamma = transfer::gamma(k, q_k as u32, radius)?;
        let mut bound = slack / 2f64.powi(k as i32 + 1);
        for s in &stages {
            bound = bound.min(s.gamma / (8.0 * 2f64.powi((k - s.k) as i32)));
        }
        if bound < MIN_BOUND {
            return Err(Error::Infeasible {
                stage: k,
                detail: format!("perturbation bound {bound:e} below resolution; deepest achieved depth {}", k - 1),
            });
        }
        let lifted = lift(&g, level)?;
        let amp = 0.9 * bound;
        let table: Vec<Complex64> = lifted
            .table()
            .iter()
            .map(|&v| v + Complex64::from_polar(amp * rng.gen::<f64>().sqrt(), rng.gen::<f64>() * std::f64::consts::TAU))
            .collect();
        let next = SamplingFn::new(level, table, radius)?;
        let norm = sup_distance(&lifted, &next);
        total += norm;
        g = next;
        stages.push(GordonStage {
            k,
            level,
            period,
            q_k,
            gamma,
            bound,
            perturbation_norm: norm,
        });
    }
    debug_assert!(total < eps);
    let omega = OdometerPoint::zero(g.level());
    let q_max = stages.last().map(|s| s.q_k as i64).unwrap_or(2);
    let (lo, hi) = (-2 * q_max + 1, 2 * q_max + 1);
    let window = CoefficientWindow::new(lo, g.sample_sequence(&omega, lo, hi)?, radius)?;
    let schedule: Vec<(u32, usize)> = stages.iter().map(|s| (s.k, s.q_k)).collect();
    let certificate = check_gordon(&window, &schedule)?;
    Ok(GordonApproximant {
        sup_distance: sup_distance(f, &g),
        g,
        stages,
        certificate,
        omega,
    })
}
