//! Gap-opening constructions of limit-periodic sampling functions.
//!
//! Both iterations start from a level-`N` table `f`, open all of its gaps,
//! and then repeatedly pass to level `N+k` (doubling the period, which
//! creates `2^{N+k−1}` new closed gaps) and open the new gaps with a
//! perturbation `s_k` small enough to keep every earlier gap open:
//!
//! ```text
//! ‖s_k‖ < (ε/2^k)²/72        and        ‖s_k‖ < B_k² / (2^k · 9 · 72)
//! ```
//!
//! where `B_k` is the smallest gap chord seen so far. The AC variant also
//! bounds the `L^t` drift of the spectral density of a fixed vector `u`
//! by `2^{−kt}`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::Error;
use crate::floquet::{self, BandStructure};
use crate::odometer::{lift, sup_distance, SamplingFn};
use crate::specmeasure::{self, DensityField, FiniteVector};

/// Candidates evaluated per perturbation radius.
pub const GROUP_SIZE: usize = 8;

/// Total candidate budget of one gap-opening call.
pub const MAX_ATTEMPTS: usize = 64;

/// Budgets below this are treated as the floating-point floor.
pub const BUDGET_FLOOR: f64 = 1e-15;

/// Fraction of the budget used as perturbation modulus.
const FILL: f64 = 0.999;

/// Shrink steps allowed when enforcing the density drift bound.
const MAX_SHRINK: usize = 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: u32,
    pub level: u32,
    pub period: usize,
    pub perturbation_norm: f64,
    /// `(ε/2^k)²/72`.
    pub budget_eps: f64,
    /// `B_k²/(2^k·9·72)`; absent at stage 0.
    pub budget_gap: Option<f64>,
    /// `B_k`, the smallest gap chord over earlier stages.
    pub prior_min_gap: Option<f64>,
    /// Smallest open-gap chord at the end of the stage.
    pub min_gap: f64,
    pub open_gaps: usize,
    pub total_gaps: usize,
    pub band_measure: f64,
    /// `∫|g^{k−1} − g^k|^t dθ`, AC runs only.
    pub density_drift: Option<f64>,
    pub attempts: usize,
    pub band_edges: Vec<[f64; 2]>,
}

impl StageReport {
    pub fn budget(&self) -> f64 {
        self.budget_gap.map_or(self.budget_eps, |b| b.min(self.budget_eps))
    }

    pub fn within_budget(&self) -> bool {
        self.perturbation_norm < self.budget_eps && self.budget_gap.map_or(true, |b| self.perturbation_norm < b)
    }

    pub fn all_gaps_open(&self) -> bool {
        self.open_gaps == self.total_gaps
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstructionRun {
    pub mode: String,
    pub eps: f64,
    pub seed: u64,
    pub stages: Vec<StageReport>,
    pub final_fn: SamplingFn,
    /// `sup_distance(f, f_K)`.
    pub total_drift: f64,
    /// `ε²/54`.
    pub drift_bound: f64,
    pub t: Option<f64>,
    pub u: Option<FiniteVector>,
}

#[derive(Debug, Clone, Error)]
#[error("stage {stage} failed: {cause}")]
pub struct ConstructError {
    pub stage: u32,
    pub cause: Error,
    pub trail: Vec<StageReport>,
    /// Best candidate of the failing stage and its closed gaps.
    pub best: Option<SamplingFn>,
    pub closed_gaps: Vec<usize>,
}

/// A successful gap-opening perturbation.
#[derive(Debug, Clone)]
pub struct Opened {
    pub f: SamplingFn,
    pub bands: BandStructure,
    pub perturbation_norm: f64,
    pub attempts: usize,
}

struct Candidate {
    f: SamplingFn,
    bands: Option<BandStructure>,
    norm: f64,
}

impl Candidate {
    fn min_gap(&self) -> Option<f64> {
        self.bands.as_ref().filter(|b| b.all_gaps_open()).and_then(|b| b.min_gap().ok())
    }

    fn open_count(&self) -> usize {
        self.bands.as_ref().map_or(0, |b| b.open_gap_count())
    }
}

fn perturb(f: &SamplingFn, radius: f64, rng: &mut ChaCha8Rng) -> Result<SamplingFn, Error> {
    let table: Vec<Complex64> = f
        .table()
        .iter()
        .map(|&v| v + Complex64::from_polar(radius, rng.gen::<f64>() * TAU))
        .collect();
    let max = table.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if max >= 1.0 {
        return Err(Error::OutsideDisk {
            value: Complex64::new(max, 0.0),
        });
    }
    SamplingFn::new(f.level(), table, f.r().max(max))
}

fn evaluate(f: SamplingFn, base: &SamplingFn) -> Candidate {
    let bands = floquet::band_structure(&f.to_periodic()).ok();
    let norm = sup_distance(base, &f);
    Candidate { f, bands, norm }
}

/// Ranked gap-opening candidates: groups of [`GROUP_SIZE`] random-phase
/// perturbations with modulus just under `eps`, the radius halving after
/// every unsuccessful group. Successful candidates of the first successful
/// group are returned by decreasing minimal gap.
fn open_candidates(f: &SamplingFn, eps: f64, seed: u64) -> Result<(Vec<Candidate>, usize), (Error, Option<Candidate>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut radius = FILL * eps;
    let mut attempts = 0;
    let mut best: Option<Candidate> = None;
    while attempts < MAX_ATTEMPTS {
        let fns: Vec<SamplingFn> = (0..GROUP_SIZE)
            .map(|_| perturb(f, radius, &mut rng))
            .collect::<Result<_, _>>()
            .map_err(|e| (e, None))?;
        attempts += GROUP_SIZE;
        let cands: Vec<Candidate> = fns.into_par_iter().map(|g| evaluate(g, f)).collect();
        let mut ok: Vec<Candidate> = Vec::new();
        for c in cands {
            if c.min_gap().is_some() {
                ok.push(c);
            } else if best.as_ref().map_or(true, |b| c.open_count() > b.open_count()) {
                best = Some(c);
            }
        }
        if !ok.is_empty() {
            ok.sort_by(|a, b| b.min_gap().unwrap().total_cmp(&a.min_gap().unwrap()));
            return Ok((ok, attempts));
        }
        radius *= 0.5;
    }
    Err((
        Error::Infeasible {
            stage: 0,
            detail: format!("no candidate opened every gap in {attempts} attempts"),
        },
        best,
    ))
}

/// A table within `eps` of `f` (sup norm) whose spectrum has every gap
/// open; `f` itself when its gaps are already open.
pub fn open_all_gaps(f: &SamplingFn, eps: f64, seed: u64) -> Result<Opened, ConstructError> {
    let fail = |cause: Error, best: Option<Candidate>| ConstructError {
        stage: 0,
        cause,
        trail: Vec::new(),
        closed_gaps: best.as_ref().and_then(|b| b.bands.as_ref()).map(|b| b.closed_gaps()).unwrap_or_default(),
        best: best.map(|b| b.f),
    };
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(fail(
            Error::OutOfRange {
                name: "eps",
                value: eps,
                range: "(0, ∞)",
            },
            None,
        ));
    }
    let bands = floquet::band_structure(&f.to_periodic()).map_err(|e| fail(e, None))?;
    if bands.all_gaps_open() {
        return Ok(Opened {
            f: f.clone(),
            bands,
            perturbation_norm: 0.0,
            attempts: 0,
        });
    }
    if eps < BUDGET_FLOOR {
        return Err(fail(
            Error::Infeasible {
                stage: 0,
                detail: format!("budget {eps:e} is below the floating-point floor"),
            },
            None,
        ));
    }
    let (mut ok, attempts) = open_candidates(f, eps, seed).map_err(|(e, b)| fail(e, b))?;
    let c = ok.remove(0);
    Ok(Opened {
        f: c.f,
        bands: c.bands.expect("successful candidates carry bands"),
        perturbation_norm: c.norm,
        attempts,
    })
}

fn report(
    stage: u32,
    opened: &Opened,
    budget_eps: f64,
    budget_gap: Option<f64>,
    prior_min_gap: Option<f64>,
    density_drift: Option<f64>,
) -> StageReport {
    let bs = &opened.bands;
    StageReport {
        stage,
        level: opened.f.level(),
        period: opened.f.period(),
        perturbation_norm: opened.perturbation_norm,
        budget_eps,
        budget_gap,
        prior_min_gap,
        min_gap: bs.min_gap().unwrap_or(0.0),
        open_gaps: bs.open_gap_count(),
        total_gaps: bs.q,
        band_measure: bs.total_measure(),
        density_drift,
        attempts: opened.attempts,
        band_edges: bs.bands.iter().map(|b| [b.lo, b.hi]).collect(),
    }
}

fn stage_seed(seed: u64, stage: u32) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(stage as u64)
}

struct DriftSpec<'a> {
    u: &'a FiniteVector,
    t: f64,
}

fn check_inputs(eps: f64, t: Option<f64>) -> Result<(), Error> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::OutOfRange {
            name: "eps",
            value: eps,
            range: "(0, ∞)",
        });
    }
    if let Some(t) = t {
        if !(t > 1.0 && t < 2.0) {
            return Err(Error::OutOfRange {
                name: "t",
                value: t,
                range: "(1, 2)",
            });
        }
    }
    Ok(())
}

/// Pick the first candidate (in decreasing-gap order) whose density drift
/// from `prev` meets `2^{−k}`; otherwise shrink the best perturbation by
/// halves until it does.
fn enforce_drift(
    prev: &SamplingFn,
    cands: Vec<Candidate>,
    attempts: usize,
    stage: u32,
    spec: &DriftSpec,
) -> Result<(Opened, f64), (Error, Option<Candidate>)> {
    let target = 2f64.powi(-(stage as i32));
    let prev_field = DensityField::new(&prev.to_periodic(), spec.u).map_err(|e| (e, None))?;
    let drift_of = |g: &SamplingFn| -> Result<f64, Error> {
        let field = DensityField::new(&g.to_periodic(), spec.u)?;
        Ok(specmeasure::density_distance_fields(&prev_field, &field, spec.t, specmeasure::DEFAULT_PANELS)?.value)
    };
    let mut best: Option<Candidate> = None;
    for c in cands {
        let d = drift_of(&c.f).map_err(|e| (e, None))?;
        if d.powf(1.0 / spec.t) <= target {
            let opened = Opened {
                perturbation_norm: c.norm,
                bands: c.bands.expect("successful candidates carry bands"),
                f: c.f,
                attempts,
            };
            return Ok((opened, d));
        }
        if best.is_none() {
            best = Some(c);
        }
    }
    let best = best.expect("at least one candidate");
    let mut scale = 1.0;
    for _ in 0..MAX_SHRINK {
        scale *= 0.5;
        let table: Vec<Complex64> = prev
            .table()
            .iter()
            .zip(best.f.table())
            .map(|(&a, &b)| a + (b - a) * scale)
            .collect();
        let g = SamplingFn::new(prev.level(), table, best.f.r()).map_err(|e| (e, None))?;
        let cand = evaluate(g, prev);
        if cand.norm < BUDGET_FLOOR {
            break;
        }
        if cand.min_gap().is_none() {
            continue;
        }
        let d = drift_of(&cand.f).map_err(|e| (e, None))?;
        if d.powf(1.0 / spec.t) <= target {
            let opened = Opened {
                perturbation_norm: cand.norm,
                bands: cand.bands.expect("checked above"),
                f: cand.f,
                attempts,
            };
            return Ok((opened, d));
        }
    }
    Err((
        Error::Infeasible {
            stage,
            detail: format!("density drift above 2^-{stage} before reaching the floating-point floor"),
        },
        Some(best),
    ))
}

fn iterate(
    f: &SamplingFn,
    eps: f64,
    depth: u32,
    seed: u64,
    drift: Option<DriftSpec>,
) -> Result<ConstructionRun, ConstructError> {
    let mut trail: Vec<StageReport> = Vec::new();
    let fail = |stage: u32, cause: Error, best: Option<Candidate>, trail: &Vec<StageReport>| ConstructError {
        stage,
        cause,
        trail: trail.clone(),
        closed_gaps: best.as_ref().and_then(|b| b.bands.as_ref()).map(|b| b.closed_gaps()).unwrap_or_default(),
        best: best.map(|b| b.f),
    };
    check_inputs(eps, drift.as_ref().map(|d| d.t)).map_err(|e| fail(0, e, None, &trail))?;
    if f.level() + depth > crate::odometer::MAX_LEVEL {
        return Err(fail(
            0,
            Error::OutOfRange {
                name: "stages",
                value: depth as f64,
                range: "level(f) + K <= 24",
            },
            None,
            &trail,
        ));
    }

    let mut current = f.clone();
    let mut min_gaps: Vec<f64> = Vec::new();
    for k in 0..=depth {
        let budget_eps = (eps / 2f64.powi(k as i32)).powi(2) / 72.0;
        let prior = min_gaps.iter().cloned().reduce(f64::min);
        let budget_gap = prior.map(|b| b * b / (2f64.powi(k as i32) * 9.0 * 72.0));
        let budget = budget_gap.map_or(budget_eps, |b| b.min(budget_eps));
        let start = lift(&current, f.level() + k).map_err(|e| fail(k, e, None, &trail))?;
        let bands = floquet::band_structure(&start.to_periodic()).map_err(|e| fail(k, e, None, &trail))?;

        let (opened, drift_value) = if bands.all_gaps_open() {
            let opened = Opened {
                f: start.clone(),
                bands,
                perturbation_norm: 0.0,
                attempts: 0,
            };
            let d = match &drift {
                Some(spec) => Some(
                    specmeasure::density_distance(&current.to_periodic(), &start.to_periodic(), spec.u, spec.t)
                        .map_err(|e| fail(k, e, None, &trail))?,
                ),
                None => None,
            };
            (opened, d)
        } else {
            if budget < BUDGET_FLOOR {
                return Err(fail(
                    k,
                    Error::Infeasible {
                        stage: k,
                        detail: format!("stage budget {budget:e} is below the floating-point floor"),
                    },
                    None,
                    &trail,
                ));
            }
            let (cands, attempts) = open_candidates(&start, budget, stage_seed(seed, k)).map_err(|(e, b)| {
                let e = match e {
                    Error::Infeasible { detail, .. } => Error::Infeasible { stage: k, detail },
                    other => other,
                };
                fail(k, e, b, &trail)
            })?;
            match &drift {
                Some(spec) => {
                    let prev = if k == 0 { f.clone() } else { start.clone() };
                    let (o, d) = enforce_drift(&prev, cands, attempts, k, spec).map_err(|(e, b)| fail(k, e, b, &trail))?;
                    (o, Some(d))
                }
                None => {
                    let c = cands.into_iter().next().expect("nonempty candidate list");
                    let opened = Opened {
                        f: c.f,
                        bands: c.bands.expect("successful candidates carry bands"),
                        perturbation_norm: c.norm,
                        attempts,
                    };
                    (opened, None)
                }
            }
        };
        let rep = report(k, &opened, budget_eps, budget_gap, prior, drift_value);
        min_gaps.push(rep.min_gap);
        trail.push(rep);
        current = opened.f;
    }
    let total_drift = sup_distance(f, &current);
    Ok(ConstructionRun {
        mode: if drift.is_some() { "ac" } else { "cantor" }.into(),
        eps,
        seed,
        stages: trail,
        final_fn: current,
        total_drift,
        drift_bound: eps * eps / 54.0,
        t: drift.as_ref().map(|d| d.t),
        u: drift.map(|d| d.u.clone()),
    })
}

/// Stages `0..=K` of the Cantor-spectrum construction.
pub fn cantor_iterate(f: &SamplingFn, eps: f64, depth: u32, seed: u64) -> Result<ConstructionRun, ConstructError> {
    iterate(f, eps, depth, seed, None)
}

/// Stages `0..=K` with the additional per-stage density drift bound
/// `(∫|g^{k−1} − g^k|^t)^{1/t} ≤ 2^{−k}` for the vector `u`.
pub fn ac_iterate(
    f: &SamplingFn,
    eps: f64,
    depth: u32,
    u: &FiniteVector,
    t: f64,
    seed: u64,
) -> Result<ConstructionRun, ConstructError> {
    iterate(f, eps, depth, seed, Some(DriftSpec { u, t }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn already_open_is_unchanged() {
        let f = SamplingFn::new(1, vec![c(0.3, 0.0), c(-0.2, 0.1)], 0.5).unwrap();
        let out = open_all_gaps(&f, 0.01, 1).unwrap();
        assert_eq!(out.f, f);
        assert_eq!(out.perturbation_norm, 0.0);
    }

    #[test]
    fn opens_constant_half() {
        let f = SamplingFn::new(1, vec![c(0.5, 0.0), c(0.5, 0.0)], 0.6).unwrap();
        assert_eq!(floquet::band_structure(&f.to_periodic()).unwrap().open_gap_count(), 1);
        let out = open_all_gaps(&f, 1e-3, 7).unwrap();
        assert!(out.bands.all_gaps_open());
        assert!(sup_distance(&f, &out.f) < 1e-3);
        assert!(out.bands.min_gap().unwrap() > 0.0);
    }

    #[test]
    fn zero_stages_is_base_stage() {
        let f = SamplingFn::constant(c(0.3, 0.0), 0.5).unwrap();
        let f = lift(&f, 1).unwrap();
        let run = cantor_iterate(&f, 1.0, 0, 4).unwrap();
        assert_eq!(run.stages.len(), 1);
        assert!(run.stages[0].within_budget());
        assert!(run.stages[0].all_gaps_open());
    }

    #[test]
    fn two_stages_satisfy_ledger() {
        let f = lift(&SamplingFn::constant(c(0.3, 0.0), 0.5).unwrap(), 1).unwrap();
        let run = cantor_iterate(&f, 2.0, 1, 9).unwrap();
        for (k, s) in run.stages.iter().enumerate() {
            assert_eq!(s.level, 1 + k as u32);
            assert!(s.within_budget());
            assert!(s.all_gaps_open());
        }
        assert!(run.total_drift < run.drift_bound);
        let again = cantor_iterate(&f, 2.0, 1, 9).unwrap();
        assert_eq!(serde_json::to_string(&run.stages).unwrap(), serde_json::to_string(&again.stages).unwrap());
    }

    #[test]
    fn bad_parameters() {
        let f = SamplingFn::constant(c(0.3, 0.0), 0.5).unwrap();
        assert!(cantor_iterate(&f, -1.0, 1, 0).is_err());
        assert!(ac_iterate(&f, 1.0, 1, &FiniteVector::delta(0), 2.0, 0).is_err());
    }
}
