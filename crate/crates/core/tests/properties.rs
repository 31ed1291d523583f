use std::f64::consts::TAU;

use lpcmv::cmv::assemble_window;
use lpcmv::construct::{ac_iterate, cantor_iterate};
use lpcmv::floquet::{self, band_structure, floquet_matrix};
use lpcmv::oracle::eigenangles_dense;
use lpcmv::specmeasure::{psi_of, DensityField, FiniteVector, DEFAULT_PANELS};
use lpcmv::{lift, make_periodic, rho, sup_distance, Complex64, OdometerPoint, PeriodicSeq, SamplingFn, VerblunskyValue};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn coefficient() -> impl Strategy<Value = Complex64> {
    (0.0f64..0.85, 0.0f64..TAU).prop_map(|(m, t)| Complex64::from_polar(m, t))
}

fn periodic(q: usize) -> impl Strategy<Value = PeriodicSeq> {
    proptest::collection::vec(coefficient(), q).prop_map(|v| make_periodic(&v, 0.9).unwrap())
}

fn even_periodic() -> impl Strategy<Value = PeriodicSeq> {
    prop_oneof![periodic(2), periodic(4), periodic(6), periodic(8)]
}

fn table(level: u32) -> impl Strategy<Value = SamplingFn> {
    proptest::collection::vec(coefficient(), 1usize << level)
        .prop_map(move |v| SamplingFn::new(level, v, 0.9).unwrap())
}

fn angle_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

#[test]
fn rho_identity_on_a_disk_sweep() {
    for j in 0..1000 {
        let m = 0.99 * ((j as f64 + 0.5) / 1000.0).sqrt();
        let a = Complex64::from_polar(m, 2.399963 * j as f64);
        let r = rho(VerblunskyValue::new(a).unwrap()).get();
        assert!((r * r + a.norm_sqr() - 1.0).abs() < 1e-14);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn periodic_eval_is_exact(seq in even_periodic()) {
        let q = seq.period() as i64;
        for n in -3 * q..=3 * q {
            prop_assert_eq!(seq.eval(n + q), seq.eval(n));
        }
    }

    #[test]
    fn orbit_visits_every_coset_once(level in 0u32..9, start in 0u64..512) {
        let p = 1u64 << level;
        let omega = OdometerPoint::from_index(level, start % p);
        let mut seen = vec![false; p as usize];
        for n in 0..p as i64 {
            let idx = omega.translate(n).index() as usize;
            prop_assert!(!seen[idx]);
            seen[idx] = true;
        }
    }

    #[test]
    fn sampling_commutes_with_lift(f in table(2), extra in 0u32..4, idx in 0u64..64, lo in -50i64..0, len in 0i64..80) {
        let g = lift(&f, f.level() + extra).unwrap();
        let omega = OdometerPoint::from_index(g.level(), idx % (1 << g.level()));
        prop_assert_eq!(
            f.sample_sequence(&omega, lo, lo + len).unwrap(),
            g.sample_sequence(&omega, lo, lo + len).unwrap()
        );
    }

    #[test]
    fn sup_distance_is_a_metric(f in table(2), g in table(3), h in table(1)) {
        prop_assert_eq!(sup_distance(&f, &f), 0.0);
        prop_assert_eq!(sup_distance(&f, &g), sup_distance(&g, &f));
        prop_assert!(sup_distance(&f, &h) <= sup_distance(&f, &g) + sup_distance(&g, &h) + 1e-15);
        prop_assert!(sup_distance(&f, &lift(&f, 4).unwrap()) == 0.0);
    }

    #[test]
    fn window_interior_is_unitary(seq in even_periodic(), half in 8i64..14, shift in -6i64..6) {
        let dim = 2 * half as usize;
        let offset = 2 * shift;
        let win = seq.window(offset - 4, offset + dim as i64 + 4);
        let w = assemble_window(&win, offset, dim).unwrap().to_dense();
        let g = w.adjoint() * &w;
        for i in 4..dim - 4 {
            for j in 4..dim - 4 {
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((g[(i, j)] - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn discriminant_is_real_and_bands_are_monotone(seq in even_periodic()) {
        let bs = band_structure(&seq).unwrap();
        prop_assert!(bs.discriminant.max_imag < 1e-10);
        prop_assert_eq!(bs.bands.len(), seq.period());
        prop_assert!(bs.total_measure() <= TAU + 1e-12);
        for b in &bs.bands {
            let vals: Vec<f64> = (0..=65).map(|j| bs.discriminant.at(b.lo + b.width() * j as f64 / 65.0)).collect();
            for w in vals.windows(2) {
                if b.increasing {
                    prop_assert!(w[1] >= w[0] - 1e-12);
                } else {
                    prop_assert!(w[1] <= w[0] + 1e-12);
                }
            }
        }
    }

    #[test]
    fn eigenangles_match_dense_roots(seq in even_periodic(), theta in 0.0f64..TAU) {
        let bs = band_structure(&seq).unwrap();
        let mut fast = floquet::eigenangles(&bs, theta);
        let mut dense = eigenangles_dense(&floquet_matrix(&seq, theta).entries);
        fast.sort_by(f64::total_cmp);
        dense.sort_by(f64::total_cmp);
        prop_assert_eq!(fast.len(), dense.len());
        for a in &fast {
            let d = dense.iter().map(|&b| angle_dist(*a, b)).fold(f64::INFINITY, f64::min);
            prop_assert!(d < 1e-9, "discrepancy {d}");
        }
    }

    #[test]
    fn floquet_matrix_is_unitary(seq in even_periodic(), theta in 0.0f64..TAU) {
        let e = floquet_matrix(&seq, theta).entries;
        let q = e.nrows();
        let g = e.adjoint() * &e - DMatrix::<Complex64>::identity(q, q);
        prop_assert!(g.iter().all(|v| v.norm() < 1e-12));
    }

    #[test]
    fn psi_is_consistent(seq in even_periodic(), pos in 0.05f64..0.95) {
        let bs = band_structure(&seq).unwrap();
        let b = bs.bands[0];
        let z = Complex64::from_polar(1.0, b.lo + pos * b.width());
        let psi = psi_of(z, &bs.discriminant).unwrap();
        prop_assert!((psi.cos() - bs.discriminant.at(z.arg()) / 2.0).abs() < 1e-12);
    }
}

#[test]
fn normalization_for_two_point_source() {
    let u = FiniteVector::new(0, vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 1.0)]).unwrap();
    for vals in [vec![c(0.3, 0.1), c(-0.2, 0.4)], vec![c(0.5, 0.0), c(0.1, -0.3), c(-0.4, 0.2), c(0.0, 0.6)]] {
        let seq = make_periodic(&vals, 0.8).unwrap();
        let field = DensityField::new(&seq, &u).unwrap();
        let mass = field.total_mass(DEFAULT_PANELS).value;
        assert!((mass - 2.0).abs() < 1e-4, "{mass}");
    }
}

#[test]
fn construction_ledger_and_refinement() {
    let f = SamplingFn::new(1, vec![c(0.6, 0.0), c(0.0, 0.6)], 0.95).unwrap();
    let u = FiniteVector::delta(0);
    let short = ac_iterate(&f, 1.0, 1, &u, 1.5, 7).unwrap();
    let long = ac_iterate(&f, 1.0, 2, &u, 1.5, 7).unwrap();
    assert_eq!(short.stages[..], long.stages[..2]);
    for (k, s) in long.stages.iter().enumerate() {
        assert_eq!(s.level, f.level() + k as u32);
        assert!(s.all_gaps_open());
        assert!(s.perturbation_norm == 0.0 || s.within_budget());
        let drift = s.density_drift.unwrap();
        assert!(drift.powf(1.0 / 1.5) <= 0.5f64.powi(k as i32));
    }
    let step = sup_distance(&short.final_fn, &long.final_fn);
    assert_eq!(step, long.stages[2].perturbation_norm);
    assert!(long.total_drift < long.drift_bound);

    let again = ac_iterate(&f, 1.0, 2, &u, 1.5, 7).unwrap();
    assert_eq!(serde_json::to_string(&again.stages).unwrap(), serde_json::to_string(&long.stages).unwrap());
}

#[test]
fn cantor_zero_stages_is_a_single_gap_opening() {
    let f = SamplingFn::new(1, vec![c(0.3, 0.0); 2], 0.5).unwrap();
    let run = cantor_iterate(&f, 0.5, 0, 3).unwrap();
    assert_eq!(run.stages.len(), 1);
    let s = &run.stages[0];
    assert!(s.all_gaps_open() && s.total_gaps == 2);
    assert!(s.perturbation_norm < 0.25 / 72.0);
    assert!(s.band_measure > 0.0);
}
