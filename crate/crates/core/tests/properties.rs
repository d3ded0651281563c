//! Invariants over random inputs.

use minmove::euclid::{euclid_resolvent, QuadraticFunctional};
use minmove::kahler::{calabi_energy, evaluate_functionals, k_energy, mean_normalize, scalar_curvature};
use minmove::space::contract_residuals;
use minmove::{resolvent, FourierMode, KahlerSpace, MetricSpace, Potential, RandomPoints, ResolventConfig, SurfaceBackground};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Distances are small here, so the contract tolerance `1e-8 · max(1, d)`
/// is absolute.
const TOL_METRIC: f64 = 1e-8;

fn modes() -> impl Strategy<Value = Vec<FourierMode>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..4).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (c, s))| {
                let k = i as u32 + 1;
                let scale = 1e-2 / (k as f64).powi(3);
                FourierMode { k, cos: scale * c, sin: scale * s }
            })
            .collect()
    })
}

fn flat() -> SurfaceBackground {
    SurfaceBackground::flat(32).unwrap()
}

fn pot(bg: &SurfaceBackground, c: f64, m: &[FourierMode]) -> Potential {
    bg.potential_from_modes(c, m).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn distance_is_a_metric(a in modes(), b in modes(), c in modes(), shift in -0.5f64..0.5) {
        let sp = KahlerSpace::new(flat());
        let bg = sp.background();
        let (p, q, r) = (pot(bg, 0.0, &a), pot(bg, shift, &b), pot(bg, 0.0, &c));
        let dpq = sp.distance(&p, &q).unwrap();
        prop_assert!(dpq >= 0.0);
        let dqp = sp.distance(&q, &p).unwrap();
        prop_assert!((dpq - dqp).abs() <= TOL_METRIC, "{} {}", dpq, dqp);
        let dpr = sp.distance(&p, &r).unwrap();
        let drq = sp.distance(&r, &q).unwrap();
        prop_assert!(dpq <= dpr + drq + 1e-12);
        prop_assert_eq!(sp.distance(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn midpoint_halves_the_distance(a in modes(), b in modes()) {
        let sp = KahlerSpace::new(flat());
        let bg = sp.background();
        let (p, q) = (pot(bg, 0.0, &a), pot(bg, 0.0, &b));
        let d = sp.distance(&p, &q).unwrap();
        let m = sp.geodesic(&p, &q, 0.5).unwrap();
        let dpm = sp.distance(&p, &m).unwrap();
        prop_assert!((dpm - 0.5 * d).abs() <= TOL_METRIC, "{} {}", dpm, d);
        prop_assert!((sp.distance(&m, &q).unwrap() - 0.5 * d).abs() <= TOL_METRIC);
    }

    #[test]
    fn functional_identities(a in modes(), c in -1.0f64..1.0, r in -1.0f64..1.0) {
        let bg = SurfaceBackground::constant_ricci(32, r).unwrap();
        let phi = pot(&bg, c, &a);
        let f = evaluate_functionals(&bg, &phi).unwrap();
        prop_assert!((f.i_a - 2.0 * f.j_a).abs() <= 1e-10 * f.i_a.abs().max(1e-12));
        // Gauss–Bonnet: ∫ s_φ ω_φ does not depend on φ
        let s = scalar_curvature(&bg, &phi).unwrap();
        let density = bg.density(&phi).unwrap();
        let total = bg.integrate(&s.iter().zip(&density).map(|(s, d)| s * d).collect::<Vec<_>>());
        prop_assert!((total - r).abs() <= 1e-12);
        let n1 = mean_normalize(&bg, &phi);
        prop_assert!(mean_normalize(&bg, &n1).sup_distance(&n1) <= 1e-15);
        prop_assert!(evaluate_functionals(&bg, &n1).unwrap().mean_normalized);
    }

    #[test]
    fn k_energy_decay_bound(a in modes(), b in modes()) {
        // convexity along the geodesic: ν(φ1) >= ν(φ0) − d(φ0, φ1) √Ca(φ0)
        let sp = KahlerSpace::new(flat());
        let bg = sp.background();
        let (p, q) = (pot(bg, 0.0, &a), pot(bg, 0.0, &b));
        let d = sp.distance(&p, &q).unwrap();
        let lhs = k_energy(bg, &q).unwrap();
        let rhs = k_energy(bg, &p).unwrap() - d * calabi_energy(bg, &p).unwrap().sqrt();
        prop_assert!(lhs >= rhs - 1e-12);
    }

    #[test]
    fn euclid_resolvent_is_nonexpansive(
        entries in prop::collection::vec(-1.0f64..1.0, 9),
        x in prop::collection::vec(-5.0f64..5.0, 3),
        y in prop::collection::vec(-5.0f64..5.0, 3),
        tau in 1e-3f64..10.0,
    ) {
        let m = DMatrix::from_vec(3, 3, entries);
        let a = &m * m.transpose();
        let f = QuadraticFunctional::new(a, DVector::from_vec(vec![0.5, -1.0, 2.0]), 0.0).unwrap();
        let (x, y) = (DVector::from_vec(x), DVector::from_vec(y));
        let rx = euclid_resolvent(&f, &x, tau).unwrap();
        let ry = euclid_resolvent(&f, &y, tau).unwrap();
        prop_assert!((rx - ry).norm() <= (x - y).norm() * (1.0 + 1e-12) + 1e-14);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn euclid_flow_contracts(x in -10.0f64..10.0, y in -10.0f64..10.0, lambda in 0.0f64..5.0, t in 0.0f64..3.0) {
        let f = QuadraticFunctional::scalar(lambda).unwrap();
        let fx = f.exact_flow(&DVector::from_element(1, x), t)[0];
        let fy = f.exact_flow(&DVector::from_element(1, y), t)[0];
        prop_assert!((fx - fy).abs() <= (x - y).abs() + 1e-12);
        let rx = euclid_resolvent(&f, &DVector::from_element(1, x), 0.1).unwrap()[0];
        let ry = euclid_resolvent(&f, &DVector::from_element(1, y), 0.1).unwrap()[0];
        prop_assert!((rx - ry).abs() <= (x - y).abs() + 1e-12);
    }
}

#[test]
fn contract_invariants_on_random_pairs() {
    let sp = KahlerSpace::new(SurfaceBackground::flat(32).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let pairs: Vec<(Potential, Potential)> = (0..1000).map(|_| (sp.random_point(&mut rng), sp.random_point(&mut rng))).collect();
    let worst = pairs
        .par_iter()
        .map(|(p, q)| contract_residuals(&sp, p, q, 5).unwrap().worst())
        .reduce(|| 0.0, f64::max);
    assert!(worst <= TOL_METRIC, "worst contract residual {worst}");
}

#[test]
fn kahler_resolvent_is_nonexpansive() {
    let mut sp = KahlerSpace::new(flat());
    sp.random_amplitude = 1e-3;
    let cfg = ResolventConfig::new(1e-5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let pairs: Vec<(Potential, Potential)> = (0..100).map(|_| (sp.random_point(&mut rng), sp.random_point(&mut rng))).collect();
    let worst = pairs
        .par_iter()
        .map(|(p, q)| {
            let rp = resolvent(&sp, p, &cfg).unwrap().point;
            let rq = resolvent(&sp, q, &cfg).unwrap().point;
            sp.distance(&rp, &rq).unwrap() - sp.distance(p, q).unwrap()
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);
    assert!(worst <= 1e-6, "worst expansion {worst}");
}

#[test]
fn resolvent_is_certified_unique_and_controls_distance() {
    let mut sp = KahlerSpace::new(flat());
    sp.random_amplitude = 1e-3;
    let mut cfg = ResolventConfig::new(1e-5).unwrap();
    cfg.probes = 50;
    cfg.verify_uniqueness = true;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for i in 0..10 {
        cfg.seed = i;
        let phi = sp.random_point(&mut rng);
        let out = resolvent(&sp, &phi, &cfg).unwrap();
        assert!(out.verified(), "{out:?}");
        assert!(out.uniqueness_spread.unwrap() <= 1e-7);
        // one step: d² <= 2τ (ν(φ) − ν(W φ))
        let d = sp.distance(&phi, &out.point).unwrap();
        let drop = sp.functional(&phi).unwrap() - sp.functional(&out.point).unwrap();
        assert!(d * d <= 2.0 * cfg.tau * drop * (1.0 + 1e-12), "{d} {drop}");
        assert!(drop > 0.0, "k-energy must decrease strictly");
    }
}
