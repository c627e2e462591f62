//! Property tests for the invariants of each module.

mod common;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

use glkit::glpg::{self, SolveOptions};
use glkit::instance::{self, Theta};
use glkit::linalg;
use glkit::polytope::{self, FeasibleRegion};
use glkit::reference;
use glkit::simulator::{self, Algorithm, Experiment, OssbConfig};
use glkit::structures::{hull, hull_for_reduction, DecisionSet};

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

fn theta_of(v: &[u64]) -> Theta {
    Theta::new(v.to_vec()).unwrap()
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn linear_max_matches_enumeration(seed in any::<u64>(), k in 0usize..5) {
        let mut rng = common::rng(seed);
        let set = common::random_structure(&mut rng, k);
        let a: Vec<f64> = (0..set.dim()).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let best = set.enumerate(200).unwrap().iter().map(|x| x.dot(&a)).fold(f64::NEG_INFINITY, f64::max);
        let x = set.linear_max(&a).unwrap();
        prop_assert!(set.contains(&x));
        prop_assert_eq!(x.dot(&a), best);
    }

    #[test]
    fn budgeted_max_matches_enumeration_for_every_budget(seed in any::<u64>(), k in 0usize..5) {
        let mut rng = common::rng(seed);
        let set = common::random_structure(&mut rng, k);
        let all = set.enumerate(200).unwrap();
        let d = set.dim();
        let a: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..5.0)).collect();
        let u: Vec<u64> = (0..d).map(|_| rng.gen_range(0..=9)).collect();
        let top = set.max_size().unwrap() as i64 * *u.iter().max().unwrap() as i64;
        for s in 0..=top + 1 {
            let best = all.iter().filter(|x| x.dot_int(&u) as i64 >= s).map(|x| x.dot(&a)).reduce(f64::max);
            let got = set.budgeted_linear_max(&a, &u, s, 1000).unwrap();
            prop_assert_eq!(best.is_some(), got.is_some(), "s = {}", s);
            if let (Some(b), Some(x)) = (best, got) {
                prop_assert!(x.dot_int(&u) as i64 >= s);
                prop_assert!((x.dot(&a) - b).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn hull_is_exact(seed in any::<u64>(), k in 0usize..5) {
        let mut rng = common::rng(seed);
        let set = common::random_structure(&mut rng, k);
        let all = set.enumerate(200).unwrap();
        prop_assume!(all.len() <= 50);
        let h = hull(&set, 1000).unwrap();
        for x in &all {
            let z = h.lift(x);
            prop_assert!((h.a() * &z - h.b()).amax() <= 1e-9);
            prop_assert!(z.iter().all(|&v| v >= -1e-12));
        }
        let vertices = match linalg::basic_feasible_solutions(h.a(), h.b(), 1e-9, 100_000) {
            Err(glkit::GlError::TooLarge { .. }) => return Ok(()),
            r => r.unwrap(),
        };
        for v in vertices {
            let bits: Vec<u8> = (0..set.dim()).map(|i| (v[i] > 0.5) as u8).collect();
            prop_assert!((0..set.dim()).all(|i| (v[i] - bits[i] as f64).abs() <= 1e-9), "fractional vertex {:?}", v);
            prop_assert!(all.iter().any(|x| x.bits() == bits.as_slice()), "vertex {:?} outside X", bits);
        }
    }

    #[test]
    fn min_support_completion_is_free_inside_a_support(seed in any::<u64>(), k in 0usize..5) {
        let mut rng = common::rng(seed);
        let set = common::random_structure(&mut rng, k);
        let all = set.enumerate(200).unwrap();
        let x = all.choose(&mut rng).unwrap();
        let mut allowed: Vec<usize> = x.support().collect();
        allowed.extend((0..set.dim()).filter(|_| rng.gen_bool(0.3)));
        let y = set.min_support_completion(&allowed).unwrap();
        prop_assert!(set.contains(&y));
        prop_assert!(y.support().all(|i| allowed.contains(&i)));
    }

    #[test]
    fn suboptimal_items_match_definition(seed in any::<u64>(), k in 0usize..5) {
        let mut rng = common::rng(seed);
        let set = common::random_structure(&mut rng, k);
        let th = common::theta(&mut rng, set.dim(), 9);
        let all = set.enumerate(200).unwrap();
        let opt = all.iter().map(|x| x.dot_int(&th)).max().unwrap();
        let expected: Vec<usize> = (0..set.dim())
            .filter(|&i| all.iter().filter(|x| x.get(i)).map(|x| x.dot_int(&th)).max().unwrap_or(0) < opt)
            .collect();
        prop_assert_eq!(instance::suboptimal_items(&set, &theta_of(&th)).unwrap(), expected);
    }

    #[test]
    fn gap_bounds_and_sandwich(seed in any::<u64>(), k in 0usize..5) {
        let mut rng = common::rng(seed);
        let set = common::random_structure(&mut rng, k);
        let th = common::theta(&mut rng, set.dim(), 9);
        let p = instance::analyze(&set, &theta_of(&th), 1000).unwrap();
        let bound = (p.m as u64 * th.iter().max().unwrap()) as f64;
        prop_assert!(1.0 <= p.delta_min && p.delta_min <= p.delta_max && p.delta_max <= bound);

        let real: Vec<f64> = (0..set.dim()).map(|_| rng.gen_range(0.1..1.0)).collect();
        let eps = rng.gen_range(0.01..0.2);
        let disc = instance::discretize(&real, eps).unwrap();
        let all = set.enumerate(200).unwrap();
        let opt_r = all.iter().map(|x| x.dot(&real)).fold(f64::NEG_INFINITY, f64::max);
        let opt_d = all.iter().map(|x| x.dot_int(disc.values())).max().unwrap() as f64;
        for x in &all {
            let gap_r = opt_r - x.dot(&real);
            let gap_d = eps * (opt_d - x.dot_int(disc.values()) as f64);
            prop_assert!((gap_r - gap_d).abs() <= 2.0 * p.m as f64 * eps + 1e-12);
        }
    }

    #[test]
    fn discretize_is_a_ceiling(real in prop::collection::vec(0.01f64..10.0, 1..8), eps in 0.01f64..1.0) {
        let t = instance::discretize(&real, eps).unwrap();
        for (&v, &k) in real.iter().zip(t.values()) {
            let r = v / eps;
            prop_assert!(k as f64 >= r - 1e-9 * r.max(1.0) && (k as f64) < r + 1.0);
        }
    }

    #[test]
    fn reduction_identity_and_annihilation(seed in any::<u64>(), k in 0usize..5) {
        let mut rng = common::rng(seed);
        let set = common::random_structure(&mut rng, k);
        let th = common::theta(&mut rng, set.dim(), 9);
        let problem = glpg::prepare(&set, &theta_of(&th), 1000).unwrap();
        let all = set.enumerate(200).unwrap();
        prop_assert!(problem.identity_error(&all) <= 1e-9);
        let scale = 1.0 + problem.m.amax();
        for x in &all {
            prop_assert!((&problem.m * problem.lift(x)).amax() <= 1e-12 * scale);
        }
        // End to end: any α ≥ 0 over X gives qᵀw = Σ α_x Δ_x.
        let alphas: Vec<f64> = all.iter().map(|_| rng.gen_range(0.0..2.0)).collect();
        let w = all.iter().zip(&alphas).fold(DVector::zeros(problem.lifted_dim()), |acc, (x, a)| acc + problem.lift(x) * *a);
        let direct: f64 = all.iter().zip(&alphas).map(|(x, a)| a * problem.gap(x)).sum();
        prop_assert!((problem.q.dot(&w) - direct).abs() <= 1e-9 * (1.0 + direct));
    }

    #[test]
    fn projection_is_idempotent_and_nonexpansive(seed in any::<u64>(), k in 0usize..5) {
        let mut rng = common::rng(seed);
        let set = common::random_structure(&mut rng, k);
        let th = common::theta(&mut rng, set.dim(), 9);
        let problem = glpg::prepare(&set, &theta_of(&th), 1000).unwrap();
        let region = FeasibleRegion::new(&problem, &set).unwrap();
        let dp = region.dim();
        let y = DVector::from_fn(dp, |_, _| rng.gen_range(-2.0..3.0));
        let z = DVector::from_fn(dp, |_, _| rng.gen_range(-2.0..3.0));
        let py = polytope::project(&region, &y).unwrap();
        let pz = polytope::project(&region, &z).unwrap();
        prop_assert!(region.infeasibility(&py) <= 1e-9);
        prop_assert!((polytope::project(&region, &py).unwrap() - &py).amax() <= 1e-9);
        prop_assert!((&py - &pz).norm() <= (&y - &z).norm() + 1e-6);
    }

    #[test]
    fn gradient_bound_on_the_region(seed in any::<u64>(), k in 0usize..5) {
        let mut rng = common::rng(seed);
        let set = common::random_structure(&mut rng, k);
        let th = common::theta(&mut rng, set.dim(), 9);
        let problem = glpg::prepare(&set, &theta_of(&th), 1000).unwrap();
        let all = set.enumerate(200).unwrap();
        let x = all.choose(&mut rng).unwrap();
        let w: Vec<f64> = (0..problem.lifted_dim()).map(|_| problem.w_floor * rng.gen_range(1.0..10.0)).collect();
        let g = polytope::violation_gradient(&w, x, &problem.items).unwrap();
        let m = problem.gaps.m as f64;
        let theta_inf = *th.iter().max().unwrap() as f64;
        prop_assert!(g.norm_squared() <= set.dim() as f64 * m.powi(8) * theta_inf.powi(8) * (1.0 + 1e-12));
    }

    #[test]
    fn decomposition_reconstructs(seed in any::<u64>(), k in 0usize..5) {
        let mut rng = common::rng(seed);
        let set = common::random_structure(&mut rng, k);
        let h = hull_for_reduction(&set, 1000).unwrap();
        let mut all = set.enumerate(200).unwrap();
        all.shuffle(&mut rng);
        let n = rng.gen_range(1..=all.len());
        let w = all[..n].iter().fold(DVector::zeros(h.lifted_dim()), |acc, x| acc + h.lift(x) * rng.gen_range(0.01..3.0));
        let dec = glpg::decompose(&set, &h, &w, 1000).unwrap();
        prop_assert!(dec.atoms.len() <= h.lifted_dim());
        prop_assert!(dec.weights.iter().all(|&a| a > 0.0));
        prop_assert!((dec.reconstruct(&h) - &w).amax() <= 1e-6 * w.amax().max(1.0));
    }

    #[test]
    fn regret_traces_are_nondecreasing_and_deterministic(seed in any::<u64>(), algo in 0usize..5) {
        let set = DecisionSet::mset(4, 2).unwrap();
        let algo = [Algorithm::Cucb, Algorithm::CucbSqrt, Algorithm::Ts, Algorithm::Escb, Algorithm::Oracle][algo];
        let exp = Experiment {
            instance_id: "p".into(),
            set: &set,
            theta: vec![0.9, 0.4, 0.7, 0.2],
            algo,
            horizon: 300,
            ossb: OssbConfig::default(),
        };
        let a = simulator::run_one(&exp, seed).unwrap();
        let b = simulator::run_one(&exp, seed).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.cum_regret[0], 0.0);
        prop_assert!(a.cum_regret.windows(2).all(|w| w[1] >= w[0]));
    }
}

proptest! {
    #![proptest_config(config(12))]

    #[test]
    fn solve_is_feasible_and_close(seed in any::<u64>(), k in 0usize..5) {
        let mut rng = common::rng(seed);
        let set = common::random_structure(&mut rng, k);
        let th = common::theta(&mut rng, set.dim(), 9);
        let thf: Vec<f64> = th.iter().map(|&v| v as f64).collect();
        let out = glpg::solve(&set, &theta_of(&th), &SolveOptions::default()).unwrap();
        let c = reference::brute_force_gl(&set, &thf, 1e-9).unwrap().c;
        prop_assert!(out.certified_max_violation <= 1e-9);
        prop_assert!(out.objective <= c + 0.1 && out.objective >= c - 1e-6);
        prop_assert!((out.objective - out.q_objective).abs() <= 1e-6 * (1.0 + out.objective));
        prop_assert!(reference::check_feasible(&set, &thf, &out.rates(set.dim()), 1000).unwrap() <= 1e-9);
    }

    #[test]
    fn closed_form_matches_brute_force(th in prop::collection::vec(1u64..=9, 2..=8)) {
        let thf: Vec<f64> = th.iter().map(|&v| v as f64).collect();
        let set = DecisionSet::mset(th.len(), 1).unwrap();
        let closed = reference::closed_form_1set(&thf).c;
        let brute = reference::brute_force_gl(&set, &thf, 1e-9).unwrap().c;
        prop_assert!((closed - brute).abs() <= 1e-6, "{} vs {}", closed, brute);
    }

    #[test]
    fn brute_force_ignores_enumeration_order(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let set = common::random_explicit(&mut rng);
        let th: Vec<f64> = common::theta(&mut rng, set.dim(), 9).iter().map(|&v| v as f64).collect();
        let mut rows: Vec<Vec<u8>> = set.enumerate(200).unwrap().iter().map(|x| x.bits().to_vec()).collect();
        rows.shuffle(&mut rng);
        let shuffled = DecisionSet::explicit(rows).unwrap();
        let a = reference::brute_force_gl(&set, &th, 1e-9).unwrap().c;
        let b = reference::brute_force_gl(&shuffled, &th, 1e-9).unwrap().c;
        prop_assert!((a - b).abs() <= 1e-6);
    }

    #[test]
    fn lower_bound_and_allocation_are_bounded(seed in any::<u64>(), k in 0usize..5) {
        let mut rng = common::rng(seed);
        let set = common::random_structure(&mut rng, k);
        let th = common::theta(&mut rng, set.dim(), 9);
        let thf: Vec<f64> = th.iter().map(|&v| v as f64).collect();
        let r = reference::brute_force_gl(&set, &thf, 1e-9).unwrap();
        let m = set.max_size().unwrap() as f64;
        let d = set.dim() as f64;
        let inf = *th.iter().max().unwrap() as f64;
        prop_assert!(r.c <= m * m * d * inf + 1e-9);
        prop_assert!(DVector::from_vec(r.w.clone()).norm() <= m.powf(2.5) * d * inf + 1e-9);
    }
}

#[test]
fn inflation_restores_feasibility_on_one_sets() {
    let mut rng = common::rng(77);
    for _ in 0..50 {
        let d = rng.gen_range(2..=8);
        let th = common::one_set_theta(&mut rng, d);
        let set = DecisionSet::mset(d, 1).unwrap();
        let p = instance::analyze(&set, &theta_of(&th), 1000).unwrap();
        let delta2 = rng.gen_range(1e-4..0.5);
        let opt = p.opt_value as f64;
        // w̄ with violation exactly δ₂ on every suboptimal arm.
        let w: Vec<f64> = (0..d)
            .map(|i| if p.in_i(i) { 1.0 / ((opt - th[i] as f64).powi(2) + delta2) } else { 1.0 })
            .collect();
        let all = set.enumerate(100).unwrap();
        let worst = |w: &[f64]| {
            all.iter().map(|x| polytope::violation(w, x, &p.suboptimal, p.gap(&theta_of(&th), x)).unwrap()).fold(f64::NEG_INFINITY, f64::max)
        };
        assert!((worst(&w) - delta2).abs() <= 1e-9);
        let inflated: Vec<f64> = w.iter().map(|v| v * (1.0 + delta2)).collect();
        assert!(worst(&inflated) <= 1e-12);
    }
}

#[test]
fn null_space_basis_is_orthonormal() {
    // Null-space helper used by the projection.
    let m = DMatrix::from_row_slice(2, 4, &[1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0]);
    let n = linalg::null_space(&m, 1e-12);
    assert_eq!(n.ncols(), 2);
    assert!((&m * &n).amax() <= 1e-12);
    assert!((n.transpose() * &n - DMatrix::identity(2, 2)).amax() <= 1e-12);
}
