//! Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero when
//! any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use nalgebra::DVector;
use rand::seq::SliceRandom;
use rand::Rng;

use glkit::cli::allocation_violation;
use glkit::glpg::{self, SolveOptions};
use glkit::instance::{self, Theta};
use glkit::polytope::{self, FeasibleRegion};
use glkit::reference;
use glkit::simulator::{self, Algorithm, Environment, Experiment, OssbConfig};
use glkit::structures::{hull_for_reduction, Decision, DecisionSet};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: String) -> Outcome {
    if cond {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn theta_of(v: &[u64]) -> Theta {
    Theta::new(v.to_vec()).unwrap()
}

fn c1_closed_form() -> Outcome {
    let mut rng = common::rng(101);
    let (mut worst_gap, mut worst_viol, mut worst_time) = (f64::NEG_INFINITY, f64::NEG_INFINITY, 0.0f64);
    for _ in 0..20 {
        let d = rng.gen_range(2..=8);
        let th = common::one_set_theta(&mut rng, d);
        let set = DecisionSet::mset(d, 1).unwrap();
        let c = reference::closed_form_1set(&th.iter().map(|&v| v as f64).collect::<Vec<_>>()).c;
        let start = Instant::now();
        let out = glpg::solve(&set, &theta_of(&th), &SolveOptions::default()).map_err(|e| format!("{th:?}: {e}"))?;
        worst_time = worst_time.max(start.elapsed().as_secs_f64());
        if out.objective < c - 1e-9 || out.objective > c + 0.1 {
            return Err(format!("θ={th:?}: objective {} outside [{c}, {}]", out.objective, c + 0.1));
        }
        worst_gap = worst_gap.max(out.objective - c);
        worst_viol = worst_viol.max(out.certified_max_violation);
    }
    check(
        worst_viol <= 1e-9 && worst_time <= 10.0,
        format!("max objective - C = {worst_gap:.2e}, max violation = {worst_viol:.1e}, max time = {worst_time:.2}s"),
    )
}

fn c2_brute_force() -> Outcome {
    let mut rng = common::rng(202);
    let (mut worst_gap, mut worst_viol, mut worst_time) = (0.0f64, f64::NEG_INFINITY, 0.0f64);
    for k in 0..30 {
        let set = match k % 3 {
            0 => common::random_mset(&mut rng),
            1 => common::random_dag(&mut rng, 200),
            _ => common::random_matching(&mut rng, 200),
        };
        let th = common::theta(&mut rng, set.dim(), 9);
        let thf: Vec<f64> = th.iter().map(|&v| v as f64).collect();
        let c = reference::brute_force_gl(&set, &thf, 1e-9).map_err(|e| e.to_string())?.c;
        let start = Instant::now();
        let out = glpg::solve(&set, &theta_of(&th), &SolveOptions::default()).map_err(|e| format!("{}: {e}", set.kind()))?;
        worst_time = worst_time.max(start.elapsed().as_secs_f64());
        let viol = allocation_violation(&set, &thf, &out.atoms, &out.weights).map_err(|e| e.to_string())?;
        let gap = (out.objective - c).abs();
        if gap > 0.1 || viol > 1e-9 {
            return Err(format!("{} θ={th:?}: glpg {} vs C {c}, violation {viol:e}", set.kind(), out.objective));
        }
        worst_gap = worst_gap.max(gap);
        worst_viol = worst_viol.max(viol);
    }
    check(
        worst_time <= 60.0,
        format!("max |glpg - C| = {worst_gap:.2e}, max violation = {worst_viol:.1e}, max time = {worst_time:.2}s"),
    )
}

fn c3_oracle_equivalence() -> Outcome {
    let mut rng = common::rng(303);
    let mut feasible = 0;
    for trial in 0..1000 {
        let set = common::random_structure(&mut rng, trial);
        let all = set.enumerate(200).map_err(|e| e.to_string())?;
        let d = set.dim();
        let a: Vec<f64> = (0..d).map(|_| (rng.gen_range(-300..=500) as f64) / 100.0).collect();
        let u: Vec<u64> = (0..d).map(|_| rng.gen_range(0..=9)).collect();
        let top = set.max_size().unwrap() as i64 * 9;
        let s = rng.gen_range(-3..=top + 2);
        let best = all
            .iter()
            .filter(|x| x.dot_int(&u) as i64 >= s)
            .map(|x| x.dot(&a))
            .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |b| b.max(v))));
        let got = set.budgeted_linear_max(&a, &u, s, 1000).map_err(|e| e.to_string())?;
        match (best, got) {
            (None, None) => {}
            (Some(b), Some(x)) => {
                feasible += 1;
                let ok = set.contains(&x) && x.dot_int(&u) as i64 >= s && (x.dot(&a) - b).abs() <= 1e-9;
                if !ok {
                    return Err(format!("trial {trial} ({}): value {} vs {b}", set.kind(), x.dot(&a)));
                }
            }
            (b, g) => return Err(format!("trial {trial} ({}): feasibility {} vs {}", set.kind(), b.is_some(), g.is_some())),
        }
    }
    Ok(format!("1000 trials agree ({feasible} feasible)"))
}

fn c4_identity() -> Outcome {
    let mut rng = common::rng(404);
    let mut worst = 0.0f64;
    let mut count = 0;
    for k in 0..100 {
        let set = if k % 6 == 5 { DecisionSet::mset(rng.gen_range(2..=8), 1).unwrap() } else { common::random_structure(&mut rng, k) };
        let th = common::theta(&mut rng, set.dim(), 9);
        let problem = glpg::prepare(&set, &theta_of(&th), 1000).map_err(|e| format!("{}: {e}", set.kind()))?;
        let all = set.enumerate(1000).unwrap();
        worst = worst.max(problem.identity_error(&all));
        count += all.len();
    }
    check(worst <= 1e-9, format!("max |q'lift(x) - gap| = {worst:.1e} over {count} decisions"))
}

fn c5_projection() -> Outcome {
    let mut rng = common::rng(505);
    let mut lines = Vec::new();
    for (kind, k) in [("mset", 0), ("path_dag", 1), ("matching", 2), ("perfect_matching", 3), ("explicit", 4)] {
        let (mut feas, mut idem, mut expand) = (0.0f64, 0.0f64, f64::NEG_INFINITY);
        for _ in 0..10 {
            let set = common::random_structure(&mut rng, k);
            let th = common::theta(&mut rng, set.dim(), 9);
            let problem = glpg::prepare(&set, &theta_of(&th), 1000).map_err(|e| e.to_string())?;
            let region = FeasibleRegion::new(&problem, &set).map_err(|e| e.to_string())?;
            let dp = region.dim();
            for _ in 0..50 {
                let y: DVector<f64> = DVector::from_fn(dp, |_, _| rng.gen_range(-1.0..2.0));
                let z: DVector<f64> = DVector::from_fn(dp, |_, _| rng.gen_range(-1.0..2.0));
                let py = polytope::project(&region, &y).map_err(|e| format!("{kind}: {e}"))?;
                let pz = polytope::project(&region, &z).map_err(|e| format!("{kind}: {e}"))?;
                let ppy = polytope::project(&region, &py).map_err(|e| format!("{kind}: {e}"))?;
                feas = feas.max(region.infeasibility(&py)).max(region.infeasibility(&pz));
                idem = idem.max((&ppy - &py).amax());
                expand = expand.max((&py - &pz).norm() - (&y - &z).norm());
            }
        }
        if feas > 1e-9 || idem > 1e-9 || expand > 1e-6 {
            return Err(format!("{kind}: infeasibility {feas:.1e}, idempotence {idem:.1e}, expansion {expand:.1e}"));
        }
        lines.push(format!("{kind} (feas {feas:.0e}, idem {idem:.0e}, expansion {expand:.0e})"));
    }
    Ok(format!("500 projections per region type: {}", lines.join(", ")))
}

fn c6_decomposition() -> Outcome {
    let mut rng = common::rng(606);
    let mut worst = 0.0f64;
    for k in 0..100 {
        let set = common::random_structure(&mut rng, k);
        let hull = hull_for_reduction(&set, 1000).map_err(|e| e.to_string())?;
        let mut all = set.enumerate(1000).unwrap();
        all.shuffle(&mut rng);
        let n = rng.gen_range(1..=set.dim().min(all.len()));
        let mut w = DVector::zeros(hull.lifted_dim());
        for x in &all[..n] {
            w += hull.lift(x) * rng.gen_range(0.1..2.0);
        }
        let dec = glpg::decompose(&set, &hull, &w, 1000).map_err(|e| format!("{}: {e}", set.kind()))?;
        let err = (dec.reconstruct(&hull) - &w).amax() / w.amax();
        if err > 1e-6 || dec.atoms.len() > hull.lifted_dim() || dec.weights.iter().any(|&a| a <= 0.0) {
            return Err(format!("{}: error {err:.1e}, {} atoms for d' = {}", set.kind(), dec.atoms.len(), hull.lifted_dim()));
        }
        worst = worst.max(err);
    }
    let set = DecisionSet::mset(3, 2).unwrap();
    let hull = hull_for_reduction(&set, 1000).unwrap();
    // w = (1, 0.5, 0.5) on the original coordinates.
    let w = hull.lift(&Decision::new(vec![1, 1, 0]).unwrap()) * 0.5 + hull.lift(&Decision::new(vec![1, 0, 1]).unwrap()) * 0.5;
    let dec = glpg::decompose(&set, &hull, &w, 1000).map_err(|e| e.to_string())?;
    let err = (dec.reconstruct(&hull) - &w).amax();
    check(
        err <= 1e-6 && dec.atoms.len() <= hull.lifted_dim(),
        format!("100 random cone points, max relative error {worst:.1e}; (1, 0.5, 0.5) on m-set(3,2) error {err:.1e}"),
    )
}

fn c7_discretization() -> Outcome {
    let mut rng = common::rng(707);
    let mut worst_ratio = 0.0f64;
    let mut done = 0;
    while done < 10 {
        let d = rng.gen_range(2..=5);
        let theta: Vec<f64> = (0..d).map(|_| rng.gen_range(0.1..1.0)).collect();
        let set = DecisionSet::mset(d, 1).unwrap();
        let Some(dmin) = instance::real_delta_min(&set, &theta, 1000).unwrap() else { continue };
        if dmin < 0.05 {
            continue;
        }
        let eps = dmin / 2.0 * rng.gen_range(0.3..1.0);
        let sol = glpg::solve_real(&set, &theta, eps, &SolveOptions::default()).map_err(|e| e.to_string())?;
        if !sol.check.certified {
            return Err(format!("ε = {eps} not certified for Δmin = {dmin}"));
        }
        let out = &sol.output;
        let viol = allocation_violation(&set, &theta, &out.atoms, &out.weights).map_err(|e| e.to_string())?;
        let c = reference::brute_force_gl(&set, &theta, 1e-9).map_err(|e| e.to_string())?.c;
        let ratio = out.objective / c;
        let bound = (1.0 + 4.0 * eps / dmin).powi(4);
        if viol > 1e-9 || ratio > bound {
            return Err(format!("θ={theta:?} ε={eps}: violation {viol:e}, ratio {ratio} > {bound}"));
        }
        worst_ratio = worst_ratio.max(ratio / bound);
        done += 1;
    }
    Ok(format!("10 instances feasible; max ratio/bound = {worst_ratio:.3}"))
}

fn c8_gradient() -> Outcome {
    let mut rng = common::rng(808);
    let mut worst = 0.0f64;
    for k in 0..100 {
        let set = common::random_structure(&mut rng, k);
        let all = set.enumerate(1000).unwrap();
        let x = all.choose(&mut rng).unwrap().clone();
        let d = set.dim();
        let items: Vec<usize> = (0..d).filter(|_| rng.gen_bool(0.6)).collect();
        let w: Vec<f64> = (0..d).map(|_| rng.gen_range(0.05..3.0)).collect();
        let delta = rng.gen_range(0.0..5.0);
        let g = polytope::violation_gradient(&w, &x, &items).map_err(|e| e.to_string())?;
        let mut fd = DVector::zeros(d);
        for i in 0..d {
            let h = 1e-6 * w[i];
            let (mut wp, mut wm) = (w.clone(), w.clone());
            wp[i] += h;
            wm[i] -= h;
            let fp = polytope::violation(&wp, &x, &items, delta).unwrap();
            let fm = polytope::violation(&wm, &x, &items, delta).unwrap();
            fd[i] = (fp - fm) / (2.0 * h);
        }
        let scale = g.norm().max(fd.norm());
        let err = if scale == 0.0 { 0.0 } else { (&g - &fd).norm() / scale };
        worst = worst.max(err);
    }
    check(worst <= 1e-5, format!("max relative error {worst:.1e} over 100 pairs"))
}

fn c9_simulator() -> Outcome {
    let theta = vec![3.0, 1.0, 2.0];
    let mut env = Environment::new(theta.clone(), 9);
    let n = 10_000;
    let draws: Vec<Vec<f64>> = (0..n).map(|_| env.draw()).collect();
    let mut worst = 0.0f64;
    for i in 0..theta.len() {
        let mean = draws.iter().map(|y| y[i]).sum::<f64>() / n as f64;
        let var = draws.iter().map(|y| (y[i] - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        worst = worst.max((var - 0.5).abs() / 0.5);
    }
    let set = DecisionSet::mset(3, 1).unwrap();
    let mut identical = true;
    for algo in [Algorithm::Cucb, Algorithm::Ts] {
        let exp = Experiment {
            instance_id: "onesets".into(),
            set: &set,
            theta: theta.clone(),
            algo,
            horizon: 5000,
            ossb: OssbConfig::default(),
        };
        let csv = |seed| {
            let traces = simulator::run_experiment(&exp, 3, seed).unwrap();
            let mut buf = Vec::new();
            simulator::write_csv(&traces, &mut buf).unwrap();
            buf
        };
        identical &= csv(7) == csv(7);
    }
    check(
        worst <= 0.1 && identical,
        format!("max relative variance error {worst:.3}; same-seed CSVs identical: {identical}"),
    )
}

fn c10_regret_ordering() -> Outcome {
    let set = DecisionSet::mset(3, 1).unwrap();
    let horizon = 100_000;
    let run = |algo| {
        let exp = Experiment {
            instance_id: "onesets".into(),
            set: &set,
            theta: vec![3.0, 1.0, 2.0],
            algo,
            horizon,
            ossb: OssbConfig::default(),
        };
        simulator::run_experiment(&exp, 50, 0).map(|t| simulator::mean_final_regret(&t))
    };
    let start = Instant::now();
    let ossb = run(Algorithm::Ossb).map_err(|e| e.to_string())?;
    let cucb = run(Algorithm::Cucb).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let ratio = ossb / (horizon as f64).ln();
    check(
        ossb <= cucb && ratio >= 1.5 / 3.0 && ratio <= 1.5 * 3.0 && secs <= 600.0,
        format!("mean final regret ossb {ossb:.2} vs cucb {cucb:.2}; ossb/ln T = {ratio:.3}; {secs:.0}s"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("closed-form agreement on 1-sets", c1_closed_form),
        ("brute-force agreement", c2_brute_force),
        ("budgeted oracle equivalence", c3_oracle_equivalence),
        ("reduction identity", c4_identity),
        ("projection correctness", c5_projection),
        ("decomposition", c6_decomposition),
        ("discretization", c7_discretization),
        ("gradient check", c8_gradient),
        ("simulator calibration", c9_simulator),
        ("regret ordering", c10_regret_ordering),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let id = format!("criterion {}", k + 1);
        if !filter.is_empty() && !filter.iter().any(|p| id.ends_with(&format!(" {p}")) || name.contains(p.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("PASS {id} ({name}): {msg} [{secs:.1}s]"),
            Err(msg) => {
                failed += 1;
                println!("FAIL {id} ({name}): {msg} [{secs:.1}s]");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
