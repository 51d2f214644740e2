//! Acceptance checks. Every test prints one `criterion N: PASS|FAIL ...` line
//! (run with `--nocapture` to see them) and then asserts the criterion at its
//! stated tolerance.
//!
//! Two criteria do not hold for this model as stated and are `#[ignore]`d with
//! the reason; `cargo test --test acceptance -- --include-ignored --nocapture`
//! runs them and shows the failure.

use std::time::{Duration, Instant};

use coevo::analysis::{
    classify_stability, critical_temperature, find_rest_points, jacobian_analytic_sym3, jacobian_logit,
    jacobian_numeric, max_abs, star_stability_analytic, star_state, symmetric_fixed_point, Classification,
    Configuration, RestPoint,
};
use coevo::dynamics::FlowParams;
use coevo::experiments::{basin_sample, discrete_continuous_gap, sweep_plane, Axis, BasinOptions};
use coevo::state::{logit, LogitCoords};
use coevo::{CoevolState, PayoffSpec, ReducedGame};
use nalgebra::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const COORD: ReducedGame = ReducedGame { a: 5.0, b: -2.0, d: 1.0 };

fn pd(c_iso: f64) -> PayoffSpec {
    PayoffSpec::new([[3.0, 0.0], [5.0, 1.0]], c_iso).unwrap()
}

fn coordination_spec(c_iso: f64) -> PayoffSpec {
    PayoffSpec::new([[4.0, -2.0], [1.0, 0.0]], c_iso).unwrap()
}

/// Prints the verdict line, then fails the test if the criterion failed.
fn report(id: u32, ok: bool, elapsed: Duration, budget: Duration, detail: String) {
    let in_time = elapsed <= budget;
    let verdict = if ok && in_time { "PASS" } else { "FAIL" };
    println!("criterion {id}: {verdict} ({detail}; {:.2} s of {:.0} s)", elapsed.as_secs_f64(), budget.as_secs_f64());
    assert!(ok, "criterion {id} failed: {detail}");
    assert!(in_time, "criterion {id} over budget: {elapsed:?} > {budget:?}");
}

#[test]
fn criterion_01_critical_temperature() {
    let start = Instant::now();
    let tc = critical_temperature(&COORD, 3);
    let elapsed = start.elapsed();
    let ok = tc.is_some_and(|t| (t - 0.36).abs() <= 0.01);
    report(1, ok, elapsed, Duration::from_secs(1), format!("T_c = {tc:?}, expected 0.36 +- 0.01"));
}

#[test]
fn criterion_02_root_count_bifurcation() {
    let start = Instant::now();
    let tc = critical_temperature(&COORD, 3).unwrap();
    let counts = [0.2, 0.5, tc - 0.01, tc + 0.01].map(|t| symmetric_fixed_point(&COORD, 3, t).len());
    let elapsed = start.elapsed();
    let ok = counts == [3, 1, 3, 1];
    report(
        2,
        ok,
        elapsed,
        Duration::from_secs(1),
        format!("roots at T = 0.2, 0.5, T_c - 0.01, T_c + 0.01: {counts:?}"),
    );
}

/// Smallest achievable max deviation between two six-element multisets.
fn multiset_distance(a: &[Complex<f64>], b: &[Complex<f64>]) -> f64 {
    fn go(a: &[Complex<f64>], b: &mut Vec<Complex<f64>>, worst: f64, best: &mut f64) {
        if worst >= *best {
            return;
        }
        let Some((first, rest)) = a.split_first() else {
            *best = worst;
            return;
        };
        for k in 0..b.len() {
            let z = b.swap_remove(k);
            go(rest, b, worst.max((first - z).norm()), best);
            b.push(z);
            let last = b.len() - 1;
            b.swap(k, last);
        }
    }
    let mut best = f64::INFINITY;
    go(a, &mut b.to_vec(), 0.0, &mut best);
    best
}

/// One draw of the closed-form check. `b` is fixed by requiring the uniform
/// network at `p` to be a rest point; draws that push it outside `[-5, 5]`
/// are redrawn.
fn sym3_draw(rng: &mut ChaCha8Rng) -> (f64, ReducedGame, f64, f64) {
    loop {
        let p = rng.gen_range(0.05..0.95);
        let a = rng.gen_range(-10.0..=10.0);
        let d = rng.gen_range(-5.0..=5.0);
        let a22 = rng.gen_range(-3.0..=3.0);
        let t = if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(0.0..=1.0) };
        let b = 2.0 * t * logit(p) - a * p;
        if b.abs() <= 5.0 {
            return (p, ReducedGame::new(a, b, d), a22, t);
        }
    }
}

#[test]
fn criterion_03_closed_form_symmetric_spectrum() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for draw in 0..100 {
        let (p, g, a22, t) = sym3_draw(&mut rng);
        let fp = FlowParams::new(g, a22, t).unwrap();
        let analytic = jacobian_analytic_sym3(p, &g, a22, 0.0, t).unwrap();
        let numeric = if t > 0.0 {
            let mut values = vec![0.0; 3];
            values.extend([logit(p); 3]);
            jacobian_logit(&LogitCoords::new(3, values).unwrap(), &fp).unwrap()
        } else {
            let rp = RestPoint::new(CoevolState::symmetric(3, p).unwrap(), &fp).unwrap();
            jacobian_numeric(&rp, &fp).unwrap()
        };
        let dev = multiset_distance(&analytic, &numeric.eigenvalues().unwrap());
        worst = worst.max(dev);
        if dev > 1e-6 {
            failures.push(format!("draw {draw}: p={p:.3} {g:?} a22={a22:.3} T={t:.3} dev={dev:.2e}"));
        }
    }
    let elapsed = start.elapsed();
    report(
        3,
        failures.is_empty(),
        elapsed,
        Duration::from_secs(10),
        format!("100 draws, worst deviation {worst:.2e}, {} above 1e-6 {failures:?}", failures.len()),
    );
}

#[test]
#[ignore = "fails by construction: rest points with a mixed agent have a nonzero strategy-from-links block"]
fn criterion_04_zero_temperature_block_structure() {
    let start = Instant::now();
    let mut worst_j21 = 0.0f64;
    let mut offenders = 0;
    let mut total = 0;
    let mut worst_trace = 0.0f64;
    for game in [pd(0.0), coordination_spec(0.0)] {
        let fp = FlowParams::from_payoff(&game, 0.0).unwrap();
        for rp in find_rest_points(&fp, 3, 20, 1).unwrap().points {
            let j = jacobian_numeric(&rp, &fp).unwrap();
            let j21 = max_abs(&j.j21());
            total += 1;
            if j21 >= 1e-7 {
                offenders += 1;
            }
            worst_j21 = worst_j21.max(j21);
        }
        for p in symmetric_fixed_point(&fp.game, 3, 0.0) {
            let rp = RestPoint::new(CoevolState::symmetric(3, p).unwrap(), &fp).unwrap();
            worst_trace = worst_trace.max(jacobian_numeric(&rp, &fp).unwrap().j11().trace().abs());
        }
    }
    let elapsed = start.elapsed();
    report(
        4,
        offenders == 0 && worst_trace < 1e-7,
        elapsed,
        Duration::from_secs(5),
        format!(
            "{offenders} of {total} rest points with |J21|_max >= 1e-7 (worst {worst_j21:.3}); \
             symmetric |Tr J11| <= {worst_trace:.1e}"
        ),
    );
}

#[test]
fn criterion_05_mixed_equilibrium_is_unstable() {
    let start = Instant::now();
    let mut verdicts = Vec::new();
    for g in [COORD, ReducedGame::new(-5.0, 2.0, 1.0)] {
        let fp = FlowParams::new(g, 0.0, 0.0).unwrap();
        let p = g.mixed_ne().unwrap();
        let rp = RestPoint::new(CoevolState::symmetric(3, p).unwrap(), &fp).unwrap();
        verdicts.push(classify_stability(&rp, &fp).unwrap().classification);
    }
    let elapsed = start.elapsed();
    let ok = verdicts.iter().all(|v| *v == Classification::Unstable);
    report(5, ok, elapsed, Duration::from_secs(1), format!("coordination / anti-coordination: {verdicts:?}"));
}

#[test]
#[ignore = "fails by construction: an isolated agent earns nothing and keeps its initial mixed strategy"]
fn criterion_06_pure_strategy_outcomes() {
    let start = Instant::now();
    let table = basin_sample(&coordination_spec(0.0), 3, 0.0, 200, 7, &BasinOptions::default()).unwrap();
    let elapsed = start.elapsed();
    let pure = |p: f64| p.abs() < 1e-6 || (p - 1.0).abs() < 1e-6;
    let good = table
        .trial_outcomes
        .iter()
        .filter(|t| t.converged && t.final_state.p().iter().all(|&p| pure(p)))
        .count();
    report(
        6,
        good == 200,
        elapsed,
        Duration::from_secs(30),
        format!("{good} of 200 runs converged with every p pure ({} converged)", table.converged),
    );
}

#[test]
fn criterion_07_configuration_recovery() {
    let start = Instant::now();
    let fp = FlowParams::from_payoff(&pd(0.0), 0.0).unwrap();
    assert!(fp.a22 > 0.0);
    let search = find_rest_points(&fp, 3, 20, 1).unwrap();
    let mut seen = std::collections::BTreeMap::<Configuration, Vec<Classification>>::new();
    for rp in &search.points {
        let r = classify_stability(rp, &fp).unwrap();
        seen.entry(r.matched_configuration).or_default().push(r.classification);
    }
    let elapsed = start.elapsed();
    let has = |c: Configuration, v: Classification| seen.get(&c).is_some_and(|vs| vs.contains(&v));
    let all_four = [
        Configuration::PairPlusIsolated,
        Configuration::Star,
        Configuration::SymmetricUniform,
        Configuration::CyclicNonReciprocated,
    ]
    .iter()
    .all(|c| seen.contains_key(c));
    let symmetric_unstable = seen
        .get(&Configuration::SymmetricUniform)
        .is_some_and(|vs| vs.iter().all(|v| *v == Classification::Unstable));
    let ok = all_four
        && has(Configuration::PairPlusIsolated, Classification::MarginallyStable)
        && has(Configuration::Star, Classification::MarginallyStable)
        && symmetric_unstable;
    let summary: Vec<String> = seen
        .iter()
        .map(|(c, vs)| {
            let m = vs.iter().filter(|v| **v == Classification::MarginallyStable).count();
            let u = vs.iter().filter(|v| **v == Classification::Unstable).count();
            format!("{c}: {m} marginal / {u} unstable")
        })
        .collect();
    report(7, ok, elapsed, Duration::from_secs(5), format!("{} points; {}", search.points.len(), summary.join(", ")));
}

#[test]
fn criterion_08_star_stability() {
    let start = Instant::now();
    let fp = FlowParams::from_payoff(&pd(0.0), 0.0).unwrap();
    assert!(fp.game.b < 0.0 && fp.a22 > 0.0);
    let mut worst_real = f64::NEG_INFINITY;
    let mut worst_diag = 0.0f64;
    let cases: [(usize, Vec<f64>); 4] = [
        (4, vec![1.0 / 3.0; 3]),
        (4, vec![0.6, 0.3, 0.1]),
        (5, vec![0.25; 4]),
        (5, vec![0.4, 0.3, 0.2, 0.1]),
    ];
    for (n, weights) in &cases {
        let s = star_state(*n, 0.0, weights).unwrap();
        let rp = RestPoint::new(s.clone(), &fp).unwrap();
        worst_real = worst_real.max(classify_stability(&rp, &fp).unwrap().max_real);
        let analytic = star_stability_analytic(*n, &fp.game, fp.a22, 0.0, weights).unwrap();
        let numeric = jacobian_numeric(&rp, &fp).unwrap().j22();
        for x in 0..*n {
            // b times the weight the agent's partners put back on it
            let expected: f64 = (0..*n).filter(|&y| y != x).map(|y| fp.game.b * s.reciprocity(x, y)).sum();
            worst_diag = worst_diag
                .max((analytic.j22_diagonal[x] - expected).abs())
                .max((numeric[(x, x)] - expected).abs());
        }
    }
    let elapsed = start.elapsed();
    report(
        8,
        worst_real <= 1e-8 && worst_diag < 1e-8,
        elapsed,
        Duration::from_secs(5),
        format!("max real part {worst_real:.1e}, J22 diagonal deviation {worst_diag:.1e}"),
    );
}

#[test]
fn criterion_09_motif_statistics() {
    let start = Instant::now();
    let table = basin_sample(&pd(0.0), 5, 0.01, 500, 0, &BasinOptions::default()).unwrap();
    let elapsed = start.elapsed();
    let share = table.star_partitions as f64 / table.converged.max(1) as f64;
    let sizes: Vec<usize> = table.motifs_by_size.values().copied().collect();
    let decreasing = sizes.windows(2).all(|w| w[1] < w[0]);
    report(
        9,
        table.converged > 0 && share >= 0.95 && decreasing,
        elapsed,
        Duration::from_secs(300),
        format!(
            "{} of {} converged, star partitions {:.1}%, motifs by size {:?}",
            table.converged,
            table.trials,
            100.0 * share,
            table.motifs_by_size
        ),
    );
}

#[test]
fn criterion_10_discrete_continuous_consistency() {
    let start = Instant::now();
    let report_ = discrete_continuous_gap(&pd(0.0), 3, 0.2, &[0.1, 0.03, 0.01], 20.0, 0).unwrap();
    let elapsed = start.elapsed();
    let gaps: Vec<String> =
        report_.rows.iter().map(|r| format!("alpha {}: {:.4}", r.alpha, r.sup_gap)).collect();
    let spread = report_.first_order_spread();
    report(
        10,
        report_.monotone() && spread <= 3.0,
        elapsed,
        Duration::from_secs(60),
        format!("{}; gap/alpha spread {spread:.2}", gaps.join(", ")),
    );
}

#[test]
fn criterion_11_stability_region_geometry() {
    let start = Instant::now();
    let t = Axis::linspace("temperature", 0.02, 1.0, 50).unwrap().values;
    let ci = Axis::linspace("c_iso", -6.0, 2.0, 401).unwrap().values;
    let result = sweep_plane(&coordination_spec(0.0), 3, &t, &ci).unwrap();
    let elapsed = start.elapsed();
    let region = result.region.unwrap();
    let tc = critical_temperature(&COORD, 3).unwrap();
    let above = region.boundary.iter().any(|row| row.temperature > tc && row.c_iso_max >= row.c_iso_min);
    let (cold, warm) = (region.extent_at(0.02), region.extent_at(0.5));
    report(
        11,
        region.primary.is_some() && above && cold < warm,
        elapsed,
        Duration::from_secs(120),
        format!(
            "{} components; primary reaches T > T_c: {above}; C_I extent {cold:.2} at T = 0.02, {warm:.2} at T = 0.5",
            region.components
        ),
    );
}
