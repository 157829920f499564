//! End-to-end acceptance checks. Each test prints one pass/fail line;
//! run with `--nocapture` to see them. Scenario fixtures shared between
//! criteria are built once.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fieldrec::analysis::{
    decay_exponent, error_series, oracle_max_divergence, scalar_system_first_kind,
    scalar_system_second_kind,
};
use fieldrec::attack::{
    delta_a_enumerated, delta_a_selector_closed_form, resilience_check, AttackSpec, Disturbance,
};
use fieldrec::field_model::{AgentMeasurement, FieldSystem, FieldVector, InterestSet};
use fieldrec::graph::CommGraph;
use fieldrec::linalg::SparseVec;
use fieldrec::recovery::{run, Algorithm, HyperParams, SimulationTrace, SnapshotPolicy};
use fieldrec::scenario::{generate_grid_scenario, GridScenarioParams};

fn report(num: usize, name: &str, ok: bool, detail: &str) {
    println!(
        "criterion {} ({}): {} [{}]",
        num,
        name,
        if ok { "pass" } else { "FAIL" },
        detail
    );
    assert!(ok, "criterion {} ({}) failed: {}", num, name, detail);
}

// ---------------------------------------------------------------- fixtures

/// 3x3 agents over a 6x6 cell grid, every agent measuring every cell
/// once; the center agent's 36 measurements all carry a +0.02 offset.
/// Redundancy 8 per cell gives lambda_min = 8 > Delta = 6.
struct SmallGridFixture {
    sys: FieldSystem<f64>,
    attack: AttackSpec<f64>,
    trace: SimulationTrace<f64>,
}

fn small_grid() -> &'static SmallGridFixture {
    static F: OnceLock<SmallGridFixture> = OnceLock::new();
    F.get_or_init(|| {
        let params = GridScenarioParams {
            side: 6,
            agent_rows: 3,
            agent_cols: 3,
            measurement_window: 12,
            interest_window: 12,
            attacked_count: 0,
            attacked_ids: None,
            override_value: 255.0,
            field: None,
            seed: 2,
        };
        let g = generate_grid_scenario(&params).expect("small grid generates");
        let attack = AttackSpec::additive_on_agent(&g.sys, 4, 0.02).unwrap();
        let trace = run(
            &g.sys,
            &g.graph,
            Some(&attack),
            HyperParams::defaults(),
            5000,
            Algorithm::Resilient,
            SnapshotPolicy::All,
        )
        .expect("small grid run");
        SmallGridFixture {
            sys: g.sys,
            attack,
            trace,
        }
    })
}

/// 10x10 agents over a 115x115 cell grid, windows 37/73, 11 agents
/// overridden to 255, 200 iterations, both algorithms.
struct MediumGridFixture {
    resilient: SimulationTrace<f64>,
    cirfe: SimulationTrace<f64>,
}

fn medium_params(attacked: usize) -> GridScenarioParams<f64> {
    GridScenarioParams {
        side: 115,
        agent_rows: 10,
        agent_cols: 10,
        measurement_window: 37,
        interest_window: 73,
        attacked_count: attacked,
        attacked_ids: None,
        override_value: 255.0,
        field: None,
        seed: 11,
    }
}

fn medium_attacked() -> &'static MediumGridFixture {
    static F: OnceLock<MediumGridFixture> = OnceLock::new();
    F.get_or_init(|| {
        let g = generate_grid_scenario(&medium_params(11)).expect("medium grid generates");
        let hp = HyperParams::defaults();
        let run_one = |alg| {
            run(
                &g.sys,
                &g.graph,
                Some(&g.attack),
                hp,
                200,
                alg,
                SnapshotPolicy::None,
            )
            .expect("medium run")
        };
        MediumGridFixture {
            resilient: run_one(Algorithm::Resilient),
            cirfe: run_one(Algorithm::Cirfe),
        }
    })
}

fn medium_clean() -> &'static MediumGridFixture {
    static F: OnceLock<MediumGridFixture> = OnceLock::new();
    F.get_or_init(|| {
        let g = generate_grid_scenario(&medium_params(0)).expect("clean grid generates");
        let hp = HyperParams::defaults();
        let run_one = |alg| {
            run(&g.sys, &g.graph, None, hp, 2500, alg, SnapshotPolicy::None).expect("clean run")
        };
        MediumGridFixture {
            resilient: run_one(Algorithm::Resilient),
            cirfe: run_one(Algorithm::Cirfe),
        }
    })
}

// ------------------------------------------------------- random instances

/// Random instance: interests cover the measured columns by construction.
fn random_instance(seed: u64) -> (FieldSystem<f64>, CommGraph, Option<AttackSpec<f64>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.gen_range(2..=30usize);
    let n = rng.gen_range(2..=10usize);
    let field = FieldVector::new((0..m).map(|_| rng.gen_range(-10.0..10.0)).collect()).unwrap();

    let mut agents = Vec::new();
    let mut interests = Vec::new();
    for _ in 0..n {
        let size = rng.gen_range(1..=m);
        let mut comps: Vec<usize> = (0..m).collect();
        for i in (1..comps.len()).rev() {
            comps.swap(i, rng.gen_range(0..=i));
        }
        comps.truncate(size);
        let interest = InterestSet::new(comps.clone()).unwrap();
        let rows = (0..rng.gen_range(0..=4usize))
            .map(|_| {
                loop {
                    let nnz = rng.gen_range(1..=3usize.min(size));
                    let mut entries: Vec<(usize, f64)> = (0..nnz)
                        .map(|_| (comps[rng.gen_range(0..size)], rng.gen_range(-1.0..1.0)))
                        .collect();
                    entries.sort_by_key(|e| e.0);
                    entries.dedup_by_key(|e| e.0);
                    let norm: f64 = entries.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt();
                    if norm > 1e-6 {
                        for e in &mut entries {
                            e.1 /= norm;
                        }
                        return SparseVec::new(m, entries).unwrap();
                    }
                }
            })
            .collect();
        agents.push(AgentMeasurement::new(m, rows).unwrap());
        interests.push(interest);
    }
    let sys = FieldSystem::new(field, agents, interests).unwrap();

    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(0.5) {
                edges.push((a, b));
            }
        }
    }
    let graph = CommGraph::new(n, edges).unwrap();

    let mut entries = BTreeMap::new();
    for p in 0..sys.total_measurements() {
        if rng.gen_bool(0.3) {
            let mut a = 0.0;
            while a == 0.0 {
                a = rng.gen_range(-50.0..50.0);
            }
            entries.insert(p, Disturbance::Additive(a));
        }
    }
    let attack = if entries.is_empty() {
        None
    } else {
        Some(AttackSpec::new(entries).unwrap())
    };
    (sys, graph, attack)
}

// -------------------------------------------------------------- criteria

#[test]
fn criterion_1_oracle_equivalence() {
    let hp = HyperParams::defaults();
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let (sys, graph, attack) = random_instance(1000 + i);
        for alg in [Algorithm::Resilient, Algorithm::Cirfe] {
            let d = oracle_max_divergence(&sys, &graph, attack.as_ref(), &hp, 100, alg)
                .expect("oracle comparison runs");
            worst = worst.max(d);
        }
    }
    report(
        1,
        "per-agent vs stacked-update oracle",
        worst < 1e-9,
        &format!("max divergence {:.3e} over 20 instances x 100 rounds", worst),
    );
}

#[test]
fn criterion_2_small_grid_convergence() {
    let f = small_grid();
    let res = resilience_check(&f.sys, &f.attack.compromised()).unwrap();
    let final_rmse = *f.trace.rmse.last().unwrap();
    let exponent = decay_exponent(&f.trace.rmse, 2500).unwrap();
    let ok = res.delta.exact
        && res.holds
        && (res.lambda_min_clean - 8.0).abs() < 1e-9
        && (res.delta.value - 6.0).abs() < 1e-9
        && final_rmse < 1e-2
        && exponent <= -0.05;
    report(
        2,
        "small-grid convergence under attack",
        ok,
        &format!(
            "lambda_min {:.3}, Delta {:.3}, holds {}, rmse@5000 {:.3e}, trailing exponent {:.3}",
            res.lambda_min_clean, res.delta.value, res.holds, final_rmse, exponent
        ),
    );
}

#[test]
fn criterion_3_reduced_scale_comparison() {
    let f = medium_attacked();
    let rf = *f.resilient.rmse.last().unwrap();
    let cf = *f.cirfe.rmse.last().unwrap();
    let c50 = f.cirfe.rmse[50];
    let cmin = f.cirfe.rmse[150..]
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let ok = rf <= 0.2 * cf && cmin > 0.1 * c50;
    report(
        3,
        "resilient vs baseline under override attack",
        ok,
        &format!(
            "final rmse resilient {:.3} vs baseline {:.3} (ratio {:.3}); baseline floor ratio {:.3}",
            rf,
            cf,
            rf / cf,
            cmin / c50
        ),
    );
}

#[test]
fn criterion_4_clean_data_agreement() {
    let f = medium_clean();
    let r2000 = f.resilient.rmse[2000];
    let c2000 = f.cirfe.rmse[2000];
    let mut diff: f64 = 0.0;
    for (a, b) in f.resilient.final_states.iter().zip(&f.cirfe.final_states) {
        for (x, y) in a.iter().zip(b) {
            diff = diff.max((x - y).abs());
        }
    }
    let sat_end = f.resilient.last_saturated;
    let ok = r2000 < 1e-2 && c2000 < 1e-2 && diff < 1e-9 && sat_end.map_or(true, |t| t < 2000);
    report(
        4,
        "clean-data sanity",
        ok,
        &format!(
            "rmse@2000 resilient {:.3e}, baseline {:.3e}; final trajectory gap {:.3e}; \
             saturation last active at t = {:?}",
            r2000, c2000, diff, sat_end
        ),
    );
}

#[test]
fn criterion_5_first_kind_scalar_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(123);
    let mut fails = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let c1 = rng.gen_range(0.1..3.0);
        let c2 = rng.gen_range(0.1..3.0);
        let d1 = rng.gen_range(0.05..0.25);
        let d2 = rng.gen_range(d1 + 0.62..0.95);
        let w0 = rng.gen_range(0.0..5.0);
        let w = scalar_system_first_kind(c1, d1, c2, d2, w0, 100_000).unwrap();
        let d0 = 0.5 * (d2 - d1);
        let mut peak: f64 = 0.0;
        let mut last = 0.0;
        for (t, &v) in w.iter().enumerate() {
            last = ((t + 1) as f64).powf(d0) * v.abs();
            peak = peak.max(last);
        }
        worst = worst.max(last / peak);
        if last >= 0.05 * peak {
            fails += 1;
        }
    }
    report(
        5,
        "first-kind scalar system decay",
        fails == 0,
        &format!("{} of 50 draws failed; worst final/peak ratio {:.4}", fails, worst),
    );
}

#[test]
fn criterion_6_second_kind_scalar_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(123);
    let mut fails = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let d3 = rng.gen_range(0.02..0.06);
        let d4 = rng.gen_range(d3 + 0.62..0.74);
        let d1 = rng.gen_range(d4 + 0.02..0.88 - d3);
        let c1 = rng.gen_range(0.8..1.5);
        let c3 = rng.gen_range(0.8..2.0);
        let c4 = rng.gen_range(0.1..2.0);
        let c5 = rng.gen_range(0.5..1.5);
        let w0 = rng.gen_range(0.0..3.0);
        let w = scalar_system_second_kind(c1, d1, c3, c4, c5, d3, d4, w0, 100_000).unwrap();
        let d0 = 0.5 * (d4 - d3);
        let mut peak: f64 = 0.0;
        let mut last = 0.0;
        for (t, &v) in w.iter().enumerate() {
            last = ((t + 1) as f64).powf(d0) * v.abs();
            peak = peak.max(last);
        }
        worst = worst.max(last / peak);
        if last >= 0.05 * peak {
            fails += 1;
        }
    }
    report(
        6,
        "second-kind scalar system decay",
        fails == 0,
        &format!("{} of 50 draws failed; worst final/peak ratio {:.4}", fails, worst),
    );
}

#[test]
fn criterion_7_consensus_decay_and_triangle_bound() {
    let f = small_grid();
    let series = error_series(&f.trace, &f.sys).unwrap();
    let exponent = decay_exponent(&series.consensus, 2500).unwrap();
    let triangle = series.triangle_bound_holds(1e-9);
    let ok = exponent <= -0.05 && triangle;
    report(
        7,
        "consensus decay and triangle bound",
        ok,
        &format!(
            "consensus trailing exponent {:.3}; triangle bound holds at all {} snapshots: {}",
            exponent,
            series.iterations.len(),
            triangle
        ),
    );
}

#[test]
fn criterion_8_leverage_arithmetic() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let m = rng.gen_range(1..=6usize);
        let count = rng.gen_range(1..=12usize);
        let rows: Vec<SparseVec<f64>> = (0..count)
            .map(|_| SparseVec::new(m, vec![(rng.gen_range(0..m), 1.0)]).unwrap())
            .collect();
        let refs: Vec<&SparseVec<f64>> = rows.iter().collect();
        let enumerated = delta_a_enumerated(&refs).unwrap();
        let closed = delta_a_selector_closed_form(&refs).unwrap();
        worst = worst.max((enumerated - closed).abs());
    }

    // rows {e1, e1, e2, e2}, first row compromised: equality, so the
    // strict resilience inequality must not hold
    let field = FieldVector::new(vec![1.0f64, 1.0]).unwrap();
    let sel = |c: usize| SparseVec::new(2, vec![(c, 1.0f64)]).unwrap();
    let agents = vec![AgentMeasurement::new(2, vec![sel(0), sel(0), sel(1), sel(1)]).unwrap()];
    let interests = vec![InterestSet::new(vec![0, 1]).unwrap()];
    let sys = FieldSystem::new(field, agents, interests).unwrap();
    let res = resilience_check(&sys, &[0usize].into_iter().collect()).unwrap();

    let ok = worst < 1e-10
        && !res.holds
        && (res.lambda_min_clean - 1.0).abs() < 1e-12
        && (res.delta.value - 1.0).abs() < 1e-12;
    report(
        8,
        "leverage-constant arithmetic",
        ok,
        &format!(
            "max |enumeration - closed form| {:.2e} over 100 instances; \
             equality case lambda_min {:.3}, Delta {:.3}, holds {}",
            worst, res.lambda_min_clean, res.delta.value, res.holds
        ),
    );
}

#[test]
fn criterion_9_saturation_invariant() {
    let excesses = [
        ("small grid", small_grid().trace.max_saturation_excess),
        ("attacked grid", medium_attacked().resilient.max_saturation_excess),
        ("clean grid", medium_clean().resilient.max_saturation_excess),
    ];
    let worst = excesses
        .iter()
        .filter_map(|(_, e)| *e)
        .fold(f64::NEG_INFINITY, f64::max);
    let ok = excesses.iter().all(|(_, e)| e.map_or(true, |v| v <= 0.0));
    report(
        9,
        "innovation saturation bound",
        ok,
        &format!(
            "max |gained innovation| - threshold = {:.3e} across the grid runs",
            worst
        ),
    );
}
