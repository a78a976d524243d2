//! Acceptance suite. Each criterion prints one PASS/FAIL line; the process
//! exits non-zero if any criterion fails.

#![allow(clippy::approx_constant)]

mod common;

use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use cluster_mplp::io::{
    generate, parse_native, parse_uai, write_native, GeneratorKind, GeneratorSpec, DEFAULT_ZERO_FLOOR,
};
use cluster_mplp::messages::{Block, MessageState};
use cluster_mplp::model::PairwiseModel;
use cluster_mplp::oracle::{brute_force_map, DEFAULT_LIMIT};
use cluster_mplp::pursuit::{
    add_cluster, candidates, enumerate_triangles, score_cluster, solve, solve_random_schedule, Candidate,
    CandidateKind, Cluster, SolveConfig, SolveOutcome, Status,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BOUND_SLACK: f64 = 1e-9;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Exact MAP value: enumeration when affordable, otherwise the forest DP.
fn tree_oracle(model: &PairwiseModel) -> f64 {
    let dp = common::forest_map(model);
    if model.state_space_size() <= 1 << 16 {
        let bf = brute_force_map(model, DEFAULT_LIMIT).unwrap().energy;
        assert!((bf - dp).abs() < 1e-9, "tree oracles disagree: {bf} vs {dp}");
    }
    dp
}

fn criterion_1() -> Outcome {
    let config = SolveConfig {
        gap_tolerance: 1e-6,
        convergence_threshold: 1e-9,
        max_rounds: 0,
        ..SolveConfig::default()
    };
    let mut slowest = Duration::ZERO;
    for seed in 0..50 {
        let model = common::random_tree(seed);
        let exact = tree_oracle(&model);
        let start = Instant::now();
        let out = solve(&model, &config).map_err(|e| e.to_string())?;
        let took = start.elapsed();
        slowest = slowest.max(took);
        check(out.status == Status::Certified, || format!("tree {seed}: status {}", out.status))?;
        check(out.added.is_empty(), || format!("tree {seed}: clusters added"))?;
        check(out.dual - exact <= 1e-6 && exact - out.energy <= 1e-6, || {
            format!("tree {seed}: dual {} energy {} oracle {exact}", out.dual, out.energy)
        })?;
        check(took < Duration::from_secs(1), || format!("tree {seed}: took {took:?}"))?;
    }
    Ok(format!("50 trees certified within 1e-6, slowest {slowest:?}"))
}

/// Runs pass 1, then block-by-block passes interleaved with cluster
/// additions, checking the bound, per-block monotonicity and warm-start
/// invariance. Returns the number of blocks checked.
fn monitored_pursuit(model: &PairwiseModel, exact: f64, label: &str) -> Result<usize, String> {
    let mut model = model.clone();
    let mut state = MessageState::new(&model, &[]).unwrap();
    state.run_pass(&model);
    let mut dual = state.dual_objective(&model);
    check(dual >= exact - BOUND_SLACK, || format!("{label}: first-pass dual {dual} < MAP {exact}"))?;
    let mut blocks = 0;
    for _round in 0..4 {
        for _ in 0..8 {
            let schedule: Vec<Block> = (0..model.num_edges())
                .map(Block::Edge)
                .chain((0..state.clusters().len()).map(Block::Cluster))
                .collect();
            for block in schedule {
                state.update_block(&model, block);
                let next = state.dual_objective(&model);
                check(next <= dual + BOUND_SLACK, || format!("{label}: {block:?} raised dual {dual} -> {next}"))?;
                check(next >= exact - BOUND_SLACK, || format!("{label}: dual {next} below MAP {exact}"))?;
                dual = next;
                blocks += 1;
            }
        }
        let mut scored: Vec<(Candidate, f64)> = candidates(&model, &state, CandidateKind::Both, 10_000)
            .into_iter()
            .map(|c| {
                let d = score_cluster(&state, &model, &c);
                (c, d)
            })
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1));
        for (c, _) in scored.into_iter().take(3) {
            if add_cluster(&mut state, &mut model, &c).is_err() {
                continue;
            }
            let after = state.dual_objective(&model);
            check(after == dual, || format!("{label}: add_cluster moved dual {dual} -> {after}"))?;
        }
    }
    Ok(blocks)
}

fn criterion_2() -> Outcome {
    let mut blocks = 0;
    for seed in 0..100 {
        let model = common::random_small_model(seed);
        let exact = brute_force_map(&model, DEFAULT_LIMIT).unwrap().energy;
        blocks += monitored_pursuit(&model, exact, &format!("model {seed}"))?;
    }
    Ok(format!("100 models, {blocks} block updates checked"))
}

/// Adds a triplet over the first path `i - j - k` of a tree, chording `i - k`.
fn tree_triplet_is_noop(model: &PairwiseModel, label: &str) -> Result<bool, String> {
    let Some((i, j, k)) = (0..model.num_vars()).find_map(|j| {
        let nb: Vec<usize> = model.neighbors(j).collect();
        (nb.len() >= 2).then(|| (nb[0], j, nb[1]))
    }) else {
        return Ok(false);
    };
    let mut model = model.clone();
    let mut state = MessageState::new(&model, &[]).unwrap();
    for _ in 0..5 {
        state.run_pass(&model);
    }
    let before = state.dual_objective(&model);
    model = model.add_zero_chord(i, k).map_err(|e| e.to_string())?;
    state.sync_edges(&model);
    let c = Cluster::new(&model, [i, j, k]).map_err(|e| e.to_string())?;
    add_cluster(&mut state, &mut model, &Candidate::Triplet(c)).map_err(|e| e.to_string())?;
    let after = state.dual_objective(&model);
    check(after == before, || format!("{label}: dual {before} -> {after}"))?;
    Ok(true)
}

fn criterion_3() -> Outcome {
    let mut additions = 0;
    for seed in 0..50 {
        if tree_triplet_is_noop(&common::random_tree(seed), &format!("tree {seed}"))? {
            additions += 1;
        }
    }
    // on the criterion-2 models every addition is checked inside the monitor
    for seed in 0..100 {
        let model = common::random_small_model(seed);
        let exact = brute_force_map(&model, DEFAULT_LIMIT).unwrap().energy;
        monitored_pursuit(&model, exact, &format!("model {seed}"))?;
        additions += 1;
    }
    Ok(format!("{additions} instances, every addition left the dual bit-identical"))
}

fn criterion_4() -> Outcome {
    let mut states = 0;
    let mut seed = 0u64;
    let mut worst: f64 = 0.0;
    while states < 50 {
        seed += 1;
        check(seed < 10_000, || "ran out of seeds with a positive-score triplet".to_string())?;
        let model = generate(&GeneratorSpec {
            kind: GeneratorKind::RandomComplete,
            n: 4 + (seed as usize % 5),
            states: 2,
            states_max: Some(3),
            seed,
            ..GeneratorSpec::default()
        })
        .unwrap();
        let mut state = MessageState::new(&model, &[]).unwrap();
        let mut prev = f64::INFINITY;
        for _ in 0..1000 {
            state.run_pass(&model);
            let g = state.dual_objective(&model);
            if prev - g < 1e-10 {
                break;
            }
            prev = g;
        }
        let best = enumerate_triangles(&model)
            .into_iter()
            .map(|c| (c, score_cluster(&state, &model, &Candidate::Triplet(c))))
            .max_by(|a, b| a.1.total_cmp(&b.1));
        let Some((cluster, d)) = best else { continue };
        if d <= 1e-6 {
            continue;
        }
        let before = state.dual_objective(&model);
        let mut m = model.clone();
        add_cluster(&mut state, &mut m, &Candidate::Triplet(cluster)).unwrap();
        state.update_cluster(&m, &cluster).unwrap();
        let decrease = before - state.dual_objective(&m);
        worst = worst.max((decrease - d).abs());
        check((decrease - d).abs() <= 1e-9, || {
            format!("seed {seed}: decrease {decrease} vs d(c) {d}")
        })?;
        states += 1;
    }
    Ok(format!("50 converged states, max |decrease - d(c)| = {worst:e}"))
}

fn criterion_5() -> Outcome {
    let model = common::anti_triangle();
    let exact = brute_force_map(&model, DEFAULT_LIMIT).unwrap().energy;
    check(exact == 2.0, || format!("oracle MAP {exact}"))?;
    let start = Instant::now();
    let edges_only = solve(&model, &SolveConfig { max_rounds: 0, ..SolveConfig::default() }).unwrap();
    check((edges_only.dual - 3.0).abs() <= 1e-6, || format!("edges-only dual {}", edges_only.dual))?;
    let out = solve(&model, &SolveConfig::default()).unwrap();
    let took = start.elapsed();
    check(out.status == Status::Certified, || format!("status {}", out.status))?;
    check(out.added.len() == 1, || format!("{} clusters added", out.added.len()))?;
    check((out.dual - 2.0).abs() <= 1e-4, || format!("final dual {}", out.dual))?;
    check((out.energy - exact).abs() <= 1e-4, || format!("decoded {}", out.energy))?;
    check(took < Duration::from_secs(1), || format!("took {took:?}"))?;
    Ok(format!("plateau {:.9}, certified at {:.6} with one triplet in {took:?}", edges_only.dual, out.dual))
}

struct GridInstance {
    seed: u64,
    model: PairwiseModel,
    exact: f64,
}

/// The first 20 seeds whose edges-only relaxation leaves a gap above 1e-4.
fn screened_grids() -> Vec<GridInstance> {
    let edges_only = SolveConfig { max_rounds: 0, ..SolveConfig::default() };
    let mut out = Vec::new();
    let mut seed = 0;
    while out.len() < 20 {
        let model = common::spin_glass(seed);
        let run = solve(&model, &edges_only).unwrap();
        if run.gap() > 1e-4 {
            let exact = common::grid_map(&model, common::GRID_SIDE, common::GRID_SIDE);
            out.push(GridInstance { seed, model, exact });
        }
        seed += 1;
        assert!(seed < 1000, "not enough frustrated grids");
    }
    out
}

fn grid_config() -> SolveConfig {
    SolveConfig {
        candidate_kind: CandidateKind::Squares,
        max_rounds: 200,
        ..SolveConfig::default()
    }
}

fn certified_against(out: &SolveOutcome, exact: f64, tol: f64) -> bool {
    out.status == Status::Certified && out.energy >= exact - tol
}

fn criterion_6(grids: &[GridInstance]) -> Outcome {
    let config = grid_config();
    let mut certified = 0;
    for g in grids {
        let out = solve(&g.model, &config).unwrap();
        for dual in out.trace.duals_after_first_pass() {
            check(dual >= g.exact - BOUND_SLACK, || {
                format!("grid seed {}: dual {dual} below MAP {}", g.seed, g.exact)
            })?;
        }
        if out.status == Status::Certified {
            check(certified_against(&out, g.exact, config.gap_tolerance), || {
                format!("grid seed {}: certified {} but MAP {}", g.seed, out.energy, g.exact)
            })?;
            certified += 1;
        }
    }
    let rate = certified as f64 / grids.len() as f64;
    check(rate >= 0.8, || format!("certified {certified}/{}", grids.len()))?;
    Ok(format!("certified {certified}/{} (rate {rate:.2} >= 0.80)", grids.len()))
}

fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

fn criterion_7(grids: &[GridInstance]) -> Outcome {
    let config = grid_config();
    let cost = |out: &SolveOutcome| {
        if out.status == Status::Certified {
            out.added.len() as f64
        } else {
            f64::INFINITY
        }
    };
    let mut scored = Vec::new();
    let mut random = Vec::new();
    for (idx, g) in grids.iter().enumerate() {
        scored.push(cost(&solve(&g.model, &config).unwrap()));
        random.push(cost(&solve_random_schedule(&g.model, &config, idx as u64).unwrap()));
    }
    let (ms, mr) = (median(scored), median(random));
    check(ms <= mr, || format!("score median {ms} > random median {mr}"))?;
    Ok(format!("median clusters to certificate: score {ms}, random {mr}"))
}

fn criterion_8() -> Outcome {
    let mut checked = 0;
    for seed in 0..1000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = common::random_small_model(seed + 10_000);
        let clusters = enumerate_triangles(&model);
        let mut state = MessageState::new(&model, &clusters).unwrap();
        let zero = PairwiseModel::zeros(model.cardinalities().to_vec(), model.edges()).unwrap();
        let mut zero_state = MessageState::new(&zero, &clusters).unwrap();
        state.run_pass(&model);
        zero_state.run_pass(&zero);
        let blocks = model.num_edges() + clusters.len();
        for _ in 0..10 {
            let pick = rng.random_range(0..blocks.max(1));
            let block = if pick < model.num_edges() {
                Block::Edge(pick)
            } else {
                Block::Cluster(pick - model.num_edges())
            };
            if blocks == 0 {
                break;
            }
            state.update_block(&model, block);
            let once = state.dual_objective(&model);
            state.update_block(&model, block);
            let twice = state.dual_objective(&model);
            check((once - twice).abs() <= 1e-9, || {
                format!("seed {seed}: repeating {block:?} moved dual {once} -> {twice}")
            })?;
            zero_state.update_block(&zero, block);
            check(zero_state.all_entries().all(|v| v == 0.0), || format!("seed {seed}: zero model grew messages"))?;
            check(zero_state.dual_objective(&zero) == 0.0, || format!("seed {seed}: zero model dual non-zero"))?;
            checked += 1;
        }
    }
    Ok(format!("1000 sequences, {checked} repeated blocks"))
}

fn criterion_9() -> Outcome {
    let mut round_trips = 0;
    let kinds = [
        GeneratorKind::Tree,
        GeneratorKind::GridPotts,
        GeneratorKind::SpinGlassGrid,
        GeneratorKind::RandomComplete,
    ];
    for kind in kinds {
        for seed in 0..10 {
            let spec = GeneratorSpec {
                kind,
                n: 3 + seed as usize,
                rows: 2 + seed as usize % 3,
                cols: 3 + seed as usize % 2,
                states: 2,
                states_max: Some(4),
                seed,
                ..GeneratorSpec::default()
            };
            let model = generate(&spec).unwrap();
            let back = parse_native(&write_native(&model)).map_err(|e| e.to_string())?;
            check(back == model, || format!("{kind} seed {seed}: round trip differs"))?;
            round_trips += 1;
        }
    }
    let uai = include_str!("fixtures/three_var.uai");
    let model = parse_uai(uai, DEFAULT_ZERO_FLOOR).map_err(|e| e.to_string())?;
    // reference values computed independently (math.log in Python)
    let nodes: [&[f64]; 3] = [
        &[-1.2039728043259361, -0.35667494393873245],
        &[-1.6094379124341003, -0.6931471805599453, -1.2039728043259361],
        &[-0.5108256237659907, -0.916290731874155],
    ];
    let e01 = [
        -2.3025850929940455,
        -0.10536051565782628,
        -1.3862943611198906,
        -0.916290731874155,
        -1000000.0,
        0.4054651081081644,
    ];
    let e12 = [
        0.6931471805599453,
        -2.0794415416798357,
        -0.6931471805599453,
        1.0986122886681098,
        0.0,
        -0.2876820724517809,
    ];
    let close = |a: &[f64], b: &[f64]| a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12);
    for (v, expected) in nodes.iter().enumerate() {
        check(close(model.node_potential(v), expected), || format!("node {v} mismatch"))?;
    }
    check(model.edges() == [(0, 1), (1, 2)], || format!("edges {:?}", model.edges()))?;
    check(close(model.edge_potential(0).data(), &e01), || "edge (0,1) mismatch".to_string())?;
    check(close(model.edge_potential(1).data(), &e12), || "edge (1,2) mismatch".to_string())?;
    Ok(format!("{round_trips} native round trips exact; UAI fixture matches to 1e-12"))
}

fn main() {
    let mut failures = 0;
    let mut report = |name: &str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(f))
            .unwrap_or_else(|p| {
                let msg = p
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                Err(format!("panicked: {msg}"))
            });
        let took = start.elapsed();
        match result {
            Ok(detail) => println!("PASS {name}: {detail} [{took:.2?}]"),
            Err(detail) => {
                failures += 1;
                println!("FAIL {name}: {detail} [{took:.2?}]");
            }
        }
    };
    report("criterion 1 (tree exactness)", &mut criterion_1);
    report("criterion 2 (upper bound and monotonicity)", &mut criterion_2);
    report("criterion 3 (warm-start no-op)", &mut criterion_3);
    report("criterion 4 (exact d(c) realization)", &mut criterion_4);
    report("criterion 5 (frustrated triangle closure)", &mut criterion_5);
    let grids = screened_grids();
    report("criterion 6 (grid cluster pursuit)", &mut || criterion_6(&grids));
    report("criterion 7 (schedule ordering)", &mut || criterion_7(&grids));
    report("criterion 8 (idempotence and homogeneity)", &mut criterion_8);
    report("criterion 9 (format round trip)", &mut criterion_9);
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
