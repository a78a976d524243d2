//! Shared test helpers: exact MAP oracles for structured graphs and random
//! small models. None of this goes through the message-passing code.

#![allow(dead_code)]

use cluster_mplp::io::{generate, GeneratorKind, GeneratorSpec};
use cluster_mplp::model::{PairwiseModel, Table};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Exact MAP value of a forest by max-product dynamic programming.
pub fn forest_map(model: &PairwiseModel) -> f64 {
    let n = model.num_vars();
    let mut visited = vec![false; n];
    let mut total = 0.0;
    for root in 0..n {
        if visited[root] {
            continue;
        }
        // BFS order with parent edge
        let mut order = vec![(root, None::<usize>)];
        visited[root] = true;
        let mut head = 0;
        while head < order.len() {
            let (v, parent_edge) = order[head];
            head += 1;
            for &e in model.incident_edges(v) {
                if Some(e) == parent_edge {
                    continue;
                }
                let (i, j) = model.edge(e);
                let u = if i == v { j } else { i };
                assert!(!visited[u], "model is not a forest");
                visited[u] = true;
                order.push((u, Some(e)));
            }
        }
        let mut up: Vec<Vec<f64>> = (0..n).map(|v| model.node_potential(v).to_vec()).collect();
        for &(v, parent_edge) in order.iter().rev() {
            let Some(e) = parent_edge else { continue };
            let (i, j) = model.edge(e);
            let p = if i == v { j } else { i };
            let table = model.edge_potential(e);
            let msg: Vec<f64> = (0..model.cardinality(p))
                .map(|xp| {
                    (0..model.cardinality(v))
                        .map(|xv| {
                            let pair = if i == p { table.get(xp, xv) } else { table.get(xv, xp) };
                            pair + up[v][xv]
                        })
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .collect();
            for (a, m) in up[p].iter_mut().zip(msg) {
                *a += m;
            }
        }
        total += up[root].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    }
    total
}

/// Exact MAP value of a `rows x cols` lattice model (variable `r * cols + c`)
/// by dynamic programming over whole-row configurations.
pub fn grid_map(model: &PairwiseModel, rows: usize, cols: usize) -> f64 {
    let k = model.cardinality(0);
    assert!(model.cardinalities().iter().all(|&c| c == k));
    let configs = k.pow(cols as u32);
    let decode = |mut code: usize| -> Vec<usize> {
        let mut s = vec![0; cols];
        for slot in s.iter_mut() {
            *slot = code % k;
            code /= k;
        }
        s
    };
    let row_states: Vec<Vec<usize>> = (0..configs).map(decode).collect();
    let pair = |a: usize, xa: usize, b: usize, xb: usize| -> f64 {
        match model.edge_between(a, b) {
            None => 0.0,
            Some(e) => {
                let t = model.edge_potential(e);
                if model.edge(e).0 == a {
                    t.get(xa, xb)
                } else {
                    t.get(xb, xa)
                }
            }
        }
    };
    let row_energy = |r: usize, s: &[usize]| -> f64 {
        let mut total = 0.0;
        for c in 0..cols {
            let v = r * cols + c;
            total += model.node_potential(v)[s[c]];
            if c + 1 < cols {
                total += pair(v, s[c], v + 1, s[c + 1]);
            }
        }
        total
    };
    let mut value: Vec<f64> = row_states.iter().map(|s| row_energy(0, s)).collect();
    for r in 1..rows {
        value = row_states
            .iter()
            .map(|cur| {
                let best_prev = row_states
                    .iter()
                    .zip(&value)
                    .map(|(prev, v)| {
                        v + (0..cols)
                            .map(|c| pair((r - 1) * cols + c, prev[c], r * cols + c, cur[c]))
                            .sum::<f64>()
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
                best_prev + row_energy(r, cur)
            })
            .collect();
    }
    value.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

/// Random model with at most 12 variables, 2 to 4 states each, a random edge
/// set, and uniform potentials in [-1, 1]. State space stays below 2^16.
pub fn random_small_model(seed: u64) -> PairwiseModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0000);
    loop {
        let n = rng.random_range(3..=12);
        let cards: Vec<usize> = (0..n).map(|_| rng.random_range(2..=4)).collect();
        if cards.iter().map(|&k| k as u128).product::<u128>() > 1 << 16 {
            continue;
        }
        let density = rng.random_range(0.2..0.9);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random_bool(density) {
                    let data = (0..cards[i] * cards[j]).map(|_| rng.random_range(-1.0..=1.0)).collect();
                    edges.push(((i, j), Table::new(cards[i], cards[j], data)));
                }
            }
        }
        let nodes = cards
            .iter()
            .map(|&k| (0..k).map(|_| rng.random_range(-1.0..=1.0)).collect())
            .collect();
        return PairwiseModel::new(cards, nodes, edges).unwrap();
    }
}

/// Trees for the exactness checks: n in 2..=30, 2 to 5 states, potentials in [-1, 1].
pub fn random_tree(seed: u64) -> PairwiseModel {
    let n = 2 + (seed as usize * 7919) % 29;
    generate(&GeneratorSpec {
        kind: GeneratorKind::Tree,
        n,
        states: 2,
        states_max: Some(5),
        coupling: (-1.0, 1.0),
        field: (-1.0, 1.0),
        seed,
        ..GeneratorSpec::default()
    })
    .unwrap()
}

pub const GRID_SIDE: usize = 6;

/// The 6x6 binary spin-glass family used by the grid pursuit checks.
pub fn spin_glass(seed: u64) -> PairwiseModel {
    generate(&spin_glass_spec(seed)).unwrap()
}

pub fn spin_glass_spec(seed: u64) -> GeneratorSpec {
    GeneratorSpec {
        kind: GeneratorKind::SpinGlassGrid,
        rows: GRID_SIDE,
        cols: GRID_SIDE,
        states: 2,
        coupling: (0.0, 1.0),
        field: (-0.5, 0.5),
        seed,
        ..GeneratorSpec::default()
    }
}

pub fn anti_triangle() -> PairwiseModel {
    let anti = Table::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
    PairwiseModel::new(
        vec![2; 3],
        vec![vec![0.0; 2]; 3],
        vec![((0, 1), anti.clone()), ((0, 2), anti.clone()), ((1, 2), anti)],
    )
    .unwrap()
}
