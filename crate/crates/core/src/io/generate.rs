//! Seeded synthetic instances.
//!
//! All randomness comes from `ChaCha8Rng::seed_from_u64(seed)`, so a spec
//! reproduces the same model on every platform.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{PairwiseModel, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorKind {
    /// Uniformly random labeled tree on `n` nodes.
    Tree,
    /// 4-connected lattice with Potts couplings `w * [x_i == x_j]`.
    GridPotts,
    /// 4-connected lattice with couplings `+J` on agreement and `-J` on
    /// disagreement, where `J` has a random sign.
    SpinGlassGrid,
    /// Complete graph with independent uniform table entries.
    RandomComplete,
}

impl FromStr for GeneratorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tree" => Ok(GeneratorKind::Tree),
            "grid_potts" => Ok(GeneratorKind::GridPotts),
            "spin_glass_grid" => Ok(GeneratorKind::SpinGlassGrid),
            "random_complete" => Ok(GeneratorKind::RandomComplete),
            other => Err(format!(
                "unknown generator kind `{other}` (tree, grid_potts, spin_glass_grid, random_complete)"
            )),
        }
    }
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GeneratorKind::Tree => "tree",
            GeneratorKind::GridPotts => "grid_potts",
            GeneratorKind::SpinGlassGrid => "spin_glass_grid",
            GeneratorKind::RandomComplete => "random_complete",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    /// Variable count for `Tree` and `RandomComplete`.
    pub n: usize,
    pub rows: usize,
    pub cols: usize,
    pub states: usize,
    /// When set, each variable draws its state count uniformly from
    /// `states..=states_max`.
    pub states_max: Option<usize>,
    /// Range for coupling strengths (grids) or edge table entries.
    pub coupling: (f64, f64),
    /// Range for node table entries.
    pub field: (f64, f64),
    pub seed: u64,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec {
            kind: GeneratorKind::Tree,
            n: 10,
            rows: 3,
            cols: 3,
            states: 2,
            states_max: None,
            coupling: (-1.0, 1.0),
            field: (-1.0, 1.0),
            seed: 0,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenerateError {
    #[error("size parameters must be positive")]
    EmptySize,
    #[error("need at least 2 states per variable (got {0})")]
    TooFewStates(usize),
    #[error("states_max {max} is below states {min}")]
    StateRange { min: usize, max: usize },
    #[error("invalid {name} range [{lo}, {hi}]")]
    Range { name: &'static str, lo: f64, hi: f64 },
}

fn check_range(name: &'static str, (lo, hi): (f64, f64)) -> Result<(), GenerateError> {
    if lo.is_finite() && hi.is_finite() && lo <= hi {
        Ok(())
    } else {
        Err(GenerateError::Range { name, lo, hi })
    }
}

/// Canonical edges of a 4-connected `rows x cols` lattice, variable
/// `r * cols + c`, in ascending `(i, j)` order.
pub fn grid_edges(rows: usize, cols: usize) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let v = r * cols + c;
            if c + 1 < cols {
                edges.push((v, v + 1));
            }
            if r + 1 < rows {
                edges.push((v, v + cols));
            }
        }
    }
    edges
}

/// Decodes a Prüfer sequence into the edges of a labeled tree on `n` nodes.
fn prufer_edges(n: usize, seq: &[usize]) -> Vec<(usize, usize)> {
    let mut degree = vec![1usize; n];
    for &v in seq {
        degree[v] += 1;
    }
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    for &v in seq {
        let leaf = (0..n).find(|&u| degree[u] == 1).expect("prufer decoding always has a leaf");
        edges.push((leaf.min(v), leaf.max(v)));
        degree[leaf] -= 1;
        degree[v] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&u| degree[u] == 1).collect();
    if let [a, b] = rest[..] {
        edges.push((a, b));
    }
    edges
}

pub fn generate(spec: &GeneratorSpec) -> Result<PairwiseModel, GenerateError> {
    if spec.states < 2 {
        return Err(GenerateError::TooFewStates(spec.states));
    }
    if let Some(max) = spec.states_max {
        if max < spec.states {
            return Err(GenerateError::StateRange { min: spec.states, max });
        }
    }
    check_range("coupling", spec.coupling)?;
    check_range("field", spec.field)?;
    let n = match spec.kind {
        GeneratorKind::Tree | GeneratorKind::RandomComplete => spec.n,
        GeneratorKind::GridPotts | GeneratorKind::SpinGlassGrid => spec.rows * spec.cols,
    };
    if n == 0 {
        return Err(GenerateError::EmptySize);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let cards: Vec<usize> = (0..n)
        .map(|_| match spec.states_max {
            Some(max) => rng.random_range(spec.states..=max),
            None => spec.states,
        })
        .collect();

    let mut pairs = match spec.kind {
        GeneratorKind::Tree => {
            let seq: Vec<usize> = (0..n.saturating_sub(2)).map(|_| rng.random_range(0..n)).collect();
            if n == 1 {
                Vec::new()
            } else {
                prufer_edges(n, &seq)
            }
        }
        GeneratorKind::GridPotts | GeneratorKind::SpinGlassGrid => grid_edges(spec.rows, spec.cols),
        GeneratorKind::RandomComplete => {
            (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
        }
    };
    pairs.sort_unstable();

    let (f_lo, f_hi) = spec.field;
    let nodes: Vec<Vec<f64>> = cards
        .iter()
        .map(|&k| (0..k).map(|_| rng.random_range(f_lo..=f_hi)).collect())
        .collect();

    let (c_lo, c_hi) = spec.coupling;
    let edges = pairs
        .into_iter()
        .map(|(i, j)| {
            let (ki, kj) = (cards[i], cards[j]);
            let data: Vec<f64> = match spec.kind {
                GeneratorKind::Tree | GeneratorKind::RandomComplete => {
                    (0..ki * kj).map(|_| rng.random_range(c_lo..=c_hi)).collect()
                }
                GeneratorKind::GridPotts => {
                    let w = rng.random_range(c_lo..=c_hi);
                    (0..ki * kj)
                        .map(|idx| if idx / kj == idx % kj { w } else { 0.0 })
                        .collect()
                }
                GeneratorKind::SpinGlassGrid => {
                    let magnitude = rng.random_range(c_lo..=c_hi);
                    let coupling = if rng.random_bool(0.5) { magnitude } else { -magnitude };
                    (0..ki * kj)
                        .map(|idx| if idx / kj == idx % kj { coupling } else { -coupling })
                        .collect()
                }
            };
            ((i, j), Table::new(ki, kj, data))
        })
        .collect();

    Ok(PairwiseModel::new(cards, nodes, edges).expect("generated models are valid"))
}
