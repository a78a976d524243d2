//! Pairwise Markov random fields in log space.
//!
//! The energy of an assignment `x` is
//! `f(x) = sum_{ij in E} theta_ij(x_i, x_j) + sum_i theta_i(x_i)` and MAP
//! inference maximizes it. Edges are stored with canonical orientation
//! `i < j`; tables handed in with the opposite orientation are transposed
//! on construction.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid model: {0}")]
    Invalid(Diagnostic),
    #[error("assignment has {got} states, model has {expected} variables")]
    AssignmentLength { expected: usize, got: usize },
    #[error("variable {var}: state {state} out of range (cardinality {card})")]
    StateOutOfRange { var: usize, state: usize, card: usize },
    #[error("edge {{{0}, {1}}} already present")]
    DuplicateEdge(usize, usize),
    #[error("chord endpoints must differ (got {0})")]
    SelfLoop(usize),
    #[error("variable {0} does not exist")]
    UnknownVariable(usize),
}

/// One violated model invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostic {
    ZeroCardinality { var: usize },
    NodeTableLength { var: usize, expected: usize, got: usize },
    NodeCountMismatch { cardinalities: usize, node_tables: usize },
    EdgeOutOfRange { edge: usize, i: usize, j: usize },
    SelfLoop { edge: usize, var: usize },
    DuplicateEdge { edge: usize, first: usize, i: usize, j: usize },
    EdgeShape { edge: usize, expected: (usize, usize), got: (usize, usize) },
    EdgeTableLength { edge: usize, expected: usize, got: usize },
    NonFiniteNode { var: usize, state: usize },
    NonFiniteEdge { edge: usize, entry: usize },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::ZeroCardinality { var } => write!(f, "variable {var} has zero states"),
            Diagnostic::NodeTableLength { var, expected, got } => {
                write!(f, "variable {var}: node table has {got} entries, expected {expected}")
            }
            Diagnostic::NodeCountMismatch { cardinalities, node_tables } => write!(
                f,
                "{cardinalities} cardinalities but {node_tables} node tables"
            ),
            Diagnostic::EdgeOutOfRange { edge, i, j } => {
                write!(f, "edge {edge} ({i}, {j}) references a missing variable")
            }
            Diagnostic::SelfLoop { edge, var } => write!(f, "edge {edge} is a self-loop on {var}"),
            Diagnostic::DuplicateEdge { edge, first, i, j } => {
                write!(f, "edge {edge} ({i}, {j}) duplicates edge {first}")
            }
            Diagnostic::EdgeShape { edge, expected, got } => write!(
                f,
                "edge {edge}: table shape {}x{} does not match cardinalities {}x{}",
                got.0, got.1, expected.0, expected.1
            ),
            Diagnostic::EdgeTableLength { edge, expected, got } => {
                write!(f, "edge {edge}: table has {got} entries, expected {expected}")
            }
            Diagnostic::NonFiniteNode { var, state } => {
                write!(f, "variable {var}: non-finite potential at state {state}")
            }
            Diagnostic::NonFiniteEdge { edge, entry } => {
                write!(f, "edge {edge}: non-finite potential at entry {entry}")
            }
        }
    }
}

/// A dense `rows x cols` table stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Table {
    /// Builds a table; `data.len()` is checked against the shape by
    /// [`PairwiseModel::validate`], not here.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        Table { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Table { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        Table {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn transposed(&self) -> Table {
        let mut data = Vec::with_capacity(self.data.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                data.push(self.data[r * self.cols + c]);
            }
        }
        Table { rows: self.cols, cols: self.rows, data }
    }
}

/// One state index per variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment(pub Vec<usize>);

impl Assignment {
    pub fn zeros(n: usize) -> Self {
        Assignment(vec![0; n])
    }

    pub fn states(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (idx, s) in self.0.iter().enumerate() {
            if idx > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

/// A pairwise MRF. Construct with [`PairwiseModel::new`] for a validated
/// model or [`PairwiseModel::from_parts`] to inspect a possibly broken one.
#[derive(Debug, Clone)]
pub struct PairwiseModel {
    cardinalities: Vec<usize>,
    node_potentials: Vec<Vec<f64>>,
    edges: Vec<(usize, usize)>,
    edge_potentials: Vec<Table>,
    adjacency: Vec<Vec<usize>>,
    edge_index: HashMap<(usize, usize), usize>,
}

impl PartialEq for PairwiseModel {
    fn eq(&self, other: &Self) -> bool {
        self.cardinalities == other.cardinalities
            && self.node_potentials == other.node_potentials
            && self.edges == other.edges
            && self.edge_potentials == other.edge_potentials
    }
}

impl PairwiseModel {
    /// Builds and validates a model. Each edge is `((i, j), table)` with the
    /// table shaped `k_i x k_j` in the given orientation.
    pub fn new(
        cardinalities: Vec<usize>,
        node_potentials: Vec<Vec<f64>>,
        edges: Vec<((usize, usize), Table)>,
    ) -> Result<Self, ModelError> {
        let model = Self::from_parts(cardinalities, node_potentials, edges);
        match model.validate().into_iter().next() {
            None => Ok(model),
            Some(d) => Err(ModelError::Invalid(d)),
        }
    }

    /// Builds a model without checking invariants. Well-shaped edges given
    /// as `(j, i)` with `j > i` are canonicalized.
    pub fn from_parts(
        cardinalities: Vec<usize>,
        node_potentials: Vec<Vec<f64>>,
        edges: Vec<((usize, usize), Table)>,
    ) -> Self {
        let n = cardinalities.len();
        let mut pairs = Vec::with_capacity(edges.len());
        let mut tables = Vec::with_capacity(edges.len());
        for ((i, j), table) in edges {
            let shaped = i < n
                && j < n
                && table.rows == cardinalities[i]
                && table.cols == cardinalities[j]
                && table.data.len() == table.rows * table.cols;
            if i > j && shaped {
                pairs.push((j, i));
                tables.push(table.transposed());
            } else {
                pairs.push((i, j));
                tables.push(table);
            }
        }
        let mut adjacency = vec![Vec::new(); n];
        let mut edge_index = HashMap::new();
        for (e, &(i, j)) in pairs.iter().enumerate() {
            if i < n && j < n && i != j {
                adjacency[i].push(e);
                adjacency[j].push(e);
            }
            edge_index.entry((i.min(j), i.max(j))).or_insert(e);
        }
        PairwiseModel {
            cardinalities,
            node_potentials,
            edges: pairs,
            edge_potentials: tables,
            adjacency,
            edge_index,
        }
    }

    /// A model with the given cardinalities and every potential zero.
    pub fn zeros(cardinalities: Vec<usize>, edges: &[(usize, usize)]) -> Result<Self, ModelError> {
        let nodes = cardinalities.iter().map(|&k| vec![0.0; k]).collect();
        let edges = edges
            .iter()
            .map(|&(i, j)| {
                let ki = cardinalities.get(i).copied().unwrap_or(0);
                let kj = cardinalities.get(j).copied().unwrap_or(0);
                ((i, j), Table::zeros(ki, kj))
            })
            .collect();
        Self::new(cardinalities, nodes, edges)
    }

    /// Returns every invariant violation; an empty list means the model is valid.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let n = self.cardinalities.len();
        if self.node_potentials.len() != n {
            out.push(Diagnostic::NodeCountMismatch {
                cardinalities: n,
                node_tables: self.node_potentials.len(),
            });
        }
        for (var, &k) in self.cardinalities.iter().enumerate() {
            if k == 0 {
                out.push(Diagnostic::ZeroCardinality { var });
            }
            let Some(table) = self.node_potentials.get(var) else {
                continue;
            };
            if table.len() != k {
                out.push(Diagnostic::NodeTableLength { var, expected: k, got: table.len() });
            }
            if let Some(state) = table.iter().position(|v| !v.is_finite()) {
                out.push(Diagnostic::NonFiniteNode { var, state });
            }
        }
        let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
        for (edge, (&(i, j), table)) in self.edges.iter().zip(&self.edge_potentials).enumerate() {
            if i >= n || j >= n {
                out.push(Diagnostic::EdgeOutOfRange { edge, i, j });
                continue;
            }
            if i == j {
                out.push(Diagnostic::SelfLoop { edge, var: i });
                continue;
            }
            if let Some(&first) = seen.get(&(i.min(j), i.max(j))) {
                out.push(Diagnostic::DuplicateEdge { edge, first, i, j });
            } else {
                seen.insert((i.min(j), i.max(j)), edge);
            }
            let expected = (self.cardinalities[i], self.cardinalities[j]);
            if (table.rows, table.cols) != expected {
                out.push(Diagnostic::EdgeShape { edge, expected, got: (table.rows, table.cols) });
            } else if table.data.len() != table.rows * table.cols {
                out.push(Diagnostic::EdgeTableLength {
                    edge,
                    expected: table.rows * table.cols,
                    got: table.data.len(),
                });
            }
            if let Some(entry) = table.data.iter().position(|v| !v.is_finite()) {
                out.push(Diagnostic::NonFiniteEdge { edge, entry });
            }
        }
        out
    }

    pub fn num_vars(&self) -> usize {
        self.cardinalities.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn cardinalities(&self) -> &[usize] {
        &self.cardinalities
    }

    pub fn cardinality(&self, var: usize) -> usize {
        self.cardinalities[var]
    }

    pub fn node_potential(&self, var: usize) -> &[f64] {
        &self.node_potentials[var]
    }

    /// Canonical endpoints `(i, j)` with `i < j`.
    pub fn edge(&self, e: usize) -> (usize, usize) {
        self.edges[e]
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_potential(&self, e: usize) -> &Table {
        &self.edge_potentials[e]
    }

    /// Incident edge indices of `var`, ascending.
    pub fn incident_edges(&self, var: usize) -> &[usize] {
        &self.adjacency[var]
    }

    pub fn neighbors(&self, var: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency[var].iter().map(move |&e| {
            let (i, j) = self.edges[e];
            if i == var {
                j
            } else {
                i
            }
        })
    }

    /// Index of the edge between `a` and `b` in either order.
    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_index.get(&(a.min(b), a.max(b))).copied()
    }

    /// Product of all cardinalities, saturating at `u128::MAX`.
    pub fn state_space_size(&self) -> u128 {
        self.cardinalities
            .iter()
            .fold(1u128, |acc, &k| acc.saturating_mul(k as u128))
    }

    pub fn check_assignment(&self, a: &Assignment) -> Result<(), ModelError> {
        if a.len() != self.num_vars() {
            return Err(ModelError::AssignmentLength { expected: self.num_vars(), got: a.len() });
        }
        for (var, (&state, &card)) in a.0.iter().zip(&self.cardinalities).enumerate() {
            if state >= card {
                return Err(ModelError::StateOutOfRange { var, state, card });
            }
        }
        Ok(())
    }

    /// Energy of `a`.
    pub fn evaluate(&self, a: &Assignment) -> Result<f64, ModelError> {
        self.check_assignment(a)?;
        Ok(self.evaluate_unchecked(&a.0))
    }

    /// Energy of a state vector already known to be in range.
    pub fn evaluate_unchecked(&self, states: &[usize]) -> f64 {
        let mut total = 0.0;
        for (&(i, j), table) in self.edges.iter().zip(&self.edge_potentials) {
            total += table.get(states[i], states[j]);
        }
        for (table, &s) in self.node_potentials.iter().zip(states) {
            total += table[s];
        }
        total
    }

    /// Returns a copy with a zero-potential edge `{i, j}` appended. The
    /// energy of every assignment is unchanged.
    pub fn add_zero_chord(&self, i: usize, j: usize) -> Result<PairwiseModel, ModelError> {
        let n = self.num_vars();
        if i >= n {
            return Err(ModelError::UnknownVariable(i));
        }
        if j >= n {
            return Err(ModelError::UnknownVariable(j));
        }
        if i == j {
            return Err(ModelError::SelfLoop(i));
        }
        if self.edge_between(i, j).is_some() {
            return Err(ModelError::DuplicateEdge(i.min(j), i.max(j)));
        }
        let (a, b) = (i.min(j), i.max(j));
        let mut out = self.clone();
        let e = out.edges.len();
        out.edges.push((a, b));
        out.edge_potentials
            .push(Table::zeros(self.cardinalities[a], self.cardinalities[b]));
        out.adjacency[a].push(e);
        out.adjacency[b].push(e);
        out.edge_index.insert((a, b), e);
        Ok(out)
    }
}
