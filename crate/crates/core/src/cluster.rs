//! Triplet clusters and candidate squares.

use std::fmt;

use thiserror::Error;

use crate::model::PairwiseModel;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClusterError {
    #[error("cluster variables must be distinct: {0:?}")]
    RepeatedVariable(Vec<usize>),
    #[error("cluster {vars:?} needs edge {{{a}, {b}}} which is not in the model")]
    MissingEdge { vars: Vec<usize>, a: usize, b: usize },
    #[error("cluster {0:?} is already registered")]
    Duplicate(Vec<usize>),
    #[error("cluster {0:?} is not registered")]
    Unregistered(Vec<usize>),
    #[error("edge {edge} is not part of cluster {vars:?}")]
    EdgeNotInCluster { edge: usize, vars: Vec<usize> },
    #[error("square {0:?} is not a cycle of the model")]
    NotACycle(Vec<usize>),
}

/// A triplet of variables with its three edges.
///
/// `vars` is sorted ascending; `edge_ids` holds the model edges for the
/// pairs `(v0, v1)`, `(v0, v2)`, `(v1, v2)` in that order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cluster {
    vars: [usize; 3],
    edge_ids: [usize; 3],
}

/// Index pairs into `Cluster::vars` for each edge slot.
pub(crate) const SLOT_PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

impl Cluster {
    pub fn new(model: &PairwiseModel, vars: [usize; 3]) -> Result<Self, ClusterError> {
        let mut sorted = vars;
        sorted.sort_unstable();
        if sorted[0] == sorted[1] || sorted[1] == sorted[2] {
            return Err(ClusterError::RepeatedVariable(vars.to_vec()));
        }
        let mut edge_ids = [0; 3];
        for (slot, &(p, q)) in SLOT_PAIRS.iter().enumerate() {
            let (a, b) = (sorted[p], sorted[q]);
            edge_ids[slot] = model.edge_between(a, b).ok_or(ClusterError::MissingEdge {
                vars: sorted.to_vec(),
                a,
                b,
            })?;
        }
        Ok(Cluster { vars: sorted, edge_ids })
    }

    pub fn vars(&self) -> [usize; 3] {
        self.vars
    }

    pub fn edge_ids(&self) -> [usize; 3] {
        self.edge_ids
    }

    pub fn slot_of(&self, edge: usize) -> Option<usize> {
        self.edge_ids.iter().position(|&e| e == edge)
    }
}

impl fmt::Display for Cluster {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}-{}", self.vars[0], self.vars[1], self.vars[2])
    }
}

/// A chordless 4-cycle `v0 - v1 - v2 - v3 - v0`, rotated so `v0` is the
/// lowest-indexed vertex and `v1 < v3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CandidateSquare {
    vars: [usize; 4],
    cycle_edges: [usize; 4],
}

impl CandidateSquare {
    /// Builds a square from four vertices in cycle order. Chords are not
    /// checked; only the four cycle edges must exist.
    pub fn new(model: &PairwiseModel, cycle: [usize; 4]) -> Result<Self, ClusterError> {
        let mut sorted = cycle;
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(ClusterError::RepeatedVariable(cycle.to_vec()));
        }
        let start = (0..4).min_by_key(|&p| cycle[p]).unwrap_or(0);
        let mut vars = [0; 4];
        for (k, v) in vars.iter_mut().enumerate() {
            *v = cycle[(start + k) % 4];
        }
        if vars[1] > vars[3] {
            vars.swap(1, 3);
        }
        let mut cycle_edges = [0; 4];
        for k in 0..4 {
            cycle_edges[k] = model
                .edge_between(vars[k], vars[(k + 1) % 4])
                .ok_or_else(|| ClusterError::NotACycle(cycle.to_vec()))?;
        }
        Ok(CandidateSquare { vars, cycle_edges })
    }

    pub fn vars(&self) -> [usize; 4] {
        self.vars
    }

    /// Edge ids for `(v0,v1)`, `(v1,v2)`, `(v2,v3)`, `(v3,v0)`.
    pub fn cycle_edges(&self) -> [usize; 4] {
        self.cycle_edges
    }

    /// The diagonal through the lowest-indexed vertex.
    pub fn chord(&self) -> (usize, usize) {
        (self.vars[0], self.vars[2])
    }

    /// The two triplets produced by triangulating along [`Self::chord`].
    pub fn triplet_vars(&self) -> [[usize; 3]; 2] {
        let [a, b, c, d] = self.vars;
        [[a, b, c], [a, c, d]]
    }
}

impl fmt::Display for CandidateSquare {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.vars;
        write!(f, "{a}-{b}-{c}-{d}")
    }
}
