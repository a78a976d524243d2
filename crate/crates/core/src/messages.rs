//! Generalized MPLP block coordinate descent on the dual of the
//! cluster-based LP relaxation.
//!
//! Three message families are kept, all dense and in each edge's canonical
//! `(i, j)` orientation:
//!
//! * edge to node, `lambda_{e->i}` and `lambda_{e->j}`;
//! * edge to edge, `lambda_{e->e}`;
//! * cluster to edge, `lambda_{c->e}` for every registered triplet `c` and `e in c`.
//!
//! The dual objective is
//! `g = sum_i max b_i + sum_e max b_e` with node beliefs
//! `b_i = theta_i + sum_{e in N(i)} lambda_{e->i}` and edge beliefs
//! `b_e = lambda_{e->e} + sum_{c : e in c} lambda_{c->e}`. Every block update
//! reads a snapshot of its inputs before writing, which is what makes it a
//! coordinate-descent step on `g` once a full pass has been made.

use std::collections::HashMap;

use crate::cluster::{Cluster, ClusterError, SLOT_PAIRS};
use crate::model::{Assignment, PairwiseModel};

const TWO_THIRDS: f64 = 2.0 / 3.0;
const ONE_THIRD: f64 = 1.0 / 3.0;

/// Dual variables of the relaxation.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageState {
    /// `[lambda_{e->i}, lambda_{e->j}]` per edge.
    edge_to_node: Vec<[Vec<f64>; 2]>,
    edge_to_edge: Vec<Vec<f64>>,
    clusters: Vec<Cluster>,
    /// Per cluster, one table per edge slot (see [`Cluster::edge_ids`]).
    cluster_to_edge: Vec<[Vec<f64>; 3]>,
    /// Per edge, the `(cluster, slot)` pairs that send to it.
    edge_clusters: Vec<Vec<(usize, usize)>>,
    cluster_index: HashMap<[usize; 3], usize>,
    pass_count: usize,
}

/// Which block of messages a coordinate step updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    Edge(usize),
    Cluster(usize),
}

impl MessageState {
    /// Zero messages for every edge of `model` and every cluster given.
    pub fn new(model: &PairwiseModel, clusters: &[Cluster]) -> Result<Self, ClusterError> {
        let mut state = MessageState {
            edge_to_node: Vec::new(),
            edge_to_edge: Vec::new(),
            clusters: Vec::new(),
            cluster_to_edge: Vec::new(),
            edge_clusters: Vec::new(),
            cluster_index: HashMap::new(),
            pass_count: 0,
        };
        state.sync_edges(model);
        for c in clusters {
            state.register_cluster(model, *c)?;
        }
        Ok(state)
    }

    /// Allocates zero messages for edges appended to `model` since the
    /// state was built (chords). The dual objective is unchanged.
    pub fn sync_edges(&mut self, model: &PairwiseModel) {
        for e in self.edge_to_edge.len()..model.num_edges() {
            let (i, j) = model.edge(e);
            let (ki, kj) = (model.cardinality(i), model.cardinality(j));
            self.edge_to_node.push([vec![0.0; ki], vec![0.0; kj]]);
            self.edge_to_edge.push(vec![0.0; ki * kj]);
            self.edge_clusters.push(Vec::new());
        }
    }

    /// Registers `c` with zero outgoing messages and returns its index.
    /// The dual objective is unchanged.
    pub fn register_cluster(
        &mut self,
        model: &PairwiseModel,
        c: Cluster,
    ) -> Result<usize, ClusterError> {
        let vars = c.vars();
        for (slot, &(p, q)) in SLOT_PAIRS.iter().enumerate() {
            let e = c.edge_ids()[slot];
            if e >= model.num_edges() || model.edge(e) != (vars[p], vars[q]) {
                return Err(ClusterError::MissingEdge { vars: vars.to_vec(), a: vars[p], b: vars[q] });
            }
        }
        if self.cluster_index.contains_key(&vars) {
            return Err(ClusterError::Duplicate(vars.to_vec()));
        }
        self.sync_edges(model);
        let idx = self.clusters.len();
        let tables = c.edge_ids().map(|e| vec![0.0; self.edge_to_edge[e].len()]);
        for (slot, &e) in c.edge_ids().iter().enumerate() {
            self.edge_clusters[e].push((idx, slot));
        }
        self.clusters.push(c);
        self.cluster_to_edge.push(tables);
        self.cluster_index.insert(vars, idx);
        Ok(idx)
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn cluster_id(&self, c: &Cluster) -> Option<usize> {
        self.cluster_index.get(&c.vars()).copied()
    }

    pub fn is_registered(&self, vars: [usize; 3]) -> bool {
        let mut key = vars;
        key.sort_unstable();
        self.cluster_index.contains_key(&key)
    }

    pub fn pass_count(&self) -> usize {
        self.pass_count
    }

    pub fn num_edges(&self) -> usize {
        self.edge_to_edge.len()
    }

    /// `lambda_{e->i}` (`side = 0`) or `lambda_{e->j}` (`side = 1`).
    pub fn edge_to_node(&self, e: usize, side: usize) -> &[f64] {
        &self.edge_to_node[e][side]
    }

    pub fn edge_to_edge(&self, e: usize) -> &[f64] {
        &self.edge_to_edge[e]
    }

    /// Mutable access to `lambda_{e->e}`, for constructing states directly.
    pub fn edge_to_edge_mut(&mut self, e: usize) -> &mut [f64] {
        &mut self.edge_to_edge[e]
    }

    pub fn cluster_to_edge(&self, cluster: usize, slot: usize) -> &[f64] {
        &self.cluster_to_edge[cluster][slot]
    }

    /// Every message entry, in a fixed order.
    pub fn all_entries(&self) -> impl Iterator<Item = f64> + '_ {
        let nodes = self.edge_to_node.iter().flat_map(|p| p.iter().flatten());
        let edges = self.edge_to_edge.iter().flatten();
        let clusters = self.cluster_to_edge.iter().flat_map(|t| t.iter().flatten());
        nodes.chain(edges).chain(clusters).copied()
    }

    fn side_of(model: &PairwiseModel, e: usize, var: usize) -> usize {
        if model.edge(e).0 == var {
            0
        } else {
            1
        }
    }

    /// `theta_i + sum of lambda_{e'->i}` over incident edges other than `skip`.
    fn node_sum(&self, model: &PairwiseModel, var: usize, skip: Option<usize>) -> Vec<f64> {
        let mut out = model.node_potential(var).to_vec();
        for &e in model.incident_edges(var) {
            if Some(e) == skip {
                continue;
            }
            let msg = &self.edge_to_node[e][Self::side_of(model, e, var)];
            for (o, m) in out.iter_mut().zip(msg) {
                *o += m;
            }
        }
        out
    }

    /// Sum of cluster messages into `e`, skipping cluster `skip`.
    fn cluster_sum(&self, e: usize, skip: Option<usize>) -> Vec<f64> {
        let mut out = vec![0.0; self.edge_to_edge[e].len()];
        for &(c, slot) in &self.edge_clusters[e] {
            if Some(c) == skip {
                continue;
            }
            for (o, m) in out.iter_mut().zip(&self.cluster_to_edge[c][slot]) {
                *o += m;
            }
        }
        out
    }

    /// Node belief `b_i = theta_i + sum_{e in N(i)} lambda_{e->i}`.
    pub fn node_belief(&self, model: &PairwiseModel, var: usize) -> Vec<f64> {
        self.node_sum(model, var, None)
    }

    /// Edge belief `b_e = lambda_{e->e} + sum_c lambda_{c->e}`, optionally
    /// leaving out the messages of one registered cluster containing `e`.
    pub fn edge_belief(&self, e: usize, exclude: Option<&Cluster>) -> Result<Vec<f64>, ClusterError> {
        let skip = match exclude {
            None => None,
            Some(c) => {
                if c.slot_of(e).is_none() {
                    return Err(ClusterError::EdgeNotInCluster { edge: e, vars: c.vars().to_vec() });
                }
                self.cluster_id(c)
            }
        };
        Ok(self.edge_belief_skipping(e, skip))
    }

    pub(crate) fn edge_belief_skipping(&self, e: usize, skip: Option<usize>) -> Vec<f64> {
        let mut b = self.cluster_sum(e, skip);
        for (o, m) in b.iter_mut().zip(&self.edge_to_edge[e]) {
            *o += m;
        }
        b
    }

    /// Recomputes all messages sent by edge `e` from one snapshot.
    pub fn update_edge(&mut self, model: &PairwiseModel, e: usize) {
        let (i, j) = model.edge(e);
        let kj = model.cardinality(j);
        let theta = model.edge_potential(e);
        let a_i = self.node_sum(model, i, Some(e));
        let a_j = self.node_sum(model, j, Some(e));
        let c_sum = self.cluster_sum(e, None);

        let mut to_i = vec![f64::NEG_INFINITY; a_i.len()];
        let mut to_j = vec![f64::NEG_INFINITY; a_j.len()];
        let mut to_e = vec![0.0; c_sum.len()];
        for (xi, &ai) in a_i.iter().enumerate() {
            for (xj, &aj) in a_j.iter().enumerate() {
                let idx = xi * kj + xj;
                let pair = c_sum[idx] + theta.get(xi, xj);
                to_i[xi] = to_i[xi].max(pair + aj);
                to_j[xj] = to_j[xj].max(pair + ai);
                to_e[idx] = -TWO_THIRDS * c_sum[idx] + ONE_THIRD * (aj + ai + theta.get(xi, xj));
            }
        }
        for (m, &a) in to_i.iter_mut().zip(&a_i) {
            *m = -TWO_THIRDS * a + ONE_THIRD * *m;
        }
        for (m, &a) in to_j.iter_mut().zip(&a_j) {
            *m = -TWO_THIRDS * a + ONE_THIRD * *m;
        }
        self.edge_to_node[e] = [to_i, to_j];
        self.edge_to_edge[e] = to_e;
    }

    /// Recomputes the three messages sent by a registered triplet.
    pub fn update_cluster(&mut self, model: &PairwiseModel, c: &Cluster) -> Result<(), ClusterError> {
        let idx = self
            .cluster_id(c)
            .ok_or_else(|| ClusterError::Unregistered(c.vars().to_vec()))?;
        self.update_cluster_at(model, idx);
        Ok(())
    }

    /// As [`Self::update_cluster`], by registration index.
    pub fn update_cluster_at(&mut self, model: &PairwiseModel, idx: usize) {
        let c = self.clusters[idx];
        let [v0, v1, v2] = c.vars();
        let k = [model.cardinality(v0), model.cardinality(v1), model.cardinality(v2)];
        let b = c.edge_ids().map(|e| self.edge_belief_skipping(e, Some(idx)));
        // b[0] over (x0,x1) stride k1, b[1] over (x0,x2) stride k2, b[2] over (x1,x2) stride k2
        let mut max_other = [
            vec![f64::NEG_INFINITY; k[0] * k[1]],
            vec![f64::NEG_INFINITY; k[0] * k[2]],
            vec![f64::NEG_INFINITY; k[1] * k[2]],
        ];
        for x0 in 0..k[0] {
            for x1 in 0..k[1] {
                let i01 = x0 * k[1] + x1;
                for x2 in 0..k[2] {
                    let i02 = x0 * k[2] + x2;
                    let i12 = x1 * k[2] + x2;
                    let (b01, b02, b12) = (b[0][i01], b[1][i02], b[2][i12]);
                    max_other[0][i01] = max_other[0][i01].max(b02 + b12);
                    max_other[1][i02] = max_other[1][i02].max(b01 + b12);
                    max_other[2][i12] = max_other[2][i12].max(b01 + b02);
                }
            }
        }
        for slot in 0..3 {
            let out = &mut self.cluster_to_edge[idx][slot];
            for ((o, &bs), &m) in out.iter_mut().zip(&b[slot]).zip(&max_other[slot]) {
                *o = -TWO_THIRDS * bs + ONE_THIRD * m;
            }
        }
    }

    pub fn update_block(&mut self, model: &PairwiseModel, block: Block) {
        match block {
            Block::Edge(e) => self.update_edge(model, e),
            Block::Cluster(c) => self.update_cluster_at(model, c),
        }
    }

    /// One sweep: every edge in index order, then every cluster in
    /// registration order.
    pub fn run_pass(&mut self, model: &PairwiseModel) {
        self.sync_edges(model);
        for e in 0..model.num_edges() {
            self.update_edge(model, e);
        }
        for c in 0..self.clusters.len() {
            self.update_cluster_at(model, c);
        }
        self.pass_count += 1;
    }

    /// The dual objective `g(lambda)`, recomputed from scratch.
    pub fn dual_objective(&self, model: &PairwiseModel) -> f64 {
        let nodes: f64 = (0..model.num_vars())
            .map(|i| max_of(&self.node_belief(model, i)))
            .sum();
        let edges: f64 = (0..self.num_edges())
            .map(|e| max_of(&self.edge_belief_skipping(e, None)))
            .sum();
        nodes + edges
    }

    /// Maximizes each node belief independently; ties go to the lowest state.
    pub fn decode(&self, model: &PairwiseModel) -> Assignment {
        Assignment(
            (0..model.num_vars())
                .map(|i| argmax(&self.node_belief(model, i)))
                .collect(),
        )
    }

    /// Like [`Self::decode`], but states whose node belief is within `window`
    /// of the maximum are treated as tied and resolved greedily in variable
    /// order by the energy they score against neighbors decoded so far.
    pub fn decode_tie_aware(&self, model: &PairwiseModel, window: f64) -> Assignment {
        let n = model.num_vars();
        let mut states = vec![0usize; n];
        let mut fixed = vec![false; n];
        for var in 0..n {
            let belief = self.node_belief(model, var);
            let theta = model.node_potential(var);
            let mut best = (f64::NEG_INFINITY, 0);
            for x in near_max(&belief, window) {
                let mut local = theta[x];
                for &e in model.incident_edges(var) {
                    let (i, j) = model.edge(e);
                    let table = model.edge_potential(e);
                    local += match (i == var, fixed[j], fixed[i]) {
                        (true, true, _) => table.get(x, states[j]),
                        (false, _, true) => table.get(states[i], x),
                        _ => 0.0,
                    };
                }
                if local > best.0 {
                    best = (local, x);
                }
            }
            states[var] = best.1;
            fixed[var] = true;
        }
        Assignment(states)
    }
}

/// States of `values` within `window` of the maximum, ascending.
fn near_max(values: &[f64], window: f64) -> impl Iterator<Item = usize> + '_ {
    let top = max_of(values);
    values
        .iter()
        .enumerate()
        .filter(move |(_, &v)| v >= top - window)
        .map(|(idx, _)| idx)
}

pub(crate) fn max_of(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// First index of the maximum.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (idx, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = idx;
        }
    }
    best
}
