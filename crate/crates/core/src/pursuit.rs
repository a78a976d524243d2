//! Cluster pursuit: tighten the relaxation with the triplets (or squares)
//! whose single block update is guaranteed to lower the dual the most.
//!
//! The guaranteed decrease of a candidate `c` is
//! `d(c) = sum_{e in c} max b_e - max_{x_c} sum_{e in c} b_e`, with edge
//! beliefs taken without any messages from `c` itself. New clusters start
//! with zero messages so adding them leaves the dual untouched.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use crate::cluster::{CandidateSquare, Cluster, ClusterError};
use crate::messages::{max_of, MessageState};
use crate::model::{Assignment, ModelError, PairwiseModel};

/// Node-belief margin under which states count as tied when decoding.
pub const TIE_WINDOW: f64 = 1e-6;

/// Default cap on the number of 4-cycles enumerated per round.
pub const DEFAULT_SQUARE_BUDGET: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PursuitError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// A cluster that may be added to the relaxation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Candidate {
    Triplet(Cluster),
    Square(CandidateSquare),
}

impl fmt::Display for Candidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Candidate::Triplet(c) => c.fmt(f),
            Candidate::Square(s) => s.fmt(f),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidateKind {
    Triangles,
    Squares,
    Both,
}

impl FromStr for CandidateKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "triangles" => Ok(CandidateKind::Triangles),
            "squares" => Ok(CandidateKind::Squares),
            "both" => Ok(CandidateKind::Both),
            other => Err(format!("unknown candidate kind `{other}` (triangles, squares, both)")),
        }
    }
}

impl fmt::Display for CandidateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CandidateKind::Triangles => "triangles",
            CandidateKind::Squares => "squares",
            CandidateKind::Both => "both",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    /// Pass cap for the initial edges-only phase.
    pub initial_pass_cap: usize,
    /// Passes run after each round of cluster additions.
    pub inner_iters: usize,
    pub clusters_per_round: usize,
    /// Certificate threshold on `dual - decoded energy`.
    pub gap_tolerance: f64,
    /// The initial phase stops once one pass lowers the dual by less than this.
    pub convergence_threshold: f64,
    /// Rounds of cluster additions; 0 runs the edges-only relaxation.
    pub max_rounds: usize,
    pub candidate_kind: CandidateKind,
    /// Candidates scoring at or below this are never added.
    pub score_floor: f64,
    pub square_budget: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            initial_pass_cap: 1000,
            inner_iters: 20,
            clusters_per_round: 5,
            gap_tolerance: 1e-4,
            convergence_threshold: 2e-5,
            max_rounds: 1000,
            candidate_kind: CandidateKind::Both,
            score_floor: 1e-8,
            square_budget: DEFAULT_SQUARE_BUDGET,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<(), PursuitError> {
        let fail = |msg: &str| Err(PursuitError::Config(msg.to_string()));
        if self.initial_pass_cap == 0 {
            return fail("initial pass cap must be positive");
        }
        if self.inner_iters == 0 {
            return fail("inner iterations must be positive");
        }
        if self.clusters_per_round == 0 {
            return fail("clusters per round must be positive");
        }
        if !(self.gap_tolerance > 0.0 && self.gap_tolerance.is_finite()) {
            return fail("gap tolerance must be positive");
        }
        if !(self.convergence_threshold > 0.0 && self.convergence_threshold.is_finite()) {
            return fail("convergence threshold must be positive");
        }
        if self.gap_tolerance <= self.convergence_threshold {
            return fail("gap tolerance must exceed the convergence threshold");
        }
        if !(self.score_floor > 0.0 && self.score_floor.is_finite()) {
            return fail("score floor must be positive");
        }
        if self.square_budget == 0 {
            return fail("square budget must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Certified,
    GapRemaining,
    BudgetExhausted,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Certified => "certified",
            Status::GapRemaining => "gap-remaining",
            Status::BudgetExhausted => "budget-exhausted",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Pass,
    ClusterAdded,
    /// A new best decoded assignment.
    Decoded,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Pass => "pass",
            EventKind::ClusterAdded => "cluster-added",
            EventKind::Decoded => "decoded",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEvent {
    pub kind: EventKind,
    /// Completed passes at the time of the event.
    pub pass: usize,
    pub dual: f64,
    /// Decoded energy for `Pass` and `Decoded` events.
    pub decoded: Option<f64>,
    /// Registered triplet clusters at the time of the event.
    pub clusters: usize,
    pub candidate: Option<Candidate>,
    pub score: Option<f64>,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveTrace {
    /// Seed of the random schedule, when one was used.
    pub seed: Option<u64>,
    pub events: Vec<TraceEvent>,
}

/// Header of [`SolveTrace::to_csv`].
pub const TRACE_HEADER: &str = "event,pass,dual,decoded,clusters,d_c,ms";

impl SolveTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(TRACE_HEADER);
        out.push('\n');
        for ev in &self.events {
            let decoded = ev.decoded.map(|v| v.to_string()).unwrap_or_default();
            let score = ev.score.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{:.3}\n",
                ev.kind.as_str(),
                ev.pass,
                ev.dual,
                decoded,
                ev.clusters,
                score,
                ev.elapsed.as_secs_f64() * 1e3
            ));
        }
        out
    }

    /// Dual values of all events from the first pass on.
    pub fn duals_after_first_pass(&self) -> impl Iterator<Item = f64> + '_ {
        self.events.iter().filter(|e| e.pass >= 1).map(|e| e.dual)
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    /// Best decoded assignment seen.
    pub assignment: Assignment,
    pub energy: f64,
    pub dual: f64,
    pub status: Status,
    pub trace: SolveTrace,
    /// Candidates added, in order.
    pub added: Vec<Candidate>,
    pub rounds: usize,
    pub passes: usize,
    /// The model after chord insertion; same energy function as the input.
    pub model: PairwiseModel,
    pub state: MessageState,
}

impl SolveOutcome {
    pub fn gap(&self) -> f64 {
        self.dual - self.energy
    }

    pub fn clusters(&self) -> &[Cluster] {
        self.state.clusters()
    }
}

/// All triangles of the model graph, sorted by variable triple.
pub fn enumerate_triangles(model: &PairwiseModel) -> Vec<Cluster> {
    let n = model.num_vars();
    let mut higher: Vec<Vec<usize>> = (0..n)
        .map(|v| model.neighbors(v).filter(|&u| u > v).collect())
        .collect();
    for list in &mut higher {
        list.sort_unstable();
    }
    let mut out = Vec::new();
    for (i, nbrs) in higher.iter().enumerate() {
        for (pos, &j) in nbrs.iter().enumerate() {
            for &k in &nbrs[pos + 1..] {
                if model.edge_between(j, k).is_some() {
                    out.push(Cluster::new(model, [i, j, k]).expect("all three edges exist"));
                }
            }
        }
    }
    out
}

/// Chordless 4-cycles, sorted by rotated vertex tuple; stops after `budget`.
pub fn enumerate_squares(model: &PairwiseModel, budget: usize) -> Vec<CandidateSquare> {
    let n = model.num_vars();
    let mut higher: Vec<Vec<usize>> = (0..n)
        .map(|v| model.neighbors(v).filter(|&u| u > v).collect())
        .collect();
    for list in &mut higher {
        list.sort_unstable();
    }
    let mut out = Vec::new();
    'outer: for (a, nbrs) in higher.iter().enumerate() {
        for (pos, &b) in nbrs.iter().enumerate() {
            for &d in &nbrs[pos + 1..] {
                if model.edge_between(b, d).is_some() {
                    continue;
                }
                let mut opposite: Vec<usize> = model
                    .neighbors(b)
                    .filter(|&c| c > a && c != d && model.edge_between(c, d).is_some())
                    .filter(|&c| model.edge_between(a, c).is_none())
                    .collect();
                opposite.sort_unstable();
                for c in opposite {
                    if out.len() >= budget {
                        break 'outer;
                    }
                    out.push(CandidateSquare::new(model, [a, b, c, d]).expect("cycle edges exist"));
                }
            }
        }
    }
    out.sort_unstable();
    out
}

/// Unregistered candidates of the requested kind, triangles first.
pub fn candidates(
    model: &PairwiseModel,
    state: &MessageState,
    kind: CandidateKind,
    square_budget: usize,
) -> Vec<Candidate> {
    let mut out = Vec::new();
    if matches!(kind, CandidateKind::Triangles | CandidateKind::Both) {
        out.extend(
            enumerate_triangles(model)
                .into_iter()
                .filter(|c| !state.is_registered(c.vars()))
                .map(Candidate::Triplet),
        );
    }
    if matches!(kind, CandidateKind::Squares | CandidateKind::Both) {
        out.extend(
            enumerate_squares(model, square_budget)
                .into_iter()
                .filter(|s| !s.triplet_vars().iter().all(|t| state.is_registered(*t)))
                .map(Candidate::Square),
        );
    }
    out
}

/// Looks up `b(x_a, x_b)` in a table stored in edge `e`'s canonical orientation.
#[inline]
fn oriented(model: &PairwiseModel, e: usize, b: &[f64], a: usize, xa: usize, xb: usize) -> f64 {
    let (i, j) = model.edge(e);
    let kj = model.cardinality(j);
    if i == a {
        b[xa * kj + xb]
    } else {
        b[xb * kj + xa]
    }
}

/// The guaranteed dual decrease `d(c)` from one block update of `candidate`,
/// with the candidate's own messages (if any) left out of the edge beliefs.
pub fn score_cluster(state: &MessageState, model: &PairwiseModel, candidate: &Candidate) -> f64 {
    let d = match candidate {
        Candidate::Triplet(c) => {
            let skip = state.cluster_id(c);
            let [v0, v1, v2] = c.vars();
            let b = c.edge_ids().map(|e| state.edge_belief_skipping(e, skip));
            let independent: f64 = b.iter().map(|t| max_of(t)).sum();
            let (k1, k2) = (model.cardinality(v1), model.cardinality(v2));
            let mut joint = f64::NEG_INFINITY;
            for x0 in 0..model.cardinality(v0) {
                for x1 in 0..k1 {
                    let b01 = b[0][x0 * k1 + x1];
                    for x2 in 0..k2 {
                        joint = joint.max(b01 + b[1][x0 * k2 + x2] + b[2][x1 * k2 + x2]);
                    }
                }
            }
            independent - joint
        }
        Candidate::Square(s) => {
            let vars = s.vars();
            let edges = s.cycle_edges();
            let b = edges.map(|e| state.edge_belief_skipping(e, None));
            let independent: f64 = b.iter().map(|t| max_of(t)).sum();
            let k = vars.map(|v| model.cardinality(v));
            let mut joint = f64::NEG_INFINITY;
            for x0 in 0..k[0] {
                for x1 in 0..k[1] {
                    let s01 = oriented(model, edges[0], &b[0], vars[0], x0, x1);
                    for x2 in 0..k[2] {
                        let s012 = s01 + oriented(model, edges[1], &b[1], vars[1], x1, x2);
                        for x3 in 0..k[3] {
                            let total = s012
                                + oriented(model, edges[2], &b[2], vars[2], x2, x3)
                                + oriented(model, edges[3], &b[3], vars[3], x3, x0);
                            joint = joint.max(total);
                        }
                    }
                }
            }
            independent - joint
        }
    };
    d.max(0.0)
}

/// Registers `candidate` with zero messages. A square is triangulated along
/// its lowest-vertex diagonal, inserting a zero chord into `model` when
/// needed. Returns the triplets registered.
pub fn add_cluster(
    state: &mut MessageState,
    model: &mut PairwiseModel,
    candidate: &Candidate,
) -> Result<Vec<Cluster>, PursuitError> {
    match candidate {
        Candidate::Triplet(c) => {
            if state.is_registered(c.vars()) {
                return Err(ClusterError::Duplicate(c.vars().to_vec()).into());
            }
            state.register_cluster(model, *c)?;
            Ok(vec![*c])
        }
        Candidate::Square(s) => {
            let triplets = s.triplet_vars();
            if triplets.iter().all(|t| state.is_registered(*t)) {
                return Err(ClusterError::Duplicate(s.vars().to_vec()).into());
            }
            let (a, c) = s.chord();
            if model.edge_between(a, c).is_none() {
                *model = model.add_zero_chord(a, c)?;
                state.sync_edges(model);
            }
            let mut added = Vec::with_capacity(2);
            for t in triplets {
                if !state.is_registered(t) {
                    let cluster = Cluster::new(model, t)?;
                    state.register_cluster(model, cluster)?;
                    added.push(cluster);
                }
            }
            Ok(added)
        }
    }
}

enum Schedule {
    Score,
    Random(Box<ChaCha8Rng>),
}

/// Runs the full pursuit with clusters chosen by largest `d(c)`.
pub fn solve(model: &PairwiseModel, config: &SolveConfig) -> Result<SolveOutcome, PursuitError> {
    run(model, config, Schedule::Score, None)
}

/// As [`solve`], but each round adds uniformly random unregistered
/// candidates drawn from a `ChaCha8Rng` seeded with `seed`.
pub fn solve_random_schedule(
    model: &PairwiseModel,
    config: &SolveConfig,
    seed: u64,
) -> Result<SolveOutcome, PursuitError> {
    run(model, config, Schedule::Random(Box::new(ChaCha8Rng::seed_from_u64(seed))), Some(seed))
}

struct Run {
    model: PairwiseModel,
    state: MessageState,
    trace: SolveTrace,
    best: Option<(Assignment, f64)>,
    start: Instant,
    gap_tolerance: f64,
}

impl Run {
    fn record(&mut self, kind: EventKind, dual: f64, decoded: Option<f64>, scored: Option<(Candidate, f64)>) {
        self.trace.events.push(TraceEvent {
            kind,
            pass: self.state.pass_count(),
            dual,
            decoded,
            clusters: self.state.clusters().len(),
            candidate: scored.map(|(c, _)| c),
            score: scored.map(|(_, d)| d),
            elapsed: self.start.elapsed(),
        });
    }

    /// Passes until one lowers the dual by less than the convergence
    /// threshold, the gap closes, or the pass cap is hit. Returns whether
    /// the gap closed.
    fn converge(&mut self, config: &SolveConfig, dual: &mut f64) -> bool {
        for p in 0..config.initial_pass_cap {
            let (next, closed) = self.pass();
            let converged = p > 0 && *dual - next < config.convergence_threshold;
            *dual = next;
            if closed {
                return true;
            }
            if converged {
                return false;
            }
        }
        false
    }

    /// One pass plus decoding; returns the dual and whether the gap closed.
    fn pass(&mut self) -> (f64, bool) {
        self.state.run_pass(&self.model);
        let dual = self.state.dual_objective(&self.model);
        let plain = self.state.decode(&self.model);
        let plain_energy = self.model.evaluate_unchecked(plain.states());
        let tied = self.state.decode_tie_aware(&self.model, TIE_WINDOW);
        let tied_energy = self.model.evaluate_unchecked(tied.states());
        let (decoded, energy) = if tied_energy > plain_energy {
            (tied, tied_energy)
        } else {
            (plain, plain_energy)
        };
        self.record(EventKind::Pass, dual, Some(energy), None);
        if self.best.as_ref().is_none_or(|(_, e)| energy > *e) {
            self.best = Some((decoded, energy));
            self.record(EventKind::Decoded, dual, Some(energy), None);
        }
        let best = self.best.as_ref().map_or(f64::NEG_INFINITY, |(_, e)| *e);
        (dual, dual - best <= self.gap_tolerance)
    }
}

fn run(
    input: &PairwiseModel,
    config: &SolveConfig,
    mut schedule: Schedule,
    seed: Option<u64>,
) -> Result<SolveOutcome, PursuitError> {
    config.validate()?;
    if let Some(d) = input.validate().into_iter().next() {
        return Err(ModelError::Invalid(d).into());
    }
    let state = MessageState::new(input, &[])?;
    let mut run = Run {
        model: input.clone(),
        state,
        trace: SolveTrace { seed, events: Vec::new() },
        best: None,
        start: Instant::now(),
        gap_tolerance: config.gap_tolerance,
    };
    let mut added = Vec::new();
    let mut rounds = 0;

    let mut dual = f64::INFINITY;
    let certified = run.converge(config, &mut dual);

    let mut settled = true;
    let status = if certified {
        Status::Certified
    } else {
        loop {
            if rounds >= config.max_rounds {
                break Status::BudgetExhausted;
            }
            let pool = candidates(&run.model, &run.state, config.candidate_kind, config.square_budget);
            let chosen: Vec<(Candidate, f64)> = match &mut schedule {
                Schedule::Score => {
                    let mut scored: Vec<(Candidate, f64)> = pool
                        .into_iter()
                        .map(|c| {
                            let d = score_cluster(&run.state, &run.model, &c);
                            (c, d)
                        })
                        .filter(|(_, d)| *d > config.score_floor)
                        .collect();
                    // stable: ties keep enumeration order
                    scored.sort_by(|a, b| b.1.total_cmp(&a.1));
                    scored.truncate(config.clusters_per_round);
                    scored
                }
                Schedule::Random(rng) => {
                    let amount = config.clusters_per_round.min(pool.len());
                    let mut picks = rand::seq::index::sample(rng, pool.len(), amount).into_vec();
                    picks.sort_unstable();
                    picks
                        .into_iter()
                        .map(|i| (pool[i], score_cluster(&run.state, &run.model, &pool[i])))
                        .collect()
                }
            };
            if chosen.is_empty() {
                // the last round may have stopped short of convergence
                if settled {
                    break Status::GapRemaining;
                }
                settled = true;
                if run.converge(config, &mut dual) {
                    break Status::Certified;
                }
                continue;
            }
            settled = false;
            for (candidate, d) in chosen {
                add_cluster(&mut run.state, &mut run.model, &candidate)?;
                added.push(candidate);
                run.record(EventKind::ClusterAdded, dual, None, Some((candidate, d)));
            }
            rounds += 1;
            let mut done = false;
            for _ in 0..config.inner_iters {
                let (next, closed) = run.pass();
                dual = next;
                if closed {
                    done = true;
                    break;
                }
            }
            if done {
                break Status::Certified;
            }
        }
    };

    let (assignment, energy) = run.best.take().unwrap_or_else(|| {
        let a = Assignment::zeros(input.num_vars());
        let e = input.evaluate_unchecked(a.states());
        (a, e)
    });
    let passes = run.state.pass_count();
    Ok(SolveOutcome {
        assignment,
        energy,
        dual,
        status,
        trace: run.trace,
        added,
        rounds,
        passes,
        model: run.model,
        state: run.state,
    })
}
