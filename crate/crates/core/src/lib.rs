//! MAP inference for pairwise Markov random fields.
//!
//! The solver runs MPLP coordinate descent on the dual of the cluster-based
//! LP relaxation and tightens the relaxation with triplet (or triangulated
//! square) clusters chosen by their guaranteed bound decrease. It stops with
//! a certificate once the dual bound meets the energy of a decoded
//! assignment.
//!
//! ```
//! use cluster_mplp::model::{PairwiseModel, Table};
//! use cluster_mplp::pursuit::{solve, SolveConfig, Status};
//!
//! let disagree = Table::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
//! let triangle = PairwiseModel::new(
//!     vec![2, 2, 2],
//!     vec![vec![0.0, 0.0]; 3],
//!     vec![((0, 1), disagree.clone()), ((0, 2), disagree.clone()), ((1, 2), disagree)],
//! )
//! .unwrap();
//! let out = solve(&triangle, &SolveConfig::default()).unwrap();
//! assert_eq!(out.status, Status::Certified);
//! assert_eq!(out.energy, 2.0);
//! ```

pub mod cli;
pub mod cluster;
pub mod io;
pub mod messages;
pub mod model;
pub mod oracle;
pub mod pursuit;

pub use messages::MessageState;
pub use model::{Assignment, PairwiseModel, Table};
pub use pursuit::{solve, solve_random_schedule, SolveConfig, SolveOutcome, Status};
