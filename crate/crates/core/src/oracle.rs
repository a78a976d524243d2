//! Exact MAP by exhaustive enumeration.

use thiserror::Error;

use crate::model::{Assignment, PairwiseModel};

/// Default cap on the number of joint states enumerated.
pub const DEFAULT_LIMIT: u128 = 1 << 24;

/// Energies within this distance of the best count as optima.
pub const OPTIMA_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("state space of {size} assignments exceeds the enumeration limit {limit}")]
    TooLarge { size: u128, limit: u128 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// Lexicographically smallest maximizer.
    pub assignment: Assignment,
    pub energy: f64,
    /// Number of assignments within [`OPTIMA_TOLERANCE`] of `energy`.
    pub optima: u64,
}

/// Enumerates every joint state in lexicographic order (last variable
/// fastest) and keeps the first strict maximum.
pub fn brute_force_map(model: &PairwiseModel, limit: u128) -> Result<OracleResult, OracleError> {
    let size = model.state_space_size();
    if size > limit {
        return Err(OracleError::TooLarge { size, limit });
    }
    let n = model.num_vars();
    let cards = model.cardinalities();
    let mut states = vec![0usize; n];
    let mut best_states = states.clone();
    let mut best = model.evaluate_unchecked(&states);
    let mut optima = 1u64;
    loop {
        // odometer step; returns when all digits wrap
        let mut pos = n;
        loop {
            if pos == 0 {
                return Ok(OracleResult { assignment: Assignment(best_states), energy: best, optima });
            }
            pos -= 1;
            states[pos] += 1;
            if states[pos] < cards[pos] {
                break;
            }
            states[pos] = 0;
        }
        let value = model.evaluate_unchecked(&states);
        if value > best + OPTIMA_TOLERANCE {
            best = value;
            best_states.copy_from_slice(&states);
            optima = 1;
        } else if value >= best - OPTIMA_TOLERANCE {
            optima += 1;
            if value > best {
                best = value;
                best_states.copy_from_slice(&states);
            }
        }
    }
}
