//! Non-crossing matching length of words in free groups.
//!
//! A word over `k` generators and their inverses has length `ℓ`: the fewest
//! letters left unmatched by a non-crossing matching that pairs letters with
//! their inverses (equivalently, unpaired bases of an optimal pseudo-knot-free
//! secondary structure for `k = 2`). This crate computes `ℓ` exactly, runs and
//! solves the one-sided greedy matching chain, evaluates the bounds that
//! bracket the limiting unmatched fraction, and hosts reproducible Monte Carlo
//! experiments around it.

pub mod bounds;
pub mod chain;
pub mod error;
pub mod exact;
pub mod greedy;
pub mod matching;
pub mod montecarlo;
pub mod rational;
pub mod reproduce;
pub mod rng;
pub mod word;

pub use error::{Error, Result};
pub use exact::{brute_force_length, census, min_unmatched, optimal_length, rho_exact, LengthResult};
pub use greedy::{chain_step, greedy_match, GreedyTrace};
pub use matching::{validate_matching, Matching};
pub use rng::{sample_word, WordRng};
pub use word::{conjugate, cyclic_reduce, free_reduce, parse_word, Letter, Word};
