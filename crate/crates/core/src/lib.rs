//! Reviewer assignment under adversarial bidding.
//!
//! The crate builds similarity scores from text, subject areas and bids,
//! solves the resulting assignment problems exactly, and implements a set of
//! defenses against bid manipulation along with the attacks they are meant to
//! resist and a harness that measures both.

pub mod adversary;
pub mod defenses;
pub mod error;
pub mod harness;
pub mod instance;
pub mod rng;
pub mod similarity;
pub mod solver;

pub use error::{Error, Result};
pub use instance::{
    eligible_pairs, validate_instance, BidLevel, BidMatrix, ConferenceInstance,
    DeterministicAssignment, DisplayMatrix, Finding, FractionalAssignment, Pair, ValidationReport,
};
pub use similarity::{compute_similarity, SimilarityConfig};
pub use adversary::{AttackScenario, AttackStrategy};
pub use defenses::{run_defense, AssignmentOutcome, BidOracle, DefensePolicy};
