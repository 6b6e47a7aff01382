//! Oscillation schedules, potentials built on them, and reaction coefficients.

pub mod membership;
pub mod potential;
pub mod reaction;
pub mod schedule;

pub use membership::{search_schedule, verify_membership, MembershipReport, SearchGrid};
pub use potential::{sup_distance, Potential, PotentialKind, PotentialRecord, Profile};
pub use reaction::{Reaction, ReactionKind};
pub use schedule::{Family, Level, OscillationSchedule, H, ONE_THIRD, TWO_THIRDS};
