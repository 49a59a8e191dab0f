//! The optimistic learner.
//!
//! Each episode solves, region by region and step by step, a ridge regression
//! on optimistic targets and then acts greedily on the resulting optimistic
//! Q-function. Two planners are available: a pointwise bonus relaxation used
//! by default, and an exhaustive ε-grid search over the joint perturbation
//! vector for tiny instances.

mod exact;
mod learner;
mod schedule;

pub use exact::{ThetaEntry, ThetaTable, MAX_EXACT_GRID, MAX_EXACT_PARAMETERS};
pub use learner::{Cinderella, LearnerConfig, PlanSummary, PlannerKind, TargetClip};
pub use schedule::BonusSchedule;
