//! Machine-checked refutation of the premises of Arrow's theorem for small
//! electorates.
//!
//! The crate enumerates weak orders and profiles, grounds the premises as
//! constraints over society's preference cells, refutes them by case split
//! and propagation, emits a line-numbered proof trace and re-checks it with
//! an independent checker. A DIMACS export gives a second route through an
//! ordinary SAT solver.

pub mod axioms;
pub mod checker;
pub mod cnf;
pub mod error;
pub mod model;
pub mod search;
pub mod trace;

pub use axioms::{
    build_constraints, detect_dictators, propagate_to_fixpoint, BuildOptions, Cell, CellAssignment, Conflict,
    ConflictKind, Constraint, ConstraintSet, Literal, PropagationOrder, Reason, Rule, Step, TriState,
};
pub use error::{Error, Result};
pub use model::{Config, Domain, OrderId, Profile, ProfileId, WeakOrder};
pub use search::{enumerate_models, pick_split_cell, refute, refute_with, Model, Node, Refutation};
