//! Device selection and network policy generation for smart-space
//! workflows.
//!
//! Given a registry of networked devices, a workflow of functions with
//! trigger edges, and a user preference model over candidate devices, this
//! crate:
//!
//! 1. filters the devices capable of each workflow function,
//! 2. searches for the assignment the preference model scores highest
//!    (exactly, or with hill climbing / simulated annealing / a genetic
//!    algorithm), and
//! 3. compiles the chosen assignment into a least-privilege ACL policy that
//!    allows exactly the declared trigger and outbound flows and denies
//!    everything else.
//!
//! The `bench` module synthesizes instances with a known planted optimum and
//! measures how reliably and cheaply each search strategy recovers it.

pub mod bench;
pub mod device;
pub mod error;
pub mod policy;
pub mod preference;
pub mod solvers;
pub mod workflow;

pub use device::{load_network, Device, Direction, NetRequirement, Network, TransportProtocol};
pub use error::{Error, Result};
pub use policy::{generate_policy, serialize_policy, verify_least_privilege, AclPolicy, AclRule};
pub use preference::{
    load_model, log_score, plant_preference, plant_preference_with, score, Assignment,
    PreferenceModel, RemainderSplit,
};
pub use solvers::{
    filter_candidates, run_selection, solve_brute_force, solve_genetic, solve_hill_climbing,
    solve_simulated_annealing, CandidateSets, SolverConfig, SolverKind, SolverResult,
};
pub use workflow::{check_feasible, load_workflow, Workflow};
