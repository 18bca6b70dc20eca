use thiserror::Error;

/// Everything that can go wrong while loading documents, scoring models,
/// running solvers, or compiling policies.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed document: {0}")]
    Parse(#[from] serde_json::Error),

    // ---- device registry ----
    #[error("duplicate device id {0:?}")]
    DuplicateDeviceId(String),

    #[error("duplicate device address {address} (devices {first:?} and {second:?})")]
    DuplicateAddress {
        address: String,
        first: String,
        second: String,
    },

    #[error("device {device:?}: {problem}")]
    InvalidDevice { device: String, problem: String },

    #[error("device {device:?} declares network requirements for {function:?} which is not in its capability set")]
    RequirementForUnlistedCapability { device: String, function: String },

    #[error("device {device:?} does not support function {function:?}")]
    FunctionNotSupported { device: String, function: String },

    // ---- workflow ----
    #[error("workflow: {0}")]
    InvalidWorkflow(String),

    #[error("workflow contains a cycle: {}", cycle.join(" -> "))]
    WorkflowCycle { cycle: Vec<String> },

    #[error("workflow is infeasible: no capable device for {}", functions.join(", "))]
    Infeasible { functions: Vec<String> },

    // ---- preference model ----
    #[error("model: {0}")]
    InvalidModel(String),

    #[error("model node parents contain a cycle: {}", cycle.join(" -> "))]
    ModelCycle { cycle: Vec<String> },

    #[error("model node {node:?}: CPT row for parents {parents:?} sums to {sum} (must be 1 within {tolerance})")]
    CptRowSum {
        node: String,
        parents: Vec<String>,
        sum: f64,
        tolerance: f64,
    },

    #[error("assignment binds {function:?} to {device:?}, which is not in that node's value domain")]
    DeviceNotInDomain { function: String, device: String },

    #[error("assignment and model disagree: {0}")]
    AssignmentMismatch(String),

    #[error("cannot plant a preference: {0}")]
    InvalidPlant(String),

    // ---- solvers ----
    #[error("search space of {space} assignments exceeds the exhaustive-search cap of {cap}")]
    SearchSpaceExceeded { space: u128, cap: u64 },

    #[error("solver configuration: {0}")]
    InvalidConfig(String),

    #[error("model does not cover the candidate sets: {0}")]
    ModelInstanceMismatch(String),

    // ---- policy ----
    #[error("function {function:?} is referenced by the workflow but has no device assigned")]
    UnassignedFunction { function: String },

    #[error("edge {src} -> {dst} cannot be triggered: device {device:?} declares no inbound trigger requirement for {dst:?}")]
    UnsatisfiableTrigger {
        src: String,
        dst: String,
        device: String,
    },

    // ---- bench ----
    #[error("benchmark specification: {0}")]
    InvalidBenchSpec(String),
}

pub type Result<T> = std::result::Result<T, Error>;
