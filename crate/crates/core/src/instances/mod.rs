//! Problem-class generators, the JSON instance format and an exhaustive
//! oracle for small instances.

mod generators;
mod io;
mod oracle;

pub use generators::{
    assign3d_from, assign3d_index, facility_from, gen_assign3d, gen_facility, gen_knapsack,
    gen_maxcut, gen_setcover, gen_tsp_mtz, knapsack_from, maxcut_from, random_graph, setcover_from,
    tsp_from, MaxCutForm, TspLayout, WEIGHT_GRID,
};
pub use io::{instance_from_json, instance_to_json, read_instance, write_instance};
pub use oracle::{brute_force, OracleOutcome, OracleResult, ORACLE_MAX_N};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::LinalgError;
use crate::model::{BipInstance, ModelError};

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("invalid size: {0}")]
    InvalidSize(String),
    #[error("oracle needs n <= {max}, got {n}")]
    TooLarge { n: usize, max: usize },
    #[error("instance file declares n = {declared} but c has {found} entries")]
    DeclaredSize { declared: usize, found: usize },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed instance JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl From<LinalgError> for InstanceError {
    fn from(e: LinalgError) -> Self {
        InstanceError::Model(ModelError::Linalg(e))
    }
}

/// A generator class with its size parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum ProblemClass {
    Setcover { m: usize, n: usize },
    Knapsack { n: usize },
    MaxcutQp { n: usize },
    MaxcutIp { n: usize },
    Assign3d { n: usize },
    Facility { n_f: usize, n_c: usize },
    TspMtz { n: usize },
}

impl ProblemClass {
    pub const TAGS: [&'static str; 7] = [
        "setcover",
        "knapsack",
        "maxcut_qp",
        "maxcut_ip",
        "assign3d",
        "facility",
        "tsp_mtz",
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            ProblemClass::Setcover { .. } => "setcover",
            ProblemClass::Knapsack { .. } => "knapsack",
            ProblemClass::MaxcutQp { .. } => "maxcut_qp",
            ProblemClass::MaxcutIp { .. } => "maxcut_ip",
            ProblemClass::Assign3d { .. } => "assign3d",
            ProblemClass::Facility { .. } => "facility",
            ProblemClass::TspMtz { .. } => "tsp_mtz",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    #[serde(flatten)]
    pub class: ProblemClass,
    pub seed: u64,
}

pub fn generate(cfg: &GeneratorConfig) -> Result<BipInstance, InstanceError> {
    let seed = cfg.seed;
    match cfg.class {
        ProblemClass::Setcover { m, n } => gen_setcover(m, n, seed),
        ProblemClass::Knapsack { n } => gen_knapsack(n, seed),
        ProblemClass::MaxcutQp { n } => gen_maxcut(n, seed, MaxCutForm::Qp),
        ProblemClass::MaxcutIp { n } => gen_maxcut(n, seed, MaxCutForm::Ip),
        ProblemClass::Assign3d { n } => gen_assign3d(n, seed),
        ProblemClass::Facility { n_f, n_c } => gen_facility(n_f, n_c, seed),
        ProblemClass::TspMtz { n } => gen_tsp_mtz(n, seed),
    }
}

/// Classes generated as maximization problems and stored negated.
pub fn is_maximization(class: &str) -> bool {
    matches!(class, "knapsack" | "maxcut_qp" | "maxcut_ip")
}

#[cfg(test)]
mod tests;
