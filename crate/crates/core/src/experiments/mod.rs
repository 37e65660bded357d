//! TT baselines, pre-training on domain unions, the scenario × approach
//! transfer matrix, and leave-one-source-out ablations.

mod corpus;
mod plan;
mod report;
mod runner;

pub use corpus::{sample_id, sample_set_hash, Corpus};
pub use plan::{cell_name, Approach, Scenario, TransferPlan};
pub use report::{
    AblationCell, AblationReport, AblationRow, EvalReport, FoldResult, MatrixReport, RunRecord,
    SummaryCell, TargetAblation, TargetMatrix,
};
pub use runner::{verify_frozen, ExperimentSettings, RunSetup, Runner, TT_CELL};
