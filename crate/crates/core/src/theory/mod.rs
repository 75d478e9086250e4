//! Exact, enumeration-based artifact analysis on small tabular environments.

pub mod detect;
pub mod enumerate;
pub mod info;
pub mod reduction;
pub mod report;
pub mod tabular;

pub use detect::{
    conditional_certainty, detect_artifacts, is_artifactual, max_conditional_certainty, relations_by_definition,
    relations_in, ArtifactRelation,
};
pub use enumerate::{enumerate_histories, path_count, HistoryDist, PATH_LIMIT};
pub use info::{history_information, mutual_information};
pub use reduction::{verify_artifact_reduction, verify_iterated_reduction, IteratedReduction, ReductionCheck, INFO_TOLERANCE};
pub use tabular::{make_artifactless_copy, StateSpec, TabularEnv};
pub use report::{theory_report, TheoryReport};
