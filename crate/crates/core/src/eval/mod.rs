//! Evaluation: macro-F1 metrics, cross-validated pipelines, analogy
//! queries and report serialization.

pub mod analogy;
pub mod cv;
pub mod metrics;
pub mod report;

pub use analogy::VectorSpace;
pub use cv::{
    compare_regimes, cross_validate, mean_std, pairs_for_regime, CvResult, FoldScore,
    PipelineSpec, RegimeComparison, Task,
};
pub use metrics::{macro_f1, task_b_score, task_c_score, ConfusionCounts};
pub use report::{EvalReport, FoldRecord, ReportLine, SummaryRecord};
