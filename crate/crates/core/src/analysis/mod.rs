//! Derived statistics over human judgments and model scores.

pub mod drop;
pub mod judgments;
pub mod stats;

pub use drop::{
    correlate_drops, group_drops, group_drops_with_ci, human_observations, intervention_delta, model_observations, overall_drop,
    passive_drop, DeltaRow, GroupBy, GroupDrop, PairObservation, PassiveDropRecord, Source, SuiteMismatch,
};
pub use judgments::{annotate, exclude_participants, read_judgments, Exclusion, ExclusionPolicy, JudgmentRow, JudgmentTable};
pub use stats::{
    bootstrap_ci, bootstrap_mean_ci, pearson_r, spearman_brown, split_half_reliability, BootstrapCi, Pearson, SplitHalf, StatsError,
};
