//! Region geometry, distance metrics and diagnostics.

pub mod bounds;
pub mod exact;
pub mod lhl;
pub mod montecarlo;
pub mod region;
pub mod report;

pub use bounds::{reference_curves, BoundFamily, ReferenceCurves};
pub use exact::{block_output_law, codec_tv, product_law, tv_composed, tv_exhaustive, ExactRun};
pub use lhl::{lhl_bound, lhl_bound_check, LhlCheck};
pub use montecarlo::{
    independence_diagnostics, monte_carlo, tv_monte_carlo, Diagnostics, Estimate, IidSource, McConfig, McReport,
    TrialOutput, TrialSource, WindowedTv,
};
pub use region::{
    classify_two_user, region_2user, region_multi, ChannelCase, Constraint, CornerPoint, RegionSpec,
    TwoUserRegion,
};
pub use report::{evaluate, sha256_hex, EvalMode, Metric, RegionVerdict, RunReport};
