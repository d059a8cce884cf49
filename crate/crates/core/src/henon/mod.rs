//! Three-dimensional Hénon-like maps and their period-doubling renormalization.

mod family;
mod hdiffeo;
mod map;
mod renorm;

pub use family::{locate_feigenbaum, periodic_point, FeigenbaumLocation, PeriodicPoint};
pub use hdiffeo::{FirstReturn, HorizontalDiffeo, InverseData};
pub use map::{HenonMap3D, Partials, SaddlePair, SaddlePoint, STANDING_BOX};
pub use renorm::{
    renorm_tower, renormalize, RenormDiagnostic, RenormOptions, RenormStep, RenormTower,
    StepSummary, CHOP_TOL, FREEZE_THRESHOLD, PERTURBATION_BOUND, SECTION_SPREAD,
};
