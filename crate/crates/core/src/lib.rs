//! Bounds on the quantum communication cost of rotating a multipartite pure
//! state among users arranged on a ring.

pub mod analysis;
pub mod bounds;
pub mod entropy;
pub mod error;
mod linalg;
pub mod rates;
pub mod states;
mod task;
pub mod tensor;
pub mod verify;

pub use bounds::{BoundsReport, LValue, LowerBoundSolver, OptimizerConfig, Witness};
pub use error::{QsrError, Result};
pub use linalg::CMatrix;
pub use rates::{LValueTable, SegmentRateMatrix};
pub use states::StateSpec;
pub use task::RotationTask;
pub use tensor::{DensityOperator, Isometry, Part, PureState, StateJson, SubsetMask, SystemLayout};
