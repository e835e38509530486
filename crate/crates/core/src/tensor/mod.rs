//! Multipartite Hilbert-space bookkeeping: layouts, pure states, density
//! operators, isometries on the environment and subset masks.

mod density;
mod isometry;
mod json;
mod layout;
mod state;
mod subset;

pub use density::DensityOperator;
pub(crate) use isometry::gaussian_matrix;
pub use isometry::Isometry;
pub use json::{parse_state_json, StateJson};
pub use layout::{Part, SystemLayout, DEFAULT_DIM_CAP};
pub(crate) use state::check_bijection;
pub use state::{PureState, NORM_TOL};
pub use subset::{binomial, SizedSubsets, SubsetMask, MAX_SUBSET_SIZE};
