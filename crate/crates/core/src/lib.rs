//! Plant models, analytic allocators and kernel-based predictive control
//! allocation for overactuated thrust-vectoring systems.

mod error;
pub mod kpca;
pub mod mathcore;
pub mod ncc;
pub mod plants;
pub mod sim;

pub use error::{Error, Result};
pub use mathcore::{BellParams, DualScalar, Quaternion, Scalar};
pub use plants::{Dims, InputBounds, PlantKind, PlantModel, PlantState, Uav2dParams, Uav3dParams, VesselParams};
