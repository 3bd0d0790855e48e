//! Spinodal decomposition simulation and analysis toolkit.

pub mod config;
pub mod error;
pub mod field;
pub mod fit;
pub mod io;
pub mod micro;
pub mod solver;
pub mod thermo;
pub mod transport;

pub use error::{Error, Result};
pub use field::{field_stats, gaussian_field, laplacian_periodic, FieldStats, GridSpec, ScalarField2D};
pub use thermo::{free_energy, GibbsModel};
