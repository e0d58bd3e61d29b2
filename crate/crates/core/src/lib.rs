pub mod capacity;
pub mod chart;
pub mod conformal;
pub mod error;
pub mod function;
pub mod io;
pub mod metric;
pub mod quad;
pub mod sr;

pub use chart::{GridChart, ScalarField};
pub use error::{Error, Result};
pub use function::ScalarFn;
