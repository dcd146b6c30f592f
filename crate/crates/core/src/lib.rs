pub mod assignment;
pub mod clusters;
pub mod covariance;
pub mod error;
pub mod eval;
pub mod fixtures;
pub mod io;
pub mod linalg;
pub mod lp;
pub mod model;
pub mod moments;
pub mod pipeline;
pub mod precision;
pub mod pure;
pub mod rows;
pub mod simulate;
pub mod tuning;

pub use error::{LoveError, Result};
