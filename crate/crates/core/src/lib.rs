pub mod circuits;
pub mod divmax;
pub mod error;
pub mod family;
pub mod io;
pub mod lab;
pub mod linalg;
pub mod lp;
pub mod projection;
pub mod rational;
pub mod zoo;

pub use error::{Error, Result};
pub use family::{ExponentialFamily, Measure, NaturalParameters, ProbabilityVector, StateSpace, SufficientStatistics};
