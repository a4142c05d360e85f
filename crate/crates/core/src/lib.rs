//! Aharonov–Bohm eigenvalue asymptotics for a half-flux pole moving inside a
//! planar domain.

pub mod asymptotics;
pub mod cli;
pub mod eigen;
pub mod error;
pub mod expansion;
pub mod extrapolate;
pub mod field;
pub mod geom;
pub mod grid;
pub mod identities;
pub mod linalg;
pub mod lsq;
pub mod operator;
pub mod profile;
pub mod scalar;
pub mod slit;

pub use error::{Error, Result};
pub use geom::Point;
