//! Incomplete database instances with open and closed nulls: semantic
//! implication and membership under OWA, CWA, PCWA, OCWA* and OCWA^LS,
//! cores and multicores, annotation minimization, and certain answers.

pub mod error;
pub mod hom;
pub mod limits;
pub mod model;

pub use error::{Error, Result};
pub use limits::Limits;
pub mod semantics;
pub mod cores;
pub mod annotation;
pub mod query;
pub mod io;
pub mod oracle;
pub mod fixtures;
