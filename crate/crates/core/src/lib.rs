//! Local sequence alignment under general concave gap penalties, with the
//! large-deviation toolkit around it: growth-domain classification, log
//! moment generating functions of anchored alignment scores and their roots,
//! tail-probability bounds and estimators, and seeded strong-law experiments.

pub mod align;
pub mod asymptotics;
pub mod cli;
pub mod error;
pub mod io;
pub mod lawlab;
pub mod model;
pub mod rng;
pub mod roots;
pub mod tailprob;

pub use error::{Error, Result};
