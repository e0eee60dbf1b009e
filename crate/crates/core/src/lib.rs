//! Constraint-driven spatial editing of segmented 2D icon scenes.

pub mod bench;
pub mod config;
pub mod dsl;
mod error;
pub mod eval;
pub mod fixtures;
pub mod geom;
pub mod llm;
pub mod par;
pub mod pipeline;
pub mod raster;
pub mod relations;
pub mod render;
pub mod scene;
pub mod search;
pub mod solver;

pub use config::Config;
pub use error::{Error, Result};
