pub mod catalog;
pub mod error;
pub mod forms;
pub mod linalg;
pub mod mesh;
pub mod report;
pub mod torus;
pub mod verify;

pub use error::{OmegaError, Result};
