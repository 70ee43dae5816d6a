//! Isotropic minimal surfaces, the austere ruled submanifolds built over them,
//! and numerical verification of their geometry.

pub mod artifact;
pub mod error;
pub mod export;
pub mod fd;
pub mod framegeo;
pub mod holo;
pub mod isogen;
pub mod presets;
pub mod ruled;
pub mod run;
pub mod sampling;
pub mod structcheck;

pub use error::{Error, Result};
