pub mod build;
pub mod cli;
pub mod demo;
pub mod error;
pub mod eval;
pub mod format;
pub mod image_ops;
pub mod layout;
pub mod page;
pub mod render;
pub mod runtime;
pub mod scene;
pub mod stream;

pub use error::{Result, VtError};
