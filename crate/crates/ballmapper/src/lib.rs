//! File formats, the build pipeline, the command line and the HTTP service
//! around [`ballmapper_core`].

pub use ballmapper_core as core;

pub mod artifact;
pub mod error;
pub mod export;
pub mod io;
pub mod pipeline;
pub mod service;
