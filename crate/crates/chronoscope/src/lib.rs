pub mod error;
pub mod grid;
pub mod state;

pub mod interferometer;
pub mod phase_space;
pub mod retrieval;

pub mod config;
pub mod io;
pub mod scenario;

pub use error::ChronoError;
