pub mod conditioning;
pub mod error;
pub mod finstoch;
pub mod gauss;
pub mod gen;
pub mod io;
pub mod laws;
pub mod learning;
pub mod paralens;
pub mod ps;
pub mod rat;

pub use error::{Error, Result};
pub use finstoch::{FinSpace, Kernel, State};
pub use rat::Rat;
