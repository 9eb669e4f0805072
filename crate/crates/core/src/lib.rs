pub mod cyclotomic;
pub mod error;
pub mod eta_hilb;
pub mod lattice;
pub mod modular;
pub mod ntheory;
pub mod par;
pub mod partitions;
pub mod qseries;

pub use cyclotomic::CyclotomicNumber;
pub use error::{Error, Result};
pub use par::Execution;
pub use qseries::PuiseuxSeries;
