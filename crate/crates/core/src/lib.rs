#![no_std]
extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

mod error;
pub mod linalg;

pub use error::{Error, Result};
pub mod antieigen;
pub mod dissipativity;
pub mod ou;
pub mod regions;
pub mod sphere;
