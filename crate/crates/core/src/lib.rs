//! Magnetic flows on surfaces and the invariants that single out horocycle
//! flows: Liouville action, asymptotic Maslov index, and the Mane critical
//! value machinery for closed magnetic geodesics.

pub mod critical;
pub mod error;
pub mod magflow;
pub mod invariants;
pub mod quad;
pub mod sl2;
pub mod stats;
pub mod surfaces;
pub mod trig;
pub mod variation;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use num_complex::Complex64;
pub use sl2::{Sl2Element, Sl2Generator};
pub use surfaces::{ChartPoint, DeckGroup, DeckWord, MagneticField, SurfaceModel};
