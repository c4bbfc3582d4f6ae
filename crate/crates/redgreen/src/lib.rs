//! Khovanov-Lee complexes of tangles and links over the dotted cobordism
//! category, the red/green Karoubi splitting that produces a representative
//! with vanishing differential, and an independent exact-arithmetic homology
//! oracle to verify the degeneration (2^c generators at heights given by
//! linking sums) on concrete diagrams.

pub mod braid;
pub mod cobordism;
pub mod complex;
pub mod diagram;
pub mod dyadic;
pub mod error;
pub mod karoubi;
pub mod lee;
pub mod oracle;
pub mod smoothing;

pub use diagram::{Colour, Crossing, Orientation, TangleDiagram};
pub use dyadic::Dyadic;
pub use error::{Error, Result};
