pub mod bounds;
pub mod error;
pub mod herbrand;
pub mod kisin;
pub mod local;
pub mod padic;
pub mod plf;
pub mod rat;
pub mod ring;
pub mod solver;
pub mod witt;

pub use error::{Error, Result};
pub use kisin::KisinModule;
pub use local::{LocalElement, LocalFieldModel, Valuation, Valued};
pub use padic::{EisensteinPoly, PAdicTrunc, QuotRing};
pub use plf::{PiecewiseLinear, Plf};
pub use rat::Rat;
pub use solver::{JSetProblem, JSolutionSet};
pub use witt::{WittRing, WittVec};
