//! Numerical toolkit for contact geometry on coordinate charts.

pub mod bourgeois;
pub mod catalog;
pub mod chart;
pub mod contact;
pub mod error;
pub mod fibration;
pub mod field;
pub mod form;
pub mod geiges;
pub mod holonomy;
pub mod jet;
pub mod linalg;
pub mod milnor;
pub mod ode;
pub mod paths;
pub mod plastikstufe;
pub mod prescribe;
pub mod sampling;
pub mod scenario;

pub use chart::{ChartManifold, Coordinate, ExcludedRegion, Point};
pub use error::{Error, Result};
pub use field::{DiffBackend, ScalarField, VectorField};
pub use form::{DifferentialForm, SmoothMap};
pub use jet::Jet;
