pub mod antidiv;
pub mod driver;
pub mod error;
pub mod field;
pub mod fit;
pub mod flow;
pub mod grid;
pub mod interp;
pub mod linalg;
pub mod mikado;
pub mod norms;
pub mod ops;
pub mod quadrature;
pub mod scheme;
pub mod spectral;
pub mod time;
pub mod verify;

pub use error::{Error, Result};
pub use field::{MatrixField, ScalarField, VectorField};
pub use grid::Grid;
pub use time::{TimeField, TimeGrid};
