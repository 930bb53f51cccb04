pub mod bounds;
pub mod error;
pub mod fixtures;
pub mod gaussian;
pub mod holevo;
pub mod io;
pub mod linalg;
pub mod model;
pub mod povm;
pub mod random;
pub mod sdp;
pub mod sld;

pub use error::{Error, Result};
pub use model::QuantumModel;
