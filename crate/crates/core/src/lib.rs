pub mod eigen;
pub mod fuchsian;
pub mod hyperbolic;
pub mod kernel;
pub mod error;
pub mod specfun;
pub mod spectra;
pub mod wavelet;

pub use error::{Error, Result};
