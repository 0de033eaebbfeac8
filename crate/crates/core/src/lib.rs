//! Spectral-Galerkin simulation of semilinear evolution equations driven by
//! cylindrical symmetric α-stable noise, together with the numerical
//! constants, gradient estimates and mixing diagnostics that go with them.

pub mod error;
pub mod mixing;
pub mod model;
pub mod observable;
pub mod quad;
pub mod semigroup;
pub mod simulator;
pub mod special;
pub mod stable;
pub mod stats;

pub use error::{Error, Result};

/// Order-preserving map over `0..n`, parallel when the `parallel` feature is on.
pub(crate) fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}
