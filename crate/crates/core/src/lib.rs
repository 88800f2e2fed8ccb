//! Ball-average square functions and Hardy-Sobolev norm experiments on
//! sampled periodic fields.
//!
//! The crate computes the scale-integrated square functions built from
//! ball averages and their binomial iterates, discrete surrogates for the
//! Hardy space and fractional Sobolev norms, and quadrature checks of the
//! bound governing the smoothed Riesz kernel difference integral. The
//! ambient domain is the periodic torus [0, L)^n; convolutions are exact
//! periodic FFT convolutions, and the scale integral is truncated to the
//! resolvable range [2h, L/2].

pub mod convolve;
pub mod error;
pub mod field;
pub mod hardy_norms;
pub mod kernels;
pub mod lemma_check;
pub mod quadrature;
pub mod squarefn;
pub mod testfields;

mod fft;
mod sum;

pub use error::{Error, Result};
pub use field::{Field, GridSpec};
