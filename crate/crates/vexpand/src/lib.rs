//! Expansion diagnostics for covering maps of the torus.
//!
//! The crate estimates covector-averaged expansion weights b^mu and their
//! suprema B^mu, classifies maps as virtually expanding via the Fekete limit
//! of (B^{2 mu}(f^n))^{1/n}, assembles Fourier-Galerkin truncations of the
//! Perron-Frobenius operator on Sobolev spaces H^mu, and cross-checks
//! everything against independent oracles (closed-form Bessel matrices,
//! Monte-Carlo histograms, brute-force grid sups).

pub mod cotangent;
pub mod dynamics;
pub mod error;
pub mod oracles;
pub mod spectral;

pub use error::{Error, Result};
