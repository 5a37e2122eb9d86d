//! Multifrequency electrical impedance tomography in the unit disk.
//!
//! The pipeline runs from a star-shaped inclusion to boundary voltages over a
//! frequency sweep, back to the frequency-independent perfect-conductor data,
//! and finally to a reconstructed inclusion:
//!
//! - [`geometry`]: inclusion shapes and boundary grids
//! - [`potential`]: Neumann-function layer potentials
//! - [`spectrum`]: Poincaré spectrum and plasmonic resonances
//! - [`forward`]: direct, spectral and perfect-conductor solvers
//! - [`disentangle`]: rational fitting in the contrast variable
//! - [`reconstruct`]: shape inversion and stability sweeps
//! - [`io`]: CSV and JSON formats

pub mod disentangle;
pub mod error;
pub mod forward;
pub mod geometry;
pub mod io;
pub mod potential;
pub mod quadrature;
pub mod reconstruct;
pub mod spectrum;

pub use disentangle::{extract_u0, fit_rational, FitOptions, RationalModel};
pub use error::{Bound, Error, Result};
pub use forward::{
    CauchyData, CurrentSpec, ForwardModel, FrequencyProfile, MultiFreqData, NeumannDatum,
    Resolution,
};
pub use geometry::{build_star_shape, discretize, r_inf, BoundaryGrid, DomainConfig, StarShape};
pub use num_complex::Complex64;
pub use potential::{assemble, eval_s, neumann_kernel, s_inner, KernelMatrices};
pub use spectrum::{compute_spectrum, resonance_bound, NPSpectrum, SpectrumOptions};

/// Version of this crate, recorded in output manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
