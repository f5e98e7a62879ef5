//! Ridge recovery for deterministic functions with sliced inverse regression
//! (SIR) and sliced average variance estimation (SAVE), plus a harness for
//! Monte Carlo convergence studies of both estimators.
//!
//! Pipeline: draw inputs from an [`measures::InputMeasure`], evaluate a model,
//! [`measures::standardize`] the inputs, then [`estimators::estimate`] slices
//! the responses, forms `Ĉ_SIR` or `Ĉ_SAVE`, and returns its spectrum. The
//! leading eigenvectors span the estimated ridge subspace.

pub mod cli;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod measures;
pub mod rng;
pub mod slicing;
pub mod spectral;
pub mod testfns;
pub mod types;

pub use error::{Result, SdrError};
pub use estimators::{estimate, save_matrix, sir_matrix};
pub use measures::{draw, fit_standardizer, pushforward_direction, standardize, InputMeasure, Standardizer};
pub use slicing::{partition_equal_count, partition_fixed, slice_stats, SlicePartition, SliceScheme, SliceStats};
pub use spectral::{decompose, gap_profile, subspace_distance, GapProfile};
pub use testfns::{HartmannParams, TestFunction};
pub use types::{validate_sample_set, Method, SampleSet, SdrEstimate, Subspace, SymmetricSpectrum};
