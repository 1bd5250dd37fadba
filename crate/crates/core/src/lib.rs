//! Hilbert-space ergodicity of a kicked qubit.
//!
//! Simulates a single spin under Floquet, smoothly kicked quasiperiodic and
//! Fibonacci drives, and measures how closely the temporal ensemble of visited
//! states matches Haar-random states through the trace distances
//! `Δ⁽ᵏ⁾(T) = ½‖ρ_T⁽ᵏ⁾ − ρ_Haar⁽ᵏ⁾‖₁`.
//!
//! * [`su2`]: spinors, Bloch vectors, kicks and density matrices
//! * [`drives`]: the drive protocols and trajectories
//! * [`moments`]: symmetric-subspace moments and `Δ⁽ᵏ⁾(T)` series
//! * [`channels`]: time-averaging and dephasing channels
//! * [`tomo`]: six-sequence photoluminescence tomography

pub mod channels;
pub mod drives;
pub mod error;
pub mod moments;
pub mod rng;
pub mod su2;
pub mod tomo;

pub use drives::{evolve, DriveKind, DriveProtocol, Trajectory};
pub use error::{Error, Result};
pub use moments::{delta_series, DeltaRecord, DeltaSeries, SamplePolicy, SymmetricMoment};
pub use su2::{bloch_to_spinor, BlochVector, DensityMatrix2, Spinor, Unitary2};
