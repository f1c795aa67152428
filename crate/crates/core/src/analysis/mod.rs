//! Measurements built on the model: spectra, distortion products, IHC
//! synchrony, transfer functions, impairment, delay-buffer comparisons,
//! benchmarks, golden data and cochleagrams.

pub mod benchmark;
pub mod cochleagram;
pub mod coeffs_dump;
pub mod delay;
pub mod distortion;
pub mod golden;
pub mod response;
pub mod spectrum;
pub mod synchrony;
