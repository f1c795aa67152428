//! CARFAC v2: a cascade of asymmetric resonators with fast-acting
//! compression, modeling the cochlea from sound pressure to basilar-membrane
//! motion (BM) and inner-hair-cell neural activity (NAP).
//!
//! The usual entry point is [`Carfac`]:
//!
//! ```
//! use carfac::{default_design, Carfac, RunOptions};
//!
//! let params = default_design(22050.0).unwrap();
//! let mut model = Carfac::<f64>::new(&params, 1).unwrap();
//! let tone: Vec<f64> = (0..2205)
//!     .map(|t| 0.01 * (2.0 * std::f64::consts::PI * 1000.0 * t as f64 / 22050.0).sin())
//!     .collect();
//! let out = model.run_segment(&[tone], RunOptions::default()).unwrap();
//! assert_eq!(out.nap[0].n_ch(), 71);
//! ```

// `!(x > 0.0)` is used on purpose so that NaN parameters are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod agc;
pub mod analysis;
pub mod car;
pub mod cli;
pub mod design;
pub mod error;
pub mod ihc;
pub mod io;
pub mod model;
mod real;

pub use design::{
    default_design, design_carfac, AgcDesignParams, CarDesignParams, CarfacCoeffs, CarfacDesignParams,
    ChannelMap, IhcDesignParams, IhcVariant,
};
pub use error::{CarfacError, Result};
pub use model::{Carfac, OutputSelection, Plane, RunOptions, SegmentOutput};
pub use real::Real;
