//! Full-rate, full-diversity 2×2 space-time block codes over QAM.
//!
//! Codes are described uniformly as linear-dispersion data: eight complex
//! weight matrices (one per real symbol coordinate) plus the real generator
//! matrix acting on the (possibly rotated) symbol coordinates. Everything in
//! this crate is allocation-light and `no_std`; Monte Carlo orchestration,
//! file formats and the CLI live in the `stbc-lab` companion crate.
//!
//! The crate is organised bottom-up:
//!
//! * [`linalg`]: 2×2 complex and 8×8 real primitives, the real stacking
//!   operator and Gram-Schmidt QR.
//! * [`constellation`]: odd-integer-grid QAM and the CIOD rotation.
//! * [`codes`]: the code registry (proposed code, CIOD, Golden, HTW-PGA,
//!   Sezginer-Sari).
//! * [`channel`]: Rayleigh channel draws, AWGN and the real equivalent model.
//! * [`decoders`]: exhaustive, conditional and sphere ML decoders.
//! * [`analysis`]: minimum determinant, NVD scan, R-pattern and
//!   weight-identity verification.

#![no_std]
#![warn(missing_debug_implementations)]
#![allow(clippy::needless_range_loop)]

extern crate alloc;

pub mod analysis;
pub mod channel;
pub mod codes;
pub mod constellation;
pub mod decoders;
pub mod linalg;

pub use num_complex::Complex64;

pub use codes::{CodeId, CodeSpec, SymbolVector};
pub use constellation::QamAlphabet;
pub use decoders::DecodeResult;
pub use linalg::{CMat2, RMat8, RVec8};
