//! Poissonian image deconvolution with a framelet patch-wise minimal prior
//! (FPMP) and Grünwald–Letnikov fractional gradients.
//!
//! The non-blind solver lives in [`solver`], the alternating blind variant in
//! [`blind`]. [`degrade`] builds synthetic test data, [`metrics`] scores
//! results, and [`cli`] wraps everything in the `fpmp` binary.
//!
//! ```
//! use fpmp::degrade::{degrade, NoiseSpec, PsfSpec};
//! use fpmp::solver::{solve_nonblind, SolverConfig};
//!
//! let clean = fpmp::scenes::cameraman(32);
//! let psf = PsfSpec::Gaussian { size: 5, sigma: 1.0 };
//! let d = degrade(&clean, &psf, &NoiseSpec { peak: 255.0, seed: 1 }).unwrap();
//! let cfg = SolverConfig { alpha: 1.0, patch: 8, max_iter: 20, ..SolverConfig::default() };
//! let (x, history) = solve_nonblind(&d.observed, &d.kernel, &cfg).unwrap();
//! assert_eq!(x.dim(), (32, 32));
//! assert!(!history.is_empty());
//! ```

pub mod blind;
pub mod cli;
pub mod degrade;
pub mod error;
pub mod fft;
pub mod fracgrad;
pub mod framelet;
pub mod image;
pub mod io;
pub mod metrics;
pub mod priors;
pub mod scenes;
pub mod solver;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/blur.md")]
    mod blur {}
    #[doc = include_str!("../../../book/src/framelet.md")]
    mod framelet {}
    #[doc = include_str!("../../../book/src/fracgrad.md")]
    mod fracgrad {}
    #[doc = include_str!("../../../book/src/solver.md")]
    mod solver {}
    #[doc = include_str!("../../../book/src/blind.md")]
    mod blind {}
    #[doc = include_str!("../../../book/src/degrade.md")]
    mod degrade {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
