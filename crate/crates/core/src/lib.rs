//! Spin Hamiltonians for an NV-centre electron coupled to nearby ¹³C and
//! ¹⁴N nuclei, with the tools to turn them into measurable signals.
//!
//! - [`spin`]: operators, product bases and a Hermitian eigensolver
//! - [`hyperfine`]: coupling tensors, derived scalars and the site-family catalog
//! - [`hamiltonian`]: system specifications and matrix assembly
//! - [`effective`]: closed forms for the `m_s = 0` nuclear splitting and ¹⁴N lines
//! - [`spectroscopy`]: transition lines, synthetic spectra and pair lines
//! - [`dynamics`]: Ramsey and Hahn-echo traces, FFT and least-squares fits
//! - [`stats`]: site occupancy and family contrast ratios
//!
//! Frequencies are in MHz, fields in G and times in µs.
//!
//! ```
//! use nvspin::effective::delta_e_closed;
//! use nvspin::hamiltonian::FieldConfig;
//! use nvspin::hyperfine::{Family, FamilyCatalog, PhysicalConstants};
//!
//! let sc = FamilyCatalog::default().get(Family::A).scalars;
//! let f = delta_e_closed(&sc, &FieldConfig::axial(486.8), &PhysicalConstants::default());
//! assert!((f - 0.4698).abs() < 2e-3);
//! ```

pub mod dynamics;
pub mod effective;
pub mod error;
pub mod hamiltonian;
pub mod hyperfine;
pub mod spectroscopy;
pub mod spin;
pub mod stats;

pub use error::{Error, Result};
pub use num_complex::Complex64;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/spin-operators.md")]
    struct SpinOperators;
    #[doc = include_str!("../../../book/src/hyperfine.md")]
    struct Hyperfine;
    #[doc = include_str!("../../../book/src/hamiltonians.md")]
    struct Hamiltonians;
    #[doc = include_str!("../../../book/src/effective-theory.md")]
    struct EffectiveTheory;
    #[doc = include_str!("../../../book/src/spectroscopy.md")]
    struct Spectroscopy;
    #[doc = include_str!("../../../book/src/dynamics.md")]
    struct Dynamics;
    #[doc = include_str!("../../../book/src/statistics.md")]
    struct Statistics;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
}
