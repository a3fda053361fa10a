//! Spectra and open-system dynamics of a two-level atom coupled to a cavity
//! mode that is in turn coupled to a mechanical oscillator.
//!
//! The crate is organised bottom-up: [`hilbert`] holds the truncated product
//! space and its operators, [`model`] the Hamiltonians and the polaron
//! spectrum, [`lindblad`] the master equation, [`observables`] the quantities
//! extracted from states and trajectories, and [`cli`] the scenario runner.

pub mod cli;
pub mod error;
pub mod hilbert;
pub mod lindblad;
pub mod model;
pub mod observables;

pub use error::{Error, Result};

#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/basis.md")]
    mod basis {}
    #[doc = include_str!("../../../book/src/polarons.md")]
    mod polarons {}
    #[doc = include_str!("../../../book/src/master_equation.md")]
    mod master_equation {}
    #[doc = include_str!("../../../book/src/observables.md")]
    mod observables {}
    #[doc = include_str!("../../../book/src/scenarios.md")]
    mod scenarios {}
}
