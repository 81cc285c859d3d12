//! Immersed fluid–structure interaction in two dimensions.
//!
//! A compressible-flow background discretized with quadratic B-splines carries
//! a meshfree peridynamics solid. The two are tied either by constraining the
//! solid to the background velocity field ([`coupling::Coupling::Strong`]) or by
//! a volumetric velocity penalty ([`coupling::Coupling::Weak`]). Time is
//! advanced with an explicit lumped-mass generalized-α scheme.
//!
//! The guide in `book/` walks through each piece with runnable snippets.

pub mod coupling;
pub mod diagnostics;
pub mod error;
pub mod flow;
pub mod integrator;
pub mod oracle;
pub mod output;
pub mod pd;
pub mod run;
pub mod scenario;
pub mod sim;
pub mod spline;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/splines.md")]
    mod splines {}
    #[doc = include_str!("../../../book/src/flow.md")]
    mod flow {}
    #[doc = include_str!("../../../book/src/peridynamics.md")]
    mod peridynamics {}
    #[doc = include_str!("../../../book/src/coupling.md")]
    mod coupling {}
    #[doc = include_str!("../../../book/src/time.md")]
    mod time {}
    #[doc = include_str!("../../../book/src/scenarios.md")]
    mod scenarios {}
}
