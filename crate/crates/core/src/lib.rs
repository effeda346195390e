pub mod allocate;
pub mod error;
pub mod fixtures;
pub mod kron;
pub mod measures;
pub mod netmodel;
pub mod simulate;
pub mod spectral;

#[cfg(test)]
mod test_support;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/network.md")]
    mod network {}
    #[doc = include_str!("../../../book/src/spectra.md")]
    mod spectra {}
    #[doc = include_str!("../../../book/src/measures.md")]
    mod measures {}
    #[doc = include_str!("../../../book/src/kron.md")]
    mod kron {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/allocation.md")]
    mod allocation {}
    #[doc = include_str!("../../../book/src/ieee13.md")]
    mod ieee13 {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
