//! Linear sketches for Shannon, Renyi and Tsallis entropy and frequency
//! moments of turnstile streams, with an exact oracle to test them against.
//!
//! Start with [`estimators::estimate`]. The guide under `book/` walks through
//! each piece; its snippets run as doc-tests of this crate.

pub mod chebyshev;
pub mod config;
pub mod estimators;
pub mod error;
pub mod fixed;
pub mod harness;
pub mod hashing;
pub mod heavy;
pub mod oracle;
pub mod residual;
pub mod stable;
pub mod stream;

// Book chapters, compiled as doc-tests so the guide cannot drift.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/streams.md")]
    mod streams {}
    #[doc = include_str!("../../../book/src/stable-sketches.md")]
    mod stable_sketches {}
    #[doc = include_str!("../../../book/src/heavy-hitters.md")]
    mod heavy_hitters {}
    #[doc = include_str!("../../../book/src/interpolation.md")]
    mod interpolation {}
    #[doc = include_str!("../../../book/src/estimators.md")]
    mod estimators {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
