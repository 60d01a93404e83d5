// mdbook cannot run listings that depend on a local crate, so every chapter
// is included here as a module doc and `cargo test --doc` checks the code
// blocks. One module per chapter keeps failures traceable to a file.

#[doc = include_str!("src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("src/models.md")]
pub mod models {}
#[doc = include_str!("src/pod.md")]
pub mod pod {}
#[doc = include_str!("src/deim.md")]
pub mod deim {}
#[doc = include_str!("src/reduced-models.md")]
pub mod reduced_models {}
#[doc = include_str!("src/adjoints.md")]
pub mod adjoints {}
#[doc = include_str!("src/error-estimates.md")]
pub mod error_estimates {}
#[doc = include_str!("src/adaptive-deim.md")]
pub mod adaptive_deim {}
#[doc = include_str!("src/cli.md")]
pub mod cli {}
