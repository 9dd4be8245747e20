// mdbook can't run snippets that need a dependency, so each chapter is
// pulled in as a doc comment and `cargo test --doc` runs them.

#[doc = include_str!("src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("src/ledger.md")]
pub mod ledger {}
#[doc = include_str!("src/consensus.md")]
pub mod consensus {}
#[doc = include_str!("src/contracts.md")]
pub mod contracts {}
#[doc = include_str!("src/scaling.md")]
pub mod scaling {}
#[doc = include_str!("src/simulation.md")]
pub mod simulation {}
#[doc = include_str!("src/fees.md")]
pub mod fees {}
#[doc = include_str!("src/service.md")]
pub mod service {}
