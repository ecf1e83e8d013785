//! Every chapter of the guide as an empty module, so its code blocks run as
//! doctests.

#[doc = include_str!("../../../book/src/intro.md")]
pub mod intro {}
#[doc = include_str!("../../../book/src/graphs-and-trees.md")]
pub mod graphs_and_trees {}
#[doc = include_str!("../../../book/src/loop-forest.md")]
pub mod loop_forest {}
#[doc = include_str!("../../../book/src/updates.md")]
pub mod updates {}
#[doc = include_str!("../../../book/src/irreducibility.md")]
pub mod irreducibility {}
#[doc = include_str!("../../../book/src/dominance.md")]
pub mod dominance {}
#[doc = include_str!("../../../book/src/harness.md")]
pub mod harness {}
#[doc = include_str!("../../../README.md")]
pub mod readme {}
