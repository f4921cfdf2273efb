//! The guide's chapters compiled as doctests, so every snippet in `book/`
//! runs under `cargo test`.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/registers.md")]
pub mod registers {}
#[doc = include_str!("../../../book/src/edit-distance.md")]
pub mod edit_distance {}
#[doc = include_str!("../../../book/src/induced-graph.md")]
pub mod induced_graph {}
#[doc = include_str!("../../../book/src/patterns.md")]
pub mod patterns {}
#[doc = include_str!("../../../book/src/attack.md")]
pub mod attack {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
