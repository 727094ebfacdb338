// mdbook cannot run snippets that depend on an outside crate, so the
// chapters are pulled in here as module docs and `cargo test --doc` runs
// them against the real `qedft`. A failing block is reported under the
// chapter's module name.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/lattices.md")]
pub mod lattices {}
#[doc = include_str!("../../../book/src/exact.md")]
pub mod exact {}
#[doc = include_str!("../../../book/src/vqe.md")]
pub mod vqe {}
#[doc = include_str!("../../../book/src/functionals.md")]
pub mod functionals {}
#[doc = include_str!("../../../book/src/kohn-sham.md")]
pub mod kohn_sham {}
#[doc = include_str!("../../../book/src/workbench.md")]
pub mod workbench {}
#[doc = include_str!("../../../book/src/functional-files.md")]
pub mod functional_files {}
#[doc = include_str!("../../../README.md")]
pub mod readme {}
