pub mod distsim;
pub mod error;
pub mod geometry;
pub mod graph;
pub mod greedy;
pub mod relaxed;
pub mod verify;

#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../README.md")]
    pub mod readme {}
    #[doc = include_str!("../../../book/src/intro.md")]
    pub mod intro {}
    #[doc = include_str!("../../../book/src/instances.md")]
    pub mod instances {}
    #[doc = include_str!("../../../book/src/greedy.md")]
    pub mod greedy {}
    #[doc = include_str!("../../../book/src/relaxed.md")]
    pub mod relaxed {}
    #[doc = include_str!("../../../book/src/distributed.md")]
    pub mod distributed {}
    #[doc = include_str!("../../../book/src/verification.md")]
    pub mod verification {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
