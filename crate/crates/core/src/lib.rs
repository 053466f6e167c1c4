pub mod error;
pub mod image;
pub mod operators;
pub mod primal_dual;
pub mod prox;
pub mod scalar;

pub use error::{BuqoError, Result};
pub use image::{Image, PixelMask};
pub use operators::LinearOperator;
pub mod map_solver;
pub mod credible_region;
pub mod engine;
pub mod structure_sets;
pub mod sim;
pub mod io;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/operators.md")]
    struct Operators;
    #[doc = include_str!("../../../book/src/map.md")]
    struct Map;
    #[doc = include_str!("../../../book/src/credible_region.md")]
    struct CredibleRegion;
    #[doc = include_str!("../../../book/src/structures.md")]
    struct Structures;
    #[doc = include_str!("../../../book/src/testing.md")]
    struct Testing;
    #[doc = include_str!("../../../book/src/experiments.md")]
    struct Experiments;
}
