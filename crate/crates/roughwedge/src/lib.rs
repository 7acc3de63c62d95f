//! Integrals of rough 2-forms `f dg¹ ∧ dg²` in the plane.
//!
//! The three fields `f ∈ C^α`, `g¹ ∈ C^{β₁}`, `g² ∈ C^{β₂}` need not be
//! differentiable: when `α + β₁ + β₂ > 2`, summing discrete Stratonovich
//! or Itô germs over refining dyadic triangulations converges to a common
//! limit, extending the classical `∫ f det(∇g¹, ∇g²) dx` far below the
//! smooth regime. This crate implements that summation calculus end to
//! end: oriented simplices and chains, Hölder fields with certified
//! bounds, the concrete germs and their inequalities, the abstract sewing
//! engine with constructive error control, integration over triangles,
//! partitions, polygons and fractal-boundary domains, and the composed
//! `F(x, g(x))` theory with its chain rule and degree identity.
//!
//! Everything is deterministic: summation order is a fixed reduction tree
//! regardless of thread count, and all randomized constructions take
//! explicit seeds.
//!
//! The companion mdbook under `book/` walks through the theory; its code
//! snippets compile and run as doctests of this crate.

pub mod field;
pub mod germ;
pub mod integrate;
pub mod irregular;
pub mod sewing;
pub mod simplex;
pub mod sum;
pub mod young;

mod error;

pub use error::Error;

pub type Result<T> = std::result::Result<T, Error>;

pub use field::{make_weierstrass, FieldSpec, Rect, ScalarField};
pub use germ::{ito_germ, strat_germ, zust_germ, FormTriple, Germ2};
pub use integrate::{
    box_dimension, integrate_domain, integrate_polygon, integrate_simplex, DomainSpec,
    DyadicDomain, IntegralResult, Partition, Polygon, Scheme,
};
pub use irregular::{integrate_composed, ComposedIntegrand, SmoothMap2};
pub use sewing::{dyadic_sum, sew, side_corrector, SewingParams, SewingResult};
pub use simplex::{point, Chain, Point2, Simplex1, Simplex2, Simplex3};
pub use young::{strat1d_sum, young_integral, SegmentIntegralResult};

#[cfg(doctest)]
mod booktests {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/simplices.md")]
    mod simplices {}
    #[doc = include_str!("../../../book/src/fields.md")]
    mod fields {}
    #[doc = include_str!("../../../book/src/germs.md")]
    mod germs {}
    #[doc = include_str!("../../../book/src/one_dimensional.md")]
    mod one_dimensional {}
    #[doc = include_str!("../../../book/src/sewing.md")]
    mod sewing {}
    #[doc = include_str!("../../../book/src/integration.md")]
    mod integration {}
    #[doc = include_str!("../../../book/src/irregular.md")]
    mod irregular {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
