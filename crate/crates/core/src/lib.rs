//! Exact arithmetic for distributions of finite Galois modules.
//!
//! The crate implements, over localized group rings of finite abelian
//! groups, the probability measure that weights a finite module `M`
//! inversely to `#Hom(P, M) * #Aut M`, together with the Dirichlet-series
//! identities it satisfies, and two number-theoretic pipelines that probe
//! the measure against actual field counts: cyclic quartic fields ordered
//! by discriminant, and an equidistribution demo over a synthetic class
//! datum. A law-of-large-numbers adversary for sample averages of
//! integrable functions rounds out the toolkit.
//!
//! All counting is exact (big integers and rationals); every floating
//! point output carries a certified bracket.

pub mod abelian;
pub mod arith;
pub mod bernoulli;
pub mod error;
pub mod interval;
pub mod lln;
pub mod lseries;
pub mod measure;
pub mod modules;
pub mod quadforms;
pub mod quartic;

pub use error::{Error, Result};
