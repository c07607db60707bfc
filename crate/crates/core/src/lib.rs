//! Young towers for direct products of towers.
//!
//! The crate models each factor as a tower in affine normal form (a renewal
//! chain over `(column, level)` states), builds the product's return time by
//! alternately waiting `n₀` steps and running one factor back to its base, and
//! computes the tail of that return time exactly, by simulation and by brute
//! force. The `rates` module fits and checks decay rates against explicit
//! bounds; `correlation` checks the product decay-of-correlations estimate.
//!
//! Numerical code that only adds and multiplies probabilities is generic over
//! [`Scalar`]; the aliases below fix the common choices.

pub mod correlation;
pub mod error;
pub mod product;
pub mod quadrature;
pub mod rates;
pub mod rng;
pub mod scalar;
pub mod tails;
pub mod tower;

pub use error::{Error, Result};
pub use num_rational::BigRational;
pub use scalar::Scalar;
pub use tails::TailSpec;
pub use tower::{build_tower, TowerModel, TowerState};

/// Double-precision tower.
pub type Tower = TowerModel<f64>;
/// Single-precision tower.
pub type Tower32 = TowerModel<f32>;
/// Tower with exact rational weights.
pub type ExactTower = TowerModel<BigRational>;

/// Double-precision product model.
pub type Product = product::ProductModel<f64>;
/// Product model with exact rational weights.
pub type ExactProduct = product::ProductModel<BigRational>;
