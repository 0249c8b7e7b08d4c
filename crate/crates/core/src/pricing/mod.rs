//! European option pricing: Laplace-transform inversion, a PIDE solver and Monte Carlo.

pub mod mc;
pub mod payoff;
pub mod pide;
pub mod transform;

pub use mc::{mc_price, mc_price_path, McResult, PathPayoff};
pub use payoff::{PayoffKind, PayoffSpec};
pub use pide::{solve_pide, PideGrid, PideSolution};
pub use transform::{
    price_smile, select_damping, transform_price, QuadratureRule, QuadratureSpec, TransformPrice,
};
