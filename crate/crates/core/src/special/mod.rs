//! Gamma, Mittag-Leffler and one-sided stable special functions.

pub mod gamma;
pub mod mittag_leffler;
pub mod stable;

pub use gamma::{gamma, ln_gamma, rgamma};
pub use mittag_leffler::{mittag_leffler, mittag_leffler2};
pub use stable::{
    check_ml_stable_identity, kanter_variate, stable_cdf, stable_density, stable_law, stable_ln_density, stable_sf,
    try_stable_cdf, try_stable_density, try_stable_sf, StableLaw, StableParams,
};
