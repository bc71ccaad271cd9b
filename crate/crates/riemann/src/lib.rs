//! Analytic continuation of truncated Maclaurin series through conformal and
//! uniformizing maps, at arbitrary precision.

pub mod numerics;
pub mod series;
pub mod special;
pub mod maps;
pub mod pade;
pub mod reconstruct;
pub mod elimination;
pub mod painleve;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
