//! Numerical evaluation of the principal-value quadruple integral
//!
//! ```text
//! F(a) = P ∫ dx/x² ∫ dx'/x' ∫ dy ∫ dy' (x-x') / ((x-x')² + (y+y')²) Δ(x,y) Δ(x',y')
//! ```
//!
//! where `Δ` is `+1` on the moon (lune) of the unit disk centred at `(a, 0)`
//! that is not covered by the disk centred at `(-a, 0)`, `-1` on the mirror
//! moon, and `0` elsewhere.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: the two circles, region classification, `Δ`, and the
//!   moon cross-sections used as integration limits.
//! * [`quadrature`]: adaptive Gauss-Kronrod integration, Cauchy principal
//!   values by pole subtraction, and the closed-form `y'` integral of the
//!   kernel.
//! * [`inner_integral`]: the inner double integral over a full disk, the
//!   published closed form it is compared against, and the `Δ`-weighted
//!   inner integral `J(x, y)`.
//! * [`full_integral`]: `F(a)` itself, with touch-point refinement
//!   diagnostics and parameter scans.
//! * [`mc_oracle`]: seeded, counter-based Monte Carlo estimators used as
//!   independent low-precision cross-checks.

pub mod error;
pub mod full_integral;
pub mod geometry;
pub mod inner_integral;
pub mod mc_oracle;
pub mod quadrature;

pub use error::{Error, Result};
pub use full_integral::{
    f_eval, f_eval_with, scan, scan_with, FResult, ScanRow, TouchConfig, TouchDiagnostics,
};
pub use geometry::{FermiParameter, MoonSide, Point, RegionClass, Slab};
pub use inner_integral::{
    compare_inner, i_jordan, inner_numeric, j_moon_slab, j_weighted, InnerComparison,
};
pub use mc_oracle::{mc_estimate_f, mc_estimate_inner, McEstimate, McFOptions};
pub use quadrature::{
    integrate_adaptive, kernel_y_integral, pv_cauchy, Interval, QuadConfig, QuadResult,
};
