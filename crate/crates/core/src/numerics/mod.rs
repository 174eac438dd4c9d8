//! Special functions, small dense linear algebra, seeded random streams, and
//! Monte-Carlo tail probabilities for correlated Gaussian vectors.

mod linalg;
mod mvn;
mod rng;
mod special;

pub use linalg::{
    correlation_from_covariance, psd_factor, solve_spd_or_pinv, PinvSolution, DEFAULT_PINV_TOL,
};
pub use mvn::{gaussian_vector, mvn_extremum_sf, Direction, McEstimate, DEFAULT_MC_DRAWS};
pub use rng::RandomStream;
pub use special::{chi_square_sf, f_sf, std_normal_cdf, std_normal_sf};
