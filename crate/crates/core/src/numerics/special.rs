use statrs::function::{beta, gamma};

use crate::error::{Error, Result};

/// Standard normal CDF, Φ(x).
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Upper tail 1 − Φ(x), without cancellation for large x.
pub fn std_normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// P(χ²_ν ≥ t), the regularized upper incomplete gamma Q(ν/2, t/2).
pub fn chi_square_sf(t: f64, nu: usize) -> Result<f64> {
    if nu == 0 {
        return Err(Error::Domain(
            "chi-square needs at least one degree of freedom".into(),
        ));
    }
    if t.is_nan() || t < 0.0 {
        return Err(Error::Domain(format!(
            "chi-square statistic {t} is negative"
        )));
    }
    if t == 0.0 {
        return Ok(1.0);
    }
    if t.is_infinite() {
        return Ok(0.0);
    }
    Ok(gamma::gamma_ur(nu as f64 / 2.0, t / 2.0).clamp(0.0, 1.0))
}

/// P(F(d1, d2) ≥ t) = I_{d2/(d2 + d1 t)}(d2/2, d1/2).
pub fn f_sf(t: f64, d1: usize, d2: usize) -> Result<f64> {
    if d1 == 0 || d2 == 0 {
        return Err(Error::Domain(
            "F distribution needs positive degrees of freedom".into(),
        ));
    }
    if t.is_nan() || t < 0.0 {
        return Err(Error::Domain(format!("F statistic {t} is negative")));
    }
    if t == 0.0 {
        return Ok(1.0);
    }
    if t.is_infinite() {
        return Ok(0.0);
    }
    let (a, b) = (d1 as f64, d2 as f64);
    let x = b / (b + a * t);
    Ok(beta::beta_reg(b / 2.0, a / 2.0, x).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson rule on [lo, hi].
    fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, panels: usize) -> f64 {
        let h = (hi - lo) / panels as f64;
        let mut acc = f(lo) + f(hi);
        for i in 1..panels {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(lo + i as f64 * h);
        }
        acc * h / 3.0
    }

    fn ln_gamma(x: f64) -> f64 {
        libm::lgamma(x)
    }

    #[test]
    fn normal_cdf_values() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        assert!((std_normal_cdf(1.959963985) - 0.975).abs() < 1e-9);
        for &x in &[0.1, 0.5, 1.0, 2.3, 4.0, 7.5] {
            assert!((std_normal_cdf(x) + std_normal_cdf(-x) - 1.0).abs() < 1e-12);
        }
        // high-precision references (40-digit erfc)
        assert!((std_normal_cdf(0.5) - 0.691_462_461_274_013_1).abs() < 1e-15);
        assert!((std_normal_cdf(-3.0) - 1.349_898_031_630_094_6e-3).abs() < 1e-16);
        assert!((std_normal_sf(6.0) - 9.865_876_450_376_98e-10).abs() < 1e-22);
    }

    #[test]
    fn chi_square_closed_form_two_dof() {
        assert_eq!(chi_square_sf(0.0, 7).unwrap(), 1.0);
        assert!((chi_square_sf(5.991464547, 2).unwrap() - 0.05).abs() < 1e-8);
        for &t in &[0.1, 1.0, 3.3, 10.0, 40.0] {
            assert!((chi_square_sf(t, 2).unwrap() - (-t / 2.0).exp()).abs() < 1e-14);
        }
    }

    #[test]
    fn chi_square_five_dof_against_quadrature() {
        let nu = 5.0;
        let dens = |x: f64| {
            if x <= 0.0 {
                0.0
            } else {
                ((nu / 2.0 - 1.0) * x.ln() - x / 2.0 - (nu / 2.0) * 2f64.ln() - ln_gamma(nu / 2.0))
                    .exp()
            }
        };
        let t = 11.0705;
        let oracle = 1.0 - simpson(dens, 0.0, t, 200_000);
        let got = chi_square_sf(t, 5).unwrap();
        assert!((got - oracle).abs() < 1e-6, "{got} vs {oracle}");
        assert!((got - 0.05).abs() < 1e-4);
    }

    #[test]
    fn chi_square_negative_is_domain_error() {
        assert!(matches!(chi_square_sf(-1.0, 3), Err(Error::Domain(_))));
        assert!(f_sf(-0.1, 1, 2).is_err());
    }

    #[test]
    fn f_against_quadrature() {
        let (d1, d2) = (2.0f64, 10.0f64);
        let ln_b = ln_gamma(d1 / 2.0) + ln_gamma(d2 / 2.0) - ln_gamma((d1 + d2) / 2.0);
        let dens = |x: f64| {
            if x < 0.0 {
                return 0.0;
            }
            let power = if d1 == 2.0 {
                0.0
            } else {
                (d1 / 2.0 - 1.0) * x.ln()
            };
            ((d1 / 2.0) * (d1 / d2).ln() + power
                - ((d1 + d2) / 2.0) * (1.0 + d1 * x / d2).ln()
                - ln_b)
                .exp()
        };
        let t = 4.102821;
        let oracle = 1.0 - simpson(dens, 0.0, t, 200_000);
        let got = f_sf(t, 2, 10).unwrap();
        assert!((got - oracle).abs() < 1e-7, "{got} vs {oracle}");
        assert!((got - 0.05).abs() < 1e-4);
        assert_eq!(f_sf(0.0, 3, 4).unwrap(), 1.0);
    }

    #[test]
    fn f_one_numerator_dof_is_squared_t() {
        // P(F(1, ν) ≥ t) = P(|T_ν| ≥ √t); the t tail comes from quadrature of its density.
        for &(nu, t) in &[(4usize, 2.5f64), (12, 6.0), (30, 1.1)] {
            let v = nu as f64;
            let c = (ln_gamma((v + 1.0) / 2.0)
                - ln_gamma(v / 2.0)
                - 0.5 * (v * std::f64::consts::PI).ln())
            .exp();
            let dens = |x: f64| c * (1.0 + x * x / v).powf(-(v + 1.0) / 2.0);
            let s = t.sqrt();
            let two_sided = 1.0 - 2.0 * simpson(dens, 0.0, s, 100_000);
            assert!((f_sf(t, 1, nu).unwrap() - two_sided).abs() < 1e-8);
        }
    }

    #[test]
    fn tails_are_monotone() {
        let grid: Vec<f64> = (0..400).map(|i| i as f64 * 0.1).collect();
        for nu in [1, 2, 5, 17] {
            for w in grid.windows(2) {
                assert!(chi_square_sf(w[1], nu).unwrap() <= chi_square_sf(w[0], nu).unwrap());
            }
        }
        for (d1, d2) in [(1, 5), (3, 40), (9, 2)] {
            for w in grid.windows(2) {
                assert!(f_sf(w[1], d1, d2).unwrap() <= f_sf(w[0], d1, d2).unwrap());
            }
        }
    }
}
