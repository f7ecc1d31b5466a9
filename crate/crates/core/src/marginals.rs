//! Univariate count-distribution primitives: pmf, moments, Laplace transform
//! at s=1, and the geometric-weighted expectation E(X t^X).

use crate::{Error, Result};
use statrs::function::gamma::ln_gamma;

/// Truncation: smallest x with CDF > 1 - 1e-12, capped at this value.
pub const TRUNCATION_CAP: u32 = 2000;
const TRUNCATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Poisson,
    NegBin,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Poisson => "poisson",
            Family::NegBin => "negbin",
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A Poisson(lambda) or negative binomial (mu, phi) marginal.
///
/// The negative binomial is parameterized by mean `mu` and dispersion `phi`,
/// with variance `mu + mu^2 / phi`. The success-probability form
/// `p = mu / (phi + mu)` is internal only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MarginalSpec {
    Poisson { lambda: f64 },
    NegBin { mu: f64, phi: f64 },
}

impl MarginalSpec {
    pub fn poisson(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "Poisson lambda must be positive and finite, got {lambda}"
            )));
        }
        Ok(MarginalSpec::Poisson { lambda })
    }

    pub fn negbin(mu: f64, phi: f64) -> Result<Self> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "NegBin mu must be positive and finite, got {mu}"
            )));
        }
        if !(phi > 0.0) || !phi.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "NegBin phi must be positive and finite, got {phi}"
            )));
        }
        Ok(MarginalSpec::NegBin { mu, phi })
    }

    pub fn family(&self) -> Family {
        match self {
            MarginalSpec::Poisson { .. } => Family::Poisson,
            MarginalSpec::NegBin { .. } => Family::NegBin,
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            MarginalSpec::Poisson { lambda } => lambda,
            MarginalSpec::NegBin { mu, .. } => mu,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            MarginalSpec::Poisson { lambda } => lambda,
            MarginalSpec::NegBin { mu, phi } => mu + mu * mu / phi,
        }
    }

    pub fn mean_sd(&self) -> (f64, f64) {
        (self.mean(), self.variance().sqrt())
    }

    /// Log pmf, computed via log-gamma so the negative binomial stays stable
    /// for large phi.
    pub fn ln_pmf(&self, x: u32) -> f64 {
        let xf = f64::from(x);
        match *self {
            MarginalSpec::Poisson { lambda } => {
                xf * lambda.ln() - lambda - ln_gamma(xf + 1.0)
            }
            MarginalSpec::NegBin { mu, phi } => {
                ln_gamma(xf + phi) - ln_gamma(phi) - ln_gamma(xf + 1.0)
                    + phi * (phi / (phi + mu)).ln()
                    + xf * (mu / (phi + mu)).ln()
            }
        }
    }

    pub fn pmf(&self, x: u32) -> f64 {
        self.ln_pmf(x).exp()
    }

    /// Smallest x with CDF > 1 - 1e-12, capped at [`TRUNCATION_CAP`].
    pub fn truncation_point(&self) -> u32 {
        let mut cum = 0.0;
        for x in 0..=TRUNCATION_CAP {
            cum += self.pmf(x);
            if cum > 1.0 - TRUNCATION_TOL {
                return x;
            }
        }
        TRUNCATION_CAP
    }

    /// Laplace transform at s=1, `E(e^{-X})`, in closed form.
    pub fn laplace_at_one(&self) -> f64 {
        let c = 1.0 - (-1.0f64).exp();
        match *self {
            MarginalSpec::Poisson { lambda } => (-lambda * c).exp(),
            MarginalSpec::NegBin { mu, phi } => (phi / (phi + mu * c)).powf(phi),
        }
    }

    /// `E(X t^X)` for t in (0, 1]. Closed form for the negative binomial,
    /// summation for Poisson. At t=1 this is the mean.
    pub fn expected_x_t_pow_x(&self, t: f64) -> Result<f64> {
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::Domain(format!("t must be in (0, 1], got {t}")));
        }
        match *self {
            MarginalSpec::Poisson { .. } => {
                let mut sum = 0.0;
                for x in 0..=self.truncation_point() {
                    sum += f64::from(x) * t.powi(x as i32) * self.pmf(x);
                }
                Ok(sum)
            }
            MarginalSpec::NegBin { mu, phi } => {
                let p = mu / (phi + mu);
                let r = phi;
                Ok(((1.0 - p) / (1.0 - p * t)).powf(r) * (p * t * r / (1.0 - p * t)))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid() -> Vec<MarginalSpec> {
        let mut out = Vec::new();
        for i in 1..=20 {
            let m = 0.2 * f64::from(i);
            out.push(MarginalSpec::poisson(m).unwrap());
            for phi in [0.5, 1.0, 2.0, 5.0, 20.0] {
                out.push(MarginalSpec::negbin(m, phi).unwrap());
            }
        }
        out
    }

    /// Independent oracle: direct summation of e^{-x} pmf(x).
    fn laplace_by_summation(m: &MarginalSpec) -> f64 {
        (0..=200).map(|x| (-f64::from(x)).exp() * m.pmf(x)).sum()
    }

    /// Independent oracle: direct summation of x t^x pmf(x).
    fn e_x_t_pow_x_by_summation(m: &MarginalSpec, t: f64) -> f64 {
        (0u32..=300)
            .map(|x| f64::from(x) * t.powi(x as i32) * m.pmf(x))
            .sum()
    }

    #[test]
    fn poisson_pmf_closed_form() {
        let m = MarginalSpec::poisson(1.3).unwrap();
        assert!((m.pmf(0) - (-1.3f64).exp()).abs() < 1e-12);
        assert!((m.pmf(0) - 0.2725318).abs() < 1e-7);
        assert!((m.pmf(1) - 1.3 * (-1.3f64).exp()).abs() < 1e-12);
        assert!((m.pmf(1) - 0.3542913).abs() < 1e-7);
    }

    #[test]
    fn negbin_pmf_closed_form() {
        let m = MarginalSpec::negbin(1.2, 2.0).unwrap();
        assert!((m.pmf(0) - 0.390625).abs() < 1e-12); // (2/3.2)^2
    }

    #[test]
    fn pmf_normalizes() {
        for m in grid() {
            let total: f64 = (0..=400).map(|x| m.pmf(x)).sum();
            assert!((total - 1.0).abs() < 1e-11, "{m:?} sums to {total}");
        }
    }

    #[test]
    fn truncation_point_captures_mass() {
        for m in grid() {
            let xs = m.truncation_point();
            let total: f64 = (0..=xs).map(|x| m.pmf(x)).sum();
            assert!(total >= 1.0 - 1e-10, "{m:?} mass {total} at X*={xs}");
        }
    }

    #[test]
    fn mean_sd_values() {
        let (mean, sd) = MarginalSpec::poisson(1.3).unwrap().mean_sd();
        assert_eq!(mean, 1.3);
        assert!((sd - 1.3f64.sqrt()).abs() < 1e-15);

        let (mean, sd) = MarginalSpec::negbin(1.2, 2.0).unwrap().mean_sd();
        assert_eq!(mean, 1.2);
        assert!((sd - 1.92f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn negbin_variance_has_poisson_limit() {
        let nb = MarginalSpec::negbin(1.2, 1e6).unwrap();
        assert!((nb.variance() - 1.2).abs() < 1e-5);
        let pois = MarginalSpec::poisson(1.2).unwrap();
        for x in 0..=15 {
            assert!((nb.pmf(x) - pois.pmf(x)).abs() < 1e-5, "x={x}");
        }
    }

    #[test]
    fn laplace_at_one_matches_summation() {
        for m in grid() {
            let closed = m.laplace_at_one();
            let summed = laplace_by_summation(&m);
            assert!((closed - summed).abs() < 1e-10, "{m:?}: {closed} vs {summed}");
        }
        let pois = MarginalSpec::poisson(1.3).unwrap();
        assert!((pois.laplace_at_one() - 0.4396586).abs() < 1e-6);
        let nb = MarginalSpec::negbin(1.2, 2.0).unwrap();
        assert!((nb.laplace_at_one() - 0.5256540).abs() < 1e-6);
    }

    #[test]
    fn laplace_tends_to_one_for_tiny_mean() {
        let m = MarginalSpec::poisson(1e-9).unwrap();
        assert!((m.laplace_at_one() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn expected_x_t_pow_x_matches_summation() {
        let e_inv = (-1.0f64).exp();
        for m in grid() {
            for t in [0.2, 0.5, e_inv, 0.9, 1.0] {
                let got = m.expected_x_t_pow_x(t).unwrap();
                let want = e_x_t_pow_x_by_summation(&m, t);
                assert!((got - want).abs() < 1e-10, "{m:?} t={t}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn expected_x_t_pow_x_at_one_is_mean() {
        let m = MarginalSpec::negbin(1.2, 2.0).unwrap();
        assert!((m.expected_x_t_pow_x(1.0).unwrap() - 1.2).abs() < 1e-10);
    }

    #[test]
    fn expected_x_t_pow_x_rejects_bad_t() {
        let m = MarginalSpec::poisson(1.3).unwrap();
        assert!(m.expected_x_t_pow_x(0.0).is_err());
        assert!(m.expected_x_t_pow_x(1.5).is_err());
        assert!(m.expected_x_t_pow_x(-0.2).is_err());
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(MarginalSpec::poisson(0.0).is_err());
        assert!(MarginalSpec::poisson(-1.0).is_err());
        assert!(MarginalSpec::negbin(-1.0, 2.0).is_err());
        assert!(MarginalSpec::negbin(1.0, 0.0).is_err());
        assert!(MarginalSpec::negbin(1.0, f64::NAN).is_err());
    }

    proptest! {
        #[test]
        fn pmf_is_probability(lam in 0.05f64..8.0, x in 0u32..50) {
            let m = MarginalSpec::poisson(lam).unwrap();
            let p = m.pmf(x);
            prop_assert!((0.0..=1.0).contains(&p));
        }

        #[test]
        fn negbin_normalizes(mu in 0.1f64..5.0, phi in 0.2f64..50.0) {
            let m = MarginalSpec::negbin(mu, phi).unwrap();
            let total: f64 = (0..=m.truncation_point()).map(|x| m.pmf(x)).sum();
            prop_assert!(total >= 1.0 - 1e-10);
        }
    }
}
