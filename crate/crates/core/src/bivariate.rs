//! The Sarmanov joint pmf, feasible-omega interval, correlation, score
//! matrices, and sampling.

use crate::marginals::{Family, MarginalSpec};
use crate::qcatalog::{QFunctionSpec, QKind};
use crate::{Error, Result};
use rand::Rng;

/// Cap used when one side of the omega interval is unbounded.
pub const OMEGA_CAP: f64 = 1e12;

/// Feasible interval for the dependence parameter; always contains 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmegaInterval {
    pub lower: f64,
    pub upper: f64,
}

impl OmegaInterval {
    pub fn contains(&self, omega: f64) -> bool {
        // Endpoint models are valid; allow a hair of slack for round-trips.
        omega >= self.lower - 1e-12 && omega <= self.upper + 1e-12
    }
}

/// Feasible omega interval from the q-value extrema (including tail limits):
/// `1 + omega q1 q2 >= 0` over all candidate products of the extrema.
pub fn omega_bounds(q1: &QFunctionSpec, q2: &QFunctionSpec) -> Result<OmegaInterval> {
    let (a1, b1) = q1.value_bounds();
    let (a2, b2) = q2.value_bounds();
    if a1 == 0.0 && b1 == 0.0 || a2 == 0.0 && b2 == 0.0 {
        return Err(Error::Degenerate("q-function is constant zero".into()));
    }
    let candidates = [a1 * a2, a1 * b2, b1 * a2, b1 * b2];
    let max_pos = candidates.iter().copied().filter(|c| *c > 0.0).fold(f64::NAN, f64::max);
    let min_neg = candidates.iter().copied().filter(|c| *c < 0.0).fold(f64::NAN, f64::min);
    let lower = if max_pos.is_nan() { -OMEGA_CAP } else { -1.0 / max_pos };
    let upper = if min_neg.is_nan() { OMEGA_CAP } else { -1.0 / min_neg };
    Ok(OmegaInterval { lower, upper })
}

/// Two marginals, two q-functions bound to them, and a validated omega.
#[derive(Debug, Clone, PartialEq)]
pub struct BivariateModel {
    q1: QFunctionSpec,
    q2: QFunctionSpec,
    omega: f64,
}

impl BivariateModel {
    /// Construct with full validation: both q-functions must satisfy the
    /// zero-mean condition and omega must be feasible.
    pub fn new(q1: QFunctionSpec, q2: QFunctionSpec, omega: f64) -> Result<Self> {
        for q in [&q1, &q2] {
            if !q.is_admissible() {
                return Err(Error::ZeroMeanViolated {
                    residual: q.zero_mean_residual(),
                });
            }
        }
        Self::new_unchecked_zero_mean(q1, q2, omega)
    }

    /// Skip the zero-mean check (for deliberately studying the defective
    /// catalog entry); omega feasibility is still enforced.
    pub fn new_unchecked_zero_mean(
        q1: QFunctionSpec,
        q2: QFunctionSpec,
        omega: f64,
    ) -> Result<Self> {
        let bounds = omega_bounds(&q1, &q2)?;
        if !bounds.contains(omega) {
            return Err(Error::InfeasibleOmega {
                omega,
                lower: bounds.lower,
                upper: bounds.upper,
            });
        }
        Ok(BivariateModel { q1, q2, omega })
    }

    pub fn margin1(&self) -> &MarginalSpec {
        self.q1.marginal()
    }

    pub fn margin2(&self) -> &MarginalSpec {
        self.q2.marginal()
    }

    pub fn q1(&self) -> &QFunctionSpec {
        &self.q1
    }

    pub fn q2(&self) -> &QFunctionSpec {
        &self.q2
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn omega_bounds(&self) -> OmegaInterval {
        omega_bounds(&self.q1, &self.q2).expect("validated at construction")
    }

    /// `P1(x1) P2(x2) [1 + omega q1(x1) q2(x2)]`.
    pub fn joint_pmf(&self, x1: u32, x2: u32) -> f64 {
        let bracket = 1.0 + self.omega * self.q1.eval(x1) * self.q2.eval(x2);
        (self.margin1().pmf(x1) * self.margin2().pmf(x2) * bracket).max(0.0)
    }

    /// Grid of joint probabilities over `(0..=max_goals)^2` plus the mass
    /// beyond the grid (reported, not redistributed).
    pub fn score_matrix(&self, max_goals: u32) -> Result<ScoreMatrix> {
        if max_goals < 1 {
            return Err(Error::InvalidParameter("max_goals must be >= 1".into()));
        }
        let n = (max_goals + 1) as usize;
        let mut probs = vec![vec![0.0; n]; n];
        let mut total = 0.0;
        for (x1, row) in probs.iter_mut().enumerate() {
            for (x2, cell) in row.iter_mut().enumerate() {
                *cell = self.joint_pmf(x1 as u32, x2 as u32);
                total += *cell;
            }
        }
        Ok(ScoreMatrix {
            max_goals,
            probs,
            truncated_mass: 1.0 - total,
        })
    }

    /// `E[X q(X)]`, closed-form for the Dixon-Coles and ANS q-functions and
    /// by summation otherwise.
    pub fn u_value(q: &QFunctionSpec) -> f64 {
        match (q.kind(), q.marginal()) {
            (QKind::Dc, MarginalSpec::Poisson { lambda }) => lambda * (-lambda).exp(),
            (QKind::AnsGeometric, MarginalSpec::NegBin { mu, phi }) => {
                let d = (mu + phi) * (mu + phi) - mu * phi;
                (phi * (mu + phi) / d).powf(*phi) * (mu * phi * phi / d - mu)
            }
            _ => {
                let m = q.marginal();
                (0..=m.truncation_point())
                    .map(|x| f64::from(x) * q.eval(x) * m.pmf(x))
                    .sum()
            }
        }
    }

    /// `rho = omega u1 u2 / (sigma1 sigma2)`.
    pub fn correlation(&self) -> f64 {
        let u1 = Self::u_value(&self.q1);
        let u2 = Self::u_value(&self.q2);
        let (_, sd1) = self.margin1().mean_sd();
        let (_, sd2) = self.margin2().mean_sd();
        self.omega * u1 * u2 / (sd1 * sd2)
    }

    /// Inverse-CDF sampler over the truncated score grid; reusable across
    /// draws from the same model.
    pub fn sampler(&self) -> ScoreSampler {
        ScoreSampler::new(self)
    }

    /// Draw a single score pair. Builds the cumulative grid on each call;
    /// use [`BivariateModel::sampler`] for repeated draws.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (u32, u32) {
        self.sampler().sample(rng)
    }
}

/// Joint probabilities on `(0..=max_goals)^2`.
#[derive(Debug, Clone)]
pub struct ScoreMatrix {
    pub max_goals: u32,
    /// `probs[x1][x2]`, home goals by row.
    pub probs: Vec<Vec<f64>>,
    pub truncated_mass: f64,
}

impl ScoreMatrix {
    pub fn row_sums(&self) -> Vec<f64> {
        self.probs.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let n = self.probs.len();
        (0..n).map(|j| self.probs.iter().map(|r| r[j]).sum()).collect()
    }
}

/// Flattened cumulative distribution over the score grid with
/// `max_goals = max(X*_1, X*_2)`.
#[derive(Debug, Clone)]
pub struct ScoreSampler {
    side: u32,
    cumulative: Vec<f64>,
}

impl ScoreSampler {
    pub fn new(model: &BivariateModel) -> Self {
        let side = model
            .margin1()
            .truncation_point()
            .max(model.margin2().truncation_point());
        let n = (side + 1) as usize;
        let mut cumulative = Vec::with_capacity(n * n);
        let mut acc = 0.0;
        for x1 in 0..=side {
            for x2 in 0..=side {
                acc += model.joint_pmf(x1, x2);
                cumulative.push(acc);
            }
        }
        ScoreSampler { side, cumulative }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (u32, u32) {
        let u: f64 = rng.random();
        let idx = match self
            .cumulative
            .binary_search_by(|c| c.partial_cmp(&u).expect("finite cdf"))
        {
            Ok(i) | Err(i) => i.min(self.cumulative.len() - 1),
        };
        let n = (self.side + 1) as usize;
        ((idx / n) as u32, (idx % n) as u32)
    }
}

/// The five-case Dixon-Coles pmf, kept as an independent oracle for the
/// Sarmanov equivalence (`omega = -omega_tilde`).
pub fn dc_closed_form_pmf(
    lambda1: f64,
    lambda2: f64,
    omega_tilde: f64,
    x1: u32,
    x2: u32,
) -> Result<f64> {
    let lower = (-1.0 / lambda1).max(-1.0 / lambda2);
    let upper = (1.0 / (lambda1 * lambda2)).min(1.0);
    if !(omega_tilde >= lower - 1e-12 && omega_tilde <= upper + 1e-12) {
        return Err(Error::InfeasibleOmega {
            omega: omega_tilde,
            lower,
            upper,
        });
    }
    let tau = match (x1, x2) {
        (0, 0) => 1.0 - lambda1 * lambda2 * omega_tilde,
        (0, 1) => 1.0 + lambda1 * omega_tilde,
        (1, 0) => 1.0 + lambda2 * omega_tilde,
        (1, 1) => 1.0 - omega_tilde,
        _ => 1.0,
    };
    let p1 = MarginalSpec::poisson(lambda1)?.pmf(x1);
    let p2 = MarginalSpec::poisson(lambda2)?.pmf(x2);
    Ok((tau * p1 * p2).max(0.0))
}

/// One row of the correlation-range table: the correlation at both omega
/// endpoints, minimized/maximized over the second margin's grid.
#[derive(Debug, Clone, Copy)]
pub struct CorrRangeRow {
    pub mean1: f64,
    pub rho_min: f64,
    pub rho_max: f64,
}

pub const DEFAULT_PHI_GRID: [f64; 5] = [0.5, 1.0, 2.0, 5.0, 20.0];

pub fn default_mean_grid() -> Vec<f64> {
    (1..=16).map(|i| 0.25 * f64::from(i)).collect()
}

/// Correlation range for a symmetric model family (same q kind on both
/// sides). For each `mean1`, the extremes are taken over the full grid of
/// second-margin parameters (and both dispersion grids for negative binomial
/// margins).
pub fn correlation_range(
    family: Family,
    q_kind: &QKind,
    mean_grid: &[f64],
    phi_grid: &[f64],
) -> Result<Vec<CorrRangeRow>> {
    let marginals_at = |mean: f64| -> Result<Vec<MarginalSpec>> {
        match family {
            Family::Poisson => Ok(vec![MarginalSpec::poisson(mean)?]),
            Family::NegBin => phi_grid
                .iter()
                .map(|&phi| MarginalSpec::negbin(mean, phi))
                .collect(),
        }
    };
    let mut rows = Vec::with_capacity(mean_grid.len());
    for &mean1 in mean_grid {
        let mut rho_min = f64::INFINITY;
        let mut rho_max = f64::NEG_INFINITY;
        for m1 in marginals_at(mean1)? {
            let q1 = QFunctionSpec::new(q_kind.clone(), m1)?;
            for &mean2 in mean_grid {
                for m2 in marginals_at(mean2)? {
                    let q2 = QFunctionSpec::new(q_kind.clone(), m2)?;
                    let bounds = omega_bounds(&q1, &q2)?;
                    for omega in [bounds.lower, bounds.upper] {
                        let model =
                            BivariateModel::new(q1.clone(), q2.clone(), omega)?;
                        let rho = model.correlation();
                        rho_min = rho_min.min(rho);
                        rho_max = rho_max.max(rho);
                    }
                }
            }
        }
        rows.push(CorrRangeRow {
            mean1,
            rho_min,
            rho_max,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pois(lambda: f64) -> MarginalSpec {
        MarginalSpec::poisson(lambda).unwrap()
    }

    fn nb(mu: f64, phi: f64) -> MarginalSpec {
        MarginalSpec::negbin(mu, phi).unwrap()
    }

    fn q(kind: QKind, m: MarginalSpec) -> QFunctionSpec {
        QFunctionSpec::new(kind, m).unwrap()
    }

    fn dc_pair(l1: f64, l2: f64, omega: f64) -> BivariateModel {
        BivariateModel::new(q(QKind::Dc, pois(l1)), q(QKind::Dc, pois(l2)), omega).unwrap()
    }

    /// Brute-force correlation over the truncated score grid.
    fn brute_force_correlation(model: &BivariateModel) -> f64 {
        let x1_max = model.margin1().truncation_point();
        let x2_max = model.margin2().truncation_point();
        let (mut m1, mut m2, mut m11, mut m1s, mut m2s) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for x1 in 0..=x1_max {
            for x2 in 0..=x2_max {
                let p = model.joint_pmf(x1, x2);
                let (a, b) = (f64::from(x1), f64::from(x2));
                m1 += a * p;
                m2 += b * p;
                m11 += a * b * p;
                m1s += a * a * p;
                m2s += b * b * p;
            }
        }
        (m11 - m1 * m2) / ((m1s - m1 * m1).sqrt() * (m2s - m2 * m2).sqrt())
    }

    #[test]
    fn dc_omega_interval_matches_paper_inequality() {
        let bounds = omega_bounds(&q(QKind::Dc, pois(1.3)), &q(QKind::Dc, pois(1.2))).unwrap();
        assert!((bounds.lower - (-1.0 / 1.56)).abs() < 1e-12);
        assert!((bounds.upper - 1.0 / 1.3).abs() < 1e-12);
        assert!(bounds.contains(0.0));
    }

    #[test]
    fn ans_omega_interval_from_value_bounds() {
        let q1 = q(QKind::AnsGeometric, nb(1.2, 2.0));
        let q2 = q(QKind::AnsGeometric, nb(1.2, 2.0));
        let bounds = omega_bounds(&q1, &q2).unwrap();
        assert!((bounds.lower - (-2.251875)).abs() < 1e-4);
        assert!((bounds.upper - 4.498128).abs() < 1e-4);
        // Oracle: scan products over the support grid; the interval endpoints
        // must be the tightest constraints.
        let xs = q1.marginal().truncation_point();
        for x1 in 0..=xs {
            for x2 in 0..=xs {
                let prod = q1.eval(x1) * q2.eval(x2);
                assert!(1.0 + bounds.lower * prod >= -1e-9, "lower violated at ({x1},{x2})");
                assert!(1.0 + bounds.upper * prod >= -1e-9, "upper violated at ({x1},{x2})");
            }
        }
    }

    #[test]
    fn independence_at_omega_zero() {
        let model = dc_pair(1.3, 1.2, 0.0);
        assert!((model.joint_pmf(0, 0) - (-2.5f64).exp()).abs() < 1e-12);
        for x1 in 0..=6 {
            for x2 in 0..=6 {
                let prod = model.margin1().pmf(x1) * model.margin2().pmf(x2);
                assert!((model.joint_pmf(x1, x2) - prod).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn dc_joint_pmf_hand_values() {
        // omega = -omega_tilde; omega_tilde = 0.1
        let model = dc_pair(1.3, 1.2, -0.1);
        let indep = (-2.5f64).exp();
        assert!((model.joint_pmf(0, 0) - (1.0 - 1.56 * 0.1) * indep).abs() < 1e-12);
        // Beyond the four low-score pairs the product is unchanged.
        let prod23 = pois(1.3).pmf(2) * pois(1.2).pmf(3);
        assert!((model.joint_pmf(2, 3) - prod23).abs() < 1e-15);
    }

    #[test]
    fn sarmanov_equals_dc_closed_form() {
        for &(l1, l2, wt) in &[(1.3, 1.2, 0.1), (0.8, 2.0, -0.3), (1.5, 1.1, 0.5)] {
            let model = dc_pair(l1, l2, -wt);
            for x1 in 0..=10 {
                for x2 in 0..=10 {
                    let closed = dc_closed_form_pmf(l1, l2, wt, x1, x2).unwrap();
                    assert!(
                        (model.joint_pmf(x1, x2) - closed).abs() <= 1e-12,
                        "({x1},{x2}) l=({l1},{l2}) wt={wt}"
                    );
                }
            }
        }
    }

    #[test]
    fn dc_closed_form_hand_values() {
        let p = dc_closed_form_pmf(1.3, 1.2, 0.1, 1, 1).unwrap();
        assert!((p - 0.9 * pois(1.3).pmf(1) * pois(1.2).pmf(1)).abs() < 1e-15);
        let p = dc_closed_form_pmf(1.3, 1.2, 0.1, 0, 1).unwrap();
        assert!((p - 1.13 * pois(1.3).pmf(0) * pois(1.2).pmf(1)).abs() < 1e-15);
        assert!(dc_closed_form_pmf(1.3, 1.2, 5.0, 0, 0).is_err());
    }

    #[test]
    fn infeasible_omega_rejected_at_construction() {
        let q1 = q(QKind::Dc, pois(1.3));
        let q2 = q(QKind::Dc, pois(1.2));
        assert!(matches!(
            BivariateModel::new(q1, q2, 2.0),
            Err(Error::InfeasibleOmega { .. })
        ));
    }

    #[test]
    fn defective_q_requires_repair_or_unchecked() {
        let bad = q(QKind::Tilde, nb(1.2, 2.0));
        let good = q(QKind::OneP, nb(1.2, 2.0));
        assert!(matches!(
            BivariateModel::new(bad.clone(), good.clone(), 0.0),
            Err(Error::ZeroMeanViolated { .. })
        ));
        assert!(BivariateModel::new_unchecked_zero_mean(bad.clone(), good.clone(), 0.0).is_ok());
        let fixed = bad.repaired().unwrap();
        assert!(BivariateModel::new(fixed, good, 0.0).is_ok());
    }

    #[test]
    fn score_matrix_preserves_marginals() {
        let models = [
            dc_pair(1.3, 1.2, -0.3),
            BivariateModel::new(
                q(QKind::AnsGeometric, nb(1.3, 2.0)),
                q(QKind::AnsGeometric, nb(1.2, 3.0)),
                1.0,
            )
            .unwrap(),
            BivariateModel::new(
                q(QKind::LaplaceExp, pois(1.3)),
                q(QKind::LaplaceExp, nb(1.2, 2.0)),
                0.8,
            )
            .unwrap(),
        ];
        for model in &models {
            let side = model
                .margin1()
                .truncation_point()
                .max(model.margin2().truncation_point());
            let sm = model.score_matrix(side).unwrap();
            assert!(sm.truncated_mass.abs() < 1e-8);
            for (x1, row_sum) in sm.row_sums().iter().enumerate() {
                assert!(
                    (row_sum - model.margin1().pmf(x1 as u32)).abs() < 1e-10,
                    "row {x1}"
                );
            }
            for (x2, col_sum) in sm.col_sums().iter().enumerate() {
                assert!(
                    (col_sum - model.margin2().pmf(x2 as u32)).abs() < 1e-10,
                    "col {x2}"
                );
            }
        }
    }

    #[test]
    fn score_matrix_truncation_small_at_football_scale() {
        let model = dc_pair(1.3, 1.2, -0.3);
        let sm = model.score_matrix(11).unwrap();
        assert!(sm.truncated_mass < 1e-4);
        assert!(sm.truncated_mass >= 0.0);
    }

    #[test]
    fn correlation_closed_form_vs_brute_force() {
        let models = [
            dc_pair(1.3, 1.2, 0.5),
            BivariateModel::new(
                q(QKind::AnsGeometric, nb(1.3, 2.0)),
                q(QKind::AnsGeometric, nb(1.2, 2.0)),
                -1.5,
            )
            .unwrap(),
            BivariateModel::new(
                q(QKind::LaplaceExp, nb(1.5, 1.0)),
                q(QKind::LaplaceExp, pois(0.9)),
                1.2,
            )
            .unwrap(),
            BivariateModel::new(
                q(QKind::Tilde, pois(1.1)),
                q(QKind::Tilde, pois(0.8)),
                0.05,
            )
            .unwrap(),
        ];
        for model in &models {
            let closed = model.correlation();
            let brute = brute_force_correlation(model);
            assert!(
                (closed - brute).abs() < 1e-8,
                "{:?}/{:?}: {closed} vs {brute}",
                model.q1().kind(),
                model.q2().kind()
            );
        }
    }

    #[test]
    fn dc_correlation_hand_value() {
        let model = dc_pair(1.3, 1.2, 0.5);
        let expect = 0.5 * (1.3 * (-1.3f64).exp()) * (1.2 * (-1.2f64).exp()) / 1.56f64.sqrt();
        assert!((model.correlation() - expect).abs() < 1e-12);
        assert!((expect - 0.0512621).abs() < 1e-6);
        assert_eq!(dc_pair(1.3, 1.2, 0.0).correlation(), 0.0);
    }

    #[test]
    fn ans_u_value_closed_form() {
        let u = BivariateModel::u_value(&q(QKind::AnsGeometric, nb(1.2, 2.0)));
        assert!((u - (-0.391673)).abs() < 1e-6);
        // Brute-force oracle.
        let qf = q(QKind::AnsGeometric, nb(1.2, 2.0));
        let m = qf.marginal();
        let brute: f64 = (0..=m.truncation_point())
            .map(|x| f64::from(x) * qf.eval(x) * m.pmf(x))
            .sum();
        assert!((u - brute).abs() < 1e-10);
    }

    #[test]
    fn dc_correlation_range_at_reference_means() {
        // Fig. 5 discussion: at lambda = (1.3, 1.2) the brute-force oracle
        // puts the DC correlation interval near [-0.066, +0.079]. The paper
        // caption quotes -0.08; the oracle, not the caption, is authoritative.
        let q1 = q(QKind::Dc, pois(1.3));
        let q2 = q(QKind::Dc, pois(1.2));
        let bounds = omega_bounds(&q1, &q2).unwrap();
        let lo = BivariateModel::new(q1.clone(), q2.clone(), bounds.lower)
            .unwrap()
            .correlation();
        let hi = BivariateModel::new(q1, q2, bounds.upper).unwrap().correlation();
        assert!((lo - (-0.0657)).abs() < 5e-4, "lo={lo}");
        assert!((hi - 0.0789).abs() < 5e-4, "hi={hi}");
    }

    #[test]
    fn ans_range_wider_than_dc_at_matched_means() {
        let dc_rows = correlation_range(
            Family::Poisson,
            &QKind::Dc,
            &[1.3],
            &DEFAULT_PHI_GRID,
        )
        .unwrap();
        let ans_rows = correlation_range(
            Family::NegBin,
            &QKind::AnsGeometric,
            &[1.3],
            &DEFAULT_PHI_GRID,
        )
        .unwrap();
        let dc_width = dc_rows[0].rho_max - dc_rows[0].rho_min;
        let ans_width = ans_rows[0].rho_max - ans_rows[0].rho_min;
        assert!(ans_width > dc_width, "{ans_width} vs {dc_width}");
        assert!(dc_rows[0].rho_min < 0.0 && dc_rows[0].rho_max > 0.0);
    }

    #[test]
    fn fig1_monotone_shift() {
        let mut prev: Option<[f64; 4]> = None;
        for i in 0..=6 {
            let wt = 0.1 * f64::from(i);
            let model = dc_pair(1.3, 1.2, -wt);
            let cur = [
                model.joint_pmf(0, 0),
                model.joint_pmf(1, 1),
                model.joint_pmf(0, 1),
                model.joint_pmf(1, 0),
            ];
            if let Some(p) = prev {
                assert!(cur[0] < p[0] && cur[1] < p[1], "decreasing pairs at wt={wt}");
                assert!(cur[2] > p[2] && cur[3] > p[3], "increasing pairs at wt={wt}");
            }
            prev = Some(cur);
        }
    }

    #[test]
    fn sampling_reproducible_and_independent_case() {
        let model = dc_pair(1.3, 1.2, 0.0);
        let sampler = model.sampler();
        let n = 100_000;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let draws: Vec<(u32, u32)> = (0..n).map(|_| sampler.sample(&mut rng)).collect();

        let mut rng2 = ChaCha8Rng::seed_from_u64(7);
        let again: Vec<(u32, u32)> = (0..n).map(|_| sampler.sample(&mut rng2)).collect();
        assert_eq!(draws, again);

        // Empirical correlation near zero under independence.
        let m1: f64 = draws.iter().map(|d| f64::from(d.0)).sum::<f64>() / n as f64;
        let m2: f64 = draws.iter().map(|d| f64::from(d.1)).sum::<f64>() / n as f64;
        let cov: f64 = draws
            .iter()
            .map(|d| (f64::from(d.0) - m1) * (f64::from(d.1) - m2))
            .sum::<f64>()
            / n as f64;
        let v1: f64 = draws.iter().map(|d| (f64::from(d.0) - m1).powi(2)).sum::<f64>() / n as f64;
        let v2: f64 = draws.iter().map(|d| (f64::from(d.1) - m2).powi(2)).sum::<f64>() / n as f64;
        let corr = cov / (v1 * v2).sqrt();
        assert!(corr.abs() < 0.01, "corr={corr}");
    }

    #[test]
    fn sampling_matches_pmf_chi_squared() {
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        let model = dc_pair(1.3, 1.2, -0.5);
        let sampler = model.sampler();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000usize;
        let cap = 6u32;
        let dim = (cap + 1) as usize;
        let mut counts = vec![0usize; dim * dim + 1];
        for _ in 0..n {
            let (x1, x2) = sampler.sample(&mut rng);
            if x1 <= cap && x2 <= cap {
                counts[(x1 as usize) * dim + x2 as usize] += 1;
            } else {
                counts[dim * dim] += 1;
            }
        }
        let mut stat = 0.0;
        let mut dof = 0usize;
        let mut tail_p = 1.0;
        for x1 in 0..=cap {
            for x2 in 0..=cap {
                let p = model.joint_pmf(x1, x2);
                tail_p -= p;
                let e = p * n as f64;
                if e > 5.0 {
                    let o = counts[(x1 as usize) * dim + x2 as usize] as f64;
                    stat += (o - e).powi(2) / e;
                    dof += 1;
                }
            }
        }
        let e_tail = tail_p.max(0.0) * n as f64;
        if e_tail > 5.0 {
            stat += (counts[dim * dim] as f64 - e_tail).powi(2) / e_tail;
            dof += 1;
        }
        let p_value = 1.0 - ChiSquared::new((dof - 1) as f64).unwrap().cdf(stat);
        assert!(p_value > 0.001, "GOF p={p_value} stat={stat} dof={dof}");
    }

    #[test]
    fn dc_sampling_shifts_low_scores() {
        // omega_tilde = 0.5 shifts mass away from (1,1) relative to
        // independence.
        let model = dc_pair(1.3, 1.2, -0.5);
        let sampler = model.sampler();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 100_000usize;
        let hits = (0..n)
            .filter(|_| sampler.sample(&mut rng) == (1, 1))
            .count();
        let p_indep = pois(1.3).pmf(1) * pois(1.2).pmf(1);
        assert!((hits as f64 / n as f64) / p_indep < 1.0);
    }

    #[test]
    fn ans_coincides_with_nb_laplace_at_matching_rate() {
        for phi in [0.5, 1.0, 2.0, 5.0] {
            let mu = phi * (std::f64::consts::E - 1.0);
            let omega = 0.7;
            let ans = BivariateModel::new(
                q(QKind::AnsGeometric, nb(mu, phi)),
                q(QKind::AnsGeometric, nb(mu, phi)),
                omega,
            )
            .unwrap();
            let lap = BivariateModel::new(
                q(QKind::LaplaceExp, nb(mu, phi)),
                q(QKind::LaplaceExp, nb(mu, phi)),
                omega,
            )
            .unwrap();
            for x1 in 0..=15 {
                for x2 in 0..=15 {
                    assert!(
                        (ans.joint_pmf(x1, x2) - lap.joint_pmf(x1, x2)).abs() < 1e-10,
                        "phi={phi} ({x1},{x2})"
                    );
                }
            }
        }
    }

    #[test]
    fn nonnegativity_at_omega_endpoints() {
        let pairs = [
            (q(QKind::Dc, pois(1.3)), q(QKind::Dc, pois(1.2))),
            (
                q(QKind::AnsGeometric, nb(1.3, 2.0)),
                q(QKind::AnsGeometric, nb(1.2, 5.0)),
            ),
            (q(QKind::Tilde, pois(1.0)), q(QKind::Hat, pois(2.0))),
        ];
        for (q1, q2) in pairs {
            let bounds = omega_bounds(&q1, &q2).unwrap();
            for omega in [bounds.lower, bounds.upper] {
                let xs1 = q1.marginal().truncation_point();
                let xs2 = q2.marginal().truncation_point();
                for x1 in 0..=xs1 {
                    for x2 in 0..=xs2 {
                        let bracket = 1.0 + omega * q1.eval(x1) * q2.eval(x2);
                        assert!(bracket >= -1e-12, "({x1},{x2}) omega={omega}");
                    }
                }
            }
        }
    }
}
