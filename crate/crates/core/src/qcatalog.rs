//! The catalog of q-functions, each bound to a marginal at construction.
//!
//! Every admissible q satisfies the zero-mean condition
//! `sum_x q(x) pmf(x) = 0`, which is what preserves the marginals of the
//! Sarmanov joint pmf. The catalog keeps one known-defective entry (`Tilde` on
//! negative binomial margins, as printed) whose residual is nonzero; it is
//! surfaced by the validator and can be fixed with [`QFunctionSpec::repaired`].

use crate::marginals::{Family, MarginalSpec};
use crate::{Error, Result};

/// Tolerance certifying the zero-mean condition.
pub const ZERO_MEAN_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QKind {
    /// `(-lambda, 1, 0, ...)` on Poisson margins: the Dixon-Coles q-function.
    Dc,
    /// Quadratic shift: `(-lambda^2, lambda, 0, ...)` on Poisson,
    /// `(-mu^2, mu (phi+mu)/phi, 0, ...)` on negative binomial margins.
    Hat,
    /// `(-lambda^s, lambda^{s-1}, 0, ...)` on Poisson margins, s >= 1.
    HatS(u32),
    /// Three-point shift up to x=2: `(-lambda^2, -lambda, 4, 0, ...)` on
    /// Poisson. On negative binomial margins this is the printed
    /// `(-mu^2, -mu (phi+mu)/phi, 4 mu phi/(phi+mu), 0, ...)`, which does NOT
    /// satisfy the zero-mean condition; see [`QFunctionSpec::repaired`].
    Tilde,
    /// `q(x) = -x! lambda^{s-x}` for x < s, `s s!` at x = s, else 0; Poisson
    /// margins, s >= 1. Reduces to `Dc` at s=1 and `Tilde` at s=2.
    GeneralS(u32),
    /// `(-P1/P0, 1, 0, ...)` for any discrete marginal. On negative binomial
    /// margins this is the `q_nb` two-point shift.
    OneP,
    /// `(mu, -mu P0/P1, 0, ...)` for any discrete marginal.
    TwoP,
    /// `(-mu P1/P0, mu, 0, ...)` for any discrete marginal.
    ThreeP,
    /// `e^{-x} - L(1)` where L is the Laplace transform of the marginal;
    /// nonzero on the whole support with tail limit `-L(1)`.
    LaplaceExp,
    /// `(phi/(phi+mu))^x - c` on negative binomial margins, with c chosen so
    /// the zero-mean condition holds; tail limit `-c`. The ANS q-function.
    AnsGeometric,
    /// The base kind with its last active-support value replaced by the unique
    /// value making the zero-mean residual exactly zero.
    Repaired(Box<QKind>),
}

impl QKind {
    pub fn name(&self) -> String {
        match self {
            QKind::Dc => "dc".into(),
            QKind::Hat => "hat".into(),
            QKind::HatS(s) => format!("hat_s:{s}"),
            QKind::Tilde => "tilde".into(),
            QKind::GeneralS(s) => format!("general_s:{s}"),
            QKind::OneP => "one_p".into(),
            QKind::TwoP => "two_p".into(),
            QKind::ThreeP => "three_p".into(),
            QKind::LaplaceExp => "laplace".into(),
            QKind::AnsGeometric => "ans".into(),
            QKind::Repaired(base) => format!("repaired({})", base.name()),
        }
    }

    /// Parse a q-kind name as used by the CLI and model files. Accepts the
    /// `_nb` aliases for the negative binomial variants of `hat` and `tilde`.
    pub fn parse(name: &str) -> Result<QKind> {
        let parse_s = |arg: &str| -> Result<u32> {
            arg.parse::<u32>().ok().filter(|s| *s >= 1).ok_or_else(|| {
                Error::InvalidParameter(format!("exponent s must be an integer >= 1, got {arg:?}"))
            })
        };
        if let Some(rest) = name
            .strip_prefix("repaired(")
            .and_then(|r| r.strip_suffix(')'))
        {
            return Ok(QKind::Repaired(Box::new(QKind::parse(rest)?)));
        }
        if let Some(arg) = name.strip_prefix("hat_s:") {
            return Ok(QKind::HatS(parse_s(arg)?));
        }
        if let Some(arg) = name.strip_prefix("general_s:") {
            return Ok(QKind::GeneralS(parse_s(arg)?));
        }
        match name {
            "dc" | "q_dc" => Ok(QKind::Dc),
            "hat" | "q_hat" | "hat_nb" | "q_hat_nb" => Ok(QKind::Hat),
            "tilde" | "q_tilde" | "tilde_nb" | "q_tilde_nb" => Ok(QKind::Tilde),
            "one_p" | "q_1p" | "q_nb" | "nb" => Ok(QKind::OneP),
            "two_p" | "q_2p" => Ok(QKind::TwoP),
            "three_p" | "q_3p" => Ok(QKind::ThreeP),
            "laplace" | "q_sar" => Ok(QKind::LaplaceExp),
            "ans" | "q_ans" => Ok(QKind::AnsGeometric),
            other => Err(Error::InvalidParameter(format!(
                "unknown q-function kind {other:?}; valid kinds: dc, hat, hat_s:<s>, tilde, \
                 general_s:<s>, one_p, two_p, three_p, laplace, ans, repaired(<kind>)"
            ))),
        }
    }
}

/// Internal evaluation form. All finite-support kinds reduce to a value table
/// over the active support; both infinite-support kinds are geometric decay
/// minus a constant.
#[derive(Debug, Clone, PartialEq)]
enum QRepr {
    /// q(x) = vals[x] for x < vals.len(), else 0.
    Finite(Vec<f64>),
    /// q(x) = rate^x - offset, rate in (0, 1).
    Geometric { rate: f64, offset: f64 },
}

/// A q-function from the catalog, bound to its marginal.
#[derive(Debug, Clone, PartialEq)]
pub struct QFunctionSpec {
    kind: QKind,
    marginal: MarginalSpec,
    repr: QRepr,
}

fn mismatch(kind: &QKind, family: Family) -> Error {
    Error::KindMarginalMismatch {
        kind: kind.name(),
        family: family.name().to_string(),
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

impl QFunctionSpec {
    pub fn new(kind: QKind, marginal: MarginalSpec) -> Result<Self> {
        let repr = Self::build_repr(&kind, &marginal)?;
        Ok(QFunctionSpec { kind, marginal, repr })
    }

    fn build_repr(kind: &QKind, m: &MarginalSpec) -> Result<QRepr> {
        // P1/P0 in closed form: lambda for Poisson, phi mu/(phi+mu) for NB.
        let p1_over_p0 = match *m {
            MarginalSpec::Poisson { lambda } => lambda,
            MarginalSpec::NegBin { mu, phi } => phi * mu / (phi + mu),
        };
        let mean = m.mean();
        Ok(match kind {
            QKind::Dc => match *m {
                MarginalSpec::Poisson { lambda } => QRepr::Finite(vec![-lambda, 1.0]),
                MarginalSpec::NegBin { .. } => return Err(mismatch(kind, m.family())),
            },
            QKind::Hat => match *m {
                MarginalSpec::Poisson { lambda } => {
                    QRepr::Finite(vec![-lambda * lambda, lambda])
                }
                MarginalSpec::NegBin { mu, phi } => {
                    QRepr::Finite(vec![-mu * mu, mu * (phi + mu) / phi])
                }
            },
            QKind::HatS(s) => match *m {
                MarginalSpec::Poisson { lambda } => {
                    let s = i32::try_from(*s).unwrap();
                    QRepr::Finite(vec![-lambda.powi(s), lambda.powi(s - 1)])
                }
                MarginalSpec::NegBin { .. } => return Err(mismatch(kind, m.family())),
            },
            QKind::Tilde => match *m {
                MarginalSpec::Poisson { lambda } => {
                    QRepr::Finite(vec![-lambda * lambda, -lambda, 4.0])
                }
                // As printed; does not satisfy the zero-mean condition.
                MarginalSpec::NegBin { mu, phi } => QRepr::Finite(vec![
                    -mu * mu,
                    -mu * (phi + mu) / phi,
                    4.0 * mu * phi / (phi + mu),
                ]),
            },
            QKind::GeneralS(s) => match *m {
                MarginalSpec::Poisson { lambda } => {
                    if *s > 30 {
                        return Err(Error::InvalidParameter(format!(
                            "general_s exponent {s} too large (max 30)"
                        )));
                    }
                    let mut vals: Vec<f64> = (0..*s)
                        .map(|x| -factorial(x) * lambda.powi((*s - x) as i32))
                        .collect();
                    vals.push(f64::from(*s) * factorial(*s));
                    QRepr::Finite(vals)
                }
                MarginalSpec::NegBin { .. } => return Err(mismatch(kind, m.family())),
            },
            QKind::OneP => QRepr::Finite(vec![-p1_over_p0, 1.0]),
            QKind::TwoP => QRepr::Finite(vec![mean, -mean / p1_over_p0]),
            QKind::ThreeP => QRepr::Finite(vec![-mean * p1_over_p0, mean]),
            QKind::LaplaceExp => QRepr::Geometric {
                rate: (-1.0f64).exp(),
                offset: m.laplace_at_one(),
            },
            QKind::AnsGeometric => match *m {
                MarginalSpec::Poisson { .. } => return Err(mismatch(kind, m.family())),
                MarginalSpec::NegBin { mu, phi } => {
                    let t = phi / (phi + mu);
                    let c = t.powf(phi) * (1.0 - (1.0 - t) * t).powf(-phi);
                    QRepr::Geometric { rate: t, offset: c }
                }
            },
            QKind::Repaired(base) => {
                let base_q = QFunctionSpec::new((**base).clone(), *m)?;
                let vals = match base_q.repr {
                    QRepr::Finite(vals) => vals,
                    QRepr::Geometric { .. } => {
                        return Err(Error::Unsupported(format!(
                            "cannot repair infinite-support kind {}",
                            base.name()
                        )))
                    }
                };
                let s = vals.len() - 1;
                let ps = m.pmf(s as u32);
                if ps <= 0.0 {
                    return Err(Error::RepairImpossible(format!(
                        "P({s}) = 0 under the bound marginal"
                    )));
                }
                let head: f64 = vals[..s]
                    .iter()
                    .enumerate()
                    .map(|(x, q)| q * m.pmf(x as u32))
                    .sum();
                let mut repaired = vals;
                repaired[s] = -head / ps;
                QRepr::Finite(repaired)
            }
        })
    }

    pub fn kind(&self) -> &QKind {
        &self.kind
    }

    pub fn marginal(&self) -> &MarginalSpec {
        &self.marginal
    }

    pub fn eval(&self, x: u32) -> f64 {
        match &self.repr {
            QRepr::Finite(vals) => vals.get(x as usize).copied().unwrap_or(0.0),
            QRepr::Geometric { rate, offset } => rate.powi(x as i32) - offset,
        }
    }

    /// `sum_{x=0}^{X*} q(x) pmf(x)`; a value within [`ZERO_MEAN_TOL`] of zero
    /// certifies admissibility.
    pub fn zero_mean_residual(&self) -> f64 {
        match &self.repr {
            // Exact finite sum over the active support.
            QRepr::Finite(vals) => vals
                .iter()
                .enumerate()
                .map(|(x, q)| q * self.marginal.pmf(x as u32))
                .sum(),
            QRepr::Geometric { .. } => (0..=self.marginal.truncation_point())
                .map(|x| self.eval(x) * self.marginal.pmf(x))
                .sum(),
        }
    }

    pub fn is_admissible(&self) -> bool {
        self.zero_mean_residual().abs() <= ZERO_MEAN_TOL
    }

    /// Replace the value at the largest active-support point by the unique
    /// value zeroing the residual. A q already satisfying the condition comes
    /// back with identical values.
    pub fn repaired(&self) -> Result<QFunctionSpec> {
        QFunctionSpec::new(QKind::Repaired(Box::new(self.kind.clone())), self.marginal)
    }

    /// Infimum and supremum of `{q(x) : x >= 0}`, including the tail limit
    /// for the infinite-support kinds. Feeds the omega bounds.
    pub fn value_bounds(&self) -> (f64, f64) {
        match &self.repr {
            QRepr::Finite(vals) => {
                let mut lo = 0.0f64; // tail value
                let mut hi = 0.0f64;
                for &v in vals {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                (lo, hi)
            }
            // rate^x decreases from 1 to 0, so sup at x=0 and inf at the tail.
            QRepr::Geometric { offset, .. } => (-offset, 1.0 - offset),
        }
    }
}
