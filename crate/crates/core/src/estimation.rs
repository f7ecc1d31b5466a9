//! Log-likelihood evaluation, constrained maximum-likelihood fitting, AIC,
//! and model comparison.

use crate::bivariate::{omega_bounds, BivariateModel};
use crate::marginals::{Family, MarginalSpec};
use crate::optim;
use crate::qcatalog::{QFunctionSpec, QKind};
use crate::regression::{MatchRecord, ParamLayout, RegressionParams, TeamIndexMap};
use crate::{Error, Result, DEFAULT_SEED};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegressionKind {
    InterceptOnly,
    TeamEffects,
}

/// One model family to fit: marginal family per side, q-function kind per
/// side (None for independence baselines), and the regression structure.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub family_home: Family,
    pub family_away: Family,
    pub q_kinds: Option<(QKind, QKind)>,
    pub regression: RegressionKind,
}

/// The named catalog: `(canonical label, short alias, home/away family, q kinds)`.
/// Labels follow the usual model-comparison table naming.
fn catalog() -> Vec<(&'static str, &'static str, Family, Option<QKind>)> {
    use Family::{NegBin, Poisson};
    vec![
        ("double Poisson", "dp", Poisson, None),
        ("double negative binomial", "dnb", NegBin, None),
        ("Dixon and Coles Poisson", "dc", Poisson, Some(QKind::Dc)),
        (
            "Dixon and Coles Poisson with q_hat",
            "dc-hat",
            Poisson,
            Some(QKind::Hat),
        ),
        (
            "Dixon and Coles Poisson with q_tilde",
            "dc-tilde",
            Poisson,
            Some(QKind::Tilde),
        ),
        (
            "Dixon and Coles negative binomial with q_nb",
            "dc-nb",
            NegBin,
            Some(QKind::OneP),
        ),
        (
            "Dixon and Coles negative binomial with q_hat_nb",
            "dc-hat-nb",
            NegBin,
            Some(QKind::Hat),
        ),
        // The printed tilde_nb fails the zero-mean condition; the fitted
        // variant is the moment-repaired form.
        (
            "Dixon and Coles negative binomial with q_tilde_nb",
            "dc-tilde-nb",
            NegBin,
            Some(QKind::Repaired(Box::new(QKind::Tilde))),
        ),
        ("Sarmanov Poisson", "sar-pois", Poisson, Some(QKind::LaplaceExp)),
        (
            "Sarmanov negative binomial",
            "sar-nb",
            NegBin,
            Some(QKind::LaplaceExp),
        ),
        (
            "Alternative Negative binomial Sarmanov",
            "ans",
            NegBin,
            Some(QKind::AnsGeometric),
        ),
    ]
}

impl ModelSpec {
    /// Look up a model by its canonical label or short alias.
    pub fn by_name(name: &str, regression: RegressionKind) -> Result<ModelSpec> {
        for (label, alias, family, q) in catalog() {
            if name == label || name == alias {
                return Ok(ModelSpec {
                    family_home: family,
                    family_away: family,
                    q_kinds: q.map(|k| (k.clone(), k)),
                    regression,
                });
            }
        }
        Err(Error::UnknownModel {
            name: name.to_string(),
            valid: Self::valid_names().join(", "),
        })
    }

    pub fn valid_names() -> Vec<String> {
        catalog()
            .iter()
            .map(|(label, alias, _, _)| format!("{label} ({alias})"))
            .collect()
    }

    /// All named models with the given regression structure, in table order.
    pub fn all_named(regression: RegressionKind) -> Vec<(String, ModelSpec)> {
        catalog()
            .into_iter()
            .map(|(label, _, family, q)| {
                (
                    label.to_string(),
                    ModelSpec {
                        family_home: family,
                        family_away: family,
                        q_kinds: q.map(|k| (k.clone(), k)),
                        regression,
                    },
                )
            })
            .collect()
    }

    /// Canonical label if this spec is in the named catalog.
    pub fn name(&self) -> String {
        for (label, _, family, q) in catalog() {
            let q_kinds = q.map(|k| (k.clone(), k));
            if self.family_home == family && self.family_away == family && self.q_kinds == q_kinds
            {
                return label.to_string();
            }
        }
        "custom".to_string()
    }

    pub fn layout(&self, k_teams: usize) -> ParamLayout {
        ParamLayout {
            k_teams: match self.regression {
                RegressionKind::InterceptOnly => 0,
                RegressionKind::TeamEffects => k_teams,
            },
            nb_home: self.family_home == Family::NegBin,
            nb_away: self.family_away == Family::NegBin,
            has_omega: self.q_kinds.is_some(),
        }
    }

    fn marginal(&self, side_home: bool, mean: f64, phi: Option<f64>) -> Result<MarginalSpec> {
        let family = if side_home {
            self.family_home
        } else {
            self.family_away
        };
        match family {
            Family::Poisson => MarginalSpec::poisson(mean),
            Family::NegBin => MarginalSpec::negbin(mean, phi.expect("layout carries phi")),
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Map the unconstrained optimizer coordinate into the feasible bracket.
pub fn omega_from_raw(raw: f64, bracket: (f64, f64)) -> f64 {
    bracket.0 + (bracket.1 - bracket.0) * sigmoid(raw)
}

/// Raw coordinate that maps to a given omega (inverse of [`omega_from_raw`]).
pub fn raw_from_omega(omega: f64, bracket: (f64, f64)) -> f64 {
    let t = ((omega - bracket.0) / (bracket.1 - bracket.0)).clamp(1e-12, 1.0 - 1e-12);
    (t / (1.0 - t)).ln()
}

/// Match data pre-resolved against a team index map and grouped by pairing,
/// so per-pairing marginals and q-functions are built once per likelihood
/// evaluation.
struct PairingGroup {
    home: usize,
    away: usize,
    /// Distinct scorelines with multiplicities.
    obs: Vec<(u32, u32, f64)>,
}

struct IndexedData {
    groups: Vec<PairingGroup>,
}

impl IndexedData {
    fn build(data: &[MatchRecord], map: &TeamIndexMap) -> Result<Self> {
        let mut grouped: std::collections::BTreeMap<(usize, usize), std::collections::BTreeMap<(u32, u32), usize>> =
            std::collections::BTreeMap::new();
        for m in data {
            let h = map.index(&m.home_team)?;
            let g = map.index(&m.away_team)?;
            *grouped
                .entry((h, g))
                .or_default()
                .entry((m.home_goals, m.away_goals))
                .or_insert(0) += 1;
        }
        let groups = grouped
            .into_iter()
            .map(|((home, away), scores)| PairingGroup {
                home,
                away,
                obs: scores
                    .into_iter()
                    .map(|((hg, ag), count)| (hg, ag, count as f64))
                    .collect(),
            })
            .collect();
        Ok(IndexedData { groups })
    }
}

/// Joint log-likelihood of the data. Infeasibility (omega outside the
/// per-match bounds, or a nonpositive joint pmf) is encoded as `-inf` so the
/// optimizer backs off rather than erroring.
pub fn loglik(
    spec: &ModelSpec,
    params: &RegressionParams,
    omega_bracket: Option<(f64, f64)>,
    data: &[MatchRecord],
    map: &TeamIndexMap,
) -> Result<f64> {
    let indexed = IndexedData::build(data, map)?;
    Ok(loglik_indexed(spec, params, omega_bracket, &indexed))
}

fn loglik_indexed(
    spec: &ModelSpec,
    params: &RegressionParams,
    omega_bracket: Option<(f64, f64)>,
    data: &IndexedData,
) -> f64 {
    let omega = params
        .omega_raw()
        .map(|raw| omega_from_raw(raw, omega_bracket.expect("dependence model needs a bracket")));
    let mut ll = 0.0;
    for group in &data.groups {
        let (theta1, theta2) = params.predict_means(group.home, group.away);
        if !theta1.is_finite() || !theta2.is_finite() {
            return f64::NEG_INFINITY;
        }
        let m1 = match spec.marginal(true, theta1, params.phi_home()) {
            Ok(m) => m,
            Err(_) => return f64::NEG_INFINITY,
        };
        let m2 = match spec.marginal(false, theta2, params.phi_away()) {
            Ok(m) => m,
            Err(_) => return f64::NEG_INFINITY,
        };
        let qs = if let (Some(omega), Some((k1, k2))) = (omega, &spec.q_kinds) {
            let q1 = match QFunctionSpec::new(k1.clone(), m1) {
                Ok(q) => q,
                Err(_) => return f64::NEG_INFINITY,
            };
            let q2 = match QFunctionSpec::new(k2.clone(), m2) {
                Ok(q) => q,
                Err(_) => return f64::NEG_INFINITY,
            };
            match omega_bounds(&q1, &q2) {
                Ok(b) if b.contains(omega) => {}
                _ => return f64::NEG_INFINITY,
            }
            Some((omega, q1, q2))
        } else {
            None
        };
        for &(hg, ag, count) in &group.obs {
            let mut term = m1.ln_pmf(hg) + m2.ln_pmf(ag);
            if let Some((omega, q1, q2)) = &qs {
                let bracket = 1.0 + omega * q1.eval(hg) * q2.eval(ag);
                if bracket <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                term += bracket.ln();
            }
            if !term.is_finite() {
                return f64::NEG_INFINITY;
            }
            ll += count * term;
        }
    }
    ll
}

#[derive(Debug, Clone, Copy)]
pub struct FitConfig {
    pub max_iter: usize,
    pub tol: f64,
    pub n_starts: usize,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            max_iter: 300,
            tol: 1e-9,
            n_starts: 3,
            seed: DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FittedModel {
    pub spec: ModelSpec,
    pub team_map: TeamIndexMap,
    pub params: RegressionParams,
    /// Sigmoid bracket used to map `omega_raw` to a feasible omega; present
    /// iff the model carries a dependence parameter.
    pub omega_bracket: Option<(f64, f64)>,
    pub loglik: f64,
    pub n_params: usize,
    pub aic: f64,
    pub converged: bool,
    pub n_obs: usize,
    pub seed: u64,
    pub data_fingerprint: u64,
}

impl FittedModel {
    pub fn omega(&self) -> Option<f64> {
        match (self.params.omega_raw(), self.omega_bracket) {
            (Some(raw), Some(bracket)) => Some(omega_from_raw(raw, bracket)),
            _ => None,
        }
    }

    pub fn predict_means(&self, home_team: &str, away_team: &str) -> Result<(f64, f64)> {
        let h = self.team_map.index(home_team)?;
        let g = self.team_map.index(away_team)?;
        Ok(self.params.predict_means(h, g))
    }

    /// Bivariate model for one pairing. Independence baselines get the DC
    /// q-pair with omega 0 so the joint pmf is the plain product. If the
    /// fitted omega is infeasible for this particular pairing's means it is
    /// clamped to the pairing's feasible interval.
    pub fn bivariate_for(&self, home_team: &str, away_team: &str) -> Result<BivariateModel> {
        let (theta1, theta2) = self.predict_means(home_team, away_team)?;
        let m1 = self.spec.marginal(true, theta1, self.params.phi_home())?;
        let m2 = self.spec.marginal(false, theta2, self.params.phi_away())?;
        let (k1, k2) = match &self.spec.q_kinds {
            Some((k1, k2)) => (k1.clone(), k2.clone()),
            None => {
                let zero_q = |m: MarginalSpec| match m.family() {
                    Family::Poisson => QFunctionSpec::new(QKind::Dc, m),
                    Family::NegBin => QFunctionSpec::new(QKind::OneP, m),
                };
                return BivariateModel::new(zero_q(m1)?, zero_q(m2)?, 0.0);
            }
        };
        let q1 = QFunctionSpec::new(k1, m1)?;
        let q2 = QFunctionSpec::new(k2, m2)?;
        let omega = self.omega().expect("dependence model");
        let bounds = omega_bounds(&q1, &q2)?;
        let omega = omega.clamp(bounds.lower, bounds.upper);
        BivariateModel::new(q1, q2, omega)
    }
}

fn data_fingerprint(data: &[MatchRecord]) -> u64 {
    let mut h = DefaultHasher::new();
    data.len().hash(&mut h);
    for m in data {
        m.home_team.hash(&mut h);
        m.away_team.hash(&mut h);
        m.home_goals.hash(&mut h);
        m.away_goals.hash(&mut h);
    }
    h.finish()
}

/// Method-of-moments summaries used for initialization and the omega bracket.
struct Moments {
    mean_home: f64,
    mean_away: f64,
    phi_home: f64,
    phi_away: f64,
}

fn moments(data: &[MatchRecord]) -> Moments {
    let n = data.len() as f64;
    let mean = |get: &dyn Fn(&MatchRecord) -> f64| -> (f64, f64) {
        let m = data.iter().map(|r| get(r)).sum::<f64>() / n;
        let v = data.iter().map(|r| (get(r) - m).powi(2)).sum::<f64>() / n.max(2.0);
        (m.max(0.05), v)
    };
    let (mean_home, var_home) = mean(&|r| f64::from(r.home_goals));
    let (mean_away, var_away) = mean(&|r| f64::from(r.away_goals));
    let phi_of = |m: f64, v: f64| (m * m / (v - m).max(1e-3)).clamp(0.2, 1e4);
    Moments {
        mean_home,
        mean_away,
        phi_home: phi_of(mean_home, var_home),
        phi_away: phi_of(mean_away, var_away),
    }
}

/// Conservative, data-independent omega bracket from the intercept-only
/// moment estimates, shrunk slightly away from the endpoints. Per-match
/// feasibility under team effects is still backstopped by the `-inf` penalty.
fn omega_bracket_for(spec: &ModelSpec, mom: &Moments) -> Result<Option<(f64, f64)>> {
    let Some((k1, k2)) = &spec.q_kinds else {
        return Ok(None);
    };
    let m1 = spec.marginal(true, mom.mean_home, Some(mom.phi_home))?;
    let m2 = spec.marginal(false, mom.mean_away, Some(mom.phi_away))?;
    let q1 = QFunctionSpec::new(k1.clone(), m1)?;
    let q2 = QFunctionSpec::new(k2.clone(), m2)?;
    let b = omega_bounds(&q1, &q2)?;
    Ok(Some((0.95 * b.lower, 0.95 * b.upper)))
}

fn mom_init(spec: &ModelSpec, data: &[MatchRecord], map: &TeamIndexMap, mom: &Moments) -> RegressionParams {
    let layout = spec.layout(map.len());
    match spec.regression {
        RegressionKind::InterceptOnly => RegressionParams::InterceptOnly {
            log_mean_home: mom.mean_home.ln(),
            log_mean_away: mom.mean_away.ln(),
            log_phi_home: layout.nb_home.then(|| mom.phi_home.ln()),
            log_phi_away: layout.nb_away.then(|| mom.phi_away.ln()),
            omega_raw: layout.has_omega.then_some(0.0),
        },
        RegressionKind::TeamEffects => {
            let k = map.len();
            let mut scored = vec![0.0f64; k];
            let mut conceded = vec![0.0f64; k];
            let mut played = vec![0.0f64; k];
            for m in data {
                let h = map.index(&m.home_team).expect("validated");
                let g = map.index(&m.away_team).expect("validated");
                scored[h] += f64::from(m.home_goals);
                conceded[h] += f64::from(m.away_goals);
                scored[g] += f64::from(m.away_goals);
                conceded[g] += f64::from(m.home_goals);
                played[h] += 1.0;
                played[g] += 1.0;
            }
            let league_rate =
                (scored.iter().sum::<f64>() / played.iter().sum::<f64>()).max(0.05);
            let rel = |totals: &[f64], i: usize| {
                ((totals[i] / played[i].max(1.0)).max(0.05) / league_rate).ln()
            };
            let att: Vec<f64> = (0..k).map(|i| rel(&scored, i)).collect();
            let mut def: Vec<f64> = (0..k).map(|i| rel(&conceded, i)).collect();
            let def_mean = def.iter().sum::<f64>() / k as f64;
            for d in &mut def {
                *d -= def_mean;
            }
            RegressionParams::TeamEffects {
                home: (mom.mean_home / mom.mean_away).ln(),
                att,
                def_free: def[..k - 1].to_vec(),
                log_phi_home: layout.nb_home.then(|| mom.phi_home.ln()),
                log_phi_away: layout.nb_away.then(|| mom.phi_away.ln()),
                omega_raw: layout.has_omega.then_some(0.0),
            }
        }
    }
}

/// Maximum-likelihood fit via multi-start quasi-Newton ascent with
/// finite-difference gradients.
pub fn fit(spec: &ModelSpec, data: &[MatchRecord], config: &FitConfig) -> Result<FittedModel> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let map = TeamIndexMap::from_matches(data);
    if spec.regression == RegressionKind::TeamEffects && map.len() < 2 {
        return Err(Error::Degenerate(
            "team-effects regression needs at least two distinct teams".into(),
        ));
    }
    let layout = spec.layout(map.len());
    if data.len() < layout.len() {
        return Err(Error::Degenerate(format!(
            "{} observations cannot identify {} parameters",
            data.len(),
            layout.len()
        )));
    }
    // Teams that never score are estimable only through the 0.05 floor in
    // the initializer; warn but proceed.
    for team in map.teams() {
        let scoreless = data.iter().all(|m| {
            (m.home_team != *team || m.home_goals == 0)
                && (m.away_team != *team || m.away_goals == 0)
        });
        if scoreless && spec.regression == RegressionKind::TeamEffects {
            eprintln!("warning: team {team:?} never scores in the data; fit may be unstable");
        }
    }

    let mom = moments(data);
    let bracket = omega_bracket_for(spec, &mom)?;
    let indexed = IndexedData::build(data, &map)?;
    let objective = |v: &[f64]| -> f64 {
        match RegressionParams::unpack(v, layout) {
            Ok(p) => loglik_indexed(spec, &p, bracket, &indexed),
            Err(_) => f64::NEG_INFINITY,
        }
    };

    let mom_start = mom_init(spec, data, &map, &mom).pack();
    let n_starts = config.n_starts.max(1);
    let mut starts = vec![mom_start.clone()];
    if n_starts >= 2 {
        // Zero start, with omega_raw positioned at omega = 0.
        let mut zero = vec![0.0; layout.len()];
        if layout.has_omega {
            let last = zero.len() - 1;
            zero[last] = raw_from_omega(0.0, bracket.expect("has_omega"));
        }
        starts.push(zero);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    while starts.len() < n_starts {
        let perturbed: Vec<f64> = mom_start
            .iter()
            .map(|v| v + rng.random_range(-0.1..0.1))
            .collect();
        starts.push(perturbed);
    }

    let mut best: Option<optim::OptimResult> = None;
    for start in &starts {
        let r = optim::maximize(&objective, start, config.max_iter, config.tol);
        if !r.value.is_finite() {
            continue;
        }
        if best.as_ref().is_none_or(|b| r.value > b.value) {
            best = Some(r);
        }
    }
    let mut best = best.ok_or_else(|| {
        Error::Degenerate("no feasible starting point for the likelihood".into())
    })?;
    // Restarting from the incumbent resets the curvature estimate, which
    // reliably escapes premature line-search stalls.
    for _ in 0..8 {
        let r = optim::maximize(&objective, &best.x, config.max_iter, config.tol);
        let improved = r.value > best.value + 1e-7;
        if r.value > best.value {
            best = r;
        }
        if !improved {
            break;
        }
    }

    let params = RegressionParams::unpack(&best.x, layout)?;
    let n_params = layout.len();
    let loglik = best.value;
    Ok(FittedModel {
        spec: spec.clone(),
        team_map: map,
        params,
        omega_bracket: bracket,
        loglik,
        n_params,
        aic: 2.0 * n_params as f64 - 2.0 * loglik,
        converged: best.converged,
        n_obs: data.len(),
        seed: config.seed,
        data_fingerprint: data_fingerprint(data),
    })
}

pub fn aic(fitted: &FittedModel) -> f64 {
    fitted.aic
}

#[derive(Debug, Clone)]
pub struct ComparisonRow {
    pub name: String,
    pub loglik: f64,
    pub n_params: usize,
    pub aic: f64,
    pub preferred: bool,
}

/// Order fits by ascending AIC and mark the minimum. All fits must come from
/// the same dataset.
pub fn compare(fits: &[FittedModel]) -> Result<Vec<ComparisonRow>> {
    if fits.is_empty() {
        return Err(Error::Degenerate("nothing to compare".into()));
    }
    let fp = fits[0].data_fingerprint;
    if fits.iter().any(|f| f.data_fingerprint != fp) {
        return Err(Error::MixedDatasets);
    }
    let mut rows: Vec<ComparisonRow> = fits
        .iter()
        .map(|f| ComparisonRow {
            name: f.spec.name(),
            loglik: f.loglik,
            n_params: f.n_params,
            aic: f.aic,
            preferred: false,
        })
        .collect();
    rows.sort_by(|a, b| a.aic.partial_cmp(&b.aic).expect("finite AIC"));
    rows[0].preferred = true;
    Ok(rows)
}
