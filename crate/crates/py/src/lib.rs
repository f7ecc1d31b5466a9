//! Python bindings for the bivisar core crate.
//!
//! Build with `cargo build -p bivisar-py --release`, then rename the
//! resulting `libbivisar_py.so` to `bivisar_py.so` somewhere on
//! `sys.path` (see `python/smoke_test.py`).

use std::collections::BTreeMap;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use bivisar::{
    compare, fit as core_fit, omega_bounds as core_omega_bounds, prediction_intervals,
    simulate_season as core_simulate_season, BivariateModel, FitConfig, Fixture, MarginalSpec,
    MatchRecord, ModelSpec, QFunctionSpec, QKind, RegressionKind, DEFAULT_SEED,
};

fn err(e: bivisar::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_regression(s: &str) -> PyResult<RegressionKind> {
    match s {
        "teams" => Ok(RegressionKind::TeamEffects),
        "intercept" => Ok(RegressionKind::InterceptOnly),
        other => Err(PyValueError::new_err(format!(
            "unknown regression kind {other:?}, expected \"teams\" or \"intercept\""
        ))),
    }
}

fn records(matches: Vec<(String, String, u32, u32)>) -> PyResult<Vec<MatchRecord>> {
    matches
        .into_iter()
        .enumerate()
        .map(|(i, (h, a, hg, ag))| MatchRecord::new(h, a, hg, ag, "", format!("{i}")).map_err(err))
        .collect()
}

/// Univariate goal distribution, Poisson or negative binomial.
#[pyclass(name = "Marginal", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyMarginal {
    inner: MarginalSpec,
}

#[pymethods]
impl PyMarginal {
    #[staticmethod]
    fn poisson(lambda: f64) -> PyResult<Self> {
        Ok(PyMarginal {
            inner: MarginalSpec::poisson(lambda).map_err(err)?,
        })
    }

    #[staticmethod]
    fn negbin(mu: f64, phi: f64) -> PyResult<Self> {
        Ok(PyMarginal {
            inner: MarginalSpec::negbin(mu, phi).map_err(err)?,
        })
    }

    fn pmf(&self, x: u32) -> f64 {
        self.inner.pmf(x)
    }

    fn mean(&self) -> f64 {
        self.inner.mean()
    }

    fn variance(&self) -> f64 {
        self.inner.variance()
    }

    fn family(&self) -> String {
        self.inner.family().name().to_string()
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

/// Zero-mean perturbation function paired with a marginal.
#[pyclass(name = "QFunction", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyQFunction {
    inner: QFunctionSpec,
}

#[pymethods]
impl PyQFunction {
    #[new]
    fn new(kind: &str, marginal: &PyMarginal) -> PyResult<Self> {
        let k = QKind::parse(kind).map_err(err)?;
        Ok(PyQFunction {
            inner: QFunctionSpec::new(k, marginal.inner).map_err(err)?,
        })
    }

    fn eval(&self, x: u32) -> f64 {
        self.inner.eval(x)
    }

    fn zero_mean_residual(&self) -> f64 {
        self.inner.zero_mean_residual()
    }

    fn is_admissible(&self) -> bool {
        self.inner.is_admissible()
    }

    fn repaired(&self) -> PyResult<Self> {
        Ok(PyQFunction {
            inner: self.inner.repaired().map_err(err)?,
        })
    }

    fn kind(&self) -> String {
        self.inner.kind().name()
    }

    fn __repr__(&self) -> String {
        format!("QFunction({})", self.inner.kind().name())
    }
}

/// Correlated bivariate score distribution.
#[pyclass(name = "Bivariate", frozen)]
struct PyBivariate {
    inner: BivariateModel,
}

#[pymethods]
impl PyBivariate {
    #[new]
    fn new(q1: &PyQFunction, q2: &PyQFunction, omega: f64) -> PyResult<Self> {
        Ok(PyBivariate {
            inner: BivariateModel::new(q1.inner.clone(), q2.inner.clone(), omega).map_err(err)?,
        })
    }

    fn joint_pmf(&self, x1: u32, x2: u32) -> f64 {
        self.inner.joint_pmf(x1, x2)
    }

    fn correlation(&self) -> f64 {
        self.inner.correlation()
    }

    fn omega(&self) -> f64 {
        self.inner.omega()
    }

    fn omega_bounds(&self) -> (f64, f64) {
        let b = self.inner.omega_bounds();
        (b.lower, b.upper)
    }

    /// Score grid as (rows, truncated_mass); rows[x1][x2] = P(X1=x1, X2=x2).
    fn score_matrix(&self, max_goals: u32) -> PyResult<(Vec<Vec<f64>>, f64)> {
        let m = self.inner.score_matrix(max_goals).map_err(err)?;
        Ok((m.probs.clone(), m.truncated_mass))
    }

    #[pyo3(signature = (n, seed = DEFAULT_SEED))]
    fn sample(&self, n: usize, seed: u64) -> Vec<(u32, u32)> {
        let sampler = self.inner.sampler();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| sampler.sample(&mut rng)).collect()
    }
}

/// Feasible omega interval for a q-function pair.
#[pyfunction]
fn omega_bounds(q1: &PyQFunction, q2: &PyQFunction) -> PyResult<(f64, f64)> {
    let b = core_omega_bounds(&q1.inner, &q2.inner).map_err(err)?;
    Ok((b.lower, b.upper))
}

/// Result of a maximum-likelihood fit.
#[pyclass(name = "Fitted", frozen)]
struct PyFitted {
    inner: bivisar::FittedModel,
}

#[pymethods]
impl PyFitted {
    fn model_name(&self) -> String {
        self.inner.spec.name()
    }

    fn loglik(&self) -> f64 {
        self.inner.loglik
    }

    fn aic(&self) -> f64 {
        self.inner.aic
    }

    fn n_params(&self) -> usize {
        self.inner.n_params
    }

    fn converged(&self) -> bool {
        self.inner.converged
    }

    fn omega(&self) -> Option<f64> {
        self.inner.omega()
    }

    fn teams(&self) -> Vec<String> {
        self.inner.team_map.teams().to_vec()
    }

    /// Expected (home, away) goals for a pairing.
    fn predict_means(&self, home: &str, away: &str) -> PyResult<(f64, f64)> {
        self.inner.predict_means(home, away).map_err(err)
    }

    /// Score grid for a pairing, as in `Bivariate.score_matrix`.
    fn score_matrix(&self, home: &str, away: &str, max_goals: u32) -> PyResult<(Vec<Vec<f64>>, f64)> {
        let model = self.inner.bivariate_for(home, away).map_err(err)?;
        let m = model.score_matrix(max_goals).map_err(err)?;
        Ok((m.probs.clone(), m.truncated_mass))
    }
}

/// Fit a named model to match data given as (home, away, home_goals, away_goals) tuples.
#[pyfunction]
#[pyo3(signature = (matches, model = "dc", regression = "teams", seed = DEFAULT_SEED))]
fn fit(
    matches: Vec<(String, String, u32, u32)>,
    model: &str,
    regression: &str,
    seed: u64,
) -> PyResult<PyFitted> {
    let spec = ModelSpec::by_name(model, parse_regression(regression)?).map_err(err)?;
    let data = records(matches)?;
    let config = FitConfig {
        seed,
        ..FitConfig::default()
    };
    Ok(PyFitted {
        inner: core_fit(&spec, &data, &config).map_err(err)?,
    })
}

/// Fit several models to the same data and rank them by AIC.
/// Returns (name, loglik, n_params, aic, preferred) rows, best first.
#[pyfunction]
#[pyo3(signature = (matches, models, regression = "intercept", seed = DEFAULT_SEED))]
fn compare_models(
    matches: Vec<(String, String, u32, u32)>,
    models: Vec<String>,
    regression: &str,
    seed: u64,
) -> PyResult<Vec<(String, f64, usize, f64, bool)>> {
    let kind = parse_regression(regression)?;
    let data = records(matches)?;
    let config = FitConfig {
        seed,
        ..FitConfig::default()
    };
    let mut fits = Vec::new();
    for name in &models {
        let spec = ModelSpec::by_name(name, kind).map_err(err)?;
        fits.push(core_fit(&spec, &data, &config).map_err(err)?);
    }
    let rows = compare(&fits).map_err(err)?;
    Ok(rows
        .into_iter()
        .map(|r| (r.name, r.loglik, r.n_params, r.aic, r.preferred))
        .collect())
}

/// Simulate the remaining fixtures and summarise final points per team.
/// Returns {team: (mean_points, lower, upper)} at the given interval level.
#[pyfunction]
#[pyo3(signature = (fitted, fixtures, current_table = None, n_sims = 1000, seed = DEFAULT_SEED, level = 0.9))]
fn simulate_season(
    fitted: &PyFitted,
    fixtures: Vec<(String, String, u32)>,
    current_table: Option<BTreeMap<String, u32>>,
    n_sims: usize,
    seed: u64,
    level: f64,
) -> PyResult<BTreeMap<String, (f64, u32, u32)>> {
    let fixtures = fixtures
        .into_iter()
        .map(|(h, a, md)| Fixture::new(&h, &a, md).map_err(err))
        .collect::<PyResult<Vec<_>>>()?;
    let table = current_table.unwrap_or_default();
    let dist = core_simulate_season(&fitted.inner, &table, &fixtures, n_sims, seed).map_err(err)?;
    let intervals = prediction_intervals(&dist, level).map_err(err)?;
    let mut out = BTreeMap::new();
    for (team, (lo, hi)) in intervals {
        let mean = dist.mean(&team).unwrap_or(f64::NAN);
        out.insert(team, (mean, lo, hi));
    }
    Ok(out)
}

/// Full names of every model in the catalog.
#[pyfunction]
fn model_names() -> Vec<String> {
    ModelSpec::valid_names()
}

#[pymodule]
fn bivisar_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMarginal>()?;
    m.add_class::<PyQFunction>()?;
    m.add_class::<PyBivariate>()?;
    m.add_class::<PyFitted>()?;
    m.add_function(wrap_pyfunction!(omega_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(compare_models, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_season, m)?)?;
    m.add_function(wrap_pyfunction!(model_names, m)?)?;
    m.add("DEFAULT_SEED", DEFAULT_SEED)?;
    Ok(())
}
