//! Monte Carlo simulation of the remaining fixtures of a season under a
//! fitted model, and prediction intervals for final points.

use crate::estimation::FittedModel;
use crate::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fixture {
    pub home_team: String,
    pub away_team: String,
    pub matchday: u32,
}

impl Fixture {
    pub fn new(home_team: &str, away_team: &str, matchday: u32) -> Result<Fixture> {
        if home_team == away_team {
            return Err(Error::InvalidParameter(format!(
                "fixture pairs a team with itself: {home_team:?}"
            )));
        }
        if matchday < 1 {
            return Err(Error::InvalidParameter("matchday must be >= 1".into()));
        }
        Ok(Fixture {
            home_team: home_team.to_string(),
            away_team: away_team.to_string(),
            matchday,
        })
    }
}

/// Simulated final points per team, one value per replicate, alongside the
/// points already on the table.
#[derive(Debug, Clone)]
pub struct PointsDistribution {
    pub simulated: BTreeMap<String, Vec<u32>>,
    pub current_points: BTreeMap<String, u32>,
    pub n_sims: usize,
}

impl PointsDistribution {
    pub fn mean(&self, team: &str) -> Option<f64> {
        self.simulated
            .get(team)
            .map(|v| v.iter().map(|&p| f64::from(p)).sum::<f64>() / v.len() as f64)
    }
}

/// Play out every fixture `n_sims` times under the fitted model. Replicates
/// use independent RNG streams keyed by replicate index, so results are
/// deterministic given the seed and independent of evaluation order.
pub fn simulate_season(
    fitted: &FittedModel,
    current_table: &BTreeMap<String, u32>,
    fixtures: &[Fixture],
    n_sims: usize,
    seed: u64,
) -> Result<PointsDistribution> {
    if n_sims < 1 {
        return Err(Error::InvalidParameter("n_sims must be >= 1".into()));
    }
    // One sampler per fixture, built once; unknown teams surface here.
    let mut samplers = Vec::with_capacity(fixtures.len());
    for f in fixtures {
        let model = fitted.bivariate_for(&f.home_team, &f.away_team)?;
        samplers.push((f.home_team.clone(), f.away_team.clone(), model.sampler()));
    }

    let mut teams: BTreeMap<String, u32> = current_table.clone();
    for f in fixtures {
        teams.entry(f.home_team.clone()).or_insert(0);
        teams.entry(f.away_team.clone()).or_insert(0);
    }

    let mut simulated: BTreeMap<String, Vec<u32>> = teams
        .keys()
        .map(|t| (t.clone(), Vec::with_capacity(n_sims)))
        .collect();
    let mut points: BTreeMap<&str, u32> = BTreeMap::new();
    for rep in 0..n_sims {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(rep as u64);
        points.clear();
        for (team, &p) in &teams {
            points.insert(team.as_str(), p);
        }
        for (home, away, sampler) in &samplers {
            let (hg, ag) = sampler.sample(&mut rng);
            let (hp, ap) = match hg.cmp(&ag) {
                std::cmp::Ordering::Greater => (3, 0),
                std::cmp::Ordering::Equal => (1, 1),
                std::cmp::Ordering::Less => (0, 3),
            };
            *points.get_mut(home.as_str()).expect("seeded above") += hp;
            *points.get_mut(away.as_str()).expect("seeded above") += ap;
        }
        for (team, &p) in &points {
            simulated.get_mut(*team).expect("same key set").push(p);
        }
    }

    Ok(PointsDistribution {
        simulated,
        current_points: teams,
        n_sims,
    })
}

/// Nearest-rank empirical quantile (no interpolation).
fn nearest_rank(sorted: &[u32], q: f64) -> u32 {
    let n = sorted.len();
    let rank = (q * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

/// Per-team `(lo, hi)` prediction interval at the given level, e.g. 0.95 for
/// the 2.5% and 97.5% quantiles.
pub fn prediction_intervals(
    dist: &PointsDistribution,
    level: f64,
) -> Result<BTreeMap<String, (u32, u32)>> {
    if !(0.0..1.0).contains(&level) || level <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "interval level must be in (0, 1), got {level}"
        )));
    }
    let tail = (1.0 - level) / 2.0;
    let mut out = BTreeMap::new();
    for (team, sims) in &dist.simulated {
        let mut sorted = sims.clone();
        sorted.sort_unstable();
        out.insert(
            team.clone(),
            (nearest_rank(&sorted, tail), nearest_rank(&sorted, 1.0 - tail)),
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::{fit, FitConfig, ModelSpec, RegressionKind};
    use crate::regression::MatchRecord;

    fn toy_fit(mean_home: f64, mean_away: f64) -> FittedModel {
        // Fit a double-Poisson intercept model on data that pins the sample
        // means exactly (Poisson MLE = sample mean).
        let h = mean_home.round() as u32;
        let a = mean_away.round() as u32;
        let data: Vec<MatchRecord> = (0..40)
            .map(|i| {
                MatchRecord::new(
                    ["A", "B", "C", "D"][i % 4],
                    ["B", "C", "D", "A"][i % 4],
                    h,
                    a,
                    "2021-09-03",
                    "2021/22",
                )
                .unwrap()
            })
            .collect();
        let spec = ModelSpec::by_name("double Poisson", RegressionKind::InterceptOnly).unwrap();
        fit(&spec, &data, &FitConfig::default()).unwrap()
    }

    fn table(entries: &[(&str, u32)]) -> BTreeMap<String, u32> {
        entries.iter().map(|(t, p)| (t.to_string(), *p)).collect()
    }

    #[test]
    fn no_fixtures_returns_current_points() {
        let fitted = toy_fit(1.0, 1.0);
        let current = table(&[("A", 30), ("B", 12)]);
        let dist = simulate_season(&fitted, &current, &[], 50, 7).unwrap();
        for (team, sims) in &dist.simulated {
            assert!(sims.iter().all(|&p| p == current[team]));
        }
        let intervals = prediction_intervals(&dist, 0.95).unwrap();
        assert_eq!(intervals["A"], (30, 30));
        assert_eq!(intervals["B"], (12, 12));
    }

    #[test]
    fn lopsided_means_give_home_win() {
        let fitted = toy_fit(10.0, 0.0);
        let current = table(&[("A", 0), ("B", 0)]);
        let fixtures = vec![Fixture::new("A", "B", 1).unwrap()];
        let dist = simulate_season(&fitted, &current, &fixtures, 1000, 11).unwrap();
        let wins = dist.simulated["A"].iter().filter(|&&p| p == 3).count();
        assert!(wins > 990, "wins={wins}");
    }

    #[test]
    fn same_seed_reproduces_distribution() {
        let fitted = toy_fit(2.0, 1.0);
        let current = table(&[("A", 5), ("B", 3), ("C", 0)]);
        let fixtures = vec![
            Fixture::new("A", "B", 1).unwrap(),
            Fixture::new("B", "C", 1).unwrap(),
            Fixture::new("C", "A", 2).unwrap(),
        ];
        let d1 = simulate_season(&fitted, &current, &fixtures, 200, 9).unwrap();
        let d2 = simulate_season(&fitted, &current, &fixtures, 200, 9).unwrap();
        assert_eq!(d1.simulated, d2.simulated);
        let d3 = simulate_season(&fitted, &current, &fixtures, 200, 10).unwrap();
        assert_ne!(d1.simulated, d3.simulated);
    }

    #[test]
    fn points_conservation_per_replicate() {
        let fitted = toy_fit(2.0, 1.0);
        let current = table(&[("A", 4), ("B", 2), ("C", 7), ("D", 0)]);
        let fixtures = vec![
            Fixture::new("A", "B", 1).unwrap(),
            Fixture::new("C", "D", 1).unwrap(),
            Fixture::new("A", "C", 2).unwrap(),
        ];
        let dist = simulate_season(&fitted, &current, &fixtures, 300, 21).unwrap();
        let base: u32 = current.values().sum();
        for rep in 0..dist.n_sims {
            let total: u32 = dist.simulated.values().map(|v| v[rep]).sum();
            let gained = total - base;
            // Each match adds 3 (decisive) or 2 (draw) points.
            assert!(
                (2 * fixtures.len() as u32..=3 * fixtures.len() as u32).contains(&gained),
                "rep {rep}: gained {gained}"
            );
        }
    }

    #[test]
    fn final_points_never_below_current() {
        let fitted = toy_fit(1.0, 1.0);
        let current = table(&[("A", 9), ("B", 9)]);
        let fixtures = vec![Fixture::new("A", "B", 1).unwrap()];
        let dist = simulate_season(&fitted, &current, &fixtures, 500, 2).unwrap();
        for (team, sims) in &dist.simulated {
            assert!(sims.iter().all(|&p| p >= current[team]));
        }
    }

    #[test]
    fn unknown_fixture_team_errors() {
        let fitted = toy_fit(1.0, 1.0);
        let fixtures = vec![Fixture::new("A", "Nowhere FC", 1).unwrap()];
        let err = simulate_season(&fitted, &BTreeMap::new(), &fixtures, 10, 1);
        assert!(matches!(err, Err(crate::Error::UnknownTeam(_))));
    }

    #[test]
    fn zero_sims_rejected() {
        let fitted = toy_fit(1.0, 1.0);
        let err = simulate_season(&fitted, &BTreeMap::new(), &[], 0, 1);
        assert!(matches!(err, Err(crate::Error::InvalidParameter(_))));
    }

    #[test]
    fn nearest_rank_quantiles() {
        let sorted: Vec<u32> = (1..=100).collect();
        assert_eq!(nearest_rank(&sorted, 0.025), 3);
        assert_eq!(nearest_rank(&sorted, 0.975), 98);
        assert_eq!(nearest_rank(&sorted, 0.5), 50);
        assert_eq!(nearest_rank(&sorted, 1.0), 100);
        assert_eq!(nearest_rank(&[7], 0.025), 7);
    }

    #[test]
    fn interval_bounds_ordered_and_cover_median_mass() {
        let fitted = toy_fit(2.0, 2.0);
        let current = table(&[("A", 10), ("B", 10)]);
        let fixtures: Vec<Fixture> = (1..=6)
            .map(|d| Fixture::new(if d % 2 == 0 { "A" } else { "B" }, if d % 2 == 0 { "B" } else { "A" }, d).unwrap())
            .collect();
        let dist = simulate_season(&fitted, &current, &fixtures, 1000, 33).unwrap();
        let iv = prediction_intervals(&dist, 0.95).unwrap();
        for (team, (lo, hi)) in &iv {
            assert!(lo <= hi);
            assert!(*lo >= current[team]);
            let inside = dist.simulated[team]
                .iter()
                .filter(|&&p| p >= *lo && p <= *hi)
                .count();
            assert!(inside as f64 >= 0.95 * dist.n_sims as f64 - 1.0);
        }
    }
}
