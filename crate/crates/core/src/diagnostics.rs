//! Data and fit diagnostics: independence ratio tables with bootstrap
//! standard errors, a chi-squared independence test, empirical correlations,
//! overdispersion summaries with Monte Carlo envelopes, and an absolute
//! probability-difference fit metric.

use crate::estimation::FittedModel;
use crate::regression::MatchRecord;
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Joint score frequencies divided by the product of the marginal
/// frequencies. Cells whose marginals never occur are `None`.
#[derive(Debug, Clone)]
pub struct RatioTable {
    pub max_score: u32,
    pub ratio: Vec<Vec<Option<f64>>>,
    pub se: Vec<Vec<Option<f64>>>,
    pub n: usize,
}

fn ratio_cells(data: &[MatchRecord], max_score: u32) -> Vec<Vec<Option<f64>>> {
    let k = max_score as usize + 1;
    let n = data.len() as f64;
    let mut joint = vec![vec![0.0f64; k]; k];
    let mut row = vec![0.0f64; k];
    let mut col = vec![0.0f64; k];
    for m in data {
        if (m.home_goals as usize) < k {
            row[m.home_goals as usize] += 1.0;
        }
        if (m.away_goals as usize) < k {
            col[m.away_goals as usize] += 1.0;
        }
        if (m.home_goals as usize) < k && (m.away_goals as usize) < k {
            joint[m.home_goals as usize][m.away_goals as usize] += 1.0;
        }
    }
    (0..k)
        .map(|a| {
            (0..k)
                .map(|b| {
                    if row[a] * col[b] == 0.0 {
                        None
                    } else {
                        Some((joint[a][b] / n) / ((row[a] / n) * (col[b] / n)))
                    }
                })
                .collect()
        })
        .collect()
}

/// Observed/expected-under-independence ratio per scoreline, with bootstrap
/// standard errors over `bootstrap_b` match resamples.
pub fn ratio_table(
    data: &[MatchRecord],
    max_score: u32,
    bootstrap_b: usize,
    seed: u64,
) -> Result<RatioTable> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if max_score < 1 {
        return Err(Error::InvalidParameter("max_score must be >= 1".into()));
    }
    let k = max_score as usize + 1;
    let ratio = ratio_cells(data, max_score);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sums = vec![vec![0.0f64; k]; k];
    let mut sq_sums = vec![vec![0.0f64; k]; k];
    let mut counts = vec![vec![0usize; k]; k];
    let mut resample = Vec::with_capacity(data.len());
    for _ in 0..bootstrap_b {
        resample.clear();
        for _ in 0..data.len() {
            resample.push(data[rng.random_range(0..data.len())].clone());
        }
        let cells = ratio_cells(&resample, max_score);
        for a in 0..k {
            for b in 0..k {
                if let Some(v) = cells[a][b] {
                    sums[a][b] += v;
                    sq_sums[a][b] += v * v;
                    counts[a][b] += 1;
                }
            }
        }
    }
    let se = (0..k)
        .map(|a| {
            (0..k)
                .map(|b| {
                    if ratio[a][b].is_none() || counts[a][b] == 0 {
                        None
                    } else {
                        let c = counts[a][b] as f64;
                        let mean = sums[a][b] / c;
                        Some((sq_sums[a][b] / c - mean * mean).max(0.0).sqrt())
                    }
                })
                .collect()
        })
        .collect();
    Ok(RatioTable {
        max_score,
        ratio,
        se,
        n: data.len(),
    })
}

/// Pearson chi-squared test of independence between home and away goals.
/// Scores at or above `max_score` are pooled into one overflow bucket per
/// margin; empty rows and columns are dropped before computing the statistic.
pub fn chi_square_independence(
    data: &[MatchRecord],
    max_score: u32,
) -> Result<(f64, usize, f64)> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let k = max_score as usize + 1;
    let mut table = vec![vec![0.0f64; k]; k];
    for m in data {
        let a = (m.home_goals as usize).min(k - 1);
        let b = (m.away_goals as usize).min(k - 1);
        table[a][b] += 1.0;
    }
    let row_keep: Vec<usize> = (0..k)
        .filter(|&a| table[a].iter().sum::<f64>() > 0.0)
        .collect();
    let col_keep: Vec<usize> = (0..k)
        .filter(|&b| (0..k).map(|a| table[a][b]).sum::<f64>() > 0.0)
        .collect();
    if row_keep.len() < 2 || col_keep.len() < 2 {
        return Err(Error::Degenerate(
            "contingency table collapses to a single row or column".into(),
        ));
    }
    let n = data.len() as f64;
    let mut stat = 0.0;
    for &a in &row_keep {
        let ra: f64 = table[a].iter().sum();
        for &b in &col_keep {
            let cb: f64 = (0..k).map(|i| table[i][b]).sum();
            let e = ra * cb / n;
            if e > 0.0 {
                stat += (table[a][b] - e).powi(2) / e;
            }
        }
    }
    let dof = (row_keep.len() - 1) * (col_keep.len() - 1);
    let dist = ChiSquared::new(dof as f64).expect("dof >= 1");
    let p = 1.0 - dist.cdf(stat);
    Ok((stat, dof, p))
}

pub const ABS_DIFF_GRID_MAX: u32 = 11;

/// `100 * sum |model - empirical|` over all scorelines 0-0 through 11-11,
/// with the model grid given directly.
pub fn abs_prob_diff_from_grid(model_grid: &[Vec<f64>], data: &[MatchRecord]) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let k = ABS_DIFF_GRID_MAX as usize + 1;
    if model_grid.len() != k || model_grid.iter().any(|r| r.len() != k) {
        return Err(Error::InvalidParameter(format!(
            "model grid must be {k}x{k}"
        )));
    }
    let n = data.len() as f64;
    let mut emp = vec![vec![0.0f64; k]; k];
    for m in data {
        if (m.home_goals as usize) < k && (m.away_goals as usize) < k {
            emp[m.home_goals as usize][m.away_goals as usize] += 1.0 / n;
        }
    }
    let mut total = 0.0;
    for a in 0..k {
        for b in 0..k {
            total += (model_grid[a][b] - emp[a][b]).abs();
        }
    }
    Ok(100.0 * total)
}

/// Fit metric: the model grid is the dataset average of per-match joint pmf
/// grids, so team-effects models are compared on the matches they saw.
pub fn abs_prob_diff(fitted: &FittedModel, data: &[MatchRecord]) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let k = ABS_DIFF_GRID_MAX as usize + 1;
    let n = data.len() as f64;
    let mut grid = vec![vec![0.0f64; k]; k];
    for m in data {
        let model = fitted.bivariate_for(&m.home_team, &m.away_team)?;
        let sm = model.score_matrix(ABS_DIFF_GRID_MAX)?;
        for a in 0..k {
            for b in 0..k {
                grid[a][b] += sm.probs[a][b] / n;
            }
        }
    }
    abs_prob_diff_from_grid(&grid, data)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Venue {
    Home,
    Away,
}

impl std::fmt::Display for Venue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Venue::Home => "home",
            Venue::Away => "away",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DispersionFlag {
    Under,
    Within,
    Over,
}

impl std::fmt::Display for DispersionFlag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DispersionFlag::Under => "under",
            DispersionFlag::Within => "within",
            DispersionFlag::Over => "over",
        })
    }
}

#[derive(Debug, Clone)]
pub struct MeanVarRow {
    pub team: String,
    pub venue: Venue,
    pub mean: f64,
    pub variance: f64,
    pub n: usize,
    /// 95% Monte Carlo envelope for the sample variance of `median_n`
    /// Poisson draws at this row's mean.
    pub envelope: (f64, f64),
    pub flag: DispersionFlag,
}

const ENVELOPE_REPS: usize = 10_000;

fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

fn poisson_variance_envelope(mean: f64, n: usize, rng: &mut ChaCha8Rng) -> (f64, f64) {
    if mean <= 0.0 {
        return (0.0, 0.0);
    }
    let dist = Poisson::new(mean).expect("mean > 0");
    let mut vars: Vec<f64> = (0..ENVELOPE_REPS)
        .map(|_| {
            let draws: Vec<f64> = (0..n).map(|_| dist.sample(rng)).collect();
            sample_variance(&draws)
        })
        .collect();
    vars.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let lo = vars[((0.025 * ENVELOPE_REPS as f64).ceil() as usize).clamp(1, ENVELOPE_REPS) - 1];
    let hi = vars[((0.975 * ENVELOPE_REPS as f64).ceil() as usize).clamp(1, ENVELOPE_REPS) - 1];
    (lo, hi)
}

/// Per (team, venue) goal mean and variance, flagged against a simulated
/// equidispersion envelope. Rows with fewer than two matches are skipped
/// with a warning on stderr.
pub fn mean_variance_summary(data: &[MatchRecord], seed: u64) -> Result<Vec<MeanVarRow>> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut groups: std::collections::BTreeMap<(String, bool), Vec<f64>> =
        std::collections::BTreeMap::new();
    for m in data {
        groups
            .entry((m.home_team.clone(), true))
            .or_default()
            .push(f64::from(m.home_goals));
        groups
            .entry((m.away_team.clone(), false))
            .or_default()
            .push(f64::from(m.away_goals));
    }
    let mut sizes: Vec<usize> = groups.values().map(|v| v.len()).collect();
    sizes.sort_unstable();
    let median_n = sizes[sizes.len() / 2].max(2);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    for ((team, is_home), goals) in groups {
        let venue = if is_home { Venue::Home } else { Venue::Away };
        if goals.len() < 2 {
            eprintln!("warning: skipping ({team}, {venue}) with only {} match(es)", goals.len());
            continue;
        }
        let mean = goals.iter().sum::<f64>() / goals.len() as f64;
        let variance = sample_variance(&goals);
        let envelope = poisson_variance_envelope(mean, median_n, &mut rng);
        let flag = if variance > envelope.1 {
            DispersionFlag::Over
        } else if variance < envelope.0 {
            DispersionFlag::Under
        } else {
            DispersionFlag::Within
        };
        rows.push(MeanVarRow {
            team,
            venue,
            mean,
            variance,
            n: goals.len(),
            envelope,
            flag,
        });
    }
    Ok(rows)
}

fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Pearson correlation of (home goals, away goals) per season, in season
/// order. Seasons with degenerate margins are reported as `None`.
pub fn seasonal_correlation(data: &[MatchRecord]) -> Vec<(String, Option<f64>)> {
    let mut by_season: std::collections::BTreeMap<String, (Vec<f64>, Vec<f64>)> =
        std::collections::BTreeMap::new();
    for m in data {
        let entry = by_season.entry(m.season.clone()).or_default();
        entry.0.push(f64::from(m.home_goals));
        entry.1.push(f64::from(m.away_goals));
    }
    by_season
        .into_iter()
        .map(|(season, (xs, ys))| {
            let r = pearson(&xs, &ys);
            (season, r)
        })
        .collect()
}

/// Pearson correlation over the whole dataset.
pub fn empirical_correlation(data: &[MatchRecord]) -> Option<f64> {
    let xs: Vec<f64> = data.iter().map(|m| f64::from(m.home_goals)).collect();
    let ys: Vec<f64> = data.iter().map(|m| f64::from(m.away_goals)).collect();
    pearson(&xs, &ys)
}
