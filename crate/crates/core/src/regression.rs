//! Log-linear predictors mapping match covariates (home indicator, team
//! attack/defence strengths) to per-match marginal means, with the sum-to-zero
//! defence constraint and parameter-vector packing.

use crate::{Error, Result};
use std::collections::BTreeSet;

/// One observed match.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchRecord {
    pub home_team: String,
    pub away_team: String,
    pub home_goals: u32,
    pub away_goals: u32,
    /// ISO-8601 date.
    pub date: String,
    pub season: String,
}

impl MatchRecord {
    pub fn new(
        home_team: impl Into<String>,
        away_team: impl Into<String>,
        home_goals: u32,
        away_goals: u32,
        date: impl Into<String>,
        season: impl Into<String>,
    ) -> Result<Self> {
        let home_team = home_team.into();
        let away_team = away_team.into();
        if home_team == away_team {
            return Err(Error::InvalidParameter(format!(
                "a team cannot play itself: {home_team}"
            )));
        }
        Ok(MatchRecord {
            home_team,
            away_team,
            home_goals,
            away_goals,
            date: date.into(),
            season: season.into(),
        })
    }
}

/// Stable (lexicographic) team ordering so parameter vectors are
/// reproducible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TeamIndexMap {
    teams: Vec<String>,
}

impl TeamIndexMap {
    pub fn from_teams<I: IntoIterator<Item = String>>(teams: I) -> Self {
        let set: BTreeSet<String> = teams.into_iter().collect();
        TeamIndexMap {
            teams: set.into_iter().collect(),
        }
    }

    pub fn from_matches(matches: &[MatchRecord]) -> Self {
        Self::from_teams(
            matches
                .iter()
                .flat_map(|m| [m.home_team.clone(), m.away_team.clone()]),
        )
    }

    pub fn index(&self, team: &str) -> Result<usize> {
        self.teams
            .binary_search_by(|t| t.as_str().cmp(team))
            .map_err(|_| Error::UnknownTeam(team.to_string()))
    }

    pub fn len(&self) -> usize {
        self.teams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.teams.is_empty()
    }

    pub fn teams(&self) -> &[String] {
        &self.teams
    }
}

/// Packed-vector layout for a model family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamLayout {
    /// Number of teams; 0 for intercept-only models.
    pub k_teams: usize,
    /// Whether the home (resp. away) margin carries a dispersion parameter.
    pub nb_home: bool,
    pub nb_away: bool,
    /// Whether the model carries a dependence parameter.
    pub has_omega: bool,
}

impl ParamLayout {
    pub fn len(&self) -> usize {
        let core = if self.k_teams == 0 {
            2 // log-mean per side
        } else {
            1 + self.k_teams + (self.k_teams - 1) // home + att + free defences
        };
        core + usize::from(self.nb_home) + usize::from(self.nb_away) + usize::from(self.has_omega)
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Regression parameters on the packed (unconstrained) scale: dispersions are
/// stored as log-phi and the dependence parameter as the raw sigmoid input,
/// so pack/unpack round-trips are exact.
#[derive(Debug, Clone, PartialEq)]
pub enum RegressionParams {
    InterceptOnly {
        log_mean_home: f64,
        log_mean_away: f64,
        log_phi_home: Option<f64>,
        log_phi_away: Option<f64>,
        omega_raw: Option<f64>,
    },
    TeamEffects {
        home: f64,
        att: Vec<f64>,
        /// K-1 free defence parameters; the last defence is minus their sum.
        def_free: Vec<f64>,
        log_phi_home: Option<f64>,
        log_phi_away: Option<f64>,
        omega_raw: Option<f64>,
    },
}

impl RegressionParams {
    pub fn layout(&self) -> ParamLayout {
        match self {
            RegressionParams::InterceptOnly {
                log_phi_home,
                log_phi_away,
                omega_raw,
                ..
            } => ParamLayout {
                k_teams: 0,
                nb_home: log_phi_home.is_some(),
                nb_away: log_phi_away.is_some(),
                has_omega: omega_raw.is_some(),
            },
            RegressionParams::TeamEffects {
                att,
                log_phi_home,
                log_phi_away,
                omega_raw,
                ..
            } => ParamLayout {
                k_teams: att.len(),
                nb_home: log_phi_home.is_some(),
                nb_away: log_phi_away.is_some(),
                has_omega: omega_raw.is_some(),
            },
        }
    }

    /// Defence parameter of team k, reconstructing the K-th from the
    /// sum-to-zero constraint.
    pub fn defence(&self, k: usize) -> f64 {
        match self {
            RegressionParams::InterceptOnly { .. } => 0.0,
            RegressionParams::TeamEffects { def_free, .. } => {
                if k < def_free.len() {
                    def_free[k]
                } else {
                    -def_free.iter().sum::<f64>()
                }
            }
        }
    }

    /// `(theta1, theta2)` for a (home index, away index) pairing:
    /// `log theta1 = home + att_h + def_g`, `log theta2 = att_g + def_h`.
    pub fn predict_means(&self, home_idx: usize, away_idx: usize) -> (f64, f64) {
        match self {
            RegressionParams::InterceptOnly {
                log_mean_home,
                log_mean_away,
                ..
            } => (log_mean_home.exp(), log_mean_away.exp()),
            RegressionParams::TeamEffects { home, att, .. } => {
                let theta1 = (home + att[home_idx] + self.defence(away_idx)).exp();
                let theta2 = (att[away_idx] + self.defence(home_idx)).exp();
                (theta1, theta2)
            }
        }
    }

    pub fn phi_home(&self) -> Option<f64> {
        match self {
            RegressionParams::InterceptOnly { log_phi_home, .. }
            | RegressionParams::TeamEffects { log_phi_home, .. } => log_phi_home.map(f64::exp),
        }
    }

    pub fn phi_away(&self) -> Option<f64> {
        match self {
            RegressionParams::InterceptOnly { log_phi_away, .. }
            | RegressionParams::TeamEffects { log_phi_away, .. } => log_phi_away.map(f64::exp),
        }
    }

    pub fn omega_raw(&self) -> Option<f64> {
        match self {
            RegressionParams::InterceptOnly { omega_raw, .. }
            | RegressionParams::TeamEffects { omega_raw, .. } => *omega_raw,
        }
    }

    pub fn pack(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.layout().len());
        match self {
            RegressionParams::InterceptOnly {
                log_mean_home,
                log_mean_away,
                log_phi_home,
                log_phi_away,
                omega_raw,
            } => {
                v.push(*log_mean_home);
                v.push(*log_mean_away);
                v.extend(log_phi_home.iter());
                v.extend(log_phi_away.iter());
                v.extend(omega_raw.iter());
            }
            RegressionParams::TeamEffects {
                home,
                att,
                def_free,
                log_phi_home,
                log_phi_away,
                omega_raw,
            } => {
                v.push(*home);
                v.extend_from_slice(att);
                v.extend_from_slice(def_free);
                v.extend(log_phi_home.iter());
                v.extend(log_phi_away.iter());
                v.extend(omega_raw.iter());
            }
        }
        v
    }

    pub fn unpack(v: &[f64], layout: ParamLayout) -> Result<Self> {
        if v.len() != layout.len() {
            return Err(Error::Layout {
                expected: layout.len(),
                got: v.len(),
            });
        }
        let mut it = v.iter().copied();
        let mut take = |n: usize| -> Vec<f64> { it.by_ref().take(n).collect() };
        if layout.k_teams == 0 {
            let head = take(2);
            Ok(RegressionParams::InterceptOnly {
                log_mean_home: head[0],
                log_mean_away: head[1],
                log_phi_home: layout.nb_home.then(|| take(1)[0]),
                log_phi_away: layout.nb_away.then(|| take(1)[0]),
                omega_raw: layout.has_omega.then(|| take(1)[0]),
            })
        } else {
            let home = take(1)[0];
            let att = take(layout.k_teams);
            let def_free = take(layout.k_teams - 1);
            Ok(RegressionParams::TeamEffects {
                home,
                att,
                def_free,
                log_phi_home: layout.nb_home.then(|| take(1)[0]),
                log_phi_away: layout.nb_away.then(|| take(1)[0]),
                omega_raw: layout.has_omega.then(|| take(1)[0]),
            })
        }
    }
}
