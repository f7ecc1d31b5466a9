//! Match-data ingestion, fixture lists, and fitted-model persistence.
//!
//! Model files are flat key-value text documents with section headers, always
//! versioned, with floats written to 17 significant digits so they re-parse
//! bitwise-equal.

use crate::estimation::{FittedModel, ModelSpec, RegressionKind};
use crate::marginals::Family;
use crate::qcatalog::QKind;
use crate::regression::{MatchRecord, RegressionParams, TeamIndexMap};
use crate::season_sim::Fixture;
use crate::{Error, Result};
use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::Path;

pub const MATCH_HEADER: &str = "date,season,home_team,away_team,home_goals,away_goals";
pub const FIXTURE_HEADER: &str = "matchday,home_team,away_team";
pub const FIT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub struct Dataset {
    pub matches: Vec<MatchRecord>,
    pub league: String,
    pub seasons: BTreeSet<String>,
}

fn validation(line: usize, msg: impl Into<String>) -> Error {
    Error::Validation {
        line,
        msg: msg.into(),
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_goals(field: &str, line: usize, column: &str) -> Result<u32> {
    // Parse through i64 first so negatives get a validation error rather
    // than an opaque integer-parse failure.
    let v: i64 = field
        .trim()
        .parse()
        .map_err(|_| parse_err(line, format!("{column} is not an integer: {field:?}")))?;
    if v < 0 {
        return Err(validation(line, format!("{column} is negative: {v}")));
    }
    u32::try_from(v).map_err(|_| validation(line, format!("{column} out of range: {v}")))
}

/// Load a match CSV. Line numbers in errors are 1-based file lines (the
/// header is line 1). Duplicate rows are kept with a warning.
pub fn load_matches(path: &Path) -> Result<Dataset> {
    let raw = fs::read_to_string(path)?;
    let mut lines = raw.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "file is empty".to_string()))?;
    if header.trim() != MATCH_HEADER {
        return Err(parse_err(
            1,
            format!("expected header {MATCH_HEADER:?}, got {header:?}"),
        ));
    }
    let mut matches = Vec::new();
    let mut seasons = BTreeSet::new();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(parse_err(
                lineno,
                format!("expected 6 fields, got {}", fields.len()),
            ));
        }
        let hg = parse_goals(fields[4], lineno, "home_goals")?;
        let ag = parse_goals(fields[5], lineno, "away_goals")?;
        let rec = MatchRecord::new(
            fields[2].trim(),
            fields[3].trim(),
            hg,
            ag,
            fields[0].trim(),
            fields[1].trim(),
        )
        .map_err(|e| validation(lineno, e.to_string()))?;
        if !seen.insert(line.trim().to_string()) {
            eprintln!("warning: duplicate row at line {lineno}: {line}");
        }
        seasons.insert(rec.season.clone());
        matches.push(rec);
    }
    if matches.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let league = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(Dataset {
        matches,
        league,
        seasons,
    })
}

fn atomic_write(path: &Path, content: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = tempfile::NamedTempFile::new_in(dir.unwrap_or_else(|| Path::new(".")))?;
    tmp.write_all(content.as_bytes())?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Write matches back out; `load_matches` of the result reproduces the record
/// sequence exactly.
pub fn save_matches(matches: &[MatchRecord], path: &Path) -> Result<()> {
    let mut out = String::from(MATCH_HEADER);
    out.push('\n');
    for m in matches {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            m.date, m.season, m.home_team, m.away_team, m.home_goals, m.away_goals
        ));
    }
    atomic_write(path, &out)
}

/// Load a fixture CSV with header `matchday,home_team,away_team`.
pub fn load_fixtures(path: &Path) -> Result<Vec<Fixture>> {
    let raw = fs::read_to_string(path)?;
    let mut lines = raw.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "file is empty".to_string()))?;
    if header.trim() != FIXTURE_HEADER {
        return Err(parse_err(
            1,
            format!("expected header {FIXTURE_HEADER:?}, got {header:?}"),
        ));
    }
    let mut fixtures = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(parse_err(
                lineno,
                format!("expected 3 fields, got {}", fields.len()),
            ));
        }
        let matchday: u32 = fields[0]
            .trim()
            .parse()
            .map_err(|_| parse_err(lineno, format!("matchday is not an integer: {:?}", fields[0])))?;
        let fx = Fixture::new(fields[1].trim(), fields[2].trim(), matchday)
            .map_err(|e| validation(lineno, e.to_string()))?;
        fixtures.push(fx);
    }
    Ok(fixtures)
}

/// Load a league table CSV with header `team,points`.
pub fn load_table(path: &Path) -> Result<std::collections::BTreeMap<String, u32>> {
    let raw = fs::read_to_string(path)?;
    let mut lines = raw.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "file is empty".to_string()))?;
    if header.trim() != "team,points" {
        return Err(parse_err(
            1,
            format!("expected header \"team,points\", got {header:?}"),
        ));
    }
    let mut table = std::collections::BTreeMap::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (team, points) = line
            .rsplit_once(',')
            .ok_or_else(|| parse_err(lineno, "expected 2 fields"))?;
        let points: u32 = points
            .trim()
            .parse()
            .map_err(|_| parse_err(lineno, format!("points is not an integer: {points:?}")))?;
        table.insert(team.trim().to_string(), points);
    }
    Ok(table)
}

/// 17 significant digits: enough to round-trip any f64 exactly.
fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn regression_name(kind: RegressionKind) -> &'static str {
    match kind {
        RegressionKind::InterceptOnly => "intercept_only",
        RegressionKind::TeamEffects => "team_effects",
    }
}

/// Persist a fitted model as a versioned plain-text document.
pub fn save_fit(fitted: &FittedModel, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!("bivisar-fit v{FIT_FORMAT_VERSION}\n\n"));
    out.push_str("[model]\n");
    out.push_str(&format!("name = {}\n", fitted.spec.name()));
    out.push_str(&format!("family_home = {}\n", fitted.spec.family_home.name()));
    out.push_str(&format!("family_away = {}\n", fitted.spec.family_away.name()));
    match &fitted.spec.q_kinds {
        Some((k1, k2)) => {
            out.push_str(&format!("q_home = {}\n", k1.name()));
            out.push_str(&format!("q_away = {}\n", k2.name()));
        }
        None => {
            out.push_str("q_home = none\n");
            out.push_str("q_away = none\n");
        }
    }
    out.push_str(&format!(
        "regression = {}\n",
        regression_name(fitted.spec.regression)
    ));
    out.push_str("\n[teams]\n");
    for (i, team) in fitted.team_map.teams().iter().enumerate() {
        out.push_str(&format!("{i} = {team}\n"));
    }
    out.push_str("\n[params]\n");
    let packed = fitted.params.pack();
    out.push_str(&format!(
        "values = {}\n",
        packed
            .iter()
            .map(|v| fmt_f64(*v))
            .collect::<Vec<_>>()
            .join(",")
    ));
    if let Some((lo, hi)) = fitted.omega_bracket {
        out.push_str(&format!("omega_bracket = {},{}\n", fmt_f64(lo), fmt_f64(hi)));
    }
    out.push_str("\n[meta]\n");
    out.push_str(&format!("loglik = {}\n", fmt_f64(fitted.loglik)));
    out.push_str(&format!("aic = {}\n", fmt_f64(fitted.aic)));
    out.push_str(&format!("n_params = {}\n", fitted.n_params));
    out.push_str(&format!("converged = {}\n", fitted.converged));
    out.push_str(&format!("n_obs = {}\n", fitted.n_obs));
    out.push_str(&format!("seed = {}\n", fitted.seed));
    out.push_str(&format!("data_fingerprint = {}\n", fitted.data_fingerprint));
    atomic_write(path, &out)
}

struct FitDoc {
    kv: Vec<(String, String, String)>, // (section, key, value)
}

impl FitDoc {
    fn get(&self, section: &str, key: &str) -> Result<&str> {
        self.kv
            .iter()
            .find(|(s, k, _)| s == section && k == key)
            .map(|(_, _, v)| v.as_str())
            .ok_or_else(|| Error::ModelFile(format!("missing key {key:?} in [{section}]")))
    }

    fn section_pairs(&self, section: &str) -> Vec<(&str, &str)> {
        self.kv
            .iter()
            .filter(|(s, _, _)| s == section)
            .map(|(_, k, v)| (k.as_str(), v.as_str()))
            .collect()
    }

    fn has_section(&self, section: &str) -> bool {
        self.kv.iter().any(|(s, _, _)| s == section)
    }
}

fn parse_family(name: &str) -> Result<Family> {
    match name {
        "poisson" => Ok(Family::Poisson),
        "negbin" => Ok(Family::NegBin),
        other => Err(Error::ModelFile(format!("unknown family {other:?}"))),
    }
}

/// Load a fitted model persisted by [`save_fit`].
pub fn load_fit(path: &Path) -> Result<FittedModel> {
    let raw = fs::read_to_string(path)?;
    let mut lines = raw.lines();
    let magic = lines
        .next()
        .ok_or_else(|| Error::ModelFile("file is empty".into()))?
        .trim();
    let Some(version) = magic.strip_prefix("bivisar-fit v") else {
        return Err(Error::ModelFile(format!(
            "missing \"bivisar-fit v<N>\" magic line, got {magic:?}"
        )));
    };
    if version.parse::<u32>().ok() != Some(FIT_FORMAT_VERSION) {
        return Err(Error::VersionMismatch {
            found: version.to_string(),
            supported: FIT_FORMAT_VERSION,
        });
    }

    let mut doc = FitDoc { kv: Vec::new() };
    let mut section = String::new();
    for line in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = name.to_string();
            // Record section presence even when empty.
            doc.kv.push((section.clone(), String::new(), String::new()));
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::ModelFile(format!("expected \"key = value\", got {line:?}")))?;
        doc.kv
            .push((section.clone(), k.trim().to_string(), v.trim().to_string()));
    }

    let family_home = parse_family(doc.get("model", "family_home")?)?;
    let family_away = parse_family(doc.get("model", "family_away")?)?;
    let q_home = doc.get("model", "q_home")?;
    let q_away = doc.get("model", "q_away")?;
    let q_kinds = match (q_home, q_away) {
        ("none", "none") => None,
        (h, a) => Some((QKind::parse(h)?, QKind::parse(a)?)),
    };
    let regression = match doc.get("model", "regression")? {
        "intercept_only" => RegressionKind::InterceptOnly,
        "team_effects" => RegressionKind::TeamEffects,
        other => return Err(Error::ModelFile(format!("unknown regression {other:?}"))),
    };
    let spec = ModelSpec {
        family_home,
        family_away,
        q_kinds,
        regression,
    };

    if !doc.has_section("teams") {
        return Err(Error::ModelFile("missing [teams] section".into()));
    }
    let mut team_pairs: Vec<(usize, String)> = doc
        .section_pairs("teams")
        .into_iter()
        .filter(|(k, _)| !k.is_empty())
        .map(|(k, v)| {
            k.parse::<usize>()
                .map(|i| (i, v.to_string()))
                .map_err(|_| Error::ModelFile(format!("bad team index {k:?}")))
        })
        .collect::<Result<_>>()?;
    team_pairs.sort();
    let teams: Vec<String> = team_pairs.into_iter().map(|(_, t)| t).collect();
    if teams.is_empty() {
        return Err(Error::ModelFile("team map is empty".into()));
    }
    let team_map = TeamIndexMap::from_teams(teams);

    let parse_floats = |s: &str| -> Result<Vec<f64>> {
        s.split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::ModelFile(format!("bad float {v:?}")))
            })
            .collect()
    };
    let packed = parse_floats(doc.get("params", "values")?)?;
    let layout = spec.layout(team_map.len());
    let params = RegressionParams::unpack(&packed, layout)
        .map_err(|e| Error::ModelFile(e.to_string()))?;
    let omega_bracket = if layout.has_omega {
        let vals = parse_floats(doc.get("params", "omega_bracket")?)?;
        if vals.len() != 2 {
            return Err(Error::ModelFile("omega_bracket needs two values".into()));
        }
        Some((vals[0], vals[1]))
    } else {
        None
    };

    let get_parsed = |key: &str| -> Result<f64> {
        doc.get("meta", key)?
            .parse::<f64>()
            .map_err(|_| Error::ModelFile(format!("bad numeric value for {key:?}")))
    };
    Ok(FittedModel {
        spec,
        team_map,
        params,
        omega_bracket,
        loglik: get_parsed("loglik")?,
        aic: get_parsed("aic")?,
        n_params: get_parsed("n_params")? as usize,
        converged: doc.get("meta", "converged")? == "true",
        n_obs: get_parsed("n_obs")? as usize,
        seed: get_parsed("seed")? as u64,
        data_fingerprint: doc
            .get("meta", "data_fingerprint")?
            .parse::<u64>()
            .map_err(|_| Error::ModelFile("bad data_fingerprint".into()))?,
    })
}
