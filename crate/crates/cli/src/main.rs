//! `bivisar`: fit, compare, and diagnose bivariate score models, inspect
//! score matrices and correlation ranges, and simulate season run-ins.
//!
//! Exit codes: 0 success, 1 validation/data error, 2 usage error.

use bivisar::bivariate::{correlation_range, default_mean_grid, DEFAULT_PHI_GRID};
use bivisar::data_io;
use bivisar::diagnostics;
use bivisar::estimation::{compare, fit, FitConfig, ModelSpec, RegressionKind};
use bivisar::marginals::MarginalSpec;
use bivisar::qcatalog::{QFunctionSpec, QKind};
use bivisar::season_sim::{prediction_intervals, simulate_season};
use bivisar::{Family, DEFAULT_SEED};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

const Q_KINDS_HELP: &str = "q kinds: dc, hat, hat_s:<s>, tilde, general_s:<s>, one_p (q_nb), \
two_p, three_p, laplace (q_sar), ans, repaired(<kind>), plus aliases tilde_nb, q_hat_nb";

fn models_help() -> String {
    format!(
        "models: {}\n{}",
        ModelSpec::valid_names().join("; "),
        Q_KINDS_HELP
    )
}

#[derive(Parser)]
#[command(name = "bivisar", version, about = "Bivariate Sarmanov score models", after_help = models_help())]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Txt,
}

#[derive(Clone, Copy, ValueEnum)]
enum Regression {
    Intercept,
    Teams,
}

impl From<Regression> for RegressionKind {
    fn from(r: Regression) -> Self {
        match r {
            Regression::Intercept => RegressionKind::InterceptOnly,
            Regression::Teams => RegressionKind::TeamEffects,
        }
    }
}

#[derive(Args)]
struct OutputArgs {
    /// Output file; stdout if omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv: full precision; txt: human table, 2 decimals
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one model and write a fit document
    Fit {
        #[arg(long)]
        data: PathBuf,
        /// Model name or alias (see --help footer)
        #[arg(long)]
        model: String,
        #[arg(long, value_enum, default_value = "teams")]
        regression: Regression,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit several models on one dataset and rank them by AIC
    Compare {
        #[arg(long)]
        data: PathBuf,
        /// "all" or a comma-separated list of model names/aliases
        #[arg(long, default_value = "all")]
        models: String,
        #[arg(long, value_enum, default_value = "teams")]
        regression: Regression,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Dependence and overdispersion diagnostics for a match dataset
    Diagnose {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 6)]
        max_goals: u32,
        #[arg(long = "bootstrap-B", default_value_t = 1000)]
        bootstrap_b: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Score-probability matrix for one pairing under a fitted model
    Scores {
        #[arg(long)]
        fit: PathBuf,
        #[arg(long)]
        home: String,
        #[arg(long)]
        away: String,
        #[arg(long, default_value_t = 10)]
        max_goals: u32,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Monte Carlo final-points prediction intervals for remaining fixtures
    Simulate {
        #[arg(long)]
        fit: PathBuf,
        #[arg(long)]
        fixtures: PathBuf,
        /// Current league table CSV (team,points); all zeros if omitted
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Check the zero-mean condition for a q-function/marginal pairing
    ValidateQ {
        /// q kind (see --help footer)
        #[arg(long)]
        q: String,
        /// "poisson:<lambda>" or "negbin:<mu>,<phi>"
        #[arg(long)]
        marginal: String,
    },
    /// Attainable correlation range over a parameter grid
    CorrRange {
        #[arg(long, default_value = "poisson")]
        family: String,
        #[arg(long)]
        q: String,
        #[command(flatten)]
        output: OutputArgs,
    },
}

fn parse_marginal(s: &str) -> Result<MarginalSpec, bivisar::Error> {
    let err = || {
        bivisar::Error::InvalidParameter(format!(
            "marginal must be \"poisson:<lambda>\" or \"negbin:<mu>,<phi>\", got {s:?}"
        ))
    };
    let (family, params) = s.split_once(':').ok_or_else(err)?;
    match family {
        "poisson" => MarginalSpec::poisson(params.trim().parse().map_err(|_| err())?),
        "negbin" => {
            let (mu, phi) = params.split_once(',').ok_or_else(err)?;
            MarginalSpec::negbin(
                mu.trim().parse().map_err(|_| err())?,
                phi.trim().parse().map_err(|_| err())?,
            )
        }
        _ => Err(err()),
    }
}

fn parse_family(s: &str) -> Result<Family, bivisar::Error> {
    match s {
        "poisson" => Ok(Family::Poisson),
        "negbin" => Ok(Family::NegBin),
        _ => Err(bivisar::Error::InvalidParameter(format!(
            "family must be poisson or negbin, got {s:?}"
        ))),
    }
}

fn emit(output: &OutputArgs, content: &str) -> Result<(), bivisar::Error> {
    match &output.out {
        Some(path) => Ok(std::fs::write(path, content)?),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn selected_models(
    models: &str,
    regression: RegressionKind,
) -> Result<Vec<(String, ModelSpec)>, bivisar::Error> {
    if models == "all" {
        return Ok(ModelSpec::all_named(regression));
    }
    models
        .split(',')
        .map(|name| {
            let spec = ModelSpec::by_name(name.trim(), regression)?;
            Ok((spec.name(), spec))
        })
        .collect()
}

fn run() -> Result<(), bivisar::Error> {
    match Cli::parse().command {
        Command::Fit {
            data,
            model,
            regression,
            seed,
            out,
        } => {
            println!("seed: {seed}");
            let dataset = data_io::load_matches(&data)?;
            let spec = ModelSpec::by_name(&model, regression.into())?;
            let config = FitConfig {
                seed,
                ..FitConfig::default()
            };
            let fitted = fit(&spec, &dataset.matches, &config)?;
            data_io::save_fit(&fitted, &out)?;
            println!(
                "{}: loglik {:.4}, AIC {:.4}, {} params, converged: {}",
                fitted.spec.name(),
                fitted.loglik,
                fitted.aic,
                fitted.n_params,
                fitted.converged
            );
            Ok(())
        }
        Command::Compare {
            data,
            models,
            regression,
            seed,
            output,
        } => {
            println!("seed: {seed}");
            let dataset = data_io::load_matches(&data)?;
            let specs = selected_models(&models, regression.into())?;
            let config = FitConfig {
                seed,
                ..FitConfig::default()
            };
            let fits = specs
                .iter()
                .map(|(_, spec)| fit(spec, &dataset.matches, &config))
                .collect::<Result<Vec<_>, _>>()?;
            let rows = compare(&fits)?;
            let mut s = String::new();
            match output.format {
                Format::Csv => {
                    s.push_str("model,loglik,n_params,aic,preferred\n");
                    for r in &rows {
                        writeln!(s, "{},{},{},{},{}", r.name, r.loglik, r.n_params, r.aic, r.preferred)
                            .unwrap();
                    }
                }
                Format::Txt => {
                    let w = rows.iter().map(|r| r.name.len()).max().unwrap_or(5).max(5);
                    writeln!(s, "{:w$}  {:>12}  {:>8}  {:>12}", "model", "loglik", "n_params", "AIC").unwrap();
                    for r in &rows {
                        let mark = if r.preferred { " *" } else { "" };
                        writeln!(s, "{:w$}  {:>12.2}  {:>8}  {:>12.2}{mark}", r.name, r.loglik, r.n_params, r.aic)
                            .unwrap();
                    }
                }
            }
            emit(&output, &s)
        }
        Command::Diagnose {
            data,
            max_goals,
            bootstrap_b,
            seed,
            output,
        } => {
            println!("seed: {seed}");
            let dataset = data_io::load_matches(&data)?;
            let table = diagnostics::ratio_table(&dataset.matches, max_goals, bootstrap_b, seed)?;
            let chi = diagnostics::chi_square_independence(&dataset.matches, max_goals);
            let rows = diagnostics::mean_variance_summary(&dataset.matches, seed)?;
            let seasonal = diagnostics::seasonal_correlation(&dataset.matches);
            let overall = diagnostics::empirical_correlation(&dataset.matches);

            let mut s = String::new();
            match output.format {
                Format::Csv => {
                    s.push_str("# ratio_table (home goals by row; se in matching cell order)\n");
                    s.push_str("home_goals,away_goals,ratio,se\n");
                    for a in 0..=max_goals as usize {
                        for b in 0..=max_goals as usize {
                            match (table.ratio[a][b], table.se[a][b]) {
                                (Some(r), Some(se)) => writeln!(s, "{a},{b},{r},{se}").unwrap(),
                                _ => writeln!(s, "{a},{b},,").unwrap(),
                            }
                        }
                    }
                    s.push_str("# chi_square_independence\nstatistic,dof,p_value\n");
                    match &chi {
                        Ok((stat, dof, p)) => writeln!(s, "{stat},{dof},{p}").unwrap(),
                        Err(e) => writeln!(s, "# degenerate: {e}").unwrap(),
                    }
                    s.push_str("# empirical_correlation\nseason,pearson_r\n");
                    for (season, r) in &seasonal {
                        writeln!(s, "{season},{}", r.map(|v| v.to_string()).unwrap_or_default()).unwrap();
                    }
                    writeln!(s, "all,{}", overall.map(|v| v.to_string()).unwrap_or_default()).unwrap();
                    s.push_str("# mean_variance\nteam,venue,mean,variance,n,envelope_lo,envelope_hi,flag\n");
                    for r in &rows {
                        writeln!(
                            s,
                            "{},{},{},{},{},{},{},{}",
                            r.team, r.venue, r.mean, r.variance, r.n, r.envelope.0, r.envelope.1, r.flag
                        )
                        .unwrap();
                    }
                }
                Format::Txt => {
                    writeln!(s, "ratio table (vertical: home goals), n = {}", table.n).unwrap();
                    write!(s, "    ").unwrap();
                    for b in 0..=max_goals {
                        write!(s, "{b:>14}").unwrap();
                    }
                    s.push('\n');
                    for a in 0..=max_goals as usize {
                        write!(s, "{a:>3} ").unwrap();
                        for b in 0..=max_goals as usize {
                            match (table.ratio[a][b], table.se[a][b]) {
                                (Some(r), Some(se)) => write!(s, "  {r:>5.2} ({se:4.2})").unwrap(),
                                _ => write!(s, "  {:>12}", "-").unwrap(),
                            }
                        }
                        s.push('\n');
                    }
                    match &chi {
                        Ok((stat, dof, p)) => {
                            writeln!(s, "chi-squared independence: {stat:.2} on {dof} dof, p = {p:.4}").unwrap()
                        }
                        Err(e) => writeln!(s, "chi-squared independence: {e}").unwrap(),
                    }
                    for (season, r) in &seasonal {
                        match r {
                            Some(r) => writeln!(s, "correlation {season}: {r:.2}").unwrap(),
                            None => writeln!(s, "correlation {season}: degenerate").unwrap(),
                        }
                    }
                    writeln!(s, "team goal dispersion (95% equidispersion envelope):").unwrap();
                    for r in &rows {
                        writeln!(
                            s,
                            "  {:20} {:4}  mean {:5.2}  var {:5.2}  n {:3}  [{:4.2}, {:5.2}]  {}",
                            r.team, r.venue, r.mean, r.variance, r.n, r.envelope.0, r.envelope.1, r.flag
                        )
                        .unwrap();
                    }
                }
            }
            emit(&output, &s)
        }
        Command::Scores {
            fit,
            home,
            away,
            max_goals,
            output,
        } => {
            let fitted = data_io::load_fit(&fit)?;
            let model = fitted.bivariate_for(&home, &away)?;
            let sm = model.score_matrix(max_goals)?;
            let mut s = String::new();
            match output.format {
                Format::Csv => {
                    s.push_str("home_goals,away_goals,probability\n");
                    for (a, row) in sm.probs.iter().enumerate() {
                        for (b, p) in row.iter().enumerate() {
                            writeln!(s, "{a},{b},{p}").unwrap();
                        }
                    }
                }
                Format::Txt => {
                    writeln!(s, "{home} (rows) vs {away} (cols), probabilities in %").unwrap();
                    write!(s, "    ").unwrap();
                    for b in 0..=max_goals {
                        write!(s, "{b:>7}").unwrap();
                    }
                    s.push('\n');
                    for (a, row) in sm.probs.iter().enumerate() {
                        write!(s, "{a:>3} ").unwrap();
                        for p in row {
                            write!(s, "{:>7.2}", 100.0 * p).unwrap();
                        }
                        s.push('\n');
                    }
                    writeln!(s, "mass beyond grid: {:.4}%", 100.0 * sm.truncated_mass).unwrap();
                }
            }
            emit(&output, &s)
        }
        Command::Simulate {
            fit,
            fixtures,
            table,
            n,
            seed,
            output,
        } => {
            println!("seed: {seed}");
            let fitted = data_io::load_fit(&fit)?;
            let fixtures = data_io::load_fixtures(&fixtures)?;
            let current: BTreeMap<String, u32> = match table {
                Some(path) => data_io::load_table(&path)?,
                None => fitted
                    .team_map
                    .teams()
                    .iter()
                    .map(|t| (t.clone(), 0))
                    .collect(),
            };
            let dist = simulate_season(&fitted, &current, &fixtures, n, seed)?;
            let intervals = prediction_intervals(&dist, 0.95)?;
            let mut s = String::new();
            match output.format {
                Format::Csv => {
                    s.push_str("team,current_points,lo,hi,mean\n");
                    for (team, (lo, hi)) in &intervals {
                        writeln!(
                            s,
                            "{team},{},{lo},{hi},{}",
                            dist.current_points[team],
                            dist.mean(team).unwrap()
                        )
                        .unwrap();
                    }
                }
                Format::Txt => {
                    writeln!(s, "{:20} {:>8} {:>5} {:>5} {:>8}", "team", "current", "lo", "hi", "mean").unwrap();
                    for (team, (lo, hi)) in &intervals {
                        writeln!(
                            s,
                            "{team:20} {:>8} {lo:>5} {hi:>5} {:>8.2}",
                            dist.current_points[team],
                            dist.mean(team).unwrap()
                        )
                        .unwrap();
                    }
                }
            }
            emit(&output, &s)
        }
        Command::ValidateQ { q, marginal } => {
            let kind = QKind::parse(&q)?;
            let m = parse_marginal(&marginal)?;
            let spec = QFunctionSpec::new(kind, m)?;
            let residual = spec.zero_mean_residual();
            println!("q = {}, marginal = {m:?}", spec.kind().name());
            println!("zero-mean residual: {residual:.6}");
            if spec.is_admissible() {
                println!("admissible: the q-function preserves the marginals");
            } else {
                println!("NOT admissible: the weighted sum over the support is nonzero,");
                println!("so the construction would distort the marginals.");
                println!(
                    "suggestion: use --q \"repaired({})\", which rescales the final",
                    spec.kind().name()
                );
                println!("support point to restore the zero-mean condition");
            }
            Ok(())
        }
        Command::CorrRange { family, q, output } => {
            let family = parse_family(&family)?;
            let kind = QKind::parse(&q)?;
            let rows = correlation_range(family, &kind, &default_mean_grid(), &DEFAULT_PHI_GRID)?;
            let mut s = String::new();
            match output.format {
                Format::Csv => {
                    s.push_str("mean,rho_min,rho_max\n");
                    for r in &rows {
                        writeln!(s, "{},{},{}", r.mean1, r.rho_min, r.rho_max).unwrap();
                    }
                }
                Format::Txt => {
                    writeln!(s, "{:>6} {:>9} {:>9}", "mean", "rho_min", "rho_max").unwrap();
                    for r in &rows {
                        writeln!(s, "{:>6.2} {:>9.2} {:>9.2}", r.mean1, r.rho_min, r.rho_max).unwrap();
                    }
                }
            }
            emit(&output, &s)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
