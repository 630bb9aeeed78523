use std::path::{Path, PathBuf};
use std::process::ExitCode;

use arealrisk::config::{PipelineConfig, ResponseChoice};
use arealrisk::error::{Error, Result};
use arealrisk::formats::tables::{self, CovariateTable, SmoothedRow};
use arealrisk::formats::{geojson, write_json};
use arealrisk::pipeline::{self, HazardInputs};
use arealrisk::report::{GraphReport, MoranReport};
use arealrisk::{fixture, Threads};
use arealrisk_core::aggregate::aggregate_scores;
use arealrisk_core::bayes::GibbsConfig;
use arealrisk_core::graph::{weights, NeighborGraph, WeightScheme, DEFAULT_SNAP};
use arealrisk_core::moran::{moran_mc, DEFAULT_PERMUTATIONS};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

/// Risk-perception analysis for areal survey data.
#[derive(Parser)]
#[command(version)]
struct Cli {
    /// Worker threads (default: all available cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the factor model to survey answers and score respondents.
    Score(ScoreArgs),
    /// Aggregate respondent scores to counties.
    Aggregate(AggregateArgs),
    /// Build the neighbor graph.
    Graph(GraphArgs),
    /// Moran's I with a permutation p-value.
    Moran(MoranArgs),
    /// CAR smoothing of county responses.
    Smooth(SmoothArgs),
    /// Hazard-exposure covariates per county.
    Exposure(ExposureArgs),
    /// Bayesian linear regression by Gibbs sampling.
    Regress(RegressArgs),
    /// Write a synthetic fixture with known ground truth.
    Simulate(SimulateArgs),
    /// Run every stage from a configuration file.
    Run(RunArgs),
}

#[derive(Args)]
struct ReportArg {
    /// Where to write the JSON report (default: stdout).
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct GraphSource {
    /// Edge list CSV (`fips_a, fips_b`).
    #[arg(long, required_unless_present = "geojson")]
    adjacency: Option<PathBuf>,
    /// County polygons; queen contiguity is used when no edge list is given.
    #[arg(long)]
    geojson: Option<PathBuf>,
    #[arg(long, default_value = geojson::DEFAULT_ID_PROPERTY)]
    id_property: String,
    #[arg(long, default_value_t = DEFAULT_SNAP)]
    snap: f64,
}

impl GraphSource {
    fn build(&self) -> Result<pipeline::GraphInput> {
        pipeline::build_graph(self.adjacency.as_deref(), self.geojson.as_deref(), &self.id_property, self.snap)
    }
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    survey: PathBuf,
    /// Scores CSV.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    factors: usize,
    #[command(flatten)]
    report: ReportArg,
}

#[derive(Args)]
struct AggregateArgs {
    /// Scores CSV from `score`.
    #[arg(long)]
    scores: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    report: ReportArg,
}

#[derive(Args)]
struct GraphArgs {
    #[command(flatten)]
    source: GraphSource,
    /// Edge list CSV of the built graph.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    report: ReportArg,
}

#[derive(Args)]
struct MoranArgs {
    /// CSV with `county_fips` and a value column.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "smoothed")]
    column: String,
    #[command(flatten)]
    source: GraphSource,
    /// `binary` or `row`.
    #[arg(long, default_value = "row", value_parser = parse_weights)]
    weights: WeightScheme,
    #[arg(long, default_value_t = DEFAULT_PERMUTATIONS)]
    perms: usize,
    #[arg(long)]
    seed: u64,
    /// Moran-plot CSV (value against spatial lag).
    #[arg(long)]
    plot_out: Option<PathBuf>,
    #[command(flatten)]
    report: ReportArg,
}

#[derive(Args)]
struct SmoothArgs {
    /// Aggregates CSV from `aggregate`.
    #[arg(long)]
    aggregates: PathBuf,
    #[command(flatten)]
    source: GraphSource,
    /// `auto`, `mean`, `q1` or `q3`.
    #[arg(long, default_value = "auto", value_parser = parse_response)]
    response: ResponseChoice,
    /// Scale conditional variances by the SRS variances.
    #[arg(long)]
    unit_variances: bool,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    report: ReportArg,
}

#[derive(Args)]
struct ExposureArgs {
    #[arg(long)]
    geojson: PathBuf,
    #[arg(long, default_value = geojson::DEFAULT_ID_PROPERTY)]
    id_property: String,
    #[arg(long)]
    tracks: PathBuf,
    #[arg(long)]
    events: PathBuf,
    #[arg(long)]
    elevation: PathBuf,
    #[arg(long, default_value_t = arealrisk_core::exposure::DEFAULT_BUFFER_RADIUS_MILES)]
    radius: f64,
    #[arg(long, default_value_t = arealrisk_core::exposure::DEFAULT_ELEVATION_THRESHOLD_FT)]
    threshold: f64,
    #[arg(long, default_value_t = 1.0)]
    resolution: f64,
    #[arg(long, default_value_t = arealrisk_core::exposure::DEFAULT_CUTOFF_YEAR)]
    cutoff_year: i32,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    report: ReportArg,
}

#[derive(Args)]
struct RegressArgs {
    /// CSV with `county_fips` and the response column.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "smoothed")]
    column: String,
    /// Covariate CSVs keyed by `county_fips`; columns are joined.
    #[arg(long, required = true, num_args = 1..)]
    covariates: Vec<PathBuf>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    chains: Option<usize>,
    #[arg(long)]
    burn: Option<usize>,
    #[arg(long)]
    keep: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
    #[arg(long)]
    prior_sd: Option<f64>,
    /// Kept draws CSV.
    #[arg(long)]
    draws_out: Option<PathBuf>,
    #[command(flatten)]
    report: ReportArg,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    seed: u64,
    /// Directory for the fixture files.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    report: ReportArg,
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration or a run manifest.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides `runtime.output`).
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_parser = parse_response)]
    response: Option<ResponseChoice>,
    #[arg(long)]
    perms: Option<usize>,
    #[arg(long, value_parser = parse_weights)]
    weights: Option<WeightScheme>,
    #[arg(long)]
    keep: Option<usize>,
    #[arg(long)]
    burn: Option<usize>,
    #[arg(long)]
    chains: Option<usize>,
    #[arg(long)]
    write_draws: bool,
    #[command(flatten)]
    report: ReportArg,
}

fn parse_weights(s: &str) -> std::result::Result<WeightScheme, String> {
    WeightScheme::parse(s).ok_or_else(|| format!("unknown weights {s:?} (binary or row)"))
}

fn parse_response(s: &str) -> std::result::Result<ResponseChoice, String> {
    ResponseChoice::parse(s).ok_or_else(|| format!("unknown response {s:?} (auto, mean, q1 or q3)"))
}

fn emit<T: Serialize>(report: &ReportArg, value: &T) -> Result<()> {
    match &report.report {
        Some(path) => write_json(path, value),
        None => {
            let text = serde_json::to_string_pretty(value).expect("reports serialize");
            println!("{text}");
            Ok(())
        }
    }
}

fn warn(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

/// Values of `column` in graph order; every graph unit needs one.
fn values_for(graph: &NeighborGraph, path: &Path, column: &str) -> Result<Vec<f64>> {
    let rows = tables::read_value_column(path, column)?;
    let mut values = vec![None; graph.len()];
    let mut outside = Vec::new();
    for (unit, v) in rows {
        match graph.index_of(&unit) {
            Some(i) => values[i] = Some(v),
            None => outside.push(unit),
        }
    }
    if !outside.is_empty() {
        warn(&[format!("units not in the graph were ignored: {}", outside.join(", "))]);
    }
    let missing: Vec<&str> =
        graph.unit_labels().iter().zip(&values).filter(|(_, v)| v.is_none()).map(|(u, _)| u.as_str()).collect();
    if !missing.is_empty() {
        return Err(Error::Data(format!("{}: no {column} value for graph units {}", path.display(), missing.join(", "))));
    }
    Ok(values.into_iter().flatten().collect())
}

fn executor(workers: Option<usize>) -> Threads {
    workers.map(Threads::new).unwrap_or_else(Threads::available)
}

fn score(a: ScoreArgs) -> Result<()> {
    let scored = pipeline::score_survey(&a.survey, a.factors)?;
    warn(&scored.model.warnings);
    tables::write_scores(&a.out, &scored.scores)?;
    emit(&a.report, &scored.model)
}

fn aggregate(a: AggregateArgs) -> Result<()> {
    let (units, scores) = tables::read_scores(&a.scores)?;
    let aggregates = aggregate_scores(&units, &scores)?;
    tables::write_aggregates(&a.out, &aggregates)?;
    #[derive(Serialize)]
    struct Report {
        n_respondents: usize,
        n_units: usize,
    }
    emit(&a.report, &Report { n_respondents: scores.len(), n_units: aggregates.len() })
}

fn graph(a: GraphArgs) -> Result<()> {
    let input = a.source.build()?;
    let g = &input.graph;
    let units = g.unit_labels();
    let edges: Vec<(String, String)> = g.edges().into_iter().map(|(i, j)| (units[i].clone(), units[j].clone())).collect();
    tables::write_edges(&a.out, &edges)?;
    emit(&a.report, &GraphReport::new(g, input.source))
}

fn moran(a: MoranArgs, exec: &Threads) -> Result<()> {
    let graph = a.source.build()?.graph;
    let values = values_for(&graph, &a.input, &a.column)?;
    let w = weights(&graph, a.weights);
    let result = moran_mc(&values, &w, a.perms, a.seed, exec)?;
    if let Some(path) = &a.plot_out {
        tables::write_moran_plot(path, graph.unit_labels(), &values, &result.lagged_values)?;
    }
    emit(&a.report, &MoranReport::new(&a.column, a.weights, &result, a.seed))
}

fn smooth(a: SmoothArgs, exec: &Threads) -> Result<()> {
    let graph = a.source.build()?.graph;
    let aggregates = tables::read_aggregates(&a.aggregates)?;
    let (aligned, warnings) = pipeline::align(&aggregates, &graph)?;
    warn(&warnings);
    let smoothed = pipeline::smooth_responses(&aligned, &graph, a.response, a.unit_variances, exec)?;
    warn(&smoothed.report.warnings);
    let fit = smoothed.selected_fit();
    let raw = aligned.response(smoothed.selected)?;
    let rows: Vec<SmoothedRow> = graph
        .unit_labels()
        .iter()
        .enumerate()
        .map(|(i, u)| SmoothedRow {
            county_fips: u.clone(),
            response_name: smoothed.selected.name().into(),
            raw: raw[i],
            smoothed: fit.smoothed[i],
        })
        .collect();
    tables::write_smoothed(&a.out, &rows)?;
    emit(&a.report, &smoothed.report)
}

fn exposure(a: ExposureArgs, exec: &Threads) -> Result<()> {
    let polygons = geojson::read_polygons(&a.geojson, &a.id_property)?;
    let hazard = HazardInputs::read(&a.tracks, &a.events, &a.elevation)?;
    let units: Vec<String> = polygons.iter().map(|(u, _)| u.clone()).collect();
    let settings = arealrisk::config::ExposureSettings {
        radius: a.radius,
        threshold: a.threshold,
        resolution: a.resolution,
        cutoff_year: a.cutoff_year,
    };
    let (rows, warnings) = pipeline::exposure_rows(&units, &polygons, &hazard, &settings, exec)?;
    warn(&warnings);
    tables::write_exposure(&a.out, &rows)?;
    #[derive(Serialize)]
    struct Report<'a> {
        settings: &'a arealrisk::config::ExposureSettings,
        n_units: usize,
        warnings: &'a [String],
    }
    emit(&a.report, &Report { settings: &settings, n_units: rows.len(), warnings: &warnings })
}

fn regress(a: RegressArgs, exec: &Threads) -> Result<()> {
    let response = tables::read_value_column(&a.input, &a.column)?;
    let mut covariates = CovariateTable::default();
    for path in &a.covariates {
        let table = tables::read_covariates(path)?;
        covariates = if covariates.names.is_empty() && covariates.rows.is_empty() {
            table
        } else {
            covariates.join(table).map_err(Error::Data)?
        };
    }
    let (units, y): (Vec<String>, Vec<f64>) = response.into_iter().unzip();
    let x = pipeline::design_matrix(&units, &covariates)?;
    let defaults = GibbsConfig::new(a.seed);
    let gibbs = GibbsConfig {
        n_chains: a.chains.unwrap_or(defaults.n_chains),
        n_burn: a.burn.unwrap_or(defaults.n_burn),
        n_keep: a.keep.unwrap_or(defaults.n_keep),
        thin: a.thin.unwrap_or(defaults.thin),
        prior_sd_beta: a.prior_sd.unwrap_or(defaults.prior_sd_beta),
        ..defaults
    };
    let regression = pipeline::regress(&y, &x, &a.column, &covariates.names, &gibbs, exec)?;
    warn(&regression.report.warnings);
    if let Some(path) = &a.draws_out {
        tables::write_draws(path, &regression.posterior, &regression.names)?;
    }
    emit(&a.report, &regression.report)
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let files = fixture::simulate(&a.out, a.seed)?;
    #[derive(Serialize)]
    struct Report<'a> {
        seed: u64,
        files: &'a [&'static str],
    }
    emit(&a.report, &Report { seed: a.seed, files: &files })
}

fn run(a: RunArgs, workers: Option<usize>) -> Result<()> {
    let mut config = PipelineConfig::load(&a.config).map_err(|e| Error::Stage { stage: arealrisk::Stage::Config, source: Box::new(e) })?;
    if a.seed.is_some() {
        config.seed = a.seed;
    }
    if let Some(r) = a.response {
        config.smooth.response = r;
    }
    if let Some(p) = a.perms {
        config.moran.permutations = p;
    }
    if let Some(w) = a.weights {
        config.moran.weights = w;
    }
    if let Some(k) = a.keep {
        config.regress.keep = k;
    }
    if let Some(b) = a.burn {
        config.regress.burn = b;
    }
    if let Some(c) = a.chains {
        config.regress.chains = c;
    }
    if a.write_draws {
        config.regress.write_draws = true;
    }
    let output = a.output.or_else(|| config.runtime.output.clone()).ok_or_else(|| {
        Error::Stage {
            stage: arealrisk::Stage::Config,
            source: Box::new(Error::Config("no output directory (--output or runtime.output)".into())),
        }
    })?;
    let exec = executor(workers.or(config.runtime.workers));
    let summary = pipeline::run_pipeline(&config, &output, &exec)?;
    warn(&summary.warnings);
    #[derive(Serialize)]
    struct Report<'a> {
        output: &'a Path,
        files: &'a [String],
        selected_response: &'a str,
        moran_raw_mean: &'a MoranReport,
        moran_smoothed: &'a MoranReport,
        bayes_p: f64,
        dic: f64,
    }
    emit(
        &a.report,
        &Report {
            output: &summary.output,
            files: &summary.files,
            selected_response: summary.selected.name(),
            moran_raw_mean: &summary.moran_raw,
            moran_smoothed: &summary.moran_smoothed,
            bayes_p: summary.regression.bayes_p,
            dic: summary.regression.dic,
        },
    )
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let exec = executor(cli.workers);
    let result = match cli.command {
        Command::Score(a) => score(a),
        Command::Aggregate(a) => aggregate(a),
        Command::Graph(a) => graph(a),
        Command::Moran(a) => moran(a, &exec),
        Command::Smooth(a) => smooth(a, &exec),
        Command::Exposure(a) => exposure(a, &exec),
        Command::Regress(a) => regress(a, &exec),
        Command::Simulate(a) => simulate(a),
        Command::Run(a) => run(a, cli.workers),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
