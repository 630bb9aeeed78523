//! End-to-end run: score → aggregate → graph → moran → smooth → exposure →
//! join → regress → report, then a manifest of inputs and outputs.
//!
//! Each stage is also exposed as a function so the subcommands can run it on
//! its own.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use arealrisk_core::aggregate::{aggregate_score_vector, align_to_units, AlignedAggregates, CountyAggregate, Response};
use arealrisk_core::bayes::{diagnose, gibbs_lm, standardize, summarize, with_intercept, GibbsConfig, Posterior};
use arealrisk_core::car::{fit_car, intercept_only, select_response, CarFit, CarOptions};
use arealrisk_core::exec::Executor;
use arealrisk_core::exposure::{below_elevation_fraction, buffer_fraction, last_event_covariates, ElevationGrid, EventRecord, Track};
use arealrisk_core::factor::{code_responses, fit_paf, score, FactorModel, ScoreVector};
use arealrisk_core::geometry::Polygon;
use arealrisk_core::graph::{graph_from_edge_list, queen_from_polygons, weights, NeighborGraph, WeightScheme};
use arealrisk_core::linalg::Matrix;
use arealrisk_core::moran::moran_mc;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{relative_to, ExposureSettings, PipelineConfig, ResponseChoice};
use crate::error::{Error, Result, Stage, StageExt};
use crate::formats::tables::{self, CovariateTable, ExposureRow, SmoothedRow};
use crate::formats::{geojson, grid, hazard, survey, write_json};
use crate::report::{
    CombinedReport, DescriptiveRow, FitReport, GraphReport, MoranReport, RegressionReport, SmoothingReport,
};

/// Name given to the smoothed county response in reports.
pub const RESPONSE_NAME: &str = "risk_perception";

pub struct Scored {
    pub model: FactorModel,
    pub scores: ScoreVector,
}

pub fn score_survey(path: &Path, factors: usize) -> Result<Scored> {
    let raw = survey::read_survey(path)?;
    let coded = code_responses(&raw)?;
    let model = fit_paf(&coded, factors)?;
    let scores = score(&model, &coded)?;
    Ok(Scored { model, scores })
}

pub struct GraphInput {
    pub graph: NeighborGraph,
    /// `"adjacency"` or `"polygons"`.
    pub source: &'static str,
    pub polygons: Option<Vec<(String, Polygon)>>,
}

/// The graph comes from the edge list when one is given, otherwise from
/// queen contiguity of the polygons. Polygons are read either way.
pub fn build_graph(adjacency: Option<&Path>, geojson_path: Option<&Path>, id_property: &str, snap: f64) -> Result<GraphInput> {
    let polygons = geojson_path.map(|p| geojson::read_polygons(p, id_property)).transpose()?;
    match (adjacency, &polygons) {
        (Some(path), _) => {
            let list = tables::read_edges(path)?;
            let graph = graph_from_edge_list(&list.units, &list.edges)?;
            Ok(GraphInput { graph, source: "adjacency", polygons })
        }
        (None, Some(polys)) => {
            let graph = queen_from_polygons(polys, snap)?;
            Ok(GraphInput { graph, source: "polygons", polygons })
        }
        (None, None) => Err(Error::Config("either an adjacency list or polygons are required".into())),
    }
}

/// Aggregates in graph order. Graph units without respondents are an error;
/// survey units outside the graph are returned as a warning.
pub fn align(aggregates: &[CountyAggregate], graph: &NeighborGraph) -> Result<(AlignedAggregates, Vec<String>)> {
    let aligned = align_to_units(aggregates, graph.unit_labels());
    if !aligned.missing_units.is_empty() {
        return Err(Error::Data(format!(
            "graph units without survey respondents: {}",
            aligned.missing_units.join(", ")
        )));
    }
    let outside: Vec<&str> = aggregates
        .iter()
        .filter(|a| graph.index_of(&a.unit_label).is_none())
        .map(|a| a.unit_label.as_str())
        .collect();
    let mut warnings = Vec::new();
    if !outside.is_empty() {
        warnings.push(format!("survey units not in the graph were ignored: {}", outside.join(", ")));
    }
    Ok((aligned, warnings))
}

pub struct Smoothed {
    pub selected: Response,
    pub fits: Vec<(Response, CarFit)>,
    pub report: SmoothingReport,
}

impl Smoothed {
    pub fn selected_fit(&self) -> &CarFit {
        &self.fits.iter().find(|(r, _)| *r == self.selected).expect("selected response was fitted").1
    }
}

/// Fits an intercept-only CAR model (binary weights) to each candidate
/// response; with `Auto` the best by AIC, then residual variance, is kept.
pub fn smooth_responses(
    aligned: &AlignedAggregates,
    graph: &NeighborGraph,
    choice: ResponseChoice,
    unit_variances: bool,
    exec: &impl Executor,
) -> Result<Smoothed> {
    let w = weights(graph, WeightScheme::Binary);
    let candidates = choice.candidates();
    let ys = candidates.iter().map(|&r| aligned.response(r)).collect::<arealrisk_core::Result<Vec<_>>>()?;
    let options = CarOptions {
        unit_variances: if unit_variances { aligned.srs_variances() } else { None },
        ..CarOptions::default()
    };
    let x = intercept_only(graph.len());
    let fits = exec.map(candidates.len(), |k| fit_car(&ys[k], &x, &w, &options));
    let fits: Vec<(Response, CarFit)> =
        candidates.iter().copied().zip(fits).map(|(r, f)| f.map(|f| (r, f))).collect::<arealrisk_core::Result<_>>()?;

    let (selected, selection, warnings) = if choice == ResponseChoice::Auto {
        let named: Vec<(String, CarFit)> = fits.iter().map(|(r, f)| (r.name().to_string(), f.clone())).collect();
        let s = select_response(&named)?;
        let best = Response::parse(&s.best).expect("candidate names parse");
        (best, Some(s.table), s.warnings)
    } else {
        (fits[0].0, None, Vec::new())
    };
    let report = SmoothingReport {
        selected: selected.name().into(),
        selection,
        fits: fits.iter().map(|(r, f)| FitReport::new(r.name(), f)).collect(),
        warnings,
    };
    Ok(Smoothed { selected, fits, report })
}

pub struct HazardInputs {
    pub tracks: Vec<Track>,
    pub events: Vec<EventRecord>,
    pub elevation: ElevationGrid,
}

impl HazardInputs {
    pub fn read(tracks: &Path, events: &Path, elevation: &Path) -> Result<Self> {
        Ok(Self {
            tracks: hazard::read_tracks(tracks)?,
            events: hazard::read_events(events)?,
            elevation: grid::read_ascii_grid(elevation)?,
        })
    }
}

/// Exposure covariates per unit, in the given order. Units with no
/// qualifying event get blank last-event columns and a warning.
pub fn exposure_rows(
    units: &[String],
    polygons: &[(String, Polygon)],
    hazard: &HazardInputs,
    settings: &ExposureSettings,
    exec: &impl Executor,
) -> Result<(Vec<ExposureRow>, Vec<String>)> {
    let by_unit: BTreeMap<&str, &Polygon> = polygons.iter().map(|(u, p)| (u.as_str(), p)).collect();
    let missing: Vec<&str> = units.iter().map(String::as_str).filter(|u| !by_unit.contains_key(u)).collect();
    if !missing.is_empty() {
        return Err(Error::Data(format!("units without a polygon: {}", missing.join(", "))));
    }
    let results = exec.map(units.len(), |i| -> Result<(ExposureRow, Vec<String>)> {
        let unit = &units[i];
        let county = by_unit[unit.as_str()];
        let context = |e: arealrisk_core::Error| Error::Data(format!("county {unit}: {e}"));
        let wind = buffer_fraction(county, &hazard.tracks, settings.radius, settings.resolution).map_err(context)?;
        let surge = below_elevation_fraction(county, &hazard.elevation, settings.threshold).map_err(context)?;
        let mut warnings: Vec<String> =
            wind.warnings.iter().chain(&surge.warnings).map(|w| format!("county {unit}: {w}")).collect();
        let last = match last_event_covariates(&hazard.events, unit, settings.cutoff_year) {
            Ok(e) => Some(e),
            Err(arealrisk_core::Error::MissingCovariate(_)) => {
                warnings.push(format!("county {unit}: no event since {}", settings.cutoff_year));
                None
            }
            Err(e) => return Err(e.into()),
        };
        let row = ExposureRow {
            county_fips: unit.clone(),
            wind_zone_frac: wind.fraction,
            surge_zone_frac: surge.fraction,
            last_max_wind: last.as_ref().map(|e| e.max_wind),
            last_peak_surge: last.as_ref().map(|e| e.peak_surge),
        };
        Ok((row, warnings))
    });
    let mut rows = Vec::with_capacity(units.len());
    let mut warnings = Vec::new();
    for r in results {
        let (row, w) = r?;
        rows.push(row);
        warnings.extend(w);
    }
    Ok((rows, warnings))
}

/// Covariate matrix in unit order. Every unit needs every column; the
/// offenders are listed otherwise.
pub fn design_matrix(units: &[String], table: &CovariateTable) -> Result<Matrix> {
    let mut problems = Vec::new();
    for unit in units {
        match table.rows.get(unit) {
            None => problems.push(format!("{unit} (no row)")),
            Some(values) => {
                let gaps: Vec<&str> =
                    table.names.iter().zip(values).filter(|(_, v)| v.is_none()).map(|(n, _)| n.as_str()).collect();
                if !gaps.is_empty() {
                    problems.push(format!("{unit} ({})", gaps.join(", ")));
                }
            }
        }
    }
    if !problems.is_empty() {
        return Err(Error::Data(format!("units missing covariates: {}", problems.join("; "))));
    }
    if table.names.is_empty() {
        return Err(Error::Data("no covariate columns".into()));
    }
    Ok(Matrix::from_fn(units.len(), table.names.len(), |i, j| {
        table.rows[&units[i]][j].expect("checked above")
    }))
}

pub struct Regression {
    pub report: RegressionReport,
    pub posterior: Posterior,
    /// Coefficient names, intercept first.
    pub names: Vec<String>,
}

/// Standardizes, samples and summarizes `response ~ 1 + predictors`.
pub fn regress(
    y: &[f64],
    x: &Matrix,
    response_name: &str,
    predictor_names: &[String],
    gibbs: &GibbsConfig,
    exec: &impl Executor,
) -> Result<Regression> {
    let (zy, zx, record) = standardize(y, x, response_name, predictor_names)?;
    let design = with_intercept(&zx);
    let posterior = gibbs_lm(&zy, &design, gibbs, exec)?;
    let diagnostics = diagnose(&posterior, &zy, &design, exec)?;
    let coefficients = summarize(&posterior, &record)?;
    let names = coefficients.iter().map(|c| c.name.clone()).collect();
    let warnings = posterior.warnings.iter().chain(&diagnostics.warnings).cloned().collect();
    let report = RegressionReport {
        response: response_name.into(),
        n: y.len(),
        coefficients,
        bayes_p: diagnostics.bayes_p,
        dic: diagnostics.dic,
        p_d: diagnostics.p_d,
        standardization: record,
        gibbs: gibbs.clone(),
        warnings,
    };
    Ok(Regression { report, posterior, names })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputRecord {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub core_version: String,
    pub seed: u64,
    /// Paths are relative to the directory holding the manifest.
    pub config: PipelineConfig,
    pub inputs: Vec<InputRecord>,
    pub outputs: Vec<OutputRecord>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn portable(path: &Path) -> String {
    path.to_string_lossy().replace('\\', "/")
}

/// What a run produced.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub output: PathBuf,
    /// Output file names, in the order written; the manifest comes last.
    pub files: Vec<String>,
    pub selected: Response,
    pub moran_raw: MoranReport,
    pub moran_smoothed: MoranReport,
    pub regression: RegressionReport,
    pub warnings: Vec<String>,
}

struct OutputDir {
    dir: PathBuf,
    files: Vec<String>,
}

impl OutputDir {
    fn file(&mut self, name: &str) -> PathBuf {
        self.files.push(name.into());
        self.dir.join(name)
    }
}

/// Runs every stage, writing outputs into `output`. Errors are tagged with
/// the stage that raised them.
pub fn run_pipeline(config: &PipelineConfig, output: &Path, exec: &impl Executor) -> Result<RunSummary> {
    config.validate().stage(Stage::Config)?;
    let seed = config.seed.expect("validated");
    let with_exposure = config.has_exposure().stage(Stage::Config)?;
    fs::create_dir_all(output).map_err(|e| Error::io(output, e)).stage(Stage::Config)?;
    let inputs = &config.inputs;
    let mut out = OutputDir { dir: output.to_path_buf(), files: Vec::new() };
    let mut warnings = Vec::new();

    let scored = score_survey(&inputs.survey, config.score.factors).stage(Stage::Score)?;
    warnings.extend(scored.model.warnings.iter().cloned());
    write_json(&out.file("factor_model.json"), &scored.model).stage(Stage::Score)?;
    tables::write_scores(&out.file("scores.csv"), &scored.scores).stage(Stage::Score)?;

    let aggregates = aggregate_score_vector(&scored.scores).stage(Stage::Aggregate)?;
    tables::write_aggregates(&out.file("aggregates.csv"), &aggregates).stage(Stage::Aggregate)?;

    let graph_input = build_graph(
        inputs.adjacency.as_deref(),
        inputs.geojson.as_deref(),
        &inputs.id_property,
        config.graph.snap,
    )
    .stage(Stage::Graph)?;
    let graph = &graph_input.graph;
    let units = graph.unit_labels().to_vec();
    let edges: Vec<(String, String)> =
        graph.edges().into_iter().map(|(i, j)| (units[i].clone(), units[j].clone())).collect();
    tables::write_edges(&out.file("neighbors.csv"), &edges).stage(Stage::Graph)?;
    write_json(&out.file("graph.json"), &GraphReport::new(graph, graph_input.source)).stage(Stage::Graph)?;

    let (aligned, align_warnings) = align(&aggregates, graph).stage(Stage::Moran)?;
    warnings.extend(align_warnings);
    let moran_w = weights(graph, config.moran.weights);
    let raw_mean = aligned.response(Response::Mean).stage(Stage::Moran)?;
    let moran = moran_mc(&raw_mean, &moran_w, config.moran.permutations, seed, exec).stage(Stage::Moran)?;
    let moran_raw = MoranReport::new("mean", config.moran.weights, &moran, seed);

    let smoothed = smooth_responses(&aligned, graph, config.smooth.response, config.smooth.unit_variances, exec)
        .stage(Stage::Smooth)?;
    warnings.extend(smoothed.report.warnings.iter().cloned());
    warnings.extend(smoothed.report.fits.iter().flat_map(|f| f.warnings.iter().map(move |w| format!("{}: {w}", f.response))));
    let fit = smoothed.selected_fit();
    let raw_selected = aligned.response(smoothed.selected).stage(Stage::Smooth)?;
    let rows: Vec<SmoothedRow> = units
        .iter()
        .enumerate()
        .map(|(i, u)| SmoothedRow {
            county_fips: u.clone(),
            response_name: smoothed.selected.name().into(),
            raw: raw_selected[i],
            smoothed: fit.smoothed[i],
        })
        .collect();
    tables::write_smoothed(&out.file("smoothed.csv"), &rows).stage(Stage::Smooth)?;
    write_json(&out.file("smoothing.json"), &smoothed.report).stage(Stage::Smooth)?;

    let moran = moran_mc(&fit.smoothed, &moran_w, config.moran.permutations, seed, exec).stage(Stage::Moran)?;
    let moran_smoothed = MoranReport::new(&format!("smoothed {}", smoothed.selected.name()), config.moran.weights, &moran, seed);
    #[derive(Serialize)]
    struct MoranFile<'a> {
        raw_mean: &'a MoranReport,
        smoothed: &'a MoranReport,
    }
    write_json(&out.file("moran.json"), &MoranFile { raw_mean: &moran_raw, smoothed: &moran_smoothed }).stage(Stage::Moran)?;
    tables::write_moran_plot(&out.file("moran_plot.csv"), &units, &fit.smoothed, &moran.lagged_values).stage(Stage::Moran)?;

    let mut covariates = tables::read_covariates(&inputs.covariates).stage(Stage::Join)?;
    if with_exposure {
        let hazard = HazardInputs::read(
            inputs.tracks.as_deref().expect("checked"),
            inputs.events.as_deref().expect("checked"),
            inputs.elevation.as_deref().expect("checked"),
        )
        .stage(Stage::Exposure)?;
        let polygons = graph_input.polygons.as_deref().expect("exposure requires polygons");
        let (exposure, exposure_warnings) =
            exposure_rows(&units, polygons, &hazard, &config.exposure, exec).stage(Stage::Exposure)?;
        warnings.extend(exposure_warnings);
        tables::write_exposure(&out.file("exposure.csv"), &exposure).stage(Stage::Exposure)?;
        covariates = covariates.join(CovariateTable::from(exposure.as_slice())).map_err(Error::Data).stage(Stage::Join)?;
    }
    let x = design_matrix(&units, &covariates).stage(Stage::Join)?;

    let gibbs = config.regress.gibbs(seed);
    let regression = regress(&fit.smoothed, &x, RESPONSE_NAME, &covariates.names, &gibbs, exec).stage(Stage::Regress)?;
    warnings.extend(regression.report.warnings.iter().cloned());
    write_json(&out.file("regression.json"), &regression.report).stage(Stage::Regress)?;
    if config.regress.write_draws {
        tables::write_draws(&out.file("draws.csv"), &regression.posterior, &regression.names).stage(Stage::Regress)?;
    }

    let mut descriptives = vec![DescriptiveRow::new(RESPONSE_NAME, &fit.smoothed)];
    for (j, name) in covariates.names.iter().enumerate() {
        let column: Vec<f64> = x.column(j).iter().copied().collect();
        descriptives.push(DescriptiveRow::new(name, &column));
    }
    let report = CombinedReport::new(descriptives, &regression.report);
    for name in report.write(output).stage(Stage::Report)? {
        out.files.push(name.into());
    }
    if let Some(geojson_path) = &inputs.geojson {
        let values: BTreeMap<String, BTreeMap<String, f64>> = rows
            .iter()
            .map(|r| {
                let props = BTreeMap::from([
                    (RESPONSE_NAME.to_string(), r.smoothed),
                    (format!("{RESPONSE_NAME}_raw"), r.raw),
                ]);
                (r.county_fips.clone(), props)
            })
            .collect();
        geojson::augment(geojson_path, &out.file("smoothed.geojson"), &inputs.id_property, &values).stage(Stage::Report)?;
    }

    write_manifest(config, seed, &mut out).stage(Stage::Report)?;
    Ok(RunSummary {
        output: output.to_path_buf(),
        files: out.files,
        selected: smoothed.selected,
        moran_raw,
        moran_smoothed,
        regression: regression.report,
        warnings,
    })
}

fn write_manifest(config: &PipelineConfig, seed: u64, out: &mut OutputDir) -> Result<()> {
    let inputs = config
        .input_files()
        .into_iter()
        .map(|(role, path)| {
            Ok(InputRecord { role: role.into(), path: portable(&relative_to(path, &out.dir)), sha256: sha256_file(path)? })
        })
        .collect::<Result<Vec<_>>>()?;
    let outputs = out
        .files
        .iter()
        .map(|name| Ok(OutputRecord { path: name.clone(), sha256: sha256_file(&out.dir.join(name))? }))
        .collect::<Result<Vec<_>>>()?;
    let mut echo = config.clone();
    echo.seed = Some(seed);
    echo.map_paths(|p| relative_to(p, &out.dir));
    echo.runtime = Default::default();
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        core_version: arealrisk_core::VERSION.into(),
        seed,
        config: echo,
        inputs,
        outputs,
    };
    write_json(&out.file("manifest.json"), &manifest)
}
