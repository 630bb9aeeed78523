//! Pipeline configuration: a TOML file with one flat section per stage.
//!
//! ```toml
//! seed = 42
//!
//! [inputs]
//! survey = "survey.csv"
//! geojson = "counties.geojson"
//! covariates = "covariates.csv"
//! tracks = "tracks.csv"
//! events = "events.csv"
//! elevation = "elevation.asc"
//!
//! [smooth]
//! response = "auto"
//! ```
//!
//! Relative paths are resolved against the directory holding the file. A
//! run manifest is also accepted as a configuration, which replays the run.

use std::path::{Component, Path, PathBuf};

use arealrisk_core::aggregate::Response;
use arealrisk_core::bayes::GibbsConfig;
use arealrisk_core::exposure::{DEFAULT_BUFFER_RADIUS_MILES, DEFAULT_CUTOFF_YEAR, DEFAULT_ELEVATION_THRESHOLD_FT};
use arealrisk_core::graph::{WeightScheme, DEFAULT_SNAP};
use arealrisk_core::moran::DEFAULT_PERMUTATIONS;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats::geojson::DEFAULT_ID_PROPERTY;
use crate::formats::read_text;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub inputs: Inputs,
    #[serde(default)]
    pub score: ScoreSettings,
    #[serde(default)]
    pub graph: GraphSettings,
    #[serde(default)]
    pub moran: MoranSettings,
    #[serde(default)]
    pub smooth: SmoothSettings,
    #[serde(default)]
    pub exposure: ExposureSettings,
    #[serde(default)]
    pub regress: RegressSettings,
    /// Where and how to run; never part of the manifest.
    #[serde(default, skip_serializing)]
    pub runtime: RuntimeSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inputs {
    pub survey: PathBuf,
    /// Edge list; when absent the graph is built from `geojson`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adjacency: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geojson: Option<PathBuf>,
    #[serde(default = "default_id_property")]
    pub id_property: String,
    pub covariates: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tracks: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub events: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elevation: Option<PathBuf>,
}

fn default_id_property() -> String {
    DEFAULT_ID_PROPERTY.into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScoreSettings {
    pub factors: usize,
}

impl Default for ScoreSettings {
    fn default() -> Self {
        Self { factors: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GraphSettings {
    /// Boundary distance at or below which polygons count as touching.
    pub snap: f64,
}

impl Default for GraphSettings {
    fn default() -> Self {
        Self { snap: DEFAULT_SNAP }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MoranSettings {
    pub permutations: usize,
    pub weights: WeightScheme,
}

impl Default for MoranSettings {
    fn default() -> Self {
        Self { permutations: DEFAULT_PERMUTATIONS, weights: WeightScheme::RowStandardized }
    }
}

/// Which county response to smooth and regress.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResponseChoice {
    Auto,
    Mean,
    Q1,
    Q3,
}

impl ResponseChoice {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "auto" => Some(Self::Auto),
            other => Response::parse(other).map(Self::from),
        }
    }

    /// Candidate responses, in the order they are fitted.
    pub fn candidates(self) -> Vec<Response> {
        match self {
            Self::Auto => Response::ALL.to_vec(),
            Self::Mean => vec![Response::Mean],
            Self::Q1 => vec![Response::Q1],
            Self::Q3 => vec![Response::Q3],
        }
    }
}

impl From<Response> for ResponseChoice {
    fn from(r: Response) -> Self {
        match r {
            Response::Mean => Self::Mean,
            Response::Q1 => Self::Q1,
            Response::Q3 => Self::Q3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SmoothSettings {
    pub response: ResponseChoice,
    /// Scale each unit's conditional variance by its SRS variance.
    pub unit_variances: bool,
}

impl Default for SmoothSettings {
    fn default() -> Self {
        Self { response: ResponseChoice::Auto, unit_variances: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExposureSettings {
    /// Track buffer radius, in the units of the polygon coordinates.
    pub radius: f64,
    /// Elevation threshold, in the units of the grid values.
    pub threshold: f64,
    /// Spacing of the area-sampling lattice.
    pub resolution: f64,
    pub cutoff_year: i32,
}

impl Default for ExposureSettings {
    fn default() -> Self {
        Self {
            radius: DEFAULT_BUFFER_RADIUS_MILES,
            threshold: DEFAULT_ELEVATION_THRESHOLD_FT,
            resolution: 1.0,
            cutoff_year: DEFAULT_CUTOFF_YEAR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegressSettings {
    pub chains: usize,
    pub burn: usize,
    pub keep: usize,
    pub thin: usize,
    pub prior_sd: f64,
    pub write_draws: bool,
}

impl Default for RegressSettings {
    fn default() -> Self {
        let g = GibbsConfig::new(0);
        Self { chains: g.n_chains, burn: g.n_burn, keep: g.n_keep, thin: g.thin, prior_sd: g.prior_sd_beta, write_draws: false }
    }
}

impl RegressSettings {
    pub fn gibbs(&self, seed: u64) -> GibbsConfig {
        GibbsConfig {
            n_chains: self.chains,
            n_burn: self.burn,
            n_keep: self.keep,
            thin: self.thin,
            seed,
            prior_sd_beta: self.prior_sd,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RuntimeSettings {
    pub output: Option<PathBuf>,
    pub workers: Option<usize>,
}

#[derive(Deserialize)]
struct ManifestConfig {
    config: PipelineConfig,
}

impl PipelineConfig {
    /// Minimal configuration; every stage uses its defaults.
    pub fn new(survey: PathBuf, covariates: PathBuf) -> Self {
        Self {
            seed: None,
            inputs: Inputs {
                survey,
                adjacency: None,
                geojson: None,
                id_property: default_id_property(),
                covariates,
                tracks: None,
                events: None,
                elevation: None,
            },
            score: ScoreSettings::default(),
            graph: GraphSettings::default(),
            moran: MoranSettings::default(),
            smooth: SmoothSettings::default(),
            exposure: ExposureSettings::default(),
            regress: RegressSettings::default(),
            runtime: RuntimeSettings::default(),
        }
    }

    /// Reads a TOML configuration or a JSON run manifest.
    pub fn load(path: &Path) -> Result<Self> {
        let text = read_text(path)?;
        let mut config = if text.trim_start().starts_with('{') {
            serde_json::from_str::<ManifestConfig>(&text).map_err(|e| Error::format(path, e))?.config
        } else {
            toml::from_str::<PipelineConfig>(&text).map_err(|e| Error::format(path, e))?
        };
        let base = path.parent().unwrap_or(Path::new(""));
        config.map_paths(|p| base.join(p));
        Ok(config)
    }

    pub(crate) fn map_paths(&mut self, f: impl Fn(&Path) -> PathBuf) {
        let i = &mut self.inputs;
        for p in [&mut i.survey, &mut i.covariates] {
            *p = f(p);
        }
        for p in [&mut i.adjacency, &mut i.geojson, &mut i.tracks, &mut i.events, &mut i.elevation].into_iter().flatten() {
            *p = f(p);
        }
        if let Some(out) = &mut self.runtime.output {
            *out = f(out);
        }
    }

    /// Labelled input paths, in a fixed order.
    pub fn input_files(&self) -> Vec<(&'static str, &Path)> {
        let i = &self.inputs;
        let mut out = vec![("survey", i.survey.as_path())];
        let optional = [("adjacency", &i.adjacency), ("geojson", &i.geojson)];
        out.extend(optional.into_iter().filter_map(|(k, p)| p.as_deref().map(|p| (k, p))));
        out.push(("covariates", i.covariates.as_path()));
        let hazard = [("tracks", &i.tracks), ("events", &i.events), ("elevation", &i.elevation)];
        out.extend(hazard.into_iter().filter_map(|(k, p)| p.as_deref().map(|p| (k, p))));
        out
    }

    /// Whether the exposure stage runs. Its inputs come as a set.
    pub fn has_exposure(&self) -> Result<bool> {
        let i = &self.inputs;
        let given = [&i.tracks, &i.events, &i.elevation].iter().filter(|p| p.is_some()).count();
        match given {
            0 => Ok(false),
            3 if i.geojson.is_some() => Ok(true),
            3 => Err(Error::Config("exposure covariates need county polygons (inputs.geojson)".into())),
            _ => Err(Error::Config("tracks, events and elevation must be given together".into())),
        }
    }

    /// Checks everything that can be checked before reading inputs.
    pub fn validate(&self) -> Result<()> {
        for (role, path) in self.input_files() {
            if !path.is_file() {
                return Err(Error::Config(format!("{role} input {} does not exist", path.display())));
            }
        }
        if self.inputs.adjacency.is_none() && self.inputs.geojson.is_none() {
            return Err(Error::Config("either inputs.adjacency or inputs.geojson is required".into()));
        }
        self.has_exposure()?;
        if self.seed.is_none() {
            return Err(Error::Config("a seed is required: the moran and regress stages are stochastic".into()));
        }
        if self.score.factors == 0 {
            return Err(Error::Config("score.factors must be at least 1".into()));
        }
        self.regress.gibbs(0).validate()?;
        Ok(())
    }
}

/// `target` relative to the directory `base`; both are made absolute first.
pub fn relative_to(target: &Path, base: &Path) -> PathBuf {
    let absolute = |p: &Path| {
        let p = if p.is_absolute() { p.to_path_buf() } else { std::env::current_dir().unwrap_or_default().join(p) };
        normalize(&p)
    };
    let (target, base) = (absolute(target), absolute(base));
    let t: Vec<Component> = target.components().collect();
    let b: Vec<Component> = base.components().collect();
    let common = t.iter().zip(&b).take_while(|(x, y)| x == y).count();
    let mut out = PathBuf::new();
    for _ in common..b.len() {
        out.push("..");
    }
    for c in &t[common..] {
        out.push(c.as_os_str());
    }
    out
}

/// Lexical normalization: drops `.` and folds `..`.
fn normalize(path: &Path) -> PathBuf {
    let mut out = PathBuf::new();
    for c in path.components() {
        match c {
            Component::CurDir => {}
            Component::ParentDir => {
                out.pop();
            }
            other => out.push(other.as_os_str()),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_paths() {
        assert_eq!(relative_to(Path::new("/a/b/c.csv"), Path::new("/a/out")), PathBuf::from("../b/c.csv"));
        assert_eq!(relative_to(Path::new("/a/out/x.csv"), Path::new("/a/out")), PathBuf::from("x.csv"));
        assert_eq!(relative_to(Path::new("/a/./b/../c.csv"), Path::new("/a")), PathBuf::from("c.csv"));
    }

    #[test]
    fn toml_defaults_and_unknown_keys() {
        let c: PipelineConfig = toml::from_str("seed = 3\n[inputs]\nsurvey = \"s.csv\"\ncovariates = \"c.csv\"\nadjacency = \"a.csv\"\n").unwrap();
        assert_eq!(c.seed, Some(3));
        assert_eq!(c.smooth.response, ResponseChoice::Auto);
        assert_eq!(c.moran.permutations, 999);
        assert_eq!(c.exposure.radius, 50.0);
        assert_eq!(c.regress.keep, 10_000);
        assert!(toml::from_str::<PipelineConfig>("[inputs]\nsurvey = \"s\"\ncovariates = \"c\"\nbogus = 1\n").is_err());
        let c: PipelineConfig = toml::from_str("[inputs]\nsurvey = \"s\"\ncovariates = \"c\"\n[smooth]\nresponse = \"q3\"\n").unwrap();
        assert_eq!(c.smooth.response.candidates(), vec![Response::Q3]);
    }

    #[test]
    fn runtime_is_not_serialized() {
        let mut c = PipelineConfig::new("s.csv".into(), "c.csv".into());
        c.runtime.workers = Some(8);
        let json = serde_json::to_string(&c).unwrap();
        assert!(!json.contains("runtime") && !json.contains("workers"));
    }
}
