use std::fs;
use std::path::{Path, PathBuf};

use arealrisk::pipeline::build_graph;
use arealrisk::{fixture, run_pipeline, PipelineConfig, Stage, Threads};
use tempfile::TempDir;

const INPUTS: [&str; 8] =
    ["survey.csv", "counties.geojson", "adjacency.csv", "covariates.csv", "tracks.csv", "events.csv", "elevation.asc", "config.toml"];

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/synthetic")
}

fn fixture_copy() -> TempDir {
    let tmp = tempfile::tempdir().unwrap();
    for name in INPUTS {
        fs::copy(fixture_dir().join(name), tmp.path().join(name)).unwrap();
    }
    tmp
}

/// Fixture inputs with a cheap sampler and no hazard inputs.
fn light_config(dir: &Path, adjacency: bool) -> PipelineConfig {
    let graph = if adjacency { "adjacency = \"adjacency.csv\"" } else { "geojson = \"counties.geojson\"" };
    let text = format!(
        "seed = 7\n[inputs]\nsurvey = \"survey.csv\"\n{graph}\ncovariates = \"covariates.csv\"\n\
         [moran]\npermutations = 99\n[regress]\nchains = 2\nburn = 100\nkeep = 400\n"
    );
    fs::write(dir.join("light.toml"), text).unwrap();
    PipelineConfig::load(&dir.join("light.toml")).unwrap()
}

fn filter_lines(path: &Path, keep: impl Fn(&str) -> bool) {
    let text = fs::read_to_string(path).unwrap();
    let kept: String = text.lines().enumerate().filter(|(k, l)| *k == 0 || keep(l)).map(|(_, l)| format!("{l}\n")).collect();
    fs::write(path, kept).unwrap();
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn light_run_writes_outputs() {
    let tmp = fixture_copy();
    let summary = run_pipeline(&light_config(tmp.path(), true), &tmp.path().join("out"), &Threads::new(2)).unwrap();
    assert!(summary.files.contains(&"manifest.json".to_string()));
    assert!(!summary.files.contains(&"exposure.csv".to_string()));
    assert!(summary.moran_raw.i > summary.moran_raw.expected);
    // No polygons, so no map output.
    assert!(!tmp.path().join("out/smoothed.geojson").exists());
}

#[test]
fn missing_input_names_the_path() {
    let tmp = fixture_copy();
    let config = light_config(tmp.path(), true);
    fs::remove_file(tmp.path().join("covariates.csv")).unwrap();
    let err = run_pipeline(&config, &tmp.path().join("out"), &Threads::new(1)).unwrap_err();
    assert_eq!(err.stage(), Some(Stage::Config));
    assert!(err.to_string().contains("covariates.csv"), "{err}");
}

#[test]
fn isolated_county_aborts_the_graph_stage() {
    let tmp = fixture_copy();
    let mut adjacency = fs::read_to_string(tmp.path().join("adjacency.csv")).unwrap();
    adjacency.push_str("22099,\n");
    fs::write(tmp.path().join("adjacency.csv"), adjacency).unwrap();
    let err = run_pipeline(&light_config(tmp.path(), true), &tmp.path().join("out"), &Threads::new(1)).unwrap_err();
    assert_eq!(err.stage(), Some(Stage::Graph));
    assert!(err.to_string().contains("22099"), "{err}");
}

#[test]
fn graph_unit_without_respondents_is_an_error() {
    let tmp = fixture_copy();
    filter_lines(&tmp.path().join("survey.csv"), |l| !l.contains(",22005,"));
    let err = run_pipeline(&light_config(tmp.path(), true), &tmp.path().join("out"), &Threads::new(1)).unwrap_err();
    assert!(err.to_string().contains("22005"), "{err}");
}

#[test]
fn survey_unit_outside_graph_is_a_warning() {
    let tmp = fixture_copy();
    let mut survey = fs::read_to_string(tmp.path().join("survey.csv")).unwrap();
    survey.push_str("X1,99999,increased,increased,unchanged\nX2,99999,decreased,na,unchanged\n");
    fs::write(tmp.path().join("survey.csv"), survey).unwrap();
    let summary = run_pipeline(&light_config(tmp.path(), true), &tmp.path().join("out"), &Threads::new(1)).unwrap();
    assert!(summary.warnings.iter().any(|w| w.contains("99999")), "{:?}", summary.warnings);
}

#[test]
fn missing_covariates_are_listed() {
    let tmp = fixture_copy();
    filter_lines(&tmp.path().join("covariates.csv"), |l| !l.starts_with("22007,"));
    let err = run_pipeline(&light_config(tmp.path(), true), &tmp.path().join("out"), &Threads::new(1)).unwrap_err();
    assert_eq!(err.stage(), Some(Stage::Join));
    assert!(err.to_string().contains("22007"), "{err}");
}

#[test]
fn exposure_inputs_come_as_a_set() {
    let tmp = fixture_copy();
    let text = "seed = 1\n[inputs]\nsurvey = \"survey.csv\"\ngeojson = \"counties.geojson\"\n\
                covariates = \"covariates.csv\"\ntracks = \"tracks.csv\"\n";
    fs::write(tmp.path().join("c.toml"), text).unwrap();
    let config = PipelineConfig::load(&tmp.path().join("c.toml")).unwrap();
    let err = run_pipeline(&config, &tmp.path().join("out"), &Threads::new(1)).unwrap_err();
    assert_eq!(err.stage(), Some(Stage::Config));
}

#[test]
fn unknown_config_keys_are_rejected() {
    let tmp = fixture_copy();
    fs::write(tmp.path().join("c.toml"), "seed = 1\nsneed = 2\n[inputs]\nsurvey = \"s\"\ncovariates = \"c\"\n").unwrap();
    assert!(PipelineConfig::load(&tmp.path().join("c.toml")).is_err());
}

#[test]
fn manifest_replay_reproduces_outputs() {
    let tmp = fixture_copy();
    let first = tmp.path().join("first");
    run_pipeline(&light_config(tmp.path(), false), &first, &Threads::new(3)).unwrap();
    let replay = PipelineConfig::load(&first.join("manifest.json")).unwrap();
    let second = tmp.path().join("second");
    run_pipeline(&replay, &second, &Threads::new(1)).unwrap();
    assert_eq!(files(&first), files(&second));
}

#[test]
fn bundled_adjacency_matches_polygon_contiguity() {
    let dir = fixture_dir();
    let from_edges = build_graph(Some(&dir.join("adjacency.csv")), None, "GEOID", 1e-6).unwrap().graph;
    let from_polygons = build_graph(None, Some(&dir.join("counties.geojson")), "GEOID", 1e-6).unwrap().graph;
    assert_eq!(from_edges.unit_labels(), from_polygons.unit_labels());
    assert_eq!(from_edges.edges(), from_polygons.edges());
}

#[test]
fn simulate_reproduces_bundled_fixture() {
    let tmp = tempfile::tempdir().unwrap();
    let written = fixture::simulate(tmp.path(), 42).unwrap();
    assert!(written.contains(&"truth.json"));
    for name in written {
        assert!(
            fs::read(tmp.path().join(name)).unwrap() == fs::read(fixture_dir().join(name)).unwrap(),
            "{name} differs from the bundled fixture"
        );
    }
}

#[test]
fn simulate_depends_on_seed() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    fixture::simulate(a.path(), 1).unwrap();
    fixture::simulate(b.path(), 2).unwrap();
    assert_ne!(fs::read(a.path().join("survey.csv")).unwrap(), fs::read(b.path().join("survey.csv")).unwrap());
}
