//! Experiment definitions and their on-disk artefacts.
//!
//! An [`ExperimentConfig`] is a JSON document naming a plant, a noise law,
//! the algorithms to compare and the Monte Carlo budget. [`Experiment`]
//! validates it, solves the hyper-parameters once and runs one batch per
//! algorithm. Results are exported as one CSV per algorithm plus
//! `summary.json`; both formats are described in the README.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::arx::{ArxError, ArxParams};
use crate::control::{
    solve_hyperparams, Algorithm, ControlError, Episode, ExplorationSchedule, HyperConfig, HyperParams, ThetaSet,
};
use crate::noise::{NoiseKind, NoiseModel};
use crate::presets::Preset;
use crate::simulation::{run_batch, BatchResult, RunTrace, Scenario};

/// Column order of the per-step CSV files.
pub const CSV_COLUMNS: [&str; 13] = [
    "algorithm",
    "run_id",
    "t",
    "y",
    "u",
    "w",
    "r_inst",
    "regret_cum",
    "est_err",
    "n_explore",
    "lambda_min_I",
    "mode",
    "clipped",
];

pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("plant assumption violated: {0}")]
    Assumption(ArxError),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl ExperimentError {
    /// Process exit status for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Assumption(_) => 2,
            ExperimentError::Config(_) | ExperimentError::Io(_) => 1,
        }
    }
}

fn arx_error(e: ArxError) -> ExperimentError {
    match e {
        ArxError::Unstable { .. } | ArxError::MarginOverflow { .. } => ExperimentError::Assumption(e),
        other => ExperimentError::Config(other.to_string()),
    }
}

impl From<ControlError> for ExperimentError {
    fn from(e: ControlError) -> Self {
        match e {
            ControlError::Plant(a) => arx_error(a),
            other => ExperimentError::Config(other.to_string()),
        }
    }
}

/// Explicit plant coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coefficients {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

/// A preset name such as `"example2"` or `{"a": [...], "b": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PlantSpec {
    Preset(Preset),
    Coefficients(Coefficients),
}

impl PlantSpec {
    pub fn params(&self) -> Result<ArxParams, ExperimentError> {
        match self {
            PlantSpec::Preset(p) => Ok(p.params()),
            PlantSpec::Coefficients(c) => ArxParams::new(c.a.clone(), c.b.clone()).map_err(arx_error),
        }
    }
}

/// Noise law. `sigma` is required except for `bounded_uniform`, which may be
/// given by its `bound` alone. A missing `bound` falls back to the default
/// rule of the kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
}

impl NoiseSpec {
    pub fn model(&self) -> Result<NoiseModel, ExperimentError> {
        let model = match (self.kind, self.sigma, self.bound) {
            (NoiseKind::BoundedUniform, _, Some(bound)) => NoiseModel::bounded_uniform(bound),
            (kind, Some(sigma), None) => NoiseModel::with_default_bound(kind, sigma),
            (kind, Some(sigma), Some(bound)) => NoiseModel { kind, sigma, bound },
            (_, None, _) => return Err(ExperimentError::Config("noise.sigma is required for this kind".into())),
        };
        model.validate().map_err(ExperimentError::Config)?;
        Ok(model)
    }
}

/// Optional box prior used for the hyper-parameters instead of the true plant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    #[serde(default = "default_points")]
    pub points: usize,
}

fn default_points() -> usize {
    3
}

fn default_algorithms() -> Vec<Algorithm> {
    vec![Algorithm::Piece, Algorithm::Lw, Algorithm::Ce]
}

fn default_runs() -> usize {
    50
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub plant: PlantSpec,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<Algorithm>,
    pub noise: NoiseSpec,
    #[serde(alias = "T")]
    pub horizon: usize,
    #[serde(default = "default_runs")]
    pub n_runs: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub overrides: HyperConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<PriorBox>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        serde_json::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ExperimentError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// SHA-256 of the normalised config (defaults filled in), hex encoded.
    pub fn fingerprint(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serialises");
        Sha256::digest(canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Validated experiment with its hyper-parameters solved.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub plant: ArxParams,
    pub noise: NoiseModel,
    pub hp: HyperParams,
    pub fingerprint: String,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self, ExperimentError> {
        if config.horizon == 0 {
            return Err(ExperimentError::Config("horizon must be at least 1".into()));
        }
        if config.n_runs == 0 {
            return Err(ExperimentError::Config("n_runs must be at least 1".into()));
        }
        if config.algorithms.is_empty() {
            return Err(ExperimentError::Config("algorithms must not be empty".into()));
        }
        let mut seen = config.algorithms.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != config.algorithms.len() {
            return Err(ExperimentError::Config("algorithms contains duplicates".into()));
        }
        let plant = config.plant.params()?;
        plant.check_assumptions().map_err(arx_error)?;
        let noise = config.noise.model()?;
        let set = match &config.prior {
            None => ThetaSet::Singleton(plant.clone()),
            Some(b) => {
                if b.lower.len() != plant.p() + plant.q() {
                    return Err(ExperimentError::Config(format!(
                        "prior bounds have length {}, expected p + q = {}",
                        b.lower.len(),
                        plant.p() + plant.q()
                    )));
                }
                let theta = plant.theta();
                let inside = theta.iter().zip(&b.lower).zip(&b.upper).all(|((t, l), u)| l <= t && t <= u);
                if !inside {
                    return Err(ExperimentError::Config("plant lies outside the prior box".into()));
                }
                ThetaSet::Box { lower: b.lower.clone(), upper: b.upper.clone(), p: plant.p(), points: b.points }
            }
        };
        let hp = solve_hyperparams(&set, &noise, config.horizon, &config.overrides)?;
        let fingerprint = config.fingerprint();
        Ok(Self { config, plant, noise, hp, fingerprint })
    }

    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        Self::new(ExperimentConfig::from_json(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        Self::new(ExperimentConfig::load(path)?)
    }

    pub fn scenario(&self) -> Scenario {
        Scenario { plant: self.plant.clone(), noise: self.noise, hp: self.hp.clone(), horizon: self.config.horizon }
    }

    /// PIECE timetable before the warm-up is known.
    pub fn planned_schedule(&self) -> ExplorationSchedule {
        ExplorationSchedule::piece(self.hp.h, self.hp.unbounded_mode, self.config.horizon)
    }

    /// One batch per configured algorithm, in config order.
    pub fn run(&self, jobs: Option<usize>) -> Vec<BatchResult> {
        let scenario = self.scenario();
        self.config
            .algorithms
            .iter()
            .map(|&alg| run_batch(&scenario, alg, self.config.n_runs, self.config.master_seed, jobs))
            .collect()
    }

    pub fn hyper_report(&self) -> Result<HyperReport, ExperimentError> {
        let profile = self.plant.spectral_profile(0.0, self.config.overrides.n_check).map_err(arx_error)?;
        Ok(HyperReport {
            spec_radius_a: profile.spec_radius_a,
            spec_radius_b: profile.spec_radius_b,
            mv_gain_norm: self.plant.mv_gain().norm(),
            hp: self.hp.clone(),
            planned_episodes: self.planned_schedule().episodes(),
        })
    }

    pub fn summary(&self, batches: &[BatchResult]) -> Result<Summary, ExperimentError> {
        let results = batches
            .iter()
            .map(|b| {
                let a = &b.aggregate;
                let entry = AlgorithmSummary {
                    mean_terminal_regret: a.mean_terminal_regret,
                    se_terminal_regret: a.se_terminal_regret,
                    divergences: a.divergences,
                    terminal_regrets: a.terminal_regrets.clone(),
                    mean_regret: a.mean_regret.clone(),
                    se_regret: a.se_regret.clone(),
                    mean_est_err: a.mean_est_err.clone(),
                    episodes: b.traces.iter().map(|t| t.episodes.clone()).collect(),
                };
                (a.algorithm.name().to_string(), entry)
            })
            .collect();
        Ok(Summary {
            fingerprint: self.fingerprint.clone(),
            master_seed: self.config.master_seed,
            horizon: self.config.horizon,
            n_runs: self.config.n_runs,
            config: self.config.clone(),
            plant: PlantInfo { a: self.plant.a().to_vec(), b: self.plant.b().to_vec() },
            noise: self.noise,
            hyperparameters: self.hyper_report()?,
            results,
        })
    }
}

/// Everything `hyperparams` prints, also embedded in the summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HyperReport {
    /// Output-polynomial spectral radius without margin.
    pub spec_radius_a: f64,
    pub spec_radius_b: f64,
    /// `||lambda||_2` of the true plant.
    pub mv_gain_norm: f64,
    #[serde(flatten)]
    pub hp: HyperParams,
    pub planned_episodes: Vec<Episode>,
}

impl fmt::Display for HyperReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let hp = &self.hp;
        writeln!(f, "rho (spectral radius of A)   {:.4}", self.spec_radius_a)?;
        writeln!(f, "spectral radius of B         {:.4}", self.spec_radius_b)?;
        writeln!(f, "rho used for the bounds      {:.6}", hp.rho)?;
        writeln!(f, "C1                           {:.6}", hp.c1)?;
        writeln!(f, "||lambda||_2                 {:.4}", self.mv_gain_norm)?;
        writeln!(f, "sup ||lambda|| over prior    {:.4}", hp.sup_norm_lambda)?;
        writeln!(f, "M(Theta)                     {:.6}", hp.m_theta)?;
        writeln!(f, "B_w                          {:.6}", hp.b_w)?;
        writeln!(f, "delta1                       {:.6e}", hp.delta1)?;
        writeln!(f, "B_u                          {:.6e}", hp.b_u)?;
        writeln!(f, "B2                           {}", hp.b2)?;
        writeln!(f, "m*                           {}", hp.m_star)?;
        writeln!(f, "H                            {}", hp.h)?;
        writeln!(f, "H1                           {}", hp.h1)?;
        let starts: Vec<String> = self.planned_episodes.iter().map(|e| e.start.to_string()).collect();
        write!(f, "planned episode starts       [{}]", starts.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlantInfo {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlgorithmSummary {
    pub mean_terminal_regret: Option<f64>,
    pub se_terminal_regret: Option<f64>,
    pub divergences: usize,
    pub terminal_regrets: Vec<Option<f64>>,
    pub mean_regret: Vec<f64>,
    pub se_regret: Vec<f64>,
    pub mean_est_err: Vec<Option<f64>>,
    /// Realised exploration episodes, one list per run.
    pub episodes: Vec<Vec<Episode>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub fingerprint: String,
    pub master_seed: u64,
    pub horizon: usize,
    pub n_runs: usize,
    pub config: ExperimentConfig,
    pub plant: PlantInfo,
    pub noise: NoiseModel,
    pub hyperparameters: HyperReport,
    pub results: BTreeMap<String, AlgorithmSummary>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

/// Writes the header and the rows of `traces`. With `stride > 1` only
/// `t = 1`, multiples of `stride` and each run's last step are kept.
pub fn write_csv<W: Write>(out: &mut W, traces: &[RunTrace], stride: usize) -> io::Result<()> {
    let stride = stride.max(1);
    writeln!(out, "{}", CSV_COLUMNS.join(","))?;
    for trace in traces {
        let last = trace.steps.len();
        for s in &trace.steps {
            if !(s.t == 1 || s.t % stride == 0 || s.t == last) {
                continue;
            }
            writeln!(
                out,
                "{},{},{},{:?},{:?},{:?},{:?},{:?},{},{},{},{},{}",
                trace.algorithm,
                trace.run_id,
                s.t,
                s.y,
                s.u,
                s.w,
                s.r_inst,
                s.regret_cum,
                opt(s.est_err),
                s.n_explore,
                opt(s.lambda_min_i),
                s.mode.as_str(),
                u8::from(s.clipped),
            )?;
        }
    }
    Ok(())
}

/// Files written by [`write_outputs`].
#[derive(Debug, Clone, PartialEq)]
pub struct OutputFiles {
    pub csv: Vec<PathBuf>,
    pub summary: PathBuf,
}

/// Writes `<algorithm>.csv` for each batch and `summary.json` into `dir`.
pub fn write_outputs(
    dir: &Path,
    exp: &Experiment,
    batches: &[BatchResult],
    stride: usize,
) -> Result<OutputFiles, ExperimentError> {
    std::fs::create_dir_all(dir)?;
    let mut csv = Vec::with_capacity(batches.len());
    for b in batches {
        let path = dir.join(format!("{}.csv", b.aggregate.algorithm));
        let mut w = io::BufWriter::new(std::fs::File::create(&path)?);
        write_csv(&mut w, &b.traces, stride)?;
        w.flush()?;
        csv.push(path);
    }
    let summary = exp.summary(batches)?;
    let path = dir.join(SUMMARY_FILE);
    let mut text = serde_json::to_string_pretty(&summary).map_err(io::Error::from)?;
    text.push('\n');
    std::fs::write(&path, text)?;
    Ok(OutputFiles { csv, summary: path })
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"{"plant": "example2", "algorithms": ["oracle"], "noise": {"kind": "truncated_gaussian", "sigma": 0.6}, "T": 50, "n_runs": 2, "master_seed": 7}"#;

    #[test]
    fn parses_preset_and_defaults() {
        let cfg = ExperimentConfig::from_json(BASIC).unwrap();
        assert_eq!(cfg.plant, PlantSpec::Preset(Preset::Example2));
        assert_eq!(cfg.horizon, 50);
        assert_eq!(cfg.overrides, HyperConfig::default());
        let exp = Experiment::new(cfg).unwrap();
        assert!((exp.noise.bound - 1.8).abs() < 1e-12);
    }

    #[test]
    fn parses_coefficients_and_overrides() {
        let text = r#"{"plant": {"a": [0.5], "b": [1.0, 0.2]}, "noise": {"kind": "bounded_uniform", "bound": 1.0},
            "horizon": 10, "overrides": {"B2": 2.0, "H1": 5, "lambda_scaling": "multiply", "exploration": "rademacher"}}"#;
        let exp = Experiment::from_json(text).unwrap();
        assert_eq!(exp.hp.h1, 5);
        assert_eq!(exp.hp.b2, 2.0);
        assert_eq!(exp.config.algorithms, default_algorithms());
        assert_eq!(exp.config.n_runs, 50);
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = BASIC.replace("\"T\"", "\"horizon_typo\": 3, \"T\"");
        assert!(matches!(ExperimentConfig::from_json(&bad), Err(ExperimentError::Config(_))));
        let bad = BASIC.replace("\"master_seed\": 7", "\"overrides\": {\"b3\": 1.0}");
        assert!(matches!(ExperimentConfig::from_json(&bad), Err(ExperimentError::Config(_))));
    }

    #[test]
    fn exit_codes() {
        let unstable = r#"{"plant": {"a": [1.2], "b": [1.0]}, "noise": {"kind": "gaussian", "sigma": 1.0}, "T": 10}"#;
        let e = Experiment::from_json(unstable).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let nonmin =
            r#"{"plant": {"a": [0.2], "b": [1.0, 2.0]}, "noise": {"kind": "gaussian", "sigma": 1.0}, "T": 10}"#;
        assert_eq!(Experiment::from_json(nonmin).unwrap_err().exit_code(), 2);
        let no_sigma = r#"{"plant": "example1", "noise": {"kind": "gaussian"}, "T": 10}"#;
        assert_eq!(Experiment::from_json(no_sigma).unwrap_err().exit_code(), 1);
        let dup = BASIC.replace("[\"oracle\"]", "[\"ce\", \"ce\"]");
        assert_eq!(Experiment::from_json(&dup).unwrap_err().exit_code(), 1);
    }

    #[test]
    fn fingerprint_tracks_content() {
        let a = ExperimentConfig::from_json(BASIC).unwrap();
        let b = ExperimentConfig::from_json(&BASIC.replace(", ", ",  ")).unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint().len(), 64);
        let c = ExperimentConfig::from_json(&BASIC.replace("7}", "8}")).unwrap();
        assert_ne!(a.fingerprint(), c.fingerprint());
    }

    #[test]
    fn csv_layout_and_stride() {
        let exp = Experiment::from_json(BASIC).unwrap();
        let batches = exp.run(Some(1));
        let mut buf = Vec::new();
        write_csv(&mut buf, &batches[0].traces, 20).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_COLUMNS.join(","));
        // t = 1, 20, 40, 50 for each of two runs
        assert_eq!(lines.len(), 1 + 2 * 4);
        assert!(!text.contains('\r'));
        for line in &lines[1..] {
            let cols: Vec<&str> = line.split(',').collect();
            assert_eq!(cols.len(), CSV_COLUMNS.len());
            assert_eq!(cols[0], "oracle");
            assert_eq!(cols[8], "", "oracle has no estimate");
            assert_eq!(cols[11], "oracle");
            let y: f64 = cols[3].parse().unwrap();
            assert!(y.is_finite());
        }
    }
}
