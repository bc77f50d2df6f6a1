//! Experiment configuration: `[scenario]`, `[glnn]`, `[wmmse]` and
//! `[experiment]` sections of one key=value file.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use glnn_core::channel::{Phase, ScenarioConfig};
use glnn_core::glnn::GlnnConfig;
use glnn_core::kvconfig::{parse_pairs, KvConfig, Section};
use glnn_core::wmmse::WmmseConfig;

pub const MAX_RESTARTS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExperimentKind {
    SeVsPower,
    SeVsCee,
    Dynamic,
    Timing,
    Selftest,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::SeVsPower => "se-vs-power",
            ExperimentKind::SeVsCee => "se-vs-cee",
            ExperimentKind::Dynamic => "dynamic",
            ExperimentKind::Timing => "timing",
            ExperimentKind::Selftest => "selftest",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Row labels. Only `Glnn` and `Wmmse` can be selected with `--algorithms`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Algorithm {
    Glnn,
    Wmmse,
    UpperBound,
    PhaseBoundary,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Glnn => "glnn",
            Algorithm::Wmmse => "wmmse",
            Algorithm::UpperBound => "upper_bound",
            Algorithm::PhaseBoundary => "phase_boundary",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "glnn" => Ok(Algorithm::Glnn),
            "wmmse" => Ok(Algorithm::Wmmse),
            other => Err(format!("unknown algorithm `{other}` (expected glnn or wmmse)")),
        }
    }
}

/// Sweeps and protocol constants of the four experiments.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSettings {
    pub algorithms: Vec<Algorithm>,
    pub repetitions: usize,
    pub eval_samples: usize,
    pub power_sweep_dbm: Vec<f64>,
    pub cee_sweep_db: Vec<f64>,
    pub cee_power_dbm: f64,
    pub dynamic_phases: Vec<Phase>,
    pub dynamic_cee_db: f64,
    pub timing_antennas: Vec<usize>,
    pub timing_samples: usize,
    pub timing_warmup: usize,
    pub smoothing_window: usize,
    /// Best-of-R GLNN restarts on perfect CSI; 0 disables the upper bound.
    pub restarts: usize,
    pub lambda_search: bool,
    pub lambda_grid: Vec<f64>,
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        Self {
            algorithms: vec![Algorithm::Glnn, Algorithm::Wmmse],
            repetitions: 1,
            eval_samples: 500,
            power_sweep_dbm: vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0],
            cee_sweep_db: vec![-20.0, -15.0, -10.0, -5.0, 0.0],
            cee_power_dbm: 10.0,
            dynamic_phases: vec![
                Phase { speed: 6.0, slots: 700 },
                Phase { speed: 15.0, slots: 600 },
                Phase { speed: 30.0, slots: 500 },
            ],
            dynamic_cee_db: -10.0,
            timing_antennas: vec![32, 64, 96, 128, 160],
            timing_samples: 50,
            timing_warmup: 5,
            smoothing_window: 50,
            restarts: 0,
            lambda_search: false,
            lambda_grid: vec![1.5, 2.0, 2.5, 3.0],
        }
    }
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(", ")
}

impl ExperimentSettings {
    pub fn validate(&self) -> Result<()> {
        if self.algorithms.is_empty() {
            bail!("[experiment] key `algorithms`: at least one algorithm is required");
        }
        if self.repetitions == 0 {
            bail!("[experiment] key `repetitions` must be >= 1");
        }
        if self.eval_samples == 0 {
            bail!("[experiment] key `eval_samples` must be >= 1");
        }
        for (key, empty) in [
            ("power_sweep_dbm", self.power_sweep_dbm.is_empty()),
            ("cee_sweep_db", self.cee_sweep_db.is_empty()),
            ("dynamic_phases", self.dynamic_phases.is_empty()),
            ("timing_antennas", self.timing_antennas.is_empty()),
            ("lambda_grid", self.lambda_grid.is_empty()),
        ] {
            if empty {
                bail!("[experiment] key `{key}`: sweep must not be empty");
            }
        }
        if self.timing_samples == 0 {
            bail!("[experiment] key `timing_samples` must be >= 1");
        }
        if self.smoothing_window == 0 {
            bail!("[experiment] key `smoothing_window` must be >= 1");
        }
        if self.restarts > MAX_RESTARTS {
            bail!("[experiment] key `restarts` must be at most {MAX_RESTARTS}");
        }
        if self.timing_antennas.contains(&0) {
            bail!("[experiment] key `timing_antennas`: antenna counts must be >= 1");
        }
        if self.dynamic_phases.iter().any(|p| p.slots == 0 || !(p.speed >= 0.0)) {
            bail!("[experiment] key `dynamic_phases`: every phase needs slots >= 1 and speed >= 0");
        }
        if self.lambda_grid.iter().any(|l| !(*l > 0.0)) {
            bail!("[experiment] key `lambda_grid`: values must be positive");
        }
        Ok(())
    }

    pub fn apply_section(&mut self, mut s: Section) -> Result<()> {
        if let Some(v) = s.take_str("algorithms") {
            self.algorithms = parse_algorithms(&v).context("[experiment] key `algorithms`")?;
        }
        if let Some(v) = s.take("repetitions")? {
            self.repetitions = v;
        }
        if let Some(v) = s.take("eval_samples")? {
            self.eval_samples = v;
        }
        if let Some(v) = s.take_list("power_sweep_dbm")? {
            self.power_sweep_dbm = v;
        }
        if let Some(v) = s.take_list("cee_sweep_db")? {
            self.cee_sweep_db = v;
        }
        if let Some(v) = s.take("cee_power_dbm")? {
            self.cee_power_dbm = v;
        }
        if let Some(v) = s.take_str("dynamic_phases") {
            let p = parse_pairs::<f64, usize>(&v)
                .map_err(|bad| anyhow::anyhow!("[experiment] key `dynamic_phases`: cannot parse `{bad}`"))?;
            self.dynamic_phases = p.into_iter().map(|(speed, slots)| Phase { speed, slots }).collect();
        }
        if let Some(v) = s.take("dynamic_cee_db")? {
            self.dynamic_cee_db = v;
        }
        if let Some(v) = s.take_list("timing_antennas")? {
            self.timing_antennas = v;
        }
        if let Some(v) = s.take("timing_samples")? {
            self.timing_samples = v;
        }
        if let Some(v) = s.take("timing_warmup")? {
            self.timing_warmup = v;
        }
        if let Some(v) = s.take("smoothing_window")? {
            self.smoothing_window = v;
        }
        if let Some(v) = s.take("restarts")? {
            self.restarts = v;
        }
        if let Some(v) = s.take("lambda_search")? {
            self.lambda_search = v;
        }
        if let Some(v) = s.take_list("lambda_grid")? {
            self.lambda_grid = v;
        }
        s.finish()?;
        self.validate()
    }

    pub fn to_kv_lines(&self) -> Vec<String> {
        let algs: Vec<&str> = self.algorithms.iter().map(|a| a.name()).collect();
        let phases: Vec<String> = self.dynamic_phases.iter().map(|p| format!("{}:{}", p.speed, p.slots)).collect();
        vec![
            format!("algorithms = {}", algs.join(", ")),
            format!("repetitions = {}", self.repetitions),
            format!("eval_samples = {}", self.eval_samples),
            format!("power_sweep_dbm = {}", join(&self.power_sweep_dbm)),
            format!("cee_sweep_db = {}", join(&self.cee_sweep_db)),
            format!("cee_power_dbm = {}", self.cee_power_dbm),
            format!("dynamic_phases = {}", phases.join(", ")),
            format!("dynamic_cee_db = {}", self.dynamic_cee_db),
            format!("timing_antennas = {}", join(&self.timing_antennas)),
            format!("timing_samples = {}", self.timing_samples),
            format!("timing_warmup = {}", self.timing_warmup),
            format!("smoothing_window = {}", self.smoothing_window),
            format!("restarts = {}", self.restarts),
            format!("lambda_search = {}", self.lambda_search),
            format!("lambda_grid = {}", join(&self.lambda_grid)),
        ]
    }
}

/// Parses `glnn, wmmse`; duplicates are dropped, order is canonical.
pub fn parse_algorithms(s: &str) -> Result<Vec<Algorithm>> {
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let a: Algorithm = item.parse().map_err(anyhow::Error::msg)?;
        if !out.contains(&a) {
            out.push(a);
        }
    }
    out.sort();
    if out.is_empty() {
        bail!("empty algorithm list");
    }
    Ok(out)
}

/// Everything a run needs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LabConfig {
    pub scenario: ScenarioConfig,
    pub glnn: GlnnConfig,
    pub wmmse: WmmseConfig,
    pub experiment: ExperimentSettings,
}

impl LabConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = KvConfig::parse(text)?;
        let mut cfg = LabConfig::default();
        cfg.scenario.apply_section(kv.take_section("scenario"))?;
        cfg.glnn.apply_section(kv.take_section("glnn"))?;
        cfg.wmmse.apply_section(kv.take_section("wmmse"))?;
        cfg.experiment.apply_section(kv.take_section("experiment"))?;
        kv.finish()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn seed(&self) -> u64 {
        self.scenario.seed
    }

    /// Resolved config in the format [`parse`](Self::parse) reads.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (name, lines) in [
            ("scenario", self.scenario.to_kv_lines()),
            ("glnn", self.glnn.to_kv_lines()),
            ("wmmse", self.wmmse.to_kv_lines()),
            ("experiment", self.experiment.to_kv_lines()),
        ] {
            out.push_str(&format!("[{name}]\n"));
            for l in lines {
                out.push_str(&l);
                out.push('\n');
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolved_text_parses_back() {
        let mut cfg = LabConfig::default();
        cfg.experiment.cee_sweep_db = vec![-7.5];
        cfg.experiment.restarts = 4;
        cfg.scenario.seed = 99;
        assert_eq!(LabConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_and_sections_name_the_culprit() {
        let e = LabConfig::parse("[experiment]\nrepetitons = 2\n").unwrap_err();
        assert!(format!("{e:#}").contains("repetitons"), "{e:#}");
        let e = LabConfig::parse("[plots]\nwidth = 3\n").unwrap_err();
        assert!(format!("{e:#}").contains("plots"), "{e:#}");
        let e = LabConfig::parse("[experiment]\nrepetitions = 0\n").unwrap_err();
        assert!(format!("{e:#}").contains("repetitions"), "{e:#}");
        let e = LabConfig::parse("[experiment]\ncee_sweep_db =\n").unwrap_err();
        assert!(format!("{e:#}").contains("cee_sweep_db"), "{e:#}");
    }

    #[test]
    fn algorithm_lists() {
        assert_eq!(parse_algorithms("wmmse, glnn, wmmse").unwrap(), vec![Algorithm::Glnn, Algorithm::Wmmse]);
        assert!(parse_algorithms("glnn, zf").is_err());
        assert!(parse_algorithms(" , ").is_err());
    }
}
