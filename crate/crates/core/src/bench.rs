//! Resource sweeps over designs, backends, cost models and widths.

use std::collections::BTreeMap;
use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adders::AdderKind;
use crate::circuit::Circuit;
use crate::modmul::{synthesize, Design, MultiplierSpec};
use crate::numtheory::{ceil_log2, sample_modulus, sample_multiplier};
use crate::schedule::{decompose_cry, report, CostModel, ModelKind, ResourceReport};
use crate::verify::{verify_circuit, Strategy};

/// Which multiplier a sweep builds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    OutOfPlace,
    InPlace,
    #[default]
    Controlled,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::OutOfPlace => "out_of_place",
            Mode::InPlace => "in_place",
            Mode::Controlled => "controlled",
        }
    }

    fn apply(self, spec: MultiplierSpec) -> MultiplierSpec {
        match self {
            Mode::OutOfPlace => spec,
            Mode::InPlace => spec.in_place(),
            Mode::Controlled => spec.controlled(),
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        [Mode::OutOfPlace, Mode::InPlace, Mode::Controlled]
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown mode `{s}`"))
    }
}

/// Rotation truncation used when costing Fourier circuits.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TruncateRepr", into = "TruncateRepr")]
pub enum Truncate {
    None,
    /// `ceil(log2 n) + 2` bits.
    #[default]
    Auto,
    Bits(u32),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum TruncateRepr {
    Word(String),
    Bits(u32),
}

impl TryFrom<TruncateRepr> for Truncate {
    type Error = String;

    fn try_from(r: TruncateRepr) -> Result<Self, String> {
        match r {
            TruncateRepr::Bits(k) => Ok(Truncate::Bits(k)),
            TruncateRepr::Word(w) => w.parse(),
        }
    }
}

impl From<Truncate> for TruncateRepr {
    fn from(t: Truncate) -> Self {
        match t {
            Truncate::Bits(k) => TruncateRepr::Bits(k),
            other => TruncateRepr::Word(other.to_string()),
        }
    }
}

impl std::fmt::Display for Truncate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Truncate::None => f.write_str("none"),
            Truncate::Auto => f.write_str("auto"),
            Truncate::Bits(k) => write!(f, "{k}"),
        }
    }
}

impl std::str::FromStr for Truncate {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "none" => Ok(Truncate::None),
            "auto" => Ok(Truncate::Auto),
            _ => s.parse().map(Truncate::Bits).map_err(|_| format!("truncation must be none, auto or a bit count, not `{s}`")),
        }
    }
}

impl Truncate {
    pub fn bits(self, n: usize) -> Option<u32> {
        match self {
            Truncate::None => None,
            Truncate::Auto => Some(ceil_log2(n as u64) + 2),
            Truncate::Bits(k) => Some(k),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Explicit widths; when empty, powers of two from `nmin` to `nmax`.
    pub n: Vec<usize>,
    pub nmin: usize,
    pub nmax: usize,
    pub designs: Vec<Design>,
    pub backends: Vec<AdderKind>,
    pub models: Vec<ModelKind>,
    pub mode: Mode,
    pub samples: usize,
    pub seed: u64,
    pub truncate: Truncate,
    /// Widths above this are only costed, not simulated.
    pub verify_max_n: usize,
    pub verify_count: usize,
    pub out: Option<PathBuf>,
    pub format: Format,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            n: Vec::new(),
            nmin: 8,
            nmax: 64,
            designs: Design::ALL.to_vec(),
            backends: AdderKind::ALL.to_vec(),
            models: vec![ModelKind::EqualLatency],
            mode: Mode::Controlled,
            samples: 8,
            seed: 1,
            truncate: Truncate::Auto,
            verify_max_n: 32,
            verify_count: 32,
            out: None,
            format: Format::Csv,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("samples must be at least 1")]
    NoSamples,
    #[error("n = {0} is below the minimum width of 4")]
    TooNarrow(usize),
    #[error("nmin {0} exceeds nmax {1}")]
    EmptyRange(usize, usize),
    #[error("nothing to sweep: {0} list is empty")]
    Empty(&'static str),
}

impl SweepConfig {
    pub fn widths(&self) -> Vec<usize> {
        if !self.n.is_empty() {
            return self.n.clone();
        }
        let mut out = Vec::new();
        let mut n = self.nmin.next_power_of_two();
        if n != self.nmin {
            out.push(self.nmin);
        }
        while n <= self.nmax {
            out.push(n);
            n *= 2;
        }
        out
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.samples == 0 {
            return Err(ConfigError::NoSamples);
        }
        if self.n.is_empty() && self.nmin > self.nmax {
            return Err(ConfigError::EmptyRange(self.nmin, self.nmax));
        }
        if let Some(&n) = self.widths().iter().find(|&&n| n < 4) {
            return Err(ConfigError::TooNarrow(n));
        }
        for (name, empty) in [
            ("n", self.widths().is_empty()),
            ("designs", self.designs.is_empty()),
            ("backends", self.backends.is_empty()),
            ("models", self.models.is_empty()),
        ] {
            if empty {
                return Err(ConfigError::Empty(name));
            }
        }
        Ok(())
    }
}

/// One averaged line of a sweep. Stage columns sum both halves of an in-place
/// multiplier and are empty when a pass dropped the stage boundaries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub design: String,
    pub backend: String,
    pub model: String,
    pub mode: String,
    pub n: usize,
    pub samples: usize,
    pub failures: usize,
    pub verified: usize,
    pub qubits: f64,
    pub data_qubits: f64,
    pub gates: f64,
    pub size_mean: f64,
    pub size_median: f64,
    pub depth_mean: f64,
    pub depth_median: f64,
    pub multiplication_size: Option<f64>,
    pub reduction_size: Option<f64>,
    pub uncomputation_size: Option<f64>,
    pub multiplication_span: Option<f64>,
    pub reduction_span: Option<f64>,
    pub uncomputation_span: Option<f64>,
    pub error: String,
}

/// The `(N, X)` pair used for a sample; shared by every design and backend so
/// their rows compare like for like.
pub fn sample_spec(design: Design, backend: AdderKind, n: usize, mode: Mode, seed: u64, sample: usize) -> MultiplierSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((n as u64) << 32) ^ sample as u64);
    let nm = sample_modulus(n, &mut rng);
    let x = sample_multiplier(&nm, mode != Mode::OutOfPlace, &mut rng);
    mode.apply(MultiplierSpec::new(design, backend, nm, x))
}

/// Circuit actually costed under `model`: fault-tolerant Fourier circuits get
/// their controlled rotations split first.
pub fn costed(c: &Circuit, backend: AdderKind, model: ModelKind) -> Option<Circuit> {
    (model == ModelKind::FaultTolerant && backend == AdderKind::Fourier).then(|| decompose_cry(c))
}

struct Sample {
    reports: Vec<ResourceReport>,
    verified: bool,
}

fn run_sample(cfg: &SweepConfig, design: Design, backend: AdderKind, n: usize, i: usize) -> Result<Sample, String> {
    let spec = sample_spec(design, backend, n, cfg.mode, cfg.seed, i);
    let exact = synthesize(&spec).map_err(|e| e.to_string())?;
    let mut verified = false;
    if n <= cfg.verify_max_n {
        // truncated rotations are costed, never simulated
        let strategy = if n <= 6 { Strategy::Exhaustive } else { Strategy::Random { count: cfg.verify_count, seed: cfg.seed + i as u64 } };
        let r = verify_circuit(&exact, &spec, strategy, false).map_err(|e| e.to_string())?;
        if !r.pass {
            let reason = r.counterexample.map(|c| c.reason).unwrap_or_default();
            return Err(format!("verification failed: {reason}"));
        }
        verified = true;
    }
    let c = match cfg.truncate.bits(n) {
        Some(k) if backend == AdderKind::Fourier => {
            synthesize(&MultiplierSpec { truncation: Some(k), ..spec }).map_err(|e| e.to_string())?
        }
        _ => exact,
    };
    let reports = cfg
        .models
        .iter()
        .map(|&m| {
            let model = CostModel::new(m, n);
            match costed(&c, backend, m) {
                Some(d) => report(&d, &model),
                None => report(&c, &model),
            }
        })
        .collect();
    Ok(Sample { reports, verified })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

fn median(v: &[f64]) -> f64 {
    let mut v = v.to_vec();
    v.sort_by(f64::total_cmp);
    match v.len() {
        0 => f64::NAN,
        l if l % 2 == 1 => v[l / 2],
        l => (v[l / 2 - 1] + v[l / 2]) / 2.0,
    }
}

fn stage_total(r: &ResourceReport, name: &str, span: bool) -> Option<f64> {
    let hits: Vec<f64> = r.stages.iter().filter(|s| s.name == name).map(|s| if span { s.span } else { s.size }).collect();
    (!hits.is_empty()).then(|| hits.iter().sum())
}

fn summarise(cfg: &SweepConfig, design: Design, backend: AdderKind, model: usize, n: usize, samples: &[Result<Sample, String>]) -> Row {
    let ok: Vec<&ResourceReport> = samples.iter().filter_map(|s| s.as_ref().ok()).map(|s| &s.reports[model]).collect();
    let col = |f: &dyn Fn(&ResourceReport) -> f64| ok.iter().map(|r| f(r)).collect::<Vec<f64>>();
    let stage = |name: &str, span: bool| -> Option<f64> {
        let v: Option<Vec<f64>> = ok.iter().map(|r| stage_total(r, name, span)).collect();
        v.filter(|v| !v.is_empty()).map(|v| mean(&v))
    };
    let (size, depth) = (col(&|r| r.size), col(&|r| r.depth));
    let error = samples.iter().find_map(|s| s.as_ref().err().cloned()).unwrap_or_default();
    Row {
        design: design.name().to_string(),
        backend: backend.name().to_string(),
        model: cfg.models[model].name().to_string(),
        mode: cfg.mode.name().to_string(),
        n,
        samples: ok.len(),
        failures: samples.len() - ok.len(),
        verified: samples.iter().filter(|s| s.as_ref().is_ok_and(|s| s.verified)).count(),
        qubits: mean(&col(&|r| r.qubits as f64)),
        data_qubits: mean(&col(&|r| r.data_qubits as f64)),
        gates: mean(&col(&|r| r.gates as f64)),
        size_mean: mean(&size),
        size_median: median(&size),
        depth_mean: mean(&depth),
        depth_median: median(&depth),
        multiplication_size: stage("multiplication", false),
        reduction_size: stage("reduction", false),
        uncomputation_size: stage("uncomputation", false),
        multiplication_span: stage("multiplication", true),
        reduction_span: stage("reduction", true),
        uncomputation_span: stage("uncomputation", true),
        error,
    }
}

/// Runs every `(design, backend, n, sample)` job in parallel and returns rows
/// ordered by design, backend, model and width.
pub fn sweep(cfg: &SweepConfig) -> Result<Vec<Row>, ConfigError> {
    cfg.validate()?;
    let widths = cfg.widths();
    let mut jobs = Vec::new();
    for &d in &cfg.designs {
        for &k in &cfg.backends {
            for &n in &widths {
                for i in 0..cfg.samples {
                    jobs.push((d, k, n, i));
                }
            }
        }
    }
    let done: Vec<Result<Sample, String>> = jobs.par_iter().map(|&(d, k, n, i)| run_sample(cfg, d, k, n, i)).collect();
    let mut grouped: BTreeMap<(usize, usize, usize), Vec<Result<Sample, String>>> = BTreeMap::new();
    for (&(d, k, n, _), s) in jobs.iter().zip(done) {
        let di = cfg.designs.iter().position(|&x| x == d).expect("listed");
        let ki = cfg.backends.iter().position(|&x| x == k).expect("listed");
        grouped.entry((di, ki, n)).or_default().push(s);
    }
    let mut rows = Vec::new();
    for ((di, ki, n), samples) in &grouped {
        for m in 0..cfg.models.len() {
            rows.push(summarise(cfg, cfg.designs[*di], cfg.backends[*ki], m, *n, samples));
        }
    }
    rows.sort_by(|a, b| (&a.design, &a.backend, &a.model, a.n).cmp(&(&b.design, &b.backend, &b.model, b.n)));
    Ok(rows)
}

pub fn write_csv<W: std::io::Write>(rows: &[Row], w: W) -> anyhow::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_json<W: std::io::Write>(rows: &[Row], w: W) -> anyhow::Result<()> {
    serde_json::to_writer_pretty(w, rows)?;
    Ok(())
}
