use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use modmul::adders::AdderKind;
use modmul::bench::{self, Format, Mode, SweepConfig, Truncate};
use modmul::circuit::Circuit;
use modmul::io;
use modmul::modmul::{synthesize, Design, MultiplierSpec};
use modmul::numtheory::{sample_modulus, sample_multiplier};
use modmul::schedule::{reorder, report_with, schedule, CostModel, ModelKind};
use modmul::verify::{spec_from_meta, verify_circuit, Strategy};

#[derive(Parser)]
#[command(name = "modmul", version, about = "Reversible modular multiplier synthesis and costing")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Synthesize a multiplier and write the circuit.
    Gen(GenArgs),
    /// Simulate a circuit (or a freshly built one) against modular arithmetic.
    Verify(VerifyArgs),
    /// Schedule a circuit under a cost model and print its resource report.
    Schedule(ScheduleArgs),
    /// Cost many multipliers and write one averaged row per configuration.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum ModeArg {
    OutOfPlace,
    InPlace,
    Controlled,
}

#[derive(Clone, Copy, ValueEnum)]
enum FileFormat {
    Text,
    Json,
}

#[derive(Args)]
struct SpecArgs {
    #[arg(long, value_enum, default_value = "montgomery")]
    design: Design,
    #[arg(long, value_enum, default_value = "lookahead")]
    backend: AdderKind,
    /// Register width; N is drawn at random with this many bits unless given.
    #[arg(long, default_value_t = 8)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    modulus: Option<BigUint>,
    #[arg(long)]
    multiplier: Option<BigUint>,
    #[arg(long, value_enum, default_value = "out_of_place")]
    mode: ModeArg,
    /// Multiply two quantum registers instead of a register by a constant.
    #[arg(long)]
    quantum: bool,
    /// Leave the Montgomery factor 2^-m in the product.
    #[arg(long)]
    raw_residue: bool,
    /// Drop Fourier rotations finer than pi/2^k.
    #[arg(long)]
    truncate: Option<u32>,
}

impl SpecArgs {
    fn spec(&self) -> Result<MultiplierSpec> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let modulus = match &self.modulus {
            Some(nm) => nm.clone(),
            None => {
                if self.n < 4 {
                    bail!("n = {} is below the minimum width of 4", self.n);
                }
                sample_modulus(self.n, &mut rng)
            }
        };
        let in_place = !matches!(self.mode, ModeArg::OutOfPlace);
        let multiplier = match &self.multiplier {
            Some(x) => x.clone(),
            None if self.quantum => BigUint::from(1u32),
            None => sample_multiplier(&modulus, in_place, &mut rng),
        };
        let mut spec = MultiplierSpec::new(self.design, self.backend, modulus, multiplier);
        spec = match self.mode {
            ModeArg::OutOfPlace => spec,
            ModeArg::InPlace => spec.in_place(),
            ModeArg::Controlled => spec.controlled(),
        };
        spec.quantum_quantum = self.quantum;
        spec.raw_residue = self.raw_residue;
        spec.truncation = self.truncate;
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    spec: SpecArgs,
    #[arg(long, value_enum, default_value = "text")]
    format: FileFormat,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Circuit file written by `gen`; otherwise one is built from the spec flags.
    #[arg(long)]
    circuit: Option<PathBuf>,
    #[command(flatten)]
    spec: SpecArgs,
    /// Every input (n <= 6 only).
    #[arg(long)]
    exhaustive: bool,
    /// Random inputs to try when not exhaustive.
    #[arg(long, default_value_t = 256)]
    count: usize,
    /// Record intermediate register values at stage boundaries.
    #[arg(long)]
    probes: bool,
}

#[derive(Args)]
struct ScheduleArgs {
    #[arg(long)]
    circuit: Option<PathBuf>,
    #[command(flatten)]
    spec: SpecArgs,
    #[arg(long, value_enum, default_value = "equal_latency")]
    model: ModelKind,
    /// Split controlled rotations before scheduling.
    #[arg(long)]
    decompose: bool,
    /// Also write the circuit in scheduled order here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// TOML file with the same keys as the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, num_args = 1.., value_delimiter = ',')]
    design: Vec<Design>,
    #[arg(long, value_enum, num_args = 1.., value_delimiter = ',')]
    backend: Vec<AdderKind>,
    #[arg(long, value_enum, num_args = 1.., value_delimiter = ',')]
    model: Vec<ModelKind>,
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long)]
    nmin: Option<usize>,
    #[arg(long)]
    nmax: Option<usize>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// `none`, `auto` (ceil(log2 n) + 2) or a bit count.
    #[arg(long)]
    truncate: Option<Truncate>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

impl SweepArgs {
    fn config(&self) -> Result<SweepConfig> {
        let mut cfg = match &self.config {
            Some(p) => {
                let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
            }
            None => SweepConfig::default(),
        };
        if !self.design.is_empty() {
            cfg.designs = self.design.clone();
        }
        if !self.backend.is_empty() {
            cfg.backends = self.backend.clone();
        }
        if !self.model.is_empty() {
            cfg.models = self.model.clone();
        }
        if !self.n.is_empty() {
            cfg.n = self.n.clone();
        }
        if let Some(v) = self.nmin {
            cfg.nmin = v;
            cfg.n.clear();
        }
        if let Some(v) = self.nmax {
            cfg.nmax = v;
            cfg.n.clear();
        }
        if let Some(m) = self.mode {
            cfg.mode = match m {
                ModeArg::OutOfPlace => Mode::OutOfPlace,
                ModeArg::InPlace => Mode::InPlace,
                ModeArg::Controlled => Mode::Controlled,
            };
        }
        cfg.samples = self.samples.unwrap_or(cfg.samples);
        cfg.seed = self.seed.unwrap_or(cfg.seed);
        cfg.truncate = self.truncate.unwrap_or(cfg.truncate);
        cfg.out = self.out.clone().or(cfg.out);
        cfg.format = self.format.unwrap_or(cfg.format);
        cfg.validate()?;
        Ok(cfg)
    }
}

fn read_circuit(path: &PathBuf) -> Result<Circuit> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let c = if text.trim_start().starts_with('{') { io::from_json(&text) } else { io::from_text(&text) };
    c.with_context(|| format!("parsing {}", path.display()))
}

fn load(circuit: &Option<PathBuf>, spec: &SpecArgs) -> Result<(Circuit, Option<MultiplierSpec>)> {
    match circuit {
        Some(p) => {
            let c = read_circuit(p)?;
            let s = spec_from_meta(&c.meta).ok();
            Ok((c, s))
        }
        None => {
            let s = spec.spec()?;
            Ok((synthesize(&s)?, Some(s)))
        }
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.cmd {
        Cmd::Gen(a) => {
            let c = synthesize(&a.spec.spec()?)?;
            let text = match a.format {
                FileFormat::Text => io::to_text(&c),
                FileFormat::Json => io::to_json(&c),
            };
            emit(&a.out, &text)?;
            Ok(true)
        }
        Cmd::Verify(a) => {
            let (c, spec) = load(&a.circuit, &a.spec)?;
            let spec = spec.context("circuit metadata does not describe a multiplier")?;
            let strategy = if a.exhaustive { Strategy::Exhaustive } else { Strategy::Random { count: a.count, seed: a.spec.seed } };
            let r = verify_circuit(&c, &spec, strategy, a.probes)?;
            emit(&None, &format!("{}\n", serde_json::to_string_pretty(&r)?))?;
            Ok(r.pass)
        }
        Cmd::Schedule(a) => {
            let (mut c, _) = load(&a.circuit, &a.spec)?;
            if a.decompose {
                c = modmul::schedule::decompose_cry(&c);
            }
            let n = c.meta.n.unwrap_or(0) as usize;
            let model = CostModel::new(a.model, n);
            let s = schedule(&c, &model);
            emit(&None, &format!("{}\n", serde_json::to_string_pretty(&report_with(&c, &model, &s))?))?;
            if a.out.is_some() {
                emit(&a.out, &io::to_text(&reorder(&c, &s)))?;
            }
            Ok(true)
        }
        Cmd::Sweep(a) => {
            let cfg = a.config()?;
            let rows = bench::sweep(&cfg)?;
            let mut buf = Vec::new();
            match cfg.format {
                Format::Csv => bench::write_csv(&rows, &mut buf)?,
                Format::Json => {
                    bench::write_json(&rows, &mut buf)?;
                    buf.push(b'\n');
                }
            }
            emit(&cfg.out, &String::from_utf8(buf)?)?;
            Ok(rows.iter().all(|r| r.failures == 0))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = std::env::var("MODMUL_THREADS").ok().and_then(|v| v.parse().ok()) {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().ok();
    }
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
