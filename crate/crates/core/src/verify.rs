//! Verification of synthesized multipliers against big-integer arithmetic.

use std::collections::{BTreeMap, HashSet};

use num_bigint::{BigUint, RandBigInt};
use num_traits::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adders::AdderKind;
use crate::circuit::{Circuit, Meta, Role};
use crate::modmul::{expected_product, synthesize, Design, MultiplierSpec, SynthError};
use crate::numtheory::{barrett_qhat_oracle, mod_inverse, pow2, BarrettParams};
use crate::sim::{SimState, Simulator};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Exhaustive,
    Random { count: usize, seed: u64 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerifyPlan {
    pub spec: MultiplierSpec,
    pub strategy: Strategy,
    /// Check intermediate values at the end of each stage of the first body.
    #[serde(default)]
    pub probes: bool,
}

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("exhaustive verification is limited to n <= 6 (got {0})")]
    TooWide(usize),
    #[error("circuit metadata does not describe a multiplier: {0}")]
    Meta(String),
    #[error("register signatures differ")]
    SignatureMismatch,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub inputs: BTreeMap<String, String>,
    pub expected: BTreeMap<String, String>,
    pub got: BTreeMap<String, String>,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProbeRecord {
    pub inputs: BTreeMap<String, String>,
    pub stage: String,
    pub register: String,
    pub expected: String,
    pub got: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VerifyResult {
    pub pass: bool,
    pub cases: usize,
    pub counterexample: Option<Counterexample>,
    pub probes: Vec<ProbeRecord>,
}

type Case = Vec<(String, BigUint)>;

fn cases(spec: &MultiplierSpec, strategy: Strategy) -> Result<Vec<Case>, VerifyError> {
    let nm = &spec.modulus;
    let ctrls: &[u64] = if spec.controlled { &[0, 1] } else { &[2] };
    let with_ctrl = |y: BigUint, out: &mut Vec<Case>| {
        for &c in ctrls {
            let mut case = vec![("y".to_string(), y.clone())];
            if c < 2 {
                case.push(("ctrl".to_string(), BigUint::from(c)));
            }
            out.push(case);
        }
    };
    let mut out = Vec::new();
    match strategy {
        Strategy::Exhaustive => {
            if spec.n > 6 {
                return Err(VerifyError::TooWide(spec.n));
            }
            let below = crate::numtheory::to_u64(nm);
            for y in 0..below {
                if spec.quantum_quantum {
                    for x in 0..below {
                        out.push(vec![("x".into(), BigUint::from(x)), ("y".into(), BigUint::from(y))]);
                    }
                } else {
                    with_ctrl(BigUint::from(y), &mut out);
                }
            }
        }
        Strategy::Random { count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..count {
                let y = rng.gen_biguint_below(nm);
                if spec.quantum_quantum {
                    let x = rng.gen_biguint_below(nm);
                    out.push(vec![("x".into(), x), ("y".into(), y)]);
                } else {
                    with_ctrl(y, &mut out);
                }
            }
        }
    }
    Ok(out)
}

fn get<'a>(case: &'a Case, name: &str) -> Option<&'a BigUint> {
    case.iter().find(|(k, _)| k == name).map(|(_, v)| v)
}

/// Register values a correct circuit produces for `case`.
fn expected(spec: &MultiplierSpec, case: &Case) -> BTreeMap<String, BigUint> {
    let y = get(case, "y").expect("y input").clone();
    let x = get(case, "x").cloned().unwrap_or_else(|| spec.multiplier.clone());
    let prod = expected_product(spec, &x, &y);
    let mut e: BTreeMap<String, BigUint> = case.iter().cloned().collect();
    if spec.in_place {
        if get(case, "ctrl").is_none_or(|c| !c.is_zero()) {
            e.insert("y".into(), prod);
        }
    } else {
        e.insert("p".into(), prod);
    }
    e
}

fn strings(m: &BTreeMap<String, BigUint>) -> BTreeMap<String, String> {
    m.iter().map(|(k, v)| (k.clone(), v.to_string())).collect()
}

/// Values that should appear at stage boundaries of the first multiplier body.
fn probe_values(spec: &MultiplierSpec, case: &Case) -> Vec<(&'static str, &'static str, BigUint)> {
    if get(case, "ctrl").is_some_and(|c| c.is_zero()) || spec.design == Design::Baseline {
        return Vec::new();
    }
    let nm = &spec.modulus;
    let m = spec.m();
    let y = get(case, "y").expect("y input");
    let x = get(case, "x").cloned().unwrap_or_else(|| spec.multiplier.clone());
    let xe = spec.effective(&x);
    let partials: Vec<BigUint> = (0..spec.n).map(|k| (&xe << k) % nm).collect();
    let t: BigUint = partials.iter().enumerate().filter(|(k, _)| y.bit(*k as u64)).map(|(_, p)| p).sum();
    let mut out = vec![("multiplication", "acc", t.clone())];
    match spec.design {
        Design::Division => {
            out.push(("reduction", "p", &t % nm));
            out.push(("reduction", "q", &t / nm));
        }
        Design::Montgomery => {
            let inv = mod_inverse(nm, &pow2(m + 1)).expect("N is odd");
            out.push(("reduction", "u", &t * inv % pow2(m + 1)));
            let r_inv = mod_inverse(&pow2(m), nm).expect("N is odd");
            out.push(("reduction", "p", &t * r_inv % nm));
        }
        Design::Barrett => {
            let bp = BarrettParams::new(nm).expect("validated modulus");
            let terms = |f: &dyn Fn(&BigUint) -> BigUint| -> BigUint {
                partials.iter().enumerate().filter(|(k, _)| y.bit(*k as u64)).map(|(_, p)| f(p)).sum()
            };
            let qh = if spec.backend.is_binary() {
                let approx = terms(&|p| bp.approx_partial(p));
                out.push(("multiplication", "xy_app", approx.clone()));
                barrett_qhat_oracle(&t, &bp, &approx).expect("in range")
            } else {
                terms(&|p| bp.scaled_partial(p)) >> bp.frac_bits
            };
            out.push(("reduction", "qhat_int", qh));
            out.push(("reduction", "p", &t % nm));
        }
        Design::Baseline => unreachable!(),
    }
    out
}

fn io_qubits(c: &Circuit, spec: &MultiplierSpec) -> HashSet<u32> {
    let mut names = vec!["y", "ctrl", "x"];
    if !spec.in_place {
        names.push("p");
    }
    names.iter().filter_map(|n| c.register(n)).flat_map(|r| r.qubits.iter().copied()).collect()
}

fn lookup(c: &Circuit, state: &SimState, name: &str) -> Option<BigUint> {
    let qs = c.register(name).map(|r| &r.qubits).or_else(|| c.meta.views.get(name))?;
    state.decode(qs).map(|v| v.value().clone())
}

/// Checks a multiplier circuit against `spec` on every case of `strategy`.
pub fn verify_circuit(c: &Circuit, spec: &MultiplierSpec, strategy: Strategy, probes: bool) -> Result<VerifyResult, VerifyError> {
    let all = cases(spec, strategy)?;
    let sim = Simulator::new(c);
    let io = io_qubits(c, spec);
    let scratch: Vec<u32> = (0..c.qubit_count).filter(|q| !io.contains(q)).collect();
    let stage_end = |name: &str| c.meta.stages.iter().find(|s| s.name == name).map(|s| s.end);
    let results: Vec<(Option<Counterexample>, Vec<ProbeRecord>)> = all
        .par_iter()
        .map(|case| {
            let inputs: BTreeMap<String, BigUint> = case.iter().cloned().collect();
            let want = expected(spec, case);
            let fail = |got: BTreeMap<String, String>, reason: String| Counterexample {
                inputs: strings(&inputs),
                expected: strings(&want),
                got,
                reason,
            };
            let checks = if probes { probe_values(spec, case) } else { Vec::new() };
            let mut at: Vec<usize> = checks.iter().filter_map(|(s, _, _)| stage_end(s)).collect();
            at.sort_unstable();
            at.dedup();
            let snaps = match sim.run_with_snapshots(&inputs, &at) {
                Ok(s) => s,
                Err(e) => return (Some(fail(BTreeMap::new(), e.to_string())), Vec::new()),
            };
            let fin = snaps.last().expect("final state");
            let mut records = Vec::new();
            for (stage, reg, val) in checks {
                let Some(end) = stage_end(stage) else { continue };
                let state = &snaps[at.iter().position(|&a| a == end).expect("snapshot")];
                let got = lookup(c, state, reg).map_or_else(|| "undecodable".to_string(), |v| v.to_string());
                records.push(ProbeRecord {
                    inputs: strings(&inputs),
                    stage: stage.to_string(),
                    register: reg.to_string(),
                    expected: val.to_string(),
                    got,
                });
            }
            let got: BTreeMap<String, String> = want
                .keys()
                .map(|k| (k.clone(), lookup(c, fin, k).map_or_else(|| "undecodable".to_string(), |v| v.to_string())))
                .collect();
            if got != strings(&want) {
                return (Some(fail(got, "wrong output".into())), records);
            }
            if !fin.all_zero(&scratch) {
                let dirty: Vec<String> = c
                    .registers
                    .iter()
                    .filter(|r| r.qubits.iter().any(|q| !io.contains(q)) && !fin.all_zero(&r.qubits))
                    .map(|r| r.name.clone())
                    .collect();
                return (Some(fail(got, format!("ancilla not returned to zero: {}", dirty.join(", ")))), records);
            }
            if let Some(p) = records.iter().find(|p| p.got != p.expected) {
                let reason = format!("probe {}/{}: expected {}, got {}", p.stage, p.register, p.expected, p.got);
                return (Some(fail(got, reason)), records);
            }
            (None, records)
        })
        .collect();
    let counterexample = results.iter().find_map(|(f, _)| f.clone());
    let probes = results.into_iter().flat_map(|(_, p)| p).collect();
    Ok(VerifyResult { pass: counterexample.is_none(), cases: all.len(), counterexample, probes })
}

pub fn verify(plan: &VerifyPlan) -> Result<VerifyResult, VerifyError> {
    let c = synthesize(&plan.spec)?;
    verify_circuit(&c, &plan.spec, plan.strategy, plan.probes)
}

/// Rebuilds the spec a multiplier circuit was generated from.
pub fn spec_from_meta(meta: &Meta) -> Result<MultiplierSpec, VerifyError> {
    let missing = |f: &str| VerifyError::Meta(format!("missing {f}"));
    let design: Design = meta.design.as_deref().ok_or_else(|| missing("design"))?.parse().map_err(VerifyError::Meta)?;
    let backend: AdderKind = meta.backend.as_deref().ok_or_else(|| missing("backend"))?.parse().map_err(VerifyError::Meta)?;
    let modulus = meta.modulus.clone().ok_or_else(|| missing("modulus"))?;
    let flag = |k: &str| meta.extras.get(k).is_some_and(|v| v == "true");
    let multiplier = match meta.multiplier.clone() {
        Some(x) => x,
        None if flag("quantum_quantum") => BigUint::from(1u32),
        None => return Err(missing("multiplier")),
    };
    let mut spec = MultiplierSpec::new(design, backend, modulus, multiplier);
    spec.in_place = flag("in_place");
    spec.controlled = flag("controlled");
    spec.quantum_quantum = flag("quantum_quantum");
    spec.raw_residue = flag("raw_residue");
    spec.truncation = meta.extras.get("truncation").and_then(|v| v.parse().ok());
    if let Some(n) = meta.n {
        spec.n = n as usize;
    }
    spec.validate()?;
    Ok(spec)
}

fn signature(c: &Circuit) -> Vec<(&str, usize, Role)> {
    c.registers.iter().map(|r| (r.name.as_str(), r.width(), r.role)).collect()
}

/// True when both circuits decode to the same register values on `trials`
/// random inputs. Inputs named `x` and `y` are drawn below the modulus when the
/// metadata records one.
pub fn equivalence(c1: &Circuit, c2: &Circuit, trials: usize, seed: u64) -> Result<bool, VerifyError> {
    if signature(c1) != signature(c2) {
        return Err(VerifyError::SignatureMismatch);
    }
    let (s1, s2) = (Simulator::new(c1), Simulator::new(c2));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let inputs: BTreeMap<String, BigUint> = c1
            .registers
            .iter()
            .filter(|r| r.role == Role::Input)
            .map(|r| {
                let v = match (&c1.meta.modulus, r.name.as_str()) {
                    (Some(nm), "x" | "y") if nm.bits() as usize <= r.width() => rng.gen_biguint_below(nm),
                    _ => rng.gen_biguint(r.width() as u64),
                };
                (r.name.clone(), v)
            })
            .collect();
        let run = |s: &Simulator| s.run(&inputs).ok().and_then(|st| s.outputs(&st).ok());
        if run(&s1) != run(&s2) {
            return Ok(false);
        }
    }
    Ok(true)
}
