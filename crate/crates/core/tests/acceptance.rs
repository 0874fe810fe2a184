//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Exits 0 after printing every line so the rest of the test run proceeds; set
//! `ACCEPTANCE_STRICT=1` to exit 1 when any criterion fails.

use std::time::Instant;

use num_bigint::{BigInt, BigUint, RandBigInt};
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use modmul::adders::{add, AddSpec, AdderKind};
use modmul::builder::Builder;
use modmul::circuit::{Circuit, GateKind, Role, TransformKind};
use modmul::modmul::{synthesize, Design, MultiplierSpec};
use modmul::numtheory::{barrett_qhat_oracle, ceil_log2, redc_oracle, sample_modulus, sample_multiplier, BarrettParams};
use modmul::schedule::{decompose_cry, reorder, report, schedule, CostModel, ModelKind};
use modmul::verify::{equivalence, verify_circuit, Strategy};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn pair(n: usize, seed: u64) -> (BigUint, BigUint) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nm = sample_modulus(n, &mut rng);
    let x = sample_multiplier(&nm, true, &mut rng);
    (nm, x)
}

fn spec(d: Design, k: AdderKind, n: usize, seed: u64) -> MultiplierSpec {
    let (nm, x) = pair(n, seed);
    MultiplierSpec::new(d, k, nm, x)
}

fn log2(n: usize) -> f64 {
    (n as f64).log2()
}

fn combos() -> Vec<(Design, AdderKind)> {
    Design::ALL.iter().flat_map(|&d| AdderKind::ALL.iter().map(move |&k| (d, k))).collect()
}

fn check_all(jobs: Vec<(MultiplierSpec, Strategy)>) -> (usize, Vec<String>) {
    let bad: Vec<String> = jobs
        .par_iter()
        .filter_map(|(s, st)| {
            let c = match synthesize(s) {
                Ok(c) => c,
                Err(e) => return Some(format!("{} {} N={}: {e}", s.design, s.backend, s.modulus)),
            };
            match verify_circuit(&c, s, *st, false) {
                Ok(r) if r.pass => None,
                Ok(r) => Some(format!("{} {} N={} X={}: {:?}", s.design, s.backend, s.modulus, s.multiplier, r.counterexample.map(|c| c.reason))),
                Err(e) => Some(format!("{} {}: {e}", s.design, s.backend)),
            }
        })
        .collect();
    (jobs.len(), bad)
}

fn exhaustive_small() -> Outcome {
    let mut jobs = Vec::new();
    for n in [4usize, 5] {
        for (d, k) in combos() {
            for i in 0..3 {
                jobs.push((spec(d, k, n, 100 + 10 * n as u64 + i).controlled(), Strategy::Exhaustive));
            }
        }
    }
    let (total, bad) = check_all(jobs);
    outcome(bad.is_empty(), format!("{total} controlled in-place circuits, every y and control value; failures: {}", describe(&bad)))
}

fn random_scale() -> Outcome {
    let mut jobs = Vec::new();
    for n in [8usize, 16, 32] {
        for (d, k) in combos() {
            jobs.push((spec(d, k, n, 200 + n as u64).controlled(), Strategy::Random { count: 256, seed: n as u64 }));
        }
    }
    let (total, bad) = check_all(jobs);
    outcome(bad.is_empty(), format!("{total} circuits x 256 random y; failures: {}", describe(&bad)))
}

fn describe(bad: &[String]) -> String {
    match bad.first() {
        None => "0".into(),
        Some(b) => format!("{} (first: {b})", bad.len()),
    }
}

fn oracles() -> Outcome {
    let mut redc_cases = 0usize;
    let mut redc_bad = 0usize;
    for nm in [7u32, 11, 13] {
        let m = ceil_log2(u32::BITS as u64 - nm.leading_zeros() as u64) as usize;
        let r = 1u64 << m;
        let nb = BigUint::from(nm);
        for t in 0..(nm as u64) * r {
            redc_cases += 1;
            let got = redc_oracle(&BigUint::from(t), &nb, m).unwrap();
            // brute force: s 2^m = t (mod N), t - uN = 0 (mod 2^m)
            let s = (0..nm as u64).find(|s| (s * r) % nm as u64 == t % nm as u64).unwrap();
            let u = (0..r).find(|u| (t + r * nm as u64 - (u * nm as u64) % r) % r == 0).unwrap();
            let est = (t as i64 - (u * nm as u64) as i64) / r as i64;
            if got.s != BigUint::from(s) || got.u != BigUint::from(u) || got.estimate != BigInt::from(est) {
                redc_bad += 1;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let mut barrett_bad = 0usize;
    let cases = 100_000usize;
    for _ in 0..cases {
        let n = rng.gen_range(4..=32usize);
        let nm = sample_modulus(n, &mut rng);
        let x = sample_multiplier(&nm, false, &mut rng);
        let y = rng.gen_biguint_below(&nm);
        let bp = BarrettParams::new(&nm).unwrap();
        let (mut t, mut approx) = (BigUint::zero(), BigUint::zero());
        for i in 0..n {
            if y.bit(i as u64) {
                let p = (&x << i) % &nm;
                approx += bp.approx_partial(&p);
                t += p;
            }
        }
        let qh = barrett_qhat_oracle(&t, &bp, &approx).unwrap();
        let q = &t / &nm;
        if qh > q || &q - &qh > BigUint::one() {
            barrett_bad += 1;
        }
    }
    outcome(
        redc_bad == 0 && barrett_bad == 0,
        format!("redc {redc_cases} exhaustive cases, {redc_bad} wrong; barrett q - qhat outside {{0,1}} in {barrett_bad} of {cases}"),
    )
}

fn const_adder(kind: AdderKind, n: usize) -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let c = rng.gen_biguint(n as u64) | BigUint::one();
    let mut b = Builder::new();
    let t = b.reg("y", n, Role::Input);
    add(&mut b, kind, &AddSpec::constant(&t, c)).unwrap();
    b.finish()
}

fn adders() -> Outcome {
    let n = 256usize;
    let model = CostModel::new(ModelKind::Toffoli, n);
    let mut ok = true;
    let mut parts = Vec::new();
    for (kind, target, tol, qubits) in [
        (AdderKind::Ripple, 2.0 * n as f64, 0.10, 2 * n + 1),
        (AdderKind::PrefixRipple, n as f64, 0.10, 2 * n + 1),
        (AdderKind::Lookahead, 4.0 * log2(n), 0.25, 4 * n - 8 - 1),
    ] {
        let c = const_adder(kind, n);
        let d = schedule(&c, &model).depth;
        let good = (d - target).abs() <= tol * target && c.qubit_count as usize == qubits;
        ok &= good;
        parts.push(format!("{kind} ccx depth {d} (target {target}) qubits {} (want {qubits})", c.qubit_count));
    }
    outcome(ok, format!("n=256: {}", parts.join("; ")))
}

fn fourier_montgomery() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for n in [16usize, 32, 64] {
        let c = synthesize(&spec(Design::Montgomery, AdderKind::Fourier, n, 5)).unwrap();
        let (nf, m) = (n as f64, ceil_log2(n as u64) as f64);
        let f = 2.5 * nf * nf + 3.0 * nf * m - nf / 2.0 + m * m / 2.0 - m / 2.0;
        let r = (c.count(GateKind::RY) + c.count(GateKind::CRY)) as f64;
        ok &= (r / f - 1.0).abs() <= 0.10;
        parts.push(format!("n={n} rotations {r} vs {f} ({:.3})", r / f));
    }
    for n in [64usize, 128, 256] {
        let c = synthesize(&spec(Design::Montgomery, AdderKind::Fourier, n, 5).controlled()).unwrap();
        let d = report(&c, &CostModel::equal_latency()).depth;
        let bound = 14.0 * n as f64 + 64.0;
        ok &= d <= bound;
        parts.push(format!("n={n} controlled depth {d} <= {bound}"));
    }
    outcome(ok, parts.join("; "))
}

fn fourier_division() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for n in [64usize, 256] {
        let c = synthesize(&spec(Design::Division, AdderKind::Fourier, n, 6)).unwrap();
        let m = ceil_log2(n as u64) as usize;
        let full = c
            .meta
            .transforms
            .iter()
            .filter(|t| t.width as usize >= n && matches!(t.kind, TransformKind::Qft | TransformKind::Iqft))
            .count();
        let d = report(&c, &CostModel::equal_latency()).depth;
        let per = d / (n * m) as f64;
        // 4nm plus the O(n) transforms at either end
        let bound = 4.0 + 4.0 / m as f64;
        ok &= full == 2 * m + 1 && per <= bound;
        parts.push(format!("n={n} full-width transforms {full} (2m+1 = {}) depth/(nm) {per:.3} <= {bound:.3}", 2 * m + 1));
    }
    outcome(ok, parts.join("; "))
}

fn factor_of_three() -> Outcome {
    let n = 256;
    let el = CostModel::equal_latency();
    let base = report(&synthesize(&spec(Design::Baseline, AdderKind::Lookahead, n, 7)).unwrap(), &el);
    let mut ok = true;
    let mut parts = Vec::new();
    for d in [Design::Division, Design::Montgomery, Design::Barrett] {
        let r = report(&synthesize(&spec(d, AdderKind::Lookahead, n, 7)).unwrap(), &el);
        let (sr, dr) = (base.size / r.size, base.depth / r.depth);
        ok &= (2.5..=3.5).contains(&sr) && (2.5..=3.5).contains(&dr);
        parts.push(format!("{d} size x{sr:.2} depth x{dr:.2}"));
    }
    outcome(ok, format!("n=256 lookahead, baseline over design: {}", parts.join("; ")))
}

fn prefix_scaling() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for d in [Design::Division, Design::Montgomery, Design::Barrett] {
        let mut excess = Vec::new();
        for n in [128usize, 256, 512] {
            let c = synthesize(&spec(d, AdderKind::Lookahead, n, 8).controlled()).unwrap();
            let r = report(&c, &CostModel::new(ModelKind::Toffoli, n));
            let nf = n as f64;
            let (s, dp) = (r.size / (20.0 * nf * nf), r.depth / (8.0 * nf * log2(n)));
            ok &= (s - 1.0).abs() <= 0.30 && (dp - 1.0).abs() <= 0.30;
            excess.push((r.qubits as f64 - 5.0 * nf) / log2(n));
            parts.push(format!("{d} n={n} qubits {} size/20n^2 {s:.3} depth/8nlog2n {dp:.3}", r.qubits));
        }
        // qubits beyond 5n stay a bounded multiple of log2 n
        ok &= excess.iter().all(|&e| e >= 0.0) && excess.windows(2).all(|w| w[1] <= 1.1 * w[0]);
    }
    outcome(ok, parts.join("; "))
}

fn qubit_counts() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for n in [16usize, 64, 256] {
        let l = ceil_log2(n as u64) as u32;
        let c = synthesize(&spec(Design::Barrett, AdderKind::Ripple, n, 9)).unwrap();
        let want = 2 * n as u32 + 5 * l + 6;
        ok &= c.data_qubits() == want;
        parts.push(format!("n={n} barrett binary {} (want {want})", c.data_qubits()));
        for d in [Design::Baseline, Design::Division, Design::Montgomery, Design::Barrett] {
            let c = synthesize(&spec(d, AdderKind::Fourier, n, 9)).unwrap();
            let extra = c.data_qubits() as i64 - 2 * n as i64;
            ok &= extra >= 0 && extra <= (3 * l + 4) as i64;
            parts.push(format!("n={n} {d} fourier 2n+{extra}"));
        }
    }
    outcome(ok, parts.join("; "))
}

fn passes() -> Outcome {
    let mut panel: Vec<MultiplierSpec> = combos().into_iter().map(|(d, k)| spec(d, k, 8, 10).controlled()).collect();
    panel.push(spec(Design::Montgomery, AdderKind::Fourier, 12, 11));
    panel.push(spec(Design::Barrett, AdderKind::Fourier, 10, 12).in_place());
    panel.push(spec(Design::Division, AdderKind::Ripple, 8, 13).quantum());
    panel.push(spec(Design::Montgomery, AdderKind::Lookahead, 8, 14).quantum());
    assert_eq!(panel.len(), 20);
    let bad: Vec<String> = panel
        .par_iter()
        .enumerate()
        .filter_map(|(i, s)| {
            let c = synthesize(s).unwrap();
            let mut variants = Vec::new();
            for kind in [ModelKind::EqualLatency, ModelKind::FaultTolerant] {
                let model = CostModel::new(kind, s.n);
                variants.push((format!("schedule/{kind}"), reorder(&c, &schedule(&c, &model))));
            }
            let split = decompose_cry(&c);
            variants.push(("reorder after decompose".into(), reorder(&split, &schedule(&split, &CostModel::new(ModelKind::FaultTolerant, s.n)))));
            variants.push(("decompose_cry".into(), split));
            variants
                .into_iter()
                .find(|(_, v)| !equivalence(&c, v, 100, i as u64).unwrap())
                .map(|(name, _)| format!("{} {} {name}", s.design, s.backend))
        })
        .collect();
    // each controlled rotation becomes two CX and one RY; the floating halves
    // merge into at most one more RY per run of rotations on a qubit
    let mut ry_per = Vec::new();
    let mut cx_ok = true;
    for s in panel.iter().filter(|s| s.backend == AdderKind::Fourier) {
        let c = synthesize(s).unwrap();
        let d = decompose_cry(&c);
        let (cry, ry0, cx0) = (c.count(GateKind::CRY), c.count(GateKind::RY), c.count(GateKind::CX));
        cx_ok &= d.count(GateKind::CX) == cx0 + 2 * cry && d.count(GateKind::CRY) == 0;
        ry_per.push((d.count(GateKind::RY) - ry0) as f64 / cry as f64);
    }
    let ry_ok = ry_per.iter().all(|&r| (1.0..=1.15).contains(&r));
    let hist = ry_per.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>().join(", ");
    outcome(
        bad.is_empty() && cx_ok && ry_ok,
        format!("20 circuits x 100 inputs, mismatches: {}; added RY per CRY: [{hist}], 2 CX per CRY: {cx_ok}", describe(&bad)),
    )
}

fn ft_costs() -> Outcome {
    let m = CostModel::new(ModelKind::FaultTolerant, 1024);
    let ry = m.ry_cost().round().to_u64().unwrap_or(0);
    let (ccx, t) = (m.cost(GateKind::CCX), m.t_cost());
    outcome(ry == 693 && ccx == 40.0 && t == 10.0, format!("RY {ry}, CCX {ccx}, T {t}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("exhaustive correctness n=4,5", exhaustive_small),
        ("randomized correctness n=8,16,32", random_scale),
        ("oracle equivalence", oracles),
        ("adder resources", adders),
        ("fourier montgomery counts", fourier_montgomery),
        ("fourier division structure", fourier_division),
        ("factor of three", factor_of_three),
        ("prefix multiplier scaling", prefix_scaling),
        ("qubit counts", qubit_counts),
        ("pass soundness", passes),
        ("fault-tolerant costs", ft_costs),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = f();
        failed += usize::from(!o.pass);
        println!("{} {:>2} {name} [{:.1}s]: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, t.elapsed().as_secs_f64(), o.detail);
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
