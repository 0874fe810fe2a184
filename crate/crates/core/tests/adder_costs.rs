use modmul::adders::{add, AddSpec, AdderKind};
use modmul::builder::Builder;
use modmul::circuit::Role;
use modmul::schedule::{schedule, CostModel, ModelKind};
use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn const_adder(kind: AdderKind, n: usize, seed: u64) -> modmul::circuit::Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = num_bigint::RandBigInt::gen_biguint(&mut rng, n as u64) | BigUint::from(1u32);
    let mut b = Builder::new();
    let t = b.reg("y", n, Role::Input);
    add(&mut b, kind, &AddSpec::constant(&t, c)).unwrap();
    b.finish()
}

fn ccx_depth(kind: AdderKind, n: usize) -> (f64, f64, u32) {
    let c = const_adder(kind, n, 3);
    let s = schedule(&c, &CostModel::new(ModelKind::Toffoli, n));
    (s.depth, s.size, c.qubit_count)
}

#[test]
fn adder_costs_at_256() {
    let n = 256usize;
    let (d, _, q) = ccx_depth(AdderKind::Ripple, n);
    println!("ripple depth {d} qubits {q}");
    assert!((d - 2.0 * n as f64).abs() <= 0.1 * 2.0 * n as f64);
    assert_eq!(q as usize, 2 * n + 1);
    let (d, size, q) = ccx_depth(AdderKind::PrefixRipple, n);
    println!("prefix_ripple depth {d} ccx {size} qubits {q}");
    assert!((d - n as f64).abs() <= 0.1 * n as f64);
    assert_eq!(q as usize, 2 * n + 1);
    let (d, _, q) = ccx_depth(AdderKind::Lookahead, n);
    println!("lookahead depth {d} qubits {q}");
    assert!((d - 32.0).abs() <= 0.25 * 32.0);
    assert_eq!(q as usize, 4 * n - 8 - 1);
}

#[test]
fn ccx_per_bit_for_classical_prefix_ripple() {
    let n = 128;
    let c = const_adder(AdderKind::PrefixRipple, n, 5);
    let per_bit = c.count(modmul::circuit::GateKind::CCX) as f64 / (2.0 * n as f64);
    // forward and reverse passes each cost about 1.5 Toffolis per bit
    assert!((per_bit - 1.5).abs() < 0.1, "{per_bit}");
}

#[test]
fn orderings_at_64() {
    let n = 64;
    let el = CostModel::equal_latency();
    let stats: Vec<(f64, usize)> = AdderKind::BINARY
        .iter()
        .map(|&k| {
            let c = const_adder(k, n, 11);
            (schedule(&c, &el).depth, c.count(modmul::circuit::GateKind::CCX))
        })
        .collect();
    let [ripple, prefix, look] = [stats[0], stats[1], stats[2]];
    assert!(look.0 < prefix.0 && prefix.0 < ripple.0, "{stats:?}");
    assert!(ripple.1 < prefix.1 && prefix.1 < look.1, "{stats:?}");
}

#[test]
fn lookahead_depth_at_64_is_logarithmic() {
    let (d, _, _) = ccx_depth(AdderKind::Lookahead, 64);
    assert!(d <= 4.0 * 6.0 + 4.0, "{d}");
}
