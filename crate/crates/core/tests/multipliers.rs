use modmul::adders::AdderKind;
use modmul::modmul::{synthesize, Design, MultiplierSpec};
use modmul::numtheory::{sample_modulus, sample_multiplier};
use modmul::verify::{verify_circuit, Strategy};
use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn check(spec: &MultiplierSpec, strategy: Strategy) {
    let c = synthesize(spec).unwrap();
    let r = verify_circuit(&c, spec, strategy, true).unwrap();
    assert!(r.pass, "{} {} N={} X={}: {:?}", spec.design, spec.backend, spec.modulus, spec.multiplier, r.counterexample);
}

#[test]
fn out_of_place_exhaustive_n5() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..2 {
        let nm = sample_modulus(5, &mut rng);
        let x = sample_multiplier(&nm, false, &mut rng);
        for d in Design::ALL {
            for k in AdderKind::ALL {
                check(&MultiplierSpec::new(d, k, nm.clone(), x.clone()), Strategy::Exhaustive);
            }
        }
    }
}

#[test]
fn controlled_in_place_exhaustive_n6() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let nm = sample_modulus(6, &mut rng);
    let x = sample_multiplier(&nm, true, &mut rng);
    for d in Design::ALL {
        for k in AdderKind::ALL {
            check(&MultiplierSpec::new(d, k, nm.clone(), x.clone()).controlled(), Strategy::Exhaustive);
        }
    }
}

#[test]
fn uncontrolled_in_place_random_n12() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let nm = sample_modulus(12, &mut rng);
    let x = sample_multiplier(&nm, true, &mut rng);
    for d in Design::ALL {
        for k in AdderKind::ALL {
            check(&MultiplierSpec::new(d, k, nm.clone(), x.clone()).in_place(), Strategy::Random { count: 24, seed: 3 });
        }
    }
}

#[test]
fn quantum_quantum_exhaustive_n4() {
    let nm = BigUint::from(13u32);
    for d in [Design::Division, Design::Montgomery, Design::Barrett] {
        for k in AdderKind::BINARY {
            check(&MultiplierSpec::new(d, k, nm.clone(), BigUint::from(1u32)).quantum(), Strategy::Exhaustive);
        }
    }
}

#[test]
fn quantum_quantum_random_n10() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let nm = sample_modulus(10, &mut rng);
    for d in [Design::Division, Design::Montgomery, Design::Barrett] {
        check(&MultiplierSpec::new(d, AdderKind::Lookahead, nm.clone(), BigUint::from(1u32)).quantum(), Strategy::Random { count: 40, seed: 9 });
    }
}

#[test]
fn raw_montgomery_residue() {
    let spec = MultiplierSpec { raw_residue: true, ..MultiplierSpec::new(Design::Montgomery, AdderKind::Fourier, BigUint::from(7u32 + 16), BigUint::from(3u32)) };
    check(&spec, Strategy::Exhaustive);
}

#[test]
fn fourier_montgomery_small_example() {
    // N = 23 is the smallest width accepted; 3 * 5 = 15
    let spec = MultiplierSpec::new(Design::Montgomery, AdderKind::Fourier, BigUint::from(23u32), BigUint::from(3u32));
    let out = modmul::sim::simulate(&synthesize(&spec).unwrap(), &[("y", 5)]).unwrap();
    assert_eq!(out["p"], BigUint::from(15u32));
}
