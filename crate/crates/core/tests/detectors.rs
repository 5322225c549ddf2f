use progq::covariant::{covariant_accuracy, covariant_detector, covariant_program, required_dimension, GroupElement};
use progq::covering::{assemble_detector, build_net, jensen_bound_check, validate_net, CoveringConfig};
use progq::linalg::{basis_vector, haar_random_unitary};
use progq::povm::{distance_bound_chain, povm_distance, programmed_povm, random_povm};

#[test]
fn covariant_accuracy_is_two_over_d() {
    for twice_j in [1u32, 2, 5, 9] {
        for seed in 0..3 {
            let g = GroupElement::random(seed);
            let acc = covariant_accuracy::<f64>(twice_j, &g).unwrap();
            let d = f64::from(twice_j + 1);
            assert!((acc.delta - 2.0 / d).abs() < 1e-10, "2j={twice_j}: {}", acc.delta);
            // General sign enumeration agrees with the qubit form.
            assert!((povm_distance(&acc.p, &acc.q).unwrap() - acc.delta).abs() < 1e-12);
        }
    }
}

#[test]
fn required_dimension_meets_the_target() {
    for eps in [1.0, 0.5, 0.2, 0.1, 0.05] {
        let d = required_dimension(eps).unwrap();
        let acc = covariant_accuracy::<f64>((d - 1) as u32, &GroupElement::random(1)).unwrap();
        assert!(acc.delta <= eps + 1e-12);
    }
}

#[test]
fn programmed_povm_is_a_povm() {
    let det = covariant_detector::<f64>(4).unwrap();
    let q = programmed_povm(&det, &covariant_program(4, &GroupElement::random(9))).unwrap();
    assert!(q.completeness_deviation() < 1e-12);
}

#[test]
fn small_net_detector_respects_its_bound() {
    let cfg = CoveringConfig {
        pool_size: 5000,
        ..Default::default()
    };
    let net = build_net(2, 0.5, &cfg).unwrap();
    assert!(net.radius <= 0.5);
    assert!(validate_net(&net, 2000, 3) < 0.7);
    let basis = vec![basis_vector(2, 0), basis_vector(2, 1)];
    let det = assemble_detector(&net, &basis).unwrap();
    assert_eq!(det.ancilla_dim(), net.centers.len());
    for seed in 0..30 {
        let w = haar_random_unitary::<f64>(2, seed);
        let r = jensen_bound_check(&w, &net, &basis).unwrap();
        assert!(r.holds(1e-10), "{r:?}");
    }
}

#[test]
fn norm_chain_on_random_pairs() {
    for seed in 0..200u64 {
        let n = 2 + (seed % 3) as usize;
        let d = 2 + (seed / 3 % 3) as usize;
        let p = random_povm::<f64>(n, d, seed);
        let q = random_povm::<f64>(n, d, seed + 10_000);
        let r = distance_bound_chain(&p, &q).unwrap();
        assert!(r.chain_holds(1e-12), "{r:?}");
    }
}
