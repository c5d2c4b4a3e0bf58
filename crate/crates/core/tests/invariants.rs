use num_complex::Complex64 as C;
use proptest::prelude::*;
use qgame_core::circuits::*;
use qgame_core::mbqc::{survival_curve, transfer_pair_distribution, WalkModel};
use qgame_core::qcore::*;
use qgame_core::Exec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn state_strategy(n: usize) -> impl Strategy<Value = QState> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1 << n)
        .prop_filter("nonzero", |v| v.iter().any(|(a, b)| a.abs() + b.abs() > 1e-3))
        .prop_map(|v| QState::from_amplitudes(v.into_iter().map(|(a, b)| C::new(a, b)).collect()).unwrap())
}

fn unitary_strategy(dim: usize) -> impl Strategy<Value = Operator> {
    any::<u64>().prop_map(move |s| Operator::random_unitary(dim, &mut ChaCha8Rng::seed_from_u64(s)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gates_preserve_normalization(s in state_strategy(3), u in unitary_strategy(4), a in 0usize..3, b in 0usize..3) {
        prop_assume!(a != b);
        let out = s.apply(&u, &[a, b]).unwrap();
        prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tensor_is_associative(a in unitary_strategy(2), b in unitary_strategy(2), c in unitary_strategy(4)) {
        let left = tensor(&tensor(&a, &b).unwrap(), &c).unwrap();
        let right = tensor(&a, &tensor(&b, &c).unwrap()).unwrap();
        prop_assert!(left.max_abs_diff(&right) < 1e-12);
    }

    #[test]
    fn enumerated_branches_sum_to_one(s in state_strategy(3), which in 0usize..4, q in 0usize..2) {
        let names = [Named::X, Named::XPrime, Named::XDoublePrime, Named::G];
        let obs = observable(names[which]).tensor(&observable(Named::XPrime)).unwrap();
        let branches = measure_enumerate(&s, &obs, &[q, 2]).unwrap();
        let total: f64 = branches.iter().map(|b| b.probability).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        for b in &branches {
            prop_assert!((b.state.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn operator_json_round_trip_is_bit_exact(u in unitary_strategy(4), s in state_strategy(2)) {
        let back: Operator = serde_json::from_str(&serde_json::to_string(&u).unwrap()).unwrap();
        prop_assert_eq!(&back, &u);
        let back: QState = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        prop_assert_eq!(back, s);
    }
}

#[test]
fn interface_probabilities_and_states_are_valid() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for i in 0..100 {
        let dim = 2 + i % 7;
        let g = Operator::random_hermitian(dim, &mut rng);
        let u = Operator::random_unitary(dim, &mut rng);
        let weights: Vec<f64> = (0..dim).map(|k| (k + 1) as f64).collect();
        let total: f64 = weights.iter().sum();
        let d = Operator::diag(&weights.iter().map(|w| C::new(w / total, 0.0)).collect::<Vec<_>>());
        let rho = DensityOp::new(Operator::product(&[&u, &d, &u.adjoint()]).unwrap()).unwrap();
        let yn = interface_yes_no(&rho, &g, 0.37 + i as f64 * 0.05).unwrap();
        assert!((yn.p_plus + yn.p_minus - 1.0).abs() < 1e-12);
        for r in [yn.rho_plus, yn.rho_minus].into_iter().flatten() {
            assert!((r.trace() - 1.0).abs() < 1e-12);
            assert!(r.min_eigenvalue() >= -1e-12);
            assert!(r.operator().is_hermitian(1e-12));
        }
    }
}

#[test]
fn sampling_agrees_with_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let s = QState::random(2, &mut rng).unwrap();
    let obs = observable(Named::X).tensor(&observable(Named::XPrime)).unwrap();
    let exact: f64 = measure_enumerate(&s, &obs, &[0, 1])
        .unwrap()
        .iter()
        .filter(|b| b.outcomes[0].sign == Sign::Plus)
        .map(|b| b.probability)
        .sum();
    let n = 40_000;
    let plus = (0..n)
        .filter(|_| measure_sample(&s, &obs, &[0, 1], &mut rng).unwrap().outcomes[0].sign == Sign::Plus)
        .count();
    let freq = plus as f64 / n as f64;
    let sigma = (exact * (1.0 - exact) / n as f64).sqrt();
    assert!((freq - exact).abs() <= 4.0 * sigma);
}

#[test]
fn survival_curve_follows_geometric_law() {
    let trials = 100_000;
    let c = survival_curve(20, trials, 2024, Exec::Parallel).unwrap();
    let sd = |p: f64| (p * (1.0 - p) / trials as f64).sqrt();
    assert!((c.first_step - 0.25).abs() <= 4.0 * sd(0.25));
    for (n, (emp, model)) in c.survival.iter().zip(&c.model).enumerate() {
        assert!((model - 0.75f64.powi(n as i32 + 1)).abs() < 1e-15);
        assert!((emp - model).abs() <= 4.0 * sd(*model), "n={}", n + 1);
    }
    // mean of a geometric law with success 1/4; its variance is 12
    assert!((c.mean_steps - 4.0).abs() <= 4.0 * (12.0 / trials as f64).sqrt());
    let seq = survival_curve(20, trials, 2024, Exec::Sequential).unwrap();
    assert_eq!(c, seq);
}

#[test]
fn transfer_pair_byproducts_are_uniform() {
    let law = transfer_pair_distribution().unwrap();
    for w in law {
        assert!((w - 0.25).abs() < 1e-12);
    }
    assert_eq!(WalkModel::from_transfer_pairs().unwrap().weights.len(), 4);
}
