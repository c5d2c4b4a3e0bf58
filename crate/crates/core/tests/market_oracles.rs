use num_complex::Complex64 as C;
use proptest::prelude::*;
use qgame_core::market::*;
use qgame_core::Exec;
use statrs::function::erf::erf;
use std::f64::consts::PI;

fn grid() -> GridSpec {
    GridSpec::symmetric(16.0, 256).unwrap()
}

fn phi(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / 2f64.sqrt()))
}

#[test]
fn gaussian_wigner_matches_closed_form() {
    for s in [0.7, 1.0, 1.5] {
        let psi = make_gaussian_strategy(0.0, s, &grid(), true).unwrap();
        let w = wigner(&psi, Exec::Parallel).unwrap();
        let g = w.grid;
        let mut dev: f64 = 0.0;
        for k in 0..g.n_points {
            for j in 0..g.n_points {
                let (p, q) = (g.p(k), g.q(j));
                let exact = (-q * q / (s * s) - s * s * p * p).exp() / PI;
                dev = dev.max((w.get(k, j) - exact).abs());
            }
        }
        assert!(dev < 1e-6, "s={s}: {dev:e}");
        assert!(w.max_imag < 1e-10);
        assert!(!w.aliasing);
        assert!((w.normalization() - 1.0).abs() < 1e-8);
        assert!(w.min_value() >= -1e-10);
    }
}

#[test]
fn wigner_marginals() {
    let psi = make_gaussian_strategy(0.4, 1.2, &grid(), false).unwrap();
    let w = wigner(&psi, Exec::Sequential).unwrap();
    for (m, d) in w.q_marginal().iter().zip(psi.density()) {
        assert!((m - d).abs() < 1e-6);
    }
    for (m, d) in w.p_marginal().iter().zip(psi.to_momentum().density()) {
        assert!((m - d).abs() < 1e-6);
    }
}

#[test]
fn wigner_is_executor_independent() {
    let psi = make_gaussian_strategy(0.3, 0.9, &grid(), false).unwrap();
    let a = wigner(&psi, Exec::Sequential).unwrap();
    let b = wigner(&psi, Exec::Parallel).unwrap();
    assert_eq!(a, b);
}

#[test]
fn non_gaussian_wigner_goes_negative() {
    // first excited state: W(0,0) = -1/π
    let psi = WaveFunction1D::from_fn(grid(), |q| C::new(q * (-q * q / 2.0).exp(), 0.0)).unwrap();
    let w = wigner(&psi, Exec::Parallel).unwrap();
    let g = w.grid;
    assert!((w.get(g.n_points / 2, g.n_points / 2) + 1.0 / PI).abs() < 1e-6);
    assert!((w.normalization() - 1.0).abs() < 1e-8);
}

#[test]
fn mixture_of_displaced_gaussians_is_pointwise_average() {
    let a = make_gaussian_strategy(-2.0, 1.0, &grid(), false).unwrap();
    let b = make_gaussian_strategy(2.5, 0.8, &grid(), false).unwrap();
    let wa = wigner(&a, Exec::Parallel).unwrap();
    let wb = wigner(&b, Exec::Parallel).unwrap();
    let mix = mix_wigner(&[(0.5, a), (0.5, b)], Exec::Parallel).unwrap();
    for ((m, x), y) in mix.values.iter().zip(&wa.values).zip(&wb.values) {
        assert!((m - 0.5 * (x + y)).abs() < 1e-12);
    }
    assert!((mix.normalization() - 1.0).abs() < 1e-8);
}

#[test]
fn demand_cdf_matches_error_function() {
    let psi = make_gaussian_strategy(0.0, 1.0, &grid(), true).unwrap();
    let oracle = phi(2f64.sqrt());
    assert!((oracle - 0.921350).abs() < 1e-6);
    assert!((demand_cdf(&psi, 1f64.exp()).unwrap() - oracle).abs() < 1e-5);
    for x in [-2.0, -0.5, 0.3, 1.7] {
        // Var(q) = 1/2
        assert!((demand_cdf(&psi, f64::exp(x)).unwrap() - phi(x * 2f64.sqrt())).abs() < 1e-9);
        // unit Gaussian is self-dual, so p has the same law
        assert!((supply_cdf(&psi, f64::exp(-x)).unwrap() - phi(x * 2f64.sqrt())).abs() < 1e-9);
    }
}

#[test]
fn offset_shifts_the_price_axis() {
    let psi = make_gaussian_strategy(1.5, 1.0, &grid(), true).unwrap();
    assert!((demand_cdf(&psi, 1.5f64.exp()).unwrap() - 0.5).abs() < 1e-8);
    assert!((supply_cdf(&psi, 1.5f64.exp()).unwrap() - 0.5).abs() < 1e-8);
}

#[test]
fn grid_refinement_changes_cdf_little() {
    let coarse = GridSpec::symmetric(16.0, 512).unwrap();
    let strategies = |g: &GridSpec| {
        vec![
            make_gaussian_strategy(0.0, 1.0, g, true).unwrap(),
            WaveFunction1D::from_fn(*g, |q| {
                C::new((-(q - 1.0).powi(2)).exp() + 0.5 * (-(q + 2.0).powi(2) / 3.0).exp(), 0.0)
            })
            .unwrap(),
        ]
    };
    for (a, b) in strategies(&coarse).iter().zip(strategies(&coarse.refined()).iter()) {
        for x in [-3.0, -1.1, 0.0, 0.37, 2.2] {
            let c = f64::exp(x);
            assert!((demand_cdf(a, c).unwrap() - demand_cdf(b, c).unwrap()).abs() < 1e-6);
            assert!((supply_cdf(a, c).unwrap() - supply_cdf(b, c).unwrap()).abs() < 1e-6);
        }
    }
}

#[test]
fn symmetric_pair_transaction_amplitudes_agree() {
    let g = GridSpec::self_dual(128).unwrap();
    let buyer = make_gaussian_strategy(0.0, 1.0, &g, true).unwrap();
    let seller = buyer.clone();
    let t = transaction_project(&[buyer.clone(), seller], &[Trade::Buy(0.0), Trade::Sell(0.0)], Exec::Parallel).unwrap();
    // |ψ(0)|²Δq with ψ(0) = π^{-1/4}
    assert!((t[0].amplitude - g.dq() / PI.sqrt()).abs() < 1e-12);
    assert!((t[0].amplitude - t[1].amplitude).abs() < 1e-12);
    assert_eq!(t[1].strategy.basis, Basis::Momentum);
}

#[test]
fn json_round_trip_is_bit_exact() {
    let psi = make_gaussian_strategy(0.123, 0.987, &grid(), false).unwrap().to_momentum();
    let back = WaveFunction1D::from_json(&psi.to_json().unwrap()).unwrap();
    assert_eq!(psi, back);
    let w = wigner(&psi, Exec::Parallel).unwrap();
    let wb = WignerGrid::from_json(&w.to_json().unwrap()).unwrap();
    assert_eq!(w, wb);
}

fn mixture(params: &[(f64, f64, f64)]) -> WaveFunction1D {
    WaveFunction1D::from_fn(grid(), |q| {
        params
            .iter()
            .map(|&(a, m, s)| C::new(a * (-(q - m).powi(2) / (2.0 * s * s)).exp(), 0.0))
            .sum()
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn demand_cdf_is_a_distribution(
        params in prop::collection::vec((0.1f64..1.0, -3.0f64..3.0, 0.6f64..2.0), 1..4),
        xs in prop::collection::vec(-6.0f64..6.0, 2..12),
    ) {
        let psi = mixture(&params);
        let mut xs = xs;
        xs.sort_by(f64::total_cmp);
        let vals: Vec<f64> = xs.iter().map(|&x| demand_cdf(&psi, x.exp()).unwrap()).collect();
        for v in &vals {
            prop_assert!((0.0..=1.0).contains(v));
        }
        for w in vals.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-12);
        }
    }

    #[test]
    fn fourier_round_trip(params in prop::collection::vec((0.1f64..1.0, -3.0f64..3.0, 0.6f64..2.0), 1..4)) {
        let psi = mixture(&params);
        let mom = psi.to_momentum();
        prop_assert!((mom.norm_sqr() - 1.0).abs() < 1e-10);
        let back = mom.to_position();
        for (a, b) in psi.samples.iter().zip(&back.samples) {
            prop_assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn centred_strategies_split_at_unit_price(m in -2.0f64..2.0, s in 0.6f64..1.5) {
        let psi = make_gaussian_strategy(m, s, &grid(), false).unwrap().recenter();
        prop_assert!(psi.mean().abs() < 1e-8);
        prop_assert!((demand_cdf(&psi, psi.offset.exp()).unwrap() - 0.5).abs() < 1e-8);
    }
}
