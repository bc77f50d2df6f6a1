use glnn_core::channel::{inject_cee, ChannelSimulator, Phase, ScenarioConfig};
use glnn_core::glnn::power_normalize;
use glnn_core::liquid::{cell_forward, LiquidLayerParams};
use glnn_core::metrics::{measure_cee, sum_se};
use glnn_core::wmmse::{wmmse_solve, WmmseConfig};
use glnn_core::ComplexMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = ComplexMatrix> {
    prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), rows * cols).prop_map(move |v| {
        ComplexMatrix::from_fn(rows, cols, |i, j| {
            let (re, im) = v[i * cols + j];
            Complex64::new(re, im)
        })
    })
}

fn channel_and_base() -> impl Strategy<Value = (ComplexMatrix, ComplexMatrix)> {
    (1usize..6, 0usize..8, 1usize..4).prop_flat_map(|(n, extra, k)| (matrix(n, n + extra), matrix(n, k.min(n))))
}

fn non_degenerate(m: &ComplexMatrix) -> bool {
    m.frobenius_norm() > 1e-3
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normalized_precoder_spends_exactly_p((h, x) in channel_and_base(), p in 1e-3f64..1e3, s in 1e-3f64..1e3) {
        let w = power_normalize(&h, &x, p);
        prop_assume!(w.is_ok());
        let w = w.unwrap();
        prop_assert!((w.frobenius_norm_sq() - p).abs() <= 1e-9 * p);
        let scaled = power_normalize(&h, &x.scale(s), p).unwrap();
        prop_assert!(scaled.max_abs_diff(&w) <= 1e-9 * p.sqrt());
    }

    #[test]
    fn injected_error_measures_at_target(h in matrix(4, 6), target in -40.0f64..10.0, seed in any::<u64>()) {
        prop_assume!(non_degenerate(&h));
        let est = inject_cee(&h, target, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert!((measure_cee(&h, &est).unwrap() - target).abs() < 1e-9);
    }

    #[test]
    fn rates_are_nonnegative_and_weighted(h in matrix(4, 5), w in matrix(5, 2), a in 0.1f64..3.0, b in 0.1f64..3.0) {
        let r = sum_se(&h, &w, &[a, b], 0.5).unwrap();
        prop_assert!(r.per_user.iter().all(|&x| x >= -1e-12));
        prop_assert!((r.total - (a * r.per_user[0] + b * r.per_user[1])).abs() < 1e-9);
    }

    #[test]
    fn cell_output_lies_between_heads(seed in any::<u64>(), batch in 1usize..5, d in 1usize..6, c in 1usize..5, t in 0.01f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = LiquidLayerParams::init(d, c, &mut rng);
        let prev = ComplexMatrix::from_fn(batch, d, |i, j| Complex64::new(((i + 3 * j) as f64).sin(), 0.0));
        let input = ComplexMatrix::from_fn(batch, c, |i, j| Complex64::new(((2 * i + j) as f64).cos() * 3.0, 0.0));
        let out = cell_forward(&p, &prev, &input, t).unwrap();
        prop_assert!(out.is_real());
        prop_assert!(out.re().iter().all(|v| v.abs() <= 1.0));
    }

    #[test]
    fn wmmse_is_feasible_and_never_descends(h in matrix(4, 6), p in 0.1f64..50.0) {
        prop_assume!(non_degenerate(&h));
        let sol = wmmse_solve(&h, p, 1.0, &[1.0, 1.0], &WmmseConfig::default()).unwrap();
        prop_assert!(sol.w.frobenius_norm_sq() <= p * (1.0 + 1e-9));
        for step in sol.trajectory.windows(2) {
            prop_assert!(step[1] >= step[0] - 1e-6);
        }
    }
}

#[test]
fn slots_do_not_depend_on_generation_order() {
    let mut cfg = ScenarioConfig::with_dims(8, 2, 2);
    cfg.phase_table = vec![Phase { speed: 6.0, slots: 10 }, Phase { speed: 30.0, slots: 10 }];
    let sim = ChannelSimulator::new(cfg).unwrap();
    let forward: Vec<_> = (0..20).map(|s| sim.sample(s, Some(-10.0)).unwrap()).collect();
    for s in (0..20).rev() {
        let again = sim.sample(s, Some(-10.0)).unwrap();
        assert_eq!(again.h_true, forward[s].h_true);
        assert_eq!(again.h_est, forward[s].h_est);
    }
}

#[test]
fn faster_phases_change_the_channel_more() {
    let mut cfg = ScenarioConfig::with_dims(32, 2, 2);
    cfg.phase_table = vec![
        Phase { speed: 6.0, slots: 50 },
        Phase { speed: 15.0, slots: 50 },
        Phase { speed: 30.0, slots: 50 },
    ];
    let sim = ChannelSimulator::new(cfg).unwrap();
    let drift = |from: usize| {
        let a = sim.true_channel(from).unwrap();
        let b = sim.true_channel(from + 40).unwrap();
        b.sub(&a).unwrap().frobenius_norm() / a.frobenius_norm()
    };
    let (slow, mid, fast) = (drift(0), drift(50), drift(100));
    assert!(slow < mid && mid < fast, "{slow} {mid} {fast}");
}
