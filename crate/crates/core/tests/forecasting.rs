use ndarray::{s, Array2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use tfavar::evaluate::fluctuation_test_at;
use tfavar::forecast::{aligned_errors, rolling_forecast, RollingOptions};
use tfavar::panel::PanelSeries;
use tfavar::pipeline::{FactorMode, FitOptions, LambdaMode, TauMode};
use tfavar::simulate::{simulate_panel, DgpSpec, FactorDesign, Innovation, NoiseCov, VarDesign};

fn gaussian(seed: u64, n: usize, p: usize) -> Array2<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    Array2::from_shape_simple_fn((n, p), || rng.sample(StandardNormal))
}

#[test]
fn white_noise_forecasts_near_zero() {
    let x = PanelSeries::from_values(gaussian(4, 240, 10)).unwrap();
    let opts = RollingOptions {
        window: 200,
        horizon: 1,
        fit: FitOptions {
            factors: FactorMode::Fixed(0),
            tau: TauMode::Fixed(f64::INFINITY),
            ..Default::default()
        },
        reselect_r: false,
    };
    let run = rolling_forecast(&x, &opts).unwrap();
    assert_eq!(run.origins.len(), 40);
    let mean = run.combined.iter().map(|v| v.abs()).sum::<f64>() / run.combined.len() as f64;
    assert!(mean < 0.1, "{mean}");
}

fn heavy_panel(seed: u64) -> PanelSeries {
    let spec = DgpSpec {
        n: 110,
        p: 8,
        var_design: VarDesign::Banded,
        innovation: Innovation::StudentT { nu: 2.1 },
        factors: FactorDesign::Var1,
        r: 1,
        sigma_eps: NoiseCov::PowerDecay,
        burn_in: 500,
        seed,
    };
    simulate_panel(&spec).unwrap().x
}

fn cheap(window: usize) -> RollingOptions {
    RollingOptions {
        window,
        horizon: 1,
        fit: FitOptions {
            factors: FactorMode::Fixed(1),
            lambda: LambdaMode::Cv { n_lambda: 8, n_folds: 3 },
            ..Default::default()
        },
        reselect_r: false,
    }
}

#[test]
fn paired_runs_share_origins() {
    let x = heavy_panel(21);
    let opts = cheap(80);
    let a = rolling_forecast(&x, &opts).unwrap();
    let b = rolling_forecast(&x, &opts.baseline()).unwrap();
    let (origins, ea, eb) = aligned_errors(&a, &b);
    assert_eq!(origins, a.origins);
    assert_eq!(origins, b.origins);
    assert_eq!(ea.dim(), eb.dim());
    assert_eq!(a.realised, b.realised);
}

#[test]
fn fluctuation_path_scale_invariant() {
    let a = gaussian(9, 200, 1).into_raw_vec_and_offset().0;
    let b = gaussian(10, 200, 1).into_raw_vec_and_offset().0;
    let base = fluctuation_test_at(&a, &b, 0.3, 3.0).unwrap();
    let a3: Vec<f64> = a.iter().map(|v| 7.5 * v).collect();
    let b3: Vec<f64> = b.iter().map(|v| 7.5 * v).collect();
    let scaled = fluctuation_test_at(&a3, &b3, 0.3, 3.0).unwrap();
    for (u, v) in base.path.iter().zip(&scaled.path) {
        assert!((u - v).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn future_rows_do_not_leak(seed in 0u64..1000, cut in 70usize..100, bump in 1.0f64..1e3) {
        let x = heavy_panel(seed);
        let opts = cheap(60);
        let base = rolling_forecast(&x, &opts).unwrap();
        let mut v = x.values().to_owned();
        v.slice_mut(s![cut + 1.., ..]).mapv_inplace(|z| z * bump - bump);
        let moved = rolling_forecast(&x.with_values(v).unwrap(), &opts).unwrap();
        for (k, &o) in base.origins.iter().enumerate().take_while(|(_, o)| **o <= cut) {
            let k2 = moved.origins.iter().position(|&q| q == o).unwrap();
            prop_assert_eq!(base.combined.row(k), moved.combined.row(k2));
            prop_assert_eq!(base.common.row(k), moved.common.row(k2));
        }
    }

    #[test]
    fn combined_is_common_plus_idio(seed in 0u64..1000) {
        let run = rolling_forecast(&heavy_panel(seed), &cheap(90)).unwrap();
        prop_assert_eq!(&run.common + &run.idio, run.combined);
    }
}
