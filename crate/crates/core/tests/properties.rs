use csi_shield::channel::{ChannelModel, CsiFrame, Scenario};
use csi_shield::irs::{hamming_distance, AlgParams, IrsAlgState, IrsConfig};
use csi_shield::sensing::{calibrate_threshold, observe, roc, sliding_std};
use num_complex::Complex64;
use proptest::prelude::*;
use std::sync::OnceLock;

fn noiseless() -> &'static (ChannelModel, ChannelModel) {
    static M: OnceLock<(ChannelModel, ChannelModel)> = OnceLock::new();
    M.get_or_init(|| {
        let mut s = Scenario::office(3);
        s.snr_db = f64::INFINITY;
        let mut bare = s.clone();
        bare.irs = None;
        (ChannelModel::new(&s).unwrap(), ChannelModel::new(&bare).unwrap())
    })
}

fn frames_from(values: &[f64], k: usize, n_rx: usize, n_tx: usize) -> Vec<CsiFrame> {
    let per = k * n_rx * n_tx;
    values
        .chunks_exact(2 * per)
        .enumerate()
        .map(|(t, chunk)| {
            let mut f = CsiFrame::zeros(t as u64, k, n_rx, n_tx);
            for (v, c) in f.values.iter_mut().zip(chunk.chunks_exact(2)) {
                *v = Complex64::new(c[0], c[1]);
            }
            f
        })
        .collect()
}

fn max_err(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn channel_is_environment_plus_surface_sum(bits in prop::collection::vec(any::<bool>(), 256)) {
        let (model, bare) = noiseless();
        let cfg = IrsConfig::from_bits(bits);
        let h = model.evaluate(model.env_paths(), model.irs_paths(), Some(&cfg), 0, 0).unwrap();
        let env = bare.evaluate(bare.env_paths(), &[], None, 0, 0).unwrap();
        let sum = model.irs_sum(&cfg).unwrap();
        let expect: Vec<Complex64> = env.values.iter().zip(&sum).map(|(a, b)| a + b).collect();
        prop_assert!(max_err(&h.values, &expect) < 1e-15);
    }

    #[test]
    fn complementary_configurations_cancel(bits in prop::collection::vec(any::<bool>(), 256)) {
        let (model, bare) = noiseless();
        let cfg = IrsConfig::from_bits(bits);
        let mut inv = cfg.clone();
        inv.invert();
        let a = model.evaluate(model.env_paths(), model.irs_paths(), Some(&cfg), 0, 0).unwrap();
        let b = model.evaluate(model.env_paths(), model.irs_paths(), Some(&inv), 0, 0).unwrap();
        let env = bare.evaluate(bare.env_paths(), &[], None, 0, 0).unwrap();
        let sum: Vec<Complex64> = a.values.iter().zip(&b.values).map(|(x, y)| x + y).collect();
        let twice: Vec<Complex64> = env.values.iter().map(|v| v * 2.0).collect();
        prop_assert!(max_err(&sum, &twice) < 1e-10);
    }
}

proptest! {
    #[test]
    fn sliding_std_is_non_negative(v in prop::collection::vec(-1e3..1e3f64, 2..80), w in 2usize..10) {
        prop_assume!(w <= v.len());
        let s = sliding_std(&v, w).unwrap();
        prop_assert_eq!(s.len(), v.len() - w + 1);
        prop_assert!(s.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn observation_scales_with_the_channel(
        values in prop::collection::vec(-5.0..5.0f64, 2 * 2 * 2 * 30),
        a in 0.01..100.0f64,
    ) {
        let frames = frames_from(&values, 2, 2, 1);
        let scaled: Vec<CsiFrame> = frames
            .iter()
            .map(|f| {
                let mut g = f.clone();
                g.values.iter_mut().for_each(|v| *v *= a);
                g
            })
            .collect();
        let o = observe(&frames, 10.0, 0.5).unwrap();
        let s = observe(&scaled, 10.0, 0.5).unwrap();
        for (x, y) in o.values.iter().zip(&s.values) {
            prop_assert!((a * x - y).abs() <= 1e-12 * y.abs().max(1e-300) + 1e-12);
        }
    }

    #[test]
    fn threshold_grows_with_c(
        v in prop::collection::vec(0.0..10.0f64, 1..60),
        c1 in 0.0..20.0f64,
        dc in 0.0..20.0f64,
    ) {
        prop_assert!(calibrate_threshold(&v, c1).unwrap() <= calibrate_threshold(&v, c1 + dc).unwrap());
    }

    #[test]
    fn auc_ignores_increasing_maps(
        m in prop::collection::vec(0.0..1.0f64, 1..40),
        r in prop::collection::vec(0.0..1.0f64, 1..40),
        a in 0.1..10.0f64,
        b in -5.0..5.0f64,
    ) {
        let f = |v: &[f64]| v.iter().map(|x| a * x + b).collect::<Vec<_>>();
        let plain = roc(&m, &r).unwrap().auc;
        let mapped = roc(&f(&m), &f(&r)).unwrap().auc;
        prop_assert!((plain - mapped).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&plain));
    }

    #[test]
    fn generator_is_reproducible(seed in any::<u64>()) {
        let p = AlgParams::default();
        let mut a = IrsAlgState::new(64, p, seed).unwrap();
        let mut b = IrsAlgState::new(64, p, seed).unwrap();
        for _ in 0..50 {
            prop_assert_eq!(a.step(), b.step());
        }
        prop_assert_eq!(hamming_distance(a.config(), b.config()).unwrap(), 0);
    }
}
