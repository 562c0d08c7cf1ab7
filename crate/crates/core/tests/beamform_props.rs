use beamsim::beamform::{design_for_channels, Architecture, ArchitectureConfig, Strategy};
use beamsim::link::{sum_throughput, LinkBudget, StreamGains};
use beamsim::linalg::{inner, norm, ComplexMatrix};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn iid_channels(n_users: usize, n_rx: usize, n_tx: usize, seed: u64) -> Vec<ComplexMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_users)
        .map(|_| {
            ComplexMatrix::from_fn(n_rx, n_tx, |_, _| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re, im)
            })
        })
        .collect()
}

const ALL: [(Architecture, Strategy); 5] = [
    (Architecture::Abf, Strategy::Steering),
    (Architecture::Hbf, Strategy::Cm),
    (Architecture::Hbf, Strategy::Zf),
    (Architecture::Dbf, Strategy::Cm),
    (Architecture::Dbf, Strategy::Zf),
];

fn assert_unit_modulus(m: &ComplexMatrix) {
    for z in m.as_slice() {
        assert!((z.norm() - 1.0).abs() <= 1e-12, "{z}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn analog_stages_are_unit_modulus(
        seed in any::<u64>(),
        users in 1..4usize,
        bits in prop::sample::select(vec![None, Some(1u32), Some(2), Some(4)]),
        hybrid in any::<bool>(),
    ) {
        let (kind, strategy) = if hybrid {
            (Architecture::Hbf, Strategy::Zf)
        } else {
            (Architecture::Abf, Strategy::Steering)
        };
        let hs = iid_channels(users, 4, 16, seed);
        let refs: Vec<_> = hs.iter().collect();
        let cfg = ArchitectureConfig::sized(kind, strategy, 1, users, 16, 4, bits).unwrap();
        let bf = design_for_channels(&refs, &cfg, 1.0).unwrap();
        assert_unit_modulus(bf.bs_rf_stage.as_ref().unwrap());
        for ue in &bf.ue {
            assert_unit_modulus(ue.rf_stage.as_ref().unwrap());
        }
    }

    #[test]
    fn zf_leaves_no_residual_interference(
        seed in any::<u64>(),
        users in 1..5usize,
        extra in 0..8usize,
        n_rx in 1..5usize,
    ) {
        let n_tx = 2 * users + extra;
        let hs = iid_channels(users, n_rx, n_tx, seed);
        let refs: Vec<_> = hs.iter().collect();
        let cfg = ArchitectureConfig::sized(Architecture::Dbf, Strategy::Zf, 1, users, n_tx, n_rx, None).unwrap();
        let bf = design_for_channels(&refs, &cfg, 1.0).unwrap();
        let g = StreamGains::measure(&refs, &bf);
        for (s, i) in g.signal.iter().zip(&g.interference) {
            prop_assert!(*i <= 1e-6 * s, "{i} vs {s}");
        }
    }

    #[test]
    fn precoder_directions_ignore_channel_scale(
        seed in any::<u64>(),
        scale in 1e-6..1e6f64,
        which in 0..5usize,
    ) {
        let (kind, strategy) = ALL[which];
        let hs = iid_channels(3, 4, 16, seed);
        let scaled: Vec<_> = hs.iter().map(|h| h.scale(Complex64::new(scale, 0.0))).collect();
        let cfg = ArchitectureConfig::sized(kind, strategy, 1, 3, 16, 4, None).unwrap();
        let a = design_for_channels(&hs.iter().collect::<Vec<_>>(), &cfg, 1.0).unwrap().precoder();
        let b = design_for_channels(&scaled.iter().collect::<Vec<_>>(), &cfg, 1.0).unwrap().precoder();
        for i in 0..a.cols() {
            for j in 0..a.cols() {
                let (ai, aj, bi, bj) = (a.column(i), a.column(j), b.column(i), b.column(j));
                let ca = inner(&ai, &aj).norm() / (norm(&ai) * norm(&aj));
                let cb = inner(&bi, &bj).norm() / (norm(&bi) * norm(&bj));
                prop_assert!((ca - cb).abs() <= 1e-10);
            }
            let (ai, bi) = (a.column(i), b.column(i));
            prop_assert!((inner(&ai, &bi).norm() / (norm(&ai) * norm(&bi)) - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn radiated_power_is_the_budget(seed in any::<u64>(), power in 1e-4..10.0f64, which in 0..5usize) {
        let (kind, strategy) = ALL[which];
        let hs = iid_channels(2, 4, 8, seed);
        let refs: Vec<_> = hs.iter().collect();
        let cfg = ArchitectureConfig::sized(kind, strategy, 1, 2, 8, 4, None).unwrap();
        let bf = design_for_channels(&refs, &cfg, power).unwrap();
        prop_assert!((bf.radiated_power() - power).abs() <= 1e-10 * power);
    }

    #[test]
    fn sum_rate_is_sum_of_stream_rates(
        sinrs in prop::collection::vec(0.0..1e4f64, 1..20),
        bandwidth in 1e6..1e9f64,
    ) {
        let budget = LinkBudget { bandwidth, ..LinkBudget::default() };
        let report = sum_throughput(&sinrs, 1, &budget);
        let mut brute = 0.0;
        for s in &sinrs {
            brute += bandwidth * (1.0 + s).log2();
        }
        prop_assert!((report.sum_throughput - brute).abs() <= 1e-9 * brute.max(1.0));
    }
}

#[test]
fn single_user_cm_and_zf_coincide() {
    for seed in 0..20 {
        let hs = iid_channels(1, 4, 16, seed);
        let refs: Vec<_> = hs.iter().collect();
        let mk = |s| ArchitectureConfig::sized(Architecture::Dbf, s, 1, 1, 16, 4, None).unwrap();
        let cm = design_for_channels(&refs, &mk(Strategy::Cm), 1.0).unwrap().precoder();
        let zf = design_for_channels(&refs, &mk(Strategy::Zf), 1.0).unwrap().precoder();
        let c = inner(&cm.column(0), &zf.column(0)).norm();
        assert!((c - 1.0).abs() < 1e-10);
    }
}
