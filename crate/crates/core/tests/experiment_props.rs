use beamsim::beamform::{Architecture, Strategy};
use beamsim::experiment::{run_frontier, ExperimentConfig, FrontierCurve, FrontierResult};

fn throughput_at(result: &FrontierResult, kind: Architecture, strategy: Strategy, streams: usize, dbm: f64) -> f64 {
    let c = result.curve(kind, strategy, streams).unwrap();
    c.points.iter().find(|p| p.radiated_dbm == dbm).unwrap().mean_throughput
}

/// Non-decreasing up to the peak, non-increasing after it.
fn is_unimodal(values: &[f64]) -> bool {
    let peak = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map_or(0, |(i, _)| i);
    values[..=peak].windows(2).all(|w| w[0] <= w[1]) && values[peak..].windows(2).all(|w| w[0] >= w[1])
}

fn ee(c: &FrontierCurve) -> Vec<f64> {
    c.points.iter().map(|p| p.energy_efficiency).collect()
}

#[test]
fn fwa_frontier_properties() {
    let cfg = ExperimentConfig::fwa();
    let result = run_frontier(&cfg, None).unwrap();
    assert_eq!(result.curves.len(), 9);
    for c in &result.curves {
        assert_eq!(c.n_failed, 0, "{}", c.arch.label());
        assert!(c.points.windows(2).all(|w| w[0].mean_throughput <= w[1].mean_throughput));
        assert!(is_unimodal(&ee(c)), "{} x{}: {:?}", c.arch.label(), c.arch.streams_per_user, ee(c));
    }
    // digital arrays dominate hybrid ones sized to the stream count
    for streams in [1, 2] {
        for strategy in [Strategy::Zf, Strategy::Cm] {
            let d = throughput_at(&result, Architecture::Dbf, strategy, streams, 30.0);
            let h = throughput_at(&result, Architecture::Hbf, strategy, streams, 30.0);
            assert!(d >= h, "{strategy} x{streams}: {d} < {h}");
        }
    }
}

#[test]
fn v2i_frontier_is_unimodal() {
    let mut cfg = ExperimentConfig::v2i();
    cfg.n_drops = 10;
    let result = run_frontier(&cfg, None).unwrap();
    for c in &result.curves {
        assert!(is_unimodal(&ee(c)), "{} x{}: {:?}", c.arch.label(), c.arch.streams_per_user, ee(c));
    }
}

#[test]
fn single_user_cm_equals_zf() {
    let mut cfg = ExperimentConfig::fwa();
    cfg.scenario.n_users = 1;
    cfg.n_drops = 10;
    cfg.streams = vec![1];
    let result = run_frontier(&cfg, Some(2)).unwrap();
    let cm = result.curve(Architecture::Dbf, Strategy::Cm, 1).unwrap();
    let zf = result.curve(Architecture::Dbf, Strategy::Zf, 1).unwrap();
    for (a, b) in cm.points.iter().zip(&zf.points) {
        assert!((a.mean_throughput - b.mean_throughput).abs() <= 1e-9 * a.mean_throughput);
    }
}

#[test]
fn thread_count_does_not_change_results() {
    let mut cfg = ExperimentConfig::fwa();
    cfg.n_drops = 8;
    let a = run_frontier(&cfg, Some(1)).unwrap();
    let b = run_frontier(&cfg, Some(4)).unwrap();
    for (x, y) in a.curves.iter().zip(&b.curves) {
        for (p, q) in x.points.iter().zip(&y.points) {
            assert_eq!(p.mean_throughput.to_bits(), q.mean_throughput.to_bits());
            assert_eq!(p.energy_efficiency.to_bits(), q.energy_efficiency.to_bits());
        }
    }
}

#[test]
fn different_seeds_give_different_drops() {
    let mut cfg = ExperimentConfig::fwa();
    cfg.n_drops = 2;
    cfg.architectures = vec![(Architecture::Dbf, Strategy::Zf)];
    cfg.streams = vec![1];
    let a = run_frontier(&cfg, None).unwrap();
    cfg.master_seed = 2;
    let b = run_frontier(&cfg, None).unwrap();
    assert_ne!(a.curves[0].points[0].mean_throughput, b.curves[0].points[0].mean_throughput);
}

#[test]
fn rejects_empty_or_invalid_runs() {
    let mut cfg = ExperimentConfig::fwa();
    cfg.scenario.n_users = 0;
    assert!(run_frontier(&cfg, None).is_err());
    let mut cfg = ExperimentConfig::fwa();
    cfg.power_sweep_dbm.clear();
    assert!(run_frontier(&cfg, None).is_err());
}
