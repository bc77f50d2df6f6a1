use glnn_lab::experiments::{run_dynamic, run_se_vs_cee, run_se_vs_power, run_timing};
use glnn_lab::{Algorithm, LabConfig, RunOptions};

fn parse(text: &str) -> LabConfig {
    LabConfig::parse(text).unwrap()
}

#[test]
fn dynamic_run_covers_all_phases_and_adapts() {
    let cfg = parse("[experiment]\nalgorithms = glnn\n");
    let out = run_dynamic(&cfg, &RunOptions::default()).unwrap();
    let glnn: Vec<_> = out.rows.iter().filter(|r| r.algorithm == Algorithm::Glnn).collect();
    assert_eq!(glnn.len(), 1800);
    assert!(glnn.iter().all(|r| !r.warmup));
    let boundaries: Vec<(usize, f64)> = out
        .rows
        .iter()
        .filter(|r| r.algorithm == Algorithm::PhaseBoundary)
        .map(|r| (r.sample, r.sweep_value))
        .collect();
    assert_eq!(boundaries, vec![(700, 15.0), (1300, 30.0)]);

    let rate = |lo: usize, hi: usize| {
        let v: Vec<f64> = glnn[lo..hi].iter().map(|r| r.rate.unwrap()).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let (early, late) = (rate(0, 50), rate(500, 700));
    assert!(late >= early, "first 50 slots {early}, last 200 of phase 1 {late}");

    let speeds: Vec<f64> = out.summary.iter().map(|s| s.sweep_value).collect();
    assert_eq!(speeds, vec![6.0, 15.0, 30.0]);
    assert_eq!(out.smoothed.len(), 1800);
    let first_of_phase_2 = &out.smoothed[700];
    assert_eq!((first_of_phase_2.phase, first_of_phase_2.raw), (1, first_of_phase_2.smoothed));
}

#[test]
fn wmmse_rate_rises_with_power() {
    let cfg = parse("[glnn]\nwarmup_samples = 0\n[experiment]\nalgorithms = wmmse\neval_samples = 10\n");
    let out = run_se_vs_power(&cfg, &RunOptions::default()).unwrap();
    let means: Vec<f64> = out.summary.iter().map(|s| s.mean_rate).collect();
    assert_eq!(means.len(), 6);
    assert!(means.windows(2).all(|w| w[1] > w[0]), "{means:?}");
}

#[test]
fn cee_means_use_exactly_the_evaluation_samples() {
    let cfg = parse(
        "[scenario]\nphase_table = 6:40\n[glnn]\nwarmup_samples = 25\n\
         [experiment]\neval_samples = 12\ncee_sweep_db = -15, -5\n",
    );
    let out = run_se_vs_cee(&cfg, &RunOptions::default()).unwrap();
    assert_eq!(out.summary.len(), 4);
    assert!(out.summary.iter().all(|s| s.samples == 12));
    let glnn_rows = out.rows.iter().filter(|r| r.algorithm == Algorithm::Glnn && r.sweep_value == -5.0);
    let (warm, eval): (Vec<_>, Vec<_>) = glnn_rows.partition(|r| r.warmup);
    assert_eq!((warm.len(), eval.len()), (25, 12));
    assert!(warm.iter().all(|r| r.sample < 25) && eval.iter().all(|r| r.sample >= 25));
    let wmmse_slots: Vec<usize> = out
        .rows
        .iter()
        .filter(|r| r.algorithm == Algorithm::Wmmse && r.sweep_value == -5.0)
        .map(|r| r.sample)
        .collect();
    assert_eq!(wmmse_slots, (25..37).collect::<Vec<_>>());
}

#[test]
fn wmmse_time_grows_faster_than_antenna_count() {
    let cfg = parse("[experiment]\nalgorithms = wmmse\ntiming_antennas = 32, 160\ntiming_samples = 9\n");
    let out = run_timing(&cfg, &RunOptions::default()).unwrap();
    let t = |m: f64| out.summary(Algorithm::Wmmse, m).unwrap().median_wall_time_us;
    assert!(t(160.0) / t(32.0) > 5.0, "{} vs {}", t(160.0), t(32.0));
    assert!(out.rows.iter().filter(|r| !r.warmup).all(|r| r.wall_time_us.unwrap() > 0.0));
    assert!(out.rows.iter().all(|r| r.iterations.unwrap() >= 1));
}
