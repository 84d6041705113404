use bicm::{Alphabet64, Channel64, ChannelKind, Constellation, Engine, EngineConfig, MetricKind, RandomCodeExperiment, Scenario64};

fn qpsk(snr_db: f64) -> Scenario64 {
    Scenario64::new(
        Channel64::from_db(ChannelKind::Awgn, snr_db).unwrap(),
        Alphabet64::gray(Constellation::qam(4).unwrap()).unwrap(),
        Engine::new(EngineConfig::monte_carlo(50_000, 1)).unwrap(),
    )
    .unwrap()
}

#[test]
fn error_rates_stay_below_the_bound() {
    let sc = qpsk(4.0);
    for metric in [MetricKind::Matched, MetricKind::BicmSum, MetricKind::BicmMaxLog] {
        for (n, rate) in [(2, 1.0), (4, 0.5), (3, 1.0)] {
            let r = RandomCodeExperiment::new(n, rate, 20_000, metric, 11).run_in(&sc).unwrap();
            assert!(r.respects_bound(), "{metric} N={n} R={rate}: {r:?}");
        }
    }
}

#[test]
fn mismatched_decoding_does_not_beat_ml_on_paired_seeds() {
    let sc = Scenario64::new(
        Channel64::from_db(ChannelKind::Rayleigh, 5.0).unwrap(),
        Alphabet64::gray(Constellation::qam(16).unwrap()).unwrap(),
        Engine::new(EngineConfig::monte_carlo(20_000, 2)).unwrap(),
    )
    .unwrap();
    let run = |metric| RandomCodeExperiment::new(2, 1.0, 20_000, metric, 5).run_in(&sc).unwrap();
    let (ml, sum, maxlog) = (run(MetricKind::Matched), run(MetricKind::BicmSum), run(MetricKind::BicmMaxLog));
    assert!(sum.error_rate >= ml.error_rate - ml.ci_halfwidth, "{sum:?} {ml:?}");
    assert!(maxlog.error_rate >= ml.error_rate - ml.ci_halfwidth);
}

#[test]
fn zero_rate_has_no_errors() {
    let r = RandomCodeExperiment::new(4, 0.0, 10_000, MetricKind::BicmSum, 3).run_in(&qpsk(-5.0)).unwrap();
    assert_eq!(r.errors, 0);
    assert_eq!(r.exponent.rho_opt, 1.0);
}
