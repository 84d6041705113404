//! Structural and statistical invariants of measures and exponents.

use bicm::{
    Alphabet64, Channel64, ChannelKind, Constellation, Engine, EngineConfig, ExtrinsicModel, Family64, MetricKind,
    MetricSpec64, SMode, Scenario64,
};
use proptest::prelude::*;

const SAMPLES: usize = 20_000;

fn constellation(index: usize) -> Constellation<f64> {
    match index {
        0 => Constellation::psk(2),
        1 => Constellation::qam(4),
        2 => Constellation::psk(8),
        _ => Constellation::qam(16),
    }
    .unwrap()
}

fn scenario(index: usize, kind: ChannelKind, snr_db: f64, seed: u64) -> Scenario64 {
    Scenario64::new(
        Channel64::from_db(kind, snr_db).unwrap(),
        Alphabet64::gray(constellation(index)).unwrap(),
        Engine::new(EngineConfig::monte_carlo(SAMPLES, seed)).unwrap(),
    )
    .unwrap()
}

fn channel_kind() -> impl Strategy<Value = ChannelKind> {
    prop_oneof![Just(ChannelKind::Awgn), Just(ChannelKind::Rayleigh)]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 6, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn measures_respect_data_processing(c in 0usize..4, kind in channel_kind(), snr_db in -10.0..20.0f64, seed in 0u64..1000) {
        let sc = scenario(c, kind, snr_db, seed);
        let cm = sc.cm_capacity().unwrap();
        let bits = sc.alphabet().bits() as f64;
        // 1e-12 absorbs rounding when the estimate sits at its ceiling
        prop_assert!(cm.value >= -3.0 * cm.std_error - 1e-12 && cm.value <= bits + 3.0 * cm.std_error + 1e-12);
        let bicm = sc.bicm_capacity().unwrap();
        prop_assert!(bicm.value <= cm.value + 3.0 * cm.combined_error(&bicm));
        for b in bicm.per_bit.as_ref().unwrap() {
            prop_assert!(*b <= 1.0 + 3.0 * bicm.std_error + 1e-12);
        }
        for spec in [MetricSpec64::sum(), MetricSpec64::maxlog()] {
            let g = sc.gmi(&spec).unwrap();
            prop_assert!(g.value <= cm.value + 3.0 * cm.combined_error(&g), "{} {:?} {:?}", spec, g, cm);
        }
    }

    #[test]
    fn gallager_functions_are_ordered_and_monotone(c in 1usize..4, kind in channel_kind(), snr_db in -5.0..15.0f64, seed in 0u64..1000) {
        let sc = scenario(c, kind, snr_db, seed);
        let sum = Family64::mismatched(MetricSpec64::sum(), SMode::Optimize);
        let maxlog = Family64::mismatched(MetricSpec64::maxlog(), SMode::Coupled);
        let hyp = Family64::mismatched(MetricSpec64::extrinsic_hyp(ExtrinsicModel::gaussian_llr(vec![1.0]).unwrap()), SMode::Optimize);
        for family in [Family64::Cm, Family64::Ind, sum.clone(), maxlog.clone(), hyp.clone()] {
            prop_assert_eq!(sc.e0_family(&family, 0.0).unwrap().estimate.mean, 0.0);
            let mut previous = sc.e0_family(&family, 0.0).unwrap().estimate;
            for i in 1..=5 {
                let current = sc.e0_family(&family, i as f64 / 5.0).unwrap().estimate;
                prop_assert!(current.mean >= previous.mean - 3.0 * current.combined_error(&previous), "{}", family);
                previous = current;
            }
        }
        for rho in [0.3, 1.0] {
            let cm = sc.e0_cm(rho).unwrap();
            for family in [&sum, &maxlog, &hyp] {
                let q = sc.e0_family(family, rho).unwrap().estimate;
                prop_assert!(q.mean <= cm.mean + 3.0 * cm.combined_error(&q), "{} rho={}", family, rho);
            }
        }
    }
}

#[test]
fn power_of_likelihood_attains_cm_exponent() {
    let sc = scenario(3, ChannelKind::Rayleigh, 5.0, 1);
    let family = Family64::mismatched(MetricKind::MatchedPower(3.0), SMode::Optimize);
    for rho in [0.25, 0.5, 1.0] {
        let cm = sc.e0_cm(rho).unwrap();
        let v = sc.e0_family(&family, rho).unwrap();
        // on finite samples the optimum over s may edge past the Hölder point
        assert!(v.estimate.mean >= cm.mean - 1e-9, "rho={rho}: {v:?} {cm:?}");
        assert!(v.estimate.mean - cm.mean < 3.0 * cm.std_error, "rho={rho}: {v:?} {cm:?}");
        let coupled = 1.0 / (3.0 * (1.0 + rho));
        assert!((v.s.unwrap() - coupled).abs() < 0.02 * coupled, "{:?}", v.s);
    }
}

#[test]
fn uninformative_extrinsic_reduces_to_sum_metric() {
    let sc = scenario(2, ChannelKind::Awgn, 5.0, 2);
    for spec in [MetricSpec64::extrinsic_tx(ExtrinsicModel::None), MetricSpec64::extrinsic_hyp(ExtrinsicModel::None)] {
        for (rho, s) in [(0.5, 0.7), (1.0, 0.5)] {
            let ext = sc.e0_extrinsic(&spec, rho, s).unwrap();
            let sum = sc.e0_q(&MetricSpec64::sum(), rho, s).unwrap();
            assert!((ext.mean - sum.mean).abs() < 1e-10, "{spec}");
        }
    }
}

#[test]
fn slope_at_zero_recovers_gmi() {
    let sc = scenario(3, ChannelKind::Rayleigh, 5.0, 3);
    let h = 1e-3;
    for spec in [MetricSpec64::sum(), MetricSpec64::maxlog()] {
        for s in [0.6, 1.0, 1.5] {
            let slope = sc.e0_q(&spec, h, s).unwrap().mean / h;
            let gmi = sc.gmi_at_s(&spec, s).unwrap().value * std::f64::consts::LN_2;
            assert!((slope - gmi).abs() < 0.05 * gmi, "{spec} s={s}: {slope} {gmi}");
        }
    }
}

#[test]
fn exponent_curves_fall_and_cross_zero_near_gmi() {
    let sc = scenario(3, ChannelKind::Rayleigh, 5.0, 4);
    let rates: Vec<f64> = (0..=40).map(|i| i as f64 * 0.05).collect();
    let families = [
        (Family64::Cm, sc.cm_capacity().unwrap()),
        (Family64::mismatched(MetricSpec64::sum(), SMode::Optimize), sc.gmi(&MetricSpec64::sum()).unwrap()),
        (Family64::mismatched(MetricSpec64::maxlog(), SMode::Optimize), sc.gmi(&MetricSpec64::maxlog()).unwrap()),
    ];
    for (family, rate) in families {
        let curve = sc.exponent_curve(&family, &rates).unwrap();
        assert!(curve.windows(2).all(|w| w[1].exponent <= w[0].exponent + 1e-12), "{family}");
        assert!(curve.iter().all(|p| p.exponent >= 0.0));
        let crossing = curve.iter().find(|p| p.exponent <= 1e-6).map(|p| p.rate_bits).unwrap();
        // the first zero on a 0.05-bit grid lies within one step above the rate
        assert!(crossing >= rate.value - 0.02 && crossing <= rate.value + 0.05 + 0.02, "{family}: {crossing} vs {}", rate.value);
    }
}

#[test]
fn mismatched_exponent_stays_below_cm_exponent() {
    let sc = scenario(3, ChannelKind::Rayleigh, 15.0, 5);
    let sum = Family64::mismatched(MetricSpec64::sum(), SMode::Optimize);
    for i in 1..=7 {
        let rate = 0.5 * i as f64;
        let cm = sc.random_coding_exponent(&Family64::Cm, rate).unwrap();
        let q = sc.random_coding_exponent(&sum, rate).unwrap();
        assert!(q.exponent <= cm.exponent + 3.0 * cm.std_error.hypot(q.std_error), "R={rate}");
    }
}

#[test]
fn extrinsic_pseudo_gmi_grows_with_reliability() {
    let sc = scenario(3, ChannelKind::Rayleigh, 5.0, 6);
    let bicm = sc.bicm_capacity().unwrap();
    let perfect = sc.pseudo_gmi_extrinsic_tx(&ExtrinsicModel::Perfect).unwrap();
    assert!(perfect.pseudo && perfect.value >= bicm.value - 3.0 * bicm.std_error);
    let mut previous = sc.pseudo_gmi_extrinsic_tx(&ExtrinsicModel::gaussian_llr(vec![0.0]).unwrap()).unwrap();
    assert!((previous.value - bicm.value).abs() < 1e-9);
    for sigma in [1.0, 2.0, 4.0] {
        let current = sc.pseudo_gmi_extrinsic_tx(&ExtrinsicModel::gaussian_llr(vec![sigma]).unwrap()).unwrap();
        assert!(current.value >= previous.value - 3.0 * current.combined_error(&previous), "sigma={sigma}");
        previous = current;
    }
}

#[test]
fn hypothesis_referenced_extrinsic_respects_cm_bound() {
    let sc = scenario(3, ChannelKind::Rayleigh, 5.0, 7);
    let cm = sc.cm_capacity().unwrap();
    for model in [ExtrinsicModel::Perfect, ExtrinsicModel::gaussian_llr(vec![0.5, 1.0, 2.0, 3.0]).unwrap()] {
        let g = sc.gmi(&MetricSpec64::extrinsic_hyp(model)).unwrap();
        assert!(g.value <= cm.value + 3.0 * cm.combined_error(&g));
    }
}

#[test]
fn bpsk_cutoff_rates_coincide() {
    let sc = scenario(0, ChannelKind::Rayleigh, 3.0, 8);
    let r0 = sc.cutoff_rates(&MetricSpec64::sum()).unwrap();
    let tol = 3.0 * r0.r0_cm.combined_error(&r0.r0_ind);
    for v in [r0.r0_q, r0.r0_ind, r0.r0_av] {
        assert!((v.mean - r0.r0_cm.mean).abs() < tol.max(1e-9), "{r0:?}");
    }
}

#[test]
fn identical_seeds_give_identical_results() {
    let run = || {
        let sc = scenario(3, ChannelKind::Rayleigh, 5.0, 42);
        (
            sc.cm_capacity().unwrap(),
            sc.gmi(&MetricSpec64::maxlog()).unwrap(),
            sc.random_coding_exponent(&Family64::Ind, 1.0).unwrap(),
        )
    };
    assert_eq!(run(), run());
}

#[test]
fn single_precision_tracks_double() {
    let ch32 = bicm::Channel32::from_db(ChannelKind::Rayleigh, 5.0).unwrap();
    let a32 = bicm::Alphabet32::gray(Constellation::qam(16).unwrap()).unwrap();
    let engine = Engine::new(EngineConfig::monte_carlo(SAMPLES, 9)).unwrap();
    let sc32 = bicm::Scenario32::new(ch32, a32, engine).unwrap();
    let sc64 = scenario(3, ChannelKind::Rayleigh, 5.0, 9);
    let (c32, c64) = (sc32.cm_capacity().unwrap(), sc64.cm_capacity().unwrap());
    assert!((c32.value as f64 - c64.value).abs() < 1e-3, "{c32:?} {c64:?}");
}
