use dispersive_qkd::optimizer::{optimize_window, ScanSpec};
use dispersive_qkd::physics::{FiberLink, SourceParams};
use dispersive_qkd::security::{key_rate, qber, DetectorParams, KeyRateModel};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn source() -> impl Strategy<Value = SourceParams> {
    (0.5e12..3e12f64, 0.5e12..3e12f64, -0.95..0.95f64).prop_map(|(sigma_a, sigma_b, rho)| SourceParams {
        sigma_a,
        sigma_b,
        rho,
        rep_rate: 2e8,
    })
}

fn link() -> impl Strategy<Value = FiberLink> {
    (0.0..250.0f64).prop_map(FiberLink::smf)
}

proptest! {
    #[test]
    fn misalignment_term_is_additive(
        s in source(), a in link(), b in link(),
        e in 0.0..0.5f64, xi in 0.01..100.0f64,
    ) {
        let clean = DetectorParams::default();
        let noisy = DetectorParams { misalignment: e, ..clean };
        let stats = KeyRateModel::new(&s, &a, &b, &clean).unwrap().click_probabilities(xi).unwrap();
        let q0 = qber(&stats, &clean).unwrap();
        let qe = qber(&stats, &noisy).unwrap();
        prop_assert_eq!(q0, (stats.p_exp - stats.p_sign) / (2.0 * stats.p_exp));
        let expected = q0 + e * stats.p_sign / stats.p_exp;
        if expected <= 0.5 {
            prop_assert!((qe - expected).abs() <= 4.0 * f64::EPSILON * expected.max(1e-300));
        } else {
            prop_assert_eq!(qe, 0.5);
        }
    }

    #[test]
    fn result_invariants(s in source(), a in link(), b in link(), e in 0.0..=0.5f64, xi in 1e-3..1e3f64) {
        let det = DetectorParams { misalignment: e, ..DetectorParams::default() };
        let r = key_rate(&s, &a, &b, &det, xi).unwrap();
        prop_assert!((0.0..=0.5).contains(&r.qber));
        prop_assert!(r.key_rate >= 0.0);
        let st = r.stats;
        prop_assert_eq!(st.p_sign + st.p_dc + st.p_plus_minus + st.p_minus_plus + st.p_both_lost, st.p_exp);
    }
}

fn random_setup(rng: &mut ChaCha8Rng) -> (SourceParams, FiberLink, FiberLink, f64) {
    let s = SourceParams {
        sigma_a: rng.random_range(0.5e12..3e12),
        sigma_b: rng.random_range(0.5e12..3e12),
        rho: rng.random_range(-0.95..0.95),
        rep_rate: 2e8,
    };
    (
        s,
        FiberLink::smf(rng.random_range(0.0..150.0)),
        FiberLink::smf(rng.random_range(0.0..250.0)),
        10f64.powf(rng.random_range(-1.0..2.0)),
    )
}

#[test]
fn key_rate_non_increasing_in_dark_rate() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut pairs, mut ok) = (0, 0);
    for _ in 0..200 {
        let (s, a, b, xi) = random_setup(&mut rng);
        let rates: Vec<f64> = (0..20)
            .map(|i| {
                let det = DetectorParams {
                    dark_rate: 10f64.powf(i as f64 * 0.4),
                    ..DetectorParams::default()
                };
                key_rate(&s, &a, &b, &det, xi).unwrap().key_rate
            })
            .collect();
        for w in rates.windows(2) {
            pairs += 1;
            ok += usize::from(w[1] <= w[0]);
        }
    }
    assert!(ok as f64 >= 0.99 * pairs as f64, "{ok}/{pairs}");
}

#[test]
fn key_rate_non_increasing_in_misalignment() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (mut pairs, mut ok) = (0, 0);
    for _ in 0..200 {
        let (s, a, b, xi) = random_setup(&mut rng);
        let rates: Vec<f64> = (0..=20)
            .map(|i| {
                let det = DetectorParams {
                    misalignment: 0.025 * i as f64,
                    ..DetectorParams::default()
                };
                key_rate(&s, &a, &b, &det, xi).unwrap().key_rate
            })
            .collect();
        for w in rates.windows(2) {
            pairs += 1;
            ok += usize::from(w[1] <= w[0]);
        }
    }
    assert!(ok as f64 >= 0.99 * pairs as f64, "{ok}/{pairs}");
}

#[test]
fn optimum_is_interior() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let det = DetectorParams::default();
    let mut checked = 0;
    for _ in 0..100 {
        let (s, a, b, _) = random_setup(&mut rng);
        let best = optimize_window(&s, &a, &b, &det, &ScanSpec::default()).unwrap();
        if best.key_rate == 0.0 {
            continue;
        }
        checked += 1;
        for xi in [1e-3, 1e3] {
            let k = key_rate(&s, &a, &b, &det, xi).unwrap().key_rate;
            assert!(k < best.key_rate, "xi={xi}: {k} vs {}", best.key_rate);
        }
    }
    assert!(checked > 50);
}

#[test]
fn fig2_scale_rate_is_positive_at_100_km() {
    let r = optimize_window(
        &SourceParams::with_rho(0.9),
        &FiberLink::smf(1.0),
        &FiberLink::smf(100.0),
        &DetectorParams::default(),
        &ScanSpec::default(),
    )
    .unwrap();
    assert!(r.key_rate > 0.0);
}
