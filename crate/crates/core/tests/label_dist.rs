use ordac::label_dist::{
    class_of, discretize, expected_rank, kl_divergence, LabelDistribution, RankDistribution,
};
use ordac::model::MlpRegressor;
use proptest::prelude::*;

fn normalized(raw: Vec<f64>) -> RankDistribution {
    let total: f64 = raw.iter().sum();
    RankDistribution::new(raw.into_iter().map(|v| v / total).collect()).unwrap()
}

fn dist_strategy() -> impl Strategy<Value = (usize, f64, f64)> {
    (2usize..=12).prop_flat_map(|c| (Just(c), 0.0..=(c - 1) as f64, 0.01f64..=c as f64))
}

/// Scalar kernel evaluation without the max-shift used by the library.
fn scalar_expected_rank(mu: f64, sigma: f64, c: usize) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for k in 0..c {
        let w = (-(k as f64 - mu).powi(2) / (2.0 * sigma * sigma)).exp();
        num += k as f64 * w;
        den += w;
    }
    num / den
}

proptest! {
    #[test]
    fn discretize_sums_to_one((c, mu, sigma) in dist_strategy()) {
        let rd = discretize(&LabelDistribution::new(mu, sigma, c), c).unwrap();
        prop_assert_eq!(rd.num_ranks(), c);
        prop_assert!((rd.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(rd.probs().iter().all(|&p| p >= 0.0));
    }

    #[test]
    fn discretize_is_unimodal_at_rounded_mean((c, mu, sigma) in dist_strategy()) {
        let rd = discretize(&LabelDistribution::new(mu, sigma, c), c).unwrap();
        let p = rd.probs();
        let mode = class_of(mu, c);
        for i in 0..mode {
            prop_assert!(p[i] <= p[i + 1]);
        }
        for i in mode..c - 1 {
            prop_assert!(p[i] >= p[i + 1]);
        }
        prop_assert!(p.iter().all(|&v| v <= p[mode]));
    }

    #[test]
    fn expected_rank_is_exact_at_centre(c in 2usize..=12, sigma in 0.01f64..=12.0) {
        let mu = (c - 1) as f64 / 2.0;
        let rd = discretize(&LabelDistribution::new(mu, sigma, c), c).unwrap();
        prop_assert!((expected_rank(&rd) - mu).abs() < 1e-3);
    }

    #[test]
    fn expected_rank_matches_scalar_oracle(c in 2usize..=12, t in 0.0f64..=1.0, sigma in 0.2f64..=12.0) {
        let mu = t * (c - 1) as f64;
        let sigma = sigma.min(c as f64);
        let rd = discretize(&LabelDistribution::new(mu, sigma, c), c).unwrap();
        let want = scalar_expected_rank(mu, sigma, c);
        prop_assert!((expected_rank(&rd) - want).abs() < 1e-9);
    }

    #[test]
    fn truncation_bias_is_bounded_for_moderate_sigma(
        c in 3usize..=12,
        t in 0.0f64..=1.0,
        sigma in 0.4f64..=0.9,
    ) {
        let mu = 1.0 + t * (c - 3) as f64;
        let rd = discretize(&LabelDistribution::new(mu, sigma, c), c).unwrap();
        prop_assert!((expected_rank(&rd) - mu).abs() <= 0.1);
    }

    #[test]
    fn kl_is_nonnegative_and_zero_on_self(
        pair in (2usize..=8).prop_flat_map(|c| (
            prop::collection::vec(0.001f64..1.0, c),
            prop::collection::vec(0.001f64..1.0, c),
        ))
    ) {
        let p = normalized(pair.0);
        let q = normalized(pair.1);
        prop_assert!(kl_divergence(&p, &q).unwrap() >= -1e-12);
        prop_assert!(kl_divergence(&p, &p).unwrap().abs() < 1e-12);
    }

    #[test]
    fn confidence_drops_when_mixed_with_uniform(
        raw in prop::collection::vec(0.001f64..1.0, 2..=8),
        t in 0.01f64..=1.0,
    ) {
        let p = normalized(raw);
        let c = p.num_ranks();
        prop_assume!(p.probs().iter().any(|&v| (v - 1.0 / c as f64).abs() > 1e-3));
        let q = normalized(p.probs().iter().map(|v| (1.0 - t) * v + t / c as f64).collect());
        prop_assert!(q.confidence() < p.confidence());
        prop_assert!((0.0..=1.0).contains(&p.confidence()));
    }
}

#[test]
fn truncation_bias_on_dense_grid() {
    let mut worst: f64 = 0.0;
    for c in 3..=12 {
        for i in 0..=200 {
            let mu = 1.0 + (c - 3) as f64 * i as f64 / 200.0;
            for j in 0..=50 {
                let sigma = 0.4 + 0.5 * j as f64 / 50.0;
                let rd = discretize(&LabelDistribution::new(mu, sigma, c), c).unwrap();
                worst = worst.max((expected_rank(&rd) - mu).abs());
            }
        }
    }
    assert!(worst <= 0.1, "worst bias {worst}");
}

#[test]
fn truncation_bias_at_sigma_one_stays_below_measured_worst_case() {
    // Edge truncation at sigma = 1 peaks at mu = 1 on long scales.
    let c = 15;
    let rd = discretize(&LabelDistribution::new(1.0, 1.0, c), c).unwrap();
    let bias = expected_rank(&rd) - 1.0;
    assert!(bias > 0.1 && bias < 0.13, "bias {bias}");
}

#[test]
fn tiny_sigma_concentrates_on_one_rank() {
    let rd = discretize(&LabelDistribution::new(0.0, 0.01, 5), 5).unwrap();
    assert!((rd.probs()[0] - 1.0).abs() < 1e-6);
    assert!(rd.probs()[1..].iter().all(|&p| p < 1e-6));
}

#[test]
fn forward_matches_scalar_recomputation() {
    let (w1, b1) = ([0.5, -0.3, 0.8, 0.2], [0.1, -0.4]);
    let (w2, b2) = ([0.3, -0.6, -0.2, 0.9, 0.7, 0.1], [0.05, -0.1, 0.2]);
    let model = MlpRegressor::from_weights(2, 2, 3, w1.to_vec(), b1.to_vec(), w2.to_vec(), b2.to_vec()).unwrap();
    for x in [[1.5, -0.5], [-0.2, 0.4], [0.0, 0.0], [3.0, 1.0]] {
        let h: Vec<f64> = (0..2)
            .map(|j| (w1[2 * j] * x[0] + w1[2 * j + 1] * x[1] + b1[j]).max(0.0))
            .collect();
        let z: Vec<f64> = (0..3).map(|c| w2[2 * c] * h[0] + w2[2 * c + 1] * h[1] + b2[c]).collect();
        let total: f64 = z.iter().map(|v| v.exp()).sum();
        let out = model.forward(&x).unwrap();
        for (p, v) in out.probs().iter().zip(&z) {
            assert!((p - v.exp() / total).abs() < 1e-9);
        }
    }
}
