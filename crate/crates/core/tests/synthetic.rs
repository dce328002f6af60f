use airtran::evaluation::evaluate_report;
use airtran::scoring::{airtran_score, prepare, Method, ModelScore, ReportConfig, ScoreConfig, TransferabilityReport};
use airtran::synthpool::{generate_pool, model_id, SynthConfig};

#[test]
fn generation_is_deterministic_per_seed() {
    let cfg = SynthConfig::geometric(4, 60, 5, 8, (0.3, 3.0), 1.0, 11);
    let a = generate_pool(&cfg).unwrap();
    assert_eq!(a, generate_pool(&cfg).unwrap());
    let other = generate_pool(&SynthConfig {
        seed: 12,
        ..cfg.clone()
    })
    .unwrap();
    assert_ne!(a.models[0].queries, other.models[0].queries);
    assert_eq!(
        a.models.iter().map(|m| m.id.clone()).collect::<Vec<_>>(),
        (0..4).map(model_id).collect::<Vec<_>>()
    );
    assert_eq!(a.dataset.k(), 5);
    assert_eq!(a.dataset.query_count(), 60);
    a.dataset.check_bounds(60, 60).unwrap();
}

#[test]
fn truth_decreases_with_noise() {
    let pool = generate_pool(&SynthConfig::geometric(5, 30, 3, 4, (0.1, 4.0), 0.5, 3)).unwrap();
    let t: Vec<f64> = pool.truth.models.iter().map(|e| e.score).collect();
    assert!(t.windows(2).all(|w| w[0] > w[1]));
    for (m, e) in pool.models.iter().zip(&pool.truth.models) {
        assert!((e.score - 1.0 / (1.0 + m.noise)).abs() < 1e-15);
    }
}

#[test]
fn cleaner_models_score_higher_and_rankings_track_truth() {
    let cfg = SynthConfig::geometric(6, 300, 8, 16, (0.3, 4.0), 1.0, 5);
    let pool = generate_pool(&cfg).unwrap();
    let config = ScoreConfig::default();
    let scores: Vec<ModelScore> = pool
        .models
        .iter()
        .map(|m| {
            let s = airtran_score(&pool.dataset, &m.queries, &m.docs, &config).unwrap();
            ModelScore {
                model: m.id.clone(),
                score: s.score,
                seconds: s.seconds,
            }
        })
        .collect();
    assert!(scores[0].score > scores[5].score);
    let report = TransferabilityReport::new(
        "synthetic".into(),
        8,
        5,
        ReportConfig::new(Method::Airtran, &config),
        scores,
    )
    .unwrap();
    let eval = evaluate_report(&report, &pool.truth).unwrap();
    assert!(eval.tau >= 0.6, "{eval:?}");
    assert_eq!(eval.model_count, 6);
}

#[test]
fn scaling_downweights_nuisance_directions() {
    // Without mixing, whitening sorts the high-variance nuisance subspace
    // into the leading coordinates; those carry no relevance signal.
    let cfg = SynthConfig {
        nuisance_dims: 6,
        ..SynthConfig::geometric(2, 400, 6, 12, (0.2, 1.0), 0.0, 8)
    };
    let pool = generate_pool(&cfg).unwrap();
    let m = &pool.models[0];
    let prepared = prepare(&pool.dataset, &m.queries, &m.docs, &ScoreConfig::default()).unwrap();
    let w = prepared.weights().unwrap();
    let mean_abs = |s: &[f64]| s.iter().map(|x| x.abs()).sum::<f64>() / s.len() as f64;
    let (nuisance, signal) = w.split_at(6);
    assert!(mean_abs(nuisance) * 3.0 < mean_abs(signal), "{w:?}");
}

#[test]
fn invalid_configs_are_rejected() {
    let good = SynthConfig::geometric(3, 20, 4, 4, (0.1, 1.0), 0.5, 1);
    good.validate().unwrap();
    for bad in [
        SynthConfig {
            model_count: 1,
            noise_levels: vec![0.1],
            ..good.clone()
        },
        SynthConfig {
            noise_levels: vec![0.1, 0.1, 0.2],
            ..good.clone()
        },
        SynthConfig {
            candidate_size: 1,
            ..good.clone()
        },
        SynthConfig {
            query_count: 3,
            ..good.clone()
        },
        SynthConfig {
            nuisance_dims: 4,
            ..good.clone()
        },
        SynthConfig {
            anisotropy_strength: f64::NAN,
            ..good.clone()
        },
    ] {
        assert!(matches!(generate_pool(&bad), Err(airtran::Error::Config(_))), "{bad:?}");
    }
}
