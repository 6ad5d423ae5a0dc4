mod common;

use deeptriangle::eval::ultimate_losses;
use deeptriangle::layers::Parameterized;
use deeptriangle::model::{
    batch_loss, ensemble_train, forecast, forward_batch, sample_loss, train, Dimensions,
    DropoutPlan, HistoryRef, ModelArtifact, ModelConfig, ModelParams,
};
use deeptriangle::synthetic::{pattern_triangle, DevelopmentPattern};
use deeptriangle::triangle::{
    build_samples, CompanyCode, RatioPair, Sample, SplitTag, Triangle, ValidationRule,
};
use deeptriangle::{Error, Tape};
use tempfile::TempDir;

fn dims(levels: usize) -> Dimensions {
    Dimensions {
        levels,
        embedding_dim: 3,
        encoder_units: 4,
        decoder_units: 4,
        head_hidden_units: 3,
        sequence_length: 9,
    }
}

fn pattern_company(code: u32, level: usize) -> Triangle {
    let p = DevelopmentPattern::geometric(10, 0.5, 0.7, 0.6);
    let premium: Vec<f64> = (0..10).map(|i| 1000.0 + 50.0 * i as f64).collect();
    pattern_triangle(
        CompanyCode(code),
        level,
        "x",
        1988,
        &p,
        &premium,
        0.0,
        &mut common::rng(0),
    )
    .unwrap()
}

fn tiny_config() -> ModelConfig {
    ModelConfig {
        encoder_units: 4,
        decoder_units: 4,
        head_hidden_units: 4,
        max_epochs: 30,
        patience: 10,
        ensemble_size: 3,
        batch_size: 16,
        learning_rate: 1e-3,
        ..Default::default()
    }
}

fn corpus_samples(n: usize) -> (Vec<Triangle>, Vec<Sample>) {
    let triangles: Vec<Triangle> = (0..n).map(|k| pattern_company(k as u32 + 1, k)).collect();
    let samples = triangles
        .iter()
        .flat_map(|t| build_samples(t, 1995, ValidationRule::All).unwrap())
        .collect();
    (triangles, samples)
}

#[test]
fn outputs_have_sequence_length() {
    let params = ModelParams::<f64>::seeded(dims(2), 1);
    let history = vec![
        RatioPair {
            paid: 0.2,
            outstanding: 0.1
        };
        9
    ];
    let (paid, os) = params.predict(&history, &[true; 9], 1).unwrap();
    assert_eq!((paid.len(), os.len()), (9, 9));
    assert!(paid.iter().chain(&os).all(|&v| v >= 0.0));
    assert!(matches!(
        params.predict(&history, &[true; 9], 2),
        Err(Error::UnknownLevel {
            level: 2,
            levels: 2
        })
    ));
}

#[test]
fn zero_embedding_removes_company_effect() {
    let mut params = ModelParams::<f64>::seeded(dims(3), 4);
    let history = vec![
        RatioPair {
            paid: 0.3,
            outstanding: 0.2
        };
        9
    ];
    let mask = [[false; 4].as_slice(), &[true; 5]].concat();
    let a = params.predict(&history, &mask, 0).unwrap();
    let b = params.predict(&history, &mask, 2).unwrap();
    assert_ne!(a, b);
    params.embedding.table.data_mut().fill(0.0);
    assert_eq!(
        params.predict(&history, &mask, 0).unwrap(),
        params.predict(&history, &mask, 2).unwrap()
    );
}

#[test]
fn head_weights_are_shared_across_steps() {
    let mut params = ModelParams::<f64>::seeded(dims(1), 8);
    let history = vec![
        RatioPair {
            paid: 0.3,
            outstanding: 0.2
        };
        9
    ];
    let (before, _) = params.predict(&history, &[true; 9], 0).unwrap();
    params.paid_output.bias.data_mut()[0] += 0.5;
    let (after, _) = params.predict(&history, &[true; 9], 0).unwrap();
    for (b, a) in before.iter().zip(&after) {
        if *b > 0.0 {
            assert!((a - b - 0.5).abs() < 1e-12);
        }
    }
}

#[test]
fn masked_steps_get_no_gradient() {
    let params = ModelParams::<f64>::seeded(dims(1), 2);
    let t = pattern_company(1, 0);
    let samples = build_samples(&t, 1995, ValidationRule::All).unwrap();
    let s = samples
        .iter()
        .find(|s| s.accident_year_index == 6 && s.evaluation_lag == 3)
        .unwrap();
    let mut tape = Tape::new();
    let bound = params.bind(&mut tape);
    let inputs = [HistoryRef::from(s)];
    let out = forward_batch(
        &mut tape,
        &bound,
        &inputs,
        &DropoutPlan::inference(),
        &mut common::rng(0),
    )
    .unwrap();
    let loss = batch_loss(&mut tape, &out, &[s]).unwrap();
    let grads = tape.backward(loss).unwrap();
    for k in 0..9 {
        let g = grads.wrt(out.paid[k]).map_or(0.0, |g| g[0]);
        if s.response_mask[k] {
            assert!(g != 0.0 || tape.value(out.paid[k])[0] == 0.0);
        } else {
            assert_eq!(g, 0.0, "step {k}");
        }
    }

    // Finite differences on a masked target: changing it leaves the loss alone.
    let (paid, os) = params.predict(&s.history, &s.history_mask, 0).unwrap();
    let base = sample_loss(&paid, &os, s).unwrap();
    let mut shifted = s.clone();
    shifted.response[8].paid += 1e-5;
    shifted.response[8].outstanding -= 1e-5;
    assert_eq!(sample_loss(&paid, &os, &shifted).unwrap(), base);
    let mut padded = s.clone();
    padded.history[0] = RatioPair {
        paid: 9.0,
        outstanding: -9.0,
    };
    assert_eq!(
        params
            .predict(&padded.history, &padded.history_mask, 0)
            .unwrap(),
        (paid, os)
    );
}

#[test]
fn single_sample_is_memorized() {
    let t = pattern_company(1, 0);
    let mut sample = build_samples(&t, 1995, ValidationRule::All)
        .unwrap()
        .remove(10);
    sample.split = SplitTag::Train;
    let mut valid = sample.clone();
    valid.split = SplitTag::Validation;
    let config = ModelConfig {
        encoder_units: 32,
        decoder_units: 32,
        head_hidden_units: 32,
        gru_dropout: 0.0,
        head_dropout: 0.0,
        learning_rate: 1e-3,
        ensemble_size: 1,
        ..Default::default()
    };
    let model = train::<f64>(&config, &[sample.clone(), valid], 1).unwrap();
    assert!(model.trace.epochs.len() <= 1000);
    let last = model.trace.epochs[model.trace.best_epoch - 1];
    assert!(
        last.train_loss < 1e-6 || model.trace.best_validation_loss < 1e-6,
        "{last:?}"
    );
    assert!(model.params.loss(&[&sample]).unwrap() < 1e-6);
}

#[test]
fn training_is_deterministic_and_early_stopping_keeps_best() {
    let (_, samples) = corpus_samples(2);
    let config = tiny_config();
    let a = train::<f64>(&config, &samples, 2).unwrap();
    let b = train::<f64>(&config, &samples, 2).unwrap();
    assert_eq!(a, b);
    for e in &a.trace.epochs {
        assert!(a.trace.best_validation_loss <= e.validation_loss);
    }
    let valid: Vec<&Sample> = samples
        .iter()
        .filter(|s| s.split == SplitTag::Validation)
        .collect();
    assert_eq!(a.params.loss(&valid).unwrap(), a.trace.best_validation_loss);
    let other = train::<f64>(&ModelConfig { seed: 1, ..config }, &samples, 2).unwrap();
    assert_ne!(a.params, other.params);
}

#[test]
fn ensemble_members_are_independent_of_scheduling() {
    let (_, samples) = corpus_samples(2);
    let config = tiny_config();
    let serial = ensemble_train::<f64>(&config, &samples, 2, 1).unwrap();
    let parallel = ensemble_train::<f64>(&config, &samples, 2, 3).unwrap();
    assert_eq!(serial, parallel);
    assert_eq!(
        serial.iter().map(|m| m.seed).collect::<Vec<_>>(),
        vec![0, 1, 2]
    );
    let single = ensemble_train::<f64>(
        &ModelConfig {
            ensemble_size: 1,
            ..config.clone()
        },
        &samples,
        2,
        1,
    )
    .unwrap();
    assert_eq!(single[0], train::<f64>(&config, &samples, 2).unwrap());
}

#[test]
fn empty_splits_are_rejected() {
    let (_, samples) = corpus_samples(1);
    let train_only: Vec<Sample> = samples
        .iter()
        .filter(|s| s.split == SplitTag::Train)
        .cloned()
        .collect();
    assert!(matches!(
        train::<f64>(&tiny_config(), &train_only, 1),
        Err(Error::EmptySplit("validation"))
    ));
    let valid_only: Vec<Sample> = samples
        .iter()
        .filter(|s| s.split == SplitTag::Validation)
        .cloned()
        .collect();
    assert!(matches!(
        train::<f64>(&tiny_config(), &valid_only, 1),
        Err(Error::EmptySplit("train"))
    ));
    assert!(matches!(
        ensemble_train::<f64>(&tiny_config(), &valid_only, 1, 1),
        Err(Error::Member { index: 0, .. })
    ));
}

#[test]
fn runaway_learning_rate_reports_divergence() {
    let (_, samples) = corpus_samples(1);
    let config = ModelConfig {
        learning_rate: 1e308,
        epsilon: 1e-300,
        ..tiny_config()
    };
    match train::<f64>(&config, &samples, 1) {
        Err(Error::Divergence { epoch, .. }) => assert!(epoch >= 1),
        other => panic!("{other:?}"),
    }
}

#[test]
fn forecast_cases() {
    let (triangles, _) = corpus_samples(2);
    let zero = ModelParams::<f64>::zeros(dims(2));
    let f = forecast(&[zero], &triangles).unwrap();
    assert_eq!(f.len(), 2 * 45);
    assert!(f
        .iter()
        .all(|(_, c)| c.paid == 0.0 && c.outstanding == Some(0.0)));
    for t in &triangles {
        for u in ultimate_losses(t, &f).unwrap() {
            assert_eq!(u.ultimate, u.paid_to_date);
        }
        assert!(f.get(t.company, 2, 10).is_some());
        assert!(f.get(t.company, 2, 9).is_none());
    }

    let m = ModelParams::<f64>::seeded(dims(2), 5);
    let one = forecast(std::slice::from_ref(&m), &triangles).unwrap();
    let three = forecast(&[m.clone(), m.clone(), m], &triangles).unwrap();
    for ((ka, a), (kb, b)) in one.iter().zip(three.iter()) {
        assert_eq!(ka, kb);
        assert!((a.paid - b.paid).abs() <= 1e-12 * a.paid.abs().max(1e-300));
        assert!(a.paid >= 0.0 && a.outstanding.unwrap() >= 0.0);
        let premium = triangles[(ka.company.0 - 1) as usize].premium(ka.accident_year_index);
        assert_eq!(a.paid, a.paid_ratio * premium);
    }
}

#[test]
fn artifact_round_trip_is_bit_exact() {
    let (triangles, samples) = corpus_samples(2);
    let config = tiny_config();
    let model = train::<f64>(&config, &samples, 2).unwrap();
    let companies: Vec<CompanyCode> = triangles.iter().map(|t| t.company).collect();
    let artifact = ModelArtifact::from_trained("x", 0, &config, &companies, &model);
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("m.json");
    artifact.save(&path).unwrap();
    let loaded = ModelArtifact::load(&path).unwrap();
    assert_eq!(loaded, artifact);
    let params = loaded.params::<f64>().unwrap();
    for (a, b) in params.tensors().iter().zip(model.params.tensors()) {
        assert_eq!(a.shape(), b.shape());
        assert!(a
            .data()
            .iter()
            .zip(b.data())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
    }
    let again = dir.path().join("m2.json");
    loaded.save(&again).unwrap();
    assert_eq!(
        std::fs::read(&path).unwrap(),
        std::fs::read(&again).unwrap()
    );

    let mut broken = artifact.clone();
    broken.parameters[0].shape = vec![1, 1];
    broken.save(&path).unwrap();
    assert!(matches!(
        ModelArtifact::load(&path),
        Err(Error::Artifact { .. })
    ));
    assert!(matches!(
        ModelArtifact::load(&dir.path().join("missing.json")),
        Err(Error::Io { .. })
    ));
}

#[test]
fn single_precision_network_tracks_double() {
    let d = dims(1);
    let p64 = ModelParams::<f64>::seeded(d, 3);
    let p32 = ModelParams::<f32>::seeded(d, 3);
    let history = vec![
        RatioPair {
            paid: 0.3,
            outstanding: 0.2
        };
        9
    ];
    let (a, _) = p64.predict(&history, &[true; 9], 0).unwrap();
    let (b, _) = p32.predict(&history, &[true; 9], 0).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-5);
    }
}
