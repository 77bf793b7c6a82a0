use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use swp_core::cnn::{
    checkpoint_from_json, checkpoint_to_json, loss_and_grad, sgd_step, train, DatasetSplits,
    LabeledImage, ModelSpec, Network, Optimizer, Tensor, TrainConfig, WetnessClass,
};
use swp_core::imaging::Image;
use swp_core::Error;

fn random_batch(seed: u64, n: usize, side: usize) -> (Tensor, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..n * side * side).map(|_| rng.random_range(0.0..1.0)).collect();
    let labels = (0..n).map(|i| i % 3).collect();
    (Tensor::new(vec![n, 1, side, side], data).unwrap(), labels)
}

#[test]
fn full_batch_sgd_reduces_loss() {
    let mut net = Network::new(&ModelSpec::reference_classifier(16), 3).unwrap();
    let (x, y) = random_batch(5, 12, 16);
    let sizes: Vec<usize> = net.parameters().iter().map(|p| p.len()).collect();
    let mut velocity: Vec<Vec<f32>> = sizes.iter().map(|&n| vec![0.0; n]).collect();
    let (first, _) = loss_and_grad(&net, &x, &y).unwrap();
    let mut last = first;
    for _ in 0..50 {
        let (loss, grads) = loss_and_grad(&net, &x, &y).unwrap();
        last = loss;
        for ((p, g), v) in net.parameters_mut().into_iter().zip(&grads).zip(&mut velocity) {
            sgd_step(p, g.data(), v, 0.01, 0.9);
        }
    }
    assert!(last < 0.5 * first, "loss {first} -> {last}");
}

/// Bright, dark and mid-gray squares with a little noise.
fn toy_split(seed: u64, per_class: usize) -> Vec<LabeledImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for i in 0..per_class * 3 {
        let label = WetnessClass::from_code(i % 3).unwrap();
        let base = [40.0, 120.0, 210.0][label.code()];
        let image = Image::from_fn(20, 20, |_, _| (base + rng.random_range(-25.0..25.0f64)) as u8);
        out.push(LabeledImage { image, label });
    }
    out
}

fn toy_data() -> DatasetSplits {
    DatasetSplits {
        train: toy_split(1, 20),
        val: toy_split(2, 8),
        test: toy_split(3, 8),
    }
}

fn toy_config() -> TrainConfig {
    TrainConfig {
        name: "toy".into(),
        batch_size: 8,
        epochs: 6,
        lr_init: 0.01,
        input_size: 16,
        seed: 9,
        ..TrainConfig::default()
    }
}

#[test]
fn training_learns_separable_classes() {
    let mut net = Network::new(&ModelSpec::reference_classifier(16), 1).unwrap();
    let out = train(&mut net, &toy_data(), &toy_config(), None).unwrap();
    assert!(out.history.best_val_top1 >= 90.0, "{:?}", out.history);
    let h = &out.history;
    let best = h.epochs.iter().map(|e| e.val_top1).fold(f64::MIN, f64::max);
    let first_best = h.epochs.iter().find(|e| e.val_top1 == best).unwrap().epoch;
    assert_eq!(h.best_epoch, first_best);
}

#[test]
fn training_is_deterministic_per_seed() {
    let run = || {
        let mut net = Network::new(&ModelSpec::reference_classifier(16), 1).unwrap();
        let out = train(&mut net, &toy_data(), &toy_config(), None).unwrap();
        (out.history.without_timing(), checkpoint_to_json(&net, None, None).unwrap())
    };
    assert_eq!(run(), run());
}

#[test]
fn frozen_layers_do_not_move() {
    let mut net = Network::new(&ModelSpec::reference_classifier(16), 1).unwrap();
    let before: Vec<Vec<f32>> = net.parameters().iter().map(|p| p.to_vec()).collect();
    let cfg = TrainConfig {
        freeze_prefix: 3,
        epochs: 2,
        ..toy_config()
    };
    train(&mut net, &toy_data(), &cfg, None).unwrap();
    let layers = net.parameter_layers();
    for ((old, new), layer) in before.iter().zip(net.parameters()).zip(layers) {
        if layer < 3 {
            assert_eq!(old.as_slice(), new, "layer {layer} changed");
        } else {
            assert_ne!(old.as_slice(), new, "layer {layer} did not train");
        }
    }
}

#[test]
fn adam_and_random_crop_train_too() {
    let mut net = Network::new(&ModelSpec::reference_classifier(16), 1).unwrap();
    let cfg = TrainConfig {
        optimizer: Optimizer::adam(),
        augment: swp_core::cnn::Augment::RandomCrop,
        lr_init: 1e-3,
        epochs: 15,
        ..toy_config()
    };
    let out = train(&mut net, &toy_data(), &cfg, None).unwrap();
    assert!(out.history.best_val_top1 >= 90.0, "{:?}", out.history);
}

#[test]
fn missing_class_is_rejected() {
    let mut data = toy_data();
    data.train.retain(|s| s.label != WetnessClass::Bubble);
    let mut net = Network::new(&ModelSpec::reference_classifier(16), 1).unwrap();
    assert!(matches!(train(&mut net, &data, &toy_config(), None), Err(Error::Dataset(_))));
}

#[test]
fn divergence_reports_the_epoch() {
    let mut net = Network::new(&ModelSpec::reference_classifier(16), 1).unwrap();
    let cfg = TrainConfig {
        lr_init: 1e12,
        ..toy_config()
    };
    match train(&mut net, &toy_data(), &cfg, None) {
        Err(Error::Numerical { epoch, .. }) => assert_eq!(epoch, Some(1)),
        other => panic!("expected a numerical error, got {:?}", other.map(|o| o.history)),
    }
}

#[test]
fn checkpoint_files_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let mut net = Network::new(&ModelSpec::reference_classifier(16), 1).unwrap();
    let cfg = TrainConfig {
        epochs: 2,
        ..toy_config()
    };
    let out = train(&mut net, &toy_data(), &cfg, Some(dir.path())).unwrap();
    let best = std::fs::read_to_string(dir.path().join("best.json")).unwrap();
    let loaded = checkpoint_from_json(&best).unwrap();
    assert_eq!(loaded.network, out.best);
    assert_eq!(loaded.history.unwrap().best_epoch, out.history.best_epoch);
    let csv = std::fs::read_to_string(dir.path().join("history.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.starts_with("epoch,train_loss,train_top1,val_top1,epoch_seconds"));
}
