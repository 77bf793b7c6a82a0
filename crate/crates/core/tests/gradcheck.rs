//! Analytic gradients against central finite differences of an independent
//! double-precision forward pass.

mod common;

use common::gradcheck::{check_network, probe_report};
use swp_core::cnn::{Head, LayerSpec, ModelSpec};

const SEEDS: [u64; 3] = [11, 2024, 987_654_321];

fn conv(out: usize, kernel: usize, stride: usize, pad: usize) -> LayerSpec {
    LayerSpec::Conv2d {
        out_channels: out,
        kernel,
        stride,
        zero_padding: pad,
    }
}

fn spec(layers: Vec<LayerSpec>, head: Head) -> ModelSpec {
    ModelSpec {
        input_channels: 1,
        input_size: 8,
        layers,
        head,
    }
}

fn assert_passes(name: &str, s: &ModelSpec) {
    for seed in SEEDS {
        let report = check_network(s, seed, 12);
        println!("{name} seed {seed}: {}", probe_report(&report));
        for p in report.probes.iter().filter(|p| p.rel_err > 1e-4) {
            println!("  {p:?}");
        }
        assert!(
            report.max_rel_err < 1e-3,
            "{name} seed {seed}: max relative error {:.3e}",
            report.max_rel_err
        );
        assert!(report.forward_gap < 1e-4, "{name} seed {seed}: forward differs from reference");
    }
}

#[test]
fn dense_only() {
    assert_passes(
        "dense",
        &spec(vec![LayerSpec::Flatten, LayerSpec::Dense { out_features: 3 }], Head::Softmax),
    );
}

#[test]
fn conv_padded() {
    assert_passes(
        "conv",
        &spec(
            vec![conv(3, 3, 1, 1), LayerSpec::Flatten, LayerSpec::Dense { out_features: 3 }],
            Head::Softmax,
        ),
    );
}

#[test]
fn conv_strided() {
    assert_passes(
        "conv stride 2",
        &spec(
            vec![conv(2, 3, 2, 0), LayerSpec::Flatten, LayerSpec::Dense { out_features: 3 }],
            Head::Softmax,
        ),
    );
}

#[test]
fn relu() {
    assert_passes(
        "relu",
        &spec(
            vec![
                conv(3, 3, 1, 1),
                LayerSpec::Relu,
                LayerSpec::Flatten,
                LayerSpec::Dense { out_features: 3 },
            ],
            Head::Softmax,
        ),
    );
}

#[test]
fn maxpool() {
    assert_passes(
        "maxpool",
        &spec(
            vec![
                conv(3, 3, 1, 1),
                LayerSpec::MaxPool { kernel: 2, stride: 2 },
                LayerSpec::Flatten,
                LayerSpec::Dense { out_features: 3 },
            ],
            Head::Softmax,
        ),
    );
}

#[test]
fn two_conv_one_dense_toy() {
    assert_passes(
        "toy",
        &spec(
            vec![
                conv(4, 3, 1, 1),
                LayerSpec::Relu,
                LayerSpec::MaxPool { kernel: 2, stride: 2 },
                conv(4, 3, 1, 1),
                LayerSpec::Relu,
                LayerSpec::Flatten,
                LayerSpec::Dense { out_features: 3 },
            ],
            Head::Softmax,
        ),
    );
}

#[test]
fn regression_head() {
    assert_passes(
        "linear head",
        &spec(
            vec![
                conv(2, 3, 1, 1),
                LayerSpec::Relu,
                LayerSpec::Flatten,
                LayerSpec::Dense { out_features: 4 },
            ],
            Head::Linear,
        ),
    );
}
