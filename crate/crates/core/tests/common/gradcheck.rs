use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use swp_core::cnn::{cross_entropy, mean_squared_error, Head, LayerSpec, ModelSpec, Network, Tensor};

pub const STEP: f64 = 1e-3;
const BATCH: usize = 4;

/// Plain nested-loop forward pass in f64. Independent of the library's im2col path.
pub fn reference_forward(spec: &ModelSpec, params: &[Vec<f64>], x: &[f64], n: usize) -> Vec<f64> {
    reference_forward_pattern(spec, params, x, n).0
}

/// Forward pass plus the activation pattern: ReLU signs and max-pool winners.
/// A change in the pattern means a finite-difference step crossed a kink.
pub fn reference_forward_pattern(
    spec: &ModelSpec,
    params: &[Vec<f64>],
    x: &[f64],
    n: usize,
) -> (Vec<f64>, Vec<u32>) {
    let mut out = Vec::new();
    let mut pattern = Vec::new();
    let per = x.len() / n;
    for s in 0..n {
        let mut act = x[s * per..(s + 1) * per].to_vec();
        let (mut c, mut h, mut w) = (spec.input_channels, spec.input_size, spec.input_size);
        let mut p = 0;
        for layer in &spec.layers {
            match *layer {
                LayerSpec::Conv2d {
                    out_channels,
                    kernel,
                    stride,
                    zero_padding,
                } => {
                    let (wt, b) = (&params[p], &params[p + 1]);
                    p += 2;
                    let oh = (h + 2 * zero_padding - kernel) / stride + 1;
                    let ow = (w + 2 * zero_padding - kernel) / stride + 1;
                    let mut next = vec![0.0; out_channels * oh * ow];
                    for o in 0..out_channels {
                        for oy in 0..oh {
                            for ox in 0..ow {
                                let mut acc = b[o];
                                for ci in 0..c {
                                    for ky in 0..kernel {
                                        for kx in 0..kernel {
                                            let iy = (oy * stride + ky) as isize - zero_padding as isize;
                                            let ix = (ox * stride + kx) as isize - zero_padding as isize;
                                            if iy < 0 || ix < 0 || iy >= h as isize || ix >= w as isize {
                                                continue;
                                            }
                                            let v = act[(ci * h + iy as usize) * w + ix as usize];
                                            acc += wt[((o * c + ci) * kernel + ky) * kernel + kx] * v;
                                        }
                                    }
                                }
                                next[(o * oh + oy) * ow + ox] = acc;
                            }
                        }
                    }
                    act = next;
                    c = out_channels;
                    h = oh;
                    w = ow;
                }
                LayerSpec::Relu => act.iter_mut().for_each(|v| {
                    pattern.push((*v > 0.0) as u32);
                    *v = v.max(0.0)
                }),
                LayerSpec::MaxPool { kernel, stride } => {
                    let oh = (h - kernel) / stride + 1;
                    let ow = (w - kernel) / stride + 1;
                    let mut next = vec![f64::NEG_INFINITY; c * oh * ow];
                    for ci in 0..c {
                        for oy in 0..oh {
                            for ox in 0..ow {
                                let mut winner = 0;
                                for ky in 0..kernel {
                                    for kx in 0..kernel {
                                        let v = act[(ci * h + oy * stride + ky) * w + ox * stride + kx];
                                        let slot = &mut next[(ci * oh + oy) * ow + ox];
                                        if v > *slot {
                                            *slot = v;
                                            winner = (ky * kernel + kx) as u32;
                                        }
                                    }
                                }
                                pattern.push(winner);
                            }
                        }
                    }
                    act = next;
                    h = oh;
                    w = ow;
                }
                LayerSpec::Flatten => {
                    c *= h * w;
                    h = 1;
                    w = 1;
                }
                LayerSpec::Dense { out_features } => {
                    let (wt, b) = (&params[p], &params[p + 1]);
                    p += 2;
                    let f = act.len();
                    act = (0..out_features)
                        .map(|o| b[o] + (0..f).map(|i| wt[o * f + i] * act[i]).sum::<f64>())
                        .collect();
                    c = out_features;
                }
            }
        }
        out.extend(act);
    }
    (out, pattern)
}

pub fn reference_loss(
    spec: &ModelSpec,
    params: &[Vec<f64>],
    x: &[f64],
    targets: &Targets,
) -> (f64, Vec<u32>) {
    let (out, pattern) = reference_forward_pattern(spec, params, x, BATCH);
    let loss = match targets {
        Targets::Labels(labels) => {
            let k = out.len() / labels.len();
            labels
                .iter()
                .enumerate()
                .map(|(i, &y)| {
                    let row = &out[i * k..(i + 1) * k];
                    let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let lse = m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
                    lse - row[y]
                })
                .sum::<f64>()
                / labels.len() as f64
        }
        Targets::Values(t) => {
            out.iter().zip(t).map(|(p, &t)| (p - t as f64).powi(2)).sum::<f64>() / out.len() as f64
        }
    };
    (loss, pattern)
}

pub enum Targets {
    Labels(Vec<usize>),
    Values(Vec<f32>),
}

#[derive(Debug)]
pub struct Probe {
    pub tensor: usize,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_err: f64,
}

#[derive(Debug)]
pub struct Report {
    pub probes: Vec<Probe>,
    /// Draws discarded because the step changed the activation pattern.
    pub kinks: usize,
    pub max_rel_err: f64,
    /// Largest |library forward - reference forward| over the batch.
    pub forward_gap: f64,
}

pub fn probe_report(r: &Report) -> String {
    format!(
        "{} probes ({} kink redraws), max rel err {:.2e}, forward gap {:.2e}",
        r.probes.len(),
        r.kinks,
        r.max_rel_err,
        r.forward_gap
    )
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Checks `per_layer` weights plus up to two biases of every parameterised layer.
/// A bias shifts every unit of its channel, so it may have no kink-free draw.
pub fn check_network(spec: &ModelSpec, seed: u64, per_layer: usize) -> Report {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = Network::new(spec, seed).unwrap();
    for (i, p) in net.parameters_mut().into_iter().enumerate() {
        if i % 2 == 1 {
            p.iter_mut().for_each(|b| *b = rng.random_range(-0.1..0.1));
        }
    }
    let side = spec.input_size;
    let len = BATCH * spec.input_channels * side * side;
    let x: Vec<f32> = (0..len).map(|_| rng.random_range(0.0..1.0)).collect();
    let input = Tensor::new(vec![BATCH, spec.input_channels, side, side], x.clone()).unwrap();
    let targets = match spec.head {
        Head::Softmax => Targets::Labels((0..BATCH).map(|_| rng.random_range(0..3)).collect()),
        Head::Linear => Targets::Values((0..BATCH * 4).map(|_| rng.random_range(0.0..1.0)).collect()),
    };

    let (out, cache) = net.forward_cached(&input).unwrap();
    let dout = match &targets {
        Targets::Labels(l) => cross_entropy(&out, l).unwrap().1,
        Targets::Values(t) => mean_squared_error(&out, t).unwrap().1,
    };
    let grads = net.backward(&cache, &dout, 0).unwrap();

    let mut params: Vec<Vec<f64>> = net
        .parameters()
        .iter()
        .map(|p| p.iter().map(|&v| v as f64).collect())
        .collect();
    let x64: Vec<f64> = x.iter().map(|&v| v as f64).collect();
    let reference = reference_forward(spec, &params, &x64, BATCH);
    let forward_gap = out
        .data()
        .iter()
        .zip(&reference)
        .map(|(&a, b)| (a as f64 - b).abs())
        .fold(0.0, f64::max);

    let (_, base_pattern) = reference_loss(spec, &params, &x64, &targets);
    let mut probes = Vec::new();
    let mut kinks = 0;
    for t in 0..params.len() {
        let want = if t % 2 == 0 { per_layer } else { 2 }.min(params[t].len());
        let mut order: Vec<usize> = (0..params[t].len()).collect();
        order.shuffle(&mut rng);
        let mut taken = 0;
        for index in order {
            if taken == want {
                break;
            }
            let orig = params[t][index];
            params[t][index] = orig + STEP;
            let (up, up_pattern) = reference_loss(spec, &params, &x64, &targets);
            params[t][index] = orig - STEP;
            let (down, down_pattern) = reference_loss(spec, &params, &x64, &targets);
            params[t][index] = orig;
            if up_pattern != base_pattern || down_pattern != base_pattern {
                kinks += 1;
                continue;
            }
            taken += 1;
            let numeric = (up - down) / (2.0 * STEP);
            let analytic = grads[t].data()[index] as f64;
            probes.push(Probe {
                tensor: t,
                index,
                analytic,
                numeric,
                rel_err: relative_error(analytic, numeric),
            });
        }
        if t % 2 == 0 {
            assert_eq!(taken, want, "tensor {t}: not enough kink-free weights");
        }
    }
    let max_rel_err = probes.iter().map(|p| p.rel_err).fold(0.0, f64::max);
    Report {
        probes,
        kinks,
        max_rel_err,
        forward_gap,
    }
}
