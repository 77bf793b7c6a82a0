use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::gemm::gemm;
use super::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv2d {
        out_channels: usize,
        kernel: usize,
        stride: usize,
        zero_padding: usize,
    },
    Relu,
    MaxPool {
        kernel: usize,
        stride: usize,
    },
    Flatten,
    Dense {
        out_features: usize,
    },
}

impl LayerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            LayerSpec::Conv2d { .. } => "conv2d",
            LayerSpec::Relu => "relu",
            LayerSpec::MaxPool { .. } => "maxpool",
            LayerSpec::Flatten => "flatten",
            LayerSpec::Dense { .. } => "dense",
        }
    }
}

/// How the final layer's outputs are interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Head {
    /// Softmax over class logits; trained with cross-entropy.
    Softmax,
    /// Raw outputs; trained with mean squared error.
    Linear,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub input_channels: usize,
    pub input_size: usize,
    pub layers: Vec<LayerSpec>,
    pub head: Head,
}

impl ModelSpec {
    /// Conv(16)-ReLU-Pool-Conv(32)-ReLU-Pool-Dense(64)-ReLU-Dense(3).
    pub fn reference_classifier(input_size: usize) -> Self {
        Self {
            input_channels: 1,
            input_size,
            layers: vec![
                LayerSpec::Conv2d {
                    out_channels: 16,
                    kernel: 3,
                    stride: 1,
                    zero_padding: 1,
                },
                LayerSpec::Relu,
                LayerSpec::MaxPool { kernel: 2, stride: 2 },
                LayerSpec::Conv2d {
                    out_channels: 32,
                    kernel: 3,
                    stride: 1,
                    zero_padding: 1,
                },
                LayerSpec::Relu,
                LayerSpec::MaxPool { kernel: 2, stride: 2 },
                LayerSpec::Flatten,
                LayerSpec::Dense { out_features: 64 },
                LayerSpec::Relu,
                LayerSpec::Dense { out_features: 3 },
            ],
            head: Head::Softmax,
        }
    }

    /// Smaller trunk with a four-unit linear head predicting a normalized box.
    pub fn box_regressor(input_size: usize) -> Self {
        Self {
            input_channels: 1,
            input_size,
            layers: vec![
                LayerSpec::Conv2d {
                    out_channels: 8,
                    kernel: 3,
                    stride: 1,
                    zero_padding: 1,
                },
                LayerSpec::Relu,
                LayerSpec::MaxPool { kernel: 2, stride: 2 },
                LayerSpec::Conv2d {
                    out_channels: 16,
                    kernel: 3,
                    stride: 1,
                    zero_padding: 1,
                },
                LayerSpec::Relu,
                LayerSpec::MaxPool { kernel: 2, stride: 2 },
                LayerSpec::Flatten,
                LayerSpec::Dense { out_features: 64 },
                LayerSpec::Relu,
                LayerSpec::Dense { out_features: 4 },
            ],
            head: Head::Linear,
        }
    }

    pub fn output_features(&self) -> Option<usize> {
        self.layers.iter().rev().find_map(|l| match l {
            LayerSpec::Dense { out_features } => Some(*out_features),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ActShape {
    Spatial { c: usize, h: usize, w: usize },
    Flat(usize),
}

impl ActShape {
    fn size(&self) -> usize {
        match *self {
            ActShape::Spatial { c, h, w } => c * h * w,
            ActShape::Flat(f) => f,
        }
    }

    fn dims(&self) -> Vec<usize> {
        match *self {
            ActShape::Spatial { c, h, w } => vec![c, h, w],
            ActShape::Flat(f) => vec![f],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Layer {
    spec: LayerSpec,
    input: ActShape,
    output: ActShape,
    weight: Vec<f32>,
    bias: Vec<f32>,
}

impl Layer {
    fn has_params(&self) -> bool {
        !self.weight.is_empty()
    }

    fn weight_shape(&self) -> Vec<usize> {
        match (self.spec, self.input) {
            (
                LayerSpec::Conv2d {
                    out_channels,
                    kernel,
                    ..
                },
                ActShape::Spatial { c, .. },
            ) => vec![out_channels, c, kernel, kernel],
            (LayerSpec::Dense { out_features }, ActShape::Flat(f)) => vec![out_features, f],
            _ => vec![0],
        }
    }
}

/// Per-layer state kept from the forward pass for backpropagation.
enum Cache {
    Cols(Vec<f32>),
    Activations(Vec<f32>),
    Argmax(Vec<u32>),
    Nothing,
}

pub struct ForwardCache {
    batch: usize,
    layers: Vec<Cache>,
}

/// A feed-forward convolutional network over `N x C x H x W` batches.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    spec: ModelSpec,
    layers: Vec<Layer>,
}

fn shape_err(layer: usize, spec: &LayerSpec, message: String) -> Error {
    Error::Shape {
        layer,
        name: spec.name(),
        message,
    }
}

impl Network {
    /// Builds the layer stack with He-uniform (fan-in) weights and zero biases.
    pub fn new(spec: &ModelSpec, seed: u64) -> Result<Self> {
        let mut net = Self::zeroed(spec)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for layer in &mut net.layers {
            if layer.has_params() {
                let fan_in = layer.weight.len() / layer.bias.len();
                let bound = (6.0 / fan_in as f64).sqrt() as f32;
                for w in &mut layer.weight {
                    *w = rng.random_range(-bound..bound);
                }
            }
        }
        Ok(net)
    }

    /// Same architecture with every parameter set to zero.
    pub fn zeroed(spec: &ModelSpec) -> Result<Self> {
        let mut shape = ActShape::Spatial {
            c: spec.input_channels,
            h: spec.input_size,
            w: spec.input_size,
        };
        if shape.size() == 0 {
            return Err(Error::Config("input must have positive size".into()));
        }
        let mut layers = Vec::with_capacity(spec.layers.len());
        for (i, ls) in spec.layers.iter().enumerate() {
            let (output, wlen, blen) = match (*ls, shape) {
                (
                    LayerSpec::Conv2d {
                        out_channels,
                        kernel,
                        stride,
                        zero_padding,
                    },
                    ActShape::Spatial { c, h, w },
                ) => {
                    if out_channels == 0 || kernel == 0 || stride == 0 {
                        return Err(shape_err(i, ls, "zero-sized convolution".into()));
                    }
                    if h + 2 * zero_padding < kernel || w + 2 * zero_padding < kernel {
                        return Err(shape_err(
                            i,
                            ls,
                            format!("kernel {kernel} larger than padded input {h}x{w}"),
                        ));
                    }
                    let oh = (h + 2 * zero_padding - kernel) / stride + 1;
                    let ow = (w + 2 * zero_padding - kernel) / stride + 1;
                    (
                        ActShape::Spatial {
                            c: out_channels,
                            h: oh,
                            w: ow,
                        },
                        out_channels * c * kernel * kernel,
                        out_channels,
                    )
                }
                (LayerSpec::MaxPool { kernel, stride }, ActShape::Spatial { c, h, w }) => {
                    if kernel == 0 || stride == 0 || kernel > h || kernel > w {
                        return Err(shape_err(
                            i,
                            ls,
                            format!("pool {kernel}/{stride} does not fit {h}x{w}"),
                        ));
                    }
                    (
                        ActShape::Spatial {
                            c,
                            h: (h - kernel) / stride + 1,
                            w: (w - kernel) / stride + 1,
                        },
                        0,
                        0,
                    )
                }
                (LayerSpec::Relu, s) => (s, 0, 0),
                (LayerSpec::Flatten, s) => (ActShape::Flat(s.size()), 0, 0),
                (LayerSpec::Dense { out_features }, ActShape::Flat(f)) => {
                    if out_features == 0 {
                        return Err(shape_err(i, ls, "zero output features".into()));
                    }
                    (ActShape::Flat(out_features), out_features * f, out_features)
                }
                (_, s) => {
                    return Err(shape_err(
                        i,
                        ls,
                        format!("cannot follow an activation of shape {:?}", s.dims()),
                    ))
                }
            };
            layers.push(Layer {
                spec: *ls,
                input: shape,
                output,
                weight: vec![0.0; wlen],
                bias: vec![0.0; blen],
            });
            shape = output;
        }
        if !matches!(shape, ActShape::Flat(_)) {
            return Err(Error::Shape {
                layer: spec.layers.len().saturating_sub(1),
                name: "output",
                message: "network must end in a flat feature vector".into(),
            });
        }
        let expected_out = match spec.head {
            Head::Softmax => 3,
            Head::Linear => 4,
        };
        if shape.size() != expected_out {
            return Err(Error::Shape {
                layer: spec.layers.len() - 1,
                name: "output",
                message: format!(
                    "{:?} head needs {expected_out} outputs, got {}",
                    spec.head,
                    shape.size()
                ),
            });
        }
        Ok(Self {
            spec: spec.clone(),
            layers,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn input_size(&self) -> usize {
        self.spec.input_size
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn output_features(&self) -> usize {
        self.layers.last().map(|l| l.output.size()).unwrap_or(0)
    }

    /// Parameter tensors in layer order (weight, then bias, per layer).
    pub fn parameters(&self) -> Vec<&[f32]> {
        self.layers
            .iter()
            .filter(|l| l.has_params())
            .flat_map(|l| [l.weight.as_slice(), l.bias.as_slice()])
            .collect()
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut [f32]> {
        self.layers
            .iter_mut()
            .filter(|l| l.has_params())
            .flat_map(|l| [l.weight.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }

    pub fn parameter_shapes(&self) -> Vec<Vec<usize>> {
        self.layers
            .iter()
            .filter(|l| l.has_params())
            .flat_map(|l| [l.weight_shape(), vec![l.bias.len()]])
            .collect()
    }

    /// Layer index owning each parameter tensor.
    pub fn parameter_layers(&self) -> Vec<usize> {
        self.layers
            .iter()
            .enumerate()
            .filter(|(_, l)| l.has_params())
            .flat_map(|(i, _)| [i, i])
            .collect()
    }

    /// Replaces all parameters; shapes must match `parameter_shapes`.
    pub fn load_parameters(&mut self, params: &[Tensor]) -> Result<()> {
        let shapes = self.parameter_shapes();
        if params.len() != shapes.len() {
            return Err(Error::Config(format!(
                "expected {} parameter tensors, got {}",
                shapes.len(),
                params.len()
            )));
        }
        for (i, (p, s)) in params.iter().zip(&shapes).enumerate() {
            if p.shape() != s.as_slice() {
                return Err(Error::Config(format!(
                    "parameter {i}: expected shape {s:?}, got {:?}",
                    p.shape()
                )));
            }
        }
        for (dst, src) in self.parameters_mut().into_iter().zip(params) {
            dst.copy_from_slice(src.data());
        }
        Ok(())
    }

    fn check_input(&self, x: &Tensor) -> Result<usize> {
        let s = &self.spec;
        let want = [s.input_channels, s.input_size, s.input_size];
        if x.shape().len() != 4 || x.shape()[1..] != want {
            return Err(Error::Shape {
                layer: 0,
                name: self.layers.first().map(|l| l.spec.name()).unwrap_or("input"),
                message: format!(
                    "expected input N x {} x {} x {}, got {:?}",
                    want[0],
                    want[1],
                    want[2],
                    x.shape()
                ),
            });
        }
        Ok(x.shape()[0])
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        self.run(x, false).map(|(out, _)| out)
    }

    pub fn forward_cached(&self, x: &Tensor) -> Result<(Tensor, ForwardCache)> {
        self.run(x, true)
    }

    fn run(&self, x: &Tensor, keep: bool) -> Result<(Tensor, ForwardCache)> {
        let n = self.check_input(x)?;
        let mut act = x.data().to_vec();
        let mut caches = Vec::with_capacity(if keep { self.layers.len() } else { 0 });
        for layer in &self.layers {
            let (next, cache) = forward_layer(layer, &act, n, keep);
            if keep {
                caches.push(cache);
            }
            act = next;
        }
        let out = Tensor::new(vec![n, self.output_features()], act)?;
        Ok((
            out,
            ForwardCache {
                batch: n,
                layers: caches,
            },
        ))
    }

    /// Backpropagates `grad_out` (dLoss/dOutput, `N x out`) and returns
    /// gradients in `parameters()` order. Layers below `frozen_prefix` still
    /// receive (zero-cost-skipped where possible) gradients of zero.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        grad_out: &Tensor,
        frozen_prefix: usize,
    ) -> Result<Vec<Tensor>> {
        let n = cache.batch;
        if grad_out.shape() != [n, self.output_features()] || cache.layers.len() != self.layers.len()
        {
            return Err(Error::Shape {
                layer: self.layers.len().saturating_sub(1),
                name: "output",
                message: format!("gradient shape {:?} does not match output", grad_out.shape()),
            });
        }
        let mut grads: Vec<Option<(Vec<f32>, Vec<f32>)>> = vec![None; self.layers.len()];
        let mut delta = grad_out.data().to_vec();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            // Input gradients are only needed while some layer below still trains.
            let need_input = i > frozen_prefix.min(self.layers.len());
            let (dx, pg) = backward_layer(layer, &cache.layers[i], &delta, n, need_input);
            if layer.has_params() {
                grads[i] = Some(pg.unwrap_or_else(|| {
                    (vec![0.0; layer.weight.len()], vec![0.0; layer.bias.len()])
                }));
            }
            match dx {
                Some(dx) => delta = dx,
                None => {
                    for (j, l) in self.layers.iter().enumerate().take(i) {
                        if l.has_params() {
                            grads[j] = Some((vec![0.0; l.weight.len()], vec![0.0; l.bias.len()]));
                        }
                    }
                    break;
                }
            }
        }
        let mut out = Vec::new();
        for (layer, g) in self.layers.iter().zip(grads) {
            if let Some((gw, gb)) = g {
                out.push(Tensor::new(layer.weight_shape(), gw)?);
                out.push(Tensor::new(vec![layer.bias.len()], gb)?);
            }
        }
        Ok(out)
    }
}

fn conv_geometry(layer: &Layer) -> (usize, usize, usize, usize, usize, usize, usize, usize, usize) {
    let (LayerSpec::Conv2d {
        out_channels,
        kernel,
        stride,
        zero_padding,
    }, ActShape::Spatial { c, h, w }, ActShape::Spatial { h: oh, w: ow, .. }) =
        (layer.spec, layer.input, layer.output)
    else {
        unreachable!("conv geometry on non-conv layer")
    };
    (c, h, w, out_channels, kernel, stride, zero_padding, oh, ow)
}

#[allow(clippy::too_many_arguments)]
fn im2col(
    input: &[f32],
    c: usize,
    h: usize,
    w: usize,
    k: usize,
    stride: usize,
    pad: usize,
    oh: usize,
    ow: usize,
    cols: &mut [f32],
) {
    let p = oh * ow;
    for ci in 0..c {
        for ky in 0..k {
            for kx in 0..k {
                let row = (ci * k + ky) * k + kx;
                let dst = &mut cols[row * p..(row + 1) * p];
                for oy in 0..oh {
                    let iy = (oy * stride + ky) as isize - pad as isize;
                    let line = &mut dst[oy * ow..(oy + 1) * ow];
                    if iy < 0 || iy >= h as isize {
                        line.fill(0.0);
                        continue;
                    }
                    let src = &input[(ci * h + iy as usize) * w..(ci * h + iy as usize + 1) * w];
                    for (ox, v) in line.iter_mut().enumerate() {
                        let ix = (ox * stride + kx) as isize - pad as isize;
                        *v = if ix < 0 || ix >= w as isize {
                            0.0
                        } else {
                            src[ix as usize]
                        };
                    }
                }
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn col2im(
    cols: &[f32],
    c: usize,
    h: usize,
    w: usize,
    k: usize,
    stride: usize,
    pad: usize,
    oh: usize,
    ow: usize,
    out: &mut [f32],
) {
    let p = oh * ow;
    for ci in 0..c {
        for ky in 0..k {
            for kx in 0..k {
                let row = (ci * k + ky) * k + kx;
                let src = &cols[row * p..(row + 1) * p];
                for oy in 0..oh {
                    let iy = (oy * stride + ky) as isize - pad as isize;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    let base = (ci * h + iy as usize) * w;
                    for ox in 0..ow {
                        let ix = (ox * stride + kx) as isize - pad as isize;
                        if ix >= 0 && ix < w as isize {
                            out[base + ix as usize] += src[oy * ow + ox];
                        }
                    }
                }
            }
        }
    }
}

fn forward_layer(layer: &Layer, input: &[f32], n: usize, keep: bool) -> (Vec<f32>, Cache) {
    let in_size = layer.input.size();
    let out_size = layer.output.size();
    match layer.spec {
        LayerSpec::Conv2d { .. } => {
            let (c, h, w, oc, k, s, pad, oh, ow) = conv_geometry(layer);
            let kk = c * k * k;
            let p = oh * ow;
            let mut out = vec![0.0; n * out_size];
            let mut all_cols = if keep { vec![0.0; n * kk * p] } else { Vec::new() };
            let mut scratch = if keep { Vec::new() } else { vec![0.0; kk * p] };
            for i in 0..n {
                let cols = if keep {
                    &mut all_cols[i * kk * p..(i + 1) * kk * p]
                } else {
                    &mut scratch[..]
                };
                im2col(&input[i * in_size..(i + 1) * in_size], c, h, w, k, s, pad, oh, ow, cols);
                let dst = &mut out[i * out_size..(i + 1) * out_size];
                for (o, b) in layer.bias.iter().enumerate() {
                    dst[o * p..(o + 1) * p].fill(*b);
                }
                gemm(oc, kk, p, &layer.weight, false, cols, false, dst, 1.0);
            }
            (out, if keep { Cache::Cols(all_cols) } else { Cache::Nothing })
        }
        LayerSpec::Relu => {
            let out: Vec<f32> = input.iter().map(|&v| v.max(0.0)).collect();
            let cache = if keep {
                Cache::Activations(out.clone())
            } else {
                Cache::Nothing
            };
            (out, cache)
        }
        LayerSpec::MaxPool { kernel, stride } => {
            let (ActShape::Spatial { c, h, w }, ActShape::Spatial { h: oh, w: ow, .. }) =
                (layer.input, layer.output)
            else {
                unreachable!()
            };
            let mut out = vec![0.0; n * out_size];
            let mut arg = if keep { vec![0u32; n * out_size] } else { Vec::new() };
            for i in 0..n {
                for ci in 0..c {
                    let plane = i * in_size + ci * h * w;
                    for oy in 0..oh {
                        for ox in 0..ow {
                            let mut best = f32::NEG_INFINITY;
                            let mut best_idx = 0usize;
                            for ky in 0..kernel {
                                for kx in 0..kernel {
                                    let idx = plane + (oy * stride + ky) * w + ox * stride + kx;
                                    if input[idx] > best {
                                        best = input[idx];
                                        best_idx = idx;
                                    }
                                }
                            }
                            let o = i * out_size + (ci * oh + oy) * ow + ox;
                            out[o] = best;
                            if keep {
                                arg[o] = best_idx as u32;
                            }
                        }
                    }
                }
            }
            (out, if keep { Cache::Argmax(arg) } else { Cache::Nothing })
        }
        LayerSpec::Flatten => (input.to_vec(), Cache::Nothing),
        LayerSpec::Dense { out_features } => {
            let mut out = Vec::with_capacity(n * out_features);
            for _ in 0..n {
                out.extend_from_slice(&layer.bias);
            }
            gemm(n, in_size, out_features, input, false, &layer.weight, true, &mut out, 1.0);
            let cache = if keep {
                Cache::Activations(input.to_vec())
            } else {
                Cache::Nothing
            };
            (out, cache)
        }
    }
}

type ParamGrads = (Vec<f32>, Vec<f32>);

fn backward_layer(
    layer: &Layer,
    cache: &Cache,
    delta: &[f32],
    n: usize,
    need_input: bool,
) -> (Option<Vec<f32>>, Option<ParamGrads>) {
    let in_size = layer.input.size();
    let out_size = layer.output.size();
    match (layer.spec, cache) {
        (LayerSpec::Conv2d { .. }, Cache::Cols(cols)) => {
            let (c, h, w, oc, k, s, pad, oh, ow) = conv_geometry(layer);
            let kk = c * k * k;
            let p = oh * ow;
            let mut gw = vec![0.0; layer.weight.len()];
            let mut gb = vec![0.0; oc];
            let mut dx = need_input.then(|| vec![0.0; n * in_size]);
            let mut dcols = vec![0.0; if need_input { kk * p } else { 0 }];
            for i in 0..n {
                let d = &delta[i * out_size..(i + 1) * out_size];
                let col = &cols[i * kk * p..(i + 1) * kk * p];
                gemm(oc, p, kk, d, false, col, true, &mut gw, 1.0);
                for (o, g) in gb.iter_mut().enumerate() {
                    *g += d[o * p..(o + 1) * p].iter().sum::<f32>();
                }
                if let Some(dx) = dx.as_mut() {
                    gemm(kk, oc, p, &layer.weight, true, d, false, &mut dcols, 0.0);
                    col2im(
                        &dcols,
                        c,
                        h,
                        w,
                        k,
                        s,
                        pad,
                        oh,
                        ow,
                        &mut dx[i * in_size..(i + 1) * in_size],
                    );
                }
            }
            (dx, Some((gw, gb)))
        }
        (LayerSpec::Relu, Cache::Activations(out)) => (
            need_input.then(|| {
                delta
                    .iter()
                    .zip(out)
                    .map(|(&d, &o)| if o > 0.0 { d } else { 0.0 })
                    .collect()
            }),
            None,
        ),
        (LayerSpec::MaxPool { .. }, Cache::Argmax(arg)) => (
            need_input.then(|| {
                let mut dx = vec![0.0; n * in_size];
                for (&d, &a) in delta.iter().zip(arg) {
                    dx[a as usize] += d;
                }
                dx
            }),
            None,
        ),
        (LayerSpec::Flatten, _) => (need_input.then(|| delta.to_vec()), None),
        (LayerSpec::Dense { out_features }, Cache::Activations(x)) => {
            let mut gw = vec![0.0; layer.weight.len()];
            gemm(out_features, n, in_size, delta, true, x, false, &mut gw, 0.0);
            let mut gb = vec![0.0; out_features];
            for row in delta.chunks_exact(out_features) {
                for (g, d) in gb.iter_mut().zip(row) {
                    *g += d;
                }
            }
            let dx = need_input.then(|| {
                let mut dx = vec![0.0; n * in_size];
                gemm(n, out_features, in_size, delta, false, &layer.weight, false, &mut dx, 0.0);
                dx
            });
            (dx, Some((gw, gb)))
        }
        _ => unreachable!("forward cache does not match layer {}", layer.spec.name()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_shapes_compose() {
        let net = Network::new(&ModelSpec::reference_classifier(64), 1).unwrap();
        assert_eq!(net.output_features(), 3);
        let shapes = net.parameter_shapes();
        assert_eq!(shapes[0], vec![16, 1, 3, 3]);
        assert_eq!(shapes[2], vec![32, 16, 3, 3]);
        assert_eq!(shapes[4], vec![64, 32 * 16 * 16]);
        assert_eq!(shapes[6], vec![3, 64]);
    }

    #[test]
    fn bad_stacks_name_the_layer() {
        let mut spec = ModelSpec::reference_classifier(64);
        spec.layers.remove(6); // drop Flatten
        match Network::zeroed(&spec) {
            Err(Error::Shape { layer, name, .. }) => {
                assert_eq!(layer, 6);
                assert_eq!(name, "dense");
            }
            other => panic!("expected shape error, got {other:?}"),
        }
    }

    #[test]
    fn input_shape_mismatch_is_reported() {
        let net = Network::new(&ModelSpec::reference_classifier(16), 1).unwrap();
        let x = Tensor::zeros(vec![2, 1, 8, 8]);
        assert!(matches!(net.forward(&x), Err(Error::Shape { layer: 0, .. })));
    }

    #[test]
    fn he_init_is_seeded() {
        let spec = ModelSpec::reference_classifier(16);
        let a = Network::new(&spec, 9).unwrap();
        let b = Network::new(&spec, 9).unwrap();
        let c = Network::new(&spec, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let bound = (6.0f32 / 9.0).sqrt();
        assert!(a.parameters()[0].iter().all(|w| w.abs() <= bound));
        assert!(a.parameters()[1].iter().all(|&b| b == 0.0));
    }
}
