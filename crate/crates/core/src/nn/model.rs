use ndarray::{s, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::loss::cross_entropy;
use super::params::Params;
use super::sparse::GraphInput;
use crate::error::{Error, Result};
use crate::graph::Subgraph;

pub const ENCODER_LAYERS: usize = 3;
pub const DECODER_LAYERS: usize = 3;
pub const OUTPUTS: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arch {
    Gcn,
    Sage,
}

impl Arch {
    pub fn tag(self) -> u8 {
        match self {
            Arch::Gcn => 0,
            Arch::Sage => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Arch::Gcn),
            1 => Some(Arch::Sage),
            _ => None,
        }
    }
}

impl std::str::FromStr for Arch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gcn" => Ok(Arch::Gcn),
            "sage" | "graphsage" => Ok(Arch::Sage),
            other => Err(Error::InvalidArgument(format!("unknown architecture `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamKind {
    Weight,
    Bias,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Block {
    Encoder(usize),
    Decoder(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamSpec {
    pub name: String,
    pub block: Block,
    pub kind: ParamKind,
}

/// Three graph-convolution layers followed by a three-layer MLP with two
/// output logits.
///
/// Tensor order: per encoder layer `W, b` (GCN) or `W_self, W_neigh, b`
/// (SAGE), then per decoder layer `W, b`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkPredictor {
    arch: Arch,
    input_dim: usize,
    hidden_dim: usize,
    params: Params,
}

/// Forward-pass state needed by the encoder backward pass.
pub struct EncoderCache {
    inputs: Vec<Array2<f64>>,
    propagated: Vec<Array2<f64>>,
    pre: Vec<Array2<f64>>,
    pub output: Array2<f64>,
}

pub struct DecoderCache {
    inputs: Vec<Array2<f64>>,
    pre: Vec<Array2<f64>>,
    pub logits: Array2<f64>,
}

fn relu(x: &Array2<f64>) -> Array2<f64> {
    x.mapv(|v| v.max(0.0))
}

fn relu_backward(grad: &mut Array2<f64>, pre: &Array2<f64>) {
    grad.zip_mut_with(pre, |g, &z| {
        if z <= 0.0 {
            *g = 0.0;
        }
    });
}

fn xavier(rng: &mut impl Rng, fan_in: usize, fan_out: usize) -> Array2<f64> {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Array2::from_shape_fn((fan_in, fan_out), |_| rng.random_range(-bound..bound))
}

impl LinkPredictor {
    pub fn new(arch: Arch, input_dim: usize, hidden_dim: usize, rng: &mut impl Rng) -> Self {
        let specs = Self::layout_for(arch);
        let mut tensors = Vec::with_capacity(specs.len());
        for spec in &specs {
            let (rows, cols) = Self::shape_for(spec, input_dim, hidden_dim);
            tensors.push(match spec.kind {
                ParamKind::Weight => xavier(rng, rows, cols),
                ParamKind::Bias => Array2::zeros((rows, cols)),
            });
        }
        LinkPredictor {
            arch,
            input_dim,
            hidden_dim,
            params: Params(tensors),
        }
    }

    /// Wraps existing tensors, checking they match the declared layout.
    pub fn from_params(arch: Arch, input_dim: usize, hidden_dim: usize, params: Params) -> Result<Self> {
        let specs = Self::layout_for(arch);
        if specs.len() != params.len() {
            return Err(Error::ShapeMismatch(format!(
                "{:?} expects {} tensors, got {}",
                arch,
                specs.len(),
                params.len()
            )));
        }
        for (spec, t) in specs.iter().zip(&params.0) {
            let want = Self::shape_for(spec, input_dim, hidden_dim);
            if t.dim() != want {
                return Err(Error::ShapeMismatch(format!("{}: expected {want:?}, got {:?}", spec.name, t.dim())));
            }
        }
        if !params.is_finite() {
            return Err(Error::InvalidArgument("non-finite parameter".into()));
        }
        Ok(LinkPredictor {
            arch,
            input_dim,
            hidden_dim,
            params,
        })
    }

    fn layout_for(arch: Arch) -> Vec<ParamSpec> {
        let mut specs = Vec::new();
        let mut push = |name: String, block, kind| specs.push(ParamSpec { name, block, kind });
        for l in 0..ENCODER_LAYERS {
            let block = Block::Encoder(l);
            match arch {
                Arch::Gcn => push(format!("enc{l}.w"), block, ParamKind::Weight),
                Arch::Sage => {
                    push(format!("enc{l}.w_self"), block, ParamKind::Weight);
                    push(format!("enc{l}.w_neigh"), block, ParamKind::Weight);
                }
            }
            push(format!("enc{l}.b"), block, ParamKind::Bias);
        }
        for j in 0..DECODER_LAYERS {
            push(format!("dec{j}.w"), Block::Decoder(j), ParamKind::Weight);
            push(format!("dec{j}.b"), Block::Decoder(j), ParamKind::Bias);
        }
        specs
    }

    fn shape_for(spec: &ParamSpec, input_dim: usize, hidden: usize) -> (usize, usize) {
        let (fan_in, fan_out) = match spec.block {
            Block::Encoder(0) => (input_dim, hidden),
            Block::Encoder(_) => (hidden, hidden),
            Block::Decoder(j) if j + 1 == DECODER_LAYERS => (hidden, OUTPUTS),
            Block::Decoder(_) => (hidden, hidden),
        };
        match spec.kind {
            ParamKind::Weight => (fan_in, fan_out),
            ParamKind::Bias => (1, fan_out),
        }
    }

    pub fn layout(&self) -> Vec<ParamSpec> {
        Self::layout_for(self.arch)
    }

    pub fn arch(&self) -> Arch {
        self.arch
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut Params {
        &mut self.params
    }

    fn per_encoder(&self) -> usize {
        match self.arch {
            Arch::Gcn => 2,
            Arch::Sage => 3,
        }
    }

    fn encoder_base(&self, layer: usize) -> usize {
        layer * self.per_encoder()
    }

    fn decoder_base(&self, layer: usize) -> usize {
        ENCODER_LAYERS * self.per_encoder() + 2 * layer
    }

    /// Indices of the tensors belonging to the last decoder layer.
    pub fn final_layer_indices(&self) -> Vec<usize> {
        let base = self.decoder_base(DECODER_LAYERS - 1);
        vec![base, base + 1]
    }

    /// Redraws the last decoder layer (weights Xavier, bias zero).
    pub fn reinit_final_layer(&mut self, rng: &mut impl Rng) {
        let base = self.decoder_base(DECODER_LAYERS - 1);
        self.params.0[base] = xavier(rng, self.hidden_dim, OUTPUTS);
        self.params.0[base + 1] = Array2::zeros((1, OUTPUTS));
    }

    fn check_input(&self, input: &GraphInput) -> Result<()> {
        if input.features.ncols() != self.input_dim {
            return Err(Error::ShapeMismatch(format!(
                "features have {} columns, model expects {}",
                input.features.ncols(),
                self.input_dim
            )));
        }
        if input.prop.num_nodes() != input.features.nrows() {
            return Err(Error::ShapeMismatch("adjacency and feature row counts differ".into()));
        }
        Ok(())
    }

    pub fn encode(&self, input: &GraphInput) -> Result<Array2<f64>> {
        Ok(self.encode_cached(input)?.output)
    }

    pub fn encode_cached(&self, input: &GraphInput) -> Result<EncoderCache> {
        self.check_input(input)?;
        let p = &self.params.0;
        let mut h = input.features.clone();
        let mut cache = EncoderCache {
            inputs: Vec::with_capacity(ENCODER_LAYERS),
            propagated: Vec::with_capacity(ENCODER_LAYERS),
            pre: Vec::with_capacity(ENCODER_LAYERS),
            output: Array2::zeros((0, 0)),
        };
        for l in 0..ENCODER_LAYERS {
            let base = self.encoder_base(l);
            let (prop, z) = match self.arch {
                Arch::Gcn => {
                    let prop = input.prop.gcn.apply(h.view());
                    let z = prop.dot(&p[base]) + &p[base + 1];
                    (prop, z)
                }
                Arch::Sage => {
                    let prop = input.prop.mean.apply(h.view());
                    let z = h.dot(&p[base]) + prop.dot(&p[base + 1]) + &p[base + 2];
                    (prop, z)
                }
            };
            let next = if l + 1 < ENCODER_LAYERS { relu(&z) } else { z.clone() };
            cache.inputs.push(h);
            cache.propagated.push(prop);
            cache.pre.push(z);
            h = next;
        }
        cache.output = h;
        Ok(cache)
    }

    /// Accumulates encoder gradients given `d_output = ∂L/∂H_final`.
    pub fn encode_backward(&self, input: &GraphInput, cache: &EncoderCache, d_output: Array2<f64>, grads: &mut Params) {
        let p = &self.params.0;
        let mut d_h = d_output;
        for l in (0..ENCODER_LAYERS).rev() {
            let base = self.encoder_base(l);
            let mut d_z = d_h;
            if l + 1 < ENCODER_LAYERS {
                relu_backward(&mut d_z, &cache.pre[l]);
            }
            match self.arch {
                Arch::Gcn => {
                    grads.0[base] += &cache.propagated[l].t().dot(&d_z);
                    grads.0[base + 1] += &d_z.sum_axis(Axis(0)).insert_axis(Axis(0));
                    d_h = if l > 0 {
                        let d_prop = d_z.dot(&p[base].t());
                        input.prop.gcn.apply(d_prop.view())
                    } else {
                        Array2::zeros((0, 0))
                    };
                }
                Arch::Sage => {
                    grads.0[base] += &cache.inputs[l].t().dot(&d_z);
                    grads.0[base + 1] += &cache.propagated[l].t().dot(&d_z);
                    grads.0[base + 2] += &d_z.sum_axis(Axis(0)).insert_axis(Axis(0));
                    d_h = if l > 0 {
                        let d_prop = d_z.dot(&p[base + 1].t());
                        d_z.dot(&p[base].t()) + input.prop.mean_t.apply(d_prop.view())
                    } else {
                        Array2::zeros((0, 0))
                    };
                }
            }
        }
    }

    pub fn decode(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        self.decode_cached(x.to_owned()).logits
    }

    pub fn decode_cached(&self, x: Array2<f64>) -> DecoderCache {
        let p = &self.params.0;
        let mut cache = DecoderCache {
            inputs: Vec::with_capacity(DECODER_LAYERS),
            pre: Vec::with_capacity(DECODER_LAYERS),
            logits: Array2::zeros((0, 0)),
        };
        let mut h = x;
        for j in 0..DECODER_LAYERS {
            let base = self.decoder_base(j);
            let z = h.dot(&p[base]) + &p[base + 1];
            let next = if j + 1 < DECODER_LAYERS { relu(&z) } else { z.clone() };
            cache.inputs.push(h);
            cache.pre.push(z);
            h = next;
        }
        cache.logits = h;
        cache
    }

    /// Accumulates decoder gradients and returns `∂L/∂input`.
    pub fn decode_backward(&self, cache: &DecoderCache, d_logits: Array2<f64>, grads: &mut Params) -> Array2<f64> {
        let p = &self.params.0;
        let mut d = d_logits;
        for j in (0..DECODER_LAYERS).rev() {
            let base = self.decoder_base(j);
            if j + 1 < DECODER_LAYERS {
                relu_backward(&mut d, &cache.pre[j]);
            }
            grads.0[base] += &cache.inputs[j].t().dot(&d);
            grads.0[base + 1] += &d.sum_axis(Axis(0)).insert_axis(Axis(0));
            d = d.dot(&p[base].t());
        }
        d
    }

    fn check_pairs(emb: &Array2<f64>, pairs: &[(usize, usize)]) -> Result<()> {
        let n = emb.nrows();
        for &(u, v) in pairs {
            for id in [u, v] {
                if id >= n {
                    return Err(Error::NodeOutOfRange { id, num_nodes: n });
                }
            }
        }
        Ok(())
    }

    fn hadamard_rows(emb: &Array2<f64>, pairs: &[(usize, usize)]) -> Array2<f64> {
        let mut out = Array2::zeros((pairs.len(), emb.ncols()));
        for (i, &(u, v)) in pairs.iter().enumerate() {
            let mut row = out.row_mut(i);
            row.assign(&emb.row(u));
            row *= &emb.row(v);
        }
        out
    }

    /// Two logits per pair from precomputed embeddings; decoder input is `z_u ⊙ z_v`.
    pub fn score_pairs(&self, emb: &Array2<f64>, pairs: &[(usize, usize)]) -> Result<Array2<f64>> {
        Self::check_pairs(emb, pairs)?;
        Ok(self.decode(Self::hadamard_rows(emb, pairs).view()))
    }

    pub fn pair_logits(&self, input: &GraphInput, pairs: &[(usize, usize)]) -> Result<Array2<f64>> {
        let emb = self.encode(input)?;
        self.score_pairs(&emb, pairs)
    }

    /// Mean cross-entropy over pairs against `targets` (rows are distributions) and its gradient.
    pub fn pair_loss_grad(&self, input: &GraphInput, pairs: &[(usize, usize)], targets: ArrayView2<'_, f64>) -> Result<(f64, Params)> {
        let enc = self.encode_cached(input)?;
        Self::check_pairs(&enc.output, pairs)?;
        let emb = &enc.output;
        let dec = self.decode_cached(Self::hadamard_rows(emb, pairs));
        let (loss, d_logits) = cross_entropy(dec.logits.view(), targets);
        let mut grads = Params::zeros_like(&self.params);
        let d_in = self.decode_backward(&dec, d_logits, &mut grads);
        let mut d_emb = Array2::zeros(emb.dim());
        for (i, &(u, v)) in pairs.iter().enumerate() {
            let g = d_in.row(i);
            let du = &g * &emb.row(v);
            let dv = &g * &emb.row(u);
            d_emb.row_mut(u).scaled_add(1.0, &du);
            d_emb.row_mut(v).scaled_add(1.0, &dv);
        }
        self.encode_backward(input, &enc, d_emb, &mut grads);
        Ok((loss, grads))
    }

    fn pooled(&self, inputs: &[GraphInput]) -> Result<(Vec<EncoderCache>, Array2<f64>)> {
        let mut caches = Vec::with_capacity(inputs.len());
        let mut pooled = Array2::zeros((inputs.len(), self.hidden_dim));
        for (i, input) in inputs.iter().enumerate() {
            if input.num_nodes() == 0 {
                return Err(Error::EmptySubgraph);
            }
            let cache = self.encode_cached(input)?;
            pooled.row_mut(i).assign(&cache.output.mean_axis(Axis(0)).expect("non-empty"));
            caches.push(cache);
        }
        Ok((caches, pooled))
    }

    /// Encodes each subgraph, mean-pools its node embeddings and decodes.
    pub fn subgraph_logits(&self, inputs: &[GraphInput]) -> Result<Array2<f64>> {
        let (_, pooled) = self.pooled(inputs)?;
        Ok(self.decode(pooled.view()))
    }

    pub fn subgraph_loss_grad(&self, inputs: &[GraphInput], targets: ArrayView2<'_, f64>) -> Result<(f64, Params)> {
        let (caches, pooled) = self.pooled(inputs)?;
        let dec = self.decode_cached(pooled);
        let (loss, d_logits) = cross_entropy(dec.logits.view(), targets);
        let mut grads = Params::zeros_like(&self.params);
        let d_pooled = self.decode_backward(&dec, d_logits, &mut grads);
        for (i, (input, cache)) in inputs.iter().zip(&caches).enumerate() {
            let n = input.num_nodes();
            let row = d_pooled.slice(s![i..i + 1, ..]).mapv(|x| x / n as f64);
            let d_out = Array2::from_shape_fn((n, self.hidden_dim), |(_, c)| row[[0, c]]);
            self.encode_backward(input, cache, d_out, &mut grads);
        }
        Ok((loss, grads))
    }

    pub fn classify_subgraph(&self, sg: &Subgraph) -> Result<[f64; 2]> {
        sg.validate()?;
        let logits = self.subgraph_logits(&[GraphInput::from_subgraph(sg)])?;
        Ok([logits[[0, 0]], logits[[0, 1]]])
    }
}
