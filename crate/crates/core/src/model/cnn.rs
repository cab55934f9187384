//! Convolutional branch: parallel filter widths over the meta-embedding
//! sequence, ReLU, global max pooling. Output length is widths * filters
//! regardless of input length.

use rand::Rng;

use crate::error::{Error, Result};
use crate::gradcheck::FlatParams;
use crate::rng::SeededRng;

#[derive(Debug, Clone, PartialEq)]
pub struct CnnBranch {
    pub dim: usize,
    pub widths: Vec<usize>,
    pub filters: usize,
    // per width: weights filters x (width * dim), then biases
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

/// Forward cache for backprop: per (width, filter) the argmax window start,
/// or None when the pooled activation was the ReLU floor.
pub struct CnnCache {
    pub output: Vec<f64>,
    argmax: Vec<Option<usize>>,
}

impl CnnBranch {
    pub fn init(dim: usize, widths: Vec<usize>, filters: usize, rng: &mut SeededRng) -> Self {
        let mut weights = Vec::with_capacity(widths.len());
        let mut biases = Vec::with_capacity(widths.len());
        for &w in &widths {
            let fan_in = w * dim;
            let bound = (6.0 / (fan_in + filters) as f64).sqrt();
            weights.push(
                (0..filters * fan_in)
                    .map(|_| rng.gen_range(-bound..bound))
                    .collect(),
            );
            biases.push(vec![0.0; filters]);
        }
        CnnBranch {
            dim,
            widths,
            filters,
            weights,
            biases,
        }
    }

    pub fn output_dim(&self) -> usize {
        self.widths.len() * self.filters
    }

    fn check_input(&self, seq: &[f64], mask: &[bool]) -> Result<usize> {
        let max_w = self.widths.iter().copied().max().unwrap_or(1);
        if mask.is_empty() || seq.len() != mask.len() * self.dim {
            return Err(Error::shape(
                "cnn input",
                format!("L x {}", self.dim),
                format!("{} values, {} mask", seq.len(), mask.len()),
            ));
        }
        let len = mask.len();
        if len < max_w {
            return Err(Error::shape(
                "cnn input",
                format!("length >= {max_w}"),
                format!("length {len}"),
            ));
        }
        Ok(len)
    }

    /// Masked forward: windows starting at padded positions are excluded
    /// from the max by pinning their contribution to the ReLU floor.
    pub fn forward(&self, seq: &[f64], mask: &[bool]) -> Result<CnnCache> {
        let len = self.check_input(seq, mask)?;
        let mut output = vec![0.0f64; self.output_dim()];
        let mut argmax = vec![None; self.output_dim()];

        for (wi, &w) in self.widths.iter().enumerate() {
            let fan_in = w * self.dim;
            for f in 0..self.filters {
                let row = &self.weights[wi][f * fan_in..(f + 1) * fan_in];
                let mut best = 0.0f64;
                let mut best_t = None;
                for t in 0..=(len - w) {
                    if !mask[t] {
                        continue;
                    }
                    let window = &seq[t * self.dim..(t + w) * self.dim];
                    let mut z = self.biases[wi][f];
                    for (wv, xv) in row.iter().zip(window) {
                        z += wv * xv;
                    }
                    let a = z.max(0.0);
                    if a > best {
                        best = a;
                        best_t = Some(t);
                    }
                }
                output[wi * self.filters + f] = best;
                argmax[wi * self.filters + f] = best_t;
            }
        }
        Ok(CnnCache { output, argmax })
    }

    /// Accumulate parameter gradients given dL/doutput. The input features
    /// are static, so no input gradient is produced.
    pub fn backward(
        &self,
        seq: &[f64],
        cache: &CnnCache,
        grad_out: &[f64],
        gw: &mut [Vec<f64>],
        gb: &mut [Vec<f64>],
    ) {
        for (wi, &w) in self.widths.iter().enumerate() {
            let fan_in = w * self.dim;
            for f in 0..self.filters {
                let g = grad_out[wi * self.filters + f];
                if g == 0.0 {
                    continue;
                }
                let Some(t) = cache.argmax[wi * self.filters + f] else {
                    continue; // pooled value was the ReLU floor
                };
                gb[wi][f] += g;
                let window = &seq[t * self.dim..(t + w) * self.dim];
                let grow = &mut gw[wi][f * fan_in..(f + 1) * fan_in];
                for (gv, xv) in grow.iter_mut().zip(window) {
                    *gv += g * xv;
                }
            }
        }
    }

    pub fn zero_grads(&self) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        (
            self.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            self.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        )
    }

    /// Scalar probe loss sum(probe * output); used by the gradient checks.
    pub fn probe_loss(&self, seq: &[f64], mask: &[bool], probe: &[f64]) -> f64 {
        let cache = self.forward(seq, mask).expect("probe input valid");
        cache.output.iter().zip(probe).map(|(o, p)| o * p).sum()
    }

    pub fn probe_grad(&self, seq: &[f64], mask: &[bool], probe: &[f64]) -> Vec<f64> {
        let cache = self.forward(seq, mask).expect("probe input valid");
        let (mut gw, mut gb) = self.zero_grads();
        self.backward(seq, &cache, probe, &mut gw, &mut gb);
        flatten_grads(&gw, &gb)
    }
}

pub(crate) fn flatten_grads(gw: &[Vec<f64>], gb: &[Vec<f64>]) -> Vec<f64> {
    let mut out = Vec::new();
    for (w, b) in gw.iter().zip(gb) {
        out.extend_from_slice(w);
        out.extend_from_slice(b);
    }
    out
}

impl FlatParams for CnnBranch {
    fn param_layout(&self) -> Vec<(String, usize)> {
        let mut layout = Vec::new();
        for (wi, &w) in self.widths.iter().enumerate() {
            layout.push((format!("conv_w{w}.w"), self.weights[wi].len()));
            layout.push((format!("conv_w{w}.b"), self.biases[wi].len()));
        }
        layout
    }

    fn flat_params(&self) -> Vec<f64> {
        flatten_grads(&self.weights, &self.biases)
    }

    fn set_flat_params(&mut self, params: &[f64]) {
        let mut offset = 0;
        for wi in 0..self.widths.len() {
            let wl = self.weights[wi].len();
            self.weights[wi].copy_from_slice(&params[offset..offset + wl]);
            offset += wl;
            let bl = self.biases[wi].len();
            self.biases[wi].copy_from_slice(&params[offset..offset + bl]);
            offset += bl;
        }
        debug_assert_eq!(offset, params.len());
    }
}
