//! Minimal dense / 1-d convolution layers with explicit backward passes.
//! Everything is f64 and deterministic; layouts are flat and row-major.

use rand::Rng;

use crate::rng::SeededRng;

/// Fully connected layer, weights stored out-major: `w[o * in_dim + i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub in_dim: usize,
    pub out_dim: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl Dense {
    pub fn init(in_dim: usize, out_dim: usize, rng: &mut SeededRng) -> Self {
        let bound = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let w = (0..in_dim * out_dim)
            .map(|_| rng.gen_range(-bound..bound))
            .collect();
        Dense {
            in_dim,
            out_dim,
            w,
            b: vec![0.0; out_dim],
        }
    }

    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Dense {
            in_dim,
            out_dim,
            w: vec![0.0; in_dim * out_dim],
            b: vec![0.0; out_dim],
        }
    }

    pub fn param_count(&self) -> usize {
        self.w.len() + self.b.len()
    }

    pub fn forward(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.in_dim);
        debug_assert_eq!(out.len(), self.out_dim);
        for o in 0..self.out_dim {
            let row = &self.w[o * self.in_dim..(o + 1) * self.in_dim];
            let mut acc = self.b[o];
            for (wi, xi) in row.iter().zip(x) {
                acc += wi * xi;
            }
            out[o] = acc;
        }
    }

    /// Accumulates into `gw`/`gb`; writes `grad_in` if given (overwrites).
    pub fn backward(
        &self,
        x: &[f64],
        grad_out: &[f64],
        gw: &mut [f64],
        gb: &mut [f64],
        grad_in: Option<&mut [f64]>,
    ) {
        for o in 0..self.out_dim {
            let g = grad_out[o];
            gb[o] += g;
            let grow = &mut gw[o * self.in_dim..(o + 1) * self.in_dim];
            for (gi, xi) in grow.iter_mut().zip(x) {
                *gi += g * xi;
            }
        }
        if let Some(gin) = grad_in {
            gin.fill(0.0);
            for o in 0..self.out_dim {
                let g = grad_out[o];
                let row = &self.w[o * self.in_dim..(o + 1) * self.in_dim];
                for (gi, wi) in gin.iter_mut().zip(row) {
                    *gi += g * wi;
                }
            }
        }
    }
}

/// 1-d convolution over a channel-major signal `x[c * len + t]`, same
/// padding, stride 1. Weights: `w[((o * in_ch) + i) * kernel + k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv1d {
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl Conv1d {
    pub fn init(in_ch: usize, out_ch: usize, kernel: usize, rng: &mut SeededRng) -> Self {
        let fan_in = in_ch * kernel;
        let fan_out = out_ch * kernel;
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let w = (0..in_ch * out_ch * kernel)
            .map(|_| rng.gen_range(-bound..bound))
            .collect();
        Conv1d {
            in_ch,
            out_ch,
            kernel,
            w,
            b: vec![0.0; out_ch],
        }
    }

    pub fn param_count(&self) -> usize {
        self.w.len() + self.b.len()
    }

    fn pad(&self) -> usize {
        self.kernel / 2
    }

    /// `x`: in_ch x len, `out`: out_ch x len.
    pub fn forward_same(&self, x: &[f64], len: usize, out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.in_ch * len);
        debug_assert_eq!(out.len(), self.out_ch * len);
        let pad = self.pad() as isize;
        for o in 0..self.out_ch {
            for t in 0..len {
                let mut acc = self.b[o];
                for i in 0..self.in_ch {
                    let wbase = ((o * self.in_ch) + i) * self.kernel;
                    for k in 0..self.kernel {
                        let s = t as isize + k as isize - pad;
                        if s >= 0 && (s as usize) < len {
                            acc += self.w[wbase + k] * x[i * len + s as usize];
                        }
                    }
                }
                out[o * len + t] = acc;
            }
        }
    }

    /// Accumulates into `gw`/`gb`; writes `grad_in` if given (overwrites).
    pub fn backward_same(
        &self,
        x: &[f64],
        len: usize,
        grad_out: &[f64],
        gw: &mut [f64],
        gb: &mut [f64],
        grad_in: Option<&mut [f64]>,
    ) {
        let pad = self.pad() as isize;
        for o in 0..self.out_ch {
            for t in 0..len {
                let g = grad_out[o * len + t];
                if g == 0.0 {
                    continue;
                }
                gb[o] += g;
                for i in 0..self.in_ch {
                    let wbase = ((o * self.in_ch) + i) * self.kernel;
                    for k in 0..self.kernel {
                        let s = t as isize + k as isize - pad;
                        if s >= 0 && (s as usize) < len {
                            gw[wbase + k] += g * x[i * len + s as usize];
                        }
                    }
                }
            }
        }
        if let Some(gin) = grad_in {
            gin.fill(0.0);
            for o in 0..self.out_ch {
                for t in 0..len {
                    let g = grad_out[o * len + t];
                    if g == 0.0 {
                        continue;
                    }
                    for i in 0..self.in_ch {
                        let wbase = ((o * self.in_ch) + i) * self.kernel;
                        for k in 0..self.kernel {
                            let s = t as isize + k as isize - pad;
                            if s >= 0 && (s as usize) < len {
                                gin[i * len + s as usize] += g * self.w[wbase + k];
                            }
                        }
                    }
                }
            }
        }
    }
}

pub fn relu(z: &[f64], out: &mut [f64]) {
    for (o, &v) in out.iter_mut().zip(z) {
        *o = v.max(0.0);
    }
}

/// dL/dz from dL/da given the pre-activations z.
pub fn relu_backward(z: &[f64], grad_a: &[f64], grad_z: &mut [f64]) {
    for ((gz, &ga), &zv) in grad_z.iter_mut().zip(grad_a).zip(z) {
        *gz = if zv > 0.0 { ga } else { 0.0 };
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}
