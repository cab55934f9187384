//! Convolutional autoencoder that compresses a token's 3 x D channel stack
//! into a single D-dimensional meta-embedding.
//!
//! The stack is treated as a length-D signal with 3 input channels. Encoder:
//! two same-padded width-3 conv layers (32 filters each, ReLU) and a linear
//! map to the D-unit latent. Decoder mirrors it. At inference only the
//! encoder runs.

use crate::embeddings::{EmbeddingChannels, TokenStack};
use crate::error::{Error, Result};
use crate::gradcheck::FlatParams;
use crate::nn::{relu, relu_backward, Conv1d, Dense};
use crate::rng::{self, SeededRng};
use crate::text::PaddedSequence;

#[derive(Debug, Clone)]
pub struct MetaTrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub shuffle: bool,
    pub validation_split: f64,
    pub learning_rate: f64,
    pub filters: usize,
    pub seed: u64,
}

impl Default for MetaTrainConfig {
    fn default() -> Self {
        MetaTrainConfig {
            epochs: 100,
            batch_size: 100,
            shuffle: true,
            validation_split: 0.1,
            learning_rate: 0.01,
            filters: 32,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetaEncoder {
    pub dim: usize,
    pub filters: usize,
    conv1: Conv1d,
    conv2: Conv1d,
    enc_fc: Dense,
    dec_fc: Dense,
    conv3: Conv1d,
    conv4: Conv1d,
}

/// Per-epoch loss history; `best_epoch` indexes into these vectors.
#[derive(Debug, Clone)]
pub struct MetaTrainReport {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub best_epoch: usize,
}

struct ForwardCache {
    z1: Vec<f64>,
    a1: Vec<f64>,
    z2: Vec<f64>,
    a2: Vec<f64>,
    latent: Vec<f64>,
    z3: Vec<f64>,
    a3: Vec<f64>,
    z4: Vec<f64>,
    a4: Vec<f64>,
    output: Vec<f64>,
}

impl MetaEncoder {
    pub fn init(dim: usize, filters: usize, rng: &mut SeededRng) -> Self {
        MetaEncoder {
            dim,
            filters,
            conv1: Conv1d::init(3, filters, 3, rng),
            conv2: Conv1d::init(filters, filters, 3, rng),
            enc_fc: Dense::init(filters * dim, dim, rng),
            dec_fc: Dense::init(dim, filters * dim, rng),
            conv3: Conv1d::init(filters, filters, 3, rng),
            conv4: Conv1d::init(filters, 3, 3, rng),
        }
    }

    fn check_stack(&self, stack: &TokenStack) -> Result<()> {
        if stack.dim != self.dim || stack.rows.iter().any(|r| r.len() != self.dim) {
            return Err(Error::shape(
                "meta encoder input",
                format!("3x{}", self.dim),
                format!("3x{}", stack.dim),
            ));
        }
        Ok(())
    }

    fn encode_flat(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let f = self.filters;
        let mut z1 = vec![0.0; f * d];
        self.conv1.forward_same(x, d, &mut z1);
        let mut a1 = vec![0.0; f * d];
        relu(&z1, &mut a1);
        let mut z2 = vec![0.0; f * d];
        self.conv2.forward_same(&a1, d, &mut z2);
        let mut a2 = vec![0.0; f * d];
        relu(&z2, &mut a2);
        let mut latent = vec![0.0; d];
        self.enc_fc.forward(&a2, &mut latent);
        latent
    }

    fn forward_full(&self, x: &[f64]) -> ForwardCache {
        let d = self.dim;
        let f = self.filters;
        let mut z1 = vec![0.0; f * d];
        self.conv1.forward_same(x, d, &mut z1);
        let mut a1 = vec![0.0; f * d];
        relu(&z1, &mut a1);
        let mut z2 = vec![0.0; f * d];
        self.conv2.forward_same(&a1, d, &mut z2);
        let mut a2 = vec![0.0; f * d];
        relu(&z2, &mut a2);
        let mut latent = vec![0.0; d];
        self.enc_fc.forward(&a2, &mut latent);

        let mut z3 = vec![0.0; f * d];
        self.dec_fc.forward(&latent, &mut z3);
        let mut a3 = vec![0.0; f * d];
        relu(&z3, &mut a3);
        let mut z4 = vec![0.0; f * d];
        self.conv3.forward_same(&a3, d, &mut z4);
        let mut a4 = vec![0.0; f * d];
        relu(&z4, &mut a4);
        let mut output = vec![0.0; 3 * d];
        self.conv4.forward_same(&a4, d, &mut output);

        ForwardCache {
            z1,
            a1,
            z2,
            a2,
            latent,
            z3,
            a3,
            z4,
            a4,
            output,
        }
    }

    /// The 1 x D meta-embedding of one token stack.
    pub fn encode_token(&self, stack: &TokenStack) -> Result<Vec<f64>> {
        self.check_stack(stack)?;
        Ok(self.encode_flat(&stack.flat()))
    }

    /// Decoder round trip, used by training and reconstruction tests.
    pub fn reconstruct(&self, stack: &TokenStack) -> Result<Vec<f64>> {
        self.check_stack(stack)?;
        Ok(self.forward_full(&stack.flat()).output)
    }

    /// Mean squared reconstruction error over a batch of flat 3*D stacks.
    pub fn loss_batch(&self, batch: &[Vec<f64>]) -> f64 {
        let n = batch.len().max(1);
        let elems = (3 * self.dim) as f64;
        let mut total = 0.0;
        for x in batch {
            let out = self.forward_full(x).output;
            let mut sq = 0.0;
            for (o, xi) in out.iter().zip(x) {
                let e = o - xi;
                sq += e * e;
            }
            total += sq / elems;
        }
        total / n as f64
    }

    /// Loss plus the full flattened gradient for a batch.
    pub fn loss_and_grad(&self, batch: &[Vec<f64>]) -> (f64, Vec<f64>) {
        let d = self.dim;
        let f = self.filters;
        let n = batch.len().max(1) as f64;
        let elems = (3 * d) as f64;

        let mut g_conv1_w = vec![0.0; self.conv1.w.len()];
        let mut g_conv1_b = vec![0.0; self.conv1.b.len()];
        let mut g_conv2_w = vec![0.0; self.conv2.w.len()];
        let mut g_conv2_b = vec![0.0; self.conv2.b.len()];
        let mut g_enc_w = vec![0.0; self.enc_fc.w.len()];
        let mut g_enc_b = vec![0.0; self.enc_fc.b.len()];
        let mut g_dec_w = vec![0.0; self.dec_fc.w.len()];
        let mut g_dec_b = vec![0.0; self.dec_fc.b.len()];
        let mut g_conv3_w = vec![0.0; self.conv3.w.len()];
        let mut g_conv3_b = vec![0.0; self.conv3.b.len()];
        let mut g_conv4_w = vec![0.0; self.conv4.w.len()];
        let mut g_conv4_b = vec![0.0; self.conv4.b.len()];

        let mut total = 0.0;
        for x in batch {
            let cache = self.forward_full(x);
            let mut grad_out = vec![0.0; 3 * d];
            let mut sq = 0.0;
            for i in 0..3 * d {
                let e = cache.output[i] - x[i];
                sq += e * e;
                grad_out[i] = 2.0 * e / (elems * n);
            }
            total += sq / elems;

            let mut grad_a4 = vec![0.0; f * d];
            self.conv4.backward_same(
                &cache.a4,
                d,
                &grad_out,
                &mut g_conv4_w,
                &mut g_conv4_b,
                Some(&mut grad_a4),
            );
            let mut grad_z4 = vec![0.0; f * d];
            relu_backward(&cache.z4, &grad_a4, &mut grad_z4);

            let mut grad_a3 = vec![0.0; f * d];
            self.conv3.backward_same(
                &cache.a3,
                d,
                &grad_z4,
                &mut g_conv3_w,
                &mut g_conv3_b,
                Some(&mut grad_a3),
            );
            let mut grad_z3 = vec![0.0; f * d];
            relu_backward(&cache.z3, &grad_a3, &mut grad_z3);

            let mut grad_latent = vec![0.0; d];
            self.dec_fc.backward(
                &cache.latent,
                &grad_z3,
                &mut g_dec_w,
                &mut g_dec_b,
                Some(&mut grad_latent),
            );

            let mut grad_a2 = vec![0.0; f * d];
            self.enc_fc.backward(
                &cache.a2,
                &grad_latent,
                &mut g_enc_w,
                &mut g_enc_b,
                Some(&mut grad_a2),
            );
            let mut grad_z2 = vec![0.0; f * d];
            relu_backward(&cache.z2, &grad_a2, &mut grad_z2);

            let mut grad_a1 = vec![0.0; f * d];
            self.conv2.backward_same(
                &cache.a1,
                d,
                &grad_z2,
                &mut g_conv2_w,
                &mut g_conv2_b,
                Some(&mut grad_a1),
            );
            let mut grad_z1 = vec![0.0; f * d];
            relu_backward(&cache.z1, &grad_a1, &mut grad_z1);

            self.conv1
                .backward_same(x, d, &grad_z1, &mut g_conv1_w, &mut g_conv1_b, None);
        }

        let mut grad = Vec::with_capacity(self.flat_params().len());
        grad.extend(g_conv1_w);
        grad.extend(g_conv1_b);
        grad.extend(g_conv2_w);
        grad.extend(g_conv2_b);
        grad.extend(g_enc_w);
        grad.extend(g_enc_b);
        grad.extend(g_dec_w);
        grad.extend(g_dec_b);
        grad.extend(g_conv3_w);
        grad.extend(g_conv3_b);
        grad.extend(g_conv4_w);
        grad.extend(g_conv4_b);

        (total / n, grad)
    }
}

impl FlatParams for MetaEncoder {
    fn param_layout(&self) -> Vec<(String, usize)> {
        vec![
            ("conv1.w".into(), self.conv1.w.len()),
            ("conv1.b".into(), self.conv1.b.len()),
            ("conv2.w".into(), self.conv2.w.len()),
            ("conv2.b".into(), self.conv2.b.len()),
            ("enc_fc.w".into(), self.enc_fc.w.len()),
            ("enc_fc.b".into(), self.enc_fc.b.len()),
            ("dec_fc.w".into(), self.dec_fc.w.len()),
            ("dec_fc.b".into(), self.dec_fc.b.len()),
            ("conv3.w".into(), self.conv3.w.len()),
            ("conv3.b".into(), self.conv3.b.len()),
            ("conv4.w".into(), self.conv4.w.len()),
            ("conv4.b".into(), self.conv4.b.len()),
        ]
    }

    fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for part in [
            &self.conv1.w,
            &self.conv1.b,
            &self.conv2.w,
            &self.conv2.b,
            &self.enc_fc.w,
            &self.enc_fc.b,
            &self.dec_fc.w,
            &self.dec_fc.b,
            &self.conv3.w,
            &self.conv3.b,
            &self.conv4.w,
            &self.conv4.b,
        ] {
            out.extend_from_slice(part);
        }
        out
    }

    fn set_flat_params(&mut self, params: &[f64]) {
        let mut offset = 0;
        for part in [
            &mut self.conv1.w,
            &mut self.conv1.b,
            &mut self.conv2.w,
            &mut self.conv2.b,
            &mut self.enc_fc.w,
            &mut self.enc_fc.b,
            &mut self.dec_fc.w,
            &mut self.dec_fc.b,
            &mut self.conv3.w,
            &mut self.conv3.b,
            &mut self.conv4.w,
            &mut self.conv4.b,
        ] {
            let len = part.len();
            part.copy_from_slice(&params[offset..offset + len]);
            offset += len;
        }
        debug_assert_eq!(offset, params.len());
    }
}

/// Train the autoencoder on token stacks by mini-batch gradient descent,
/// returning the parameters at the best validation loss.
pub fn train_meta_encoder(
    stacks: &[TokenStack],
    config: &MetaTrainConfig,
) -> Result<(MetaEncoder, MetaTrainReport)> {
    if stacks.len() < 10 {
        return Err(Error::InsufficientData(format!(
            "need at least 10 stacks, got {}",
            stacks.len()
        )));
    }
    if config.epochs == 0 {
        return Err(Error::config("epochs must be >= 1"));
    }
    if !(config.validation_split > 0.0 && config.validation_split < 1.0) {
        return Err(Error::config("validation_split must be in (0, 1)"));
    }
    let dim = stacks[0].dim;
    for s in stacks {
        if s.dim != dim || s.rows.iter().any(|r| r.len() != dim) {
            return Err(Error::shape(
                "meta training stack",
                format!("3x{dim}"),
                format!("3x{}", s.dim),
            ));
        }
    }

    let mut batch_size = config.batch_size.max(1);
    if stacks.len() < batch_size {
        log::warn!(
            "batch size {} larger than {} stacks; clamping",
            batch_size,
            stacks.len()
        );
        batch_size = stacks.len();
    }

    let flats: Vec<Vec<f64>> = stacks.iter().map(|s| s.flat()).collect();
    let mut gen = rng::seeded(config.seed);
    let mut order: Vec<usize> = (0..flats.len()).collect();
    rng::shuffle(&mut order, &mut gen);
    let n_val = ((flats.len() as f64 * config.validation_split).round() as usize)
        .clamp(1, flats.len() - 1);
    let (val_idx, train_idx) = order.split_at(n_val);
    let val_set: Vec<Vec<f64>> = val_idx.iter().map(|&i| flats[i].clone()).collect();
    let mut train_set: Vec<Vec<f64>> = train_idx.iter().map(|&i| flats[i].clone()).collect();

    let mut model = MetaEncoder::init(dim, config.filters, &mut gen);
    let mut params = model.flat_params();

    let mut report = MetaTrainReport {
        train_loss: Vec::with_capacity(config.epochs),
        val_loss: Vec::with_capacity(config.epochs),
        best_epoch: 0,
    };
    let mut best_params = params.clone();
    let mut best_val = f64::INFINITY;

    for epoch in 0..config.epochs {
        if config.shuffle {
            rng::shuffle(&mut train_set, &mut gen);
        }
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for batch in train_set.chunks(batch_size) {
            let (loss, grad) = model.loss_and_grad(batch);
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch: epoch + 1 });
            }
            epoch_loss += loss;
            batches += 1;
            for (p, g) in params.iter_mut().zip(&grad) {
                *p -= config.learning_rate * g;
            }
            model.set_flat_params(&params);
        }
        let val = model.loss_batch(&val_set);
        if !val.is_finite() {
            return Err(Error::Divergence { epoch: epoch + 1 });
        }
        report.train_loss.push(epoch_loss / batches.max(1) as f64);
        report.val_loss.push(val);
        if val < best_val {
            best_val = val;
            best_params = params.clone();
            report.best_epoch = epoch;
        }
    }

    model.set_flat_params(&best_params);
    Ok((model, report))
}

/// Meta-embed every real token of a padded sequence; padded rows stay zero.
pub fn encode_sequence(
    padded: &PaddedSequence,
    channels: &EmbeddingChannels,
    encoder: &MetaEncoder,
) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::with_capacity(padded.max_len());
    for (t, token) in padded.tokens.iter().enumerate() {
        if padded.mask[t] {
            let stack = channels.lookup_stack(token);
            rows.push(encoder.encode_token(&stack)?);
        } else {
            rows.push(vec![0.0; encoder.dim]);
        }
    }
    Ok(rows)
}
