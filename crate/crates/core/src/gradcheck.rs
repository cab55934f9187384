//! Central finite-difference verification of analytic gradients.
//!
//! Any differentiable component exposes its parameters as one flat vector
//! with a named layer layout; the checker perturbs sampled parameters by
//! +/- epsilon and compares the numerical slope against the analytic value.

use rand::Rng;

use crate::rng;

/// Flat parameter access for gradient verification and optimizers.
pub trait FlatParams {
    /// Named contiguous segments, in flat order: (name, length).
    fn param_layout(&self) -> Vec<(String, usize)>;
    fn flat_params(&self) -> Vec<f64>;
    fn set_flat_params(&mut self, params: &[f64]);
}

#[derive(Debug, Clone)]
pub struct LayerCheck {
    pub layer: String,
    pub checked: usize,
    pub max_rel_error: f64,
    pub worst_index: usize,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub component: String,
    pub tolerance: f64,
    pub epsilon: f64,
    pub layers: Vec<LayerCheck>,
}

impl GradCheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.layers
            .iter()
            .map(|l| l.max_rel_error)
            .fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.max_rel_error() < self.tolerance
    }

    /// One line per layer, suitable for CLI output.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for layer in &self.layers {
            out.push_str(&format!(
                "{}/{}: checked {} params, max rel error {:.3e}\n",
                self.component, layer.layer, layer.checked, layer.max_rel_error
            ));
        }
        out.push_str(&format!(
            "{}: max rel error {:.3e} ({} tolerance {:.0e})\n",
            self.component,
            self.max_rel_error(),
            if self.passed() { "PASS" } else { "FAIL" },
            self.tolerance
        ));
        out
    }
}

fn rel_error(numerical: f64, analytic: f64) -> f64 {
    let diff = (numerical - analytic).abs();
    let scale = numerical.abs() + analytic.abs();
    if scale < 1e-10 {
        0.0
    } else {
        diff / scale.max(1e-8)
    }
}

/// Check a component's analytic gradient against central differences on
/// up to `samples_per_layer` randomly chosen parameters per layer.
pub fn check_component<M, L>(
    component: &str,
    model: &M,
    loss: L,
    analytic: &[f64],
    samples_per_layer: usize,
    epsilon: f64,
    tolerance: f64,
    seed: u64,
) -> GradCheckReport
where
    M: FlatParams + Clone,
    L: Fn(&M) -> f64,
{
    let layout = model.param_layout();
    let base = model.flat_params();
    assert_eq!(
        base.len(),
        analytic.len(),
        "analytic gradient length must match parameter count"
    );

    let mut gen = rng::derive(seed, component);
    let mut probe = model.clone();
    let mut layers = Vec::with_capacity(layout.len());
    let mut offset = 0usize;

    for (name, count) in layout {
        let mut indices: Vec<usize> = (0..count).collect();
        if count > samples_per_layer {
            for i in 0..samples_per_layer {
                let j = gen.gen_range(i..count);
                indices.swap(i, j);
            }
            indices.truncate(samples_per_layer);
        }

        let mut max_err = 0.0f64;
        let mut worst = 0usize;
        for &local in &indices {
            let idx = offset + local;
            let mut params = base.clone();
            params[idx] = base[idx] + epsilon;
            probe.set_flat_params(&params);
            let up = loss(&probe);
            params[idx] = base[idx] - epsilon;
            probe.set_flat_params(&params);
            let down = loss(&probe);
            let numerical = (up - down) / (2.0 * epsilon);
            let err = rel_error(numerical, analytic[idx]);
            if err > max_err {
                max_err = err;
                worst = idx;
            }
        }
        layers.push(LayerCheck {
            layer: name,
            checked: indices.len(),
            max_rel_error: max_err,
            worst_index: worst,
        });
        offset += count;
    }

    GradCheckReport {
        component: component.to_string(),
        tolerance,
        epsilon,
        layers,
    }
}
