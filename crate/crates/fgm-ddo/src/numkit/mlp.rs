//! Small feed-forward network with tanh hidden layers, an identity output
//! layer, and exact backpropagation. No autodiff: the gradient code mirrors
//! the forward pass and is validated against finite differences in tests.

use crate::error::{Error, Result};
use crate::numkit::{DenseMatrix, Rng};

/// Feed-forward regressor. `widths = [in, h1, ..., out]`; hidden layers use
/// tanh, the final layer is linear.
#[derive(Debug, Clone)]
pub struct Mlp {
    widths: Vec<usize>,
    weights: Vec<DenseMatrix>, // layer l: widths[l+1] x widths[l]
    biases: Vec<Vec<f64>>,
}

/// Per-parameter gradients matching an [`Mlp`]'s layout.
#[derive(Debug, Clone)]
pub struct MlpGradients {
    pub d_weights: Vec<DenseMatrix>,
    pub d_biases: Vec<Vec<f64>>,
}

impl MlpGradients {
    pub fn zeros_like(mlp: &Mlp) -> Self {
        MlpGradients {
            d_weights: mlp
                .weights
                .iter()
                .map(|w| DenseMatrix::zeros(w.rows(), w.cols()))
                .collect(),
            d_biases: mlp.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    pub fn add(&mut self, other: &MlpGradients) {
        for (a, b) in self.d_weights.iter_mut().zip(&other.d_weights) {
            for i in 0..a.rows() {
                for j in 0..a.cols() {
                    a.set(i, j, a.get(i, j) + b.get(i, j));
                }
            }
        }
        for (a, b) in self.d_biases.iter_mut().zip(&other.d_biases) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, c: f64) {
        for w in &mut self.d_weights {
            for i in 0..w.rows() {
                for j in 0..w.cols() {
                    w.set(i, j, w.get(i, j) * c);
                }
            }
        }
        for b in &mut self.d_biases {
            for x in b.iter_mut() {
                *x *= c;
            }
        }
    }

    /// Flattens in the same order as [`Mlp::params_to_vec`].
    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.d_weights.iter().zip(&self.d_biases) {
            out.extend_from_slice(w.data());
            out.extend_from_slice(b);
        }
        out
    }
}

/// Post-activation values per layer (index 0 is the input itself).
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    activations: Vec<Vec<f64>>,
}

impl ForwardTrace {
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("nonempty trace")
    }
}

impl Mlp {
    /// All-zero parameters.
    pub fn zeroed(widths: &[usize]) -> Result<Self> {
        if widths.len() < 2 || widths.iter().any(|&w| w == 0) {
            return Err(Error::arg("widths must list at least [in, out], all nonzero"));
        }
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 0..widths.len() - 1 {
            weights.push(DenseMatrix::zeros(widths[l + 1], widths[l]));
            biases.push(vec![0.0; widths[l + 1]]);
        }
        Ok(Mlp {
            widths: widths.to_vec(),
            weights,
            biases,
        })
    }

    /// Xavier-uniform initialization from the given stream.
    pub fn init(widths: &[usize], rng: &mut Rng) -> Result<Self> {
        let mut mlp = Mlp::zeroed(widths)?;
        for l in 0..mlp.weights.len() {
            let (fan_out, fan_in) = (mlp.weights[l].rows(), mlp.weights[l].cols());
            let s = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for i in 0..fan_out {
                for j in 0..fan_in {
                    mlp.weights[l].set(i, j, (2.0 * rng.uniform() - 1.0) * s);
                }
            }
        }
        Ok(mlp)
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.widths.last().unwrap()
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    /// Total parameter count: Σ (w_in + 1) · w_out.
    pub fn num_params(&self) -> usize {
        self.widths
            .windows(2)
            .map(|w| (w[0] + 1) * w[1])
            .sum()
    }

    pub fn set_weight(&mut self, layer: usize, out: usize, inp: usize, v: f64) {
        self.weights[layer].set(out, inp, v);
    }

    pub fn set_bias(&mut self, layer: usize, out: usize, v: f64) {
        self.biases[layer][out] = v;
    }

    pub fn forward_trace(&self, x: &[f64]) -> Result<ForwardTrace> {
        if x.len() != self.input_dim() {
            return Err(Error::dim(format!(
                "mlp expects input of length {}, got {}",
                self.input_dim(),
                x.len()
            )));
        }
        let last = self.weights.len() - 1;
        let mut activations = Vec::with_capacity(self.widths.len());
        activations.push(x.to_vec());
        for l in 0..self.weights.len() {
            let prev = activations.last().unwrap();
            let mut a = self.weights[l].matvec(prev)?;
            for (ai, bi) in a.iter_mut().zip(&self.biases[l]) {
                *ai += bi;
                if l != last {
                    *ai = ai.tanh();
                }
            }
            activations.push(a);
        }
        Ok(ForwardTrace { activations })
    }

    /// Vector-valued forward pass.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut trace = self.forward_trace(x)?;
        Ok(trace.activations.pop().expect("nonempty"))
    }

    /// Scalar forward pass; the network must have output width 1.
    pub fn forward_scalar(&self, x: &[f64]) -> Result<f64> {
        if self.output_dim() != 1 {
            return Err(Error::dim("forward_scalar on a vector-output network".to_string()));
        }
        Ok(self.forward(x)?[0])
    }

    /// Backpropagates `d_out = dL/d(output)` through a recorded forward pass,
    /// accumulating parameter gradients into `grads` and returning
    /// `dL/d(input)`.
    pub fn backward_from_output(
        &self,
        trace: &ForwardTrace,
        d_out: &[f64],
        grads: &mut MlpGradients,
    ) -> Result<Vec<f64>> {
        if d_out.len() != self.output_dim() {
            return Err(Error::dim("output gradient length".to_string()));
        }
        let mut delta = d_out.to_vec();
        for l in (0..self.weights.len()).rev() {
            let a_prev = &trace.activations[l];
            // tanh derivative on hidden layers: 1 − a², from post-activation.
            if l != self.weights.len() - 1 {
                let a_cur = &trace.activations[l + 1];
                for (d, a) in delta.iter_mut().zip(a_cur) {
                    *d *= 1.0 - a * a;
                }
            }
            for (i, &di) in delta.iter().enumerate() {
                grads.d_biases[l][i] += di;
                for (j, &aj) in a_prev.iter().enumerate() {
                    let v = grads.d_weights[l].get(i, j) + di * aj;
                    grads.d_weights[l].set(i, j, v);
                }
            }
            let mut d_prev = vec![0.0; a_prev.len()];
            for (i, &di) in delta.iter().enumerate() {
                let w_row = self.weights[l].row(i);
                for (j, dp) in d_prev.iter_mut().enumerate() {
                    *dp += di * w_row[j];
                }
            }
            delta = d_prev;
        }
        Ok(delta)
    }

    /// Gradient of the scalar output with respect to the input.
    pub fn input_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        if self.output_dim() != 1 {
            return Err(Error::dim("input_gradient on a vector-output network".to_string()));
        }
        let trace = self.forward_trace(x)?;
        let mut grads = MlpGradients::zeros_like(self);
        self.backward_from_output(&trace, &[1.0], &mut grads)
    }

    /// Gradient of the batch-mean squared error `mean((f(x) − y)²)` with
    /// respect to all parameters, plus the loss itself.
    pub fn grad_mse_batch(&self, xs: &[Vec<f64>], ys: &[f64]) -> Result<(MlpGradients, f64)> {
        if xs.is_empty() || xs.len() != ys.len() {
            return Err(Error::dim("batch inputs and targets must be nonempty and equal length".to_string()));
        }
        let n = xs.len() as f64;
        let mut grads = MlpGradients::zeros_like(self);
        let mut loss = 0.0;
        for (x, &y) in xs.iter().zip(ys) {
            let trace = self.forward_trace(x)?;
            let out = trace.output()[0];
            let resid = out - y;
            loss += resid * resid;
            self.backward_from_output(&trace, &[2.0 * resid / n], &mut grads)?;
        }
        Ok((grads, loss / n))
    }

    /// Parameters flattened layer by layer (weights row-major, then biases).
    pub fn params_to_vec(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w.data());
            out.extend_from_slice(b);
        }
        out
    }

    pub fn set_params_from_vec(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.num_params() {
            return Err(Error::dim(format!(
                "expected {} parameters, got {}",
                self.num_params(),
                params.len()
            )));
        }
        let mut at = 0;
        for l in 0..self.weights.len() {
            let (r, c) = (self.weights[l].rows(), self.weights[l].cols());
            self.weights[l] =
                DenseMatrix::from_vec(r, c, params[at..at + r * c].to_vec())?;
            at += r * c;
            self.biases[l].copy_from_slice(&params[at..at + r]);
            at += r;
        }
        Ok(())
    }
}
