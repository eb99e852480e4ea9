//! Single-layer LSTM with a per-timestep softmax head.
//!
//! Gate rows of `w_x`, `w_h` and `b` are stacked in blocks of `H` in the
//! fixed order input, forget, cell-candidate, output (`"ifgo"`):
//!
//! ```text
//! z   = W_x·x_t + W_h·h_{t-1} + b
//! c_t = σ(z_f) ⊙ c_{t-1} + σ(z_i) ⊙ tanh(z_g)
//! h_t = σ(z_o) ⊙ tanh(c_t)
//! y_t = softmax(W_y·h_t + b_y)
//! ```
//!
//! The recurrence starts from `h_0 = c_0 = 0`. The training loss is the
//! per-timestep cross-entropy averaged over the sequence, and
//! [`backward_bptt`] returns its exact gradient.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::decoder::LabelPath;
use crate::numerics::{sigmoid_scalar, softmax_in_place, Matrix, Vector};

/// Tag written into model files for the gate block order.
pub const GATE_ORDER: &str = "ifgo";

/// Probabilities are floored at this value inside the log of the loss.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LstmError {
    #[error("shape mismatch in {what}: expected {expected}, got {actual}")]
    Shape {
        what: &'static str,
        expected: String,
        actual: String,
    },
    #[error("input sequence is empty")]
    EmptySequence,
    #[error("label sequence has length {actual}, expected {expected}")]
    LabelLength { expected: usize, actual: usize },
    #[error("label {label} at timestep {t} is outside 1..={classes}")]
    LabelOutOfRange {
        t: usize,
        label: usize,
        classes: usize,
    },
    #[error("sequence {index}: {reason}")]
    Dataset { index: usize, reason: String },
    #[error("invalid training config: {0}")]
    Config(String),
}

fn shape_err(what: &'static str, expected: impl ToString, actual: impl ToString) -> LstmError {
    LstmError::Shape {
        what,
        expected: expected.to_string(),
        actual: actual.to_string(),
    }
}

/// Recurrent parameters: `w_x` is `4H×N`, `w_h` is `4H×H`, `b` has `4H` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub w_x: Matrix,
    pub w_h: Matrix,
    pub b: Vec<f64>,
}

/// Output head: `w_y` is `Q×H`, `b_y` has `Q` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputParams {
    pub w_y: Matrix,
    pub b_y: Vec<f64>,
}

impl LstmParams {
    pub fn zeros(inputs: usize, hidden: usize) -> Self {
        Self {
            w_x: Matrix::zeros(4 * hidden, inputs),
            w_h: Matrix::zeros(4 * hidden, hidden),
            b: vec![0.0; 4 * hidden],
        }
    }

    pub fn hidden(&self) -> usize {
        self.w_h.cols()
    }

    pub fn inputs(&self) -> usize {
        self.w_x.cols()
    }

    pub fn validate(&self) -> Result<(), LstmError> {
        let h = self.w_h.cols();
        let n = self.w_x.cols();
        if h == 0 || n == 0 {
            return Err(shape_err(
                "lstm params",
                "N >= 1 and H >= 1",
                format!("N={n}, H={h}"),
            ));
        }
        if self.w_h.rows() != 4 * h {
            return Err(shape_err(
                "W_h",
                format!("{}x{h}", 4 * h),
                format!("{}x{}", self.w_h.rows(), h),
            ));
        }
        if self.w_x.rows() != 4 * h {
            return Err(shape_err(
                "W_x",
                format!("{}x{n}", 4 * h),
                format!("{}x{n}", self.w_x.rows()),
            ));
        }
        if self.b.len() != 4 * h {
            return Err(shape_err("b", 4 * h, self.b.len()));
        }
        Ok(())
    }

    /// Forget-gate bias block.
    pub fn forget_bias(&self) -> &[f64] {
        let h = self.hidden();
        &self.b[h..2 * h]
    }
}

impl OutputParams {
    pub fn zeros(hidden: usize, classes: usize) -> Self {
        Self {
            w_y: Matrix::zeros(classes, hidden),
            b_y: vec![0.0; classes],
        }
    }

    pub fn classes(&self) -> usize {
        self.w_y.rows()
    }

    pub fn validate(&self, hidden: usize) -> Result<(), LstmError> {
        let q = self.w_y.rows();
        if q < 2 {
            return Err(shape_err("output params", "Q >= 2", format!("Q={q}")));
        }
        if self.w_y.cols() != hidden {
            return Err(shape_err(
                "W_y",
                format!("{q}x{hidden}"),
                format!("{q}x{}", self.w_y.cols()),
            ));
        }
        if self.b_y.len() != q {
            return Err(shape_err("b_y", q, self.b_y.len()));
        }
        Ok(())
    }
}

/// A full network: recurrence plus softmax head.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub lstm: LstmParams,
    pub output: OutputParams,
}

impl Network {
    pub fn zeros(inputs: usize, hidden: usize, classes: usize) -> Self {
        Self {
            lstm: LstmParams::zeros(inputs, hidden),
            output: OutputParams::zeros(hidden, classes),
        }
    }

    pub fn init(inputs: usize, hidden: usize, classes: usize, seed: u64) -> Self {
        let (lstm, output) = init_params(inputs, hidden, classes, seed);
        Self { lstm, output }
    }

    pub fn inputs(&self) -> usize {
        self.lstm.inputs()
    }

    pub fn hidden(&self) -> usize {
        self.lstm.hidden()
    }

    pub fn classes(&self) -> usize {
        self.output.classes()
    }

    pub fn validate(&self) -> Result<(), LstmError> {
        self.lstm.validate()?;
        self.output.validate(self.lstm.hidden())
    }

    pub fn forward<X: AsRef<[f64]>>(&self, inputs: &[X]) -> Result<ForwardTrace, LstmError> {
        forward_sequence(&self.lstm, &self.output, inputs)
    }

    /// Parameter tensors in canonical order: `W_x, W_h, b, W_y, b_y`.
    pub fn tensors(&self) -> [&[f64]; 5] {
        [
            self.lstm.w_x.as_slice(),
            self.lstm.w_h.as_slice(),
            &self.lstm.b,
            self.output.w_y.as_slice(),
            &self.output.b_y,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 5] {
        [
            self.lstm.w_x.as_mut_slice(),
            self.lstm.w_h.as_mut_slice(),
            &mut self.lstm.b,
            self.output.w_y.as_mut_slice(),
            &mut self.output.b_y,
        ]
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// Adds `other` into `self` entrywise. Both must have the same shapes.
    pub(crate) fn accumulate(&mut self, other: &Network) {
        for (dst, src) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s;
            }
        }
    }

    pub(crate) fn scale(&mut self, factor: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|v| *v *= factor);
        }
    }
}

/// Gradients share the parameter layout.
pub type Gradients = Network;

/// Uniform `±1/√fan_in` weights (fan-in = column count of each matrix),
/// zero biases except the forget-gate block, which starts at 1.0.
pub fn init_params(
    inputs: usize,
    hidden: usize,
    classes: usize,
    seed: u64,
) -> (LstmParams, OutputParams) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut uniform = |rows: usize, cols: usize| {
        let s = 1.0 / (cols as f64).sqrt();
        Matrix::from_fn(rows, cols, |_, _| rng.random_range(-s..=s))
    };
    let w_x = uniform(4 * hidden, inputs);
    let w_h = uniform(4 * hidden, hidden);
    let w_y = uniform(classes, hidden);
    let mut b = vec![0.0; 4 * hidden];
    b[hidden..2 * hidden].fill(1.0);
    (
        LstmParams { w_x, w_h, b },
        OutputParams {
            w_y,
            b_y: vec![0.0; classes],
        },
    )
}

/// Hidden and cell state carried between timesteps.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Vector,
    pub c: Vector,
}

impl LstmState {
    pub fn zeros(hidden: usize) -> Self {
        Self {
            h: Vector::zeros(hidden),
            c: Vector::zeros(hidden),
        }
    }
}

/// Computes activated gates (ifgo), the new cell and hidden state.
/// `gates` must have length 4H; `c`, `h` length H.
fn cell_forward(
    p: &LstmParams,
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
    gates: &mut [f64],
    c: &mut [f64],
    h: &mut [f64],
) {
    let hd = c.len();
    p.w_x.matvec_into(x, gates);
    p.w_h.matvec_acc(h_prev, gates);
    for (g, b) in gates.iter_mut().zip(&p.b) {
        *g += b;
    }
    let (ifo, rest) = gates.split_at_mut(2 * hd);
    let (g_blk, o_blk) = rest.split_at_mut(hd);
    ifo.iter_mut().for_each(|v| *v = sigmoid_scalar(*v));
    g_blk.iter_mut().for_each(|v| *v = v.tanh());
    o_blk.iter_mut().for_each(|v| *v = sigmoid_scalar(*v));
    let (i_blk, f_blk) = ifo.split_at(hd);
    for j in 0..hd {
        c[j] = f_blk[j] * c_prev[j] + i_blk[j] * g_blk[j];
        h[j] = o_blk[j] * c[j].tanh();
    }
}

/// One LSTM cell update from `prev` given input `x`.
pub fn lstm_step(p: &LstmParams, x: &Vector, prev: &LstmState) -> Result<LstmState, LstmError> {
    p.validate()?;
    let hd = p.hidden();
    if x.len() != p.inputs() {
        return Err(shape_err("x_t", p.inputs(), x.len()));
    }
    if prev.h.len() != hd || prev.c.len() != hd {
        return Err(shape_err(
            "state",
            hd,
            format!("h={}, c={}", prev.h.len(), prev.c.len()),
        ));
    }
    let mut gates = vec![0.0; 4 * hd];
    let mut c = vec![0.0; hd];
    let mut h = vec![0.0; hd];
    cell_forward(p, x, &prev.h, &prev.c, &mut gates, &mut c, &mut h);
    Ok(LstmState {
        h: Vector::from_raw(h),
        c: Vector::from_raw(c),
    })
}

/// Everything the backward pass needs, stored as flat `T×dim` buffers.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    len: usize,
    inputs: usize,
    hidden: usize,
    classes: usize,
    x: Vec<f64>,
    gates: Vec<f64>,
    cells: Vec<f64>,
    hiddens: Vec<f64>,
    logits: Vec<f64>,
    outputs: Vec<f64>,
}

impl ForwardTrace {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    /// Activated gates at timestep `t` (0-based), ifgo order.
    pub fn gates(&self, t: usize) -> &[f64] {
        &self.gates[t * 4 * self.hidden..(t + 1) * 4 * self.hidden]
    }

    pub fn cell(&self, t: usize) -> &[f64] {
        &self.cells[t * self.hidden..(t + 1) * self.hidden]
    }

    pub fn hidden(&self, t: usize) -> &[f64] {
        &self.hiddens[t * self.hidden..(t + 1) * self.hidden]
    }

    pub fn logits(&self, t: usize) -> &[f64] {
        &self.logits[t * self.classes..(t + 1) * self.classes]
    }

    /// Softmax output `y_t`.
    pub fn output(&self, t: usize) -> &[f64] {
        &self.outputs[t * self.classes..(t + 1) * self.classes]
    }

    pub fn outputs(&self) -> impl Iterator<Item = &[f64]> {
        self.outputs.chunks_exact(self.classes)
    }

    fn input(&self, t: usize) -> &[f64] {
        &self.x[t * self.inputs..(t + 1) * self.inputs]
    }
}

/// Runs the recurrence over `inputs` from the zero state.
pub fn forward_sequence<X: AsRef<[f64]>>(
    p: &LstmParams,
    o: &OutputParams,
    inputs: &[X],
) -> Result<ForwardTrace, LstmError> {
    p.validate()?;
    let hd = p.hidden();
    o.validate(hd)?;
    if inputs.is_empty() {
        return Err(LstmError::EmptySequence);
    }
    let n = p.inputs();
    let q = o.classes();
    let len = inputs.len();
    let mut x = Vec::with_capacity(len * n);
    for (t, sample) in inputs.iter().enumerate() {
        let sample = sample.as_ref();
        if sample.len() != n {
            return Err(LstmError::Shape {
                what: "x_t",
                expected: n.to_string(),
                actual: format!("{} at timestep {}", sample.len(), t + 1),
            });
        }
        x.extend_from_slice(sample);
    }
    let mut trace = ForwardTrace {
        len,
        inputs: n,
        hidden: hd,
        classes: q,
        x,
        gates: vec![0.0; len * 4 * hd],
        cells: vec![0.0; len * hd],
        hiddens: vec![0.0; len * hd],
        logits: vec![0.0; len * q],
        outputs: vec![0.0; len * q],
    };
    let zeros = vec![0.0; hd];
    for t in 0..len {
        let (prev_cells, cur_cells) = trace.cells.split_at_mut(t * hd);
        let (prev_h, cur_h) = trace.hiddens.split_at_mut(t * hd);
        let c_prev = if t == 0 {
            &zeros[..]
        } else {
            &prev_cells[(t - 1) * hd..]
        };
        let h_prev = if t == 0 {
            &zeros[..]
        } else {
            &prev_h[(t - 1) * hd..]
        };
        let h_t = &mut cur_h[..hd];
        cell_forward(
            p,
            &trace.x[t * n..(t + 1) * n],
            h_prev,
            c_prev,
            &mut trace.gates[t * 4 * hd..(t + 1) * 4 * hd],
            &mut cur_cells[..hd],
            h_t,
        );
        let logits = &mut trace.logits[t * q..(t + 1) * q];
        o.w_y.matvec_into(h_t, logits);
        for (l, b) in logits.iter_mut().zip(&o.b_y) {
            *l += b;
        }
        let y = &mut trace.outputs[t * q..(t + 1) * q];
        y.copy_from_slice(logits);
        softmax_in_place(y);
    }
    Ok(trace)
}

fn check_labels(trace: &ForwardTrace, labels: &LabelPath) -> Result<(), LstmError> {
    if labels.len() != trace.len {
        return Err(LstmError::LabelLength {
            expected: trace.len,
            actual: labels.len(),
        });
    }
    for (t, &label) in labels.iter().enumerate() {
        if label == 0 || label > trace.classes {
            return Err(LstmError::LabelOutOfRange {
                t: t + 1,
                label,
                classes: trace.classes,
            });
        }
    }
    Ok(())
}

/// Mean over timesteps of `−ln y_{t,label_t}`, labels 1-based.
pub fn sequence_loss(trace: &ForwardTrace, labels: &LabelPath) -> Result<f64, LstmError> {
    check_labels(trace, labels)?;
    let total: f64 = labels
        .iter()
        .enumerate()
        .map(|(t, &label)| -trace.output(t)[label - 1].max(PROB_FLOOR).ln())
        .sum();
    Ok(total / trace.len as f64)
}

/// Exact gradient of [`sequence_loss`] with respect to every parameter.
pub fn backward_bptt(
    p: &LstmParams,
    o: &OutputParams,
    trace: &ForwardTrace,
    labels: &LabelPath,
) -> Result<Gradients, LstmError> {
    p.validate()?;
    let hd = p.hidden();
    o.validate(hd)?;
    if trace.hidden != hd || trace.inputs != p.inputs() || trace.classes != o.classes() {
        return Err(shape_err(
            "trace",
            format!("N={}, H={hd}, Q={}", p.inputs(), o.classes()),
            format!(
                "N={}, H={}, Q={}",
                trace.inputs, trace.hidden, trace.classes
            ),
        ));
    }
    check_labels(trace, labels)?;

    let q = trace.classes;
    let inv_t = 1.0 / trace.len as f64;
    let mut grads = Network::zeros(p.inputs(), hd, q);

    let mut dlogits = vec![0.0; q];
    let mut dh = vec![0.0; hd];
    let mut dh_next = vec![0.0; hd];
    let mut dc_next = vec![0.0; hd];
    let mut dz = vec![0.0; 4 * hd];
    let zeros = vec![0.0; hd];

    for t in (0..trace.len).rev() {
        let y = trace.output(t);
        let label = labels[t] - 1;
        if y[label] < PROB_FLOOR {
            // The floored log is constant in the parameters here.
            dlogits.fill(0.0);
        } else {
            for (j, d) in dlogits.iter_mut().enumerate() {
                let target = if j == label { 1.0 } else { 0.0 };
                *d = (y[j] - target) * inv_t;
            }
        }
        let h_t = trace.hidden(t);
        grads.output.w_y.add_outer(&dlogits, h_t);
        for (g, d) in grads.output.b_y.iter_mut().zip(&dlogits) {
            *g += d;
        }

        dh.copy_from_slice(&dh_next);
        o.w_y.matvec_t_acc(&dlogits, &mut dh);

        let gates = trace.gates(t);
        let (i_g, rest) = gates.split_at(hd);
        let (f_g, rest) = rest.split_at(hd);
        let (g_g, o_g) = rest.split_at(hd);
        let c_t = trace.cell(t);
        let c_prev = if t == 0 {
            &zeros[..]
        } else {
            trace.cell(t - 1)
        };
        let h_prev = if t == 0 {
            &zeros[..]
        } else {
            trace.hidden(t - 1)
        };

        {
            let (dz_i, rest) = dz.split_at_mut(hd);
            let (dz_f, rest) = rest.split_at_mut(hd);
            let (dz_g, dz_o) = rest.split_at_mut(hd);
            for j in 0..hd {
                let tc = c_t[j].tanh();
                dz_o[j] = dh[j] * tc * o_g[j] * (1.0 - o_g[j]);
                let dc = dh[j] * o_g[j] * (1.0 - tc * tc) + dc_next[j];
                dz_i[j] = dc * g_g[j] * i_g[j] * (1.0 - i_g[j]);
                dz_g[j] = dc * i_g[j] * (1.0 - g_g[j] * g_g[j]);
                dz_f[j] = dc * c_prev[j] * f_g[j] * (1.0 - f_g[j]);
                dc_next[j] = dc * f_g[j];
            }
        }

        grads.lstm.w_x.add_outer(&dz, trace.input(t));
        if t > 0 {
            grads.lstm.w_h.add_outer(&dz, h_prev);
        }
        for (g, d) in grads.lstm.b.iter_mut().zip(&dz) {
            *g += d;
        }
        dh_next.fill(0.0);
        p.w_h.matvec_t_acc(&dz, &mut dh_next);
    }
    Ok(grads)
}
