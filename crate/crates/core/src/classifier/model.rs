use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::seeded;

/// Output classes, one per BB84 state.
pub const CLASSES: usize = 4;

/// Floor applied to the ground-truth probability inside the loss.
pub const LOSS_FLOOR: f64 = 1e-12;

/// Layer widths of `LSTM(hidden) → Dense(dense1, ReLU) → Dense(dense2, sigmoid) → Softmax(4)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Architecture {
    pub hidden: usize,
    pub dense1: usize,
    pub dense2: usize,
}

impl Default for Architecture {
    fn default() -> Self {
        Architecture {
            hidden: 40,
            dense1: 40,
            dense2: 20,
        }
    }
}

/// Offsets of each tensor inside the flat parameter vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layout {
    pub arch: Architecture,
    /// Gate matrix, `4H × (H + 2)`, rows `[f, i, o, g]`, columns `[h, x, 1]`.
    pub gates: usize,
    pub w1: usize,
    pub b1: usize,
    pub w2: usize,
    pub b2: usize,
    pub w3: usize,
    pub b3: usize,
    pub len: usize,
}

impl Layout {
    pub fn new(arch: Architecture) -> Self {
        let h = arch.hidden;
        let gates = 0;
        let w1 = gates + 4 * h * (h + 2);
        let b1 = w1 + arch.dense1 * h;
        let w2 = b1 + arch.dense1;
        let b2 = w2 + arch.dense2 * arch.dense1;
        let w3 = b2 + arch.dense2;
        let b3 = w3 + CLASSES * arch.dense2;
        Layout {
            arch,
            gates,
            w1,
            b1,
            w2,
            b2,
            w3,
            b3,
            len: b3 + CLASSES,
        }
    }

    pub fn gate_cols(&self) -> usize {
        self.arch.hidden + 2
    }

    /// Named tensors as `(name, offset, length)`.
    pub fn tensors(&self) -> [(&'static str, usize, usize); 7] {
        [
            ("lstm", self.gates, self.w1 - self.gates),
            ("dense1.w", self.w1, self.b1 - self.w1),
            ("dense1.b", self.b1, self.w2 - self.b1),
            ("dense2.w", self.w2, self.b2 - self.w2),
            ("dense2.b", self.b2, self.w3 - self.b2),
            ("head.w", self.w3, self.b3 - self.w3),
            ("head.b", self.b3, self.len - self.b3),
        ]
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Max-subtracted softmax.
pub fn softmax(logits: &[f64; CLASSES]) -> [f64; CLASSES] {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ex = logits.map(|z| (z - m).exp());
    let s: f64 = ex.iter().sum();
    ex.map(|e| e / s)
}

/// Sparse categorical cross-entropy `−ln max(p[label], 1e−12)`.
pub fn loss(probs: &[f64; CLASSES], label: u8) -> f64 {
    -probs[label as usize].max(LOSS_FLOOR).ln()
}

pub fn argmax(probs: &[f64; CLASSES]) -> usize {
    let mut best = 0;
    for k in 1..CLASSES {
        if probs[k] > probs[best] {
            best = k;
        }
    }
    best
}

/// LSTM sequence classifier with all parameters in one flat vector.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmClassifier {
    layout: Layout,
    params: Vec<f64>,
}

/// Activations cached by a forward pass for backpropagation.
struct Tape {
    t: usize,
    /// per step: `[f, i, o, g]` activations, `4H`
    gates: Vec<f64>,
    /// per step: `c_t`, `tanh(c_t)`, `h_t`
    c: Vec<f64>,
    tanh_c: Vec<f64>,
    h: Vec<f64>,
    a1: Vec<f64>,
    a2: Vec<f64>,
    probs: [f64; CLASSES],
}

impl LstmClassifier {
    /// All-zero parameters; outputs the uniform distribution for any input.
    pub fn zeros(arch: Architecture) -> Self {
        let layout = Layout::new(arch);
        LstmClassifier {
            layout,
            params: vec![0.0; layout.len],
        }
    }

    /// Uniform `±1/√fan_in` weights, zero biases and forget-gate bias `+1`.
    pub fn init(arch: Architecture, seed: u64) -> Self {
        let mut m = Self::zeros(arch);
        let l = m.layout;
        let h = arch.hidden;
        let cols = l.gate_cols();
        let mut rng = seeded(seed);
        let mut fill = |slice: &mut [f64], fan_in: usize| {
            let a = 1.0 / (fan_in as f64).sqrt();
            for w in slice {
                *w = rng.random_range(-a..a);
            }
        };
        for r in 0..4 * h {
            let row = &mut m.params[l.gates + r * cols..l.gates + (r + 1) * cols];
            fill(&mut row[..h + 1], h + 1);
            row[h + 1] = if r < h { 1.0 } else { 0.0 };
        }
        fill(&mut m.params[l.w1..l.b1], h);
        fill(&mut m.params[l.w2..l.b2], arch.dense1);
        fill(&mut m.params[l.w3..l.b3], arch.dense2);
        m
    }

    pub fn from_params(arch: Architecture, params: Vec<f64>) -> Result<Self> {
        let layout = Layout::new(arch);
        if params.len() != layout.len {
            return Err(Error::Shape(format!(
                "architecture {arch:?} needs {} parameters, got {}",
                layout.len,
                params.len()
            )));
        }
        Ok(LstmClassifier { layout, params })
    }

    pub fn architecture(&self) -> Architecture {
        self.layout.arch
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.params.iter().position(|p| !p.is_finite()) {
            None => Ok(()),
            Some(k) => {
                let (name, off, _) = self
                    .layout
                    .tensors()
                    .into_iter()
                    .rfind(|(_, off, _)| *off <= k)
                    .expect("offset 0 exists");
                Err(Error::Numerical(format!(
                    "non-finite parameter {name}[{}] = {}",
                    k - off,
                    self.params[k]
                )))
            }
        }
    }

    /// Class probabilities for one preprocessed current.
    pub fn forward(&self, x: &[f64]) -> Result<[f64; CLASSES]> {
        self.check_finite()?;
        Ok(self.run(x, false).probs)
    }

    /// Probabilities plus the hidden state `h_t` for every unit (rows) and step (columns).
    pub fn forward_with_trace(&self, x: &[f64]) -> Result<([f64; CLASSES], Vec<Vec<f64>>)> {
        self.check_finite()?;
        let tape = self.run(x, true);
        let hd = self.layout.arch.hidden;
        let trace = (0..hd)
            .map(|u| (0..tape.t).map(|t| tape.h[t * hd + u]).collect())
            .collect();
        Ok((tape.probs, trace))
    }

    /// Unchecked forward pass; keeps per-step activations when `keep` is set,
    /// otherwise only the last step.
    fn run(&self, x: &[f64], keep: bool) -> Tape {
        let l = &self.layout;
        let hd = l.arch.hidden;
        let cols = l.gate_cols();
        let w = &self.params[l.gates..l.w1];
        let steps = if keep { x.len() } else { x.len().min(1) };
        let mut tape = Tape {
            t: steps,
            gates: vec![0.0; steps * 4 * hd],
            c: vec![0.0; steps * hd],
            tanh_c: vec![0.0; steps * hd],
            h: vec![0.0; steps * hd],
            a1: vec![0.0; l.arch.dense1],
            a2: vec![0.0; l.arch.dense2],
            probs: [0.25; CLASSES],
        };
        let mut h_prev = vec![0.0; hd];
        let mut c_prev = vec![0.0; hd];
        let mut z = vec![0.0; 4 * hd];
        for (t, &xt) in x.iter().enumerate() {
            let slot = if keep { t } else { 0 };
            for (r, zr) in z.iter_mut().enumerate() {
                let row = &w[r * cols..(r + 1) * cols];
                *zr = dot(&row[..hd], &h_prev) + row[hd] * xt + row[hd + 1];
            }
            let g = &mut tape.gates[slot * 4 * hd..(slot + 1) * 4 * hd];
            for k in 0..3 * hd {
                g[k] = sigmoid(z[k]);
            }
            for k in 3 * hd..4 * hd {
                g[k] = z[k].tanh();
            }
            for u in 0..hd {
                let c = g[u] * c_prev[u] + g[hd + u] * g[3 * hd + u];
                let tc = c.tanh();
                tape.c[slot * hd + u] = c;
                tape.tanh_c[slot * hd + u] = tc;
                tape.h[slot * hd + u] = g[2 * hd + u] * tc;
            }
            h_prev.copy_from_slice(&tape.h[slot * hd..(slot + 1) * hd]);
            c_prev.copy_from_slice(&tape.c[slot * hd..(slot + 1) * hd]);
        }
        let p = &self.params;
        for (k, a) in tape.a1.iter_mut().enumerate() {
            let row = &p[l.w1 + k * hd..l.w1 + (k + 1) * hd];
            *a = (dot(row, &h_prev) + p[l.b1 + k]).max(0.0);
        }
        let d1 = l.arch.dense1;
        for (k, a) in tape.a2.iter_mut().enumerate() {
            let row = &p[l.w2 + k * d1..l.w2 + (k + 1) * d1];
            *a = sigmoid(dot(row, &tape.a1) + p[l.b2 + k]);
        }
        let d2 = l.arch.dense2;
        let mut logits = [0.0; CLASSES];
        for (k, z) in logits.iter_mut().enumerate() {
            let row = &p[l.w3 + k * d2..l.w3 + (k + 1) * d2];
            *z = dot(row, &tape.a2) + p[l.b3 + k];
        }
        tape.probs = softmax(&logits);
        tape
    }

    /// Loss of one sample, accumulating `scale · ∂loss/∂θ` into `grad`.
    pub fn accumulate_gradient(&self, x: &[f64], label: u8, scale: f64, grad: &mut [f64]) -> f64 {
        let tape = self.run(x, true);
        let value = loss(&tape.probs, label);
        let y = label as usize;
        if tape.probs[y] < LOSS_FLOOR || tape.t == 0 {
            // the floored loss is locally constant
            return value;
        }
        let l = &self.layout;
        let p = &self.params;
        let (hd, d1, d2) = (l.arch.hidden, l.arch.dense1, l.arch.dense2);
        let cols = l.gate_cols();
        let last = (tape.t - 1) * hd;
        let h_last = &tape.h[last..last + hd];

        let mut dlogit = tape.probs;
        dlogit[y] -= 1.0;
        for v in &mut dlogit {
            *v *= scale;
        }
        let mut da2 = vec![0.0; d2];
        for k in 0..CLASSES {
            grad[l.b3 + k] += dlogit[k];
            let gw = &mut grad[l.w3 + k * d2..l.w3 + (k + 1) * d2];
            let w = &p[l.w3 + k * d2..l.w3 + (k + 1) * d2];
            for j in 0..d2 {
                gw[j] += dlogit[k] * tape.a2[j];
                da2[j] += dlogit[k] * w[j];
            }
        }
        let mut da1 = vec![0.0; d1];
        for k in 0..d2 {
            let dz = da2[k] * tape.a2[k] * (1.0 - tape.a2[k]);
            grad[l.b2 + k] += dz;
            let gw = &mut grad[l.w2 + k * d1..l.w2 + (k + 1) * d1];
            let w = &p[l.w2 + k * d1..l.w2 + (k + 1) * d1];
            for j in 0..d1 {
                gw[j] += dz * tape.a1[j];
                da1[j] += dz * w[j];
            }
        }
        let mut dh = vec![0.0; hd];
        for k in 0..d1 {
            if tape.a1[k] <= 0.0 {
                continue;
            }
            let dz = da1[k];
            grad[l.b1 + k] += dz;
            let gw = &mut grad[l.w1 + k * hd..l.w1 + (k + 1) * hd];
            let w = &p[l.w1 + k * hd..l.w1 + (k + 1) * hd];
            for j in 0..hd {
                gw[j] += dz * h_last[j];
                dh[j] += dz * w[j];
            }
        }

        let w = &p[l.gates..l.w1];
        let (gw_all, _) = grad[l.gates..].split_at_mut(l.w1 - l.gates);
        let mut dc = vec![0.0; hd];
        let mut dz = vec![0.0; 4 * hd];
        let zeros = vec![0.0; hd];
        for t in (0..tape.t).rev() {
            let g = &tape.gates[t * 4 * hd..(t + 1) * 4 * hd];
            let tc = &tape.tanh_c[t * hd..(t + 1) * hd];
            let c_prev = if t > 0 {
                &tape.c[(t - 1) * hd..t * hd]
            } else {
                &zeros[..]
            };
            let h_prev = if t > 0 {
                &tape.h[(t - 1) * hd..t * hd]
            } else {
                &zeros[..]
            };
            for u in 0..hd {
                let (f, i, o, gg) = (g[u], g[hd + u], g[2 * hd + u], g[3 * hd + u]);
                dc[u] += dh[u] * o * (1.0 - tc[u] * tc[u]);
                dz[u] = dc[u] * c_prev[u] * f * (1.0 - f);
                dz[hd + u] = dc[u] * gg * i * (1.0 - i);
                dz[2 * hd + u] = dh[u] * tc[u] * o * (1.0 - o);
                dz[3 * hd + u] = dc[u] * i * (1.0 - gg * gg);
                dc[u] *= f;
            }
            let xt = x[t];
            dh.iter_mut().for_each(|v| *v = 0.0);
            for r in 0..4 * hd {
                let d = dz[r];
                let gw = &mut gw_all[r * cols..(r + 1) * cols];
                let wr = &w[r * cols..(r + 1) * cols];
                for j in 0..hd {
                    gw[j] += d * h_prev[j];
                    dh[j] += d * wr[j];
                }
                gw[hd] += d * xt;
                gw[hd + 1] += d;
            }
        }
        value
    }

    /// Mean loss over a batch and its exact gradient.
    pub fn batch_gradient(&self, batch: &[(&[f64], u8)]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.params.len()];
        if batch.is_empty() {
            return (0.0, grad);
        }
        let scale = 1.0 / batch.len() as f64;
        let mut total = 0.0;
        for (x, y) in batch {
            total += self.accumulate_gradient(x, *y, scale, &mut grad);
        }
        (total * scale, grad)
    }

    /// Mean batch loss without gradients.
    pub fn batch_loss(&self, batch: &[(&[f64], u8)]) -> f64 {
        let n = batch.len().max(1) as f64;
        batch
            .iter()
            .map(|(x, y)| loss(&self.run(x, false).probs, *y))
            .sum::<f64>()
            / n
    }
}
