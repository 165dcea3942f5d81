//! Gated recurrent cell and Gaussian output head over a flat parameter
//! vector, with exact reverse-mode gradients of the window NLL.
//!
//! ```text
//! z  = σ(W_z x + U_z h + b_z)
//! r  = σ(W_r x + U_r h + b_r)
//! n  = tanh(W_n x + U_n (r ⊙ h) + b_n)
//! h' = (1 − z) ⊙ n + z ⊙ h
//! [μ, ρ] = V [h'; x] + c,    σ = softplus(ρ) + σ_min
//! ```

use std::ops::Range;

use super::nll;

/// Offsets of each parameter block inside the flat vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Layout {
    pub n: usize,
    pub h: usize,
}

impl Layout {
    pub fn new(n: usize, h: usize) -> Self {
        Self { n, h }
    }

    fn input_block(&self) -> usize {
        self.h * self.n
    }

    fn hidden_block(&self) -> usize {
        self.h * self.h
    }

    /// Input weights of gate `g` (0 = update, 1 = reset, 2 = candidate).
    pub fn w(&self, g: usize) -> Range<usize> {
        let start = g * self.input_block();
        start..start + self.input_block()
    }

    pub fn u(&self, g: usize) -> Range<usize> {
        let start = 3 * self.input_block() + g * self.hidden_block();
        start..start + self.hidden_block()
    }

    pub fn b(&self, g: usize) -> Range<usize> {
        let start = 3 * (self.input_block() + self.hidden_block()) + g * self.h;
        start..start + self.h
    }

    pub fn head_in(&self) -> usize {
        self.h + self.n
    }

    pub fn v(&self) -> Range<usize> {
        let start = self.b(2).end;
        start..start + 2 * self.n * self.head_in()
    }

    pub fn c(&self) -> Range<usize> {
        let start = self.v().end;
        start..start + 2 * self.n
    }

    pub fn len(&self) -> usize {
        self.c().end
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.max(0.0) + (-x.abs()).exp().ln_1p()
    }
}

/// `out[i] += Σ_k m[i, k] · v[k]` for row-major `m`.
fn matvec_add(m: &[f64], v: &[f64], out: &mut [f64]) {
    let cols = v.len();
    for (o, row) in out.iter_mut().zip(m.chunks_exact(cols)) {
        *o += row.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// `out[k] += Σ_i m[i, k] · v[i]`.
fn matvec_t_add(m: &[f64], v: &[f64], out: &mut [f64]) {
    let cols = out.len();
    for (vi, row) in v.iter().zip(m.chunks_exact(cols)) {
        if *vi != 0.0 {
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * vi;
            }
        }
    }
}

/// `g[i, k] += a[i] · b[k]`.
fn outer_add(g: &mut [f64], a: &[f64], b: &[f64]) {
    let cols = b.len();
    for (ai, row) in a.iter().zip(g.chunks_exact_mut(cols)) {
        if *ai != 0.0 {
            for (o, bk) in row.iter_mut().zip(b) {
                *o += ai * bk;
            }
        }
    }
}

/// Activations of one cell step, kept for the backward pass.
#[derive(Debug, Clone, Default)]
pub(crate) struct Step {
    h_prev: Vec<f64>,
    z: Vec<f64>,
    r: Vec<f64>,
    n: Vec<f64>,
    rh: Vec<f64>,
    pub h: Vec<f64>,
}

pub(crate) fn cell(p: &[f64], lay: Layout, x: &[f64], h_prev: &[f64]) -> Step {
    let h = lay.h;
    let gate = |g: usize, hidden_in: &[f64]| {
        let mut a = p[lay.b(g)].to_vec();
        matvec_add(&p[lay.w(g)], x, &mut a);
        matvec_add(&p[lay.u(g)], hidden_in, &mut a);
        a
    };
    let z: Vec<f64> = gate(0, h_prev).into_iter().map(sigmoid).collect();
    let r: Vec<f64> = gate(1, h_prev).into_iter().map(sigmoid).collect();
    let rh: Vec<f64> = r.iter().zip(h_prev).map(|(a, b)| a * b).collect();
    let n: Vec<f64> = gate(2, &rh).into_iter().map(f64::tanh).collect();
    let h_new = (0..h)
        .map(|i| (1.0 - z[i]) * n[i] + z[i] * h_prev[i])
        .collect();
    Step {
        h_prev: h_prev.to_vec(),
        z,
        r,
        n,
        rh,
        h: h_new,
    }
}

/// Output head: returns `(μ, raw σ pre-activation)`.
pub(crate) fn head(p: &[f64], lay: Layout, h: &[f64], x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut input = Vec::with_capacity(lay.head_in());
    input.extend_from_slice(h);
    input.extend_from_slice(x);
    let mut out = p[lay.c()].to_vec();
    matvec_add(&p[lay.v()], &input, &mut out);
    let raw = out.split_off(lay.n);
    (out, raw)
}

/// Teacher-forced NLL of one window (`(context + horizon) × n` rows),
/// summed over horizon steps and variables. Accumulates `∂loss/∂p` into
/// `grad` when given.
pub(crate) fn window_loss(
    p: &[f64],
    lay: Layout,
    rows: &[f64],
    context: usize,
    horizon: usize,
    min_sigma: f64,
    grad: Option<&mut [f64]>,
) -> f64 {
    let n = lay.n;
    let hs = lay.h;
    let steps = context + horizon - 1;
    let mut tape: Vec<Step> = Vec::with_capacity(steps);
    let mut h = vec![0.0; hs];
    let mut loss = 0.0;
    // Gradient w.r.t. the head output at each predicting step.
    let mut d_out: Vec<Vec<f64>> = Vec::with_capacity(horizon);

    for tau in 0..steps {
        let x = &rows[tau * n..(tau + 1) * n];
        let step = cell(p, lay, x, &h);
        h.clone_from(&step.h);
        if tau + 1 >= context {
            let target = &rows[(tau + 1) * n..(tau + 2) * n];
            let (mu, raw) = head(p, lay, &step.h, x);
            let mut d = vec![0.0; 2 * n];
            for j in 0..n {
                let sigma = softplus(raw[j]) + min_sigma;
                loss += nll(mu[j], sigma, target[j]);
                let diff = mu[j] - target[j];
                d[j] = diff / (sigma * sigma);
                let d_sigma = 1.0 / sigma - diff * diff / (sigma * sigma * sigma);
                d[n + j] = d_sigma * sigmoid(raw[j]);
            }
            d_out.push(d);
        }
        tape.push(step);
    }

    let Some(g) = grad else {
        return loss;
    };

    let v = &p[lay.v()];
    let head_in = lay.head_in();
    let mut dh_next = vec![0.0; hs];
    let mut head_input = vec![0.0; head_in];
    for tau in (0..steps).rev() {
        let step = &tape[tau];
        let x = &rows[tau * n..(tau + 1) * n];
        let mut dh = dh_next.clone();
        if tau + 1 >= context {
            let d = &d_out[tau + 1 - context];
            head_input[..hs].copy_from_slice(&step.h);
            head_input[hs..].copy_from_slice(x);
            outer_add(&mut g[lay.v()], d, &head_input);
            for (gc, dc) in g[lay.c()].iter_mut().zip(d) {
                *gc += dc;
            }
            // Only the hidden part of the head input carries gradient.
            for (o, row) in d.iter().zip(v.chunks_exact(head_in)) {
                for i in 0..hs {
                    dh[i] += o * row[i];
                }
            }
        }

        let mut dh_prev: Vec<f64> = (0..hs).map(|i| dh[i] * step.z[i]).collect();
        let da_z: Vec<f64> = (0..hs)
            .map(|i| dh[i] * (step.h_prev[i] - step.n[i]) * step.z[i] * (1.0 - step.z[i]))
            .collect();
        let da_n: Vec<f64> = (0..hs)
            .map(|i| dh[i] * (1.0 - step.z[i]) * (1.0 - step.n[i] * step.n[i]))
            .collect();

        outer_add(&mut g[lay.w(2)], &da_n, x);
        outer_add(&mut g[lay.u(2)], &da_n, &step.rh);
        add(&mut g[lay.b(2)], &da_n);
        let mut d_rh = vec![0.0; hs];
        matvec_t_add(&p[lay.u(2)], &da_n, &mut d_rh);
        let da_r: Vec<f64> = (0..hs)
            .map(|i| d_rh[i] * step.h_prev[i] * step.r[i] * (1.0 - step.r[i]))
            .collect();
        for i in 0..hs {
            dh_prev[i] += d_rh[i] * step.r[i];
        }

        outer_add(&mut g[lay.w(1)], &da_r, x);
        outer_add(&mut g[lay.u(1)], &da_r, &step.h_prev);
        add(&mut g[lay.b(1)], &da_r);
        matvec_t_add(&p[lay.u(1)], &da_r, &mut dh_prev);

        outer_add(&mut g[lay.w(0)], &da_z, x);
        outer_add(&mut g[lay.u(0)], &da_z, &step.h_prev);
        add(&mut g[lay.b(0)], &da_z);
        matvec_t_add(&p[lay.u(0)], &da_z, &mut dh_prev);

        dh_next = dh_prev;
    }
    loss
}

fn add(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_blocks_tile_the_vector() {
        let lay = Layout::new(3, 4);
        let mut ranges = vec![lay.v(), lay.c()];
        for g in 0..3 {
            ranges.extend([lay.w(g), lay.u(g), lay.b(g)]);
        }
        ranges.sort_by_key(|r| r.start);
        let mut at = 0;
        for r in ranges {
            assert_eq!(r.start, at);
            at = r.end;
        }
        assert_eq!(at, lay.len());
        assert_eq!(lay.len(), 3 * (12 + 16 + 4) + 6 * 7 + 6);
    }

    #[test]
    fn softplus_is_stable() {
        assert_eq!(softplus(1000.0), 1000.0);
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
        assert!(softplus(-1000.0) >= 0.0);
    }
}
