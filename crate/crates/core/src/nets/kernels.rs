//! Forward and reverse passes over a flat parameter vector.
//!
//! Flat layouts (row-major matrices):
//! - FNN: `W_f (h × dn) | b_f (h) | W_x (n × h) | b_x (n)`
//! - RNN: `W_f (h × (n+h)) | b_f (h) | W_g (h × (n+h)) | b_g (h) | W_x (n × h) | b_x (n) | g_init (h)`

use super::Arch;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Layout {
    pub arch: Arch,
    pub n: usize,
    pub h: usize,
    pub d: usize,
}

impl Layout {
    /// Width of the layer-input vector multiplied by `W_f`.
    pub fn f_in(&self) -> usize {
        match self.arch {
            Arch::Fnn => self.d * self.n,
            Arch::Rnn => self.n + self.h,
        }
    }

    pub fn w_f(&self) -> usize {
        0
    }

    pub fn b_f(&self) -> usize {
        self.h * self.f_in()
    }

    pub fn w_g(&self) -> usize {
        self.b_f() + self.h
    }

    pub fn b_g(&self) -> usize {
        self.w_g() + self.h * (self.n + self.h)
    }

    pub fn w_x(&self) -> usize {
        match self.arch {
            Arch::Fnn => self.b_f() + self.h,
            Arch::Rnn => self.b_g() + self.h,
        }
    }

    pub fn b_x(&self) -> usize {
        self.w_x() + self.n * self.h
    }

    pub fn g_init(&self) -> usize {
        self.b_x() + self.n
    }

    /// Trainable weights and biases, excluding the initial hidden state.
    pub fn param_count(&self) -> usize {
        self.g_init()
    }

    pub fn flat_len(&self) -> usize {
        match self.arch {
            Arch::Fnn => self.param_count(),
            Arch::Rnn => self.param_count() + self.h,
        }
    }
}

/// Per-sample buffers, reused across samples and epochs.
pub(crate) struct Scratch {
    /// Hidden states `g_0 .. g_{d-1}` for the RNN, each of length h.
    g: Vec<f64>,
    /// Layer input `x ⊕ g` (RNN) or the delay vector (FNN).
    z: Vec<f64>,
    f: Vec<f64>,
    out: Vec<f64>,
    dz: Vec<f64>,
    da: Vec<f64>,
    dg: Vec<f64>,
    e: Vec<f64>,
}

impl Scratch {
    pub fn new(l: &Layout) -> Self {
        Scratch {
            g: vec![0.0; l.d.max(1) * l.h],
            z: vec![0.0; l.f_in()],
            f: vec![0.0; l.h],
            out: vec![0.0; l.n],
            dz: vec![0.0; l.f_in()],
            da: vec![0.0; l.h],
            dg: vec![0.0; l.h],
            e: vec![0.0; l.n],
        }
    }

    pub fn output(&self) -> &[f64] {
        &self.out
    }

    /// RNN hidden state `g_k` from the last forward pass.
    pub fn hidden(&self, k: usize) -> &[f64] {
        let h = self.f.len();
        &self.g[k * h..(k + 1) * h]
    }
}

/// `out = tanh(W v + b)` for `W` of shape `rows × v.len()`.
#[inline]
fn dense_tanh(w: &[f64], b: &[f64], v: &[f64], out: &mut [f64]) {
    let cols = v.len();
    for (i, o) in out.iter_mut().enumerate() {
        let row = &w[i * cols..(i + 1) * cols];
        let mut acc = b[i];
        for (wi, vi) in row.iter().zip(v) {
            acc += wi * vi;
        }
        *o = acc.tanh();
    }
}

/// Lag `k` (0 = most recent) of a most-recent-first delay vector.
#[inline]
fn lag(inp: &[f64], n: usize, k: usize) -> &[f64] {
    &inp[k * n..(k + 1) * n]
}

/// Forward pass for one delay vector; the prediction is left in
/// `s.output()`.
pub(crate) fn forward(l: &Layout, p: &[f64], inp: &[f64], s: &mut Scratch) {
    let (n, h) = (l.n, l.h);
    match l.arch {
        Arch::Fnn => {
            s.z.copy_from_slice(inp);
        }
        Arch::Rnn => {
            let d = inp.len() / n;
            let w_g = &p[l.w_g()..l.b_g()];
            let b_g = &p[l.b_g()..l.b_g() + h];
            s.g[..h].copy_from_slice(&p[l.g_init()..l.g_init() + h]);
            // g_k = G(x_{t-d+k-1}, g_{k-1}); the oldest lag is index d-1.
            for k in 1..d {
                s.z[..n].copy_from_slice(lag(inp, n, d - k));
                s.z[n..].copy_from_slice(&s.g[(k - 1) * h..k * h]);
                dense_tanh(w_g, b_g, &s.z, &mut s.g[k * h..(k + 1) * h]);
            }
            s.z[..n].copy_from_slice(lag(inp, n, 0));
            s.z[n..].copy_from_slice(&s.g[(d - 1) * h..d * h]);
        }
    }
    let w_f = &p[l.w_f()..l.b_f()];
    let b_f = &p[l.b_f()..l.b_f() + h];
    dense_tanh(w_f, b_f, &s.z, &mut s.f);
    let w_x = &p[l.w_x()..l.b_x()];
    let b_x = &p[l.b_x()..l.b_x() + n];
    for i in 0..n {
        let mut acc = b_x[i];
        for j in 0..h {
            acc += w_x[i * h + j] * s.f[j];
        }
        s.out[i] = acc;
    }
}

/// Forward and reverse pass for one sample. Accumulates the gradient of
/// `||pred - target||^2` into `grad` and returns that squared error.
pub(crate) fn forward_backward(
    l: &Layout,
    p: &[f64],
    inp: &[f64],
    target: &[f64],
    grad: &mut [f64],
    s: &mut Scratch,
) -> f64 {
    forward(l, p, inp, s);
    let (n, h) = (l.n, l.h);
    let f_in = l.f_in();

    let mut sse = 0.0;
    for i in 0..n {
        let r = s.out[i] - target[i];
        sse += r * r;
        s.e[i] = 2.0 * r;
    }
    let e = &s.e;
    let w_x = l.w_x();
    let b_x = l.b_x();
    for i in 0..n {
        grad[b_x + i] += e[i];
        for j in 0..h {
            grad[w_x + i * h + j] += e[i] * s.f[j];
        }
    }
    // Through f = tanh(W_f z + b_f).
    for j in 0..h {
        let mut acc = 0.0;
        for i in 0..n {
            acc += p[w_x + i * h + j] * e[i];
        }
        s.da[j] = acc * (1.0 - s.f[j] * s.f[j]);
    }
    let w_f = l.w_f();
    let b_f = l.b_f();
    for j in 0..h {
        let da = s.da[j];
        grad[b_f + j] += da;
        let row = &mut grad[w_f + j * f_in..w_f + (j + 1) * f_in];
        for (g, zi) in row.iter_mut().zip(&s.z) {
            *g += da * zi;
        }
    }
    if l.arch == Arch::Fnn {
        return sse;
    }

    // dL/dg_{d-1} from the g-columns of W_f.
    let d = inp.len() / n;
    s.dz.iter_mut().for_each(|v| *v = 0.0);
    for j in 0..h {
        let da = s.da[j];
        let row = &p[w_f + j * f_in..w_f + (j + 1) * f_in];
        for (dz, w) in s.dz.iter_mut().zip(row) {
            *dz += da * w;
        }
    }
    s.dg.copy_from_slice(&s.dz[n..]);

    let w_g = l.w_g();
    let b_g = l.b_g();
    for k in (1..d).rev() {
        // g_k = tanh(W_g (x_{lag d-k} ⊕ g_{k-1}) + b_g)
        let gk = &s.g[k * h..(k + 1) * h];
        for j in 0..h {
            s.da[j] = s.dg[j] * (1.0 - gk[j] * gk[j]);
        }
        s.z[..n].copy_from_slice(lag(inp, n, d - k));
        s.z[n..].copy_from_slice(&s.g[(k - 1) * h..k * h]);
        s.dz.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..h {
            let da = s.da[j];
            grad[b_g + j] += da;
            let off = w_g + j * f_in;
            for c in 0..f_in {
                grad[off + c] += da * s.z[c];
                s.dz[c] += da * p[off + c];
            }
        }
        s.dg.copy_from_slice(&s.dz[n..]);
    }
    let g0 = l.g_init();
    for j in 0..h {
        grad[g0 + j] += s.dg[j];
    }
    sse
}
