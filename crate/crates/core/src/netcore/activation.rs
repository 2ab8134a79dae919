use crate::tensor::DenseTensor;

/// Adaptive tanh activation with learnable sinusoidal harmonics:
///
/// `phi(x) = tanh(x) + sum_{k=1..K} a_k * n_s * sin(k * n_s * x)`
///
/// With all `a_k = 0` this is exactly `tanh`.
#[derive(Debug, Clone, PartialEq)]
pub struct RowdyActivation {
    pub scale: f64,
    pub coeffs: Vec<f64>,
}

pub const DEFAULT_HARMONICS: usize = 2;
pub const DEFAULT_SCALE: f64 = 10.0;

impl RowdyActivation {
    /// Zero-initialised coefficients, so the activation starts as plain `tanh`.
    pub fn new(harmonics: usize, scale: f64) -> Self {
        assert!(scale > 0.0, "rowdy scale must be positive");
        Self {
            scale,
            coeffs: vec![0.0; harmonics],
        }
    }

    pub fn harmonics(&self) -> usize {
        self.coeffs.len()
    }

    pub fn eval(&self, x: f64) -> f64 {
        eval_scalar(x, &self.coeffs, self.scale)
    }
}

impl Default for RowdyActivation {
    fn default() -> Self {
        Self::new(DEFAULT_HARMONICS, DEFAULT_SCALE)
    }
}

pub(crate) fn eval_scalar(x: f64, coeffs: &[f64], scale: f64) -> f64 {
    let mut y = x.tanh();
    if coeffs.is_empty() {
        return y;
    }
    let (s1, c1) = (scale * x).sin_cos();
    // sin((k+1)t) = 2 cos(t) sin(kt) - sin((k-1)t)
    let (mut s_prev, mut s_cur) = (0.0, s1);
    for &a in coeffs {
        y += a * scale * s_cur;
        let next = 2.0 * c1 * s_cur - s_prev;
        s_prev = s_cur;
        s_cur = next;
    }
    y
}

/// Element-wise application of the activation.
pub fn rowdy_forward(x: &DenseTensor, act: &RowdyActivation) -> DenseTensor {
    x.map(|v| act.eval(v))
}

/// Forward values plus everything the backward pass needs: `dphi/dx` and
/// `n_s sin(k n_s x)` for each harmonic.
pub(crate) struct RowdyEval {
    pub out: Vec<f64>,
    pub dydx: Vec<f64>,
    pub basis: Vec<Vec<f64>>,
}

pub(crate) fn rowdy_eval_with_grad(x: &[f64], coeffs: &[f64], scale: f64) -> RowdyEval {
    let n = x.len();
    let harmonics = coeffs.len();
    let mut out = Vec::with_capacity(n);
    let mut dydx = Vec::with_capacity(n);
    let mut basis: Vec<Vec<f64>> = (0..harmonics).map(|_| Vec::with_capacity(n)).collect();
    for &v in x {
        let t = v.tanh();
        let mut y = t;
        let mut d = 1.0 - t * t;
        if harmonics > 0 {
            let (s1, c1) = (scale * v).sin_cos();
            let (mut s_prev, mut c_prev) = (0.0, 1.0);
            let (mut s_cur, mut c_cur) = (s1, c1);
            for (k, (&a, b)) in coeffs.iter().zip(basis.iter_mut()).enumerate() {
                let kk = (k + 1) as f64;
                let term = scale * s_cur;
                b.push(term);
                y += a * term;
                d += a * scale * scale * kk * c_cur;
                let s_next = 2.0 * c1 * s_cur - s_prev;
                let c_next = 2.0 * c1 * c_cur - c_prev;
                s_prev = s_cur;
                c_prev = c_cur;
                s_cur = s_next;
                c_cur = c_next;
            }
        }
        out.push(y);
        dydx.push(d);
    }
    RowdyEval { out, dydx, basis }
}
