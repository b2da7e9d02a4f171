//! Coif1 discrete wavelet transform: cascaded two-channel filtering with
//! dyadic downsampling, half-sample symmetric boundary extension, and an
//! exact inverse.
//!
//! The Coif1 scaling filter has the closed form
//! (sqrt(2)/32) * [sqrt(7)-3, 1-sqrt(7), 14-2*sqrt(7), 14+2*sqrt(7),
//! 5+sqrt(7), 1-sqrt(7)], which sums to sqrt(2) and has unit energy to
//! machine precision. The high-pass filter is its quadrature mirror.

use crate::error::{DspError, DspResult};

pub const COIF1_LEN: usize = 6;

/// Analysis filter pair plus decomposition depth.
#[derive(Debug, Clone)]
pub struct WaveletSpec {
    pub family: String,
    /// Low-pass (scaling) taps.
    pub h: Vec<f64>,
    /// High-pass (wavelet) taps, quadrature mirror of `h`.
    pub g: Vec<f64>,
    pub levels: usize,
}

impl WaveletSpec {
    pub fn coif1(levels: usize) -> Self {
        let s7 = 7f64.sqrt();
        let c = 2f64.sqrt() / 32.0;
        let h = vec![
            c * (s7 - 3.0),
            c * (1.0 - s7),
            c * (14.0 - 2.0 * s7),
            c * (14.0 + 2.0 * s7),
            c * (5.0 + s7),
            c * (1.0 - s7),
        ];
        let g = quadrature_mirror(&h);
        WaveletSpec {
            family: "coif1".into(),
            h,
            g,
            levels,
        }
    }

    pub fn filter_len(&self) -> usize {
        self.h.len()
    }
}

/// g[m] = (-1)^m h[L-1-m]
pub fn quadrature_mirror(h: &[f64]) -> Vec<f64> {
    let l = h.len();
    (0..l)
        .map(|m| {
            let v = h[l - 1 - m];
            if m % 2 == 0 {
                v
            } else {
                -v
            }
        })
        .collect()
}

/// Multi-level coefficient pyramid. `details[0]` is the finest scale.
#[derive(Debug, Clone)]
pub struct WaveletPyramid {
    pub details: Vec<Vec<f64>>,
    pub approx: Vec<f64>,
    /// Input length at each level, needed for exact inversion.
    level_input_lens: Vec<usize>,
}

impl WaveletPyramid {
    pub fn levels(&self) -> usize {
        self.details.len()
    }
}

/// Half-sample symmetric extension by `pad` samples on each side:
/// x1 x0 | x0 x1 ... x(n-1) | x(n-1) x(n-2).
fn sym_extend(x: &[f64], pad: usize) -> Vec<f64> {
    let n = x.len();
    let mut e = Vec::with_capacity(n + 2 * pad);
    for i in 0..pad {
        e.push(x[pad - 1 - i]);
    }
    e.extend_from_slice(x);
    for i in 0..pad {
        e.push(x[n - 1 - i]);
    }
    e
}

/// One analysis level. Output length is floor((n + L) / 2) per band; the
/// extra boundary coefficients beyond n/2 are what make symmetric-mode
/// reconstruction exact.
pub fn dwt_single(signal: &[f64], h: &[f64], g: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = signal.len();
    let l = h.len();
    debug_assert!(n >= l, "caller must validate signal length");
    let ext = sym_extend(signal, l - 1);
    let out_len = (n + l) / 2;
    let mut approx = vec![0.0; out_len];
    let mut detail = vec![0.0; out_len];
    for k in 0..out_len {
        let window = &ext[2 * k..2 * k + l];
        let mut sa = 0.0;
        let mut sd = 0.0;
        for m in 0..l {
            sa += h[m] * window[m];
            sd += g[m] * window[m];
        }
        approx[k] = sa;
        detail[k] = sd;
    }
    (approx, detail)
}

/// Exact inverse of `dwt_single` for the original length `n`.
pub fn idwt_single(approx: &[f64], detail: &[f64], h: &[f64], g: &[f64], n: usize) -> Vec<f64> {
    let l = h.len();
    let la = approx.len();
    let mut x = vec![0.0; n];
    for (i, out) in x.iter_mut().enumerate() {
        let j = i + l - 1;
        let kmin = (j + 2).saturating_sub(l) / 2;
        let kmax = (j / 2).min(la - 1);
        let mut s = 0.0;
        for k in kmin..=kmax {
            let m = j - 2 * k;
            s += approx[k] * h[m] + detail[k] * g[m];
        }
        *out = s;
    }
    x
}

/// Deepest meaningful decomposition for a signal of length `n`:
/// floor(log2(n / (filter_len - 1))).
pub fn max_levels(n: usize, filter_len: usize) -> usize {
    if n < filter_len - 1 {
        return 0;
    }
    ((n as f64) / (filter_len - 1) as f64).log2().floor() as usize
}

/// Full multi-level analysis.
pub fn dwt_analyze(signal: &[f64], spec: &WaveletSpec) -> DspResult<WaveletPyramid> {
    let l = spec.filter_len();
    let allowed = max_levels(signal.len(), l);
    if spec.levels > allowed {
        return Err(DspError::Config(format!(
            "{} decomposition levels too deep for signal of {} samples \
             (at most {} with a {}-tap filter)",
            spec.levels,
            signal.len(),
            allowed,
            l
        )));
    }
    let mut current = signal.to_vec();
    let mut details = Vec::with_capacity(spec.levels);
    let mut level_input_lens = Vec::with_capacity(spec.levels);
    for _ in 0..spec.levels {
        debug_assert!(current.len() >= l);
        level_input_lens.push(current.len());
        let (a, d) = dwt_single(&current, &spec.h, &spec.g);
        details.push(d);
        current = a;
    }
    Ok(WaveletPyramid {
        details,
        approx: current,
        level_input_lens,
    })
}

/// Full multi-level synthesis; exact inverse of `dwt_analyze`.
pub fn dwt_synthesize(pyramid: &WaveletPyramid, spec: &WaveletSpec) -> Vec<f64> {
    let mut current = pyramid.approx.clone();
    for level in (0..pyramid.details.len()).rev() {
        let n = pyramid.level_input_lens[level];
        current = idwt_single(&current, &pyramid.details[level], &spec.h, &spec.g, n);
    }
    current
}
