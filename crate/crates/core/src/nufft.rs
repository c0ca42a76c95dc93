//! 1-D nonuniform-frequency to uniform-grid transform.
//!
//! [`execute`](NufftPlan::execute) evaluates `q(l_i) = sum_n c_n exp(+j w_n l_i)`
//! on the uniform grid `l_i = l_0 + i * delta_l` for arbitrary real nodes
//! `w_n`. The fast path spreads each node onto an oversampled periodic grid
//! with an exponential-of-semicircle kernel, runs one FFT, and divides out
//! the kernel transform; [`direct_nudft`] is the exact O(N*M) reference the
//! fast path is tested against. The exponent sign is positive; callers fold
//! quadrature weights into the coefficients.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};
use thiserror::Error;

use crate::C64;

/// Default oversampling ratio of the internal fine grid.
pub const DEFAULT_SIGMA: f64 = 2.0;
/// Default kernel half-width in fine-grid cells.
pub const DEFAULT_HALF_WIDTH: usize = 12;

#[derive(Debug, Error)]
pub enum NufftError {
    #[error("node list is empty")]
    EmptyNodes,
    #[error("node {index} = {node} rad/m is outside the representable band |w| <= {max_abs} for delta_l = {delta_l}")]
    NodeOutOfBand {
        index: usize,
        node: f64,
        max_abs: f64,
        delta_l: f64,
    },
    #[error("invalid plan parameter: {0}")]
    BadParameter(String),
    #[error("kernel correction vanished at output cell {index}; plan parameters are unusable")]
    KernelCorrectionVanished { index: usize },
    #[error("coefficient count {got} does not match node count {want}")]
    LengthMismatch { got: usize, want: usize },
}

/// Exponential-of-semicircle spreading kernel, peak-normalized to 1.
#[inline]
fn es_kernel(z: f64, beta: f64) -> f64 {
    if z.abs() >= 1.0 {
        0.0
    } else {
        (beta * ((1.0 - z * z).sqrt() - 1.0)).exp()
    }
}

/// A reusable spreading plan for a fixed node set and output grid. Plans are
/// immutable and safe to share across threads; `execute` is pure.
pub struct NufftPlan {
    nodes: Vec<f64>,
    n_out: usize,
    delta_l: f64,
    l0: f64,
    sigma: f64,
    half_width: usize,
    m_grid: usize,
    support: usize,
    /// First fine-grid tap per node, already reduced modulo `m_grid`.
    base_idx: Vec<usize>,
    /// Kernel taps, `nodes.len() * support` row-major.
    weights: Vec<f64>,
    /// Per-node phase `exp(j (w l0 + w delta_l * H))` folding the grid origin
    /// and the mode centering into the coefficients.
    node_phase: Vec<C64>,
    /// Deconvolution factors per output cell, including the 2 pi / M scale.
    corr: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for NufftPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NufftPlan")
            .field("nodes", &self.nodes.len())
            .field("n_out", &self.n_out)
            .field("delta_l", &self.delta_l)
            .field("l0", &self.l0)
            .field("sigma", &self.sigma)
            .field("half_width", &self.half_width)
            .field("m_grid", &self.m_grid)
            .finish()
    }
}

/// Build a plan for `nodes` (rad per unit l) onto `n_out` output samples
/// spaced `delta_l` starting at `l0`.
pub fn plan(
    nodes: &[f64],
    n_out: usize,
    delta_l: f64,
    l0: f64,
    sigma: f64,
    half_width: usize,
) -> Result<NufftPlan, NufftError> {
    if nodes.is_empty() {
        return Err(NufftError::EmptyNodes);
    }
    if n_out < 2 {
        return Err(NufftError::BadParameter("n_out must be >= 2".into()));
    }
    if !(delta_l > 0.0) {
        return Err(NufftError::BadParameter("delta_l must be positive".into()));
    }
    if !(sigma >= 1.25) {
        return Err(NufftError::BadParameter("sigma must be >= 1.25".into()));
    }
    if !(2..=60).contains(&half_width) {
        return Err(NufftError::BadParameter(
            "half_width must be in 2..=60".into(),
        ));
    }
    let max_abs = PI / delta_l;
    for (i, &w) in nodes.iter().enumerate() {
        if !w.is_finite() || w.abs() > max_abs * (1.0 + 1e-12) {
            return Err(NufftError::NodeOutOfBand {
                index: i,
                node: w,
                max_abs,
                delta_l,
            });
        }
    }

    let support = 2 * half_width + 1;
    let m_grid = ((sigma * n_out as f64).ceil() as usize)
        .max(2 * support)
        .next_power_of_two();
    let h = 2.0 * PI / m_grid as f64;
    let a = half_width as f64 * h;
    let beta = 2.3 * half_width as f64;
    let half_modes = n_out / 2;

    let mut base_idx = Vec::with_capacity(nodes.len());
    let mut weights = Vec::with_capacity(nodes.len() * support);
    let mut node_phase = Vec::with_capacity(nodes.len());
    for &w in nodes {
        let phi = w * delta_l;
        let x = phi.rem_euclid(2.0 * PI);
        let center = (x / h).round() as i64;
        let base = center - half_width as i64;
        base_idx.push(base.rem_euclid(m_grid as i64) as usize);
        for t in 0..support {
            let u = (base + t as i64) as f64 * h - x;
            weights.push(es_kernel(u / a, beta));
        }
        let ph = w * l0 + phi * half_modes as f64;
        node_phase.push(C64::new(ph.cos(), ph.sin()));
    }

    // Kernel transform psi_hat(xi) = 2 * int_0^a es(u/a) cos(xi u) du by
    // composite Simpson; the cos factors advance by rotation as xi steps
    // through consecutive integers.
    const SEGMENTS: usize = 256;
    let du = a / SEGMENTS as f64;
    let mut weighted = [0.0f64; SEGMENTS + 1];
    let mut rot = [C64::new(0.0, 0.0); SEGMENTS + 1];
    let mut step = [C64::new(0.0, 0.0); SEGMENTS + 1];
    let xi_min = -(half_modes as f64);
    for s in 0..=SEGMENTS {
        let u = s as f64 * du;
        let simpson = if s == 0 || s == SEGMENTS {
            1.0
        } else if s % 2 == 1 {
            4.0
        } else {
            2.0
        };
        weighted[s] = simpson * du / 3.0 * es_kernel(u / a, beta);
        rot[s] = C64::new((xi_min * u).cos(), (xi_min * u).sin());
        step[s] = C64::new(u.cos(), u.sin());
    }
    let mut corr = Vec::with_capacity(n_out);
    for i in 0..n_out {
        let mut psi_hat = 0.0;
        for s in 0..=SEGMENTS {
            psi_hat += weighted[s] * rot[s].re;
            rot[s] *= step[s];
        }
        psi_hat *= 2.0;
        if !(psi_hat.is_finite() && psi_hat > 1e-300) {
            return Err(NufftError::KernelCorrectionVanished { index: i });
        }
        corr.push(2.0 * PI / (m_grid as f64 * psi_hat));
    }

    let fft = FftPlanner::<f64>::new().plan_fft_inverse(m_grid);

    Ok(NufftPlan {
        nodes: nodes.to_vec(),
        n_out,
        delta_l,
        l0,
        sigma,
        half_width,
        m_grid,
        support,
        base_idx,
        weights,
        node_phase,
        corr,
        fft,
    })
}

impl NufftPlan {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn output_len(&self) -> usize {
        self.n_out
    }

    /// Evaluate `sum_n c_n exp(+j w_n (l0 + i delta_l))` for all outputs.
    pub fn execute(&self, coefficients: &[C64]) -> Result<Vec<C64>, NufftError> {
        if coefficients.len() != self.nodes.len() {
            return Err(NufftError::LengthMismatch {
                got: coefficients.len(),
                want: self.nodes.len(),
            });
        }
        let mask = self.m_grid - 1;
        let mut fine = vec![C64::new(0.0, 0.0); self.m_grid];
        for (n, &c) in coefficients.iter().enumerate() {
            let cc = c * self.node_phase[n];
            let base = self.base_idx[n];
            let row = &self.weights[n * self.support..(n + 1) * self.support];
            for (t, &w) in row.iter().enumerate() {
                fine[(base + t) & mask] += cc * w;
            }
        }
        let mut scratch = vec![C64::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        self.fft.process_with_scratch(&mut fine, &mut scratch);

        let half_modes = self.n_out / 2;
        let mut out = Vec::with_capacity(self.n_out);
        for i in 0..self.n_out {
            let bin = (i + self.m_grid - half_modes) & mask;
            out.push(fine[bin] * self.corr[i]);
        }
        Ok(out)
    }
}

/// Exact naive evaluation of the same sum; the reference semantics for
/// [`NufftPlan::execute`] and the engine behind the interpolation-free
/// comparison reconstruction.
pub fn direct_nudft(
    nodes: &[f64],
    coefficients: &[C64],
    n_out: usize,
    delta_l: f64,
    l0: f64,
) -> Vec<C64> {
    assert_eq!(
        nodes.len(),
        coefficients.len(),
        "nodes and coefficients must pair up"
    );
    let mut out = vec![C64::new(0.0, 0.0); n_out];
    for (i, o) in out.iter_mut().enumerate() {
        let l = l0 + i as f64 * delta_l;
        let mut acc = C64::new(0.0, 0.0);
        for (&w, &c) in nodes.iter().zip(coefficients) {
            let ph = w * l;
            acc += c * C64::new(ph.cos(), ph.sin());
        }
        *o = acc;
    }
    out
}
