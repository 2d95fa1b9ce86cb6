//! Performance functionals over block erasures: average capacity and its
//! orthogonality bound, capacity outage, the space-time-coding error-bound
//! average, and block-correlation structure metrics.

use rayon::prelude::*;
use serde::Serialize;

use crate::erasure::{subframe, EvalMode, Selection};
use crate::frames::{squared_correlation_matrix, welch_bounds, Frame};
use crate::spectra::gram_spectrum;
use crate::{Error, Result};

const LN_2: f64 = std::f64::consts::LN_2;

/// Channel signal-to-noise ratio, stored linear.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelParams {
    pub snr_linear: f64,
}

impl ChannelParams {
    pub fn from_linear(snr_linear: f64) -> Result<Self> {
        if !(snr_linear > 0.0) || !snr_linear.is_finite() {
            return Err(Error::InvalidArgument(format!("SNR must be positive, got {snr_linear}")));
        }
        Ok(ChannelParams { snr_linear })
    }

    pub fn from_db(snr_db: f64) -> Result<Self> {
        Self::from_linear(10f64.powf(snr_db / 10.0))
    }

    pub fn snr_db(&self) -> f64 {
        10.0 * self.snr_linear.log10()
    }
}

/// Capacity of one erasure realization: sum over subframe Gram eigenvalues
/// of log2(1 + SNR * lambda), in bits per channel use.
///
/// Eigenvalues in [-1e-8, 0) count as zero; anything lower is rejected.
pub fn instantaneous_capacity(eigenvalues: &[f64], channel: &ChannelParams) -> Result<f64> {
    let mut bits = 0.0;
    for &e in eigenvalues {
        if e < -1e-8 {
            return Err(Error::InvalidArgument(format!(
                "capacity needs nonnegative eigenvalues, got {e:.3e}"
            )));
        }
        if e > 0.0 {
            bits += (channel.snr_linear * e).ln_1p() / LN_2;
        }
    }
    Ok(bits)
}

/// K log2(1 + SNR): capacity if every surviving subframe were orthogonal.
pub fn capacity_orthogonality_bound(k: usize, channel: &ChannelParams) -> f64 {
    k as f64 * channel.snr_linear.ln_1p() / LN_2
}

/// Average capacity over erasure selections plus per-selection detail.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityReport {
    pub mean: f64,
    pub orthogonality_bound: f64,
    pub per_selection: Vec<(Selection, f64)>,
}

/// Mean of [`instantaneous_capacity`] over the mode's selections.
///
/// K > M is permitted (the selection Gram is then rank deficient and the
/// zero eigenvalues simply contribute nothing).
pub fn average_capacity(frame: &Frame, channel: &ChannelParams, mode: &EvalMode) -> Result<CapacityReport> {
    let selections = mode.selections(frame.blocks())?;
    if selections.is_empty() {
        return Err(Error::InvalidArgument("no selections to average over".into()));
    }
    // Parallel map, then an ordered serial reduction: the sum is taken in
    // selection-enumeration order so results are bit-reproducible.
    let computed: Vec<Result<(Selection, f64)>> = selections
        .into_par_iter()
        .map(|sel| {
            let eigs = gram_spectrum(&subframe(frame, &sel)?)?;
            let c = instantaneous_capacity(&eigs, channel)?;
            Ok((sel, c))
        })
        .collect();
    let mut per_selection = Vec::with_capacity(computed.len());
    let mut total = 0.0;
    for item in computed {
        let (sel, c) = item?;
        total += c;
        per_selection.push((sel, c));
    }
    Ok(CapacityReport {
        mean: total / per_selection.len() as f64,
        orthogonality_bound: capacity_orthogonality_bound(frame.blocks().active_columns(), channel),
        per_selection,
    })
}

/// Probability (selection-weighted) that capacity falls below
/// `rate_fraction` times the mean.
pub fn capacity_outage(report: &CapacityReport, rate_fraction: f64) -> Result<f64> {
    if !(rate_fraction > 0.0 && rate_fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "rate fraction must be in (0, 1], got {rate_fraction}"
        )));
    }
    if report.per_selection.is_empty() {
        return Err(Error::InvalidArgument("outage needs per-selection capacities".into()));
    }
    let threshold = rate_fraction * report.mean;
    let below = report.per_selection.iter().filter(|(_, c)| *c < threshold).count();
    Ok(below as f64 / report.per_selection.len() as f64)
}

/// Averaged pairwise-error upper bound and its orthogonality floor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StcReport {
    pub bound_mean: f64,
    pub orthogonality_bound: f64,
    pub per_selection: Vec<(Selection, f64)>,
}

/// Mean over selections of prod_k (1 + (SNR/4) lambda_k)^-1 with lambda_k the
/// M eigenvalues of the selection's M x M Gram; log-domain throughout.
///
/// Requires K >= M so the M x M Gram can be full rank.
pub fn stc_error_bound(frame: &Frame, channel: &ChannelParams, mode: &EvalMode) -> Result<StcReport> {
    let m = frame.m();
    let k = frame.blocks().active_columns();
    if k < m {
        return Err(Error::Validation(format!(
            "the error bound needs M <= K, violated by M = {m}, K = {k}"
        )));
    }
    let quarter_snr = channel.snr_linear / 4.0;
    let selections = mode.selections(frame.blocks())?;
    if selections.is_empty() {
        return Err(Error::InvalidArgument("no selections to average over".into()));
    }
    let computed: Vec<Result<(Selection, f64)>> = selections
        .into_par_iter()
        .map(|sel| {
            let eigs = gram_spectrum(&subframe(frame, &sel)?)?;
            debug_assert_eq!(eigs.len(), m);
            let ln_term: f64 = -eigs.iter().map(|e| (quarter_snr * e).ln_1p()).sum::<f64>();
            Ok((sel, ln_term.exp()))
        })
        .collect();
    let mut per_selection = Vec::with_capacity(computed.len());
    let mut total = 0.0;
    for item in computed {
        let (sel, term) = item?;
        total += term;
        per_selection.push((sel, term));
    }
    Ok(StcReport {
        bound_mean: total / per_selection.len() as f64,
        orthogonality_bound: (-(m as f64) * quarter_snr.ln_1p()).exp(),
        per_selection,
    })
}

/// Frobenius distance between the diagonal (intra-block) parts of the
/// squared-correlation matrix and the identity: zero iff every block is an
/// orthonormal set.
pub fn intra_block_identity_distance(frame: &Frame) -> f64 {
    let corr = squared_correlation_matrix(frame);
    let nv = frame.blocks().block_size();
    let mut sum = 0.0;
    for g in 0..frame.blocks().num_blocks() {
        for a in 0..nv {
            for b in 0..nv {
                let (n, k) = (g * nv + a, g * nv + b);
                let target = if a == b { 1.0 } else { 0.0 };
                sum += (corr[(n, k)] - target).powi(2);
            }
        }
    }
    sum.sqrt()
}

/// Inter-block squared-correlation level that balances zero intra-block
/// correlation against the average Welch bound.
pub fn desired_epsilon(n: usize, m: usize, n_b: usize) -> Result<f64> {
    if n_b == 0 || n % n_b != 0 {
        return Err(Error::InvalidArgument(format!("N = {n} must be divisible by N_B = {n_b}")));
    }
    if m >= n {
        return Err(Error::InvalidArgument(format!("need M < N, got M = {m}, N = {n}")));
    }
    let n_v = n / n_b;
    let eps_wb = welch_bounds(n, m)?.epsilon_wb;
    if n_v == 1 {
        // No intra-block pairs exist to trade against.
        return Ok(eps_wb);
    }
    if n_b < 2 {
        return Err(Error::InvalidArgument("a single block leaves no inter-block pairs".into()));
    }
    Ok((1.0 + (n_v - 1) as f64 / (n_v * (n_b - 1)) as f64) * eps_wb)
}

/// How far a frame sits from the ideal block structure: intra-block
/// correlations at zero, inter-block at the desired epsilon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StructureDeviation {
    pub intra_rms: f64,
    pub inter_rms_error: f64,
}

pub fn desired_structure_deviation(frame: &Frame) -> Result<StructureDeviation> {
    let corr = squared_correlation_matrix(frame);
    let model = frame.blocks();
    let (n, nv, nb) = (frame.n(), model.block_size(), model.num_blocks());
    let eps = desired_epsilon(n, frame.m(), nb)?;
    let mut intra = (0.0, 0usize);
    let mut inter = (0.0, 0usize);
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            if a / nv == b / nv {
                intra = (intra.0 + corr[(a, b)].powi(2), intra.1 + 1);
            } else {
                inter = (inter.0 + (corr[(a, b)] - eps).powi(2), inter.1 + 1);
            }
        }
    }
    let rms = |(s, c): (f64, usize)| if c == 0 { 0.0 } else { (s / c as f64).sqrt() };
    Ok(StructureDeviation { intra_rms: rms(intra), inter_rms_error: rms(inter) })
}
