//! Subframe Gram spectra, the MANOVA and Marchenko-Pastur reference laws,
//! empirical spectral histograms over block erasures, and KL divergence
//! between the two.

use rayon::prelude::*;
use serde::Serialize;

use crate::erasure::{subframe, EvalMode};
use crate::frames::Frame;
use crate::linalg::{hermitian_eigenvalues, CMat};
use crate::{Error, Result};

/// Eigenvalues below this are a hard numerical error; values in [-CLAMP, 0)
/// clamp to zero.
const EIG_CLAMP: f64 = 1e-10;

/// Floor for model bin probabilities inside the KL sum.
const KL_FLOOR: f64 = 1e-12;

/// Open space above the largest sample so the top histogram bin contains it.
const HIST_PAD: f64 = 1e-9;

/// Eigenvalues of the smaller-side Gram of an M x K subframe, ascending.
///
/// Uses the K x K Gram when K <= M, else the M x M operator; both sides share
/// their nonzero spectrum. Tiny negative eigenvalues (within -1e-10) clamp to
/// zero.
pub fn gram_spectrum(sub: &CMat) -> Result<Vec<f64>> {
    let (m, k) = (sub.nrows(), sub.ncols());
    let small = if k <= m { sub.gram() } else { sub.frame_operator() };
    let mut eigs = hermitian_eigenvalues(&small).map_err(|e| {
        Error::Numerical(format!("spectrum of {m}x{k} subframe Gram failed: {e}"))
    })?;
    for e in &mut eigs {
        if *e < 0.0 {
            if *e < -EIG_CLAMP {
                return Err(Error::Numerical(format!(
                    "subframe Gram has eigenvalue {e:.3e} below the -{EIG_CLAMP:.0e} clamp"
                )));
            }
            *e = 0.0;
        }
    }
    Ok(eigs)
}

/// Kind of limiting spectral law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Manova,
    MarchenkoPastur,
}

/// Atom a spectral law may carry on top of its continuous part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointMass {
    pub location: f64,
    pub weight: f64,
}

/// A reference spectral law: continuous density on `support` plus an optional
/// point mass. Continuous part and mass together integrate to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralModel {
    pub kind: ModelKind,
    pub beta: f64,
    /// Redundancy ratio M/N; zero for Marchenko-Pastur (its gamma-to-0 limit).
    pub gamma: f64,
    pub support: (f64, f64),
    pub point_mass: PointMass,
}

impl SpectralModel {
    /// MANOVA law with aspect beta = K/M and redundancy gamma = M/N.
    ///
    /// Describes pooled subframe spectra in the tall regime K <= M (beta <= 1);
    /// beyond it the law omits the rank-deficiency atom at zero.
    pub fn manova(beta: f64, gamma: f64) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidArgument(format!("MANOVA needs beta > 0, got {beta}")));
        }
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::InvalidArgument(format!("MANOVA needs 0 < gamma <= 1, got {gamma}")));
        }
        if beta * gamma > 1.0 {
            return Err(Error::InvalidArgument(format!(
                "MANOVA needs beta * gamma <= 1 (K <= N), got {}",
                beta * gamma
            )));
        }
        let a = (beta * (1.0 - gamma)).sqrt();
        let b = (1.0 - beta * gamma).sqrt();
        let weight = (1.0 + 1.0 / beta - 1.0 / (beta * gamma)).max(0.0);
        Ok(SpectralModel {
            kind: ModelKind::Manova,
            beta,
            gamma,
            support: ((a - b).powi(2), (a + b).powi(2)),
            point_mass: PointMass { location: 1.0 / gamma, weight },
        })
    }

    /// Marchenko-Pastur law with aspect beta.
    pub fn marchenko_pastur(beta: f64) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidArgument(format!("Marchenko-Pastur needs beta > 0, got {beta}")));
        }
        let root = beta.sqrt();
        let weight = (1.0 - 1.0 / beta).max(0.0);
        Ok(SpectralModel {
            kind: ModelKind::MarchenkoPastur,
            beta,
            gamma: 0.0,
            support: ((1.0 - root).powi(2), (1.0 + root).powi(2)),
            point_mass: PointMass { location: 0.0, weight },
        })
    }

    /// Continuous-part density at `lambda` (zero outside the support).
    pub fn density(&self, lambda: f64) -> f64 {
        match self.kind {
            ModelKind::Manova => manova_density(lambda, self.beta, self.gamma),
            ModelKind::MarchenkoPastur => mp_density(lambda, self.beta),
        }
    }

    /// Integral of g against the continuous part.
    ///
    /// Substituting lambda = lo + (hi - lo) sin^2(theta) removes the
    /// square-root endpoint singularities, then a fixed midpoint rule applies.
    pub fn integrate(&self, g: impl Fn(f64) -> f64) -> f64 {
        const PANELS: usize = 4096;
        let (lo, hi) = self.support;
        let span = hi - lo;
        if span <= 0.0 {
            return 0.0;
        }
        let h = std::f64::consts::FRAC_PI_2 / PANELS as f64;
        let mut sum = 0.0;
        for i in 0..PANELS {
            let theta = (i as f64 + 0.5) * h;
            let lambda = lo + span * theta.sin().powi(2);
            sum += g(lambda) * self.density(lambda) * span * (2.0 * theta).sin();
        }
        sum * h
    }

    /// Integral of g against the full law, point mass included.
    pub fn integrate_with_mass(&self, g: impl Fn(f64) -> f64) -> f64 {
        let mass = if self.point_mass.weight > 0.0 {
            self.point_mass.weight * g(self.point_mass.location)
        } else {
            0.0
        };
        self.integrate(&g) + mass
    }

    /// Total probability; one up to quadrature error.
    pub fn normalization(&self) -> f64 {
        self.integrate_with_mass(|_| 1.0)
    }

    /// Probability the law assigns to a histogram bin [left, right), by a
    /// 32-point composite midpoint rule plus the point mass if it falls in
    /// the bin (right edge inclusive only for the final bin).
    pub fn bin_probability(&self, left: f64, right: f64, inclusive_right: bool) -> f64 {
        const POINTS: usize = 32;
        let width = right - left;
        if width <= 0.0 {
            return 0.0;
        }
        let h = width / POINTS as f64;
        let mut q = 0.0;
        for i in 0..POINTS {
            q += self.density(left + (i as f64 + 0.5) * h);
        }
        q *= h;
        let loc = self.point_mass.location;
        let inside = loc >= left && (loc < right || (inclusive_right && loc <= right));
        if inside {
            q += self.point_mass.weight;
        }
        q
    }
}

/// MANOVA continuous density per its closed form; zero off-support. The
/// law's point mass is reported separately by [`SpectralModel`].
pub fn manova_density(lambda: f64, beta: f64, gamma: f64) -> f64 {
    debug_assert!(beta > 0.0 && gamma > 0.0 && gamma <= 1.0 && beta * gamma <= 1.0);
    let a = (beta * (1.0 - gamma)).sqrt();
    let b = (1.0 - beta * gamma).sqrt();
    let lo = (a - b).powi(2);
    let hi = (a + b).powi(2);
    if lambda <= lo || lambda >= hi {
        return 0.0;
    }
    ((hi - lambda) * (lambda - lo)).sqrt()
        / (2.0 * std::f64::consts::PI * beta * lambda * (1.0 - gamma * lambda))
}

/// Marchenko-Pastur continuous density; the gamma-to-0 limit of the MANOVA
/// law. Point mass at zero (when beta > 1) reported via [`SpectralModel`].
pub fn mp_density(lambda: f64, beta: f64) -> f64 {
    debug_assert!(beta > 0.0);
    let root = beta.sqrt();
    let lo = (1.0 - root).powi(2);
    let hi = (1.0 + root).powi(2);
    if lambda <= lo || lambda >= hi {
        return 0.0;
    }
    ((hi - lambda) * (lambda - lo)).sqrt() / (2.0 * std::f64::consts::PI * beta * lambda)
}

/// Equal-width histogram on [0, upper] whose masses sum to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    /// bins + 1 edges, edges[0] = 0.
    pub edges: Vec<f64>,
    pub masses: Vec<f64>,
}

impl Histogram {
    /// Bin nonnegative samples into `bins` equal-width bins on
    /// [0, max(upper_hint, max sample + pad)].
    pub fn from_samples(samples: &[f64], bins: usize, upper_hint: Option<f64>) -> Result<Histogram> {
        if bins == 0 {
            return Err(Error::InvalidArgument("histogram needs at least one bin".into()));
        }
        if samples.is_empty() {
            return Err(Error::InvalidArgument("histogram needs at least one sample".into()));
        }
        let mut max = 0.0f64;
        for &s in samples {
            if s < 0.0 || !s.is_finite() {
                return Err(Error::InvalidArgument(format!("histogram sample {s} is not a nonnegative real")));
            }
            max = max.max(s);
        }
        let upper = (max + HIST_PAD).max(upper_hint.unwrap_or(0.0));
        let width = upper / bins as f64;
        let mut counts = vec![0usize; bins];
        for &s in samples {
            let idx = ((s / width) as usize).min(bins - 1);
            counts[idx] += 1;
        }
        let total = samples.len() as f64;
        Ok(Histogram {
            edges: (0..=bins).map(|i| i as f64 * width).collect(),
            masses: counts.into_iter().map(|c| c as f64 / total).collect(),
        })
    }

    pub fn bins(&self) -> usize {
        self.masses.len()
    }
}

/// Pooled subframe eigenvalues over erasure selections, with a histogram.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalSpectrum {
    /// Eigenvalues in selection-enumeration order, ascending within each
    /// selection.
    pub eigenvalues: Vec<f64>,
    pub selections: usize,
    pub histogram: Histogram,
}

/// Pool [`gram_spectrum`] over the mode's selections with equal weight per
/// selection; histogram spans [0, largest eigenvalue + pad].
///
/// Selections are processed as a parallel map; eigenvalues are merged in
/// selection-enumeration order regardless of completion order.
pub fn empirical_spectrum(frame: &Frame, mode: &EvalMode, bins: usize) -> Result<EmpiricalSpectrum> {
    let selections = mode.selections(frame.blocks())?;
    let per_selection: Vec<Result<Vec<f64>>> = selections
        .par_iter()
        .enumerate()
        .map(|(idx, sel)| {
            let sub = subframe(frame, sel)?;
            gram_spectrum(&sub).map_err(|e| {
                Error::Numerical(format!("selection #{idx} (blocks {:?}): {e}", sel.active()))
            })
        })
        .collect();
    let mut eigenvalues = Vec::new();
    for eigs in per_selection {
        eigenvalues.extend(eigs?);
    }
    let histogram = Histogram::from_samples(&eigenvalues, bins, None)?;
    Ok(EmpiricalSpectrum { eigenvalues, selections: selections.len(), histogram })
}

impl EmpiricalSpectrum {
    /// Same pooled eigenvalues under a new binning; `upper_hint` extends the
    /// range (for aligning with a model's support).
    pub fn rebinned(&self, bins: usize, upper_hint: Option<f64>) -> Result<EmpiricalSpectrum> {
        Ok(EmpiricalSpectrum {
            eigenvalues: self.eigenvalues.clone(),
            selections: self.selections,
            histogram: Histogram::from_samples(&self.eigenvalues, bins, upper_hint)?,
        })
    }
}

/// KL divergence between two discrete mass vectors over the same bins;
/// natural log, model probabilities floored at 1e-12.
pub fn kl_divergence_discrete(empirical: &[f64], model: &[f64]) -> f64 {
    debug_assert_eq!(empirical.len(), model.len());
    let mut kl = 0.0;
    for (&m, &q) in empirical.iter().zip(model) {
        if m > 0.0 {
            kl += m * (m / q.max(KL_FLOOR)).ln();
        }
    }
    kl.max(0.0)
}

/// D(empirical || model) over the empirical histogram's bins, the model side
/// integrated bin by bin.
pub fn kl_divergence(empirical: &EmpiricalSpectrum, model: &SpectralModel) -> f64 {
    let h = &empirical.histogram;
    let bins = h.bins();
    let q: Vec<f64> = (0..bins)
        .map(|b| model.bin_probability(h.edges[b], h.edges[b + 1], b == bins - 1))
        .collect();
    kl_divergence_discrete(&h.masses, &q)
}
