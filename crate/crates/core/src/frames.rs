//! Frames built by selecting rows of a DFT or Hadamard base and permuting
//! columns, plus the combinatorial structure behind them: difference sets,
//! squared-correlation matrices, Welch bounds, and tightness reports.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::erasure::BlockModel;
use crate::linalg::{hermitian_eigenvalues, CMat};
use crate::{Error, Result};

/// Abelian group a difference set lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    /// Z_N with subtraction mod N.
    Cyclic,
    /// GF(2)^L with XOR; order must be a power of two.
    Binary,
}

/// Unitary base family a frame selects its rows from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Base {
    Dft,
    Hadamard,
}

impl Base {
    /// The group whose difference sets make row selections of this base
    /// equiangular.
    pub fn natural_group(self) -> Group {
        match self {
            Base::Dft => Group::Cyclic,
            Base::Hadamard => Group::Binary,
        }
    }
}

/// Candidate difference set: M elements of a group of order N.
///
/// `lambda` is the claimed multiplicity (every nonzero group element should
/// arise exactly that often as a difference of members); `None` marks sets
/// that do not claim exactness, such as the almost-difference sets used at
/// sizes where no exact set exists. Claims are checked by
/// [`verify_difference_set`], not at construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DifferenceSet {
    pub group: Group,
    pub order: usize,
    pub elements: Vec<usize>,
    pub lambda: Option<usize>,
}

impl DifferenceSet {
    /// Structural validation only: distinct in-range elements, power-of-two
    /// order for binary groups. Elements are stored sorted.
    pub fn new(group: Group, order: usize, mut elements: Vec<usize>, lambda: Option<usize>) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidArgument("group order must be positive".into()));
        }
        if group == Group::Binary && !order.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "binary group order must be a power of two, got {order}"
            )));
        }
        elements.sort_unstable();
        if elements.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("difference set elements must be distinct".into()));
        }
        if let Some(&last) = elements.last() {
            if last >= order {
                return Err(Error::InvalidArgument(format!(
                    "element {last} out of range for group of order {order}"
                )));
            }
        }
        Ok(DifferenceSet { group, order, elements, lambda })
    }

    pub fn size(&self) -> usize {
        self.elements.len()
    }

    /// Group difference of two elements (subtraction mod N or XOR).
    pub fn difference(&self, a: usize, b: usize) -> usize {
        match self.group {
            Group::Cyclic => (a + self.order - b) % self.order,
            Group::Binary => a ^ b,
        }
    }
}

/// Outcome of brute-force difference counting over all ordered pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DifferenceSetReport {
    pub is_difference_set: bool,
    /// Common multiplicity of all nonzero differences, when uniform.
    pub lambda: Option<usize>,
    /// `multiplicities[d]` counts ordered pairs with difference d; index 0 unused.
    pub multiplicities: Vec<usize>,
    /// Fewer than two elements leaves nothing to check.
    pub degenerate: bool,
}

/// Count every ordered-pair difference and test whether the set is a
/// difference set: uniform multiplicity lambda with M(M-1) = lambda (N-1).
pub fn verify_difference_set(candidate: &DifferenceSet) -> DifferenceSetReport {
    let n = candidate.order;
    let m = candidate.size();
    let mut multiplicities = vec![0usize; n];
    for &a in &candidate.elements {
        for &b in &candidate.elements {
            if a != b {
                multiplicities[candidate.difference(a, b)] += 1;
            }
        }
    }
    let uniform = multiplicities[1..].windows(2).all(|w| w[0] == w[1]);
    let lambda = if uniform {
        Some(if n > 1 { multiplicities[1] } else { 0 })
    } else {
        None
    };
    // lambda = M(M-1)/(N-1) checked multiplicatively to avoid division.
    let is_difference_set = match lambda {
        Some(l) => m * m.saturating_sub(1) == l * (n - 1),
        None => false,
    };
    DifferenceSetReport { is_difference_set, lambda, multiplicities, degenerate: m < 2 }
}

/// N x N unitary base matrix.
///
/// DFT entry (s, t) is exp(-2 pi i s t / N) / sqrt(N). Hadamard (Sylvester
/// order) entry is (-1)^popcount(s AND t) / sqrt(N) and requires N = 2^L.
pub fn build_base_matrix(base: Base, n: usize) -> Result<CMat> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("base matrix needs N >= 2, got {n}")));
    }
    match base {
        Base::Dft => {
            let scale = 1.0 / (n as f64).sqrt();
            Ok(CMat::from_fn(n, n, |s, t| {
                let phase = -std::f64::consts::TAU * ((s * t) % n) as f64 / n as f64;
                Complex64::from_polar(scale, phase)
            }))
        }
        Base::Hadamard => {
            if !n.is_power_of_two() {
                return Err(Error::InvalidArgument(format!(
                    "Hadamard base needs a power-of-two size, got {n}"
                )));
            }
            let scale = 1.0 / (n as f64).sqrt();
            Ok(CMat::from_fn(n, n, |s, t| {
                if (s & t).count_ones() % 2 == 0 {
                    Complex64::new(scale, 0.0)
                } else {
                    Complex64::new(-scale, 0.0)
                }
            }))
        }
    }
}

/// Recipe for a frame: which base rows to keep and how to rearrange columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameSpec {
    pub base: Base,
    /// Row indices into the base matrix (the set S), distinct, sorted.
    pub rows: Vec<usize>,
    /// Column permutation: `perm[j]` is the base column placed at position j.
    pub perm: Vec<usize>,
    pub blocks: BlockModel,
}

impl FrameSpec {
    pub fn new(base: Base, rows: Vec<usize>, perm: Vec<usize>, blocks: BlockModel) -> Result<Self> {
        let spec = FrameSpec { base, rows, perm, blocks };
        spec.validate()?;
        Ok(spec)
    }

    /// Identity permutation spec (the canonical column order).
    pub fn canonical(base: Base, rows: Vec<usize>, blocks: BlockModel) -> Result<Self> {
        let n = blocks.total_columns();
        Self::new(base, rows, (0..n).collect(), blocks)
    }

    pub fn n(&self) -> usize {
        self.blocks.total_columns()
    }

    pub fn m(&self) -> usize {
        self.rows.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        let m = self.rows.len();
        if m == 0 || m >= n {
            return Err(Error::Validation(format!(
                "row set size {m} must satisfy 0 < M < N = {n}"
            )));
        }
        let mut seen = vec![false; n];
        for &r in &self.rows {
            if r >= n {
                return Err(Error::Validation(format!("row index {r} out of range for N = {n}")));
            }
            if std::mem::replace(&mut seen[r], true) {
                return Err(Error::Validation(format!("duplicate row index {r}")));
            }
        }
        if self.perm.len() != n {
            return Err(Error::Validation(format!(
                "permutation length {} does not match N = {n}",
                self.perm.len()
            )));
        }
        seen.iter_mut().for_each(|s| *s = false);
        for &p in &self.perm {
            if p >= n || std::mem::replace(&mut seen[p], true) {
                return Err(Error::Validation(format!(
                    "permutation is not a bijection on 0..{n} (offending entry {p})"
                )));
            }
        }
        if self.base == Base::Hadamard && !n.is_power_of_two() {
            return Err(Error::Validation(format!(
                "Hadamard base needs a power-of-two N, got {n}"
            )));
        }
        Ok(())
    }
}

/// An M x N frame with unit-norm columns, partitioned into blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    entries: CMat,
    spec: Option<FrameSpec>,
    blocks: BlockModel,
}

impl Frame {
    /// Wrap an explicit matrix; checks unit column norms (1e-10) and that the
    /// column count matches the block model.
    pub fn new(entries: CMat, spec: Option<FrameSpec>, blocks: BlockModel) -> Result<Self> {
        if entries.ncols() != blocks.total_columns() {
            return Err(Error::Validation(format!(
                "frame has {} columns but block model implies {}",
                entries.ncols(),
                blocks.total_columns()
            )));
        }
        for j in 0..entries.ncols() {
            let norm_sq: f64 = (0..entries.nrows()).map(|i| entries[(i, j)].norm_sqr()).sum();
            if (norm_sq - 1.0).abs() > 1e-10 {
                return Err(Error::Validation(format!(
                    "column {j} has squared norm {norm_sq}, expected 1"
                )));
            }
        }
        Ok(Frame { entries, spec, blocks })
    }

    pub fn entries(&self) -> &CMat {
        &self.entries
    }

    pub fn spec(&self) -> Option<&FrameSpec> {
        self.spec.as_ref()
    }

    pub fn blocks(&self) -> &BlockModel {
        &self.blocks
    }

    pub fn m(&self) -> usize {
        self.entries.nrows()
    }

    pub fn n(&self) -> usize {
        self.entries.ncols()
    }

    /// Full N x N Gram matrix F^H F.
    pub fn gram(&self) -> CMat {
        self.entries.gram()
    }
}

/// Build F: keep `spec.rows` of the base, reorder columns by `spec.perm`,
/// rescale by sqrt(N/M) so every column has unit norm.
pub fn construct_frame(spec: &FrameSpec) -> Result<Frame> {
    spec.validate()?;
    let n = spec.n();
    let m = spec.m();
    let w = build_base_matrix(spec.base, n)?;
    let scale = (n as f64 / m as f64).sqrt();
    let entries = CMat::from_fn(m, n, |i, j| w[(spec.rows[i], spec.perm[j])] * scale);
    Frame::new(entries, Some(spec.clone()), spec.blocks.clone())
}

/// N x N matrix of squared correlation magnitudes |<f_n, f_k>|^2.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    n: usize,
    values: Vec<f64>,
}

impl CorrelationMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mean_off_diagonal(&self) -> f64 {
        let n = self.n;
        if n < 2 {
            return 0.0;
        }
        let mut sum = 0.0;
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    sum += self[(a, b)];
                }
            }
        }
        sum / (n * (n - 1)) as f64
    }

    pub fn max_off_diagonal(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    worst = worst.max(self[(a, b)]);
                }
            }
        }
        worst
    }
}

impl std::ops::Index<(usize, usize)> for CorrelationMatrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.values[i * self.n + j]
    }
}

/// Squared correlations of the frame's columns (elementwise |Gram|^2).
pub fn squared_correlation_matrix(frame: &Frame) -> CorrelationMatrix {
    let g = frame.gram();
    let n = frame.n();
    let mut values = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            values.push(g[(a, b)].norm_sqr());
        }
    }
    CorrelationMatrix { n, values }
}

/// Welch bounds for N unit vectors in M dimensions; both the bound on the
/// average squared correlation and the bound on the maximum equal
/// (N - M) / ((N - 1) M).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchBounds {
    pub average_bound: f64,
    pub epsilon_wb: f64,
}

pub fn welch_bounds(n: usize, m: usize) -> Result<WelchBounds> {
    if m < 1 || n < m {
        return Err(Error::InvalidArgument(format!("Welch bounds need N >= M >= 1, got N = {n}, M = {m}")));
    }
    // N = M has no excess vectors; the bound degenerates to 0 (avoids 0/0 at N = 1).
    let value = if n == m {
        0.0
    } else {
        (n - m) as f64 / (((n - 1) * m) as f64)
    };
    Ok(WelchBounds { average_bound: value, epsilon_wb: value })
}

/// Frame bounds a, b (extreme eigenvalues of F F^H) and tightness flags.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tightness {
    pub a: f64,
    pub b: f64,
    pub is_tight: bool,
    pub is_untf: bool,
}

pub fn tightness(frame: &Frame) -> Result<Tightness> {
    let eigs = hermitian_eigenvalues(&frame.entries().frame_operator())?;
    let a = eigs[0];
    let b = eigs[eigs.len() - 1];
    let is_tight = b - a <= 1e-8;
    let ratio = frame.n() as f64 / frame.m() as f64;
    let is_untf = is_tight && (a - ratio).abs() <= 1e-8;
    Ok(Tightness { a, b, is_tight, is_untf })
}
