//! Block-erasure channel: columns are grouped into consecutive blocks, a
//! subset of blocks survives each channel use, and the surviving columns form
//! a subframe.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::frames::Frame;
use crate::linalg::CMat;
use crate::{Error, Result};

/// Evaluators enumerate selections exhaustively up to this count and expect
/// Monte Carlo sampling beyond it.
pub const EXHAUSTIVE_SELECTION_CAP: u64 = 100_000;

/// Partition of N columns into `num_blocks` consecutive blocks of
/// `block_size` columns, of which `active_blocks` survive an erasure.
///
/// `active_blocks == 1` is permitted but degenerate (a single surviving
/// block); callers that care should check [`BlockModel::is_degenerate`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockModel {
    num_blocks: usize,
    block_size: usize,
    active_blocks: usize,
}

impl BlockModel {
    pub fn new(num_blocks: usize, block_size: usize, active_blocks: usize) -> Result<Self> {
        if num_blocks == 0 || block_size == 0 {
            return Err(Error::InvalidArgument(format!(
                "block model needs positive dimensions, got {num_blocks} blocks of size {block_size}"
            )));
        }
        if active_blocks == 0 || active_blocks > num_blocks {
            return Err(Error::InvalidArgument(format!(
                "active block count {active_blocks} must be in 1..={num_blocks}"
            )));
        }
        Ok(BlockModel { num_blocks, block_size, active_blocks })
    }

    pub fn num_blocks(&self) -> usize {
        self.num_blocks
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn active_blocks(&self) -> usize {
        self.active_blocks
    }

    pub fn erased_blocks(&self) -> usize {
        self.num_blocks - self.active_blocks
    }

    /// N = N_B * N_v.
    pub fn total_columns(&self) -> usize {
        self.num_blocks * self.block_size
    }

    /// K = N_A * N_v, the surviving column count.
    pub fn active_columns(&self) -> usize {
        self.active_blocks * self.block_size
    }

    /// A single surviving block; permitted, but most structure metrics are
    /// meaningless there.
    pub fn is_degenerate(&self) -> bool {
        self.active_blocks == 1
    }

    pub fn ratios(&self, m: usize) -> Ratios {
        Ratios {
            p: self.active_blocks as f64 / self.num_blocks as f64,
            gamma: m as f64 / self.total_columns() as f64,
            beta: self.active_columns() as f64 / m as f64,
        }
    }

    /// C(N_B, N_A) if it fits in 64 bits.
    pub fn selection_count(&self) -> Option<u64> {
        let c = binomial_u128(self.num_blocks as u64, self.active_blocks as u64);
        u64::try_from(c).ok()
    }
}

/// Survival probability p, redundancy gamma = M/N, and load beta = K/M.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ratios {
    pub p: f64,
    pub gamma: f64,
    pub beta: f64,
}

/// One erasure realization: the sorted indices of surviving blocks.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Selection {
    active: Vec<usize>,
}

impl Selection {
    pub fn new(mut active: Vec<usize>, model: &BlockModel) -> Result<Self> {
        active.sort_unstable();
        if active.len() != model.active_blocks() {
            return Err(Error::InvalidArgument(format!(
                "selection has {} blocks, model expects {}",
                active.len(),
                model.active_blocks()
            )));
        }
        if active.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("selection blocks must be distinct".into()));
        }
        if let Some(&last) = active.last() {
            if last >= model.num_blocks() {
                return Err(Error::InvalidArgument(format!(
                    "block index {last} out of range for {} blocks",
                    model.num_blocks()
                )));
            }
        }
        Ok(Selection { active })
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    /// Surviving column indices, ascending.
    pub fn columns(&self, model: &BlockModel) -> Vec<usize> {
        let nv = model.block_size();
        let mut cols = Vec::with_capacity(self.active.len() * nv);
        for &b in &self.active {
            cols.extend(b * nv..(b + 1) * nv);
        }
        cols
    }
}

/// C(n, k), saturating at u128::MAX when an intermediate product overflows.
pub(crate) fn binomial_u128(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        // Exact at every step: c holds C(n, i) and C(n, i+1) divides evenly.
        match c.checked_mul((n - i) as u128) {
            Some(v) => c = v / (i + 1) as u128,
            None => return u128::MAX,
        }
    }
    c
}

/// Every selection of N_A from N_B blocks, lexicographic, each exactly once.
///
/// Refuses when C(N_B, N_A) does not fit in 64 bits; Monte Carlo sampling is
/// the intended path at such sizes.
pub fn enumerate_selections(model: &BlockModel) -> Result<Vec<Selection>> {
    let count = model.selection_count().ok_or_else(|| {
        Error::Infeasible(format!(
            "C({}, {}) exceeds 64 bits; use Monte Carlo sampling instead",
            model.num_blocks(),
            model.active_blocks()
        ))
    })?;
    let count = usize::try_from(count).map_err(|_| {
        Error::Infeasible(format!("selection count {count} does not fit in memory"))
    })?;
    let nb = model.num_blocks();
    let na = model.active_blocks();
    let mut out = Vec::with_capacity(count);
    let mut current: Vec<usize> = (0..na).collect();
    loop {
        out.push(Selection { active: current.clone() });
        // Advance to the next combination in lexicographic order.
        let mut i = na;
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            if current[i] != i + nb - na {
                break;
            }
        }
        current[i] += 1;
        for j in i + 1..na {
            current[j] = current[j - 1] + 1;
        }
    }
}

/// Uniform random selection; reproducible for a fixed generator state.
pub fn sample_selection(model: &BlockModel, rng: &mut impl Rng) -> Selection {
    // Floyd's algorithm: N_A uniform distinct draws without building 0..N_B.
    let nb = model.num_blocks();
    let na = model.active_blocks();
    let mut chosen: Vec<usize> = Vec::with_capacity(na);
    for j in nb - na..nb {
        let t = rng.gen_range(0..=j);
        if chosen.contains(&t) {
            chosen.push(j);
        } else {
            chosen.push(t);
        }
    }
    chosen.sort_unstable();
    Selection { active: chosen }
}

/// Surviving columns of the frame: blocks in ascending index order, columns
/// in original order within each block.
pub fn subframe(frame: &Frame, selection: &Selection) -> Result<CMat> {
    let model = frame.blocks();
    if selection.active.len() != model.active_blocks() {
        return Err(Error::InvalidArgument(format!(
            "selection size {} does not match model N_A = {}",
            selection.active.len(),
            model.active_blocks()
        )));
    }
    if selection.active.iter().any(|&b| b >= model.num_blocks()) {
        return Err(Error::InvalidArgument("selection block index out of range".into()));
    }
    Ok(frame.entries().select_columns(&selection.columns(model)))
}

/// How evaluators walk the selection space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EvalMode {
    Exhaustive,
    MonteCarlo { samples: usize, seed: u64 },
}

impl EvalMode {
    /// Exhaustive when the space is small enough, else Monte Carlo with the
    /// given budget.
    pub fn auto(model: &BlockModel, samples: usize, seed: u64) -> EvalMode {
        match model.selection_count() {
            Some(c) if c <= EXHAUSTIVE_SELECTION_CAP => EvalMode::Exhaustive,
            _ => EvalMode::MonteCarlo { samples, seed },
        }
    }

    /// The concrete selection list this mode evaluates, in deterministic order.
    pub fn selections(&self, model: &BlockModel) -> Result<Vec<Selection>> {
        match *self {
            EvalMode::Exhaustive => {
                let count = model.selection_count().unwrap_or(u64::MAX);
                if count > EXHAUSTIVE_SELECTION_CAP {
                    return Err(Error::Infeasible(format!(
                        "exhaustive evaluation over {count} selections exceeds the cap of {EXHAUSTIVE_SELECTION_CAP}; use Monte Carlo"
                    )));
                }
                enumerate_selections(model)
            }
            EvalMode::MonteCarlo { samples, seed } => {
                if samples == 0 {
                    return Err(Error::InvalidArgument("Monte Carlo needs at least one sample".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                Ok((0..samples).map(|_| sample_selection(model, &mut rng)).collect())
            }
        }
    }
}
