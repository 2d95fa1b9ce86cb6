//! Search over column permutations (and optionally row sets) maximizing
//! average capacity under block erasures.
//!
//! Two regimes share one evaluator:
//! * exhaustive enumeration of canonical block partitions when the space is
//!   small enough to sweep,
//! * simulated annealing with seeded restarts plus a final steepest-descent
//!   polish everywhere else.
//!
//! Permutations that differ only by reordering within blocks or relabeling
//! whole blocks give the same objective, so results are always reported in
//! canonical form: each block sorted ascending, blocks ordered by smallest
//! element.

use std::collections::HashMap;
use std::f64::consts::LN_2;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::erasure::{binomial_u128, BlockModel, EvalMode};
use crate::frames::{build_base_matrix, construct_frame, Base, DifferenceSet, FrameSpec};
use crate::io::fingerprint;
use crate::linalg::{cholesky_ln_det_in_place, CMat};
use crate::metrics::{average_capacity, ChannelParams};
use crate::{Error, Result};

/// Largest canonical space an exhaustive sweep will take on.
pub const EXHAUSTIVE_SPACE_CAP: u64 = 10_000_000;

/// Monte Carlo sample count used for the objective when the selection space
/// is too large to enumerate.
pub const OBJECTIVE_SAMPLES: usize = 1000;

const INITIAL_TEMPERATURE: f64 = 1.0;
const COOLING_RATIO: f64 = 0.995;

/// What the search maximizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    /// Mean capacity over surviving-block selections.
    AverageCapacity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMode {
    Exhaustive,
    Stochastic,
}

/// Move set for the stochastic search. Row moves require a free row set;
/// `Both` alternates column and row moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Neighborhood {
    ColumnSwap,
    RowSwap,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochasticParams {
    pub restarts: usize,
    pub iterations_per_restart: usize,
    pub seed: u64,
    pub neighborhood: Neighborhood,
}

impl Default for StochasticParams {
    fn default() -> Self {
        StochasticParams {
            restarts: 4,
            iterations_per_restart: 2000,
            seed: 0,
            neighborhood: Neighborhood::ColumnSwap,
        }
    }
}

/// Whether the row set is pinned to a given difference set or searched over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RowSetPolicy {
    Fixed(DifferenceSet),
    Free { initial_rows: Option<Vec<usize>> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchConfig {
    pub objective: Objective,
    pub mode: SearchMode,
    pub stochastic: StochasticParams,
    pub row_set_policy: RowSetPolicy,
    pub channel: ChannelParams,
}

/// One recorded improvement: the best objective seen so far at an iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: u64,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchResult {
    pub best_spec: FrameSpec,
    /// Re-evaluated from the spec through the public capacity path, not the
    /// incremental caches the search itself maintains.
    pub best_objective: f64,
    /// Improvements within the winning restart, nondecreasing in objective.
    pub trace: Vec<TracePoint>,
    pub evaluations: u64,
}

/// Restartable snapshot: everything needed to continue a stochastic search,
/// tied to its configuration by hash.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub config_hash: String,
    pub completed_restarts: usize,
    pub evaluations: u64,
    pub best_objective: Option<f64>,
    pub best_spec: Option<FrameSpec>,
    pub best_restart: Option<usize>,
    pub trace: Vec<TracePoint>,
}

/// Size of a canonical partition space, saturating above u64.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionCount {
    Exact(u64),
    TooLarge,
}

impl PartitionCount {
    pub fn exact(self) -> Option<u64> {
        match self {
            PartitionCount::Exact(v) => Some(v),
            PartitionCount::TooLarge => None,
        }
    }
}

/// Number of ways to split N columns into N_B unordered blocks of N_v:
/// N! / ((N_v!)^N_B * N_B!), computed as a product of binomials by anchoring
/// each block at the smallest unplaced element.
pub fn canonical_partition_count(model: &BlockModel) -> PartitionCount {
    let n = model.total_columns() as u64;
    let nv = model.block_size() as u64;
    let nb = model.num_blocks() as u64;
    let mut total: u128 = 1;
    for j in 0..nb {
        let remaining = n - 1 - j * nv;
        let c = binomial_u128(remaining, nv - 1);
        total = match total.checked_mul(c) {
            Some(v) => v,
            None => return PartitionCount::TooLarge,
        };
    }
    match u64::try_from(total) {
        Ok(v) => PartitionCount::Exact(v),
        Err(_) => PartitionCount::TooLarge,
    }
}

/// Rewrite a spec so equivalent permutations compare equal: sort each block,
/// order blocks by their smallest element, sort the row set.
pub fn canonicalize(spec: &FrameSpec) -> FrameSpec {
    let nv = spec.blocks.block_size();
    let mut blocks: Vec<Vec<usize>> = spec.perm.chunks(nv).map(|c| c.to_vec()).collect();
    for block in &mut blocks {
        block.sort_unstable();
    }
    blocks.sort_unstable_by_key(|b| b[0]);
    let mut rows = spec.rows.clone();
    rows.sort_unstable();
    FrameSpec {
        base: spec.base,
        rows,
        perm: blocks.into_iter().flatten().collect(),
        blocks: spec.blocks.clone(),
    }
}

/// Identity used to stamp checkpoints and artifacts: hash of everything that
/// determines the search trajectory.
#[derive(Serialize)]
struct SearchIdentity<'a> {
    kind: &'static str,
    base: Base,
    blocks: &'a BlockModel,
    initial_rows: &'a [usize],
    rows_free: bool,
    config: &'a SearchConfig,
}

/// Incremental objective evaluator.
///
/// Holds the scaled selected-row Gram G0 = (N/M) W_S^H W_S over base column
/// indices, so a column move never touches G0 and a row move is a rank-one
/// update. Per-selection capacities are cached; a column swap recomputes only
/// the selections touching the two blocks involved.
struct Evaluator {
    n: usize,
    m: usize,
    nv: usize,
    snr: f64,
    scale_root: f64,
    w: CMat,
    rows: Vec<usize>,
    /// (N/M) W_S^H W_S, indexed by base column.
    g0: CMat,
    /// Scaled selected rows, M x N, indexed by base column.
    f: CMat,
    /// Gram side: true means K > M and the M x M form is cheaper.
    m_side: bool,
    side: usize,
    sel_blocks: Vec<Vec<usize>>,
    /// For each block, the indices of selections containing it.
    block_sels: Vec<Vec<u32>>,
    sel_caps: Vec<f64>,
    chol: Vec<Complex64>,
    src: Vec<usize>,
    affected: Vec<u32>,
    evaluations: u64,
}

impl Evaluator {
    fn new(
        base: Base,
        blocks: &BlockModel,
        rows: &[usize],
        channel: &ChannelParams,
        mode: &EvalMode,
    ) -> Result<Self> {
        let n = blocks.total_columns();
        let m = rows.len();
        let w = build_base_matrix(base, n)?;
        let selections = mode.selections(blocks)?;
        let sel_blocks: Vec<Vec<usize>> = selections.iter().map(|s| s.active().to_vec()).collect();
        let mut block_sels = vec![Vec::new(); blocks.num_blocks()];
        for (i, sel) in sel_blocks.iter().enumerate() {
            for &g in sel {
                block_sels[g].push(i as u32);
            }
        }
        let k = blocks.active_columns();
        let m_side = k > m;
        let side = k.min(m);
        let mut eval = Evaluator {
            n,
            m,
            nv: blocks.block_size(),
            snr: channel.snr_linear,
            scale_root: (n as f64 / m as f64).sqrt(),
            w,
            rows: Vec::new(),
            g0: CMat::zeros(n, n),
            f: CMat::zeros(m, n),
            m_side,
            side,
            sel_caps: vec![0.0; sel_blocks.len()],
            sel_blocks,
            block_sels,
            chol: vec![Complex64::new(0.0, 0.0); side * side],
            src: Vec::with_capacity(k),
            affected: Vec::new(),
            evaluations: 0,
        };
        eval.set_rows(rows);
        Ok(eval)
    }

    /// Full rebuild of F and G0 for a new row set; O(N^2 M).
    fn set_rows(&mut self, rows: &[usize]) {
        self.rows.clear();
        self.rows.extend_from_slice(rows);
        for (i, &r) in rows.iter().enumerate() {
            for c in 0..self.n {
                self.f[(i, c)] = self.w[(r, c)] * self.scale_root;
            }
        }
        for a in 0..self.n {
            for b in a..self.n {
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 0..self.m {
                    acc += self.f[(i, a)].conj() * self.f[(i, b)];
                }
                self.g0[(a, b)] = acc;
                self.g0[(b, a)] = acc.conj();
            }
        }
    }

    /// Replace one selected row; rank-one update of G0, O(N^2).
    fn swap_row(&mut self, slot: usize, new_row: usize) {
        let old_row = self.rows[slot];
        self.rows[slot] = new_row;
        let scale = self.scale_root * self.scale_root;
        for c in 0..self.n {
            self.f[(slot, c)] = self.w[(new_row, c)] * self.scale_root;
        }
        for a in 0..self.n {
            for b in a..self.n {
                let delta = (self.w[(new_row, a)].conj() * self.w[(new_row, b)]
                    - self.w[(old_row, a)].conj() * self.w[(old_row, b)])
                    * scale;
                self.g0[(a, b)] += delta;
                self.g0[(b, a)] = self.g0[(a, b)].conj();
            }
        }
    }

    /// log2 det(I + SNR G) for the subframe on the given base columns, via
    /// whichever Gram side is smaller.
    fn capacity_of_sources(&mut self) -> Result<f64> {
        let s = self.side;
        if !self.m_side {
            for a in 0..s {
                for b in 0..=a {
                    let g = self.g0[(self.src[a], self.src[b])];
                    self.chol[a * s + b] = g * self.snr
                        + if a == b { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
                }
            }
        } else {
            for v in self.chol.iter_mut() {
                *v = Complex64::new(0.0, 0.0);
            }
            for idx in 0..self.src.len() {
                let c = self.src[idx];
                for a in 0..s {
                    let va = self.f[(a, c)];
                    for b in 0..=a {
                        self.chol[a * s + b] += va * self.f[(b, c)].conj();
                    }
                }
            }
            for a in 0..s {
                for b in 0..=a {
                    self.chol[a * s + b] *= self.snr;
                }
                self.chol[a * s + a] += Complex64::new(1.0, 0.0);
            }
        }
        cholesky_ln_det_in_place(&mut self.chol, s).map(|ld| ld / LN_2)
    }

    fn gather_sources(&mut self, perm: &[usize], sel: usize) {
        self.src.clear();
        let nv = self.nv;
        for &g in &self.sel_blocks[sel] {
            self.src.extend_from_slice(&perm[g * nv..(g + 1) * nv]);
        }
    }

    fn capacity_of_selection(&mut self, perm: &[usize], sel: usize) -> Result<f64> {
        self.gather_sources(perm, sel);
        self.capacity_of_sources()
    }

    fn mean(&self) -> f64 {
        self.sel_caps.iter().sum::<f64>() / self.sel_caps.len() as f64
    }

    /// Recompute every cached selection capacity; one evaluation.
    fn full_eval(&mut self, perm: &[usize]) -> Result<f64> {
        for i in 0..self.sel_caps.len() {
            self.sel_caps[i] = self.capacity_of_selection(perm, i)?;
        }
        self.evaluations += 1;
        Ok(self.mean())
    }

    /// Objective after a swap between blocks `ga` and `gb` (perm already
    /// updated). Recomputes only affected selections and returns the cache
    /// entries to restore on rejection. A selection containing both blocks
    /// keeps the same column union, so only the symmetric difference of the
    /// two membership lists needs recomputing.
    fn eval_col_swap(
        &mut self,
        perm: &[usize],
        ga: usize,
        gb: usize,
    ) -> Result<(f64, Vec<(u32, f64)>)> {
        self.affected.clear();
        let (la, lb) = (&self.block_sels[ga], &self.block_sels[gb]);
        let (mut i, mut j) = (0, 0);
        // block_sels lists are sorted by construction.
        while i < la.len() || j < lb.len() {
            match (la.get(i), lb.get(j)) {
                (Some(&a), Some(&b)) if a == b => {
                    i += 1;
                    j += 1;
                }
                (Some(&a), Some(&b)) if a < b => {
                    i += 1;
                    self.affected.push(a);
                }
                (Some(_), Some(&b)) => {
                    j += 1;
                    self.affected.push(b);
                }
                (Some(&a), None) => {
                    i += 1;
                    self.affected.push(a);
                }
                (None, Some(&b)) => {
                    j += 1;
                    self.affected.push(b);
                }
                (None, None) => unreachable!(),
            }
        }
        let mut undo = Vec::with_capacity(self.affected.len());
        for idx in 0..self.affected.len() {
            let sel = self.affected[idx] as usize;
            undo.push((sel as u32, self.sel_caps[sel]));
            self.sel_caps[sel] = self.capacity_of_selection(perm, sel)?;
        }
        self.evaluations += 1;
        Ok((self.mean(), undo))
    }

    fn revert(&mut self, undo: &[(u32, f64)]) {
        for &(sel, cap) in undo {
            self.sel_caps[sel as usize] = cap;
        }
    }

    fn caps_snapshot(&self) -> Vec<f64> {
        self.sel_caps.clone()
    }

    fn restore_caps(&mut self, caps: Vec<f64>) {
        self.sel_caps = caps;
    }
}

/// Objective evaluation mode shared by the search and the final re-check:
/// exact enumeration when feasible, seeded Monte Carlo otherwise. Restart
/// RNGs use ChaCha streams >= 1, so stream 0 here never collides.
fn objective_mode(blocks: &BlockModel, config: &SearchConfig) -> EvalMode {
    EvalMode::auto(blocks, OBJECTIVE_SAMPLES, config.stochastic.seed)
}

struct RestartOutcome {
    objective: f64,
    spec: FrameSpec,
    trace: Vec<TracePoint>,
}

/// Tracks the champion across restarts. Ties on the objective break toward
/// the lexicographically smaller canonical spec, so results are reproducible
/// across restart orderings.
fn better(candidate: &RestartOutcome, incumbent: &Option<RestartOutcome>) -> bool {
    match incumbent {
        None => true,
        Some(best) => {
            candidate.objective > best.objective
                || (candidate.objective == best.objective
                    && (&candidate.spec.rows, &candidate.spec.perm)
                        < (&best.spec.rows, &best.spec.perm))
        }
    }
}

fn shuffled_perm(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        perm.swap(i, j);
    }
    perm
}

fn random_row_set(n: usize, m: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..m {
        let j = rng.gen_range(i..n);
        pool.swap(i, j);
    }
    let mut rows = pool[..m].to_vec();
    rows.sort_unstable();
    rows
}

struct RestartContext<'a> {
    base: Base,
    blocks: &'a BlockModel,
    initial_rows: &'a [usize],
    rows_free: bool,
    params: &'a StochasticParams,
}

/// One annealing restart plus steepest-descent polish. Restart r draws from
/// ChaCha stream r + 1 of the configured seed, so completed restarts can be
/// skipped on resume without replaying them.
fn run_restart(eval: &mut Evaluator, ctx: &RestartContext, r: usize) -> Result<RestartOutcome> {
    let n = ctx.blocks.total_columns();
    let nv = ctx.blocks.block_size();
    let nb = ctx.blocks.num_blocks();
    let m = ctx.initial_rows.len();
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.params.seed);
    rng.set_stream(r as u64 + 1);

    let mut perm: Vec<usize> = (0..n).collect();
    let mut rows = ctx.initial_rows.to_vec();
    if r > 0 {
        perm = shuffled_perm(n, &mut rng);
        if ctx.rows_free {
            rows = random_row_set(n, m, &mut rng);
        }
    }
    eval.set_rows(&rows);
    let mut current = eval.full_eval(&perm)?;

    let can_col = nv >= 2 && nb >= 2;
    let can_row = ctx.rows_free && m < n;
    let mut complement: Vec<usize> = (0..n).filter(|c| !rows.contains(c)).collect();

    let mut tracked = current;
    let mut best_rows = rows.clone();
    let mut best_perm = perm.clone();
    let mut trace = vec![TracePoint { iteration: 0, objective: current }];

    let mut temperature = INITIAL_TEMPERATURE;
    for iter in 0..ctx.params.iterations_per_restart {
        let row_move = match ctx.params.neighborhood {
            Neighborhood::ColumnSwap => false,
            Neighborhood::RowSwap => true,
            Neighborhood::Both => iter % 2 == 1,
        };
        let row_move = if row_move { can_row } else { !can_col && can_row };
        let candidate = if row_move {
            let slot = rng.gen_range(0..m);
            let ci = rng.gen_range(0..complement.len());
            let old_row = rows[slot];
            let new_row = complement[ci];
            let caps = eval.caps_snapshot();
            eval.swap_row(slot, new_row);
            rows[slot] = new_row;
            complement[ci] = old_row;
            let cand = eval.full_eval(&perm)?;
            let delta = cand - current;
            if delta >= 0.0 || rng.gen::<f64>() < (delta / temperature).exp() {
                Some(cand)
            } else {
                eval.swap_row(slot, old_row);
                rows[slot] = old_row;
                complement[ci] = new_row;
                eval.restore_caps(caps);
                None
            }
        } else if can_col {
            let pa = rng.gen_range(0..n);
            let pb = loop {
                let x = rng.gen_range(0..n);
                if x / nv != pa / nv {
                    break x;
                }
            };
            perm.swap(pa, pb);
            let (cand, undo) = eval.eval_col_swap(&perm, pa / nv, pb / nv)?;
            let delta = cand - current;
            if delta >= 0.0 || rng.gen::<f64>() < (delta / temperature).exp() {
                Some(cand)
            } else {
                perm.swap(pa, pb);
                eval.revert(&undo);
                None
            }
        } else {
            None
        };
        if let Some(cand) = candidate {
            current = cand;
            if cand > tracked {
                tracked = cand;
                best_rows.clone_from(&rows);
                best_perm.clone_from(&perm);
                trace.push(TracePoint { iteration: iter as u64 + 1, objective: cand });
            }
        }
        temperature *= COOLING_RATIO;
    }

    // Polish: first-improvement hill climbing from the best annealing state,
    // rebuilt from scratch so cache drift from incremental updates cannot
    // accumulate. Each sweep applies every improving move it finds; stops
    // after a sweep that finds none, i.e. at a local optimum of the full
    // neighborhood.
    rows = best_rows.clone();
    perm = best_perm.clone();
    eval.set_rows(&rows);
    let mut current = eval.full_eval(&perm)?;
    complement = (0..n).filter(|c| !rows.contains(c)).collect();
    let mut sweep = 0u64;
    loop {
        sweep += 1;
        let mut improved = false;
        if can_col {
            for pa in 0..n {
                for pb in pa + 1..n {
                    if pa / nv == pb / nv {
                        continue;
                    }
                    perm.swap(pa, pb);
                    let (cand, undo) = eval.eval_col_swap(&perm, pa / nv, pb / nv)?;
                    if cand > current {
                        current = cand;
                        improved = true;
                    } else {
                        perm.swap(pa, pb);
                        eval.revert(&undo);
                    }
                }
            }
        }
        if can_row {
            for slot in 0..m {
                for ci in 0..complement.len() {
                    let caps = eval.caps_snapshot();
                    let old_row = rows[slot];
                    eval.swap_row(slot, complement[ci]);
                    let cand = eval.full_eval(&perm)?;
                    if cand > current {
                        current = cand;
                        rows[slot] = complement[ci];
                        complement[ci] = old_row;
                        improved = true;
                    } else {
                        eval.swap_row(slot, old_row);
                        eval.restore_caps(caps);
                    }
                }
            }
        }
        if current > tracked {
            tracked = current;
            best_rows.clone_from(&rows);
            best_perm.clone_from(&perm);
            trace.push(TracePoint {
                iteration: ctx.params.iterations_per_restart as u64 + sweep,
                objective: current,
            });
        }
        if !improved {
            break;
        }
    }

    let spec = canonicalize(&FrameSpec {
        base: ctx.base,
        rows: best_rows,
        perm: best_perm,
        blocks: ctx.blocks.clone(),
    });
    Ok(RestartOutcome { objective: tracked, spec, trace })
}

/// Exhaustive sweep over canonical partitions for a fixed row set. Walks
/// partitions in lexicographic order and keeps strict improvements, so the
/// winner is the lexicographically smallest optimum. Uses a pairwise-block
/// capacity memo when only two blocks survive, which collapses the leaf cost
/// to table lookups.
fn exhaustive_fixed_rows(
    eval: &mut Evaluator,
    blocks: &BlockModel,
) -> Result<(Vec<usize>, f64, u64)> {
    let n = blocks.total_columns();
    let nv = blocks.block_size();
    let nb = blocks.num_blocks();

    struct Driver<'e> {
        eval: &'e mut Evaluator,
        nb: usize,
        nv: usize,
        n: usize,
        /// Two surviving blocks let the leaf objective reduce to a sum of
        /// pairwise capacities, memoized on column bitmasks.
        pairwise: bool,
        memo: HashMap<(u64, u64), f64>,
        best_perm: Option<Vec<usize>>,
        best_obj: f64,
        leaves: u64,
    }

    impl Driver<'_> {
        /// Anchoring each block at the smallest unplaced element enumerates
        /// exactly the canonical partitions, in lexicographic order; strict
        /// improvement keeps the lexicographically smallest optimum.
        fn descend(
            &mut self,
            depth: usize,
            perm: &mut Vec<usize>,
            used: &mut Vec<bool>,
            masks: &mut Vec<u64>,
        ) -> Result<()> {
            if depth == self.nb {
                self.leaves += 1;
                let obj = if self.pairwise {
                    self.pairwise_objective(perm, masks)?
                } else {
                    self.eval.full_eval(perm)?
                };
                if obj > self.best_obj {
                    self.best_obj = obj;
                    self.best_perm = Some(perm.clone());
                }
                return Ok(());
            }
            let anchor = (0..self.n).find(|&e| !used[e]).expect("free element exists");
            used[anchor] = true;
            perm[depth * self.nv] = anchor;
            masks[depth] = 1u64 << (anchor % 64);
            self.fill(depth, 1, anchor + 1, perm, used, masks)?;
            masks[depth] = 0;
            used[anchor] = false;
            Ok(())
        }

        fn fill(
            &mut self,
            depth: usize,
            slot: usize,
            min_next: usize,
            perm: &mut Vec<usize>,
            used: &mut Vec<bool>,
            masks: &mut Vec<u64>,
        ) -> Result<()> {
            if slot == self.nv {
                return self.descend(depth + 1, perm, used, masks);
            }
            // Leave room for the remaining slots of this block.
            for e in min_next..=self.n - (self.nv - slot) {
                if used[e] {
                    continue;
                }
                used[e] = true;
                perm[depth * self.nv + slot] = e;
                masks[depth] |= 1u64 << (e % 64);
                self.fill(depth, slot + 1, e + 1, perm, used, masks)?;
                masks[depth] &= !(1u64 << (e % 64));
                used[e] = false;
            }
            Ok(())
        }

        fn pairwise_objective(&mut self, perm: &[usize], masks: &[u64]) -> Result<f64> {
            let mut sum = 0.0;
            let count = self.eval.sel_blocks.len();
            for s in 0..count {
                let ga = self.eval.sel_blocks[s][0];
                let gb = self.eval.sel_blocks[s][1];
                let key = if masks[ga] < masks[gb] {
                    (masks[ga], masks[gb])
                } else {
                    (masks[gb], masks[ga])
                };
                sum += match self.memo.get(&key) {
                    Some(&v) => v,
                    None => {
                        self.eval.gather_sources(perm, s);
                        let v = self.eval.capacity_of_sources()?;
                        self.memo.insert(key, v);
                        v
                    }
                };
            }
            self.eval.evaluations += 1;
            Ok(sum / count as f64)
        }
    }

    let mut driver = Driver {
        // Masks index single bits, so the memo is only safe below 65 columns.
        pairwise: blocks.active_blocks() == 2 && n <= 64,
        eval,
        nb,
        nv,
        n,
        memo: HashMap::new(),
        best_perm: None,
        best_obj: f64::NEG_INFINITY,
        leaves: 0,
    };
    let mut perm = vec![0usize; n];
    let mut used = vec![false; n];
    let mut masks = vec![0u64; nb];
    driver.descend(0, &mut perm, &mut used, &mut masks)?;

    let best = driver.best_perm.expect("at least one partition exists");
    Ok((best, driver.best_obj, driver.leaves))
}

fn validate_stochastic(params: &StochasticParams) -> Result<()> {
    if params.restarts == 0 {
        return Err(Error::InvalidArgument("stochastic search needs at least one restart".into()));
    }
    if params.iterations_per_restart == 0 {
        return Err(Error::InvalidArgument(
            "stochastic search needs at least one iteration per restart".into(),
        ));
    }
    Ok(())
}

/// Shared driver behind the two public searches.
#[allow(clippy::too_many_arguments)]
fn run_search(
    kind: &'static str,
    base: Base,
    blocks: &BlockModel,
    initial_rows: Vec<usize>,
    rows_free: bool,
    config: &SearchConfig,
    resume: Option<Checkpoint>,
    sink: Option<&mut dyn FnMut(&Checkpoint)>,
) -> Result<SearchResult> {
    let n = blocks.total_columns();
    let m = initial_rows.len();
    if m == 0 || m >= n {
        return Err(Error::InvalidArgument(format!(
            "row set size {m} must satisfy 0 < M < N = {n}"
        )));
    }
    let identity = SearchIdentity {
        kind,
        base,
        blocks,
        initial_rows: &initial_rows,
        rows_free,
        config,
    };
    let config_hash = fingerprint(&identity);
    let mode = objective_mode(blocks, config);
    let exact_objective = matches!(mode, EvalMode::Exhaustive);

    let finalize = |spec: FrameSpec, tracked: f64, trace: Vec<TracePoint>, evals: u64| -> Result<SearchResult> {
        let frame = construct_frame(&spec)?;
        let fresh = average_capacity(&frame, &config.channel, &mode)?.mean;
        if exact_objective && (fresh - tracked).abs() > 1e-9 {
            return Err(Error::Numerical(format!(
                "search bookkeeping drifted: cached objective {tracked} vs re-evaluated {fresh}"
            )));
        }
        Ok(SearchResult { best_spec: spec, best_objective: fresh, trace, evaluations: evals })
    };

    match config.mode {
        SearchMode::Exhaustive => {
            let space = exhaustive_space(blocks, n, m, rows_free)?;
            if space > EXHAUSTIVE_SPACE_CAP {
                return Err(Error::Infeasible(format!(
                    "exhaustive space has {space} states, above the cap of {EXHAUSTIVE_SPACE_CAP}; use the stochastic mode"
                )));
            }
            let mut eval = Evaluator::new(base, blocks, &initial_rows, &config.channel, &mode)?;
            let mut best: Option<(Vec<usize>, Vec<usize>, f64)> = None;
            let mut total_leaves = 0u64;
            if rows_free {
                let mut rows_iter = CombinationIter::new(n, m);
                while let Some(rows) = rows_iter.next() {
                    eval.set_rows(rows);
                    let (perm, obj, leaves) = exhaustive_fixed_rows(&mut eval, blocks)?;
                    total_leaves += leaves;
                    if best.as_ref().map_or(true, |b| obj > b.2) {
                        best = Some((rows.to_vec(), perm, obj));
                    }
                }
            } else {
                let (perm, obj, leaves) = exhaustive_fixed_rows(&mut eval, blocks)?;
                total_leaves = leaves;
                best = Some((initial_rows.clone(), perm, obj));
            }
            let (rows, perm, obj) = best.expect("exhaustive sweep visits at least one state");
            let spec = canonicalize(&FrameSpec { base, rows, perm, blocks: blocks.clone() });
            let trace = vec![TracePoint { iteration: total_leaves, objective: obj }];
            finalize(spec, obj, trace, eval.evaluations)
        }
        SearchMode::Stochastic => {
            validate_stochastic(&config.stochastic)?;
            let nv = blocks.block_size();
            let nb = blocks.num_blocks();
            let can_col = nv >= 2 && nb >= 2;
            let can_row = rows_free && m < n;
            if !can_col && !can_row {
                // Nothing to move: every permutation is block-equivalent.
                let spec = canonicalize(&FrameSpec {
                    base,
                    rows: initial_rows,
                    perm: (0..n).collect(),
                    blocks: blocks.clone(),
                });
                let frame = construct_frame(&spec)?;
                let fresh = average_capacity(&frame, &config.channel, &mode)?.mean;
                return Ok(SearchResult {
                    best_spec: spec,
                    best_objective: fresh,
                    trace: vec![TracePoint { iteration: 0, objective: fresh }],
                    evaluations: 1,
                });
            }
            if matches!(config.stochastic.neighborhood, Neighborhood::ColumnSwap) && !can_col {
                return Err(Error::InvalidArgument(
                    "column swaps cannot change anything when N_v = 1 or N_B = 1; choose a row neighborhood".into(),
                ));
            }
            if matches!(config.stochastic.neighborhood, Neighborhood::RowSwap | Neighborhood::Both)
                && !can_row
            {
                return Err(Error::InvalidArgument(
                    "row moves need a free row set with M < N".into(),
                ));
            }

            let mut completed = 0usize;
            let mut evaluations = 0u64;
            let mut incumbent: Option<RestartOutcome> = None;
            let mut best_restart: Option<usize> = None;
            if let Some(cp) = resume {
                if cp.config_hash != config_hash {
                    return Err(Error::Validation(format!(
                        "checkpoint hash {} does not match this configuration ({config_hash})",
                        cp.config_hash
                    )));
                }
                completed = cp.completed_restarts;
                evaluations = cp.evaluations;
                best_restart = cp.best_restart;
                if let (Some(obj), Some(spec)) = (cp.best_objective, cp.best_spec) {
                    incumbent = Some(RestartOutcome { objective: obj, spec, trace: cp.trace });
                }
            }

            let mut eval = Evaluator::new(base, blocks, &initial_rows, &config.channel, &mode)?;
            let ctx = RestartContext {
                base,
                blocks,
                initial_rows: &initial_rows,
                rows_free,
                params: &config.stochastic,
            };
            let mut sink = sink;
            for r in completed..config.stochastic.restarts {
                let before = eval.evaluations;
                let outcome = run_restart(&mut eval, &ctx, r)?;
                evaluations += eval.evaluations - before;
                if better(&outcome, &incumbent) {
                    best_restart = Some(r);
                    incumbent = Some(outcome);
                }
                completed = r + 1;
                if let Some(cb) = sink.as_deref_mut() {
                    let best = incumbent.as_ref().expect("incumbent set after first restart");
                    cb(&Checkpoint {
                        config_hash: config_hash.clone(),
                        completed_restarts: completed,
                        evaluations,
                        best_objective: Some(best.objective),
                        best_spec: Some(best.spec.clone()),
                        best_restart,
                        trace: best.trace.clone(),
                    });
                }
            }
            let best = incumbent.ok_or_else(|| {
                Error::InvalidArgument("no restarts ran; nothing to report".into())
            })?;
            let tracked = best.objective;
            finalize(best.spec, tracked, best.trace, evaluations)
        }
    }
}

/// Size of the exhaustive space: canonical partitions, times C(N, M) when the
/// row set is free.
fn exhaustive_space(blocks: &BlockModel, n: usize, m: usize, rows_free: bool) -> Result<u64> {
    let partitions = match canonical_partition_count(blocks) {
        PartitionCount::Exact(v) => v as u128,
        PartitionCount::TooLarge => {
            return Err(Error::Infeasible(
                "partition space exceeds 2^64; use the stochastic mode".into(),
            ))
        }
    };
    let total = if rows_free {
        partitions.saturating_mul(binomial_u128(n as u64, m as u64))
    } else {
        partitions
    };
    u64::try_from(total).map_err(|_| {
        Error::Infeasible("exhaustive space exceeds 2^64; use the stochastic mode".into())
    })
}

/// Lexicographic combinations of m items from 0..n, yielded as slices.
pub(crate) struct CombinationIter {
    n: usize,
    m: usize,
    state: Vec<usize>,
    started: bool,
}

impl CombinationIter {
    pub(crate) fn new(n: usize, m: usize) -> Self {
        CombinationIter { n, m, state: (0..m).collect(), started: false }
    }

    pub(crate) fn next(&mut self) -> Option<&[usize]> {
        if !self.started {
            self.started = true;
            return Some(&self.state);
        }
        let mut i = self.m;
        loop {
            if i == 0 {
                return None;
            }
            i -= 1;
            if self.state[i] < self.n - (self.m - i) {
                self.state[i] += 1;
                for j in i + 1..self.m {
                    self.state[j] = self.state[j - 1] + 1;
                }
                return Some(&self.state);
            }
        }
    }
}

/// Search for the best column permutation with the row set pinned to a
/// difference set.
pub fn search_petf(
    base: Base,
    difference_set: &DifferenceSet,
    blocks: &BlockModel,
    config: &SearchConfig,
) -> Result<SearchResult> {
    search_petf_resumable(base, difference_set, blocks, config, None, None)
}

/// [`search_petf`] with checkpoint resume and a per-restart checkpoint sink.
pub fn search_petf_resumable(
    base: Base,
    difference_set: &DifferenceSet,
    blocks: &BlockModel,
    config: &SearchConfig,
    resume: Option<Checkpoint>,
    sink: Option<&mut dyn FnMut(&Checkpoint)>,
) -> Result<SearchResult> {
    if !matches!(config.row_set_policy, RowSetPolicy::Fixed(_)) {
        return Err(Error::InvalidArgument(
            "this search pins the row set; use the row-and-permutation search for a free one".into(),
        ));
    }
    if difference_set.order != blocks.total_columns() {
        return Err(Error::InvalidArgument(format!(
            "difference set lives in a group of order {} but the block model spans {} columns",
            difference_set.order,
            blocks.total_columns()
        )));
    }
    run_search(
        "petf",
        base,
        blocks,
        difference_set.elements.clone(),
        false,
        config,
        resume,
        sink,
    )
}

/// Joint search over row sets and column permutations.
pub fn search_butf(
    base: Base,
    m: usize,
    blocks: &BlockModel,
    config: &SearchConfig,
) -> Result<SearchResult> {
    search_butf_resumable(base, m, blocks, config, None, None)
}

/// [`search_butf`] with checkpoint resume and a per-restart checkpoint sink.
pub fn search_butf_resumable(
    base: Base,
    m: usize,
    blocks: &BlockModel,
    config: &SearchConfig,
    resume: Option<Checkpoint>,
    sink: Option<&mut dyn FnMut(&Checkpoint)>,
) -> Result<SearchResult> {
    let initial_rows = match &config.row_set_policy {
        RowSetPolicy::Free { initial_rows } => match initial_rows {
            Some(rows) => {
                if rows.len() != m {
                    return Err(Error::InvalidArgument(format!(
                        "initial row set has {} entries but M = {m}",
                        rows.len()
                    )));
                }
                rows.clone()
            }
            None => (0..m).collect(),
        },
        RowSetPolicy::Fixed(_) => {
            return Err(Error::InvalidArgument(
                "this search varies the row set; use the permutation-only search to pin it".into(),
            ))
        }
    };
    run_search("butf", base, blocks, initial_rows, true, config, resume, sink)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::erasure::BlockModel;

    fn blocks(nb: usize, nv: usize, na: usize) -> BlockModel {
        BlockModel::new(nb, nv, na).unwrap()
    }

    fn petf_config(mode: SearchMode, ds: &DifferenceSet) -> SearchConfig {
        SearchConfig {
            objective: Objective::AverageCapacity,
            mode,
            stochastic: StochasticParams { restarts: 2, iterations_per_restart: 60, seed: 7, neighborhood: Neighborhood::ColumnSwap },
            row_set_policy: RowSetPolicy::Fixed(ds.clone()),
            channel: ChannelParams::from_db(20.0).unwrap(),
        }
    }

    fn toy_set() -> DifferenceSet {
        DifferenceSet::new(crate::frames::Group::Cyclic, 8, vec![0, 1, 3], None).unwrap()
    }

    #[test]
    fn partition_counts_match_closed_form() {
        assert_eq!(canonical_partition_count(&blocks(2, 2, 1)).exact(), Some(3));
        assert_eq!(canonical_partition_count(&blocks(4, 2, 2)).exact(), Some(105));
        assert_eq!(canonical_partition_count(&blocks(4, 4, 2)).exact(), Some(2_627_625));
        assert_eq!(canonical_partition_count(&blocks(6, 1, 3)).exact(), Some(1));
        assert_eq!(canonical_partition_count(&blocks(1, 9, 1)).exact(), Some(1));
        assert!(matches!(canonical_partition_count(&blocks(16, 4, 2)), PartitionCount::TooLarge));
    }

    #[test]
    fn canonicalize_sorts_blocks_and_rows() {
        let spec = FrameSpec::new(
            Base::Dft,
            vec![3, 0, 1],
            vec![3, 1, 2, 0],
            blocks(2, 2, 1),
        )
        .unwrap();
        let canon = canonicalize(&spec);
        assert_eq!(canon.perm, vec![0, 2, 1, 3]);
        assert_eq!(canon.rows, vec![0, 1, 3]);
        let again = canonicalize(&canon);
        assert_eq!(again, canon);
    }

    #[test]
    fn canonicalization_preserves_the_objective() {
        let channel = ChannelParams::from_db(18.0).unwrap();
        let model = blocks(4, 2, 2);
        let mode = EvalMode::Exhaustive;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..25 {
            let perm = shuffled_perm(8, &mut rng);
            let spec =
                FrameSpec::new(Base::Dft, vec![0, 1, 3], perm, model.clone()).unwrap();
            let canon = canonicalize(&spec);
            let a = average_capacity(&construct_frame(&spec).unwrap(), &channel, &mode)
                .unwrap()
                .mean;
            let b = average_capacity(&construct_frame(&canon).unwrap(), &channel, &mode)
                .unwrap()
                .mean;
            assert!((a - b).abs() < 1e-12, "canonical form changed objective: {a} vs {b}");
        }
    }

    #[test]
    fn incremental_and_full_evaluation_agree() {
        let model = blocks(4, 2, 2);
        let channel = ChannelParams::from_db(25.0).unwrap();
        let mut eval =
            Evaluator::new(Base::Dft, &model, &[0, 1, 3], &channel, &EvalMode::Exhaustive)
                .unwrap();
        let mut perm: Vec<usize> = (0..8).collect();
        let mut cached = eval.full_eval(&perm).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let pa = rng.gen_range(0..8);
            let pb = loop {
                let x = rng.gen_range(0..8);
                if x / 2 != pa / 2 {
                    break x;
                }
            };
            perm.swap(pa, pb);
            let (fast, _) = eval.eval_col_swap(&perm, pa / 2, pb / 2).unwrap();
            cached = fast;
            let mut fresh =
                Evaluator::new(Base::Dft, &model, &[0, 1, 3], &channel, &EvalMode::Exhaustive)
                    .unwrap();
            let full = fresh.full_eval(&perm).unwrap();
            assert!((fast - full).abs() < 1e-11, "drift {fast} vs {full}");
        }
        let _ = cached;
    }

    #[test]
    fn row_swaps_update_the_gram_consistently() {
        let model = blocks(4, 2, 2);
        let channel = ChannelParams::from_db(25.0).unwrap();
        let mut eval =
            Evaluator::new(Base::Dft, &model, &[0, 1, 3], &channel, &EvalMode::Exhaustive)
                .unwrap();
        let perm: Vec<usize> = (0..8).collect();
        eval.full_eval(&perm).unwrap();
        eval.swap_row(1, 6);
        eval.swap_row(0, 2);
        let via_updates = eval.full_eval(&perm).unwrap();
        let mut fresh =
            Evaluator::new(Base::Dft, &model, &[2, 6, 3], &channel, &EvalMode::Exhaustive)
                .unwrap();
        let rebuilt = fresh.full_eval(&perm).unwrap();
        assert!((via_updates - rebuilt).abs() < 1e-11);
    }

    #[test]
    fn exhaustive_beats_or_matches_canonical_identity() {
        let ds = toy_set();
        let model = blocks(4, 2, 2);
        let config = petf_config(SearchMode::Exhaustive, &ds);
        let result = search_petf(Base::Dft, &ds, &model, &config).unwrap();
        let identity = FrameSpec::canonical(Base::Dft, ds.elements.clone(), model.clone()).unwrap();
        let identity_obj = average_capacity(
            &construct_frame(&identity).unwrap(),
            &config.channel,
            &EvalMode::Exhaustive,
        )
        .unwrap()
        .mean;
        assert!(result.best_objective >= identity_obj - 1e-12);
        assert_eq!(result.best_spec, canonicalize(&result.best_spec));
        assert_eq!(result.evaluations, 105);
    }

    #[test]
    fn stochastic_matches_exhaustive_on_a_toy_problem() {
        let ds = toy_set();
        let model = blocks(4, 2, 2);
        let exhaustive =
            search_petf(Base::Dft, &ds, &model, &petf_config(SearchMode::Exhaustive, &ds)).unwrap();
        let mut config = petf_config(SearchMode::Stochastic, &ds);
        config.stochastic.iterations_per_restart = 150;
        let stochastic = search_petf(Base::Dft, &ds, &model, &config).unwrap();
        assert!(stochastic.best_objective <= exhaustive.best_objective + 1e-9);
        assert!(
            stochastic.best_objective >= exhaustive.best_objective - 1e-6,
            "descent-polished restarts should find the toy optimum: {} vs {}",
            stochastic.best_objective,
            exhaustive.best_objective
        );
    }

    #[test]
    fn stochastic_search_is_deterministic_in_the_seed() {
        let ds = toy_set();
        let model = blocks(4, 2, 2);
        let config = petf_config(SearchMode::Stochastic, &ds);
        let a = search_petf(Base::Dft, &ds, &model, &config).unwrap();
        let b = search_petf(Base::Dft, &ds, &model, &config).unwrap();
        assert_eq!(a.best_spec, b.best_spec);
        assert_eq!(a.best_objective, b.best_objective);
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.evaluations, b.evaluations);
    }

    #[test]
    fn traces_are_nondecreasing() {
        let ds = toy_set();
        let model = blocks(4, 2, 2);
        let mut config = petf_config(SearchMode::Stochastic, &ds);
        config.stochastic.restarts = 3;
        let result = search_petf(Base::Dft, &ds, &model, &config).unwrap();
        for w in result.trace.windows(2) {
            assert!(w[1].objective >= w[0].objective);
            assert!(w[1].iteration > w[0].iteration);
        }
    }

    #[test]
    fn single_column_blocks_short_circuit() {
        let ds = DifferenceSet::new(crate::frames::Group::Cyclic, 7, vec![0, 1, 3], Some(1)).unwrap();
        let model = blocks(7, 1, 3);
        let config = petf_config(SearchMode::Stochastic, &ds);
        let result = search_petf(Base::Dft, &ds, &model, &config).unwrap();
        assert_eq!(result.best_spec.perm, (0..7).collect::<Vec<_>>());
        assert_eq!(result.evaluations, 1);
    }

    #[test]
    fn oversized_exhaustive_requests_are_refused() {
        let ds = DifferenceSet::new(
            crate::frames::Group::Binary,
            64,
            (0..28).collect(),
            None,
        )
        .unwrap();
        let model = blocks(16, 4, 2);
        let config = petf_config(SearchMode::Exhaustive, &ds);
        let err = search_petf(Base::Hadamard, &ds, &model, &config).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)), "got {err:?}");
    }

    #[test]
    fn checkpoint_resume_reproduces_the_uninterrupted_run() {
        let ds = toy_set();
        let model = blocks(4, 2, 2);
        let mut config = petf_config(SearchMode::Stochastic, &ds);
        config.stochastic.restarts = 4;
        config.stochastic.iterations_per_restart = 40;

        let full = search_petf(Base::Dft, &ds, &model, &config).unwrap();

        let mut after_two: Option<Checkpoint> = None;
        let mut grab = |cp: &Checkpoint| {
            if cp.completed_restarts == 2 {
                after_two = Some(cp.clone());
            }
        };
        search_petf_resumable(Base::Dft, &ds, &model, &config, None, Some(&mut grab)).unwrap();
        let cp = after_two.expect("checkpoint after two restarts");
        assert!(cp.evaluations > 0);

        let resumed =
            search_petf_resumable(Base::Dft, &ds, &model, &config, Some(cp), None).unwrap();
        assert_eq!(resumed.best_spec, full.best_spec);
        assert_eq!(resumed.best_objective, full.best_objective);
        assert_eq!(resumed.evaluations, full.evaluations);
        assert_eq!(resumed.trace, full.trace);
    }

    #[test]
    fn checkpoints_from_other_configs_are_rejected() {
        let ds = toy_set();
        let model = blocks(4, 2, 2);
        let config = petf_config(SearchMode::Stochastic, &ds);
        let foreign = Checkpoint {
            config_hash: "0000000000000000".into(),
            completed_restarts: 1,
            evaluations: 10,
            best_objective: None,
            best_spec: None,
            best_restart: None,
            trace: Vec::new(),
        };
        let err =
            search_petf_resumable(Base::Dft, &ds, &model, &config, Some(foreign), None).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn joint_search_dominates_fixed_rows_on_a_toy_problem() {
        let model = blocks(4, 2, 2);
        let channel = ChannelParams::from_db(20.0).unwrap();
        let joint_config = SearchConfig {
            objective: Objective::AverageCapacity,
            mode: SearchMode::Exhaustive,
            stochastic: StochasticParams::default(),
            row_set_policy: RowSetPolicy::Free { initial_rows: None },
            channel,
        };
        let joint = search_butf(Base::Dft, 3, &model, &joint_config).unwrap();
        let ds = toy_set();
        let fixed =
            search_petf(Base::Dft, &ds, &model, &petf_config(SearchMode::Exhaustive, &ds)).unwrap();
        assert!(joint.best_objective >= fixed.best_objective - 1e-12);
        assert_eq!(joint.best_spec.rows.len(), 3);
    }

    #[test]
    fn butf_stochastic_row_moves_improve_over_the_initial_rows() {
        let model = blocks(4, 2, 2);
        let channel = ChannelParams::from_db(20.0).unwrap();
        let config = SearchConfig {
            objective: Objective::AverageCapacity,
            mode: SearchMode::Stochastic,
            stochastic: StochasticParams {
                restarts: 2,
                iterations_per_restart: 120,
                seed: 3,
                neighborhood: Neighborhood::Both,
            },
            row_set_policy: RowSetPolicy::Free { initial_rows: Some(vec![0, 1, 2]) },
            channel,
        };
        let result = search_butf(Base::Dft, 3, &model, &config).unwrap();
        let start = FrameSpec::canonical(Base::Dft, vec![0, 1, 2], model.clone()).unwrap();
        let start_obj = average_capacity(
            &construct_frame(&start).unwrap(),
            &channel,
            &EvalMode::Exhaustive,
        )
        .unwrap()
        .mean;
        assert!(result.best_objective >= start_obj - 1e-12);
    }

    #[test]
    fn policy_and_search_kind_must_agree() {
        let ds = toy_set();
        let model = blocks(4, 2, 2);
        let mut config = petf_config(SearchMode::Stochastic, &ds);
        config.row_set_policy = RowSetPolicy::Free { initial_rows: None };
        assert!(matches!(
            search_petf(Base::Dft, &ds, &model, &config),
            Err(Error::InvalidArgument(_))
        ));
        let config2 = petf_config(SearchMode::Stochastic, &ds);
        assert!(matches!(
            search_butf(Base::Dft, 3, &model, &config2),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn combination_iterator_is_lexicographic_and_complete() {
        let mut it = CombinationIter::new(5, 3);
        let mut all = Vec::new();
        while let Some(c) = it.next() {
            all.push(c.to_vec());
        }
        assert_eq!(all.len(), 10);
        assert_eq!(all.first().unwrap(), &vec![0, 1, 2]);
        assert_eq!(all.last().unwrap(), &vec![2, 3, 4]);
        let mut sorted = all.clone();
        sorted.sort();
        assert_eq!(all, sorted);
    }
}
