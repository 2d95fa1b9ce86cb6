//! Bundled difference sets and brute-force discovery of new ones.
//!
//! The catalog is versioned JSON. Exact entries carry a claimed lambda and
//! are re-verified on every load; sets flagged `almost` make no exactness
//! claim (their achieved max squared correlation is recorded in the notes)
//! and only get structural checks.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::frames::{verify_difference_set, Base, DifferenceSet, Group};
use crate::search::CombinationIter;
use crate::{Error, Result};

/// The catalog shipped with the library.
pub const BUNDLED_CATALOG: &str = include_str!("catalog.json");

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CatalogEntry {
    pub name: String,
    pub difference_set: DifferenceSet,
    pub base: Base,
    /// Near set: no exact lambda, max squared correlation noted instead.
    pub almost: bool,
    pub notes: String,
    pub provenance: String,
}

#[derive(Deserialize)]
struct RawCatalog {
    version: u32,
    entries: Vec<RawEntry>,
}

#[derive(Deserialize)]
struct RawEntry {
    name: String,
    group: Group,
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "M")]
    m: usize,
    lambda: Option<usize>,
    elements: Vec<usize>,
    base: Base,
    almost: bool,
    provenance: String,
    #[serde(default)]
    notes: String,
}

/// Line of the entry's name field in the raw text, for error messages.
fn entry_line(text: &str, name: &str) -> Option<usize> {
    let needle = format!("\"{name}\"");
    text.lines().position(|l| l.contains(&needle)).map(|i| i + 1)
}

fn entry_error(text: &str, name: &str, msg: String) -> Error {
    match entry_line(text, name) {
        Some(line) => Error::Parse(format!("line {line}: entry \"{name}\": {msg}")),
        None => Error::Parse(format!("entry \"{name}\": {msg}")),
    }
}

pub fn parse_catalog(text: &str) -> Result<Vec<CatalogEntry>> {
    let raw: RawCatalog = serde_json::from_str(text)
        .map_err(|e| Error::Parse(format!("catalog JSON: {e}")))?;
    if raw.version != 1 {
        return Err(Error::Parse(format!("unsupported catalog version {}", raw.version)));
    }
    let mut entries = Vec::with_capacity(raw.entries.len());
    let mut names = HashSet::new();
    for raw_entry in raw.entries {
        let name = raw_entry.name.clone();
        if !names.insert(name.clone()) {
            return Err(entry_error(text, &name, "duplicate name".into()));
        }
        if raw_entry.elements.len() != raw_entry.m {
            return Err(entry_error(
                text,
                &name,
                format!("M = {} but {} elements listed", raw_entry.m, raw_entry.elements.len()),
            ));
        }
        if raw_entry.base.natural_group() != raw_entry.group {
            return Err(entry_error(
                text,
                &name,
                "base and group do not match (dft pairs with cyclic, hadamard with binary)".into(),
            ));
        }
        let ds = DifferenceSet::new(raw_entry.group, raw_entry.n, raw_entry.elements, raw_entry.lambda)
            .map_err(|e| entry_error(text, &name, e.to_string()))?;
        if raw_entry.almost {
            if ds.lambda.is_some() {
                return Err(entry_error(
                    text,
                    &name,
                    "almost sets must not claim a lambda".into(),
                ));
            }
        } else {
            let claimed = ds.lambda.ok_or_else(|| {
                entry_error(text, &name, "exact sets must claim a lambda".into())
            })?;
            let report = verify_difference_set(&ds);
            if !report.is_difference_set || report.lambda != Some(claimed) {
                return Err(entry_error(
                    text,
                    &name,
                    format!(
                        "claimed lambda {claimed} but difference counting gives {}",
                        match report.lambda {
                            Some(l) if report.is_difference_set => l.to_string(),
                            Some(l) => format!("{l} (and the size condition fails)"),
                            None => "non-uniform multiplicities".to_string(),
                        }
                    ),
                ));
            }
        }
        entries.push(CatalogEntry {
            name,
            difference_set: ds,
            base: raw_entry.base,
            almost: raw_entry.almost,
            notes: raw_entry.notes,
            provenance: raw_entry.provenance,
        });
    }
    Ok(entries)
}

pub fn load_catalog(path: &Path) -> Result<Vec<CatalogEntry>> {
    let text = std::fs::read_to_string(path)?;
    parse_catalog(&text).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// The bundled catalog; its validity is enforced by tests, so parsing here
/// cannot fail in a released build.
pub fn bundled() -> Vec<CatalogEntry> {
    parse_catalog(BUNDLED_CATALOG).expect("bundled catalog validates")
}

pub fn find_entry<'a>(entries: &'a [CatalogEntry], name: &str) -> Option<&'a CatalogEntry> {
    entries.iter().find(|e| e.name == name)
}

/// Smallest translate of the set containing 0, across all translations that
/// map a member to 0; two sets are translation-equivalent exactly when these
/// agree.
pub fn translation_canonical(ds: &DifferenceSet) -> Vec<usize> {
    let mut best: Option<Vec<usize>> = None;
    for &e in &ds.elements {
        let mut shifted: Vec<usize> =
            ds.elements.iter().map(|&x| ds.difference(x, e)).collect();
        shifted.sort_unstable();
        if best.as_ref().map_or(true, |b| &shifted < b) {
            best = Some(shifted);
        }
    }
    best.unwrap_or_default()
}

/// Result of a difference-set hunt: either found sets, or the reason the
/// size cannot carry any.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FindOutcome {
    pub sets: Vec<DifferenceSet>,
    pub reason: Option<String>,
}

/// Exhaustively enumerate all (N, M) difference sets of a group, one
/// representative per translation class (complements are not deduplicated).
/// Every candidate is certified by full difference counting.
pub fn find_difference_sets(group: Group, n: usize, m: usize) -> Result<FindOutcome> {
    if n > 32 {
        return Err(Error::Infeasible(format!(
            "exhaustive subset search is limited to N <= 32, got N = {n}"
        )));
    }
    if group == Group::Binary && !n.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "binary group order must be a power of two, got {n}"
        )));
    }
    if m < 2 || m >= n {
        return Err(Error::InvalidArgument(format!(
            "set size {m} must satisfy 2 <= M < N = {n}"
        )));
    }
    let pairs = m * (m - 1);
    if pairs % (n - 1) != 0 {
        return Ok(FindOutcome {
            sets: Vec::new(),
            reason: Some(format!(
                "lambda = M(M-1)/(N-1) = {pairs}/{} is not an integer, so no (N={n}, M={m}) difference set exists",
                n - 1
            )),
        });
    }
    let lambda = pairs / (n - 1);

    // Every translation class has a representative containing 0, so it is
    // enough to scan subsets {0} + (M-1 of 1..N).
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut sets = Vec::new();
    let mut iter = CombinationIter::new(n - 1, m - 1);
    while let Some(tail) = iter.next() {
        let mut elements = Vec::with_capacity(m);
        elements.push(0);
        elements.extend(tail.iter().map(|&x| x + 1));
        let candidate = DifferenceSet::new(group, n, elements, Some(lambda))?;
        let report = verify_difference_set(&candidate);
        if report.is_difference_set && report.lambda == Some(lambda) {
            let canon = translation_canonical(&candidate);
            if seen.insert(canon.clone()) {
                sets.push(DifferenceSet::new(group, n, canon, Some(lambda))?);
            }
        }
    }
    sets.sort_by(|a, b| a.elements.cmp(&b.elements));
    Ok(FindOutcome { sets, reason: None })
}
