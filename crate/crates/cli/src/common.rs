//! Shared plumbing: flag parsing, config-file expansion, artifact stamping,
//! and frame loading.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use blockframes::erasure::{BlockModel, EvalMode};
use blockframes::frames::{Base, Frame, Group};
use blockframes::io::{self, FrameFile};
use blockframes::{catalog, Error, Result};

/// Exit-code contract: 2 validation, 3 infeasible, 4 numerical.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_) | Error::Validation(_) | Error::Parse(_) | Error::Io(_) => 2,
        Error::Infeasible(_) => 3,
        Error::Numerical(_) => 4,
    }
}

/// Splice `key = value` lines from a `--config` file into the argument list.
///
/// Explicit flags win: a key already present anywhere in the arguments is
/// left alone. Boolean values splice as bare flags. Appending at the end is
/// safe because every global flag is accepted after the subcommand too.
pub fn expand_config(argv: Vec<String>) -> Result<Vec<String>> {
    let mut path = None;
    let mut iter = argv.iter().enumerate();
    while let Some((i, a)) = iter.next() {
        if a == "--config" {
            path = argv.get(i + 1).cloned();
            if path.is_none() {
                return Err(Error::InvalidArgument("--config needs a file path".into()));
            }
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    let Some(path) = path else { return Ok(argv) };
    let text = fs::read_to_string(&path)
        .map_err(|e| Error::InvalidArgument(format!("config file {path}: {e}")))?;
    let mut out = argv.clone();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Parse(format!("{path}:{}: expected key = value", lineno + 1)));
        };
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if key.is_empty() || value.is_empty() {
            return Err(Error::Parse(format!("{path}:{}: empty key or value", lineno + 1)));
        }
        if key == "config" {
            return Err(Error::Parse(format!("{path}:{}: config files cannot nest", lineno + 1)));
        }
        let flag = format!("--{key}");
        let given = argv.iter().any(|a| *a == flag || a.starts_with(&format!("{flag}=")));
        if given {
            continue;
        }
        match value {
            "true" => out.push(flag),
            "false" => {}
            _ => {
                out.push(flag);
                out.push(value.to_string());
            }
        }
    }
    Ok(out)
}

pub fn parse_base(s: &str) -> Result<Base> {
    match s {
        "dft" => Ok(Base::Dft),
        "hadamard" => Ok(Base::Hadamard),
        _ => Err(Error::InvalidArgument(format!("unknown base {s:?}, expected dft or hadamard"))),
    }
}

pub fn base_name(base: Base) -> &'static str {
    match base {
        Base::Dft => "dft",
        Base::Hadamard => "hadamard",
    }
}

pub fn parse_group(s: &str) -> Result<Group> {
    match s {
        "cyclic" => Ok(Group::Cyclic),
        "binary" => Ok(Group::Binary),
        _ => Err(Error::InvalidArgument(format!("unknown group {s:?}, expected cyclic or binary"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

pub fn parse_format(s: &str) -> Result<Format> {
    match s {
        "json" => Ok(Format::Json),
        "csv" => Ok(Format::Csv),
        _ => Err(Error::InvalidArgument(format!("unknown format {s:?}, expected json or csv"))),
    }
}

/// NB:NV:NA.
pub fn parse_blocks(s: &str) -> Result<BlockModel> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::InvalidArgument(format!(
            "block model {s:?} must be NB:NV:NA, for example 4:4:2"
        )));
    }
    let mut nums = [0usize; 3];
    for (slot, part) in nums.iter_mut().zip(&parts) {
        *slot = part.trim().parse().map_err(|_| {
            Error::InvalidArgument(format!("block model {s:?} has a non-integer component {part:?}"))
        })?;
    }
    BlockModel::new(nums[0], nums[1], nums[2])
}

pub fn parse_index_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("{p:?} is not a nonnegative integer")))
        })
        .collect()
}

pub fn parse_f64_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("{p:?} is not a number")))
        })
        .collect()
}

/// Map the mode flag onto the erasure module's evaluation switch.
pub fn parse_eval_mode(mode: &str, samples: usize, seed: u64, model: &BlockModel) -> Result<EvalMode> {
    match mode {
        "auto" => Ok(EvalMode::auto(model, samples, seed)),
        "exhaustive" => Ok(EvalMode::Exhaustive),
        "mc" | "monte-carlo" => Ok(EvalMode::MonteCarlo { samples, seed }),
        _ => Err(Error::InvalidArgument(format!(
            "unknown eval mode {mode:?}, expected auto, exhaustive, or mc"
        ))),
    }
}

pub fn load_catalog_or_bundled(path: Option<&Path>) -> Result<Vec<catalog::CatalogEntry>> {
    match path {
        Some(p) => catalog::load_catalog(p),
        None => Ok(catalog::bundled()),
    }
}

/// Stamp embedded in every artifact body. Deliberately timestamp-free so
/// reruns of the same command are byte-identical; wall-clock time lives in
/// the per-run metadata file instead.
#[derive(Debug, Clone, Serialize)]
pub struct Stamp {
    pub toolkit: &'static str,
    pub version: &'static str,
    pub config_hash: String,
    pub seed: u64,
}

pub fn stamp<T: Serialize>(config: &T, seed: u64) -> Stamp {
    Stamp {
        toolkit: "blockframes",
        version: env!("CARGO_PKG_VERSION"),
        config_hash: io::fingerprint(config),
        seed,
    }
}

pub fn csv_header(stamp: &Stamp) -> String {
    format!(
        "# blockframes {} config={} seed={}\n",
        stamp.version, stamp.config_hash, stamp.seed
    )
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<PathBuf> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Numerical(format!("serializing {}: {e}", path.display())))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(path.to_path_buf())
}

pub fn write_text(path: &Path, text: &str) -> Result<PathBuf> {
    fs::write(path, text)?;
    Ok(path.to_path_buf())
}

/// The one artifact that differs between reruns: command identity plus
/// wall-clock seconds, next to (not inside) the reproducible bodies.
pub fn write_run_metadata(
    out_dir: &Path,
    command: &str,
    stamp: &Stamp,
    artifacts: &[PathBuf],
) -> Result<()> {
    let unix_seconds = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let listed: Vec<String> = artifacts.iter().map(|p| p.display().to_string()).collect();
    let value = json!({
        "meta": stamp,
        "command": command,
        "unix_seconds": unix_seconds,
        "artifacts": listed,
    });
    write_json(&out_dir.join(format!("{command}-run.json")), &value)?;
    Ok(())
}

/// Block model for an evaluation: either the full override, or N_A layered
/// over the file's stored block count.
pub fn resolve_blocks(
    file: &FrameFile,
    blocks_flag: Option<&str>,
    active: Option<usize>,
) -> Result<BlockModel> {
    match (blocks_flag, active) {
        (Some(_), Some(_)) => Err(Error::InvalidArgument(
            "give either --blocks or --active, not both".into(),
        )),
        (Some(s), None) => parse_blocks(s),
        (None, Some(na)) => {
            if file.nb == 0 || file.n % file.nb != 0 {
                return Err(Error::Validation(format!(
                    "file block count {} does not divide N = {}",
                    file.nb, file.n
                )));
            }
            BlockModel::new(file.nb, file.n / file.nb, na)
        }
        (None, None) => Err(Error::InvalidArgument(
            "an evaluation needs --active N_A or --blocks NB:NV:NA".into(),
        )),
    }
}

pub fn load_frame(path: &Path, blocks: &BlockModel) -> Result<(Frame, FrameFile)> {
    let file = io::read_frame_file(path)?;
    let frame = io::frame_from_file(&file, Some(blocks.clone()))?;
    Ok((frame, file))
}

/// Degenerate-geometry notes that do not stop an evaluation.
pub fn warn_geometry(m: usize, blocks: &BlockModel) {
    let k = blocks.active_columns();
    if k > m {
        eprintln!(
            "warning: K = {k} surviving columns exceed M = {m}; subframe Grams are rank deficient"
        );
    }
    if blocks.is_degenerate() {
        eprintln!("warning: one active block per realization; structure metrics are degenerate");
    }
}

pub fn file_stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "frame".into())
}

/// Series labels feed unquoted CSV and gnuplot strings.
pub fn validate_label(label: &str) -> Result<()> {
    if label.is_empty() || label.contains(',') || label.contains(char::is_whitespace) {
        return Err(Error::InvalidArgument(format!(
            "series label {label:?} must be nonempty without commas or whitespace"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn argv(args: &[&str]) -> Vec<String> {
        args.iter().map(|s| s.to_string()).collect()
    }

    fn config_file(contents: &str) -> tempfile::NamedTempFile {
        let file = tempfile::NamedTempFile::new().unwrap();
        fs::write(file.path(), contents).unwrap();
        file
    }

    #[test]
    fn expand_config_without_flag_passes_arguments_through() {
        let args = argv(&["bf", "eval", "--snr", "10"]);
        assert_eq!(expand_config(args.clone()).unwrap(), args);
    }

    #[test]
    fn expand_config_splices_pairs_and_normalizes_underscores() {
        let file = config_file("# comment\nsnr = 10\nper_selection = true\nstc = false\n");
        let args = argv(&["bf", "--config", file.path().to_str().unwrap(), "eval"]);
        let out = expand_config(args).unwrap();
        assert_eq!(out[4..], argv(&["--snr", "10", "--per-selection"]));
    }

    #[test]
    fn explicit_flags_beat_config_values() {
        let file = config_file("snr = 10\nblocks = 4:4:2\n");
        let args = argv(&["bf", "--config", file.path().to_str().unwrap(), "eval", "--snr", "30"]);
        let out = expand_config(args).unwrap();
        assert!(!out.contains(&"10".to_string()));
        assert_eq!(out[6..], argv(&["--blocks", "4:4:2"]));
    }

    #[test]
    fn config_files_cannot_nest() {
        let file = config_file("config = other.conf\n");
        let args = argv(&["bf", "--config", file.path().to_str().unwrap()]);
        assert!(matches!(expand_config(args), Err(Error::Parse(_))));
    }

    #[test]
    fn config_lines_need_key_and_value() {
        for bad in ["just-a-word\n", "= 3\n", "key =\n"] {
            let file = config_file(bad);
            let args = argv(&["bf", "--config", file.path().to_str().unwrap()]);
            assert!(matches!(expand_config(args), Err(Error::Parse(_))), "line {bad:?}");
        }
    }

    #[test]
    fn blocks_parse_and_reject_malformed_triples() {
        let blocks = parse_blocks("4:4:2").unwrap();
        assert_eq!(
            (blocks.num_blocks(), blocks.block_size(), blocks.active_blocks()),
            (4, 4, 2)
        );
        assert!(parse_blocks("4:4").is_err());
        assert!(parse_blocks("4:x:2").is_err());
        assert!(parse_blocks("4:4:5").is_err());
    }

    #[test]
    fn labels_reject_csv_separators() {
        assert!(validate_label("ok-label").is_ok());
        assert!(validate_label("").is_err());
        assert!(validate_label("a,b").is_err());
        assert!(validate_label("a b").is_err());
    }

    #[test]
    fn exit_codes_follow_the_error_taxonomy() {
        assert_eq!(exit_code(&Error::InvalidArgument(String::new())), 2);
        assert_eq!(exit_code(&Error::Validation(String::new())), 2);
        assert_eq!(exit_code(&Error::Infeasible(String::new())), 3);
        assert_eq!(exit_code(&Error::Numerical(String::new())), 4);
    }

    #[test]
    fn stamps_depend_on_config_but_not_on_when_they_run() {
        let a = stamp(&serde_json::json!({"snr": 10}), 1);
        let b = stamp(&serde_json::json!({"snr": 10}), 1);
        let c = stamp(&serde_json::json!({"snr": 20}), 1);
        assert_eq!(a.config_hash, b.config_hash);
        assert_ne!(a.config_hash, c.config_hash);
    }
}
