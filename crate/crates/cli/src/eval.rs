//! `eval`: capacity / outage / error-bound reports for frame files, either
//! at a single operating point or swept over SNR or beta^-1 into the
//! `x,series,value` curve format.

use std::f64::consts::LN_2;

use serde_json::json;

use blockframes::erasure::{BlockModel, EvalMode};
use blockframes::frames::Frame;
use blockframes::metrics::{average_capacity, capacity_outage, stc_error_bound, ChannelParams};
use blockframes::spectra::SpectralModel;
use blockframes::{Error, Result};

use crate::common::{
    self, csv_header, parse_eval_mode, parse_f64_list, parse_format, resolve_blocks,
    validate_label, Format, Stamp,
};
use crate::{Cli, EvalArgs};

struct Series {
    label: String,
    frame: Frame,
}

pub fn run(cli: &Cli, args: &EvalArgs) -> Result<()> {
    let format = parse_format(&cli.format)?;
    if !args.label.is_empty() && args.label.len() != args.frame.len() {
        return Err(Error::InvalidArgument(format!(
            "{} labels given for {} frames",
            args.label.len(),
            args.frame.len()
        )));
    }

    let first = blockframes::io::read_frame_file(&args.frame[0])?;
    let blocks = resolve_blocks(&first, args.blocks.as_deref(), args.active)?;

    let mut frames = Vec::new();
    let mut fingerprints = Vec::new();
    for (i, path) in args.frame.iter().enumerate() {
        let label = match args.label.get(i) {
            Some(l) => l.clone(),
            None => common::file_stem(path),
        };
        validate_label(&label)?;
        let (frame, _) = common::load_frame(path, &blocks)?;
        fingerprints.push(blockframes::io::fingerprint(&std::fs::read_to_string(path)?));
        common::warn_geometry(frame.m(), &blocks);
        frames.push(Series { label, frame });
    }

    let mode = parse_eval_mode(&args.eval_mode, args.samples, cli.seed, &blocks)?;
    let references = resolve_references(&args.reference)?;

    let config = json!({
        "command": "eval",
        "frames": fingerprints,
        "labels": frames.iter().map(|s| s.label.clone()).collect::<Vec<_>>(),
        "blocks": blocks,
        "snr_db": args.snr,
        "sweep": args.sweep,
        "from": args.from,
        "to": args.to,
        "step": args.step,
        "grid": args.grid,
        "metric": args.metric,
        "references": references,
        "outage_fraction": args.outage_fraction,
        "eval_mode": mode,
        "stc": args.stc,
        "per_selection": args.per_selection,
    });
    let stamp = common::stamp(&config, cli.seed);

    let fixed_snr = || {
        args.snr.ok_or_else(|| Error::InvalidArgument("this evaluation needs --snr DB".into()))
    };
    match args.sweep.as_deref() {
        None => {
            let snr_db = fixed_snr()?;
            let channel = ChannelParams::from_db(snr_db)?;
            point_reports(cli, args, format, &frames, &blocks, snr_db, &channel, &mode, &config, &stamp)
        }
        Some("snr") => sweep_snr(cli, args, format, &frames, &blocks, &mode, &references, &config, &stamp),
        Some("beta-inv") => {
            let channel = ChannelParams::from_db(fixed_snr()?)?;
            sweep_beta_inv(cli, args, format, &frames, &blocks, &channel, &mode, &references, &config, &stamp)
        }
        Some(other) => Err(Error::InvalidArgument(format!(
            "unknown sweep axis {other:?}, expected snr or beta-inv"
        ))),
    }
}

fn resolve_references(raw: &[String]) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for r in raw {
        match r.as_str() {
            "manova" | "mp" => {
                if !out.contains(r) {
                    out.push(r.clone());
                }
            }
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "unknown reference {r:?}, expected manova or mp"
                )))
            }
        }
    }
    Ok(out)
}

fn reference_model(kind: &str, k: usize, m: usize, n: usize) -> Result<SpectralModel> {
    let beta = k as f64 / m as f64;
    match kind {
        "manova" => SpectralModel::manova(beta, m as f64 / n as f64),
        _ => SpectralModel::marchenko_pastur(beta),
    }
}

/// K * E[log2(1 + SNR lambda)] under the model, point mass included.
fn reference_capacity(model: &SpectralModel, k: usize, channel: &ChannelParams) -> f64 {
    let snr = channel.snr_linear;
    k as f64 * model.integrate_with_mass(|l| (snr * l).ln_1p() / LN_2)
}

#[allow(clippy::too_many_arguments)]
fn point_reports(
    cli: &Cli,
    args: &EvalArgs,
    format: Format,
    frames: &[Series],
    blocks: &BlockModel,
    snr_db: f64,
    channel: &ChannelParams,
    mode: &EvalMode,
    config: &serde_json::Value,
    stamp: &Stamp,
) -> Result<()> {
    let mut artifacts = Vec::new();
    let mut csv_rows: Vec<(f64, String, f64)> = Vec::new();
    for series in frames {
        let report = average_capacity(&series.frame, channel, mode)?;
        let outage = capacity_outage(&report, args.outage_fraction)?;
        let stc = match args.stc {
            true => Some(stc_error_bound(&series.frame, channel, mode)?),
            false => None,
        };
        println!(
            "{}: mean capacity {:.6} bits (orthogonality bound {:.6}), outage@{} = {}",
            series.label, report.mean, report.orthogonality_bound, args.outage_fraction, outage
        );
        if let Some(stc) = &stc {
            println!(
                "{}: error bound {:.6e} (orthogonality bound {:.6e})",
                series.label, stc.bound_mean, stc.orthogonality_bound
            );
        }
        match format {
            Format::Json => {
                let mut body = json!({
                    "meta": stamp,
                    "config": config,
                    "series": series.label,
                    "mean_capacity": report.mean,
                    "orthogonality_bound": report.orthogonality_bound,
                    "outage": { format!("{}", args.outage_fraction): outage },
                    "selections": report.per_selection.len(),
                    "ratios": blocks.ratios(series.frame.m()),
                });
                if args.per_selection {
                    let detail: Vec<_> = report
                        .per_selection
                        .iter()
                        .map(|(sel, c)| json!({"blocks": sel.active(), "capacity": c}))
                        .collect();
                    body["per_selection"] = json!(detail);
                }
                if let Some(stc) = &stc {
                    body["stc"] = json!({
                        "bound_mean": stc.bound_mean,
                        "orthogonality_bound": stc.orthogonality_bound,
                    });
                }
                let path = cli.out_dir.join(format!("{}-eval.json", series.label));
                artifacts.push(common::write_json(&path, &body)?);
            }
            Format::Csv => {
                csv_rows.push((snr_db, format!("{}-capacity", series.label), report.mean));
                csv_rows.push((snr_db, format!("{}-outage", series.label), outage));
                if let Some(stc) = &stc {
                    csv_rows.push((snr_db, format!("{}-stc-bound", series.label), stc.bound_mean));
                }
            }
        }
    }
    if format == Format::Csv {
        let stem = args.out.clone().unwrap_or_else(|| "eval-points".into());
        let path = cli.out_dir.join(format!("{stem}.csv"));
        artifacts.push(common::write_text(&path, &curve_csv(stamp, &csv_rows))?);
        println!("wrote {}", path.display());
    }
    common::write_run_metadata(&cli.out_dir, "eval", stamp, &artifacts)
}

#[allow(clippy::too_many_arguments)]
fn sweep_snr(
    cli: &Cli,
    args: &EvalArgs,
    format: Format,
    frames: &[Series],
    blocks: &BlockModel,
    mode: &EvalMode,
    references: &[String],
    config: &serde_json::Value,
    stamp: &Stamp,
) -> Result<()> {
    let (Some(from), Some(to), Some(step)) = (args.from, args.to, args.step) else {
        return Err(Error::InvalidArgument("an snr sweep needs --from, --to, and --step".into()));
    };
    if !(step > 0.0) || to < from {
        return Err(Error::InvalidArgument(format!(
            "bad sweep range: from {from} to {to} step {step}"
        )));
    }
    if !matches!(args.metric.as_str(), "capacity" | "stc-bound") {
        return Err(Error::InvalidArgument(format!(
            "an snr sweep plots capacity or stc-bound, not {:?}",
            args.metric
        )));
    }
    if !references.is_empty() && args.metric != "capacity" {
        return Err(Error::InvalidArgument("reference curves exist only for capacity".into()));
    }

    let mut xs = Vec::new();
    let mut i = 0u64;
    loop {
        let x = from + i as f64 * step;
        if x > to + 1e-9 {
            break;
        }
        xs.push(x);
        i += 1;
    }

    let mut rows = Vec::new();
    for series in frames {
        for &x in &xs {
            let ch = ChannelParams::from_db(x)?;
            let value = match args.metric.as_str() {
                "capacity" => average_capacity(&series.frame, &ch, mode)?.mean,
                _ => stc_error_bound(&series.frame, &ch, mode)?.bound_mean,
            };
            rows.push((x, series.label.clone(), value));
        }
    }

    let k = blocks.active_columns();
    let n = blocks.total_columns();
    let mut geometries: Vec<usize> = frames.iter().map(|s| s.frame.m()).collect();
    geometries.sort_unstable();
    geometries.dedup();
    for kind in references {
        for &m in &geometries {
            let model = reference_model(kind, k, m, n)?;
            let label = match geometries.len() {
                1 => kind.clone(),
                _ => format!("{kind}-m{m}"),
            };
            for &x in &xs {
                let ch = ChannelParams::from_db(x)?;
                rows.push((x, label.clone(), reference_capacity(&model, k, &ch)));
            }
        }
    }

    let stem = args.out.clone().unwrap_or_else(|| "eval-snr".into());
    write_sweep(cli, args, format, stamp, config, &stem, "SNR [dB]", &args.metric, &rows)
}

#[allow(clippy::too_many_arguments)]
fn sweep_beta_inv(
    cli: &Cli,
    args: &EvalArgs,
    format: Format,
    frames: &[Series],
    blocks: &BlockModel,
    channel: &ChannelParams,
    mode: &EvalMode,
    references: &[String],
    config: &serde_json::Value,
    stamp: &Stamp,
) -> Result<()> {
    if !matches!(args.metric.as_str(), "capacity" | "outage") {
        return Err(Error::InvalidArgument(format!(
            "a beta-inv sweep plots capacity or outage, not {:?}",
            args.metric
        )));
    }
    if !references.is_empty() && args.metric != "capacity" {
        return Err(Error::InvalidArgument("reference curves exist only for capacity".into()));
    }
    let k = blocks.active_columns();
    let n = blocks.total_columns();

    let mut rows = Vec::new();
    for series in frames {
        let report = average_capacity(&series.frame, channel, mode)?;
        let value = match args.metric.as_str() {
            "capacity" => report.mean,
            _ => capacity_outage(&report, args.outage_fraction)?,
        };
        rows.push((series.frame.m() as f64 / k as f64, series.label.clone(), value));
    }

    // Reference grid: requested points, or wherever measurements landed.
    let grid = match &args.grid {
        Some(list) => parse_f64_list(list)?,
        None => {
            let mut xs: Vec<f64> = rows.iter().map(|r| r.0).collect();
            xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            xs.dedup();
            xs
        }
    };
    for kind in references {
        for &target in &grid {
            // M realizing the requested beta^-1, rounded; the recorded x is
            // the beta^-1 that M actually achieves.
            let m = (k as f64 * target).round() as i64;
            if m < 1 || m as usize >= n {
                eprintln!(
                    "skipping beta^-1 = {target}: M = {m} falls outside 1..{n} for K = {k}"
                );
                continue;
            }
            let m = m as usize;
            if k > m {
                eprintln!(
                    "warning: reference at beta^-1 = {target} has K = {k} > M = {m}; the law omits the rank-deficiency atom"
                );
            }
            let achieved = m as f64 / k as f64;
            let model = reference_model(kind, k, m, n)?;
            rows.push((achieved, kind.clone(), reference_capacity(&model, k, channel)));
        }
    }

    let stem = args.out.clone().unwrap_or_else(|| "eval-beta-inv".into());
    write_sweep(cli, args, format, stamp, config, &stem, "beta^-1", &args.metric, &rows)
}

/// Rows regrouped by series (first-appearance order) and sorted by x.
fn ordered_rows(rows: &[(f64, String, f64)]) -> Vec<(f64, String, f64)> {
    let mut series: Vec<&str> = Vec::new();
    for (_, s, _) in rows {
        if !series.iter().any(|t| t == s) {
            series.push(s);
        }
    }
    let mut out = Vec::with_capacity(rows.len());
    for s in series {
        let mut chunk: Vec<_> = rows.iter().filter(|(_, t, _)| t == s).cloned().collect();
        chunk.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        out.extend(chunk);
    }
    out
}

fn curve_csv(stamp: &Stamp, rows: &[(f64, String, f64)]) -> String {
    let mut text = csv_header(stamp);
    text.push_str("x,series,value\n");
    for (x, series, value) in ordered_rows(rows) {
        text.push_str(&format!("{x},{series},{value}\n"));
    }
    text
}

#[allow(clippy::too_many_arguments)]
fn write_sweep(
    cli: &Cli,
    args: &EvalArgs,
    format: Format,
    stamp: &Stamp,
    config: &serde_json::Value,
    stem: &str,
    xlabel: &str,
    ylabel: &str,
    rows: &[(f64, String, f64)],
) -> Result<()> {
    let mut artifacts = Vec::new();
    let csv_name = format!("{stem}.csv");
    let csv_path = cli.out_dir.join(&csv_name);
    artifacts.push(common::write_text(&csv_path, &curve_csv(stamp, rows))?);
    println!("wrote {}", csv_path.display());

    if format == Format::Json {
        let points: Vec<_> = ordered_rows(rows)
            .into_iter()
            .map(|(x, series, value)| json!({"x": x, "series": series, "value": value}))
            .collect();
        let body = json!({"meta": stamp, "config": config, "points": points});
        artifacts.push(common::write_json(&cli.out_dir.join(format!("{stem}.json")), &body)?);
    }
    if args.gnuplot {
        let path = cli.out_dir.join(format!("{stem}.gp"));
        artifacts.push(common::write_text(
            &path,
            &gnuplot_script(stamp, &csv_name, xlabel, ylabel, rows),
        )?);
        println!("wrote {}", path.display());
    }
    common::write_run_metadata(&cli.out_dir, "eval", stamp, &artifacts)
}

fn gnuplot_script(
    stamp: &Stamp,
    csv_name: &str,
    xlabel: &str,
    ylabel: &str,
    rows: &[(f64, String, f64)],
) -> String {
    let mut series: Vec<&str> = Vec::new();
    for (_, s, _) in rows {
        if !series.iter().any(|t| t == s) {
            series.push(s);
        }
    }
    let mut text = csv_header(stamp);
    text.push_str("set datafile separator ','\n");
    text.push_str(&format!("set xlabel '{xlabel}'\n"));
    text.push_str(&format!("set ylabel '{ylabel}'\n"));
    text.push_str("set key outside\n");
    let plots: Vec<String> = series
        .iter()
        .map(|s| {
            format!(
                "'{csv_name}' using 1:(stringcolumn(2) eq '{s}' ? $3 : NaN) title '{s}' with linespoints"
            )
        })
        .collect();
    text.push_str(&format!("plot \\\n  {}\n", plots.join(", \\\n  ")));
    text
}
