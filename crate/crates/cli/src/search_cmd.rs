//! `search`: optimize a frame for mean capacity under the block model,
//! either over column permutations of a fixed row set or jointly over rows
//! and permutation, with optional checkpointing.

use std::fs;

use serde_json::json;

use blockframes::frames::{construct_frame, DifferenceSet};
use blockframes::io::write_frame;
use blockframes::metrics::ChannelParams;
use blockframes::search::{
    search_butf_resumable, search_petf_resumable, Checkpoint, Neighborhood, Objective,
    RowSetPolicy, SearchConfig, SearchMode, StochasticParams,
};
use blockframes::{catalog, Error, Result};

use crate::common::{
    self, base_name, csv_header, load_catalog_or_bundled, parse_base, parse_blocks,
    parse_format, parse_index_list, Format,
};
use crate::{Cli, SearchArgs};

enum Kind {
    Petf(DifferenceSet),
    Butf(usize),
}

pub fn run(cli: &Cli, args: &SearchArgs) -> Result<()> {
    let format = parse_format(&cli.format)?;
    let blocks = parse_blocks(&args.blocks)?;
    let n = blocks.total_columns();
    let channel = ChannelParams::from_db(args.snr)?;

    let entry = match &args.set {
        Some(name) => {
            let entries = load_catalog_or_bundled(args.catalog.as_deref())?;
            Some(
                catalog::find_entry(&entries, name)
                    .ok_or_else(|| Error::InvalidArgument(format!("no catalog entry named {name:?}")))?
                    .clone(),
            )
        }
        None => None,
    };

    let base = match (&args.base, &entry) {
        (Some(b), _) => parse_base(b)?,
        (None, Some(entry)) => entry.base,
        (None, None) => {
            return Err(Error::InvalidArgument(
                "search needs --base dft|hadamard (or a --set that implies one)".into(),
            ))
        }
    };

    let seed_rows = match (&entry, &args.rows) {
        (Some(entry), None) => {
            if entry.difference_set.order != n {
                return Err(Error::InvalidArgument(format!(
                    "--blocks span N = {n} but set {:?} lives in a group of order {}",
                    entry.name, entry.difference_set.order
                )));
            }
            Some(entry.difference_set.elements.clone())
        }
        (None, Some(list)) => Some(parse_index_list(list)?),
        (None, None) => None,
        (Some(_), Some(_)) => unreachable!("clap rejects --set with --rows"),
    };

    let kind = match args.free_rows {
        false => {
            let rows = seed_rows.clone().ok_or_else(|| {
                Error::InvalidArgument(
                    "a fixed-row search needs --set <name> or --rows <list>".into(),
                )
            })?;
            Kind::Petf(DifferenceSet::new(base.natural_group(), n, rows, None)?)
        }
        true => {
            let m = match (args.m, &seed_rows) {
                (Some(m), _) => m,
                (None, Some(rows)) => rows.len(),
                (None, None) => {
                    return Err(Error::InvalidArgument(
                        "a free-row search needs --m M or an initial row set".into(),
                    ))
                }
            };
            Kind::Butf(m)
        }
    };

    let mode = match args.search_mode.as_str() {
        "stochastic" => SearchMode::Stochastic,
        "exhaustive" => SearchMode::Exhaustive,
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown search mode {other:?}, expected stochastic or exhaustive"
            )))
        }
    };
    let neighborhood = match args.neighborhood.as_str() {
        "column-swap" => Neighborhood::ColumnSwap,
        "row-swap" => Neighborhood::RowSwap,
        "both" => Neighborhood::Both,
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown neighborhood {other:?}, expected column-swap, row-swap, or both"
            )))
        }
    };

    let row_set_policy = match &kind {
        Kind::Petf(ds) => RowSetPolicy::Fixed(ds.clone()),
        Kind::Butf(_) => RowSetPolicy::Free { initial_rows: seed_rows.clone() },
    };
    let config = SearchConfig {
        objective: Objective::AverageCapacity,
        mode,
        stochastic: StochasticParams {
            restarts: args.restarts,
            iterations_per_restart: args.iterations,
            seed: cli.seed,
            neighborhood,
        },
        row_set_policy,
        channel,
    };

    let resume_cp = match (args.resume, &args.checkpoint) {
        (true, Some(path)) => {
            let text = fs::read_to_string(path)?;
            Some(serde_json::from_str::<Checkpoint>(&text).map_err(|e| {
                Error::Parse(format!("checkpoint {}: {e}", path.display()))
            })?)
        }
        (true, None) => {
            return Err(Error::InvalidArgument("--resume needs --checkpoint <file>".into()))
        }
        _ => None,
    };

    let total_restarts = args.restarts;
    let mut sink = |cp: &Checkpoint| {
        if let Some(path) = &args.checkpoint {
            match serde_json::to_string_pretty(cp) {
                Ok(mut text) => {
                    text.push('\n');
                    if let Err(e) = fs::write(path, text) {
                        eprintln!("warning: checkpoint write failed: {e}");
                    }
                }
                Err(e) => eprintln!("warning: checkpoint serialize failed: {e}"),
            }
        }
        let best = match cp.best_objective {
            Some(b) => format!("{b:.6}"),
            None => "-".into(),
        };
        eprintln!(
            "restart {}/{total_restarts}: best {best} after {} evaluations",
            cp.completed_restarts, cp.evaluations
        );
    };
    let sink_opt: Option<&mut dyn FnMut(&Checkpoint)> = match args.checkpoint {
        Some(_) => Some(&mut sink),
        None => None,
    };

    let result = match &kind {
        Kind::Petf(ds) => search_petf_resumable(base, ds, &blocks, &config, resume_cp, sink_opt)?,
        Kind::Butf(m) => search_butf_resumable(base, *m, &blocks, &config, resume_cp, sink_opt)?,
    };

    let kind_name = match &kind {
        Kind::Petf(_) => "petf",
        Kind::Butf(_) => "butf",
    };
    let m = result.best_spec.rows.len();
    // Checkpoint/resume paths stay out of the hash: a resumed run finishing
    // the same restarts must stamp identically to an uninterrupted one.
    let config_json = json!({
        "command": "search",
        "kind": kind_name,
        "base": base_name(base),
        "rows": seed_rows,
        "m": m,
        "blocks": blocks,
        "snr_db": args.snr,
        "mode": mode,
        "restarts": args.restarts,
        "iterations": args.iterations,
        "neighborhood": neighborhood,
    });
    let stamp = common::stamp(&config_json, cli.seed);
    let stem = args
        .out
        .clone()
        .unwrap_or_else(|| format!("search-{kind_name}-{}-n{n}-m{m}", base_name(base)));

    let mut artifacts = Vec::new();
    let frame = construct_frame(&result.best_spec)?;
    let frame_path = cli.out_dir.join(format!("{stem}.frame"));
    write_frame(&frame_path, &frame)?;
    artifacts.push(frame_path.clone());

    let mut trace = csv_header(&stamp);
    trace.push_str("iteration,objective\n");
    for point in &result.trace {
        trace.push_str(&format!("{},{}\n", point.iteration, point.objective));
    }
    let trace_path = cli.out_dir.join(format!("{stem}-trace.csv"));
    artifacts.push(common::write_text(&trace_path, &trace)?);

    match format {
        Format::Json => {
            let body = json!({"meta": stamp, "config": config_json, "result": result});
            artifacts.push(common::write_json(&cli.out_dir.join(format!("{stem}.json")), &body)?);
        }
        Format::Csv => {
            let mut text = csv_header(&stamp);
            text.push_str("metric,value\n");
            text.push_str(&format!("best_objective,{}\n", result.best_objective));
            text.push_str(&format!("evaluations,{}\n", result.evaluations));
            artifacts.push(common::write_text(
                &cli.out_dir.join(format!("{stem}-result.csv")),
                &text,
            )?);
        }
    }

    println!("wrote {}", frame_path.display());
    println!(
        "best objective {:.6} bits after {} evaluations; rows {:?}",
        result.best_objective, result.evaluations, result.best_spec.rows
    );
    common::write_run_metadata(&cli.out_dir, "search", &stamp, &artifacts)
}
