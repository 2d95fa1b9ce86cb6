//! `construct`: build a frame, write it, and report its correlations against
//! the Welch bounds.

use serde_json::json;

use blockframes::erasure::BlockModel;
use blockframes::frames::{
    construct_frame, squared_correlation_matrix, welch_bounds, FrameSpec,
};
use blockframes::io::write_frame;
use blockframes::{catalog, Error, Result};

use crate::common::{
    self, base_name, csv_header, load_catalog_or_bundled, parse_base, parse_blocks,
    parse_format, parse_index_list, Format,
};
use crate::{Cli, ConstructArgs};

pub fn run(cli: &Cli, args: &ConstructArgs) -> Result<()> {
    let format = parse_format(&cli.format)?;

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

    let (rows, base, default_stem) = match (&entry, &args.rows) {
        (Some(entry), None) => {
            let base = match &args.base {
                Some(b) => parse_base(b)?,
                None => entry.base,
            };
            (entry.difference_set.elements.clone(), base, entry.name.clone())
        }
        (None, Some(list)) => {
            let rows = parse_index_list(list)?;
            let base = parse_base(args.base.as_deref().ok_or_else(|| {
                Error::InvalidArgument("explicit --rows need --base dft|hadamard".into())
            })?)?;
            (rows, base, String::new())
        }
        _ => {
            return Err(Error::InvalidArgument(
                "construct needs a row source: --set <name> or --rows <list>".into(),
            ))
        }
    };

    // N comes from the blocks when given, else from the catalog set's group.
    let blocks = match (&args.blocks, &entry) {
        (Some(s), maybe_entry) => {
            let blocks = parse_blocks(s)?;
            if let Some(entry) = maybe_entry {
                let order = entry.difference_set.order;
                if blocks.total_columns() != order {
                    return Err(Error::InvalidArgument(format!(
                        "--blocks span N = {} but set {:?} lives in a group of order {order}",
                        blocks.total_columns(),
                        entry.name
                    )));
                }
            }
            blocks
        }
        (None, Some(entry)) => {
            let n = entry.difference_set.order;
            BlockModel::new(n, 1, n)?
        }
        (None, None) => {
            return Err(Error::InvalidArgument(
                "explicit --rows need --blocks NB:NV:NA to fix N".into(),
            ))
        }
    };

    let n = blocks.total_columns();
    let perm = match &args.perm {
        Some(list) => parse_index_list(list)?,
        None => (0..n).collect(),
    };

    let spec = FrameSpec::new(base, rows, perm, blocks)?;
    let frame = construct_frame(&spec)?;
    let m = frame.m();

    let wb = welch_bounds(n, m)?;
    let corr = squared_correlation_matrix(&frame);
    let mean = corr.mean_off_diagonal();
    let max = corr.max_off_diagonal();

    let config = json!({
        "command": "construct",
        "base": base_name(base),
        "rows": spec.rows,
        "perm": spec.perm,
        "blocks": frame.blocks(),
        "set": args.set,
    });
    let stamp = common::stamp(&config, cli.seed);

    let stem = args.out.clone().unwrap_or(default_stem);
    let stem = if stem.is_empty() { format!("frame-{}-n{n}-m{m}", base_name(base)) } else { stem };
    let frame_path = cli.out_dir.join(format!("{stem}.frame"));
    write_frame(&frame_path, &frame)?;

    let report_path = match format {
        Format::Json => {
            let report = json!({
                "meta": stamp,
                "config": config,
                "welch": {
                    "average_bound": wb.average_bound,
                    "epsilon_wb": wb.epsilon_wb,
                    "mean_off_diagonal": mean,
                    "max_off_diagonal": max,
                },
            });
            common::write_json(&cli.out_dir.join(format!("{stem}-welch.json")), &report)?
        }
        Format::Csv => {
            let mut text = csv_header(&stamp);
            text.push_str("metric,value\n");
            text.push_str(&format!("average_bound,{}\n", wb.average_bound));
            text.push_str(&format!("epsilon_wb,{}\n", wb.epsilon_wb));
            text.push_str(&format!("mean_off_diagonal,{mean}\n"));
            text.push_str(&format!("max_off_diagonal,{max}\n"));
            common::write_text(&cli.out_dir.join(format!("{stem}-welch.csv")), &text)?
        }
    };

    println!("wrote {}", frame_path.display());
    println!(
        "N={n} M={m}: mean |c|^2 = {mean:.6} (Welch average bound {:.6}), max = {max:.6} (equiangular bound {:.6})",
        wb.average_bound, wb.epsilon_wb
    );
    common::write_run_metadata(&cli.out_dir, "construct", &stamp, &[frame_path, report_path])?;
    Ok(())
}
