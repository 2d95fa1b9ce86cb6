//! `spectrum`: pooled subframe eigenvalue histograms with optional limiting
//! law comparison (KL divergence plus per-bin model masses).

use serde_json::json;

use blockframes::spectra::{empirical_spectrum, kl_divergence, ModelKind, SpectralModel};
use blockframes::{Error, Result};

use crate::common::{self, csv_header, parse_eval_mode, parse_format, resolve_blocks, Format};
use crate::{Cli, SpectrumArgs};

pub fn run(cli: &Cli, args: &SpectrumArgs) -> Result<()> {
    let format = parse_format(&cli.format)?;
    if args.bins == 1 {
        eprintln!("warning: one bin flattens the spectrum; any model matches it exactly");
    }

    let file = blockframes::io::read_frame_file(&args.frame)?;
    let blocks = resolve_blocks(&file, args.blocks.as_deref(), args.active)?;
    let (frame, _) = common::load_frame(&args.frame, &blocks)?;
    common::warn_geometry(frame.m(), &blocks);
    let mode = parse_eval_mode(&args.eval_mode, args.samples, cli.seed, &blocks)?;

    let ratios = blocks.ratios(frame.m());
    let model = match args.model.as_str() {
        "manova" => Some(SpectralModel::manova(ratios.beta, ratios.gamma)?),
        "mp" => Some(SpectralModel::marchenko_pastur(ratios.beta)?),
        "none" => None,
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown model {other:?}, expected manova, mp, or none"
            )))
        }
    };

    let mut spectrum = empirical_spectrum(&frame, &mode, args.bins)?;
    if let (Some(model), false) = (&model, args.raw_range) {
        // Shared bin range makes the histogram comparable against the law.
        spectrum = spectrum.rebinned(args.bins, Some(model.support.1))?;
    }
    let kl = model.as_ref().map(|m| kl_divergence(&spectrum, m));

    let config = json!({
        "command": "spectrum",
        "frame": blockframes::io::fingerprint(&std::fs::read_to_string(&args.frame)?),
        "blocks": blocks,
        "bins": args.bins,
        "model": args.model,
        "raw_range": args.raw_range,
        "eigenvalues": args.eigenvalues,
        "eval_mode": mode,
    });
    let stamp = common::stamp(&config, cli.seed);
    let stem = args
        .out
        .clone()
        .unwrap_or_else(|| format!("{}-spectrum", common::file_stem(&args.frame)));

    let mut artifacts = Vec::new();

    let mut csv = csv_header(&stamp);
    match &model {
        Some(m) => {
            csv.push_str("bin_left,bin_right,empirical,model\n");
            let h = &spectrum.histogram;
            let bins = h.masses.len();
            for b in 0..bins {
                let q = m.bin_probability(h.edges[b], h.edges[b + 1], b == bins - 1);
                csv.push_str(&format!("{},{},{},{q}\n", h.edges[b], h.edges[b + 1], h.masses[b]));
            }
        }
        None => {
            csv.push_str("bin_left,bin_right,empirical\n");
            let h = &spectrum.histogram;
            for b in 0..h.masses.len() {
                csv.push_str(&format!("{},{},{}\n", h.edges[b], h.edges[b + 1], h.masses[b]));
            }
        }
    }
    let csv_path = cli.out_dir.join(format!("{stem}.csv"));
    artifacts.push(common::write_text(&csv_path, &csv)?);
    println!("wrote {}", csv_path.display());

    if args.eigenvalues {
        let per_selection = spectrum.eigenvalues.len() / spectrum.selections.max(1);
        let mut csv = csv_header(&stamp);
        csv.push_str("selection_id,eig_index,lambda\n");
        for (i, lambda) in spectrum.eigenvalues.iter().enumerate() {
            csv.push_str(&format!("{},{},{lambda}\n", i / per_selection, i % per_selection));
        }
        let path = cli.out_dir.join(format!("{stem}-eigenvalues.csv"));
        artifacts.push(common::write_text(&path, &csv)?);
        println!("wrote {}", path.display());
    }

    if format == Format::Json {
        let body = json!({
            "meta": stamp,
            "config": config,
            "selections": spectrum.selections,
            "ratios": ratios,
            "model": model,
            "kl_divergence": kl,
            "histogram": spectrum.histogram,
        });
        let path = cli.out_dir.join(format!("{stem}.json"));
        artifacts.push(common::write_json(&path, &body)?);
        println!("wrote {}", path.display());
    }

    match (kl, &model) {
        (Some(kl), Some(m)) => {
            let kind = match m.kind {
                ModelKind::Manova => "manova",
                ModelKind::MarchenkoPastur => "marchenko-pastur",
            };
            println!(
                "{} selections pooled; KL(empirical || {kind}) = {kl:.6}",
                spectrum.selections
            );
        }
        _ => println!("{} selections pooled", spectrum.selections),
    }
    common::write_run_metadata(&cli.out_dir, "spectrum", &stamp, &artifacts)
}
