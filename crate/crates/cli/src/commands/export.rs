//! `export`: checkpoint → synthesis bases and analysis filters, each as a
//! PGM grid and a raw matrix.

use std::time::Instant;

use infomax::analyze::{extract_bases, render_filter_grid};
use infomax::ingest::write_pgm;
use infomax::io::mat1::write_matrix;

use crate::commands::{load_run, patch_side};
use crate::config::FileConfig;
use crate::manifest::RunManifest;
use crate::{CliResult, ExportArgs};

pub fn run(args: ExportArgs, _file: &FileConfig) -> CliResult<()> {
    std::fs::create_dir_all(&args.out_dir).map_err(infomax::Error::Io)?;

    let mut manifest = RunManifest::new("export");
    manifest.input(&args.checkpoint)?;
    manifest.input(&args.whitening)?;

    let start = Instant::now();
    let run = load_run(&args.checkpoint, &args.whitening)?;
    let w = patch_side(run.model.dim())?;
    let dict = extract_bases(&run.model, &run.bank, &run.params)?;
    manifest.stage("load", start.elapsed().as_secs_f64());

    let start = Instant::now();
    let targets = [
        ("bases", dict.basis()),
        ("filters", dict.filters()),
    ];
    for (name, columns) in targets {
        let pgm = args.out_dir.join(format!("{}.pgm", name));
        let mat = args.out_dir.join(format!("{}.mat1", name));
        write_pgm(&pgm, &render_filter_grid(columns, w)?)?;
        write_matrix(&mat, columns)?;
        manifest.output(&pgm).output(&mat);
        println!("{} = {} + {}", name, pgm.display(), mat.display());
    }
    manifest.stage("write", start.elapsed().as_secs_f64());
    manifest.write(&args.out_dir.join("export.manifest.json"))?;
    Ok(())
}
