use std::path::{Path, PathBuf};

use geoground_core::data::{write_report, DetectionRecord, Report, ReportFormat};
use geoground_core::eval::{transfer_matrix, TransferMatrix};

use super::{load, snapshot};
use crate::cli::TransferArgs;
use crate::error::{CliError, CliResult};
use crate::manifest::RunManifest;

fn parse_domain(spec: &str) -> CliResult<(String, PathBuf)> {
    match spec.split_once('=') {
        Some((name, path)) if !name.is_empty() && !path.is_empty() => Ok((name.to_string(), PathBuf::from(path))),
        Some(_) => Err(CliError::validation(format!("malformed --domain {spec:?}; expected NAME=PATH"))),
        None => {
            let path = PathBuf::from(spec);
            let name = path
                .file_stem()
                .and_then(|s| s.to_str())
                .ok_or_else(|| CliError::validation(format!("cannot name domain from path {spec:?}")))?
                .to_string();
            Ok((name, path))
        }
    }
}

/// Groups records by their `domain` field in order of first appearance.
fn split_by_domain(records: Vec<DetectionRecord>) -> Vec<(String, Vec<DetectionRecord>)> {
    let mut out: Vec<(String, Vec<DetectionRecord>)> = Vec::new();
    for rec in records {
        match out.iter_mut().find(|(name, _)| *name == rec.domain) {
            Some((_, recs)) => recs.push(rec),
            None => out.push((rec.domain.clone(), vec![rec])),
        }
    }
    out
}

fn print_matrix(title: &str, m: &TransferMatrix, cells: &[Vec<f64>]) {
    println!("{title} (rows: calibration source, columns: test domain)");
    let width = m.domains.iter().map(|d| d.len()).max().unwrap_or(0).max(8);
    print!("{:<width$}", "");
    for d in &m.domains {
        print!(" {d:>width$}");
    }
    println!();
    for (name, row) in m.domains.iter().zip(cells) {
        print!("{name:<width$}");
        for v in row {
            print!(" {v:>width$.4}");
        }
        println!();
    }
}

pub fn run(args: &TransferArgs) -> CliResult<()> {
    let mut manifest = RunManifest::new("transfer", snapshot(args), Some(args.seed));
    let mut domains: Vec<(String, Vec<DetectionRecord>)> = Vec::new();
    for spec in &args.domains {
        let (name, path) = parse_domain(spec)?;
        manifest.hash_input(&path)?;
        domains.push((name, load(&path)?));
    }
    if let Some(input) = &args.input {
        manifest.hash_input(input)?;
        domains.extend(split_by_domain(load(input)?));
    }
    for (i, (name, _)) in domains.iter().enumerate() {
        if domains[..i].iter().any(|(n, _)| n == name) {
            return Err(CliError::validation(format!("domain {name:?} given more than once")));
        }
    }
    if domains.len() < 2 {
        return Err(CliError::validation(format!(
            "transfer needs at least 2 domains, got {}",
            domains.len()
        )));
    }

    let m = transfer_matrix(&domains, args.fraction, args.seed)?;
    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| CliError::io(format!("{}: {e}", args.out_dir.display())))?;
    let json = args.out_dir.join("transfer.json");
    let auroc_csv = args.out_dir.join("transfer_auroc.csv");
    let cosine_csv = args.out_dir.join("transfer_cosines.csv");
    let outputs: [(&Path, Report<'_>, ReportFormat); 3] = [
        (&json, Report::Transfer(&m), ReportFormat::Json),
        (&auroc_csv, Report::Transfer(&m), ReportFormat::Csv),
        (&cosine_csv, Report::TransferCosines(&m), ReportFormat::Csv),
    ];
    for (path, report, format) in &outputs {
        write_report(report, path, *format)?;
        manifest.add_output(path);
    }
    manifest.write_beside(&json)?;

    print_matrix("AUROC", &m, &m.auroc_cells);
    print_matrix("direction cosine", &m, &m.direction_cosines);
    println!("in-domain mean AUROC: {:.4}", m.in_domain_mean());
    println!("cross-domain mean AUROC: {:.4}", m.cross_domain_mean());
    println!("mean off-diagonal cosine: {:.4}", m.mean_off_diagonal_cosine());
    Ok(())
}
