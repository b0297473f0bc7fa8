use std::path::Path;

use geoground_core::data::{read_scores_csv, write_report, Report, ReportFormat, ScoredRow};
use geoground_core::eval::{summarize, EvalOptions, EvalSummary, ScoredRecord};

use super::{scores_format, snapshot};
use crate::cli::EvalArgs;
use crate::error::{CliError, CliResult};
use crate::manifest::RunManifest;

fn read_rows(path: &Path) -> CliResult<Vec<ScoredRow>> {
    let rows = match scores_format(path) {
        ReportFormat::Json => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?
        }
        ReportFormat::Csv => read_scores_csv(path).map_err(|e| CliError::from(e).context(path.display()))?,
    };
    Ok(rows)
}

fn scorer_label(rows: &[ScoredRow]) -> String {
    let mut modes: Vec<&str> = rows.iter().map(|r| r.mode.as_str()).collect();
    modes.sort_unstable();
    modes.dedup();
    match modes.as_slice() {
        [one] => one.to_string(),
        _ => "mixed".to_string(),
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"))
}

fn print_table(s: &EvalSummary) {
    println!(
        "{:<24} {:>7} {:>18} {:>9} {:>10} {:>10} {:>6} {:>6}",
        "scorer", "AUROC", "CI", "d", "mean_pos", "mean_neg", "n_pos", "n_neg"
    );
    println!(
        "{:<24} {:>7.4} {:>18} {:>9} {:>10.4} {:>10.4} {:>6} {:>6}",
        s.scorer,
        s.auroc,
        format!("[{:.4}, {:.4}]", s.ci_low, s.ci_high),
        opt(s.cohens_d),
        s.mean_pos,
        s.mean_neg,
        s.n_pos,
        s.n_neg
    );
    println!(
        "CI: {:.0}% percentile bootstrap, {} resamples, seed {}; positives are grounded records",
        s.confidence * 100.0,
        s.resamples,
        s.seed
    );
}

pub fn run(args: &EvalArgs) -> CliResult<()> {
    let rows = read_rows(&args.scores)?;
    let skipped = rows.iter().filter(|r| r.score.is_none()).count();
    if skipped > 0 {
        log::warn!("skipping {skipped} error-tagged row(s)");
    }
    let scored: Vec<ScoredRecord> = rows.iter().filter_map(ScoredRow::to_scored).collect();
    let label = args.scorer.clone().unwrap_or_else(|| scorer_label(&rows));
    let opts = EvalOptions {
        resamples: args.bootstrap,
        confidence: args.confidence,
        seed: args.seed,
    };
    let summary = summarize(&scored, &label, &opts)?;

    if let Some(out) = &args.out {
        write_report(&Report::Summary(&summary), out, ReportFormat::from_path(out))?;
        let mut manifest = RunManifest::new("eval", snapshot(args), Some(args.seed));
        manifest.hash_input(&args.scores)?;
        manifest.add_output(out);
        manifest.write_beside(out)?;
    }
    print_table(&summary);
    Ok(())
}
