mod calibrate;
mod embed;
mod eval;
mod score;
mod synth;
mod transfer;

use std::path::Path;

use geoground_core::data::{load_dataset, DetectionRecord, ReportFormat};
use serde::Serialize;

use crate::cli::Command;
use crate::error::{CliError, CliResult};

pub fn run(command: &Command) -> CliResult<()> {
    match command {
        Command::Calibrate(a) => calibrate::run(a),
        Command::Score(a) => score::run(a),
        Command::Eval(a) => eval::run(a),
        Command::Transfer(a) => transfer::run(a),
        Command::Synth(a) => synth::run(a),
        Command::Embed(a) => embed::run(a),
    }
}

fn load(path: &Path) -> CliResult<Vec<DetectionRecord>> {
    load_dataset(path).map_err(|e| CliError::from(e).context(path.display()))
}

fn snapshot(args: &impl Serialize) -> serde_json::Value {
    serde_json::to_value(args).expect("arguments serialize")
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

/// Score files are CSV unless the extension says JSON.
fn scores_format(path: &Path) -> ReportFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("json") => ReportFormat::Json,
        _ => ReportFormat::Csv,
    }
}
