use geoground_core::direction::calibrate_global;
use geoground_core::sphere::UnitEmbedding;

use super::{load, snapshot, write_text};
use crate::cli::CalibrateArgs;
use crate::error::{CliError, CliResult};
use crate::manifest::RunManifest;

pub fn run(args: &CalibrateArgs) -> CliResult<()> {
    let records = load(&args.input)?;
    let mut pairs: Vec<(UnitEmbedding, UnitEmbedding)> = Vec::new();
    for rec in records.iter().filter(|r| r.is_grounded()) {
        let (q, r) = rec.qr().ok_or_else(|| {
            CliError::validation(format!("record {:?}: grounded record lacks q_emb or r_emb", rec.id))
        })?;
        pairs.push((q.clone(), r.clone()));
    }
    let cal = calibrate_global(&pairs, &args.tag)?;
    let mut text = cal.direction.to_json();
    text.push('\n');
    write_text(&args.out, &text)?;

    let mut manifest = RunManifest::new("calibrate", snapshot(args), None);
    manifest.hash_input(&args.input)?;
    manifest.add_output(&args.out);
    manifest.write_beside(&args.out)?;

    println!("n_reference: {}", cal.direction.n_reference);
    println!("dropped: {}", cal.dropped);
    println!("resultant_length: {:.6}", cal.direction.resultant_length);
    Ok(())
}
