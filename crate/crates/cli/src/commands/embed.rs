use geoground_core::data::{embed_missing, write_dataset, EmbeddingClient, EmbeddingClientConfig};

use super::{load, snapshot};
use crate::cli::EmbedArgs;
use crate::error::{CliError, CliResult};
use crate::manifest::RunManifest;

fn resolve(args: &EmbedArgs) -> CliResult<EmbeddingClientConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?
        }
        None => EmbeddingClientConfig::default(),
    };
    if let Some(v) = &args.base_url {
        cfg.base_url = v.clone();
    }
    if let Some(v) = &args.model {
        cfg.model_name = v.clone();
    }
    if let Some(v) = args.batch_size {
        cfg.batch_size = v;
    }
    if let Some(v) = args.timeout {
        cfg.timeout_secs = v;
    }
    if let Some(v) = &args.auth_env {
        cfg.auth_env_var = v.clone();
    }
    if let Some(v) = args.retries {
        cfg.max_retries = v;
    }
    Ok(cfg)
}

pub fn run(args: &EmbedArgs) -> CliResult<()> {
    let cfg = resolve(args)?;
    let client = EmbeddingClient::new(cfg.clone())?;
    let records = load(&args.input)?;
    let mut manifest = RunManifest::new("embed", snapshot(&cfg), None);
    manifest.hash_input(&args.input)?;

    let (records, failure) = match embed_missing(records, &client) {
        Ok(r) => (r, None),
        Err(f) => {
            let f = *f;
            (f.records, Some((f.completed, f.error)))
        }
    };
    // Partial progress is kept so a rerun only embeds what is still missing.
    write_dataset(&records, &args.out).map_err(|e| CliError::from(e).context(args.out.display()))?;
    manifest.add_output(&args.out);
    manifest.write_beside(&args.out)?;

    println!("requests: {}", client.requests_sent());
    if let Some((completed, error)) = failure {
        return Err(CliError::from(error).context(format!(
            "embedding stopped after {completed} record(s); partial output written to {}",
            args.out.display()
        )));
    }
    println!("records: {}", records.len());
    Ok(())
}
