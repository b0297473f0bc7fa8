use std::path::{Path, PathBuf};

use geoground_core::data::{write_dataset, DetectionRecord};
use geoground_core::synthetic::{gen_multidomain, generate_scenario, PlantedTruth, ScenarioConfig, ScenarioKind};

use super::{snapshot, write_text};
use crate::cli::{ScenarioArg, SynthArgs};
use crate::error::{CliError, CliResult};
use crate::manifest::{sidecar, RunManifest};

const DEFAULT_N: usize = 800;
const DEFAULT_DIM: usize = 768;

fn kind(arg: ScenarioArg) -> ScenarioKind {
    match arg {
        ScenarioArg::Type1 => ScenarioKind::Type1,
        ScenarioArg::Type2 => ScenarioKind::Type2,
        ScenarioArg::Type3 => ScenarioKind::Type3,
        ScenarioArg::Multidomain => ScenarioKind::Multidomain,
    }
}

/// Config file first, then defaults, then explicit flags.
fn resolve(args: &SynthArgs) -> CliResult<ScenarioConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
            serde_json::from_str::<ScenarioConfig>(&text)
                .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?
        }
        None => {
            let scenario = args
                .scenario
                .ok_or_else(|| CliError::validation("--scenario is required without --config"))?;
            let half = DEFAULT_N / 2;
            ScenarioConfig::new(kind(scenario), DEFAULT_DIM, half, DEFAULT_N - half)
        }
    };
    if let Some(s) = args.scenario {
        cfg.scenario = kind(s);
        if cfg.scenario == ScenarioKind::Multidomain && cfg.n_domains.is_none() {
            cfg.n_domains = Some(3);
        }
    }
    if let Some(d) = args.dim {
        cfg.dim = d;
    }
    if let Some(n) = args.n {
        cfg.n_grounded = n / 2;
        cfg.n_halluc = n - n / 2;
    }
    if let Some(n) = args.n_grounded {
        cfg.n_grounded = n;
    }
    if let Some(n) = args.n_halluc {
        cfg.n_halluc = n;
    }
    if let Some(k) = args.kappa {
        cfg.kappa_cluster = k;
    }
    if let Some(s) = args.separation {
        cfg.separation = s;
    }
    if let Some(n) = args.n_domains {
        cfg.n_domains = Some(n);
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if args.split_domains && cfg.scenario != ScenarioKind::Multidomain {
        return Err(CliError::validation("--split-domains only applies to the multidomain scenario"));
    }
    cfg.validate()?;
    Ok(cfg)
}

/// `<stem>.<domain>.<ext>` next to `out`.
fn domain_path(out: &Path, domain: &str) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("synth");
    let name = match out.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}.{domain}.{ext}"),
        None => format!("{stem}.{domain}"),
    };
    out.with_file_name(name)
}

fn write(records: &[DetectionRecord], path: &Path, manifest: &mut RunManifest) -> CliResult<()> {
    write_dataset(records, path).map_err(|e| CliError::from(e).context(path.display()))?;
    manifest.add_output(path);
    Ok(())
}

pub fn run(args: &SynthArgs) -> CliResult<()> {
    let cfg = resolve(args)?;
    let mut manifest = RunManifest::new("synth", snapshot(&cfg), Some(cfg.seed));
    if let Some(path) = &args.config {
        manifest.hash_input(path)?;
    }
    let (truth, total): (PlantedTruth, usize) = if args.split_domains {
        let md = gen_multidomain(&cfg)?;
        let mut total = 0;
        for (name, recs) in &md.domains {
            write(recs, &domain_path(&args.out, name), &mut manifest)?;
            total += recs.len();
        }
        (md.truth, total)
    } else {
        let g = generate_scenario(&cfg)?;
        write(&g.records, &args.out, &mut manifest)?;
        (g.truth, g.records.len())
    };
    let truth_path = sidecar(&args.out, "truth.json");
    let mut text = serde_json::to_string_pretty(&truth).expect("truth serializes");
    text.push('\n');
    write_text(&truth_path, &text)?;
    manifest.add_output(&truth_path);
    manifest.write_beside(&args.out)?;

    println!("records: {total}");
    println!("scenario: {}", cfg.scenario.as_str());
    println!("truth: {}", truth_path.display());
    Ok(())
}
