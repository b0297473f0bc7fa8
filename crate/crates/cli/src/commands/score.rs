use std::collections::BTreeMap;

use geoground_core::data::{write_report, DetectionRecord, Report, ScoredRow};
use geoground_core::direction::{build_reference_index, gamma, GroundingDirection, ReferenceIndex};
use geoground_core::{sgi, Error};

use super::{load, scores_format, snapshot};
use crate::cli::{Neighborhood, ScoreArgs, ScoreMode};
use crate::error::{CliError, CliResult};
use crate::manifest::RunManifest;

/// Reference indexes, pooled or one per domain.
enum References {
    Pooled(ReferenceIndex),
    ByDomain(BTreeMap<String, ReferenceIndex>),
}

impl References {
    fn build(records: &[DetectionRecord], neighborhood: Neighborhood) -> CliResult<Self> {
        Ok(match neighborhood {
            Neighborhood::Pooled => References::Pooled(build_reference_index(records)?),
            Neighborhood::Domain => {
                let mut groups: BTreeMap<String, Vec<&DetectionRecord>> = BTreeMap::new();
                for rec in records.iter().filter(|r| r.is_grounded()) {
                    groups.entry(rec.domain.clone()).or_default().push(rec);
                }
                if groups.is_empty() {
                    return Err(Error::EmptyReference.into());
                }
                let mut out = BTreeMap::new();
                for (domain, recs) in groups {
                    let index = build_reference_index(recs)
                        .map_err(|e| CliError::from(e).context(format!("reference domain {domain:?}")))?;
                    out.insert(domain, index);
                }
                References::ByDomain(out)
            }
        })
    }

    fn indexes(&self) -> Vec<(&str, &ReferenceIndex)> {
        match self {
            References::Pooled(i) => vec![("pooled", i)],
            References::ByDomain(m) => m.iter().map(|(d, i)| (d.as_str(), i)).collect(),
        }
    }

    fn for_record(&self, rec: &DetectionRecord) -> Result<&ReferenceIndex, String> {
        match self {
            References::Pooled(i) => Ok(i),
            References::ByDomain(m) => m
                .get(&rec.domain)
                .ok_or_else(|| format!("no reference records for domain {:?}", rec.domain)),
        }
    }
}

enum Plan {
    Sgi,
    Gamma(GroundingDirection),
    GammaLoocv(References),
    Local { refs: References, k: usize, loocv: bool },
}

impl Plan {
    fn mode_name(&self) -> String {
        match self {
            Plan::Sgi => "sgi".into(),
            Plan::Gamma(_) => "gamma".into(),
            Plan::GammaLoocv(_) => "gamma loocv".into(),
            Plan::Local { k, loocv, .. } => {
                format!("gamma-local(k={k}){}", if *loocv { " loocv" } else { "" })
            }
        }
    }

    fn score(&self, rec: &DetectionRecord) -> Result<f64, String> {
        let qr = || rec.qr().ok_or_else(|| "missing q_emb or r_emb".to_string());
        let core = |e: Error| e.to_string();
        match self {
            Plan::Sgi => {
                let (q, c, r) = rec.qcr().ok_or_else(|| {
                    if rec.c_emb.is_none() {
                        "missing context embedding".to_string()
                    } else {
                        "missing q_emb or r_emb".to_string()
                    }
                })?;
                sgi(q, c, r).map(|v| v.ratio).map_err(core)
            }
            Plan::Gamma(dir) => {
                let (q, r) = qr()?;
                gamma(q, r, dir).map(|g| g.value).map_err(core)
            }
            Plan::GammaLoocv(refs) => {
                let (q, r) = qr()?;
                let index = refs.for_record(rec)?;
                let dir = index.global_direction(Some(&rec.id), "loocv").map_err(core)?;
                gamma(q, r, &dir).map(|g| g.value).map_err(core)
            }
            Plan::Local { refs, k, loocv } => {
                let (q, r) = qr()?;
                let index = refs.for_record(rec)?;
                let exclude = loocv.then_some(rec.id.as_str());
                index.gamma_local_excluding(q, r, *k, exclude).map(|g| g.value).map_err(core)
            }
        }
    }
}

fn load_references(args: &ScoreArgs, manifest: &mut RunManifest) -> CliResult<References> {
    let path = args
        .reference
        .as_ref()
        .ok_or_else(|| CliError::validation("this mode requires --reference"))?;
    manifest.hash_input(path)?;
    References::build(&load(path)?, args.neighborhood)
}

fn plan(args: &ScoreArgs, records: &[DetectionRecord], manifest: &mut RunManifest) -> CliResult<Plan> {
    match args.mode {
        ScoreMode::Sgi => {
            if args.loocv {
                return Err(CliError::validation("--loocv does not apply to sgi mode"));
            }
            if !records.is_empty() && records.iter().all(|r| r.c_emb.is_none()) {
                return Err(CliError::validation(format!(
                    "sgi mode needs context embeddings, and none of the {} records has c_emb",
                    records.len()
                )));
            }
            Ok(Plan::Sgi)
        }
        ScoreMode::Gamma if args.loocv => {
            if args.mu.is_some() {
                return Err(CliError::validation(
                    "--loocv recalibrates from --reference; drop --mu",
                ));
            }
            Ok(Plan::GammaLoocv(load_references(args, manifest)?))
        }
        ScoreMode::Gamma => {
            let path = args
                .mu
                .as_ref()
                .ok_or_else(|| CliError::validation("gamma mode requires --mu (or --loocv with --reference)"))?;
            manifest.hash_input(path)?;
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
            let dir = GroundingDirection::from_json(&text).map_err(|e| CliError::from(e).context(path.display()))?;
            if let Some(d) = records.iter().find_map(|r| r.dim()) {
                if d != dir.dim {
                    return Err(CliError::validation(format!(
                        "direction has dimension {} but the dataset has {d}",
                        dir.dim
                    )));
                }
            }
            Ok(Plan::Gamma(dir))
        }
        ScoreMode::GammaLocal => {
            let refs = load_references(args, manifest)?;
            for (name, index) in refs.indexes() {
                let available = index.len() - usize::from(args.loocv);
                if args.k == 0 || args.k > available {
                    return Err(CliError::validation(format!(
                        "k = {} out of range: reference {name} has {available} usable neighbors",
                        args.k
                    )));
                }
            }
            Ok(Plan::Local {
                refs,
                k: args.k,
                loocv: args.loocv,
            })
        }
    }
}

pub fn run(args: &ScoreArgs) -> CliResult<()> {
    let records = load(&args.input)?;
    let mut manifest = RunManifest::new("score", snapshot(args), None);
    manifest.hash_input(&args.input)?;
    let plan = plan(args, &records, &mut manifest)?;
    let mode = plan.mode_name();

    let rows: Vec<ScoredRow> = records
        .iter()
        .map(|rec| {
            let (score, error) = match plan.score(rec) {
                Ok(s) => (Some(s), None),
                Err(e) => (None, Some(e)),
            };
            ScoredRow {
                id: rec.id.clone(),
                domain: rec.domain.clone(),
                label: rec.label,
                halluc_type: rec.halluc_type,
                mode: mode.clone(),
                score,
                error,
            }
        })
        .collect();

    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    write_report(&Report::Scores(&rows), &args.out, scores_format(&args.out))?;
    manifest.add_output(&args.out);
    manifest.write_beside(&args.out)?;

    if failed > 0 {
        log::warn!("{failed} of {} records could not be scored; see the error column", rows.len());
    }
    println!("scored: {}", rows.len() - failed);
    println!("errors: {failed}");
    Ok(())
}
