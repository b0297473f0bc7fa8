use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{write_atomic, DataError, HallucType, Label};
use crate::eval::{EvalSummary, ScoredRecord, TransferMatrix};

pub const SCORE_COLUMNS: [&str; 7] = ["id", "domain", "label", "halluc_type", "mode", "score", "error"];

pub const SUMMARY_COLUMNS: [&str; 17] = [
    "auroc",
    "cohens_d",
    "ci_low",
    "ci_high",
    "n_pos",
    "n_neg",
    "mean_pos",
    "mean_neg",
    "sd_pos",
    "sd_neg",
    "orientation",
    "scorer",
    "statistic",
    "resamples",
    "confidence",
    "degenerate_resamples",
    "seed",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl ReportFormat {
    /// Infers the format from a file extension, defaulting to JSON.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => ReportFormat::Csv,
            _ => ReportFormat::Json,
        }
    }
}

/// One output row of the scoring command. Failed rows carry `error` and no score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredRow {
    pub id: String,
    pub domain: String,
    pub label: Label,
    pub halluc_type: Option<HallucType>,
    pub mode: String,
    pub score: Option<f64>,
    pub error: Option<String>,
}

impl ScoredRow {
    pub fn from_scored(s: &ScoredRecord, mode: &str) -> Self {
        Self {
            id: s.record_id.clone(),
            domain: s.domain.clone(),
            label: s.label,
            halluc_type: s.halluc_type,
            mode: mode.to_string(),
            score: Some(s.score),
            error: None,
        }
    }

    pub fn to_scored(&self) -> Option<ScoredRecord> {
        Some(ScoredRecord {
            record_id: self.id.clone(),
            score: self.score?,
            label: self.label,
            domain: self.domain.clone(),
            halluc_type: self.halluc_type,
        })
    }
}

pub enum Report<'a> {
    Summary(&'a EvalSummary),
    /// JSON holds both matrices; CSV holds the AUROC grid.
    Transfer(&'a TransferMatrix),
    /// CSV of the direction-cosine grid.
    TransferCosines(&'a TransferMatrix),
    Scores(&'a [ScoredRow]),
}

/// `%g`-style formatting with 6 significant digits.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".to_string() } else { x.to_string() };
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let fixed = format!("{:.*}", (5 - exp) as usize, x);
        trim_zeros(&fixed).to_string()
    } else {
        format!("{}e{}", trim_zeros(mantissa), exp)
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn round_sig6(x: f64) -> f64 {
    format_sig6(x).parse().unwrap_or(x)
}

fn round_json_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64().and_then(|x| serde_json::Number::from_f64(round_sig6(x))) {
                *n = x;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_json_floats),
        Value::Object(map) => map.values_mut().for_each(round_json_floats),
        _ => {}
    }
}

fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_value(value).expect("report serializes");
    round_json_floats(&mut v);
    let mut out = serde_json::to_vec_pretty(&v).expect("json value serializes");
    out.push(b'\n');
    out
}

fn opt_f(x: Option<f64>) -> String {
    x.map(format_sig6).unwrap_or_default()
}

fn csv_bytes(rows: Vec<Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.write_record(&row).expect("write csv to memory");
    }
    w.into_inner().expect("flush csv to memory")
}

fn matrix_rows(domains: &[String], cells: &[Vec<f64>]) -> Vec<Vec<String>> {
    let mut rows = vec![std::iter::once("calibration_source".to_string())
        .chain(domains.iter().cloned())
        .collect::<Vec<_>>()];
    for (name, row) in domains.iter().zip(cells) {
        rows.push(
            std::iter::once(name.clone())
                .chain(row.iter().map(|&x| format_sig6(x)))
                .collect(),
        );
    }
    rows
}

#[derive(Serialize)]
struct TransferJson<'a> {
    #[serde(flatten)]
    matrix: &'a TransferMatrix,
    in_domain_mean: f64,
    cross_domain_mean: f64,
}

fn summary_row(s: &EvalSummary) -> Vec<String> {
    vec![
        format_sig6(s.auroc),
        opt_f(s.cohens_d),
        format_sig6(s.ci_low),
        format_sig6(s.ci_high),
        s.n_pos.to_string(),
        s.n_neg.to_string(),
        format_sig6(s.mean_pos),
        format_sig6(s.mean_neg),
        opt_f(s.sd_pos),
        opt_f(s.sd_neg),
        s.orientation.clone(),
        s.scorer.clone(),
        serde_json::to_value(s.statistic).unwrap().as_str().unwrap().to_string(),
        s.resamples.to_string(),
        format_sig6(s.confidence),
        s.degenerate_resamples.to_string(),
        s.seed.to_string(),
    ]
}

/// Renders a report to bytes. Floats carry 6 significant digits.
pub fn render_report(report: &Report<'_>, format: ReportFormat) -> Vec<u8> {
    match (report, format) {
        (Report::Summary(s), ReportFormat::Json) => json_bytes(s),
        (Report::Summary(s), ReportFormat::Csv) => csv_bytes(vec![
            SUMMARY_COLUMNS.iter().map(|c| c.to_string()).collect(),
            summary_row(s),
        ]),
        (Report::Transfer(t) | Report::TransferCosines(t), ReportFormat::Json) => json_bytes(&TransferJson {
            matrix: t,
            in_domain_mean: t.in_domain_mean(),
            cross_domain_mean: t.cross_domain_mean(),
        }),
        (Report::Transfer(t), ReportFormat::Csv) => csv_bytes(matrix_rows(&t.domains, &t.auroc_cells)),
        (Report::TransferCosines(t), ReportFormat::Csv) => csv_bytes(matrix_rows(&t.domains, &t.direction_cosines)),
        (Report::Scores(rows), ReportFormat::Json) => json_bytes(rows),
        (Report::Scores(rows), ReportFormat::Csv) => {
            let mut out = vec![SCORE_COLUMNS.iter().map(|c| c.to_string()).collect::<Vec<_>>()];
            out.extend(rows.iter().map(|r| {
                vec![
                    r.id.clone(),
                    r.domain.clone(),
                    r.label.to_string(),
                    r.halluc_type.map(|t| t.as_str().to_string()).unwrap_or_default(),
                    r.mode.clone(),
                    opt_f(r.score),
                    r.error.clone().unwrap_or_default(),
                ]
            }));
            csv_bytes(out)
        }
    }
}

/// Writes a report atomically (temporary file, then rename).
pub fn write_report(report: &Report<'_>, path: impl AsRef<Path>, format: ReportFormat) -> Result<(), DataError> {
    write_atomic(path.as_ref(), &render_report(report, format))
}

fn read_text(path: &Path) -> Result<String, DataError> {
    fs::read_to_string(path).map_err(|e| DataError::io(path, e))
}

pub fn read_summary_json(path: impl AsRef<Path>) -> Result<EvalSummary, DataError> {
    let text = read_text(path.as_ref())?;
    serde_json::from_str(&text).map_err(|e| DataError::Parse {
        line: e.line(),
        message: e.to_string(),
    })
}

pub fn read_transfer_json(path: impl AsRef<Path>) -> Result<TransferMatrix, DataError> {
    let text = read_text(path.as_ref())?;
    serde_json::from_str(&text).map_err(|e| DataError::Parse {
        line: e.line(),
        message: e.to_string(),
    })
}

fn csv_err(line: usize, e: impl std::fmt::Display) -> DataError {
    DataError::Parse {
        line,
        message: e.to_string(),
    }
}

/// Reads one matrix CSV back as `(domains, cells)`.
pub fn read_transfer_csv(path: impl AsRef<Path>) -> Result<(Vec<String>, Vec<Vec<f64>>), DataError> {
    let text = read_text(path.as_ref())?;
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| csv_err(1, e))?.clone();
    let domains: Vec<String> = header.iter().skip(1).map(String::from).collect();
    let mut cells = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| csv_err(line, e))?;
        let values = row
            .iter()
            .skip(1)
            .map(|v| v.parse::<f64>().map_err(|e| csv_err(line, e)))
            .collect::<Result<Vec<_>, _>>()?;
        if values.len() != domains.len() {
            return Err(csv_err(line, "row width does not match header"));
        }
        cells.push(values);
    }
    Ok((domains, cells))
}

/// Reads a scored CSV as written by [`write_report`] with [`Report::Scores`].
pub fn read_scores_csv(path: impl AsRef<Path>) -> Result<Vec<ScoredRow>, DataError> {
    let text = read_text(path.as_ref())?;
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| csv_err(1, e))?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| csv_err(1, format!("missing column {name:?}")))
    };
    let [id, domain, label, htype, mode, score, error] = [
        col("id")?,
        col("domain")?,
        col("label")?,
        col("halluc_type")?,
        col("mode")?,
        col("score")?,
        col("error")?,
    ];
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| csv_err(line, e))?;
        let field = |j: usize| rec.get(j).unwrap_or("");
        let score_text = field(score);
        rows.push(ScoredRow {
            id: field(id).to_string(),
            domain: field(domain).to_string(),
            label: field(label).parse().map_err(|e: String| csv_err(line, e))?,
            halluc_type: match field(htype) {
                "" => None,
                t => Some(t.parse().map_err(|e: String| csv_err(line, e))?),
            },
            mode: field(mode).to_string(),
            score: match score_text {
                "" => None,
                s => Some(s.parse::<f64>().map_err(|e| csv_err(line, e))?),
            },
            error: match field(error) {
                "" => None,
                e => Some(e.to_string()),
            },
        });
    }
    Ok(rows)
}
