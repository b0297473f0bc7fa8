//! Context-free grounding scores from displacement directions.
//!
//! A grounded response moves away from its query in a characteristic
//! direction. Calibration averages the unit displacements of verified pairs
//! into a grounding direction; Gamma is the cosine between a new pair's unit
//! displacement and that direction. The local variant averages only over the
//! k reference queries nearest to the test query.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::data::DetectionRecord;
use crate::error::{Error, Result};
use crate::sphere::{self, check_dims, UnitEmbedding, TOLERANCE};

/// Default neighborhood size for local Gamma.
pub const DEFAULT_K: usize = 15;

pub const DIRECTION_FORMAT_VERSION: u32 = 1;

/// Unit vector from query to response, with the chord length it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Displacement {
    direction: Vec<f64>,
    raw_norm: f64,
}

impl Displacement {
    pub fn direction(&self) -> &[f64] {
        &self.direction
    }

    pub fn raw_norm(&self) -> f64 {
        self.raw_norm
    }

    pub fn dim(&self) -> usize {
        self.direction.len()
    }
}

/// Calibrated unit mean displacement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundingDirection {
    pub dim: usize,
    pub mu_hat: Vec<f64>,
    pub n_reference: usize,
    pub resultant_length: f64,
    pub source_tag: String,
    pub format_version: u32,
}

impl GroundingDirection {
    /// Parses the JSON document form, re-normalizing `mu_hat`.
    pub fn from_json(s: &str) -> Result<Self> {
        let mut dir: GroundingDirection =
            serde_json::from_str(s).map_err(|e| Error::InvalidInput(e.to_string()))?;
        if dir.format_version != DIRECTION_FORMAT_VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported grounding direction format_version {}",
                dir.format_version
            )));
        }
        check_dims(dir.dim, dir.mu_hat.len())?;
        dir.mu_hat = sphere::normalize(&dir.mu_hat)?.into_vec();
        Ok(dir)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("direction serializes")
    }
}

/// Result of global calibration: the direction plus how many pairs were dropped
/// for having zero displacement.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub direction: GroundingDirection,
    pub dropped: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GammaMode {
    Global,
    Local,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaScore {
    pub value: f64,
    pub mode: GammaMode,
    pub k: Option<usize>,
}

/// delta_hat(q, r) = (r - q) / |r - q|.
pub fn displacement(q: &UnitEmbedding, r: &UnitEmbedding) -> Result<Displacement> {
    check_dims(q.dim(), r.dim())?;
    let diff: Vec<f64> = r
        .as_slice()
        .iter()
        .zip(q.as_slice())
        .map(|(a, b)| a - b)
        .collect();
    let raw_norm = sphere::norm(&diff);
    if raw_norm <= TOLERANCE {
        return Err(Error::ZeroDisplacement { norm: raw_norm });
    }
    let direction = diff.into_iter().map(|x| x / raw_norm).collect();
    Ok(Displacement {
        direction,
        raw_norm,
    })
}

/// Normalizes `sum / n` into a direction. Shared by every calibration path so
/// that equal sums give bit-identical directions.
fn direction_from_sum(sum: &[f64], n: usize, source_tag: String) -> Result<GroundingDirection> {
    if n == 0 {
        return Err(Error::EmptyReference);
    }
    let mean: Vec<f64> = sum.iter().map(|x| x / n as f64).collect();
    let resultant_length = sphere::norm(&mean);
    if resultant_length <= TOLERANCE {
        return Err(Error::DegenerateMean {
            norm: resultant_length,
        });
    }
    Ok(GroundingDirection {
        dim: mean.len(),
        mu_hat: mean.into_iter().map(|x| x / resultant_length).collect(),
        n_reference: n,
        resultant_length,
        source_tag,
        format_version: DIRECTION_FORMAT_VERSION,
    })
}

fn accumulate<'a>(dim: usize, dirs: impl Iterator<Item = &'a [f64]>) -> (Vec<f64>, usize) {
    let mut sum = vec![0.0; dim];
    let mut n = 0;
    for d in dirs {
        for (s, x) in sum.iter_mut().zip(d) {
            *s += x;
        }
        n += 1;
    }
    (sum, n)
}

/// Mean displacement direction over verified grounded pairs.
pub fn calibrate_global(
    reference: &[(UnitEmbedding, UnitEmbedding)],
    tag: &str,
) -> Result<Calibration> {
    let first = reference.first().ok_or(Error::EmptyReference)?;
    let dim = first.0.dim();
    let mut kept = Vec::with_capacity(reference.len());
    let mut dropped = 0;
    for (q, r) in reference {
        check_dims(dim, q.dim())?;
        match displacement(q, r) {
            Ok(d) => kept.push(d),
            Err(Error::ZeroDisplacement { .. }) => dropped += 1,
            Err(e) => return Err(e),
        }
    }
    if dropped > 0 {
        log::warn!("calibration dropped {dropped} zero-displacement pair(s)");
    }
    let (sum, n) = accumulate(dim, kept.iter().map(|d| d.direction()));
    Ok(Calibration {
        direction: direction_from_sum(&sum, n, tag.to_string())?,
        dropped,
    })
}

fn gamma_against(disp: &Displacement, mu_hat: &[f64]) -> f64 {
    sphere::dot(disp.direction(), mu_hat).clamp(-1.0, 1.0)
}

/// Global Gamma: delta_hat(q, r) . mu_hat.
pub fn gamma(q: &UnitEmbedding, r: &UnitEmbedding, dir: &GroundingDirection) -> Result<GammaScore> {
    check_dims(dir.dim, q.dim())?;
    let disp = displacement(q, r)?;
    Ok(GammaScore {
        value: gamma_against(&disp, &dir.mu_hat),
        mode: GammaMode::Global,
        k: None,
    })
}

/// Immutable exact-kNN structure over reference queries and their displacements.
#[derive(Debug, Clone)]
pub struct ReferenceIndex {
    query_points: Vec<UnitEmbedding>,
    displacements: Vec<Displacement>,
    record_ids: Vec<String>,
    dim: usize,
}

/// One reference entry returned by a neighbor search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub position: usize,
    pub theta: f64,
}

impl ReferenceIndex {
    /// Builds an index from `(id, query, response)` triples in input order.
    pub fn build<'a, I>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a UnitEmbedding, &'a UnitEmbedding)>,
    {
        let mut query_points = Vec::new();
        let mut displacements = Vec::new();
        let mut record_ids = Vec::new();
        let mut dim = None;
        for (id, q, r) in entries {
            let d = *dim.get_or_insert(q.dim());
            check_dims(d, q.dim())?;
            check_dims(d, r.dim())?;
            displacements.push(displacement(q, r)?);
            query_points.push(q.clone());
            record_ids.push(id.to_string());
        }
        let dim = dim.ok_or(Error::EmptyReference)?;
        Ok(Self {
            query_points,
            displacements,
            record_ids,
            dim,
        })
    }

    pub fn len(&self) -> usize {
        self.record_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.record_ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn record_ids(&self) -> &[String] {
        &self.record_ids
    }

    pub fn query_points(&self) -> &[UnitEmbedding] {
        &self.query_points
    }

    pub fn displacements(&self) -> &[Displacement] {
        &self.displacements
    }

    pub fn position_of(&self, id: &str) -> Option<usize> {
        self.record_ids.iter().position(|r| r == id)
    }

    fn cmp_neighbors(&self, a: &Neighbor, b: &Neighbor) -> Ordering {
        a.theta
            .total_cmp(&b.theta)
            .then_with(|| self.record_ids[a.position].cmp(&self.record_ids[b.position]))
            .then_with(|| a.position.cmp(&b.position))
    }

    /// The `k` reference queries closest to `q` by angular distance, sorted
    /// ascending with ties broken by record id. Entries whose id equals
    /// `exclude` are skipped.
    pub fn nearest(&self, q: &UnitEmbedding, k: usize, exclude: Option<&str>) -> Result<Vec<Neighbor>> {
        check_dims(self.dim, q.dim())?;
        let mut candidates: Vec<Neighbor> = self
            .query_points
            .iter()
            .enumerate()
            .filter(|(i, _)| exclude.is_none_or(|id| self.record_ids[*i] != id))
            .map(|(position, p)| Neighbor {
                position,
                theta: sphere::dot(p.as_slice(), q.as_slice()).clamp(-1.0, 1.0).acos(),
            })
            .collect();
        if k == 0 || k > candidates.len() {
            return Err(Error::KOutOfRange {
                k,
                len: candidates.len(),
            });
        }
        if k < candidates.len() {
            candidates.select_nth_unstable_by(k - 1, |a, b| self.cmp_neighbors(a, b));
            candidates.truncate(k);
        }
        candidates.sort_by(|a, b| self.cmp_neighbors(a, b));
        Ok(candidates)
    }

    /// Mean displacement direction over the whole index, optionally leaving
    /// one record out.
    pub fn global_direction(&self, exclude: Option<&str>, tag: &str) -> Result<GroundingDirection> {
        let (sum, n) = accumulate(
            self.dim,
            self.displacements
                .iter()
                .zip(&self.record_ids)
                .filter(|(_, id)| exclude.is_none_or(|x| x != id.as_str()))
                .map(|(d, _)| d.direction()),
        );
        direction_from_sum(&sum, n, tag.to_string())
    }

    fn local_direction_excluding(
        &self,
        q: &UnitEmbedding,
        k: usize,
        exclude: Option<&str>,
    ) -> Result<GroundingDirection> {
        let neighbors = self.nearest(q, k, exclude)?;
        let (sum, n) = accumulate(
            self.dim,
            neighbors
                .iter()
                .map(|nb| self.displacements[nb.position].direction()),
        );
        direction_from_sum(&sum, n, format!("local-k{k}"))
    }

    /// Local Gamma with the record `exclude` removed from the neighborhood.
    pub fn gamma_local_excluding(
        &self,
        q: &UnitEmbedding,
        r: &UnitEmbedding,
        k: usize,
        exclude: Option<&str>,
    ) -> Result<GammaScore> {
        let dir = self.local_direction_excluding(q, k, exclude)?;
        let disp = displacement(q, r)?;
        Ok(GammaScore {
            value: gamma_against(&disp, &dir.mu_hat),
            mode: GammaMode::Local,
            k: Some(k),
        })
    }
}

/// Reference index over the grounded records among `records`, in input order.
/// Records with zero displacement are dropped with a warning.
pub fn build_reference_index<'a, I>(records: I) -> Result<ReferenceIndex>
where
    I: IntoIterator<Item = &'a DetectionRecord>,
{
    let mut entries: Vec<(&str, &UnitEmbedding, &UnitEmbedding)> = Vec::new();
    let mut dropped = 0;
    for rec in records.into_iter().filter(|r| r.is_grounded()) {
        let (q, r) = rec
            .qr()
            .ok_or_else(|| Error::InvalidInput(format!("record {} lacks query/response embeddings", rec.id)))?;
        if let Some((_, first, _)) = entries.first() {
            check_dims(first.dim(), q.dim())?;
            check_dims(first.dim(), r.dim())?;
        }
        match displacement(q, r) {
            Ok(_) => entries.push((rec.id.as_str(), q, r)),
            Err(Error::ZeroDisplacement { .. }) => dropped += 1,
            Err(e) => return Err(e),
        }
    }
    if dropped > 0 {
        log::warn!("reference index dropped {dropped} zero-displacement record(s)");
    }
    ReferenceIndex::build(entries)
}

/// Query-specific mean direction from the `k` nearest reference queries.
pub fn local_direction(q: &UnitEmbedding, index: &ReferenceIndex, k: usize) -> Result<GroundingDirection> {
    index.local_direction_excluding(q, k, None)
}

pub fn gamma_local(
    q: &UnitEmbedding,
    r: &UnitEmbedding,
    index: &ReferenceIndex,
    k: usize,
) -> Result<GammaScore> {
    index.gamma_local_excluding(q, r, k, None)
}

/// Cosine between two calibrated directions.
pub fn direction_similarity(a: &GroundingDirection, b: &GroundingDirection) -> Result<f64> {
    check_dims(a.dim, b.dim)?;
    Ok(sphere::dot(&a.mu_hat, &b.mu_hat).clamp(-1.0, 1.0))
}
