//! Synthetic embedding scenarios with planted hallucination geometry.
//!
//! Directions are drawn from the von Mises-Fisher distribution. Every record
//! draws from its own `(seed, stream)` generator, so output is identical no
//! matter how generation is scheduled.
//!
//! * Type I: the context sits `separation` radians from the question. Grounded
//!   responses cluster 3/4 of the way along the question-to-context arc and
//!   unfaithful ones 1/4 of the way.
//! * Type II: every response is a geodesic step of `separation` radians from
//!   its query. Grounded steps head toward a planted grounding direction and
//!   confabulated steps toward a direction orthogonal to it.
//! * Type III: true and false responses come from one distribution.
//! * Multidomain: Type II per domain, with mutually orthogonal planted directions.
//!
//! `kappa_cluster` is a per-dimension concentration. The vMF concentration
//! actually used is `kappa_cluster * (dim - 1)`, which keeps the angular
//! spread near `1 / sqrt(kappa_cluster)` radians in any dimension.

use rand::Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{DetectionRecord, HallucType, Label};
use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::sphere::{self, UnitEmbedding, TOLERANCE};

const FRAME_STREAM: u64 = 0;
const GROUNDED_ARC_FRACTION: f64 = 0.75;
const UNFAITHFUL_ARC_FRACTION: f64 = 0.25;

#[derive(Debug, Clone, PartialEq)]
pub struct VmfParams {
    pub mean_direction: UnitEmbedding,
    pub kappa: f64,
    pub n: usize,
    pub seed: u64,
}

fn gaussian_vec(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample(StandardNormal)).collect()
}

fn unit_in_place(v: &mut [f64]) -> f64 {
    let n = sphere::norm(v);
    v.iter_mut().for_each(|x| *x /= n);
    n
}

/// Removes the components of `v` along each (unit) vector in `basis`.
fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    for b in basis {
        let p = sphere::dot(v, b);
        v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
    }
}

/// Uniform unit vector orthogonal to every vector in `basis`.
fn random_orthogonal(rng: &mut ChaCha8Rng, dim: usize, basis: &[Vec<f64>]) -> Vec<f64> {
    loop {
        let mut v = gaussian_vec(rng, dim);
        orthogonalize(&mut v, basis);
        // Second pass to clean up rounding from the first.
        orthogonalize(&mut v, basis);
        if unit_in_place(&mut v) > 1e-6 {
            return v;
        }
    }
}

/// Wood's rejection sampler for the cosine to the mean direction.
fn sample_vmf_cosine(rng: &mut ChaCha8Rng, dim: usize, kappa: f64) -> f64 {
    let m1 = (dim - 1) as f64;
    let b = m1 / (2.0 * kappa + (4.0 * kappa * kappa + m1 * m1).sqrt());
    let x0 = (1.0 - b) / (1.0 + b);
    let c = kappa * x0 + m1 * (1.0 - x0 * x0).ln();
    let beta = Beta::new(m1 / 2.0, m1 / 2.0).expect("valid beta parameters");
    loop {
        let z: f64 = beta.sample(rng);
        let w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
        let u: f64 = rng.random();
        if kappa * w + m1 * (1.0 - x0 * w).ln() - c >= u.ln() {
            return w.clamp(-1.0, 1.0);
        }
    }
}

fn vmf_one(rng: &mut ChaCha8Rng, mean: &[f64], kappa: f64) -> Vec<f64> {
    let dim = mean.len();
    let w = sample_vmf_cosine(rng, dim, kappa);
    let v = random_orthogonal(rng, dim, std::slice::from_ref(&mean.to_vec()));
    let s = (1.0 - w * w).max(0.0).sqrt();
    let mut out: Vec<f64> = mean.iter().zip(&v).map(|(m, t)| w * m + s * t).collect();
    unit_in_place(&mut out);
    out
}

/// Draws `n` points from vMF(mean_direction, kappa); sample `i` uses stream `i`.
pub fn sample_vmf(params: &VmfParams) -> Result<Vec<UnitEmbedding>> {
    if !(params.kappa >= 0.0 && params.kappa.is_finite()) {
        return Err(Error::InvalidInput(format!("kappa must be finite and >= 0, got {}", params.kappa)));
    }
    let mean = params.mean_direction.as_slice();
    Ok((0..params.n)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(params.seed, i as u64 + 1);
            UnitEmbedding::from_unit_unchecked(vmf_one(&mut rng, mean, params.kappa))
        })
        .collect())
}

fn uniform_sphere(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    random_orthogonal(rng, dim, &[])
}

/// Unit tangent at `base` pointing toward `toward`; random when `toward` is
/// (anti)parallel to `base`.
fn tangent_toward(rng: &mut ChaCha8Rng, base: &[f64], toward: &[f64]) -> Vec<f64> {
    let mut t = toward.to_vec();
    let basis = [base.to_vec()];
    orthogonalize(&mut t, &basis);
    if sphere::norm(&t) <= 1e-9 {
        return random_orthogonal(rng, base.len(), &basis);
    }
    unit_in_place(&mut t);
    t
}

/// Point `angle` radians from `base` along the great circle with tangent `tangent`.
fn geodesic_step(base: &[f64], tangent: &[f64], angle: f64) -> Vec<f64> {
    let (s, c) = angle.sin_cos();
    let mut out: Vec<f64> = base.iter().zip(tangent).map(|(b, t)| c * b + s * t).collect();
    unit_in_place(&mut out);
    out
}

fn unit(v: Vec<f64>) -> UnitEmbedding {
    UnitEmbedding::from_unit_unchecked(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    Type1,
    Type2,
    Type3,
    Multidomain,
}

impl ScenarioKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::Type1 => "type1",
            ScenarioKind::Type2 => "type2",
            ScenarioKind::Type3 => "type3",
            ScenarioKind::Multidomain => "multidomain",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    pub dim: usize,
    pub n_grounded: usize,
    pub n_halluc: usize,
    pub kappa_cluster: f64,
    /// theta(q, c) for Type I; the response step angle otherwise.
    pub separation: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_domains: Option<usize>,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn new(scenario: ScenarioKind, dim: usize, n_grounded: usize, n_halluc: usize) -> Self {
        Self {
            scenario,
            dim,
            n_grounded,
            n_halluc,
            kappa_cluster: 50.0,
            separation: std::f64::consts::FRAC_PI_3,
            n_domains: (scenario == ScenarioKind::Multidomain).then_some(3),
            seed: 0,
        }
    }

    /// Concentration handed to the vMF sampler.
    pub fn vmf_kappa(&self) -> f64 {
        self.kappa_cluster * (self.dim - 1) as f64
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if self.dim < 3 && self.scenario != ScenarioKind::Multidomain {
            return bad(format!("dim must be >= 3, got {}", self.dim));
        }
        if self.n_grounded == 0 || self.n_halluc == 0 {
            return bad(format!(
                "n_grounded and n_halluc must be positive, got {} and {}",
                self.n_grounded, self.n_halluc
            ));
        }
        if !(self.kappa_cluster >= 0.0 && self.kappa_cluster.is_finite()) {
            return bad(format!("kappa_cluster must be finite and >= 0, got {}", self.kappa_cluster));
        }
        if !(self.separation > 0.0 && self.separation < std::f64::consts::PI) {
            return bad(format!("separation must lie in (0, pi), got {}", self.separation));
        }
        if self.scenario == ScenarioKind::Multidomain {
            let n = self.n_domains.unwrap_or(0);
            if n < 2 {
                return bad(format!("multidomain needs n_domains >= 2, got {n}"));
            }
            if n > self.dim {
                return Err(Error::CapacityExceeded {
                    n_domains: n,
                    dim: self.dim,
                });
            }
            if self.dim < 3 {
                return bad(format!("dim must be >= 3, got {}", self.dim));
            }
        }
        Ok(())
    }

    fn expect(&self, kind: ScenarioKind) -> Result<()> {
        if self.scenario != kind {
            return Err(Error::InvalidInput(format!(
                "config is for scenario {}, not {}",
                self.scenario.as_str(),
                kind.as_str()
            )));
        }
        self.validate()
    }
}

/// Ground-truth geometry of one generated domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedDomain {
    pub name: String,
    /// Planted grounded displacement direction (Type II/III and multidomain).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grounding_direction: Option<Vec<f64>>,
    /// Planted confabulation direction (Type II and multidomain).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confab_direction: Option<Vec<f64>>,
}

/// Sidecar describing what a generator planted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedTruth {
    pub config: ScenarioConfig,
    pub vmf_kappa: f64,
    pub domains: Vec<PlantedDomain>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedScenario {
    pub records: Vec<DetectionRecord>,
    pub truth: PlantedTruth,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiDomainScenario {
    pub domains: Vec<(String, Vec<DetectionRecord>)>,
    pub truth: PlantedTruth,
}

impl MultiDomainScenario {
    /// All domains concatenated in domain order.
    pub fn flatten(&self) -> Vec<DetectionRecord> {
        self.domains.iter().flat_map(|(_, r)| r.iter().cloned()).collect()
    }
}

fn record_stream(domain: usize, index: usize) -> u64 {
    ((domain as u64 + 1) << 32) | index as u64
}

fn id_width(n: usize) -> usize {
    n.to_string().len().max(5)
}

struct RecordSpec<'a> {
    prefix: &'a str,
    domain: &'a str,
    width: usize,
    index: usize,
    label: Label,
    halluc_type: Option<HallucType>,
}

impl RecordSpec<'_> {
    fn build(&self, q: Vec<f64>, c: Option<Vec<f64>>, r: Vec<f64>) -> DetectionRecord {
        let id = format!("{}-{:0w$}", self.prefix, self.index, w = self.width);
        let mut rec = DetectionRecord::new(id, self.label);
        rec.domain = self.domain.to_string();
        rec.question = format!("question {}:{}", self.domain, self.index);
        rec.response = format!("response {}:{}", self.domain, self.index);
        rec.halluc_type = self.halluc_type;
        rec.q_emb = Some(unit(q));
        if let Some(c) = c {
            rec.context = Some(format!("context {}:{}", self.domain, self.index));
            rec.c_emb = Some(unit(c));
        }
        rec.r_emb = Some(unit(r));
        rec
    }
}

/// Indexed parallel record generation; `make(i, label)` builds record `i`.
fn generate<F>(cfg: &ScenarioConfig, make: F) -> Vec<DetectionRecord>
where
    F: Fn(usize, Label) -> DetectionRecord + Sync,
{
    (0..cfg.n_grounded + cfg.n_halluc)
        .into_par_iter()
        .map(|i| {
            let label = if i < cfg.n_grounded {
                Label::Grounded
            } else {
                Label::Hallucinated
            };
            make(i, label)
        })
        .collect()
}

/// `count` orthonormal vectors from the seed's frame stream.
fn planted_frame(cfg: &ScenarioConfig, count: usize) -> Vec<Vec<f64>> {
    let mut rng = stream_rng(cfg.seed, FRAME_STREAM);
    let mut frame: Vec<Vec<f64>> = Vec::with_capacity(count);
    for _ in 0..count {
        let v = random_orthogonal(&mut rng, cfg.dim, &frame);
        frame.push(v);
    }
    frame
}

/// Response a geodesic step of `angle` from `q` toward a vMF draw around `mean`.
fn step_response(rng: &mut ChaCha8Rng, q: &[f64], mean: &[f64], kappa: f64, angle: f64) -> Vec<f64> {
    let u = vmf_one(rng, mean, kappa);
    let t = tangent_toward(rng, q, &u);
    geodesic_step(q, &t, angle)
}

pub fn gen_type1(cfg: &ScenarioConfig) -> Result<GeneratedScenario> {
    cfg.expect(ScenarioKind::Type1)?;
    let kappa = cfg.vmf_kappa();
    let width = id_width(cfg.n_grounded + cfg.n_halluc);
    let records = generate(cfg, |i, label| {
        let mut rng = stream_rng(cfg.seed, record_stream(0, i));
        let q = uniform_sphere(&mut rng, cfg.dim);
        let dir = random_orthogonal(&mut rng, cfg.dim, std::slice::from_ref(&q));
        let c = geodesic_step(&q, &dir, cfg.separation);
        let fraction = match label {
            Label::Grounded => GROUNDED_ARC_FRACTION,
            Label::Hallucinated => UNFAITHFUL_ARC_FRACTION,
        };
        let anchor = geodesic_step(&q, &dir, fraction * cfg.separation);
        let r = vmf_one(&mut rng, &anchor, kappa);
        RecordSpec {
            prefix: "type1",
            domain: "type1",
            width,
            index: i,
            label,
            halluc_type: (label == Label::Hallucinated).then_some(HallucType::I),
        }
        .build(q, Some(c), r)
    });
    Ok(GeneratedScenario {
        records,
        truth: PlantedTruth {
            config: cfg.clone(),
            vmf_kappa: kappa,
            domains: vec![PlantedDomain {
                name: "type1".into(),
                grounding_direction: None,
                confab_direction: None,
            }],
        },
    })
}

fn type2_domain(
    cfg: &ScenarioConfig,
    domain_index: usize,
    name: &str,
    grounding: &[f64],
    confab: &[f64],
) -> Vec<DetectionRecord> {
    let kappa = cfg.vmf_kappa();
    let width = id_width(cfg.n_grounded + cfg.n_halluc);
    generate(cfg, |i, label| {
        let mut rng = stream_rng(cfg.seed, record_stream(domain_index, i));
        let q = uniform_sphere(&mut rng, cfg.dim);
        let mean = match label {
            Label::Grounded => grounding,
            Label::Hallucinated => confab,
        };
        let r = step_response(&mut rng, &q, mean, kappa, cfg.separation);
        RecordSpec {
            prefix: name,
            domain: name,
            width,
            index: i,
            label,
            halluc_type: (label == Label::Hallucinated).then_some(HallucType::II),
        }
        .build(q, None, r)
    })
}

pub fn gen_type2(cfg: &ScenarioConfig) -> Result<GeneratedScenario> {
    cfg.expect(ScenarioKind::Type2)?;
    let frame = planted_frame(cfg, 2);
    let records = type2_domain(cfg, 0, "type2", &frame[0], &frame[1]);
    Ok(GeneratedScenario {
        records,
        truth: PlantedTruth {
            config: cfg.clone(),
            vmf_kappa: cfg.vmf_kappa(),
            domains: vec![PlantedDomain {
                name: "type2".into(),
                grounding_direction: Some(frame[0].clone()),
                confab_direction: Some(frame[1].clone()),
            }],
        },
    })
}

pub fn gen_type3(cfg: &ScenarioConfig) -> Result<GeneratedScenario> {
    cfg.expect(ScenarioKind::Type3)?;
    let kappa = cfg.vmf_kappa();
    let frame = planted_frame(cfg, 1);
    let plausible = &frame[0];
    let width = id_width(cfg.n_grounded + cfg.n_halluc);
    let records = generate(cfg, |i, label| {
        let mut rng = stream_rng(cfg.seed, record_stream(0, i));
        let q = uniform_sphere(&mut rng, cfg.dim);
        let c = step_response(&mut rng, &q, plausible, kappa, cfg.separation);
        let r = step_response(&mut rng, &q, plausible, kappa, cfg.separation);
        RecordSpec {
            prefix: "type3",
            domain: "type3",
            width,
            index: i,
            label,
            halluc_type: (label == Label::Hallucinated).then_some(HallucType::III),
        }
        .build(q, Some(c), r)
    });
    Ok(GeneratedScenario {
        records,
        truth: PlantedTruth {
            config: cfg.clone(),
            vmf_kappa: kappa,
            domains: vec![PlantedDomain {
                name: "type3".into(),
                grounding_direction: Some(plausible.clone()),
                confab_direction: None,
            }],
        },
    })
}

pub fn gen_multidomain(cfg: &ScenarioConfig) -> Result<MultiDomainScenario> {
    cfg.expect(ScenarioKind::Multidomain)?;
    let n = cfg.n_domains.expect("validated");
    let frame = planted_frame(cfg, (2 * n).min(cfg.dim));
    let grounding: Vec<Vec<f64>> = frame[..n].to_vec();
    let mut rng = stream_rng(cfg.seed, FRAME_STREAM + 1);
    let confab: Vec<Vec<f64>> = (0..n)
        .map(|j| match frame.get(n + j) {
            Some(v) => v.clone(),
            None => random_orthogonal(&mut rng, cfg.dim, std::slice::from_ref(&grounding[j])),
        })
        .collect();
    let names: Vec<String> = (0..n).map(|j| format!("domain-{j}")).collect();
    let domains = (0..n)
        .into_par_iter()
        .map(|j| (names[j].clone(), type2_domain(cfg, j, &names[j], &grounding[j], &confab[j])))
        .collect();
    Ok(MultiDomainScenario {
        domains,
        truth: PlantedTruth {
            config: cfg.clone(),
            vmf_kappa: cfg.vmf_kappa(),
            domains: (0..n)
                .map(|j| PlantedDomain {
                    name: names[j].clone(),
                    grounding_direction: Some(grounding[j].clone()),
                    confab_direction: Some(confab[j].clone()),
                })
                .collect(),
        },
    })
}

/// Dispatches on `cfg.scenario`; multidomain output is flattened.
pub fn generate_scenario(cfg: &ScenarioConfig) -> Result<GeneratedScenario> {
    match cfg.scenario {
        ScenarioKind::Type1 => gen_type1(cfg),
        ScenarioKind::Type2 => gen_type2(cfg),
        ScenarioKind::Type3 => gen_type3(cfg),
        ScenarioKind::Multidomain => {
            let m = gen_multidomain(cfg)?;
            Ok(GeneratedScenario {
                records: m.flatten(),
                truth: m.truth,
            })
        }
    }
}

/// True when every embedding in `records` has unit norm within tolerance.
pub fn all_unit_norm(records: &[DetectionRecord]) -> bool {
    records.iter().all(|r| {
        [&r.q_emb, &r.c_emb, &r.r_emb]
            .into_iter()
            .flatten()
            .all(|e| (sphere::norm(e.as_slice()) - 1.0).abs() <= TOLERANCE)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::{angular_distance, normalize};
    use rand::SeedableRng;

    fn e(d: usize, i: usize) -> UnitEmbedding {
        let mut v = vec![0.0; d];
        v[i] = 1.0;
        normalize(&v).unwrap()
    }

    fn resultant(samples: &[Vec<f64>]) -> f64 {
        let d = samples[0].len();
        let mut m = vec![0.0; d];
        for s in samples {
            m.iter_mut().zip(s).for_each(|(a, b)| *a += b);
        }
        sphere::norm(&m) / samples.len() as f64
    }

    #[test]
    fn uniform_vmf_has_small_resultant() {
        let n = 10_000;
        for d in [3, 16] {
            let params = VmfParams {
                mean_direction: e(d, 0),
                kappa: 0.0,
                n,
                seed: 5,
            };
            let s: Vec<Vec<f64>> = sample_vmf(&params).unwrap().into_iter().map(|u| u.into_vec()).collect();
            let bound = 3.0 / (n as f64).sqrt();
            assert!(resultant(&s) <= bound, "d={d}: {}", resultant(&s));

            // Independent oracle: normalized Gaussians from a different generator.
            let mut rng = rand::rngs::StdRng::seed_from_u64(99);
            let oracle: Vec<Vec<f64>> = (0..n)
                .map(|_| {
                    let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                    let nv = sphere::norm(&v);
                    v.into_iter().map(|x| x / nv).collect()
                })
                .collect();
            assert!(resultant(&oracle) <= bound);
            // First coordinate second moment is 1/d for the uniform sphere.
            let m2 = s.iter().map(|v| v[0] * v[0]).sum::<f64>() / n as f64;
            let m2_oracle = oracle.iter().map(|v| v[0] * v[0]).sum::<f64>() / n as f64;
            assert!((m2 - m2_oracle).abs() < 0.02, "{m2} vs {m2_oracle}");
        }
    }

    #[test]
    fn concentrated_vmf_hugs_mean() {
        let mean = e(3, 2);
        let s = sample_vmf(&VmfParams {
            mean_direction: mean.clone(),
            kappa: 1e6,
            n: 500,
            seed: 1,
        })
        .unwrap();
        for x in &s {
            assert!(angular_distance(x, &mean).unwrap().radians() < 0.01);
        }
    }

    #[test]
    fn vmf_mean_cosine_matches_theory_in_3d() {
        // In 3D, E[w] = coth(kappa) - 1/kappa.
        let kappa = 4.0;
        let s = sample_vmf(&VmfParams {
            mean_direction: e(3, 0),
            kappa,
            n: 20_000,
            seed: 3,
        })
        .unwrap();
        let mean_w = s.iter().map(|x| x.as_slice()[0]).sum::<f64>() / s.len() as f64;
        let expect = 1.0 / kappa.tanh() - 1.0 / kappa;
        assert!((mean_w - expect).abs() < 0.01, "{mean_w} vs {expect}");
    }

    #[test]
    fn vmf_deterministic_and_2d() {
        let p = VmfParams {
            mean_direction: e(2, 1),
            kappa: 3.0,
            n: 50,
            seed: 11,
        };
        assert_eq!(sample_vmf(&p).unwrap(), sample_vmf(&p).unwrap());
        assert!(sample_vmf(&VmfParams { kappa: -1.0, ..p }).is_err());
    }

    #[test]
    fn counts_and_validation() {
        let cfg = ScenarioConfig::new(ScenarioKind::Type1, 8, 1, 1);
        assert_eq!(gen_type1(&cfg).unwrap().records.len(), 2);

        let bad = ScenarioConfig::new(ScenarioKind::Type3, 8, 0, 4);
        assert!(matches!(gen_type3(&bad), Err(Error::InvalidInput(_))));

        let wrong = ScenarioConfig::new(ScenarioKind::Type2, 8, 4, 4);
        assert!(gen_type1(&wrong).is_err());

        let mut md = ScenarioConfig::new(ScenarioKind::Multidomain, 8, 4, 4);
        md.n_domains = Some(9);
        assert_eq!(gen_multidomain(&md).unwrap_err(), Error::CapacityExceeded { n_domains: 9, dim: 8 });
        md.dim = 2;
        md.n_domains = Some(3);
        assert!(matches!(gen_multidomain(&md), Err(Error::CapacityExceeded { .. })));

        let mut sep = ScenarioConfig::new(ScenarioKind::Type2, 8, 4, 4);
        sep.separation = std::f64::consts::PI;
        assert!(gen_type2(&sep).is_err());
    }

    #[test]
    fn type1_sgi_straddles_one() {
        let mut cfg = ScenarioConfig::new(ScenarioKind::Type1, 64, 200, 200);
        cfg.separation = std::f64::consts::FRAC_PI_2;
        let g = gen_type1(&cfg).unwrap();
        let (mut sg, mut sh) = (Vec::new(), Vec::new());
        for r in &g.records {
            let (q, c, resp) = r.qcr().unwrap();
            let v = sphere::sgi(q, c, resp).unwrap().ratio;
            if r.is_grounded() { sg.push(v) } else { sh.push(v) }
            let qc = angular_distance(q, c).unwrap().radians();
            assert!((qc - cfg.separation).abs() < 1e-9);
        }
        let mg = sg.iter().sum::<f64>() / sg.len() as f64;
        let mh = sh.iter().sum::<f64>() / sh.len() as f64;
        assert!(mg > 1.0 && 1.0 > mh, "{mg} {mh}");
    }

    #[test]
    fn multidomain_frame_is_orthonormal() {
        let mut cfg = ScenarioConfig::new(ScenarioKind::Multidomain, 16, 5, 5);
        cfg.n_domains = Some(4);
        let m = gen_multidomain(&cfg).unwrap();
        let dirs: Vec<&Vec<f64>> = m
            .truth
            .domains
            .iter()
            .flat_map(|d| [d.grounding_direction.as_ref().unwrap(), d.confab_direction.as_ref().unwrap()])
            .collect();
        for (i, a) in dirs.iter().enumerate() {
            for (j, b) in dirs.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((sphere::dot(a, b) - want).abs() < 1e-12);
            }
        }
        assert_eq!(m.domains.len(), 4);
        assert!(m.domains.iter().all(|(_, r)| r.len() == 10));
        assert_eq!(m.domains[2].1[0].id, "domain-2-00000");
    }

    #[test]
    fn full_capacity_multidomain_keeps_own_orthogonality() {
        let mut cfg = ScenarioConfig::new(ScenarioKind::Multidomain, 3, 3, 3);
        cfg.n_domains = Some(3);
        let m = gen_multidomain(&cfg).unwrap();
        for d in &m.truth.domains {
            let dot = sphere::dot(d.grounding_direction.as_ref().unwrap(), d.confab_direction.as_ref().unwrap());
            assert!(dot.abs() < 1e-12);
        }
        assert!(all_unit_norm(&m.flatten()));
    }

    #[test]
    fn type2_without_concentration_is_chance() {
        let mut cfg = ScenarioConfig::new(ScenarioKind::Type2, 128, 300, 300);
        cfg.kappa_cluster = 0.0;
        let g = gen_type2(&cfg).unwrap();
        let s = crate::eval::split_scores(&g.records, 0.8, crate::eval::Scorer::GammaGlobal, 0).unwrap();
        let (p, n) = crate::eval::split_by_label(&s);
        let a = crate::eval::auroc(&p, &n).unwrap();
        assert!((0.4..=0.6).contains(&a), "{a}");
    }

    #[test]
    fn type3_query_distances_match_across_labels() {
        let mut cfg = ScenarioConfig::new(ScenarioKind::Type3, 64, 400, 400);
        cfg.kappa_cluster = 5.0;
        let g = gen_type3(&cfg).unwrap();
        let stats = |label: Label| {
            let t: Vec<f64> = g
                .records
                .iter()
                .filter(|r| r.label == label)
                .map(|r| angular_distance(r.r_emb.as_ref().unwrap(), r.q_emb.as_ref().unwrap()).unwrap().radians())
                .collect();
            let m = t.iter().sum::<f64>() / t.len() as f64;
            let var = t.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (t.len() - 1) as f64;
            (m, var / t.len() as f64)
        };
        let (mt, vt) = stats(Label::Grounded);
        let (mf, vf) = stats(Label::Hallucinated);
        assert!((mt - mf).abs() <= 2.0 * (vt + vf).sqrt() + 1e-12, "{mt} vs {mf}");
        assert!(all_unit_norm(&g.records));
    }
}
