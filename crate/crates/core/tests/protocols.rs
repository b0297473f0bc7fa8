use geoground_core::data::{load_dataset, write_dataset, DetectionRecord};
use geoground_core::direction::{build_reference_index, calibrate_global};
use geoground_core::eval::{auroc, loocv_scores, score_records, split_by_label, transfer_matrix, Scorer, ScoredRecord};
use geoground_core::sphere::UnitEmbedding;
use geoground_core::synthetic::{gen_multidomain, gen_type2, ScenarioConfig, ScenarioKind};

fn scored_auroc(s: &[ScoredRecord]) -> f64 {
    let (p, n) = split_by_label(s);
    auroc(&p, &n).unwrap()
}

fn grounded_pairs(records: &[DetectionRecord]) -> Vec<(UnitEmbedding, UnitEmbedding)> {
    records
        .iter()
        .filter(|r| r.is_grounded())
        .map(|r| (r.q_emb.clone().unwrap(), r.r_emb.clone().unwrap()))
        .collect()
}

fn moderate_type2(seed: u64) -> Vec<DetectionRecord> {
    let mut cfg = ScenarioConfig::new(ScenarioKind::Type2, 64, 300, 300);
    cfg.kappa_cluster = 0.5;
    cfg.seed = seed;
    gen_type2(&cfg).unwrap().records
}

#[test]
fn loocv_stays_close_to_in_sample_scoring() {
    for seed in 0..3 {
        let recs = moderate_type2(seed);
        let dir = calibrate_global(&grounded_pairs(&recs), "in-sample").unwrap().direction;
        let in_sample = scored_auroc(&score_records(&recs, &dir).unwrap());
        let index = build_reference_index(&recs).unwrap();
        let loo = scored_auroc(&loocv_scores(&recs, &index, Scorer::GammaGlobal).unwrap());
        assert!(in_sample < 0.995, "scenario should not saturate: {in_sample}");
        assert!(in_sample >= loo, "leave-one-out removes self-inclusion optimism");
        assert!((in_sample - loo).abs() <= 0.03, "{in_sample} vs {loo}");
    }
}

#[test]
fn loocv_of_unreferenced_records_matches_plain_scoring() {
    let recs = moderate_type2(4);
    let (reference, held): (Vec<_>, Vec<_>) = recs.iter().cloned().partition(|r| r.id.ends_with('0'));
    let index = build_reference_index(&reference).unwrap();
    let dir = calibrate_global(&grounded_pairs(&reference), "ref").unwrap().direction;
    let plain = score_records(&held, &dir).unwrap();
    let loo = loocv_scores(&held, &index, Scorer::GammaGlobal).unwrap();
    for (a, b) in plain.iter().zip(&loo) {
        assert_eq!(a.score.to_bits(), b.score.to_bits());
    }
}

#[test]
fn identical_domains_transfer_perfectly() {
    let recs = moderate_type2(9);
    let mut relabelled = recs.clone();
    for r in &mut relabelled {
        r.domain = "copy".into();
    }
    let m = transfer_matrix(&[("orig".into(), recs), ("copy".into(), relabelled)], 0.8, 1).unwrap();
    assert!((m.direction_cosines[0][1] - 1.0).abs() < 1e-12);
    assert_eq!(m.auroc_cells[0][1], m.auroc_cells[1][0]);
    assert_eq!(m.auroc_cells[0][0], m.auroc_cells[1][1]);
}

#[test]
fn orthogonal_domains_collapse_off_diagonal() {
    let mut cfg = ScenarioConfig::new(ScenarioKind::Multidomain, 128, 150, 150);
    cfg.n_domains = Some(4);
    let md = gen_multidomain(&cfg).unwrap();
    let m = transfer_matrix(&md.domains, 0.8, 0).unwrap();
    assert!(m.in_domain_mean() > 0.95);
    assert!((m.cross_domain_mean() - 0.5).abs() < 0.1);
    assert!(m.mean_off_diagonal_cosine().abs() < 0.2);
}

#[test]
fn generated_dataset_round_trips_through_jsonl() {
    let recs = moderate_type2(3);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t2.jsonl");
    write_dataset(&recs, &path).unwrap();
    let back = load_dataset(&path).unwrap();
    assert_eq!(back.len(), recs.len());
    for (a, b) in recs.iter().zip(&back) {
        assert_eq!(a.id, b.id);
        assert_eq!(a.label, b.label);
        for (x, y) in a.r_emb.as_ref().unwrap().as_slice().iter().zip(b.r_emb.as_ref().unwrap().as_slice()) {
            assert!((x - y).abs() < 1e-15);
        }
    }
}
