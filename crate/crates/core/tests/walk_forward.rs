use lawcast::corpus::{generate_synthetic_corpus, BillRecord, SnapshotPolicy, SyntheticCorpus, SyntheticSpec};
use lawcast::embeddings::EmbeddingConfig;
use lawcast::ensemble::{BaseSpec, StackConfig};
use lawcast::evaluation::{walk_forward, ModelSpec, TrainedSystem, WalkForwardConfig, WalkForwardResult};
use lawcast::inversion::InversionConfig;
use lawcast::learners::{ElasticNetParams, ForestParams, GbmParams};

fn corpus() -> SyntheticCorpus {
    let spec = SyntheticSpec {
        congress_start: 103,
        congress_end: 108,
        bills_per_congress: 150,
        house_rate: 0.15,
        senate_rate: 0.2,
        ..SyntheticSpec::default()
    };
    generate_synthetic_corpus(17, &spec).unwrap()
}

fn config() -> WalkForwardConfig {
    WalkForwardConfig {
        inversion: InversionConfig {
            embedding: EmbeddingConfig {
                dim: 10,
                epochs: 2,
                ..EmbeddingConfig::default()
            },
            ..InversionConfig::default()
        },
        stack: StackConfig {
            k_folds: 3,
            bases: vec![
                BaseSpec::Gbm(GbmParams {
                    n_stages: 20,
                    ..GbmParams::default()
                }),
                BaseSpec::Forest(ForestParams {
                    n_trees: 15,
                    min_leaf: 5,
                    ..ForestParams::default()
                }),
                BaseSpec::ElasticNet(ElasticNetParams::default()),
            ],
            ..StackConfig::default()
        },
        ..WalkForwardConfig::default()
    }
}

fn run(bills: &[BillRecord], c: &SyntheticCorpus, threads: usize) -> WalkForwardResult {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    pool.install(|| {
        walk_forward(
            bills,
            &c.committees(),
            &ModelSpec::ALL,
            SnapshotPolicy::Oldest,
            &config(),
        )
        .unwrap()
    })
}

#[test]
fn predictions_do_not_depend_on_thread_count_and_never_leak() {
    let c = corpus();
    let one = run(&c.bills, &c, 1);
    let four = run(&c.bills, &c, 4);
    assert_eq!(one.test_congresses, vec![107, 108]);
    assert_eq!(one.predictions, four.predictions);
    assert_eq!(one.sentence_posteriors, four.sentence_posteriors);
    one.check_no_leakage(&c.bills).unwrap();
    for m in ModelSpec::ALL {
        let rows = one.rows_for(m);
        assert_eq!(rows.len(), c.bills.iter().filter(|b| b.congress >= 107).count());
        assert!(rows.iter().all(|r| r.probability > 0.0 && r.probability < 1.0));
    }

    // Planting a test bill among the training ids must be caught.
    let mut tampered = one.clone();
    let test_bill = c.bills.iter().find(|b| b.congress == 108).unwrap();
    tampered
        .fits
        .iter_mut()
        .find(|f| f.predicted_congress == 107)
        .unwrap()
        .train_bill_ids
        .push(test_bill.bill_id.clone());
    let err = tampered.check_no_leakage(&c.bills).unwrap_err().to_string();
    assert!(err.contains(&test_bill.bill_id), "{err}");
}

#[test]
fn trained_system_reproduces_walk_forward_predictions() {
    let c = corpus();
    let membership = c.committees();
    let result = walk_forward(
        &c.bills,
        &membership,
        &[ModelSpec::Combined],
        SnapshotPolicy::Oldest,
        &config(),
    )
    .unwrap();
    let system = TrainedSystem::fit(
        &c.bills,
        &membership,
        ModelSpec::Combined,
        SnapshotPolicy::Oldest,
        107,
        &config(),
    )
    .unwrap();
    let targets: Vec<BillRecord> = c.bills.iter().filter(|b| b.congress == 107).cloned().collect();
    let got = system.predict(&targets, &membership, &c.bills).unwrap();
    let want: Vec<f64> = result
        .predictions
        .iter()
        .filter(|r| r.congress == 107)
        .map(|r| r.probability)
        .collect();
    assert_eq!(got.len(), want.len());
    for (g, w) in got.iter().zip(&want) {
        assert!((g - w).abs() < 1e-12, "{g} vs {w}");
    }

    let dir = tempfile::tempdir().unwrap();
    system.save(dir.path()).unwrap();
    let back = TrainedSystem::load(dir.path()).unwrap();
    assert_eq!(back.predict(&targets, &membership, &c.bills).unwrap(), got);
}
