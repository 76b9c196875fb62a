use chronolm::citegraph::*;
use chronolm::rng::seeded;
use nalgebra::DMatrix;
use rand::Rng;

mod common;
use common::graph::*;

#[test]
fn fixture_predictor_values() {
    let g = fixture();
    assert_eq!(g.degrees(), vec![2, 2, 3, 1]);
    assert_eq!(score_cn(&g, 0, 1), 1.0);
    assert!((score_jc(&g, 0, 1) - 1.0 / 3.0).abs() < 1e-15);
    assert_eq!(score_pa(&g, 0, 1), 4.0);
    assert!((score_ra(&g, 0, 1) - 1.0 / 3.0).abs() < 1e-15);
    assert!((score_aa(&g, 0, 1) - 0.9102392266268373).abs() < 1e-12);
}

#[test]
fn isolated_nodes_share_nothing() {
    let g = CitationGraph::new(vec![node("x", 2010, "cs"), node("y", 2010, "cs")], []);
    assert_eq!(score_cn(&g, 0, 1), 0.0);
    assert_eq!(score_jc(&g, 0, 1), 0.0);
}

#[test]
fn pairwise_predictors_are_symmetric() {
    let g = random_graph(30, 0.2, 4);
    for u in 0..30 {
        for v in 0..30 {
            for f in [score_cn, score_jc, score_pa, score_aa, score_ra] {
                assert_eq!(f(&g, u, v), f(&g, v, u));
            }
        }
    }
}

#[test]
fn aa_term_exceeds_ra_term_for_degree_three_and_up() {
    for d in 3..50 {
        let d = d as f64;
        assert!(1.0 / d.ln() > 1.0 / d);
    }
    let nodes = (0..4).map(|i| node(&i.to_string(), 2010, "cs")).collect();
    let star = CitationGraph::new(nodes, [(0, 1), (0, 2), (0, 3)]);
    assert!(score_aa(&star, 1, 2) > score_ra(&star, 1, 2));
}

#[test]
fn ppr_matches_linear_solve() {
    let nodes = (0..3).map(|i| node(&i.to_string(), 2010, "cs")).collect();
    let path = CitationGraph::new(nodes, [(0, 1), (1, 2)]);
    let p = PprParams::default();
    for g in [path, random_graph(25, 0.15, 9)] {
        for u in 0..g.num_nodes().min(5) {
            let pi = ppr_vector(&g, u, &p).unwrap();
            let oracle = ppr_dense(&g, u, p.restart);
            let l1: f64 = pi.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).sum();
            assert!(l1 < 1e-6, "l1 {l1}");
            assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-8);
        }
    }
}

#[test]
fn ppr_single_node_and_cap() {
    let g = CitationGraph::new(vec![node("x", 2010, "cs"), node("y", 2010, "cs")], []);
    assert_eq!(ppr_vector(&g, 0, &PprParams::default()).unwrap()[0], 1.0);
    let tight = PprParams {
        max_iter: 2,
        ..Default::default()
    };
    assert!(matches!(
        ppr_vector(&fixture(), 0, &tight),
        Err(chronolm::Error::NotConverged { .. })
    ));
}

#[test]
fn auc_tie_case_and_cross_check() {
    let auc = auc_roc(&[0.9, 0.4, 0.7, 0.4], &[true, true, false, false]).unwrap();
    assert_eq!(auc, 0.625);
    let mut rng = seeded(2);
    for _ in 0..20 {
        let scores: Vec<f64> = (0..60)
            .map(|_| (rng.random::<f64>() * 8.0).floor())
            .collect();
        let labels: Vec<bool> = (0..60).map(|i| i % 3 == 0).collect();
        let mut pairs = 0.0;
        for (i, &li) in labels.iter().enumerate() {
            for (j, &lj) in labels.iter().enumerate() {
                if li && !lj {
                    pairs += if scores[i] > scores[j] {
                        1.0
                    } else if scores[i] == scores[j] {
                        0.5
                    } else {
                        0.0
                    };
                }
            }
        }
        let oracle = pairs / (20.0 * 40.0);
        let a = auc_roc(&scores, &labels).unwrap();
        assert!((a - oracle).abs() < 1e-12);
        assert!((a - auc_trapezoid(&scores, &labels).unwrap()).abs() < 1e-9);
        let scaled: Vec<f64> = scores.iter().map(|s| s * 3.7).collect();
        assert_eq!(auc_roc(&scaled, &labels).unwrap(), a);
    }
    assert!(auc_roc(&[0.1, 0.2], &[true, true]).is_err());
}

#[test]
fn random_scores_give_chance_auc() {
    let mut rng = seeded(8);
    let scores: Vec<f64> = (0..20_000).map(|_| rng.random()).collect();
    let labels: Vec<bool> = (0..20_000).map(|_| rng.random()).collect();
    assert!((auc_roc(&scores, &labels).unwrap() - 0.5).abs() < 0.05);
}

#[test]
fn static_harness_reports_folds() {
    let g = random_graph(80, 0.08, 1);
    let data = make_static_dataset(&g, 60, 3).unwrap();
    let score_graph = without_positives(&g, &data);
    for (u, v) in data.positives() {
        assert!(!score_graph.has_edge(u, v));
    }
    let r = eval_topological(
        &score_graph,
        &data,
        Predictor::Pa,
        &PprParams::default(),
        &LogRegParams::default(),
    )
    .unwrap();
    assert_eq!(r.folds.len(), NUM_FOLDS);
    let csv = cv_table_csv(&[r]);
    assert!(csv.starts_with("method,auc,accuracy,precision,recall,f1\npa,"));
    assert!(csv.contains(" ("));
}

#[test]
fn gcn_forward_matches_dense_oracle() {
    let g = random_graph(15, 0.25, 5);
    let f = FeatureMatrix::random(15, 6, 1);
    let w = GnnWeights::init(6, 5, 4, 3, 2);
    let emb = sage_forward(&GnnInput::new(&g, &f), &w);
    let a = dense_norm_adj(&g);
    let h0 = DMatrix::from_row_slice(15, 6, &f.data);
    let w0 = DMatrix::from_row_slice(6, 5, &w.tensors[W0]);
    let w1 = DMatrix::from_row_slice(5, 4, &w.tensors[W1]);
    let h1 = (&a * h0 * w0).map(|v| v.max(0.0));
    let h2 = &a * h1 * w1;
    for i in 0..15 {
        for j in 0..4 {
            assert!((h2[(i, j)] - emb.h2[i * 4 + j]).abs() < 1e-12);
        }
    }
}

#[test]
fn edgeless_graph_is_per_node_transform() {
    let nodes = (0..3).map(|i| node(&i.to_string(), 2010, "cs")).collect();
    let g = CitationGraph::new(nodes, []);
    let f = FeatureMatrix::random(3, 4, 3);
    let w = GnnWeights::init(4, 3, 2, 2, 1);
    let emb = sage_forward(&GnnInput::new(&g, &f), &w);
    for i in 0..3 {
        let h: Vec<f64> = (0..3)
            .map(|j| {
                (0..4)
                    .map(|k| f.row(i)[k] * w.tensors[W0][k * 3 + j])
                    .sum::<f64>()
                    .max(0.0)
            })
            .collect();
        for o in 0..2 {
            let want: f64 = (0..3).map(|j| h[j] * w.tensors[W1][j * 2 + o]).sum();
            assert!((emb.h2[i * 2 + o] - want).abs() < 1e-12);
        }
    }
}

#[test]
fn mlp_score_matches_loop() {
    let w = GnnWeights::init(2, 2, 3, 4, 11);
    let (hu, hv) = ([0.3, -0.2, 0.9], [-0.5, 0.1, 0.4]);
    let x: Vec<f64> = hu.iter().chain(&hv).copied().collect();
    let mut t = w.tensors[B2][0];
    for k in 0..4 {
        let mut z = w.tensors[B1][k];
        for i in 0..6 {
            z += w.tensors[M1][k * 6 + i] * x[i];
        }
        t += w.tensors[M2][k] * z.max(0.0);
    }
    let s = mlp_score(&hu, &hv, &w);
    assert!((s - 1.0 / (1.0 + (-t).exp())).abs() < 1e-12);
    assert!(s > 0.0 && s < 1.0);
}

#[test]
fn gnn_gradient_matches_finite_differences() {
    let g = random_graph(10, 0.3, 12);
    let f = FeatureMatrix::random(10, 5, 2);
    let input = GnnInput::new(&g, &f);
    let mut w = GnnWeights::init(5, 6, 4, 5, 3);
    w.tensors[B1]
        .iter_mut()
        .enumerate()
        .for_each(|(i, b)| *b = 0.1 * i as f64);
    let pairs = vec![(0, 1), (2, 3), (4, 9), (5, 7), (6, 8), (1, 9)];
    let labels = vec![true, false, true, false, true, false];
    let (_, grad) = loss_and_grad(&input, &w, &pairs, &labels);
    let h = 1e-6;
    let mut worst = 0.0f64;
    for t in 0..w.tensors.len() {
        for j in 0..w.tensors[t].len() {
            let mut p = w.clone();
            p.tensors[t][j] += h;
            let mut m = w.clone();
            m.tensors[t][j] -= h;
            let fd = (loss_and_grad(&input, &p, &pairs, &labels).0
                - loss_and_grad(&input, &m, &pairs, &labels).0)
                / (2.0 * h);
            let g = grad[t][j];
            let rel = (g - fd).abs() / g.abs().max(fd.abs()).max(1e-6);
            worst = worst.max(rel);
        }
    }
    assert!(worst < 1e-2, "max relative error {worst}");
}

#[test]
fn gnn_learns_block_structure() {
    let g = two_blocks(160, 6);
    let data = make_static_dataset(&g, 200, 2).unwrap();
    let f = FeatureMatrix::sub(&g).unwrap();
    let (tr, te) = data.split(0);
    let (train, test) = (data.subset(&tr), data.subset(&te));
    let message = without_positives(&g, &test);
    let m = fit_evaluate(
        &message,
        &f,
        &train,
        &test,
        &GnnHp {
            hidden: 16,
            out: 16,
            mlp: 16,
            ..Default::default()
        },
    )
    .unwrap();
    assert!(m.auc > 0.9, "auc {}", m.auc);
}

#[test]
fn gnn_training_is_deterministic() {
    let g = two_blocks(40, 1);
    let data = make_static_dataset(&g, 20, 1).unwrap();
    let f = FeatureMatrix::sub(&g).unwrap();
    let hp = GnnHp {
        hidden: 8,
        out: 8,
        mlp: 8,
        epochs: 20,
        ..Default::default()
    };
    let input = GnnInput::new(&g, &f);
    let a = train_gnn(&input, &data, &hp).unwrap();
    let b = train_gnn(&input, &data, &hp).unwrap();
    assert_eq!(a, b);
}

#[test]
fn temporal_positives_have_test_year() {
    let mut rng = seeded(3);
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    for year in 2010..2016 {
        for k in 0..25 {
            let i = nodes.len();
            nodes.push(node(
                &format!("{year}-{k}"),
                year,
                if k % 2 == 0 { "cs" } else { "bio" },
            ));
            if i >= 25 {
                for _ in 0..3 {
                    let mut v = rng.random_range(0..i - k);
                    if (v % 25) % 2 != k % 2 {
                        v = v.saturating_sub(1);
                    }
                    edges.push((i, v));
                }
            }
        }
    }
    let g = CitationGraph::new(nodes, edges);
    for dt in 1..=3 {
        let d = temporal_test_set(&g, 2012, 2012 + dt, 5).unwrap();
        for (u, _) in d.positives() {
            assert_eq!(g.nodes[u].year, 2012 + dt);
        }
    }
    let opts = TemporalOptions {
        t0: 2012,
        dts: vec![1, 2, 3],
        sample_size: 100,
        seed: 4,
        ppr: PprParams::default(),
        logreg: LogRegParams::default(),
        gnn: GnnHp {
            hidden: 8,
            out: 8,
            mlp: 8,
            epochs: 50,
            ..Default::default()
        },
    };
    let f = FeatureMatrix::major(&g).unwrap();
    let r = temporal_protocol(&g, Method::Gnn, Some(&f), &opts).unwrap();
    assert_eq!(r.rows.len(), 3);
    assert!(r.notes.iter().any(|n| n == NEGATIVE_YEAR_NOTE));
    assert!(temporal_csv(&r).lines().count() == 4);
}
