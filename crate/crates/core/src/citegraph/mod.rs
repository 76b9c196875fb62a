//! Citation graph storage and the link-prediction suite.

mod dataset;
mod gnn;
mod graph;
mod harness;
mod metrics;
mod predictors;
mod protocol;

pub use dataset::{make_static_dataset, LinkDataset, NUM_FOLDS};
pub use gnn::{
    bce_from_logit, eval_gnn_static, fit_evaluate, loss_and_grad, mlp_score, sage_forward,
    score_gnn, train_gnn, Embeddings, FeatureMatrix, GnnHp, GnnInput, GnnWeights, NormAdj, B1, B2,
    M1, M2, W0, W1,
};
pub use graph::{CitationGraph, NodeMeta};
pub use harness::{
    eval_topological, fit_and_score, without_positives, CvReport, FoldResult, LogRegParams,
    ScoreModel,
};
pub use metrics::{auc_roc, auc_trapezoid, evaluate, Metrics};
pub use predictors::{
    ppr_vector, score_aa, score_cn, score_jc, score_pa, score_pairs, score_ppr, score_ra,
    PprParams, Predictor,
};
pub use protocol::{
    cv_table_csv, edges_before, method_name, temporal_csv, temporal_protocol, temporal_test_set,
    Method, TemporalOptions, TemporalReport, TemporalRow, NEGATIVE_YEAR_NOTE,
};
