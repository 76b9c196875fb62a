use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use super::args::*;
use super::Run;
use crate::citegraph::{
    cv_table_csv, eval_gnn_static, eval_topological, make_static_dataset, method_name,
    temporal_csv, temporal_protocol, without_positives, CitationGraph, CvReport, FeatureMatrix,
    GnnHp, LogRegParams, Method, PprParams, TemporalOptions,
};
use crate::corpus::{self, build_slices, read_documents, read_slices, CleanOptions, RawDocument};
use crate::mlm::{encode_cls, fill_mask, Checkpoint, Model, ModelConfig, TrainHp};
use crate::plot::{heatmap, line_chart, Table};
use crate::probe::{
    build_perf_matrix, mann_whitney_u, pca_weights, probe_text, read_csv_column, select_tensors,
    summarize_perf, token_prob_csv, track_token_probability, LogisticRegression, PerfOptions,
    ProbeClassifier, ProbeTask,
};
use crate::series::{self, build_series, SeriesRegistry};
use crate::synth::{
    block_graph, drift_corpus, two_era_corpus, DriftOptions, GraphOptions, TwoEraOptions,
};
use crate::vocab::{build_vocab, count_words, vocab_jaccard, Vocabulary};
use crate::{Error, Result};

pub(super) fn execute(cli: &Cli) -> Result<()> {
    match cli.global.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            pool.install(|| dispatch(cli))
        }
        None => dispatch(cli),
    }
}

fn snapshot<A: Serialize>(g: &Global, name: &str, args: &A) -> Result<toml::Table> {
    let bad = |e: toml::ser::Error| Error::Config(format!("config snapshot: {e}"));
    let mut table = toml::Table::try_from(g).map_err(bad)?;
    table.insert(super::COMMAND_KEY.into(), name.into());
    table.extend(toml::Table::try_from(args).map_err(bad)?);
    Ok(table)
}

fn dispatch(cli: &Cli) -> Result<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Corpus(CorpusCmd::Clean(a)) => {
            finish(g, "corpus clean", a, |r| corpus_clean(r, a))
        }
        Command::Vocab(VocabCmd::Build(a)) => finish(g, "vocab build", a, |r| vocab_build(r, g, a)),
        Command::Model(ModelCmd::Pretrain(a)) => {
            finish(g, "model pretrain", a, |r| model_pretrain(r, g, a))
        }
        Command::Series(SeriesCmd::Build(a)) => {
            finish(g, "series build", a, |r| series_build(r, g, a))
        }
        Command::Series(SeriesCmd::Interpolate(a)) => {
            finish(g, "series interpolate", a, |r| interpolate(r, a))
        }
        Command::Series(SeriesCmd::RandomMatched(a)) => {
            finish(g, "series random-matched", a, |r| random_matched(r, g, a))
        }
        Command::Probe(ProbeCmd::PerfMatrix(a)) => {
            finish(g, "probe perf-matrix", a, |r| perf_matrix(r, g, a))
        }
        Command::Probe(ProbeCmd::FillMask(a)) => {
            finish(g, "probe fill-mask", a, |r| probe_fill_mask(r, a))
        }
        Command::Probe(ProbeCmd::Pca(a)) => finish(g, "probe pca", a, |r| probe_pca(r, a)),
        Command::Probe(ProbeCmd::Mwu(a)) => finish(g, "probe mwu", a, |r| probe_mwu(r, a)),
        Command::Linkpred(LinkpredCmd::Static(a)) => {
            finish(g, "linkpred static", a, |r| linkpred_static(r, g, a))
        }
        Command::Linkpred(LinkpredCmd::Temporal(a)) => {
            finish(g, "linkpred temporal", a, |r| linkpred_temporal(r, g, a))
        }
        Command::Synth(SynthCmd::Corpus(a)) => {
            finish(g, "synth corpus", a, |r| synth_corpus(r, g, a))
        }
        Command::Synth(SynthCmd::Graph(a)) => finish(g, "synth graph", a, |r| synth_graph(r, g, a)),
        Command::Plot(a) => finish(g, "plot", a, |r| plot(r, a)),
    }
}

fn finish<A: Serialize>(
    g: &Global,
    name: &str,
    args: &A,
    body: impl FnOnce(&mut Run) -> Result<()>,
) -> Result<()> {
    let snap = snapshot(g, name, args)?;
    let mut run = Run::new(&g.out_dir, name, g.seed)?;
    body(&mut run)?;
    run.finish(&snap)
}

/// `A..B` (inclusive) or a comma-separated list.
pub fn parse_years(s: &str) -> Result<Vec<i32>> {
    let bad = || Error::Config(format!("bad year list `{s}`; use A..B or A,B,C"));
    if let Some((a, b)) = s.split_once("..") {
        let (a, b): (i32, i32) = (
            a.trim().parse().map_err(|_| bad())?,
            b.trim().parse().map_err(|_| bad())?,
        );
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',')
        .map(|p| p.trim().parse().map_err(|_| bad()))
        .collect()
}

fn corpus_clean(run: &mut Run, a: &CleanArgs) -> Result<()> {
    let input = run.input(&a.input);
    let docs = read_documents(&input)?;
    let year_range = match &a.years {
        Some(y) => {
            let ys = parse_years(y)?;
            Some((ys[0], *ys.last().expect("non-empty")))
        }
        None => None,
    };
    let opts = CleanOptions {
        mode: a.mode.parse().map_err(Error::Config)?,
        fields: a.fields.parse().map_err(Error::Config)?,
        year_range,
    };
    let build = build_slices(&docs, &opts);
    for p in corpus::write_slices(&run.out_dir, &build)? {
        run.produced(p);
    }
    let per_year: BTreeMap<String, usize> = build
        .slices
        .iter()
        .map(|(y, s)| (y.to_string(), s.len()))
        .collect();
    run.write_json(
        "clean_report.json",
        &json!({
            "documents": docs.len(),
            "rejected_documents": build.rejects.len(),
            "markup_warnings": build.markup_warnings,
            "sentences_per_year": per_year,
        }),
    )?;
    Ok(())
}

fn load_slices(run: &mut Run, dir: &Path) -> Result<BTreeMap<i32, corpus::CorpusSlice>> {
    let slices = read_slices(dir)?;
    for y in slices.keys() {
        run.input(&dir.join(corpus::slice_file_name(*y)));
    }
    Ok(slices)
}

fn default_vocab_cap(g: &Global) -> usize {
    match g.preset {
        Preset::Desk => 8192,
        Preset::Base => 53_100,
    }
}

fn vocab_build(run: &mut Run, g: &Global, a: &VocabArgs) -> Result<()> {
    let slices = load_slices(run, &a.slices)?;
    let cap = a.max_size.unwrap_or_else(|| default_vocab_cap(g));
    let vocab = build_vocab(&count_words(slices.values()), a.min_count, Some(cap))?;
    let path = run.path(&a.out);
    vocab.write_tsv(&path)?;
    run.produced(path);
    if a.jaccard {
        let per_year: Vec<(i32, Vocabulary)> = slices
            .iter()
            .map(|(y, s)| Ok((*y, build_vocab(&count_words([s]), a.min_count, Some(cap))?)))
            .collect::<Result<_>>()?;
        let mut csv = String::from("year_a,year_b,jaccard\n");
        for (ya, va) in &per_year {
            for (yb, vb) in &per_year {
                csv.push_str(&format!("{ya},{yb},{}\n", vocab_jaccard(va, vb)));
            }
        }
        run.write("vocab_jaccard.csv", csv)?;
    }
    run.write_json(
        "vocab_report.json",
        &json!({ "size": vocab.size(), "min_count": a.min_count, "max_size": cap }),
    )?;
    Ok(())
}

fn model_config(g: &Global, arch: &ArchArgs, vocab_size: usize) -> ModelConfig {
    let base = match g.preset {
        Preset::Desk => ModelConfig::desk(vocab_size),
        Preset::Base => ModelConfig::base(vocab_size),
    };
    ModelConfig {
        n_layers: arch.layers.unwrap_or(base.n_layers),
        n_heads: arch.heads.unwrap_or(base.n_heads),
        d_model: arch.d_model.unwrap_or(base.d_model),
        d_ff: arch.d_ff.unwrap_or(base.d_ff),
        max_len: arch.max_len.unwrap_or(base.max_len),
        dropout: arch.dropout.unwrap_or(base.dropout),
        tie_embeddings: arch.tie_embeddings,
        seed: g.seed,
        ..base
    }
}

fn train_hp(g: &Global, t: &TrainArgs) -> TrainHp {
    TrainHp {
        lr: t.lr,
        batch_size: t.batch_size,
        epochs: t.epochs,
        seed: g.seed,
        weight_decay: t.weight_decay,
        ..TrainHp::default()
    }
}

fn losses_csv(curves: &[(i32, &[f64])]) -> String {
    let mut s = String::from("year,step,loss\n");
    for (y, l) in curves {
        for (i, v) in l.iter().enumerate() {
            s.push_str(&format!("{y},{},{v}\n", i + 1));
        }
    }
    s
}

fn model_pretrain(run: &mut Run, g: &Global, a: &PretrainArgs) -> Result<()> {
    let slices = load_slices(run, &a.slices)?;
    let vocab = Vocabulary::read_tsv(&run.input(&a.vocab))?;
    let cfg = model_config(g, &a.arch, vocab.size());
    let trained =
        series::pretrain_base(&slices, a.base_year, &vocab, &cfg, &train_hp(g, &a.train))?;
    let path = run.path(&series::checkpoint_file_name(a.base_year));
    trained.checkpoint.save(&path)?;
    run.produced(path);
    run.write("losses.csv", losses_csv(&[(a.base_year, &trained.losses)]))?;
    Ok(())
}

fn series_build(run: &mut Run, g: &Global, a: &SeriesBuildArgs) -> Result<()> {
    let slices = load_slices(run, &a.slices)?;
    let vocab_path = run.input(&a.vocab);
    let vocab = Vocabulary::read_tsv(&vocab_path)?;
    let cfg = model_config(g, &a.arch, vocab.size());
    let hp = train_hp(g, &a.train);
    let continual = TrainHp {
        lr: a.continual_lr.unwrap_or(hp.lr),
        ..hp.clone()
    };
    let (reg, curves) = build_series(
        &slices,
        &vocab,
        Some(&vocab_path),
        &cfg,
        &hp,
        &continual,
        a.base_year,
        a.through,
        &run.out_dir,
    )?;
    run.produced(run.path(series::REGISTRY_FILE));
    if let Some(v) = &reg.vocab {
        run.produced(run.path(&v.path));
    }
    for e in &reg.entries {
        run.produced(run.path(&e.path));
    }
    let c: Vec<(i32, &[f64])> = curves
        .iter()
        .map(|c| (c.year, c.losses.as_slice()))
        .collect();
    run.write("losses.csv", losses_csv(&c))?;
    if a.shuffled_one_pass {
        let first = *slices.keys().next().expect("read_slices is non-empty");
        let t = series::shuffled_one_pass(&slices, first, a.through, &vocab, &cfg, &hp)?;
        let path = run.path(&format!("shuffled_{first}_{}.ckpt", a.through));
        t.checkpoint.save(&path)?;
        run.produced(path);
    }
    Ok(())
}

fn interpolate(run: &mut Run, a: &InterpolateArgs) -> Result<()> {
    let ca = Checkpoint::load(&run.input(&a.a))?;
    let cb = Checkpoint::load(&run.input(&a.b))?;
    let mix = series::interpolate(&ca, &cb, a.lambda)?;
    let path = run.path(&a.out);
    mix.save(&path)?;
    run.produced(path);
    Ok(())
}

fn random_matched(run: &mut Run, g: &Global, a: &RandomMatchedArgs) -> Result<()> {
    let reference = Checkpoint::load(&run.input(&a.reference))?;
    let path = run.path(&a.out);
    series::random_matched(&reference, g.seed).save(&path)?;
    run.produced(path);
    Ok(())
}

/// Loads the registry, its vocabulary and every checkpoint as a model.
fn load_series(
    run: &mut Run,
    path: &Path,
) -> Result<(SeriesRegistry, Vocabulary, Vec<(i32, Model<f32>)>)> {
    let reg = SeriesRegistry::load(&run.input(path))?;
    reg.validate()?;
    let vocab = reg.load_vocab()?;
    let models = reg
        .years()
        .into_iter()
        .map(|y| Ok((y, reg.checkpoint(y)?.to_model::<f32>()?)))
        .collect::<Result<Vec<_>>>()?;
    Ok((reg, vocab, models))
}

fn perf_matrix(run: &mut Run, g: &Global, a: &PerfMatrixArgs) -> Result<()> {
    let task: ProbeTask = a.task.parse()?;
    let (reg, vocab, models) = load_series(run, &a.series)?;
    let docs = read_documents(&run.input(&a.docs))?;
    let years = match &a.years {
        Some(y) => parse_years(y)?,
        None => reg.years(),
    };
    let opts = PerfOptions {
        runs: a.runs,
        n_train: a.n_train,
        n_test: a.n_test,
        seed: g.seed,
        ablate_second_half: a.ablate_second_half,
    };
    let clf = LogisticRegression::default();
    let m = build_perf_matrix(&models, &vocab, &docs, &years, task, &opts, &clf)?;
    run.write("perf_matrix_raw.csv", m.to_csv())?;
    let s = summarize_perf(&m)?;
    run.write("perf_matrix_summary.csv", s.to_csv())?;
    run.write_json(
        "perf_matrix.json",
        &json!({
            "task": task.name(),
            "metric": m.metric,
            "classifier": clf.name(),
            "classifier_note": "multinomial logistic regression in place of random forests",
            "model_years": m.model_years,
            "data_years": m.data_years,
            "runs": m.runs,
            "n_train": a.n_train,
            "n_test": a.n_test,
            "ablate_second_half": a.ablate_second_half,
            "scaled_years": m.scaled_years,
            "constant_columns": s.constant_columns,
            "p_bar": s.p_bar,
            "p_hat": s.p_hat,
            "lower_triangle_mean": s.lower_triangle_mean(),
        }),
    )?;
    Ok(())
}

fn probe_fill_mask(run: &mut Run, a: &FillMaskArgs) -> Result<()> {
    let (_, vocab, models) = load_series(run, &a.series)?;
    if a.token.is_empty() && a.top_k == 0 {
        return Err(Error::Config("give --token, --top-k, or both".into()));
    }
    if !a.token.is_empty() {
        let mut csv = String::new();
        for tok in &a.token {
            let curve = track_token_probability(&models, &vocab, &a.sentence, tok)?;
            let part = token_prob_csv(tok, &curve);
            csv.push_str(if csv.is_empty() {
                &part
            } else {
                part.split_once('\n').map_or("", |p| p.1)
            });
        }
        run.write("token_prob.csv", csv)?;
    }
    if a.top_k > 0 {
        let mut csv = String::from("year,rank,token,probability\n");
        for (y, m) in &models {
            for (i, p) in fill_mask(m, &vocab, &a.sentence, a.top_k)?
                .iter()
                .enumerate()
            {
                csv.push_str(&format!("{y},{},{},{}\n", i + 1, p.token, p.probability));
            }
        }
        run.write("fill_mask.csv", csv)?;
    }
    Ok(())
}

fn probe_pca(run: &mut Run, a: &PcaArgs) -> Result<()> {
    let reg = SeriesRegistry::load(&run.input(&a.series))?;
    reg.validate()?;
    let years = reg.years();
    let ckpts: Vec<Checkpoint> = years
        .iter()
        .map(|&y| reg.checkpoint(y))
        .collect::<Result<_>>()?;
    let names = select_tensors(&ckpts[0], &a.layers)?;
    let pca = pca_weights(&ckpts, &a.layers)?;
    let mut csv = String::from("year,pc1,pc2\n");
    for (y, c) in years.iter().zip(&pca.coords) {
        csv.push_str(&format!("{y},{},{}\n", c[0], c[1]));
    }
    run.write("pca_coords.csv", csv)?;
    run.write_json(
        "pca.json",
        &json!({ "layers": a.layers, "tensors": names, "explained": pca.explained }),
    )?;
    Ok(())
}

fn probe_mwu(run: &mut Run, a: &MwuArgs) -> Result<()> {
    let x = read_csv_column(&run.input(&a.a), a.column.as_deref())?;
    let y = read_csv_column(&run.input(&a.b), a.column.as_deref())?;
    let r = mann_whitney_u(&x, &y);
    run.write_json(
        "mwu.json",
        &json!({
            "n_a": x.len(), "n_b": y.len(), "u": r.u, "p_less": r.p_less, "p_greater": r.p_greater,
            "p_two_sided": r.p_two_sided, "exact": r.exact,
        }),
    )?;
    Ok(())
}

fn load_graph(run: &mut Run, dir: &Path) -> Result<CitationGraph> {
    let (n, e) = (dir.join("nodes.tsv"), dir.join("edges.tsv"));
    CitationGraph::load(&run.input(&n), &run.input(&e))
}

fn build_features(
    run: &mut Run,
    g: &Global,
    a: &GraphInput,
    graph: &CitationGraph,
    kind: &str,
) -> Result<FeatureMatrix> {
    match kind {
        "random" => Ok(FeatureMatrix::random(graph.num_nodes(), a.dims, g.seed)),
        "major" => FeatureMatrix::major(graph),
        "sub" => FeatureMatrix::sub(graph),
        "model" => {
            let need = |what: &str| Error::Config(format!("model features need --{what}"));
            let ckpt = Checkpoint::load(&run.input(a.ckpt.as_ref().ok_or_else(|| need("ckpt"))?))?;
            let vocab =
                Vocabulary::read_tsv(&run.input(a.vocab.as_ref().ok_or_else(|| need("vocab"))?))?;
            let docs = read_documents(&run.input(a.docs.as_ref().ok_or_else(|| need("docs"))?))?;
            let model = ckpt.to_model::<f32>()?;
            let by_id: HashMap<&str, &RawDocument> =
                docs.iter().map(|d| (d.id.as_str(), d)).collect();
            let rows: Vec<Vec<f64>> = graph
                .nodes
                .iter()
                .map(|n| {
                    by_id
                        .get(n.id.as_str())
                        .map(|d| encode_cls(&model, &vocab, &probe_text(d, false)))
                        .ok_or_else(|| Error::Malformed(format!("node {} has no document", n.id)))
                })
                .collect::<Result<_>>()?;
            let label = format!("model-{}", ckpt.meta.trained_through_year);
            Ok(FeatureMatrix::from_rows(&label, rows))
        }
        other => Err(Error::Config(format!(
            "unknown feature kind `{other}`; use random, major, sub or model"
        ))),
    }
}

fn ppr_params(a: &GraphInput) -> PprParams {
    PprParams {
        restart: a.restart,
        tol: a.tol,
        max_iter: a.max_iter,
    }
}

fn gnn_hp(g: &Global, a: &GraphInput) -> GnnHp {
    GnnHp {
        hidden: a.hidden,
        out: a.hidden,
        mlp: a.hidden,
        lr: a.gnn_lr,
        epochs: a.gnn_epochs,
        seed: g.seed,
    }
}

fn methods(a: &GraphInput) -> Result<Vec<Method>> {
    a.predictor.iter().map(|p| p.parse()).collect()
}

fn graph_summary(graph: &CitationGraph) -> serde_json::Value {
    json!({
        "nodes": graph.num_nodes(),
        "edges": graph.edges.len(),
        "undirected_edges": graph.undirected_edges().len(),
        "self_loops_dropped": graph.self_loops_dropped,
        "duplicates_dropped": graph.duplicates_dropped,
        "year_violations": graph.year_violations(),
    })
}

fn linkpred_static(run: &mut Run, g: &Global, a: &LinkStaticArgs) -> Result<()> {
    let a = &a.input;
    let graph = load_graph(run, &a.graph)?;
    let sample = a.sample_size.min(graph.undirected_edges().len());
    if sample < a.sample_size {
        log::warn!("sample size lowered to the {sample} available edges");
    }
    let data = make_static_dataset(&graph, sample, g.seed)?;
    let score_graph = without_positives(&graph, &data);
    let mut reports: Vec<CvReport> = Vec::new();
    for m in methods(a)? {
        match m {
            Method::Topological(p) => reports.push(eval_topological(
                &score_graph,
                &data,
                p,
                &ppr_params(a),
                &LogRegParams::default(),
            )?),
            Method::Gnn => {
                for kind in &a.features {
                    let f = build_features(run, g, a, &graph, kind)?;
                    reports.push(eval_gnn_static(&graph, &f, &data, &gnn_hp(g, a))?);
                }
            }
        }
    }
    run.write("linkpred_static.csv", cv_table_csv(&reports))?;
    run.write_json(
        "linkpred_static.json",
        &json!({
            "graph": graph_summary(&graph),
            "sample_size": sample,
            "folds": crate::citegraph::NUM_FOLDS,
            "ppr": ppr_params(a),
            "logistic_regression": LogRegParams::default(),
            "gnn": gnn_hp(g, a),
            "reports": reports,
        }),
    )?;
    Ok(())
}

fn linkpred_temporal(run: &mut Run, g: &Global, a: &LinkTemporalArgs) -> Result<()> {
    let graph = load_graph(run, &a.input.graph)?;
    let opts = TemporalOptions {
        t0: a.t0,
        dts: parse_years(&a.dt)?,
        sample_size: a.input.sample_size,
        seed: g.seed,
        ppr: ppr_params(&a.input),
        logreg: LogRegParams::default(),
        gnn: gnn_hp(g, &a.input),
    };
    let mut reports = Vec::new();
    let mut csv = String::new();
    for m in methods(&a.input)? {
        let feats: Vec<Option<FeatureMatrix>> = match m {
            Method::Gnn => a
                .input
                .features
                .iter()
                .map(|k| build_features(run, g, &a.input, &graph, k).map(Some))
                .collect::<Result<_>>()?,
            Method::Topological(_) => vec![None],
        };
        for f in &feats {
            log::info!("temporal protocol: {}", method_name(m, f.as_ref()));
            let r = temporal_protocol(&graph, m, f.as_ref(), &opts)?;
            let part = temporal_csv(&r);
            csv.push_str(if csv.is_empty() {
                &part
            } else {
                part.split_once('\n').map_or("", |p| p.1)
            });
            reports.push(r);
        }
    }
    run.write("linkpred_temporal.csv", csv)?;
    run.write_json(
        "linkpred_temporal.json",
        &json!({ "graph": graph_summary(&graph), "t0": a.t0, "dt": opts.dts, "gnn": opts.gnn, "reports": reports }),
    )?;
    Ok(())
}

fn synth_corpus(run: &mut Run, g: &Global, a: &SynthCorpusArgs) -> Result<()> {
    let docs = match a.kind {
        CorpusKind::TwoEra => two_era_corpus(&TwoEraOptions {
            first_year: a.first_year,
            last_year: a.last_year,
            switch_year: a.switch_year,
            docs_per_year: a.docs_per_year,
            minority: a.minority,
            seed: g.seed,
        })?,
        CorpusKind::Drift => drift_corpus(&DriftOptions {
            first_year: a.first_year,
            last_year: a.last_year,
            docs_per_year: a.docs_per_year,
            majors: a.majors,
            subs_per_major: a.subs_per_major,
            topic_words: a.topic_words,
            carry_over: a.carry_over,
            crossfield: a.crossfield,
            seed: g.seed,
        })?,
    };
    let path = run.path(&a.out);
    corpus::write_documents(&path, &docs)?;
    run.produced(path);
    Ok(())
}

fn synth_graph(run: &mut Run, g: &Global, a: &SynthGraphArgs) -> Result<()> {
    let graph = block_graph(&GraphOptions {
        nodes: a.nodes,
        majors: a.majors,
        subs_per_major: a.subs_per_major,
        first_year: a.first_year,
        last_year: a.last_year,
        p_sub: a.p_sub,
        p_major: a.p_major,
        p_cross: a.p_cross,
        seed: g.seed,
    })?;
    run.write("nodes.tsv", graph.nodes_tsv())?;
    run.write("edges.tsv", graph.edges_tsv())?;
    Ok(())
}

fn plot(run: &mut Run, a: &PlotArgs) -> Result<()> {
    let input = run.input(&a.input);
    let text = std::fs::read_to_string(&input).map_err(|e| Error::io(&input, e))?;
    let table = Table::parse(&text)?;
    let svg = match a.kind {
        PlotKind::Heatmap => heatmap(&table, &a.row, &a.col, &a.value, &a.title)?,
        PlotKind::Lines => line_chart(&table, &a.x, &a.y, a.series.as_deref(), &a.title)?,
    };
    let name = a.out.clone().unwrap_or_else(|| {
        format!(
            "{}.svg",
            input
                .file_stem()
                .map_or("plot".into(), |s| s.to_string_lossy().into_owned())
        )
    });
    run.write(&name, svg)?;
    Ok(())
}
