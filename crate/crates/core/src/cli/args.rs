use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "chronolm",
    version,
    about = "Chronological masked-language-model workbench"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// 2 layers, d_model 64, vocabulary cap 8192.
    Desk,
    /// BERT-base geometry, vocabulary cap 53100.
    Base,
}

#[derive(Debug, Args, Serialize)]
pub struct Global {
    /// Master seed.
    #[arg(long, global = true, env = "CHRONOLM_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 1 runs everything serially.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    #[arg(long, global = true, value_enum, default_value = "desk")]
    pub preset: Preset,
    /// Flat TOML file of flag values; explicit flags override it.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    #[serde(skip)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Corpus cleaning.
    #[command(subcommand)]
    Corpus(CorpusCmd),
    /// Vocabulary building.
    #[command(subcommand)]
    Vocab(VocabCmd),
    /// Single-model training.
    #[command(subcommand)]
    Model(ModelCmd),
    /// Checkpoint series.
    #[command(subcommand)]
    Series(SeriesCmd),
    /// Probing a series.
    #[command(subcommand)]
    Probe(ProbeCmd),
    /// Citation link prediction.
    #[command(subcommand)]
    Linkpred(LinkpredCmd),
    /// Synthetic corpora and graphs.
    #[command(subcommand)]
    Synth(SynthCmd),
    /// Render a CSV as an SVG heatmap or line chart.
    Plot(PlotArgs),
}

#[derive(Debug, Subcommand)]
pub enum CorpusCmd {
    /// Clean JSON-lines documents into per-year sentence files.
    Clean(CleanArgs),
}

#[derive(Debug, Subcommand)]
pub enum VocabCmd {
    /// Build a WordPiece vocabulary from yearly slices.
    Build(VocabArgs),
}

#[derive(Debug, Subcommand)]
pub enum ModelCmd {
    /// Pretrain one masked language model.
    Pretrain(PretrainArgs),
}

#[derive(Debug, Subcommand)]
pub enum SeriesCmd {
    /// Train the yearly checkpoint series.
    Build(SeriesBuildArgs),
    /// Blend tensors of two checkpoints.
    Interpolate(InterpolateArgs),
    /// Random-initialized copies matching checkpoint statistics.
    RandomMatched(RandomMatchedArgs),
}

#[derive(Debug, Subcommand)]
pub enum ProbeCmd {
    /// Category-probe performance of every model on every year.
    PerfMatrix(PerfMatrixArgs),
    /// Track masked-token probabilities across the series.
    FillMask(FillMaskArgs),
    /// Project checkpoints onto principal components of their weights.
    Pca(PcaArgs),
    /// Mann-Whitney U test between two result files.
    Mwu(MwuArgs),
}

#[derive(Debug, Subcommand)]
pub enum LinkpredCmd {
    /// Link prediction on a random edge split.
    Static(LinkStaticArgs),
    /// Link prediction on future citations.
    Temporal(LinkTemporalArgs),
}

#[derive(Debug, Subcommand)]
pub enum SynthCmd {
    /// Generate a synthetic document corpus.
    Corpus(SynthCorpusArgs),
    /// Generate a synthetic citation graph.
    Graph(SynthGraphArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct CleanArgs {
    /// JSON-lines documents.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "lightweight-latex")]
    pub mode: String,
    #[arg(long, default_value = "abstract")]
    pub fields: String,
    /// Inclusive year range `A..B`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub years: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct VocabArgs {
    /// Directory of `sentences_<year>.txt` files.
    #[arg(long)]
    pub slices: PathBuf,
    #[arg(long, default_value_t = 50)]
    pub min_count: u64,
    /// Cap including special tokens; defaults to the preset's size.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_size: Option<usize>,
    /// Output file name inside the output directory.
    #[arg(long, default_value = "vocab.tsv")]
    pub out: String,
    /// Also write pairwise Jaccard similarity of per-year vocabularies.
    #[arg(long)]
    pub jaccard: bool,
}

#[derive(Debug, Args, Serialize, Clone)]
pub struct ArchArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub layers: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub heads: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_model: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_ff: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_len: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dropout: Option<f32>,
    #[arg(long)]
    pub tie_embeddings: bool,
}

#[derive(Debug, Args, Serialize, Clone)]
pub struct TrainArgs {
    #[arg(long, default_value_t = 3e-4)]
    pub lr: f64,
    #[arg(long, default_value_t = 16)]
    pub batch_size: usize,
    /// Epochs of base pretraining.
    #[arg(long, default_value_t = 2)]
    pub epochs: u32,
    #[arg(long, default_value_t = 0.01)]
    pub weight_decay: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct PretrainArgs {
    #[arg(long)]
    pub slices: PathBuf,
    #[arg(long)]
    pub vocab: PathBuf,
    #[arg(long)]
    pub base_year: i32,
    #[command(flatten)]
    #[serde(flatten)]
    pub arch: ArchArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub train: TrainArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct SeriesBuildArgs {
    #[arg(long)]
    pub slices: PathBuf,
    #[arg(long)]
    pub vocab: PathBuf,
    #[arg(long)]
    pub base_year: i32,
    #[arg(long)]
    pub through: i32,
    /// Learning rate of the yearly steps; defaults to `--lr`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub continual_lr: Option<f64>,
    /// Also train the one-epoch model over the shuffled union of all slices.
    #[arg(long)]
    pub shuffled_one_pass: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub arch: ArchArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub train: TrainArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct InterpolateArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub lambda: f64,
    #[arg(long, default_value = "mix.ckpt")]
    pub out: String,
}

#[derive(Debug, Args, Serialize)]
pub struct RandomMatchedArgs {
    #[arg(long = "ref")]
    #[serde(rename = "ref")]
    pub reference: PathBuf,
    #[arg(long, default_value = "random_matched.ckpt")]
    pub out: String,
}

#[derive(Debug, Args, Serialize)]
pub struct PerfMatrixArgs {
    /// `series.json` of the checkpoint series.
    #[arg(long)]
    pub series: PathBuf,
    /// JSON-lines documents with years and categories.
    #[arg(long)]
    pub docs: PathBuf,
    #[arg(long, default_value = "major")]
    pub task: String,
    #[arg(long, default_value_t = 50)]
    pub runs: usize,
    #[arg(long, default_value_t = 1600)]
    pub n_train: usize,
    #[arg(long, default_value_t = 200)]
    pub n_test: usize,
    /// Data years `A..B` or a comma list; defaults to the series years.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub years: Option<String>,
    /// Probe on the second half of each abstract.
    #[arg(long)]
    pub ablate_second_half: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct FillMaskArgs {
    #[arg(long)]
    pub series: PathBuf,
    /// Sentence with exactly one `[MASK]`.
    #[arg(long)]
    pub sentence: String,
    /// Whole-word tokens to track; comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub token: Vec<String>,
    /// Also list the top-k predictions per year.
    #[arg(long, default_value_t = 0)]
    pub top_k: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct PcaArgs {
    #[arg(long)]
    pub series: PathBuf,
    /// Comma-separated tensor-name globs.
    #[arg(long, default_value = "*")]
    pub layers: String,
}

#[derive(Debug, Args, Serialize)]
pub struct MwuArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    /// Column to read from both files; defaults to `f1`, else the last column.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub column: Option<String>,
}

#[derive(Debug, Args, Serialize, Clone)]
pub struct GraphInput {
    /// Directory holding `nodes.tsv` and `edges.tsv`.
    #[arg(long)]
    pub graph: PathBuf,
    /// Comma-separated predictors: cn, jc, pa, aa, ra, ppr, gnn.
    #[arg(long, value_delimiter = ',', default_value = "cn,jc,pa,aa,ra,ppr")]
    pub predictor: Vec<String>,
    /// Node features for the GNN: random, major, sub or model.
    #[arg(long, value_delimiter = ',', default_value = "random")]
    pub features: Vec<String>,
    /// Checkpoint encoding node text for model features.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ckpt: Option<PathBuf>,
    /// Vocabulary for `--ckpt`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vocab: Option<PathBuf>,
    /// JSON-lines documents whose ids match node ids, for model features.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub docs: Option<PathBuf>,
    /// Width of random features.
    #[arg(long, default_value_t = 768)]
    pub dims: usize,
    #[arg(long, default_value_t = 100_000)]
    pub sample_size: usize,
    #[arg(long, default_value_t = 0.15)]
    pub restart: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 64)]
    pub hidden: usize,
    #[arg(long, default_value_t = 200)]
    pub gnn_epochs: usize,
    #[arg(long, default_value_t = 1e-2)]
    pub gnn_lr: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct LinkStaticArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: GraphInput,
}

#[derive(Debug, Args, Serialize)]
pub struct LinkTemporalArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: GraphInput,
    #[arg(long)]
    pub t0: i32,
    /// Offsets `A..B` or a comma list.
    #[arg(long, default_value = "1..6")]
    pub dt: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorpusKind {
    TwoEra,
    Drift,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthCorpusArgs {
    #[arg(long, value_enum, default_value = "two-era")]
    pub kind: CorpusKind,
    #[arg(long, default_value_t = 2008)]
    pub first_year: i32,
    #[arg(long, default_value_t = 2011)]
    pub last_year: i32,
    #[arg(long, default_value_t = 400)]
    pub docs_per_year: usize,
    /// Two-era: first year of the late era.
    #[arg(long, default_value_t = 2010)]
    pub switch_year: i32,
    /// Two-era: share of the minority era token.
    #[arg(long, default_value_t = 0.1)]
    pub minority: f64,
    /// Drift: number of major categories.
    #[arg(long, default_value_t = 4)]
    pub majors: usize,
    #[arg(long, default_value_t = 2)]
    pub subs_per_major: usize,
    #[arg(long, default_value_t = 8)]
    pub topic_words: usize,
    #[arg(long, default_value_t = 0.0)]
    pub carry_over: f64,
    #[arg(long, default_value_t = 0.1)]
    pub crossfield: f64,
    #[arg(long, default_value = "docs.jsonl")]
    pub out: String,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthGraphArgs {
    #[arg(long, default_value_t = 1200)]
    pub nodes: usize,
    #[arg(long, default_value_t = 2)]
    pub majors: usize,
    #[arg(long, default_value_t = 8)]
    pub subs_per_major: usize,
    #[arg(long, default_value_t = 2010)]
    pub first_year: i32,
    #[arg(long, default_value_t = 2016)]
    pub last_year: i32,
    #[arg(long, default_value_t = 0.05)]
    pub p_sub: f64,
    #[arg(long, default_value_t = 0.0005)]
    pub p_major: f64,
    #[arg(long, default_value_t = 0.0001)]
    pub p_cross: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlotKind {
    Heatmap,
    Lines,
}

#[derive(Debug, Args, Serialize)]
pub struct PlotArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "heatmap")]
    pub kind: PlotKind,
    /// Heatmap row column.
    #[arg(long, default_value = "t")]
    pub row: String,
    /// Heatmap column column.
    #[arg(long, default_value = "tau")]
    pub col: String,
    #[arg(long, default_value = "p_hat")]
    pub value: String,
    /// Line chart x column.
    #[arg(long, default_value = "year")]
    pub x: String,
    #[arg(long, default_value = "probability")]
    pub y: String,
    /// Column naming one line per distinct value.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub series: Option<String>,
    #[arg(long, default_value = "")]
    pub title: String,
    /// Output file name; defaults to the input stem with `.svg`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}
