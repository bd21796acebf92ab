use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ctxdecode::harness::{PolicyKind, ProxyWeight};
use ctxdecode::DistanceMetric;

#[derive(Debug, Parser)]
#[command(
    name = "ctxdecode",
    version,
    about = "Context-aware decoding toolkit for zero-shot ASR",
    long_about = "Normalization, scoring, retrieval, prompt and prefix construction, proxy-guided \
                  n-best selection and evaluation sweeps. Data goes to stdout or --out, logs to stderr.\n\n\
                  Exit status: 0 success, 1 runtime failure, 2 invalid input or usage."
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Run seed; every random choice derives from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads [default: available cores]. Output does not depend on it.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Turn skipped records and soft limits into errors.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Consult only precomputed providers and the cache.
    #[arg(long, global = true)]
    pub offline: bool,
    /// Re-query providers and check answers against the cache.
    #[arg(long, global = true)]
    pub refresh: bool,
    /// Normalization settings (TOML or JSON).
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Provider definitions (TOML or JSON).
    #[arg(long, global = true, value_name = "FILE")]
    pub providers: Option<PathBuf>,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    /// Errors only.
    #[arg(short, long, global = true)]
    pub quiet: bool,
    /// Print a JSON description of all commands and flags.
    #[arg(long, global = true)]
    pub help_json: bool,
}

fn metric(s: &str) -> Result<DistanceMetric, String> {
    s.parse().map_err(|e: ctxdecode::Error| e.to_string())
}

fn policy(s: &str) -> Result<PolicyKind, String> {
    s.parse().map_err(|e: ctxdecode::Error| e.to_string())
}

fn proxy(s: &str) -> Result<ProxyWeight, String> {
    s.parse().map_err(|e: ctxdecode::Error| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scalar {
    Exact,
    F64,
    F32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Strategy {
    FirstPass,
    Shuffle,
    Reverse,
    Retrieve,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Source {
    Retrieved,
    SpeakerTts,
    #[value(name = "self")]
    SelfPrefix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Request {
    FirstPass,
    Nbest,
    PrefixAudio,
}

#[derive(Debug, Args)]
pub struct OutArg {
    /// Output file [default: stdout].
    #[arg(long, short, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

/// Flags shared by `rerank`, `eval` and the sweeps.
#[derive(Debug, Args)]
pub struct SelectArgs {
    /// Manifest JSONL.
    #[arg(long, value_name = "FILE")]
    pub manifest: PathBuf,
    /// Distance between a candidate and a proxy.
    #[arg(long, default_value = "wer", value_parser = metric)]
    pub metric: DistanceMetric,
    /// Score arithmetic [default: exact for wer/cer, f64 for bleu].
    #[arg(long, value_enum)]
    pub scalar: Option<Scalar>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// CSV table or JSON with the run configuration.
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[command(flatten)]
    pub out: OutArg,
    /// Also write per-utterance selections as JSONL.
    #[arg(long, value_name = "FILE")]
    pub selections: Option<PathBuf>,
    /// Add unpooled sentence-mean WER/CER as report notes.
    #[arg(long)]
    pub sentence_mean: bool,
}

/// Where per-utterance first-pass text comes from.
#[derive(Debug, Args)]
pub struct FirstPassArgs {
    /// Manifest JSONL; text is the proxy named by --system or the record's `first_pass`.
    #[arg(long, value_name = "FILE", conflicts_with = "tsv")]
    pub manifest: Option<PathBuf>,
    /// `id<TAB>text` lines.
    #[arg(long, value_name = "FILE")]
    pub tsv: Option<PathBuf>,
    /// First-pass system name.
    #[arg(long)]
    pub system: Option<String>,
    /// Fetch first-pass text from this provider instead.
    #[arg(long)]
    pub provider: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Normalize UTF-8 lines from a file or stdin.
    Normalize {
        /// Input file [default: stdin].
        input: Option<PathBuf>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Per-line and pooled scores as CSV.
    Score {
        /// wer, cer or bleu.
        #[arg(long, default_value = "wer", value_parser = metric)]
        metric: DistanceMetric,
        /// Hypothesis lines (paired with --ref).
        #[arg(long, value_name = "FILE", requires = "reference")]
        hyp: Option<PathBuf>,
        /// Reference lines.
        #[arg(long = "ref", value_name = "FILE", requires = "hyp")]
        reference: Option<PathBuf>,
        /// Manifest JSONL instead of paired files.
        #[arg(long, value_name = "FILE", conflicts_with_all = ["hyp", "reference"], required_unless_present = "hyp")]
        manifest: Option<PathBuf>,
        /// Proxy system to score from the manifest; `top1` scores rank 1 of the largest list.
        #[arg(long, default_value = "top1")]
        system: String,
        #[command(flatten)]
        out: OutArg,
    },
    /// Build or query a TF-IDF index.
    #[command(subcommand)]
    Index(IndexCommand),
    /// Decoder prompts.
    #[command(subcommand)]
    Prompt(PromptCommand),
    /// Encoder/decoder prefixes.
    #[command(subcommand)]
    Prefix(PrefixCommand),
    /// Select one candidate per utterance; JSONL output.
    Rerank {
        #[command(flatten)]
        select: SelectArgs,
        /// Proxy system, `name[:weight]`; repeat for interpolation.
        #[arg(long, value_parser = proxy)]
        proxy: Vec<ProxyWeight>,
        /// Selection policy.
        #[arg(long, value_parser = policy, default_value = "nearest")]
        policy: PolicyKind,
        /// Beam size [default: each record's largest list].
        #[arg(long)]
        beam: Option<usize>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Pooled WER/CER of each policy at one beam setting.
    Eval {
        #[command(flatten)]
        select: SelectArgs,
        /// Proxy system, `name[:weight]`; repeat for interpolation.
        #[arg(long, value_parser = proxy)]
        proxy: Vec<ProxyWeight>,
        /// Policies to compare [default: top1, nearest, oracle].
        #[arg(long, value_parser = policy, value_delimiter = ',')]
        policy: Vec<PolicyKind>,
        /// Beam size [default: each record's largest list].
        #[arg(long)]
        beam: Option<usize>,
        #[command(flatten)]
        report: ReportArgs,
    },
    /// Pooled WER/CER per policy over a range of beam sizes.
    SweepBeam {
        #[command(flatten)]
        select: SelectArgs,
        /// Proxy system, `name[:weight]`; repeat for interpolation.
        #[arg(long, value_parser = proxy)]
        proxy: Vec<ProxyWeight>,
        /// Policies to compare [default: top1, nearest, oracle].
        #[arg(long, value_parser = policy, value_delimiter = ',')]
        policy: Vec<PolicyKind>,
        /// Beam sizes: ranges and lists such as `2-10` or `1,2,4-6`.
        #[arg(long, default_value = "2-10")]
        beams: String,
        #[command(flatten)]
        report: ReportArgs,
    },
    /// Two-proxy interpolation sweep with deviations from proxy --p1 alone.
    SweepAlpha {
        #[command(flatten)]
        select: SelectArgs,
        /// Proxy weighted by α; the deviation baseline.
        #[arg(long)]
        p1: String,
        /// Proxy weighted by 1 − α.
        #[arg(long)]
        p2: String,
        /// Comma-separated weights on p1 [default: 0.0, 0.1, ..., 1.0].
        #[arg(long, value_delimiter = ',')]
        alphas: Vec<f64>,
        /// Beam size [default: each record's largest list].
        #[arg(long)]
        beam: Option<usize>,
        #[command(flatten)]
        report: ReportArgs,
    },
    /// Write a seeded synthetic manifest.
    Synth {
        /// Number of records.
        #[arg(long, default_value_t = 1000)]
        utterances: usize,
        /// Candidates per record.
        #[arg(long, default_value_t = 10)]
        nbest: usize,
        /// Distinct words in the generated vocabulary.
        #[arg(long, default_value_t = 400)]
        vocab: usize,
        /// Candidate substitution, deletion and insertion rates.
        #[arg(long, num_args = 3, value_names = ["SUB", "DEL", "INS"], default_values_t = [0.15, 0.04, 0.03])]
        candidate_rates: Vec<f64>,
        /// Proxy substitution, deletion and insertion rates.
        #[arg(long, num_args = 3, value_names = ["SUB", "DEL", "INS"], default_values_t = [0.08, 0.02, 0.02])]
        proxy_rates: Vec<f64>,
        /// Proxy system names.
        #[arg(long = "proxy-name", default_values_t = ["proxy_a".to_string(), "proxy_b".to_string()])]
        proxy_names: Vec<String>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Query a provider for every manifest record and print the results as JSONL.
    Fetch {
        /// Provider name from --providers.
        #[arg(long)]
        provider: String,
        /// Kind of result to request.
        #[arg(long, value_enum)]
        request: Request,
        /// Manifest JSONL naming the utterances.
        #[arg(long, value_name = "FILE")]
        manifest: PathBuf,
        /// Beam size for n-best requests.
        #[arg(long, default_value_t = 10)]
        beam: usize,
        /// Proxy supplying the context text for prefix-audio [default: record's first_pass].
        #[arg(long)]
        system: Option<String>,
        #[command(flatten)]
        out: OutArg,
    },
}

#[derive(Debug, Subcommand)]
pub enum IndexCommand {
    /// Index a JSONL corpus of `{"id", "text", "audio"?}` lines.
    Build {
        /// JSONL corpus.
        #[arg(long, value_name = "FILE")]
        corpus: PathBuf,
        /// Index file; a `.json` sidecar is written next to it.
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
        /// Shortest character n-gram.
        #[arg(long, default_value_t = 3)]
        ngram_min: usize,
        /// Longest character n-gram.
        #[arg(long, default_value_t = 5)]
        ngram_max: usize,
        /// Keep case when extracting n-grams.
        #[arg(long)]
        no_lowercase: bool,
    },
    /// Top-k documents for each query line.
    Query {
        /// Index file written by `index build`.
        #[arg(long, value_name = "FILE")]
        index: PathBuf,
        /// Hits per query.
        #[arg(long, default_value_t = 5)]
        k: usize,
        /// Query lines [default: stdin].
        input: Option<PathBuf>,
        #[command(flatten)]
        out: OutArg,
    },
}

#[derive(Debug, Subcommand)]
pub enum PromptCommand {
    /// Prompt plans as JSONL, one per utterance.
    Build {
        /// How the prompt text is derived from the first pass.
        #[arg(long, value_enum)]
        strategy: Strategy,
        #[command(flatten)]
        input: FirstPassArgs,
        /// Index for `retrieve`.
        #[arg(long, value_name = "FILE")]
        index: Option<PathBuf>,
        #[command(flatten)]
        out: OutArg,
    },
}

#[derive(Debug, Subcommand)]
pub enum PrefixCommand {
    /// Concatenate context audio, silence and test audio into one WAV.
    Audio {
        /// Context clip, 16 kHz mono 16-bit.
        #[arg(long, value_name = "WAV")]
        ctx: PathBuf,
        /// Test clip, 16 kHz mono 16-bit.
        #[arg(long, value_name = "WAV")]
        test: PathBuf,
        /// Gap in seconds.
        #[arg(long, default_value_t = ctxdecode::prompt::DEFAULT_SILENCE_S)]
        silence: f64,
        /// Combined clip.
        #[arg(long, value_name = "WAV")]
        out: PathBuf,
    },
    /// Prefix plans as JSONL, one per utterance with audio.
    Plan {
        /// Where the context (text, audio) pair comes from.
        #[arg(long, value_enum)]
        source: Source,
        #[command(flatten)]
        input: FirstPassArgs,
        /// Index used to find exemplars (retrieved, speaker-tts).
        #[arg(long, value_name = "FILE")]
        index: Option<PathBuf>,
        /// Synthesizing provider (speaker-tts, self).
        #[arg(long)]
        tts: Option<String>,
        /// Gap in seconds.
        #[arg(long, default_value_t = ctxdecode::prompt::DEFAULT_SILENCE_S)]
        silence: f64,
        /// Also write the combined audio as `<DIR>/<id>.wav`.
        #[arg(long, value_name = "DIR")]
        materialize: Option<PathBuf>,
        #[command(flatten)]
        out: OutArg,
    },
}
