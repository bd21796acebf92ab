//! Corpus-level evaluation: manifests, selection sweeps and reports.

mod manifest;
mod report;
mod sweep;
pub mod synth;

pub use manifest::{load_manifest, parse_manifest, ManifestCandidate, ManifestRecord, UtteranceRecord};
pub use report::{
    digest_of, read_alpha_csv, read_policy_csv, sentence_means, write_alpha_csv, write_csv, write_policy_csv, AlphaRow,
    EvaluationReport, PolicyRow, ReportKind, SentenceMean, SkippedRecord, UtteranceSelection,
};
pub use sweep::{
    alpha_grid, proxy_set, run_alpha_sweep, run_beam_sweep, run_eval, BeamChoice, PolicyKind, ProxyWeight, SweepConfig,
};
