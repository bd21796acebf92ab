use std::path::Path;

use anyhow::Result;
use ctxdecode::retrieval::{build_index, load_corpus_jsonl, load_index, query, save_index, Analyzer, RetrievalHit};
use ctxdecode::{normalize, TfIdfIndex64};
use serde::Serialize;

use super::Ctx;
use crate::io::{finish, print_line, read_lines, write_jsonl, writer};

pub fn build(ctx: &Ctx, corpus: &Path, out: &Path, n_min: usize, n_max: usize, lowercase: bool) -> Result<()> {
    let analyzer = Analyzer {
        lowercase,
        ..Analyzer::new(n_min, n_max)?
    };
    let docs = load_corpus_jsonl(corpus, &ctx.norm)?;
    log::info!("indexing {} documents", docs.len());
    let index: TfIdfIndex64 = build_index(docs, analyzer)?;
    let sidecar = save_index(&index, out)?;
    print_line(&serde_json::to_string_pretty(&sidecar)?)?;
    Ok(())
}

#[derive(Serialize)]
struct QueryLine<'a> {
    line: usize,
    query: &'a str,
    hits: Vec<RetrievalHit<f64>>,
}

pub fn query_cmd(ctx: &Ctx, index: &Path, k: usize, input: Option<&Path>, out: Option<&Path>) -> Result<()> {
    let index: TfIdfIndex64 = load_index(index, None)?;
    let lines = read_lines(input)?;
    let mut w = writer(out)?;
    for (i, line) in lines.iter().enumerate() {
        let q = normalize(line, &ctx.norm);
        let hits = query(&index, &q, k)?;
        write_jsonl(
            &mut w,
            [QueryLine {
                line: i + 1,
                query: q.as_str(),
                hits,
            }],
        )?;
    }
    finish(w)
}
