use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Result;
use ctxdecode::metrics::{cer, sentence_bleu, wer};
use ctxdecode::{normalize, DistanceMetric, Error, NormalizedText, ScorePair};

use super::Ctx;
use crate::io::{finish, read_lines, writer};

pub fn normalize_cmd(ctx: &Ctx, input: Option<&Path>, out: Option<&Path>) -> Result<()> {
    let lines = read_lines(input)?;
    let mut w = writer(out)?;
    for line in lines {
        writeln!(w, "{}", normalize(&line, &ctx.norm).as_str())?;
    }
    finish(w)
}

fn pct(p: ScorePair) -> String {
    let r = p.rate();
    if r.is_finite() {
        format!("{:.4}", 100.0 * r)
    } else {
        "inf".into()
    }
}

/// `id,errors,ref_len,score`. Word and character scores are rates in
/// percent with a pooled final row; BLEU is 100 × sentence BLEU with a
/// `mean` final row.
pub fn score(
    ctx: &Ctx,
    metric: DistanceMetric,
    paired: Option<(PathBuf, PathBuf)>,
    manifest: Option<&Path>,
    system: &str,
    out: Option<&Path>,
) -> Result<()> {
    let mut rows: Vec<(String, NormalizedText, NormalizedText)> = Vec::new();
    if let Some((hyp, reference)) = paired {
        let h = read_lines(Some(&hyp))?;
        let r = read_lines(Some(&reference))?;
        if h.len() != r.len() {
            return Err(Error::InvalidInput(format!(
                "{} has {} lines but {} has {}",
                hyp.display(),
                h.len(),
                reference.display(),
                r.len()
            ))
            .into());
        }
        for (i, (h, r)) in h.iter().zip(&r).enumerate() {
            rows.push(((i + 1).to_string(), normalize(h, &ctx.norm), normalize(r, &ctx.norm)));
        }
    } else if let Some(path) = manifest {
        for rec in ctx.manifest(path)? {
            let hyp = if system == "top1" {
                rec.full_nbest().top().text.clone()
            } else {
                match rec.proxies.get(system) {
                    Some(t) => t.clone(),
                    None => {
                        ctx.skip(format!("record `{}`: no proxy `{system}`", rec.id))?;
                        continue;
                    }
                }
            };
            rows.push((rec.id, hyp, rec.reference));
        }
    }
    if rows.is_empty() {
        return Err(Error::Empty("nothing to score").into());
    }

    let mut csv = csv::Writer::from_writer(writer(out)?);
    csv.write_record(["id", "errors", "ref_len", "score"])?;
    match metric {
        DistanceMetric::Wer | DistanceMetric::Cer => {
            let f = if metric == DistanceMetric::Wer { wer } else { cer };
            let mut total = ScorePair::default();
            for (id, h, r) in &rows {
                let p = f(h, r);
                total += p;
                csv.write_record([id.clone(), p.errors.to_string(), p.ref_len.to_string(), pct(p)])?;
            }
            csv.write_record([
                "pooled".to_string(),
                total.errors.to_string(),
                total.ref_len.to_string(),
                pct(total),
            ])?;
        }
        DistanceMetric::OneMinusBleu => {
            let mut sum = 0.0;
            for (id, h, r) in &rows {
                let b = sentence_bleu(h, r);
                sum += b;
                csv.write_record([id.as_str(), "", "", &format!("{:.4}", 100.0 * b)])?;
            }
            csv.write_record(["mean", "", "", &format!("{:.4}", 100.0 * sum / rows.len() as f64)])?;
        }
    }
    let w = csv
        .into_inner()
        .map_err(|e| anyhow::anyhow!("writing output: {}", e.error()))?;
    finish(w)
}
