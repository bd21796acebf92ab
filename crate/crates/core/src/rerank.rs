//! Selection among n-best candidates.
//!
//! [`select_nearest`] picks the candidate minimising
//! `Σ_i w_i · d(candidate, proxy_i)` over a weighted set of proxy
//! transcriptions; a single proxy with weight 1 is the plain nearest-to-proxy
//! rule, and two proxies with weights `(α, 1−α)` give the interpolated rule.
//! [`select_oracle`] picks by true WER and bounds every other policy.
//! Ties always go to the lowest (best) original rank.

use std::cmp::Ordering;
use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::metrics::{distance, wer, DistanceMetric};
use crate::scalar::Score;
use crate::textnorm::NormalizedText;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    /// 1-based; 1 is the decoder's best hypothesis.
    pub rank: usize,
    pub text: NormalizedText,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

/// Rank-ordered decoder candidates: ranks are exactly `1..=n`, `n >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct NBestList {
    candidates: Vec<Candidate>,
    beam_size: usize,
}

impl NBestList {
    /// Accepts candidates in any order; ranks must form `1..=n`.
    pub fn new(mut candidates: Vec<Candidate>, beam_size: usize) -> Result<Self> {
        if candidates.is_empty() {
            return Err(Error::Empty("n-best list"));
        }
        candidates.sort_by_key(|c| c.rank);
        for (i, c) in candidates.iter().enumerate() {
            if c.rank != i + 1 {
                return Err(Error::InvalidInput(format!(
                    "n-best ranks must be contiguous from 1; found rank {} at position {}",
                    c.rank,
                    i + 1
                )));
            }
        }
        Ok(NBestList { candidates, beam_size })
    }

    /// Candidates ranked in the given order.
    pub fn from_texts(texts: impl IntoIterator<Item = NormalizedText>, beam_size: usize) -> Result<Self> {
        let candidates = texts
            .into_iter()
            .enumerate()
            .map(|(i, text)| Candidate {
                rank: i + 1,
                text,
                score: None,
            })
            .collect();
        NBestList::new(candidates, beam_size)
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn beam_size(&self) -> usize {
        self.beam_size
    }

    pub fn top(&self) -> &Candidate {
        &self.candidates[0]
    }

    /// The first `b` candidates, standing in for a beam-`b` run.
    pub fn truncated(&self, b: usize) -> Result<NBestList> {
        if b == 0 {
            return Err(Error::InvalidInput("beam size must be positive".into()));
        }
        NBestList::new(self.candidates.iter().take(b).cloned().collect(), b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Proxy {
    pub system: String,
    pub text: NormalizedText,
}

/// Proxy transcriptions with non-negative weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxySet<S> {
    proxies: Vec<Proxy>,
    weights: Vec<S>,
}

impl<S: Score> ProxySet<S> {
    pub fn single(system: impl Into<String>, text: NormalizedText) -> Self {
        ProxySet {
            proxies: vec![Proxy {
                system: system.into(),
                text,
            }],
            weights: vec![S::one()],
        }
    }

    /// Weights must already sum to one (exactly for exact scalars, within
    /// 1e-9 otherwise).
    pub fn new(proxies: Vec<Proxy>, weights: Vec<S>) -> Result<Self> {
        if proxies.is_empty() {
            return Err(Error::Empty("proxy set"));
        }
        if proxies.len() != weights.len() {
            return Err(Error::InvalidInput(format!(
                "{} proxies but {} weights",
                proxies.len(),
                weights.len()
            )));
        }
        if !weights.iter().all(|&w| non_negative(w)) {
            return Err(Error::InvalidInput("proxy weights must be non-negative".into()));
        }
        let sum = weights.iter().fold(S::zero(), |a, &w| a + w);
        if (sum.to_f64() - 1.0).abs() > 1e-9 || (S::tie_tolerance() == S::zero() && sum != S::one()) {
            return Err(Error::InvalidInput(format!(
                "proxy weights sum to {}, expected 1",
                sum.to_f64()
            )));
        }
        Ok(ProxySet { proxies, weights })
    }

    /// Scales arbitrary non-negative weights to sum to one.
    pub fn normalized(proxies: Vec<Proxy>, raw: Vec<S>) -> Result<Self> {
        let sum = raw.iter().fold(S::zero(), |a, &w| a + w);
        if sum.partial_cmp(&S::zero()) != Some(Ordering::Greater) {
            return Err(Error::InvalidInput("proxy weights must have a positive sum".into()));
        }
        if !raw.iter().all(|&w| non_negative(w)) {
            return Err(Error::InvalidInput("proxy weights must be non-negative".into()));
        }
        let n = raw.len();
        let mut weights: Vec<S> = raw.into_iter().map(|w| w / sum).collect();
        // absorb rounding so the sum is exactly one
        if n > 0 {
            let rest = weights[..n - 1].iter().fold(S::zero(), |a, &w| a + w);
            if rest <= S::one() {
                weights[n - 1] = S::one() - rest;
            }
        }
        ProxySet::new(proxies, weights)
    }

    /// Two proxies weighted `(α, 1−α)`.
    pub fn pair(p1: Proxy, p2: Proxy, alpha: S) -> Result<Self> {
        check_alpha(alpha)?;
        ProxySet::new(vec![p1, p2], vec![alpha, S::one() - alpha])
    }

    pub fn proxies(&self) -> &[Proxy] {
        &self.proxies
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.proxies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.proxies.is_empty()
    }
}

/// False for negative values and NaN.
fn non_negative<S: Score>(w: S) -> bool {
    matches!(w.partial_cmp(&S::zero()), Some(Ordering::Greater | Ordering::Equal))
}

fn check_alpha<S: Score>(alpha: S) -> Result<()> {
    if !(alpha >= S::zero() && alpha <= S::one()) {
        return Err(Error::AlphaOutOfRange(alpha.to_f64()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Policy {
    Top1,
    Nearest { metric: DistanceMetric },
    Interpolated { metric: DistanceMetric, weights: Vec<f64> },
    Oracle,
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::Top1 => f.write_str("top1"),
            Policy::Nearest { metric } => write!(f, "nearest-{metric}"),
            Policy::Interpolated { metric, weights } => {
                write!(f, "interpolated-{metric}[")?;
                for (i, w) in weights.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{w}")?;
                }
                f.write_str("]")
            }
            Policy::Oracle => f.write_str("oracle"),
        }
    }
}

fn serialize_score<S: Score, Ser: Serializer>(s: &S, ser: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
    ser.serialize_f64(s.to_f64())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = "S: Score"))]
pub struct SelectionResult<S> {
    pub chosen_rank: usize,
    pub chosen_text: NormalizedText,
    /// Weighted proxy distance (Nearest), WER to the reference (Oracle), 0 (Top-1).
    #[serde(serialize_with = "serialize_score")]
    pub score: S,
    pub policy: Policy,
}

/// Index of the first minimum, treating scores within the scalar's tie
/// tolerance as equal.
fn argmin<S: Score>(scores: &[S]) -> usize {
    let tol = S::tie_tolerance();
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s + tol < scores[best] {
            best = i;
        }
    }
    best
}

pub fn select_top1<S: Score>(nbest: &NBestList) -> SelectionResult<S> {
    let top = nbest.top();
    SelectionResult {
        chosen_rank: top.rank,
        chosen_text: top.text.clone(),
        score: S::zero(),
        policy: Policy::Top1,
    }
}

/// Per-candidate weighted distance `Σ_i w_i · d(h, g_i)`, in rank order.
pub fn candidate_scores<S: Score>(nbest: &NBestList, proxies: &ProxySet<S>, metric: DistanceMetric) -> Vec<S> {
    nbest
        .candidates()
        .iter()
        .map(|c| {
            proxies
                .proxies
                .iter()
                .zip(&proxies.weights)
                .fold(S::zero(), |acc, (p, &w)| {
                    acc + w * distance::<S>(metric, &c.text, &p.text)
                })
        })
        .collect()
}

pub fn select_nearest<S: Score>(
    nbest: &NBestList,
    proxies: &ProxySet<S>,
    metric: DistanceMetric,
) -> SelectionResult<S> {
    let scores = candidate_scores(nbest, proxies, metric);
    let best = argmin(&scores);
    let c = &nbest.candidates()[best];
    let policy = if proxies.len() == 1 {
        Policy::Nearest { metric }
    } else {
        Policy::Interpolated {
            metric,
            weights: proxies.weights.iter().map(|w| w.to_f64()).collect(),
        }
    };
    SelectionResult {
        chosen_rank: c.rank,
        chosen_text: c.text.clone(),
        score: scores[best],
        policy,
    }
}

/// Lowest WER against the true reference. With an empty reference every
/// non-empty candidate has infinite WER; those are ordered by raw error count.
pub fn select_oracle<S: Score>(nbest: &NBestList, reference: &NormalizedText) -> SelectionResult<S> {
    let pairs: Vec<_> = nbest.candidates().iter().map(|c| wer(&c.text, reference)).collect();
    let mut best = 0;
    for i in 1..pairs.len() {
        if pairs[i].cmp_rate(&pairs[best]).is_lt() {
            best = i;
        }
    }
    let c = &nbest.candidates()[best];
    SelectionResult {
        chosen_rank: c.rank,
        chosen_text: c.text.clone(),
        score: distance::<S>(DistanceMetric::Wer, &c.text, reference),
        policy: Policy::Oracle,
    }
}

/// `α · d(h, p1) + (1 − α) · d(h, p2)` for every candidate, in rank order.
pub fn interpolate_scores<S: Score>(
    nbest: &NBestList,
    p1: &NormalizedText,
    p2: &NormalizedText,
    alpha: S,
    metric: DistanceMetric,
) -> Result<Vec<S>> {
    check_alpha(alpha)?;
    let set = ProxySet::pair(
        Proxy {
            system: "p1".into(),
            text: p1.clone(),
        },
        Proxy {
            system: "p2".into(),
            text: p2.clone(),
        },
        alpha,
    )?;
    Ok(candidate_scores(nbest, &set, metric))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::edit_distance;
    use crate::textnorm::{normalize, NormalizationConfig};
    use crate::Exact;
    use proptest::prelude::*;

    fn t(s: &str) -> NormalizedText {
        normalize(s, &NormalizationConfig::minimal())
    }

    fn list(texts: &[&str]) -> NBestList {
        NBestList::from_texts(texts.iter().map(|s| t(s)), texts.len()).unwrap()
    }

    #[test]
    fn rank_validation() {
        let c = |rank| Candidate {
            rank,
            text: t("a"),
            score: None,
        };
        assert!(NBestList::new(vec![c(2), c(1), c(3)], 3).is_ok());
        assert!(NBestList::new(vec![c(1), c(3)], 3).is_err());
        assert!(NBestList::new(vec![], 3).is_err());
        assert!(NBestList::new(vec![c(1), c(1)], 2).is_err());
    }

    #[test]
    fn top1() {
        let l = list(&["a b", "a c", "x"]);
        let r = select_top1::<f64>(&l);
        assert_eq!(r.chosen_rank, 1);
        let single = list(&["only"]);
        let proxy = ProxySet::<f64>::single("p", t("different"));
        assert_eq!(
            select_top1::<f64>(&single).chosen_rank,
            select_nearest(&single, &proxy, DistanceMetric::Wer).chosen_rank
        );
    }

    #[test]
    fn nearest_finds_exact_proxy_match() {
        let l = list(&["a b c d", "a b c x", "a x c d", "p q r s", "a b"]);
        let proxy = ProxySet::<Exact>::single("sys", t("p q r s"));
        let r = select_nearest(&l, &proxy, DistanceMetric::Wer);
        assert_eq!(r.chosen_rank, 4);
        assert_eq!(r.score, Exact::from_integer(0));
        assert_eq!(
            r.policy,
            Policy::Nearest {
                metric: DistanceMetric::Wer
            }
        );
    }

    #[test]
    fn degenerate_weights_match_single_proxy() {
        let l = list(&["a b c", "a x c", "y b c"]);
        let (g1, g2) = (t("y b c"), t("a x c"));
        let set = ProxySet::<Exact>::new(
            vec![
                Proxy {
                    system: "1".into(),
                    text: g1.clone(),
                },
                Proxy {
                    system: "2".into(),
                    text: g2,
                },
            ],
            vec![Exact::from_integer(1), Exact::from_integer(0)],
        )
        .unwrap();
        let single = ProxySet::<Exact>::single("1", g1);
        for m in DistanceMetric::ALL {
            assert_eq!(
                select_nearest(&l, &set, m).chosen_rank,
                select_nearest(&l, &single, m).chosen_rank
            );
        }
    }

    // At α = 1/2 all three candidates tie; at α = 3/10 only h3 wins.
    //   h1 = "a b c d", h2 = "a x c y", h3 = "a b c y"
    //   p1 = "a x c d", p2 = "a b z y"
    #[test]
    fn interpolation_enumeration() {
        let hs = ["a b c d", "a x c y", "a b c y"];
        let l = list(&hs);
        let (p1, p2) = (t("a x c d"), t("a b z y"));
        // brute force: word edit distance over |p| = 4 for each pair
        let wed = |h: &str, p: &NormalizedText| {
            let hw: Vec<&str> = h.split(' ').collect();
            let pw: Vec<&str> = p.words().collect();
            Exact::new(edit_distance(&hw, &pw) as i64, pw.len() as i64)
        };
        let half = Exact::new(1, 2);
        let expected: Vec<Exact> = hs.iter().map(|h| half * wed(h, &p1) + half * wed(h, &p2)).collect();
        // d(h, p1) = 1/4, 1/4, 2/4 ; d(h, p2) = 2/4, 2/4, 1/4
        assert_eq!(expected, vec![Exact::new(3, 8), Exact::new(3, 8), Exact::new(3, 8)]);
        let got = interpolate_scores(&l, &p1, &p2, half, DistanceMetric::Wer).unwrap();
        assert_eq!(got, expected);
        // three-way tie resolves to rank 1
        let set = ProxySet::pair(
            Proxy {
                system: "1".into(),
                text: p1.clone(),
            },
            Proxy {
                system: "2".into(),
                text: p2.clone(),
            },
            half,
        )
        .unwrap();
        assert_eq!(select_nearest(&l, &set, DistanceMetric::Wer).chosen_rank, 1);

        // a = 3/10 breaks the tie toward the candidate closest to p2
        let a = Exact::new(3, 10);
        let scores = interpolate_scores(&l, &p1, &p2, a, DistanceMetric::Wer).unwrap();
        let brute: Vec<Exact> = hs
            .iter()
            .map(|h| a * wed(h, &p1) + (Exact::from_integer(1) - a) * wed(h, &p2))
            .collect();
        assert_eq!(scores, brute);
        let best = (0..3).min_by_key(|&i| brute[i]).unwrap();
        assert_eq!(best, 2);
        let set = ProxySet::pair(
            Proxy {
                system: "1".into(),
                text: p1,
            },
            Proxy {
                system: "2".into(),
                text: p2,
            },
            a,
        )
        .unwrap();
        let r = select_nearest(&l, &set, DistanceMetric::Wer);
        assert_eq!((r.chosen_rank, r.score), (3, Exact::new(13, 40)));
    }

    #[test]
    fn interpolation_endpoints() {
        let l = list(&["a b c", "a x c", "y b c", "q"]);
        let (p1, p2) = (t("a b q"), t("y x c"));
        let one = interpolate_scores::<f64>(&l, &p1, &p2, 1.0, DistanceMetric::Cer).unwrap();
        let zero = interpolate_scores::<f64>(&l, &p1, &p2, 0.0, DistanceMetric::Cer).unwrap();
        for (i, c) in l.candidates().iter().enumerate() {
            assert_eq!(one[i], distance::<f64>(DistanceMetric::Cer, &c.text, &p1));
            assert_eq!(zero[i], distance::<f64>(DistanceMetric::Cer, &c.text, &p2));
        }
        assert!(matches!(
            interpolate_scores::<f64>(&l, &p1, &p2, 1.5, DistanceMetric::Wer),
            Err(Error::AlphaOutOfRange(_))
        ));
    }

    #[test]
    fn oracle_examples() {
        let l = list(&["a b x", "a b c", "z"]);
        let r = select_oracle::<Exact>(&l, &t("a b c"));
        assert_eq!(r.chosen_rank, 2);
        assert_eq!(r.score, Exact::from_integer(0));
        assert_eq!(select_oracle::<Exact>(&list(&["q"]), &t("a b")).chosen_rank, 1);
        // WERs against "a b c d": 2/4, 1/4, 3/4
        let l = list(&["a x y d", "a b c", "b"]);
        let r = select_oracle::<Exact>(&l, &t("a b c d"));
        assert_eq!((r.chosen_rank, r.score), (2, Exact::new(1, 4)));
    }

    #[test]
    fn oracle_with_empty_reference_prefers_fewest_errors() {
        let l = list(&["a b c", "a", "a b"]);
        assert_eq!(select_oracle::<f64>(&l, &t("")).chosen_rank, 2);
    }

    #[test]
    fn weights_validation() {
        let p = |s: &str| Proxy {
            system: s.into(),
            text: t(s),
        };
        assert!(ProxySet::<f64>::new(vec![p("a"), p("b")], vec![0.5, 0.6]).is_err());
        assert!(ProxySet::<f64>::new(vec![p("a"), p("b")], vec![1.5, -0.5]).is_err());
        assert!(ProxySet::<f64>::new(vec![], vec![]).is_err());
        let n = ProxySet::<Exact>::normalized(vec![p("a"), p("b"), p("c")], vec![Exact::from_integer(1); 3]).unwrap();
        assert_eq!(n.weights(), &[Exact::new(1, 3); 3]);
        let n = ProxySet::<f64>::normalized(vec![p("a"), p("b"), p("c")], vec![1.0; 3]).unwrap();
        assert_eq!(n.weights().iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn selection_json() {
        let l = list(&["a b"]);
        let r = select_oracle::<Exact>(&l, &t("a c"));
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["score"], 0.5);
        assert_eq!(v["policy"]["kind"], "oracle");
        assert_eq!(v["chosen_text"], "a b");
    }

    fn words() -> impl Strategy<Value = String> {
        prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d"]), 0..6).prop_map(|v| v.join(" "))
    }

    proptest! {
        #[test]
        fn oracle_dominates(
            cands in prop::collection::vec(words(), 1..8),
            reference in words(),
            proxy in words(),
            metric in prop::sample::select(DistanceMetric::ALL.to_vec()),
        ) {
            let l = NBestList::from_texts(cands.iter().map(|s| t(s)), cands.len()).unwrap();
            let r = t(&reference);
            let o = select_oracle::<f64>(&l, &r);
            let n = select_nearest(&l, &ProxySet::<f64>::single("p", t(&proxy)), metric);
            let top = select_top1::<f64>(&l);
            let w = |x: &NormalizedText| wer(x, &r);
            prop_assert!(!w(&o.chosen_text).cmp_rate(&w(&n.chosen_text)).is_gt());
            prop_assert!(!w(&o.chosen_text).cmp_rate(&w(&top.chosen_text)).is_gt());
        }

        #[test]
        fn reference_as_proxy_matches_oracle(cands in prop::collection::vec(words(), 1..8), reference in words()) {
            let l = NBestList::from_texts(cands.iter().map(|s| t(s)), cands.len()).unwrap();
            let r = t(&reference);
            prop_assume!(!r.is_empty());
            let o = select_oracle::<Exact>(&l, &r);
            let n = select_nearest(&l, &ProxySet::<Exact>::single("ref", r.clone()), DistanceMetric::Wer);
            prop_assert_eq!(o.chosen_rank, n.chosen_rank);
            prop_assert_eq!(o.score, n.score);
        }

        #[test]
        fn endpoint_equivalence(cands in prop::collection::vec(words(), 1..8), p1 in words(), p2 in words()) {
            let l = NBestList::from_texts(cands.iter().map(|s| t(s)), cands.len()).unwrap();
            let (g1, g2) = (t(&p1), t(&p2));
            let mk = |a: f64| ProxySet::<f64>::pair(
                Proxy { system: "1".into(), text: g1.clone() },
                Proxy { system: "2".into(), text: g2.clone() },
                a,
            ).unwrap();
            for m in DistanceMetric::ALL {
                let one = select_nearest(&l, &mk(1.0), m);
                let s1 = select_nearest(&l, &ProxySet::single("1", g1.clone()), m);
                prop_assert_eq!((one.chosen_rank, one.score), (s1.chosen_rank, s1.score));
                let zero = select_nearest(&l, &mk(0.0), m);
                let s2 = select_nearest(&l, &ProxySet::single("2", g2.clone()), m);
                prop_assert_eq!((zero.chosen_rank, zero.score), (s2.chosen_rank, s2.score));
            }
        }

        #[test]
        fn oracle_monotone_in_beam(cands in prop::collection::vec(words(), 1..10), reference in words()) {
            let l = NBestList::from_texts(cands.iter().map(|s| t(s)), cands.len()).unwrap();
            let r = t(&reference);
            let mut prev: Option<crate::ScorePair> = None;
            for b in 1..=l.len() {
                let o = select_oracle::<f64>(&l.truncated(b).unwrap(), &r);
                let cur = wer(&o.chosen_text, &r);
                if let Some(p) = prev {
                    prop_assert!(!cur.cmp_rate(&p).is_gt());
                }
                prev = Some(cur);
            }
        }
    }
}
