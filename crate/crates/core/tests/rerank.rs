use ctxdecode::rerank::{
    candidate_scores, interpolate_scores, select_nearest, select_oracle, select_top1, NBestList, Proxy, ProxySet,
};
use ctxdecode::{normalize, DistanceMetric, Exact, NormalizationConfig, NormalizedText};
use num_traits::{One, Zero};
use proptest::prelude::*;

fn t(s: &str) -> NormalizedText {
    normalize(s, &NormalizationConfig::minimal())
}

fn lev(a: &[&str], b: &[&str]) -> u64 {
    let mut d = vec![vec![0u64; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i as u64;
    }
    for (j, cell) in d[0].iter_mut().enumerate() {
        *cell = j as u64;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = d[i - 1][j - 1] + u64::from(a[i - 1] != b[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[a.len()][b.len()]
}

fn words(t: &NormalizedText) -> Vec<&str> {
    t.words().collect()
}

/// Word distance with the empty-proxy fallback.
fn wer_oracle(h: &NormalizedText, g: &NormalizedText) -> Exact {
    let (hw, gw) = (words(h), words(g));
    let e = lev(&hw, &gw) as i64;
    let den = if gw.is_empty() {
        hw.len().max(gw.len())
    } else {
        gw.len()
    } as i64;
    if den == 0 {
        Exact::zero()
    } else {
        Exact::new(e, den)
    }
}

/// First index of the minimum, scanned in rank order.
fn brute_argmin(scores: &[Exact]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s < scores[best] {
            best = i;
        }
    }
    best
}

fn sentence() -> impl Strategy<Value = String> {
    prop::collection::vec("[a-d]", 0..7).prop_map(|w| w.join(" "))
}

fn nbest_case() -> impl Strategy<Value = (Vec<String>, String, String, String)> {
    (
        prop::collection::vec(sentence(), 1..8),
        sentence(),
        sentence(),
        sentence(),
    )
}

fn proxy(name: &str, s: &str) -> Proxy {
    Proxy {
        system: name.into(),
        text: t(s),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1500))]

    #[test]
    fn nearest_is_brute_force_argmin((cands, p, _q, _r) in nbest_case()) {
        let nb = NBestList::from_texts(cands.iter().map(|s| t(s)), cands.len()).unwrap();
        let set = ProxySet::<Exact>::single("p", t(&p));
        let scores: Vec<Exact> = nb.candidates().iter().map(|c| wer_oracle(&c.text, &t(&p))).collect();
        prop_assert_eq!(candidate_scores(&nb, &set, DistanceMetric::Wer), scores.clone());
        let sel = select_nearest(&nb, &set, DistanceMetric::Wer);
        let i = brute_argmin(&scores);
        prop_assert_eq!(sel.chosen_rank, i + 1);
        prop_assert_eq!(sel.score, scores[i]);
    }

    #[test]
    fn oracle_dominates_every_policy((cands, p, q, r) in nbest_case()) {
        let nb = NBestList::from_texts(cands.iter().map(|s| t(s)), cands.len()).unwrap();
        let reference = t(&r);
        let wer_of = |rank: usize| lev(&words(&nb.candidates()[rank - 1].text), &words(&reference));
        let oracle = select_oracle::<Exact>(&nb, &reference);
        let best = nb.candidates().iter().map(|c| lev(&words(&c.text), &words(&reference))).min().unwrap();
        prop_assert_eq!(wer_of(oracle.chosen_rank), best);
        prop_assert_eq!(select_top1::<Exact>(&nb).chosen_rank, 1);
        for metric in DistanceMetric::ALL {
            let single = select_nearest(&nb, &ProxySet::<f64>::single("p", t(&p)), metric);
            prop_assert!(wer_of(oracle.chosen_rank) <= wer_of(single.chosen_rank));
            let pair = ProxySet::<f64>::pair(proxy("p", &p), proxy("q", &q), 0.3).unwrap();
            let mixed = select_nearest(&nb, &pair, metric);
            prop_assert!(wer_of(oracle.chosen_rank) <= wer_of(mixed.chosen_rank));
        }
    }

    #[test]
    fn reference_as_proxy_recovers_oracle((cands, _p, _q, r) in nbest_case()) {
        let nb = NBestList::from_texts(cands.iter().map(|s| t(s)), cands.len()).unwrap();
        // an empty proxy scores every non-empty candidate 1, so counts and rates diverge
        prop_assume!(!r.is_empty());
        let reference = t(&r);
        let near = select_nearest(&nb, &ProxySet::<Exact>::single("ref", reference.clone()), DistanceMetric::Wer);
        let oracle = select_oracle::<Exact>(&nb, &reference);
        let errs = |rank: usize| lev(&words(&nb.candidates()[rank - 1].text), &words(&reference));
        prop_assert_eq!(errs(near.chosen_rank), errs(oracle.chosen_rank));
    }

    #[test]
    fn proxy_error_bound((cands, p, _q, r) in nbest_case()) {
        let nb = NBestList::from_texts(cands.iter().map(|s| t(s)), cands.len()).unwrap();
        prop_assume!(!p.is_empty());
        let (proxy_t, reference) = (t(&p), t(&r));
        let near = select_nearest(&nb, &ProxySet::<Exact>::single("p", proxy_t.clone()), DistanceMetric::Wer);
        let oracle = select_oracle::<Exact>(&nb, &reference);
        let e = |x: &NormalizedText| lev(&words(x), &words(&reference));
        prop_assert!(e(&near.chosen_text) <= e(&oracle.chosen_text) + 2 * e(&proxy_t));
    }

    #[test]
    fn interpolation_endpoints((cands, p, q, _r) in nbest_case()) {
        let nb = NBestList::from_texts(cands.iter().map(|s| t(s)), cands.len()).unwrap();
        for metric in DistanceMetric::ALL {
            let at_one = interpolate_scores(&nb, &t(&p), &t(&q), Exact::one(), metric).unwrap();
            let at_zero = interpolate_scores(&nb, &t(&p), &t(&q), Exact::zero(), metric).unwrap();
            prop_assert_eq!(at_one, candidate_scores(&nb, &ProxySet::single("p", t(&p)), metric));
            prop_assert_eq!(at_zero, candidate_scores(&nb, &ProxySet::single("q", t(&q)), metric));
            let pick = |s: ProxySet<Exact>| select_nearest(&nb, &s, metric).chosen_rank;
            prop_assert_eq!(
                pick(ProxySet::pair(proxy("p", &p), proxy("q", &q), Exact::one()).unwrap()),
                pick(ProxySet::single("p", t(&p)))
            );
        }
    }

    #[test]
    fn interpolated_score_is_linear_in_alpha((cands, p, q, _r) in nbest_case(), k in 0i64..=10) {
        let nb = NBestList::from_texts(cands.iter().map(|s| t(s)), cands.len()).unwrap();
        let alpha = Exact::new(k, 10);
        let mixed = interpolate_scores(&nb, &t(&p), &t(&q), alpha, DistanceMetric::Wer).unwrap();
        for (c, m) in nb.candidates().iter().zip(mixed) {
            let expect = alpha * wer_oracle(&c.text, &t(&p)) + (Exact::one() - alpha) * wer_oracle(&c.text, &t(&q));
            prop_assert_eq!(m, expect);
        }
    }

    #[test]
    fn float_choice_is_an_exact_minimizer((cands, p, q, _r) in nbest_case()) {
        let nb = NBestList::from_texts(cands.iter().map(|s| t(s)), cands.len()).unwrap();
        let exact_set = ProxySet::<Exact>::pair(proxy("p", &p), proxy("q", &q), Exact::new(3, 10)).unwrap();
        let f_set = ProxySet::<f64>::pair(proxy("p", &p), proxy("q", &q), 0.3).unwrap();
        let exact_scores = candidate_scores(&nb, &exact_set, DistanceMetric::Cer);
        let f = select_nearest(&nb, &f_set, DistanceMetric::Cer);
        let e = select_nearest(&nb, &exact_set, DistanceMetric::Cer);
        prop_assert_eq!(exact_scores[f.chosen_rank - 1], exact_scores[e.chosen_rank - 1]);
        prop_assert_eq!(f.chosen_rank, e.chosen_rank);
    }
}

#[test]
fn ties_go_to_lowest_rank() {
    let nb = NBestList::from_texts(["a x", "a y", "a b"].iter().map(|s| t(s)), 3).unwrap();
    let sel = select_nearest(&nb, &ProxySet::<Exact>::single("p", t("a z")), DistanceMetric::Wer);
    assert_eq!(sel.chosen_rank, 1);
    assert_eq!(sel.score, Exact::new(1, 2));
    let oracle = select_oracle::<Exact>(&nb, &t("a q"));
    assert_eq!(oracle.chosen_rank, 1);
}

#[test]
fn nearest_moves_off_top1() {
    let nb = NBestList::from_texts(
        ["the cat sat", "a cat sat on", "the cat sat on the mat"]
            .iter()
            .map(|s| t(s)),
        3,
    )
    .unwrap();
    let sel = select_nearest(
        &nb,
        &ProxySet::<Exact>::single("p", t("the cat sat on a mat")),
        DistanceMetric::Wer,
    );
    assert_eq!(sel.chosen_rank, 3);
    assert_eq!(sel.score, Exact::new(1, 6));
}

#[test]
fn proxy_set_validation() {
    let p = || vec![proxy("a", "x"), proxy("b", "y")];
    assert!(ProxySet::<Exact>::new(p(), vec![Exact::new(1, 2), Exact::new(1, 3)]).is_err());
    assert!(ProxySet::<Exact>::new(p(), vec![Exact::new(3, 2), Exact::new(-1, 2)]).is_err());
    assert!(ProxySet::<Exact>::new(vec![], vec![]).is_err());
    assert!(ProxySet::<f64>::pair(proxy("a", "x"), proxy("b", "y"), 1.5).is_err());
    let n = ProxySet::<Exact>::normalized(p(), vec![Exact::from_integer(2), Exact::from_integer(6)]).unwrap();
    assert_eq!(n.weights(), &[Exact::new(1, 4), Exact::new(3, 4)]);
    let f = ProxySet::<f64>::normalized(p(), vec![1.0, 2.0]).unwrap();
    assert_eq!(f.weights().iter().sum::<f64>(), 1.0);
    assert!(NBestList::from_texts(Vec::<NormalizedText>::new(), 1).is_err());
}
