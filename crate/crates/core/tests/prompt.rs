use std::path::Path;

use ctxdecode::prompt::{
    build_prefix, build_prompt, check_duration, concat_with_silence, read_wav, reverse_words, shuffle_words,
    utterance_seed, wav_bytes, write_wav, DurationBudget, PrefixContext, PrefixSource, PromptStrategy, Waveform,
    DEFAULT_SILENCE_S, SAMPLE_RATE,
};
use ctxdecode::retrieval::DocMeta;
use ctxdecode::{normalize, NormalizationConfig, NormalizedText};
use proptest::prelude::*;
use sha2::{Digest, Sha256};

fn t(s: &str) -> NormalizedText {
    normalize(s, &NormalizationConfig::minimal())
}

/// SplitMix64 from its published constants.
struct Mix(u64);

impl Mix {
    fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}

fn shuffle_oracle(words: &[&str], seed: u64) -> Vec<String> {
    let mut w: Vec<String> = words.iter().map(|s| s.to_string()).collect();
    let mut rng = Mix(seed);
    let mut i = w.len();
    while i > 1 {
        i -= 1;
        let j = ((rng.next() as u128 * (i as u128 + 1)) >> 64) as usize;
        w.swap(i, j);
    }
    w
}

#[test]
fn shuffle_matches_reference_generator() {
    let words = ["w0", "w1", "w2", "w3", "w4", "w5", "w6", "w7", "w8", "w9"];
    let text = t(&words.join(" "));
    for seed in [0u64, 1, 7, 42, u64::MAX, 0xDEAD_BEEF] {
        let got: Vec<String> = shuffle_words(&text, seed).words().map(str::to_string).collect();
        assert_eq!(got, shuffle_oracle(&words, seed), "seed {seed}");
    }
}

#[test]
fn shuffle_golden() {
    assert_eq!(shuffle_words(&t("a b c d e"), 0).as_str(), "c d a b e");
    assert_eq!(shuffle_words(&t("a b c d e"), 1).as_str(), "b a d e c");
}

#[test]
fn utterance_seed_is_hash_prefix() {
    let mut h = Sha256::new();
    h.update(5u64.to_le_bytes());
    h.update("utt-1".as_bytes());
    let d = h.finalize();
    let mut b = [0u8; 8];
    b.copy_from_slice(&d[..8]);
    assert_eq!(utterance_seed(5, "utt-1"), u64::from_le_bytes(b));
    assert_ne!(utterance_seed(5, "utt-1"), utterance_seed(6, "utt-1"));
    assert_ne!(utterance_seed(5, "utt-1"), utterance_seed(5, "utt-2"));
}

fn words() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec("[a-e]{1,3}", 0..12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn shuffle_is_a_deterministic_permutation(w in words(), seed in any::<u64>()) {
        let text = t(&w.join(" "));
        let a = shuffle_words(&text, seed);
        prop_assert_eq!(&a, &shuffle_words(&text, seed));
        let mut got: Vec<&str> = a.words().collect();
        let mut orig: Vec<&str> = text.words().collect();
        got.sort();
        orig.sort();
        prop_assert_eq!(got, orig);
    }

    #[test]
    fn reverse_is_an_involution(w in words()) {
        let text = t(&w.join(" "));
        let r = reverse_words(&text);
        let mut expect: Vec<&str> = text.words().collect();
        expect.reverse();
        prop_assert_eq!(r.words().collect::<Vec<_>>(), expect);
        let back = reverse_words(&r);
        prop_assert_eq!(back.as_str(), text.as_str());
    }

    #[test]
    fn concat_length_and_gap(ctx in prop::collection::vec(any::<i16>(), 0..400),
                             test in prop::collection::vec(any::<i16>(), 0..400),
                             centis in 0u32..300) {
        let silence = centis as f64 / 100.0;
        let out = concat_with_silence(&Waveform::new(ctx.clone()), &Waveform::new(test.clone()), silence).unwrap();
        let gap = (silence * SAMPLE_RATE as f64).round() as usize;
        prop_assert_eq!(out.len(), ctx.len() + gap + test.len());
        prop_assert_eq!(&out.samples()[..ctx.len()], &ctx[..]);
        prop_assert!(out.samples()[ctx.len()..ctx.len() + gap].iter().all(|&s| s == 0));
        prop_assert_eq!(&out.samples()[ctx.len() + gap..], &test[..]);
    }
}

#[test]
fn default_gap_is_one_second() {
    assert_eq!(DEFAULT_SILENCE_S, 1.0);
    let out = concat_with_silence(
        &Waveform::new(vec![1; 10]),
        &Waveform::new(vec![2; 5]),
        DEFAULT_SILENCE_S,
    )
    .unwrap();
    assert_eq!(out.len(), 10 + 16_000 + 5);
    assert!((out.duration_s() - 16_015.0 / 16_000.0).abs() < 1e-12);
}

#[test]
fn negative_or_nan_gap_rejected() {
    let w = Waveform::new(vec![0; 4]);
    assert!(concat_with_silence(&w, &w, -0.5).is_err());
    assert!(concat_with_silence(&w, &w, f64::NAN).is_err());
}

fn le16(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn le32(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

#[test]
fn wav_header_layout() {
    let samples = vec![0i16, 1, -1, i16::MAX, i16::MIN];
    let b = wav_bytes(&Waveform::new(samples.clone())).unwrap();
    assert_eq!(b.len(), 44 + 2 * samples.len());
    assert_eq!(&b[0..4], b"RIFF");
    assert_eq!(le32(&b, 4) as usize, b.len() - 8);
    assert_eq!(&b[8..16], b"WAVEfmt ");
    assert_eq!(le32(&b, 16), 16);
    assert_eq!(le16(&b, 20), 1);
    assert_eq!(le16(&b, 22), 1);
    assert_eq!(le32(&b, 24), 16_000);
    assert_eq!(le32(&b, 28), 32_000);
    assert_eq!(le16(&b, 32), 2);
    assert_eq!(le16(&b, 34), 16);
    assert_eq!(&b[36..40], b"data");
    assert_eq!(le32(&b, 40) as usize, 2 * samples.len());
    let body: Vec<i16> = b[44..].chunks(2).map(|c| i16::from_le_bytes([c[0], c[1]])).collect();
    assert_eq!(body, samples);
}

#[test]
fn wav_round_trip_and_format_checks() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.wav");
    let w = Waveform::new((0..1000).map(|i| (i * 37 % 2000 - 1000) as i16).collect());
    write_wav(&path, &w).unwrap();
    assert_eq!(read_wav(&path).unwrap(), w);
    assert!(Waveform::from_parts(vec![0; 4], 8_000, 1).is_err());
    assert!(Waveform::from_parts(vec![0; 4], 16_000, 2).is_err());
    assert!(read_wav(Path::new("/nonexistent/x.wav")).is_err());
}

#[test]
fn prefix_plan_materializes() {
    let dir = tempfile::tempdir().unwrap();
    let ctx = dir.path().join("ctx.wav");
    let test = dir.path().join("test.wav");
    write_wav(&ctx, &Waveform::new(vec![3; 800])).unwrap();
    write_wav(&test, &Waveform::new(vec![4; 1600])).unwrap();
    let doc = DocMeta {
        id: "d1".into(),
        text: t("ذهب الولد"),
        audio: Some(ctx.clone()),
    };
    let plan = build_prefix(PrefixContext::Retrieved(&doc), &test, DEFAULT_SILENCE_S).unwrap();
    assert_eq!(plan.source, PrefixSource::RetrievedExemplar);
    assert_eq!(plan.decoder_prefix().as_str(), "ذهب الولد");
    let wave = plan.materialize(DurationBudget::default()).unwrap();
    assert_eq!(wave.len(), 800 + 16_000 + 1600);
    assert!(wave.samples()[..800].iter().all(|&s| s == 3));
    assert!(wave.samples()[16_800..].iter().all(|&s| s == 4));

    let strict = DurationBudget {
        limit_s: 1.0,
        strict: true,
    };
    assert!(plan.materialize(strict).is_err());
    let lenient = DurationBudget {
        limit_s: 1.0,
        strict: false,
    };
    assert_eq!(plan.materialize(lenient).unwrap().len(), wave.len());
    assert!(!check_duration(31.0, DurationBudget::default()).unwrap());

    let no_audio = DocMeta { audio: None, ..doc };
    assert!(build_prefix(PrefixContext::Retrieved(&no_audio), &test, 1.0).is_err());
    let tts = PrefixContext::SelfPrefix {
        first_pass: t("كتب"),
        audio: None,
    };
    assert!(build_prefix(tts, &test, 1.0).is_err());
}

#[test]
fn shuffled_prompt_uses_given_seed() {
    let fp = t("a b c d e");
    let plan = build_prompt::<f64>(&fp, "sys", PromptStrategy::Shuffled { seed: 0 }, None).unwrap();
    assert_eq!(plan.prompt_text, shuffle_words(&fp, 0));
    let empty = build_prompt::<f64>(&t(""), "sys", PromptStrategy::FirstPass, None).unwrap();
    assert!(empty.no_context);
}
