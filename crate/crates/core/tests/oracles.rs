//! Frozen reference values from independent implementations.

use std::path::Path;

use commentforge::corpus::TokenizerMode;
use commentforge::hashvec::{bigram_bucket, dot, fit_df, murmur3_32, tfidf_vector};
use commentforge::metrics::{bleu1, cider, rouge_l, EvalPair};
use commentforge::upvote_scorer::auc;
use serde::Deserialize;

fn fixture(name: &str) -> String {
    std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)).unwrap()
}

#[derive(Deserialize)]
struct Vector {
    input: String,
    seed: u32,
    hash: u32,
}

#[test]
fn murmur3_matches_reference_vectors() {
    let vectors: Vec<Vector> = serde_json::from_str(&fixture("murmur3_vectors.json")).unwrap();
    assert!(vectors.len() >= 20);
    for v in vectors {
        assert_eq!(
            murmur3_32(v.input.as_bytes(), v.seed),
            v.hash,
            "input {:?} seed {}",
            v.input,
            v.seed
        );
    }
}

#[test]
fn bigram_buckets_are_frozen() {
    assert_eq!(bigram_bucket("the", "cat"), 10_463_640);
    assert_eq!(bigram_bucket("新", "闻"), 15_295_631);
    assert_eq!(bigram_bucket("", ""), 11_109_539);
}

#[test]
fn tfidf_cosines_are_frozen() {
    let docs: Vec<Vec<&str>> = [
        "the cat sat on the mat",
        "the dog sat on the log",
        "a cat and a dog",
        "the cat sat",
    ]
    .iter()
    .map(|d| d.split(' ').collect())
    .collect();
    let df = fit_df(&docs).unwrap();
    let v: Vec<_> = docs.iter().map(|d| tfidf_vector(d, &df)).collect();
    let expected = [
        [1.0, 0.32322362708191427, 0.0, 0.5971468695888943],
        [0.32322362708191427, 1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.5971468695888943, 0.0, 0.0, 1.0],
    ];
    for i in 0..4 {
        for j in 0..4 {
            assert!((dot(&v[i], &v[j]) - expected[i][j]).abs() < 1e-12, "({i}, {j})");
        }
    }
}

#[test]
fn auc_matches_rank_statistic() {
    assert_eq!(auc(&[0.1, 0.4, 0.35, 0.8], &[0, 0, 1, 1]), 0.75);
    assert_eq!(auc(&[0.5, 0.5], &[0, 1]), 0.5);
    assert_eq!(auc(&[0.9, 0.2, 0.7], &[1, 0, 1]), 1.0);
}

#[derive(Deserialize)]
struct FixturePair {
    hyp: String,
    refs: Vec<String>,
}

#[derive(Deserialize)]
struct MetricFixture {
    name: String,
    pairs: Vec<FixturePair>,
    bleu1: f64,
    rouge_l: f64,
    cider: f64,
}

#[test]
fn metrics_match_caption_toolkit() {
    let fixtures: Vec<MetricFixture> = serde_json::from_str(&fixture("metric_fixtures.json")).unwrap();
    for f in fixtures {
        let pairs: Vec<EvalPair> = f
            .pairs
            .iter()
            .map(|p| {
                let refs: Vec<&str> = p.refs.iter().map(String::as_str).collect();
                EvalPair::from_text(&p.hyp, &refs, TokenizerMode::Whitespace).unwrap()
            })
            .collect();
        assert!((bleu1(&pairs) - f.bleu1).abs() < 1e-9, "{} bleu", f.name);
        assert!((rouge_l(&pairs) - f.rouge_l).abs() < 1e-9, "{} rouge", f.name);
        assert!((cider(&pairs) - f.cider).abs() < 1e-9, "{} cider", f.name);
    }
}
