use commentforge::corpus::BOS_ID;
use commentforge::corpus::{split_dataset, tokenize, TokenizerMode};
use commentforge::diffcore::Graph;
use commentforge::hashvec::{dot, fit_df, tfidf_vector, DfTable, SparseVector, NUM_BUCKETS};
use commentforge::metrics::{bleu1, cider, rouge_l, EvalPair};
use commentforge::pointer_gen::random_model;
use commentforge::toy;
use commentforge::upvote_scorer::ensemble_score;
use proptest::prelude::*;

fn sentence() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d", "e", "f", "g"]), 1..9)
        .prop_map(|v| v.into_iter().map(String::from).collect())
}

fn eval_pairs() -> impl Strategy<Value = Vec<EvalPair>> {
    prop::collection::vec((sentence(), prop::collection::vec(sentence(), 1..3)), 1..8)
        .prop_map(|v| v.into_iter().map(|(h, r)| EvalPair::new(h, r).unwrap()).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metrics_are_bounded_and_order_free(pairs in eval_pairs(), rot in 0usize..8) {
        let (b, r, c) = (bleu1(&pairs), rouge_l(&pairs), cider(&pairs));
        prop_assert!((0.0..=1.0 + 1e-12).contains(&b));
        prop_assert!((0.0..=1.0 + 1e-12).contains(&r));
        prop_assert!((0.0..=10.0 + 1e-9).contains(&c));
        let mut rotated = pairs.clone();
        rotated.rotate_left(rot % pairs.len());
        prop_assert!((bleu1(&rotated) - b).abs() < 1e-12);
        prop_assert!((rouge_l(&rotated) - r).abs() < 1e-12);
        prop_assert!((cider(&rotated) - c).abs() < 1e-9);
    }

    #[test]
    fn tfidf_vectors_are_unit_or_empty(docs in prop::collection::vec(sentence(), 1..6)) {
        let df = fit_df(&docs).unwrap();
        for d in &docs {
            let v = tfidf_vector(d, &df);
            prop_assert!(v.is_empty() || (v.norm() - 1.0).abs() < 1e-12);
            prop_assert!(v.entries().windows(2).all(|w| w[0].0 < w[1].0));
            prop_assert!(v.entries().iter().all(|(b, w)| *b < NUM_BUCKETS && *w > 0.0));
            let self_sim = dot(&v, &v);
            prop_assert!(v.is_empty() || (self_sim - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sparse_dot_is_symmetric(
        a in prop::collection::vec((0u32..64, -2.0f64..2.0), 0..12),
        b in prop::collection::vec((0u32..64, -2.0f64..2.0), 0..12),
    ) {
        let (u, v) = (SparseVector::from_pairs(a), SparseVector::from_pairs(b));
        prop_assert!((dot(&u, &v) - dot(&v, &u)).abs() < 1e-12);
    }

    #[test]
    fn df_table_round_trips(docs in prop::collection::vec(sentence(), 1..6)) {
        let df = fit_df(&docs).unwrap();
        let back = DfTable::from_bytes(&df.to_bytes()).unwrap();
        prop_assert_eq!(back, df);
    }

    #[test]
    fn ensemble_interpolates(s_r in 0.0f64..1.0, s_u in 0.0f64..1.0, alpha in 0.0f64..=1.0) {
        let s = ensemble_score(s_r, s_u, alpha).unwrap();
        prop_assert!(s >= s_r.min(s_u) - 1e-12 && s <= s_r.max(s_u) + 1e-12);
        prop_assert_eq!(ensemble_score(s_r, s_u, 1.0).unwrap(), s_r);
        prop_assert_eq!(ensemble_score(s_r, s_u, 0.0).unwrap(), s_u);
    }

    #[test]
    fn split_is_a_seeded_partition(n in 0usize..40, seed in 0u64..1000) {
        let corpus = toy::bigram_corpus(n, 3);
        let a = split_dataset(&corpus, [0.8, 0.1, 0.1], seed).unwrap();
        let b = split_dataset(&corpus, [0.8, 0.1, 0.1], seed).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.train.len() + a.valid.len() + a.test.len(), n);
        let mut ids: Vec<_> = a.train.iter().chain(&a.valid).chain(&a.test).map(|x| x.id.clone()).collect();
        ids.sort();
        let mut all: Vec<_> = corpus.iter().map(|x| x.id.clone()).collect();
        all.sort();
        prop_assert_eq!(ids, all);
    }

    #[test]
    fn cjk_mode_splits_every_han_character(text in "[a-z ]{0,6}[\u{4e00}-\u{4e20}]{1,5}[a-z ]{0,6}") {
        let tokens = tokenize(&text, TokenizerMode::CjkChar);
        let han = text.chars().filter(|c| ('\u{4e00}'..='\u{4e20}').contains(c)).count();
        prop_assert_eq!(tokens.iter().filter(|t| t.chars().count() == 1 && t.chars().all(|c| c >= '\u{4e00}')).count(), han);
        prop_assert!(tokens.iter().all(|t| !t.trim().is_empty()));
    }

    #[test]
    fn decode_distribution_stays_normalized(seed in 0u64..200, len in 1usize..8, steps in 1usize..10) {
        let model = random_model(seed, 10, (3, 3, 4, 3));
        let source: Vec<String> = (0..len).map(|i| if i % 3 == 0 { format!("x{i}") } else { format!("w{}", i % 6) }).collect();
        let ex = model.prepare(&source, &[]);
        let mut g = Graph::new();
        let enc = model.encode(&mut g, &ex.src_ids).unwrap();
        let mut state = model.initial_state(&mut g, &enc);
        let mut x = BOS_ID;
        for t in 1..=steps {
            let out = model.decode_step(&mut g, &enc, &ex, &state, x).unwrap();
            let dist = g.value(out.dist).data().to_vec();
            prop_assert!((dist.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(dist.iter().all(|p| *p >= 0.0));
            let p = g.value(out.p_gen).item();
            prop_assert!(p > 0.0 && p < 1.0);
            let mass: f64 = g.value(out.state.coverage).data().iter().sum();
            prop_assert!((mass - t as f64).abs() < 1e-9);
            x = (seed as usize + t) % ex.ext.len();
            state = out.state;
        }
    }
}
