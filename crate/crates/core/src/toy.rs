//! Seeded synthetic corpora with planted structure.
//!
//! Words are pronounceable nonsense strings so every generator works under
//! both tokenizer modes.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Article, Comment};
use crate::dataset_builder::TrainingPair;

const ONSETS: [&str; 12] = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t"];
const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];

/// The `i`-th word of a fixed two-syllable lexicon with `prefix`.
pub fn word(prefix: &str, i: usize) -> String {
    let syl = |k: usize| {
        format!(
            "{}{}",
            ONSETS[k % ONSETS.len()],
            VOWELS[(k / ONSETS.len()) % VOWELS.len()]
        )
    };
    let n = ONSETS.len() * VOWELS.len();
    format!("{prefix}{}{}", syl(i % n), syl(i / n))
}

fn lexicon(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| word(prefix, i)).collect()
}

fn pick<'a, R: Rng>(rng: &mut R, words: &'a [String], n: usize) -> Vec<&'a str> {
    (0..n).map(|_| words[rng.gen_range(0..words.len())].as_str()).collect()
}

/// A unique capitalized name, never part of any lexicon.
pub fn name(i: usize) -> String {
    format!("Q{}x{i}", word("", i * 7919))
}

const TOPICS: usize = 8;
const KEYWORDS: usize = 6;

struct Bank {
    filler: Vec<String>,
    keywords: Vec<Vec<String>>,
    generic: Vec<String>,
}

impl Bank {
    fn new() -> Self {
        Bank {
            filler: lexicon("", 40),
            keywords: (0..TOPICS).map(|t| lexicon(&format!("k{t}"), KEYWORDS)).collect(),
            generic: lexicon("g", 12),
        }
    }
}

fn mixed<R: Rng>(rng: &mut R, bank: &Bank, topic: usize, len: usize, keyword_rate: f64) -> Vec<String> {
    (0..len)
        .map(|_| {
            if rng.gen_bool(keyword_rate) {
                bank.keywords[topic].choose(rng).unwrap().clone()
            } else {
                bank.filler.choose(rng).unwrap().clone()
            }
        })
        .collect()
}

/// General-purpose corpus: each article belongs to a topic and mentions a
/// named person. Positive comments (10 or more upvotes) repeat topic keywords
/// and often the name; negative comments use generic vocabulary. About one
/// article in ten has no upvotes at all.
pub fn toy_corpus(n_articles: usize, seed: u64) -> Vec<Article> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bank = Bank::new();
    (0..n_articles)
        .map(|i| {
            let topic = rng.gen_range(0..TOPICS);
            let person = name(i);
            let title = mixed(&mut rng, &bank, topic, 4, 0.6).join(" ");
            let mut body = mixed(&mut rng, &bank, topic, 24, 0.3);
            let at = rng.gen_range(0..body.len());
            body.insert(at, person.clone());
            let silent = rng.gen_bool(0.1);
            let n_comments = rng.gen_range(4..=8);
            let comments = (0..n_comments)
                .map(|j| {
                    let positive = j == 0 || rng.gen_bool(0.3);
                    let (mut text, upvotes) = if positive {
                        let mut t = mixed(&mut rng, &bank, topic, 5, 0.6);
                        if rng.gen_bool(0.5) {
                            t.insert(0, person.clone());
                        }
                        (t, rng.gen_range(10..60))
                    } else {
                        let mut t: Vec<String> =
                            pick(&mut rng, &bank.generic, 3).into_iter().map(String::from).collect();
                        t.extend(pick(&mut rng, &bank.filler, 2).into_iter().map(String::from));
                        (t, rng.gen_range(0..10))
                    };
                    text.dedup();
                    Comment {
                        id: format!("c{j:02}"),
                        text: text.join(" "),
                        upvotes: if silent { 0 } else { upvotes },
                    }
                })
                .collect::<Vec<_>>();
            let mut comments = comments;
            comments.shuffle(&mut rng);
            Article {
                id: format!("a{i:04}"),
                title,
                body: body.join(" "),
                category: Some(format!("topic{topic}")),
                comments,
            }
        })
        .collect()
}

/// Comment-free articles over a 30-word vocabulary, so the corpus holds at
/// most 31 * 31 distinct bigrams (the separator included).
pub fn bigram_corpus(n_docs: usize, seed: u64) -> Vec<Article> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let words = lexicon("", 30);
    (0..n_docs)
        .map(|i| {
            let topic = rng.gen_range(0..6);
            let draw = |rng: &mut ChaCha8Rng, len: usize| -> String {
                (0..len)
                    .map(|_| {
                        if rng.gen_bool(0.7) {
                            words[topic * 5 + rng.gen_range(0..5)].as_str()
                        } else {
                            words[rng.gen_range(0..30)].as_str()
                        }
                    })
                    .collect::<Vec<_>>()
                    .join(" ")
            };
            Article {
                id: format!("d{i:03}"),
                title: {
                    let n = rng.gen_range(2..5);
                    draw(&mut rng, n)
                },
                body: {
                    let n = rng.gen_range(10..30);
                    draw(&mut rng, n)
                },
                category: None,
                comments: Vec::new(),
            }
        })
        .collect()
}

/// Copy task: each source mentions `mr <name>` inside filler text and the
/// target is `mr <name> said`. Names are unique per example, so they fall
/// outside any frequency-capped vocabulary. `offset` keeps name sets of
/// different splits disjoint.
pub fn copy_pairs(n: usize, offset: usize, seed: u64) -> Vec<TrainingPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let filler = lexicon("", 16);
    (0..n)
        .map(|i| {
            let person = name(offset + i);
            let title: Vec<&str> = pick(&mut rng, &filler, 2);
            let len = rng.gen_range(5..9);
            let mut body: Vec<&str> = pick(&mut rng, &filler, len);
            let at = rng.gen_range(0..=body.len());
            body.insert(at, &person);
            body.insert(at, "mr");
            TrainingPair {
                article_id: format!("p{:05}", offset + i),
                source: crate::corpus::join_source(&title.join(" "), &body.join(" ")),
                target: format!("mr {person} said"),
                score: 1.0,
            }
        })
        .collect()
}

/// Pairs to memorize: random short sources over a 40-word lexicon, each
/// mapped to a random 4 to 6 word target.
pub fn memorization_pairs(n: usize, seed: u64) -> Vec<TrainingPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let words = lexicon("", 40);
    (0..n)
        .map(|i| {
            let title = pick(&mut rng, &words, 2).join(" ");
            let body_len = rng.gen_range(4..8);
            let body = pick(&mut rng, &words, body_len).join(" ");
            let target_len = rng.gen_range(4..7);
            let mut target = pick(&mut rng, &words, target_len);
            target.dedup();
            TrainingPair {
                article_id: format!("m{i:03}"),
                source: crate::corpus::join_source(&title, &body),
                target: target.join(" "),
                score: 1.0,
            }
        })
        .collect()
}

/// Generic replies shared by every article in [`contradiction_corpus`].
pub const GENERIC_REPLIES: [&str; 4] = ["i fully agree", "i fully disagree", "so very sad", "not sad at all"];

/// Articles whose comments contradict each other: the same four generic
/// replies everywhere (few upvotes) plus one specific comment repeating the
/// article's own keywords (many upvotes).
pub fn contradiction_corpus(n_articles: usize, seed: u64) -> Vec<Article> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let words = lexicon("", 60);
    (0..n_articles)
        .map(|i| {
            let mut own: Vec<String> = words.choose_multiple(&mut rng, 4).cloned().collect();
            own.sort();
            let title = own[..2].join(" ");
            let body: Vec<&str> = own
                .iter()
                .map(String::as_str)
                .chain(pick(&mut rng, &words, 6))
                .collect();
            let mut comments: Vec<Comment> = GENERIC_REPLIES
                .iter()
                .enumerate()
                .map(|(j, t)| Comment {
                    id: format!("c{j}"),
                    text: t.to_string(),
                    upvotes: rng.gen_range(0..5),
                })
                .collect();
            comments.push(Comment {
                id: "c4".into(),
                text: own[1..].join(" "),
                upvotes: rng.gen_range(20..40),
            });
            Article {
                id: format!("a{i:03}"),
                title,
                body: body.join(" "),
                category: None,
                comments,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{tokenize, TokenizerMode};

    #[test]
    fn deterministic() {
        assert_eq!(toy_corpus(5, 3), toy_corpus(5, 3));
        assert_ne!(toy_corpus(5, 3), toy_corpus(5, 4));
    }

    #[test]
    fn words_survive_both_tokenizers() {
        let a = &toy_corpus(1, 0)[0];
        for mode in [TokenizerMode::Whitespace, TokenizerMode::CjkChar] {
            assert_eq!(
                tokenize(&a.body, mode),
                a.body.split(' ').map(String::from).collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn lexicon_is_injective() {
        let words = lexicon("", 60);
        let set: std::collections::HashSet<_> = words.iter().collect();
        assert_eq!(set.len(), 60);
        let names: std::collections::HashSet<_> = (0..1000).map(name).collect();
        assert_eq!(names.len(), 1000);
    }

    #[test]
    fn every_article_has_a_positive_unless_silent() {
        for a in toy_corpus(50, 1) {
            let max = a.max_upvotes();
            assert!(max == 0 || max >= 10);
            assert!(!a.comments.is_empty());
        }
    }

    #[test]
    fn copy_targets_come_from_source() {
        for p in copy_pairs(20, 100, 2) {
            let name = p.target.split(' ').nth(1).unwrap().to_string();
            assert!(p.source.contains(&format!("mr {name}")));
        }
    }
}
