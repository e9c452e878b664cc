//! Comment retrieval, scoring and generation for news articles.
//!
//! The guide in `book/` walks through each module; its code blocks run as
//! doctests of this crate.

pub mod cli;
pub mod config;
pub mod corpus;
pub mod dataset_builder;
pub mod diffcore;
pub mod error;
pub mod hashvec;
pub mod metrics;
pub mod pointer_gen;
pub mod retrieval;
pub mod toy;
pub mod upvote_scorer;
pub mod util;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident, $file:literal) => {
            #[doc = include_str!(concat!("../../../book/src/", $file))]
            pub struct $name;
        };
    }
    chapter!(Introduction, "introduction.md");
    chapter!(Corpus, "corpus.md");
    chapter!(Retrieval, "retrieval.md");
    chapter!(Scoring, "scoring.md");
    chapter!(Autodiff, "autodiff.md");
    chapter!(PointerGenerator, "pointer_generator.md");
    chapter!(Datasets, "datasets.md");
    chapter!(Metrics, "metrics.md");
    chapter!(Pipeline, "pipeline.md");
}
