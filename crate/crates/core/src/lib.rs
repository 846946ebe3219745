//! ANLS* similarity between a ground-truth tree and a predicted tree.
//!
//! Trees are built from strings, `None`, one-of tuples, lists and
//! dictionaries ([`ValueTree`]). Strings are compared with the thresholded
//! normalized Levenshtein similarity, lists are aligned with an optimal
//! assignment, and the result is normalized by the number of leaves so that
//! missing and hallucinated content is penalized alike.
//!
//! ```
//! use anls_star::{anls_star, parse_tree, Config, Role};
//!
//! let gt = parse_tree(r#"{"a": "Hello", "b": "World"}"#, Role::GroundTruth).unwrap();
//! let pred = parse_tree(r#"{"a": "Hello"}"#, Role::Prediction).unwrap();
//! assert_eq!(anls_star(&gt, &pred, &Config::default()).unwrap(), 0.5);
//! ```
//!
//! All scoring code is generic over [`Scalar`]; the aliases below fix it to
//! `f64` for everyday use or to an exact rational for reference results.

pub mod evaluation;
pub mod matching;
pub mod metric;
pub mod scalar;
pub mod similarity;
pub mod tree;

pub use evaluation::{
    evaluate, write_report, ConfigEcho, EvalError, EvalOptions, EvalReport, PredictionRecord, PredictionSet,
    ReportFormat, SampleResult, SampleStatus,
};
pub use matching::{match_lists, maximize_lexicographic, MatchAssignment, ScoreMatrix};
pub use metric::{
    anls_star, score, score_with_breakdown, tree_length, Metric, MetricError, ScoreBreakdown, ScorePair,
    DEFAULT_MAX_DEPTH,
};
pub use scalar::Scalar;
pub use similarity::{levenshtein_distance, nls, normalize_text, InvalidThreshold, SimilarityConfig};
pub use tree::{
    canonical_scalar, parse_record, parse_tree, parse_tree_bytes, Alternatives, DatasetError, DocumentSet,
    RawScalar, Role, Sample, TreeError, ValueTree, ONE_OF_KEY,
};

/// Exact rational scores.
pub type Exact = num_rational::BigRational;

pub type Config = SimilarityConfig<f64>;
pub type ExactConfig = SimilarityConfig<Exact>;
pub type Pair = ScorePair<f64>;
pub type ExactPair = ScorePair<Exact>;
pub type Breakdown = ScoreBreakdown<f64>;
pub type Report = EvalReport<f64>;
pub type ExactReport = EvalReport<Exact>;
