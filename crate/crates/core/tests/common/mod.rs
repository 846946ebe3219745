#![allow(dead_code)]

use anls_star::{parse_tree, Role, ValueTree};

/// A worked example: ground truth, prediction and the published score,
/// which is rounded to two decimals.
pub struct Fixture {
    pub id: u32,
    pub description: &'static str,
    pub ground_truth: &'static str,
    pub prediction: &'static str,
    pub printed: f64,
}

impl Fixture {
    pub fn trees(&self) -> (ValueTree, ValueTree) {
        (
            parse_tree(self.ground_truth, Role::GroundTruth).expect("fixture ground truth parses"),
            parse_tree(self.prediction, Role::Prediction).expect("fixture prediction parses"),
        )
    }
}

const fn fixture(
    id: u32,
    description: &'static str,
    ground_truth: &'static str,
    prediction: &'static str,
    printed: f64,
) -> Fixture {
    Fixture {
        id,
        description,
        ground_truth,
        prediction,
        printed,
    }
}

pub const BASIC_CASES: [Fixture; 13] = [
    fixture(1, "correct string", r#""Hello World""#, r#""Hello World""#, 1.0),
    fixture(2, "typo", r#""Hello World""#, r#""Hello Wolrd""#, 0.82),
    fixture(3, "incorrect string", r#""Hello World""#, r#""How are you?""#, 0.0),
    fixture(4, "hallucination", "null", r#""Hello World!""#, 0.0),
    fixture(5, "one of n", r#"{"$oneof": ["Hello", "World"]}"#, r#""Hello""#, 1.0),
    fixture(6, "typo in one of n", r#"{"$oneof": ["Hello", "World"]}"#, r#""Wolrd""#, 0.6),
    fixture(7, "expected string", r#""Hello World""#, r#"["Hello", "World"]"#, 0.0),
    fixture(8, "correct list", r#"["Hello", "World"]"#, r#"["World", "Hello"]"#, 1.0),
    fixture(9, "missing element", r#"["Hello", "World"]"#, r#"["Hello"]"#, 0.5),
    fixture(10, "correct dict", r#"{"a": "Hello", "b": "World"}"#, r#"{"b": "World", "a": "Hello"}"#, 1.0),
    fixture(11, "missing key", r#"{"a": "Hello", "b": "World"}"#, r#"{"a": "Hello"}"#, 0.5),
    fixture(
        12,
        "hallucinated key",
        r#"{"a": "Hello", "b": "World"}"#,
        r#"{"b": "World", "a": "Hello", "c": "Great"}"#,
        0.67,
    ),
    fixture(
        13,
        "complex object",
        r#"{"a": "Hello", "b": ["W", "r", "l", "d"]}"#,
        r#"{"a": "Hello", "b": ["w", "r", "d"]}"#,
        0.8,
    ),
];

/// Case 16 is listed separately: its printed value is not reproducible.
pub const EDGE_CASES: [Fixture; 4] = [
    fixture(14, "list cast to tuple", r#"["Hello", "World"]"#, r#""Hello""#, 1.0),
    fixture(15, "comparison of numbers", "0.2", "0.199999999", 0.0),
    fixture(17, "unanswerable, incorrect answer", r#""Yesterday""#, r#""Last Week""#, 0.0),
    fixture(18, "unanswerable, no answer", r#""Yesterday""#, "null", 0.0),
];

pub const INCORRECT_FORMAT: Fixture = fixture(16, "incorrect format", r#""31.12.2023""#, r#""31.Dec 2023""#, 0.58);

/// Exact value of each basic case as a fraction, from hand computation:
/// e.g. case 2 is 1 - 2/11, case 12 is 2 matched leaves out of 3.
pub const BASIC_EXACT: [(usize, usize); 13] = [
    (1, 1),
    (9, 11),
    (0, 1),
    (0, 1),
    (1, 1),
    (3, 5),
    (0, 1),
    (1, 1),
    (1, 2),
    (1, 1),
    (1, 2),
    (2, 3),
    (4, 5),
];

/// The basic cases as line-delimited ground-truth and prediction files.
pub fn basic_cases_jsonl() -> (String, String) {
    let mut gt = String::new();
    let mut pred = String::new();
    for case in &BASIC_CASES {
        gt.push_str(&format!("{{\"id\": \"case{}\", \"value\": {}}}\n", case.id, case.ground_truth));
        pred.push_str(&format!("{{\"id\": \"case{}\", \"value\": {}}}\n", case.id, case.prediction));
    }
    (gt, pred)
}
