//! Normalized Levenshtein similarity between two strings, cut off at a
//! threshold.

use std::borrow::Cow;

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("threshold must lie in [0, 1], got {0}")]
pub struct InvalidThreshold(pub String);

/// Threshold and text normalization applied to every string comparison.
///
/// The default (`tau = 0.5`, case folding and trimming on) is the standard
/// ANLS setting.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityConfig<T> {
    tau: T,
    case_fold: bool,
    trim: bool,
}

impl<T: Scalar> SimilarityConfig<T> {
    pub fn new(tau: T) -> Result<Self, InvalidThreshold> {
        if tau >= T::zero() && tau <= T::one() {
            Ok(Self {
                tau,
                case_fold: true,
                trim: true,
            })
        } else {
            Err(InvalidThreshold(format!("{tau:?}")))
        }
    }

    pub fn with_case_fold(mut self, on: bool) -> Self {
        self.case_fold = on;
        self
    }

    pub fn with_trim(mut self, on: bool) -> Self {
        self.trim = on;
        self
    }

    pub fn tau(&self) -> &T {
        &self.tau
    }

    pub fn case_fold(&self) -> bool {
        self.case_fold
    }

    pub fn trim(&self) -> bool {
        self.trim
    }
}

impl<T: Scalar> Default for SimilarityConfig<T> {
    fn default() -> Self {
        Self {
            tau: T::from_ratio(1, 2),
            case_fold: true,
            trim: true,
        }
    }
}

/// Edit distance over Unicode code points.
pub fn levenshtein_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    char_distance(&a, &b)
}

fn char_distance(a: &[char], b: &[char]) -> usize {
    if a.len() < b.len() {
        return char_distance(b, a);
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let substitution = prev[j] + usize::from(ca != cb);
            cur[j + 1] = substitution.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Trims surrounding whitespace and lowercases, as configured. Internal
/// whitespace is left alone.
pub fn normalize_text<'a, T>(text: &'a str, config: &SimilarityConfig<T>) -> Cow<'a, str> {
    let text = if config.trim { text.trim() } else { text };
    if config.case_fold {
        Cow::Owned(text.to_lowercase())
    } else {
        Cow::Borrowed(text)
    }
}

/// `1 - LD / max(len)` on the normalized strings, or zero below the
/// threshold. Two empty strings are identical and score one.
pub fn nls<T: Scalar>(ground_truth: &str, prediction: &str, config: &SimilarityConfig<T>) -> T {
    let g: Vec<char> = normalize_text(ground_truth, config).chars().collect();
    let p: Vec<char> = normalize_text(prediction, config).chars().collect();
    let longest = g.len().max(p.len());
    if longest == 0 {
        return T::one();
    }
    let distance = char_distance(&g, &p);
    let similarity = T::from_ratio(longest - distance, longest);
    if similarity >= config.tau {
        similarity
    } else {
        T::zero()
    }
}

#[cfg(test)]
mod tests {
    use num_rational::BigRational;

    use super::*;

    /// Shortest edit script by breadth-first search over all strings reachable
    /// with single-character edits drawn from the two inputs' alphabet.
    fn brute_force_distance(a: &str, b: &str) -> usize {
        use std::collections::{HashSet, VecDeque};
        let alphabet: HashSet<char> = a.chars().chain(b.chars()).collect();
        let target: Vec<char> = b.chars().collect();
        let mut seen = HashSet::new();
        let mut queue = VecDeque::from([(a.chars().collect::<Vec<_>>(), 0usize)]);
        while let Some((word, dist)) = queue.pop_front() {
            if word == target {
                return dist;
            }
            if !seen.insert(word.clone()) || word.len() > target.len().max(a.chars().count()) {
                continue;
            }
            for i in 0..=word.len() {
                for &c in &alphabet {
                    let mut ins = word.clone();
                    ins.insert(i, c);
                    queue.push_back((ins, dist + 1));
                    if i < word.len() && word[i] != c {
                        let mut sub = word.clone();
                        sub[i] = c;
                        queue.push_back((sub, dist + 1));
                    }
                }
                if i < word.len() {
                    let mut del = word.clone();
                    del.remove(i);
                    queue.push_back((del, dist + 1));
                }
            }
        }
        unreachable!("target is always reachable")
    }

    #[test]
    fn distance_matches_search_oracle() {
        for (a, b) in [("hello world", "hello wolrd"), ("kitten", "sittin"), ("ab", "ba"), ("", "xy")] {
            assert_eq!(levenshtein_distance(a, b), brute_force_distance(a, b), "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn distance_examples() {
        assert_eq!(levenshtein_distance("hello world", "hello wolrd"), 2);
        assert_eq!(levenshtein_distance("abc", "abc"), 0);
        assert_eq!(levenshtein_distance("", "abc"), 3);
        assert_eq!(levenshtein_distance("Straße", "Strasse"), 2);
        assert_eq!(levenshtein_distance("日本語", "日本"), 1);
    }

    #[test]
    fn normalization() {
        let config = SimilarityConfig::<f64>::default();
        assert_eq!(normalize_text("  Hello ", &config), "hello");
        assert_eq!(normalize_text("W", &config), "w");
        assert_eq!(normalize_text("31.12.2023", &config), "31.12.2023");
        assert_eq!(normalize_text(" a  b ", &config), "a  b");
        let raw = config.with_case_fold(false).with_trim(false);
        assert_eq!(normalize_text("  Hello ", &raw), "  Hello ");
    }

    #[test]
    fn similarity_examples() {
        let config = SimilarityConfig::<BigRational>::default();
        let exact = |g, p| nls(g, p, &config);
        assert_eq!(exact("Hello World", "Hello World"), BigRational::from_ratio(1, 1));
        assert_eq!(exact("Hello World", "Hello Wolrd"), BigRational::from_ratio(9, 11));
        assert_eq!(exact("Hello World", "How are you?"), BigRational::from_ratio(0, 1));
        assert_eq!(exact("World", "Wolrd"), BigRational::from_ratio(3, 5));
        assert_eq!(exact("0.2", "0.199999999"), BigRational::from_ratio(0, 1));
        assert_eq!(exact("31.12.2023", "31.Dec 2023"), BigRational::from_ratio(7, 11));
        assert_eq!(exact("", ""), BigRational::from_ratio(1, 1));
        assert_eq!(exact("  ", "x"), BigRational::from_ratio(0, 1));
    }

    #[test]
    fn threshold_is_inclusive() {
        let config = SimilarityConfig::<f64>::default();
        // 1 - 2/4 = 0.5 exactly
        assert_eq!(nls("abcd", "abxy", &config), 0.5);
        assert_eq!(nls("abcd", "axyz", &config), 0.0);
        let strict = SimilarityConfig::new(0.0).unwrap();
        assert_eq!(nls("abcd", "axyz", &strict), 0.25);
    }

    #[test]
    fn case_folding_can_be_disabled() {
        let config = SimilarityConfig::<f64>::default().with_case_fold(false);
        assert_eq!(nls("W", "w", &config), 0.0);
        assert_eq!(nls("W", "w", &SimilarityConfig::<f64>::default()), 1.0);
    }

    #[test]
    fn rejects_out_of_range_threshold() {
        assert!(SimilarityConfig::new(1.5f64).is_err());
        assert!(SimilarityConfig::new(-0.1f64).is_err());
        assert!(SimilarityConfig::new(f64::NAN).is_err());
        assert!(SimilarityConfig::new(1.0f64).is_ok());
    }
}
