//! Batch evaluation of a prediction file against a ground-truth file.
//!
//! Every ground-truth sample gets exactly one result. A sample without a
//! prediction, or whose prediction line could not be parsed, scores 0.0 and
//! counts as failed. The dataset score is the arithmetic mean of per-sample
//! scores over the whole ground-truth set.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::metric::{tree_length, Metric, MetricError, ScorePair, DEFAULT_MAX_DEPTH};
use crate::scalar::Scalar;
use crate::similarity::SimilarityConfig;
use crate::tree::{parse_record, recover_record_id, DatasetError, DocumentSet, Role, TreeError, ValueTree};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("ground truth contains no samples")]
    EmptyGroundTruth,
    #[error("ground truth `{id}`: {source}")]
    GroundTruth { id: String, source: MetricError },
    #[error("cannot start worker threads: {0}")]
    ThreadPool(String),
    #[error("cannot write report: {0}")]
    Sink(#[from] std::io::Error),
    #[error("cannot write report: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleStatus {
    Scored,
    MissingPrediction,
    ParseError,
}

impl SampleStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Scored => "scored",
            Self::MissingPrediction => "missing_prediction",
            Self::ParseError => "parse_error",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleResult<T> {
    pub sample_id: String,
    pub score: T,
    pub s: T,
    /// For failed samples, the leaf count of the ground truth.
    pub l: usize,
    pub status: SampleStatus,
    pub per_key: Option<BTreeMap<String, ScorePair<T>>>,
    /// Why the prediction could not be used.
    pub error: Option<String>,
}

/// One prediction line; `value` carries the parse failure when the id could
/// be recovered but the tree could not.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    pub id: String,
    pub value: Result<ValueTree, String>,
}

/// Predictions keyed by unique sample id, plus problems with lines that
/// could not be attributed to any sample.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PredictionSet {
    records: Vec<PredictionRecord>,
    warnings: Vec<String>,
}

impl PredictionSet {
    pub fn new(records: Vec<PredictionRecord>) -> Result<Self, DatasetError> {
        let mut seen = HashSet::new();
        for record in &records {
            if !seen.insert(record.id.as_str()) {
                return Err(DatasetError::DuplicateId(record.id.clone()));
            }
        }
        Ok(Self {
            records,
            warnings: Vec::new(),
        })
    }

    /// Reads line-delimited prediction records. A bad line only affects its
    /// own sample; lines without a recoverable id become warnings.
    pub fn from_jsonl<R: BufRead>(reader: R) -> Result<Self, DatasetError> {
        let mut records = Vec::new();
        let mut warnings = Vec::new();
        for (index, line) in reader.split(b'\n').enumerate() {
            let bytes = line?;
            let text = String::from_utf8_lossy(&bytes);
            if text.trim().is_empty() {
                continue;
            }
            let parsed = match std::str::from_utf8(&bytes) {
                Ok(line) => parse_record(line, Role::Prediction),
                Err(_) => Err(TreeError::InvalidUtf8),
            };
            match parsed {
                Ok(sample) => records.push(PredictionRecord {
                    id: sample.id,
                    value: Ok(sample.tree),
                }),
                Err(err) => match recover_record_id(&text) {
                    Some(id) => records.push(PredictionRecord {
                        id,
                        value: Err(err.to_string()),
                    }),
                    None => warnings.push(format!("prediction line {}: {err}", index + 1)),
                },
            }
        }
        let mut set = Self::new(records)?;
        set.warnings = warnings;
        Ok(set)
    }

    pub fn records(&self) -> &[PredictionRecord] {
        &self.records
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

impl From<DocumentSet> for PredictionSet {
    fn from(set: DocumentSet) -> Self {
        Self {
            records: set
                .iter()
                .map(|sample| PredictionRecord {
                    id: sample.id.clone(),
                    value: Ok(sample.tree.clone()),
                })
                .collect(),
            warnings: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalOptions {
    /// Worker threads; 1 scores sequentially. Results do not depend on it.
    pub jobs: usize,
    /// Attach per-key breakdowns to every scored sample.
    pub breakdown: bool,
    pub max_depth: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            jobs: 1,
            breakdown: false,
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }
}

/// The settings a report was produced with.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub tau: f64,
    pub case_fold: bool,
    pub trim: bool,
    /// Always `"mean"`: the dataset score averages per-sample scores.
    pub aggregation: &'static str,
}

impl ConfigEcho {
    pub fn new<T: Scalar>(config: &SimilarityConfig<T>) -> Self {
        Self {
            tau: config.tau().as_f64(),
            case_fold: config.case_fold(),
            trim: config.trim(),
            aggregation: "mean",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport<T> {
    pub mean_score: T,
    pub sample_count: usize,
    pub failed_count: usize,
    /// In ground-truth order.
    pub results: Vec<SampleResult<T>>,
    pub config: ConfigEcho,
    pub warnings: Vec<String>,
}

pub fn evaluate<T>(
    ground_truth: &DocumentSet,
    predictions: &PredictionSet,
    config: &SimilarityConfig<T>,
    options: &EvalOptions,
) -> Result<EvalReport<T>, EvalError>
where
    T: Scalar + Send + Sync,
{
    if ground_truth.is_empty() {
        return Err(EvalError::EmptyGroundTruth);
    }
    let metric = Metric::new(config.clone()).with_max_depth(options.max_depth);
    for sample in ground_truth.iter() {
        metric.check_depth(&sample.tree).map_err(|source| EvalError::GroundTruth {
            id: sample.id.clone(),
            source,
        })?;
    }

    let by_id: HashMap<&str, &PredictionRecord> =
        predictions.records.iter().map(|r| (r.id.as_str(), r)).collect();
    let known: HashSet<&str> = ground_truth.iter().map(|s| s.id.as_str()).collect();
    let mut warnings: Vec<String> = predictions
        .records
        .iter()
        .filter(|r| !known.contains(r.id.as_str()))
        .map(|r| format!("prediction `{}` has no ground truth and was ignored", r.id))
        .collect();
    warnings.extend(predictions.warnings.iter().cloned());

    let score_one = |sample: &crate::tree::Sample| -> SampleResult<T> {
        let failed = |status, error| SampleResult {
            sample_id: sample.id.clone(),
            score: T::zero(),
            s: T::zero(),
            l: tree_length(&sample.tree),
            status,
            per_key: None,
            error,
        };
        let prediction = match by_id.get(sample.id.as_str()).map(|r| &r.value) {
            None => return failed(SampleStatus::MissingPrediction, None),
            Some(Err(message)) => return failed(SampleStatus::ParseError, Some(message.clone())),
            Some(Ok(tree)) => tree,
        };
        let outcome = if options.breakdown {
            metric
                .breakdown(&sample.tree, prediction)
                .map(|b| (b.root, Some(b.per_key)))
        } else {
            metric.score(&sample.tree, prediction).map(|pair| (pair, None))
        };
        match outcome {
            Ok((pair, per_key)) => SampleResult {
                sample_id: sample.id.clone(),
                score: pair.ratio(),
                s: pair.s,
                l: pair.l,
                status: SampleStatus::Scored,
                per_key,
                error: None,
            },
            Err(err) => failed(SampleStatus::ParseError, Some(err.to_string())),
        }
    };

    let results: Vec<SampleResult<T>> = if options.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(options.jobs)
            .build()
            .map_err(|e| EvalError::ThreadPool(e.to_string()))?;
        pool.install(|| ground_truth.samples().par_iter().map(score_one).collect())
    } else {
        ground_truth.iter().map(score_one).collect()
    };

    let total = results
        .iter()
        .fold(T::zero(), |acc, r| acc + r.score.clone());
    let mean_score = total / T::from_count(results.len());
    let failed_count = results
        .iter()
        .filter(|r| r.status != SampleStatus::Scored)
        .count();

    Ok(EvalReport {
        mean_score,
        sample_count: results.len(),
        failed_count,
        results,
        config: ConfigEcho::new(config),
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

/// Row id of the trailing summary line in CSV reports.
pub const CSV_SUMMARY_ID: &str = "__summary__";

#[derive(Serialize)]
struct JsonReport<'a> {
    mean_score: f64,
    sample_count: usize,
    failed_count: usize,
    config: &'a ConfigEcho,
    warnings: &'a [String],
    results: Vec<JsonSample<'a>>,
}

#[derive(Serialize)]
struct JsonSample<'a> {
    id: &'a str,
    score: f64,
    s: f64,
    l: usize,
    status: SampleStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    per_key: Option<BTreeMap<&'a str, JsonPair>>,
}

#[derive(Serialize)]
struct JsonPair {
    s: f64,
    l: usize,
}

/// Writes `report` as pretty JSON or as CSV (`id,score,status`, one row per
/// sample, then a summary row). The bytes depend only on the report.
pub fn write_report<T: Scalar, W: Write>(
    report: &EvalReport<T>,
    mut sink: W,
    format: ReportFormat,
) -> Result<(), EvalError> {
    match format {
        ReportFormat::Json => {
            let json = JsonReport {
                mean_score: report.mean_score.as_f64(),
                sample_count: report.sample_count,
                failed_count: report.failed_count,
                config: &report.config,
                warnings: &report.warnings,
                results: report
                    .results
                    .iter()
                    .map(|r| JsonSample {
                        id: &r.sample_id,
                        score: r.score.as_f64(),
                        s: r.s.as_f64(),
                        l: r.l,
                        status: r.status,
                        error: r.error.as_deref(),
                        per_key: r.per_key.as_ref().map(|keys| {
                            keys.iter()
                                .map(|(k, pair)| {
                                    (
                                        k.as_str(),
                                        JsonPair {
                                            s: pair.s.as_f64(),
                                            l: pair.l,
                                        },
                                    )
                                })
                                .collect()
                        }),
                    })
                    .collect(),
            };
            serde_json::to_writer_pretty(&mut sink, &json).map_err(std::io::Error::from)?;
            sink.write_all(b"\n")?;
        }
        ReportFormat::Csv => {
            let mut writer = csv::Writer::from_writer(&mut sink);
            writer.write_record(["id", "score", "status"])?;
            for r in &report.results {
                writer.write_record([
                    r.sample_id.as_str(),
                    &format!("{:.6}", r.score.as_f64()),
                    r.status.as_str(),
                ])?;
            }
            writer.write_record([
                CSV_SUMMARY_ID,
                &format!("{:.6}", report.mean_score.as_f64()),
                &format!("samples={} failed={}", report.sample_count, report.failed_count),
            ])?;
            writer.flush()?;
        }
    }
    sink.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::Sample;

    fn gt_set(samples: &[(&str, &str)]) -> DocumentSet {
        DocumentSet::new(
            samples
                .iter()
                .map(|(id, json)| Sample::new(*id, crate::tree::parse_tree(json, Role::GroundTruth).unwrap()))
                .collect(),
        )
        .unwrap()
    }

    fn pred_set(lines: &str) -> PredictionSet {
        PredictionSet::from_jsonl(lines.as_bytes()).unwrap()
    }

    #[test]
    fn perfect_predictions_average_to_one() {
        let gt = gt_set(&[("a", r#""x""#), ("b", r#"["y", "z"]"#)]);
        let pred = PredictionSet::from(gt.clone());
        let report = evaluate(&gt, &pred, &SimilarityConfig::<f64>::default(), &EvalOptions::default()).unwrap();
        assert_eq!(report.mean_score, 1.0);
        assert_eq!(report.failed_count, 0);
        assert_eq!(report.sample_count, 2);
    }

    #[test]
    fn missing_prediction_scores_zero() {
        let gt = gt_set(&[("q1", r#""Hello World""#), ("q2", r#""Hello World""#)]);
        let pred = pred_set("{\"id\": \"q1\", \"value\": \"Hello World\"}\n");
        let report = evaluate(&gt, &pred, &SimilarityConfig::<f64>::default(), &EvalOptions::default()).unwrap();
        assert_eq!(report.mean_score, 0.5);
        assert_eq!(report.failed_count, 1);
        assert_eq!(report.results[1].status, SampleStatus::MissingPrediction);
        assert_eq!(report.results[1].score, 0.0);
        assert_eq!(report.results[1].l, 1);
    }

    #[test]
    fn bad_prediction_lines_poison_only_their_sample() {
        let gt = gt_set(&[("q1", r#""a""#), ("q2", r#""b""#), ("q3", r#""c""#)]);
        let lines = concat!(
            "{\"id\": \"q1\", \"value\": {\"$oneof\": [\"a\"]}}\n",
            "{\"id\": \"q2\", \"value\": \"b\"}\n",
            "this is not json\n",
            "{\"id\": \"q3\", \"value\": {\"k\": 1, \"k\": 2}}\n",
            "{\"id\": \"extra\", \"value\": \"z\"}\n",
        );
        let pred = pred_set(lines);
        assert_eq!(pred.len(), 4);
        let report = evaluate(&gt, &pred, &SimilarityConfig::<f64>::default(), &EvalOptions::default()).unwrap();
        let statuses: Vec<_> = report.results.iter().map(|r| r.status).collect();
        assert_eq!(
            statuses,
            vec![SampleStatus::ParseError, SampleStatus::Scored, SampleStatus::ParseError]
        );
        assert!(report.results[0].error.as_deref().unwrap().contains("ground truth"));
        assert_eq!(report.failed_count, 2);
        assert!((report.mean_score - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(report.warnings.len(), 2);
        assert!(report.warnings[0].contains("`extra`"));
        assert!(report.warnings[1].starts_with("prediction line 3"));
    }

    #[test]
    fn invalid_utf8_in_prediction_line() {
        let mut bytes = b"{\"id\": \"q1\", \"value\": \"".to_vec();
        bytes.extend_from_slice(b"\xff\"}\n");
        let pred = PredictionSet::from_jsonl(&bytes[..]).unwrap();
        assert_eq!(pred.records()[0].value, Err(TreeError::InvalidUtf8.to_string()));
    }

    #[test]
    fn errors() {
        let empty = DocumentSet::default();
        assert!(matches!(
            evaluate(&empty, &PredictionSet::default(), &SimilarityConfig::<f64>::default(), &EvalOptions::default()),
            Err(EvalError::EmptyGroundTruth)
        ));
        let dup = "{\"id\": \"a\", \"value\": \"x\"}\n{\"id\": \"a\", \"value\": \"y\"}\n";
        assert!(matches!(
            PredictionSet::from_jsonl(dup.as_bytes()),
            Err(DatasetError::DuplicateId(id)) if id == "a"
        ));
    }

    #[test]
    fn breakdown_is_attached_when_requested() {
        let gt = gt_set(&[("a", r#"{"x": "1", "y": "2"}"#)]);
        let pred = pred_set("{\"id\": \"a\", \"value\": {\"x\": \"1\"}}\n");
        let options = EvalOptions {
            breakdown: true,
            ..EvalOptions::default()
        };
        let report = evaluate(&gt, &pred, &SimilarityConfig::<f64>::default(), &options).unwrap();
        let per_key = report.results[0].per_key.as_ref().unwrap();
        assert_eq!(per_key["x"], ScorePair::new(1.0, 1));
        assert_eq!(per_key["y"], ScorePair::new(0.0, 1));
    }

    #[test]
    fn csv_layout_and_determinism() {
        let gt = gt_set(&[("q1", r#""Hello World""#), ("q,2", r#""Hello World""#)]);
        let pred = pred_set("{\"id\": \"q1\", \"value\": \"Hello Wolrd\"}\n");
        let report = evaluate(&gt, &pred, &SimilarityConfig::<f64>::default(), &EvalOptions::default()).unwrap();
        let mut first = Vec::new();
        write_report(&report, &mut first, ReportFormat::Csv).unwrap();
        let text = String::from_utf8(first.clone()).unwrap();
        assert_eq!(
            text,
            "id,score,status\nq1,0.818182,scored\n\"q,2\",0.000000,missing_prediction\n__summary__,0.409091,samples=2 failed=1\n"
        );
        let mut second = Vec::new();
        write_report(&report, &mut second, ReportFormat::Csv).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn json_report_shape() {
        let gt = gt_set(&[("q1", r#""a""#)]);
        let pred = pred_set("{\"id\": \"q1\", \"value\": \"a\"}\n");
        let report = evaluate(&gt, &pred, &SimilarityConfig::<f64>::default(), &EvalOptions::default()).unwrap();
        let mut out = Vec::new();
        write_report(&report, &mut out, ReportFormat::Json).unwrap();
        let value: serde_json::Value = serde_json::from_slice(&out).unwrap();
        assert_eq!(value["mean_score"], 1.0);
        assert_eq!(value["config"]["tau"], 0.5);
        assert_eq!(value["config"]["aggregation"], "mean");
        assert_eq!(value["results"][0]["status"], "scored");
        assert!(value["results"][0].get("per_key").is_none());
    }

    struct FailingSink;

    impl Write for FailingSink {
        fn write(&mut self, _: &[u8]) -> std::io::Result<usize> {
            Err(std::io::Error::other("disk full"))
        }

        fn flush(&mut self) -> std::io::Result<()> {
            Ok(())
        }
    }

    #[test]
    fn sink_errors_surface() {
        let gt = gt_set(&[("q1", r#""a""#)]);
        let report = evaluate(&gt, &PredictionSet::default(), &SimilarityConfig::<f64>::default(), &EvalOptions::default()).unwrap();
        assert!(write_report(&report, FailingSink, ReportFormat::Json).is_err());
        assert!(write_report(&report, FailingSink, ReportFormat::Csv).is_err());
    }
}
