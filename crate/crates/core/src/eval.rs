//! Exact-match scoring of identification responses.
//!
//! A response is correct when its normalized text is one of the video's
//! acceptable labels. Every accuracy is kept as an exact `correct/total`
//! pair, so aggregates over cells are exact and order-independent.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("no label set for video `{0}`")]
    UnknownVideoId(String),
    #[error("nothing to score")]
    EmptyInput,
    #[error("no perceptibility ratings")]
    NoRatings,
    #[error("need at least 2 populated SNR bins, got {0}")]
    InsufficientBins(usize),
    #[error("bin width must be finite and positive")]
    InvalidBinWidth,
    #[error("SNR of video `{0}` is not finite")]
    NonFiniteSnr(String),
    #[error("label set for `{video_id}`: {reason}")]
    InvalidLabelSet { video_id: String, reason: String },
    #[error("{path}: {reason}")]
    InvalidResponse { path: String, reason: String },
    #[error("duplicate video id `{0}`")]
    DuplicateVideoId(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Text,
    Shapes,
    ObjectImages,
    DynamicScenes,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::Text,
        Category::Shapes,
        Category::ObjectImages,
        Category::DynamicScenes,
    ];

    /// Categories whose videos have exactly one acceptable label.
    pub fn single_label(self) -> bool {
        matches!(self, Category::Text | Category::Shapes)
    }

    pub fn title(self) -> &'static str {
        match self {
            Category::Text => "Text",
            Category::Shapes => "Shapes",
            Category::ObjectImages => "Object Images",
            Category::DynamicScenes => "Dynamic Scenes",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Text => "text",
            Category::Shapes => "shapes",
            Category::ObjectImages => "object_images",
            Category::DynamicScenes => "dynamic_scenes",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown category `{s}` (expected text, shapes, object_images or dynamic_scenes)"))
    }
}

const ARTICLES: [&str; 3] = ["a", "an", "the"];

/// Canonical form of a free-text answer: lowercase, punctuation removed,
/// whitespace collapsed, and leading articles dropped. A lone article is
/// kept, so the result is never emptied by article stripping.
pub fn normalize_response(raw: &str) -> String {
    let lowered = raw.to_lowercase();
    let kept: String = lowered
        .chars()
        .filter(|c| c.is_alphanumeric() || c.is_whitespace())
        .collect();
    let mut words: Vec<&str> = kept.split_whitespace().collect();
    let lead = words
        .iter()
        .take_while(|w| ARTICLES.contains(w))
        .count()
        .min(words.len().saturating_sub(1));
    words.drain(..lead);
    words.join(" ")
}

/// The acceptable answers for one video.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelSet {
    pub video_id: String,
    pub category: Category,
    pub labels: BTreeSet<String>,
}

impl LabelSet {
    /// Labels are normalized on the way in.
    pub fn new<I, S>(video_id: impl Into<String>, category: Category, labels: I) -> Result<Self, EvalError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let set = LabelSet {
            video_id: video_id.into(),
            category,
            labels: labels.into_iter().map(|l| normalize_response(l.as_ref())).collect(),
        };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        let fail = |reason: &str| {
            Err(EvalError::InvalidLabelSet {
                video_id: self.video_id.clone(),
                reason: reason.to_string(),
            })
        };
        if self.video_id.is_empty() {
            return fail("video id is empty");
        }
        if self.labels.is_empty() {
            return fail("no labels");
        }
        if self.category.single_label() && self.labels.len() != 1 {
            return fail("text and shape videos take exactly one label");
        }
        if self.labels.iter().any(|l| l.is_empty() || normalize_response(l) != *l) {
            return fail("labels must be non-empty and normalized");
        }
        Ok(())
    }

    pub fn accepts(&self, response: &str) -> bool {
        self.labels.contains(&normalize_response(response))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResponseRecord {
    pub video_id: String,
    pub responder_id: String,
    pub response_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perceptibility: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fps_shown: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_id: Option<String>,
    /// Seconds since the Unix epoch.
    pub timestamp: f64,
}

impl ResponseRecord {
    pub fn validate(&self) -> Result<(), EvalError> {
        let fail = |path: &str, reason: &str| {
            Err(EvalError::InvalidResponse {
                path: path.to_string(),
                reason: reason.to_string(),
            })
        };
        if self.video_id.is_empty() {
            return fail("video_id", "must not be empty");
        }
        if self.responder_id.is_empty() {
            return fail("responder_id", "must not be empty");
        }
        if let Some(p) = self.perceptibility {
            if !(1..=5).contains(&p) {
                return fail("perceptibility", "must lie in 1..=5");
            }
        }
        if let Some(fps) = self.fps_shown {
            if !(fps.is_finite() && fps > 0.0) {
                return fail("fps_shown", "must be finite and positive");
            }
        }
        if !self.timestamp.is_finite() {
            return fail("timestamp", "must be finite");
        }
        Ok(())
    }
}

/// An exact accuracy: `correct` out of `total`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Ratio {
    pub correct: u64,
    pub total: u64,
}

impl Ratio {
    pub fn new(correct: u64, total: u64) -> Self {
        assert!(correct <= total, "{correct}/{total}");
        Ratio { correct, total }
    }

    fn record(&mut self, correct: bool) {
        self.total += 1;
        self.correct += correct as u64;
    }

    fn merge(&mut self, other: Ratio) {
        self.correct += other.correct;
        self.total += other.total;
    }

    /// `None` for an empty cell.
    pub fn fraction(&self) -> Option<f64> {
        (self.total > 0).then(|| self.correct as f64 / self.total as f64)
    }

    pub fn percent(&self) -> Option<f64> {
        self.fraction().map(|f| 100.0 * f)
    }

    /// Exact comparison of the differences `a.0 − a.1` and `b.0 − b.1`,
    /// by cross-multiplication. All totals must be non-zero.
    fn cmp_diff(a: (Ratio, Ratio), b: (Ratio, Ratio)) -> Ordering {
        let num = |hi: Ratio, lo: Ratio| hi.correct as i128 * lo.total as i128 - lo.correct as i128 * hi.total as i128;
        let den = |hi: Ratio, lo: Ratio| hi.total as i128 * lo.total as i128;
        (num(a.0, a.1) * den(b.0, b.1)).cmp(&(num(b.0, b.1) * den(a.0, a.1)))
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.correct, self.total)
    }
}

/// A video a responder was asked to answer.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Assignment {
    pub responder_id: String,
    pub video_id: String,
}

/// Who was asked to answer which video.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Roster {
    pub assignments: Vec<Assignment>,
}

/// How videos without a response are treated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnansweredPolicy {
    /// Cells cover answered videos only.
    AnsweredOnly,
    /// Assigned but unanswered videos count as incorrect.
    RosterIncorrect,
}

#[derive(Clone, Debug, Default)]
pub struct ScoreOptions<'a> {
    /// Explicit assignments; switches to [`UnansweredPolicy::RosterIncorrect`].
    pub roster: Option<&'a [Assignment]>,
    /// Also report the text of incorrect answers.
    pub verbose: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Population standard deviation.
    pub stdev: f64,
    pub n: usize,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Some(MeanStd {
            mean,
            stdev: var.sqrt(),
            n: values.len(),
        })
    }
}

impl fmt::Display for MeanStd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match f.precision() {
            Some(p) => write!(f, "{:.p$} ± {:.p$}", self.mean, self.stdev),
            None => write!(f, "{} ± {}", self.mean, self.stdev),
        }
    }
}

/// Accuracy by frame rate shown.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FpsRow {
    pub fps: f64,
    pub overall: Ratio,
    pub per_category: BTreeMap<Category, Ratio>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IncorrectResponse {
    pub video_id: String,
    pub responder_id: String,
    pub response_text: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub policy: UnansweredPolicy,
    pub overall: Ratio,
    pub per_category: BTreeMap<Category, Ratio>,
    pub per_responder: BTreeMap<String, Ratio>,
    /// Keyed by the opaque prompt identifier, for responses that carry one.
    pub per_prompt: BTreeMap<String, Ratio>,
    /// Rows in ascending fps; only responses that record the fps shown.
    pub per_fps: Vec<FpsRow>,
    pub mean_perceptibility: BTreeMap<Category, MeanStd>,
    /// Only filled when scoring verbosely.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub incorrect: Vec<IncorrectResponse>,
}

/// Index label sets by video id, rejecting duplicates and invalid sets.
pub fn index_labels(labels: &[LabelSet]) -> Result<HashMap<&str, &LabelSet>, EvalError> {
    let mut by_id = HashMap::with_capacity(labels.len());
    for set in labels {
        set.validate()?;
        if by_id.insert(set.video_id.as_str(), set).is_some() {
            return Err(EvalError::DuplicateVideoId(set.video_id.clone()));
        }
    }
    Ok(by_id)
}

/// One scored response.
#[derive(Clone, Debug, PartialEq)]
pub struct Judgement<'a> {
    pub response: &'a ResponseRecord,
    pub category: Category,
    pub correct: bool,
}

/// Mark each response correct or not.
pub fn judge<'a>(responses: &'a [ResponseRecord], labels: &[LabelSet]) -> Result<Vec<Judgement<'a>>, EvalError> {
    let by_id = index_labels(labels)?;
    responses
        .iter()
        .map(|r| {
            r.validate()?;
            let set = by_id
                .get(r.video_id.as_str())
                .ok_or_else(|| EvalError::UnknownVideoId(r.video_id.clone()))?;
            Ok(Judgement {
                response: r,
                category: set.category,
                correct: set.accepts(&r.response_text),
            })
        })
        .collect()
}

/// [`score_with`] over answered videos only.
pub fn score(responses: &[ResponseRecord], labels: &[LabelSet]) -> Result<AccuracyReport, EvalError> {
    score_with(responses, labels, &ScoreOptions::default())
}

/// Exact-match accuracy overall and per category, responder, prompt and fps.
pub fn score_with(
    responses: &[ResponseRecord],
    labels: &[LabelSet],
    opts: &ScoreOptions<'_>,
) -> Result<AccuracyReport, EvalError> {
    let judged = judge(responses, labels)?;
    let by_id = index_labels(labels)?;

    let mut overall = Ratio::default();
    let mut per_category: BTreeMap<Category, Ratio> = BTreeMap::new();
    let mut per_responder: BTreeMap<String, Ratio> = BTreeMap::new();
    let mut per_prompt: BTreeMap<String, Ratio> = BTreeMap::new();
    let mut per_fps: Vec<FpsRow> = Vec::new();
    let mut ratings: BTreeMap<Category, Vec<f64>> = BTreeMap::new();
    let mut incorrect = Vec::new();

    for j in &judged {
        let r = j.response;
        overall.record(j.correct);
        per_category.entry(j.category).or_default().record(j.correct);
        per_responder.entry(r.responder_id.clone()).or_default().record(j.correct);
        if let Some(p) = &r.prompt_id {
            per_prompt.entry(p.clone()).or_default().record(j.correct);
        }
        if let Some(fps) = r.fps_shown {
            let row = match per_fps.iter_mut().position(|row| row.fps == fps) {
                Some(i) => &mut per_fps[i],
                None => {
                    per_fps.push(FpsRow {
                        fps,
                        overall: Ratio::default(),
                        per_category: BTreeMap::new(),
                    });
                    per_fps.last_mut().expect("just pushed")
                }
            };
            row.overall.record(j.correct);
            row.per_category.entry(j.category).or_default().record(j.correct);
        }
        if let Some(p) = r.perceptibility {
            ratings.entry(j.category).or_default().push(p as f64);
        }
        if opts.verbose && !j.correct {
            incorrect.push(IncorrectResponse {
                video_id: r.video_id.clone(),
                responder_id: r.responder_id.clone(),
                response_text: r.response_text.clone(),
            });
        }
    }

    let policy = match opts.roster {
        None => UnansweredPolicy::AnsweredOnly,
        Some(roster) => {
            let answered: BTreeSet<(&str, &str)> = responses
                .iter()
                .map(|r| (r.responder_id.as_str(), r.video_id.as_str()))
                .collect();
            let assigned: BTreeSet<(&str, &str)> = roster
                .iter()
                .map(|a| (a.responder_id.as_str(), a.video_id.as_str()))
                .collect();
            for (responder, video) in assigned.difference(&answered) {
                let set = by_id
                    .get(video)
                    .ok_or_else(|| EvalError::UnknownVideoId(video.to_string()))?;
                overall.record(false);
                per_category.entry(set.category).or_default().record(false);
                per_responder.entry(responder.to_string()).or_default().record(false);
            }
            UnansweredPolicy::RosterIncorrect
        }
    };
    if overall.total == 0 {
        return Err(EvalError::EmptyInput);
    }

    per_fps.sort_by(|a, b| a.fps.total_cmp(&b.fps));
    incorrect.sort_by(|a: &IncorrectResponse, b| (&a.video_id, &a.responder_id).cmp(&(&b.video_id, &b.responder_id)));
    Ok(AccuracyReport {
        policy,
        overall,
        per_category,
        per_responder,
        per_prompt,
        per_fps,
        mean_perceptibility: ratings
            .iter()
            .filter_map(|(c, v)| MeanStd::of(v).map(|m| (*c, m)))
            .collect(),
        incorrect,
    })
}

/// Combine reports scored over disjoint partitions of the responses.
/// Perceptibility means and verbose listings are not mergeable from counts
/// and are dropped.
pub fn merge_reports(parts: &[AccuracyReport]) -> Result<AccuracyReport, EvalError> {
    let first = parts.first().ok_or(EvalError::EmptyInput)?;
    let mut out = AccuracyReport {
        policy: first.policy,
        overall: Ratio::default(),
        per_category: BTreeMap::new(),
        per_responder: BTreeMap::new(),
        per_prompt: BTreeMap::new(),
        per_fps: Vec::new(),
        mean_perceptibility: BTreeMap::new(),
        incorrect: Vec::new(),
    };
    for p in parts {
        out.overall.merge(p.overall);
        for (k, v) in &p.per_category {
            out.per_category.entry(*k).or_default().merge(*v);
        }
        for (k, v) in &p.per_responder {
            out.per_responder.entry(k.clone()).or_default().merge(*v);
        }
        for (k, v) in &p.per_prompt {
            out.per_prompt.entry(k.clone()).or_default().merge(*v);
        }
        for row in &p.per_fps {
            match out.per_fps.iter_mut().find(|r| r.fps == row.fps) {
                Some(r) => {
                    r.overall.merge(row.overall);
                    for (k, v) in &row.per_category {
                        r.per_category.entry(*k).or_default().merge(*v);
                    }
                }
                None => out.per_fps.push(row.clone()),
            }
        }
    }
    out.per_fps.sort_by(|a, b| a.fps.total_cmp(&b.fps));
    Ok(out)
}

fn pct(r: Option<&Ratio>) -> String {
    r.and_then(Ratio::percent).map_or_else(|| "-".to_string(), |p| format!("{p:.2}"))
}

/// Accuracy per category plus the overall row, as a plain-text table.
pub fn render_accuracy_table(report: &AccuracyReport) -> String {
    let mut out = format!("{:<16}{:>10}{:>12}\n", "Category", "Acc (%)", "Correct");
    for (c, r) in &report.per_category {
        out += &format!("{:<16}{:>10}{:>12}\n", c.title(), pct(Some(r)), r.to_string());
    }
    out += &format!("{:<16}{:>10}{:>12}\n", "Overall", pct(Some(&report.overall)), report.overall.to_string());
    out += &format!("unanswered policy: {:?}\n", report.policy);
    out
}

/// Accuracy (%) with one row per category and one column per fps, plus an
/// average row pooling all categories at that fps.
pub fn render_fps_table(report: &AccuracyReport) -> String {
    let mut out = format!("{:<16}", "Category");
    for row in &report.per_fps {
        out += &format!("{:>10}", format!("{} FPS", row.fps));
    }
    out.push('\n');
    let categories: BTreeSet<Category> = report
        .per_fps
        .iter()
        .flat_map(|r| r.per_category.keys().copied())
        .collect();
    for c in categories {
        out += &format!("{:<16}", c.title());
        for row in &report.per_fps {
            out += &format!("{:>10}", pct(row.per_category.get(&c)));
        }
        out.push('\n');
    }
    out += &format!("{:<16}", "Average");
    for row in &report.per_fps {
        out += &format!("{:>10}", pct(Some(&row.overall)));
    }
    out.push('\n');
    out
}

/// One responder's accuracy and mean rating in one category.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResponderCell {
    pub accuracy: Ratio,
    pub perceptibility: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerceptibilitySummary {
    /// Pooled over all rated responses of the category.
    pub per_category: BTreeMap<Category, MeanStd>,
    pub per_responder: BTreeMap<String, BTreeMap<Category, ResponderCell>>,
}

/// Mean and population standard deviation of ratings per category, with the
/// per-responder breakdown used by [`render_perceptibility_table`].
pub fn perceptibility_summary(
    responses: &[ResponseRecord],
    labels: &[LabelSet],
) -> Result<PerceptibilitySummary, EvalError> {
    let judged = judge(responses, labels)?;
    let mut pooled: BTreeMap<Category, Vec<f64>> = BTreeMap::new();
    let mut cells: BTreeMap<String, BTreeMap<Category, (Ratio, Vec<f64>)>> = BTreeMap::new();
    for j in &judged {
        let cell = cells
            .entry(j.response.responder_id.clone())
            .or_default()
            .entry(j.category)
            .or_default();
        cell.0.record(j.correct);
        if let Some(p) = j.response.perceptibility {
            cell.1.push(p as f64);
            pooled.entry(j.category).or_default().push(p as f64);
        }
    }
    if pooled.is_empty() {
        return Err(EvalError::NoRatings);
    }
    Ok(PerceptibilitySummary {
        per_category: pooled.iter().filter_map(|(c, v)| MeanStd::of(v).map(|m| (*c, m))).collect(),
        per_responder: cells
            .into_iter()
            .map(|(id, per)| {
                let per = per
                    .into_iter()
                    .map(|(c, (acc, ratings))| {
                        let cell = ResponderCell {
                            accuracy: acc,
                            perceptibility: MeanStd::of(&ratings).map(|m| m.mean),
                        };
                        (c, cell)
                    })
                    .collect();
                (id, per)
            })
            .collect(),
    })
}

/// One row per responder with accuracy (%) and mean rating for each
/// category, then a mean row of `mean ± stdev` across responders.
pub fn render_perceptibility_table(summary: &PerceptibilitySummary) -> String {
    let categories: BTreeSet<Category> = summary
        .per_responder
        .values()
        .flat_map(|per| per.keys().copied())
        .collect();
    let mut out = format!("{:<14}", "Responder");
    for c in &categories {
        out += &format!(" | {:^27}", c.title());
    }
    out += &format!("\n{:<14}", "");
    for _ in &categories {
        out += &format!(" | {:>13} {:>13}", "Acc (%)", "Perc (1-5)");
    }
    out.push('\n');
    let opt = |v: Option<f64>, p: usize| v.map_or_else(|| "-".to_string(), |v| format!("{v:.p$}"));
    for (id, per) in &summary.per_responder {
        out += &format!("{id:<14}");
        for c in &categories {
            let cell = per.get(c);
            out += &format!(
                " | {:>13} {:>13}",
                opt(cell.and_then(|c| c.accuracy.percent()), 1),
                opt(cell.and_then(|c| c.perceptibility), 1)
            );
        }
        out.push('\n');
    }
    out += &format!("{:<14}", "Mean");
    for c in &categories {
        let column = |f: &dyn Fn(&ResponderCell) -> Option<f64>| {
            let v: Vec<f64> = summary.per_responder.values().filter_map(|per| per.get(c).and_then(f)).collect();
            MeanStd::of(&v).map_or_else(|| "-".to_string(), |m| format!("{m:.1}"))
        };
        out += &format!(
            " | {:>13} {:>13}",
            column(&|cell| cell.accuracy.percent()),
            column(&|cell| cell.perceptibility)
        );
    }
    out.push('\n');
    out
}

/// A scored video placed on the SNR axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredVideo {
    pub video_id: String,
    pub snr_db: f64,
    pub correct: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnrBin {
    /// Lower edge; the bin is `[lower_db, lower_db + bin_width)`.
    pub lower_db: f64,
    pub accuracy: Ratio,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub bin_width_db: f64,
    pub bins: Vec<SnrBin>,
    /// Midpoint between the centres of the adjacent populated bins with the
    /// largest accuracy increase; absent when accuracy never increases.
    pub step_db: Option<f64>,
    pub max_jump: f64,
    /// The largest increase exceeds one half.
    pub binary_threshold: bool,
}

/// A jump strictly above this flags a binary threshold.
pub const BINARY_JUMP: f64 = 0.5;

/// Bin outcomes by SNR (edges at integer multiples of `bin_width`) and locate
/// the sharpest accuracy rise between neighbouring populated bins.
pub fn snr_threshold_analysis(scored: &[ScoredVideo], bin_width: f64) -> Result<ThresholdReport, EvalError> {
    if !(bin_width.is_finite() && bin_width > 0.0) {
        return Err(EvalError::InvalidBinWidth);
    }
    let mut bins: BTreeMap<i64, Ratio> = BTreeMap::new();
    for s in scored {
        if !s.snr_db.is_finite() {
            return Err(EvalError::NonFiniteSnr(s.video_id.clone()));
        }
        bins.entry((s.snr_db / bin_width).floor() as i64).or_default().record(s.correct);
    }
    if bins.len() < 2 {
        return Err(EvalError::InsufficientBins(bins.len()));
    }
    let bins: Vec<(i64, Ratio)> = bins.into_iter().collect();
    let mut best: Option<usize> = None;
    for i in 0..bins.len() - 1 {
        let pair = (bins[i + 1].1, bins[i].1);
        let rises = Ratio::cmp_diff(pair, (Ratio::new(0, 1), Ratio::new(0, 1))) == Ordering::Greater;
        let better = match best {
            None => rises,
            Some(b) => Ratio::cmp_diff(pair, (bins[b + 1].1, bins[b].1)) == Ordering::Greater,
        };
        if better {
            best = Some(i);
        }
    }
    let frac = |r: &Ratio| r.fraction().expect("populated bin");
    let max_jump = best.map_or(0.0, |i| frac(&bins[i + 1].1) - frac(&bins[i].1));
    let centre = |k: i64| (k as f64 + 0.5) * bin_width;
    Ok(ThresholdReport {
        bin_width_db: bin_width,
        step_db: best.map(|i| 0.5 * (centre(bins[i].0) + centre(bins[i + 1].0))),
        max_jump,
        binary_threshold: max_jump > BINARY_JUMP,
        bins: bins
            .into_iter()
            .map(|(k, accuracy)| SnrBin {
                lower_db: k as f64 * bin_width,
                accuracy,
            })
            .collect(),
    })
}

/// Bins as `[lo, hi)  acc%  correct/total`, then the step verdict.
pub fn render_threshold_table(report: &ThresholdReport) -> String {
    let mut out = format!("{:<20}{:>10}{:>12}\n", "SNR bin (dB)", "Acc (%)", "Correct");
    for b in &report.bins {
        let range = format!("[{:.2}, {:.2})", b.lower_db, b.lower_db + report.bin_width_db);
        out += &format!("{:<20}{:>10}{:>12}\n", range, pct(Some(&b.accuracy)), b.accuracy.to_string());
    }
    match report.step_db {
        Some(s) => {
            out += &format!("step at {s:.2} dB, jump {:.3}", report.max_jump);
            out += if report.binary_threshold { " (binary threshold)\n" } else { "\n" };
        }
        None => out += "no step: accuracy never rises between bins\n",
    }
    out
}
