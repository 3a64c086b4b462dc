//! Automated response evaluation: per-attribute judge prompts, rating
//! parsing with range enforcement, aggregate report tables, and response
//! length statistics.

mod templates;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::providers::{CompletionParams, LlmClient};

/// The three judged attributes. Each item is judged once per attribute, in
/// separate calls, so that ratings cannot contaminate each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Attribute {
    Helpfulness,
    Relevance,
    Faithfulness,
}

impl Attribute {
    pub const ALL: [Attribute; 3] = [
        Attribute::Helpfulness,
        Attribute::Relevance,
        Attribute::Faithfulness,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Attribute::Helpfulness => "helpfulness",
            Attribute::Relevance => "relevance",
            Attribute::Faithfulness => "faithfulness",
        }
    }

    fn template(self) -> &'static str {
        match self {
            Attribute::Helpfulness => templates::HELPFULNESS,
            Attribute::Relevance => templates::RELEVANCE,
            Attribute::Faithfulness => templates::FAITHFULNESS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptMode {
    Zero,
    Few,
}

/// In-context examples for few-shot judging, editable as a data file:
/// `{"helpfulness": ["..."], "relevance": ["..."], "faithfulness": ["..."]}`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct JudgeExamples {
    #[serde(default)]
    pub helpfulness: Vec<String>,
    #[serde(default)]
    pub relevance: Vec<String>,
    #[serde(default)]
    pub faithfulness: Vec<String>,
}

impl JudgeExamples {
    pub fn for_attribute(&self, attribute: Attribute) -> &[String] {
        match attribute {
            Attribute::Helpfulness => &self.helpfulness,
            Attribute::Relevance => &self.relevance,
            Attribute::Faithfulness => &self.faithfulness,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("faithfulness judging requires supporting passages")]
    MissingPassages,
    #[error("could not parse a rating from the judge output: {0}")]
    ParseFailure(String),
}

/// Renders the judge prompt for one attribute. Passages are required for
/// (and only used by) faithfulness. Zero-shot mode drops the Examples
/// section; few-shot splices the configured examples into it.
pub fn build_judge_prompt(
    attribute: Attribute,
    mode: PromptMode,
    question: &str,
    response: &str,
    passages: Option<&str>,
    examples: &JudgeExamples,
) -> Result<String, EvalError> {
    if attribute == Attribute::Faithfulness && passages.is_none() {
        return Err(EvalError::MissingPassages);
    }
    let mut prompt = attribute.template().to_string();
    match mode {
        PromptMode::Zero => {
            prompt = prompt.replace("## Examples\n{in-context examples}\n", "");
        }
        PromptMode::Few => {
            let rendered = examples.for_attribute(attribute).join("\n\n");
            prompt = prompt.replace("{in-context examples}", &rendered);
        }
    }
    prompt = prompt.replace("{question}", question);
    prompt = prompt.replace("{response}", response);
    if let Some(p) = passages {
        prompt = prompt.replace("{passages}", p);
    }
    Ok(prompt)
}

/// A parsed judge verdict. `raw` preserves the model's rating as emitted;
/// `rating` is `raw` clamped into the 0–2 scale; `flagged` marks
/// out-of-range raw values, which are excluded from aggregates unless
/// clamping is explicitly enabled.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rating {
    pub attribute: Attribute,
    pub rating: i64,
    pub reason: String,
    pub flagged: bool,
    pub raw: i64,
}

/// Extracts the first parsable JSON object from the judge output and reads
/// its `rating` and `reason` keys. Surrounding prose is ignored.
pub fn parse_rating(output: &str, attribute: Attribute) -> Result<Rating, EvalError> {
    let value = first_json_object(output)
        .ok_or_else(|| EvalError::ParseFailure("no JSON object found".to_string()))?;
    let raw = match &value["rating"] {
        serde_json::Value::Number(n) => n
            .as_i64()
            .or_else(|| n.as_f64().filter(|f| f.fract() == 0.0).map(|f| f as i64))
            .ok_or_else(|| EvalError::ParseFailure("rating is not an integer".to_string()))?,
        _ => return Err(EvalError::ParseFailure("missing rating key".to_string())),
    };
    let reason = value["reason"]
        .as_str()
        .ok_or_else(|| EvalError::ParseFailure("missing reason key".to_string()))?
        .to_string();
    let flagged = !(0..=2).contains(&raw);
    Ok(Rating {
        attribute,
        rating: raw.clamp(0, 2),
        reason,
        flagged,
        raw,
    })
}

/// Scans for balanced `{...}` candidates (string-aware) and returns the
/// first one that parses as a JSON object.
fn first_json_object(text: &str) -> Option<serde_json::Value> {
    let bytes = text.as_bytes();
    let mut start = 0;
    while let Some(open) = text[start..].find('{').map(|p| p + start) {
        let mut depth = 0usize;
        let mut in_string = false;
        let mut escaped = false;
        let mut end = None;
        for (i, &b) in bytes.iter().enumerate().skip(open) {
            if in_string {
                if escaped {
                    escaped = false;
                } else if b == b'\\' {
                    escaped = true;
                } else if b == b'"' {
                    in_string = false;
                }
                continue;
            }
            match b {
                b'"' => in_string = true,
                b'{' => depth += 1,
                b'}' => {
                    depth -= 1;
                    if depth == 0 {
                        end = Some(i);
                        break;
                    }
                }
                _ => {}
            }
        }
        let e = end?;
        if let Ok(v) = serde_json::from_str::<serde_json::Value>(&text[open..=e]) {
            if v.is_object() {
                return Some(v);
            }
        }
        start = open + 1;
    }
    None
}

/// How out-of-range ratings contribute to aggregates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlaggedPolicy {
    /// Flagged ratings are excluded from every mean.
    #[default]
    Exclude,
    /// Flagged ratings contribute their value clamped into 0–2.
    Clamp,
}

/// One judged (item, attribute) row as written to the ratings file. Rows
/// with a `parse_error` carry no rating and never enter any mean.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JudgedRow {
    pub method: String,
    pub strategy: String,
    pub attribute: Attribute,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rating: Option<i64>,
    #[serde(default)]
    pub flagged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parse_error: Option<String>,
    /// Character count of the judged response.
    pub response_chars: u64,
}

/// One (method, strategy) row of the aggregate report. Means are rounded to
/// two decimals; the row average is the arithmetic mean of the attribute
/// means that are present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    pub strategy: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub helpfulness: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relevance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub faithfulness: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub average: Option<f64>,
    pub total: usize,
    pub flagged: usize,
    pub parse_failed: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<ReportRow>,
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Aggregates judged rows into per-(method, strategy) attribute means.
/// Flagged and parse-failed rows never contribute to a mean under the
/// default policy; the result is independent of input order.
pub fn aggregate(rows: &[JudgedRow], policy: FlaggedPolicy) -> EvalReport {
    #[derive(Default)]
    struct Cell {
        sum: f64,
        n: usize,
    }
    #[derive(Default)]
    struct Group {
        cells: BTreeMap<Attribute, Cell>,
        total: usize,
        flagged: usize,
        parse_failed: usize,
    }

    let mut groups: BTreeMap<(String, String), Group> = BTreeMap::new();
    for row in rows {
        let group = groups
            .entry((row.method.clone(), row.strategy.clone()))
            .or_default();
        group.total += 1;
        if row.parse_error.is_some() {
            group.parse_failed += 1;
            continue;
        }
        if row.flagged {
            group.flagged += 1;
            if policy == FlaggedPolicy::Exclude {
                continue;
            }
        }
        if let Some(rating) = row.rating {
            let cell = group.cells.entry(row.attribute).or_default();
            cell.sum += rating as f64;
            cell.n += 1;
        }
    }

    let rows = groups
        .into_iter()
        .map(|((method, strategy), group)| {
            let mean = |attr: Attribute| {
                group
                    .cells
                    .get(&attr)
                    .filter(|c| c.n > 0)
                    .map(|c| round2(c.sum / c.n as f64))
            };
            let helpfulness = mean(Attribute::Helpfulness);
            let relevance = mean(Attribute::Relevance);
            let faithfulness = mean(Attribute::Faithfulness);
            let present: Vec<f64> = [helpfulness, relevance, faithfulness]
                .into_iter()
                .flatten()
                .collect();
            let average = if present.is_empty() {
                None
            } else {
                Some(round2(present.iter().sum::<f64>() / present.len() as f64))
            };
            ReportRow {
                method,
                strategy,
                helpfulness,
                relevance,
                faithfulness,
                average,
                total: group.total,
                flagged: group.flagged,
                parse_failed: group.parse_failed,
            }
        })
        .collect();
    EvalReport { rows }
}

impl EvalReport {
    /// Aligned text rendering of the report table.
    pub fn to_table(&self) -> String {
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:.2}")).unwrap_or_else(|| "-".into());
        let mut out = String::new();
        out.push_str(&format!(
            "{:<16} {:<10} {:>8} {:>9} {:>9} {:>7} {:>6} {:>8} {:>7}\n",
            "method", "strategy", "helpful", "relevant", "faithful", "avg", "n", "flagged", "failed"
        ));
        for r in &self.rows {
            out.push_str(&format!(
                "{:<16} {:<10} {:>8} {:>9} {:>9} {:>7} {:>6} {:>8} {:>7}\n",
                r.method,
                r.strategy,
                fmt(r.helpfulness),
                fmt(r.relevance),
                fmt(r.faithfulness),
                fmt(r.average),
                r.total,
                r.flagged,
                r.parse_failed
            ));
        }
        out
    }
}

/// Mean and median response length for one (method, attribute, rating) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthCell {
    pub method: String,
    pub attribute: Attribute,
    pub rating: i64,
    pub mean: f64,
    pub median: f64,
    pub count: usize,
}

/// Response-length statistics (in characters) per (method, attribute,
/// rating), over unflagged parsed rows.
pub fn length_stats(rows: &[JudgedRow]) -> Vec<LengthCell> {
    let mut cells: BTreeMap<(String, Attribute, i64), Vec<u64>> = BTreeMap::new();
    for row in rows {
        if row.parse_error.is_some() || row.flagged {
            continue;
        }
        if let Some(rating) = row.rating {
            cells
                .entry((row.method.clone(), row.attribute, rating))
                .or_default()
                .push(row.response_chars);
        }
    }
    cells
        .into_iter()
        .map(|((method, attribute, rating), mut lengths)| {
            lengths.sort_unstable();
            let n = lengths.len();
            let mean = lengths.iter().sum::<u64>() as f64 / n as f64;
            let median = if n % 2 == 1 {
                lengths[n / 2] as f64
            } else {
                (lengths[n / 2 - 1] as f64 + lengths[n / 2] as f64) / 2.0
            };
            LengthCell {
                method,
                attribute,
                rating,
                mean,
                median,
                count: n,
            }
        })
        .collect()
}

/// An answer item to be judged: the question as asked, the generated
/// response, and the passage block that grounded it.
#[derive(Debug, Clone)]
pub struct JudgeItem {
    pub method: String,
    pub strategy: String,
    pub question: String,
    pub response: String,
    pub passages: String,
}

/// Judges items attribute-by-attribute: one call per (item, attribute), so
/// judging every attribute costs exactly three calls per item. Parse
/// failures become rows with `parse_error` set.
pub fn judge_items(
    items: &[JudgeItem],
    attributes: &[Attribute],
    llm: &dyn LlmClient,
    params: &CompletionParams,
    mode: PromptMode,
    examples: &JudgeExamples,
) -> Vec<JudgedRow> {
    let mut rows = Vec::with_capacity(items.len() * attributes.len());
    for item in items {
        let response_chars = item.response.chars().count() as u64;
        for &attribute in attributes {
            let passages = (attribute == Attribute::Faithfulness).then_some(item.passages.as_str());
            let prompt = build_judge_prompt(
                attribute,
                mode,
                &item.question,
                &item.response,
                passages,
                examples,
            )
            .expect("passages supplied for faithfulness");
            let mut row = JudgedRow {
                method: item.method.clone(),
                strategy: item.strategy.clone(),
                attribute,
                raw: None,
                rating: None,
                flagged: false,
                reason: None,
                parse_error: None,
                response_chars,
            };
            match llm.complete(&prompt, params) {
                Ok(output) => match parse_rating(&output, attribute) {
                    Ok(rating) => {
                        row.raw = Some(rating.raw);
                        row.rating = Some(rating.rating);
                        row.flagged = rating.flagged;
                        row.reason = Some(rating.reason);
                    }
                    Err(e) => row.parse_error = Some(e.to_string()),
                },
                Err(e) => row.parse_error = Some(e.to_string()),
            }
            rows.push(row);
        }
    }
    rows
}
