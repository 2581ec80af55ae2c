//! Rendering of the relevance-assessment prompt and parsing of graded
//! replies.
//!
//! The default template ships as a versioned text asset and is
//! substituted verbatim: no truncation, no escaping, single-pass
//! placeholder replacement. Length limits are the LLM client's concern,
//! which keeps this module deterministic.

use crate::trec::Grade;

/// The assessment prompt template shipped with the toolkit.
pub const DEFAULT_TEMPLATE: &str = include_str!("../assets/prompt_template.txt");

const QUERY_PLACEHOLDER: &str = "{query}";
const PASSAGE_PLACEHOLDER: &str = "{passage}";
const SCORE_MARKER: &str = "##final score:";

#[derive(Debug, thiserror::Error)]
pub enum PromptError {
    #[error("query is empty")]
    EmptyQuery,
    #[error("passage is empty")]
    EmptyPassage,
    #[error("template must contain {placeholder} exactly once")]
    BadPlaceholder { placeholder: &'static str },
    #[error("template must contain the literal score instruction {SCORE_MARKER:?}")]
    MissingScoreInstruction,
    #[error("template must contain a line starting with {prefix:?}")]
    MissingLine { prefix: &'static str },
    #[error("no {SCORE_MARKER:?} followed by an integer in response: {response:?}")]
    NoScoreMarker { response: String },
    #[error("score {raw:?} in response is outside the 0-3 scale")]
    ScoreOutOfRange { raw: String },
}

/// A rendered prompt, ready to send to the model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptText(String);

impl PromptText {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

/// The final grade extracted from a model reply, with the matched
/// fragment and its character offset for auditability.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedJudgment {
    pub grade: Grade,
    pub raw_match: String,
    pub match_position: usize,
}

/// A validated prompt template with one `{query}` and one `{passage}`
/// placeholder.
#[derive(Debug, Clone)]
pub struct PromptTemplate {
    // Template text split around the two placeholders, in order.
    segments: [String; 3],
    query_first: bool,
}

impl PromptTemplate {
    /// The template shipped with the toolkit.
    pub fn standard() -> Self {
        Self::from_text(DEFAULT_TEMPLATE).expect("bundled template is valid")
    }

    /// Validates a custom template with the same placeholder contract as
    /// the bundled one.
    pub fn from_text(text: &str) -> Result<Self, PromptError> {
        let query_pos = find_single(text, QUERY_PLACEHOLDER)?;
        let passage_pos = find_single(text, PASSAGE_PLACEHOLDER)?;
        if !text.contains(SCORE_MARKER) {
            return Err(PromptError::MissingScoreInstruction);
        }
        for prefix in ["Query:", "Passage:"] {
            if !text.lines().any(|l| l.starts_with(prefix)) {
                return Err(PromptError::MissingLine { prefix });
            }
        }
        let query_first = query_pos < passage_pos;
        let (first_pos, first_len, second_pos, second_len) = if query_first {
            (
                query_pos,
                QUERY_PLACEHOLDER.len(),
                passage_pos,
                PASSAGE_PLACEHOLDER.len(),
            )
        } else {
            (
                passage_pos,
                PASSAGE_PLACEHOLDER.len(),
                query_pos,
                QUERY_PLACEHOLDER.len(),
            )
        };
        Ok(Self {
            segments: [
                text[..first_pos].to_string(),
                text[first_pos + first_len..second_pos].to_string(),
                text[second_pos + second_len..].to_string(),
            ],
            query_first,
        })
    }

    /// Substitutes the query and passage into the template. The values are
    /// inserted verbatim in a single pass, so placeholder-looking text
    /// inside them is never re-substituted.
    pub fn render(&self, query: &str, passage: &str) -> Result<PromptText, PromptError> {
        if query.trim().is_empty() {
            return Err(PromptError::EmptyQuery);
        }
        if passage.trim().is_empty() {
            return Err(PromptError::EmptyPassage);
        }
        let (first, second) = if self.query_first {
            (query, passage)
        } else {
            (passage, query)
        };
        let mut out = String::with_capacity(
            self.segments.iter().map(String::len).sum::<usize>() + first.len() + second.len(),
        );
        out.push_str(&self.segments[0]);
        out.push_str(first);
        out.push_str(&self.segments[1]);
        out.push_str(second);
        out.push_str(&self.segments[2]);
        Ok(PromptText(out))
    }
}

fn find_single(text: &str, placeholder: &'static str) -> Result<usize, PromptError> {
    let mut positions = text.match_indices(placeholder);
    let first = positions
        .next()
        .ok_or(PromptError::BadPlaceholder { placeholder })?;
    if positions.next().is_some() {
        return Err(PromptError::BadPlaceholder { placeholder });
    }
    Ok(first.0)
}

/// Renders the bundled template. See [`PromptTemplate::render`].
pub fn render_prompt(query: &str, passage: &str) -> Result<PromptText, PromptError> {
    PromptTemplate::standard().render(query, passage)
}

/// Extracts the final grade from a model reply.
///
/// Scans for the last case-insensitive `##final score:` that is followed
/// by optional whitespace and an integer. Models prompted for M, T, and O
/// scores sometimes emit several score fragments; the last one is the
/// final decision. An integer outside 0-3 is an error rather than a
/// reason to fall back to an earlier fragment.
pub fn parse_judgment(response: &str) -> Result<ParsedJudgment, PromptError> {
    let bytes = response.as_bytes();
    let marker = SCORE_MARKER.as_bytes();
    if bytes.len() >= marker.len() {
        for start in (0..=bytes.len() - marker.len()).rev() {
            if !bytes[start..start + marker.len()].eq_ignore_ascii_case(marker) {
                continue;
            }
            let after = &response[start + marker.len()..];
            let Some((raw_number, number_len)) = leading_integer(after) else {
                continue;
            };
            let match_end = start + marker.len() + number_len;
            let raw_match = response[start..match_end].to_string();
            let value: i64 = raw_number
                .parse()
                .map_err(|_| PromptError::ScoreOutOfRange {
                    raw: raw_number.clone(),
                })?;
            let grade = Grade::new(value).map_err(|_| PromptError::ScoreOutOfRange {
                raw: raw_number.clone(),
            })?;
            return Ok(ParsedJudgment {
                grade,
                raw_match,
                match_position: response[..start].chars().count(),
            });
        }
    }
    Err(PromptError::NoScoreMarker {
        response: response.to_string(),
    })
}

/// The integer (with optional sign) after leading whitespace, if any,
/// together with the number of bytes consumed from `text`.
fn leading_integer(text: &str) -> Option<(String, usize)> {
    let trimmed = text.trim_start();
    let ws_len = text.len() - trimmed.len();
    let mut digits_end = 0;
    let bytes = trimmed.as_bytes();
    if digits_end < bytes.len() && (bytes[digits_end] == b'-' || bytes[digits_end] == b'+') {
        digits_end += 1;
    }
    let digits_start = digits_end;
    while digits_end < bytes.len() && bytes[digits_end].is_ascii_digit() {
        digits_end += 1;
    }
    if digits_end == digits_start {
        return None;
    }
    Some((trimmed[..digits_end].to_string(), ws_len + digits_end))
}
