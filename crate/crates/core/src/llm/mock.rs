//! Deterministic offline backend.
//!
//! Grades by query-term overlap with the passage, so tests and dry runs
//! get stable, explainable labels without a network or an API bill.

use std::collections::BTreeSet;
use std::time::Duration;

use super::{
    CompletionResult, LlmError, SamplingParams, Transport, TransportError, TransportReply,
};
use crate::prompt::PromptText;
use crate::trec::Grade;

pub(crate) struct MockTransport {
    #[allow(dead_code)]
    seed: u64,
}

impl MockTransport {
    /// The seed is reserved for noise-injection experiments; it does not
    /// perturb grading.
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }
}

impl Transport for MockTransport {
    fn send(
        &self,
        prompt: &str,
        _params: &SamplingParams,
    ) -> Result<TransportReply, TransportError> {
        let text = mock_response(prompt).map_err(|e| TransportError::Malformed(e.to_string()))?;
        Ok(TransportReply {
            prompt_tokens: prompt.split_whitespace().count() as u64,
            completion_tokens: text.split_whitespace().count() as u64,
            text,
        })
    }
}

/// Pure function of (prompt, seed): extracts the query and passage from
/// the rendered prompt and answers `##final score: g` with the
/// term-overlap grade.
pub fn mock_complete(prompt: &PromptText, seed: u64) -> Result<CompletionResult, LlmError> {
    let _ = seed; // reserved
    let text = mock_response(prompt.as_str())?;
    Ok(CompletionResult {
        prompt_tokens: prompt.as_str().split_whitespace().count() as u64,
        completion_tokens: text.split_whitespace().count() as u64,
        text,
        latency: Duration::ZERO,
        from_cache: false,
        attempt_count: 1,
    })
}

fn mock_response(prompt: &str) -> Result<String, LlmError> {
    let (query, passage) = extract_query_passage(prompt)?;
    let grade = heuristic_grade(&query, &passage);
    Ok(format!("##final score: {grade}"))
}

/// Grades by the fraction of distinct query terms (lowercased,
/// punctuation-stripped) present in the passage: all -> 3, at least two
/// thirds -> 2, at least one third or at least one term -> 1, none -> 0.
pub fn heuristic_grade(query: &str, passage: &str) -> Grade {
    let query_terms = tokenize(query);
    let passage_terms = tokenize(passage);
    if query_terms.is_empty() {
        return Grade::new(0).expect("0 is a grade");
    }
    let matched = query_terms
        .iter()
        .filter(|t| passage_terms.contains(*t))
        .count();
    let fraction = matched as f64 / query_terms.len() as f64;
    let value = if matched == query_terms.len() {
        3
    } else if fraction >= 2.0 / 3.0 {
        2
    } else if fraction >= 1.0 / 3.0 || matched >= 1 {
        1
    } else {
        0
    };
    Grade::new(value).expect("heuristic values are grades")
}

fn tokenize(text: &str) -> BTreeSet<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Pulls the query line and the passage block back out of a rendered
/// prompt. The passage runs from its marker to the step instructions (or
/// the end of the prompt), so multi-line passages survive.
fn extract_query_passage(prompt: &str) -> Result<(String, String), LlmError> {
    let query_start = prompt
        .find("Query: ")
        .ok_or_else(|| LlmError::MockPrompt("no \"Query: \" line".to_string()))?
        + "Query: ".len();
    let query_end = prompt[query_start..]
        .find('\n')
        .map(|i| query_start + i)
        .unwrap_or(prompt.len());
    let query = prompt[query_start..query_end].trim();

    let passage_start = prompt
        .find("Passage: ")
        .ok_or_else(|| LlmError::MockPrompt("no \"Passage: \" line".to_string()))?
        + "Passage: ".len();
    let passage_end = prompt[passage_start..]
        .find("\n\nSplit this problem into steps:")
        .map(|i| passage_start + i)
        .unwrap_or(prompt.len());
    let passage = prompt[passage_start..passage_end].trim();

    if query.is_empty() {
        return Err(LlmError::MockPrompt("empty query".to_string()));
    }
    if passage.is_empty() {
        return Err(LlmError::MockPrompt("empty passage".to_string()));
    }
    Ok((query.to_string(), passage.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompt::render_prompt;

    #[test]
    fn all_terms_present_grades_three() {
        let prompt = render_prompt("thai people", "thai people daily life").unwrap();
        let result = mock_complete(&prompt, 0).unwrap();
        assert_eq!(result.text, "##final score: 3");
    }

    #[test]
    fn no_terms_present_grades_zero() {
        let prompt = render_prompt("mechanical ventilation", "airway pressure mask").unwrap();
        let result = mock_complete(&prompt, 0).unwrap();
        assert_eq!(result.text, "##final score: 0");
    }

    #[test]
    fn one_of_three_terms_grades_one() {
        let prompt = render_prompt("a b c", "only a here").unwrap();
        let result = mock_complete(&prompt, 0).unwrap();
        assert_eq!(result.text, "##final score: 1");
    }

    #[test]
    fn two_of_three_terms_grades_two() {
        assert_eq!(heuristic_grade("a b c", "a and b").value(), 2);
    }

    #[test]
    fn matching_ignores_case_and_punctuation() {
        assert_eq!(heuristic_grade("Thai, People!", "THAI (people)").value(), 3);
    }

    #[test]
    fn query_without_content_terms_grades_zero() {
        assert_eq!(heuristic_grade("?!', -", "anything").value(), 0);
    }

    #[test]
    fn multi_line_passages_are_extracted_whole() {
        let prompt = render_prompt("red blue", "first line red\nsecond line blue").unwrap();
        let result = mock_complete(&prompt, 0).unwrap();
        assert_eq!(result.text, "##final score: 3");
    }

    #[test]
    fn pure_in_prompt_and_seed() {
        let prompt = render_prompt("q", "p").unwrap();
        let a = mock_complete(&prompt, 0).unwrap();
        let b = mock_complete(&prompt, 0).unwrap();
        let c = mock_complete(&prompt, 42).unwrap();
        assert_eq!(a.text, b.text);
        assert_eq!(a.text, c.text);
    }
}
