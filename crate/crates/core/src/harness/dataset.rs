use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::tokenizer::CharTokenizer;
use crate::error::{Error, Result};
use crate::token::TokenId;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PromptRecord {
    pub id: String,
    /// Pre-tokenized image context; visible to the target only.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub image_ctx: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokens: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub question: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub options: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<String>,
    /// Earlier chat turns, oldest first.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub history: Vec<Turn>,
    /// In-context example for the multiple-choice template.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub example: Option<ScienceQaExample>,
}

impl PromptRecord {
    pub(crate) fn present_fields(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.prompt_text.is_some() {
            out.push("prompt_text");
        }
        if self.tokens.is_some() {
            out.push("tokens");
        }
        if self.question.is_some() {
            out.push("question");
        }
        if self.options.is_some() {
            out.push("options");
        }
        if self.context.is_some() {
            out.push("context");
        }
        if !self.history.is_empty() {
            out.push("history");
        }
        if self.example.is_some() {
            out.push("example");
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Turn {
    pub question: String,
    pub response: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScienceQaExample {
    pub question: String,
    pub options: Vec<String>,
    pub context: String,
    pub answer: String,
    pub lecture: String,
    pub explanation: String,
}

/// Parses a JSON-lines dataset. Blank lines are skipped; ids must be unique.
pub fn parse_dataset(text: &str) -> Result<Vec<PromptRecord>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: PromptRecord =
            serde_json::from_str(line).map_err(|e| Error::json(format!("dataset line {}", lineno + 1), e))?;
        if !seen.insert(rec.id.clone()) {
            return Err(Error::InvalidRecord { id: rec.id, reason: "duplicate id".into() });
        }
        out.push(rec);
    }
    if out.is_empty() {
        return Err(Error::Empty);
    }
    Ok(out)
}

pub fn load_dataset(path: &Path) -> Result<Vec<PromptRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(&text)
}

/// One training sequence per non-empty line, each terminated by EOS.
pub fn tokenize_corpus(text: &str, tokenizer: &CharTokenizer) -> Result<Vec<Vec<TokenId>>> {
    let mut out = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let mut seq = tokenizer.encode(line)?;
        seq.push(tokenizer.eos());
        out.push(seq);
    }
    if out.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(out)
}

pub fn load_corpus(path: &Path, tokenizer: &CharTokenizer) -> Result<Vec<Vec<TokenId>>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    tokenize_corpus(&text, tokenizer)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_jsonl() {
        let text = r#"{"id": "a", "prompt_text": "The dog"}

{"id": "b", "image_ctx": [1, 2], "question": "What?", "history": [{"question": "Hi", "response": "Hello"}]}
"#;
        let recs = parse_dataset(text).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[1].image_ctx, vec![1, 2]);
        assert_eq!(recs[1].present_fields(), vec!["question", "history"]);
    }

    #[test]
    fn rejects_duplicates_unknown_fields_and_empty() {
        assert!(matches!(
            parse_dataset("{\"id\":\"a\",\"prompt_text\":\"x\"}\n{\"id\":\"a\",\"prompt_text\":\"y\"}"),
            Err(Error::InvalidRecord { .. })
        ));
        assert!(matches!(parse_dataset("{\"id\":\"a\",\"qestion\":\"x\"}"), Err(Error::Json { .. })));
        assert!(matches!(parse_dataset("\n\n"), Err(Error::Empty)));
    }

    #[test]
    fn corpus_lines_end_with_eos() {
        let tok = CharTokenizer::default();
        let seqs = tokenize_corpus("ab\n\ncd\n", &tok).unwrap();
        assert_eq!(seqs.len(), 2);
        assert_eq!(*seqs[0].last().unwrap(), tok.eos());
        assert!(matches!(tokenize_corpus("  \n", &tok), Err(Error::EmptyCorpus)));
    }
}
