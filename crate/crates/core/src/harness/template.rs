//! Prompt templates for the three evaluation styles plus a raw passthrough.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::dataset::PromptRecord;
use super::tokenizer::CharTokenizer;
use crate::error::{Error, Result};
use crate::prompt::MultimodalPrompt;
use crate::token::TokenId;

pub const SYSTEM_PROMPT: &str = "A chat between a curious user and an artificial intelligence assistant. \
The assistant gives helpful, detailed, and polite answers to the user's questions.";

pub const CAPTION_REQUEST: &str = "Provide a detailed description of the given image";

pub const IMAGE_MARKER: &str = "<image>";

pub const SQA_ANSWER_CUE: &str = "Answer: The answer is";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TemplateId {
    #[serde(rename = "raw")]
    Raw,
    /// Multi-turn visual chat.
    #[serde(rename = "llava-eval")]
    LlavaEval,
    /// Fixed captioning request.
    #[serde(rename = "coco")]
    Coco,
    /// Chain-of-thought multiple choice with one in-context example.
    #[serde(rename = "scienceqa")]
    ScienceQa,
}

impl TemplateId {
    pub fn as_str(self) -> &'static str {
        match self {
            TemplateId::Raw => "raw",
            TemplateId::LlavaEval => "llava-eval",
            TemplateId::Coco => "coco",
            TemplateId::ScienceQa => "scienceqa",
        }
    }

    fn allowed_fields(self) -> &'static [&'static str] {
        match self {
            TemplateId::Raw => &["prompt_text", "tokens"],
            TemplateId::LlavaEval => &["question", "history"],
            TemplateId::Coco => &[],
            TemplateId::ScienceQa => &["question", "options", "context", "example"],
        }
    }
}

impl std::str::FromStr for TemplateId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(TemplateId::Raw),
            "llava-eval" => Ok(TemplateId::LlavaEval),
            "coco" => Ok(TemplateId::Coco),
            "scienceqa" => Ok(TemplateId::ScienceQa),
            other => Err(Error::UnknownTemplate(other.to_string())),
        }
    }
}

/// A templated prompt.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rendered {
    pub text: Vec<TokenId>,
    /// Token index where the template places the image, if it has a marker.
    pub image_marker: Option<usize>,
}

fn missing(t: TemplateId, field: &str) -> Error {
    Error::MissingField { template: t.as_str().to_string(), field: field.to_string() }
}

fn require<'a>(t: TemplateId, field: &str, v: &'a Option<String>) -> Result<&'a str> {
    match v.as_deref() {
        Some(s) if !s.trim().is_empty() => Ok(s),
        _ => Err(missing(t, field)),
    }
}

fn sqa_block(out: &mut String, question: &str, options: &[String], context: &str) {
    let _ = writeln!(out, "Question: question : {question}");
    out.push_str("Options:");
    for (i, o) in options.iter().enumerate() {
        let _ = write!(out, " ({i}) option : {o}");
    }
    out.push('\n');
    let _ = writeln!(out, "Context: context : {context}");
}

fn render_string(t: TemplateId, r: &PromptRecord) -> Result<String> {
    let mut s = String::new();
    match t {
        TemplateId::Raw => unreachable!("raw records are not templated"),
        TemplateId::Coco => {
            let _ = write!(s, "{SYSTEM_PROMPT}  USER: {IMAGE_MARKER}\n{CAPTION_REQUEST}  ASSISTANT:");
        }
        TemplateId::LlavaEval => {
            let question = require(t, "question", &r.question)?;
            let _ = writeln!(s, "{SYSTEM_PROMPT}  USER: {IMAGE_MARKER}");
            for turn in &r.history {
                let _ = write!(s, "{}  ASSISTANT: {}  USER: ", turn.question, turn.response);
            }
            let _ = write!(s, "{question}  ASSISTANT:");
        }
        TemplateId::ScienceQa => {
            let question = require(t, "question", &r.question)?;
            let options = r.options.as_deref().filter(|o| !o.is_empty()).ok_or_else(|| missing(t, "options"))?;
            let context = r.context.as_deref().ok_or_else(|| missing(t, "context"))?;
            if let Some(ex) = &r.example {
                sqa_block(&mut s, &ex.question, &ex.options, &ex.context);
                let _ = write!(
                    s,
                    "{SQA_ANSWER_CUE} {}. BECAUSE: lecture {} explanation : {}\n\n",
                    ex.answer, ex.lecture, ex.explanation
                );
            }
            let _ = writeln!(s, "{IMAGE_MARKER}");
            sqa_block(&mut s, question, options, context);
            s.push_str(SQA_ANSWER_CUE);
        }
    }
    Ok(s)
}

fn check_fields(t: TemplateId, r: &PromptRecord) -> Result<()> {
    let allowed = t.allowed_fields();
    if let Some(extra) = r.present_fields().into_iter().find(|f| !allowed.contains(f)) {
        return Err(Error::InvalidRecord {
            id: r.id.clone(),
            reason: format!("field `{extra}` is not used by template `{}`", t.as_str()),
        });
    }
    if t == TemplateId::Raw && r.prompt_text.is_some() == r.tokens.is_some() {
        return Err(Error::InvalidRecord {
            id: r.id.clone(),
            reason: "exactly one of `prompt_text` and `tokens` is required".into(),
        });
    }
    Ok(())
}

/// Renders `record` to text tokens. The `<image>` marker is removed from the
/// text and its position reported; image tokens themselves are supplied
/// separately through the record's `image_ctx`.
pub fn render_template(t: TemplateId, record: &PromptRecord, tokenizer: &CharTokenizer) -> Result<Rendered> {
    check_fields(t, record)?;
    if t == TemplateId::Raw {
        let text = match (&record.prompt_text, &record.tokens) {
            (Some(s), None) => tokenizer.encode(s)?,
            (None, Some(ids)) => ids.iter().copied().map(TokenId).collect(),
            _ => unreachable!("checked above"),
        };
        return Ok(Rendered { text, image_marker: None });
    }
    let s = render_string(t, record)?;
    let (before, after) = s.split_once(IMAGE_MARKER).expect("every non-raw template has a marker");
    let mut text = tokenizer.encode(before)?;
    let marker = text.len();
    text.extend(tokenizer.encode(after)?);
    Ok(Rendered { text, image_marker: Some(marker) })
}

/// Renders `record` and pairs it with its image context.
pub fn build_prompt(t: TemplateId, record: &PromptRecord, tokenizer: &CharTokenizer) -> Result<MultimodalPrompt> {
    let rendered = render_template(t, record, tokenizer)?;
    let image_ctx = record.image_ctx.iter().copied().map(TokenId).collect();
    let prompt = MultimodalPrompt::new(image_ctx, rendered.text)
        .map_err(|e| Error::InvalidRecord { id: record.id.clone(), reason: e.to_string() })?;
    prompt
        .validate(&tokenizer.vocab())
        .map_err(|e| Error::InvalidRecord { id: record.id.clone(), reason: e.to_string() })?;
    Ok(prompt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::dataset::{ScienceQaExample, Turn};

    fn record(id: &str) -> PromptRecord {
        PromptRecord { id: id.into(), ..Default::default() }
    }

    fn text(t: TemplateId, r: &PromptRecord) -> String {
        let tok = CharTokenizer::default();
        tok.decode(&render_template(t, r, &tok).unwrap().text)
    }

    #[test]
    fn chat_requires_question() {
        let tok = CharTokenizer::default();
        let mut r = record("a");
        r.question = Some("  ".into());
        assert!(matches!(
            render_template(TemplateId::LlavaEval, &r, &tok),
            Err(Error::MissingField { field, .. }) if field == "question"
        ));
    }

    #[test]
    fn chat_layout() {
        let mut r = record("a");
        r.question = Some("What is on the table?".into());
        let tok = CharTokenizer::default();
        let out = render_template(TemplateId::LlavaEval, &r, &tok).unwrap();
        let s = tok.decode(&out.text);
        assert!(s.starts_with(SYSTEM_PROMPT));
        assert!(s.ends_with("\nWhat is on the table?  ASSISTANT:"));
        assert!(!s.contains(IMAGE_MARKER));
        let marker = out.image_marker.unwrap();
        assert_eq!(tok.decode(&out.text[..marker]), format!("{SYSTEM_PROMPT}  USER: "));
    }

    #[test]
    fn chat_history_turns() {
        let mut r = record("a");
        r.history = vec![Turn { question: "Q1?".into(), response: "R1.".into() }];
        r.question = Some("Q2?".into());
        assert!(text(TemplateId::LlavaEval, &r).ends_with("USER: \nQ1?  ASSISTANT: R1.  USER: Q2?  ASSISTANT:"));
    }

    #[test]
    fn coco_layout() {
        let s = text(TemplateId::Coco, &record("c"));
        assert!(s.ends_with("USER: \nProvide a detailed description of the given image  ASSISTANT:"));
    }

    #[test]
    fn scienceqa_layout() {
        let mut r = record("s");
        r.question = Some("Which is a mammal?".into());
        r.options = Some(vec!["frog".into(), "whale".into()]);
        r.context = Some("Look at the picture.".into());
        r.example = Some(ScienceQaExample {
            question: "Which is hot?".into(),
            options: vec!["ice".into(), "fire".into()],
            context: "".into(),
            answer: "1".into(),
            lecture: "Heat is energy.".into(),
            explanation: "Fire is hot.".into(),
        });
        let s = text(TemplateId::ScienceQa, &r);
        assert!(s.ends_with("Answer: The answer is"));
        assert!(s.contains("Options: (0) option : ice (1) option : fire\n"));
        assert!(s.contains("Answer: The answer is 1. BECAUSE: lecture Heat is energy. explanation : Fire is hot.\n\n"));
        assert!(s.contains("\nQuestion: question : Which is a mammal?\nOptions: (0) option : frog (1) option : whale\nContext: context : Look at the picture.\n"));
    }

    #[test]
    fn scienceqa_missing_options() {
        let mut r = record("s");
        r.question = Some("Q".into());
        r.context = Some("".into());
        let tok = CharTokenizer::default();
        assert!(matches!(
            render_template(TemplateId::ScienceQa, &r, &tok),
            Err(Error::MissingField { field, .. }) if field == "options"
        ));
    }

    #[test]
    fn raw_requires_exactly_one_source() {
        let tok = CharTokenizer::default();
        let r = record("r");
        assert!(matches!(render_template(TemplateId::Raw, &r, &tok), Err(Error::InvalidRecord { .. })));
        let mut both = record("r");
        both.prompt_text = Some("ab".into());
        both.tokens = Some(vec![1]);
        assert!(matches!(render_template(TemplateId::Raw, &both, &tok), Err(Error::InvalidRecord { .. })));
        let mut ids = record("r");
        ids.tokens = Some(vec![3, 4]);
        assert_eq!(render_template(TemplateId::Raw, &ids, &tok).unwrap().text, vec![TokenId(3), TokenId(4)]);
    }

    #[test]
    fn unused_fields_rejected() {
        let tok = CharTokenizer::default();
        let mut r = record("c");
        r.question = Some("why".into());
        assert!(matches!(render_template(TemplateId::Coco, &r, &tok), Err(Error::InvalidRecord { .. })));
    }

    #[test]
    fn deterministic() {
        let mut r = record("a");
        r.question = Some("Describe it.".into());
        assert_eq!(text(TemplateId::LlavaEval, &r), text(TemplateId::LlavaEval, &r));
    }

    #[test]
    fn build_prompt_checks_image_tokens() {
        let tok = CharTokenizer::default();
        let mut r = record("a");
        r.prompt_text = Some("hi".into());
        r.image_ctx = vec![5, 6];
        let p = build_prompt(TemplateId::Raw, &r, &tok).unwrap();
        assert_eq!(p.image_ctx(), &[TokenId(5), TokenId(6)]);
        r.image_ctx = vec![500];
        assert!(build_prompt(TemplateId::Raw, &r, &tok).is_err());
    }
}
