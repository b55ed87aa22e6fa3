//! Experiment runner: character tokenizer, prompt templates, datasets,
//! model training, report generation and qualitative traces.

mod config;
mod dataset;
mod experiment;
mod template;
mod tokenizer;
mod train;

pub use config::{ExperimentConfig, Timing};
pub use dataset::{load_corpus, load_dataset, parse_dataset, tokenize_corpus, PromptRecord, ScienceQaExample, Turn};
pub use experiment::{
    annotate, run_experiment, ConfigEcho, Experiment, GammaSummary, QualitativeTrace, ReportRow, RunReport, CSV_FILE,
    CSV_HEADER, JSON_FILE,
};
pub use template::{build_prompt, render_template, Rendered, TemplateId, SQA_ANSWER_CUE, SYSTEM_PROMPT};
pub use tokenizer::{CharTokenizer, EOS_CHAR};
pub use train::{train_models, TrainOptions, TrainedModels, DRAFT_FILE, TARGET_FILE};
