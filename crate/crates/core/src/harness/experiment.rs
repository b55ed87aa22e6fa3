use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Timing};
use super::dataset::{load_dataset, PromptRecord};
use super::template::{build_prompt, TemplateId};
use super::tokenizer::CharTokenizer;
use crate::engine::{autoregressive_generate, spd_generate, BlockTrace, DecodeMode, SpdConfig, TokenOrigin};
use crate::error::{Error, Result};
use crate::metrics::{aggregate, block_efficiency, AggregateMetrics, CostModel, PromptMetrics};
use crate::models::{MultimodalTargetLm, NgramLm, PromptConditioned, TextOnlyDraftLm};
use crate::prompt::MultimodalPrompt;
use crate::rng::{RngState, SpdStreams, Stream};
use crate::token::TokenId;

pub const CSV_FILE: &str = "report.csv";
pub const JSON_FILE: &str = "aggregate.json";
pub const CSV_HEADER: [&str; 9] =
    ["prompt_id", "gamma", "mode", "tokens", "target_calls", "tau", "mbsu", "mbsu_paper_formula", "wall_time_s"];

/// Configuration as echoed into the aggregate report. Paths are reduced to
/// file names so reports do not depend on where the run happened.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub target_model: String,
    pub draft_model: String,
    pub draft_uses_image: bool,
    pub dataset: String,
    pub template: TemplateId,
    pub gammas: Vec<usize>,
    pub mode: DecodeMode,
    pub max_new_tokens: usize,
    pub stop_on_eos: bool,
    pub seed: u64,
    pub cost_c: f64,
    pub timing: Timing,
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

impl From<&ExperimentConfig> for ConfigEcho {
    fn from(c: &ExperimentConfig) -> Self {
        ConfigEcho {
            target_model: file_name(&c.target_model),
            draft_model: file_name(&c.draft_model),
            draft_uses_image: c.draft_uses_image,
            dataset: file_name(&c.dataset),
            template: c.template,
            gammas: c.gammas.clone(),
            mode: c.mode,
            max_new_tokens: c.max_new_tokens,
            stop_on_eos: c.stop_on_eos,
            seed: c.seed,
            cost_c: c.cost_c,
            timing: c.timing,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaSummary {
    #[serde(flatten)]
    pub metrics: AggregateMetrics,
    /// Prompts whose speculative output equals the baseline output.
    pub identical_to_baseline: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub metrics: PromptMetrics,
    pub mode: DecodeMode,
    pub output: Vec<TokenId>,
    pub baseline_output: Vec<TokenId>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub config: ConfigEcho,
    /// Sorted by `(prompt_id, gamma)`.
    pub rows: Vec<ReportRow>,
    pub per_gamma: Vec<GammaSummary>,
}

#[derive(Serialize)]
struct AggregateFile<'a> {
    config: &'a ConfigEcho,
    per_gamma: &'a [GammaSummary],
}

impl RunReport {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER)?;
        for r in &self.rows {
            let m = &r.metrics;
            w.write_record([
                m.prompt_id.clone(),
                m.gamma.to_string(),
                r.mode.as_str().to_string(),
                m.tokens.to_string(),
                m.target_calls.to_string(),
                format!("{:.6}", m.tau),
                format!("{:.6}", m.mbsu),
                format!("{:.6}", m.mbsu_paper_formula),
                format!("{:.6}", m.wall_time_s),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Csv(e.into_error().into()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_json(&self) -> Result<String> {
        let file = AggregateFile { config: &self.config, per_gamma: &self.per_gamma };
        let mut s = serde_json::to_string_pretty(&file).map_err(|e| Error::json("serializing report", e))?;
        s.push('\n');
        Ok(s)
    }

    /// Writes `report.csv` and `aggregate.json`. Nothing is left behind on failure.
    pub fn write(&self, out_dir: &Path) -> Result<(PathBuf, PathBuf)> {
        let csv = self.to_csv()?;
        let json = self.to_json()?;
        fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
        let targets = [(out_dir.join(CSV_FILE), csv), (out_dir.join(JSON_FILE), json)];
        let mut written: Vec<PathBuf> = Vec::new();
        let result = targets.iter().try_for_each(|(path, body)| {
            let tmp = path.with_extension("partial");
            written.push(tmp.clone());
            fs::write(&tmp, body).map_err(|e| Error::io(&tmp, e))
        });
        if let Err(e) = result {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            return Err(e);
        }
        for (path, _) in &targets {
            let tmp = path.with_extension("partial");
            if let Err(e) = fs::rename(&tmp, path) {
                for (p, _) in &targets {
                    let _ = fs::remove_file(p.with_extension("partial"));
                    let _ = fs::remove_file(p);
                }
                return Err(Error::io(path, e));
            }
        }
        Ok((targets[0].0.clone(), targets[1].0.clone()))
    }
}

/// Loaded models, dataset and rendered prompts, ready to run.
pub struct Experiment {
    cfg: ExperimentConfig,
    cost: CostModel,
    tokenizer: CharTokenizer,
    target: NgramLm,
    draft: NgramLm,
    records: Vec<PromptRecord>,
    prompts: Vec<MultimodalPrompt>,
}

struct PromptRun {
    metrics: PromptMetrics,
    output: Vec<TokenId>,
    baseline_output: Vec<TokenId>,
}

impl Experiment {
    /// Validates the config and loads everything before any generation starts.
    pub fn prepare(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let cost = cfg.cost()?;
        let tokenizer = CharTokenizer::default();
        let target = NgramLm::load(&cfg.target_model)?;
        let draft = NgramLm::load(&cfg.draft_model)?;
        for (name, m) in [("target", &target), ("draft", &draft)] {
            if crate::models::LanguageModel::vocab(m) != tokenizer.vocab() {
                return Err(Error::InvalidModel(format!(
                    "{name} model vocabulary does not match the character tokenizer ({} symbols)",
                    tokenizer.vocab().size()
                )));
            }
        }
        let records = load_dataset(&cfg.dataset)?;
        let prompts = records.iter().map(|r| build_prompt(cfg.template, r, &tokenizer)).collect::<Result<Vec<_>>>()?;
        Ok(Experiment { cfg: cfg.clone(), cost, tokenizer, target, draft, records, prompts })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    pub fn tokenizer(&self) -> &CharTokenizer {
        &self.tokenizer
    }

    pub fn records(&self) -> &[PromptRecord] {
        &self.records
    }

    fn target_view(&self) -> MultimodalTargetLm<&NgramLm> {
        MultimodalTargetLm::new(&self.target)
    }

    fn draft_view(&self) -> Box<dyn PromptConditioned + '_> {
        if self.cfg.draft_uses_image {
            Box::new(MultimodalTargetLm::new(&self.draft))
        } else {
            Box::new(TextOnlyDraftLm::new(&self.draft))
        }
    }

    fn spd_config(&self, gamma: usize) -> Result<SpdConfig> {
        SpdConfig::new(gamma, self.cfg.mode, self.cfg.max_new_tokens, self.cfg.stop_on_eos)
    }

    fn run_prompt(&self, lane: usize, gamma: usize) -> Result<PromptRun> {
        let prompt = &self.prompts[lane];
        let target = self.target_view();
        let draft = self.draft_view();
        let cfg = self.spd_config(gamma)?;

        let mut baseline_rng = RngState::substream(self.cfg.seed, lane as u64, Stream::Baseline);
        let started = Instant::now();
        let baseline =
            autoregressive_generate(&target, prompt, cfg.max_new_tokens, cfg.mode, cfg.stop_on_eos, &mut baseline_rng)?;
        let baseline_wall = started.elapsed().as_secs_f64();

        let mut streams = SpdStreams::new(self.cfg.seed, lane as u64);
        let started = Instant::now();
        let spd = spd_generate(&target, draft.as_ref(), prompt, &cfg, &mut streams)?;
        let spd_wall = started.elapsed().as_secs_f64();

        let (spd_time, baseline_time) = match self.cfg.timing {
            Timing::Simulated => {
                (spd.trace.target_calls as f64 + self.cost.c() * spd.trace.draft_calls as f64, baseline.calls as f64)
            }
            // Clamp so sub-resolution timings still give a defined rate.
            Timing::Measured => (spd_wall.max(1e-9), baseline_wall.max(1e-9)),
        };
        let metrics = PromptMetrics::from_trace(
            self.records[lane].id.clone(),
            gamma,
            &spd.trace,
            self.cost,
            spd_time,
            baseline.tokens.len() as u64,
            baseline_time,
        )?;
        Ok(PromptRun { metrics, output: spd.tokens, baseline_output: baseline.tokens })
    }

    pub fn run(&self) -> Result<RunReport> {
        let mut rows = Vec::new();
        let mut per_gamma = Vec::new();
        for &gamma in &self.cfg.gammas {
            let lanes = 0..self.prompts.len();
            // Measured timings would be distorted by running prompts side by side.
            let runs: Vec<PromptRun> = match self.cfg.timing {
                Timing::Simulated => lanes.into_par_iter().map(|i| self.run_prompt(i, gamma)).collect::<Result<_>>()?,
                Timing::Measured => lanes.map(|i| self.run_prompt(i, gamma)).collect::<Result<_>>()?,
            };
            let metrics: Vec<PromptMetrics> = runs.iter().map(|r| r.metrics.clone()).collect();
            let identical = runs.iter().filter(|r| r.output == r.baseline_output).count();
            per_gamma.push(GammaSummary { metrics: aggregate(&metrics)?, identical_to_baseline: identical });
            rows.extend(runs.into_iter().map(|r| ReportRow {
                metrics: r.metrics,
                mode: self.cfg.mode,
                output: r.output,
                baseline_output: r.baseline_output,
            }));
        }
        rows.sort_by(|a, b| {
            (a.metrics.prompt_id.as_str(), a.metrics.gamma).cmp(&(b.metrics.prompt_id.as_str(), b.metrics.gamma))
        });
        Ok(RunReport { config: ConfigEcho::from(&self.cfg), rows, per_gamma })
    }

    /// Generates for one prompt and marks where each emitted token came from.
    pub fn trace(&self, prompt_id: &str, gamma: usize) -> Result<QualitativeTrace> {
        let lane = self
            .records
            .iter()
            .position(|r| r.id == prompt_id)
            .ok_or_else(|| Error::UnknownPrompt(prompt_id.to_string()))?;
        let cfg = self.spd_config(gamma)?;
        let target = self.target_view();
        let draft = self.draft_view();
        let mut streams = SpdStreams::new(self.cfg.seed, lane as u64);
        let out = spd_generate(&target, draft.as_ref(), &self.prompts[lane], &cfg, &mut streams)?;
        QualitativeTrace::new(prompt_id, gamma, &out.trace, &self.tokenizer)
    }
}

/// Runs every configured block size and writes the CSV and JSON reports.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunReport> {
    let report = Experiment::prepare(cfg)?.run()?;
    report.write(out_dir)?;
    Ok(report)
}

#[derive(Clone, Debug, PartialEq)]
pub struct QualitativeTrace {
    pub prompt_id: String,
    pub gamma: usize,
    pub origins: Vec<(TokenId, TokenOrigin)>,
    /// Generated text with `[accepted]`, `{correction}` and `<bonus>` spans.
    pub annotated: String,
    pub target_calls: u64,
    pub tau: f64,
}

impl QualitativeTrace {
    fn new(prompt_id: &str, gamma: usize, trace: &BlockTrace, tokenizer: &CharTokenizer) -> Result<Self> {
        let origins = trace.origins();
        Ok(QualitativeTrace {
            prompt_id: prompt_id.to_string(),
            gamma,
            annotated: annotate(&origins, tokenizer),
            origins,
            target_calls: trace.target_calls,
            tau: block_efficiency(trace)?,
        })
    }

    pub fn accepted(&self) -> usize {
        self.origins.iter().filter(|(_, o)| *o == TokenOrigin::Accepted).count()
    }

    pub fn summary(&self) -> String {
        format!(
            "# prompt={} gamma={} tokens={} accepted={} target_calls={} tau={:.4}",
            self.prompt_id,
            self.gamma,
            self.origins.len(),
            self.accepted(),
            self.target_calls,
            self.tau
        )
    }
}

fn brackets(o: TokenOrigin) -> (char, char) {
    match o {
        TokenOrigin::Accepted => ('[', ']'),
        TokenOrigin::Correction => ('{', '}'),
        TokenOrigin::Bonus => ('<', '>'),
    }
}

/// Wraps each run of same-origin tokens in that origin's brackets.
pub fn annotate(origins: &[(TokenId, TokenOrigin)], tokenizer: &CharTokenizer) -> String {
    let mut out = String::new();
    let mut open: Option<TokenOrigin> = None;
    for &(t, o) in origins {
        if open != Some(o) {
            if let Some(prev) = open {
                out.push(brackets(prev).1);
            }
            out.push(brackets(o).0);
            open = Some(o);
        }
        match tokenizer.char_of(t) {
            Some(c) => out.push(c),
            None => out.push_str("</s>"),
        }
    }
    if let Some(prev) = open {
        out.push(brackets(prev).1);
    }
    out
}
