//! The `ergkit` command line: `synth` generates a dataset, `verify` scores
//! a responses file against it, `score` computes reward breakdowns, `judge`
//! runs gateway-based rubric and thinking evaluation, and `report` prints
//! CSR/ISR with a per-level breakdown.
//!
//! Exit status: 0 on success, 2 for usage errors, 1 for everything else.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::banks::{load_banks, BankSource, Banks};
use crate::config::{load_config, process_env, Config, ConfigOverrides, GatewayChoice, API_KEY_ENV};
use crate::gateway::{
    ChatGateway, ChatMessage, ChatRequest, LiveGateway, MockGateway, RecordGateway, ReplayGateway,
};
use crate::scoring::{
    self, csr_isr, task_reward, thinking_reward, total_reward, Level, ThinkConfig,
};
use crate::storage::{
    self, DatasetRecord, JudgedRecord, ReportRecord, ResponseRecord, StorageError,
};
use crate::synthesis::{generate_dataset, GeneratorConfig, Synthesizer, TemplateSet, TurnShape};
use crate::verifier::VerificationReport;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Storage(#[from] StorageError),
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error(transparent)]
    Bank(#[from] crate::banks::BankError),
    #[error(transparent)]
    Synthesis(#[from] crate::synthesis::SynthesisError),
    #[error(transparent)]
    Score(#[from] scoring::ScoreError),
    #[error(transparent)]
    Gateway(#[from] crate::gateway::GatewayError),
    #[error("{0}")]
    Usage(String),
}

#[derive(Parser, Debug)]
#[command(
    name = "ergkit",
    version,
    about = "Verifiable reasoning-graph instructions: synthesis, verification, rewards"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct CommonArgs {
    /// Config file (TOML). Flags beat environment beats file beats defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Gateway mode: mock, replay, record, or live.
    #[arg(long, global = true)]
    gateway: Option<GatewayChoice>,
    /// Model id stamped on gateway requests.
    #[arg(long, global = true)]
    model: Option<String>,
    /// Chat-completions endpoint for live/record modes.
    #[arg(long, global = true)]
    endpoint: Option<String>,
    /// Cassette file for replay/record modes.
    #[arg(long, global = true)]
    cassette: Option<PathBuf>,
    /// Directory of prompt-template overrides.
    #[arg(long, global = true)]
    templates: Option<PathBuf>,
}

impl CommonArgs {
    fn resolve(&self) -> Result<Config, CliError> {
        let overrides = ConfigOverrides {
            gateway: self.gateway,
            model: self.model.clone(),
            endpoint: self.endpoint.clone(),
            cassette: self.cassette.clone(),
            templates_dir: self.templates.clone(),
            ..Default::default()
        };
        Ok(load_config(
            self.config.as_deref(),
            &process_env(),
            &overrides,
        )?)
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a dataset from the banks.
    Synth(SynthArgs),
    /// Verify a responses file against a dataset.
    Verify(VerifyArgs),
    /// Compute reward breakdowns for responses.
    Score(ScoreArgs),
    /// Print CSR/ISR with a per-level breakdown.
    Report(ReportArgs),
    /// Run rubric and thinking judging through the gateway.
    Judge(JudgeArgs),
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Difficulty levels, e.g. "1..5", "3", or "1,3,5".
    #[arg(long, default_value = "1..5")]
    levels: String,
    /// Records per level.
    #[arg(long, default_value_t = 10)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output dataset path.
    #[arg(long)]
    out: PathBuf,
    /// Bank file; the embedded bank is used when absent.
    #[arg(long)]
    banks: Option<PathBuf>,
    /// single, system, accumulated, or mixed.
    #[arg(long, default_value = "mixed")]
    turn_shape: TurnShape,
    /// Fraction of multi-turn records receiving an adversarial final turn.
    #[arg(long)]
    adversarial_fraction: Option<f64>,
    /// Simulated user turns per system dialogue.
    #[arg(long)]
    turns: Option<usize>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    responses: PathBuf,
    /// Write per-record reports here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ScoreArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    responses: PathBuf,
    /// Anchor-model responses; enables the partial reward.
    #[arg(long)]
    anchor: Option<PathBuf>,
    /// Judge outputs from `ergkit judge` (rubric verdicts, thinking scores).
    #[arg(long)]
    judged: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Thinking reward scale.
    #[arg(long, default_value_t = 0.2)]
    alpha: f64,
    /// Logicality weight.
    #[arg(long, default_value_t = 0.5)]
    w_logic: f64,
    /// Correctness weight.
    #[arg(long, default_value_t = 0.5)]
    w_corr: f64,
}

#[derive(Args, Debug)]
struct ReportArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    reports: PathBuf,
    /// Emit machine-readable JSON instead of the table.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct JudgeArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    responses: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

/// Parses "1..5", "3", or "1,3,5" into levels.
fn parse_levels(text: &str) -> Result<Vec<Level>, CliError> {
    let level_of = |raw: &str| -> Result<Level, CliError> {
        let n: usize = raw
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("bad level {raw:?}")))?;
        Level::from_constraint_count(n)
            .ok_or_else(|| CliError::Usage(format!("levels run from 1 to 5, got {n}")))
    };
    if let Some((a, b)) = text.split_once("..") {
        let lo = level_of(a)?;
        let hi = level_of(b)?;
        let levels: Vec<Level> = Level::ALL
            .iter()
            .copied()
            .filter(|l| (lo..=hi).contains(l))
            .collect();
        if levels.is_empty() {
            return Err(CliError::Usage(format!("empty level range {text:?}")));
        }
        return Ok(levels);
    }
    text.split(',').map(level_of).collect()
}

enum GatewayHolder {
    Mock(MockGateway),
    Replay(ReplayGateway),
    Record {
        gateway: RecordGateway<LiveGateway>,
        path: PathBuf,
    },
    Live(LiveGateway),
}

impl GatewayHolder {
    fn build(config: &Config) -> Result<Self, CliError> {
        match config.gateway {
            GatewayChoice::Mock => Ok(GatewayHolder::Mock(MockGateway)),
            GatewayChoice::Replay => {
                let path = config.cassette.as_ref().ok_or_else(|| {
                    CliError::Usage("replay mode needs --cassette".into())
                })?;
                Ok(GatewayHolder::Replay(ReplayGateway::new(
                    storage::read_cassette(path)?,
                )))
            }
            GatewayChoice::Record => {
                let path = config
                    .cassette
                    .clone()
                    .ok_or_else(|| CliError::Usage("record mode needs --cassette".into()))?;
                let live = live_gateway(config)?;
                let cassette = if path.exists() {
                    storage::read_cassette(&path)?
                } else {
                    Default::default()
                };
                Ok(GatewayHolder::Record {
                    gateway: RecordGateway::with_cassette(live, cassette),
                    path,
                })
            }
            GatewayChoice::Live => Ok(GatewayHolder::Live(live_gateway(config)?)),
        }
    }

    fn gateway(&self) -> &dyn ChatGateway {
        match self {
            GatewayHolder::Mock(g) => g,
            GatewayHolder::Replay(g) => g,
            GatewayHolder::Record { gateway, .. } => gateway,
            GatewayHolder::Live(g) => g,
        }
    }

    /// Persists the cassette in record mode.
    fn finish(self) -> Result<(), CliError> {
        if let GatewayHolder::Record { gateway, path } = self {
            storage::write_cassette(&gateway.into_cassette(), &path)?;
        }
        Ok(())
    }
}

fn live_gateway(config: &Config) -> Result<LiveGateway, CliError> {
    let key = std::env::var(API_KEY_ENV).map_err(|_| {
        CliError::Usage(format!(
            "live gateway needs the {API_KEY_ENV} environment variable"
        ))
    })?;
    Ok(LiveGateway::new(config.endpoint.clone(), key))
}

fn load_banks_arg(path: Option<&Path>) -> Result<Banks, CliError> {
    Ok(match path {
        Some(path) => load_banks(BankSource::File(path))?,
        None => load_banks(BankSource::EmbeddedDefault)?,
    })
}

fn templates_for(config: &Config) -> Result<TemplateSet, CliError> {
    Ok(match &config.templates_dir {
        Some(dir) => TemplateSet::with_overrides_from(dir).map_err(|e| {
            CliError::Usage(format!("bad template directory {}: {e}", dir.display()))
        })?,
        None => TemplateSet::embedded(),
    })
}

fn run_synth(args: SynthArgs) -> Result<(), CliError> {
    let config = args.common.resolve()?;
    let banks = load_banks_arg(args.banks.as_deref())?;
    let holder = GatewayHolder::build(&config)?;
    let mut synth = Synthesizer::new(&banks, holder.gateway()).with_model(config.model.clone());
    synth.templates = templates_for(&config)?;
    let generator = GeneratorConfig {
        seed: args.seed,
        levels: parse_levels(&args.levels)?,
        count_per_level: args.count,
        turn_shape: args.turn_shape,
        adversarial_fraction: args
            .adversarial_fraction
            .unwrap_or(config.adversarial_fraction),
        dialogue_turns: args.turns.unwrap_or(config.dialogue_turns),
    };
    let records = generate_dataset(&synth, &generator)?;
    storage::write_dataset(&records, &args.out)?;
    println!(
        "wrote {} records ({} levels x {}) to {}",
        records.len(),
        generator.levels.len(),
        generator.count_per_level,
        args.out.display()
    );
    holder.finish()
}

fn join_responses<'a>(
    records: &'a [DatasetRecord],
    responses: &'a [ResponseRecord],
) -> Vec<(&'a DatasetRecord, &'a ResponseRecord)> {
    let by_id: BTreeMap<&str, &ResponseRecord> =
        responses.iter().map(|r| (r.id.as_str(), r)).collect();
    records
        .iter()
        .filter_map(|record| by_id.get(record.id.as_str()).map(|resp| (record, *resp)))
        .collect()
}

fn run_verify(args: VerifyArgs) -> Result<(), CliError> {
    let records = storage::read_dataset(&args.dataset)?;
    let responses = storage::read_responses(&args.responses)?;
    let joined = join_responses(&records, &responses);
    if joined.is_empty() {
        return Err(CliError::Usage(
            "no response ids match the dataset".into(),
        ));
    }
    let mut reports = Vec::new();
    let mut failures = 0usize;
    for (record, response) in &joined {
        let report = record
            .verify(&response.text)
            .map_err(crate::synthesis::SynthesisError::from)?;
        let ok = report.constraint_verdicts.iter().all(|&v| v);
        if !ok {
            failures += 1;
        }
        println!(
            "{} {} {}/{}",
            if ok { "PASS" } else { "FAIL" },
            record.id,
            report.satisfied_count(),
            report.total_constraints(),
        );
        reports.push(ReportRecord {
            id: record.id.clone(),
            difficulty: record.difficulty,
            report,
        });
    }
    println!(
        "verified {} responses: {} fully satisfied, {} with failures",
        joined.len(),
        joined.len() - failures,
        failures
    );
    if let Some(out) = &args.out {
        storage::write_reports(&reports, out)?;
        println!("wrote reports to {}", out.display());
    }
    Ok(())
}

/// Reward breakdown row written by `score`.
#[derive(serde::Serialize)]
struct ScoreRow {
    id: String,
    difficulty: Level,
    #[serde(flatten)]
    breakdown: scoring::RewardBreakdown,
}

fn run_score(args: ScoreArgs) -> Result<(), CliError> {
    let records = storage::read_dataset(&args.dataset)?;
    let responses = storage::read_responses(&args.responses)?;
    let judged: BTreeMap<String, JudgedRecord> = match &args.judged {
        Some(path) => storage::read_judged(path)?
            .into_iter()
            .map(|j| (j.id.clone(), j))
            .collect(),
        None => BTreeMap::new(),
    };
    let anchors: BTreeMap<String, ResponseRecord> = match &args.anchor {
        Some(path) => storage::read_responses(path)?
            .into_iter()
            .map(|r| (r.id.clone(), r))
            .collect(),
        None => BTreeMap::new(),
    };
    let think_cfg = ThinkConfig {
        alpha: args.alpha,
        w_logic: args.w_logic,
        w_correctness: args.w_corr,
    };
    let joined = join_responses(&records, &responses);
    if joined.is_empty() {
        return Err(CliError::Usage(
            "no response ids match the dataset".into(),
        ));
    }
    let mut rows = Vec::new();
    for (record, response) in &joined {
        let base = record
            .verify(&response.text)
            .map_err(crate::synthesis::SynthesisError::from)?;
        let judged_entry = judged.get(&record.id);
        let rubric_verdicts = judged_entry
            .map(|j| j.rubric_verdicts.clone())
            .unwrap_or_default();
        let report = VerificationReport::new(base.constraint_verdicts.clone(), rubric_verdicts);
        let n = report.total_constraints();
        let m = report.total_rubrics();
        let r_constr = if n > 0 {
            scoring::constraint_reward(&report)?
        } else {
            0.0
        };
        let r_rubric = if m > 0 {
            scoring::rubric_reward(&report)?
        } else {
            0.0
        };
        let r_task = task_reward(&report)?;
        let r_think = judged_entry
            .and_then(|j| j.s_logic.zip(j.s_corr))
            .map(|(l, c)| thinking_reward(l, c, &think_cfg))
            .unwrap_or(0.0);
        let anchor_r_task = match anchors.get(&record.id) {
            Some(anchor) => {
                let anchor_base = record
                    .verify(&anchor.text)
                    .map_err(crate::synthesis::SynthesisError::from)?;
                // The anchor answers the same instruction; rubric verdicts
                // for it are not judged here, so its task reward is the
                // constraint fraction.
                Some(scoring::constraint_reward(&anchor_base)?)
            }
            None => None,
        };
        let breakdown = total_reward(r_constr, r_rubric, r_task, r_think, anchor_r_task);
        println!(
            "{}: task {:.4} ref {:.4} think {:.4} total {:.4}",
            record.id, breakdown.r_task, breakdown.r_ref, breakdown.r_think, breakdown.r_total
        );
        rows.push(ScoreRow {
            id: record.id.clone(),
            difficulty: record.difficulty,
            breakdown,
        });
    }
    let mean: f64 = rows.iter().map(|r| r.breakdown.r_total).sum::<f64>() / rows.len() as f64;
    println!("scored {} responses, mean total reward {:.4}", rows.len(), mean);
    if let Some(out) = &args.out {
        let lines: Vec<String> = rows
            .iter()
            .map(|r| serde_json::to_string(r).expect("rows serialize"))
            .collect();
        std::fs::write(out, lines.join("\n") + "\n").map_err(|source| StorageError::Io {
            path: out.display().to_string(),
            source,
        })?;
        println!("wrote breakdowns to {}", out.display());
    }
    Ok(())
}

fn run_report(args: ReportArgs) -> Result<(), CliError> {
    let reports = storage::read_reports(&args.reports)?;
    let samples: Vec<(Option<Level>, VerificationReport)> = reports
        .iter()
        .map(|r| (Some(r.difficulty), r.report.clone()))
        .collect();
    let summary = csr_isr(&samples)?;
    if args.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&summary).expect("summary serializes")
        );
        return Ok(());
    }
    println!("samples: {}", summary.sample_count);
    println!("level   csr      isr      n");
    for (level, metrics) in &summary.per_level {
        println!(
            "{:<7} {:<8.4} {:<8.4} {}",
            level.name(),
            metrics.csr,
            metrics.isr,
            metrics.sample_count
        );
    }
    println!("overall {:<8.4} {:<8.4} {}", summary.csr, summary.isr, summary.sample_count);
    Ok(())
}

fn run_judge(args: JudgeArgs) -> Result<(), CliError> {
    let config = args.common.resolve()?;
    let records = storage::read_dataset(&args.dataset)?;
    let responses = storage::read_responses(&args.responses)?;
    let holder = GatewayHolder::build(&config)?;
    let gateway = holder.gateway();
    let templates = templates_for(&config)?;
    let joined = join_responses(&records, &responses);
    if joined.is_empty() {
        return Err(CliError::Usage(
            "no response ids match the dataset".into(),
        ));
    }
    let mut judged = Vec::new();
    for (record, response) in &joined {
        let rubrics = record.judge_rubrics();
        let rubric_verdicts = if rubrics.is_empty() {
            Vec::new()
        } else {
            let mut user = format!("points: {}\n[List of Assessment Points]\n", rubrics.len());
            for (i, rubric) in rubrics.iter().enumerate() {
                user.push_str(&format!("{i}: {rubric}\n"));
            }
            user.push_str(&format!("[Latest Answer]\n{}", response.text));
            let request = ChatRequest::new(
                config.model.clone(),
                vec![
                    ChatMessage::system(templates.get("rubric_eval")),
                    ChatMessage::user(user),
                ],
            );
            let reply = gateway.chat(&request)?;
            scoring::parse_rubric_verdicts(&reply.text, rubrics.len())?
        };
        let (s_logic, s_corr) = match &response.thinking {
            Some(thinking) => {
                let prompt = match &record.payload {
                    storage::RecordPayload::SingleTurn { instruction } => {
                        instruction.rendered_prompt.clone()
                    }
                    storage::RecordPayload::MultiTurn { dialogue } => dialogue
                        .turns
                        .iter()
                        .map(|t| format!("{}: {}", t.role, t.text))
                        .collect::<Vec<_>>()
                        .join("\n"),
                };
                let user = format!(
                    "Question:\n{prompt}\n\nReference thinking:\n{}\n\nModel thinking:\n{thinking}",
                    record.cot.erg.text
                );
                let request = ChatRequest::new(
                    config.model.clone(),
                    vec![
                        ChatMessage::system(templates.get("thinking_reward")),
                        ChatMessage::user(user),
                    ],
                );
                let reply = gateway.chat(&request)?;
                let judgement = scoring::parse_thinking_judgement(&reply.text)?;
                let (l, c) = judgement.scores();
                (Some(l), Some(c))
            }
            None => (None, None),
        };
        println!(
            "{}: {} rubric verdicts{}",
            record.id,
            rubric_verdicts.len(),
            if s_logic.is_some() { ", thinking scored" } else { "" }
        );
        judged.push(JudgedRecord {
            id: record.id.clone(),
            rubric_verdicts,
            s_logic,
            s_corr,
        });
    }
    storage::write_judged(&judged, &args.out)?;
    println!("wrote {} judged records to {}", judged.len(), args.out.display());
    holder.finish()
}

/// Parses and runs a full command line (including the binary name).
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.exit_code() == 0 { 0 } else { 2 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let outcome = match cli.command {
        Command::Synth(args) => run_synth(args),
        Command::Verify(args) => run_verify(args),
        Command::Score(args) => run_score(args),
        Command::Report(args) => run_report(args),
        Command::Judge(args) => run_judge(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_parsing() {
        assert_eq!(parse_levels("1..5").unwrap(), Level::ALL.to_vec());
        assert_eq!(parse_levels("3").unwrap(), vec![Level::L3]);
        assert_eq!(
            parse_levels("1,4").unwrap(),
            vec![Level::L1, Level::L4]
        );
        assert!(parse_levels("0..9").is_err());
        assert!(parse_levels("abc").is_err());
    }
}
