//! Reward and metric formulas as pure numerics: the constraint, rubric,
//! multi-turn, thinking, partial, and total rewards; CSR/ISR summaries; and
//! group-relative advantage / clipped-surrogate math over externally
//! supplied rewards, probability ratios, and KL values.
//!
//! Policies themselves are out of scope — nothing here touches a model.
//! Everything is safe for unrestricted parallel use.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::verifier::VerificationReport;

#[derive(Debug, Error, PartialEq)]
pub enum ScoreError {
    #[error("undefined input: {0}")]
    UndefinedInput(String),
    #[error("judge response is unparseable: {0}")]
    JudgeParse(String),
}

/// Difficulty level, defined as the number of atomic constraints.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum Level {
    L1,
    L2,
    L3,
    L4,
    L5,
}

impl Level {
    pub const ALL: [Level; 5] = [Level::L1, Level::L2, Level::L3, Level::L4, Level::L5];

    /// Maps a constraint count to its level; counts outside 1..=5 have no
    /// level.
    pub fn from_constraint_count(n: usize) -> Option<Level> {
        match n {
            1 => Some(Level::L1),
            2 => Some(Level::L2),
            3 => Some(Level::L3),
            4 => Some(Level::L4),
            5 => Some(Level::L5),
            _ => None,
        }
    }

    pub fn constraint_count(&self) -> usize {
        match self {
            Level::L1 => 1,
            Level::L2 => 2,
            Level::L3 => 3,
            Level::L4 => 4,
            Level::L5 => 5,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Level::L1 => "L1",
            Level::L2 => "L2",
            Level::L3 => "L3",
            Level::L4 => "L4",
            Level::L5 => "L5",
        }
    }
}

/// Fraction of satisfied constraints.
pub fn constraint_reward(report: &VerificationReport) -> Result<f64, ScoreError> {
    let n = report.total_constraints();
    if n == 0 {
        return Err(ScoreError::UndefinedInput(
            "constraint reward needs at least one constraint".into(),
        ));
    }
    Ok(report.satisfied_count() as f64 / n as f64)
}

/// Fraction of satisfied rubrics.
pub fn rubric_reward(report: &VerificationReport) -> Result<f64, ScoreError> {
    let m = report.total_rubrics();
    if m == 0 {
        return Err(ScoreError::UndefinedInput(
            "rubric reward needs at least one rubric".into(),
        ));
    }
    Ok(report.satisfied_rubrics() as f64 / m as f64)
}

/// Count-weighted combination of constraint and rubric rewards.
pub fn multi_turn_reward(
    n: usize,
    r_constr: f64,
    m: usize,
    r_rubric: f64,
) -> Result<f64, ScoreError> {
    if n + m == 0 {
        return Err(ScoreError::UndefinedInput(
            "multi-turn reward needs at least one constraint or rubric".into(),
        ));
    }
    Ok((n as f64 * r_constr + m as f64 * r_rubric) / (n + m) as f64)
}

/// Task reward for a report: the count-weighted combination when rubrics
/// exist, otherwise the plain constraint fraction.
pub fn task_reward(report: &VerificationReport) -> Result<f64, ScoreError> {
    let n = report.total_constraints();
    let m = report.total_rubrics();
    if n + m == 0 {
        return Err(ScoreError::UndefinedInput(
            "task reward needs at least one check".into(),
        ));
    }
    let r_constr = if n > 0 { constraint_reward(report)? } else { 0.0 };
    let r_rubric = if m > 0 { rubric_reward(report)? } else { 0.0 };
    multi_turn_reward(n, r_constr, m, r_rubric)
}

/// Judge checklist flags for the reasoning-quality dimensions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChecklistFlags {
    // Logicality: +0.2 each.
    pub no_redundancy: bool,
    pub no_contradictions: bool,
    pub no_missing_logic: bool,
    pub clear_breakdown: bool,
    pub well_structured: bool,
    /// Overrides every logicality increment to zero.
    pub no_logic_at_all: bool,
    // Correctness: +0.2 each except detailed_exploration at +0.4.
    pub backtracking: bool,
    pub reflection: bool,
    pub no_obvious_errors: bool,
    pub detailed_exploration: bool,
}

/// Aggregates checklist flags into `(s_logic, s_corr)`, both clamped to
/// [0, 1].
pub fn aggregate_checklist(flags: &ChecklistFlags) -> (f64, f64) {
    let s_logic = if flags.no_logic_at_all {
        0.0
    } else {
        0.2 * [
            flags.no_redundancy,
            flags.no_contradictions,
            flags.no_missing_logic,
            flags.clear_breakdown,
            flags.well_structured,
        ]
        .iter()
        .filter(|&&f| f)
        .count() as f64
    };
    let s_corr = 0.2 * flags.backtracking as u8 as f64
        + 0.2 * flags.reflection as u8 as f64
        + 0.2 * flags.no_obvious_errors as u8 as f64
        + 0.4 * flags.detailed_exploration as u8 as f64;
    (s_logic.clamp(0.0, 1.0), s_corr.clamp(0.0, 1.0))
}

/// Scale and weights for the thinking reward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThinkConfig {
    pub alpha: f64,
    pub w_logic: f64,
    pub w_correctness: f64,
}

impl Default for ThinkConfig {
    fn default() -> Self {
        ThinkConfig {
            alpha: 0.2,
            w_logic: 0.5,
            w_correctness: 0.5,
        }
    }
}

/// Scaled weighted sum of the two judge-scored dimensions.
pub fn thinking_reward(s_logic: f64, s_corr: f64, cfg: &ThinkConfig) -> f64 {
    cfg.alpha * (cfg.w_logic * s_logic + cfg.w_correctness * s_corr)
}

/// Surplus of the task reward over a stronger anchor's reward on the same
/// input, floored at zero.
pub fn partial_reward(r_task: f64, anchor_r_task: f64) -> f64 {
    (r_task - anchor_r_task).max(0.0)
}

/// The per-response reward components and their exact sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub r_constr: f64,
    pub r_rubric: f64,
    pub r_task: f64,
    pub r_think: f64,
    pub r_ref: f64,
    pub anchor_r_task: Option<f64>,
    pub r_total: f64,
}

/// Assembles the total reward. A missing anchor contributes zero partial
/// reward.
pub fn total_reward(
    r_constr: f64,
    r_rubric: f64,
    r_task: f64,
    r_think: f64,
    anchor_r_task: Option<f64>,
) -> RewardBreakdown {
    let r_ref = anchor_r_task.map_or(0.0, |anchor| partial_reward(r_task, anchor));
    RewardBreakdown {
        r_constr,
        r_rubric,
        r_task,
        r_think,
        r_ref,
        anchor_r_task,
        r_total: r_task + r_ref + r_think,
    }
}

/// Per-level and overall CSR/ISR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub csr: f64,
    pub isr: f64,
    pub per_level: BTreeMap<Level, LevelMetrics>,
    pub sample_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelMetrics {
    pub csr: f64,
    pub isr: f64,
    pub sample_count: usize,
}

/// Computes CSR (mean per-sample satisfaction fraction over constraints and
/// rubrics together) and ISR (fraction of samples with everything
/// satisfied), with a per-level breakdown for samples that carry a level.
pub fn csr_isr(reports: &[(Option<Level>, VerificationReport)]) -> Result<MetricsSummary, ScoreError> {
    if reports.is_empty() {
        return Err(ScoreError::UndefinedInput("empty report set".into()));
    }
    let mut csr_sum = 0.0;
    let mut isr_sum = 0.0;
    let mut buckets: BTreeMap<Level, (f64, f64, usize)> = BTreeMap::new();
    for (level, report) in reports {
        let total = report.total_constraints() + report.total_rubrics();
        if total == 0 {
            return Err(ScoreError::UndefinedInput(
                "a sample carries no constraints or rubrics".into(),
            ));
        }
        let satisfied = report.satisfied_count() + report.satisfied_rubrics();
        let fraction = satisfied as f64 / total as f64;
        let indicator = if report.all_satisfied() { 1.0 } else { 0.0 };
        csr_sum += fraction;
        isr_sum += indicator;
        if let Some(level) = level {
            let bucket = buckets.entry(*level).or_insert((0.0, 0.0, 0));
            bucket.0 += fraction;
            bucket.1 += indicator;
            bucket.2 += 1;
        }
    }
    let n = reports.len() as f64;
    let per_level = buckets
        .into_iter()
        .map(|(level, (c, i, count))| {
            (
                level,
                LevelMetrics {
                    csr: c / count as f64,
                    isr: i / count as f64,
                    sample_count: count,
                },
            )
        })
        .collect();
    Ok(MetricsSummary {
        csr: csr_sum / n,
        isr: isr_sum / n,
        per_level,
        sample_count: reports.len(),
    })
}

/// A reward group normalized to advantages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrpoGroup {
    pub rewards: Vec<f64>,
    pub mu: f64,
    pub sigma: f64,
    pub advantages: Vec<f64>,
}

/// Normalizes a group of total rewards into advantages:
/// `(r - mean) / sqrt(population variance + eps_var)`.
pub fn group_advantages(rewards: &[f64], eps_var: f64) -> Result<GrpoGroup, ScoreError> {
    let g = rewards.len();
    if g < 2 {
        return Err(ScoreError::UndefinedInput(
            "a group needs at least two rollouts".into(),
        ));
    }
    let mu = rewards.iter().sum::<f64>() / g as f64;
    let variance = rewards.iter().map(|r| (r - mu).powi(2)).sum::<f64>() / g as f64;
    let sigma = (variance + eps_var).sqrt();
    let advantages = rewards.iter().map(|r| (r - mu) / sigma).collect();
    Ok(GrpoGroup {
        rewards: rewards.to_vec(),
        mu,
        sigma,
        advantages,
    })
}

/// Clip width, KL weight, and variance floor for the surrogate objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurrogateParams {
    pub eps_clip: f64,
    pub beta: f64,
    pub eps_var: f64,
}

impl Default for SurrogateParams {
    fn default() -> Self {
        SurrogateParams {
            eps_clip: 0.2,
            beta: 1e-3,
            eps_var: 1e-8,
        }
    }
}

/// One rollout's token-level probability ratios, its advantage, and its KL
/// value against the reference policy.
#[derive(Debug, Clone, PartialEq)]
pub struct Rollout {
    pub ratios: Vec<f64>,
    pub advantage: f64,
    pub kl: f64,
}

/// The clipped surrogate objective: mean over rollouts of the token-mean of
/// `min(ratio * adv, clip(ratio, 1 - eps, 1 + eps) * adv)` minus
/// `beta * kl`.
pub fn grpo_surrogate(rollouts: &[Rollout], params: &SurrogateParams) -> Result<f64, ScoreError> {
    if rollouts.is_empty() {
        return Err(ScoreError::UndefinedInput("no rollouts".into()));
    }
    let mut total = 0.0;
    for rollout in rollouts {
        if rollout.ratios.is_empty() {
            return Err(ScoreError::UndefinedInput(
                "a rollout carries no token ratios".into(),
            ));
        }
        let token_mean = rollout
            .ratios
            .iter()
            .map(|&r| {
                let clipped = r.clamp(1.0 - params.eps_clip, 1.0 + params.eps_clip);
                (r * rollout.advantage).min(clipped * rollout.advantage)
            })
            .sum::<f64>()
            / rollout.ratios.len() as f64;
        total += token_mean - params.beta * rollout.kl;
    }
    Ok(total / rollouts.len() as f64)
}

/// One parsed judge score with its clamping record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgedScore {
    pub score: f64,
    pub reason: String,
    /// Set when the raw score fell outside [0, 1] and was clamped.
    pub clamped_from: Option<f64>,
}

/// Parsed thinking-quality judgement: the two scored dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct ThinkingJudgement {
    pub logicality: JudgedScore,
    pub correctness: JudgedScore,
}

impl ThinkingJudgement {
    pub fn scores(&self) -> (f64, f64) {
        (self.logicality.score, self.correctness.score)
    }
}

/// Strips a ```json fenced block if present, returning the inner payload.
pub(crate) fn strip_json_fence(text: &str) -> &str {
    let trimmed = text.trim();
    if let Some(rest) = trimmed.strip_prefix("```json") {
        if let Some(inner) = rest.split("```").next() {
            return inner.trim();
        }
    }
    if let Some(rest) = trimmed.strip_prefix("```") {
        if let Some(inner) = rest.split("```").next() {
            return inner.trim();
        }
    }
    trimmed
}

fn score_from_value(v: &serde_json::Value) -> Option<f64> {
    match v {
        serde_json::Value::Number(n) => n.as_f64(),
        serde_json::Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

fn judged_score(entry: &serde_json::Value) -> Result<JudgedScore, ScoreError> {
    let raw = entry
        .get("score")
        .and_then(score_from_value)
        .ok_or_else(|| ScoreError::JudgeParse("missing or non-numeric score".into()))?;
    let reason = entry
        .get("reason")
        .and_then(|r| r.as_str())
        .unwrap_or_default()
        .to_string();
    let score = raw.clamp(0.0, 1.0);
    Ok(JudgedScore {
        score,
        reason,
        clamped_from: (raw != score).then_some(raw),
    })
}

/// Parses a judge response scoring the two thinking dimensions. The
/// expected shape is a JSON object with per-dimension `reason` and `score`
/// fields; scores outside [0, 1] are clamped and recorded.
pub fn parse_thinking_judgement(text: &str) -> Result<ThinkingJudgement, ScoreError> {
    let value: serde_json::Value = serde_json::from_str(strip_json_fence(text))
        .map_err(|e| ScoreError::JudgeParse(e.to_string()))?;
    let object = value
        .as_object()
        .ok_or_else(|| ScoreError::JudgeParse("expected a JSON object".into()))?;
    let find = |needle: &str| -> Result<JudgedScore, ScoreError> {
        object
            .iter()
            .find(|(k, _)| k.to_lowercase().contains(needle))
            .map(|(_, v)| judged_score(v))
            .transpose()?
            .ok_or_else(|| ScoreError::JudgeParse(format!("no {needle} dimension in response")))
    };
    Ok(ThinkingJudgement {
        logicality: find("logic")?,
        correctness: find("correctness")?,
    })
}

/// Parses a rubric-evaluation judge response: a JSON array of objects each
/// carrying a `score` field, in rubric order. A score of 1 satisfies the
/// rubric; anything else (or a malformed entry) fails closed.
pub fn parse_rubric_verdicts(text: &str, expected: usize) -> Result<Vec<bool>, ScoreError> {
    let value: serde_json::Value = serde_json::from_str(strip_json_fence(text))
        .map_err(|e| ScoreError::JudgeParse(e.to_string()))?;
    let entries = value
        .as_array()
        .ok_or_else(|| ScoreError::JudgeParse("expected a JSON array".into()))?;
    if entries.len() != expected {
        return Err(ScoreError::JudgeParse(format!(
            "expected {expected} rubric scores, got {}",
            entries.len()
        )));
    }
    Ok(entries
        .iter()
        .map(|e| {
            e.get("score")
                .and_then(score_from_value)
                .map(|s| s >= 1.0)
                .unwrap_or(false)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(verdicts: &[bool]) -> VerificationReport {
        VerificationReport::new(verdicts.to_vec(), Vec::new())
    }

    #[test]
    fn constraint_fraction() {
        assert_eq!(
            constraint_reward(&report(&[true, true, true, false])).unwrap(),
            0.75
        );
        assert_eq!(constraint_reward(&report(&[true, true])).unwrap(), 1.0);
        assert_eq!(constraint_reward(&report(&[false, false])).unwrap(), 0.0);
        assert!(constraint_reward(&report(&[])).is_err());
    }

    #[test]
    fn rubric_fraction() {
        let r = VerificationReport::new(vec![], vec![true, false]);
        assert_eq!(rubric_reward(&r).unwrap(), 0.5);
        assert!(rubric_reward(&report(&[true])).is_err());
    }

    #[test]
    fn multi_turn_mixes_by_count() {
        assert_eq!(multi_turn_reward(2, 0.5, 2, 1.0).unwrap(), 0.75);
        assert!((multi_turn_reward(3, 0.4, 0, 0.0).unwrap() - 0.4).abs() < 1e-15);
        assert!((multi_turn_reward(0, 0.0, 2, 0.9).unwrap() - 0.9).abs() < 1e-15);
        assert!(multi_turn_reward(0, 0.0, 0, 0.0).is_err());
    }

    #[test]
    fn checklist_aggregation() {
        let all_logic = ChecklistFlags {
            no_redundancy: true,
            no_contradictions: true,
            no_missing_logic: true,
            clear_breakdown: true,
            well_structured: true,
            ..Default::default()
        };
        assert_eq!(aggregate_checklist(&all_logic), (1.0, 0.0));

        let overridden = ChecklistFlags {
            no_logic_at_all: true,
            ..all_logic
        };
        assert_eq!(aggregate_checklist(&overridden).0, 0.0);

        let explore = ChecklistFlags {
            detailed_exploration: true,
            ..Default::default()
        };
        assert_eq!(aggregate_checklist(&explore).1, 0.4);
    }

    #[test]
    fn thinking_reward_defaults() {
        let cfg = ThinkConfig::default();
        assert!((thinking_reward(1.0, 1.0, &cfg) - 0.2).abs() < 1e-15);
        assert!((thinking_reward(0.0, 0.4, &cfg) - 0.04).abs() < 1e-15);
        assert_eq!(thinking_reward(0.0, 0.0, &cfg), 0.0);
    }

    #[test]
    fn partial_reward_floors_at_zero() {
        assert!((partial_reward(0.8, 0.5) - 0.3).abs() < 1e-15);
        assert_eq!(partial_reward(0.4, 0.5), 0.0);
        for x in [0.0, 0.25, 1.0] {
            assert_eq!(partial_reward(x, x), 0.0);
        }
    }

    #[test]
    fn total_reward_sums_exactly() {
        let b = total_reward(0.75, 0.0, 0.75, 0.2, Some(0.45));
        assert!((b.r_ref - 0.3).abs() < 1e-15);
        assert!((b.r_total - 1.25).abs() < 1e-15);
        let zero = total_reward(0.0, 0.0, 0.0, 0.0, None);
        assert_eq!(zero.r_total, 0.0);
        assert_eq!(zero.r_ref, 0.0);
    }

    #[test]
    fn csr_isr_fixture() {
        let reports = vec![
            (Some(Level::L4), report(&[true, true, true, true])),
            (Some(Level::L4), report(&[true, true, true, false])),
        ];
        let s = csr_isr(&reports).unwrap();
        assert_eq!(s.csr, 0.875);
        assert_eq!(s.isr, 0.5);
        assert_eq!(s.per_level[&Level::L4].sample_count, 2);
        assert!(csr_isr(&[]).is_err());
    }

    #[test]
    fn advantages_normalize() {
        let g = group_advantages(&[0.5, 0.5, 0.5], 1e-8).unwrap();
        assert!(g.advantages.iter().all(|&a| a == 0.0));

        let g = group_advantages(&[0.2, 0.4, 0.6, 0.8], 1e-8).unwrap();
        assert!((g.mu - 0.5).abs() < 1e-12);
        assert!((g.sigma - 0.22360681).abs() < 1e-6);
        let expected = [-1.3416405, -0.4472135, 0.4472135, 1.3416405];
        for (a, e) in g.advantages.iter().zip(expected) {
            assert!((a - e).abs() < 1e-5, "{a} vs {e}");
        }
        assert!(group_advantages(&[1.0], 1e-8).is_err());
    }

    #[test]
    fn surrogate_examples() {
        let p = SurrogateParams {
            eps_clip: 0.2,
            beta: 0.0,
            eps_var: 1e-8,
        };
        let one = |ratio: f64, advantage: f64| Rollout {
            ratios: vec![ratio],
            advantage,
            kl: 0.0,
        };
        assert!((grpo_surrogate(&[one(1.0, 0.7)], &p).unwrap() - 0.7).abs() < 1e-15);
        assert!((grpo_surrogate(&[one(1.5, 1.0)], &p).unwrap() - 1.2).abs() < 1e-15);
        assert!((grpo_surrogate(&[one(0.5, -1.0)], &p).unwrap() - (-0.8)).abs() < 1e-15);
        assert!(grpo_surrogate(&[], &p).is_err());
    }

    #[test]
    fn surrogate_kl_penalty_is_linear_in_beta() {
        let rollout = Rollout {
            ratios: vec![1.0, 1.1],
            advantage: 0.5,
            kl: 2.0,
        };
        let at = |beta: f64| {
            grpo_surrogate(
                &[rollout.clone()],
                &SurrogateParams {
                    beta,
                    ..SurrogateParams::default()
                },
            )
            .unwrap()
        };
        assert!(at(0.0) > at(0.1));
        assert!((at(0.0) - at(0.1) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn thinking_judgement_parses_and_clamps() {
        let text = r#"```json
{
    "Logicality of the thought process": {"reason": "clean", "score": "0.8"},
    "Correctness and detail of the thought process": {"reason": "thorough", "score": 1.4}
}
```"#;
        let j = parse_thinking_judgement(text).unwrap();
        assert_eq!(j.logicality.score, 0.8);
        assert_eq!(j.correctness.score, 1.0);
        assert_eq!(j.correctness.clamped_from, Some(1.4));
        assert!(parse_thinking_judgement("not json").is_err());
    }

    #[test]
    fn rubric_verdicts_parse_in_order() {
        let text = r#"[{"r": "ok", "score": 1.0}, {"r": "no", "score": 0}, {"r": "odd", "score": "1"}]"#;
        assert_eq!(
            parse_rubric_verdicts(text, 3).unwrap(),
            vec![true, false, true]
        );
        assert!(parse_rubric_verdicts(text, 2).is_err());
    }
}
