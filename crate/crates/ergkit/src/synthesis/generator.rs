//! End-to-end dataset generation: samples bank nodes into constraint
//! graphs, gates them through the consistency judge, composes single-turn
//! instructions and multi-turn dialogues, attaches chain-of-thought traces
//! and a canonical witness response, and emits dataset records.
//!
//! Constraint shapes are drawn one per interaction class (characters,
//! words, punctuation, structure, list, bold, keywords, framing, brackets)
//! so any sampled combination can be realized jointly by the response
//! builder; candidates the builder cannot witness are discarded and
//! resampled, mirroring the generate-then-filter loop the pipeline is built
//! around.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::banks::{Banks, ConditionKind, DimensionKind, FactAnswer, KnowledgeFact, OperationKind};
use crate::graph::{evaluate_graph, Erg, ErgNode, EvaluatedConstraint, IntClass, ParamValue};
use crate::numeric::Num;
use crate::scoring::Level;
use crate::storage::{CotSet, DatasetRecord, Provenance, RecordPayload};
use crate::verifier::{compile_constraint, export_verifier_spec};

use super::{
    build_canonical_response, expand_cot, ConsistencyVerdict, CotPattern, Instruction,
    SynthesisError, Synthesizer,
};

/// Dialogue shape selection for generated records.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TurnShape {
    /// Single-turn instructions only.
    Single,
    /// System-instruction dialogues only.
    System,
    /// User-accumulated dialogues only.
    Accumulated,
    /// Cycle deterministically through all three.
    Mixed,
}

impl std::str::FromStr for TurnShape {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "single" => Ok(TurnShape::Single),
            "system" => Ok(TurnShape::System),
            "accumulated" => Ok(TurnShape::Accumulated),
            "mixed" => Ok(TurnShape::Mixed),
            other => Err(format!("unknown turn shape {other:?}")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub levels: Vec<Level>,
    pub count_per_level: usize,
    pub turn_shape: TurnShape,
    /// Fraction of multi-turn records receiving an adversarial final turn.
    pub adversarial_fraction: f64,
    /// Simulated user turns per system dialogue.
    pub dialogue_turns: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            seed: 0,
            levels: Level::ALL.to_vec(),
            count_per_level: 10,
            turn_shape: TurnShape::Mixed,
            adversarial_fraction: 0.25,
            dialogue_turns: 2,
        }
    }
}

const KEYWORD_TERMS: [&str; 6] = ["quartz", "lantern", "meridian", "harbor", "compass", "velvet"];
const BEGIN_PHRASES: [&str; 3] = ["To begin with", "In short", "Overall"];
const END_PHRASES: [&str; 3] = ["as agreed", "in good order", "for now"];

const QUERY_BANK: [&str; 10] = [
    "What key issues should be addressed in a requirements document?",
    "How can a small team keep its weekly planning meeting effective?",
    "What should a postmortem for a failed deployment cover?",
    "How do I structure release notes for a minor version?",
    "What belongs in a good onboarding checklist?",
    "How should we prioritize bug fixes against new features?",
    "What makes a design review productive?",
    "How do I summarize user feedback for stakeholders?",
    "What steps keep a data migration safe?",
    "How should an incident report be organized?",
];

/// One constraint per class keeps sampled combinations jointly realizable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ArchClass {
    Chars,
    Words,
    Punct,
    Structure,
    List,
    Bold,
    Keywords,
    Framing,
    Brackets,
}

const ALL_CLASSES: [ArchClass; 9] = [
    ArchClass::Chars,
    ArchClass::Words,
    ArchClass::Punct,
    ArchClass::Structure,
    ArchClass::List,
    ArchClass::Bold,
    ArchClass::Keywords,
    ArchClass::Framing,
    ArchClass::Brackets,
];

struct FactPool<'a> {
    facts: Vec<&'a KnowledgeFact>,
    used: Vec<String>,
}

impl<'a> FactPool<'a> {
    fn new(banks: &'a Banks) -> Self {
        FactPool {
            facts: banks.facts().iter().collect(),
            used: Vec::new(),
        }
    }

    /// Draws an unused integer fact with an answer inside [lo, hi].
    fn draw_int(&mut self, rng: &mut ChaCha8Rng, lo: i64, hi: i64) -> Option<&'a KnowledgeFact> {
        let mut candidates: Vec<&&KnowledgeFact> = self
            .facts
            .iter()
            .filter(|f| {
                !self.used.contains(&f.id)
                    && matches!(f.answer, FactAnswer::Integer(v) if (lo..=hi).contains(&v))
            })
            .collect();
        if candidates.is_empty() {
            return None;
        }
        candidates.sort_by(|a, b| a.id.cmp(&b.id));
        let pick = candidates[rng.gen_range(0..candidates.len())];
        self.used.push(pick.id.clone());
        Some(pick)
    }
}

fn knowledge(id: &str, fact: &KnowledgeFact) -> ErgNode {
    ErgNode::knowledge(id, &fact.id, &format!("recall {}", fact.question))
}

/// Builds one constraint graph for a class, or `None` when no suitable
/// fact is available.
fn build_archetype(
    class: ArchClass,
    banks: &Banks,
    pool: &mut FactPool<'_>,
    rng: &mut ChaCha8Rng,
    allow_line: bool,
) -> Option<EvaluatedConstraint> {
    let erg = match class {
        ArchClass::Chars => {
            let base = pool.draw_int(rng, 21, 130)?;
            let axes = pool.draw_int(rng, 2, 9)?;
            Erg::new(
                vec![
                    knowledge("A", base),
                    knowledge("B", axes),
                    ErgNode::math(
                        "M1",
                        OperationKind::Multiplication,
                        vec![Num::from_int(2)],
                        "double it for the lower limit base",
                    ),
                    ErgNode::math(
                        "M2",
                        OperationKind::Subtraction,
                        vec![Num::from_int(2)],
                        "subtract two to settle the lower limit",
                    ),
                    ErgNode::math(
                        "M3",
                        OperationKind::Multiplication,
                        vec![Num::from_int(3)],
                        "triple it for the upper limit base",
                    ),
                    ErgNode::math(
                        "M4",
                        OperationKind::Addition,
                        vec![],
                        "add the second count to settle the upper limit",
                    ),
                    ErgNode::conditional(
                        "S",
                        ConditionKind::Interval,
                        DimensionKind::CharacterCount,
                        vec![],
                        "keep the character count between the two limits",
                    ),
                ],
                vec![
                    ("A".into(), "M1".into()),
                    ("M1".into(), "M2".into()),
                    ("A".into(), "M3".into()),
                    ("M3".into(), "M4".into()),
                    ("B".into(), "M4".into()),
                    ("M2".into(), "S".into()),
                    ("M4".into(), "S".into()),
                ],
            )
        }
        ArchClass::Words => {
            let base = pool.draw_int(rng, 48, 100)?;
            Erg::new(
                vec![
                    knowledge("A", base),
                    ErgNode::math(
                        "M",
                        OperationKind::Subtraction,
                        vec![Num::from_int(8)],
                        "subtract eight to settle the word floor",
                    ),
                    ErgNode::conditional(
                        "S",
                        ConditionKind::NoLessThan,
                        DimensionKind::WordCount,
                        vec![],
                        "require at least that many words",
                    ),
                ],
                vec![("A".into(), "M".into()), ("M".into(), "S".into())],
            )
        }
        ArchClass::Punct => {
            if rng.gen_bool(0.5) {
                Erg::new(
                    vec![ErgNode::conditional(
                        "S",
                        ConditionKind::PositiveIntegerMultipleOf,
                        DimensionKind::PunctuationCount,
                        vec![ParamValue::Dim(DimensionKind::SentenceCount)],
                        "make the punctuation total a positive multiple of the sentence count",
                    )],
                    vec![],
                )
            } else {
                let base = pool.draw_int(rng, 8, 16)?;
                Erg::new(
                    vec![
                        knowledge("A", base),
                        ErgNode::conditional(
                            "S",
                            ConditionKind::NoLessThan,
                            DimensionKind::PunctuationCount,
                            vec![],
                            "require at least that many punctuation marks",
                        ),
                    ],
                    vec![("A".into(), "S".into())],
                )
            }
        }
        ArchClass::Structure => {
            let variant_cap = if allow_line { 4 } else { 3 };
            match rng.gen_range(0..variant_cap) {
                0 => {
                    // Sentence window around a small fact plus a full type mix.
                    let base = pool.draw_int(rng, 3, 6)?;
                    Erg::new(
                        vec![
                            knowledge("A", base),
                            ErgNode::math(
                                "M1",
                                OperationKind::Subtraction,
                                vec![Num::from_int(1)],
                                "one fewer settles the lower sentence bound",
                            ),
                            ErgNode::math(
                                "M2",
                                OperationKind::Addition,
                                vec![Num::from_int(1)],
                                "one more settles the upper sentence bound",
                            ),
                            ErgNode::conditional(
                                "S1",
                                ConditionKind::Interval,
                                DimensionKind::SentenceCount,
                                vec![],
                                "keep the sentence count inside the window",
                            ),
                            ErgNode::conditional(
                                "S2",
                                ConditionKind::Required,
                                DimensionKind::SentenceTypeMix,
                                vec![ParamValue::Text("declarative".into())],
                                "use at least one declarative sentence",
                            ),
                            ErgNode::conditional(
                                "S3",
                                ConditionKind::Required,
                                DimensionKind::SentenceTypeMix,
                                vec![ParamValue::Text("interrogative".into())],
                                "use at least one interrogative sentence",
                            ),
                            ErgNode::conditional(
                                "S4",
                                ConditionKind::Required,
                                DimensionKind::SentenceTypeMix,
                                vec![ParamValue::Text("exclamatory".into())],
                                "use at least one exclamatory sentence",
                            ),
                        ],
                        vec![
                            ("A".into(), "M1".into()),
                            ("A".into(), "M2".into()),
                            ("M1".into(), "S1".into()),
                            ("M2".into(), "S1".into()),
                        ],
                    )
                }
                1 => {
                    let cap = pool.draw_int(rng, 6, 40)?;
                    Erg::new(
                        vec![
                            knowledge("A", cap),
                            ErgNode::conditional(
                                "S1",
                                ConditionKind::ConsecutiveFibonacciTerms,
                                DimensionKind::PerParagraphSentenceCounts,
                                vec![],
                                "shape the per-paragraph sentence counts into a Fibonacci run",
                            ),
                            ErgNode::conditional(
                                "S2",
                                ConditionKind::MaximumValue,
                                DimensionKind::PerParagraphSentenceCounts,
                                vec![],
                                "cap every paragraph's sentence count",
                            ),
                        ],
                        vec![("A".into(), "S2".into())],
                    )
                }
                2 => {
                    let cap = pool.draw_int(rng, 2, 10)?;
                    Erg::new(
                        vec![
                            knowledge("A", cap),
                            ErgNode::conditional(
                                "S",
                                ConditionKind::NoMoreThan,
                                DimensionKind::ParagraphCount,
                                vec![],
                                "keep the paragraph count at or under it",
                            ),
                        ],
                        vec![("A".into(), "S".into())],
                    )
                }
                _ => {
                    let floor = pool.draw_int(rng, 3, 6)?;
                    Erg::new(
                        vec![
                            knowledge("A", floor),
                            ErgNode::conditional(
                                "S",
                                ConditionKind::NoLessThan,
                                DimensionKind::LineCount,
                                vec![],
                                "spread the reply over at least that many lines",
                            ),
                        ],
                        vec![("A".into(), "S".into())],
                    )
                }
            }
        }
        ArchClass::List => {
            let forbidden = pool.draw_int(rng, 5, 12)?;
            Erg::new(
                vec![
                    knowledge("K", forbidden),
                    ErgNode::conditional(
                        "S1",
                        ConditionKind::NotEqualTo,
                        DimensionKind::UnorderedListItemCount,
                        vec![],
                        "keep the item count different from it",
                    ),
                    ErgNode::conditional(
                        "S2",
                        ConditionKind::StrictlyAscendingByLength,
                        DimensionKind::UnorderedListItems,
                        vec![],
                        "arrange the items in strictly ascending character length",
                    ),
                ],
                vec![("K".into(), "S1".into())],
            )
        }
        ArchClass::Bold => {
            if rng.gen_bool(0.5) {
                Erg::new(
                    vec![
                        ErgNode::conditional(
                            "S1",
                            ConditionKind::NoLessThan,
                            DimensionKind::BoldWordCount,
                            vec![ParamValue::int(1)],
                            "bold at least one word",
                        ),
                        ErgNode::conditional(
                            "S2",
                            ConditionKind::NotEqualTo,
                            DimensionKind::BoldWordCount,
                            vec![ParamValue::Class(IntClass::Prime)],
                            "keep the bold word count non-prime",
                        ),
                        ErgNode::conditional(
                            "S3",
                            ConditionKind::NotEqualTo,
                            DimensionKind::BoldWordCount,
                            vec![ParamValue::Class(IntClass::Even)],
                            "keep the bold word count odd",
                        ),
                        ErgNode::conditional(
                            "S4",
                            ConditionKind::EqualTo,
                            DimensionKind::BoldWordSet,
                            vec![ParamValue::Dim(DimensionKind::BoldWordCount)],
                            "never repeat a bold word",
                        ),
                    ],
                    vec![],
                )
            } else {
                let count = pool.draw_int(rng, 2, 5)?;
                Erg::new(
                    vec![
                        knowledge("K", count),
                        ErgNode::conditional(
                            "S1",
                            ConditionKind::EqualTo,
                            DimensionKind::BoldWordCount,
                            vec![],
                            "bold exactly that many words",
                        ),
                        ErgNode::conditional(
                            "S2",
                            ConditionKind::EqualTo,
                            DimensionKind::BoldWordSet,
                            vec![ParamValue::Dim(DimensionKind::BoldWordCount)],
                            "never repeat a bold word",
                        ),
                    ],
                    vec![("K".into(), "S1".into())],
                )
            }
        }
        ArchClass::Keywords => {
            let term = KEYWORD_TERMS[rng.gen_range(0..KEYWORD_TERMS.len())];
            let floor = pool.draw_int(rng, 2, 5)?;
            Erg::new(
                vec![
                    knowledge("K", floor),
                    ErgNode::conditional(
                        "S1",
                        ConditionKind::NoLessThan,
                        DimensionKind::KeywordCount,
                        vec![],
                        "repeat the keyword at least that many times",
                    ),
                    ErgNode::conditional(
                        "S2",
                        ConditionKind::Required,
                        DimensionKind::KeywordSet,
                        vec![ParamValue::Text(term.into())],
                        "mention the designated keyword",
                    ),
                ],
                vec![("K".into(), "S1".into())],
            )
        }
        ArchClass::Framing => {
            if rng.gen_bool(0.5) {
                let phrase = BEGIN_PHRASES[rng.gen_range(0..BEGIN_PHRASES.len())];
                Erg::new(
                    vec![ErgNode::conditional(
                        "S",
                        ConditionKind::Required,
                        DimensionKind::BeginningOfReply,
                        vec![ParamValue::Text(phrase.into())],
                        "open the reply with the set phrase",
                    )],
                    vec![],
                )
            } else {
                let phrase = END_PHRASES[rng.gen_range(0..END_PHRASES.len())];
                Erg::new(
                    vec![ErgNode::conditional(
                        "S",
                        ConditionKind::Required,
                        DimensionKind::EndingOfReply,
                        vec![ParamValue::Text(phrase.into())],
                        "close the reply with the set phrase",
                    )],
                    vec![],
                )
            }
        }
        ArchClass::Brackets => {
            let cap = pool.draw_int(rng, 4, 12)?;
            Erg::new(
                vec![
                    knowledge("K", cap),
                    ErgNode::conditional(
                        "S1",
                        ConditionKind::NoMoreThan,
                        DimensionKind::BracketedTermCount,
                        vec![],
                        "cap the bracketed terms at it",
                    ),
                    ErgNode::conditional(
                        "S2",
                        ConditionKind::NoLessThan,
                        DimensionKind::BracketedTermCount,
                        vec![ParamValue::int(2)],
                        "enclose at least two terms in square brackets",
                    ),
                ],
                vec![("K".into(), "S1".into())],
            )
        }
    };
    evaluate_graph(&erg, banks).ok()
}

/// Samples one jointly realizable constraint set of the given size,
/// gated through the consistency judge and the compatibility selector.
fn sample_constraints(
    synth: &Synthesizer<'_>,
    level: Level,
    rng: &mut ChaCha8Rng,
    witness_seed: u64,
) -> Result<Vec<EvaluatedConstraint>, SynthesisError> {
    let want = level.constraint_count();
    for _ in 0..12 {
        let mut classes = ALL_CLASSES.to_vec();
        classes.shuffle(rng);
        classes.truncate(want);
        let allow_line = !classes.contains(&ArchClass::List);
        let mut pool = FactPool::new(synth.banks);
        let mut constraints = Vec::new();
        for class in &classes {
            if let Some(ec) = build_archetype(*class, synth.banks, &mut pool, rng, allow_line) {
                constraints.push(ec);
            }
        }
        if constraints.len() != want {
            continue;
        }
        // Consistency gate per candidate, then the compatibility selector
        // over the set.
        let mut texts = Vec::new();
        let mut kept = Vec::new();
        for ec in constraints {
            let rendered = synth.render_constraint_nl(&ec)?;
            match synth.filter_consistency(&rendered.constraint_text)? {
                ConsistencyVerdict::Accept => {
                    texts.push(rendered.constraint_text);
                    kept.push(ec);
                }
                ConsistencyVerdict::Reject { .. } => {}
            }
        }
        if kept.len() != want {
            continue;
        }
        if want > 1 {
            let selected = synth.select_compatible(&texts, want)?;
            if selected.len() != want {
                continue;
            }
            let mut picked: Vec<EvaluatedConstraint> = Vec::new();
            for index in selected {
                picked.push(kept[index].clone());
            }
            kept = picked;
        }
        // A canonical witness must exist before the set ships; the same
        // seed is used again when the record is assembled.
        let keywords = super::collect_keywords(&kept)?;
        if build_canonical_response(&kept, &keywords, witness_seed).is_ok() {
            return Ok(kept);
        }
    }
    Err(SynthesisError::Build(format!(
        "could not sample a realizable {} constraint set",
        level.name()
    )))
}

fn cot_set(instruction: &Instruction) -> CotSet {
    CotSet {
        original: expand_cot(instruction, CotPattern::Original),
        structured: expand_cot(instruction, CotPattern::Structured),
        erg: expand_cot(instruction, CotPattern::Erg),
    }
}

/// Generates a dataset: `count_per_level` records per requested level.
/// Byte-deterministic for a fixed config and mock gateway.
pub fn generate_dataset(
    synth: &Synthesizer<'_>,
    config: &GeneratorConfig,
) -> Result<Vec<DatasetRecord>, SynthesisError> {
    let mut records = Vec::new();
    for (level_index, &level) in config.levels.iter().enumerate() {
        for index in 0..config.count_per_level {
            let record_seed = config
                .seed
                .wrapping_add((level_index as u64) << 40)
                .wrapping_add(index as u64)
                .wrapping_mul(0x9e3779b97f4a7c15);
            let mut rng = ChaCha8Rng::seed_from_u64(record_seed);
            let shape = match config.turn_shape {
                TurnShape::Single => TurnShape::Single,
                TurnShape::System => TurnShape::System,
                TurnShape::Accumulated => TurnShape::Accumulated,
                TurnShape::Mixed => match index % 3 {
                    0 => TurnShape::Single,
                    1 => TurnShape::System,
                    _ => TurnShape::Accumulated,
                },
            };
            let constraints = sample_constraints(synth, level, &mut rng, record_seed)?;
            let query = QUERY_BANK[rng.gen_range(0..QUERY_BANK.len())];
            let record = match shape {
                TurnShape::Single | TurnShape::Mixed => {
                    build_single_record(synth, config, constraints, query, level, record_seed)?
                }
                TurnShape::System => build_dialogue_record(
                    synth,
                    config,
                    constraints,
                    level,
                    record_seed,
                    &mut rng,
                    true,
                )?,
                TurnShape::Accumulated => build_dialogue_record(
                    synth,
                    config,
                    constraints,
                    level,
                    record_seed,
                    &mut rng,
                    false,
                )?,
            };
            let id = format!(
                "{}-{}-{:04}",
                level.name().to_lowercase(),
                match &record.payload {
                    RecordPayload::SingleTurn { .. } => "single",
                    RecordPayload::MultiTurn { .. } => "multi",
                },
                records.len()
            );
            records.push(DatasetRecord { id, ..record });
        }
    }
    Ok(records)
}

fn provenance(synth: &Synthesizer<'_>, seed: u64) -> Provenance {
    Provenance {
        seed,
        template_version: crate::TEMPLATE_VERSION,
        rules_version: crate::RULES_VERSION,
        bank_version: synth.banks.version.clone(),
        model_id: synth.model.clone(),
    }
}

fn specs_and_rubrics(
    constraints: &[EvaluatedConstraint],
) -> Result<(Vec<String>, Vec<String>), SynthesisError> {
    let mut specs = Vec::new();
    let mut rubrics = Vec::new();
    for ec in constraints {
        specs.push(export_verifier_spec(&compile_constraint(ec)?));
        rubrics.push(ec.rubric.clone());
    }
    Ok((specs, rubrics))
}

fn build_single_record(
    synth: &Synthesizer<'_>,
    _config: &GeneratorConfig,
    constraints: Vec<EvaluatedConstraint>,
    query: &str,
    level: Level,
    seed: u64,
) -> Result<DatasetRecord, SynthesisError> {
    let instruction = synth.compose_single_turn(constraints, query)?;
    let canonical_response =
        build_canonical_response(&instruction.constraints, &instruction.keywords, seed)?;
    let (verifier_specs, rubrics) = specs_and_rubrics(&instruction.constraints)?;
    Ok(DatasetRecord {
        id: String::new(),
        difficulty: level,
        verifier_specs,
        rubrics,
        cot: cot_set(&instruction),
        canonical_response,
        provenance: provenance(synth, seed),
        payload: RecordPayload::SingleTurn { instruction },
    })
}

fn build_dialogue_record(
    synth: &Synthesizer<'_>,
    config: &GeneratorConfig,
    constraints: Vec<EvaluatedConstraint>,
    level: Level,
    seed: u64,
    rng: &mut ChaCha8Rng,
    system_shape: bool,
) -> Result<DatasetRecord, SynthesisError> {
    let mut dialogue = if system_shape {
        synth.build_system_dialogue(constraints.clone(), config.dialogue_turns.max(1))?
    } else {
        // Spread constraints over consecutive user turns, leaving a
        // constraint-free follow-up turn that adversarial injection can
        // safely replace.
        let mut schedule = std::collections::BTreeMap::new();
        for (i, ec) in constraints.iter().enumerate() {
            schedule.insert(i * 2, vec![ec.clone()]);
        }
        schedule.insert(constraints.len() * 2, Vec::new());
        synth.build_accumulated_dialogue(schedule)?
    };
    if rng.gen_bool(config.adversarial_fraction.clamp(0.0, 1.0)) {
        let category = super::AdversarialCategory::ALL
            [rng.gen_range(0..super::AdversarialCategory::ALL.len())];
        dialogue = synth.inject_adversarial(dialogue, category)?;
    }
    let canonical_response = build_canonical_response(&constraints, &dialogue.keywords, seed)?;
    let (verifier_specs, mut rubrics) = specs_and_rubrics(&constraints)?;
    rubrics.extend(dialogue.rubric_texts.iter().cloned());

    // Thinking traces expand over the final active constraint set.
    let active: Vec<EvaluatedConstraint> = dialogue
        .final_active_constraints()
        .into_iter()
        .cloned()
        .collect();
    let texts: Vec<String> = active
        .iter()
        .map(|ec| super::nl::render_template_text(ec, synth.banks))
        .collect();
    let rubric_texts: Vec<String> = active.iter().map(|ec| ec.rubric.clone()).collect();
    let last_user = dialogue
        .turns
        .iter()
        .rev()
        .find(|t| t.role == crate::gateway::Role::User)
        .map(|t| t.text.clone())
        .unwrap_or_default();
    let prompt = format!(
        "{}\n{}",
        texts
            .iter()
            .enumerate()
            .map(|(i, t)| format!("{}: {}", i + 1, t))
            .collect::<Vec<_>>()
            .join("\n"),
        last_user
    );
    let pseudo = Instruction {
        keywords: dialogue.keywords.clone(),
        difficulty: level,
        query: last_user,
        rendered_prompt: prompt,
        constraint_texts: texts,
        rubric_texts,
        constraints: active,
    };
    Ok(DatasetRecord {
        id: String::new(),
        difficulty: level,
        verifier_specs,
        rubrics,
        cot: cot_set(&pseudo),
        canonical_response,
        provenance: provenance(synth, seed),
        payload: RecordPayload::MultiTurn { dialogue },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::banks::default_banks;
    use crate::gateway::MockGateway;

    fn small_config() -> GeneratorConfig {
        GeneratorConfig {
            seed: 7,
            levels: vec![Level::L1, Level::L3],
            count_per_level: 3,
            turn_shape: TurnShape::Mixed,
            adversarial_fraction: 0.5,
            dialogue_turns: 2,
        }
    }

    #[test]
    fn generation_is_deterministic_and_canonically_valid() {
        let banks = default_banks().unwrap();
        let gateway = MockGateway;
        let synth = Synthesizer::new(&banks, &gateway);
        let config = small_config();
        let a = generate_dataset(&synth, &config).unwrap();
        let b = generate_dataset(&synth, &config).unwrap();
        let bytes_a = serde_json::to_string(&a).unwrap();
        let bytes_b = serde_json::to_string(&b).unwrap();
        assert_eq!(bytes_a, bytes_b);
        assert_eq!(a.len(), 6);

        for record in &a {
            assert_eq!(record.verifier_specs.len(), record.difficulty.constraint_count());
            let report = match &record.payload {
                RecordPayload::SingleTurn { instruction } => {
                    instruction.validate().unwrap();
                    instruction.verify(&record.canonical_response).unwrap()
                }
                RecordPayload::MultiTurn { dialogue } => {
                    dialogue.validate().unwrap();
                    dialogue.verify_final(&record.canonical_response).unwrap()
                }
            };
            assert!(
                report.constraint_verdicts.iter().all(|&v| v),
                "record {} canonical response fails: {:?}",
                record.id,
                report
            );
        }
    }

    #[test]
    fn adversarial_fraction_zero_and_one() {
        let banks = default_banks().unwrap();
        let gateway = MockGateway;
        let synth = Synthesizer::new(&banks, &gateway);
        let mut config = small_config();
        config.turn_shape = TurnShape::System;
        config.adversarial_fraction = 1.0;
        let all = generate_dataset(&synth, &config).unwrap();
        assert!(all.iter().all(|r| matches!(
            &r.payload,
            RecordPayload::MultiTurn { dialogue } if dialogue.adversarial.is_some()
        )));
        config.adversarial_fraction = 0.0;
        let none = generate_dataset(&synth, &config).unwrap();
        assert!(none.iter().all(|r| matches!(
            &r.payload,
            RecordPayload::MultiTurn { dialogue } if dialogue.adversarial.is_none()
        )));
    }
}
