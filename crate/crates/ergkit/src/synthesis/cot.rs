//! Chain-of-thought expansion. The graph-ordered pattern walks every
//! constraint's dependency graph root to leaf, expands each derivation in
//! parent-to-child order, coordinates across constraints, and closes with a
//! self-check — all by deterministic template, so traces are reproducible
//! offline.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::graph::{topo_order, Erg, NodePayload};

use super::Instruction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CotPattern {
    Original,
    Structured,
    Erg,
}

impl CotPattern {
    pub const ALL: [CotPattern; 3] = [CotPattern::Original, CotPattern::Structured, CotPattern::Erg];

    pub fn name(&self) -> &'static str {
        match self {
            CotPattern::Original => "original",
            CotPattern::Structured => "structured",
            CotPattern::Erg => "erg",
        }
    }
}

/// A thinking trace tied to its source instruction by prompt digest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CotTrace {
    pub pattern: CotPattern,
    pub text: String,
    pub source_digest: String,
}

/// Heading that opens the cross-constraint coordination step.
pub const COORDINATION_HEADING: &str = "Now I coordinate all requirements together";

/// Heading that opens the final self-check step.
pub const SELF_CHECK_HEADING: &str = "Finally, I check every requirement before answering";

fn prompt_digest(instruction: &Instruction) -> String {
    let mut hasher = Sha256::new();
    hasher.update(instruction.rendered_prompt.as_bytes());
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

const CONNECTIVES: [&str; 4] = ["First", "Then", "Next", "After that"];

/// Expands an instruction into the graph-ordered thinking pattern. Nodes
/// are mentioned by their descriptions in a stable topological order of
/// each constraint's graph; multi-constraint traces carry a coordination
/// paragraph, and every trace ends with a self-check.
pub fn expand_erg_cot(instruction: &Instruction) -> CotTrace {
    let mut out = String::from(
        "I will reason along each requirement's dependency graph before answering.\n",
    );
    for (index, ec) in instruction.constraints.iter().enumerate() {
        out.push_str(&format!(
            "\nRequirement {}: {}\n",
            index + 1,
            instruction
                .constraint_texts
                .get(index)
                .map(String::as_str)
                .unwrap_or("(unrendered)")
        ));
        let order = topo_order(&ec.source);
        for (step, node) in order.iter().enumerate() {
            let connective = if step + 1 == order.len() && order.len() > 1 {
                "So"
            } else {
                CONNECTIVES[step % CONNECTIVES.len()]
            };
            let detail = match &node.payload {
                NodePayload::Knowledge { .. } => ec
                    .resolved_values
                    .get(&node.id)
                    .map(|v| format!("the value is {v}"))
                    .unwrap_or_else(|| "the value is known".into()),
                NodePayload::Math { op, .. } => ec
                    .resolved_values
                    .get(&node.id)
                    .map(|v| format!("applying {} gives {v}", op.name()))
                    .unwrap_or_else(|| format!("applying {}", op.name())),
                NodePayload::Conditional { .. } => ec
                    .sinks
                    .iter()
                    .find(|s| s.node == node.id)
                    .map(|s| format!("the check becomes: {}", s.check.describe()))
                    .unwrap_or_else(|| "this feeds a combined check".into()),
            };
            out.push_str(&format!("{connective}, {}: {detail}.\n", node.description));
        }
    }
    if instruction.constraints.len() > 1 {
        let dims: Vec<String> = instruction
            .constraints
            .iter()
            .enumerate()
            .map(|(i, ec)| format!("requirement {} controls {}", i + 1, ec.dimension.phrase()))
            .collect();
        out.push_str(&format!(
            "\n{COORDINATION_HEADING}: {}. I plan a single draft that satisfies all of them at once rather than only a subset.\n",
            dims.join("; ")
        ));
    }
    out.push_str(&format!(
        "\n{SELF_CHECK_HEADING}: {} Once every check passes, I produce the final answer.\n",
        instruction
            .rubric_texts
            .iter()
            .map(|r| r.trim_end_matches('.').to_string() + ".")
            .collect::<Vec<_>>()
            .join(" ")
    ));
    CotTrace {
        pattern: CotPattern::Erg,
        text: out,
        source_digest: prompt_digest(instruction),
    }
}

fn expand_original(instruction: &Instruction) -> String {
    format!(
        "I need to answer: {}. I keep the requirements in mind: {} I draft an answer and check it once before replying.\n",
        instruction.query,
        instruction
            .constraint_texts
            .iter()
            .map(|t| t.trim_end_matches('.').to_string() + ".")
            .collect::<Vec<_>>()
            .join(" ")
    )
}

fn expand_structured(instruction: &Instruction) -> String {
    let mut out = format!(
        "1. Problem restatement: {} with {} requirements to satisfy.\n",
        instruction.query,
        instruction.constraints.len()
    );
    out.push_str("2. Constraint analysis:\n");
    for text in &instruction.constraint_texts {
        out.push_str(&format!("   - {text}\n"));
    }
    out.push_str(
        "3. Execution plan: settle the structural requirements first, then adjust the counts, then write the content.\n",
    );
    out.push_str(
        "4. Result validation: re-check each requirement against the draft before finalizing.\n",
    );
    out
}

/// Expands an instruction under any of the three thinking patterns.
pub fn expand_cot(instruction: &Instruction, pattern: CotPattern) -> CotTrace {
    match pattern {
        CotPattern::Erg => expand_erg_cot(instruction),
        CotPattern::Original => CotTrace {
            pattern,
            text: expand_original(instruction),
            source_digest: prompt_digest(instruction),
        },
        CotPattern::Structured => CotTrace {
            pattern,
            text: expand_structured(instruction),
            source_digest: prompt_digest(instruction),
        },
    }
}

/// Mechanical check that the first mention of each node description in a
/// trace respects the graph's edges (every parent mentioned before every
/// child). Returns a named reason on failure.
pub fn check_mention_order(trace: &str, erg: &Erg) -> Result<(), String> {
    let mut positions = std::collections::BTreeMap::new();
    for node in &erg.nodes {
        match trace.find(&node.description) {
            Some(pos) => {
                positions.insert(node.id.clone(), pos);
            }
            None => {
                return Err(format!(
                    "node {} description {:?} is not mentioned",
                    node.id, node.description
                ))
            }
        }
    }
    for (parent, child) in &erg.edges {
        let (Some(&p), Some(&c)) = (positions.get(parent), positions.get(child)) else {
            continue;
        };
        if p >= c {
            return Err(format!(
                "child {child} is mentioned before its parent {parent}"
            ));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::banks::{default_banks, ConditionKind, DimensionKind, OperationKind};
    use crate::gateway::MockGateway;
    use crate::graph::{evaluate_graph, Erg, ErgNode, ParamValue};
    use crate::numeric::Num;
    use crate::synthesis::Synthesizer;

    fn chain_constraint(banks: &crate::banks::Banks) -> crate::graph::EvaluatedConstraint {
        let erg = Erg::new(
            vec![
                ErgNode::knowledge("A", "galilean_moons", "recall the count of Galilean moons"),
                ErgNode::math(
                    "B",
                    OperationKind::Multiplication,
                    vec![Num::from_int(2)],
                    "double that count",
                ),
                ErgNode::conditional(
                    "C",
                    ConditionKind::NoMoreThan,
                    DimensionKind::SentenceCount,
                    vec![],
                    "cap the sentences at the doubled count",
                ),
            ],
            vec![("A".into(), "B".into()), ("B".into(), "C".into())],
        );
        evaluate_graph(&erg, banks).unwrap()
    }

    fn flat_constraint(banks: &crate::banks::Banks) -> crate::graph::EvaluatedConstraint {
        let erg = Erg::new(
            vec![ErgNode::conditional(
                "S",
                ConditionKind::NoLessThan,
                DimensionKind::WordCount,
                vec![ParamValue::int(5)],
                "require at least five words",
            )],
            vec![],
        );
        evaluate_graph(&erg, banks).unwrap()
    }

    #[test]
    fn chain_trace_mentions_nodes_in_topological_order() {
        let banks = default_banks().unwrap();
        let gateway = MockGateway;
        let synth = Synthesizer::new(&banks, &gateway);
        let instruction = synth
            .compose_single_turn(vec![chain_constraint(&banks)], "why?")
            .unwrap();
        let trace = expand_erg_cot(&instruction);
        check_mention_order(&trace.text, &instruction.constraints[0].source).unwrap();
        assert!(trace.text.contains("the value is 4"));
        assert!(trace.text.contains("gives 8"));
        assert!(trace.text.contains(SELF_CHECK_HEADING));
        assert!(!trace.text.contains(COORDINATION_HEADING));
    }

    #[test]
    fn multi_constraint_trace_coordinates() {
        let banks = default_banks().unwrap();
        let gateway = MockGateway;
        let synth = Synthesizer::new(&banks, &gateway);
        let instruction = synth
            .compose_single_turn(
                vec![chain_constraint(&banks), flat_constraint(&banks)],
                "plan?",
            )
            .unwrap();
        let trace = expand_erg_cot(&instruction);
        assert!(trace.text.contains(COORDINATION_HEADING));
        assert!(trace.text.contains(SELF_CHECK_HEADING));
        for ec in &instruction.constraints {
            check_mention_order(&trace.text, &ec.source).unwrap();
        }
    }

    #[test]
    fn degenerate_conditional_trace_has_one_step_plus_self_check() {
        let banks = default_banks().unwrap();
        let gateway = MockGateway;
        let synth = Synthesizer::new(&banks, &gateway);
        let instruction = synth
            .compose_single_turn(vec![flat_constraint(&banks)], "short?")
            .unwrap();
        let trace = expand_erg_cot(&instruction);
        let steps = trace
            .text
            .lines()
            .filter(|l| l.starts_with("First, "))
            .count();
        assert_eq!(steps, 1);
        assert!(trace.text.contains(SELF_CHECK_HEADING));
    }

    #[test]
    fn mention_checker_flags_missing_and_reordered() {
        let banks = default_banks().unwrap();
        let ec = chain_constraint(&banks);
        assert!(check_mention_order("no mentions at all", &ec.source).is_err());
        let reordered = "cap the sentences at the doubled count then double that count then recall the count of Galilean moons";
        assert!(check_mention_order(reordered, &ec.source).is_err());
    }

    #[test]
    fn all_three_patterns_render() {
        let banks = default_banks().unwrap();
        let gateway = MockGateway;
        let synth = Synthesizer::new(&banks, &gateway);
        let instruction = synth
            .compose_single_turn(vec![flat_constraint(&banks)], "q?")
            .unwrap();
        for pattern in CotPattern::ALL {
            let trace = expand_cot(&instruction, pattern);
            assert_eq!(trace.pattern, pattern);
            assert!(!trace.text.is_empty());
            assert_eq!(trace.source_digest.len(), 64);
        }
        let structured = expand_cot(&instruction, CotPattern::Structured);
        assert!(structured.text.contains("1. Problem restatement"));
        assert!(structured.text.contains("4. Result validation"));
    }
}
