//! Natural-language rendering of evaluated constraints: the constraint text
//! names the knowledge questions and hides the multi-hop derivation, never
//! stating a fact's answer.

use crate::banks::{lookup_fact, Banks, ConditionKind};
use crate::graph::{Check, Erg, EvaluatedConstraint, NodeId, NodePayload, ParamValue};

use super::SynthesisError;

/// Rendered instruction-facing text plus the verifier-facing rubric.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedConstraint {
    pub constraint_text: String,
    pub rubric_text: String,
}

/// Phrase describing how a node's value is derived, without revealing any
/// fact answer. Compound derivations are parenthesized when nested.
fn derivation_phrase(erg: &Erg, banks: &Banks, id: &NodeId, nested: bool) -> String {
    let Some(node) = erg.node(id) else {
        return id.to_string();
    };
    match &node.payload {
        NodePayload::Knowledge { fact_id } => match lookup_fact(banks, fact_id) {
            Ok(fact) => fact.question.clone(),
            Err(_) => node.description.clone(),
        },
        NodePayload::Math { op, literals } => {
            let mut operands: Vec<String> = erg
                .parents_of(id)
                .iter()
                .map(|p| derivation_phrase(erg, banks, p, true))
                .collect();
            operands.extend(literals.iter().map(|n| n.to_string()));
            let joined = operands.join(&format!(" {} ", op.connective()));
            if nested && operands.len() > 1 {
                format!("({joined})")
            } else {
                joined
            }
        }
        NodePayload::Conditional { .. } => node.description.clone(),
    }
}

/// Maps each parameter of a sink conditional back to the phrase of the node
/// (or literal) it came from. Parents fill the leading slots in edge order,
/// literals the rest.
fn param_phrases(erg: &Erg, banks: &Banks, sink: &NodeId, params: &[ParamValue]) -> Vec<String> {
    let parents = erg.parents_of(sink);
    params
        .iter()
        .enumerate()
        .map(|(i, p)| match parents.get(i) {
            Some(parent) => derivation_phrase(erg, banks, parent, false),
            None => match p {
                ParamValue::Num(n) => n.to_string(),
                ParamValue::Text(t) => format!("\"{t}\""),
                ParamValue::Dim(d) => d.phrase().to_string(),
                ParamValue::Class(c) => c.phrase().to_string(),
            },
        })
        .collect()
}

fn condition_clause(condition: ConditionKind, params: &[String], raw: &[ParamValue]) -> String {
    let p = |i: usize| params.get(i).cloned().unwrap_or_else(|| "?".into());
    match condition {
        ConditionKind::NoMoreThan => format!("must be no more than {}", p(0)),
        ConditionKind::NoLessThan => format!("must be no less than {}", p(0)),
        ConditionKind::Interval => {
            format!(
                "must be within the closed interval from {} to {}",
                p(0),
                p(1)
            )
        }
        ConditionKind::EqualTo => match raw.first() {
            Some(ParamValue::Class(c)) => format!("must be {}", c.phrase()),
            _ => format!("must be equal to {}", p(0)),
        },
        ConditionKind::NotEqualTo => match raw.first() {
            Some(ParamValue::Class(c)) => format!("must not be {}", c.phrase()),
            _ => format!("must not be equal to {}", p(0)),
        },
        ConditionKind::Forbidden => format!("must not include {}", p(0)),
        ConditionKind::Required => format!("must include {}", p(0)),
        ConditionKind::LogicalAnd => "must satisfy every combined requirement".into(),
        ConditionKind::LogicalOr => "must satisfy at least one combined requirement".into(),
        ConditionKind::MaximumValue => format!("must contain no value above {}", p(0)),
        ConditionKind::MinimumValue => format!("must contain no value below {}", p(0)),
        ConditionKind::PositiveIntegerMultipleOf => {
            format!("must be a positive integer multiple of {}", p(0))
        }
        ConditionKind::StrictlyAscendingByLength => {
            "must be arranged in strictly ascending order of character count".into()
        }
        ConditionKind::ConsecutiveFibonacciTerms => {
            "must form consecutive terms of the Fibonacci sequence".into()
        }
    }
}

fn clause_for_check(
    erg: &Erg,
    banks: &Banks,
    sink: &NodeId,
    check: &Check,
) -> String {
    match check {
        Check::Leaf {
            dimension,
            condition,
            params,
        } => {
            let phrases = param_phrases(erg, banks, sink, params);
            format!(
                "{} {}",
                dimension.short_phrase(),
                condition_clause(*condition, &phrases, params)
            )
        }
        Check::All(children) => children
            .iter()
            .map(|c| clause_for_check(erg, banks, sink, c))
            .collect::<Vec<_>>()
            .join(", and "),
        Check::Any(children) => children
            .iter()
            .map(|c| clause_for_check(erg, banks, sink, c))
            .collect::<Vec<_>>()
            .join(", or "),
    }
}

/// Renders the constraint text from its graph. Always starts with
/// "In the reply"; knowledge questions appear verbatim, answers never do.
pub fn render_template_text(ec: &EvaluatedConstraint, banks: &Banks) -> String {
    let clauses: Vec<String> = ec
        .sinks
        .iter()
        .map(|s| {
            // Combinator sinks bind parameters at their leaf parents, so the
            // parent mapping walks each leaf's own node.
            match &s.check {
                Check::All(_) | Check::Any(_) => clause_for_combinator(ec, banks, &s.check),
                leaf => clause_for_check(&ec.source, banks, &s.node, leaf),
            }
        })
        .collect();
    format!("In the reply, {}.", clauses.join("; additionally, "))
}

fn clause_for_combinator(ec: &EvaluatedConstraint, banks: &Banks, check: &Check) -> String {
    match check {
        Check::All(children) => children
            .iter()
            .map(|c| clause_for_combinator(ec, banks, c))
            .collect::<Vec<_>>()
            .join(", and "),
        Check::Any(children) => children
            .iter()
            .map(|c| clause_for_combinator(ec, banks, c))
            .collect::<Vec<_>>()
            .join(", or "),
        Check::Leaf { .. } => {
            // Leaves of a combinator sink were bound at their own conditional
            // nodes; find the node carrying this exact check for the parent
            // mapping.
            let owner = ec
                .source
                .nodes
                .iter()
                .find(|n| {
                    matches!(&n.payload, NodePayload::Conditional { .. })
                        && check_of_node(ec, &n.id).as_ref() == Some(check)
                })
                .map(|n| n.id.clone());
            match owner {
                Some(id) => clause_for_check(&ec.source, banks, &id, check),
                None => clause_for_check(&ec.source, banks, &ec.sinks[0].node, check),
            }
        }
    }
}

fn check_of_node(ec: &EvaluatedConstraint, id: &NodeId) -> Option<Check> {
    // Reconstructs the leaf check a conditional node produced, mirroring
    // evaluation's parent-then-literal binding.
    let node = ec.source.node(id)?;
    let NodePayload::Conditional {
        condition,
        dimension,
        literals,
    } = &node.payload
    else {
        return None;
    };
    if condition.is_combinator() {
        return None;
    }
    let mut params: Vec<ParamValue> = Vec::new();
    for parent in ec.source.parents_of(id) {
        match ec.resolved_values.get(parent) {
            Some(crate::graph::Value::Num(n)) => params.push(ParamValue::Num(*n)),
            Some(crate::graph::Value::Text(t)) => params.push(ParamValue::Text(t.clone())),
            None => return None,
        }
    }
    params.extend(literals.iter().cloned());
    Some(Check::Leaf {
        dimension: *dimension,
        condition: *condition,
        params,
    })
}

/// Screens rendered text for leaked fact answers: a fact's canonical answer
/// appearing within 40 characters of its question mention is a leak.
pub fn screen_for_leaks(
    text: &str,
    ec: &EvaluatedConstraint,
    banks: &Banks,
) -> Result<(), SynthesisError> {
    let lowered = text.to_lowercase();
    for node in &ec.source.nodes {
        let NodePayload::Knowledge { fact_id } = &node.payload else {
            continue;
        };
        let Ok(fact) = lookup_fact(banks, fact_id) else {
            continue;
        };
        let question = fact.question.to_lowercase();
        let answer = fact.answer.literal().to_lowercase();
        if question.is_empty() || answer.is_empty() {
            continue;
        }
        let mut search_from = 0;
        while let Some(found) = lowered[search_from..].find(&question) {
            let start = search_from + found;
            let end = start + question.len();
            let window_start = start.saturating_sub(40);
            let window_end = (end + 40).min(lowered.len());
            // Byte offsets are fine here: both needles are lowercase ASCII
            // in the shipped bank, and a miss only widens the window.
            let window = lowered
                .get(window_start..window_end)
                .unwrap_or(&lowered[start..end]);
            if window.contains(&answer) {
                return Err(SynthesisError::Leakage {
                    fact_id: fact_id.clone(),
                });
            }
            search_from = end;
        }
    }
    Ok(())
}

/// Template-route rendering with leakage screening.
pub fn render_constraint_text(
    ec: &EvaluatedConstraint,
    banks: &Banks,
) -> Result<RenderedConstraint, SynthesisError> {
    let constraint_text = render_template_text(ec, banks);
    screen_for_leaks(&constraint_text, ec, banks)?;
    Ok(RenderedConstraint {
        constraint_text,
        rubric_text: ec.rubric.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::banks::{default_banks, DimensionKind, OperationKind};
    use crate::graph::{evaluate_graph, ErgNode};
    use crate::numeric::Num;

    fn cube_interval_constraint(banks: &Banks) -> EvaluatedConstraint {
        let erg = Erg::new(
            vec![
                ErgNode::knowledge("A", "cube_faces", "recall the number of faces of a cube"),
                ErgNode::math(
                    "M",
                    OperationKind::Multiplication,
                    vec![Num::from_int(2)],
                    "double it",
                ),
                ErgNode::conditional(
                    "S",
                    ConditionKind::Interval,
                    DimensionKind::SentenceCount,
                    vec![],
                    "bound the sentence count",
                ),
            ],
            vec![
                ("A".into(), "S".into()),
                ("A".into(), "M".into()),
                ("M".into(), "S".into()),
            ],
        );
        evaluate_graph(&erg, banks).unwrap()
    }

    #[test]
    fn rendered_text_names_question_not_answer() {
        let banks = default_banks().unwrap();
        let ec = cube_interval_constraint(&banks);
        let rendered = render_constraint_text(&ec, &banks).unwrap();
        assert!(rendered.constraint_text.starts_with("In the reply, "));
        assert!(rendered
            .constraint_text
            .contains("the number of faces of a cube"));
        assert!(!rendered.constraint_text.contains('6'));
        // The rubric is verifier-facing and carries the resolved bounds.
        assert!(rendered.rubric_text.contains('6'));
        assert!(rendered.rubric_text.contains("12"));
    }

    #[test]
    fn leak_screening_catches_adjacent_answers() {
        let banks = default_banks().unwrap();
        let ec = cube_interval_constraint(&banks);
        let leaky = "In the reply, sentences must match the number of faces of a cube, which is 6.";
        assert!(matches!(
            screen_for_leaks(leaky, &ec, &banks),
            Err(SynthesisError::Leakage { .. })
        ));
        let distant = format!(
            "In the reply, sentences relate to the number of faces of a cube.{} 6 appears far away",
            " filler".repeat(10)
        );
        assert!(screen_for_leaks(&distant, &ec, &banks).is_ok());
    }

    #[test]
    fn fibonacci_clause_mentions_the_sequence() {
        let banks = default_banks().unwrap();
        let erg = Erg::new(
            vec![ErgNode::conditional(
                "S",
                ConditionKind::ConsecutiveFibonacciTerms,
                DimensionKind::PerParagraphSentenceCounts,
                vec![],
                "paragraph sentence counts form a Fibonacci run",
            )],
            vec![],
        );
        let ec = evaluate_graph(&erg, &banks).unwrap();
        let rendered = render_constraint_text(&ec, &banks).unwrap();
        assert!(rendered
            .constraint_text
            .contains("consecutive terms of the Fibonacci sequence"));
    }
}
