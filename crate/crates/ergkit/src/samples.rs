//! Bundled worked samples used by tests, examples, and documentation: two
//! fully built instructions with reasoning graphs over the default banks,
//! plus a captured response that fails the first sample's constraints.

use crate::banks::{default_banks, Banks, ConditionKind, DimensionKind, OperationKind};
use crate::gateway::MockGateway;
use crate::graph::{Erg, ErgNode, IntClass, ParamValue};
use crate::numeric::Num;
use crate::synthesis::{Instruction, Synthesizer};

/// A bundled instruction sample with a known-bad response.
pub struct CaseSample {
    pub banks: Banks,
    pub instruction: Instruction,
    /// A response that violates at least one of the constraints.
    pub failing_response: &'static str,
}

/// Bold-count constraint: a positive, non-prime, non-even number of bold
/// words, none repeated.
pub fn bold_constraint_graph() -> Erg {
    Erg::new(
        vec![
            ErgNode::conditional(
                "A",
                ConditionKind::NoLessThan,
                DimensionKind::BoldWordCount,
                vec![ParamValue::int(1)],
                "bold a positive number of words",
            ),
            ErgNode::conditional(
                "B",
                ConditionKind::NotEqualTo,
                DimensionKind::BoldWordCount,
                vec![ParamValue::Class(IntClass::Prime)],
                "keep the bold word count non-prime",
            ),
            ErgNode::conditional(
                "C",
                ConditionKind::NotEqualTo,
                DimensionKind::BoldWordCount,
                vec![ParamValue::Class(IntClass::Even)],
                "keep the bold word count odd",
            ),
            ErgNode::conditional(
                "D",
                ConditionKind::EqualTo,
                DimensionKind::BoldWordSet,
                vec![ParamValue::Dim(DimensionKind::BoldWordCount)],
                "never repeat a bold word",
            ),
        ],
        vec![],
    )
}

/// List constraint: the item count differs from the number of octopus
/// brains and item lengths strictly ascend.
pub fn list_constraint_graph() -> Erg {
    Erg::new(
        vec![
            ErgNode::knowledge("K", "octopus_brains", "recall the number of brains of an octopus"),
            ErgNode::conditional(
                "S",
                ConditionKind::NotEqualTo,
                DimensionKind::UnorderedListItemCount,
                vec![],
                "keep the item count different from that number",
            ),
            ErgNode::conditional(
                "T",
                ConditionKind::StrictlyAscendingByLength,
                DimensionKind::UnorderedListItems,
                vec![],
                "arrange the items in ascending character length",
            ),
        ],
        vec![("K".into(), "S".into())],
    )
}

/// Character constraint: the count sits between twice the Cyrillic letter
/// count minus two and three times it plus the square's symmetry axes.
pub fn character_constraint_graph() -> Erg {
    Erg::new(
        vec![
            ErgNode::knowledge(
                "A",
                "cyrillic_letters",
                "recall the number of letters in the Cyrillic alphabet",
            ),
            ErgNode::knowledge(
                "B",
                "square_symmetry_axes",
                "recall the symmetry axes of a square",
            ),
            ErgNode::math(
                "M1",
                OperationKind::Multiplication,
                vec![Num::from_int(2)],
                "double the letter count",
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
                "triple the letter count",
            ),
            ErgNode::math(
                "M4",
                OperationKind::Addition,
                vec![],
                "add the symmetry axes to settle the upper limit",
            ),
            ErgNode::conditional(
                "S",
                ConditionKind::Interval,
                DimensionKind::CharacterCount,
                vec![],
                "keep the character count between the limits",
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

/// A captured reply to the requirements-document sample that misses its
/// targets: far too many characters, an even bold-span count, and list
/// items whose lengths do not strictly ascend.
pub const REQUIREMENTS_FAILING_RESPONSE: &str = "\
**Requirements Document** must address **Scope Definition**, **Stakeholder Needs**, \
**Functional Requirements**, **Non-functional Requirements**, **Constraints**, \
**Assumptions**, **Success Criteria**, **Risk Management**, and **Validation Methods**.

- Dependencies (11)
- Success Criteria (13)
- Scope Definition (14)
- Stakeholder Needs (16)
- Functional Requirements (20)
- Non-functional Requirements (22)
- Constraints and Assumptions (24)

The reply contains **9** bolded words (non-prime, non-even), a list of **7** items \
(!= octopus brains), and total characters within the range of **64-103**.";

/// The requirements-document sample: three implicit-reasoning constraints
/// (bold count, list shape, character window) over the default banks, plus
/// a bundled failing response.
pub fn requirements_case() -> CaseSample {
    let banks = default_banks().expect("default banks are well-formed");
    let instruction = {
        let gateway = MockGateway;
        let synth = Synthesizer::new(&banks, &gateway);
        let constraints = [
            bold_constraint_graph(),
            list_constraint_graph(),
            character_constraint_graph(),
        ]
        .iter()
        .map(|erg| crate::graph::evaluate_graph(erg, &banks).expect("sample graphs evaluate"))
        .collect();
        synth
            .compose_single_turn(
                constraints,
                "What key issues should be addressed in a requirements document?",
            )
            .expect("sample instruction composes")
    };
    CaseSample {
        banks,
        instruction,
        failing_response: REQUIREMENTS_FAILING_RESPONSE,
    }
}

/// A second sample in the embedded-systems setting: punctuation a positive
/// multiple of the sentence count; sentence count within one of the number
/// of Galilean moons with all three sentence types present; paragraphs
/// capped by the chess pawns per side.
pub fn realtime_tasks_case() -> CaseSample {
    let banks = default_banks().expect("default banks are well-formed");
    let punct = Erg::new(
        vec![ErgNode::conditional(
            "S",
            ConditionKind::PositiveIntegerMultipleOf,
            DimensionKind::PunctuationCount,
            vec![ParamValue::Dim(DimensionKind::SentenceCount)],
            "make the punctuation total a positive multiple of the sentence count",
        )],
        vec![],
    );
    let sentences = Erg::new(
        vec![
            ErgNode::knowledge("A", "galilean_moons", "recall the number of Galilean moons"),
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
    );
    let paragraphs = Erg::new(
        vec![
            ErgNode::knowledge(
                "K",
                "chess_pawns_per_side",
                "recall the number of pawns per side in chess",
            ),
            ErgNode::conditional(
                "S",
                ConditionKind::NoMoreThan,
                DimensionKind::ParagraphCount,
                vec![],
                "keep the paragraph count at or under it",
            ),
        ],
        vec![("K".into(), "S".into())],
    );
    let instruction = {
        let gateway = MockGateway;
        let synth = Synthesizer::new(&banks, &gateway);
        let constraints = [punct, sentences, paragraphs]
            .iter()
            .map(|erg| crate::graph::evaluate_graph(erg, &banks).expect("sample graphs evaluate"))
            .collect();
        synth
            .compose_single_turn(
                constraints,
                "How to optimize the response speed of real-time tasks in an embedded system?",
            )
            .expect("sample instruction composes")
    };
    CaseSample {
        banks,
        instruction,
        failing_response: "Long unbroken prose with no structure at all",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Check;

    #[test]
    fn requirements_case_parameters_resolve_as_stated() {
        let case = requirements_case();
        let checks: Vec<Check> = case
            .instruction
            .constraints
            .iter()
            .map(|ec| ec.combined_check())
            .collect();
        // Character window [64, 103].
        assert!(matches!(
            &case.instruction.constraints[2].sinks[0].check,
            Check::Leaf { params, .. }
                if params == &vec![ParamValue::int(64), ParamValue::int(103)]
        ));
        // List count parameter 9.
        assert!(matches!(
            &case.instruction.constraints[1].sinks[0].check,
            Check::Leaf { params, .. } if params == &vec![ParamValue::int(9)]
        ));
        assert_eq!(checks.len(), 3);
    }

    #[test]
    fn failing_response_fails() {
        let case = requirements_case();
        let report = case
            .instruction
            .verify(case.failing_response)
            .expect("constraints compile");
        assert!(report.constraint_verdicts.iter().any(|&v| !v));
    }
}
