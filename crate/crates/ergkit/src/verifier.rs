//! Compiles evaluated constraints into executable predicates over
//! measurements and produces per-constraint verification reports.
//!
//! Predicates are native compiled checks rather than generated validator
//! scripts; [`export_verifier_spec`] emits a portable description of any
//! predicate (dimension, condition, parameters, measurement-rules version)
//! sufficient for an external reimplementation, and
//! [`parse_verifier_spec`] reads it back.

use std::fmt;

use thiserror::Error;

use crate::analysis::ResponseMeasurements;
use crate::banks::{ConditionKind, DimensionKind, MeasurementKind};
use crate::graph::{Check, EvaluatedConstraint, IntClass, ParamValue};
use crate::numeric::Num;

/// A validated, executable predicate. Only obtainable through
/// [`compile_constraint`] / [`compile_check`] or by parsing an exported
/// spec document, so [`verify`] is total over it.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifierPredicate {
    check: Check,
}

impl VerifierPredicate {
    pub fn check(&self) -> &Check {
        &self.check
    }

    /// Text parameters that refer to tracked keywords, collected so callers
    /// can build the measurement keyword list.
    pub fn keyword_terms(&self) -> Vec<String> {
        let mut terms = Vec::new();
        for leaf in self.check.leaves() {
            if let Check::Leaf {
                dimension, params, ..
            } = leaf
            {
                if matches!(
                    dimension,
                    DimensionKind::KeywordCount | DimensionKind::KeywordSet
                ) {
                    for p in params {
                        if let ParamValue::Text(t) = p {
                            if !terms.contains(t) {
                                terms.push(t.clone());
                            }
                        }
                    }
                }
            }
        }
        terms
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CompileError {
    #[error("condition {condition} is not supported over dimension {dimension}: {detail}")]
    UnsupportedPair {
        condition: ConditionKind,
        dimension: DimensionKind,
        detail: String,
    },
    #[error("condition {condition} over {dimension} expects {expected} parameters, got {got}")]
    Arity {
        condition: ConditionKind,
        dimension: DimensionKind,
        expected: usize,
        got: usize,
    },
    #[error("empty combinator")]
    EmptyCombinator,
}

/// Per-constraint and per-rubric verdicts for one (instruction, response)
/// pair. Verdict order matches constraint order.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct VerificationReport {
    pub constraint_verdicts: Vec<bool>,
    pub rubric_verdicts: Vec<bool>,
}

impl VerificationReport {
    pub fn new(constraint_verdicts: Vec<bool>, rubric_verdicts: Vec<bool>) -> Self {
        VerificationReport {
            constraint_verdicts,
            rubric_verdicts,
        }
    }

    pub fn satisfied_count(&self) -> usize {
        self.constraint_verdicts.iter().filter(|&&v| v).count()
    }

    pub fn total_constraints(&self) -> usize {
        self.constraint_verdicts.len()
    }

    pub fn satisfied_rubrics(&self) -> usize {
        self.rubric_verdicts.iter().filter(|&&v| v).count()
    }

    pub fn total_rubrics(&self) -> usize {
        self.rubric_verdicts.len()
    }

    /// True when every constraint and every rubric is satisfied.
    pub fn all_satisfied(&self) -> bool {
        self.constraint_verdicts.iter().all(|&v| v) && self.rubric_verdicts.iter().all(|&v| v)
    }
}

/// Runtime view of one dimension's measured value.
#[derive(Debug, Clone, PartialEq)]
enum DimValue {
    Count(i64),
    Text(String),
    TextSet(Vec<String>),
    TextSeq(Vec<String>),
    CountSeq(Vec<i64>),
}

fn dimension_value(dim: DimensionKind, m: &ResponseMeasurements) -> DimValue {
    match dim {
        DimensionKind::ParagraphCount => DimValue::Count(m.paragraph_count as i64),
        DimensionKind::SentenceCount => DimValue::Count(m.sentence_count() as i64),
        DimensionKind::SentenceTypeMix => DimValue::TextSet(m.sentence_type_mix()),
        DimensionKind::WordCount => DimValue::Count(m.word_count as i64),
        DimensionKind::CharacterCount => DimValue::Count(m.character_count as i64),
        DimensionKind::PunctuationCount => DimValue::Count(m.punctuation_count as i64),
        DimensionKind::BoldWordCount => DimValue::Count(m.bold_word_count() as i64),
        DimensionKind::BoldWordSet => DimValue::TextSet(m.bold_word_set()),
        DimensionKind::UnorderedListItemCount => {
            DimValue::Count(m.unordered_list_item_count() as i64)
        }
        DimensionKind::UnorderedListItems => DimValue::TextSeq(m.unordered_list_items()),
        DimensionKind::KeywordCount => DimValue::Count(m.keyword_total() as i64),
        DimensionKind::KeywordSet => DimValue::TextSet(m.keyword_set()),
        DimensionKind::Language => DimValue::Text(m.language.name().to_string()),
        DimensionKind::BeginningOfReply => DimValue::Text(m.leading_text.clone()),
        DimensionKind::EndingOfReply => DimValue::Text(m.trailing_text.clone()),
        DimensionKind::PerParagraphSentenceCounts => DimValue::CountSeq(
            m.per_paragraph_sentence_counts
                .iter()
                .map(|&c| c as i64)
                .collect(),
        ),
        DimensionKind::NumberedListItemCount => {
            DimValue::Count(m.numbered_list_item_count as i64)
        }
        DimensionKind::QuotationCount => DimValue::Count(m.quotation_count as i64),
        DimensionKind::BracketedTermCount => DimValue::Count(m.bracketed_term_count as i64),
        DimensionKind::LineCount => DimValue::Count(m.line_count as i64),
        DimensionKind::SpecialSymbolCount => DimValue::Count(m.special_symbol_count as i64),
    }
}

/// Numeric projection: counts project to themselves, sets to their
/// cardinality, sequences to their length. Text has no projection.
fn numeric_projection(v: &DimValue) -> Option<i64> {
    match v {
        DimValue::Count(n) => Some(*n),
        DimValue::TextSet(s) => Some(s.len() as i64),
        DimValue::TextSeq(s) => Some(s.len() as i64),
        DimValue::CountSeq(s) => Some(s.len() as i64),
        DimValue::Text(_) => None,
    }
}

fn is_numeric_dim(dim: DimensionKind) -> bool {
    dim.measurement_kind() != MeasurementKind::Text
}

/// Numeric view of a dimension: counts project to themselves, sets to
/// their cardinality, sequences to their length. Text dimensions have
/// none. Exposed for generator-side planning against real measurements.
pub fn numeric_dimension_value(dim: DimensionKind, m: &ResponseMeasurements) -> Option<i64> {
    numeric_projection(&dimension_value(dim, m))
}

fn validate_leaf(
    dimension: DimensionKind,
    condition: ConditionKind,
    params: &[ParamValue],
) -> Result<(), CompileError> {
    let pair_err = |detail: &str| CompileError::UnsupportedPair {
        condition,
        dimension,
        detail: detail.to_string(),
    };
    let expected = condition.arity();
    if params.len() != expected {
        return Err(CompileError::Arity {
            condition,
            dimension,
            expected,
            got: params.len(),
        });
    }
    let numeric_param_ok = |p: &ParamValue| matches!(p, ParamValue::Num(_) | ParamValue::Dim(_));
    match condition {
        ConditionKind::NoMoreThan
        | ConditionKind::NoLessThan
        | ConditionKind::Interval
        | ConditionKind::PositiveIntegerMultipleOf => {
            if !is_numeric_dim(dimension) {
                return Err(pair_err("dimension is text-valued"));
            }
            for p in params {
                if !numeric_param_ok(p) {
                    return Err(pair_err("parameter must be numeric"));
                }
            }
            Ok(())
        }
        ConditionKind::MaximumValue | ConditionKind::MinimumValue => {
            let seq = matches!(
                dimension.measurement_kind(),
                MeasurementKind::Sequence | MeasurementKind::Count
            ) && dimension != DimensionKind::UnorderedListItems;
            if !seq {
                return Err(pair_err(
                    "element bounds need a count or count-sequence dimension",
                ));
            }
            if !numeric_param_ok(&params[0]) {
                return Err(pair_err("parameter must be numeric"));
            }
            Ok(())
        }
        ConditionKind::EqualTo | ConditionKind::NotEqualTo => match (&params[0], dimension) {
            (ParamValue::Text(_), d) if d.measurement_kind() == MeasurementKind::Text => Ok(()),
            (ParamValue::Text(_), _) => Err(pair_err(
                "text comparison needs a text-valued dimension; use required for membership",
            )),
            (ParamValue::Class(_), d) if d.measurement_kind() == MeasurementKind::Count => Ok(()),
            (ParamValue::Class(_), _) => {
                Err(pair_err("integer-class comparison needs a count dimension"))
            }
            (_, d) if d.measurement_kind() == MeasurementKind::Text => {
                Err(pair_err("numeric comparison against a text-valued dimension"))
            }
            _ => Ok(()),
        },
        ConditionKind::Required | ConditionKind::Forbidden => {
            if !matches!(params[0], ParamValue::Text(_)) {
                return Err(pair_err("term must be text"));
            }
            match dimension.measurement_kind() {
                MeasurementKind::Text | MeasurementKind::Set => Ok(()),
                MeasurementKind::Sequence if dimension == DimensionKind::UnorderedListItems => {
                    Ok(())
                }
                _ => Err(pair_err("membership needs a text, set, or item dimension")),
            }
        }
        ConditionKind::StrictlyAscendingByLength => {
            if dimension == DimensionKind::UnorderedListItems {
                Ok(())
            } else {
                Err(pair_err("ascending-length order needs a text sequence"))
            }
        }
        ConditionKind::ConsecutiveFibonacciTerms => {
            if dimension == DimensionKind::PerParagraphSentenceCounts {
                Ok(())
            } else {
                Err(pair_err("Fibonacci runs need a count sequence"))
            }
        }
        ConditionKind::LogicalAnd | ConditionKind::LogicalOr => {
            Err(pair_err("combinators carry children, not parameters"))
        }
    }
}

fn validate_check(check: &Check) -> Result<(), CompileError> {
    match check {
        Check::Leaf {
            dimension,
            condition,
            params,
        } => validate_leaf(*dimension, *condition, params),
        Check::All(children) | Check::Any(children) => {
            if children.is_empty() {
                return Err(CompileError::EmptyCombinator);
            }
            children.iter().try_for_each(validate_check)
        }
    }
}

/// Compiles an evaluated constraint (the conjunction of its sink checks)
/// into a total predicate. Deterministic; rejects unsupported
/// condition/dimension pairings.
pub fn compile_constraint(ec: &EvaluatedConstraint) -> Result<VerifierPredicate, CompileError> {
    compile_check(ec.combined_check())
}

/// Compiles a bare check tree. Exposed so predicates can be built without a
/// source graph, e.g. in tests and spec-document parsing.
pub fn compile_check(check: Check) -> Result<VerifierPredicate, CompileError> {
    validate_check(&check)?;
    Ok(VerifierPredicate { check })
}

fn resolve_numeric_param(p: &ParamValue, m: &ResponseMeasurements) -> Option<Num> {
    match p {
        ParamValue::Num(n) => Some(*n),
        ParamValue::Dim(d) => {
            numeric_projection(&dimension_value(*d, m)).map(Num::from_int)
        }
        _ => None,
    }
}

fn fibonacci_run_exists(seq: &[i64]) -> bool {
    if seq.is_empty() {
        return false;
    }
    let max = seq.iter().copied().max().unwrap_or(0);
    // Reference sequence 1, 1, 2, 3, 5, ... extended two slots past the
    // largest element so every window over it is inspected.
    let mut fib: Vec<i64> = vec![1, 1];
    while *fib.last().unwrap() <= max.max(1) {
        let n = fib.len();
        fib.push(fib[n - 1].saturating_add(fib[n - 2]));
    }
    fib.push({
        let n = fib.len();
        fib[n - 1].saturating_add(fib[n - 2])
    });
    if seq.len() > fib.len() {
        return false;
    }
    fib.windows(seq.len()).any(|w| w == seq)
}

fn eval_leaf(
    dimension: DimensionKind,
    condition: ConditionKind,
    params: &[ParamValue],
    m: &ResponseMeasurements,
) -> bool {
    let value = dimension_value(dimension, m);
    let numeric = |i: usize| -> Option<Num> { params.get(i).and_then(|p| resolve_numeric_param(p, m)) };
    match condition {
        ConditionKind::NoMoreThan => match (numeric_projection(&value), numeric(0)) {
            (Some(v), Some(limit)) => limit.cmp_i64(v) != std::cmp::Ordering::Less,
            _ => false,
        },
        ConditionKind::NoLessThan => match (numeric_projection(&value), numeric(0)) {
            (Some(v), Some(limit)) => limit.cmp_i64(v) != std::cmp::Ordering::Greater,
            _ => false,
        },
        ConditionKind::Interval => match (numeric_projection(&value), numeric(0), numeric(1)) {
            (Some(v), Some(lo), Some(hi)) => {
                lo.cmp_i64(v) != std::cmp::Ordering::Greater
                    && hi.cmp_i64(v) != std::cmp::Ordering::Less
            }
            _ => false,
        },
        ConditionKind::EqualTo => eval_equality(&value, params, m),
        ConditionKind::NotEqualTo => !eval_equality(&value, params, m),
        ConditionKind::Forbidden => !eval_membership(dimension, &value, params),
        ConditionKind::Required => eval_membership(dimension, &value, params),
        ConditionKind::MaximumValue => match (&value, numeric(0)) {
            (DimValue::CountSeq(seq), Some(limit)) => seq
                .iter()
                .all(|&v| limit.cmp_i64(v) != std::cmp::Ordering::Less),
            (DimValue::Count(v), Some(limit)) => limit.cmp_i64(*v) != std::cmp::Ordering::Less,
            _ => false,
        },
        ConditionKind::MinimumValue => match (&value, numeric(0)) {
            (DimValue::CountSeq(seq), Some(limit)) => seq
                .iter()
                .all(|&v| limit.cmp_i64(v) != std::cmp::Ordering::Greater),
            (DimValue::Count(v), Some(limit)) => limit.cmp_i64(*v) != std::cmp::Ordering::Greater,
            _ => false,
        },
        ConditionKind::PositiveIntegerMultipleOf => {
            match (numeric_projection(&value), numeric(0)) {
                (Some(v), Some(base)) => {
                    if base == Num::zero() {
                        v == 0
                    } else {
                        match Num::from_int(v).checked_div(&base) {
                            Ok(q) => q.is_integer() && !q.is_negative() && q != Num::zero(),
                            Err(_) => false,
                        }
                    }
                }
                _ => false,
            }
        }
        ConditionKind::StrictlyAscendingByLength => match &value {
            DimValue::TextSeq(items) => items
                .windows(2)
                .all(|w| w[0].chars().count() < w[1].chars().count()),
            _ => false,
        },
        ConditionKind::ConsecutiveFibonacciTerms => match &value {
            DimValue::CountSeq(seq) => fibonacci_run_exists(seq),
            _ => false,
        },
        ConditionKind::LogicalAnd | ConditionKind::LogicalOr => false,
    }
}

fn eval_equality(value: &DimValue, params: &[ParamValue], m: &ResponseMeasurements) -> bool {
    match (value, params.first()) {
        (DimValue::Text(t), Some(ParamValue::Text(p))) => t == p,
        (_, Some(ParamValue::Class(class))) => match numeric_projection(value) {
            Some(v) => class.contains(v),
            None => false,
        },
        (_, Some(p)) => match (numeric_projection(value), resolve_numeric_param(p, m)) {
            (Some(v), Some(target)) => target.cmp_i64(v) == std::cmp::Ordering::Equal,
            _ => false,
        },
        (_, None) => false,
    }
}

fn eval_membership(dimension: DimensionKind, value: &DimValue, params: &[ParamValue]) -> bool {
    let term = match params.first() {
        Some(ParamValue::Text(t)) => t,
        _ => return false,
    };
    match value {
        DimValue::TextSet(set) => set.iter().any(|s| s == term),
        DimValue::TextSeq(seq) => seq.iter().any(|s| s == term),
        DimValue::Text(t) => match dimension {
            DimensionKind::BeginningOfReply => t.starts_with(term.as_str()),
            DimensionKind::EndingOfReply => t
                .trim_end()
                .trim_end_matches(['.', '!', '?'])
                .trim_end()
                .ends_with(term.as_str()),
            _ => t == term,
        },
        _ => false,
    }
}

fn eval_check(check: &Check, m: &ResponseMeasurements) -> bool {
    match check {
        Check::Leaf {
            dimension,
            condition,
            params,
        } => eval_leaf(*dimension, *condition, params, m),
        Check::All(children) => children.iter().all(|c| eval_check(c, m)),
        Check::Any(children) => children.iter().any(|c| eval_check(c, m)),
    }
}

/// Evaluates a compiled predicate against measurements. Pure and total.
pub fn verify(p: &VerifierPredicate, m: &ResponseMeasurements) -> bool {
    eval_check(&p.check, m)
}

/// Compiles every constraint, measures the response once (tracking the
/// given keywords), and applies each predicate. Verdict order matches
/// constraint order; rubric verdicts are left empty for a judge pass to
/// fill.
pub fn verify_constraints(
    constraints: &[EvaluatedConstraint],
    keywords: &[String],
    response: &str,
) -> Result<VerificationReport, CompileError> {
    let predicates: Vec<VerifierPredicate> = constraints
        .iter()
        .map(compile_constraint)
        .collect::<Result<_, _>>()?;
    let mut terms: Vec<String> = keywords.to_vec();
    for p in &predicates {
        for t in p.keyword_terms() {
            if !terms.contains(&t) {
                terms.push(t);
            }
        }
    }
    let measurements = crate::analysis::measure(response, &terms);
    let verdicts = predicates.iter().map(|p| verify(p, &measurements)).collect();
    Ok(VerificationReport::new(verdicts, Vec::new()))
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("verifier-spec parse error on line {line}: {message}")]
pub struct SpecParseError {
    pub line: usize,
    pub message: String,
}

fn encode_param(p: &ParamValue) -> String {
    match p {
        ParamValue::Num(n) => n.to_string(),
        ParamValue::Text(t) => serde_json::to_string(t).expect("strings always encode"),
        ParamValue::Dim(d) => format!("dim:{}", d.name()),
        ParamValue::Class(c) => format!("class:{}", c.name()),
    }
}

fn encode_check(check: &Check, out: &mut Vec<String>) {
    match check {
        Check::Leaf {
            dimension,
            condition,
            params,
        } => {
            let mut fields = vec![
                "check".to_string(),
                dimension.name().to_string(),
                condition.name().to_string(),
            ];
            fields.extend(params.iter().map(encode_param));
            out.push(fields.join("\t"));
        }
        Check::All(children) => {
            out.push(format!("all\t{}", children.len()));
            children.iter().for_each(|c| encode_check(c, out));
        }
        Check::Any(children) => {
            out.push(format!("any\t{}", children.len()));
            children.iter().for_each(|c| encode_check(c, out));
        }
    }
}

/// Renders a predicate as a self-contained, line-oriented document:
/// a `rules-version` header followed by the check tree in preorder, one
/// node per line, fields tab-separated.
pub fn export_verifier_spec(p: &VerifierPredicate) -> String {
    let mut lines = vec![format!("rules-version\t{}", crate::RULES_VERSION)];
    encode_check(&p.check, &mut lines);
    lines.join("\n")
}

fn decode_param(token: &str, line: usize) -> Result<ParamValue, SpecParseError> {
    let err = |message: String| SpecParseError { line, message };
    if let Some(name) = token.strip_prefix("dim:") {
        return name
            .parse()
            .map(ParamValue::Dim)
            .map_err(|e: String| err(e));
    }
    if let Some(name) = token.strip_prefix("class:") {
        return IntClass::parse(name)
            .map(ParamValue::Class)
            .ok_or_else(|| err(format!("unknown integer class {name:?}")));
    }
    if token.starts_with('"') {
        return serde_json::from_str::<String>(token)
            .map(ParamValue::Text)
            .map_err(|e| err(format!("bad text parameter: {e}")));
    }
    token
        .parse::<Num>()
        .map(ParamValue::Num)
        .map_err(|e| err(format!("bad numeric parameter: {e}")))
}

fn parse_node(
    lines: &[(usize, Vec<String>)],
    cursor: &mut usize,
) -> Result<Check, SpecParseError> {
    let (line_no, fields) = lines.get(*cursor).ok_or(SpecParseError {
        line: 0,
        message: "unexpected end of document".into(),
    })?;
    let line = *line_no;
    *cursor += 1;
    match fields[0].as_str() {
        "check" => {
            if fields.len() < 3 {
                return Err(SpecParseError {
                    line,
                    message: "check line needs dimension and condition".into(),
                });
            }
            let dimension: DimensionKind = fields[1]
                .parse()
                .map_err(|e: String| SpecParseError { line, message: e })?;
            let condition: ConditionKind = fields[2]
                .parse()
                .map_err(|e: String| SpecParseError { line, message: e })?;
            let params = fields[3..]
                .iter()
                .map(|t| decode_param(t, line))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Check::Leaf {
                dimension,
                condition,
                params,
            })
        }
        kind @ ("all" | "any") => {
            let count: usize = fields
                .get(1)
                .and_then(|f| f.parse().ok())
                .ok_or(SpecParseError {
                    line,
                    message: "combinator line needs a child count".into(),
                })?;
            let children = (0..count)
                .map(|_| parse_node(lines, cursor))
                .collect::<Result<Vec<_>, _>>()?;
            if kind == "all" {
                Ok(Check::All(children))
            } else {
                Ok(Check::Any(children))
            }
        }
        other => Err(SpecParseError {
            line,
            message: format!("unknown node kind {other:?}"),
        }),
    }
}

/// Parses a document produced by [`export_verifier_spec`] back into a
/// compiled predicate.
pub fn parse_verifier_spec(text: &str) -> Result<VerifierPredicate, SpecParseError> {
    let lines: Vec<(usize, Vec<String>)> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l.split('\t').map(str::to_string).collect()))
        .collect();
    let Some((first_no, header)) = lines.first() else {
        return Err(SpecParseError {
            line: 0,
            message: "empty document".into(),
        });
    };
    if header[0] != "rules-version" {
        return Err(SpecParseError {
            line: *first_no,
            message: "missing rules-version header".into(),
        });
    }
    let mut cursor = 1;
    let check = parse_node(&lines, &mut cursor)?;
    compile_check(check).map_err(|e| SpecParseError {
        line: 0,
        message: e.to_string(),
    })
}

impl fmt::Display for VerifierPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.check.describe())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::measure;

    fn leaf(
        dimension: DimensionKind,
        condition: ConditionKind,
        params: Vec<ParamValue>,
    ) -> VerifierPredicate {
        compile_check(Check::leaf(dimension, condition, params)).unwrap()
    }

    #[test]
    fn interval_over_character_count() {
        let p = leaf(
            DimensionKind::CharacterCount,
            ConditionKind::Interval,
            vec![ParamValue::int(64), ParamValue::int(103)],
        );
        let short = measure("tiny.", &[]);
        assert!(!verify(&p, &short));
        let mid = measure(&"a".repeat(80), &[]);
        assert!(verify(&p, &mid));
        let long = measure(&"a".repeat(200), &[]);
        assert!(!verify(&p, &long));
    }

    #[test]
    fn not_equal_over_list_items() {
        let p = leaf(
            DimensionKind::UnorderedListItemCount,
            ConditionKind::NotEqualTo,
            vec![ParamValue::int(9)],
        );
        let three = measure("- a\n- b\n- c", &[]);
        assert!(verify(&p, &three));
        let nine = measure(
            "- a\n- b\n- c\n- d\n- e\n- f\n- g\n- h\n- i",
            &[],
        );
        assert!(!verify(&p, &nine));
    }

    #[test]
    fn bold_count_non_prime_non_even() {
        let p = compile_check(Check::All(vec![
            Check::leaf(
                DimensionKind::BoldWordCount,
                ConditionKind::NoLessThan,
                vec![ParamValue::int(1)],
            ),
            Check::leaf(
                DimensionKind::BoldWordCount,
                ConditionKind::NotEqualTo,
                vec![ParamValue::Class(IntClass::Prime)],
            ),
            Check::leaf(
                DimensionKind::BoldWordCount,
                ConditionKind::NotEqualTo,
                vec![ParamValue::Class(IntClass::Even)],
            ),
        ]))
        .unwrap();
        assert!(verify(&p, &measure("**one** bold span.", &[])));
        assert!(!verify(&p, &measure("**a** and **b** spans.", &[])));
        assert!(!verify(&p, &measure("no bold at all.", &[])));
    }

    #[test]
    fn ascending_item_lengths() {
        let p = leaf(
            DimensionKind::UnorderedListItems,
            ConditionKind::StrictlyAscendingByLength,
            vec![],
        );
        // Item lengths 6, 10, 11 including trailing commas.
        let good = measure("- Goals,\n- Func reqs,\n- Boundaries,", &[]);
        assert!(verify(&p, &good));
        let bad = measure("- Goals,\n- Boundaries,\n- Func reqs,", &[]);
        assert!(!verify(&p, &bad));
    }

    #[test]
    fn uniqueness_as_set_cardinality() {
        let p = leaf(
            DimensionKind::BoldWordSet,
            ConditionKind::EqualTo,
            vec![ParamValue::Dim(DimensionKind::BoldWordCount)],
        );
        assert!(verify(&p, &measure("**x** and **y**.", &[])));
        assert!(!verify(&p, &measure("**x** and **x**.", &[])));
    }

    #[test]
    fn multiple_of_dimension_reference() {
        let p = leaf(
            DimensionKind::PunctuationCount,
            ConditionKind::PositiveIntegerMultipleOf,
            vec![ParamValue::Dim(DimensionKind::SentenceCount)],
        );
        // 4 sentences, 4 punctuation marks.
        assert!(verify(&p, &measure("One. Two! Three? Four.", &[])));
        // 2 sentences, 3 punctuation marks.
        assert!(!verify(&p, &measure("One, yes. Two!", &[])));
    }

    #[test]
    fn fibonacci_run_check() {
        let p = leaf(
            DimensionKind::PerParagraphSentenceCounts,
            ConditionKind::ConsecutiveFibonacciTerms,
            vec![],
        );
        let good = measure("One.\n\nTwo.\n\nThree. Four.", &[]);
        assert!(verify(&p, &good)); // [1, 1, 2]
        let bad = measure("One.\n\nTwo. Three. Four.\n\nFive.", &[]);
        assert!(!verify(&p, &bad)); // [1, 3, 1]
    }

    #[test]
    fn sentence_type_mix_membership() {
        let p = compile_check(Check::All(vec![
            Check::leaf(
                DimensionKind::SentenceTypeMix,
                ConditionKind::Required,
                vec![ParamValue::Text("interrogative".into())],
            ),
            Check::leaf(
                DimensionKind::SentenceTypeMix,
                ConditionKind::Forbidden,
                vec![ParamValue::Text("other".into())],
            ),
        ]))
        .unwrap();
        assert!(verify(&p, &measure("Really? Yes.", &[])));
        assert!(!verify(&p, &measure("Flat statement.", &[])));
        assert!(!verify(&p, &measure("Really? no terminal", &[])));
    }

    #[test]
    fn schema_mismatch_is_a_compile_error() {
        let err = compile_check(Check::leaf(
            DimensionKind::Language,
            ConditionKind::EqualTo,
            vec![ParamValue::int(3)],
        ))
        .unwrap_err();
        assert!(matches!(err, CompileError::UnsupportedPair { .. }));

        let err = compile_check(Check::leaf(
            DimensionKind::Language,
            ConditionKind::Interval,
            vec![ParamValue::int(1), ParamValue::int(2)],
        ))
        .unwrap_err();
        assert!(matches!(
            err,
            CompileError::UnsupportedPair {
                condition: ConditionKind::Interval,
                dimension: DimensionKind::Language,
                ..
            }
        ));
    }

    #[test]
    fn combinator_truth_tables() {
        let t = Check::leaf(
            DimensionKind::CharacterCount,
            ConditionKind::NoLessThan,
            vec![ParamValue::int(0)],
        );
        let f = Check::leaf(
            DimensionKind::CharacterCount,
            ConditionKind::NoMoreThan,
            vec![ParamValue::int(-1)],
        );
        let m = measure("anything", &[]);
        for (a, b) in [(true, true), (true, false), (false, true), (false, false)] {
            let pick = |v: bool| if v { t.clone() } else { f.clone() };
            let and = compile_check(Check::All(vec![pick(a), pick(b)])).unwrap();
            let or = compile_check(Check::Any(vec![pick(a), pick(b)])).unwrap();
            assert_eq!(verify(&and, &m), a && b);
            assert_eq!(verify(&or, &m), a || b);
        }
    }

    #[test]
    fn spec_document_round_trips() {
        let p = compile_check(Check::Any(vec![
            Check::leaf(
                DimensionKind::CharacterCount,
                ConditionKind::Interval,
                vec![ParamValue::int(64), ParamValue::int(103)],
            ),
            Check::All(vec![
                Check::leaf(
                    DimensionKind::KeywordSet,
                    ConditionKind::Required,
                    vec![ParamValue::Text("alpha beta\ttab".into())],
                ),
                Check::leaf(
                    DimensionKind::BoldWordCount,
                    ConditionKind::NotEqualTo,
                    vec![ParamValue::Class(IntClass::Even)],
                ),
            ]),
        ]))
        .unwrap();
        let doc = export_verifier_spec(&p);
        assert!(doc.starts_with("rules-version\t1\n"));
        let back = parse_verifier_spec(&doc).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn verify_constraints_orders_verdicts() {
        use crate::banks::default_banks;
        use crate::graph::{Erg, ErgNode};
        let banks = default_banks().unwrap();
        let ok = Erg::new(
            vec![ErgNode::conditional(
                "S",
                ConditionKind::NoLessThan,
                DimensionKind::WordCount,
                vec![ParamValue::int(2)],
                "at least two words",
            )],
            vec![],
        );
        let fail = Erg::new(
            vec![ErgNode::conditional(
                "S",
                ConditionKind::NoMoreThan,
                DimensionKind::WordCount,
                vec![ParamValue::int(1)],
                "at most one word",
            )],
            vec![],
        );
        let constraints = vec![
            crate::graph::evaluate_graph(&ok, &banks).unwrap(),
            crate::graph::evaluate_graph(&fail, &banks).unwrap(),
        ];
        let report = verify_constraints(&constraints, &[], "three words here.").unwrap();
        assert_eq!(report.constraint_verdicts, vec![true, false]);
        assert_eq!(report.satisfied_count(), 1);
        assert_eq!(report.total_constraints(), 2);
    }

    #[test]
    fn zero_constraint_report_is_degenerate() {
        let report = verify_constraints(&[], &[], "anything").unwrap();
        assert_eq!(report.total_constraints(), 0);
        assert_eq!(report.satisfied_count(), 0);
    }
}
