//! Reasoning-graph data model: DAG validation, evaluation into concrete
//! predicate parameters, and the mermaid edge syntax used in prompts.
//!
//! A graph's nodes are atomic actions of three kinds — knowledge lookups,
//! arithmetic, and conditional checks — and its edges are result
//! dependencies. Evaluating a valid graph against a set of banks resolves
//! every fact and arithmetic node to an exact value and binds the
//! conditional sinks to fully literal predicate parameters.
//!
//! All types are immutable after construction and all operations are pure.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::banks::{lookup_fact, Banks, ConditionKind, DimensionKind, FactAnswer, OperationKind};
use crate::numeric::{Num, NumError};

/// Identifier of a graph node. Prompts conventionally use single letters,
/// but any whitespace-free token works.
#[derive(
    Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct NodeId(pub String);

impl NodeId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_string())
    }
}

impl From<String> for NodeId {
    fn from(s: String) -> Self {
        NodeId(s)
    }
}

/// Classes of integers usable as predicate parameters, so a check like
/// "must not be a prime number" stays a single decidable leaf.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntClass {
    Prime,
    Even,
    Odd,
    Composite,
    Fibonacci,
}

impl IntClass {
    pub fn name(&self) -> &'static str {
        match self {
            IntClass::Prime => "prime",
            IntClass::Even => "even",
            IntClass::Odd => "odd",
            IntClass::Composite => "composite",
            IntClass::Fibonacci => "fibonacci",
        }
    }

    pub fn parse(s: &str) -> Option<IntClass> {
        match s {
            "prime" => Some(IntClass::Prime),
            "even" => Some(IntClass::Even),
            "odd" => Some(IntClass::Odd),
            "composite" => Some(IntClass::Composite),
            "fibonacci" => Some(IntClass::Fibonacci),
            _ => None,
        }
    }

    /// Noun phrase for rubric rendering.
    pub fn phrase(&self) -> &'static str {
        match self {
            IntClass::Prime => "a prime number",
            IntClass::Even => "an even number",
            IntClass::Odd => "an odd number",
            IntClass::Composite => "a composite number",
            IntClass::Fibonacci => "a Fibonacci number",
        }
    }

    /// Exact membership test.
    pub fn contains(&self, v: i64) -> bool {
        match self {
            IntClass::Even => v.rem_euclid(2) == 0,
            IntClass::Odd => v.rem_euclid(2) == 1,
            IntClass::Prime => {
                if v < 2 {
                    return false;
                }
                let mut d: i64 = 2;
                while d.saturating_mul(d) <= v {
                    if v % d == 0 {
                        return false;
                    }
                    d += 1;
                }
                true
            }
            IntClass::Composite => v > 1 && !IntClass::Prime.contains(v),
            IntClass::Fibonacci => {
                if v < 0 {
                    return false;
                }
                let (mut a, mut b) = (0i64, 1i64);
                while a < v {
                    let next = a.saturating_add(b);
                    a = b;
                    b = next;
                }
                a == v
            }
        }
    }
}

/// A fully resolved predicate parameter. `Dim` refers to another dimension
/// measured on the same response (e.g. "a multiple of the number of
/// sentences"); no unresolved fact references survive evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamValue {
    Num(Num),
    Text(String),
    Dim(DimensionKind),
    Class(IntClass),
}

impl ParamValue {
    pub fn int(v: i64) -> Self {
        ParamValue::Num(Num::from_int(v))
    }

    /// Display form used in rubrics and verifier-spec documents.
    pub fn describe(&self) -> String {
        match self {
            ParamValue::Num(n) => n.to_string(),
            ParamValue::Text(t) => format!("{t:?}"),
            ParamValue::Dim(d) => d.phrase().to_string(),
            ParamValue::Class(c) => c.phrase().to_string(),
        }
    }
}

/// Payload of a graph node, by node kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NodePayload {
    /// Resolves to a bank fact's answer.
    Knowledge { fact_id: String },
    /// Folds its parents' values (in edge order) and then any literal
    /// operands with one arithmetic operation.
    Math {
        op: OperationKind,
        #[serde(default)]
        literals: Vec<Num>,
    },
    /// Binds a condition to a dimension. Parents (in edge order) fill the
    /// leading parameter slots; literals fill the rest. `LogicalAnd` /
    /// `LogicalOr` conditionals instead combine conditional parents into a
    /// predicate tree.
    Conditional {
        condition: ConditionKind,
        dimension: DimensionKind,
        #[serde(default)]
        literals: Vec<ParamValue>,
    },
}

/// One node of a reasoning graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErgNode {
    pub id: NodeId,
    #[serde(flatten)]
    pub payload: NodePayload,
    /// Natural-language description, mentioned verbatim in chain-of-thought
    /// traces.
    pub description: String,
}

impl ErgNode {
    pub fn knowledge(id: impl Into<NodeId>, fact_id: &str, description: &str) -> Self {
        ErgNode {
            id: id.into(),
            payload: NodePayload::Knowledge {
                fact_id: fact_id.into(),
            },
            description: description.into(),
        }
    }

    pub fn math(
        id: impl Into<NodeId>,
        op: OperationKind,
        literals: Vec<Num>,
        description: &str,
    ) -> Self {
        ErgNode {
            id: id.into(),
            payload: NodePayload::Math { op, literals },
            description: description.into(),
        }
    }

    pub fn conditional(
        id: impl Into<NodeId>,
        condition: ConditionKind,
        dimension: DimensionKind,
        literals: Vec<ParamValue>,
        description: &str,
    ) -> Self {
        ErgNode {
            id: id.into(),
            payload: NodePayload::Conditional {
                condition,
                dimension,
                literals,
            },
            description: description.into(),
        }
    }
}

/// A reasoning graph: nodes plus directed dependency edges
/// `(parent, child)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Erg {
    pub nodes: Vec<ErgNode>,
    pub edges: Vec<(NodeId, NodeId)>,
}

impl Erg {
    pub fn new(nodes: Vec<ErgNode>, edges: Vec<(NodeId, NodeId)>) -> Self {
        Erg { nodes, edges }
    }

    pub fn node(&self, id: &NodeId) -> Option<&ErgNode> {
        self.nodes.iter().find(|n| &n.id == id)
    }

    /// Parents of `id` in edge-declaration order. That order is load-bearing:
    /// it fixes operand and parameter binding.
    pub fn parents_of(&self, id: &NodeId) -> Vec<&NodeId> {
        self.edges
            .iter()
            .filter(|(_, child)| child == id)
            .map(|(parent, _)| parent)
            .collect()
    }

    pub fn children_of(&self, id: &NodeId) -> Vec<&NodeId> {
        self.edges
            .iter()
            .filter(|(parent, _)| parent == id)
            .map(|(_, child)| child)
            .collect()
    }

    /// Conditional nodes with no outgoing edge, in node-declaration order.
    pub fn sinks(&self) -> Vec<&ErgNode> {
        self.nodes
            .iter()
            .filter(|n| {
                matches!(n.payload, NodePayload::Conditional { .. })
                    && self.children_of(&n.id).is_empty()
            })
            .collect()
    }

    /// Node ids with no incident edges.
    pub fn isolated_nodes(&self) -> Vec<&NodeId> {
        self.nodes
            .iter()
            .filter(|n| {
                !self
                    .edges
                    .iter()
                    .any(|(p, c)| p == &n.id || c == &n.id)
            })
            .map(|n| &n.id)
            .collect()
    }
}

/// A structural violation found by [`validate_graph`]. Violations are data,
/// not failures.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Cycle { involving: Vec<NodeId> },
    DanglingEdge { parent: NodeId, child: NodeId },
    DuplicateNodeId { id: NodeId },
    NoConditionalSink,
    MathWithoutParent { id: NodeId },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Cycle { involving } => {
                let ids: Vec<&str> = involving.iter().map(|n| n.as_str()).collect();
                write!(f, "cycle involving nodes [{}]", ids.join(", "))
            }
            Violation::DanglingEdge { parent, child } => {
                write!(f, "edge {parent}-->{child} references a missing node")
            }
            Violation::DuplicateNodeId { id } => write!(f, "duplicate node id {id}"),
            Violation::NoConditionalSink => {
                write!(f, "no conditional node without outgoing edges")
            }
            Violation::MathWithoutParent { id } => {
                write!(f, "mathematical node {id} has no parent")
            }
        }
    }
}

/// Checks the structural invariants: acyclicity, edge endpoints, unique
/// node ids, at least one conditional sink, and every mathematical node
/// having at least one parent. Returns the empty vector when the graph is
/// well-formed.
pub fn validate_graph(erg: &Erg) -> Vec<Violation> {
    let mut violations = Vec::new();

    let mut seen = BTreeSet::new();
    for node in &erg.nodes {
        if !seen.insert(node.id.clone()) {
            violations.push(Violation::DuplicateNodeId {
                id: node.id.clone(),
            });
        }
    }

    for (parent, child) in &erg.edges {
        if !seen.contains(parent) || !seen.contains(child) {
            violations.push(Violation::DanglingEdge {
                parent: parent.clone(),
                child: child.clone(),
            });
        }
    }

    // Cycle detection over the edges whose endpoints exist.
    let mut indegree: BTreeMap<&NodeId, usize> = erg.nodes.iter().map(|n| (&n.id, 0)).collect();
    for (parent, child) in &erg.edges {
        if seen.contains(parent) && seen.contains(child) {
            if let Some(d) = indegree.get_mut(child) {
                *d += 1;
            }
        }
    }
    let mut ready: BTreeSet<&NodeId> = indegree
        .iter()
        .filter(|(_, &d)| d == 0)
        .map(|(&id, _)| id)
        .collect();
    let mut visited = 0usize;
    while let Some(&id) = ready.iter().next() {
        ready.remove(id);
        visited += 1;
        for (parent, child) in &erg.edges {
            if parent == id && seen.contains(child) {
                if let Some(d) = indegree.get_mut(child) {
                    *d -= 1;
                    if *d == 0 {
                        ready.insert(child);
                    }
                }
            }
        }
    }
    if visited < indegree.len() {
        let mut involving: Vec<NodeId> = indegree
            .iter()
            .filter(|(_, &d)| d > 0)
            .map(|(&id, _)| id.clone())
            .collect();
        involving.sort();
        violations.push(Violation::Cycle { involving });
    }

    if visited == indegree.len() && erg.sinks().is_empty() {
        violations.push(Violation::NoConditionalSink);
    }

    for node in &erg.nodes {
        if matches!(node.payload, NodePayload::Math { .. }) && erg.parents_of(&node.id).is_empty()
        {
            violations.push(Violation::MathWithoutParent {
                id: node.id.clone(),
            });
        }
    }

    violations
}

/// Topological order over a valid graph, tie-broken by ascending node id so
/// evaluation traces are reproducible.
pub fn topo_order(erg: &Erg) -> Vec<&ErgNode> {
    let mut indegree: BTreeMap<&NodeId, usize> = erg.nodes.iter().map(|n| (&n.id, 0)).collect();
    for (_, child) in &erg.edges {
        if let Some(d) = indegree.get_mut(child) {
            *d += 1;
        }
    }
    let mut ready: BTreeSet<&NodeId> = indegree
        .iter()
        .filter(|(_, &d)| d == 0)
        .map(|(&id, _)| id)
        .collect();
    let mut order = Vec::with_capacity(erg.nodes.len());
    while let Some(&id) = ready.iter().next() {
        ready.remove(id);
        if let Some(node) = erg.node(id) {
            order.push(node);
        }
        for (parent, child) in &erg.edges {
            if parent == id {
                if let Some(d) = indegree.get_mut(child) {
                    *d -= 1;
                    if *d == 0 {
                        ready.insert(child);
                    }
                }
            }
        }
    }
    order
}

/// A resolved node value: exact rational or text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Value {
    Num(Num),
    Text(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(n) => write!(f, "{n}"),
            Value::Text(t) => write!(f, "{t}"),
        }
    }
}

/// The resolved check carried by one conditional sink: a leaf or an
/// and/or tree over child checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Leaf {
        dimension: DimensionKind,
        condition: ConditionKind,
        params: Vec<ParamValue>,
    },
    All(Vec<Check>),
    Any(Vec<Check>),
}

impl Check {
    pub fn leaf(
        dimension: DimensionKind,
        condition: ConditionKind,
        params: Vec<ParamValue>,
    ) -> Self {
        Check::Leaf {
            dimension,
            condition,
            params,
        }
    }

    /// Dimension of the leftmost leaf.
    pub fn primary_dimension(&self) -> DimensionKind {
        match self {
            Check::Leaf { dimension, .. } => *dimension,
            Check::All(children) | Check::Any(children) => children[0].primary_dimension(),
        }
    }

    /// All leaves, left to right.
    pub fn leaves(&self) -> Vec<&Check> {
        match self {
            Check::Leaf { .. } => vec![self],
            Check::All(children) | Check::Any(children) => {
                children.iter().flat_map(|c| c.leaves()).collect()
            }
        }
    }

    /// Natural-language description used for rubric text.
    pub fn describe(&self) -> String {
        match self {
            Check::Leaf {
                dimension,
                condition,
                params,
            } => format!("{} {}", dimension.phrase(), condition_phrase(*condition, params)),
            Check::All(children) => children
                .iter()
                .map(|c| c.describe())
                .collect::<Vec<_>>()
                .join(", and "),
            Check::Any(children) => children
                .iter()
                .map(|c| c.describe())
                .collect::<Vec<_>>()
                .join(", or "),
        }
    }
}

/// Verb phrase for one condition with resolved parameters.
pub fn condition_phrase(condition: ConditionKind, params: &[ParamValue]) -> String {
    let p = |i: usize| {
        params
            .get(i)
            .map(|v| v.describe())
            .unwrap_or_else(|| "?".into())
    };
    match condition {
        ConditionKind::NoMoreThan => format!("must be no more than {}", p(0)),
        ConditionKind::NoLessThan => format!("must be no less than {}", p(0)),
        ConditionKind::Interval => {
            format!("must be between {} and {}, inclusive", p(0), p(1))
        }
        ConditionKind::EqualTo => match params.first() {
            Some(ParamValue::Class(c)) => format!("must be {}", c.phrase()),
            _ => format!("must be equal to {}", p(0)),
        },
        ConditionKind::NotEqualTo => match params.first() {
            Some(ParamValue::Class(c)) => format!("must not be {}", c.phrase()),
            _ => format!("must not be equal to {}", p(0)),
        },
        ConditionKind::Forbidden => format!("must not include {}", p(0)),
        ConditionKind::Required => format!("must include {}", p(0)),
        ConditionKind::LogicalAnd => "must satisfy every combined check".into(),
        ConditionKind::LogicalOr => "must satisfy at least one combined check".into(),
        ConditionKind::MaximumValue => format!("must have no value above {}", p(0)),
        ConditionKind::MinimumValue => format!("must have no value below {}", p(0)),
        ConditionKind::PositiveIntegerMultipleOf => {
            format!("must be a positive integer multiple of {}", p(0))
        }
        ConditionKind::StrictlyAscendingByLength => {
            "must be arranged in strictly ascending order of character length".into()
        }
        ConditionKind::ConsecutiveFibonacciTerms => {
            "must form consecutive terms of the Fibonacci sequence".into()
        }
    }
}

/// One conditional sink with its fully resolved check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinkBinding {
    pub node: NodeId,
    pub check: Check,
}

/// A graph resolved against a set of banks: every non-conditional node has
/// an exact value and every sink carries fully literal parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluatedConstraint {
    pub source: Erg,
    pub resolved_values: BTreeMap<NodeId, Value>,
    pub sinks: Vec<SinkBinding>,
    /// Dimension of the first sink's leftmost leaf.
    pub dimension: DimensionKind,
    /// Natural-language check description for judge-based evaluation.
    pub rubric: String,
}

impl EvaluatedConstraint {
    /// The conjunction of all sink checks.
    pub fn combined_check(&self) -> Check {
        if self.sinks.len() == 1 {
            self.sinks[0].check.clone()
        } else {
            Check::All(self.sinks.iter().map(|s| s.check.clone()).collect())
        }
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("graph is not well-formed: {0}")]
    Invalid(String),
    #[error("node {node}: {source}")]
    Arithmetic { node: NodeId, source: NumError },
    #[error("unknown fact {fact_id:?} referenced by node {node}")]
    FactNotFound { node: NodeId, fact_id: String },
    #[error("node {node}: {detail}")]
    TypeMismatch { node: NodeId, detail: String },
    #[error("node {node}: condition {condition} expects {expected} parameters, got {got}")]
    ArityMismatch {
        node: NodeId,
        condition: ConditionKind,
        expected: usize,
        got: usize,
    },
    #[error("node {node} depends on conditional node {parent}, which has no value")]
    UnresolvedParent { node: NodeId, parent: NodeId },
}

/// Evaluates a valid graph against the banks. Values are computed in a
/// topological order; the result is independent of which topological order
/// is used.
pub fn evaluate_graph(erg: &Erg, banks: &Banks) -> Result<EvaluatedConstraint, EvalError> {
    let violations = validate_graph(erg);
    if !violations.is_empty() {
        let text = violations
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join("; ");
        return Err(EvalError::Invalid(text));
    }

    let mut values: BTreeMap<NodeId, Value> = BTreeMap::new();
    let mut checks: BTreeMap<NodeId, Check> = BTreeMap::new();

    for node in topo_order(erg) {
        match &node.payload {
            NodePayload::Knowledge { fact_id } => {
                let fact = lookup_fact(banks, fact_id).map_err(|_| EvalError::FactNotFound {
                    node: node.id.clone(),
                    fact_id: fact_id.clone(),
                })?;
                let value = match &fact.answer {
                    FactAnswer::Integer(v) => Value::Num(Num::from_int(*v)),
                    FactAnswer::Text(t) => Value::Text(t.clone()),
                };
                values.insert(node.id.clone(), value);
            }
            NodePayload::Math { op, literals } => {
                let mut operands: Vec<Num> = Vec::new();
                for parent in erg.parents_of(&node.id) {
                    match values.get(parent) {
                        Some(Value::Num(n)) => operands.push(*n),
                        Some(Value::Text(t)) => {
                            return Err(EvalError::TypeMismatch {
                                node: node.id.clone(),
                                detail: format!(
                                    "parent {parent} resolves to text {t:?}, not a number"
                                ),
                            })
                        }
                        None => {
                            return Err(EvalError::UnresolvedParent {
                                node: node.id.clone(),
                                parent: parent.clone(),
                            })
                        }
                    }
                }
                operands.extend(literals.iter().copied());
                let mut iter = operands.into_iter();
                let first = iter.next().expect("math node has at least one parent");
                let mut acc = first;
                for operand in iter {
                    acc = match op {
                        OperationKind::Addition => acc.checked_add(&operand),
                        OperationKind::Subtraction => acc.checked_sub(&operand),
                        OperationKind::Multiplication => acc.checked_mul(&operand),
                        OperationKind::Division => {
                            acc.checked_div(&operand).map_err(|source| {
                                EvalError::Arithmetic {
                                    node: node.id.clone(),
                                    source,
                                }
                            })?
                        }
                    };
                }
                values.insert(node.id.clone(), Value::Num(acc));
            }
            NodePayload::Conditional {
                condition,
                dimension,
                literals,
            } => {
                if condition.is_combinator() {
                    let mut children = Vec::new();
                    for parent in erg.parents_of(&node.id) {
                        match checks.get(parent) {
                            Some(check) => children.push(check.clone()),
                            None => {
                                return Err(EvalError::TypeMismatch {
                                    node: node.id.clone(),
                                    detail: format!(
                                        "combinator parent {parent} is not a conditional node"
                                    ),
                                })
                            }
                        }
                    }
                    if children.is_empty() || !literals.is_empty() {
                        return Err(EvalError::ArityMismatch {
                            node: node.id.clone(),
                            condition: *condition,
                            expected: 0,
                            got: literals.len(),
                        });
                    }
                    let check = match condition {
                        ConditionKind::LogicalAnd => Check::All(children),
                        ConditionKind::LogicalOr => Check::Any(children),
                        _ => unreachable!(),
                    };
                    checks.insert(node.id.clone(), check);
                } else {
                    let mut params: Vec<ParamValue> = Vec::new();
                    for parent in erg.parents_of(&node.id) {
                        match values.get(parent) {
                            Some(Value::Num(n)) => params.push(ParamValue::Num(*n)),
                            Some(Value::Text(t)) => params.push(ParamValue::Text(t.clone())),
                            None => {
                                return Err(EvalError::UnresolvedParent {
                                    node: node.id.clone(),
                                    parent: parent.clone(),
                                })
                            }
                        }
                    }
                    params.extend(literals.iter().cloned());
                    let expected = condition.arity();
                    if params.len() != expected {
                        return Err(EvalError::ArityMismatch {
                            node: node.id.clone(),
                            condition: *condition,
                            expected,
                            got: params.len(),
                        });
                    }
                    checks.insert(
                        node.id.clone(),
                        Check::Leaf {
                            dimension: *dimension,
                            condition: *condition,
                            params,
                        },
                    );
                }
            }
        }
    }

    let sinks: Vec<SinkBinding> = erg
        .sinks()
        .into_iter()
        .map(|node| SinkBinding {
            node: node.id.clone(),
            check: checks
                .get(&node.id)
                .expect("every conditional sink was evaluated")
                .clone(),
        })
        .collect();
    let dimension = sinks[0].check.primary_dimension();
    let rubric = format!(
        "Check that {}.",
        sinks
            .iter()
            .map(|s| s.check.describe())
            .collect::<Vec<_>>()
            .join("; and that ")
    );

    Ok(EvaluatedConstraint {
        source: erg.clone(),
        resolved_values: values,
        sinks,
        dimension,
        rubric,
    })
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("mermaid parse error on line {line}: {message}")]
pub struct MermaidError {
    pub line: usize,
    pub message: String,
}

/// Parsed mermaid edge text: ordered edges plus bare node declarations.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedMermaid {
    pub edges: Vec<(NodeId, NodeId)>,
    pub isolated: Vec<NodeId>,
}

fn valid_token(token: &str) -> bool {
    !token.is_empty()
        && token
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Parses mermaid edge lines. Accepts both `-->` and `->` arrows, commas,
/// semicolons, or newlines between segments, and chained segments such as
/// `A-->B-->C`. Bare tokens declare isolated nodes.
pub fn parse_mermaid(text: &str) -> Result<ParsedMermaid, MermaidError> {
    let mut parsed = ParsedMermaid::default();
    for (line_no, line) in text.lines().enumerate() {
        let line_no = line_no + 1;
        for segment in line.split([',', ';']) {
            let segment = segment.trim();
            if segment.is_empty() {
                continue;
            }
            let mut nodes: Vec<NodeId> = Vec::new();
            let mut rest = segment;
            loop {
                let (token, remainder) = match rest.find('-') {
                    Some(pos) => {
                        let token = rest[..pos].trim();
                        let after = &rest[pos..];
                        let remainder = if let Some(r) = after.strip_prefix("-->") {
                            r
                        } else if let Some(r) = after.strip_prefix("->") {
                            r
                        } else {
                            return Err(MermaidError {
                                line: line_no,
                                message: format!("malformed arrow in segment {segment:?}"),
                            });
                        };
                        (token, Some(remainder))
                    }
                    None => (rest.trim(), None),
                };
                if !valid_token(token) {
                    return Err(MermaidError {
                        line: line_no,
                        message: format!("empty or invalid node token in segment {segment:?}"),
                    });
                }
                nodes.push(NodeId::from(token));
                match remainder {
                    Some(r) => rest = r,
                    None => break,
                }
            }
            if nodes.len() == 1 {
                parsed.isolated.push(nodes.pop().unwrap());
            } else {
                for pair in nodes.windows(2) {
                    parsed.edges.push((pair[0].clone(), pair[1].clone()));
                }
            }
        }
    }
    Ok(parsed)
}

/// Renders a graph's edges in the canonical comma-separated mermaid form.
/// Nodes without any incident edge are appended as bare declarations so the
/// render → parse round trip reproduces the edge set and node set exactly.
pub fn render_mermaid(erg: &Erg) -> String {
    let mut segments: Vec<String> = erg
        .edges
        .iter()
        .map(|(parent, child)| format!("{parent}-->{child}"))
        .collect();
    for id in erg.isolated_nodes() {
        segments.push(id.to_string());
    }
    segments.join(", ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::banks::default_banks;

    fn sink(id: &str) -> ErgNode {
        ErgNode::conditional(
            id,
            ConditionKind::NoMoreThan,
            DimensionKind::ParagraphCount,
            vec![ParamValue::int(3)],
            "cap the paragraph count",
        )
    }

    #[test]
    fn diamond_graph_validates() {
        // Mirrors the A-->C, B-->C, C-->D prompt example.
        let erg = Erg::new(
            vec![
                ErgNode::knowledge("A", "cube_faces", "recall the face count of a cube"),
                ErgNode::knowledge("B", "week_days", "recall the days of a week"),
                ErgNode::math(
                    "C",
                    OperationKind::Addition,
                    vec![],
                    "add the two recalled numbers",
                ),
                ErgNode::conditional(
                    "D",
                    ConditionKind::NoMoreThan,
                    DimensionKind::SentenceCount,
                    vec![],
                    "bound the sentence count by the sum",
                ),
            ],
            vec![
                ("A".into(), "C".into()),
                ("B".into(), "C".into()),
                ("C".into(), "D".into()),
            ],
        );
        assert!(validate_graph(&erg).is_empty());
        let ec = evaluate_graph(&erg, &default_banks().unwrap()).unwrap();
        assert_eq!(
            ec.sinks[0].check,
            Check::leaf(
                DimensionKind::SentenceCount,
                ConditionKind::NoMoreThan,
                vec![ParamValue::int(13)],
            )
        );
    }

    #[test]
    fn two_cycle_is_reported() {
        let erg = Erg::new(
            vec![sink("A"), sink("B")],
            vec![("A".into(), "B".into()), ("B".into(), "A".into())],
        );
        let violations = validate_graph(&erg);
        assert!(violations
            .iter()
            .any(|v| matches!(v, Violation::Cycle { .. })));
    }

    #[test]
    fn dangling_edge_is_reported() {
        let erg = Erg::new(vec![sink("A")], vec![("A".into(), "Z".into())]);
        let violations = validate_graph(&erg);
        assert!(violations
            .iter()
            .any(|v| matches!(v, Violation::DanglingEdge { child, .. } if child.as_str() == "Z")));
    }

    #[test]
    fn missing_sink_and_orphan_math_are_reported() {
        let erg = Erg::new(
            vec![ErgNode::math(
                "M",
                OperationKind::Addition,
                vec![Num::from_int(1)],
                "add one",
            )],
            vec![],
        );
        let violations = validate_graph(&erg);
        assert!(violations.contains(&Violation::NoConditionalSink));
        assert!(violations
            .iter()
            .any(|v| matches!(v, Violation::MathWithoutParent { .. })));
    }

    #[test]
    fn character_interval_resolves_to_the_expected_bounds() {
        let banks = default_banks().unwrap();
        let erg = Erg::new(
            vec![
                ErgNode::knowledge("A", "cyrillic_letters", "recall the Cyrillic letter count"),
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
                    "subtract two for the lower limit",
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
                    "add the symmetry axes for the upper limit",
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
        );
        let ec = evaluate_graph(&erg, &banks).unwrap();
        assert_eq!(
            ec.sinks[0].check,
            Check::leaf(
                DimensionKind::CharacterCount,
                ConditionKind::Interval,
                vec![ParamValue::int(64), ParamValue::int(103)],
            )
        );
        assert_eq!(
            ec.resolved_values.get(&NodeId::from("M2")),
            Some(&Value::Num(Num::from_int(64)))
        );
        assert_eq!(
            ec.resolved_values.get(&NodeId::from("M4")),
            Some(&Value::Num(Num::from_int(103)))
        );
    }

    #[test]
    fn knowledge_feeds_not_equal_parameter() {
        let banks = default_banks().unwrap();
        let erg = Erg::new(
            vec![
                ErgNode::knowledge("K", "octopus_brains", "recall the brains of an octopus"),
                ErgNode::conditional(
                    "S",
                    ConditionKind::NotEqualTo,
                    DimensionKind::UnorderedListItemCount,
                    vec![],
                    "forbid that many list items",
                ),
            ],
            vec![("K".into(), "S".into())],
        );
        let ec = evaluate_graph(&erg, &banks).unwrap();
        assert_eq!(
            ec.sinks[0].check,
            Check::leaf(
                DimensionKind::UnorderedListItemCount,
                ConditionKind::NotEqualTo,
                vec![ParamValue::int(9)],
            )
        );
    }

    #[test]
    fn literal_only_conditional_passes_through() {
        let banks = default_banks().unwrap();
        let erg = Erg::new(
            vec![ErgNode::conditional(
                "S",
                ConditionKind::Interval,
                DimensionKind::WordCount,
                vec![ParamValue::int(10), ParamValue::int(20)],
                "keep the word count in range",
            )],
            vec![],
        );
        let ec = evaluate_graph(&erg, &banks).unwrap();
        assert_eq!(
            ec.sinks[0].check,
            Check::leaf(
                DimensionKind::WordCount,
                ConditionKind::Interval,
                vec![ParamValue::int(10), ParamValue::int(20)],
            )
        );
    }

    #[test]
    fn division_by_resolved_zero_errors() {
        let banks = default_banks().unwrap();
        let erg = Erg::new(
            vec![
                ErgNode::knowledge("K", "cube_faces", "recall the cube faces"),
                ErgNode::math(
                    "M",
                    OperationKind::Division,
                    vec![Num::zero()],
                    "divide by zero",
                ),
                sink("S"),
            ],
            vec![("K".into(), "M".into()), ("M".into(), "S".into())],
        );
        let err = evaluate_graph(&erg, &banks).unwrap_err();
        assert!(matches!(err, EvalError::Arithmetic { .. }));
    }

    #[test]
    fn unknown_fact_propagates() {
        let banks = default_banks().unwrap();
        let erg = Erg::new(
            vec![
                ErgNode::knowledge("K", "no_such_fact", "recall nothing"),
                sink("S"),
            ],
            vec![("K".into(), "S".into())],
        );
        let err = evaluate_graph(&erg, &banks).unwrap_err();
        assert!(matches!(err, EvalError::FactNotFound { .. }));
    }

    #[test]
    fn combinator_sink_collects_conditional_parents() {
        let banks = default_banks().unwrap();
        let erg = Erg::new(
            vec![
                ErgNode::conditional(
                    "A",
                    ConditionKind::NoMoreThan,
                    DimensionKind::ParagraphCount,
                    vec![ParamValue::int(2)],
                    "at most two paragraphs",
                ),
                ErgNode::conditional(
                    "B",
                    ConditionKind::NoLessThan,
                    DimensionKind::ParagraphCount,
                    vec![ParamValue::int(5)],
                    "at least five paragraphs",
                ),
                ErgNode::conditional(
                    "C",
                    ConditionKind::LogicalOr,
                    DimensionKind::ParagraphCount,
                    vec![],
                    "either bound holds",
                ),
            ],
            vec![("A".into(), "C".into()), ("B".into(), "C".into())],
        );
        let ec = evaluate_graph(&erg, &banks).unwrap();
        assert_eq!(ec.sinks.len(), 1);
        assert!(matches!(&ec.sinks[0].check, Check::Any(children) if children.len() == 2));
    }

    #[test]
    fn mermaid_parses_both_arrows_and_chains() {
        let parsed = parse_mermaid("A-->C, B-->C, C-->D").unwrap();
        let expect = |a: &str, b: &str| (NodeId::from(a), NodeId::from(b));
        assert_eq!(
            parsed.edges,
            vec![expect("A", "C"), expect("B", "C"), expect("C", "D")]
        );
        assert_eq!(parse_mermaid("A->C").unwrap().edges, vec![expect("A", "C")]);
        assert_eq!(
            parse_mermaid("A->B-->C").unwrap().edges,
            vec![expect("A", "B"), expect("B", "C")]
        );
    }

    #[test]
    fn malformed_arrow_names_the_line() {
        let err = parse_mermaid("A-->B\nA--C").unwrap_err();
        assert_eq!(err.line, 2);
    }

    #[test]
    fn render_is_canonical_and_round_trips() {
        let erg = Erg::new(
            vec![
                sink("D"),
                ErgNode::knowledge("A", "cube_faces", "a"),
                ErgNode::knowledge("B", "week_days", "b"),
                ErgNode::math("C", OperationKind::Addition, vec![], "c"),
            ],
            vec![
                ("A".into(), "C".into()),
                ("B".into(), "C".into()),
                ("C".into(), "D".into()),
            ],
        );
        let text = render_mermaid(&erg);
        assert_eq!(text, "A-->C, B-->C, C-->D");
        let parsed = parse_mermaid(&text).unwrap();
        assert_eq!(parsed.edges, erg.edges);
    }

    #[test]
    fn isolated_nodes_render_as_declarations() {
        let erg = Erg::new(vec![sink("S")], vec![]);
        let text = render_mermaid(&erg);
        assert_eq!(text, "S");
        let parsed = parse_mermaid(&text).unwrap();
        assert!(parsed.edges.is_empty());
        assert_eq!(parsed.isolated, vec![NodeId::from("S")]);
    }

    #[test]
    fn int_class_membership() {
        assert!(IntClass::Prime.contains(2));
        assert!(IntClass::Prime.contains(13));
        assert!(!IntClass::Prime.contains(1));
        assert!(!IntClass::Prime.contains(9));
        assert!(IntClass::Even.contains(0));
        assert!(IntClass::Even.contains(-4));
        assert!(IntClass::Odd.contains(-3));
        assert!(IntClass::Composite.contains(9));
        assert!(!IntClass::Composite.contains(7));
        for v in [0, 1, 2, 3, 5, 8, 13, 21] {
            assert!(IntClass::Fibonacci.contains(v), "{v}");
        }
        assert!(!IntClass::Fibonacci.contains(4));
        assert!(!IntClass::Fibonacci.contains(-1));
    }
}
