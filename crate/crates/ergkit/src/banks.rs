//! Preset node banks: knowledge facts, condition kinds, arithmetic
//! operations, and the measurable-dimension catalogue, plus seeded sampling
//! over them.
//!
//! Banks are immutable after load and safe for unrestricted concurrent
//! reads. Sampling takes an explicit seed and holds no hidden state.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BankError {
    #[error("bank record {context}: {message}")]
    Schema { context: String, message: String },
    #[error("duplicate id {0:?} in knowledge bank")]
    DuplicateId(String),
    #[error("requested {requested} {kind} nodes but the bank holds {available}")]
    Capacity {
        kind: &'static str,
        requested: usize,
        available: usize,
    },
    #[error("unknown fact id {0:?}")]
    FactNotFound(String),
    #[error("bank file error: {0}")]
    FileFormat(String),
    #[error("failed to read bank file: {0}")]
    Io(#[from] std::io::Error),
}

/// Answer of a knowledge fact. Integer answers feed arithmetic; text answers
/// feed text-valued predicates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum FactAnswer {
    Integer(i64),
    Text(String),
}

impl FactAnswer {
    /// Literal form used by leakage screening and rubric rendering.
    pub fn literal(&self) -> String {
        match self {
            FactAnswer::Integer(v) => v.to_string(),
            FactAnswer::Text(s) => s.clone(),
        }
    }
}

/// An objective question with a canonical answer — the implicit-reasoning
/// leaves of a constraint graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeFact {
    pub id: String,
    /// Noun-phrase form ("the number of faces of a cube") so it embeds
    /// directly in constraint text.
    pub question: String,
    pub answer: FactAnswer,
    pub category: String,
}

/// The closed set of condition kinds a conditional node can carry.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum ConditionKind {
    NoMoreThan,
    NoLessThan,
    Interval,
    EqualTo,
    NotEqualTo,
    Forbidden,
    Required,
    LogicalAnd,
    LogicalOr,
    MaximumValue,
    MinimumValue,
    PositiveIntegerMultipleOf,
    StrictlyAscendingByLength,
    ConsecutiveFibonacciTerms,
}

/// Kind of value a condition parameter slot accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamValueKind {
    /// Exact numeric literal, a dimension self-reference, or an integer
    /// class such as "prime".
    Numeric,
    /// Literal text.
    Text,
    /// Either numeric or text, matched against the dimension kind at
    /// compile time.
    NumericOrText,
}

/// Parameter schema entry: slot name plus accepted value kind.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamSlot {
    pub name: &'static str,
    pub kind: ParamValueKind,
}

impl ConditionKind {
    pub const ALL: [ConditionKind; 14] = [
        ConditionKind::NoMoreThan,
        ConditionKind::NoLessThan,
        ConditionKind::Interval,
        ConditionKind::EqualTo,
        ConditionKind::NotEqualTo,
        ConditionKind::Forbidden,
        ConditionKind::Required,
        ConditionKind::LogicalAnd,
        ConditionKind::LogicalOr,
        ConditionKind::MaximumValue,
        ConditionKind::MinimumValue,
        ConditionKind::PositiveIntegerMultipleOf,
        ConditionKind::StrictlyAscendingByLength,
        ConditionKind::ConsecutiveFibonacciTerms,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ConditionKind::NoMoreThan => "no_more_than",
            ConditionKind::NoLessThan => "no_less_than",
            ConditionKind::Interval => "interval",
            ConditionKind::EqualTo => "equal_to",
            ConditionKind::NotEqualTo => "not_equal_to",
            ConditionKind::Forbidden => "forbidden",
            ConditionKind::Required => "required",
            ConditionKind::LogicalAnd => "logical_and",
            ConditionKind::LogicalOr => "logical_or",
            ConditionKind::MaximumValue => "maximum_value",
            ConditionKind::MinimumValue => "minimum_value",
            ConditionKind::PositiveIntegerMultipleOf => "positive_integer_multiple_of",
            ConditionKind::StrictlyAscendingByLength => "strictly_ascending_by_length",
            ConditionKind::ConsecutiveFibonacciTerms => "consecutive_fibonacci_terms",
        }
    }

    /// Parameter slots this condition takes. Combinators take none — their
    /// structure lives in the predicate tree, not in parameters.
    pub fn param_schema(&self) -> Vec<ParamSlot> {
        use ParamValueKind::*;
        match self {
            ConditionKind::NoMoreThan => vec![ParamSlot { name: "limit", kind: Numeric }],
            ConditionKind::NoLessThan => vec![ParamSlot { name: "limit", kind: Numeric }],
            ConditionKind::Interval => vec![
                ParamSlot { name: "lower", kind: Numeric },
                ParamSlot { name: "upper", kind: Numeric },
            ],
            ConditionKind::EqualTo => vec![ParamSlot { name: "value", kind: NumericOrText }],
            ConditionKind::NotEqualTo => vec![ParamSlot { name: "value", kind: NumericOrText }],
            ConditionKind::Forbidden => vec![ParamSlot { name: "term", kind: Text }],
            ConditionKind::Required => vec![ParamSlot { name: "term", kind: Text }],
            ConditionKind::LogicalAnd | ConditionKind::LogicalOr => vec![],
            ConditionKind::MaximumValue => vec![ParamSlot { name: "limit", kind: Numeric }],
            ConditionKind::MinimumValue => vec![ParamSlot { name: "limit", kind: Numeric }],
            ConditionKind::PositiveIntegerMultipleOf => {
                vec![ParamSlot { name: "base", kind: Numeric }]
            }
            ConditionKind::StrictlyAscendingByLength => vec![],
            ConditionKind::ConsecutiveFibonacciTerms => vec![],
        }
    }

    pub fn arity(&self) -> usize {
        self.param_schema().len()
    }

    pub fn is_combinator(&self) -> bool {
        matches!(self, ConditionKind::LogicalAnd | ConditionKind::LogicalOr)
    }
}

impl fmt::Display for ConditionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ConditionKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ConditionKind::ALL
            .iter()
            .find(|c| c.name() == s)
            .copied()
            .ok_or_else(|| format!("unknown condition kind {s:?}"))
    }
}

/// The four arithmetic operations a mathematical node can perform.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum OperationKind {
    Addition,
    Subtraction,
    Multiplication,
    Division,
}

impl OperationKind {
    pub const ALL: [OperationKind; 4] = [
        OperationKind::Addition,
        OperationKind::Subtraction,
        OperationKind::Multiplication,
        OperationKind::Division,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            OperationKind::Addition => "addition",
            OperationKind::Subtraction => "subtraction",
            OperationKind::Multiplication => "multiplication",
            OperationKind::Division => "division",
        }
    }

    /// Connective used when rendering derivations in natural language.
    pub fn connective(&self) -> &'static str {
        match self {
            OperationKind::Addition => "plus",
            OperationKind::Subtraction => "minus",
            OperationKind::Multiplication => "times",
            OperationKind::Division => "divided by",
        }
    }
}

impl fmt::Display for OperationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OperationKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        OperationKind::ALL
            .iter()
            .find(|o| o.name() == s)
            .copied()
            .ok_or_else(|| format!("unknown operation kind {s:?}"))
    }
}

/// Shape of the value a dimension measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementKind {
    /// Non-negative integer.
    Count,
    /// A single text value.
    Text,
    /// An unordered set of texts.
    Set,
    /// An ordered sequence (of texts or counts, depending on dimension).
    Sequence,
}

/// The closed catalogue of measurable response dimensions.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum DimensionKind {
    ParagraphCount,
    SentenceCount,
    SentenceTypeMix,
    WordCount,
    CharacterCount,
    PunctuationCount,
    BoldWordCount,
    BoldWordSet,
    UnorderedListItemCount,
    UnorderedListItems,
    KeywordCount,
    KeywordSet,
    Language,
    BeginningOfReply,
    EndingOfReply,
    PerParagraphSentenceCounts,
    NumberedListItemCount,
    QuotationCount,
    BracketedTermCount,
    LineCount,
    SpecialSymbolCount,
}

impl DimensionKind {
    pub const ALL: [DimensionKind; 21] = [
        DimensionKind::ParagraphCount,
        DimensionKind::SentenceCount,
        DimensionKind::SentenceTypeMix,
        DimensionKind::WordCount,
        DimensionKind::CharacterCount,
        DimensionKind::PunctuationCount,
        DimensionKind::BoldWordCount,
        DimensionKind::BoldWordSet,
        DimensionKind::UnorderedListItemCount,
        DimensionKind::UnorderedListItems,
        DimensionKind::KeywordCount,
        DimensionKind::KeywordSet,
        DimensionKind::Language,
        DimensionKind::BeginningOfReply,
        DimensionKind::EndingOfReply,
        DimensionKind::PerParagraphSentenceCounts,
        DimensionKind::NumberedListItemCount,
        DimensionKind::QuotationCount,
        DimensionKind::BracketedTermCount,
        DimensionKind::LineCount,
        DimensionKind::SpecialSymbolCount,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            DimensionKind::ParagraphCount => "paragraph_count",
            DimensionKind::SentenceCount => "sentence_count",
            DimensionKind::SentenceTypeMix => "sentence_type_mix",
            DimensionKind::WordCount => "word_count",
            DimensionKind::CharacterCount => "character_count",
            DimensionKind::PunctuationCount => "punctuation_count",
            DimensionKind::BoldWordCount => "bold_word_count",
            DimensionKind::BoldWordSet => "bold_word_set",
            DimensionKind::UnorderedListItemCount => "unordered_list_item_count",
            DimensionKind::UnorderedListItems => "unordered_list_items",
            DimensionKind::KeywordCount => "keyword_count",
            DimensionKind::KeywordSet => "keyword_set",
            DimensionKind::Language => "language",
            DimensionKind::BeginningOfReply => "beginning_of_reply",
            DimensionKind::EndingOfReply => "ending_of_reply",
            DimensionKind::PerParagraphSentenceCounts => "per_paragraph_sentence_counts",
            DimensionKind::NumberedListItemCount => "numbered_list_item_count",
            DimensionKind::QuotationCount => "quotation_count",
            DimensionKind::BracketedTermCount => "bracketed_term_count",
            DimensionKind::LineCount => "line_count",
            DimensionKind::SpecialSymbolCount => "special_symbol_count",
        }
    }

    pub fn measurement_kind(&self) -> MeasurementKind {
        use DimensionKind::*;
        match self {
            ParagraphCount | SentenceCount | WordCount | CharacterCount | PunctuationCount
            | BoldWordCount | UnorderedListItemCount | KeywordCount | NumberedListItemCount
            | QuotationCount | BracketedTermCount | LineCount | SpecialSymbolCount => {
                MeasurementKind::Count
            }
            Language | BeginningOfReply | EndingOfReply => MeasurementKind::Text,
            SentenceTypeMix | BoldWordSet | KeywordSet => MeasurementKind::Set,
            UnorderedListItems | PerParagraphSentenceCounts => MeasurementKind::Sequence,
        }
    }

    /// Subject phrase without the "in the reply" location, used where the
    /// sentence already establishes the reply as context.
    pub fn short_phrase(&self) -> &'static str {
        match self {
            DimensionKind::ParagraphCount => "the number of paragraphs",
            DimensionKind::SentenceCount => "the number of sentences",
            DimensionKind::SentenceTypeMix => "the set of sentence types used",
            DimensionKind::WordCount => "the number of words",
            DimensionKind::CharacterCount => "the number of characters",
            DimensionKind::PunctuationCount => "the total number of punctuation marks",
            DimensionKind::BoldWordCount => "the number of bold words",
            DimensionKind::BoldWordSet => "the set of distinct bold words",
            DimensionKind::UnorderedListItemCount => {
                "the number of top-level items in the unordered list"
            }
            DimensionKind::UnorderedListItems => {
                "the sequence of top-level items in the unordered list"
            }
            DimensionKind::KeywordCount => "the total number of keyword occurrences",
            DimensionKind::KeywordSet => "the set of keywords present",
            DimensionKind::Language => "the dominant script",
            DimensionKind::BeginningOfReply => "the beginning",
            DimensionKind::EndingOfReply => "the ending",
            DimensionKind::PerParagraphSentenceCounts => {
                "the number of sentences in each paragraph"
            }
            DimensionKind::NumberedListItemCount => "the number of numbered list items",
            DimensionKind::QuotationCount => "the number of quoted passages",
            DimensionKind::BracketedTermCount => "the number of bracketed terms",
            DimensionKind::LineCount => "the number of lines",
            DimensionKind::SpecialSymbolCount => "the number of special symbols",
        }
    }

    /// Noun phrase used in constraint and rubric rendering.
    pub fn phrase(&self) -> &'static str {
        match self {
            DimensionKind::ParagraphCount => "the number of paragraphs in the reply",
            DimensionKind::SentenceCount => "the number of sentences in the reply",
            DimensionKind::SentenceTypeMix => "the set of sentence types used in the reply",
            DimensionKind::WordCount => "the number of words in the reply",
            DimensionKind::CharacterCount => "the number of characters in the reply",
            DimensionKind::PunctuationCount => "the total number of punctuation marks in the reply",
            DimensionKind::BoldWordCount => "the number of bold words in the reply",
            DimensionKind::BoldWordSet => "the set of distinct bold words in the reply",
            DimensionKind::UnorderedListItemCount => {
                "the number of top-level items in the reply's unordered list"
            }
            DimensionKind::UnorderedListItems => {
                "the sequence of top-level items in the reply's unordered list"
            }
            DimensionKind::KeywordCount => "the total number of keyword occurrences in the reply",
            DimensionKind::KeywordSet => "the set of keywords present in the reply",
            DimensionKind::Language => "the dominant script of the reply",
            DimensionKind::BeginningOfReply => "the beginning of the reply",
            DimensionKind::EndingOfReply => "the ending of the reply",
            DimensionKind::PerParagraphSentenceCounts => {
                "the number of sentences in each paragraph of the reply"
            }
            DimensionKind::NumberedListItemCount => {
                "the number of numbered list items in the reply"
            }
            DimensionKind::QuotationCount => "the number of quoted passages in the reply",
            DimensionKind::BracketedTermCount => "the number of bracketed terms in the reply",
            DimensionKind::LineCount => "the number of lines in the reply",
            DimensionKind::SpecialSymbolCount => "the number of special symbols in the reply",
        }
    }
}

impl fmt::Display for DimensionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DimensionKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DimensionKind::ALL
            .iter()
            .find(|d| d.name() == s)
            .copied()
            .ok_or_else(|| format!("unknown dimension kind {s:?}"))
    }
}

/// The loaded node banks. Immutable after construction.
#[derive(Debug, Clone)]
pub struct Banks {
    facts: Vec<KnowledgeFact>,
    fact_index: BTreeMap<String, usize>,
    conditions: Vec<ConditionKind>,
    operations: Vec<OperationKind>,
    dimensions: Vec<DimensionKind>,
    /// Version tag of the bank content, carried into dataset provenance.
    pub version: String,
}

/// Per-kind sampling counts for [`sample_nodes`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NodeCounts {
    pub facts: usize,
    pub conditions: usize,
    pub operations: usize,
    pub dimensions: usize,
}

/// A deterministic, duplicate-free selection drawn from the banks.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSelection {
    pub facts: Vec<KnowledgeFact>,
    pub conditions: Vec<ConditionKind>,
    pub operations: Vec<OperationKind>,
    pub dimensions: Vec<DimensionKind>,
}

/// Where to load banks from.
#[derive(Debug, Clone, Default)]
pub enum BankSource<'a> {
    /// The curated bank compiled into the library.
    #[default]
    EmbeddedDefault,
    /// A line-delimited bank file (see `storage` for the record schema).
    File(&'a Path),
}

impl Banks {
    pub fn from_facts(facts: Vec<KnowledgeFact>, version: String) -> Result<Self, BankError> {
        let mut fact_index = BTreeMap::new();
        for (i, fact) in facts.iter().enumerate() {
            if fact.question.trim().is_empty() {
                return Err(BankError::Schema {
                    context: format!("fact {}", fact.id),
                    message: "question must be non-empty".into(),
                });
            }
            if let FactAnswer::Text(t) = &fact.answer {
                if t.trim().is_empty() {
                    return Err(BankError::Schema {
                        context: format!("fact {}", fact.id),
                        message: "text answer must be non-empty".into(),
                    });
                }
            }
            if fact_index.insert(fact.id.clone(), i).is_some() {
                return Err(BankError::DuplicateId(fact.id.clone()));
            }
        }
        Ok(Banks {
            facts,
            fact_index,
            conditions: ConditionKind::ALL.to_vec(),
            operations: OperationKind::ALL.to_vec(),
            dimensions: DimensionKind::ALL.to_vec(),
            version,
        })
    }

    pub fn facts(&self) -> &[KnowledgeFact] {
        &self.facts
    }

    pub fn conditions(&self) -> &[ConditionKind] {
        &self.conditions
    }

    pub fn operations(&self) -> &[OperationKind] {
        &self.operations
    }

    pub fn dimensions(&self) -> &[DimensionKind] {
        &self.dimensions
    }

    /// Bank sizes as reported by introspection: (facts, conditions,
    /// operations, dimensions).
    pub fn sizes(&self) -> (usize, usize, usize, usize) {
        (
            self.facts.len(),
            self.conditions.len(),
            self.operations.len(),
            self.dimensions.len(),
        )
    }
}

/// Loads banks from the given source.
pub fn load_banks(source: BankSource<'_>) -> Result<Banks, BankError> {
    match source {
        BankSource::EmbeddedDefault => default_banks(),
        BankSource::File(path) => {
            crate::storage::read_bank_file(path).map_err(|e| match e {
                crate::storage::StorageError::Bank(inner) => inner,
                other => BankError::FileFormat(other.to_string()),
            })
        }
    }
}

/// Looks up a knowledge fact by id.
pub fn lookup_fact<'a>(banks: &'a Banks, id: &str) -> Result<&'a KnowledgeFact, BankError> {
    banks
        .fact_index
        .get(id)
        .map(|&i| &banks.facts[i])
        .ok_or_else(|| BankError::FactNotFound(id.to_string()))
}

/// Draws a duplicate-free selection from each bank. Deterministic for a
/// fixed `(banks, counts, seed)` triple across platforms.
pub fn sample_nodes(
    banks: &Banks,
    counts: NodeCounts,
    seed: u64,
) -> Result<NodeSelection, BankError> {
    fn pick<T: Clone>(
        rng: &mut ChaCha8Rng,
        pool: &[T],
        n: usize,
        kind: &'static str,
    ) -> Result<Vec<T>, BankError> {
        if n > pool.len() {
            return Err(BankError::Capacity {
                kind,
                requested: n,
                available: pool.len(),
            });
        }
        let mut indices: Vec<usize> = (0..pool.len()).collect();
        indices.shuffle(rng);
        indices.truncate(n);
        Ok(indices.into_iter().map(|i| pool[i].clone()).collect())
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(NodeSelection {
        facts: pick(&mut rng, &banks.facts, counts.facts, "fact")?,
        conditions: pick(&mut rng, &banks.conditions, counts.conditions, "condition")?,
        operations: pick(&mut rng, &banks.operations, counts.operations, "operation")?,
        dimensions: pick(&mut rng, &banks.dimensions, counts.dimensions, "dimension")?,
    })
}

/// The curated knowledge bank compiled into the library.
pub fn default_banks() -> Result<Banks, BankError> {
    let int = |id: &str, question: &str, answer: i64, category: &str| KnowledgeFact {
        id: id.into(),
        question: question.into(),
        answer: FactAnswer::Integer(answer),
        category: category.into(),
    };
    let text = |id: &str, question: &str, answer: &str, category: &str| KnowledgeFact {
        id: id.into(),
        question: question.into(),
        answer: FactAnswer::Text(answer.into()),
        category: category.into(),
    };

    let facts = vec![
        int("galilean_moons", "the number of Galilean moons of Jupiter", 4, "astronomy"),
        int("octopus_brains", "the number of brains of an octopus", 9, "biology"),
        int("cyrillic_letters", "the number of letters in the current Cyrillic alphabet", 33, "language"),
        int("square_symmetry_axes", "the number of symmetry axes of a square", 4, "geometry"),
        int("chess_pawns_per_side", "the number of pawns per side in chess", 8, "games"),
        int("cube_faces", "the number of faces of a cube", 6, "geometry"),
        int("week_days", "the number of days in a week", 7, "time"),
        int("ipv4_bits", "the number of bits in an IPv4 address", 32, "computing"),
        int("ascii_characters", "the number of ASCII characters", 128, "computing"),
        int("minute_seconds", "the number of seconds in a minute", 60, "time"),
        int("moon_landing_year", "the year humans first landed on the Moon", 1969, "history"),
        text("closest_star", "the star closest to the Sun", "Proxima Centauri", "astronomy"),
        int("pronic_third", "the third pronic number", 12, "mathematics"),
        int("fibonacci_seventh", "the seventh Fibonacci number", 13, "mathematics"),
        int("continents", "the number of continents on Earth", 7, "geography"),
        int("solar_planets", "the number of planets in the Solar System", 8, "astronomy"),
        int("rainbow_colors", "the number of colors in a rainbow", 7, "nature"),
        int("octopus_hearts", "the number of hearts of an octopus", 3, "biology"),
        int("english_letters", "the number of letters in the English alphabet", 26, "language"),
        int("greek_letters", "the number of letters in the Greek alphabet", 24, "language"),
        int("piano_keys", "the number of keys on a standard piano", 88, "music"),
        int("chess_squares", "the number of squares on a chessboard", 64, "games"),
        int("baseball_innings", "the number of innings in a standard baseball game", 9, "sports"),
        int("soccer_players", "the number of players per side in soccer", 11, "sports"),
        int("water_boiling_celsius", "the boiling point of water in degrees Celsius at sea level", 100, "physics"),
        int("right_angle_degrees", "the number of degrees in a right angle", 90, "geometry"),
        int("triangle_angle_sum", "the sum of interior angles of a triangle in degrees", 180, "geometry"),
        int("hexagon_sides", "the number of sides of a hexagon", 6, "geometry"),
        int("dozen", "the number of items in a dozen", 12, "everyday"),
        int("leap_year_days", "the number of days in a leap year", 366, "time"),
        int("deck_cards", "the number of cards in a standard deck without jokers", 52, "games"),
        int("tarot_major_arcana", "the number of major arcana cards in a tarot deck", 22, "games"),
        int("adult_teeth", "the number of teeth in a full adult human set", 32, "biology"),
        int("spider_legs", "the number of legs of a spider", 8, "biology"),
        int("insect_legs", "the number of legs of an insect", 6, "biology"),
        int("honeybee_eyes", "the number of eyes of a honeybee", 5, "biology"),
        int("snowflake_arms", "the number of arms of a typical snowflake", 6, "nature"),
        int("olympic_rings", "the number of rings on the Olympic flag", 5, "sports"),
        int("solfege_notes", "the number of notes in the solfege scale", 7, "music"),
        int("roman_m", "the value of the Roman numeral M", 1000, "history"),
        int("byte_bits", "the number of bits in a byte", 8, "computing"),
        int("nibble_bits", "the number of bits in a nibble", 4, "computing"),
        int("hex_base", "the base of the hexadecimal number system", 16, "computing"),
        int("hour_minutes", "the number of minutes in an hour", 60, "time"),
        int("day_hours", "the number of hours in a day", 24, "time"),
        int("year_months", "the number of months in a year", 12, "time"),
        int("zodiac_signs", "the number of signs of the zodiac", 12, "culture"),
        int("great_lakes", "the number of Great Lakes of North America", 5, "geography"),
        int("world_oceans", "the number of oceans of the world", 5, "geography"),
        int("ancient_wonders", "the number of wonders of the ancient world", 7, "history"),
        int("snow_white_dwarfs", "the number of dwarfs in the Snow White tale", 7, "culture"),
        int("violin_strings", "the number of strings of a violin", 4, "music"),
        int("guitar_strings", "the number of strings of a standard guitar", 6, "music"),
        int("stop_sign_sides", "the number of sides of a stop sign", 8, "everyday"),
        int("crab_legs", "the number of legs of a crab", 10, "biology"),
        int("mars_moons", "the number of moons of Mars", 2, "astronomy"),
        int("equilateral_symmetry_axes", "the number of symmetry axes of an equilateral triangle", 3, "geometry"),
        text("largest_planet", "the largest planet in the Solar System", "Jupiter", "astronomy"),
        text("gold_symbol", "the chemical symbol of gold", "Au", "chemistry"),
        text("france_capital", "the capital of France", "Paris", "geography"),
    ];
    Banks::from_facts(facts, "builtin-1".into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_bank_holds_the_named_facts() {
        let banks = default_banks().unwrap();
        assert!(banks.facts().len() >= 40);
        let cases = [
            ("galilean_moons", 4),
            ("octopus_brains", 9),
            ("cyrillic_letters", 33),
            ("square_symmetry_axes", 4),
            ("chess_pawns_per_side", 8),
            ("cube_faces", 6),
            ("week_days", 7),
            ("ipv4_bits", 32),
            ("ascii_characters", 128),
            ("minute_seconds", 60),
            ("moon_landing_year", 1969),
        ];
        for (id, expected) in cases {
            let fact = lookup_fact(&banks, id).unwrap();
            assert_eq!(fact.answer, FactAnswer::Integer(expected), "fact {id}");
        }
        let star = lookup_fact(&banks, "closest_star").unwrap();
        assert_eq!(star.answer, FactAnswer::Text("Proxima Centauri".into()));
    }

    #[test]
    fn bank_sizes_match_introspection() {
        let banks = default_banks().unwrap();
        let (f, c, o, d) = banks.sizes();
        assert_eq!(f, banks.facts().len());
        assert_eq!(c, 14);
        assert_eq!(o, 4);
        assert_eq!(d, 21);
    }

    #[test]
    fn duplicate_fact_ids_are_rejected() {
        let fact = KnowledgeFact {
            id: "dup".into(),
            question: "q".into(),
            answer: FactAnswer::Integer(1),
            category: "t".into(),
        };
        let err = Banks::from_facts(vec![fact.clone(), fact], "v".into()).unwrap_err();
        assert!(matches!(err, BankError::DuplicateId(id) if id == "dup"));
    }

    #[test]
    fn unknown_fact_is_not_found() {
        let banks = default_banks().unwrap();
        assert!(matches!(
            lookup_fact(&banks, "no_such_fact"),
            Err(BankError::FactNotFound(_))
        ));
    }

    #[test]
    fn sampling_is_seed_deterministic_and_duplicate_free() {
        let banks = default_banks().unwrap();
        let counts = NodeCounts {
            facts: 2,
            conditions: 1,
            operations: 1,
            dimensions: 3,
        };
        let a = sample_nodes(&banks, counts, 7).unwrap();
        let b = sample_nodes(&banks, counts, 7).unwrap();
        assert_eq!(a, b);
        let mut ids: Vec<&str> = a.facts.iter().map(|f| f.id.as_str()).collect();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), a.facts.len());
    }

    #[test]
    fn zero_counts_yield_empty_selection() {
        let banks = default_banks().unwrap();
        let sel = sample_nodes(&banks, NodeCounts::default(), 1).unwrap();
        assert!(sel.facts.is_empty());
        assert!(sel.conditions.is_empty());
    }

    #[test]
    fn oversampling_conditions_hits_capacity() {
        let banks = default_banks().unwrap();
        let counts = NodeCounts {
            conditions: 15,
            ..NodeCounts::default()
        };
        let err = sample_nodes(&banks, counts, 1).unwrap_err();
        assert!(matches!(
            err,
            BankError::Capacity {
                kind: "condition",
                requested: 15,
                available: 14,
            }
        ));
    }
}
