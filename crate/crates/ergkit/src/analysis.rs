//! Deterministic structural measurement of response text — the substrate
//! every verifier predicate consumes.
//!
//! Measurement rules, versioned by [`crate::RULES_VERSION`]:
//!
//! - The asterisk is markup and is never counted as content; all other
//!   non-whitespace characters count, including punctuation and list
//!   markers.
//! - Paragraphs split on blank (whitespace-only) lines.
//! - Sentences split on `.`/`!`/`?` terminals outside bold spans; a leading
//!   list marker (`- `, `* `, `+ `, `3. `) on a line is skipped; a run of
//!   consecutive terminals ends one sentence typed by the run's first mark;
//!   unterminated trailing text forms a sentence of type `other`.
//! - Bold spans sit between paired `**` markers, paired left to right; an
//!   unpaired trailing marker is literal text and bolds nothing.
//! - A list item is a line whose first non-space character is `-`, `*`, or
//!   `+` followed by whitespace; indentation of two or more columns marks a
//!   nested item, which is excluded from top-level blocks.
//! - The punctuation set is the closed table in [`PUNCTUATION`].
//!
//! Everything here is a pure function over its inputs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// The closed punctuation table used by `punctuation_count`.
pub const PUNCTUATION: [char; 14] = [
    '.', ',', '!', '?', ';', ':', '—', '(', ')', '[', ']', '"', '\'', '…',
];

pub fn is_punctuation(c: char) -> bool {
    PUNCTUATION.contains(&c)
}

/// Sentence type, fixed by the terminal mark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SentenceType {
    Declarative,
    Interrogative,
    Exclamatory,
    Other,
}

impl SentenceType {
    pub fn name(&self) -> &'static str {
        match self {
            SentenceType::Declarative => "declarative",
            SentenceType::Interrogative => "interrogative",
            SentenceType::Exclamatory => "exclamatory",
            SentenceType::Other => "other",
        }
    }

    fn from_terminal(c: char) -> SentenceType {
        match c {
            '.' => SentenceType::Declarative,
            '?' => SentenceType::Interrogative,
            '!' => SentenceType::Exclamatory,
            _ => SentenceType::Other,
        }
    }
}

/// One segmented sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceRecord {
    pub text: String,
    /// Terminal punctuation mark, absent for unterminated tails.
    pub terminal: Option<char>,
    pub sentence_type: SentenceType,
}

/// Marker style of an unordered list block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarkerStyle {
    Dash,
    Asterisk,
    Plus,
}

/// A run of consecutive unordered-list lines.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ListBlock {
    pub marker: MarkerStyle,
    /// Item texts in order. For a top-level block these are its top-level
    /// items (nested items excluded); for a nested-only block, the nested
    /// items.
    pub items: Vec<String>,
    pub top_level: bool,
}

/// Dominant script of a text, detected by character ranges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScriptLanguage {
    Latin,
    Cyrillic,
    Cjk,
    Unknown,
}

impl ScriptLanguage {
    pub fn name(&self) -> &'static str {
        match self {
            ScriptLanguage::Latin => "latin",
            ScriptLanguage::Cyrillic => "cyrillic",
            ScriptLanguage::Cjk => "cjk",
            ScriptLanguage::Unknown => "unknown",
        }
    }
}

/// Every structural measurement of one response.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseMeasurements {
    pub paragraph_count: usize,
    pub sentences: Vec<SentenceRecord>,
    pub per_paragraph_sentence_counts: Vec<usize>,
    pub word_count: usize,
    pub character_count: usize,
    pub punctuation_count: usize,
    pub bold_spans: Vec<String>,
    pub list_blocks: Vec<ListBlock>,
    pub keyword_counts: BTreeMap<String, usize>,
    /// First 64 characters of the trimmed text.
    pub leading_text: String,
    /// Last 64 characters of the trimmed text.
    pub trailing_text: String,
    pub language: ScriptLanguage,
    pub numbered_list_item_count: usize,
    pub quotation_count: usize,
    pub bracketed_term_count: usize,
    pub line_count: usize,
    pub special_symbol_count: usize,
}

impl ResponseMeasurements {
    pub fn sentence_count(&self) -> usize {
        self.sentences.len()
    }

    pub fn bold_word_count(&self) -> usize {
        self.bold_spans.len()
    }

    /// Distinct bold span texts, case-sensitive.
    pub fn bold_word_set(&self) -> Vec<String> {
        let mut set: Vec<String> = Vec::new();
        for span in &self.bold_spans {
            if !set.contains(span) {
                set.push(span.clone());
            }
        }
        set
    }

    /// Top-level items across all top-level list blocks, in order.
    pub fn unordered_list_items(&self) -> Vec<String> {
        self.list_blocks
            .iter()
            .filter(|b| b.top_level)
            .flat_map(|b| b.items.iter().cloned())
            .collect()
    }

    pub fn unordered_list_item_count(&self) -> usize {
        self.list_blocks
            .iter()
            .filter(|b| b.top_level)
            .map(|b| b.items.len())
            .sum()
    }

    pub fn keyword_total(&self) -> usize {
        self.keyword_counts.values().sum()
    }

    /// Keywords with at least one occurrence.
    pub fn keyword_set(&self) -> Vec<String> {
        self.keyword_counts
            .iter()
            .filter(|(_, &n)| n > 0)
            .map(|(k, _)| k.clone())
            .collect()
    }

    /// Sentence type names present, deduplicated.
    pub fn sentence_type_mix(&self) -> Vec<String> {
        let mut mix: Vec<String> = Vec::new();
        for s in &self.sentences {
            let name = s.sentence_type.name().to_string();
            if !mix.contains(&name) {
                mix.push(name);
            }
        }
        mix
    }
}

/// Splits text into paragraphs on blank-line boundaries. Paragraph text is
/// trimmed and never contains a blank line.
pub fn segment_paragraphs(text: &str) -> Vec<String> {
    let mut paragraphs = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            if !current.is_empty() {
                paragraphs.push(current.join("\n").trim().to_string());
                current.clear();
            }
        } else {
            current.push(line);
        }
    }
    if !current.is_empty() {
        paragraphs.push(current.join("\n").trim().to_string());
    }
    paragraphs.retain(|p| !p.is_empty());
    paragraphs
}

/// Byte ranges of paired `**` markers within `text`, paired left to right.
/// Returns `(open_start, close_start)` byte offsets; an odd trailing marker
/// pairs with nothing.
fn bold_marker_pairs(text: &str) -> Vec<(usize, usize)> {
    let bytes = text.as_bytes();
    let mut positions = Vec::new();
    let mut i = 0;
    while i + 1 < bytes.len() {
        if bytes[i] == b'*' && bytes[i + 1] == b'*' {
            positions.push(i);
            i += 2;
        } else {
            i += 1;
        }
    }
    positions
        .chunks_exact(2)
        .map(|pair| (pair[0], pair[1]))
        .collect()
}

/// Texts between paired `**` markers, in order. Whitespace-only spans are
/// dropped; an unpaired trailing marker bolds nothing.
pub fn extract_bold_spans(text: &str) -> Vec<String> {
    bold_marker_pairs(text)
        .into_iter()
        .filter_map(|(open, close)| {
            let span = &text[open + 2..close];
            if span.trim().is_empty() {
                None
            } else {
                Some(span.to_string())
            }
        })
        .collect()
}

/// Leading columns of whitespace, counting a tab as two columns. Returns
/// `(columns, byte offset of first non-space character)`.
fn leading_indent(line: &str) -> (usize, usize) {
    let mut columns = 0;
    for (offset, c) in line.char_indices() {
        match c {
            ' ' => columns += 1,
            '\t' => columns += 2,
            _ => return (columns, offset),
        }
    }
    (columns, line.len())
}

fn unordered_marker(rest: &str) -> Option<(MarkerStyle, &str)> {
    let mut chars = rest.chars();
    let marker = match chars.next() {
        Some('-') => MarkerStyle::Dash,
        Some('*') => MarkerStyle::Asterisk,
        Some('+') => MarkerStyle::Plus,
        _ => return None,
    };
    match chars.next() {
        Some(c) if c.is_whitespace() => Some((marker, chars.as_str())),
        _ => None,
    }
}

fn numbered_marker(rest: &str) -> Option<&str> {
    let digits = rest.chars().take_while(|c| c.is_ascii_digit()).count();
    if digits == 0 {
        return None;
    }
    let after = &rest[digits..];
    let mut chars = after.chars();
    match chars.next() {
        Some('.') | Some(')') => match chars.next() {
            Some(c) if c.is_whitespace() => Some(chars.as_str()),
            _ => None,
        },
        _ => None,
    }
}

#[derive(Debug)]
enum ListLine {
    Item {
        marker: MarkerStyle,
        text: String,
        nested: bool,
    },
    Other,
}

fn classify_list_line(line: &str) -> ListLine {
    let (columns, offset) = leading_indent(line);
    let rest = &line[offset..];
    match unordered_marker(rest) {
        Some((marker, item)) if !item.trim().is_empty() => ListLine::Item {
            marker,
            text: item.trim().to_string(),
            nested: columns >= 2,
        },
        _ => ListLine::Other,
    }
}

/// Groups consecutive unordered-list lines into blocks. Items on lines
/// indented two or more columns are nested and excluded from top-level
/// blocks; a run with no top-level item at all becomes a nested-only block.
pub fn extract_list_items(text: &str) -> Vec<ListBlock> {
    let mut blocks = Vec::new();
    let mut run: Vec<(MarkerStyle, String, bool)> = Vec::new();

    let mut flush = |run: &mut Vec<(MarkerStyle, String, bool)>| {
        if run.is_empty() {
            return;
        }
        let top: Vec<&(MarkerStyle, String, bool)> =
            run.iter().filter(|(_, _, nested)| !nested).collect();
        if top.is_empty() {
            blocks.push(ListBlock {
                marker: run[0].0,
                items: run.iter().map(|(_, t, _)| t.clone()).collect(),
                top_level: false,
            });
        } else {
            blocks.push(ListBlock {
                marker: top[0].0,
                items: top.iter().map(|(_, t, _)| t.clone()).collect(),
                top_level: true,
            });
        }
        run.clear();
    };

    for line in text.lines() {
        match classify_list_line(line) {
            ListLine::Item {
                marker,
                text,
                nested,
            } => run.push((marker, text, nested)),
            ListLine::Other => flush(&mut run),
        }
    }
    flush(&mut run);
    blocks
}

/// Splits text into sentences. Paragraph boundaries always end a sentence,
/// so the total over a text equals the sum over its paragraphs.
pub fn segment_sentences(text: &str) -> Vec<SentenceRecord> {
    segment_paragraphs(text)
        .iter()
        .flat_map(|p| segment_paragraph_sentences(p))
        .collect()
}

fn segment_paragraph_sentences(paragraph: &str) -> Vec<SentenceRecord> {
    let bold_pairs = bold_marker_pairs(paragraph);
    let in_bold = |pos: usize| {
        bold_pairs
            .iter()
            .any(|&(open, close)| pos > open + 1 && pos < close)
    };

    // Byte offsets occupied by list markers, skipped during scanning.
    let mut marker_bytes = vec![false; paragraph.len()];
    let mut line_start = 0;
    for line in paragraph.split('\n') {
        let (_, offset) = leading_indent(line);
        let rest = &line[offset..];
        let marker_len = if let Some((_, after)) = unordered_marker(rest) {
            rest.len() - after.len()
        } else if let Some(after) = numbered_marker(rest) {
            rest.len() - after.len()
        } else {
            0
        };
        for b in marker_bytes
            .iter_mut()
            .skip(line_start + offset)
            .take(marker_len)
        {
            *b = true;
        }
        line_start += line.len() + 1;
    }

    let mut sentences = Vec::new();
    let mut start = 0;
    let mut chars = paragraph.char_indices().peekable();
    while let Some((pos, c)) = chars.next() {
        let terminal = matches!(c, '.' | '!' | '?') && !in_bold(pos) && !marker_bytes[pos];
        if !terminal {
            continue;
        }
        // Consume the rest of the terminal run.
        let mut end = pos + c.len_utf8();
        while let Some(&(next_pos, next)) = chars.peek() {
            if matches!(next, '.' | '!' | '?') && !in_bold(next_pos) {
                end = next_pos + next.len_utf8();
                chars.next();
            } else {
                break;
            }
        }
        let sentence = paragraph[start..end].trim();
        if !sentence.is_empty() {
            sentences.push(SentenceRecord {
                text: sentence.to_string(),
                terminal: Some(c),
                sentence_type: SentenceType::from_terminal(c),
            });
        }
        start = end;
    }
    let tail = paragraph[start..].trim();
    if !tail.is_empty() {
        sentences.push(SentenceRecord {
            text: tail.to_string(),
            terminal: None,
            sentence_type: SentenceType::Other,
        });
    }
    sentences
}

fn count_keyword(words: &[String], normalized: &str, term: &str) -> usize {
    let term = term.trim().to_lowercase();
    if term.is_empty() {
        return 0;
    }
    if term.contains(char::is_whitespace) {
        let folded: String = term.split_whitespace().collect::<Vec<_>>().join(" ");
        normalized.matches(&folded).count()
    } else {
        words.iter().filter(|w| **w == term).count()
    }
}

fn trim_word(w: &str) -> &str {
    w.trim_matches(|c: char| is_punctuation(c) || c == '*')
}

fn script_of(c: char) -> Option<ScriptLanguage> {
    let v = c as u32;
    match v {
        0x0041..=0x007A if c.is_ascii_alphabetic() => Some(ScriptLanguage::Latin),
        0x00C0..=0x024F => Some(ScriptLanguage::Latin),
        0x0400..=0x04FF => Some(ScriptLanguage::Cyrillic),
        0x3040..=0x30FF | 0x4E00..=0x9FFF | 0xAC00..=0xD7AF => Some(ScriptLanguage::Cjk),
        _ => None,
    }
}

fn take_chars(s: &str, n: usize) -> String {
    s.chars().take(n).collect()
}

fn take_last_chars(s: &str, n: usize) -> String {
    let count = s.chars().count();
    s.chars().skip(count.saturating_sub(n)).collect()
}

/// Measures a response. The keyword list controls which terms are tracked
/// in `keyword_counts`; pass an empty slice when no keyword constraint is
/// in play. Identical text and keyword list always produce identical
/// measurements.
pub fn measure(text: &str, keywords: &[String]) -> ResponseMeasurements {
    let paragraphs = segment_paragraphs(text);
    let per_paragraph: Vec<Vec<SentenceRecord>> = paragraphs
        .iter()
        .map(|p| segment_paragraph_sentences(p))
        .collect();
    let per_paragraph_sentence_counts: Vec<usize> =
        per_paragraph.iter().map(|s| s.len()).collect();
    let sentences: Vec<SentenceRecord> = per_paragraph.into_iter().flatten().collect();

    let mut character_count = 0;
    let mut punctuation_count = 0;
    let mut special_symbol_count = 0;
    for c in text.chars() {
        if c.is_whitespace() || c == '*' {
            continue;
        }
        character_count += 1;
        if is_punctuation(c) {
            punctuation_count += 1;
        } else if !c.is_alphanumeric() {
            special_symbol_count += 1;
        }
    }

    let no_markup: String = text.chars().filter(|&c| c != '*').collect();
    let raw_words: Vec<&str> = no_markup.split_whitespace().collect();
    let word_count = raw_words.len();
    let folded_words: Vec<String> = raw_words
        .iter()
        .map(|w| trim_word(w).to_lowercase())
        .collect();
    let normalized = folded_words.join(" ");

    let mut keyword_counts = BTreeMap::new();
    for term in keywords {
        keyword_counts.insert(
            term.clone(),
            count_keyword(&folded_words, &normalized, term),
        );
    }

    let mut numbered_list_item_count = 0;
    for line in text.lines() {
        let (_, offset) = leading_indent(line);
        if let Some(after) = numbered_marker(&line[offset..]) {
            if !after.trim().is_empty() {
                numbered_list_item_count += 1;
            }
        }
    }

    let quotation_count = text.chars().filter(|&c| c == '"').count() / 2;

    let mut bracketed_term_count = 0;
    let mut depth_open: Option<()> = None;
    for c in text.chars() {
        match c {
            '[' if depth_open.is_none() => depth_open = Some(()),
            ']' if depth_open.is_some() => {
                depth_open = None;
                bracketed_term_count += 1;
            }
            _ => {}
        }
    }

    let mut latin = 0usize;
    let mut cyrillic = 0usize;
    let mut cjk = 0usize;
    for c in text.chars() {
        match script_of(c) {
            Some(ScriptLanguage::Latin) => latin += 1,
            Some(ScriptLanguage::Cyrillic) => cyrillic += 1,
            Some(ScriptLanguage::Cjk) => cjk += 1,
            _ => {}
        }
    }
    let language = if latin == 0 && cyrillic == 0 && cjk == 0 {
        ScriptLanguage::Unknown
    } else if latin >= cyrillic && latin >= cjk {
        ScriptLanguage::Latin
    } else if cyrillic >= cjk {
        ScriptLanguage::Cyrillic
    } else {
        ScriptLanguage::Cjk
    };

    let trimmed = text.trim();
    ResponseMeasurements {
        paragraph_count: paragraphs.len(),
        sentences,
        per_paragraph_sentence_counts,
        word_count,
        character_count,
        punctuation_count,
        bold_spans: extract_bold_spans(text),
        list_blocks: extract_list_items(text),
        keyword_counts,
        leading_text: take_chars(trimmed, 64),
        trailing_text: take_last_chars(trimmed, 64),
        language,
        numbered_list_item_count,
        quotation_count,
        bracketed_term_count,
        line_count: text.lines().count(),
        special_symbol_count,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sentence_types_follow_terminals() {
        let m = measure("Hello world! How are you? Fine.", &[]);
        let types: Vec<SentenceType> = m.sentences.iter().map(|s| s.sentence_type).collect();
        assert_eq!(
            types,
            vec![
                SentenceType::Exclamatory,
                SentenceType::Interrogative,
                SentenceType::Declarative,
            ]
        );
    }

    #[test]
    fn bold_span_extraction() {
        let m = measure("**Scope** is a key issue.", &[]);
        assert_eq!(m.bold_spans, vec!["Scope"]);
        assert_eq!(m.bold_word_count(), 1);

        assert_eq!(extract_bold_spans("a **b** c **d**"), vec!["b", "d"]);
        assert!(extract_bold_spans("a **b c").is_empty());
        assert_eq!(extract_bold_spans("**x** **x**"), vec!["x", "x"]);
    }

    #[test]
    fn empty_text_measures_to_zero() {
        let m = measure("", &[]);
        assert_eq!(m.paragraph_count, 0);
        assert_eq!(m.sentence_count(), 0);
        assert_eq!(m.character_count, 0);
        assert_eq!(m.word_count, 0);
        assert_eq!(m.punctuation_count, 0);
        assert_eq!(m.line_count, 0);
        assert!(m.leading_text.is_empty());
    }

    #[test]
    fn paragraphs_split_on_blank_lines_only() {
        assert_eq!(segment_paragraphs("A.\n\nB."), vec!["A.", "B."]);
        assert_eq!(segment_paragraphs("A.\nB."), vec!["A.\nB."]);
        assert_eq!(
            segment_paragraphs("one\n\ntwo\n   \nthree").len(),
            3
        );
    }

    #[test]
    fn unterminated_tail_is_typed_other() {
        let s = segment_sentences("One. Two!");
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].sentence_type, SentenceType::Declarative);
        assert_eq!(s[1].sentence_type, SentenceType::Exclamatory);

        let s = segment_sentences("Is it? Yes");
        assert_eq!(s.len(), 2);
        assert_eq!(s[1].sentence_type, SentenceType::Other);
        assert_eq!(s[1].terminal, None);
    }

    #[test]
    fn terminal_marks_count_as_punctuation() {
        let m = measure("First one. Second one! Third one? Fourth one.", &[]);
        assert_eq!(m.sentence_count(), 4);
        assert_eq!(m.punctuation_count, 4);
    }

    #[test]
    fn list_blocks_group_top_level_items() {
        let blocks = extract_list_items("- a\n- b\n- c");
        assert_eq!(blocks.len(), 1);
        assert_eq!(blocks[0].items, vec!["a", "b", "c"]);
        assert!(blocks[0].top_level);
        assert_eq!(blocks[0].marker, MarkerStyle::Dash);

        let blocks = extract_list_items("- a\n  - a1\n- b");
        assert_eq!(blocks.len(), 1);
        assert_eq!(blocks[0].items, vec!["a", "b"]);
    }

    #[test]
    fn inline_list_text_yields_no_blocks() {
        let blocks = extract_list_items("Issues: - Goals, - Func reqs, - Boundaries.");
        assert!(blocks.is_empty());
    }

    #[test]
    fn list_markers_do_not_terminate_sentences() {
        let s = segment_sentences("Plan:\n- first step\n- second step.");
        // Marker dots are skipped; the single period ends the one sentence.
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].sentence_type, SentenceType::Declarative);

        let s = segment_sentences("1. First point.\n2. Second point.");
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn bold_interior_terminals_do_not_split() {
        let s = segment_sentences("The label **v1.2** stays whole.");
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn asterisks_never_count_as_characters() {
        let plain = measure("abc.", &[]);
        let bold = measure("**abc**.", &[]);
        assert_eq!(plain.character_count, 4);
        assert_eq!(bold.character_count, 4);
        assert_eq!(bold.word_count, 1);
    }

    #[test]
    fn per_paragraph_counts_sum_to_total() {
        let m = measure("One. Two.\n\nThree? Four! Five.", &[]);
        assert_eq!(m.per_paragraph_sentence_counts, vec![2, 3]);
        assert_eq!(m.sentence_count(), 5);
    }

    #[test]
    fn keywords_are_counted_word_wise() {
        let kw = vec!["goals".to_string(), "func reqs".to_string()];
        let m = measure("Goals matter. Revisit goals and func reqs.", &kw);
        assert_eq!(m.keyword_counts["goals"], 2);
        assert_eq!(m.keyword_counts["func reqs"], 1);
        assert_eq!(m.keyword_total(), 3);
        assert_eq!(m.keyword_set(), vec!["func reqs", "goals"]);
    }

    #[test]
    fn language_detection_by_script() {
        assert_eq!(measure("plain text", &[]).language, ScriptLanguage::Latin);
        assert_eq!(measure("привет мир", &[]).language, ScriptLanguage::Cyrillic);
        assert_eq!(measure("你好世界", &[]).language, ScriptLanguage::Cjk);
        assert_eq!(measure("123 456", &[]).language, ScriptLanguage::Unknown);
    }

    #[test]
    fn auxiliary_counts() {
        let m = measure("See [one] and [two]. \"quoted\" text.\n1. step one\n2) step two", &[]);
        assert_eq!(m.bracketed_term_count, 2);
        assert_eq!(m.quotation_count, 1);
        assert_eq!(m.numbered_list_item_count, 2);
        assert_eq!(m.line_count, 3);
    }

    #[test]
    fn special_symbols_exclude_punctuation_and_markup() {
        let m = measure("a + b = c% *", &[]);
        // '+', '=', '%' are special; '*' is markup; letters are not.
        assert_eq!(m.special_symbol_count, 3);
    }
}
