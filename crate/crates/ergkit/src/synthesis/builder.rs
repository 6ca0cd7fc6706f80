//! Constructs witness responses for constraint sets: a canonical response
//! satisfying every constraint, or a mutant built to break exactly one
//! constraint while keeping the rest satisfied.
//!
//! The builder plans discrete structure first (paragraphs, sentences,
//! lists, bold spans, keywords), then pads the dynamic counts upward in a
//! fixed order — punctuation, then words, then characters — so each stage
//! never disturbs the ones before it. Every draft is re-measured with the
//! real analyzer and verified with the real predicates before it is
//! returned.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{measure, SentenceType};
use crate::banks::{ConditionKind, DimensionKind};
use crate::graph::{Check, EvaluatedConstraint, ParamValue};
use crate::numeric::Num;
use crate::verifier::{compile_constraint, numeric_dimension_value, VerifierPredicate};

use super::SynthesisError;

const FILLER_WORDS: [&str; 20] = [
    "the", "plan", "stays", "clear", "steady", "review", "keeps", "errors", "away", "notes",
    "guide", "small", "draft", "work", "moves", "ahead", "team", "aligns", "holds", "focus",
];

const BOLD_TOKENS: [&str; 26] = [
    "Core", "Edge", "Pivot", "Scope", "Anchor", "Basis", "Crest", "Delta", "Ember", "Flint",
    "Grove", "Helix", "Inlet", "Joule", "Karst", "Lumen", "Motif", "Nexus", "Orbit", "Prism",
    "Quill", "Ridge", "Sable", "Talon", "Umber", "Vault",
];

const ITEM_WORDS: [&str; 14] = [
    "goals", "scope", "budget", "drafts", "reviews", "metrics", "owners", "stages", "risks",
    "inputs", "outputs", "timing", "quality", "handoff",
];

/// Builds a response satisfying every constraint.
pub fn build_canonical_response(
    constraints: &[EvaluatedConstraint],
    keywords: &[String],
    seed: u64,
) -> Result<String, SynthesisError> {
    build_response(constraints, keywords, seed, None)
}

/// Builds a response that breaks exactly the constraint at `violate_index`
/// and satisfies all others.
pub fn build_violating_response(
    constraints: &[EvaluatedConstraint],
    keywords: &[String],
    seed: u64,
    violate_index: usize,
) -> Result<String, SynthesisError> {
    if violate_index >= constraints.len() {
        return Err(SynthesisError::Argument(format!(
            "violation index {violate_index} out of range for {} constraints",
            constraints.len()
        )));
    }
    build_response(constraints, keywords, seed, Some(violate_index))
}

#[derive(Debug, Clone)]
struct Leaf {
    constraint: usize,
    dimension: DimensionKind,
    condition: ConditionKind,
    params: Vec<ParamValue>,
}

fn collect_leaves(
    constraints: &[EvaluatedConstraint],
    violate: Option<usize>,
) -> Result<Vec<Leaf>, SynthesisError> {
    fn walk(
        check: &Check,
        constraint: usize,
        violated: bool,
        out: &mut Vec<Leaf>,
    ) -> Result<(), SynthesisError> {
        match check {
            Check::Leaf {
                dimension,
                condition,
                params,
            } => {
                out.push(Leaf {
                    constraint,
                    dimension: *dimension,
                    condition: *condition,
                    params: params.clone(),
                });
                Ok(())
            }
            Check::All(children) => children
                .iter()
                .try_for_each(|c| walk(c, constraint, violated, out)),
            Check::Any(children) => {
                if violated {
                    return Err(SynthesisError::Build(
                        "cannot target a disjunctive constraint for violation".into(),
                    ));
                }
                // Satisfying the first branch satisfies the disjunction.
                walk(&children[0], constraint, violated, out)
            }
        }
    }
    let mut leaves = Vec::new();
    for (i, ec) in constraints.iter().enumerate() {
        walk(&ec.combined_check(), i, violate == Some(i), &mut leaves)?;
    }
    Ok(leaves)
}

fn static_num(p: &ParamValue) -> Option<Num> {
    match p {
        ParamValue::Num(n) => Some(*n),
        _ => None,
    }
}

/// Whether a leaf holds for scalar value `v`; `None` when not statically
/// decidable (dimension-reference parameters, structural conditions).
fn leaf_static(leaf: &Leaf, v: i64) -> Option<bool> {
    use std::cmp::Ordering;
    let cmp = |p: &ParamValue| static_num(p).map(|n| n.cmp_i64(v));
    match leaf.condition {
        ConditionKind::NoMoreThan | ConditionKind::MaximumValue => {
            cmp(&leaf.params[0]).map(|o| o != Ordering::Less)
        }
        ConditionKind::NoLessThan | ConditionKind::MinimumValue => {
            cmp(&leaf.params[0]).map(|o| o != Ordering::Greater)
        }
        ConditionKind::Interval => match (cmp(&leaf.params[0]), cmp(&leaf.params[1])) {
            (Some(lo), Some(hi)) => Some(lo != Ordering::Greater && hi != Ordering::Less),
            _ => None,
        },
        ConditionKind::EqualTo => match &leaf.params[0] {
            ParamValue::Class(c) => Some(c.contains(v)),
            p => cmp(p).map(|o| o == Ordering::Equal),
        },
        ConditionKind::NotEqualTo => match &leaf.params[0] {
            ParamValue::Class(c) => Some(!c.contains(v)),
            p => cmp(p).map(|o| o != Ordering::Equal),
        },
        ConditionKind::PositiveIntegerMultipleOf => static_num(&leaf.params[0]).map(|base| {
            if base == Num::zero() {
                v == 0
            } else {
                match Num::from_int(v).checked_div(&base) {
                    Ok(q) => q.is_integer() && !q.is_negative() && q != Num::zero(),
                    Err(_) => false,
                }
            }
        }),
        _ => None,
    }
}

/// First candidate value acceptable to every leaf (canonical) or breaking
/// at least one violated-constraint leaf while keeping other constraints'
/// leaves true.
fn solve_value(
    leaves: &[&Leaf],
    candidates: impl Iterator<Item = i64>,
    violate: Option<usize>,
) -> Option<i64> {
    for v in candidates {
        let mut ok = true;
        let mut broke_target = false;
        for leaf in leaves {
            if let Some(holds) = leaf_static(leaf, v) {
                if violate == Some(leaf.constraint) {
                    if !holds {
                        broke_target = true;
                    }
                } else if !holds {
                    ok = false;
                    break;
                }
            }
        }
        if ok && (violate.is_none() || broke_target) {
            return Some(v);
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum ListOrder {
    Strict,
    Broken,
    Free,
}

#[derive(Debug, Clone)]
struct Plan {
    budgets: Vec<usize>,
    line_mode: bool,
    list: Option<(usize, ListOrder)>,
    numbered: Option<usize>,
    bold_count: usize,
    bold_duplicate: bool,
    keyword_counts: Vec<(String, usize)>,
    begin: Option<String>,
    end: Option<String>,
    brackets: usize,
    quotes: usize,
    specials: usize,
    required_types: Vec<SentenceType>,
}

fn required_type(name: &str) -> Option<SentenceType> {
    match name {
        "declarative" => Some(SentenceType::Declarative),
        "interrogative" => Some(SentenceType::Interrogative),
        "exclamatory" => Some(SentenceType::Exclamatory),
        "other" => Some(SentenceType::Other),
        _ => None,
    }
}

fn plan_features(
    leaves: &[Leaf],
    violate: Option<usize>,
    variant: u64,
) -> Result<Plan, SynthesisError> {
    let on = |d: DimensionKind| -> Vec<&Leaf> {
        leaves.iter().filter(|l| l.dimension == d).collect()
    };
    // The violation index, only when the violated constraint has a leaf on
    // this dimension.
    let viol = |d: DimensionKind| -> Option<usize> {
        violate.filter(|&vi| on(d).iter().any(|l| l.constraint == vi))
    };
    let fail = |what: &str| SynthesisError::Build(format!("no feasible value for {what}"));

    // Bold spans.
    let bold_leaves = on(DimensionKind::BoldWordCount);
    let unique_violated = viol(DimensionKind::BoldWordSet).is_some();
    let mut bold_count = if bold_leaves.is_empty() {
        0
    } else {
        solve_value(
            &bold_leaves,
            (1..=26).chain(std::iter::once(0)),
            viol(DimensionKind::BoldWordCount),
        )
        .ok_or_else(|| fail("bold word count"))? as usize
    };
    let bold_duplicate = if unique_violated {
        // Duplicating needs at least two spans that still satisfy any count
        // checks from other constraints (the violated one owns them here).
        if bold_count < 2 {
            bold_count = 2;
        }
        true
    } else {
        false
    };

    // Unordered list.
    let list_count_leaves = on(DimensionKind::UnorderedListItemCount);
    let item_leaves = on(DimensionKind::UnorderedListItems);
    let ascending = item_leaves
        .iter()
        .any(|l| l.condition == ConditionKind::StrictlyAscendingByLength);
    let ascending_violated = violate.is_some_and(|vi| {
        item_leaves
            .iter()
            .any(|l| l.constraint == vi && l.condition == ConditionKind::StrictlyAscendingByLength)
    });
    let count_violated = violate.is_some_and(|vi| {
        list_count_leaves.iter().any(|l| l.constraint == vi)
    }) && !ascending_violated;
    let list = if list_count_leaves.is_empty() && item_leaves.is_empty() {
        None
    } else {
        let floor = if ascending_violated { 2 } else { 1 };
        let candidates = (3.max(floor)..=14).chain(floor..3.max(floor));
        let count = solve_value(
            &list_count_leaves,
            candidates,
            count_violated.then(|| violate.expect("count_violated implies violate")),
        )
        .ok_or_else(|| fail("list item count"))? as usize;
        let order = if ascending_violated {
            ListOrder::Broken
        } else if ascending {
            ListOrder::Strict
        } else {
            ListOrder::Free
        };
        Some((count, order))
    };

    // Numbered list.
    let numbered_leaves = on(DimensionKind::NumberedListItemCount);
    let numbered = if numbered_leaves.is_empty() {
        None
    } else {
        Some(
            solve_value(
                &numbered_leaves,
                (2..=10).chain(1..2),
                viol(DimensionKind::NumberedListItemCount),
            )
            .ok_or_else(|| fail("numbered item count"))? as usize,
        )
    };

    // Keywords.
    let set_leaves = on(DimensionKind::KeywordSet);
    let count_leaves = on(DimensionKind::KeywordCount);
    let keyword_violated =
        viol(DimensionKind::KeywordSet).is_some() || viol(DimensionKind::KeywordCount).is_some();
    let mut terms: Vec<String> = Vec::new();
    for leaf in &set_leaves {
        if leaf.condition == ConditionKind::Required {
            if let Some(ParamValue::Text(t)) = leaf.params.first() {
                if !terms.contains(t) {
                    terms.push(t.clone());
                }
            }
        }
    }
    let keyword_counts: Vec<(String, usize)> = if terms.is_empty() && count_leaves.is_empty() {
        Vec::new()
    } else if keyword_violated {
        // Omitting the first required term (and its occurrences) breaks the
        // keyword constraint; nothing else reads keyword dimensions.
        terms.iter().skip(1).map(|t| (t.clone(), 1)).collect()
    } else {
        let floor = terms.len().max(1) as i64;
        let total = solve_value(&count_leaves, floor..=30, None)
            .ok_or_else(|| fail("keyword occurrence total"))? as usize;
        let mut counts: Vec<(String, usize)> =
            terms.iter().map(|t| (t.clone(), 1)).collect();
        if counts.is_empty() {
            return Err(SynthesisError::Build(
                "keyword totals need at least one tracked term".into(),
            ));
        }
        let assigned: usize = counts.iter().map(|(_, n)| n).sum();
        counts[0].1 += total.saturating_sub(assigned);
        counts
    };

    // Beginning / ending phrases.
    let phrase_of = |d: DimensionKind| -> Option<String> {
        if viol(d).is_some() {
            return None; // omitting the phrase is the violation
        }
        on(d).iter().find_map(|l| {
            if l.condition != ConditionKind::Required {
                return None;
            }
            match l.params.first() {
                Some(ParamValue::Text(t)) => Some(t.clone()),
                _ => None,
            }
        })
    };
    let begin = phrase_of(DimensionKind::BeginningOfReply);
    let end = phrase_of(DimensionKind::EndingOfReply);

    // Token-count features.
    let simple_count = |d: DimensionKind, label: &str| -> Result<usize, SynthesisError> {
        let leaves = on(d);
        if leaves.is_empty() {
            return Ok(0);
        }
        solve_value(&leaves, 0..=12, viol(d))
            .map(|v| v as usize)
            .ok_or_else(|| SynthesisError::Build(format!("no feasible value for {label}")))
    };
    let brackets = simple_count(DimensionKind::BracketedTermCount, "bracketed terms")?;
    let quotes = simple_count(DimensionKind::QuotationCount, "quoted passages")?;
    let specials = simple_count(DimensionKind::SpecialSymbolCount, "special symbols")?;

    // Sentence types.
    let type_leaves = on(DimensionKind::SentenceTypeMix);
    let types_violated = viol(DimensionKind::SentenceTypeMix).is_some();
    let mut required_types: Vec<SentenceType> = Vec::new();
    for leaf in &type_leaves {
        if leaf.condition == ConditionKind::Required {
            if let Some(ParamValue::Text(t)) = leaf.params.first() {
                if let Some(ty) = required_type(t) {
                    if !required_types.contains(&ty) {
                        required_types.push(ty);
                    }
                }
            }
        }
    }
    if types_violated {
        // Keeping every sentence declarative drops the other required
        // types from the mix without touching the sentence count.
        if !required_types
            .iter()
            .any(|t| *t != SentenceType::Declarative)
        {
            return Err(SynthesisError::Build(
                "cannot violate a declarative-only type mix".into(),
            ));
        }
        required_types.retain(|t| *t == SentenceType::Declarative);
    }

    // Structure: paragraph sentence budgets.
    let items_sentences = usize::from(list.is_some()) + usize::from(numbered.is_some());
    let min_nonitem = (1 + usize::from(end.is_some())).max(required_types.len());
    let min_total = (items_sentences + min_nonitem) as i64;

    let sentence_leaves = on(DimensionKind::SentenceCount);
    let paragraph_leaves = on(DimensionKind::ParagraphCount);
    let fib_leaves = on(DimensionKind::PerParagraphSentenceCounts);
    let line_leaves = on(DimensionKind::LineCount);

    let mut line_mode = false;
    let budgets: Vec<usize> = if !fib_leaves.is_empty() {
        let fib_violated = viol(DimensionKind::PerParagraphSentenceCounts).is_some()
            && fib_leaves.iter().any(|l| {
                l.condition == ConditionKind::ConsecutiveFibonacciTerms
                    && violate == Some(l.constraint)
            });
        let runs: &[&[usize]] = if fib_violated {
            &[&[1, 2, 2], &[2, 2, 3]]
        } else {
            &[&[1, 1, 2], &[1, 2, 3], &[2, 3, 5]]
        };
        let bound_leaves: Vec<&Leaf> = fib_leaves
            .iter()
            .filter(|l| {
                matches!(
                    l.condition,
                    ConditionKind::MaximumValue | ConditionKind::MinimumValue
                )
            })
            .copied()
            .collect();
        let run = runs
            .iter()
            .find(|run| {
                run.iter().all(|&v| {
                    bound_leaves
                        .iter()
                        .all(|l| leaf_static(l, v as i64).unwrap_or(true))
                }) && run.iter().sum::<usize>() as i64 >= min_total
            })
            .ok_or_else(|| fail("paragraph sentence run"))?;
        run.to_vec()
    } else if !sentence_leaves.is_empty() {
        let s = solve_value(
            &sentence_leaves,
            (min_total.max(2)..=14).chain(1..min_total.max(2)),
            viol(DimensionKind::SentenceCount),
        )
        .ok_or_else(|| fail("sentence count"))?;
        vec![s as usize]
    } else if !line_leaves.is_empty() {
        // Single paragraph, one sentence per line: lines equal sentences.
        line_mode = true;
        let s = solve_value(
            &line_leaves,
            (min_total.max(2)..=14).chain(1..min_total.max(2)),
            viol(DimensionKind::LineCount),
        )
        .ok_or_else(|| fail("line count"))?;
        vec![s as usize]
    } else if !paragraph_leaves.is_empty() {
        let p = solve_value(&paragraph_leaves, 1..=12, viol(DimensionKind::ParagraphCount))
            .ok_or_else(|| fail("paragraph count"))?;
        let mut budgets = vec![1usize; p as usize];
        // Sentence counts are unconstrained here; widen the last paragraph
        // to host the reserved item/growth/ending slots.
        let total: usize = budgets.iter().sum();
        if total < min_total as usize {
            let deficit = min_total as usize - total;
            *budgets.last_mut().expect("at least one paragraph") += deficit;
        }
        budgets
    } else {
        vec![(2 + (variant % 2) as usize).max(min_total as usize)]
    };

    if line_mode && (list.is_some() || numbered.is_some()) {
        return Err(SynthesisError::Build(
            "line-count layout does not mix with list blocks".into(),
        ));
    }
    if budgets.iter().sum::<usize>() < min_total as usize {
        return Err(SynthesisError::Build(format!(
            "structure of {} sentences cannot host {min_total} reserved slots",
            budgets.iter().sum::<usize>(),
        )));
    }

    Ok(Plan {
        budgets,
        line_mode,
        list,
        numbered,
        bold_count,
        bold_duplicate,
        keyword_counts,
        begin,
        end,
        brackets,
        quotes,
        specials,
        required_types,
    })
}

// A sentence under construction: word tokens plus a terminal.
#[derive(Debug, Clone)]
struct DraftSentence {
    words: Vec<String>,
    terminal: Option<char>,
    grow_here: bool,
}

#[derive(Debug, Clone)]
enum DraftPara {
    Text {
        sentences: Vec<DraftSentence>,
    },
    Items {
        pre: Vec<DraftSentence>,
        items: Vec<String>,
        numbered: bool,
        post: Vec<DraftSentence>,
    },
}

struct Draft {
    paragraphs: Vec<DraftPara>,
    line_mode: bool,
}

impl Draft {
    /// Non-item sentences in document order.
    fn sentences_mut(&mut self) -> Vec<&mut DraftSentence> {
        let mut out = Vec::new();
        for para in &mut self.paragraphs {
            match para {
                DraftPara::Text { sentences } => out.extend(sentences.iter_mut()),
                DraftPara::Items { pre, post, .. } => {
                    out.extend(pre.iter_mut());
                    out.extend(post.iter_mut());
                }
            }
        }
        out
    }

    fn render(&self) -> String {
        let render_sentence = |s: &DraftSentence| -> String {
            let mut text = s.words.join(" ");
            if let Some(t) = s.terminal {
                text.push(t);
            }
            text
        };
        let blocks: Vec<String> = self
            .paragraphs
            .iter()
            .map(|para| match para {
                DraftPara::Text { sentences } => {
                    let rendered: Vec<String> = sentences.iter().map(render_sentence).collect();
                    if self.line_mode {
                        rendered.join("\n")
                    } else {
                        rendered.join(" ")
                    }
                }
                DraftPara::Items {
                    pre,
                    items,
                    numbered,
                    post,
                } => {
                    let mut lines: Vec<String> = pre.iter().map(render_sentence).collect();
                    let last = items.len().saturating_sub(1);
                    for (i, item) in items.iter().enumerate() {
                        let marker = if *numbered {
                            format!("{}. ", i + 1)
                        } else {
                            "- ".to_string()
                        };
                        if i == last {
                            lines.push(format!("{marker}{item}."));
                        } else {
                            lines.push(format!("{marker}{item}"));
                        }
                    }
                    lines.extend(post.iter().map(render_sentence));
                    lines.join("\n")
                }
            })
            .collect();
        blocks.join("\n\n")
    }
}

fn terminal_for(t: SentenceType) -> Option<char> {
    match t {
        SentenceType::Declarative => Some('.'),
        SentenceType::Interrogative => Some('?'),
        SentenceType::Exclamatory => Some('!'),
        SentenceType::Other => None,
    }
}

fn filler_sentence(rng: &mut ChaCha8Rng, words: usize) -> Vec<String> {
    (0..words)
        .map(|_| FILLER_WORDS[rng.gen_range(0..FILLER_WORDS.len())].to_string())
        .collect()
}

/// Item texts whose rendered lengths (the final item gains a period) are
/// strictly ascending, or deliberately not for `Broken`.
fn make_items(count: usize, order: ListOrder, rng: &mut ChaCha8Rng) -> Vec<String> {
    let mut bases: Vec<&str> = ITEM_WORDS.to_vec();
    bases.shuffle(rng);
    let mut items: Vec<String> = (0..count)
        .map(|i| bases[i % bases.len()].to_string())
        .collect();
    let mut previous = 0usize;
    for (i, item) in items.iter_mut().enumerate() {
        let trailing = usize::from(i + 1 == count); // the final period
        while item.chars().count() + trailing <= previous {
            item.push((b'a' + (i as u8 * 7 + item.len() as u8) % 26) as char);
        }
        previous = item.chars().count() + trailing;
    }
    if order == ListOrder::Broken && items.len() >= 2 {
        // Shrink the second item below the first so lengths stop ascending.
        items[1] = items[1].chars().take(1).collect();
        let second_rendered = items[1].chars().count() + usize::from(items.len() == 2);
        while items[0].chars().count() < second_rendered {
            items[0].push('x');
        }
    }
    items
}

fn assemble(plan: &Plan, rng: &mut ChaCha8Rng) -> Draft {
    let base_words = 2 + rng.gen_range(0..2) as usize;
    let mut type_queue: Vec<SentenceType> = plan.required_types.clone();
    // Item runs end in a period, covering one required declarative.
    if plan.list.is_some() || plan.numbered.is_some() {
        if let Some(pos) = type_queue
            .iter()
            .position(|t| *t == SentenceType::Declarative)
        {
            type_queue.remove(pos);
        }
    }

    let list_slot = plan.list.map(|_| plan.budgets.len() - 1);
    let mut paragraphs: Vec<DraftPara> = Vec::new();
    let mut first_sentence_placed = false;
    for (slot, &budget) in plan.budgets.iter().enumerate() {
        let is_list = list_slot == Some(slot);
        let assignable = if is_list { budget - 1 } else { budget };
        let mut sentences = Vec::new();
        for _ in 0..assignable {
            let ty = if type_queue.is_empty() {
                SentenceType::Declarative
            } else {
                type_queue.remove(0)
            };
            let mut words = filler_sentence(rng, base_words);
            let grow_here = !first_sentence_placed;
            if grow_here {
                if let Some(begin) = &plan.begin {
                    let mut lead: Vec<String> =
                        begin.split_whitespace().map(str::to_string).collect();
                    lead.extend(words);
                    words = lead;
                }
                first_sentence_placed = true;
            }
            sentences.push(DraftSentence {
                words,
                terminal: terminal_for(ty),
                grow_here,
            });
        }
        if is_list {
            let (count, order) = plan.list.expect("list slot implies a list plan");
            let mut pre = Vec::new();
            let mut post = sentences;
            // An opening phrase must stay at the very start of the text.
            if plan.begin.is_some() && slot == 0 && !post.is_empty() {
                pre.push(post.remove(0));
            }
            paragraphs.push(DraftPara::Items {
                pre,
                items: make_items(count, order, rng),
                numbered: false,
                post,
            });
        } else {
            paragraphs.push(DraftPara::Text { sentences });
        }
    }

    if let Some(count) = plan.numbered {
        let mut post = Vec::new();
        // An ending phrase must stay last in document order.
        if plan.end.is_some() {
            post.push(DraftSentence {
                words: filler_sentence(rng, base_words),
                terminal: Some('.'),
                grow_here: false,
            });
        }
        paragraphs.push(DraftPara::Items {
            pre: Vec::new(),
            items: make_items(count, ListOrder::Free, rng),
            numbered: true,
            post,
        });
    }

    let mut draft = Draft {
        paragraphs,
        line_mode: plan.line_mode,
    };

    // Feature tokens ride on the growth sentence; the ending phrase rides
    // on the document's final sentence.
    {
        let mut sentences = draft.sentences_mut();
        if let Some(grow) = sentences.iter_mut().find(|s| s.grow_here) {
            let mut bold: Vec<String> = (0..plan.bold_count)
                .map(|i| format!("**{}**", BOLD_TOKENS[i % BOLD_TOKENS.len()]))
                .collect();
            if plan.bold_duplicate && plan.bold_count >= 2 {
                bold[1] = bold[0].clone();
            }
            grow.words.extend(bold);
            for i in 0..plan.brackets {
                grow.words
                    .push(format!("[{}]", ITEM_WORDS[i % ITEM_WORDS.len()]));
            }
            for i in 0..plan.quotes {
                grow.words
                    .push(format!("\"{}\"", FILLER_WORDS[i % FILLER_WORDS.len()]));
            }
            for _ in 0..plan.specials {
                grow.words.push("&".to_string());
            }
            for (term, count) in &plan.keyword_counts {
                for _ in 0..*count {
                    grow.words.push(term.clone());
                }
            }
        }
        if let Some(end) = &plan.end {
            if let Some(last) = sentences.last_mut() {
                last.words
                    .extend(end.split_whitespace().map(str::to_string));
            }
        }
    }
    draft
}

/// Smallest value `v >= current` acceptable to the configured leaves
/// (canonical) or breaking the violated constraint's leaves (mutant).
/// Dimension-reference parameters resolve against the current
/// measurements.
fn dynamic_target(
    leaves: &[&Leaf],
    current: i64,
    m: &crate::analysis::ResponseMeasurements,
    violate: Option<usize>,
) -> Option<i64> {
    let holds = |leaf: &Leaf, v: i64| -> bool {
        let params: Vec<ParamValue> = leaf
            .params
            .iter()
            .map(|p| match p {
                ParamValue::Dim(d) => ParamValue::Num(Num::from_int(
                    numeric_dimension_value(*d, m).unwrap_or(0),
                )),
                other => other.clone(),
            })
            .collect();
        let resolved = Leaf {
            constraint: leaf.constraint,
            dimension: leaf.dimension,
            condition: leaf.condition,
            params,
        };
        leaf_static(&resolved, v).unwrap_or(true)
    };
    (current..current + 600).find(|&v| {
        let others_ok = leaves
            .iter()
            .filter(|l| violate != Some(l.constraint))
            .all(|l| holds(l, v));
        let target_broken = violate.is_none()
            || leaves
                .iter()
                .filter(|l| violate == Some(l.constraint))
                .any(|l| !holds(l, v));
        others_ok && target_broken
    })
}

fn attempt(
    predicates: &[VerifierPredicate],
    keywords: &[String],
    leaves: &[Leaf],
    violate: Option<usize>,
    seed: u64,
    variant: u64,
) -> Result<String, SynthesisError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ variant.wrapping_mul(0x9e3779b97f4a7c15));
    let plan = plan_features(leaves, violate, variant)?;
    let mut draft = assemble(&plan, &mut rng);

    let on = |d: DimensionKind| -> Vec<&Leaf> {
        leaves.iter().filter(|l| l.dimension == d).collect()
    };
    let viol = |d: DimensionKind| -> Option<usize> {
        violate.filter(|&vi| on(d).iter().any(|l| l.constraint == vi))
    };

    // Punctuation padding: attach commas to growth-sentence words, after
    // any opening phrase.
    let punct_leaves = on(DimensionKind::PunctuationCount);
    if !punct_leaves.is_empty() {
        let m = measure(&draft.render(), keywords);
        let target = dynamic_target(
            &punct_leaves,
            m.punctuation_count as i64,
            &m,
            viol(DimensionKind::PunctuationCount),
        )
        .ok_or_else(|| SynthesisError::Build("no reachable punctuation target".into()))?;
        let mut needed = (target - m.punctuation_count as i64).max(0) as usize;
        let skip = plan
            .begin
            .as_deref()
            .map(|b| b.split_whitespace().count())
            .unwrap_or(0);
        let mut sentences = draft.sentences_mut();
        if let Some(grow) = sentences.iter_mut().find(|s| s.grow_here) {
            let len = grow.words.len();
            let mut cursor = skip.min(len - 1);
            while needed > 0 {
                grow.words[cursor].push(',');
                needed -= 1;
                cursor = if cursor + 1 < len { cursor + 1 } else { skip.min(len - 1) };
            }
        }
    }

    // Word padding: append filler words to the growth sentence.
    let word_leaves = on(DimensionKind::WordCount);
    if !word_leaves.is_empty() {
        let m = measure(&draft.render(), keywords);
        let target = dynamic_target(
            &word_leaves,
            m.word_count as i64,
            &m,
            viol(DimensionKind::WordCount),
        )
        .ok_or_else(|| SynthesisError::Build("no reachable word target".into()))?;
        let needed = (target - m.word_count as i64).max(0) as usize;
        let extra = filler_sentence(&mut rng, needed);
        let mut sentences = draft.sentences_mut();
        if let Some(grow) = sentences.iter_mut().find(|s| s.grow_here) {
            grow.words.extend(extra);
        }
    }

    // Character padding: extend the growth sentence's last word core.
    let char_leaves = on(DimensionKind::CharacterCount);
    if !char_leaves.is_empty() {
        let m = measure(&draft.render(), keywords);
        let target = dynamic_target(
            &char_leaves,
            m.character_count as i64,
            &m,
            viol(DimensionKind::CharacterCount),
        )
        .ok_or_else(|| SynthesisError::Build("no reachable character target".into()))?;
        let needed = (target - m.character_count as i64).max(0) as usize;
        if needed > 0 {
            let mut sentences = draft.sentences_mut();
            if let Some(grow) = sentences.iter_mut().find(|s| s.grow_here) {
                let word = grow.words.last_mut().expect("growth sentence has words");
                let trailing: String = word
                    .chars()
                    .rev()
                    .take_while(|c| !c.is_alphanumeric())
                    .collect::<Vec<_>>()
                    .iter()
                    .rev()
                    .collect();
                let core_len = word.chars().count() - trailing.chars().count();
                let core: String = word.chars().take(core_len).collect();
                let pad: String = (0..needed)
                    .map(|i| (b'a' + ((i as u8).wrapping_mul(11)) % 26) as char)
                    .collect();
                *word = format!("{core}{pad}{trailing}");
            }
        }
    }

    let text = draft.render();
    let m = measure(&text, keywords);
    for (i, predicate) in predicates.iter().enumerate() {
        let verdict = crate::verifier::verify(predicate, &m);
        let expected = violate != Some(i);
        if verdict != expected {
            return Err(SynthesisError::Build(format!(
                "constraint {i} verified {verdict}, expected {expected} (variant {variant})"
            )));
        }
    }
    Ok(text)
}

fn build_response(
    constraints: &[EvaluatedConstraint],
    keywords: &[String],
    seed: u64,
    violate: Option<usize>,
) -> Result<String, SynthesisError> {
    if constraints.is_empty() {
        return Err(SynthesisError::Argument(
            "cannot build a response for zero constraints".into(),
        ));
    }
    let predicates: Vec<VerifierPredicate> = constraints
        .iter()
        .map(compile_constraint)
        .collect::<Result<_, _>>()?;
    // Track the same keyword terms the verifier will track.
    let mut tracked: Vec<String> = keywords.to_vec();
    for predicate in &predicates {
        for term in predicate.keyword_terms() {
            if !tracked.contains(&term) {
                tracked.push(term);
            }
        }
    }
    let keywords = tracked.as_slice();
    let leaves = collect_leaves(constraints, violate)?;
    let mut last_error = None;
    for variant in 0..8 {
        match attempt(&predicates, keywords, &leaves, violate, seed, variant) {
            Ok(text) => return Ok(text),
            Err(e) => last_error = Some(e),
        }
    }
    Err(last_error.unwrap_or_else(|| SynthesisError::Build("no variant succeeded".into())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::banks::default_banks;
    use crate::graph::{evaluate_graph, Erg, ErgNode, IntClass};

    fn constraint(nodes: Vec<ErgNode>, edges: Vec<(&str, &str)>) -> EvaluatedConstraint {
        let banks = default_banks().unwrap();
        let erg = Erg::new(
            nodes,
            edges
                .into_iter()
                .map(|(a, b)| (a.into(), b.into()))
                .collect(),
        );
        evaluate_graph(&erg, &banks).unwrap()
    }

    fn check_canonical_and_mutants(constraints: &[EvaluatedConstraint], seed: u64) {
        let canonical = build_canonical_response(constraints, &[], seed).unwrap();
        let report = crate::verifier::verify_constraints(constraints, &[], &canonical).unwrap();
        assert!(
            report.constraint_verdicts.iter().all(|&v| v),
            "canonical failed: {report:?}\n{canonical}"
        );
        for i in 0..constraints.len() {
            let mutant = build_violating_response(constraints, &[], seed, i).unwrap();
            let report = crate::verifier::verify_constraints(constraints, &[], &mutant).unwrap();
            for (j, &verdict) in report.constraint_verdicts.iter().enumerate() {
                assert_eq!(
                    verdict,
                    j != i,
                    "mutant {i} gave verdicts {:?}\n{mutant}",
                    report.constraint_verdicts
                );
            }
        }
    }

    #[test]
    fn character_interval_witnesses() {
        let ec = constraint(
            vec![ErgNode::conditional(
                "S",
                ConditionKind::Interval,
                DimensionKind::CharacterCount,
                vec![ParamValue::int(64), ParamValue::int(103)],
                "character window",
            )],
            vec![],
        );
        check_canonical_and_mutants(&[ec], 11);
    }

    #[test]
    fn case_style_bold_and_list_and_chars() {
        let bold = constraint(
            vec![
                ErgNode::conditional(
                    "A",
                    ConditionKind::NoLessThan,
                    DimensionKind::BoldWordCount,
                    vec![ParamValue::int(1)],
                    "positive bold count",
                ),
                ErgNode::conditional(
                    "B",
                    ConditionKind::NotEqualTo,
                    DimensionKind::BoldWordCount,
                    vec![ParamValue::Class(IntClass::Prime)],
                    "bold count not prime",
                ),
                ErgNode::conditional(
                    "C",
                    ConditionKind::NotEqualTo,
                    DimensionKind::BoldWordCount,
                    vec![ParamValue::Class(IntClass::Even)],
                    "bold count not even",
                ),
                ErgNode::conditional(
                    "D",
                    ConditionKind::EqualTo,
                    DimensionKind::BoldWordSet,
                    vec![ParamValue::Dim(DimensionKind::BoldWordCount)],
                    "bold words unique",
                ),
            ],
            vec![],
        );
        let list = constraint(
            vec![
                ErgNode::knowledge("K", "octopus_brains", "octopus brain count"),
                ErgNode::conditional(
                    "S",
                    ConditionKind::NotEqualTo,
                    DimensionKind::UnorderedListItemCount,
                    vec![],
                    "item count differs from it",
                ),
                ErgNode::conditional(
                    "T",
                    ConditionKind::StrictlyAscendingByLength,
                    DimensionKind::UnorderedListItems,
                    vec![],
                    "items ascend by length",
                ),
            ],
            vec![("K", "S")],
        );
        let chars = constraint(
            vec![ErgNode::conditional(
                "S",
                ConditionKind::Interval,
                DimensionKind::CharacterCount,
                vec![ParamValue::int(64), ParamValue::int(103)],
                "character window",
            )],
            vec![],
        );
        check_canonical_and_mutants(&[bold, list, chars], 7);
    }

    #[test]
    fn structural_mix_with_punctuation_multiple() {
        let types = constraint(
            vec![
                ErgNode::conditional(
                    "A",
                    ConditionKind::Interval,
                    DimensionKind::SentenceCount,
                    vec![ParamValue::int(3), ParamValue::int(5)],
                    "sentence window",
                ),
                ErgNode::conditional(
                    "B",
                    ConditionKind::Required,
                    DimensionKind::SentenceTypeMix,
                    vec![ParamValue::Text("declarative".into())],
                    "declarative present",
                ),
                ErgNode::conditional(
                    "C",
                    ConditionKind::Required,
                    DimensionKind::SentenceTypeMix,
                    vec![ParamValue::Text("interrogative".into())],
                    "interrogative present",
                ),
                ErgNode::conditional(
                    "D",
                    ConditionKind::Required,
                    DimensionKind::SentenceTypeMix,
                    vec![ParamValue::Text("exclamatory".into())],
                    "exclamatory present",
                ),
            ],
            vec![],
        );
        let punct = constraint(
            vec![ErgNode::conditional(
                "S",
                ConditionKind::PositiveIntegerMultipleOf,
                DimensionKind::PunctuationCount,
                vec![ParamValue::Dim(DimensionKind::SentenceCount)],
                "punctuation is a positive multiple of sentences",
            )],
            vec![],
        );
        check_canonical_and_mutants(&[types, punct], 3);
    }

    #[test]
    fn fibonacci_paragraphs_with_keywords() {
        let fib = constraint(
            vec![ErgNode::conditional(
                "S",
                ConditionKind::ConsecutiveFibonacciTerms,
                DimensionKind::PerParagraphSentenceCounts,
                vec![],
                "paragraph sentence counts form a Fibonacci run",
            )],
            vec![],
        );
        let kw = constraint(
            vec![ErgNode::conditional(
                "S",
                ConditionKind::Required,
                DimensionKind::KeywordSet,
                vec![ParamValue::Text("quartz".into())],
                "mention quartz",
            )],
            vec![],
        );
        check_canonical_and_mutants(&[fib, kw], 5);
    }

    #[test]
    fn begin_end_and_word_floor() {
        let begin = constraint(
            vec![ErgNode::conditional(
                "S",
                ConditionKind::Required,
                DimensionKind::BeginningOfReply,
                vec![ParamValue::Text("To begin with".into())],
                "open with the set phrase",
            )],
            vec![],
        );
        let end = constraint(
            vec![ErgNode::conditional(
                "S",
                ConditionKind::Required,
                DimensionKind::EndingOfReply,
                vec![ParamValue::Text("as agreed".into())],
                "close with the set phrase",
            )],
            vec![],
        );
        let words = constraint(
            vec![ErgNode::conditional(
                "S",
                ConditionKind::NoLessThan,
                DimensionKind::WordCount,
                vec![ParamValue::int(45)],
                "word floor",
            )],
            vec![],
        );
        check_canonical_and_mutants(&[begin, end, words], 13);
    }
}
