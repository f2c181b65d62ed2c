//! Text primitives shared by validation and the writing phase: a quote-aware
//! sentence splitter, word counting, clause-bounded n-gram indexing and
//! standalone-word matching.

use std::collections::HashSet;

/// Lowercased words (without the trailing period) that never end a sentence.
const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "vs", "e.g", "i.e",
];

const TERMINATORS: [char; 3] = ['.', '!', '?'];

/// Characters allowed to trail a terminator and still belong to its sentence.
const CLOSERS: &[char] = &[')', ']', '\'', '’'];

/// Characters that end a clause for n-gram purposes.
const CLAUSE_BREAKS: &[char] = &[
    ',', ';', ':', '.', '!', '?', '…', '—', '–', '(', ')', '[', ']', '{', '}', '"', '“', '”',
];

/// Splits `text` into sentences.
///
/// A sentence ends at `.`, `!` or `?` (plus any trailing closing brackets or
/// single quotes) followed by whitespace or the end of the text. Terminators
/// inside double quotes never split, except that a quotation closing right
/// after a terminator ends the sentence when the next word starts with an
/// uppercase letter or another quotation. Ellipses and a small fixed list of
/// abbreviations never split. Returned sentences are trimmed.
pub fn split_sentences(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut sentences = Vec::new();
    let mut start = 0;
    let mut curly_depth = 0usize;
    let mut straight_open = false;
    let mut i = 0;

    let push = |from: usize, to: usize, out: &mut Vec<String>| {
        let s: String = chars[from..to].iter().collect();
        let s = s.trim();
        if !s.is_empty() {
            out.push(s.to_string());
        }
    };

    while i < chars.len() {
        let c = chars[i];
        let in_quote = curly_depth > 0 || straight_open;
        match c {
            '“' => curly_depth += 1,
            '”' | '"' => {
                let closes = if c == '”' {
                    curly_depth > 0
                } else {
                    straight_open
                };
                if c == '”' {
                    curly_depth = curly_depth.saturating_sub(1);
                } else {
                    straight_open = !straight_open;
                }
                if closes
                    && curly_depth == 0
                    && !straight_open
                    && i > 0
                    && is_hard_terminator(&chars, i - 1)
                {
                    let end = skip_closers(&chars, i + 1);
                    if quote_close_ends_sentence(&chars, end) {
                        push(start, end, &mut sentences);
                        start = end;
                        i = end;
                        continue;
                    }
                }
            }
            '.' | '!' | '?' if !in_quote => {
                if c == '.' && (is_ellipsis_dot(&chars, i) || is_abbreviation(&chars, i)) {
                    i += 1;
                    continue;
                }
                let mut end = i + 1;
                while end < chars.len() && (chars[end] == '!' || chars[end] == '?') {
                    end += 1;
                }
                let end = skip_closers(&chars, end);
                if end == chars.len() || chars[end].is_whitespace() {
                    push(start, end, &mut sentences);
                    start = end;
                    i = end;
                    continue;
                }
            }
            _ => {}
        }
        i += 1;
    }
    push(start, chars.len(), &mut sentences);
    sentences
}

fn skip_closers(chars: &[char], mut at: usize) -> usize {
    while at < chars.len() && CLOSERS.contains(&chars[at]) {
        at += 1;
    }
    at
}

fn is_ellipsis_dot(chars: &[char], i: usize) -> bool {
    (i > 0 && chars[i - 1] == '.') || chars.get(i + 1) == Some(&'.')
}

/// True when `chars[i]` is a terminator that is not part of an ellipsis.
fn is_hard_terminator(chars: &[char], i: usize) -> bool {
    TERMINATORS.contains(&chars[i]) && !(chars[i] == '.' && is_ellipsis_dot(chars, i))
}

fn is_abbreviation(chars: &[char], dot: usize) -> bool {
    let mut from = dot;
    while from > 0
        && !chars[from - 1].is_whitespace()
        && !matches!(chars[from - 1], '“' | '"' | '(')
    {
        from -= 1;
    }
    let word: String = chars[from..dot].iter().collect::<String>().to_lowercase();
    ABBREVIATIONS.contains(&word.as_str())
}

fn quote_close_ends_sentence(chars: &[char], after: usize) -> bool {
    if after == chars.len() {
        return true;
    }
    if !chars[after].is_whitespace() {
        return false;
    }
    match chars[after..].iter().find(|c| !c.is_whitespace()) {
        None => true,
        Some(c) => c.is_uppercase() || matches!(c, '“' | '"'),
    }
}

/// Counts words as maximal alphanumeric runs, keeping internal apostrophes
/// ("don't" is one word) and splitting hyphenated compounds.
pub fn word_count(text: &str) -> usize {
    let mut count = 0;
    let mut in_word = false;
    let chars: Vec<char> = text.chars().collect();
    for (i, &c) in chars.iter().enumerate() {
        let joins = (c == '\'' || c == '’')
            && in_word
            && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric());
        if c.is_alphanumeric() || joins {
            if !in_word {
                count += 1;
                in_word = true;
            }
        } else {
            in_word = false;
        }
    }
    count
}

/// Case-folded, punctuation-stripped words grouped by clause.
///
/// Clause boundaries are the characters in [`CLAUSE_BREAKS`] and the ASCII
/// double hyphen. Within a word, every non-alphanumeric character is dropped.
pub fn clauses(text: &str) -> Vec<Vec<String>> {
    text.replace("--", "—")
        .split(|c: char| CLAUSE_BREAKS.contains(&c))
        .map(|clause| {
            clause
                .split_whitespace()
                .map(|w| {
                    w.chars()
                        .filter(|c| c.is_alphanumeric())
                        .flat_map(char::to_lowercase)
                        .collect::<String>()
                })
                .filter(|w| !w.is_empty())
                .collect::<Vec<_>>()
        })
        .filter(|words| !words.is_empty())
        .collect()
}

/// Set of word n-grams that never cross a clause boundary.
#[derive(Debug, Clone)]
pub struct NgramIndex {
    n: usize,
    grams: HashSet<Vec<String>>,
}

impl NgramIndex {
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "n-gram length must be positive");
        Self {
            n,
            grams: HashSet::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn insert_text(&mut self, text: &str) {
        for clause in clauses(text) {
            for gram in clause.windows(self.n) {
                self.grams.insert(gram.to_vec());
            }
        }
    }

    /// First n-gram of `text` already present in the index.
    pub fn first_overlap(&self, text: &str) -> Option<Vec<String>> {
        clauses(text).into_iter().find_map(|clause| {
            clause
                .windows(self.n)
                .find(|gram| self.grams.contains(*gram))
                .map(<[String]>::to_vec)
        })
    }

    pub fn is_empty(&self) -> bool {
        self.grams.is_empty()
    }
}

/// Every n-gram that occurs at least twice across `sentences`, each sentence
/// indexed after the ones before it.
pub fn repeated_ngrams<S: AsRef<str>>(sentences: &[S], n: usize) -> Vec<Vec<String>> {
    let mut index = NgramIndex::new(n);
    let mut repeats = Vec::new();
    for sentence in sentences {
        let sentence = sentence.as_ref();
        for clause in clauses(sentence) {
            for gram in clause.windows(n) {
                if index.grams.contains(gram) {
                    repeats.push(gram.to_vec());
                }
            }
        }
        index.insert_text(sentence);
    }
    repeats
}

/// True when `word` occurs in `text` delimited by non-alphanumeric
/// characters on both sides. Case-sensitive.
pub fn contains_word(text: &str, word: &str) -> bool {
    if word.is_empty() {
        return false;
    }
    text.match_indices(word).any(|(at, _)| {
        let before = text[..at].chars().next_back();
        let after = text[at + word.len()..].chars().next();
        !before.is_some_and(char::is_alphanumeric) && !after.is_some_and(char::is_alphanumeric)
    })
}

/// True when the text holds at least one double-quoted span.
pub fn has_quoted_span(text: &str) -> bool {
    let curly = text
        .find('“')
        .is_some_and(|open| text[open..].contains('”'));
    curly || text.matches('"').count() >= 2
}

/// Collapses every whitespace run to a single space and trims the ends.
pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn ends_with_terminator(sentence: &str) -> bool {
    let trimmed = sentence.trim_end_matches(|c: char| {
        c.is_whitespace() || CLOSERS.contains(&c) || c == '”' || c == '"'
    });
    trimmed.ends_with(TERMINATORS) || trimmed.ends_with('…')
}
