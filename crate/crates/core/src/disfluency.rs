//! Incremental disfluency tagging.
//!
//! Every word receives one of three tags: fluent, edit term (filled pauses and
//! phrasal fillers) or repair onset (first word of a self-repair). Tags are
//! assigned strictly left to right: the tag of word `i` depends only on words
//! `0..=i`, so tagging a prefix yields a prefix of the full tagging.
//!
//! The tagger is rule based. Reparandum words are not marked; they stay
//! fluent. A word starts a repair when it
//!
//! * repeats the previous non-edit word (`the the`, `the uh the`),
//! * restarts a phrase of two or three words after an edit term
//!   (`the boy uh the girl`), or
//! * substitutes a similar word after an edit term (`likes uh loves`).

use std::fmt;
use std::io::{BufRead, Write};
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::Matrix;

/// Single-word edit terms.
pub const EDIT_WORDS: [&str; 5] = ["uh", "um", "er", "eh", "mm"];
/// Two-word edit terms; the second word is tagged once the phrase completes.
pub const EDIT_PHRASES: [(&str, &str); 2] = [("i", "mean"), ("you", "know")];
/// How many preceding words a repair may restate.
pub const REPAIR_WINDOW: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DisfluencyTag {
    #[serde(rename = "F")]
    Fluent,
    #[serde(rename = "E")]
    Edit,
    #[serde(rename = "RPS")]
    RepairOnset,
}

impl DisfluencyTag {
    /// One-hot column order.
    pub const ORDER: [DisfluencyTag; 3] = [
        DisfluencyTag::Fluent,
        DisfluencyTag::Edit,
        DisfluencyTag::RepairOnset,
    ];

    pub fn code(self) -> &'static str {
        match self {
            DisfluencyTag::Fluent => "F",
            DisfluencyTag::Edit => "E",
            DisfluencyTag::RepairOnset => "RPS",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        match code {
            "F" => Some(DisfluencyTag::Fluent),
            "E" => Some(DisfluencyTag::Edit),
            "RPS" => Some(DisfluencyTag::RepairOnset),
            _ => None,
        }
    }

    pub fn one_hot(self) -> [f64; 3] {
        match self {
            DisfluencyTag::Fluent => [1.0, 0.0, 0.0],
            DisfluencyTag::Edit => [0.0, 1.0, 0.0],
            DisfluencyTag::RepairOnset => [0.0, 0.0, 1.0],
        }
    }
}

impl fmt::Display for DisfluencyTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaggedToken {
    pub text: String,
    pub tag: DisfluencyTag,
    pub position: usize,
}

/// Lowercases and strips everything but letters, digits and apostrophes.
pub fn normalize_token(raw: &str) -> String {
    raw.chars()
        .filter(|c| c.is_alphanumeric() || *c == '\'')
        .flat_map(char::to_lowercase)
        .collect()
}

pub fn is_edit_word(word: &str) -> bool {
    EDIT_WORDS.contains(&word)
}

/// Word-by-word tagger state.
#[derive(Clone, Debug, Default)]
pub struct IncrementalTagger {
    words: Vec<String>,
    // true for words belonging to an edit term (interregnum)
    interregnum: Vec<bool>,
    tags: Vec<DisfluencyTag>,
}

impl IncrementalTagger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn tags(&self) -> &[DisfluencyTag] {
        &self.tags
    }

    /// Consumes the next word and returns its (final) tag.
    pub fn push(&mut self, word: &str) -> DisfluencyTag {
        let word = word.to_lowercase();
        let tag = self.classify(&word);
        let i = self.words.len();
        self.words.push(word);
        self.interregnum.push(tag == DisfluencyTag::Edit);
        if tag == DisfluencyTag::Edit && i > 0 && self.completes_phrase(i) {
            // the first word of a phrasal edit term keeps its tag but no longer
            // counts as repairable context
            self.interregnum[i - 1] = true;
        }
        self.tags.push(tag);
        tag
    }

    fn completes_phrase(&self, i: usize) -> bool {
        let (prev, cur) = (&self.words[i - 1], &self.words[i]);
        !self.interregnum[i - 1]
            && EDIT_PHRASES
                .iter()
                .any(|(a, b)| prev == a && cur == b)
    }

    fn classify(&self, word: &str) -> DisfluencyTag {
        if is_edit_word(word) {
            return DisfluencyTag::Edit;
        }
        if let (Some(prev), Some(false)) = (self.words.last(), self.interregnum.last()) {
            if EDIT_PHRASES.iter().any(|(a, b)| prev == a && word == *b) {
                return DisfluencyTag::Edit;
            }
        }

        // up to REPAIR_WINDOW preceding non-edit words, nearest last
        let mut context: Vec<&str> = Vec::with_capacity(REPAIR_WINDOW);
        let mut edit_between = false;
        for j in (0..self.words.len()).rev() {
            if self.interregnum[j] {
                if context.is_empty() {
                    edit_between = true;
                }
                continue;
            }
            context.push(&self.words[j]);
            if context.len() == REPAIR_WINDOW {
                break;
            }
        }
        context.reverse();

        let Some(&last) = context.last() else {
            return DisfluencyTag::Fluent;
        };
        if last == word {
            return DisfluencyTag::RepairOnset;
        }
        if edit_between {
            let restarts = (2..=context.len()).any(|k| context[context.len() - k] == word);
            if restarts || similar(last, word) {
                return DisfluencyTag::RepairOnset;
            }
        }
        DisfluencyTag::Fluent
    }
}

/// Tags a token sequence left to right.
pub fn tag_incremental<S: AsRef<str>>(tokens: &[S]) -> Vec<DisfluencyTag> {
    let mut tagger = IncrementalTagger::new();
    tokens.iter().map(|t| tagger.push(t.as_ref())).collect()
}

pub fn tag_tokens<S: AsRef<str>>(tokens: &[S]) -> Vec<TaggedToken> {
    tag_incremental(tokens)
        .into_iter()
        .zip(tokens)
        .enumerate()
        .map(|(position, (tag, text))| TaggedToken {
            text: text.as_ref().to_string(),
            tag,
            position,
        })
        .collect()
}

/// Substitution heuristic: distinct words of length >= 3 whose edit distance is
/// at most half the longer length.
fn similar(a: &str, b: &str) -> bool {
    let (a, b): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
    if a == b || a.len() < 3 || b.len() < 3 {
        return false;
    }
    2 * levenshtein(&a, &b) <= a.len().max(b.len())
}

fn levenshtein(a: &[char], b: &[char]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Appends the one-hot tag columns `[fluent, edit, repair onset]` to each row.
pub fn encode_and_concat(embeddings: &Matrix, tags: &[DisfluencyTag]) -> Result<Matrix> {
    if embeddings.rows() != tags.len() {
        return Err(Error::config(format!(
            "{} embedding rows but {} tags",
            embeddings.rows(),
            tags.len()
        )));
    }
    let one_hot: Vec<[f64; 3]> = tags.iter().map(|t| t.one_hot()).collect();
    let suffix = Matrix::from_rows(&one_hot, 3)?;
    embeddings.hstack(&suffix)
}

/// Tag counts; adding two sessions' stats adds the counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagStats {
    pub words: usize,
    pub edits: usize,
    pub repairs: usize,
}

impl TagStats {
    pub fn from_tags(tags: &[DisfluencyTag]) -> Self {
        TagStats {
            words: tags.len(),
            edits: tags.iter().filter(|&&t| t == DisfluencyTag::Edit).count(),
            repairs: tags.iter().filter(|&&t| t == DisfluencyTag::RepairOnset).count(),
        }
    }

    pub fn edit_rate_per_100(&self) -> f64 {
        per_100(self.edits, self.words)
    }

    pub fn repair_rate_per_100(&self) -> f64 {
        per_100(self.repairs, self.words)
    }
}

fn per_100(count: usize, words: usize) -> f64 {
    if words == 0 {
        0.0
    } else {
        100.0 * count as f64 / words as f64
    }
}

impl Add for TagStats {
    type Output = TagStats;

    fn add(self, o: TagStats) -> TagStats {
        TagStats {
            words: self.words + o.words,
            edits: self.edits + o.edits,
            repairs: self.repairs + o.repairs,
        }
    }
}

impl AddAssign for TagStats {
    fn add_assign(&mut self, o: TagStats) {
        *self = *self + o;
    }
}

/// One transcript line: `{session_id, utterance_index, speaker, start_time,
/// end_time, tokens[, tags]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Utterance {
    pub session_id: String,
    pub utterance_index: usize,
    pub speaker: String,
    pub start_time: f64,
    pub end_time: f64,
    pub tokens: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tags: Option<Vec<DisfluencyTag>>,
}

impl Utterance {
    /// Interviewer turns are excluded from tagging and modeling.
    pub fn is_participant(&self) -> bool {
        !matches!(
            self.speaker.to_ascii_uppercase().as_str(),
            "INV" | "INTERVIEWER"
        )
    }
}

pub fn read_transcripts<R: BufRead>(reader: R) -> Result<Vec<Utterance>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::data(format!("transcript line {}: {e}", i + 1)))?;
        if line.trim().is_empty() {
            continue;
        }
        let u: Utterance = serde_json::from_str(&line)
            .map_err(|e| Error::data(format!("transcript line {}: {e}", i + 1)))?;
        if let Some(tags) = &u.tags {
            if tags.len() != u.tokens.len() {
                return Err(Error::data(format!(
                    "transcript line {}: {} tags for {} tokens",
                    i + 1,
                    tags.len(),
                    u.tokens.len()
                )));
            }
        }
        out.push(u);
    }
    Ok(out)
}

pub fn write_transcripts<W: Write>(mut w: W, utterances: &[Utterance]) -> Result<()> {
    for u in utterances {
        let line = serde_json::to_string(u).map_err(|e| Error::data(e.to_string()))?;
        writeln!(w, "{line}").map_err(|e| Error::data(format!("writing transcript: {e}")))?;
    }
    Ok(())
}

/// Tags participant utterances; interviewer utterances are passed through
/// unchanged. Tagging restarts at every utterance.
pub fn tag_transcripts(utterances: &[Utterance]) -> Vec<Utterance> {
    utterances
        .iter()
        .map(|u| {
            let mut u = u.clone();
            if u.is_participant() {
                u.tags = Some(tag_incremental(&u.tokens));
            }
            u
        })
        .collect()
}
