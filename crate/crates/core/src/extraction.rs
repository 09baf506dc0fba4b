//! Turning DNS names into the normalized text that gets counted.
//!
//! All statistics downstream run over a fixed 39-symbol alphabet: the
//! lowercase letters, digits, hyphen, underscore, and the label separator
//! '.'. Normalization folds uppercase and silently drops everything else,
//! so binary junk in a hostile label cannot widen the gram space.

use crate::dns_wire::{DnsMessage, DomainName, TYPE_NS};

/// True for the 39 characters that survive normalization.
pub fn is_alphabet_char(c: char) -> bool {
    matches!(c, 'a'..='z' | '0'..='9' | '-' | '_' | '.')
}

/// Text reduced to the counting alphabet. The only way to construct one is
/// through the `normalize*` functions, so holding a `NormalizedText` is
/// proof the content is clean.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NormalizedText(String);

impl NormalizedText {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl AsRef<str> for NormalizedText {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for NormalizedText {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

pub fn normalize(text: &str) -> NormalizedText {
    normalize_bytes(text.as_bytes())
}

pub fn normalize_bytes(bytes: &[u8]) -> NormalizedText {
    let mut out = String::with_capacity(bytes.len());
    for &b in bytes {
        let c = (b as char).to_ascii_lowercase();
        if is_alphabet_char(c) {
            out.push(c);
        }
    }
    NormalizedText(out)
}

/// Full dotted name, normalized.
pub fn normalize_name(name: &DomainName) -> NormalizedText {
    NormalizedText(join_labels(name.labels()))
}

fn join_labels(labels: &[Vec<u8>]) -> String {
    let mut out = String::new();
    for (i, label) in labels.iter().enumerate() {
        if i > 0 {
            out.push('.');
        }
        for &b in label {
            let c = (b as char).to_ascii_lowercase();
            // '.' inside a raw label would forge a separator, so it is
            // dropped here even though it is in the alphabet.
            if c != '.' && is_alphabet_char(c) {
                out.push(c);
            }
        }
    }
    out
}

/// The part of a name its owner actually chose: the final label goes (TLD),
/// and when two or more labels are left the leftmost goes too, since hosts
/// like www or mail are infrastructure naming rather than brand text.
/// Single remaining labels are kept whole, so "example.com" yields
/// "example". The root yields empty text.
pub fn registered_core(name: &DomainName) -> NormalizedText {
    let labels = name.labels();
    if labels.is_empty() {
        return NormalizedText(String::new());
    }
    let trimmed = &labels[..labels.len() - 1];
    let trimmed = if trimmed.len() >= 2 { &trimmed[1..] } else { trimmed };
    NormalizedText(join_labels(trimmed))
}

/// Everything left of the registered domain: for "x.y.example.com" this is
/// "x.y". Names of two labels or fewer have no subdomain and yield empty
/// text, which callers should skip rather than count.
pub fn subdomain_text(name: &DomainName) -> NormalizedText {
    let labels = name.labels();
    if labels.len() <= 2 {
        return NormalizedText(String::new());
    }
    NormalizedText(join_labels(&labels[..labels.len() - 2]))
}

/// Where in a message a harvested name appeared. NS host names get their
/// own bucket because nameserver fleets (ns1, ns2, ...) have a character
/// distribution of their own and can be scored against a separate
/// reference instead of polluting the query stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainContext {
    Question,
    AnswerHost,
    NsHost,
}

/// Every name in the message, each tagged with its context. Owner names
/// and rdata names of all sections are included; duplicates are kept
/// because repetition is signal for frequency counting.
pub fn harvest(msg: &DnsMessage) -> Vec<(DomainName, DomainContext)> {
    let mut out = Vec::new();
    for q in &msg.questions {
        out.push((q.name.clone(), DomainContext::Question));
    }
    let records = msg
        .answers
        .iter()
        .chain(&msg.authorities)
        .chain(&msg.additionals);
    for rr in records {
        out.push((rr.name.clone(), DomainContext::AnswerHost));
        let context = if rr.rtype == TYPE_NS {
            DomainContext::NsHost
        } else {
            DomainContext::AnswerHost
        };
        for name in &rr.rdata_names {
            out.push((name.clone(), context));
        }
    }
    out
}
