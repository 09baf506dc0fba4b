//! DNS wire-format parsing and encoding (RFC 1035 subset).
//!
//! Only what name harvesting needs: header, question and record sections,
//! compressed name decoding, and query encoding. Labels are kept as raw
//! bytes; no case folding or charset validation happens here. Unknown record
//! types are carried opaquely so real traffic (EDNS0/OPT, DNSSEC, ...) parses
//! instead of aborting the stream.

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

/// Maximum octets in a single label.
pub const MAX_LABEL_OCTETS: usize = 63;
/// Maximum octets in a fully encoded name, length bytes and root included.
pub const MAX_NAME_OCTETS: usize = 255;

pub const TYPE_NS: u16 = 2;
pub const TYPE_CNAME: u16 = 5;
pub const TYPE_SOA: u16 = 6;
pub const TYPE_PTR: u16 = 12;
pub const TYPE_MX: u16 = 15;
pub const TYPE_TXT: u16 = 16;

pub const CLASS_IN: u16 = 1;

/// Message section, carried in errors so a bad record is attributable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Section {
    Question,
    Answer,
    Authority,
    Additional,
}

impl fmt::Display for Section {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Section::Question => "question",
            Section::Answer => "answer",
            Section::Authority => "authority",
            Section::Additional => "additional",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WireError {
    #[error("buffer truncated at offset {offset} while reading {context}")]
    Truncated { offset: usize, context: &'static str },
    #[error("reserved label length byte {0:#04x}")]
    ReservedLabelLength(u8),
    #[error("compression pointer loop through offset {0}")]
    PointerLoop(usize),
    #[error("encoded name exceeds {MAX_NAME_OCTETS} octets")]
    NameTooLong,
    #[error("label of {0} octets exceeds {MAX_LABEL_OCTETS}")]
    LabelTooLong(usize),
    #[error("empty label")]
    EmptyLabel,
    #[error("name has no labels")]
    EmptyName,
    #[error("{section} section, entry {index}: {source}")]
    InSection {
        section: Section,
        index: usize,
        #[source]
        source: Box<WireError>,
    },
}

fn truncated(offset: usize, context: &'static str) -> WireError {
    WireError::Truncated { offset, context }
}

/// A domain name as an ordered list of raw label bytes, leftmost label first.
/// The root label is never stored. Public constructors require at least one
/// label; the zero-label root name exists only through [`DomainName::root`]
/// (and the decoder, for record owners like OPT's).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DomainName {
    labels: Vec<Vec<u8>>,
}

impl DomainName {
    pub fn new(labels: Vec<Vec<u8>>) -> Result<Self, WireError> {
        if labels.is_empty() {
            return Err(WireError::EmptyName);
        }
        let mut encoded = 1usize;
        for label in &labels {
            if label.is_empty() {
                return Err(WireError::EmptyLabel);
            }
            if label.len() > MAX_LABEL_OCTETS {
                return Err(WireError::LabelTooLong(label.len()));
            }
            encoded += 1 + label.len();
        }
        if encoded > MAX_NAME_OCTETS {
            return Err(WireError::NameTooLong);
        }
        Ok(DomainName { labels })
    }

    /// The DNS root (zero labels). Only decoding should ordinarily produce
    /// this; it exists so messages carrying root-owned records still parse.
    pub fn root() -> Self {
        DomainName { labels: Vec::new() }
    }

    /// Parses presentation form ("www.example.com"). Splits on '.', so
    /// labels cannot contain dots this way; consecutive or trailing dots are
    /// rejected as empty labels.
    pub fn from_presentation(name: &str) -> Result<Self, WireError> {
        let labels: Vec<Vec<u8>> = name.split('.').map(|l| l.as_bytes().to_vec()).collect();
        DomainName::new(labels)
    }

    pub fn labels(&self) -> &[Vec<u8>] {
        &self.labels
    }

    pub fn label_count(&self) -> usize {
        self.labels.len()
    }

    pub fn is_root(&self) -> bool {
        self.labels.is_empty()
    }

    /// Octets this name occupies uncompressed: one length byte per label,
    /// the label bytes, and the root byte.
    pub fn encoded_len(&self) -> usize {
        1 + self.labels.iter().map(|l| 1 + l.len()).sum::<usize>()
    }
}

impl fmt::Display for DomainName {
    /// Dotted form with non-printable bytes escaped; for diagnostics only,
    /// not a reversible encoding.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.labels.is_empty() {
            return f.write_str(".");
        }
        for (i, label) in self.labels.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            for &b in label {
                if b.is_ascii_graphic() || b == b' ' {
                    write!(f, "{}", b as char)?;
                } else {
                    write!(f, "\\{b:03}")?;
                }
            }
        }
        Ok(())
    }
}

/// Decodes one possibly-compressed name starting at `offset`.
///
/// Returns the name and the offset just past its bytes as they appear at
/// `offset`: a pointer ends the in-place encoding after its own two bytes,
/// no matter how far the chase goes. Every pointer target is recorded and a
/// revisit is an error, so decoding terminates on any input.
pub fn decode_name(buffer: &[u8], offset: usize) -> Result<(DomainName, usize), WireError> {
    let mut labels: Vec<Vec<u8>> = Vec::new();
    let mut pos = offset;
    let mut next_offset: Option<usize> = None;
    let mut visited: HashSet<usize> = HashSet::new();
    let mut encoded = 1usize; // root byte

    loop {
        let len_byte = *buffer.get(pos).ok_or_else(|| truncated(pos, "label length"))?;
        match len_byte {
            0 => {
                pos += 1;
                break;
            }
            1..=63 => {
                let start = pos + 1;
                let end = start + len_byte as usize;
                let label = buffer
                    .get(start..end)
                    .ok_or_else(|| truncated(buffer.len(), "label bytes"))?;
                encoded += 1 + label.len();
                if encoded > MAX_NAME_OCTETS {
                    return Err(WireError::NameTooLong);
                }
                labels.push(label.to_vec());
                pos = end;
            }
            b if b & 0xC0 == 0xC0 => {
                let low = *buffer
                    .get(pos + 1)
                    .ok_or_else(|| truncated(pos + 1, "pointer low byte"))?;
                let target = usize::from(b & 0x3F) << 8 | usize::from(low);
                if next_offset.is_none() {
                    next_offset = Some(pos + 2);
                }
                if !visited.insert(target) {
                    return Err(WireError::PointerLoop(target));
                }
                pos = target;
            }
            other => return Err(WireError::ReservedLabelLength(other)),
        }
    }

    let name = if labels.is_empty() {
        DomainName::root()
    } else {
        DomainName { labels }
    };
    Ok((name, next_offset.unwrap_or(pos)))
}

/// Appends the uncompressed encoding of `name` to `out`.
pub fn encode_name(name: &DomainName, out: &mut Vec<u8>) {
    for label in name.labels() {
        out.push(label.len() as u8);
        out.extend_from_slice(label);
    }
    out.push(0);
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Question {
    pub name: DomainName,
    pub qtype: u16,
    pub qclass: u16,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResourceRecord {
    pub name: DomainName,
    pub rtype: u16,
    pub rclass: u16,
    pub ttl: u32,
    pub rdata: Vec<u8>,
    /// Names decoded out of the rdata for the record types that carry them
    /// (NS, CNAME, PTR, MX, SOA). Empty for every other type.
    pub rdata_names: Vec<DomainName>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DnsMessage {
    pub id: u16,
    pub is_response: bool,
    pub questions: Vec<Question>,
    pub answers: Vec<ResourceRecord>,
    pub authorities: Vec<ResourceRecord>,
    pub additionals: Vec<ResourceRecord>,
}

fn read_u16(buffer: &[u8], pos: usize, context: &'static str) -> Result<u16, WireError> {
    let bytes = buffer
        .get(pos..pos + 2)
        .ok_or_else(|| truncated(pos, context))?;
    Ok(u16::from_be_bytes(bytes.try_into().unwrap()))
}

fn read_u32(buffer: &[u8], pos: usize, context: &'static str) -> Result<u32, WireError> {
    let bytes = buffer
        .get(pos..pos + 4)
        .ok_or_else(|| truncated(pos, context))?;
    Ok(u32::from_be_bytes(bytes.try_into().unwrap()))
}

/// Decodes any names embedded in a record's rdata. Compression pointers may
/// reach anywhere in the message, so decoding runs against the full buffer.
fn rdata_names(
    buffer: &[u8],
    rdata_start: usize,
    rtype: u16,
) -> Result<Vec<DomainName>, WireError> {
    match rtype {
        TYPE_NS | TYPE_CNAME | TYPE_PTR => {
            let (name, _) = decode_name(buffer, rdata_start)?;
            Ok(vec![name])
        }
        TYPE_MX => {
            // 2 octets of preference, then the exchange name.
            let (name, _) = decode_name(buffer, rdata_start + 2)?;
            Ok(vec![name])
        }
        TYPE_SOA => {
            let (mname, after) = decode_name(buffer, rdata_start)?;
            let (rname, _) = decode_name(buffer, after)?;
            Ok(vec![mname, rname])
        }
        _ => Ok(Vec::new()),
    }
}

fn parse_question(buffer: &[u8], pos: usize) -> Result<(Question, usize), WireError> {
    let (name, after) = decode_name(buffer, pos)?;
    let qtype = read_u16(buffer, after, "question type")?;
    let qclass = read_u16(buffer, after + 2, "question class")?;
    Ok((Question { name, qtype, qclass }, after + 4))
}

fn parse_record(buffer: &[u8], pos: usize) -> Result<(ResourceRecord, usize), WireError> {
    let (name, after) = decode_name(buffer, pos)?;
    let rtype = read_u16(buffer, after, "record type")?;
    let rclass = read_u16(buffer, after + 2, "record class")?;
    let ttl = read_u32(buffer, after + 4, "record ttl")?;
    let rdlength = read_u16(buffer, after + 8, "record rdlength")? as usize;
    let rdata_start = after + 10;
    let rdata = buffer
        .get(rdata_start..rdata_start + rdlength)
        .ok_or_else(|| truncated(rdata_start, "record rdata"))?
        .to_vec();
    let names = rdata_names(buffer, rdata_start, rtype)?;
    let record = ResourceRecord {
        name,
        rtype,
        rclass,
        ttl,
        rdata,
        rdata_names: names,
    };
    Ok((record, rdata_start + rdlength))
}

fn in_section(section: Section, index: usize) -> impl FnOnce(WireError) -> WireError {
    move |source| WireError::InSection {
        section,
        index,
        source: Box::new(source),
    }
}

/// Parses a complete DNS message from a raw UDP payload.
///
/// Section lengths must match the header counts exactly; a message that
/// promises more records than it carries is an error, never a silent
/// truncation. Trailing bytes after the counted sections are ignored.
pub fn parse_message(buffer: &[u8]) -> Result<DnsMessage, WireError> {
    if buffer.len() < 12 {
        return Err(truncated(buffer.len(), "message header"));
    }
    let id = read_u16(buffer, 0, "id")?;
    let flags = read_u16(buffer, 2, "flags")?;
    let qdcount = read_u16(buffer, 4, "qdcount")?;
    let ancount = read_u16(buffer, 6, "ancount")?;
    let nscount = read_u16(buffer, 8, "nscount")?;
    let arcount = read_u16(buffer, 10, "arcount")?;

    let mut pos = 12;
    let mut questions = Vec::with_capacity(qdcount as usize);
    for index in 0..qdcount {
        let (q, after) =
            parse_question(buffer, pos).map_err(in_section(Section::Question, index as usize))?;
        questions.push(q);
        pos = after;
    }

    let parse_section = |count: u16, section: Section, pos: &mut usize| {
        let mut records = Vec::with_capacity(count as usize);
        for index in 0..count {
            let (r, after) =
                parse_record(buffer, *pos).map_err(in_section(section, index as usize))?;
            records.push(r);
            *pos = after;
        }
        Ok::<_, WireError>(records)
    };

    let answers = parse_section(ancount, Section::Answer, &mut pos)?;
    let authorities = parse_section(nscount, Section::Authority, &mut pos)?;
    let additionals = parse_section(arcount, Section::Additional, &mut pos)?;

    Ok(DnsMessage {
        id,
        is_response: flags & 0x8000 != 0,
        questions,
        answers,
        authorities,
        additionals,
    })
}

/// Encodes a single-question recursive query for `name` (presentation form)
/// with the given query type, class IN, message id 0.
pub fn encode_query(name: &str, qtype: u16) -> Result<Vec<u8>, WireError> {
    let name = DomainName::from_presentation(name)?;
    Ok(encode_query_with_id(&name, qtype, 0))
}

/// Query encoder working from an already-validated name, with a caller
/// chosen id. Used by traffic generation, where names carry raw label bytes
/// that have no presentation form.
pub fn encode_query_with_id(name: &DomainName, qtype: u16, id: u16) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + name.encoded_len() + 4);
    out.extend_from_slice(&id.to_be_bytes());
    out.extend_from_slice(&0x0100u16.to_be_bytes()); // RD set
    out.extend_from_slice(&1u16.to_be_bytes()); // QDCOUNT
    out.extend_from_slice(&0u16.to_be_bytes());
    out.extend_from_slice(&0u16.to_be_bytes());
    out.extend_from_slice(&0u16.to_be_bytes());
    encode_name(name, &mut out);
    out.extend_from_slice(&qtype.to_be_bytes());
    out.extend_from_slice(&CLASS_IN.to_be_bytes());
    out
}
