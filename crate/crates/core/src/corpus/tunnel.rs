//! Simulated DNS tunnel traffic.
//!
//! A tunnel client smuggles payload bytes out by encoding them into query
//! names under an apex it controls: an optional session tag label, a
//! zero-padded counter label for reassembly, then as many payload labels
//! as the 255-octet name budget allows. The simulator here produces
//! exactly that shape, greedily filling each name, and the decoder
//! reverses it so tests can prove the traffic really carries the bytes it
//! claims to.

use std::fmt;

use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine;
use thiserror::Error;

use crate::dns_wire::{DomainName, WireError, MAX_LABEL_OCTETS, MAX_NAME_OCTETS};
use crate::extraction::is_alphabet_char;

/// Width of the decimal counter label, fixing the chunk ceiling at 10^4.
pub const COUNTER_WIDTH: usize = 4;
pub const MAX_CHUNKS: usize = 10_000;

const BASE32_ALPHABET: &[u8; 32] = b"abcdefghijklmnopqrstuvwxyz234567";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TunnelError {
    #[error("session tag {0:?} must be at most 8 label characters")]
    BadSessionTag(String),
    #[error("max label length {0} outside 1..=63")]
    BadMaxLabel(usize),
    #[error("apex must have at least one label")]
    ApexIsRoot,
    #[error("apex and session tag leave no room for payload in a 255 octet name")]
    NoPayloadRoom,
    #[error("payload of {needed} chunks exceeds the 4-digit counter space")]
    TooManyChunks { needed: usize },
    #[error("name {0:?} is not under the tunnel apex")]
    ForeignName(String),
    #[error("name {0:?} lacks the session tag")]
    MissingSession(String),
    #[error("name {0:?} has no valid counter label")]
    BadCounter(String),
    #[error("chunk {expected} missing during reassembly")]
    MissingChunk { expected: usize },
    #[error("{codec} decode failed: {message}")]
    DecodeFailed { codec: &'static str, message: String },
    #[error(transparent)]
    Wire(#[from] WireError),
}

/// Payload-to-text encodings seen in tunneling tools. Base32 and hex
/// survive DNS case folding; base64 does not, which is exactly why its
/// on-wire distribution looks different after normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TunnelCodec {
    Base32,
    Base64Dns,
    Hex,
}

impl TunnelCodec {
    pub fn name(&self) -> &'static str {
        match self {
            TunnelCodec::Base32 => "base32",
            TunnelCodec::Base64Dns => "base64",
            TunnelCodec::Hex => "hex",
        }
    }

    pub fn encode(&self, bytes: &[u8]) -> String {
        match self {
            TunnelCodec::Base32 => base32_encode(bytes),
            TunnelCodec::Base64Dns => URL_SAFE_NO_PAD.encode(bytes),
            TunnelCodec::Hex => hex::encode(bytes),
        }
    }

    pub fn decode(&self, text: &str) -> Result<Vec<u8>, TunnelError> {
        let failed = |message: String| TunnelError::DecodeFailed {
            codec: self.name(),
            message,
        };
        match self {
            TunnelCodec::Base32 => base32_decode(text).map_err(failed),
            TunnelCodec::Base64Dns => URL_SAFE_NO_PAD
                .decode(text)
                .map_err(|e| failed(e.to_string())),
            TunnelCodec::Hex => hex::decode(text).map_err(|e| failed(e.to_string())),
        }
    }

    /// Characters produced for `byte_len` input bytes, unpadded.
    pub fn encoded_len(&self, byte_len: usize) -> usize {
        match self {
            TunnelCodec::Base32 => byte_len / 5 * 8 + [0, 2, 4, 5, 7][byte_len % 5],
            TunnelCodec::Base64Dns => byte_len / 3 * 4 + [0, 2, 3][byte_len % 3],
            TunnelCodec::Hex => byte_len * 2,
        }
    }

    /// Largest byte count whose encoding fits in `chars` characters.
    pub fn max_bytes_for_chars(&self, chars: usize) -> usize {
        match self {
            TunnelCodec::Base32 => chars / 8 * 5 + [0, 0, 1, 1, 2, 3, 3, 4][chars % 8],
            TunnelCodec::Base64Dns => chars / 4 * 3 + [0, 0, 1, 2][chars % 4],
            TunnelCodec::Hex => chars / 2,
        }
    }
}

impl fmt::Display for TunnelCodec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn base32_encode(bytes: &[u8]) -> String {
    let mut out = String::with_capacity(bytes.len().div_ceil(5) * 8);
    let mut acc: u32 = 0;
    let mut bits = 0;
    for &b in bytes {
        acc = acc << 8 | u32::from(b);
        bits += 8;
        while bits >= 5 {
            bits -= 5;
            out.push(BASE32_ALPHABET[(acc >> bits & 0x1F) as usize] as char);
        }
    }
    if bits > 0 {
        out.push(BASE32_ALPHABET[(acc << (5 - bits) & 0x1F) as usize] as char);
    }
    out
}

fn base32_decode(text: &str) -> Result<Vec<u8>, String> {
    // Unpadded lengths are 0,2,4,5,7 mod 8; anything else cannot have come
    // from whole bytes.
    if matches!(text.len() % 8, 1 | 3 | 6) {
        return Err(format!("invalid length {}", text.len()));
    }
    let mut out = Vec::with_capacity(text.len() * 5 / 8);
    let mut acc: u32 = 0;
    let mut bits = 0;
    for c in text.bytes() {
        let value = match c {
            b'a'..=b'z' => c - b'a',
            b'2'..=b'7' => c - b'2' + 26,
            _ => return Err(format!("invalid character {:?}", c as char)),
        };
        acc = acc << 5 | u32::from(value);
        bits += 5;
        if bits >= 8 {
            bits -= 8;
            out.push((acc >> bits & 0xFF) as u8);
        }
    }
    if acc & ((1 << bits) - 1) != 0 {
        return Err("nonzero trailing bits".into());
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct SimulatedTunnelConfig {
    pub codec: TunnelCodec,
    /// Zone the tunnel exfiltrates under, e.g. tun.example.com.
    pub apex: DomainName,
    /// Fixed label prepended to every query; empty means none. Tools use
    /// these to multiplex clients.
    pub session_tag: String,
    /// Longest payload label to emit. Real tools use the full 63.
    pub max_label: usize,
}

impl SimulatedTunnelConfig {
    pub fn new(codec: TunnelCodec, apex: DomainName) -> Self {
        SimulatedTunnelConfig {
            codec,
            apex,
            session_tag: String::new(),
            max_label: MAX_LABEL_OCTETS,
        }
    }

    pub fn validate(&self) -> Result<(), TunnelError> {
        if self.apex.is_root() {
            return Err(TunnelError::ApexIsRoot);
        }
        let tag_ok = self.session_tag.len() <= 8
            && self
                .session_tag
                .chars()
                .all(|c| is_alphabet_char(c) && c != '.');
        if !tag_ok {
            return Err(TunnelError::BadSessionTag(self.session_tag.clone()));
        }
        if !(1..=MAX_LABEL_OCTETS).contains(&self.max_label) {
            return Err(TunnelError::BadMaxLabel(self.max_label));
        }
        if self.payload_chars_per_query() == 0 {
            return Err(TunnelError::NoPayloadRoom);
        }
        Ok(())
    }

    /// Encoded characters each query can carry. The 255-octet budget pays
    /// for the apex, the counter label, the session label if any, and one
    /// length byte per payload label; what remains is payload.
    pub fn payload_chars_per_query(&self) -> usize {
        let fixed = self.apex.encoded_len()
            + 1
            + COUNTER_WIDTH
            + if self.session_tag.is_empty() {
                0
            } else {
                1 + self.session_tag.len()
            };
        let Some(budget) = MAX_NAME_OCTETS.checked_sub(fixed) else {
            return 0;
        };
        let full_labels = budget / (self.max_label + 1);
        let remainder = budget % (self.max_label + 1);
        full_labels * self.max_label + remainder.saturating_sub(1)
    }

    /// Payload bytes per full query under this codec.
    pub fn chunk_bytes(&self) -> usize {
        self.codec.max_bytes_for_chars(self.payload_chars_per_query())
    }
}

/// Encodes `payload` into tunnel query names, each name filled to capacity
/// before the next is started. An empty payload yields no queries.
pub fn simulate_tunnel(
    payload: &[u8],
    config: &SimulatedTunnelConfig,
) -> Result<Vec<DomainName>, TunnelError> {
    config.validate()?;
    let chunk_bytes = config.chunk_bytes();
    if chunk_bytes == 0 {
        return Err(TunnelError::NoPayloadRoom);
    }
    let needed = payload.len().div_ceil(chunk_bytes);
    if needed > MAX_CHUNKS {
        return Err(TunnelError::TooManyChunks { needed });
    }

    let mut names = Vec::with_capacity(needed);
    for (counter, chunk) in payload.chunks(chunk_bytes).enumerate() {
        let encoded = config.codec.encode(chunk);
        let mut labels: Vec<Vec<u8>> = Vec::new();
        if !config.session_tag.is_empty() {
            labels.push(config.session_tag.as_bytes().to_vec());
        }
        labels.push(format!("{counter:0width$}", width = COUNTER_WIDTH).into_bytes());
        for piece in encoded.as_bytes().chunks(config.max_label) {
            labels.push(piece.to_vec());
        }
        labels.extend(config.apex.labels().iter().cloned());
        names.push(DomainName::new(labels)?);
    }
    Ok(names)
}

/// Reassembles the payload from tunnel query names in any order. Every
/// name must sit under the apex, carry the session tag, and the counters
/// must form a contiguous run from zero; duplicates and gaps are errors
/// rather than silently mangled output.
pub fn decode_tunnel(
    names: &[DomainName],
    config: &SimulatedTunnelConfig,
) -> Result<Vec<u8>, TunnelError> {
    config.validate()?;
    let apex = config.apex.labels();
    let mut chunks: Vec<(usize, String)> = Vec::with_capacity(names.len());

    for name in names {
        let labels = name.labels();
        if labels.len() < apex.len() || &labels[labels.len() - apex.len()..] != apex {
            return Err(TunnelError::ForeignName(name.to_string()));
        }
        let mut rest = &labels[..labels.len() - apex.len()];
        if !config.session_tag.is_empty() {
            if rest.first().map(Vec::as_slice) != Some(config.session_tag.as_bytes()) {
                return Err(TunnelError::MissingSession(name.to_string()));
            }
            rest = &rest[1..];
        }
        let bad_counter = || TunnelError::BadCounter(name.to_string());
        let counter_label = rest.first().ok_or_else(bad_counter)?;
        if counter_label.len() != COUNTER_WIDTH {
            return Err(bad_counter());
        }
        let counter: usize = std::str::from_utf8(counter_label)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(bad_counter)?;
        let mut text = String::new();
        for label in &rest[1..] {
            text.push_str(std::str::from_utf8(label).map_err(|_| {
                TunnelError::DecodeFailed {
                    codec: config.codec.name(),
                    message: "payload label is not ascii".into(),
                }
            })?);
        }
        chunks.push((counter, text));
    }

    chunks.sort_by_key(|&(counter, _)| counter);
    let mut payload = Vec::new();
    for (expected, (counter, text)) in chunks.into_iter().enumerate() {
        if counter != expected {
            return Err(TunnelError::MissingChunk { expected });
        }
        payload.extend(config.codec.decode(&text)?);
    }
    Ok(payload)
}
