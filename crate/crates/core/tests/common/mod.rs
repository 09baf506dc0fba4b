//! Shared test vectors and helpers for the integration suites.
//!
//! The tables below give the top-14 unigrams of well-understood traffic
//! classes, counts per 100k characters, and act as frozen inputs: the
//! expected metric values asserted against them were computed with an
//! independent throwaway script, not with this crate.

// Each integration test binary compiles this module separately and none of
// them uses everything in it.
#![allow(dead_code)]

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use dnszipf::corpus::fixtures::fixture_path;
use dnszipf::corpus::pcap::DnsPcapReader;
use dnszipf::detector::{DetectorConfig, DetectorState, Verdict};
use dnszipf::extraction::{harvest, subdomain_text, DomainContext, NormalizedText};
use dnszipf::fingerprint::{load_fingerprint, Fingerprint};

pub const TABLE_TOTAL: u64 = 100_000;

/// Letter frequencies of a large popular-domain corpus; the canonical
/// "legitimate names" reference shape.
pub const POPULAR_DOMAINS: &[(&str, u64)] = &[
    ("e", 10139),
    ("a", 8935),
    ("i", 7346),
    ("o", 7105),
    ("s", 6804),
    ("r", 6524),
    ("t", 6263),
    ("n", 6094),
    ("l", 4849),
    ("c", 3861),
    ("m", 3249),
    ("d", 3247),
    ("u", 3105),
    ("p", 2689),
];

/// Ordinary English prose. Decays like domain text but ranks differ.
pub const ENGLISH_PROSE: &[(&str, u64)] = &[
    ("e", 12702),
    ("t", 9056),
    ("a", 8167),
    ("o", 7507),
    ("i", 6966),
    ("n", 6749),
    ("s", 6327),
    ("h", 6094),
    ("r", 5987),
    ("d", 4253),
    ("l", 4025),
    ("c", 2758),
    ("u", 2758),
    ("m", 2406),
];

/// Unigrams of one million uniform random 10-char names: flat to four
/// decimal places.
pub const RANDOM_NAMES_1M: &[(&str, u64)] = &[
    ("i", 2722),
    ("9", 2715),
    ("z", 2710),
    ("c", 2710),
    ("f", 2709),
    ("6", 2708),
    ("o", 2707),
    ("k", 2707),
    ("q", 2707),
    ("j", 2706),
    ("3", 2705),
    ("7", 2705),
    ("0", 2704),
    ("5", 2406),
];

/// Same construction from only 100 names: noisier but still flat.
pub const RANDOM_NAMES_100: &[(&str, u64)] = &[
    ("2", 3800),
    ("y", 3500),
    ("7", 3400),
    ("q", 3400),
    ("4", 3400),
    ("w", 3400),
    ("5", 3300),
    ("8", 3100),
    ("p", 3000),
    ("-", 2900),
    ("9", 2900),
    ("m", 2900),
    ("v", 2900),
    ("x", 2800),
];

/// Subdomain text of benign queries (labels left of the registered domain).
pub const BENIGN_SUBDOMAINS: &[(&str, u64)] = &[
    ("a", 8105),
    ("s", 8074),
    ("e", 6946),
    ("o", 6738),
    ("n", 6463),
    (".", 5910),
    ("i", 5713),
    ("c", 4961),
    ("t", 4305),
    ("l", 4156),
    ("m", 3972),
    ("r", 3643),
    ("g", 3284),
    ("d", 2883),
];

/// Host names harvested from NS-record data. Steep decay, but ranked by
/// "ns1"-style vocabulary, so it correlates poorly with query text.
pub const NS_HOSTS: &[(&str, u64)] = &[
    ("n", 20976),
    ("s", 19126),
    ("1", 6023),
    ("2", 6023),
    ("d", 4773),
    (".", 4491),
    ("0", 3170),
    ("3", 2959),
    ("c", 2501),
    ("a", 2096),
    ("g", 2043),
    ("4", 2043),
    ("e", 1955),
    ("t", 1885),
];

/// Query text emitted by the iodine tunnel.
pub const IODINE_TUNNEL: &[(&str, u64)] = &[
    ("a", 4969),
    ("c", 3360),
    ("s", 3329),
    ("b", 3217),
    ("q", 3186),
    ("l", 3177),
    ("o", 3132),
    ("n", 3119),
    ("m", 3096),
    ("t", 3038),
    ("w", 3033),
    ("f", 3020),
    ("r", 3020),
    ("g", 3006),
];

/// Query text emitted by dns2tcp.
pub const DNS2TCP_TUNNEL: &[(&str, u64)] = &[
    ("n", 4515),
    ("k", 3794),
    ("c", 3770),
    ("r", 3569),
    ("b", 3470),
    ("u", 3137),
    ("t", 3121),
    ("d", 3105),
    ("m", 3097),
    ("s", 3097),
    ("x", 3097),
    ("p", 3080),
    ("a", 3048),
    ("o", 2918),
];

/// Query text emitted by TCP-over-DNS.
pub const TCP_OVER_DNS_TUNNEL: &[(&str, u64)] = &[
    ("k", 4177),
    ("g", 4021),
    ("b", 3731),
    ("j", 3726),
    ("m", 3531),
    ("o", 3497),
    ("d", 3475),
    ("e", 3462),
    ("c", 3414),
    ("v", 3406),
    ("n", 3401),
    ("q", 3393),
    ("a", 3358),
    ("l", 3358),
];

pub fn table_fingerprint(rows: &[(&str, u64)]) -> Fingerprint {
    Fingerprint::from_rows(1, rows, TABLE_TOTAL).expect("reference table is well formed")
}

/// The bundled reference fingerprint, as the CLI would load it.
pub fn bundled_reference() -> Fingerprint {
    let path = fixture_path("domains_unigram.fp");
    let file = File::open(&path)
        .unwrap_or_else(|e| panic!("open {}: {e} (run gen_fixtures?)", path.display()));
    load_fingerprint(BufReader::new(file)).expect("bundled fingerprint parses")
}

/// Replays a capture through the full production path: pcap frames, DNS
/// parsing, name harvesting, subdomain extraction, tumbling windows. NS-host
/// names and names with no subdomain part are skipped, same as the CLI.
pub fn score_capture(path: &Path, config: DetectorConfig) -> Vec<Verdict> {
    let mut state = DetectorState::new(config).expect("detector state");
    let file = File::open(path)
        .unwrap_or_else(|e| panic!("open {}: {e} (run gen_fixtures?)", path.display()));
    let mut reader = DnsPcapReader::new(BufReader::new(file)).expect("pcap header");
    let mut verdicts = Vec::new();
    while let Some(msg) = reader.next_message().expect("read capture") {
        for (name, context) in harvest(&msg) {
            if context == DomainContext::NsHost {
                continue;
            }
            let text = subdomain_text(&name);
            if text.is_empty() {
                continue;
            }
            if let Some(score) = state.push_query(text).expect("score window") {
                verdicts.push(score.verdict);
            }
        }
    }
    assert_eq!(
        reader.stats().skipped_total(),
        0,
        "fixture captures contain only DNS frames"
    );
    verdicts
}

/// Subdomain texts of every query in a capture, in arrival order.
pub fn capture_texts(path: &Path) -> Vec<NormalizedText> {
    let file = File::open(path)
        .unwrap_or_else(|e| panic!("open {}: {e} (run gen_fixtures?)", path.display()));
    let mut reader = DnsPcapReader::new(BufReader::new(file)).expect("pcap header");
    let mut texts = Vec::new();
    while let Some(msg) = reader.next_message().expect("read capture") {
        for (name, context) in harvest(&msg) {
            if context != DomainContext::NsHost {
                texts.push(subdomain_text(&name));
            }
        }
    }
    texts
}
