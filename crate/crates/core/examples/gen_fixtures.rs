//! Regenerates the derived fixtures, byte for byte.
//!
//! Everything is seeded, so repeated runs produce identical files; the
//! digests printed at the end belong in the fixture manifest. Each output
//! is validated against the detector it exists to exercise before it is
//! accepted: benign windows must all score legitimate, tunnel windows must
//! all score tunnel, and tunnel captures must decode back to their exact
//! payload bytes. A generator change that breaks those properties fails
//! here instead of leaving misleading fixtures behind.
//!
//! Run with: cargo run -p dnszipf --example gen_fixtures

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dnszipf::corpus::domain_list::read_entries;
use dnszipf::corpus::fixtures::{fixture_dir, sha256_hex, FIXTURES};
use dnszipf::corpus::pcap::{DnsPcapReader, PcapWriter};
use dnszipf::corpus::random::{generate_random_domains, random_bytes};
use dnszipf::corpus::tunnel::{
    decode_tunnel, simulate_tunnel, SimulatedTunnelConfig, TunnelCodec,
};
use dnszipf::detector::{DetectorConfig, DetectorState, Verdict};
use dnszipf::dns_wire::{encode_query_with_id, DomainName, TYPE_TXT};
use dnszipf::extraction::{harvest, registered_core, subdomain_text, DomainContext};
use dnszipf::fingerprint::{
    count_ngrams, save_fingerprint, zipf_exponent, Fingerprint,
};

const CLIENT: [u8; 4] = [10, 0, 0, 2];
const RESOLVER: [u8; 4] = [10, 0, 0, 53];
const TS_BASE: u32 = 1_000_000_000;
const QUERY_STEP_USEC: u32 = 10_000;

/// Service host labels with rough relative popularity. The decay here is
/// what makes benign subdomain traffic Zipf-like at the character level.
const HOSTS: &[(&str, u32)] = &[
    ("www", 80),
    ("mail", 70),
    ("api", 60),
    ("cdn", 55),
    ("static", 62),
    ("images", 58),
    ("assets", 50),
    ("news", 56),
    ("store", 48),
    ("search", 44),
    ("secure", 40),
    ("email", 38),
    ("origin", 34),
    ("blog", 30),
    ("shop", 25),
    ("app", 20),
    ("dev", 28),
    ("m", 12),
    ("video", 26),
    ("docs", 24),
    ("login", 22),
    ("beta", 20),
    ("test", 18),
    ("admin", 14),
    ("portal", 16),
    ("cloud", 13),
    ("forum", 14),
    ("wiki", 9),
    ("chat", 10),
    ("help", 12),
    ("live", 9),
    ("media", 16),
    ("hub", 8),
    ("smtp", 6),
    ("img", 10),
    ("pop", 5),
    ("imap", 5),
    ("vpn", 5),
    ("git", 7),
    ("ci", 4),
    ("db", 4),
    ("proxy", 5),
    ("edge", 8),
    ("node1", 3),
    ("node2", 3),
    ("eu", 3),
    ("us", 3),
    ("asia", 3),
    ("cdn1", 2),
    ("cdn2", 2),
    ("ns2", 2),
    ("stage", 5),
    ("demo", 3),
    ("server", 18),
    ("remote", 12),
    ("tracker", 8),
    ("metrics", 7),
    ("reader", 6),
    ("en", 8),
    ("intranet", 5),
];

/// Occasional second-level prefixes, for names like east.api.example.com.
const PREFIXES: &[(&str, u32)] = &[
    ("eu", 8),
    ("us", 8),
    ("de", 5),
    ("uk", 5),
    ("jp", 4),
    ("east", 6),
    ("west", 6),
    ("a1", 3),
    ("b2", 2),
    ("core", 3),
];

fn pick<'a>(rng: &mut ChaCha8Rng, table: &[(&'a str, u32)]) -> &'a str {
    let total: u32 = table.iter().map(|(_, w)| w).sum();
    let mut roll = rng.random_range(0..total);
    for (item, weight) in table {
        if roll < *weight {
            return item;
        }
        roll -= weight;
    }
    unreachable!("weights sum to total");
}

fn write_query_pcap(path: &Path, queries: &[(DomainName, u16)]) -> std::io::Result<()> {
    let mut writer = PcapWriter::new(BufWriter::new(File::create(path)?))?;
    for (i, (name, qtype)) in queries.iter().enumerate() {
        let payload = encode_query_with_id(name, *qtype, i as u16);
        let usec_total = i as u32 * QUERY_STEP_USEC;
        writer.write_udp_frame(
            TS_BASE + usec_total / 1_000_000,
            usec_total % 1_000_000,
            CLIENT,
            RESOLVER,
            40_000 + (i % 20_000) as u16,
            53,
            &payload,
        )?;
    }
    writer.into_inner().flush()
}

/// Replays a capture through the production pipeline and returns each
/// window's verdict.
fn score_capture(path: &Path, reference: &Fingerprint) -> Vec<Verdict> {
    let config = DetectorConfig::new(reference.clone()).expect("default config");
    let mut state = DetectorState::new(config).expect("state");
    let mut reader = DnsPcapReader::new(BufReader::new(File::open(path).expect("open capture")))
        .expect("pcap header");
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
            if let Some(score) = state.push_query(text).expect("score") {
                verdicts.push(score.verdict);
            }
        }
    }
    let stats = reader.stats();
    assert_eq!(stats.skipped_total(), 0, "capture has non-dns frames");
    verdicts
}

fn main() {
    let dir = fixture_dir();
    std::fs::create_dir_all(&dir).expect("fixture dir");

    // Popular domain list: the one fixture that is source data, not
    // generated. Everything else derives from it or from seeded bytes.
    let list_path = dir.join("popular_domains.txt");
    let (entries, issues) =
        read_entries(BufReader::new(File::open(&list_path).expect("open domain list")));
    assert!(issues.is_empty(), "domain list has bad lines: {issues:?}");
    assert!(entries.len() > 1000, "domain list too small");

    // Reference fingerprint over the registered cores.
    let cores: Vec<_> = entries.iter().map(|e| registered_core(&e.domain)).collect();
    assert!(cores.iter().all(|c| !c.is_empty()));
    let counts = count_ngrams(&cores, 1).expect("count");
    let reference = Fingerprint::build(&counts).expect("reference fingerprint");
    assert_eq!(reference.gram_at_rank(1).expect("rank 1"), "e");
    let slope = zipf_exponent(&reference, 14).expect("zipf");
    assert!(
        (slope - 0.640136).abs() < 1e-4,
        "reference decay drifted: zipf(14) = {slope}"
    );
    let fp_path = dir.join("domains_unigram.fp");
    save_fingerprint(&reference, File::create(&fp_path).expect("create fp")).expect("save fp");

    // Benign subdomain traffic: 800 queries, hosts drawn from a skewed
    // pool, base domains drawn rank-weighted from the list.
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut queries = Vec::with_capacity(800);
    for _ in 0..800 {
        let host = pick(&mut rng, HOSTS);
        let sub = if rng.random_range(0..100) < 8 {
            format!("{}.{}", pick(&mut rng, PREFIXES), host)
        } else {
            host.to_string()
        };
        // Squaring the uniform draw biases toward the top of the list.
        let roll: f64 = rng.random();
        let index = ((roll * roll) * entries.len() as f64) as usize;
        let base = &entries[index.min(entries.len() - 1)].domain;
        let name = DomainName::from_presentation(&format!("{sub}.{base}"))
            .expect("benign name");
        let qtype = if rng.random_range(0..100) < 85 { 1 } else { 28 };
        queries.push((name, qtype));
    }
    let legit_path = dir.join("legit_subdomains.pcap");
    write_query_pcap(&legit_path, &queries).expect("write legit pcap");

    let verdicts = score_capture(&legit_path, &reference);
    assert_eq!(verdicts.len(), 8, "benign capture should fill 8 windows");
    assert!(
        verdicts.iter().all(|v| *v == Verdict::Legitimate),
        "benign windows misscored: {verdicts:?}"
    );

    // Tunnel traffic: 500 capacity-filled queries per codec, payload sized
    // to the codec's per-query byte budget.
    let apex = DomainName::from_presentation("tun.example.com").expect("apex");
    let tunnels = [
        (TunnelCodec::Base32, "tunnel_base32.pcap", 1001u64),
        (TunnelCodec::Base64Dns, "tunnel_base64.pcap", 1002),
        (TunnelCodec::Hex, "tunnel_hex.pcap", 1003),
    ];
    for (codec, file_name, seed) in tunnels {
        let config = SimulatedTunnelConfig::new(codec, apex.clone());
        let payload = random_bytes(config.chunk_bytes() * 500, seed);
        let names = simulate_tunnel(&payload, &config).expect("simulate");
        assert_eq!(names.len(), 500);
        let queries: Vec<_> = names.iter().map(|n| (n.clone(), TYPE_TXT)).collect();
        let path = dir.join(file_name);
        write_query_pcap(&path, &queries).expect("write tunnel pcap");

        // The capture must still carry the payload end to end.
        let mut reader =
            DnsPcapReader::new(BufReader::new(File::open(&path).expect("open tunnel pcap")))
                .expect("pcap header");
        let mut recovered_names = Vec::new();
        while let Some(msg) = reader.next_message().expect("read tunnel pcap") {
            recovered_names.push(msg.questions[0].name.clone());
        }
        let recovered = decode_tunnel(&recovered_names, &config).expect("decode");
        assert_eq!(recovered, payload, "{codec}: payload mangled in transit");

        let verdicts = score_capture(&path, &reference);
        assert_eq!(verdicts.len(), 5, "{codec}: expected 5 windows");
        assert!(
            verdicts.iter().all(|v| *v == Verdict::Tunnel),
            "{codec} windows misscored: {verdicts:?}"
        );
    }

    // Random domain cores, the flat baseline corpus.
    let random_path = dir.join("random_domains_1000.txt");
    let mut out = BufWriter::new(File::create(&random_path).expect("create random list"));
    for text in generate_random_domains(1000, 10, 42) {
        writeln!(out, "{text}.test").expect("write random list");
    }
    out.flush().expect("flush random list");

    println!("fixture digests:");
    for spec in FIXTURES {
        let digest = sha256_hex(&dir.join(spec.name)).expect("digest");
        println!("{}\t{}", spec.name, digest);
    }
}
