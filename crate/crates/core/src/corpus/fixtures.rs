//! The checked-in test corpus and its integrity manifest.
//!
//! Detection thresholds are calibrated against these exact files, so the
//! statistics asserted in tests are only meaningful if the bytes have not
//! drifted. Every fixture is pinned by digest; `verify_all` is cheap and
//! tests that depend on fixture-derived constants call it first to fail
//! loudly on a stale or regenerated corpus. The pcap and fingerprint
//! fixtures are rebuilt deterministically by the `gen_fixtures` example.

use std::fs::File;
use std::io::{self, Read};
use std::path::PathBuf;

use sha2::{Digest, Sha256};
use thiserror::Error;

/// Environment variable overriding the fixture directory.
pub const FIXTURE_DIR_ENV: &str = "DNSZIPF_FIXTURE_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixtureClass {
    /// Ranked list of real-world popular domains.
    PopularDomains,
    /// Unigram reference fingerprint trained from the popular list.
    ReferenceFingerprint,
    /// Capture of benign subdomain query traffic.
    LegitSubdomainPcap,
    /// Capture of simulated tunnel query traffic.
    TunnelPcap,
    /// Uniformly random domain cores, one per line.
    RandomDomains,
}

#[derive(Debug, Clone, Copy)]
pub struct FixtureSpec {
    pub name: &'static str,
    pub class: FixtureClass,
    pub sha256: &'static str,
    pub description: &'static str,
}

pub const FIXTURES: &[FixtureSpec] = &[
    FixtureSpec {
        name: "popular_domains.txt",
        class: FixtureClass::PopularDomains,
        sha256: "0fd4ad2c4de5eeb977630fd075ec090eb0f286288a4ad393cf54a12bdc4811b4",
        description: "ranked popular domain list the reference fingerprint is trained from",
    },
    FixtureSpec {
        name: "domains_unigram.fp",
        class: FixtureClass::ReferenceFingerprint,
        sha256: "34073243e8d454b77fe171b760b0109ed2dc8db19465df6b487e1923d480d389",
        description: "unigram fingerprint of the popular list's registered cores",
    },
    FixtureSpec {
        name: "legit_subdomains.pcap",
        class: FixtureClass::LegitSubdomainPcap,
        sha256: "de497b80ef9b1744ad5688ad410ef489862ec00bb89cba7f5887d8ffc5051ad0",
        description: "benign subdomain queries against popular domains, 800 packets",
    },
    FixtureSpec {
        name: "tunnel_base32.pcap",
        class: FixtureClass::TunnelPcap,
        sha256: "4696e6cb4882accde8b5c3ff93089b73587f7aa2331b17a5a2e2fc8381b06e26",
        description: "simulated base32 tunnel, 500 full queries",
    },
    FixtureSpec {
        name: "tunnel_base64.pcap",
        class: FixtureClass::TunnelPcap,
        sha256: "1406823d13faf97604baa79b2994547b93cc0754b506a264f09287a9b6bb2a5c",
        description: "simulated base64 tunnel, 500 full queries",
    },
    FixtureSpec {
        name: "tunnel_hex.pcap",
        class: FixtureClass::TunnelPcap,
        sha256: "6b1381ae384534e59663a8e2bc7cec0b6dcaeee4fc75862ea0b945a4354359fd",
        description: "simulated hex tunnel, 500 full queries",
    },
    FixtureSpec {
        name: "random_domains_1000.txt",
        class: FixtureClass::RandomDomains,
        sha256: "46ffec796096acd42b9550a3bc60c7a74226835f250e3bd817eb63c0db9695dd",
        description: "1000 uniformly random 10-char domain cores under .test",
    },
];

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("no fixture named {0:?}")]
    Unknown(String),
    #[error("fixture {name} missing at {path}")]
    Missing { name: &'static str, path: String },
    #[error("fixture {name} digest mismatch: expected {expected}, found {actual}")]
    DigestMismatch {
        name: &'static str,
        expected: &'static str,
        actual: String,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Directory holding the fixtures: the override variable if set, else the
/// `fixtures/` directory in the repository root.
pub fn fixture_dir() -> PathBuf {
    match std::env::var_os(FIXTURE_DIR_ENV) {
        Some(dir) => PathBuf::from(dir),
        None => PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures")),
    }
}

pub fn spec(name: &str) -> Option<&'static FixtureSpec> {
    FIXTURES.iter().find(|s| s.name == name)
}

pub fn fixture_path(name: &str) -> PathBuf {
    fixture_dir().join(name)
}

pub fn sha256_hex(path: &std::path::Path) -> io::Result<String> {
    let mut file = File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 65536];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

pub fn verify_fixture(spec: &FixtureSpec) -> Result<(), FixtureError> {
    let path = fixture_path(spec.name);
    if !path.exists() {
        return Err(FixtureError::Missing {
            name: spec.name,
            path: path.display().to_string(),
        });
    }
    let actual = sha256_hex(&path)?;
    if actual != spec.sha256 {
        return Err(FixtureError::DigestMismatch {
            name: spec.name,
            expected: spec.sha256,
            actual,
        });
    }
    Ok(())
}

/// Checks every fixture in the manifest, stopping at the first problem.
pub fn verify_all() -> Result<(), FixtureError> {
    for spec in FIXTURES {
        verify_fixture(spec)?;
    }
    Ok(())
}
