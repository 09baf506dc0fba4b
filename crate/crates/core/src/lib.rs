//! Detect DNS tunnels by the shape of their character statistics.
//!
//! Legitimate domain names are made of human-chosen words, so their character
//! rank-frequency tables decay steeply, roughly following Zipf's law. Encoded
//! tunnel payloads (base32/base64/hex subdomain labels) are near-uniform: the
//! same table comes out flat. This crate builds n-gram fingerprints from
//! domain text, measures that decay, and flags query windows that are too
//! flat to be human.
//!
//! Pipeline: [`dns_wire`] parses raw DNS messages, [`extraction`] pulls and
//! normalizes the text worth fingerprinting, [`fingerprint`] counts n-grams
//! and computes rank-decay metrics, [`detector`] scores fixed-size query
//! windows, and [`corpus`] handles training data, pcap I/O, and synthetic
//! traffic generation.

pub mod corpus;
pub mod detector;
pub mod dns_wire;
pub mod extraction;
pub mod fingerprint;
