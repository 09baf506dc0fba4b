//! Corpus input and generation: domain lists, pcap traffic, random name
//! sets, simulated tunnels, and the checked test fixtures built from them.

pub mod domain_list;
pub mod fixtures;
pub mod pcap;
pub mod random;
pub mod tunnel;
