//! Classic pcap reading and writing, just deep enough for DNS over UDP.
//!
//! The reader handles both byte orders of the classic format and walks
//! Ethernet / IPv4 / UDP to the DNS payload. Anything that is not a DNS
//! datagram is counted and skipped, never fatal: a capture is bulk data
//! and one odd frame must not end the analysis. Only structural damage to
//! the container itself (bad magic, a record cut off mid-file) aborts.
//! The pcapng container is deliberately not parsed; it gets its own error
//! so the user learns to convert rather than puzzle over "bad magic".

use std::fmt;
use std::io::{self, Read, Write};

use thiserror::Error;

use crate::dns_wire::{parse_message, DnsMessage};

const PCAP_MAGIC: u32 = 0xA1B2_C3D4;
const PCAP_MAGIC_SWAPPED: u32 = 0xD4C3_B2A1;
const PCAPNG_MAGIC: u32 = 0x0A0D_0D0A;
const LINKTYPE_ETHERNET: u32 = 1;
/// Sanity bound on a single record; a frame claiming more than this is
/// corruption, not jumbo traffic.
const MAX_RECORD_BYTES: u32 = 1 << 20;

#[derive(Debug, Error)]
pub enum PcapError {
    #[error("not a pcap file: magic {0:#010x}")]
    BadMagic(u32),
    #[error("pcapng capture detected; convert to classic pcap first")]
    Pcapng,
    #[error("unsupported link type {0}, expected Ethernet (1)")]
    UnsupportedLinkType(u32),
    #[error("capture truncated mid-record")]
    TruncatedRecord,
    #[error("record of {0} bytes is implausibly large")]
    RecordTooLarge(u32),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PcapRecord {
    pub ts_sec: u32,
    pub ts_usec: u32,
    pub data: Vec<u8>,
}

/// Why a captured frame was not a DNS datagram.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkipReason {
    NotIpv4,
    Fragmented,
    NotUdp,
    NotDnsPort,
    MalformedFrame,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PcapStats {
    pub records: u64,
    pub dns_messages: u64,
    pub skipped_not_ipv4: u64,
    pub skipped_fragmented: u64,
    pub skipped_not_udp: u64,
    pub skipped_not_dns_port: u64,
    pub skipped_malformed: u64,
}

impl PcapStats {
    fn count_skip(&mut self, reason: SkipReason) {
        match reason {
            SkipReason::NotIpv4 => self.skipped_not_ipv4 += 1,
            SkipReason::Fragmented => self.skipped_fragmented += 1,
            SkipReason::NotUdp => self.skipped_not_udp += 1,
            SkipReason::NotDnsPort => self.skipped_not_dns_port += 1,
            SkipReason::MalformedFrame => self.skipped_malformed += 1,
        }
    }

    pub fn skipped_total(&self) -> u64 {
        self.records - self.dns_messages
    }
}

impl fmt::Display for PcapStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} records, {} dns; skipped: {} not ipv4, {} fragmented, {} not udp, {} other port, {} malformed",
            self.records,
            self.dns_messages,
            self.skipped_not_ipv4,
            self.skipped_fragmented,
            self.skipped_not_udp,
            self.skipped_not_dns_port,
            self.skipped_malformed,
        )
    }
}

fn read_exact_or_eof<R: Read>(reader: &mut R, buf: &mut [u8]) -> io::Result<bool> {
    let mut filled = 0;
    while filled < buf.len() {
        match reader.read(&mut buf[filled..]) {
            Ok(0) if filled == 0 => return Ok(false),
            Ok(0) => return Err(io::ErrorKind::UnexpectedEof.into()),
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(true)
}

pub struct PcapReader<R: Read> {
    inner: R,
    swapped: bool,
}

impl<R: Read> PcapReader<R> {
    pub fn new(mut inner: R) -> Result<Self, PcapError> {
        let mut header = [0u8; 24];
        if !read_exact_or_eof(&mut inner, &mut header).map_err(|_| PcapError::TruncatedRecord)? {
            return Err(PcapError::TruncatedRecord);
        }
        let magic = u32::from_le_bytes(header[0..4].try_into().unwrap());
        let swapped = match magic {
            PCAP_MAGIC => false,
            PCAP_MAGIC_SWAPPED => true,
            PCAPNG_MAGIC => return Err(PcapError::Pcapng),
            other => return Err(PcapError::BadMagic(other)),
        };
        let field = |bytes: [u8; 4]| {
            if swapped {
                u32::from_be_bytes(bytes)
            } else {
                u32::from_le_bytes(bytes)
            }
        };
        let linktype = field(header[20..24].try_into().unwrap());
        if linktype != LINKTYPE_ETHERNET {
            return Err(PcapError::UnsupportedLinkType(linktype));
        }
        Ok(PcapReader { inner, swapped })
    }

    fn field(&self, bytes: [u8; 4]) -> u32 {
        if self.swapped {
            u32::from_be_bytes(bytes)
        } else {
            u32::from_le_bytes(bytes)
        }
    }

    /// Next record, or `None` at a clean end of file. A file ending inside
    /// a record header or body is an error: the capture was cut off.
    pub fn next_record(&mut self) -> Result<Option<PcapRecord>, PcapError> {
        let mut header = [0u8; 16];
        match read_exact_or_eof(&mut self.inner, &mut header) {
            Ok(false) => return Ok(None),
            Ok(true) => {}
            Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => {
                return Err(PcapError::TruncatedRecord)
            }
            Err(e) => return Err(e.into()),
        }
        let ts_sec = self.field(header[0..4].try_into().unwrap());
        let ts_usec = self.field(header[4..8].try_into().unwrap());
        let incl_len = self.field(header[8..12].try_into().unwrap());
        if incl_len > MAX_RECORD_BYTES {
            return Err(PcapError::RecordTooLarge(incl_len));
        }
        let mut data = vec![0u8; incl_len as usize];
        self.inner.read_exact(&mut data).map_err(|e| {
            if e.kind() == io::ErrorKind::UnexpectedEof {
                PcapError::TruncatedRecord
            } else {
                PcapError::Io(e)
            }
        })?;
        Ok(Some(PcapRecord { ts_sec, ts_usec, data }))
    }
}

/// Walks one Ethernet frame down to its DNS-over-UDP payload. Port 53 on
/// either side qualifies. The UDP length field bounds the payload, so
/// Ethernet trailer padding never leaks into the message bytes.
pub fn extract_dns_payload(frame: &[u8]) -> Result<&[u8], SkipReason> {
    let ethertype = frame.get(12..14).ok_or(SkipReason::MalformedFrame)?;
    if ethertype != [0x08, 0x00] {
        return Err(SkipReason::NotIpv4);
    }
    let ip = &frame[14..];
    let vihl = *ip.first().ok_or(SkipReason::MalformedFrame)?;
    if vihl >> 4 != 4 {
        return Err(SkipReason::NotIpv4);
    }
    let ihl = usize::from(vihl & 0x0F) * 4;
    if ihl < 20 || ip.len() < ihl {
        return Err(SkipReason::MalformedFrame);
    }
    // More-fragments bit or a nonzero offset: reassembly is out of scope.
    let frag = u16::from_be_bytes([ip[6], ip[7]]);
    if frag & 0x3FFF != 0 {
        return Err(SkipReason::Fragmented);
    }
    if ip[9] != 17 {
        return Err(SkipReason::NotUdp);
    }
    let udp = &ip[ihl..];
    if udp.len() < 8 {
        return Err(SkipReason::MalformedFrame);
    }
    let src_port = u16::from_be_bytes([udp[0], udp[1]]);
    let dst_port = u16::from_be_bytes([udp[2], udp[3]]);
    if src_port != 53 && dst_port != 53 {
        return Err(SkipReason::NotDnsPort);
    }
    let udp_len = usize::from(u16::from_be_bytes([udp[4], udp[5]]));
    if udp_len < 8 || udp.len() < udp_len {
        return Err(SkipReason::MalformedFrame);
    }
    Ok(&udp[8..udp_len])
}

/// Streams the DNS messages out of a capture, counting everything else.
pub struct DnsPcapReader<R: Read> {
    reader: PcapReader<R>,
    stats: PcapStats,
}

impl<R: Read> DnsPcapReader<R> {
    pub fn new(inner: R) -> Result<Self, PcapError> {
        Ok(DnsPcapReader {
            reader: PcapReader::new(inner)?,
            stats: PcapStats::default(),
        })
    }

    pub fn stats(&self) -> &PcapStats {
        &self.stats
    }

    pub fn next_message(&mut self) -> Result<Option<DnsMessage>, PcapError> {
        while let Some(record) = self.reader.next_record()? {
            self.stats.records += 1;
            match extract_dns_payload(&record.data) {
                Ok(payload) => match parse_message(payload) {
                    Ok(msg) => {
                        self.stats.dns_messages += 1;
                        return Ok(Some(msg));
                    }
                    // Garbage on port 53 is still garbage.
                    Err(_) => self.stats.skipped_malformed += 1,
                },
                Err(reason) => self.stats.count_skip(reason),
            }
        }
        Ok(None)
    }
}

fn ipv4_checksum(header: &[u8]) -> u16 {
    let mut sum: u32 = 0;
    for pair in header.chunks(2) {
        let word = u16::from_be_bytes([pair[0], *pair.get(1).unwrap_or(&0)]);
        sum += u32::from(word);
    }
    while sum > 0xFFFF {
        sum = (sum & 0xFFFF) + (sum >> 16);
    }
    !(sum as u16)
}

/// Writes classic little-endian pcap with synthetic Ethernet/IPv4/UDP
/// framing around each payload. MAC addresses are fixed locally
/// administered ones; the UDP checksum is left zero (legal for IPv4).
pub struct PcapWriter<W: Write> {
    inner: W,
}

impl<W: Write> PcapWriter<W> {
    pub fn new(mut inner: W) -> io::Result<Self> {
        inner.write_all(&PCAP_MAGIC.to_le_bytes())?;
        inner.write_all(&2u16.to_le_bytes())?; // version major
        inner.write_all(&4u16.to_le_bytes())?; // version minor
        inner.write_all(&0i32.to_le_bytes())?; // thiszone
        inner.write_all(&0u32.to_le_bytes())?; // sigfigs
        inner.write_all(&65535u32.to_le_bytes())?; // snaplen
        inner.write_all(&LINKTYPE_ETHERNET.to_le_bytes())?;
        Ok(PcapWriter { inner })
    }

    #[allow(clippy::too_many_arguments)]
    pub fn write_udp_frame(
        &mut self,
        ts_sec: u32,
        ts_usec: u32,
        src_ip: [u8; 4],
        dst_ip: [u8; 4],
        src_port: u16,
        dst_port: u16,
        payload: &[u8],
    ) -> io::Result<()> {
        if payload.len() > 65507 {
            return Err(io::Error::new(
                io::ErrorKind::InvalidInput,
                "payload exceeds a single UDP datagram",
            ));
        }
        let mut frame = Vec::with_capacity(42 + payload.len());
        frame.extend_from_slice(&[0x02, 0, 0, 0, 0, 0x02]); // dst MAC
        frame.extend_from_slice(&[0x02, 0, 0, 0, 0, 0x01]); // src MAC
        frame.extend_from_slice(&[0x08, 0x00]); // IPv4

        let ip_start = frame.len();
        let total_len = (20 + 8 + payload.len()) as u16;
        frame.push(0x45); // version 4, ihl 5
        frame.push(0x00);
        frame.extend_from_slice(&total_len.to_be_bytes());
        frame.extend_from_slice(&[0, 0, 0, 0]); // id, flags, offset
        frame.push(64); // ttl
        frame.push(17); // udp
        frame.extend_from_slice(&[0, 0]); // checksum placeholder
        frame.extend_from_slice(&src_ip);
        frame.extend_from_slice(&dst_ip);
        let checksum = ipv4_checksum(&frame[ip_start..ip_start + 20]);
        frame[ip_start + 10..ip_start + 12].copy_from_slice(&checksum.to_be_bytes());

        frame.extend_from_slice(&src_port.to_be_bytes());
        frame.extend_from_slice(&dst_port.to_be_bytes());
        frame.extend_from_slice(&((8 + payload.len()) as u16).to_be_bytes());
        frame.extend_from_slice(&[0, 0]); // udp checksum: none
        frame.extend_from_slice(payload);

        self.inner.write_all(&ts_sec.to_le_bytes())?;
        self.inner.write_all(&ts_usec.to_le_bytes())?;
        self.inner.write_all(&(frame.len() as u32).to_le_bytes())?;
        self.inner.write_all(&(frame.len() as u32).to_le_bytes())?;
        self.inner.write_all(&frame)
    }

    pub fn into_inner(self) -> W {
        self.inner
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dns_wire::encode_query;

    const CLIENT: [u8; 4] = [10, 0, 0, 2];
    const SERVER: [u8; 4] = [10, 0, 0, 53];

    fn capture_with(payloads: &[(&[u8], u16)]) -> Vec<u8> {
        let mut writer = PcapWriter::new(Vec::new()).unwrap();
        for (i, (payload, dst_port)) in payloads.iter().enumerate() {
            writer
                .write_udp_frame(
                    1_000_000_000,
                    (i as u32) * 10_000,
                    CLIENT,
                    SERVER,
                    40000 + i as u16,
                    *dst_port,
                    payload,
                )
                .unwrap();
        }
        writer.into_inner()
    }

    #[test]
    fn writer_reader_roundtrip() {
        let q1 = encode_query("www.example.com", 1).unwrap();
        let q2 = encode_query("mail.example.org", 28).unwrap();
        let bytes = capture_with(&[(&q1, 53), (&q2, 53), (b"not dns", 9999)]);

        let mut reader = DnsPcapReader::new(bytes.as_slice()).unwrap();
        let mut names = Vec::new();
        while let Some(msg) = reader.next_message().unwrap() {
            names.push(msg.questions[0].name.to_string());
        }
        assert_eq!(names, vec!["www.example.com", "mail.example.org"]);
        let stats = reader.stats();
        assert_eq!(stats.records, 3);
        assert_eq!(stats.dns_messages, 2);
        assert_eq!(stats.skipped_not_dns_port, 1);
        assert_eq!(stats.skipped_total(), 1);
    }

    #[test]
    fn garbage_on_port_53_counts_as_malformed() {
        let bytes = capture_with(&[(b"\xff\xff", 53)]);
        let mut reader = DnsPcapReader::new(bytes.as_slice()).unwrap();
        assert!(reader.next_message().unwrap().is_none());
        assert_eq!(reader.stats().skipped_malformed, 1);
    }

    /// Hand-built frame so field-level cases are independent of the writer.
    fn frame(ethertype: [u8; 2], vihl: u8, frag: u16, proto: u8, ports: (u16, u16), payload: &[u8]) -> Vec<u8> {
        let mut f = vec![0u8; 12];
        f.extend_from_slice(&ethertype);
        f.push(vihl);
        f.push(0);
        f.extend_from_slice(&((20 + 8 + payload.len()) as u16).to_be_bytes());
        f.extend_from_slice(&[0, 0]);
        f.extend_from_slice(&frag.to_be_bytes());
        f.push(64);
        f.push(proto);
        f.extend_from_slice(&[0, 0]);
        f.extend_from_slice(&CLIENT);
        f.extend_from_slice(&SERVER);
        f.extend_from_slice(&ports.0.to_be_bytes());
        f.extend_from_slice(&ports.1.to_be_bytes());
        f.extend_from_slice(&((8 + payload.len()) as u16).to_be_bytes());
        f.extend_from_slice(&[0, 0]);
        f.extend_from_slice(payload);
        f
    }

    #[test]
    fn extraction_classifies_frames() {
        let ok = frame([0x08, 0x00], 0x45, 0, 17, (40000, 53), b"abc");
        assert_eq!(extract_dns_payload(&ok).unwrap(), b"abc");

        let v6 = frame([0x86, 0xDD], 0x45, 0, 17, (40000, 53), b"abc");
        assert_eq!(extract_dns_payload(&v6), Err(SkipReason::NotIpv4));

        let frag = frame([0x08, 0x00], 0x45, 0x2000, 17, (40000, 53), b"abc");
        assert_eq!(extract_dns_payload(&frag), Err(SkipReason::Fragmented));
        let offset = frame([0x08, 0x00], 0x45, 0x0003, 17, (40000, 53), b"abc");
        assert_eq!(extract_dns_payload(&offset), Err(SkipReason::Fragmented));

        let tcp = frame([0x08, 0x00], 0x45, 0, 6, (40000, 53), b"abc");
        assert_eq!(extract_dns_payload(&tcp), Err(SkipReason::NotUdp));

        let other = frame([0x08, 0x00], 0x45, 0, 17, (40000, 9999), b"abc");
        assert_eq!(extract_dns_payload(&other), Err(SkipReason::NotDnsPort));

        let reply = frame([0x08, 0x00], 0x45, 0, 17, (53, 40000), b"abc");
        assert_eq!(extract_dns_payload(&reply).unwrap(), b"abc");

        assert_eq!(extract_dns_payload(&[0u8; 10]), Err(SkipReason::MalformedFrame));
        let bad_ihl = frame([0x08, 0x00], 0x42, 0, 17, (40000, 53), b"abc");
        assert_eq!(extract_dns_payload(&bad_ihl), Err(SkipReason::MalformedFrame));
    }

    #[test]
    fn ethernet_padding_stays_out_of_the_payload() {
        let mut padded = frame([0x08, 0x00], 0x45, 0, 17, (40000, 53), b"abc");
        padded.extend_from_slice(&[0xEE; 7]);
        assert_eq!(extract_dns_payload(&padded).unwrap(), b"abc");
    }

    #[test]
    fn swapped_byte_order_reads_back() {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&PCAP_MAGIC.to_be_bytes());
        bytes.extend_from_slice(&2u16.to_be_bytes());
        bytes.extend_from_slice(&4u16.to_be_bytes());
        bytes.extend_from_slice(&0u32.to_be_bytes());
        bytes.extend_from_slice(&0u32.to_be_bytes());
        bytes.extend_from_slice(&65535u32.to_be_bytes());
        bytes.extend_from_slice(&1u32.to_be_bytes());
        bytes.extend_from_slice(&7u32.to_be_bytes()); // ts_sec
        bytes.extend_from_slice(&8u32.to_be_bytes()); // ts_usec
        bytes.extend_from_slice(&3u32.to_be_bytes()); // incl_len
        bytes.extend_from_slice(&3u32.to_be_bytes()); // orig_len
        bytes.extend_from_slice(b"xyz");

        let mut reader = PcapReader::new(bytes.as_slice()).unwrap();
        let record = reader.next_record().unwrap().unwrap();
        assert_eq!(record.ts_sec, 7);
        assert_eq!(record.ts_usec, 8);
        assert_eq!(record.data, b"xyz");
        assert!(reader.next_record().unwrap().is_none());
    }

    #[test]
    fn container_errors_are_specific() {
        let pcapng = [0x0A, 0x0D, 0x0D, 0x0A, 0, 0, 0, 28];
        let mut full = pcapng.to_vec();
        full.resize(24, 0);
        assert!(matches!(
            PcapReader::new(full.as_slice()),
            Err(PcapError::Pcapng)
        ));

        let mut garbage = vec![0xFFu8; 24];
        garbage[0] = 0x13;
        assert!(matches!(
            PcapReader::new(garbage.as_slice()),
            Err(PcapError::BadMagic(_))
        ));

        let mut wrong_link = Vec::new();
        let mut writer = PcapWriter::new(&mut wrong_link).unwrap();
        writer.write_udp_frame(0, 0, CLIENT, SERVER, 1, 53, b"x").unwrap();
        wrong_link[20] = 101; // linktype raw IP
        assert!(matches!(
            PcapReader::new(wrong_link.as_slice()),
            Err(PcapError::UnsupportedLinkType(101))
        ));
    }

    #[test]
    fn truncation_is_fatal() {
        let q = encode_query("www.example.com", 1).unwrap();
        let bytes = capture_with(&[(&q, 53)]);

        // Cut inside the record body.
        let mut reader = PcapReader::new(&bytes[..bytes.len() - 5]).unwrap();
        assert!(matches!(
            reader.next_record(),
            Err(PcapError::TruncatedRecord)
        ));

        // Cut inside the record header.
        let mut reader = PcapReader::new(&bytes[..24 + 7]).unwrap();
        assert!(matches!(
            reader.next_record(),
            Err(PcapError::TruncatedRecord)
        ));

        // Header alone is a valid empty capture.
        let mut reader = PcapReader::new(&bytes[..24]).unwrap();
        assert!(reader.next_record().unwrap().is_none());
    }

    #[test]
    fn implausible_record_length_is_rejected() {
        let mut bytes = capture_with(&[]);
        bytes.extend_from_slice(&0u32.to_le_bytes());
        bytes.extend_from_slice(&0u32.to_le_bytes());
        bytes.extend_from_slice(&(MAX_RECORD_BYTES + 1).to_le_bytes());
        bytes.extend_from_slice(&0u32.to_le_bytes());
        let mut reader = PcapReader::new(bytes.as_slice()).unwrap();
        assert!(matches!(
            reader.next_record(),
            Err(PcapError::RecordTooLarge(_))
        ));
    }

    #[test]
    fn writer_bounds_payload_size() {
        let mut writer = PcapWriter::new(Vec::new()).unwrap();
        let too_big = vec![0u8; 65508];
        assert!(writer
            .write_udp_frame(0, 0, CLIENT, SERVER, 1, 53, &too_big)
            .is_err());
    }
}
