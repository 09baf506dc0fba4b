//! Reading ranked domain lists.
//!
//! The accepted shape is one domain per line, either bare or as
//! `rank,domain`, with '#' comments and blank lines ignored. List files in
//! the wild are long and mildly dirty, so a bad line is reported and
//! skipped, never fatal: the iterator yields per-line results and the
//! caller decides how loudly to complain.

use std::fmt;
use std::io::{BufRead, BufReader, Lines, Read};

use crate::dns_wire::DomainName;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainListEntry {
    pub rank: Option<u64>,
    pub domain: DomainName,
}

/// One unusable line: its number and what was wrong with it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineIssue {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for LineIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for LineIssue {}

pub struct DomainListReader<R: Read> {
    lines: Lines<BufReader<R>>,
    line_no: usize,
}

impl<R: Read> DomainListReader<R> {
    pub fn new(reader: R) -> Self {
        DomainListReader {
            lines: BufReader::new(reader).lines(),
            line_no: 0,
        }
    }
}

fn parse_line(line: &str, line_no: usize) -> Result<Option<DomainListEntry>, LineIssue> {
    let issue = |message: String| LineIssue { line: line_no, message };
    let trimmed = line.trim();
    if trimmed.is_empty() || trimmed.starts_with('#') {
        return Ok(None);
    }
    let (rank, name) = match trimmed.split_once(',') {
        Some((rank_str, name)) => {
            let rank = rank_str
                .trim()
                .parse::<u64>()
                .map_err(|_| issue(format!("bad rank {:?}", rank_str.trim())))?;
            (Some(rank), name.trim())
        }
        None => (None, trimmed),
    };
    // A trailing dot is the fully qualified spelling of the same name.
    let name = name.strip_suffix('.').unwrap_or(name);
    let domain = DomainName::from_presentation(name)
        .map_err(|e| issue(format!("bad domain {name:?}: {e}")))?;
    Ok(Some(DomainListEntry { rank, domain }))
}

impl<R: Read> Iterator for DomainListReader<R> {
    type Item = Result<DomainListEntry, LineIssue>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.line_no += 1;
            let line = match self.lines.next()? {
                Ok(line) => line,
                Err(e) => {
                    return Some(Err(LineIssue {
                        line: self.line_no,
                        message: format!("read error: {e}"),
                    }))
                }
            };
            match parse_line(&line, self.line_no) {
                Ok(Some(entry)) => return Some(Ok(entry)),
                Ok(None) => continue,
                Err(issue) => return Some(Err(issue)),
            }
        }
    }
}

/// Collects a whole list, separating good entries from bad lines.
pub fn read_entries<R: Read>(reader: R) -> (Vec<DomainListEntry>, Vec<LineIssue>) {
    let mut entries = Vec::new();
    let mut issues = Vec::new();
    for item in DomainListReader::new(reader) {
        match item {
            Ok(entry) => entries.push(entry),
            Err(issue) => issues.push(issue),
        }
    }
    (entries, issues)
}
