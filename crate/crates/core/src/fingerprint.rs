//! N-gram counting, rank-frequency fingerprints, and decay metrics.
//!
//! A fingerprint is the ranked table of gram frequencies from some corpus:
//! rank 1 is the most frequent gram. Heavy natural-language skew makes the
//! frequencies fall off steeply with rank; uniformly encoded payload makes
//! them fall off barely at all. Everything the detector decides on is a
//! function of this table: the gap between two ranks, the average per-rank
//! drop, the slope of the log-log decay, and rank agreement with a
//! reference table.
//!
//! Ties are broken lexicographically so equal-count grams always rank the
//! same way; ordering is decided on integer counts, never on derived
//! floats.

use std::cmp::Reverse;
use std::collections::HashMap;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};

use thiserror::Error;

use crate::extraction::{is_alphabet_char, NormalizedText};

/// First line of the fingerprint file format.
pub const FINGERPRINT_MAGIC: &str = "dnszipf-fingerprint v1";

#[derive(Debug, Error)]
pub enum FingerprintError {
    #[error("gram order must be 1, 2, or 3, got {0}")]
    UnsupportedOrder(u8),
    #[error("gram order mismatch: {0} vs {1}")]
    OrderMismatch(u8, u8),
    #[error("cannot build a fingerprint from an empty sample")]
    EmptySample,
    #[error("invalid gram {gram:?}: {reason}")]
    InvalidGram { gram: String, reason: &'static str },
    #[error("gram counts exceed the declared sample total")]
    CountsExceedTotal,
    #[error("rank {rank} out of range 1..={len}")]
    RankOutOfRange { rank: usize, len: usize },
    #[error("rank range {lo}..{hi} is not ascending")]
    BadRankOrder { lo: usize, hi: usize },
    #[error("rank correlation undefined: ranks have no variance")]
    DegenerateCorrelation,
    #[error("fingerprint file line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn format_err(line: usize, message: impl Into<String>) -> FingerprintError {
    FingerprintError::Format { line, message: message.into() }
}

/// Running n-gram tally. Grams never straddle text boundaries: each text is
/// windowed on its own, so "ab" + "cd" yields no "bc".
#[derive(Debug, Clone)]
pub struct NGramCounts {
    n: u8,
    counts: HashMap<String, u64>,
    total: u64,
}

impl NGramCounts {
    pub fn new(n: u8) -> Result<Self, FingerprintError> {
        if !(1..=3).contains(&n) {
            return Err(FingerprintError::UnsupportedOrder(n));
        }
        Ok(NGramCounts { n, counts: HashMap::new(), total: 0 })
    }

    pub fn n(&self) -> u8 {
        self.n
    }

    /// Grams counted, multiplicity included.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn get(&self, gram: &str) -> u64 {
        self.counts.get(gram).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.counts.iter().map(|(g, &c)| (g.as_str(), c))
    }

    /// The alphabet is single-byte, so windows over bytes are windows over
    /// characters. A text shorter than n contributes nothing.
    pub fn add_text(&mut self, text: &NormalizedText) {
        let n = self.n as usize;
        for window in text.as_str().as_bytes().windows(n) {
            let gram = std::str::from_utf8(window).expect("normalized text is ascii");
            match self.counts.get_mut(gram) {
                Some(c) => *c += 1,
                None => {
                    self.counts.insert(gram.to_string(), 1);
                }
            }
            self.total += 1;
        }
    }

    /// Adds another tally of the same order into this one.
    pub fn merge(&mut self, other: &NGramCounts) -> Result<(), FingerprintError> {
        if self.n != other.n {
            return Err(FingerprintError::OrderMismatch(self.n, other.n));
        }
        for (gram, count) in &other.counts {
            *self.counts.entry(gram.clone()).or_insert(0) += count;
        }
        self.total += other.total;
        Ok(())
    }
}

pub fn count_ngrams<T: std::borrow::Borrow<NormalizedText>>(
    texts: impl IntoIterator<Item = T>,
    n: u8,
) -> Result<NGramCounts, FingerprintError> {
    let mut counts = NGramCounts::new(n)?;
    for text in texts {
        counts.add_text(text.borrow());
    }
    Ok(counts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FingerprintEntry {
    pub gram: String,
    pub count: u64,
    pub frequency: f64,
}

/// Ranked gram table. Entries are sorted by descending count, ties by gram,
/// and `frequency` is `count / sample_total`. `sample_total` can exceed the
/// sum of entry counts when the table keeps only the head of a larger
/// sample; frequencies stay relative to the full sample in that case.
#[derive(Debug, Clone, PartialEq)]
pub struct Fingerprint {
    n: u8,
    sample_total: u64,
    entries: Vec<FingerprintEntry>,
}

impl Fingerprint {
    pub fn build(counts: &NGramCounts) -> Result<Self, FingerprintError> {
        if counts.total == 0 {
            return Err(FingerprintError::EmptySample);
        }
        let mut rows: Vec<(&String, u64)> = counts.counts.iter().map(|(g, &c)| (g, c)).collect();
        rows.sort_by(|a, b| (Reverse(a.1), a.0).cmp(&(Reverse(b.1), b.0)));
        let total = counts.total;
        let entries = rows
            .into_iter()
            .map(|(gram, count)| FingerprintEntry {
                gram: gram.clone(),
                count,
                frequency: count as f64 / total as f64,
            })
            .collect();
        Ok(Fingerprint { n: counts.n, sample_total: total, entries })
    }

    /// Builds from explicit rows, for tables that arrive as data rather
    /// than from counting (published reference tables, loaded files). Rows
    /// may come in any order; canonical rank order is imposed here. The
    /// row counts may sum to less than `sample_total` (a truncated table)
    /// but never more.
    pub fn from_rows(
        n: u8,
        rows: &[(&str, u64)],
        sample_total: u64,
    ) -> Result<Self, FingerprintError> {
        if !(1..=3).contains(&n) {
            return Err(FingerprintError::UnsupportedOrder(n));
        }
        if sample_total == 0 || rows.is_empty() {
            return Err(FingerprintError::EmptySample);
        }
        let mut seen: HashMap<&str, ()> = HashMap::with_capacity(rows.len());
        let mut sum: u64 = 0;
        for &(gram, count) in rows {
            validate_gram(gram, n).map_err(|reason| FingerprintError::InvalidGram {
                gram: gram.to_string(),
                reason,
            })?;
            if count == 0 {
                return Err(FingerprintError::InvalidGram {
                    gram: gram.to_string(),
                    reason: "zero count",
                });
            }
            if seen.insert(gram, ()).is_some() {
                return Err(FingerprintError::InvalidGram {
                    gram: gram.to_string(),
                    reason: "duplicate gram",
                });
            }
            sum = sum
                .checked_add(count)
                .ok_or(FingerprintError::CountsExceedTotal)?;
        }
        if sum > sample_total {
            return Err(FingerprintError::CountsExceedTotal);
        }
        let mut rows: Vec<(&str, u64)> = rows.to_vec();
        rows.sort_by(|a, b| (Reverse(a.1), a.0).cmp(&(Reverse(b.1), b.0)));
        let entries = rows
            .into_iter()
            .map(|(gram, count)| FingerprintEntry {
                gram: gram.to_string(),
                count,
                frequency: count as f64 / sample_total as f64,
            })
            .collect();
        Ok(Fingerprint { n, sample_total, entries })
    }

    pub fn n(&self) -> u8 {
        self.n
    }

    pub fn sample_total(&self) -> u64 {
        self.sample_total
    }

    /// Distinct grams in the table.
    pub fn pool_size(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[FingerprintEntry] {
        &self.entries
    }

    fn entry_at(&self, rank: usize) -> Result<&FingerprintEntry, FingerprintError> {
        if rank == 0 || rank > self.entries.len() {
            return Err(FingerprintError::RankOutOfRange {
                rank,
                len: self.entries.len(),
            });
        }
        Ok(&self.entries[rank - 1])
    }

    /// Ranks are 1-based throughout.
    pub fn frequency_at_rank(&self, rank: usize) -> Result<f64, FingerprintError> {
        Ok(self.entry_at(rank)?.frequency)
    }

    pub fn gram_at_rank(&self, rank: usize) -> Result<&str, FingerprintError> {
        Ok(self.entry_at(rank)?.gram.as_str())
    }

    pub fn rank_of(&self, gram: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.gram == gram).map(|i| i + 1)
    }
}

fn validate_gram(gram: &str, n: u8) -> Result<(), &'static str> {
    if gram.len() != n as usize {
        return Err("length does not match gram order");
    }
    if !gram.chars().all(is_alphabet_char) {
        return Err("character outside the counting alphabet");
    }
    Ok(())
}

/// Frequency drop between two ranks: `f(i) - f(j)` with `i < j`. Near zero
/// means the head of the distribution is flat.
pub fn top_gap(fp: &Fingerprint, i: usize, j: usize) -> Result<f64, FingerprintError> {
    if i >= j {
        return Err(FingerprintError::BadRankOrder { lo: i, hi: j });
    }
    Ok(fp.frequency_at_rank(i)? - fp.frequency_at_rank(j)?)
}

/// Average per-rank frequency drop across the top k ranks:
/// `(f(1) - f(k)) / (k - 1)`.
pub fn mean_rank_delta(fp: &Fingerprint, k: usize) -> Result<f64, FingerprintError> {
    if k < 2 {
        return Err(FingerprintError::BadRankOrder { lo: 1, hi: k });
    }
    Ok((fp.frequency_at_rank(1)? - fp.frequency_at_rank(k)?) / (k - 1) as f64)
}

/// Least-squares slope of `-ln f(r)` against `ln r` over ranks `lo..=hi`.
/// A perfect power law `f ~ r^-s` yields exactly `s`; a flat distribution
/// yields about zero. The fit is unweighted.
pub fn zipf_exponent_range(
    fp: &Fingerprint,
    lo: usize,
    hi: usize,
) -> Result<f64, FingerprintError> {
    if lo >= hi {
        return Err(FingerprintError::BadRankOrder { lo, hi });
    }
    let mut xs = Vec::with_capacity(hi - lo + 1);
    let mut ys = Vec::with_capacity(hi - lo + 1);
    for rank in lo..=hi {
        let f = fp.frequency_at_rank(rank)?;
        if f <= 0.0 {
            return Err(FingerprintError::RankOutOfRange { rank, len: fp.pool_size() });
        }
        xs.push((rank as f64).ln());
        ys.push(-f.ln());
    }
    let n = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    Ok(sxy / sxx)
}

/// Decay slope over the top k ranks.
pub fn zipf_exponent(fp: &Fingerprint, k: usize) -> Result<f64, FingerprintError> {
    zipf_exponent_range(fp, 1, k)
}

/// Spearman rank correlation over the union of both tables' top-k grams.
/// A gram missing from one side's top k takes rank `k + 1` there, so two
/// tables that agree on their heads score near 1 even if the tails differ,
/// and an alphabet with no overlap scores negative.
pub fn rank_correlation(
    a: &Fingerprint,
    b: &Fingerprint,
    k: usize,
) -> Result<f64, FingerprintError> {
    if a.n != b.n {
        return Err(FingerprintError::OrderMismatch(a.n, b.n));
    }
    let top = |fp: &Fingerprint| -> HashMap<String, usize> {
        fp.entries
            .iter()
            .take(k)
            .enumerate()
            .map(|(i, e)| (e.gram.clone(), i + 1))
            .collect()
    };
    let ra = top(a);
    let rb = top(b);
    let mut union: Vec<&String> = ra.keys().chain(rb.keys()).collect();
    union.sort();
    union.dedup();

    let absent = k + 1;
    let xs: Vec<f64> = union.iter().map(|g| *ra.get(*g).unwrap_or(&absent) as f64).collect();
    let ys: Vec<f64> = union.iter().map(|g| *rb.get(*g).unwrap_or(&absent) as f64).collect();
    let n = xs.len() as f64;
    if union.len() < 2 {
        return Err(FingerprintError::DegenerateCorrelation);
    }
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    let syy: f64 = ys.iter().map(|y| (y - ybar) * (y - ybar)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return Err(FingerprintError::DegenerateCorrelation);
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// The three decay numbers for one table over its top k ranks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayMetrics {
    pub top_gap: f64,
    pub mean_rank_delta: f64,
    pub zipf_exponent: f64,
    pub k: usize,
}

pub fn decay_metrics(fp: &Fingerprint, k: usize) -> Result<DecayMetrics, FingerprintError> {
    Ok(DecayMetrics {
        top_gap: top_gap(fp, 1, k)?,
        mean_rank_delta: mean_rank_delta(fp, k)?,
        zipf_exponent: zipf_exponent(fp, k)?,
        k,
    })
}

/// Writes the fingerprint in its text format: a magic line, a header with
/// gram order and sample total, then one `gram\tcount` row per rank.
/// Counts are stored rather than frequencies so a round trip is exact.
pub fn save_fingerprint<W: Write>(fp: &Fingerprint, writer: W) -> io::Result<()> {
    let mut w = BufWriter::new(writer);
    writeln!(w, "{FINGERPRINT_MAGIC}")?;
    writeln!(w, "n={} total={}", fp.n, fp.sample_total)?;
    for entry in &fp.entries {
        writeln!(w, "{}\t{}", entry.gram, entry.count)?;
    }
    w.flush()
}

/// Reads the format written by [`save_fingerprint`]. Rows must already be
/// in canonical rank order. Counts summing to less than the header total
/// are accepted, because published tables often list only the top of the
/// distribution; counts summing to more are an error.
pub fn load_fingerprint<R: Read>(reader: R) -> Result<Fingerprint, FingerprintError> {
    let mut lines = BufReader::new(reader).lines();
    let magic = lines
        .next()
        .ok_or_else(|| format_err(1, "empty file"))??;
    if magic != FINGERPRINT_MAGIC {
        return Err(format_err(1, format!("expected '{FINGERPRINT_MAGIC}'")));
    }
    let header = lines
        .next()
        .ok_or_else(|| format_err(2, "missing header"))??;
    let (n_part, total_part) = header
        .split_once(' ')
        .ok_or_else(|| format_err(2, "expected 'n=<order> total=<count>'"))?;
    let n: u8 = n_part
        .strip_prefix("n=")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| format_err(2, "bad gram order"))?;
    if !(1..=3).contains(&n) {
        return Err(format_err(2, format!("gram order must be 1, 2, or 3, got {n}")));
    }
    let total: u64 = total_part
        .strip_prefix("total=")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| format_err(2, "bad sample total"))?;
    if total == 0 {
        return Err(format_err(2, "sample total is zero"));
    }

    let mut entries: Vec<FingerprintEntry> = Vec::new();
    let mut sum: u64 = 0;
    for (index, line) in lines.enumerate() {
        let line_no = index + 3;
        let line = line?;
        let (gram, count_str) = line
            .split_once('\t')
            .ok_or_else(|| format_err(line_no, "expected 'gram<TAB>count'"))?;
        validate_gram(gram, n).map_err(|reason| format_err(line_no, reason))?;
        let count: u64 = count_str
            .parse()
            .map_err(|_| format_err(line_no, "bad count"))?;
        if count == 0 {
            return Err(format_err(line_no, "zero count"));
        }
        if let Some(prev) = entries.last() {
            let in_order =
                count < prev.count || (count == prev.count && gram > prev.gram.as_str());
            if !in_order {
                return Err(format_err(line_no, "rows not in rank order"));
            }
        }
        sum = sum
            .checked_add(count)
            .ok_or_else(|| format_err(line_no, "counts overflow"))?;
        if sum > total {
            return Err(format_err(line_no, "counts exceed sample total"));
        }
        entries.push(FingerprintEntry {
            gram: gram.to_string(),
            count,
            frequency: count as f64 / total as f64,
        });
    }
    if entries.is_empty() {
        return Err(format_err(3, "no gram rows"));
    }
    Ok(Fingerprint { n, sample_total: total, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extraction::normalize;

    fn fp_from(rows: &[(&str, u64)], total: u64) -> Fingerprint {
        Fingerprint::from_rows(1, rows, total).unwrap()
    }

    #[test]
    fn counting_windows_within_texts_only() {
        let texts = [normalize("abab"), normalize("cd"), normalize("x")];
        let uni = count_ngrams(&texts, 1).unwrap();
        assert_eq!(uni.total(), 7);
        assert_eq!(uni.get("a"), 2);
        assert_eq!(uni.get("x"), 1);
        let bi = count_ngrams(&texts, 2).unwrap();
        assert_eq!(bi.total(), 4);
        assert_eq!(bi.get("ab"), 2);
        assert_eq!(bi.get("ba"), 1);
        assert_eq!(bi.get("cd"), 1);
        assert_eq!(bi.get("bc"), 0, "grams must not straddle texts");
        let tri = count_ngrams(&texts, 3).unwrap();
        assert_eq!(tri.total(), 2);
        assert_eq!(tri.get("aba"), 1);
    }

    #[test]
    fn order_must_be_small() {
        assert!(matches!(NGramCounts::new(0), Err(FingerprintError::UnsupportedOrder(0))));
        assert!(matches!(NGramCounts::new(4), Err(FingerprintError::UnsupportedOrder(4))));
    }

    #[test]
    fn merge_adds_and_checks_order() {
        let mut a = count_ngrams(&[normalize("aab")], 1).unwrap();
        let b = count_ngrams(&[normalize("abc")], 1).unwrap();
        a.merge(&b).unwrap();
        assert_eq!(a.total(), 6);
        assert_eq!(a.get("a"), 3);
        assert_eq!(a.get("c"), 1);
        let bi = NGramCounts::new(2).unwrap();
        assert!(matches!(a.merge(&bi), Err(FingerprintError::OrderMismatch(1, 2))));
    }

    #[test]
    fn ranking_breaks_ties_lexicographically() {
        let counts = count_ngrams(&[normalize("bbaacc"), normalize("dd")], 1).unwrap();
        let fp = Fingerprint::build(&counts).unwrap();
        let grams: Vec<&str> = fp.entries().iter().map(|e| e.gram.as_str()).collect();
        assert_eq!(grams, vec!["a", "b", "c", "d"]);
        assert_eq!(fp.rank_of("c"), Some(3));
        assert_eq!(fp.rank_of("z"), None);
        assert_eq!(fp.gram_at_rank(1).unwrap(), "a");
    }

    #[test]
    fn build_rejects_empty_sample() {
        let counts = NGramCounts::new(1).unwrap();
        assert!(matches!(
            Fingerprint::build(&counts),
            Err(FingerprintError::EmptySample)
        ));
    }

    #[test]
    fn from_rows_validates() {
        assert!(Fingerprint::from_rows(1, &[("a", 3), ("b", 2)], 5).is_ok());
        // Truncated table: counts below total are fine.
        assert!(Fingerprint::from_rows(1, &[("a", 3)], 100).is_ok());
        assert!(matches!(
            Fingerprint::from_rows(1, &[("a", 3), ("b", 3)], 5),
            Err(FingerprintError::CountsExceedTotal)
        ));
        assert!(matches!(
            Fingerprint::from_rows(1, &[("ab", 1)], 5),
            Err(FingerprintError::InvalidGram { .. })
        ));
        assert!(matches!(
            Fingerprint::from_rows(2, &[("a!", 1)], 5),
            Err(FingerprintError::InvalidGram { .. })
        ));
        assert!(matches!(
            Fingerprint::from_rows(1, &[("a", 0)], 5),
            Err(FingerprintError::InvalidGram { .. })
        ));
        assert!(matches!(
            Fingerprint::from_rows(1, &[("a", 1), ("a", 1)], 5),
            Err(FingerprintError::InvalidGram { .. })
        ));
        // Input order is irrelevant; canonical order is imposed.
        let fp = Fingerprint::from_rows(1, &[("b", 1), ("a", 4)], 5).unwrap();
        assert_eq!(fp.gram_at_rank(1).unwrap(), "a");
    }

    #[test]
    fn gap_and_delta_arithmetic() {
        let fp = fp_from(&[("a", 4), ("b", 3), ("c", 2), ("d", 1)], 10);
        assert!((top_gap(&fp, 1, 4).unwrap() - 0.3).abs() < 1e-12);
        assert!((top_gap(&fp, 2, 3).unwrap() - 0.1).abs() < 1e-12);
        assert!((mean_rank_delta(&fp, 4).unwrap() - 0.1).abs() < 1e-12);
        assert!(matches!(
            top_gap(&fp, 3, 3),
            Err(FingerprintError::BadRankOrder { .. })
        ));
        assert!(matches!(
            top_gap(&fp, 1, 5),
            Err(FingerprintError::RankOutOfRange { .. })
        ));
        assert!(matches!(
            mean_rank_delta(&fp, 1),
            Err(FingerprintError::BadRankOrder { .. })
        ));
    }

    #[test]
    fn zipf_slope_recovers_exact_power_law() {
        // f(r) = 0.48 / r is a pure power law with exponent 1.
        let fp = fp_from(&[("a", 12), ("b", 6), ("c", 4), ("d", 3)], 25);
        assert!((zipf_exponent(&fp, 4).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zipf_slope_is_zero_when_flat() {
        let fp = fp_from(&[("a", 5), ("b", 5), ("c", 5), ("d", 5)], 20);
        assert!(zipf_exponent(&fp, 4).unwrap().abs() < 1e-12);
        assert!(top_gap(&fp, 1, 4).unwrap().abs() < 1e-12);
    }

    #[test]
    fn zipf_range_excludes_head() {
        // Head spike, flat tail: the full fit sees decay, the tail fit
        // sees none.
        let fp = fp_from(&[("a", 90), ("b", 2), ("c", 2), ("d", 2), ("e", 2), ("f", 2)], 100);
        assert!(zipf_exponent(&fp, 6).unwrap() > 1.0);
        assert!(zipf_exponent_range(&fp, 2, 6).unwrap().abs() < 1e-12);
        assert!(matches!(
            zipf_exponent_range(&fp, 4, 4),
            Err(FingerprintError::BadRankOrder { .. })
        ));
    }

    #[test]
    fn correlation_identity_and_reversal() {
        let a = fp_from(&[("a", 4), ("b", 3), ("c", 2), ("d", 1)], 10);
        let b = fp_from(&[("a", 1), ("b", 2), ("c", 3), ("d", 4)], 10);
        assert!((rank_correlation(&a, &a, 4).unwrap() - 1.0).abs() < 1e-12);
        assert!((rank_correlation(&a, &b, 4).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn correlation_penalizes_disjoint_heads() {
        let a = fp_from(&[("a", 2), ("b", 1)], 3);
        let b = fp_from(&[("c", 2), ("d", 1)], 3);
        let r = rank_correlation(&a, &b, 2).unwrap();
        assert!(r < 0.0, "disjoint top ranks should anticorrelate, got {r}");
        assert!((-1.0..=1.0).contains(&r));
    }

    #[test]
    fn correlation_degenerate_cases() {
        let a = fp_from(&[("a", 1)], 1);
        assert!(matches!(
            rank_correlation(&a, &a, 1),
            Err(FingerprintError::DegenerateCorrelation)
        ));
        let b = Fingerprint::from_rows(2, &[("aa", 1)], 1).unwrap();
        assert!(matches!(
            rank_correlation(&a, &b, 1),
            Err(FingerprintError::OrderMismatch(1, 2))
        ));
    }

    #[test]
    fn decay_metrics_bundle() {
        let fp = fp_from(&[("a", 12), ("b", 6), ("c", 4), ("d", 3)], 25);
        let m = decay_metrics(&fp, 4).unwrap();
        assert_eq!(m.k, 4);
        assert!((m.top_gap - (12.0 - 3.0) / 25.0).abs() < 1e-12);
        assert!((m.zipf_exponent - 1.0).abs() < 1e-12);
    }

    #[test]
    fn file_roundtrip_is_exact() {
        let counts = count_ngrams(&[normalize("mail.google"), normalize("www.example")], 2).unwrap();
        let fp = Fingerprint::build(&counts).unwrap();
        let mut buf = Vec::new();
        save_fingerprint(&fp, &mut buf).unwrap();
        let loaded = load_fingerprint(buf.as_slice()).unwrap();
        assert_eq!(loaded, fp);
    }

    #[test]
    fn file_format_shape() {
        let fp = fp_from(&[("e", 3), ("a", 2)], 6);
        let mut buf = Vec::new();
        save_fingerprint(&fp, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "dnszipf-fingerprint v1\nn=1 total=6\ne\t3\na\t2\n");
    }

    fn load_str(s: &str) -> Result<Fingerprint, FingerprintError> {
        load_fingerprint(s.as_bytes())
    }

    #[test]
    fn load_accepts_truncated_tables() {
        let fp = load_str("dnszipf-fingerprint v1\nn=1 total=100\ne\t30\na\t20\n").unwrap();
        assert_eq!(fp.sample_total(), 100);
        assert_eq!(fp.pool_size(), 2);
        assert!((fp.frequency_at_rank(1).unwrap() - 0.30).abs() < 1e-12);
    }

    #[test]
    fn load_rejects_bad_input() {
        let cases = [
            ("", "empty"),
            ("wrong magic\nn=1 total=10\ne\t5\n", "magic"),
            ("dnszipf-fingerprint v1\nn=4 total=10\neeee\t5\n", "order"),
            ("dnszipf-fingerprint v1\nn=1 total=0\ne\t5\n", "zero total"),
            ("dnszipf-fingerprint v1\nn=1 total=10\ne\t7\na\t7\n", "sum over total"),
            ("dnszipf-fingerprint v1\nn=1 total=10\ne\t2\na\t5\n", "ascending counts"),
            ("dnszipf-fingerprint v1\nn=1 total=10\ne\t2\ne\t2\n", "duplicate row"),
            ("dnszipf-fingerprint v1\nn=1 total=10\nb\t2\na\t2\n", "tie order"),
            ("dnszipf-fingerprint v1\nn=1 total=10\nee\t5\n", "gram length"),
            ("dnszipf-fingerprint v1\nn=1 total=10\nE\t5\n", "alphabet"),
            ("dnszipf-fingerprint v1\nn=1 total=10\ne 5\n", "separator"),
            ("dnszipf-fingerprint v1\nn=1 total=10\ne\tfive\n", "count parse"),
            ("dnszipf-fingerprint v1\nn=1 total=10\ne\t0\n", "zero count"),
            ("dnszipf-fingerprint v1\nn=1 total=10\n", "no rows"),
        ];
        for (input, what) in cases {
            assert!(load_str(input).is_err(), "should reject: {what}");
        }
    }

    #[test]
    fn load_reports_line_numbers() {
        match load_str("dnszipf-fingerprint v1\nn=1 total=10\ne\t5\na\t9\n") {
            Err(FingerprintError::Format { line, .. }) => assert_eq!(line, 4),
            other => panic!("expected format error, got {other:?}"),
        }
    }
}
