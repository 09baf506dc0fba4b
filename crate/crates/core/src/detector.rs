//! Windowed tunnel detection over a stream of query texts.
//!
//! Queries are grouped into fixed-size tumbling windows. Each window's
//! unigram fingerprint is scored for rank decay after the top ranks are
//! excluded: a tunnel's counter labels, session tag, and apex characters
//! pile up in a few very frequent grams, while the encoded payload behind
//! them is near-uniform. Dropping the head leaves that flat body exposed.
//! The verdict comes from the unigram table alone; bigram and trigram
//! decay is computed alongside as corroborating output.

use std::fmt;

use thiserror::Error;

use crate::extraction::NormalizedText;
use crate::fingerprint::{
    count_ngrams, decay_metrics, mean_rank_delta, rank_correlation, top_gap,
    zipf_exponent_range, DecayMetrics, Fingerprint, FingerprintError,
};

#[derive(Debug, Error)]
pub enum DetectorError {
    #[error("window size {0} too small, need at least 10")]
    WindowTooSmall(usize),
    #[error("k_ranks {k_ranks} leaves no scorable ranks after excluding {exclude_top}")]
    RankBudget { k_ranks: usize, exclude_top: usize },
    #[error("threshold {0} is not finite")]
    NonFiniteThreshold(&'static str),
    #[error("reference fingerprint has gram order {0}, detector scores unigrams")]
    ReferenceNotUnigram(u8),
    #[error("window fingerprint has gram order {0}, detector scores unigrams")]
    WindowNotUnigram(u8),
    #[error(transparent)]
    Metric(#[from] FingerprintError),
}

/// Decision thresholds. A window reads as flat when its post-exclusion top
/// gap and Zipf exponent both fall below their maxima; rank correlation
/// against the reference below the minimum marks an alien character mix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub max_top_gap_flat: f64,
    pub max_zipf_flat: f64,
    pub min_rank_corr: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            max_top_gap_flat: 0.015,
            max_zipf_flat: 0.4,
            min_rank_corr: 0.3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DetectorConfig {
    /// Queries per tumbling window.
    pub window_size: usize,
    /// Unigram fingerprint of known-legitimate domain text.
    pub reference: Fingerprint,
    /// Separate reference for nameserver host names, which decay
    /// differently from query text (ns1, ns2, ... share most characters).
    pub ns_reference: Option<Fingerprint>,
    /// Ranks considered when scoring a window.
    pub k_ranks: usize,
    /// Head ranks dropped before the flatness metrics. Two is enough to
    /// absorb a counter digit and a separator without hiding real decay.
    pub exclude_top: usize,
    pub thresholds: Thresholds,
}

impl DetectorConfig {
    pub fn new(reference: Fingerprint) -> Result<Self, DetectorError> {
        let config = DetectorConfig {
            window_size: 100,
            reference,
            ns_reference: None,
            k_ranks: 14,
            exclude_top: 2,
            thresholds: Thresholds::default(),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), DetectorError> {
        if self.window_size < 10 {
            return Err(DetectorError::WindowTooSmall(self.window_size));
        }
        // The flatness metrics need at least the two ranks just past the
        // exclusion, so the bound is stricter than exclude_top < k_ranks.
        if self.exclude_top + 2 > self.k_ranks {
            return Err(DetectorError::RankBudget {
                k_ranks: self.k_ranks,
                exclude_top: self.exclude_top,
            });
        }
        let t = &self.thresholds;
        for (value, name) in [
            (t.max_top_gap_flat, "max_top_gap_flat"),
            (t.max_zipf_flat, "max_zipf_flat"),
            (t.min_rank_corr, "min_rank_corr"),
        ] {
            if !value.is_finite() {
                return Err(DetectorError::NonFiniteThreshold(name));
            }
        }
        if self.reference.n() != 1 {
            return Err(DetectorError::ReferenceNotUnigram(self.reference.n()));
        }
        if let Some(ns) = &self.ns_reference {
            if ns.n() != 1 {
                return Err(DetectorError::ReferenceNotUnigram(ns.n()));
            }
        }
        Ok(())
    }

    /// A config for scoring the harvested nameserver-host stream against
    /// the NS reference, when one was provided.
    pub fn ns_stream_config(&self) -> Option<DetectorConfig> {
        self.ns_reference.as_ref().map(|ns| {
            let mut config = self.clone();
            config.reference = ns.clone();
            config.ns_reference = None;
            config
        })
    }

    /// The verdict as a pure function of the scored numbers, so a stored
    /// score can always be re-derived and audited.
    ///
    /// Windows without enough evidence (fewer characters than ranks, or
    /// too few distinct grams to survive the exclusion) are suspicious by
    /// definition: a stream that starves the detector of text is not
    /// thereby legitimate. Both flatness signals together mean tunnel;
    /// one alone, or an alien character mix, means suspicious.
    pub fn decide(
        &self,
        top_gap: f64,
        zipf_exponent: f64,
        rank_corr: f64,
        n_chars: u64,
        effective_k: usize,
    ) -> Verdict {
        if n_chars < self.k_ranks as u64 || effective_k < self.exclude_top + 2 {
            return Verdict::Suspicious;
        }
        let flat_gap = top_gap < self.thresholds.max_top_gap_flat;
        let flat_zipf = zipf_exponent < self.thresholds.max_zipf_flat;
        match (flat_gap, flat_zipf) {
            (true, true) => Verdict::Tunnel,
            (false, false) if rank_corr < self.thresholds.min_rank_corr => Verdict::Suspicious,
            (false, false) => Verdict::Legitimate,
            _ => Verdict::Suspicious,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Legitimate,
    Suspicious,
    Tunnel,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Verdict::Legitimate => "legitimate",
            Verdict::Suspicious => "suspicious",
            Verdict::Tunnel => "tunnel",
        };
        f.write_str(s)
    }
}

/// Everything measured about one window. The unigram numbers drive the
/// verdict; bigram and trigram decay ride along for reporting and are
/// `None` when the window has too few distinct grams of that order.
#[derive(Debug, Clone, PartialEq)]
pub struct TunnelScore {
    pub window_id: u64,
    pub top_gap_after_exclusion: f64,
    pub mean_rank_delta: f64,
    pub zipf_exponent: f64,
    pub rank_corr_vs_reference: f64,
    pub n_texts: usize,
    pub n_chars: u64,
    /// Ranks actually scored: `k_ranks` clamped to the distinct grams seen.
    pub effective_k: usize,
    /// True when the clamp bit, i.e. the window had fewer distinct grams
    /// than the configured rank budget.
    pub low_evidence: bool,
    pub verdict: Verdict,
    pub bigram: Option<DecayMetrics>,
    pub trigram: Option<DecayMetrics>,
}

impl TunnelScore {
    /// One-line machine-readable form:
    /// `window_id verdict top_gap mean_rank_delta zipf_exp rank_corr n_texts`,
    /// tab separated, floats to six places.
    pub fn verdict_line(&self) -> String {
        format!(
            "{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{}",
            self.window_id,
            self.verdict,
            self.top_gap_after_exclusion,
            self.mean_rank_delta,
            self.zipf_exponent,
            self.rank_corr_vs_reference,
            self.n_texts
        )
    }
}

/// Scores one window given its unigram fingerprint. `score_window` is the
/// usual entry; this one exists so a table that arrives without its source
/// texts (a published distribution, a stored window) can still be judged.
pub fn score_fingerprint(
    window_id: u64,
    unigrams: &Fingerprint,
    n_texts: usize,
    config: &DetectorConfig,
) -> Result<TunnelScore, DetectorError> {
    if unigrams.n() != 1 {
        return Err(DetectorError::WindowNotUnigram(unigrams.n()));
    }
    score_unigram_table(window_id, Some(unigrams), n_texts, config, None, None)
}

/// Counts and scores a window of query texts.
pub fn score_window(
    window_id: u64,
    texts: &[NormalizedText],
    config: &DetectorConfig,
) -> Result<TunnelScore, DetectorError> {
    let unigrams = count_ngrams(texts, 1)?;
    let fingerprint = if unigrams.total() == 0 {
        None
    } else {
        Some(Fingerprint::build(&unigrams)?)
    };

    let order_metrics = |n: u8| -> Result<Option<DecayMetrics>, DetectorError> {
        let counts = count_ngrams(texts, n)?;
        if counts.total() == 0 {
            return Ok(None);
        }
        let fp = Fingerprint::build(&counts)?;
        let k = config.k_ranks.min(fp.pool_size());
        if k < 2 {
            return Ok(None);
        }
        Ok(Some(decay_metrics(&fp, k)?))
    };
    let bigram = order_metrics(2)?;
    let trigram = order_metrics(3)?;

    score_unigram_table(
        window_id,
        fingerprint.as_ref(),
        texts.len(),
        config,
        bigram,
        trigram,
    )
}

fn score_unigram_table(
    window_id: u64,
    unigrams: Option<&Fingerprint>,
    n_texts: usize,
    config: &DetectorConfig,
    bigram: Option<DecayMetrics>,
    trigram: Option<DecayMetrics>,
) -> Result<TunnelScore, DetectorError> {
    let (n_chars, effective_k) = match unigrams {
        Some(fp) => (fp.sample_total(), config.k_ranks.min(fp.pool_size())),
        None => (0, 0),
    };
    let scorable = effective_k >= config.exclude_top + 2;

    let mut gap = 0.0;
    let mut zipf = 0.0;
    let mut delta = 0.0;
    let mut corr = 0.0;
    if let Some(fp) = unigrams {
        if scorable {
            let lo = config.exclude_top + 1;
            gap = top_gap(fp, lo, effective_k)?;
            zipf = zipf_exponent_range(fp, lo, effective_k)?;
        }
        if effective_k >= 2 {
            delta = mean_rank_delta(fp, effective_k)?;
        }
        corr = match rank_correlation(fp, &config.reference, effective_k) {
            Ok(r) => r,
            Err(FingerprintError::DegenerateCorrelation) => 0.0,
            Err(e) => return Err(e.into()),
        };
    }

    let verdict = config.decide(gap, zipf, corr, n_chars, effective_k);
    Ok(TunnelScore {
        window_id,
        top_gap_after_exclusion: gap,
        mean_rank_delta: delta,
        zipf_exponent: zipf,
        rank_corr_vs_reference: corr,
        n_texts,
        n_chars,
        effective_k,
        low_evidence: effective_k < config.k_ranks,
        verdict,
        bigram,
        trigram,
    })
}

/// Multi-line human-readable account of a score against its thresholds.
pub fn explain(score: &TunnelScore, config: &DetectorConfig) -> String {
    use std::fmt::Write;
    let t = &config.thresholds;
    let mut out = String::new();
    let _ = writeln!(out, "window {}: {}", score.window_id, score.verdict);
    let _ = writeln!(
        out,
        "  evidence       {} texts, {} chars, {} of {} ranks{}",
        score.n_texts,
        score.n_chars,
        score.effective_k,
        config.k_ranks,
        if score.low_evidence { " (low)" } else { "" },
    );
    let _ = writeln!(
        out,
        "  top gap        {:.6} over ranks {}..{} (flat below {:.6})",
        score.top_gap_after_exclusion,
        config.exclude_top + 1,
        score.effective_k,
        t.max_top_gap_flat,
    );
    let _ = writeln!(
        out,
        "  zipf exponent  {:.6} (flat below {:.6})",
        score.zipf_exponent, t.max_zipf_flat,
    );
    let _ = writeln!(out, "  mean rank delta {:.6}", score.mean_rank_delta);
    let _ = writeln!(
        out,
        "  rank corr      {:.6} (alien below {:.6})",
        score.rank_corr_vs_reference, t.min_rank_corr,
    );
    for (label, metrics) in [("bigram", &score.bigram), ("trigram", &score.trigram)] {
        if let Some(m) = metrics {
            let _ = writeln!(
                out,
                "  {label} decay   gap {:.6}, zipf {:.6} over top {}",
                m.top_gap, m.zipf_exponent, m.k,
            );
        }
    }
    out
}

/// Feeds queries into tumbling windows and scores each one as it fills.
/// A trailing partial window is never scored; `pending()` reports how
/// many queries it holds.
#[derive(Debug)]
pub struct DetectorState {
    config: DetectorConfig,
    buffer: Vec<NormalizedText>,
    next_window_id: u64,
}

impl DetectorState {
    pub fn new(config: DetectorConfig) -> Result<Self, DetectorError> {
        config.validate()?;
        Ok(DetectorState {
            buffer: Vec::with_capacity(config.window_size),
            config,
            next_window_id: 1,
        })
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    pub fn pending(&self) -> usize {
        self.buffer.len()
    }

    /// Appends one query text; returns the window's score when this query
    /// completes a window.
    pub fn push_query(
        &mut self,
        text: NormalizedText,
    ) -> Result<Option<TunnelScore>, DetectorError> {
        self.buffer.push(text);
        if self.buffer.len() < self.config.window_size {
            return Ok(None);
        }
        let window_id = self.next_window_id;
        self.next_window_id += 1;
        let score = score_window(window_id, &self.buffer, &self.config)?;
        self.buffer.clear();
        Ok(Some(score))
    }
}
