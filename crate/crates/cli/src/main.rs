//! dnszipf command line.
//!
//! Ties the library into a pipeline: `train` fingerprints a domain list,
//! `detect` scores a capture against a fingerprint, `analyze` inspects a
//! stored fingerprint, `simulate`/`randgen` produce deterministic synthetic
//! corpora, and `report` dumps plot-ready rank-frequency rows.
//!
//! Exit codes are part of the interface: 0 success, 1 detection-positive
//! (detect only), 2 usage error, 3 data error. Primary output is
//! deterministic given the same inputs, flags, and seeds; progress and
//! summaries go to stderr.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dnszipf::corpus::domain_list::read_entries;
use dnszipf::corpus::pcap::{DnsPcapReader, PcapWriter};
use dnszipf::corpus::random::{generate_random_domains, random_bytes};
use dnszipf::corpus::tunnel::{simulate_tunnel, SimulatedTunnelConfig, TunnelCodec, TunnelError};
use dnszipf::detector::{DetectorConfig, DetectorError, DetectorState, Verdict};
use dnszipf::dns_wire::{encode_query_with_id, DomainName, MAX_LABEL_OCTETS, TYPE_TXT};
use dnszipf::extraction::{
    harvest, registered_core, subdomain_text, DomainContext, NormalizedText,
};
use dnszipf::fingerprint::{
    count_ngrams, load_fingerprint, mean_rank_delta, save_fingerprint, top_gap,
    zipf_exponent_range, Fingerprint,
};

/// Pcap timestamps for synthetic captures: a fixed epoch plus a fixed step,
/// so identical flags produce identical files.
const TS_BASE: u32 = 1_000_000_000;
const QUERY_STEP_USEC: u32 = 10_000;
const CLIENT: [u8; 4] = [10, 0, 0, 2];
const RESOLVER: [u8; 4] = [10, 0, 0, 53];

#[derive(Parser)]
#[command(name = "dnszipf", version, about = "DNS tunnel detection via n-gram rank decay")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an n-gram fingerprint from a domain list.
    Train(TrainArgs),
    /// Print the metrics of a stored fingerprint, optionally scored
    /// against a reference.
    Analyze(AnalyzeArgs),
    /// Score the DNS queries in a capture file, one verdict per window.
    Detect(DetectArgs),
    /// Write a synthetic tunnel capture.
    Simulate(SimulateArgs),
    /// Write a list of uniformly random domain names.
    Randgen(RandgenArgs),
    /// Dump rank-frequency rows from fingerprint files.
    Report(ReportArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// Domain list: one domain per line, optionally `rank,domain`.
    #[arg(long)]
    input: PathBuf,
    /// Gram order.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=3))]
    n: u8,
    /// Which part of each name to count.
    #[arg(long, value_enum, default_value_t = TrainMode::Domain)]
    mode: TrainMode,
    /// Fingerprint file to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum TrainMode {
    /// The registered name without its public suffix ("mail.google.com" -> "google").
    Domain,
    /// Everything left of the registered domain ("a.b.google.com" -> "a.b").
    Subdomain,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Fingerprint file to inspect.
    #[arg(long)]
    input: PathBuf,
    /// Reference fingerprint; adds rank correlation and a verdict.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Ranks considered.
    #[arg(long, default_value_t = 14)]
    k: usize,
    /// Head ranks excluded from the flatness metrics.
    #[arg(long, default_value_t = 2)]
    exclude_top: usize,
    /// Threshold overrides, `key=value` lines.
    #[arg(long)]
    thresholds: Option<PathBuf>,
}

#[derive(Args)]
struct DetectArgs {
    /// Capture to scan (classic pcap, Ethernet/IPv4/UDP port 53).
    #[arg(long)]
    pcap: PathBuf,
    /// Reference unigram fingerprint, as written by `train`.
    #[arg(long)]
    fingerprint: PathBuf,
    /// Queries per tumbling window.
    #[arg(long, default_value_t = 100)]
    window: usize,
    /// Threshold overrides, `key=value` lines.
    #[arg(long)]
    thresholds: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Payload-to-text encoding.
    #[arg(long, value_enum)]
    codec: CodecArg,
    /// Zone the tunnel exfiltrates under.
    #[arg(long)]
    apex: String,
    /// Payload file; omitted means seeded random bytes (see --bytes).
    #[arg(long)]
    payload: Option<PathBuf>,
    /// Generated payload size; default fills 500 queries.
    #[arg(long, conflicts_with = "payload")]
    bytes: Option<usize>,
    /// Seed for the generated payload.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fixed session label prepended to every query.
    #[arg(long, default_value = "")]
    session_tag: String,
    /// Longest payload label to emit.
    #[arg(long, default_value_t = MAX_LABEL_OCTETS)]
    max_label: usize,
    /// Capture file to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum CodecArg {
    Base32,
    Base64,
    Hex,
}

impl From<CodecArg> for TunnelCodec {
    fn from(arg: CodecArg) -> Self {
        match arg {
            CodecArg::Base32 => TunnelCodec::Base32,
            CodecArg::Base64 => TunnelCodec::Base64Dns,
            CodecArg::Hex => TunnelCodec::Hex,
        }
    }
}

#[derive(Args)]
struct RandgenArgs {
    /// Names to generate.
    #[arg(long)]
    count: usize,
    /// Characters per name.
    #[arg(long, default_value_t = 10)]
    length: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Domain list to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Fingerprint files, reported in the order given.
    #[arg(long, num_args = 1.., required = true)]
    inputs: Vec<PathBuf>,
    /// Ranks per input.
    #[arg(long, default_value_t = 14, value_parser = clap::value_parser!(usize))]
    k: usize,
    #[arg(long, value_enum, default_value_t = ReportFormat::Csv)]
    format: ReportFormat,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Csv,
    Json,
}

/// The two non-success exit classes. Flag and configuration problems are
/// usage errors (2); unreadable or malformed inputs are data errors (3).
enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) => f.write_str(m),
        }
    }
}

fn data_err(path: &Path, err: impl fmt::Display) -> CliError {
    CliError::Data(format!("{}: {err}", path.display()))
}

/// Detector configuration problems are usage errors except for a reference
/// of the wrong gram order, which means the fingerprint file itself is not
/// usable for detection.
fn detector_err(err: DetectorError) -> CliError {
    match err {
        DetectorError::ReferenceNotUnigram(_) => CliError::Data(err.to_string()),
        DetectorError::WindowTooSmall { .. }
        | DetectorError::RankBudget { .. }
        | DetectorError::NonFiniteThreshold(_) => CliError::Usage(err.to_string()),
        other => CliError::Data(other.to_string()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Analyze(args) => cmd_analyze(args),
        Command::Detect(args) => cmd_detect(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Randgen(args) => cmd_randgen(args),
        Command::Report(args) => cmd_report(args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.code())
        }
    }
}

fn load_fingerprint_file(path: &Path) -> Result<Fingerprint, CliError> {
    let file = File::open(path).map_err(|e| data_err(path, e))?;
    load_fingerprint(BufReader::new(file)).map_err(|e| data_err(path, e))
}

/// Applies `key=value` lines to the detector configuration. The file
/// stands in for flags, so every problem in it is a usage error.
fn apply_thresholds(path: &Path, config: &mut DetectorConfig) -> Result<(), CliError> {
    let usage = |line: usize, msg: String| {
        CliError::Usage(format!("{}:{line}: {msg}", path.display()))
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (key, value) = trimmed
            .split_once('=')
            .ok_or_else(|| usage(line, format!("expected key=value, got {trimmed:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        let bad_value =
            |e: &dyn fmt::Display| usage(line, format!("bad value for {key}: {e}"));
        match key {
            "max_top_gap_flat" => {
                config.thresholds.max_top_gap_flat =
                    value.parse().map_err(|e| bad_value(&e))?
            }
            "max_zipf_flat" => {
                config.thresholds.max_zipf_flat = value.parse().map_err(|e| bad_value(&e))?
            }
            "min_rank_corr" => {
                config.thresholds.min_rank_corr = value.parse().map_err(|e| bad_value(&e))?
            }
            "k_ranks" => config.k_ranks = value.parse().map_err(|e| bad_value(&e))?,
            "exclude_top" => config.exclude_top = value.parse().map_err(|e| bad_value(&e))?,
            "window_size" => config.window_size = value.parse().map_err(|e| bad_value(&e))?,
            other => return Err(usage(line, format!("unknown key {other:?}"))),
        }
    }
    Ok(())
}

fn cmd_train(args: TrainArgs) -> Result<ExitCode, CliError> {
    let file = File::open(&args.input).map_err(|e| data_err(&args.input, e))?;
    let (entries, issues) = read_entries(BufReader::new(file));
    for issue in &issues {
        eprintln!("warning: {}: {issue}", args.input.display());
    }

    let texts: Vec<NormalizedText> = entries
        .iter()
        .map(|e| match args.mode {
            TrainMode::Domain => registered_core(&e.domain),
            TrainMode::Subdomain => subdomain_text(&e.domain),
        })
        .collect();
    let counts =
        count_ngrams(&texts, args.n).map_err(|e| CliError::Data(e.to_string()))?;
    if counts.total() == 0 {
        return Err(CliError::Data(format!(
            "{}: no countable text ({} entries)",
            args.input.display(),
            entries.len()
        )));
    }
    let fp = Fingerprint::build(&counts).map_err(|e| CliError::Data(e.to_string()))?;

    let out = File::create(&args.out).map_err(|e| data_err(&args.out, e))?;
    save_fingerprint(&fp, BufWriter::new(out)).map_err(|e| data_err(&args.out, e))?;

    println!("entries: {}", entries.len());
    println!("pool_size: {}", fp.pool_size());
    match top_gap(&fp, 1, 10) {
        Ok(gap) => println!("top_gap(1,10): {gap:.6}"),
        Err(_) => println!("top_gap(1,10): n/a"),
    }
    let k = args_k_for_pool(14, fp.pool_size());
    match k {
        Some(k) => println!(
            "zipf_exponent(k={k}): {:.6}",
            zipf_exponent_range(&fp, 1, k).map_err(|e| CliError::Data(e.to_string()))?
        ),
        None => println!("zipf_exponent(k=14): n/a"),
    }
    Ok(ExitCode::SUCCESS)
}

/// The largest usable rank count: the requested k clamped to the pool,
/// or None when even two ranks are not available.
fn args_k_for_pool(k: usize, pool: usize) -> Option<usize> {
    let k = k.min(pool);
    (k >= 2).then_some(k)
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<ExitCode, CliError> {
    let fp = load_fingerprint_file(&args.input)?;
    println!("source: {}", args.input.display());
    println!("n: {}", fp.n());
    println!("sample_total: {}", fp.sample_total());
    println!("pool_size: {}", fp.pool_size());
    match top_gap(&fp, 1, 10) {
        Ok(gap) => println!("top_gap(1,10): {gap:.6}"),
        Err(_) => println!("top_gap(1,10): n/a"),
    }
    let Some(k) = args_k_for_pool(args.k, fp.pool_size()) else {
        println!("mean_rank_delta: n/a");
        println!("zipf_exponent: n/a");
        return Ok(ExitCode::SUCCESS);
    };
    println!(
        "mean_rank_delta(k={k}): {:.6}",
        mean_rank_delta(&fp, k).map_err(|e| CliError::Data(e.to_string()))?
    );
    println!(
        "zipf_exponent(k={k}): {:.6}",
        zipf_exponent_range(&fp, 1, k).map_err(|e| CliError::Data(e.to_string()))?
    );

    let lo = args.exclude_top + 1;
    if lo + 1 <= k {
        println!(
            "top_gap({lo},{k}): {:.6}",
            top_gap(&fp, lo, k).map_err(|e| CliError::Data(e.to_string()))?
        );
        println!(
            "zipf_exponent({lo}..{k}): {:.6}",
            zipf_exponent_range(&fp, lo, k).map_err(|e| CliError::Data(e.to_string()))?
        );
    }

    let Some(ref_path) = args.reference else {
        return Ok(ExitCode::SUCCESS);
    };
    let reference = load_fingerprint_file(&ref_path)?;
    let mut config = DetectorConfig::new(reference).map_err(detector_err)?;
    config.k_ranks = args.k;
    config.exclude_top = args.exclude_top;
    if let Some(thresholds) = &args.thresholds {
        apply_thresholds(thresholds, &mut config)?;
    }
    config.validate().map_err(detector_err)?;
    let score = dnszipf::detector::score_fingerprint(1, &fp, 0, &config)
        .map_err(detector_err)?;
    println!("rank_correlation(k={}): {:.6}", score.effective_k, score.rank_corr_vs_reference);
    println!("verdict: {}", score.verdict);
    Ok(ExitCode::SUCCESS)
}

fn cmd_detect(args: DetectArgs) -> Result<ExitCode, CliError> {
    let reference = load_fingerprint_file(&args.fingerprint)?;
    let mut config = DetectorConfig::new(reference).map_err(detector_err)?;
    config.window_size = args.window;
    if let Some(thresholds) = &args.thresholds {
        apply_thresholds(thresholds, &mut config)?;
    }
    config.validate().map_err(detector_err)?;
    let mut state = DetectorState::new(config).map_err(detector_err)?;

    let file = File::open(&args.pcap).map_err(|e| data_err(&args.pcap, e))?;
    let mut reader =
        DnsPcapReader::new(BufReader::new(file)).map_err(|e| data_err(&args.pcap, e))?;

    let stdout = std::io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let mut any_tunnel = false;
    let mut windows = 0u64;
    let mut ns_names = 0u64;
    let mut empty_texts = 0u64;
    while let Some(msg) = reader
        .next_message()
        .map_err(|e| data_err(&args.pcap, e))?
    {
        for (name, context) in harvest(&msg) {
            if context == DomainContext::NsHost {
                ns_names += 1;
                continue;
            }
            let text = subdomain_text(&name);
            if text.is_empty() {
                empty_texts += 1;
                continue;
            }
            if let Some(score) = state.push_query(text).map_err(detector_err)? {
                windows += 1;
                any_tunnel |= score.verdict == Verdict::Tunnel;
                writeln!(out, "{}", score.verdict_line())
                    .map_err(|e| CliError::Data(e.to_string()))?;
            }
        }
    }
    out.flush().map_err(|e| CliError::Data(e.to_string()))?;

    let stats = reader.stats();
    eprintln!(
        "{windows} windows from {} dns messages ({} frames skipped, \
         {ns_names} ns-host names and {empty_texts} bare domains excluded, \
         {} queries left in a partial window)",
        stats.dns_messages,
        stats.skipped_total(),
        state.pending(),
    );
    Ok(if any_tunnel {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn cmd_simulate(args: SimulateArgs) -> Result<ExitCode, CliError> {
    let apex = DomainName::from_presentation(&args.apex)
        .map_err(|e| CliError::Usage(format!("--apex {}: {e}", args.apex)))?;
    let mut config = SimulatedTunnelConfig::new(args.codec.into(), apex);
    config.session_tag = args.session_tag;
    config.max_label = args.max_label;
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;

    let payload = match &args.payload {
        Some(path) => std::fs::read(path).map_err(|e| data_err(path, e))?,
        None => {
            let len = args.bytes.unwrap_or(config.chunk_bytes() * 500);
            random_bytes(len, args.seed)
        }
    };
    let names = simulate_tunnel(&payload, &config).map_err(|e| match e {
        TunnelError::TooManyChunks { .. } => CliError::Data(e.to_string()),
        other => CliError::Usage(other.to_string()),
    })?;

    let out = File::create(&args.out).map_err(|e| data_err(&args.out, e))?;
    let mut writer =
        PcapWriter::new(BufWriter::new(out)).map_err(|e| data_err(&args.out, e))?;
    for (i, name) in names.iter().enumerate() {
        let query = encode_query_with_id(name, TYPE_TXT, i as u16);
        let usec = i as u32 * QUERY_STEP_USEC;
        writer
            .write_udp_frame(
                TS_BASE + usec / 1_000_000,
                usec % 1_000_000,
                CLIENT,
                RESOLVER,
                40_000 + (i % 20_000) as u16,
                53,
                &query,
            )
            .map_err(|e| data_err(&args.out, e))?;
    }
    writer
        .into_inner()
        .flush()
        .map_err(|e| data_err(&args.out, e))?;

    println!("queries: {}", names.len());
    println!("chunk_bytes: {}", config.chunk_bytes());
    println!("payload_bytes: {}", payload.len());
    Ok(ExitCode::SUCCESS)
}

fn cmd_randgen(args: RandgenArgs) -> Result<ExitCode, CliError> {
    if !(1..=MAX_LABEL_OCTETS).contains(&args.length) {
        return Err(CliError::Usage(format!(
            "--length {} is outside 1..={MAX_LABEL_OCTETS}",
            args.length
        )));
    }
    let out = File::create(&args.out).map_err(|e| data_err(&args.out, e))?;
    let mut w = BufWriter::new(out);
    // `.test` keeps the output a well-formed domain list whose random part
    // survives registered-core extraction unchanged.
    for text in generate_random_domains(args.count, args.length, args.seed) {
        writeln!(w, "{}.test", text.as_str()).map_err(|e| data_err(&args.out, e))?;
    }
    w.flush().map_err(|e| data_err(&args.out, e))?;
    println!("entries: {}", args.count);
    Ok(ExitCode::SUCCESS)
}

fn cmd_report(args: ReportArgs) -> Result<ExitCode, CliError> {
    if args.k == 0 {
        return Err(CliError::Usage("--k must be at least 1".into()));
    }
    let mut rows: Vec<(String, usize, String, f64)> = Vec::new();
    for path in &args.inputs {
        let fp = load_fingerprint_file(path)?;
        let source = path.display().to_string();
        let k = args.k.min(fp.pool_size());
        if k < args.k {
            eprintln!(
                "note: {source}: only {k} of {} requested ranks available",
                args.k
            );
        }
        for rank in 1..=k {
            let gram = fp
                .gram_at_rank(rank)
                .map_err(|e| data_err(path, e))?
                .to_string();
            let frequency = fp.frequency_at_rank(rank).map_err(|e| data_err(path, e))?;
            rows.push((source.clone(), rank, gram, frequency));
        }
        // Summary decay numbers ride on stderr so the primary output stays
        // a plain table.
        if let Some(k) = args_k_for_pool(args.k, fp.pool_size()) {
            let metrics = dnszipf::fingerprint::decay_metrics(&fp, k)
                .map_err(|e| data_err(path, e))?;
            eprintln!(
                "{source}: k={k} top_gap {:.6} mean_rank_delta {:.6} zipf_exponent {:.6}",
                metrics.top_gap, metrics.mean_rank_delta, metrics.zipf_exponent
            );
        }
    }

    match args.format {
        ReportFormat::Csv => {
            println!("source,rank,gram,frequency");
            for (source, rank, gram, frequency) in &rows {
                println!("{source},{rank},{gram},{frequency:.6}");
            }
        }
        ReportFormat::Json => {
            let value: Vec<serde_json::Value> = rows
                .iter()
                .map(|(source, rank, gram, frequency)| {
                    serde_json::json!({
                        "source": source,
                        "rank": rank,
                        "gram": gram,
                        "frequency": frequency,
                    })
                })
                .collect();
            println!(
                "{}",
                serde_json::to_string_pretty(&value)
                    .map_err(|e| CliError::Data(e.to_string()))?
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}
