//! The `sonolink` command line.
//!
//! Exit codes: 0 success, 1 decode failure (sync or frame), 2 usage or I/O
//! error. Diagnostics go to standard error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use sonolink_core::audio::normalize_peak;
use sonolink_core::channel::ChannelConfig;
use sonolink_core::eval::{compute_ber, compute_ter};
use sonolink_core::{BitMessage, DecodeOutcome, SchemeId};

use crate::bits_hex::{read_bits_hex, write_bits_hex};
use crate::channel_cfg::read_channel_config;
use crate::replay::{read_column_map, replay_manifest, write_replay_report, ReplayStatus};
use crate::trials::{read_trials_csv, run_trials_parallel, write_summary_csv, write_trials_csv, TrialRow};
use crate::wav::{read_wav, write_wav, WavEncoding};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DECODE_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "sonolink", version, about = "Acoustic data transmission: encode, decode, simulate, evaluate")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Modulate bits into a WAV file.
    Encode(EncodeArgs),
    /// Demodulate a recording.
    Decode(DecodeArgs),
    /// Run Monte-Carlo trials through a simulated channel and write per-trial CSV.
    Simulate(SimulateArgs),
    /// Summarize a per-trial CSV (TER statistics and PER per scheme and condition).
    Evaluate(EvaluateArgs),
    /// Decode the recordings listed in a manifest and compare with reference error rates.
    Replay(ReplayArgs),
}

fn parse_scheme(s: &str) -> std::result::Result<SchemeId, String> {
    s.parse().map_err(|e: sonolink_core::Error| e.to_string())
}

fn parse_encoding(s: &str) -> std::result::Result<WavEncoding, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[arg(long, value_parser = parse_scheme)]
    pub scheme: SchemeId,
    /// Payload as hex text, MSB first.
    #[arg(long, value_name = "FILE", conflicts_with_all = ["random", "seed"], required_unless_present = "random")]
    pub bits_hex: Option<PathBuf>,
    /// Payload length when the hex file is not byte-aligned.
    #[arg(long, requires = "bits_hex")]
    pub bit_count: Option<usize>,
    /// Random payload of N bits.
    #[arg(long, value_name = "N", requires = "seed")]
    pub random: Option<usize>,
    #[arg(long, value_name = "S")]
    pub seed: Option<u64>,
    #[arg(long, value_name = "TX.WAV")]
    pub out: PathBuf,
    #[arg(long, default_value_t = -3.0, allow_negative_numbers = true)]
    pub normalize_dbfs: f64,
    /// pcm16, pcm24 or float32.
    #[arg(long, default_value = "pcm16", value_parser = parse_encoding)]
    pub format: WavEncoding,
    /// Also write the transmitted bits as hex.
    #[arg(long, value_name = "FILE")]
    pub write_bits: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    #[arg(long, value_parser = parse_scheme)]
    pub scheme: SchemeId,
    #[arg(long = "in", value_name = "RX.WAV")]
    pub input: PathBuf,
    #[arg(long, value_name = "N")]
    pub expected_bits: usize,
    /// Reference bits; prints BER and TER when given.
    #[arg(long, value_name = "FILE")]
    pub bits_hex: Option<PathBuf>,
    #[arg(long, requires = "bits_hex")]
    pub bit_count: Option<usize>,
    /// Write the decoded bits as hex.
    #[arg(long, value_name = "FILE")]
    pub out_bits: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_parser = parse_scheme)]
    pub scheme: SchemeId,
    /// Channel config file; the identity channel when omitted.
    #[arg(long, value_name = "CFG")]
    pub channel: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Default: 100 for lee, 20 otherwise.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Default: 16 for lee, 128 for nearby, 4096 for priwhisper.
    #[arg(long)]
    pub payload_bits: Option<usize>,
    #[arg(long, value_name = "CSV")]
    pub out: PathBuf,
    /// Worker threads; all cores by default. The output does not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long = "in", value_name = "CSV")]
    pub input: PathBuf,
    /// Summary CSV; standard output when omitted.
    #[arg(long, value_name = "CSV")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long, value_name = "CSV")]
    pub manifest: PathBuf,
    /// `canonical = actual` column names for foreign manifests.
    #[arg(long, value_name = "FILE")]
    pub column_map: Option<PathBuf>,
    #[arg(long, value_name = "REPORT.CSV")]
    pub out: PathBuf,
}

/// Default payload size per scheme for `simulate`.
pub fn default_payload_bits(scheme: SchemeId) -> usize {
    use sonolink_core::scheme::payload;
    match scheme {
        SchemeId::Lee => payload::FAR,
        SchemeId::Nearby => payload::MEDIUM,
        SchemeId::PriWhisper => payload::NEAR,
    }
}

fn create(path: &PathBuf) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn encode(args: EncodeArgs) -> Result<i32> {
    let msg = match (&args.bits_hex, args.random) {
        (Some(path), _) => read_bits_hex(path, args.bit_count)?,
        (None, Some(n)) => BitMessage::from_seed(args.seed.unwrap_or(0), n),
        (None, None) => unreachable!("clap requires one payload source"),
    };
    let audio = args.scheme.modem().encode(&msg)?;
    let audio = normalize_peak(&audio, args.normalize_dbfs)?;
    write_wav(&audio, &args.out, args.format)?;
    if let Some(path) = &args.write_bits {
        write_bits_hex(path, &msg)?;
    }
    eprintln!("{}: {} bits, {:.3} s", args.out.display(), msg.len(), audio.duration_s());
    Ok(EXIT_OK)
}

fn decode(args: DecodeArgs) -> Result<i32> {
    let reference = args.bits_hex.as_ref().map(|p| read_bits_hex(p, args.bit_count)).transpose()?;
    let signal = read_wav(&args.input)?;
    let outcome = args.scheme.modem().decode(&signal, args.expected_bits);
    if let (Some(path), DecodeOutcome::Decoded(bits)) = (&args.out_bits, &outcome) {
        write_bits_hex(path, bits)?;
    }
    if let Some(tx) = &reference {
        if let Some(rx) = outcome.bits() {
            println!("BER {:.4}", compute_ber(tx, rx)?);
        }
        println!("TER {:.4}", compute_ter(tx, &outcome)?);
    }
    match &outcome {
        DecodeOutcome::Decoded(bits) => {
            if reference.is_none() {
                println!("{}", crate::bits_hex::format_bits_hex(bits));
            }
            Ok(EXIT_OK)
        }
        DecodeOutcome::SyncFailure(d) => {
            eprintln!("sync failure: {d}");
            Ok(EXIT_DECODE_FAILURE)
        }
        DecodeOutcome::FrameFailure(d) => {
            eprintln!("frame failure: {d}");
            Ok(EXIT_DECODE_FAILURE)
        }
    }
}

fn simulate(args: SimulateArgs) -> Result<i32> {
    let channel = match &args.channel {
        Some(path) => read_channel_config(path)?.config,
        None => ChannelConfig::identity(),
    };
    let trials = args.trials.unwrap_or(args.scheme.default_trials());
    let payload = args.payload_bits.unwrap_or(default_payload_bits(args.scheme));
    let records = run_trials_parallel(args.scheme, &channel, trials, payload, args.seed, args.threads)?;
    let rows: Vec<TrialRow> = records.iter().map(TrialRow::from).collect();
    write_trials_csv(&rows, create(&args.out)?)?;
    let failures = rows.iter().filter(|r| r.ber.is_none()).count();
    let mean = rows.iter().map(|r| r.ter).sum::<f64>() / rows.len() as f64;
    eprintln!("{} trials on `{}`: mean TER {mean:.4}, {failures} failed decodes", rows.len(), channel.id);
    Ok(EXIT_OK)
}

fn evaluate(args: EvaluateArgs) -> Result<i32> {
    let file = File::open(&args.input).map_err(|e| Error::io(&args.input, e))?;
    let rows = read_trials_csv(file)?;
    if rows.is_empty() {
        return Err(Error::Format(format!("{}: no trials", args.input.display())));
    }
    match &args.out {
        Some(path) => write_summary_csv(&rows, create(path)?)?,
        None => write_summary_csv(&rows, std::io::stdout().lock())?,
    }
    Ok(EXIT_OK)
}

fn replay(args: ReplayArgs) -> Result<i32> {
    let map = args.column_map.as_ref().map(read_column_map).transpose()?;
    let rows = replay_manifest(&args.manifest, map.as_ref())?;
    let mut out = create(&args.out)?;
    write_replay_report(&rows, &mut out)?;
    out.flush().map_err(|e| Error::io(&args.out, e))?;
    let count = |s: ReplayStatus| rows.iter().filter(|r| r.status == s).count();
    for r in rows.iter().filter(|r| r.status == ReplayStatus::Error) {
        eprintln!("{}: {}", r.wav, r.message);
    }
    eprintln!(
        "{} rows: {} match, {} delta, {} without reference, {} errors",
        rows.len(),
        count(ReplayStatus::Match),
        count(ReplayStatus::Delta),
        count(ReplayStatus::NoReference),
        count(ReplayStatus::Error)
    );
    Ok(EXIT_OK)
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Encode(a) => encode(a),
        Command::Decode(a) => decode(a),
        Command::Simulate(a) => simulate(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Replay(a) => replay(a),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        EXIT_USAGE
    })
}
