//! End-to-end runs of the `sonolink` binary.

use std::path::Path;
use std::process::{Command, Output};

use sonolink::bits_hex::read_bits_hex;
use sonolink::wav::{read_wav, write_wav, WavEncoding};
use sonolink_core::audio::amplitude_to_db;
use sonolink_core::AudioSignal;

fn sonolink(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sonolink")).args(args).output().expect("run sonolink")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn lee_encode_then_decode() {
    let dir = tempfile::tempdir().unwrap();
    let wav = dir.path().join("tx.wav");
    let bits = dir.path().join("tx.hex");
    let o = sonolink(&["encode", "--scheme", "lee", "--random", "16", "--seed", "7", "--out", path(&wav), "--write-bits", path(&bits)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let audio = read_wav(&wav).unwrap();
    assert!((audio.duration_s() - 1.1).abs() < 1e-9, "{}", audio.duration_s());
    assert!((amplitude_to_db(audio.peak()) + 3.0).abs() <= 0.01, "{}", amplitude_to_db(audio.peak()));
    assert_eq!(read_bits_hex(&bits, Some(16)).unwrap().len(), 16);

    let o = sonolink(&["decode", "--scheme", "lee", "--in", path(&wav), "--expected-bits", "16", "--bits-hex", path(&bits), "--bit-count", "16"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("TER 0.0000"), "{}", stdout(&o));
    assert!(stdout(&o).contains("BER 0.0000"));
}

#[test]
fn noise_recording_is_a_sync_failure() {
    let dir = tempfile::tempdir().unwrap();
    let wav = dir.path().join("noise.wav");
    let samples = sonolink_core::BitMessage::from_seed(3, 96_000)
        .bits()
        .iter()
        .enumerate()
        .map(|(i, &b)| if b { 0.3 } else { -0.3 } * (1.0 + (i % 7) as f64) / 8.0)
        .collect();
    write_wav(&AudioSignal::new(samples, 48_000), &wav, WavEncoding::Pcm16).unwrap();
    for scheme in ["lee", "nearby", "priwhisper"] {
        let o = sonolink(&["decode", "--scheme", scheme, "--in", path(&wav), "--expected-bits", "16"]);
        assert_eq!(o.status.code(), Some(1), "{scheme}: {}", stderr(&o));
        assert!(stderr(&o).contains("sync failure"), "{scheme}: {}", stderr(&o));
    }
}

#[test]
fn io_and_usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = sonolink(&["decode", "--scheme", "lee", "--in", path(&dir.path().join("none.wav")), "--expected-bits", "16"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!stderr(&o).is_empty());
    assert_eq!(sonolink(&["transmit"]).status.code(), Some(2));
    assert_eq!(sonolink(&["--help"]).status.code(), Some(0));
}

#[test]
fn encode_reads_hex_payloads() {
    let dir = tempfile::tempdir().unwrap();
    let hex = dir.path().join("p.hex");
    std::fs::write(&hex, "a5 3c e\n").unwrap();
    let wav = dir.path().join("p.wav");
    let o = sonolink(&["encode", "--scheme", "priwhisper", "--bits-hex", path(&hex), "--bit-count", "20", "--out", path(&wav), "--format", "float32"]);
    assert_eq!(o.status.code(), Some(2), "odd digit count is rejected");
    std::fs::write(&hex, "a53ce0\n").unwrap();
    let o = sonolink(&["encode", "--scheme", "priwhisper", "--bits-hex", path(&hex), "--bit-count", "20", "--out", path(&wav), "--format", "float32"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = dir.path().join("rx.hex");
    let o = sonolink(&["decode", "--scheme", "priwhisper", "--in", path(&wav), "--expected-bits", "20", "--out-bits", path(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(read_bits_hex(&out, Some(20)).unwrap(), read_bits_hex(&hex, Some(20)).unwrap());
}

#[test]
fn simulate_and_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("far.cfg");
    std::fs::write(&cfg, "snr_db = 10\nseed = 2\n").unwrap();
    let csv = dir.path().join("t.csv");
    let o = sonolink(&["simulate", "--scheme", "lee", "--channel", path(&cfg), "--seed", "1", "--trials", "12", "--out", path(&csv)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 13);
    assert!(text.lines().nth(1).unwrap().starts_with("lee,far,0,16,"));

    let again = dir.path().join("u.csv");
    sonolink(&["simulate", "--scheme", "lee", "--channel", path(&cfg), "--seed", "1", "--trials", "12", "--out", path(&again), "--threads", "2"]);
    assert_eq!(std::fs::read(&again).unwrap(), text.as_bytes());

    let o = sonolink(&["evaluate", "--in", path(&csv)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary = stdout(&o);
    assert!(summary.starts_with("scheme,condition,count,mean_ter,stderr,median,p25,p75,per\n"), "{summary}");
    assert!(summary.contains("lee,far,12,"));
}
