//! Seed-pinned statistical properties of the modems under simulated channels.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use sonolink_core::channel::{apply_channel, ChannelConfig};
use sonolink_core::lee::LeeModem;
use sonolink_core::nearby::NearbyModem;
use sonolink_core::priwhisper::PriWhisperModem;
use sonolink_core::{AudioSignal, BitMessage};

fn awgn(snr_db: f64, seed: u64) -> ChannelConfig {
    ChannelConfig { id: format!("awgn{snr_db}"), snr_db: Some(snr_db), seed, ..ChannelConfig::identity() }
}

fn msg(seed: u64, len: usize) -> BitMessage {
    BitMessage::random(&mut ChaCha8Rng::seed_from_u64(seed), len)
}

/// Embeds `audio` after `lead` samples of silence, passes it through `channel`
/// and returns the absolute sync error per trial.
fn sync_errors<F>(trials: u64, lead: usize, make: impl Fn(u64) -> AudioSignal, snr_db: f64, sync: F) -> Vec<Option<usize>>
where
    F: Fn(&AudioSignal) -> Option<usize>,
{
    (0..trials)
        .map(|t| {
            let clean = make(t).padded(lead, 4_800);
            let rx = apply_channel(&clean, &awgn(snr_db, 1_000 + t));
            sync(&rx).map(|o| o.abs_diff(lead))
        })
        .collect()
}

fn within(errors: &[Option<usize>], tol: usize) -> usize {
    errors.iter().filter(|e| e.is_some_and(|e| e <= tol)).count()
}

#[test]
fn lee_sync_at_20_db() {
    let m = LeeModem::default();
    let errs = sync_errors(100, 7_000, |t| m.encode(&msg(t, 16)).unwrap(), 20.0, |s| m.sync(s).ok());
    let ok = within(&errs, 8);
    assert!(ok >= 95, "{ok}/100 within ±8 samples");
}

#[test]
fn priwhisper_sync_at_20_db() {
    let m = PriWhisperModem::default();
    let errs = sync_errors(100, 5_000, |t| m.encode(&msg(t, 115)).unwrap(), 20.0, |s| m.sync(s).ok());
    let ok = within(&errs, 10);
    assert!(ok >= 95, "{ok}/100 within ±10 samples");
}

#[test]
fn nearby_sync_at_15_db() {
    let m = NearbyModem::default();
    let half = m.params().symbol_len() / 2;
    let errs = sync_errors(100, 9_000, |t| m.encode(&msg(t, 64)).unwrap(), 15.0, |s| m.sync(s, 18).ok());
    let ok = within(&errs, half);
    assert!(ok >= 95, "{ok}/100 within half a symbol");
}

#[test]
fn nearby_noise_rows_stay_below_five_times_median() {
    let m = NearbyModem::default();
    let quiet = (0..100u64)
        .filter(|&seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = Normal::new(0.0, 0.1).unwrap();
            let samples: Vec<f64> = (0..24_000).map(|_| n.sample(&mut rng)).collect();
            let rows = m.raw_scores(&AudioSignal::new(samples, 48_000)).unwrap().raw.row_max();
            let median = sonolink_core::dsp::median(&rows);
            rows.iter().all(|&r| r <= 5.0 * median)
        })
        .count();
    assert!(quiet >= 95, "{quiet}/100");
}
