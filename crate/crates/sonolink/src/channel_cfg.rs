//! Plain-text channel configuration.
//!
//! One `key = value` pair per line; `#` starts a comment. Every key is
//! optional and an empty file is the identity channel.
//!
//! ```text
//! id = office-far
//! seed = 7
//! snr_db = 20                       # white noise, relative to the received signal
//! rir_spread_ms = 20                # synthetic room response drawn per trial
//! rir_taps = 32
//! rir = 0:1, 3.5:0.4, 12:-0.2       # or a fixed response, delay_ms:gain
//! tilt = 9000:0, 16000:-12          # freq_hz:gain_db, linear in log-frequency
//! clip = 0.8
//! bursts = 2, 0.1, -6               # period_s, duration_s, level_dbfs
//! ambient = cafe.wav                # relative to the config file
//! ambient_level_dbfs = -30
//! ```
//!
//! Levels are relative to digital full scale; they have no fixed relation to
//! sound pressure levels in a room.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sonolink_core::channel::{
    AmbientMix, BurstSpec, ChannelConfig, ImpulseResponse, RirTap, SyntheticRir, TiltCurve,
};

use crate::wav::read_wav;
use crate::{Error, Result};

/// A parsed config file and the path of its ambient recording, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelFile {
    pub config: ChannelConfig,
    pub ambient_path: Option<PathBuf>,
}

fn number(key: &str, v: &str) -> Result<f64> {
    v.trim().parse().map_err(|_| Error::Format(format!("`{key}`: `{}` is not a number", v.trim())))
}

fn pairs(key: &str, v: &str) -> Result<Vec<(f64, f64)>> {
    v.split(',')
        .map(|item| {
            let (a, b) = item
                .split_once(':')
                .ok_or_else(|| Error::Format(format!("`{key}`: expected `a:b`, got `{}`", item.trim())))?;
            Ok((number(key, a)?, number(key, b)?))
        })
        .collect()
}

/// Parses config text. `base_dir` resolves a relative ambient path.
pub fn parse_channel_config(text: &str, base_dir: Option<&Path>) -> Result<ChannelFile> {
    let mut config = ChannelConfig::identity();
    let mut ambient_path = None;
    let mut ambient_level = None;
    let mut spread = None;
    let mut taps = None;
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("line {}: expected `key = value`", n + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "id" => config.id = value.to_string(),
            "seed" => {
                config.seed = value.parse().map_err(|_| Error::Format(format!("`seed`: `{value}` is not an integer")))?
            }
            "snr_db" => config.snr_db = Some(number(key, value)?),
            "rir_spread_ms" => spread = Some(number(key, value)?),
            "rir_taps" => {
                taps = Some(value.parse().map_err(|_| Error::Format(format!("`rir_taps`: `{value}` is not a count")))?)
            }
            "rir" => {
                let taps = pairs(key, value)?.into_iter().map(|(delay_ms, gain)| RirTap { delay_ms, gain }).collect();
                config.rir = Some(ImpulseResponse::new(taps)?);
            }
            "tilt" => config.tilt = Some(TiltCurve::new(pairs(key, value)?)?),
            "clip" => {
                let level = number(key, value)?;
                if !(level > 0.0 && level <= 1.0) {
                    return Err(Error::Format(format!("`clip` must be in (0, 1], got {level}")));
                }
                config.clip_level = Some(level);
            }
            "bursts" => {
                let v = value.split(',').map(|x| number(key, x)).collect::<Result<Vec<f64>>>()?;
                let [period_s, duration_s, level_dbfs] = v[..] else {
                    return Err(Error::Format("`bursts` needs period_s, duration_s, level_dbfs".into()));
                };
                config.bursts = Some(BurstSpec { period_s, duration_s, level_dbfs });
            }
            "ambient" => {
                let p = PathBuf::from(value);
                ambient_path = Some(match base_dir {
                    Some(dir) if p.is_relative() => dir.join(p),
                    _ => p,
                });
            }
            "ambient_level_dbfs" => ambient_level = Some(number(key, value)?),
            other => return Err(Error::Format(format!("line {}: unknown key `{other}`", n + 1))),
        }
    }
    if let Some(delay_spread_ms) = spread {
        config.synthetic_rir =
            Some(SyntheticRir { delay_spread_ms, taps: taps.unwrap_or(SyntheticRir::DEFAULT_TAPS) });
    } else if taps.is_some() {
        return Err(Error::Format("`rir_taps` needs `rir_spread_ms`".into()));
    }
    if let Some(path) = &ambient_path {
        let recording = read_wav(path)?;
        let level_dbfs = ambient_level.ok_or_else(|| Error::Format("`ambient` needs `ambient_level_dbfs`".into()))?;
        config.ambient = Some(AmbientMix { recording, level_dbfs });
    }
    Ok(ChannelFile { config, ambient_path })
}

pub fn read_channel_config(path: impl AsRef<Path>) -> Result<ChannelFile> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut file = parse_channel_config(&text, path.parent())?;
    if file.config.id.is_empty() || file.config.id == "identity" && !file.config.is_identity() {
        file.config.id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    }
    Ok(file)
}

/// Serializes a config; the ambient recording is referenced by `file.ambient_path`.
pub fn format_channel_config(file: &ChannelFile) -> String {
    let c = &file.config;
    let mut out = String::new();
    let join = |items: Vec<String>| items.join(", ");
    writeln!(out, "id = {}", c.id).unwrap();
    writeln!(out, "seed = {}", c.seed).unwrap();
    if let Some(snr) = c.snr_db {
        writeln!(out, "snr_db = {snr}").unwrap();
    }
    if let Some(s) = c.synthetic_rir {
        writeln!(out, "rir_spread_ms = {}\nrir_taps = {}", s.delay_spread_ms, s.taps).unwrap();
    }
    if let Some(rir) = &c.rir {
        let taps = rir.taps().iter().map(|t| format!("{}:{}", t.delay_ms, t.gain)).collect();
        writeln!(out, "rir = {}", join(taps)).unwrap();
    }
    if let Some(tilt) = &c.tilt {
        writeln!(out, "tilt = {}", join(tilt.points().iter().map(|(f, g)| format!("{f}:{g}")).collect())).unwrap();
    }
    if let Some(clip) = c.clip_level {
        writeln!(out, "clip = {clip}").unwrap();
    }
    if let Some(b) = c.bursts {
        writeln!(out, "bursts = {}, {}, {}", b.period_s, b.duration_s, b.level_dbfs).unwrap();
    }
    if let (Some(path), Some(mix)) = (&file.ambient_path, &c.ambient) {
        writeln!(out, "ambient = {}\nambient_level_dbfs = {}", path.display(), mix.level_dbfs).unwrap();
    }
    out
}
