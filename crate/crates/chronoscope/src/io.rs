//! Artifact serialization: CSV maps that round-trip losslessly, 8-bit PGM
//! heatmaps with a JSON sidecar carrying the value range, and content
//! hashing for the run manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{ChronoError, Result};
use crate::grid::Axis;
use crate::phase_space::{MapKind, PhaseSpaceMap};

/// Render a float with 17 significant digits; enough for a bit-exact f64
/// round trip through text.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn axis_header(name: &str, a: Axis) -> String {
    format!(
        "# {name}: start={} step={} count={}\n",
        fmt_f64(a.start),
        fmt_f64(a.step),
        a.count
    )
}

/// Serialize a map: comment header with the kind and both axes, then one
/// CSV row per time sample (frequency across columns).
pub fn map_to_csv(map: &PhaseSpaceMap) -> String {
    let ta = map.time_axis;
    let fa = map.freq_axis;
    let mut out = String::new();
    out.push_str(&format!("# kind: {}\n", map.kind));
    out.push_str(&axis_header("time_axis", ta));
    out.push_str(&axis_header("freq_axis", fa));
    for it in 0..ta.count {
        for ifr in 0..fa.count {
            if ifr > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", fmt_f64(map.value(it, ifr)));
        }
        out.push('\n');
    }
    out
}

fn parse_axis(line: &str, name: &str) -> Result<Axis> {
    let bad = || ChronoError::Config(format!("malformed {name} header line: {line:?}"));
    let rest = line
        .strip_prefix(&format!("# {name}: "))
        .ok_or_else(bad)?;
    let mut start = None;
    let mut step = None;
    let mut count = None;
    for tok in rest.split_whitespace() {
        if let Some(v) = tok.strip_prefix("start=") {
            start = v.parse::<f64>().ok();
        } else if let Some(v) = tok.strip_prefix("step=") {
            step = v.parse::<f64>().ok();
        } else if let Some(v) = tok.strip_prefix("count=") {
            count = v.parse::<usize>().ok();
        }
    }
    match (start, step, count) {
        (Some(start), Some(step), Some(count)) => Ok(Axis { start, step, count }),
        _ => Err(bad()),
    }
}

/// Parse a map back from [`map_to_csv`] output.
pub fn map_from_csv(text: &str) -> Result<PhaseSpaceMap> {
    let mut lines = text.lines();
    let kind_line = lines
        .next()
        .ok_or_else(|| ChronoError::Config("empty CSV".into()))?;
    let kind: MapKind = kind_line
        .strip_prefix("# kind: ")
        .ok_or_else(|| ChronoError::Config(format!("missing kind header: {kind_line:?}")))?
        .parse()?;
    let ta = parse_axis(
        lines
            .next()
            .ok_or_else(|| ChronoError::Config("missing time axis header".into()))?,
        "time_axis",
    )?;
    let fa = parse_axis(
        lines
            .next()
            .ok_or_else(|| ChronoError::Config("missing freq axis header".into()))?,
        "freq_axis",
    )?;
    let mut values = Vec::with_capacity(ta.count * fa.count);
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        for tok in line.split(',') {
            values.push(tok.trim().parse::<f64>().map_err(|e| {
                ChronoError::Config(format!("bad CSV value {tok:?}: {e}"))
            })?);
        }
    }
    if values.len() != ta.count * fa.count {
        return Err(ChronoError::Config(format!(
            "CSV holds {} values, axes need {}",
            values.len(),
            ta.count * fa.count
        )));
    }
    PhaseSpaceMap::new(kind, ta, fa, values)
}

/// Serialize a 1-d real curve as two CSV columns with a labeled header.
pub fn curve_to_csv(x_label: &str, y_label: &str, points: &[(f64, f64)]) -> String {
    let mut out = format!("# columns: {x_label},{y_label}\n");
    for (x, y) in points {
        let _ = writeln!(out, "{},{}", fmt_f64(*x), fmt_f64(*y));
    }
    out
}

/// Value-range metadata written alongside every PGM heatmap.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PgmSidecar {
    pub kind: String,
    pub min: f64,
    pub max: f64,
    pub rows: usize,
    pub cols: usize,
    pub time_axis: Axis,
    pub freq_axis: Axis,
}

/// Render a map as a binary 8-bit PGM (rows = time, columns = frequency),
/// mapping [min, max] linearly onto [0, 255]. Returns the image bytes and
/// the sidecar describing the scaling.
pub fn map_to_pgm(map: &PhaseSpaceMap) -> (Vec<u8>, PgmSidecar) {
    let ta = map.time_axis;
    let fa = map.freq_axis;
    let min = map.min_value();
    let max = map.max_value();
    let scale = if max > min { 255.0 / (max - min) } else { 0.0 };
    let mut bytes = format!("P5\n{} {}\n255\n", fa.count, ta.count).into_bytes();
    for v in map.values() {
        bytes.push(((v - min) * scale).round().clamp(0.0, 255.0) as u8);
    }
    let sidecar = PgmSidecar {
        kind: map.kind.to_string(),
        min,
        max,
        rows: ta.count,
        cols: fa.count,
        time_axis: ta,
        freq_axis: fa,
    };
    (bytes, sidecar)
}

/// Hex SHA-256 of a byte string, used for manifest entries.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let digest = h.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    out
}

/// Write bytes and return the manifest entry (file name + content hash).
pub fn write_artifact(dir: &Path, name: &str, bytes: &[u8]) -> Result<ManifestEntry> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), bytes)?;
    Ok(ManifestEntry {
        name: name.to_string(),
        sha256: content_hash(bytes),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub sha256: String,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Axis;

    fn sample_map() -> PhaseSpaceMap {
        let ta = Axis::symmetric(0.0, 1.0, 9);
        let fa = Axis::symmetric(0.5, 2.0, 11);
        let values: Vec<f64> = (0..99)
            .map(|i| (i as f64 * 0.37).sin() * 1e-3 + 1.0 / 3.0)
            .collect();
        PhaseSpaceMap::new(MapKind::Spectrogram, ta, fa, values).unwrap()
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let map = sample_map();
        let text = map_to_csv(&map);
        let back = map_from_csv(&text).unwrap();
        assert_eq!(back.kind, map.kind);
        assert_eq!(back.time_axis, map.time_axis);
        assert_eq!(back.freq_axis, map.freq_axis);
        for (a, b) in map.values().iter().zip(back.values()) {
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn fmt_f64_bit_exact() {
        for v in [1.0 / 3.0, -2.7182818284590452e-15, 6.02e23, 0.0] {
            let back: f64 = fmt_f64(v).parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits());
        }
    }

    #[test]
    fn pgm_header_and_range() {
        let map = sample_map();
        let (bytes, sc) = map_to_pgm(&map);
        assert!(bytes.starts_with(b"P5\n11 9\n255\n"));
        assert_eq!(bytes.len(), 12 + 99);
        assert!(sc.min <= sc.max);
        // extremes hit both ends of the byte range
        let pix = &bytes[12..];
        assert!(pix.iter().any(|&p| p == 0));
        assert!(pix.iter().any(|&p| p == 255));
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(
            content_hash(b"chronoscope"),
            content_hash(b"chronoscope")
        );
        assert_ne!(content_hash(b"a"), content_hash(b"b"));
    }
}
