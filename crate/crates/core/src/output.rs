//! CSV artefacts. Column order is part of the output contract.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::metrics::RunMetrics;

pub const SUMMARY: &str = "summary.csv";
pub const SPEEDS: &str = "speeds.csv";
pub const GAPS: &str = "gaps.csv";
pub const CBR: &str = "cbr.csv";
pub const BEACONS: &str = "beacons.csv";
pub const CHANNEL: &str = "channel.csv";

pub const SUMMARY_HEADER: [&str; 8] = [
    "scheme",
    "scenario",
    "seed",
    "min_distance",
    "crash",
    "avg_cbr",
    "protocol_failures",
    "inter_platoon_min_distance",
];

fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.6}")
    } else {
        String::new()
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Builds a CSV in memory, then moves it into place so readers never see a
/// half-written file.
fn write_csv<F>(path: &Path, header: &[&str], fill: F) -> Result<()>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>,
{
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    w.write_record(header).map_err(csv_err)?;
    fill(&mut w).map_err(csv_err)?;
    let bytes = w
        .into_inner()
        .map_err(|e| Error::io(path, e.into_error()))?;
    atomic_write(path, &bytes)
}

pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn summary_row(m: &RunMetrics) -> [String; 8] {
    [
        m.scheme.clone(),
        m.scenario.clone(),
        m.seed.to_string(),
        num(m.global_min_distance),
        m.crashed().to_string(),
        num(m.avg_cbr),
        m.protocol_failures.to_string(),
        num(m.inter_platoon_min_distance),
    ]
}

/// One summary row per run, in the order given.
pub fn write_summary(path: &Path, runs: &[&RunMetrics]) -> Result<()> {
    write_csv(path, &SUMMARY_HEADER, |w| {
        for m in runs {
            w.write_record(summary_row(m))?;
        }
        Ok(())
    })
}

/// Writes the five per-run files (plus `channel.csv` when a channel trace was
/// recorded) into `dir`, creating it if needed. Returns the paths written.
pub fn write_outputs(m: &RunMetrics, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();

    let path = dir.join(SUMMARY);
    write_summary(&path, &[m])?;
    written.push(path);

    let t = &m.traces;
    let path = dir.join(SPEEDS);
    write_csv(&path, &["time", "vehicle", "speed"], |w| {
        for (i, time) in t.times.iter().enumerate() {
            let time = num(*time);
            for v in 0..t.vehicles {
                w.write_record([
                    time.as_str(),
                    &v.to_string(),
                    &num(t.speeds[i * t.vehicles + v]),
                ])?;
            }
        }
        Ok(())
    })?;
    written.push(path);

    let path = dir.join(GAPS);
    let labels: Vec<String> = t
        .pairs
        .iter()
        .map(|(front, rear)| format!("{}-{}", front.0, rear.0))
        .collect();
    write_csv(&path, &["time", "pair", "gap"], |w| {
        for (i, time) in t.times.iter().enumerate() {
            let time = num(*time);
            for (label, gap) in labels.iter().zip(t.gap_row(i)) {
                w.write_record([time.as_str(), label, &num(*gap)])?;
            }
        }
        Ok(())
    })?;
    written.push(path);

    let path = dir.join(CBR);
    write_csv(&path, &["window", "mean_cbr"], |w| {
        for (i, c) in m.cbr_series.iter().enumerate() {
            w.write_record([i.to_string(), num(*c)])?;
        }
        Ok(())
    })?;
    written.push(path);

    let path = dir.join(BEACONS);
    write_csv(
        &path,
        &["time", "sender", "type", "payload", "outcome"],
        |w| {
            for b in &m.beacon_log {
                w.write_record([
                    num(b.time),
                    b.sender.0.to_string(),
                    b.beacon_type.code().to_string(),
                    opt(b.payload),
                    b.outcome.label().to_string(),
                ])?;
            }
            Ok(())
        },
    )?;
    written.push(path);

    if !m.channel_trace.is_empty() {
        let path = dir.join(CHANNEL);
        write_csv(
            &path,
            &["time", "transmitter", "receiver", "outcome"],
            |w| {
                for r in &m.channel_trace {
                    w.write_record([
                        num(r.time),
                        r.transmitter.0.to_string(),
                        r.receiver.0.to_string(),
                        r.outcome.label().to_string(),
                    ])?;
                }
                Ok(())
            },
        )?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_are_plain_decimals() {
        assert_eq!(num(1.0), "1.000000");
        assert_eq!(num(-0.25), "-0.250000");
        assert_eq!(num(1e-9), "0.000000");
        assert_eq!(num(f64::INFINITY), "");
        assert_eq!(opt(None), "");
        assert_eq!(opt(Some(22.22)), "22.220000");
    }

    #[test]
    fn atomic_write_replaces_and_leaves_no_temp() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        atomic_write(&path, b"a\n").unwrap();
        atomic_write(&path, b"b\n").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"b\n");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn io_errors_name_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "").unwrap();
        let err = write_outputs(&RunMetrics::default(), &blocker.join("sub")).unwrap_err();
        assert!(err.to_string().contains("file"), "{err}");
        assert!(err.is_validation());
    }
}
