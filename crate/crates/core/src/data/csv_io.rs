//! Trial CSV storage.
//!
//! `<name>.csv` has a header row of the input channel names (16 reduced or
//! 27 full, in layout order) followed by `vgrf_n`, `torque_nmkg`, `stance`
//! and `stride_start`, then one row per 100 Hz sample. `stance` and
//! `stride_start` are `0`/`1`. Values are written at single precision.
//!
//! `<name>.meta` holds `key=value` lines: `participant_id`, `trial_id`,
//! `mass_kg`, `speed_mps`, `population` (`healthy`/`post-stroke`) and an
//! optional `condition` (`SWS`/`CWS`/`FWS`).

use std::path::{Path, PathBuf};

use super::channels::ChannelLayout;
use super::trial::{GaitTrial, Population, SpeedCondition, TrialMeta};
use super::DataError;

const TARGET_COLUMNS: [&str; 4] = ["vgrf_n", "torque_nmkg", "stance", "stride_start"];

pub fn meta_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta")
}

pub fn save_trial_csv(trial: &GaitTrial, path: impl AsRef<Path>) -> Result<(), DataError> {
    let path = path.as_ref();
    trial.validate()?;
    let mut w = csv::Writer::from_path(path).map_err(|e| DataError::io(path, e))?;
    let header: Vec<&str> = trial.layout.names().iter().copied().chain(TARGET_COLUMNS).collect();
    w.write_record(&header).map_err(|e| DataError::io(path, e))?;
    let mut starts = trial.stride_starts.iter().peekable();
    let mut row: Vec<String> = Vec::with_capacity(header.len());
    for i in 0..trial.len() {
        row.clear();
        row.extend(trial.inputs.iter().map(|c| (c[i] as f32).to_string()));
        row.push((trial.vgrf_n[i] as f32).to_string());
        row.push((trial.torque[i] as f32).to_string());
        row.push(u8::from(trial.stance[i]).to_string());
        let is_start = starts.next_if_eq(&&i).is_some();
        row.push(u8::from(is_start).to_string());
        w.write_record(&row).map_err(|e| DataError::io(path, e))?;
    }
    w.flush().map_err(|e| DataError::io(path, e))?;

    let m = &trial.meta;
    let mut meta = format!(
        "participant_id={}\ntrial_id={}\nmass_kg={}\nspeed_mps={}\npopulation={}\n",
        m.participant_id,
        m.trial_id,
        m.mass_kg,
        m.speed_mps,
        m.population.as_str()
    );
    if let Some(c) = m.condition {
        meta.push_str(&format!("condition={}\n", c.as_str()));
    }
    let mp = meta_path(path);
    std::fs::write(&mp, meta).map_err(|e| DataError::io(&mp, e))
}

fn parse_meta(text: &str, path: &Path) -> Result<TrialMeta, DataError> {
    let mut fields = std::collections::BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| DataError::Parse { line: i + 1, msg: format!("{}: expected key=value", path.display()) })?;
        fields.insert(k.trim().to_string(), (i + 1, v.trim().to_string()));
    }
    let get = |k: &str| {
        fields
            .get(k)
            .cloned()
            .ok_or_else(|| DataError::Schema(format!("{}: missing metadata key '{k}'", path.display())))
    };
    let num = |k: &str| -> Result<f64, DataError> {
        let (line, v) = get(k)?;
        v.parse::<f64>().map_err(|e| DataError::Parse { line, msg: format!("{k}: {e}") })
    };
    let (pline, pop) = get("population")?;
    let population = pop.parse::<Population>().map_err(|e| DataError::Parse { line: pline, msg: e.to_string() })?;
    let condition = match fields.get("condition") {
        Some((line, c)) => {
            Some(c.parse::<SpeedCondition>().map_err(|e| DataError::Parse { line: *line, msg: e.to_string() })?)
        }
        None => None,
    };
    let participant_id = get("participant_id")?.1;
    let trial_id = fields.get("trial_id").map(|(_, v)| v.clone()).unwrap_or_else(|| participant_id.clone());
    let mass_kg = num("mass_kg")?;
    if !(mass_kg > 0.0) {
        return Err(DataError::Invalid(format!("mass_kg must be > 0, got {mass_kg}")));
    }
    Ok(TrialMeta { participant_id, trial_id, mass_kg, speed_mps: num("speed_mps")?, condition, population })
}

fn check_header(header: &csv::StringRecord) -> Result<ChannelLayout, DataError> {
    let layout = if header.get(0) == Some(ChannelLayout::Full27.names()[0]) {
        ChannelLayout::Full27
    } else {
        ChannelLayout::Reduced16
    };
    let expected: Vec<&str> = layout.names().iter().copied().chain(TARGET_COLUMNS).collect();
    for (i, name) in expected.iter().enumerate() {
        match header.get(i) {
            Some(h) if h == *name => {}
            Some(h) if header.iter().any(|x| x == *name) => {
                return Err(DataError::Schema(format!("column {} is '{h}', expected '{name}'", i + 1)))
            }
            _ => return Err(DataError::Schema(format!("missing column '{name}'"))),
        }
    }
    if header.len() > expected.len() {
        return Err(DataError::Schema(format!(
            "unexpected extra column '{}'",
            header.get(expected.len()).unwrap_or_default()
        )));
    }
    Ok(layout)
}

pub fn load_trial_csv(path: impl AsRef<Path>) -> Result<GaitTrial, DataError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| DataError::io(path, e))?;
    let mut r = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(file);
    let mut records = r.records();
    let header = match records.next() {
        None => return Err(DataError::Parse { line: 1, msg: "empty file".into() }),
        Some(rec) => rec.map_err(|e| DataError::Parse { line: 1, msg: e.to_string() })?,
    };
    let layout = check_header(&header)?;
    let n_ch = layout.len();
    let mut inputs = vec![Vec::new(); n_ch];
    let (mut vgrf_n, mut torque, mut stance, mut stride_starts) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (i, rec) in records.enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| DataError::Parse { line, msg: e.to_string() })?;
        if rec.len() != n_ch + TARGET_COLUMNS.len() {
            return Err(DataError::Parse {
                line,
                msg: format!("{} fields, expected {}", rec.len(), n_ch + TARGET_COLUMNS.len()),
            });
        }
        let val = |j: usize| -> Result<f64, DataError> {
            let s = rec.get(j).unwrap_or_default().trim();
            s.parse::<f64>().map_err(|e| DataError::Parse { line, msg: format!("column {}: '{s}': {e}", j + 1) })
        };
        let flag = |j: usize| -> Result<bool, DataError> {
            match rec.get(j).unwrap_or_default().trim() {
                "0" => Ok(false),
                "1" => Ok(true),
                s => Err(DataError::Parse { line, msg: format!("column {}: expected 0 or 1, got '{s}'", j + 1) }),
            }
        };
        for (c, ch) in inputs.iter_mut().enumerate() {
            ch.push(val(c)?);
        }
        vgrf_n.push(val(n_ch)?);
        torque.push(val(n_ch + 1)?);
        stance.push(flag(n_ch + 2)?);
        if flag(n_ch + 3)? {
            stride_starts.push(i);
        }
    }
    let mp = meta_path(path);
    let meta_text = std::fs::read_to_string(&mp).map_err(|e| DataError::io(&mp, e))?;
    let meta = parse_meta(&meta_text, &mp)?;
    let trial = GaitTrial { layout, inputs, vgrf_n, torque, stance, stride_starts, meta };
    trial.validate()?;
    Ok(trial)
}

/// Loads every `*.csv` trial in `dir`, sorted by file name.
pub fn load_trial_dir(dir: impl AsRef<Path>) -> Result<Vec<GaitTrial>, DataError> {
    let dir = dir.as_ref();
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| DataError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    paths.iter().map(load_trial_csv).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{ingest, synth_generate, IngestOptions, PopulationSpec};

    fn sample_trial() -> GaitTrial {
        let spec = PopulationSpec { participants: 1, ..PopulationSpec::post_stroke().with_trials(1, 8.0) };
        let raw = synth_generate(&spec, 4).unwrap().remove(0);
        ingest(&raw, &IngestOptions::default()).unwrap()
    }

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-5 * x.abs().max(1.0))
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        let t = sample_trial();
        save_trial_csv(&t, &p).unwrap();
        let u = load_trial_csv(&p).unwrap();
        assert_eq!(u.layout, t.layout);
        assert_eq!(u.meta, t.meta);
        assert_eq!(u.stance, t.stance);
        assert_eq!(u.stride_starts, t.stride_starts);
        assert!(close(&u.torque, &t.torque));
        assert!(close(&u.vgrf_n, &t.vgrf_n));
        for (a, b) in u.inputs.iter().zip(&t.inputs) {
            assert!(close(a, b));
        }
    }

    #[test]
    fn missing_column_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        save_trial_csv(&sample_trial(), &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap().replacen("torque_nmkg", "torque", 1);
        std::fs::write(&p, text).unwrap();
        match load_trial_csv(&p) {
            Err(DataError::Schema(m)) => assert!(m.contains("torque_nmkg"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_file_fails_at_line_one() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.csv");
        std::fs::write(&p, "").unwrap();
        assert!(matches!(load_trial_csv(&p), Err(DataError::Parse { line: 1, .. })));
    }

    #[test]
    fn bad_number_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        save_trial_csv(&sample_trial(), &p).unwrap();
        let mut lines: Vec<String> = std::fs::read_to_string(&p).unwrap().lines().map(String::from).collect();
        lines[4] = lines[4].replacen(|c: char| c.is_ascii_digit(), "x", 1);
        std::fs::write(&p, lines.join("\n")).unwrap();
        assert!(matches!(load_trial_csv(&p), Err(DataError::Parse { line: 5, .. })));
    }
}
