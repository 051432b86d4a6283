//! Emitter and seed lists as CSV.
//!
//! Ground truth uses `frame,id,x_nm,y_nm,z_nm,photons`. Decoded seeds carry
//! `photons = -1` and three feature columns `peak_mag,sharpness,dispersion`.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::codec::{LocalizationSet, Seed};
use crate::error::{Error, FormatError, Result};
use crate::sim::{Emitter, EmitterSet};

pub const EMITTER_HEADER: &str = "frame,id,x_nm,y_nm,z_nm,photons";
pub const SEED_HEADER: &str = "frame,id,x_nm,y_nm,z_nm,photons,peak_mag,sharpness,dispersion";

/// Canonical float text: the value rounded to 9 significant digits, written
/// in plain decimal notation without trailing zeros.
pub fn format_float(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() { "nan".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.8e}", v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let point = exp + 1;
    let (int, frac) = if point <= 0 {
        ("0".to_string(), "0".repeat((-point) as usize) + &digits)
    } else if point as usize >= digits.len() {
        (digits.clone() + &"0".repeat(point as usize - digits.len()), String::new())
    } else {
        (digits[..point as usize].to_string(), digits[point as usize..].to_string())
    };
    let frac = frac.trim_end_matches('0');
    if frac.is_empty() {
        format!("{sign}{int}")
    } else {
        format!("{sign}{int}.{frac}")
    }
}

/// Rows of either layout. `features` is `None` for ground-truth rows.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Row {
    frame: u64,
    id: u64,
    x: f64,
    y: f64,
    z: f64,
    photons: f64,
    features: Option<(f64, f64, f64)>,
}

fn parse_rows<R: Read>(r: R) -> Result<Vec<Row>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(r);
    let mut records = reader.records();
    let header = match records.next() {
        None => return Err(FormatError::BadHeader { line: 1, expected: EMITTER_HEADER.into() }.into()),
        Some(rec) => rec.map_err(|e| csv_error(1, e))?,
    };
    let header: Vec<&str> = header.iter().collect();
    let n_fields = if header.join(",") == EMITTER_HEADER {
        6
    } else if header.join(",") == SEED_HEADER {
        9
    } else {
        return Err(FormatError::BadHeader {
            line: 1,
            expected: format!("{EMITTER_HEADER}` or `{SEED_HEADER}"),
        }
        .into());
    };

    let mut rows = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| csv_error(0, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != n_fields {
            return Err(FormatError::FieldCount {
                line,
                expected: n_fields,
                found: rec.len(),
            }
            .into());
        }
        let int = |k: usize| -> Result<u64> {
            rec[k].trim().parse().map_err(|e| parse_error(line, &header[k], &rec[k], e))
        };
        let float = |k: usize| -> Result<f64> {
            rec[k].trim().parse().map_err(|e| parse_error(line, &header[k], &rec[k], e))
        };
        rows.push(Row {
            frame: int(0)?,
            id: int(1)?,
            x: float(2)?,
            y: float(3)?,
            z: float(4)?,
            photons: float(5)?,
            features: if n_fields == 9 { Some((float(6)?, float(7)?, float(8)?)) } else { None },
        });
    }
    Ok(rows)
}

fn parse_error(line: u64, column: &str, text: &str, e: impl std::fmt::Display) -> Error {
    FormatError::Parse {
        line,
        reason: format!("column {column}: {text:?}: {e}"),
    }
    .into()
}

fn csv_error(line: u64, e: csv::Error) -> Error {
    let line = e.position().map_or(line, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io("<csv>", io),
        other => FormatError::Parse {
            line,
            reason: format!("{other:?}"),
        }
        .into(),
    }
}

/// Ground-truth sets grouped by frame, in ascending frame order. Seed files
/// are accepted too; their feature columns are ignored.
pub fn read_emitters<R: Read>(r: R) -> Result<Vec<EmitterSet>> {
    let mut frames: BTreeMap<u64, Vec<Emitter>> = BTreeMap::new();
    for row in parse_rows(r)? {
        frames.entry(row.frame).or_default().push(Emitter {
            id: row.id,
            x: row.x,
            y: row.y,
            z: row.z,
            photons: row.photons,
        });
    }
    Ok(frames.into_iter().map(|(f, e)| EmitterSet::new(f, e)).collect())
}

/// Seeds in file order. Ground-truth files are accepted; their seeds get
/// NaN features, which filtering scores as worst.
pub fn read_seeds<R: Read>(r: R) -> Result<LocalizationSet> {
    Ok(parse_rows(r)?
        .into_iter()
        .map(|row| {
            let (peak_magnitude, peak_sharpness, phase_dispersion) = row.features.unwrap_or((f64::NAN, f64::NAN, f64::NAN));
            Seed {
                frame_id: row.frame,
                x: row.x,
                y: row.y,
                z: row.z,
                peak_magnitude,
                peak_sharpness,
                phase_dispersion,
            }
        })
        .collect())
}

pub fn write_emitters<W: Write>(mut w: W, sets: &[EmitterSet]) -> std::io::Result<()> {
    writeln!(w, "{EMITTER_HEADER}")?;
    for set in sets {
        for e in &set.emitters {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                set.frame_id,
                e.id,
                format_float(e.x),
                format_float(e.y),
                format_float(e.z),
                format_float(e.photons)
            )?;
        }
    }
    w.flush()
}

/// Seed ids count up from 0 within each frame.
pub fn write_seeds<W: Write>(mut w: W, seeds: &LocalizationSet) -> std::io::Result<()> {
    writeln!(w, "{SEED_HEADER}")?;
    let mut ids: BTreeMap<u64, u64> = BTreeMap::new();
    for s in &seeds.seeds {
        let id = ids.entry(s.frame_id).or_default();
        writeln!(
            w,
            "{},{},{},{},{},-1,{},{},{}",
            s.frame_id,
            id,
            format_float(s.x),
            format_float(s.y),
            format_float(s.z),
            format_float(s.peak_magnitude),
            format_float(s.peak_sharpness),
            format_float(s.phase_dispersion)
        )?;
        *id += 1;
    }
    w.flush()
}

fn open(path: &Path) -> Result<std::io::BufReader<std::fs::File>> {
    Ok(std::io::BufReader::new(std::fs::File::open(path).map_err(|e| Error::io(path, e))?))
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    Ok(std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?))
}

pub fn load_emitters(path: &Path) -> Result<Vec<EmitterSet>> {
    read_emitters(open(path)?)
}

pub fn load_seeds(path: &Path) -> Result<LocalizationSet> {
    read_seeds(open(path)?)
}

pub fn save_emitters(path: &Path, sets: &[EmitterSet]) -> Result<()> {
    write_emitters(create(path)?, sets).map_err(|e| Error::io(path, e))
}

pub fn save_seeds(path: &Path, seeds: &LocalizationSet) -> Result<()> {
    write_seeds(create(path)?, seeds).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting() {
        let cases = [
            (0.0, "0"),
            (-0.0, "0"),
            (1.0, "1"),
            (-2.5, "-2.5"),
            (1234.5678, "1234.5678"),
            (0.1 + 0.2, "0.3"),
            (1.0 / 3.0, "0.333333333"),
            (123456789012.0, "123456789000"),
            (1.5e-7, "0.00000015"),
            (2012.123456789, "2012.12346"),
            (-1.0, "-1"),
        ];
        for (v, s) in cases {
            assert_eq!(format_float(v), s, "{v}");
        }
    }

    #[test]
    fn header_only_is_empty() {
        assert!(read_emitters(format!("{EMITTER_HEADER}\n").as_bytes()).unwrap().is_empty());
        assert!(read_seeds(format!("{SEED_HEADER}\n").as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn emitters_round_trip() {
        let text = format!("{EMITTER_HEADER}\n0,0,1.5,2,-300,5000\n0,1,10,20,30,4000.25\n3,0,0.000001,7,0,1\n");
        let sets = read_emitters(text.as_bytes()).unwrap();
        assert_eq!(sets.len(), 2);
        assert_eq!(sets[1].frame_id, 3);
        let mut out = Vec::new();
        write_emitters(&mut out, &sets).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), text);
    }

    #[test]
    fn seeds_round_trip() {
        let text = format!("{SEED_HEADER}\n2,0,1.5,2,-300,-1,0.9,0.5,0.01\n2,1,3,4,5,-1,1,1,0\n");
        let seeds = read_seeds(text.as_bytes()).unwrap();
        assert_eq!(seeds.len(), 2);
        let mut out = Vec::new();
        write_seeds(&mut out, &seeds).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), text);
    }

    #[test]
    fn write_is_idempotent_after_rounding() {
        let sets = vec![EmitterSet::new(
            0,
            vec![Emitter {
                id: 0,
                x: std::f64::consts::PI * 1000.0,
                y: 1.0 / 7.0,
                z: -123.456789123,
                photons: 4999.999999999,
            }],
        )];
        let mut a = Vec::new();
        write_emitters(&mut a, &sets).unwrap();
        let mut b = Vec::new();
        write_emitters(&mut b, &read_emitters(a.as_slice()).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn malformed_inputs() {
        let wrong_header = "frame,id,x,y,z,photons\n";
        assert!(matches!(read_emitters(wrong_header.as_bytes()), Err(Error::Format(FormatError::BadHeader { line: 1, .. }))));
        assert!(matches!(read_emitters("".as_bytes()), Err(Error::Format(FormatError::BadHeader { .. }))));
        let short = format!("{EMITTER_HEADER}\n0,0,1,2,3,4\n0,1,1,2,3\n");
        assert_eq!(
            read_emitters(short.as_bytes()).unwrap_err().to_string(),
            "line 3: expected 6 fields, found 5"
        );
        let bad = format!("{EMITTER_HEADER}\n0,0,1,two,3,4\n");
        match read_emitters(bad.as_bytes()) {
            Err(Error::Format(FormatError::Parse { line: 2, reason })) => assert!(reason.contains("y_nm")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn gt_file_read_as_seeds_has_nan_features() {
        let s = read_seeds(format!("{EMITTER_HEADER}\n0,0,1,2,3,4\n").as_bytes()).unwrap();
        assert!(s.seeds[0].peak_magnitude.is_nan());
    }
}
