//! CSV and JSON exchange formats. Every CSV starts with a header row naming
//! the unit of each column.

use std::io::{Read, Write};

use serde::Serialize;

use crate::capacity::IsoperimetricProfile;
use crate::error::{invalid, Error, Result};
use crate::metric::{sphere_area, DistanceField, GrowthProfile, GrowthSample, TauRun};
use crate::quad::PowerFit;

pub const GROWTH_HEADER: [&str; 3] = ["r [length]", "v [volume]", "S [area]"];
pub const PROFILE_HEADER: [&str; 2] = ["v [volume]", "P [area]"];

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(false).from_writer(w)
}

fn fmt(v: f64) -> String {
    format!("{v:.12e}")
}

pub fn write_growth_csv<W: Write>(profile: &GrowthProfile, w: W) -> Result<()> {
    let mut out = writer(w);
    out.write_record(GROWTH_HEADER)?;
    for s in &profile.samples {
        out.write_record([fmt(s.r), fmt(s.v), fmt(s.s)])?;
    }
    out.flush()?;
    Ok(())
}

fn numeric_rows<R: Read>(r: R, min_cols: usize) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(r);
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            rec.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(v) => {
                if v.len() < min_cols {
                    return Err(Error::Parse {
                        line: i + 1,
                        column: 1,
                        message: format!("expected at least {min_cols} columns, found {}", v.len()),
                    });
                }
                rows.push(v);
            }
            // a non-numeric first row is the header
            Err(_) if rows.is_empty() && i == 0 => continue,
            Err(e) => {
                return Err(Error::Parse {
                    line: i + 1,
                    column: 1,
                    message: e.to_string(),
                })
            }
        }
    }
    Ok(rows)
}

/// Reads `r, v[, S]` rows; a missing area column is derived from `v`.
pub fn read_growth_csv<R: Read>(r: R, m: usize) -> Result<GrowthProfile> {
    let rows = numeric_rows(r, 2)?;
    if rows.is_empty() {
        return invalid("growth file has no samples");
    }
    let has_area = rows.iter().all(|row| row.len() >= 3);
    let samples: Vec<GrowthSample> = if has_area {
        rows.iter()
            .map(|row| GrowthSample {
                r: row[0],
                v: row[1],
                s: row[2],
            })
            .collect()
    } else {
        let rv: Vec<(f64, f64)> = rows.iter().map(|row| (row[0], row[1])).collect();
        rows.iter()
            .map(|row| {
                Ok(GrowthSample {
                    r: row[0],
                    v: row[1],
                    s: sphere_area(&rv, row[0])?,
                })
            })
            .collect::<Result<_>>()?
    };
    GrowthProfile::sampled(samples, m)
}

pub fn write_profile_csv<W: Write>(profile: &IsoperimetricProfile, w: W) -> Result<()> {
    let mut out = writer(w);
    out.write_record(PROFILE_HEADER)?;
    for &(v, p) in &profile.samples {
        out.write_record([fmt(v), fmt(p)])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_profile_csv<R: Read>(r: R, provenance: &str) -> Result<IsoperimetricProfile> {
    let rows = numeric_rows(r, 2)?;
    IsoperimetricProfile::new(
        rows.iter().map(|row| (row[0], row[1])).collect(),
        provenance,
    )
}

/// Node coordinates followed by the distance, one row per node.
pub fn write_distance_csv<W: Write>(
    dist: &DistanceField,
    coordinates: &[String],
    w: W,
) -> Result<()> {
    let chart = dist.chart();
    if coordinates.len() != chart.dim() {
        return invalid("one coordinate name per chart axis is required");
    }
    let mut out = writer(w);
    let mut header: Vec<String> = coordinates
        .iter()
        .map(|c| format!("{c} [coordinate]"))
        .collect();
    header.push("distance [length]".into());
    out.write_record(&header)?;
    let mut x = vec![0.0; chart.dim()];
    for (i, &d) in dist.values().iter().enumerate() {
        chart.node_coords_into(i, &mut x);
        let mut row: Vec<String> = x.iter().map(|v| fmt(*v)).collect();
        row.push(fmt(d));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// `(label, [(x, y)])` series written as `x,label_1,label_2,…` over a shared abscissa.
pub fn write_series_csv<W: Write>(
    x_label: &str,
    x: &[f64],
    series: &[(String, Vec<f64>)],
    w: W,
) -> Result<()> {
    if series.iter().any(|(_, ys)| ys.len() != x.len()) {
        return invalid("every series needs one value per abscissa");
    }
    let mut out = writer(w);
    let mut header = vec![x_label.to_string()];
    header.extend(series.iter().map(|(l, _)| l.clone()));
    out.write_record(&header)?;
    for (i, xv) in x.iter().enumerate() {
        let mut row = vec![fmt(*xv)];
        row.extend(series.iter().map(|(_, ys)| fmt(ys[i])));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct DistanceMetadata {
    pub structure: String,
    pub origin: Vec<f64>,
    pub tau_schedule: Vec<f64>,
    pub resolution: Vec<usize>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub runs: Vec<TauRun>,
    pub unconverged_fraction: f64,
    pub warnings: Vec<String>,
}

impl DistanceMetadata {
    pub fn new(structure: &str, dist: &DistanceField) -> Self {
        let chart = dist.chart();
        Self {
            structure: structure.to_string(),
            origin: dist.origin().to_vec(),
            tau_schedule: dist.tau_schedule().to_vec(),
            resolution: chart.resolution().to_vec(),
            lower: chart.lower().to_vec(),
            upper: chart.upper().to_vec(),
            runs: dist.runs().to_vec(),
            unconverged_fraction: dist.unconverged_fraction(),
            warnings: dist.warnings().to_vec(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthMetadata {
    #[serde(flatten)]
    pub distance: DistanceMetadata,
    pub m: usize,
    pub power_fit: Option<PowerFit>,
}

pub fn write_json<W: Write, T: Serialize>(value: &T, mut w: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    Ok(())
}
