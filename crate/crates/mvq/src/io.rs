//! CSV readers and writers for quantizers, measures and result tables.
//!
//! Quantizers have one point per row and `d` columns; measures have `d + 1`
//! columns, the coordinates followed by the weight. Both carry a header row.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use mvq_core::measure::{DiscreteMeasure, MeasureView};
use mvq_core::metrics::{DensitySurface, VoronoiCell};
use mvq_core::quantization::Quantizer;

use crate::error::CliError;

fn open_reader(path: &Path) -> Result<csv::Reader<File>, CliError> {
    let f =
        File::open(path).map_err(|e| CliError::io(format!("cannot open {}", path.display()), e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(f))
}

fn create_writer(path: &Path) -> Result<csv::Writer<File>, CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::io(format!("cannot create {}", dir.display()), e))?;
    }
    let f = File::create(path)
        .map_err(|e| CliError::io(format!("cannot create {}", path.display()), e))?;
    Ok(csv::Writer::from_writer(f))
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    CliError::Format(format!("{}: {e}", path.display()))
}

/// Reads a numeric table; every row must have the same width.
fn read_rows(path: &Path) -> Result<(usize, Vec<f64>), CliError> {
    let mut rdr = open_reader(path)?;
    let width = rdr.headers().map_err(|e| csv_err(path, e))?.len();
    let mut values = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        for field in rec.iter() {
            let v: f64 = field.parse().map_err(|_| {
                CliError::Format(format!(
                    "{}: row {}: not a number: {field:?}",
                    path.display(),
                    i + 1
                ))
            })?;
            values.push(v);
        }
    }
    if width == 0 || values.is_empty() {
        return Err(CliError::Format(format!(
            "{}: no data rows",
            path.display()
        )));
    }
    Ok((width, values))
}

fn coord_headers(d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("x{i}")).collect()
}

pub fn read_quantizer(path: &Path) -> Result<Quantizer, CliError> {
    let (d, pts) = read_rows(path)?;
    Quantizer::new(d, pts).map_err(|e| CliError::Format(format!("{}: {e}", path.display())))
}

pub fn write_quantizer(path: &Path, x: &Quantizer) -> Result<(), CliError> {
    let mut w = create_writer(path)?;
    w.write_record(coord_headers(x.dim()))
        .map_err(|e| csv_err(path, e))?;
    for p in x.points().chunks_exact(x.dim()) {
        w.write_record(p.iter().map(|v| format_f64(*v)))
            .map_err(|e| csv_err(path, e))?;
    }
    flush(w, path)
}

pub fn read_measure(path: &Path) -> Result<DiscreteMeasure, CliError> {
    let (width, values) = read_rows(path)?;
    if width < 2 {
        return Err(CliError::Format(format!(
            "{}: a measure needs coordinates and a weight",
            path.display()
        )));
    }
    let d = width - 1;
    let mut atoms = Vec::with_capacity(values.len() / width * d);
    let mut weights = Vec::with_capacity(values.len() / width);
    for row in values.chunks_exact(width) {
        atoms.extend_from_slice(&row[..d]);
        weights.push(row[d]);
    }
    DiscreteMeasure::new(d, atoms, weights)
        .map_err(|e| CliError::Format(format!("{}: {e}", path.display())))
}

pub fn write_measure(path: &Path, mu: MeasureView<'_>) -> Result<(), CliError> {
    let mut w = create_writer(path)?;
    let mut header = coord_headers(mu.dim());
    header.push("weight".into());
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for (atom, weight) in mu.iter() {
        let row: Vec<String> = atom
            .iter()
            .chain(std::iter::once(&weight))
            .map(|v| format_f64(*v))
            .collect();
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    flush(w, path)
}

/// One line of a convergence table.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ConvergenceRow {
    pub sweep_value: usize,
    pub mean_error: f64,
    pub std_error: f64,
    pub reruns: usize,
}

pub fn write_convergence(path: &Path, rows: &[ConvergenceRow]) -> Result<(), CliError> {
    let mut w = create_writer(path)?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_err(path, e))?;
    }
    flush(w, path)
}

pub fn read_convergence(path: &Path) -> Result<Vec<ConvergenceRow>, CliError> {
    let mut rdr = open_reader(path)?;
    rdr.deserialize()
        .map(|r| r.map_err(|e| csv_err(path, e)))
        .collect()
}

/// `(x, y, value)` triples, x varying fastest.
pub fn write_density(path: &Path, s: &DensitySurface) -> Result<(), CliError> {
    let mut w = create_writer(path)?;
    w.write_record(["x", "y", "value"])
        .map_err(|e| csv_err(path, e))?;
    for (iy, y) in s.ys.iter().enumerate() {
        for (ix, x) in s.xs.iter().enumerate() {
            w.write_record([format_f64(*x), format_f64(*y), format_f64(s.at(ix, iy))])
                .map_err(|e| csv_err(path, e))?;
        }
    }
    flush(w, path)
}

/// First two coordinates of every atom.
pub fn write_scatter(path: &Path, mu: MeasureView<'_>) -> Result<(), CliError> {
    let mut w = create_writer(path)?;
    w.write_record(["x1", "x2", "weight"])
        .map_err(|e| csv_err(path, e))?;
    for (atom, weight) in mu.iter() {
        w.write_record([format_f64(atom[0]), format_f64(atom[1]), format_f64(weight)])
            .map_err(|e| csv_err(path, e))?;
    }
    flush(w, path)
}

/// One row per cell: site, weight, clipped area and density.
pub fn write_voronoi_cells(path: &Path, cells: &[VoronoiCell]) -> Result<(), CliError> {
    let mut w = create_writer(path)?;
    w.write_record(["x1", "x2", "weight", "area", "density"])
        .map_err(|e| csv_err(path, e))?;
    for c in cells {
        w.write_record([c.site[0], c.site[1], c.weight, c.area, c.density].map(format_f64))
            .map_err(|e| csv_err(path, e))?;
    }
    flush(w, path)
}

fn flush(mut w: csv::Writer<File>, path: &Path) -> Result<(), CliError> {
    w.flush()
        .map_err(|e| CliError::io(format!("cannot write {}", path.display()), e))
}

/// Shortest representation that parses back to the same value.
fn format_f64(v: f64) -> String {
    format!("{v:?}")
}

/// Writes `bytes` to `path` through a temporary file in the same directory,
/// so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::io(format!("cannot create {}", dir.display()), e))?;
    let name = path.file_name().and_then(|s| s.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let ctx = |what: &str| format!("cannot {what} {}", path.display());
    let mut f = File::create(&tmp).map_err(|e| CliError::io(ctx("create"), e))?;
    f.write_all(bytes)
        .map_err(|e| CliError::io(ctx("write"), e))?;
    f.sync_all().map_err(|e| CliError::io(ctx("sync"), e))?;
    drop(f);
    std::fs::rename(&tmp, path).map_err(|e| CliError::io(ctx("rename into"), e))
}
