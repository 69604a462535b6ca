//! CSV reading and writing for the pipeline's tabular artifacts.
//!
//! All files carry a header row, use `.` as the decimal separator, and end
//! lines with `\n`. Floats are written in Rust's shortest round-trip form,
//! so a file written here and read back reproduces every value bit for
//! bit.
//!
//! Target ingestion aligns scattered rows to grid nodes: rows that sit
//! exactly on nodes are taken verbatim, anything else is binned to the
//! nearest node (with a warning), and grid nodes that end up with no row
//! at all are an error — silently zero-filling a target would corrupt
//! every inner product downstream.

use std::io::Write;
use std::path::Path;

use frameforge_core::quadrature::Grid;

/// Errors with a named, checkable shape; IO and parse errors ride on
/// `anyhow` at the call sites.
#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error("schema mismatch: expected columns {expected}, got {got}")]
    SchemaMismatch { expected: String, got: String },
    #[error("{missing} grid nodes received no sample row")]
    MissingNodes { missing: usize },
    #[error("row {row}: {message}")]
    BadRow { row: usize, message: String },
}

/// Write the residual curve as `N,residual,bound`. The bound column is the
/// rate envelope `l1·(N+1)^{-1/2}` and stays empty when no coefficient
/// mass is known.
pub fn write_curve(
    path: &Path,
    curve: &[(usize, f64)],
    l1_bound: Option<f64>,
) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["N", "residual", "bound"])?;
    for &(n, r) in curve {
        let bound = l1_bound
            .map(|l1| format!("{}", l1 / ((n + 1) as f64).sqrt()))
            .unwrap_or_default();
        w.write_record([n.to_string(), format!("{r}"), bound])?;
    }
    w.flush()?;
    Ok(())
}

/// Column names `x_1..x_d` for a point file.
fn coord_headers(dim: usize) -> Vec<String> {
    (1..=dim).map(|i| format!("x_{i}")).collect()
}

/// Read a point file: header `x_1..x_d`, one point per row.
pub fn read_points(path: &Path) -> anyhow::Result<(usize, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path)?;
    let headers: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let dim = headers.len();
    let expected = coord_headers(dim);
    if dim == 0 || dim > 3 || headers != expected {
        return Err(CsvError::SchemaMismatch {
            expected: "x_1..x_d for d in 1..=3".into(),
            got: headers.join(","),
        }
        .into());
    }
    let mut points = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() != dim {
            return Err(CsvError::SchemaMismatch {
                expected: format!("{dim} columns"),
                got: format!("{} columns in row {}", rec.len(), i + 1),
            }
            .into());
        }
        let mut p = Vec::with_capacity(dim);
        for field in rec.iter() {
            p.push(parse_float(field, i + 1)?);
        }
        points.push(p);
    }
    Ok((dim, points))
}

/// Read point/value rows (`x_1..x_d,value`) without grid alignment.
pub fn read_points_with_values(path: &Path) -> anyhow::Result<(usize, Vec<(Vec<f64>, f64)>)> {
    let mut r = csv::Reader::from_path(path)?;
    let headers: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if headers.len() < 2 || headers.last().map(String::as_str) != Some("value") {
        return Err(CsvError::SchemaMismatch {
            expected: "x_1..x_d,value".into(),
            got: headers.join(","),
        }
        .into());
    }
    let dim = headers.len() - 1;
    let mut expected = coord_headers(dim);
    expected.push("value".into());
    if headers != expected {
        return Err(CsvError::SchemaMismatch {
            expected: expected.join(","),
            got: headers.join(","),
        }
        .into());
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() != dim + 1 {
            return Err(CsvError::SchemaMismatch {
                expected: format!("{} columns", dim + 1),
                got: format!("{} columns in row {}", rec.len(), i + 1),
            }
            .into());
        }
        let mut p = Vec::with_capacity(dim);
        for field in rec.iter().take(dim) {
            p.push(parse_float(field, i + 1)?);
        }
        let v = parse_float(rec.get(dim).unwrap(), i + 1)?;
        rows.push((p, v));
    }
    Ok((dim, rows))
}

/// Point/value pairs as CSV text: columns `x_1..x_d,value`.
pub fn values_csv(dim: usize, points: &[Vec<f64>], values: &[f64]) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut headers = coord_headers(dim);
    headers.push("value".into());
    w.write_record(&headers)?;
    for (p, v) in points.iter().zip(values.iter()) {
        let mut rec: Vec<String> = p.iter().map(|c| format!("{c}")).collect();
        rec.push(format!("{v}"));
        w.write_record(&rec)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// Write point/value pairs to a file.
pub fn write_values(
    path: &Path,
    dim: usize,
    points: &[Vec<f64>],
    values: &[f64],
) -> anyhow::Result<()> {
    std::fs::write(path, values_csv(dim, points, values)?)?;
    Ok(())
}

fn parse_float(field: &str, row: usize) -> anyhow::Result<f64> {
    field.trim().parse::<f64>().map_err(|_| {
        CsvError::BadRow {
            row,
            message: format!("not a number: {field:?}"),
        }
        .into()
    })
}

/// Index of the nearest grid axis node to `v` (axis nodes are sorted).
fn nearest_axis_index(axis: &[f64], v: f64) -> usize {
    let mut lo = 0usize;
    let mut hi = axis.len();
    while lo < hi {
        let mid = (lo + hi) / 2;
        if axis[mid] < v {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    // lo is the first node ≥ v; the nearest is lo or its left neighbor.
    if lo == 0 {
        0
    } else if lo == axis.len() {
        axis.len() - 1
    } else if (v - axis[lo - 1]).abs() <= (axis[lo] - v).abs() {
        lo - 1
    } else {
        lo
    }
}

/// Read a target function from CSV (`x_1..x_d,value`) and align it to the
/// grid.
///
/// Rows whose coordinates equal grid nodes exactly are taken as-is; other
/// rows are binned to the nearest node (rows landing on the same node are
/// averaged) and a warning is printed to stderr. Nodes that receive no
/// row at all are [`CsvError::MissingNodes`].
pub fn ingest_target_csv(path: &Path, grid: &Grid) -> anyhow::Result<Vec<f64>> {
    let mut r = csv::Reader::from_path(path)?;
    let headers: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let mut expected = coord_headers(grid.dim);
    expected.push("value".into());
    if headers != expected {
        return Err(CsvError::SchemaMismatch {
            expected: expected.join(","),
            got: headers.join(","),
        }
        .into());
    }
    let d = grid.dim;
    let mut sums = vec![0.0f64; grid.len()];
    let mut counts = vec![0u32; grid.len()];
    let mut scattered = 0usize;
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() != d + 1 {
            return Err(CsvError::SchemaMismatch {
                expected: format!("{} columns", d + 1),
                got: format!("{} columns in row {}", rec.len(), i + 1),
            }
            .into());
        }
        let mut coords = [0.0f64; 3];
        for (ax, field) in rec.iter().take(d).enumerate() {
            coords[ax] = parse_float(field, i + 1)?;
        }
        let value = parse_float(rec.get(d).unwrap(), i + 1)?;
        // Flat index from per-axis nearest nodes (the grid is a tensor
        // product in axis-0-major order).
        let n = grid.points_per_axis;
        let mut flat = 0usize;
        let mut exact = true;
        for ax in 0..d {
            let j = nearest_axis_index(&grid.axis_nodes, coords[ax]);
            if grid.axis_nodes[j] != coords[ax] {
                exact = false;
            }
            flat = flat * n + j;
        }
        if !exact {
            scattered += 1;
        }
        sums[flat] += value;
        counts[flat] += 1;
    }
    if scattered > 0 {
        eprintln!(
            "warning: {scattered} rows were not exactly on grid nodes and were binned to the nearest node"
        );
    }
    let missing = counts.iter().filter(|&&c| c == 0).count();
    if missing > 0 {
        return Err(CsvError::MissingNodes { missing }.into());
    }
    Ok(sums
        .iter()
        .zip(counts.iter())
        .map(|(&s, &c)| s / c as f64)
        .collect())
}

/// Write arbitrary text with a trailing newline (JSON reports go through
/// here so every artifact ends the same way).
pub fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    if !text.ends_with('\n') {
        f.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use frameforge_core::quadrature::QuadRule;

    fn grid_1d(n: usize) -> Grid {
        Grid::new(1, 2.0, n, QuadRule::Midpoint).unwrap()
    }

    #[test]
    fn exact_node_rows_reproduce_samples_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let grid = grid_1d(16);
        let samples: Vec<f64> = (0..grid.len())
            .map(|i| (i as f64 * 0.7305).sin() / 3.0)
            .collect();
        let path = dir.path().join("target.csv");
        let mut text = String::from("x_1,value\n");
        for i in 0..grid.len() {
            text.push_str(&format!("{},{}\n", grid.node(i)[0], samples[i]));
        }
        std::fs::write(&path, text).unwrap();
        let back = ingest_target_csv(&path, &grid).unwrap();
        assert_eq!(back, samples, "shortest round-trip floats must come back bit-equal");
    }

    #[test]
    fn scattered_rows_bin_to_the_nearest_node_and_average() {
        let dir = tempfile::tempdir().unwrap();
        let grid = grid_1d(8);
        let path = dir.path().join("scattered.csv");
        // Cover every node exactly, then two extra rows near node 0 that
        // must average with its exact row.
        let mut text = String::from("x_1,value\n");
        for i in 0..grid.len() {
            text.push_str(&format!("{},1.0\n", grid.node(i)[0]));
        }
        let x0 = grid.node(0)[0];
        text.push_str(&format!("{},4.0\n", x0 + 1e-4));
        text.push_str(&format!("{},4.0\n", x0 - 1e-4));
        std::fs::write(&path, text).unwrap();
        let back = ingest_target_csv(&path, &grid).unwrap();
        assert_eq!(back[0], 3.0, "node 0 should average its three rows");
        assert!(back[1..].iter().all(|&v| v == 1.0));
    }

    #[test]
    fn a_row_short_of_full_coverage_is_missing_nodes() {
        let dir = tempfile::tempdir().unwrap();
        let grid = grid_1d(8);
        let path = dir.path().join("short.csv");
        let mut text = String::from("x_1,value\n");
        for i in 0..grid.len() - 1 {
            text.push_str(&format!("{},1.0\n", grid.node(i)[0]));
        }
        std::fs::write(&path, text).unwrap();
        let err = ingest_target_csv(&path, &grid).unwrap_err();
        let e = err.downcast_ref::<CsvError>().expect("typed error");
        assert!(matches!(e, CsvError::MissingNodes { missing: 1 }), "got {e}");
    }

    #[test]
    fn wrong_columns_are_a_schema_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let grid = grid_1d(8);
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "x,y,value\n0,0,1\n").unwrap();
        let err = ingest_target_csv(&path, &grid).unwrap_err();
        assert!(
            matches!(err.downcast_ref::<CsvError>(), Some(CsvError::SchemaMismatch { .. })),
            "got {err}"
        );
    }

    #[test]
    fn the_curve_file_carries_the_envelope_only_when_known() {
        let dir = tempfile::tempdir().unwrap();
        let curve = vec![(1usize, 0.5f64), (2, 0.25)];
        let with = dir.path().join("with.csv");
        write_curve(&with, &curve, Some(2.0)).unwrap();
        let text = std::fs::read_to_string(&with).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("N,residual,bound"));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row[0], "1");
        assert_eq!(row[2].parse::<f64>().unwrap(), 2.0 / 2f64.sqrt());

        let without = dir.path().join("without.csv");
        write_curve(&without, &curve, None).unwrap();
        let text = std::fs::read_to_string(&without).unwrap();
        assert!(
            text.lines().nth(1).unwrap().ends_with(','),
            "no mass, empty bound column: {text}"
        );
    }

    #[test]
    fn points_and_values_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let pts = vec![vec![0.1, -0.2], vec![0.3, 0.4]];
        let vals = vec![1.5, -2.5];
        let path = dir.path().join("vals.csv");
        write_values(&path, 2, &pts, &vals).unwrap();
        let (dim, rows) = read_points_with_values(&path).unwrap();
        assert_eq!(dim, 2);
        assert_eq!(rows[0], (vec![0.1, -0.2], 1.5));
        assert_eq!(rows[1], (vec![0.3, 0.4], -2.5));
    }
}
