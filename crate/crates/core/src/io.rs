//! Plain-text formats for contact maps, matrices, filters and diagrams.
//!
//! Floats are written with Rust's shortest round-trip formatting, so writing
//! the same values twice yields identical bytes and reading them back is exact.

use std::fmt::Write as _;
use std::io::BufRead;

use crate::bootstrap::ConfidenceReport;
use crate::error::{Error, Result};
use crate::ingest::ContactMap;
use crate::persistence::{DiagramPoint, ExtendedDiagram, PointKind};
use crate::scc::SquareMatrix;
use crate::spectral::FilterValues;

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn read_lines<R: BufRead>(reader: R) -> Result<Vec<String>> {
    reader
        .lines()
        .enumerate()
        .map(|(i, l)| l.map_err(|e| parse_err(i + 1, e.to_string())))
        .collect()
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    match s.trim() {
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        t => t.parse::<f64>().map_err(|_| parse_err(line, format!("not a number: {t:?}"))),
    }
}

/// `n_bins=<n> bin_size=<b>` header, then `i<TAB>j<TAB>value` for stored
/// entries with `i <= j`.
pub fn write_coo(map: &ContactMap) -> String {
    let mut out = format!("n_bins={} bin_size={}\n", map.n_bins(), map.bin_size());
    for (i, j, v) in map.upper_entries() {
        let _ = writeln!(out, "{i}\t{j}\t{v}");
    }
    out
}

pub fn read_coo<R: BufRead>(reader: R) -> Result<ContactMap> {
    let lines = read_lines(reader)?;
    let header = lines.first().ok_or_else(|| parse_err(1, "missing header"))?;
    let mut n_bins = None;
    let mut bin_size = None;
    for token in header.split_whitespace() {
        match token.split_once('=') {
            Some(("n_bins", v)) => n_bins = v.parse::<usize>().ok(),
            Some(("bin_size", v)) => bin_size = v.parse::<u64>().ok(),
            _ => return Err(parse_err(1, format!("unexpected header token {token:?}"))),
        }
    }
    let (Some(n_bins), Some(bin_size)) = (n_bins, bin_size) else {
        return Err(parse_err(1, "header must be `n_bins=<n> bin_size=<b>`"));
    };
    let mut map = ContactMap::new(n_bins, bin_size)?;
    for (idx, line) in lines.iter().enumerate().skip(1) {
        let line_no = idx + 1;
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 3 {
            return Err(parse_err(line_no, "expected i, j, value"));
        }
        let i = f[0].parse::<usize>().map_err(|_| parse_err(line_no, "bad row index"))?;
        let j = f[1].parse::<usize>().map_err(|_| parse_err(line_no, "bad column index"))?;
        if i > j {
            return Err(parse_err(line_no, "entries must satisfy i <= j"));
        }
        let v = parse_f64(f[2], line_no)?;
        map.set(i, j, v).map_err(|e| parse_err(line_no, e.to_string()))?;
    }
    Ok(map)
}

/// Dense comma-separated matrix without header.
pub fn write_dense_csv(map: &ContactMap) -> String {
    let n = map.n_bins();
    let mut out = String::new();
    for i in 0..n {
        let row: Vec<String> = (0..n).map(|j| map.get(i, j).to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Header `sample_id,<id_1>,...,<id_n>`, then one row per sample led by its id.
pub fn write_matrix_csv(ids: &[String], m: &SquareMatrix) -> Result<String> {
    if ids.len() != m.n() {
        return Err(Error::Dimension(format!("{} ids for a {}x{} matrix", ids.len(), m.n(), m.n())));
    }
    let mut out = format!("sample_id,{}\n", ids.join(","));
    for (i, id) in ids.iter().enumerate() {
        out.push_str(id);
        for v in m.row(i) {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn read_matrix_csv<R: BufRead>(reader: R) -> Result<(Vec<String>, SquareMatrix)> {
    let lines = read_lines(reader)?;
    let header = lines.first().ok_or_else(|| parse_err(1, "missing header"))?;
    let mut cols = header.split(',');
    if cols.next() != Some("sample_id") {
        return Err(parse_err(1, "header must start with sample_id"));
    }
    let ids: Vec<String> = cols.map(str::to_string).collect();
    let n = ids.len();
    let rows: Vec<&String> = lines[1..].iter().filter(|l| !l.is_empty()).collect();
    if rows.len() != n {
        return Err(parse_err(lines.len(), format!("{} rows for {n} samples", rows.len())));
    }
    let mut values = Vec::with_capacity(n * n);
    for (i, row) in rows.iter().enumerate() {
        let line_no = i + 2;
        let f: Vec<&str> = row.split(',').collect();
        if f.len() != n + 1 {
            return Err(parse_err(line_no, format!("expected {} fields", n + 1)));
        }
        if f[0] != ids[i] {
            return Err(parse_err(line_no, format!("row id {:?} does not match header id {:?}", f[0], ids[i])));
        }
        for v in &f[1..] {
            values.push(parse_f64(v, line_no)?);
        }
    }
    Ok((ids, SquareMatrix::from_row_major(n, values)?))
}

/// Header `sample_id,f_1,...,f_p`, one row per sample, then a trailing
/// `#eigenvalues,...` line when eigenvalues are known.
pub fn write_filters_csv(ids: &[String], f: &FilterValues) -> Result<String> {
    if ids.len() != f.n_samples() {
        return Err(Error::Dimension(format!("{} ids for {} filter rows", ids.len(), f.n_samples())));
    }
    let names: Vec<String> = (1..=f.p()).map(|s| format!("f_{s}")).collect();
    let mut out = format!("sample_id,{}\n", names.join(","));
    for (i, id) in ids.iter().enumerate() {
        out.push_str(id);
        for v in f.row(i) {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    if !f.eigenvalues.is_empty() {
        out.push_str("#eigenvalues");
        for v in &f.eigenvalues {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn read_filters_csv<R: BufRead>(reader: R) -> Result<(Vec<String>, FilterValues)> {
    let lines = read_lines(reader)?;
    let header = lines.first().ok_or_else(|| parse_err(1, "missing header"))?;
    let p = header.split(',').count().saturating_sub(1);
    if !header.starts_with("sample_id,") || p == 0 {
        return Err(parse_err(1, "header must be sample_id,f_1,...,f_p"));
    }
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    let mut eigenvalues = Vec::new();
    for (idx, line) in lines.iter().enumerate().skip(1) {
        let line_no = idx + 1;
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f[0] == "#eigenvalues" {
            eigenvalues = f[1..].iter().map(|v| parse_f64(v, line_no)).collect::<Result<_>>()?;
            continue;
        }
        if f.len() != p + 1 {
            return Err(parse_err(line_no, format!("expected {} fields", p + 1)));
        }
        ids.push(f[0].to_string());
        rows.push(f[1..].iter().map(|v| parse_f64(v, line_no)).collect::<Result<Vec<_>>>()?);
    }
    let mut values = FilterValues::from_rows(&rows)?;
    values.eigenvalues = eigenvalues;
    Ok((ids, values))
}

/// `kind,birth,death,size`, one row per point.
pub fn write_diagram_csv(d: &ExtendedDiagram) -> String {
    let mut out = String::from("kind,birth,death,size\n");
    for p in &d.points {
        let _ = writeln!(out, "{},{},{},{}", p.kind.name(), p.birth, p.death, p.size());
    }
    out
}

pub fn read_diagram_csv<R: BufRead>(reader: R, coordinate: usize) -> Result<ExtendedDiagram> {
    let lines = read_lines(reader)?;
    if lines.first().map(String::as_str) != Some("kind,birth,death,size") {
        return Err(parse_err(1, "header must be kind,birth,death,size"));
    }
    let mut points = Vec::new();
    for (idx, line) in lines.iter().enumerate().skip(1) {
        let line_no = idx + 1;
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            return Err(parse_err(line_no, "expected kind,birth,death,size"));
        }
        let kind = PointKind::parse(f[0]).ok_or_else(|| parse_err(line_no, format!("unknown kind {:?}", f[0])))?;
        points.push(DiagramPoint::new(kind, parse_f64(f[1], line_no)?, parse_f64(f[2], line_no)?));
    }
    Ok(ExtendedDiagram::new(coordinate, points))
}

/// Diagram points annotated with bootstrap confidence, for plotting.
pub fn write_confidence_csv(report: &ConfidenceReport) -> String {
    let mut out = String::from("coordinate,kind,birth,death,size,confidence,significant,d_c\n");
    for p in &report.per_point {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            p.coordinate + 1,
            p.point.kind.name(),
            p.point.birth,
            p.point.death,
            p.size,
            p.confidence,
            p.significant,
            report.d_c
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn coo_layout() {
        let mut m = ContactMap::new(4, 500_000).unwrap();
        m.set(2, 1, 3.0).unwrap();
        m.set(0, 0, 0.25).unwrap();
        assert_eq!(write_coo(&m), "n_bins=4 bin_size=500000\n0\t0\t0.25\n1\t2\t3\n");
        assert!(read_coo("n_bins=4\n".as_bytes()).is_err());
        assert!(matches!(read_coo("n_bins=4 bin_size=1\n2\t1\t1\n".as_bytes()), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn matrix_csv_rejects_mismatched_ids() {
        let text = "sample_id,a,b\na,0,1\nc,1,0\n";
        assert!(matches!(read_matrix_csv(text.as_bytes()), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn filters_keep_eigenvalues() {
        let f = {
            let mut f = FilterValues::from_rows(&[vec![1.5, -2.0], vec![0.1, 3.0]]).unwrap();
            f.eigenvalues = vec![4.0, 1.0];
            f
        };
        let ids = vec!["x".to_string(), "y".to_string()];
        let text = write_filters_csv(&ids, &f).unwrap();
        assert!(text.ends_with("#eigenvalues,4,1\n"));
        let (rids, rf) = read_filters_csv(text.as_bytes()).unwrap();
        assert_eq!((rids, rf), (ids, f));
    }

    proptest! {
        #[test]
        fn coo_round_trip(entries in proptest::collection::vec((0usize..20, 0usize..20, 0.0f64..1e6), 0..60)) {
            let mut m = ContactMap::new(20, 1000).unwrap();
            for (i, j, v) in entries { m.set(i, j, v).unwrap(); }
            let text = write_coo(&m);
            let back = read_coo(text.as_bytes()).unwrap();
            prop_assert_eq!(&back, &m);
            prop_assert_eq!(write_coo(&back), text);
        }

        #[test]
        fn diagram_round_trip(points in proptest::collection::vec((0usize..4, -1e3f64..1e3, -1e3f64..1e3), 0..30)) {
            let d = ExtendedDiagram::new(1, points.iter().map(|&(k, b, e)| DiagramPoint::new(PointKind::ALL[k], b, e)).collect());
            let back = read_diagram_csv(write_diagram_csv(&d).as_bytes(), 1).unwrap();
            prop_assert_eq!(back, d);
        }

        #[test]
        fn matrix_round_trip(n in 1usize..6, seed in proptest::collection::vec(0.0f64..10.0, 36)) {
            let m = SquareMatrix::from_row_major(n, seed[..n * n].to_vec()).unwrap();
            let ids: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
            let (rids, rm) = read_matrix_csv(write_matrix_csv(&ids, &m).unwrap().as_bytes()).unwrap();
            prop_assert_eq!(rids, ids);
            prop_assert_eq!(rm, m);
        }
    }
}
