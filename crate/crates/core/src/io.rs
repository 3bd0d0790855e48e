//! File formats: field snapshots, diagnostics, transport and fit tables,
//! fit reports and PPM images.
//!
//! Floats are written with Rust's shortest round-trip formatting, so every
//! value read back is bit-identical to the one written.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{GridSpec, ScalarField2D};
use crate::fit::{DataPoint, FitResult};
use crate::solver::Diagnostic;
use crate::transport::TransportRecord;

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn csv_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// First line `nx,ny,h`, then `ny` rows of `nx` values.
pub fn format_field(f: &ScalarField2D) -> String {
    let spec = f.spec();
    let mut s = String::with_capacity(spec.len() * 20);
    let _ = writeln!(s, "{},{},{}", spec.nx, spec.ny, spec.h);
    for row in f.values().chunks(spec.nx) {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            let _ = write!(s, "{v}");
        }
        s.push('\n');
    }
    s
}

pub fn parse_field(text: &str, path: &Path) -> Result<ScalarField2D> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, head) = lines.next().ok_or_else(|| csv_err(path, 1, "empty field file"))?;
    let parts: Vec<&str> = head.split(',').map(str::trim).collect();
    let bad_head = || csv_err(path, 1, format!("expected header 'nx,ny,h', got '{head}'"));
    if parts.len() != 3 {
        return Err(bad_head());
    }
    let nx: usize = parts[0].parse().map_err(|_| bad_head())?;
    let ny: usize = parts[1].parse().map_err(|_| bad_head())?;
    let h: f64 = parts[2].parse().map_err(|_| bad_head())?;
    let spec = GridSpec::new(nx, ny, h).map_err(|e| csv_err(path, 1, e.to_string()))?;

    let mut values = Vec::with_capacity(spec.len());
    let mut rows = 0;
    for (idx, line) in lines {
        let lineno = idx + 1;
        rows += 1;
        if rows > ny {
            return Err(csv_err(path, lineno, format!("more than ny = {ny} rows")));
        }
        let before = values.len();
        for tok in line.split(',') {
            let v: f64 = tok
                .trim()
                .parse()
                .map_err(|_| csv_err(path, lineno, format!("bad value '{}'", tok.trim())))?;
            values.push(v);
        }
        if values.len() - before != nx {
            return Err(csv_err(
                path,
                lineno,
                format!("expected {nx} values, got {}", values.len() - before),
            ));
        }
    }
    if rows != ny {
        return Err(csv_err(path, text.lines().count(), format!("expected {ny} rows, got {rows}")));
    }
    ScalarField2D::new(spec, values).map_err(|e| csv_err(path, 1, e.to_string()))
}

pub fn write_field(path: &Path, f: &ScalarField2D) -> Result<()> {
    write_text(path, &format_field(f))
}

pub fn read_field(path: &Path) -> Result<ScalarField2D> {
    parse_field(&read_text(path)?, path)
}

/// `snap_t<time>.csv`, keyed by the requested time.
pub fn snapshot_file_name(time: f64) -> String {
    format!("snap_t{time}.csv")
}

/// Inverse of [`snapshot_file_name`].
pub fn snapshot_time_from_name(path: &Path) -> Option<f64> {
    path.file_name()?
        .to_str()?
        .strip_prefix("snap_t")?
        .strip_suffix(".csv")?
        .parse()
        .ok()
}

/// Snapshot files in `dir`, sorted by time.
pub fn list_snapshots(dir: &Path) -> Result<Vec<(f64, PathBuf)>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if let Some(t) = snapshot_time_from_name(&path) {
            out.push((t, path));
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(out)
}

pub const DIAGNOSTICS_HEADER: &str = "step,time,mass,free_energy,min,max";

pub fn format_diagnostics(diags: &[Diagnostic]) -> String {
    let mut s = String::from(DIAGNOSTICS_HEADER);
    s.push('\n');
    for d in diags {
        let _ = writeln!(s, "{},{},{},{},{},{}", d.step, d.time, d.mass, d.free_energy, d.min, d.max);
    }
    s
}

/// Reads a headed numeric table, checking the header names.
fn read_table(path: &Path, header: &[&str]) -> Result<Vec<(usize, csv::StringRecord)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => csv_err(path, 1, format!("{other:?}")),
        })?;
    let found = rdr.headers().map_err(|e| csv_err(path, 1, e.to_string()))?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(csv_err(
            path,
            1,
            format!("expected header '{}', got '{}'", header.join(","), found.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            csv_err(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        rows.push((line, rec));
    }
    Ok(rows)
}

fn field_f64(path: &Path, line: usize, rec: &csv::StringRecord, k: usize, name: &str) -> Result<f64> {
    rec.get(k)
        .and_then(|s| s.parse::<f64>().ok())
        .filter(|v| v.is_finite())
        .ok_or_else(|| csv_err(path, line, format!("bad {name} '{}'", rec.get(k).unwrap_or(""))))
}

fn read_numeric(path: &Path, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    read_table(path, header)?
        .into_iter()
        .map(|(line, rec)| {
            (0..header.len())
                .map(|k| field_f64(path, line, &rec, k, header[k]))
                .collect()
        })
        .collect()
}

pub const TRANSPORT_HEADER: [&str; 5] = ["label", "d_m", "Rs_ohm_sq", "Tc_K", "hall_slope_ohm_per_T"];

pub fn read_transport(path: &Path) -> Result<Vec<TransportRecord>> {
    read_table(path, &TRANSPORT_HEADER)?
        .into_iter()
        .map(|(line, rec)| {
            let num = |k: usize| field_f64(path, line, &rec, k, TRANSPORT_HEADER[k]);
            Ok(TransportRecord {
                label: rec[0].to_string(),
                d: num(1)?,
                r_s: num(2)?,
                t_c: num(3)?,
                hall_slope: num(4)?,
            })
        })
        .collect()
}

fn pairs(rows: Vec<Vec<f64>>) -> Vec<(f64, f64)> {
    rows.into_iter().map(|r| (r[0], r[1])).collect()
}

/// `T_K,R_ohm`, sorted by temperature on return.
pub fn read_rt_trace(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut v = pairs(read_numeric(path, &["T_K", "R_ohm"])?);
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(v)
}

/// `muH_T,Rxy_ohm` pairs for a Hall slope fit.
pub fn read_hall_sweep(path: &Path) -> Result<Vec<(f64, f64)>> {
    Ok(pairs(read_numeric(path, &["muH_T", "Rxy_ohm"])?))
}

/// `T_K,muH_T`.
pub fn read_hc2(path: &Path) -> Result<Vec<(f64, f64)>> {
    Ok(pairs(read_numeric(path, &["T_K", "muH_T"])?))
}

/// `T_K,sigma`.
pub fn read_sigma(path: &Path) -> Result<Vec<(f64, f64)>> {
    Ok(pairs(read_numeric(path, &["T_K", "sigma"])?))
}

/// `f_Hz,re_S21,im_S21`, returned as points of the inverse transmission.
pub fn read_s21(path: &Path) -> Result<Vec<DataPoint>> {
    read_numeric(path, &["f_Hz", "re_S21", "im_S21"])?
        .into_iter()
        .enumerate()
        .map(|(k, r)| {
            let s21 = Complex64::new(r[1], r[2]);
            if s21.norm() == 0.0 {
                return Err(csv_err(path, k + 2, "S21 = 0 cannot be inverted"));
            }
            Ok(DataPoint::complex(r[0], s21.inv()))
        })
        .collect()
}

pub fn format_s21(points: &[(f64, Complex64)]) -> String {
    let mut s = String::from("f_Hz,re_S21,im_S21\n");
    for (f, z) in points {
        let _ = writeln!(s, "{f},{},{}", z.re, z.im);
    }
    s
}

pub fn format_pairs(header: &str, points: &[(f64, f64)]) -> String {
    let mut s = format!("{header}\n");
    for (x, y) in points {
        let _ = writeln!(s, "{x},{y}");
    }
    s
}

/// Aligned human-readable parameter table.
pub fn format_fit_table(r: &FitResult) -> String {
    let stderr = r.stderr();
    let mut s = format!("model: {}\n", r.model);
    let _ = writeln!(s, "{:<12} {:>16} {:>14}  unit", "parameter", "value", "stderr");
    for k in 0..r.params.len() {
        let _ = writeln!(
            s,
            "{:<12} {:>16.9e} {:>14.4e}  {}",
            r.names[k], r.params[k], stderr[k], r.units[k]
        );
    }
    let _ = writeln!(s, "R^2 = {}", r.r_squared);
    let _ = writeln!(s, "rss = {:e}", r.rss);
    let _ = writeln!(s, "iterations = {}, converged = {}", r.iterations, r.converged);
    for w in &r.warnings {
        let _ = writeln!(s, "warning: {w}");
    }
    s
}

/// `name,value,stderr`, followed by goodness-of-fit rows.
pub fn format_fit_csv(r: &FitResult) -> String {
    let stderr = r.stderr();
    let mut s = String::from("name,value,stderr\n");
    for k in 0..r.params.len() {
        let _ = writeln!(s, "{},{},{}", r.names[k], r.params[k], stderr[k]);
    }
    let _ = writeln!(s, "R2,{},", r.r_squared);
    let _ = writeln!(s, "rss,{},", r.rss);
    let _ = writeln!(s, "iterations,{},", r.iterations);
    let _ = writeln!(s, "converged,{},", u8::from(r.converged));
    s
}

/// Red for Al-rich (x = 0), green for Ti-rich (x = 1).
pub fn pixel(x: f64) -> [u8; 3] {
    let t = if x.is_nan() { 0.0 } else { x.clamp(0.0, 1.0) };
    let q = |v: f64| (255.0 * v + 0.5).floor() as u8;
    [q(1.0 - t), q(t), 0]
}

/// Binary P6 image, one pixel per cell, row `j = 0` at the top.
pub fn ppm_bytes(f: &ScalarField2D) -> Vec<u8> {
    let spec = f.spec();
    let mut out = format!("P6\n{} {}\n255\n", spec.nx, spec.ny).into_bytes();
    out.reserve(3 * spec.len());
    for &v in f.values() {
        out.extend_from_slice(&pixel(v));
    }
    out
}

pub fn render_ppm(f: &ScalarField2D, path: &Path) -> Result<()> {
    fs::write(path, ppm_bytes(f)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::gaussian_field;
    use proptest::prelude::*;

    #[test]
    fn pixel_mapping() {
        assert_eq!(pixel(1.0), [0, 255, 0]);
        assert_eq!(pixel(0.0), [255, 0, 0]);
        assert_eq!(pixel(0.5), [128, 128, 0]);
        assert_eq!(pixel(1.7), [0, 255, 0]);
        assert_eq!(pixel(-0.2), [255, 0, 0]);
    }

    #[test]
    fn ppm_layout() {
        let spec = GridSpec::new(5, 4, 1.0).unwrap();
        let f = ScalarField2D::constant(spec, 1.0);
        let bytes = ppm_bytes(&f);
        let head = b"P6\n5 4\n255\n";
        assert_eq!(&bytes[..head.len()], head);
        assert_eq!(bytes.len(), head.len() + 60);
        assert!(bytes[head.len()..].chunks(3).all(|p| p == [0, 255, 0]));
    }

    #[test]
    fn field_round_trip_is_exact() {
        let f = gaussian_field(GridSpec::new(16, 8, 0.25).unwrap(), 0.48, 1e-3, 3).unwrap();
        let g = parse_field(&format_field(&f), Path::new("mem")).unwrap();
        assert_eq!(f.spec(), g.spec());
        assert!(f.values().iter().zip(g.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn malformed_fields_report_lines() {
        let p = Path::new("f.csv");
        let cases = [
            ("", 1),
            ("4,4\n", 1),
            ("4,4,1\n1,2,3,4\n1,2,3\n", 3),
            ("4,4,1\n1,2,3,4\n1,2,x,4\n", 3),
        ];
        for (text, line) in cases {
            match parse_field(text, p) {
                Err(Error::Csv { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
        assert!(parse_field("4,4,1\n1,2,3,4\n", p).is_err());
    }

    #[test]
    fn snapshot_names() {
        assert_eq!(snapshot_file_name(0.0), "snap_t0.csv");
        assert_eq!(snapshot_file_name(10.0), "snap_t10.csv");
        assert_eq!(snapshot_file_name(2.5), "snap_t2.5.csv");
        assert_eq!(snapshot_time_from_name(Path::new("a/snap_t2.5.csv")), Some(2.5));
        assert_eq!(snapshot_time_from_name(Path::new("a/diagnostics.csv")), None);
    }

    #[test]
    fn tables_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("rt.csv");
        let pts = vec![(3.3, 120.5), (3.1, 0.0), (3.2, 60.000000000000007)];
        write_text(&p, &format_pairs("T_K,R_ohm", &pts)).unwrap();
        let back = read_rt_trace(&p).unwrap();
        assert_eq!(back, vec![pts[1], pts[2], pts[0]]);

        let t = dir.path().join("t.csv");
        write_text(&t, "label,d_m,Rs_ohm_sq,Tc_K,hall_slope_ohm_per_T\nTAN,1e-7,132.3,3.2,3.9e-3\n").unwrap();
        let recs = read_transport(&t).unwrap();
        assert_eq!(recs[0].label, "TAN");
        assert_eq!(recs[0].r_s, 132.3);

        write_text(&t, "label,d,Rs\nTAN,1,2\n").unwrap();
        assert!(matches!(read_transport(&t), Err(Error::Csv { line: 1, .. })));
        write_text(&t, "T_K,R_ohm\n1,2\n3,abc\n").unwrap();
        assert!(matches!(read_rt_trace(&t), Err(Error::Csv { line: 3, .. })));
        assert!(matches!(read_rt_trace(&dir.path().join("missing.csv")), Err(Error::Io { .. })));
    }

    #[test]
    fn s21_is_inverted_on_read() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        let z = Complex64::new(0.3, -0.4);
        write_text(&p, &format_s21(&[(6e9, z)])).unwrap();
        let pts = read_s21(&p).unwrap();
        assert!((pts[0].y * z - 1.0).norm() < 1e-15);
    }

    proptest! {
        #[test]
        fn any_finite_value_round_trips(vals in proptest::collection::vec(-1e300f64..1e300, 16)) {
            let f = ScalarField2D::new(GridSpec::square(4).unwrap(), vals).unwrap();
            let g = parse_field(&format_field(&f), Path::new("mem")).unwrap();
            prop_assert!(f.values().iter().zip(g.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
        }
    }
}
