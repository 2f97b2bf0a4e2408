//! CSV and SVG emission. Numbers are printed like C's `%.15g` so files are
//! byte-stable across runs and locales.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use crate::CliError;

/// `x` with `prec` significant digits in the style of C's `%.{prec}g`.
pub fn fmt_g(x: f64, prec: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let prec = prec.max(1);
    let sci = format!("{:.*e}", prec - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= prec as i32 {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (prec as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn g15(x: f64) -> String {
    fmt_g(x, 15)
}

/// Header plus rows of preformatted fields.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        w.into_inner().map_err(|e| CliError::numerical(format!("csv buffer: {e}")))
    }
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::usage(format!("csv: {e}"))
}

/// Writes to `path`, or to standard output when no path is given.
pub fn emit(bytes: &[u8], path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| CliError::usage(format!("cannot write {}: {e}", p.display()))),
        None => io::stdout()
            .lock()
            .write_all(bytes)
            .map_err(|e| CliError::usage(format!("cannot write to stdout: {e}"))),
    }
}

/// Numeric CSV: a header and rows of floats, all of equal width.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericCsv {
    pub header: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

pub fn read_numeric_csv(path: &Path) -> Result<NumericCsv, CliError> {
    let bad = |msg: String| CliError::usage(format!("{}: {msg}", path.display()));
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| bad(e.to_string()))?;
    let header: Vec<String> = r.headers().map_err(|e| bad(e.to_string()))?.iter().map(String::from).collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(bad("empty file".into()));
    }
    let mut columns = vec![Vec::new(); header.len()];
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        for (col, field) in columns.iter_mut().zip(rec.iter()) {
            let v = field.parse().map_err(|_| bad(format!("row {}: '{field}' is not a number", i + 2)))?;
            col.push(v);
        }
    }
    if columns[0].is_empty() {
        return Err(bad("no data rows".into()));
    }
    Ok(NumericCsv { header, columns })
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
const W: f64 = 720.0;
const H: f64 = 450.0;
const MARGIN: f64 = 60.0;

/// Series are grouped by the part of the column name before `_`
/// (`x1_0, x1_1` share a colour); the first column is the abscissa.
pub fn svg_plot(data: &NumericCsv) -> Result<String, CliError> {
    if data.header.len() < 2 {
        return Err(CliError::usage("plot needs at least two columns".into()));
    }
    let xs = &data.columns[0];
    let ys = &data.columns[1..];
    let finite = |v: &&f64| v.is_finite();
    let range = |vals: &mut dyn Iterator<Item = &f64>| {
        vals.filter(finite).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    };
    let (x0, x1) = widen(range(&mut xs.iter()));
    let (y0, y1) = widen(range(&mut ys.iter().flatten()));
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
    let py = |y: f64| H - MARGIN - (y - y0) / (y1 - y0) * (H - 2.0 * MARGIN);

    let mut groups: Vec<String> = Vec::new();
    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#).unwrap();
    writeln!(s, r#"<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * MARGIN,
        H - 2.0 * MARGIN
    )
    .unwrap();
    for (name, col) in data.header[1..].iter().zip(ys) {
        let group = name.split('_').next().unwrap_or(name).to_string();
        let gi = groups.iter().position(|g| *g == group).unwrap_or_else(|| {
            groups.push(group);
            groups.len() - 1
        });
        let pts: Vec<String> = xs
            .iter()
            .zip(col)
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|(&x, &y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        writeln!(
            s,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.2" points="{}"/>"#,
            PALETTE[gi % PALETTE.len()],
            pts.join(" ")
        )
        .unwrap();
    }
    let label = |s: &mut String, x: f64, y: f64, anchor: &str, text: &str| {
        writeln!(s, r#"<text x="{x:.2}" y="{y:.2}" font-family="sans-serif" font-size="12" text-anchor="{anchor}">{text}</text>"#)
            .unwrap();
    };
    label(&mut s, MARGIN, H - MARGIN + 16.0, "middle", &fmt_g(x0, 4));
    label(&mut s, W - MARGIN, H - MARGIN + 16.0, "middle", &fmt_g(x1, 4));
    label(&mut s, MARGIN - 6.0, H - MARGIN + 4.0, "end", &fmt_g(y0, 4));
    label(&mut s, MARGIN - 6.0, MARGIN + 4.0, "end", &fmt_g(y1, 4));
    label(&mut s, W / 2.0, H - 15.0, "middle", &escape(&data.header[0]));
    let ylabel = groups.iter().map(|g| escape(g)).collect::<Vec<_>>().join(", ");
    writeln!(
        s,
        r#"<text x="18" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 18 {:.2})">{ylabel}</text>"#,
        H / 2.0,
        H / 2.0
    )
    .unwrap();
    for (i, g) in groups.iter().enumerate() {
        let y = MARGIN + 14.0 + 16.0 * i as f64;
        writeln!(
            s,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{}" stroke-width="2"/>"#,
            W - MARGIN - 70.0,
            y - 4.0,
            W - MARGIN - 50.0,
            y - 4.0,
            PALETTE[i % PALETTE.len()]
        )
        .unwrap();
        label(&mut s, W - MARGIN - 45.0, y, "start", &escape(g));
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn widen((lo, hi): (f64, f64)) -> (f64, f64) {
    if !lo.is_finite() || !hi.is_finite() {
        (0.0, 1.0)
    } else if hi - lo <= f64::EPSILON * lo.abs().max(1.0) {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
