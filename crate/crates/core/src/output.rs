//! Sweep output: CSV, JSON and a dependency-free SVG plot.
//!
//! CSV numbers use 17 significant digits in scientific notation, so every
//! `f64` survives a write/read round trip exactly. Rows that failed carry
//! `NaN` in the `ser` column; their notes are not part of the CSV contract.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::experiments::{Method, SweepRow};
use crate::ser::ModulationScheme;

pub const CSV_HEADER: &str =
    "scheme,method,snr_db,distance_m,jitter,ser,half_width,a_param,b_param";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
    SvgPlot,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            "svg_plot" | "svg" => Ok(Self::SvgPlot),
            other => Err(format!(
                "unknown format `{other}` (expected csv, json or svg_plot)"
            )),
        }
    }
}

/// Format a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.scheme,
            r.method,
            fmt_f64(r.snr_db),
            fmt_f64(r.distance_m),
            fmt_f64(r.jitter),
            fmt_f64(r.ser),
            fmt_f64(r.half_width),
            fmt_f64(r.a_param),
            fmt_f64(r.b_param),
        );
    }
    out
}

/// Parse CSV produced by [`to_csv`]. Notes are not stored in CSV and come
/// back as `None`.
pub fn from_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => {
            return Err(Error::Io(format!(
                "unexpected CSV header {:?}",
                other.unwrap_or("")
            )))
        }
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, line)| {
            let bad = |msg: String| Error::Io(format!("CSV line {}: {msg}", i + 2));
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 9 {
                return Err(bad(format!("expected 9 fields, got {}", f.len())));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("`{s}`: {e}")));
            Ok(SweepRow {
                scheme: f[0].parse::<ModulationScheme>().map_err(bad)?,
                method: f[1].parse::<Method>().map_err(bad)?,
                snr_db: num(f[2])?,
                distance_m: num(f[3])?,
                jitter: num(f[4])?,
                ser: num(f[5])?,
                half_width: num(f[6])?,
                a_param: num(f[7])?,
                b_param: num(f[8])?,
                note: None,
            })
        })
        .collect()
}

/// JSON array of row objects. Non-finite numbers become `null`.
pub fn to_json(rows: &[SweepRow]) -> Result<String> {
    let mut s = serde_json::to_string_pretty(rows).map_err(|e| Error::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

type GroupKey = (ModulationScheme, Method, u64, u64);

fn group_key(r: &SweepRow) -> GroupKey {
    (
        r.scheme,
        r.method,
        r.distance_m.to_bits(),
        r.jitter.to_bits(),
    )
}

/// Log-scale SER vs SNR plot: one polyline per (scheme, method, distance,
/// jitter) group that has at least one positive finite SER, plus a legend.
pub fn to_svg(rows: &[SweepRow]) -> String {
    const W: f64 = 900.0;
    const H: f64 = 600.0;
    const LEFT: f64 = 80.0;
    const RIGHT: f64 = 260.0;
    const TOP: f64 = 30.0;
    const BOTTOM: f64 = 60.0;

    // groups in first-appearance order
    let mut groups: Vec<(GroupKey, Vec<(f64, f64)>)> = Vec::new();
    for r in rows {
        let key = group_key(r);
        let idx = match groups.iter().position(|(k, _)| *k == key) {
            Some(i) => i,
            None => {
                groups.push((key, Vec::new()));
                groups.len() - 1
            }
        };
        if r.ser.is_finite() && r.ser > 0.0 && r.snr_db.is_finite() {
            groups[idx].1.push((r.snr_db, r.ser.log10()));
        }
    }
    groups.retain(|(_, pts)| !pts.is_empty());

    let all = groups.iter().flat_map(|(_, p)| p.iter());
    let (mut x0, mut x1, mut y0) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
    }
    if !x0.is_finite() {
        (x0, x1) = (0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    let y_lo = y0.floor().min(-1.0);
    let y_hi = 0.0;
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * (W - LEFT - RIGHT);
    let py = |y: f64| TOP + (y_hi - y) / (y_hi - y_lo) * (H - TOP - BOTTOM);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r##"<rect x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="none" stroke="#000"/>"##,
        W - LEFT - RIGHT,
        H - TOP - BOTTOM
    );
    // decade grid on the SER axis
    let decades = (y_hi - y_lo) as i64;
    let label_every = (decades / 12 + 1).max(1);
    for k in 0..=decades {
        let y = y_hi - k as f64;
        let yy = py(y);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{yy:.2}" x2="{:.2}" y2="{yy:.2}" stroke="#ddd"/>"##,
            W - RIGHT
        );
        if k % label_every == 0 {
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{}</text>"#,
                LEFT - 6.0,
                yy + 4.0,
                y as i64
            );
        }
    }
    for k in 0..=5 {
        let x = x0 + (x1 - x0) * k as f64 / 5.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{x:.1}</text>"#,
            px(x),
            H - BOTTOM + 18.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">average SNR (dB)</text>"#,
        LEFT + 0.5 * (W - LEFT - RIGHT),
        H - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">average SER</text>"#,
        TOP + 0.5 * (H - TOP - BOTTOM),
        TOP + 0.5 * (H - TOP - BOTTOM)
    );

    for (i, ((scheme, method, d, j), pts)) in groups.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let dash = match method {
            Method::ClosedForm => "",
            Method::QuadratureExact => r#" stroke-dasharray="6 3""#,
            Method::McSymbol => r#" stroke-dasharray="2 2""#,
            Method::McSemi => r#" stroke-dasharray="8 3 2 3""#,
        };
        let coords: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
            coords.join(" ")
        );
        let ly = TOP + 10.0 + 16.0 * i as f64;
        let lx = W - RIGHT + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="1.5"{dash}/>"#,
            lx + 24.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}">{scheme} {method} d={} j={}</text>"#,
            lx + 30.0,
            ly + 4.0,
            f64::from_bits(*d),
            f64::from_bits(*j)
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn render(rows: &[SweepRow], format: OutputFormat) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::Io("no rows to write".into()));
    }
    match format {
        OutputFormat::Csv => Ok(to_csv(rows)),
        OutputFormat::Json => to_json(rows),
        OutputFormat::SvgPlot => Ok(to_svg(rows)),
    }
}

/// Render `rows` and write them to `path`.
pub fn emit_rows(rows: &[SweepRow], format: OutputFormat, path: &Path) -> Result<()> {
    let text = render(rows, format)?;
    let mut f =
        std::fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    f.write_all(text.as_bytes())
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{run_sweep, SweepSpec};

    fn rows() -> Vec<SweepRow> {
        let spec = SweepSpec {
            snr_grid: (0..=20).map(|i| 3.0 * i as f64).collect(),
            jitter_values: vec![0.01],
            methods: vec![Method::ClosedForm, Method::QuadratureExact],
            ..SweepSpec::default()
        };
        run_sweep(&spec).unwrap()
    }

    #[test]
    fn csv_line_count_and_round_trip() {
        let r = rows();
        let csv = to_csv(&r);
        assert_eq!(csv.lines().count(), 253);
        assert!(!csv.contains('\r'));
        let back = from_csv(&csv).unwrap();
        assert_eq!(back, r);
        assert_eq!(to_csv(&back), csv);
    }

    #[test]
    fn nan_survives_csv() {
        let mut r = rows();
        r[3].ser = f64::NAN;
        let back = from_csv(&to_csv(&r)).unwrap();
        assert!(back[3].ser.is_nan());
        assert_eq!(to_csv(&back), to_csv(&r));
    }

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(0.1).parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn json_has_all_fields() {
        let r = rows();
        let v: serde_json::Value = serde_json::from_str(&to_json(&r[..2]).unwrap()).unwrap();
        let obj = v[0].as_object().unwrap();
        for k in CSV_HEADER.split(',') {
            assert!(obj.contains_key(k), "{k}");
        }
        assert_eq!(v[0]["scheme"], "bpsk");
        assert_eq!(v[0]["method"], "closed_form");
    }

    #[test]
    fn svg_polyline_per_curve() {
        let r: Vec<SweepRow> = rows()
            .into_iter()
            .filter(|r| r.distance_m == 50.0 && r.scheme == ModulationScheme::Bpsk)
            .collect();
        let svg = to_svg(&r);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("bpsk closed_form d=50 j=0.01"));
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    }

    #[test]
    fn empty_rows_rejected() {
        assert!(render(&[], OutputFormat::Csv).is_err());
    }
}
