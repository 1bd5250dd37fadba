//! Log-log SVG rendering of `T,k,delta` files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{CliError, CliResult};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 120.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

/// Series keyed by `(block, k)`; blocks are delimited by `# block=` comment lines.
pub type SeriesMap = BTreeMap<(usize, usize), Vec<(u64, f64)>>;

pub fn read_delta_csv(text: &str, path: &Path) -> CliResult<SeriesMap> {
    let mut out = SeriesMap::new();
    let mut block = 0;
    let mut seen_block = false;
    for (i, line) in text.lines().enumerate() {
        let malformed = |msg: String| CliError::Malformed { path: path.to_path_buf(), line: i + 1, msg };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with("# block=") {
            if seen_block {
                block += 1;
            }
            seen_block = true;
            continue;
        }
        if line.starts_with('#') || line == "T,k,delta" {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(malformed(format!("expected T,k,delta, found {} fields", fields.len())));
        }
        let t: u64 = fields[0].trim().parse().map_err(|_| malformed(format!("bad T `{}`", fields[0])))?;
        let k: usize = fields[1].trim().parse().map_err(|_| malformed(format!("bad k `{}`", fields[1])))?;
        let d: f64 = fields[2].trim().parse().map_err(|_| malformed(format!("bad delta `{}`", fields[2])))?;
        out.entry((block, k)).or_default().push((t, d));
    }
    Ok(out)
}

fn decade_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let (lo, hi) = (lo.log10().floor(), hi.log10().ceil());
    if hi > lo {
        (lo, hi)
    } else {
        (lo, lo + 1.0)
    }
}

/// SVG with log-scaled axes and one polyline per series. Non-positive deltas are
/// not representable on a log axis and are skipped.
pub fn render_svg(series: &SeriesMap, path: &Path) -> CliResult<String> {
    let points: Vec<(u64, f64)> = series.values().flatten().copied().filter(|&(t, d)| t > 0 && d > 0.0).collect();
    if points.is_empty() {
        return Err(CliError::NoData { path: path.to_path_buf(), msg: "no plottable data rows".into() });
    }
    let (x0, x1) = decade_range(points.iter().map(|p| p.0 as f64));
    let (y0, y1) = decade_range(points.iter().map(|p| p.1));
    let (w, h) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let px = |t: f64| LEFT + (t.log10() - x0) / (x1 - x0) * w;
    let py = |d: f64| TOP + (1.0 - (d.log10() - y0) / (y1 - y0)) * h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{w}" height="{h}" fill="none" stroke="black"/>"#);
    for e in x0 as i64..=x1 as i64 {
        let x = px(10f64.powi(e as i32));
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">1e{e}</text>"#,
            TOP + h,
            TOP + h + 5.0,
            TOP + h + 20.0
        );
    }
    for e in y0 as i64..=y1 as i64 {
        let y = py(10f64.powi(e as i32));
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">1e{e}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">T</text>"#, LEFT + w / 2.0, HEIGHT - 10.0);
    let _ = writeln!(
        s,
        r#"<text x="15" y="{:.2}" text-anchor="middle" transform="rotate(-90 15 {:.2})">Δ⁽ᵏ⁾(T)</text>"#,
        TOP + h / 2.0,
        TOP + h / 2.0
    );

    let blocks = series.keys().map(|(b, _)| *b).max().unwrap_or(0) + 1;
    for (i, ((block, k), data)) in series.iter().enumerate() {
        let color = COLORS[(k.saturating_sub(1)) % COLORS.len()];
        let coords: Vec<String> = data
            .iter()
            .filter(|&&(t, d)| t > 0 && d > 0.0)
            .map(|&(t, d)| format!("{:.2},{:.2}", px(t as f64), py(d)))
            .collect();
        let label = if blocks > 1 { format!("block {block}, k={k}") } else { format!("k={k}") };
        let _ = writeln!(
            s,
            r#"<polyline data-k="{k}" data-block="{block}" fill="none" stroke="{color}" stroke-width="1.5" points="{}"><title>{label}</title></polyline>"#,
            coords.join(" ")
        );
        if i < 24 {
            let y = TOP + 10.0 + 16.0 * i as f64;
            let x = LEFT + w + 10.0;
            let _ = writeln!(
                s,
                r#"<line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{label}</text>"#,
                x + 20.0,
                x + 25.0,
                y + 4.0
            );
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocks_and_series() {
        let text = "# hse sweep\nT,k,delta\n# block=0\n1,1,0.5\n2,1,0.3\n1,2,0.6\n# block=1\n1,1,0.5\n";
        let m = read_delta_csv(text, Path::new("x")).unwrap();
        assert_eq!(m.len(), 3);
        assert_eq!(m[&(0, 1)], vec![(1, 0.5), (2, 0.3)]);
        assert!(m.contains_key(&(1, 1)));
    }

    #[test]
    fn malformed_row_names_line() {
        let err = read_delta_csv("T,k,delta\n1,1\n", Path::new("x")).unwrap_err();
        assert!(matches!(err, CliError::Malformed { line: 2, .. }));
    }

    #[test]
    fn empty_data_is_an_error() {
        let m = read_delta_csv("# hse simulate\nT,k,delta\n", Path::new("x")).unwrap();
        assert!(render_svg(&m, Path::new("x")).is_err());
    }
}
