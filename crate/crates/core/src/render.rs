//! Plain-text and static SVG bar charts.

use std::fmt::Write as _;

const BAR: char = '#';

/// Horizontal bars for non-negative values, scaled to `width` characters.
pub fn bar_chart(items: &[(String, f64)], width: usize, precision: usize) -> String {
    let label_w = items.iter().map(|(l, _)| l.len()).max().unwrap_or(0);
    let max = items.iter().map(|(_, v)| v.abs()).fold(0.0, f64::max);
    let mut out = String::new();
    for (label, value) in items {
        let len = if max > 0.0 {
            ((value.abs() / max) * width as f64).round() as usize
        } else {
            0
        };
        let bar: String = std::iter::repeat_n(BAR, len).collect();
        let _ = writeln!(out, "{label:<label_w$} | {bar:<width$} {value:.precision$}");
    }
    out
}

/// Signed bars around a centre line: negative values extend left, positive
/// values right.
pub fn two_sided_chart(items: &[(String, f64)], half_width: usize) -> String {
    let label_w = items.iter().map(|(l, _)| l.len()).max().unwrap_or(0);
    let max = items.iter().map(|(_, v)| v.abs()).fold(0.0, f64::max);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:label_w$}   {:>half_width$}|{:<half_width$}",
        "", "no flood <-", "-> flood"
    );
    for (label, value) in items {
        let len = if max > 0.0 {
            ((value.abs() / max) * half_width as f64).round() as usize
        } else {
            0
        };
        let bar: String = std::iter::repeat_n(BAR, len).collect();
        let (left, right) = if *value < 0.0 {
            (bar, String::new())
        } else {
            (String::new(), bar)
        };
        let _ = writeln!(
            out,
            "{label:<label_w$}   {left:>half_width$}|{right:<half_width$} {value:+.4}"
        );
    }
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Static horizontal bar chart. Negative values are drawn left of the axis
/// in a second colour.
pub fn svg_bars(title: &str, items: &[(String, f64)]) -> String {
    let row_h = 22.0;
    let label_w = 230.0;
    let plot_w = 420.0;
    let top = 40.0;
    let height = top + row_h * items.len() as f64 + 20.0;
    let width = label_w + plot_w + 90.0;
    let max = items.iter().map(|(_, v)| v.abs()).fold(0.0, f64::max);
    let has_negative = items.iter().any(|(_, v)| *v < 0.0);
    let axis = if has_negative {
        label_w + plot_w / 2.0
    } else {
        label_w
    };
    let span = if has_negative { plot_w / 2.0 } else { plot_w };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="22" font-size="15" text-anchor="middle">{}</text>"#,
        width / 2.0,
        escape(title)
    );
    for (i, (label, value)) in items.iter().enumerate() {
        let y = top + i as f64 * row_h;
        let len = if max > 0.0 { value.abs() / max * span } else { 0.0 };
        let (x, fill) = if *value < 0.0 {
            (axis - len, "#1f77b4")
        } else {
            (axis, "#d62728")
        };
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            label_w - 8.0,
            y + 15.0,
            escape(label)
        );
        let _ = writeln!(
            svg,
            r#"<rect x="{x:.2}" y="{:.2}" width="{len:.2}" height="{:.2}" fill="{fill}"/>"#,
            y + 3.0,
            row_h - 6.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{}">{value:.4}</text>"#,
            label_w + plot_w + 6.0,
            y + 15.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<line x1="{axis}" y1="{}" x2="{axis}" y2="{}" stroke="black"/>"#,
        top - 4.0,
        height - 16.0
    );
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    fn items() -> Vec<(String, f64)> {
        vec![("JUL".into(), 4.0), ("JAN".into(), 1.0), ("FEB".into(), 0.0)]
    }

    #[test]
    fn bars_scale_to_maximum() {
        let chart = bar_chart(&items(), 8, 1);
        let lines: Vec<&str> = chart.lines().collect();
        assert_eq!(lines[0].matches(BAR).count(), 8);
        assert_eq!(lines[1].matches(BAR).count(), 2);
        assert_eq!(lines[2].matches(BAR).count(), 0);
        assert!(lines[0].ends_with("4.0"));
    }

    #[test]
    fn negative_bars_go_left() {
        let chart = two_sided_chart(&[("AUG > 510.02".into(), 0.2), ("DEC <= 20.00".into(), -0.1)], 10);
        let lines: Vec<&str> = chart.lines().collect();
        let (l, r) = lines[1].split_once('|').unwrap();
        assert_eq!(l.matches(BAR).count(), 0);
        assert_eq!(r.matches(BAR).count(), 10);
        let (l, r) = lines[2].split_once('|').unwrap();
        assert_eq!(l.matches(BAR).count(), 5);
        assert_eq!(r.matches(BAR).count(), 0);
    }

    #[test]
    fn svg_is_escaped_and_closed() {
        let svg = svg_bars("a < b", &[("X <= 1".into(), -1.0), ("Y".into(), 2.0)]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("a &lt; b"));
        assert_eq!(svg.matches("<rect").count(), 2);
    }
}
