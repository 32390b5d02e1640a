//! Minimal current-voltage line plots.

use std::fmt::Write as _;

use ifmem_core::IVTrace;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;

/// All traces on shared axes, first trace drawn last so it stays on top.
pub fn iv_plot(traces: &[&IVTrace], title: &str) -> String {
    let (mut v_lo, mut v_hi, mut i_lo, mut i_hi) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for t in traces {
        for (&v, &i) in t.voltages().iter().zip(t.currents()) {
            v_lo = v_lo.min(v);
            v_hi = v_hi.max(v);
            i_lo = i_lo.min(i);
            i_hi = i_hi.max(i);
        }
    }
    if v_hi <= v_lo {
        v_hi = v_lo + 1.0;
    }
    if i_hi <= i_lo {
        i_hi = i_lo + 1.0;
    }
    let x = |v: f64| MARGIN + (v - v_lo) / (v_hi - v_lo) * (WIDTH - 2.0 * MARGIN);
    let y = |i: f64| HEIGHT - MARGIN - (i - i_lo) / (i_hi - i_lo) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    if v_lo < 0.0 && v_hi > 0.0 {
        let _ = writeln!(
            s,
            r##"<line x1="{0:.2}" y1="{MARGIN}" x2="{0:.2}" y2="{1}" stroke="#bbb"/>"##,
            x(0.0),
            HEIGHT - MARGIN
        );
    }
    if i_lo < 0.0 && i_hi > 0.0 {
        let _ = writeln!(
            s,
            r##"<line x1="{MARGIN}" y1="{0:.2}" x2="{1}" y2="{0:.2}" stroke="#bbb"/>"##,
            y(0.0),
            WIDTH - MARGIN
        );
    }
    for (k, t) in traces.iter().enumerate().rev() {
        let (color, width) = if k == 0 { ("#c00", 1.5) } else { ("#2a2", 0.5) };
        let mut points = String::new();
        for (&v, &i) in t.voltages().iter().zip(t.currents()) {
            let _ = write!(points, "{:.2},{:.2} ", x(v), y(i));
        }
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="{width}" points="{}"/>"#,
            points.trim_end()
        );
    }
    let label = |s: &mut String, px: f64, py: f64, anchor: &str, text: String| {
        let _ = writeln!(
            s,
            r#"<text x="{px:.2}" y="{py:.2}" font-size="12" font-family="sans-serif" text-anchor="{anchor}">{text}</text>"#
        );
    };
    label(&mut s, WIDTH / 2.0, MARGIN / 2.0, "middle", escape(title));
    label(&mut s, WIDTH / 2.0, HEIGHT - 15.0, "middle", "voltage (V)".into());
    label(&mut s, MARGIN, HEIGHT - MARGIN + 15.0, "middle", format!("{v_lo:.3}"));
    label(&mut s, WIDTH - MARGIN, HEIGHT - MARGIN + 15.0, "middle", format!("{v_hi:.3}"));
    label(&mut s, MARGIN - 5.0, HEIGHT - MARGIN, "end", format!("{i_lo:.2e}"));
    label(&mut s, MARGIN - 5.0, MARGIN + 4.0, "end", format!("{i_hi:.2e}"));
    label(&mut s, 15.0, HEIGHT / 2.0, "start", "A".into());
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
