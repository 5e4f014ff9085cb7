//! Hand-assembled SVG figures on a fixed 800 × 600 canvas.
//!
//! Layout: the plot area is inset 80 px on the left, 40 px on top, and
//! 60 px at the bottom; the rightmost 150 px are reserved for the legend.
//! Every coordinate is written with two decimals and every collection is
//! drawn in a deterministic order, so repeated renders of the same data
//! are byte-identical.

use std::fmt::Write;

use defectkit::thermo::DiagramPolyline;

pub const WIDTH: f64 = 800.0;
pub const HEIGHT: f64 = 600.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 60.0;

const PALETTE: [&str; 8] = [
    "#33658a", "#d1495b", "#2e933c", "#8a4f9e", "#e28413", "#0f8b8d", "#6f4e37", "#5d576b",
];

fn plot_width() -> f64 {
    WIDTH - MARGIN_LEFT - MARGIN_RIGHT
}

fn plot_height() -> f64 {
    HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
}

fn color(index: usize) -> &'static str {
    PALETTE[index % PALETTE.len()]
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Tick spacing ≈ range/6, rounded to 1, 2, or 5 times a power of ten.
fn tick_step(range: f64) -> f64 {
    let raw = (range / 6.0).max(1e-12);
    let magnitude = 10f64.powf(raw.log10().floor());
    let normalized = raw / magnitude;
    let factor = if normalized < 1.5 {
        1.0
    } else if normalized < 3.5 {
        2.0
    } else if normalized < 7.5 {
        5.0
    } else {
        10.0
    };
    factor * magnitude
}

fn ticks(min: f64, max: f64) -> (Vec<f64>, f64) {
    let step = tick_step(max - min);
    let mut out = Vec::new();
    let mut index = (min / step).ceil() as i64;
    while (index as f64) * step <= max + 1e-9 * step {
        out.push(index as f64 * step);
        index += 1;
    }
    (out, step)
}

fn tick_label(value: f64, step: f64) -> String {
    if step >= 0.999 {
        format!("{value:.0}")
    } else if step >= 0.0999 {
        format!("{value:.1}")
    } else {
        format!("{value:.2}")
    }
}

fn open_canvas(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH:.0}\" height=\"{HEIGHT:.0}\" \
         viewBox=\"0 0 {WIDTH:.0} {HEIGHT:.0}\" font-family=\"Helvetica, Arial, sans-serif\">"
    );
    let _ = writeln!(
        out,
        "<rect width=\"{WIDTH:.0}\" height=\"{HEIGHT:.0}\" fill=\"#ffffff\"/>"
    );
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"24\" font-size=\"16\" text-anchor=\"middle\" fill=\"#1a1a1a\">{}</text>",
        MARGIN_LEFT + plot_width() / 2.0,
        escape(title)
    );
}

fn plot_frame(out: &mut String) {
    let _ = writeln!(
        out,
        "<rect x=\"{MARGIN_LEFT:.2}\" y=\"{MARGIN_TOP:.2}\" width=\"{:.2}\" height=\"{:.2}\" \
         fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>",
        plot_width(),
        plot_height()
    );
}

fn axis_labels(out: &mut String, x_label: &str, y_label: &str) {
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"13\" text-anchor=\"middle\" fill=\"#1a1a1a\">{}</text>",
        MARGIN_LEFT + plot_width() / 2.0,
        HEIGHT - 14.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        "<text x=\"22\" y=\"{:.2}\" font-size=\"13\" text-anchor=\"middle\" fill=\"#1a1a1a\" \
         transform=\"rotate(-90 22 {:.2})\">{}</text>",
        MARGIN_TOP + plot_height() / 2.0,
        MARGIN_TOP + plot_height() / 2.0,
        escape(y_label)
    );
}

/// Formation-energy envelopes of the stable charge states across the gap,
/// one polyline per defect, with circles at the charge-transition kinks.
pub fn envelope_diagram(lines: &[DiagramPolyline], e_gap_ev: f64, subtitle: &str) -> String {
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for line in lines {
        for vertex in &line.vertices {
            y_min = y_min.min(vertex.e_form_ev);
            y_max = y_max.max(vertex.e_form_ev);
        }
    }
    if !(y_min.is_finite() && y_max.is_finite()) {
        (y_min, y_max) = (0.0, 1.0);
    }
    let pad = 0.05 * (y_max - y_min).max(0.2);
    let (y_min, y_max) = (y_min - pad, y_max + pad);

    let x_of = |e_f: f64| MARGIN_LEFT + e_f / e_gap_ev * plot_width();
    let y_of = |e: f64| HEIGHT - MARGIN_BOTTOM - (e - y_min) / (y_max - y_min) * plot_height();

    let mut out = String::new();
    open_canvas(
        &mut out,
        &format!("Defect formation energies ({subtitle})"),
    );

    let (x_ticks, x_step) = ticks(0.0, e_gap_ev);
    for tick in &x_ticks {
        let x = x_of(*tick);
        let _ = writeln!(
            out,
            "<line x1=\"{x:.2}\" y1=\"{MARGIN_TOP:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" \
             stroke=\"#e0e0e0\" stroke-width=\"1\"/>",
            HEIGHT - MARGIN_BOTTOM
        );
        let _ = writeln!(
            out,
            "<text x=\"{x:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"middle\" \
             fill=\"#1a1a1a\">{}</text>",
            HEIGHT - MARGIN_BOTTOM + 18.0,
            tick_label(*tick, x_step)
        );
    }
    let (y_ticks, y_step) = ticks(y_min, y_max);
    for tick in &y_ticks {
        let y = y_of(*tick);
        let _ = writeln!(
            out,
            "<line x1=\"{MARGIN_LEFT:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" \
             stroke=\"#e0e0e0\" stroke-width=\"1\"/>",
            WIDTH - MARGIN_RIGHT
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"end\" \
             fill=\"#1a1a1a\">{}</text>",
            MARGIN_LEFT - 8.0,
            y + 4.0,
            tick_label(*tick, y_step)
        );
    }
    plot_frame(&mut out);
    axis_labels(
        &mut out,
        "Fermi level above VBM (eV)",
        "Formation energy (eV)",
    );

    for (index, line) in lines.iter().enumerate() {
        let stroke = color(index);
        let points: Vec<String> = line
            .vertices
            .iter()
            .map(|v| format!("{:.2},{:.2}", x_of(v.e_f_ev), y_of(v.e_form_ev)))
            .collect();
        let _ = writeln!(
            out,
            "<polyline fill=\"none\" stroke=\"{stroke}\" stroke-width=\"2\" points=\"{}\"/>",
            points.join(" ")
        );
        for kink in &line.kinks {
            let Some(vertex) = line
                .vertices
                .iter()
                .find(|v| (v.e_f_ev - kink.e_f_ev).abs() < 1e-9)
            else {
                continue;
            };
            let _ = writeln!(
                out,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3.50\" fill=\"{stroke}\" \
                 stroke=\"#ffffff\" stroke-width=\"1\"/>",
                x_of(vertex.e_f_ev),
                y_of(vertex.e_form_ev)
            );
        }
        let legend_x = WIDTH - MARGIN_RIGHT + 16.0;
        let legend_y = MARGIN_TOP + 14.0 + index as f64 * 22.0;
        let _ = writeln!(
            out,
            "<line x1=\"{legend_x:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" \
             stroke=\"{stroke}\" stroke-width=\"2\"/>",
            legend_y - 4.0,
            legend_x + 24.0,
            legend_y - 4.0
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{legend_y:.2}\" font-size=\"12\" fill=\"#1a1a1a\">{}</text>",
            legend_x + 32.0,
            escape(&line.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Height of the shaded valence/conduction band strips in the level diagram.
const BAND_PX: f64 = 46.0;

/// In-gap transition levels of each defect as horizontal marks between the
/// shaded band edges, labeled with the level name and its position as a
/// fraction of the gap.
pub fn level_diagram(columns: &[(String, Vec<(String, f64)>)], e_gap_ev: f64) -> String {
    let gap_bottom = HEIGHT - MARGIN_BOTTOM - BAND_PX;
    let gap_top = MARGIN_TOP + BAND_PX;
    let y_of = |frac: f64| gap_bottom - frac * (gap_bottom - gap_top);

    let mut out = String::new();
    open_canvas(&mut out, "Charge transition levels across the gap");

    for (y, height, name) in [
        (gap_bottom, BAND_PX, "valence band (VBM = 0)"),
        (MARGIN_TOP, BAND_PX, "conduction band"),
    ] {
        let _ = writeln!(
            out,
            "<rect x=\"{MARGIN_LEFT:.2}\" y=\"{y:.2}\" width=\"{:.2}\" height=\"{height:.2}\" \
             fill=\"#d9d9d9\"/>",
            plot_width()
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\" \
             fill=\"#444444\">{}</text>",
            MARGIN_LEFT + plot_width() / 2.0,
            y + height / 2.0 + 4.0,
            escape(name)
        );
    }

    for quarter in 0..=4 {
        let frac = f64::from(quarter) / 4.0;
        let y = y_of(frac);
        let _ = writeln!(
            out,
            "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{MARGIN_LEFT:.2}\" y2=\"{y:.2}\" \
             stroke=\"#333333\" stroke-width=\"1\"/>",
            MARGIN_LEFT - 6.0
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"end\" \
             fill=\"#1a1a1a\">{:.2}</text>",
            MARGIN_LEFT - 10.0,
            y + 4.0,
            frac * e_gap_ev
        );
    }
    plot_frame(&mut out);
    axis_labels(&mut out, "", "Level position above VBM (eV)");

    let count = columns.len().max(1);
    for (index, (label, levels)) in columns.iter().enumerate() {
        let x = MARGIN_LEFT + (index as f64 + 0.5) / count as f64 * plot_width();
        let stroke = color(index);
        let mut levels = levels.clone();
        levels.sort_by(|a, b| a.1.total_cmp(&b.1));
        for (level_index, (name, frac)) in levels.iter().enumerate() {
            let y = y_of(*frac);
            let _ = writeln!(
                out,
                "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" \
                 stroke=\"{stroke}\" stroke-width=\"2.5\"/>",
                x - 26.0,
                x + 26.0
            );
            // Alternate label sides so close-lying levels stay readable.
            let (text_x, anchor) = if level_index % 2 == 0 {
                (x + 30.0, "start")
            } else {
                (x - 30.0, "end")
            };
            let _ = writeln!(
                out,
                "<text x=\"{text_x:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"{anchor}\" \
                 fill=\"#1a1a1a\">{} {:.2}</text>",
                y + 4.0,
                escape(name),
                frac
            );
        }
        let _ = writeln!(
            out,
            "<text x=\"{x:.2}\" y=\"{:.2}\" font-size=\"13\" text-anchor=\"middle\" \
             fill=\"#1a1a1a\">{}</text>",
            HEIGHT - MARGIN_BOTTOM + 22.0,
            escape(label)
        );
    }
    out.push_str("</svg>\n");
    out
}
