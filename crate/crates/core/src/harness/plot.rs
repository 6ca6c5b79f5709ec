//! Log-log SVG plots. Output depends only on the input and style.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::slope::fit_slope;
use super::sweep::{DiscrepancyResult, ExperimentResult};
use super::HarnessError;

#[derive(Debug, Clone, PartialEq)]
pub struct PlotStyle {
    pub width: u32,
    pub height: u32,
    pub marker_radius: f64,
    pub show_replicates: bool,
}

impl Default for PlotStyle {
    fn default() -> Self {
        PlotStyle { width: 640, height: 440, marker_radius: 4.0, show_replicates: true }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum PlotInput<'a> {
    Rate(&'a ExperimentResult),
    Discrepancy(&'a DiscrepancyResult),
}

struct Line {
    slope: f64,
    anchor: (f64, f64),
    class: &'static str,
    label: String,
    dash: bool,
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
    w: f64,
    h: f64,
}

const MARGIN: (f64, f64, f64, f64) = (70.0, 20.0, 40.0, 50.0);

impl Frame {
    fn px(&self, n: f64) -> f64 {
        MARGIN.0 + (n.log10() - self.x.0) / (self.x.1 - self.x.0) * (self.w - MARGIN.0 - MARGIN.1)
    }

    fn py(&self, v: f64) -> f64 {
        self.h - MARGIN.3 - (v.log10() - self.y.0) / (self.y.1 - self.y.0) * (self.h - MARGIN.2 - MARGIN.3)
    }
}

/// Writes the plot for `input` into `dir` and returns the written paths.
pub fn emit_plots(input: PlotInput, style: &PlotStyle, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let (name, title, ylabel, centers, scatter, refs) = match input {
        PlotInput::Rate(r) => {
            let d = r.d as f64;
            let m: Vec<(f64, f64)> = r.medians().into_iter().map(|(n, v)| (n as f64, v)).filter(|p| p.1 > 0.0).collect();
            let reps: Vec<(f64, f64)> =
                r.rows.iter().filter(|x| x.h2.is_finite() && x.h2 > 0.0).map(|x| (x.n as f64, x.h2)).collect();
            let refs = vec![(-2.0 / (d + 3.0), "guarantee"), (-2.0 / (d + 1.0), "minimax")];
            (
                format!("rate-d{}-{}.svg", r.d, r.f0),
                format!("median squared Hellinger error, d = {}, f0 = {}", r.d, r.f0),
                "median h^2",
                m,
                reps,
                refs,
            )
        }
        PlotInput::Discrepancy(r) => {
            let m: Vec<(f64, f64)> = r.curve().into_iter().map(|(n, v, _)| (n as f64, v)).filter(|p| p.1 > 0.0).collect();
            let reps: Vec<(f64, f64)> = r.rows.iter().filter(|x| x.sup > 0.0).map(|x| (x.n as f64, x.sup)).collect();
            let stem = r.path.file_stem().map_or("discrepancy".into(), |s| s.to_string_lossy().into_owned());
            let family = r.rows.first().map_or(String::new(), |x| x.family.clone());
            (format!("{stem}.svg"), format!("sup deviation over {family}"), "mean sup", m, reps, vec![(-0.5, "n^-1/2")])
        }
    };
    if centers.is_empty() {
        return Err(HarnessError::EmptyResult);
    }
    let anchor = centers[0];
    let mut lines: Vec<Line> = refs
        .into_iter()
        .map(|(s, label)| Line { slope: s, anchor, class: "reference", label: format!("{label} {s:.3}"), dash: true })
        .collect();
    if let Ok(fit) = fit_slope(&centers) {
        let x0 = centers[0].0;
        lines.push(Line {
            slope: fit.slope,
            anchor: (x0, fit.predict(x0)),
            class: "fit",
            label: format!("fit {:.3} (r2 {:.3})", fit.slope, fit.r_squared),
            dash: false,
        });
    }
    let svg = render(&title, ylabel, &centers, if style.show_replicates { &scatter } else { &[] }, &lines, style);
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, svg)?;
    Ok(vec![path])
}

fn render(title: &str, ylabel: &str, centers: &[(f64, f64)], scatter: &[(f64, f64)], lines: &[Line], style: &PlotStyle) -> String {
    let xs = centers.iter().chain(scatter).map(|p| p.0);
    let (mut x0, mut x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x.log10()), b.max(x.log10())));
    if x1 - x0 < 0.5 {
        x0 -= 0.25;
        x1 += 0.25;
    } else {
        let pad = 0.05 * (x1 - x0);
        x0 -= pad;
        x1 += pad;
    }
    let line_y = |l: &Line, lx: f64| l.anchor.1.log10() + l.slope * (lx - l.anchor.0.log10());
    let mut ys: Vec<f64> = centers.iter().chain(scatter).map(|p| p.1.log10()).collect();
    for l in lines {
        ys.push(line_y(l, x0));
        ys.push(line_y(l, x1));
    }
    let (mut y0, mut y1) = ys.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &y| (a.min(y), b.max(y)));
    if y1 - y0 < 0.5 {
        y0 -= 0.25;
        y1 += 0.25;
    }
    let fr = Frame { x: (x0, x1), y: (y0, y1), w: style.width as f64, h: style.height as f64 };
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}" font-family="sans-serif" font-size="11">"#,
        style.width, style.height, style.width, style.height
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{:.2}" y="16" text-anchor="middle" font-size="13">{}</text>"#, fr.w / 2.0, escape(title));
    let (left, right, top, bottom) = (MARGIN.0, fr.w - MARGIN.1, MARGIN.2, fr.h - MARGIN.3);
    let _ = writeln!(s, r#"<rect x="{left:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#, right - left, bottom - top);
    for e in x0.ceil() as i32..=x1.floor() as i32 {
        let x = fr.px(10f64.powi(e));
        let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{bottom:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, bottom + 5.0);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">1e{e}</text>"#, bottom + 18.0);
    }
    for e in y0.ceil() as i32..=y1.floor() as i32 {
        let y = fr.py(10f64.powi(e));
        let _ = writeln!(s, r#"<line x1="{:.2}" y1="{y:.2}" x2="{left:.2}" y2="{y:.2}" stroke="black"/>"#, left - 5.0);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{e}</text>"#, left - 8.0, y + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">n</text>"#, (left + right) / 2.0, fr.h - 10.0);
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        (top + bottom) / 2.0,
        (top + bottom) / 2.0,
        escape(ylabel)
    );
    let _ = writeln!(
        s,
        r#"<clipPath id="area"><rect x="{left:.2}" y="{top:.2}" width="{:.2}" height="{:.2}"/></clipPath>"#,
        right - left,
        bottom - top
    );
    let _ = writeln!(s, r#"<g clip-path="url(#area)">"#);
    for (i, l) in lines.iter().enumerate() {
        let color = ["#888888", "#bbbbbb", "#d62728"][i.min(2)];
        let (ya, yb) = (line_y(l, x0), line_y(l, x1));
        let dash = if l.dash { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            s,
            r#"<line class="{}" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}"{dash}/>"#,
            l.class,
            fr.px(10f64.powf(x0)),
            fr.py(10f64.powf(ya)),
            fr.px(10f64.powf(x1)),
            fr.py(10f64.powf(yb))
        );
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" fill="{color}">{}</text>"#, right - 150.0, top + 16.0 + 14.0 * i as f64, escape(&l.label));
    }
    for p in scatter {
        let _ = writeln!(s, r##"<circle class="replicate" cx="{:.2}" cy="{:.2}" r="1.5" fill="#1f77b4" fill-opacity="0.3"/>"##, fr.px(p.0), fr.py(p.1));
    }
    for p in centers {
        let _ = writeln!(
            s,
            r##"<circle class="median" cx="{:.2}" cy="{:.2}" r="{:.2}" fill="#1f77b4" stroke="black"/>"##,
            fr.px(p.0),
            fr.py(p.1),
            style.marker_radius
        );
    }
    let _ = writeln!(s, "</g>\n</svg>");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
