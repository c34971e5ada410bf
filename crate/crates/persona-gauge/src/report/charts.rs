//! Self-contained SVG chart emission. Charts are plain generated text —
//! deterministic, timestamp-free, and parseable by tests — and every
//! number they show is also available in a summary CSV.

use std::collections::BTreeMap;

use crate::adaptability::{day_label, AdaptTrajectory, PoiCatalog, TimeBlock};
use crate::ee::AxisSummary;
use crate::reasoning::{CategoryAccuracy, SubjectCategory};
use crate::safety::Sd3Scores;

use super::{PersonaAdapt, ReportError};

/// Stable color for a category index: one hue step per catalog slot, so
/// the same category gets the same color in every chart of a run.
pub fn category_color(index: usize, total: usize) -> String {
    let hue = (index * 360) / total.max(1);
    format!("hsl({hue}, 62%, 55%)")
}

fn svg_open(width: f64, height: f64) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>\n"
    )
}

const HATCH_DEF: &str = "<defs><pattern id=\"hatch\" width=\"6\" height=\"6\" \
     patternUnits=\"userSpaceOnUse\"><path d=\"M0,6 L6,0\" stroke=\"#999\" \
     stroke-width=\"1\"/></pattern></defs>\n";

fn text(x: f64, y: f64, anchor: &str, content: &str) -> String {
    format!(
        "<text x=\"{x:.1}\" y=\"{y:.1}\" text-anchor=\"{anchor}\">{}</text>\n",
        escape(content)
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Day-by-block heat grid; missing cells are hatched. The legend names
/// each category present, colored by catalog index.
pub fn adaptability_grid_svg(traj: &AdaptTrajectory, catalog: Option<&PoiCatalog>) -> String {
    let cell = 36.0;
    let left = 92.0;
    let top = 48.0;
    let palette_total = catalog.map(PoiCatalog::len).unwrap_or_else(|| {
        traj.grid
            .iter()
            .flatten()
            .filter_map(|c| *c)
            .max()
            .map_or(1, |m| m + 1)
    });
    let legend_x = left + traj.periods as f64 * cell + 24.0;
    let mut present: Vec<usize> = traj.grid.iter().flatten().filter_map(|c| *c).collect();
    present.sort_unstable();
    present.dedup();
    let width = legend_x + 170.0;
    let height = (top + traj.blocks as f64 * cell + 30.0)
        .max(top + present.len() as f64 * 20.0 + 30.0);

    let mut svg = svg_open(width, height);
    svg.push_str(HATCH_DEF);
    svg.push_str(&text(left, 24.0, "start", "choices by day and time block"));
    for p in 0..traj.periods {
        svg.push_str(&text(
            left + (p as f64 + 0.5) * cell,
            top - 8.0,
            "middle",
            day_label(p),
        ));
    }
    for b in 0..traj.blocks {
        let label = TimeBlock::ALL
            .get(b)
            .map(|t| t.label().to_string())
            .unwrap_or_else(|| format!("block {b}"));
        svg.push_str(&text(
            left - 8.0,
            top + (b as f64 + 0.65) * cell,
            "end",
            &label,
        ));
    }
    for (p, row) in traj.grid.iter().enumerate() {
        for (b, cell_value) in row.iter().enumerate() {
            let x = left + p as f64 * cell;
            let y = top + b as f64 * cell;
            let fill = match cell_value {
                Some(i) => category_color(*i, palette_total),
                None => "url(#hatch)".to_string(),
            };
            svg.push_str(&format!(
                "<rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"{cell}\" height=\"{cell}\" \
                 fill=\"{fill}\" stroke=\"#333\"/>\n"
            ));
        }
    }
    for (row_i, cat) in present.iter().enumerate() {
        let y = top + row_i as f64 * 20.0;
        let name = catalog
            .and_then(|c| c.categories().get(*cat).cloned())
            .unwrap_or_else(|| format!("category {cat}"));
        svg.push_str(&format!(
            "<rect x=\"{legend_x:.1}\" y=\"{y:.1}\" width=\"14\" height=\"14\" \
             fill=\"{}\" stroke=\"#333\"/>\n",
            category_color(*cat, palette_total)
        ));
        svg.push_str(&text(legend_x + 20.0, y + 12.0, "start", &name));
    }
    svg.push_str("</svg>\n");
    svg
}

#[derive(Debug, Clone)]
pub struct Bar {
    pub label: String,
    /// `None` renders a dashed no-data marker instead of a bar.
    pub value: Option<f64>,
    pub stddev: Option<f64>,
    /// Dashed outline marks flagged data that still carries a value.
    pub dashed: bool,
    /// Palette index; bars meaning the same series should share one.
    pub color: usize,
}

#[derive(Debug, Clone)]
pub struct BarGroup {
    pub label: String,
    pub bars: Vec<Bar>,
}

/// Grouped vertical bar chart scaled to `y_max`.
pub fn bar_chart_svg(title: &str, y_max: f64, groups: &[BarGroup], palette: usize) -> String {
    let plot_h = 200.0;
    let y0 = 250.0;
    let bar_w = 22.0;
    let bar_gap = 6.0;
    let group_gap = 30.0;
    let left = 56.0;

    let mut x = left;
    let mut body = String::new();
    for group in groups {
        let group_start = x;
        for bar in &group.bars {
            let color = category_color(bar.color, palette);
            match bar.value {
                Some(v) => {
                    let h = (v.max(0.0) / y_max * plot_h).min(plot_h);
                    let y = y0 - h;
                    let style = if bar.dashed {
                        format!("fill=\"{color}\" fill-opacity=\"0.35\" stroke=\"{color}\" stroke-dasharray=\"4 3\"")
                    } else {
                        format!("fill=\"{color}\"")
                    };
                    body.push_str(&format!(
                        "<rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"{bar_w}\" height=\"{h:.2}\" {style}/>\n"
                    ));
                    if let Some(sd) = bar.stddev {
                        let lo = y0 - ((v - sd).max(0.0) / y_max * plot_h).min(plot_h);
                        let hi = y0 - ((v + sd).max(0.0) / y_max * plot_h).min(plot_h);
                        let cx = x + bar_w / 2.0;
                        body.push_str(&format!(
                            "<line x1=\"{cx:.1}\" y1=\"{lo:.1}\" x2=\"{cx:.1}\" y2=\"{hi:.1}\" \
                             stroke=\"#111\"/>\n"
                        ));
                    }
                    body.push_str(&text(
                        x + bar_w / 2.0,
                        y - 4.0,
                        "middle",
                        &format!("{v:.3}"),
                    ));
                }
                None => {
                    body.push_str(&format!(
                        "<rect x=\"{x:.1}\" y=\"{:.1}\" width=\"{bar_w}\" height=\"4\" \
                         fill=\"none\" stroke=\"{color}\" stroke-dasharray=\"4 3\"/>\n",
                        y0 - 4.0
                    ));
                    body.push_str(&text(x + bar_w / 2.0, y0 - 10.0, "middle", "n/a"));
                }
            }
            body.push_str(&format!(
                "<text x=\"{0:.1}\" y=\"{1:.1}\" text-anchor=\"start\" \
                 transform=\"rotate(45 {0:.1} {1:.1})\" font-size=\"10\">{2}</text>\n",
                x + 4.0,
                y0 + 12.0,
                escape(&bar.label)
            ));
            x += bar_w + bar_gap;
        }
        let group_end = x - bar_gap;
        body.push_str(&text(
            (group_start + group_end) / 2.0,
            y0 + 46.0,
            "middle",
            &group.label,
        ));
        x += group_gap;
    }
    let width = x + 20.0;

    let mut svg = svg_open(width.max(300.0), 310.0);
    svg.push_str(&text(left, 24.0, "start", title));
    for tick in [0.0, 0.5, 1.0] {
        let v = tick * y_max;
        let y = y0 - tick * plot_h;
        svg.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"#ccc\"/>\n",
            left - 6.0,
            width - 16.0
        ));
        svg.push_str(&text(left - 10.0, y + 4.0, "end", &format!("{v}")));
    }
    svg.push_str(&body);
    svg.push_str("</svg>\n");
    svg
}

/// Flexibility/stability means per persona with stddev whiskers.
pub fn adaptability_metrics_svg(
    summaries: &BTreeMap<String, PersonaAdapt>,
) -> Result<String, ReportError> {
    if summaries.is_empty() {
        return Err(ReportError::EmptyReport);
    }
    let groups: Vec<BarGroup> = summaries
        .iter()
        .map(|(persona, adapt)| BarGroup {
            label: persona.clone(),
            bars: vec![
                Bar {
                    label: "flex".into(),
                    value: adapt.summary.map(|s| s.flexibility.mean),
                    stddev: adapt.summary.map(|s| s.flexibility.stddev),
                    dashed: adapt
                        .summary
                        .is_some_and(|s| s.grids_full < adapt.grids_total),
                    color: 0,
                },
                Bar {
                    label: "stab".into(),
                    value: adapt.summary.map(|s| s.stability.mean),
                    stddev: adapt.summary.map(|s| s.stability.stddev),
                    dashed: adapt
                        .summary
                        .is_some_and(|s| s.grids_full < adapt.grids_total),
                    color: 3,
                },
            ],
        })
        .collect();
    Ok(bar_chart_svg(
        "flexibility and stability by persona",
        1.0,
        &groups,
        6,
    ))
}

/// Normalized coefficient proportions per dimension; axes whose group
/// means cannot be normalized render dashed no-data markers.
pub fn ee_proportions_svg(dimensions: &[AxisSummary; 4]) -> String {
    let groups: Vec<BarGroup> = dimensions
        .iter()
        .map(|axis| {
            let (first, second) = axis.axis.labels();
            let mut bars = Vec::new();
            for (name, split, base_color) in [
                ("w1", &axis.exploitation, 0),
                ("w2", &axis.exploration, 3),
            ] {
                for (who, stat) in [(first, &split.first), (second, &split.second)] {
                    bars.push(Bar {
                        label: format!("{who} {name}"),
                        value: stat.proportion,
                        stddev: None,
                        dashed: !split.valid,
                        color: base_color + usize::from(who == second),
                    });
                }
            }
            BarGroup {
                label: format!("{first}/{second}"),
                bars,
            }
        })
        .collect();
    bar_chart_svg(
        "normalized exploitation (w1) and exploration (w2) by dimension",
        1.0,
        &groups,
        6,
    )
}

/// Per-category accuracy bars, one bar per persona; categories containing
/// unparseable answers render dashed.
pub fn reasoning_accuracy_svg(
    by_persona: &BTreeMap<String, BTreeMap<SubjectCategory, CategoryAccuracy>>,
) -> Result<String, ReportError> {
    if by_persona.is_empty() {
        return Err(ReportError::EmptyReport);
    }
    let personas: Vec<&String> = by_persona.keys().collect();
    let mut groups = Vec::new();
    for category in SubjectCategory::ALL {
        if !by_persona.values().any(|m| m.contains_key(&category)) {
            continue;
        }
        let bars: Vec<Bar> = personas
            .iter()
            .enumerate()
            .map(|(i, persona)| {
                let acc = by_persona[*persona].get(&category);
                Bar {
                    label: (*persona).clone(),
                    value: acc.map(|a| a.accuracy),
                    stddev: None,
                    dashed: acc.is_some_and(|a| a.invalid > 0),
                    color: i,
                }
            })
            .collect();
        groups.push(BarGroup {
            label: category.label().to_string(),
            bars,
        });
    }
    Ok(bar_chart_svg(
        "answer accuracy by category",
        1.0,
        &groups,
        personas.len().max(1),
    ))
}

const TRIANGLE_AXES: [(&str, f64); 3] = [
    ("machiavellianism", 90.0),
    ("narcissism", 210.0),
    ("psychopathy", 330.0),
];

fn triangle_points(scores: [f64; 3], cx: f64, cy: f64, radius: f64) -> String {
    TRIANGLE_AXES
        .iter()
        .zip(scores)
        .map(|((_, deg), score)| {
            let r = (score / 5.0).clamp(0.0, 1.0) * radius;
            let rad = deg.to_radians();
            format!("{:.2},{:.2}", cx + r * rad.cos(), cy - r * rad.sin())
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Three-axis triangle of SD-3 subscale scores, overlaying the persona on
/// the baseline when one is supplied.
pub fn sd3_triangle_svg(persona: &str, scores: &Sd3Scores, baseline: Option<&Sd3Scores>) -> String {
    let (cx, cy, radius) = (170.0, 160.0, 110.0);
    let mut svg = svg_open(340.0, 320.0);
    svg.push_str(&text(
        20.0,
        24.0,
        "start",
        &format!("dark-triad subscales: {persona}"),
    ));
    for (label, deg) in TRIANGLE_AXES {
        let rad = deg.to_radians();
        let (x, y) = (cx + radius * rad.cos(), cy - radius * rad.sin());
        svg.push_str(&format!(
            "<line x1=\"{cx}\" y1=\"{cy}\" x2=\"{x:.2}\" y2=\"{y:.2}\" stroke=\"#ccc\"/>\n"
        ));
        let (lx, ly) = (cx + (radius + 14.0) * rad.cos(), cy - (radius + 14.0) * rad.sin());
        svg.push_str(&text(lx, ly + 4.0, "middle", label));
    }
    if let Some(b) = baseline {
        let points = triangle_points(
            [b.machiavellianism, b.narcissism, b.psychopathy],
            cx,
            cy,
            radius,
        );
        svg.push_str(&format!(
            "<polygon points=\"{points}\" fill=\"#3366cc\" fill-opacity=\"0.15\" \
             stroke=\"#3366cc\" data-series=\"baseline\"/>\n"
        ));
    }
    let points = triangle_points(
        [scores.machiavellianism, scores.narcissism, scores.psychopathy],
        cx,
        cy,
        radius,
    );
    svg.push_str(&format!(
        "<polygon points=\"{points}\" fill=\"#cc3333\" fill-opacity=\"0.25\" \
         stroke=\"#cc3333\" data-series=\"persona\"/>\n"
    ));
    svg.push_str(&text(
        20.0,
        306.0,
        "start",
        &format!(
            "scores: {:.3} / {:.3} / {:.3} (radius = score/5)",
            scores.machiavellianism, scores.narcissism, scores.psychopathy
        ),
    ));
    svg.push_str("</svg>\n");
    svg
}
