//! Residual histograms as standalone SVG, clean against interventional,
//! one panel per target variable.

use std::fmt::Write as _;

use crate::invariance::PairDecision;

const PANEL_W: f64 = 320.0;
const PANEL_H: f64 = 200.0;
const MARGIN: f64 = 30.0;
const BINS: usize = 20;

fn histogram(values: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let mut counts = vec![0.0; BINS];
    let width = (hi - lo).max(f64::MIN_POSITIVE);
    for &v in values {
        let b = (((v - lo) / width) * BINS as f64) as usize;
        counts[b.min(BINS - 1)] += 1.0;
    }
    let n = values.len().max(1) as f64;
    counts.iter_mut().for_each(|c| *c /= n);
    counts
}

/// SVG document for one ordered pair, or `None` if the decision carries no
/// residuals. Residuals are clipped at their 99th percentile so a few large
/// relative errors do not flatten the plot.
pub fn residual_histogram_svg(pair: &PairDecision, names: &[String]) -> Option<String> {
    let (clean, intervened) = pair.residuals.as_ref()?;
    let panels = clean.targets.len();
    let width = MARGIN + panels as f64 * (PANEL_W + MARGIN);
    let height = PANEL_H + 3.0 * MARGIN;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{MARGIN}" y="18" font-size="13">{} → {}: residuals, observed (blue) vs intervened (orange)</text>"#,
        pair.src, pair.dst
    );
    for (k, &var) in clean.targets.iter().enumerate() {
        let a = &clean.residuals[k];
        let b = &intervened.residuals[k];
        let mut pooled: Vec<f64> = a.iter().chain(b).copied().collect();
        pooled.sort_by(f64::total_cmp);
        let lo = pooled.first().copied().unwrap_or(0.0);
        let hi = pooled
            .get(((pooled.len() as f64 * 0.99) as usize).min(pooled.len().saturating_sub(1)))
            .copied()
            .unwrap_or(1.0)
            .max(lo + 1e-12);
        let clip = |v: &[f64]| v.iter().map(|x| x.min(hi)).collect::<Vec<_>>();
        let ha = histogram(&clip(a), lo, hi);
        let hb = histogram(&clip(b), lo, hi);
        let top = ha.iter().chain(&hb).copied().fold(0.0, f64::max).max(1e-12);

        let x0 = MARGIN + k as f64 * (PANEL_W + MARGIN);
        let y0 = 2.0 * MARGIN;
        let bar_w = PANEL_W / BINS as f64;
        let name = names.get(var).map_or("?", String::as_str);
        let p = pair.node_pvalues.get(k).copied().unwrap_or(f64::NAN);
        let _ = writeln!(
            svg,
            r#"<text x="{x0}" y="{}">{name} (p = {p:.3})</text>"#,
            y0 - 6.0
        );
        let _ = writeln!(
            svg,
            r##"<rect x="{x0}" y="{y0}" width="{PANEL_W}" height="{PANEL_H}" fill="none" stroke="#888"/>"##
        );
        for (hist, color) in [(&ha, "#1f77b4"), (&hb, "#ff7f0e")] {
            for (bin, &frac) in hist.iter().enumerate() {
                let h = frac / top * PANEL_H;
                let _ = writeln!(
                    svg,
                    r#"<rect x="{:.2}" y="{:.2}" width="{bar_w:.2}" height="{h:.2}" fill="{color}" fill-opacity="0.5"/>"#,
                    x0 + bin as f64 * bar_w,
                    y0 + PANEL_H - h
                );
            }
        }
        let _ = writeln!(
            svg,
            r#"<text x="{x0}" y="{}">{lo:.3}</text><text x="{}" y="{}" text-anchor="end">{hi:.3}</text>"#,
            y0 + PANEL_H + 14.0,
            x0 + PANEL_W,
            y0 + PANEL_H + 14.0
        );
    }
    svg.push_str("</svg>\n");
    Some(svg)
}
