//! CSV, JSON summary and SVG writers.

use std::fmt::Write as _;

use qdyn::flow::{channel, TrajectoryRecord};
use qdyn::state::POSITIVITY_TOL;
use serde::Serialize;

/// Column names in output order for a `dim`-level system with `n` constraints.
pub fn csv_columns(dim: usize, n: usize) -> Vec<String> {
    let mut cols = vec!["t".to_string(), channel::PURITY.into(), channel::ENTROPY.into()];
    cols.extend((0..dim).map(channel::eig));
    cols.extend((0..n).map(channel::residual));
    cols.extend((0..n).map(channel::lambda));
    cols.push(channel::HYGIENE.into());
    if dim == 2 {
        cols.extend([channel::BLOCH_X, channel::BLOCH_Y, channel::BLOCH_Z].map(String::from));
    }
    cols
}

fn number(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        format!("{v:.16e}")
    }
}

pub fn trajectory_csv(rec: &TrajectoryRecord, dim: usize, n: usize) -> String {
    let cols = csv_columns(dim, n);
    let series: Vec<Option<&[f64]>> = cols[1..].iter().map(|c| rec.channel(c)).collect();
    let mut out = cols.join(",");
    out.push('\n');
    for (i, t) in rec.times.iter().enumerate() {
        out.push_str(&number(*t));
        for s in &series {
            out.push(',');
            out.push_str(&number(s.map_or(f64::NAN, |v| v[i])));
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub scenario: String,
    pub flow: &'static str,
    pub dimension: usize,
    pub constraints: usize,
    pub failed: usize,
    pub trajectories: Vec<TrajectorySummary>,
}

#[derive(Debug, Serialize)]
pub struct TrajectorySummary {
    pub index: usize,
    pub file: String,
    pub status: &'static str,
    pub records: usize,
    pub t_end: Option<f64>,
    pub final_purity: Option<f64>,
    pub final_entropy: Option<f64>,
    pub max_abs_residual: Option<f64>,
    pub min_eigenvalue: Option<f64>,
    pub positivity_violated: bool,
    pub error: Option<String>,
    pub failure_time: Option<f64>,
}

fn last(rec: &TrajectoryRecord, name: &str) -> Option<f64> {
    rec.channel(name).and_then(|v| v.last().copied()).filter(|v| v.is_finite())
}

impl TrajectorySummary {
    pub fn new(index: usize, file: String, rec: &TrajectoryRecord, failure: Option<(f64, String)>) -> Self {
        let max_res = rec
            .channels
            .iter()
            .filter(|c| c.name.starts_with("residual_"))
            .flat_map(|c| c.values.iter().map(|v| v.abs()))
            .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))));
        // Eigenvalue channels are ascending, so eig_1 is the lowest.
        let min_eig = rec
            .channel(&channel::eig(0))
            .map(|v| v.iter().copied().filter(|x| x.is_finite()).fold(f64::INFINITY, f64::min))
            .filter(|m| m.is_finite());
        let (error, failure_time) = match failure {
            Some((t, e)) => (Some(e), Some(t)),
            None => (None, None),
        };
        Self {
            index,
            file,
            status: if error.is_some() { "failed" } else { "ok" },
            records: rec.len(),
            t_end: rec.times.last().copied(),
            final_purity: last(rec, channel::PURITY),
            final_entropy: last(rec, channel::ENTROPY),
            max_abs_residual: max_res,
            min_eigenvalue: min_eig,
            positivity_violated: min_eig.is_some_and(|m| m < -POSITIVITY_TOL),
            error,
            failure_time,
        }
    }
}

pub const TRAJECTORY_COLOR: &str = "#1f5f9f";
pub const MARKER_COLOR: &str = "#c0392b";

/// Below this Bloch path length a trajectory is drawn as a fixed point.
pub const STATIONARY_PATH: f64 = 1e-9;

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct SvgCounts {
    pub polylines: usize,
    pub markers: usize,
}

/// `(y, z)` cross-section of the Bloch ball at `x = x0`, scaled so the
/// slice disc is the unit circle.
pub fn cross_section_svg(x0: f64, paths: &[Vec<[f64; 3]>]) -> (String, SvgCounts) {
    let r = (1.0 - x0 * x0).max(0.0).sqrt();
    let scale = if r > 0.0 { 1.0 / r } else { 1.0 };
    let mut counts = SvgCounts::default();
    let mut body = String::new();
    let mut markers = String::new();
    for path in paths {
        let len: f64 = path
            .windows(2)
            .map(|w| ((w[1][1] - w[0][1]).powi(2) + (w[1][2] - w[0][2]).powi(2)).sqrt())
            .sum();
        let Some(first) = path.first() else { continue };
        if len < STATIONARY_PATH {
            counts.markers += 1;
            let _ = writeln!(
                markers,
                r#"  <circle cx="{:.5}" cy="{:.5}" r="0.035" fill="{MARKER_COLOR}"/>"#,
                first[1] * scale,
                -first[2] * scale
            );
        } else {
            counts.polylines += 1;
            let pts: Vec<String> = path
                .iter()
                .map(|p| format!("{:.5},{:.5}", p[1] * scale, -p[2] * scale))
                .collect();
            let _ = writeln!(
                body,
                r#"  <polyline points="{}" fill="none" stroke="{TRAJECTORY_COLOR}" stroke-width="0.006"/>"#,
                pts.join(" ")
            );
        }
    }
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="-1.1 -1.1 2.2 2.2" width="600" height="600">"#
    );
    let _ = writeln!(svg, "  <title>Bloch ball slice x = {x0}</title>");
    let _ = writeln!(
        svg,
        r#"  <circle cx="0" cy="0" r="1" fill="none" stroke="{TRAJECTORY_COLOR}" stroke-width="0.01"/>"#
    );
    svg.push_str(&body);
    svg.push_str(&markers);
    svg.push_str("</svg>\n");
    (svg, counts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn column_layout() {
        assert_eq!(
            csv_columns(2, 1).join(","),
            "t,purity,entropy,eig_1,eig_2,residual_1,lambda_1,hygiene_correction,bloch_x,bloch_y,bloch_z"
        );
        assert_eq!(csv_columns(4, 2).len(), 1 + 2 + 4 + 2 + 2 + 1);
    }

    #[test]
    fn numbers_have_seventeen_significant_digits() {
        assert_eq!(number(0.1), "1.0000000000000001e-1");
        assert_eq!(number(-2.0), "-2.0000000000000000e0");
        assert_eq!(number(f64::NAN), "NaN");
        assert_eq!(number(0.1).parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn stationary_paths_become_markers() {
        let moving = vec![[0.5, 0.0, 0.0], [0.5, 0.1, 0.0]];
        let still = vec![[0.5, 0.2, 0.1]; 3];
        let (svg, counts) = cross_section_svg(0.5, &[moving, still]);
        assert_eq!(counts, SvgCounts { polylines: 1, markers: 1 });
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert_eq!(svg.matches("<circle").count(), 2);
    }
}
