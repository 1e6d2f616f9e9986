//! Newton polygons: lower convex hull of `(|alpha|, v(c_alpha))`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Serialize, Serializer};

use crate::diff_op::{floor, MicroOp};
use crate::error::{MicroError, Result};
use crate::norm::{int, Rational};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NewtonPolygon {
    /// Per abscissa n, the least valuation over |alpha| = n.
    pub points: Vec<(i64, i64)>,
    pub vertices: Vec<(i64, i64)>,
    #[serde(serialize_with = "ser_slopes")]
    pub slopes: Vec<Rational>,
    /// Whether each slope is known to survive the discarded tail.
    pub certified: Vec<bool>,
    pub truncated: bool,
}

fn ser_slopes<S: Serializer>(v: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|r| r.to_string()))
}

fn cross(o: (i64, i64), a: (i64, i64), b: (i64, i64)) -> i128 {
    (a.0 - o.0) as i128 * (b.1 - o.1) as i128 - (a.1 - o.1) as i128 * (b.0 - o.0) as i128
}

/// Lower hull of points sorted by abscissa; collinear points are dropped.
fn lower_hull(points: &[(i64, i64)]) -> Vec<(i64, i64)> {
    let mut hull: Vec<(i64, i64)> = Vec::new();
    for &pt in points {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], pt) <= 0 {
            hull.pop();
        }
        hull.push(pt);
    }
    hull
}

pub fn polygon(p: &MicroOp) -> Result<NewtonPolygon> {
    p.require_positive()?;
    let mut mins: BTreeMap<i64, i64> = BTreeMap::new();
    for (a, v) in p.valuations() {
        let e = mins.entry(floor(a)).or_insert(v);
        *e = (*e).min(v);
    }
    if mins.is_empty() {
        return Err(MicroError::ZeroOperator);
    }
    let points: Vec<(i64, i64)> = mins.into_iter().collect();
    let vertices = lower_hull(&points);
    let slopes: Vec<Rational> = vertices
        .windows(2)
        .map(|w| Rational::new(w[1].1 - w[0].1, w[1].0 - w[0].0))
        .collect();
    let certified = slopes.iter().map(|&mu| p.norm_mu(mu).is_ok()).collect();
    Ok(NewtonPolygon {
        points,
        vertices,
        slopes,
        certified,
        truncated: p.tail().is_some(),
    })
}

/// True iff `mu` is a slope; the stored data must certify weight `mu`.
pub fn is_slope(p: &MicroOp, mu: Rational) -> Result<bool> {
    p.norm_mu(mu)?;
    Ok(polygon(p)?.slopes.contains(&mu))
}

/// True iff some slope lies in `[r, k]`.
pub fn slope_in_interval(p: &MicroOp, r: Rational, k: Rational) -> Result<bool> {
    if r > k {
        return Err(MicroError::InvalidArgument(format!("empty interval [{r}, {k}]")));
    }
    // certification at k covers every weight below it
    p.norm_mu(k)?;
    Ok(polygon(p)?.slopes.iter().any(|&s| r <= s && s <= k))
}

impl NewtonPolygon {
    /// Plot with abscissa = coefficient index and ordinate = valuation;
    /// the hull is drawn over the point cloud with its slopes labelled.
    pub fn to_svg(&self) -> String {
        let (w, h, m) = (480.0, 360.0, 48.0);
        let nmin = 0i64;
        let nmax = self.points.iter().map(|p| p.0).max().unwrap_or(1).max(1);
        let vmin = self.points.iter().map(|p| p.1).min().unwrap_or(0).min(0);
        let vmax = self.points.iter().map(|p| p.1).max().unwrap_or(1).max(vmin + 1);
        let sx = (w - 2.0 * m) / (nmax - nmin) as f64;
        let sy = (h - 2.0 * m) / (vmax - vmin) as f64;
        let px = |n: i64| m + (n - nmin) as f64 * sx;
        let py = |v: i64| h - m - (v - vmin) as f64 * sy;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
        );
        let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="20" font-family="sans-serif" font-size="14" text-anchor="middle">Newton polygon</text>"#,
            w / 2.0
        );
        // axes
        let (x0, y0) = (px(nmin), py(vmin));
        let _ = writeln!(
            s,
            r#"<g id="axes" stroke="black" stroke-width="1"><line x1="{x0:.1}" y1="{y0:.1}" x2="{:.1}" y2="{y0:.1}"/><line x1="{x0:.1}" y1="{y0:.1}" x2="{x0:.1}" y2="{:.1}"/></g>"#,
            w - m / 2.0,
            m / 2.0
        );
        let _ = writeln!(s, r#"<g id="ticks" font-family="sans-serif" font-size="10">"#);
        for n in nmin..=nmax {
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{n}</text>"#,
                px(n),
                y0 + 14.0
            );
        }
        for v in vmin..=vmax {
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v}</text>"#,
                x0 - 6.0,
                py(v) + 3.0
            );
        }
        let _ = writeln!(s, "</g>");
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="end">n</text>"#,
            w - m / 2.0,
            y0 + 28.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12">v</text>"#,
            x0 + 6.0,
            m / 2.0 + 4.0
        );
        // hull
        let pts: Vec<String> = self
            .vertices
            .iter()
            .map(|&(n, v)| format!("{:.1},{:.1}", px(n), py(v)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline id="hull" points="{}" fill="none" stroke="crimson" stroke-width="2"/>"#,
            pts.join(" ")
        );
        let _ = writeln!(s, r#"<g id="points">"#);
        for &(n, v) in &self.points {
            let is_vertex = self.vertices.contains(&(n, v));
            let fill = if is_vertex { "crimson" } else { "gray" };
            let _ = writeln!(
                s,
                r#"<circle cx="{:.1}" cy="{:.1}" r="4" fill="{fill}" data-n="{n}" data-v="{v}"/>"#,
                px(n),
                py(v)
            );
        }
        let _ = writeln!(s, "</g>");
        let _ = writeln!(s, r#"<g id="slopes" font-family="sans-serif" font-size="11" fill="crimson">"#);
        for (i, wv) in self.vertices.windows(2).enumerate() {
            let (a, b) = (wv[0], wv[1]);
            let mx = (px(a.0) + px(b.0)) / 2.0;
            let my = (py(a.1) + py(b.1)) / 2.0;
            let mark = if self.certified[i] { "" } else { "?" };
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}">{}{mark}</text>"#,
                mx + 4.0,
                my - 6.0,
                self.slopes[i]
            );
        }
        let _ = writeln!(s, "</g>");
        s.push_str("</svg>\n");
        s
    }
}

/// Smallest and largest abscissae realizing the minimum of `v - mu * n` over the points.
pub fn mu_extremes(points: &[(i64, i64)], mu: Rational) -> Option<(i64, i64)> {
    let best = points.iter().map(|&(n, v)| int(v) - mu * int(n)).min()?;
    let hits: Vec<i64> = points
        .iter()
        .filter(|&&(n, v)| int(v) - mu * int(n) == best)
        .map(|p| p.0)
        .collect();
    Some((*hits.first()?, *hits.last()?))
}
