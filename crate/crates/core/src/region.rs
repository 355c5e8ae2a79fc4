//! Grid scans of a membership field over a rectangle of the complex plane,
//! level-set extraction by marching squares, and SVG/CSV/JSON output.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::verdict::Verdict;

pub const DEFAULT_NODES: usize = 301;

/// Rectangle sampled at `nx * ny` nodes, endpoints included.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridSpec {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64, nx: usize, ny: usize) -> Result<Self> {
        let g = Self {
            re_min,
            re_max,
            im_min,
            im_max,
            nx,
            ny,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn square(half_width: f64, n: usize) -> Result<Self> {
        Self::new(-half_width, half_width, -half_width, half_width, n, n)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.re_min, self.re_max, self.im_min, self.im_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.re_min >= self.re_max || self.im_min >= self.im_max {
            return Err(Error::Grid(format!(
                "need re_min < re_max and im_min < im_max, got [{}, {}] x [{}, {}]",
                self.re_min, self.re_max, self.im_min, self.im_max
            )));
        }
        if self.nx < 2 || self.ny < 2 {
            return Err(Error::Grid(format!("need at least 2x2 nodes, got {}x{}", self.nx, self.ny)));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.re_max - self.re_min) / (self.nx - 1) as f64
    }

    pub fn dy(&self) -> f64 {
        (self.im_max - self.im_min) / (self.ny - 1) as f64
    }

    pub fn re(&self, i: usize) -> f64 {
        if i + 1 == self.nx {
            self.re_max
        } else {
            self.re_min + i as f64 * self.dx()
        }
    }

    pub fn im(&self, j: usize) -> f64 {
        if j + 1 == self.ny {
            self.im_max
        } else {
            self.im_min + j as f64 * self.dy()
        }
    }

    pub fn point(&self, i: usize, j: usize) -> C64 {
        C64::new(self.re(i), self.im(j))
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Node indices, row-major with `im` as the slow index.
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn nearest(&self, z: C64) -> Option<(usize, usize)> {
        let fi = ((z.re - self.re_min) / self.dx()).round();
        let fj = ((z.im - self.im_min) / self.dy()).round();
        if fi < 0.0 || fj < 0.0 || fi >= self.nx as f64 || fj >= self.ny as f64 {
            return None;
        }
        Some((fi as usize, fj as usize))
    }

    pub fn contains(&self, z: C64) -> bool {
        z.re >= self.re_min && z.re <= self.re_max && z.im >= self.im_min && z.im <= self.im_max
    }
}

/// `re_min,re_max,im_min,im_max,nx,ny`
impl FromStr for GridSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 6 {
            return Err(Error::Grid(format!(
                "expected re_min,re_max,im_min,im_max,nx,ny, got '{s}'"
            )));
        }
        let num = |k: usize| -> Result<f64> {
            parts[k].parse().map_err(|_| Error::Grid(format!("bad number '{}'", parts[k])))
        };
        let count = |k: usize| -> Result<usize> {
            parts[k].parse().map_err(|_| Error::Grid(format!("bad node count '{}'", parts[k])))
        };
        Self::new(num(0)?, num(1)?, num(2)?, num(3)?, count(4)?, count(5)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Polyline {
    pub points: Vec<C64>,
    pub closed: bool,
}

/// A scalar field sampled on a grid, with the spectrum at `{value >= level}`.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionRaster {
    pub grid: GridSpec,
    pub level: f64,
    pub band: f64,
    pub values: Vec<f64>,
    pub verdicts: Vec<Verdict>,
    pub boundary: Vec<Polyline>,
}

/// Evaluates `field` at every node. Rows are evaluated in parallel on the
/// current rayon pool and assembled by index.
pub fn scan<F>(field: F, grid: GridSpec, level: f64, band: f64) -> RegionRaster
where
    F: Fn(C64) -> f64 + Sync,
{
    let values = scan_nodes(|z| field(z), &grid);
    let verdicts = values.iter().map(|&v| classify(v, level, band)).collect();
    let boundary = contour_values(&grid, &values, level);
    RegionRaster {
        grid,
        level,
        band,
        values,
        verdicts,
        boundary,
    }
}

/// Any per-node map, evaluated like [`scan`].
pub fn scan_nodes<T, F>(f: F, grid: &GridSpec) -> Vec<T>
where
    T: Send,
    F: Fn(C64) -> T + Sync,
{
    let rows: Vec<Vec<T>> = (0..grid.ny)
        .into_par_iter()
        .map(|j| (0..grid.nx).map(|i| f(grid.point(i, j))).collect())
        .collect();
    rows.into_iter().flatten().collect()
}

fn classify(v: f64, level: f64, band: f64) -> Verdict {
    if v.is_nan() {
        Verdict::BoundaryUncertain
    } else {
        Verdict::from_field(v, level, band)
    }
}

impl RegionRaster {
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn verdict(&self, i: usize, j: usize) -> Verdict {
        self.verdicts[self.grid.index(i, j)]
    }

    pub fn count(&self, v: Verdict) -> usize {
        self.verdicts.iter().filter(|&&x| x == v).count()
    }

    /// The 4-connected component of non-resolvent nodes through the node
    /// nearest to `z`, or `None` if that node is resolvent or off the grid.
    pub fn spectrum_component(&self, z: C64) -> Option<Component> {
        let (i0, j0) = self.grid.nearest(z)?;
        let g = &self.grid;
        let member = |k: usize| self.verdicts[k] != Verdict::Resolvent;
        if !member(g.index(i0, j0)) {
            return None;
        }
        let mut seen = vec![false; g.len()];
        let mut stack = vec![(i0, j0)];
        seen[g.index(i0, j0)] = true;
        let mut nodes = 0;
        let mut touches_border = false;
        while let Some((i, j)) = stack.pop() {
            nodes += 1;
            if i == 0 || j == 0 || i + 1 == g.nx || j + 1 == g.ny {
                touches_border = true;
            }
            let mut push = |a: usize, b: usize| {
                let k = g.index(a, b);
                if !seen[k] && member(k) {
                    seen[k] = true;
                    stack.push((a, b));
                }
            };
            if i > 0 {
                push(i - 1, j);
            }
            if i + 1 < g.nx {
                push(i + 1, j);
            }
            if j > 0 {
                push(i, j - 1);
            }
            if j + 1 < g.ny {
                push(i, j + 1);
            }
        }
        Some(Component {
            nodes,
            touches_border,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Component {
    pub nodes: usize,
    pub touches_border: bool,
}

/// Level set of the raster's field.
pub fn contour(raster: &RegionRaster, level: f64) -> Vec<Polyline> {
    contour_values(&raster.grid, &raster.values, level)
}

/// Edge identifiers: horizontal edges run from node `(i, j)` to `(i+1, j)`,
/// vertical ones from `(i, j)` to `(i, j+1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Edge {
    H(usize, usize),
    V(usize, usize),
}

fn crossing(grid: &GridSpec, values: &[f64], level: f64, e: Edge) -> C64 {
    let (a, b) = match e {
        Edge::H(i, j) => ((i, j), (i + 1, j)),
        Edge::V(i, j) => ((i, j), (i, j + 1)),
    };
    let va = values[grid.index(a.0, a.1)];
    let vb = values[grid.index(b.0, b.1)];
    let t = if va.is_infinite() {
        1.0
    } else if vb.is_infinite() {
        0.0
    } else {
        ((level - va) / (vb - va)).clamp(0.0, 1.0)
    };
    let pa = grid.point(a.0, a.1);
    pa + (grid.point(b.0, b.1) - pa) * t
}

/// Marching squares with linear interpolation on cell edges. Saddle cells
/// are resolved by the mean of the four corners.
pub fn contour_values(grid: &GridSpec, values: &[f64], level: f64) -> Vec<Polyline> {
    let mut segments: Vec<(Edge, Edge)> = Vec::new();
    for j in 0..grid.ny - 1 {
        for i in 0..grid.nx - 1 {
            let v = [
                values[grid.index(i, j)],
                values[grid.index(i + 1, j)],
                values[grid.index(i + 1, j + 1)],
                values[grid.index(i, j + 1)],
            ];
            if v.iter().any(|x| x.is_nan()) {
                continue;
            }
            let inside = v.map(|x| x >= level);
            // bottom, right, top, left; edge k joins corners k and k+1
            let edges = [Edge::H(i, j), Edge::V(i + 1, j), Edge::H(i, j + 1), Edge::V(i, j)];
            let cut: Vec<usize> = (0..4).filter(|&k| inside[k] != inside[(k + 1) % 4]).collect();
            match cut.len() {
                2 => segments.push((edges[cut[0]], edges[cut[1]])),
                4 => {
                    let finite: Vec<f64> = v.iter().copied().filter(|x| x.is_finite()).collect();
                    let center = if finite.len() < 4 {
                        f64::INFINITY
                    } else {
                        finite.iter().sum::<f64>() / 4.0
                    };
                    if (center >= level) == inside[0] {
                        // corners 1 and 3 are cut off
                        segments.push((edges[0], edges[1]));
                        segments.push((edges[2], edges[3]));
                    } else {
                        segments.push((edges[3], edges[0]));
                        segments.push((edges[1], edges[2]));
                    }
                }
                _ => {}
            }
        }
    }
    stitch(&segments)
        .into_iter()
        .map(|(chain, closed)| Polyline {
            points: chain.into_iter().map(|e| crossing(grid, values, level, e)).collect(),
            closed,
        })
        .collect()
}

fn stitch(segments: &[(Edge, Edge)]) -> Vec<(Vec<Edge>, bool)> {
    let mut at: HashMap<Edge, Vec<usize>> = HashMap::new();
    for (k, &(a, b)) in segments.iter().enumerate() {
        at.entry(a).or_default().push(k);
        at.entry(b).or_default().push(k);
    }
    let mut used = vec![false; segments.len()];
    let next = |edge: Edge, used: &[bool]| -> Option<usize> {
        at[&edge].iter().copied().find(|&k| !used[k])
    };
    let other = |k: usize, e: Edge| if segments[k].0 == e { segments[k].1 } else { segments[k].0 };
    let mut out = Vec::new();
    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let (first, mut tail) = segments[start];
        let mut chain = vec![first, tail];
        while let Some(k) = next(tail, &used) {
            used[k] = true;
            tail = other(k, tail);
            chain.push(tail);
        }
        let closed = chain.len() > 2 && chain.first() == chain.last();
        if closed {
            chain.pop();
        } else {
            let mut head = first;
            let mut front = Vec::new();
            while let Some(k) = next(head, &used) {
                used[k] = true;
                head = other(k, head);
                front.push(head);
            }
            front.reverse();
            front.extend(chain);
            chain = front;
        }
        out.push((chain, closed));
    }
    out
}

/// Square window around `center` that holds `{field >= level}`, found by
/// walking 90 rays inward from radius `bound` and padding the farthest hit
/// by a quarter.
pub fn fit_window<F>(field: F, center: C64, bound: f64, level: f64, nodes: usize) -> Result<GridSpec>
where
    F: Fn(C64) -> f64,
{
    if !(bound.is_finite() && bound > 0.0) {
        return Err(Error::Grid(format!("window bound must be positive, got {bound}")));
    }
    const RAYS: usize = 90;
    const STEPS: usize = 400;
    let mut extent = 0.0f64;
    for a in 0..RAYS {
        let dir = C64::from_polar(1.0, std::f64::consts::TAU * a as f64 / RAYS as f64);
        for s in (1..=STEPS).rev() {
            let r = bound * s as f64 / STEPS as f64;
            if r <= extent {
                break;
            }
            if field(center + dir * r) >= level {
                extent = r;
                break;
            }
        }
    }
    let half = if extent > 0.0 { 1.25 * extent } else { bound / STEPS as f64 * 4.0 };
    GridSpec::new(center.re - half, center.re + half, center.im - half, center.im + half, nodes, nodes)
}

#[derive(Clone, Debug)]
pub struct SvgStyle {
    /// Width of the plot area in pixels; the height follows the aspect ratio.
    pub width: f64,
    pub margin: f64,
    pub title: Option<String>,
    pub dot_radius: f64,
}

impl Default for SvgStyle {
    fn default() -> Self {
        Self {
            width: 600.0,
            margin: 56.0,
            title: None,
            dot_radius: 1.6,
        }
    }
}

fn nice_step(span: f64) -> f64 {
    let raw = span / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let r = raw / mag;
    let m = if r < 1.5 {
        1.0
    } else if r < 3.5 {
        2.0
    } else if r < 7.5 {
        5.0
    } else {
        10.0
    };
    m * mag
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{:.2}", v);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

/// Gray resolvent nodes, red boundary, blue scatter, framed axes.
pub fn emit_svg(raster: &RegionRaster, contours: &[Polyline], scatter: &[C64], style: &SvgStyle) -> String {
    let g = &raster.grid;
    let w = style.width;
    let h = w * (g.im_max - g.im_min) / (g.re_max - g.re_min);
    let m = style.margin;
    let top = if style.title.is_some() { m + 12.0 } else { m };
    let sx = |re: f64| m + (re - g.re_min) / (g.re_max - g.re_min) * w;
    let sy = |im: f64| top + (g.im_max - im) / (g.im_max - g.im_min) * h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{:.0}" height="{:.0}" viewBox="0 0 {:.0} {:.0}" font-family="sans-serif" font-size="12">"#,
        w + 2.0 * m,
        h + top + m,
        w + 2.0 * m,
        h + top + m
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    if let Some(t) = &style.title {
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="14">{}</text>"#, m + w / 2.0, m * 0.6, xml_escape(t));
    }
    let _ = writeln!(
        s,
        r#"<defs><clipPath id="plot"><rect x="{m:.2}" y="{top:.2}" width="{w:.2}" height="{h:.2}"/></clipPath></defs>"#
    );
    let _ = writeln!(s, r#"<g clip-path="url(#plot)">"#);

    // Each node owns the half-cell around it; runs along a row become one rect.
    let (dx, dy) = (g.dx(), g.dy());
    let _ = writeln!(s, r##"<g fill="#bdbdbd" shape-rendering="crispEdges">"##);
    for j in 0..g.ny {
        let mut i = 0;
        while i < g.nx {
            if raster.verdict(i, j) != Verdict::Resolvent {
                i += 1;
                continue;
            }
            let start = i;
            while i < g.nx && raster.verdict(i, j) == Verdict::Resolvent {
                i += 1;
            }
            let x0 = sx(g.re(start) - dx / 2.0);
            let x1 = sx(g.re(i - 1) + dx / 2.0);
            let y0 = sy(g.im(j) + dy / 2.0);
            let y1 = sy(g.im(j) - dy / 2.0);
            let _ = writeln!(s, r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}"/>"#, x0, y0, x1 - x0, y1 - y0);
        }
    }
    let _ = writeln!(s, "</g>");

    for line in contours {
        let tag = if line.closed { "polygon" } else { "polyline" };
        let pts: Vec<String> = line.points.iter().map(|z| format!("{:.2},{:.2}", sx(z.re), sy(z.im))).collect();
        let _ = writeln!(s, r#"<{tag} points="{}" fill="none" stroke="red" stroke-width="1.5"/>"#, pts.join(" "));
    }
    if !scatter.is_empty() {
        let _ = writeln!(s, r#"<g fill="blue">"#);
        for z in scatter {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="{}"/>"#, sx(z.re), sy(z.im), style.dot_radius);
        }
        let _ = writeln!(s, "</g>");
    }
    let _ = writeln!(s, "</g>");

    let _ = writeln!(s, r#"<rect x="{m:.2}" y="{top:.2}" width="{w:.2}" height="{h:.2}" fill="none" stroke="black"/>"#);
    let step = nice_step(g.re_max - g.re_min);
    let mut v = (g.re_min / step).ceil() * step;
    while v <= g.re_max + 1e-9 * step {
        let x = sx(v);
        let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, top + h, top + h + 5.0);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, top + h + 18.0, fmt_tick(v));
        v += step;
    }
    let step = nice_step(g.im_max - g.im_min);
    let mut v = (g.im_min / step).ceil() * step;
    while v <= g.im_max + 1e-9 * step {
        let y = sy(v);
        let _ = writeln!(s, r#"<line x1="{:.2}" y1="{y:.2}" x2="{m:.2}" y2="{y:.2}" stroke="black"/>"#, m - 5.0);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, m - 8.0, y + 4.0, fmt_tick(v));
        v += step;
    }
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">Re</text>"#, m + w / 2.0, top + h + 38.0);
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" transform="rotate(-90 {:.2} {:.2})">Im</text>"#, m - 38.0, top + h / 2.0, m - 38.0, top + h / 2.0);
    s.push_str("</svg>\n");
    s
}

fn xml_escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub const CSV_HEADER: &str = "re,im,value,verdict";

pub fn emit_csv(raster: &RegionRaster) -> String {
    let g = &raster.grid;
    let mut s = String::with_capacity(g.len() * 48);
    s.push_str(CSV_HEADER);
    s.push('\n');
    for j in 0..g.ny {
        for i in 0..g.nx {
            let z = g.point(i, j);
            let _ = writeln!(s, "{},{},{},{}", z.re, z.im, raster.value(i, j), raster.verdict(i, j).as_str());
        }
    }
    s
}

#[derive(Clone, Debug, PartialEq)]
pub struct CsvRow {
    pub point: C64,
    pub value: f64,
    pub verdict: Verdict,
}

pub fn read_csv(text: &str) -> Result<Vec<CsvRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        _ => return Err(Error::Parse { pos: 0, msg: format!("expected header '{CSV_HEADER}'") }),
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            let bad = |msg: &str| Error::Parse { pos: n + 1, msg: format!("{msg}: '{l}'") };
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 4 {
                return Err(bad("expected 4 fields"));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad("bad number"));
            Ok(CsvRow {
                point: C64::new(num(f[0])?, num(f[1])?),
                value: num(f[2])?,
                verdict: Verdict::parse(f[3]).ok_or_else(|| bad("bad verdict"))?,
            })
        })
        .collect()
}

#[derive(Serialize)]
struct RasterSummary<'a> {
    tool: &'static str,
    version: &'static str,
    grid: &'a GridSpec,
    level: f64,
    band: f64,
    spectrum_nodes: usize,
    resolvent_nodes: usize,
    uncertain_nodes: usize,
    boundary_polylines: usize,
    boundary_vertices: usize,
    meta: &'a serde_json::Value,
}

/// Raster summary plus caller-supplied metadata (polynomial, seeds, ...).
pub fn emit_json(raster: &RegionRaster, meta: &serde_json::Value) -> String {
    let summary = RasterSummary {
        tool: "freespec",
        version: env!("CARGO_PKG_VERSION"),
        grid: &raster.grid,
        level: raster.level,
        band: raster.band,
        spectrum_nodes: raster.count(Verdict::Spectrum),
        resolvent_nodes: raster.count(Verdict::Resolvent),
        uncertain_nodes: raster.count(Verdict::BoundaryUncertain),
        boundary_polylines: raster.boundary.len(),
        boundary_vertices: raster.boundary.iter().map(|p| p.points.len()).sum(),
        meta,
    };
    serde_json::to_string_pretty(&summary).expect("serializable summary")
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
