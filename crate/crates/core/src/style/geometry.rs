use std::fmt::Write;

use super::BubbleShape;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathSegment {
    MoveTo(Point),
    LineTo(Point),
    /// Clockwise circular arc of `radius` ending at `to`.
    ArcTo { radius: f64, to: Point },
    Close,
}

/// Closed bubble outline in a `width` x `height` box anchored at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct BubblePath {
    pub width: f64,
    pub height: f64,
    pub segments: Vec<PathSegment>,
}

impl BubblePath {
    /// End points of every drawing segment, starting with the move-to point.
    pub fn points(&self) -> Vec<Point> {
        self.segments
            .iter()
            .filter_map(|s| match *s {
                PathSegment::MoveTo(p) | PathSegment::LineTo(p) => Some(p),
                PathSegment::ArcTo { to, .. } => Some(to),
                PathSegment::Close => None,
            })
            .collect()
    }

    /// Polygon corners (straight segments only paths), without the closing repeat.
    pub fn vertices(&self) -> Vec<Point> {
        let mut pts = self.points();
        if pts.len() > 1 && pts.first() == pts.last() {
            pts.pop();
        }
        pts
    }

    pub fn is_closed(&self) -> bool {
        let pts = self.points();
        matches!(self.segments.last(), Some(PathSegment::Close)) && pts.first() == pts.last()
    }

    /// SVG path data with two-decimal coordinates.
    pub fn to_svg(&self) -> String {
        let mut out = String::new();
        for seg in &self.segments {
            if !out.is_empty() {
                out.push(' ');
            }
            match *seg {
                PathSegment::MoveTo(p) => write!(out, "M {:.2} {:.2}", p.x, p.y),
                PathSegment::LineTo(p) => write!(out, "L {:.2} {:.2}", p.x, p.y),
                PathSegment::ArcTo { radius, to } => {
                    write!(out, "A {radius:.2} {radius:.2} 0 0 1 {:.2} {:.2}", to.x, to.y)
                }
                PathSegment::Close => write!(out, "Z"),
            }
            .expect("writing to a string");
        }
        out
    }
}

const CHAR_WIDTH_EM: f64 = 0.62;
const PAD_EM: f64 = 0.5;
const JAG_EM: f64 = 0.2;
const LIGHTNING_VERTICES: usize = 12;

/// Builds the bubble outline for `text_len` characters at `font_px`.
/// Box: width `0.62*font*len + 2*pad`, height `font + 2*pad`, pad `0.5*font`.
pub fn bubble_geometry(shape: BubbleShape, text_len: usize, font_px: u32) -> BubblePath {
    let font = font_px as f64;
    let pad = PAD_EM * font;
    let width = CHAR_WIDTH_EM * font * text_len.max(1) as f64 + 2.0 * pad;
    let height = font + 2.0 * pad;
    let segments = match shape {
        BubbleShape::Rounded => rounded_rect(width, height, 0.5 * font),
        BubbleShape::Rectangular => rounded_rect(width, height, 0.15 * font),
        BubbleShape::Lightning => jagged(width, height, JAG_EM * font),
    };
    BubblePath {
        width,
        height,
        segments,
    }
}

fn rounded_rect(w: f64, h: f64, radius: f64) -> Vec<PathSegment> {
    let r = radius.min(w / 2.0).min(h / 2.0);
    let p = Point::new;
    vec![
        PathSegment::MoveTo(p(r, 0.0)),
        PathSegment::LineTo(p(w - r, 0.0)),
        PathSegment::ArcTo { radius: r, to: p(w, r) },
        PathSegment::LineTo(p(w, h - r)),
        PathSegment::ArcTo { radius: r, to: p(w - r, h) },
        PathSegment::LineTo(p(r, h)),
        PathSegment::ArcTo { radius: r, to: p(0.0, h - r) },
        PathSegment::LineTo(p(0.0, r)),
        PathSegment::ArcTo { radius: r, to: p(r, 0.0) },
        PathSegment::Close,
    ]
}

/// Twelve vertices evenly spaced clockwise around a rectangle inset by
/// `jag`, pushed alternately outward and inward by `jag`.
fn jagged(w: f64, h: f64, jag: f64) -> Vec<PathSegment> {
    let (x0, y0, x1, y1) = (jag, jag, w - jag, h - jag);
    let (iw, ih) = (x1 - x0, y1 - y0);
    let perimeter = 2.0 * (iw + ih);
    let step = perimeter / LIGHTNING_VERTICES as f64;

    let mut pts = Vec::with_capacity(LIGHTNING_VERTICES + 1);
    for i in 0..LIGHTNING_VERTICES {
        let s = i as f64 * step;
        // position on the inset rectangle and its outward normal
        let (px, py, nx, ny) = if s < iw {
            (x0 + s, y0, 0.0, -1.0)
        } else if s < iw + ih {
            (x1, y0 + (s - iw), 1.0, 0.0)
        } else if s < 2.0 * iw + ih {
            (x1 - (s - iw - ih), y1, 0.0, 1.0)
        } else {
            (x0, y1 - (s - 2.0 * iw - ih), -1.0, 0.0)
        };
        let (nx, ny) = if i == 0 { (-1.0, -1.0) } else { (nx, ny) };
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        pts.push(Point::new(px + sign * jag * nx, py + sign * jag * ny));
    }

    let mut segs = Vec::with_capacity(LIGHTNING_VERTICES + 2);
    segs.push(PathSegment::MoveTo(pts[0]));
    for p in &pts[1..] {
        segs.push(PathSegment::LineTo(*p));
    }
    segs.push(PathSegment::LineTo(pts[0]));
    segs.push(PathSegment::Close);
    segs
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cross(o: Point, a: Point, b: Point) -> f64 {
        (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
    }

    fn segments_cross(a: Point, b: Point, c: Point, d: Point) -> bool {
        let d1 = cross(c, d, a);
        let d2 = cross(c, d, b);
        let d3 = cross(a, b, c);
        let d4 = cross(a, b, d);
        ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
            && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    }

    fn is_simple(vertices: &[Point]) -> bool {
        let n = vertices.len();
        for i in 0..n {
            for j in i + 1..n {
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                let (c, d) = (vertices[j], vertices[(j + 1) % n]);
                if segments_cross(a, b, c, d) {
                    return false;
                }
            }
        }
        true
    }

    #[test]
    fn rounded_box_size() {
        let path = bubble_geometry(BubbleShape::Rounded, 4, 36);
        // 0.62 * 36 * 4 + 36 = 125.28; 36 + 36 = 72
        assert!((path.width - 125.28).abs() < 1e-9);
        assert_eq!(path.height, 72.0);
        assert!(path.is_closed());
        assert!(path.to_svg().starts_with("M 18.00 0.00 L 107.28 0.00 A 18.00 18.00"));
        assert!(path.to_svg().ends_with('Z'));
    }

    #[test]
    fn rectangular_uses_small_radius() {
        let path = bubble_geometry(BubbleShape::Rectangular, 2, 20);
        assert!(path.to_svg().contains("A 3.00 3.00"));
    }

    #[test]
    fn lightning_has_twelve_vertices() {
        let path = bubble_geometry(BubbleShape::Lightning, 5, 30);
        assert_eq!(path.vertices().len(), 12);
        assert!(path.is_closed());
        assert!(is_simple(&path.vertices()));
    }

    proptest! {
        #[test]
        fn paths_are_closed_contained_and_simple(
            shape in prop::sample::select(vec![BubbleShape::Rounded, BubbleShape::Rectangular, BubbleShape::Lightning]),
            len in 1usize..120,
            font in 14u32..=48,
        ) {
            let path = bubble_geometry(shape, len, font);
            prop_assert!(path.is_closed());
            let f = font as f64;
            prop_assert!((path.width - (0.62 * f * len as f64 + f)).abs() < 1e-9);
            prop_assert!((path.height - 2.0 * f).abs() < 1e-9);
            for p in path.points() {
                prop_assert!(p.x >= -1e-9 && p.x <= path.width + 1e-9);
                prop_assert!(p.y >= -1e-9 && p.y <= path.height + 1e-9);
            }
            if shape == BubbleShape::Lightning {
                prop_assert_eq!(path.vertices().len(), 12);
                prop_assert!(is_simple(&path.vertices()));
            }
        }
    }
}
