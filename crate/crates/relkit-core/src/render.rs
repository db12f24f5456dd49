//! Deterministic SVG phase plots.
//!
//! One-dimensional grids render in the (x, y) plane of X x X: relations as
//! their box-product rectangles, box sets as bands, and optionally the
//! forbidden product region of a block. Two-dimensional grids render box
//! sets directly in the plane. Identical inputs produce byte-identical SVG.

use crate::error::{Error, Result};
use crate::grid::{BoxSet, Grid};
use crate::relation::BoxRelation;

#[derive(Debug, Clone)]
pub enum RenderElement {
    Set { name: String, set: BoxSet },
    Relation { name: String, rel: BoxRelation },
    /// The product region set x closure-of-complement(set).
    Forbidden { name: String, set: BoxSet },
}

impl RenderElement {
    fn name(&self) -> &str {
        match self {
            RenderElement::Set { name, .. }
            | RenderElement::Relation { name, .. }
            | RenderElement::Forbidden { name, .. } => name,
        }
    }
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];
const SIZE: f64 = 640.0;
const MARGIN: f64 = 48.0;

fn fnum(v: f64) -> String {
    format!("{v:.3}")
}

struct Frame {
    x_lo: f64,
    x_hi: f64,
    y_lo: f64,
    y_hi: f64,
}

impl Frame {
    fn map_x(&self, v: f64) -> f64 {
        MARGIN + (v - self.x_lo) / (self.x_hi - self.x_lo) * (SIZE - 2.0 * MARGIN)
    }

    fn map_y(&self, v: f64) -> f64 {
        MARGIN + (self.y_hi - v) / (self.y_hi - self.y_lo) * (SIZE - 2.0 * MARGIN)
    }

    fn rect(&self, x0: f64, x1: f64, y0: f64, y1: f64, fill: &str, opacity: f64) -> String {
        let (sx, sy) = (self.map_x(x0), self.map_y(y1));
        let (w, h) = (self.map_x(x1) - sx, self.map_y(y0) - sy);
        format!(
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\" fill-opacity=\"{}\"/>\n",
            fnum(sx),
            fnum(sy),
            fnum(w),
            fnum(h),
            fill,
            fnum(opacity)
        )
    }
}

/// Contiguous runs of flat box indices (1-D axis runs).
fn runs(ids: impl Iterator<Item = usize>) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = Vec::new();
    for id in ids {
        match out.last_mut() {
            Some((_, hi)) if *hi + 1 == id => *hi = id,
            _ => out.push((id, id)),
        }
    }
    out
}

pub fn render_svg(grid: &Grid, elements: &[RenderElement]) -> Result<String> {
    match grid.dim() {
        1 => render_1d(grid, elements),
        2 => render_2d(grid, elements),
        d => Err(Error::Render(format!(
            "direct plots support dimensions 1 and 2, grid has {d}"
        ))),
    }
}

fn header() -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{s}\" height=\"{s}\" viewBox=\"0 0 {s} {s}\">\n<rect width=\"{s}\" height=\"{s}\" fill=\"white\"/>\n",
        s = SIZE
    )
}

fn legend(elements: &[RenderElement]) -> String {
    let mut out = String::new();
    for (i, el) in elements.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let y = 16.0 + 16.0 * i as f64;
        out.push_str(&format!(
            "<rect x=\"8\" y=\"{}\" width=\"10\" height=\"10\" fill=\"{}\"/>\n",
            fnum(y - 9.0),
            color
        ));
        out.push_str(&format!(
            "<text x=\"22\" y=\"{}\" font-family=\"monospace\" font-size=\"12\">{}</text>\n",
            fnum(y),
            el.name()
        ));
    }
    out
}

fn axis_label(frame: &Frame) -> String {
    let mut out = String::new();
    for (value, edge) in [(frame.x_lo, true), (frame.x_hi, false)] {
        let x = if edge { MARGIN } else { SIZE - MARGIN };
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
            fnum(x),
            fnum(SIZE - MARGIN + 16.0),
            value
        ));
    }
    for (value, top) in [(frame.y_hi, true), (frame.y_lo, false)] {
        let y = if top { MARGIN } else { SIZE - MARGIN };
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"end\">{}</text>\n",
            fnum(MARGIN - 6.0),
            fnum(y + 4.0),
            value
        ));
    }
    out
}

fn render_1d(grid: &Grid, elements: &[RenderElement]) -> Result<String> {
    let b = grid.bounds()[0];
    let frame = Frame {
        x_lo: b.lo,
        x_hi: b.hi,
        y_lo: b.lo,
        y_hi: b.hi,
    };
    let mut out = header();
    for (i, el) in elements.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        match el {
            RenderElement::Relation { rel, .. } => {
                // coalesce contiguous target runs per source box
                let mut current: Option<(usize, Vec<usize>)> = None;
                let flush = |src: usize, targets: &[usize], out: &mut String| {
                    let sr = grid.box_rect(src)[0];
                    for (t0, t1) in runs(targets.iter().copied()) {
                        let r0 = grid.box_rect(t0)[0];
                        let r1 = grid.box_rect(t1)[0];
                        out.push_str(&frame.rect(sr.lo, sr.hi, r0.lo, r1.hi, color, 0.55));
                    }
                };
                for &(a, t) in rel.pairs() {
                    match current.take() {
                        Some((src, mut ts)) if src == a => {
                            ts.push(t);
                            current = Some((src, ts));
                        }
                        Some((src, ts)) => {
                            flush(src, &ts, &mut out);
                            current = Some((a, vec![t]));
                        }
                        None => current = Some((a, vec![t])),
                    }
                }
                if let Some((src, ts)) = current {
                    flush(src, &ts, &mut out);
                }
            }
            RenderElement::Set { set, .. } => {
                for (i0, i1) in runs(set.boxes().iter().copied()) {
                    let r0 = grid.box_rect(i0)[0];
                    let r1 = grid.box_rect(i1)[0];
                    // translucent vertical band plus a solid strip on the axis
                    out.push_str(&frame.rect(r0.lo, r1.hi, frame.y_lo, frame.y_hi, color, 0.12));
                    let strip = 0.012 * (frame.y_hi - frame.y_lo);
                    out.push_str(&frame.rect(
                        r0.lo,
                        r1.hi,
                        frame.y_lo,
                        frame.y_lo + strip,
                        color,
                        0.9,
                    ));
                }
            }
            RenderElement::Forbidden { set, .. } => {
                let clc = set.closure_of_complement();
                for (s0, s1) in runs(set.boxes().iter().copied()) {
                    let sr0 = grid.box_rect(s0)[0];
                    let sr1 = grid.box_rect(s1)[0];
                    for (t0, t1) in runs(clc.boxes().iter().copied()) {
                        let tr0 = grid.box_rect(t0)[0];
                        let tr1 = grid.box_rect(t1)[0];
                        out.push_str(&frame.rect(sr0.lo, sr1.hi, tr0.lo, tr1.hi, color, 0.25));
                    }
                }
            }
        }
    }
    // diagonal y = x for cobweb context
    out.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#444444\" stroke-width=\"1\" stroke-dasharray=\"4,3\"/>\n",
        fnum(frame.map_x(frame.x_lo)),
        fnum(frame.map_y(frame.x_lo)),
        fnum(frame.map_x(frame.x_hi)),
        fnum(frame.map_y(frame.x_hi)),
    ));
    out.push_str(&outline());
    out.push_str(&axis_label(&frame));
    out.push_str(&legend(elements));
    out.push_str("</svg>\n");
    Ok(out)
}

fn render_2d(grid: &Grid, elements: &[RenderElement]) -> Result<String> {
    let bx = grid.bounds()[0];
    let by = grid.bounds()[1];
    let frame = Frame {
        x_lo: bx.lo,
        x_hi: bx.hi,
        y_lo: by.lo,
        y_hi: by.hi,
    };
    let mut out = header();
    for (i, el) in elements.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        match el {
            RenderElement::Set { set, .. } => {
                // coalesce runs along the second axis
                for (i0, i1) in runs(set.boxes().iter().copied()) {
                    let m0 = grid.to_multi(i0);
                    let m1 = grid.to_multi(i1);
                    if m0[0] == m1[0] {
                        let r0 = grid.box_rect(i0);
                        let r1 = grid.box_rect(i1);
                        out.push_str(&frame.rect(r0[0].lo, r0[0].hi, r0[1].lo, r1[1].hi, color, 0.6));
                    } else {
                        for id in i0..=i1 {
                            let r = grid.box_rect(id);
                            out.push_str(&frame.rect(r[0].lo, r[0].hi, r[1].lo, r[1].hi, color, 0.6));
                        }
                    }
                }
            }
            RenderElement::Relation { name, .. } => {
                return Err(Error::Render(format!(
                    "relation `{name}` on a 2-D grid lives in four dimensions; export its CSV instead"
                )));
            }
            RenderElement::Forbidden { name, .. } => {
                return Err(Error::Render(format!(
                    "forbidden region of `{name}` on a 2-D grid lives in four dimensions"
                )));
            }
        }
    }
    out.push_str(&outline());
    out.push_str(&axis_label(&frame));
    out.push_str(&legend(elements));
    out.push_str("</svg>\n");
    Ok(out)
}

fn outline() -> String {
    format!(
        "<rect x=\"{m}\" y=\"{m}\" width=\"{w}\" height=\"{w}\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\"/>\n",
        m = fnum(MARGIN),
        w = fnum(SIZE - 2.0 * MARGIN)
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::interval::Interval;

    #[test]
    fn empty_set_gives_outline_only_svg() {
        let g = Grid::new(vec![(0.0, 3.0)], vec![30]).unwrap();
        let svg = render_svg(
            &g,
            &[RenderElement::Set {
                name: "E".into(),
                set: g.empty_set(),
            }],
        )
        .unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("stroke=\"black\""));
    }

    #[test]
    fn same_input_same_bytes() {
        let g = Grid::new(vec![(0.0, 3.0)], vec![300]).unwrap();
        let b = g.cover(&[Interval::new(1.0, 2.0)]).unwrap();
        let rel = BoxRelation::identity(&g);
        let els = vec![
            RenderElement::Set {
                name: "B".into(),
                set: b.clone(),
            },
            RenderElement::Relation {
                name: "id".into(),
                rel,
            },
            RenderElement::Forbidden {
                name: "B".into(),
                set: b,
            },
        ];
        let a = render_svg(&g, &els).unwrap();
        let c = render_svg(&g, &els).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn three_dims_unsupported() {
        let g = Grid::new(vec![(0.0, 1.0), (0.0, 1.0), (0.0, 1.0)], vec![4, 4, 4]).unwrap();
        assert!(render_svg(&g, &[]).is_err());
    }

    #[test]
    fn relation_on_2d_grid_unsupported() {
        let g = Grid::new(vec![(0.0, 1.0), (0.0, 1.0)], vec![4, 4]).unwrap();
        let rel = BoxRelation::identity(&g);
        assert!(render_svg(
            &g,
            &[RenderElement::Relation {
                name: "r".into(),
                rel
            }]
        )
        .is_err());
    }
}
