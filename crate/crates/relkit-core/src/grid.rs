//! Uniform box decompositions of compact rectangles and finite box sets.
//!
//! A `Grid` splits a compact rectangle in R^n into axis-aligned closed boxes
//! of equal width per axis. Boxes are closed, so adjacent boxes share their
//! boundary faces; a point on a shared face belongs to every incident box.
//! A `BoxSet` denotes the closed union of its member boxes. Every metric
//! quantity uses the sup metric `d(x, u) = max_k |x_k - u_k|`.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::interval::Interval;

/// Flattened box index (row-major over the multi-index).
pub type BoxId = usize;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    bounds: Vec<Interval>,
    divisions: Vec<usize>,
    widths: Vec<f64>,
    strides: Vec<usize>,
    len: usize,
    /// Comparison slack used when deciding box/rectangle contact. Boundary
    /// coincidences computed in floating point must never exclude a touching
    /// box, or the outer-approximation contract breaks.
    slack: f64,
}

impl Grid {
    pub fn new(bounds: Vec<(f64, f64)>, divisions: Vec<usize>) -> Result<Arc<Grid>> {
        if bounds.is_empty() {
            return Err(Error::InvalidDomain("grid needs at least one axis".into()));
        }
        if bounds.len() != divisions.len() {
            return Err(Error::Arity(format!(
                "{} bounds but {} division counts",
                bounds.len(),
                divisions.len()
            )));
        }
        let mut ivs = Vec::with_capacity(bounds.len());
        let mut widths = Vec::with_capacity(bounds.len());
        let mut scale: f64 = 1.0;
        for (k, (&(lo, hi), &div)) in bounds.iter().zip(&divisions).enumerate() {
            if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
                return Err(Error::InvalidDomain(format!(
                    "axis {k}: [{lo}, {hi}] is not a nondegenerate interval"
                )));
            }
            if div == 0 {
                return Err(Error::InvalidDomain(format!("axis {k}: zero divisions")));
            }
            ivs.push(Interval::new(lo, hi));
            widths.push((hi - lo) / div as f64);
            scale = scale.max(lo.abs()).max(hi.abs());
        }
        let mut strides = vec![0usize; divisions.len()];
        let mut len = 1usize;
        for k in (0..divisions.len()).rev() {
            strides[k] = len;
            len = len
                .checked_mul(divisions[k])
                .ok_or_else(|| Error::Capacity("grid too large".into()))?;
        }
        Ok(Arc::new(Grid {
            bounds: ivs,
            divisions,
            widths,
            strides,
            len,
            slack: 1e-9 * scale.max(1.0),
        }))
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    /// Total number of boxes.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn bounds(&self) -> &[Interval] {
        &self.bounds
    }

    pub fn divisions(&self) -> &[usize] {
        &self.divisions
    }

    /// Per-axis box width h_k.
    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    /// Largest box width over all axes.
    pub fn h_max(&self) -> f64 {
        self.widths.iter().cloned().fold(0.0, f64::max)
    }

    pub fn slack(&self) -> f64 {
        self.slack
    }

    pub fn to_multi(&self, id: BoxId) -> Vec<usize> {
        let mut rest = id;
        self.strides
            .iter()
            .map(|&s| {
                let q = rest / s;
                rest %= s;
                q
            })
            .collect()
    }

    pub fn from_multi(&self, multi: &[usize]) -> BoxId {
        multi
            .iter()
            .zip(&self.strides)
            .map(|(&i, &s)| i * s)
            .sum()
    }

    /// Closed rectangle denoted by a box.
    pub fn box_rect(&self, id: BoxId) -> Vec<Interval> {
        let multi = self.to_multi(id);
        multi
            .iter()
            .enumerate()
            .map(|(k, &i)| {
                Interval::new(
                    self.bounds[k].lo + i as f64 * self.widths[k],
                    self.bounds[k].lo + (i + 1) as f64 * self.widths[k],
                )
            })
            .collect()
    }

    /// Per-axis index range of boxes whose closed box meets the closed
    /// interval `[iv.lo, iv.hi]`, with outward slack. Empty when disjoint
    /// from the axis bounds.
    fn axis_cover(&self, k: usize, iv: Interval) -> Option<(usize, usize)> {
        let b = self.bounds[k];
        let lo = iv.lo.max(b.lo);
        let hi = iv.hi.min(b.hi);
        if lo > hi + self.slack {
            return None;
        }
        let h = self.widths[k];
        let div = self.divisions[k];
        let guess_lo = (((lo - b.lo) / h).floor() as isize - 1).max(0) as usize;
        let guess_hi = ((((hi - b.lo) / h).ceil() as isize) + 1).min(div as isize - 1) as usize;
        let touch = |i: usize| -> bool {
            let edge_lo = b.lo + i as f64 * h;
            let edge_hi = b.lo + (i + 1) as f64 * h;
            edge_lo <= hi + self.slack && edge_hi >= lo - self.slack
        };
        let mut first = None;
        for i in guess_lo..=guess_hi.min(div - 1) {
            if touch(i) {
                first = Some(i);
                break;
            }
        }
        let first = first?;
        let mut last = first;
        for i in (first..=guess_hi.min(div - 1)).rev() {
            if touch(i) {
                last = i;
                break;
            }
        }
        Some((first, last))
    }

    /// All boxes whose closed box intersects the closed rectangle. The
    /// denoted set contains `rect ∩ X`; a rectangle outside the bounds gives
    /// the empty set.
    pub fn cover(self: &Arc<Self>, rect: &[Interval]) -> Result<BoxSet> {
        if rect.len() != self.dim() {
            return Err(Error::Arity(format!(
                "rectangle has {} axes, grid has {}",
                rect.len(),
                self.dim()
            )));
        }
        let mut ranges = Vec::with_capacity(self.dim());
        for (k, iv) in rect.iter().enumerate() {
            if iv.lo > iv.hi {
                return Err(Error::InvalidDomain(format!(
                    "axis {k}: rectangle interval [{}, {}] reversed",
                    iv.lo, iv.hi
                )));
            }
            match self.axis_cover(k, *iv) {
                Some(r) => ranges.push(r),
                None => return Ok(BoxSet::empty(self)),
            }
        }
        let mut boxes = BTreeSet::new();
        let mut multi: Vec<usize> = ranges.iter().map(|r| r.0).collect();
        'outer: loop {
            boxes.insert(self.from_multi(&multi));
            let mut k = self.dim();
            loop {
                if k == 0 {
                    break 'outer;
                }
                k -= 1;
                if multi[k] < ranges[k].1 {
                    multi[k] += 1;
                    for j in k + 1..self.dim() {
                        multi[j] = ranges[j].0;
                    }
                    break;
                }
            }
        }
        Ok(BoxSet {
            grid: Arc::clone(self),
            boxes,
        })
    }

    pub fn full(self: &Arc<Self>) -> BoxSet {
        BoxSet {
            grid: Arc::clone(self),
            boxes: (0..self.len).collect(),
        }
    }

    pub fn empty_set(self: &Arc<Self>) -> BoxSet {
        BoxSet::empty(self)
    }

    /// Moore neighbors (face, edge and corner contact) of a box, staying
    /// inside the grid. The box itself is not included.
    pub fn moore_neighbors(&self, id: BoxId) -> Vec<BoxId> {
        let multi = self.to_multi(id);
        let mut out = Vec::new();
        let mut offsets = vec![-1isize; self.dim()];
        loop {
            if offsets.iter().any(|&o| o != 0) {
                let mut ok = true;
                let mut nid = 0usize;
                for k in 0..self.dim() {
                    let v = multi[k] as isize + offsets[k];
                    if v < 0 || v >= self.divisions[k] as isize {
                        ok = false;
                        break;
                    }
                    nid += v as usize * self.strides[k];
                }
                if ok {
                    out.push(nid);
                }
            }
            let mut k = self.dim();
            loop {
                if k == 0 {
                    return out;
                }
                k -= 1;
                if offsets[k] < 1 {
                    offsets[k] += 1;
                    for j in k + 1..self.dim() {
                        offsets[j] = -1;
                    }
                    break;
                }
            }
        }
    }

    /// Exact sup-metric distance between two closed boxes.
    pub fn box_distance(&self, a: BoxId, b: BoxId) -> f64 {
        let ma = self.to_multi(a);
        let mb = self.to_multi(b);
        let mut gap: f64 = 0.0;
        for k in 0..self.dim() {
            let d = ma[k].abs_diff(mb[k]);
            if d > 1 {
                gap = gap.max((d - 1) as f64 * self.widths[k]);
            }
        }
        gap
    }

    /// Largest per-axis index offset whose boxes stay within sup distance
    /// `eps`. Inclusion at the boundary is resolved outward.
    pub fn dilation_radius(&self, k: usize, eps: f64) -> usize {
        let h = self.widths[k];
        let mut m = 1usize;
        while (m as f64) * h <= eps + self.slack {
            m += 1;
            if m > self.divisions[k] {
                break;
            }
        }
        m // boxes at offset m have gap (m-1)*h <= eps
    }
}

/// A finite set of grid boxes, denoting the closed union of those boxes.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxSet {
    grid: Arc<Grid>,
    boxes: BTreeSet<BoxId>,
}

impl BoxSet {
    pub fn empty(grid: &Arc<Grid>) -> BoxSet {
        BoxSet {
            grid: Arc::clone(grid),
            boxes: BTreeSet::new(),
        }
    }

    pub fn from_boxes(grid: &Arc<Grid>, boxes: BTreeSet<BoxId>) -> Result<BoxSet> {
        if let Some(&max) = boxes.iter().next_back() {
            if max >= grid.len() {
                return Err(Error::Range(format!(
                    "box id {max} out of range for grid of {} boxes",
                    grid.len()
                )));
            }
        }
        Ok(BoxSet {
            grid: Arc::clone(grid),
            boxes,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn boxes(&self) -> &BTreeSet<BoxId> {
        &self.boxes
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.boxes.len() == self.grid.len()
    }

    pub fn contains(&self, id: BoxId) -> bool {
        self.boxes.contains(&id)
    }

    pub fn is_subset(&self, other: &BoxSet) -> bool {
        self.boxes.is_subset(&other.boxes)
    }

    pub fn union(&self, other: &BoxSet) -> Result<BoxSet> {
        self.check_grid(other)?;
        Ok(BoxSet {
            grid: Arc::clone(&self.grid),
            boxes: self.boxes.union(&other.boxes).cloned().collect(),
        })
    }

    pub fn intersection(&self, other: &BoxSet) -> Result<BoxSet> {
        self.check_grid(other)?;
        Ok(BoxSet {
            grid: Arc::clone(&self.grid),
            boxes: self.boxes.intersection(&other.boxes).cloned().collect(),
        })
    }

    pub fn difference(&self, other: &BoxSet) -> Result<BoxSet> {
        self.check_grid(other)?;
        Ok(BoxSet {
            grid: Arc::clone(&self.grid),
            boxes: self.boxes.difference(&other.boxes).cloned().collect(),
        })
    }

    pub fn complement(&self) -> BoxSet {
        BoxSet {
            grid: Arc::clone(&self.grid),
            boxes: (0..self.grid.len())
                .filter(|id| !self.boxes.contains(id))
                .collect(),
        }
    }

    pub fn check_grid(&self, other: &BoxSet) -> Result<()> {
        if *self.grid != *other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// Boxes of the set all of whose Moore neighbors (within the grid) are
    /// also in the set. The denotation is contained in the topological
    /// interior of the denoted set relative to the grid rectangle.
    pub fn interior(&self) -> BoxSet {
        let boxes = self
            .boxes
            .iter()
            .filter(|&&id| {
                self.grid
                    .moore_neighbors(id)
                    .iter()
                    .all(|n| self.boxes.contains(n))
            })
            .cloned()
            .collect();
        BoxSet {
            grid: Arc::clone(&self.grid),
            boxes,
        }
    }

    /// Complement of the combinatorial interior; its denotation contains the
    /// closure of the complement of the denoted set.
    pub fn closure_of_complement(&self) -> BoxSet {
        self.interior().complement()
    }

    /// Grow by one Moore ring.
    pub fn fatten(&self) -> BoxSet {
        let mut boxes = self.boxes.clone();
        for &id in &self.boxes {
            boxes.extend(self.grid.moore_neighbors(id));
        }
        BoxSet {
            grid: Arc::clone(&self.grid),
            boxes,
        }
    }

    /// Minimum sup-metric distance between the two denoted closed sets;
    /// infinity when either is empty.
    pub fn distance(&self, other: &BoxSet) -> Result<f64> {
        self.check_grid(other)?;
        if self.is_empty() || other.is_empty() {
            return Ok(f64::INFINITY);
        }
        let mut best = f64::INFINITY;
        for &a in &self.boxes {
            let d = self.distance_to_box(a, other);
            if d < best {
                best = d;
                if best == 0.0 {
                    return Ok(0.0);
                }
            }
        }
        Ok(best)
    }

    /// Distance from one box to the denoted set (infinity when empty).
    pub fn distance_to_box(&self, from: BoxId, other: &BoxSet) -> f64 {
        let mut best = f64::INFINITY;
        for &b in &other.boxes {
            let d = self.grid.box_distance(from, b);
            if d < best {
                best = d;
                if best == 0.0 {
                    break;
                }
            }
        }
        best
    }

    /// Per-axis bounding rectangle of the denoted set, if nonempty.
    pub fn bounding_rect(&self) -> Option<Vec<Interval>> {
        let mut rect: Option<Vec<Interval>> = None;
        for &id in &self.boxes {
            let r = self.grid.box_rect(id);
            rect = Some(match rect {
                None => r,
                Some(acc) => acc
                    .iter()
                    .zip(&r)
                    .map(|(a, b)| a.hull(b))
                    .collect(),
            });
        }
        rect
    }

    /// Diameter of the bounding rectangle in the sup metric (0 for empty).
    pub fn diameter(&self) -> f64 {
        self.bounding_rect()
            .map(|r| r.iter().map(|iv| iv.width()).fold(0.0, f64::max))
            .unwrap_or(0.0)
    }

    /// Sorted multi-indices, the canonical serialization order.
    pub fn multi_indices(&self) -> Vec<Vec<usize>> {
        self.boxes.iter().map(|&id| self.grid.to_multi(id)).collect()
    }
}
