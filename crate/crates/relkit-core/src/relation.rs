//! Box relations: finite unions of box products in X x X, and the relation
//! calculus on them (image, transpose, composition, iteration, bloat).
//!
//! A `BoxRelation` is a set of ordered box-index pairs `(source, target)`
//! denoting the closed set `U source_box x target_box`. Rasterization from a
//! `RelationSpec` always produces an outer approximation: the true relation
//! is contained in the denotation.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::grid::{BoxId, BoxSet, Grid};
use crate::interval::Interval;

/// Declarative description of a relation before rasterization.
#[derive(Debug, Clone, PartialEq)]
pub enum SpecKind {
    /// Graph of a map given by one expression per target component.
    Map(Vec<Expr>),
    /// Union of products of closed rectangles (possibly degenerate).
    BoxUnion(Vec<(Vec<Interval>, Vec<Interval>)>),
    Transpose(Box<RelationSpec>),
    Union(Vec<RelationSpec>),
    Bloat(Box<RelationSpec>, f64),
    Identity,
    Empty,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelationSpec {
    pub kind: SpecKind,
    /// Parameter bindings visible to this node's subtree.
    pub params: BTreeMap<String, f64>,
}

impl RelationSpec {
    pub fn new(kind: SpecKind) -> Self {
        RelationSpec {
            kind,
            params: BTreeMap::new(),
        }
    }

    pub fn map(exprs: Vec<Expr>) -> Self {
        Self::new(SpecKind::Map(exprs))
    }

    pub fn empty() -> Self {
        Self::new(SpecKind::Empty)
    }

    pub fn identity() -> Self {
        Self::new(SpecKind::Identity)
    }

    pub fn with_param(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }

    /// Bind a parameter at the root scope.
    pub fn bind(&self, name: &str, value: f64) -> RelationSpec {
        let mut out = self.clone();
        out.params.insert(name.to_string(), value);
        out
    }

    /// Parameters used somewhere in the tree but bound nowhere in scope.
    pub fn free_params(&self) -> Vec<String> {
        let mut free = BTreeSet::new();
        self.collect_free(&BTreeSet::new(), &mut free);
        free.into_iter().collect()
    }

    fn collect_free(&self, bound: &BTreeSet<String>, free: &mut BTreeSet<String>) {
        let mut scope = bound.clone();
        scope.extend(self.params.keys().cloned());
        match &self.kind {
            SpecKind::Map(exprs) => {
                for e in exprs {
                    for p in e.params() {
                        if !scope.contains(&p) {
                            free.insert(p);
                        }
                    }
                }
            }
            SpecKind::Transpose(inner) | SpecKind::Bloat(inner, _) => {
                inner.collect_free(&scope, free)
            }
            SpecKind::Union(parts) => {
                for p in parts {
                    p.collect_free(&scope, free);
                }
            }
            _ => {}
        }
    }

    /// Outer rasterization onto the grid.
    pub fn rasterize(&self, grid: &Arc<Grid>) -> Result<BoxRelation> {
        self.rasterize_scoped(grid, &BTreeMap::new())
    }

    fn rasterize_scoped(
        &self,
        grid: &Arc<Grid>,
        outer: &BTreeMap<String, f64>,
    ) -> Result<BoxRelation> {
        let mut scope = outer.clone();
        scope.extend(self.params.iter().map(|(k, v)| (k.clone(), *v)));
        match &self.kind {
            SpecKind::Empty => Ok(BoxRelation::empty(grid)),
            SpecKind::Identity => Ok(BoxRelation::identity(grid)),
            SpecKind::Transpose(inner) => Ok(inner.rasterize_scoped(grid, &scope)?.transpose()),
            SpecKind::Union(parts) => {
                let mut acc = BoxRelation::empty(grid);
                for p in parts {
                    acc = acc.union(&p.rasterize_scoped(grid, &scope)?)?;
                }
                Ok(acc)
            }
            SpecKind::Bloat(inner, eps) => {
                if *eps < 0.0 {
                    return Err(Error::Spec(format!("bloat radius {eps} is negative")));
                }
                inner.rasterize_scoped(grid, &scope)?.bloat(*eps)
            }
            SpecKind::BoxUnion(rects) => {
                let mut pairs = BTreeSet::new();
                for (src, dst) in rects {
                    let s = grid.cover(src)?;
                    let t = grid.cover(dst)?;
                    for &a in s.boxes() {
                        for &b in t.boxes() {
                            pairs.insert((a, b));
                        }
                    }
                }
                BoxRelation::from_pairs(grid, pairs)
            }
            SpecKind::Map(exprs) => {
                if exprs.len() != grid.dim() {
                    return Err(Error::Arity(format!(
                        "map has {} components, grid dimension is {}",
                        exprs.len(),
                        grid.dim()
                    )));
                }
                let bound: Vec<Expr> = exprs
                    .iter()
                    .map(|e| e.bind(&scope))
                    .collect::<Result<_>>()?;
                let grads: Vec<Vec<Expr>> = bound
                    .iter()
                    .map(|e| (0..grid.dim()).map(|k| e.derivative(k)).collect())
                    .collect();
                let mut pairs = BTreeSet::new();
                for src in 0..grid.len() {
                    let rect = grid.box_rect(src);
                    let mut image = Vec::with_capacity(grid.dim());
                    for (e, g) in bound.iter().zip(&grads) {
                        image.push(component_enclosure(e, g, &rect)?);
                    }
                    // restrict to the phase space; an image outside X means
                    // the relation has no pairs from this box
                    let mut clipped = Vec::with_capacity(grid.dim());
                    let mut inside = true;
                    for (iv, b) in image.iter().zip(grid.bounds()) {
                        match iv.intersect(b) {
                            Some(c) => clipped.push(c),
                            None => {
                                inside = false;
                                break;
                            }
                        }
                    }
                    if !inside {
                        continue;
                    }
                    let targets = grid.cover(&clipped)?;
                    for &t in targets.boxes() {
                        pairs.insert((src, t));
                    }
                }
                BoxRelation::from_pairs(grid, pairs)
            }
        }
    }
}

/// Enclosure of one map component over a box: natural interval extension
/// intersected with a first-order mean-value form, hulled over a binary
/// subdivision of the widest axis. The mean-value form is padded so that
/// round-to-nearest point evaluations stay inside.
fn component_enclosure(expr: &Expr, grad: &[Expr], rect: &[Interval]) -> Result<Interval> {
    let split_axis = rect
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.width().total_cmp(&b.1.width()))
        .map(|(k, _)| k)
        .unwrap_or(0);
    let mut out: Option<Interval> = None;
    for part in 0..2 {
        let mut sub = rect.to_vec();
        let iv = rect[split_axis];
        let mid = iv.midpoint();
        sub[split_axis] = if part == 0 {
            Interval::new(iv.lo, mid)
        } else {
            Interval::new(mid, iv.hi)
        };
        let natural = expr.eval_interval(&sub)?;
        let enc = match mean_value_form(expr, grad, &sub)? {
            Some(mv) => natural.intersect(&mv).unwrap_or(natural),
            None => natural,
        };
        out = Some(match out {
            None => enc,
            Some(acc) => acc.hull(&enc),
        });
    }
    Ok(out.unwrap())
}

fn mean_value_form(expr: &Expr, grad: &[Expr], rect: &[Interval]) -> Result<Option<Interval>> {
    let mid: Vec<f64> = rect.iter().map(|iv| iv.midpoint()).collect();
    let center = expr.eval_point(&mid)?;
    if !center.is_finite() {
        return Ok(None);
    }
    let mut acc = Interval::point(center);
    for (k, g) in grad.iter().enumerate() {
        let slope = g.eval_interval(rect)?;
        let radius = 0.5 * rect[k].width();
        let dev = Interval::new(-radius, radius);
        acc = acc.add(&slope.mul(&dev));
    }
    let scale = acc.lo.abs().max(acc.hi.abs()).max(1.0);
    Ok(Some(acc.widen(1e-11 * scale)))
}

/// A finite set of ordered box pairs denoting a closed relation on X.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxRelation {
    grid: Arc<Grid>,
    pairs: BTreeSet<(BoxId, BoxId)>,
    succ: BTreeMap<BoxId, Vec<BoxId>>,
}

impl BoxRelation {
    pub fn empty(grid: &Arc<Grid>) -> BoxRelation {
        BoxRelation {
            grid: Arc::clone(grid),
            pairs: BTreeSet::new(),
            succ: BTreeMap::new(),
        }
    }

    /// Outer raster of the diagonal: every box paired with itself and with
    /// each Moore neighbor, so that shared faces of the true diagonal are
    /// covered.
    pub fn identity(grid: &Arc<Grid>) -> BoxRelation {
        let mut pairs = BTreeSet::new();
        for b in 0..grid.len() {
            pairs.insert((b, b));
            for n in grid.moore_neighbors(b) {
                pairs.insert((b, n));
            }
        }
        Self::from_pairs(grid, pairs).expect("identity pairs are in range")
    }

    pub fn from_pairs(grid: &Arc<Grid>, pairs: BTreeSet<(BoxId, BoxId)>) -> Result<BoxRelation> {
        let mut succ: BTreeMap<BoxId, Vec<BoxId>> = BTreeMap::new();
        for &(a, b) in &pairs {
            if a >= grid.len() || b >= grid.len() {
                return Err(Error::Range(format!("pair ({a}, {b}) out of range")));
            }
            succ.entry(a).or_default().push(b);
        }
        Ok(BoxRelation {
            grid: Arc::clone(grid),
            pairs,
            succ,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn pairs(&self) -> &BTreeSet<(BoxId, BoxId)> {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, pair: (BoxId, BoxId)) -> bool {
        self.pairs.contains(&pair)
    }

    pub fn is_subrelation(&self, other: &BoxRelation) -> bool {
        self.pairs.is_subset(&other.pairs)
    }

    pub fn check_grid_rel(&self, other: &BoxRelation) -> Result<()> {
        if *self.grid != *other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    pub fn check_grid_set(&self, set: &BoxSet) -> Result<()> {
        if *self.grid != **set.grid() {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    pub fn successors(&self, src: BoxId) -> &[BoxId] {
        self.succ.get(&src).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Image of a box set: all targets of pairs whose source is in the set.
    pub fn image(&self, set: &BoxSet) -> Result<BoxSet> {
        self.check_grid_set(set)?;
        let mut out = BTreeSet::new();
        for &src in set.boxes() {
            out.extend(self.successors(src).iter().copied());
        }
        BoxSet::from_boxes(&self.grid, out)
    }

    pub fn transpose(&self) -> BoxRelation {
        let pairs = self.pairs.iter().map(|&(a, b)| (b, a)).collect();
        Self::from_pairs(&self.grid, pairs).expect("transposed pairs are in range")
    }

    /// Relational composition `self o inner` (apply `inner` first).
    pub fn compose(&self, inner: &BoxRelation) -> Result<BoxRelation> {
        self.check_grid_rel(inner)?;
        let mut pairs = BTreeSet::new();
        for (&a, mids) in &inner.succ {
            for &m in mids {
                for &c in self.successors(m) {
                    pairs.insert((a, c));
                }
            }
        }
        Self::from_pairs(&self.grid, pairs)
    }

    /// n-fold iterate; `n = 0` is the fattened identity raster.
    pub fn iterate(&self, n: usize) -> Result<BoxRelation> {
        if n == 0 {
            return Ok(Self::identity(&self.grid));
        }
        let mut acc = self.clone();
        for _ in 1..n {
            acc = self.compose(&acc)?;
        }
        Ok(acc)
    }

    pub fn union(&self, other: &BoxRelation) -> Result<BoxRelation> {
        self.check_grid_rel(other)?;
        let pairs = self.pairs.union(&other.pairs).cloned().collect();
        Self::from_pairs(&self.grid, pairs)
    }

    pub fn intersection(&self, other: &BoxRelation) -> Result<BoxRelation> {
        self.check_grid_rel(other)?;
        let pairs = self.pairs.intersection(&other.pairs).cloned().collect();
        Self::from_pairs(&self.grid, pairs)
    }

    /// All pairs whose box product lies within product sup distance `eps` of
    /// some pair of the relation; the denotation contains the closed
    /// eps-neighborhood of the denoted relation.
    pub fn bloat(&self, eps: f64) -> Result<BoxRelation> {
        if eps < 0.0 {
            return Err(Error::Spec(format!("bloat radius {eps} is negative")));
        }
        let dim = self.grid.dim();
        let radii: Vec<isize> = (0..dim)
            .map(|k| self.grid.dilation_radius(k, eps) as isize)
            .collect();
        let divs: Vec<isize> = self.grid.divisions().iter().map(|&d| d as isize).collect();
        let mut pairs = BTreeSet::new();
        for &(a, b) in &self.pairs {
            let ma: Vec<isize> = self.grid.to_multi(a).iter().map(|&i| i as isize).collect();
            let mb: Vec<isize> = self.grid.to_multi(b).iter().map(|&i| i as isize).collect();
            // odometer over 2*dim offset coordinates
            let mut off = vec![0isize; 2 * dim];
            for (k, o) in off.iter_mut().enumerate() {
                *o = -radii[k % dim];
            }
            'outer: loop {
                let mut ok = true;
                let mut sa = 0usize;
                let mut sb = 0usize;
                for k in 0..dim {
                    let va = ma[k] + off[k];
                    let vb = mb[k] + off[dim + k];
                    if va < 0 || va >= divs[k] || vb < 0 || vb >= divs[k] {
                        ok = false;
                        break;
                    }
                    sa += va as usize * stride(&divs, k);
                    sb += vb as usize * stride(&divs, k);
                }
                if ok {
                    pairs.insert((sa, sb));
                }
                let mut k = 2 * dim;
                loop {
                    if k == 0 {
                        break 'outer;
                    }
                    k -= 1;
                    if off[k] < radii[k % dim] {
                        off[k] += 1;
                        for j in k + 1..2 * dim {
                            off[j] = -radii[j % dim];
                        }
                        break;
                    }
                }
            }
        }
        Self::from_pairs(&self.grid, pairs)
    }

    /// Sources and targets as box sets (domain and range of the raster).
    pub fn domain(&self) -> BoxSet {
        let boxes = self.pairs.iter().map(|&(a, _)| a).collect();
        BoxSet::from_boxes(&self.grid, boxes).expect("pairs are in range")
    }

    pub fn range(&self) -> BoxSet {
        let boxes = self.pairs.iter().map(|&(_, b)| b).collect();
        BoxSet::from_boxes(&self.grid, boxes).expect("pairs are in range")
    }
}

fn stride(divs: &[isize], k: usize) -> usize {
    divs[k + 1..].iter().product::<isize>() as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_1d(div: usize) -> Arc<Grid> {
        Grid::new(vec![(-5.0, 5.0)], vec![div]).unwrap()
    }

    fn affine(alpha: f64) -> RelationSpec {
        RelationSpec::map(vec![Expr::parse("(x + alpha) * 0.5", 1).unwrap()])
            .with_param("alpha", alpha)
    }

    #[test]
    fn affine_raster_contains_fixed_pair() {
        let g = grid_1d(400);
        let rel = affine(-1.0).rasterize(&g).unwrap();
        // the fixed point (-1, -1) lies in some box product
        let hit = rel.pairs().iter().any(|&(a, b)| {
            let ra = g.box_rect(a);
            let rb = g.box_rect(b);
            ra[0].contains(-1.0) && rb[0].contains(-1.0)
        });
        assert!(hit);
    }

    #[test]
    fn box_union_l_shape() {
        let g = Grid::new(vec![(0.0, 3.0)], vec![300]).unwrap();
        let spec = RelationSpec::new(SpecKind::BoxUnion(vec![
            (
                vec![Interval::new(0.8, 2.1)],
                vec![Interval::new(1.5, 1.5)],
            ),
            (
                vec![Interval::new(2.1, 2.1)],
                vec![Interval::new(1.5, 3.0)],
            ),
        ]));
        let rel = spec.rasterize(&g).unwrap();
        assert!(!rel.is_empty());
        // horizontal leg reaches x = 0.8, vertical leg reaches y = 3
        let dom = rel.domain().bounding_rect().unwrap();
        let rng = rel.range().bounding_rect().unwrap();
        assert!(dom[0].lo <= 0.8 && dom[0].hi >= 2.1);
        assert!(rng[0].lo <= 1.5 && rng[0].hi >= 3.0 - 1e-9);
    }

    #[test]
    fn empty_spec_has_no_pairs() {
        let g = grid_1d(100);
        assert!(RelationSpec::empty().rasterize(&g).unwrap().is_empty());
    }

    #[test]
    fn image_of_block_interval() {
        // f(x) = (x-1)/2 sends [-1.2, -0.8] to [-1.1, -0.9]
        let g = grid_1d(400);
        let rel = affine(-1.0).rasterize(&g).unwrap();
        let b = g.cover(&[Interval::new(-1.2, -0.8)]).unwrap();
        let img = rel.image(&b).unwrap();
        let rect = img.bounding_rect().unwrap();
        let h = g.widths()[0];
        assert!(rect[0].lo >= -1.1 - 2.0 * h && rect[0].lo <= -1.1 + 2.0 * h);
        assert!(rect[0].hi >= -0.9 - 2.0 * h && rect[0].hi <= -0.9 + 2.0 * h);
    }

    #[test]
    fn image_of_empty_is_empty() {
        let g = grid_1d(100);
        let rel = affine(-1.0).rasterize(&g).unwrap();
        assert!(rel.image(&g.empty_set()).unwrap().is_empty());
    }

    #[test]
    fn sqrt_via_transpose_of_square() {
        let g = Grid::new(vec![(-3.0, 3.0)], vec![600]).unwrap();
        let square = RelationSpec::map(vec![Expr::parse("x^2", 1).unwrap()]);
        let rel = RelationSpec::new(SpecKind::Transpose(Box::new(square)))
            .rasterize(&g)
            .unwrap();
        let one = g.cover(&[Interval::new(1.0, 1.0)]).unwrap();
        let img = rel.image(&one).unwrap();
        let h = g.widths()[0];
        // image covers both square roots and nothing far from them
        assert!(img.boxes().iter().any(|&b| g.box_rect(b)[0].contains(1.0)));
        assert!(img.boxes().iter().any(|&b| g.box_rect(b)[0].contains(-1.0)));
        for &b in img.boxes() {
            let r = g.box_rect(b)[0];
            let near = (r.lo - 1.0).abs() < 6.0 * h
                || (r.lo + 1.0).abs() < 6.0 * h
                || (r.hi - 1.0).abs() < 6.0 * h
                || (r.hi + 1.0).abs() < 6.0 * h;
            assert!(near, "stray root enclosure at {:?}", r);
        }
    }

    #[test]
    fn transpose_involution() {
        let g = grid_1d(200);
        let rel = affine(0.5).rasterize(&g).unwrap();
        assert_eq!(rel.transpose().transpose().pairs(), rel.pairs());
        assert!(BoxRelation::empty(&g).transpose().is_empty());
    }

    #[test]
    fn transpose_commutes_with_rasterize() {
        let g = Grid::new(vec![(-3.0, 3.0)], vec![120]).unwrap();
        let square = RelationSpec::map(vec![Expr::parse("x^2", 1).unwrap()]);
        let a = RelationSpec::new(SpecKind::Transpose(Box::new(square.clone())))
            .rasterize(&g)
            .unwrap();
        let b = square.rasterize(&g).unwrap().transpose();
        assert_eq!(a.pairs(), b.pairs());
    }

    #[test]
    fn compose_tracks_second_iterate() {
        // f(x) = (x-1)/2, f(f(1)) = (1-3)/4 = -0.5 by direct arithmetic
        let g = grid_1d(400);
        let rel = affine(-1.0).rasterize(&g).unwrap();
        let second = rel.compose(&rel).unwrap();
        let one = g.cover(&[Interval::new(1.0, 1.0)]).unwrap();
        let img = second.image(&one).unwrap();
        let rect = img.bounding_rect().unwrap();
        let h = g.widths()[0];
        assert!(rect[0].contains(-0.5));
        assert!(rect[0].width() <= 6.0 * h, "width {}", rect[0].width());
    }

    #[test]
    fn compose_with_empty_is_empty() {
        let g = grid_1d(100);
        let rel = affine(-1.0).rasterize(&g).unwrap();
        let e = BoxRelation::empty(&g);
        assert!(rel.compose(&e).unwrap().is_empty());
        assert!(e.compose(&rel).unwrap().is_empty());
    }

    #[test]
    fn identity_absorption_up_to_fattening() {
        let g = grid_1d(100);
        let rel = affine(-1.0).rasterize(&g).unwrap();
        let id = BoxRelation::identity(&g);
        assert!(rel.is_subrelation(&rel.compose(&id).unwrap()));
        assert!(rel.is_subrelation(&id.compose(&rel).unwrap()));
    }

    #[test]
    fn iterate_basics() {
        let g = grid_1d(100);
        let rel = affine(-1.0).rasterize(&g).unwrap();
        assert_eq!(
            rel.iterate(0).unwrap().pairs(),
            BoxRelation::identity(&g).pairs()
        );
        assert!(BoxRelation::empty(&g).iterate(3).unwrap().is_empty());
        assert_eq!(
            rel.iterate(2).unwrap().pairs(),
            rel.compose(&rel).unwrap().pairs()
        );
    }

    #[test]
    fn bloat_zero_contains_rel() {
        let g = grid_1d(100);
        let rel = affine(-1.0).rasterize(&g).unwrap();
        let b = rel.bloat(0.0).unwrap();
        assert!(rel.is_subrelation(&b));
    }

    #[test]
    fn bloat_of_empty_is_empty() {
        let g = grid_1d(100);
        assert!(BoxRelation::empty(&g).bloat(1.0).unwrap().is_empty());
    }

    #[test]
    fn bloat_reaches_forbidden_region() {
        // the L-shaped relation with overhang 0.1 bloated by 0.15 meets
        // cover([1,2]) x closure-of-complement(cover([1,2]))
        let g = Grid::new(vec![(0.0, 3.0)], vec![300]).unwrap();
        let spec = RelationSpec::new(SpecKind::BoxUnion(vec![
            (
                vec![Interval::new(0.8, 2.1)],
                vec![Interval::new(1.5, 1.5)],
            ),
            (
                vec![Interval::new(2.1, 2.1)],
                vec![Interval::new(1.5, 3.0)],
            ),
        ]));
        let rel = spec.rasterize(&g).unwrap();
        let b = g.cover(&[Interval::new(1.0, 2.0)]).unwrap();
        let clc = b.closure_of_complement();
        let fat = rel.bloat(0.15).unwrap();
        let hit = fat
            .pairs()
            .iter()
            .any(|&(p, q)| b.contains(p) && clc.contains(q));
        assert!(hit);
        let base_hit = rel
            .pairs()
            .iter()
            .any(|&(p, q)| b.contains(p) && clc.contains(q));
        assert!(!base_hit);
    }

    #[test]
    fn unbound_parameter_is_an_error() {
        let g = grid_1d(50);
        let spec = RelationSpec::map(vec![Expr::parse("(x + alpha) * 0.5", 1).unwrap()]);
        assert_eq!(spec.free_params(), vec!["alpha".to_string()]);
        assert!(spec.rasterize(&g).is_err());
    }
}
