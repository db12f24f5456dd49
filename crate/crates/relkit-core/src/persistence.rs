//! Attractor persistence under perturbation.
//!
//! For a certified block B of a base relation, every relation that stays out
//! of the product region B x closure-of-complement(B) keeps B as a block and
//! therefore keeps an attractor inside B. The separation radius quantifies
//! how far the base relation sits from that forbidden region; any relation
//! within the radius is admitted.

use rayon::prelude::*;

use crate::attractor::{self, BlockVerdict};
use crate::error::{Error, Result};
use crate::grid::BoxSet;
use crate::relation::{BoxRelation, RelationSpec};

/// Conservative persistence radius: the least, over relation pairs, of the
/// product sup distance from the pair's box product to the forbidden region
/// B x closure-of-complement(B). Infinite when the relation is empty or the
/// forbidden region has an empty factor. Because the raster contains the
/// true relation, the returned value never exceeds the true separation
/// distance of the denoted objects.
pub fn separation_radius(rel: &BoxRelation, block: &BoxSet) -> Result<f64> {
    rel.check_grid_set(block)?;
    let forbidden = block.closure_of_complement();
    let mut best = f64::INFINITY;
    for &(p, q) in rel.pairs() {
        let dp = block.distance_to_box(p, block);
        if dp >= best {
            continue;
        }
        let dq = block.distance_to_box(q, &forbidden);
        let v = dp.max(dq);
        if v < best {
            best = v;
            if best == 0.0 {
                break;
            }
        }
    }
    Ok(best)
}

/// Membership of a perturbed relation in the safe neighborhood of the block:
/// the same disjointness predicate as block certification, read as
/// `g ⊆ (B x closure-of-complement(B))ᶜ`.
pub fn admits(g: &BoxRelation, block: &BoxSet) -> Result<BlockVerdict> {
    attractor::is_attractor_block(g, block)
}

#[derive(Debug, Clone)]
pub struct PersistenceReport {
    pub admitted: bool,
    pub witnesses: Vec<(usize, usize)>,
    /// Separation radius of the base relation.
    pub radius: f64,
    /// Omega limit of the block under the perturbed relation, when admitted.
    pub perturbed_attractor: Option<BoxSet>,
    /// Whether the perturbed attractor stayed inside the block.
    pub contained: bool,
}

/// Full persistence check: certify the base block, measure the radius, test
/// admission of the perturbed relation, and extract its attractor enclosure.
pub fn perturbation_report(
    base: &BoxRelation,
    block: &BoxSet,
    perturbed: &BoxRelation,
) -> Result<PersistenceReport> {
    base.check_grid_set(block)?;
    perturbed.check_grid_set(block)?;
    let base_verdict = attractor::is_attractor_block(base, block)?;
    if !base_verdict.is_block {
        return Err(Error::Precondition(format!(
            "base relation does not certify the block: {} violating pairs, first {:?}",
            base_verdict.witnesses.len(),
            base_verdict.witnesses.first()
        )));
    }
    let radius = separation_radius(base, block)?;
    let verdict = admits(perturbed, block)?;
    if verdict.is_block {
        let a = attractor::attractor_from_block(perturbed, block)?;
        let contained = a.is_subset(block);
        Ok(PersistenceReport {
            admitted: true,
            witnesses: Vec::new(),
            radius,
            perturbed_attractor: Some(a),
            contained,
        })
    } else {
        Ok(PersistenceReport {
            admitted: false,
            witnesses: verdict.witnesses,
            radius,
            perturbed_attractor: None,
            contained: false,
        })
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: f64,
    pub admitted: bool,
    pub radius: f64,
    /// Omega enclosure of the block under this member; equals the attractor
    /// enclosure when admitted, otherwise a diagnostic enclosure.
    pub enclosure: BoxSet,
}

/// Rasterize one family member per parameter value and report admission,
/// radius and omega enclosure. Rows keep the input order; members are
/// independent and evaluated in parallel.
pub fn parameter_sweep(
    family: &RelationSpec,
    param: &str,
    block: &BoxSet,
    values: &[f64],
) -> Result<Vec<SweepRow>> {
    let free = family.free_params();
    if free.len() != 1 || free[0] != param {
        return Err(Error::Spec(format!(
            "sweep needs exactly one free parameter `{param}`, family has {free:?}"
        )));
    }
    let grid = block.grid();
    values
        .par_iter()
        .map(|&value| {
            let rel = family.bind(param, value).rasterize(grid)?;
            let verdict = admits(&rel, block)?;
            let radius = separation_radius(&rel, block)?;
            let enclosure = attractor::omega_limit(&rel, block)?.limit;
            Ok(SweepRow {
                value,
                admitted: verdict.is_block,
                radius,
                enclosure,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::grid::Grid;
    use crate::interval::Interval;
    use crate::relation::SpecKind;
    use std::sync::Arc;

    fn segment(alpha: f64) -> (Arc<Grid>, BoxRelation, BoxSet) {
        let g = Grid::new(vec![(0.0, 3.0)], vec![300]).unwrap();
        let spec = RelationSpec::new(SpecKind::BoxUnion(vec![
            (
                vec![Interval::new(0.8, 2.0 + alpha)],
                vec![Interval::new(1.5, 1.5)],
            ),
            (
                vec![Interval::new(2.0 + alpha, 2.0 + alpha)],
                vec![Interval::new(1.5, 3.0)],
            ),
        ]));
        let rel = spec.rasterize(&g).unwrap();
        let b = g.cover(&[Interval::new(1.0, 2.0)]).unwrap();
        (g, rel, b)
    }

    #[test]
    fn segment_radius_tracks_overhang() {
        for &alpha in &[0.1, 0.3, 0.5] {
            let (g, rel, b) = segment(alpha);
            let h = g.widths()[0];
            let d = separation_radius(&rel, &b).unwrap();
            let expect = 0.5f64.min(alpha);
            assert!(
                d >= expect - 2.0 * h - 1e-9 && d <= expect + 2.0 * h + 1e-9,
                "alpha {alpha}: radius {d}"
            );
        }
    }

    #[test]
    fn radius_infinite_cases() {
        let g = Grid::new(vec![(0.0, 1.0)], vec![20]).unwrap();
        let b = g.cover(&[Interval::new(0.3, 0.7)]).unwrap();
        assert_eq!(
            separation_radius(&BoxRelation::empty(&g), &b).unwrap(),
            f64::INFINITY
        );
        let id = BoxRelation::identity(&g);
        assert_eq!(separation_radius(&id, &g.full()).unwrap(), f64::INFINITY);
        assert_eq!(
            separation_radius(&id, &g.empty_set()).unwrap(),
            f64::INFINITY
        );
    }

    #[test]
    fn affine_radius_matches_dense_oracle() {
        // independent oracle: dense minimization of
        // max(d(x, B), d(f(x), closure(B^c))) over the denoted block
        let g = Grid::new(vec![(-5.0, 5.0)], vec![400]).unwrap();
        let rel = RelationSpec::map(vec![Expr::parse("(x - 1) * 0.5", 1).unwrap()])
            .rasterize(&g)
            .unwrap();
        let b = g.cover(&[Interval::new(-1.2, -0.8)]).unwrap();
        let rect = b.bounding_rect().unwrap()[0];
        let (blo, bhi) = (rect.lo, rect.hi);
        let mut oracle = f64::INFINITY;
        let n = 100_000;
        for k in 0..=n {
            let x = -5.0 + 10.0 * (k as f64) / (n as f64);
            let fx = (x - 1.0) * 0.5;
            let dxb = (blo - x).max(x - bhi).max(0.0);
            let dfc = if fx <= blo || fx >= bhi {
                0.0
            } else {
                (fx - blo).min(bhi - fx)
            };
            oracle = oracle.min(dxb.max(dfc));
        }
        let d = separation_radius(&rel, &b).unwrap();
        let h = g.widths()[0];
        assert!(d <= oracle + 1e-9, "radius {d} exceeds true distance {oracle}");
        assert!((d - oracle).abs() <= 2.0 * h + 1e-9, "radius {d} vs oracle {oracle}");
    }

    #[test]
    fn admits_follows_bloat_size() {
        let (_, rel, b) = segment(0.1);
        assert!(admits(&rel, &b).unwrap().is_block);
        assert!(admits(&rel.bloat(0.05).unwrap(), &b).unwrap().is_block);
        assert!(!admits(&rel.bloat(0.15).unwrap(), &b).unwrap().is_block);
        let g = b.grid();
        assert!(admits(&BoxRelation::empty(g), &b).unwrap().is_block);
    }

    #[test]
    fn report_admitted_and_rejected() {
        let (_, rel, b) = segment(0.1);
        let small = rel.bloat(0.05).unwrap();
        let rep = perturbation_report(&rel, &b, &small).unwrap();
        assert!(rep.admitted);
        assert!(rep.contained);
        assert!(rep.perturbed_attractor.unwrap().is_subset(&b));

        let big = rel.bloat(0.15).unwrap();
        let rep = perturbation_report(&rel, &b, &big).unwrap();
        assert!(!rep.admitted);
        assert!(!rep.witnesses.is_empty());
    }

    #[test]
    fn report_with_empty_perturbation() {
        let (g, rel, b) = segment(0.1);
        let rep = perturbation_report(&rel, &b, &BoxRelation::empty(&g)).unwrap();
        assert!(rep.admitted);
        assert!(rep.contained);
        assert!(rep.perturbed_attractor.unwrap().is_empty());
    }

    #[test]
    fn report_requires_base_block() {
        let (_, rel, b) = segment(0.1);
        let big = rel.bloat(0.15).unwrap();
        assert!(perturbation_report(&big, &b, &rel).is_err());
    }

    #[test]
    fn sweep_admits_inside_analytic_range() {
        // analytic condition: (x + a)/2 maps the denoted block strictly
        // inside itself iff a is well inside the block's interval
        let g = Grid::new(vec![(-5.0, 5.0)], vec![400]).unwrap();
        let fam = RelationSpec::map(vec![Expr::parse("(x + alpha) * 0.5", 1).unwrap()]);
        let b = g.cover(&[Interval::new(-1.2, -0.8)]).unwrap();
        let values: Vec<f64> = vec![-1.19, -1.1, -1.0, -0.9, -0.81, -0.7, -0.5];
        let rows = parameter_sweep(&fam, "alpha", &b, &values).unwrap();
        let h = g.widths()[0];
        for row in &rows {
            let a = row.value;
            if a >= -1.2 + 2.0 * h && a <= -0.8 - 2.0 * h {
                assert!(row.admitted, "alpha {a} should be admitted");
            }
            if a <= -1.2 - 2.0 * h || a >= -0.8 + 2.0 * h {
                assert!(!row.admitted, "alpha {a} should be rejected");
            }
            if row.admitted {
                let rect = row.enclosure.bounding_rect().unwrap()[0];
                assert!(rect.contains(a), "enclosure misses alpha {a}");
            }
        }
    }

    #[test]
    fn sweep_rejects_wrong_parameter_count() {
        let g = Grid::new(vec![(-5.0, 5.0)], vec![50]).unwrap();
        let b = g.cover(&[Interval::new(-1.0, 0.0)]).unwrap();
        let no_free = RelationSpec::map(vec![Expr::parse("x * 0.5", 1).unwrap()]);
        assert!(parameter_sweep(&no_free, "alpha", &b, &[0.0]).is_err());
        let two_free =
            RelationSpec::map(vec![Expr::parse("x * beta + alpha", 1).unwrap()]);
        assert!(parameter_sweep(&two_free, "alpha", &b, &[0.0]).is_err());
    }

    #[test]
    fn sweep_empty_values_gives_empty_rows() {
        let g = Grid::new(vec![(-5.0, 5.0)], vec![50]).unwrap();
        let b = g.cover(&[Interval::new(-1.0, 0.0)]).unwrap();
        let fam = RelationSpec::map(vec![Expr::parse("(x + alpha) * 0.5", 1).unwrap()]);
        assert!(parameter_sweep(&fam, "alpha", &b, &[]).unwrap().is_empty());
    }
}
