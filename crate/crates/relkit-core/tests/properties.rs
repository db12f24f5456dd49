//! Structural invariants of the grid calculus and relation algebra, checked
//! on randomized instances, plus consistency against the exact finite-space
//! engine.

use std::collections::BTreeSet;
use std::sync::Arc;

use proptest::prelude::*;

use relkit_core::attractor::{attractor_from_block, is_attractor_block, omega_limit};
use relkit_core::finite::FiniteRelation;
use relkit_core::grid::{BoxSet, Grid};
use relkit_core::persistence::{admits, separation_radius};
use relkit_core::relation::BoxRelation;
use relkit_core::{Expr, Interval, RelationSpec};

fn grid_1d(div: usize) -> Arc<Grid> {
    Grid::new(vec![(-2.0, 3.0)], vec![div]).unwrap()
}

fn subset(grid: &Arc<Grid>, ids: &[usize]) -> BoxSet {
    let boxes: BTreeSet<usize> = ids.iter().map(|i| i % grid.len()).collect();
    BoxSet::from_boxes(grid, boxes).unwrap()
}

fn relation(grid: &Arc<Grid>, raw: &[(usize, usize)]) -> BoxRelation {
    let pairs: BTreeSet<(usize, usize)> = raw
        .iter()
        .map(|&(a, b)| (a % grid.len(), b % grid.len()))
        .collect();
    BoxRelation::from_pairs(grid, pairs).unwrap()
}

proptest! {
    #[test]
    fn cover_is_monotone(a in -2.0f64..3.0, w1 in 0.0f64..2.0, w2 in 0.0f64..1.5) {
        let g = grid_1d(100);
        let inner = g.cover(&[Interval::new(a, a + w1)]).unwrap();
        let outer = g.cover(&[Interval::new(a - w2, a + w1 + w2)]).unwrap();
        prop_assert!(inner.is_subset(&outer));
    }

    #[test]
    fn interior_partitions_with_closure_complement(ids in prop::collection::vec(0usize..100, 0..60)) {
        let g = grid_1d(100);
        let s = subset(&g, &ids);
        let int = s.interior();
        let clc = s.closure_of_complement();
        prop_assert!(int.is_subset(&s));
        prop_assert!(int.union(&clc).unwrap().is_full());
        prop_assert!(int.intersection(&clc).unwrap().is_empty());
    }

    #[test]
    fn interior_is_dual_to_closure(ids in prop::collection::vec(0usize..100, 0..60)) {
        // int(S) = complement(cl(complement(S))) with cl(T) = complement(int(complement(T)))
        let g = grid_1d(100);
        let s = subset(&g, &ids);
        let closure_of = |t: &BoxSet| t.complement().interior().complement();
        let dual = closure_of(&s.complement()).complement();
        prop_assert_eq!(s.interior(), dual);
    }

    #[test]
    fn set_distance_symmetric_and_reflexive(
        ids1 in prop::collection::vec(0usize..100, 1..30),
        ids2 in prop::collection::vec(0usize..100, 1..30),
    ) {
        let g = grid_1d(100);
        let s = subset(&g, &ids1);
        let t = subset(&g, &ids2);
        prop_assert_eq!(s.distance(&t).unwrap(), t.distance(&s).unwrap());
        prop_assert_eq!(s.distance(&s).unwrap(), 0.0);
        prop_assert!(s.distance(&t).unwrap() >= 0.0);
    }

    #[test]
    fn transpose_laws(
        raw_f in prop::collection::vec((0usize..60, 0usize..60), 0..80),
        raw_g in prop::collection::vec((0usize..60, 0usize..60), 0..80),
    ) {
        let g = grid_1d(60);
        let f = relation(&g, &raw_f);
        let h = relation(&g, &raw_g);
        prop_assert_eq!(f.transpose().transpose().pairs(), f.pairs());
        let lhs = h.compose(&f).unwrap().transpose();
        let rhs = f.transpose().compose(&h.transpose()).unwrap();
        prop_assert_eq!(lhs.pairs(), rhs.pairs());
    }

    #[test]
    fn image_of_composition_is_composition_of_images(
        raw_f in prop::collection::vec((0usize..60, 0usize..60), 0..80),
        raw_g in prop::collection::vec((0usize..60, 0usize..60), 0..80),
        ids in prop::collection::vec(0usize..60, 0..30),
    ) {
        let g = grid_1d(60);
        let f = relation(&g, &raw_f);
        let h = relation(&g, &raw_g);
        let s = subset(&g, &ids);
        let composed = h.compose(&f).unwrap().image(&s).unwrap();
        let stepwise = h.image(&f.image(&s).unwrap()).unwrap();
        prop_assert_eq!(composed, stepwise);
    }

    #[test]
    fn image_is_monotone(
        raw in prop::collection::vec((0usize..60, 0usize..60), 1..80),
        ids in prop::collection::vec(0usize..60, 1..30),
        drop_rel in 0usize..10,
        drop_set in 0usize..10,
    ) {
        let g = grid_1d(60);
        let big_rel = relation(&g, &raw);
        let big_set = subset(&g, &ids);
        // sub-objects by dropping elements
        let small_pairs: BTreeSet<_> = big_rel.pairs().iter().copied()
            .filter(|p| (p.0 + p.1) % 10 >= drop_rel % 10).collect();
        let small_rel = BoxRelation::from_pairs(&g, small_pairs).unwrap();
        let small_boxes: BTreeSet<_> = big_set.boxes().iter().copied()
            .filter(|b| b % 10 >= drop_set % 10).collect();
        let small_set = BoxSet::from_boxes(&g, small_boxes).unwrap();
        let small_img = small_rel.image(&small_set).unwrap();
        let big_img = big_rel.image(&big_set).unwrap();
        prop_assert!(small_img.is_subset(&big_img));
    }

    #[test]
    fn bloat_is_monotone_and_composes_outward(
        raw in prop::collection::vec((0usize..40, 0usize..40), 1..25),
        e1 in 0.0f64..0.2,
        e2 in 0.0f64..0.2,
    ) {
        let g = grid_1d(40);
        let f = relation(&g, &raw);
        let small = f.bloat(e1.min(e2)).unwrap();
        let big = f.bloat(e1.max(e2)).unwrap();
        prop_assert!(small.is_subrelation(&big));
        prop_assert!(f.is_subrelation(&small));
        // rasterized dilation overshoots: two steps cover at least the sum
        let two_step = f.bloat(e1).unwrap().bloat(e2).unwrap();
        let one_step = f.bloat(e1 + e2).unwrap();
        prop_assert!(one_step.is_subrelation(&two_step));
    }

    #[test]
    fn omega_of_certified_block_is_invariant_enclosure(alpha in -1.15f64..-0.85) {
        let g = Grid::new(vec![(-5.0, 5.0)], vec![400]).unwrap();
        let rel = RelationSpec::map(vec![Expr::parse("(x + alpha) * 0.5", 1).unwrap()])
            .with_param("alpha", alpha)
            .rasterize(&g)
            .unwrap();
        let b = g.cover(&[Interval::new(-1.2, -0.8)]).unwrap();
        if is_attractor_block(&rel, &b).unwrap().is_block {
            let a = attractor_from_block(&rel, &b).unwrap();
            prop_assert!(a.is_subset(&b));
            prop_assert!(a.bounding_rect().unwrap()[0].contains(alpha));
            // idempotence: omega of the extracted attractor is itself
            let again = omega_limit(&rel, &a).unwrap().limit;
            prop_assert_eq!(again, a);
        }
    }
}

// ---- finite-oracle consistency on embedded digraphs ----

/// State i becomes box 2i on a grid of 2n-1 cells, leaving a gap box
/// between states so that distinct states never touch.
fn embed(rel: &FiniteRelation) -> (Arc<Grid>, BoxRelation) {
    let n = rel.states();
    let cells = 2 * n - 1;
    let g = Grid::new(vec![(0.0, cells as f64)], vec![cells]).unwrap();
    let pairs: BTreeSet<(usize, usize)> =
        rel.edges().iter().map(|&(i, j)| (2 * i, 2 * j)).collect();
    let boxed = BoxRelation::from_pairs(&g, pairs).unwrap();
    (g, boxed)
}

fn embed_set(g: &Arc<Grid>, s: &BTreeSet<usize>) -> BoxSet {
    BoxSet::from_boxes(g, s.iter().map(|&i| 2 * i).collect()).unwrap()
}

/// Block tests additionally need each state box in the combinatorial
/// interior, so member states carry their gap neighbors.
fn embed_set_fat(g: &Arc<Grid>, s: &BTreeSet<usize>) -> BoxSet {
    let mut boxes = BTreeSet::new();
    for &i in s {
        let c = 2 * i as isize;
        for d in [-1, 0, 1] {
            let v = c + d;
            if v >= 0 && (v as usize) < g.len() {
                boxes.insert(v as usize);
            }
        }
    }
    BoxSet::from_boxes(g, boxes).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn embedded_digraph_matches_oracle(n in 2usize..7, density in 0.0f64..1.0, seed in 0u64..1000) {
        let rel = FiniteRelation::random(n, density, seed).unwrap();
        let (g, boxed) = embed(&rel);
        let mut rng = relkit_core::finite::SplitMix64::new(seed ^ 0xABCD);
        let states: BTreeSet<usize> = (0..n).filter(|_| rng.next_f64() < 0.5).collect();

        // image and invariance agree through the plain embedding
        let img_oracle = rel.image(&states).unwrap();
        let img_boxed = boxed.image(&embed_set(&g, &states)).unwrap();
        prop_assert_eq!(embed_set(&g, &img_oracle), img_boxed);

        let omega_oracle = rel.omega(&states).unwrap();
        let omega_boxed = omega_limit(&boxed, &embed_set(&g, &states)).unwrap().limit;
        prop_assert_eq!(embed_set(&g, &omega_oracle), omega_boxed);

        // block verdicts agree through the fattened embedding
        let verdict_oracle = rel.is_attractor_block(&states).unwrap();
        let verdict_boxed =
            is_attractor_block(&boxed, &embed_set_fat(&g, &states)).unwrap().is_block;
        prop_assert_eq!(verdict_oracle, verdict_boxed);
    }

    #[test]
    fn certified_blocks_admit_everything_within_radius(
        alpha in -1.14f64..-0.86,
        frac in 0.05f64..0.9,
    ) {
        let g = Grid::new(vec![(-5.0, 5.0)], vec![400]).unwrap();
        let rel = RelationSpec::map(vec![Expr::parse("(x + alpha) * 0.5", 1).unwrap()])
            .with_param("alpha", alpha)
            .rasterize(&g)
            .unwrap();
        let b = g.cover(&[Interval::new(-1.2, -0.8)]).unwrap();
        prop_assume!(is_attractor_block(&rel, &b).unwrap().is_block);
        let radius = separation_radius(&rel, &b).unwrap();
        let h = g.widths()[0];
        let eps = (radius - h).max(0.0) * frac;
        let g_pert = rel.bloat(eps).unwrap();
        prop_assert!(admits(&g_pert, &b).unwrap().is_block,
            "bloat by {eps} inside radius {radius} must stay admitted");
        // the empty relation is admitted by every certified block
        let empty = BoxRelation::empty(&g);
        prop_assert!(admits(&empty, &b).unwrap().is_block);
        let a_empty = attractor_from_block(&empty, &b).unwrap();
        prop_assert!(a_empty.is_empty());
    }
}

#[test]
fn box_distance_agrees_with_dense_sampling() {
    let g = Grid::new(vec![(0.0, 3.0), (0.0, 3.0)], vec![30, 30]).unwrap();
    let mut rng = relkit_core::finite::SplitMix64::new(99);
    for _ in 0..50 {
        let a = rng.next_below(g.len());
        let b = rng.next_below(g.len());
        let exact = g.box_distance(a, b);
        let ra = g.box_rect(a);
        let rb = g.box_rect(b);
        let steps = 12;
        let mut sampled = f64::INFINITY;
        for i in 0..=steps {
            for j in 0..=steps {
                for k in 0..=steps {
                    for l in 0..=steps {
                        let p = [
                            ra[0].lo + ra[0].width() * i as f64 / steps as f64,
                            ra[1].lo + ra[1].width() * j as f64 / steps as f64,
                        ];
                        let q = [
                            rb[0].lo + rb[0].width() * k as f64 / steps as f64,
                            rb[1].lo + rb[1].width() * l as f64 / steps as f64,
                        ];
                        let d = (p[0] - q[0]).abs().max((p[1] - q[1]).abs());
                        sampled = sampled.min(d);
                    }
                }
            }
        }
        let resolution = g.widths()[0] / steps as f64;
        assert!(
            (exact - sampled).abs() <= resolution + 1e-12,
            "boxes {a},{b}: exact {exact} vs sampled {sampled}"
        );
    }
}

#[test]
fn block_interior_containment_when_ring_fits() {
    let g = Grid::new(vec![(-5.0, 5.0)], vec![400]).unwrap();
    let rel = RelationSpec::map(vec![Expr::parse("(x - 1) * 0.5", 1).unwrap()])
        .rasterize(&g)
        .unwrap();
    let b = g.cover(&[Interval::new(-1.2, -0.8)]).unwrap();
    let a = attractor_from_block(&rel, &b).unwrap();
    assert!(a.is_subset(&b));
    if a.fatten().is_subset(&b) {
        assert!(a.is_subset(&b.interior()));
    }
}
