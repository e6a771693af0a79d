mod common;
mod oracles;

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use slicegrasp::hull::{hull, origin_inside, HullND};

fn gaussian_cloud(rng: &mut impl Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| StandardNormal.sample(rng)).collect()).collect()
}

fn ball_cloud(rng: &mut impl Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let u = common::unit_vector_nd(rng, d);
            let r: f64 = rng.random::<f64>().powf(1.0 / d as f64);
            u.into_iter().map(|x| x * r).collect()
        })
        .collect()
}

fn facet_sets(h: &HullND, map: impl Fn(u32) -> u32) -> BTreeSet<Vec<u32>> {
    h.facets
        .iter()
        .map(|f| {
            let mut v: Vec<u32> = f.vertices.iter().map(|&i| map(i)).collect();
            v.sort_unstable();
            v
        })
        .collect()
}

fn random_orthogonal(rng: &mut impl Rng, d: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| StandardNormal.sample(rng));
    g.qr().q()
}

fn apply(m: &DMatrix<f64>, points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    points.iter().map(|p| (m * DVector::from_column_slice(p)).iter().copied().collect()).collect()
}

#[test]
fn brute_force_agrees_on_small_sets() {
    let mut rng = common::rng(11);
    for d in [3usize, 4, 6] {
        for _ in 0..10 {
            let pts = gaussian_cloud(&mut rng, 12, d);
            let h = hull(&pts, d).unwrap();
            let (facets, volume) = oracles::brute_force_hull(&pts);
            assert_eq!(facet_sets(&h, |i| i), facets, "d = {d}");
            assert!((h.volume - volume).abs() <= 1e-9 * volume.max(1.0), "d = {d}: {} vs {volume}", h.volume);
        }
    }
}

#[test]
fn ball_points_are_all_inside() {
    let mut rng = common::rng(12);
    let pts = ball_cloud(&mut rng, 200, 6);
    let h = hull(&pts, 6).unwrap();
    assert!(h.vertex_indices().iter().all(|&i| (i as usize) < pts.len()));
    for p in &pts {
        for f in &h.facets {
            let norm = f.normal.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-9);
            assert!(oracles::dot(&f.normal, p) <= f.offset + 1e-9);
        }
    }
    for f in &h.facets {
        for &v in &f.vertices {
            assert!((oracles::dot(&f.normal, &pts[v as usize]) - f.offset).abs() < 1e-9);
        }
    }
}

#[test]
fn ball_volume_on_twelve_point_subsets() {
    let mut rng = common::rng(13);
    let pts = ball_cloud(&mut rng, 200, 6);
    for start in (0..120).step_by(12) {
        let sub = &pts[start..start + 12];
        let h = hull(sub, 6).unwrap();
        let (_, volume) = oracles::brute_force_hull(sub);
        assert!((h.volume - volume).abs() <= 1e-9 * volume.max(1e-3));
    }
}

#[test]
fn support_sampling_bounds_the_inradius() {
    let mut rng = common::rng(14);
    let mut checked = 0;
    while checked < 10 {
        let pts = gaussian_cloud(&mut rng, 40, 6);
        let h = hull(&pts, 6).unwrap();
        if !h.contains_origin {
            continue;
        }
        let eps = h.min_facet_offset();
        let (sampled, starts) = common::support_sampling(&pts, 100_000, &mut rng);
        // sampling can only over-estimate the minimum
        assert!(sampled >= eps - 1e-9);
        let refined = common::refine_support(&pts, starts, &mut rng);
        assert!(refined >= eps - 1e-9);
        assert!(refined <= 1.01 * eps, "refined {refined} vs {eps}");
        checked += 1;
    }
}

#[test]
fn shifted_sets_report_zero() {
    let mut rng = common::rng(15);
    for _ in 0..20 {
        let pts: Vec<Vec<f64>> =
            gaussian_cloud(&mut rng, 30, 6).into_iter().map(|p| p.into_iter().map(|x| x.abs() + 1.0).collect()).collect();
        let h = hull(&pts, 6).unwrap();
        assert!(!h.contains_origin);
        assert_eq!(h.min_facet_offset(), 0.0);
        assert!(!origin_inside(&pts, 0.0));
    }
}

#[test]
fn separating_hyperplane_case() {
    let mut rng = common::rng(16);
    let pts: Vec<Vec<f64>> = gaussian_cloud(&mut rng, 30, 6)
        .into_iter()
        .map(|mut p| {
            p[0] = p[0].abs() + 0.1;
            p
        })
        .collect();
    assert!(!origin_inside(&pts, 0.0));
}

fn cloud_strategy(d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-1.0..1.0f64, d), (d + 4)..(d + 20))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn hull_of_vertices_is_the_same_hull(pts in cloud_strategy(5)) {
        let h = hull(&pts, 5).unwrap();
        let verts = h.vertex_indices();
        let sub: Vec<Vec<f64>> = verts.iter().map(|&i| pts[i as usize].clone()).collect();
        let h2 = hull(&sub, 5).unwrap();
        prop_assert_eq!(facet_sets(&h, |i| i), facet_sets(&h2, |i| verts[i as usize]));
        prop_assert!((h.volume - h2.volume).abs() <= 1e-9 * h.volume.max(1e-6));
    }

    #[test]
    fn orthogonal_maps_preserve_volume_and_offset(pts in cloud_strategy(6), seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let q = random_orthogonal(&mut rng, 6);
        let a = hull(&pts, 6).unwrap();
        let b = hull(&apply(&q, &pts), 6).unwrap();
        prop_assert!((a.volume - b.volume).abs() <= 1e-8 * a.volume.max(1e-9));
        prop_assert!((a.min_facet_offset() - b.min_facet_offset()).abs() <= 1e-9);
        prop_assert_eq!(a.contains_origin, b.contains_origin);
        // facet normals rotate with the points
        let fa = facet_sets(&a, |i| i);
        prop_assert_eq!(&fa, &facet_sets(&b, |i| i));
        for f in &a.facets {
            let g = b.facets.iter().find(|g| {
                let mut x = g.vertices.clone();
                let mut y = f.vertices.clone();
                x.sort_unstable();
                y.sort_unstable();
                x == y
            }).unwrap();
            let rotated = &q * DVector::from_column_slice(&f.normal);
            let diff = (rotated - DVector::from_column_slice(&g.normal)).norm();
            prop_assert!(diff < 1e-8);
        }
    }

    #[test]
    fn volume_scales_with_the_dimension_power(pts in cloud_strategy(4), s in 0.1..10.0f64) {
        let a = hull(&pts, 4).unwrap();
        let scaled: Vec<Vec<f64>> = pts.iter().map(|p| p.iter().map(|x| x * s).collect()).collect();
        let b = hull(&scaled, 4).unwrap();
        prop_assert!((b.volume - a.volume * s.powi(4)).abs() <= 1e-8 * b.volume.max(1e-12));
    }

    #[test]
    fn volume_ignores_point_order(pts in cloud_strategy(6), seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let mut shuffled = pts.clone();
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, rng.random_range(0..=i));
        }
        let a = hull(&pts, 6).unwrap();
        let b = hull(&shuffled, 6).unwrap();
        prop_assert!((a.volume - b.volume).abs() <= 1e-9 * a.volume.max(1e-9));
        prop_assert_eq!(a.facets.len(), b.facets.len());
    }

    #[test]
    fn inradius_never_exceeds_nearest_vertex(pts in cloud_strategy(6)) {
        let h = hull(&pts, 6).unwrap();
        let nearest = pts.iter().map(|p| oracles::dot(p, p).sqrt()).fold(f64::INFINITY, f64::min);
        prop_assert!(h.min_facet_offset() <= nearest + 1e-12);
    }

    #[test]
    fn feasibility_oracle_agrees(pts in cloud_strategy(6), shift in -0.6..0.6f64) {
        let moved: Vec<Vec<f64>> = pts.iter().map(|p| p.iter().map(|x| x + shift).collect()).collect();
        let h = hull(&moved, 6).unwrap();
        let margin_ok = h.min_facet_offset() > 1e-7 || !h.contains_origin;
        prop_assume!(margin_ok);
        // skip instances with the origin within rounding of the boundary
        let boundary = h.facets.iter().map(|f| f.offset.abs()).fold(f64::INFINITY, f64::min);
        prop_assume!(boundary > 1e-7);
        prop_assert_eq!(h.contains_origin, origin_inside(&moved, 0.0));
    }
}
