#![allow(dead_code)]

use nalgebra::{Matrix3, Rotation3, Unit};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use slicegrasp::geometry::{Point, RigidTransform, Vec3};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn unit_vector(rng: &mut impl Rng) -> Vec3 {
    loop {
        let v = Vec3::new(StandardNormal.sample(rng), StandardNormal.sample(rng), StandardNormal.sample(rng));
        if v.norm() > 1e-6 {
            return v.normalize();
        }
    }
}

pub fn unit_vector_nd(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-6 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

pub fn points_in_box(rng: &mut impl Rng, n: usize, lo: f64, hi: f64) -> Vec<Point> {
    (0..n).map(|_| Point::new(rng.random_range(lo..hi), rng.random_range(lo..hi), rng.random_range(lo..hi))).collect()
}

pub fn rotation(rng: &mut impl Rng) -> Matrix3<f64> {
    let axis = Unit::new_normalize(unit_vector(rng));
    Rotation3::from_axis_angle(&axis, rng.random_range(0.0..std::f64::consts::TAU)).into_inner()
}

pub fn rigid(rng: &mut impl Rng, shift: f64) -> RigidTransform {
    let r = rotation(rng);
    let t = Vec3::new(rng.random_range(-shift..shift), rng.random_range(-shift..shift), rng.random_range(-shift..shift));
    RigidTransform::new(r, t)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn support(points: &[Vec<f64>], u: &[f64]) -> f64 {
    points.iter().map(|p| dot(p, u)).fold(f64::NEG_INFINITY, f64::max)
}

/// min over sampled unit directions u of max_i p_i . u, plus the best few
/// directions for refinement.
pub fn support_sampling(points: &[Vec<f64>], samples: usize, rng: &mut impl Rng) -> (f64, Vec<Vec<f64>>) {
    let d = points[0].len();
    let mut best: Vec<(f64, Vec<f64>)> = Vec::new();
    for _ in 0..samples {
        let u = unit_vector_nd(rng, d);
        let h = support(points, &u);
        if best.len() < 8 || h < best[best.len() - 1].0 {
            best.push((h, u));
            best.sort_by(|a, b| a.0.total_cmp(&b.0));
            best.truncate(8);
        }
    }
    (best[0].0, best.into_iter().map(|(_, u)| u).collect())
}

/// Random-perturbation descent of the support function on the sphere.
pub fn refine_support(points: &[Vec<f64>], starts: Vec<Vec<f64>>, rng: &mut impl Rng) -> f64 {
    let d = points[0].len();
    let mut overall = f64::INFINITY;
    for mut u in starts {
        let mut h = support(points, &u);
        let mut step = 0.1;
        while step > 1e-7 {
            let mut improved = false;
            for _ in 0..60 {
                let dir = unit_vector_nd(rng, d);
                let mut v: Vec<f64> = u.iter().zip(&dir).map(|(a, b)| a + step * b).collect();
                let n = dot(&v, &v).sqrt();
                v.iter_mut().for_each(|x| *x /= n);
                let hv = support(points, &v);
                if hv < h {
                    h = hv;
                    u = v;
                    improved = true;
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        overall = overall.min(h);
    }
    overall
}
