//! Exact convex hulls in 2 to 6 dimensions.
//!
//! Construction is incremental (quickhull order: each step adds the point
//! farthest outside some facet) over simplicial facets with neighbour
//! links. Points within a scale-relative slack of a facet count as inside.
//! If rounding ever produces an inconsistent horizon the input is retried
//! with a tiny deterministic joggle.

use std::collections::HashMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub const MAX_DIM: usize = 6;
/// Default cap on the number of facets created during construction.
pub const DEFAULT_MAX_FACETS: usize = 2_000_000;

/// Facet slack relative to the largest absolute coordinate.
const REL_SLACK: f64 = 1e-10;
/// Affine-rank tolerance relative to the largest absolute coordinate.
const REL_RANK: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HullError {
    #[error("hull dimension must be between 2 and {MAX_DIM}, got {0}")]
    BadDimension(usize),
    #[error("need at least {need} points for a {dim}-d hull, got {got}")]
    TooFewPoints { dim: usize, need: usize, got: usize },
    #[error("point {0} has the wrong dimension or a non-finite coordinate")]
    BadPoint(usize),
    #[error("points span only {rank} of {dim} dimensions")]
    RankDeficient { rank: usize, dim: usize },
    #[error("facet limit of {0} exceeded")]
    TooManyFacets(usize),
    #[error("hull construction failed numerically: {0}")]
    Numerical(&'static str),
}

/// One simplicial boundary facet: `normal · x <= offset` holds for the hull.
#[derive(Debug, Clone, PartialEq)]
pub struct HullFacet {
    pub vertices: Vec<u32>,
    pub normal: Vec<f64>,
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HullND {
    pub dim: usize,
    pub facets: Vec<HullFacet>,
    pub volume: f64,
    pub contains_origin: bool,
    /// Slack used for inside tests, in input units.
    pub slack: f64,
}

impl HullND {
    /// Indices of input points that are hull vertices, ascending.
    pub fn vertex_indices(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self.facets.iter().flat_map(|f| f.vertices.iter().copied()).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Radius of the largest origin-centred ball inside the hull; zero when
    /// the origin is not strictly inside.
    pub fn min_facet_offset(&self) -> f64 {
        if !self.contains_origin {
            return 0.0;
        }
        self.facets.iter().map(|f| f.offset).fold(f64::INFINITY, f64::min)
    }
}

pub fn hull<P: AsRef<[f64]>>(points: &[P], dim: usize) -> Result<HullND, HullError> {
    hull_with_limit(points, dim, DEFAULT_MAX_FACETS)
}

pub fn hull_with_limit<P: AsRef<[f64]>>(points: &[P], dim: usize, max_facets: usize) -> Result<HullND, HullError> {
    if !(2..=MAX_DIM).contains(&dim) {
        return Err(HullError::BadDimension(dim));
    }
    if points.len() < dim + 1 {
        return Err(HullError::TooFewPoints { dim, need: dim + 1, got: points.len() });
    }
    let mut flat = Vec::with_capacity(points.len() * dim);
    for (i, p) in points.iter().enumerate() {
        let p = p.as_ref();
        if p.len() != dim || !p.iter().all(|c| c.is_finite()) {
            return Err(HullError::BadPoint(i));
        }
        flat.extend_from_slice(p);
    }
    let scale = flat.iter().fold(0.0f64, |m, c| m.max(c.abs())).max(f64::MIN_POSITIVE);

    let mut result = Builder::run(&flat, dim, scale, max_facets);
    let mut attempt = 0;
    while let Err(HullError::Numerical(_)) = result {
        attempt += 1;
        if attempt > 3 {
            break;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 + attempt as u64);
        let amp = scale * 1e-13 * 10f64.powi(attempt);
        let joggled: Vec<f64> = flat.iter().map(|c| c + amp * (2.0 * rng.random::<f64>() - 1.0)).collect();
        result = Builder::run(&joggled, dim, scale, max_facets);
    }
    let mut h = result?;
    // report offsets against the caller's points
    for f in &mut h.facets {
        let v0 = f.vertices[0] as usize;
        f.offset = dot(&f.normal, &flat[v0 * dim..(v0 + 1) * dim]);
    }
    h.contains_origin = h.facets.iter().all(|f| f.offset > h.slack);
    Ok(h)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

const NONE: u32 = u32::MAX;

#[derive(Clone)]
struct Facet {
    verts: [u32; MAX_DIM],
    neigh: [u32; MAX_DIM],
    normal: [f64; MAX_DIM],
    offset: f64,
    /// (d-1)-volume of the facet simplex.
    area: f64,
    outside: Vec<u32>,
    far: u32,
    far_dist: f64,
    alive: bool,
}

struct Builder<'a> {
    pts: &'a [f64],
    d: usize,
    slack: f64,
    interior: [f64; MAX_DIM],
    facets: Vec<Facet>,
    mark: Vec<u32>,
    stamp: u32,
    max_facets: usize,
}

impl<'a> Builder<'a> {
    fn run(pts: &'a [f64], d: usize, scale: f64, max_facets: usize) -> Result<HullND, HullError> {
        let simplex = initial_simplex(pts, d, REL_RANK * scale)?;
        let mut interior = [0.0; MAX_DIM];
        for &i in &simplex {
            for k in 0..d {
                interior[k] += pts[i as usize * d + k] / (d + 1) as f64;
            }
        }
        let mut b = Builder {
            pts,
            d,
            slack: REL_SLACK * scale,
            interior,
            facets: Vec::new(),
            mark: Vec::new(),
            stamp: 0,
            max_facets,
        };
        b.seed(&simplex)?;
        b.expand()?;
        Ok(b.finish())
    }

    fn point(&self, i: u32) -> &[f64] {
        &self.pts[i as usize * self.d..(i as usize + 1) * self.d]
    }

    fn dist(&self, f: &Facet, i: u32) -> f64 {
        dot(&f.normal[..self.d], self.point(i)) - f.offset
    }

    fn make_facet(&self, verts: [u32; MAX_DIM], neigh: [u32; MAX_DIM]) -> Result<Facet, HullError> {
        let d = self.d;
        let v0 = self.point(verts[0]);
        let mut basis: Vec<[f64; MAX_DIM]> = Vec::with_capacity(d - 1);
        let mut area = 1.0;
        for k in 1..d {
            let vk = self.point(verts[k]);
            let mut w = [0.0; MAX_DIM];
            for j in 0..d {
                w[j] = vk[j] - v0[j];
            }
            let len0 = norm(&w[..d]);
            for _ in 0..2 {
                for q in &basis {
                    let c = dot(&w[..d], &q[..d]);
                    for j in 0..d {
                        w[j] -= c * q[j];
                    }
                }
            }
            let len = norm(&w[..d]);
            if !(len > 1e-14 * len0.max(self.slack)) {
                return Err(HullError::Numerical("degenerate facet"));
            }
            area *= len / k as f64;
            for j in 0..d {
                w[j] /= len;
            }
            basis.push(w);
        }
        let mut n = [0.0; MAX_DIM];
        for j in 0..d {
            n[j] = v0[j] - self.interior[j];
        }
        for _ in 0..2 {
            for q in &basis {
                let c = dot(&n[..d], &q[..d]);
                for j in 0..d {
                    n[j] -= c * q[j];
                }
            }
        }
        let len = norm(&n[..d]);
        if !(len > 0.0) {
            return Err(HullError::Numerical("interior point on facet"));
        }
        for j in 0..d {
            n[j] /= len;
        }
        let offset = dot(&n[..d], v0);
        Ok(Facet { verts, neigh, normal: n, offset, area, outside: Vec::new(), far: NONE, far_dist: 0.0, alive: true })
    }

    fn seed(&mut self, simplex: &[u32]) -> Result<(), HullError> {
        let d = self.d;
        for i in 0..=d {
            let mut verts = [NONE; MAX_DIM];
            let mut neigh = [NONE; MAX_DIM];
            let mut k = 0;
            for j in 0..=d {
                if j != i {
                    verts[k] = simplex[j];
                    neigh[k] = j as u32;
                    k += 1;
                }
            }
            let f = self.make_facet(verts, neigh)?;
            self.facets.push(f);
        }
        let n = self.pts.len() / d;
        for p in 0..n as u32 {
            if simplex.contains(&p) {
                continue;
            }
            self.assign(p, 0..self.facets.len() as u32);
        }
        Ok(())
    }

    fn assign(&mut self, p: u32, candidates: impl Iterator<Item = u32>) {
        for fid in candidates {
            let dist = self.dist(&self.facets[fid as usize], p);
            if dist > self.slack {
                let f = &mut self.facets[fid as usize];
                f.outside.push(p);
                if dist > f.far_dist {
                    f.far_dist = dist;
                    f.far = p;
                }
                return;
            }
        }
    }

    fn expand(&mut self) -> Result<(), HullError> {
        let d = self.d;
        let mut queue: Vec<u32> = (0..self.facets.len() as u32).rev().collect();
        let mut visible: Vec<u32> = Vec::new();
        let mut horizon: Vec<(u32, usize, u32)> = Vec::new();
        let mut ridges: HashMap<[u32; MAX_DIM], (u32, usize)> = HashMap::new();
        while let Some(start) = queue.pop() {
            let f0 = &self.facets[start as usize];
            if !f0.alive || f0.outside.is_empty() {
                continue;
            }
            let apex = f0.far;

            // visible region by flood fill from `start`
            self.stamp += 2;
            let (vis_mark, hid_mark) = (self.stamp, self.stamp + 1);
            self.mark.resize(self.facets.len(), 0);
            visible.clear();
            horizon.clear();
            visible.push(start);
            self.mark[start as usize] = vis_mark;
            let mut cursor = 0;
            while cursor < visible.len() {
                let fid = visible[cursor];
                cursor += 1;
                for k in 0..d {
                    let g = self.facets[fid as usize].neigh[k];
                    let m = self.mark[g as usize];
                    if m == vis_mark {
                        continue;
                    }
                    if m != hid_mark && self.dist(&self.facets[g as usize], apex) > self.slack {
                        self.mark[g as usize] = vis_mark;
                        visible.push(g);
                    } else {
                        self.mark[g as usize] = hid_mark;
                        horizon.push((fid, k, g));
                    }
                }
            }

            // cone of new facets over the horizon
            let first_new = self.facets.len() as u32;
            if self.facets.len() + horizon.len() > self.max_facets {
                return Err(HullError::TooManyFacets(self.max_facets));
            }
            for &(fid, k, g) in &horizon {
                let old = &self.facets[fid as usize];
                let mut verts = old.verts;
                verts[k] = apex;
                let mut neigh = [NONE; MAX_DIM];
                neigh[k] = g;
                let nf = self.make_facet(verts, neigh)?;
                let new_id = self.facets.len() as u32;
                self.facets.push(nf);
                let gf = &mut self.facets[g as usize];
                match gf.neigh[..d].iter().position(|&x| x == fid) {
                    Some(m) => gf.neigh[m] = new_id,
                    None => return Err(HullError::Numerical("broken neighbour link")),
                }
            }
            ridges.clear();
            for (h, &(_, k, _)) in (first_new..self.facets.len() as u32).zip(horizon.iter()) {
                for j in 0..d {
                    if j == k {
                        continue;
                    }
                    let mut key = [NONE; MAX_DIM];
                    let mut n = 0;
                    for (t, &v) in self.facets[h as usize].verts[..d].iter().enumerate() {
                        if t != j {
                            key[n] = v;
                            n += 1;
                        }
                    }
                    key[..n].sort_unstable();
                    match ridges.remove(&key) {
                        Some((other, pos)) => {
                            self.facets[h as usize].neigh[j] = other;
                            self.facets[other as usize].neigh[pos] = h;
                        }
                        None => {
                            ridges.insert(key, (h, j));
                        }
                    }
                }
            }
            if !ridges.is_empty() {
                return Err(HullError::Numerical("horizon is not a closed ridge cycle"));
            }

            // hand orphaned outside points to the new facets
            let mut orphans = Vec::new();
            for &fid in &visible {
                let f = &mut self.facets[fid as usize];
                f.alive = false;
                orphans.append(&mut f.outside);
            }
            let end = self.facets.len() as u32;
            for p in orphans {
                if p != apex {
                    self.assign(p, first_new..end);
                }
            }
            for h in (first_new..end).rev() {
                if !self.facets[h as usize].outside.is_empty() {
                    queue.push(h);
                }
            }
        }
        Ok(())
    }

    fn finish(self) -> HullND {
        let d = self.d;
        let mut volume = 0.0;
        let mut facets = Vec::new();
        for f in self.facets.iter().filter(|f| f.alive) {
            let height = f.offset - dot(&f.normal[..d], &self.interior[..d]);
            volume += height * f.area / d as f64;
            facets.push(HullFacet { vertices: f.verts[..d].to_vec(), normal: f.normal[..d].to_vec(), offset: f.offset });
        }
        HullND { dim: d, facets, volume, contains_origin: false, slack: self.slack }
    }
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Greedy maximal simplex: lexicographic minimum first, then repeatedly the
/// point farthest from the affine span of those chosen.
fn initial_simplex(pts: &[f64], d: usize, tol: f64) -> Result<Vec<u32>, HullError> {
    let n = pts.len() / d;
    let p = |i: usize| &pts[i * d..(i + 1) * d];
    let first = (0..n)
        .min_by(|&a, &b| p(a).partial_cmp(p(b)).unwrap_or(std::cmp::Ordering::Equal))
        .expect("non-empty");
    let mut chosen = vec![first as u32];
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let origin = p(first).to_vec();
    while chosen.len() < d + 1 {
        let mut best = (0usize, -1.0f64, Vec::new());
        for i in 0..n {
            let mut w: Vec<f64> = p(i).iter().zip(&origin).map(|(a, b)| a - b).collect();
            for _ in 0..2 {
                for q in &basis {
                    let c = dot(&w, q);
                    w.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
                }
            }
            let len = norm(&w);
            if len > best.1 {
                best = (i, len, w);
            }
        }
        if best.1 <= tol {
            return Err(HullError::RankDeficient { rank: chosen.len() - 1, dim: d });
        }
        let (i, len, mut w) = best;
        w.iter_mut().for_each(|x| *x /= len);
        basis.push(w);
        chosen.push(i as u32);
    }
    Ok(chosen)
}

/// Independent strict-containment test: the origin is an interior point of
/// the convex hull iff the points are full rank and the origin is a convex
/// combination with every weight at least `margin`. Solved as a small LP.
pub fn origin_inside<P: AsRef<[f64]>>(points: &[P], margin: f64) -> bool {
    let n = points.len();
    let Some(d) = points.first().map(|p| p.as_ref().len()) else { return false };
    if d == 0 || n < d + 1 {
        return false;
    }
    let scale = points.iter().flat_map(|p| p.as_ref().iter()).fold(0.0f64, |m, c| m.max(c.abs()));
    if !(scale > 0.0) {
        return false;
    }
    // full rank check on the centred point matrix
    let mut m = DMatrix::<f64>::zeros(n, d);
    let mut mean = vec![0.0; d];
    for p in points {
        for (k, c) in p.as_ref().iter().enumerate() {
            mean[k] += c / n as f64;
        }
    }
    for (i, p) in points.iter().enumerate() {
        for (k, c) in p.as_ref().iter().enumerate() {
            m[(i, k)] = c - mean[k];
        }
    }
    let sv = m.singular_values();
    if sv.iter().filter(|&&s| s > REL_RANK * scale).count() < d {
        return false;
    }

    // max s  s.t.  sum_i b_i p_i + s * sum_i p_i = 0,  sum_i b_i + n s = 1,  b >= 0
    // with s = s⁺ - s⁻
    let rows = d + 1;
    let cols = n + 2;
    let mut a = vec![vec![0.0; cols]; rows];
    let mut rhs = vec![0.0; rows];
    for (i, p) in points.iter().enumerate() {
        for (k, c) in p.as_ref().iter().enumerate() {
            let c = c / scale;
            a[k][i] = c;
            a[k][n] += c;
            a[k][n + 1] -= c;
        }
        a[d][i] = 1.0;
    }
    a[d][n] = n as f64;
    a[d][n + 1] = -(n as f64);
    rhs[d] = 1.0;
    let mut objective = vec![0.0; cols];
    objective[n] = 1.0;
    objective[n + 1] = -1.0;
    match simplex_max(a, rhs, &objective) {
        Some(value) => value > margin,
        None => false,
    }
}

/// Two-phase dense simplex (Bland's rule) for `max c·x, A x = b, x >= 0`.
/// Returns the optimum, or `None` when infeasible. Unbounded problems are
/// reported as `Some(inf)`.
fn simplex_max(mut a: Vec<Vec<f64>>, mut b: Vec<f64>, c: &[f64]) -> Option<f64> {
    const EPS: f64 = 1e-11;
    let m = a.len();
    let n = c.len();
    for i in 0..m {
        if b[i] < 0.0 {
            b[i] = -b[i];
            a[i].iter_mut().for_each(|x| *x = -*x);
        }
    }
    // tableau columns: n originals, m artificials, rhs
    let width = n + m + 1;
    let mut t: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let mut row = vec![0.0; width];
            row[..n].copy_from_slice(&a[i]);
            row[n + i] = 1.0;
            row[width - 1] = b[i];
            row
        })
        .collect();
    let mut basis: Vec<usize> = (n..n + m).collect();

    let pivot = |t: &mut Vec<Vec<f64>>, obj: &mut Vec<f64>, r: usize, col: usize| {
        let pv = t[r][col];
        t[r].iter_mut().for_each(|x| *x /= pv);
        let prow = t[r].clone();
        for (i, row) in t.iter_mut().enumerate() {
            if i != r && row[col] != 0.0 {
                let f = row[col];
                row.iter_mut().zip(&prow).for_each(|(x, y)| *x -= f * y);
            }
        }
        let f = obj[col];
        if f != 0.0 {
            obj.iter_mut().zip(&prow).for_each(|(x, y)| *x -= f * y);
        }
    };

    // reduced costs stored as obj[j] = c_j - z_j (maximisation), obj[width-1] = -value
    let run = |t: &mut Vec<Vec<f64>>, obj: &mut Vec<f64>, basis: &mut Vec<usize>, allowed: usize| -> bool {
        for _ in 0..10_000 {
            let Some(col) = (0..allowed).find(|&j| obj[j] > EPS) else { return true };
            let mut best: Option<(usize, f64)> = None;
            for i in 0..t.len() {
                if t[i][col] > EPS {
                    let ratio = t[i][width - 1] / t[i][col];
                    match best {
                        Some((bi, br)) if ratio > br + EPS || (ratio > br - EPS && basis[i] > basis[bi]) => {}
                        _ => best = Some((i, ratio)),
                    }
                }
            }
            let Some((r, _)) = best else { return false };
            pivot(t, obj, r, col);
            basis[r] = col;
        }
        true
    };

    // phase 1: maximise -sum(artificials)
    let mut obj1 = vec![0.0; width];
    for row in &t {
        for j in 0..n {
            obj1[j] += row[j];
        }
        obj1[width - 1] += row[width - 1];
    }
    run(&mut t, &mut obj1, &mut basis, n);
    if obj1[width - 1] > 1e-9 {
        return None;
    }
    // drive artificials out of the basis where possible
    for r in 0..m {
        if basis[r] >= n {
            if let Some(col) = (0..n).find(|&j| t[r][j].abs() > EPS) {
                let mut dummy = vec![0.0; width];
                pivot(&mut t, &mut dummy, r, col);
                basis[r] = col;
            }
        }
    }
    // phase 2
    let mut obj2 = vec![0.0; width];
    obj2[..n].copy_from_slice(c);
    for r in 0..m {
        let bcol = basis[r];
        if bcol < n && obj2[bcol] != 0.0 {
            let f = obj2[bcol];
            let row = t[r].clone();
            obj2.iter_mut().zip(&row).for_each(|(x, y)| *x -= f * y);
        }
    }
    if !run(&mut t, &mut obj2, &mut basis, n) {
        return Some(f64::INFINITY);
    }
    Some(-obj2[width - 1])
}
