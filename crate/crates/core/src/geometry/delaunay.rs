//! Planar Delaunay triangulation by incremental Bowyer-Watson insertion.
//!
//! Vertices carry a `rank` used by the symbolic perturbation of the in-circle
//! predicate. The first three vertices belong to an enclosing super triangle;
//! callers filter triangles touching them.

use super::predicates::{incircle, orient, InCircle};
use super::{PointId, Vec2};
use crate::error::{Error, Result};

pub const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
struct Tri {
    v: [u32; 3],
    /// `nb[i]` lies across the edge opposite `v[i]`.
    nb: [u32; 3],
}

impl Tri {
    fn dead() -> Self {
        Tri {
            v: [NONE; 3],
            nb: [NONE; 3],
        }
    }

    fn is_alive(&self) -> bool {
        self.v[0] != NONE
    }

    fn index_of(&self, vertex: u32) -> Option<usize> {
        self.v.iter().position(|&w| w == vertex)
    }
}

/// Edge of a cavity boundary, oriented counter-clockwise as seen from inside.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub a: u32,
    pub b: u32,
    /// Triangle on the other side of the edge, or [`NONE`].
    pub outside: u32,
}

/// The set of triangles whose open circumdisc contains a query point.
#[derive(Debug, Clone, Default)]
pub struct Cavity {
    pub triangles: Vec<u32>,
    pub boundary: Vec<BoundaryEdge>,
}

/// Reusable buffers for repeated insertion.
#[derive(Debug, Clone, Default)]
struct Scratch {
    stack: Vec<u32>,
    cavity: Cavity,
    created: Vec<(u32, u32, u32)>,
    marks: Marks,
}

/// Per-triangle visit marks, cleared in O(1) by bumping the stamp.
#[derive(Debug, Clone, Default)]
struct Marks {
    of: Vec<u32>,
    stamp: u32,
}

impl Marks {
    const INSIDE: u32 = 0;
    const REJECTED: u32 = 1;

    fn reset(&mut self, triangles: usize) {
        if self.stamp >= u32::MAX - 4 {
            self.of.iter_mut().for_each(|m| *m = 0);
            self.stamp = 0;
        }
        self.stamp += 2;
        if self.of.len() < triangles {
            self.of.resize(triangles, 0);
        }
    }

    fn get(&self, t: u32) -> Option<u32> {
        let m = self.of[t as usize];
        (m >= self.stamp).then(|| m - self.stamp)
    }

    fn set(&mut self, t: u32, what: u32) {
        self.of[t as usize] = self.stamp + what;
    }
}

#[derive(Debug, Clone)]
pub struct PlanarDelaunay {
    pos: Vec<Vec2>,
    rank: Vec<u64>,
    tris: Vec<Tri>,
    free: Vec<u32>,
    vert_tri: Vec<u32>,
    hint: u32,
    scratch: Scratch,
}

pub const SUPER_VERTICES: usize = 3;

impl PlanarDelaunay {
    /// Empty triangulation whose super triangle encloses the box `[lo, hi]` with ample room.
    pub fn new(lo: Vec2, hi: Vec2) -> Self {
        let c = (lo + hi) * 0.5;
        let d = (hi.x - lo.x).max(hi.y - lo.y).max(1e-6);
        let m = 200.0 * d;
        let pos = vec![
            Vec2::new(c.x - m, c.y - m),
            Vec2::new(c.x + m, c.y - m),
            Vec2::new(c.x, c.y + m),
        ];
        let rank = vec![u64::MAX, u64::MAX - 1, u64::MAX - 2];
        let tris = vec![Tri {
            v: [0, 1, 2],
            nb: [NONE; 3],
        }];
        PlanarDelaunay {
            pos,
            rank,
            tris,
            free: Vec::new(),
            vert_tri: vec![0, 0, 0],
            hint: 0,
            scratch: Scratch::default(),
        }
    }

    /// Triangulates `points`, inserting them along a Hilbert curve. Returns the
    /// triangulation and the vertex index assigned to each input point.
    pub fn build(points: &[(Vec2, u64)]) -> Result<(Self, Vec<u32>)> {
        let (mut lo, mut hi) = (Vec2::new(f64::MAX, f64::MAX), Vec2::new(f64::MIN, f64::MIN));
        for (p, _) in points {
            lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        if points.is_empty() {
            lo = Vec2::new(0.0, 0.0);
            hi = Vec2::new(1.0, 1.0);
        }
        Self::build_in(points, lo, hi)
    }

    /// Like [`Self::build`], with a super triangle enclosing at least the box `[lo, hi]`.
    pub fn build_in(points: &[(Vec2, u64)], mut lo: Vec2, mut hi: Vec2) -> Result<(Self, Vec<u32>)> {
        for (p, _) in points {
            lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let mut dt = Self::new(lo, hi);
        dt.pos.reserve(points.len());
        dt.rank.reserve(points.len());
        dt.tris.reserve(2 * points.len() + 1);
        dt.vert_tri.reserve(points.len());
        let span = (hi.x - lo.x).max(hi.y - lo.y).max(1e-12);
        let mut order: Vec<(u64, usize)> = points
            .iter()
            .enumerate()
            .map(|(i, (p, _))| {
                let gx = (((p.x - lo.x) / span) * 65535.0) as u32;
                let gy = (((p.y - lo.y) / span) * 65535.0) as u32;
                (hilbert_index(gx, gy), i)
            })
            .collect();
        order.sort_unstable();
        let mut handles = vec![NONE; points.len()];
        for (_, i) in order {
            let (p, r) = points[i];
            handles[i] = dt.insert(p, r)?;
        }
        Ok((dt, handles))
    }

    pub fn num_vertices(&self) -> usize {
        self.pos.len()
    }

    pub fn is_super(&self, v: u32) -> bool {
        (v as usize) < SUPER_VERTICES
    }

    pub fn position(&self, v: u32) -> Vec2 {
        self.pos[v as usize]
    }

    pub fn rank(&self, v: u32) -> u64 {
        self.rank[v as usize]
    }

    pub fn vertices(&self, t: u32) -> [u32; 3] {
        self.tris[t as usize].v
    }

    pub fn neighbours(&self, t: u32) -> [u32; 3] {
        self.tris[t as usize].nb
    }

    pub fn corners(&self, t: u32) -> [Vec2; 3] {
        let v = self.tris[t as usize].v;
        [self.pos[v[0] as usize], self.pos[v[1] as usize], self.pos[v[2] as usize]]
    }

    pub fn touches_super(&self, t: u32) -> bool {
        self.tris[t as usize].v.iter().any(|&v| self.is_super(v))
    }

    /// Indices of live triangles.
    pub fn triangles(&self) -> impl Iterator<Item = u32> + '_ {
        self.tris
            .iter()
            .enumerate()
            .filter(|(_, t)| t.is_alive())
            .map(|(i, _)| i as u32)
    }

    fn in_circle(&self, t: u32, p: Vec2, rank: u64) -> Result<bool> {
        let v = self.tris[t as usize].v;
        let q = |i: usize| (self.pos[v[i] as usize], self.rank[v[i] as usize]);
        match incircle(q(0), q(1), q(2), (p, rank)) {
            InCircle::Inside => Ok(true),
            InCircle::Outside => Ok(false),
            InCircle::Degenerate => Err(Error::Degenerate {
                ids: [q(0).1, q(1).1, q(2).1, rank as PointId],
            }),
        }
    }

    /// Finds a triangle whose closed interior contains `p`.
    pub fn locate(&self, p: Vec2) -> Result<u32> {
        let mut t = self.hint;
        if t as usize >= self.tris.len() || !self.tris[t as usize].is_alive() {
            t = self.triangles().next().expect("triangulation is never empty");
        }
        let limit = 4 * self.tris.len() + 64;
        let mut rot = 0usize;
        for _ in 0..limit {
            let tri = &self.tris[t as usize];
            let mut next = None;
            for k in 0..3 {
                let i = (k + rot) % 3;
                let a = self.pos[tri.v[(i + 1) % 3] as usize];
                let b = self.pos[tri.v[(i + 2) % 3] as usize];
                if orient(a, b, p) < 0.0 {
                    next = Some(tri.nb[i]);
                    break;
                }
            }
            rot = (rot + 1) % 3;
            match next {
                None => return Ok(t),
                Some(NONE) => {
                    return Err(Error::InvalidInput(format!(
                        "point ({}, {}) outside the triangulated domain",
                        p.x, p.y
                    )))
                }
                Some(n) => t = n,
            }
        }
        // Walk did not converge; fall back to a scan.
        for t in self.triangles() {
            let v = self.tris[t as usize].v;
            if (0..3).all(|i| {
                orient(
                    self.pos[v[(i + 1) % 3] as usize],
                    self.pos[v[(i + 2) % 3] as usize],
                    p,
                ) >= 0.0
            }) {
                return Ok(t);
            }
        }
        Err(Error::InvalidInput("point location failed".into()))
    }

    /// Triangles whose open circumdisc contains `p`, without modifying the triangulation.
    pub fn cavity(&self, p: Vec2, rank: u64) -> Result<Cavity> {
        let mut out = Cavity::default();
        self.fill_cavity(p, rank, &mut out, &mut Vec::new(), &mut Marks::default())?;
        Ok(out)
    }

    fn fill_cavity(&self, p: Vec2, rank: u64, out: &mut Cavity, stack: &mut Vec<u32>, marks: &mut Marks) -> Result<()> {
        let t0 = self.locate(p)?;
        for &v in &self.tris[t0 as usize].v {
            if self.pos[v as usize] == p {
                return Err(Error::DuplicatePoint { x: p.x, y: p.y });
            }
        }
        marks.reset(self.tris.len());
        out.triangles.clear();
        stack.clear();
        out.triangles.push(t0);
        marks.set(t0, Marks::INSIDE);
        stack.push(t0);
        while let Some(t) = stack.pop() {
            for &n in &self.tris[t as usize].nb {
                if n == NONE || marks.get(n).is_some() {
                    continue;
                }
                if self.in_circle(n, p, rank)? {
                    marks.set(n, Marks::INSIDE);
                    out.triangles.push(n);
                    stack.push(n);
                } else {
                    marks.set(n, Marks::REJECTED);
                }
            }
        }
        out.boundary.clear();
        for &t in &out.triangles {
            let tri = &self.tris[t as usize];
            for i in 0..3 {
                let n = tri.nb[i];
                if n == NONE || marks.get(n) != Some(Marks::INSIDE) {
                    out.boundary.push(BoundaryEdge {
                        a: tri.v[(i + 1) % 3],
                        b: tri.v[(i + 2) % 3],
                        outside: n,
                    });
                }
            }
        }
        Ok(())
    }

    fn alloc(&mut self, t: Tri) -> u32 {
        if let Some(i) = self.free.pop() {
            self.tris[i as usize] = t;
            i
        } else {
            self.tris.push(t);
            (self.tris.len() - 1) as u32
        }
    }

    /// Inserts `p` and returns its vertex index.
    pub fn insert(&mut self, p: Vec2, rank: u64) -> Result<u32> {
        let mut s = std::mem::take(&mut self.scratch);
        let found = self.fill_cavity(p, rank, &mut s.cavity, &mut s.stack, &mut s.marks);
        let out = found.map(|()| self.insert_into_cavity(p, rank, &s.cavity, &mut s.created));
        self.scratch = s;
        out
    }

    /// Inserts `p` using a cavity previously computed by [`Self::cavity`] on
    /// the current state.
    pub fn insert_with_cavity(&mut self, p: Vec2, rank: u64, cavity: &Cavity) -> u32 {
        let mut created = std::mem::take(&mut self.scratch.created);
        let v = self.insert_into_cavity(p, rank, cavity, &mut created);
        self.scratch.created = created;
        v
    }

    fn insert_into_cavity(&mut self, p: Vec2, rank: u64, cavity: &Cavity, created: &mut Vec<(u32, u32, u32)>) -> u32 {
        let vi = self.pos.len() as u32;
        self.pos.push(p);
        self.rank.push(rank);
        self.vert_tri.push(NONE);
        for &t in &cavity.triangles {
            self.tris[t as usize] = Tri::dead();
            self.free.push(t);
        }
        created.clear();
        for e in &cavity.boundary {
            let t = self.alloc(Tri {
                v: [e.a, e.b, vi],
                nb: [NONE, NONE, e.outside],
            });
            if e.outside != NONE {
                let out = &mut self.tris[e.outside as usize];
                for j in 0..3 {
                    if out.v[(j + 1) % 3] == e.b && out.v[(j + 2) % 3] == e.a {
                        out.nb[j] = t;
                        break;
                    }
                }
            }
            self.vert_tri[e.a as usize] = t;
            self.vert_tri[e.b as usize] = t;
            created.push((e.a, e.b, t));
        }
        for &(a, b, t) in created.iter() {
            let starts_at_b = created.iter().find(|c| c.0 == b).map_or(NONE, |c| c.2);
            let ends_at_a = created.iter().find(|c| c.1 == a).map_or(NONE, |c| c.2);
            let tri = &mut self.tris[t as usize];
            tri.nb[0] = starts_at_b;
            tri.nb[1] = ends_at_a;
        }
        if let Some(&(_, _, t)) = created.last() {
            self.vert_tri[vi as usize] = t;
            self.hint = t;
        }
        vi
    }

    /// Triangles incident to `v`, in counter-clockwise order. Open fans (hull
    /// vertices) are returned starting from one side.
    pub fn star(&self, v: u32) -> Vec<u32> {
        let t0 = self.vert_tri[v as usize];
        let mut out = Vec::with_capacity(8);
        let mut t = t0;
        loop {
            out.push(t);
            let tri = &self.tris[t as usize];
            let i = tri.index_of(v).expect("vertex in star triangle");
            let n = tri.nb[(i + 1) % 3];
            if n == NONE {
                break;
            }
            if n == t0 {
                return out;
            }
            t = n;
        }
        // Open fan: walk the other way from t0.
        let mut t = t0;
        loop {
            let tri = &self.tris[t as usize];
            let i = tri.index_of(v).expect("vertex in star triangle");
            let n = tri.nb[(i + 2) % 3];
            if n == NONE {
                break;
            }
            out.insert(0, n);
            t = n;
        }
        out
    }
}

/// Position along a Hilbert curve of order 16.
fn hilbert_index(mut x: u32, mut y: u32) -> u64 {
    let n: u32 = 1 << 16;
    let mut d: u64 = 0;
    let mut s = n / 2;
    while s > 0 {
        let rx = u32::from(x & s > 0);
        let ry = u32::from(y & s > 0);
        d += u64::from(s) * u64::from(s) * u64::from((3 * rx) ^ ry);
        if ry == 0 {
            if rx == 1 {
                x = n - 1 - x;
                y = n - 1 - y;
            }
            std::mem::swap(&mut x, &mut y);
        }
        s /= 2;
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::predicates::circumcircle;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn check_delaunay(dt: &PlanarDelaunay) {
        let real: Vec<u32> = (SUPER_VERTICES as u32..dt.num_vertices() as u32).collect();
        for t in dt.triangles() {
            let v = dt.vertices(t);
            let c = dt.corners(t);
            assert!(orient(c[0], c[1], c[2]) > 0.0, "triangle not ccw");
            for i in 0..3 {
                let n = dt.neighbours(t)[i];
                if n != NONE {
                    assert!(dt.neighbours(n).contains(&t), "asymmetric adjacency");
                }
            }
            if dt.touches_super(t) {
                continue;
            }
            let (cc, r) = circumcircle(c[0], c[1], c[2]);
            for &w in &real {
                if v.contains(&w) {
                    continue;
                }
                assert!(dt.position(w).dist(cc) >= r * (1.0 - 1e-9), "non-empty circumdisc");
            }
        }
    }

    #[test]
    fn random_points_are_delaunay() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pts: Vec<(Vec2, u64)> = (0..300)
            .map(|i| (Vec2::new(rng.random(), rng.random()), i))
            .collect();
        let (dt, handles) = PlanarDelaunay::build(&pts).unwrap();
        assert!(handles.iter().all(|&h| h != NONE));
        check_delaunay(&dt);
        // Euler: with super triangle, #triangles = 2(n+3) - 2 - 3 = 2n + 1.
        assert_eq!(dt.triangles().count(), 2 * pts.len() + 1);
    }

    #[test]
    fn grid_points_with_ties() {
        let mut pts = Vec::new();
        for i in 0..8 {
            for j in 0..8 {
                pts.push((Vec2::new(i as f64, j as f64), (i * 8 + j) as u64));
            }
        }
        let (dt, _) = PlanarDelaunay::build(&pts).unwrap();
        check_delaunay(&dt);
        assert_eq!(dt.triangles().count(), 2 * pts.len() + 1);
    }

    #[test]
    fn duplicate_is_rejected() {
        let pts = vec![
            (Vec2::new(0.1, 0.1), 0),
            (Vec2::new(0.5, 0.9), 1),
            (Vec2::new(0.9, 0.2), 2),
        ];
        let (mut dt, _) = PlanarDelaunay::build(&pts).unwrap();
        assert!(matches!(
            dt.insert(Vec2::new(0.5, 0.9), 9),
            Err(Error::DuplicatePoint { .. })
        ));
    }

    #[test]
    fn star_is_closed_cycle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<(Vec2, u64)> = (0..50)
            .map(|i| (Vec2::new(rng.random(), rng.random()), i))
            .collect();
        let (dt, handles) = PlanarDelaunay::build(&pts).unwrap();
        for &h in &handles {
            let star = dt.star(h);
            assert!(star.len() >= 3);
            for &t in &star {
                assert!(dt.vertices(t).contains(&h));
            }
        }
    }

    #[test]
    fn cavity_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<(Vec2, u64)> = (0..80)
            .map(|i| (Vec2::new(rng.random(), rng.random()), i))
            .collect();
        let (dt, _) = PlanarDelaunay::build(&pts).unwrap();
        for k in 0..50 {
            let p = Vec2::new(rng.random(), rng.random());
            let cav = dt.cavity(p, 1000 + k).unwrap();
            let mut brute: Vec<u32> = dt
                .triangles()
                .filter(|&t| {
                    let c = dt.corners(t);
                    crate::geometry::predicates::incircle_raw(c[0], c[1], c[2], p) > 0.0
                })
                .collect();
            let mut got = cav.triangles.clone();
            brute.sort();
            got.sort();
            assert_eq!(got, brute);
            assert_eq!(cav.boundary.len(), cav.triangles.len() + 2);
        }
    }
}
