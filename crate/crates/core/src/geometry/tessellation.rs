//! Periodic Delaunay triangulation and Voronoi diagram of a torus configuration.
//!
//! Points are replicated into a margin around the unit square, triangulated
//! in the plane, and every triangle incident to an original point is
//! certified by checking that its circumdisc lies inside the replicated
//! region. The margin grows until certification succeeds.

use std::collections::HashMap;

use super::delaunay::PlanarDelaunay;
use super::predicates::circumcircle;
use super::stats::{polygon_centroid, CellStats, TriangleStats};
use super::{Point, PointConfiguration, PointId, Vec2};
use crate::error::{Error, Result};

/// Fewest points for which a periodic tessellation is built.
pub const MIN_POINTS: usize = 4;

/// A periodic copy of a configuration point: `points[index] + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Vertex {
    pub index: u32,
    pub offset: [i32; 2],
}

impl Vertex {
    fn shifted(self, by: [i32; 2]) -> Vertex {
        Vertex {
            index: self.index,
            offset: [self.offset[0] + by[0], self.offset[1] + by[1]],
        }
    }

    pub fn position(self, points: &[Point]) -> Vec2 {
        let p = points[self.index as usize];
        Vec2::new(p.x() + f64::from(self.offset[0]), p.y() + f64::from(self.offset[1]))
    }
}

/// Orbit key of a triangle under integer translations.
pub(crate) type TriangleKey = [(u32, i32, i32); 3];

pub(crate) fn triangle_key(v: [Vertex; 3]) -> TriangleKey {
    rotated_key(v, canonical_rotation(v))
}

fn rotated_key(v: [Vertex; 3], r: usize) -> TriangleKey {
    let o = v[r].offset;
    let mut k = [(0, 0, 0); 3];
    for (j, slot) in k.iter_mut().enumerate() {
        let w = v[(r + j) % 3];
        *slot = (w.index, w.offset[0] - o[0], w.offset[1] - o[1]);
    }
    k
}

/// Rotation of the vertex list that yields the smallest key, so that derived
/// quantities are computed in a translation-independent order.
pub(crate) fn canonical_rotation(v: [Vertex; 3]) -> usize {
    (0..3)
        .min_by_key(|&r| rotated_key(v, r))
        .expect("three rotations")
}

pub(crate) fn rotate<T: Copy>(a: [T; 3], r: usize) -> [T; 3] {
    [a[r], a[(r + 1) % 3], a[(r + 2) % 3]]
}

/// Orbit key of an undirected edge under integer translations.
pub(crate) fn edge_key(a: Vertex, b: Vertex) -> (u32, u32, i32, i32) {
    let d = [b.offset[0] - a.offset[0], b.offset[1] - a.offset[1]];
    match a.index.cmp(&b.index) {
        std::cmp::Ordering::Less => (a.index, b.index, d[0], d[1]),
        std::cmp::Ordering::Greater => (b.index, a.index, -d[0], -d[1]),
        std::cmp::Ordering::Equal => {
            let (x, y) = (d[0], d[1]).max((-d[0], -d[1]));
            (a.index, a.index, x, y)
        }
    }
}

#[derive(Debug, Clone)]
pub struct Triangle {
    /// Counter-clockwise, translated so that the barycenter lies in `[0,1)²`.
    pub vertices: [Vertex; 3],
    pub ids: [PointId; 3],
    pub corners: [Vec2; 3],
    pub barycenter: Point,
    pub circumcenter: Vec2,
    pub stats: TriangleStats,
}

#[derive(Debug, Clone)]
pub struct VoronoiCell {
    pub index: usize,
    pub id: PointId,
    /// The nucleus, at its position in `[0,1)²`.
    pub center: Vec2,
    /// Counter-clockwise polygon, contiguous around `center`.
    pub polygon: Vec<Vec2>,
    /// Triangle dual to each polygon vertex.
    pub triangles: Vec<usize>,
    pub barycenter: Point,
    pub stats: CellStats,
}

/// A Delaunay edge, equivalently a pair of neighbouring Voronoi cells.
#[derive(Debug, Clone)]
pub struct Edge {
    /// `ends[0]` has zero offset; `ends[1]` is the contiguous copy.
    pub ends: [Vertex; 2],
    /// Triangles on the left and right of `ends[0] -> ends[1]`.
    pub triangles: [usize; 2],
    /// Opposite corners of the left and right triangles, in the frame of `ends`.
    pub apexes: [Vec2; 2],
}

#[derive(Debug, Clone)]
pub struct Tessellation {
    points: Vec<Point>,
    ids: Vec<PointId>,
    triangles: Vec<Triangle>,
    cells: Vec<VoronoiCell>,
    edges: Vec<Edge>,
}

struct NotCertified;

impl Tessellation {
    pub fn build(config: &PointConfiguration) -> Result<Self> {
        Self::from_points(config.points(), config.ids())
    }

    /// Builds from parallel point and id slices. Ids rank the tie-breaking
    /// perturbation and must be distinct.
    pub fn from_points(points: &[Point], ids: &[PointId]) -> Result<Self> {
        assert_eq!(points.len(), ids.len());
        let n = points.len();
        if n < MIN_POINTS {
            return Err(Error::TooFewPoints {
                min: MIN_POINTS,
                got: n,
            });
        }
        let mut margin = (4.0 / (n as f64).sqrt()).clamp(0.1, 1.0);
        loop {
            match Self::try_build(points, ids, margin)? {
                Ok(t) => return Ok(t),
                Err(NotCertified) if margin < 1.0 => margin = (2.0 * margin).min(1.0),
                Err(NotCertified) => return Err(Error::TorusTooSparse),
            }
        }
    }

    fn try_build(
        points: &[Point],
        ids: &[PointId],
        m: f64,
    ) -> Result<std::result::Result<Self, NotCertified>> {
        let n = points.len();
        let mut input = Vec::with_capacity(n * 2);
        let mut meta = Vec::with_capacity(n * 2);
        let mut original = vec![0usize; n];
        for (i, &id) in ids.iter().enumerate() {
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let v = Vertex {
                        index: i as u32,
                        offset: [dx, dy],
                    };
                    let q = v.position(points);
                    let inside = |c: f64| c >= -m && c <= 1.0 + m;
                    if inside(q.x) && inside(q.y) {
                        if dx == 0 && dy == 0 {
                            original[i] = input.len();
                        }
                        input.push((q, id));
                        meta.push(v);
                    }
                }
            }
        }
        let (dt, handles) = PlanarDelaunay::build(&input)?;
        // Planar vertex handle -> input slot.
        let mut slot_of = vec![usize::MAX; dt.num_vertices()];
        for (slot, &h) in handles.iter().enumerate() {
            slot_of[h as usize] = slot;
        }
        let vertex = |h: u32| -> Option<Vertex> {
            let s = slot_of[h as usize];
            (s != usize::MAX).then(|| meta[s])
        };

        let certified = |t: u32| -> bool {
            if dt.touches_super(t) {
                return false;
            }
            let c = dt.corners(t);
            let (cc, r) = circumcircle(c[0], c[1], c[2]);
            cc.x - r > -m && cc.x + r < 1.0 + m && cc.y - r > -m && cc.y + r < 1.0 + m
        };

        let mut tri_index: HashMap<TriangleKey, usize> = HashMap::with_capacity(2 * n);
        let mut triangles: Vec<Triangle> = Vec::with_capacity(2 * n);
        let mut stars: Vec<Vec<u32>> = Vec::with_capacity(n);
        let planar_key = |t: u32| -> TriangleKey {
            let v = dt.vertices(t);
            triangle_key([
                vertex(v[0]).unwrap(),
                vertex(v[1]).unwrap(),
                vertex(v[2]).unwrap(),
            ])
        };

        for i in 0..n {
            let h = handles[original[i]];
            let mut star = dt.star(h);
            let first = (0..star.len())
                .min_by_key(|&k| planar_key(star[k]))
                .unwrap_or(0);
            star.rotate_left(first);
            for &t in &star {
                if !certified(t) {
                    return Ok(Err(NotCertified));
                }
                let key = planar_key(t);
                if tri_index.contains_key(&key) {
                    continue;
                }
                let pv = dt.vertices(t);
                let verts = [
                    vertex(pv[0]).unwrap(),
                    vertex(pv[1]).unwrap(),
                    vertex(pv[2]).unwrap(),
                ];
                tri_index.insert(key, triangles.len());
                triangles.push(make_triangle(points, ids, verts));
            }
            stars.push(star);
        }

        let mut cells = Vec::with_capacity(n);
        let mut edge_index: HashMap<(u32, u32, i32, i32), usize> = HashMap::with_capacity(3 * n);
        let mut edges = Vec::with_capacity(3 * n);
        for i in 0..n {
            let h = handles[original[i]];
            let o = points[i].to_vec2();
            let mut rel = Vec::with_capacity(stars[i].len());
            let mut tris = Vec::with_capacity(stars[i].len());
            for &t in &stars[i] {
                let pv = dt.vertices(t);
                let r = canonical_rotation(pv.map(|w| vertex(w).unwrap()));
                let c = rotate(dt.corners(t), r);
                rel.push(circumcircle(c[0] - o, c[1] - o, c[2] - o).0);
                tris.push(tri_index[&planar_key(t)]);

                let pv = dt.vertices(t);
                let k = pv.iter().position(|&w| w == h).unwrap();
                let a = vertex(h).unwrap();
                let b = vertex(pv[(k + 1) % 3]).unwrap();
                let key = edge_key(a, b);
                if edge_index.contains_key(&key) {
                    continue;
                }
                let across = dt.neighbours(t)[(k + 2) % 3];
                if !certified(across) {
                    return Ok(Err(NotCertified));
                }
                let ak = dt.vertices(across);
                let apex_right = ak
                    .iter()
                    .find(|&&w| w != h && w != pv[(k + 1) % 3])
                    .copied()
                    .unwrap();
                edge_index.insert(key, edges.len());
                edges.push(Edge {
                    ends: [a, b],
                    triangles: [tri_index[&planar_key(t)], tri_index[&planar_key(across)]],
                    apexes: [dt.position(pv[(k + 2) % 3]), dt.position(apex_right)],
                });
            }
            let polygon: Vec<Vec2> = rel.iter().map(|&r| o + r).collect();
            let centroid = polygon_centroid(&polygon);
            cells.push(VoronoiCell {
                index: i,
                id: ids[i],
                center: o,
                stats: CellStats::from_polygon(Vec2::default(), &rel),
                barycenter: Point::new(centroid.x, centroid.y),
                polygon,
                triangles: tris,
            });
        }

        if triangles.len() != 2 * n || edges.len() != 3 * n {
            return Err(Error::InvalidInput(format!(
                "inconsistent periodic triangulation: {} triangles and {} edges for {} points",
                triangles.len(),
                edges.len(),
                n
            )));
        }
        Ok(Ok(Tessellation {
            points: points.to_vec(),
            ids: ids.to_vec(),
            triangles,
            cells,
            edges,
        }))
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn ids(&self) -> &[PointId] {
        &self.ids
    }

    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    pub fn cells(&self) -> &[VoronoiCell] {
        &self.cells
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Pairs of triangles sharing an edge, one entry per edge orbit.
    pub fn delaunay_neighbours(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().map(|e| (e.triangles[0], e.triangles[1]))
    }

    /// Pairs of cells sharing a Voronoi edge, one entry per edge orbit.
    pub fn voronoi_neighbours(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges
            .iter()
            .map(|e| (e.ends[0].index as usize, e.ends[1].index as usize))
    }

    /// Barycenter of the union of the two triangles on either side of `edge`.
    pub fn triangle_pair_barycenter(&self, edge: &Edge) -> Point {
        let a = edge.ends[0].position(&self.points);
        let b = edge.ends[1].position(&self.points);
        let quad = [a, edge.apexes[1], b, edge.apexes[0]];
        let c = polygon_centroid(&quad);
        Point::new(c.x, c.y)
    }

    /// Barycenter of the union of the two cells separated by `edge`.
    pub fn cell_pair_barycenter(&self, edge: &Edge) -> Point {
        let c0 = &self.cells[edge.ends[0].index as usize];
        let c1 = &self.cells[edge.ends[1].index as usize];
        let shift = Vec2::new(
            f64::from(edge.ends[1].offset[0]),
            f64::from(edge.ends[1].offset[1]),
        );
        let (a0, a1) = (c0.stats.volume, c1.stats.volume);
        let g0 = polygon_centroid(&c0.polygon);
        let g1 = polygon_centroid(&c1.polygon) + shift;
        let c = (g0 * a0 + g1 * a1) * (1.0 / (a0 + a1));
        Point::new(c.x, c.y)
    }
}

fn make_triangle(points: &[Point], ids: &[PointId], verts: [Vertex; 3]) -> Triangle {
    let verts = rotate(verts, canonical_rotation(verts));
    let p = verts.map(|v| v.position(points));
    let bary = (p[0] + p[1] + p[2]) * (1.0 / 3.0);
    let shift = [-(bary.x.floor() as i32), -(bary.y.floor() as i32)];
    let vertices = verts.map(|v| v.shifted(shift));
    let corners = vertices.map(|v| v.position(points));
    let o = corners[0];
    let cc = circumcircle(Vec2::default(), corners[1] - o, corners[2] - o).0 + o;
    let b = (corners[0] + corners[1] + corners[2]) * (1.0 / 3.0);
    Triangle {
        vertices,
        ids: vertices.map(|v| ids[v.index as usize]),
        barycenter: Point::new(b.x, b.y),
        circumcenter: cc,
        stats: TriangleStats::from_corners([Vec2::default(), corners[1] - o, corners[2] - o]),
        corners,
    }
}
