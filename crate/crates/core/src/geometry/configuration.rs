use super::{Point, PointId, Vec2};
use crate::error::{Error, Result};

/// Bucket grid over the torus for neighbourhood queries.
#[derive(Debug, Clone)]
struct SpatialGrid {
    side: usize,
    buckets: Vec<Vec<usize>>,
    built_for: usize,
}

impl SpatialGrid {
    fn new(points: &[Point]) -> Self {
        let side = ((points.len() as f64 / 2.0).sqrt() as usize).clamp(1, 512);
        let mut grid = SpatialGrid {
            side,
            buckets: vec![Vec::new(); side * side],
            built_for: points.len().max(1),
        };
        for (i, p) in points.iter().enumerate() {
            let b = grid.bucket(*p);
            grid.buckets[b].push(i);
        }
        grid
    }

    fn cell_coord(&self, v: f64) -> usize {
        ((v * self.side as f64) as usize).min(self.side - 1)
    }

    fn bucket(&self, p: Point) -> usize {
        self.cell_coord(p.y()) * self.side + self.cell_coord(p.x())
    }

    fn insert(&mut self, p: Point, idx: usize) {
        let b = self.bucket(p);
        self.buckets[b].push(idx);
    }

    fn remove(&mut self, p: Point, idx: usize) {
        let b = self.bucket(p);
        let bucket = &mut self.buckets[b];
        if let Some(pos) = bucket.iter().position(|&i| i == idx) {
            bucket.swap_remove(pos);
        }
    }

    fn rename(&mut self, p: Point, from: usize, to: usize) {
        let b = self.bucket(p);
        if let Some(slot) = self.buckets[b].iter_mut().find(|i| **i == from) {
            *slot = to;
        }
    }

    fn needs_rebuild(&self, n: usize) -> bool {
        n > 4 * self.built_for || 4 * n < self.built_for
    }

    /// Calls `f` once for every bucket within `r` of `center`.
    fn for_buckets(&self, center: Point, r: f64, mut f: impl FnMut(&[usize])) {
        let g = self.side as isize;
        let reach = (r * self.side as f64).ceil() as isize;
        if 2 * reach + 1 >= g {
            self.buckets.iter().for_each(|b| f(b));
            return;
        }
        let cx = self.cell_coord(center.x()) as isize;
        let cy = self.cell_coord(center.y()) as isize;
        for dy in -reach..=reach {
            let by = (cy + dy).rem_euclid(g);
            for dx in -reach..=reach {
                let bx = (cx + dx).rem_euclid(g);
                f(&self.buckets[(by * g + bx) as usize]);
            }
        }
    }
}

/// A finite configuration of distinct points on the unit torus.
///
/// Points are addressed either by their stable [`PointId`] or by a dense
/// index; removal swaps the last point into the freed index.
#[derive(Debug, Clone)]
pub struct PointConfiguration {
    points: Vec<Point>,
    ids: Vec<PointId>,
    next_id: PointId,
    generation: u64,
    grid: SpatialGrid,
}

impl Default for PointConfiguration {
    fn default() -> Self {
        Self::new()
    }
}

impl PointConfiguration {
    pub fn new() -> Self {
        PointConfiguration {
            points: Vec::new(),
            ids: Vec::new(),
            next_id: 0,
            generation: 0,
            grid: SpatialGrid::new(&[]),
        }
    }

    /// Builds a configuration with ids `0..n`, rejecting duplicates.
    pub fn from_points(points: impl IntoIterator<Item = Point>) -> Result<Self> {
        let points: Vec<Point> = points.into_iter().collect();
        let mut sorted: Vec<(u64, u64)> = points
            .iter()
            .map(|p| (p.x().to_bits(), p.y().to_bits()))
            .collect();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicatePoint {
                x: f64::from_bits(w[0].0),
                y: f64::from_bits(w[0].1),
            });
        }
        let n = points.len();
        Ok(PointConfiguration {
            grid: SpatialGrid::new(&points),
            points,
            ids: (0..n as PointId).collect(),
            next_id: n as PointId,
            generation: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn ids(&self) -> &[PointId] {
        &self.ids
    }

    pub fn point(&self, index: usize) -> Point {
        self.points[index]
    }

    pub fn id(&self, index: usize) -> PointId {
        self.ids[index]
    }

    /// Id the next inserted point will receive.
    pub fn next_id(&self) -> PointId {
        self.next_id
    }

    /// Incremented on every mutation.
    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn index_of(&self, id: PointId) -> Option<usize> {
        self.ids.iter().position(|&i| i == id)
    }

    pub fn contains_point(&self, p: Point) -> bool {
        let mut found = false;
        self.grid.for_buckets(p, 0.0, |b| {
            found |= b.iter().any(|&i| self.points[i] == p);
        });
        found
    }

    fn maybe_rebuild(&mut self) {
        if self.grid.needs_rebuild(self.points.len()) {
            self.grid = SpatialGrid::new(&self.points);
        }
    }

    /// Adds `p` and returns its id.
    pub fn insert(&mut self, p: Point) -> Result<PointId> {
        if self.contains_point(p) {
            return Err(Error::DuplicatePoint { x: p.x(), y: p.y() });
        }
        let id = self.next_id;
        self.insert_with_id(p, id);
        Ok(id)
    }

    fn insert_with_id(&mut self, p: Point, id: PointId) {
        let idx = self.points.len();
        self.points.push(p);
        self.ids.push(id);
        self.next_id = self.next_id.max(id + 1);
        self.generation += 1;
        self.grid.insert(p, idx);
        self.maybe_rebuild();
    }

    /// Removes the point at `index`; the last point takes its index.
    pub fn remove(&mut self, index: usize) -> (PointId, Point) {
        let p = self.points[index];
        let last = self.points.len() - 1;
        self.grid.remove(p, index);
        if index != last {
            self.grid.rename(self.points[last], last, index);
        }
        self.points.swap_remove(index);
        let id = self.ids.swap_remove(index);
        self.generation += 1;
        self.maybe_rebuild();
        (id, p)
    }

    /// Re-inserts a removed point under its old id (undo of [`Self::remove`]).
    pub fn restore(&mut self, id: PointId, p: Point) {
        self.insert_with_id(p, id);
    }

    /// Moves the point at `index` to `to`, keeping its id.
    pub fn move_point(&mut self, index: usize, to: Point) -> Result<()> {
        if self.contains_point(to) {
            return Err(Error::DuplicatePoint { x: to.x(), y: to.y() });
        }
        self.grid.remove(self.points[index], index);
        self.points[index] = to;
        self.grid.insert(to, index);
        self.generation += 1;
        Ok(())
    }

    /// Indices and unwrapped positions (around `center`) of all points within
    /// torus distance `r` of `center`. Requires `r < 0.5`.
    pub fn neighbours_within(&self, center: Point, r: f64) -> Vec<(usize, Vec2)> {
        let mut out = Vec::new();
        self.for_each_within(center, r, |i, pos| out.push((i, pos)));
        out
    }

    /// Calls `f` with the index and position of every point within `r` of
    /// `center`, positions unwrapped to the copy nearest `center`.
    pub fn for_each_within(&self, center: Point, r: f64, mut f: impl FnMut(usize, Vec2)) {
        debug_assert!(r < 0.5);
        let c = center.to_vec2();
        let r2 = r * r;
        self.grid.for_buckets(center, r, |b| {
            for &i in b {
                let d = center.torus_delta(self.points[i]);
                if d.norm2() <= r2 {
                    f(i, c + d);
                }
            }
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_config(n: usize, seed: u64) -> PointConfiguration {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        PointConfiguration::from_points((0..n).map(|_| Point::new(rng.random(), rng.random())))
            .unwrap()
    }

    #[test]
    fn duplicates_rejected() {
        let p = Point::new(0.2, 0.3);
        assert!(PointConfiguration::from_points([p, p]).is_err());
        let mut c = PointConfiguration::from_points([p]).unwrap();
        assert!(c.insert(p).is_err());
        assert!(c.insert(Point::new(0.3, 0.3)).is_ok());
    }

    #[test]
    fn neighbour_query_matches_scan() {
        let mut c = random_config(500, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for step in 0..200 {
            match step % 3 {
                0 => {
                    c.insert(Point::new(rng.random(), rng.random())).unwrap();
                }
                1 => {
                    let i = rng.random_range(0..c.len());
                    c.remove(i);
                }
                _ => {
                    let i = rng.random_range(0..c.len());
                    c.move_point(i, Point::new(rng.random(), rng.random())).unwrap();
                }
            }
        }
        for _ in 0..50 {
            let center = Point::new(rng.random(), rng.random());
            let r = rng.random_range(0.0..0.45);
            let mut got: Vec<usize> = c.neighbours_within(center, r).iter().map(|x| x.0).collect();
            let mut want: Vec<usize> = (0..c.len())
                .filter(|&i| center.torus_dist(c.point(i)) <= r)
                .collect();
            got.sort();
            want.sort();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn remove_and_restore_keeps_ids() {
        let mut c = random_config(10, 4);
        let before: Vec<_> = c.ids().to_vec();
        let (id, p) = c.remove(3);
        assert_eq!(c.len(), 9);
        c.restore(id, p);
        let mut after = c.ids().to_vec();
        after.sort();
        assert_eq!(after, before);
        assert_eq!(c.point(c.index_of(id).unwrap()), p);
    }
}
