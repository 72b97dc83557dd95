//! Local re-tessellation for single-point changes.
//!
//! A change (birth, death or move) only alters triangles whose circumdisc
//! contains the inserted or removed point, and the cells of their vertices.
//! Those are found in a small planar triangulation of the points within a
//! ball around the change. A triangle of that patch is trusted when its
//! circumdisc lies inside the ball, or when a direct query finds no point of
//! the full configuration inside the circumdisc. If any triangle that matters
//! is untrusted, the ball grows; past radius 1/2 the whole tessellation is
//! rebuilt instead.

use std::collections::{BTreeSet, HashMap};

use super::delaunay::{Cavity, PlanarDelaunay};
use super::predicates::{circumcircle, incircle, InCircle};
use super::stats::{CellStats, TriangleStats};
use super::{Point, PointConfiguration, PointId, Tessellation, Vec2};
use crate::error::{Error, Result};

/// Largest ball radius tried before falling back to a full rebuild.
pub const MAX_LOCAL_RADIUS: f64 = 0.49;

/// Which part of the tessellation an interaction reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Delaunay,
    Voronoi,
}

/// A single-point modification of a configuration. Indices refer to the
/// configuration the change is applied to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Change {
    Birth(Point),
    Death(usize),
    Move(usize, Point),
}

/// Items that differ between the configurations before and after a change.
#[derive(Debug, Clone, Default)]
pub struct LocalDiff {
    pub removed_triangles: Vec<TriangleStats>,
    pub added_triangles: Vec<TriangleStats>,
    /// Cells that exist after the change and differ from before.
    pub changed_cells: Vec<CellStats>,
    /// Neighbour pairs touching a changed cell, before and after.
    pub pairs_before: Vec<[CellStats; 2]>,
    pub pairs_after: Vec<[CellStats; 2]>,
    /// Radius of the ball that certified the result.
    pub radius: f64,
}

#[derive(Debug, Clone)]
pub enum Diff {
    Local(LocalDiff),
    /// The change could not be localised; both tessellations in full.
    Global {
        before: Box<Tessellation>,
        after: Box<Tessellation>,
    },
}

/// Points and ids of `config` after applying `change`.
pub fn apply(config: &PointConfiguration, change: Change) -> (Vec<Point>, Vec<PointId>) {
    let mut points = config.points().to_vec();
    let mut ids = config.ids().to_vec();
    match change {
        Change::Birth(p) => {
            points.push(p);
            ids.push(config.next_id());
        }
        Change::Death(i) => {
            points.swap_remove(i);
            ids.swap_remove(i);
        }
        Change::Move(i, p) => points[i] = p,
    }
    (points, ids)
}

/// Initial ball radius for a configuration of `n` points.
pub fn default_radius(kind: Kind, n: usize) -> f64 {
    let spacing = 1.0 / (n.max(1) as f64).sqrt();
    let factor = match kind {
        Kind::Delaunay => 4.5,
        Kind::Voronoi => 7.5,
    };
    (factor * spacing).min(MAX_LOCAL_RADIUS)
}

/// Differences caused by `change`, starting from a ball of radius `radius`.
pub fn diff(config: &PointConfiguration, change: Change, kind: Kind, radius: f64) -> Result<Diff> {
    let mut r = radius.min(MAX_LOCAL_RADIUS);
    loop {
        if let Some(d) = local_diff(config, change, kind, r)? {
            return Ok(Diff::Local(d));
        }
        if r >= MAX_LOCAL_RADIUS {
            break;
        }
        r = (1.5 * r).min(MAX_LOCAL_RADIUS);
    }
    let before = Tessellation::build(config)?;
    let (points, ids) = apply(config, change);
    let after = Tessellation::from_points(&points, &ids)?;
    Ok(Diff::Global {
        before: Box::new(before),
        after: Box::new(after),
    })
}

/// Point set a patch triangulation stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    /// The configuration without the removed point.
    Reduced,
    Before,
    After,
}

struct Patch<'a> {
    config: &'a PointConfiguration,
    dt: PlanarDelaunay,
    center: Vec2,
    radius: f64,
    gone: Option<usize>,
    new: Option<(Vec2, u64)>,
}

impl Patch<'_> {
    fn trusted(&self, dt: &PlanarDelaunay, t: u32, state: State) -> bool {
        if dt.touches_super(t) {
            return false;
        }
        let c = dt.corners(t);
        let (cc, r) = circumcircle(c[0], c[1], c[2]);
        cc.dist(self.center) + r < self.radius || self.empty_circumdisc(dt, t, cc, r, state)
    }

    fn empty_circumdisc(&self, dt: &PlanarDelaunay, t: u32, cc: Vec2, r: f64, state: State) -> bool {
        if !(r < 0.4) {
            return false;
        }
        let corners = dt.vertices(t).map(|v| (dt.position(v), dt.rank(v)));
        // Grid positions come unwrapped around the wrapped center; an integer
        // shift brings them into the patch frame exactly.
        let q = Point::new(cc.x, cc.y);
        let shift = Vec2::new((cc.x - q.x()).round(), (cc.y - q.y()).round());
        let blocks = |p: (Vec2, u64)| {
            !corners.iter().any(|c| c.0 == p.0)
                && incircle(corners[0], corners[1], corners[2], p) != InCircle::Outside
        };
        let mut empty = true;
        self.config.for_each_within(q, r * (1.0 + 1e-9) + 1e-12, |i, pos| {
            if empty && (state == State::Before || Some(i) != self.gone) {
                empty = !blocks((pos + shift, self.config.id(i)));
            }
        });
        match (state, self.new) {
            (State::After, Some(p)) if empty => !blocks(p),
            _ => empty,
        }
    }
}

/// The removed point (if any) and inserted point (if any), unwrapped near the
/// ball center, with their perturbation ranks.
struct Endpoints {
    center: Point,
    gone: Option<(Vec2, u64, usize)>,
    new: Option<(Vec2, u64)>,
}

fn endpoints(config: &PointConfiguration, change: Change) -> Endpoints {
    match change {
        Change::Birth(p) => Endpoints {
            center: p,
            gone: None,
            new: Some((p.to_vec2(), config.next_id())),
        },
        Change::Death(i) => {
            let x = config.point(i);
            Endpoints {
                center: x,
                gone: Some((x.to_vec2(), config.id(i), i)),
                new: None,
            }
        }
        Change::Move(i, y) => {
            let x = config.point(i);
            let id = config.id(i);
            Endpoints {
                center: x,
                gone: Some((x.to_vec2(), id, i)),
                new: Some((x.to_vec2() + x.torus_delta(y), id)),
            }
        }
    }
}

fn fan(dt: &PlanarDelaunay, cavity: &Cavity, p: Vec2) -> Vec<TriangleStats> {
    cavity
        .boundary
        .iter()
        .map(|e| TriangleStats::from_corners([dt.position(e.a), dt.position(e.b), p]))
        .collect()
}

/// Returns `None` when the ball of radius `r` is too small to certify the change.
pub fn local_diff(
    config: &PointConfiguration,
    change: Change,
    kind: Kind,
    r: f64,
) -> Result<Option<LocalDiff>> {
    let ends = endpoints(config, change);
    if let Some((y, _)) = ends.new {
        let target = Point::new(y.x, y.y);
        let moving_in_place = matches!(ends.gone, Some((x, _, _)) if x == y);
        if !moving_in_place && config.contains_point(target) {
            return Err(Error::DuplicatePoint { x: target.x(), y: target.y() });
        }
    }
    let skip = ends.gone.map(|g| g.2);
    let input: Vec<(Vec2, u64)> = config
        .neighbours_within(ends.center, r)
        .into_iter()
        .filter(|(i, _)| Some(*i) != skip)
        .map(|(i, pos)| (pos, config.id(i)))
        .collect();
    let c = ends.center.to_vec2();
    let (mut lo, mut hi) = (c - Vec2::new(r, r), c + Vec2::new(r, r));
    if let Some((y, _)) = ends.new {
        lo = Vec2::new(lo.x.min(y.x), lo.y.min(y.y));
        hi = Vec2::new(hi.x.max(y.x), hi.y.max(y.y));
    }
    let (dt, _) = PlanarDelaunay::build_in(&input, lo, hi)?;
    let patch = Patch {
        config,
        dt,
        center: c,
        radius: r,
        gone: skip,
        new: ends.new,
    };
    let d0 = &patch.dt;
    let cav_gone = ends.gone.map(|(x, rank, _)| d0.cavity(x, rank)).transpose()?;
    let cav_new = ends.new.map(|(y, rank)| d0.cavity(y, rank)).transpose()?;

    let mut out = LocalDiff {
        radius: r,
        ..LocalDiff::default()
    };
    match kind {
        Kind::Delaunay => {
            for cav in cav_gone.iter().chain(cav_new.iter()) {
                let ring = cav.boundary.iter().map(|e| e.outside);
                for t in cav.triangles.iter().copied().chain(ring) {
                    if t == super::delaunay::NONE || !patch.trusted(d0, t, State::Reduced) {
                        return Ok(None);
                    }
                }
            }
            let empty = Vec::new();
            let in_gone = cav_gone.as_ref().map_or(&empty, |c| &c.triangles);
            let in_new = cav_new.as_ref().map_or(&empty, |c| &c.triangles);
            let stats = |t: u32| TriangleStats::from_corners(d0.corners(t));
            if let (Some(c), Some((x, _, _))) = (&cav_gone, ends.gone) {
                out.removed_triangles.extend(fan(d0, c, x));
            }
            out.removed_triangles
                .extend(in_new.iter().filter(|t| !in_gone.contains(t)).map(|&t| stats(t)));
            if let (Some(c), Some((y, _))) = (&cav_new, ends.new) {
                out.added_triangles.extend(fan(d0, c, y));
            }
            out.added_triangles
                .extend(in_gone.iter().filter(|t| !in_new.contains(t)).map(|&t| stats(t)));
        }
        Kind::Voronoi => {
            let mut changed: BTreeSet<u32> = BTreeSet::new();
            for cav in cav_gone.iter().chain(cav_new.iter()) {
                for &t in &cav.triangles {
                    changed.extend(d0.vertices(t));
                }
            }
            let mut before = d0.clone();
            let mut after = d0.clone();
            let mut changed_before = changed.clone();
            let mut changed_after = changed;
            if let (Some(c), Some((x, rank, _))) = (&cav_gone, ends.gone) {
                changed_before.insert(before.insert_with_cavity(x, rank, c));
            }
            if let (Some(c), Some((y, rank))) = (&cav_new, ends.new) {
                changed_after.insert(after.insert_with_cavity(y, rank, c));
            }
            // Unchanged cells are identical in both states.
            let mut shared: HashMap<u32, CellStats> = HashMap::new();
            let Some(pairs_before) = cell_pairs(&patch, &before, State::Before, &changed_before, &mut shared) else {
                return Ok(None);
            };
            let Some(pairs_after) = cell_pairs(&patch, &after, State::After, &changed_after, &mut shared) else {
                return Ok(None);
            };
            out.pairs_before = pairs_before.0;
            out.pairs_after = pairs_after.0;
            out.changed_cells = pairs_after.1;
        }
    }
    Ok(Some(out))
}

fn cell_stats(patch: &Patch, dt: &PlanarDelaunay, state: State, v: u32) -> Option<CellStats> {
    let o = dt.position(v);
    let star = dt.star(v);
    let mut poly = Vec::with_capacity(star.len());
    for t in star {
        if !patch.trusted(dt, t, state) {
            return None;
        }
        let c = dt.corners(t);
        poly.push(circumcircle(c[0] - o, c[1] - o, c[2] - o).0);
    }
    Some(CellStats::from_polygon(Vec2::default(), &poly))
}

type PairsAndCells = (Vec<[CellStats; 2]>, Vec<CellStats>);

/// Neighbour pairs with at least one endpoint in `changed`, and the stats of
/// the changed cells themselves.
fn cell_pairs(
    patch: &Patch,
    dt: &PlanarDelaunay,
    state: State,
    changed: &BTreeSet<u32>,
    shared: &mut HashMap<u32, CellStats>,
) -> Option<PairsAndCells> {
    let mut own: HashMap<u32, CellStats> = HashMap::new();
    let get = |v: u32,
                   own: &mut HashMap<u32, CellStats>,
                   shared: &mut HashMap<u32, CellStats>|
     -> Option<CellStats> {
        let map = if changed.contains(&v) { own } else { shared };
        if let Some(s) = map.get(&v) {
            return Some(*s);
        }
        let s = cell_stats(patch, dt, state, v)?;
        map.insert(v, s);
        Some(s)
    };
    let mut edges: BTreeSet<(u32, u32)> = BTreeSet::new();
    for &v in changed {
        if dt.is_super(v) {
            return None;
        }
        for t in dt.star(v) {
            for w in dt.vertices(t) {
                if w != v {
                    edges.insert((v.min(w), v.max(w)));
                }
            }
        }
    }
    let mut pairs = Vec::with_capacity(edges.len());
    for (a, b) in edges {
        if dt.is_super(a) || dt.is_super(b) {
            return None;
        }
        let sa = get(a, &mut own, shared)?;
        let sb = get(b, &mut own, shared)?;
        pairs.push([sa, sb]);
    }
    let mut cells = Vec::with_capacity(changed.len());
    for &v in changed {
        cells.push(get(v, &mut own, shared)?);
    }
    Some((pairs, cells))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_config(n: usize, rng: &mut ChaCha8Rng) -> PointConfiguration {
        PointConfiguration::from_points((0..n).map(|_| Point::new(rng.random(), rng.random())))
            .unwrap()
    }

    fn random_change(config: &PointConfiguration, rng: &mut ChaCha8Rng) -> Change {
        let p = Point::new(rng.random(), rng.random());
        let i = rng.random_range(0..config.len());
        match rng.random_range(0..3) {
            0 => Change::Birth(p),
            1 => Change::Death(i),
            _ => {
                let x = config.point(i);
                Change::Move(i, Point::new(x.x() + rng.random_range(-0.03..0.03), x.y() + rng.random_range(-0.03..0.03)))
            }
        }
    }

    fn perimeter_sum(t: &Tessellation) -> f64 {
        t.triangles().iter().map(|x| x.stats.perimeter).sum()
    }

    fn pair_stat(a: &CellStats, b: &CellStats) -> f64 {
        (a.volume - b.volume).abs() + a.h_max * b.h_min + b.h_max * a.h_min
    }

    fn local_perimeter(d: &Diff) -> f64 {
        match d {
            Diff::Local(d) => {
                d.added_triangles.iter().map(|t| t.perimeter).sum::<f64>()
                    - d.removed_triangles.iter().map(|t| t.perimeter).sum::<f64>()
            }
            Diff::Global { before, after } => perimeter_sum(after) - perimeter_sum(before),
        }
    }

    fn pair_sum(t: &Tessellation) -> f64 {
        t.voronoi_neighbours()
            .map(|(a, b)| pair_stat(&t.cells()[a].stats, &t.cells()[b].stats))
            .sum()
    }

    #[test]
    fn delaunay_diff_matches_global() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut locals = 0;
        for trial in 0..150 {
            let config = random_config(30 + trial % 120, &mut rng);
            let change = random_change(&config, &mut rng);
            let before = Tessellation::build(&config).unwrap();
            let (pts, ids) = apply(&config, change);
            let after = Tessellation::from_points(&pts, &ids).unwrap();
            let global = perimeter_sum(&after) - perimeter_sum(&before);
            let r = default_radius(Kind::Delaunay, config.len());
            let d = diff(&config, change, Kind::Delaunay, r).unwrap();
            let local = local_perimeter(&d);
            assert!((local - global).abs() < 1e-9, "trial {trial}: {local} vs {global}");
            if let Diff::Local(d) = d {
                locals += 1;
                let net = d.added_triangles.len() as i64 - d.removed_triangles.len() as i64;
                assert_eq!(net, 2 * (after.points().len() as i64 - before.points().len() as i64));
            }
        }
        assert!(locals > 120, "only {locals} local results");
    }

    #[test]
    fn voronoi_diff_matches_global() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let mut locals = 0;
        for trial in 0..100 {
            let config = random_config(200 + 2 * trial, &mut rng);
            let change = random_change(&config, &mut rng);
            let before = Tessellation::build(&config).unwrap();
            let (pts, ids) = apply(&config, change);
            let after = Tessellation::from_points(&pts, &ids).unwrap();
            let global = pair_sum(&after) - pair_sum(&before);
            let r = default_radius(Kind::Voronoi, config.len());
            let Diff::Local(d) = diff(&config, change, Kind::Voronoi, r).unwrap() else {
                continue;
            };
            locals += 1;
            let local: f64 = d.pairs_after.iter().map(|p| pair_stat(&p[0], &p[1])).sum::<f64>()
                - d.pairs_before.iter().map(|p| pair_stat(&p[0], &p[1])).sum::<f64>();
            assert!((local - global).abs() < 1e-9, "trial {trial}: {local} vs {global}");
            // Every changed cell appears in the global tessellation after the change.
            for c in &d.changed_cells {
                assert!(after
                    .cells()
                    .iter()
                    .any(|g| (g.stats.volume - c.volume).abs() < 1e-12 && (g.stats.h_max - c.h_max).abs() < 1e-12));
            }
        }
        assert!(locals > 70, "only {locals} local results");
    }

    #[test]
    fn tiny_radius_falls_back_or_grows() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let config = random_config(6, &mut rng);
        let d = diff(&config, Change::Birth(Point::new(0.5, 0.5)), Kind::Delaunay, 0.01).unwrap();
        let before = Tessellation::build(&config).unwrap();
        let (pts, ids) = apply(&config, Change::Birth(Point::new(0.5, 0.5)));
        let after = Tessellation::from_points(&pts, &ids).unwrap();
        let global = perimeter_sum(&after) - perimeter_sum(&before);
        let local = local_perimeter(&d);
        assert!((local - global).abs() < 1e-9);
    }

    #[test]
    fn birth_on_existing_point_is_duplicate() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let config = random_config(50, &mut rng);
        let p = config.point(7);
        assert!(matches!(
            diff(&config, Change::Birth(p), Kind::Delaunay, 0.2),
            Err(Error::DuplicatePoint { .. })
        ));
    }

    #[test]
    fn far_birth_touches_only_its_neighbourhood() {
        // Dense lattice; the new cell and its first ring are the only changes.
        let k = 20;
        let pts: Vec<Point> = (0..k * k)
            .map(|i| Point::new((i % k) as f64 / k as f64 + 0.013 * ((i * 7) % 5) as f64 / 5.0, (i / k) as f64 / k as f64 + 0.011 * ((i * 3) % 7) as f64 / 7.0))
            .collect();
        let config = PointConfiguration::from_points(pts).unwrap();
        let d = diff(&config, Change::Birth(Point::new(0.5123, 0.4877)), Kind::Voronoi, 0.2).unwrap();
        let Diff::Local(d) = d else { panic!("expected local") };
        assert!(d.changed_cells.len() <= 12);
        assert!(d.changed_cells.len() >= 4);
    }
}
