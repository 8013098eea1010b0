//! Joining medial segments through junction regions.
//!
//! Segment endpoints that lie close together on ink form proximity sets.
//! Inside a set, pairs with matching direction are fused by a straight
//! join. Every other member is extended along its outward tangent until it
//! meets an axis, a junction already formed, the ray of another member or,
//! failing those, the nearest member endpoint. The polylines are then split
//! at crossings and meeting points and assembled into a graph whose
//! degree-2 nodes are contracted away.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::{line_pixels, point_segment_distance, segment_intersection, undirected_diff, wrap_angle, Point};
use crate::medial::MedialSegment;
use crate::raster::BinaryImage;
use crate::topology::{anchored_reduction, prune_to_unit_width};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtrapolationConfig {
    pub proximity_radius: f64,
    /// Largest undirected direction difference of a collinear pair, radians.
    pub collinear_tol: f64,
}

impl Default for ExtrapolationConfig {
    fn default() -> Self {
        Self {
            proximity_radius: 12.0,
            collinear_tol: 0.45,
        }
    }
}

impl ExtrapolationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.proximity_radius > 0.0 && self.collinear_tol > 0.0 {
            Ok(())
        } else {
            Err(Error::Config("extrapolation parameters must be positive".into()))
        }
    }

    fn reach(&self) -> f64 {
        2.0 * self.proximity_radius
    }
}

/// Origin of a skeleton point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Medial,
    Extrapolated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum End {
    Start,
    End,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndpointRef {
    pub segment: usize,
    pub which: End,
    pub position: Point,
    /// Outward tangent, radians.
    pub direction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProximitySet {
    pub members: Vec<EndpointRef>,
}

/// Outward direction at one end of a polyline, from the last
/// `min(5, len - 1)` steps.
fn outward(points: &[Point], which: End) -> f64 {
    let k = 5.min(points.len().saturating_sub(1));
    let (tip, back) = match which {
        End::Start => (points[0], points[k]),
        End::End => (points[points.len() - 1], points[points.len() - 1 - k]),
    };
    let (dx, dy) = tip.sub(back);
    dy.atan2(dx)
}

fn arc_length(points: &[Point]) -> f64 {
    points.windows(2).map(|w| w[0].distance(w[1])).sum()
}

/// Both ends of every segment.
pub fn endpoints(segments: &[MedialSegment]) -> Vec<EndpointRef> {
    segments
        .iter()
        .enumerate()
        .flat_map(|(i, s)| {
            [End::Start, End::End].map(|which| EndpointRef {
                segment: i,
                which,
                position: if which == End::Start { s.start() } else { s.end() },
                direction: outward(&s.points, which),
            })
        })
        .collect()
}

/// True when the digital line between the two points is all ink.
pub fn line_on_ink(img: &BinaryImage, a: Point, b: Point) -> bool {
    line_pixels(a.to_pixel(), b.to_pixel()).into_iter().all(|p| img.get(p))
}

/// Connected components, of size two or more, of the relation "closer than
/// `radius` and joined by a line on ink". The two ends of one segment are
/// related only when the segment is long enough to close on itself.
pub fn build_proximity_sets(segments: &[MedialSegment], img: &BinaryImage, radius: f64) -> Vec<ProximitySet> {
    let ends = endpoints(segments);
    let mut parent: Vec<usize> = (0..ends.len()).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..ends.len() {
        for j in i + 1..ends.len() {
            let (a, b) = (&ends[i], &ends[j]);
            if a.segment == b.segment && arc_length(&segments[a.segment].points) < 2.0 * radius {
                continue;
            }
            if a.position.distance(b.position) < radius && line_on_ink(img, a.position, b.position) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<EndpointRef>> = BTreeMap::new();
    for i in 0..ends.len() {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(ends[i]);
    }
    groups
        .into_values()
        .filter(|m| m.len() >= 2)
        .map(|members| ProximitySet { members })
        .collect()
}

/// A polyline with per-point provenance. Closed when the last point equals
/// the first.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    pub points: Vec<Point>,
    pub provenance: Vec<Provenance>,
}

impl Polyline {
    fn from_segment(s: &MedialSegment) -> Self {
        Self {
            points: s.points.clone(),
            provenance: vec![Provenance::Medial; s.points.len()],
        }
    }

    fn reverse(&mut self) {
        self.points.reverse();
        self.provenance.reverse();
    }

    fn tip(&self, which: End) -> Point {
        match which {
            End::Start => self.points[0],
            End::End => self.points[self.points.len() - 1],
        }
    }

    fn extend(&mut self, which: End, p: Point) {
        if self.tip(which) == p {
            return;
        }
        match which {
            End::Start => {
                self.points.insert(0, p);
                self.provenance.insert(0, Provenance::Extrapolated);
            }
            End::End => {
                self.points.push(p);
                self.provenance.push(Provenance::Extrapolated);
            }
        }
    }
}

/// Counters describing how the sets were resolved.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ExtrapolationStats {
    pub fusions: usize,
    pub axis_hits: usize,
    pub junction_hits: usize,
    pub ray_meets: usize,
    pub endpoint_joins: usize,
    pub centroid_fallbacks: usize,
}

/// Working state while the proximity sets are resolved one by one.
pub struct Extrapolator<'a> {
    img: &'a BinaryImage,
    cfg: ExtrapolationConfig,
    polys: Vec<Option<Polyline>>,
    /// Current polyline end occupied by each original segment end.
    owner: HashMap<(usize, End), (usize, End)>,
    junctions: Vec<Point>,
    pub stats: ExtrapolationStats,
}

impl<'a> Extrapolator<'a> {
    pub fn new(segments: &[MedialSegment], img: &'a BinaryImage, cfg: ExtrapolationConfig) -> Self {
        let owner = (0..segments.len())
            .flat_map(|i| [End::Start, End::End].map(|w| ((i, w), (i, w))))
            .collect();
        Self {
            img,
            cfg,
            polys: segments.iter().map(|s| Some(Polyline::from_segment(s))).collect(),
            owner,
            junctions: Vec::new(),
            stats: ExtrapolationStats::default(),
        }
    }

    fn poly(&self, id: usize) -> &Polyline {
        self.polys[id].as_ref().expect("live polyline")
    }

    fn poly_mut(&mut self, id: usize) -> &mut Polyline {
        self.polys[id].as_mut().expect("live polyline")
    }

    fn remap(&mut self, f: impl Fn((usize, End)) -> (usize, End)) {
        for v in self.owner.values_mut() {
            *v = f(*v);
        }
    }

    /// Straight join of two facing ends into one polyline.
    fn fuse(&mut self, a: (usize, End), b: (usize, End)) {
        self.stats.fusions += 1;
        if a.0 == b.0 {
            let id = a.0;
            if a.1 == End::Start {
                self.poly_mut(id).reverse();
            }
            let first = self.poly(id).points[0];
            self.poly_mut(id).extend(End::End, first);
            return;
        }
        let (pa, pb) = (a.0, b.0);
        if a.1 == End::Start {
            self.poly_mut(pa).reverse();
            self.remap(|(p, e)| if p == pa { (p, flip(e)) } else { (p, e) });
        }
        if b.1 == End::End {
            self.poly_mut(pb).reverse();
            self.remap(|(p, e)| if p == pb { (p, flip(e)) } else { (p, e) });
        }
        let tail = self.polys[pb].take().expect("live polyline");
        let head = self.poly_mut(pa);
        for (p, prov) in tail.points.into_iter().zip(tail.provenance) {
            if head.points.last() != Some(&p) {
                head.points.push(p);
                head.provenance.push(prov);
            }
        }
        self.remap(|(p, e)| if p == pb { (pa, e) } else { (p, e) });
    }

    /// Polyline end still held by `m`, or `None` once it has been fused away.
    fn current(&self, m: &EndpointRef) -> Option<(usize, End)> {
        self.owner.get(&(m.segment, m.which)).copied()
    }

    fn retire(&mut self, m: &EndpointRef) {
        self.owner.remove(&(m.segment, m.which));
    }

    /// Nearest crossing of the ray with a polyline other than `own`.
    fn axis_hit(&self, from: Point, dir: f64, own: usize) -> Option<Point> {
        let to = from.along(dir, self.cfg.reach());
        let mut best: Option<(f64, Point)> = None;
        for (id, poly) in self.polys.iter().enumerate() {
            let Some(poly) = poly else { continue };
            if id == own {
                continue;
            }
            for w in poly.points.windows(2) {
                if let Some((t, _)) = segment_intersection(from, to, w[0], w[1]) {
                    if t > 1e-9 && best.is_none_or(|(bt, _)| t < bt) {
                        best = Some((t, from.along(dir, t * self.cfg.reach())));
                    }
                }
            }
        }
        best.map(|(_, p)| p).filter(|&p| line_on_ink(self.img, from, p))
    }

    fn junction_hit(&self, from: Point, dir: f64) -> Option<Point> {
        let to = from.along(dir, self.cfg.reach());
        self.junctions
            .iter()
            .copied()
            .filter(|&j| ahead(from, dir, j) && point_segment_distance(j, from, to) <= 1.5)
            .filter(|&j| line_on_ink(self.img, from, j))
            .min_by(|a, b| from.distance(*a).total_cmp(&from.distance(*b)))
    }

    fn ray_meet(&self, a: Point, da: f64, b: Point, db: f64) -> Option<Point> {
        let r = self.cfg.reach();
        let (t, _) = segment_intersection(a, a.along(da, r), b, b.along(db, r))?;
        let x = a.along(da, t * r);
        (line_on_ink(self.img, a, x) && line_on_ink(self.img, b, x)).then_some(x)
    }

    /// Two free ends may be joined unless they close a short polyline on itself.
    fn may_join(&self, a: (usize, End), b: (usize, End)) -> bool {
        a.0 != b.0 || arc_length(&self.poly(a.0).points) >= self.cfg.reach()
    }

    fn attach(&mut self, end: (usize, End), p: Point) {
        self.poly_mut(end.0).extend(end.1, p);
    }

    /// Resolves one proximity set.
    pub fn extrapolate_set(&mut self, set: &ProximitySet) {
        let members = &set.members;
        let mut done = vec![false; members.len()];

        // Collinear facing pairs, tightest angle first.
        let mut pairs = Vec::new();
        for i in 0..members.len() {
            for j in i + 1..members.len() {
                let (a, b) = (&members[i], &members[j]);
                let diff = undirected_diff(a.direction, b.direction);
                let (dx, dy) = b.position.sub(a.position);
                let facing = dx * a.direction.cos() + dy * a.direction.sin() > 0.0
                    && -dx * b.direction.cos() - dy * b.direction.sin() > 0.0;
                let opposed = wrap_angle(a.direction - b.direction).abs() > std::f64::consts::FRAC_PI_2;
                if diff < self.cfg.collinear_tol && facing && opposed && line_on_ink(self.img, a.position, b.position) {
                    pairs.push((diff, a.position.distance(b.position), i, j));
                }
            }
        }
        pairs.sort_by(|x, y| {
            x.0.total_cmp(&y.0)
                .then(x.1.total_cmp(&y.1))
                .then((x.2, x.3).cmp(&(y.2, y.3)))
        });
        for (_, _, i, j) in pairs {
            if done[i] || done[j] {
                continue;
            }
            let (Some(a), Some(b)) = (self.current(&members[i]), self.current(&members[j])) else {
                continue;
            };
            self.fuse(a, b);
            self.retire(&members[i]);
            self.retire(&members[j]);
            done[i] = true;
            done[j] = true;
        }

        for i in 0..members.len() {
            if done[i] {
                continue;
            }
            let m = members[i];
            let Some(end) = self.current(&m) else { continue };
            let joinable = |k: usize| k != i && self.current(&members[k]).is_some_and(|e| self.may_join(end, e));
            let free = |k: usize| !done[k] && joinable(k);
            let from = self.poly(end.0).tip(end.1);
            if let Some(h) = self.axis_hit(from, m.direction, end.0) {
                self.attach(end, h);
                self.junctions.push(h);
                self.stats.axis_hits += 1;
            } else if let Some(j) = self.junction_hit(from, m.direction) {
                self.attach(end, j);
                self.stats.junction_hits += 1;
            } else if let Some((k, x)) = (0..members.len()).filter(|&k| free(k)).find_map(|k| {
                self.ray_meet(from, m.direction, members[k].position, members[k].direction)
                    .map(|x| (k, x))
            }) {
                let other = self.current(&members[k]).expect("free member");
                self.attach(end, x);
                self.attach(other, x);
                self.junctions.push(x);
                done[k] = true;
                self.stats.ray_meets += 1;
            } else if let Some((k, target)) = (0..members.len())
                .filter(|&k| joinable(k))
                .map(|k| {
                    let e = self.current(&members[k]).expect("live member");
                    (k, self.poly(e.0).tip(e.1))
                })
                .filter(|&(_, t)| ahead(from, m.direction, t) && line_on_ink(self.img, from, t))
                .min_by(|a, b| a.1.distance(from).total_cmp(&b.1.distance(from)).then(a.0.cmp(&b.0)))
            {
                self.attach(end, target);
                done[k] = true;
                self.stats.endpoint_joins += 1;
            } else if (0..members.len()).any(joinable) {
                let n = members.len() as f64;
                let c = Point::new(
                    members.iter().map(|m| m.position.x).sum::<f64>() / n,
                    members.iter().map(|m| m.position.y).sum::<f64>() / n,
                );
                if ahead(from, m.direction, c) {
                    self.attach(end, c);
                    self.junctions.push(c);
                    self.stats.centroid_fallbacks += 1;
                }
            }
            done[i] = true;
        }
    }

    pub fn finish(self) -> (Vec<Polyline>, ExtrapolationStats) {
        (self.polys.into_iter().flatten().collect(), self.stats)
    }
}

/// Whether `p` lies strictly in front of a ray leaving `from` along `dir`.
fn ahead(from: Point, dir: f64, p: Point) -> bool {
    let (dx, dy) = p.sub(from);
    dx * dir.cos() + dy * dir.sin() > 0.0
}

fn flip(e: End) -> End {
    match e {
        End::Start => End::End,
        End::End => End::Start,
    }
}

/// Builds the proximity sets and resolves them, largest first.
pub fn extrapolate(
    segments: &[MedialSegment],
    img: &BinaryImage,
    cfg: ExtrapolationConfig,
) -> (Vec<Polyline>, ExtrapolationStats) {
    let mut sets = build_proximity_sets(segments, img, cfg.proximity_radius);
    sets.sort_by_key(|s| std::cmp::Reverse(s.members.len()));
    let mut ex = Extrapolator::new(segments, img, cfg);
    for set in &sets {
        ex.extrapolate_set(set);
    }
    ex.finish()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkeletonNode {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub degree: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkeletonEdge {
    pub from: usize,
    pub to: usize,
    pub points: Vec<Point>,
    pub provenance: Vec<Provenance>,
}

/// Skeleton as nodes and polyline edges (the vector strokes).
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SkeletonGraph {
    pub nodes: Vec<SkeletonNode>,
    pub edges: Vec<SkeletonEdge>,
}

impl SkeletonGraph {
    pub fn leaves(&self) -> impl Iterator<Item = &SkeletonNode> {
        self.nodes.iter().filter(|n| n.degree == 1)
    }

    pub fn junctions(&self) -> impl Iterator<Item = &SkeletonNode> {
        self.nodes.iter().filter(|n| n.degree >= 3)
    }

    /// Shifts every coordinate by `(dx, dy)`.
    pub fn translate(&mut self, dx: f64, dy: f64) {
        for n in &mut self.nodes {
            n.x += dx;
            n.y += dy;
        }
        for e in &mut self.edges {
            for p in &mut e.points {
                p.x += dx;
                p.y += dy;
            }
        }
    }
}

const SNAP: f64 = 1e-6;

/// Splits polylines wherever they cross or touch one another.
fn planarize(polys: &[Polyline]) -> Vec<Polyline> {
    // (segment index, parameter, point) insertions per polyline.
    let mut cuts: Vec<Vec<(usize, f64, Point)>> = vec![Vec::new(); polys.len()];
    for i in 0..polys.len() {
        for j in i + 1..polys.len() {
            let (a, b) = (&polys[i].points, &polys[j].points);
            for si in 0..a.len().saturating_sub(1) {
                for sj in 0..b.len().saturating_sub(1) {
                    let Some((t, u)) = segment_intersection(a[si], a[si + 1], b[sj], b[sj + 1]) else {
                        continue;
                    };
                    let raw = Point::new(
                        a[si].x + t * (a[si + 1].x - a[si].x),
                        a[si].y + t * (a[si + 1].y - a[si].y),
                    );
                    let x = [a[si], a[si + 1], b[sj], b[sj + 1]]
                        .into_iter()
                        .find(|v| v.distance(raw) < SNAP)
                        .unwrap_or(raw);
                    cuts[i].push((si, t.clamp(0.0, 1.0), x));
                    cuts[j].push((sj, u.clamp(0.0, 1.0), x));
                }
            }
        }
    }
    let mut out = Vec::new();
    for (poly, mut cut) in polys.iter().zip(cuts) {
        cut.sort_by(|x, y| x.0.cmp(&y.0).then(x.1.total_cmp(&y.1)));
        let mut pts: Vec<(Point, Provenance, bool)> = Vec::new();
        let push =
            |p: Point, prov: Provenance, split: bool, pts: &mut Vec<(Point, Provenance, bool)>| match pts.last_mut() {
                Some(last) if last.0.distance(p) < SNAP => last.2 |= split,
                _ => pts.push((p, prov, split)),
            };
        let mut k = 0;
        for (s, (&p, &prov)) in poly.points.iter().zip(&poly.provenance).enumerate() {
            let at_vertex: Vec<usize> = (k..cut.len()).take_while(|&c| cut[c].0 < s).collect();
            for c in at_vertex {
                push(cut[c].2, Provenance::Extrapolated, true, &mut pts);
                k = c + 1;
            }
            push(p, prov, false, &mut pts);
        }
        for c in &cut[k..] {
            push(c.2, Provenance::Extrapolated, true, &mut pts);
        }
        // Mark existing vertices that coincide with cut points.
        for entry in pts.iter_mut() {
            if cut.iter().any(|c| c.2.distance(entry.0) < SNAP) {
                entry.2 = true;
            }
        }
        let mut piece = Polyline {
            points: Vec::new(),
            provenance: Vec::new(),
        };
        for (idx, &(p, prov, split)) in pts.iter().enumerate() {
            piece.points.push(p);
            piece.provenance.push(prov);
            if split && idx > 0 && idx + 1 < pts.len() {
                out.push(std::mem::replace(
                    &mut piece,
                    Polyline {
                        points: vec![p],
                        provenance: vec![prov],
                    },
                ));
            }
        }
        out.push(piece);
    }
    out.into_iter()
        .filter(|p| p.points.len() >= 2 && arc_length(&p.points) > SNAP)
        .collect()
}

fn node_key(p: Point) -> (i64, i64) {
    ((p.x / SNAP).round() as i64, (p.y / SNAP).round() as i64)
}

/// Assembles polylines into a graph: nodes at polyline ends, meeting points
/// and crossings; degree-2 nodes are contracted so each edge is one stroke.
pub fn assemble_skeleton(polylines: &[Polyline]) -> SkeletonGraph {
    let pieces = planarize(polylines);
    let mut ids: HashMap<(i64, i64), usize> = HashMap::new();
    let mut positions: Vec<Point> = Vec::new();
    let mut node_of = |p: Point, positions: &mut Vec<Point>| {
        *ids.entry(node_key(p)).or_insert_with(|| {
            positions.push(p);
            positions.len() - 1
        })
    };
    let mut edges: Vec<Option<(usize, usize, Polyline)>> = pieces
        .into_iter()
        .map(|mut pl| {
            let a = node_of(pl.points[0], &mut positions);
            let b = node_of(*pl.points.last().expect("nonempty"), &mut positions);
            pl.points[0] = positions[a];
            let last = pl.points.len() - 1;
            pl.points[last] = positions[b];
            Some((a, b, pl))
        })
        .collect();

    // Contract degree-2 nodes that join two distinct edges.
    loop {
        let mut incident: Vec<Vec<usize>> = vec![Vec::new(); positions.len()];
        for (e, edge) in edges.iter().enumerate() {
            if let Some((a, b, _)) = edge {
                incident[*a].push(e);
                incident[*b].push(e);
            }
        }
        let Some((n, e1, e2)) = incident
            .iter()
            .enumerate()
            .find(|(_, inc)| inc.len() == 2 && inc[0] != inc[1])
            .map(|(n, inc)| (n, inc[0], inc[1]))
        else {
            break;
        };
        let (a1, b1, mut p1) = edges[e1].take().expect("live edge");
        let (a2, b2, mut p2) = edges[e2].take().expect("live edge");
        let from = if b1 == n {
            a1
        } else {
            p1.reverse();
            b1
        };
        let to = if a2 == n {
            b2
        } else {
            p2.reverse();
            a2
        };
        p1.points.extend(p2.points.into_iter().skip(1));
        p1.provenance.extend(p2.provenance.into_iter().skip(1));
        edges[e1] = Some((from, to, p1));
    }

    let live: Vec<(usize, usize, Polyline)> = edges.into_iter().flatten().collect();
    let mut degree = vec![0usize; positions.len()];
    for (a, b, _) in &live {
        degree[*a] += 1;
        degree[*b] += 1;
    }
    let mut renumber = vec![usize::MAX; positions.len()];
    let mut nodes = Vec::new();
    for (a, b, _) in &live {
        for n in [*a, *b] {
            if renumber[n] == usize::MAX {
                renumber[n] = nodes.len();
                nodes.push(SkeletonNode {
                    id: nodes.len(),
                    x: positions[n].x,
                    y: positions[n].y,
                    degree: degree[n],
                });
            }
        }
    }
    let edges = live
        .into_iter()
        .map(|(a, b, pl)| SkeletonEdge {
            from: renumber[a],
            to: renumber[b],
            points: pl.points,
            provenance: pl.provenance,
        })
        .collect();
    SkeletonGraph { nodes, edges }
}

/// Draws every edge with integer line stepping, clipped to `fg`.
pub fn draw_edges(g: &SkeletonGraph, fg: &BinaryImage) -> BinaryImage {
    let (w, h) = fg.dims();
    let mut out = BinaryImage::new(w, h);
    for e in &g.edges {
        for pair in e.points.windows(2) {
            for p in line_pixels(pair[0].to_pixel(), pair[1].to_pixel()) {
                if fg.get(p) {
                    out.set(p, true);
                }
            }
        }
    }
    out
}

/// Rasterizes the graph inside the foreground `fg` as a one-pixel-wide
/// skeleton. Drawn edge pixels anchor a homotopic reduction of `fg`, which
/// bridges any gaps left by clipping and keeps the component and hole
/// counts of `fg`; doubled pixels are then pruned.
pub fn rasterize_skeleton(g: &SkeletonGraph, fg: &BinaryImage) -> BinaryImage {
    let anchors = draw_edges(g, fg);
    prune_to_unit_width(&anchored_reduction(fg, &anchors))
}
