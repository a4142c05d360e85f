//! Uniform lattices over planar domains: node classification, neighbour
//! links and boundary-crossing fractions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Point;

/// Relative tolerance (in units of `h`) for deciding that a node sits on a
/// boundary curve or a cut.
const ON_BOUNDARY: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum Shape {
    Disk { center: Point, radius: f64 },
    Rectangle { min: Point, max: Point },
    /// Upper half of the disk of the given radius centred at the origin.
    HalfDisk { radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryKind {
    Dirichlet,
    Neumann,
}

/// A straight segment carrying a boundary condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cut {
    pub start: Point,
    pub end: Point,
    pub kind: BoundaryKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub shape: Shape,
    #[serde(default)]
    pub cuts: Vec<Cut>,
}

impl DomainSpec {
    pub fn disk(center: Point, radius: f64) -> Self {
        DomainSpec {
            shape: Shape::Disk { center, radius },
            cuts: Vec::new(),
        }
    }

    pub fn unit_disk() -> Self {
        Self::disk(Point::ORIGIN, 1.0)
    }

    pub fn rectangle(min: Point, max: Point) -> Self {
        DomainSpec {
            shape: Shape::Rectangle { min, max },
            cuts: Vec::new(),
        }
    }

    pub fn unit_square() -> Self {
        Self::rectangle(Point::ORIGIN, Point::new(1.0, 1.0))
    }

    pub fn half_disk(radius: f64) -> Self {
        DomainSpec {
            shape: Shape::HalfDisk { radius },
            cuts: Vec::new(),
        }
    }

    /// Half-disk with the slit `{x₁ ≥ 1}` of the axis held at zero and the
    /// rest of the axis left free.
    pub fn slit_half_disk(radius: f64) -> Self {
        DomainSpec {
            shape: Shape::HalfDisk { radius },
            cuts: vec![
                Cut {
                    start: Point::new(1.0, 0.0),
                    end: Point::new(radius, 0.0),
                    kind: BoundaryKind::Dirichlet,
                },
                Cut {
                    start: Point::new(-radius, 0.0),
                    end: Point::new(1.0, 0.0),
                    kind: BoundaryKind::Neumann,
                },
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::DegenerateDomain(m.to_string()));
        match self.shape {
            Shape::Disk { center, radius } => {
                if !center.is_finite() || !(radius.is_finite() && radius > 0.0) {
                    return bad("disk needs a finite centre and positive radius");
                }
            }
            Shape::Rectangle { min, max } => {
                if !min.is_finite() || !max.is_finite() || min.x1 >= max.x1 || min.x2 >= max.x2 {
                    return bad("rectangle corners must satisfy min < max componentwise");
                }
            }
            Shape::HalfDisk { radius } => {
                if !(radius.is_finite() && radius > 0.0) {
                    return bad("half-disk needs a positive radius");
                }
            }
        }
        for cut in &self.cuts {
            if !cut.start.is_finite() || !cut.end.is_finite() || cut.start == cut.end {
                return bad("cut segments must have distinct finite endpoints");
            }
            let slack = 1e-12 * (1.0 + self.extent());
            for p in [cut.start, cut.end] {
                if self.signed_distance(p) > slack {
                    return bad("cut leaves the closure of the domain");
                }
            }
        }
        let neumann: Vec<&Cut> = self.cuts.iter().filter(|c| c.kind == BoundaryKind::Neumann).collect();
        for n in &neumann {
            let on_axis = matches!(self.shape, Shape::HalfDisk { .. })
                && n.start.x2 == 0.0
                && n.end.x2 == 0.0;
            if !on_axis {
                return Err(Error::InconsistentTags(
                    "free (Neumann) segments are supported on the flat side of a half-disk only".into(),
                ));
            }
            for d in self.cuts.iter().filter(|c| c.kind == BoundaryKind::Dirichlet) {
                if d.start.x2 == 0.0 && d.end.x2 == 0.0 {
                    let (a0, a1) = ordered(n.start.x1, n.end.x1);
                    let (b0, b1) = ordered(d.start.x1, d.end.x1);
                    if a0.max(b0) < a1.min(b1) {
                        return Err(Error::InconsistentTags(
                            "Dirichlet and Neumann segments overlap".into(),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    fn extent(&self) -> f64 {
        match self.shape {
            Shape::Disk { center, radius } => center.norm() + radius,
            Shape::Rectangle { min, max } => min.norm().max(max.norm()),
            Shape::HalfDisk { radius } => radius,
        }
    }

    /// Negative inside, zero on the boundary, positive outside; exact
    /// Euclidean distance for disks, a valid sign for the other shapes.
    pub fn signed_distance(&self, p: Point) -> f64 {
        match self.shape {
            Shape::Disk { center, radius } => p.distance(center) - radius,
            Shape::Rectangle { min, max } => {
                let dx = (min.x1 - p.x1).max(p.x1 - max.x1);
                let dy = (min.x2 - p.x2).max(p.x2 - max.x2);
                dx.max(dy)
            }
            Shape::HalfDisk { radius } => (p.norm() - radius).max(-p.x2),
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        self.signed_distance(p) < 0.0
    }

    /// Smallest feature size used for the resolution check.
    fn feature_size(&self) -> Option<f64> {
        match self.shape {
            Shape::Disk { radius, .. } => Some(2.0 * radius),
            Shape::HalfDisk { radius } => Some(radius),
            Shape::Rectangle { .. } => None,
        }
    }

    /// Parameter `s ∈ (0, 1]` at which the segment `x → y` first meets the
    /// boundary, for `x` inside; `None` if `y` is inside and nothing is hit.
    fn boundary_crossing(&self, x: Point, y: Point) -> Option<f64> {
        let d = y - x;
        let mut best: Option<f64> = None;
        let mut take = |s: f64| {
            if s > 0.0 && s <= 1.0 + 1e-12 {
                let s = s.min(1.0);
                best = Some(best.map_or(s, |b: f64| b.min(s)));
            }
        };
        match self.shape {
            Shape::Disk { center, radius } => {
                if let Some(s) = circle_exit(x - center, d, radius) {
                    take(s);
                }
            }
            Shape::Rectangle { min, max } => {
                for (p, v, lo, hi) in [(x.x1, d.x1, min.x1, max.x1), (x.x2, d.x2, min.x2, max.x2)] {
                    if v > 0.0 {
                        take((hi - p) / v);
                    } else if v < 0.0 {
                        take((lo - p) / v);
                    }
                }
            }
            Shape::HalfDisk { radius } => {
                if let Some(s) = circle_exit(x, d, radius) {
                    take(s);
                }
                if d.x2 < 0.0 {
                    take(-x.x2 / d.x2);
                }
            }
        }
        for cut in self.cuts.iter().filter(|c| c.kind == BoundaryKind::Dirichlet) {
            if let Some(s) = segment_hit(x, y, cut.start, cut.end) {
                take(s);
            }
        }
        best
    }

    /// Whether `p` lies on the curved part of a half-disk boundary, which
    /// always carries the Dirichlet condition.
    fn on_arc(&self, p: Point, tol: f64) -> bool {
        match self.shape {
            Shape::HalfDisk { radius } => (p.norm() - radius).abs() <= tol,
            _ => false,
        }
    }

    fn on_cut(&self, p: Point, tol: f64, kind: BoundaryKind) -> bool {
        self.cuts
            .iter()
            .filter(|c| c.kind == kind)
            .any(|c| point_segment_distance(p, c.start, c.end) <= tol)
    }
}

fn ordered(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Exit parameter of `x + s d` from the circle `|·| = r` (x inside).
fn circle_exit(x: Point, d: Point, r: f64) -> Option<f64> {
    let a = d.norm_sq();
    let b = x.dot(d);
    let c = x.norm_sq() - r * r;
    let disc = b * b - a * c;
    if a == 0.0 || disc < 0.0 {
        return None;
    }
    // Stable positive root of a s² + 2 b s + c = 0 with c ≤ 0.
    let root = disc.sqrt();
    let s = if b > 0.0 { c / (-b - root) } else { (root - b) / a };
    Some(s)
}

fn segment_hit(x: Point, y: Point, p: Point, q: Point) -> Option<f64> {
    let d = y - x;
    let e = q - p;
    let denom = d.cross(e);
    if denom == 0.0 {
        return None;
    }
    let w = p - x;
    let s = w.cross(e) / denom;
    let t = w.cross(d) / denom;
    if (-1e-12..=1.0 + 1e-12).contains(&t) && s > 1e-12 {
        Some(s)
    } else {
        None
    }
}

fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let e = b - a;
    let t = ((p - a).dot(e) / e.norm_sq()).clamp(0.0, 1.0);
    p.distance(a + e.scale(t))
}

/// How edges leaving the domain are closed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryTreatment {
    /// The first lattice node outside carries the boundary value.
    Staircase,
    /// The boundary value sits at the true crossing point of the edge and
    /// the coupling is scaled by the inverse crossing fraction.
    #[default]
    Embedded,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridOptions {
    /// A lattice node sits at `anchor + h·(i, j)`.
    pub anchor: Point,
    pub treatment: BoundaryTreatment,
}

impl Default for GridOptions {
    fn default() -> Self {
        GridOptions {
            anchor: Point::ORIGIN,
            treatment: BoundaryTreatment::Embedded,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeStatus {
    Unknown(usize),
    Dirichlet,
    Outside,
}

/// Where one of the four lattice edges of an unknown node ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LinkTarget {
    Node(usize),
    /// Boundary value imposed at `point`, a fraction `fraction ∈ (0, 1]` of
    /// the edge away from the node.
    Wall { point: Point, fraction: f64 },
    /// No coupling (free boundary side).
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub target: LinkTarget,
    /// Energy weight of the edge: 1 in the bulk, ½ along a free boundary.
    pub weight: f64,
}

/// Lattice directions in the order east, north, west, south.
pub const DIRECTIONS: [(i64, i64); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];

#[derive(Debug, Clone)]
pub struct Grid {
    spec: DomainSpec,
    h: f64,
    options: GridOptions,
    i0: i64,
    j0: i64,
    nx: usize,
    ny: usize,
    status: Vec<NodeStatus>,
    lattice: Vec<(i64, i64)>,
    links: Vec<[Link; 4]>,
    free: Vec<bool>,
}

pub fn build_grid(spec: &DomainSpec, h: f64) -> Result<Grid> {
    build_grid_with(spec, h, &GridOptions::default())
}

pub fn build_grid_with(spec: &DomainSpec, h: f64, options: &GridOptions) -> Result<Grid> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::invalid(format!("grid spacing must be positive, got {h}")));
    }
    if !options.anchor.is_finite() {
        return Err(Error::invalid("grid anchor must be finite"));
    }
    spec.validate()?;
    if let Some(size) = spec.feature_size() {
        if size / h < 8.0 {
            return Err(Error::TooCoarse {
                h,
                reason: format!("fewer than 8 nodes across a feature of size {size}"),
            });
        }
    }
    let (lo, hi) = match spec.shape {
        Shape::Disk { center, radius } => (
            center - Point::new(radius, radius),
            center + Point::new(radius, radius),
        ),
        Shape::Rectangle { min, max } => (min, max),
        Shape::HalfDisk { radius } => (Point::new(-radius, 0.0), Point::new(radius, radius)),
    };
    let a = options.anchor;
    let i0 = ((lo.x1 - a.x1) / h).floor() as i64 - 1;
    let j0 = ((lo.x2 - a.x2) / h).floor() as i64 - 1;
    let i1 = ((hi.x1 - a.x1) / h).ceil() as i64 + 1;
    let j1 = ((hi.x2 - a.x2) / h).ceil() as i64 + 1;
    let nx = (i1 - i0 + 1) as usize;
    let ny = (j1 - j0 + 1) as usize;

    let tol = ON_BOUNDARY * h;
    let mut status = vec![NodeStatus::Outside; nx * ny];
    let mut lattice = Vec::new();
    let mut free = Vec::new();
    for jj in 0..ny {
        for ii in 0..nx {
            let (i, j) = (i0 + ii as i64, j0 + jj as i64);
            let p = Point::new(a.x1 + h * i as f64, a.x2 + h * j as f64);
            let sd = spec.signed_distance(p);
            let slot = &mut status[jj * nx + ii];
            if spec.on_cut(p, tol, BoundaryKind::Dirichlet) {
                *slot = NodeStatus::Dirichlet;
            } else if sd < -tol {
                *slot = NodeStatus::Unknown(lattice.len());
                lattice.push((i, j));
                free.push(false);
            } else if sd <= tol && spec.on_cut(p, tol, BoundaryKind::Neumann) && !spec.on_arc(p, tol) {
                *slot = NodeStatus::Unknown(lattice.len());
                lattice.push((i, j));
                free.push(true);
            } else if sd <= tol {
                *slot = NodeStatus::Dirichlet;
            }
        }
    }
    if lattice.is_empty() {
        return Err(Error::TooCoarse {
            h,
            reason: "no interior node".into(),
        });
    }

    let mut grid = Grid {
        spec: spec.clone(),
        h,
        options: *options,
        i0,
        j0,
        nx,
        ny,
        status,
        lattice,
        links: Vec::new(),
        free,
    };
    let mut links = Vec::with_capacity(grid.lattice.len());
    for idx in 0..grid.lattice.len() {
        let (i, j) = grid.lattice[idx];
        let x = grid.node_point(i, j);
        let mut out = [Link {
            target: LinkTarget::Free,
            weight: 0.0,
        }; 4];
        for (slot, &(di, dj)) in out.iter_mut().zip(DIRECTIONS.iter()) {
            *slot = grid.link(idx, x, i + di, j + dj, dj == 0);
        }
        links.push(out);
    }
    grid.links = links;
    Ok(grid)
}

impl Grid {
    fn link(&self, idx: usize, x: Point, ni: i64, nj: i64, horizontal: bool) -> Link {
        let y = self.node_point(ni, nj);
        let from_free = self.free[idx];
        let weight = if from_free && horizontal { 0.5 } else { 1.0 };
        if from_free && !horizontal && y.x2 < x.x2 {
            return Link {
                target: LinkTarget::Free,
                weight: 0.0,
            };
        }
        match self.status_at(ni, nj) {
            NodeStatus::Unknown(n) => {
                // A straight edge between two unknowns may still cross a
                // Dirichlet cut strictly between them.
                if !self.spec.cuts.is_empty() && !(from_free && self.free[n]) {
                    if let Some(s) = self.spec.boundary_crossing(x, y) {
                        if s < 1.0 - 1e-12 {
                            return self.wall(x, y, s, weight);
                        }
                    }
                }
                Link {
                    target: LinkTarget::Node(n),
                    weight,
                }
            }
            NodeStatus::Dirichlet => Link {
                target: LinkTarget::Wall { point: y, fraction: 1.0 },
                weight,
            },
            NodeStatus::Outside => {
                let s = if from_free && horizontal {
                    // Along the flat side only the arc can be met.
                    match self.spec.shape {
                        Shape::HalfDisk { radius } => circle_exit(x, y - x, radius).unwrap_or(1.0),
                        _ => 1.0,
                    }
                } else {
                    self.spec.boundary_crossing(x, y).unwrap_or(1.0)
                };
                self.wall(x, y, s, weight)
            }
        }
    }

    fn wall(&self, x: Point, y: Point, s: f64, weight: f64) -> Link {
        let (point, fraction) = match self.options.treatment {
            BoundaryTreatment::Staircase => (y, 1.0),
            BoundaryTreatment::Embedded => {
                let s = s.clamp(1e-12, 1.0);
                (x + (y - x).scale(s), s)
            }
        };
        Link {
            target: LinkTarget::Wall { point, fraction },
            weight,
        }
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn options(&self) -> &GridOptions {
        &self.options
    }

    pub fn anchor(&self) -> Point {
        self.options.anchor
    }

    /// Number of unknown nodes.
    pub fn len(&self) -> usize {
        self.lattice.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lattice.is_empty()
    }

    /// Lattice extent (columns, rows) of the bounding box.
    pub fn lattice_dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn dirichlet_count(&self) -> usize {
        self.status.iter().filter(|s| **s == NodeStatus::Dirichlet).count()
    }

    pub fn node_point(&self, i: i64, j: i64) -> Point {
        let a = self.options.anchor;
        Point::new(a.x1 + self.h * i as f64, a.x2 + self.h * j as f64)
    }

    pub fn status_at(&self, i: i64, j: i64) -> NodeStatus {
        let ii = i - self.i0;
        let jj = j - self.j0;
        if ii < 0 || jj < 0 || ii >= self.nx as i64 || jj >= self.ny as i64 {
            return NodeStatus::Outside;
        }
        self.status[jj as usize * self.nx + ii as usize]
    }

    pub fn unknown_at(&self, i: i64, j: i64) -> Option<usize> {
        match self.status_at(i, j) {
            NodeStatus::Unknown(n) => Some(n),
            _ => None,
        }
    }

    /// Lattice indices of unknown `idx`.
    pub fn lattice_index(&self, idx: usize) -> (i64, i64) {
        self.lattice[idx]
    }

    pub fn point(&self, idx: usize) -> Point {
        let (i, j) = self.lattice[idx];
        self.node_point(i, j)
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.len()).map(|n| self.point(n))
    }

    pub fn links(&self, idx: usize) -> &[Link; 4] {
        &self.links[idx]
    }

    /// True for unknowns sitting on a free (Neumann) boundary segment.
    pub fn is_free(&self, idx: usize) -> bool {
        self.free[idx]
    }

    /// Continuous lattice coordinates of `p`.
    pub fn lattice_coords(&self, p: Point) -> (f64, f64) {
        let a = self.options.anchor;
        ((p.x1 - a.x1) / self.h, (p.x2 - a.x2) / self.h)
    }

    /// Whether `p` lies strictly inside a lattice plaquette (not on any
    /// lattice line).
    pub fn strictly_in_plaquette(&self, p: Point) -> bool {
        let (u, v) = self.lattice_coords(p);
        let off = |t: f64| (t - t.round()).abs() > 1e-9;
        off(u) && off(v)
    }

    /// Values of `f` at the unknown nodes, in unknown order.
    pub fn sample<T>(&self, mut f: impl FnMut(Point) -> T) -> Vec<T> {
        self.points().map(&mut f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn unit_square_half_spacing() {
        let g = build_grid(&DomainSpec::unit_square(), 0.5).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.point(0), Point::new(0.5, 0.5));
        for l in g.links(0) {
            match l.target {
                LinkTarget::Wall { fraction, .. } => assert_eq!(fraction, 1.0),
                _ => panic!("expected walls"),
            }
        }
    }

    #[test]
    fn disk_node_count_tracks_area() {
        let h = 1.0 / 64.0;
        let g = build_grid(&DomainSpec::unit_disk(), h).unwrap();
        let expect = PI / (h * h);
        assert!((g.len() as f64 - expect).abs() < 0.02 * expect);
    }

    #[test]
    fn slit_nodes_are_dirichlet() {
        let g = build_grid_with(
            &DomainSpec::slit_half_disk(8.0),
            1.0 / 8.0,
            &GridOptions {
                anchor: Point::ORIGIN,
                treatment: BoundaryTreatment::Staircase,
            },
        )
        .unwrap();
        for i in 8..64 {
            assert_eq!(g.status_at(i, 0), NodeStatus::Dirichlet, "node {i}");
        }
        for i in -63..8 {
            let n = g.unknown_at(i, 0).expect("free axis node");
            assert!(g.is_free(n));
        }
        assert_eq!(g.status_at(-64, 0), NodeStatus::Dirichlet);
        // Free nodes couple along the axis with half weight and have no
        // neighbour below.
        let n = g.unknown_at(-3, 0).unwrap();
        let l = g.links(n);
        assert_eq!(l[0].weight, 0.5);
        assert_eq!(l[1].weight, 1.0);
        assert_eq!(l[3].target, LinkTarget::Free);
        // The node next to the slit couples to a zero wall at the slit tip.
        let tip = g.unknown_at(7, 0).unwrap();
        assert_eq!(
            g.links(tip)[0].target,
            LinkTarget::Wall {
                point: Point::new(1.0, 0.0),
                fraction: 1.0
            }
        );
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            build_grid(&DomainSpec::disk(Point::ORIGIN, -1.0), 0.1),
            Err(Error::DegenerateDomain(_))
        ));
        assert!(matches!(
            build_grid(&DomainSpec::unit_disk(), 0.3),
            Err(Error::TooCoarse { .. })
        ));
        assert!(build_grid(&DomainSpec::unit_disk(), 0.0).is_err());
        let mut spec = DomainSpec::slit_half_disk(8.0);
        spec.cuts[1].end = Point::new(2.0, 0.0);
        assert!(matches!(
            build_grid(&spec, 0.125),
            Err(Error::InconsistentTags(_))
        ));
    }

    #[test]
    fn embedded_fractions_hit_the_circle() {
        let g = build_grid(&DomainSpec::unit_disk(), 1.0 / 16.0).unwrap();
        let mut walls = 0;
        for n in 0..g.len() {
            for l in g.links(n) {
                if let LinkTarget::Wall { point, fraction } = l.target {
                    walls += 1;
                    assert!(fraction > 0.0 && fraction <= 1.0);
                    assert!((point.norm() - 1.0).abs() < 1e-12);
                }
            }
        }
        assert!(walls > 0);
    }

    #[test]
    fn classification_is_deterministic_and_consistent() {
        let spec = DomainSpec::disk(Point::new(0.2, -0.1), 0.9);
        let opts = GridOptions {
            anchor: Point::new(0.01, 0.02),
            treatment: BoundaryTreatment::Embedded,
        };
        let a = build_grid_with(&spec, 0.05, &opts).unwrap();
        let b = build_grid_with(&spec, 0.05, &opts).unwrap();
        assert_eq!(a.len(), b.len());
        for n in 0..a.len() {
            assert_eq!(a.point(n), b.point(n));
            assert!(spec.contains(a.point(n)));
            let (i, j) = a.lattice_index(n);
            assert_eq!(a.unknown_at(i, j), Some(n));
        }
    }

    #[test]
    fn plaquette_test() {
        let g = build_grid(&DomainSpec::unit_disk(), 0.125).unwrap();
        assert!(g.strictly_in_plaquette(Point::new(0.3, 0.0625)));
        assert!(!g.strictly_in_plaquette(Point::new(0.3, 0.0)));
        assert!(!g.strictly_in_plaquette(Point::new(0.25, 0.1)));
    }
}
