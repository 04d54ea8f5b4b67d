//! Structured triangulations of rectangles (and unit intervals) with tagged
//! boundary regions, uniform red refinement, and a plain-text exchange format.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Boundary region a facet belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RegionTag {
    Dirichlet,
    Neumann,
    Contact1,
    Contact2,
}

impl RegionTag {
    pub fn code(self) -> &'static str {
        match self {
            RegionTag::Dirichlet => "DIR",
            RegionTag::Neumann => "NEU",
            RegionTag::Contact1 => "C1",
            RegionTag::Contact2 => "C2",
        }
    }

    pub fn is_contact(self) -> bool {
        matches!(self, RegionTag::Contact1 | RegionTag::Contact2)
    }
}

impl fmt::Display for RegionTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for RegionTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "DIR" => Ok(RegionTag::Dirichlet),
            "NEU" => Ok(RegionTag::Neumann),
            "C1" => Ok(RegionTag::Contact1),
            "C2" => Ok(RegionTag::Contact2),
            other => Err(Error::Parse(format!("unknown region tag `{other}`"))),
        }
    }
}

/// Region assignment for the four sides of an axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SideTags {
    pub bottom: RegionTag,
    pub right: RegionTag,
    pub top: RegionTag,
    pub left: RegionTag,
}

impl SideTags {
    pub fn uniform(tag: RegionTag) -> Self {
        SideTags { bottom: tag, right: tag, top: tag, left: tag }
    }
}

/// A boundary facet: an oriented edge `[a, b]` in 2D (counterclockwise with
/// respect to the interior), or a single point `[i, i]` in 1D.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    pub vertices: [usize; 2],
    pub tag: RegionTag,
}

/// A conforming simplicial mesh at one refinement level.
///
/// In 1D the vertices still carry two coordinates (the second is zero), the
/// elements live in `segments` and `triangles` is empty.
#[derive(Debug, Clone)]
pub struct TriangulationLevel {
    pub dim: usize,
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub segments: Vec<[usize; 2]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    pub level: usize,
    pub h: f64,
    /// For each vertex created by the last refinement, the coarse edge it
    /// bisects. Vertices `0..coarse_vertex_count` keep their coarse index.
    pub(crate) midpoint_parents: Vec<[usize; 2]>,
    pub(crate) coarse_vertex_count: usize,
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Signed area of the triangle `(a, b, c)`; positive for counterclockwise.
pub fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

/// Builds an `nx x ny` structured mesh of `[0, width] x [0, height]`, each cell
/// split along its (SW, NE) diagonal.
pub fn build_rectangle_mesh(
    width: f64,
    height: f64,
    nx: usize,
    ny: usize,
    tagging: SideTags,
) -> Result<TriangulationLevel> {
    if !(width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite()) {
        return Err(Error::InvalidGeometry(format!(
            "rectangle dimensions must be positive, got {width} x {height}"
        )));
    }
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidGeometry(format!(
            "cell counts must be at least 1, got {nx} x {ny}"
        )));
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push([width * i as f64 / nx as f64, height * j as f64 / ny as f64]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (v00, v10, v11, v01) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    let mut boundary_edges = Vec::with_capacity(2 * (nx + ny));
    for i in 0..nx {
        boundary_edges.push(BoundaryEdge { vertices: [id(i, 0), id(i + 1, 0)], tag: tagging.bottom });
    }
    for j in 0..ny {
        boundary_edges.push(BoundaryEdge { vertices: [id(nx, j), id(nx, j + 1)], tag: tagging.right });
    }
    for i in (0..nx).rev() {
        boundary_edges.push(BoundaryEdge { vertices: [id(i + 1, ny), id(i, ny)], tag: tagging.top });
    }
    for j in (0..ny).rev() {
        boundary_edges.push(BoundaryEdge { vertices: [id(0, j + 1), id(0, j)], tag: tagging.left });
    }
    let mut mesh = TriangulationLevel {
        dim: 2,
        vertices,
        triangles,
        segments: Vec::new(),
        boundary_edges,
        level: 0,
        h: 0.0,
        midpoint_parents: Vec::new(),
        coarse_vertex_count: 0,
    };
    mesh.h = mesh.max_diameter();
    Ok(mesh)
}

/// Uniform mesh of `(0, 1)` with `n` elements; `x = 0` is Dirichlet and
/// `x = 1` is tagged `Contact1`.
pub fn build_interval_mesh(n: usize) -> Result<TriangulationLevel> {
    if n == 0 {
        return Err(Error::InvalidGeometry("interval mesh needs at least one element".into()));
    }
    let vertices = (0..=n).map(|i| [i as f64 / n as f64, 0.0]).collect();
    let segments = (0..n).map(|i| [i, i + 1]).collect();
    let boundary_edges = vec![
        BoundaryEdge { vertices: [0, 0], tag: RegionTag::Dirichlet },
        BoundaryEdge { vertices: [n, n], tag: RegionTag::Contact1 },
    ];
    let mut mesh = TriangulationLevel {
        dim: 1,
        vertices,
        triangles: Vec::new(),
        segments,
        boundary_edges,
        level: 0,
        h: 0.0,
        midpoint_parents: Vec::new(),
        coarse_vertex_count: 0,
    };
    mesh.h = mesh.max_diameter();
    Ok(mesh)
}

/// Red refinement: every triangle (segment) is split by its edge midpoints.
pub fn refine_uniform(mesh: &TriangulationLevel) -> Result<TriangulationLevel> {
    mesh.validate()?;
    let mut vertices = mesh.vertices.clone();
    let mut midpoint_parents = Vec::new();
    let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
    let mut mid = |a: usize, b: usize, vertices: &mut Vec<[f64; 2]>| -> usize {
        let key = (a.min(b), a.max(b));
        *midpoint.entry(key).or_insert_with(|| {
            let (pa, pb) = (vertices[a], vertices[b]);
            vertices.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
            midpoint_parents.push([key.0, key.1]);
            vertices.len() - 1
        })
    };

    let mut triangles = Vec::with_capacity(4 * mesh.triangles.len());
    for &[a, b, c] in &mesh.triangles {
        let ab = mid(a, b, &mut vertices);
        let bc = mid(b, c, &mut vertices);
        let ca = mid(c, a, &mut vertices);
        triangles.push([a, ab, ca]);
        triangles.push([ab, b, bc]);
        triangles.push([ca, bc, c]);
        triangles.push([ab, bc, ca]);
    }
    let mut segments = Vec::with_capacity(2 * mesh.segments.len());
    for &[a, b] in &mesh.segments {
        let m = mid(a, b, &mut vertices);
        segments.push([a, m]);
        segments.push([m, b]);
    }
    let mut boundary_edges = Vec::with_capacity(2 * mesh.boundary_edges.len());
    for e in &mesh.boundary_edges {
        let [a, b] = e.vertices;
        if a == b {
            boundary_edges.push(*e);
        } else {
            let m = mid(a, b, &mut vertices);
            boundary_edges.push(BoundaryEdge { vertices: [a, m], tag: e.tag });
            boundary_edges.push(BoundaryEdge { vertices: [m, b], tag: e.tag });
        }
    }
    let mut fine = TriangulationLevel {
        dim: mesh.dim,
        vertices,
        triangles,
        segments,
        boundary_edges,
        level: mesh.level + 1,
        h: 0.0,
        midpoint_parents,
        coarse_vertex_count: mesh.vertices.len(),
    };
    fine.h = fine.max_diameter();
    Ok(fine)
}

impl TriangulationLevel {
    /// Refines `levels` times.
    pub fn refined(&self, levels: usize) -> Result<TriangulationLevel> {
        let mut m = self.clone();
        for _ in 0..levels {
            m = refine_uniform(&m)?;
        }
        Ok(m)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn element_count(&self) -> usize {
        if self.dim == 1 {
            self.segments.len()
        } else {
            self.triangles.len()
        }
    }

    fn max_diameter(&self) -> f64 {
        let v = &self.vertices;
        if self.dim == 1 {
            self.segments.iter().map(|&[a, b]| dist(v[a], v[b])).fold(0.0, f64::max)
        } else {
            self.triangles
                .iter()
                .map(|&[a, b, c]| dist(v[a], v[b]).max(dist(v[b], v[c])).max(dist(v[c], v[a])))
                .fold(0.0, f64::max)
        }
    }

    /// Measure of a boundary facet (edge length, or 1 for a 1D point).
    pub fn facet_measure(&self, e: &BoundaryEdge) -> f64 {
        let [a, b] = e.vertices;
        if a == b {
            1.0
        } else {
            dist(self.vertices[a], self.vertices[b])
        }
    }

    /// Outward unit normal of a boundary facet.
    pub fn facet_normal(&self, e: &BoundaryEdge) -> [f64; 2] {
        let [a, b] = e.vertices;
        if a == b {
            let x = self.vertices[a][0];
            let centroid = self.vertices.iter().map(|p| p[0]).sum::<f64>() / self.vertices.len() as f64;
            return if x >= centroid { [1.0, 0.0] } else { [-1.0, 0.0] };
        }
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        let (dx, dy) = (pb[0] - pa[0], pb[1] - pa[1]);
        let len = (dx * dx + dy * dy).sqrt();
        [dy / len, -dx / len]
    }

    pub fn edges_with_tag(&self, tag: RegionTag) -> impl Iterator<Item = &BoundaryEdge> {
        self.boundary_edges.iter().filter(move |e| e.tag == tag)
    }

    pub fn region_measure(&self, tag: RegionTag) -> f64 {
        self.edges_with_tag(tag).map(|e| self.facet_measure(e)).sum()
    }

    /// Domain measure as the sum of signed element measures.
    pub fn total_measure(&self) -> f64 {
        let v = &self.vertices;
        if self.dim == 1 {
            self.segments.iter().map(|&[a, b]| v[b][0] - v[a][0]).sum()
        } else {
            self.triangles.iter().map(|&[a, b, c]| signed_area(v[a], v[b], v[c])).sum()
        }
    }

    /// Smallest interior angle over all triangles, in radians.
    pub fn min_angle(&self) -> f64 {
        let v = &self.vertices;
        let angle = |p: [f64; 2], q: [f64; 2], r: [f64; 2]| {
            let (ux, uy) = (q[0] - p[0], q[1] - p[1]);
            let (wx, wy) = (r[0] - p[0], r[1] - p[1]);
            ((ux * wx + uy * wy) / ((ux * ux + uy * uy).sqrt() * (wx * wx + wy * wy).sqrt()))
                .clamp(-1.0, 1.0)
                .acos()
        };
        self.triangles
            .iter()
            .map(|&[a, b, c]| {
                angle(v[a], v[b], v[c]).min(angle(v[b], v[c], v[a])).min(angle(v[c], v[a], v[b]))
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Checks the structural invariants: positive orientation, conformity
    /// (every interior edge shared by exactly two triangles, every boundary
    /// edge by one and tagged exactly once) and flat boundary facets.
    pub fn validate(&self) -> Result<()> {
        let nv = self.vertices.len();
        let bad = |msg: String| Err(Error::InvalidMesh(msg));
        if self.dim == 1 {
            for &[a, b] in &self.segments {
                if a >= nv || b >= nv {
                    return bad("segment index out of range".into());
                }
                if self.vertices[b][0] - self.vertices[a][0] <= 0.0 {
                    return bad(format!("segment [{a}, {b}] has non-positive length"));
                }
            }
            for e in &self.boundary_edges {
                if e.vertices[0] != e.vertices[1] || e.vertices[0] >= nv {
                    return bad("1D boundary facets must be single vertices".into());
                }
            }
            return Ok(());
        }
        let mut edge_use: HashMap<(usize, usize), (usize, [usize; 2])> = HashMap::new();
        for (t, &[a, b, c]) in self.triangles.iter().enumerate() {
            if a >= nv || b >= nv || c >= nv {
                return bad(format!("triangle {t} index out of range"));
            }
            if signed_area(self.vertices[a], self.vertices[b], self.vertices[c]) <= 0.0 {
                return bad(format!("triangle {t} has non-positive signed area"));
            }
            for (p, q) in [(a, b), (b, c), (c, a)] {
                let entry = edge_use.entry((p.min(q), p.max(q))).or_insert((0, [p, q]));
                entry.0 += 1;
            }
        }
        let mut tagged: HashMap<(usize, usize), (usize, [usize; 2])> = HashMap::new();
        for e in &self.boundary_edges {
            let [a, b] = e.vertices;
            tagged.entry((a.min(b), a.max(b))).or_insert((0, e.vertices)).0 += 1;
        }
        for (key, (count, oriented)) in &edge_use {
            let (ntag, tag_orient) = tagged.get(key).copied().unwrap_or((0, [0, 0]));
            match (*count, ntag) {
                (2, 0) => {}
                (1, 1) => {
                    if tag_orient != *oriented {
                        return bad(format!("boundary edge {tag_orient:?} is not counterclockwise"));
                    }
                }
                (1, 0) => return bad(format!("boundary edge {key:?} carries no region tag")),
                (2, _) => return bad(format!("interior edge {key:?} is tagged as boundary")),
                (1, _) => return bad(format!("boundary edge {key:?} carries several tags")),
                (n, _) => return bad(format!("edge {key:?} shared by {n} triangles (non-conforming)")),
            }
        }
        if tagged.len() != self.boundary_edges.len() || tagged.keys().any(|k| !edge_use.contains_key(k)) {
            return bad("boundary edge list contains duplicates or non-edges".into());
        }
        Ok(())
    }

    /// Prolongs nodal values (one block of `components` per vertex) from the
    /// previous level onto this one: coarse vertices are copied, midpoint
    /// vertices averaged. Exact for the nested P1 spaces.
    pub fn prolong_from_coarse(&self, coarse: &[f64], components: usize) -> Result<Vec<f64>> {
        if coarse.len() != self.coarse_vertex_count * components || self.level == 0 {
            return Err(Error::SizeMismatch {
                expected: self.coarse_vertex_count * components,
                found: coarse.len(),
            });
        }
        let mut fine = Vec::with_capacity(self.vertices.len() * components);
        fine.extend_from_slice(coarse);
        for &[a, b] in &self.midpoint_parents {
            for c in 0..components {
                fine.push(0.5 * (fine[a * components + c] + fine[b * components + c]));
            }
        }
        Ok(fine)
    }

    /// Serializes to the `vhi-mesh v1` text format.
    pub fn to_text(&self) -> String {
        let mut s = format!("vhi-mesh v1 dim={}\n{}\n", self.dim, self.vertices.len());
        for p in &self.vertices {
            if self.dim == 1 {
                s.push_str(&format!("{:?}\n", p[0]));
            } else {
                s.push_str(&format!("{:?} {:?}\n", p[0], p[1]));
            }
        }
        if self.dim == 1 {
            s.push_str(&format!("{}\n", self.segments.len()));
            for &[a, b] in &self.segments {
                s.push_str(&format!("{a} {b}\n"));
            }
        } else {
            s.push_str(&format!("{}\n", self.triangles.len()));
            for &[a, b, c] in &self.triangles {
                s.push_str(&format!("{a} {b} {c}\n"));
            }
        }
        s.push_str(&format!("{}\n", self.boundary_edges.len()));
        for e in &self.boundary_edges {
            s.push_str(&format!("{} {} {}\n", e.vertices[0], e.vertices[1], e.tag));
        }
        s
    }

    /// Parses the `vhi-mesh v1` text format. The imported mesh is level 0.
    pub fn from_text(text: &str) -> Result<TriangulationLevel> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let perr = |m: &str| Error::Parse(format!("mesh: {m}"));
        let header = lines.next().ok_or_else(|| perr("empty input"))?;
        let dim = match header {
            "vhi-mesh v1 dim=1" => 1,
            "vhi-mesh v1 dim=2" => 2,
            _ => return Err(perr("bad header")),
        };
        let mut next_line = || lines.next().ok_or_else(|| perr("unexpected end of input"));
        let parse_usize = |t: &str| t.parse::<usize>().map_err(|_| perr("bad index"));
        let nv: usize = next_line()?.parse().map_err(|_| perr("bad vertex count"))?;
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let nums: Vec<f64> = next_line()?
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|_| perr("bad coordinate")))
                .collect::<Result<_>>()?;
            if nums.len() != dim {
                return Err(perr("coordinate arity does not match dim"));
            }
            vertices.push([nums[0], if dim == 2 { nums[1] } else { 0.0 }]);
        }
        let ne: usize = next_line()?.parse().map_err(|_| perr("bad element count"))?;
        let mut triangles = Vec::new();
        let mut segments = Vec::new();
        for _ in 0..ne {
            let idx: Vec<usize> =
                next_line()?.split_whitespace().map(parse_usize).collect::<Result<_>>()?;
            match (dim, idx.as_slice()) {
                (1, &[a, b]) => segments.push([a, b]),
                (2, &[a, b, c]) => triangles.push([a, b, c]),
                _ => return Err(perr("element arity does not match dim")),
            }
        }
        let nb: usize = next_line()?.parse().map_err(|_| perr("bad boundary count"))?;
        let mut boundary_edges = Vec::with_capacity(nb);
        for _ in 0..nb {
            let line = next_line()?;
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 3 {
                return Err(perr("boundary line must be `i j TAG`"));
            }
            boundary_edges.push(BoundaryEdge {
                vertices: [parse_usize(toks[0])?, parse_usize(toks[1])?],
                tag: toks[2].parse()?,
            });
        }
        let mut mesh = TriangulationLevel {
            dim,
            vertices,
            triangles,
            segments,
            boundary_edges,
            level: 0,
            h: 0.0,
            midpoint_parents: Vec::new(),
            coarse_vertex_count: 0,
        };
        mesh.validate()?;
        mesh.h = mesh.max_diameter();
        Ok(mesh)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQRT2: f64 = std::f64::consts::SQRT_2;

    fn left_dirichlet() -> SideTags {
        SideTags {
            bottom: RegionTag::Neumann,
            right: RegionTag::Neumann,
            top: RegionTag::Neumann,
            left: RegionTag::Dirichlet,
        }
    }

    #[test]
    fn single_cell_square() {
        let m = build_rectangle_mesh(1.0, 1.0, 1, 1, SideTags::uniform(RegionTag::Dirichlet)).unwrap();
        assert_eq!(m.triangles.len(), 2);
        assert_eq!(m.vertices.len(), 4);
        assert_eq!(m.boundary_edges.len(), 4);
        assert!((m.h - SQRT2).abs() < 1e-15);
        m.validate().unwrap();
    }

    #[test]
    fn two_by_two_square() {
        let m = build_rectangle_mesh(1.0, 1.0, 2, 2, left_dirichlet()).unwrap();
        assert_eq!(m.triangles.len(), 8);
        assert_eq!(m.vertices.len(), 9);
        assert!((m.h - SQRT2 / 2.0).abs() < 1e-15);
    }

    #[test]
    fn contact_side_length_sums_to_width() {
        let tags = SideTags { bottom: RegionTag::Contact1, ..left_dirichlet() };
        let m = build_rectangle_mesh(2.0, 1.0, 4, 2, tags).unwrap();
        let total: f64 = m.edges_with_tag(RegionTag::Contact1).map(|e| m.facet_measure(e)).sum();
        assert!((total - 2.0).abs() < 1e-14);
    }

    #[test]
    fn invalid_dimensions_rejected() {
        assert!(matches!(
            build_rectangle_mesh(0.0, 1.0, 1, 1, left_dirichlet()),
            Err(Error::InvalidGeometry(_))
        ));
        assert!(matches!(
            build_rectangle_mesh(1.0, -2.0, 1, 1, left_dirichlet()),
            Err(Error::InvalidGeometry(_))
        ));
        assert!(matches!(build_rectangle_mesh(1.0, 1.0, 0, 1, left_dirichlet()), Err(Error::InvalidGeometry(_))));
        assert!(matches!(build_interval_mesh(0), Err(Error::InvalidGeometry(_))));
    }

    #[test]
    fn refinement_counts() {
        let m = build_rectangle_mesh(1.0, 1.0, 1, 1, SideTags::uniform(RegionTag::Dirichlet)).unwrap();
        let r1 = refine_uniform(&m).unwrap();
        assert_eq!(r1.triangles.len(), 8);
        assert!((r1.h - SQRT2 / 2.0).abs() < 1e-15);
        assert_eq!(r1.level, 1);
        let r2 = refine_uniform(&r1).unwrap();
        assert_eq!(r2.triangles.len(), 32);
        assert!((r2.h - SQRT2 / 4.0).abs() < 1e-15);
        r2.validate().unwrap();
    }

    #[test]
    fn boundary_edges_double_per_tag() {
        let tags = SideTags {
            bottom: RegionTag::Contact1,
            right: RegionTag::Contact2,
            top: RegionTag::Neumann,
            left: RegionTag::Dirichlet,
        };
        let m = build_rectangle_mesh(1.0, 1.0, 4, 4, tags).unwrap();
        let r = refine_uniform(&m).unwrap();
        for tag in [RegionTag::Dirichlet, RegionTag::Neumann, RegionTag::Contact1, RegionTag::Contact2] {
            assert_eq!(r.edges_with_tag(tag).count(), 2 * m.edges_with_tag(tag).count());
            assert!((r.region_measure(tag) - m.region_measure(tag)).abs() < 1e-14);
        }
    }

    #[test]
    fn area_and_angles_preserved() {
        let m = build_rectangle_mesh(2.0, 1.0, 3, 2, left_dirichlet()).unwrap();
        let a0 = m.min_angle();
        let mut cur = m;
        for _ in 0..3 {
            assert!((cur.total_measure() - 2.0).abs() <= 2.0 * 1e-12);
            assert!((cur.min_angle() - a0).abs() < 1e-12);
            cur = refine_uniform(&cur).unwrap();
        }
    }

    #[test]
    fn interval_mesh() {
        let m = build_interval_mesh(2).unwrap();
        let xs: Vec<f64> = m.vertices.iter().map(|p| p[0]).collect();
        assert_eq!(xs, vec![0.0, 0.5, 1.0]);
        assert_eq!(m.h, 0.5);
        let m4 = build_interval_mesh(4).unwrap();
        assert_eq!(m4.vertices.len(), 5);
        assert_eq!(m4.h, 0.25);
        for n in 1..6 {
            let m = build_interval_mesh(n).unwrap();
            let c1: Vec<_> = m.edges_with_tag(RegionTag::Contact1).collect();
            assert_eq!(c1.len(), 1);
            assert_eq!(c1[0].vertices, [n, n]);
            assert_eq!(m.facet_normal(c1[0]), [1.0, 0.0]);
        }
        let r = refine_uniform(&build_interval_mesh(2).unwrap()).unwrap();
        assert_eq!(r.segments.len(), 4);
        assert_eq!(r.h, 0.25);
    }

    #[test]
    fn outward_normals_of_rectangle() {
        let tags = SideTags {
            bottom: RegionTag::Contact1,
            right: RegionTag::Contact2,
            top: RegionTag::Neumann,
            left: RegionTag::Dirichlet,
        };
        let m = build_rectangle_mesh(1.0, 1.0, 2, 2, tags).unwrap();
        for e in &m.boundary_edges {
            let n = m.facet_normal(e);
            let expect = match e.tag {
                RegionTag::Contact1 => [0.0, -1.0],
                RegionTag::Contact2 => [1.0, 0.0],
                RegionTag::Neumann => [0.0, 1.0],
                RegionTag::Dirichlet => [-1.0, 0.0],
            };
            assert!((n[0] - expect[0]).abs() < 1e-15 && (n[1] - expect[1]).abs() < 1e-15);
        }
    }

    #[test]
    fn validation_detects_defects() {
        let mut m = build_rectangle_mesh(1.0, 1.0, 2, 2, left_dirichlet()).unwrap();
        m.triangles[0].swap(1, 2);
        assert!(m.validate().is_err());
        let mut m = build_rectangle_mesh(1.0, 1.0, 2, 2, left_dirichlet()).unwrap();
        m.boundary_edges.pop();
        assert!(m.validate().is_err());
    }

    #[test]
    fn prolongation_is_exact_for_linear_fields() {
        let m = build_rectangle_mesh(1.0, 1.0, 2, 2, left_dirichlet()).unwrap();
        let f = |p: [f64; 2]| 3.0 * p[0] - 2.0 * p[1] + 0.5;
        let coarse: Vec<f64> = m.vertices.iter().map(|&p| f(p)).collect();
        let r = refine_uniform(&m).unwrap();
        let fine = r.prolong_from_coarse(&coarse, 1).unwrap();
        for (p, v) in r.vertices.iter().zip(&fine) {
            assert!((f(*p) - v).abs() < 1e-14);
        }
    }

    #[test]
    fn text_round_trip() {
        let tags = SideTags { bottom: RegionTag::Contact1, ..left_dirichlet() };
        let m = refine_uniform(&build_rectangle_mesh(1.5, 1.0, 3, 2, tags).unwrap()).unwrap();
        let text = m.to_text();
        assert!(text.starts_with("vhi-mesh v1 dim=2\n"));
        let back = TriangulationLevel::from_text(&text).unwrap();
        assert_eq!(back.vertices, m.vertices);
        assert_eq!(back.triangles, m.triangles);
        assert_eq!(back.boundary_edges, m.boundary_edges);
        assert_eq!(back.h, m.h);

        let i = build_interval_mesh(3).unwrap();
        let back = TriangulationLevel::from_text(&i.to_text()).unwrap();
        assert_eq!(back.vertices, i.vertices);
        assert_eq!(back.segments, i.segments);
        assert!(TriangulationLevel::from_text("vhi-mesh v2 dim=2\n").is_err());
    }
}
