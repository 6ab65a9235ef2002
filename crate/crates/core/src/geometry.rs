//! Triangle mesh kernel: storage, validation, affine element maps, vertex
//! patches, and the text mesh format.
//!
//! The reference element is the equilateral triangle of unit area centered
//! at the origin. Its vertices are `(-a/2, -h/3)`, `(a/2, -h/3)`,
//! `(0, 2h/3)` with `a = 2/3^(1/4)` and `h = sqrt(3)/2 * a = 3^(1/4)`, so
//! `det(F'_K) = |K|` for every element.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::vec2::Point2;

/// Side length of the unit-area equilateral reference triangle.
pub const REF_SIDE: f64 = 1.5196713713031853; // 2 / 3^(1/4)
/// Height of the reference triangle, `sqrt(3)/2 * REF_SIDE`.
pub const REF_HEIGHT: f64 = 1.3160740129524924; // 3^(1/4)

/// Vertices of the reference element (counterclockwise, centroid at origin).
pub fn reference_vertices() -> [Point2; 3] {
    let a = REF_SIDE;
    let h = REF_HEIGHT;
    [
        Point2::new(-0.5 * a, -h / 3.0),
        Point2::new(0.5 * a, -h / 3.0),
        Point2::new(0.0, 2.0 * h / 3.0),
    ]
}

/// Affine map `x = J x_ref + t` from the reference element onto a mesh element.
#[derive(Clone, Copy, Debug)]
pub struct AffineMap {
    pub jacobian: [[f64; 2]; 2],
    pub translation: Point2,
}

impl AffineMap {
    pub fn det(&self) -> f64 {
        self.jacobian[0][0] * self.jacobian[1][1] - self.jacobian[0][1] * self.jacobian[1][0]
    }

    pub fn apply(&self, p: Point2) -> Point2 {
        Point2::new(
            self.jacobian[0][0] * p.x + self.jacobian[0][1] * p.y + self.translation.x,
            self.jacobian[1][0] * p.x + self.jacobian[1][1] * p.y + self.translation.y,
        )
    }
}

/// Immutable conforming triangulation.
///
/// Triangles are stored counterclockwise; adjacency (vertex neighbors and
/// incident triangles, both sorted ascending) is built once at construction,
/// so all read queries are cheap and safe to call concurrently.
#[derive(Clone, Debug)]
pub struct Mesh {
    vertices: Vec<Point2>,
    triangles: Vec<[usize; 3]>,
    boundary_vertex: Vec<bool>,
    boundary_edges: Vec<[usize; 2]>,
    neighbors: Vec<Vec<usize>>,
    vertex_triangles: Vec<Vec<usize>>,
    areas: Vec<f64>,
    domain_area: f64,
}

fn signed_area(p0: Point2, p1: Point2, p2: Point2) -> f64 {
    0.5 * (p1 - p0).cross(p2 - p0)
}

impl Mesh {
    /// Validate and build a mesh; triangle orientation is normalized to
    /// counterclockwise.
    pub fn new(vertices: Vec<Point2>, mut triangles: Vec<[usize; 3]>) -> Result<Self> {
        let nv = vertices.len();
        for p in &vertices {
            if !p.is_finite() {
                return Err(Error::Topology("non-finite vertex coordinate".into()));
            }
        }
        for (k, t) in triangles.iter().enumerate() {
            for &i in t {
                if i >= nv {
                    return Err(Error::IndexOutOfRange { index: i, len: nv });
                }
            }
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(Error::Topology(format!(
                    "triangle {k} repeats a vertex: {t:?}"
                )));
            }
        }

        // Orient counterclockwise, then enforce the area floor.
        let mut areas = Vec::with_capacity(triangles.len());
        let mut domain_area = 0.0;
        for t in triangles.iter_mut() {
            let mut a = signed_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]);
            if a < 0.0 {
                t.swap(1, 2);
                a = -a;
            }
            areas.push(a);
            domain_area += a;
        }
        let floor = 1e-14 * domain_area;
        for (k, &a) in areas.iter().enumerate() {
            if a <= floor {
                return Err(Error::DegenerateElement { elem: k, area: a, floor });
            }
        }

        // Undirected edge incidence; directed duplicates mean inconsistent
        // orientation or an overlap, undirected count > 2 means non-manifold.
        let mut undirected: HashMap<(usize, usize), u32> = HashMap::new();
        let mut directed: HashMap<(usize, usize), u32> = HashMap::new();
        for t in &triangles {
            for e in 0..3 {
                let (i, j) = (t[e], t[(e + 1) % 3]);
                *directed.entry((i, j)).or_insert(0) += 1;
                let key = (i.min(j), i.max(j));
                *undirected.entry(key).or_insert(0) += 1;
            }
        }
        for (&(i, j), &c) in &directed {
            if c > 1 {
                return Err(Error::Topology(format!(
                    "directed edge ({i}, {j}) used by {c} triangles"
                )));
            }
        }
        for (&(i, j), &c) in &undirected {
            if c > 2 {
                return Err(Error::Topology(format!(
                    "edge ({i}, {j}) shared by {c} triangles"
                )));
            }
        }

        let mut boundary_edges: Vec<[usize; 2]> = undirected
            .iter()
            .filter(|&(_, &c)| c == 1)
            .map(|(&(i, j), _)| [i, j])
            .collect();
        boundary_edges.sort_unstable();
        let mut boundary_vertex = vec![false; nv];
        for e in &boundary_edges {
            boundary_vertex[e[0]] = true;
            boundary_vertex[e[1]] = true;
        }

        let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); nv];
        for &(i, j) in undirected.keys() {
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
        for n in neighbors.iter_mut() {
            n.sort_unstable();
        }
        let mut vertex_triangles: Vec<Vec<usize>> = vec![Vec::new(); nv];
        for (k, t) in triangles.iter().enumerate() {
            for &i in t {
                vertex_triangles[i].push(k);
            }
        }

        Ok(Self {
            vertices,
            triangles,
            boundary_vertex,
            boundary_edges,
            neighbors,
            vertex_triangles,
            areas,
            domain_area,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertex(&self, i: usize) -> Point2 {
        self.vertices[i]
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn triangle(&self, k: usize) -> [usize; 3] {
        self.triangles[k]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn triangle_points(&self, k: usize) -> [Point2; 3] {
        let t = self.triangles[k];
        [self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]]
    }

    pub fn area(&self, k: usize) -> f64 {
        self.areas[k]
    }

    pub fn domain_area(&self) -> f64 {
        self.domain_area
    }

    pub fn centroid(&self, k: usize) -> Point2 {
        let [p0, p1, p2] = self.triangle_points(k);
        (p0 + p1 + p2) / 3.0
    }

    pub fn is_boundary_vertex(&self, i: usize) -> bool {
        self.boundary_vertex[i]
    }

    pub fn boundary_vertex_count(&self) -> usize {
        self.boundary_vertex.iter().filter(|&&b| b).count()
    }

    pub fn boundary_edges(&self) -> &[[usize; 2]] {
        &self.boundary_edges
    }

    /// First-ring vertex neighbors, sorted ascending.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    /// Triangles incident to vertex `i`, sorted ascending.
    pub fn triangles_of(&self, i: usize) -> &[usize] {
        &self.vertex_triangles[i]
    }

    /// Affine map from the reference element onto element `k`.
    pub fn affine_map(&self, k: usize) -> Result<AffineMap> {
        if k >= self.triangles.len() {
            return Err(Error::IndexOutOfRange {
                index: k,
                len: self.triangles.len(),
            });
        }
        let floor = 1e-14 * self.domain_area;
        if self.areas[k] <= floor {
            return Err(Error::DegenerateElement {
                elem: k,
                area: self.areas[k],
                floor,
            });
        }
        let [p0, p1, p2] = self.triangle_points(k);
        let e1 = p1 - p0;
        let e2 = p2 - p0;
        // J = [e1 | e2] * inv([r1-r0 | r2-r0]) with the reference edge matrix
        // [[a, a/2], [0, h]] inverted in closed form.
        let a = REF_SIDE;
        let h = REF_HEIGHT;
        let jacobian = [
            [e1.x / a, (-0.5 * e1.x + e2.x) / h],
            [e1.y / a, (-0.5 * e1.y + e2.y) / h],
        ];
        let r0 = reference_vertices()[0];
        let translation = Point2::new(
            p0.x - jacobian[0][0] * r0.x - jacobian[0][1] * r0.y,
            p0.y - jacobian[1][0] * r0.x - jacobian[1][1] * r0.y,
        );
        Ok(AffineMap {
            jacobian,
            translation,
        })
    }

    /// First-ring neighbors of vertex `i`, expanded ring by ring until at
    /// least `min_size` vertices are collected or the mesh is exhausted
    /// (`i` itself is excluded). Within each ring vertices are appended in
    /// ascending index order.
    pub fn vertex_patch(&self, i: usize, min_size: usize) -> Result<Vec<usize>> {
        if i >= self.n_vertices() {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.n_vertices(),
            });
        }
        let mut seen = vec![false; self.n_vertices()];
        seen[i] = true;
        let mut patch: Vec<usize> = Vec::new();
        let mut frontier: Vec<usize> = vec![i];
        loop {
            let mut ring: Vec<usize> = Vec::new();
            for &v in &frontier {
                for &n in self.neighbors(v) {
                    if !seen[n] {
                        seen[n] = true;
                        ring.push(n);
                    }
                }
            }
            if ring.is_empty() {
                break;
            }
            ring.sort_unstable();
            patch.extend_from_slice(&ring);
            if patch.len() >= min_size {
                break;
            }
            frontier = ring;
        }
        if patch.is_empty() {
            return Err(Error::DisconnectedVertex(i));
        }
        Ok(patch)
    }
}

/// 17-significant-digit float formatting shared by all writers so output is
/// byte-reproducible.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Parse the text mesh format:
///
/// ```text
/// NV NT NB
/// x y marker      (NV lines)
/// i j k           (NT lines, 0-based)
/// i j             (NB lines, boundary edges)
/// ```
pub fn parse_mesh(text: &str) -> Result<Mesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hline, header) = lines.next().ok_or(Error::Parse {
        line: 0,
        msg: "empty file".into(),
    })?;
    let parse_usize = |line: usize, tok: &str| -> Result<usize> {
        tok.parse().map_err(|_| Error::Parse {
            line,
            msg: format!("expected integer, got '{tok}'"),
        })
    };
    let parse_f64 = |line: usize, tok: &str| -> Result<f64> {
        tok.parse().map_err(|_| Error::Parse {
            line,
            msg: format!("expected number, got '{tok}'"),
        })
    };
    let head: Vec<&str> = header.split_whitespace().collect();
    if head.len() != 3 {
        return Err(Error::Parse {
            line: hline,
            msg: "header must be 'NV NT NB'".into(),
        });
    }
    let nv = parse_usize(hline, head[0])?;
    let nt = parse_usize(hline, head[1])?;
    let nb = parse_usize(hline, head[2])?;

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines.next().ok_or(Error::Parse {
            line: hline,
            msg: "unexpected end of file in vertex section".into(),
        })?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(Error::Parse {
                line: ln,
                msg: "vertex line must be 'x y marker'".into(),
            });
        }
        vertices.push(Point2::new(parse_f64(ln, toks[0])?, parse_f64(ln, toks[1])?));
    }
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (ln, l) = lines.next().ok_or(Error::Parse {
            line: hline,
            msg: "unexpected end of file in triangle section".into(),
        })?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(Error::Parse {
                line: ln,
                msg: "triangle line must be 'i j k'".into(),
            });
        }
        triangles.push([
            parse_usize(ln, toks[0])?,
            parse_usize(ln, toks[1])?,
            parse_usize(ln, toks[2])?,
        ]);
    }
    let mut listed_edges = Vec::with_capacity(nb);
    for _ in 0..nb {
        let (ln, l) = lines.next().ok_or(Error::Parse {
            line: hline,
            msg: "unexpected end of file in boundary section".into(),
        })?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(Error::Parse {
                line: ln,
                msg: "boundary line must be 'i j'".into(),
            });
        }
        let (i, j) = (parse_usize(ln, toks[0])?, parse_usize(ln, toks[1])?);
        listed_edges.push([i.min(j), i.max(j)]);
    }

    let mesh = Mesh::new(vertices, triangles)?;
    let mut derived: Vec<[usize; 2]> = mesh.boundary_edges().to_vec();
    derived.sort_unstable();
    listed_edges.sort_unstable();
    if listed_edges != derived {
        return Err(Error::Topology(
            "boundary edges in file do not match the triangulation".into(),
        ));
    }
    Ok(mesh)
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    let text = std::fs::read_to_string(path)?;
    parse_mesh(&text)
}

/// Serialize a mesh in the text format, deterministically ordered.
pub fn mesh_to_string(mesh: &Mesh) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} {} {}",
        mesh.n_vertices(),
        mesh.n_triangles(),
        mesh.boundary_edges().len()
    );
    for i in 0..mesh.n_vertices() {
        let p = mesh.vertex(i);
        let marker = if mesh.is_boundary_vertex(i) { 1 } else { 0 };
        let _ = writeln!(out, "{} {} {}", fmt_f64(p.x), fmt_f64(p.y), marker);
    }
    for t in mesh.triangles() {
        let _ = writeln!(out, "{} {} {}", t[0], t[1], t[2]);
    }
    for e in mesh.boundary_edges() {
        let _ = writeln!(out, "{} {}", e[0], e[1]);
    }
    out
}

pub fn save_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, mesh_to_string(mesh))?;
    Ok(())
}

/// Structured triangulation of a rectangle; each grid cell is split along
/// the bottom-left/top-right diagonal, so interior vertices have six
/// neighbors.
pub fn uniform_rect_mesh(x0: f64, x1: f64, y0: f64, y1: f64, nx: usize, ny: usize) -> Result<Mesh> {
    if nx == 0 || ny == 0 || x1 <= x0 || y1 <= y0 {
        return Err(Error::InvalidParameter("empty rectangle grid".into()));
    }
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push(Point2::new(
                x0 + (x1 - x0) * i as f64 / nx as f64,
                y0 + (y1 - y0) * j as f64 / ny as f64,
            ));
        }
    }
    let idx = |i: usize, j: usize| j * (nx + 1) + i;
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (v00, v10) = (idx(i, j), idx(i + 1, j));
            let (v01, v11) = (idx(i, j + 1), idx(i + 1, j + 1));
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    Mesh::new(vertices, triangles)
}

/// Structured mesh with the interior vertices perturbed by a seeded uniform
/// jitter of `magnitude` times the cell size; used to start studies from a
/// non-symmetric triangulation.
pub fn jittered_rect_mesh(
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    nx: usize,
    ny: usize,
    magnitude: f64,
    seed: u64,
) -> Result<Mesh> {
    use rand::{Rng, SeedableRng};
    let mesh = uniform_rect_mesh(x0, x1, y0, y1, nx, ny)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let hx = (x1 - x0) / nx as f64;
    let hy = (y1 - y0) / ny as f64;
    let mut verts = mesh.vertices().to_vec();
    for (i, v) in verts.iter_mut().enumerate() {
        if !mesh.is_boundary_vertex(i) {
            v.x += hx * magnitude * rng.gen_range(-1.0..1.0);
            v.y += hy * magnitude * rng.gen_range(-1.0..1.0);
        }
    }
    Mesh::new(verts, mesh.triangles().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 2-triangle unit square.
    pub fn square2() -> Mesh {
        Mesh::new(
            vec![
                Point2::new(0.0, 0.0),
                Point2::new(1.0, 0.0),
                Point2::new(0.0, 1.0),
                Point2::new(1.0, 1.0),
            ],
            vec![[0, 1, 2], [1, 3, 2]],
        )
        .unwrap()
    }

    #[test]
    fn reference_element_is_equilateral_with_unit_area() {
        let [r0, r1, r2] = reference_vertices();
        let a = signed_area(r0, r1, r2);
        assert!((a - 1.0).abs() < 1e-14);
        let sides = [(r1 - r0).norm(), (r2 - r1).norm(), (r0 - r2).norm()];
        for s in sides {
            assert!((s - REF_SIDE).abs() < 1e-14);
        }
        // centroid at origin
        let c = (r0 + r1 + r2) / 3.0;
        assert!(c.norm() < 1e-15);
    }

    #[test]
    fn square_mesh_basics() {
        let m = square2();
        assert_eq!(m.n_triangles(), 2);
        assert_eq!(m.boundary_vertex_count(), 4);
        assert_eq!(m.boundary_edges().len(), 4);
        assert!((m.domain_area() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn clockwise_triangle_is_reoriented() {
        let m = Mesh::new(
            vec![
                Point2::new(0.0, 0.0),
                Point2::new(1.0, 0.0),
                Point2::new(0.0, 1.0),
            ],
            vec![[0, 2, 1]],
        )
        .unwrap();
        let [p0, p1, p2] = m.triangle_points(0);
        assert!(signed_area(p0, p1, p2) > 0.0);
    }

    #[test]
    fn non_manifold_edge_is_rejected() {
        let r = Mesh::new(
            vec![
                Point2::new(0.0, 0.0),
                Point2::new(1.0, 0.0),
                Point2::new(0.0, 1.0),
                Point2::new(1.0, 1.0),
                Point2::new(-1.0, -1.0),
            ],
            vec![[0, 1, 2], [1, 3, 2], [2, 1, 4]],
        );
        assert!(matches!(r, Err(Error::Topology(_))));
    }

    #[test]
    fn degenerate_triangle_is_rejected() {
        let r = Mesh::new(
            vec![
                Point2::new(0.0, 0.0),
                Point2::new(1.0, 0.0),
                Point2::new(2.0, 0.0),
                Point2::new(0.0, 1.0),
            ],
            vec![[0, 1, 3], [0, 1, 2]],
        );
        assert!(matches!(r, Err(Error::DegenerateElement { .. })));
    }

    #[test]
    fn affine_map_identity_for_reference_element() {
        let [r0, r1, r2] = reference_vertices();
        let m = Mesh::new(vec![r0, r1, r2], vec![[0, 1, 2]]).unwrap();
        let f = m.affine_map(0).unwrap();
        assert!((f.det() - 1.0).abs() < 1e-12);
        assert!((f.jacobian[0][0] - 1.0).abs() < 1e-12);
        assert!(f.jacobian[0][1].abs() < 1e-12);
        assert!(f.jacobian[1][0].abs() < 1e-12);
        assert!((f.jacobian[1][1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn affine_map_scaled_reference_has_det_4() {
        let [r0, r1, r2] = reference_vertices();
        let m = Mesh::new(
            vec![r0 * 2.0, r1 * 2.0, r2 * 2.0],
            vec![[0, 1, 2]],
        )
        .unwrap();
        assert!((m.affine_map(0).unwrap().det() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn affine_map_right_triangle_det_is_half() {
        let m = Mesh::new(
            vec![
                Point2::new(0.0, 0.0),
                Point2::new(1.0, 0.0),
                Point2::new(0.0, 1.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        assert!((m.affine_map(0).unwrap().det() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn affine_map_round_trips_all_elements() {
        let m = uniform_rect_mesh(0.0, 2.0, -1.0, 1.0, 4, 3).unwrap();
        let refs = reference_vertices();
        for k in 0..m.n_triangles() {
            let f = m.affine_map(k).unwrap();
            let pts = m.triangle_points(k);
            for (r, p) in refs.iter().zip(pts.iter()) {
                let q = f.apply(*r);
                assert!((q - *p).norm() <= 1e-12 * (1.0 + p.norm()));
            }
            assert!((f.det() - m.area(k)).abs() < 1e-12 * m.area(k).max(1.0));
        }
    }

    #[test]
    fn element_areas_sum_to_domain_area() {
        let m = uniform_rect_mesh(-1.0, 1.0, -1.0, 1.0, 7, 5).unwrap();
        let sum: f64 = (0..m.n_triangles()).map(|k| m.area(k)).sum();
        assert!((sum - 4.0).abs() < 1e-10 * 4.0);
        assert!((m.domain_area() - 4.0).abs() < 1e-10 * 4.0);
    }

    #[test]
    fn vertex_patch_first_ring_and_expansion() {
        let m = uniform_rect_mesh(0.0, 1.0, 0.0, 1.0, 4, 4).unwrap();
        // interior vertex with 6 first-ring neighbors
        let i = 2 * 5 + 2;
        let p = m.vertex_patch(i, 5).unwrap();
        assert_eq!(p.len(), 6);
        assert_eq!(p, m.neighbors(i).to_vec());
        // min_size 1 on any conforming mesh gives a nonempty first ring
        assert!(!m.vertex_patch(0, 1).unwrap().is_empty());
        // corner with 3 neighbors expands into the second ring
        let p = m.vertex_patch(0, 5).unwrap();
        assert!(p.len() >= 5);
        // monotone: smaller request is a prefix subset of larger request
        let small = m.vertex_patch(7, 3).unwrap();
        let large = m.vertex_patch(7, 9).unwrap();
        assert!(small.iter().all(|v| large.contains(v)));
    }

    #[test]
    fn vertex_patch_exhausts_small_mesh() {
        let m = square2();
        let p = m.vertex_patch(0, 5).unwrap();
        assert_eq!(p.len(), 3); // whole mesh minus the vertex itself
    }

    #[test]
    fn mesh_io_round_trip_and_validation() {
        let m = uniform_rect_mesh(0.0, 1.0, 0.0, 1.0, 2, 2).unwrap();
        let text = mesh_to_string(&m);
        let m2 = parse_mesh(&text).unwrap();
        assert_eq!(m2.n_vertices(), m.n_vertices());
        assert_eq!(m2.n_triangles(), m.n_triangles());
        assert_eq!(mesh_to_string(&m2), text);

        // smallest conforming square mesh from text
        let small = "4 2 4\n0 0 1\n1 0 1\n0 1 1\n1 1 1\n0 1 2\n1 3 2\n0 1\n0 2\n1 3\n2 3\n";
        let sm = parse_mesh(small).unwrap();
        assert_eq!(sm.n_triangles(), 2);
        assert_eq!(sm.boundary_vertex_count(), 4);

        // mismatched boundary section is a topology error
        let bad = "4 2 3\n0 0 1\n1 0 1\n0 1 1\n1 1 1\n0 1 2\n1 3 2\n0 1\n0 2\n1 3\n";
        assert!(parse_mesh(bad).is_err());

        // a file with an edge shared by three triangles is a topology error
        let nonmanifold = "5 3 6\n0 0 1\n1 0 1\n0 1 1\n1 1 1\n-1 -1 1\n0 1 2\n1 3 2\n2 1 4\n0 1\n0 2\n1 3\n2 3\n1 4\n2 4\n";
        assert!(matches!(parse_mesh(nonmanifold), Err(Error::Topology(_))));
    }
}
