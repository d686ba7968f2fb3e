//! Conforming 2D simplicial meshes with full skeleton data.
//!
//! A [`TriMesh`] stores vertices, positively oriented triangles and the list
//! of interfaces (interior edges shared by exactly two elements, boundary
//! edges owned by one). Interfaces carry the data needed by interior-penalty
//! assembly: the two adjacent elements, a unit normal pointing out of the
//! "plus" element and the edge length.
//!
//! Meshes are immutable after construction and safe to share across threads.

mod io;

pub use io::{read_json, write_json};

use crate::error::MeshError;
use std::collections::BTreeMap;

/// Axis-aligned rectangle used as the computational domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub const UNIT: Rect = Rect {
        x0: 0.0,
        y0: 0.0,
        x1: 1.0,
        y1: 1.0,
    };

    /// The square (-1, 1)^2.
    pub const BIUNIT: Rect = Rect {
        x0: -1.0,
        y0: -1.0,
        x1: 1.0,
        y1: 1.0,
    };

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn diameter(&self) -> f64 {
        self.width().hypot(self.height())
    }
}

/// An edge of the mesh skeleton.
///
/// `endpoints` are ordered counterclockwise as seen from the plus element, so
/// `unit_normal` (which points out of the plus element) is the edge direction
/// rotated by -90 degrees. On boundary interfaces `minus_element ==
/// plus_element` and the normal points out of the domain.
#[derive(Clone, Copy, Debug)]
pub struct Interface {
    pub endpoints: [usize; 2],
    pub plus_element: usize,
    pub minus_element: usize,
    pub unit_normal: [f64; 2],
    pub length: f64,
}

impl Interface {
    pub fn is_boundary(&self) -> bool {
        self.plus_element == self.minus_element
    }
}

/// Conforming triangular mesh with oriented skeleton.
#[derive(Clone, Debug)]
pub struct TriMesh {
    pub vertices: Vec<[f64; 2]>,
    /// Vertex triples, counterclockwise (positive signed area).
    pub elements: Vec<[usize; 3]>,
    pub interfaces: Vec<Interface>,
    /// Parallel to `interfaces`.
    pub boundary_flags: Vec<bool>,
    areas: Vec<f64>,
    /// Number of interfaces on each element boundary (3 on conforming meshes).
    interface_counts: Vec<usize>,
}

fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

impl TriMesh {
    /// Builds a mesh from raw vertices and element triples.
    ///
    /// Elements with negative orientation are flipped; zero-area elements and
    /// edges shared by more than two elements are rejected. The interface
    /// list is always rebuilt here, never taken from the input.
    pub fn from_raw(vertices: Vec<[f64; 2]>, elements: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        let mut elements = elements;
        let mut areas = Vec::with_capacity(elements.len());
        for (k, elem) in elements.iter_mut().enumerate() {
            for &v in elem.iter() {
                if v >= vertices.len() {
                    return Err(MeshError::VertexOutOfRange {
                        element: k,
                        vertex: v,
                        n_vertices: vertices.len(),
                    });
                }
            }
            let mut area = signed_area(vertices[elem[0]], vertices[elem[1]], vertices[elem[2]]);
            if area < 0.0 {
                elem.swap(1, 2);
                area = -area;
            }
            let scale = [elem[0], elem[1], elem[2]]
                .iter()
                .map(|&v| vertices[v][0].abs().max(vertices[v][1].abs()))
                .fold(1.0_f64, f64::max);
            if area <= 1e-14 * scale * scale {
                return Err(MeshError::ZeroAreaElement { element: k });
            }
            areas.push(area);
        }

        // Edge -> (element, local edge) incidence. Local edge i runs from
        // vertex i to vertex i+1 (mod 3) in counterclockwise order.
        let mut edge_map: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
        for (k, elem) in elements.iter().enumerate() {
            for le in 0..3 {
                let (v0, v1) = (elem[le], elem[(le + 1) % 3]);
                let key = (v0.min(v1), v0.max(v1));
                edge_map.entry(key).or_default().push((k, le));
            }
        }

        let mut interfaces = Vec::with_capacity(edge_map.len());
        let mut boundary_flags = Vec::with_capacity(edge_map.len());
        let mut interface_counts = vec![0usize; elements.len()];
        for (&(v0, v1), incident) in &edge_map {
            if incident.len() > 2 {
                return Err(MeshError::NonConforming {
                    v0,
                    v1,
                    count: incident.len(),
                });
            }
            // Plus element: the one with the smaller index.
            let &(plus, plus_edge) = incident
                .iter()
                .min_by_key(|(k, _)| *k)
                .expect("incident list is nonempty");
            let minus = if incident.len() == 2 {
                incident.iter().map(|(k, _)| *k).max().unwrap()
            } else {
                plus
            };
            // Endpoints in counterclockwise order of the plus element.
            let a = elements[plus][plus_edge];
            let b = elements[plus][(plus_edge + 1) % 3];
            let (pa, pb) = (vertices[a], vertices[b]);
            let (dx, dy) = (pb[0] - pa[0], pb[1] - pa[1]);
            let length = dx.hypot(dy);
            interfaces.push(Interface {
                endpoints: [a, b],
                plus_element: plus,
                minus_element: minus,
                unit_normal: [dy / length, -dx / length],
                length,
            });
            boundary_flags.push(incident.len() == 1);
            for &(k, _) in incident {
                interface_counts[k] += 1;
            }
        }

        Ok(TriMesh {
            vertices,
            elements,
            interfaces,
            boundary_flags,
            areas,
            interface_counts,
        })
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn n_interfaces(&self) -> usize {
        self.interfaces.len()
    }

    /// Area |K| of element `k`.
    pub fn area(&self, k: usize) -> f64 {
        self.areas[k]
    }

    /// Number of interfaces on the boundary of element `k` (the value m_K).
    pub fn interfaces_of(&self, k: usize) -> usize {
        self.interface_counts[k]
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    /// Diameter of element `k` (longest edge).
    pub fn diameter(&self, k: usize) -> f64 {
        let [a, b, c] = self.elements[k];
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        let d = |u: [f64; 2], v: [f64; 2]| (u[0] - v[0]).hypot(u[1] - v[1]);
        d(pa, pb).max(d(pb, pc)).max(d(pc, pa))
    }

    /// Largest element diameter h_max.
    pub fn h_max(&self) -> f64 {
        (0..self.n_elements())
            .map(|k| self.diameter(k))
            .fold(0.0, f64::max)
    }

    /// Vertex coordinates of element `k`.
    pub fn element_vertices(&self, k: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.elements[k];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }
}

/// Builds a structured triangulation of `domain` with `n x n` grid cells,
/// each split along the lower-left to upper-right diagonal, where `n` is the
/// smallest count for which every element diameter is at most `target_h`.
pub fn build_structured_mesh(domain: Rect, target_h: f64) -> Result<TriMesh, MeshError> {
    if !(domain.width() > 0.0 && domain.height() > 0.0) {
        return Err(MeshError::DegenerateDomain);
    }
    let diameter = domain.diameter();
    if !(target_h > 0.0) || target_h > diameter {
        return Err(MeshError::TargetTooCoarse {
            target_h,
            diameter,
        });
    }
    // Cell diagonal diam/n must not exceed target_h.
    let n = (diameter / target_h).ceil() as usize;
    let n = if (diameter / n as f64) > target_h {
        n + 1
    } else {
        n
    };

    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([
                domain.x0 + domain.width() * i as f64 / n as f64,
                domain.y0 + domain.height() * j as f64 / n as f64,
            ]);
        }
    }
    let idx = |i: usize, j: usize| i + j * (n + 1);
    let mut elements = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            elements.push([a, b, c]);
            elements.push([a, c, d]);
        }
    }
    TriMesh::from_raw(vertices, elements)
}

/// Splits every triangle into 4 congruent children through edge midpoints.
pub fn refine_uniform(mesh: &TriMesh) -> Result<TriMesh, MeshError> {
    let mut vertices = mesh.vertices.clone();
    let mut midpoints: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut midpoint = |v0: usize, v1: usize, vertices: &mut Vec<[f64; 2]>| -> usize {
        let key = (v0.min(v1), v0.max(v1));
        *midpoints.entry(key).or_insert_with(|| {
            let (a, b) = (vertices[v0], vertices[v1]);
            vertices.push([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]);
            vertices.len() - 1
        })
    };
    let mut elements = Vec::with_capacity(4 * mesh.n_elements());
    for &[a, b, c] in &mesh.elements {
        let ab = midpoint(a, b, &mut vertices);
        let bc = midpoint(b, c, &mut vertices);
        let ca = midpoint(c, a, &mut vertices);
        elements.push([a, ab, ca]);
        elements.push([ab, b, bc]);
        elements.push([ca, bc, c]);
        elements.push([ab, bc, ca]);
    }
    TriMesh::from_raw(vertices, elements)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_element_mesh() -> TriMesh {
        build_structured_mesh(Rect::UNIT, std::f64::consts::SQRT_2).unwrap()
    }

    #[test]
    fn structured_unit_square_h02() {
        let mesh = build_structured_mesh(Rect::UNIT, 0.2).unwrap();
        // Smallest n with sqrt(2)/n <= 0.2 is 8.
        assert_eq!(mesh.n_elements(), 2 * 8 * 8);
        let h = mesh.h_max();
        assert!((h - std::f64::consts::SQRT_2 / 8.0).abs() < 1e-14);
        assert!(h <= 0.2);
    }

    #[test]
    fn structured_minimal_split() {
        let mesh = two_element_mesh();
        assert_eq!(mesh.n_elements(), 2);
        assert_eq!(mesh.n_interfaces(), 5);
        let n_boundary = mesh.boundary_flags.iter().filter(|&&b| b).count();
        assert_eq!(n_boundary, 4);
    }

    #[test]
    fn structured_biunit_square() {
        let mesh = build_structured_mesh(Rect::BIUNIT, 0.2).unwrap();
        // Smallest n with 2 sqrt(2)/n <= 0.2 is 15.
        assert_eq!(mesh.n_elements(), 2 * 15 * 15);
        assert!(mesh.h_max() <= 0.2);
    }

    #[test]
    fn structured_rejects_oversized_target() {
        let err = build_structured_mesh(Rect::UNIT, 2.0).unwrap_err();
        assert!(matches!(err, MeshError::TargetTooCoarse { .. }));
    }

    #[test]
    fn refine_halves_h_and_quadruples_elements() {
        let mesh = two_element_mesh();
        let fine = refine_uniform(&mesh).unwrap();
        assert_eq!(fine.n_elements(), 8);
        assert!((fine.h_max() - std::f64::consts::SQRT_2 / 2.0).abs() < 1e-14);
        let finer = refine_uniform(&fine).unwrap();
        assert!((finer.h_max() - mesh.h_max() / 4.0).abs() < 1e-14);
    }

    #[test]
    fn refine_preserves_area() {
        let mesh = build_structured_mesh(Rect::BIUNIT, 0.9).unwrap();
        let fine = refine_uniform(&mesh).unwrap();
        let (a0, a1) = (mesh.total_area(), fine.total_area());
        assert!((a0 - a1).abs() <= 1e-13 * a0);
    }

    /// Sorted element point sets, for comparing meshes up to vertex ordering.
    fn element_point_set(mesh: &TriMesh) -> Vec<[[i64; 2]; 3]> {
        let quant = |p: [f64; 2]| [(p[0] * 1e12).round() as i64, (p[1] * 1e12).round() as i64];
        let mut elems: Vec<[[i64; 2]; 3]> = mesh
            .elements
            .iter()
            .map(|&[a, b, c]| {
                let mut pts = [
                    quant(mesh.vertices[a]),
                    quant(mesh.vertices[b]),
                    quant(mesh.vertices[c]),
                ];
                pts.sort();
                pts
            })
            .collect();
        elems.sort();
        elems
    }

    #[test]
    fn refine_matches_structured() {
        let refined = refine_uniform(&build_structured_mesh(Rect::UNIT, std::f64::consts::SQRT_2 / 8.0).unwrap())
            .unwrap();
        let direct = build_structured_mesh(Rect::UNIT, std::f64::consts::SQRT_2 / 16.0).unwrap();
        assert_eq!(element_point_set(&refined), element_point_set(&direct));
    }

    #[test]
    fn skeleton_partitions_element_boundaries() {
        for mesh in [
            two_element_mesh(),
            build_structured_mesh(Rect::UNIT, 0.3).unwrap(),
            refine_uniform(&build_structured_mesh(Rect::BIUNIT, 1.2).unwrap()).unwrap(),
        ] {
            let perim_sum: f64 = (0..mesh.n_elements())
                .map(|k| {
                    let [a, b, c] = mesh.element_vertices(k);
                    let d = |u: [f64; 2], v: [f64; 2]| (u[0] - v[0]).hypot(u[1] - v[1]);
                    d(a, b) + d(b, c) + d(c, a)
                })
                .sum();
            let skel_sum: f64 = mesh
                .interfaces
                .iter()
                .zip(&mesh.boundary_flags)
                .map(|(f, &bnd)| if bnd { f.length } else { 2.0 * f.length })
                .sum();
            assert!((perim_sum - skel_sum).abs() <= 1e-12 * perim_sum);
            for (k, &m) in mesh.interface_counts.iter().enumerate() {
                assert_eq!(m, 3, "element {k} should have 3 interfaces");
            }
        }
    }

    #[test]
    fn interior_normals_are_opposite() {
        let mesh = build_structured_mesh(Rect::UNIT, 0.4).unwrap();
        for f in mesh.interfaces.iter().filter(|f| !f.is_boundary()) {
            // Recompute the outward normal from the minus element: find the
            // matching counterclockwise edge and rotate it by -90 degrees.
            let elem = mesh.elements[f.minus_element];
            let mut found = false;
            for le in 0..3 {
                let (v0, v1) = (elem[le], elem[(le + 1) % 3]);
                if [v0, v1] == [f.endpoints[1], f.endpoints[0]] {
                    let (a, b) = (mesh.vertices[v0], mesh.vertices[v1]);
                    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
                    let len = dx.hypot(dy);
                    let n_minus = [dy / len, -dx / len];
                    assert_eq!(n_minus[0], -f.unit_normal[0]);
                    assert_eq!(n_minus[1], -f.unit_normal[1]);
                    found = true;
                }
            }
            assert!(found, "minus element must contain the reversed edge");
        }
    }

    #[test]
    fn normals_have_unit_length_and_boundary_normals_point_outward() {
        let mesh = build_structured_mesh(Rect::UNIT, 0.5).unwrap();
        for (f, &bnd) in mesh.interfaces.iter().zip(&mesh.boundary_flags) {
            let n = f.unit_normal;
            assert!((n[0].hypot(n[1]) - 1.0).abs() < 1e-14);
            let (a, b) = (mesh.vertices[f.endpoints[0]], mesh.vertices[f.endpoints[1]]);
            assert!((f.length - (a[0] - b[0]).hypot(a[1] - b[1])).abs() < 1e-14);
            if bnd {
                let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
                let probe = [mid[0] + 1e-8 * n[0], mid[1] + 1e-8 * n[1]];
                let outside = probe[0] < 0.0 || probe[0] > 1.0 || probe[1] < 0.0 || probe[1] > 1.0;
                assert!(outside, "boundary normal must point out of the domain");
            }
        }
    }
}
