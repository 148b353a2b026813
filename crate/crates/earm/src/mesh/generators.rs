//! Structured initial meshes for the built-in domains.

use std::collections::BTreeMap;

use super::{build_mesh, FacetClass, Mesh2D};

struct MeshBuilder {
    vertices: Vec<[f64; 2]>,
    index: BTreeMap<(u64, u64), usize>,
    triangles: Vec<[usize; 3]>,
    regions: Vec<u32>,
}

impl MeshBuilder {
    fn new() -> Self {
        MeshBuilder {
            vertices: Vec::new(),
            index: BTreeMap::new(),
            triangles: Vec::new(),
            regions: Vec::new(),
        }
    }

    fn vertex(&mut self, p: [f64; 2]) -> usize {
        let key = (p[0].to_bits(), p[1].to_bits());
        *self.index.entry(key).or_insert_with(|| {
            self.vertices.push(p);
            self.vertices.len() - 1
        })
    }

    /// Four triangles around the cell center (criss-cross pattern).
    fn criss_cross_cell(&mut self, x0: f64, x1: f64, y0: f64, y1: f64, region: u32) {
        let c = self.vertex([0.5 * (x0 + x1), 0.5 * (y0 + y1)]);
        let corners = [
            self.vertex([x0, y0]),
            self.vertex([x1, y0]),
            self.vertex([x1, y1]),
            self.vertex([x0, y1]),
        ];
        for i in 0..4 {
            self.triangles.push([corners[i], corners[(i + 1) % 4], c]);
            self.regions.push(region);
        }
    }

    /// Two triangles split along the lower-left to upper-right diagonal.
    fn diagonal_cell(&mut self, x0: f64, x1: f64, y0: f64, y1: f64, region: u32) {
        let p00 = self.vertex([x0, y0]);
        let p10 = self.vertex([x1, y0]);
        let p11 = self.vertex([x1, y1]);
        let p01 = self.vertex([x0, y1]);
        self.triangles.push([p00, p10, p11]);
        self.triangles.push([p00, p11, p01]);
        self.regions.push(region);
        self.regions.push(region);
    }

    fn finish(self, class: FacetClass) -> Mesh2D {
        // All boundary edges get the same class; count incidences first.
        let mut count: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for tri in &self.triangles {
            for i in 0..3 {
                *count
                    .entry(super::edge_key(tri[i], tri[(i + 1) % 3]))
                    .or_default() += 1;
            }
        }
        let tags: Vec<([usize; 2], FacetClass)> = count
            .iter()
            .filter(|(_, &c)| c == 1)
            .map(|(&(a, b), _)| ([a, b], class))
            .collect();
        build_mesh(self.vertices, self.triangles, self.regions, &tags)
            .expect("structured generator produced an invalid mesh")
    }
}

/// Unit square (0,1)^2 with n x n cells of two triangles each, all-Dirichlet
/// boundary, single coefficient region 0.
pub fn unit_square_mesh(n: usize) -> Mesh2D {
    assert!(n >= 1);
    let mut b = MeshBuilder::new();
    for i in 0..n {
        for j in 0..n {
            let (x0, x1) = (i as f64 / n as f64, (i + 1) as f64 / n as f64);
            let (y0, y1) = (j as f64 / n as f64, (j + 1) as f64 / n as f64);
            b.diagonal_cell(x0, x1, y0, y1, 0);
        }
    }
    b.finish(FacetClass::DirichletBdry)
}

/// The square (-1,1)^2 aligned with the Kellogg checkerboard: one
/// criss-crossed cell per quadrant, region 1 where x*y > 0 and region 0
/// elsewhere. All-Dirichlet boundary.
pub fn kellogg_mesh() -> Mesh2D {
    let mut b = MeshBuilder::new();
    for &(x0, y0) in &[(0.0, 0.0), (-1.0, 0.0), (-1.0, -1.0), (0.0, -1.0)] {
        let cx = x0 + 0.5;
        let cy = y0 + 0.5;
        let region = if cx * cy > 0.0 { 1 } else { 0 };
        b.criss_cross_cell(x0, x0 + 1.0, y0, y0 + 1.0, region);
    }
    b.finish(FacetClass::DirichletBdry)
}

/// L-shaped domain (-1,1)^2 minus the fourth-quadrant square
/// [0,1] x [-1,0]; three criss-crossed unit cells, all-Dirichlet.
pub fn lshape_mesh() -> Mesh2D {
    let mut b = MeshBuilder::new();
    for &(x0, y0) in &[(0.0, 0.0), (-1.0, 0.0), (-1.0, -1.0)] {
        b.criss_cross_cell(x0, x0 + 1.0, y0, y0 + 1.0, 0);
    }
    b.finish(FacetClass::DirichletBdry)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_counts() {
        assert_eq!(unit_square_mesh(2).num_elements(), 8);
        assert_eq!(kellogg_mesh().num_elements(), 16);
        assert_eq!(lshape_mesh().num_elements(), 12);
    }

    #[test]
    fn kellogg_regions_follow_quadrant_sign() {
        let mesh = kellogg_mesh();
        for e in 0..mesh.num_elements() {
            let c = mesh.centroid(e);
            assert_eq!(mesh.regions[e], u32::from(c[0] * c[1] > 0.0));
        }
    }

    #[test]
    fn lshape_excludes_fourth_quadrant() {
        let mesh = lshape_mesh();
        for e in 0..mesh.num_elements() {
            let c = mesh.centroid(e);
            assert!(!(c[0] > 0.0 && c[1] < 0.0));
        }
    }
}
