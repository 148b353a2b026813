//! Newest-vertex bisection with recursive closure.
//!
//! Marked-edge fixpoint formulation: the refinement edges of marked elements
//! seed an edge set; any element one of whose edges is marked must also have
//! its refinement edge marked. Once the set is closed, each element is
//! bisected according to which of its edges carry a midpoint, which yields a
//! conforming mesh in a single sweep (at most two bisection levels per
//! element).

use std::collections::{BTreeMap, BTreeSet};

use super::{edge_key, FacetClass, Mesh2D};

impl Mesh2D {
    /// Refine all elements.
    pub fn refine_uniform(&self) -> Mesh2D {
        let all: Vec<usize> = (0..self.num_elements()).collect();
        self.refine(&all)
    }

    /// Bisect every marked element (plus closure). Children inherit the
    /// parent's region id; boundary tags are inherited by the two halves of
    /// a split boundary edge.
    pub fn refine(&self, marked: &[usize]) -> Mesh2D {
        let mut edge_marked: BTreeSet<(usize, usize)> = BTreeSet::new();
        let mut edge_elems: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (e, tri) in self.triangles.iter().enumerate() {
            for i in 0..3 {
                edge_elems
                    .entry(edge_key(tri[i], tri[(i + 1) % 3]))
                    .or_default()
                    .push(e);
            }
        }

        let refinement_edge = |e: usize| edge_key(self.triangles[e][0], self.triangles[e][1]);

        // A marked element has all three edges bisected, so it splits into
        // four children; closure elements split into two or four.
        let mut queue: Vec<usize> = Vec::new();
        for &e in marked {
            let tri = self.triangles[e];
            for i in 0..3 {
                let key = edge_key(tri[i], tri[(i + 1) % 3]);
                if edge_marked.insert(key) {
                    queue.extend(edge_elems[&key].iter().copied());
                }
            }
        }
        while let Some(e) = queue.pop() {
            let tri = self.triangles[e];
            let any_marked = (0..3)
                .any(|i| edge_marked.contains(&edge_key(tri[i], tri[(i + 1) % 3])));
            if any_marked {
                let key = refinement_edge(e);
                if edge_marked.insert(key) {
                    queue.extend(edge_elems[&key].iter().copied());
                }
            }
        }

        // Midpoints, in sorted edge order for determinism.
        let mut vertices = self.vertices.clone();
        let mut midpoint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for &(a, b) in &edge_marked {
            let m = [
                0.5 * (vertices[a][0] + vertices[b][0]),
                0.5 * (vertices[a][1] + vertices[b][1]),
            ];
            midpoint.insert((a, b), vertices.len());
            vertices.push(m);
        }

        let mut triangles = Vec::with_capacity(self.triangles.len() * 2);
        let mut regions = Vec::new();
        let mut parents = Vec::new();
        for (e, tri) in self.triangles.iter().enumerate() {
            let [a, b, c] = *tri;
            match midpoint.get(&edge_key(a, b)) {
                None => {
                    triangles.push(*tri);
                    regions.push(self.regions[e]);
                    parents.push(Some(e));
                }
                Some(&m) => {
                    // First bisection: (a,b,c) -> (c,a,m) and (b,c,m); the
                    // children's refinement edges are the remaining old
                    // edges, so a second bisection may be needed.
                    for child in [[c, a, m], [b, c, m]] {
                        match midpoint.get(&edge_key(child[0], child[1])) {
                            None => {
                                triangles.push(child);
                                regions.push(self.regions[e]);
                                parents.push(Some(e));
                            }
                            Some(&m2) => {
                                let [p, q, r] = child;
                                for grand in [[r, p, m2], [q, r, m2]] {
                                    debug_assert!(
                                        !edge_marked.contains(&edge_key(grand[0], grand[1]))
                                    );
                                    triangles.push(grand);
                                    regions.push(self.regions[e]);
                                    parents.push(Some(e));
                                }
                            }
                        }
                    }
                }
            }
        }

        // Boundary tags: split tagged edges at their midpoints.
        let mut tags = Vec::new();
        for f in &self.facets {
            if f.class == FacetClass::Interior {
                continue;
            }
            let [a, b] = f.vertices;
            match midpoint.get(&edge_key(a, b)) {
                None => tags.push(([a, b], f.class)),
                Some(&m) => {
                    tags.push(([a, m], f.class));
                    tags.push(([m, b], f.class));
                }
            }
        }

        Mesh2D::build(vertices, triangles, regions, parents, &tags, false)
            .expect("refinement produced an invalid mesh")
    }
}

#[cfg(test)]
mod tests {
    use super::super::{build_mesh, edge_key, kellogg_mesh, unit_square_mesh, FacetClass};
    use std::collections::BTreeMap;

    #[test]
    fn uniform_refinement_of_square_is_conforming() {
        let mesh = unit_square_mesh(1);
        assert_eq!(mesh.num_elements(), 2);
        let fine = mesh.refine(&[0, 1]);
        // All edges of each parent are bisected, so each parent splits into
        // 4 children.
        assert_eq!(fine.num_elements(), 8);
        assert!(fine.min_angle() > 0.0);
    }

    #[test]
    fn single_marked_element_forces_closure() {
        let mesh = unit_square_mesh(1);
        let fine = mesh.refine(&[0]);
        // The refinement edge of element 0 is the shared diagonal; closure
        // bisects the neighbor too. build() would reject hanging vertices.
        assert!(fine.num_elements() >= 4);
        assert_eq!(
            fine.num_elements(),
            fine.parents.iter().filter(|p| p.is_some()).count()
        );
    }

    #[test]
    fn unmarked_far_elements_are_unchanged() {
        let mesh = unit_square_mesh(4);
        let far: Vec<[usize; 3]> = mesh
            .triangles
            .iter()
            .copied()
            .filter(|t| t.iter().all(|&v| mesh.vertices[v][0] > 0.6))
            .collect();
        // Mark one corner element near x=0; elements in the far corner keep
        // their vertex triples.
        let marked = vec![0usize];
        let fine = mesh.refine(&marked);
        for t in &far {
            assert!(fine.triangles.contains(t));
        }
    }

    #[test]
    fn ten_uniform_sweeps_keep_angles_and_multiply_count() {
        let mut mesh = unit_square_mesh(1);
        let first_angle = mesh.min_angle();
        let mut counts = vec![mesh.num_elements()];
        let mut min_angle = first_angle;
        for _ in 0..10 {
            mesh = mesh.refine_uniform();
            counts.push(mesh.num_elements());
            min_angle = min_angle.min(mesh.min_angle());
        }
        for w in counts.windows(2) {
            assert_eq!(w[1], 4 * w[0]);
        }
        // Newest-vertex bisection generates finitely many similarity
        // classes; the minimum angle must stabilize, not degrade.
        assert!(min_angle > first_angle / 2.5);
        let final_angle = mesh.min_angle();
        assert!((final_angle - min_angle).abs() < 1e-12);
    }

    #[test]
    fn regions_are_inherited() {
        let mesh = kellogg_mesh();
        let fine = mesh.refine_uniform().refine_uniform();
        for e in 0..fine.num_elements() {
            let c = fine.centroid(e);
            let expect = if c[0] * c[1] > 0.0 { 1 } else { 0 };
            assert_eq!(fine.regions[e], expect, "element {e} centroid {c:?}");
        }
    }

    #[test]
    fn boundary_tags_are_inherited() {
        let vertices = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let triangles = vec![[0, 1, 2], [0, 2, 3]];
        // Bottom edge Neumann, rest Dirichlet.
        let mut count: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for tri in &triangles {
            for i in 0..3 {
                *count.entry(edge_key(tri[i], tri[(i + 1) % 3])).or_default() += 1;
            }
        }
        let tags: Vec<([usize; 2], FacetClass)> = count
            .iter()
            .filter(|(_, &c)| c == 1)
            .map(|(&(a, b), _)| {
                let class = if (a, b) == (0, 1) {
                    FacetClass::NeumannBdry
                } else {
                    FacetClass::DirichletBdry
                };
                ([a, b], class)
            })
            .collect();
        let mesh = build_mesh(vertices, triangles, vec![0, 0], &tags).unwrap();
        let fine = mesh.refine_uniform();
        for f in fine.facets.iter().filter(|f| f.is_boundary()) {
            let mid = [
                0.5 * (fine.vertices[f.vertices[0]][0] + fine.vertices[f.vertices[1]][0]),
                0.5 * (fine.vertices[f.vertices[0]][1] + fine.vertices[f.vertices[1]][1]),
            ];
            if mid[1].abs() < 1e-14 {
                assert_eq!(f.class, FacetClass::NeumannBdry);
            } else {
                assert_eq!(f.class, FacetClass::DirichletBdry);
            }
        }
    }
}
