//! Line-oriented text mesh format.
//!
//! ```text
//! vertices N
//! x y            (N lines)
//! triangles M
//! v0 v1 v2 region_id
//! boundary B
//! v0 v1 tag      (tag 1 = Dirichlet, 2 = Neumann)
//! ```
//!
//! Indices are 0-based; parse errors report the 1-based line number.

use std::fmt::Write as _;

use super::{build_mesh, FacetClass, Mesh2D, MeshError};

struct Lines<'a> {
    iter: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next_content(&mut self) -> Option<(usize, &'a str)> {
        for (i, line) in self.iter.by_ref() {
            let t = line.trim();
            if !t.is_empty() && !t.starts_with('#') {
                return Some((i + 1, t));
            }
        }
        None
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> MeshError {
    MeshError::Parse { line, message: message.into() }
}

fn expect_header<'a>(
    lines: &mut Lines<'a>,
    keyword: &str,
) -> Result<(usize, usize), MeshError> {
    let (ln, text) = lines
        .next_content()
        .ok_or_else(|| parse_err(0, format!("missing `{keyword}` section")))?;
    let mut parts = text.split_whitespace();
    match (parts.next(), parts.next(), parts.next()) {
        (Some(k), Some(n), None) if k == keyword => {
            let n = n
                .parse::<usize>()
                .map_err(|_| parse_err(ln, format!("invalid count `{n}`")))?;
            Ok((ln, n))
        }
        _ => Err(parse_err(ln, format!("expected `{keyword} <count>`, got `{text}`"))),
    }
}

/// Parse a mesh from the text format.
pub fn read_mesh(text: &str) -> Result<Mesh2D, MeshError> {
    let mut lines = Lines { iter: text.lines().enumerate() };

    let (_, nv) = expect_header(&mut lines, "vertices")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, t) = lines
            .next_content()
            .ok_or_else(|| parse_err(0, "unexpected end of file in vertices"))?;
        let mut parts = t.split_whitespace();
        let x = parts
            .next()
            .and_then(|s| s.parse::<f64>().ok())
            .ok_or_else(|| parse_err(ln, "expected `x y`"))?;
        let y = parts
            .next()
            .and_then(|s| s.parse::<f64>().ok())
            .ok_or_else(|| parse_err(ln, "expected `x y`"))?;
        if parts.next().is_some() {
            return Err(parse_err(ln, "trailing tokens after `x y`"));
        }
        vertices.push([x, y]);
    }

    let (_, nt) = expect_header(&mut lines, "triangles")?;
    let mut triangles = Vec::with_capacity(nt);
    let mut regions = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (ln, t) = lines
            .next_content()
            .ok_or_else(|| parse_err(0, "unexpected end of file in triangles"))?;
        let vals: Vec<&str> = t.split_whitespace().collect();
        if vals.len() != 4 {
            return Err(parse_err(ln, "expected `v0 v1 v2 region_id`"));
        }
        let mut tri = [0usize; 3];
        for (slot, s) in tri.iter_mut().zip(&vals[..3]) {
            *slot = s
                .parse::<usize>()
                .map_err(|_| parse_err(ln, format!("invalid vertex index `{s}`")))?;
        }
        let region = vals[3]
            .parse::<u32>()
            .map_err(|_| parse_err(ln, format!("invalid region id `{}`", vals[3])))?;
        triangles.push(tri);
        regions.push(region);
    }

    let (_, nb) = expect_header(&mut lines, "boundary")?;
    let mut tags = Vec::with_capacity(nb);
    for _ in 0..nb {
        let (ln, t) = lines
            .next_content()
            .ok_or_else(|| parse_err(0, "unexpected end of file in boundary"))?;
        let vals: Vec<&str> = t.split_whitespace().collect();
        if vals.len() != 3 {
            return Err(parse_err(ln, "expected `v0 v1 tag`"));
        }
        let a = vals[0]
            .parse::<usize>()
            .map_err(|_| parse_err(ln, format!("invalid vertex index `{}`", vals[0])))?;
        let b = vals[1]
            .parse::<usize>()
            .map_err(|_| parse_err(ln, format!("invalid vertex index `{}`", vals[1])))?;
        let class = match vals[2] {
            "1" => FacetClass::DirichletBdry,
            "2" => FacetClass::NeumannBdry,
            other => return Err(parse_err(ln, format!("invalid boundary tag `{other}`"))),
        };
        tags.push(([a, b], class));
    }
    if let Some((ln, t)) = lines.next_content() {
        return Err(parse_err(ln, format!("unexpected trailing content `{t}`")));
    }

    build_mesh(vertices, triangles, regions, &tags)
}

/// Serialize a mesh to the text format.
pub fn write_mesh(mesh: &Mesh2D) -> String {
    let mut out = String::new();
    writeln!(out, "vertices {}", mesh.num_vertices()).unwrap();
    for v in &mesh.vertices {
        writeln!(out, "{:.17e} {:.17e}", v[0], v[1]).unwrap();
    }
    writeln!(out, "triangles {}", mesh.num_elements()).unwrap();
    for (tri, region) in mesh.triangles.iter().zip(&mesh.regions) {
        writeln!(out, "{} {} {} {}", tri[0], tri[1], tri[2], region).unwrap();
    }
    let boundary: Vec<_> = mesh.facets.iter().filter(|f| f.is_boundary()).collect();
    writeln!(out, "boundary {}", boundary.len()).unwrap();
    for f in boundary {
        let tag = match f.class {
            FacetClass::DirichletBdry => 1,
            FacetClass::NeumannBdry => 2,
            FacetClass::Interior => unreachable!(),
        };
        writeln!(out, "{} {} {}", f.vertices[0], f.vertices[1], tag).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::{kellogg_mesh, lshape_mesh};
    use super::*;

    #[test]
    fn roundtrip_preserves_topology_and_regions() {
        for mesh in [kellogg_mesh(), lshape_mesh().refine_uniform()] {
            let text = write_mesh(&mesh);
            let back = read_mesh(&text).unwrap();
            assert_eq!(back.num_elements(), mesh.num_elements());
            assert_eq!(back.num_vertices(), mesh.num_vertices());
            assert_eq!(back.regions, mesh.regions);
            assert_eq!(back.facets.len(), mesh.facets.len());
            for (a, b) in back.vertices.iter().zip(&mesh.vertices) {
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = "vertices 2\n0 0\n1 oops\ntriangles 0\nboundary 0\n";
        match read_mesh(text) {
            Err(MeshError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        let text2 = "vertices 1\n0 0\nwrong 1\n";
        match read_mesh(text2) {
            Err(MeshError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text = "# demo\nvertices 3\n0 0\n\n1 0\n0 1\ntriangles 1\n0 1 2 0\nboundary 3\n0 1 1\n1 2 1\n0 2 1\n";
        let mesh = read_mesh(text).unwrap();
        assert_eq!(mesh.num_elements(), 1);
    }
}
