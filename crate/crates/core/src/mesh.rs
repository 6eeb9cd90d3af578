//! Conforming triangulations of the unit square, the unit disk (as an
//! inscribed polygon) and imported custom domains.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainKind {
    UnitSquare,
    UnitDiskPolygon,
    Custom,
}

impl std::str::FromStr for DomainKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit-square" => Ok(DomainKind::UnitSquare),
            "unit-disk" | "unit-disk-polygon" => Ok(DomainKind::UnitDiskPolygon),
            "custom" => Ok(DomainKind::Custom),
            other => Err(Error::Config(format!("unknown domain kind `{other}`"))),
        }
    }
}

/// A validated P1 triangulation. Triangles are stored counterclockwise and
/// `boundary_nodes` is exactly the vertex set of the edges owned by a single
/// triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    nodes: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary_nodes: Vec<usize>,
    is_boundary: Vec<bool>,
    kind: DomainKind,
}

pub(crate) fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

impl Mesh {
    /// Validates and builds a mesh. Clockwise triangles are rejected rather
    /// than silently flipped.
    pub fn new(
        nodes: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
        boundary_nodes: Vec<usize>,
        kind: DomainKind,
    ) -> Result<Self> {
        let n = nodes.len();
        if triangles.is_empty() {
            return Err(Error::InvalidMesh("mesh has no triangles".into()));
        }
        let mut edges: HashMap<(usize, usize), u32> = HashMap::new();
        for (index, tri) in triangles.iter().enumerate() {
            if let Some(&bad) = tri.iter().find(|&&v| v >= n) {
                return Err(Error::InvalidMesh(format!(
                    "triangle {index} references node {bad} but the mesh has {n} nodes"
                )));
            }
            let area = signed_area(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]);
            if !(area > 0.0) {
                return Err(Error::DegenerateTriangle { index, area });
            }
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                *edges.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        let mut on_boundary = vec![false; n];
        for (&(a, b), &count) in &edges {
            if count > 2 {
                return Err(Error::InvalidMesh(format!(
                    "edge ({a}, {b}) is shared by {count} triangles"
                )));
            }
            if count == 1 {
                on_boundary[a] = true;
                on_boundary[b] = true;
            }
        }
        let mut given = vec![false; n];
        for &b in &boundary_nodes {
            if b >= n {
                return Err(Error::InvalidMesh(format!("boundary node {b} out of range")));
            }
            given[b] = true;
        }
        if given != on_boundary {
            let first = (0..n).find(|&i| given[i] != on_boundary[i]).unwrap_or(0);
            return Err(Error::InvalidMesh(format!(
                "boundary node list disagrees with mesh topology at node {first}"
            )));
        }
        let boundary_nodes = (0..n).filter(|&i| on_boundary[i]).collect();
        Ok(Self { nodes, triangles, boundary_nodes, is_boundary: on_boundary, kind })
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.is_boundary[node]
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        signed_area(self.nodes[a], self.nodes[b], self.nodes[c])
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Longest edge length.
    pub fn h_max(&self) -> f64 {
        let mut h: f64 = 0.0;
        for tri in &self.triangles {
            for k in 0..3 {
                let (p, q) = (self.nodes[tri[k]], self.nodes[tri[(k + 1) % 3]]);
                h = h.max((p[0] - q[0]).hypot(p[1] - q[1]));
            }
        }
        h
    }

    /// Relabels nodes so that old node `i` becomes `perm[i]`.
    pub fn renumbered(&self, perm: &[usize]) -> Result<Self> {
        let n = self.node_count();
        if perm.len() != n {
            return Err(Error::Dimension { expected: n, found: perm.len() });
        }
        let mut nodes = vec![[0.0; 2]; n];
        for (old, &new) in perm.iter().enumerate() {
            nodes[new] = self.nodes[old];
        }
        let triangles = self.triangles.iter().map(|t| t.map(|v| perm[v])).collect();
        let boundary = self.boundary_nodes.iter().map(|&b| perm[b]).collect();
        Mesh::new(nodes, triangles, boundary, self.kind)
    }

    /// Writes the plain-text mesh format: a `nodes N triangles T` header,
    /// node coordinates, zero-based triangle indices and one line of
    /// boundary node indices.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "nodes {} triangles {}", self.nodes.len(), self.triangles.len())?;
        for p in &self.nodes {
            writeln!(w, "{:e} {:e}", p[0], p[1])?;
        }
        for t in &self.triangles {
            writeln!(w, "{} {} {}", t[0], t[1], t[2])?;
        }
        let line: Vec<String> = self.boundary_nodes.iter().map(|b| b.to_string()).collect();
        writeln!(w, "{}", line.join(" "))?;
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R, kind: DomainKind) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let mut next = |what: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((i, line)) => Ok((i + 1, line?)),
                None => Err(Error::Parse { line: 0, msg: format!("unexpected end of file reading {what}") }),
            }
        };
        let (line_no, header) = next("header")?;
        let tokens: Vec<&str> = header.split_whitespace().collect();
        let (n, t) = match tokens.as_slice() {
            ["nodes", n, "triangles", t] => (
                n.parse::<usize>().map_err(|e| Error::Parse { line: line_no, msg: e.to_string() })?,
                t.parse::<usize>().map_err(|e| Error::Parse { line: line_no, msg: e.to_string() })?,
            ),
            _ => {
                return Err(Error::Parse {
                    line: line_no,
                    msg: "expected `nodes N triangles T`".into(),
                })
            }
        };
        let mut nodes = Vec::with_capacity(n);
        for _ in 0..n {
            let (line_no, line) = next("node")?;
            let v = parse_numbers::<f64>(&line, line_no)?;
            if v.len() != 2 {
                return Err(Error::Parse { line: line_no, msg: "expected `x y`".into() });
            }
            nodes.push([v[0], v[1]]);
        }
        let mut triangles = Vec::with_capacity(t);
        for _ in 0..t {
            let (line_no, line) = next("triangle")?;
            let v = parse_numbers::<usize>(&line, line_no)?;
            if v.len() != 3 {
                return Err(Error::Parse { line: line_no, msg: "expected `i j k`".into() });
            }
            triangles.push([v[0], v[1], v[2]]);
        }
        let (line_no, line) = next("boundary list")?;
        let boundary = parse_numbers::<usize>(&line, line_no)?;
        Mesh::new(nodes, triangles, boundary, kind)
    }
}

fn parse_numbers<T: std::str::FromStr>(line: &str, line_no: usize) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    line.split_whitespace()
        .map(|tok| tok.parse::<T>().map_err(|e| Error::Parse { line: line_no, msg: format!("`{tok}`: {e}") }))
        .collect()
}

/// Builds one of the two named domains. `Custom` meshes must be imported.
pub fn build_mesh(kind: DomainKind, resolution: usize) -> Result<Mesh> {
    match kind {
        DomainKind::UnitSquare => unit_square(resolution),
        DomainKind::UnitDiskPolygon => unit_disk(resolution, None),
        DomainKind::Custom => Err(Error::Config(
            "custom domains are read from a mesh file, not generated".into(),
        )),
    }
}

/// Structured mesh of [0,1]² with `n` cells per side, each cell split along
/// its (0,0)-(1,1) diagonal. The two corner cells at (1,0) and (0,1) use the
/// other diagonal so that no triangle has all three vertices on the boundary.
pub fn unit_square(n: usize) -> Result<Mesh> {
    if n < 2 {
        return Err(Error::Config(format!("resolution must be at least 2, got {n}")));
    }
    let stride = n + 1;
    let idx = |i: usize, j: usize| j * stride + i;
    let mut nodes = Vec::with_capacity(stride * stride);
    let mut boundary = Vec::new();
    for j in 0..=n {
        for i in 0..=n {
            nodes.push([i as f64 / n as f64, j as f64 / n as f64]);
            if i == 0 || j == 0 || i == n || j == n {
                boundary.push(idx(i, j));
            }
        }
    }
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (v00, v10, v11, v01) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            if (i == n - 1 && j == 0) || (i == 0 && j == n - 1) {
                triangles.push([v00, v10, v01]);
                triangles.push([v10, v11, v01]);
            } else {
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            }
        }
    }
    Mesh::new(nodes, triangles, boundary, DomainKind::UnitSquare)
}

/// Ring mesh of the regular polygon with `6·rings` vertices inscribed in the
/// unit circle. Ring `k` carries `6k` nodes on a circle. When
/// `aligned_radius` is given, one ring sits exactly on that circle and the
/// remaining rings are spaced uniformly on either side of it.
pub fn unit_disk(rings: usize, aligned_radius: Option<f64>) -> Result<Mesh> {
    if rings < 2 {
        return Err(Error::Config(format!("resolution must be at least 2, got {rings}")));
    }
    let radii: Vec<f64> = match aligned_radius {
        None => (0..=rings).map(|k| k as f64 / rings as f64).collect(),
        Some(r) => {
            if !(r > 0.0 && r < 1.0) {
                return Err(Error::Config(format!("aligned radius {r} must lie in (0,1)")));
            }
            let ks = ((r * rings as f64).round() as usize).clamp(1, rings - 1);
            (0..=rings)
                .map(|k| {
                    if k <= ks {
                        r * k as f64 / ks as f64
                    } else {
                        r + (1.0 - r) * (k - ks) as f64 / (rings - ks) as f64
                    }
                })
                .collect()
        }
    };

    let mut nodes = vec![[0.0, 0.0]];
    let mut ring_start = vec![0usize];
    for (k, &rad) in radii.iter().enumerate().skip(1) {
        ring_start.push(nodes.len());
        let count = 6 * k;
        for j in 0..count {
            let theta = 2.0 * PI * j as f64 / count as f64;
            nodes.push([rad * theta.cos(), rad * theta.sin()]);
        }
    }

    let mut triangles = Vec::with_capacity(6 * rings * rings);
    let mut push = |tri: [usize; 3], nodes: &[[f64; 2]]| {
        if signed_area(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]) > 0.0 {
            triangles.push(tri);
        } else {
            triangles.push([tri[0], tri[2], tri[1]]);
        }
    };
    for j in 0..6 {
        push([0, 1 + j, 1 + (j + 1) % 6], &nodes);
    }
    for k in 2..=rings {
        let (na, nb) = (6 * (k - 1), 6 * k);
        let (sa, sb) = (ring_start[k - 1], ring_start[k]);
        let a = |i: usize| sa + i % na;
        let b = |j: usize| sb + j % nb;
        let (mut i, mut j) = (0, 0);
        while i < na || j < nb {
            let next_a = (i + 1) as f64 / na as f64;
            let next_b = (j + 1) as f64 / nb as f64;
            if j < nb && (i == na || next_b <= next_a) {
                push([a(i), b(j), b(j + 1)], &nodes);
                j += 1;
            } else {
                push([a(i), b(j), a(i + 1)], &nodes);
                i += 1;
            }
        }
    }
    let boundary = (ring_start[rings]..nodes.len()).collect();
    Mesh::new(nodes, triangles, boundary, DomainKind::UnitDiskPolygon)
}
