//! Connected undirected graphs with ordered edges and positive weights.
//!
//! Vertices are numbered `1..=N` in every public report (`edges()`, the
//! edge-list text format). Solvers index arrays with the zero-based pairs
//! returned by [`Graph::index_pairs`]; both views list edges in the same
//! order and always with the smaller vertex first.

use std::collections::HashSet;

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n_vertices: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Builds a graph from 1-based vertex pairs.
    ///
    /// Pairs are normalized so that the smaller vertex comes first. Self
    /// loops, duplicate edges, out-of-range vertices and disconnected
    /// graphs are rejected.
    pub fn new(n_vertices: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut zero = Vec::with_capacity(pairs.len());
        for &(a, b) in pairs {
            if a == 0 || b == 0 || a > n_vertices || b > n_vertices {
                return Err(Error::InvalidGraph(format!(
                    "edge ({a}, {b}) out of range 1..={n_vertices}"
                )));
            }
            zero.push((a - 1, b - 1));
        }
        Self::from_index_pairs(n_vertices, zero)
    }

    /// Builds a graph from zero-based vertex pairs.
    pub fn from_index_pairs(n_vertices: usize, pairs: Vec<(usize, usize)>) -> Result<Self> {
        if n_vertices == 0 {
            return Err(Error::InvalidGraph("graph has no vertices".into()));
        }
        let mut seen = HashSet::with_capacity(pairs.len());
        let mut edges = Vec::with_capacity(pairs.len());
        for (a, b) in pairs {
            if a >= n_vertices || b >= n_vertices {
                return Err(Error::InvalidGraph(format!(
                    "edge ({}, {}) out of range 1..={n_vertices}",
                    a + 1,
                    b + 1
                )));
            }
            if a == b {
                return Err(Error::InvalidGraph(format!("self loop at vertex {}", a + 1)));
            }
            let e = (a.min(b), a.max(b));
            if !seen.insert(e) {
                return Err(Error::InvalidGraph(format!(
                    "duplicate edge ({}, {})",
                    e.0 + 1,
                    e.1 + 1
                )));
            }
            edges.push(e);
        }
        if !is_connected(n_vertices, &edges) {
            return Err(Error::InvalidGraph("graph is not connected".into()));
        }
        Ok(Self { n_vertices, edges })
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edges as 1-based `(n, m)` pairs with `n < m`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().map(|&(a, b)| (a + 1, b + 1))
    }

    /// Edges as zero-based storage indices, in the same order as [`Graph::edges`].
    pub fn index_pairs(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Per-vertex list of `(neighbour, edge index)`, zero-based, in edge order.
    pub fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.n_vertices];
        for (k, &(a, b)) in self.edges.iter().enumerate() {
            adj[a].push((b, k));
            adj[b].push((a, k));
        }
        adj
    }

    pub fn degree_table(&self) -> DegreeTable {
        let mut nu = vec![0usize; self.n_vertices];
        for &(a, b) in &self.edges {
            nu[a] += 1;
            nu[b] += 1;
        }
        DegreeTable { nu }
    }
}

/// Path `1 - 2 - ... - n`.
pub fn line_graph(n: usize) -> Result<Graph> {
    if n < 2 {
        return invalid(format!("line graph needs at least 2 vertices, got {n}"));
    }
    Graph::from_index_pairs(n, (0..n - 1).map(|k| (k, k + 1)).collect())
}

/// Four-neighbour pixel grid with row-major numbering.
///
/// Horizontal edges are listed first (row by row), then vertical edges.
pub fn grid_graph(height: usize, width: usize) -> Result<Graph> {
    if height == 0 || width == 0 || height * width < 2 {
        return invalid(format!("degenerate grid {height}x{width}"));
    }
    let idx = |i: usize, j: usize| i * width + j;
    let mut edges = Vec::with_capacity(height * (width - 1) + (height - 1) * width);
    for i in 0..height {
        for j in 0..width - 1 {
            edges.push((idx(i, j), idx(i, j + 1)));
        }
    }
    for i in 0..height - 1 {
        for j in 0..width {
            edges.push((idx(i, j), idx(i + 1, j)));
        }
    }
    Graph::from_index_pairs(height * width, edges)
}

/// Union-find connectivity test on zero-based pairs.
pub fn is_connected(n_vertices: usize, pairs: &[(usize, usize)]) -> bool {
    if n_vertices == 0 {
        return false;
    }
    let mut parent: Vec<usize> = (0..n_vertices).collect();
    fn find(parent: &mut [usize], mut v: usize) -> usize {
        while parent[v] != v {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        v
    }
    let mut components = n_vertices;
    for &(a, b) in pairs {
        if a >= n_vertices || b >= n_vertices {
            return false;
        }
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
            components -= 1;
        }
    }
    components == 1
}

/// Number of edges touching each vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeTable {
    pub nu: Vec<usize>,
}

impl DegreeTable {
    pub fn total(&self) -> usize {
        self.nu.iter().sum()
    }
}

/// Fidelity weights `w_n` per vertex and smoothness weights `lambda_(n,m)` per edge.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    vertex: Vec<f64>,
    edge: Vec<f64>,
}

impl Weights {
    pub fn new(g: &Graph, vertex: Vec<f64>, edge: Vec<f64>) -> Result<Self> {
        if vertex.len() != g.n_vertices() {
            return invalid(format!(
                "{} vertex weights for {} vertices",
                vertex.len(),
                g.n_vertices()
            ));
        }
        if edge.len() != g.n_edges() {
            return invalid(format!("{} edge weights for {} edges", edge.len(), g.n_edges()));
        }
        if let Some(v) = vertex.iter().chain(&edge).find(|v| !(v.is_finite() && **v > 0.0)) {
            return invalid(format!("weights must be finite and positive, got {v}"));
        }
        Ok(Self { vertex, edge })
    }

    pub fn uniform(g: &Graph, w: f64, lambda: f64) -> Result<Self> {
        Self::new(g, vec![w; g.n_vertices()], vec![lambda; g.n_edges()])
    }

    pub fn vertex(&self) -> &[f64] {
        &self.vertex
    }

    pub fn edge(&self) -> &[f64] {
        &self.edge
    }
}

/// Parses the edge-list text format: one `n m [lambda]` triple per line,
/// 1-based, whitespace separated. Blank lines and `#` comments are skipped.
///
/// Returns the graph and, when every line carries a third column, the edge
/// weights in file order. A third column on only some lines is an error.
pub fn parse_edge_list(text: &str) -> Result<(Graph, Option<Vec<f64>>)> {
    let mut pairs = Vec::new();
    let mut lambdas = Vec::new();
    let mut n_vertices = 0;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |msg: String| Error::Parse { line: lineno + 1, msg };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 2 || fields.len() > 3 {
            return Err(parse_err(format!("expected `n m [lambda]`, got {line:?}")));
        }
        let n: usize = fields[0].parse().map_err(|_| parse_err(format!("bad vertex {:?}", fields[0])))?;
        let m: usize = fields[1].parse().map_err(|_| parse_err(format!("bad vertex {:?}", fields[1])))?;
        if n == 0 || m == 0 {
            return Err(parse_err("vertices are 1-based".into()));
        }
        n_vertices = n_vertices.max(n).max(m);
        pairs.push((n, m));
        if let Some(l) = fields.get(2) {
            let l: f64 = l.parse().map_err(|_| parse_err(format!("bad weight {l:?}")))?;
            lambdas.push(l);
        }
    }
    if pairs.is_empty() {
        return Err(Error::Parse { line: 0, msg: "edge list is empty".into() });
    }
    let graph = Graph::new(n_vertices, &pairs)?;
    let lambdas = match lambdas.len() {
        0 => None,
        k if k == pairs.len() => Some(lambdas),
        _ => {
            return Err(Error::Parse {
                line: 0,
                msg: "weight column present on some lines only".into(),
            })
        }
    };
    Ok((graph, lambdas))
}

/// Parses a whitespace/newline separated vector of reals (the `w` file format).
pub fn parse_vector(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        for tok in line.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()) {
            out.push(tok.parse().map_err(|_| Error::Parse {
                line: lineno + 1,
                msg: format!("bad number {tok:?}"),
            })?);
        }
    }
    Ok(out)
}
