//! Directed hypergraphs.
//!
//! A hyperedge is split into a tail set and a head set. Undirected hyperedges
//! are stored with every member in the tail and an empty head, which is the
//! single canonical form used for equality.

use crate::error::{Error, Result};

/// Role a vertex plays inside a hyperedge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Tail,
    Head,
}

/// One hyperedge with sorted, duplicate-free, disjoint tail and head sets.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Hyperedge {
    tail: Vec<usize>,
    head: Vec<usize>,
}

impl Hyperedge {
    /// Builds a hyperedge, sorting both sets. If only a head set is given the
    /// hyperedge is undirected and is moved into canonical all-tail form.
    ///
    /// Duplicates and overlaps are kept as given so that [`DirectedHypergraph::validate`]
    /// can report them with the hyperedge index.
    pub fn new(tail: impl Into<Vec<usize>>, head: impl Into<Vec<usize>>) -> Self {
        let mut tail = tail.into();
        let mut head = head.into();
        if tail.is_empty() {
            std::mem::swap(&mut tail, &mut head);
        }
        tail.sort_unstable();
        head.sort_unstable();
        Hyperedge { tail, head }
    }

    pub fn undirected(members: impl Into<Vec<usize>>) -> Self {
        Hyperedge::new(members, Vec::new())
    }

    pub fn tail(&self) -> &[usize] {
        &self.tail
    }

    pub fn head(&self) -> &[usize] {
        &self.head
    }

    pub fn is_directed(&self) -> bool {
        !self.head.is_empty()
    }

    /// δ_e = |tail| + |head|.
    pub fn degree(&self) -> usize {
        self.tail.len() + self.head.len()
    }

    pub fn role_of(&self, u: usize) -> Option<Role> {
        if self.tail.binary_search(&u).is_ok() {
            Some(Role::Tail)
        } else if self.head.binary_search(&u).is_ok() {
            Some(Role::Head)
        } else {
            None
        }
    }

    pub fn contains(&self, u: usize) -> bool {
        self.role_of(u).is_some()
    }

    /// Members in storage order: tail first, then head.
    pub fn members(&self) -> impl Iterator<Item = (usize, Role)> + '_ {
        self.tail
            .iter()
            .map(|&u| (u, Role::Tail))
            .chain(self.head.iter().map(|&u| (u, Role::Head)))
    }
}

/// One vertex-hyperedge incidence, in the order produced by
/// [`DirectedHypergraph::incidences`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Incidence {
    pub vertex: usize,
    pub edge: usize,
    pub role: Role,
}

/// A directed hypergraph on vertices `0..num_vertices`.
///
/// Hyperedges form a multiset: duplicates are allowed and counted with
/// multiplicity everywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectedHypergraph {
    num_vertices: usize,
    edges: Vec<Hyperedge>,
    weights: Vec<f64>,
}

impl DirectedHypergraph {
    /// Builds and validates a hypergraph with unit weights.
    pub fn new(num_vertices: usize, edges: Vec<Hyperedge>) -> Result<Self> {
        let weights = vec![1.0; edges.len()];
        Self::with_weights(num_vertices, edges, weights)
    }

    pub fn with_weights(
        num_vertices: usize,
        edges: Vec<Hyperedge>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        if weights.len() != edges.len() {
            return Err(Error::Dimension {
                expected: edges.len(),
                found: weights.len(),
            });
        }
        let h = DirectedHypergraph {
            num_vertices,
            edges,
            weights,
        };
        h.validate()?;
        Ok(h)
    }

    /// Checks every structural invariant, reporting the first violation.
    pub fn validate(&self) -> Result<()> {
        for (i, e) in self.edges.iter().enumerate() {
            for &v in e.tail.iter().chain(&e.head) {
                if v >= self.num_vertices {
                    return Err(Error::VertexOutOfRange {
                        edge: i,
                        vertex: v,
                        num_vertices: self.num_vertices,
                    });
                }
            }
            for set in [&e.tail, &e.head] {
                if let Some(w) = set.windows(2).find(|w| w[0] == w[1]) {
                    return Err(Error::DuplicateVertex {
                        edge: i,
                        vertex: w[0],
                    });
                }
            }
            if let Some(&v) = e.tail.iter().find(|v| e.head.binary_search(v).is_ok()) {
                return Err(Error::OverlappingSets { edge: i, vertex: v });
            }
            if e.degree() < 2 {
                return Err(Error::DegenerateHyperedge {
                    edge: i,
                    degree: e.degree(),
                });
            }
            if !self.weights[i].is_finite() {
                return Err(Error::BadWeight {
                    edge: i,
                    weight: self.weights[i],
                });
            }
        }
        Ok(())
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Hyperedge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> Result<&Hyperedge> {
        self.edges.get(e).ok_or(Error::BadEdge {
            edge: e,
            num_edges: self.edges.len(),
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_undirected(&self) -> bool {
        self.edges.iter().all(|e| !e.is_directed())
    }

    /// d_u = Σ_{e ∋ u} |w_e|.
    pub fn vertex_degree(&self, u: usize) -> Result<f64> {
        self.check_vertex(u)?;
        Ok(self
            .edges
            .iter()
            .zip(&self.weights)
            .filter(|(e, _)| e.contains(u))
            .map(|(_, w)| w.abs())
            .sum())
    }

    /// Number of hyperedges containing each vertex (unit-weight degree).
    pub fn incidence_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_vertices];
        for e in &self.edges {
            for (u, _) in e.members() {
                counts[u] += 1;
            }
        }
        counts
    }

    /// Every incidence, hyperedge by hyperedge, tail members before head members.
    pub fn incidences(&self) -> Vec<Incidence> {
        self.edges
            .iter()
            .enumerate()
            .flat_map(|(edge, e)| {
                e.members().map(move |(vertex, role)| Incidence { vertex, edge, role })
            })
            .collect()
    }

    pub fn num_incidences(&self) -> usize {
        self.edges.iter().map(Hyperedge::degree).sum()
    }

    /// Offset of each hyperedge's first incidence in [`Self::incidences`].
    pub fn incidence_offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.edges.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for e in &self.edges {
            acc += e.degree();
            offsets.push(acc);
        }
        offsets
    }

    fn check_vertex(&self, u: usize) -> Result<()> {
        if u >= self.num_vertices {
            return Err(Error::BadVertex {
                vertex: u,
                num_vertices: self.num_vertices,
            });
        }
        Ok(())
    }
}

/// A simple directed graph given as a list of arcs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedGraph {
    num_vertices: usize,
    arcs: Vec<(usize, usize)>,
}

impl DirectedGraph {
    pub fn new(num_vertices: usize, arcs: Vec<(usize, usize)>) -> Result<Self> {
        for (i, &(u, w)) in arcs.iter().enumerate() {
            if u >= num_vertices || w >= num_vertices {
                return Err(Error::BadArc {
                    arc: i,
                    reason: format!("endpoint out of range for {num_vertices} vertices"),
                });
            }
            if u == w {
                return Err(Error::BadArc {
                    arc: i,
                    reason: format!("self-loop at vertex {u}"),
                });
            }
        }
        Ok(DirectedGraph { num_vertices, arcs })
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn arcs(&self) -> &[(usize, usize)] {
        &self.arcs
    }

    /// One forward hyperedge per vertex with outgoing arcs: the vertex is the
    /// sole tail and its out-neighbourhood is the head.
    pub fn to_hypergraph(&self) -> DirectedHypergraph {
        let mut out: Vec<Vec<usize>> = vec![Vec::new(); self.num_vertices];
        for &(u, w) in &self.arcs {
            out[u].push(w);
        }
        let edges = out
            .into_iter()
            .enumerate()
            .filter(|(_, heads)| !heads.is_empty())
            .map(|(v, mut heads)| {
                heads.sort_unstable();
                heads.dedup();
                Hyperedge::new(vec![v], heads)
            })
            .collect();
        DirectedHypergraph::new(self.num_vertices, edges)
            .expect("arcs were validated on construction")
    }
}

/// Free-function form of [`DirectedGraph::to_hypergraph`].
pub fn from_directed_graph(g: &DirectedGraph) -> DirectedHypergraph {
    g.to_hypergraph()
}
