//! Reference Laplacians built straight from their own definitions, used as
//! independent targets when checking what the directed sheaf Laplacian
//! reduces to.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::block::DenseComplex;
use crate::error::{Error, Result};
use crate::hypergraph::{DirectedHypergraph, Role};
use crate::linalg::mat_tmul;
use crate::sheaf::SheafAssignment;

/// Which operator to build.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReferenceKind {
    /// Sheaf Laplacian of a graph: `L_uu = Σ F_uᵀF_u`, `L_uv = −F_uᵀF_v`.
    SheafGraph,
    /// `D − A`.
    ClassicalGraph,
    /// `D_s − A_s ⊙ exp(iΘ)` with `Θ = 2πq(A − Aᵀ)`.
    Magnetic { q: f64 },
    /// `D̄_s − Ā_s ⊙ (1 − sgn|A − Aᵀ| + i·sgn(A − Aᵀ))`.
    SignMagnetic,
    /// `I − D_V^-½ H D_E⁻¹ Hᵀ D_V^-½` on the undirected support.
    Zhou,
    /// Normalized generalized directed Laplacian (scalar, unit weights).
    Gedi,
    /// Linear sheaf hypergraph Laplacian with `1/δ_e` on the diagonal blocks.
    DutaLinear,
}

/// Input matching a [`ReferenceKind`].
#[derive(Debug, Clone, Copy)]
pub enum ReferenceInput<'a> {
    /// Row-major `n × n` adjacency; `A_uv = 1` for an arc `u → v`, both
    /// directions set for an undirected edge.
    Adjacency { n: usize, adjacency: &'a [f64] },
    /// Undirected graph edges with the maps `(F_u, F_v)` of each edge.
    SheafGraph {
        n: usize,
        d: usize,
        edges: &'a [(usize, usize)],
        maps: &'a [(Vec<f64>, Vec<f64>)],
    },
    Hypergraph {
        h: &'a DirectedHypergraph,
        sheaf: Option<&'a SheafAssignment>,
    },
}

pub fn reference_laplacian(kind: ReferenceKind, input: ReferenceInput<'_>) -> Result<DenseComplex> {
    use ReferenceInput as I;
    use ReferenceKind as K;
    match (kind, input) {
        (K::ClassicalGraph, I::Adjacency { n, adjacency }) => classical_graph(n, adjacency),
        (K::Magnetic { q }, I::Adjacency { n, adjacency }) => magnetic(n, adjacency, q),
        (K::SignMagnetic, I::Adjacency { n, adjacency }) => sign_magnetic(n, adjacency),
        (K::SheafGraph, I::SheafGraph { n, d, edges, maps }) => sheaf_graph(n, d, edges, maps),
        (K::Zhou, I::Hypergraph { h, .. }) => zhou(h),
        (K::Gedi, I::Hypergraph { h, .. }) => gedi(h),
        (K::DutaLinear, I::Hypergraph { h, sheaf: Some(a) }) => duta_linear(h, a),
        (kind, _) => Err(Error::Config(format!("input does not match reference kind {kind:?}"))),
    }
}

fn check_adjacency(n: usize, adjacency: &[f64]) -> Result<()> {
    if adjacency.len() != n * n {
        return Err(Error::Dimension {
            expected: n * n,
            found: adjacency.len(),
        });
    }
    Ok(())
}

/// Adjacency of a graph given by arcs; repeated arcs are counted once.
pub fn adjacency_from_arcs(n: usize, arcs: &[(usize, usize)]) -> Vec<f64> {
    let mut a = vec![0.0; n * n];
    for &(u, v) in arcs {
        a[u * n + v] = 1.0;
    }
    a
}

pub fn classical_graph(n: usize, adjacency: &[f64]) -> Result<DenseComplex> {
    check_adjacency(n, adjacency)?;
    let mut l = DenseComplex::zeros(n, n);
    for u in 0..n {
        let deg: f64 = adjacency[u * n..(u + 1) * n].iter().sum();
        l.set(u, u, Complex64::new(deg, 0.0));
        for v in 0..n {
            if u != v {
                l.set(u, v, Complex64::new(-adjacency[u * n + v], 0.0));
            }
        }
    }
    Ok(l)
}

pub fn sheaf_graph(n: usize, d: usize, edges: &[(usize, usize)], maps: &[(Vec<f64>, Vec<f64>)]) -> Result<DenseComplex> {
    if edges.len() != maps.len() {
        return Err(Error::Dimension {
            expected: edges.len(),
            found: maps.len(),
        });
    }
    let mut l = DenseComplex::zeros(n * d, n * d);
    let mut add = |u: usize, v: usize, blk: &[f64], sign: f64| {
        for i in 0..d {
            for j in 0..d {
                let z = l.get(u * d + i, v * d + j) + sign * blk[i * d + j];
                l.set(u * d + i, v * d + j, z);
            }
        }
    };
    for (&(u, v), (fu, fv)) in edges.iter().zip(maps) {
        add(u, u, &mat_tmul(fu, fu, d), 1.0);
        add(v, v, &mat_tmul(fv, fv, d), 1.0);
        add(u, v, &mat_tmul(fu, fv, d), -1.0);
        add(v, u, &mat_tmul(fv, fu, d), -1.0);
    }
    Ok(l)
}

pub fn magnetic(n: usize, adjacency: &[f64], q: f64) -> Result<DenseComplex> {
    check_adjacency(n, adjacency)?;
    let mut l = DenseComplex::zeros(n, n);
    for u in 0..n {
        let mut ds = 0.0;
        for v in 0..n {
            let a_uv = adjacency[u * n + v];
            let a_vu = adjacency[v * n + u];
            let a_s = 0.5 * (a_uv + a_vu);
            ds += a_s;
            let theta = 2.0 * PI * q * (a_uv - a_vu);
            let h = Complex64::from_polar(a_s, theta);
            l.set(u, v, l.get(u, v) - h);
        }
        l.set(u, u, l.get(u, u) + ds);
    }
    Ok(l)
}

pub fn sign_magnetic(n: usize, adjacency: &[f64]) -> Result<DenseComplex> {
    check_adjacency(n, adjacency)?;
    let sgn = |x: f64| {
        if x > 0.0 {
            1.0
        } else if x < 0.0 {
            -1.0
        } else {
            0.0
        }
    };
    let mut l = DenseComplex::zeros(n, n);
    for u in 0..n {
        let mut ds = 0.0;
        for v in 0..n {
            let a_uv = adjacency[u * n + v];
            let a_vu = adjacency[v * n + u];
            let a_s = 0.5 * (a_uv + a_vu);
            ds += a_s.abs();
            let diff = a_uv - a_vu;
            let h = a_s * Complex64::new(1.0 - sgn(diff.abs()), sgn(diff));
            l.set(u, v, l.get(u, v) - h);
        }
        l.set(u, u, l.get(u, u) + ds);
    }
    Ok(l)
}

fn vertex_counts(h: &DirectedHypergraph) -> Result<Vec<f64>> {
    let counts = h.incidence_counts();
    if let Some(u) = counts.iter().position(|&c| c == 0) {
        return Err(Error::SingularDegree { vertex: u });
    }
    Ok(counts.into_iter().map(|c| c as f64).collect())
}

pub fn zhou(h: &DirectedHypergraph) -> Result<DenseComplex> {
    let n = h.num_vertices();
    let dv = vertex_counts(h)?;
    // binary incidence H (n × m), then I − Dv^-½ H De⁻¹ Hᵀ Dv^-½
    let m = h.num_edges();
    let mut inc = vec![0.0; n * m];
    for (e, edge) in h.edges().iter().enumerate() {
        for (u, _) in edge.members() {
            inc[u * m + e] = 1.0;
        }
    }
    let de: Vec<f64> = h.edges().iter().map(|e| e.degree() as f64).collect();
    let mut l = DenseComplex::identity(n);
    for u in 0..n {
        for v in 0..n {
            let s: f64 = (0..m).map(|e| inc[u * m + e] * inc[v * m + e] / de[e]).sum();
            let z = l.get(u, v) - Complex64::new(s / (dv[u].sqrt() * dv[v].sqrt()), 0.0);
            l.set(u, v, z);
        }
    }
    Ok(l)
}

pub fn gedi(h: &DirectedHypergraph) -> Result<DenseComplex> {
    let n = h.num_vertices();
    let dv = vertex_counts(h)?;
    let mut same = vec![0.0; n * n];
    let mut tail_head = vec![0.0; n * n];
    let mut head_tail = vec![0.0; n * n];
    let mut diag = vec![0.0; n];
    for edge in h.edges() {
        let delta = edge.degree() as f64;
        for (u, ru) in edge.members() {
            diag[u] += 1.0 / delta;
            for (v, rv) in edge.members() {
                if u == v {
                    continue;
                }
                let slot = match (ru, rv) {
                    (Role::Tail, Role::Head) => &mut tail_head,
                    (Role::Head, Role::Tail) => &mut head_tail,
                    _ => &mut same,
                };
                slot[u * n + v] += 1.0 / delta;
            }
        }
    }
    let mut l = DenseComplex::zeros(n, n);
    for u in 0..n {
        l.set(u, u, Complex64::new(1.0 - diag[u] / dv[u], 0.0));
        for v in 0..n {
            if u == v {
                continue;
            }
            let z = Complex64::new(-same[u * n + v], -(tail_head[u * n + v] - head_tail[u * n + v]));
            l.set(u, v, z / (dv[u].sqrt() * dv[v].sqrt()));
        }
    }
    Ok(l)
}

pub fn duta_linear(h: &DirectedHypergraph, a: &SheafAssignment) -> Result<DenseComplex> {
    a.check(h)?;
    let n = h.num_vertices();
    let d = a.d();
    let mut l = DenseComplex::zeros(n * d, n * d);
    for (e, edge) in h.edges().iter().enumerate() {
        let delta = edge.degree() as f64;
        for (u, _) in edge.members() {
            for (v, _) in edge.members() {
                let blk = mat_tmul(a.map(h, u, e)?, a.map(h, v, e)?, d);
                let sign = if u == v { 1.0 } else { -1.0 };
                for i in 0..d {
                    for j in 0..d {
                        let z = l.get(u * d + i, v * d + j) + sign * blk[i * d + j] / delta;
                        l.set(u * d + i, v * d + j, z);
                    }
                }
            }
        }
    }
    Ok(l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypergraph::Hyperedge;

    #[test]
    fn duta_on_overlapping_triples_matches_reported_matrix() {
        let h = DirectedHypergraph::new(
            4,
            vec![Hyperedge::undirected(vec![0, 1, 2]), Hyperedge::undirected(vec![1, 2, 3])],
        )
        .unwrap();
        let a = SheafAssignment::trivial(&h, 0.0, 1).unwrap();
        let l = reference_laplacian(ReferenceKind::DutaLinear, ReferenceInput::Hypergraph { h: &h, sheaf: Some(&a) })
            .unwrap();
        let t = 1.0 / 3.0;
        let reported = [
            [t, -t, -t, 0.0],
            [-t, 2.0 * t, -2.0 * t, -t],
            [-t, -2.0 * t, 2.0 * t, -t],
            [0.0, -t, -t, t],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(l.get(i, j), Complex64::new(reported[i][j], 0.0), "entry ({i},{j})");
            }
        }
    }

    #[test]
    fn magnetic_undirected_edge_is_one() {
        let adj = adjacency_from_arcs(2, &[(0, 1), (1, 0)]);
        for q in [0.0, 0.13, 0.25] {
            let l = magnetic(2, &adj, q).unwrap();
            assert!((l.get(0, 1) + Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn magnetic_directed_arc_phase() {
        let adj = adjacency_from_arcs(2, &[(0, 1)]);
        let l = magnetic(2, &adj, 0.25).unwrap();
        assert!((l.get(0, 1) + Complex64::new(0.0, 0.5)).norm() < 1e-15);
        assert!((l.get(0, 0) - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        let s = sign_magnetic(2, &adj).unwrap();
        assert!(l.max_abs_diff(&s) < 1e-15);
    }

    #[test]
    fn mismatched_input_is_rejected() {
        let adj = adjacency_from_arcs(2, &[(0, 1)]);
        let r = reference_laplacian(ReferenceKind::Zhou, ReferenceInput::Adjacency { n: 2, adjacency: &adj });
        assert!(r.is_err());
        let h = DirectedHypergraph::new(2, vec![Hyperedge::undirected(vec![0, 1])]).unwrap();
        let r = reference_laplacian(ReferenceKind::DutaLinear, ReferenceInput::Hypergraph { h: &h, sheaf: None });
        assert!(r.is_err());
    }

    #[test]
    fn classical_graph_path() {
        let adj = adjacency_from_arcs(3, &[(0, 1), (1, 0), (1, 2), (2, 1)]);
        let l = classical_graph(3, &adj).unwrap();
        assert_eq!(l.get(1, 1), Complex64::new(2.0, 0.0));
        assert_eq!(l.get(0, 1), Complex64::new(-1.0, 0.0));
        assert_eq!(l.get(0, 2), Complex64::new(0.0, 0.0));
    }
}
