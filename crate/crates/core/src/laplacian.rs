//! The directed sheaf hypergraph Laplacian.
//!
//! With the complex incidence `B` (block `(e, u)` = `S^(q)_{u⊴e} F_{u⊴e}`),
//! the hyperedge degrees `D_E = diag(δ_e I_d)` and the vertex degree blocks
//! `D_u = Σ_{e∋u} F_{u⊴e}ᵀ F_{u⊴e}`:
//!
//! ```text
//! Q   = B† D_E⁻¹ B          L   = D_V − Q
//! Q_N = D_V^-½ Q D_V^-½      L_N = I − Q_N
//! ```
//!
//! Hyperedge weights are not used here; every hyperedge counts once.

use num_complex::Complex64;

use crate::block::{BlockBuilder, BlockComplexMatrix};
use crate::error::{Error, Result};
use crate::hypergraph::DirectedHypergraph;
use crate::linalg::{mat_tmul, sym_inv_sqrt, to_complex};
use crate::sheaf::{phase_product, role_coefficient, SheafAssignment};

/// Diagonal jitter used when building normalized operators during learning.
pub const TRAINING_JITTER: f64 = 1e-8;

/// How singular vertex degree blocks are handled when normalizing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DegreeMode {
    /// Fail with [`Error::SingularDegree`].
    Strict,
    /// Add the given value to the diagonal of every `D_u` before inverting.
    Jitter(f64),
}

/// A Laplacian together with the pieces it was assembled from.
///
/// When `normalized` is set, `l` and `q` hold `L_N` and `Q_N`.
#[derive(Debug, Clone)]
pub struct LaplacianBundle {
    pub l: BlockComplexMatrix,
    pub q: BlockComplexMatrix,
    pub incidence: BlockComplexMatrix,
    pub d_v: Vec<Vec<f64>>,
    pub d_e: Vec<f64>,
    /// `D_u^{-1/2}` per vertex, present for normalized bundles.
    pub d_v_inv_sqrt: Option<Vec<Vec<f64>>>,
    pub normalized: bool,
}

impl LaplacianBundle {
    pub fn num_vertices(&self) -> usize {
        self.l.block_rows()
    }

    pub fn d(&self) -> usize {
        self.l.block_dim()
    }
}

/// Complex incidence matrix, `m × n` blocks.
pub fn build_incidence(h: &DirectedHypergraph, a: &SheafAssignment) -> Result<BlockComplexMatrix> {
    a.check(h)?;
    let d = a.d();
    let mut b = BlockBuilder::new(h.num_edges(), h.num_vertices(), d);
    for (inc, map) in h.incidences().iter().zip(a.maps()) {
        let s = role_coefficient(inc.role, a.q());
        b.push(inc.edge, inc.vertex, map.iter().map(|&x| s * x).collect());
    }
    Ok(b.finish())
}

/// `(D_V blocks, δ_e)`. Each `D_u` is a sum of Gram matrices `FᵀF`; the
/// phases cancel so the blocks are real.
pub fn build_degree_matrices(h: &DirectedHypergraph, a: &SheafAssignment) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    a.check(h)?;
    let d = a.d();
    let mut d_v = vec![vec![0.0; d * d]; h.num_vertices()];
    for (inc, map) in h.incidences().iter().zip(a.maps()) {
        let g = mat_tmul(map, map, d);
        d_v[inc.vertex].iter_mut().zip(g).for_each(|(acc, x)| *acc += x);
    }
    let d_e = h.edges().iter().map(|e| e.degree() as f64).collect();
    Ok((d_v, d_e))
}

/// Strict-mode assembly. See [`build_laplacian_with`].
pub fn build_laplacian(h: &DirectedHypergraph, a: &SheafAssignment, normalized: bool) -> Result<LaplacianBundle> {
    build_laplacian_with(h, a, normalized, DegreeMode::Strict)
}

/// Assembles `L = D_V − B† D_E⁻¹ B`, or `L_N = I − Q_N` when `normalized`.
pub fn build_laplacian_with(
    h: &DirectedHypergraph,
    a: &SheafAssignment,
    normalized: bool,
    mode: DegreeMode,
) -> Result<LaplacianBundle> {
    let n = h.num_vertices();
    let d = a.d();
    let b = build_incidence(h, a)?;
    let (d_v, d_e) = build_degree_matrices(h, a)?;

    let inv_de: Vec<Vec<f64>> = d_e
        .iter()
        .map(|&delta| {
            let mut m = vec![0.0; d * d];
            (0..d).for_each(|i| m[i * d + i] = 1.0 / delta);
            m
        })
        .collect();
    let scaled = b.scale_blocks(&inv_de, &vec![crate::linalg::identity(d); n]);
    let q = b.adjoint().mul(&scaled)?;

    if !normalized {
        let l = BlockComplexMatrix::block_diagonal(&d_v, d).add_scaled(&q, -1.0)?;
        return Ok(LaplacianBundle {
            l,
            q,
            incidence: b,
            d_v,
            d_e,
            d_v_inv_sqrt: None,
            normalized,
        });
    }

    let jitter = match mode {
        DegreeMode::Strict => 0.0,
        DegreeMode::Jitter(eps) => eps,
    };
    let inv_sqrt = d_v
        .iter()
        .enumerate()
        .map(|(u, blk)| sym_inv_sqrt(blk, d, jitter).ok_or(Error::SingularDegree { vertex: u }))
        .collect::<Result<Vec<_>>>()?;
    let q_n = q.scale_blocks(&inv_sqrt, &inv_sqrt);
    let l_n = BlockComplexMatrix::identity(n, d).add_scaled(&q_n, -1.0)?;
    Ok(LaplacianBundle {
        l: l_n,
        q: q_n,
        incidence: b,
        d_v,
        d_e,
        d_v_inv_sqrt: Some(inv_sqrt),
        normalized,
    })
}

/// Applies the bundle's Laplacian to a row-major `(n·d) × cols` signal
/// without touching `L`. Per hyperedge, the sum `s_e = Σ_v B_ev x_v` gives
/// both `(D_V x)_u = Σ_e B_eu† B_eu x_u` and `(Q x)_u = Σ_e B_eu† s_e / δ_e`.
/// When normalized the result is `x − D^{-1/2} Q D^{-1/2} x`, which matches
/// `L_N` exactly even when the degree blocks were jittered.
pub fn apply_laplacian(bundle: &LaplacianBundle, x: &[Complex64], cols: usize) -> Result<Vec<Complex64>> {
    let n = bundle.num_vertices();
    let d = bundle.d();
    if x.len() != n * d * cols {
        return Err(Error::Dimension {
            expected: n * d * cols,
            found: x.len(),
        });
    }
    let zero = Complex64::new(0.0, 0.0);
    let scaled;
    let input = match &bundle.d_v_inv_sqrt {
        Some(m) => {
            scaled = block_diag_apply(m, x, d, cols);
            &scaled
        }
        None => x,
    };

    // group incidence blocks by hyperedge row
    let mut qx = vec![zero; n * d * cols];
    let mut dx = vec![zero; n * d * cols];
    let entries = bundle.incidence.entries();
    let mut start = 0;
    while start < entries.len() {
        let e = entries[start].0;
        let end = start + entries[start..].iter().take_while(|(r, _, _)| *r == e).count();
        let members = &entries[start..end];
        let delta = bundle.d_e[e];
        let ys: Vec<Vec<Complex64>> = members
            .iter()
            .map(|(_, u, blk)| block_apply(blk, &input[u * d * cols..(u + 1) * d * cols], d, cols))
            .collect();
        let mut total = vec![zero; d * cols];
        for y in &ys {
            total.iter_mut().zip(y).for_each(|(t, v)| *t += v);
        }
        for ((_, u, blk), y) in members.iter().zip(&ys) {
            let range = u * d * cols..(u + 1) * d * cols;
            let back = block_adjoint_apply(blk, &total, d, cols);
            qx[range.clone()].iter_mut().zip(back).for_each(|(o, v)| *o += v / delta);
            if bundle.d_v_inv_sqrt.is_none() {
                let own = block_adjoint_apply(blk, y, d, cols);
                dx[range].iter_mut().zip(own).for_each(|(o, v)| *o += v);
            }
        }
        start = end;
    }

    Ok(match &bundle.d_v_inv_sqrt {
        Some(m) => {
            let qn = block_diag_apply(m, &qx, d, cols);
            x.iter().zip(qn).map(|(a, b)| a - b).collect()
        }
        None => dx.iter().zip(qx).map(|(a, b)| a - b).collect(),
    })
}

fn block_apply(blk: &[Complex64], x: &[Complex64], d: usize, cols: usize) -> Vec<Complex64> {
    let mut y = vec![Complex64::new(0.0, 0.0); d * cols];
    for i in 0..d {
        for k in 0..d {
            let a = blk[i * d + k];
            for c in 0..cols {
                y[i * cols + c] += a * x[k * cols + c];
            }
        }
    }
    y
}

fn block_adjoint_apply(blk: &[Complex64], x: &[Complex64], d: usize, cols: usize) -> Vec<Complex64> {
    let mut y = vec![Complex64::new(0.0, 0.0); d * cols];
    for i in 0..d {
        for k in 0..d {
            let a = blk[k * d + i].conj();
            for c in 0..cols {
                y[i * cols + c] += a * x[k * cols + c];
            }
        }
    }
    y
}

fn block_diag_apply(blocks: &[Vec<f64>], x: &[Complex64], d: usize, cols: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(x.len());
    for (u, blk) in blocks.iter().enumerate() {
        out.extend(block_apply(&to_complex(blk), &x[u * d * cols..(u + 1) * d * cols], d, cols));
    }
    out
}

/// Block `(u, v)` of the unnormalized Laplacian evaluated directly from the
/// per-hyperedge sums, independent of the product form:
///
/// * `u = v`: `Σ_{e∋u} (1 − 1/δ_e) F_uᵀ F_u`
/// * `u ≠ v`: `−Σ_{e∋u,v} (1/δ_e) conj(S_u) S_v F_uᵀ F_v`
pub fn entrywise_block(h: &DirectedHypergraph, a: &SheafAssignment, u: usize, v: usize) -> Result<Vec<Complex64>> {
    a.check(h)?;
    for w in [u, v] {
        if w >= h.num_vertices() {
            return Err(Error::BadVertex {
                vertex: w,
                num_vertices: h.num_vertices(),
            });
        }
    }
    let d = a.d();
    let mut out = vec![Complex64::new(0.0, 0.0); d * d];
    for (e, edge) in h.edges().iter().enumerate() {
        let delta = edge.degree() as f64;
        let (Some(ru), Some(rv)) = (edge.role_of(u), edge.role_of(v)) else {
            continue;
        };
        let fu = a.map(h, u, e)?;
        let fv = a.map(h, v, e)?;
        let g = mat_tmul(fu, fv, d);
        let coeff = if u == v {
            Complex64::new(1.0 - 1.0 / delta, 0.0)
        } else {
            -phase_product(ru, rv, a.q()) / delta
        };
        out.iter_mut().zip(g).for_each(|(o, x)| *o += coeff * x);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypergraph::Hyperedge;
    use crate::sheaf::{build_fixed_sheaf, MapShape, SheafConfig};

    fn overlapping_triples() -> DirectedHypergraph {
        DirectedHypergraph::new(
            4,
            vec![Hyperedge::undirected(vec![0, 1, 2]), Hyperedge::undirected(vec![1, 2, 3])],
        )
        .unwrap()
    }

    fn re(z: Complex64) -> f64 {
        assert!(z.im.abs() < 1e-15);
        z.re
    }

    #[test]
    fn incidence_on_overlapping_triples_is_binary() {
        let h = overlapping_triples();
        let a = SheafAssignment::trivial(&h, 0.0, 1).unwrap();
        let b = build_incidence(&h, &a).unwrap().to_dense().unwrap();
        let expect = [[1.0, 1.0, 1.0, 0.0], [0.0, 1.0, 1.0, 1.0]];
        for (i, row) in expect.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                assert_eq!(b.get(i, j), Complex64::new(x, 0.0));
            }
        }
    }

    #[test]
    fn incidence_of_directed_pair() {
        let h = DirectedHypergraph::new(2, vec![Hyperedge::new(vec![0], vec![1])]).unwrap();
        let a = SheafAssignment::trivial(&h, 0.25, 1).unwrap();
        let b = build_incidence(&h, &a).unwrap().to_dense().unwrap();
        assert!((b.get(0, 0) - Complex64::new(0.0, -1.0)).norm() < 1e-15);
        assert_eq!(b.get(0, 1), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn empty_hypergraph_incidence() {
        let h = DirectedHypergraph::new(3, vec![]).unwrap();
        let a = SheafAssignment::trivial(&h, 0.1, 2).unwrap();
        let b = build_incidence(&h, &a).unwrap();
        assert_eq!((b.block_rows(), b.block_cols()), (0, 3));
    }

    #[test]
    fn degree_matrices() {
        let h = overlapping_triples();
        let a = SheafAssignment::trivial(&h, 0.0, 1).unwrap();
        let (dv, de) = build_degree_matrices(&h, &a).unwrap();
        let diag: Vec<f64> = dv.iter().map(|b| b[0]).collect();
        assert_eq!(diag, vec![1.0, 2.0, 2.0, 1.0]);
        assert_eq!(de, vec![3.0, 3.0]);

        let h1 = DirectedHypergraph::new(2, vec![Hyperedge::new(vec![0], vec![1])]).unwrap();
        let cfg = SheafConfig::new(0.2, 2, MapShape::Diagonal).unwrap();
        let maps = vec![vec![0.5, 0.0, 0.0, -3.0], vec![1.0, 0.0, 0.0, 1.0]];
        let a = SheafAssignment::from_maps(&h1, cfg, maps).unwrap();
        let (dv, _) = build_degree_matrices(&h1, &a).unwrap();
        assert_eq!(dv[0], vec![0.25, 0.0, 0.0, 9.0]);
    }

    #[test]
    fn overlapping_triples_unnormalized_entries() {
        let h = overlapping_triples();
        let a = SheafAssignment::trivial(&h, 0.0, 1).unwrap();
        let l = build_laplacian(&h, &a, false).unwrap().l.to_dense().unwrap();
        let diag = [2.0 / 3.0, 4.0 / 3.0, 4.0 / 3.0, 2.0 / 3.0];
        for (i, &x) in diag.iter().enumerate() {
            assert!((re(l.get(i, i)) - x).abs() < 1e-15);
        }
        assert!((re(l.get(0, 1)) + 1.0 / 3.0).abs() < 1e-15);
        assert!((re(l.get(1, 2)) + 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(l.get(0, 3), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn quarter_charge_pair_gives_magnetic_entry() {
        let h = DirectedHypergraph::new(2, vec![Hyperedge::new(vec![0], vec![1])]).unwrap();
        let a = SheafAssignment::trivial(&h, 0.25, 1).unwrap();
        let q = build_laplacian(&h, &a, false).unwrap().q.to_dense().unwrap();
        // tail u=0, head v=1: (1/2)·exp(+2πi/4) = i/2
        assert!((q.get(0, 1) - Complex64::new(0.0, 0.5)).norm() < 1e-15);
        assert!((q.get(1, 0) - Complex64::new(0.0, -0.5)).norm() < 1e-15);
    }

    #[test]
    fn strict_mode_reports_isolated_vertex() {
        let h = DirectedHypergraph::new(3, vec![Hyperedge::undirected(vec![0, 1])]).unwrap();
        let a = SheafAssignment::trivial(&h, 0.0, 1).unwrap();
        let err = build_laplacian(&h, &a, true).unwrap_err();
        assert!(matches!(err, Error::SingularDegree { vertex: 2 }));
        let ok = build_laplacian_with(&h, &a, true, DegreeMode::Jitter(TRAINING_JITTER)).unwrap();
        let l = ok.l.to_dense().unwrap();
        assert!((l.get(2, 2) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn apply_zero_and_constants() {
        let h = overlapping_triples();
        let a = SheafAssignment::trivial(&h, 0.0, 2).unwrap();
        let bundle = build_laplacian(&h, &a, false).unwrap();
        let zero = vec![Complex64::new(0.0, 0.0); 8 * 3];
        assert!(apply_laplacian(&bundle, &zero, 3).unwrap().iter().all(|z| z.norm() == 0.0));

        // constant per stalk component lies in the kernel
        let x: Vec<Complex64> = (0..4)
            .flat_map(|_| [Complex64::new(1.5, -0.5), Complex64::new(-2.0, 1.0)])
            .collect();
        let y = apply_laplacian(&bundle, &x, 1).unwrap();
        assert!(y.iter().all(|z| z.norm() < 1e-14));
        assert!(apply_laplacian(&bundle, &x[..6], 1).is_err());
    }

    #[test]
    fn entrywise_isolated_vertex_is_zero() {
        let h = DirectedHypergraph::new(3, vec![Hyperedge::undirected(vec![0, 1])]).unwrap();
        let cfg = SheafConfig::new(0.1, 2, MapShape::Full).unwrap();
        let a = build_fixed_sheaf(&h, cfg, 4).unwrap();
        assert!(entrywise_block(&h, &a, 2, 2).unwrap().iter().all(|z| z.norm() == 0.0));
        assert!(entrywise_block(&h, &a, 2, 0).unwrap().iter().all(|z| z.norm() == 0.0));
        assert!(entrywise_block(&h, &a, 3, 0).is_err());
    }

    #[test]
    fn entrywise_quarter_imaginary_part_is_net_flow() {
        // u=0 is tail in e0 and head in e1 (with v=1 on the other side each time),
        // and tail in e2; scalar maps of 1.
        let h = DirectedHypergraph::new(
            3,
            vec![
                Hyperedge::new(vec![0], vec![1]),
                Hyperedge::new(vec![1], vec![0, 2]),
                Hyperedge::new(vec![0], vec![1, 2]),
            ],
        )
        .unwrap();
        let a = SheafAssignment::trivial(&h, 0.25, 1).unwrap();
        let b = entrywise_block(&h, &a, 0, 1).unwrap()[0];
        // tail→head sum: 1/2 + 1/3, head→tail sum: 1/3
        let net = (0.5 + 1.0 / 3.0) - 1.0 / 3.0;
        assert!(b.re.abs() < 1e-15);
        assert!((b.im - (-net)).abs() < 1e-15);
    }
}
