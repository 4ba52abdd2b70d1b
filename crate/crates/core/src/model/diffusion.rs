//! Fused `Q_N · x` with a hand-written backward pass, differentiating
//! through the degree normalization and the restriction maps.

use num_complex::Complex64;

use super::tape::Tensor;
use crate::hypergraph::DirectedHypergraph;
use crate::linalg::jacobi_eigen;
use crate::sheaf::{role_coefficient, MapShape};

type C = Complex64;
const ZERO: C = C::new(0.0, 0.0);

/// Hypergraph structure and charge needed to apply `Q_N` for any maps.
#[derive(Debug, Clone)]
pub struct DiffusionPlan {
    n: usize,
    d: usize,
    diagonal: bool,
    jitter: f64,
    /// `(vertex, S^(q))` per incidence, in incidence order.
    incidences: Vec<(usize, C)>,
    /// Incidence range and `1/δ_e` per hyperedge.
    edges: Vec<(usize, usize, f64)>,
}

/// Forward intermediates reused by the backward pass.
#[derive(Debug, Clone)]
pub struct DiffusionCache {
    eig_values: Vec<Vec<f64>>,
    eig_vectors: Vec<Vec<f64>>,
    m: Vec<Vec<f64>>,
    maps: Vec<Vec<f64>>,
    p: Vec<C>,
}

impl DiffusionPlan {
    /// `shape` decides how the map tensor is read: `d` columns per incidence
    /// for diagonal maps, `d²` for full ones.
    pub fn new(h: &DirectedHypergraph, q: f64, d: usize, shape: MapShape, jitter: f64) -> Self {
        let incidences = h
            .incidences()
            .iter()
            .map(|inc| (inc.vertex, role_coefficient(inc.role, q)))
            .collect();
        let offsets = h.incidence_offsets();
        let edges = h
            .edges()
            .iter()
            .enumerate()
            .map(|(e, edge)| (offsets[e], offsets[e + 1], 1.0 / edge.degree() as f64))
            .collect();
        DiffusionPlan {
            n: h.num_vertices(),
            d,
            diagonal: shape != MapShape::Full,
            jitter,
            incidences,
            edges,
        }
    }

    pub fn num_incidences(&self) -> usize {
        self.incidences.len()
    }

    /// Columns of the map tensor.
    pub fn map_width(&self) -> usize {
        if self.diagonal {
            self.d
        } else {
            self.d * self.d
        }
    }

    fn expand(&self, maps: &Tensor) -> Vec<Vec<f64>> {
        let d = self.d;
        assert_eq!(maps.rows, self.incidences.len(), "one map row per incidence");
        assert_eq!(maps.cols, self.map_width(), "map width");
        (0..maps.rows)
            .map(|k| {
                let row = &maps.data[k * maps.cols..(k + 1) * maps.cols];
                if self.diagonal {
                    let mut m = vec![0.0; d * d];
                    (0..d).for_each(|i| m[i * d + i] = row[i]);
                    m
                } else {
                    row.to_vec()
                }
            })
            .collect()
    }

    fn unstack(&self, t: &Tensor) -> Vec<C> {
        let half = t.len() / 2;
        assert_eq!(t.rows, 2 * self.n * self.d, "signal rows must be 2·n·d");
        (0..half).map(|k| C::new(t.data[k], t.data[half + k])).collect()
    }

    fn stack(&self, z: &[C], cols: usize) -> Tensor {
        let mut data: Vec<f64> = z.iter().map(|c| c.re).collect();
        data.extend(z.iter().map(|c| c.im));
        Tensor::new(2 * self.n * self.d, cols, data)
    }

    /// `out_u = Σ_v blocks[u] · x_v` for block-diagonal real `blocks`.
    fn block_diag(&self, blocks: &[Vec<f64>], x: &[C], cols: usize) -> Vec<C> {
        let d = self.d;
        let mut out = vec![ZERO; x.len()];
        for (u, b) in blocks.iter().enumerate() {
            for i in 0..d {
                let dst = (u * d + i) * cols;
                for k in 0..d {
                    let w = b[i * d + k];
                    if w == 0.0 {
                        continue;
                    }
                    let src = (u * d + k) * cols;
                    for c in 0..cols {
                        out[dst + c] += w * x[src + c];
                    }
                }
            }
        }
        out
    }

    /// `y = S F x_u` for one incidence (d × cols).
    fn restrict(&self, f: &[f64], s: C, x: &[C], cols: usize) -> Vec<C> {
        let d = self.d;
        let mut y = vec![ZERO; d * cols];
        for i in 0..d {
            for k in 0..d {
                let w = f[i * d + k];
                if w == 0.0 {
                    continue;
                }
                for c in 0..cols {
                    y[i * cols + c] += w * x[k * cols + c];
                }
            }
        }
        y.iter_mut().for_each(|v| *v *= s);
        y
    }

    /// `B† D_E⁻¹ B x` and the per-hyperedge sums `s_e = B_e x`.
    fn signless(&self, maps: &[Vec<f64>], x: &[C], cols: usize) -> (Vec<C>, Vec<Vec<C>>) {
        let d = self.d;
        let mut out = vec![ZERO; x.len()];
        let mut sums = Vec::with_capacity(self.edges.len());
        for &(start, end, inv_delta) in &self.edges {
            let mut s = vec![ZERO; d * cols];
            for k in start..end {
                let (u, coef) = self.incidences[k];
                let y = self.restrict(&maps[k], coef, &x[u * d * cols..(u + 1) * d * cols], cols);
                s.iter_mut().zip(y).for_each(|(a, b)| *a += b);
            }
            for k in start..end {
                let (u, coef) = self.incidences[k];
                let f = &maps[k];
                let scale = coef.conj() * inv_delta;
                for i in 0..d {
                    let dst = (u * d + i) * cols;
                    for j in 0..d {
                        // Fᵀ: entry (i, j) of Fᵀ is F[j][i]
                        let w = f[j * d + i];
                        if w == 0.0 {
                            continue;
                        }
                        for c in 0..cols {
                            out[dst + c] += scale * w * s[j * cols + c];
                        }
                    }
                }
            }
            sums.push(s);
        }
        (out, sums)
    }

    pub fn forward(&self, x: &Tensor, maps: &Tensor) -> (Tensor, DiffusionCache) {
        let d = self.d;
        let cols = x.cols;
        let maps = self.expand(maps);
        let mut degree = vec![vec![0.0; d * d]; self.n];
        for (k, f) in maps.iter().enumerate() {
            let u = self.incidences[k].0;
            for i in 0..d {
                for j in 0..d {
                    degree[u][i * d + j] += (0..d).map(|r| f[r * d + i] * f[r * d + j]).sum::<f64>();
                }
            }
        }
        let mut eig_values = Vec::with_capacity(self.n);
        let mut eig_vectors = Vec::with_capacity(self.n);
        let mut m = Vec::with_capacity(self.n);
        for mut blk in degree {
            (0..d).for_each(|i| blk[i * d + i] += self.jitter);
            let eig = jacobi_eigen(blk, d, true, 1e-15);
            let inv: Vec<f64> = eig.values.iter().map(|l| 1.0 / l.max(f64::MIN_POSITIVE).sqrt()).collect();
            let v = &eig.vectors;
            let mut mu = vec![0.0; d * d];
            for i in 0..d {
                for j in 0..d {
                    mu[i * d + j] = (0..d).map(|k| v[i * d + k] * inv[k] * v[j * d + k]).sum();
                }
            }
            m.push(mu);
            eig_values.push(eig.values);
            eig_vectors.push(eig.vectors);
        }
        let xc = self.unstack(x);
        let w = self.block_diag(&m, &xc, cols);
        let (p, _) = self.signless(&maps, &w, cols);
        let out = self.block_diag(&m, &p, cols);
        (
            self.stack(&out, cols),
            DiffusionCache {
                eig_values,
                eig_vectors,
                m,
                maps,
                p,
            },
        )
    }

    /// Gradients with respect to the signal and, when asked, the map tensor.
    /// Gradients of complex entries use the `∂/∂re + i ∂/∂im` convention.
    pub fn backward(
        &self,
        x: &Tensor,
        _maps: &Tensor,
        cache: &DiffusionCache,
        g: &Tensor,
        want_maps: bool,
    ) -> (Tensor, Option<Tensor>) {
        let d = self.d;
        let cols = x.cols;
        let gc = self.unstack(g);
        // Q_N is Hermitian, so the signal gradient is Q_N g.
        let g_hat = self.block_diag(&cache.m, &gc, cols);
        let (r, t_sums) = self.signless(&cache.maps, &g_hat, cols);
        let gx = self.block_diag(&cache.m, &r, cols);
        if !want_maps {
            return (self.stack(&gx, cols), None);
        }

        let xc = self.unstack(x);
        let w = self.block_diag(&cache.m, &xc, cols);
        let (_, s_sums) = self.signless(&cache.maps, &w, cols);
        let mut gf = vec![vec![0.0; d * d]; self.incidences.len()];

        // through the bilinear products B_e† B_e
        for (e, &(start, end, inv_delta)) in self.edges.iter().enumerate() {
            let (s, t) = (&s_sums[e], &t_sums[e]);
            for k in start..end {
                let (u, coef) = self.incidences[k];
                let wu = &w[u * d * cols..(u + 1) * d * cols];
                let gu = &g_hat[u * d * cols..(u + 1) * d * cols];
                for i in 0..d {
                    for j in 0..d {
                        let mut acc = ZERO;
                        for c in 0..cols {
                            acc += t[i * cols + c].conj() * wu[j * cols + c] + s[i * cols + c].conj() * gu[j * cols + c];
                        }
                        gf[k][i * d + j] += inv_delta * (coef * acc).re;
                    }
                }
            }
        }

        // through D_u^{-1/2}
        let gd: Vec<Vec<f64>> = (0..self.n)
            .map(|u| {
                let blk = |z: &[C]| -> Vec<C> { z[u * d * cols..(u + 1) * d * cols].to_vec() };
                let (gu, pu, ru, xu) = (blk(&gc), blk(&cache.p), blk(&r), blk(&xc));
                let mut gm = vec![0.0; d * d];
                for i in 0..d {
                    for j in 0..d {
                        let mut acc = 0.0;
                        for c in 0..cols {
                            acc += (gu[i * cols + c] * pu[j * cols + c].conj()).re;
                            acc += (ru[i * cols + c] * xu[j * cols + c].conj()).re;
                        }
                        gm[i * d + j] = acc;
                    }
                }
                inv_sqrt_backward(&cache.eig_values[u], &cache.eig_vectors[u], &gm, d)
            })
            .collect();
        // D_u = Σ FᵀF  ⇒  ∂/∂F = 2 F gD
        for (k, &(u, _)) in self.incidences.iter().enumerate() {
            let f = &cache.maps[k];
            for i in 0..d {
                for j in 0..d {
                    gf[k][i * d + j] += 2.0 * (0..d).map(|l| f[i * d + l] * gd[u][l * d + j]).sum::<f64>();
                }
            }
        }

        let width = self.map_width();
        let mut data = Vec::with_capacity(gf.len() * width);
        for blk in &gf {
            if self.diagonal {
                data.extend((0..d).map(|i| blk[i * d + i]));
            } else {
                data.extend_from_slice(blk);
            }
        }
        (self.stack(&gx, cols), Some(Tensor::new(gf.len(), width, data)))
    }
}

/// Pulls a gradient on `M = D^{-1/2}` back to `D` (symmetric), using the
/// divided differences of `λ ↦ λ^{-1/2}` in the eigenbasis of `D`.
fn inv_sqrt_backward(values: &[f64], vectors: &[f64], gm: &[f64], d: usize) -> Vec<f64> {
    let v = vectors;
    let sym: Vec<f64> = (0..d * d).map(|k| 0.5 * (gm[k] + gm[(k % d) * d + k / d])).collect();
    // A = Vᵀ sym V
    let mut a = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            let mut acc = 0.0;
            for p in 0..d {
                for q in 0..d {
                    acc += v[p * d + i] * sym[p * d + q] * v[q * d + j];
                }
            }
            a[i * d + j] = acc;
        }
    }
    for i in 0..d {
        for j in 0..d {
            let (si, sj) = (values[i].sqrt(), values[j].sqrt());
            a[i * d + j] *= -1.0 / (si * sj * (si + sj));
        }
    }
    let mut out = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            let mut acc = 0.0;
            for p in 0..d {
                for q in 0..d {
                    acc += v[i * d + p] * a[p * d + q] * v[j * d + q];
                }
            }
            out[i * d + j] = acc;
        }
    }
    out
}
