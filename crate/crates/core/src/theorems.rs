//! Randomized matrix-equality suites showing which existing Laplacians the
//! directed sheaf Laplacian reduces to, and the 4-vertex instance on which
//! the linear sheaf hypergraph Laplacian of Duta et al. fails to be PSD.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::block::DenseComplex;
use crate::error::Result;
use crate::hypergraph::{DirectedHypergraph, Hyperedge};
use crate::instances::random_hypergraph;
use crate::laplacian::build_laplacian;
use crate::reference::{adjacency_from_arcs, classical_graph, duta_linear, gedi, magnetic, sheaf_graph, sign_magnetic, zhou};
use crate::sheaf::{build_fixed_sheaf, MapShape, SheafAssignment, SheafConfig};
use crate::spectral::{SpectrumReport, SPECTRAL_TOL};

/// Bound on the largest entry deviation in every equality suite.
pub const THEOREM_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct TheoremReport {
    pub name: &'static str,
    pub trials: usize,
    pub max_deviation: f64,
}

impl TheoremReport {
    pub fn passed(&self) -> bool {
        self.max_deviation <= THEOREM_TOL
    }
}

fn suite_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Random simple graph as a list of unordered pairs, at least one edge.
fn random_pairs<R: Rng>(rng: &mut R, n: usize) -> Vec<(usize, usize)> {
    let p = rng.gen_range(0.2..0.7);
    let mut pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
        .filter(|_| rng.gen_bool(p))
        .collect();
    if pairs.is_empty() {
        pairs.push((0, 1));
    }
    pairs.shuffle(rng);
    pairs
}

fn dense_laplacian(h: &DirectedHypergraph, a: &SheafAssignment, normalized: bool) -> Result<DenseComplex> {
    build_laplacian(h, a, normalized)?.l.to_dense()
}

/// Undirected 2-uniform hypergraphs: `L^F` is half the graph sheaf
/// Laplacian, and half of `D − A` for the trivial sheaf.
pub fn sheaf_graph_suite(trials: usize, seed: u64) -> Result<TheoremReport> {
    let mut worst: f64 = 0.0;
    for t in 0..trials {
        let mut rng = suite_rng(seed, t as u64);
        let n = rng.gen_range(2..=12);
        let pairs = random_pairs(&mut rng, n);
        let edges = pairs.iter().map(|&(u, v)| Hyperedge::undirected(vec![u, v])).collect();
        let h = DirectedHypergraph::new(n, edges)?;
        let q = rng.gen_range(0.0..0.5);
        let d = rng.gen_range(1..=4);
        let shape = *[MapShape::Trivial, MapShape::Diagonal, MapShape::Full].choose(&mut rng).unwrap();
        let a = build_fixed_sheaf(&h, SheafConfig::new(q, d, shape)?, rng.gen())?;

        let maps = pairs
            .iter()
            .enumerate()
            .map(|(e, &(u, v))| Ok((a.map(&h, u, e)?.to_vec(), a.map(&h, v, e)?.to_vec())))
            .collect::<Result<Vec<_>>>()?;
        let ours = dense_laplacian(&h, &a, false)?;
        let reference = sheaf_graph(n, d, &pairs, &maps)?.scale(0.5);
        worst = worst.max(ours.max_abs_diff(&reference));

        let trivial = SheafAssignment::trivial(&h, q, 1)?;
        let ours = dense_laplacian(&h, &trivial, false)?;
        let arcs: Vec<(usize, usize)> = pairs.iter().flat_map(|&(u, v)| [(u, v), (v, u)]).collect();
        let reference = classical_graph(n, &adjacency_from_arcs(n, &arcs))?.scale(0.5);
        worst = worst.max(ours.max_abs_diff(&reference));
    }
    Ok(TheoremReport {
        name: "sheaf_graph",
        trials,
        max_deviation: worst,
    })
}

/// Mixed 2-uniform hypergraphs with maps `√2` on undirected incidences and
/// `1` on directed ones: `L^F` is the magnetic Laplacian for every charge,
/// and the sign-magnetic Laplacian at `q = 1/4`.
pub fn magnetic_suite(trials: usize, seed: u64) -> Result<TheoremReport> {
    let mut worst: f64 = 0.0;
    for t in 0..trials {
        let mut rng = suite_rng(seed, t as u64);
        let n = rng.gen_range(2..=12);
        let pairs = random_pairs(&mut rng, n);
        let mut edges = Vec::new();
        let mut arcs = Vec::new();
        for &(u, v) in &pairs {
            match rng.gen_range(0..3) {
                0 => {
                    edges.push(Hyperedge::undirected(vec![u, v]));
                    arcs.extend([(u, v), (v, u)]);
                }
                1 => {
                    edges.push(Hyperedge::new(vec![u], vec![v]));
                    arcs.push((u, v));
                }
                _ => {
                    edges.push(Hyperedge::new(vec![v], vec![u]));
                    arcs.push((v, u));
                }
            }
        }
        let h = DirectedHypergraph::new(n, edges)?;
        let maps: Vec<Vec<f64>> = h
            .edges()
            .iter()
            .flat_map(|e| {
                let s = if e.is_directed() { 1.0 } else { 2f64.sqrt() };
                std::iter::repeat(vec![s]).take(e.degree())
            })
            .collect();
        let adjacency = adjacency_from_arcs(n, &arcs);
        for q in [0.0, 0.1, 0.25] {
            let a = SheafAssignment::from_maps(&h, SheafConfig::new(q, 1, MapShape::Full)?, maps.clone())?;
            let ours = dense_laplacian(&h, &a, false)?;
            worst = worst.max(ours.max_abs_diff(&magnetic(n, &adjacency, q)?));
            if q == 0.25 {
                worst = worst.max(ours.max_abs_diff(&sign_magnetic(n, &adjacency)?));
            }
        }
    }
    Ok(TheoremReport {
        name: "magnetic",
        trials,
        max_deviation: worst,
    })
}

/// Trivial sheaf: `L_N` equals Zhou's normalized hypergraph Laplacian on
/// undirected hypergraphs for any charge, and on directed ones at `q = 0`.
pub fn zhou_suite(trials: usize, seed: u64) -> Result<TheoremReport> {
    let mut worst: f64 = 0.0;
    for t in 0..trials {
        let mut rng = suite_rng(seed, t as u64);
        let n = rng.gen_range(3..=14);
        let m = rng.gen_range(1..=10);
        let directed = t % 2 == 1;
        let h = random_hypergraph(&mut rng, n, m, 6, if directed { 0.7 } else { 0.0 });
        let q = if directed { 0.0 } else { rng.gen_range(0.0..0.5) };
        let d = rng.gen_range(1..=3);
        let ours = dense_laplacian(&h, &SheafAssignment::trivial(&h, q, d)?, true)?;
        worst = worst.max(ours.max_abs_diff(&zhou(&h)?.kron_identity(d)));
    }
    Ok(TheoremReport {
        name: "zhou",
        trials,
        max_deviation: worst,
    })
}

/// Trivial sheaf at `q = 1/4`: `L_N` equals the generalized directed
/// Laplacian's normalized form.
pub fn gedi_suite(trials: usize, seed: u64) -> Result<TheoremReport> {
    let mut worst: f64 = 0.0;
    for t in 0..trials {
        let mut rng = suite_rng(seed, t as u64);
        let n = rng.gen_range(3..=14);
        let m = rng.gen_range(1..=10);
        let h = random_hypergraph(&mut rng, n, m, 6, 0.8);
        let d = rng.gen_range(1..=3);
        let ours = dense_laplacian(&h, &SheafAssignment::trivial(&h, 0.25, d)?, true)?;
        worst = worst.max(ours.max_abs_diff(&gedi(&h)?.kron_identity(d)));
    }
    Ok(TheoremReport {
        name: "gedi",
        trials,
        max_deviation: worst,
    })
}

/// All four reduction suites with `trials` instances each.
pub fn theorem_suites(trials: usize, seed: u64) -> Result<Vec<TheoremReport>> {
    Ok(vec![
        sheaf_graph_suite(trials, seed)?,
        magnetic_suite(trials, seed.wrapping_add(1))?,
        zhou_suite(trials, seed.wrapping_add(2))?,
        gedi_suite(trials, seed.wrapping_add(3))?,
    ])
}

/// Two undirected 3-vertex hyperedges `{1,2,3}` and `{2,3,4}` sharing two
/// vertices (0-based `{0,1,2}`, `{1,2,3}`).
pub fn overlapping_triples() -> DirectedHypergraph {
    DirectedHypergraph::new(
        4,
        vec![Hyperedge::undirected(vec![0, 1, 2]), Hyperedge::undirected(vec![1, 2, 3])],
    )
    .expect("fixed instance is valid")
}

/// The prior operator's matrix on [`overlapping_triples`] as reported:
/// rows `(1/3, −1/3, −1/3, 0)`, `(−1/3, 2/3, −2/3, −1/3)`, ….
pub fn reported_prior_matrix() -> DenseComplex {
    let t = 1.0 / 3.0;
    let rows = [
        t, -t, -t, 0.0, //
        -t, 2.0 * t, -2.0 * t, -t, //
        -t, -2.0 * t, 2.0 * t, -t, //
        0.0, -t, -t, t,
    ];
    DenseComplex::from_real(4, 4, &rows)
}

/// Spectrum reported alongside that matrix.
pub const REPORTED_PRIOR_SPECTRUM: [f64; 4] = [-2.0, 2.0 / 3.0, 4.0 / 3.0, 2.0];

#[derive(Debug, Clone)]
pub struct CounterexampleReport {
    /// Max entry deviation of the prior operator from the reported matrix.
    pub matrix_deviation: f64,
    pub prior: SpectrumReport,
    /// Unnormalized directed sheaf Laplacian, trivial sheaf, same instance.
    pub ours: SpectrumReport,
}

impl CounterexampleReport {
    /// The prior operator has a negative eigenvalue while ours does not.
    pub fn separates(&self) -> bool {
        !self.prior.is_psd_at(SPECTRAL_TOL) && self.ours.is_psd_at(SPECTRAL_TOL)
    }
}

pub fn prior_counterexample() -> Result<CounterexampleReport> {
    let h = overlapping_triples();
    let a = SheafAssignment::trivial(&h, 0.0, 1)?;
    let prior = duta_linear(&h, &a)?;
    let ours = dense_laplacian(&h, &a, false)?;
    Ok(CounterexampleReport {
        matrix_deviation: prior.max_abs_diff(&reported_prior_matrix()),
        prior: SpectrumReport::of(&prior)?,
        ours: SpectrumReport::of(&ours)?,
    })
}
