//! Hermitian spectra through the real symmetric embedding, Dirichlet
//! energy, and the randomized spectral property suite.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::block::{DenseComplex, DENSE_CAP};
use crate::error::{Error, Result};
use crate::hypergraph::DirectedHypergraph;
use crate::instances::{format_instance, random_instance, Instance, InstanceSpec};
use crate::laplacian::{apply_laplacian, build_laplacian, LaplacianBundle};
use crate::linalg::jacobi_eigen;
use crate::reference::duta_linear;
use crate::sheaf::SheafAssignment;

/// Largest tolerated `max |M − M†|` for eigenvalue requests.
pub const HERMITIAN_INPUT_TOL: f64 = 1e-8;
/// Absolute slack for the PSD and `λ_max ≤ 1` checks.
pub const SPECTRAL_TOL: f64 = 1e-8;

/// Sorted eigenvalues of the `2k × 2k` embedding `[[Re M, −Im M], [Im M, Re M]]`.
/// Each eigenvalue of `M` appears twice.
pub fn embedded_eigenvalues(m: &DenseComplex) -> Result<Vec<f64>> {
    let k = m.rows;
    if m.cols != k {
        return Err(Error::Dimension {
            expected: k,
            found: m.cols,
        });
    }
    if k > DENSE_CAP {
        return Err(Error::DenseTooLarge { dim: k, cap: DENSE_CAP });
    }
    let defect = m.hermitian_defect();
    if defect > HERMITIAN_INPUT_TOL {
        return Err(Error::NotHermitian { defect });
    }
    let n = 2 * k;
    let mut a = vec![0.0; n * n];
    for i in 0..k {
        for j in 0..k {
            // symmetrize away round-off so Jacobi sees an exactly symmetric matrix
            let z = 0.5 * (m.get(i, j) + m.get(j, i).conj());
            a[i * n + j] = z.re;
            a[(i + k) * n + j + k] = z.re;
            a[i * n + j + k] = -z.im;
            a[(i + k) * n + j] = z.im;
        }
    }
    let mut values = jacobi_eigen(a, n, false, 1e-12).values;
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(m: &DenseComplex) -> Result<Vec<f64>> {
    let paired = embedded_eigenvalues(m)?;
    Ok(paired.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect())
}

#[derive(Debug, Clone)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<f64>,
    pub min_eig: f64,
    pub max_eig: f64,
    pub hermitian_defect: f64,
}

impl SpectrumReport {
    pub fn of(m: &DenseComplex) -> Result<Self> {
        let eigenvalues = hermitian_eigenvalues(m)?;
        Ok(SpectrumReport {
            min_eig: eigenvalues.first().copied().unwrap_or(0.0),
            max_eig: eigenvalues.last().copied().unwrap_or(0.0),
            hermitian_defect: m.hermitian_defect(),
            eigenvalues,
        })
    }

    pub fn is_psd_at(&self, tol: f64) -> bool {
        self.min_eig >= -tol
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EnergyReport {
    /// `Re(x† L_N x)`.
    pub quadratic_form: f64,
    /// Imaginary part of `x† L_N x`, zero up to round-off.
    pub quadratic_imag: f64,
    /// `½ Σ_e (1/δ_e) Σ_{u,v∈e} ‖F⃗_u D_u^-½ x_u − F⃗_v D_v^-½ x_v‖²`.
    pub sum_form: f64,
    pub relative_gap: f64,
}

/// Evaluates the normalized Dirichlet energy twice: as a quadratic form and
/// as a sum of squared disagreements over hyperedges.
pub fn dirichlet_energy(
    h: &DirectedHypergraph,
    a: &SheafAssignment,
    bundle: &LaplacianBundle,
    x: &[Complex64],
) -> Result<EnergyReport> {
    let d = a.d();
    let n = h.num_vertices();
    if x.len() != n * d {
        return Err(Error::Dimension {
            expected: n * d,
            found: x.len(),
        });
    }
    let inv_sqrt = bundle
        .d_v_inv_sqrt
        .as_ref()
        .ok_or_else(|| Error::Config("Dirichlet energy needs a normalized bundle".into()))?;

    let lx = apply_laplacian(bundle, x, 1)?;
    let quad: Complex64 = x.iter().zip(&lx).map(|(a, b)| a.conj() * b).sum();

    // z_u = D_u^-½ x_u, then y_{u,e} = S F z_u
    let z: Vec<Vec<Complex64>> = (0..n)
        .map(|u| {
            let m = &inv_sqrt[u];
            (0..d)
                .map(|i| (0..d).map(|k| m[i * d + k] * x[u * d + k]).sum())
                .collect()
        })
        .collect();
    let mut sum = 0.0;
    for (e, edge) in h.edges().iter().enumerate() {
        let ys: Vec<Vec<Complex64>> = edge
            .members()
            .map(|(u, _)| {
                let f = a.directed_restriction(h, u, e)?;
                Ok((0..d).map(|i| (0..d).map(|k| f[i * d + k] * z[u][k]).sum()).collect())
            })
            .collect::<Result<_>>()?;
        let mut acc = 0.0;
        for yu in &ys {
            for yv in &ys {
                acc += yu.iter().zip(yv).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>();
            }
        }
        sum += 0.5 * acc / edge.degree() as f64;
    }
    Ok(EnergyReport {
        quadratic_form: quad.re,
        quadratic_imag: quad.im,
        sum_form: sum,
        relative_gap: (quad.re - sum).abs() / quad.re.abs().max(1.0),
    })
}

/// One named check with the measured value and its bound.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub bound: f64,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: &'static str, value: f64, bound: f64) -> Self {
        Check {
            name,
            value,
            bound,
            passed: value <= bound,
        }
    }

    pub fn at_least(name: &'static str, value: f64, bound: f64) -> Self {
        Check {
            name,
            value,
            bound,
            passed: value >= bound,
        }
    }
}

pub const SUITE_CHECKS: [&str; 6] = [
    "hermitian",
    "pairing",
    "min_eig",
    "max_eig",
    "q0_real",
    "dirichlet",
];

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub spectrum: SpectrumReport,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Spectral checks on the normalized Laplacian of one instance: Hermitian
/// defect, doubled-spectrum pairing, `0 ≤ λ ≤ 1`, realness at `q = 0`, and
/// Dirichlet sum form versus quadratic form on a random probe signal.
pub fn verify_spectral_suite(h: &DirectedHypergraph, a: &SheafAssignment, probe_seed: u64) -> Result<SuiteReport> {
    let bundle = build_laplacian(h, a, true)?;
    let l = bundle.l.to_dense()?;
    let defect = l.hermitian_defect();
    let paired = embedded_eigenvalues(&l)?;
    let pairing = paired.chunks(2).map(|p| (p[1] - p[0]).abs()).fold(0.0, f64::max);
    let spectrum = SpectrumReport::of(&l)?;

    let imag = if a.q() == 0.0 { l.max_abs_imag() } else { 0.0 };

    let mut rng = ChaCha8Rng::seed_from_u64(probe_seed);
    let x: Vec<Complex64> = (0..l.rows)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let energy = dirichlet_energy(h, a, &bundle, &x)?;

    let checks = vec![
        Check::at_most("hermitian", defect, 1e-10),
        Check::at_most("pairing", pairing, 1e-9),
        Check::at_least("min_eig", spectrum.min_eig, -SPECTRAL_TOL),
        Check::at_most("max_eig", spectrum.max_eig, 1.0 + SPECTRAL_TOL),
        Check::at_most("q0_real", imag, 1e-12),
        Check::at_most("dirichlet", energy.relative_gap, 1e-9),
    ];
    Ok(SuiteReport { spectrum, checks })
}

/// Aggregate over many random instances.
#[derive(Debug, Clone, Default)]
pub struct RandomSuiteReport {
    pub trials: usize,
    /// Pass count per entry of [`SUITE_CHECKS`].
    pub passes: Vec<usize>,
    /// Instances where the prior linear operator has a negative eigenvalue.
    pub duta_non_psd: usize,
    /// Serialized instances that failed, with the names of failed checks.
    pub failures: Vec<(String, Vec<&'static str>)>,
}

impl RandomSuiteReport {
    pub fn all_passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn render(&self) -> String {
        let mut s = format!("trials {}\n", self.trials);
        for (name, count) in SUITE_CHECKS.iter().zip(&self.passes) {
            s.push_str(&format!("check {name} passed {count}/{}\n", self.trials));
        }
        s.push_str(&format!("duta_non_psd {}/{}\n", self.duta_non_psd, self.trials));
        for (text, failed) in &self.failures {
            s.push_str(&format!("counterexample failed={}\n{text}end\n", failed.join(",")));
        }
        s
    }
}

/// Runs [`verify_spectral_suite`] on `trials` random instances. Trial `t`
/// draws from its own generator seeded by `(seed, t)`, so any trial can be
/// reproduced alone.
pub fn run_random_suite(trials: usize, seed: u64, spec: &InstanceSpec) -> Result<RandomSuiteReport> {
    let mut report = RandomSuiteReport {
        trials,
        passes: vec![0; SUITE_CHECKS.len()],
        ..Default::default()
    };
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(t as u64);
        let inst = random_instance(&mut rng, spec);
        let suite = verify_spectral_suite(&inst.h, &inst.sheaf, rng.gen())?;
        for (k, c) in suite.checks.iter().enumerate() {
            if c.passed {
                report.passes[k] += 1;
            }
        }
        if !suite.passed() {
            let failed = suite.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
            report.failures.push((format_instance(&inst), failed));
        }
        if !duta_is_psd(&inst)? {
            report.duta_non_psd += 1;
        }
    }
    Ok(report)
}

fn duta_is_psd(inst: &Instance) -> Result<bool> {
    let l = duta_linear(&inst.h, &inst.sheaf)?;
    Ok(SpectrumReport::of(&l)?.is_psd_at(SPECTRAL_TOL))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypergraph::Hyperedge;

    #[test]
    fn identity_spectrum() {
        let e = hermitian_eigenvalues(&DenseComplex::identity(3)).unwrap();
        assert!(e.iter().all(|x| (x - 1.0).abs() < 1e-14));
    }

    #[test]
    fn pauli_y_spectrum() {
        let mut m = DenseComplex::zeros(2, 2);
        m.set(0, 1, Complex64::new(0.0, -1.0));
        m.set(1, 0, Complex64::new(0.0, 1.0));
        let e = hermitian_eigenvalues(&m).unwrap();
        assert!((e[0] + 1.0).abs() < 1e-14 && (e[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = DenseComplex::zeros(2, 2);
        m.set(0, 1, Complex64::new(1.0, 0.0));
        assert!(matches!(hermitian_eigenvalues(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn zero_signal_has_zero_energy() {
        let h = DirectedHypergraph::new(3, vec![Hyperedge::new(vec![0], vec![1, 2])]).unwrap();
        let a = SheafAssignment::trivial(&h, 0.25, 2).unwrap();
        let b = build_laplacian(&h, &a, true).unwrap();
        let e = dirichlet_energy(&h, &a, &b, &vec![Complex64::new(0.0, 0.0); 6]).unwrap();
        assert_eq!(e.quadratic_form, 0.0);
        assert_eq!(e.sum_form, 0.0);
    }

    #[test]
    fn unnormalized_bundle_is_rejected_for_energy() {
        let h = DirectedHypergraph::new(2, vec![Hyperedge::undirected(vec![0, 1])]).unwrap();
        let a = SheafAssignment::trivial(&h, 0.0, 1).unwrap();
        let b = build_laplacian(&h, &a, false).unwrap();
        assert!(dirichlet_energy(&h, &a, &b, &[Complex64::new(1.0, 0.0); 2]).is_err());
    }
}
