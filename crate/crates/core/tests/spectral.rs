use dshn::block::DenseComplex;
use dshn::instances::{format_instance, parse_instance, random_instance, Instance, InstanceSpec};
use dshn::io::{format_hypergraph, parse_hypergraph};
use dshn::laplacian::{apply_laplacian, build_laplacian, entrywise_block};
use dshn::reference::duta_linear;
use dshn::sheaf::SheafAssignment;
use dshn::spectral::{dirichlet_energy, embedded_eigenvalues, hermitian_eigenvalues, verify_spectral_suite, SpectrumReport};
use dshn::theorems::{prior_counterexample, theorem_suites};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn instance(seed: u64) -> Instance {
    random_instance(&mut ChaCha8Rng::seed_from_u64(seed), &InstanceSpec::default())
}

fn signal(seed: u64, len: usize) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    (0..len)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect()
}

fn dense(inst: &Instance, normalized: bool) -> DenseComplex {
    build_laplacian(&inst.h, &inst.sheaf, normalized).unwrap().l.to_dense().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn laplacians_are_hermitian_and_bounded(seed in any::<u64>()) {
        let inst = instance(seed);
        let l = dense(&inst, false);
        prop_assert!(l.hermitian_defect() < 1e-8);
        prop_assert!(SpectrumReport::of(&l).unwrap().min_eig >= -1e-8);

        let ln = SpectrumReport::of(&dense(&inst, true)).unwrap();
        prop_assert!(ln.min_eig >= -1e-8);
        prop_assert!(ln.max_eig <= 1.0 + 1e-8);
    }

    #[test]
    fn product_form_matches_entrywise_blocks(seed in any::<u64>()) {
        let inst = instance(seed);
        let l = dense(&inst, false);
        let d = inst.sheaf.d();
        for u in 0..inst.h.num_vertices() {
            for v in 0..inst.h.num_vertices() {
                let blk = entrywise_block(&inst.h, &inst.sheaf, u, v).unwrap();
                for i in 0..d {
                    for j in 0..d {
                        prop_assert!((blk[i * d + j] - l.get(u * d + i, v * d + j)).norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn matrix_free_apply_matches_dense(seed in any::<u64>(), normalized in any::<bool>()) {
        let inst = instance(seed);
        let bundle = build_laplacian(&inst.h, &inst.sheaf, normalized).unwrap();
        let l = bundle.l.to_dense().unwrap();
        let cols = 2;
        let x = signal(seed, l.rows * cols);
        let lx = apply_laplacian(&bundle, &x, cols).unwrap();
        for c in 0..cols {
            let xc: Vec<Complex64> = (0..l.rows).map(|r| x[r * cols + c]).collect();
            for (r, want) in l.matvec(&xc).into_iter().enumerate() {
                prop_assert!((lx[r * cols + c] - want).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn dirichlet_energy_two_ways(seed in any::<u64>()) {
        let inst = instance(seed);
        let bundle = build_laplacian(&inst.h, &inst.sheaf, true).unwrap();
        let x = signal(seed, inst.h.num_vertices() * inst.sheaf.d());
        let e = dirichlet_energy(&inst.h, &inst.sheaf, &bundle, &x).unwrap();
        prop_assert!(e.relative_gap < 1e-9);
        prop_assert!(e.quadratic_imag.abs() < 1e-9);
        prop_assert!(e.quadratic_form >= -1e-9);
    }

    #[test]
    fn embedded_spectrum_pairs_and_trace(seed in any::<u64>()) {
        let inst = instance(seed);
        let l = dense(&inst, true);
        let paired = embedded_eigenvalues(&l).unwrap();
        prop_assert_eq!(paired.len(), 2 * l.rows);
        for k in 0..l.rows {
            prop_assert!((paired[2 * k] - paired[2 * k + 1]).abs() < 1e-8);
        }
        let eig = hermitian_eigenvalues(&l).unwrap();
        let trace: f64 = (0..l.rows).map(|i| l.get(i, i).re).sum();
        prop_assert!((eig.iter().sum::<f64>() - trace).abs() < 1e-8);
    }

    #[test]
    fn charge_is_periodic_and_vanishes_on_undirected(seed in any::<u64>()) {
        let inst = instance(seed);
        let a = dense(&inst, true);
        let shifted = Instance { h: inst.h.clone(), sheaf: inst.sheaf.with_q(inst.sheaf.q() + 1.0) };
        prop_assert!(a.max_abs_diff(&dense(&shifted, true)) < 1e-10);

        let real = Instance { h: inst.h.clone(), sheaf: inst.sheaf.with_q(0.0) };
        prop_assert!(dense(&real, true).data.iter().all(|z| z.im.abs() < 1e-12));

        if inst.h.is_undirected() {
            let other = Instance { h: inst.h.clone(), sheaf: inst.sheaf.with_q(0.17) };
            prop_assert!(a.max_abs_diff(&dense(&other, true)) < 1e-12);
        }
    }

    #[test]
    fn suite_passes_on_random_instances(seed in any::<u64>()) {
        let inst = instance(seed);
        let report = verify_spectral_suite(&inst.h, &inst.sheaf, seed).unwrap();
        prop_assert!(report.passed(), "{:?}", report);
    }

    #[test]
    fn text_formats_round_trip(seed in any::<u64>()) {
        let inst = instance(seed);
        let h = parse_hypergraph(&format_hypergraph(&inst.h)).unwrap();
        prop_assert_eq!(&h, &inst.h);
        let back = parse_instance(&format_instance(&inst)).unwrap();
        prop_assert_eq!(&back.h, &inst.h);
        prop_assert_eq!(back.sheaf.maps(), inst.sheaf.maps());
        prop_assert_eq!(back.sheaf.config(), inst.sheaf.config());
    }
}

#[test]
fn duta_linear_laplacian_fails_psd_on_some_instances() {
    let mut hits = 0;
    for seed in 0..100 {
        let inst = instance(seed);
        let m = duta_linear(&inst.h, &inst.sheaf).unwrap();
        if !SpectrumReport::of(&m).unwrap().is_psd_at(1e-8) {
            hits += 1;
        }
    }
    assert!(hits > 0);
}

#[test]
fn counterexample_separates_the_two_constructions() {
    let r = prior_counterexample().unwrap();
    assert!(r.separates());
    assert!(r.ours.min_eig >= -1e-12);
    assert!(r.prior.min_eig < 0.0);
}

#[test]
fn classical_constructions_are_recovered() {
    for r in theorem_suites(25, 11).unwrap() {
        assert!(r.passed(), "{r:?}");
    }
}

#[test]
fn trivial_sheaf_on_a_pair_is_the_graph_laplacian() {
    let h = parse_hypergraph("2 1\ne 1 : 1 2 |\n").unwrap();
    let a = SheafAssignment::trivial(&h, 0.0, 1).unwrap();
    let l = build_laplacian(&h, &a, false).unwrap().l.to_dense().unwrap();
    assert_eq!(l, DenseComplex::from_real(2, 2, &[0.5, -0.5, -0.5, 0.5]));
}
