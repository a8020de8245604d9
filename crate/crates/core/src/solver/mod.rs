//! Smoothers, multigrid cycles on the auxiliary hierarchy and the auxiliary
//! space preconditioner for the original system.

mod asmg;
mod multigrid;
mod smoother;

pub use asmg::{AsmgOptions, AsmgPreconditioner, AuxSolver, ExactSolve, Mode};
pub use multigrid::{CycleOperator, MgOptions, Multigrid, NearCorrection};
pub use smoother::{check_gs_continuity, GsContinuity, Smoother, SmootherKind, DEFAULT_DAMPING};

use crate::sparse::{norm2, CsrMatrix, LinearOperator};

/// Geometric-mean residual reduction of the stationary iteration
/// `x <- x + B (b - A x)` with `b = 0`, starting from `x0`.
///
/// The iterate is rescaled after every step so the residual never sinks
/// into round-off. With `mean_free` the constant component is removed as
/// well, which leaves the residual of a pure Neumann system unchanged but
/// keeps null-space drift from swamping it.
pub fn stationary_rate(
    a: &CsrMatrix,
    b_op: &dyn LinearOperator,
    x0: &[f64],
    iterations: usize,
    mean_free: bool,
) -> f64 {
    let n = a.nrows();
    let mut x = x0.to_vec();
    let zero = vec![0.0; n];
    let mut r = vec![0.0; n];
    let mut e = vec![0.0; n];
    a.residual(&zero, &x, &mut r);
    let mut prev = norm2(&r);
    if prev == 0.0 || iterations == 0 {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for _ in 0..iterations {
        b_op.apply(&r, &mut e);
        for (xi, ei) in x.iter_mut().zip(&e) {
            *xi += ei;
        }
        if mean_free {
            let m = x.iter().sum::<f64>() / n as f64;
            x.iter_mut().for_each(|v| *v -= m);
        }
        a.residual(&zero, &x, &mut r);
        let now = norm2(&r);
        if now == 0.0 {
            return 0.0;
        }
        log_sum += (now / prev).ln();
        let s = 1.0 / norm2(&x);
        x.iter_mut().for_each(|v| *v *= s);
        r.iter_mut().for_each(|v| *v *= s);
        prev = now * s;
    }
    (log_sum / iterations as f64).exp()
}

/// A-norm `sqrt(x^T A x)`.
pub fn energy_norm(a: &CsrMatrix, x: &[f64]) -> f64 {
    let ax = a.spmv(x).expect("matching dimensions");
    crate::sparse::dot(x, &ax).max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble_stiffness, FeSpace};
    use crate::hierarchy::{AuxHierarchy, HierarchyOptions};
    use crate::mesh::{gen_graded_square, gen_holes_domain, gen_uniform_square, BoundaryKind};
    use crate::sparse::{dot, SpdFactor};
    use crate::transfer::assemble_transfer;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    fn mean_free(mut v: Vec<f64>) -> Vec<f64> {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter_mut().for_each(|x| *x -= m);
        v
    }

    #[test]
    fn sgs_error_propagation_contracts() {
        let m = gen_uniform_square(8, BoundaryKind::Dirichlet).unwrap();
        let a = assemble_stiffness(&m, &FeSpace::new(&m)).unwrap();
        let s = Smoother::new(&a, SmootherKind::SymmetricGaussSeidel, 1.0).unwrap();
        // columns of the error propagation matrix, then power iteration on it
        let n = a.nrows();
        let propagate = |e: &[f64]| {
            // error e solves A e = 0 from start e
            let mut u = e.to_vec();
            s.pre(&a, &mut u, &vec![0.0; n], 1, &mut Vec::new());
            u
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut v = random_vec(n, &mut rng);
        let mut ratio = 0.0;
        for _ in 0..200 {
            let w = propagate(&v);
            ratio = energy_norm(&a, &w) / energy_norm(&a, &v);
            let s = energy_norm(&a, &w);
            v = w.iter().map(|x| x / s).collect();
        }
        assert!(ratio < 1.0, "{ratio}");
    }

    #[test]
    fn identity_prolongation_gives_exact_two_level_solve() {
        let m = gen_uniform_square(6, BoundaryKind::Dirichlet).unwrap();
        let a = assemble_stiffness(&m, &FeSpace::new(&m)).unwrap();
        let n = a.nrows();
        let mg = Multigrid::from_parts(
            vec![a.clone(), a.clone()],
            vec![CsrMatrix::identity(n)],
            vec![Vec::new(), Vec::new()],
            MgOptions::default(),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f = random_vec(n, &mut rng);
        let mut u = vec![0.0; n];
        mg.cycle(1, &f, &mut u);
        let r = a.spmv(&u).unwrap();
        for (x, y) in r.iter().zip(&f) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn vcycle_contracts_in_energy_norm() {
        let m = gen_graded_square(8, 2, BoundaryKind::Dirichlet).unwrap();
        let h = AuxHierarchy::build(&m, HierarchyOptions::default()).unwrap();
        let mg = Multigrid::from_hierarchy(&h, MgOptions::default()).unwrap();
        let a = mg.finest_matrix().clone();
        let n = a.nrows();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = vec![0.0; n];
        for _ in 0..50 {
            let mut u = random_vec(n, &mut rng);
            let before = energy_norm(&a, &u);
            mg.iterate(&f, &mut u);
            assert!(energy_norm(&a, &u) <= before);
        }
        let rate = stationary_rate(&a, &mg, &random_vec(n, &mut rng), 30, false);
        assert!(rate < 0.3, "{rate}");
    }

    #[test]
    fn empty_near_sets_match_plain_cycle_bitwise() {
        let m = gen_holes_domain(16, 1, BoundaryKind::Neumann).unwrap();
        let h = AuxHierarchy::build(&m, HierarchyOptions::default()).unwrap();
        let mats: Vec<_> = h.levels.iter().map(|l| l.matrix.clone()).collect();
        let empty = vec![Vec::new(); mats.len()];
        let plain = Multigrid::from_parts(mats.clone(), h.prolongations.clone(), empty.clone(), MgOptions::default())
            .unwrap();
        let with = Multigrid::from_parts(
            mats,
            h.prolongations.clone(),
            empty,
            MgOptions {
                near: NearCorrection::AfterCoarse,
                ..MgOptions::default()
            },
        )
        .unwrap();
        let n = plain.dim();
        let f = random_vec(n, &mut ChaCha8Rng::seed_from_u64(6));
        let (mut u, mut v) = (vec![0.0; n], vec![0.0; n]);
        plain.apply(&f, &mut u);
        with.apply(&f, &mut v);
        assert_eq!(u, v);
    }

    #[test]
    fn full_near_set_is_an_exact_solve() {
        let m = gen_uniform_square(8, BoundaryKind::Dirichlet).unwrap();
        let h = AuxHierarchy::build(&m, HierarchyOptions::default()).unwrap();
        let mats: Vec<_> = h.levels.iter().map(|l| l.matrix.clone()).collect();
        let near: Vec<Vec<usize>> = mats.iter().map(|a| (0..a.nrows()).collect()).collect();
        let mg = Multigrid::from_parts(
            mats,
            h.prolongations.clone(),
            near,
            MgOptions {
                near: NearCorrection::AfterCoarse,
                nu: 0,
                ..MgOptions::default()
            },
        )
        .unwrap();
        let a = mg.finest_matrix().clone();
        let f = random_vec(a.nrows(), &mut ChaCha8Rng::seed_from_u64(7));
        let mut u = vec![0.0; a.nrows()];
        mg.apply(&f, &mut u);
        let r = a.spmv(&u).unwrap();
        for (x, y) in r.iter().zip(&f) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    fn setup(mesh: &crate::TriMesh) -> (CsrMatrix, AuxHierarchy, CsrMatrix) {
        let a = assemble_stiffness(mesh, &FeSpace::new(mesh)).unwrap();
        let h = AuxHierarchy::build(mesh, HierarchyOptions::default()).unwrap();
        let fine = h.finest();
        let (pi, _) = assemble_transfer((&fine.mesh, &fine.space), (mesh, &FeSpace::new(mesh)));
        (a, h, pi)
    }

    #[test]
    fn preconditioner_is_symmetric_in_both_modes() {
        let m = gen_graded_square(6, 2, BoundaryKind::Dirichlet).unwrap();
        let (a, h, pi) = setup(&m);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for mode in [Mode::Additive, Mode::Multiplicative] {
            let aux = AuxSolver::Cycles(Multigrid::from_hierarchy(&h, MgOptions::default()).unwrap(), 1);
            let opts = AsmgOptions {
                mode,
                ..AsmgOptions::default()
            };
            let b = AsmgPreconditioner::new(&a, &pi, &aux, opts).unwrap();
            let n = a.nrows();
            for _ in 0..10 {
                let (r, s) = (random_vec(n, &mut rng), random_vec(n, &mut rng));
                let (mut br, mut bs) = (vec![0.0; n], vec![0.0; n]);
                b.apply(&r, &mut br);
                b.apply(&s, &mut bs);
                let (x, y) = (dot(&br, &s), dot(&r, &bs));
                assert!((x - y).abs() <= 1e-10 * x.abs().max(y.abs()), "{mode}: {x} {y}");
            }
        }
    }

    #[test]
    fn additive_rejects_one_sided_gauss_seidel() {
        let m = gen_uniform_square(4, BoundaryKind::Dirichlet).unwrap();
        let (a, h, pi) = setup(&m);
        let aux = AuxSolver::Cycles(Multigrid::from_hierarchy(&h, MgOptions::default()).unwrap(), 1);
        let opts = AsmgOptions {
            mode: Mode::Additive,
            smoother: SmootherKind::GaussSeidel,
            ..AsmgOptions::default()
        };
        assert!(matches!(
            AsmgPreconditioner::new(&a, &pi, &aux, opts),
            Err(crate::LinalgError::Config(_))
        ));
    }

    #[test]
    fn multiplicative_without_smoother_is_the_auxiliary_correction() {
        let m = gen_uniform_square(5, BoundaryKind::Dirichlet).unwrap();
        let (a, h, pi) = setup(&m);
        let aux_a = h.finest().matrix.clone();
        let factor = SpdFactor::new(&aux_a).unwrap();
        let opts = AsmgOptions {
            sweeps: 0,
            ..AsmgOptions::default()
        };
        let aux = AuxSolver::Exact(factor.clone());
        let b = AsmgPreconditioner::new(&a, &pi, &aux, opts).unwrap();
        let r = random_vec(a.nrows(), &mut ChaCha8Rng::seed_from_u64(9));
        let mut y = vec![0.0; r.len()];
        b.apply(&r, &mut y);
        let ra = pi.transpose().spmv(&r).unwrap();
        let want = pi.spmv(&factor.solve(&ra)).unwrap();
        for (p, q) in y.iter().zip(&want) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_solve_has_zero_rate() {
        let m = gen_uniform_square(6, BoundaryKind::Neumann).unwrap();
        let a = assemble_stiffness(&m, &FeSpace::new(&m)).unwrap();
        let exact = ExactSolve(SpdFactor::new(&a).unwrap());
        let x0 = mean_free(random_vec(a.nrows(), &mut ChaCha8Rng::seed_from_u64(10)));
        assert!(stationary_rate(&a, &exact, &x0, 1, true) < 1e-10);
    }
}
