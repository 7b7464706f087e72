//! Small dense and structured solvers shared by the oracles and baselines.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::{Result, SocoError};

pub(crate) fn cholesky(a: DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(a).ok_or(SocoError::NotPositiveDefinite)
}

pub(crate) fn spd_solve(a: DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    Ok(cholesky(a)?.solve(b))
}

pub(crate) fn smallest_eigenvalue(a: DMatrix<f64>) -> f64 {
    SymmetricEigen::new(a).eigenvalues.min()
}

/// Jacobi-preconditioned conjugate gradient on a matrix-free SPD operator.
///
/// Stops when `‖r‖ ≤ tol · max(1, ‖b‖)`.
pub(crate) fn conjugate_gradient<F>(
    apply: F,
    diag: &DVector<f64>,
    b: &DVector<f64>,
    x0: DVector<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<DVector<f64>>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let target = tol * b.norm().max(1.0);
    let mut x = x0;
    let mut r = b - apply(&x);
    let precond = |v: &DVector<f64>| v.component_div(diag);
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = r.dot(&z);
    for _ in 0..max_iter {
        if r.norm() <= target {
            return Ok(x);
        }
        let ap = apply(&p);
        let pap = p.dot(&ap);
        if pap <= 0.0 {
            return Err(SocoError::NotPositiveDefinite);
        }
        let step = rz / pap;
        x.axpy(step, &p, 1.0);
        r.axpy(-step, &ap, 1.0);
        z = precond(&r);
        let rz_next = r.dot(&z);
        p = &z + (rz_next / rz) * &p;
        rz = rz_next;
    }
    let residual = r.norm();
    if residual <= target {
        Ok(x)
    } else {
        Err(SocoError::NonConvergence { iterations: max_iter, residual })
    }
}

/// Solves a symmetric positive-definite block-tridiagonal system.
///
/// `diag[t]` is block `(t, t)` and `sub[t]` is block `(t + 1, t)`; the
/// super-diagonal blocks are their transposes. Block LDLᵀ elimination.
pub(crate) fn block_tridiagonal_solve(
    diag: Vec<DMatrix<f64>>,
    sub: &[DMatrix<f64>],
    rhs: &[DVector<f64>],
) -> Result<Vec<DVector<f64>>> {
    let n = diag.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    debug_assert_eq!(sub.len() + 1, n);
    debug_assert_eq!(rhs.len(), n);
    let mut factors: Vec<Cholesky<f64, Dyn>> = Vec::with_capacity(n);
    let mut g: Vec<DVector<f64>> = Vec::with_capacity(n);
    for (t, d) in diag.into_iter().enumerate() {
        let (schur, gt) = if t == 0 {
            (d, rhs[0].clone())
        } else {
            let prev = &factors[t - 1];
            let b = &sub[t - 1];
            // B S⁻¹ Bᵀ and B S⁻¹ g
            let sinv_bt = prev.solve(&b.transpose());
            let sinv_g = prev.solve(&g[t - 1]);
            (d - b * sinv_bt, &rhs[t] - b * sinv_g)
        };
        factors.push(cholesky(schur)?);
        g.push(gt);
    }
    let mut x = vec![DVector::zeros(0); n];
    x[n - 1] = factors[n - 1].solve(&g[n - 1]);
    for t in (0..n - 1).rev() {
        let rhs_t = &g[t] - sub[t].transpose() * &x[t + 1];
        x[t] = factors[t].solve(&rhs_t);
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assemble(diag: &[DMatrix<f64>], sub: &[DMatrix<f64>]) -> DMatrix<f64> {
        let b = diag[0].nrows();
        let n = diag.len() * b;
        let mut full = DMatrix::zeros(n, n);
        for (t, d) in diag.iter().enumerate() {
            full.view_mut((t * b, t * b), (b, b)).copy_from(d);
        }
        for (t, s) in sub.iter().enumerate() {
            full.view_mut(((t + 1) * b, t * b), (b, b)).copy_from(s);
            full.view_mut((t * b, (t + 1) * b), (b, b)).copy_from(&s.transpose());
        }
        full
    }

    #[test]
    fn block_tridiagonal_matches_dense_solve() {
        let b = 3;
        let diag: Vec<_> = (0..5)
            .map(|t| DMatrix::from_fn(b, b, |i, j| if i == j { 4.0 + t as f64 } else { 0.3 }))
            .collect();
        let sub: Vec<_> = (0..4)
            .map(|t| DMatrix::from_fn(b, b, |i, j| if i == j { -1.0 } else { 0.1 * (t as f64 - 1.0) }))
            .collect();
        let rhs: Vec<_> = (0..5).map(|t| DVector::from_fn(b, |i, _| (i + t) as f64 - 2.0)).collect();
        let full = assemble(&diag, &sub);
        let stacked = DVector::from_iterator(15, rhs.iter().flat_map(|v| v.iter().copied()));
        let dense = full.clone().cholesky().unwrap().solve(&stacked);
        let blocks = block_tridiagonal_solve(diag, &sub, &rhs).unwrap();
        for t in 0..5 {
            for i in 0..b {
                assert!((blocks[t][i] - dense[t * b + i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cg_matches_dense_solve() {
        let a = DMatrix::from_fn(6, 6, |i, j| if i == j { 5.0 } else { 1.0 / (1.0 + (i + j) as f64) });
        let b = DVector::from_fn(6, |i, _| i as f64 + 1.0);
        let diag = a.diagonal();
        let x = conjugate_gradient(|v| &a * v, &diag, &b, DVector::zeros(6), 1e-13, 100).unwrap();
        let dense = spd_solve(a.clone(), &b).unwrap();
        assert!((x - dense).amax() < 1e-11);
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(spd_solve(a, &DVector::zeros(2)), Err(SocoError::NotPositiveDefinite)));
    }
}
