use nalgebra::SymmetricEigen;

use super::active_set::SubsetCursor;
use super::kkt::check_set;
use super::{ActiveSet, Tolerances};
use crate::error::{Error, Result};
use crate::lifting::LiftedQP;
use crate::linalg::{self, Mat, Vector};
use crate::problem::Parameter;

/// Shrinks a sufficient active set to a subset satisfying LICQ with the same minimizer.
///
/// `K = U diag(s) Uᵀ` is split into its range and null parts `Kn` (q columns). The
/// multipliers reproducing the minimizer are `λ = λ₀ + Kn ξ` with `λ₀` the minimum-norm
/// solution; a vertex of `{ξ : Kn ξ >= -λ₀}` zeroes q multipliers, which are dropped.
pub fn reduce_to_licq(qp: &LiftedQP, aset: &ActiveSet, theta: &Parameter, tol: &Tolerances) -> Result<ActiveSet> {
    check_set(qp, aset)?;
    let th = theta.stacked();
    if th.len() != qp.dims.ntheta() {
        return Err(Error::dim("theta", qp.dims.ntheta(), th.len()));
    }
    let r = qp.rhs(&th);
    let mut current = aset.clone();

    for _ in 0..=aset.cardinality() {
        let idx = current.indices();
        if idx.is_empty() {
            check_feasible(qp, &r, &Vector::zeros(qp.nz()), tol)?;
            return Ok(current);
        }
        let k = linalg::select_sub(qp.ghg(), &idx, &idx);
        let eig = SymmetricEigen::new(k.clone());
        let smax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
        let cut = tol.tol_singular * smax;
        let (range, null): (Vec<usize>, Vec<usize>) = (0..idx.len()).partition(|&i| eig.eigenvalues[i] > cut);

        let r_a = Vector::from_iterator(idx.len(), idx.iter().map(|&i| r[i]));
        let mut lambda0 = Vector::zeros(idx.len());
        for &i in &range {
            let u = eig.eigenvectors.column(i);
            lambda0 -= u * (u.dot(&r_a) / eig.eigenvalues[i]);
        }
        let consistency = (&k * &lambda0 + &r_a).amax();
        if consistency > 1e-8 * (1.0 + r_a.amax()) {
            return Err(Error::NotSufficient(format!(
                "candidate equations are inconsistent (residual {consistency:.3e})"
            )));
        }
        let z = -(linalg::select_cols(qp.hinv_gt(), &idx) * &lambda0);
        check_feasible(qp, &r, &z, tol)?;

        if null.is_empty() {
            if let Some(i) = lambda0.iter().position(|l| *l < -tol.tol_lambda) {
                return Err(Error::NotSufficient(format!(
                    "multiplier of constraint {} is {:.3e}",
                    idx[i], lambda0[i]
                )));
            }
            return Ok(current);
        }

        let q = null.len();
        let kn = Mat::from_fn(idx.len(), q, |i, j| eig.eigenvectors[(i, null[j])]);
        let b = -&lambda0;
        let Some(corner) = find_corner(&kn, &b, tol.tol_lambda) else {
            return Err(Error::NotSufficient(
                "no nonnegative multipliers reproduce the candidate minimizer".into(),
            ));
        };
        for &e in &corner {
            current.remove(idx[e]);
        }
    }
    Err(Error::NoConvergence("LICQ reduction did not terminate".into()))
}

fn check_feasible(qp: &LiftedQP, r: &Vector, z: &Vector, tol: &Tolerances) -> Result<()> {
    let slack = r - qp.g() * z;
    if let Some((k, s)) = slack.iter().enumerate().find(|(_, s)| **s < -tol.tol_violation) {
        return Err(Error::NotSufficient(format!("constraint {k} violated by {:.3e}", -s)));
    }
    Ok(())
}

/// Rows `E` (|E| = q) of a vertex of `{ξ : Kn ξ >= b}`, found by enumerating
/// q-subsets with nonsingular `Kn_E`.
fn find_corner(kn: &Mat, b: &Vector, tol: f64) -> Option<Vec<usize>> {
    let (m, q) = kn.shape();
    SubsetCursor::new(m, q)
        .filter(|s| s.cardinality() == q)
        .find_map(|s| {
            let rows = s.indices();
            let ke = linalg::select_rows(kn, &rows);
            let lu = ke.clone().lu();
            let be = Vector::from_iterator(q, rows.iter().map(|&i| b[i]));
            let xi = lu.solve(&be)?;
            let sv = ke.singular_values();
            if sv.min() <= 1e-10 * sv.max() {
                return None;
            }
            let resid = kn * xi - b;
            resid.iter().all(|v| *v >= -tol).then_some(rows)
        })
}
