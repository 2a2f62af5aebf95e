//! Central finite differences, the independent oracle the derivative tests
//! check analytic gradients and Jacobians against.

use crate::scalar::Scalar;

/// Central-difference gradient of a scalar function at `x`.
pub fn central_diff<F: Scalar>(mut f: impl FnMut(&[F]) -> F, x: &[F], h: F) -> Vec<F> {
    let mut probe = x.to_vec();
    let two_h = h + h;
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let fp = f(&probe);
        probe[i] = x[i] - h;
        let fm = f(&probe);
        probe[i] = x[i];
        grad.push((fp - fm) / two_h);
    }
    grad
}

/// Central-difference Jacobian of a vector function at `x`, row-major
/// (rows = outputs, cols = inputs).
pub fn central_diff_jac<F: Scalar>(
    mut f: impl FnMut(&[F]) -> Vec<F>,
    x: &[F],
    h: F,
) -> Vec<Vec<F>> {
    let mut probe = x.to_vec();
    let two_h = h + h;
    let m = f(x).len();
    let mut jac = vec![vec![F::zero(); x.len()]; m];
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let fp = f(&probe);
        probe[i] = x[i] - h;
        let fm = f(&probe);
        probe[i] = x[i];
        for r in 0..m {
            jac[r][i] = (fp[r] - fm[r]) / two_h;
        }
    }
    jac
}

/// Relative error with an absolute floor of one, the usual yardstick for
/// derivative checks (raw relative error explodes on near-zero entries).
pub fn rel_err<F: Scalar>(a: F, b: F) -> F {
    (a - b).abs() / F::one().max(a.abs()).max(b.abs())
}
