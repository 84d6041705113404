use crate::scalar::Scalar;

/// Result of a scalar maximization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum<T> {
    pub argmax: T,
    pub value: T,
    pub evaluations: usize,
    /// The bracket shrank below the tolerance before the iteration cap.
    pub converged: bool,
}

const MAX_ITER: usize = 200;

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
///
/// Both endpoints are evaluated as well, so a maximum sitting on the
/// boundary is returned exactly rather than approached to within `tol`.
pub fn golden_section_max<T, F>(mut f: F, lo: T, hi: T, tol: T) -> Maximum<T>
where
    T: Scalar,
    F: FnMut(T) -> T,
{
    assert!(lo <= hi, "empty bracket");
    let inv_phi = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut evaluations = 2;
    let mut iterations = 0;
    while b - a > tol && iterations < MAX_ITER {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        evaluations += 1;
        iterations += 1;
    }
    let converged = b - a <= tol;
    let mut best = if fc >= fd { (c, fc) } else { (d, fd) };
    for x in [lo, hi] {
        let fx = f(x);
        evaluations += 1;
        if fx > best.1 {
            best = (x, fx);
        }
    }
    Maximum { argmax: best.0, value: best.1, evaluations, converged }
}
