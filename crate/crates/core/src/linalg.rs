use nalgebra::{DMatrix, DVector};

/// Ratio of extreme singular values; infinite for singular input.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    let sv = m.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if !max.is_finite() || !min.is_finite() {
        return f64::INFINITY;
    }
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

const MAX_CONDITION: f64 = 1e13;

/// Solves `m x = rhs`, returning the condition estimate on failure.
pub fn solve(m: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>, f64> {
    let cond = condition_number(m);
    if cond > MAX_CONDITION {
        return Err(cond);
    }
    m.clone().lu().solve(rhs).ok_or(cond)
}

pub fn inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>, f64> {
    let cond = condition_number(m);
    if cond > MAX_CONDITION {
        return Err(cond);
    }
    m.clone().try_inverse().ok_or(cond)
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
