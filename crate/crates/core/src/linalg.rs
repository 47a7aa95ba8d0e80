//! Dense complex linear algebra helpers on top of nalgebra's SVD.

use nalgebra::DMatrix;

use crate::scalar::C64;

/// Relative singular-value threshold used for rank decisions.
pub const RANK_TOL: f64 = 1e-8;

pub type CMat = DMatrix<C64>;

/// Singular values in descending order.
pub fn singular_values(a: &CMat) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
    sv
}

pub fn condition_number(a: &CMat) -> f64 {
    let sv = singular_values(a);
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

pub fn rank(a: &CMat, rel_tol: f64) -> usize {
    let sv = singular_values(a);
    let Some(&top) = sv.first() else { return 0 };
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * top).count()
}

/// Orthonormal basis of the kernel, one vector per column.
pub fn null_space(a: &CMat, rel_tol: f64) -> CMat {
    let (rows, cols) = a.shape();
    if cols == 0 {
        return CMat::zeros(0, 0);
    }
    // Pad wide systems so that the thin SVD exposes the full right factor.
    let work = if rows < cols {
        let mut padded = CMat::zeros(cols, cols);
        padded.view_mut((0, 0), (rows, cols)).copy_from(a);
        padded
    } else {
        a.clone()
    };
    let svd = work.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let top = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let kept: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| top == 0.0 || svd.singular_values[i] <= rel_tol * top)
        .collect();
    let mut out = CMat::zeros(cols, kept.len());
    for (c, &i) in kept.iter().enumerate() {
        for r in 0..cols {
            out[(r, c)] = v_t[(i, r)].conj();
        }
    }
    out
}

/// Minimum-norm least-squares solution, plus the numerical rank used.
pub fn lstsq(a: &CMat, b: &CMat, rel_tol: f64) -> (CMat, usize) {
    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().unwrap();
    let v_t = svd.v_t.as_ref().unwrap();
    let top = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let mut x = CMat::zeros(a.ncols(), b.ncols());
    let mut used = 0;
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if top == 0.0 || s <= rel_tol * top {
            continue;
        }
        used += 1;
        let ui = u.column(i);
        let vi = v_t.row(i);
        for c in 0..b.ncols() {
            let coef = ui.dotc(&b.column(c)) / s;
            for r in 0..a.ncols() {
                x[(r, c)] += vi[r].conj() * coef;
            }
        }
    }
    (x, used)
}

/// Square solve through LU; `None` when singular.
pub fn solve(a: &CMat, b: &CMat) -> Option<CMat> {
    a.clone().lu().solve(b)
}

pub fn max_abs(values: impl IntoIterator<Item = C64>) -> f64 {
    values.into_iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Eigenvalues of a square complex matrix via the complex Schur form.
pub fn eigenvalues(a: &CMat) -> Vec<C64> {
    let n = a.nrows();
    if n == 0 {
        return Vec::new();
    }
    let schur = nalgebra::Schur::new(a.clone());
    let (_, t) = schur.unpack();
    (0..n).map(|i| t[(i, i)]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_space_of_wide_matrix() {
        let a = CMat::from_row_slice(1, 3, &[C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        let ns = null_space(&a, RANK_TOL);
        assert_eq!(ns.ncols(), 2);
        assert!((a * ns).norm() < 1e-12);
    }

    #[test]
    fn lstsq_min_norm() {
        let a = CMat::from_row_slice(1, 2, &[C64::new(1.0, 0.0), C64::new(1.0, 0.0)]);
        let b = CMat::from_row_slice(1, 1, &[C64::new(2.0, 0.0)]);
        let (x, r) = lstsq(&a, &b, RANK_TOL);
        assert_eq!(r, 1);
        assert!((x[(0, 0)] - C64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((x[(1, 0)] - C64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn eigenvalues_of_triangular() {
        let a = CMat::from_row_slice(
            2,
            2,
            &[C64::new(2.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 3.0)],
        );
        let mut ev = eigenvalues(&a);
        ev.sort_by(|x, y| x.re.partial_cmp(&y.re).unwrap());
        assert!((ev[0] - C64::new(0.0, 3.0)).norm() < 1e-12);
        assert!((ev[1] - C64::new(2.0, 0.0)).norm() < 1e-12);
    }
}
