//! Dense linear algebra helpers bridging `ndarray` storage and the nalgebra
//! eigen solvers.

use nalgebra::{DMatrix, Schur};
use ndarray::{Array1, Array2, ArrayView2};

pub(crate) fn to_nalgebra(a: ArrayView2<f64>) -> DMatrix<f64> {
    let (r, c) = a.dim();
    DMatrix::from_fn(r, c, |i, j| a[[i, j]])
}

/// Symmetric eigendecomposition with eigenvalues sorted in descending order.
///
/// Each eigenvector is oriented so that its largest-magnitude coordinate is
/// positive (first such coordinate on ties), which makes the output
/// reproducible.
pub fn sym_eigen_desc(a: ArrayView2<f64>) -> (Array1<f64>, Array2<f64>) {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    // Solve on the exactly symmetrised copy; callers pass matrices that are
    // symmetric up to rounding.
    let sym = DMatrix::from_fn(n, n, |i, j| 0.5 * (a[[i, j]] + a[[j, i]]));
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let vals = Array1::from_iter(order.iter().map(|&k| eig.eigenvalues[k]));
    let mut vecs = Array2::zeros((n, n));
    for (col, &k) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        let mut pivot = 0;
        for i in 1..n {
            if v[i].abs() > v[pivot].abs() {
                pivot = i;
            }
        }
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            vecs[[i, col]] = sign * v[i];
        }
    }
    (vals, vecs)
}

/// Largest modulus among the (complex) eigenvalues of a square matrix.
pub fn spectral_radius(a: ArrayView2<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let n = a.nrows();
    // Unbounded QR sweeps can cycle on permutation-like matrices.
    match Schur::try_new(to_nalgebra(a), f64::EPSILON, 1000 * n) {
        Some(schur) => schur.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max),
        None => gelfand_radius(a),
    }
}

/// `lim ‖A^k‖^{1/k}` along k = 2^m, rescaling after each squaring.
fn gelfand_radius(a: ArrayView2<f64>) -> f64 {
    let mut b = a.to_owned();
    let mut log_scale = 0.0;
    let mut k = 1.0;
    for _ in 0..60 {
        let s = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        if s == 0.0 {
            return 0.0;
        }
        b /= s;
        log_scale += s.ln() / k;
        b = b.dot(&b);
        k *= 2.0;
    }
    let s = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    (log_scale + s.ln() / k).exp()
}

/// Operator 2-norm (largest singular value).
pub fn spectral_norm(a: ArrayView2<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    to_nalgebra(a)
        .singular_values()
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

/// Symmetric square root of a positive semi-definite matrix. Negative
/// eigenvalues from rounding are clamped to zero.
pub fn sym_sqrt(a: ArrayView2<f64>) -> Array2<f64> {
    let (vals, vecs) = sym_eigen_desc(a);
    let mut scaled = vecs.clone();
    for (j, &v) in vals.iter().enumerate() {
        let s = v.max(0.0).sqrt();
        scaled.column_mut(j).mapv_inplace(|x| x * s);
    }
    scaled.dot(&vecs.t())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn eigen_sorted_and_signed() {
        let a = array![[2.0, 1.0], [1.0, 2.0]];
        let (vals, vecs) = sym_eigen_desc(a.view());
        assert!((vals[0] - 3.0).abs() < 1e-12);
        assert!((vals[1] - 1.0).abs() < 1e-12);
        for j in 0..2 {
            let col = vecs.column(j);
            let pivot = col.iter().cloned().fold(0.0_f64, |m, x| if x.abs() > m.abs() { x } else { m });
            assert!(pivot > 0.0);
        }
    }

    #[test]
    fn radius_of_rotation_block() {
        let a = array![[0.5, -0.4], [0.4, 0.5]];
        let rho = spectral_radius(a.view());
        assert!((rho - (0.25f64 + 0.16).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn radius_of_cycles_terminates() {
        // A directed 3-cycle and a transposition: all eigenvalues on the unit circle.
        let cycle = array![[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]];
        assert!((spectral_radius(cycle.view()) - 1.0).abs() < 1e-9);
        let swap = array![[0.0, 0.275, 0.0], [0.275, 0.0, 0.0], [0.0, 0.0, 0.0]];
        assert!((spectral_radius(swap.view()) - 0.275).abs() < 1e-9);
        let nil = array![[0.0, 2.0], [0.0, 0.0]];
        assert_eq!(gelfand_radius(nil.view()), 0.0);
    }

    #[test]
    fn gelfand_agrees_with_schur() {
        let a = array![[0.3, -0.7, 0.1], [0.5, 0.2, 0.0], [-0.1, 0.4, 0.6]];
        let schur = spectral_radius(a.view());
        assert!((gelfand_radius(a.view()) - schur).abs() < 1e-9, "{schur}");
    }

    #[test]
    fn sqrt_squares_back() {
        let a = array![[1.0, 0.9, 0.81], [0.9, 1.0, 0.9], [0.81, 0.9, 1.0]];
        let s = sym_sqrt(a.view());
        let back = s.dot(&s);
        for (x, y) in back.iter().zip(a.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn spectral_norm_diag() {
        let a = array![[3.0, 0.0], [0.0, -4.0]];
        assert!((spectral_norm(a.view()) - 4.0).abs() < 1e-12);
    }
}
