//! Small dense complex linear algebra: the matrix exponential and helpers.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

pub type CMatrix = Array2<Complex64>;
pub type CVector = Array1<Complex64>;

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Maximum absolute column sum.
pub fn norm_1(a: &CMatrix) -> f64 {
    a.columns()
        .into_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with a Taylor core.
///
/// The argument is scaled by `2^-s` until its 1-norm is at most 1/2, the
/// series is summed until the next term falls below `1e-17` of the running
/// sum, and the result is squared `s` times.
pub fn expm(a: &CMatrix) -> CMatrix {
    assert!(a.is_square(), "expm needs a square matrix");
    let n = a.nrows();
    let norm = norm_1(a);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a.mapv(|z| z / 2f64.powi(squarings));

    let mut sum = CMatrix::eye(n);
    let mut term = CMatrix::eye(n);
    for k in 1..=40 {
        term = term.dot(&scaled).mapv(|z| z / k as f64);
        sum += &term;
        if norm_1(&term) <= 1e-17 * norm_1(&sum) {
            break;
        }
    }
    for _ in 0..squarings {
        sum = sum.dot(&sum);
    }
    sum
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.dot(b) - b.dot(a)
}

pub fn dagger(a: &CMatrix) -> CMatrix {
    a.t().mapv(|z| z.conj())
}

pub fn max_abs_diff<'a, A, B>(a: A, b: B) -> f64
where
    A: IntoIterator<Item = &'a Complex64>,
    B: IntoIterator<Item = &'a Complex64>,
{
    a.into_iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(Complex64::norm_sqr).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn exponential_of_zero_is_identity() {
        let z = CMatrix::zeros((4, 4));
        let e = expm(&z);
        assert!(max_abs_diff(e.iter(), CMatrix::eye(4).iter()) == 0.0);
    }

    #[test]
    fn rotation_generator() {
        // exp(-iθσx) = cos θ − i sin θ σx
        let theta = 2.7_f64;
        let gen = array![[c(0.0, 0.0), c(0.0, -theta)], [c(0.0, -theta), c(0.0, 0.0)]];
        let e = expm(&gen);
        let expected = array![
            [c(theta.cos(), 0.0), c(0.0, -theta.sin())],
            [c(0.0, -theta.sin()), c(theta.cos(), 0.0)]
        ];
        assert!(max_abs_diff(e.iter(), expected.iter()) < 1e-14);
    }

    #[test]
    fn nilpotent_series_terminates_exactly() {
        let a = array![
            [c(0.0, 0.0), c(3.0, 0.0), c(0.0, 0.0)],
            [c(0.0, 0.0), c(0.0, 0.0), c(2.0, 0.0)],
            [c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]
        ];
        let e = expm(&a);
        assert!((e[[0, 1]] - c(3.0, 0.0)).norm() < 1e-13);
        assert!((e[[0, 2]] - c(3.0, 0.0)).norm() < 1e-13);
        assert!((e[[1, 2]] - c(2.0, 0.0)).norm() < 1e-13);
        assert!((e[[2, 2]] - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn large_norm_diagonal() {
        let a = CMatrix::from_diag(&array![c(-30.0, 0.0), c(0.0, 45.0), c(2.0, -1.0)]);
        let e = expm(&a);
        for (k, z) in [c(-30.0, 0.0), c(0.0, 45.0), c(2.0, -1.0)]
            .iter()
            .enumerate()
        {
            assert!((e[[k, k]] - z.exp()).norm() < 1e-12 * z.exp().norm().max(1.0));
        }
    }
}
