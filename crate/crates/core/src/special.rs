//! Log-space factorials and Poisson weights.

use statrs::function::gamma::ln_gamma;

const EXACT_FACTORIALS: usize = 21;

/// `ln(n!)`. Exact products up to 20!, `ln Γ(n+1)` beyond.
pub fn ln_factorial(n: usize) -> f64 {
    if n < EXACT_FACTORIALS {
        let mut f = 1.0f64;
        for k in 2..=n {
            f *= k as f64;
        }
        f.ln()
    } else {
        ln_gamma(n as f64 + 1.0)
    }
}

/// Poisson probability mass `e^{-mean} mean^n / n!`.
pub fn poisson_pmf(mean: f64, n: usize) -> f64 {
    if mean == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    (-mean + n as f64 * mean.ln() - ln_factorial(n)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorial_branches_agree_at_the_seam() {
        let exact: f64 = (1..=20).map(|k| k as f64).product();
        assert!((ln_factorial(20) - exact.ln()).abs() < 1e-12);
        let via_gamma = ln_factorial(21);
        assert!((via_gamma - (exact * 21.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn large_orders_stay_finite() {
        assert!(ln_factorial(170).is_finite());
        assert!(poisson_pmf(9.0, 100) > 0.0);
        assert!(poisson_pmf(9.0, 100) < 1e-40);
    }

    #[test]
    fn zero_mean_is_a_point_mass() {
        assert_eq!(poisson_pmf(0.0, 0), 1.0);
        assert_eq!(poisson_pmf(0.0, 3), 0.0);
    }
}
