use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Upper-tail probability of a chi-square statistic.
pub fn chi_square_p_value(chi2: f64, dof: usize) -> f64 {
    if dof == 0 {
        return 1.0;
    }
    ChiSquared::new(dof as f64).expect("positive dof").sf(chi2)
}

/// Binomial z-score of `observed` successes out of `n` at probability `p`.
pub fn binomial_z(observed: f64, n: f64, p: f64) -> f64 {
    let sigma = (n * p * (1.0 - p)).sqrt();
    if sigma > 0.0 {
        (observed - n * p) / sigma
    } else if observed == n * p {
        0.0
    } else {
        f64::INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_quantiles() {
        // 95th percentile of chi-square with 15 dof is 24.996.
        assert!((chi_square_p_value(24.996, 15) - 0.05).abs() < 1e-4);
        assert!((chi_square_p_value(2.0, 2) - (-1.0f64).exp()).abs() < 1e-12);
        assert_eq!(chi_square_p_value(3.0, 0), 1.0);
    }

    #[test]
    fn z_scores() {
        assert_eq!(binomial_z(50.0, 100.0, 0.5), 0.0);
        assert!((binomial_z(60.0, 100.0, 0.5) - 2.0).abs() < 1e-12);
    }
}
