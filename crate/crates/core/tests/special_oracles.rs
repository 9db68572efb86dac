use lacunary::rng::{DigitRng, RngSpec};
use lacunary::special::{binom_sf, chi2_isf, chi2_quantile, chi2_sf, kolmogorov_sf, noncentral_chi2_cdf};
use num_rational::Ratio;

#[test]
fn noncentral_cdf_against_simulation() {
    // X = (Z_1 + √λ)² + Z_2² + ... + Z_18², λ = 2, evaluated at x = 20
    let n = 1_000_000;
    let mut rng = DigitRng::new(RngSpec::new(99, 0));
    let shift = 2f64.sqrt();
    let below = (0..n)
        .filter(|_| {
            let first = rng.normal() + shift;
            let rest: f64 = (1..18).map(|_| rng.normal().powi(2)).sum();
            first * first + rest <= 20.0
        })
        .count();
    let p = below as f64 / n as f64;
    let exact = noncentral_chi2_cdf(20.0, 18, 2.0);
    let se = (exact * (1.0 - exact) / n as f64).sqrt();
    assert!((p - exact).abs() < 3.0 * se, "simulated {p}, series {exact}, se {se}");
}

#[test]
fn chi2_quantiles_round_trip() {
    for df in 2..=40 {
        for &q in &[1e-6, 1e-3, 0.01, 0.05, 0.5, 0.95, 0.99] {
            let x = chi2_isf(q, df).unwrap();
            assert!((chi2_sf(x, df) - q).abs() < 1e-7 * q.max(1e-3), "df {df} q {q}");
            let y = chi2_quantile(q, df).unwrap();
            assert!((1.0 - chi2_sf(y, df) - q).abs() < 1e-7, "df {df} p {q}");
        }
    }
}

#[test]
fn binomial_tail_small_cases() {
    assert_eq!(binom_sf(0, 5, Ratio::new(1, 3)), 1.0);
    assert_eq!(binom_sf(6, 5, Ratio::new(1, 3)), 0.0);
    // P(Bin(4, 1/2) >= 3) = 5/16
    assert_eq!(binom_sf(3, 4, Ratio::new(1, 2)), 5.0 / 16.0);
}

#[test]
fn kolmogorov_tail_reference_points() {
    // classical critical values of the limiting law
    assert!((kolmogorov_sf(1.3581) - 0.05).abs() < 1e-4);
    assert!((kolmogorov_sf(1.6276) - 0.01).abs() < 1e-4);
    assert_eq!(kolmogorov_sf(0.0), 1.0);
}
