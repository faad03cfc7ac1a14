//! Gamma and beta functions, binomial coefficients.
//!
//! The fractional integral formulas and the Slobodeckij moments are built
//! from Gamma-function ratios, so we need Gamma to close to machine accuracy
//! on (0, ~30). A Lanczos approximation (g = 7, 9 coefficients) delivers
//! ~1e-14 relative error there, which is verified in the tests below.

/// Lanczos coefficients for g = 7, n = 9 (Godfrey's table).
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function for real arguments (poles at 0, -1, -2, ... return NaN-ish
/// huge values through the reflection formula; we only use x > 0).
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
        std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut acc = LANCZOS_COEF[0];
        for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
            acc += c / (x + i as f64);
        }
        let t = x + LANCZOS_G + 0.5;
        (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
    }
}

/// Euler beta function B(a, b) = Gamma(a) Gamma(b) / Gamma(a+b), a, b > 0.
pub fn beta(a: f64, b: f64) -> f64 {
    gamma(a) * gamma(b) / gamma(a + b)
}

/// Binomial coefficient as f64; exact for the small arguments used here.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut num: f64 = 1.0;
    for i in 0..k {
        num = num * (n - i) as f64 / (i + 1) as f64;
    }
    num.round()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn gamma_known_values() {
        assert!(rel_err(gamma(1.0), 1.0) < 1e-14);
        assert!(rel_err(gamma(2.0), 1.0) < 1e-14);
        assert!(rel_err(gamma(6.0), 120.0) < 1e-14);
        assert!(rel_err(gamma(0.5), std::f64::consts::PI.sqrt()) < 1e-14);
        // Gamma(1.5) = sqrt(pi)/2, Gamma(2.5) = 3 sqrt(pi)/4
        assert!(rel_err(gamma(1.5), std::f64::consts::PI.sqrt() / 2.0) < 1e-14);
        assert!(rel_err(gamma(2.5), 3.0 * std::f64::consts::PI.sqrt() / 4.0) < 1e-14);
        // high-precision reference values (Mathematica):
        assert!(rel_err(gamma(0.1), 9.513_507_698_668_732) < 1e-13);
        assert!(rel_err(gamma(3.7), 4.170_651_783_796_603) < 1e-13);
        assert!(rel_err(gamma(12.3), 83_385_367.899_970_64) < 1e-13);
        assert!(rel_err(gamma(25.0), 6.204_484_017_332_394e23) < 1e-13);
    }

    #[test]
    fn gamma_recurrence_on_needed_range() {
        // Gamma(x+1) = x Gamma(x) across the range used by the assembly
        // (arguments up to p+q+6 plus fractional shifts).
        let mut x = 0.05;
        while x < 30.0 {
            assert!(
                rel_err(gamma(x + 1.0), x * gamma(x)) < 5e-14,
                "recurrence fails at x = {x}"
            );
            x += 0.173;
        }
    }

    #[test]
    fn beta_identities() {
        assert!(rel_err(beta(1.0, 1.0), 1.0) < 1e-14);
        // B(2, 1/2) = 4/3
        assert!(rel_err(beta(2.0, 0.5), 4.0 / 3.0) < 1e-13);
        // B(1, z) = 1/z
        assert!(rel_err(beta(1.0, 0.37), 1.0 / 0.37) < 1e-13);
    }

    #[test]
    fn binomial_small() {
        assert_eq!(binomial(0, 0), 1.0);
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(8, 4), 70.0);
        assert_eq!(binomial(12, 4), 495.0);
        assert_eq!(binomial(3, 5), 0.0);
    }
}
