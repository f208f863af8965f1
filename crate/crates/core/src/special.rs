//! Small special-function kit: the modified Bessel function I0 by its
//! power series.

/// `I0(x) = Σ_k (x²/4)^k / (k!)²`, summed until the term drops below
/// 1e-15 of the running value (absolute floor 1e-300).
///
/// The series converges for every real `x`; for the |x| ≤ 6 range used
/// here a few dozen terms give full double accuracy.
pub fn bessel_i0(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= q / ((k * k) as f64);
        sum += term;
        if term < 1e-15 * sum + 1e-300 {
            break;
        }
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_reference_values() {
        // Abramowitz & Stegun 9.8 reference points.
        assert!((bessel_i0(0.0) - 1.0).abs() < 1e-15);
        assert!((bessel_i0(1.0) - 1.2660658777520084).abs() < 1e-12);
        assert!((bessel_i0(2.0) - 2.2795853023360673).abs() < 1e-12);
        assert!((bessel_i0(-1.0) - bessel_i0(1.0)).abs() < 1e-15);
    }

    #[test]
    fn satisfies_the_modified_bessel_equation() {
        // (r² d² + r d - r²) I0 = 0, checked by central differences.
        let r: f64 = 1.3;
        let h = 1e-4;
        let d2 = (bessel_i0(r + h) - 2.0 * bessel_i0(r) + bessel_i0(r - h)) / (h * h);
        let d1 = (bessel_i0(r + h) - bessel_i0(r - h)) / (2.0 * h);
        let resid = r * r * d2 + r * d1 - r * r * bessel_i0(r);
        assert!(resid.abs() < 1e-6, "residual {resid}");
    }
}
