//! Small quadrature helpers shared by the physics modules.

/// Trapezoid rule on a possibly non-uniform grid. Repeated abscissae
/// (zero-width panels) are allowed and contribute nothing.
pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xw, yw)| 0.5 * (xw[1] - xw[0]) * (yw[0] + yw[1]))
        .sum()
}

/// Composite Gauss–Legendre rule (8 nodes per panel) for smooth integrands.
pub fn gauss_legendre<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    const X: [f64; 4] = [
        0.183_434_642_495_649_8,
        0.525_532_409_916_329,
        0.796_666_477_413_626_7,
        0.960_289_856_497_536_3,
    ];
    const W: [f64; 4] = [
        0.362_683_783_378_362,
        0.313_706_645_877_887_3,
        0.222_381_034_453_374_5,
        0.101_228_536_290_376_3,
    ];
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let mut s = 0.0;
    for p in 0..panels {
        let m = a + h * (p as f64 + 0.5);
        let r = 0.5 * h;
        for k in 0..4 {
            s += W[k] * r * (f(m - r * X[k]) + f(m + r * X[k]));
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapezoid_exact_for_linear_and_duplicates() {
        let x = [0.0, 1.0, 1.0, 3.0];
        let y = [0.0, 1.0, 5.0, 7.0];
        assert!((trapezoid(&x, &y) - (0.5 + 12.0)).abs() < 1e-15);
    }

    #[test]
    fn gauss_legendre_polynomial_and_exponential() {
        let v = gauss_legendre(|x| x.powi(15), 0.0, 1.0, 1);
        assert!((v - 1.0 / 16.0).abs() < 1e-14);
        let v = gauss_legendre(|x| (-x).exp(), 0.0, 30.0, 30);
        assert!((v - (1.0 - (-30.0f64).exp())).abs() < 1e-13);
    }
}
