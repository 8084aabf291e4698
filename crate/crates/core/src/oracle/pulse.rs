use std::f64::consts::PI;

use num_complex::Complex64;

use super::DiscreteBath;
use crate::error::{Error, Result};
use crate::model::{EnvelopeShape, LambdaSystem, PulseSpec, GAUSSIAN_DELAY_SIGMAS};

/// Smallest fraction of the pulse norm the bath window must capture.
const MIN_CAPTURED_NORM: f64 = 0.99;

/// Spectral amplitude f(q) = (1/(2πϱc)) ∫ φ^shape(z,0) e^{−iqz/c} dz at
/// detuning q = ω − ω_L from the carrier; ϱ∫|f|²dω equals the pulse norm.
pub fn spectral_amplitude(pulse: &PulseSpec, q: f64) -> Complex64 {
    let c = pulse.c_speed();
    let rho = pulse.rho_density();
    let n = pulse.amplitude();
    let pref = 1.0 / (2.0 * PI * rho * c);
    let i = Complex64::i();
    let v = match pulse.shape() {
        EnvelopeShape::Exponential { linewidth } => {
            n / (2.0 * PI * rho * Complex64::new(0.5 * linewidth, -q))
        }
        EnvelopeShape::Gaussian { sigma } => {
            let zc = -GAUSSIAN_DELAY_SIGMAS * c * sigma;
            let mag = n * 2.0 * c * sigma * PI.sqrt() * (-q * q * sigma * sigma).exp();
            pref * mag * (-i * q * zc / c).exp()
        }
        EnvelopeShape::Rectangular { duration } => {
            let x = 0.5 * q * duration;
            let sinc = if x.abs() < 1e-8 {
                1.0 - x * x / 6.0
            } else {
                x.sin() / x
            };
            pref * n * c * duration * sinc * (i * x).exp()
        }
        EnvelopeShape::Sampled { z, amplitudes } => {
            pref * piecewise_linear_transform(z, amplitudes, q / c)
        }
    };
    pulse.scale() * v
}

/// ∫ f(z) e^{−ikz} dz for f linear between samples.
fn piecewise_linear_transform(z: &[f64], amp: &[Complex64], k: f64) -> Complex64 {
    let mut total = Complex64::new(0.0, 0.0);
    for (zw, aw) in z.windows(2).zip(amp.windows(2)) {
        let h = zw[1] - zw[0];
        let w = Complex64::new(0.0, -k * h);
        let (p0, p1) = moments(w);
        total += h * Complex64::from_polar(1.0, -k * zw[0]) * (aw[0] * p0 + (aw[1] - aw[0]) * p1);
    }
    total
}

/// (∫₀¹ e^{ws} ds, ∫₀¹ s e^{ws} ds).
fn moments(w: Complex64) -> (Complex64, Complex64) {
    if w.norm() < 0.5 {
        let mut p0 = Complex64::new(0.0, 0.0);
        let mut p1 = Complex64::new(0.0, 0.0);
        // w^n/n! accumulated term by term
        let mut t = Complex64::new(1.0, 0.0);
        for n in 0..24 {
            p0 += t / (n + 1) as f64;
            p1 += t / (n + 2) as f64;
            t *= w / (n + 1) as f64;
        }
        (p0, p1)
    } else {
        let e = w.exp();
        let p0 = (e - 1.0) / w;
        (p0, e / w - p0 / w)
    }
}

/// Initial a-mode amplitudes φ_k(0) of the pulse on the bath grid.
///
/// Mode k sits at ω_a + x_k, i.e. detuned by x_k − δ_L from the carrier. The
/// result is renormalized to the pulse norm; a window that captures less than
/// 99% of it is rejected.
pub fn discretize_pulse(
    pulse: &PulseSpec,
    system: &LambdaSystem,
    bath: &DiscreteBath,
) -> Result<Vec<Complex64>> {
    let delta_l = pulse.detuning(system);
    let w = (pulse.rho_density() / bath.density()).sqrt();
    let mut phi: Vec<Complex64> = (0..bath.n_modes)
        .map(|k| w * spectral_amplitude(pulse, bath.offset(k) - delta_l))
        .collect();
    let target = pulse.scale() * pulse.scale();
    if target == 0.0 {
        return Ok(phi);
    }
    let norm: f64 = phi.iter().map(|p| p.norm_sqr()).sum();
    if norm < MIN_CAPTURED_NORM * target {
        return Err(Error::Bandwidth(format!(
            "bath window B = {} captures only {:.4} of the pulse norm (needs {MIN_CAPTURED_NORM})",
            bath.bandwidth,
            norm / target
        )));
    }
    let k = (target / norm).sqrt();
    phi.iter_mut().for_each(|p| *p *= k);
    Ok(phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_pulse;
    use crate::quad::gauss_legendre;

    fn sys() -> LambdaSystem {
        LambdaSystem::new(50.0, 0.0, 1.0, 1.0).unwrap()
    }

    /// Direct quadrature of the defining integral.
    fn brute(p: &PulseSpec, q: f64, lo: f64, hi: f64) -> Complex64 {
        let c = p.c_speed();
        let pref = 1.0 / (2.0 * PI * p.rho_density() * c);
        let re = gauss_legendre(
            |z| (p.shape_in_piece(z, z) * Complex64::from_polar(1.0, -q * z / c)).re,
            lo,
            hi,
            400,
        );
        let im = gauss_legendre(
            |z| (p.shape_in_piece(z, z) * Complex64::from_polar(1.0, -q * z / c)).im,
            lo,
            hi,
            400,
        );
        pref * Complex64::new(re, im)
    }

    #[test]
    fn closed_transforms_match_quadrature() {
        let s = sys();
        let cases = [
            (EnvelopeShape::Exponential { linewidth: 0.8 }, -90.0, 0.0),
            (EnvelopeShape::Gaussian { sigma: 0.7 }, -12.0, 0.0),
            (EnvelopeShape::Rectangular { duration: 1.3 }, -1.3, 0.0),
        ];
        for (shape, lo, hi) in cases {
            let p = make_pulse(shape, 50.0, &s).unwrap();
            for q in [-3.0, -0.4, 0.0, 0.25, 2.0] {
                // the Gaussian transform includes the e^{-16} tail cut at z > 0
                let d = (spectral_amplitude(&p, q) - brute(&p, q, lo, hi)).norm();
                assert!(d < 1e-8, "{} q={q}: {d}", p.family_name());
            }
        }
    }

    #[test]
    fn sampled_transform_is_exact_for_linear_pieces() {
        let s = sys();
        let z = vec![-3.0, -2.2, -1.0, -0.4, 0.0];
        let amps = vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.5),
            Complex64::new(0.3, -0.2),
            Complex64::new(0.8, 0.0),
            Complex64::new(0.0, 0.1),
        ];
        let p = make_pulse(
            EnvelopeShape::Sampled {
                z,
                amplitudes: amps,
            },
            50.0,
            &s,
        )
        .unwrap();
        let nodes = [-3.0, -2.2, -1.0, -0.4, 0.0];
        for q in [-7.0, -0.05, 0.0, 1e-4, 0.3, 11.0] {
            let direct: Complex64 = nodes.windows(2).map(|w| brute(&p, q, w[0], w[1])).sum();
            let d = (spectral_amplitude(&p, q) - direct).norm();
            assert!(d < 1e-10, "q={q}: {d}");
        }
    }

    #[test]
    fn exponential_modes_are_lorentzian() {
        let s = sys();
        let p = make_pulse(EnvelopeShape::Exponential { linewidth: 1.0 }, 50.3, &s).unwrap();
        let bath = DiscreteBath::default_for(&s);
        let phi = discretize_pulse(&p, &s, &bath).unwrap();
        let total: f64 = phi.iter().map(|x| x.norm_sqr()).sum();
        assert!((total - 1.0).abs() < 1e-12);
        // renormalized Lorentzian of half-width Δ/2 centred on the carrier
        let lor: Vec<f64> = (0..bath.n_modes)
            .map(|k| {
                let q = bath.offset(k) - 0.3;
                1.0 / (0.25 + q * q)
            })
            .collect();
        let ls: f64 = lor.iter().sum();
        for k in (0..bath.n_modes).step_by(97) {
            assert!((phi[k].norm_sqr() - lor[k] / ls).abs() < 1e-12 * (1.0 + lor[k] / ls));
        }
        let peak = (0..bath.n_modes)
            .max_by(|&i, &j| phi[i].norm_sqr().partial_cmp(&phi[j].norm_sqr()).unwrap());
        assert!((bath.offset(peak.unwrap()) - 0.3).abs() <= bath.spacing());
    }

    #[test]
    fn broadband_pulse_is_rejected() {
        let s = sys();
        let bath = DiscreteBath::default_for(&s);
        let p = make_pulse(
            EnvelopeShape::Exponential {
                linewidth: bath.bandwidth,
            },
            50.0,
            &s,
        )
        .unwrap();
        assert!(matches!(
            discretize_pulse(&p, &s, &bath),
            Err(Error::Bandwidth(_))
        ));
    }

    #[test]
    fn zero_pulse_discretizes_to_zero() {
        let s = sys();
        let p = make_pulse(EnvelopeShape::Gaussian { sigma: 1.0 }, 50.0, &s)
            .unwrap()
            .scaled(0.0);
        let phi = discretize_pulse(&p, &s, &DiscreteBath::default_for(&s)).unwrap();
        assert!(phi.iter().all(|x| x.norm() == 0.0));
    }
}
