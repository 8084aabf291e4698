//! Spectrum of the environment state and its von Neumann entropy, split into
//! the part inherited from the emitter's initial mixture and the part
//! generated by emitter–field entanglement. Entropies are in nats.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{field_amplitudes, psi_interpolated, AmplitudeTrajectory, FieldState};
use crate::error::{Error, Result};
use crate::model::{InitialMixture, LambdaSystem, PulseSpec, SimGrid};

/// Below this branch population the overlap with the free photon is treated
/// as zero (its weight in the spectrum vanishes with N_a).
const N_A_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnvSpectrum {
    pub lambdas: [f64; 4],
    pub n_a: f64,
    pub n_b: f64,
    pub psi_sq: f64,
    pub overlap_sq: f64,
    pub s_e: f64,
    pub s_q: f64,
    pub s_e_c: f64,
}

fn unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "{name} must lie in [0, 1], got {v}"
        )))
    }
}

/// The four non-zero eigenvalues of ρ_E.
pub fn env_eigenvalues(
    mixture: &InitialMixture,
    psi_sq: f64,
    n_a: f64,
    n_b: f64,
    overlap_sq: f64,
) -> Result<[f64; 4]> {
    unit("psi_sq", psi_sq)?;
    unit("n_a", n_a)?;
    unit("n_b", n_b)?;
    unit("overlap_sq", overlap_sq)?;
    if n_a + n_b + psi_sq > 1.0 + 1e-9 {
        return Err(Error::Parameter(format!(
            "n_a + n_b + psi_sq = {} exceeds 1",
            n_a + n_b + psi_sq
        )));
    }
    let (pa, pb) = (mixture.p_a0, mixture.p_b0);
    let x = pa * n_a;
    let mean = 0.5 * (x + pb);
    let half_gap = 0.5 * ((x - pb).powi(2) + 4.0 * pa * pb * n_a * overlap_sq).sqrt();
    let l3 = mean + half_gap;
    // smaller root from the determinant, free of cancellation
    let det = x * pb * (1.0 - overlap_sq);
    let l4 = if l3 > 0.0 { det / l3 } else { 0.0 };
    Ok([pa * psi_sq, pa * n_b, l3, l4])
}

/// −Σ λ ln λ with 0·ln 0 = 0.
pub fn von_neumann(lambdas: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    let mut s = 0.0;
    for &l in lambdas {
        if l < -1e-12 {
            return Err(Error::Numerical(format!("negative eigenvalue {l}")));
        }
        total += l.max(0.0);
        if l > 0.0 {
            s -= l * l.ln();
        }
    }
    if total > 1.0 + 1e-9 {
        return Err(Error::Numerical(format!("eigenvalues sum to {total} > 1")));
    }
    Ok(s)
}

/// Entropy of the environment for the pure entangled branch started in |a⟩.
pub fn quantum_branch_entropy(n_a: f64, n_b: f64, psi_sq: f64) -> Result<f64> {
    unit("n_a", n_a)?;
    unit("n_b", n_b)?;
    unit("psi_sq", psi_sq)?;
    if n_a + n_b + psi_sq > 1.0 + 1e-9 {
        return Err(Error::Parameter(format!(
            "n_a + n_b + psi_sq = {} exceeds 1",
            n_a + n_b + psi_sq
        )));
    }
    von_neumann(&[n_a, n_b, psi_sq])
}

/// S_E^c = S_E − p_a0·S_q.
pub fn classical_entropy(s_e: f64, mixture: &InitialMixture, s_q: f64) -> Result<f64> {
    if s_e < 0.0 || s_q < 0.0 {
        return Err(Error::Parameter("entropies must be >= 0".into()));
    }
    let c = s_e - mixture.p_a0 * s_q;
    if c < -1e-10 {
        return Err(Error::NumericalConsistency(format!(
            "classical entropy {c} is negative"
        )));
    }
    Ok(c)
}

/// Spectrum and all three entropies from branch populations and overlap.
pub fn env_spectrum(
    mixture: &InitialMixture,
    psi_sq: f64,
    n_a: f64,
    n_b: f64,
    overlap_sq: f64,
) -> Result<EnvSpectrum> {
    let lambdas = env_eigenvalues(mixture, psi_sq, n_a, n_b, overlap_sq)?;
    let s_e = von_neumann(&lambdas)?;
    let s_q = quantum_branch_entropy(n_a, n_b, psi_sq)?;
    let s_e_c = classical_entropy(s_e, mixture, s_q)?;
    Ok(EnvSpectrum {
        lambdas,
        n_a,
        n_b,
        psi_sq,
        overlap_sq,
        s_e,
        s_q,
        s_e_c,
    })
}

/// Largest reachable long-time transition probability, 4Γ_aΓ_b/(Γ_a+Γ_b)².
pub fn max_transition_prob(system: &LambdaSystem) -> f64 {
    let g = system.gamma_total();
    (4.0 * system.gamma_a * system.gamma_b / (g * g)).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticOverlap {
    /// ⟨1_a^free|1̃_a⟩·sqrt(N_a).
    pub value: f64,
    pub n_a: f64,
    pub overlap_sq: f64,
}

/// Long-time overlap of the outgoing a-photon with the freely propagated
/// input, as a function of p_{a→b}(∞).
pub fn overlap_asymptotic(system: &LambdaSystem, p_ab_infty: f64) -> Result<AsymptoticOverlap> {
    let p_max = max_transition_prob(system);
    if !(p_ab_infty >= 0.0 && p_ab_infty <= p_max + 1e-12) {
        return Err(Error::Parameter(format!(
            "p_ab_infty = {p_ab_infty} outside [0, {p_max}]"
        )));
    }
    let value = 1.0 - system.gamma_total() / (2.0 * system.gamma_b) * p_ab_infty;
    let n_a = (1.0 - p_ab_infty).max(0.0);
    let overlap_sq = if n_a < N_A_FLOOR {
        0.0
    } else {
        (value * value / n_a).clamp(0.0, 1.0)
    };
    Ok(AsymptoticOverlap {
        value,
        n_a,
        overlap_sq,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiniteOverlap {
    /// ⟨1_a^free|1̃_a⟩ (normalized by sqrt(N_a)).
    pub overlap: Complex64,
    pub n_a: f64,
    /// Set when N_a is too small for the normalization; overlap is then 0.
    pub degenerate: bool,
}

/// ⟨1_a^free|1̃_a⟩ at the field's time from the real-space fields.
pub fn overlap_finite_time(
    field: &FieldState,
    _pulse: &PulseSpec,
    _system: &LambdaSystem,
    _t: f64,
) -> Result<FiniteOverlap> {
    let n_a = field.n_a();
    if n_a < N_A_FLOOR {
        return Ok(FiniteOverlap {
            overlap: Complex64::new(0.0, 0.0),
            n_a,
            degenerate: true,
        });
    }
    Ok(FiniteOverlap {
        overlap: field.free_projection() / n_a.sqrt(),
        n_a,
        degenerate: false,
    })
}

/// Environment spectrum at a finite time, from the integrated dynamics and
/// the reconstructed fields. The eigenvalue formula is applied with
/// time-dependent inputs, an extension of its long-time derivation.
pub fn finite_time_spectrum(
    traj: &AmplitudeTrajectory,
    system: &LambdaSystem,
    pulse: &PulseSpec,
    grid: &SimGrid,
    mixture: &InitialMixture,
    t: f64,
) -> Result<EnvSpectrum> {
    let field = field_amplitudes(traj, system, pulse, grid, t)?;
    let ov = overlap_finite_time(&field, pulse, system, t)?;
    let psi_sq = psi_interpolated(traj, system, pulse, t, t)?.norm_sqr();
    let n_b = field.n_b();
    // renormalize tiny quadrature excess so the inputs stay admissible
    let total = ov.n_a + n_b + psi_sq;
    let k = if total > 1.0 { 1.0 / total } else { 1.0 };
    env_spectrum(
        mixture,
        (psi_sq * k).min(1.0),
        (ov.n_a * k).min(1.0),
        (n_b * k).min(1.0),
        ov.overlap.norm_sqr().clamp(0.0, 1.0),
    )
}

/// Long-time spectrum as a function of p_{a→b}(∞) alone.
pub fn asymptotic_spectrum(
    system: &LambdaSystem,
    mixture: &InitialMixture,
    p_ab_infty: f64,
) -> Result<EnvSpectrum> {
    let ov = overlap_asymptotic(system, p_ab_infty)?;
    env_spectrum(mixture, 0.0, ov.n_a, p_ab_infty.min(1.0), ov.overlap_sq)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub p_ab_infty: f64,
    pub s_e: f64,
    pub s_e_c: f64,
}

/// S_E and S_E^c on an even grid of p_{a→b}(∞) over [0, 4Γ_aΓ_b/(Γ_a+Γ_b)²].
pub fn entropy_curve(
    system: &LambdaSystem,
    mixture: &InitialMixture,
    n_points: usize,
) -> Result<Vec<CurvePoint>> {
    if n_points < 2 {
        return Err(Error::Parameter(format!(
            "n_points must be >= 2, got {n_points}"
        )));
    }
    let p_max = max_transition_prob(system);
    (0..n_points)
        .into_par_iter()
        .map(|i| {
            let p = if i + 1 == n_points {
                p_max
            } else {
                p_max * i as f64 / (n_points - 1) as f64
            };
            let s = asymptotic_spectrum(system, mixture, p)?;
            Ok(CurvePoint {
                p_ab_infty: p,
                s_e: s.s_e,
                s_e_c: s.s_e_c,
            })
        })
        .collect()
}

/// p_{a→b}(∞) = ⟨Q_diss⟩_a / (ħω_a(Γ_a+Γ_b)/Γ_b − ħδ_ab).
pub fn heat_to_pab(system: &LambdaSystem, q_diss: f64) -> Result<f64> {
    if !(q_diss >= 0.0) {
        return Err(Error::Parameter(format!(
            "q_diss must be >= 0, got {q_diss}"
        )));
    }
    let denom = system.omega_a * system.gamma_total() / system.gamma_b - system.delta_ab;
    if !(denom > 0.0) {
        return Err(Error::Parameter(format!(
            "omega_a*(gamma_a+gamma_b)/gamma_b - delta_ab = {denom} must be > 0"
        )));
    }
    Ok(q_diss / denom)
}
