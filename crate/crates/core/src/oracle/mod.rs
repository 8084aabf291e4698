//! Brute-force cross-check: both photon continua are replaced by finite sets
//! of discrete modes and the one-excitation Schrödinger equation is solved
//! exactly, with no Wigner–Weisskopf or Markov approximation.
//!
//! Everything is expressed in the frame rotating at ω_a; mode offsets
//! x_k = ω_k − ω_a (a-branch) and ω_k − ω_b (b-branch) share one grid.

mod compare;
mod evolve;
mod hamiltonian;
mod pulse;
mod secular;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::LambdaSystem;

pub use compare::{
    compare, verify, AnalyticPoint, AnalyticRun, Deviation, DeviationReport, OracleRun, Tolerances,
};
pub use evolve::{
    backward_leak, decay_rate_b, energy, evolve, measure, BackwardLeak, Measurement,
    OneExcitationState, Propagator, NORM_TOLERANCE,
};
pub use hamiltonian::{build_hamiltonian, Atom, BasisState, Branch, Hamiltonian};
pub use pulse::{discretize_pulse, spectral_amplitude};
pub use secular::ArrowheadSpectrum;

/// Uniform frequency grid standing in for one photon continuum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiscreteBath {
    pub n_modes: usize,
    /// Total window B, centred on the transition frequency of the branch.
    pub bandwidth: f64,
}

impl DiscreteBath {
    pub fn new(n_modes: usize, bandwidth: f64) -> Result<Self> {
        if n_modes < 3 {
            return Err(Error::Config(format!(
                "n_modes must be >= 3, got {n_modes}"
            )));
        }
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::Config(format!(
                "bandwidth must be > 0, got {bandwidth}"
            )));
        }
        Ok(DiscreteBath { n_modes, bandwidth })
    }

    /// 2001 modes per branch over B = 40(Γ_a+Γ_b).
    pub fn default_for(system: &LambdaSystem) -> Self {
        DiscreteBath {
            n_modes: 2001,
            bandwidth: 40.0 * system.gamma_total(),
        }
    }

    /// δω = B/(n − 1).
    pub fn spacing(&self) -> f64 {
        self.bandwidth / (self.n_modes - 1) as f64
    }

    /// ϱ_eff = 1/δω.
    pub fn density(&self) -> f64 {
        1.0 / self.spacing()
    }

    /// 2π/δω, beyond which emitted amplitude returns to the emitter.
    pub fn recurrence_time(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.spacing()
    }

    /// Offset of mode k from the branch centre.
    pub fn offset(&self, k: usize) -> f64 {
        (k as f64 - 0.5 * (self.n_modes - 1) as f64) * self.spacing()
    }

    /// Names of the violated bath invariants (empty when all hold).
    /// `t_max` adds the recurrence condition.
    pub fn violations(&self, system: &LambdaSystem, t_max: Option<f64>) -> Vec<String> {
        let g = system.gamma_total();
        let mut v = Vec::new();
        if self.bandwidth < 20.0 * g * (1.0 - 1e-12) {
            v.push(format!(
                "bandwidth: B = {} < 20(gamma_a+gamma_b) = {}",
                self.bandwidth,
                20.0 * g
            ));
        }
        if self.spacing() > g / 20.0 * (1.0 + 1e-12) {
            v.push(format!(
                "spacing: delta_omega = {} > (gamma_a+gamma_b)/20 = {}",
                self.spacing(),
                g / 20.0
            ));
        }
        if let Some(t) = t_max {
            if t >= self.recurrence_time() {
                v.push(format!(
                    "recurrence: t_max = {t} >= 2*pi/delta_omega = {}",
                    self.recurrence_time()
                ));
            }
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_bath_geometry() {
        let s = LambdaSystem::new(50.0, 0.0, 1.0, 1.0).unwrap();
        let b = DiscreteBath::default_for(&s);
        assert_eq!(b.n_modes, 2001);
        assert!((b.spacing() - 0.04).abs() < 1e-15);
        assert!(b.violations(&s, Some(15.0)).is_empty());
        assert!((b.offset(1000)).abs() < 1e-15);
        assert!((b.offset(0) + 40.0).abs() < 1e-12);
    }

    #[test]
    fn coarse_bath_is_named() {
        let s = LambdaSystem::new(50.0, 0.0, 1.0, 1.0).unwrap();
        let b = DiscreteBath::new(81, 160.0).unwrap();
        let v = b.violations(&s, None);
        assert_eq!(v.len(), 1);
        assert!(v[0].starts_with("spacing"));
        let narrow = DiscreteBath::new(201, 10.0).unwrap();
        assert!(narrow.violations(&s, None)[0].starts_with("bandwidth"));
        let d = DiscreteBath::default_for(&s);
        assert!(d.violations(&s, Some(200.0))[0].starts_with("recurrence"));
    }
}
