use num_complex::Complex64;
use serde::Serialize;

use super::evolve::{backward_leak, check_norm, measure, output_times, Measurement, Propagator};
use super::hamiltonian::build_hamiltonian;
use super::pulse::discretize_pulse;
use super::{DiscreteBath, OneExcitationState};
use crate::dynamics::{integrate_psi, running_integrals, AmplitudeTrajectory, Drive};
use crate::entropy::env_spectrum;
use crate::error::{Error, Result};
use crate::model::{InitialMixture, LambdaSystem, PulseSpec, SimGrid};
use crate::quad::trapezoid;

/// Largest accepted deviations. Work and heat are in units of ħω_a.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub populations: f64,
    pub entropy: f64,
    pub energetics: f64,
    pub backward_leak: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            populations: 1e-3,
            entropy: 1e-2,
            energetics: 1e-3,
            backward_leak: 1e-12,
        }
    }
}

fn is_resonant(system: &LambdaSystem, pulse: &PulseSpec) -> bool {
    pulse.detuning(system).abs() <= 1e-12 * system.omega_a.max(1.0)
}

/// Discrete-mode evolution sampled on a uniform time grid.
#[derive(Debug, Clone)]
pub struct OracleRun {
    pub system: LambdaSystem,
    pub pulse: PulseSpec,
    pub mixture: InitialMixture,
    pub bath: DiscreteBath,
    pub psi: Vec<Complex64>,
    pub measurements: Vec<Measurement>,
    /// Largest |⟨H⟩(t) − ⟨H⟩(0)|.
    pub energy_drift: f64,
    /// Bound on probability leaving the |b⟩⊗a-photon sector by t_final.
    pub backward_leak: f64,
}

impl OracleRun {
    pub fn execute(
        system: &LambdaSystem,
        pulse: &PulseSpec,
        mixture: &InitialMixture,
        bath: &DiscreteBath,
        t_final: f64,
        dt: f64,
    ) -> Result<Self> {
        let times = output_times(bath, 0.0, t_final, dt)?;
        let ham = build_hamiltonian(system, bath)?;
        let phi = discretize_pulse(pulse, system, bath)?;
        let start = OneExcitationState::from_photon(&phi);
        let prop = Propagator::new(&ham, &start)?;
        let (f0, r0) = (start.forward_norm(), start.reverse_norm());
        let mut psi = Vec::with_capacity(times.len());
        let mut measurements = Vec::with_capacity(times.len());
        for &t in &times {
            let s = prop.state_at(t);
            check_norm(&s, f0, r0)?;
            psi.push(s.psi);
            measurements.push(measure(&ham, &s, mixture)?);
        }
        let e0 = measurements[0].energy;
        let energy_drift = measurements
            .iter()
            .map(|m| (m.energy - e0).abs())
            .fold(0.0, f64::max);
        let leak = backward_leak(&ham, &phi, t_final)?;
        Ok(OracleRun {
            system: *system,
            pulse: pulse.clone(),
            mixture: *mixture,
            bath: *bath,
            psi,
            measurements,
            energy_drift,
            backward_leak: leak.leak_bound.max(leak.norm_loss.abs()),
        })
    }

    pub fn times(&self) -> Vec<f64> {
        self.measurements.iter().map(|m| m.t).collect()
    }

    /// ⟨W_abs⟩_a from the oracle's ψ(t) and the continuous drive, by
    /// trapezoid quadrature; `None` off resonance.
    pub fn work(&self) -> Option<f64> {
        if !is_resonant(&self.system, &self.pulse) {
            return None;
        }
        let drive = Drive::new(&self.system, &self.pulse);
        let t = self.times();
        let y: Vec<f64> = t
            .iter()
            .zip(&self.psi)
            .map(|(&t, &p)| -2.0 * drive.g_a() * (drive.at(t, t) * p.conj()).re)
            .collect();
        Some(self.system.omega_a * trapezoid(&t, &y))
    }

    /// ⟨Q_diss⟩_a = ħω_a(Γ_a+Γ_b)∫p_e dt − ħδ_ab p_{a→b}(T); `None` off resonance.
    pub fn heat(&self) -> Option<f64> {
        if !is_resonant(&self.system, &self.pulse) {
            return None;
        }
        let t = self.times();
        let p: Vec<f64> = self.measurements.iter().map(|m| m.p_e).collect();
        let last = self.measurements.last().unwrap();
        Some(
            self.system.omega_a * self.system.gamma_total() * trapezoid(&t, &p)
                - self.system.delta_ab * last.p_ab,
        )
    }
}

/// Integrated amplitude equation for the same parameters.
#[derive(Debug, Clone)]
pub struct AnalyticRun {
    pub system: LambdaSystem,
    pub pulse: PulseSpec,
    pub mixture: InitialMixture,
    pub trajectory: AmplitudeTrajectory,
}

/// Analytic observables at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalyticPoint {
    pub p_e: f64,
    pub p_ab: f64,
    pub n_a: f64,
    pub n_b: f64,
    pub s_e: f64,
}

impl AnalyticRun {
    pub fn integrate(
        system: &LambdaSystem,
        pulse: &PulseSpec,
        mixture: &InitialMixture,
        t_final: f64,
    ) -> Result<Self> {
        let dt = SimGrid::accuracy_limit(system, pulse);
        let grid = SimGrid::symmetric(t_final, dt, system.c_speed)?;
        Ok(AnalyticRun {
            system: *system,
            pulse: pulse.clone(),
            mixture: *mixture,
            trajectory: integrate_psi(system, pulse, &grid)?,
        })
    }

    /// Populations from ψ(t) and its running integrals; S_E from the
    /// eigenvalue formula with the overlap 1 + g_a∫φ*ψ at time t.
    pub fn at(&self, t: f64) -> Result<AnalyticPoint> {
        let ri = running_integrals(&self.trajectory, &self.system, &self.pulse, t)?;
        let p_e = ri.psi.norm_sqr();
        let p_ab = self.system.gamma_b * ri.excited;
        let norm = self.pulse.scale() * self.pulse.scale();
        // the forward sector conserves p_e + N_a + N_b
        let n_a = (norm - p_e - p_ab).clamp(0.0, 1.0);
        let n_b = p_ab;
        let ov_sq = if n_a < 1e-14 {
            0.0
        } else {
            (ri.free_projection(&self.system, &self.pulse).norm_sqr() / n_a).clamp(0.0, 1.0)
        };
        let total = p_e + n_a + n_b;
        let k = if total > 1.0 { 1.0 / total } else { 1.0 };
        let spec = env_spectrum(&self.mixture, p_e * k, n_a * k, n_b * k, ov_sq)?;
        Ok(AnalyticPoint {
            p_e,
            p_ab,
            n_a,
            n_b,
            s_e: spec.s_e,
        })
    }

    pub fn work(&self) -> Option<f64> {
        is_resonant(&self.system, &self.pulse)
            .then(|| self.system.omega_a * self.trajectory.final_work_integral())
    }

    pub fn heat(&self) -> Option<f64> {
        is_resonant(&self.system, &self.pulse).then(|| {
            let p = *self.trajectory.excited_integral.last().unwrap();
            self.system.omega_a * self.system.gamma_total() * p
                - self.system.delta_ab * self.trajectory.final_p_ab()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Deviation {
    pub observable: String,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationReport {
    pub pass: bool,
    pub bath: DiscreteBath,
    /// Broken bath invariants; when present no comparison is attempted.
    pub violations: Vec<String>,
    pub deviations: Vec<Deviation>,
    pub energy_drift: f64,
}

impl DeviationReport {
    pub fn get(&self, observable: &str) -> Option<&Deviation> {
        self.deviations.iter().find(|d| d.observable == observable)
    }
}

fn deviation(name: &str, max_deviation: f64, tolerance: f64) -> Deviation {
    Deviation {
        observable: name.into(),
        max_deviation,
        tolerance,
        pass: max_deviation <= tolerance,
    }
}

/// Per-observable maximum deviations between the two runs.
pub fn compare(
    oracle: &OracleRun,
    analytic: &AnalyticRun,
    tol: &Tolerances,
) -> Result<DeviationReport> {
    if oracle.system != analytic.system
        || oracle.pulse != analytic.pulse
        || oracle.mixture != analytic.mixture
    {
        return Err(Error::Usage(
            "oracle and analytic runs were made with different parameters".into(),
        ));
    }
    let t_end = oracle.measurements.last().map(|m| m.t).unwrap_or(0.0);
    if t_end > analytic.trajectory.t_final() * (1.0 + 1e-12) {
        return Err(Error::Usage(format!(
            "analytic run ends at {} before the oracle run ({t_end})",
            analytic.trajectory.t_final()
        )));
    }
    let mut worst = [0.0f64; 5];
    for m in &oracle.measurements {
        let a = analytic.at(m.t)?;
        let d = [
            (m.p_e - a.p_e).abs(),
            (m.p_ab - a.p_ab).abs(),
            (m.n_a - a.n_a).abs(),
            (m.n_b - a.n_b).abs(),
            (m.s_e - a.s_e).abs(),
        ];
        for (w, x) in worst.iter_mut().zip(d) {
            *w = w.max(x);
        }
    }
    let mut deviations = vec![
        deviation("p_e", worst[0], tol.populations),
        deviation("p_ab", worst[1], tol.populations),
        deviation("n_a", worst[2], tol.populations),
        deviation("n_b", worst[3], tol.populations),
        deviation("s_e", worst[4], tol.entropy),
    ];
    let hw = oracle.system.omega_a;
    if let (Some(wo), Some(wa)) = (oracle.work(), analytic.work()) {
        deviations.push(deviation("work", (wo - wa).abs() / hw, tol.energetics));
    }
    if let (Some(qo), Some(qa)) = (oracle.heat(), analytic.heat()) {
        deviations.push(deviation("heat", (qo - qa).abs() / hw, tol.energetics));
    }
    deviations.push(deviation(
        "backward_leak",
        oracle.backward_leak,
        tol.backward_leak,
    ));
    Ok(DeviationReport {
        pass: deviations.iter().all(|d| d.pass),
        bath: oracle.bath,
        violations: Vec::new(),
        deviations,
        energy_drift: oracle.energy_drift,
    })
}

/// Runs both sides over [0, t_final] and compares them. A bath that breaks
/// one of its invariants yields a failing report naming the invariant.
pub fn verify(
    system: &LambdaSystem,
    pulse: &PulseSpec,
    mixture: &InitialMixture,
    bath: &DiscreteBath,
    t_final: f64,
    dt: f64,
    tol: &Tolerances,
) -> Result<DeviationReport> {
    let violations = bath.violations(system, Some(t_final));
    if !violations.is_empty() {
        return Ok(DeviationReport {
            pass: false,
            bath: *bath,
            violations,
            deviations: Vec::new(),
            energy_drift: 0.0,
        });
    }
    let oracle = OracleRun::execute(system, pulse, mixture, bath, t_final, dt)?;
    let analytic = AnalyticRun::integrate(system, pulse, mixture, t_final)?;
    compare(&oracle, &analytic, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_pulse, EnvelopeShape};

    fn setup(delta: f64) -> (LambdaSystem, PulseSpec) {
        let s = LambdaSystem::new(20.0, 0.0, 1.0, 1.0).unwrap();
        let p = make_pulse(EnvelopeShape::Exponential { linewidth: delta }, 20.0, &s).unwrap();
        (s, p)
    }

    #[test]
    fn narrowband_run_agrees() {
        let (s, p) = setup(0.1);
        let mix = InitialMixture::new(0.5, 0.5).unwrap();
        let r = verify(
            &s,
            &p,
            &mix,
            &DiscreteBath::default_for(&s),
            7.5,
            0.02,
            &Tolerances::default(),
        )
        .unwrap();
        for name in ["p_e", "p_ab", "n_a", "n_b", "s_e", "backward_leak"] {
            assert!(r.get(name).unwrap().pass, "{name}: {r:?}");
        }
        assert!(r.energy_drift < 1e-10);
    }

    #[test]
    fn deviation_is_set_by_the_band_edge() {
        // halving the spacing changes nothing, doubling the band halves the gap
        let (s, p) = setup(1.0);
        let mix = InitialMixture::pure_a();
        let tol = Tolerances::default();
        let dev = |n, b| {
            let r = verify(
                &s,
                &p,
                &mix,
                &DiscreteBath::new(n, b).unwrap(),
                7.5,
                0.05,
                &tol,
            )
            .unwrap();
            r.get("p_ab").unwrap().max_deviation
        };
        let base = dev(2001, 80.0);
        let wide = dev(2001, 160.0);
        let fine = dev(4001, 80.0);
        assert!((fine / base - 1.0).abs() < 0.01, "{base} {fine}");
        assert!((base / wide - 2.0).abs() < 0.1, "{base} {wide}");
    }

    #[test]
    fn coarse_bath_fails_by_name() {
        let (s, p) = setup(0.1);
        let coarse = DiscreteBath::new(81, 80.0).unwrap();
        let r = verify(
            &s,
            &p,
            &InitialMixture::pure_a(),
            &coarse,
            7.5,
            0.05,
            &Tolerances::default(),
        )
        .unwrap();
        assert!(!r.pass);
        assert!(r.violations.iter().any(|v| v.starts_with("spacing")));
    }

    #[test]
    fn mismatched_runs_are_a_usage_error() {
        let (s, p) = setup(0.5);
        let bath = DiscreteBath::new(401, 40.0).unwrap();
        let mix = InitialMixture::pure_a();
        let o = OracleRun::execute(&s, &p, &mix, &bath, 2.0, 0.1).unwrap();
        let other = s.with_delta_ab(0.5).unwrap();
        let a = AnalyticRun::integrate(&other, &p, &mix, 2.0).unwrap();
        assert!(matches!(
            compare(&o, &a, &Tolerances::default()),
            Err(Error::Usage(_))
        ));
    }
}
