use nalgebra::Matrix4;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::hamiltonian::Hamiltonian;
use super::secular::ArrowheadSpectrum;
use super::DiscreteBath;
use crate::entropy::von_neumann;
use crate::error::{Error, Result};
use crate::model::{InitialMixture, LambdaSystem};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Allowed drift of the state norm and of ⟨H⟩ over an evolution.
pub const NORM_TOLERANCE: f64 = 1e-10;

/// Amplitudes of the two decoupled one-excitation sectors.
///
/// `psi`, `a`, `b` evolve from |a⟩⊗photon; `reverse` holds |b, 1^a_k⟩ and
/// evolves from |b⟩⊗photon. Each sector is normalized on its own.
#[derive(Debug, Clone, PartialEq)]
pub struct OneExcitationState {
    pub t: f64,
    pub psi: Complex64,
    pub a: Vec<Complex64>,
    pub b: Vec<Complex64>,
    pub reverse: Vec<Complex64>,
}

impl OneExcitationState {
    /// Both sectors start with the photon amplitudes `phi` in the a-branch.
    pub fn from_photon(phi: &[Complex64]) -> Self {
        OneExcitationState {
            t: 0.0,
            psi: ZERO,
            a: phi.to_vec(),
            b: vec![ZERO; phi.len()],
            reverse: phi.to_vec(),
        }
    }

    pub fn forward_norm(&self) -> f64 {
        self.psi.norm_sqr() + sq(&self.a) + sq(&self.b)
    }

    pub fn reverse_norm(&self) -> f64 {
        sq(&self.reverse)
    }
}

fn sq(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum()
}

/// Exact propagator of both sectors from a fixed initial state.
///
/// The forward block is rotated into one bright mode family, which couples to
/// |e,0⟩ through a real arrowhead matrix, and a dark family that only picks up
/// phases. The arrowhead is diagonalized by its secular equation.
pub struct Propagator {
    spectrum: ArrowheadSpectrum,
    ca: Complex64,
    cb: Complex64,
    r: f64,
    offsets: Vec<f64>,
    reverse_energies: Vec<f64>,
    /// modes[k·(n+1) + j] = component of eigenvector j on bright mode k.
    modes: Vec<f64>,
    alpha: Vec<Complex64>,
    dark: Vec<Complex64>,
    reverse: Vec<Complex64>,
    t0: f64,
}

impl Propagator {
    pub fn new(ham: &Hamiltonian, state: &OneExcitationState) -> Result<Self> {
        let n = ham.n_modes();
        if state.a.len() != n || state.b.len() != n || state.reverse.len() != n {
            return Err(Error::Parameter(format!(
                "state has {}/{}/{} modes, bath has {n}",
                state.a.len(),
                state.b.len(),
                state.reverse.len()
            )));
        }
        let (ca, cb) = ham.branch_couplings();
        let r = (ca.norm_sqr() + cb.norm_sqr()).sqrt();
        let spectrum = ham.spectrum();
        let m = spectrum.len();
        let mut modes = vec![0.0; n * m];
        modes.par_chunks_mut(m).enumerate().for_each(|(k, row)| {
            for (j, v) in row.iter_mut().enumerate() {
                *v = spectrum.component(j, k);
            }
        });
        let defect = spectrum.orthogonality_defect();
        if defect > NORM_TOLERANCE {
            return Err(Error::Numerical(format!(
                "eigenvectors of the coupled block are orthogonal only to {defect:.2e}"
            )));
        }
        let (bright, dark): (Vec<Complex64>, Vec<Complex64>) = if r == 0.0 {
            (state.a.clone(), state.b.clone())
        } else {
            state
                .a
                .iter()
                .zip(&state.b)
                .map(|(&a, &b)| ((ca.conj() * a + cb.conj() * b) / r, (cb * a - ca * b) / r))
                .unzip()
        };
        let alpha: Vec<Complex64> = (0..m)
            .into_par_iter()
            .map(|j| {
                let mut s = spectrum.head(j) * state.psi;
                for k in 0..n {
                    s += modes[k * m + j] * bright[k];
                }
                s
            })
            .collect();
        let before = state.psi.norm_sqr() + sq(&bright);
        let drift = (sq(&alpha) - before).abs();
        if drift > NORM_TOLERANCE {
            return Err(Error::StepSize(format!(
                "projection onto the eigenbasis changes the norm by {drift:.2e}"
            )));
        }
        Ok(Propagator {
            spectrum,
            ca,
            cb,
            r,
            offsets: ham.offsets(),
            reverse_energies: ham.reverse_energies(),
            modes,
            alpha,
            dark,
            reverse: state.reverse.clone(),
            t0: state.t,
        })
    }

    pub fn spectrum(&self) -> &ArrowheadSpectrum {
        &self.spectrum
    }

    /// State at absolute time `t`.
    pub fn state_at(&self, t: f64) -> OneExcitationState {
        let tau = t - self.t0;
        let m = self.spectrum.len();
        let rotated: Vec<Complex64> = self
            .alpha
            .iter()
            .enumerate()
            .map(|(j, &a)| a * Complex64::from_polar(1.0, -self.spectrum.eigenvalue(j) * tau))
            .collect();
        let psi = rotated
            .iter()
            .enumerate()
            .fold(ZERO, |s, (j, &x)| s + self.spectrum.head(j) * x);
        let bright: Vec<Complex64> = self
            .modes
            .par_chunks(m)
            .map(|row| row.iter().zip(&rotated).fold(ZERO, |s, (&v, &x)| s + v * x))
            .collect();
        let dark: Vec<Complex64> = self
            .dark
            .iter()
            .zip(&self.offsets)
            .map(|(&d, &x)| d * Complex64::from_polar(1.0, -x * tau))
            .collect();
        let (a, b) = if self.r == 0.0 {
            (bright, dark)
        } else {
            let (ca, cb, r) = (self.ca, self.cb, self.r);
            bright
                .iter()
                .zip(&dark)
                .map(|(&u, &d)| ((ca * u + cb.conj() * d) / r, (cb * u - ca.conj() * d) / r))
                .unzip()
        };
        let reverse = self
            .reverse
            .iter()
            .zip(&self.reverse_energies)
            .map(|(&v, &e)| v * Complex64::from_polar(1.0, -e * tau))
            .collect();
        OneExcitationState {
            t,
            psi,
            a,
            b,
            reverse,
        }
    }
}

/// States at t = t₀, t₀+dt, …, t_final (the last point is always included).
pub fn evolve(
    ham: &Hamiltonian,
    state: &OneExcitationState,
    t_final: f64,
    dt: f64,
) -> Result<Vec<OneExcitationState>> {
    let times = output_times(&ham.bath, state.t, t_final, dt)?;
    let prop = Propagator::new(ham, state)?;
    let (f0, r0) = (state.forward_norm(), state.reverse_norm());
    times
        .iter()
        .map(|&t| {
            let s = prop.state_at(t);
            check_norm(&s, f0, r0)?;
            Ok(s)
        })
        .collect()
}

pub(crate) fn output_times(
    bath: &DiscreteBath,
    t0: f64,
    t_final: f64,
    dt: f64,
) -> Result<Vec<f64>> {
    if !(dt > 0.0 && dt.is_finite()) || !(t_final >= t0) {
        return Err(Error::Parameter(format!(
            "need dt > 0 and t_final >= t0 (dt = {dt}, t0 = {t0}, t_final = {t_final})"
        )));
    }
    if t_final >= bath.recurrence_time() {
        return Err(Error::Validity(format!(
            "t_final = {t_final} is past the recurrence time 2*pi/delta_omega = {}",
            bath.recurrence_time()
        )));
    }
    let steps = ((t_final - t0) / dt * (1.0 - 1e-12)).ceil() as usize;
    let mut times: Vec<f64> = (0..steps).map(|i| t0 + i as f64 * dt).collect();
    times.push(t_final);
    Ok(times)
}

pub(crate) fn check_norm(s: &OneExcitationState, f0: f64, r0: f64) -> Result<()> {
    let drift = (s.forward_norm() - f0)
        .abs()
        .max((s.reverse_norm() - r0).abs());
    if drift > NORM_TOLERANCE {
        return Err(Error::StepSize(format!(
            "norm drift {drift:.2e} at t = {}",
            s.t
        )));
    }
    Ok(())
}

/// Observables of the mixed initial state p_a0|a⟩⟨a| + p_b0|b⟩⟨b| (times
/// the pulse), read off the two evolved sectors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Measurement {
    pub t: f64,
    /// |ψ|² of the |a⟩ sector.
    pub p_e: f64,
    /// Σ|φ^a_k|² and Σ|φ^b_k|² of the |a⟩ sector.
    pub n_a: f64,
    pub n_b: f64,
    /// Population transferred to |b⟩ (equals n_b).
    pub p_ab: f64,
    /// |⟨free photon|a-branch photon⟩|²/n_a.
    pub overlap_sq: f64,
    /// Spectrum of ρ_E, decreasing.
    pub lambdas: [f64; 4],
    pub s_e: f64,
    /// ⟨H⟩ of the full mixture, lab frame.
    pub energy: f64,
}

/// Exact partial trace over the emitter, reduced to the Gram matrix of the
/// four vectors spanning ρ_E.
pub fn measure(
    ham: &Hamiltonian,
    state: &OneExcitationState,
    mixture: &InitialMixture,
) -> Result<Measurement> {
    let (pa, pb) = (mixture.p_a0, mixture.p_b0);
    let p_e = state.psi.norm_sqr();
    let n_a = sq(&state.a);
    let n_b = sq(&state.b);
    let cross: Complex64 = state
        .a
        .iter()
        .zip(&state.reverse)
        .map(|(x, f)| x.conj() * f)
        .sum();
    let n_f = sq(&state.reverse);
    let z = ZERO;
    let re = |x: f64| Complex64::new(x, 0.0);
    let off = (pa * pb).sqrt() * cross;
    #[rustfmt::skip]
    let gram = Matrix4::new(
        re(pa * p_e), z, z, z,
        z, re(pa * n_a), z, off,
        z, z, re(pa * n_b), z,
        z, off.conj(), z, re(pb * n_f),
    );
    let eig = gram.symmetric_eigen().eigenvalues;
    let mut lambdas = [eig[0], eig[1], eig[2], eig[3]];
    lambdas.sort_by(|x, y| y.partial_cmp(x).unwrap());
    for l in lambdas.iter_mut() {
        if l.abs() < 1e-15 {
            *l = 0.0;
        }
    }
    let s_e = von_neumann(&lambdas)?;
    let overlap_sq = if n_a * n_f > 0.0 {
        cross.norm_sqr() / (n_a * n_f)
    } else {
        0.0
    };
    Ok(Measurement {
        t: state.t,
        p_e,
        n_a,
        n_b,
        p_ab: n_b,
        overlap_sq,
        lambdas,
        s_e,
        energy: energy(ham, state, mixture),
    })
}

/// ⟨H⟩ = ħω_a + p_a0⟨H − ħω_a⟩_fwd + p_b0⟨H − ħω_a⟩_rev.
pub fn energy(ham: &Hamiltonian, state: &OneExcitationState, mixture: &InitialMixture) -> f64 {
    let (ca, cb) = ham.branch_couplings();
    let mut fwd = 0.0;
    let mut hop = ZERO;
    for k in 0..ham.n_modes() {
        let x = ham.bath.offset(k);
        fwd += x * (state.a[k].norm_sqr() + state.b[k].norm_sqr());
        hop += ca.conj() * state.a[k] + cb.conj() * state.b[k];
    }
    fwd += 2.0 * (state.psi.conj() * hop).re;
    let rev: f64 = state
        .reverse
        .iter()
        .zip(ham.reverse_energies())
        .map(|(v, e)| e * v.norm_sqr())
        .sum();
    ham.omega_a + mixture.p_a0 * fwd + mixture.p_b0 * rev
}

/// Probability that leaves the |b⟩⊗a-photon sector by time t.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BackwardLeak {
    pub t: f64,
    /// Frobenius norm of the block coupling the sector to everything else.
    pub coupling_norm: f64,
    /// Rigorous bound (t·‖C‖)² on the leaked probability.
    pub leak_bound: f64,
    /// 1 − norm retained in the sector after exact evolution.
    pub norm_loss: f64,
}

/// Evolves |b⟩⊗photon and bounds the amplitude that can leave the sector.
pub fn backward_leak(ham: &Hamiltonian, phi: &[Complex64], t: f64) -> Result<BackwardLeak> {
    let n = ham.n_modes();
    if phi.len() != n {
        return Err(Error::Parameter(format!(
            "photon has {} modes, bath has {n}",
            phi.len()
        )));
    }
    // generic matrix elements between the sector and every other basis state
    let others: Vec<_> = (0..ham.dim()).map(|i| ham.basis(i)).collect();
    let c2: f64 = (0..n)
        .into_par_iter()
        .map(|k| {
            let r = ham.reverse_basis(k);
            others
                .iter()
                .map(|s| ham.element(s, &r).norm_sqr() + ham.element(&r, s).norm_sqr())
                .sum::<f64>()
        })
        .sum();
    let coupling_norm = c2.sqrt();
    let start = OneExcitationState {
        t: 0.0,
        psi: ZERO,
        a: vec![ZERO; n],
        b: vec![ZERO; n],
        reverse: phi.to_vec(),
    };
    let end = Propagator::new(ham, &start)?.state_at(t);
    Ok(BackwardLeak {
        t,
        coupling_norm,
        leak_bound: (t * coupling_norm).powi(2) * start.reverse_norm(),
        norm_loss: start.reverse_norm() - end.reverse_norm() + end.forward_norm(),
    })
}

/// Decay rate of |e,0⟩ into the b-branch alone, from a log-linear fit of
/// its survival probability over t ∈ [0.5, 3]/Γ_b.
pub fn decay_rate_b(system: &LambdaSystem, bath: &DiscreteBath) -> Result<f64> {
    let g_b = (system.gamma_b / (2.0 * std::f64::consts::PI * bath.density())).sqrt();
    if g_b == 0.0 {
        return Err(Error::Parameter("decay fit needs gamma_b > 0".into()));
    }
    let ham = Hamiltonian::from_couplings(*bath, system.omega_a, system.delta_ab, 0.0, g_b);
    let n = bath.n_modes;
    let start = OneExcitationState {
        t: 0.0,
        psi: Complex64::new(1.0, 0.0),
        a: vec![ZERO; n],
        b: vec![ZERO; n],
        reverse: vec![ZERO; n],
    };
    let prop = Propagator::new(&ham, &start)?;
    let pts: Vec<(f64, f64)> = (0..=50)
        .map(|i| {
            let t = (0.5 + 2.5 * i as f64 / 50.0) / system.gamma_b;
            (t, prop.state_at(t).psi.norm_sqr().ln())
        })
        .collect();
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
    let (mx, my) = (sx / m, sy / m);
    let (num, den) = pts.iter().fold((0.0, 0.0), |(u, v), p| {
        (u + (p.0 - mx) * (p.1 - my), v + (p.0 - mx).powi(2))
    });
    Ok(-num / den)
}

#[cfg(test)]
mod tests {
    use super::super::{build_hamiltonian, discretize_pulse};
    use super::*;
    use crate::model::{make_pulse, EnvelopeShape};
    use nalgebra::{DMatrix, DVector};

    fn small() -> (Hamiltonian, Vec<Complex64>) {
        let bath = DiscreteBath::new(61, 12.0).unwrap();
        let ham = Hamiltonian::from_couplings(bath, 30.0, 1.5, 0.15, 0.25);
        let phi: Vec<Complex64> = (0..61)
            .map(|k| {
                Complex64::new(
                    (-((k as f64 - 30.0) / 6.0).powi(2)).exp(),
                    0.1 * k as f64 / 61.0,
                )
            })
            .collect();
        let nrm = sq(&phi).sqrt();
        (ham, phi.iter().map(|x| x / nrm).collect())
    }

    #[test]
    fn matches_dense_matrix_exponential() {
        let (ham, phi) = small();
        let h = ham.to_dense();
        let eig = nalgebra::linalg::SymmetricEigen::new(h.clone());
        let d = ham.dim();
        let mut v0 = DVector::<Complex64>::zeros(d);
        for k in 0..61 {
            v0[1 + k] = phi[k];
        }
        v0[0] = Complex64::new(0.2, -0.1);
        let mut start = OneExcitationState::from_photon(&phi);
        start.psi = v0[0];
        let t = 3.7;
        let phase =
            DMatrix::from_diagonal(&eig.eigenvalues.map(|l| Complex64::from_polar(1.0, -l * t)));
        let u = &eig.eigenvectors * phase * eig.eigenvectors.adjoint();
        let vt = u * &v0;
        let got = Propagator::new(&ham, &start).unwrap().state_at(t);
        assert!((got.psi - vt[0]).norm() < 1e-12);
        for k in 0..61 {
            assert!((got.a[k] - vt[1 + k]).norm() < 1e-12);
            assert!((got.b[k] - vt[62 + k]).norm() < 1e-12);
        }
    }

    #[test]
    fn uncoupled_amplitudes_only_rotate() {
        let (mut ham, phi) = small();
        ham.g_a = 0.0;
        ham.g_b = 0.0;
        let mut start = OneExcitationState::from_photon(&phi);
        start.b = phi.iter().map(|x| x * 0.5).collect();
        start.a = phi.iter().map(|x| x * 0.5).collect();
        start.psi = Complex64::new(0.0, (1.0 - 0.5f64).sqrt());
        let traj = evolve(&ham, &start, 20.0, 0.5).unwrap();
        for s in &traj {
            assert!((s.psi.norm_sqr() - 0.5).abs() < 1e-14);
            for k in 0..61 {
                assert!((s.a[k].norm() - start.a[k].norm()).abs() < 1e-14);
                assert!((s.b[k].norm() - start.b[k].norm()).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn recurrence_is_a_validity_error() {
        let (ham, phi) = small();
        let s = OneExcitationState::from_photon(&phi);
        let t = ham.bath.recurrence_time();
        assert!(matches!(evolve(&ham, &s, t, 0.1), Err(Error::Validity(_))));
    }

    #[test]
    fn initial_pure_photon_has_zero_entropy() {
        let (ham, phi) = small();
        let s = OneExcitationState::from_photon(&phi);
        let m = measure(&ham, &s, &InitialMixture::pure_a()).unwrap();
        assert!(m.s_e.abs() < 1e-12);
        assert!((m.n_a - 1.0).abs() < 1e-12);
        // mixed start: the two branches carry the same photon
        let m = measure(&ham, &s, &InitialMixture::new(0.5, 0.5).unwrap()).unwrap();
        assert!(m.s_e.abs() < 1e-12);
    }

    #[test]
    fn gram_spectrum_matches_explicit_density_matrix() {
        let (ham, phi) = small();
        let s = Propagator::new(&ham, &OneExcitationState::from_photon(&phi))
            .unwrap()
            .state_at(2.0);
        let mix = InitialMixture::new(0.3, 0.7).unwrap();
        let m = measure(&ham, &s, &mix).unwrap();
        // environment space: vacuum, a-modes, b-modes
        let n = 61;
        let mut rho = DMatrix::<Complex64>::zeros(2 * n + 1, 2 * n + 1);
        let mut add =
            |v: DVector<Complex64>, w: f64| rho += (&v * v.adjoint()) * Complex64::new(w, 0.0);
        let mut vac = DVector::zeros(2 * n + 1);
        vac[0] = s.psi;
        add(vac, mix.p_a0);
        let mut va = DVector::zeros(2 * n + 1);
        let mut vb = DVector::zeros(2 * n + 1);
        let mut vf = DVector::zeros(2 * n + 1);
        for k in 0..n {
            va[1 + k] = s.a[k];
            vb[1 + n + k] = s.b[k];
            vf[1 + k] = s.reverse[k];
        }
        add(va, mix.p_a0);
        add(vb, mix.p_a0);
        add(vf, mix.p_b0);
        let mut ev: Vec<f64> = rho.symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(|x, y| y.partial_cmp(x).unwrap());
        for (e, l) in ev.iter().zip(&m.lambdas) {
            assert!((e - l).abs() < 1e-12);
        }
        assert!(ev[4].abs() < 1e-12);
    }

    #[test]
    fn default_bath_conserves_norm_and_energy() {
        let sys = LambdaSystem::new(20.0, 2.0, 1.0, 1.0).unwrap();
        let pulse = make_pulse(EnvelopeShape::Gaussian { sigma: 1.0 }, 20.3, &sys).unwrap();
        let bath = DiscreteBath::default_for(&sys);
        let ham = build_hamiltonian(&sys, &bath).unwrap();
        let phi = discretize_pulse(&pulse, &sys, &bath).unwrap();
        let mix = InitialMixture::new(0.6, 0.4).unwrap();
        let expected = mix.p_b0 * sys.delta_ab
            + sys.omega_a
            + (0..bath.n_modes)
                .map(|k| bath.offset(k) * phi[k].norm_sqr())
                .sum::<f64>();
        let traj = evolve(&ham, &OneExcitationState::from_photon(&phi), 15.0, 1.0).unwrap();
        for s in &traj {
            assert!((s.forward_norm() - 1.0).abs() < 1e-10);
            let e = measure(&ham, s, &mix).unwrap().energy;
            assert!((e - expected).abs() < 1e-10, "t={} {e} {expected}", s.t);
        }
    }

    #[test]
    fn golden_rule_rate() {
        let sys = LambdaSystem::new(20.0, 0.0, 1.0, 1.0).unwrap();
        let rate = decay_rate_b(&sys, &DiscreteBath::default_for(&sys)).unwrap();
        assert!((rate / sys.gamma_b - 1.0).abs() < 0.02, "{rate}");
    }

    #[test]
    fn reverse_sector_does_not_leak() {
        let sys = LambdaSystem::new(20.0, 1.0, 1.0, 1.0).unwrap();
        let bath = DiscreteBath::default_for(&sys);
        let ham = build_hamiltonian(&sys, &bath).unwrap();
        let pulse = make_pulse(EnvelopeShape::Exponential { linewidth: 0.3 }, 20.0, &sys).unwrap();
        let phi = discretize_pulse(&pulse, &sys, &bath).unwrap();
        let leak = backward_leak(&ham, &phi, 15.0).unwrap();
        assert_eq!(leak.coupling_norm, 0.0);
        assert!(leak.leak_bound <= 1e-12 && leak.norm_loss.abs() <= 1e-12);
    }
}
