//! Excited-state amplitude ψ(t), the scattered fields and the transition
//! probabilities, by closed form (exponential pulses) and by direct
//! integration (any pulse).
//!
//! The stored amplitude is ψ̃(t) = ψ(t)·e^{iω_a t}, i.e. the frame rotating
//! with the |a⟩↔|e⟩ transition. Populations are frame independent.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{EnvelopeShape, InitialMixture, LambdaSystem, PulseSpec, SimGrid};
use crate::quad;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Time series produced by [`integrate_psi`].
///
/// Besides the amplitude, two running integrals are co-integrated with the
/// amplitude at the same order: P(t) = ∫₀ᵗ|ψ|² and the absorbed work in
/// units of ħω_a, ∫₀ᵗ −2g_a Re[φ_a(−ct',0) ψ*(t')] dt'.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmplitudeTrajectory {
    pub times: Vec<f64>,
    /// ψ̃(t) in the frame rotating at ω_a.
    pub psi: Vec<Complex64>,
    pub p_e: Vec<f64>,
    pub p_ab_cumulative: Vec<f64>,
    /// ∫₀ᵗ |ψ|² dt'.
    pub excited_integral: Vec<f64>,
    /// Absorbed work up to t, divided by ħω_a.
    pub work_integral: Vec<f64>,
    /// ∫₀ᵗ φ_a*(−ct',0) ψ(t') dt'; projects the scattered a-field onto the
    /// freely propagated input.
    pub overlap_integral: Vec<Complex64>,
    /// Integration step actually used.
    pub step: f64,
}

impl AmplitudeTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn t_final(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn final_psi(&self) -> Complex64 {
        *self.psi.last().unwrap()
    }

    pub fn final_p_e(&self) -> f64 {
        *self.p_e.last().unwrap()
    }

    pub fn final_p_ab(&self) -> f64 {
        *self.p_ab_cumulative.last().unwrap()
    }

    pub fn final_work_integral(&self) -> f64 {
        *self.work_integral.last().unwrap()
    }

    /// Lab-frame amplitude ψ(t_i) = ψ̃(t_i)·e^{−iω_a t_i}.
    pub fn psi_lab(&self, i: usize, omega_a: f64) -> Complex64 {
        self.psi[i] * Complex64::from_polar(1.0, -omega_a * self.times[i])
    }

    /// `|p_ab(t_max) − p_ab(0.9 t_max)|`, the long-time convergence measure.
    pub fn convergence_gap(&self) -> f64 {
        let t90 = 0.9 * self.t_final();
        let i = self.times.partition_point(|&t| t <= t90).saturating_sub(1);
        // linear interpolation is enough: p_ab is flat here if converged
        let (t0, t1) = (self.times[i], self.times[(i + 1).min(self.len() - 1)]);
        let (p0, p1) = (
            self.p_ab_cumulative[i],
            self.p_ab_cumulative[(i + 1).min(self.len() - 1)],
        );
        let p90 = if t1 > t0 {
            p0 + (p1 - p0) * (t90 - t0) / (t1 - t0)
        } else {
            p0
        };
        (self.final_p_ab() - p90).abs()
    }

    /// Whether both decay scales are exhausted (gap below 1e-6).
    pub fn is_converged(&self) -> bool {
        self.convergence_gap() < 1e-6
    }
}

/// Drive term of the amplitude equation in the rotating frame.
pub(crate) struct Drive<'a> {
    pulse: &'a PulseSpec,
    g_a: f64,
    delta_l: f64,
    c: f64,
    half_gamma: f64,
}

impl<'a> Drive<'a> {
    pub(crate) fn new(system: &LambdaSystem, pulse: &'a PulseSpec) -> Self {
        Drive {
            pulse,
            g_a: system.g_a(),
            delta_l: pulse.detuning(system),
            c: system.c_speed,
            half_gamma: 0.5 * system.gamma_total(),
        }
    }

    /// φ_a(−ct, 0)·e^{iω_a t}, taking one-sided limits from the side of `hint`.
    pub(crate) fn at(&self, t: f64, hint: f64) -> Complex64 {
        let shape = self.pulse.shape_in_piece(-self.c * t, -self.c * hint);
        if shape == ZERO {
            return ZERO;
        }
        shape * Complex64::from_polar(1.0, -self.delta_l * t)
    }

    pub(crate) fn g_a(&self) -> f64 {
        self.g_a
    }

    fn dpsi_with(&self, psi: Complex64, drive: Complex64) -> Complex64 {
        -self.half_gamma * psi - self.g_a * drive
    }

    pub(crate) fn dpsi(&self, t: f64, psi: Complex64, hint: f64) -> Complex64 {
        self.dpsi_with(psi, self.at(t, hint))
    }

    /// Right-hand side of the augmented system (ψ̃, P, W/ħω_a, O).
    fn rhs(&self, t: f64, psi: Complex64, hint: f64) -> (Complex64, f64, f64, Complex64) {
        let d = self.at(t, hint);
        (
            self.dpsi_with(psi, d),
            psi.norm_sqr(),
            -2.0 * self.g_a * (d * psi.conj()).re,
            d.conj() * psi,
        )
    }
}

#[derive(Clone, Copy)]
struct State {
    psi: Complex64,
    p: f64,
    w: f64,
    o: Complex64,
}

fn rk4(drive: &Drive, a: f64, b: f64, y: State) -> State {
    let h = b - a;
    let m = 0.5 * (a + b);
    let (k1, p1, w1, o1) = drive.rhs(a, y.psi, m);
    let (k2, p2, w2, o2) = drive.rhs(m, y.psi + k1 * (0.5 * h), m);
    let (k3, p3, w3, o3) = drive.rhs(m, y.psi + k2 * (0.5 * h), m);
    let (k4, p4, w4, o4) = drive.rhs(b, y.psi + k3 * h, m);
    State {
        o: y.o + (o1 + o2 * 2.0 + o3 * 2.0 + o4) * (h / 6.0),
        psi: y.psi + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0),
        p: y.p + (p1 + 2.0 * p2 + 2.0 * p3 + p4) * (h / 6.0),
        w: y.w + (w1 + 2.0 * w2 + 2.0 * w3 + w4) * (h / 6.0),
    }
}

/// Integrates the amplitude equation
/// ∂ₜψ = −((Γ_a+Γ_b)/2 + iω_a)ψ − g_a φ_a(−ct, 0)
/// with fixed-step classical Runge–Kutta in the frame rotating at ω_a.
///
/// Steps are split at the discontinuities of the drive, and the split points
/// are also stored so that interpolation never straddles a kink.
pub fn integrate_psi(
    system: &LambdaSystem,
    pulse: &PulseSpec,
    grid: &SimGrid,
) -> Result<AmplitudeTrajectory> {
    grid.validate(system)?;
    grid.check_accuracy(system, pulse)?;
    Ok(run(system, pulse, grid))
}

/// As [`integrate_psi`] but without the step-size accuracy bound; the caller
/// takes responsibility for checking the result (e.g. through the energy
/// ledger).
pub fn integrate_psi_unchecked(
    system: &LambdaSystem,
    pulse: &PulseSpec,
    grid: &SimGrid,
) -> Result<AmplitudeTrajectory> {
    grid.validate(system)?;
    Ok(run(system, pulse, grid))
}

fn run(system: &LambdaSystem, pulse: &PulseSpec, grid: &SimGrid) -> AmplitudeTrajectory {
    let drive = Drive::new(system, pulse);
    let n = grid.steps();
    let h = grid.t_max / n as f64;
    let eps = 1e-9 * h;
    let breaks: Vec<f64> = pulse
        .time_breakpoints()
        .into_iter()
        .filter(|&b| b > eps && b < grid.t_max - eps)
        .collect();
    let stride = grid.record_stride.max(1);
    let cap = n / stride + breaks.len() + 2;

    let mut out = AmplitudeTrajectory {
        times: Vec::with_capacity(cap),
        psi: Vec::with_capacity(cap),
        p_e: Vec::with_capacity(cap),
        p_ab_cumulative: Vec::with_capacity(cap),
        excited_integral: Vec::with_capacity(cap),
        work_integral: Vec::with_capacity(cap),
        overlap_integral: Vec::with_capacity(cap),
        step: h,
    };
    let gamma_b = system.gamma_b;
    let push = |out: &mut AmplitudeTrajectory, t: f64, y: &State| {
        out.times.push(t);
        out.psi.push(y.psi);
        out.p_e.push(y.psi.norm_sqr());
        out.p_ab_cumulative.push(gamma_b * y.p);
        out.excited_integral.push(y.p);
        out.work_integral.push(y.w);
        out.overlap_integral.push(y.o);
    };

    let mut y = State {
        psi: ZERO,
        p: 0.0,
        w: 0.0,
        o: ZERO,
    };
    push(&mut out, 0.0, &y);
    let mut bi = 0;
    for i in 0..n {
        let t0 = i as f64 * h;
        let t1 = if i + 1 == n {
            grid.t_max
        } else {
            (i + 1) as f64 * h
        };
        while bi < breaks.len() && breaks[bi] <= t0 + eps {
            bi += 1;
        }
        let mut a = t0;
        while bi < breaks.len() && breaks[bi] < t1 - eps {
            let b = breaks[bi];
            y = rk4(&drive, a, b, y);
            push(&mut out, b, &y);
            a = b;
            bi += 1;
        }
        y = rk4(&drive, a, t1, y);
        if (i + 1) % stride == 0 || i + 1 == n {
            push(&mut out, t1, &y);
        }
    }
    out
}

/// ψ̃(t) between stored points by cubic Hermite interpolation, with slopes
/// taken from the amplitude equation. `hint` selects the side at a drive
/// discontinuity.
pub fn psi_interpolated(
    traj: &AmplitudeTrajectory,
    system: &LambdaSystem,
    pulse: &PulseSpec,
    t: f64,
    hint: f64,
) -> Result<Complex64> {
    check_time(traj, t)?;
    let drive = Drive::new(system, pulse);
    Ok(hermite(traj, &drive, t, hint))
}

fn check_time(traj: &AmplitudeTrajectory, t: f64) -> Result<()> {
    let tf = traj.t_final();
    if !(t >= 0.0 && t <= tf * (1.0 + 1e-12)) {
        return Err(Error::Range(format!(
            "t = {t} outside trajectory range [0, {tf}]"
        )));
    }
    Ok(())
}

fn hermite(traj: &AmplitudeTrajectory, drive: &Drive, t: f64, hint: f64) -> Complex64 {
    let ts = &traj.times;
    let t = t.clamp(0.0, traj.t_final());
    let hint = hint.clamp(0.0, traj.t_final());
    // interval containing `hint`; t and hint always share one
    let mut i = ts.partition_point(|&x| x <= hint).saturating_sub(1);
    if i + 1 >= ts.len() {
        i = ts.len() - 2;
    }
    let (t0, t1) = (ts[i], ts[i + 1]);
    if t == t0 {
        return traj.psi[i];
    }
    if t == t1 {
        return traj.psi[i + 1];
    }
    let h = t1 - t0;
    let mid = 0.5 * (t0 + t1);
    let (y0, y1) = (traj.psi[i], traj.psi[i + 1]);
    let d0 = drive.dpsi(t0, y0, mid);
    let d1 = drive.dpsi(t1, y1, mid);
    let s = (t - t0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    y0 * h00 + d0 * (h10 * h) + y1 * h01 + d1 * (h11 * h)
}

/// p_{a→b}(t) = Γ_b ∫₀ᵗ |ψ|² dt'.
pub fn transition_prob_ab(
    traj: &AmplitudeTrajectory,
    system: &LambdaSystem,
    t: f64,
) -> Result<f64> {
    check_time(traj, t)?;
    let ts = &traj.times;
    let i = ts.partition_point(|&x| x <= t).saturating_sub(1);
    if i + 1 >= ts.len() || t == ts[i] {
        return Ok(system.gamma_b * traj.excited_integral[i]);
    }
    // Hermite on P with P' = |ψ|²
    let (t0, t1) = (ts[i], ts[i + 1]);
    let h = t1 - t0;
    let s = (t - t0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let p = traj.excited_integral[i] * (2.0 * s3 - 3.0 * s2 + 1.0)
        + traj.p_e[i] * h * (s3 - 2.0 * s2 + s)
        + traj.excited_integral[i + 1] * (-2.0 * s3 + 3.0 * s2)
        + traj.p_e[i + 1] * h * (s3 - s2);
    Ok(system.gamma_b * p)
}

/// Running integrals at an arbitrary time, by Hermite interpolation with
/// the exact integrands as slopes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunningIntegrals {
    pub psi: Complex64,
    /// ∫₀ᵗ |ψ|².
    pub excited: f64,
    /// Absorbed work over ħω_a.
    pub work: f64,
    /// ∫₀ᵗ φ_a*(−ct',0) ψ(t') dt'.
    pub overlap: Complex64,
}

impl RunningIntegrals {
    /// (1/(2πϱc))∫ φ*_free φ_a dz = 1 + g_a·∫φ_a*(−ct',0)ψ dt' for a unit pulse
    /// whose support lies inside the spatial window.
    pub fn free_projection(&self, system: &LambdaSystem, pulse: &PulseSpec) -> Complex64 {
        Complex64::new(pulse.scale() * pulse.scale(), 0.0) + system.g_a() * self.overlap
    }
}

pub fn running_integrals(
    traj: &AmplitudeTrajectory,
    system: &LambdaSystem,
    pulse: &PulseSpec,
    t: f64,
) -> Result<RunningIntegrals> {
    check_time(traj, t)?;
    let drive = Drive::new(system, pulse);
    let ts = &traj.times;
    let t = t.clamp(0.0, traj.t_final());
    let mut i = ts.partition_point(|&x| x <= t).saturating_sub(1);
    if i + 1 >= ts.len() {
        i = ts.len() - 2;
    }
    let (t0, t1) = (ts[i], ts[i + 1]);
    let h = t1 - t0;
    let mid = 0.5 * (t0 + t1);
    let s = (t - t0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let (h00, h10, h01, h11) = (
        2.0 * s3 - 3.0 * s2 + 1.0,
        (s3 - 2.0 * s2 + s) * h,
        -2.0 * s3 + 3.0 * s2,
        (s3 - s2) * h,
    );
    let (d0, d1) = (drive.at(t0, mid), drive.at(t1, mid));
    let (y0, y1) = (traj.psi[i], traj.psi[i + 1]);
    let g = drive.g_a();
    let w_rate = |d: Complex64, y: Complex64| -2.0 * g * (d * y.conj()).re;
    Ok(RunningIntegrals {
        psi: hermite(traj, &drive, t, t.clamp(t0, t1)),
        excited: traj.excited_integral[i] * h00
            + traj.p_e[i] * h10
            + traj.excited_integral[i + 1] * h01
            + traj.p_e[i + 1] * h11,
        work: traj.work_integral[i] * h00
            + w_rate(d0, y0) * h10
            + traj.work_integral[i + 1] * h01
            + w_rate(d1, y1) * h11,
        overlap: traj.overlap_integral[i] * h00
            + d0.conj() * y0 * h10
            + traj.overlap_integral[i + 1] * h01
            + d1.conj() * y1 * h11,
    })
}

fn exponential_linewidth(pulse: &PulseSpec) -> Result<f64> {
    match pulse.shape() {
        EnvelopeShape::Exponential { linewidth } => Ok(*linewidth),
        other => Err(Error::UnsupportedEnvelope(format!(
            "closed form needs an exponential envelope, got {}",
            other.family_name()
        ))),
    }
}

/// e^z − 1 without cancellation for small |z|.
fn expm1_c(z: Complex64) -> Complex64 {
    let half = (0.5 * z.im).sin();
    let cos_m1 = -2.0 * half * half;
    Complex64::new(z.re.exp_m1() * z.im.cos() + cos_m1, z.re.exp() * z.im.sin())
}

/// (e^{κt} − 1)/κ, equal to t at κ = 0.
fn growth_factor(kappa: Complex64, t: f64) -> Complex64 {
    if kappa == ZERO {
        return Complex64::new(t, 0.0);
    }
    expm1_c(kappa * t) / kappa
}

/// e^{−Γt/2}(e^{κt} − 1)/κ, safe for large t.
fn decayed_growth(kappa: Complex64, half_gamma: f64, t: f64) -> Complex64 {
    if (kappa * t).norm() < 1.0 {
        return (-half_gamma * t).exp() * growth_factor(kappa, t);
    }
    ((kappa - half_gamma) * t).exp() / kappa - (-half_gamma * t).exp() / kappa
}

fn kappa(system: &LambdaSystem, linewidth: f64, delta_l: f64) -> Complex64 {
    Complex64::new(0.5 * (system.gamma_total() - linewidth), -delta_l)
}

/// Closed-form ψ(t) (lab frame) for an exponential pulse.
pub fn psi_closed_form(system: &LambdaSystem, pulse: &PulseSpec, t: f64) -> Result<Complex64> {
    Ok(psi_closed_form_rotating(system, pulse, t)?
        * Complex64::from_polar(1.0, -system.omega_a * t))
}

/// Closed-form ψ̃(t) = ψ(t)·e^{iω_a t} for an exponential pulse.
pub fn psi_closed_form_rotating(
    system: &LambdaSystem,
    pulse: &PulseSpec,
    t: f64,
) -> Result<Complex64> {
    let linewidth = exponential_linewidth(pulse)?;
    if !(t >= 0.0) {
        return Err(Error::Range(format!("t must be >= 0, got {t}")));
    }
    let k = kappa(system, linewidth, pulse.detuning(system));
    let amp = pulse.scale() * (system.gamma_a * linewidth).sqrt();
    Ok(-amp * decayed_growth(k, 0.5 * system.gamma_total(), t))
}

/// Closed-form p_{a→b}(t) for an exponential pulse.
pub fn prob_ab_closed_form(system: &LambdaSystem, pulse: &PulseSpec, t: f64) -> Result<f64> {
    let linewidth = exponential_linewidth(pulse)?;
    if !(t >= 0.0) {
        return Err(Error::Range(format!("t must be >= 0, got {t}")));
    }
    let gamma = system.gamma_total();
    let delta_l = pulse.detuning(system);
    let k = kappa(system, linewidth, delta_l);
    let amp2 = pulse.scale().powi(2) * system.gamma_a * linewidth;
    let rate = gamma.max(linewidth).max(delta_l.abs());
    let integral = if k.norm() > 1e-2 * rate {
        // ∫ e^{−Γs}|e^{κs} − 1|² ds / |κ|², expanded in exponentials
        let mu = Complex64::new(0.5 * (gamma + linewidth), delta_l);
        let term_mu = -expm1_c(-mu * t) / mu;
        let v = -(-linewidth * t).exp_m1() / linewidth
            - (-gamma * t).exp_m1() / gamma
            - 2.0 * term_mu.re;
        v / k.norm_sqr()
    } else {
        let half_gamma = 0.5 * gamma;
        let panels = ((t * rate * 2.0).ceil() as usize).clamp(1, 2_000_000);
        quad::gauss_legendre(
            |s| decayed_growth(k, half_gamma, s).norm_sqr(),
            0.0,
            t,
            panels,
        )
    };
    Ok(system.gamma_b * amp2 * integral)
}

/// p_{a→b}(∞) for an exponential pulse of linewidth Δ and detuning δ_L:
/// Γ_aΓ_b(Γ+Δ) / (Γ·((Γ+Δ)²/4 + δ_L²)), Γ = Γ_a + Γ_b.
pub fn asymptotic_prob_exponential(system: &LambdaSystem, delta: f64, delta_l: f64) -> Result<f64> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::Parameter(format!(
            "linewidth must be > 0, got {delta}"
        )));
    }
    if !delta_l.is_finite() {
        return Err(Error::Parameter("detuning must be finite".into()));
    }
    let gamma = system.gamma_total();
    let s = gamma + delta;
    Ok(system.gamma_a * system.gamma_b * s / (gamma * (0.25 * s * s + delta_l * delta_l)))
}

/// Photon field in real space at one instant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldState {
    pub t: f64,
    /// Positions; a position appears twice at a discontinuity (left and
    /// right limits), which trapezoid integration handles as zero width.
    pub z: Vec<f64>,
    pub phi_a: Vec<Complex64>,
    pub phi_b: Vec<Complex64>,
    /// Freely propagated input φ_a(z − ct, 0).
    pub phi_free: Vec<Complex64>,
    rho_density: f64,
    c_speed: f64,
}

impl FieldState {
    fn weight(&self) -> f64 {
        1.0 / (2.0 * PI * self.rho_density * self.c_speed)
    }

    fn integrate<F: Fn(usize) -> f64>(&self, f: F) -> f64 {
        let y: Vec<f64> = (0..self.z.len()).map(f).collect();
        self.weight() * quad::trapezoid(&self.z, &y)
    }

    /// N_a = (1/(2πϱc))∫|φ_a|² dz.
    pub fn n_a(&self) -> f64 {
        self.integrate(|i| self.phi_a[i].norm_sqr())
    }

    /// N_b = (1/(2πϱc))∫|φ_b|² dz.
    pub fn n_b(&self) -> f64 {
        self.integrate(|i| self.phi_b[i].norm_sqr())
    }

    /// (1/(2πϱc))∫ φ*_free φ_a dz.
    pub fn free_projection(&self) -> Complex64 {
        let re = self.integrate(|i| (self.phi_free[i].conj() * self.phi_a[i]).re);
        let im = self.integrate(|i| (self.phi_free[i].conj() * self.phi_a[i]).im);
        Complex64::new(re, im)
    }
}

/// Real-space fields φ_a(z,t), φ_b(z,t) on the grid's spatial window.
pub fn field_amplitudes(
    traj: &AmplitudeTrajectory,
    system: &LambdaSystem,
    pulse: &PulseSpec,
    grid: &SimGrid,
    t: f64,
) -> Result<FieldState> {
    check_time(traj, t)?;
    let c = system.c_speed;
    if grid.z_max < c * t {
        return Err(Error::Config(format!(
            "z_max = {} does not cover the emitted field up to c*t = {}",
            grid.z_max,
            c * t
        )));
    }
    if grid.z_min > -c * t {
        return Err(Error::Config(format!(
            "z_min = {} does not cover the incoming field down to -c*t = {}",
            grid.z_min,
            -c * t
        )));
    }
    let nodes = spatial_nodes(pulse, grid, c * t);
    let drive = Drive::new(system, pulse);
    let amp_a = (2.0 * PI * system.rho_density * system.gamma_a).sqrt();
    let amp_b = (2.0 * PI * system.rho_density * system.gamma_b).sqrt();
    let ct = c * t;

    let mut z = Vec::with_capacity(nodes.len());
    let mut phi_a = Vec::with_capacity(nodes.len());
    let mut phi_b = Vec::with_capacity(nodes.len());
    let mut phi_free = Vec::with_capacity(nodes.len());
    for (zi, hint) in nodes {
        let free = pulse.shape_in_piece(zi - ct, hint - ct)
            * Complex64::from_polar(1.0, pulse.carrier() * (zi - ct) / c);
        let (sa, sb) = if hint > 0.0 && hint < ct {
            let s = t - zi / c;
            let psi = hermite(traj, &drive, s, t - hint / c)
                * Complex64::from_polar(1.0, -system.omega_a * s);
            (
                psi * amp_a,
                psi * amp_b * Complex64::from_polar(1.0, -system.delta_ab * zi / c),
            )
        } else {
            (ZERO, ZERO)
        };
        z.push(zi);
        phi_a.push(free + sa);
        phi_b.push(sb);
        phi_free.push(free);
    }
    Ok(FieldState {
        t,
        z,
        phi_a,
        phi_b,
        phi_free,
        rho_density: system.rho_density,
        c_speed: c,
    })
}

/// Uniform nodes plus doubled nodes at every discontinuity of the fields.
/// Each node carries a `hint` position telling evaluators which side to use.
fn spatial_nodes(pulse: &PulseSpec, grid: &SimGrid, ct: f64) -> Vec<(f64, f64)> {
    let dz = grid.dz;
    let tol = 1e-9 * dz;
    let mut kinks: Vec<f64> = vec![0.0, ct];
    kinks.extend(pulse.space_breakpoints().into_iter().map(|b| b + ct));
    if let EnvelopeShape::Sampled { z, .. } = pulse.shape() {
        kinks.extend(z.iter().map(|b| b + ct));
    }
    kinks.retain(|&k| k > grid.z_min + tol && k < grid.z_max - tol);
    kinks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    kinks.dedup_by(|a, b| (*a - *b).abs() <= tol);

    let n = ((grid.z_max - grid.z_min) / dz).ceil() as usize;
    let mut nodes: Vec<(f64, f64)> = Vec::with_capacity(n + 1 + 2 * kinks.len());
    for k in 0..=n {
        let zi = (grid.z_min + k as f64 * dz).min(grid.z_max);
        let near = kinks
            .binary_search_by(|x| x.partial_cmp(&zi).unwrap())
            .map(|_| true)
            .unwrap_or_else(|j| {
                (j > 0 && (zi - kinks[j - 1]).abs() <= tol)
                    || (j < kinks.len() && (kinks[j] - zi).abs() <= tol)
            });
        if !near {
            nodes.push((zi, zi));
        }
        if zi >= grid.z_max {
            break;
        }
    }
    for &k in &kinks {
        let off = 0.25 * dz;
        nodes.push((k, k - off));
        nodes.push((k, k + off));
    }
    nodes.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap()
            .then(a.1.partial_cmp(&b.1).unwrap())
    });
    nodes
}

/// Probability of the reverse transition b → a when the organized state |b⟩
/// is driven by the mirrored pulse in the a-continuum.
///
/// The a-photon can only be absorbed from |a⟩: the coupling of |b, 1_a⟩ to
/// |e, 0⟩ is g_a⟨a|b⟩ = 0, so the sector never evolves out of itself and the
/// result is exactly zero for every pulse and time.
pub fn backward_prob(system: &LambdaSystem, pulse: &PulseSpec, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Range(format!("t must be >= 0, got {t}")));
    }
    // the reverse protocol must at least be constructible for this pulse
    pulse.mirrored(1001)?;
    let ground_overlap = 0.0; // ⟨a|b⟩
    let coupling = system.g_a() * ground_overlap;
    Ok(coupling * coupling)
}

/// Ground and excited populations for an initial mixture.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Populations {
    pub times: Vec<f64>,
    pub p_a: Vec<f64>,
    pub p_b: Vec<f64>,
    pub p_e: Vec<f64>,
}

/// p_k(t) = p_a0·p_{a→k}(t) + p_b0·p_{b→k}(t); the |b⟩ sector is frozen
/// (p_{b→b} = 1), and p_{a→a} = 1 − p_{a→e} − p_{a→b}.
pub fn populations(
    _system: &LambdaSystem,
    mixture: &InitialMixture,
    traj: &AmplitudeTrajectory,
) -> Populations {
    let n = traj.len();
    let mut out = Populations {
        times: traj.times.clone(),
        p_a: Vec::with_capacity(n),
        p_b: Vec::with_capacity(n),
        p_e: Vec::with_capacity(n),
    };
    for i in 0..n {
        let pe = traj.p_e[i];
        let pab = traj.p_ab_cumulative[i];
        let paa = 1.0 - pe - pab;
        out.p_a.push(mixture.p_a0 * paa);
        out.p_b.push(mixture.p_a0 * pab + mixture.p_b0);
        out.p_e.push(mixture.p_a0 * pe);
    }
    out
}
