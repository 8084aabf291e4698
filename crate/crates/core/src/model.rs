//! Domain types: the Λ emitter, the single-photon wavepacket, the initial
//! mixture of ground states and the simulation grid.
//!
//! Units: ħ = 1 throughout. Rates and frequencies share one (arbitrary)
//! inverse-time unit; energies are therefore angular frequencies.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distance from the emitter, in units of `c·σ`, at which a Gaussian
/// wavepacket is centred at t = 0. The truncated tail at z = 0 has relative
/// amplitude e^{-16}.
pub const GAUSSIAN_DELAY_SIGMAS: f64 = 8.0;

/// Three-level Λ emitter coupled to two one-dimensional photonic continua.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaSystem {
    /// |a⟩ ↔ |e⟩ transition frequency.
    pub omega_a: f64,
    /// ω_a − ω_b; the energy of |b⟩ above |a⟩.
    pub delta_ab: f64,
    pub gamma_a: f64,
    pub gamma_b: f64,
    /// Density of field modes ϱ.
    pub rho_density: f64,
    /// Propagation speed c.
    pub c_speed: f64,
}

impl LambdaSystem {
    /// Builds a system with ϱ = c = 1.
    pub fn new(omega_a: f64, delta_ab: f64, gamma_a: f64, gamma_b: f64) -> Result<Self> {
        Self::with_medium(omega_a, delta_ab, gamma_a, gamma_b, 1.0, 1.0)
    }

    pub fn with_medium(
        omega_a: f64,
        delta_ab: f64,
        gamma_a: f64,
        gamma_b: f64,
        rho_density: f64,
        c_speed: f64,
    ) -> Result<Self> {
        let sys = LambdaSystem {
            omega_a,
            delta_ab,
            gamma_a,
            gamma_b,
            rho_density,
            c_speed,
        };
        sys.validate()?;
        Ok(sys)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.omega_a,
            self.delta_ab,
            self.gamma_a,
            self.gamma_b,
            self.rho_density,
            self.c_speed,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("system parameters must be finite".into()));
        }
        if self.omega_a <= 0.0 {
            return Err(Error::Parameter(format!(
                "omega_a must be > 0, got {}",
                self.omega_a
            )));
        }
        if self.omega_b() <= 0.0 {
            return Err(Error::Parameter(format!(
                "omega_a - delta_ab must be > 0, got {}",
                self.omega_b()
            )));
        }
        if self.gamma_a <= 0.0 || self.gamma_b <= 0.0 {
            return Err(Error::Parameter(format!(
                "decay rates must be > 0, got gamma_a = {}, gamma_b = {}",
                self.gamma_a, self.gamma_b
            )));
        }
        if self.rho_density <= 0.0 || self.c_speed <= 0.0 {
            return Err(Error::Parameter(
                "mode density and propagation speed must be > 0".into(),
            ));
        }
        Ok(())
    }

    pub fn omega_b(&self) -> f64 {
        self.omega_a - self.delta_ab
    }

    /// Γ_a + Γ_b.
    pub fn gamma_total(&self) -> f64 {
        self.gamma_a + self.gamma_b
    }

    /// Coupling g_a with Γ_a = 2π g_a² ϱ.
    pub fn g_a(&self) -> f64 {
        (self.gamma_a / (2.0 * PI * self.rho_density)).sqrt()
    }

    /// Coupling g_b with Γ_b = 2π g_b² ϱ.
    pub fn g_b(&self) -> f64 {
        (self.gamma_b / (2.0 * PI * self.rho_density)).sqrt()
    }

    /// Same emitter with a different |a⟩–|b⟩ splitting.
    pub fn with_delta_ab(&self, delta_ab: f64) -> Result<Self> {
        let mut s = *self;
        s.delta_ab = delta_ab;
        s.validate()?;
        Ok(s)
    }

    /// Same emitter with new decay rates.
    pub fn with_rates(&self, gamma_a: f64, gamma_b: f64) -> Result<Self> {
        let mut s = *self;
        s.gamma_a = gamma_a;
        s.gamma_b = gamma_b;
        s.validate()?;
        Ok(s)
    }
}

/// Envelope parameters accepted by [`make_pulse`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum EnvelopeShape {
    /// Spontaneous-emission-like profile with linewidth Δ.
    Exponential { linewidth: f64 },
    /// Gaussian intensity profile with rms duration σ (time units).
    Gaussian { sigma: f64 },
    /// Flat-top pulse of duration τ.
    Rectangular { duration: f64 },
    /// Linearly interpolated complex amplitudes on an increasing z grid.
    Sampled {
        z: Vec<f64>,
        amplitudes: Vec<Complex64>,
    },
}

impl EnvelopeShape {
    pub fn family_name(&self) -> &'static str {
        match self {
            EnvelopeShape::Exponential { .. } => "exponential",
            EnvelopeShape::Gaussian { .. } => "gaussian",
            EnvelopeShape::Rectangular { .. } => "rectangular",
            EnvelopeShape::Sampled { .. } => "sampled",
        }
    }
}

/// Normalized single-photon wavepacket φ_a(z, 0) = φ^shape(z, 0)·e^{iω_L z/c}.
///
/// The shape is supported on z ≤ 0: the pulse has not reached the emitter
/// (at z = 0) at t = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    carrier: f64,
    shape: EnvelopeShape,
    /// Prefactor N of the parametric families (unused for sampled shapes,
    /// whose amplitudes are stored pre-normalized).
    amplitude: f64,
    scale: f64,
    rho_density: f64,
    c_speed: f64,
}

/// Builds a unit-norm pulse, i.e. (1/(2πϱc))∫|φ_a(z,0)|² dz = 1.
pub fn make_pulse(shape: EnvelopeShape, carrier: f64, system: &LambdaSystem) -> Result<PulseSpec> {
    if !carrier.is_finite() {
        return Err(Error::Parameter("carrier frequency must be finite".into()));
    }
    let rho = system.rho_density;
    let c = system.c_speed;
    let (shape, amplitude) = match shape {
        EnvelopeShape::Exponential { linewidth } => {
            positive("linewidth", linewidth)?;
            (shape, (2.0 * PI * rho * linewidth).sqrt())
        }
        EnvelopeShape::Gaussian { sigma } => {
            positive("sigma", sigma)?;
            // |φ|² = N² exp(-(t - t0)²/(2σ²)) in time; ∫ = N² c σ √(2π).
            (shape, ((2.0 * PI).sqrt() * rho / sigma).sqrt())
        }
        EnvelopeShape::Rectangular { duration } => {
            positive("duration", duration)?;
            (shape, (2.0 * PI * rho / duration).sqrt())
        }
        EnvelopeShape::Sampled { z, amplitudes } => {
            let amplitudes = normalize_samples(&z, amplitudes, rho, c)?;
            (EnvelopeShape::Sampled { z, amplitudes }, 1.0)
        }
    };
    Ok(PulseSpec {
        carrier,
        shape,
        amplitude,
        scale: 1.0,
        rho_density: rho,
        c_speed: c,
    })
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} must be > 0, got {v}")))
    }
}

fn normalize_samples(
    z: &[f64],
    amplitudes: Vec<Complex64>,
    rho: f64,
    c: f64,
) -> Result<Vec<Complex64>> {
    if z.len() != amplitudes.len() {
        return Err(Error::Parameter(format!(
            "sampled envelope has {} positions but {} amplitudes",
            z.len(),
            amplitudes.len()
        )));
    }
    if z.len() < 2 {
        return Err(Error::Parameter(
            "sampled envelope needs at least two points".into(),
        ));
    }
    if z.iter().any(|v| !v.is_finite()) || amplitudes.iter().any(|a| !a.is_finite()) {
        return Err(Error::Parameter(
            "sampled envelope contains non-finite values".into(),
        ));
    }
    if z.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Parameter(
            "sampled z grid must be strictly increasing".into(),
        ));
    }
    if *z.last().unwrap() > 0.0 {
        return Err(Error::Parameter(
            "sampled envelope must be supported on z <= 0".into(),
        ));
    }
    let norm = piecewise_linear_norm(z, &amplitudes) / (2.0 * PI * rho * c);
    if !(norm > 0.0) {
        return Err(Error::DegenerateInput(
            "sampled envelope has zero norm".into(),
        ));
    }
    let k = norm.sqrt().recip();
    Ok(amplitudes.into_iter().map(|a| a * k).collect())
}

/// Exact ∫|f|² dz for f linear between samples.
fn piecewise_linear_norm(z: &[f64], amp: &[Complex64]) -> f64 {
    z.windows(2)
        .zip(amp.windows(2))
        .map(|(zw, aw)| {
            let h = zw[1] - zw[0];
            let (a, b) = (aw[0], aw[1]);
            h / 3.0 * (a.norm_sqr() + (a * b.conj()).re + b.norm_sqr())
        })
        .sum()
}

impl PulseSpec {
    pub fn carrier(&self) -> f64 {
        self.carrier
    }

    pub fn shape(&self) -> &EnvelopeShape {
        &self.shape
    }

    pub fn family_name(&self) -> &'static str {
        self.shape.family_name()
    }

    /// Normalization prefactor N of the parametric shapes.
    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    /// Overall amplitude factor; 1 for physical pulses.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn rho_density(&self) -> f64 {
        self.rho_density
    }

    pub fn c_speed(&self) -> f64 {
        self.c_speed
    }

    /// δ_L = ω_L − ω_a.
    pub fn detuning(&self, system: &LambdaSystem) -> f64 {
        self.carrier - system.omega_a
    }

    /// Same shape with amplitude multiplied by `factor`; the norm becomes
    /// `factor²`. A factor of 0 gives the undriven limit.
    pub fn scaled(&self, factor: f64) -> PulseSpec {
        let mut p = self.clone();
        p.scale *= factor;
        p
    }

    /// Same shape and medium with another carrier.
    pub fn with_carrier(&self, carrier: f64) -> PulseSpec {
        let mut p = self.clone();
        p.carrier = carrier;
        p
    }

    /// Characteristic spectral width used to bound the integration step.
    pub fn effective_bandwidth(&self) -> f64 {
        match &self.shape {
            EnvelopeShape::Exponential { linewidth } => *linewidth,
            EnvelopeShape::Gaussian { sigma } => 1.0 / sigma,
            EnvelopeShape::Rectangular { duration } => 1.0 / duration,
            EnvelopeShape::Sampled { z, .. } => {
                let h = z
                    .windows(2)
                    .map(|w| w[1] - w[0])
                    .fold(f64::INFINITY, f64::min);
                self.c_speed / h
            }
        }
    }

    /// Characteristic duration of the intensity profile.
    pub fn duration_scale(&self) -> f64 {
        match &self.shape {
            EnvelopeShape::Exponential { linewidth } => 1.0 / linewidth,
            EnvelopeShape::Gaussian { sigma } => *sigma,
            EnvelopeShape::Rectangular { duration } => *duration,
            EnvelopeShape::Sampled { z, .. } => (z[z.len() - 1] - z[0]) / self.c_speed,
        }
    }

    /// Time after which the drive at the emitter has (essentially) started
    /// decaying: the arrival of the peak or the end of a finite pulse.
    pub fn arrival_delay(&self) -> f64 {
        match &self.shape {
            EnvelopeShape::Exponential { .. } => 0.0,
            EnvelopeShape::Gaussian { sigma } => GAUSSIAN_DELAY_SIGMAS * sigma,
            EnvelopeShape::Rectangular { duration } => *duration,
            EnvelopeShape::Sampled { z, .. } => -z[0] / self.c_speed,
        }
    }

    /// Positions (at t = 0) where the shape is discontinuous.
    pub fn space_breakpoints(&self) -> Vec<f64> {
        match &self.shape {
            EnvelopeShape::Exponential { .. } | EnvelopeShape::Gaussian { .. } => vec![0.0],
            EnvelopeShape::Rectangular { duration } => vec![-self.c_speed * duration, 0.0],
            EnvelopeShape::Sampled { z, .. } => vec![z[0], z[z.len() - 1]],
        }
    }

    /// Arrival times at the emitter where the drive is discontinuous.
    pub fn time_breakpoints(&self) -> Vec<f64> {
        let mut t: Vec<f64> = self
            .space_breakpoints()
            .into_iter()
            .map(|z| -z / self.c_speed)
            .collect();
        t.sort_by(|a, b| a.partial_cmp(b).unwrap());
        t
    }

    /// φ^shape(z, 0) without the carrier phase.
    pub fn shape_at(&self, z: f64) -> Complex64 {
        self.shape_in_piece(z, z)
    }

    /// φ^shape(z, 0) evaluated with the analytic piece that contains `hint`.
    ///
    /// At a discontinuity this returns the one-sided limit taken from the
    /// side of `hint`, which is what a step-wise integrator needs.
    pub fn shape_in_piece(&self, z: f64, hint: f64) -> Complex64 {
        let c = self.c_speed;
        let v = match &self.shape {
            EnvelopeShape::Exponential { linewidth } => {
                if hint > 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                self.amplitude * (0.5 * linewidth * z / c).exp()
            }
            EnvelopeShape::Gaussian { sigma } => {
                if hint > 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                let zc = -GAUSSIAN_DELAY_SIGMAS * c * sigma;
                let u = (z - zc) / (c * sigma);
                self.amplitude * (-0.25 * u * u).exp()
            }
            EnvelopeShape::Rectangular { duration } => {
                if hint > 0.0 || hint < -c * duration {
                    return Complex64::new(0.0, 0.0);
                }
                self.amplitude
            }
            EnvelopeShape::Sampled {
                z: grid,
                amplitudes,
            } => {
                let n = grid.len();
                if hint < grid[0] || hint > grid[n - 1] {
                    return Complex64::new(0.0, 0.0);
                }
                return self.scale * interpolate(grid, amplitudes, z.clamp(grid[0], grid[n - 1]));
            }
        };
        Complex64::new(self.scale * v, 0.0)
    }

    /// Full initial amplitude φ_a(z, 0) = φ^shape(z, 0)·e^{iω_L z/c}.
    pub fn envelope_at(&self, z: f64) -> Complex64 {
        self.shape_at(z) * Complex64::from_polar(1.0, self.carrier * z / self.c_speed)
    }

    /// The same envelope reflected in space about the centre of its support.
    ///
    /// Infinite exponential tails are truncated where the amplitude falls
    /// below 1e-12 of its maximum; the result is a renormalized sampled pulse
    /// with `points` samples.
    pub fn mirrored(&self, points: usize) -> Result<PulseSpec> {
        if points < 2 {
            return Err(Error::Parameter(
                "mirroring needs at least two samples".into(),
            ));
        }
        let c = self.c_speed;
        let (lo, hi) = match &self.shape {
            EnvelopeShape::Exponential { linewidth } => {
                (-2.0 * c * (1e12f64).ln() / linewidth, 0.0)
            }
            EnvelopeShape::Gaussian { sigma } => (-2.0 * GAUSSIAN_DELAY_SIGMAS * c * sigma, 0.0),
            EnvelopeShape::Rectangular { duration } => (-c * duration, 0.0),
            EnvelopeShape::Sampled { z, .. } => (z[0], z[z.len() - 1]),
        };
        let h = (hi - lo) / (points - 1) as f64;
        let z: Vec<f64> = (0..points).map(|i| lo + h * i as f64).collect();
        // Interior evaluation avoids picking the zero side of a discontinuity.
        let amplitudes: Vec<Complex64> = z
            .iter()
            .map(|&zi| {
                let src = lo + hi - zi;
                let hint = src.clamp(lo + 0.25 * h, hi - 0.25 * h);
                self.shape_in_piece(src, hint)
            })
            .collect();
        let medium = LambdaSystem {
            omega_a: 1.0,
            delta_ab: 0.0,
            gamma_a: 1.0,
            gamma_b: 1.0,
            rho_density: self.rho_density,
            c_speed: self.c_speed,
        };
        make_pulse(
            EnvelopeShape::Sampled { z, amplitudes },
            self.carrier,
            &medium,
        )
    }
}

fn interpolate(grid: &[f64], amp: &[Complex64], z: f64) -> Complex64 {
    let i = match grid.binary_search_by(|g| g.partial_cmp(&z).unwrap()) {
        Ok(i) => return amp[i],
        Err(i) => i,
    };
    let (z0, z1) = (grid[i - 1], grid[i]);
    let w = (z - z0) / (z1 - z0);
    amp[i - 1] * (1.0 - w) + amp[i] * w
}

/// Free-function form of [`PulseSpec::envelope_at`].
pub fn envelope_at(pulse: &PulseSpec, z: f64) -> Complex64 {
    pulse.envelope_at(z)
}

/// Statistical mixture ρ_S(0) = p_a0 |a⟩⟨a| + p_b0 |b⟩⟨b|.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialMixture {
    pub p_a0: f64,
    pub p_b0: f64,
}

impl InitialMixture {
    pub fn new(p_a0: f64, p_b0: f64) -> Result<Self> {
        for (name, p) in [("p_a0", p_a0), ("p_b0", p_b0)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Parameter(format!(
                    "{name} must lie in [0, 1], got {p}"
                )));
            }
        }
        if (p_a0 + p_b0 - 1.0).abs() > 1e-12 {
            return Err(Error::Parameter(format!(
                "p_a0 + p_b0 must equal 1, got {}",
                p_a0 + p_b0
            )));
        }
        Ok(InitialMixture { p_a0, p_b0 })
    }

    pub fn from_p_a0(p_a0: f64) -> Result<Self> {
        Self::new(p_a0, 1.0 - p_a0)
    }

    /// Emitter prepared in |a⟩.
    pub fn pure_a() -> Self {
        InitialMixture {
            p_a0: 1.0,
            p_b0: 0.0,
        }
    }
}

/// Time and space discretization of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimGrid {
    pub t_max: f64,
    pub dt: f64,
    pub z_min: f64,
    pub z_max: f64,
    pub dz: f64,
    /// Keep every `record_stride`-th step in the stored trajectory.
    pub record_stride: usize,
}

impl SimGrid {
    pub fn new(t_max: f64, dt: f64, z_min: f64, z_max: f64, dz: f64) -> Result<Self> {
        let g = SimGrid {
            t_max,
            dt,
            z_min,
            z_max,
            dz,
            record_stride: 1,
        };
        g.check_shape()?;
        Ok(g)
    }

    /// Grid whose spatial window is [-c·t_max, c·t_max] with dz = c·dt.
    pub fn symmetric(t_max: f64, dt: f64, c_speed: f64) -> Result<Self> {
        Self::new(t_max, dt, -c_speed * t_max, c_speed * t_max, c_speed * dt)
    }

    /// Converged grid for a given run: both the emitter decay and the pulse
    /// duration are exhausted twenty times over, at the largest step the
    /// accuracy bound allows.
    pub fn auto(system: &LambdaSystem, pulse: &PulseSpec) -> Self {
        let scale = (1.0 / system.gamma_total()).max(pulse.duration_scale());
        let t_max = pulse.arrival_delay() + 20.0 * scale;
        let dt_limit = Self::accuracy_limit(system, pulse);
        let n = (t_max / dt_limit).ceil().max(1.0);
        let dt = t_max / n;
        let c = system.c_speed;
        let stride = ((n / 200_000.0).ceil() as usize).max(1);
        SimGrid {
            t_max,
            dt,
            z_min: -c * t_max,
            z_max: c * t_max,
            dz: c * dt,
            record_stride: stride,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride.max(1);
        self
    }

    fn check_shape(&self) -> Result<()> {
        let vals = [self.t_max, self.dt, self.z_min, self.z_max, self.dz];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("grid parameters must be finite".into()));
        }
        if self.dt <= 0.0 || self.t_max <= 0.0 || self.dz <= 0.0 {
            return Err(Error::Config("t_max, dt and dz must be > 0".into()));
        }
        if self.dt > self.t_max {
            return Err(Error::Config("dt must not exceed t_max".into()));
        }
        if self.z_max <= self.z_min {
            return Err(Error::Config("z_max must exceed z_min".into()));
        }
        if self.record_stride == 0 {
            return Err(Error::Config("record_stride must be >= 1".into()));
        }
        Ok(())
    }

    /// Structural invariants that depend on the medium.
    pub fn validate(&self, system: &LambdaSystem) -> Result<()> {
        self.check_shape()?;
        let c = system.c_speed;
        if self.z_min > -c * self.t_max * (1.0 - 1e-12) {
            return Err(Error::Config(format!(
                "z_min = {} must be <= -c*t_max = {}",
                self.z_min,
                -c * self.t_max
            )));
        }
        if self.dz > c * self.dt * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "dz = {} must be <= c*dt = {}",
                self.dz,
                c * self.dt
            )));
        }
        Ok(())
    }

    /// Largest step allowed by the accuracy bound: 0.01/max(Γ_a+Γ_b, Δ_eff).
    pub fn accuracy_limit(system: &LambdaSystem, pulse: &PulseSpec) -> f64 {
        0.01 / system.gamma_total().max(pulse.effective_bandwidth())
    }

    pub fn check_accuracy(&self, system: &LambdaSystem, pulse: &PulseSpec) -> Result<()> {
        let limit = Self::accuracy_limit(system, pulse);
        if self.dt > limit * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "dt = {} exceeds the accuracy bound 0.01/max(gamma_a+gamma_b, bandwidth) = {}",
                self.dt, limit
            )));
        }
        Ok(())
    }

    /// Number of integration steps and the actual final time.
    pub fn steps(&self) -> usize {
        (self.t_max / self.dt * (1.0 - 1e-12)).ceil().max(1.0) as usize
    }
}
