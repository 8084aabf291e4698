//! Run configuration.
//!
//! Plain `key = value` lines grouped in sections. Every key is optional; the
//! defaults describe a resonant exponential pulse of linewidth 0.1 on an
//! emitter with Γ_a = Γ_b = 1 and ω_a = 20.
//!
//! ```text
//! [system]   omega_a, delta_ab, gamma_a, gamma_b, rho, c
//! [pulse]    family (exponential | gaussian | rectangular),
//!            delta (exponential), sigma (gaussian), tau (rectangular),
//!            delta_L (carrier detuning ω_L − ω_a),
//!            protocol (forward | backward), mirror_points
//! [grid]     t_max, dt, z_min, z_max, dz, stride
//! [mixture]  p_a0
//! [bath]     n_modes, bandwidth, t_final, dt, tol_populations,
//!            tol_entropy, tol_energetics, tol_backward_leak
//! [sweep]    parameter, lo, hi, points, objective
//! [optimize] objective, delta_L = lo, hi; ratio = lo, hi;
//!            linewidth = lo, hi; tolerance, max_evaluations, start
//! ```
//!
//! Keys are case-insensitive. Unknown sections or keys are rejected. Grid
//! entries left out are taken from the converged automatic grid; a `dt`
//! coarser than the accuracy bound is accepted here and caught by the
//! energy ledger.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use ini::Ini;
use lambda_adapt::optimize::{Bound, Objective, Parameter, SearchOptions, SweepSpec};
use lambda_adapt::oracle::{DiscreteBath, Tolerances};
use lambda_adapt::{
    make_pulse, EnvelopeShape, Error, InitialMixture, LambdaSystem, PulseSpec, Result, SimGrid,
};
use serde::Serialize;

const SECTIONS: [&str; 7] = [
    "system", "pulse", "grid", "mixture", "bath", "sweep", "optimize",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemConfig {
    pub omega_a: f64,
    pub delta_ab: f64,
    pub gamma_a: f64,
    pub gamma_b: f64,
    pub rho: f64,
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Forward,
    /// Spatially mirrored envelope, sent onto the emitter in |b⟩.
    Backward,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PulseConfig {
    pub shape: EnvelopeShape,
    pub delta_l: f64,
    pub protocol: Protocol,
    pub mirror_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct GridConfig {
    pub t_max: Option<f64>,
    pub dt: Option<f64>,
    pub z_min: Option<f64>,
    pub z_max: Option<f64>,
    pub dz: Option<f64>,
    pub stride: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BathConfig {
    pub n_modes: Option<usize>,
    pub bandwidth: Option<f64>,
    pub t_final: Option<f64>,
    pub dt: Option<f64>,
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizeConfig {
    pub objective: Objective,
    pub bounds: Vec<Bound>,
    pub options: SearchOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub system: SystemConfig,
    pub pulse: PulseConfig,
    pub grid: GridConfig,
    pub p_a0: f64,
    pub bath: BathConfig,
    pub sweep: Option<SweepSpec>,
    pub optimize: OptimizeConfig,
}

/// Section reader that remembers which keys were consumed.
struct Section {
    name: String,
    entries: BTreeMap<String, String>,
}

impl Section {
    fn get<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.entries.remove(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|_| Error::Config(format!("[{}] {key}: cannot parse '{raw}'", self.name))),
        }
    }

    fn or<T: FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    fn range(&mut self, key: &str) -> Result<Option<(f64, f64)>> {
        let Some(raw) = self.entries.remove(key) else {
            return Ok(None);
        };
        let parts: Vec<&str> = raw.split(',').map(str::trim).collect();
        let bad = || {
            Error::Config(format!(
                "[{}] {key}: expected 'lo, hi', got '{raw}'",
                self.name
            ))
        };
        if parts.len() != 2 {
            return Err(bad());
        }
        let lo = parts[0].parse().map_err(|_| bad())?;
        let hi = parts[1].parse().map_err(|_| bad())?;
        Ok(Some((lo, hi)))
    }

    fn finish(self) -> Result<()> {
        match self.entries.keys().next() {
            None => Ok(()),
            Some(k) => Err(Error::Config(format!("[{}] unknown key '{k}'", self.name))),
        }
    }
}

fn sections(text: &str) -> Result<BTreeMap<String, Section>> {
    let ini = Ini::load_from_str(text)
        .map_err(|e| Error::Config(format!("malformed configuration: {e}")))?;
    let mut out: BTreeMap<String, Section> = SECTIONS
        .iter()
        .map(|s| {
            (
                s.to_string(),
                Section {
                    name: s.to_string(),
                    entries: BTreeMap::new(),
                },
            )
        })
        .collect();
    for (name, props) in ini.iter() {
        let Some(name) = name else {
            if let Some((k, _)) = props.iter().next() {
                return Err(Error::Config(format!(
                    "key '{k}' appears outside any section"
                )));
            }
            continue;
        };
        let lname = name.to_lowercase();
        let section = out
            .get_mut(&lname)
            .ok_or_else(|| Error::Config(format!("unknown section [{name}]")))?;
        for (k, v) in props.iter() {
            let k = k.to_lowercase();
            if section
                .entries
                .insert(k.clone(), v.trim().to_string())
                .is_some()
            {
                return Err(Error::Config(format!("[{lname}] duplicate key '{k}'")));
            }
        }
    }
    Ok(out)
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn default_config() -> Self {
        Self::parse("").expect("defaults are valid")
    }

    /// Parses and validates; every error is a configuration error.
    pub fn parse(text: &str) -> Result<Self> {
        let mut s = sections(text)?;
        let mut take = |name: &str| s.remove(name).unwrap();

        let mut sec = take("system");
        let system = SystemConfig {
            omega_a: sec.or("omega_a", 20.0)?,
            delta_ab: sec.or("delta_ab", 0.0)?,
            gamma_a: sec.or("gamma_a", 1.0)?,
            gamma_b: sec.or("gamma_b", 1.0)?,
            rho: sec.or("rho", 1.0)?,
            c: sec.or("c", 1.0)?,
        };
        sec.finish()?;

        let mut sec = take("pulse");
        let family: String = sec.or("family", "exponential".to_string())?;
        let shape = match family.to_lowercase().as_str() {
            "exponential" => EnvelopeShape::Exponential {
                linewidth: sec.or("delta", 0.1)?,
            },
            "gaussian" => EnvelopeShape::Gaussian {
                sigma: sec.or("sigma", 10.0)?,
            },
            "rectangular" => EnvelopeShape::Rectangular {
                duration: sec.or("tau", 10.0)?,
            },
            other => {
                return Err(Error::Config(format!(
                    "[pulse] family must be exponential, gaussian or rectangular, got '{other}'"
                )))
            }
        };
        let protocol = match sec
            .or("protocol", "forward".to_string())?
            .to_lowercase()
            .as_str()
        {
            "forward" => Protocol::Forward,
            "backward" => Protocol::Backward,
            other => {
                return Err(Error::Config(format!(
                    "[pulse] protocol must be forward or backward, got '{other}'"
                )))
            }
        };
        let pulse = PulseConfig {
            shape,
            delta_l: sec.or("delta_l", 0.0)?,
            protocol,
            mirror_points: sec.or("mirror_points", 4001)?,
        };
        sec.finish()?;

        let mut sec = take("grid");
        let grid = GridConfig {
            t_max: sec.get("t_max")?,
            dt: sec.get("dt")?,
            z_min: sec.get("z_min")?,
            z_max: sec.get("z_max")?,
            dz: sec.get("dz")?,
            stride: sec.get("stride")?,
        };
        sec.finish()?;

        let mut sec = take("mixture");
        let p_a0 = sec.or("p_a0", 1.0)?;
        sec.finish()?;

        let mut sec = take("bath");
        let d = Tolerances::default();
        let bath = BathConfig {
            n_modes: sec.get("n_modes")?,
            bandwidth: sec.get("bandwidth")?,
            t_final: sec.get("t_final")?,
            dt: sec.get("dt")?,
            tolerances: Tolerances {
                populations: sec.or("tol_populations", d.populations)?,
                entropy: sec.or("tol_entropy", d.entropy)?,
                energetics: sec.or("tol_energetics", d.energetics)?,
                backward_leak: sec.or("tol_backward_leak", d.backward_leak)?,
            },
        };
        sec.finish()?;

        let mut sec = take("sweep");
        let sweep = match sec.get::<String>("parameter")? {
            None => None,
            Some(p) => {
                let parameter = Parameter::parse(&p.to_lowercase())?;
                let objective = Objective::parse(&sec.or("objective", "p_ab_infty".to_string())?)?;
                Some(if parameter == Parameter::Family {
                    SweepSpec::families(objective)
                } else {
                    let lo = sec
                        .get("lo")?
                        .ok_or_else(|| Error::Config("[sweep] lo is required".into()))?;
                    let hi = sec
                        .get("hi")?
                        .ok_or_else(|| Error::Config("[sweep] hi is required".into()))?;
                    SweepSpec::new(parameter, lo, hi, sec.or("points", 41)?, objective)?
                })
            }
        };
        sec.finish()?;

        let mut sec = take("optimize");
        let objective = Objective::parse(&sec.or("objective", "p_ab_infty".to_string())?)?;
        let mut bounds = Vec::new();
        for (key, parameter) in [
            ("delta_l", Parameter::Detuning),
            ("ratio", Parameter::RateRatio),
            ("linewidth", Parameter::Linewidth),
        ] {
            if let Some((lo, hi)) = sec.range(key)? {
                bounds.push(Bound::new(parameter, lo, hi)?);
            }
        }
        if bounds.is_empty() {
            let g = system.gamma_a + system.gamma_b;
            bounds = vec![
                Bound::new(Parameter::Detuning, -g, 2.0 * g)?,
                Bound::new(Parameter::RateRatio, 0.2, 5.0)?,
            ];
        }
        let o = SearchOptions::default();
        let optimize = OptimizeConfig {
            objective,
            bounds,
            options: SearchOptions {
                tolerance: sec.or("tolerance", o.tolerance)?,
                max_evaluations: sec.or("max_evaluations", o.max_evaluations)?,
                start: sec.or("start", o.start)?,
            },
        };
        sec.finish()?;

        let cfg = RunConfig {
            system,
            pulse,
            grid,
            p_a0,
            bath,
            sweep,
            optimize,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let system = self.system()?;
        let pulse = self.pulse(&system)?;
        self.grid(&system, &pulse)?;
        self.mixture()?;
        self.bath(&system)?;
        let o = &self.optimize.options;
        if !(o.tolerance > 0.0) || o.max_evaluations == 0 || !(0.0..=1.0).contains(&o.start) {
            return Err(Error::Config(
                "[optimize] needs tolerance > 0, max_evaluations >= 1 and start in [0, 1]".into(),
            ));
        }
        let t = &self.bath.tolerances;
        if [t.populations, t.entropy, t.energetics, t.backward_leak]
            .iter()
            .any(|v| !(*v >= 0.0))
        {
            return Err(Error::Config("[bath] tolerances must be >= 0".into()));
        }
        Ok(())
    }

    pub fn system(&self) -> Result<LambdaSystem> {
        let s = &self.system;
        LambdaSystem::with_medium(s.omega_a, s.delta_ab, s.gamma_a, s.gamma_b, s.rho, s.c)
    }

    /// The drive as it reaches the emitter; mirrored for the backward protocol.
    pub fn pulse(&self, system: &LambdaSystem) -> Result<PulseSpec> {
        let p = make_pulse(
            self.pulse.shape.clone(),
            system.omega_a + self.pulse.delta_l,
            system,
        )?;
        match self.pulse.protocol {
            Protocol::Forward => Ok(p),
            Protocol::Backward => p.mirrored(self.pulse.mirror_points),
        }
    }

    pub fn grid(&self, system: &LambdaSystem, pulse: &PulseSpec) -> Result<SimGrid> {
        let auto = SimGrid::auto(system, pulse);
        let g = &self.grid;
        let t_max = g.t_max.unwrap_or(auto.t_max);
        let dt = g.dt.unwrap_or(if g.t_max.is_some() {
            t_max / (t_max / SimGrid::accuracy_limit(system, pulse)).ceil()
        } else {
            auto.dt
        });
        let c = system.c_speed;
        let grid = SimGrid::new(
            t_max,
            dt,
            g.z_min.unwrap_or(-c * t_max),
            g.z_max.unwrap_or(c * t_max),
            g.dz.unwrap_or(c * dt),
        )?
        .with_stride(g.stride.unwrap_or(if g.t_max.is_none() && g.dt.is_none() {
            auto.record_stride
        } else {
            1
        }));
        grid.validate(system)?;
        Ok(grid)
    }

    pub fn mixture(&self) -> Result<InitialMixture> {
        InitialMixture::from_p_a0(self.p_a0)
    }

    pub fn bath(&self, system: &LambdaSystem) -> Result<DiscreteBath> {
        let d = DiscreteBath::default_for(system);
        DiscreteBath::new(
            self.bath.n_modes.unwrap_or(d.n_modes),
            self.bath.bandwidth.unwrap_or(d.bandwidth),
        )
    }

    /// Oracle horizon and sampling interval: 15/(Γ_a+Γ_b) and 0.05/(Γ_a+Γ_b)
    /// unless configured.
    pub fn oracle_window(&self, system: &LambdaSystem) -> (f64, f64) {
        let g = system.gamma_total();
        (
            self.bath.t_final.unwrap_or(15.0 / g),
            self.bath.dt.unwrap_or(0.05 / g),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = RunConfig::parse("").unwrap();
        assert_eq!(c.system.omega_a, 20.0);
        assert_eq!(c.pulse.shape, EnvelopeShape::Exponential { linewidth: 0.1 });
        assert_eq!(c.p_a0, 1.0);
        assert!(c.sweep.is_none());
        assert_eq!(c.optimize.bounds.len(), 2);
    }

    #[test]
    fn keys_are_case_insensitive() {
        let c = RunConfig::parse("[pulse]\ndelta_L = 0.5\n[System]\nGamma_b = 3\n").unwrap();
        assert_eq!(c.pulse.delta_l, 0.5);
        assert_eq!(c.system.gamma_b, 3.0);
    }

    #[test]
    fn unknown_keys_and_sections_are_rejected() {
        for text in [
            "[system]\nomega = 3\n",
            "[plot]\nx = 1\n",
            "stray = 1\n",
            "[pulse]\nfamily = gaussian\ndelta = 0.1\n",
            "[system]\ngamma_a = 1\ngamma_a = 2\n",
        ] {
            let e = RunConfig::parse(text).unwrap_err();
            assert!(e.is_config(), "{text}: {e}");
        }
    }

    #[test]
    fn invariants_are_checked_at_load() {
        let e = RunConfig::parse("[mixture]\np_a0 = 1.5\n").unwrap_err();
        assert!(e.to_string().contains("p_a0"), "{e}");
        assert!(RunConfig::parse("[system]\ngamma_b = -1\n").is_err());
        assert!(RunConfig::parse("[grid]\nt_max = 10\nz_min = -1\n").is_err());
        assert!(RunConfig::parse("[bath]\nn_modes = 2\n").is_err());
        assert!(RunConfig::parse("[system]\ngamma_a = abc\n").is_err());
    }

    #[test]
    fn coarse_step_is_accepted() {
        let c = RunConfig::parse("[grid]\nt_max = 40\ndt = 0.5\n").unwrap();
        let s = c.system().unwrap();
        let p = c.pulse(&s).unwrap();
        let g = c.grid(&s, &p).unwrap();
        assert_eq!(g.dt, 0.5);
        assert!(g.check_accuracy(&s, &p).is_err());
    }

    #[test]
    fn explicit_horizon_keeps_the_step_within_bounds() {
        let c = RunConfig::parse("[grid]\nt_max = 33\n").unwrap();
        let s = c.system().unwrap();
        let p = c.pulse(&s).unwrap();
        let g = c.grid(&s, &p).unwrap();
        assert!(g.check_accuracy(&s, &p).is_ok());
        assert!((g.t_max / g.dt - (g.t_max / g.dt).round()).abs() < 1e-9);
    }

    #[test]
    fn sweep_and_optimize_sections() {
        let c = RunConfig::parse(
            "[sweep]\nparameter = delta\nlo = 0.01\nhi = 1\npoints = 5\nobjective = w_over_hw\n\
             [optimize]\ndelta_L = -1, 2\nratio = 0.5, 4\n",
        )
        .unwrap();
        let sw = c.sweep.unwrap();
        assert_eq!(sw.parameter, Parameter::Linewidth);
        assert_eq!(sw.points, 5);
        assert_eq!(c.optimize.bounds[0].parameter, Parameter::Detuning);
        assert_eq!(c.optimize.bounds[1].hi, 4.0);
        assert!(RunConfig::parse("[optimize]\nratio = 1\n").is_err());
        assert!(RunConfig::parse("[sweep]\nparameter = delta\n").is_err());
    }

    #[test]
    fn backward_protocol_mirrors_the_pulse() {
        let c = RunConfig::parse("[pulse]\nprotocol = backward\nmirror_points = 101\n").unwrap();
        let s = c.system().unwrap();
        assert_eq!(c.pulse(&s).unwrap().family_name(), "sampled");
    }
}
