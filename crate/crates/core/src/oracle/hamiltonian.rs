use nalgebra::DMatrix;
use num_complex::Complex64;

use super::secular::ArrowheadSpectrum;
use super::DiscreteBath;
use crate::error::{Error, Result};
use crate::model::LambdaSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Atom {
    A,
    B,
    E,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    A,
    B,
}

impl Branch {
    fn ground(self) -> Atom {
        match self {
            Branch::A => Atom::A,
            Branch::B => Atom::B,
        }
    }
}

/// Emitter level plus at most one photon in mode k of a branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasisState {
    pub atom: Atom,
    pub photon: Option<(Branch, usize)>,
}

/// One-excitation Hamiltonian of the discretized model, H − ħω_a.
///
/// Matrix elements follow H_S + H_E + H_I with
/// H_I = −i Σ_k (g_a a_k σ_a† + g_b b_k σ_b† − h.c.).
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    pub bath: DiscreteBath,
    pub omega_a: f64,
    pub delta_ab: f64,
    /// Discrete couplings sqrt(Γ_k/(2π ϱ_eff)).
    pub g_a: f64,
    pub g_b: f64,
}

/// Builds the discretized Hamiltonian; fails when a bath invariant is broken.
pub fn build_hamiltonian(system: &LambdaSystem, bath: &DiscreteBath) -> Result<Hamiltonian> {
    let v = bath.violations(system, None);
    if !v.is_empty() {
        return Err(Error::Config(format!(
            "bath invariant violated: {}",
            v.join("; ")
        )));
    }
    let rho = bath.density();
    Ok(Hamiltonian::from_couplings(
        *bath,
        system.omega_a,
        system.delta_ab,
        (system.gamma_a / (2.0 * std::f64::consts::PI * rho)).sqrt(),
        (system.gamma_b / (2.0 * std::f64::consts::PI * rho)).sqrt(),
    ))
}

impl Hamiltonian {
    /// Direct construction with arbitrary (possibly zero) couplings.
    pub fn from_couplings(
        bath: DiscreteBath,
        omega_a: f64,
        delta_ab: f64,
        g_a: f64,
        g_b: f64,
    ) -> Self {
        Hamiltonian {
            bath,
            omega_a,
            delta_ab,
            g_a,
            g_b,
        }
    }

    pub fn n_modes(&self) -> usize {
        self.bath.n_modes
    }

    /// Dimension of the sector reachable from |a, 1_a⟩: 2n + 1.
    pub fn dim(&self) -> usize {
        2 * self.bath.n_modes + 1
    }

    /// Ordering: |e,0⟩, then |a,1^a_k⟩, then |b,1^b_k⟩.
    pub fn basis(&self, i: usize) -> BasisState {
        let n = self.bath.n_modes;
        match i {
            0 => BasisState {
                atom: Atom::E,
                photon: None,
            },
            i if i <= n => BasisState {
                atom: Atom::A,
                photon: Some((Branch::A, i - 1)),
            },
            i => BasisState {
                atom: Atom::B,
                photon: Some((Branch::B, i - 1 - n)),
            },
        }
    }

    /// States |b, 1^a_k⟩ of the backward protocol.
    pub fn reverse_basis(&self, k: usize) -> BasisState {
        BasisState {
            atom: Atom::B,
            photon: Some((Branch::A, k)),
        }
    }

    fn coupling(&self, branch: Branch) -> f64 {
        match branch {
            Branch::A => self.g_a,
            Branch::B => self.g_b,
        }
    }

    /// Energy of a basis state relative to ħω_a.
    fn energy(&self, s: &BasisState) -> f64 {
        let atom = match s.atom {
            Atom::A => 0.0,
            Atom::B => self.delta_ab,
            Atom::E => self.omega_a,
        };
        let photon = match s.photon {
            None => 0.0,
            Some((Branch::A, k)) => self.omega_a + self.bath.offset(k),
            Some((Branch::B, k)) => (self.omega_a - self.delta_ab) + self.bath.offset(k),
        };
        (atom - self.omega_a) + photon
    }

    /// H_I|ket⟩ as a list of (state, amplitude).
    fn apply_interaction(&self, ket: &BasisState) -> Vec<(BasisState, Complex64)> {
        let mut out = Vec::new();
        for branch in [Branch::A, Branch::B] {
            let g = self.coupling(branch);
            // −i g x_k σ†: absorb the photon, raise ground → e
            if let Some((b, _)) = ket.photon {
                if b == branch && ket.atom == branch.ground() {
                    out.push((
                        BasisState {
                            atom: Atom::E,
                            photon: None,
                        },
                        Complex64::new(0.0, -g),
                    ));
                }
            }
            // +i g x_k† σ: emit into every mode of the branch
            if ket.atom == Atom::E && ket.photon.is_none() {
                for k in 0..self.bath.n_modes {
                    out.push((
                        BasisState {
                            atom: branch.ground(),
                            photon: Some((branch, k)),
                        },
                        Complex64::new(0.0, g),
                    ));
                }
            }
        }
        out
    }

    /// ⟨bra|H − ħω_a|ket⟩.
    pub fn element(&self, bra: &BasisState, ket: &BasisState) -> Complex64 {
        let mut v = Complex64::new(0.0, 0.0);
        if bra == ket {
            v += self.energy(ket);
        }
        if ket.atom == Atom::E && ket.photon.is_none() {
            // avoid materializing every emission channel
            if let Some((branch, _)) = bra.photon {
                if bra.atom == branch.ground() {
                    v += Complex64::new(0.0, self.coupling(branch));
                }
            }
            return v;
        }
        for (s, amp) in self.apply_interaction(ket) {
            if &s == bra {
                v += amp;
            }
        }
        v
    }

    /// Dense matrix in the ordering of [`Hamiltonian::basis`]; meant for
    /// small baths.
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let d = self.dim();
        let states: Vec<BasisState> = (0..d).map(|i| self.basis(i)).collect();
        DMatrix::from_fn(d, d, |i, j| self.element(&states[i], &states[j]))
    }

    /// max |H_ij − conj(H_ji)| over the structurally non-zero entries.
    pub fn hermiticity_defect(&self) -> f64 {
        let e = self.basis(0);
        let mut worst: f64 = 0.0;
        for i in 0..self.dim() {
            let s = self.basis(i);
            worst = worst.max(self.element(&s, &s).im.abs());
            let d = self.element(&s, &e) - self.element(&e, &s).conj();
            worst = worst.max(d.norm());
        }
        worst
    }

    /// Largest coupling between the |b⟩⊗a-photon sector and any state of
    /// the forward sector.
    pub fn reverse_sector_coupling(&self) -> f64 {
        let n = self.bath.n_modes;
        let mut worst: f64 = 0.0;
        for k in 0..n {
            let r = self.reverse_basis(k);
            // H_I|b,1^a_k⟩ generically, plus the only candidate partner |e,0⟩
            for (s, amp) in self.apply_interaction(&r) {
                if s != r {
                    worst = worst.max(amp.norm());
                }
            }
            worst = worst.max(self.element(&self.basis(0), &r).norm());
            worst = worst.max(self.element(&r, &self.basis(0)).norm());
        }
        worst
    }

    /// Couplings ⟨a,1_k|H|e,0⟩ and ⟨b,1_k|H|e,0⟩ (mode independent).
    pub fn branch_couplings(&self) -> (Complex64, Complex64) {
        let e = self.basis(0);
        (
            self.element(&self.basis(1), &e),
            self.element(&self.basis(1 + self.bath.n_modes), &e),
        )
    }

    /// Mode offsets of the a- and b-branch states (identical by construction).
    pub fn offsets(&self) -> Vec<f64> {
        (0..self.bath.n_modes)
            .map(|k| self.bath.offset(k))
            .collect()
    }

    /// Diagonal of the |b⟩⊗a-photon sector.
    pub fn reverse_energies(&self) -> Vec<f64> {
        (0..self.bath.n_modes)
            .map(|k| {
                let r = self.reverse_basis(k);
                self.element(&r, &r).re
            })
            .collect()
    }

    /// Exact eigen-decomposition of the coupled (bright) subspace.
    pub fn spectrum(&self) -> ArrowheadSpectrum {
        let (ca, cb) = self.branch_couplings();
        let r = (ca.norm_sqr() + cb.norm_sqr()).sqrt();
        ArrowheadSpectrum::solve(self.bath.spacing(), self.bath.n_modes, r)
    }
}
