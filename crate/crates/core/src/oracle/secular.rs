//! Eigen-decomposition of the real symmetric arrowhead matrix
//!
//! ```text
//! [ 0   r   r  …  r   ]
//! [ r   x₀            ]
//! [ r       x₁        ]
//! [ …           ⋱     ]
//! ```
//!
//! with equally spaced poles x_k = (k − (n−1)/2)·δω. Each eigenvalue solves
//! λ − r² Σ_k 1/(λ − x_k) = 0 and is stored as an offset μ from its nearest
//! pole, so that λ − x_k = μ + (o − k)·δω is available to full relative
//! precision; eigenvector components follow from v_k ∝ r/(λ − x_k).

use rayon::prelude::*;

#[derive(Debug, Clone)]
pub struct ArrowheadSpectrum {
    spacing: f64,
    n: usize,
    r: f64,
    origin: Vec<usize>,
    mu: Vec<f64>,
    /// Normalized component of each eigenvector on the head (|e,0⟩).
    head: Vec<f64>,
}

impl ArrowheadSpectrum {
    pub fn solve(spacing: f64, n: usize, r: f64) -> Self {
        if r == 0.0 {
            let mut origin: Vec<usize> = (0..n).collect();
            let mut mu = vec![0.0; n];
            let mut head = vec![0.0; n];
            // the head decouples with eigenvalue 0; attach it to the central pole
            let c = (n - 1) / 2;
            origin.push(c);
            mu.push(-pole(c, n, spacing));
            head.push(1.0);
            return ArrowheadSpectrum {
                spacing,
                n,
                r,
                origin,
                mu,
                head,
            };
        }
        let r2 = r * r;
        let edge = 2.0 * (pole(0, n, spacing).abs() + (n as f64).sqrt() * r + spacing);
        let roots: Vec<(usize, f64)> = (0..=n)
            .into_par_iter()
            .map(|j| {
                if j == 0 {
                    (0, bisect(0, -edge, 0.0, n, spacing, r2))
                } else if j == n {
                    (n - 1, bisect(n - 1, 0.0, edge, n, spacing, r2))
                } else {
                    let k = j - 1;
                    let half = 0.5 * spacing;
                    if secular(k, half, n, spacing, r2) >= 0.0 {
                        (k, bisect(k, 0.0, half, n, spacing, r2))
                    } else {
                        (k + 1, bisect(k + 1, -half, 0.0, n, spacing, r2))
                    }
                }
            })
            .collect();
        let head: Vec<f64> = roots
            .par_iter()
            .map(|&(o, mu)| {
                let mut w = 1.0;
                for k in 0..n {
                    let g = mu + (o as f64 - k as f64) * spacing;
                    w += r2 / (g * g);
                }
                w.sqrt().recip()
            })
            .collect();
        ArrowheadSpectrum {
            spacing,
            n,
            r,
            origin: roots.iter().map(|x| x.0).collect(),
            mu: roots.iter().map(|x| x.1).collect(),
            head,
        }
    }

    /// Number of eigenpairs, n + 1.
    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    pub fn n_poles(&self) -> usize {
        self.n
    }

    pub fn coupling(&self) -> f64 {
        self.r
    }

    pub fn eigenvalue(&self, j: usize) -> f64 {
        pole(self.origin[j], self.n, self.spacing) + self.mu[j]
    }

    /// λ_j − x_k to full relative precision.
    pub fn gap(&self, j: usize, k: usize) -> f64 {
        self.mu[j] + (self.origin[j] as f64 - k as f64) * self.spacing
    }

    pub fn head(&self, j: usize) -> f64 {
        self.head[j]
    }

    /// Component of eigenvector j on pole k.
    pub fn component(&self, j: usize, k: usize) -> f64 {
        if self.r == 0.0 {
            return if j == k { 1.0 } else { 0.0 };
        }
        self.head[j] * self.r / self.gap(j, k)
    }

    /// Largest deviation of V·Vᵀ from the identity over the head row and
    /// the head–pole cross terms.
    pub fn orthogonality_defect(&self) -> f64 {
        let head_row: f64 = self.head.iter().map(|h| h * h).sum();
        let cross = (0..self.n)
            .into_par_iter()
            .map(|k| {
                let mut s = 0.0;
                let mut c = 0.0;
                for j in 0..self.len() {
                    let v = self.component(j, k);
                    s += self.head[j] * v;
                    c += v * v;
                }
                s.abs().max((c - 1.0).abs())
            })
            .reduce(|| 0.0, f64::max);
        (head_row - 1.0).abs().max(cross)
    }
}

fn pole(k: usize, n: usize, spacing: f64) -> f64 {
    (k as f64 - 0.5 * (n - 1) as f64) * spacing
}

/// Secular function written around pole `o`, at λ = x_o + μ.
fn secular(o: usize, mu: f64, n: usize, spacing: f64, r2: f64) -> f64 {
    let mut s = 0.0;
    for k in 0..n {
        s += 1.0 / (mu + (o as f64 - k as f64) * spacing);
    }
    pole(o, n, spacing) + mu - r2 * s
}

/// Root of the increasing secular function on (lo, hi).
fn bisect(o: usize, mut lo: f64, mut hi: f64, n: usize, spacing: f64, r2: f64) -> f64 {
    for _ in 0..2000 {
        let m = 0.5 * (lo + hi);
        if m <= lo || m >= hi {
            break;
        }
        if secular(o, m, n, spacing, r2) < 0.0 {
            lo = m;
        } else {
            hi = m;
        }
    }
    0.5 * (lo + hi)
}
