//! Heisenberg-picture propagation of end-site operators in the Jordan–Wigner
//! string basis.
//!
//! Under the XX Hamiltonian X̂₁(t) stays inside the N-dimensional span of
//!
//! ```text
//! k odd:  Z_1 ... Z_{k-1} X_k        k even:  Z_1 ... Z_{k-1} Y_k
//! ```
//!
//! with real coefficients α_k(t) obeying dα/dt = G̃α, where G̃ is the
//! generator of [`crate::chain::Generator`] up to the fixed diagonal sign
//! gauge (+, +, −, −, +, +, ...). The gauge is absorbed here, so every
//! [`CoefficientVector`] holds coefficients of the literal strings above.
//!
//! Propagation diagonalises the symmetric form S of the generator once;
//! exp(Gt) = Φ† exp(iSt) Φ with Φ = diag(i^{k−1}), so each time point costs
//! O(N²) and carries no step error.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use crate::chain::{build_generator, CouplingProfile, Generator};
use crate::error::{invalid, Result};

const IMAG_RESIDUE_LIMIT: f64 = 1e-12;

/// Which end-site X operator a coefficient vector describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Origin {
    /// X̂₁(t) in the strings Z_1..Z_{k−1}(X|Y)_k.
    FirstSite,
    /// X̂_N(t) in the mirrored strings Z_N..Z_{N−k+2}(X|Y)_{N−k+1}.
    LastSite,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientVector {
    pub time: f64,
    pub values: Vec<f64>,
    pub origin: Origin,
}

impl CoefficientVector {
    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// Coefficient of the string ending on the far site (α_N or β_N).
    pub fn far_end(&self) -> f64 {
        *self.values.last().expect("coefficient vectors are never empty")
    }
}

/// Cached eigendecomposition of a generator. Immutable and `Sync`, so one
/// instance can serve concurrent readers.
#[derive(Debug, Clone)]
pub struct Propagator {
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
}

impl Propagator {
    pub fn new(gen: &Generator) -> Self {
        let eig = SymmetricEigen::new(gen.symmetric_form());
        Self { eigenvalues: eig.eigenvalues.iter().copied().collect(), eigenvectors: eig.eigenvectors }
    }

    pub fn dimension(&self) -> usize {
        self.eigenvalues.len()
    }

    /// exp(G̃t)·v for a literal-basis vector `v`.
    pub fn apply(&self, v: &[f64], t: f64) -> Vec<f64> {
        let n = self.dimension();
        assert_eq!(v.len(), n, "vector length must match the generator dimension");
        let vecs = &self.eigenvectors;
        // Gauge and Φ combine to the factor 1 on odd strings and i on even ones.
        let lift = |k: usize| if k % 2 == 0 { Complex64::new(1.0, 0.0) } else { Complex64::i() };

        let mut w = vec![Complex64::new(0.0, 0.0); n];
        for (m, wm) in w.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, &vk) in v.iter().enumerate() {
                acc += lift(k) * (vk * vecs[(k, m)]);
            }
            *wm = acc * Complex64::from_polar(1.0, self.eigenvalues[m] * t);
        }

        let mut residue: f64 = 0.0;
        let out = (0..n)
            .map(|k| {
                let mut u = Complex64::new(0.0, 0.0);
                for (m, wm) in w.iter().enumerate() {
                    u += wm * vecs[(k, m)];
                }
                let z = lift(k).conj() * u;
                residue = residue.max(z.im.abs());
                z.re
            })
            .collect();
        assert!(
            residue < IMAG_RESIDUE_LIMIT * (1.0 + t.abs()),
            "imaginary residue {residue:e} in coefficient propagation"
        );
        out
    }

    pub fn first_site(&self, t: f64) -> CoefficientVector {
        let mut e1 = vec![0.0; self.dimension()];
        e1[0] = 1.0;
        CoefficientVector { time: t, values: self.apply(&e1, t), origin: Origin::FirstSite }
    }
}

/// α(t): coefficients of X̂₁(t).
pub fn propagate(gen: &Generator, t: f64) -> CoefficientVector {
    Propagator::new(gen).first_site(t)
}

/// β(t): coefficients of X̂_N(t) in the mirrored strings. Site reflection maps
/// this onto α(t) of the reversed chain.
pub fn mirror_propagate(gen: &Generator, t: f64) -> CoefficientVector {
    let mut c = Propagator::new(&gen.reversed()).first_site(t);
    c.origin = Origin::LastSite;
    c
}

/// `steps` uniformly spaced samples of α(t) on [0, t_max], endpoints included.
pub fn coefficient_trace(profile: &CouplingProfile, t_max: f64, steps: usize) -> Result<Vec<CoefficientVector>> {
    if steps < 2 {
        return Err(invalid("steps must be ≥ 2"));
    }
    if !(t_max > 0.0) || !t_max.is_finite() {
        return Err(invalid(format!("t_max must be positive and finite, got {t_max}")));
    }
    let prop = Propagator::new(&build_generator(profile));
    let last = (steps - 1) as f64;
    Ok((0..steps)
        .map(|k| {
            let t = if k == steps - 1 { t_max } else { t_max * k as f64 / last };
            prop.first_site(t)
        })
        .collect())
}

/// Information-flux estimate of the average transfer fidelity, α_N(t)².
pub fn estimate_fidelity(profile: &CouplingProfile, t: f64) -> f64 {
    let a = propagate(&build_generator(profile), t).far_end();
    (a * a).clamp(0.0, 1.0)
}

/// CSV with header `t,alpha_1,...,alpha_N` and 17 significant digits.
pub fn trace_to_csv(trace: &[CoefficientVector]) -> String {
    let n = trace.first().map_or(0, |c| c.values.len());
    let mut out = String::from("t");
    for k in 1..=n {
        out.push_str(&format!(",alpha_{k}"));
    }
    out.push('\n');
    for row in trace {
        out.push_str(&format!("{:.16e}", row.time));
        for v in &row.values {
            out.push_str(&format!(",{v:.16e}"));
        }
        out.push('\n');
    }
    out
}
