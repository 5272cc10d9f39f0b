use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::oracle::{site_mask, DensityMatrix, StateVector};

const ZERO_PROBABILITY: f64 = 1e-14;

/// Single-site measurement basis. `Equatorial(e)` measures in
/// |±⟩ = (|0⟩ ± e|1⟩)/√2 for a unit complex `e`; X and Y are e = 1 and e = i.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Axis {
    X,
    Y,
    Z,
    Equatorial(Complex64),
}

impl Axis {
    pub fn phase(phi: f64) -> Self {
        Axis::Equatorial(Complex64::from_polar(1.0, phi))
    }

    /// Basis vector selected by `outcome` (+1 or −1).
    pub fn vector(self, outcome: i8) -> [Complex64; 2] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s = if outcome >= 0 { 1.0 } else { -1.0 };
        let e = match self {
            Axis::Z => {
                return if outcome >= 0 {
                    [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]
                } else {
                    [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]
                };
            }
            Axis::X => Complex64::new(1.0, 0.0),
            Axis::Y => Complex64::i(),
            Axis::Equatorial(e) => e,
        };
        [Complex64::new(h, 0.0), e * (s * h)]
    }
}

fn check_site(n: usize, site: usize) -> Result<()> {
    if site == 0 || site > n {
        Err(invalid(format!("site {site} outside 1..={n}")))
    } else {
        Ok(())
    }
}

fn check_outcome(outcome: i8) -> Result<()> {
    if outcome == 1 || outcome == -1 {
        Ok(())
    } else {
        Err(invalid(format!("outcome must be +1 or -1, got {outcome}")))
    }
}

/// In-place |v⟩⟨v| on `site`; returns the squared norm of the result.
pub(crate) fn project_in_place(amps: &mut [Complex64], n: usize, site: usize, v: [Complex64; 2]) -> f64 {
    let mask = site_mask(n, site);
    let mut prob = 0.0;
    for b in 0..amps.len() {
        if b & mask != 0 {
            continue;
        }
        let c = v[0].conj() * amps[b] + v[1].conj() * amps[b | mask];
        amps[b] = v[0] * c;
        amps[b | mask] = v[1] * c;
        prob += c.norm_sqr();
    }
    prob
}

/// P ρ P for P = |v⟩⟨v| on `site`, unnormalized.
pub(crate) fn project_density(rho: &DensityMatrix, site: usize, v: [Complex64; 2]) -> DensityMatrix {
    let n = rho.n_sites();
    let left = |m: &DMatrix<Complex64>| {
        let mut m = m.clone();
        for mut col in m.column_iter_mut() {
            project_in_place(col.as_mut_slice(), n, site, v);
        }
        m
    };
    let a = left(rho.matrix());
    DensityMatrix::from_raw(n, left(&a.adjoint()))
}

/// Born probability of `outcome` and the normalized post-measurement state.
pub fn project_site(state: &StateVector, site: usize, axis: Axis, outcome: i8) -> Result<(f64, StateVector)> {
    let n = state.n_sites();
    check_site(n, site)?;
    check_outcome(outcome)?;
    let mut post = state.clone();
    let prob = project_in_place(post.amplitudes_mut(), n, site, axis.vector(outcome));
    if prob < ZERO_PROBABILITY {
        return Err(Error::ZeroProbability { site, outcome, probability: prob });
    }
    let scale = 1.0 / prob.sqrt();
    for a in post.amplitudes_mut() {
        *a *= scale;
    }
    Ok((prob, post))
}

/// Samples an outcome with Born probabilities; deterministic in `seed`.
pub fn measure_site(state: &StateVector, site: usize, axis: Axis, seed: u64) -> Result<(i8, StateVector)> {
    let n = state.n_sites();
    check_site(n, site)?;
    let mut plus = state.clone();
    let p_plus = project_in_place(plus.amplitudes_mut(), n, site, axis.vector(1)) / state.norm_sqr();
    let u: f64 = ChaCha8Rng::seed_from_u64(seed).random();
    let outcome = if u < p_plus { 1 } else { -1 };
    let (_, post) = project_site(state, site, axis, outcome)?;
    Ok((outcome, post))
}

fn validate_keep(n: usize, keep: &[usize]) -> Result<Vec<usize>> {
    let mut k = keep.to_vec();
    k.sort_unstable();
    k.dedup();
    if k.len() != keep.len() {
        return Err(invalid("repeated site in keep set"));
    }
    for &s in &k {
        check_site(n, s)?;
    }
    Ok(k)
}

/// Splits each basis index into (kept index, traced index).
fn split_indices(n: usize, keep: &[usize]) -> Vec<(usize, usize)> {
    let kept_masks: Vec<usize> = keep.iter().map(|&s| site_mask(n, s)).collect();
    let env_masks: Vec<usize> = (1..=n).filter(|s| !keep.contains(s)).map(|s| site_mask(n, s)).collect();
    let gather = |b: usize, masks: &[usize]| masks.iter().fold(0, |acc, &m| (acc << 1) | usize::from(b & m != 0));
    (0..1usize << n).map(|b| (gather(b, &kept_masks), gather(b, &env_masks))).collect()
}

/// Partial trace over every site not in `keep`. Kept sites stay in ascending
/// order, the lowest-numbered one most significant.
pub trait PartialTrace {
    fn reduced_state(&self, keep: &[usize]) -> Result<DensityMatrix>;
}

impl PartialTrace for StateVector {
    fn reduced_state(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let n = self.n_sites();
        let keep = validate_keep(n, keep)?;
        let dk = 1usize << keep.len();
        let de = 1usize << (n - keep.len());
        let mut m = DMatrix::<Complex64>::zeros(dk, de);
        for (b, (k, e)) in split_indices(n, &keep).into_iter().enumerate() {
            m[(k, e)] = self.amplitudes()[b];
        }
        Ok(DensityMatrix::from_raw(keep.len(), &m * m.adjoint()))
    }
}

impl PartialTrace for DensityMatrix {
    fn reduced_state(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let n = self.n_sites();
        let keep = validate_keep(n, keep)?;
        let dk = 1usize << keep.len();
        let split = split_indices(n, &keep);
        let mut out = DMatrix::<Complex64>::zeros(dk, dk);
        let rho = self.matrix();
        for (b1, &(k1, e1)) in split.iter().enumerate() {
            for (b2, &(k2, e2)) in split.iter().enumerate() {
                if e1 == e2 {
                    out[(k1, k2)] += rho[(b1, b2)];
                }
            }
        }
        Ok(DensityMatrix::from_raw(keep.len(), out))
    }
}

pub fn reduced_state<S: PartialTrace + ?Sized>(state: &S, keep: &[usize]) -> Result<DensityMatrix> {
    state.reduced_state(keep)
}

fn hermitian_sqrt(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(h);
    let roots = eig.eigenvalues.map(|l| Complex64::new(l.max(0.0).sqrt(), 0.0));
    let v = &eig.eigenvectors;
    v * DMatrix::from_diagonal(&roots) * v.adjoint()
}

/// Uhlmann fidelity (Tr √(√ρ σ √ρ))².
///
/// Qubits use the closed form Tr(ρσ) + 2√(det ρ · det σ); a pure argument
/// reduces to an expectation value. Both avoid square roots of near-zero
/// eigenvalues, which would otherwise cost ~1e−8 accuracy.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.n_sites() != sigma.n_sites() {
        return Err(invalid("fidelity between states of different sizes"));
    }
    let (a, b) = (rho.matrix(), sigma.matrix());
    let overlap = (a * b).trace().re;
    let f = if rho.dim() == 2 {
        let det = |m: &DMatrix<Complex64>| (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).re.max(0.0);
        overlap + 2.0 * (det(a) * det(b)).sqrt()
    } else if (sigma.purity() - 1.0).abs() < 1e-12 || (rho.purity() - 1.0).abs() < 1e-12 {
        overlap
    } else {
        let s = hermitian_sqrt(a);
        let inner = &s * b * &s;
        let h = (&inner + inner.adjoint()) * Complex64::new(0.5, 0.0);
        let t: f64 = h.symmetric_eigenvalues().iter().map(|l| l.max(0.0).sqrt()).sum();
        t * t
    };
    Ok(f.clamp(0.0, 1.0))
}
