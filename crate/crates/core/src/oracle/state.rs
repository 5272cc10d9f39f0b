use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// State vector over N sites, site 1 most significant.
///
/// The public constructors produce normalized states; engines may hold
/// unnormalized intermediates internally (projected branches, Ĥ|ψ⟩).
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_sites: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub(crate) fn from_raw(n_sites: usize, amps: Vec<Complex64>) -> Self {
        debug_assert_eq!(amps.len(), 1 << n_sites);
        Self { n_sites, amps }
    }

    /// Normalizes `amps`; errors on wrong length or zero norm.
    pub fn from_amplitudes(n_sites: usize, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != 1 << n_sites {
            return Err(invalid(format!(
                "{} amplitudes for {} sites (need {})",
                amps.len(),
                n_sites,
                1usize << n_sites
            )));
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(invalid("state has zero or non-finite norm"));
        }
        Ok(Self { n_sites, amps: amps.into_iter().map(|a| a / norm).collect() })
    }

    /// |0...0⟩.
    pub fn zero(n_sites: usize) -> Self {
        let mut amps = vec![ZERO; 1 << n_sites];
        amps[0] = Complex64::new(1.0, 0.0);
        Self { n_sites, amps }
    }

    pub fn basis(n_sites: usize, index: usize) -> Result<Self> {
        if index >= 1 << n_sites {
            return Err(invalid(format!("basis index {index} out of range for {n_sites} sites")));
        }
        let mut amps = vec![ZERO; 1 << n_sites];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Self { n_sites, amps })
    }

    /// Basis state from a bit string, site 1 first: `"10000"`.
    pub fn from_bits(bits: &str) -> Result<Self> {
        let n = bits.len();
        let index = usize::from_str_radix(bits, 2).map_err(|_| invalid(format!("bad bit string '{bits}'")))?;
        Self::basis(n, index)
    }

    /// Single qubit cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩.
    pub fn qubit(theta: f64, phi: f64) -> Self {
        Self {
            n_sites: 1,
            amps: vec![Complex64::new((theta / 2.0).cos(), 0.0), Complex64::from_polar((theta / 2.0).sin(), phi)],
        }
    }

    /// Named axial qubit states: `0`, `1`, `+x`, `-x`, `+y`, `-y`.
    pub fn axial(name: &str) -> Result<Self> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let (a, b) = match name {
            "0" | "+z" => (Complex64::new(1.0, 0.0), ZERO),
            "1" | "-z" => (ZERO, Complex64::new(1.0, 0.0)),
            "+x" | "+" => (Complex64::new(h, 0.0), Complex64::new(h, 0.0)),
            "-x" | "-" => (Complex64::new(h, 0.0), Complex64::new(-h, 0.0)),
            "+y" => (Complex64::new(h, 0.0), Complex64::new(0.0, h)),
            "-y" => (Complex64::new(h, 0.0), Complex64::new(0.0, -h)),
            _ => return Err(invalid(format!("unknown axial state '{name}'"))),
        };
        Ok(Self { n_sites: 1, amps: vec![a, b] })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalized(&self) -> Result<Self> {
        Self::from_amplitudes(self.n_sites, self.amps.clone())
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// self ⊗ other; `self` occupies the leading (more significant) sites.
    pub fn tensor(&self, other: &StateVector) -> StateVector {
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        StateVector { n_sites: self.n_sites + other.n_sites, amps }
    }

    pub fn to_density(&self) -> DensityMatrix {
        let v = nalgebra::DVector::from_column_slice(&self.amps);
        DensityMatrix::from_raw(self.n_sites, &v * v.adjoint())
    }

    /// ⟨Σ_i Z_i⟩.
    pub fn total_magnetization(&self) -> f64 {
        let n = self.n_sites as i64;
        self.amps.iter().enumerate().map(|(b, a)| a.norm_sqr() * (n - 2 * b.count_ones() as i64) as f64).sum()
    }

    /// Max-abs entrywise difference after removing the global phase, aligned
    /// on the largest amplitude of `self`.
    pub fn phase_aligned_distance(&self, other: &StateVector) -> f64 {
        let (k, _) = self
            .amps
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm_sqr().total_cmp(&b.1.norm_sqr()))
            .expect("non-empty state");
        let rel = other.amps[k] / self.amps[k];
        let phase = if rel.norm() > 0.0 { rel / rel.norm() } else { Complex64::new(1.0, 0.0) };
        self.amps.iter().zip(&other.amps).map(|(a, b)| (a * phase - b).norm()).fold(0.0, f64::max)
    }
}

/// Haar-random pure state from complex Gaussian amplitudes.
pub fn random_pure_state<R: Rng + ?Sized>(n_sites: usize, rng: &mut R) -> StateVector {
    loop {
        let amps: Vec<Complex64> = (0..1usize << n_sites)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        if let Ok(s) = StateVector::from_amplitudes(n_sites, amps) {
            return s;
        }
    }
}

/// Density matrix over N sites, same basis ordering as [`StateVector`].
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_sites: usize,
    mat: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub(crate) fn from_raw(n_sites: usize, mat: DMatrix<Complex64>) -> Self {
        debug_assert_eq!(mat.nrows(), 1 << n_sites);
        Self { n_sites, mat }
    }

    /// Validates unit trace (1e−10), Hermiticity (1e−12) and positivity
    /// (minimum eigenvalue ≥ −1e−10).
    pub fn from_matrix(n_sites: usize, mat: DMatrix<Complex64>) -> Result<Self> {
        let dim = 1usize << n_sites;
        if mat.nrows() != dim || mat.ncols() != dim {
            return Err(invalid(format!("matrix is {}x{}, need {dim}x{dim}", mat.nrows(), mat.ncols())));
        }
        let rho = Self { n_sites, mat };
        rho.check()?;
        Ok(rho)
    }

    pub fn maximally_mixed(n_sites: usize) -> Self {
        let dim = 1usize << n_sites;
        Self { n_sites, mat: DMatrix::identity(dim, dim) * Complex64::new(1.0 / dim as f64, 0.0) }
    }

    /// Single-qubit state (I + xX + yY + zZ)/2; requires |r| ≤ 1.
    pub fn from_bloch(r: [f64; 3]) -> Result<Self> {
        let len = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        if len > 1.0 + 1e-12 {
            return Err(invalid(format!("Bloch vector length {len} exceeds 1")));
        }
        let [x, y, z] = r;
        let mat = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new((1.0 + z) / 2.0, 0.0),
                Complex64::new(x / 2.0, -y / 2.0),
                Complex64::new(x / 2.0, y / 2.0),
                Complex64::new((1.0 - z) / 2.0, 0.0),
            ],
        );
        Ok(Self { n_sites: 1, mat })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    pub fn trace(&self) -> Complex64 {
        self.mat.trace()
    }

    pub fn purity(&self) -> f64 {
        // Tr ρ² = Σ |ρ_ij|² for Hermitian ρ.
        self.mat.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.mat - self.mat.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.mat + self.mat.adjoint()) * Complex64::new(0.5, 0.0);
        h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn check(&self) -> Result<()> {
        let tr = self.trace();
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(invalid(format!("density matrix trace {tr} is not 1")));
        }
        let herm = self.hermiticity_error();
        if herm > 1e-12 {
            return Err(invalid(format!("density matrix is not Hermitian (error {herm:e})")));
        }
        let min = self.min_eigenvalue();
        if min < -1e-10 {
            return Err(invalid(format!("density matrix has negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix { n_sites: self.n_sites + other.n_sites, mat: self.mat.kronecker(&other.mat) }
    }

    /// U ρ U†.
    pub fn conjugated(&self, u: &DMatrix<Complex64>) -> DensityMatrix {
        DensityMatrix { n_sites: self.n_sites, mat: u * &self.mat * u.adjoint() }
    }

    /// Bloch vector (⟨X⟩, ⟨Y⟩, ⟨Z⟩) of a single-qubit state.
    pub fn bloch(&self) -> Result<[f64; 3]> {
        if self.n_sites != 1 {
            return Err(invalid("Bloch vector needs a single-qubit state"));
        }
        let m = &self.mat;
        Ok([2.0 * m[(1, 0)].re, 2.0 * m[(1, 0)].im, (m[(0, 0)] - m[(1, 1)]).re])
    }

    /// Spectral decomposition into weighted pure states; weights below
    /// `min_weight` are dropped and the rest renormalized to sum to one.
    pub fn eigen_ensemble(&self, min_weight: f64) -> Vec<(f64, StateVector)> {
        let h = (&self.mat + self.mat.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = SymmetricEigen::new(h);
        let mut out = Vec::new();
        for (k, &w) in eig.eigenvalues.iter().enumerate() {
            if w > min_weight {
                let amps: Vec<Complex64> = eig.eigenvectors.column(k).iter().copied().collect();
                out.push((w, StateVector::from_raw(self.n_sites, amps)));
            }
        }
        let total: f64 = out.iter().map(|(w, _)| w).sum();
        for (w, _) in &mut out {
            *w /= total;
        }
        out
    }
}
