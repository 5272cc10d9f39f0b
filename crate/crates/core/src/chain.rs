//! Coupling profiles of nearest-neighbour XX chains and the two objects built
//! from them: the Hamiltonian action on the full 2^N space, used by the exact
//! oracle, and the N×N coefficient generator, used by the Heisenberg engine.
//!
//! Units: ħ = 1 and the energy scale J = 1, so couplings are dimensionless and
//! every time in the crate is the dimensionless product Jt.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::oracle::{check_cap, site_mask, StateVector};

/// Chain length plus the N−1 bond couplings J_1..J_{N−1}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProfileRecord", into = "ProfileRecord")]
pub struct CouplingProfile {
    n_sites: usize,
    couplings: Vec<f64>,
    label: String,
}

#[derive(Serialize, Deserialize)]
struct ProfileRecord {
    n: usize,
    couplings: Vec<f64>,
    #[serde(default)]
    label: String,
}

impl TryFrom<ProfileRecord> for CouplingProfile {
    type Error = Error;

    fn try_from(r: ProfileRecord) -> Result<Self> {
        let mut p = CouplingProfile::new(r.n, r.couplings)?;
        if !r.label.is_empty() {
            p.label = r.label;
        }
        Ok(p)
    }
}

impl From<CouplingProfile> for ProfileRecord {
    fn from(p: CouplingProfile) -> Self {
        ProfileRecord { n: p.n_sites, couplings: p.couplings, label: p.label }
    }
}

impl CouplingProfile {
    /// Explicit coupling list. Couplings must be finite; zero and negative
    /// bonds are allowed here (only the named families require positivity).
    pub fn new(n_sites: usize, couplings: Vec<f64>) -> Result<Self> {
        if n_sites < 2 {
            return Err(invalid(format!("a chain needs n >= 2 sites, got {n_sites}")));
        }
        if couplings.len() != n_sites - 1 {
            return Err(invalid(format!("{} sites need {} couplings, got {}", n_sites, n_sites - 1, couplings.len())));
        }
        if let Some(bad) = couplings.iter().find(|c| !c.is_finite()) {
            return Err(invalid(format!("coupling {bad} is not finite")));
        }
        Ok(Self { n_sites, couplings, label: "explicit".into() })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// J_i = J_{N−i} for every bond.
    pub fn is_centro_symmetric(&self) -> bool {
        let n = self.couplings.len();
        (0..n / 2).all(|i| (self.couplings[i] - self.couplings[n - 1 - i]).abs() <= 1e-12)
    }

    /// Site-reversed chain (bond i becomes bond N−i).
    pub fn reversed(&self) -> Self {
        let mut couplings = self.couplings.clone();
        couplings.reverse();
        Self { n_sites: self.n_sites, couplings, label: format!("{}-reversed", self.label) }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// J_i = √(i(N−i)): equally spaced single-excitation spectrum, exact end-to-end
/// revival at t = π/4.
pub fn perfect_profile(n: usize) -> Result<CouplingProfile> {
    if n < 2 {
        return Err(invalid(format!("perfect profile needs n >= 2, got {n}")));
    }
    let couplings = (1..n).map(|i| ((i * (n - i)) as f64).sqrt()).collect();
    Ok(CouplingProfile::new(n, couplings)?.with_label("perfect"))
}

/// Uniform interior bonds with the two end bonds scaled by `eta`.
pub fn boundary_profile(n: usize, eta: f64) -> Result<CouplingProfile> {
    if n < 4 {
        return Err(invalid(format!("boundary profile needs n >= 4, got {n}")));
    }
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(invalid(format!("eta must be positive and finite, got {eta}")));
    }
    let mut couplings = vec![1.0; n - 1];
    couplings[0] = eta;
    couplings[n - 2] = eta;
    Ok(CouplingProfile::new(n, couplings)?.with_label(format!("boundary:{eta}")))
}

/// How a profile is named on the command line: `perfect`, `boundary:η`, or an
/// explicit comma-separated coupling list.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileSpec {
    Perfect,
    Boundary(f64),
    Explicit(Vec<f64>),
}

impl ProfileSpec {
    /// Resolve against a chain length. Explicit lists carry their own length;
    /// if `n` is given it must agree.
    pub fn build(&self, n: Option<usize>) -> Result<CouplingProfile> {
        match self {
            ProfileSpec::Perfect => perfect_profile(n.ok_or_else(|| invalid("--n is required"))?),
            ProfileSpec::Boundary(eta) => boundary_profile(n.ok_or_else(|| invalid("--n is required"))?, *eta),
            ProfileSpec::Explicit(c) => {
                let len = c.len() + 1;
                if let Some(n) = n {
                    if n != len {
                        return Err(invalid(format!(
                            "explicit list has {} couplings, which does not fit n = {n}",
                            c.len()
                        )));
                    }
                }
                CouplingProfile::new(len, c.clone())
            }
        }
    }
}

impl FromStr for ProfileSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "perfect" {
            return Ok(ProfileSpec::Perfect);
        }
        if let Some(rest) = s.strip_prefix("boundary") {
            let rest = rest.trim_start_matches(':');
            if rest.is_empty() {
                return Err(invalid("boundary profile needs an eta, e.g. boundary:0.815"));
            }
            let eta: f64 = rest.parse().map_err(|_| invalid(format!("bad eta in profile '{s}'")))?;
            return Ok(ProfileSpec::Boundary(eta));
        }
        let couplings = s
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| invalid(format!("unknown profile '{s}'")))?;
        Ok(ProfileSpec::Explicit(couplings))
    }
}

impl fmt::Display for ProfileSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProfileSpec::Perfect => write!(f, "perfect"),
            ProfileSpec::Boundary(eta) => write!(f, "boundary:{eta}"),
            ProfileSpec::Explicit(c) => {
                let parts: Vec<String> = c.iter().map(|v| v.to_string()).collect();
                write!(f, "{}", parts.join(","))
            }
        }
    }
}

/// Real antisymmetric tridiagonal generator of the coefficient dynamics,
/// stored by its subdiagonal: G_{i+1,i} = g_i = −G_{i,i+1}.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    subdiagonal: Vec<f64>,
}

impl Generator {
    pub fn from_subdiagonal(subdiagonal: Vec<f64>) -> Self {
        Self { subdiagonal }
    }

    pub fn dimension(&self) -> usize {
        self.subdiagonal.len() + 1
    }

    pub fn subdiagonal(&self) -> &[f64] {
        &self.subdiagonal
    }

    pub fn reversed(&self) -> Self {
        let mut subdiagonal = self.subdiagonal.clone();
        subdiagonal.reverse();
        Self { subdiagonal }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dimension();
        let mut g = DMatrix::zeros(n, n);
        for (i, &v) in self.subdiagonal.iter().enumerate() {
            g[(i + 1, i)] = v;
            g[(i, i + 1)] = -v;
        }
        g
    }

    /// Real symmetric tridiagonal matrix with off-diagonals g_i. It is unitarily
    /// similar to iG (via diag(i^k)), so its eigenvalues are those of iG.
    pub fn symmetric_form(&self) -> DMatrix<f64> {
        let n = self.dimension();
        let mut s = DMatrix::zeros(n, n);
        for (i, &v) in self.subdiagonal.iter().enumerate() {
            s[(i + 1, i)] = v;
            s[(i, i + 1)] = v;
        }
        s
    }

    /// Eigenvalues of iG in ascending order.
    pub fn spectrum(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.symmetric_form().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

pub fn build_generator(profile: &CouplingProfile) -> Generator {
    Generator::from_subdiagonal(profile.couplings.iter().map(|j| 2.0 * j).collect())
}

/// Matrix-free action of Ĥ = Σ J_i (X_i X_{i+1} + Y_i Y_{i+1}).
///
/// On each bond X X + Y Y = 2(|01⟩⟨10| + |10⟩⟨01|), so the action swaps
/// anti-aligned neighbours with amplitude 2J_i and kills aligned ones.
#[derive(Debug, Clone)]
pub struct HamiltonianAction {
    n_sites: usize,
    bonds: Vec<(usize, f64)>,
}

impl HamiltonianAction {
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        if state.n_sites() != self.n_sites {
            return Err(invalid(format!("state has {} sites, Hamiltonian has {}", state.n_sites(), self.n_sites)));
        }
        let amps = state.amplitudes();
        let mut out = vec![Complex64::new(0.0, 0.0); amps.len()];
        for (b, &a) in amps.iter().enumerate() {
            if a == Complex64::new(0.0, 0.0) {
                continue;
            }
            for &(mask, amp) in &self.bonds {
                let pair = b & mask;
                if pair != 0 && pair != mask {
                    out[b ^ mask] += a * amp;
                }
            }
        }
        Ok(StateVector::from_raw(self.n_sites, out))
    }

    /// Dense 2^N × 2^N matrix, column b = Ĥ|b⟩.
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let dim = 1usize << self.n_sites;
        let mut h = DMatrix::zeros(dim, dim);
        for b in 0..dim {
            for &(mask, amp) in &self.bonds {
                let pair = b & mask;
                if pair != 0 && pair != mask {
                    h[(b ^ mask, b)] += Complex64::new(amp, 0.0);
                }
            }
        }
        h
    }
}

pub fn build_hamiltonian_action(profile: &CouplingProfile, cap: usize) -> Result<HamiltonianAction> {
    let n = profile.n_sites;
    check_cap(n, cap)?;
    let bonds = profile
        .couplings
        .iter()
        .enumerate()
        .map(|(i, &j)| (site_mask(n, i + 1) | site_mask(n, i + 2), 2.0 * j))
        .collect();
    Ok(HamiltonianAction { n_sites: n, bonds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::DEFAULT_ORACLE_CAP;
    use approx::assert_abs_diff_eq;

    #[test]
    fn perfect_profile_values() {
        let p = perfect_profile(5).unwrap();
        let s6 = 6f64.sqrt();
        for (a, b) in p.couplings().iter().zip([2.0, s6, s6, 2.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
        assert_eq!(perfect_profile(2).unwrap().couplings(), &[1.0]);
        let p8 = perfect_profile(8).unwrap();
        let want = [7f64, 12.0, 15.0, 16.0, 15.0, 12.0, 7.0].map(f64::sqrt);
        for (a, b) in p8.couplings().iter().zip(want) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
        assert!(perfect_profile(1).is_err());
        assert!(perfect_profile(0).is_err());
    }

    #[test]
    fn perfect_profiles_are_centro_symmetric() {
        for n in 2..40 {
            assert!(perfect_profile(n).unwrap().is_centro_symmetric());
        }
        assert!(!CouplingProfile::new(4, vec![1.0, 2.0, 3.0]).unwrap().is_centro_symmetric());
    }

    #[test]
    fn boundary_profile_values() {
        assert_eq!(boundary_profile(5, 0.815).unwrap().couplings(), &[0.815, 1.0, 1.0, 0.815]);
        assert_eq!(boundary_profile(4, 1.0).unwrap().couplings(), &[1.0, 1.0, 1.0]);
        let p6 = boundary_profile(6, 0.5).unwrap();
        assert_eq!(p6.couplings(), &[0.5, 1.0, 1.0, 1.0, 0.5]);
        assert!(p6.is_centro_symmetric());
        assert!(boundary_profile(3, 0.8).is_err());
        assert!(boundary_profile(5, 0.0).is_err());
        assert!(boundary_profile(5, -1.0).is_err());
        assert!(boundary_profile(5, f64::NAN).is_err());
    }

    #[test]
    fn explicit_profile_validation() {
        assert!(CouplingProfile::new(3, vec![1.0]).is_err());
        assert!(CouplingProfile::new(3, vec![1.0, f64::INFINITY]).is_err());
        assert!(CouplingProfile::new(1, vec![]).is_err());
    }

    #[test]
    fn generator_subdiagonals() {
        assert_eq!(build_generator(&perfect_profile(2).unwrap()).subdiagonal(), &[2.0]);
        let g = build_generator(&perfect_profile(5).unwrap());
        let s = 2.0 * 6f64.sqrt();
        for (a, b) in g.subdiagonal().iter().zip([4.0, s, s, 4.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-14);
        }
        assert_eq!(g.dimension(), 5);
        let gb = build_generator(&boundary_profile(5, 0.815).unwrap());
        for (a, b) in gb.subdiagonal().iter().zip([1.63, 2.0, 2.0, 1.63]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-14);
        }
        let d = g.to_dense();
        assert_abs_diff_eq!((&d + d.transpose()).abs().max(), 0.0);
    }

    #[test]
    fn perfect_generator_spectrum_is_equally_spaced() {
        for n in 2..=32 {
            let ev = build_generator(&perfect_profile(n).unwrap()).spectrum();
            let mut want: Vec<f64> = (1..=n).map(|k| 2.0 * (n as f64 + 1.0 - 2.0 * k as f64)).collect();
            want.sort_by(f64::total_cmp);
            for (a, b) in ev.iter().zip(&want) {
                assert!((a - b).abs() < 1e-10, "n={n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn hamiltonian_action_examples() {
        let h2 = build_hamiltonian_action(&perfect_profile(2).unwrap(), DEFAULT_ORACLE_CAP).unwrap();
        let out = h2.apply(&StateVector::from_bits("01").unwrap()).unwrap();
        assert_abs_diff_eq!(out.amplitudes()[0b10].re, 2.0);
        assert_abs_diff_eq!(out.norm_sqr(), 4.0);
        let zero = h2.apply(&StateVector::from_bits("00").unwrap()).unwrap();
        assert_eq!(zero.norm_sqr(), 0.0);

        let h3 = build_hamiltonian_action(&perfect_profile(3).unwrap(), DEFAULT_ORACLE_CAP).unwrap();
        let out = h3.apply(&StateVector::from_bits("010").unwrap()).unwrap();
        let c = 2.0 * 2f64.sqrt();
        assert_abs_diff_eq!(out.amplitudes()[0b100].re, c, epsilon = 1e-14);
        assert_abs_diff_eq!(out.amplitudes()[0b001].re, c, epsilon = 1e-14);
        assert_abs_diff_eq!(out.norm_sqr(), 2.0 * c * c, epsilon = 1e-12);
    }

    #[test]
    fn hamiltonian_action_matches_pauli_construction() {
        use crate::oracle::{Pauli, PauliString};
        // Independent route: Σ J_i (X_i X_{i+1} + Y_i Y_{i+1}) from Kronecker products.
        let p = CouplingProfile::new(4, vec![0.3, -1.2, 0.7]).unwrap();
        let h = build_hamiltonian_action(&p, DEFAULT_ORACLE_CAP).unwrap().to_dense();
        let mut want = DMatrix::<Complex64>::zeros(16, 16);
        for (i, &j) in p.couplings().iter().enumerate() {
            for l in [Pauli::X, Pauli::Y] {
                let s = PauliString::from_sites(4, &[(i + 1, l), (i + 2, l)]).unwrap();
                want += s.to_dense() * Complex64::new(j, 0.0);
            }
        }
        assert_abs_diff_eq!((h - want).camax(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn hamiltonian_is_hermitian_and_conserves_magnetization() {
        for n in 2..=8 {
            let p = perfect_profile(n).unwrap();
            let h = build_hamiltonian_action(&p, DEFAULT_ORACLE_CAP).unwrap();
            let d = h.to_dense();
            assert_abs_diff_eq!((&d - d.adjoint()).camax(), 0.0);
            for b in 0..(1usize << n) {
                let out = h.apply(&StateVector::basis(n, b).unwrap()).unwrap();
                for (k, a) in out.amplitudes().iter().enumerate() {
                    if a.norm() > 0.0 {
                        assert_eq!(k.count_ones(), b.count_ones());
                    }
                }
            }
        }
    }

    #[test]
    fn hamiltonian_dimension_mismatch() {
        let h = build_hamiltonian_action(&perfect_profile(3).unwrap(), DEFAULT_ORACLE_CAP).unwrap();
        assert!(h.apply(&StateVector::zero(4)).is_err());
        assert!(matches!(
            build_hamiltonian_action(&perfect_profile(20).unwrap(), 14),
            Err(Error::ResourceLimit { .. })
        ));
    }

    #[test]
    fn profile_json() {
        let p = boundary_profile(5, 0.815).unwrap();
        let s = p.to_json().unwrap();
        assert!(s.contains("\"n\":5"));
        assert!(s.contains("\"label\":\"boundary:0.815\""));
        assert_eq!(CouplingProfile::from_json(&s).unwrap(), p);
        assert!(CouplingProfile::from_json(r#"{"n":3,"couplings":[1.0],"label":"x"}"#).is_err());
        let q = CouplingProfile::from_json(r#"{"n":3,"couplings":[1.0,2.0]}"#).unwrap();
        assert_eq!(q.label(), "explicit");
    }

    #[test]
    fn profile_spec_parsing() {
        assert_eq!("perfect".parse::<ProfileSpec>().unwrap(), ProfileSpec::Perfect);
        assert_eq!("boundary:0.815".parse::<ProfileSpec>().unwrap(), ProfileSpec::Boundary(0.815));
        assert_eq!("1, 2,3".parse::<ProfileSpec>().unwrap(), ProfileSpec::Explicit(vec![1.0, 2.0, 3.0]));
        assert!("nonsense".parse::<ProfileSpec>().is_err());
        assert!("boundary".parse::<ProfileSpec>().is_err());
        let p = ProfileSpec::Explicit(vec![1.0, 2.0]).build(None).unwrap();
        assert_eq!(p.n_sites(), 3);
        assert!(ProfileSpec::Explicit(vec![1.0, 2.0]).build(Some(5)).is_err());
        assert!(ProfileSpec::Perfect.build(None).is_err());
    }
}
