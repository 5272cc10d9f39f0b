use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::chain::{build_hamiltonian_action, CouplingProfile};
use crate::error::{invalid, Error, Result};
use crate::heisenberg::{CoefficientVector, Origin};
use crate::oracle::{check_cap, site_mask, DensityMatrix, Pauli, PauliString, PauliSum, StateVector};
use crate::oracle::{DEFAULT_ORACLE_CAP, DENSE_OPERATOR_CAP};

const STRING_RESIDUAL_LIMIT: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EvolutionMethod {
    /// Diagonalize each fixed-magnetization block separately.
    #[default]
    Sectors,
    /// Diagonalize the full 2^N matrix at once.
    Dense,
}

#[derive(Debug, Clone)]
struct Block {
    indices: Vec<usize>,
    energies: Vec<f64>,
    vectors: DMatrix<f64>,
}

/// Spectral decomposition of the XX Hamiltonian, reusable for any number of
/// evolution times and states.
///
/// In the computational basis Ĥ is real symmetric with non-negative
/// off-diagonal entries 2J_i, so each block is diagonalized in real
/// arithmetic.
#[derive(Debug, Clone)]
pub struct Evolver {
    n_sites: usize,
    blocks: Vec<Block>,
}

impl Evolver {
    pub fn new(profile: &CouplingProfile, cap: usize) -> Result<Self> {
        Self::with_method(profile, cap, EvolutionMethod::Sectors)
    }

    pub fn with_method(profile: &CouplingProfile, cap: usize, method: EvolutionMethod) -> Result<Self> {
        check_cap(profile.n_sites(), cap)?;
        match method {
            EvolutionMethod::Sectors => Ok(Self::from_couplings(profile.n_sites(), profile.couplings())),
            EvolutionMethod::Dense => {
                let h = build_hamiltonian_action(profile, cap)?.to_dense().map(|z| z.re);
                let eig = SymmetricEigen::new(h);
                Ok(Self {
                    n_sites: profile.n_sites(),
                    blocks: vec![Block {
                        indices: (0..1usize << profile.n_sites()).collect(),
                        energies: eig.eigenvalues.iter().copied().collect(),
                        vectors: eig.eigenvectors,
                    }],
                })
            }
        }
    }

    /// Sector decomposition for an arbitrary coupling list on `n` sites; `n`
    /// may be 1 (no bonds, Ĥ = 0).
    pub(crate) fn from_couplings(n: usize, couplings: &[f64]) -> Self {
        debug_assert_eq!(couplings.len() + 1, n.max(1));
        let dim = 1usize << n;
        let bonds: Vec<(usize, f64)> =
            couplings.iter().enumerate().map(|(i, &j)| (site_mask(n, i + 1) | site_mask(n, i + 2), 2.0 * j)).collect();
        let mut position = vec![0usize; dim];
        let mut sectors: Vec<Vec<usize>> = vec![Vec::new(); n + 1];
        for b in 0..dim {
            let w = b.count_ones() as usize;
            position[b] = sectors[w].len();
            sectors[w].push(b);
        }
        let blocks = sectors
            .into_iter()
            .map(|indices| {
                let d = indices.len();
                let mut h = DMatrix::<f64>::zeros(d, d);
                for (col, &b) in indices.iter().enumerate() {
                    for &(mask, amp) in &bonds {
                        let pair = b & mask;
                        if pair != 0 && pair != mask {
                            h[(position[b ^ mask], col)] += amp;
                        }
                    }
                }
                let eig = SymmetricEigen::new(h);
                Block { indices, energies: eig.eigenvalues.iter().copied().collect(), vectors: eig.eigenvectors }
            })
            .collect();
        Self { n_sites: n, blocks }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// e^{−iĤt} applied to raw amplitudes; linear, so unnormalized input is fine.
    pub(crate) fn evolve_amplitudes(&self, amps: &[Complex64], t: f64) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); amps.len()];
        for blk in &self.blocks {
            let d = blk.indices.len();
            let v = &blk.vectors;
            let mut w = vec![Complex64::new(0.0, 0.0); d];
            for (m, wm) in w.iter_mut().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, &b) in blk.indices.iter().enumerate() {
                    acc += amps[b] * v[(j, m)];
                }
                *wm = acc * Complex64::from_polar(1.0, -blk.energies[m] * t);
            }
            for (j, &b) in blk.indices.iter().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (m, wm) in w.iter().enumerate() {
                    acc += wm * v[(j, m)];
                }
                out[b] = acc;
            }
        }
        out
    }

    pub fn evolve(&self, state: &StateVector, t: f64) -> Result<StateVector> {
        if state.n_sites() != self.n_sites {
            return Err(invalid("state size differs from the evolver's chain"));
        }
        Ok(StateVector::from_raw(self.n_sites, self.evolve_amplitudes(state.amplitudes(), t)))
    }

    /// Dense e^{−iĤt}.
    pub fn unitary(&self, t: f64) -> DMatrix<Complex64> {
        let dim = 1usize << self.n_sites;
        let mut u = DMatrix::zeros(dim, dim);
        for blk in &self.blocks {
            let phases: Vec<Complex64> = blk.energies.iter().map(|e| Complex64::from_polar(1.0, -e * t)).collect();
            let v = &blk.vectors;
            for (i, &bi) in blk.indices.iter().enumerate() {
                for (j, &bj) in blk.indices.iter().enumerate() {
                    u[(bi, bj)] = (0..phases.len()).map(|m| phases[m] * (v[(i, m)] * v[(j, m)])).sum();
                }
            }
        }
        u
    }

    /// Gibbs state e^{−βĤ}/Z; β = 0 is the maximally mixed state.
    pub fn gibbs(&self, beta: f64) -> Result<DensityMatrix> {
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(invalid(format!("inverse temperature must be finite and >= 0, got {beta}")));
        }
        let e_min = self.blocks.iter().flat_map(|b| b.energies.iter().copied()).fold(f64::INFINITY, f64::min);
        let dim = 1usize << self.n_sites;
        let mut rho = DMatrix::<Complex64>::zeros(dim, dim);
        let mut z = 0.0;
        for blk in &self.blocks {
            let weights: Vec<f64> = blk.energies.iter().map(|e| (-beta * (e - e_min)).exp()).collect();
            z += weights.iter().sum::<f64>();
            let v = &blk.vectors;
            for (i, &bi) in blk.indices.iter().enumerate() {
                for (j, &bj) in blk.indices.iter().enumerate() {
                    let s: f64 = (0..weights.len()).map(|m| weights[m] * v[(i, m)] * v[(j, m)]).sum();
                    rho[(bi, bj)] = Complex64::new(s, 0.0);
                }
            }
        }
        Ok(DensityMatrix::from_raw(self.n_sites, rho / Complex64::new(z, 0.0)))
    }

    /// All eigenpairs, sorted by energy.
    pub fn eigenstates(&self) -> Vec<(f64, StateVector)> {
        let dim = 1usize << self.n_sites;
        let mut out = Vec::with_capacity(dim);
        for blk in &self.blocks {
            for (m, &e) in blk.energies.iter().enumerate() {
                let mut amps = vec![Complex64::new(0.0, 0.0); dim];
                for (j, &b) in blk.indices.iter().enumerate() {
                    amps[b] = Complex64::new(blk.vectors[(j, m)], 0.0);
                }
                out.push((e, StateVector::from_raw(self.n_sites, amps)));
            }
        }
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        out
    }
}

/// e^{−iĤt}|state⟩ under the default oracle cap.
pub fn evolve(state: &StateVector, profile: &CouplingProfile, t: f64) -> Result<StateVector> {
    if state.n_sites() != profile.n_sites() {
        return Err(invalid("state and profile sizes differ"));
    }
    Evolver::new(profile, DEFAULT_ORACLE_CAP)?.evolve(state, t)
}

/// Heisenberg-picture operator e^{iĤt} Ô e^{−iĤt} as a dense matrix.
pub fn conjugate_operator(op: &PauliSum, profile: &CouplingProfile, t: f64) -> Result<DMatrix<Complex64>> {
    if op.n_sites() != profile.n_sites() {
        return Err(invalid("operator and profile sizes differ"));
    }
    check_cap(profile.n_sites(), DENSE_OPERATOR_CAP)?;
    let u = Evolver::new(profile, DENSE_OPERATOR_CAP)?.unitary(t);
    Ok(u.adjoint() * op.to_dense() * u)
}

fn project_on_strings(
    evolved: &DMatrix<Complex64>,
    strings: &[PauliString],
    t: f64,
    origin: Origin,
) -> Result<CoefficientVector> {
    let dim = evolved.nrows() as f64;
    let mut values = Vec::with_capacity(strings.len());
    let mut rebuilt = DMatrix::<Complex64>::zeros(evolved.nrows(), evolved.ncols());
    for s in strings {
        // Tr(B†A)/2^N with B Hermitian.
        let c = s.trace_product(evolved) / dim;
        if c.im.abs() > STRING_RESIDUAL_LIMIT {
            return Err(Error::InternalConsistency(format!("imaginary string coefficient {c} for {s}")));
        }
        rebuilt += s.to_dense() * Complex64::new(c.re, 0.0);
        values.push(c.re);
    }
    let residual = (evolved - rebuilt).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if residual > STRING_RESIDUAL_LIMIT {
        return Err(Error::InternalConsistency(format!(
            "evolved operator leaves the string basis (residual {residual:e})"
        )));
    }
    Ok(CoefficientVector { time: t, values, origin })
}

/// α(t) read off the exact conjugation of X̂₁.
pub fn extract_string_coefficients(profile: &CouplingProfile, t: f64) -> Result<CoefficientVector> {
    let n = profile.n_sites();
    let x1 = PauliString::single(n, 1, Pauli::X);
    let evolved = conjugate_operator(&x1.into(), profile, t)?;
    let strings: Vec<PauliString> = (1..=n).map(|k| PauliString::jordan_wigner(n, k)).collect();
    project_on_strings(&evolved, &strings, t, Origin::FirstSite)
}

/// β(t) read off the exact conjugation of X̂_N.
pub fn extract_mirror_string_coefficients(profile: &CouplingProfile, t: f64) -> Result<CoefficientVector> {
    let n = profile.n_sites();
    let xn = PauliString::single(n, n, Pauli::X);
    let evolved = conjugate_operator(&xn.into(), profile, t)?;
    let strings: Vec<PauliString> = (1..=n).map(|k| PauliString::jordan_wigner_mirrored(n, k)).collect();
    project_on_strings(&evolved, &strings, t, Origin::LastSite)
}

/// Gibbs state of the medium sub-chain (sites 2..N−1, couplings J_2..J_{N−2}),
/// decoupled from the end sites.
pub fn thermal_medium(profile: &CouplingProfile, beta: f64) -> Result<DensityMatrix> {
    thermal_medium_with_cap(profile, beta, DEFAULT_ORACLE_CAP)
}

pub(crate) fn thermal_medium_with_cap(profile: &CouplingProfile, beta: f64, cap: usize) -> Result<DensityMatrix> {
    medium_evolver(profile, cap)?.gibbs(beta)
}

/// Evolver of the decoupled medium sub-chain.
pub(crate) fn medium_evolver(profile: &CouplingProfile, cap: usize) -> Result<Evolver> {
    let n = profile.n_sites();
    if n < 3 {
        return Err(invalid("a medium needs at least one site (n >= 3)"));
    }
    check_cap(n - 2, cap)?;
    Ok(Evolver::from_couplings(n - 2, &profile.couplings()[1..n - 2]))
}

/// Gibbs state of the whole chain.
pub fn thermal_chain(profile: &CouplingProfile, beta: f64, cap: usize) -> Result<DensityMatrix> {
    Evolver::new(profile, cap)?.gibbs(beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::build_generator;
    use crate::chain::{boundary_profile, perfect_profile};
    use crate::heisenberg::{mirror_propagate, propagate};
    use crate::oracle::random_pure_state;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_4;

    /// Brute-force exponential of −iĤt from a Taylor series on the dense matrix.
    fn taylor_unitary(profile: &CouplingProfile, t: f64) -> DMatrix<Complex64> {
        let h = build_hamiltonian_action(profile, 14).unwrap().to_dense();
        let steps = 64;
        let a = h * Complex64::new(0.0, -t / steps as f64);
        let dim = a.nrows();
        let mut term = DMatrix::<Complex64>::identity(dim, dim);
        let mut step = term.clone();
        for k in 1..25 {
            term = &term * &a / Complex64::new(k as f64, 0.0);
            step += &term;
        }
        let mut u = DMatrix::<Complex64>::identity(dim, dim);
        for _ in 0..steps {
            u = &u * &step;
        }
        u
    }

    fn max_abs(m: &DMatrix<Complex64>) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn dense(s: &str) -> DMatrix<Complex64> {
        PauliString::parse(s).unwrap().to_dense()
    }

    #[test]
    fn two_site_transfer() {
        let p = perfect_profile(2).unwrap();
        let out = evolve(&StateVector::from_bits("10").unwrap(), &p, FRAC_PI_4).unwrap();
        assert_abs_diff_eq!(out.amplitudes()[0b01].norm(), 1.0, epsilon = 1e-10);
        let u = taylor_unitary(&p, FRAC_PI_4);
        assert_abs_diff_eq!(u[(0b01, 0b10)].norm(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn five_site_revival_of_single_excitation() {
        let p = perfect_profile(5).unwrap();
        let out = evolve(&StateVector::from_bits("10000").unwrap(), &p, FRAC_PI_4).unwrap();
        assert_abs_diff_eq!(out.amplitudes()[0b00001].norm(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn zero_time_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = random_pure_state(4, &mut rng);
        let out = evolve(&s, &perfect_profile(4).unwrap(), 0.0).unwrap();
        assert!(s.phase_aligned_distance(&out) < 1e-14);
        let op: PauliSum = PauliString::parse("XZIY").unwrap().into();
        let c = conjugate_operator(&op, &perfect_profile(4).unwrap(), 0.0).unwrap();
        assert!(max_abs(&(c - op.to_dense())) < 1e-14);
    }

    #[test]
    fn sector_dense_and_taylor_unitaries_agree() {
        for p in [perfect_profile(5).unwrap(), CouplingProfile::new(4, vec![0.3, 1.7, -0.4]).unwrap()] {
            let t = 0.83;
            let us = Evolver::new(&p, 14).unwrap().unitary(t);
            let ud = Evolver::with_method(&p, 14, EvolutionMethod::Dense).unwrap().unitary(t);
            let ut = taylor_unitary(&p, t);
            assert!(max_abs(&(&us - &ud)) < 1e-12);
            assert!(max_abs(&(&us - &ut)) < 1e-10);
        }
    }

    #[test]
    fn cap_enforced() {
        let p = perfect_profile(15).unwrap();
        assert!(matches!(evolve(&StateVector::zero(15), &p, 1.0), Err(Error::ResourceLimit { .. })));
        let op: PauliSum = PauliString::identity(9).into();
        assert!(conjugate_operator(&op, &perfect_profile(9).unwrap(), 1.0).is_err());
    }

    #[test]
    fn end_site_identities_at_revival() {
        let t = FRAC_PI_4;
        let p5 = perfect_profile(5).unwrap();
        let z5 = conjugate_operator(&PauliString::parse("IIIIZ").unwrap().into(), &p5, t).unwrap();
        assert!(max_abs(&(z5 - dense("ZIIII"))) < 1e-8);
        let xx = conjugate_operator(&PauliString::parse("XIIIX").unwrap().into(), &p5, t).unwrap();
        assert!(max_abs(&(xx - dense("YIIIY"))) < 1e-8);
    }

    #[test]
    fn string_coefficients_examples() {
        let c = extract_string_coefficients(&perfect_profile(5).unwrap(), FRAC_PI_4).unwrap();
        assert_abs_diff_eq!(c.values[4], 1.0, epsilon = 1e-8);
        let c0 = extract_string_coefficients(&boundary_profile(6, 0.6).unwrap(), 0.0).unwrap();
        assert_abs_diff_eq!(c0.values[0], 1.0, epsilon = 1e-14);
        let p4 = perfect_profile(4).unwrap();
        let oracle = extract_string_coefficients(&p4, 0.37).unwrap();
        let engine = propagate(&build_generator(&p4), 0.37);
        for (a, b) in oracle.values.iter().zip(&engine.values) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-8);
        }
    }

    #[test]
    fn mirror_strings_match_mirror_engine() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for n in 2..=7 {
            let p = CouplingProfile::new(n, (0..n - 1).map(|_| rng.random_range(0.2..2.0)).collect()).unwrap();
            let t = rng.random_range(-2.0..2.0);
            let oracle = extract_mirror_string_coefficients(&p, t).unwrap();
            let engine = mirror_propagate(&build_generator(&p), t);
            for (a, b) in oracle.values.iter().zip(&engine.values) {
                assert_abs_diff_eq!(*a, *b, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn thermal_medium_examples() {
        let p5 = perfect_profile(5).unwrap();
        let m0 = thermal_medium(&p5, 0.0).unwrap();
        assert_eq!(m0.n_sites(), 3);
        assert!(max_abs(&(m0.matrix() - DensityMatrix::maximally_mixed(3).matrix())) < 1e-14);
        for beta in [0.2, 1.0, 5.0] {
            let m = thermal_medium(&p5, beta).unwrap();
            m.check().unwrap();
        }

        // N = 4: medium is sites 2..3 with coupling J_2; its ground state is
        // (|01⟩ − |10⟩)/√2 at energy −2J_2.
        let p4 = perfect_profile(4).unwrap();
        let cold = thermal_medium(&p4, 50.0).unwrap();
        assert!((cold.purity() - 1.0).abs() < 1e-6);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let ground = StateVector::from_amplitudes(
            2,
            vec![0.0, h, -h, 0.0].into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
        )
        .unwrap();
        let overlap = crate::oracle::fidelity(&cold, &ground.to_density()).unwrap();
        assert!((overlap - 1.0).abs() < 1e-6);

        assert!(thermal_medium(&perfect_profile(2).unwrap(), 1.0).is_err());
        let single = thermal_medium(&perfect_profile(3).unwrap(), 2.0).unwrap();
        assert!(max_abs(&(single.matrix() - DensityMatrix::maximally_mixed(1).matrix())) < 1e-14);
        assert!(thermal_medium(&p5, -1.0).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn case() -> impl Strategy<Value = (CouplingProfile, u64, f64)> {
            (2usize..=7).prop_flat_map(|n| {
                (
                    prop::collection::vec(0.1f64..2.5, n - 1).prop_map(move |c| CouplingProfile::new(n, c).unwrap()),
                    any::<u64>(),
                    -4.0f64..4.0,
                )
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn unitarity((p, seed, t) in case()) {
                let s = random_pure_state(p.n_sites(), &mut ChaCha8Rng::seed_from_u64(seed));
                let out = evolve(&s, &p, t).unwrap();
                prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
            }

            #[test]
            fn reversibility((p, seed, t) in case()) {
                let s = random_pure_state(p.n_sites(), &mut ChaCha8Rng::seed_from_u64(seed));
                let ev = Evolver::new(&p, 14).unwrap();
                let back = ev.evolve(&ev.evolve(&s, t).unwrap(), -t).unwrap();
                prop_assert!(s.amplitudes().iter().zip(back.amplitudes()).all(|(a, b)| (a - b).norm() < 1e-10));
            }

            #[test]
            fn magnetization_conserved((p, seed, t) in case()) {
                let s = random_pure_state(p.n_sites(), &mut ChaCha8Rng::seed_from_u64(seed));
                let out = evolve(&s, &p, t).unwrap();
                prop_assert!((out.total_magnetization() - s.total_magnetization()).abs() < 1e-10);
            }
        }
    }
}
