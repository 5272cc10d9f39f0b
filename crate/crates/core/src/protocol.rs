//! Measurement-based state transfer that works for any medium state.
//!
//! Sequence on an N-site chain:
//!
//! 1. site 1 holds ρ_in, sites 2..N−1 the medium, site N a receiver state;
//! 2. site N is projected onto |±_N⟩ = (|0⟩ ± i^N |1⟩)/√2 (outcome a);
//! 3. the chain evolves under Ĥ for the transfer time;
//! 4. site 1 is measured in the X basis (outcome b, +1 ↔ |+⟩);
//! 5. site N is corrected with T^N when ab = +1 and with T^N·Z when ab = −1,
//!    where T = diag(1, i).
//!
//! Mixed inputs and mediums go through their spectral ensembles by default;
//! [`Engine::DensityMatrix`] evolves the full density matrix instead.

use std::f64::consts::{FRAC_PI_4, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::chain::CouplingProfile;
use crate::error::{invalid, Error, Result};
use crate::oracle::{
    check_cap, fidelity, random_pure_state, thermal_chain, Axis, DensityMatrix, Evolver, PartialTrace, Pauli,
    PauliString, Phase, StateVector, DEFAULT_ORACLE_CAP, DENSE_OPERATOR_CAP,
};
use crate::oracle::{medium_evolver, project_density, project_in_place};

const BRANCH_FLOOR: f64 = 1e-14;
const ENSEMBLE_FLOOR: f64 = 1e-15;
const CONDITION_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum ThermalScope {
    /// Gibbs state of the decoupled medium sub-chain (sites 2..N−1).
    #[default]
    SubChain,
    /// Gibbs state of the whole chain, marginalized onto sites 2..N; replaces
    /// the receiver state.
    FullChain,
}

/// Initial state of the medium (sites 2..N−1).
#[derive(Debug, Clone, PartialEq)]
pub enum MediumSpec {
    AllZero,
    Pure(StateVector),
    Mixed(DensityMatrix),
    /// Haar-random pure state drawn from the config seed.
    RandomPure,
    MaximallyMixed,
    Thermal {
        beta: f64,
        scope: ThermalScope,
    },
}

impl MediumSpec {
    pub fn thermal(beta: f64) -> Self {
        MediumSpec::Thermal { beta, scope: ThermalScope::SubChain }
    }

    pub fn describe(&self) -> String {
        match self {
            MediumSpec::AllZero => "zero".into(),
            MediumSpec::Pure(_) => "explicit-pure".into(),
            MediumSpec::Mixed(_) => "explicit-mixed".into(),
            MediumSpec::RandomPure => "random".into(),
            MediumSpec::MaximallyMixed => "mixed".into(),
            MediumSpec::Thermal { beta, scope: ThermalScope::SubChain } => format!("thermal:{beta}"),
            MediumSpec::Thermal { beta, scope: ThermalScope::FullChain } => format!("thermal-full:{beta}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum CorrectionMode {
    /// T^N, followed by Z on the ab = −1 branch.
    #[default]
    Full,
    /// T^N on every branch; the conditional Z is skipped.
    FrameOnly,
    /// No correction at all.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum Engine {
    #[default]
    Ensemble,
    DensityMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    pub profile: CouplingProfile,
    pub evolution_time: f64,
    pub input_state: DensityMatrix,
    pub medium: MediumSpec,
    /// State of site N before its projection.
    pub receiver: DensityMatrix,
    pub seed: u64,
    pub oracle_cap: usize,
    pub correction: CorrectionMode,
    pub engine: Engine,
}

impl ProtocolConfig {
    /// Defaults: t = π/4, all-zero medium, receiver |0⟩, seed 0.
    pub fn new(profile: CouplingProfile, input_state: DensityMatrix) -> Self {
        Self {
            profile,
            evolution_time: FRAC_PI_4,
            input_state,
            medium: MediumSpec::AllZero,
            receiver: StateVector::zero(1).to_density(),
            seed: 0,
            oracle_cap: DEFAULT_ORACLE_CAP,
            correction: CorrectionMode::Full,
            engine: Engine::Ensemble,
        }
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.evolution_time = t;
        self
    }

    pub fn with_medium(mut self, medium: MediumSpec) -> Self {
        self.medium = medium;
        self
    }

    pub fn with_receiver(mut self, receiver: DensityMatrix) -> Self {
        self.receiver = receiver;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.oracle_cap = cap;
        self
    }

    pub fn with_correction(mut self, correction: CorrectionMode) -> Self {
        self.correction = correction;
        self
    }

    pub fn with_engine(mut self, engine: Engine) -> Self {
        self.engine = engine;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_cap(self.profile.n_sites(), self.oracle_cap)?;
        if !self.evolution_time.is_finite() {
            return Err(invalid("evolution time must be finite"));
        }
        for (name, rho) in [("input", &self.input_state), ("receiver", &self.receiver)] {
            if rho.n_sites() != 1 {
                return Err(invalid(format!("{name} state must be a single qubit")));
            }
            rho.check()?;
        }
        let medium_sites = self.profile.n_sites() - 2;
        match &self.medium {
            MediumSpec::Pure(s) if s.n_sites() != medium_sites => {
                Err(invalid(format!("medium state has {} sites, chain medium has {medium_sites}", s.n_sites())))
            }
            MediumSpec::Mixed(r) if r.n_sites() != medium_sites => {
                Err(invalid(format!("medium state has {} sites, chain medium has {medium_sites}", r.n_sites())))
            }
            MediumSpec::Mixed(r) => r.check(),
            MediumSpec::Pure(s) if (s.norm_sqr() - 1.0).abs() > 1e-12 => Err(invalid("medium state is not normalized")),
            MediumSpec::Thermal { beta, .. } if !(*beta >= 0.0) || !beta.is_finite() => {
                Err(invalid(format!("inverse temperature must be finite and >= 0, got {beta}")))
            }
            _ => Ok(()),
        }
    }
}

/// Output of one protocol run (one outcome branch).
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolResult {
    pub outcome_pre: i8,
    pub outcome_post: i8,
    pub output_state: DensityMatrix,
    pub fidelity: f64,
    pub correction: String,
}

/// JSON shape of a [`ProtocolResult`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProtocolRecord {
    pub outcome_pre: i8,
    pub outcome_post: i8,
    pub fidelity: f64,
    pub output_bloch: [f64; 3],
    pub correction: String,
}

impl ProtocolResult {
    pub fn record(&self) -> ProtocolRecord {
        ProtocolRecord {
            outcome_pre: self.outcome_pre,
            outcome_post: self.outcome_post,
            fidelity: self.fidelity,
            output_bloch: self.output_state.bloch().expect("output is a single qubit"),
            correction: self.correction.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.record())?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub probability: f64,
    pub result: ProtocolResult,
}

/// |±_N⟩ basis used for the pre-evolution projection; the phase is i^N exactly.
pub fn receiver_axis(n: usize) -> Axis {
    Axis::Equatorial(Phase::from_power((n % 4) as u8).value())
}

/// Correction unitary for outcome product `s`, with its label.
pub fn correction_unitary(n: usize, s: i8, mode: CorrectionMode) -> (DMatrix<Complex64>, String) {
    let tn = Phase::from_power((n % 4) as u8).value();
    let one = Complex64::new(1.0, 0.0);
    let diag =
        |d: Complex64, label: String| (DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![one, d])), label);
    match (mode, s) {
        (CorrectionMode::None, _) => diag(one, "none".into()),
        (CorrectionMode::Full, -1) => diag(-tn, format!("T^{n}*Z")),
        _ => diag(tn, format!("T^{n}")),
    }
}

fn ensemble_of(rho: &DensityMatrix) -> Vec<(f64, StateVector)> {
    rho.eigen_ensemble(ENSEMBLE_FLOOR)
}

fn product_ensemble(a: &[(f64, StateVector)], b: &[(f64, StateVector)]) -> Vec<(f64, StateVector)> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for (wa, sa) in a {
        for (wb, sb) in b {
            out.push((wa * wb, sa.tensor(sb)));
        }
    }
    out
}

fn medium_ensemble(config: &ProtocolConfig) -> Result<Vec<(f64, StateVector)>> {
    let n = config.profile.n_sites();
    let m = n - 2;
    Ok(match &config.medium {
        MediumSpec::AllZero => vec![(1.0, StateVector::zero(m))],
        MediumSpec::Pure(s) => vec![(1.0, s.clone())],
        MediumSpec::Mixed(r) => ensemble_of(r),
        MediumSpec::RandomPure => vec![(1.0, random_pure_state(m, &mut ChaCha8Rng::seed_from_u64(config.seed)))],
        MediumSpec::MaximallyMixed => {
            let w = 1.0 / (1usize << m) as f64;
            (0..1usize << m).map(|b| Ok((w, StateVector::basis(m, b)?))).collect::<Result<_>>()?
        }
        MediumSpec::Thermal { beta, .. } => {
            if m == 0 {
                return Ok(vec![(1.0, StateVector::zero(0))]);
            }
            let states = medium_evolver(&config.profile, config.oracle_cap)?.eigenstates();
            let e0 = states[0].0;
            let weights: Vec<f64> = states.iter().map(|(e, _)| (-beta * (e - e0)).exp()).collect();
            let z: f64 = weights.iter().sum();
            states
                .into_iter()
                .zip(weights)
                .filter(|(_, w)| w / z > ENSEMBLE_FLOOR)
                .map(|((_, s), w)| (w / z, s))
                .collect()
        }
    })
}

fn full_chain_environment(config: &ProtocolConfig, beta: f64) -> Result<DensityMatrix> {
    let n = config.profile.n_sites();
    let keep: Vec<usize> = (2..=n).collect();
    thermal_chain(&config.profile, beta, config.oracle_cap)?.reduced_state(&keep)
}

/// Pure-state ensemble of sites 2..N.
fn environment_ensemble(config: &ProtocolConfig) -> Result<Vec<(f64, StateVector)>> {
    if let MediumSpec::Thermal { beta, scope: ThermalScope::FullChain } = config.medium {
        return Ok(ensemble_of(&full_chain_environment(config, beta)?));
    }
    Ok(product_ensemble(&medium_ensemble(config)?, &ensemble_of(&config.receiver)))
}

/// Density matrix of sites 2..N.
fn environment_density(config: &ProtocolConfig) -> Result<DensityMatrix> {
    if let MediumSpec::Thermal { beta, scope: ThermalScope::FullChain } = config.medium {
        return full_chain_environment(config, beta);
    }
    let m = config.profile.n_sites() - 2;
    let medium = match &config.medium {
        MediumSpec::Mixed(r) => r.clone(),
        MediumSpec::MaximallyMixed => DensityMatrix::maximally_mixed(m),
        _ => {
            let dim = 1usize << m;
            let mut acc = DMatrix::<Complex64>::zeros(dim, dim);
            for (w, s) in medium_ensemble(config)? {
                acc += s.to_density().matrix() * Complex64::new(w, 0.0);
            }
            DensityMatrix::from_matrix(m, acc)?
        }
    };
    Ok(medium.tensor(&config.receiver))
}

type BranchMatrices = [[DMatrix<Complex64>; 2]; 2];

fn outcome_index(o: i8) -> usize {
    usize::from(o < 0)
}

const OUTCOMES: [i8; 2] = [1, -1];

/// Unnormalized reduced state of site N (the least significant bit).
fn last_site_block(amps: &[Complex64]) -> DMatrix<Complex64> {
    let mut m = DMatrix::<Complex64>::zeros(2, 2);
    for pair in amps.chunks_exact(2) {
        for i in 0..2 {
            for j in 0..2 {
                m[(i, j)] += pair[i] * pair[j].conj();
            }
        }
    }
    m
}

fn ensemble_branches(evolver: &Evolver, config: &ProtocolConfig) -> Result<BranchMatrices> {
    let n = config.profile.n_sites();
    let t = config.evolution_time;
    let joint = product_ensemble(&ensemble_of(&config.input_state), &environment_ensemble(config)?);
    let zero = || DMatrix::<Complex64>::zeros(2, 2);
    let mut acc: BranchMatrices = [[zero(), zero()], [zero(), zero()]];
    for (w, psi) in &joint {
        for a in OUTCOMES {
            let mut phi = psi.amplitudes().to_vec();
            if project_in_place(&mut phi, n, n, receiver_axis(n).vector(a)) * w == 0.0 {
                continue;
            }
            let chi = evolver.evolve_amplitudes(&phi, t);
            for b in OUTCOMES {
                let mut xi = chi.clone();
                project_in_place(&mut xi, n, 1, Axis::X.vector(b));
                acc[outcome_index(a)][outcome_index(b)] += last_site_block(&xi) * Complex64::new(*w, 0.0);
            }
        }
    }
    Ok(acc)
}

fn density_branches(evolver: &Evolver, config: &ProtocolConfig) -> Result<BranchMatrices> {
    let n = config.profile.n_sites();
    let rho = config.input_state.tensor(&environment_density(config)?);
    let u = evolver.unitary(config.evolution_time);
    let zero = || DMatrix::<Complex64>::zeros(2, 2);
    let mut acc: BranchMatrices = [[zero(), zero()], [zero(), zero()]];
    for a in OUTCOMES {
        let evolved = project_density(&rho, n, receiver_axis(n).vector(a)).conjugated(&u);
        for b in OUTCOMES {
            let post = project_density(&evolved, 1, Axis::X.vector(b));
            acc[outcome_index(a)][outcome_index(b)] = post.reduced_state(&[n])?.matrix().clone();
        }
    }
    Ok(acc)
}

fn finish_branch(config: &ProtocolConfig, a: i8, b: i8, unnormalized: &DMatrix<Complex64>) -> Result<Option<Branch>> {
    let p = unnormalized.trace().re;
    if p < BRANCH_FLOOR {
        return Ok(None);
    }
    let n = config.profile.n_sites();
    let (c, label) = correction_unitary(n, a * b, config.correction);
    let raw = unnormalized / Complex64::new(p, 0.0);
    let out = DensityMatrix::from_matrix(1, &c * raw * c.adjoint())
        .map_err(|e| Error::InternalConsistency(format!("corrected output is not a state: {e}")))?;
    let f = fidelity(&out, &config.input_state)?;
    Ok(Some(Branch {
        probability: p,
        result: ProtocolResult { outcome_pre: a, outcome_post: b, output_state: out, fidelity: f, correction: label },
    }))
}

fn branches_with(evolver: &Evolver, config: &ProtocolConfig) -> Result<Vec<Branch>> {
    let acc = match config.engine {
        Engine::Ensemble => ensemble_branches(evolver, config)?,
        Engine::DensityMatrix => density_branches(evolver, config)?,
    };
    let mut out = Vec::with_capacity(4);
    for a in OUTCOMES {
        for b in OUTCOMES {
            if let Some(br) = finish_branch(config, a, b, &acc[outcome_index(a)][outcome_index(b)])? {
                out.push(br);
            }
        }
    }
    Ok(out)
}

/// Every outcome pair with non-negligible probability, in the order
/// (+,+), (+,−), (−,+), (−,−).
pub fn run_protocol_branches(config: &ProtocolConfig) -> Result<Vec<Branch>> {
    config.validate()?;
    let evolver = Evolver::new(&config.profile, config.oracle_cap)?;
    branches_with(&evolver, config)
}

/// One sampled run: outcome a from its Born marginal, then b conditioned on a.
/// Deterministic in `config.seed`.
pub fn run_protocol(config: &ProtocolConfig) -> Result<ProtocolResult> {
    let branches = run_protocol_branches(config)?;
    let prob = |a: i8, b: i8| {
        branches
            .iter()
            .find(|br| br.result.outcome_pre == a && br.result.outcome_post == b)
            .map_or(0.0, |br| br.probability)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let p_plus = prob(1, 1) + prob(1, -1);
    let p_minus = prob(-1, 1) + prob(-1, -1);
    let a = if rng.random::<f64>() * (p_plus + p_minus) < p_plus { 1 } else { -1 };
    let (pa_plus, pa_minus) = (prob(a, 1), prob(a, -1));
    let b = if rng.random::<f64>() * (pa_plus + pa_minus) < pa_plus { 1 } else { -1 };
    let p_ab = prob(a, b);
    branches
        .into_iter()
        .find(|br| br.result.outcome_pre == a && br.result.outcome_post == b)
        .map(|br| br.result)
        .ok_or(Error::ZeroProbability { site: 1, outcome: b, probability: p_ab })
}

/// Probability-weighted fidelity over all branches.
pub fn branch_averaged_fidelity(branches: &[Branch]) -> f64 {
    let total: f64 = branches.iter().map(|b| b.probability).sum();
    branches.iter().map(|b| b.probability * b.result.fidelity).sum::<f64>() / total
}

/// How input states are drawn for [`average_fidelity`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum InputSampling {
    /// Uniform on the Bloch sphere.
    Haar(usize),
    /// The six axial states ±x, ±y, ±z.
    Axial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FidelityEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

pub const AXIAL_STATES: [&str; 6] = ["+x", "-x", "+y", "-y", "0", "1"];

fn sample_inputs(sampling: InputSampling, rng: &mut ChaCha8Rng) -> Vec<StateVector> {
    match sampling {
        InputSampling::Axial => AXIAL_STATES.iter().map(|s| StateVector::axial(s).expect("known name")).collect(),
        InputSampling::Haar(k) => (0..k)
            .map(|_| {
                let cos_theta: f64 = rng.random_range(-1.0..=1.0);
                let phi: f64 = rng.random_range(0.0..2.0 * PI);
                StateVector::qubit(cos_theta.acos(), phi)
            })
            .collect(),
    }
}

/// Mean branch-averaged fidelity over sampled inputs and seeded random pure
/// mediums, with its standard error. Evaluation is parallel; the reduction
/// order is fixed, so results do not depend on the thread count.
pub fn average_fidelity(
    profile: &CouplingProfile,
    t: f64,
    inputs: InputSampling,
    n_medium_samples: usize,
    seed: u64,
    cap: usize,
) -> Result<FidelityEstimate> {
    if n_medium_samples == 0 {
        return Err(invalid("need at least one medium sample"));
    }
    check_cap(profile.n_sites(), cap)?;
    let evolver = Evolver::new(profile, cap)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states = sample_inputs(inputs, &mut rng);
    if states.is_empty() {
        return Err(invalid("need at least one input sample"));
    }
    let medium_seeds: Vec<u64> = (0..n_medium_samples).map(|_| rng.random()).collect();
    let jobs: Vec<(usize, u64)> = (0..states.len()).flat_map(|i| medium_seeds.iter().map(move |&s| (i, s))).collect();
    let values = jobs
        .par_iter()
        .map(|&(i, s)| {
            let config = ProtocolConfig::new(profile.clone(), states[i].to_density())
                .with_time(t)
                .with_medium(MediumSpec::RandomPure)
                .with_seed(s)
                .with_cap(cap);
            branches_with(&evolver, &config).map(|b| branch_averaged_fidelity(&b))
        })
        .collect::<Result<Vec<f64>>>()?;
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    let std_error = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0) / k).sqrt()
    } else {
        0.0
    };
    Ok(FidelityEstimate { mean, std_error, samples: values.len() })
}

fn embed(n: usize, site: usize, op: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let id = DMatrix::<Complex64>::identity(2, 2);
    let mut m = DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
    for s in 1..=n {
        m = m.kronecker(if s == site { op } else { &id });
    }
    m
}

fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Operators of the generalized transfer condition: `after` is the
/// measurement observable of site 1 after the evolution, `decode` the unitary
/// applied to site N, and `before` the observable whose eigenbasis site N is
/// projected onto first.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferTriplet {
    pub after: DMatrix<Complex64>,
    pub decode: DMatrix<Complex64>,
    pub before: DMatrix<Complex64>,
}

impl TransferTriplet {
    pub fn identity() -> Self {
        let id = DMatrix::identity(2, 2);
        Self { after: id.clone(), decode: id.clone(), before: id }
    }

    /// The XX protocol's own operators: X on site 1, T^N on site N, and
    /// cos(Nπ/2)X + sin(Nπ/2)Y, whose +1 eigenvector is |+_N⟩.
    pub fn xx_protocol(n: usize) -> Self {
        let phase = Phase::from_power((n % 4) as u8).value();
        let before =
            Pauli::X.matrix() * Complex64::new(phase.re, 0.0) + Pauli::Y.matrix() * Complex64::new(phase.im, 0.0);
        Self { after: Pauli::X.matrix(), decode: correction_unitary(n, 1, CorrectionMode::Full).0, before }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionRow {
    pub observable: char,
    pub j: u8,
    pub k: u8,
    pub deviation: f64,
    pub passes: bool,
}

/// Checks B_1(t)^j · (C† O C)_N(t) = O_1 · D_N^k at the end pair (1, N) for
/// O = X, Y, Z. With `exponents = None` the best (j, k) ∈ {0,1}² is reported
/// per observable.
pub fn verify_transfer_condition(
    profile: &CouplingProfile,
    t: f64,
    triplet: &TransferTriplet,
    exponents: Option<[(u8, u8); 3]>,
) -> Result<Vec<ConditionRow>> {
    let n = profile.n_sites();
    check_cap(n, DENSE_OPERATOR_CAP)?;
    for m in [&triplet.after, &triplet.decode, &triplet.before] {
        if m.nrows() != 2 || m.ncols() != 2 {
            return Err(invalid("triplet operators must be 2x2"));
        }
    }
    let u = Evolver::new(profile, DENSE_OPERATOR_CAP)?.unitary(t);
    let heis = |m: &DMatrix<Complex64>| u.adjoint() * m * &u;
    let after_t = heis(&embed(n, 1, &triplet.after));
    let before_n = embed(n, n, &triplet.before);
    let c = &triplet.decode;
    [('X', Pauli::X), ('Y', Pauli::Y), ('Z', Pauli::Z)]
        .iter()
        .enumerate()
        .map(|(idx, &(name, p))| {
            let o = p.matrix();
            let target_t = heis(&embed(n, n, &(c.adjoint() * &o * c)));
            let o1 = embed(n, 1, &o);
            let candidates: Vec<(u8, u8)> = match exponents {
                Some(e) => vec![e[idx]],
                None => vec![(0, 0), (0, 1), (1, 0), (1, 1)],
            };
            let mut best: Option<ConditionRow> = None;
            for (j, k) in candidates {
                let lhs = if j == 1 { &after_t * &target_t } else { target_t.clone() };
                let rhs = if k == 1 { &o1 * &before_n } else { o1.clone() };
                let deviation = max_abs(&(lhs - rhs));
                if best.as_ref().is_none_or(|b| deviation < b.deviation) {
                    best = Some(ConditionRow {
                        observable: name,
                        j,
                        k,
                        deviation,
                        passes: deviation < CONDITION_TOLERANCE,
                    });
                }
            }
            Ok(best.expect("at least one exponent pair"))
        })
        .collect()
}

pub fn condition_passes(rows: &[ConditionRow]) -> bool {
    rows.iter().all(|r| r.passes)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityRow {
    pub label: String,
    pub deviation: f64,
    pub passes: bool,
}

/// Two-site Heisenberg identities for the mirror pair (i, N−i+1):
/// Z_{N−i+1}(t) = Z_i for every N; for even N X_iX_{N−i+1}(t) = X_iX_{N−i+1}
/// and X_iY_{N−i+1}(t) = Y_iX_{N−i+1}; for odd N X_iX_{N−i+1}(t) = Y_iY_{N−i+1}
/// and X_iY_{N−i+1}(t) = −X_iY_{N−i+1}.
pub fn verify_end_identities(profile: &CouplingProfile, t: f64, i: usize) -> Result<Vec<IdentityRow>> {
    let n = profile.n_sites();
    let j = n + 1 - i;
    if i == 0 || i >= j {
        return Err(invalid(format!("site {i} has no distinct mirror partner in a {n}-site chain")));
    }
    check_cap(n, DENSE_OPERATOR_CAP)?;
    let u = Evolver::new(profile, DENSE_OPERATOR_CAP)?.unitary(t);
    let pair = |a: Pauli, b: Pauli| PauliString::from_sites(n, &[(i, a), (j, b)]).map(|s| s.to_dense());
    let mut checks = vec![(format!("I{i} Z{j}(t) = Z{i} I{j}"), pair(Pauli::I, Pauli::Z)?, pair(Pauli::Z, Pauli::I)?)];
    if n % 2 == 0 {
        checks.push((format!("X{i} X{j}(t) = X{i} X{j}"), pair(Pauli::X, Pauli::X)?, pair(Pauli::X, Pauli::X)?));
        checks.push((format!("X{i} Y{j}(t) = Y{i} X{j}"), pair(Pauli::X, Pauli::Y)?, pair(Pauli::Y, Pauli::X)?));
    } else {
        checks.push((format!("X{i} X{j}(t) = Y{i} Y{j}"), pair(Pauli::X, Pauli::X)?, pair(Pauli::Y, Pauli::Y)?));
        checks.push((format!("X{i} Y{j}(t) = -X{i} Y{j}"), pair(Pauli::X, Pauli::Y)?, -pair(Pauli::X, Pauli::Y)?));
    }
    Ok(checks
        .into_iter()
        .map(|(label, op, want)| {
            let deviation = max_abs(&(u.adjoint() * op * &u - want));
            IdentityRow { label, deviation, passes: deviation < CONDITION_TOLERANCE }
        })
        .collect())
}
