//! Exact 2^N engine: states, Pauli algebra, unitary evolution under the XX
//! Hamiltonian, projective measurement, partial trace and fidelity.
//!
//! Basis ordering: site 1 is the most significant bit of a basis index, so
//! for N = 3 the index 0b100 is |100⟩ with site 1 excited.

mod evolution;
mod measure;
mod pauli;
mod state;

pub(crate) use evolution::medium_evolver;
pub use evolution::{
    conjugate_operator, evolve, extract_mirror_string_coefficients, extract_string_coefficients, thermal_chain,
    thermal_medium, EvolutionMethod, Evolver,
};
pub use measure::{fidelity, measure_site, project_site, reduced_state, Axis, PartialTrace};
pub(crate) use measure::{project_density, project_in_place};
pub use pauli::{Pauli, PauliString, PauliSum, Phase};
pub use state::{random_pure_state, DensityMatrix, StateVector};

use crate::error::{Error, Result};

pub const DEFAULT_ORACLE_CAP: usize = 14;

/// Dense operators (conjugation, coefficient extraction) stop here.
pub const DENSE_OPERATOR_CAP: usize = 8;

pub fn check_cap(n_sites: usize, cap: usize) -> Result<()> {
    if n_sites > cap {
        Err(Error::ResourceLimit { sites: n_sites, cap })
    } else {
        Ok(())
    }
}

/// Bit of `site` (1-based) in a basis index of an `n`-site register.
#[inline]
pub fn site_mask(n: usize, site: usize) -> usize {
    debug_assert!((1..=n).contains(&site));
    1 << (n - site)
}
