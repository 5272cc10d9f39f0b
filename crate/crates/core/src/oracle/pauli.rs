use std::fmt;
use std::ops::Mul;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::oracle::StateVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix(self) -> DMatrix<Complex64> {
        let o = Complex64::new(0.0, 0.0);
        let l = Complex64::new(1.0, 0.0);
        let i = Complex64::i();
        let e = match self {
            Pauli::I => [l, o, o, l],
            Pauli::X => [o, l, l, o],
            Pauli::Y => [o, -i, i, o],
            Pauli::Z => [l, o, o, -l],
        };
        DMatrix::from_row_slice(2, 2, &e)
    }

    /// self·other = i^k · result.
    fn product(self, other: Pauli) -> (u8, Pauli) {
        use Pauli::*;
        match (self, other) {
            (I, p) | (p, I) => (0, p),
            (a, b) if a == b => (0, I),
            (X, Y) => (1, Z),
            (Y, Z) => (1, X),
            (Z, X) => (1, Y),
            (Y, X) => (3, Z),
            (Z, Y) => (3, X),
            (X, Z) => (3, Y),
            _ => unreachable!(),
        }
    }

    fn flips(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }

    fn letter(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// Global phase i^k, k ∈ {0, 1, 2, 3}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_power(k: u8) -> Self {
        Phase(k % 4)
    }

    pub fn value(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }
}

impl Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

/// Signed tensor product of single-site Paulis.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    letters: Vec<Pauli>,
    phase: Phase,
}

impl PauliString {
    pub fn identity(n_sites: usize) -> Self {
        Self { letters: vec![Pauli::I; n_sites], phase: Phase::ONE }
    }

    pub fn new(letters: Vec<Pauli>, phase: Phase) -> Self {
        Self { letters, phase }
    }

    /// Letters on the given 1-based sites, identity elsewhere.
    pub fn from_sites(n_sites: usize, sites: &[(usize, Pauli)]) -> Result<Self> {
        let mut s = Self::identity(n_sites);
        for &(site, p) in sites {
            if site == 0 || site > n_sites {
                return Err(invalid(format!("site {site} outside 1..={n_sites}")));
            }
            s = &s * &Self::single(n_sites, site, p);
        }
        Ok(s)
    }

    pub fn single(n_sites: usize, site: usize, p: Pauli) -> Self {
        let mut s = Self::identity(n_sites);
        s.letters[site - 1] = p;
        s
    }

    /// `"ZZZZX"`, optionally prefixed by `-`, `i` or `-i`.
    pub fn parse(s: &str) -> Result<Self> {
        let (phase, body) = if let Some(r) = s.strip_prefix("-i") {
            (Phase::MINUS_I, r)
        } else if let Some(r) = s.strip_prefix('-') {
            (Phase::MINUS_ONE, r)
        } else if let Some(r) = s.strip_prefix('i') {
            (Phase::I, r)
        } else {
            (Phase::ONE, s.strip_prefix('+').unwrap_or(s))
        };
        let letters = body
            .chars()
            .map(|c| match c {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                _ => Err(invalid(format!("bad Pauli letter '{c}' in '{s}'"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { letters, phase })
    }

    /// Jordan–Wigner string `Z_1..Z_{k−1} X_k` (k odd) or `.. Y_k` (k even).
    pub fn jordan_wigner(n_sites: usize, k: usize) -> Self {
        let mut s = Self::identity(n_sites);
        for l in &mut s.letters[..k - 1] {
            *l = Pauli::Z;
        }
        s.letters[k - 1] = if k % 2 == 1 { Pauli::X } else { Pauli::Y };
        s
    }

    /// Mirror image of [`PauliString::jordan_wigner`], anchored at site N.
    pub fn jordan_wigner_mirrored(n_sites: usize, k: usize) -> Self {
        let mut s = Self::jordan_wigner(n_sites, k);
        s.letters.reverse();
        s
    }

    pub fn n_sites(&self) -> usize {
        self.letters.len()
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn with_phase(mut self, phase: Phase) -> Self {
        self.phase = phase;
        self
    }

    pub fn is_hermitian(&self) -> bool {
        self.phase.0 % 2 == 0
    }

    fn flip_mask(&self) -> usize {
        let n = self.letters.len();
        self.letters.iter().enumerate().filter(|(_, p)| p.flips()).fold(0, |m, (k, _)| m | 1 << (n - 1 - k))
    }

    /// P|b⟩ = c(b)|b ⊕ flip⟩; returns c(b).
    fn column_phase(&self, b: usize) -> Complex64 {
        let n = self.letters.len();
        let mut power = self.phase.0 as u32;
        let mut sign = false;
        for (k, p) in self.letters.iter().enumerate() {
            let bit = (b >> (n - 1 - k)) & 1 == 1;
            match p {
                Pauli::I | Pauli::X => {}
                // Y|0⟩ = i|1⟩, Y|1⟩ = −i|0⟩
                Pauli::Y => power += if bit { 3 } else { 1 },
                Pauli::Z => sign ^= bit,
            }
        }
        let c = Phase::from_power((power % 4) as u8).value();
        if sign {
            -c
        } else {
            c
        }
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        if state.n_sites() != self.n_sites() {
            return Err(invalid("Pauli string and state sizes differ"));
        }
        let flip = self.flip_mask();
        let amps = state.amplitudes();
        let mut out = vec![Complex64::new(0.0, 0.0); amps.len()];
        for (b, &a) in amps.iter().enumerate() {
            out[b ^ flip] = self.column_phase(b) * a;
        }
        Ok(StateVector::from_raw(self.n_sites(), out))
    }

    /// Dense matrix via Kronecker products, site 1 leftmost.
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::from_element(1, 1, self.phase.value());
        for p in &self.letters {
            m = m.kronecker(&p.matrix());
        }
        m
    }

    /// Tr(P·A) in O(2^N).
    pub fn trace_product(&self, a: &DMatrix<Complex64>) -> Complex64 {
        let flip = self.flip_mask();
        (0..a.nrows()).map(|c| self.column_phase(c) * a[(c, c ^ flip)]).sum()
    }
}

impl Mul for &PauliString {
    type Output = PauliString;

    fn mul(self, rhs: &PauliString) -> PauliString {
        assert_eq!(self.n_sites(), rhs.n_sites(), "Pauli strings of different lengths");
        let mut phase = self.phase * rhs.phase;
        let letters = self
            .letters
            .iter()
            .zip(&rhs.letters)
            .map(|(&a, &b)| {
                let (k, p) = a.product(b);
                phase = phase * Phase(k);
                p
            })
            .collect();
        PauliString { letters, phase }
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.phase.0 {
            0 => "",
            1 => "i",
            2 => "-",
            _ => "-i",
        };
        write!(f, "{prefix}")?;
        for p in &self.letters {
            write!(f, "{}", p.letter())?;
        }
        Ok(())
    }
}

/// Complex linear combination of Pauli strings of one length.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    n_sites: usize,
    terms: Vec<(Complex64, PauliString)>,
}

impl PauliSum {
    pub fn new(n_sites: usize) -> Self {
        Self { n_sites, terms: Vec::new() }
    }

    pub fn add(mut self, coeff: Complex64, s: PauliString) -> Result<Self> {
        if s.n_sites() != self.n_sites {
            return Err(invalid("Pauli string length differs from the sum"));
        }
        self.terms.push((coeff, s));
        Ok(self)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn terms(&self) -> &[(Complex64, PauliString)] {
        &self.terms
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let dim = 1usize << self.n_sites;
        let mut m = DMatrix::zeros(dim, dim);
        for (c, s) in &self.terms {
            let flip = s.flip_mask();
            for b in 0..dim {
                m[(b ^ flip, b)] += c * s.column_phase(b);
            }
        }
        m
    }
}

impl From<PauliString> for PauliSum {
    fn from(s: PauliString) -> Self {
        Self { n_sites: s.n_sites(), terms: vec![(Complex64::new(1.0, 0.0), s)] }
    }
}
