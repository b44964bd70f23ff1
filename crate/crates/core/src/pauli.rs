//! Pauli-string algebra, Jordan-Wigner operators and the Z2 symmetry
//! transformations that taper the four-qubit register down to two qubits.
//!
//! Spin orbitals are ordered 0↑, 0↓, 1↑, 1↓ from left to right, matching
//! qubit indices 0..3. Bitstrings are written big-endian in the same order,
//! so `|1100⟩` is the mean-field ground state with both orbital-0 spins
//! occupied.

use std::fmt;

use num_complex::Complex64;

use crate::error::Error;
use crate::math::kron;

/// Phase factor of a Pauli string, closed under multiplication.
///
/// Kept as an explicit four-element group rather than a complex number so
/// that equality stays bit-exact.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Phase {
    One,
    I,
    MinusOne,
    MinusI,
}

impl Phase {
    fn exponent(self) -> u8 {
        match self {
            Phase::One => 0,
            Phase::I => 1,
            Phase::MinusOne => 2,
            Phase::MinusI => 3,
        }
    }

    fn from_exponent(e: u8) -> Self {
        match e % 4 {
            0 => Phase::One,
            1 => Phase::I,
            2 => Phase::MinusOne,
            _ => Phase::MinusI,
        }
    }

    pub fn mul(self, other: Phase) -> Phase {
        Phase::from_exponent(self.exponent() + other.exponent())
    }

    pub fn negate(self) -> Phase {
        self.mul(Phase::MinusOne)
    }

    pub fn to_complex(self) -> Complex64 {
        match self {
            Phase::One => Complex64::new(1.0, 0.0),
            Phase::I => Complex64::new(0.0, 1.0),
            Phase::MinusOne => Complex64::new(-1.0, 0.0),
            Phase::MinusI => Complex64::new(0.0, -1.0),
        }
    }

    /// Recover a group element from a complex scalar, if it is one.
    pub fn from_complex(z: Complex64) -> Option<Phase> {
        for p in [Phase::One, Phase::I, Phase::MinusOne, Phase::MinusI] {
            if (z - p.to_complex()).norm() < 1e-9 {
                return Some(p);
            }
        }
        None
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Phase::One => Ok(()),
            Phase::I => write!(f, "i"),
            Phase::MinusOne => write!(f, "-"),
            Phase::MinusI => write!(f, "-i"),
        }
    }
}

/// Single-qubit Pauli letter.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_char(c: char) -> Option<Pauli> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn to_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn is_diagonal(self) -> bool {
        matches!(self, Pauli::I | Pauli::Z)
    }

    /// 2x2 matrix of the letter.
    pub fn matrix(self) -> nalgebra::DMatrix<Complex64> {
        let z = Complex64::new(0.0, 0.0);
        let o = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        let rows = match self {
            Pauli::I => [[o, z], [z, o]],
            Pauli::X => [[z, o], [o, z]],
            Pauli::Y => [[z, -i], [i, z]],
            Pauli::Z => [[o, z], [z, -o]],
        };
        nalgebra::DMatrix::from_fn(2, 2, |r, c| rows[r][c])
    }

    /// Product of two letters: returns (phase, letter).
    fn mul(self, other: Pauli) -> (Phase, Pauli) {
        use Pauli::*;
        match (self, other) {
            (I, p) => (Phase::One, p),
            (p, I) => (Phase::One, p),
            (X, X) | (Y, Y) | (Z, Z) => (Phase::One, I),
            (X, Y) => (Phase::I, Z),
            (Y, X) => (Phase::MinusI, Z),
            (Y, Z) => (Phase::I, X),
            (Z, Y) => (Phase::MinusI, X),
            (Z, X) => (Phase::I, Y),
            (X, Z) => (Phase::MinusI, Y),
        }
    }
}

/// Signed/phased tensor product of single-qubit Paulis.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    pub phase: Phase,
    pub letters: Vec<Pauli>,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        PauliString {
            phase: Phase::One,
            letters: vec![Pauli::I; n],
        }
    }

    /// Parse a word like `ZZXI`, optionally prefixed by `i`, `-` or `-i`.
    pub fn parse(s: &str) -> Result<Self, Error> {
        let (phase, rest) = if let Some(r) = s.strip_prefix("-i") {
            (Phase::MinusI, r)
        } else if let Some(r) = s.strip_prefix('-') {
            (Phase::MinusOne, r)
        } else if let Some(r) = s.strip_prefix('i') {
            (Phase::I, r)
        } else {
            (Phase::One, s)
        };
        let letters = rest
            .chars()
            .map(|c| Pauli::from_char(c).ok_or_else(|| Error::Parse(format!("bad Pauli letter '{c}'"))))
            .collect::<Result<Vec<_>, _>>()?;
        if letters.is_empty() {
            return Err(Error::Parse("empty Pauli word".into()));
        }
        Ok(PauliString { phase, letters })
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn weight(&self) -> usize {
        self.letters.iter().filter(|l| **l != Pauli::I).count()
    }

    pub fn is_identity(&self) -> bool {
        self.weight() == 0
    }

    pub fn with_phase(&self, phase: Phase) -> Self {
        PauliString {
            phase,
            letters: self.letters.clone(),
        }
    }

    /// Dense matrix of the string including its phase, qubit 0 leftmost
    /// (most significant).
    pub fn to_matrix(&self) -> nalgebra::DMatrix<Complex64> {
        let mut m = nalgebra::DMatrix::from_element(1, 1, self.phase.to_complex());
        for l in &self.letters {
            m = kron(&m, &l.matrix());
        }
        m
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.phase)?;
        for l in &self.letters {
            write!(f, "{}", l.to_char())?;
        }
        Ok(())
    }
}

/// Product `a * b` with the accumulated phase.
pub fn pauli_mul(a: &PauliString, b: &PauliString) -> Result<PauliString, Error> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let mut phase = a.phase.mul(b.phase);
    let mut letters = Vec::with_capacity(a.len());
    for (&la, &lb) in a.letters.iter().zip(&b.letters) {
        let (p, l) = la.mul(lb);
        phase = phase.mul(p);
        letters.push(l);
    }
    Ok(PauliString { phase, letters })
}

/// Spin label of an orbital.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Spin {
    Up,
    Down,
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Spin::Up => write!(f, "u"),
            Spin::Down => write!(f, "d"),
        }
    }
}

/// Kind of second-quantized operator carried by a circuit.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum FermionKind {
    Create,
    Annihilate,
    Number,
}

/// Creation/annihilation/number operator on orbital `p` with spin `σ`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct FermionOp {
    pub orbital: usize,
    pub spin: Spin,
    pub kind: FermionKind,
}

impl FermionOp {
    pub fn new(orbital: usize, spin: Spin, kind: FermionKind) -> Self {
        FermionOp { orbital, spin, kind }
    }

    pub fn number(orbital: usize, spin: Spin) -> Self {
        Self::new(orbital, spin, FermionKind::Number)
    }

    /// Qubit index under the ordering 0↑, 0↓, 1↑, 1↓.
    pub fn qubit(&self) -> usize {
        2 * self.orbital + if self.spin == Spin::Down { 1 } else { 0 }
    }

    /// Symmetry sector of the states this operator produces from the
    /// ground state.
    pub fn sector(&self) -> SymmetrySector {
        match self.kind {
            FermionKind::Number => SymmetrySector::SpinBalanced,
            _ => match self.spin {
                Spin::Up => SymmetrySector::UpSpin,
                Spin::Down => SymmetrySector::DownSpin,
            },
        }
    }
}

impl fmt::Display for FermionOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.orbital, self.spin)
    }
}

/// Jordan-Wigner X part: Z-string followed by X on the operator's qubit.
pub fn jw_x_bar(op: FermionOp) -> PauliString {
    let q = op.qubit();
    let mut letters = vec![Pauli::I; 4];
    for k in 0..q {
        letters[k] = Pauli::Z;
    }
    letters[q] = Pauli::X;
    PauliString {
        phase: Phase::One,
        letters,
    }
}

/// Jordan-Wigner Y part with the `i` prefix folded into the phase, the
/// form tabulated by the tapering table.
pub fn jw_i_y_bar(op: FermionOp) -> PauliString {
    let q = op.qubit();
    let mut letters = vec![Pauli::I; 4];
    for k in 0..q {
        letters[k] = Pauli::Z;
    }
    letters[q] = Pauli::Y;
    PauliString {
        phase: Phase::I,
        letters,
    }
}

/// Plain Z on the operator's qubit.
pub fn jw_z(op: FermionOp) -> PauliString {
    let q = op.qubit();
    let mut letters = vec![Pauli::I; 4];
    letters[q] = Pauli::Z;
    PauliString {
        phase: Phase::One,
        letters,
    }
}

/// Jordan-Wigner decomposition into (real coefficient, Pauli string) terms.
///
/// With qubit value 1 meaning "occupied", the annihilation operator is
/// (X̄ + iȲ)/2 and creation is (X̄ − iȲ)/2; the number operator is
/// (I − Z)/2 = a†a. The explicit `i` rides in the string's phase so the
/// coefficients stay real and the strings unit-magnitude.
pub fn jordan_wigner(op: FermionOp) -> Vec<(f64, PauliString)> {
    match op.kind {
        FermionKind::Annihilate => vec![(0.5, jw_x_bar(op)), (0.5, jw_i_y_bar(op))],
        FermionKind::Create => {
            let minus_i_y = jw_i_y_bar(op).with_phase(Phase::MinusI);
            vec![(0.5, jw_x_bar(op)), (0.5, minus_i_y)]
        }
        FermionKind::Number => vec![(0.5, PauliString::identity(4)), (-0.5, jw_z(op))],
    }
}

/// The three Z2 state families used by the tapering.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum SymmetrySector {
    /// ⟨ZIZI⟩ = +1, ⟨IZIZ⟩ = −1.
    UpSpin,
    /// ⟨ZIZI⟩ = −1, ⟨IZIZ⟩ = +1.
    DownSpin,
    /// ⟨ZIZI⟩ = −1, ⟨IZIZ⟩ = −1; contains the ground state.
    SpinBalanced,
}

impl SymmetrySector {
    /// First-two-qubit values of transformed states in this sector.
    pub fn truncated_bits(self) -> (u8, u8) {
        match self {
            SymmetrySector::UpSpin => (0, 1),
            SymmetrySector::DownSpin => (1, 0),
            SymmetrySector::SpinBalanced => (1, 1),
        }
    }
}

impl fmt::Display for SymmetrySector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymmetrySector::UpSpin => write!(f, "up-spin"),
            SymmetrySector::DownSpin => write!(f, "down-spin"),
            SymmetrySector::SpinBalanced => write!(f, "spin-balanced"),
        }
    }
}

// Conjugation action of CNOT(control, target) on a (control, target) letter
// pair. Checked exhaustively against dense conjugation in the tests.
fn cnot_conjugate_pair(c: Pauli, t: Pauli) -> (Phase, Pauli, Pauli) {
    use Pauli::*;
    match (c, t) {
        (I, I) => (Phase::One, I, I),
        (I, X) => (Phase::One, I, X),
        (I, Y) => (Phase::One, Z, Y),
        (I, Z) => (Phase::One, Z, Z),
        (X, I) => (Phase::One, X, X),
        (X, X) => (Phase::One, X, I),
        (X, Y) => (Phase::One, Y, Z),
        (X, Z) => (Phase::MinusOne, Y, Y),
        (Y, I) => (Phase::One, Y, X),
        (Y, X) => (Phase::One, Y, I),
        (Y, Y) => (Phase::MinusOne, X, Z),
        (Y, Z) => (Phase::One, X, Y),
        (Z, I) => (Phase::One, Z, I),
        (Z, X) => (Phase::One, Z, X),
        (Z, Y) => (Phase::One, I, Y),
        (Z, Z) => (Phase::One, I, Z),
    }
}

fn conjugate_cnot(p: &PauliString, control: usize, target: usize) -> PauliString {
    let mut out = p.clone();
    let (ph, c, t) = cnot_conjugate_pair(p.letters[control], p.letters[target]);
    out.letters[control] = c;
    out.letters[target] = t;
    out.phase = out.phase.mul(ph);
    out
}

fn conjugate_swap(p: &PauliString, a: usize, b: usize) -> PauliString {
    let mut out = p.clone();
    out.letters.swap(a, b);
    out
}

/// Conjugate a 4-qubit string by the sector's Z2 transformation. For the
/// down-spin sector the trailing overall −1 of the tapering convention is
/// applied by the caller, not here.
fn z2_conjugate(p: &PauliString, sector: SymmetrySector) -> PauliString {
    // All sectors share CNOT(2,0) then CNOT(3,1); the third gate differs.
    let p = conjugate_cnot(p, 2, 0);
    let p = conjugate_cnot(&p, 3, 1);
    match sector {
        SymmetrySector::UpSpin => p,
        SymmetrySector::DownSpin => conjugate_swap(&p, 2, 3),
        SymmetrySector::SpinBalanced => conjugate_cnot(&p, 2, 3),
    }
}

/// Matrix element ⟨b|P|k⟩ of a single letter between computational basis
/// states.
fn letter_element(l: Pauli, bra: u8, ket: u8) -> Complex64 {
    let m = l.matrix();
    m[(bra as usize, ket as usize)]
}

/// Taper a 4-qubit operator string to two qubits.
///
/// Conjugates by the sector's transformation, contracts qubits 0–1 against
/// the transformed bra/ket bit values, and folds the resulting scalar into
/// the phase. The bra bits come from the sector of the states the operator
/// maps onto; the ket is always a spin-balanced state (the ground state),
/// whose first two transformed bits are 1, 1.
pub fn z2_transform_pauli(p: &PauliString, sector: SymmetrySector) -> Result<PauliString, Error> {
    if p.len() != 4 {
        return Err(Error::LengthMismatch {
            left: p.len(),
            right: 4,
        });
    }
    let conj = z2_conjugate(p, sector);
    let (b0, b1) = sector.truncated_bits();
    let scalar = letter_element(conj.letters[0], b0, 1) * letter_element(conj.letters[1], b1, 1);
    if scalar.norm() < 1e-12 {
        return Err(Error::SectorMismatch(format!(
            "{p} has zero contraction on the {sector} sector"
        )));
    }
    let mut phase = conj
        .phase
        .mul(Phase::from_complex(scalar).expect("contraction scalar is a fourth root of unity"));
    if sector == SymmetrySector::DownSpin {
        phase = phase.negate();
    }
    Ok(PauliString {
        phase,
        letters: vec![conj.letters[2], conj.letters[3]],
    })
}

fn apply_cnot_bits(bits: &mut [u8; 4], control: usize, target: usize) {
    bits[target] ^= bits[control];
}

/// Bit action of the sector's transformation: (symmetry bits, kept bits).
/// The first pair equals the Z2 parities of the input, so any state can be
/// pushed through any sector's transform; the caller decides whether the
/// parities are the expected ones.
pub(crate) fn z2_bit_action(bits: [u8; 4], sector: SymmetrySector) -> ([u8; 2], [u8; 2]) {
    let mut b = bits;
    apply_cnot_bits(&mut b, 2, 0);
    apply_cnot_bits(&mut b, 3, 1);
    match sector {
        SymmetrySector::UpSpin => {}
        SymmetrySector::DownSpin => b.swap(2, 3),
        SymmetrySector::SpinBalanced => apply_cnot_bits(&mut b, 2, 3),
    }
    ([b[0], b[1]], [b[2], b[3]])
}

/// Map a 4-qubit computational bitstring of the sector to its tapered
/// 2-bit form.
pub fn z2_transform_state(bits: [u8; 4], sector: SymmetrySector) -> Result<[u8; 2], Error> {
    let (sym, kept) = z2_bit_action(bits, sector);
    let (e0, e1) = sector.truncated_bits();
    if sym != [e0, e1] {
        return Err(Error::SectorMismatch(format!(
            "bitstring {}{}{}{} is not in the {sector} sector",
            bits[0], bits[1], bits[2], bits[3]
        )));
    }
    Ok(kept)
}

/// Parse a bitstring like `1100` into bit array form.
pub fn parse_bits(s: &str) -> Result<[u8; 4], Error> {
    let v: Vec<u8> = s
        .chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            _ => Err(Error::Parse(format!("bad bit '{c}'"))),
        })
        .collect::<Result<_, _>>()?;
    v.try_into()
        .map_err(|_| Error::Parse(format!("expected 4 bits, got '{s}'")))
}
