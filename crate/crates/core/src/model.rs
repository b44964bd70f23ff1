//! Hamiltonian ingestion and the exact-diagonalization bookkeeping that
//! feeds circuit construction and the frequency-domain assembly: energies,
//! symmetry-sector eigenstates in both 4-qubit and tapered 2-qubit form,
//! and the ground-state preparation unitary.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::Error;
use crate::math::{fix_vector_phase, CMat};
use crate::pauli::{z2_bit_action, PauliString, SymmetrySector};

/// Hamiltonian as a list of real-coefficient Pauli terms on four qubits.
/// Coefficients are interpreted in eV.
#[derive(Clone, Debug)]
pub struct QubitHamiltonian {
    pub terms: Vec<(f64, PauliString)>,
    pub label: String,
}

/// Basis bitstrings of each Z2 symmetry block, in a fixed order.
pub fn sector_bitstrings(sector: SymmetrySector) -> [&'static str; 4] {
    match sector {
        SymmetrySector::UpSpin => ["1110", "1011", "0100", "0001"],
        SymmetrySector::DownSpin => ["1101", "0111", "1000", "0010"],
        SymmetrySector::SpinBalanced => ["1100", "1001", "0110", "0011"],
    }
}

fn bit_index(s: &str) -> usize {
    usize::from_str_radix(s, 2).unwrap()
}

/// The even-even block (⟨ZIZI⟩ = ⟨IZIZ⟩ = +1) that the pipeline never
/// touches but the classifier still accounts for.
const OTHER_BLOCK: [usize; 4] = [0b0000, 0b1111, 0b1010, 0b0101];

impl QubitHamiltonian {
    /// Parse the one-term-per-line text format: `<coeff> <4-letter word>`,
    /// `#` comments, blank lines ignored.
    pub fn parse(text: &str, label: &str) -> Result<Self, Error> {
        let mut terms = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let coeff: f64 = parts
                .next()
                .ok_or_else(|| Error::Parse(format!("line {}: missing coefficient", lineno + 1)))?
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
            let word = parts
                .next()
                .ok_or_else(|| Error::Parse(format!("line {}: missing Pauli word", lineno + 1)))?;
            if parts.next().is_some() {
                return Err(Error::Parse(format!("line {}: trailing tokens", lineno + 1)));
            }
            let ps = PauliString::parse(word)?;
            if ps.len() != 4 {
                return Err(Error::Parse(format!(
                    "line {}: expected 4 letters, got {}",
                    lineno + 1,
                    ps.len()
                )));
            }
            if ps.phase != crate::pauli::Phase::One {
                return Err(Error::Parse(format!(
                    "line {}: phase prefixes are not allowed in Hamiltonian terms",
                    lineno + 1
                )));
            }
            terms.push((coeff, ps));
        }
        if terms.is_empty() {
            return Err(Error::Hamiltonian("empty term list".into()));
        }
        let h = QubitHamiltonian {
            terms,
            label: label.to_string(),
        };
        h.check_symmetries()?;
        Ok(h)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)?;
        let label = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "hamiltonian".into());
        Self::parse(&text, &label)
    }

    /// Dense 16x16 matrix; real coefficients on Hermitian strings make it
    /// Hermitian by construction.
    pub fn to_matrix(&self) -> CMat {
        let mut m = CMat::zeros(16, 16);
        for (c, p) in &self.terms {
            m += p.to_matrix() * Complex64::new(*c, 0.0);
        }
        m
    }

    /// Verify the Z2 block structure: no matrix elements between different
    /// symmetry sectors. Equivalent to commuting with both ZIZI and IZIZ.
    fn check_symmetries(&self) -> Result<(), Error> {
        let m = self.to_matrix();
        let scale = m.norm().max(1.0);
        let mut block_of = [0usize; 16];
        for (s, sector) in [
            SymmetrySector::UpSpin,
            SymmetrySector::DownSpin,
            SymmetrySector::SpinBalanced,
        ]
        .iter()
        .enumerate()
        {
            for b in sector_bitstrings(*sector) {
                block_of[bit_index(b)] = s + 1;
            }
        }
        for r in 0..16 {
            for c in 0..16 {
                if block_of[r] != block_of[c] && m[(r, c)].norm() > 1e-10 * scale {
                    return Err(Error::Hamiltonian(format!(
                        "does not commute with ZIZI/IZIZ: coupling between basis states \
                         {r:04b} and {c:04b} has magnitude {:.3e}",
                        m[(r, c)].norm()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// One eigenstate with its sector bookkeeping.
#[derive(Clone, Debug)]
pub struct EigenPair {
    pub energy: f64,
    /// Amplitudes over the 16-dim register, qubit 0 most significant.
    pub state4: Vec<Complex64>,
    /// Tapered 2-qubit amplitudes under the sector's transformation.
    pub tapered: Vec<Complex64>,
    /// ⟨N̂⟩; integer to numerical precision for number-conserving models.
    pub n_electrons: f64,
}

/// Full diagonalization output bucketed by symmetry sector.
#[derive(Clone, Debug)]
pub struct EigenSystem {
    pub ground_energy: f64,
    pub ground4: Vec<Complex64>,
    /// Electron count of the ground state.
    pub n0: f64,
    pub up: Vec<EigenPair>,
    pub down: Vec<EigenPair>,
    /// All spin-balanced eigenstates including the ground state, energy
    /// ascending.
    pub balanced: Vec<EigenPair>,
    /// Even-even block states, kept only so the classification stays
    /// exhaustive.
    pub other: Vec<EigenPair>,
    /// Diagnostics (degeneracies, non-integer electron counts).
    pub flags: Vec<String>,
}

fn popcount_of_index(i: usize) -> f64 {
    (i.count_ones()) as f64
}

/// Push a state through the sector's transform and keep the last two
/// qubits. The support must lie in a single symmetry block (any block), so
/// the dropped qubits are in a product state and no information is lost.
fn taper_state_with(state4: &[Complex64], sector: SymmetrySector) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); 4];
    for i in 0..16 {
        if state4[i].norm() > 0.0 {
            let bits = [
                ((i >> 3) & 1) as u8,
                ((i >> 2) & 1) as u8,
                ((i >> 1) & 1) as u8,
                (i & 1) as u8,
            ];
            let (_, t) = z2_bit_action(bits, sector);
            out[(t[0] * 2 + t[1]) as usize] += state4[i];
        }
    }
    out
}

fn diagonalize_block(h: &CMat, indices: &[usize; 4], sector: Option<SymmetrySector>) -> Vec<EigenPair> {
    let mut block = CMat::zeros(4, 4);
    for (r, &ir) in indices.iter().enumerate() {
        for (c, &ic) in indices.iter().enumerate() {
            block[(r, c)] = h[(ir, ic)];
        }
    }
    let eig = nalgebra::SymmetricEigen::new(block);
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let mut pairs = Vec::with_capacity(4);
    for &k in &order {
        let mut v = DMatrix::from_fn(4, 1, |r, _| eig.eigenvectors[(r, k)]);
        fix_vector_phase(&mut v);
        let mut state4 = vec![Complex64::new(0.0, 0.0); 16];
        for (r, &ir) in indices.iter().enumerate() {
            state4[ir] = v[(r, 0)];
        }
        let n_electrons: f64 = indices
            .iter()
            .enumerate()
            .map(|(r, &ir)| v[(r, 0)].norm_sqr() * popcount_of_index(ir))
            .sum();
        let tapered = match sector {
            Some(s) => taper_state_with(&state4, s),
            None => Vec::new(),
        };
        pairs.push(EigenPair {
            energy: eig.eigenvalues[k],
            state4,
            tapered,
            n_electrons,
        });
    }
    pairs
}

/// Diagonalize per symmetry block and bucket the results.
///
/// Block-wise diagonalization keeps eigenvectors inside their sector even
/// when energies are degenerate across sectors.
pub fn exact_eigensystem(h: &QubitHamiltonian) -> Result<EigenSystem, Error> {
    let m = h.to_matrix();
    let mut flags = Vec::new();

    let block_indices = |sector: SymmetrySector| -> [usize; 4] {
        let mut out = [0usize; 4];
        for (i, b) in sector_bitstrings(sector).iter().enumerate() {
            out[i] = bit_index(b);
        }
        out
    };

    let up = diagonalize_block(&m, &block_indices(SymmetrySector::UpSpin), Some(SymmetrySector::UpSpin));
    let down = diagonalize_block(
        &m,
        &block_indices(SymmetrySector::DownSpin),
        Some(SymmetrySector::DownSpin),
    );
    let balanced = diagonalize_block(
        &m,
        &block_indices(SymmetrySector::SpinBalanced),
        Some(SymmetrySector::SpinBalanced),
    );
    let other = diagonalize_block(&m, &OTHER_BLOCK, None);

    let ground = &balanced[0];
    let global_min = up
        .iter()
        .chain(&down)
        .chain(&other)
        .map(|p| p.energy)
        .fold(f64::INFINITY, f64::min);
    if global_min < ground.energy - 1e-12 {
        return Err(Error::Hamiltonian(format!(
            "global ground state (E = {global_min:.6}) is not in the spin-balanced sector"
        )));
    }
    if balanced.len() > 1 && (balanced[1].energy - ground.energy).abs() < 1e-9 {
        flags.push("degenerate ground state in the spin-balanced sector".into());
    }
    for (name, bucket) in [("up", &up), ("down", &down), ("balanced", &balanced)] {
        for p in bucket.iter() {
            if (p.n_electrons - p.n_electrons.round()).abs() > 1e-6 {
                flags.push(format!(
                    "{name}-sector eigenstate at E = {:.6} has non-integer ⟨N⟩ = {:.6}; \
                     electron/hole bucketing is ambiguous",
                    p.energy, p.n_electrons
                ));
            }
        }
    }

    Ok(EigenSystem {
        ground_energy: ground.energy,
        ground4: ground.state4.clone(),
        n0: ground.n_electrons,
        up,
        down,
        balanced,
        other,
        flags,
    })
}

impl EigenSystem {
    /// Tapered ground state under the given sector's transformation.
    pub fn ground_tapered(&self, sector: SymmetrySector) -> Vec<Complex64> {
        taper_state_with(&self.ground4, sector)
    }

    pub fn sector_pairs(&self, sector: SymmetrySector) -> &[EigenPair] {
        match sector {
            SymmetrySector::UpSpin => &self.up,
            SymmetrySector::DownSpin => &self.down,
            SymmetrySector::SpinBalanced => &self.balanced,
        }
    }

    /// Eigenstates of a spin sector with one electron more than the ground
    /// state.
    pub fn plus_bucket(&self, sector: SymmetrySector) -> Vec<&EigenPair> {
        self.sector_pairs(sector)
            .iter()
            .filter(|p| (p.n_electrons - (self.n0 + 1.0)).abs() < 1e-6)
            .collect()
    }

    /// Eigenstates with one electron fewer.
    pub fn minus_bucket(&self, sector: SymmetrySector) -> Vec<&EigenPair> {
        self.sector_pairs(sector)
            .iter()
            .filter(|p| (p.n_electrons - (self.n0 - 1.0)).abs() < 1e-6)
            .collect()
    }

    /// All sixteen eigenvalues.
    pub fn all_energies(&self) -> Vec<f64> {
        self.up
            .iter()
            .chain(&self.down)
            .chain(&self.balanced)
            .chain(&self.other)
            .map(|p| p.energy)
            .collect()
    }
}

/// Two-qubit unitary whose first column is the tapered ground state.
#[derive(Clone, Debug)]
pub struct PrepUnitary {
    pub matrix: CMat,
}

/// Complete the state to a unitary by Gram-Schmidt over the canonical
/// basis, deterministically.
pub fn prep_unitary(psi0: &[Complex64]) -> Result<PrepUnitary, Error> {
    if psi0.len() != 4 {
        return Err(Error::Dimension(format!(
            "expected a 2-qubit state, got length {}",
            psi0.len()
        )));
    }
    let norm: f64 = psi0.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::Dimension(format!("state norm {norm} is not 1")));
    }
    let mut cols: Vec<DVector<Complex64>> = vec![DVector::from_row_slice(psi0)];
    for k in 0..4 {
        if cols.len() == 4 {
            break;
        }
        let mut v = DVector::<Complex64>::zeros(4);
        v[k] = Complex64::new(1.0, 0.0);
        for c in &cols {
            let overlap: Complex64 = c.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
            v -= c * overlap;
        }
        let n = v.norm();
        if n > 1e-8 {
            cols.push(v / Complex64::new(n, 0.0));
        }
    }
    debug_assert_eq!(cols.len(), 4);
    let matrix = CMat::from_fn(4, 4, |r, c| cols[c][r]);
    Ok(PrepUnitary { matrix })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::mat_approx_eq;

    fn synth_a() -> QubitHamiltonian {
        let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("../../fixtures/synth_a.txt");
        QubitHamiltonian::load(&path).unwrap()
    }

    #[test]
    fn parses_single_term() {
        let h = QubitHamiltonian::parse("1.0 ZIII", "t").unwrap();
        assert_eq!(h.terms.len(), 1);
    }

    #[test]
    fn rejects_empty_and_malformed() {
        assert!(QubitHamiltonian::parse("# nothing here\n", "t").is_err());
        assert!(QubitHamiltonian::parse("notanumber ZIII", "t").is_err());
        assert!(QubitHamiltonian::parse("1.0 ZI", "t").is_err());
        // Single hopping-like term without its partner breaks the
        // symmetry-block structure? XZXI alone still commutes with both
        // parities, so this must be accepted.
        assert!(QubitHamiltonian::parse("1.0 XZXI", "t").is_ok());
        // A single X breaks spin-up parity.
        assert!(QubitHamiltonian::parse("1.0 XIII", "t").is_err());
    }

    #[test]
    fn eigenvalue_sum_equals_trace() {
        let h = synth_a();
        let eig = exact_eigensystem(&h).unwrap();
        let sum: f64 = eig.all_energies().iter().sum();
        let tr: Complex64 = crate::math::trace(&h.to_matrix());
        assert!((sum - tr.re).abs() < 1e-9, "{sum} vs {}", tr.re);
    }

    #[test]
    fn diagonal_hamiltonian_sector_bookkeeping() {
        // H = sum_k Z_k: ground state |1111⟩ at energy −4, in the
        // even-even block; the balanced-sector requirement rejects it.
        let text = "1.0 ZIII\n1.0 IZII\n1.0 IIZI\n1.0 IIIZ";
        let h = QubitHamiltonian::parse(text, "zsum").unwrap();
        let err = exact_eigensystem(&h).unwrap_err();
        assert!(matches!(err, Error::Hamiltonian(_)));
    }

    #[test]
    fn eigensystem_residuals_and_sectors() {
        let h = synth_a();
        let m = h.to_matrix();
        let eig = exact_eigensystem(&h).unwrap();
        assert!(eig.flags.is_empty(), "{:?}", eig.flags);
        let count = eig.up.len() + eig.down.len() + eig.balanced.len() + eig.other.len();
        assert_eq!(count, 16);
        let scale = m.norm();
        for p in eig.up.iter().chain(&eig.down).chain(&eig.balanced).chain(&eig.other) {
            let v = DMatrix::from_fn(16, 1, |r, _| p.state4[r]);
            let res = (&m * &v - &v * Complex64::new(p.energy, 0.0)).norm();
            assert!(res < 1e-9 * scale, "residual {res}");
        }
        // Ground state has 2 electrons, buckets have 3 and 1.
        assert!((eig.n0 - 2.0).abs() < 1e-9);
        assert_eq!(eig.plus_bucket(SymmetrySector::UpSpin).len(), 2);
        assert_eq!(eig.minus_bucket(SymmetrySector::UpSpin).len(), 2);
    }

    #[test]
    fn tapered_states_are_orthonormal() {
        let h = synth_a();
        let eig = exact_eigensystem(&h).unwrap();
        for sector in [
            SymmetrySector::UpSpin,
            SymmetrySector::DownSpin,
            SymmetrySector::SpinBalanced,
        ] {
            let pairs = eig.sector_pairs(sector);
            for a in pairs {
                for b in pairs {
                    let dot: Complex64 = a
                        .tapered
                        .iter()
                        .zip(&b.tapered)
                        .map(|(x, y)| x.conj() * y)
                        .sum();
                    let want = if std::ptr::eq(a, b) { 1.0 } else { 0.0 };
                    assert!((dot.norm() - want).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn prep_unitary_basics() {
        let zero = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
        ];
        let u = prep_unitary(&zero).unwrap();
        assert!(mat_approx_eq(&u.matrix, &CMat::identity(4, 4), 1e-12));

        let s = 1.0 / 2.0f64.sqrt();
        let bell = [
            Complex64::new(s, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(s, 0.0),
        ];
        let u = prep_unitary(&bell).unwrap();
        let id = CMat::identity(4, 4);
        assert!((u.matrix.adjoint() * &u.matrix - &id).norm() < 1e-12);
        for r in 0..4 {
            assert!((u.matrix[(r, 0)] - bell[r]).norm() < 1e-12);
        }

        assert!(prep_unitary(&[Complex64::new(2.0, 0.0); 4]).is_err());
    }

    #[test]
    fn prep_unitary_reproducible_from_ground_state() {
        let h = synth_a();
        let eig = exact_eigensystem(&h).unwrap();
        let psi = eig.ground_tapered(SymmetrySector::SpinBalanced);
        let u = prep_unitary(&psi).unwrap();
        // U|00⟩ = ψ0, and re-deriving from that column gives the same matrix.
        let col: Vec<Complex64> = (0..4).map(|r| u.matrix[(r, 0)]).collect();
        let fid: Complex64 = col.iter().zip(&psi).map(|(a, b)| a.conj() * b).sum();
        assert!((fid.norm() - 1.0).abs() < 1e-12);
        let u2 = prep_unitary(&col).unwrap();
        assert!(mat_approx_eq(&u.matrix, &u2.matrix, 1e-12));
    }
}
