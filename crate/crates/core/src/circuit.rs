//! Circuit IR over the native gate set and construction of the LCU
//! transition-amplitude circuits.
//!
//! Qubits live on a linear chain; four-qubit circuits use the layout
//! a1–a0–s0–s1 (indices 0..3) and the one-ancilla circuits a0–s0–s1
//! (indices 0..2). Multi-qubit gates act on adjacent qubits only, and the
//! iToffoli's target must sit between its controls.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::Error;
use crate::math::CMat;
use crate::model::PrepUnitary;
use crate::pauli::{
    jw_i_y_bar, jw_x_bar, jw_z, z2_transform_pauli, FermionKind, FermionOp, Pauli, PauliString,
    Phase,
};

type M2 = [[Complex64; 2]; 2];

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn m2_mul(a: &M2, b: &M2) -> M2 {
    let mut out = [[c(0.0, 0.0); 2]; 2];
    for r in 0..2 {
        for col in 0..2 {
            out[r][col] = a[r][0] * b[0][col] + a[r][1] * b[1][col];
        }
    }
    out
}

fn m2_is_identity(a: &M2, tol: f64) -> bool {
    (a[0][0] - c(1.0, 0.0)).norm() < tol
        && (a[1][1] - c(1.0, 0.0)).norm() < tol
        && a[0][1].norm() < tol
        && a[1][0].norm() < tol
}

fn m2_is_diagonal(a: &M2, tol: f64) -> bool {
    a[0][1].norm() < tol && a[1][0].norm() < tol
}

/// Native gates plus the dense two-qubit slot used only for ground-state
/// preparation.
#[derive(Clone, Debug)]
pub enum Gate {
    /// Arbitrary single-qubit unitary.
    One { q: usize, m: M2, label: String },
    Cz { a: usize, b: usize },
    Cs { a: usize, b: usize },
    CsDg { a: usize, b: usize },
    /// Controlled phase diag(1,1,1,e^{iφ}).
    CzPhi { a: usize, b: usize, phi: f64 },
    /// Doubly-controlled iX with the target between the controls.
    IToffoli { c0: usize, t: usize, c1: usize },
    /// Dense two-qubit unitary; prep only.
    Dense2 { a: usize, b: usize, m: CMat, label: String },
}

impl Gate {
    pub fn h(q: usize) -> Gate {
        let s = FRAC_1_SQRT_2;
        Gate::One {
            q,
            m: [[c(s, 0.0), c(s, 0.0)], [c(s, 0.0), c(-s, 0.0)]],
            label: "h".into(),
        }
    }

    pub fn x(q: usize) -> Gate {
        Gate::One {
            q,
            m: [[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]],
            label: "x".into(),
        }
    }

    pub fn s(q: usize) -> Gate {
        Gate::phase(q, std::f64::consts::FRAC_PI_2)
    }

    pub fn sdg(q: usize) -> Gate {
        Gate::phase(q, -std::f64::consts::FRAC_PI_2)
    }

    pub fn t(q: usize) -> Gate {
        Gate::phase(q, FRAC_PI_4)
    }

    pub fn tdg(q: usize) -> Gate {
        Gate::phase(q, -FRAC_PI_4)
    }

    /// diag(1, e^{iθ}): a virtual-Z gate.
    pub fn phase(q: usize, theta: f64) -> Gate {
        Gate::One {
            q,
            m: [
                [c(1.0, 0.0), c(0.0, 0.0)],
                [c(0.0, 0.0), Complex64::from_polar(1.0, theta)],
            ],
            label: format!("p({theta:.4})"),
        }
    }

    /// diag(α, β) on one qubit.
    pub fn diag(q: usize, alpha: Complex64, beta: Complex64) -> Gate {
        Gate::One {
            q,
            m: [[alpha, c(0.0, 0.0)], [c(0.0, 0.0), beta]],
            label: "diag".into(),
        }
    }

    pub fn one(q: usize, m: M2, label: &str) -> Gate {
        Gate::One {
            q,
            m,
            label: label.into(),
        }
    }

    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Gate::One { q, .. } => vec![*q],
            Gate::Cz { a, b } | Gate::Cs { a, b } | Gate::CsDg { a, b } | Gate::CzPhi { a, b, .. } => {
                vec![*a, *b]
            }
            Gate::IToffoli { c0, t, c1 } => vec![*c0, *t, *c1],
            Gate::Dense2 { a, b, .. } => vec![*a, *b],
        }
    }

    pub fn is_multi(&self) -> bool {
        !matches!(self, Gate::One { .. })
    }

    pub fn is_itoffoli(&self) -> bool {
        matches!(self, Gate::IToffoli { .. })
    }

    pub fn is_prep(&self) -> bool {
        matches!(self, Gate::Dense2 { .. })
    }

    /// Virtual-Z gates: single-qubit diagonals.
    pub fn is_virtual_z(&self) -> bool {
        match self {
            Gate::One { m, .. } => m2_is_diagonal(m, 1e-12),
            _ => false,
        }
    }

    /// Apply the gate to a dense state vector with qubit 0 as the most
    /// significant bit.
    pub fn apply_to_vec(&self, state: &mut [Complex64], n_qubits: usize) {
        let dim = state.len();
        debug_assert_eq!(dim, 1 << n_qubits);
        let bit = |q: usize| 1usize << (n_qubits - 1 - q);
        match self {
            Gate::One { q, m, .. } => {
                let bq = bit(*q);
                for i in 0..dim {
                    if i & bq == 0 {
                        let j = i | bq;
                        let (a, b) = (state[i], state[j]);
                        state[i] = m[0][0] * a + m[0][1] * b;
                        state[j] = m[1][0] * a + m[1][1] * b;
                    }
                }
            }
            Gate::Cz { a, b } => apply_corner(state, n_qubits, *a, *b, c(-1.0, 0.0)),
            Gate::Cs { a, b } => apply_corner(state, n_qubits, *a, *b, c(0.0, 1.0)),
            Gate::CsDg { a, b } => apply_corner(state, n_qubits, *a, *b, c(0.0, -1.0)),
            Gate::CzPhi { a, b, phi } => {
                apply_corner(state, n_qubits, *a, *b, Complex64::from_polar(1.0, *phi))
            }
            Gate::IToffoli { c0, t, c1 } => {
                let (b0, bt, b1) = (bit(*c0), bit(*t), bit(*c1));
                let i_unit = c(0.0, 1.0);
                for i in 0..dim {
                    if i & b0 != 0 && i & b1 != 0 && i & bt == 0 {
                        let j = i | bt;
                        let (a, b) = (state[i], state[j]);
                        state[i] = i_unit * b;
                        state[j] = i_unit * a;
                    }
                }
            }
            Gate::Dense2 { a, b, m, .. } => {
                let (ba, bb) = (bit(*a), bit(*b));
                for i in 0..dim {
                    if i & ba == 0 && i & bb == 0 {
                        let idx = [i, i | bb, i | ba, i | ba | bb];
                        let old = [state[idx[0]], state[idx[1]], state[idx[2]], state[idx[3]]];
                        for r in 0..4 {
                            let mut acc = c(0.0, 0.0);
                            for (k, o) in old.iter().enumerate() {
                                acc += m[(r, k)] * o;
                            }
                            state[idx[r]] = acc;
                        }
                    }
                }
            }
        }
    }

    fn dump_token(&self, labels: &[String]) -> String {
        let name = |q: usize| labels[q].clone();
        match self {
            Gate::One { q, label, .. } => format!("{label}({})", name(*q)),
            Gate::Cz { a, b } => format!("cz({},{})", name(*a), name(*b)),
            Gate::Cs { a, b } => format!("cs({},{})", name(*a), name(*b)),
            Gate::CsDg { a, b } => format!("csdg({},{})", name(*a), name(*b)),
            Gate::CzPhi { a, b, phi } => format!("czphi[{phi:.4}]({},{})", name(*a), name(*b)),
            Gate::IToffoli { c0, t, c1 } => {
                format!("itoffoli({},{},{})", name(*c0), name(*t), name(*c1))
            }
            Gate::Dense2 { a, b, label, .. } => format!("{label}({},{})", name(*a), name(*b)),
        }
    }
}

fn apply_corner(state: &mut [Complex64], n_qubits: usize, a: usize, b: usize, gamma: Complex64) {
    let bit = |q: usize| 1usize << (n_qubits - 1 - q);
    let (ba, bb) = (bit(a), bit(b));
    for (i, amp) in state.iter_mut().enumerate() {
        if i & ba != 0 && i & bb != 0 {
            *amp *= gamma;
        }
    }
}

/// One circuit cycle: a single multi-qubit gate or a set of disjoint
/// single-qubit gates.
#[derive(Clone, Debug, Default)]
pub struct Moment {
    pub gates: Vec<Gate>,
}

impl Moment {
    pub fn is_hard(&self) -> bool {
        self.gates.iter().any(|g| g.is_multi())
    }

    fn qubits(&self) -> Vec<usize> {
        self.gates.iter().flat_map(|g| g.qubits()).collect()
    }
}

/// Which expansion the double-controlled gates use.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum DecompositionChoice {
    IToffoli,
    CzOnly,
}

impl DecompositionChoice {
    pub fn name(&self) -> &'static str {
        match self {
            DecompositionChoice::IToffoli => "itoffoli",
            DecompositionChoice::CzOnly => "cz",
        }
    }
}

/// Ordered moments over named qubits.
#[derive(Clone, Debug)]
pub struct Circuit {
    pub n_qubits: usize,
    pub labels: Vec<String>,
    pub moments: Vec<Moment>,
}

impl Circuit {
    pub fn new(labels: &[&str]) -> Circuit {
        Circuit {
            n_qubits: labels.len(),
            labels: labels.iter().map(|s| s.to_string()).collect(),
            moments: Vec::new(),
        }
    }

    /// Raw builders give every gate its own moment; `transpile` packs them.
    pub fn push(&mut self, g: Gate) {
        self.moments.push(Moment { gates: vec![g] });
    }

    pub fn push_all(&mut self, gs: Vec<Gate>) {
        for g in gs {
            self.push(g);
        }
    }

    pub fn depth_moments(&self) -> usize {
        self.moments.len()
    }

    /// Enforce the layout invariants: adjacency on the chain, iToffoli
    /// target in the middle, moment exclusivity, disjoint 1q sets.
    pub fn validate(&self) -> Result<(), Error> {
        for (i, m) in self.moments.iter().enumerate() {
            if m.gates.is_empty() {
                return Err(Error::Circuit(format!("moment {i} is empty")));
            }
            if m.is_hard() && m.gates.len() != 1 {
                return Err(Error::Circuit(format!(
                    "moment {i} mixes a multi-qubit gate with other gates"
                )));
            }
            let mut seen = vec![false; self.n_qubits];
            for g in &m.gates {
                for q in g.qubits() {
                    if q >= self.n_qubits {
                        return Err(Error::Circuit(format!("qubit {q} out of range")));
                    }
                    if seen[q] {
                        return Err(Error::Circuit(format!("moment {i} reuses qubit {q}")));
                    }
                    seen[q] = true;
                }
                match g {
                    Gate::Cz { a, b }
                    | Gate::Cs { a, b }
                    | Gate::CsDg { a, b }
                    | Gate::CzPhi { a, b, .. }
                    | Gate::Dense2 { a, b, .. } => {
                        if a.abs_diff(*b) != 1 {
                            return Err(Error::Circuit(format!(
                                "moment {i}: two-qubit gate on non-adjacent qubits {a},{b}"
                            )));
                        }
                    }
                    Gate::IToffoli { c0, t, c1 } => {
                        let (lo, hi) = (*c0.min(c1), *c0.max(c1));
                        if hi - lo != 2 || *t != lo + 1 {
                            return Err(Error::Circuit(format!(
                                "moment {i}: iToffoli operands ({c0},{t},{c1}) are not \
                                 (control, target, control) on contiguous qubits"
                            )));
                        }
                    }
                    Gate::One { .. } => {}
                }
            }
        }
        Ok(())
    }

    /// Dense unitary of the circuit, moment order left to right.
    pub fn unitary(&self) -> Result<CMat, Error> {
        if self.n_qubits > 5 {
            return Err(Error::Dimension(format!(
                "register of {} qubits is too large for a dense unitary",
                self.n_qubits
            )));
        }
        let dim = 1 << self.n_qubits;
        let mut u = CMat::zeros(dim, dim);
        for col in 0..dim {
            let mut state = vec![c(0.0, 0.0); dim];
            state[col] = c(1.0, 0.0);
            for m in &self.moments {
                for g in &m.gates {
                    g.apply_to_vec(&mut state, self.n_qubits);
                }
            }
            for row in 0..dim {
                u[(row, col)] = state[row];
            }
        }
        Ok(u)
    }

    /// One moment per line, `<gate>(<qubits>)` tokens.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for m in &self.moments {
            let tokens: Vec<String> = m.gates.iter().map(|g| g.dump_token(&self.labels)).collect();
            let _ = writeln!(out, "{}", tokens.join(" "));
        }
        out
    }
}

/// Gate counts and depth, with the prep unitary reported separately from
/// the algorithm cost.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CircuitCensus {
    /// Moments containing at least one non-virtual gate, prep excluded.
    pub depth: usize,
    pub n_1q: usize,
    pub n_2q: usize,
    pub n_itoffoli: usize,
    /// Prep gates at their fixed three-CZ equivalent cost.
    pub prep_2q_equivalent: usize,
}

impl CircuitCensus {
    pub fn csv_row(&self, circuit: &str) -> String {
        format!(
            "{circuit},{},{},{},{}",
            self.depth, self.n_1q, self.n_2q, self.n_itoffoli
        )
    }
}

/// Deterministic counts over a (normally transpiled) circuit.
pub fn gate_census(circ: &Circuit) -> CircuitCensus {
    let mut census = CircuitCensus {
        depth: 0,
        n_1q: 0,
        n_2q: 0,
        n_itoffoli: 0,
        prep_2q_equivalent: 0,
    };
    for m in &circ.moments {
        let mut counts_toward_depth = false;
        for g in &m.gates {
            match g {
                Gate::One { .. } => {
                    census.n_1q += 1;
                    if !g.is_virtual_z() {
                        counts_toward_depth = true;
                    }
                }
                Gate::Dense2 { .. } => {
                    census.prep_2q_equivalent += 3;
                }
                Gate::IToffoli { .. } => {
                    census.n_itoffoli += 1;
                    counts_toward_depth = true;
                }
                _ => {
                    census.n_2q += 1;
                    counts_toward_depth = true;
                }
            }
        }
        if counts_toward_depth {
            census.depth += 1;
        }
    }
    census
}

// ---------------------------------------------------------------------------
// Gate-sequence building blocks
// ---------------------------------------------------------------------------

/// CNOT with the given control and target as Hadamard-dressed CZ.
fn cnot(control: usize, target: usize) -> Vec<Gate> {
    vec![
        Gate::h(target),
        Gate::Cz {
            a: control,
            b: target,
        },
        Gate::h(target),
    ]
}

fn swap(a: usize, b: usize) -> Vec<Gate> {
    let mut out = cnot(a, b);
    out.extend(cnot(b, a));
    out.extend(cnot(a, b));
    out
}

/// CCZ on the contiguous triple (q0, q1, q2) from eight nearest-neighbor
/// CZs, phase-exact.
///
/// A CNOT ladder walks the parities x0⊕x1, x0⊕x1⊕x2, x0⊕x2 and x1⊕x2
/// through the middle and right qubits while π/8 phase gates pick up the
/// parity decomposition of the triple-AND phase.
pub fn decompose_ccz_cz(q0: usize, q1: usize, q2: usize) -> Vec<Gate> {
    let mut g = vec![Gate::t(q0), Gate::t(q1), Gate::t(q2)];
    g.extend(cnot(q0, q1));
    g.push(Gate::tdg(q1));
    g.extend(cnot(q1, q2));
    g.push(Gate::t(q2));
    g.extend(cnot(q0, q1));
    g.extend(cnot(q1, q2));
    g.push(Gate::tdg(q2));
    g.extend(cnot(q0, q1));
    g.extend(cnot(q1, q2));
    g.push(Gate::tdg(q2));
    g.extend(cnot(q0, q1));
    g.extend(cnot(q1, q2));
    g
}

/// CCZ on (q0, q1, q2) from one iToffoli: the Hadamard-dressed iToffoli
/// realizes a CC-iZ, and a long-range CS† between the outer qubits,
/// routed by swapping q0 inward, cancels the i.
pub fn decompose_ccz_itoffoli(q0: usize, q1: usize, q2: usize) -> Vec<Gate> {
    let mut g = vec![Gate::h(q1)];
    g.push(Gate::IToffoli {
        c0: q0,
        t: q1,
        c1: q2,
    });
    g.push(Gate::h(q1));
    g.extend(swap(q0, q1));
    g.push(Gate::CsDg { a: q1, b: q2 });
    g.extend(swap(q0, q1));
    g
}

/// Pre/post basis-change gates taking Z to the given letter on `q`,
/// returned in circuit order.
fn basis_change(q: usize, letter: Pauli) -> (Vec<Gate>, Vec<Gate>) {
    match letter {
        Pauli::X => (vec![Gate::h(q)], vec![Gate::h(q)]),
        // D = S·H maps Z to Y.
        Pauli::Y => (vec![Gate::sdg(q), Gate::h(q)], vec![Gate::h(q), Gate::s(q)]),
        _ => (Vec::new(), Vec::new()),
    }
}

/// Z-skeleton shapes on the system pair after basis reduction.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
enum Skeleton {
    None,
    S0,
    S0S1,
    S1,
}

fn skeleton_of(letters: &[Pauli]) -> Skeleton {
    match (letters[0] != Pauli::I, letters[1] != Pauli::I) {
        (false, false) => Skeleton::None,
        (true, false) => Skeleton::S0,
        (true, true) => Skeleton::S0S1,
        (false, true) => Skeleton::S1,
    }
}

/// Controlled Pauli (the string's phase is handled separately by the
/// caller) with a single control; the base gate is CZ(control, s0) and
/// CNOT extensions grow the Z-weight onto s1.
fn controlled_pauli_1c(control: usize, s0: usize, s1: usize, letters: &[Pauli]) -> Vec<Gate> {
    let mut g = Vec::new();
    let (pre0, post0) = basis_change(s0, letters[0]);
    let (pre1, post1) = basis_change(s1, letters[1]);
    g.extend(pre0);
    g.extend(pre1);
    match skeleton_of(letters) {
        Skeleton::None => {}
        Skeleton::S0 => g.push(Gate::Cz { a: control, b: s0 }),
        Skeleton::S0S1 => {
            g.extend(cnot(s1, s0));
            g.push(Gate::Cz { a: control, b: s0 });
            g.extend(cnot(s1, s0));
        }
        Skeleton::S1 => {
            // c(Z_s1) = c(Z_s0)·c(Z_s0 Z_s1); the diagonal factors commute.
            g.push(Gate::Cz { a: control, b: s0 });
            g.extend(cnot(s1, s0));
            g.push(Gate::Cz { a: control, b: s0 });
            g.extend(cnot(s1, s0));
        }
    }
    g.extend(post0);
    g.extend(post1);
    g
}

/// Ground-state preparation gate on the system pair.
fn prep_gate(s0: usize, s1: usize, prep: &PrepUnitary) -> Gate {
    Gate::Dense2 {
        a: s0,
        b: s1,
        m: prep.matrix.clone(),
        label: "prep".into(),
    }
}

/// LCU pair (V0, V1) of tapered target unitaries for a diagonal circuit.
fn diagonal_targets(op: FermionOp) -> Result<(PauliString, PauliString), Error> {
    match op.kind {
        FermionKind::Number => Ok((
            PauliString::identity(2),
            z2_transform_pauli(&jw_z(op), op.sector())?,
        )),
        _ => Ok((
            z2_transform_pauli(&jw_x_bar(op), op.sector())?,
            z2_transform_pauli(&jw_i_y_bar(op), op.sector())?,
        )),
    }
}

/// One-ancilla LCU circuit computing diagonal transition amplitudes.
///
/// Layout a0–s0–s1. After the final Hadamard the ancilla outcomes 0/1
/// post-select (V0 ± V1)/2 applied to the prepared state; the targets'
/// ±1/±i factors are folded into one diagonal gate on the ancilla.
pub fn build_diagonal_circuit(op: FermionOp, prep: &PrepUnitary) -> Result<Circuit, Error> {
    let (v0, v1) = diagonal_targets(op)?;
    let mut circ = Circuit::new(&["a0", "s0", "s1"]);
    let (a0, s0, s1) = (0, 1, 2);
    circ.push(prep_gate(s0, s1, prep));
    circ.push(Gate::h(a0));
    if !v0.is_identity() {
        // Control on |0⟩: X-wrap the ancilla.
        circ.push(Gate::x(a0));
        circ.push_all(controlled_pauli_1c(a0, s0, s1, &v0.letters));
        circ.push(Gate::x(a0));
    }
    if !v1.is_identity() {
        circ.push_all(controlled_pauli_1c(a0, s0, s1, &v1.letters));
    }
    let (p0, p1) = (v0.phase.to_complex(), v1.phase.to_complex());
    if (p0 - c(1.0, 0.0)).norm() > 1e-15 || (p1 - c(1.0, 0.0)).norm() > 1e-15 {
        circ.push(Gate::diag(a0, p0, p1));
    }
    circ.push(Gate::h(a0));
    circ.validate()?;
    Ok(circ)
}

/// Double-controlled Z-string block pair for the off-diagonal circuit.
///
/// Emits the CCZ-based gates for targets `vp` (active on a0 = 1, a1 = 0)
/// and `vq` (active on a0 = a1 = 1), then the ancilla-pair phase layer.
fn dc_pair_block(
    choice: DecompositionChoice,
    vp: &PauliString,
    vq: &PauliString,
) -> Result<Vec<Gate>, Error> {
    let (a1, a0, s0, s1) = (0usize, 1usize, 2usize, 3usize);
    for v in [vp, vq] {
        if v.letters.iter().any(|l| !l.is_diagonal()) {
            return Err(Error::Circuit(format!(
                "off-diagonal targets must be Z-strings, got {v}"
            )));
        }
        if skeleton_of(&v.letters) == Skeleton::S1 || v.is_identity() {
            return Err(Error::Circuit(format!(
                "unsupported off-diagonal target shape {v}"
            )));
        }
    }
    let ext = |v: &PauliString| skeleton_of(&v.letters) == Skeleton::S0S1;
    // Ancilla phase layer diag(1, e^{iπ/4}, φp, e^{iπ/4}·φq) over |a0 a1⟩:
    // virtual phases plus, when φq/φp ≠ 1, one native corner gate (CZ, CS
    // or CS†) on the ancilla pair. Diagonal, so it can ride ahead of the
    // trailing extension CNOT, which packs the final easy moments better.
    let (pp, pq) = (vp.phase.to_complex(), vq.phase.to_complex());
    let mut phase_layer = Vec::new();
    if (pp - c(1.0, 0.0)).norm() > 1e-15 {
        phase_layer.push(Gate::diag(a0, c(1.0, 0.0), pp));
    }
    phase_layer.push(Gate::t(a1));
    match Phase::from_complex(pq / pp) {
        Some(Phase::One) => {}
        Some(Phase::MinusOne) => phase_layer.push(Gate::Cz { a: a1, b: a0 }),
        Some(Phase::I) => phase_layer.push(Gate::Cs { a: a1, b: a0 }),
        Some(Phase::MinusI) => phase_layer.push(Gate::CsDg { a: a1, b: a0 }),
        None => unreachable!("corner phase is a fourth root of unity"),
    }
    let mut g = Vec::new();
    match choice {
        DecompositionChoice::CzOnly => {
            g.push(Gate::x(a1));
            if ext(vp) {
                g.extend(cnot(s1, s0));
            }
            g.extend(decompose_ccz_cz(a1, a0, s0));
            if ext(vp) {
                g.extend(cnot(s1, s0));
            }
            g.push(Gate::x(a1));
            if ext(vq) {
                g.extend(cnot(s1, s0));
            }
            g.extend(decompose_ccz_cz(a1, a0, s0));
            g.extend(phase_layer);
            if ext(vq) {
                g.extend(cnot(s1, s0));
            }
        }
        DecompositionChoice::IToffoli => {
            // Each CCZ is a Hadamard-dressed iToffoli (CC-iZ) plus a
            // long-range CS†(a1,s0). The SWAP routing of the CS† reduces
            // to a CNOT pair: the SWAP's innermost CNOT commutes with the
            // diagonal CS† and cancels against its mirror. Fusing the two
            // routings back to back collapses the remnants between the
            // CS†s onto X gates:
            //   X(a1) E1 [H iToff H] A B C  X(a0)X(a1) E1 E2  C B A [H iToff H] E2
            // with A = CNOT(a0→a1), B = CNOT(a1→a0), C = CS†(a0,s0) and
            // E = CNOT(s1→s0) weight extensions.
            g.push(Gate::x(a1));
            if ext(vp) {
                g.extend(cnot(s1, s0));
            }
            g.push(Gate::h(a0));
            g.push(Gate::IToffoli { c0: a1, t: a0, c1: s0 });
            g.push(Gate::h(a0));
            g.extend(cnot(a0, a1));
            g.extend(cnot(a1, a0));
            g.push(Gate::CsDg { a: a0, b: s0 });
            g.push(Gate::x(a0));
            g.push(Gate::x(a1));
            if ext(vp) {
                g.extend(cnot(s1, s0));
            }
            if ext(vq) {
                g.extend(cnot(s1, s0));
            }
            g.push(Gate::CsDg { a: a0, b: s0 });
            g.extend(cnot(a1, a0));
            g.extend(cnot(a0, a1));
            g.push(Gate::h(a0));
            g.push(Gate::IToffoli { c0: a1, t: a0, c1: s0 });
            g.push(Gate::h(a0));
            g.extend(phase_layer);
            if ext(vq) {
                g.extend(cnot(s1, s0));
            }
        }
    }
    Ok(g)
}

/// Two-ancilla LCU circuit for off-diagonal transition amplitudes between
/// the number operators of `p` and `q`.
///
/// Layout a1–a0–s0–s1. Outcomes (a0,a1) = (1,0) and (1,1) post-select the
/// states ¼[(I − Z̃_p) ± e^{iπ/4}(I − Z̃_q)] on the prepared state.
pub fn build_offdiagonal_circuit(
    p: FermionOp,
    q: FermionOp,
    prep: &PrepUnitary,
    choice: DecompositionChoice,
) -> Result<Circuit, Error> {
    if p.kind != FermionKind::Number || q.kind != FermionKind::Number {
        return Err(Error::Circuit(
            "off-diagonal circuits take number operators".into(),
        ));
    }
    if p == q {
        return Err(Error::Circuit(
            "p = q: use the diagonal circuit instead".into(),
        ));
    }
    let vp = z2_transform_pauli(&jw_z(p), p.sector())?;
    let vq = z2_transform_pauli(&jw_z(q), q.sector())?;
    let mut circ = Circuit::new(&["a1", "a0", "s0", "s1"]);
    let (a1, a0, s0, s1) = (0, 1, 2, 3);
    circ.push(prep_gate(s0, s1, prep));
    circ.push(Gate::h(a0));
    circ.push(Gate::h(a1));
    circ.push_all(dc_pair_block(choice, &vp, &vq)?);
    circ.push(Gate::h(a0));
    circ.push(Gate::h(a1));
    circ.validate()?;
    Ok(circ)
}

// ---------------------------------------------------------------------------
// Transpilation
// ---------------------------------------------------------------------------

/// Greedy ASAP reschedule: single-qubit gates pack into shared easy
/// moments, multi-qubit gates keep exclusive moments. Only reorders gates
/// on disjoint qubits, so the unitary is preserved exactly.
fn reschedule(circ: &Circuit) -> Circuit {
    enum Slot {
        Easy(Vec<Gate>),
        Hard(Gate),
    }
    let mut slots: Vec<Slot> = Vec::new();
    let mut frontier = vec![0usize; circ.n_qubits];
    for m in &circ.moments {
        for g in &m.gates {
            let qs = g.qubits();
            let earliest = qs.iter().map(|&q| frontier[q]).max().unwrap_or(0);
            if g.is_multi() {
                let mut t = earliest;
                loop {
                    if t >= slots.len() {
                        slots.push(Slot::Hard(g.clone()));
                        break;
                    }
                    if matches!(&slots[t], Slot::Easy(gs) if gs.is_empty()) {
                        slots[t] = Slot::Hard(g.clone());
                        break;
                    }
                    t += 1;
                }
                for q in qs {
                    frontier[q] = t + 1;
                }
            } else {
                let mut t = earliest;
                loop {
                    if t >= slots.len() {
                        slots.push(Slot::Easy(vec![g.clone()]));
                        break;
                    }
                    if let Slot::Easy(gs) = &mut slots[t] {
                        gs.push(g.clone());
                        break;
                    }
                    t += 1;
                }
                for q in g.qubits() {
                    frontier[q] = t + 1;
                }
            }
        }
    }
    let moments = slots
        .into_iter()
        .filter_map(|s| match s {
            Slot::Easy(gs) if gs.is_empty() => None,
            Slot::Easy(gs) => Some(Moment { gates: gs }),
            Slot::Hard(g) => Some(Moment { gates: vec![g] }),
        })
        .collect();
    Circuit {
        n_qubits: circ.n_qubits,
        labels: circ.labels.clone(),
        moments,
    }
}

/// Merge runs of single-qubit gates per qubit and drop exact identities.
fn merge_single_qubit(circ: &Circuit) -> Circuit {
    let mut out = circ.clone();
    for q in 0..out.n_qubits {
        let mut run: Vec<(usize, usize)> = Vec::new();
        let mut runs: Vec<Vec<(usize, usize)>> = Vec::new();
        for (mi, m) in out.moments.iter().enumerate() {
            let blocked = m
                .gates
                .iter()
                .any(|g| g.is_multi() && g.qubits().contains(&q));
            if blocked {
                if run.len() > 1 {
                    runs.push(std::mem::take(&mut run));
                } else {
                    run.clear();
                }
                continue;
            }
            for (gi, g) in m.gates.iter().enumerate() {
                if !g.is_multi() && g.qubits() == [q] {
                    run.push((mi, gi));
                }
            }
        }
        if run.len() > 1 {
            runs.push(run);
        }
        for r in runs {
            // Compose in schedule order: later gates multiply from the left.
            let mut acc = [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]];
            for &(mi, gi) in &r {
                if let Gate::One { m, .. } = &out.moments[mi].gates[gi] {
                    acc = m2_mul(m, &acc);
                }
            }
            let (mi0, gi0) = r[0];
            out.moments[mi0].gates[gi0] = Gate::one(q, acc, "u");
            for &(mi, gi) in &r[1..] {
                out.moments[mi].gates[gi] = Gate::one(q, acc, "__dead");
            }
        }
    }
    for m in &mut out.moments {
        m.gates
            .retain(|g| !matches!(g, Gate::One { label, .. } if label == "__dead"));
        m.gates
            .retain(|g| !matches!(g, Gate::One { m, .. } if m2_is_identity(m, 1e-12)));
    }
    out.moments.retain(|m| !m.gates.is_empty());
    out
}

/// Cancel or compose adjacent two-qubit diagonal gates on the same pair
/// (CZ·CZ = I, CS·CS† = I, CS·CS = CZ, ...).
fn simplify_two_qubit(circ: &Circuit) -> Circuit {
    let mut out = circ.clone();
    let corner = |g: &Gate| -> Option<(usize, usize, Complex64)> {
        match g {
            Gate::Cz { a, b } => Some((*a.min(b), *a.max(b), c(-1.0, 0.0))),
            Gate::Cs { a, b } => Some((*a.min(b), *a.max(b), c(0.0, 1.0))),
            Gate::CsDg { a, b } => Some((*a.min(b), *a.max(b), c(0.0, -1.0))),
            Gate::CzPhi { a, b, phi } => {
                Some((*a.min(b), *a.max(b), Complex64::from_polar(1.0, *phi)))
            }
            _ => None,
        }
    };
    let make = |a: usize, b: usize, gamma: Complex64| -> Option<Gate> {
        if (gamma - c(1.0, 0.0)).norm() < 1e-12 {
            None
        } else if (gamma - c(-1.0, 0.0)).norm() < 1e-12 {
            Some(Gate::Cz { a, b })
        } else if (gamma - c(0.0, 1.0)).norm() < 1e-12 {
            Some(Gate::Cs { a, b })
        } else if (gamma - c(0.0, -1.0)).norm() < 1e-12 {
            Some(Gate::CsDg { a, b })
        } else {
            Some(Gate::CzPhi {
                a,
                b,
                phi: gamma.arg(),
            })
        }
    };
    'outer: loop {
        for i in 0..out.moments.len() {
            let first = if out.moments[i].gates.len() == 1 {
                corner(&out.moments[i].gates[0])
            } else {
                None
            };
            let Some((a, b, g1)) = first else { continue };
            for j in i + 1..out.moments.len() {
                let touches = out.moments[j].qubits().iter().any(|&q| q == a || q == b);
                if !touches {
                    continue;
                }
                let second = if out.moments[j].gates.len() == 1 {
                    corner(&out.moments[j].gates[0])
                } else {
                    None
                };
                if let Some((a2, b2, g2)) = second {
                    if (a2, b2) == (a, b) {
                        out.moments[j].gates.clear();
                        match make(a, b, g1 * g2) {
                            Some(g) => out.moments[i].gates = vec![g],
                            None => out.moments[i].gates.clear(),
                        }
                        out.moments.retain(|m| !m.gates.is_empty());
                        continue 'outer;
                    }
                }
                break;
            }
        }
        break;
    }
    out
}

/// Transpile: pack gates ASAP, merge single-qubit runs, cancel adjacent
/// diagonal two-qubit pairs and drop empty moments, to a fixed point. The
/// unitary is preserved exactly; depth never increases.
pub fn transpile(circ: &Circuit) -> Circuit {
    let mut cur = reschedule(circ);
    for _ in 0..16 {
        let next = reschedule(&simplify_two_qubit(&merge_single_qubit(&cur)));
        let same = next.depth_moments() == cur.depth_moments()
            && next.moments.iter().map(|m| m.gates.len()).sum::<usize>()
                == cur.moments.iter().map(|m| m.gates.len()).sum::<usize>();
        cur = next;
        if same {
            break;
        }
    }
    if cur.depth_moments() > circ.depth_moments() {
        return circ.clone();
    }
    cur
}
