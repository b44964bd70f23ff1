//! Randomized compiling generalized to the non-Clifford hard cycles:
//! brute-force twirl-set computation, per-randomization rewriting and
//! exact averaging.

use std::sync::OnceLock;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::{Circuit, Gate, Moment};
use crate::error::Error;
use crate::math::{trace, CMat};
use crate::pauli::{Pauli, PauliString};
use crate::sim::{pauli_string_from_code, run_density, DensityMatrix, NoiseModel};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// The native hard-cycle gates randomized compiling knows how to twirl.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum TwirlableGate {
    Cz,
    Cs,
    CsDg,
    IToffoli,
}

impl TwirlableGate {
    pub fn name(&self) -> &'static str {
        match self {
            TwirlableGate::Cz => "cz",
            TwirlableGate::Cs => "cs",
            TwirlableGate::CsDg => "csdg",
            TwirlableGate::IToffoli => "itoffoli",
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            TwirlableGate::IToffoli => 3,
            _ => 2,
        }
    }

    pub fn matrix(&self) -> CMat {
        match self {
            TwirlableGate::Cz => {
                let mut m = CMat::identity(4, 4);
                m[(3, 3)] = c(-1.0, 0.0);
                m
            }
            TwirlableGate::Cs => {
                let mut m = CMat::identity(4, 4);
                m[(3, 3)] = c(0.0, 1.0);
                m
            }
            TwirlableGate::CsDg => {
                let mut m = CMat::identity(4, 4);
                m[(3, 3)] = c(0.0, -1.0);
                m
            }
            TwirlableGate::IToffoli => {
                // Controls on qubits 0 and 2, target in the middle.
                let mut m = CMat::identity(8, 8);
                m[(5, 5)] = c(0.0, 0.0);
                m[(7, 7)] = c(0.0, 0.0);
                m[(5, 7)] = c(0.0, 1.0);
                m[(7, 5)] = c(0.0, 1.0);
                m
            }
        }
    }
}

/// Pauli strings stabilizing a hard-cycle gate, with their inversion
/// partners.
#[derive(Clone, Debug)]
pub struct TwirlSet {
    pub gate: TwirlableGate,
    /// (T, T_c) with X = T·X·T_c as unitaries up to global phase; T is
    /// stored with phase +1, T_c with the phase that makes the identity
    /// exact.
    pub pairs: Vec<(PauliString, PauliString)>,
    /// Number of strings in the full n-qubit Pauli set.
    pub n_total: usize,
    /// Members whose partner needs no global phase at all.
    pub n_strict_phase: usize,
}

/// Recover (phase, code) such that m = phase · P_code, if m is
/// proportional to a Pauli string.
fn match_pauli(m: &CMat, k: usize) -> Option<(Complex64, PauliString)> {
    let dim = 1usize << k;
    for code in 0..4usize.pow(k as u32) {
        let p = pauli_string_from_code(code, k);
        let pm = p.to_matrix();
        let inner = trace(&(pm.adjoint() * m)) / c(dim as f64, 0.0);
        if (inner.norm() - 1.0).abs() < 1e-9 {
            let residual = (m - pm * inner).norm();
            if residual < 1e-10 {
                return Some((inner, p));
            }
        }
    }
    None
}

/// Brute-force membership over all Pauli strings on the gate's arity:
/// T is a member when X†·T†·X is again proportional to a Pauli string,
/// which then serves as the partner T_c.
pub fn twirl_set(gate: TwirlableGate) -> TwirlSet {
    let k = gate.arity();
    let x = gate.matrix();
    let n_total = 4usize.pow(k as u32);
    let mut pairs = Vec::new();
    let mut n_strict = 0;
    for code in 0..n_total {
        let t = pauli_string_from_code(code, k);
        let tm = t.to_matrix();
        let m = x.adjoint() * tm.adjoint() * &x;
        if let Some((phase, partner)) = match_pauli(&m, k) {
            if (phase - c(1.0, 0.0)).norm() < 1e-9 {
                n_strict += 1;
            }
            let tc = match crate::pauli::Phase::from_complex(phase) {
                Some(ph) => partner.with_phase(ph),
                None => partner,
            };
            pairs.push((t, tc));
        }
    }
    TwirlSet {
        gate,
        pairs,
        n_total,
        n_strict_phase: n_strict,
    }
}

fn cached_twirl_set(gate: TwirlableGate) -> &'static TwirlSet {
    static CZ: OnceLock<TwirlSet> = OnceLock::new();
    static CS: OnceLock<TwirlSet> = OnceLock::new();
    static CSDG: OnceLock<TwirlSet> = OnceLock::new();
    static ITOF: OnceLock<TwirlSet> = OnceLock::new();
    match gate {
        TwirlableGate::Cz => CZ.get_or_init(|| twirl_set(TwirlableGate::Cz)),
        TwirlableGate::Cs => CS.get_or_init(|| twirl_set(TwirlableGate::Cs)),
        TwirlableGate::CsDg => CSDG.get_or_init(|| twirl_set(TwirlableGate::CsDg)),
        TwirlableGate::IToffoli => ITOF.get_or_init(|| twirl_set(TwirlableGate::IToffoli)),
    }
}

fn twirlable_of(gate: &Gate) -> Result<Option<(TwirlableGate, Vec<usize>)>, Error> {
    match gate {
        Gate::Cz { a, b } => Ok(Some((TwirlableGate::Cz, vec![*a.min(b), *a.max(b)]))),
        Gate::Cs { a, b } => Ok(Some((TwirlableGate::Cs, vec![*a.min(b), *a.max(b)]))),
        Gate::CsDg { a, b } => Ok(Some((TwirlableGate::CsDg, vec![*a.min(b), *a.max(b)]))),
        Gate::IToffoli { c0, t, c1 } => {
            let mut qs = [*c0, *t, *c1];
            qs.sort_unstable();
            Ok(Some((TwirlableGate::IToffoli, qs.to_vec())))
        }
        // The dense prep gate is left bare: it is not part of the native
        // twirlable cycle set.
        Gate::Dense2 { .. } => Ok(None),
        Gate::CzPhi { .. } => Err(Error::Circuit(
            "hard cycle with unknown gate kind for randomized compiling (CZφ)".into(),
        )),
        Gate::One { .. } => Ok(None),
    }
}

fn letter_gate(q: usize, letter: Pauli) -> Option<Gate> {
    match letter {
        Pauli::I => None,
        Pauli::X => Some(Gate::x(q)),
        Pauli::Y => Some(Gate::one(
            q,
            [[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, 1.0), c(0.0, 0.0)]],
            "y",
        )),
        Pauli::Z => Some(Gate::one(
            q,
            [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]],
            "z",
        )),
    }
}

/// One randomization: every twirlable hard cycle is dressed with a
/// uniformly drawn (T, T_c) pair compiled into neighboring easy moments.
/// The unitary is unchanged up to a global phase.
pub fn randomize(circ: &Circuit, seed: u64) -> Result<Circuit, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Circuit {
        n_qubits: circ.n_qubits,
        labels: circ.labels.clone(),
        moments: Vec::new(),
    };
    for m in &circ.moments {
        if !m.is_hard() {
            out.moments.push(m.clone());
            continue;
        }
        let gate = &m.gates[0];
        match twirlable_of(gate)? {
            None => out.moments.push(m.clone()),
            Some((kind, qubits)) => {
                let set = cached_twirl_set(kind);
                let idx = rng.gen_range(0..set.pairs.len());
                let (t, tc) = &set.pairs[idx];
                let before: Vec<Gate> = qubits
                    .iter()
                    .zip(&t.letters)
                    .filter_map(|(&q, &l)| letter_gate(q, l))
                    .collect();
                let after: Vec<Gate> = qubits
                    .iter()
                    .zip(&tc.letters)
                    .filter_map(|(&q, &l)| letter_gate(q, l))
                    .collect();
                if !before.is_empty() {
                    out.moments.push(Moment { gates: before });
                }
                out.moments.push(m.clone());
                if !after.is_empty() {
                    out.moments.push(Moment { gates: after });
                }
            }
        }
    }
    Ok(crate::circuit::transpile(&out))
}

/// A seeded batch of equivalent randomizations.
#[derive(Clone, Debug)]
pub struct RandomizedBatch {
    pub seed: u64,
    pub circuits: Vec<Circuit>,
}

pub fn randomized_batch(circ: &Circuit, n_rand: usize, seed: u64) -> Result<RandomizedBatch, Error> {
    if n_rand == 0 {
        return Err(Error::Circuit("n_rand must be at least 1".into()));
    }
    let mut circuits = Vec::with_capacity(n_rand);
    for i in 0..n_rand {
        circuits.push(randomize(circ, derived_seed(seed, i as u64))?);
    }
    Ok(RandomizedBatch { seed, circuits })
}

/// Per-randomization seed derivation (splitmix64 step).
pub fn derived_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(0x9e3779b97f4a7c15u64.wrapping_mul(index.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Exact (infinite-shot) randomized-compiling average: the uniform
/// mixture of the noisy outputs over the batch.
pub fn rc_average(
    circ: &Circuit,
    n_rand: usize,
    noise: &NoiseModel,
    seed: u64,
) -> Result<DensityMatrix, Error> {
    let batch = randomized_batch(circ, n_rand, seed)?;
    let input = DensityMatrix::zero_state(circ.n_qubits);
    let mut acc: Option<CMat> = None;
    for rc_circ in &batch.circuits {
        let rho = run_density(rc_circ, noise, &input)?;
        acc = Some(match acc {
            None => rho.mat,
            Some(a) => a + rho.mat,
        });
    }
    let mat = acc.unwrap() * c(1.0 / n_rand as f64, 0.0);
    Ok(DensityMatrix {
        n_qubits: circ.n_qubits,
        mat,
    })
}

/// Mean PTM of the noisy single-gate cycle averaged over the whole twirl
/// set (the infinite-randomization limit).
pub fn exhaustive_twirl_ptm(
    gate: TwirlableGate,
    noise: &NoiseModel,
) -> Result<nalgebra::DMatrix<f64>, Error> {
    let set = cached_twirl_set(gate);
    let k = gate.arity();
    let labels: Vec<String> = (0..k).map(|i| format!("q{i}")).collect();
    let refs: Vec<&str> = labels.iter().map(|s| s.as_str()).collect();
    let mut acc: Option<nalgebra::DMatrix<f64>> = None;
    for (t, tc) in &set.pairs {
        let mut circ = Circuit::new(&refs);
        let before: Vec<Gate> = (0..k).filter_map(|q| letter_gate(q, t.letters[q])).collect();
        if !before.is_empty() {
            circ.moments.push(Moment { gates: before });
        }
        circ.push(hard_gate_on(gate, k));
        let after: Vec<Gate> = (0..k).filter_map(|q| letter_gate(q, tc.letters[q])).collect();
        if !after.is_empty() {
            circ.moments.push(Moment { gates: after });
        }
        let r = crate::sim::circuit_ptm(&circ, noise)?;
        acc = Some(match acc {
            None => r,
            Some(a) => a + r,
        });
    }
    Ok(acc.unwrap() / set.pairs.len() as f64)
}

/// PTM of the bare noisy cycle.
pub fn bare_cycle_ptm(gate: TwirlableGate, noise: &NoiseModel) -> Result<nalgebra::DMatrix<f64>, Error> {
    let k = gate.arity();
    let labels: Vec<String> = (0..k).map(|i| format!("q{i}")).collect();
    let refs: Vec<&str> = labels.iter().map(|s| s.as_str()).collect();
    let mut circ = Circuit::new(&refs);
    circ.push(hard_gate_on(gate, k));
    crate::sim::circuit_ptm(&circ, noise)
}

fn hard_gate_on(gate: TwirlableGate, k: usize) -> Gate {
    match gate {
        TwirlableGate::Cz => Gate::Cz { a: 0, b: 1 },
        TwirlableGate::Cs => Gate::Cs { a: 0, b: 1 },
        TwirlableGate::CsDg => Gate::CsDg { a: 0, b: 1 },
        TwirlableGate::IToffoli => {
            debug_assert_eq!(k, 3);
            Gate::IToffoli { c0: 0, t: 1, c1: 2 }
        }
    }
}

/// Effective error PTM of a noisy cycle: the measured PTM with the ideal
/// gate's transfer matrix undone (unitary PTMs are orthogonal).
pub fn effective_error_ptm(
    cycle_ptm: &nalgebra::DMatrix<f64>,
    gate: TwirlableGate,
) -> Result<nalgebra::DMatrix<f64>, Error> {
    let ideal = bare_cycle_ptm(gate, &NoiseModel::ideal())?;
    Ok(cycle_ptm * ideal.transpose())
}

/// Sum of squared off-diagonal entries.
pub fn offdiagonal_mass(r: &nalgebra::DMatrix<f64>) -> f64 {
    let mut acc = 0.0;
    for i in 0..r.nrows() {
        for j in 0..r.ncols() {
            if i != j {
                acc += r[(i, j)] * r[(i, j)];
            }
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_offdiagonal_circuit, DecompositionChoice};
    use crate::math::phase_aligned_distance;
    use crate::model::prep_unitary;
    use crate::pauli::{FermionOp, Phase, Spin};

    #[test]
    fn twirl_set_counts() {
        assert_eq!(twirl_set(TwirlableGate::Cz).pairs.len(), 16);
        assert_eq!(twirl_set(TwirlableGate::Cs).pairs.len(), 4);
        assert_eq!(twirl_set(TwirlableGate::CsDg).pairs.len(), 4);
        assert_eq!(twirl_set(TwirlableGate::IToffoli).pairs.len(), 8);
    }

    #[test]
    fn twirl_sets_contain_identity_and_verify() {
        for gate in [
            TwirlableGate::Cz,
            TwirlableGate::Cs,
            TwirlableGate::CsDg,
            TwirlableGate::IToffoli,
        ] {
            let set = twirl_set(gate);
            let x = gate.matrix();
            assert!(set.pairs.iter().any(|(t, _)| t.is_identity()));
            for (t, tc) in &set.pairs {
                let lhs = t.to_matrix() * &x * tc.to_matrix();
                assert!(
                    phase_aligned_distance(&lhs, &x) < 1e-10,
                    "{:?}: {t} / {tc}",
                    gate
                );
            }
        }
    }

    #[test]
    fn non_clifford_partners_equal_the_twirl() {
        for gate in [TwirlableGate::Cs, TwirlableGate::CsDg, TwirlableGate::IToffoli] {
            let set = twirl_set(gate);
            for (t, tc) in &set.pairs {
                assert_eq!(&t.letters, &tc.letters, "{:?}", gate);
                assert_eq!(tc.phase, Phase::One, "{:?}: partner phase", gate);
            }
            assert_eq!(set.n_strict_phase, set.pairs.len());
        }
    }

    #[test]
    fn randomize_keeps_circuits_without_hard_cycles() {
        let mut circ = Circuit::new(&["q0", "q1"]);
        circ.push(Gate::h(0));
        circ.push(Gate::h(1));
        let r = randomize(&circ, 7).unwrap();
        let d = phase_aligned_distance(&r.unitary().unwrap(), &circ.unitary().unwrap());
        assert!(d < 1e-12);
    }

    #[test]
    fn randomize_preserves_single_cz_unitary() {
        let mut circ = Circuit::new(&["q0", "q1"]);
        circ.push(Gate::Cz { a: 0, b: 1 });
        for seed in 0..20 {
            let r = randomize(&circ, seed).unwrap();
            let d = phase_aligned_distance(&r.unitary().unwrap(), &circ.unitary().unwrap());
            assert!(d < 1e-12, "seed {seed}: {d}");
        }
    }

    #[test]
    fn randomize_rejects_cz_phi_cycles() {
        let mut circ = Circuit::new(&["q0", "q1"]);
        circ.push(Gate::CzPhi { a: 0, b: 1, phi: 0.3 });
        assert!(randomize(&circ, 1).is_err());
    }

    #[test]
    fn randomizations_of_offdiagonal_circuit_are_equivalent() {
        let prep = prep_unitary(&[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        let p = FermionOp::number(0, Spin::Up);
        let q = FermionOp::number(1, Spin::Down);
        for choice in [DecompositionChoice::IToffoli, DecompositionChoice::CzOnly] {
            let circ = build_offdiagonal_circuit(p, q, &prep, choice).unwrap();
            let bare = circ.unitary().unwrap();
            let batch = randomized_batch(&circ, 12, 42).unwrap();
            for (i, r) in batch.circuits.iter().enumerate() {
                let d = phase_aligned_distance(&r.unitary().unwrap(), &bare);
                assert!(d < 1e-9, "{choice:?} randomization {i}: {d}");
            }
        }
    }

    #[test]
    fn rc_average_without_noise_is_the_bare_projector() {
        let prep = prep_unitary(&[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        let p = FermionOp::number(0, Spin::Up);
        let q = FermionOp::number(0, Spin::Down);
        let circ = build_offdiagonal_circuit(p, q, &prep, DecompositionChoice::IToffoli).unwrap();
        let avg = rc_average(&circ, 8, &NoiseModel::ideal(), 3).unwrap();
        let psi = crate::sim::run_statevector(&circ, &crate::sim::StateVector::zero(4)).unwrap();
        let proj = crate::sim::DensityMatrix::from_state(&psi);
        assert!((avg.mat - proj.mat).norm() < 1e-9);
    }

    fn coherent_only_noise(gate: TwirlableGate) -> NoiseModel {
        let mut noise = NoiseModel::ideal();
        match gate {
            TwirlableGate::IToffoli => {
                noise.itoffoli.coherent_axis = Some(PauliString::parse("ZZI").unwrap());
                noise.itoffoli.coherent_angle = 0.11;
            }
            _ => {
                noise.two_qubit.coherent_axis = Some(PauliString::parse("ZZ").unwrap());
                noise.two_qubit.coherent_angle = 0.11;
            }
        }
        noise
    }

    #[test]
    fn full_twirl_diagonalizes_cz_coherent_error() {
        let noise = coherent_only_noise(TwirlableGate::Cz);
        let avg = exhaustive_twirl_ptm(TwirlableGate::Cz, &noise).unwrap();
        let err = effective_error_ptm(&avg, TwirlableGate::Cz).unwrap();
        assert!(offdiagonal_mass(&err).sqrt() < 1e-9, "{err:.4}");
    }

    #[test]
    fn partial_twirl_shrinks_itoffoli_offdiagonal_mass() {
        let noise = coherent_only_noise(TwirlableGate::IToffoli);
        let bare = bare_cycle_ptm(TwirlableGate::IToffoli, &noise).unwrap();
        let bare_err = effective_error_ptm(&bare, TwirlableGate::IToffoli).unwrap();
        let avg = exhaustive_twirl_ptm(TwirlableGate::IToffoli, &noise).unwrap();
        let avg_err = effective_error_ptm(&avg, TwirlableGate::IToffoli).unwrap();
        let (before, after) = (offdiagonal_mass(&bare_err), offdiagonal_mass(&avg_err));
        assert!(after < before, "off-diagonal mass {after} !< {before}");
        // Not all coherences are tailored away for the non-Clifford gate.
        assert!(after > 1e-12);
    }

    #[test]
    fn derived_seeds_differ() {
        let a = derived_seed(1, 0);
        let b = derived_seed(1, 1);
        let c2 = derived_seed(2, 0);
        assert_ne!(a, b);
        assert_ne!(a, c2);
    }
}
