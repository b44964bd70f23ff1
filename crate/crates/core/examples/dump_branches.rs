use qresp_core::circuit::{build_offdiagonal_circuit, gate_census, transpile, DecompositionChoice};
use qresp_core::model::prep_unitary;
use qresp_core::pauli::{FermionOp, Spin};
use num_complex::Complex64;

fn main() {
    let prep = prep_unitary(&[
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
    ])
    .unwrap();
    let ops = [
        FermionOp::number(0, Spin::Up),
        FermionOp::number(0, Spin::Down),
        FermionOp::number(1, Spin::Up),
        FermionOp::number(1, Spin::Down),
    ];
    for i in 0..4 {
        for j in i + 1..4 {
            let (p, q) = (ops[i], ops[j]);
            let it = transpile(&build_offdiagonal_circuit(p, q, &prep, DecompositionChoice::IToffoli).unwrap());
            let cz = transpile(&build_offdiagonal_circuit(p, q, &prep, DecompositionChoice::CzOnly).unwrap());
            let (ci, cc) = (gate_census(&it), gate_census(&cz));
            println!("({p},{q}): itoff depth {} vs cz depth {} -> ratio {:.3}", ci.depth, cc.depth, ci.depth as f64 / cc.depth as f64);
        }
    }
    // Full dump of the worst pair.
    let it = transpile(&build_offdiagonal_circuit(ops[0], ops[3], &prep, DecompositionChoice::IToffoli).unwrap());
    println!("--- (0u,1d) itoffoli branch:\n{}", it.dump());
}
