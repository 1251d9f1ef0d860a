//! Builds a solution pair from a hand-written certificate.

use nalgebra::{DMatrix, DVector};
use oeq::decomposition::DecompositionParts;
use oeq::linalg::orthonormal_span_in;
use oeq::{residual, synthesize, Decomposition, Pairing, PointMap, Subspace};

fn v(xs: &[f64]) -> DVector<f64> {
    DVector::from_row_slice(xs)
}

fn main() {
    // L = R^2, M = span{e2}, A = [2], phi(t) = (t, sin t), psi = zero-extension
    let a = 2.0;
    let xs: Vec<DVector<f64>> = (-2..=2).map(|k| v(&[k as f64 * 0.5])).collect();
    let alphas: Vec<DVector<f64>> = (1..=3).map(|k| v(&[k as f64])).collect();
    let keys: Vec<DVector<f64>> = xs.iter().map(|x| x * a).collect();
    let phi = PointMap::tabulate(1, 2, &keys, |z| v(&[z[0], z[0].sin()])).unwrap();
    let lambdas: Vec<DVector<f64>> = alphas.iter().map(|al| al / a).collect();
    let psi = PointMap::tabulate(2, 2, &lambdas.iter().map(|l| v(&[l[0], 0.0])).collect::<Vec<_>>(), |l| l.clone());
    let psi = psi.unwrap();

    let dec = Decomposition::new(DecompositionParts {
        e_pairing: Pairing::standard(1),
        f_pairing: Pairing::standard(2),
        image_span: Subspace::full(2),
        collapsed: orthonormal_span_in(2, &[v(&[0.0, 1.0])], 1e-10).unwrap(),
        core: DMatrix::from_element(1, 1, a),
        primal_section: phi,
        dual_section: psi,
    })
    .unwrap();
    let inst = synthesize(&dec, &xs, &alphas).unwrap();
    for (x, y) in inst.f().samples() {
        println!("f({:+.2}) = ({:+.4}, {:+.4})", x[0], y[0], y[1]);
    }
    for (al, y) in inst.g().samples() {
        println!("g({:+.2}) = ({:+.4}, {:+.4})", al[0], y[0], y[1]);
    }
    println!("max residual {:e}", residual(&inst).unwrap().max_abs_residual);
}
