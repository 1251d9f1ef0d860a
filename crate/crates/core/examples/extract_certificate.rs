//! Recovers (L, M, A, phi, psi) from a sampled solution pair.

use nalgebra::DVector;
use oeq::decomposition::extract_with_diagnostics;
use oeq::{verify_decomposition, Instance, Pairing, PointMap};

fn v(xs: &[f64]) -> DVector<f64> {
    DVector::from_row_slice(xs)
}

fn main() {
    let xs: Vec<DVector<f64>> = [1.0, 2.0, -1.0].iter().map(|&t| v(&[t])).collect();
    let f = PointMap::tabulate(1, 2, &xs, |x| v(&[x[0], x[0] * x[0]])).unwrap();
    let g = PointMap::tabulate(1, 2, &[v(&[1.0]), v(&[2.0])], |a| v(&[a[0], 0.0])).unwrap();
    let inst = Instance::new(Pairing::standard(1), Pairing::standard(2), f, g).unwrap();

    let ex = extract_with_diagnostics(&inst, 1e-10).unwrap();
    let dec = &ex.decomposition;
    println!("L basis\n{}M basis\n{}A = {}", dec.image_span().basis(), dec.collapsed().basis(), dec.core().matrix());
    for (key, out) in dec.primal_section().samples() {
        println!("phi({:.3}) = ({:.3}, {:.3})", key[0], out[0], out[1]);
    }
    println!("|A* Q0^ - I| = {:e}, norm bound slack {:.3}", ex.diagnostics.identity_defect, ex.diagnostics.norm_bound_slack);
    for c in verify_decomposition(dec, &inst).clauses {
        println!("{:<20} {:e} {}", c.name, c.value, if c.passed { "ok" } else { "FAIL" });
    }
}
