//! Annihilators, adjoints and quotients under a non-symmetric pairing.

use nalgebra::{DMatrix, DVector};
use oeq::linalg::{annihilator, orthonormal_span_in, quotient_projection, Side};
use oeq::{LinearOperator, Pairing, Subspace};

fn main() {
    let g = Pairing::from_rows(3, &[2.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 3.0]).unwrap();
    let w = orthonormal_span_in(3, &[DVector::from_row_slice(&[1.0, 0.0, 0.0])], 1e-10).unwrap();

    let w_perp = annihilator(&w, &g, Side::Left).unwrap();
    let back = annihilator(&w_perp, &g, Side::Right).unwrap();
    println!("W^perp has rank {}; basis\n{}", w_perp.rank(), w_perp.basis());
    println!("W^perp^perp = W: {}", back.same_span(&w, 1e-9));

    let s = LinearOperator::new(
        DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0]),
        g.clone(),
        g.clone(),
    )
    .unwrap();
    let adj = s.adjoint();
    let x = DVector::from_row_slice(&[0.3, -1.0, 2.0]);
    let b = DVector::from_row_slice(&[1.0, 1.0, -0.5]);
    println!("<S x, b> = {:.12}", g.eval(&s.apply(&x), &b));
    println!("<x, S* b> = {:.12}", g.eval(&x, &adj.apply(&b)));
    println!("cond(S) = {:.4}, S** = S: {}", s.condition_number(), (adj.adjoint().matrix() - s.matrix()).amax() < 1e-12);

    let q = quotient_projection(&Subspace::full(3), &w).unwrap();
    println!("R^3 / W has dimension {}, projection\n{}", q.dim(), q.projection().matrix());
}
