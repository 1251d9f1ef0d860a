//! Residual of sampled maps against the equation, and the linear fit check.

use nalgebra::DVector;
use oeq::{fit_linear, residual, Instance, Pairing, PointMap};

fn v(xs: &[f64]) -> DVector<f64> {
    DVector::from_row_slice(xs)
}

fn main() {
    let xs = [1.0, 2.0, -1.0];
    let f = PointMap::tabulate(1, 2, &xs.map(|t| v(&[t])), |x| v(&[x[0], x[0] * x[0]])).unwrap();
    let g = PointMap::tabulate(1, 2, &[v(&[1.0]), v(&[2.0])], |a| v(&[a[0], 0.0])).unwrap();
    let inst = Instance::new(Pairing::standard(1), Pairing::standard(2), f, g).unwrap();
    let r = residual(&inst).unwrap();
    println!("f(x) = (x, x^2), g(a) = (a, 0): max residual {:e} over {} pairs", r.max_abs_residual, r.pair_count);

    let f = PointMap::new(1, 1, vec![(v(&[1.0]), v(&[1.0]))]).unwrap();
    let g = PointMap::new(1, 1, vec![(v(&[1.0]), v(&[2.0]))]).unwrap();
    let bad = Instance::new(Pairing::standard(1), Pairing::standard(1), f, g).unwrap();
    let r = residual(&bad).unwrap();
    println!("f = id, g = 2 id: max residual {} at pair {:?}", r.max_abs_residual, r.argmax_pair);

    let square = PointMap::new(1, 1, vec![(v(&[1.0]), v(&[1.0])), (v(&[2.0]), v(&[4.0]))]).unwrap();
    match fit_linear(&square, 1e-10) {
        Ok(op) => println!("unexpected linear fit {}", op.matrix()),
        Err(err) => println!("x -> x^2: {err}"),
    }
}
