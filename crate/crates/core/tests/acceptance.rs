//! Acceptance criteria. Run with `--nocapture` to see one line per criterion.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use oeq::cli::files::{instance_from_json, instance_to_json, save_instance};
use oeq::decomposition::{extract_with_diagnostics, hilbert_decompose, synthesize, verify_decomposition};
use oeq::equation::EquationError;
use oeq::generators::{config_sweep, generate, GaussianSource, GenConfig, GenError, PairingMode};
use oeq::linalg::{annihilator, orthonormal_span_in, LinearOperator, Pairing, Side, Subspace};
use oeq::{fit_linear, residual, Instance, PointMap};

const SWEEP_SEED: u64 = 20_240_601;

fn report(name: &str, failures: &[String], started: Instant) {
    let secs = started.elapsed().as_secs_f64();
    if failures.is_empty() {
        println!("PASS  {name}  ({secs:.2} s)");
    } else {
        println!("FAIL  {name}  ({} failures, {secs:.2} s)", failures.len());
        for f in failures.iter().take(10) {
            println!("      {f}");
        }
    }
    assert!(failures.is_empty(), "{name}: {}", failures[0]);
}

fn v(xs: &[f64]) -> DVector<f64> {
    DVector::from_row_slice(xs)
}

fn table(dom: usize, cod: usize, rows: &[(&[f64], &[f64])]) -> PointMap {
    PointMap::new(dom, cod, rows.iter().map(|(x, y)| (v(x), v(y))).collect()).unwrap()
}

fn x_squared() -> Instance {
    Instance::new(
        Pairing::standard(1),
        Pairing::standard(2),
        table(1, 2, &[(&[1.0], &[1.0, 1.0]), (&[2.0], &[2.0, 4.0]), (&[-1.0], &[-1.0, 1.0])]),
        table(1, 2, &[(&[1.0], &[1.0, 0.0]), (&[2.0], &[2.0, 0.0])]),
    )
    .unwrap()
}

fn doubled_g() -> Instance {
    Instance::new(
        Pairing::standard(1),
        Pairing::standard(1),
        table(1, 1, &[(&[1.0], &[1.0])]),
        table(1, 1, &[(&[1.0], &[2.0])]),
    )
    .unwrap()
}

fn identity() -> Instance {
    Instance::new(
        Pairing::standard(1),
        Pairing::standard(1),
        table(1, 1, &[(&[1.0], &[1.0])]),
        table(1, 1, &[(&[1.0], &[1.0])]),
    )
    .unwrap()
}

fn max_gap(a: &PointMap, b: &PointMap) -> f64 {
    a.samples()
        .iter()
        .zip(b.samples())
        .map(|((xa, ya), (xb, yb))| (xa - xb).amax().max((ya - yb).amax()))
        .fold(0.0, f64::max)
}

fn oeq(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_oeq")).args(args).output().unwrap();
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned())
}

#[test]
fn double_annihilator() {
    let started = Instant::now();
    let mut src = GaussianSource::new(11);
    let mut failures = Vec::new();
    for case in 0..500 {
        let d = 1 + case % 8;
        let rank = (src.uniform() * (d + 1) as f64) as usize % (d + 1);
        let g = Pairing::new(src.clamped_matrix(d)).unwrap();
        let vectors: Vec<DVector<f64>> = (0..rank).map(|_| src.vector(d)).collect();
        let w = orthonormal_span_in(d, &vectors, 1e-10).unwrap();
        let w_perp = annihilator(&w, &g, Side::Left).unwrap();
        let w_perp_perp = annihilator(&w_perp, &g, Side::Right).unwrap();
        if w.rank() != rank || w_perp.rank() != d - rank || w_perp_perp.rank() != rank {
            failures.push(format!("case {case}: ranks {} {} {}", w.rank(), w_perp.rank(), w_perp_perp.rank()));
        } else if !w.same_span(&w_perp_perp, 1e-9) {
            failures.push(format!("case {case}: gap {:e}", w.containment_gap(&w_perp_perp)));
        }
    }
    report("double annihilator W = W^perp^perp (500 cases, dims 1-8)", &failures, started);
}

#[test]
fn adjoint_suite() {
    let started = Instant::now();
    let mut src = GaussianSource::new(12);
    let mut failures = Vec::new();
    for case in 0..500 {
        let p = 1 + case % 6;
        let q = if case % 3 == 0 { p } else { 1 + (case / 6) % 6 };
        let dom = Pairing::new(src.clamped_matrix(p)).unwrap();
        let cod = Pairing::new(src.clamped_matrix(q)).unwrap();
        let s = LinearOperator::new(src.matrix(q, p), dom.clone(), cod.clone()).unwrap();
        let adj = s.adjoint();
        let x = src.vector(p);
        let b = src.vector(q);
        let lhs = cod.eval(&s.apply(&x), &b);
        let rhs = dom.eval(&x, &adj.apply(&b));
        let scale = 1.0 + x.norm() * b.norm() * (s.operator_norm() * 2.0).max(adj.operator_norm() * 2.0);
        if (lhs - rhs).abs() > 1e-10 * scale {
            failures.push(format!("case {case}: identity residual {:e}", (lhs - rhs).abs()));
        }
        let back = adj.adjoint();
        if (back.matrix() - s.matrix()).amax() > 1e-10 * (1.0 + s.matrix().amax()) {
            failures.push(format!("case {case}: S** != S"));
        }
        if back.domain_pairing() != &dom || back.codomain_pairing() != &cod {
            failures.push(format!("case {case}: S** pairings differ"));
        }
        if s.is_invertible() != adj.is_invertible() {
            failures.push(format!("case {case}: invertibility not transferred"));
        }
        if s.is_invertible() {
            let inv_adj = s.inverse().unwrap().adjoint();
            let adj_inv = adj.inverse().unwrap();
            let gap = (inv_adj.matrix() - adj_inv.matrix()).amax();
            if gap > 1e-8 * (1.0 + adj_inv.matrix().amax()) {
                failures.push(format!("case {case}: (S^-1)* vs (S*)^-1 gap {gap:e}"));
            }
        }
    }
    report("adjoint identity, involution, invertibility transfer (500 operators)", &failures, started);
}

#[test]
fn if_direction() {
    let started = Instant::now();
    let mut failures = Vec::new();
    for cfg in config_sweep(200, SWEEP_SEED, &PairingMode::ALL) {
        match oeq::gen_instance(&cfg).and_then(|inst| Ok((residual(&inst)?, inst.scale()))) {
            Ok((r, scale)) if r.max_abs_residual <= 1e-10 * scale => {}
            Ok((r, scale)) => failures.push(format!("{cfg:?}: residual {:e} scale {scale}", r.max_abs_residual)),
            Err(err) => failures.push(format!("{cfg:?}: {err}")),
        }
    }
    report("if-direction: synthesized pairs solve the equation (200 configs)", &failures, started);
}

fn round_trip_failure(cfg: &GenConfig) -> Option<String> {
    let generated = match generate(cfg) {
        Ok(g) => g,
        Err(err) => return Some(format!("generate: {err}")),
    };
    let inst = match generated.instance() {
        Ok(i) => i,
        Err(err) => return Some(format!("synthesize: {err}")),
    };
    let ex = match extract_with_diagnostics(&inst, 1e-8) {
        Ok(ex) => ex,
        Err(err) => return Some(format!("extract at {}: {err}", err.stage())),
    };
    let dec = &ex.decomposition;
    let verdict = verify_decomposition(dec, &inst);
    if !verdict.passed() {
        let failed: Vec<&str> = verdict.clauses.iter().filter(|c| !c.passed).map(|c| c.name).collect();
        return Some(format!("verify failed: {failed:?}"));
    }
    if cfg.n != dec.image_span().rank() - dec.collapsed().rank() {
        return Some(format!("rank equation: {} - {}", dec.image_span().rank(), dec.collapsed().rank()));
    }
    let again = match synthesize(dec, &generated.x_grid, &generated.alpha_grid) {
        Ok(i) => i,
        Err(err) => return Some(format!("re-synthesize: {err}")),
    };
    let gap = max_gap(again.f(), inst.f()).max(max_gap(again.g(), inst.g()));
    if gap > 1e-8 * inst.scale() {
        return Some(format!("re-synthesis gap {gap:e}"));
    }
    if ex.diagnostics.identity_defect > 1e-8 {
        return Some(format!("A* Q0^ defect {:e}", ex.diagnostics.identity_defect));
    }
    if ex.diagnostics.norm_bound_slack < -1e-8 {
        return Some(format!("norm bound slack {:e}", ex.diagnostics.norm_bound_slack));
    }
    None
}

#[test]
fn only_if_round_trip() {
    let started = Instant::now();
    let failures: Vec<String> = config_sweep(200, SWEEP_SEED, &PairingMode::ALL)
        .iter()
        .filter_map(|cfg| round_trip_failure(cfg).map(|f| format!("{cfg:?}: {f}")))
        .collect();
    report("only-if: extract, verify, re-synthesize (200 configs)", &failures, started);
}

fn gram_block(g: &DMatrix<f64>, a: &Subspace, b: &Subspace) -> f64 {
    if a.is_zero() || b.is_zero() {
        return 0.0;
    }
    (a.basis().transpose() * g * b.basis()).amax()
}

fn hilbert_failure(cfg: &GenConfig) -> Option<String> {
    let inst = match oeq::gen_instance(cfg) {
        Ok(i) => i,
        Err(err) => return Some(format!("generate: {err}")),
    };
    let h = match hilbert_decompose(&inst, 1e-8) {
        Ok(h) => h,
        Err(err) => return Some(format!("decompose: {err}")),
    };
    let g = inst.f_pairing().gram();
    let (f1, f2, f3) = (h.core_space(), h.primal_slack(), h.dual_slack());
    let blocks = gram_block(g, f1, f2).max(gram_block(g, f1, f3)).max(gram_block(g, f2, f3));
    if blocks > 1e-10 {
        return Some(format!("Gram blocks {blocks:e}"));
    }
    if f1.rank() + f2.rank() + f3.rank() != inst.m() {
        return Some(format!("rank sum {} + {} + {}", f1.rank(), f2.rank(), f3.rank()));
    }
    for (x, mu) in h.primal_offset().samples() {
        if f2.distance(mu) > 1e-9 * (1.0 + mu.norm()) {
            return Some(format!("mu outside F2 by {:e}", f2.distance(mu)));
        }
        let fx = inst.f().lookup(x, 0.0).unwrap();
        if (h.apply_core(x) + mu - fx).amax() > 1e-8 * inst.scale() {
            return Some("f != B + mu".into());
        }
    }
    for (a, nu) in h.dual_offset().samples() {
        if f3.distance(nu) > 1e-9 * (1.0 + nu.norm()) {
            return Some(format!("nu outside F3 by {:e}", f3.distance(nu)));
        }
        let ga = inst.g().lookup(a, 0.0).unwrap();
        if (h.apply_inverse_adjoint(a) + nu - ga).amax() > 1e-8 * inst.scale() {
            return Some("g != (B*)^-1 + nu".into());
        }
    }
    None
}

#[test]
fn hilbert_split() {
    let started = Instant::now();
    let mut failures: Vec<String> = config_sweep(100, SWEEP_SEED, &[PairingMode::Standard, PairingMode::RandomSpd])
        .iter()
        .filter_map(|cfg| hilbert_failure(cfg).map(|f| format!("{cfg:?}: {f}")))
        .collect();

    let h = hilbert_decompose(&x_squared(), 1e-10).unwrap();
    let f1 = h.core_space().basis();
    let f2 = h.primal_slack().basis();
    let b = h.core_matrix();
    let worked = h.core_space().rank() == 1
        && h.primal_slack().rank() == 1
        && h.dual_slack().rank() == 0
        && (f1 - DMatrix::from_column_slice(2, 1, &[1.0, 0.0])).amax() <= 1e-12
        && (f2 - DMatrix::from_column_slice(2, 1, &[0.0, 1.0])).amax() <= 1e-12
        && (b - DMatrix::from_column_slice(2, 1, &[1.0, 0.0])).amax() <= 1e-12;
    if !worked {
        failures.push(format!("worked example: F1 {f1:?} F2 {f2:?} B {:?}", h.core_matrix()));
    }
    for (x, mu) in h.primal_offset().samples() {
        if (mu - v(&[0.0, x[0] * x[0]])).amax() > 1e-12 {
            failures.push(format!("worked example: mu({}) = {mu:?}", x[0]));
        }
    }
    if h.dual_offset().samples().iter().any(|(_, nu)| nu.amax() > 1e-12) {
        failures.push("worked example: nu != 0".into());
    }
    report("Hilbert split f = B + mu, g = (B*)^-1 + nu (100 configs + worked example)", &failures, started);
}

#[test]
fn negative_paths() {
    let started = Instant::now();
    let mut failures = Vec::new();

    let r = residual(&doubled_g()).unwrap();
    if r.max_abs_residual != 1.0 || r.argmax_pair != (0, 0) {
        failures.push(format!("g = 2 id: residual {:?}", r));
    }

    let square = table(1, 1, &[(&[1.0], &[1.0]), (&[2.0], &[4.0])]);
    match fit_linear(&square, 1e-10) {
        // slope 9/5 leaves residuals 0.8 and 0.4
        Err(EquationError::NotLinear { residual, .. }) if (residual - 0.8).abs() < 1e-12 => {}
        other => failures.push(format!("x^2 fit: {other:?}")),
    }

    let cfg = GenConfig {
        rank_l: 2,
        rank_m: 1,
        ..GenConfig::new(2, 4, 0)
    };
    match generate(&cfg) {
        Err(GenError::RankEquation { n: 2, rank_l: 2, rank_m: 1 }) => {}
        other => failures.push(format!("rank equation: {:?}", other.map(|_| ()))),
    }

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("doubled.json");
    save_instance(&path, &doubled_g()).unwrap();
    let (code, out) = oeq(&["verify", path.to_str().unwrap()]);
    if code != 1 || !out.contains("\"max_abs_residual\": 1.0") {
        failures.push(format!("verify g = 2 id: exit {code}, output {out}"));
    }
    let (code, _) = oeq(&["roundtrip", "--dims", "2", "4", "--rank-l", "2", "--rank-m", "1"]);
    if code != 2 {
        failures.push(format!("roundtrip rank flags: exit {code}"));
    }
    report("negative paths: residual 1, nonlinear fit, rank equation", &failures, started);
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn cli_contract() {
    let started = Instant::now();
    let mut failures = Vec::new();

    let sweep = config_sweep(40, SWEEP_SEED, &PairingMode::ALL);
    for cfg in &sweep {
        let inst = oeq::gen_instance(cfg).unwrap();
        let text = instance_to_json(&inst);
        let back = instance_from_json(&text).unwrap();
        if back != inst {
            failures.push(format!("{cfg:?}: values changed"));
        }
        if instance_to_json(&back) != text {
            failures.push(format!("{cfg:?}: text changed"));
        }
    }

    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let id = d.join("identity.json");
    save_instance(&id, &identity()).unwrap();
    let sq = d.join("square.json");
    save_instance(&sq, &x_squared()).unwrap();
    let doubled = d.join("doubled.json");
    save_instance(&doubled, &doubled_g()).unwrap();
    let broken = write(d, "broken.json", "{\"version\": 1, \"n\": ");
    let extra = write(
        d,
        "extra.json",
        r#"{"version":1,"n":1,"m":1,"G_E":[[1]],"G_F":[[1]],"f_samples":[],"g_samples":[],"colour":1}"#,
    );
    let singular = write(
        d,
        "singular.json",
        r#"{"version":1,"n":1,"m":1,"G_E":[[0]],"G_F":[[1]],
            "f_samples":[{"in":[1],"out":[1]}],"g_samples":[{"in":[1],"out":[1]}]}"#,
    );
    let missing = d.join("missing.json");
    let out_dec = d.join("dec.json");
    let generated = d.join("gen.json");

    let s = |p: &Path| p.to_str().unwrap().to_owned();
    let matrix: Vec<(Vec<String>, i32)> = vec![
        (vec!["verify".into(), s(&id)], 0),
        (vec!["verify".into(), s(&sq)], 0),
        (vec!["verify".into(), s(&doubled)], 1),
        (vec!["verify".into(), s(&broken)], 2),
        (vec!["verify".into(), s(&extra)], 2),
        (vec!["verify".into(), s(&singular)], 2),
        (vec!["verify".into(), s(&missing)], 2),
        (vec!["extract".into(), s(&sq), "-o".into(), s(&out_dec)], 0),
        (vec!["extract".into(), s(&doubled)], 3),
        (vec!["extract".into(), s(&broken)], 2),
        (vec!["gen".into(), "--seed".into(), "3".into(), "--dims".into(), "2".into(), "3".into(), "-o".into(), s(&generated)], 0),
        (vec!["verify".into(), s(&generated)], 0),
        (vec!["roundtrip".into(), "--seed".into(), "42".into(), "--dims".into(), "2".into(), "4".into(), "--rank-l".into(), "3".into(), "--rank-m".into(), "1".into()], 0),
        (vec!["roundtrip".into(), "--dims".into(), "2".into()], 2),
        (vec!["frobnicate".into()], 2),
    ];
    for (args, expected) in &matrix {
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        let (code, _) = oeq(&refs);
        if code != *expected {
            failures.push(format!("oeq {}: exit {code}, expected {expected}", refs.join(" ")));
        }
    }
    if !out_dec.exists() {
        failures.push("extract -o wrote nothing".into());
    }
    report("CLI contract: 17-digit round trip, exit-code matrix", &failures, started);
}
