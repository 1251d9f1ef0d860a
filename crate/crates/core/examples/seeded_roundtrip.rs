//! Generate, synthesize, extract, verify and re-synthesize across a small sweep.

use oeq::decomposition::extract_with_diagnostics;
use oeq::generators::{config_sweep, generate, PairingMode};
use oeq::{residual, synthesize, verify_decomposition};

fn main() {
    for cfg in config_sweep(60, 42, &PairingMode::ALL).into_iter().step_by(5) {
        let generated = generate(&cfg).unwrap();
        let inst = generated.instance().unwrap();
        let synth = residual(&inst).unwrap().max_abs_residual;
        let ex = extract_with_diagnostics(&inst, 1e-8).unwrap();
        let ok = verify_decomposition(&ex.decomposition, &inst).passed();
        let again = synthesize(&ex.decomposition, &generated.x_grid, &generated.alpha_grid).unwrap();
        let gap = again
            .f()
            .outputs()
            .iter()
            .zip(inst.f().outputs())
            .map(|(a, b)| (a - b).amax())
            .fold(0.0, f64::max);
        println!(
            "n={} m={} L={} M={} {:<17} {:<13} residual {:.1e} resynth {:.1e} verify {}",
            cfg.n,
            cfg.m,
            cfg.rank_l,
            cfg.rank_m,
            cfg.pairing_mode.as_str(),
            cfg.section_mode.as_str(),
            synth,
            gap,
            if ok { "ok" } else { "FAIL" }
        );
    }
}
