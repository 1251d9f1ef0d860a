//! Splits a solution pair under an inner product into B + mu and (B*)^-1 + nu.

use oeq::generators::{GenConfig, PairingMode, SectionMode};
use oeq::{gen_instance, hilbert_decompose};

fn main() {
    let cfg = GenConfig {
        rank_l: 3,
        rank_m: 1,
        pairing_mode: PairingMode::RandomSpd,
        section_mode: SectionMode::Trigonometric,
        ..GenConfig::new(2, 4, 17)
    };
    let inst = gen_instance(&cfg).unwrap();
    let h = hilbert_decompose(&inst, 1e-8).unwrap();
    println!(
        "dim F1 = {}, dim F2 = {}, dim F3 = {}",
        h.core_space().rank(),
        h.primal_slack().rank(),
        h.dual_slack().rank()
    );
    println!("B in F coordinates\n{}", h.core_matrix());
    let g = inst.f_pairing().gram();
    if h.primal_slack().rank() > 0 {
        println!("F1^T G F2 = {:e}", (h.core_space().basis().transpose() * g * h.primal_slack().basis()).amax());
    }
    for ((x, mu), (_, fx)) in h.primal_offset().samples().iter().zip(inst.f().samples()) {
        let gap = (h.apply_core(x) + mu - fx).amax();
        println!("x = {:>8.4?}  |mu| = {:.4}  |B x + mu - f(x)| = {gap:e}", x.as_slice(), mu.norm());
    }
}
