//! Dark-subspace structure: two dark states per doublet, one global dark
//! state when both doublets are pumped together, and the gamma-independent
//! sqrt(8)/3 bright/dark overlap that forbids a shared superposition.
//!
//! ```bash
//! cargo run -p bpump --example dark_states
//! ```

use bpump::selection::{
    bright_dark_overlap, dark_subspace, dipole_block, ExcitedLevel, MixingParameters,
    Polarization, DEFAULT_GAMMA,
};

fn main() {
    let mix = MixingParameters::default();
    let (g6, g7) = ExcitedLevel::canonical_pair();

    for pol in [Polarization::PlusCircular, Polarization::MinusCircular] {
        let b6 = dipole_block(&g6, pol, &mix);
        let b7 = dipole_block(&g7, pol, &mix);
        let d6 = dark_subspace(std::slice::from_ref(&b6)).unwrap();
        let d7 = dark_subspace(std::slice::from_ref(&b7)).unwrap();
        let joint = dark_subspace(&[b6, b7]).unwrap();
        println!("{pol:?}: dark dimensions Gamma6 alone = {}, Gamma7 alone = {}, joint = {}",
            d6.dimension, d7.dimension, joint.dimension);
        let v = &joint.basis[0];
        let labels = ["+3/2", "+1/2", "-1/2", "-3/2"];
        let dominant = (0..4).max_by(|&a, &b| v[a].norm().partial_cmp(&v[b].norm()).unwrap());
        println!("  global dark state: mJ = {}", labels[dominant.unwrap()]);
    }

    println!();
    println!("bright(Gamma6) / dark(Gamma7) overlap on the +-3/2 subspace:");
    for gamma in [0.0, DEFAULT_GAMMA, 0.1, 0.47, -0.8] {
        let m = MixingParameters::new(gamma, mix.alpha);
        println!("  gamma = {gamma:+.4}: |overlap| = {:.12}", bright_dark_overlap(&m));
    }
    println!("  (sqrt(8)/3 = {:.12} for every gamma: the two doublets never", 8.0f64.sqrt() / 3.0);
    println!("   share a superposition dark state, so joint pumping leaves");
    println!("   exactly one dark level)");
}
