//! Print the relative intensity tables |Q|^2 / (8 scale^2) for both
//! circular polarizations and both excited doublets, at gamma = 0 and at
//! the g-factor value.
//!
//! ```bash
//! cargo run -p bpump --example selection_tables
//! ```

use bpump::selection::{
    dipole_block, normalized_intensities, ExcitedLevel, MixingParameters, Polarization,
    DEFAULT_GAMMA,
};

fn print_table(gamma: f64) {
    let mix = MixingParameters::new(gamma, MixingParameters::default().alpha);
    let (g6, g7) = ExcitedLevel::canonical_pair();
    println!("gamma = {gamma}");
    println!("{:>28}  +3/2     +1/2     -1/2     -3/2", "ground mJ:");
    for (level, name) in [(g6, "Gamma6-"), (g7, "Gamma7-")] {
        for (pol, pol_name) in [
            (Polarization::PlusCircular, "eps+"),
            (Polarization::MinusCircular, "eps-"),
        ] {
            let table = normalized_intensities(&dipole_block(&level, pol, &mix));
            for (row, mj) in table.iter().zip(["+1/2", "-1/2"]) {
                print!("{name} {pol_name} excited mJ={mj:>4}:");
                for v in row {
                    print!("  {v:7.5}");
                }
                println!();
            }
        }
    }
    println!();
}

fn main() {
    print_table(0.0);
    print_table(DEFAULT_GAMMA);
    println!("note: at gamma = 0 the entries are the exact rationals");
    println!("      {{0, 1/4, 3/4}} (Gamma6) and {{0, 1/4, 2/3, 1/12}} (Gamma7);");
    println!("      the finite-gamma corrections appear at the 1e-5 level.");
}
