//! Benchmark-only crate; the measurements live in `benches/kernel.rs`.
//! Shared between benches: seeded construction of medium-sized regions so
//! every run times the same inputs.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use svi_core::PolyhedronH;

/// Box of half-width 2 in `dim` variables plus `cuts` random integer-normal
/// half-spaces through the positive offsets 1..3.
pub fn seeded_region(dim: usize, cuts: usize, seed: u64) -> PolyhedronH {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut region = PolyhedronH::whole_space(dim);
    for j in 0..dim {
        let mut e = vec![0.0; dim];
        e[j] = 1.0;
        region.add_row(e.clone(), 2.0).expect("box row");
        for v in e.iter_mut() {
            *v = -*v;
        }
        region.add_row(e, 2.0).expect("box row");
    }
    let mut added = 0;
    while added < cuts {
        let normal: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2..=2i32) as f64).collect();
        if normal.iter().all(|v| *v == 0.0) {
            continue;
        }
        let offset = rng.gen_range(1..=3i32) as f64;
        region.add_row(normal, offset).expect("cut row");
        added += 1;
    }
    region
}
