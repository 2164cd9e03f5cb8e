pub mod cli;
pub mod detectors;
pub mod eval;
pub mod features;
pub mod flow;
pub mod graph;
pub mod neural;
pub mod synth;

/// Independent seed for sub-stream `(a, b)` of a run seeded with `seed`.
pub fn derive_seed(seed: u64, a: usize, b: usize) -> u64 {
    let mut x = seed
        ^ (a as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (b as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    // splitmix64 finalizer
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}
