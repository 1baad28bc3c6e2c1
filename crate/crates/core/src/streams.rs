//! Indexed random substreams.
//!
//! Every random draw in the crate comes from a stream addressed by
//! `(seed, tag, a, b)`. Work is split by index, never by worker, so the
//! output does not depend on how many threads run it.

use rand_pcg::Pcg64Mcg;

pub type Rng = Pcg64Mcg;

/// Purpose labels that keep unrelated consumers of one seed apart.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Tag {
    PhiStep = 1,
    Composite = 2,
    Kappa = 3,
    Bootstrap = 4,
    Pairing = 5,
    Ctgw = 6,
    Discrete = 7,
    Walk = 8,
    Offspring = 9,
    Scan = 10,
    Quadrature = 11,
}

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hash a stream address into 128 bits of generator state.
#[inline]
pub fn address(seed: u64, tag: Tag, a: u64, b: u64) -> u128 {
    let h1 = mix64(mix64(mix64(seed) ^ tag as u64) ^ a);
    let h2 = mix64(h1 ^ b);
    let h3 = mix64(h2 ^ 0x5851_f42d_4c95_7f2d);
    ((h2 as u128) << 64) | h3 as u128
}

#[inline]
pub fn substream(seed: u64, tag: Tag, a: u64, b: u64) -> Rng {
    Pcg64Mcg::new(address(seed, tag, a, b))
}

/// Derive a child seed, for handing a whole sub-computation its own seed.
#[inline]
pub fn child_seed(seed: u64, tag: Tag, a: u64) -> u64 {
    mix64(mix64(seed ^ (tag as u64).rotate_left(17)) ^ a)
}
