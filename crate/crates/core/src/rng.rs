//! Philox4x32-10 counter-based generator.
//!
//! Each output block is a pure function of a 64-bit key and a 128-bit
//! counter, so any `(seed, step, component)` triple can be evaluated
//! directly and the encoder and decoder reproduce the same values without
//! sharing state.

const M0: u32 = 0xD251_1F53;
const M1: u32 = 0xCD9E_8D57;
const W0: u32 = 0x9E37_79B9;
const W1: u32 = 0xBB67_AE85;
const ROUNDS: usize = 10;

#[inline]
fn mulhilo(a: u32, b: u32) -> (u32, u32) {
    let p = u64::from(a) * u64::from(b);
    ((p >> 32) as u32, p as u32)
}

#[inline]
fn round(ctr: [u32; 4], key: [u32; 2]) -> [u32; 4] {
    let (hi0, lo0) = mulhilo(M0, ctr[0]);
    let (hi1, lo1) = mulhilo(M1, ctr[2]);
    [hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0]
}

/// One Philox4x32-10 block.
pub fn philox4x32(ctr: [u32; 4], key: [u32; 2]) -> [u32; 4] {
    let mut ctr = ctr;
    let mut key = key;
    for i in 0..ROUNDS {
        if i > 0 {
            key[0] = key[0].wrapping_add(W0);
            key[1] = key[1].wrapping_add(W1);
        }
        ctr = round(ctr, key);
    }
    ctr
}

/// Keyed counter-based source of uniforms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    key: [u32; 2],
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        Self {
            key: [seed as u32, (seed >> 32) as u32],
        }
    }

    /// 64 random bits for `(index, lane, stream)`.
    pub fn bits(&self, index: u64, lane: u32, stream: u32) -> u64 {
        let out = philox4x32([index as u32, (index >> 32) as u32, lane, stream], self.key);
        (u64::from(out[0]) << 32) | u64::from(out[1])
    }

    /// Uniform on `[0, 1)` with a 53-bit mantissa.
    pub fn unit(&self, index: u64, lane: u32, stream: u32) -> f64 {
        (self.bits(index, lane, stream) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}
