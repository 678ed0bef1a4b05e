//! Seeded pseudo-random number generation.
//!
//! The generator is xoshiro256++ (Blackman & Vigna), seeded through
//! SplitMix64, with standard normals produced by the Box-Muller transform
//! on open-interval uniforms. Every algorithm here is spelled out so the
//! exact byte stream can be reproduced by an independent implementation;
//! reruns with the same seed are bit-identical.

/// Deterministic PRNG with Gaussian sampling.
#[derive(Debug, Clone)]
pub struct Rng {
    state: [u64; 4],
    /// Second Box-Muller output, held for the next `normal()` call.
    spare: Option<f64>,
}

const SPLITMIX_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(SPLITMIX_GAMMA);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Rng {
    /// Expands `seed` into the xoshiro256++ state via four SplitMix64 steps.
    pub fn new(seed: u64) -> Self {
        let mut sm = seed;
        let mut state = [0u64; 4];
        for slot in &mut state {
            *slot = splitmix64(&mut sm);
        }
        // The all-zero state is a fixed point of xoshiro; unreachable from
        // SplitMix64 in practice but guarded anyway.
        if state == [0, 0, 0, 0] {
            state[0] = SPLITMIX_GAMMA;
        }
        Rng { state, spare: None }
    }

    /// xoshiro256++ next step.
    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.state;
        let result = s[0].wrapping_add(s[3]).rotate_left(23).wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform draw on the open interval (0, 1): `(x >> 11 + 0.5) * 2^-53`.
    /// Never returns 0 or 1, so `ln` below is always finite.
    pub fn next_open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Unbiased integer in `0..n` by rejection on the top of the u64 range.
    pub fn next_below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "next_below requires n > 0");
        let threshold = n.wrapping_neg() % n; // 2^64 mod n
        loop {
            let r = self.next_u64();
            if r >= threshold {
                return r % n;
            }
        }
    }

    /// Standard normal via Box-Muller: from uniforms u1, u2 draw
    /// r = sqrt(-2 ln u1) and return (r cos(2*pi*u2), r sin(2*pi*u2)),
    /// consuming one pair of uniforms per two outputs.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.next_open01();
        let u2 = self.next_open01();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }

    /// Fills `out` with i.i.d. standard normals in index order.
    pub fn fill_normal(&mut self, out: &mut [f64]) {
        for v in out {
            *v = self.normal();
        }
    }

    /// Jumps ahead by 2^128 steps (xoshiro256++ reference polynomial).
    pub fn jump(&mut self) {
        const JUMP: [u64; 4] = [
            0x180e_c6d3_3cfd_0aba,
            0xd5a6_1266_f0c9_392c,
            0xa958_2618_e03f_c9aa,
            0x39ab_dc45_29b1_661c,
        ];
        let mut acc = [0u64; 4];
        for word in JUMP {
            for bit in 0..64 {
                if (word >> bit) & 1 == 1 {
                    for (a, s) in acc.iter_mut().zip(self.state.iter()) {
                        *a ^= s;
                    }
                }
                self.next_u64();
            }
        }
        self.state = acc;
        self.spare = None;
    }

    /// Splits off an independent stream: the child keeps the current
    /// position, the parent jumps 2^128 steps ahead. Each worker thread
    /// gets its own split; streams are never shared.
    pub fn split(&mut self) -> Rng {
        let child = Rng {
            state: self.state,
            spare: None,
        };
        self.jump();
        child
    }

    /// Fisher-Yates shuffle driven by this stream.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.next_below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}
