//! Constant composition distribution matching over a binary class alphabet.
//!
//! A [`Composition`] fixes how many times each class appears in a block of
//! `n` symbols. All `M = n! / (n0! n1!)` such sequences are treated as equally
//! likely and laid out as a partition of `[0, 1)` by an integer arithmetic
//! coder whose model is the remaining class counts. Encoding reads `k` input
//! bits as the binary fraction `0.b1 b2 ... bk` and outputs the sequence whose
//! interval contains it. Decoding recomputes the interval of a sequence and
//! returns the unique `k`-bit grid point inside it.
//!
//! Every interval is at most `2^-k` wide, so distinct inputs never share a
//! sequence. With a 62-bit window the rounding inflation of an interval is
//! bounded by a factor `1 + n(n+1)/2^61`; `k = floor(log2 M)` is lowered by one
//! in the (practically unobservable) case that `M` sits that close above a
//! power of two.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigUint;

use crate::error::{domain, Error, Result};
use crate::pam::binary_entropy;

const PRECISION: u32 = 62;
const TOP: u64 = 1 << PRECISION;
const HALF: u64 = 1 << (PRECISION - 1);

/// Class counts of a constant-composition block and its input length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Composition {
    counts: [usize; 2],
    k: usize,
}

impl Composition {
    pub fn new(counts: [usize; 2]) -> Result<Self> {
        let n = counts[0] + counts[1];
        if n == 0 {
            return Err(domain("composition must have at least one symbol"));
        }
        if n > u32::MAX as usize {
            return Err(domain("block length too large"));
        }
        Ok(Self {
            counts,
            k: input_bits(counts),
        })
    }

    /// Quantizes a two-class target pmf to counts summing to `n` by
    /// largest-remainder rounding; ties go to the class with smaller index.
    pub fn from_target(target: [f64; 2], n: usize) -> Result<Self> {
        if n == 0 {
            return Err(domain("block length must be positive"));
        }
        if target.iter().any(|p| !(*p >= 0.0)) || libm::fabs(target[0] + target[1] - 1.0) > 1e-9 {
            return Err(Error::InvalidDistribution(alloc::format!(
                "class target {target:?}"
            )));
        }
        let scaled = [target[0] * n as f64, target[1] * n as f64];
        let mut counts = [
            libm::floor(scaled[0]) as usize,
            libm::floor(scaled[1]) as usize,
        ];
        let rem = [scaled[0] - counts[0] as f64, scaled[1] - counts[1] as f64];
        let mut missing = n.saturating_sub(counts[0] + counts[1]);
        // At most two units are missing; hand them out by remainder, lower index first on ties.
        let order = if rem[1] > rem[0] { [1, 0] } else { [0, 1] };
        for &c in order.iter().cycle().take(2) {
            if missing == 0 {
                break;
            }
            counts[c] += 1;
            missing -= 1;
        }
        while counts[0] + counts[1] > n {
            // Floating-point overshoot; cannot happen for valid pmfs but keep counts consistent.
            let c = if counts[1] > counts[0] { 1 } else { 0 };
            counts[c] -= 1;
        }
        Self::new(counts)
    }

    pub fn counts(&self) -> [usize; 2] {
        self.counts
    }

    /// Output length.
    pub fn n(&self) -> usize {
        self.counts[0] + self.counts[1]
    }

    /// Input length in bits.
    pub fn k(&self) -> usize {
        self.k
    }

    /// `H(target) - k/n`, the per-symbol rate penalty of the finite block.
    pub fn rate_loss(&self, target: [f64; 2]) -> f64 {
        binary_entropy(target[1]) - self.k as f64 / self.n() as f64
    }

    /// Maps `k` bits to a class sequence of exact composition.
    pub fn encode(&self, bits: &[u8]) -> Result<Vec<u8>> {
        if bits.len() != self.k {
            return Err(Error::LengthMismatch {
                expected: self.k,
                got: bits.len(),
            });
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(domain("input bits must be 0 or 1"));
        }
        let seq = self.locate(bits);
        debug_assert_eq!(composition_of(&seq), self.counts);
        Ok(seq)
    }

    /// Inverse of [`Composition::encode`].
    pub fn decode(&self, seq: &[u8]) -> Result<Vec<u8>> {
        if seq.len() != self.n() {
            return Err(Error::LengthMismatch {
                expected: self.n(),
                got: seq.len(),
            });
        }
        if seq.iter().any(|&c| c > 1) {
            return Err(domain("class symbols must be 0 or 1"));
        }
        let got = composition_of(seq);
        if got != self.counts {
            return Err(Error::CompositionMismatch {
                expected: self.counts,
                got,
            });
        }
        let lower = self.interval_lower_bound(seq);
        let candidate = ceil_to_grid(&lower, self.k).ok_or(Error::NotInImage)?;
        // The grid point must fall inside the sequence's own interval.
        if self.locate(&candidate) != seq {
            return Err(Error::NotInImage);
        }
        Ok(candidate)
    }

    /// Arithmetic decoding of the point `0.bits000...`.
    fn locate(&self, bits: &[u8]) -> Vec<u8> {
        let mut next = bits.iter().copied().chain(core::iter::repeat(0u8));
        let mut code: u64 = 0;
        for _ in 0..PRECISION {
            code = (code << 1) | next.next().unwrap() as u64;
        }
        let mut range = TOP;
        let [mut c0, mut c1] = self.counts;
        let mut out = Vec::with_capacity(self.n());
        while c0 + c1 > 0 {
            let sym = if c1 == 0 {
                0
            } else if c0 == 0 {
                1
            } else {
                let w0 = split(range, c0, c0 + c1);
                if code < w0 {
                    range = w0;
                    0
                } else {
                    code -= w0;
                    range -= w0;
                    1
                }
            };
            if sym == 0 {
                c0 -= 1;
            } else {
                c1 -= 1;
            }
            out.push(sym);
            while range <= HALF {
                range <<= 1;
                code = (code << 1) | next.next().unwrap() as u64;
            }
        }
        out
    }

    /// Exact binary expansion of the lower end of the interval of `seq`.
    fn interval_lower_bound(&self, seq: &[u8]) -> Vec<u8> {
        let mut emitted: Vec<u8> = Vec::with_capacity(seq.len() + PRECISION as usize);
        let mut low: u64 = 0;
        let mut range = TOP;
        let [mut c0, mut c1] = self.counts;
        for &sym in seq {
            if c0 > 0 && c1 > 0 {
                let w0 = split(range, c0, c0 + c1);
                if sym == 0 {
                    range = w0;
                } else {
                    low += w0;
                    range -= w0;
                    if low >= TOP {
                        low -= TOP;
                        propagate_carry(&mut emitted);
                    }
                }
            }
            if sym == 0 {
                c0 -= 1;
            } else {
                c1 -= 1;
            }
            while range <= HALF {
                range <<= 1;
                emitted.push(((low >> (PRECISION - 1)) & 1) as u8);
                low = (low << 1) & (TOP - 1);
            }
        }
        for i in (0..PRECISION).rev() {
            emitted.push(((low >> i) & 1) as u8);
        }
        emitted
    }
}

/// `floor(range * c / t)`, the width given to class 0.
fn split(range: u64, c: usize, t: usize) -> u64 {
    ((range as u128 * c as u128) / t as u128) as u64
}

fn propagate_carry(bits: &mut [u8]) {
    for b in bits.iter_mut().rev() {
        if *b == 0 {
            *b = 1;
            return;
        }
        *b = 0;
    }
    unreachable!("arithmetic coder interval left [0, 1)");
}

/// Smallest `k`-bit grid point `j 2^-k >= 0.lower`, as `k` bits; `None` if it is 1.
fn ceil_to_grid(lower: &[u8], k: usize) -> Option<Vec<u8>> {
    let mut j: Vec<u8> = (0..k).map(|i| lower.get(i).copied().unwrap_or(0)).collect();
    let has_tail = lower.iter().skip(k).any(|&b| b == 1);
    if has_tail {
        let mut carry = true;
        for b in j.iter_mut().rev() {
            if *b == 0 {
                *b = 1;
                carry = false;
                break;
            }
            *b = 0;
        }
        if carry {
            return None;
        }
    }
    Some(j)
}

/// `floor(log2 C(n, n1))`, lowered by one when rounding could let an interval
/// exceed `2^-k` (see module docs).
fn input_bits(counts: [usize; 2]) -> usize {
    let m = binomial(counts[0] + counts[1], counts[1].min(counts[0]));
    let k = (m.bits() - 1) as usize;
    let pow = BigUint::from(1u8) << k;
    if m == pow {
        // Only C(2^j, 1) and C(n, 0) are powers of two; every split is exact for them.
        return k;
    }
    let n = (counts[0] + counts[1]) as u64;
    let slack = (&m - &pow) << 61u32;
    if slack < &pow * BigUint::from(n * (n + 1)) {
        k - 1
    } else {
        k
    }
}

fn binomial(n: usize, r: usize) -> BigUint {
    let mut acc = BigUint::from(1u8);
    for i in 0..r {
        acc *= (n - i) as u64;
        acc /= (i + 1) as u64;
    }
    acc
}

/// Class counts of a binary sequence.
pub fn composition_of(seq: &[u8]) -> [usize; 2] {
    let ones = seq.iter().filter(|&&c| c == 1).count();
    [seq.len() - ones, ones]
}

/// [`Composition::from_target`] for a pmf given as a slice of two classes.
pub fn build_composition(target: &[f64], n: usize) -> Result<Composition> {
    match target {
        [a, b] => Composition::from_target([*a, *b], n),
        _ => Err(domain(alloc::format!(
            "binary matcher needs 2 classes, got {}",
            target.len()
        ))),
    }
}

/// Packs bits MSB-first into bytes, zero padded.
pub fn pack_bits(bits: &[u8]) -> Vec<u8> {
    let mut out = vec![0u8; bits.len().div_ceil(8)];
    for (i, &b) in bits.iter().enumerate() {
        out[i / 8] |= (b & 1) << (7 - i % 8);
    }
    out
}

/// Inverse of [`pack_bits`] for the first `len` bits.
pub fn unpack_bits(bytes: &[u8], len: usize) -> Vec<u8> {
    (0..len)
        .map(|i| (bytes[i / 8] >> (7 - i % 8)) & 1)
        .collect()
}
