//! Flooding sum-product decoding in the log-likelihood domain.
//!
//! LLRs are `ln P(b = 0) / P(b = 1)`: positive values favour bit 0. Check
//! nodes use the `phi(x) = -ln tanh(x/2)` form of the tanh rule, with `phi`
//! read from a table that is piecewise linear within each binade.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::ldpc::ParityCheckMatrix;

pub const DEFAULT_MAX_ITERATIONS: usize = 50;

/// Mantissa bits resolved by the `phi` table (segments per binade = 2^this).
const PHI_MANTISSA_BITS: u32 = 7;
/// Arguments are clamped to `[2^-50, 2^6)`; `phi(2^-50)` is about 35.4, `phi(64)` about 3e-28.
const PHI_MIN_EXP: i32 = -50;
const PHI_MAX_EXP: i32 = 6;

/// `phi(x) = ln((e^x + 1) / (e^x - 1))`, its own inverse on `x > 0`.
pub fn phi_exact(x: f64) -> f64 {
    if x > 40.0 {
        return 2.0 * libm::exp(-x);
    }
    libm::log1p(2.0 / libm::expm1(x))
}

/// Table of `phi` indexed by the top bits of the IEEE-754 representation.
#[derive(Debug, Clone)]
struct PhiTable {
    base: u64,
    top: f64,
    values: Vec<f64>,
}

impl PhiTable {
    const SHIFT: u32 = 52 - PHI_MANTISSA_BITS;

    fn new() -> Self {
        let lo = libm::ldexp(1.0, PHI_MIN_EXP);
        let top = libm::ldexp(1.0, PHI_MAX_EXP);
        let base = lo.to_bits() >> Self::SHIFT;
        let len = (top.to_bits() >> Self::SHIFT) - base + 1;
        let values = (0..len)
            .map(|i| phi_exact(f64::from_bits((base + i) << Self::SHIFT)))
            .collect();
        Self { base, top, values }
    }

    #[inline]
    fn eval(&self, x: f64) -> f64 {
        if x >= self.top {
            return 0.0;
        }
        let bits = x.max(f64::from_bits(self.base << Self::SHIFT)).to_bits();
        let i = ((bits >> Self::SHIFT) - self.base) as usize;
        let frac = (bits & ((1 << Self::SHIFT) - 1)) as f64 * (1.0 / (1u64 << Self::SHIFT) as f64);
        let (a, b) = (self.values[i], self.values[i + 1]);
        a + frac * (b - a)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpaOutput {
    pub bits: Vec<u8>,
    /// Zero syndrome reached; `bits` is then a codeword.
    pub converged: bool,
    pub iterations: usize,
}

/// Decoder state for one parity-check matrix; buffers are reused across frames.
#[derive(Debug, Clone)]
pub struct SpaDecoder {
    n: usize,
    check_ptr: Vec<usize>,
    /// Variable of each edge, edges grouped by check.
    edge_var: Vec<u32>,
    var_ptr: Vec<usize>,
    /// Edges of each variable, grouped by variable.
    var_edges: Vec<u32>,
    c2v: Vec<f64>,
    v2c: Vec<f64>,
    scratch: Vec<f64>,
    phi: PhiTable,
}

impl SpaDecoder {
    pub fn new(h: &ParityCheckMatrix) -> Self {
        let mut check_ptr = Vec::with_capacity(h.n_rows() + 1);
        let mut edge_var = Vec::with_capacity(h.edges());
        check_ptr.push(0);
        for r in h.rows() {
            edge_var.extend_from_slice(r);
            check_ptr.push(edge_var.len());
        }
        let n = h.n_cols();
        let mut var_ptr = vec![0usize; n + 1];
        for &v in &edge_var {
            var_ptr[v as usize + 1] += 1;
        }
        for i in 0..n {
            var_ptr[i + 1] += var_ptr[i];
        }
        let mut fill = var_ptr.clone();
        let mut var_edges = vec![0u32; edge_var.len()];
        for (e, &v) in edge_var.iter().enumerate() {
            var_edges[fill[v as usize]] = e as u32;
            fill[v as usize] += 1;
        }
        let max_deg = h.check_degrees().into_iter().max().unwrap_or(0);
        let edges = edge_var.len();
        Self {
            n,
            check_ptr,
            edge_var,
            var_ptr,
            var_edges,
            c2v: vec![0.0; edges],
            v2c: vec![0.0; edges],
            scratch: vec![0.0; max_deg],
            phi: PhiTable::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn decode(&mut self, llrs: &[f64], max_iter: usize) -> Result<SpaOutput> {
        if llrs.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: llrs.len(),
            });
        }
        for (e, &v) in self.edge_var.iter().enumerate() {
            self.v2c[e] = llrs[v as usize];
        }
        let mut bits: Vec<u8> = llrs.iter().map(|&l| (l < 0.0) as u8).collect();
        for it in 1..=max_iter {
            self.check_update();
            self.variable_update(llrs, &mut bits);
            if self.syndrome_is_zero(&bits) {
                return Ok(SpaOutput {
                    bits,
                    converged: true,
                    iterations: it,
                });
            }
        }
        Ok(SpaOutput {
            bits,
            converged: false,
            iterations: max_iter,
        })
    }

    fn check_update(&mut self) {
        for c in 0..self.check_ptr.len() - 1 {
            let (lo, hi) = (self.check_ptr[c], self.check_ptr[c + 1]);
            let a = &mut self.scratch[..hi - lo];
            let mut sum = 0.0;
            let mut negative = false;
            for (k, &x) in self.v2c[lo..hi].iter().enumerate() {
                a[k] = self.phi.eval(libm::fabs(x));
                sum += a[k];
                negative ^= x < 0.0;
            }
            for (k, &x) in self.v2c[lo..hi].iter().enumerate() {
                let m = self.phi.eval(sum - a[k]);
                self.c2v[lo + k] = if negative ^ (x < 0.0) { -m } else { m };
            }
        }
    }

    fn variable_update(&mut self, llrs: &[f64], bits: &mut [u8]) {
        for v in 0..self.n {
            let edges = &self.var_edges[self.var_ptr[v]..self.var_ptr[v + 1]];
            let total = llrs[v] + edges.iter().map(|&e| self.c2v[e as usize]).sum::<f64>();
            for &e in edges {
                self.v2c[e as usize] = total - self.c2v[e as usize];
            }
            bits[v] = (total < 0.0) as u8;
        }
    }

    fn syndrome_is_zero(&self, bits: &[u8]) -> bool {
        self.check_ptr.windows(2).all(|w| {
            self.edge_var[w[0]..w[1]]
                .iter()
                .fold(0u8, |acc, &v| acc ^ bits[v as usize])
                == 0
        })
    }
}

/// One-shot decode; prefer [`SpaDecoder`] when decoding many frames.
pub fn spa_decode(llrs: &[f64], h: &ParityCheckMatrix, max_iter: usize) -> Result<SpaOutput> {
    SpaDecoder::new(h).decode(llrs, max_iter)
}
