//! Probabilistic amplitude shaping over 4-PAM with a systematic LDPC code.
//!
//! A codeword of length `2 n_s` is split in two halves: column `i < n_s`
//! holds the class bit `b2` of symbol `i` (0 for the outer points `{0, 3}`
//! under the Gray map), column `n_s + i` holds its selector bit `b1`. Parity
//! is confined to `b1` columns, so the matcher output on `b2` passes through
//! the encoder untouched and the selector bits stay close to uniform.

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ccdm::Composition;
use crate::error::{Error, Result};
use crate::fer::{splitmix64, FrameTrial};
use crate::ldpc::{ParityCheckMatrix, SystematicEncoder};
use crate::pam::{sigma_from_psnr_db, BitLabeling, ChannelModel, InputDistribution, PamAlphabet};
use crate::spa::{SpaDecoder, DEFAULT_MAX_ITERATIONS};

/// Bit index of the class bit within a 2-bit label.
const CLASS_BIT: usize = 1;
const SELECTOR_BIT: usize = 0;

/// Demapper output bound; keeps underflowed weights finite.
pub const LLR_LIMIT: f64 = 500.0;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PasFrame {
    /// Class bits on `b2`: matcher output, or plain message bits without shaping.
    pub dm_bits: Vec<u8>,
    /// Message bits on `b1` columns not used by parity.
    pub uniform_bits: Vec<u8>,
    pub parity_bits: Vec<u8>,
    pub codeword: Vec<u8>,
    /// Point indices into the alphabet.
    pub symbols: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PasDecoded {
    /// `None` when the decoded class bits are not a matcher output.
    pub info: Option<Vec<u8>>,
    pub converged: bool,
    pub iterations: usize,
}

/// Encoder, labeling and prior of one coded-modulation configuration.
#[derive(Debug, Clone)]
pub struct PasSystem {
    h: ParityCheckMatrix,
    encoder: SystematicEncoder,
    composition: Option<Composition>,
    alphabet: PamAlphabet,
    labeling: BitLabeling,
    prior: InputDistribution,
    n_s: usize,
}

impl PasSystem {
    /// Shaped system: `composition` drives the class bits of all `n_s` symbols.
    pub fn shaped(
        h: &ParityCheckMatrix,
        composition: Composition,
        labeling: BitLabeling,
    ) -> Result<Self> {
        Self::build(h, Some(composition), labeling)
    }

    /// Uniform system: every non-parity position carries a message bit.
    pub fn uniform(h: &ParityCheckMatrix, labeling: BitLabeling) -> Result<Self> {
        Self::build(h, None, labeling)
    }

    fn build(
        h: &ParityCheckMatrix,
        composition: Option<Composition>,
        labeling: BitLabeling,
    ) -> Result<Self> {
        if labeling.cardinality() != 4 {
            return Err(Error::CodeParameters(
                "PAS needs a 2-bit labeling of 4-PAM".into(),
            ));
        }
        if h.n_cols() % 2 != 0 {
            return Err(Error::CodeParameters(format!(
                "odd blocklength {}",
                h.n_cols()
            )));
        }
        let n_s = h.n_cols() / 2;
        if let Some(c) = &composition {
            if c.n() != n_s {
                return Err(Error::CodeParameters(format!(
                    "matcher length {} differs from {n_s} symbols per codeword",
                    c.n()
                )));
            }
        }
        let selector_columns: Vec<usize> = (n_s..2 * n_s).collect();
        let encoder = SystematicEncoder::new(h, &selector_columns)?;
        let class_prob = match &composition {
            Some(c) => {
                let [a, b] = c.counts();
                [a as f64 / n_s as f64, b as f64 / n_s as f64]
            }
            None => [0.5, 0.5],
        };
        let pmf = (0..4)
            .map(|x| class_prob[labeling.bit(x, CLASS_BIT) as usize] / 2.0)
            .collect();
        Ok(Self {
            h: h.clone(),
            encoder,
            composition,
            alphabet: PamAlphabet::pam4(),
            labeling,
            prior: InputDistribution::new(pmf)?,
            n_s,
        })
    }

    pub fn matrix(&self) -> &ParityCheckMatrix {
        &self.h
    }

    pub fn composition(&self) -> Option<&Composition> {
        self.composition.as_ref()
    }

    pub fn labeling(&self) -> &BitLabeling {
        &self.labeling
    }

    /// Symbol distribution implied by the composition and uniform selector bits.
    pub fn prior(&self) -> &InputDistribution {
        &self.prior
    }

    pub fn n_s(&self) -> usize {
        self.n_s
    }

    /// Message bits carried by the matcher, `n_s` without shaping.
    pub fn k_dm(&self) -> usize {
        self.composition.as_ref().map_or(self.n_s, Composition::k)
    }

    /// Message bits placed directly on `b1`.
    pub fn n_extra(&self) -> usize {
        self.encoder.k() - self.n_s
    }

    pub fn info_len(&self) -> usize {
        self.k_dm() + self.n_extra()
    }

    /// Message bits per 4-PAM symbol.
    pub fn spectral_efficiency(&self) -> f64 {
        self.info_len() as f64 / self.n_s as f64
    }

    pub fn decoder(&self) -> SpaDecoder {
        SpaDecoder::new(&self.h)
    }

    pub fn encode(&self, info: &[u8]) -> Result<PasFrame> {
        if info.len() != self.info_len() {
            return Err(Error::LengthMismatch {
                expected: self.info_len(),
                got: info.len(),
            });
        }
        let (head, uniform_bits) = info.split_at(self.k_dm());
        let dm_bits = match &self.composition {
            Some(c) => c.encode(head)?,
            None => head.to_vec(),
        };
        // Info columns are sorted, so the n_s class columns come first.
        let message: Vec<u8> = dm_bits.iter().chain(uniform_bits).copied().collect();
        let codeword = self.encoder.encode(&message)?;
        debug_assert!(self.h.is_codeword(&codeword));
        let parity_bits = self
            .encoder
            .parity_columns()
            .iter()
            .map(|&c| codeword[c])
            .collect();
        let symbols = (0..self.n_s)
            .map(|i| {
                let label = ((codeword[self.n_s + i] as u32) << 1) | codeword[i] as u32;
                self.labeling
                    .unlabel(label)
                    .expect("labeling is a bijection") as u8
            })
            .collect();
        Ok(PasFrame {
            dm_bits,
            uniform_bits: uniform_bits.to_vec(),
            parity_bits,
            codeword,
            symbols,
        })
    }

    /// Bit LLRs (positive favours 0) under a Gaussian law of deviation `sigma`,
    /// including the symbol prior.
    pub fn llrs(&self, y: &[f64], sigma: f64) -> Result<Vec<f64>> {
        if y.len() != self.n_s {
            return Err(Error::LengthMismatch {
                expected: self.n_s,
                got: y.len(),
            });
        }
        let points = self.alphabet.points();
        let log_prior: Vec<f64> = self.prior.pmf().iter().map(|&p| libm::log(p)).collect();
        let scale = 1.0 / (2.0 * sigma * sigma);
        let mut out = alloc::vec![0.0; 2 * self.n_s];
        for (i, &yi) in y.iter().enumerate() {
            let metric: [f64; 4] = core::array::from_fn(|x| {
                log_prior[x] - (yi - points[x]) * (yi - points[x]) * scale
            });
            let top = metric.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let weight = metric.map(|m| libm::exp(m - top));
            for (k, pos) in [(CLASS_BIT, i), (SELECTOR_BIT, self.n_s + i)] {
                let (mut zero, mut one) = (0.0, 0.0);
                for (x, &w) in weight.iter().enumerate() {
                    if self.labeling.bit(x, k) == 0 {
                        zero += w;
                    } else {
                        one += w;
                    }
                }
                out[pos] = (libm::log(zero) - libm::log(one)).clamp(-LLR_LIMIT, LLR_LIMIT);
            }
        }
        Ok(out)
    }

    /// Demaps, decodes and inverts the matcher.
    pub fn decode_with(
        &self,
        decoder: &mut SpaDecoder,
        y: &[f64],
        sigma: f64,
        max_iter: usize,
    ) -> Result<PasDecoded> {
        let llrs = self.llrs(y, sigma)?;
        let out = decoder.decode(&llrs, max_iter)?;
        let (class_bits, _) = out.bits.split_at(self.n_s);
        let head = match &self.composition {
            Some(c) => match c.decode(class_bits) {
                Ok(bits) => Some(bits),
                Err(Error::CompositionMismatch { .. } | Error::NotInImage) => None,
                Err(e) => return Err(e),
            },
            None => Some(class_bits.to_vec()),
        };
        let info = head.map(|mut bits| {
            bits.extend(
                self.encoder.info_columns()[self.n_s..]
                    .iter()
                    .map(|&c| out.bits[c]),
            );
            bits
        });
        Ok(PasDecoded {
            info,
            converged: out.converged,
            iterations: out.iterations,
        })
    }

    pub fn decode(&self, y: &[f64], sigma: f64) -> Result<PasDecoded> {
        self.decode_with(&mut self.decoder(), y, sigma, DEFAULT_MAX_ITERATIONS)
    }
}

/// One coded frame over the linear AWGN channel per call.
#[derive(Debug, Clone)]
pub struct PasTrial<'a> {
    system: &'a PasSystem,
    decoder: SpaDecoder,
    max_iter: usize,
}

impl<'a> PasTrial<'a> {
    pub fn new(system: &'a PasSystem, max_iter: usize) -> Self {
        Self {
            system,
            decoder: system.decoder(),
            max_iter,
        }
    }
}

impl FrameTrial for PasTrial<'_> {
    fn run(&mut self, psnr_db: f64, seed: u64) -> Result<bool> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let info: Vec<u8> = (0..self.system.info_len())
            .map(|_| rng.gen_range(0..2))
            .collect();
        let frame = self.system.encode(&info)?;
        let amplitudes = self.system.alphabet.amplitudes(&frame.symbols)?;
        let channel = ChannelModel::at_psnr_db(psnr_db)?;
        let y = channel.transmit(&amplitudes, splitmix64(seed));
        let sigma = sigma_from_psnr_db(psnr_db);
        let out = self
            .system
            .decode_with(&mut self.decoder, &y, sigma, self.max_iter)?;
        Ok(out.info.as_deref() != Some(&info[..]))
    }
}
