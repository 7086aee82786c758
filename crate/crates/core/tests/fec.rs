use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use ps4pam_core::ccdm::Composition;
use ps4pam_core::fer::{simulate_fer, wilson_interval, FerConfig};
use ps4pam_core::ldpc::{construct_ldpc, girth, ParityCheckMatrix};
use ps4pam_core::pas::{PasSystem, PasTrial};
use ps4pam_core::spa::SpaDecoder;
use ps4pam_core::{BitLabeling, PamAlphabet};

fn shaped(n: usize, seed: u64) -> PasSystem {
    let h = construct_ldpc(n, 0.56, seed).unwrap();
    let c = Composition::from_target([0.7, 0.3], n / 2).unwrap();
    PasSystem::shaped(&h, c, BitLabeling::gray(4).unwrap()).unwrap()
}

fn random_info(sys: &PasSystem, rng: &mut ChaCha8Rng) -> Vec<u8> {
    (0..sys.info_len()).map(|_| rng.gen_range(0..2)).collect()
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn check_regular(h: &ParityCheckMatrix, n: usize, checks: usize) {
    assert_eq!(h.n_cols(), n);
    assert_eq!(h.n_rows(), checks);
    assert!(h.column_degrees().iter().all(|&d| d == 3));
    assert_eq!(h.edges(), 3 * n);
    assert_eq!(h.check_degrees().iter().sum::<usize>(), 3 * n);
    assert!(girth(h).unwrap() >= 6);
    assert_eq!(girth(h), h.girth());
}

#[test]
fn half_rate_code_of_length_ten_thousand() {
    let h = construct_ldpc(10_000, 0.5, 1).unwrap();
    check_regular(&h, 10_000, 5000);
    assert!(h.check_degrees().iter().all(|&d| d == 6));
    assert_eq!(h.rank_deficiency(), 0);
}

#[test]
fn rate_056_code_mixes_degree_six_and_seven() {
    let h = construct_ldpc(10_000, 0.56, 1).unwrap();
    check_regular(&h, 10_000, 4400);
    let deg = h.check_degrees();
    assert!(deg.iter().all(|&d| d == 6 || d == 7));
    let sevens = deg.iter().filter(|&&d| d == 7).count();
    assert_eq!(sevens, 3600);
    assert!(h.rank_deficiency() <= 2);
}

/// Capacity of BPSK over AWGN at `es_n0` (linear), by direct integration.
fn biawgn_capacity(es_n0: f64) -> f64 {
    // y = 1 + n, n ~ N(0, s^2) with s^2 = 1 / (2 Es/N0); C = 1 - E[log2(1 + exp(-2y/s^2))].
    let s2 = 1.0 / (2.0 * es_n0);
    let s = s2.sqrt();
    let steps = 20_000;
    let (lo, hi) = (1.0 - 12.0 * s, 1.0 + 12.0 * s);
    let dy = (hi - lo) / steps as f64;
    let mut acc = 0.0;
    for i in 0..=steps {
        let y = lo + i as f64 * dy;
        let pdf =
            (-(y - 1.0) * (y - 1.0) / (2.0 * s2)).exp() / (2.0 * std::f64::consts::PI * s2).sqrt();
        let t = -2.0 * y / s2;
        let loss = if t > 30.0 {
            t / std::f64::consts::LN_2
        } else {
            t.exp().ln_1p() / std::f64::consts::LN_2
        };
        let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
        acc += w * pdf * loss;
    }
    1.0 - acc * dy
}

fn ebn0_limit_db(rate: f64) -> f64 {
    let (mut lo, mut hi) = (-5.0f64, 5.0f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let es_n0 = rate * 10f64.powf(mid / 10.0);
        if biawgn_capacity(es_n0) < rate {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn binary_awgn_waterfall_is_near_capacity() {
    let limit = ebn0_limit_db(0.5);
    assert!((limit - 0.187).abs() < 0.01, "{limit}");
    let h = construct_ldpc(10_000, 0.5, 1).unwrap();
    let mut dec = SpaDecoder::new(&h);
    let ebn0_db = limit + 1.5;
    let es_n0 = 0.5 * 10f64.powf(ebn0_db / 10.0);
    let sigma = (1.0 / (2.0 * es_n0)).sqrt();
    // All-zero codeword: the channel is output-symmetric and the decoder is too.
    let mut trial = |_: f64, seed: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let llr: Vec<f64> = (0..10_000)
            .map(|_| {
                let n: f64 = StandardNormal.sample(&mut rng);
                2.0 * (1.0 + sigma * n) / (sigma * sigma)
            })
            .collect();
        let out = dec.decode(&llr, 50)?;
        Ok(out.bits.iter().any(|&b| b != 0))
    };
    let mut cfg = FerConfig::new(vec![ebn0_db], 8000, 11);
    cfg.min_errors = 50;
    let p = simulate_fer(&mut trial, &cfg).unwrap()[0];
    println!(
        "BI-AWGN rate 1/2 at Eb/N0 {ebn0_db:.3} dB: {} / {} frames, upper {:.2e}",
        p.errors, p.frames, p.ci_hi
    );
    assert!(p.ci_hi < 1e-3, "{p:?}");
}

#[test]
fn shaped_system_bookkeeping() {
    let sys = shaped(10_000, 1);
    assert_eq!(sys.n_s(), 5000);
    assert_eq!(sys.composition().unwrap().counts(), [3500, 1500]);
    let se = sys.spectral_efficiency();
    assert!((se - 1.0).abs() <= 0.01, "{se}");
    assert_eq!(sys.n_extra(), 600);
    let h_x = sys.prior().entropy();
    assert!((h_x - 1.8813).abs() < 1e-4);
    // Code rate solving H(X) - 2(1 - c) = 1.
    assert!((1.0 - (h_x - 1.0) / 2.0 - 0.5594).abs() < 1e-4);
    let uni = PasSystem::uniform(
        &construct_ldpc(10_000, 0.5, 1).unwrap(),
        BitLabeling::gray(4).unwrap(),
    )
    .unwrap();
    assert_eq!(uni.info_len(), 5000);
}

#[test]
fn empirical_symbol_distribution_and_selector_bias() {
    let sys = shaped(10_000, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut counts = [0usize; 4];
    let (mut ones, mut parity_ones, mut parity_total) = (0usize, 0usize, 0usize);
    for _ in 0..100 {
        let f = sys.encode(&random_info(&sys, &mut rng)).unwrap();
        assert!(sys.matrix().is_codeword(&f.codeword));
        assert_eq!(
            f.dm_bits.len() + f.uniform_bits.len() + f.parity_bits.len(),
            10_000
        );
        let outer = f.symbols.iter().filter(|&&s| s == 0 || s == 3).count();
        assert_eq!(outer, 3500);
        for &s in &f.symbols {
            counts[s as usize] += 1;
        }
        ones += f.codeword[5000..]
            .iter()
            .map(|&b| b as usize)
            .sum::<usize>();
        parity_ones += f.parity_bits.iter().map(|&b| b as usize).sum::<usize>();
        parity_total += f.parity_bits.len();
    }
    let total = 100.0 * 5000.0;
    for (x, want) in [0.35, 0.15, 0.15, 0.35].into_iter().enumerate() {
        let got = counts[x] as f64 / total;
        assert!((got - want).abs() <= 0.01, "point {x}: {got}");
    }
    let b1 = ones as f64 / total;
    let parity = parity_ones as f64 / parity_total as f64;
    println!("selector bit P(1) = {b1:.4}, parity bit P(1) = {parity:.4}");
    assert!((b1 - 0.5).abs() < 0.005 && (parity - 0.5).abs() < 0.005);
}

#[test]
fn llr_signs_match_transmitted_bits_at_low_noise() {
    let sys = shaped(10_000, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let f = sys.encode(&random_info(&sys, &mut rng)).unwrap();
    let amps = PamAlphabet::pam4().amplitudes(&f.symbols).unwrap();
    let sigma = 0.05;
    let y: Vec<f64> = amps.iter().map(|&a| a + sigma * gauss(&mut rng)).collect();
    let llr = sys.llrs(&y, sigma).unwrap();
    for (i, (&l, &b)) in llr.iter().zip(&f.codeword).enumerate() {
        assert!((l > 0.0) == (b == 0), "bit {i}: llr {l}, bit {b}");
    }
}

#[test]
fn no_frame_errors_without_noise() {
    let sys = shaped(10_000, 1);
    let mut trial = PasTrial::new(&sys, 50);
    let cfg = FerConfig::new(vec![45.0], 1000, 3);
    let p = simulate_fer(&mut trial, &cfg).unwrap()[0];
    assert_eq!((p.frames, p.errors), (1000, 0));
}

#[test]
fn fer_is_monotone_over_the_waterfall() {
    let h = construct_ldpc(10_000, 0.5, 1).unwrap();
    let sys = PasSystem::uniform(&h, BitLabeling::gray(4).unwrap()).unwrap();
    let mut trial = PasTrial::new(&sys, 50);
    let cfg = FerConfig::new(vec![14.8, 15.1, 15.4], 300, 21);
    let pts = simulate_fer(&mut trial, &cfg).unwrap();
    for w in pts.windows(2) {
        assert!(w[1].fer <= w[0].fer, "{pts:?}");
    }
    assert!(pts[0].fer > pts[2].fer);
}

#[test]
fn synthetic_binomial_channel_is_covered_by_the_interval() {
    let p = 0.07;
    let mut covered = 0;
    let runs = 200;
    for seed in 0..runs {
        let mut trial = |_: f64, s: u64| Ok(ChaCha8Rng::seed_from_u64(s).gen::<f64>() < p);
        let mut cfg = FerConfig::new(vec![0.0], 2000, seed);
        cfg.min_errors = 2000;
        let pt = simulate_fer(&mut trial, &cfg).unwrap()[0];
        assert_eq!(pt.frames, 2000);
        if pt.ci_lo <= p && p <= pt.ci_hi {
            covered += 1;
        }
    }
    // Nominal 95%: 200 runs fall below 180 with probability well under 1e-3.
    assert!(covered >= 180, "{covered}/{runs}");
    let (lo, hi) = wilson_interval(140, 2000);
    assert!(lo < p && p < hi);
}

fn small_shaped() -> &'static PasSystem {
    static SYS: std::sync::OnceLock<PasSystem> = std::sync::OnceLock::new();
    SYS.get_or_init(|| shaped(1200, 4))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn encoder_output_satisfies_every_check(seed in any::<u64>()) {
        let sys = small_shaped();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let info = random_info(sys, &mut rng);
        let f = sys.encode(&info).unwrap();
        prop_assert!(sys.matrix().syndrome(&f.codeword).iter().all(|&s| s == 0));
        let amps = PamAlphabet::pam4().amplitudes(&f.symbols).unwrap();
        let back = sys.decode(&amps, 1e-3).unwrap();
        prop_assert!(back.converged);
        prop_assert_eq!(back.info, Some(info));
    }

    #[test]
    fn converged_decoder_output_is_a_codeword(seed in any::<u64>(), noise in 0.2f64..0.6) {
        let sys = small_shaped();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = sys.encode(&random_info(sys, &mut rng)).unwrap();
        let amps = PamAlphabet::pam4().amplitudes(&f.symbols).unwrap();
        let y: Vec<f64> = amps.iter().map(|&a| a + noise * gauss(&mut rng)).collect();
        let llr = sys.llrs(&y, noise).unwrap();
        let out = sys.decoder().decode(&llr, 50).unwrap();
        if out.converged {
            prop_assert!(sys.matrix().is_codeword(&out.bits));
        }
    }
}
