//! Quadrature rates checked against an independent density-domain oracle:
//! `I(X;Y) = h(Y) - h(Y|X)` and `H(B_k|Y) = H(B_k) + h(Y|B_k) - h(Y)`, with
//! differential entropies integrated by a fine trapezoid rule.

use ps4pam_core::pam::{BitLabeling, InputDistribution, PamAlphabet};
use ps4pam_core::rates::{rate_bmd, rate_smd, RateEngine};
use ps4pam_core::shaping::{exponential_reference, fixed_distribution};

fn gauss(y: f64, m: f64, s: f64) -> f64 {
    (-(y - m) * (y - m) / (2.0 * s * s)).exp() / (2.0 * std::f64::consts::PI * s * s).sqrt()
}

/// `-∫ f log2 f` for the mixture `Σ w_i N(m_i, s²)`, trapezoid on a fine grid.
fn mixture_entropy(weights: &[f64], means: &[f64], s: f64) -> f64 {
    let lo = means.iter().cloned().fold(f64::INFINITY, f64::min) - 14.0 * s;
    let hi = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 14.0 * s;
    let h = s / 400.0;
    let n = ((hi - lo) / h).ceil() as usize;
    let f = |y: f64| {
        let p: f64 = weights
            .iter()
            .zip(means)
            .map(|(w, m)| w * gauss(y, *m, s))
            .sum();
        if p > 0.0 {
            -p * p.log2()
        } else {
            0.0
        }
    };
    let mut acc = 0.5 * (f(lo) + f(lo + n as f64 * h));
    for i in 1..n {
        acc += f(lo + i as f64 * h);
    }
    acc * h
}

fn oracle_smd(d: &[f64], pts: &[f64], s: f64) -> f64 {
    let h_y_given_x = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * s * s).log2();
    mixture_entropy(d, pts, s) - h_y_given_x
}

fn oracle_bmd(d: &[f64], pts: &[f64], labels: &[[u8; 2]], s: f64) -> f64 {
    let hx: f64 = d.iter().filter(|p| **p > 0.0).map(|p| -p * p.log2()).sum();
    let hy = mixture_entropy(d, pts, s);
    let mut sum_hb = 0.0;
    for k in 0..2 {
        for b in 0..2u8 {
            let pb: f64 = (0..d.len())
                .filter(|&i| labels[i][k] == b)
                .map(|i| d[i])
                .sum();
            if pb == 0.0 {
                continue;
            }
            let w: Vec<f64> = (0..d.len())
                .map(|i| if labels[i][k] == b { d[i] / pb } else { 0.0 })
                .collect();
            sum_hb += pb * (-pb.log2() + mixture_entropy(&w, pts, s));
        }
        sum_hb -= hy;
    }
    (hx - sum_hb).max(0.0)
}

const GRAY: [[u8; 2]; 4] = [[0, 0], [0, 1], [1, 1], [1, 0]];

#[test]
fn smd_and_bmd_match_density_oracle() {
    let a = PamAlphabet::pam4();
    let g = BitLabeling::gray(4).unwrap();
    let engine = RateEngine::default();
    let dists = [
        InputDistribution::uniform(4),
        fixed_distribution(),
        InputDistribution::symmetric_pam4(0.45).unwrap(),
        InputDistribution::new(vec![0.5, 0.0, 0.0, 0.5]).unwrap(),
        exponential_reference(1.0).unwrap(),
    ];
    let mut worst: f64 = 0.0;
    for d in &dists {
        for &s in &[0.08, 0.15, 0.3, 0.45, 0.6, 0.8, 1.0, 1.5, 2.5] {
            let smd = engine.rate_smd(d, &a, s).unwrap();
            let bmd = engine.rate_bmd(d, &a, &g, s).unwrap();
            let o_smd = oracle_smd(d.pmf(), a.points(), s);
            let o_bmd = oracle_bmd(d.pmf(), a.points(), &GRAY, s);
            worst = worst.max((smd - o_smd).abs()).max((bmd - o_bmd).abs());
            assert!(
                (smd - o_smd).abs() <= 1e-6,
                "{:?} s={s}: smd {smd} oracle {o_smd}",
                d.pmf()
            );
            assert!(
                (bmd - o_bmd).abs() <= 1e-6,
                "{:?} s={s}: bmd {bmd} oracle {o_bmd}",
                d.pmf()
            );
        }
    }
    println!("worst deviation from oracle: {worst:e}");
}

#[test]
fn ook_matches_binary_input_awgn() {
    // OOK {0,3} at sigma 1.5 is antipodal signalling ±1 in unit noise.
    let ook = PamAlphabet::ook();
    let u = InputDistribution::uniform(2);
    let r = rate_smd(&u, &ook, 1.5).unwrap();
    // Oracle: I = 1 - E[log2(1 + exp(-2Y))], Y ~ N(1, 1), fine trapezoid.
    let h = 1e-4;
    let mut acc = 0.0;
    let n = (30.0 / h) as usize;
    for i in 0..=n {
        let y = -14.0 + i as f64 * h;
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        let t = -2.0 * y;
        let lg = if t > 30.0 {
            t / std::f64::consts::LN_2
        } else {
            (1.0 + t.exp()).log2()
        };
        acc += w * gauss(y, 1.0, 1.0) * lg;
    }
    let oracle = 1.0 - acc * h;
    assert!((r - oracle).abs() <= 1e-5, "{r} vs {oracle}");
    let g = BitLabeling::gray(2).unwrap();
    assert!((rate_bmd(&u, &ook, &g, 1.5).unwrap() - r).abs() < 1e-12);
}

#[test]
fn rates_monotone_in_psnr() {
    let a = PamAlphabet::pam4();
    let g = BitLabeling::gray(4).unwrap();
    let engine = RateEngine::default();
    for d in [
        InputDistribution::uniform(4),
        fixed_distribution(),
        exponential_reference(1.0).unwrap(),
    ] {
        let mut last = (0.0, 0.0);
        for i in 0..80 {
            let psnr = -10.0 + 0.5 * i as f64;
            let p = engine.rate_point(&d, &a, Some(&g), psnr).unwrap();
            let bmd = p.rate_bmd.unwrap();
            assert!(
                p.rate_smd >= last.0 - 1e-9 && bmd >= last.1 - 1e-9,
                "{:?} at {psnr}",
                d.pmf()
            );
            assert!(bmd <= p.rate_smd + 1e-9);
            assert!(p.rate_smd <= d.entropy() + 1e-9);
            last = (p.rate_smd, bmd);
        }
    }
}

#[test]
fn bmd_gap_closes_at_high_psnr() {
    let a = PamAlphabet::pam4();
    let g = BitLabeling::gray(4).unwrap();
    let d = fixed_distribution();
    let gap = |s: f64| rate_smd(&d, &a, s).unwrap() - rate_bmd(&d, &a, &g, s).unwrap();
    assert!(gap(0.2) < gap(0.6));
    assert!(gap(0.05) < 1e-6);
}
