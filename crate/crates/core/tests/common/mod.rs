#![allow(dead_code)]

use parabolic_core::{CoefficientSet, SourceTerm, SpaceTimeFn};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const DELTA: f64 = 0.5;
pub const SUP_BOUND: f64 = 10.0;

/// Smooth random coefficients with `b >= DELTA` and `|b| + |f| + |λ| <= SUP_BOUND`.
pub fn random_coefficients(rng: &mut ChaCha8Rng) -> CoefficientSet {
    let amp_b = rng.gen_range(0.0..4.0);
    let rest = SUP_BOUND - DELTA - amp_b;
    let split = rng.gen_range(0.0..1.0);
    let amp_f = rest * split * 0.999;
    let amp_l = rest * (1.0 - split) * 0.999;
    let (kb, pb, wb) = (
        rng.gen_range(0.5..4.0),
        rng.gen_range(0.0..6.3),
        rng.gen_range(0.0..6.0),
    );
    let (kf, pf, wf) = (
        rng.gen_range(0.5..4.0),
        rng.gen_range(0.0..6.3),
        rng.gen_range(0.0..6.0),
    );
    let (kl, pl, wl) = (
        rng.gen_range(0.5..4.0),
        rng.gen_range(0.0..6.3),
        rng.gen_range(0.0..6.0),
    );
    let lambda_bias = rng.gen_range(-1.0..1.0);
    CoefficientSet {
        b: SpaceTimeFn::new(move |x, t| {
            DELTA + 0.5 * amp_b * (1.0 + (kb * x + pb).sin() * (wb * t).cos())
        }),
        f: SpaceTimeFn::new(move |x, t| amp_f * (kf * x + pf).cos() * (wf * t + 0.3).cos()),
        lambda: SpaceTimeFn::new(move |x, t| {
            amp_l * (0.5 * lambda_bias + 0.5 * (kl * x + pl).sin() * (wl * t).cos())
        }),
        delta: DELTA,
        sup_bound: SUP_BOUND,
    }
}

/// Five sources of different character: smooth flux, smooth plain, mixed,
/// a growing high mode, and a rough flux switched on after `t = 0`.
pub fn random_sources(rng: &mut ChaCha8Rng) -> Vec<SourceTerm> {
    let mut modes = |count: usize, max_m: f64| -> Vec<(f64, f64, f64)> {
        (0..count)
            .map(|_| {
                (
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(1.0..max_m).round(),
                    rng.gen_range(0.0..6.3),
                )
            })
            .collect()
    };
    let field = |m: Vec<(f64, f64, f64)>, rate: f64| {
        SpaceTimeFn::new(move |x, t| {
            (rate * t).exp() * m.iter().map(|(a, k, p)| a * (k * x + p).cos()).sum::<f64>()
        })
    };
    let m1 = modes(3, 4.0);
    let m2 = modes(3, 4.0);
    let m3 = modes(2, 6.0);
    let m4 = modes(2, 6.0);
    let m5 = modes(6, 16.0);
    let high = rng.gen_range(4.0..10.0f64).round();
    let rate = rng.gen_range(0.0..2.0);
    vec![
        SourceTerm::new(field(m1, rate), 0.0),
        SourceTerm::new(0.0, field(m2, -rate)),
        SourceTerm::new(field(m3, 0.0), field(m4, rate)),
        SourceTerm::new(
            SpaceTimeFn::new(move |x, t| -(high * x).cos() * ((high * high) * t).min(30.0).exp()),
            0.0,
        ),
        SourceTerm::new(
            SpaceTimeFn::new(move |x, t| {
                t * m5
                    .iter()
                    .map(|(a, k, p)| a * (k * x + p).cos())
                    .sum::<f64>()
            }),
            0.0,
        ),
    ]
}
