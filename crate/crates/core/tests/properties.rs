use proptest::prelude::*;

use scm_obi::linecode::{encode, BitSequence, LineCode};
use scm_obi::optical::{
    apply_fiber, assemble_channel, cross_by_difference, photodetect, ChannelPlan, DetectorParams,
    FiberParams,
};
use scm_obi::spectral::{band_power, estimate_psd, total_power, Window};

fn code_strategy() -> impl Strategy<Value = LineCode> {
    prop_oneof![
        Just(LineCode::Nrz),
        Just(LineCode::Manchester),
        Just(LineCode::Miller)
    ]
}

fn plan(n: usize) -> ChannelPlan {
    ChannelPlan {
        n_channels: n,
        base_freq: 1_000_000.0,
        spacing: 200_000.0,
        bandwidth: 200_000.0,
        mod_index: 1.0,
        bit_rate: 100_000.0,
        sample_rate: 16_000_000.0,
    }
}

/// Lengths of maximal constant runs, measured in samples.
fn runs(samples: &[f64]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut len = 1;
    for w in samples.windows(2) {
        if w[0] == w[1] {
            len += 1;
        } else {
            out.push(len);
            len = 1;
        }
    }
    out.push(len);
    out
}

proptest! {
    #[test]
    fn encoding_is_polar_and_length_preserving(
        bits in prop::collection::vec(0u8..=1, 1..200),
        code in code_strategy(),
        half in 1usize..6,
    ) {
        let spb = half * 2;
        let seq = BitSequence::from_bits(bits.clone()).unwrap();
        let w = encode(&seq, code, spb, 1.0).unwrap();
        prop_assert_eq!(w.len(), bits.len() * spb);
        prop_assert!(w.samples().iter().all(|&s| s == 1.0 || s == -1.0));
        prop_assert_eq!(&w, &encode(&seq, code, spb, 1.0).unwrap());
    }

    #[test]
    fn manchester_is_balanced(bits in prop::collection::vec(0u8..=1, 1..200)) {
        let w = encode(&BitSequence::from_bits(bits).unwrap(), LineCode::Manchester, 4, 1.0).unwrap();
        prop_assert_eq!(w.samples().iter().sum::<f64>(), 0.0);
    }

    #[test]
    fn run_lengths_match_code(
        bits in prop::collection::vec(0u8..=1, 2..200),
        code in code_strategy(),
    ) {
        let spb = 4;
        let half = spb / 2;
        let w = encode(&BitSequence::from_bits(bits).unwrap(), code, spb, 1.0).unwrap();
        let all = runs(w.samples());
        if all.len() > 2 {
            for &r in &all[1..all.len() - 1] {
                match code {
                    LineCode::Nrz => prop_assert_eq!(r % spb, 0),
                    LineCode::Manchester => prop_assert!(r == half || r == spb),
                    LineCode::Miller => prop_assert!((half..=2 * spb).contains(&r)),
                }
            }
        }
    }

    #[test]
    fn decomposition_identity_and_scaling(
        n in 1usize..=6,
        code in code_strategy(),
        seed in any::<u64>(),
        r in 0.1f64..4.0,
    ) {
        let fields = assemble_channel(&plan(n), code, seed, 160 * 8).unwrap();
        let det = DetectorParams { responsivity: r };
        let d = photodetect(&fields, &det).unwrap();
        for k in 0..d.total.len() {
            prop_assert!(d.signal_part[k] >= 0.0 && d.total[k] >= 0.0);
            let rebuilt = r * (d.signal_part[k] + d.cross_part[k]);
            prop_assert!((d.total[k] - rebuilt).abs() <= 1e-10 * d.total[k].max(1e-300));
        }
        let diff = cross_by_difference(&d);
        for (k, (a, b)) in d.cross_part.iter().zip(&diff).enumerate() {
            prop_assert!((a - b).abs() <= 1e-10 * (d.total[k] / r).max(1e-300));
        }

        // halving the fields quarters every component
        let half = apply_fiber(&fields, &FiberParams { attenuation: std::f64::consts::LN_2, length: 1.0 }).unwrap();
        let q = photodetect(&half, &det).unwrap();
        for k in 0..d.total.len() {
            prop_assert!((q.total[k] - 0.25 * d.total[k]).abs() <= 1e-12 * d.total[k].max(1.0));
            prop_assert!((q.signal_part[k] - 0.25 * d.signal_part[k]).abs() <= 1e-12 * d.signal_part[k].max(1.0));
            prop_assert!((q.cross_part[k] - 0.25 * d.cross_part[k]).abs() <= 1e-12 * d.cross_part[k].abs().max(1.0));
        }
    }

    #[test]
    fn psd_is_non_negative_and_bands_add(
        x in prop::collection::vec(-3.0f64..3.0, 512),
        split in 2usize..250,
    ) {
        let fs = 512.0;
        let psd = estimate_psd(&x, fs, 512, Window::Rectangular, 1).unwrap();
        prop_assert!(psd.power().iter().all(|&p| p >= 0.0));
        let ms = x.iter().map(|v| v * v).sum::<f64>() / 512.0;
        prop_assert!((total_power(&psd) - ms).abs() <= 1e-6 * ms.max(1e-12));

        // [0.5, split) and [split, 255.5) partition bins 1..=255
        let lo = split as f64 - 0.5;
        let a = band_power(&psd, (0.5 + lo) / 2.0, lo - 0.5).unwrap();
        let b = band_power(&psd, (lo + 255.5) / 2.0, 255.5 - lo).unwrap();
        let whole = band_power(&psd, 128.0, 255.0).unwrap();
        prop_assert!((a + b - whole).abs() <= 1e-9 * whole.max(1e-12));
        prop_assert!(whole <= total_power(&psd) * (1.0 + 1e-12));
    }

    #[test]
    fn circular_shift_keeps_band_power(shift in 0usize..1024, bin in 5usize..500, amp in 0.1f64..3.0) {
        let n = 1024;
        let x: Vec<f64> = (0..n)
            .map(|k| amp * (2.0 * std::f64::consts::PI * bin as f64 * k as f64 / n as f64).cos())
            .collect();
        let mut y = x.clone();
        y.rotate_left(shift);
        let px = estimate_psd(&x, n as f64, n, Window::Rectangular, 1).unwrap();
        let py = estimate_psd(&y, n as f64, n, Window::Rectangular, 1).unwrap();
        let bx = band_power(&px, bin as f64, 4.0).unwrap();
        let by = band_power(&py, bin as f64, 4.0).unwrap();
        prop_assert!(((bx - by) / bx).abs() < 1e-9);
    }
}
