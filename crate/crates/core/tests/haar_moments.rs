use mubs_core::haar::{integrate, integrate_fn, sample_unitary, SamplerConfig};
use mubs_core::witness::{h0, h0_haar_mean, h0_witness, h_witness};

const N: usize = 40_000;

#[test]
fn entry_moments_match_closed_forms() {
    for d in 2..=6usize {
        let cfg = SamplerConfig::new(d, 100 + d as u64);
        for (r, c) in [(0, 0), (d - 1, d / 2)] {
            let second = integrate_fn(|u| Ok(u.get(r, c).norm_sqr()), &cfg, N).unwrap();
            let fourth = integrate_fn(|u| Ok(u.get(r, c).norm_sqr().powi(2)), &cfg, N).unwrap();
            let want2 = 1.0 / d as f64;
            let want4 = 2.0 / (d * (d + 1)) as f64;
            assert!(
                second.agrees_with(want2, 3.0),
                "d={d} ({r},{c}) E|z|^2 {second:?} vs {want2}"
            );
            assert!(
                fourth.agrees_with(want4, 3.0),
                "d={d} ({r},{c}) E|z|^4 {fourth:?} vs {want4}"
            );
        }
    }
}

#[test]
fn h_and_h0_integrals() {
    for d in 2..=6usize {
        let cfg = SamplerConfig::new(d, 7);
        let e0 = integrate(&h0_witness(d), &cfg, N).unwrap();
        assert!(e0.agrees_with(h0_haar_mean(d), 3.0), "d={d} {e0:?}");
        let e = integrate(&h_witness(d), &cfg, N).unwrap();
        let want = (d as f64 - 1.0) / (d as f64 + 1.0);
        assert!(e.agrees_with(want, 3.0), "d={d} {e:?}");
    }
}

#[test]
fn left_translation_leaves_integrals_unchanged() {
    for d in [2usize, 4, 6] {
        let v = sample_unitary(&SamplerConfig::new(d, 999), 0);
        let plain = integrate_fn(|u| Ok(h0(u)), &SamplerConfig::new(d, 11), N).unwrap();
        let moved = integrate_fn(|u| Ok(h0(&v.matmul(u)?)), &SamplerConfig::new(d, 12), N).unwrap();
        let combined = plain.stderr.hypot(moved.stderr);
        assert!(
            (plain.mean - moved.mean).abs() <= 4.0 * combined,
            "d={d} {plain:?} {moved:?}"
        );
    }
}

#[test]
fn estimates_are_bit_identical_across_runs() {
    let cfg = SamplerConfig::new(5, 31).with_chunk_size(777);
    let a = integrate(&h0_witness(5), &cfg, 10_001).unwrap();
    let b = integrate(&h0_witness(5), &cfg, 10_001).unwrap();
    assert_eq!(a.mean.to_bits(), b.mean.to_bits());
    assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    assert_eq!(a.n_samples, 10_001);
    let c = integrate(
        &h0_witness(5),
        &SamplerConfig::new(5, 32).with_chunk_size(777),
        10_001,
    )
    .unwrap();
    assert_ne!(a.mean, c.mean);
}

#[test]
fn samples_are_a_function_of_the_index() {
    let cfg = SamplerConfig::new(3, 5);
    assert_eq!(sample_unitary(&cfg, 17), sample_unitary(&cfg, 17));
    assert_ne!(sample_unitary(&cfg, 17), sample_unitary(&cfg, 18));
}
