//! Multistart maximization against the exhaustive support oracle.

use expfam::divmax::{criticality_check, local_maximizers, max_divergence_oracle, psi_family};
use expfam::lab::random_family;
use expfam::projection::ri_project;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn random_families_agree_with_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 0..40 {
        let n = rng.random_range(3..=6);
        let k = rng.random_range(0..n - 1);
        let uniform = rng.random_bool(0.5);
        let f = random_family(n, k, uniform, &mut rng);
        let r = local_maximizers(&f, 32, i, 1e-9).unwrap();
        let o = max_divergence_oracle(&f, 0.05).unwrap();
        assert!(
            (o.value - r.global_estimate).abs() <= 1e-3,
            "family {i}: estimate {} oracle {}",
            r.global_estimate,
            o.value
        );
        for m in &r.local_maxima {
            assert!(criticality_check(&f, &m.u, 1e-5).pass, "family {i}: {m:?}");
            let proj = ri_project(&f, &m.p).unwrap();
            let back = psi_family(&f, &m.p).unwrap();
            let gap = back.values().iter().zip(m.u.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(gap <= 1e-6, "family {i}: psi round trip {gap}");
            assert!((proj.divergence - m.d_value).abs() <= 1e-8);
        }
    }
}
