use digeco_core::model::IdSource;
use digeco_core::stats::chi_squared;
use digeco_core::users::{pmf, RequestModel};
use digeco_core::{build_users, AttributeLimits, DistributionSpec, Histogram, UserModelConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn generated(cfg: &UserModelConfig, n: usize, seed: u64) -> Vec<digeco_core::Request> {
    let limits = AttributeLimits::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pop = build_users(cfg, &limits, &mut IdSource::new(), &mut rng).unwrap();
    let model = RequestModel::new(cfg, &limits).unwrap();
    (0..n)
        .map(|i| {
            let user = &pop.users[i % pop.users.len()];
            let r = model.generate_request(user, i as u64, &mut rng).unwrap();
            let vocab = user.vocabulary_set();
            assert!(r
                .services()
                .iter()
                .all(|s| s.attributes().is_subset(&vocab)));
            r
        })
        .collect()
}

#[test]
fn uniform_length_fits_its_own_distribution() {
    let cfg = UserModelConfig::default();
    let mut h = Histogram::new(1, 17);
    for r in generated(&cfg, 10_000, 1) {
        h.record(r.len() as i64);
    }
    let report = chi_squared(&h, &pmf(&cfg.length_dist)).unwrap();
    assert_eq!(report.dof, 16);
    assert!(report.statistic < 26.296, "chi2 {}", report.statistic);
}

#[test]
fn modularity_fits_its_own_distribution() {
    for dist in [
        DistributionSpec::Uniform { lo: 1, hi: 11 },
        DistributionSpec::Gaussian {
            mu: 6.0,
            sigma: 2.0,
            lo: 1,
            hi: 11,
        },
        DistributionSpec::PowerLaw {
            gamma: 1.5,
            lo: 1,
            hi: 11,
        },
    ] {
        let cfg = UserModelConfig {
            modularity_dist: dist.clone(),
            ..Default::default()
        };
        let mut h = Histogram::new(1, 11);
        for r in generated(&cfg, 2_000, 2) {
            for s in r.services() {
                h.record(s.len() as i64);
            }
        }
        let report = chi_squared(&h, &pmf(&dist)).unwrap();
        assert_eq!(report.dof, 10);
        assert!(
            report.statistic < 18.307,
            "{dist:?}: chi2 {}",
            report.statistic
        );
    }
}
