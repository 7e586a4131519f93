use sureid::estimator::{soft_expr, EstimatorExpr};
use sureid::mc::{mc_risk, mc_stein_check_expr, sample, sech_cdf, sech_quantile};
use sureid::noise::{DensityComponent, JumpDensity, JumpLaw, LevyTriple, MeasureSpec, NoiseModel};
use sureid::quad::QuadConfig;
use sureid::risk::expected_risk;

/// Third cumulant, `∫ y M(dy)`.
fn third_cumulant(m: &NoiseModel) -> f64 {
    match m.levy_view() {
        Ok(t) => t.jump_measure.integrate(|y| y, &[0.0], &QuadConfig::default()).unwrap().value,
        Err(_) => 0.0,
    }
}

fn check_moments(m: &NoiseModel, n: usize, seed: u64) {
    let b = sample(m, n, seed).unwrap();
    let nf = n as f64;
    let mean = b.values.iter().sum::<f64>() / nf;
    let c = |p: i32| b.values.iter().map(|v| (v - mean).powi(p)).sum::<f64>() / nf;
    let (m2, m3, m4, m6) = (c(2), c(3), c(4), c(6));
    let se_mean = (m2 / nf).sqrt();
    assert!((mean - m.mean()).abs() < 5.0 * se_mean, "{m}: mean {mean}");
    let se_var = ((m4 - m2 * m2) / nf).sqrt();
    assert!((m2 - m.variance()).abs() < 5.0 * se_var, "{m}: var {m2}");
    let k3 = third_cumulant(m);
    if k3.abs() > 1e-12 {
        let se3 = ((m6 - m3 * m3) / nf).sqrt();
        assert!((m3 - k3).abs() < 5.0 * se3, "{m}: third {m3} vs {k3}");
    }
}

#[test]
fn named_samplers_match_moments() {
    for (i, m) in [
        NoiseModel::normal(1.0).unwrap(),
        NoiseModel::laplace(1.0).unwrap(),
        NoiseModel::centered_gamma(2.0).unwrap(),
        NoiseModel::centered_gamma(0.7).unwrap().scale(-1.3).unwrap(),
        NoiseModel::sech(),
        NoiseModel::uniform(1.5).unwrap(),
        NoiseModel::compound_poisson(2.5, JumpLaw::Exponential { rate: 1.5 }).unwrap(),
        NoiseModel::compound_poisson(1.0, JumpLaw::Normal { mean: -0.4, sd: 0.5 }).unwrap(),
    ]
    .iter()
    .enumerate()
    {
        check_moments(m, 1_000_000, 100 + i as u64);
    }
}

#[test]
fn generic_samplers_match_moments() {
    let laplace_gamma = NoiseModel::laplace(1.0)
        .unwrap()
        .convolve(&NoiseModel::centered_gamma(2.0).unwrap().scale(0.5).unwrap())
        .unwrap();
    let with_atoms = NoiseModel::generic(
        LevyTriple::new(
            0.2,
            0.3,
            MeasureSpec {
                components: vec![
                    DensityComponent::new(2.0, 0.7, JumpDensity::Sech),
                    DensityComponent::new(
                        1.0,
                        -1.0,
                        JumpDensity::CompoundPoisson {
                            rate: 0.8,
                            jump: JumpLaw::Uniform { lo: 0.0, hi: 2.0 },
                        },
                    ),
                ],
                atoms: vec![(-0.5, 0.2), (1.0, 0.4)],
            },
        )
        .unwrap(),
    )
    .unwrap();
    check_moments(&laplace_gamma, 1_000_000, 7);
    check_moments(&with_atoms, 1_000_000, 8);
}

#[test]
fn normal_mean_within_clt_bound() {
    let b = sample(&NoiseModel::normal(1.0).unwrap(), 1_000_000, 5).unwrap();
    let mean = b.values.iter().sum::<f64>() / b.count as f64;
    assert!(mean.abs() < 5e-3);
}

#[test]
fn laplace_variance_within_one_percent() {
    let b = sample(&NoiseModel::laplace(1.0).unwrap(), 1_000_000, 6).unwrap();
    let n = b.count as f64;
    let mean = b.values.iter().sum::<f64>() / n;
    let var = b.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    assert!((var - 1.0).abs() < 0.01);
}

#[test]
fn sech_inverse_cdf() {
    for i in 1..10_000 {
        let u = i as f64 / 10_000.0;
        assert!((sech_cdf(sech_quantile(u)) - u).abs() < 1e-12);
    }
}

#[test]
fn stein_identity_by_monte_carlo() {
    for m in [NoiseModel::laplace(1.0).unwrap(), NoiseModel::centered_gamma(2.0).unwrap()] {
        let c = mc_stein_check_expr(&m, &soft_expr(2.0), 1.0, 1_000_000, 21).unwrap();
        assert!(c.z() < 4.0, "{m}: {c:?}");
    }
}

#[test]
fn monte_carlo_risk_oracles() {
    let m = NoiseModel::laplace(1.0).unwrap();
    let id = mc_risk(&m, &EstimatorExpr::identity(), 0.5, 400_000, 2).unwrap();
    assert!((id.value - 1.0).abs() < 4.0 * id.se);
    let zero = mc_risk(&m, &EstimatorExpr::zero(), 1.5, 1000, 2).unwrap();
    assert_eq!(zero.value, 2.25);
    let s = mc_risk(&m, &soft_expr(1.0), 0.8, 400_000, 3).unwrap();
    let q = expected_risk(&m, &soft_expr(1.0), 0.8).unwrap().value;
    assert!((s.value - q).abs() < 4.0 * s.se);
}
