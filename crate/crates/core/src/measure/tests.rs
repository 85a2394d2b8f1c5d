use super::*;
use proptest::prelude::*;

fn two_atoms(a: f64) -> BaseMeasure {
    BaseMeasure::point_masses(vec![(vec![-a], 0.5), (vec![a], 0.5)]).unwrap()
}

fn unit_uniform() -> BaseMeasure {
    BaseMeasure::uniform_box(vec![-1.0], vec![1.0]).unwrap()
}

fn gauss1(var: f64) -> BaseMeasure {
    BaseMeasure::gaussian(vec![0.0], vec![vec![var]]).unwrap()
}

/// Composite Simpson rule, used as an oracle independent of Gauss–Legendre.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut s = f(a) + f(b);
    for i in 1..panels {
        let x = a + i as f64 * h;
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    s * h / 3.0
}

#[test]
fn sample_single_atom() {
    let d = BaseMeasure::dirac(vec![0.0]).unwrap();
    assert_eq!(d.sample(1, 5).unwrap(), vec![vec![0.0]; 5]);
    assert!(matches!(d.sample(1, 0), Err(Error::Data(_))));
}

#[test]
fn sample_uniform_mean() {
    let n = 100_000;
    let xs = unit_uniform().sample(7, n).unwrap();
    let mean = xs.iter().map(|x| x[0]).sum::<f64>() / n as f64;
    let se = (1.0f64 / 3.0 / n as f64).sqrt();
    assert!(mean.abs() < 3.0 * se, "mean {mean}");
}

#[test]
fn sample_gaussian_variance() {
    let n = 100_000;
    let xs = gauss1(1.0).sample(7, n).unwrap();
    let mean = xs.iter().map(|x| x[0]).sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x[0] - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let se = (2.0 / n as f64).sqrt();
    assert!((var - 1.0).abs() < 3.0 * se, "var {var}");
}

#[test]
fn sampling_is_deterministic() {
    let m = BaseMeasure::mixture(vec![(unit_uniform(), 0.3), (gauss1(2.0), 0.7)]).unwrap();
    assert_eq!(m.sample(99, 50).unwrap(), m.sample(99, 50).unwrap());
    assert_ne!(m.sample(99, 50).unwrap(), m.sample(100, 50).unwrap());
}

#[test]
fn characteristic_function_examples() {
    let d = BaseMeasure::dirac(vec![0.0]).unwrap();
    assert_eq!(d.characteristic_function(&[3.7]), Complex64::new(1.0, 0.0));

    let g = gauss1(1.0).characteristic_function(&[1.0]);
    assert!((g.re - (-0.5f64).exp()).abs() < 1e-15 && g.im == 0.0);

    // oracle: ∫_{-1}^{1} e^{2ix}/2 dx by Simpson
    let re = simpson(|x| (2.0 * x).cos() / 2.0, -1.0, 1.0, 2000);
    let im = simpson(|x| (2.0 * x).sin() / 2.0, -1.0, 1.0, 2000);
    let u = unit_uniform().characteristic_function(&[2.0]);
    assert!((u.re - re).abs() < 1e-12 && (u.im - im).abs() < 1e-12);
    assert!((u.re - 0.454_648_713_412_840_9).abs() < 1e-15);
}

#[test]
fn contraction_examples() {
    assert_eq!(
        unit_uniform().contract(&[0.1]),
        BaseMeasure::uniform_box(vec![-0.1], vec![0.1]).unwrap()
    );
    let c = two_atoms(1.0).contract(&[0.2]);
    assert_eq!(
        c,
        BaseMeasure::point_masses(vec![(vec![-0.2], 0.5), (vec![0.2], 0.5)]).unwrap()
    );
    assert_eq!(gauss1(1.0).contract(&[0.5]), gauss1(0.25));
}

#[test]
fn mass_in_box_examples() {
    let b = BaseMeasure::uniform_box(vec![-0.1], vec![0.1]).unwrap();
    assert!((b.mass_in_box(&[-0.05], &[0.05]) - 0.5).abs() < 1e-15);
    let d = BaseMeasure::dirac(vec![0.0]).unwrap();
    for eps in [1e-9, 0.1, 3.0] {
        assert_eq!(d.mass_in_box(&[-eps], &[eps]), 1.0);
    }
    let oracle = simpson(crate::normal::pdf, -1.0, 1.0, 2000);
    let g = gauss1(1.0).mass_in_box(&[-1.0], &[1.0]);
    assert!((g - oracle).abs() < 1e-12);
    assert!((g - 0.682_689_492_137_085_9).abs() < 1e-15);
}

#[test]
fn boundary_atoms_count_fully() {
    let m = two_atoms(1.0);
    assert_eq!(m.mass_in_box(&[-1.0], &[1.0]), 1.0);
    assert_eq!(m.mass_in_box(&[1.0], &[1.0]), 0.5);
    let c = m.contract(&[0.1]);
    assert_eq!(c.mass_in_box(&[-0.1], &[0.1]), 1.0);
}

#[test]
fn correlated_gaussian_orthant() {
    // P(X > 0, Y > 0) = 1/4 + asin(ρ)/(2π)
    for rho in [-0.7, 0.0, 0.3, 0.95] {
        let g = BaseMeasure::gaussian(vec![0.0, 0.0], vec![vec![1.0, rho], vec![rho, 1.0]])
            .unwrap();
        let p = g.mass_in_box(&[0.0, 0.0], &[f64::INFINITY, f64::INFINITY]);
        let exact = 0.25 + rho.asin() / (2.0 * std::f64::consts::PI);
        assert!((p - exact).abs() < 1e-10, "rho={rho} p={p} exact={exact}");
    }
}

#[test]
fn degenerate_gaussian_behaves_like_atom() {
    let g = BaseMeasure::gaussian(vec![0.5], vec![vec![0.0]]).unwrap();
    assert!(g.is_atomic());
    assert_eq!(g.mass_in_box(&[0.5], &[0.5]), 1.0);
    assert_eq!(g.mass_in_box(&[0.6], &[1.0]), 0.0);
}

#[test]
fn invalid_measures_are_rejected() {
    assert!(BaseMeasure::point_masses(vec![(vec![0.0], 0.6)]).is_err());
    assert!(BaseMeasure::point_masses(vec![(vec![0.0], 1.2), (vec![1.0], -0.2)]).is_err());
    assert!(BaseMeasure::uniform_box(vec![1.0], vec![1.0]).is_err());
    assert!(BaseMeasure::gaussian(vec![0.0, 0.0], vec![vec![1.0, 2.0], vec![2.0, 1.0]]).is_err());
    assert!(BaseMeasure::gaussian(vec![0.0, 0.0], vec![vec![1.0, 0.5], vec![0.4, 1.0]]).is_err());
    assert!(BaseMeasure::mixture(vec![(unit_uniform(), 0.5), (BaseMeasure::standard_gaussian(2).unwrap(), 0.5)]).is_err());
}

#[test]
fn symmetry_flags() {
    assert!(two_atoms(2.0).is_symmetric());
    assert!(unit_uniform().is_symmetric());
    assert!(!BaseMeasure::uniform_box(vec![-1.0], vec![2.0]).unwrap().is_symmetric());
    assert!(!BaseMeasure::point_masses(vec![(vec![-1.0], 0.4), (vec![1.0], 0.6)])
        .unwrap()
        .is_symmetric());
    let p = BaseMeasure::product(vec![unit_uniform(), two_atoms(2.0), gauss1(1.0)]).unwrap();
    assert!(p.is_symmetric());
    assert_eq!(p.dim(), 3);
}

fn symmetric_zoo() -> Vec<BaseMeasure> {
    vec![
        BaseMeasure::dirac(vec![0.0]).unwrap(),
        two_atoms(2.0),
        unit_uniform(),
        gauss1(1.7),
        BaseMeasure::mixture(vec![(two_atoms(0.5), 0.25), (gauss1(0.3), 0.75)]).unwrap(),
        BaseMeasure::product(vec![unit_uniform(), two_atoms(1.0)]).unwrap(),
        BaseMeasure::gaussian(vec![0.0, 0.0], vec![vec![1.0, 0.4], vec![0.4, 0.5]]).unwrap(),
    ]
}

#[test]
fn symmetric_measures_have_real_characteristic_functions() {
    for m in symmetric_zoo() {
        assert!(m.is_symmetric());
        for i in 0..100 {
            let s = -10.0 + 20.0 * i as f64 / 99.0;
            let t: Vec<f64> = (0..m.dim()).map(|k| s * (1.0 + 0.3 * k as f64)).collect();
            let cf = m.characteristic_function(&t);
            assert!(cf.im.abs() < 1e-10, "{m:?} t={t:?} cf={cf}");
            assert!(cf.norm() <= 1.0 + 1e-12);
        }
    }
}

#[test]
fn empirical_cf_matches_exact() {
    let count = 100_000;
    let bound = 5.0 / (count as f64).sqrt();
    for (k, m) in symmetric_zoo().into_iter().enumerate() {
        let xs = m.sample(1000 + k as u64, count).unwrap();
        for i in 0..=12 {
            let s = -3.0 + 0.5 * i as f64;
            let t: Vec<f64> = (0..m.dim()).map(|j| if j == 0 { s } else { 0.5 * s }).collect();
            let ecf: Complex64 = xs
                .iter()
                .map(|x| Complex64::from_polar(1.0, dot(&t, x)))
                .sum::<Complex64>()
                / count as f64;
            let diff = (ecf - m.characteristic_function(&t)).norm();
            assert!(diff < bound, "measure {k} t={t:?} diff={diff}");
        }
    }
}

#[test]
fn marginals() {
    let g = BaseMeasure::gaussian(
        vec![0.0, 1.0, 2.0],
        vec![vec![1.0, 0.2, 0.1], vec![0.2, 2.0, 0.3], vec![0.1, 0.3, 3.0]],
    )
    .unwrap();
    let m = g.marginal(&[0, 2]).unwrap();
    assert_eq!(
        m,
        BaseMeasure::gaussian(vec![0.0, 2.0], vec![vec![1.0, 0.1], vec![0.1, 3.0]]).unwrap()
    );
    let p = BaseMeasure::product(vec![unit_uniform(), two_atoms(2.0), gauss1(1.0)]).unwrap();
    assert_eq!(p.marginal(&[1]).unwrap(), two_atoms(2.0));
    assert_eq!(p.marginal(&[1, 2]).unwrap().dim(), 2);
    assert!(p.marginal(&[2, 1]).is_err());
    assert!(p.marginal(&[3]).is_err());
}

#[test]
fn quadrature_rules_integrate_moments() {
    let cases: Vec<(BaseMeasure, f64)> = vec![
        (unit_uniform(), 1.0 / 3.0),
        (gauss1(0.7), 0.7),
        (two_atoms(2.0), 4.0),
        (BaseMeasure::mixture(vec![(unit_uniform(), 0.5), (gauss1(2.0), 0.5)]).unwrap(), 0.5 / 3.0 + 1.0),
    ];
    for (m, second) in cases {
        let rule = m.quadrature_rule(64, &[-1.0, 1.0]).unwrap();
        let total: f64 = rule.weights.iter().sum();
        let m2: f64 = rule.iter().map(|(x, w)| w * x[0] * x[0]).sum();
        assert!((total - 1.0).abs() < 1e-13, "{m:?}");
        assert!((m2 - second).abs() < 1e-12, "{m:?} {m2}");
    }
    let corr = BaseMeasure::gaussian(vec![0.0, 0.0], vec![vec![1.0, 0.4], vec![0.4, 0.5]]).unwrap();
    let rule = corr.quadrature_rule(64, &[]).unwrap();
    let cross: f64 = rule.iter().map(|(x, w)| w * x[0] * x[1]).sum();
    assert!((cross - 0.4).abs() < 1e-12);
}

#[test]
fn spec_round_trip() {
    for m in symmetric_zoo() {
        let back = BaseMeasure::try_from(m.to_spec()).unwrap();
        assert_eq!(back, m);
    }
}

proptest! {
    #[test]
    fn pushforward_consistency(
        eps in 0.01f64..2.0,
        a in -3.0f64..3.0,
        width in 0.0f64..4.0,
        which in 0usize..5,
    ) {
        let m = symmetric_zoo().swap_remove(which);
        let b = a + width;
        let c = m.contract(&[eps]);
        let lhs = c.mass_in_box(&[a], &[b]);
        let rhs = m.mass_in_box(&[a / eps], &[b / eps]);
        prop_assert!((lhs - rhs).abs() < 1e-12, "lhs={} rhs={}", lhs, rhs);
    }

    #[test]
    fn cf_conjugate_symmetry(t in -20.0f64..20.0, shift in -2.0f64..2.0) {
        let m = BaseMeasure::mixture(vec![
            (BaseMeasure::uniform_box(vec![shift - 0.5], vec![shift + 1.0]).unwrap(), 0.4),
            (BaseMeasure::gaussian(vec![shift], vec![vec![0.3]]).unwrap(), 0.3),
            (BaseMeasure::point_masses(vec![(vec![shift], 0.2), (vec![1.0], 0.8)]).unwrap(), 0.3),
        ]).unwrap();
        let p = m.characteristic_function(&[t]);
        let q = m.characteristic_function(&[-t]);
        prop_assert!((p - q.conj()).norm() < 1e-14);
        prop_assert!(p.norm() <= 1.0 + 1e-12);
    }
}
