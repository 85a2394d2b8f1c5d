use super::*;
use crate::measure::{ContractionRule, EpsPoint};

fn single() -> GroupStructure {
    GroupStructure::single()
}

fn dirac0() -> DeFinettiModel {
    DeFinettiModel::collective_bias(single(), BaseMeasure::dirac(vec![0.0]).unwrap(), BiasMap::Tanh).unwrap()
}

fn two_atom_clamp() -> DeFinettiModel {
    let mu = BaseMeasure::point_masses(vec![(vec![-1.0], 0.5), (vec![1.0], 0.5)]).unwrap();
    DeFinettiModel::collective_bias(single(), mu, BiasMap::ClampIdentity).unwrap()
}

fn contracted(measure: BaseMeasure, groups: GroupStructure, exponent: f64, bias: BiasMap) -> DeFinettiModel {
    let m = groups.len();
    let schedule = ContractionSchedule::power_law(m, 1.0, exponent).unwrap();
    DeFinettiModel::contracted(groups, measure, schedule, bias).unwrap()
}

fn uniform1() -> BaseMeasure {
    BaseMeasure::uniform_box(vec![-1.0], vec![1.0]).unwrap()
}

/// Explicit ε_n = 0.1 at n = 4.
fn contracted_uniform_eps_tenth() -> DeFinettiModel {
    let rule = ContractionRule::Explicit {
        table: vec![EpsPoint { n: 4, eps: 0.1 }, EpsPoint { n: 8, eps: 0.05 }],
        regime: Some(Regime::Subcritical),
        critical_constant: None,
    };
    let schedule = ContractionSchedule::new(vec![rule]).unwrap();
    DeFinettiModel::contracted(single(), uniform1(), schedule, BiasMap::ClampIdentity).unwrap()
}

fn model_matrix() -> Vec<(String, DeFinettiModel)> {
    let two_atom = || BaseMeasure::point_masses(vec![(vec![-2.0], 0.5), (vec![2.0], 0.5)]).unwrap();
    let gauss = || BaseMeasure::standard_gaussian(1).unwrap();
    let mut out = vec![
        ("static-dirac".to_string(), dirac0()),
        ("static-two-atom".to_string(), two_atom_clamp()),
    ];
    for a in [0.75, 0.5, 0.15] {
        out.push((format!("uniform-{a}"), contracted(uniform1(), single(), a, BiasMap::ClampIdentity)));
        out.push((format!("gauss-{a}"), contracted(gauss(), single(), a, BiasMap::Tanh)));
        out.push((format!("two-atom-{a}"), contracted(two_atom(), single(), a, BiasMap::Tanh)));
    }
    let two = GroupStructure::equal(2).unwrap();
    out.push((
        "uniform-2d-0.5".into(),
        contracted(
            BaseMeasure::uniform_box(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap(),
            two.clone(),
            0.5,
            BiasMap::ClampIdentity,
        ),
    ));
    out.push((
        "gauss-2d-0.15".into(),
        contracted(
            BaseMeasure::gaussian(vec![0.0, 0.0], vec![vec![1.0, 0.3], vec![0.3, 1.0]]).unwrap(),
            two,
            0.15,
            BiasMap::Tanh,
        ),
    ));
    out
}

#[test]
fn conditional_examples() {
    let p = conditional_margin_pmf(&[0.5], &single(), 4).unwrap();
    assert!((p.get(&[2]) - 27.0 / 64.0).abs() < 1e-15);
    let p = conditional_margin_pmf(&[0.0], &single(), 2).unwrap();
    assert!((p.get(&[0]) - 0.5).abs() < 1e-15);
    let p = conditional_margin_pmf(&[1.0], &single(), 10).unwrap();
    assert_eq!(p.get(&[10]), 1.0);
    assert_eq!(p.get(&[9]), 0.0);
    assert_eq!(p.get(&[12]), 0.0);
    assert!((p.total() - 1.0).abs() < 1e-12);
}

#[test]
fn conditional_rejects_out_of_range_bias() {
    assert!(conditional_margin_pmf(&[1.5], &single(), 4).is_err());
}

#[test]
fn exact_examples() {
    let p = exact_margin_pmf(&dirac0(), 2).unwrap();
    let expect = [(-2, 0.25), (0, 0.5), (2, 0.25)];
    for (k, v) in expect {
        assert!((p.get(&[k]) - v).abs() < 1e-15);
    }
    let p = exact_margin_pmf(&two_atom_clamp(), 3).unwrap();
    assert_eq!(p.get(&[3]), 0.5);
    assert_eq!(p.get(&[-3]), 0.5);
    assert_eq!(p.get(&[1]), 0.0);

    let model = contracted_uniform_eps_tenth();
    let exact = exact_margin_pmf(&model, 4).unwrap();
    let brute = brute_force_pmf(&model, 4).unwrap();
    assert!((exact.get(&[0]) - brute.get(&[0])).abs() < 1e-10);
    // P(S = 0) = C(4,2) E[((1 - m²)/4)²] with m ~ U[-0.1, 0.1]
    let e_m2 = 0.01 / 3.0;
    let e_m4 = 0.0001 / 5.0;
    let oracle = 6.0 / 16.0 * (1.0 - 2.0 * e_m2 + e_m4);
    assert!((exact.get(&[0]) - oracle).abs() < 1e-14);
}

#[test]
fn brute_force_fair_coins() {
    let p = brute_force_pmf(&dirac0(), 4).unwrap();
    for (k, c) in [(-4, 1.0), (-2, 4.0), (0, 6.0), (2, 4.0), (4, 1.0)] {
        assert!((p.get(&[k]) - c / 16.0).abs() < 1e-15);
    }
    assert!(matches!(brute_force_pmf(&dirac0(), 21), Err(Error::Resource(_))));
}

#[test]
fn oracle_equivalence_and_symmetry() {
    for (name, model) in model_matrix() {
        for n in [4u64, 7, 10, 16] {
            let exact = exact_margin_pmf(&model, n).unwrap();
            let brute = brute_force_pmf(&model, n).unwrap();
            let d = exact.max_abs_diff(&brute);
            assert!(d < 1e-10, "{name} n={n}: {d:e}");
            assert!(exact.symmetry_defect() < 1e-10, "{name} n={n}");
            assert!(brute.symmetry_defect() < 1e-10, "{name} n={n}");
            assert!((exact.total() - 1.0).abs() < 1e-12, "{name} n={n}");
        }
    }
}

#[test]
fn atomic_symmetry_is_exact() {
    for n in 2..=20 {
        assert_eq!(exact_margin_pmf(&two_atom_clamp(), n).unwrap().symmetry_defect(), 0.0);
        assert_eq!(exact_margin_pmf(&dirac0(), n).unwrap().symmetry_defect(), 0.0);
    }
}

#[test]
fn lattice_guard() {
    let model = contracted(
        BaseMeasure::uniform_box(vec![-1.0; 3], vec![1.0; 3]).unwrap(),
        GroupStructure::equal(3).unwrap(),
        0.75,
        BiasMap::ClampIdentity,
    );
    assert!(matches!(exact_margin_pmf(&model, 3 * 300), Err(Error::Resource(_))));
}

#[test]
fn monte_carlo_matches_exact() {
    let count = 1_000_000;
    for (name, model) in [
        ("dirac", dirac0()),
        ("uniform-0.5", contracted(uniform1(), single(), 0.5, BiasMap::ClampIdentity)),
    ] {
        let n = 14;
        let exact = exact_margin_pmf(&model, n).unwrap();
        let sample = sample_margins(&model, n, count, 3).unwrap();
        let mut hist = std::collections::BTreeMap::new();
        for s in sample.group_raw(0) {
            *hist.entry(s).or_insert(0usize) += 1;
        }
        for (k, p) in exact.iter() {
            let f = *hist.get(&k[0]).unwrap_or(&0) as f64 / count as f64;
            let bound = 4.0 * (p * (1.0 - p) / count as f64).sqrt();
            assert!((f - p).abs() <= bound.max(1e-12), "{name} k={k:?} f={f} p={p}");
        }
    }
}

#[test]
fn sample_moments_and_parity() {
    let s = sample_margins(&dirac0(), 100, 100_000, 42).unwrap();
    let x = s.group_normalized(0);
    let c = x.len() as f64;
    let mean = x.iter().sum::<f64>() / c;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (c - 1.0);
    assert!(mean.abs() < 3.0 / c.sqrt());
    // fourth moment of S/√n is 3 − 2/n
    let se_var = ((3.0 - 2.0 / 100.0 - 1.0) / c).sqrt();
    assert!((var - 1.0).abs() < 3.0 * se_var, "var={var}");
    assert!(s.group_raw(0).iter().all(|k| k.rem_euclid(2) == 0));
    let odd = sample_margins(&two_atom_clamp(), 7, 1000, 1).unwrap();
    assert!(odd.group_raw(0).iter().all(|&k| k == 7 || k == -7));
}

#[test]
fn sampling_is_deterministic_and_worker_independent() {
    let model = contracted(uniform1(), single(), 0.5, BiasMap::ClampIdentity);
    let a = sample_margins_with_workers(&model, 1000, 5000, 9, 1).unwrap();
    let b = sample_margins_with_workers(&model, 1000, 5000, 9, 4).unwrap();
    let c = sample_margins(&model, 1000, 5000, 9).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, c);
    assert_ne!(a, sample_margins(&model, 1000, 5000, 10).unwrap());
    assert!(sample_margins(&model, 1000, 0, 9).is_err());
}

#[test]
fn csv_layout() {
    let s = sample_margins(&dirac0(), 4, 2, 1).unwrap();
    let mut buf = Vec::new();
    s.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "sample_index,group,raw_margin,normalized_margin");
    assert_eq!(lines.len(), 3);
    assert!(lines[2].starts_with("1,0,"));
}

#[test]
fn abs_margin_examples() {
    let e = expected_abs_margin(&dirac0(), 2, MarginMode::Exact).unwrap();
    assert!((e.per_group[0] - 0.5).abs() < 1e-15);
    for n in [3, 10, 1000] {
        let e = expected_abs_margin(&two_atom_clamp(), n, MarginMode::Exact).unwrap();
        assert!((e.per_group[0] - 1.0).abs() < 1e-12);
    }
    let e = expected_abs_margin(
        &dirac0(),
        10_000,
        MarginMode::MonteCarlo { count: 1_000_000, seed: 5 },
    )
    .unwrap();
    let oracle = (2.0 / std::f64::consts::PI).sqrt() / 100.0;
    assert!((oracle - 0.007979).abs() < 1e-6);
    assert!((e.per_group[0] - oracle).abs() < 3.0 * e.error[0], "{e:?}");
}

#[test]
fn pair_correlation_examples() {
    assert_eq!(pair_correlation(&dirac0(), 50).unwrap(), vec![0.0]);
    let model = contracted(uniform1(), single(), 0.5, BiasMap::ClampIdentity);
    let c = pair_correlation(&model, 10_000).unwrap()[0];
    assert!((c - 1.0 / 3e4).abs() < 1e-16, "{c}");
    let seq: Vec<f64> = [100, 1000, 10_000]
        .iter()
        .map(|&n| pair_correlation(&model, n).unwrap()[0])
        .collect();
    assert!(seq[0] > seq[1] && seq[1] > seq[2]);
    assert!(((seq[1] / seq[0]) - 0.1).abs() < 1e-12);
}

#[test]
fn group_sizes() {
    let g = GroupStructure::new(vec![0.5, 0.3, 0.2]).unwrap();
    for n in [6u64, 7, 10, 11, 99, 1000, 12345] {
        let s = g.sizes(n).unwrap();
        assert_eq!(s.iter().sum::<usize>() as u64, n);
        assert!(s.iter().all(|&v| v >= 2));
    }
    assert_eq!(g.sizes(1000).unwrap(), vec![500, 300, 200]);
    let skew = GroupStructure::new(vec![0.98, 0.01, 0.01]).unwrap();
    assert_eq!(skew.sizes(10).unwrap(), vec![6, 2, 2]);
    assert!(g.sizes(5).is_err());
    assert!(GroupStructure::new(vec![0.5, 0.4]).is_err());
}

#[test]
fn model_validation() {
    let asym = BaseMeasure::point_masses(vec![(vec![0.5], 1.0)]).unwrap();
    assert!(DeFinettiModel::collective_bias(single(), asym, BiasMap::Tanh).is_err());
    let two = BaseMeasure::standard_gaussian(2).unwrap();
    assert!(DeFinettiModel::collective_bias(single(), two, BiasMap::Tanh).is_err());
}

#[test]
fn regimes_and_normalization() {
    let m = contracted(uniform1(), single(), 0.15, BiasMap::ClampIdentity);
    assert_eq!(m.regimes().unwrap(), vec![Regime::Subcritical]);
    let g = m.normalization(1_000_000).unwrap()[0];
    assert!((g / 1e6f64.powf(0.85) - 1.0).abs() < 1e-12);
    assert_eq!(dirac0().regimes().unwrap(), vec![Regime::Fast]);
    assert_eq!(dirac0().normalization(100).unwrap(), vec![10.0]);
    assert_eq!(two_atom_clamp().regimes().unwrap(), vec![Regime::Subcritical]);
}

#[test]
fn model_config_round_trip() {
    for (_, model) in model_matrix() {
        let json = serde_json_like(&model);
        assert_eq!(json, model);
    }
}

// serde round trip through the measure spec, without a format crate
fn serde_json_like(model: &DeFinettiModel) -> DeFinettiModel {
    let spec: ModelSpec = model.clone().into();
    DeFinettiModel::try_from(spec).unwrap()
}
