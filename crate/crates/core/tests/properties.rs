mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use rakelgen::domain::{FactorId, LabelVector, StudentRecord, TemplateRegistry};
use rakelgen::eval::{compute_metrics, paired_t_test, student_t_two_tailed, FoldPlan};
use rakelgen::features::{extract_features, series_stats, FeatureMode};
use rakelgen::tree::{train_tree, TreeConfig, TreeNode};

use common::{brute_confusion, t_two_tailed_series};

fn record_from(values: &[Vec<f64>]) -> StudentRecord {
    let weeks = values[0].len();
    let series = FactorId::ALL
        .into_iter()
        .zip(values)
        .map(|(f, v)| (f, v.clone()))
        .collect();
    StudentRecord::new("p", weeks, series, None).unwrap()
}

fn likert_series(weeks: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((1u8..=5).prop_map(f64::from), weeks)
}

fn any_record() -> impl Strategy<Value = StudentRecord> {
    (1usize..8)
        .prop_flat_map(|w| prop::collection::vec(likert_series(w), 9).prop_map(|v| record_from(&v)))
}

/// Consistent data: distinct feature vectors, arbitrary labels.
fn consistent_dataset() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<usize>)> {
    (1usize..4, 1usize..40).prop_flat_map(|(width, n)| {
        (
            prop::collection::btree_set(prop::collection::vec(0i32..6, width), 1..=n),
            prop::collection::vec(0usize..3, n),
        )
            .prop_map(|(rows, labels)| {
                let x: Vec<Vec<f64>> = rows
                    .into_iter()
                    .map(|r| r.into_iter().map(f64::from).collect())
                    .collect();
                let y = labels[..x.len()].to_vec();
                (x, y)
            })
    })
}

fn min_gain_ok(node: &TreeNode) -> bool {
    match node {
        TreeNode::Leaf { distribution, .. } => distribution.iter().sum::<usize>() > 0,
        TreeNode::Internal { left, right, .. } => min_gain_ok(left) && min_gain_ok(right),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn labelset_roundtrip(mask in prop::collection::vec(any::<bool>(), 29)) {
        let reg = TemplateRegistry::default_registry();
        let ids: BTreeSet<u32> = reg.ids().zip(&mask).filter(|(_, &m)| m).map(|(id, _)| id).collect();
        let v = reg.labelset_to_vector(&ids).unwrap();
        prop_assert_eq!(v.weight(), ids.len());
        prop_assert_eq!(reg.vector_to_labelset(&v).unwrap(), ids);
    }

    #[test]
    fn features_are_pure_and_scan_consistent(r in any_record()) {
        let a = extract_features(&r, FeatureMode::Both);
        let b = extract_features(&r, FeatureMode::Both);
        prop_assert_eq!(&a.values, &b.values);
        prop_assert_eq!(a.values.len(), 9 * 5 + 9 * r.weeks);
        for f in FactorId::ALL {
            let s = r.series(f);
            let st = series_stats(s);
            let mut lo = s[0];
            let mut hi = s[0];
            let mut sum = 0.0;
            for &v in s {
                lo = lo.min(v);
                hi = hi.max(v);
                sum += v;
            }
            prop_assert_eq!(st.min, lo);
            prop_assert_eq!(st.max, hi);
            prop_assert_eq!(st.last, s[s.len() - 1]);
            prop_assert!((st.mean - sum / s.len() as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn reversed_series_negates_slope(s in prop::collection::vec(-50.0f64..50.0, 1..15)) {
        let mut rev = s.clone();
        rev.reverse();
        let a = series_stats(&s).slope;
        let b = series_stats(&rev).slope;
        prop_assert!((a + b).abs() < 1e-9, "{} vs {}", a, b);
    }

    #[test]
    fn trees_memorize_consistent_data((x, y) in consistent_dataset()) {
        let t = train_tree(&x, &y, &TreeConfig::default()).unwrap();
        for (row, &label) in x.iter().zip(&y) {
            prop_assert_eq!(t.predict(row).unwrap(), label);
        }
        prop_assert!(min_gain_ok(t.root()));
        // deterministic
        prop_assert_eq!(&t, &train_tree(&x, &y, &TreeConfig::default()).unwrap());
    }

    #[test]
    fn trees_ignore_monotone_rescaling((x, y) in consistent_dataset(), sides in prop::collection::vec(any::<bool>(), 3)) {
        let warp = |v: f64| (v * 0.7).exp() * 3.0 - 1.0;
        let xw: Vec<Vec<f64>> = x.iter().map(|r| r.iter().map(|&v| warp(v)).collect()).collect();
        let a = train_tree(&x, &y, &TreeConfig::default()).unwrap();
        let b = train_tree(&xw, &y, &TreeConfig::default()).unwrap();
        // midpoints move under a nonlinear warp, so probe only where every
        // threshold keeps its side: training rows and points beyond the range
        let mut probes = x.clone();
        probes.push(sides.iter().take(x[0].len()).map(|&hi| if hi { 99.0 } else { -9.0 }).collect());
        for p in probes {
            let pw: Vec<f64> = p.iter().map(|&v| warp(v)).collect();
            prop_assert_eq!(a.predict(&p).unwrap(), b.predict(&pw).unwrap());
        }
    }

    #[test]
    fn metrics_bounds_and_hamming_cross_check(
        pairs in prop::collection::vec((prop::collection::vec(any::<bool>(), 7), prop::collection::vec(any::<bool>(), 7)), 1..20)
    ) {
        let gold: Vec<LabelVector> = pairs.iter().map(|(g, _)| LabelVector::from_bits(g.clone())).collect();
        let pred: Vec<LabelVector> = pairs.iter().map(|(_, p)| LabelVector::from_bits(p.clone())).collect();
        let m = compute_metrics(&gold, &pred).unwrap();
        for v in [m.accuracy, m.precision, m.recall, m.f_score] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        prop_assert!(m.f_score <= m.precision.max(m.recall) + 1e-12);
        if m.precision > 0.0 && m.recall > 0.0 {
            prop_assert!(m.f_score >= m.precision.min(m.recall) - 1e-12);
        }
        let hamming: usize = gold.iter().zip(&pred)
            .map(|(g, p)| g.bits().iter().zip(p.bits()).filter(|(a, b)| a != b).count())
            .sum();
        let cells = (gold.len() * 7) as f64;
        prop_assert!((m.accuracy - (1.0 - hamming as f64 / cells)).abs() < 1e-12);
        let (tp, fp, _, _) = brute_confusion(&gold, &pred);
        if tp + fp > 0 {
            prop_assert_eq!(m.precision, tp as f64 / (tp + fp) as f64);
        }
    }

    #[test]
    fn t_test_symmetric_and_bounded(
        a in prop::collection::vec(0.0f64..1.0, 2..12),
        shift in prop::collection::vec(-0.2f64..0.2, 12),
    ) {
        let b: Vec<f64> = a.iter().zip(&shift).map(|(x, s)| x + s).collect();
        let ab = paired_t_test(&a, &b).unwrap().p_value;
        let ba = paired_t_test(&b, &a).unwrap().p_value;
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert!((ab - ba).abs() < 1e-12);
    }

    #[test]
    fn fold_plans_partition(n in 2usize..80, k in 2usize..12, seed in any::<u64>()) {
        prop_assume!(k <= n);
        let plan = FoldPlan::new(n, k, seed).unwrap();
        let mut seen = vec![0; n];
        let mut sizes = Vec::with_capacity(k);
        for f in 0..k {
            let test = plan.test_indices(f);
            sizes.push(test.len());
            for i in test {
                seen[i] += 1;
            }
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }
}

#[test]
fn p_value_decreases_with_t() {
    for df in [1u32, 2, 5, 9, 20] {
        let mut prev = 1.0;
        for i in 0..200 {
            let t = i as f64 * 0.05;
            let p = student_t_two_tailed(t, df as f64);
            assert!(p <= prev + 1e-15, "df {df} t {t}");
            assert!((p - t_two_tailed_series(t, df)).abs() < 1e-9);
            prev = p;
        }
    }
}

#[test]
fn registry_indices_are_bijective_and_loading_is_stable() {
    let reg = TemplateRegistry::default_registry();
    let mut hit = vec![false; reg.len()];
    for id in reg.ids() {
        let j = reg.label_index(id).unwrap();
        assert!(!hit[j]);
        hit[j] = true;
    }
    assert!(hit.iter().all(|&h| h));
    let dir = tempfile_dir();
    let path = dir.join("registry.json");
    std::fs::write(&path, reg.to_json_string()).unwrap();
    let a = TemplateRegistry::load(&path).unwrap();
    let b = TemplateRegistry::load(&path).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.to_json_string(), b.to_json_string());
    assert_eq!(a.hash(), reg.hash());
}

fn tempfile_dir() -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("rakelgen-props-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
