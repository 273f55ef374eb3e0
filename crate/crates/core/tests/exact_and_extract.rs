//! Exact values against each other and extraction plans through serde.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zerosum::engine::EngineConfig;
use zerosum::exact::{exact_s, lower_bound_record, verify_record, LengthSpec, SearchOptions, Status};
use zerosum::extract::{extract_filtration, split_subadditive, ExtractionPlan};
use zerosum::{parse_group, GSeq};

fn s(spec: &str, len: u64) -> u64 {
    let g = parse_group(spec).unwrap();
    let opts = SearchOptions {
        normalize_first: len % g.exponent() == 0,
        ..Default::default()
    };
    exact_s(&g, &LengthSpec::absolute([len]).unwrap(), &opts).unwrap().value
}

#[test]
fn exact_values_are_subadditive() {
    for (spec, unit, kmax) in [("2", 2, 4), ("3", 3, 3), ("2,2", 2, 3), ("3,3", 3, 3), ("4", 4, 2)] {
        let vals: Vec<u64> = (1..=kmax).map(|k| s(spec, k * unit)).collect();
        for i in 0..vals.len() {
            for j in 0..vals.len() - i - 1 {
                // s_{a+b} ≤ max(s_a + b, s_b)
                let (a, b) = ((i as u64 + 1) * unit, (j as u64 + 1) * unit);
                let sum = vals[i + j + 1];
                assert!(sum <= (vals[i] + b).max(vals[j]), "{spec}: s_{} = {sum}", a + b);
            }
        }
    }
}

#[test]
fn exact_values_sit_above_the_construction() {
    for (spec, k) in [("2,2", 1), ("2,2", 2), ("3", 2), ("3,3", 1), ("3,3", 2), ("2,2,2", 1)] {
        let g = parse_group(spec).unwrap();
        let lower = lower_bound_record(&g, k).unwrap();
        assert_eq!(lower.status, Status::LowerBound);
        assert!(verify_record(&lower).unwrap());
        assert!(s(spec, k * g.exponent()) >= lower.value, "{spec} k={k}");
    }
}

#[test]
fn plans_survive_json() {
    let g = parse_group("2,2").unwrap();
    let cfg = EngineConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut done = 0;
    for _ in 0..50 {
        let input = GSeq::from_indices(&g, (0..12).map(|_| rng.gen_range(0..4)));
        let plans: Vec<ExtractionPlan> = [
            extract_filtration(&input, 1, 1, 2, None, &cfg).ok(),
            split_subadditive(&input, 2, 2, Some((5, 5)), &cfg).ok(),
        ]
        .into_iter()
        .flatten()
        .collect();
        for plan in plans {
            let text = serde_json::to_string(&plan).unwrap();
            let back: ExtractionPlan = serde_json::from_str(&text).unwrap();
            assert_eq!(back, plan);
            assert!(back.verify(&input));
            done += 1;
        }
    }
    assert!(done >= 50, "{done}");
}
