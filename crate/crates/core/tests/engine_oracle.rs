//! Engine answers against a sub-multiset enumeration written from scratch.

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zerosum::engine::{find_zero_sum, zero_sum_lengths, EngineConfig};
use zerosum::{parse_group, AbelianGroup, GSeq};

/// Every sub-multiset length whose coordinate sums vanish, by odometer.
fn oracle(factors: &[u64], terms: &[(Vec<u64>, u64)]) -> BTreeSet<u64> {
    let mut out = BTreeSet::new();
    let mut pick = vec![0u64; terms.len()];
    loop {
        let mut sum = vec![0u64; factors.len()];
        let mut len = 0;
        for (t, &c) in terms.iter().zip(&pick) {
            len += c;
            for j in 0..factors.len() {
                sum[j] = (sum[j] + c * t.0[j]) % factors[j];
            }
        }
        if sum.iter().all(|&x| x == 0) {
            out.insert(len);
        }
        let mut i = 0;
        loop {
            if i == terms.len() {
                return out;
            }
            if pick[i] < terms[i].1 {
                pick[i] += 1;
                break;
            }
            pick[i] = 0;
            i += 1;
        }
    }
}

fn as_terms(s: &GSeq) -> Vec<(Vec<u64>, u64)> {
    s.iter().map(|(g, c)| (g.coords().to_vec(), c)).collect()
}

const SMALL_GROUPS: [&str; 12] = ["2", "3", "4", "5", "7", "8", "2,2", "2,4", "3,3", "2,2,2", "4,4", "2,2,2,2"];

fn random_seq(rng: &mut ChaCha8Rng, g: &AbelianGroup, len: u64) -> GSeq {
    GSeq::from_indices(g, (0..len).map(|_| rng.gen_range(0..g.order() as usize)))
}

#[test]
fn random_sequences_match_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let cfg = EngineConfig::default();
    for i in 0..1000 {
        let g = parse_group(SMALL_GROUPS[i % SMALL_GROUPS.len()]).unwrap();
        assert!(g.order() <= 16);
        let len = rng.gen_range(0..=12);
        let s = random_seq(&mut rng, &g, len);
        let want = oracle(g.factors(), &as_terms(&s));
        assert_eq!(zero_sum_lengths(&s, &cfg).unwrap(), want, "{s}");

        // witness search over a random length window
        let lo = rng.gen_range(1..=len.max(1));
        let hi = rng.gen_range(lo..=len.max(lo));
        let window: BTreeSet<u64> = (lo..=hi).collect();
        match find_zero_sum(&s, &window, &cfg).unwrap() {
            Some(t) => {
                assert!(t.divides(&s) && t.is_zero_sum() && window.contains(&t.len()), "{t} from {s}");
                // smallest admissible length first
                assert_eq!(Some(t.len()), want.intersection(&window).next().copied());
            }
            None => assert!(want.is_disjoint(&window), "{s} {window:?}"),
        }
    }
}

#[test]
fn klein_group_exhaustive_up_to_six_terms() {
    let g = parse_group("2,2").unwrap();
    let cfg = EngineConfig::default();
    let mut checked = 0;
    for len in 0..=6u64 {
        // multisets of size `len` over 4 elements as nondecreasing index tuples
        let mut idx = vec![0usize; len as usize];
        loop {
            let s = GSeq::from_indices(&g, idx.iter().copied());
            assert_eq!(zero_sum_lengths(&s, &cfg).unwrap(), oracle(g.factors(), &as_terms(&s)), "{s}");
            checked += 1;
            let Some(pos) = (0..idx.len()).rev().find(|&p| idx[p] < 3) else { break };
            let v = idx[pos] + 1;
            for x in &mut idx[pos..] {
                *x = v;
            }
        }
    }
    // C(n+3, 3) summed over n = 0..=6
    assert_eq!(checked, 210);
}

fn seq_strategy() -> impl Strategy<Value = (String, Vec<usize>, Vec<usize>)> {
    prop::sample::select(SMALL_GROUPS.to_vec()).prop_flat_map(|spec| {
        let order = parse_group(spec).unwrap().order() as usize;
        (
            Just(spec.to_string()),
            prop::collection::vec(0..order, 0..8),
            prop::collection::vec(0..order, 0..5),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn lengths_grow_with_the_sequence((spec, a, b) in seq_strategy()) {
        let g = parse_group(&spec).unwrap();
        let cfg = EngineConfig::default();
        let s = GSeq::from_indices(&g, a.iter().copied());
        let bigger = GSeq::from_indices(&g, a.iter().chain(&b).copied());
        let small = zero_sum_lengths(&s, &cfg).unwrap();
        let large = zero_sum_lengths(&bigger, &cfg).unwrap();
        prop_assert!(small.is_subset(&large));
    }

    #[test]
    fn complements_of_zero_sum_sequences((spec, a, _b) in seq_strategy()) {
        let g = parse_group(&spec).unwrap();
        let cfg = EngineConfig::default();
        let mut s = GSeq::from_indices(&g, a.iter().copied());
        // close the sequence up to a zero-sum one
        let fix = g.neg(&s.sigma()).unwrap();
        s.push(fix, 1).unwrap();
        prop_assert!(s.is_zero_sum());
        let lens = zero_sum_lengths(&s, &cfg).unwrap();
        for &l in &lens {
            prop_assert!(lens.contains(&(s.len() - l)));
        }
    }
}
