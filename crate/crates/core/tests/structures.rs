//! Group and sequence laws.

use proptest::prelude::*;
use zerosum::group::gcd;
use zerosum::{parse_group, AbelianGroup, GSeq};

/// All factor lists with entries ≥ 2, nondecreasing, product ≤ `max`.
fn groups_up_to(max: u64) -> Vec<AbelianGroup> {
    fn rec(start: u64, left: u64, cur: &mut Vec<u64>, out: &mut Vec<AbelianGroup>) {
        if !cur.is_empty() {
            out.push(AbelianGroup::new(cur.clone()).unwrap());
        }
        for f in start..=left {
            cur.push(f);
            rec(f, left / f, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(2, max, &mut Vec::new(), &mut out);
    out
}

#[test]
fn quotient_and_subgroup_sizes_and_maps() {
    let groups = groups_up_to(64);
    assert!(groups.len() > 100);
    let mut splits = 0;
    for g in &groups {
        let e = g.exponent();
        for q in (2..=e).filter(|q| e % q == 0) {
            let split = g.quotient_and_subgroup(q).unwrap();
            let want_quot: u64 = g.factors().iter().map(|&n| gcd(n, q)).product();
            assert_eq!(split.quotient.order(), want_quot, "{g} q={q}");
            assert_eq!(split.quotient.order() * split.subgroup.order(), g.order(), "{g} q={q}");
            let elems: Vec<_> = g.elements().collect();
            for a in elems.iter().step_by(3) {
                // q·a lies in qG and q annihilates the quotient
                let qa = g.scale(a, q as i64).unwrap();
                assert!(split.to_subgroup(&qa).unwrap().is_some());
                assert!(split.project(&qa).unwrap().is_zero());
                for b in elems.iter().step_by(5) {
                    let lhs = split.project(&g.add(a, b).unwrap()).unwrap();
                    let rhs = split
                        .quotient
                        .add(&split.project(a).unwrap(), &split.project(b).unwrap())
                        .unwrap();
                    assert_eq!(lhs, rhs, "{g} q={q}");
                }
            }
            for y in split.subgroup.elements() {
                let x = split.embed(&y).unwrap();
                assert!(split.project(&x).unwrap().is_zero());
                assert_eq!(split.to_subgroup(&x).unwrap(), Some(y));
            }
            splits += 1;
        }
    }
    assert!(splits > 100);
}

#[test]
fn olson_and_profile_on_small_pgroups() {
    for g in groups_up_to(64) {
        match g.pgroup_profile() {
            Some(prof) => {
                let d = 1 + g.factors().iter().map(|n| n - 1).sum::<u64>();
                assert_eq!(prof.davenport, d);
                assert_eq!(prof.dim_d, d.div_ceil(prof.q));
                assert_eq!(prof.q, g.exponent());
            }
            None => {
                let primes: std::collections::BTreeSet<u64> = g
                    .factors()
                    .iter()
                    .flat_map(|&n| zerosum::group::factorize(n).into_iter().map(|(p, _)| p))
                    .collect();
                assert!(primes.len() > 1, "{g}");
            }
        }
    }
}

fn seqs() -> impl Strategy<Value = (String, Vec<usize>, Vec<usize>)> {
    prop::sample::select(vec!["3", "2,4", "3,3", "2,2,2", "9,3"]).prop_flat_map(|spec| {
        let order = parse_group(spec).unwrap().order() as usize;
        (
            Just(spec.to_string()),
            prop::collection::vec(0..order, 0..10),
            prop::collection::vec(0..order, 0..10),
        )
    })
}

proptest! {
    #[test]
    fn sums_and_multiset_operations((spec, a, b) in seqs()) {
        let g = parse_group(&spec).unwrap();
        let s = GSeq::from_indices(&g, a);
        let t = GSeq::from_indices(&g, b);
        let st = s.concat(&t).unwrap();
        prop_assert_eq!(st.sigma(), g.add(&s.sigma(), &t.sigma()).unwrap());
        prop_assert_eq!(st.len(), s.len() + t.len());
        prop_assert_eq!(st.remove(&t).unwrap(), s.clone());
        prop_assert!(s.divides(&st) && t.divides(&st));
        prop_assert_eq!(GSeq::from_json(&st.to_json(), Some(&g)).unwrap(), st.clone());
        prop_assert_eq!(GSeq::from_file(&st.to_file(), None).unwrap(), st);
    }
}

#[test]
fn sequence_file_rejects_bad_input() {
    let g = parse_group("3,3").unwrap();
    for bad in [
        r#"{"group":[3,3],"elements":[{"coords":[3,0],"mult":1}]}"#,
        r#"{"group":[3,3],"elements":[{"coords":[1],"mult":1}]}"#,
        r#"{"group":[3,3],"elements":[{"coords":[1,1],"mult":-1}]}"#,
        r#"{"group":[3,3],"elements":[{"coords":[1,1]}]}"#,
        r#"{"group":[3,1],"elements":[]}"#,
    ] {
        assert!(GSeq::from_json(bad, None).is_err(), "{bad}");
    }
    let other = r#"{"group":[9],"elements":[{"coords":[1],"mult":2}]}"#;
    assert!(GSeq::from_json(other, None).is_ok());
    assert!(GSeq::from_json(other, Some(&g)).is_err());
}
