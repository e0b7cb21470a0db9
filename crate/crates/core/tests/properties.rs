use proptest::prelude::*;

use dtlab::harness::gen_random_tree;
use dtlab::influence::{exact_correlation, exact_influence};
use dtlab::learners::{prune_to_size, ExactReference};
use dtlab::tree::{parse_tree_file, tree_file_string};
use dtlab::{DecisionTree, Restriction, TruthTable};

fn tree_and_n() -> impl Strategy<Value = (DecisionTree, usize)> {
    (1usize..=10, 0u64..u64::MAX, 1usize..=24).prop_map(|(n, seed, s)| {
        let s = s.min(1 << n);
        (gen_random_tree(s, n, seed).unwrap(), n)
    })
}

fn table(n: usize) -> impl Strategy<Value = TruthTable> {
    proptest::collection::vec(any::<bool>(), 1 << n)
        .prop_map(move |bits| TruthTable::from_fn(n, |x| bits[x]).unwrap())
}

fn table_any() -> impl Strategy<Value = TruthTable> {
    (0usize..=8).prop_flat_map(table)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn text_round_trip((t, n) in tree_and_n()) {
        let text = t.to_string();
        prop_assert_eq!(text.parse::<DecisionTree>().unwrap(), t.clone());
        let (hn, back) = parse_tree_file(&tree_file_string(n, &t)).unwrap();
        prop_assert_eq!(hn, Some(n));
        prop_assert_eq!(back, t);
    }
}

proptest! {
    #[test]
    fn table_agrees_with_eval((t, n) in tree_and_n()) {
        let f = t.to_table(n).unwrap();
        for x in 0..1usize << n {
            prop_assert_eq!(f.get(x), t.eval_checked(n, x as u128).unwrap());
        }
    }

    #[test]
    fn generated_trees_validate((t, n) in tree_and_n()) {
        prop_assert!(t.validate(n).is_ok());
        prop_assert!(t.depth() <= n);
        prop_assert!(t.support().iter().all(|&v| v < n));
    }

    #[test]
    fn repeated_variable_is_rejected((t, n) in tree_and_n(), side in any::<bool>()) {
        prop_assume!(!t.is_leaf());
        let DecisionTree::Node { var, .. } = &t else { unreachable!() };
        let bad = if side {
            DecisionTree::node(*var, t.clone(), DecisionTree::Leaf(false))
        } else {
            DecisionTree::node(*var, DecisionTree::Leaf(true), t.clone())
        };
        prop_assert!(bad.validate(n).is_err());
    }

    #[test]
    fn distance_is_a_metric(f in table(5), g in table(5), h in table(5)) {
        let d = |a: &TruthTable, b: &TruthTable| a.distance(b).unwrap();
        prop_assert_eq!(d(&f, &f), 0.0);
        prop_assert_eq!(d(&f, &g), d(&g, &f));
        prop_assert!(d(&f, &h) <= d(&f, &g) + d(&g, &h) + 1e-12);
        prop_assert_eq!(d(&f, &f.complement()), 1.0);
    }

    #[test]
    fn file_form_round_trip(f in table_any()) {
        prop_assert_eq!(TruthTable::parse_file(&f.to_file_string()).unwrap(), f.clone());
        prop_assert_eq!(TruthTable::from_hex(f.n(), &f.to_hex()).unwrap(), f);
    }

    #[test]
    fn restriction_matches_pointwise_definition(
        f in table(6),
        pairs in proptest::collection::btree_map(0usize..6, any::<bool>(), 0..=6),
    ) {
        let pi = Restriction::new(pairs.clone()).unwrap();
        let g = f.restrict(&pi).unwrap();
        let free = pi.free_vars(6);
        prop_assert_eq!(g.n(), free.len());
        for y in 0..g.len() {
            let mut x = 0usize;
            for (j, &v) in free.iter().enumerate() {
                x |= (y >> j & 1) << v;
            }
            for (&v, &b) in &pairs {
                x |= (b as usize) << v;
            }
            prop_assert_eq!(g.get(y), f.get(x));
        }
    }

    #[test]
    fn restrictions_compose(
        f in table(6),
        first in proptest::collection::btree_map(0usize..6, any::<bool>(), 0..=3),
        second in proptest::collection::btree_map(0usize..6, any::<bool>(), 0..=3),
    ) {
        let second: Vec<_> = second.into_iter().filter(|(v, _)| !first.contains_key(v)).collect();
        let a = Restriction::new(first.clone()).unwrap();
        let b = Restriction::new(second.clone()).unwrap();
        let both = a.union(&b).unwrap();
        // Restricting twice: the second restriction is renamed into the
        // free coordinates left by the first.
        let free = a.free_vars(6);
        let renamed = Restriction::new(
            second.iter().map(|&(v, bit)| (free.binary_search(&v).unwrap(), bit)),
        ).unwrap();
        let twice = f.restrict(&a).unwrap().restrict(&renamed).unwrap();
        prop_assert_eq!(twice, f.restrict(&both).unwrap());
    }

    #[test]
    fn poincare_inequality(f in table_any()) {
        let p = f.bias();
        let variance = 4.0 * p * (1.0 - p);
        let total: f64 = exact_influence(&f).scores.iter().sum();
        prop_assert!(variance <= total + 1e-12);
    }

    #[test]
    fn influence_follows_relabelling(f in table(5), perm in Just((0..5usize).collect::<Vec<_>>()).prop_shuffle()) {
        // g(x) = f(y) with y_{perm[i]} = x_i, so x_i plays the role of y_{perm[i]}.
        let g = TruthTable::from_fn(5, |x| {
            let y = (0..5).fold(0, |y, i| y | (x >> i & 1) << perm[i]);
            f.get(y)
        }).unwrap();
        let (fi, gi) = (exact_influence(&f).scores, exact_influence(&g).scores);
        for i in 0..5 {
            prop_assert_eq!(gi[i], fi[perm[i]]);
        }
    }

    #[test]
    fn monotone_correlation_equals_influence(f in table(5)) {
        let m = f.upward_closure();
        prop_assert!(m.is_monotone());
        prop_assert_eq!(exact_correlation(&m), exact_influence(&m).scores);
    }

    #[test]
    fn upward_closure_is_least_monotone_majorant(f in table(4)) {
        let m = f.upward_closure();
        for x in 0..16 {
            prop_assert!(!f.get(x) || m.get(x));
            let covered = (0..16).any(|y| f.get(y) && y & x == y);
            prop_assert_eq!(m.get(x), covered);
        }
    }

    #[test]
    fn pruning_is_monotone_in_budget((t, n) in tree_and_n(), f_seed in any::<u64>()) {
        let f = TruthTable::from_fn(n, |x| (x as u64 ^ f_seed).count_ones().is_multiple_of(3)).unwrap();
        let mut last = f64::INFINITY;
        for s in 1..=t.size() + 1 {
            let p = prune_to_size(&t, &mut ExactReference(&f), s).unwrap();
            prop_assert!(p.tree.size() <= s);
            prop_assert!(p.error <= last + 1e-12);
            prop_assert!((p.tree.to_table(n).unwrap().distance(&f).unwrap() - p.error).abs() < 1e-12);
            last = p.error;
        }
    }
}
