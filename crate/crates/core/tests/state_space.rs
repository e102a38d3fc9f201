use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use stabsynth_core::problem::{Topology, VarDecl};
use stabsynth_core::space::{state_count, StateSpace, TransitionGroup};

fn topology(sizes: &[usize], reads: Vec<Vec<usize>>, writes: Vec<Vec<usize>>) -> Topology {
    Topology {
        vars: sizes.iter().enumerate().map(|(k, &d)| VarDecl::with_size(format!("v{k}"), d)).collect(),
        process_count: reads.len(),
        read_sets: reads,
        write_sets: writes,
    }
}

fn example27() -> Topology {
    topology(&[3, 3, 3], vec![vec![0, 1], vec![0, 1, 2], vec![1, 2]], vec![vec![0], vec![1], vec![2]])
}

/// Mixed-radix index with variable 0 least significant, computed directly.
fn oracle_index(sizes: &[usize], vals: &[usize]) -> usize {
    let mut idx = 0;
    let mut place = 1;
    for (v, &d) in vals.iter().zip(sizes) {
        idx += v * place;
        place *= d;
    }
    idx
}

fn all_valuations(sizes: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &d in sizes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..d).map(move |x| {
                    let mut v = prefix.clone();
                    v.push(x);
                    v
                })
            })
            .collect();
    }
    out
}

#[test]
fn state_counts() {
    assert_eq!(state_count(&example27()).unwrap(), 27);
    assert_eq!(state_count(&topology(&[1], vec![vec![0]], vec![vec![0]])).unwrap(), 1);
    let four = topology(&[2; 4], vec![vec![0, 1, 2, 3]], vec![vec![0, 1, 2, 3]]);
    assert_eq!(state_count(&four).unwrap(), 16);
}

#[test]
fn zero_valuation_is_index_zero() {
    let space = StateSpace::new(&example27()).unwrap();
    assert_eq!(space.index_of(&[0, 0, 0]).unwrap(), 0);
}

#[test]
fn example_projection_and_groups() {
    let space = StateSpace::new(&example27()).unwrap();
    let s = |v: [usize; 3]| space.index_of(&v).unwrap();
    assert_eq!(space.project_local(s([1, 1, 0]), 0), space.project_local(s([1, 1, 2]), 0));
    assert_ne!(space.project_local(s([1, 1, 0]), 0), space.project_local(s([0, 1, 0]), 0));
    let t1 = (s([1, 1, 0]), s([2, 1, 0]));
    let t2 = (s([1, 1, 2]), s([2, 1, 2]));
    let t3 = (s([0, 1, 0]), s([2, 1, 0]));
    assert!(space.same_group(t1, t2, 0).unwrap());
    assert!(!space.same_group(t1, t3, 0).unwrap());
    // Process 0 cannot change c1.
    assert!(space.same_group((s([0, 0, 0]), s([0, 1, 0])), t1, 0).is_err());
    // Full-read process: projection is a bijection.
    let locals: BTreeSet<usize> = (0..27).map(|st| space.project_local(st, 1)).collect();
    assert_eq!(locals.len(), 27);
}

#[test]
fn state_distinction() {
    assert!(StateSpace::new(&example27()).unwrap().check_state_distinction());
    let one = topology(&[1], vec![vec![0]], vec![vec![0]]);
    assert!(StateSpace::new(&one).unwrap().check_state_distinction());
}

#[test]
fn example_round_trip_exhaustive() {
    let space = StateSpace::new(&example27()).unwrap();
    for v in all_valuations(&[3, 3, 3]) {
        assert_eq!(space.valuation_of(space.index_of(&v).unwrap()), v);
    }
}

fn arb_topology() -> impl Strategy<Value = Topology> {
    (1usize..6)
        .prop_flat_map(|k| (prop::collection::vec(1usize..5, k), 1..=k))
        .prop_filter("at most 2^12 states", |(sizes, _)| sizes.iter().product::<usize>() <= 1 << 12)
        .prop_flat_map(|(sizes, n)| {
            let k = sizes.len();
            (Just(sizes), Just(n), prop::collection::vec(0..=n, k), prop::collection::vec(any::<u8>(), n))
        })
        .prop_map(|(sizes, n, owner, read_masks)| {
            let mut writes = vec![Vec::new(); n];
            for v in 0..sizes.len() {
                // The first n variables are always owned so no process is idle.
                let o = if v < n { v } else { owner[v] };
                if o < n {
                    writes[o].push(v);
                }
            }
            let reads: Vec<Vec<usize>> = (0..n)
                .map(|i| {
                    (0..sizes.len())
                        .filter(|&v| writes[i].contains(&v) || read_masks[i] & (1 << (v % 8)) != 0)
                        .collect()
                })
                .collect();
            topology(&sizes, reads, writes)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn indexing_is_a_bijection(topo in arb_topology()) {
        let sizes: Vec<usize> = topo.vars.iter().map(VarDecl::domain_size).collect();
        let space = StateSpace::new(&topo).unwrap();
        let count: usize = sizes.iter().product();
        prop_assert_eq!(space.state_count(), count);
        let mut seen = vec![false; count];
        for v in all_valuations(&sizes) {
            let s = space.index_of(&v).unwrap();
            prop_assert_eq!(s, oracle_index(&sizes, &v));
            prop_assert!(!seen[s]);
            seen[s] = true;
            prop_assert_eq!(space.valuation_of(s), v);
        }
        prop_assert!(seen.iter().all(|&b| b));
    }

    #[test]
    fn projection_is_read_set_mixed_radix(topo in arb_topology()) {
        let sizes: Vec<usize> = topo.vars.iter().map(VarDecl::domain_size).collect();
        let space = StateSpace::new(&topo).unwrap();
        for i in 0..topo.process_count {
            let read = &topo.read_sets[i];
            let read_sizes: Vec<usize> = read.iter().map(|&v| sizes[v]).collect();
            prop_assert_eq!(space.local_size(i), read_sizes.iter().product::<usize>());
            for s in 0..space.state_count() {
                let vals = space.valuation_of(s);
                let local: Vec<usize> = read.iter().map(|&v| vals[v]).collect();
                prop_assert_eq!(space.project_local(s, i), oracle_index(&read_sizes, &local));
            }
        }
    }

    #[test]
    fn groups_partition_process_transitions(topo in arb_topology()) {
        let space = StateSpace::new(&topo).unwrap();
        let count = space.state_count();
        for i in 0..topo.process_count {
            let read = &topo.read_sets[i];
            let write = &topo.write_sets[i];
            // Every transition process i can take, keyed by what it sees and writes.
            let mut classes: BTreeMap<(Vec<usize>, Vec<usize>), BTreeSet<(usize, usize)>> = BTreeMap::new();
            for s in 0..count {
                for w in 0..space.write_count(i) {
                    let t = space.apply_write(s, i, w);
                    let (vs, vt) = (space.valuation_of(s), space.valuation_of(t));
                    for v in 0..topo.vars.len() {
                        if !write.contains(&v) {
                            prop_assert_eq!(vs[v], vt[v]);
                        }
                    }
                    let key = (
                        read.iter().map(|&v| vs[v]).collect::<Vec<_>>(),
                        write.iter().map(|&v| vt[v]).collect::<Vec<_>>(),
                    );
                    classes.entry(key).or_default().insert((s, t));
                }
            }
            prop_assert_eq!(classes.len(), space.local_size(i) * space.write_count(i));

            let mut covered = BTreeSet::new();
            let mut self_loop_groups = 0;
            for l in 0..space.local_size(i) {
                for w in 0..space.write_count(i) {
                    let g = TransitionGroup { process: i, source_local: l, target_write: w };
                    let members: BTreeSet<(usize, usize)> = g.expand(&space).into_iter().collect();
                    prop_assert_eq!(members.len() * space.local_size(i), count);
                    let first = *members.iter().next().unwrap();
                    let vs = space.valuation_of(first.0);
                    let vt = space.valuation_of(first.1);
                    let key = (
                        read.iter().map(|&v| vs[v]).collect::<Vec<_>>(),
                        write.iter().map(|&v| vt[v]).collect::<Vec<_>>(),
                    );
                    prop_assert_eq!(&classes[&key], &members);
                    if g.is_self_loop(&space) {
                        self_loop_groups += 1;
                        prop_assert!(members.iter().all(|&(s, t)| s == t));
                    }
                    prop_assert!(covered.is_disjoint(&members));
                    covered.extend(members);
                }
            }
            prop_assert_eq!(self_loop_groups, space.local_size(i));
            prop_assert_eq!(covered.len(), count * space.write_count(i));

            // same_group agrees with the key on a slice of transition pairs.
            let sample: Vec<(usize, usize)> = covered.iter().copied().step_by(1 + covered.len() / 48).collect();
            let key_of = |(s, t): (usize, usize)| {
                let (vs, vt) = (space.valuation_of(s), space.valuation_of(t));
                (
                    read.iter().map(|&v| vs[v]).collect::<Vec<_>>(),
                    write.iter().map(|&v| vt[v]).collect::<Vec<_>>(),
                )
            };
            for &a in &sample {
                for &b in &sample {
                    prop_assert_eq!(space.same_group(a, b, i).unwrap(), key_of(a) == key_of(b));
                }
            }
        }
    }
}
