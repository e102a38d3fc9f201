mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stabsynth_core::decoder::{decode, global_relation, simplify_guards, witness_relation};
use stabsynth_core::encoder::{allocate_unknowns, EncoderOptions};
use stabsynth_core::formula::Ground;
use stabsynth_core::problem::SynthesisProblem;
use stabsynth_core::protocol::{parse_protocol, protocol_to_json, GuardedCommand, Protocol};
use stabsynth_core::smt::{Sort, Value};
use stabsynth_core::solver::Witness;
use stabsynth_core::space::StateSpace;

use common::{corpus_problem, corpus_protocol, problem, random_witness, ring_doc};

/// Witness whose relation bits are chosen by `pick(process, local state, write)`.
fn relation_witness(p: &SynthesisProblem, pick: impl Fn(usize, usize, usize) -> bool) -> Witness {
    let t = allocate_unknowns(p, &EncoderOptions::default()).unwrap();
    let mut by_id = vec![None; t.symbols.len()];
    for (i, rows) in t.rel.iter().enumerate() {
        for (l, row) in rows.iter().enumerate() {
            for (w, id) in row.iter().enumerate() {
                if let Some(id) = id {
                    by_id[*id] = Some(pick(i, l, w));
                }
            }
        }
    }
    Witness::from_fn(&t, |id| match (by_id[id], t.symbols[id].sort) {
        (Some(b), _) => Value::Bool(b),
        (None, Sort::Bool) => Value::Bool(false),
        (None, Sort::Int { lo, .. }) => Value::Int(lo),
    })
}

fn guard_text(p: &SynthesisProblem, c: &GuardedCommand) -> String {
    c.guard.render(&p.topology.vars, &p.predicates)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn decoding_preserves_the_relation(
        n in 2usize..5,
        d in 2usize..4,
        sync in any::<bool>(),
        preds in any::<bool>(),
        seed in any::<u64>(),
        density in 0.0f64..1.0,
    ) {
        let timing = if sync { "synchronous" } else { "asynchronous" };
        let extra = format!(r#""psi": "true", "mode": {{"goal": "self_stabilizing", "timing": "{timing}"}}"#);
        let p = problem(&ring_doc(n, d, preds, &extra));
        let table = allocate_unknowns(&p, &EncoderOptions::default()).unwrap();
        let w = random_witness(&table, &mut ChaCha8Rng::seed_from_u64(seed), density);
        let space = StateSpace::new(&p.topology).unwrap();

        let raw = decode(&w, &p).unwrap();
        let expected = witness_relation(&w, &p, &space).unwrap();
        prop_assert_eq!(&global_relation(&raw, &p, &space), &expected);

        let compact = simplify_guards(&raw, &p);
        prop_assert_eq!(&global_relation(&compact, &p, &space), &expected);
        prop_assert!(compact.commands.len() <= raw.commands.len());
        prop_assert_eq!(&compact.predicate_tables, &raw.predicate_tables);
        prop_assert_eq!(&compact.ls_table, &raw.ls_table);
        prop_assert_eq!(&compact.lambda_table, &raw.lambda_table);

        let again = parse_protocol(&protocol_to_json(&compact, &p), &p).unwrap();
        prop_assert_eq!(&global_relation(&again, &p, &space), &expected);
        prop_assert_eq!(&again.predicate_tables, &raw.predicate_tables);
        prop_assert_eq!(&again.ls_table, &raw.ls_table);
    }
}

#[test]
fn increment_compacts_to_modular_expression() {
    let p = corpus_problem("tokenring3");
    let space = StateSpace::new(&p.topology).unwrap();
    // Process 0 moves x0 to x0 + 1 whenever x0 = x2.
    let w = relation_witness(&p, |i, l, w| {
        let s = space.states_with_local(i, l)[0];
        let v = space.valuation_of(s);
        i == 0 && v[0] == v[2] && w == (v[0] + 1) % 3
    });
    let compact = simplify_guards(&decode(&w, &p).unwrap(), &p);
    let json = protocol_to_json(&compact, &p);
    // Guards are cubes over value literals, so x0 = x2 takes one cube per value.
    assert_eq!(compact.commands.len(), 3, "{json}");
    assert!(compact.commands.iter().all(|c| c.assign == compact.commands[0].assign), "{json}");
    assert!(json.contains("(x0 + 1) mod 3"), "{json}");
}

#[test]
fn mis_entry_rule_has_three_literals() {
    let p = corpus_problem("mis_ring_n3_async");
    let space = StateSpace::new(&p.topology).unwrap();
    // Join when no neighbour is in the set, leave when one is.
    let w = relation_witness(&p, |i, l, w| {
        let s = space.states_with_local(i, l)[0];
        let v = space.valuation_of(s);
        let (left, right) = (v[(i + 2) % 3], v[(i + 1) % 3]);
        match v[i] {
            0 => left == 0 && right == 0 && w == 1,
            _ => (left == 1 || right == 1) && w == 0,
        }
    });
    let compact = simplify_guards(&decode(&w, &p).unwrap(), &p);
    let zero = space.index_of(&[0, 0, 0]).unwrap();
    let join: Vec<&GuardedCommand> = compact
        .commands
        .iter()
        .filter(|c| c.process == 0 && c.guard_holds(&space, &p, &compact.predicate_tables, zero))
        .collect();
    assert_eq!(join.len(), 1);
    let text = guard_text(&p, join[0]);
    assert_eq!(text.split(" & ").count(), 3, "{text}");
    assert!(!text.contains('|'), "{text}");
}

#[test]
fn constant_true_guard_renders_as_true() {
    let p = corpus_problem("lme_n3");
    let space = StateSpace::new(&p.topology).unwrap();
    let mut proto = Protocol::empty(&p, &space);
    let owned = p.topology.write_sets[0][0];
    let cmd = GuardedCommand {
        process: 0,
        guard: Ground::Const(true),
        assign: vec![(owned, stabsynth_core::formula::GExpr::Const(1))],
    };
    assert_eq!(guard_text(&p, &cmd), "true");
    proto.commands.push(cmd);
    let json = protocol_to_json(&proto, &p);
    assert!(json.contains(r#""guard": "true""#), "{json}");
    let back = parse_protocol(&json, &p).unwrap();
    assert_eq!(back.commands[0].guard, Ground::Const(true));
}

#[test]
fn corpus_protocols_round_trip() {
    let pairs = [
        ("dijkstra3", "tokenring3"),
        ("leader_line3", "leader_line2_n3"),
        ("lme4", "lme_n4"),
        ("mis_sym3", "mis_ring_n3_async_sym"),
        ("mis_asym4", "mis_ring_n4_async"),
        ("mis_uni_sync3", "mis_uni_n3_sync"),
        ("grundy_sym3", "grundy_ring_n3_async_sym"),
        ("grundy_line4", "grundy_line_n4_async"),
    ];
    for (proto_name, problem_name) in pairs {
        let p = corpus_problem(problem_name);
        let space = StateSpace::new(&p.topology).unwrap();
        let a = corpus_protocol(proto_name, &p);
        let b = parse_protocol(&protocol_to_json(&a, &p), &p).unwrap();
        assert_eq!(global_relation(&a, &p, &space), global_relation(&b, &p, &space), "{proto_name}");
        assert_eq!(a.predicate_tables, b.predicate_tables, "{proto_name}");
        assert_eq!(a.ls_table, b.ls_table, "{proto_name}");
        let c = simplify_guards(&a, &p);
        assert_eq!(global_relation(&a, &p, &space), global_relation(&c, &p, &space), "{proto_name}");
    }
}

#[test]
fn dijkstra_table_renders_increment() {
    let p = corpus_problem("tokenring3");
    let proto = corpus_protocol("dijkstra3", &p);
    assert!(protocol_to_json(&proto, &p).contains("(x0 + 1) mod 3"));
}
