//! Invariants as property tests.

mod common;

use std::collections::BTreeSet;
use std::sync::Arc;

use proptest::prelude::*;
use radio_topo::codec::{decode, encode, parse_label_file, write_label_file, BitString, LabelKind, StructuredLabel};
use radio_topo::generators::random_tree;
use radio_topo::harness::{label_tree, parse_outputs, run_labels, write_outputs, Protocol};
use radio_topo::protocol::line::label_line;
use radio_topo::protocol::small::{d3_tree, label_d3_in_class, label_star};
use radio_topo::radio::{simulate, Action, NodeOutput, NodeProgram, Round, Transcript};
use radio_topo::scheme::{chunk, label_main, unchunk};
use radio_topo::tree::{classify_heavy, core_subtree, placement_valid, root_at, Tree};

fn bits() -> impl Strategy<Value = BitString> {
    prop::collection::vec(any::<bool>(), 0..24).prop_map(BitString::from_bits)
}

fn label() -> impl Strategy<Value = StructuredLabel> {
    prop::sample::select(LabelKind::ALL.to_vec()).prop_flat_map(|kind| {
        prop::collection::vec(bits(), kind.field_count()).prop_map(move |fields| StructuredLabel::new(kind, fields))
    })
}

fn tree(max_n: usize) -> impl Strategy<Value = Tree> {
    (1..=max_n, any::<u64>()).prop_map(|(n, seed)| common::random_attachment_tree(n, seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn codec_round_trips(l in label()) {
        let enc = encode(&l);
        let expected = 4 + l.fields.iter().map(|f| 2 * f.len() + 2).sum::<usize>();
        prop_assert_eq!(enc.len(), expected);
        prop_assert_eq!(decode(&enc).unwrap(), l);
    }
}

proptest! {
    #[test]
    fn encode_is_injective(a in label(), b in label()) {
        prop_assert_eq!(a == b, encode(&a) == encode(&b));
    }

    #[test]
    fn truncated_codes_are_rejected(l in label(), cut in 1usize..8) {
        let enc = encode(&l);
        let short = enc.truncated(enc.len().saturating_sub(cut));
        prop_assert!(decode(&short).is_err());
    }

    #[test]
    fn label_file_round_trips(ls in prop::collection::vec(label(), 1..20)) {
        prop_assert_eq!(parse_label_file(&write_label_file(&ls)).unwrap(), ls);
    }

    #[test]
    fn chunks_round_trip(s in prop::collection::vec(any::<bool>(), 1..64), c in prop::sample::select(vec![2usize, 4])) {
        let s = BitString::from_bits(s);
        let parts = chunk(&s, c).unwrap();
        prop_assert!(parts.iter().all(|(_, p)| p.len() <= c && !p.is_empty()));
        prop_assert_eq!(unchunk(parts.iter().rev().map(|(i, p)| (*i, p))).unwrap(), s);
    }

    #[test]
    fn tree_text_round_trips(t in tree(40)) {
        prop_assert_eq!(t.to_string().parse::<Tree>().unwrap(), t);
    }

    #[test]
    fn rooting_invariants(t in tree(40), r in any::<prop::sample::Index>()) {
        let root = r.index(t.n());
        let rt = root_at(&t, root).unwrap();
        prop_assert_eq!(rt.parent(root), None);
        prop_assert_eq!(rt.level(root), 0);
        let mut h = 0;
        for v in 0..t.n() {
            h = h.max(rt.level(v));
            prop_assert_eq!(rt.subtree_size(v), 1 + rt.children(v).iter().map(|&c| rt.subtree_size(c)).sum::<usize>());
            if let Some(p) = rt.parent(v) {
                prop_assert_eq!(rt.level(v), rt.level(p) + 1);
                prop_assert!(t.neighbors(v).contains(&p));
            }
            prop_assert!(rt.children(v).windows(2).all(|w| w[0] < w[1]));
        }
        prop_assert_eq!(rt.height(), h);
    }

    #[test]
    fn heavy_set_is_upward_closed(t in tree(60), delta in 3u64..5000) {
        let rt = root_at(&t, 0).unwrap();
        let heavy = classify_heavy(&rt, delta);
        // with Δ the true maximum degree the root always qualifies
        prop_assert!(classify_heavy(&rt, t.max_degree().max(3) as u64)[0]);
        for v in 0..t.n() {
            if let (true, Some(p)) = (heavy[v], rt.parent(v)) {
                prop_assert!(heavy[p]);
            }
        }
    }

    #[test]
    fn core_subtree_is_a_connected_bfs_prefix(t in tree(40), v in any::<prop::sample::Index>(), m in 1usize..8) {
        let rt = root_at(&t, 0).unwrap();
        let v = v.index(t.n());
        match core_subtree(&rt, v, m) {
            Ok(core) => {
                prop_assert_eq!(core.len(), m);
                prop_assert_eq!(&core[..], &rt.subtree_bfs(v)[..m]);
                let set: BTreeSet<usize> = core.iter().copied().collect();
                // every member but v has its parent inside
                prop_assert!(core[1..].iter().all(|&u| set.contains(&rt.parent(u).unwrap())));
            }
            Err(_) => prop_assert!(rt.subtree_size(v) < m),
        }
    }

    #[test]
    fn placement_is_reflexive_and_symmetric(t in tree(30), a in any::<prop::sample::Index>(), b in any::<prop::sample::Index>()) {
        let (a, b) = (a.index(t.n()), b.index(t.n()));
        prop_assert!(placement_valid(&t, a, &t, a));
        prop_assert_eq!(placement_valid(&t, a, &t, b), placement_valid(&t, b, &t, a));
    }
}

/// Transmits in a seeded random subset of rounds and outputs at `stop`.
struct Chatter {
    me: usize,
    plan: Vec<bool>,
    heard: Vec<(Round, usize)>,
    out: Option<NodeOutput>,
    shared: Arc<Tree>,
}

impl NodeProgram for Chatter {
    type Msg = usize;
    fn decide(&mut self, round: Round) -> Action<usize> {
        if round as usize >= self.plan.len() {
            self.out = Some(NodeOutput { tree: self.shared.clone(), node: self.me });
        }
        if self.plan.get(round as usize - 1).copied().unwrap_or(false) {
            Action::Transmit(self.me)
        } else {
            Action::Listen
        }
    }
    fn receive(&mut self, round: Round, msg: Option<&usize>) {
        if let Some(&m) = msg {
            self.heard.push((round, m));
        }
    }
    fn output(&self) -> Option<&NodeOutput> {
        self.out.as_ref()
    }
}

fn chatters(t: &Tree, rounds: usize, seed: u64) -> Vec<Chatter> {
    use rand::Rng;
    let mut r = common::rng(seed);
    let shared = Arc::new(t.clone());
    (0..t.n())
        .map(|me| Chatter {
            me,
            plan: (0..rounds).map(|_| r.random_bool(0.3)).collect(),
            heard: Vec::new(),
            out: None,
            shared: shared.clone(),
        })
        .collect()
}

proptest! {
    #[test]
    fn engine_obeys_the_collision_rule(t in tree(25), rounds in 1usize..12, seed in any::<u64>()) {
        let mut progs = chatters(&t, rounds, seed);
        let out = simulate(&t, &mut progs, rounds as Round + 1).unwrap();
        let tr = &out.transcript;
        for (i, rec) in tr.rounds.iter().enumerate() {
            let tx: BTreeSet<usize> = rec.transmitters.iter().copied().collect();
            let expected: Vec<(usize, usize)> = (0..t.n())
                .filter(|v| !tx.contains(v))
                .filter_map(|v| {
                    let heard: Vec<usize> = t.neighbors(v).iter().copied().filter(|u| tx.contains(u)).collect();
                    (heard.len() == 1).then(|| (v, heard[0]))
                })
                .collect();
            prop_assert_eq!(&rec.deliveries, &expected, "round {}", i + 1);
            let planned: Vec<usize> = (0..t.n()).filter(|&v| progs[v].plan.get(i) == Some(&true)).collect();
            prop_assert_eq!(&rec.transmitters, &planned);
        }
        // programs saw exactly the transcript's deliveries
        for (v, p) in progs.iter().enumerate() {
            let from_tr: Vec<(Round, usize)> = tr.rounds.iter().enumerate()
                .flat_map(|(i, rec)| rec.deliveries.iter().filter(move |d| d.0 == v).map(move |d| (i as Round + 1, d.1)))
                .collect();
            prop_assert_eq!(&p.heard, &from_tr);
        }
        prop_assert_eq!(&Transcript::parse(&tr.to_string()).unwrap(), tr);
        let mut again = chatters(&t, rounds, seed);
        prop_assert_eq!(simulate(&t, &mut again, rounds as Round + 1).unwrap().transcript.to_string(), tr.to_string());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn generated_trees_hit_their_parameters(delta in 3usize..40, diameter in 2usize..24, seed in any::<u64>()) {
        match random_tree(delta, diameter, seed) {
            Ok(t) => {
                prop_assert_eq!(t.max_degree(), delta);
                prop_assert_eq!(t.diameter(), diameter);
                prop_assert_eq!(random_tree(delta, diameter, seed).unwrap(), t);
            }
            Err(_) => prop_assert!(diameter < 2 || delta < 2),
        }
    }

    #[test]
    fn main_labels_are_consistent(delta in 3usize..300, diameter in 4usize..12, seed in any::<u64>()) {
        let t = random_tree(delta, diameter, seed).unwrap();
        let s = label_main(&t).unwrap();
        let rt = &s.rooted;
        prop_assert_eq!(s.labels.iter().filter(|l| l.marker(1)).count(), 1);
        for v in 0..t.n() {
            if rt.level(v) == rt.height() {
                prop_assert!(rt.is_leaf(v));
            }
            let tv: Vec<u64> = rt.children(v).iter().filter(|&&c| s.truth.heavy[c]).filter_map(|&c| s.truth.t[c]).collect();
            let distinct: BTreeSet<u64> = tv.iter().copied().collect();
            prop_assert_eq!(distinct.len(), tv.len(), "repeated t among children of {}", v);
        }
        let core = s.labels.iter().filter(|l| l.marker(2)).filter_map(|l| l.l0.as_ref()).map(|(i, c)| (*i, c));
        prop_assert_eq!(unchunk(core).unwrap(), BitString::binary(delta as u64));
    }

    #[test]
    fn harness_outputs_round_trip(delta in 3usize..12, diameter in 2usize..9, seed in any::<u64>()) {
        let t = random_tree(delta, diameter, seed).unwrap();
        let labels = label_tree(&t, radio_topo::harness::dispatch(&t), None).unwrap().structured();
        let run = run_labels(&t, &labels, None).unwrap();
        prop_assert!(run.report.pass(), "{:?}", run.report);
        let parsed = parse_outputs(&write_outputs(&run.outcome.outputs), t.n()).unwrap();
        let valid = radio_topo::harness::check_run(&t, &parsed).unwrap();
        prop_assert!(valid.into_iter().all(|b| b));
    }

    #[test]
    fn d3_decodes_true_counts(y1 in 1usize..60, y2 in 1usize..60) {
        let t = d3_tree(y1, y2);
        let class = (y1.max(y2) as u64 + 1).max(3);
        let s = label_d3_in_class(&t, class).unwrap();
        // one last-chunk carrier per side
        let lasts = s.labels.iter().filter(|l| matches!(l, radio_topo::protocol::small::D3Label::Leaf { last: true, .. })).count();
        prop_assert_eq!(lasts, 2);
        let run = run_labels(&t, &s.labels.iter().map(|l| l.to_structured()).collect::<Vec<_>>(), None).unwrap();
        prop_assert!(run.report.pass(), "{:?}", run.report);
        prop_assert!(run.report.completion_round <= s.p.max(s.q) as Round + 3);
    }

    #[test]
    fn star_labels_run_clean(delta_log in 2u32..12, frac in 0.0f64..1.0) {
        let delta = 1u64 << delta_log;
        let k = 1 + ((delta - 1) as f64 * frac) as usize;
        let t = Tree::star(k);
        let labels: Vec<StructuredLabel> = label_star(delta, k).unwrap().iter().map(|l| l.to_structured()).collect();
        let run = run_labels(&t, &labels, None).unwrap();
        prop_assert_eq!(run.report.protocol, Protocol::Star);
        prop_assert!(run.report.pass(), "{:?}", run.report);
    }

    #[test]
    fn line_labels_stay_short(k in 0usize..(1 << 20)) {
        let bits = label_line(k).iter().map(|l| encode(&l.to_structured()).len()).max().unwrap();
        prop_assert!(bits <= 24, "k={} needs {} bits", k, bits);
    }
}
