use radio_topo::generators::{family_sticks, random_tree};
use radio_topo::protocol::general::MainProgram;
use radio_topo::radio::simulate;
use radio_topo::scheme::label_main;
use radio_topo::tree::{placements_valid, Tree};

fn run_and_check(t: &Tree, what: &str) -> u64 {
    let scheme = label_main(t).unwrap();
    let mut progs = MainProgram::for_scheme(&scheme);
    let out = match simulate(t, &mut progs, 1_000_000) {
        Ok(o) => o,
        Err(e) => {
            let v: Vec<_> = progs
                .iter()
                .enumerate()
                .flat_map(|(i, p)| p.violations().iter().map(move |s| format!("{i}: {s}")))
                .take(5)
                .collect();
            panic!("{what}: {e}; violations {v:?}");
        }
    };
    let claims: Vec<(&Tree, usize)> = out.outputs.iter().map(|o| (&*o.tree, o.node)).collect();
    for (v, ok) in placements_valid(t, &claims).into_iter().enumerate() {
        assert!(ok, "{what}: node {v} misplaced");
    }
    out.metrics.completion_round
}

#[test]
fn random_trees_recognized() {
    for delta in [3, 4, 6, 8, 16, 32] {
        for diameter in [4, 5, 6, 8, 10] {
            for seed in 0..3 {
                let t = random_tree(delta, diameter, seed).unwrap();
                run_and_check(&t, &format!("Δ={delta} D={diameter} seed={seed}"));
            }
        }
    }
}

#[test]
fn sticks_recognized() {
    for (delta, diameter) in [(3, 6), (4, 7), (3, 12)] {
        for t in family_sticks(delta, diameter, 1, 2).unwrap() {
            run_and_check(&t, &format!("sticks Δ={delta} D={diameter}"));
        }
    }
}

#[test]
fn large_degree_uses_light_classes() {
    for (delta, diameter) in [(256, 4), (300, 5), (4096, 4), (64, 20), (1100, 6)] {
        for seed in 0..2 {
            let t = random_tree(delta, diameter, seed).unwrap();
            let scheme = label_main(&t).unwrap();
            assert!(scheme.params.m >= 2);
            run_and_check(&t, &format!("Δ={delta} D={diameter} seed={seed}"));
        }
    }
}
