mod common;

use common::{doubled, oracle_dc, random_network, rng};
use fjsp_stnu::dc::{check_dc, dispatchable_form};
use fjsp_stnu::instance::Tu;
use fjsp_stnu::stnu::{NodeKind, Stnu};

const HORIZON: Tu = 10;
const MAX_BOUND: Tu = 4;

fn game_horizon(g: &Stnu) -> Tu {
    HORIZON + g.contingents.iter().map(|c| c.upper).sum::<Tu>()
}

#[test]
fn checker_matches_game_on_small_networks() {
    let mut r = rng(7);
    let (mut yes, mut no) = (0, 0);
    let mut mismatches = Vec::new();
    for i in 0..400 {
        let g = random_network(&mut r, 3, MAX_BOUND, HORIZON);
        if g.validate().is_err() {
            continue;
        }
        let expected = oracle_dc(&g, game_horizon(&g));
        let got = check_dc(&g).controllable;
        if expected { yes += 1 } else { no += 1 }
        if expected != got {
            mismatches.push((i, expected, g));
        }
    }
    assert!(mismatches.is_empty(), "{} mismatches, first: {:?}", mismatches.len(), mismatches.first());
    assert!(yes > 40 && no > 40, "family too lopsided: {yes} dc, {no} not");
}

#[test]
fn checker_matches_game_on_denser_networks() {
    // more links, chained activations and tighter horizons
    let mut r = rng(99);
    let mut checked = 0;
    for _ in 0..1500 {
        let g = random_network(&mut r, 3, MAX_BOUND, 7);
        if g.validate().is_err() {
            continue;
        }
        checked += 1;
        let expected = oracle_dc(&g, 7 + g.contingents.iter().map(|c| c.upper).sum::<Tu>());
        assert_eq!(check_dc(&g).controllable, expected, "{g:?}");
    }
    assert!(checked > 1000);
}

#[test]
fn integer_grid_suffices() {
    // halving the time step never changes the game's outcome
    let mut r = rng(3);
    for _ in 0..150 {
        let g = random_network(&mut r, 2, 3, 6);
        if g.validate().is_err() {
            continue;
        }
        let h = 6 + g.contingents.iter().map(|c| c.upper).sum::<Tu>();
        assert_eq!(oracle_dc(&g, h), oracle_dc(&doubled(&g), 2 * h), "{g:?}");
    }
}

#[test]
fn witness_realization_defeats_every_strategy() {
    // narrowing the contingent bounds to the witness's adversarial choice
    // keeps the network uncontrollable
    let mut r = rng(11);
    let mut seen = 0;
    for _ in 0..600 {
        let g = random_network(&mut r, 3, MAX_BOUND, HORIZON);
        if g.validate().is_err() {
            continue;
        }
        let v = check_dc(&g);
        if v.controllable {
            assert!(v.witness.is_none());
            continue;
        }
        seen += 1;
        let mut narrowed = g.clone();
        for (c, (lo, hi)) in narrowed.contingents.iter_mut().zip(v.adversarial_bounds(&g)) {
            c.lower = lo;
            c.upper = hi;
        }
        assert!(!oracle_dc(&narrowed, game_horizon(&narrowed)), "witness {:?} on {g:?}", v.witness);
    }
    assert!(seen > 50);
}

fn chain(bounds: &[(Tu, Tu)], deadline: Tu) -> Stnu {
    let mut g = Stnu::new();
    let o = g.add_node(NodeKind::Origin, None);
    let mut prev = o;
    for (t, &(l, u)) in bounds.iter().enumerate() {
        let s = g.add_node(NodeKind::TaskStart, Some(t));
        let f = g.add_node(NodeKind::TaskFinish, Some(t));
        g.add_requirement(s, o, 0);
        g.add_requirement(s, prev, 0);
        g.add_contingent(s, f, l, u);
        prev = f;
    }
    g.add_requirement(o, prev, deadline);
    g
}

#[test]
fn single_chain_threshold_is_sum_of_upper_bounds() {
    let mut r = rng(5);
    use rand::Rng;
    for _ in 0..200 {
        let len = r.gen_range(1..=5);
        let bounds: Vec<(Tu, Tu)> = (0..len)
            .map(|_| {
                let l = r.gen_range(1..=6);
                (l, l + r.gen_range(0..=4))
            })
            .collect();
        let lower: Tu = bounds.iter().map(|b| b.0).sum();
        let width: Tu = bounds.iter().map(|b| b.1 - b.0).sum();
        // deadline = nominal lower path + slack delta
        for delta in 0..=width + 2 {
            let dc = check_dc(&chain(&bounds, lower + delta)).controllable;
            assert_eq!(dc, delta >= width, "{bounds:?} delta {delta}");
        }
    }
}

#[test]
fn controllability_is_monotone_in_deadline() {
    let mut r = rng(21);
    for _ in 0..300 {
        let g = random_network(&mut r, 3, MAX_BOUND, HORIZON);
        if g.validate().is_err() {
            continue;
        }
        let mut loosened = g.clone();
        for e in &mut loosened.requirements {
            if e.from == 0 {
                e.weight += 1;
            }
        }
        if check_dc(&g).controllable {
            assert!(check_dc(&loosened).controllable, "{g:?}");
        }
    }
}

#[test]
fn windows_of_two_task_chain_match_hand_propagation() {
    // A1 in [2,4], then A2 in [1,3], deadline 12
    let g = chain(&[(2, 4), (1, 3)], 12);
    let df = dispatchable_form(&g).unwrap();
    // s1 in [0, 12-3-4] = [0,5]; s2 follows f1, so with nothing observed
    // it waits until s1 + 4, and must leave 3 before 12
    assert_eq!(df.windows[1], (0, 5));
    assert_eq!(df.d(3, 1), -2);
    assert_eq!(df.windows[3], (4, 9));
    assert_eq!(df.windows[4], (5, 12));
}

#[test]
fn zero_slack_chain_has_point_windows() {
    let bounds = [(2, 4), (1, 3), (3, 3)];
    let g = chain(&bounds, 10);
    let df = dispatchable_form(&g).unwrap();
    for node in &df.stnu.nodes {
        if node.kind == NodeKind::TaskStart {
            let (lo, hi) = df.windows[node.id];
            assert_eq!(lo, hi, "node {}", node.id);
        }
    }
}
