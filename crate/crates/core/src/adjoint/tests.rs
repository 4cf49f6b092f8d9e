use rand::Rng;

use super::*;
use crate::eqsys::kleene;
use crate::lattice::{Grid, Powerset, StateSet, TableLattice};
use crate::random::{random_lattice, random_meet_preserving, random_upto, rng};
use crate::upto::UpToFlags;

fn grid(n: u32) -> Arc<Grid> {
    Arc::new(Grid::new(n).unwrap())
}

/// x ⊓ 1/2 on the grid with n = 10, so νf = 1/2.
fn half() -> MeetPreservingEquation<Grid> {
    MeetPreservingEquation::new(grid(10), |x: &u32| *x, 5).unwrap()
}

#[test]
fn identity_has_identity_adjoint() {
    let lat = Arc::new(Powerset::new(["a", "b", "c"]));
    let table = derive_left_adjoint(&*lat, &|x: &StateSet| x.clone()).unwrap();
    assert_eq!(table.len(), 8);
    assert!(table.iter().all(|(b, l)| b == l));
}

#[test]
fn shifted_grid_adjoint() {
    // f*(x) = min(x + 0.2, 1) on the 11-point grid
    let lat = grid(10);
    let table = derive_left_adjoint(&*lat, &|x: &u32| (x + 2).min(10)).unwrap();
    for b in 0..=10u32 {
        // brute force: the least l with b ≤ f*(l)
        let expected = (0..=10u32).find(|l| b <= (l + 2).min(10)).unwrap();
        assert_eq!(table[&b], expected);
        assert_eq!(table[&b], b.saturating_sub(2));
    }
}

#[test]
fn non_meet_preserving_maps_are_refused() {
    let lat = Arc::new(Powerset::new(["a", "b"]));
    let l = Arc::clone(&lat);
    let err = derive_left_adjoint(&*lat, &move |x: &StateSet| if x.count_ones(..) > 0 { l.top() } else { l.empty_set() })
        .unwrap_err();
    assert!(matches!(err, Error::NotMeetPreserving(ref w) if w.contains("f*({a} ⊓ {b})")), "{err}");
    let err = derive_left_adjoint(&*grid(4), &|x: &u32| *x / 2).unwrap_err();
    assert!(err.to_string().contains("f*(⊤)"));
}

#[test]
fn adjunction_round_trips() {
    let mut r = rng(0xad1);
    for _ in 0..30 {
        let lat = Arc::new(random_lattice(&mut r, 8));
        let eq = random_meet_preserving(&mut r, &lat).unwrap();
        for x in lat.elements().unwrap() {
            assert!(lat.leq(&x, &eq.f_star(&eq.f_lower(&x))));
            assert!(lat.leq(&eq.f_lower(&eq.f_star(&x)), &x));
        }
    }
}

#[test]
fn chain_game_on_the_grid() {
    let eq = half();
    let r = case1_check(&eq, &3).unwrap();
    assert_eq!(r.winner, Player::Exists);
    assert_eq!(r.chain, ["3/10", "3/10"]);
    let r = case1_check(&eq, &6).unwrap();
    assert_eq!(r.winner, Player::Forall);
    assert_eq!(r.chain, ["3/5"]);
    let nu = kleene(&*grid(10), |x| eq.f(x), Sign::Nu, None).unwrap();
    assert_eq!(nu, 5);
}

#[test]
fn chain_game_ends_when_the_adjoint_hits_bottom() {
    // f* = ⊤, so f_* = ⊥
    let eq = MeetPreservingEquation::new(grid(10), |_: &u32| 10, 10).unwrap();
    let r = case1_check(&eq, &5).unwrap();
    assert_eq!(r.winner, Player::Exists);
    assert_eq!(r.chain, ["1/2", "0"]);
    // on a chain any step down is covered by its predecessor
    let eq = MeetPreservingEquation::new(grid(10), |x: &u32| (x + 2).min(10), 10).unwrap();
    assert_eq!(case1_check(&eq, &5).unwrap().chain, ["1/2", "3/10"]);
}

#[test]
fn chain_game_needs_the_full_basis() {
    let lat = Arc::new(Powerset::new(["a", "b"]));
    let eq = MeetPreservingEquation::new(Arc::clone(&lat), |x: &StateSet| x.clone(), lat.top()).unwrap();
    let err = case1_check(&eq, &lat.set_of([0])).unwrap_err();
    assert!(matches!(err, Error::BasisMismatch(_)));
}

#[test]
fn from_function_splits_off_the_top_image() {
    let eq = MeetPreservingEquation::from_function(grid(10), |x: &u32| (*x).min(5)).unwrap();
    assert_eq!(*eq.c(), 5);
    assert_eq!(eq.f_star(&10), 10);
    for x in 0..=10 {
        assert_eq!(eq.f(&x), x.min(5));
    }
    let lat = Arc::new(Powerset::new(["a", "b"]));
    let l = Arc::clone(&lat);
    let err = MeetPreservingEquation::from_function(lat, move |x: &StateSet| {
        if x.count_ones(..) > 0 { l.top() } else { l.empty_set() }
    });
    assert!(err.is_err());
}

#[test]
fn tree_game_agrees_with_chain_game_on_the_grid() {
    let eq = half();
    for b in 0..10 {
        let chain = case1_check(&eq, &(b as u32 + 1)).unwrap().winner;
        let tree = case2_check(&eq, b, None).unwrap();
        assert_eq!(tree.winner, Some(chain));
        assert_eq!(chain == Player::Exists, b < 5);
    }
    let r = case2_check(&eq, 7, None).unwrap();
    assert_eq!(r.losing.as_deref(), Some("4/5"));
    assert!(case2_check(&eq, 10, None).is_err());
}

#[test]
fn tree_game_on_a_powerset() {
    // f*(X) = {x | succ(x) ⊆ X} on a → b, b → a, c → a, c → d, d → d with c = {a,b,c}
    let lat = Arc::new(Powerset::new(["a", "b", "c", "d"]));
    let succ: [&[usize]; 4] = [&[1], &[0], &[0, 3], &[3]];
    let l = Arc::clone(&lat);
    let eq = MeetPreservingEquation::new(
        Arc::clone(&lat),
        move |x: &StateSet| l.set_of((0..4).filter(|&s| succ[s].iter().all(|t| x.contains(*t)))),
        lat.set_of([0, 1, 2]),
    )
    .unwrap();
    // f_*({c}) = {a,d}, and d is not below c
    assert_eq!(lat.show(&eq.f_lower(&lat.set_of([2]))), "{a,d}");
    let r = case2_check(&eq, 2, None).unwrap();
    assert_eq!(r.winner, Some(Player::Forall));
    assert_eq!(r.explored, ["{c}", "{a}", "{b}"]);
    assert_eq!(r.losing.as_deref(), Some("{d}"));
    let r = case2_check(&eq, 0, None).unwrap();
    assert_eq!(r.winner, Some(Player::Exists));
    assert_eq!(r.explored, ["{a}", "{b}"]);
    assert_eq!(r.pruned, 1);
}

#[test]
fn up_to_needs_compatibility() {
    let eq = half();
    let top = UpToFunction::new(grid(10), "⊤", UpToFlags::NONE, |_| 10).unwrap();
    assert!(matches!(case2_check(&eq, 0, Some(&top)), Err(Error::Incompatible(_))));
}

#[test]
fn random_instances_agree_with_kleene() {
    let mut r = rng(0x6a3e);
    let (mut chains, mut upto_runs, mut upto_smaller) = (0, 0, 0);
    for round in 0..200 {
        let lat = Arc::new(if round % 4 == 0 {
            TableLattice::chain(r.gen_range(2..7)).unwrap()
        } else {
            random_lattice(&mut r, 8)
        });
        let eq = random_meet_preserving(&mut r, &lat).unwrap();
        let nu = kleene(&*lat, |x| eq.f(x), Sign::Nu, None).unwrap();
        let full_basis = lat.size() == Some(lat.basis().unwrap().len() as u128 + 1);
        // u(x) = x ⊔ νf is compatible and extensive; random ones are kept
        // when they happen to be both
        let nf = nu;
        let l = Arc::clone(&lat);
        let mut ups = vec![UpToFunction::new(Arc::clone(&lat), "id ⊔ νf", UpToFlags::NONE, move |x| l.join(x, &nf)).unwrap()];
        let candidate = random_upto(&mut r, &lat).unwrap();
        if candidate.flags().extensive && check_compatibility(&candidate, &eq.function()).unwrap().compatible {
            ups.push(candidate);
        }
        for (i, b) in lat.basis().unwrap().iter().enumerate() {
            let expected = if lat.leq(b, &nu) { Player::Exists } else { Player::Forall };
            if full_basis {
                chains += 1;
                assert_eq!(case1_check(&eq, b).unwrap().winner, expected);
            }
            let plain = case2_check(&eq, i, None).unwrap();
            assert_eq!(plain.winner, Some(expected));
            for u in &ups {
                let up = case2_check(&eq, i, Some(u)).unwrap();
                assert_eq!(up.winner, Some(expected), "{}", u.name());
                upto_runs += 1;
                assert!(up.explored.len() <= plain.explored.len(), "{}", u.name());
                upto_smaller += usize::from(up.explored.len() < plain.explored.len());
            }
        }
    }
    assert!(chains > 50 && upto_runs > 300 && upto_smaller > 20, "{chains} {upto_runs} {upto_smaller}");
}
