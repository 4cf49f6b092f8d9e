use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::random::rng;

fn set(n: usize, members: &[usize]) -> Set {
    let mut s = Set::with_capacity(n);
    for &q in members {
        s.insert(q);
    }
    s
}

fn names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|k| format!("{prefix}{k}")).collect()
}

/// p -a-> p r, q -a-> q r, r -a-> r, all final.
fn union_instance() -> Nfa {
    Nfa::parse("states: p q r\nalphabet: a\nfinal: p q r\ntrans: p -a-> p r\ntrans: q -a-> q r\ntrans: r -a-> r\n").unwrap()
}

#[test]
fn parses_and_reports_positions() {
    let nfa = union_instance();
    assert_eq!(nfa.len(), 3);
    assert_eq!(nfa.show_set(&nfa.post(&nfa.singleton(0), 0)), "{p,r}");
    let err = Nfa::parse("states: p\nalphabet: a\ntrans: p -b-> p").unwrap_err();
    assert_eq!(err.to_string(), "parse error at line 3, column 11: unknown letter 'b'");
    let err = Nfa::parse("states: p\nalphabet: a\ntrans: p -a-> s").unwrap_err();
    assert_eq!(err.to_string(), "parse error at line 3, column 15: unknown state 's'");
    let err = Nfa::parse("states: p\nalphabet: a\ntrans: p a p").unwrap_err();
    assert!(err.to_string().contains("malformed arrow 'a'"));
    assert!(Nfa::parse("alphabet: a").unwrap_err().to_string().contains("missing 'states:'"));
}

#[test]
fn lower_adjoint_collects_letter_successors() {
    let nfa = Nfa::parse("states: x y z\nalphabet: a b\ntrans: x -a-> y\ntrans: x -b-> y z\ntrans: y -a-> y").unwrap();
    let next = nfa.lower_adjoint(&(nfa.singleton(0), set(3, &[0, 1])));
    let shown: Vec<String> = next.iter().map(|p| nfa.show_pair(p)).collect();
    assert_eq!(shown, ["({y},{y})", "({y,z},{y,z})"]);
    // letters with equal successors give one pair
    let next = nfa.lower_adjoint(&(nfa.singleton(2), nfa.singleton(2)));
    assert_eq!(next.len(), 1);
}

#[test]
fn basic_verdicts() {
    let nfa = union_instance();
    for q in 0..3 {
        for upto in [false, true] {
            assert!(language_equiv(&nfa, q, q, upto).unwrap().equivalent);
        }
    }
    // a-loop on accepting x, y dead and not accepting
    let nfa = Nfa::parse("states: x y\nalphabet: a\nfinal: x\ntrans: x -a-> x").unwrap();
    for upto in [false, true] {
        let r = language_equiv(&nfa, 0, 1, upto).unwrap();
        assert!(!r.equivalent);
        assert_eq!(r.counterexample.as_deref(), Some("({x},{y})"));
    }
}

#[test]
fn congruence_prunes_union_generated_pairs() {
    let nfa = union_instance();
    let plain = language_equiv(&nfa, 0, 1, false).unwrap();
    let up = language_equiv(&nfa, 0, 1, true).unwrap();
    assert!(plain.equivalent && up.equivalent);
    assert_eq!(plain.explored, ["({p},{q})", "({p,r},{q,r})"]);
    assert_eq!(up.explored, ["({p},{q})"]);
    assert!(up.visited < plain.visited);
}

#[test]
fn congruence_membership_examples() {
    let x = set(4, &[0, 2]);
    assert!(congruence_member(&(x.clone(), x), &[]));
    let r = [(set(4, &[1]), set(4, &[2]))];
    assert!(congruence_member(&(set(4, &[1, 3]), set(4, &[2, 3])), &r));
    assert!(!congruence_member(&(set(4, &[1]), set(4, &[3])), &r));
}

/// The congruence closure on subsets of `n` states by saturation,
/// with subsets as bitmasks.
fn brute_closure(n: usize, r: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let size = 1 << n;
    let mut m = vec![vec![false; size]; size];
    for &(a, b) in r {
        m[a][b] = true;
    }
    loop {
        let mut changed = false;
        let mut set = |m: &mut Vec<Vec<bool>>, a: usize, b: usize| {
            if !m[a][b] {
                m[a][b] = true;
                changed = true;
            }
        };
        for a in 0..size {
            set(&mut m, a, a);
        }
        for a in 0..size {
            for b in 0..size {
                if m[a][b] {
                    set(&mut m, b, a);
                    for x in 0..size {
                        set(&mut m, a | x, b | x);
                        if m[b][x] {
                            set(&mut m, a, x);
                        }
                    }
                }
            }
        }
        if !changed {
            return m;
        }
    }
}

fn mask_set(n: usize, mask: usize) -> Set {
    set(n, &(0..n).filter(|q| mask >> q & 1 == 1).collect::<Vec<_>>())
}

#[test]
fn congruence_agrees_with_brute_force_closure() {
    let mut r = rng(0xc0c);
    for _ in 0..40 {
        let n = r.gen_range(1..=4);
        let size = 1 << n;
        let rel: Vec<(usize, usize)> = (0..r.gen_range(0..=3)).map(|_| (r.gen_range(0..size), r.gen_range(0..size))).collect();
        let closure = brute_closure(n, &rel);
        let pairs: Vec<Pair> = rel.iter().map(|&(a, b)| (mask_set(n, a), mask_set(n, b))).collect();
        for a in 0..size {
            for b in 0..size {
                assert_eq!(congruence_member(&(mask_set(n, a), mask_set(n, b)), &pairs), closure[a][b], "{rel:?} {a} {b}");
            }
        }
    }
}

pub(crate) fn random_nfa(r: &mut ChaCha8Rng) -> Nfa {
    let n = r.gen_range(1..=6);
    let k = r.gen_range(1..=2);
    let trans: Vec<(usize, usize, usize)> = (0..n)
        .flat_map(|q| (0..k).flat_map(move |a| (0..n).map(move |t| (q, a, t))))
        .filter(|_| r.gen_bool(0.25))
        .collect();
    let finals: Vec<usize> = (0..n).filter(|_| r.gen_bool(0.4)).collect();
    Nfa::new(names("q", n), names("a", k), &trans, &finals).unwrap()
}

/// Language equivalence of `{q1}` and `{q2}` in the full subset
/// automaton, by Moore partition refinement.
pub(crate) fn dfa_oracle(nfa: &Nfa, q1: usize, q2: usize) -> bool {
    let n = nfa.len();
    let size = 1usize << n;
    let to_mask = |s: &Set| s.ones().fold(0usize, |m, q| m | 1 << q);
    let step: Vec<Vec<usize>> = (0..size)
        .map(|m| (0..nfa.alphabet().len()).map(|a| to_mask(&nfa.post(&mask_set(n, m), a))).collect())
        .collect();
    let mut block: Vec<usize> = (0..size).map(|m| usize::from(nfa.accepting(&mask_set(n, m)))).collect();
    loop {
        let keys: Vec<Vec<usize>> = (0..size)
            .map(|m| std::iter::once(block[m]).chain(step[m].iter().map(|&t| block[t])).collect())
            .collect();
        let mut distinct = keys.clone();
        distinct.sort();
        distinct.dedup();
        let next: Vec<usize> = keys.iter().map(|k| distinct.binary_search(k).unwrap()).collect();
        let old = block.iter().collect::<HashSet<_>>().len();
        block = next;
        if distinct.len() == old {
            break;
        }
    }
    block[1 << q1] == block[1 << q2]
}

#[test]
fn both_modes_agree_with_the_dfa_oracle() {
    let mut r = rng(0xdfa);
    let (mut strict, mut differ) = (0, 0);
    for _ in 0..150 {
        let nfa = random_nfa(&mut r);
        let q1 = r.gen_range(0..nfa.len());
        let q2 = r.gen_range(0..nfa.len());
        let expected = dfa_oracle(&nfa, q1, q2);
        let plain = language_equiv(&nfa, q1, q2, false).unwrap();
        let up = language_equiv(&nfa, q1, q2, true).unwrap();
        assert_eq!(plain.equivalent, expected);
        assert_eq!(up.equivalent, expected);
        assert!(up.visited <= plain.visited);
        strict += usize::from(up.visited < plain.visited);
        differ += usize::from(!expected);
    }
    assert!(strict > 0 && differ > 10, "{strict} {differ}");
}
