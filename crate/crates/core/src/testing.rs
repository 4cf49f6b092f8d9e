//! Shared fixtures for unit tests.

use std::sync::Arc;

use crate::eqsys::{Equation, EquationSystem, MonotoneFunction, Sign};
use crate::lattice::{Lattice, Powerset, StateSet};

pub const FIG3A_SUCC: [&[usize]; 5] = [&[0, 1, 2], &[3, 4], &[2], &[3], &[4]];

/// The running example: states a..e with a→a,b,c; b→d,e; c→c; d→d; e→e
/// and x1 =ν {b,d,e} ∩ ■x1, x2 =μ x1 ∪ ♦x2.
pub fn running_example() -> EquationSystem<Powerset> {
    let lat = Arc::new(Powerset::new(["a", "b", "c", "d", "e"]));
    let l1 = lat.clone();
    let boxed = move |y: &StateSet| {
        l1.set_of((0..5).filter(|&x| FIG3A_SUCC[x].iter().all(|t| y.contains(*t))))
    };
    let l2 = lat.clone();
    let diamond = move |y: &StateSet| {
        l2.set_of((0..5).filter(|&x| FIG3A_SUCC[x].iter().any(|t| y.contains(*t))))
    };
    let p = lat.set_of([1, 3, 4]);
    let l3 = lat.clone();
    let l4 = lat.clone();
    EquationSystem::new(
        lat,
        vec![
            Equation::new(
                "x1",
                Sign::Nu,
                MonotoneFunction::new(2, "p ∩ ■x1", move |x: &[StateSet]| l3.meet(&p, &boxed(&x[0]))),
            ),
            Equation::new(
                "x2",
                Sign::Mu,
                MonotoneFunction::new(2, "x1 ∪ ♦x2", move |x: &[StateSet]| l4.join(&x[0], &diamond(&x[1]))),
            ),
        ],
    )
    .unwrap()
}
