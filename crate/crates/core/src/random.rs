//! Seeded generators of small lattices, monotone functions and systems,
//! for randomized validation.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::abstraction::GaloisConnection;
use crate::adjoint::MeetPreservingEquation;
use crate::eqsys::{Equation, EquationSystem, MonotoneFunction, Sign};
use crate::error::Result;
use crate::lattice::{tuple_leq, Lattice, TableLattice};
use crate::upto::{CompatibleTuple, UpToFlags, UpToFunction};

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random lattice with at most `max_elems` elements (and at least two),
/// built as a Moore family over a three-point universe.
pub fn random_lattice(rng: &mut ChaCha8Rng, max_elems: usize) -> TableLattice {
    let max_elems = max_elems.clamp(2, 8);
    loop {
        let mut masks: Vec<u32> = (0..8).collect();
        masks.shuffle(rng);
        let take = rng.gen_range(1..=max_elems);
        let lat = TableLattice::from_moore_family(&masks[..take], 3)
            .expect("Moore families are lattices");
        if lat.len() >= 2 && lat.len() <= max_elems {
            return lat;
        }
    }
}

/// A random monotone function `L^m → L`, the join of up to `max_steps`
/// step functions `x⃗ ↦ (t⃗ ≤ x⃗ ? v : ⊥)`.
pub fn random_monotone<L>(
    rng: &mut ChaCha8Rng,
    lat: &Arc<L>,
    m: usize,
    max_steps: usize,
) -> Result<MonotoneFunction<L::Elem>>
where
    L: Lattice + 'static,
    L::Elem: 'static,
{
    let elems = lat.elements()?;
    let steps: Vec<(Vec<L::Elem>, L::Elem)> = (0..rng.gen_range(0..=max_steps))
        .map(|_| {
            let t = (0..m)
                .map(|_| {
                    // thresholds at bottom are common, so constants arise
                    if rng.gen_bool(0.3) {
                        lat.bot()
                    } else {
                        elems.choose(rng).expect("non-empty").clone()
                    }
                })
                .collect();
            (t, elems.choose(rng).expect("non-empty").clone())
        })
        .collect();
    let description = steps
        .iter()
        .map(|(t, v)| {
            let ts: Vec<String> = t.iter().map(|e| lat.show(e)).collect();
            format!("[{}]→{}", ts.join(","), lat.show(v))
        })
        .collect::<Vec<_>>()
        .join(" ⊔ ");
    let l = Arc::clone(lat);
    Ok(MonotoneFunction::new(
        m,
        if description.is_empty() { "⊥".to_string() } else { description },
        move |x: &[L::Elem]| {
            steps
                .iter()
                .filter(|(t, _)| tuple_leq(&*l, t, x))
                .fold(l.bot(), |acc, (_, v)| l.join(&acc, v))
        },
    ))
}

pub fn random_sign(rng: &mut ChaCha8Rng) -> Sign {
    if rng.gen_bool(0.5) {
        Sign::Nu
    } else {
        Sign::Mu
    }
}

/// A random system of `m` equations over `lat`.
pub fn random_system<L>(rng: &mut ChaCha8Rng, lat: &Arc<L>, m: usize) -> Result<EquationSystem<L>>
where
    L: Lattice + 'static,
    L::Elem: 'static,
{
    let equations = (0..m)
        .map(|i| {
            let f = random_monotone(rng, lat, m, 3)?;
            Ok(Equation::new(format!("x{}", i + 1), random_sign(rng), f))
        })
        .collect::<Result<Vec<_>>>()?;
    EquationSystem::new(Arc::clone(lat), equations)
}

/// A random lattice with a random system of 1 to `max_m` equations.
pub fn random_instance(
    rng: &mut ChaCha8Rng,
    max_elems: usize,
    max_m: usize,
) -> Result<EquationSystem<TableLattice>> {
    let lat = Arc::new(random_lattice(rng, max_elems));
    let m = rng.gen_range(1..=max_m);
    random_system(rng, &lat, m)
}

/// A random strict monotone `L → L`: identity, constant ⊥, or a join of
/// step functions with non-⊥ thresholds, optionally joined with the
/// identity.
pub fn random_upto<L>(rng: &mut ChaCha8Rng, lat: &Arc<L>) -> Result<UpToFunction<L>>
where
    L: Lattice + 'static,
    L::Elem: 'static,
{
    let choice = rng.gen_range(0..4);
    if choice == 0 {
        return Ok(UpToFunction::identity(Arc::clone(lat)));
    }
    if choice == 1 {
        return Ok(UpToFunction::bottom(Arc::clone(lat)));
    }
    let elems: Vec<L::Elem> = lat.elements()?.into_iter().filter(|e| !lat.is_bot(e)).collect();
    let steps: Vec<(L::Elem, L::Elem)> = (0..rng.gen_range(1..=3))
        .map(|_| {
            (
                elems.choose(rng).expect("non-trivial lattice").clone(),
                elems.choose(rng).expect("non-trivial lattice").clone(),
            )
        })
        .collect();
    let with_id = choice == 3;
    let name = format!(
        "{}{}",
        if with_id { "id ⊔ " } else { "" },
        steps
            .iter()
            .map(|(t, v)| format!("[{}]→{}", lat.show(t), lat.show(v)))
            .collect::<Vec<_>>()
            .join(" ⊔ ")
    );
    let l = Arc::clone(lat);
    UpToFunction::new(Arc::clone(lat), name, UpToFlags::CONTINUOUS_STRICT, move |x| {
        let start = if with_id { x.clone() } else { l.bot() };
        steps
            .iter()
            .filter(|(t, _)| l.leq(t, x))
            .fold(start, |acc, (_, v)| l.join(&acc, v))
    })
}

/// A random tuple of up-to functions compatible with `sys`, by rejection
/// sampling. Falls back to identities after `tries` failures; the flag
/// says whether that happened.
pub fn random_compatible_tuple<L>(
    rng: &mut ChaCha8Rng,
    sys: &EquationSystem<L>,
    tries: usize,
) -> Result<(CompatibleTuple<L>, bool)>
where
    L: Lattice + 'static,
    L::Elem: 'static,
{
    for _ in 0..tries {
        let us = (0..sys.len())
            .map(|_| random_upto(rng, sys.lattice_arc()))
            .collect::<Result<Vec<_>>>()?;
        if let Ok(t) = CompatibleTuple::new(sys, us) {
            return Ok((t, true));
        }
    }
    Ok((CompatibleTuple::identities(sys), false))
}

/// A random join-preserving `α : C → A` completed to a Galois connection.
/// `α` is the join of the images of the basis elements below its argument;
/// candidates that fail to preserve binary joins are rejected, and the
/// constant-bottom map is the fallback.
pub fn random_connection(
    rng: &mut ChaCha8Rng,
    concrete: &Arc<TableLattice>,
    abstract_: &Arc<TableLattice>,
) -> Result<GaloisConnection<TableLattice, TableLattice>> {
    let cs = concrete.elements()?;
    let as_ = abstract_.elements()?;
    let basis = concrete.basis()?.to_vec();
    for _ in 0..64 {
        let images: Vec<usize> = basis.iter().map(|_| *as_.choose(rng).expect("non-empty")).collect();
        let table: Vec<usize> = cs
            .iter()
            .map(|c| {
                let below = basis.iter().zip(&images).filter(|(b, _)| concrete.leq(b, c));
                abstract_.join_all(below.map(|(_, g)| g))
            })
            .collect();
        let joins = cs.iter().all(|&x| {
            cs.iter()
                .all(|&y| table[concrete.join(&x, &y)] == abstract_.join(&table[x], &table[y]))
        });
        if joins {
            return GaloisConnection::from_alpha(
                Arc::clone(concrete),
                Arc::clone(abstract_),
                "random",
                move |c| table[*c],
            );
        }
    }
    let a = Arc::clone(abstract_);
    GaloisConnection::from_alpha(Arc::clone(concrete), Arc::clone(abstract_), "bottom", move |_| a.bot())
}

/// A random `x ↦ f*(x) ⊓ c` with `f*` the upper adjoint of a random
/// join-preserving map.
pub fn random_meet_preserving(
    rng: &mut ChaCha8Rng,
    lat: &Arc<TableLattice>,
) -> Result<MeetPreservingEquation<TableLattice>> {
    let gc = random_connection(rng, lat, lat)?;
    let c = *lat.elements()?.choose(rng).expect("non-empty");
    MeetPreservingEquation::new(Arc::clone(lat), move |x| gc.gamma(x), c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattices_are_small_and_lawful() {
        let mut r = rng(1);
        for _ in 0..50 {
            let lat = random_lattice(&mut r, 8);
            assert!((2..=8).contains(&lat.len()));
            crate::lattice::laws::check_lattice_laws(&lat);
        }
    }

    #[test]
    fn functions_are_monotone() {
        let mut r = rng(2);
        for _ in 0..30 {
            let lat = Arc::new(random_lattice(&mut r, 8));
            let f = random_monotone(&mut r, &lat, 2, 3).unwrap();
            let elems = lat.elements().unwrap();
            let pairs = crate::lattice::tuples(&elems, 2);
            for x in &pairs {
                for y in &pairs {
                    if tuple_leq(&*lat, x, y) {
                        assert!(lat.leq(&f.apply(x), &f.apply(y)));
                    }
                }
            }
        }
    }

    #[test]
    fn seeded_generation_is_reproducible() {
        let a = random_instance(&mut rng(7), 8, 3).unwrap();
        let b = random_instance(&mut rng(7), 8, 3).unwrap();
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }
}
