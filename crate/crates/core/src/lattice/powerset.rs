use fixedbitset::FixedBitSet;

use super::{check_enumerable, BasisSubset, Lattice};
use crate::error::{Error, Result};

/// Subsets of a finite universe, as bit sets over universe indices.
pub type StateSet = FixedBitSet;

/// The powerset of a finite universe ordered by inclusion.
///
/// A powerset built with [`Powerset::relation`] has the pairs of a state
/// list as its universe, laid out row-major, and doubles as the lattice of
/// binary relations.
#[derive(Clone, Debug)]
pub struct Powerset {
    names: Vec<String>,
    basis: Vec<StateSet>,
    states: Option<Vec<String>>,
}

impl Powerset {
    pub fn new<I, S>(universe: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = universe.into_iter().map(Into::into).collect();
        let n = names.len();
        let basis = (0..n)
            .map(|i| {
                let mut s = FixedBitSet::with_capacity(n);
                s.insert(i);
                s
            })
            .collect();
        Powerset {
            names,
            basis,
            states: None,
        }
    }

    /// The lattice of relations on `states`, i.e. the powerset of `S × S`.
    pub fn relation<I, S>(states: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let states: Vec<String> = states.into_iter().map(Into::into).collect();
        let pairs = states
            .iter()
            .flat_map(|x| states.iter().map(move |y| format!("({x},{y})")));
        let mut lat = Powerset::new(pairs);
        lat.states = Some(states);
        lat
    }

    pub fn universe(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn empty_set(&self) -> StateSet {
        FixedBitSet::with_capacity(self.names.len())
    }

    pub fn set_of(&self, members: impl IntoIterator<Item = usize>) -> StateSet {
        let mut s = self.empty_set();
        for m in members {
            s.insert(m);
        }
        s
    }

    /// Builds a set from member names, rejecting unknown names.
    pub fn set_of_names<'a>(&self, members: impl IntoIterator<Item = &'a str>) -> Result<StateSet> {
        let mut s = self.empty_set();
        for m in members {
            let i = self
                .index_of(m)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown element `{m}`")))?;
            s.insert(i);
        }
        Ok(s)
    }

    pub fn members<'a>(&'a self, s: &'a StateSet) -> impl Iterator<Item = &'a str> + 'a {
        s.ones().map(|i| self.names[i].as_str())
    }

    /// States underlying a relation lattice.
    pub fn relation_states(&self) -> Option<&[String]> {
        self.states.as_deref()
    }

    /// Universe index of the pair `(x, y)` in a relation lattice.
    pub fn pair(&self, x: usize, y: usize) -> usize {
        let n = self.states.as_ref().map_or(0, Vec::len);
        x * n + y
    }

    /// Inverse of [`Powerset::pair`].
    pub fn unpair(&self, p: usize) -> (usize, usize) {
        let n = self.states.as_ref().map_or(1, Vec::len).max(1);
        (p / n, p % n)
    }
}

impl Lattice for Powerset {
    type Elem = StateSet;

    fn leq(&self, a: &StateSet, b: &StateSet) -> bool {
        a.is_subset(b)
    }

    fn join(&self, a: &StateSet, b: &StateSet) -> StateSet {
        let mut r = a.clone();
        r.union_with(b);
        r
    }

    fn meet(&self, a: &StateSet, b: &StateSet) -> StateSet {
        let mut r = a.clone();
        r.intersect_with(b);
        r
    }

    fn bot(&self) -> StateSet {
        self.empty_set()
    }

    fn top(&self) -> StateSet {
        let mut s = self.empty_set();
        s.insert_range(..);
        s
    }

    fn is_finite(&self) -> bool {
        true
    }

    fn size(&self) -> Option<u128> {
        1u128.checked_shl(self.names.len() as u32)
    }

    fn basis(&self) -> Result<&[StateSet]> {
        Ok(&self.basis)
    }

    fn elements(&self) -> Result<Vec<StateSet>> {
        check_enumerable(self.size(), "powerset lattice")?;
        let n = self.names.len();
        Ok((0u64..(1u64 << n))
            .map(|mask| self.set_of((0..n).filter(|i| mask >> i & 1 == 1)))
            .collect())
    }

    fn show(&self, e: &StateSet) -> String {
        let items: Vec<&str> = self.members(e).collect();
        format!("{{{}}}", items.join(","))
    }

    fn minimal_join_cover(&self, l: &StateSet) -> Result<BasisSubset> {
        Ok(l.ones().collect())
    }

    fn decompose(&self, l: &StateSet) -> Result<BasisSubset> {
        Ok(l.ones().collect())
    }

    fn join_subset(&self, x: &BasisSubset) -> Result<StateSet> {
        Ok(self.set_of(x.iter()))
    }

    fn basis_index(&self, e: &StateSet) -> Option<usize> {
        let mut ones = e.ones();
        match (ones.next(), ones.next()) {
            (Some(i), None) => Some(i),
            _ => None,
        }
    }

    fn sample(&self, rng: &mut dyn rand::RngCore, count: usize) -> Vec<StateSet> {
        use rand::Rng;
        let n = self.names.len();
        (0..count)
            .map(|_| self.set_of((0..n).filter(|_| rng.gen_bool(0.5))))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::laws::check_lattice_laws;

    #[test]
    fn two_element_universe() {
        let lat = Powerset::new(["a", "b"]);
        let basis: Vec<String> = lat.basis().unwrap().iter().map(|b| lat.show(b)).collect();
        assert_eq!(basis, ["{a}", "{b}"]);
        assert_eq!(lat.show(&lat.top()), "{a,b}");
        check_lattice_laws(&lat);
    }

    #[test]
    fn empty_universe_is_one_point() {
        let lat = Powerset::new(Vec::<String>::new());
        assert!(lat.basis().unwrap().is_empty());
        assert_eq!(lat.bot(), lat.top());
        assert_eq!(lat.elements().unwrap().len(), 1);
        check_lattice_laws(&lat);
    }

    #[test]
    fn five_states() {
        let lat = Powerset::new(["a", "b", "c", "d", "e"]);
        assert_eq!(lat.size(), Some(32));
        check_lattice_laws(&lat);
        let ab = lat.set_of_names(["a", "b"]).unwrap();
        assert_eq!(lat.decompose(&ab).unwrap(), BasisSubset::from_indices([0, 1]));
        assert_eq!(lat.minimal_join_cover(&ab).unwrap(), BasisSubset::from_indices([0, 1]));
        assert!(lat.set_of_names(["z"]).is_err());
    }

    #[test]
    fn relation_layout() {
        let lat = Powerset::relation(["a", "b", "c"]);
        assert_eq!(lat.len(), 9);
        let p = lat.pair(1, 2);
        assert_eq!(lat.universe()[p], "(b,c)");
        assert_eq!(lat.unpair(p), (1, 2));
        assert_eq!(lat.elements().map(|e| e.len()).ok(), Some(512));
    }

    #[test]
    fn large_powerset_refuses_enumeration() {
        let lat = Powerset::relation(["a", "b", "c", "d", "e"]);
        assert!(matches!(lat.elements(), Err(Error::Unsupported(_))));
        let mut rng = rand::rngs::mock::StepRng::new(0, 1);
        assert_eq!(lat.sample(&mut rng, 3).len(), 3);
    }
}
