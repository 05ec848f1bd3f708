//! PS(FinStoch): spaces equipped with a state, and state-preserving kernels
//! modulo almost-sure equality.
//!
//! Each equivalence class is stored as its canonical representative (rows of
//! zero source mass are uniform), so equality of [`PSMorphism`] values is
//! equality of classes and Bayesian inversion is a strict dagger.

use serde::{Deserialize, Serialize};

use crate::conditioning::{canonicalize, invert};
use crate::error::{Error, Result};
use crate::finstoch::{self, compose, tensor, FinSpace, Kernel, State};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PSObject {
    state: State,
}

impl PSObject {
    pub fn new(state: State) -> Self {
        PSObject { state }
    }

    /// `(I, ι)`.
    pub fn unit() -> Self {
        let unit = FinSpace::unit();
        PSObject::new(finstoch::delta_at(&unit, 0))
    }

    pub fn space(&self) -> &FinSpace {
        self.state.space()
    }

    pub fn state(&self) -> &State {
        &self.state
    }

    pub fn tensor(&self, other: &PSObject) -> PSObject {
        PSObject::new(self.state.tensor(&other.state))
    }
}

/// A state-preserving kernel class `(X, π_X) -> (Y, π_Y)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct PSMorphism {
    src: PSObject,
    dst: PSObject,
    rep: Kernel,
}

fn object_mismatch(what: &str, expected: &PSObject, found: &PSObject) -> Error {
    Error::ObjectMismatch(format!(
        "{what}: expected ({}, {:?}), found ({}, {:?})",
        expected.space(),
        expected.state().probs(),
        found.space(),
        found.state().probs()
    ))
}

/// Checks `π_X ; f = π_Y` and returns the canonical representative of `[f]`.
pub fn ps_morphism(src: &PSObject, dst: &PSObject, f: &Kernel) -> Result<PSMorphism> {
    finstoch::ensure_same(src.space(), f.source())?;
    finstoch::ensure_same(dst.space(), f.target())?;
    let pushed = src.state().push(f)?;
    if &pushed != dst.state() {
        return Err(Error::NotStatePreserving {
            pushforward: format!("{:?}", pushed.probs()),
            expected: format!("{:?}", dst.state().probs()),
        });
    }
    Ok(PSMorphism::canonical(src.clone(), dst.clone(), f))
}

impl PSMorphism {
    fn canonical(src: PSObject, dst: PSObject, f: &Kernel) -> Self {
        let rep = canonicalize(f, src.state()).expect("source space checked");
        PSMorphism { src, dst, rep }
    }

    /// The morphism `(X, π) -> (Y, π;f)`.
    pub fn pushforward(src: &PSObject, f: &Kernel) -> Result<Self> {
        let dst = PSObject::new(src.state().push(f)?);
        Ok(PSMorphism::canonical(src.clone(), dst, f))
    }

    pub fn identity(obj: &PSObject) -> Self {
        PSMorphism::canonical(obj.clone(), obj.clone(), &finstoch::identity(obj.space()))
    }

    pub fn src(&self) -> &PSObject {
        &self.src
    }

    pub fn dst(&self) -> &PSObject {
        &self.dst
    }

    pub fn rep(&self) -> &Kernel {
        &self.rep
    }

    /// Structural isomorphisms, lifted from FinStoch. They preserve product
    /// states, so the state check cannot fail.
    fn structural(src: PSObject, k: Kernel) -> Self {
        let dst = PSObject::new(src.state().push(&k).expect("structural kernel fits"));
        PSMorphism::canonical(src, dst, &k)
    }

    /// `(A⊗B)⊗C -> A⊗(B⊗C)`.
    pub fn associator(a: &PSObject, b: &PSObject, c: &PSObject) -> Self {
        let k = finstoch::associator(a.space(), b.space(), c.space());
        Self::structural(a.tensor(b).tensor(c), k)
    }

    /// `A⊗(B⊗C) -> (A⊗B)⊗C`.
    pub fn associator_inv(a: &PSObject, b: &PSObject, c: &PSObject) -> Self {
        let k = finstoch::associator_inv(a.space(), b.space(), c.space());
        Self::structural(a.tensor(&b.tensor(c)), k)
    }

    /// `(I,ι)⊗A -> A`.
    pub fn left_unitor(a: &PSObject) -> Self {
        Self::structural(PSObject::unit().tensor(a), finstoch::left_unitor(a.space()))
    }

    /// `A -> (I,ι)⊗A`.
    pub fn left_unitor_inv(a: &PSObject) -> Self {
        Self::structural(a.clone(), finstoch::left_unitor_inv(a.space()))
    }

    /// `A⊗(I,ι) -> A`.
    pub fn right_unitor(a: &PSObject) -> Self {
        Self::structural(a.tensor(&PSObject::unit()), finstoch::right_unitor(a.space()))
    }

    pub fn swap(a: &PSObject, b: &PSObject) -> Self {
        Self::structural(a.tensor(b), finstoch::swap(a.space(), b.space()))
    }
}

pub fn ps_compose(f: &PSMorphism, g: &PSMorphism) -> Result<PSMorphism> {
    if f.dst != g.src {
        return Err(object_mismatch("composition", &f.dst, &g.src));
    }
    let rep = compose(&f.rep, &g.rep)?;
    Ok(PSMorphism::canonical(f.src.clone(), g.dst.clone(), &rep))
}

pub fn ps_tensor_objects(a: &PSObject, b: &PSObject) -> PSObject {
    a.tensor(b)
}

/// `f ⊗ g`, re-canonicalized: rows that are null for the product state need
/// not be null for either factor.
pub fn ps_tensor(f: &PSMorphism, g: &PSMorphism) -> PSMorphism {
    let rep = tensor(&f.rep, &g.rep);
    PSMorphism::canonical(f.src.tensor(&g.src), f.dst.tensor(&g.dst), &rep)
}

/// Bayesian inversion `f† : (Y, π_Y) -> (X, π_X)`.
pub fn dagger(f: &PSMorphism) -> PSMorphism {
    let inv = invert(&f.rep, f.src.state()).expect("representative fits its source");
    PSMorphism::canonical(f.dst.clone(), f.src.clone(), &inv)
}

#[derive(Deserialize)]
struct PSMorphismDoc {
    src: PSObject,
    dst: PSObject,
    rep: Kernel,
}

impl<'de> Deserialize<'de> for PSMorphism {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let doc = PSMorphismDoc::deserialize(deserializer)?;
        ps_morphism(&doc.src, &doc.dst, &doc.rep).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::Rat;

    fn r(p: i64, q: i64) -> Rat {
        Rat::new(p, q)
    }

    fn sp(name: &str, n: usize) -> FinSpace {
        FinSpace::new(name, (0..n).map(|i| format!("{}{i}", name.to_lowercase()))).unwrap()
    }

    fn obj(space: &FinSpace, probs: Vec<Rat>) -> PSObject {
        PSObject::new(State::new(space.clone(), probs).unwrap())
    }

    #[test]
    fn identity_morphism() {
        let x = sp("X", 2);
        let a = obj(&x, vec![r(1, 3), r(2, 3)]);
        let id = ps_morphism(&a, &a, &finstoch::identity(&x)).unwrap();
        assert_eq!(id, PSMorphism::identity(&a));
        assert_eq!(dagger(&id), id);
    }

    #[test]
    fn quotient_by_null_rows() {
        let x = sp("X", 2);
        let y = sp("Y", 2);
        let src = obj(&x, vec![r(1, 1), r(0, 1)]);
        let dst = obj(&y, vec![r(1, 2), r(1, 2)]);
        let f = Kernel::new(x.clone(), y.clone(), vec![vec![r(1, 2), r(1, 2)], vec![r(0, 1), r(1, 1)]]).unwrap();
        let g = Kernel::new(x.clone(), y.clone(), vec![vec![r(1, 2), r(1, 2)], vec![r(1, 1), r(0, 1)]]).unwrap();
        let pf = ps_morphism(&src, &dst, &f).unwrap();
        let pg = ps_morphism(&src, &dst, &g).unwrap();
        assert_eq!(pf, pg);
        assert_eq!(pf.rep().rows(), [vec![r(1, 2), r(1, 2)], vec![r(1, 2), r(1, 2)]]);
        assert_eq!(pf.dst().state().probs(), [r(1, 2), r(1, 2)]);
    }

    #[test]
    fn rejects_state_change() {
        let x = sp("X", 2);
        let a = obj(&x, vec![r(1, 2), r(1, 2)]);
        let b = obj(&x, vec![r(1, 3), r(2, 3)]);
        let err = ps_morphism(&a, &b, &finstoch::identity(&x)).unwrap_err();
        assert!(matches!(err, Error::NotStatePreserving { .. }));
    }

    #[test]
    fn compose_and_dagger_standard() {
        let x = sp("X", 2);
        let y = sp("Y", 2);
        let z = sp("Z", 2);
        let a = obj(&x, vec![r(1, 2), r(1, 2)]);
        let f = Kernel::new(x.clone(), y.clone(), vec![vec![r(3, 4), r(1, 4)], vec![r(1, 2), r(1, 2)]]).unwrap();
        let g = Kernel::new(y.clone(), z.clone(), vec![vec![r(1, 2), r(1, 2)], vec![r(0, 1), r(1, 1)]]).unwrap();
        let pf = PSMorphism::pushforward(&a, &f).unwrap();
        let pg = PSMorphism::pushforward(pf.dst(), &g).unwrap();
        let fg = ps_compose(&pf, &pg).unwrap();
        assert_eq!(fg.rep(), &compose(&f, &g).unwrap());
        assert_eq!(ps_compose(&pf, &PSMorphism::identity(pf.dst())).unwrap(), pf);

        let d = dagger(&pf);
        assert_eq!(d.rep().rows(), [vec![r(3, 5), r(2, 5)], vec![r(1, 3), r(2, 3)]]);
        assert_eq!(dagger(&d), pf);
        assert!(matches!(ps_compose(&pg, &pf), Err(Error::ObjectMismatch(_))));
    }

    #[test]
    fn dagger_of_permutation_is_inverse() {
        let x = sp("X", 3);
        let a = obj(&x, vec![r(1, 3), r(1, 3), r(1, 3)]);
        let cycle = Kernel::deterministic(x.clone(), x.clone(), |i| (i + 1) % 3);
        let inverse = Kernel::deterministic(x.clone(), x.clone(), |i| (i + 2) % 3);
        let p = PSMorphism::pushforward(&a, &cycle).unwrap();
        assert_eq!(dagger(&p).rep(), &inverse);
    }

    #[test]
    fn unit_object_tensor() {
        let x = sp("X", 2);
        let a = obj(&x, vec![r(1, 4), r(3, 4)]);
        let ia = PSObject::unit().tensor(&a);
        assert_eq!(ia.state().probs(), a.state().probs());
        let lu = PSMorphism::left_unitor(&a);
        assert_eq!(lu.dst(), &a);
        assert_eq!(ps_compose(&PSMorphism::left_unitor_inv(&a), &lu).unwrap(), PSMorphism::identity(&a));
    }

    #[test]
    fn tensor_recanonicalizes() {
        let x = sp("X", 2);
        let a = obj(&x, vec![r(1, 1), r(0, 1)]);
        let b = obj(&x, vec![r(1, 2), r(1, 2)]);
        let id = PSMorphism::identity(&a).clone();
        let t = ps_tensor(&id, &PSMorphism::identity(&b));
        // rows (x1, _) have zero mass and must be uniform over X⊗X
        assert!(t.rep().row(2).iter().all(|p| *p == r(1, 4)));
        assert_eq!(t.src().state().probs(), [r(1, 2), r(1, 2), r(0, 1), r(0, 1)]);
    }

    #[test]
    fn json_round_trip() {
        let x = sp("X", 2);
        let a = obj(&x, vec![r(1, 2), r(1, 2)]);
        let f = Kernel::new(x.clone(), x.clone(), vec![vec![r(3, 4), r(1, 4)], vec![r(1, 4), r(3, 4)]]).unwrap();
        let p = PSMorphism::pushforward(&a, &f).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.contains("\"state\""));
        let back: PSMorphism = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
    }
}
