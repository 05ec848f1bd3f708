//! The Markov category of finite sets and stochastic matrices.
//!
//! Objects are [`FinSpace`]s (ordered, labelled finite sets), morphisms are
//! row-stochastic [`Kernel`]s with exact rational entries, and states are
//! kernels out of the unit space `I = {*}`.
//!
//! Products are binary and carry their factors, so `X⊗(Y⊗Z)` and `(X⊗Y)⊗Z`
//! are different spaces; the structural isomorphisms between them
//! ([`associator`], [`left_unitor`], [`swap`], ...) are explicit permutation
//! kernels. Product elements are ordered lexicographically with the left
//! factor major, and labelled `a⊗b` (nested product labels are parenthesized).

use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rat::Rat;

pub const TENSOR: char = '⊗';
pub const UNIT_NAME: &str = "I";
pub const UNIT_ELEMENT: &str = "*";

#[derive(Debug, PartialEq, Eq, Hash)]
struct SpaceData {
    name: String,
    elements: Vec<String>,
    factors: Option<(FinSpace, FinSpace)>,
}

/// A named finite set of outcome labels. Cheap to clone.
#[derive(Clone, Eq)]
pub struct FinSpace(Arc<SpaceData>);

impl Hash for FinSpace {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.hash(state);
    }
}

impl PartialEq for FinSpace {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
    }
}

impl FinSpace {
    /// A base (non-product) space. Labels must be distinct, non-empty and
    /// free of the tensor symbol and parentheses.
    pub fn new<S: Into<String>, L: Into<String>>(
        name: S,
        elements: impl IntoIterator<Item = L>,
    ) -> Result<Self> {
        let name = name.into();
        let elements: Vec<String> = elements.into_iter().map(Into::into).collect();
        if name.is_empty() {
            return Err(Error::InvalidSpace("empty space name".into()));
        }
        if elements.is_empty() {
            return Err(Error::InvalidSpace(format!("space `{name}` has no elements")));
        }
        for (i, e) in elements.iter().enumerate() {
            if e.is_empty() || e.contains(TENSOR) || e.contains('(') || e.contains(')') {
                return Err(Error::InvalidSpace(format!(
                    "label `{e}` in `{name}` is empty or uses a reserved character"
                )));
            }
            if elements[..i].contains(e) {
                return Err(Error::InvalidSpace(format!(
                    "label `{e}` repeated in `{name}`"
                )));
            }
        }
        Ok(FinSpace(Arc::new(SpaceData {
            name,
            elements,
            factors: None,
        })))
    }

    /// The monoidal unit `I = {*}`.
    pub fn unit() -> Self {
        FinSpace(Arc::new(SpaceData {
            name: UNIT_NAME.into(),
            elements: vec![UNIT_ELEMENT.into()],
            factors: None,
        }))
    }

    pub fn product(left: &FinSpace, right: &FinSpace) -> Self {
        let name = format!("{}{TENSOR}{}", left.wrapped_name(), right.wrapped_name());
        let mut elements = Vec::with_capacity(left.len() * right.len());
        for a in left.elements() {
            for b in right.elements() {
                elements.push(format!(
                    "{}{TENSOR}{}",
                    wrap(a, left.is_product()),
                    wrap(b, right.is_product())
                ));
            }
        }
        FinSpace(Arc::new(SpaceData {
            name,
            elements,
            factors: Some((left.clone(), right.clone())),
        }))
    }

    fn wrapped_name(&self) -> String {
        wrap(&self.0.name, self.is_product())
    }

    pub fn name(&self) -> &str {
        &self.0.name
    }

    pub fn elements(&self) -> &[String] {
        &self.0.elements
    }

    pub fn len(&self) -> usize {
        self.0.elements.len()
    }

    /// Never true; spaces are non-empty.
    pub fn is_empty(&self) -> bool {
        self.0.elements.is_empty()
    }

    pub fn is_unit(&self) -> bool {
        self.0.factors.is_none() && self.0.name == UNIT_NAME && self.0.elements == [UNIT_ELEMENT]
    }

    pub fn is_product(&self) -> bool {
        self.0.factors.is_some()
    }

    pub fn factors(&self) -> Option<(&FinSpace, &FinSpace)> {
        self.0.factors.as_ref().map(|(a, b)| (a, b))
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.0.elements.iter().position(|e| e == label)
    }

    pub fn require_index(&self, label: &str) -> Result<usize> {
        self.index_of(label).ok_or_else(|| Error::UnknownLabel {
            space: self.name().to_string(),
            label: label.to_string(),
        })
    }

    /// Index of the pair `(i, j)` in `self = A⊗B`, given `|B|`.
    pub fn pair_index(right_len: usize, i: usize, j: usize) -> usize {
        i * right_len + j
    }
}

fn wrap(s: &str, parens: bool) -> String {
    if parens {
        format!("({s})")
    } else {
        s.to_string()
    }
}

impl fmt::Debug for FinSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:?}", self.name(), self.elements())
    }
}

impl fmt::Display for FinSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn mismatch(expected: &FinSpace, found: &FinSpace) -> Error {
    Error::SpaceMismatch {
        expected: expected.name().to_string(),
        found: found.name().to_string(),
    }
}

pub(crate) fn ensure_same(expected: &FinSpace, found: &FinSpace) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(mismatch(expected, found))
    }
}

/// A stochastic channel `source -> target`: one distribution over `target`
/// per element of `source`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Kernel {
    source: FinSpace,
    target: FinSpace,
    rows: Vec<Vec<Rat>>,
}

impl Kernel {
    /// Validates shape, entry range and exact row sums.
    pub fn new(source: FinSpace, target: FinSpace, rows: Vec<Vec<Rat>>) -> Result<Self> {
        if rows.len() != source.len() {
            return Err(Error::Shape(format!(
                "{} rows given for source `{}` of size {}",
                rows.len(),
                source,
                source.len()
            )));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != target.len() {
                return Err(Error::Shape(format!(
                    "row {i} has {} entries, target `{}` has {}",
                    row.len(),
                    target,
                    target.len()
                )));
            }
            if let Some(reason) = row_defect(row) {
                return Err(Error::NotStochastic {
                    source_space: source.name().to_string(),
                    target: target.name().to_string(),
                    row: i,
                    reason,
                });
            }
        }
        Ok(Kernel {
            source,
            target,
            rows,
        })
    }

    /// Builds a kernel the caller knows to be stochastic.
    pub(crate) fn assemble(source: FinSpace, target: FinSpace, rows: Vec<Vec<Rat>>) -> Self {
        debug_assert_eq!(rows.len(), source.len());
        debug_assert!(rows.iter().all(|r| r.len() == target.len()));
        Kernel {
            source,
            target,
            rows,
        }
    }

    /// The deterministic kernel sending element `i` to `map(i)`.
    pub fn deterministic(
        source: FinSpace,
        target: FinSpace,
        map: impl Fn(usize) -> usize,
    ) -> Self {
        let n = target.len();
        let rows = (0..source.len())
            .map(|i| {
                let j = map(i);
                assert!(j < n, "deterministic map leaves the target");
                point_row(n, j)
            })
            .collect();
        Kernel {
            source,
            target,
            rows,
        }
    }

    /// Every source element goes to the same distribution.
    pub fn constant(source: FinSpace, state: &State) -> Self {
        let row = state.probs().to_vec();
        let rows = vec![row; source.len()];
        Kernel {
            source,
            target: state.space().clone(),
            rows,
        }
    }

    pub fn source(&self) -> &FinSpace {
        &self.source
    }

    pub fn target(&self) -> &FinSpace {
        &self.target
    }

    pub fn rows(&self) -> &[Vec<Rat>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[Rat] {
        &self.rows[i]
    }

    pub fn entry(&self, i: usize, j: usize) -> &Rat {
        &self.rows[i][j]
    }

    /// Entry by labels.
    pub fn at(&self, x: &str, y: &str) -> Result<&Rat> {
        let i = self.source.require_index(x)?;
        let j = self.target.require_index(y)?;
        Ok(&self.rows[i][j])
    }

    pub fn is_stochastic(&self) -> bool {
        self.rows.len() == self.source.len()
            && self
                .rows
                .iter()
                .all(|r| r.len() == self.target.len() && row_defect(r).is_none())
    }

    pub fn is_deterministic(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.iter().filter(|p| !p.is_zero()).count() == 1)
    }

    #[cfg(test)]
    pub(crate) fn retype(self, source: FinSpace, target: FinSpace) -> Self {
        assert_eq!(source.len(), self.source.len());
        assert_eq!(target.len(), self.target.len());
        Kernel {
            source,
            target,
            rows: self.rows,
        }
    }
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Kernel({} -> {}) [", self.source, self.target)?;
        for (i, row) in self.rows.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{row:?}")?;
        }
        f.write_str("]")
    }
}

fn row_defect(row: &[Rat]) -> Option<String> {
    if let Some(p) = row.iter().find(|p| !p.is_probability()) {
        return Some(format!("entry {p} outside [0, 1]"));
    }
    let total: Rat = row.iter().sum();
    if total.is_one() {
        None
    } else {
        Some(format!("entries sum to {total}"))
    }
}

pub(crate) fn point_row(len: usize, at: usize) -> Vec<Rat> {
    let mut row = vec![Rat::zero(); len];
    row[at] = Rat::one();
    row
}

pub(crate) fn uniform_row(len: usize) -> Vec<Rat> {
    vec![Rat::new(1, len as i64); len]
}

/// A kernel out of the unit space: a probability distribution.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct State(Kernel);

impl State {
    pub fn new(space: FinSpace, probs: Vec<Rat>) -> Result<Self> {
        Kernel::new(FinSpace::unit(), space, vec![probs]).map(State)
    }

    pub fn from_kernel(kernel: Kernel) -> Result<Self> {
        if !kernel.source().is_unit() {
            return Err(mismatch(&FinSpace::unit(), kernel.source()));
        }
        Ok(State(kernel))
    }

    pub(crate) fn assemble(space: FinSpace, probs: Vec<Rat>) -> Self {
        State(Kernel::assemble(FinSpace::unit(), space, vec![probs]))
    }

    pub fn uniform(space: &FinSpace) -> Self {
        State::assemble(space.clone(), uniform_row(space.len()))
    }

    pub fn space(&self) -> &FinSpace {
        self.0.target()
    }

    pub fn probs(&self) -> &[Rat] {
        self.0.row(0)
    }

    pub fn prob(&self, label: &str) -> Result<&Rat> {
        Ok(&self.probs()[self.space().require_index(label)?])
    }

    pub fn as_kernel(&self) -> &Kernel {
        &self.0
    }

    pub fn into_kernel(self) -> Kernel {
        self.0
    }

    /// Indices with positive mass.
    pub fn support_indices(&self) -> Vec<usize> {
        self.probs()
            .iter()
            .enumerate()
            .filter(|(_, p)| p.is_positive())
            .map(|(i, _)| i)
            .collect()
    }

    pub fn has_full_support(&self) -> bool {
        self.probs().iter().all(Rat::is_positive)
    }

    /// `self ; f`.
    pub fn push(&self, f: &Kernel) -> Result<State> {
        compose(&self.0, f).map(State)
    }

    /// The product state on `self.space() ⊗ other.space()`, precomposed with
    /// the unitor `I -> I⊗I`.
    pub fn tensor(&self, other: &State) -> State {
        let k = tensor(&self.0, &other.0);
        let unit = FinSpace::unit();
        let split = Kernel::deterministic(unit.clone(), FinSpace::product(&unit, &unit), |_| 0);
        State(compose(&split, &k).expect("unit splits into I⊗I"))
    }
}

/// `f ; g`: `(f;g)(x)(z) = Σ_y f(x)(y) g(y)(z)`.
pub fn compose(f: &Kernel, g: &Kernel) -> Result<Kernel> {
    ensure_same(&f.target, &g.source)?;
    let width = g.target.len();
    let rows = f
        .rows
        .iter()
        .map(|frow| {
            let mut out = vec![Rat::zero(); width];
            for (y, p) in frow.iter().enumerate() {
                if p.is_zero() {
                    continue;
                }
                for (z, q) in g.rows[y].iter().enumerate() {
                    if !q.is_zero() {
                        out[z] = &out[z] + &(p * q);
                    }
                }
            }
            out
        })
        .collect();
    Ok(Kernel::assemble(
        f.source.clone(),
        g.target.clone(),
        rows,
    ))
}

/// Parallel composition `f ⊗ g`.
pub fn tensor(f: &Kernel, g: &Kernel) -> Kernel {
    let source = FinSpace::product(&f.source, &g.source);
    let target = FinSpace::product(&f.target, &g.target);
    let mut rows = Vec::with_capacity(source.len());
    for frow in &f.rows {
        for grow in &g.rows {
            let mut row = Vec::with_capacity(target.len());
            for p in frow {
                for q in grow {
                    row.push(if p.is_zero() || q.is_zero() {
                        Rat::zero()
                    } else {
                        p * q
                    });
                }
            }
            rows.push(row);
        }
    }
    Kernel::assemble(source, target, rows)
}

pub fn identity(x: &FinSpace) -> Kernel {
    Kernel::deterministic(x.clone(), x.clone(), |i| i)
}

/// `copy_X : X -> X⊗X`, `x ↦ δ_(x,x)`.
pub fn copy(x: &FinSpace) -> Kernel {
    let n = x.len();
    Kernel::deterministic(x.clone(), FinSpace::product(x, x), |i| {
        FinSpace::pair_index(n, i, i)
    })
}

/// `del_X : X -> I`.
pub fn del(x: &FinSpace) -> Kernel {
    Kernel::deterministic(x.clone(), FinSpace::unit(), |_| 0)
}

/// `X⊗Y -> Y⊗X`.
pub fn swap(x: &FinSpace, y: &FinSpace) -> Kernel {
    let (nx, ny) = (x.len(), y.len());
    Kernel::deterministic(
        FinSpace::product(x, y),
        FinSpace::product(y, x),
        |k| {
            let (i, j) = (k / ny, k % ny);
            FinSpace::pair_index(nx, j, i)
        },
    )
}

/// Point mass `δ_x`.
pub fn delta(x: &FinSpace, label: &str) -> Result<State> {
    let i = x.require_index(label)?;
    Ok(delta_at(x, i))
}

pub fn delta_at(x: &FinSpace, index: usize) -> State {
    State::assemble(x.clone(), point_row(x.len(), index))
}

/// `(X⊗Y)⊗Z -> X⊗(Y⊗Z)`.
pub fn associator(x: &FinSpace, y: &FinSpace, z: &FinSpace) -> Kernel {
    let left = FinSpace::product(&FinSpace::product(x, y), z);
    let right = FinSpace::product(x, &FinSpace::product(y, z));
    // Lexicographic order makes the flat index identical on both sides.
    Kernel::deterministic(left, right, |k| k)
}

/// `X⊗(Y⊗Z) -> (X⊗Y)⊗Z`.
pub fn associator_inv(x: &FinSpace, y: &FinSpace, z: &FinSpace) -> Kernel {
    let left = FinSpace::product(&FinSpace::product(x, y), z);
    let right = FinSpace::product(x, &FinSpace::product(y, z));
    Kernel::deterministic(right, left, |k| k)
}

/// `I⊗X -> X`.
pub fn left_unitor(x: &FinSpace) -> Kernel {
    Kernel::deterministic(FinSpace::product(&FinSpace::unit(), x), x.clone(), |k| k)
}

/// `X -> I⊗X`.
pub fn left_unitor_inv(x: &FinSpace) -> Kernel {
    Kernel::deterministic(x.clone(), FinSpace::product(&FinSpace::unit(), x), |k| k)
}

/// `X⊗I -> X`.
pub fn right_unitor(x: &FinSpace) -> Kernel {
    Kernel::deterministic(FinSpace::product(x, &FinSpace::unit()), x.clone(), |k| k)
}

/// `X -> X⊗I`.
pub fn right_unitor_inv(x: &FinSpace) -> Kernel {
    Kernel::deterministic(x.clone(), FinSpace::product(x, &FinSpace::unit()), |k| k)
}

/// First projection `X⊗Y -> X`, i.e. `(id ⊗ del) ; ρ`.
pub fn proj_left(x: &FinSpace, y: &FinSpace) -> Kernel {
    let ny = y.len();
    Kernel::deterministic(FinSpace::product(x, y), x.clone(), |k| k / ny)
}

/// Second projection `X⊗Y -> Y`.
pub fn proj_right(x: &FinSpace, y: &FinSpace) -> Kernel {
    let ny = y.len();
    Kernel::deterministic(FinSpace::product(x, y), y.clone(), |k| k % ny)
}

/// `(A⊗B)⊗(C⊗D) -> (A⊗C)⊗(B⊗D)`, the middle-four interchange.
pub fn middle_swap(a: &FinSpace, b: &FinSpace, c: &FinSpace, d: &FinSpace) -> Kernel {
    let (nb, nc, nd) = (b.len(), c.len(), d.len());
    let src = FinSpace::product(&FinSpace::product(a, b), &FinSpace::product(c, d));
    let tgt = FinSpace::product(&FinSpace::product(a, c), &FinSpace::product(b, d));
    Kernel::deterministic(src, tgt, |k| {
        let (ab, cd) = (k / (nc * nd), k % (nc * nd));
        let (ia, ib) = (ab / nb, ab % nb);
        let (ic, id) = (cd / nd, cd % nd);
        (ia * nc + ic) * (nb * nd) + (ib * nd + id)
    })
}

// JSON documents ----------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct SpaceDoc {
    name: String,
    elements: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    factors: Option<Box<(SpaceDoc, SpaceDoc)>>,
}

impl From<&FinSpace> for SpaceDoc {
    fn from(s: &FinSpace) -> Self {
        SpaceDoc {
            name: s.name().to_string(),
            elements: s.elements().to_vec(),
            factors: s
                .factors()
                .map(|(a, b)| Box::new((SpaceDoc::from(a), SpaceDoc::from(b)))),
        }
    }
}

impl TryFrom<SpaceDoc> for FinSpace {
    type Error = Error;

    fn try_from(doc: SpaceDoc) -> Result<Self> {
        match doc.factors {
            None => {
                if doc.name == UNIT_NAME && doc.elements == [UNIT_ELEMENT] {
                    Ok(FinSpace::unit())
                } else {
                    FinSpace::new(doc.name, doc.elements)
                }
            }
            Some(pair) => {
                let (a, b) = *pair;
                let space = FinSpace::product(&a.try_into()?, &b.try_into()?);
                if space.name() != doc.name || space.elements() != doc.elements.as_slice() {
                    return Err(Error::InvalidSpace(format!(
                        "product `{}` does not match its factors",
                        doc.name
                    )));
                }
                Ok(space)
            }
        }
    }
}

impl Serialize for FinSpace {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        SpaceDoc::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for FinSpace {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let doc = SpaceDoc::deserialize(deserializer)?;
        FinSpace::try_from(doc).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct KernelDoc {
    source: FinSpace,
    target: FinSpace,
    rows: Vec<Vec<Rat>>,
}

impl Serialize for Kernel {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = serializer.serialize_struct("Kernel", 3)?;
        st.serialize_field("source", &self.source)?;
        st.serialize_field("target", &self.target)?;
        st.serialize_field("rows", &self.rows)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for Kernel {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let doc = KernelDoc::deserialize(deserializer)?;
        Kernel::new(doc.source, doc.target, doc.rows).map_err(serde::de::Error::custom)
    }
}

impl Serialize for State {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for State {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let k = Kernel::deserialize(deserializer)?;
        State::from_kernel(k).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(p: i64, q: i64) -> Rat {
        Rat::new(p, q)
    }

    fn space(name: &str, n: usize) -> FinSpace {
        FinSpace::new(name, (0..n).map(|i| format!("{}{i}", name.to_lowercase()))).unwrap()
    }

    fn kernel(src: &FinSpace, tgt: &FinSpace, rows: &[&[(i64, i64)]]) -> Kernel {
        Kernel::new(
            src.clone(),
            tgt.clone(),
            rows.iter()
                .map(|row| row.iter().map(|&(p, q)| r(p, q)).collect())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn space_validation() {
        assert!(FinSpace::new("X", Vec::<String>::new()).is_err());
        assert!(FinSpace::new("X", ["a", "a"]).is_err());
        assert!(FinSpace::new("X", ["a⊗b"]).is_err());
        assert!(FinSpace::new("", ["a"]).is_err());
        let x = FinSpace::new("X", ["a", "b"]).unwrap();
        let y = FinSpace::new("X", ["b", "a"]).unwrap();
        assert_ne!(x, y);
        assert!(FinSpace::unit().is_unit());
    }

    #[test]
    fn product_labels() {
        let x = space("X", 2);
        let y = space("Y", 2);
        let xy = FinSpace::product(&x, &y);
        assert_eq!(xy.name(), "X⊗Y");
        assert_eq!(xy.elements(), ["x0⊗y0", "x0⊗y1", "x1⊗y0", "x1⊗y1"]);
        let nested = FinSpace::product(&xy, &x);
        assert_eq!(nested.name(), "(X⊗Y)⊗X");
        assert_eq!(nested.elements()[0], "(x0⊗y0)⊗x0");
    }

    #[test]
    fn rejects_non_stochastic_rows() {
        let x = space("X", 1);
        let y = space("Y", 2);
        let err = Kernel::new(x.clone(), y.clone(), vec![vec![r(1, 2), r(1, 3)]]).unwrap_err();
        assert!(matches!(err, Error::NotStochastic { .. }));
        let err = Kernel::new(x.clone(), y.clone(), vec![vec![r(3, 2), r(-1, 2)]]).unwrap_err();
        assert!(matches!(err, Error::NotStochastic { .. }));
        assert!(matches!(
            Kernel::new(x, y, vec![vec![Rat::one()]]).unwrap_err(),
            Error::Shape(_)
        ));
    }

    #[test]
    fn compose_worked_example() {
        let x = space("X", 2);
        let y = space("Y", 2);
        let z = space("Z", 2);
        let f = kernel(&x, &y, &[&[(3, 4), (1, 4)], &[(1, 2), (1, 2)]]);
        let g = kernel(&y, &z, &[&[(1, 2), (1, 2)], &[(0, 1), (1, 1)]]);
        let fg = compose(&f, &g).unwrap();
        assert_eq!(fg.rows(), kernel(&x, &z, &[&[(3, 8), (5, 8)], &[(1, 4), (3, 4)]]).rows());
        assert_eq!(compose(&identity(&x), &f).unwrap(), f);
        assert_eq!(compose(&f, &del(&y)).unwrap(), del(&x));
        assert!(matches!(compose(&g, &g.clone().retype(x.clone(), z.clone())), Err(Error::SpaceMismatch { .. })));
    }

    #[test]
    fn tensor_of_states() {
        let x = space("X", 2);
        let y = space("Y", 2);
        let pi = State::new(x.clone(), vec![r(1, 2), r(1, 2)]).unwrap();
        let rho = State::new(y.clone(), vec![r(1, 3), r(2, 3)]).unwrap();
        let joint = pi.tensor(&rho);
        assert_eq!(joint.probs(), [r(1, 6), r(1, 3), r(1, 6), r(1, 3)]);
        assert_eq!(joint.space(), &FinSpace::product(&x, &y));
        assert_eq!(tensor(&identity(&x), &identity(&y)), identity(&FinSpace::product(&x, &y)));
    }

    #[test]
    fn copy_and_delta() {
        let x = space("X", 2);
        let pi = State::new(x.clone(), vec![r(1, 2), r(1, 2)]).unwrap();
        assert_eq!(pi.push(&copy(&x)).unwrap().probs(), [r(1, 2), r(0, 1), r(0, 1), r(1, 2)]);
        assert_eq!(compose(&copy(&x), &swap(&x, &x)).unwrap(), copy(&x));
        let d = delta(&x, "x0").unwrap();
        assert_eq!(d.probs(), [Rat::one(), Rat::zero()]);
        assert!(matches!(delta(&x, "nope"), Err(Error::UnknownLabel { .. })));
        let y = space("Y", 3);
        let sw = compose(&swap(&x, &y), &swap(&y, &x)).unwrap();
        assert_eq!(sw, identity(&FinSpace::product(&x, &y)));
    }

    #[test]
    fn kleisli_unit() {
        let x = space("X", 2);
        let y = space("Y", 3);
        let f = kernel(&x, &y, &[&[(1, 3), (1, 3), (1, 3)], &[(0, 1), (1, 4), (3, 4)]]);
        let d = delta(&x, "x1").unwrap();
        assert_eq!(d.push(&f).unwrap().probs(), f.row(1));
    }

    #[test]
    fn middle_swap_reindexes() {
        let a = space("A", 2);
        let b = space("B", 3);
        let c = space("C", 2);
        let d = space("D", 2);
        let m = middle_swap(&a, &b, &c, &d);
        let src = m.source().clone();
        for (k, label) in src.elements().iter().enumerate() {
            let j = m.row(k).iter().position(Rat::is_one).unwrap();
            // (a⊗b)⊗(c⊗d) ↦ (a⊗c)⊗(b⊗d)
            let parts: Vec<&str> = label
                .split(['⊗', '(', ')'])
                .filter(|s| !s.is_empty())
                .collect();
            let expect = format!("({}⊗{})⊗({}⊗{})", parts[0], parts[2], parts[1], parts[3]);
            assert_eq!(m.target().elements()[j], expect);
        }
    }

    #[test]
    fn json_round_trip() {
        let x = space("X", 2);
        let y = FinSpace::product(&x, &space("Y", 2));
        let f = kernel(
            &x,
            &y,
            &[&[(3, 8), (1, 8), (1, 4), (1, 4)], &[(1, 1), (0, 1), (0, 1), (0, 1)]],
        );
        let s = serde_json::to_string(&f).unwrap();
        assert!(s.contains("\"rows\":[[\"3/8\",\"1/8\",\"1/4\",\"1/4\"]"));
        let back: Kernel = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
        assert_eq!(serde_json::to_string(&back).unwrap(), s);

        let bad = s.replace("\"3/8\"", "\"1/2\"");
        assert!(serde_json::from_str::<Kernel>(&bad).is_err());
    }
}
