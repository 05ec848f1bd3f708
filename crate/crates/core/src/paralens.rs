//! Parametrized morphisms over PS(FinStoch), statistical lenses, the functor
//! `R : PS -> Lens_Stat` and `BayesLearn = Para(R)`.
//!
//! FinStoch acts on itself by the monoidal product, so a parametrized
//! morphism `X -> Y` with parameter `(P, π_P)` is a PS-morphism
//! `(P, π_P) ⊗ (X, π_X) -> (Y, π_Y)`. Lenses are plain pairs
//! (forward, backward) of PS-morphisms: `Lens_Stat ≃ PS × PS^op`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ps::{dagger, ps_compose, ps_tensor, PSMorphism, PSObject};

fn mismatch(what: &str) -> Error {
    Error::ObjectMismatch(what.to_string())
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "ParaDoc")]
pub struct ParaMorphism {
    param: PSObject,
    src: PSObject,
    dst: PSObject,
    body: PSMorphism,
}

#[derive(Deserialize)]
struct ParaDoc {
    param: PSObject,
    src: PSObject,
    dst: PSObject,
    body: PSMorphism,
}

impl TryFrom<ParaDoc> for ParaMorphism {
    type Error = Error;
    fn try_from(d: ParaDoc) -> Result<Self> {
        ParaMorphism::new(d.param, d.src, d.dst, d.body)
    }
}

impl ParaMorphism {
    pub fn new(param: PSObject, src: PSObject, dst: PSObject, body: PSMorphism) -> Result<Self> {
        if body.src() != &param.tensor(&src) {
            return Err(mismatch("body source must be param ⊗ src"));
        }
        if body.dst() != &dst {
            return Err(mismatch("body target must be dst"));
        }
        Ok(ParaMorphism {
            param,
            src,
            dst,
            body,
        })
    }

    /// Build from a body whose source is a product `param ⊗ src`.
    pub fn from_body(param: &PSObject, src: &PSObject, body: PSMorphism) -> Result<Self> {
        let dst = body.dst().clone();
        ParaMorphism::new(param.clone(), src.clone(), dst, body)
    }

    /// The embedding `j`: `f` with the trivial parameter `(I, ι)`.
    pub fn trivial(f: &PSMorphism) -> Self {
        let body = ps_compose(&PSMorphism::left_unitor(f.src()), f).expect("unitor lands on src");
        ParaMorphism {
            param: PSObject::unit(),
            src: f.src().clone(),
            dst: f.dst().clone(),
            body,
        }
    }

    pub fn param(&self) -> &PSObject {
        &self.param
    }

    pub fn src(&self) -> &PSObject {
        &self.src
    }

    pub fn dst(&self) -> &PSObject {
        &self.dst
    }

    pub fn body(&self) -> &PSMorphism {
        &self.body
    }
}

/// `g ∘ f` with parameter `Q ⊗ P`:
/// `(Q⊗P)⊗X ≅ Q⊗(P⊗X) --id⊗f--> Q⊗Y --g--> Z`.
pub fn para_compose(f: &ParaMorphism, g: &ParaMorphism) -> Result<ParaMorphism> {
    if f.dst != g.src {
        return Err(mismatch("para_compose: f.dst != g.src"));
    }
    let assoc = PSMorphism::associator(&g.param, &f.param, &f.src);
    let lifted = ps_tensor(&PSMorphism::identity(&g.param), &f.body);
    let body = ps_compose(&ps_compose(&assoc, &lifted)?, &g.body)?;
    ParaMorphism::new(g.param.tensor(&f.param), f.src.clone(), g.dst.clone(), body)
}

/// Pull the parameter back along `α : Q -> P`: body becomes `(α ⊗ id) ; body`.
pub fn reparametrize(f: &ParaMorphism, alpha: &PSMorphism) -> Result<ParaMorphism> {
    if alpha.dst() != &f.param {
        return Err(mismatch("reparametrize: α must land on the parameter"));
    }
    let pre = ps_tensor(alpha, &PSMorphism::identity(&f.src));
    let body = ps_compose(&pre, &f.body)?;
    ParaMorphism::new(alpha.src().clone(), f.src.clone(), f.dst.clone(), body)
}

/// A morphism of `Lens_Stat`: forward `A -> B` and backward `B -> A`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "LensDoc")]
pub struct LensMorphism {
    forward: PSMorphism,
    backward: PSMorphism,
}

#[derive(Deserialize)]
struct LensDoc {
    forward: PSMorphism,
    backward: PSMorphism,
}

impl TryFrom<LensDoc> for LensMorphism {
    type Error = Error;
    fn try_from(d: LensDoc) -> Result<Self> {
        LensMorphism::new(d.forward, d.backward)
    }
}

impl LensMorphism {
    pub fn new(forward: PSMorphism, backward: PSMorphism) -> Result<Self> {
        if forward.src() != backward.dst() || forward.dst() != backward.src() {
            return Err(mismatch("lens: backward must run dst -> src"));
        }
        Ok(LensMorphism { forward, backward })
    }

    pub fn identity(obj: &PSObject) -> Self {
        let id = PSMorphism::identity(obj);
        LensMorphism {
            forward: id.clone(),
            backward: id,
        }
    }

    pub fn forward(&self) -> &PSMorphism {
        &self.forward
    }

    pub fn backward(&self) -> &PSMorphism {
        &self.backward
    }

    pub fn src(&self) -> &PSObject {
        self.forward.src()
    }

    pub fn dst(&self) -> &PSObject {
        self.forward.dst()
    }
}

pub fn lens_compose(l1: &LensMorphism, l2: &LensMorphism) -> Result<LensMorphism> {
    if l1.dst() != l2.src() {
        return Err(mismatch("lens_compose: l1 target != l2 source"));
    }
    Ok(LensMorphism {
        forward: ps_compose(&l1.forward, &l2.forward)?,
        backward: ps_compose(&l2.backward, &l1.backward)?,
    })
}

/// Componentwise monoidal product of lenses.
pub fn lens_tensor(l1: &LensMorphism, l2: &LensMorphism) -> LensMorphism {
    LensMorphism {
        forward: ps_tensor(&l1.forward, &l2.forward),
        backward: ps_tensor(&l1.backward, &l2.backward),
    }
}

/// `R(f) = (f, f†)`.
pub fn functor_r(f: &PSMorphism) -> LensMorphism {
    LensMorphism {
        forward: f.clone(),
        backward: dagger(f),
    }
}

/// A morphism of `Para_PS(Lens_Stat)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "ParaLensDoc")]
pub struct ParaLensMorphism {
    param: PSObject,
    src: PSObject,
    dst: PSObject,
    lens: LensMorphism,
}

#[derive(Deserialize)]
struct ParaLensDoc {
    param: PSObject,
    src: PSObject,
    dst: PSObject,
    lens: LensMorphism,
}

impl TryFrom<ParaLensDoc> for ParaLensMorphism {
    type Error = Error;
    fn try_from(d: ParaLensDoc) -> Result<Self> {
        ParaLensMorphism::new(d.param, d.src, d.dst, d.lens)
    }
}

impl ParaLensMorphism {
    pub fn new(param: PSObject, src: PSObject, dst: PSObject, lens: LensMorphism) -> Result<Self> {
        if lens.src() != &param.tensor(&src) || lens.dst() != &dst {
            return Err(mismatch("para-lens shape"));
        }
        Ok(ParaLensMorphism {
            param,
            src,
            dst,
            lens,
        })
    }

    /// `j` on lenses: trivial parameter, precomposed with `R(λ)`.
    pub fn trivial(lens: &LensMorphism) -> Self {
        let unitor = functor_r(&PSMorphism::left_unitor(lens.src()));
        ParaLensMorphism {
            param: PSObject::unit(),
            src: lens.src().clone(),
            dst: lens.dst().clone(),
            lens: lens_compose(&unitor, lens).expect("unitor lands on src"),
        }
    }

    pub fn param(&self) -> &PSObject {
        &self.param
    }

    pub fn src(&self) -> &PSObject {
        &self.src
    }

    pub fn dst(&self) -> &PSObject {
        &self.dst
    }

    pub fn lens(&self) -> &LensMorphism {
        &self.lens
    }
}

/// Composition in `Para_PS(Lens_Stat)`; the parameter acts on lenses via
/// `Q ⊗ l = R(id_Q) ⊗ l`.
pub fn para_lens_compose(f: &ParaLensMorphism, g: &ParaLensMorphism) -> Result<ParaLensMorphism> {
    if f.dst != g.src {
        return Err(mismatch("para_lens_compose: f.dst != g.src"));
    }
    let assoc = functor_r(&PSMorphism::associator(&g.param, &f.param, &f.src));
    let lifted = lens_tensor(&LensMorphism::identity(&g.param), &f.lens);
    let lens = lens_compose(&lens_compose(&assoc, &lifted)?, &g.lens)?;
    ParaLensMorphism::new(g.param.tensor(&f.param), f.src.clone(), g.dst.clone(), lens)
}

/// Reparametrize a para-lens along `α : Q -> P` by precomposing with `R(α ⊗ id)`.
pub fn reparametrize_lens(f: &ParaLensMorphism, alpha: &PSMorphism) -> Result<ParaLensMorphism> {
    if alpha.dst() != &f.param {
        return Err(mismatch("reparametrize_lens: α must land on the parameter"));
    }
    let pre = functor_r(&ps_tensor(alpha, &PSMorphism::identity(&f.src)));
    let lens = lens_compose(&pre, &f.lens)?;
    ParaLensMorphism::new(alpha.src().clone(), f.src.clone(), f.dst.clone(), lens)
}

/// `BayesLearn(f) = (f, f†)` with the same parameter.
pub fn bayes_learn(f: &ParaMorphism) -> ParaLensMorphism {
    ParaLensMorphism {
        param: f.param.clone(),
        src: f.src.clone(),
        dst: f.dst.clone(),
        lens: functor_r(&f.body),
    }
}
