//! Compactly induced vectors and the Hecke operators on them.
//!
//! Iwahori side: finitely supported sums of symbols [[g, c]] over canonical
//! edge representatives, scalar values, with the operators
//!
//!   T10 [[g, 1]] = [[g b, 1]]                      (b the beta element)
//!   T12 [[g, 1]] = sum over digits l of [[g (1, 0; wl, w), 1]]
//!   Tm10 [[g, v]] = sum over digits l of [[g (w, l; 0, 1), v]]
//!
//! extended linearly, every insertion re-canonicalized through the coset
//! reduction. Spherical side: symbols [g, v] over vertex representatives
//! with values in the trivial weight, the small weight V_(p-1)-tensor, or
//! the theta quotient; inserting [g k, v] transports the value through the
//! residue of the witness, with the central uniformizer acting trivially.
//!
//! The spherical operator is pinned by its formula on the trivial weight
//! (q+1 terms) and on the generator X^(p-1)-tensor of the small weight
//! (q terms); general small values are first decomposed over lower-unipotent
//! translates of the generator, which is the unique linear equivariant
//! extension. On the quotient it acts summand-wise through the verified
//! decomposition.
//!
//! Finite-depth spans of operator images give one-sided certificates:
//! membership found means true ideal membership (with an explicit
//! combination), not found means inconclusive at this depth.

use crate::cosets::{self, EdgeRep, VertexRep};
use crate::gf::{Fq, Gf, Mat2};
use crate::linalg::{self, Inserted, SpanBuilder, SparseVec, VectorSpaceBasis};
use crate::localfield::{LocalField, LocalMat};
use crate::par;
use crate::weights::{self, ComparisonCtx, MultiHomogPoly, Summand, TranslateBasis};
use crate::{Error, Result};
use std::collections::BTreeMap;

/// Finitely supported vector in the Iwahori induction with trivial character.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IwahoriVec {
    pub terms: BTreeMap<EdgeRep, Fq>,
}

impl IwahoriVec {
    pub fn zero() -> IwahoriVec {
        IwahoriVec::default()
    }

    pub fn basis(rep: EdgeRep) -> IwahoriVec {
        let mut v = IwahoriVec::zero();
        v.terms.insert(rep, Fq::ONE);
        v
    }

    /// The identity-coset generator [[id, 1]].
    pub fn unit() -> IwahoriVec {
        IwahoriVec::basis(EdgeRep {
            vertex: VertexRep::origin(),
            fiber: cosets::Fiber::Unip(Fq::ZERO),
        })
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_depth(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.depth()).max()
    }

    pub fn add_term(&mut self, gf: &Gf, rep: EdgeRep, c: Fq) {
        if c.is_zero() {
            return;
        }
        match self.terms.remove(&rep) {
            None => {
                self.terms.insert(rep, c);
            }
            Some(old) => {
                let sum = gf.add(old, c);
                if !sum.is_zero() {
                    self.terms.insert(rep, sum);
                }
            }
        }
    }

    /// Insert [[g, c]] for an arbitrary group element; the trivial character
    /// makes the witness transport trivial.
    pub fn insert_raw(&mut self, lf: &LocalField, g: &LocalMat, c: Fq) -> Result<()> {
        if c.is_zero() {
            return Ok(());
        }
        let (rep, _k) = cosets::reduce_edge(lf, g)?;
        self.add_term(&lf.gf, rep, c);
        Ok(())
    }

    pub fn add(&self, gf: &Gf, o: &IwahoriVec) -> IwahoriVec {
        let mut out = self.clone();
        for (rep, &c) in &o.terms {
            out.add_term(gf, rep.clone(), c);
        }
        out
    }

    pub fn scale(&self, gf: &Gf, c: Fq) -> IwahoriVec {
        if c.is_zero() {
            return IwahoriVec::zero();
        }
        IwahoriVec {
            terms: self
                .terms
                .iter()
                .map(|(k, &v)| (k.clone(), gf.mul(c, v)))
                .collect(),
        }
    }

    pub fn sub(&self, gf: &Gf, o: &IwahoriVec) -> IwahoriVec {
        self.add(gf, &o.scale(gf, gf.neg(Fq::ONE)))
    }

    /// Sparse coordinates over the frozen enumeration order.
    pub fn to_sparse(&self, q: u32) -> SparseVec {
        self.terms
            .iter()
            .map(|(rep, &c)| (rep.ord_key(q), c))
            .collect()
    }
}

/// Left action h . [[g, v]] = [[h g, v]].
pub fn iwahori_g_act(lf: &LocalField, h: &LocalMat, v: &IwahoriVec) -> Result<IwahoriVec> {
    if h.det(lf).is_zero() {
        return Err(Error::SingularMatrix);
    }
    let mut out = IwahoriVec::zero();
    for (rep, &c) in &v.terms {
        let g = h.mul(lf, &rep.materialize(lf));
        out.insert_raw(lf, &g, c)?;
    }
    Ok(out)
}

fn assert_depth_growth(input: Option<u32>, output: Option<u32>) {
    if let (Some(i), Some(o)) = (input, output) {
        assert!(o <= i + 1, "operator moved depth by more than one");
    } else if let (None, Some(_)) = (input, output) {
        panic!("operator created support from zero");
    }
}

/// T10: right multiplication by beta on the support.
pub fn t10(lf: &LocalField, v: &IwahoriVec) -> IwahoriVec {
    let beta = LocalMat::beta(lf);
    let mut out = IwahoriVec::zero();
    for (rep, &c) in &v.terms {
        let g = rep.materialize(lf).mul(lf, &beta);
        out.insert_raw(lf, &g, c).expect("invertible");
    }
    assert_depth_growth(v.max_depth(), out.max_depth());
    out
}

/// T12: the q-term digit sum with matrices (1, 0; w l, w).
pub fn t12(lf: &LocalField, v: &IwahoriVec) -> IwahoriVec {
    let mut out = IwahoriVec::zero();
    let pi = lf.uniformizer();
    for (rep, &c) in &v.terms {
        let g = rep.materialize(lf);
        for (_mu, lift) in lf.digit_set() {
            let m = LocalMat([lf.one(), lf.zero(), lf.mul(&pi, &lift), pi.clone()]);
            out.insert_raw(lf, &g.mul(lf, &m), c).expect("invertible");
        }
    }
    assert_depth_growth(v.max_depth(), out.max_depth());
    out
}

/// Tm10: the q-term digit sum with matrices (w, l; 0, 1).
pub fn tm10(lf: &LocalField, v: &IwahoriVec) -> IwahoriVec {
    let mut out = IwahoriVec::zero();
    let pi = lf.uniformizer();
    for (rep, &c) in &v.terms {
        let g = rep.materialize(lf);
        for (_mu, lift) in lf.digit_set() {
            let m = LocalMat([pi.clone(), lift, lf.zero(), lf.one()]);
            out.insert_raw(lf, &g.mul(lf, &m), c).expect("invertible");
        }
    }
    assert_depth_growth(v.max_depth(), out.max_depth());
    out
}

/// Alphabet of the operator words.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Letter {
    T10,
    T12,
    Tm10,
}

impl Letter {
    fn apply(self, lf: &LocalField, v: &IwahoriVec) -> IwahoriVec {
        match self {
            Letter::T10 => t10(lf, v),
            Letter::T12 => t12(lf, v),
            Letter::Tm10 => tm10(lf, v),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Letter::T10 => "T10",
            Letter::T12 => "T12",
            Letter::Tm10 => "Tm10",
        }
    }
}

/// Formal linear combination of composition words. A word [a, b] denotes the
/// composition a after b; evaluation applies letters right to left.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OperatorWord {
    pub terms: Vec<(Fq, Vec<Letter>)>,
}

impl OperatorWord {
    pub fn zero() -> OperatorWord {
        OperatorWord { terms: Vec::new() }
    }

    pub fn identity() -> OperatorWord {
        OperatorWord {
            terms: vec![(Fq::ONE, Vec::new())],
        }
    }

    pub fn letter(l: Letter) -> OperatorWord {
        OperatorWord {
            terms: vec![(Fq::ONE, vec![l])],
        }
    }

    pub fn t10() -> OperatorWord {
        OperatorWord::letter(Letter::T10)
    }
    pub fn t12() -> OperatorWord {
        OperatorWord::letter(Letter::T12)
    }
    pub fn tm10() -> OperatorWord {
        OperatorWord::letter(Letter::Tm10)
    }

    fn normalized(mut self, gf: &Gf) -> OperatorWord {
        self.terms
            .sort_by(|a, b| (a.1.len(), &a.1).cmp(&(b.1.len(), &b.1)));
        let mut out: Vec<(Fq, Vec<Letter>)> = Vec::with_capacity(self.terms.len());
        for (c, w) in self.terms {
            match out.last_mut() {
                Some(last) if last.1 == w => last.0 = gf.add(last.0, c),
                _ => out.push((c, w)),
            }
        }
        out.retain(|(c, _)| !c.is_zero());
        OperatorWord { terms: out }
    }

    pub fn add(&self, gf: &Gf, o: &OperatorWord) -> OperatorWord {
        let mut terms = self.terms.clone();
        terms.extend(o.terms.iter().cloned());
        OperatorWord { terms }.normalized(gf)
    }

    pub fn scale(&self, gf: &Gf, c: Fq) -> OperatorWord {
        OperatorWord {
            terms: self
                .terms
                .iter()
                .map(|(a, w)| (gf.mul(c, *a), w.clone()))
                .collect(),
        }
        .normalized(gf)
    }

    pub fn sub(&self, gf: &Gf, o: &OperatorWord) -> OperatorWord {
        self.add(gf, &o.scale(gf, gf.neg(Fq::ONE)))
    }

    /// Composition: self after other.
    pub fn compose(&self, gf: &Gf, o: &OperatorWord) -> OperatorWord {
        let mut terms = Vec::with_capacity(self.terms.len() * o.terms.len());
        for (c1, w1) in &self.terms {
            for (c2, w2) in &o.terms {
                let mut w = w1.clone();
                w.extend(w2.iter().copied());
                terms.push((gf.mul(*c1, *c2), w));
            }
        }
        OperatorWord { terms }.normalized(gf)
    }

    pub fn square(&self, gf: &Gf) -> OperatorWord {
        self.compose(gf, self)
    }

    pub fn max_len(&self) -> usize {
        self.terms.iter().map(|(_, w)| w.len()).max().unwrap_or(0)
    }

    /// Linear evaluation; the identity word acts as the identity.
    pub fn eval(&self, lf: &LocalField, v: &IwahoriVec) -> IwahoriVec {
        let gf = &lf.gf;
        let mut acc = IwahoriVec::zero();
        for (c, word) in &self.terms {
            let mut cur = v.clone();
            for l in word.iter().rev() {
                cur = l.apply(lf, &cur);
            }
            acc = acc.add(gf, &cur.scale(gf, *c));
        }
        acc
    }
}

impl std::fmt::Display for OperatorWord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (c, w)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            if *c != Fq::ONE || w.is_empty() {
                write!(f, "{}", c.0)?;
                if !w.is_empty() {
                    write!(f, "*")?;
                }
            }
            if w.is_empty() {
                if *c == Fq::ONE {
                    write!(f, "Id")?;
                } else {
                    write!(f, "*Id")?;
                }
            } else {
                for (k, l) in w.iter().enumerate() {
                    if k > 0 {
                        write!(f, "*")?;
                    }
                    write!(f, "{}", l.name())?;
                }
            }
        }
        Ok(())
    }
}

/// A depth-truncated span of operator images of basis edges, optionally with
/// generator certificates. Generators are inserted edge-major in enumeration
/// order, then word-major in the given order.
pub struct OperatorSpan {
    pub words: Vec<OperatorWord>,
    pub edges: Vec<EdgeRep>,
    pub depth: u32,
    pub span: SpanBuilder,
    /// images in insertion order, kept for certificate re-expansion
    pub images: Vec<SparseVec>,
    /// (word index, edge index) in insertion order
    pub gens: Vec<(usize, usize)>,
}

/// A certified membership: coefficients over (word, edge) generators that
/// re-expand exactly to the tested vector.
#[derive(Debug, Clone)]
pub struct Certificate {
    pub combination: Vec<(usize, usize, Fq)>,
}

impl OperatorSpan {
    pub fn build(
        lf: &LocalField,
        words: Vec<OperatorWord>,
        depth: u32,
        with_certificates: bool,
    ) -> OperatorSpan {
        let q = lf.q();
        let edges = cosets::enumerate_edges(q, depth);
        let pairs: Vec<(usize, usize)> = edges
            .iter()
            .enumerate()
            .flat_map(|(e, _)| (0..words.len()).map(move |w| (w, e)))
            .collect();
        let images = par::map_vec(&pairs, |&(w, e)| {
            words[w]
                .eval(lf, &IwahoriVec::basis(edges[e].clone()))
                .to_sparse(q)
        });
        let mut span = SpanBuilder::new(with_certificates);
        for img in &images {
            span.insert(&lf.gf, img.clone());
        }
        OperatorSpan {
            words,
            edges,
            depth,
            span,
            images,
            gens: pairs,
        }
    }

    /// Certified membership of an Iwahori vector in the span. A `Some`
    /// answer is re-checked by re-expansion before being returned.
    pub fn membership(&self, lf: &LocalField, v: &IwahoriVec) -> Option<Certificate> {
        let gf = &lf.gf;
        let target = v.to_sparse(lf.q());
        let combo = self.span.membership(gf, &target)?;
        let mut acc: SparseVec = Vec::new();
        for &(g, c) in &combo {
            acc = linalg::sparse_add_scaled(gf, &acc, &self.images[g as usize], c);
        }
        assert_eq!(acc, target, "certificate failed re-expansion");
        Some(Certificate {
            combination: combo
                .into_iter()
                .map(|(g, c)| {
                    let (w, e) = self.gens[g as usize];
                    (w, e, c)
                })
                .collect(),
        })
    }

    /// Canonical reduced basis of the span over the frozen coordinates.
    pub fn rref(&self, lf: &LocalField) -> Vec<SparseVec> {
        self.span.to_rref(&lf.gf)
    }
}

/// Exact kernel of an operator word restricted to inputs of depth <= n.
pub struct OperatorKernel {
    pub edges: Vec<EdgeRep>,
    /// canonical basis in input-edge coordinates
    pub basis: VectorSpaceBasis,
    /// the same vectors as Iwahori combinations
    pub vectors: Vec<IwahoriVec>,
}

pub fn operator_kernel(lf: &LocalField, word: &OperatorWord, depth: u32) -> OperatorKernel {
    let gf = &lf.gf;
    let q = lf.q();
    let edges = cosets::enumerate_edges(q, depth);
    let images = par::map_vec(&edges, |e| {
        word.eval(lf, &IwahoriVec::basis(e.clone())).to_sparse(q)
    });
    let mut span = SpanBuilder::new(true);
    let mut raw_kernel: Vec<Vec<Fq>> = Vec::new();
    for (i, img) in images.iter().enumerate() {
        match span.insert(gf, img.clone()) {
            Inserted::NewPivot => {}
            Inserted::Dependent(Some(expr)) => {
                // image_i = sum expr; kernel vector e_i - expr
                let mut v = vec![Fq::ZERO; edges.len()];
                v[i] = Fq::ONE;
                for (g, c) in expr {
                    v[g as usize] = gf.sub(v[g as usize], c);
                }
                raw_kernel.push(v);
            }
            Inserted::Dependent(None) => unreachable!("certificates enabled"),
        }
    }
    let basis = linalg::echelonize(gf, &raw_kernel, edges.len()).expect("uniform lengths");
    let vectors = basis
        .rows
        .iter()
        .map(|row| {
            let mut v = IwahoriVec::zero();
            for (e, &c) in edges.iter().zip(row) {
                v.add_term(gf, e.clone(), c);
            }
            // exactness: the word annihilates the combination
            debug_assert!(word.eval(lf, &v).is_zero());
            v
        })
        .collect();
    OperatorKernel {
        edges,
        basis,
        vectors,
    }
}

/// Values carried by the spherical side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SphVal {
    /// trivial weight
    Scalar(Fq),
    /// the small weight V_(p-1)-tensor
    Poly(MultiHomogPoly),
    /// quotient coordinates in the theta quotient
    Coords(Vec<Fq>),
}

impl SphVal {
    fn is_zero(&self) -> bool {
        match self {
            SphVal::Scalar(c) => c.is_zero(),
            SphVal::Poly(p) => p.is_zero(),
            SphVal::Coords(v) => v.iter().all(|c| c.is_zero()),
        }
    }
}

/// Context for spherical-side operations: the local field plus whatever
/// weight data the value kind requires.
pub struct SphCtx<'a> {
    pub lf: &'a LocalField,
    pub translates: Option<&'a TranslateBasis>,
    pub comp: Option<&'a ComparisonCtx<'a>>,
}

impl<'a> SphCtx<'a> {
    pub fn trivial(lf: &'a LocalField) -> SphCtx<'a> {
        SphCtx {
            lf,
            translates: None,
            comp: None,
        }
    }

    pub fn with_translates(lf: &'a LocalField, tr: &'a TranslateBasis) -> SphCtx<'a> {
        SphCtx {
            lf,
            translates: Some(tr),
            comp: None,
        }
    }

    pub fn with_comparison(lf: &'a LocalField, comp: &'a ComparisonCtx<'a>) -> SphCtx<'a> {
        SphCtx {
            lf,
            translates: Some(&comp.translates),
            comp: Some(comp),
        }
    }

    fn gf(&self) -> &Gf {
        &self.lf.gf
    }

    fn transport(&self, kbar: &Mat2, val: &SphVal) -> Result<SphVal> {
        Ok(match val {
            SphVal::Scalar(c) => SphVal::Scalar(*c),
            SphVal::Poly(p) => SphVal::Poly(weights::gl2_act(self.gf(), kbar, p)?),
            SphVal::Coords(v) => SphVal::Coords(
                self.comp
                    .expect("quotient values need a comparison context")
                    .act_quotient(kbar, v)?,
            ),
        })
    }

    fn add_vals(&self, a: &SphVal, b: &SphVal) -> SphVal {
        let gf = self.gf();
        match (a, b) {
            (SphVal::Scalar(x), SphVal::Scalar(y)) => SphVal::Scalar(gf.add(*x, *y)),
            (SphVal::Poly(x), SphVal::Poly(y)) => SphVal::Poly(x.add(gf, y)),
            (SphVal::Coords(x), SphVal::Coords(y)) => {
                SphVal::Coords(x.iter().zip(y).map(|(&u, &v)| gf.add(u, v)).collect())
            }
            _ => panic!("mixed spherical value kinds"),
        }
    }

    fn scale_val(&self, a: &SphVal, c: Fq) -> SphVal {
        let gf = self.gf();
        match a {
            SphVal::Scalar(x) => SphVal::Scalar(gf.mul(c, *x)),
            SphVal::Poly(x) => SphVal::Poly(x.scale(gf, c)),
            SphVal::Coords(x) => SphVal::Coords(x.iter().map(|&v| gf.mul(c, v)).collect()),
        }
    }
}

/// Finitely supported vector in a spherical induction.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SphericalVec {
    pub terms: BTreeMap<VertexRep, SphVal>,
}

impl SphericalVec {
    pub fn zero() -> SphericalVec {
        SphericalVec::default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_depth(&self) -> Option<u32> {
        self.terms.keys().map(|v| v.depth()).max()
    }

    pub fn add_term(&mut self, ctx: &SphCtx, rep: VertexRep, val: SphVal) {
        if val.is_zero() {
            return;
        }
        match self.terms.remove(&rep) {
            None => {
                self.terms.insert(rep, val);
            }
            Some(old) => {
                let sum = ctx.add_vals(&old, &val);
                if !sum.is_zero() {
                    self.terms.insert(rep, sum);
                }
            }
        }
    }

    /// Insert [g, val] with witness transport through the residue of the
    /// KZ part (the central uniformizer acts trivially).
    pub fn insert_raw(&mut self, ctx: &SphCtx, g: &LocalMat, val: &SphVal) -> Result<()> {
        if val.is_zero() {
            return Ok(());
        }
        let lf = ctx.lf;
        let (rep, k) = cosets::reduce_vertex(lf, g)?;
        let t2 = lf.val(&k.det(lf)).expect("invertible witness");
        debug_assert!(t2 % 2 == 0);
        let k0 = k.scale_pi(lf, -t2 / 2);
        let kbar = k0.residue(lf)?;
        let moved = ctx.transport(&kbar, val)?;
        self.add_term(ctx, rep, moved);
        Ok(())
    }

    pub fn add(&self, ctx: &SphCtx, o: &SphericalVec) -> SphericalVec {
        let mut out = self.clone();
        for (rep, val) in &o.terms {
            out.add_term(ctx, rep.clone(), val.clone());
        }
        out
    }

    pub fn scale(&self, ctx: &SphCtx, c: Fq) -> SphericalVec {
        if c.is_zero() {
            return SphericalVec::zero();
        }
        SphericalVec {
            terms: self
                .terms
                .iter()
                .map(|(k, v)| (k.clone(), ctx.scale_val(v, c)))
                .collect(),
        }
    }

    pub fn sub(&self, ctx: &SphCtx, o: &SphericalVec) -> SphericalVec {
        self.add(ctx, &o.scale(ctx, ctx.gf().neg(Fq::ONE)))
    }
}

/// Left action on the spherical side.
pub fn spherical_g_act(ctx: &SphCtx, h: &LocalMat, v: &SphericalVec) -> Result<SphericalVec> {
    if h.det(ctx.lf).is_zero() {
        return Err(Error::SingularMatrix);
    }
    let mut out = SphericalVec::zero();
    for (rep, val) in &v.terms {
        let g = h.mul(ctx.lf, &rep.materialize(ctx.lf));
        out.insert_raw(ctx, &g, val)?;
    }
    Ok(out)
}

fn down_matrices(lf: &LocalField) -> Vec<LocalMat> {
    let pi = lf.uniformizer();
    lf.digit_set()
        .into_iter()
        .map(|(_, lift)| LocalMat([pi.clone(), lift, lf.zero(), lf.one()]))
        .collect()
}

/// The spherical operator on the trivial weight: the q+1-term sum.
pub fn spherical_t_trivial(ctx: &SphCtx, v: &SphericalVec) -> Result<SphericalVec> {
    let lf = ctx.lf;
    let alpha = LocalMat::alpha(lf);
    let downs = down_matrices(lf);
    let mut out = SphericalVec::zero();
    for (rep, val) in &v.terms {
        let SphVal::Scalar(_) = val else {
            panic!("trivial-weight operator on a non-scalar value")
        };
        let g = rep.materialize(lf);
        for m in &downs {
            out.insert_raw(ctx, &g.mul(lf, m), val)?;
        }
        out.insert_raw(ctx, &g.mul(lf, &alpha), val)?;
    }
    assert_depth_growth(v.max_depth(), out.max_depth());
    Ok(out)
}

/// The spherical operator on the small weight: the q-term sum on the
/// generator X^(p-1)-tensor, extended by the translate decomposition.
pub fn spherical_t_small(ctx: &SphCtx, v: &SphericalVec) -> Result<SphericalVec> {
    let lf = ctx.lf;
    let gf = ctx.gf();
    let tr = ctx
        .translates
        .expect("small-weight operator needs translate data");
    let downs = down_matrices(lf);
    let xp1 = MultiHomogPoly::monomial(tr.small_profile.clone(), &vec![0; gf.f()]);
    let mut out = SphericalVec::zero();
    for (rep, val) in &v.terms {
        let SphVal::Poly(poly) = val else {
            panic!("small-weight operator on a non-polynomial value")
        };
        let g = rep.materialize(lf);
        let coeffs = tr.decompose(gf, poly);
        for (lam, &c) in coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let u = LocalMat::unip_lower(lf, Fq(lam as u32));
            let gu = g.mul(lf, &u);
            let moved = SphVal::Poly(xp1.scale(gf, c));
            for m in &downs {
                out.insert_raw(ctx, &gu.mul(lf, m), &moved)?;
            }
        }
    }
    assert_depth_growth(v.max_depth(), out.max_depth());
    Ok(out)
}

/// Split a quotient-valued vector into its two summand inductions.
pub fn quotient_to_summands(ctx: &SphCtx, v: &SphericalVec) -> (SphericalVec, SphericalVec) {
    let comp = ctx.comp.expect("quotient values need a comparison context");
    let mut v0 = SphericalVec::zero();
    let mut vp = SphericalVec::zero();
    for (rep, val) in &v.terms {
        let SphVal::Coords(coords) = val else {
            panic!("expected quotient coordinates")
        };
        let c = comp.v0_coefficient(coords);
        v0.add_term(ctx, rep.clone(), SphVal::Scalar(c));
        let small = MultiHomogPoly {
            profile: comp.small_profile.clone(),
            coeffs: comp.vp1_coefficients(coords),
        };
        vp.add_term(ctx, rep.clone(), SphVal::Poly(small));
    }
    (v0, vp)
}

/// Reassemble a quotient-valued vector from summand pieces.
pub fn summands_to_quotient(ctx: &SphCtx, v0: &SphericalVec, vp: &SphericalVec) -> SphericalVec {
    let comp = ctx.comp.expect("quotient values need a comparison context");
    let mut out = SphericalVec::zero();
    for (rep, val) in &v0.terms {
        let SphVal::Scalar(c) = val else {
            panic!("expected a scalar value")
        };
        out.add_term(ctx, rep.clone(), SphVal::Coords(comp.embed_v0(*c)));
    }
    for (rep, val) in &vp.terms {
        let SphVal::Poly(p) = val else {
            panic!("expected a polynomial value")
        };
        out.add_term(ctx, rep.clone(), SphVal::Coords(comp.embed_small(p)));
    }
    out
}

/// The spherical operator, dispatching on the value kind. On the quotient it
/// acts summand-wise through the verified decomposition.
pub fn spherical_t(ctx: &SphCtx, v: &SphericalVec) -> Result<SphericalVec> {
    match v.terms.values().next() {
        None => Ok(SphericalVec::zero()),
        Some(SphVal::Scalar(_)) => spherical_t_trivial(ctx, v),
        Some(SphVal::Poly(_)) => spherical_t_small(ctx, v),
        Some(SphVal::Coords(_)) => {
            let (v0, vp) = quotient_to_summands(ctx, v);
            let tv0 = spherical_t_trivial(ctx, &v0)?;
            let tvp = spherical_t_small(ctx, &vp)?;
            Ok(summands_to_quotient(ctx, &tv0, &tvp))
        }
    }
}

/// Quotient class of Y^r - X^(r-p+1) Y^(p-1), the image of [[id, 1]] under
/// the comparison map.
pub fn comparison_base_class(comp: &ComparisonCtx) -> Vec<Fq> {
    let gf = comp.gf;
    let profile = &comp.profile;
    let yr = MultiHomogPoly::monomial(profile.clone(), &profile.r_digits.clone());
    let mid = MultiHomogPoly::monomial(profile.clone(), &vec![profile.p - 1; profile.f]);
    comp.quotient
        .project(gf, &yr.sub(gf, &mid).coeffs)
        .expect("dimensions agree")
}

/// The comparison map into the quotient induction:
/// [[g, 1]] -> [g, class of Y^r - X^(r-p+1) Y^(p-1)], extended linearly.
pub fn phi_compare(ctx: &SphCtx, v: &IwahoriVec) -> Result<SphericalVec> {
    let comp = ctx.comp.expect("comparison map needs a comparison context");
    let base = comparison_base_class(comp);
    let mut out = SphericalVec::zero();
    for (rep, &c) in &v.terms {
        let val = SphVal::Coords(base.iter().map(|&x| ctx.gf().mul(c, x)).collect());
        out.insert_raw(ctx, &rep.materialize(ctx.lf), &val)?;
    }
    Ok(out)
}

/// Projection of a quotient-valued vector onto one summand, staying in
/// quotient coordinates.
pub fn summand_project_vec(ctx: &SphCtx, v: &SphericalVec, which: Summand) -> SphericalVec {
    let comp = ctx.comp.expect("quotient values need a comparison context");
    let mut out = SphericalVec::zero();
    for (rep, val) in &v.terms {
        let SphVal::Coords(coords) = val else {
            panic!("expected quotient coordinates")
        };
        out.add_term(
            ctx,
            rep.clone(),
            SphVal::Coords(comp.summand_project(coords, which)),
        );
    }
    out
}

/// A deterministic stream of group elements: words over the standard
/// generator pool, for property tests and translate sampling.
pub fn random_group_element<R: rand::Rng>(
    lf: &LocalField,
    rng: &mut R,
    max_len: usize,
) -> LocalMat {
    let mut pool: Vec<LocalMat> = vec![
        LocalMat::w(lf),
        LocalMat::alpha(lf),
        LocalMat::beta(lf),
        LocalMat::central_pi(lf, 1),
    ];
    for mu in lf.gf.elements() {
        pool.push(LocalMat::unip_lower(lf, mu));
        pool.push(LocalMat::unip_upper(lf, mu));
    }
    let len = rng.gen_range(0..=max_len);
    let mut m = LocalMat::identity(lf);
    for _ in 0..len {
        m = m.mul(lf, &pool[rng.gen_range(0..pool.len())]);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cosets::Fiber;

    fn lf3() -> LocalField {
        LocalField::equal_char(3, 1).unwrap()
    }

    fn qp5() -> LocalField {
        LocalField::qp(5).unwrap()
    }

    #[test]
    fn t10_on_the_unit_is_the_beta_edge() {
        for lf in [lf3(), qp5()] {
            let v = t10(&lf, &IwahoriVec::unit());
            assert_eq!(v.terms.len(), 1);
            let (rep, &c) = v.terms.iter().next().unwrap();
            assert_eq!(c, Fq::ONE);
            assert_eq!(rep.vertex.side, 1);
            assert_eq!(rep.vertex.level, 0);
            assert_eq!(rep.fiber, Fiber::W);
            // and t10 of that is the unit again
            assert_eq!(t10(&lf, &v), IwahoriVec::unit());
        }
    }

    #[test]
    fn t12_of_the_unit_has_q_shallow_support_points() {
        for lf in [lf3(), qp5()] {
            let v = t12(&lf, &IwahoriVec::unit());
            assert_eq!(v.terms.len(), lf.q() as usize);
            assert!(v.max_depth().unwrap() <= 1);
        }
    }

    #[test]
    fn involution_and_braid_relations_at_small_depth() {
        for lf in [lf3(), qp5()] {
            let gf = &lf.gf;
            for e in cosets::enumerate_edges(lf.q(), 1) {
                let b = IwahoriVec::basis(e);
                assert_eq!(t10(&lf, &t10(&lf, &b)), b, "t10 is an involution");
                let lhs = t12(&lf, &t10(&lf, &t12(&lf, &b)));
                let rhs = t12(&lf, &b).scale(gf, gf.neg(Fq::ONE));
                assert_eq!(lhs, rhs, "three-term relation");
                let lhs = tm10(&lf, &b);
                let rhs = t10(&lf, &t12(&lf, &t10(&lf, &b)));
                assert_eq!(lhs, rhs, "tm10 factors through t10 t12 t10");
            }
            assert!(t10(&lf, &IwahoriVec::zero()).is_zero());
        }
    }

    #[test]
    fn operator_words_evaluate_linearly() {
        let lf = lf3();
        let gf = &lf.gf;
        let v = IwahoriVec::unit();
        assert_eq!(OperatorWord::identity().eval(&lf, &v), v);
        let w = OperatorWord::t10()
            .compose(gf, &OperatorWord::t10())
            .sub(gf, &OperatorWord::identity());
        for e in cosets::enumerate_edges(3, 2) {
            assert!(w.eval(&lf, &IwahoriVec::basis(e)).is_zero());
        }
        assert!(OperatorWord::zero().eval(&lf, &v).is_zero());
    }

    #[test]
    fn word_evaluation_is_multiplicative_over_composition() {
        use rand::{Rng, SeedableRng};
        let lf = lf3();
        let gf = &lf.gf;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(53);
        let letters = [Letter::T10, Letter::T12, Letter::Tm10];
        let random_word = |rng: &mut rand_chacha::ChaCha8Rng| -> OperatorWord {
            let mut w = OperatorWord::identity().scale(gf, Fq(rng.gen_range(1..3)));
            for _ in 0..rng.gen_range(0..3) {
                let term = OperatorWord::letter(letters[rng.gen_range(0..3)])
                    .scale(gf, Fq(rng.gen_range(1..3)));
                w = w.compose(gf, &term).add(gf, &OperatorWord::identity());
            }
            w
        };
        for _ in 0..10 {
            let a = random_word(&mut rng);
            let b = random_word(&mut rng);
            let v = t12(&lf, &IwahoriVec::unit());
            assert_eq!(
                a.compose(gf, &b).eval(&lf, &v),
                a.eval(&lf, &b.eval(&lf, &v))
            );
            // linearity over a sum of vectors
            let u = IwahoriVec::unit();
            assert_eq!(
                a.eval(&lf, &v.add(gf, &u)),
                a.eval(&lf, &v).add(gf, &a.eval(&lf, &u))
            );
        }
    }

    #[test]
    fn the_final_square_identity_holds() {
        // (T12 + T10)^2 = T10 (Tm10 + T10)^2 T10 on shallow basis vectors
        for lf in [lf3(), qp5()] {
            let gf = &lf.gf;
            let left = OperatorWord::t12().add(gf, &OperatorWord::t10()).square(gf);
            let inner = OperatorWord::tm10()
                .add(gf, &OperatorWord::t10())
                .square(gf);
            let right = OperatorWord::t10()
                .compose(gf, &inner)
                .compose(gf, &OperatorWord::t10());
            for e in cosets::enumerate_edges(lf.q(), 1) {
                let b = IwahoriVec::basis(e);
                assert_eq!(left.eval(&lf, &b), right.eval(&lf, &b));
            }
        }
    }

    #[test]
    fn kernel_of_t10_minus_id_contains_the_symmetric_vector() {
        let lf = lf3();
        let gf = &lf.gf;
        let word = OperatorWord::t10().sub(gf, &OperatorWord::identity());
        let k = operator_kernel(&lf, &word, 0);
        // [[id,1]] + [[beta,1]] is symmetric under t10
        let sym = IwahoriVec::unit().add(gf, &t10(&lf, &IwahoriVec::unit()));
        let coords: Vec<Fq> = k
            .edges
            .iter()
            .map(|e| sym.terms.get(e).copied().unwrap_or(Fq::ZERO))
            .collect();
        assert!(k.basis.membership(gf, &coords).unwrap().is_some());
        for v in &k.vectors {
            assert!(word.eval(&lf, v).is_zero());
        }
    }

    #[test]
    fn spans_certify_their_members() {
        let lf = lf3();
        let gf = &lf.gf;
        let word = OperatorWord::t12().compose(gf, &OperatorWord::t10());
        let span = OperatorSpan::build(&lf, vec![word.clone()], 1, true);
        // an arbitrary combination of generator images is certified
        let a = word.eval(&lf, &IwahoriVec::unit());
        let b = word.eval(
            &lf,
            &IwahoriVec::basis(cosets::enumerate_edges(3, 1)[7].clone()),
        );
        let target = a.add(gf, &b.scale(gf, Fq(2)));
        let cert = span.membership(&lf, &target).expect("member");
        assert!(!cert.combination.is_empty());
        // something outside the span is not certified
        assert!(span.membership(&lf, &IwahoriVec::unit()).is_none());
        // the zero span
        let empty = OperatorSpan::build(&lf, vec![OperatorWord::zero()], 1, false);
        assert_eq!(empty.span.rank(), 0);
    }

    #[test]
    fn image_of_t12_t10_is_killed_by_tm10_plus_t10() {
        let lf = lf3();
        let gf = &lf.gf;
        let word = OperatorWord::t12().compose(gf, &OperatorWord::t10());
        let killer = OperatorWord::tm10().add(gf, &OperatorWord::t10());
        for e in cosets::enumerate_edges(3, 1) {
            let img = word.eval(&lf, &IwahoriVec::basis(e));
            assert!(killer.eval(&lf, &img).is_zero());
        }
    }

    #[test]
    fn spherical_trivial_weight_shape() {
        for lf in [lf3(), qp5()] {
            let ctx = SphCtx::trivial(&lf);
            let mut v = SphericalVec::zero();
            v.insert_raw(&ctx, &LocalMat::identity(&lf), &SphVal::Scalar(Fq::ONE))
                .unwrap();
            let tv = spherical_t_trivial(&ctx, &v).unwrap();
            assert_eq!(tv.terms.len(), lf.q() as usize + 1);
            // q terms at side-0 level-1 vertices and one at the side-1 origin
            let mut side0 = 0;
            let mut side1 = 0;
            for (rep, val) in &tv.terms {
                assert_eq!(*val, SphVal::Scalar(Fq::ONE));
                match rep.side {
                    0 => {
                        assert_eq!(rep.level, 1);
                        side0 += 1;
                    }
                    _ => {
                        assert_eq!(rep.level, 0);
                        side1 += 1;
                    }
                }
            }
            assert_eq!((side0, side1), (lf.q() as usize, 1));
        }
    }

    #[test]
    fn spherical_small_weight_shape() {
        let lf = LocalField::equal_char(3, 2).unwrap();
        let tr = TranslateBasis::new(&lf.gf).unwrap();
        let ctx = SphCtx::with_translates(&lf, &tr);
        let xp1 = MultiHomogPoly::monomial(tr.small_profile.clone(), &[0, 0]);
        let mut v = SphericalVec::zero();
        v.insert_raw(&ctx, &LocalMat::identity(&lf), &SphVal::Poly(xp1.clone()))
            .unwrap();
        let tv = spherical_t_small(&ctx, &v).unwrap();
        // q terms, all with value X^(p-1) at side-0 level-1 vertices
        assert_eq!(tv.terms.len(), 9);
        for (rep, val) in &tv.terms {
            assert_eq!(rep.side, 0);
            assert_eq!(rep.level, 1);
            assert_eq!(*val, SphVal::Poly(xp1.clone()));
        }
    }

    #[test]
    fn spherical_t_is_equivariant_under_w() {
        use rand::{Rng, SeedableRng};
        let lf = lf3();
        let ctx = SphCtx::trivial(&lf);
        let w = LocalMat::w(&lf);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(19);
        for _ in 0..10 {
            let mut v = SphericalVec::zero();
            for _ in 0..3 {
                let g = random_group_element(&lf, &mut rng, 3);
                v.insert_raw(&ctx, &g, &SphVal::Scalar(Fq(rng.gen_range(0..3))))
                    .unwrap();
            }
            let lhs = spherical_t(&ctx, &spherical_g_act(&ctx, &w, &v).unwrap()).unwrap();
            let rhs = spherical_g_act(&ctx, &w, &spherical_t(&ctx, &v).unwrap()).unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn spherical_small_weight_operator_is_equivariant() {
        use rand::{Rng, SeedableRng};
        let lf = LocalField::equal_char(3, 2).unwrap();
        let gf = &lf.gf;
        let tr = TranslateBasis::new(gf).unwrap();
        let ctx = SphCtx::with_translates(&lf, &tr);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(47);
        for _ in 0..6 {
            let mut v = SphericalVec::zero();
            for _ in 0..2 {
                let g = random_group_element(&lf, &mut rng, 2);
                let mut poly = MultiHomogPoly::zero(tr.small_profile.clone());
                for c in poly.coeffs.iter_mut() {
                    *c = Fq(rng.gen_range(0..9));
                }
                v.insert_raw(&ctx, &g, &SphVal::Poly(poly)).unwrap();
            }
            for h in [
                LocalMat::w(&lf),
                LocalMat::alpha(&lf),
                LocalMat::unip_lower(&lf, Fq(5)),
                random_group_element(&lf, &mut rng, 3),
            ] {
                let lhs = spherical_t(&ctx, &spherical_g_act(&ctx, &h, &v).unwrap()).unwrap();
                let rhs = spherical_g_act(&ctx, &h, &spherical_t(&ctx, &v).unwrap()).unwrap();
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn kz_translation_transports_the_value() {
        // [k, v] with k in K canonicalizes to [id, kbar . v]
        let lf = LocalField::equal_char(3, 2).unwrap();
        let gf = &lf.gf;
        let tr = TranslateBasis::new(gf).unwrap();
        let ctx = SphCtx::with_translates(&lf, &tr);
        let xp1 = MultiHomogPoly::monomial(tr.small_profile.clone(), &[0, 0]);
        for lam in gf.elements() {
            let k = LocalMat::unip_lower(&lf, lam);
            let mut v = SphericalVec::zero();
            v.insert_raw(&ctx, &k, &SphVal::Poly(xp1.clone())).unwrap();
            let kbar = Mat2([Fq::ONE, Fq::ZERO, lam, Fq::ONE]);
            let expected = weights::gl2_act(gf, &kbar, &xp1).unwrap();
            assert_eq!(v.terms.len(), 1);
            assert_eq!(
                v.terms.get(&VertexRep::origin()),
                Some(&SphVal::Poly(expected))
            );
        }
    }

    #[test]
    fn central_uniformizer_acts_trivially() {
        let lf = qp5();
        let c = LocalMat::central_pi(&lf, 1);
        let v = t12(&lf, &IwahoriVec::unit());
        assert_eq!(iwahori_g_act(&lf, &c, &v).unwrap(), v);
        let ctx = SphCtx::trivial(&lf);
        let mut s = SphericalVec::zero();
        s.insert_raw(&ctx, &LocalMat::alpha(&lf), &SphVal::Scalar(Fq(2)))
            .unwrap();
        assert_eq!(spherical_g_act(&ctx, &c, &s).unwrap(), s);
    }

    #[test]
    fn raw_operator_application_is_stable_under_coset_moves() {
        // applying the digit-sum formula at g u for u in IZ gives the same
        // canonical vector as at g
        use rand::{Rng, SeedableRng};
        let lf = qp5();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(29);
        for _ in 0..20 {
            let g = random_group_element(&lf, &mut rng, 3);
            let mut u = LocalMat::identity(&lf);
            for _ in 0..rng.gen_range(0..3) {
                let mu = Fq(rng.gen_range(0..5));
                let gens = [
                    LocalMat::unip_upper(&lf, mu),
                    LocalMat([
                        lf.one(),
                        lf.zero(),
                        lf.mul(&lf.uniformizer(), &lf.lift(mu)),
                        lf.one(),
                    ]),
                    LocalMat::central_pi(&lf, 1),
                ];
                u = u.mul(&lf, &gens[rng.gen_range(0..3)]);
            }
            assert!(u.in_iz(&lf));
            let apply_digit_sum = |h: &LocalMat, upper: bool| -> IwahoriVec {
                let mut out = IwahoriVec::zero();
                let pi = lf.uniformizer();
                for (_mu, lift) in lf.digit_set() {
                    let m = if upper {
                        LocalMat([pi.clone(), lift, lf.zero(), lf.one()])
                    } else {
                        LocalMat([lf.one(), lf.zero(), lf.mul(&pi, &lift), pi.clone()])
                    };
                    out.insert_raw(&lf, &h.mul(&lf, &m), Fq::ONE).unwrap();
                }
                out
            };
            let gu = g.mul(&lf, &u);
            assert_eq!(apply_digit_sum(&g, false), apply_digit_sum(&gu, false));
            assert_eq!(apply_digit_sum(&g, true), apply_digit_sum(&gu, true));
        }
    }
}
