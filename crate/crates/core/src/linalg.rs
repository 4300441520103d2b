//! Exact linear algebra over F_q: reduced row-echelon bases, kernels,
//! membership tests with reproducing coefficients, and quotient coordinates.
//!
//! Everything is deterministic: a span has a unique reduced row-echelon
//! basis, so all outputs are canonical regardless of input order. The sparse
//! side ([`SpanBuilder`]) additionally tracks, per row, an expression of the
//! row as a combination of the inserted generators, which is what turns a
//! successful membership test into an explicit certificate.

use crate::gf::{Fq, Gf};
use crate::{Error, Result};

/// A basis of a subspace of F_q^n in reduced row-echelon form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VectorSpaceBasis {
    pub ambient_dim: usize,
    pub rows: Vec<Vec<Fq>>,
    pub pivot_columns: Vec<usize>,
}

impl VectorSpaceBasis {
    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Reduce v against the basis. Returns the residue and the coefficients
    /// used per row; v is in the span iff the residue is zero.
    pub fn reduce(&self, gf: &Gf, v: &[Fq]) -> Result<(Vec<Fq>, Vec<Fq>)> {
        if v.len() != self.ambient_dim {
            return Err(Error::DimensionMismatch(format!(
                "vector length {} vs ambient {}",
                v.len(),
                self.ambient_dim
            )));
        }
        let mut res = v.to_vec();
        let mut coeffs = Vec::with_capacity(self.rows.len());
        for (row, &piv) in self.rows.iter().zip(&self.pivot_columns) {
            let c = res[piv];
            coeffs.push(c);
            if !c.is_zero() {
                for (r, &x) in res.iter_mut().zip(row) {
                    *r = gf.sub(*r, gf.mul(c, x));
                }
            }
        }
        Ok((res, coeffs))
    }

    /// Membership with reproducing coefficients: `Some(coeffs)` with
    /// v = sum coeffs[i] * rows[i] exactly, or `None`.
    pub fn membership(&self, gf: &Gf, v: &[Fq]) -> Result<Option<Vec<Fq>>> {
        let (res, coeffs) = self.reduce(gf, v)?;
        if res.iter().all(|c| c.is_zero()) {
            debug_assert!({
                let mut acc = vec![Fq::ZERO; self.ambient_dim];
                for (c, row) in coeffs.iter().zip(&self.rows) {
                    for (a, &x) in acc.iter_mut().zip(row) {
                        *a = gf.add(*a, gf.mul(*c, x));
                    }
                }
                acc == v
            });
            Ok(Some(coeffs))
        } else {
            Ok(None)
        }
    }
}

/// Reduced row-echelon basis of the span of the given vectors.
pub fn echelonize(gf: &Gf, vectors: &[Vec<Fq>], ambient_dim: usize) -> Result<VectorSpaceBasis> {
    for v in vectors {
        if v.len() != ambient_dim {
            return Err(Error::DimensionMismatch(format!(
                "vector length {} vs ambient {}",
                v.len(),
                ambient_dim
            )));
        }
    }
    let mut mat: Vec<Vec<Fq>> = vectors.to_vec();
    let mut pivots: Vec<usize> = Vec::new();
    let mut row = 0usize;
    for col in 0..ambient_dim {
        let Some(pr) = (row..mat.len()).find(|&r| !mat[r][col].is_zero()) else {
            continue;
        };
        mat.swap(row, pr);
        let inv = gf.inv(mat[row][col]).expect("pivot is nonzero");
        for c in mat[row].iter_mut() {
            *c = gf.mul(*c, inv);
        }
        let pivot_row = mat[row].clone();
        for (r, other) in mat.iter_mut().enumerate() {
            if r == row {
                continue;
            }
            let factor = other[col];
            if !factor.is_zero() {
                for (o, &x) in other.iter_mut().zip(&pivot_row) {
                    *o = gf.sub(*o, gf.mul(factor, x));
                }
            }
        }
        pivots.push(col);
        row += 1;
        if row == mat.len() {
            break;
        }
    }
    mat.truncate(row);
    Ok(VectorSpaceBasis {
        ambient_dim,
        rows: mat,
        pivot_columns: pivots,
    })
}

/// Basis of the right null space of a dense matrix (rows x cols), returned in
/// canonical reduced row-echelon form.
pub fn kernel_of(gf: &Gf, rows: &[Vec<Fq>], cols: usize) -> VectorSpaceBasis {
    let rref = echelonize(gf, rows, cols).expect("uniform row lengths");
    let mut is_pivot = vec![false; cols];
    for &p in &rref.pivot_columns {
        is_pivot[p] = true;
    }
    let mut kernel: Vec<Vec<Fq>> = Vec::new();
    for free in 0..cols {
        if is_pivot[free] {
            continue;
        }
        let mut v = vec![Fq::ZERO; cols];
        v[free] = Fq::ONE;
        for (row, &p) in rref.rows.iter().zip(&rref.pivot_columns) {
            v[p] = gf.neg(row[free]);
        }
        kernel.push(v);
    }
    echelonize(gf, &kernel, cols).expect("uniform row lengths")
}

/// A subspace with a fixed choice of quotient coordinates: the non-pivot
/// columns of its reduced row-echelon basis.
#[derive(Debug, Clone)]
pub struct QuotientStructure {
    pub ambient_dim: usize,
    pub subspace: VectorSpaceBasis,
    pub complement_columns: Vec<usize>,
}

impl QuotientStructure {
    pub fn new(subspace: VectorSpaceBasis) -> QuotientStructure {
        let ambient_dim = subspace.ambient_dim;
        let mut is_pivot = vec![false; ambient_dim];
        for &p in &subspace.pivot_columns {
            is_pivot[p] = true;
        }
        let complement_columns = (0..ambient_dim).filter(|&c| !is_pivot[c]).collect();
        QuotientStructure {
            ambient_dim,
            subspace,
            complement_columns,
        }
    }

    pub fn quotient_dim(&self) -> usize {
        self.ambient_dim - self.subspace.rank()
    }

    /// Coordinates of the class of v: the residue of v against the subspace,
    /// read off at the complement columns. Zero iff v lies in the subspace.
    pub fn project(&self, gf: &Gf, v: &[Fq]) -> Result<Vec<Fq>> {
        let (res, _) = self.subspace.reduce(gf, v)?;
        Ok(self.complement_columns.iter().map(|&c| res[c]).collect())
    }

    /// The canonical ambient representative of a class: supported on the
    /// complement columns. `project(lift(c)) == c`.
    pub fn lift(&self, coords: &[Fq]) -> Vec<Fq> {
        assert_eq!(coords.len(), self.quotient_dim());
        let mut v = vec![Fq::ZERO; self.ambient_dim];
        for (&col, &c) in self.complement_columns.iter().zip(coords) {
            v[col] = c;
        }
        v
    }
}

/// A sparse vector over an ordered u64 key space, sorted by key.
pub type SparseVec = Vec<(u64, Fq)>;

pub fn sparse_add_scaled(gf: &Gf, a: &SparseVec, b: &SparseVec, c: Fq) -> SparseVec {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i].0 < b[j].0) {
            out.push(a[i]);
            i += 1;
        } else if i == a.len() || b[j].0 < a[i].0 {
            let v = gf.mul(c, b[j].1);
            if !v.is_zero() {
                out.push((b[j].0, v));
            }
            j += 1;
        } else {
            let v = gf.add(a[i].1, gf.mul(c, b[j].1));
            if !v.is_zero() {
                out.push((a[i].0, v));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

pub fn sparse_scale(gf: &Gf, a: &SparseVec, c: Fq) -> SparseVec {
    if c.is_zero() {
        return Vec::new();
    }
    a.iter().map(|&(k, v)| (k, gf.mul(c, v))).collect()
}

/// Outcome of inserting a generator into a [`SpanBuilder`].
pub enum Inserted {
    /// The vector enlarged the span.
    NewPivot,
    /// The vector was already in the span; when certificates are tracked the
    /// coefficients express it over the previously inserted generators.
    Dependent(Option<Vec<(u32, Fq)>>),
}

/// Incremental row-echelon span over sparse vectors keyed by u64, with
/// optional generator certificates.
///
/// Rows are kept in echelon form (strictly increasing pivots, pivot entries
/// normalized to 1) but not fully reduced; the form, and hence every output,
/// is still deterministic for a fixed insertion order. `to_rref` produces the
/// canonical reduced basis when one is needed.
pub struct SpanBuilder {
    rows: std::collections::BTreeMap<u64, SparseVec>,
    /// expressions of each row over inserted generator indices
    exprs: Option<std::collections::BTreeMap<u64, Vec<(u32, Fq)>>>,
    n_inserted: u32,
}

impl SpanBuilder {
    pub fn new(with_certificates: bool) -> SpanBuilder {
        SpanBuilder {
            rows: std::collections::BTreeMap::new(),
            exprs: if with_certificates {
                Some(std::collections::BTreeMap::new())
            } else {
                None
            },
            n_inserted: 0,
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn n_inserted(&self) -> u32 {
        self.n_inserted
    }

    fn reduce_internal(&self, gf: &Gf, v: &SparseVec) -> (SparseVec, Vec<(u32, Fq)>) {
        let mut res = v.clone();
        let mut used: Vec<(u32, Fq)> = Vec::new();
        while let Some(&(key, coeff)) = res.first() {
            let Some(row) = self.rows.get(&key) else {
                break;
            };
            // row has pivot `key` with entry 1
            res = sparse_add_scaled(gf, &res, row, gf.neg(coeff));
            if let Some(exprs) = &self.exprs {
                for &(g, c) in &exprs[&key] {
                    used.push((g, gf.mul(gf.neg(coeff), c)));
                }
            }
        }
        (res, combine_expr(gf, used))
    }

    /// Insert a generator vector; returns whether it enlarged the span.
    pub fn insert(&mut self, gf: &Gf, v: SparseVec) -> Inserted {
        let idx = self.n_inserted;
        self.n_inserted += 1;
        let (res, mut used) = self.reduce_internal(gf, &v);
        match res.first().copied() {
            None => {
                if self.exprs.is_some() {
                    // v = sum(-used): negate to express v over earlier generators
                    for e in used.iter_mut() {
                        e.1 = gf.neg(e.1);
                    }
                    Inserted::Dependent(Some(used))
                } else {
                    Inserted::Dependent(None)
                }
            }
            Some((key, lead)) => {
                let inv = gf.inv(lead).expect("leading entry nonzero");
                let row = sparse_scale(gf, &res, inv);
                if let Some(exprs) = &mut self.exprs {
                    let mut e = used;
                    e.push((idx, Fq::ONE));
                    let e: Vec<(u32, Fq)> =
                        e.into_iter().map(|(g, c)| (g, gf.mul(inv, c))).collect();
                    exprs.insert(key, combine_expr(gf, e));
                }
                self.rows.insert(key, row);
                Inserted::NewPivot
            }
        }
    }

    /// Certified membership: coefficients over the inserted generators that
    /// reproduce v exactly, or None if v is not (yet) in the span.
    pub fn membership(&self, gf: &Gf, v: &SparseVec) -> Option<Vec<(u32, Fq)>> {
        let (res, mut used) = self.reduce_internal(gf, v);
        if !res.is_empty() {
            return None;
        }
        for e in used.iter_mut() {
            e.1 = gf.neg(e.1);
        }
        Some(used)
    }

    pub fn contains(&self, gf: &Gf, v: &SparseVec) -> bool {
        self.reduce_internal(gf, v).0.is_empty()
    }

    /// Residue of v after reduction against the current rows.
    pub fn residue(&self, gf: &Gf, v: &SparseVec) -> SparseVec {
        self.reduce_internal(gf, v).0
    }

    /// Canonical reduced row-echelon rows (pivot columns cleared everywhere).
    pub fn to_rref(&self, gf: &Gf) -> Vec<SparseVec> {
        let mut rows: Vec<SparseVec> = self.rows.values().cloned().collect();
        // eliminate later pivots from earlier rows, deepest pivot first
        for i in (0..rows.len()).rev() {
            let pivot_row = rows[i].clone();
            let pivot = pivot_row[0].0;
            for row in rows.iter_mut().take(i) {
                if let Some(pos) = row.iter().position(|&(k, _)| k == pivot) {
                    let c = row[pos].1;
                    *row = sparse_add_scaled(gf, row, &pivot_row, gf.neg(c));
                }
            }
        }
        rows
    }
}

fn combine_expr(gf: &Gf, mut e: Vec<(u32, Fq)>) -> Vec<(u32, Fq)> {
    e.sort_by_key(|&(g, _)| g);
    let mut out: Vec<(u32, Fq)> = Vec::with_capacity(e.len());
    for (g, c) in e {
        match out.last_mut() {
            Some(last) if last.0 == g => {
                last.1 = gf.add(last.1, c);
            }
            _ => out.push((g, c)),
        }
    }
    out.retain(|&(_, c)| !c.is_zero());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f3() -> Gf {
        Gf::lex_least(3, 1).unwrap()
    }

    fn vecq(xs: &[u32]) -> Vec<Fq> {
        xs.iter().map(|&x| Fq(x)).collect()
    }

    #[test]
    fn standard_basis_has_full_rank() {
        let gf = f3();
        let b = echelonize(&gf, &[vecq(&[1, 0]), vecq(&[0, 1])], 2).unwrap();
        assert_eq!(b.rank(), 2);
        assert_eq!(b.pivot_columns, vec![0, 1]);
    }

    #[test]
    fn dependent_rows_collapse() {
        let gf = f3();
        // (2,2) = 2 * (1,1)
        let b = echelonize(&gf, &[vecq(&[1, 1]), vecq(&[2, 2])], 2).unwrap();
        assert_eq!(b.rank(), 1);
        assert_eq!(b.rows, vec![vecq(&[1, 1])]);
    }

    #[test]
    fn empty_input_gives_zero_space() {
        let gf = f3();
        let b = echelonize(&gf, &[], 4).unwrap();
        assert_eq!(b.rank(), 0);
    }

    #[test]
    fn echelonize_is_idempotent() {
        let gf = f3();
        let b = echelonize(
            &gf,
            &[vecq(&[1, 2, 0]), vecq(&[0, 1, 1]), vecq(&[1, 0, 1])],
            3,
        )
        .unwrap();
        let b2 = echelonize(&gf, &b.rows, 3).unwrap();
        assert_eq!(b, b2);
    }

    #[test]
    fn membership_cases() {
        let gf = f3();
        let b = echelonize(&gf, &[vecq(&[1, 0, 2]), vecq(&[0, 1, 1])], 3).unwrap();
        // zero vector: empty combination
        let c = b.membership(&gf, &vecq(&[0, 0, 0])).unwrap().unwrap();
        assert!(c.iter().all(|x| x.is_zero()));
        // sum of the two basis rows
        let v = vecq(&[1, 1, 0]);
        let c = b.membership(&gf, &v).unwrap().unwrap();
        assert_eq!(c, vecq(&[1, 1]));
        // residue outside all pivots
        assert!(b.membership(&gf, &vecq(&[0, 0, 1])).unwrap().is_none());
        // dimension mismatch is an error
        assert!(b.membership(&gf, &vecq(&[1, 0])).is_err());
    }

    #[test]
    fn membership_matches_brute_force_on_small_instances() {
        // every F_q-combination of up to 3 generators, for q = 3 and q = 9
        for (gf, q) in [(f3(), 3u32), (Gf::lex_least(3, 2).unwrap(), 9u32)] {
            let gens = [vecq(&[1, 2, 0]), vecq(&[0, 1, 1]), vecq(&[q - 1, 0, 1])];
            let b = echelonize(&gf, &gens, 3).unwrap();
            for v0 in 0..q {
                for v1 in 0..q {
                    for v2 in 0..q {
                        let v = vecq(&[v0, v1, v2]);
                        let mut found = false;
                        'combos: for c0 in 0..q {
                            for c1 in 0..q {
                                for c2 in 0..q {
                                    let mut acc = vec![Fq::ZERO; 3];
                                    for (c, g) in [c0, c1, c2].iter().zip(&gens) {
                                        for (a, &x) in acc.iter_mut().zip(g) {
                                            *a = gf.add(*a, gf.mul(Fq(*c), x));
                                        }
                                    }
                                    if acc == v {
                                        found = true;
                                        break 'combos;
                                    }
                                }
                            }
                        }
                        assert_eq!(b.membership(&gf, &v).unwrap().is_some(), found);
                    }
                }
            }
        }
    }

    #[test]
    fn kernel_examples() {
        let gf = f3();
        let id = vec![vecq(&[1, 0]), vecq(&[0, 1])];
        assert_eq!(kernel_of(&gf, &id, 2).rank(), 0);
        let zero = vec![vecq(&[0, 0]), vecq(&[0, 0])];
        assert_eq!(kernel_of(&gf, &zero, 2).rank(), 2);
        // x + 2y = 0 has kernel spanned by (1, 1)
        let k = kernel_of(&gf, &[vecq(&[1, 2])], 2);
        assert_eq!(k.rank(), 1);
        assert_eq!(k.rows, vec![vecq(&[1, 1])]);
    }

    #[test]
    fn rank_nullity_on_random_matrices() {
        use rand::{Rng, SeedableRng};
        let gf = Gf::lex_least(3, 2).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..30 {
            let rows = rng.gen_range(1..6);
            let cols = rng.gen_range(1..6);
            let mat: Vec<Vec<Fq>> = (0..rows)
                .map(|_| (0..cols).map(|_| Fq(rng.gen_range(0..9))).collect())
                .collect();
            let rank = echelonize(&gf, &mat, cols).unwrap().rank();
            let nullity = kernel_of(&gf, &mat, cols).rank();
            assert_eq!(rank + nullity, cols);
            // every kernel vector is annihilated
            for k in &kernel_of(&gf, &mat, cols).rows {
                for row in &mat {
                    let mut acc = Fq::ZERO;
                    for (&a, &b) in row.iter().zip(k) {
                        acc = gf.add(acc, gf.mul(a, b));
                    }
                    assert!(acc.is_zero());
                }
            }
        }
    }

    #[test]
    fn quotient_projection() {
        let gf = f3();
        let sub = echelonize(&gf, &[vecq(&[1, 1, 0])], 3).unwrap();
        let q = QuotientStructure::new(sub);
        assert_eq!(q.quotient_dim(), 2);
        assert!(q
            .project(&gf, &vecq(&[2, 2, 0]))
            .unwrap()
            .iter()
            .all(|c| c.is_zero()));
        let coords = q.project(&gf, &vecq(&[0, 1, 2])).unwrap();
        assert_eq!(q.project(&gf, &q.lift(&coords)).unwrap(), coords);
    }

    #[test]
    fn span_builder_certificates_reproduce_inputs() {
        let gf = f3();
        let gens: Vec<SparseVec> = vec![
            vec![(0, Fq(1)), (3, Fq(2))],
            vec![(1, Fq(1)), (3, Fq(1))],
            vec![(0, Fq(2)), (1, Fq(1))],
            vec![(0, Fq(1)), (1, Fq(1))], // = g0 + g1, a genuine dependency
        ];
        let mut sb = SpanBuilder::new(true);
        let mut deps = Vec::new();
        for g in &gens {
            if let Inserted::Dependent(Some(expr)) = sb.insert(&gf, g.clone()) {
                deps.push((g.clone(), expr));
            }
        }
        assert_eq!(deps.len(), 1);
        // any dependency must re-expand exactly
        for (v, expr) in &deps {
            let mut acc: SparseVec = Vec::new();
            for &(g, c) in expr {
                acc = sparse_add_scaled(&gf, &acc, &gens[g as usize], c);
            }
            assert_eq!(&acc, v);
        }
        // membership of a fresh combination
        let target = sparse_add_scaled(&gf, &gens[0], &gens[1], Fq(2));
        let cert = sb.membership(&gf, &target).unwrap();
        let mut acc: SparseVec = Vec::new();
        for &(g, c) in &cert {
            acc = sparse_add_scaled(&gf, &acc, &gens[g as usize], c);
        }
        assert_eq!(acc, target);
        // rref pivots are cleared in other rows
        let rref = sb.to_rref(&gf);
        let pivots: Vec<u64> = rref.iter().map(|r| r[0].0).collect();
        for (i, row) in rref.iter().enumerate() {
            for &(k, _) in &row[1..] {
                assert!(!pivots[..i].contains(&k) && !pivots[i + 1..].contains(&k));
            }
        }
    }
}
