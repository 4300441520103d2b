//! Canonical representatives for the left cosets gKZ (tree vertices) and gIZ
//! (oriented edges), reduction of arbitrary group elements to canonical form,
//! and depth-bounded enumeration.
//!
//! Vertices are parametrized two-sidedly: side 0, level n materializes to
//! (w^n, m; 0, 1) with m = sum of digit lifts times uniformizer powers, and
//! side 1, level n to (1, 0; w*m, w^(n+1)). Edges refine a vertex by one of
//! q+1 fiber elements, the lower digit unipotents and the Weyl element, which
//! form a transversal of the Iwahori cosets inside the maximal compact.
//!
//! Reduction never divides by a non-monomial unit: the side, level and digit
//! string are extracted from valuations and truncated unit ratios, and the
//! witness k = rep^(-1) g is exact because canonical representatives have
//! monomial determinants. Enumeration order is (side, level, digits, fiber)
//! and is the column order of every operator matrix downstream; it is frozen.

use crate::gf::Fq;
use crate::localfield::{LocalField, LocalMat, LocalScalar};
use crate::{Error, Result};
use std::fmt;

/// Canonical representative of a vertex coset gKZ.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexRep {
    pub side: u8,
    pub level: u32,
    pub digits: Vec<Fq>,
}

/// Fiber element refining a vertex into an edge: a lower digit unipotent or
/// the Weyl element. The declared order (unipotents by digit index, then w)
/// is the enumeration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Fiber {
    Unip(Fq),
    W,
}

/// Canonical representative of an edge coset gIZ.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeRep {
    pub vertex: VertexRep,
    pub fiber: Fiber,
}

impl VertexRep {
    pub fn origin() -> VertexRep {
        VertexRep {
            side: 0,
            level: 0,
            digits: Vec::new(),
        }
    }

    pub fn depth(&self) -> u32 {
        self.level
    }

    /// The digit string as an integral scalar: sum of lifts times
    /// uniformizer powers.
    fn digit_scalar(&self, lf: &LocalField) -> LocalScalar {
        let mut acc = lf.zero();
        for (i, &d) in self.digits.iter().enumerate() {
            acc = lf.add(&acc, &lf.mul(&lf.lift(d), &lf.pi_pow(i as i64)));
        }
        acc
    }

    pub fn materialize(&self, lf: &LocalField) -> LocalMat {
        let n = self.level as i64;
        let m = self.digit_scalar(lf);
        match self.side {
            0 => LocalMat([lf.pi_pow(n), m, lf.zero(), lf.one()]),
            1 => LocalMat([
                lf.one(),
                lf.zero(),
                lf.mul(&lf.uniformizer(), &m),
                lf.pi_pow(n + 1),
            ]),
            _ => unreachable!(),
        }
    }

    /// Exact inverse of the materialization (monomial determinant).
    pub fn materialize_inv(&self, lf: &LocalField) -> LocalMat {
        let n = self.level as i64;
        let m = self.digit_scalar(lf);
        match self.side {
            0 => LocalMat([
                lf.pi_pow(-n),
                lf.neg(&lf.mul(&m, &lf.pi_pow(-n))),
                lf.zero(),
                lf.one(),
            ]),
            1 => LocalMat([
                lf.one(),
                lf.zero(),
                lf.neg(&lf.mul(&m, &lf.pi_pow(-n))),
                lf.pi_pow(-(n + 1)),
            ]),
            _ => unreachable!(),
        }
    }

    /// Order-embedding into u64, consistent with `Ord`. Used as the sparse
    /// column key in span computations.
    pub fn ord_key(&self, q: u32) -> u64 {
        pack_key(self.side, self.level, &self.digits, q, 0, 1)
    }
}

impl EdgeRep {
    pub fn depth(&self) -> u32 {
        self.vertex.level
    }

    pub fn fiber_index(&self, q: u32) -> u32 {
        match self.fiber {
            Fiber::Unip(l) => l.0,
            Fiber::W => q,
        }
    }

    pub fn fiber_mat(&self, lf: &LocalField) -> LocalMat {
        match self.fiber {
            Fiber::Unip(l) => LocalMat::unip_lower(lf, l),
            Fiber::W => LocalMat::w(lf),
        }
    }

    fn fiber_mat_inv(&self, lf: &LocalField) -> LocalMat {
        match self.fiber {
            Fiber::Unip(l) => LocalMat([lf.one(), lf.zero(), lf.neg(&lf.lift(l)), lf.one()]),
            Fiber::W => LocalMat::w(lf),
        }
    }

    pub fn materialize(&self, lf: &LocalField) -> LocalMat {
        self.vertex.materialize(lf).mul(lf, &self.fiber_mat(lf))
    }

    pub fn ord_key(&self, q: u32) -> u64 {
        pack_key(
            self.vertex.side,
            self.vertex.level,
            &self.vertex.digits,
            q,
            self.fiber_index(q),
            q as u64 + 1,
        )
    }
}

fn pack_key(side: u8, level: u32, digits: &[Fq], q: u32, fiber: u32, fiber_radix: u64) -> u64 {
    assert!(level < 64, "depth exceeds the packable range");
    let mut v: u64 = 0;
    for &d in digits {
        v = v
            .checked_mul(q as u64)
            .and_then(|x| x.checked_add(d.0 as u64))
            .expect("depth exceeds the packable range");
    }
    v = v
        .checked_mul(fiber_radix)
        .and_then(|x| x.checked_add(fiber as u64))
        .expect("depth exceeds the packable range");
    assert!(v < 1 << 56, "depth exceeds the packable range");
    ((side as u64) << 62) | ((level as u64) << 56) | v
}

impl fmt::Display for VertexRep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}:{}:[", self.side, self.level)?;
        for (i, d) in self.digits.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", d.0)?;
        }
        write!(f, "]")
    }
}

impl fmt::Display for EdgeRep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e:{}:", self.vertex)?;
        match self.fiber {
            Fiber::Unip(l) => write!(f, "u{}", l.0),
            Fiber::W => write!(f, "w"),
        }
    }
}

/// Reduce g to its canonical vertex representative. Returns (rep, k) with
/// g = rep * k and k in KZ.
pub fn reduce_vertex(lf: &LocalField, g: &LocalMat) -> Result<(VertexRep, LocalMat)> {
    if g.det(lf).is_zero() {
        return Err(Error::SingularMatrix);
    }
    let s = g.min_val(lf);
    let h = g.scale_pi(lf, -s);
    let delta = lf.val(&h.det(lf)).expect("invertible");
    debug_assert!(delta >= 0);
    let [a, b, c, d] = &h.0;
    let bottom_min = [lf.val(c), lf.val(d)]
        .into_iter()
        .flatten()
        .min()
        .unwrap_or(i64::MAX);
    let rep = if bottom_min == 0 {
        // the lattice surjects onto the second coordinate: side 0
        let n = delta as u32;
        let (u1, u2) = if lf.val(d) == Some(0) { (b, d) } else { (a, c) };
        let digits = lf.unit_ratio_digits(u1, u2, n as usize);
        VertexRep {
            side: 0,
            level: n,
            digits,
        }
    } else {
        // side 1; a column with unit top entry exists by primitivity
        let n = (delta - 1) as u32;
        let (u1, u2) = if lf.val(a) == Some(0) { (a, c) } else { (b, d) };
        let mut digits = lf.unit_ratio_digits(u2, u1, n as usize + 1);
        debug_assert_eq!(digits[0], Fq::ZERO);
        digits.remove(0);
        VertexRep {
            side: 1,
            level: n,
            digits,
        }
    };
    let k = rep.materialize_inv(lf).mul(lf, g);
    debug_assert!(k.in_kz(lf), "reduction witness must land in KZ");
    Ok((rep, k))
}

/// Reduce g to its canonical edge representative. Returns (rep, k) with
/// g = rep * k and k in IZ.
pub fn reduce_edge(lf: &LocalField, g: &LocalMat) -> Result<(EdgeRep, LocalMat)> {
    let (vertex, k) = reduce_vertex(lf, g)?;
    // normalize the KZ witness to a unit-determinant matrix and read the
    // direction of its first residue column
    let t2 = lf.val(&k.det(lf)).expect("invertible");
    debug_assert!(t2 % 2 == 0, "KZ witness has even determinant valuation");
    let k0 = k.scale_pi(lf, -t2 / 2);
    let kbar = k0.residue(lf)?;
    let a = kbar.0[0];
    let c = kbar.0[2];
    let fiber = if !a.is_zero() {
        Fiber::Unip(lf.gf.mul(c, lf.gf.inv(a).expect("unit")))
    } else {
        Fiber::W
    };
    let rep = EdgeRep { vertex, fiber };
    let kk = rep.fiber_mat_inv(lf).mul(lf, &k);
    debug_assert!(kk.in_iz(lf), "reduction witness must land in IZ");
    Ok((rep, kk))
}

/// All vertex representatives of level <= max_level, in the frozen order
/// (side, level, digits).
pub fn enumerate_vertices(q: u32, max_level: u32) -> Vec<VertexRep> {
    let mut out = Vec::new();
    for side in 0..2u8 {
        for level in 0..=max_level {
            let mut digits = vec![Fq(0); level as usize];
            loop {
                out.push(VertexRep {
                    side,
                    level,
                    digits: digits.clone(),
                });
                // lexicographic odometer, first digit most significant
                let mut i = level as usize;
                let mut advanced = false;
                while i > 0 {
                    i -= 1;
                    if digits[i].0 + 1 < q {
                        digits[i].0 += 1;
                        for d in digits[i + 1..].iter_mut() {
                            d.0 = 0;
                        }
                        advanced = true;
                        break;
                    }
                }
                if !advanced {
                    break;
                }
            }
        }
    }
    out
}

/// All edge representatives of level <= max_level, in the frozen order
/// (side, level, digits, fiber).
pub fn enumerate_edges(q: u32, max_level: u32) -> Vec<EdgeRep> {
    let mut out = Vec::new();
    for v in enumerate_vertices(q, max_level) {
        for l in 0..q {
            out.push(EdgeRep {
                vertex: v.clone(),
                fiber: Fiber::Unip(Fq(l)),
            });
        }
        out.push(EdgeRep {
            vertex: v,
            fiber: Fiber::W,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::localfield::FieldMode;

    fn lf3() -> LocalField {
        LocalField::equal_char(3, 1).unwrap()
    }

    fn qp5() -> LocalField {
        LocalField::qp(5).unwrap()
    }

    #[test]
    fn identity_reduces_to_origin() {
        for lf in [lf3(), qp5()] {
            let (rep, k) = reduce_vertex(&lf, &LocalMat::identity(&lf)).unwrap();
            assert_eq!(rep, VertexRep::origin());
            assert_eq!(k, LocalMat::identity(&lf));
        }
    }

    #[test]
    fn alpha_is_the_side_one_origin() {
        for lf in [lf3(), qp5()] {
            let (rep, _) = reduce_vertex(&lf, &LocalMat::alpha(&lf)).unwrap();
            assert_eq!(rep.side, 1);
            assert_eq!(rep.level, 0);
            assert!(rep.digits.is_empty());
        }
    }

    #[test]
    fn canonical_forms_reduce_to_themselves() {
        for lf in [lf3(), qp5()] {
            for digit in lf.gf.elements() {
                let rep = VertexRep {
                    side: 0,
                    level: 1,
                    digits: vec![digit],
                };
                let (r2, k) = reduce_vertex(&lf, &rep.materialize(&lf)).unwrap();
                assert_eq!(r2, rep);
                assert_eq!(k, LocalMat::identity(&lf));
            }
        }
    }

    #[test]
    fn edge_reduction_examples() {
        for lf in [lf3(), qp5()] {
            let (rep, k) = reduce_edge(&lf, &LocalMat::identity(&lf)).unwrap();
            assert_eq!(rep.vertex, VertexRep::origin());
            assert_eq!(rep.fiber, Fiber::Unip(Fq(0)));
            assert!(k.in_iz(&lf));
            // beta sits over the side-1 origin with the Weyl fiber
            let (rep, k) = reduce_edge(&lf, &LocalMat::beta(&lf)).unwrap();
            assert_eq!(rep.vertex.side, 1);
            assert_eq!(rep.vertex.level, 0);
            assert_eq!(rep.fiber, Fiber::W);
            assert!(k.in_iz(&lf));
        }
    }

    #[test]
    fn witness_soundness_and_stability_under_random_cosets() {
        use rand::{Rng, SeedableRng};
        for lf in [lf3(), qp5()] {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
            let iwahori_gens: Vec<LocalMat> = {
                let mut v = vec![LocalMat::central_pi(&lf, 1)];
                for mu in lf.gf.elements() {
                    v.push(LocalMat::unip_upper(&lf, mu));
                    v.push(LocalMat([
                        lf.one(),
                        lf.zero(),
                        lf.mul(&lf.uniformizer(), &lf.lift(mu)),
                        lf.one(),
                    ]));
                }
                for mu in lf.gf.units() {
                    v.push(LocalMat([lf.lift(mu), lf.zero(), lf.zero(), lf.one()]));
                    v.push(LocalMat([lf.one(), lf.zero(), lf.zero(), lf.lift(mu)]));
                }
                v
            };
            for e in enumerate_edges(lf.q(), 1) {
                let m = e.materialize(&lf);
                for _ in 0..8 {
                    let mut u = LocalMat::identity(&lf);
                    for _ in 0..rng.gen_range(0..4) {
                        u = u.mul(&lf, &iwahori_gens[rng.gen_range(0..iwahori_gens.len())]);
                    }
                    assert!(u.in_iz(&lf));
                    let (rep, k) = reduce_edge(&lf, &m.mul(&lf, &u)).unwrap();
                    assert_eq!(rep, e, "rep * u must reduce back to rep");
                    assert!(k.in_iz(&lf));
                }
            }
        }
    }

    #[test]
    fn enumeration_counts() {
        // q=3: 2 vertices and 8 edges at depth 0; 8 vertices and 32 edges
        // within depth 1
        assert_eq!(enumerate_vertices(3, 0).len(), 2);
        assert_eq!(enumerate_edges(3, 0).len(), 8);
        assert_eq!(enumerate_vertices(3, 1).len(), 8);
        assert_eq!(enumerate_edges(3, 1).len(), 32);
        assert!(enumerate_vertices(3, 0).contains(&VertexRep::origin()));
    }

    #[test]
    fn enumeration_is_sorted_and_matches_ord_keys() {
        let edges = enumerate_edges(3, 2);
        let mut sorted = edges.clone();
        sorted.sort();
        assert_eq!(edges, sorted);
        let keys: Vec<u64> = edges.iter().map(|e| e.ord_key(3)).collect();
        let mut sk = keys.clone();
        sk.sort();
        assert_eq!(keys, sk);
        assert_eq!(
            keys.iter().collect::<std::collections::BTreeSet<_>>().len(),
            keys.len()
        );
    }

    #[test]
    fn pairwise_distinct_cosets_at_small_depth() {
        for lf in [
            lf3(),
            LocalField::new(
                FieldMode::MixedChar,
                crate::gf::Gf::lex_least(3, 1).unwrap(),
            )
            .unwrap(),
        ] {
            let vs = enumerate_vertices(lf.q(), 2);
            for i in 0..vs.len() {
                for j in i + 1..vs.len() {
                    let gi = vs[i].materialize(&lf);
                    let gj = vs[j].materialize(&lf);
                    let rel = gi.inv(&lf).unwrap().mul(&lf, &gj);
                    assert!(!rel.in_kz(&lf), "{} and {} share a coset", vs[i], vs[j]);
                }
            }
            let es = enumerate_edges(lf.q(), 1);
            for i in 0..es.len() {
                for j in i + 1..es.len() {
                    let gi = es[i].materialize(&lf);
                    let gj = es[j].materialize(&lf);
                    let rel = gi.inv(&lf).unwrap().mul(&lf, &gj);
                    assert!(!rel.in_iz(&lf), "{} and {} share a coset", es[i], es[j]);
                }
            }
        }
    }

    #[test]
    fn short_generator_words_stay_shallow() {
        let lf = lf3();
        let mut gens: Vec<LocalMat> =
            vec![LocalMat::w(&lf), LocalMat::alpha(&lf), LocalMat::beta(&lf)];
        for mu in lf.gf.elements() {
            gens.push(LocalMat::unip_lower(&lf, mu));
            gens.push(LocalMat::unip_upper(&lf, mu));
        }
        let n = gens.len();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let g = gens[i].mul(&lf, &gens[j]).mul(&lf, &gens[k]);
                    let (rep, _) = reduce_vertex(&lf, &g).unwrap();
                    assert!(rep.level <= 3);
                }
            }
        }
    }

    #[test]
    fn display_format() {
        let e = EdgeRep {
            vertex: VertexRep {
                side: 1,
                level: 0,
                digits: vec![],
            },
            fiber: Fiber::W,
        };
        assert_eq!(e.to_string(), "e:v1:0:[]:w");
        let v = VertexRep {
            side: 0,
            level: 2,
            digits: vec![Fq(1), Fq(2)],
        };
        assert_eq!(v.to_string(), "v0:2:[1,2]");
    }
}
