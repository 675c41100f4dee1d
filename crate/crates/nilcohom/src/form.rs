//! Bigraded exterior algebra on the invariant coframe.
//!
//! Basis monomials are wedges `p_I ^ q_J` with strictly increasing index
//! sets, unconjugated generators first. Coefficients are [`Series`], so one
//! type carries both plain Q(i)-forms and deformation-parameter families.

use crate::scalar::GaussRational;
use crate::series::Series;
use std::collections::BTreeMap;
use std::fmt;

/// A basis monomial, stored as index bitmasks (bit k = generator k, 0-based).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug, Hash)]
pub struct Monomial {
    pub p_mask: u32,
    pub q_mask: u32,
}

/// Number of elements of `mask` strictly below bit `i`.
fn rank_below(mask: u32, i: u32) -> u32 {
    (mask & ((1u32 << i) - 1)).count_ones()
}

/// Inversions between two disjoint ordered index sets when merging b after a.
fn merge_inversions(a: u32, b: u32) -> u32 {
    let mut inv = 0;
    let mut bb = b;
    while bb != 0 {
        let i = bb.trailing_zeros();
        inv += (a >> (i + 1)).count_ones();
        bb &= bb - 1;
    }
    inv
}

impl Monomial {
    pub const ONE: Monomial = Monomial { p_mask: 0, q_mask: 0 };

    pub fn p_degree(&self) -> u32 {
        self.p_mask.count_ones()
    }

    pub fn q_degree(&self) -> u32 {
        self.q_mask.count_ones()
    }

    pub fn degree(&self) -> u32 {
        self.p_degree() + self.q_degree()
    }

    /// Wedge with sign; `None` when a factor repeats.
    pub fn wedge(&self, rhs: &Monomial) -> Option<(Monomial, i8)> {
        if self.p_mask & rhs.p_mask != 0 || self.q_mask & rhs.q_mask != 0 {
            return None;
        }
        // factor sequence [P1 Q1 P2 Q2] -> [P1 P2 Q1 Q2] -> sorted
        let mut swaps = rhs.p_degree() * self.q_degree();
        swaps += merge_inversions(self.p_mask, rhs.p_mask);
        swaps += merge_inversions(self.q_mask, rhs.q_mask);
        let sign = if swaps % 2 == 0 { 1 } else { -1 };
        Some((
            Monomial {
                p_mask: self.p_mask | rhs.p_mask,
                q_mask: self.q_mask | rhs.q_mask,
            },
            sign,
        ))
    }

    /// Interior product with the holomorphic frame vector `Z_i`.
    pub fn contract_hol(&self, i: u32) -> Option<(Monomial, i8)> {
        if self.p_mask & (1 << i) == 0 {
            return None;
        }
        let sign = if rank_below(self.p_mask, i) % 2 == 0 { 1 } else { -1 };
        Some((
            Monomial {
                p_mask: self.p_mask & !(1 << i),
                q_mask: self.q_mask,
            },
            sign,
        ))
    }

    /// Interior product with the conjugate frame vector.
    pub fn contract_antihol(&self, j: u32) -> Option<(Monomial, i8)> {
        if self.q_mask & (1 << j) == 0 {
            return None;
        }
        let before = self.p_degree() + rank_below(self.q_mask, j);
        let sign = if before % 2 == 0 { 1 } else { -1 };
        Some((
            Monomial {
                p_mask: self.p_mask,
                q_mask: self.q_mask & !(1 << j),
            },
            sign,
        ))
    }

    /// Conjugate monomial with its reordering sign.
    pub fn conj(&self) -> (Monomial, i8) {
        let sign = if (self.p_degree() * self.q_degree()) % 2 == 0 {
            1
        } else {
            -1
        };
        (
            Monomial {
                p_mask: self.q_mask,
                q_mask: self.p_mask,
            },
            sign,
        )
    }

    /// Factors in canonical order: holomorphic ascending, then conjugated.
    pub fn factors(&self) -> Vec<Generator> {
        let mut out = Vec::new();
        for i in 0..32 {
            if self.p_mask & (1 << i) != 0 {
                out.push(Generator::Hol(i));
            }
        }
        for j in 0..32 {
            if self.q_mask & (1 << j) != 0 {
                out.push(Generator::Antihol(j));
            }
        }
        out
    }
}

/// One coframe generator: `p<i+1>` or `q<i+1>` in model-file notation.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Generator {
    Hol(u32),
    Antihol(u32),
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.degree() == 0 {
            return write!(f, "1");
        }
        let parts: Vec<String> = self
            .factors()
            .iter()
            .map(|g| match g {
                Generator::Hol(i) => format!("p{}", i + 1),
                Generator::Antihol(j) => format!("q{}", j + 1),
            })
            .collect();
        write!(f, "{}", parts.join("^"))
    }
}

/// A sparse invariant form with series coefficients.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Form {
    pub n: u32,
    terms: BTreeMap<Monomial, Series>,
}

impl Form {
    pub fn zero(n: u32) -> Self {
        Form {
            n,
            terms: BTreeMap::new(),
        }
    }

    /// The constant function 1 viewed as a 0-form.
    pub fn unit(n: u32) -> Self {
        Form::from_terms(n, [(Monomial::ONE, Series::one())])
    }

    pub fn from_terms(n: u32, it: impl IntoIterator<Item = (Monomial, Series)>) -> Self {
        let mut f = Form::zero(n);
        for (m, s) in it {
            f.add_term(m, &s);
        }
        f
    }

    /// Single generator 1-form.
    pub fn generator(n: u32, g: Generator) -> Self {
        let mono = match g {
            Generator::Hol(i) => Monomial {
                p_mask: 1 << i,
                q_mask: 0,
            },
            Generator::Antihol(j) => Monomial {
                p_mask: 0,
                q_mask: 1 << j,
            },
        };
        Form::from_terms(n, [(mono, Series::one())])
    }

    pub fn add_term(&mut self, m: Monomial, s: &Series) {
        if s.is_zero() {
            return;
        }
        debug_assert!(m.p_mask >> self.n == 0 && m.q_mask >> self.n == 0);
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(s.clone());
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let v = e.get().add(s);
                if v.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = v;
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Series)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Monomial) -> Series {
        self.terms.get(m).cloned().unwrap_or_else(|| Series::constant(GaussRational::zero()))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, rhs: &Form) -> Form {
        assert_eq!(self.n, rhs.n, "model mismatch");
        let mut out = self.clone();
        for (m, s) in &rhs.terms {
            out.add_term(*m, s);
        }
        out
    }

    pub fn sub(&self, rhs: &Form) -> Form {
        self.add(&rhs.neg())
    }

    pub fn neg(&self) -> Form {
        Form {
            n: self.n,
            terms: self.terms.iter().map(|(m, s)| (*m, s.neg())).collect(),
        }
    }

    pub fn scale(&self, c: &GaussRational) -> Form {
        if c.is_zero() {
            return Form::zero(self.n);
        }
        Form {
            n: self.n,
            terms: self.terms.iter().map(|(m, s)| (*m, s.scale(c))).collect(),
        }
    }

    pub fn scale_series(&self, c: &Series) -> Form {
        let mut out = Form::zero(self.n);
        for (m, s) in &self.terms {
            out.add_term(*m, &s.mul(c));
        }
        out
    }

    pub fn wedge(&self, rhs: &Form) -> Form {
        assert_eq!(self.n, rhs.n, "model mismatch");
        let mut out = Form::zero(self.n);
        for (ma, sa) in &self.terms {
            for (mb, sb) in &rhs.terms {
                if let Some((m, sign)) = ma.wedge(mb) {
                    let mut s = sa.mul(sb);
                    if sign < 0 {
                        s = s.neg();
                    }
                    out.add_term(m, &s);
                }
            }
        }
        out
    }

    /// Complex conjugate: swaps bidegree blocks, conjugates series.
    pub fn conj(&self) -> Form {
        let mut out = Form::zero(self.n);
        for (m, s) in &self.terms {
            let (cm, sign) = m.conj();
            let mut cs = s.conj();
            if sign < 0 {
                cs = cs.neg();
            }
            out.add_term(cm, &cs);
        }
        out
    }

    /// Component of bidegree `(p, q)`.
    pub fn bidegree_part(&self, p: u32, q: u32) -> Form {
        Form {
            n: self.n,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.p_degree() == p && m.q_degree() == q)
                .map(|(m, s)| (*m, s.clone()))
                .collect(),
        }
    }

    /// All bidegrees present.
    pub fn bidegrees(&self) -> Vec<(u32, u32)> {
        let mut set: Vec<(u32, u32)> = self
            .terms
            .keys()
            .map(|m| (m.p_degree(), m.q_degree()))
            .collect();
        set.sort_unstable();
        set.dedup();
        set
    }

    /// `Some((p, q))` when all terms share one bidegree (zero counts as any).
    pub fn pure_bidegree(&self) -> Option<(u32, u32)> {
        let bs = self.bidegrees();
        match bs.len() {
            0 => Some((0, 0)),
            1 => Some(bs[0]),
            _ => None,
        }
    }

    /// Homogeneous part of total parameter degree `k` (coefficient-wise).
    pub fn t_homogeneous(&self, k: u32) -> Form {
        let mut out = Form::zero(self.n);
        for (m, s) in &self.terms {
            out.add_term(*m, &s.homogeneous(k));
        }
        out
    }

    /// Largest parameter degree present.
    pub fn t_order_max(&self) -> u32 {
        self.terms
            .values()
            .flat_map(|s| s.terms().map(|(e, _)| e.iter().map(|&x| x as u32).sum()))
            .max()
            .unwrap_or(0)
    }

    /// Smallest parameter degree present, `None` on zero.
    pub fn t_order_min(&self) -> Option<u32> {
        self.terms.values().filter_map(|s| s.min_order()).min()
    }

    pub fn truncate(&self, new_trunc: u32) -> Form {
        let mut out = Form::zero(self.n);
        for (m, s) in &self.terms {
            out.add_term(*m, &s.truncate(new_trunc));
        }
        out
    }

    /// Evaluate all coefficients at an exact parameter point.
    pub fn eval(&self, point: &[GaussRational]) -> Form {
        let mut out = Form::zero(self.n);
        for (m, s) in &self.terms {
            out.add_term(*m, &Series::constant(s.eval(point)));
        }
        out
    }

    /// Coefficients as plain scalars; panics when a series is non-constant.
    pub fn constant_coeffs(&self) -> BTreeMap<Monomial, GaussRational> {
        self.terms
            .iter()
            .map(|(m, s)| {
                assert!(s.is_constant(), "form has non-constant coefficients");
                (*m, s.constant_part())
            })
            .collect()
    }

    /// Squared norm in the orthonormal monomial metric (constant forms).
    pub fn norm_sq(&self) -> num_rational::BigRational {
        let mut acc = num_rational::BigRational::new(0.into(), 1.into());
        for (_, s) in &self.terms {
            assert!(s.is_constant());
            acc += s.constant_part().norm_sq();
        }
        acc
    }
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, s) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if m.degree() == 0 {
                write!(f, "({s})")?;
            } else {
                write!(f, "({s})*{m}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mono(p: &[u32], q: &[u32]) -> Monomial {
        Monomial {
            p_mask: p.iter().fold(0, |acc, &i| acc | (1 << i)),
            q_mask: q.iter().fold(0, |acc, &i| acc | (1 << i)),
        }
    }

    #[test]
    fn wedge_basis_monomials() {
        let a = mono(&[0, 1], &[]);
        let b = mono(&[], &[0]);
        let (m, sign) = a.wedge(&b).unwrap();
        assert_eq!(m, mono(&[0, 1], &[0]));
        assert_eq!(sign, 1);
        assert!(a.wedge(&mono(&[1], &[])).is_none());
    }

    #[test]
    fn wedge_sign_reordering() {
        // q1 ^ p1 = -(p1 ^ q1)
        let qm = mono(&[], &[0]);
        let pm = mono(&[0], &[]);
        let (m, sign) = qm.wedge(&pm).unwrap();
        assert_eq!(m, mono(&[0], &[0]));
        assert_eq!(sign, -1);
    }

    #[test]
    fn contraction_signs() {
        // Z_2 hooked into p1^p2: second slot, sign -1
        let m = mono(&[0, 1], &[]);
        let (r, s) = m.contract_hol(1).unwrap();
        assert_eq!(r, mono(&[0], &[]));
        assert_eq!(s, -1);
        // conjugate vector passes over the whole p-block
        let m2 = mono(&[0], &[0]);
        let (r2, s2) = m2.contract_antihol(0).unwrap();
        assert_eq!(r2, mono(&[0], &[]));
        assert_eq!(s2, -1);
    }

    #[test]
    fn real_one_one_form_is_conj_fixed() {
        // i p1^q1 is real
        let f = Form::from_terms(
            2,
            [(mono(&[0], &[0]), Series::constant(GaussRational::i()))],
        );
        assert_eq!(f.conj(), f);
    }

    fn arb_scalar() -> impl Strategy<Value = GaussRational> {
        (-4i64..5, 1i64..4, -4i64..5, 1i64..4)
            .prop_map(|(a, b, c, d)| &GaussRational::from_ratio(a, b) + &GaussRational::from_ratio_i(c, d))
    }

    fn arb_form(n: u32) -> impl Strategy<Value = Form> {
        let gens = 2 * n;
        prop::collection::vec((0u32..(1 << gens), arb_scalar()), 0..4).prop_map(move |ts| {
            let mask = (1u32 << n) - 1;
            Form::from_terms(
                n,
                ts.into_iter().map(|(bits, c)| {
                    (
                        Monomial {
                            p_mask: bits & mask,
                            q_mask: (bits >> n) & mask,
                        },
                        Series::constant(c),
                    )
                }),
            )
        })
    }

    proptest! {
        #[test]
        fn graded_commutativity(a in arb_form(3), b in arb_form(3)) {
            // check bidegree-homogeneous pieces: a^b = (-1)^{|a||b|} b^a
            for (pa, qa) in a.bidegrees() {
                for (pb, qb) in b.bidegrees() {
                    let fa = a.bidegree_part(pa, qa);
                    let fb = b.bidegree_part(pb, qb);
                    let lhs = fa.wedge(&fb);
                    let rhs = if ((pa + qa) * (pb + qb)) % 2 == 0 {
                        fb.wedge(&fa)
                    } else {
                        fb.wedge(&fa).neg()
                    };
                    prop_assert_eq!(lhs, rhs);
                }
            }
        }

        #[test]
        fn conjugation_involution(a in arb_form(3)) {
            prop_assert_eq!(a.conj().conj(), a);
        }

        #[test]
        fn odd_forms_square_to_zero(a in arb_form(3)) {
            let mut odd = Form::zero(3);
            for (p, q) in a.bidegrees() {
                if (p + q) % 2 == 1 {
                    odd = odd.add(&a.bidegree_part(p, q));
                }
            }
            prop_assert!(odd.wedge(&odd).is_zero());
        }

        #[test]
        fn wedge_associativity(a in arb_form(2), b in arb_form(2), c in arb_form(2)) {
            prop_assert_eq!(a.wedge(&b).wedge(&c), a.wedge(&b.wedge(&c)));
        }
    }
}
