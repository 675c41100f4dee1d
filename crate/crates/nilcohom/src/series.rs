//! Truncated polynomials in the deformation parameters.
//!
//! A [`Series`] lives in the ring Q(i)[t_1..t_m, tb_1..tb_m] / (total degree > N),
//! where `tb_j` is the formal conjugate of `t_j`. Conjugation swaps the two
//! variable blocks and conjugates coefficients. Every product truncates
//! immediately, so all downstream identities are exact statements about this
//! finite ring.

use crate::scalar::GaussRational;
use std::collections::BTreeMap;
use std::fmt;

/// Exponent vector: the first `m` entries are powers of `t_i`, the last `m`
/// of `tb_i`.
pub type Expo = Vec<u8>;

fn total_degree(e: &Expo) -> u32 {
    e.iter().map(|&x| x as u32).sum()
}

#[derive(Clone, Debug)]
pub struct Series {
    /// Number of deformation parameters. `m == 0` means a plain constant,
    /// which unifies with any parameter context on contact.
    pub m: usize,
    /// Truncation order: terms of total degree > trunc are dropped.
    pub trunc: u32,
    terms: BTreeMap<Expo, GaussRational>,
}

/// Equality is semantic: two series agree when they define the same sparse
/// polynomial, independent of the stored parameter-context arity.
impl PartialEq for Series {
    fn eq(&self, other: &Self) -> bool {
        self.canonical_terms() == other.canonical_terms()
    }
}

impl Eq for Series {}

impl Series {
    pub fn zero(m: usize, trunc: u32) -> Self {
        Series {
            m,
            trunc,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(c: GaussRational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Vec::new(), c);
        }
        Series {
            m: 0,
            trunc: 0,
            terms,
        }
    }

    pub fn one() -> Self {
        Series::constant(GaussRational::one())
    }

    pub fn from_terms(m: usize, trunc: u32, it: impl IntoIterator<Item = (Expo, GaussRational)>) -> Self {
        let mut s = Series::zero(m, trunc);
        for (e, c) in it {
            s.add_term(&e, &c);
        }
        s
    }

    /// The variable `t_{idx}` (0-based).
    pub fn var(m: usize, trunc: u32, idx: usize) -> Self {
        assert!(idx < m);
        let mut e = vec![0u8; 2 * m];
        e[idx] = 1;
        Series::from_terms(m, trunc, [(e, GaussRational::one())])
    }

    /// The conjugate variable `tb_{idx}` (0-based).
    pub fn var_conj(m: usize, trunc: u32, idx: usize) -> Self {
        assert!(idx < m);
        let mut e = vec![0u8; 2 * m];
        e[m + idx] = 1;
        Series::from_terms(m, trunc, [(e, GaussRational::one())])
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|e| total_degree(e) == 0)
    }

    /// The coefficient of the degree-zero term.
    pub fn constant_part(&self) -> GaussRational {
        let key = vec![0u8; 2 * self.m];
        self.terms
            .get(&key)
            .or_else(|| self.terms.get(&Vec::new()))
            .cloned()
            .unwrap_or_else(GaussRational::zero)
    }

    /// Smallest total degree of a stored term, `None` when zero.
    pub fn min_order(&self) -> Option<u32> {
        self.terms.keys().map(total_degree).min()
    }

    /// Context-free sparse representation: `(is_conj, var, power)` triples.
    fn canonical_terms(&self) -> BTreeMap<Vec<(bool, usize, u8)>, GaussRational> {
        self.terms
            .iter()
            .map(|(e, c)| {
                let mut key = Vec::new();
                for (i, &pow) in e.iter().enumerate() {
                    if pow > 0 {
                        if i < self.m {
                            key.push((false, i, pow));
                        } else {
                            key.push((true, i - self.m, pow));
                        }
                    }
                }
                key.sort_unstable();
                (key, c.clone())
            })
            .collect()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Expo, &GaussRational)> {
        self.terms.iter()
    }

    fn add_term(&mut self, e: &Expo, c: &GaussRational) {
        if c.is_zero() || total_degree(e) > self.trunc && self.m > 0 {
            return;
        }
        let key = if e.len() == 2 * self.m {
            e.clone()
        } else {
            // promote a constant-context exponent
            assert!(e.iter().all(|&x| x == 0), "exponent arity mismatch");
            vec![0u8; 2 * self.m]
        };
        let entry = self.terms.entry(key).or_insert_with(GaussRational::zero);
        *entry += c;
        if entry.is_zero() {
            let key = if e.len() == 2 * self.m {
                e.clone()
            } else {
                vec![0u8; 2 * self.m]
            };
            self.terms.remove(&key);
        }
    }

    /// Unify parameter contexts: constants adopt the other side's context;
    /// mismatched truncations meet at the finer (smaller) bound.
    fn unified(a: &Series, b: &Series) -> (Series, Series) {
        if a.m == b.m && a.trunc == b.trunc {
            return (a.clone(), b.clone());
        }
        if a.m == 0 {
            return (a.promote(b.m, b.trunc), b.clone());
        }
        if b.m == 0 {
            return (a.clone(), b.promote(a.m, a.trunc));
        }
        if a.m == b.m {
            let t = a.trunc.min(b.trunc);
            return (a.truncate(t), b.truncate(t));
        }
        panic!(
            "incompatible series contexts: (m={},N={}) vs (m={},N={})",
            a.m, a.trunc, b.m, b.trunc
        );
    }

    pub fn promote(&self, m: usize, trunc: u32) -> Series {
        if self.m == m && self.trunc == trunc {
            return self.clone();
        }
        assert!(self.m == 0, "cannot promote a non-constant series");
        let mut s = Series::zero(m, trunc);
        for (e, c) in &self.terms {
            debug_assert!(total_degree(e) == 0);
            s.add_term(&vec![0u8; 2 * m], c);
        }
        s
    }

    pub fn add(&self, rhs: &Series) -> Series {
        let (a, b) = Series::unified(self, rhs);
        let mut out = a;
        for (e, c) in &b.terms {
            out.add_term(e, c);
        }
        out
    }

    pub fn sub(&self, rhs: &Series) -> Series {
        self.add(&rhs.neg())
    }

    pub fn neg(&self) -> Series {
        Series {
            m: self.m,
            trunc: self.trunc,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect(),
        }
    }

    pub fn mul(&self, rhs: &Series) -> Series {
        let (a, b) = Series::unified(self, rhs);
        let mut out = Series::zero(a.m, a.trunc);
        for (ea, ca) in &a.terms {
            let da = total_degree(ea);
            for (eb, cb) in &b.terms {
                if a.m > 0 && da + total_degree(eb) > a.trunc {
                    continue;
                }
                let e: Expo = ea.iter().zip(eb.iter()).map(|(x, y)| x + y).collect();
                out.add_term(&e, &(ca * cb));
            }
        }
        out
    }

    pub fn scale(&self, c: &GaussRational) -> Series {
        if c.is_zero() {
            return Series::zero(self.m, self.trunc);
        }
        Series {
            m: self.m,
            trunc: self.trunc,
            terms: self.terms.iter().map(|(e, k)| (e.clone(), k * c)).collect(),
        }
    }

    /// Swap `t_i <-> tb_i` and conjugate coefficients.
    pub fn conj(&self) -> Series {
        let mut out = Series::zero(self.m, self.trunc);
        for (e, c) in &self.terms {
            let mut f = e.clone();
            if self.m > 0 {
                let (t_part, tb_part) = e.split_at(self.m);
                f = tb_part.iter().chain(t_part.iter()).copied().collect();
            }
            out.add_term(&f, &c.conj());
        }
        out
    }

    /// Drop all terms of total degree > `new_trunc`.
    pub fn truncate(&self, new_trunc: u32) -> Series {
        Series {
            m: self.m,
            trunc: new_trunc.min(self.trunc),
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| total_degree(e) <= new_trunc)
                .map(|(e, c)| (e.clone(), c.clone()))
                .collect(),
        }
    }

    /// Homogeneous part of total degree `k`.
    pub fn homogeneous(&self, k: u32) -> Series {
        Series {
            m: self.m,
            trunc: self.trunc,
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| total_degree(e) == k)
                .map(|(e, c)| (e.clone(), c.clone()))
                .collect(),
        }
    }

    /// Evaluate at an exact parameter point; `tb_i` gets the conjugate of `t_i`.
    pub fn eval(&self, point: &[GaussRational]) -> GaussRational {
        let mut acc = GaussRational::zero();
        for (e, c) in &self.terms {
            let mut v = c.clone();
            if self.m > 0 {
                assert_eq!(point.len(), self.m, "sample arity mismatch");
                for i in 0..self.m {
                    for _ in 0..e[i] {
                        v *= &point[i];
                    }
                    for _ in 0..e[self.m + i] {
                        v *= &point[i].conj();
                    }
                }
            }
            acc += &v;
        }
        acc
    }
}

impl fmt::Display for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let mut factors = Vec::new();
            for (i, &p) in e.iter().enumerate() {
                if p == 0 {
                    continue;
                }
                let name = if i < self.m {
                    format!("t{}", i + 1)
                } else {
                    format!("tb{}", i + 1 - self.m)
                };
                if p == 1 {
                    factors.push(name);
                } else {
                    factors.push(format!("{name}^{p}"));
                }
            }
            if factors.is_empty() {
                write!(f, "{c}")?;
            } else {
                write!(f, "({c})*{}", factors.join("*"))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(i: usize) -> Series {
        Series::var(2, 3, i)
    }

    #[test]
    fn truncation_drops_high_degree() {
        let t0 = t(0);
        let sq = t0.mul(&t0);
        let cube = sq.mul(&t0);
        let quartic = cube.mul(&t0);
        assert!(!cube.is_zero());
        assert!(quartic.is_zero());
    }

    #[test]
    fn conjugation_is_involutive_and_swaps_blocks() {
        let s = t(0).mul(&Series::var_conj(2, 3, 1)).scale(&GaussRational::i());
        assert_eq!(s.conj().conj(), s);
        let c = s.conj();
        let (e, coeff) = c.terms().next().unwrap();
        assert_eq!(e, &vec![0, 1, 1, 0]);
        assert_eq!(coeff, &GaussRational::from_ratio_i(-1, 1));
    }

    #[test]
    fn constants_unify_with_any_context() {
        let c = Series::constant(GaussRational::from_int(2));
        let s = t(1).mul(&c);
        assert_eq!(s, t(1).add(&t(1)));
    }

    #[test]
    fn eval_substitutes_conjugates() {
        // i * t1 * tb1 at t1 = 1/2 + 1/2 i has |t1|^2 = 1/2
        let s = t(0)
            .mul(&Series::var_conj(2, 3, 0))
            .scale(&GaussRational::i());
        let p = vec![
            &GaussRational::from_ratio(1, 2) + &GaussRational::from_ratio_i(1, 2),
            GaussRational::zero(),
        ];
        assert_eq!(s.eval(&p), GaussRational::from_ratio_i(1, 2));
    }

    #[test]
    fn compute_then_truncate_matches_truncated_compute() {
        let a = t(0).add(&Series::var_conj(2, 3, 0));
        let b = t(1).add(&Series::one());
        let hi = a.mul(&b).mul(&a);
        let lo = a.truncate(2).mul(&b.truncate(2)).mul(&a.truncate(2));
        assert_eq!(hi.truncate(2), lo.truncate(2));
    }
}
