//! Slot substitutions: the extension maps and simultaneous contraction.
//!
//! Operators like `e^{iota_phi}`, `e^{iota_phi | iota_phibar}` and
//! `(1 - phibar phi)^{-1} -|` all act on a monomial by replacing every
//! 1-form factor with a series-linear combination of the 2n generators and
//! wedging the images back together. They are therefore captured by one
//! type: a (2n) x (2n) matrix over [`Series`] acting on generator slots.

use crate::calculus::Beltrami;
use crate::form::{Form, Generator, Monomial};
use crate::series::Series;
use crate::scalar::GaussRational;

/// A slot substitution: generator `a` maps to `sum_b entry[a][b] * gen_b`.
/// Indices 0..n are the holomorphic generators, n..2n the conjugated ones.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct EndomorphismField {
    pub n: u32,
    entries: Vec<Vec<Series>>,
}

fn gen_of_index(n: u32, a: usize) -> Generator {
    if (a as u32) < n {
        Generator::Hol(a as u32)
    } else {
        Generator::Antihol(a as u32 - n)
    }
}

fn index_of_gen(n: u32, g: Generator) -> usize {
    match g {
        Generator::Hol(i) => i as usize,
        Generator::Antihol(j) => (n + j) as usize,
    }
}

impl EndomorphismField {
    pub fn identity(n: u32) -> Self {
        let dim = 2 * n as usize;
        let mut entries = vec![vec![Series::constant(GaussRational::zero()); dim]; dim];
        for (a, row) in entries.iter_mut().enumerate() {
            row[a] = Series::one();
        }
        EndomorphismField { n, entries }
    }

    pub fn entry(&self, a: usize, b: usize) -> &Series {
        &self.entries[a][b]
    }

    pub fn set_entry(&mut self, a: usize, b: usize, s: Series) {
        self.entries[a][b] = s;
    }

    /// Image of one generator slot as a 1-form.
    pub fn image(&self, g: Generator) -> Form {
        let a = index_of_gen(self.n, g);
        let mut f = Form::zero(self.n);
        for (b, s) in self.entries[a].iter().enumerate() {
            if s.is_zero() {
                continue;
            }
            f = f.add(&Form::generator(self.n, gen_of_index(self.n, b)).scale_series(s));
        }
        f
    }

    /// Substitute every factor of every monomial and wedge the images.
    pub fn apply(&self, a: &Form) -> Form {
        assert_eq!(self.n, a.n, "model mismatch");
        let mut out = Form::zero(a.n);
        for (mono, coeff) in a.terms() {
            let mut acc = Form::from_terms(a.n, [(Monomial::ONE, coeff.clone())]);
            for g in mono.factors() {
                acc = acc.wedge(&self.image(g));
                if acc.is_zero() {
                    break;
                }
            }
            out = out.add(&acc);
        }
        out
    }

    /// Composition `self . rhs` (apply `rhs` first).
    pub fn compose(&self, rhs: &EndomorphismField) -> EndomorphismField {
        assert_eq!(self.n, rhs.n);
        let dim = 2 * self.n as usize;
        let mut entries = vec![vec![Series::constant(GaussRational::zero()); dim]; dim];
        for a in 0..dim {
            for b in 0..dim {
                let mut acc = Series::constant(GaussRational::zero());
                for k in 0..dim {
                    if rhs.entries[a][k].is_zero() || self.entries[k][b].is_zero() {
                        continue;
                    }
                    acc = acc.add(&rhs.entries[a][k].mul(&self.entries[k][b]));
                }
                entries[a][b] = acc;
            }
        }
        EndomorphismField { n: self.n, entries }
    }

    pub fn sub(&self, rhs: &EndomorphismField) -> EndomorphismField {
        let dim = 2 * self.n as usize;
        let mut out = self.clone();
        for a in 0..dim {
            for b in 0..dim {
                out.entries[a][b] = out.entries[a][b].sub(&rhs.entries[a][b]);
            }
        }
        out
    }

    /// Neumann inverse of `1 - Q` where `Q` has strictly positive order.
    /// Panics when the order-0 part is not the identity.
    pub fn inverse(&self) -> EndomorphismField {
        let n = self.n;
        let dim = 2 * n as usize;
        let id = EndomorphismField::identity(n);
        let q = id.sub(self);
        for a in 0..dim {
            for b in 0..dim {
                if let Some(0) = q.entries[a][b].min_order() {
                    panic!("inverse_endo: order-0 part is not the identity");
                }
            }
        }
        // sum Q^k; Q raises parameter order, so this terminates at the
        // truncation bound of the entries
        let mut acc = id.clone();
        let mut pow = id;
        loop {
            pow = pow.compose_matrix(&q);
            if pow.is_zero() {
                break;
            }
            acc = acc.plus(&pow);
        }
        acc
    }

    fn compose_matrix(&self, rhs: &EndomorphismField) -> EndomorphismField {
        // product with self's rows contracted against rhs (matrix product
        // in the same orientation as `compose`)
        rhs.compose(self)
    }

    fn plus(&self, rhs: &EndomorphismField) -> EndomorphismField {
        let dim = 2 * self.n as usize;
        let mut out = self.clone();
        for a in 0..dim {
            for b in 0..dim {
                out.entries[a][b] = out.entries[a][b].add(&rhs.entries[a][b]);
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().flatten().all(Series::is_zero)
    }

    /// Evaluate every entry at a parameter point.
    pub fn eval(&self, point: &[GaussRational]) -> EndomorphismField {
        let dim = 2 * self.n as usize;
        let mut out = EndomorphismField::identity(self.n);
        for a in 0..dim {
            for b in 0..dim {
                out.entries[a][b] = Series::constant(self.entries[a][b].eval(point));
            }
        }
        out
    }
}

/// Coefficient of `gen_b` in the 1-form `f` (assumed series-linear in slots).
fn slot_coeff(f: &Form, n: u32, b: usize) -> Series {
    let g = gen_of_index(n, b);
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
    f.coeff(&mono)
}

/// `e^{iota_phi}` as a substitution: `p^i -> p^i + phi^i`, `q^j` fixed.
pub fn exp_substitution(phi: &Beltrami) -> EndomorphismField {
    let n = phi.n();
    let mut e = EndomorphismField::identity(n);
    for (i, comp) in phi.components.iter().enumerate() {
        assert!(
            comp.is_zero() || comp.pure_bidegree() == Some((0, 1)),
            "exponential substitution needs a (0,1)-Beltrami"
        );
        for b in 0..2 * n as usize {
            let c = slot_coeff(comp, n, b);
            if !c.is_zero() {
                let cur = e.entry(i, b).add(&c);
                e.set_entry(i, b, cur);
            }
        }
    }
    e
}

/// `e^{iota_phi | iota_phibar}`: additionally `q^j -> q^j + conj(phi^j)`.
pub fn ext_pair_substitution(phi: &Beltrami) -> EndomorphismField {
    let n = phi.n();
    let mut e = exp_substitution(phi);
    for (j, comp) in phi.components.iter().enumerate() {
        let cj = comp.conj();
        for b in 0..2 * n as usize {
            let c = slot_coeff(&cj, n, b);
            if !c.is_zero() {
                let cur = e.entry(n as usize + j, b).add(&c);
                e.set_entry(n as usize + j, b, cur);
            }
        }
    }
    e
}

/// The operator `phibar phi = phi -| phibar` acting on conjugated slots:
/// `q^j -> iota_phi(conj(phi^j))`, holomorphic slots untouched.
pub fn phibar_phi(phi: &Beltrami) -> EndomorphismField {
    let n = phi.n();
    let dim = 2 * n as usize;
    let mut m = EndomorphismField::identity(n);
    // start from zero
    for a in 0..dim {
        for b in 0..dim {
            m.set_entry(a, b, Series::constant(GaussRational::zero()));
        }
    }
    for j in 0..n as usize {
        let img = phi.contract(&phi.components[j].conj());
        for b in 0..dim {
            let c = slot_coeff(&img, n, b);
            if !c.is_zero() {
                m.set_entry(n as usize + j, b, c);
            }
        }
    }
    m
}

/// The conjugate operator `phi phibar = phibar -| phi` on holomorphic slots.
pub fn phi_phibar(phi: &Beltrami) -> EndomorphismField {
    let n = phi.n();
    let dim = 2 * n as usize;
    let mut m = EndomorphismField::identity(n);
    for a in 0..dim {
        for b in 0..dim {
            m.set_entry(a, b, Series::constant(GaussRational::zero()));
        }
    }
    for i in 0..n as usize {
        let img = phi.contract_conj(&phi.components[i]);
        for b in 0..dim {
            let c = slot_coeff(&img, n, b);
            if !c.is_zero() {
                m.set_entry(i, b, c);
            }
        }
    }
    m
}

/// `1 - phibar phi`.
pub fn one_minus_phibar_phi(phi: &Beltrami) -> EndomorphismField {
    EndomorphismField::identity(phi.n()).sub(&phibar_phi(phi))
}

/// `1 - phi phibar`.
pub fn one_minus_phi_phibar(phi: &Beltrami) -> EndomorphismField {
    EndomorphismField::identity(phi.n()).sub(&phi_phibar(phi))
}

/// Extension operator `rho_phi = e^{iota_phi|iota_phibar} . (1-phibar phi)^{-1} -|`.
pub fn rho(phi: &Beltrami, a: &Form) -> Form {
    rho_substitution(phi).apply(a)
}

pub fn rho_substitution(phi: &Beltrami) -> EndomorphismField {
    ext_pair_substitution(phi).compose(&one_minus_phibar_phi(phi).inverse())
}

/// Direct per-monomial realization of the extension operator: holomorphic
/// slots get `p^i + phi -| p^i`, conjugated slots get the inverse-matrix
/// combination of `q^k + phibar -| q^k`. An independent route used to
/// cross-check [`rho`].
pub fn rho_direct(phi: &Beltrami, a: &Form) -> Form {
    let n = phi.n();
    let minv = one_minus_phibar_phi(phi).inverse();
    let mut out = Form::zero(n);
    for (mono, coeff) in a.terms() {
        let mut acc = Form::from_terms(n, [(Monomial::ONE, coeff.clone())]);
        for g in mono.factors() {
            let img = match g {
                Generator::Hol(i) => {
                    Form::generator(n, g).add(&phi.components[i as usize].clone())
                }
                Generator::Antihol(j) => {
                    let mut f = Form::zero(n);
                    for k in 0..n as usize {
                        let c = minv.entry(n as usize + j as usize, n as usize + k);
                        if c.is_zero() {
                            continue;
                        }
                        let qk = Form::generator(n, Generator::Antihol(k as u32));
                        let base = qk.add(&phi.components[k].conj());
                        f = f.add(&base.scale_series(c));
                    }
                    f
                }
            };
            acc = acc.wedge(&img);
            if acc.is_zero() {
                break;
            }
        }
        out = out.add(&acc);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::exp_contract;
    use crate::form::Generator;

    fn simple_phi(n: u32, m: usize, trunc: u32) -> Beltrami {
        // phi = t1 qbar^1 (x) Z_1 (+ t2 qbar^2 (x) Z_2 when n > 1)
        let mut b = Beltrami::zero(n);
        b.components[0] =
            Form::generator(n, Generator::Antihol(0)).scale_series(&Series::var(m, trunc, 0));
        if n > 1 && m > 1 {
            b.components[1] =
                Form::generator(n, Generator::Antihol(1)).scale_series(&Series::var(m, trunc, 1));
        }
        b
    }

    #[test]
    fn exp_substitution_matches_iterated_contraction() {
        let n = 3;
        let phi = simple_phi(n, 2, 3);
        let e = exp_substitution(&phi);
        let a = Form::generator(n, Generator::Hol(0))
            .wedge(&Form::generator(n, Generator::Hol(1)))
            .wedge(&Form::generator(n, Generator::Antihol(2)));
        assert_eq!(e.apply(&a), exp_contract(&phi, &a));
    }

    #[test]
    fn rho_at_zero_is_identity() {
        let n = 2;
        let phi = Beltrami::zero(n);
        let a = Form::generator(n, Generator::Hol(0)).wedge(&Form::generator(n, Generator::Antihol(1)));
        assert_eq!(rho(&phi, &a), a);
    }

    #[test]
    fn rho_two_routes_agree() {
        let n = 2;
        let phi = simple_phi(n, 2, 4);
        for a in [
            Form::generator(n, Generator::Hol(0)).wedge(&Form::generator(n, Generator::Antihol(0))),
            Form::generator(n, Generator::Hol(1)).wedge(&Form::generator(n, Generator::Antihol(1))),
            Form::generator(n, Generator::Hol(0))
                .wedge(&Form::generator(n, Generator::Hol(1)))
                .wedge(&Form::generator(n, Generator::Antihol(0))),
        ] {
            assert_eq!(rho(&phi, &a), rho_direct(&phi, &a));
        }
    }

    #[test]
    fn inverse_is_exact_in_truncated_ring() {
        let n = 2;
        let phi = simple_phi(n, 2, 4);
        let m = one_minus_phibar_phi(&phi);
        let minv = m.inverse();
        let prod = m.compose(&minv);
        assert_eq!(prod, EndomorphismField::identity(n));
        let prod2 = minv.compose(&m);
        assert_eq!(prod2, EndomorphismField::identity(n));
    }

    #[test]
    fn pair_map_on_one_one_form() {
        // (1,1)-form p1^q1 with phi = t qbar1 (x) Z1 ->
        // (p1 + t qbar1) ^ (q1 + tb p1)
        let n = 1;
        let phi = simple_phi(n, 1, 4);
        let a = Form::generator(n, Generator::Hol(0)).wedge(&Form::generator(n, Generator::Antihol(0)));
        let out = ext_pair_substitution(&phi).apply(&a);
        let p1 = Form::generator(n, Generator::Hol(0));
        let q1 = Form::generator(n, Generator::Antihol(0));
        let t = Series::var(1, 4, 0);
        let expect = p1
            .add(&q1.scale_series(&t))
            .wedge(&q1.add(&p1.scale_series(&t.conj())));
        assert_eq!(out, expect);
    }
}
