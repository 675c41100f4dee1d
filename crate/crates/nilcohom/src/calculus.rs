//! Differentials and the vector-valued contraction calculus.
//!
//! `d`, `del`, `delbar` act on [`Form`]s by the Leibniz rule over the model's
//! structure equations. [`Beltrami`] holds tangent-valued forms; brackets are
//! defined through the contraction identity evaluated on degree-one test
//! forms, which is the only definition available on invariant data.

use crate::form::{Form, Generator};
use crate::model::ComplexModel;
use crate::scalar::GaussRational;
use crate::series::Series;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum DiffKind {
    D,
    Del,
    Delbar,
}

/// Apply `d`, `del`, or `delbar` by the graded Leibniz rule.
pub fn differential(model: &ComplexModel, kind: DiffKind, a: &Form) -> Form {
    assert_eq!(model.n, a.n, "model mismatch");
    let mut out = Form::zero(a.n);
    for (mono, coeff) in a.terms() {
        let factors = mono.factors();
        for (slot, g) in factors.iter().enumerate() {
            let image = model.d_generator(*g, kind);
            if image.is_zero() {
                continue;
            }
            let mut rest = *mono;
            let (reduced, _s) = match g {
                Generator::Hol(i) => rest.contract_hol(*i).unwrap(),
                Generator::Antihol(j) => rest.contract_antihol(*j).unwrap(),
            };
            rest = reduced;
            // d(g_1^..^g_k) = sum_s (-1)^s d(g_s) ^ (rest); the 2-form image
            // commutes past everything, the Leibniz sign is (-1)^slot.
            let mut term = image.wedge(&Form::from_terms(a.n, [(rest, coeff.clone())]));
            if slot % 2 == 1 {
                term = term.neg();
            }
            out = out.add(&term);
        }
    }
    out
}

pub fn d(model: &ComplexModel, a: &Form) -> Form {
    differential(model, DiffKind::D, a)
}

pub fn del(model: &ComplexModel, a: &Form) -> Form {
    differential(model, DiffKind::Del, a)
}

pub fn delbar(model: &ComplexModel, a: &Form) -> Form {
    differential(model, DiffKind::Delbar, a)
}

/// Which half of the frame a tangent-valued form takes values in.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum FrameSide {
    Hol,
    Antihol,
}

/// Contraction with `sum_i comps[i] (x) Z_i` (or the conjugate frame):
/// `iota(a) = sum_i comps[i] ^ (Z_i -| a)`.
pub fn contract_components(comps: &[Form], side: FrameSide, a: &Form) -> Form {
    let n = a.n;
    let mut out = Form::zero(n);
    for (i, comp) in comps.iter().enumerate() {
        if comp.is_zero() {
            continue;
        }
        for (mono, coeff) in a.terms() {
            let hooked = match side {
                FrameSide::Hol => mono.contract_hol(i as u32),
                FrameSide::Antihol => mono.contract_antihol(i as u32),
            };
            if let Some((rest, sign)) = hooked {
                let mut term = comp.wedge(&Form::from_terms(n, [(rest, coeff.clone())]));
                if sign < 0 {
                    term = term.neg();
                }
                out = out.add(&term);
            }
        }
    }
    out
}

/// A `T^{1,0}`-valued form: component `i` multiplies the frame vector `Z_i`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Beltrami {
    pub components: Vec<Form>,
}

impl Beltrami {
    pub fn zero(n: u32) -> Self {
        Beltrami {
            components: (0..n).map(|_| Form::zero(n)).collect(),
        }
    }

    pub fn n(&self) -> u32 {
        self.components.len() as u32
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(Form::is_zero)
    }

    pub fn add(&self, rhs: &Beltrami) -> Beltrami {
        Beltrami {
            components: self
                .components
                .iter()
                .zip(&rhs.components)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn sub(&self, rhs: &Beltrami) -> Beltrami {
        Beltrami {
            components: self
                .components
                .iter()
                .zip(&rhs.components)
                .map(|(a, b)| a.sub(b))
                .collect(),
        }
    }

    pub fn neg(&self) -> Beltrami {
        Beltrami {
            components: self.components.iter().map(Form::neg).collect(),
        }
    }

    pub fn scale(&self, c: &GaussRational) -> Beltrami {
        Beltrami {
            components: self.components.iter().map(|f| f.scale(c)).collect(),
        }
    }

    pub fn scale_series(&self, s: &Series) -> Beltrami {
        Beltrami {
            components: self.components.iter().map(|f| f.scale_series(s)).collect(),
        }
    }

    /// Common pure bidegree of the nonzero components, if any.
    pub fn pure_bidegree(&self) -> Option<(u32, u32)> {
        let mut found = None;
        for c in &self.components {
            if c.is_zero() {
                continue;
            }
            let b = c.pure_bidegree()?;
            match found {
                None => found = Some(b),
                Some(prev) if prev != b => return None,
                _ => {}
            }
        }
        found.or(Some((0, 0)))
    }

    /// `iota_phi a`.
    pub fn contract(&self, a: &Form) -> Form {
        contract_components(&self.components, FrameSide::Hol, a)
    }

    /// `iota_{conj(phi)} a`: the conjugate acts through the antiholomorphic frame.
    pub fn contract_conj(&self, a: &Form) -> Form {
        let comps: Vec<Form> = self.components.iter().map(Form::conj).collect();
        contract_components(&comps, FrameSide::Antihol, a)
    }

    /// Homogeneous parameter-degree `k` part, component-wise.
    pub fn t_homogeneous(&self, k: u32) -> Beltrami {
        Beltrami {
            components: self.components.iter().map(|f| f.t_homogeneous(k)).collect(),
        }
    }

    pub fn t_order_max(&self) -> u32 {
        self.components.iter().map(Form::t_order_max).max().unwrap_or(0)
    }

    pub fn eval(&self, point: &[GaussRational]) -> Beltrami {
        Beltrami {
            components: self.components.iter().map(|f| f.eval(point)).collect(),
        }
    }

    pub fn conj_components(&self) -> Vec<Form> {
        self.components.iter().map(Form::conj).collect()
    }
}

/// `e^{iota_phi} a` as the finite sum of iterated contractions.
pub fn exp_contract(phi: &Beltrami, a: &Form) -> Form {
    let mut out = Form::zero(a.n);
    let mut term = a.clone();
    let mut k: u64 = 0;
    let mut factorial = GaussRational::one();
    loop {
        out = out.add(&term.scale(&factorial.inv()));
        if term.is_zero() || k as u32 > 2 * a.n + 2 {
            break;
        }
        term = phi.contract(&term);
        k += 1;
        factorial = &factorial * &GaussRational::from_int(k as i64);
        if term.is_zero() {
            break;
        }
    }
    out
}

/// Lie derivative `L^{1,0}_phi = iota_phi del - del iota_phi`.
pub fn lie_derivative_10(model: &ComplexModel, phi: &Beltrami, a: &Form) -> Form {
    phi.contract(&del(model, a)).sub(&del(model, &phi.contract(a)))
}

/// Right-hand side of the contraction identity defining the bracket:
/// `-del(psi -| (phi -| a)) - psi -| (phi -| del a)
///  + phi -| del(psi -| a) + psi -| del(phi -| a)`.
pub fn bracket_identity_rhs(model: &ComplexModel, phi: &Beltrami, psi: &Beltrami, a: &Form) -> Form {
    let t1 = del(model, &psi.contract(&phi.contract(a))).neg();
    let t2 = psi.contract(&phi.contract(&del(model, a))).neg();
    let t3 = phi.contract(&del(model, &psi.contract(a)));
    let t4 = psi.contract(&del(model, &phi.contract(a)));
    t1.add(&t2).add(&t3).add(&t4)
}

/// `[phi, psi]` for `(0,1)`-Beltrami differentials, component `k` read off
/// by evaluating the identity on the degree-one test form `p_{k+1}`.
pub fn bracket(model: &ComplexModel, phi: &Beltrami, psi: &Beltrami) -> Beltrami {
    let n = model.n;
    let components = (0..n)
        .map(|k| {
            let test = Form::generator(n, Generator::Hol(k));
            bracket_identity_rhs(model, phi, psi, &test)
        })
        .collect();
    Beltrami { components }
}

/// `delbar` on tangent-valued forms: `delbar(w (x) Z_i) = delbar(w) (x) Z_i
/// + (-1)^{|w|} w ^ delbar(Z_i)`, with `delbar(Z_i)` read off the mixed
/// frame brackets.
pub fn delbar_beltrami(model: &ComplexModel, phi: &Beltrami) -> Beltrami {
    let n = model.n;
    let mut out = Beltrami::zero(n);
    for (i, comp) in phi.components.iter().enumerate() {
        if comp.is_zero() {
            continue;
        }
        out.components[i] = out.components[i].add(&delbar(model, comp));
        // frame term: delbar Z_i = sum_j qbar^j (x) [Zbar_j, Z_i]^{1,0}
        for (j, k, c) in model.delbar_frame(i as u32) {
            // split w by parity so the sign is exact on inhomogeneous input
            let qj = Form::generator(n, Generator::Antihol(j));
            for deg_even in [true, false] {
                let mut part = Form::zero(n);
                for (mono, s) in comp.terms() {
                    if (mono.degree() % 2 == 0) == deg_even {
                        part.add_term(*mono, s);
                    }
                }
                if part.is_zero() {
                    continue;
                }
                let mut term = part.wedge(&qj).scale(&c);
                if !deg_even {
                    term = term.neg();
                }
                out.components[k as usize] = out.components[k as usize].add(&term);
            }
        }
    }
    out
}

/// Maurer-Cartan residual `delbar(phi) - 1/2 [phi, phi]`.
pub fn maurer_cartan_residual(model: &ComplexModel, phi: &Beltrami) -> Beltrami {
    let half = GaussRational::from_ratio(1, 2);
    delbar_beltrami(model, phi).sub(&bracket(model, phi, phi).scale(&half))
}
