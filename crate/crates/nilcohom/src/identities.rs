//! Seeded random property suite for the operator identities.
//!
//! Every identity is asserted exactly; a single coefficient mismatch is a
//! failure. The suite is deterministic in the seed and is the machine check
//! behind the `identities` subcommand.

use crate::calculus::{self, Beltrami};
use crate::deform;
use crate::endo::{exp_substitution, ext_pair_substitution, one_minus_phibar_phi, rho, rho_direct};
use crate::form::{Form, Monomial};
use crate::model::ComplexModel;
use crate::par::{map_mode, ExecMode};
use crate::rng::Rng;
use crate::scalar::GaussRational;
use crate::series::Series;
use std::fmt::Write as _;

const M_PARAMS: usize = 2;
const TRUNC: u32 = 3;

fn random_scalar(rng: &mut Rng) -> GaussRational {
    let re = rng.small_int(3, false);
    let im = rng.small_int(3, false);
    let den = 1 + rng.below(3) as i64;
    &GaussRational::from_ratio(re, den) + &GaussRational::from_ratio_i(im, den)
}

fn random_series(rng: &mut Rng, m: usize, trunc: u32) -> Series {
    let mut s = Series::constant(random_scalar(rng)).promote(m, trunc);
    if rng.below(2) == 0 {
        let var = rng.below(m as u64) as usize;
        let v = if rng.below(2) == 0 {
            Series::var(m, trunc, var)
        } else {
            Series::var_conj(m, trunc, var)
        };
        s = s.add(&v.scale(&random_scalar(rng)));
    }
    s
}

fn random_monomial(rng: &mut Rng, n: u32) -> Monomial {
    let mask = (1u32 << n) - 1;
    Monomial {
        p_mask: rng.below(1 << n) as u32 & mask,
        q_mask: rng.below(1 << n) as u32 & mask,
    }
}

fn random_form(rng: &mut Rng, n: u32, m: usize) -> Form {
    let terms = 1 + rng.below(2);
    let mut f = Form::zero(n);
    for _ in 0..terms {
        f.add_term(random_monomial(rng, n), &random_series(rng, m, TRUNC));
    }
    f
}

fn random_pure_form(rng: &mut Rng, n: u32, m: usize) -> Form {
    let f = random_form(rng, n, m);
    let bs = f.bidegrees();
    if bs.is_empty() {
        return f;
    }
    let &(p, q) = rng.pick(&bs);
    f.bidegree_part(p, q)
}

/// Random (0,1)-Beltrami differential with series coefficients.
fn random_beltrami(rng: &mut Rng, n: u32, positive_order: bool) -> Beltrami {
    let mut b = Beltrami::zero(n);
    for i in 0..n as usize {
        if rng.below(3) == 0 {
            continue;
        }
        let j = rng.below(n as u64) as u32;
        let mut s = random_series(rng, M_PARAMS, TRUNC);
        if positive_order {
            let var = rng.below(M_PARAMS as u64) as usize;
            s = s.mul(&Series::var(M_PARAMS, TRUNC, var));
        }
        b.components[i].add_term(
            Monomial {
                p_mask: 0,
                q_mask: 1 << j,
            },
            &s,
        );
    }
    b
}

#[derive(Clone, Debug)]
pub struct IdentityOutcome {
    pub name: String,
    pub cases: usize,
    pub failures: usize,
}

#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub model_name: String,
    pub seed: u64,
    pub outcomes: Vec<IdentityOutcome>,
}

impl SuiteReport {
    pub fn all_pass(&self) -> bool {
        self.outcomes.iter().all(|o| o.failures == 0)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "model\t{}\tseed\t{}", self.model_name, self.seed).unwrap();
        for o in &self.outcomes {
            writeln!(
                out,
                "IDENTITY={}\tCASES={}\tFAILURES={}\t{}",
                o.name,
                o.cases,
                o.failures,
                if o.failures == 0 { "PASS" } else { "FAIL" }
            )
            .unwrap();
        }
        out
    }
}

/// One failure-count pass over `cases` seeded instances of one identity.
fn run_cases(
    mode: ExecMode,
    cases: usize,
    seed: u64,
    check: impl Fn(&mut Rng) -> bool + Sync + Send,
) -> usize {
    let indices: Vec<u64> = (0..cases as u64).collect();
    let results = map_mode(mode, &indices, |&i| {
        let mut rng = Rng::new(seed ^ (i.wrapping_mul(0x9E37_79B9_7F4A_7C15)).wrapping_add(i));
        check(&mut rng)
    });
    results.iter().filter(|ok| !**ok).count()
}

/// Run the full identity suite on one model.
pub fn run_identity_suite(
    model: &ComplexModel,
    seed: u64,
    cases: usize,
    mode: ExecMode,
) -> SuiteReport {
    let n = model.n;
    let mut outcomes = Vec::new();

    // d^2 = del^2 = delbar^2 = 0 and del delbar = -delbar del
    outcomes.push(IdentityOutcome {
        name: "squares-and-anticommutation".into(),
        cases,
        failures: run_cases(mode, cases, seed ^ 0xA1, |rng| {
            let a = random_form(rng, n, M_PARAMS);
            calculus::d(model, &calculus::d(model, &a)).is_zero()
                && calculus::del(model, &calculus::del(model, &a)).is_zero()
                && calculus::delbar(model, &calculus::delbar(model, &a)).is_zero()
                && calculus::del(model, &calculus::delbar(model, &a))
                    .add(&calculus::delbar(model, &calculus::del(model, &a)))
                    .is_zero()
        }),
    });

    // graded Leibniz for d, del, delbar over the wedge
    outcomes.push(IdentityOutcome {
        name: "leibniz".into(),
        cases,
        failures: run_cases(mode, cases, seed ^ 0xB2, |rng| {
            let a = random_pure_form(rng, n, M_PARAMS);
            let b = random_form(rng, n, M_PARAMS);
            let Some((p, q)) = a.pure_bidegree() else {
                return true;
            };
            let sign_flip = (p + q) % 2 == 1;
            [calculus::DiffKind::D, calculus::DiffKind::Del, calculus::DiffKind::Delbar]
                .into_iter()
                .all(|k| {
                    let lhs = calculus::differential(model, k, &a.wedge(&b));
                    let mut second = a.wedge(&calculus::differential(model, k, &b));
                    if sign_flip {
                        second = second.neg();
                    }
                    let rhs = calculus::differential(model, k, &a).wedge(&b).add(&second);
                    lhs == rhs
                })
        }),
    });

    // contraction is an even derivation for (0,1)-valued fields
    outcomes.push(IdentityOutcome {
        name: "contraction-derivation".into(),
        cases,
        failures: run_cases(mode, cases, seed ^ 0xC3, |rng| {
            let phi = random_beltrami(rng, n, false);
            let a = random_form(rng, n, M_PARAMS);
            let b = random_form(rng, n, M_PARAMS);
            let lhs = phi.contract(&a.wedge(&b));
            let rhs = phi.contract(&a).wedge(&b).add(&a.wedge(&phi.contract(&b)));
            lhs == rhs
        }),
    });

    // extension-operator conjugation identity on arbitrary (not necessarily
    // integrable) fields and arbitrary forms
    outcomes.push(IdentityOutcome {
        name: "exp-conjugation".into(),
        cases,
        failures: run_cases(mode, cases, seed ^ 0xD4, |rng| {
            let phi = random_beltrami(rng, n, false);
            let a = random_form(rng, n, M_PARAMS);
            let e = exp_substitution(&phi);
            let e_inv = exp_substitution(&phi.neg());
            let lhs = e_inv.apply(&calculus::d(model, &e.apply(&a)));
            let obstruction = calculus::delbar_beltrami(model, &phi).sub(
                &calculus::bracket(model, &phi, &phi).scale(&GaussRational::from_ratio(1, 2)),
            );
            let rhs = calculus::d(model, &a)
                .sub(&calculus::lie_derivative_10(model, &phi, &a))
                .add(&obstruction.contract(&a));
            lhs.truncate(TRUNC) == rhs.truncate(TRUNC)
        }),
    });

    // the bracket identity holds for test forms of every degree
    outcomes.push(IdentityOutcome {
        name: "bracket-all-degrees".into(),
        cases,
        failures: run_cases(mode, cases, seed ^ 0xE5, |rng| {
            let phi = random_beltrami(rng, n, false);
            let psi = random_beltrami(rng, n, false);
            let br = calculus::bracket(model, &phi, &psi);
            let a = random_form(rng, n, M_PARAMS);
            let lhs = br.contract(&a);
            let rhs = calculus::bracket_identity_rhs(model, &phi, &psi, &a);
            lhs.truncate(TRUNC) == rhs.truncate(TRUNC)
        }),
    });

    // rho factorization: composite route vs direct per-monomial route
    outcomes.push(IdentityOutcome {
        name: "rho-factorization".into(),
        cases,
        failures: run_cases(mode, cases, seed ^ 0xF6, |rng| {
            let phi = random_beltrami(rng, n, true);
            let a = random_form(rng, n, M_PARAMS);
            rho(&phi, &a).truncate(TRUNC) == rho_direct(&phi, &a).truncate(TRUNC)
        }),
    });

    // deformed-operator obstruction formula: type split of the honest d
    // against the conjugated-operator route, on the Kuranishi family
    let family = {
        let dirs = deform::harmonic_beltrami_basis(model);
        let take = dirs.len().min(2);
        deform::kuranishi_series_directions(model, &dirs[..take], TRUNC).ok()
    };
    if let Some(family) = family.filter(|f| f.mc_ok()) {
        let ops = deform::DeformedOps::new(model, &family).expect("integrable family");
        let pair = ext_pair_substitution(&family.phi);
        let pair_inv = pair.inverse();
        let minv = one_minus_phibar_phi(&family.phi).inverse();
        let fam_m = family.m;
        outcomes.push(IdentityOutcome {
            name: "deformed-type-split".into(),
            cases,
            failures: run_cases(mode, cases, seed ^ 0x17, |rng| {
                let a = random_pure_form(rng, n, fam_m);
                let Some((p, q)) = a.pure_bidegree() else {
                    return true;
                };
                if a.is_zero() {
                    return true;
                }
                let w = calculus::d(model, &pair.apply(&a)).truncate(TRUNC);
                let tau = pair_inv.apply(&w).truncate(TRUNC);
                let dbar_part = tau.bidegree_part(p, q + 1);
                let del_part = tau.bidegree_part(p + 1, q);
                let rest_ok = {
                    // d(e(a)) has only the two adjacent deformed types
                    let both = dbar_part.add(&del_part);
                    tau.sub(&both).is_zero()
                };
                rest_ok
                    && dbar_part == ops.apply_delbar_t(model, &a).truncate(TRUNC)
                    && del_part == ops.apply_del_t(model, &a).truncate(TRUNC)
            }),
        });
        // exponential filtration property through the deformed-type split
        outcomes.push(IdentityOutcome {
            name: "exp-filtration".into(),
            cases,
            failures: run_cases(mode, cases, seed ^ 0x28, |rng| {
                let a = random_pure_form(rng, n, fam_m);
                let Some((p, q)) = a.pure_bidegree() else {
                    return true;
                };
                let e_a = exp_substitution(&family.phi).apply(&a).truncate(TRUNC);
                let tau = pair_inv.apply(&e_a).truncate(TRUNC);
                let k = p + q;
                (0..=k).all(|s| s >= p || tau.bidegree_part(s, k - s).is_zero())
            }),
        });
        let _ = minv;
    }

    // conjugation: involution and naturality for d
    outcomes.push(IdentityOutcome {
        name: "conjugation".into(),
        cases,
        failures: run_cases(mode, cases, seed ^ 0x39, |rng| {
            let a = random_form(rng, n, M_PARAMS);
            a.conj().conj() == a && calculus::d(model, &a.conj()) == calculus::d(model, &a).conj()
        }),
    });

    // computing at full order then truncating equals computing truncated
    outcomes.push(IdentityOutcome {
        name: "truncation-consistency".into(),
        cases,
        failures: run_cases(mode, cases, seed ^ 0x4A, |rng| {
            let a = random_form(rng, n, M_PARAMS);
            let b = random_form(rng, n, M_PARAMS);
            let phi = random_beltrami(rng, n, false);
            let lower = 2u32;
            a.wedge(&b).truncate(lower) == a.truncate(lower).wedge(&b.truncate(lower)).truncate(lower)
                && phi.contract(&a).truncate(lower)
                    == phi.contract(&a.truncate(lower)).truncate(lower)
        }),
    });

    SuiteReport {
        model_name: model.name.clone(),
        seed,
        outcomes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::catalog;

    #[test]
    fn suite_passes_on_catalog_models() {
        for name in ["iwasawa3", "kodaira-thurston", "torus2"] {
            let model = catalog(name).unwrap();
            let rep = run_identity_suite(&model, 7, 40, ExecMode::Parallel);
            assert!(rep.all_pass(), "failures on {name}: {}", rep.to_text());
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let model = catalog("iwasawa3").unwrap();
        let a = run_identity_suite(&model, 3, 10, ExecMode::Sequential).to_text();
        let b = run_identity_suite(&model, 3, 10, ExecMode::Parallel).to_text();
        assert_eq!(a, b);
    }
}
