//! Acceptance suite: one criterion per test, one pass/fail line each.
//!
//! Every assertion is exact (tolerance zero); run with
//! `cargo test --test acceptance -- --nocapture` to see the lines.

use nilcohom::deform::{self, Theory};
use nilcohom::extend::{self, Positivity};
use nilcohom::form::Generator;
use nilcohom::hodge::{self, DiagramEdge, OpKind};
use nilcohom::identities::run_identity_suite;
use nilcohom::linalg::QiMatrix;
use nilcohom::model::catalog;
use nilcohom::par::ExecMode;
use nilcohom::{Form, GaussRational};
use std::time::Instant;

fn line(num: u32, name: &str, pass: bool, detail: &str) -> bool {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("ACCEPTANCE {num} [{name}]: {verdict}{}", if detail.is_empty() {
        String::new()
    } else {
        format!(" ({detail})")
    });
    pass
}

fn binom(n: u32, k: u32) -> usize {
    if k > n {
        return 0;
    }
    let mut acc = 1usize;
    for i in 0..k {
        acc = acc * (n - i) as usize / (i + 1) as usize;
    }
    acc
}

/// Standard Kahler form power on the torus.
fn kahler_power(n: u32, p: u32) -> Form {
    let i = GaussRational::i();
    let mut omega = Form::zero(n);
    for j in 0..n {
        omega = omega.add(
            &Form::generator(n, Generator::Hol(j))
                .wedge(&Form::generator(n, Generator::Antihol(j)))
                .scale(&i),
        );
    }
    let mut out = Form::unit(n);
    for _ in 0..p {
        out = out.wedge(&omega);
    }
    out
}

/// Basis of d-closed pure (p,q)-forms.
fn d_closed_basis(model: &nilcohom::ComplexModel, p: i64, q: i64) -> Vec<Form> {
    let n = model.n;
    let basis = hodge::bidegree_basis(n, p, q);
    let del = hodge::op_matrix(model, OpKind::Del, p, q);
    let db = hodge::op_matrix(model, OpKind::Delbar, p, q);
    let mut stacked = QiMatrix::zeros(del.rows + db.rows, basis.len());
    for i in 0..del.rows {
        for j in 0..basis.len() {
            stacked[(i, j)] = del[(i, j)].clone();
        }
    }
    for i in 0..db.rows {
        for j in 0..basis.len() {
            stacked[(del.rows + i, j)] = db[(i, j)].clone();
        }
    }
    stacked
        .kernel_basis()
        .into_iter()
        .map(|v| hodge::vec_to_form(n, &basis, &v))
        .collect()
}

#[test]
fn criterion_1_iwasawa_golden_table() {
    let clock = Instant::now();
    let m = catalog("iwasawa3").unwrap();
    let t = hodge::cohomology(&m);
    let mut ok = true;
    ok &= t.get(1, 0).h_bc == 2 && t.get(1, 0).h_dbar == 3;
    ok &= t.get(1, 1).h_bc == 4 && t.get(1, 1).h_del == 6;
    ok &= t.get(2, 0).h_bc == 3 && t.get(2, 0).h_dbar == 3;
    ok &= t.get(2, 1).h_bc == 6 && t.get(2, 1).h_del == 6;
    ok &= t.get(2, 3).h_bc == 3 && t.get(2, 3).h_dbar == 3;
    ok &= t.diagnostics.is_empty();
    ok &= hodge::diagram_map(&m, DiagramEdge::BcToDel, 1, 1).injective;
    ok &= !hodge::diagram_map(&m, DiagramEdge::BcToDelbar, 1, 0).surjective;
    ok &= !hodge::diagram_map(&m, DiagramEdge::BcToDel, 2, 1).injective;
    ok &= hodge::diagram_map(&m, DiagramEdge::BcToDelbar, 2, 3).surjective;
    let elapsed = clock.elapsed();
    ok &= elapsed.as_secs_f64() < 10.0;
    assert!(line(
        1,
        "iwasawa golden table",
        ok,
        &format!("runtime {:.2?}", elapsed)
    ));
}

#[test]
fn criterion_2_torus_sanity() {
    let mut ok = true;
    for n in 1..=3u32 {
        let m = catalog(&format!("torus{n}")).unwrap();
        let t = hodge::cohomology(&m);
        for p in 0..=n {
            for q in 0..=n {
                let expect = binom(n, p) * binom(n, q);
                let d = t.get(p, q);
                ok &= d.h_dbar == expect && d.h_del == expect && d.h_bc == expect && d.h_a == expect;
            }
        }
        for k in 0..=2 * n {
            ok &= t.betti[k as usize] == binom(2 * n, k);
        }
        let rep = hodge::lemma_variants(&m);
        ok &= rep.ddbar_lemma;
        ok &= rep.at_defect.iter().all(|&d| d == 0);
        ok &= rep.diagnostics.is_empty() && t.diagnostics.is_empty();
    }
    assert!(line(2, "torus sanity", ok, ""));
}

#[test]
fn criterion_3_operator_identity_suite() {
    let mut ok = true;
    let mut detail = String::new();
    for name in ["iwasawa3", "kodaira-thurston", "torus1", "torus2", "torus3"] {
        let model = catalog(name).unwrap();
        let rep = run_identity_suite(&model, 0, 1000, ExecMode::Parallel);
        if !rep.all_pass() {
            ok = false;
            detail.push_str(&format!("{name}: {}", rep.to_text()));
        }
    }
    assert!(line(3, "operator identities, 1000 cases/model", ok, &detail));
}

#[test]
fn criterion_4_kuranishi_families() {
    let m = catalog("iwasawa3").unwrap();
    // independent rank-nullity oracle, computed before the family is built
    let mut ok = deform::tangent_h01_dim(&m) == 6;
    let fam = deform::kuranishi_series(&m, 4).unwrap();
    ok &= fam.m == 6;
    ok &= fam.top_order == 2 && fam.terminated == Some(2);
    ok &= fam.mc_ok() && fam.unobstructed();
    for n in [2u32, 3] {
        let t = catalog(&format!("torus{n}")).unwrap();
        let tf = deform::kuranishi_series(&t, 3).unwrap();
        ok &= tf.top_order == 1 && tf.terminated == Some(1) && tf.mc_ok() && tf.unobstructed();
        ok &= tf.m == (n * n) as usize;
    }
    assert!(line(4, "kuranishi families", ok, ""));
}

#[test]
fn criterion_5_deformation_scan() {
    let m = catalog("iwasawa3").unwrap();
    let fam = deform::kuranishi_series(&m, 3).unwrap();
    let pts = deform::sample_points(fam.m, 5, 0);
    let rep =
        deform::invariance_scan(&m, &fam, &pts, &[Theory::Dolbeault, Theory::BottChern]).unwrap();
    // semicontinuity covers the Bott-Chern rows as well
    let mut ok = rep.semicontinuity_ok && rep.euler_constant_ok && !rep.bc_rows.is_empty();
    ok &= rep.thm_pq_sound && rep.thm_p0_sound && rep.thm_0q_sound;
    // the three expected deformation-variant drops, strict at some sample
    for (p, q) in [(1u32, 0u32), (2, 0), (2, 3)] {
        let dropped = rep
            .rows
            .iter()
            .any(|r| r.p == p && r.q == q && r.h_t < r.h_0);
        ok &= dropped;
        ok &= rep.jumping.contains(&(p, q));
    }
    // every jumping bidegree names at least one failed hypothesis
    for pq in &rep.jumping {
        ok &= rep
            .failed_hypotheses
            .get(pq)
            .map(|v| !v.is_empty())
            .unwrap_or(false);
    }
    // attributions match the worked examples
    ok &= rep.failed_hypotheses[&(1, 0)] == vec!["calB^{2,0}".to_string()];
    ok &= rep.failed_hypotheses[&(2, 0)] == vec!["B^{2,1}".to_string()];
    ok &= rep.failed_hypotheses[&(2, 3)] == vec!["invariance of h^{2,2}".to_string()];
    assert!(line(
        5,
        "deformation scan",
        ok,
        &format!("jumping = {:?}", rep.jumping)
    ));
}

#[test]
fn criterion_6_extension_engine() {
    let trunc = 4u32;
    let mut ok = true;
    let mut extended = 0usize;
    for name in ["iwasawa3", "kodaira-thurston", "torus2"] {
        let m = catalog(name).unwrap();
        let fam = deform::kuranishi_series(&m, trunc).unwrap();
        assert!(fam.mc_ok());
        let n = m.n as i64;
        for p in 0..=n {
            for q in 0..=n {
                if !extend::condition_bb(&m, p, q + 1) {
                    continue;
                }
                for mu0 in d_closed_basis(&m, p, q) {
                    match extend::extend_d_closed(&m, &mu0, &fam, trunc) {
                        Ok(res) => {
                            extended += 1;
                            ok &= res.closed_ok && res.dbar_t_ok && res.unique_ok;
                            let diag = extend::verify_extension(&m, &fam, &res);
                            ok &= diag.filtration_ok && diag.rho_matches && diag.dbar_t_closed;
                        }
                        Err(e) => {
                            ok = false;
                            println!("  extension failed on {name} at ({p},{q}): {e}");
                        }
                    }
                }
            }
        }
    }
    assert!(line(
        6,
        "extension engine",
        ok && extended > 0,
        &format!("{extended} classes extended at order {trunc}")
    ));
}

#[test]
fn criterion_7_p_kahler_pipeline() {
    let trunc = 3u32;
    let mut ok = true;
    let cases: [(&str, u32); 3] = [("torus2", 1), ("torus3", 1), ("torus3", 2)];
    for (name, p) in cases {
        let m = catalog(name).unwrap();
        let fam = deform::kuranishi_series(&m, trunc).unwrap();
        let pts = deform::sample_points(fam.m, 5, 0);
        let omega0 = kahler_power(m.n, p);
        match extend::p_kahler_extend(&m, &omega0, &fam, p, &pts, trunc) {
            Ok(res) => {
                ok &= res.beta_rhs_positive_order;
                ok &= res.samples.len() == 5;
                for s in &res.samples {
                    ok &= s.real_ok && s.closed_ok;
                    ok &= s.positivity == Positivity::PositiveExact;
                }
            }
            Err(e) => {
                ok = false;
                println!("  p-kahler pipeline failed on {name} p={p}: {e}");
            }
        }
    }
    assert!(line(7, "p-kahler pipeline", ok, "torus n=2,3; p=1,n-1; 5 samples"));
}

#[test]
fn criterion_8_two_route_agreement() {
    // The two-equation route must agree with the Bott-Chern route up to
    // del-delbar-exact terms order by order wherever both hypothesis sets
    // hold. Implemented as stated; see the test output for the measured
    // per-order differences.
    let trunc = 4u32;
    let mut ok = true;
    let mut detail = String::new();

    // torus case: all hypotheses hold, im(del delbar) = 0
    {
        let m = catalog("torus2").unwrap();
        let fam = deform::kuranishi_series(&m, trunc).unwrap();
        let omega0 = kahler_power(2, 1);
        let cmp = extend::compare_extension_routes(&m, &omega0, &fam, trunc).unwrap();
        if !cmp.agree_up_to_ddbar_exact {
            ok = false;
            for (l, exact, norm) in &cmp.orders {
                if !exact {
                    detail.push_str(&format!("torus2 (1,1) order {l}: |diff|^2 = {norm}; "));
                }
            }
        }
    }
    // Iwasawa case at (2,3): both mild hypotheses hold (vacuous / verified)
    {
        let m = catalog("iwasawa3").unwrap();
        let fam = deform::kuranishi_series(&m, trunc).unwrap();
        let g = |k: u32, c: bool| -> Form {
            Form::generator(3, if c { Generator::Antihol(k) } else { Generator::Hol(k) })
        };
        let omega0 = g(0, false)
            .wedge(&g(1, false))
            .wedge(&g(0, true))
            .wedge(&g(1, true))
            .wedge(&g(2, true));
        assert!(extend::condition_bb(&m, 2, 4) && extend::condition_bb(&m, 3, 3));
        let cmp = extend::compare_extension_routes(&m, &omega0, &fam, trunc).unwrap();
        if !cmp.agree_up_to_ddbar_exact {
            ok = false;
            for (l, exact, norm) in &cmp.orders {
                if !exact {
                    detail.push_str(&format!("iwasawa3 (2,3) order {l}: |diff|^2 = {norm}; "));
                }
            }
        }
    }
    let pass = line(8, "two-equation route agreement", ok, &detail);
    assert!(
        pass,
        "the two extension routes differ by non-exact terms: {detail} \
         (both routes individually verify their defining d-closedness contracts; \
         the difference of the two canonical extensions is a genuinely non-exact \
         closed form, so the stated criterion cannot hold as written)"
    );
}
