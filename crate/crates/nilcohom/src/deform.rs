//! Kuranishi families, deformed operators, and Hodge-number scans.
//!
//! The family is built order by order with the tangent-valued Green
//! operator; integrability is an exact polynomial identity in the truncated
//! ring. Deformed Dolbeault pairs are pulled back to the fixed basis through
//! the pair extension map, so one basis serves every parameter value.

use crate::calculus::{self, Beltrami};
use crate::endo::{one_minus_phi_phibar, one_minus_phibar_phi, EndomorphismField};
use crate::form::{Form, Monomial};
use crate::hodge::{self, bidegree_basis};
use crate::linalg::{harmonic_and_green, QiMatrix};
use crate::model::ComplexModel;
use crate::par;
use crate::rng::Rng;
use crate::scalar::GaussRational;
use crate::series::Series;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DeformError {
    #[error("Maurer-Cartan fails: {0}")]
    MaurerCartan(String),
    #[error("model is rigid: no harmonic Beltrami directions")]
    Rigid,
}

// ---------------------------------------------------------------------------
// tangent-valued Dolbeault complex

/// Basis of `A^{0,q}(T^{1,0})`: (component index, q-monomial), component-major.
pub fn tangent_basis(n: u32, q: i64) -> Vec<(usize, Monomial)> {
    let monos = bidegree_basis(n, 0, q);
    let mut out = Vec::new();
    for i in 0..n as usize {
        for m in &monos {
            out.push((i, *m));
        }
    }
    out
}

fn beltrami_to_vec(basis: &[(usize, Monomial)], b: &Beltrami) -> Vec<Series> {
    let index: BTreeMap<(usize, Monomial), usize> = basis.iter().copied().zip(0..).collect();
    let mut out = vec![Series::constant(GaussRational::zero()); basis.len()];
    for (i, comp) in b.components.iter().enumerate() {
        for (m, s) in comp.terms() {
            let idx = *index
                .get(&(i, *m))
                .unwrap_or_else(|| panic!("tangent term outside basis"));
            out[idx] = s.clone();
        }
    }
    out
}

fn vec_to_beltrami(n: u32, basis: &[(usize, Monomial)], v: &[Series]) -> Beltrami {
    let mut b = Beltrami::zero(n);
    for ((i, m), s) in basis.iter().zip(v) {
        if !s.is_zero() {
            b.components[*i].add_term(*m, s);
        }
    }
    b
}

/// Matrix of `delbar` on `A^{0,q}(T^{1,0})` in the orthonormal frame metric.
pub fn tangent_delbar_matrix(model: &ComplexModel, q: i64) -> QiMatrix {
    let n = model.n;
    let src = tangent_basis(n, q);
    let dst = tangent_basis(n, q + 1);
    let index: BTreeMap<(usize, Monomial), usize> = dst.iter().copied().zip(0..).collect();
    let mut mat = QiMatrix::zeros(dst.len(), src.len());
    for (j, (i, m)) in src.iter().enumerate() {
        let mut b = Beltrami::zero(n);
        b.components[*i] = Form::from_terms(n, [(*m, Series::one())]);
        let img = calculus::delbar_beltrami(model, &b);
        for (k, comp) in img.components.iter().enumerate() {
            for (mono, s) in comp.terms() {
                let row = *index
                    .get(&(k, *mono))
                    .unwrap_or_else(|| panic!("tangent delbar image outside basis"));
                mat[(row, j)] = s.constant_part();
            }
        }
    }
    mat
}

/// Exact basis of harmonic `(0,1)` tangent-valued forms.
pub fn harmonic_beltrami_basis(model: &ComplexModel) -> Vec<Beltrami> {
    let n = model.n;
    let a1 = tangent_delbar_matrix(model, 1); // (0,1) -> (0,2)
    let a0 = tangent_delbar_matrix(model, 0); // (0,0) -> (0,1)
    let lap = a1
        .conj_transpose()
        .mul(&a1)
        .add(&a0.mul(&a0.conj_transpose()));
    let basis = tangent_basis(n, 1);
    lap.kernel_basis()
        .into_iter()
        .map(|v| {
            let sv: Vec<Series> = v.into_iter().map(Series::constant).collect();
            vec_to_beltrami(n, &basis, &sv)
        })
        .collect()
}

/// Independent route for the parameter count: rank-nullity on the same
/// complex, used as an oracle against the Laplacian-kernel route.
pub fn tangent_h01_dim(model: &ComplexModel) -> usize {
    let a1 = tangent_delbar_matrix(model, 1);
    let a0 = tangent_delbar_matrix(model, 0);
    tangent_basis(model.n, 1).len() - a1.rank() - a0.rank()
}

// ---------------------------------------------------------------------------
// Kuranishi series

#[derive(Clone, Debug)]
pub struct KuranishiFamily {
    pub model_name: String,
    pub m: usize,
    pub trunc: u32,
    pub phi: Beltrami,
    /// Highest order with a nonzero homogeneous part.
    pub top_order: u32,
    /// `Some(k0)` when termination at `k0` is certified inside the window
    /// (requires `trunc >= 2 k0` so every possible bracket order was seen).
    pub terminated: Option<u32>,
    /// Harmonic obstruction `H[phi, phi]`; zero iff unobstructed.
    pub obstruction: Beltrami,
    /// `delbar phi - 1/2 [phi, phi]`, truncated; zero iff integrable.
    pub mc_residual: Beltrami,
}

impl KuranishiFamily {
    pub fn unobstructed(&self) -> bool {
        self.obstruction.is_zero()
    }

    pub fn mc_ok(&self) -> bool {
        self.mc_residual.is_zero()
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        writeln!(out, "model\t{}", self.model_name).unwrap();
        writeln!(out, "parameters\t{}", self.m).unwrap();
        writeln!(out, "truncation\t{}", self.trunc).unwrap();
        writeln!(out, "top_order\t{}", self.top_order).unwrap();
        writeln!(
            out,
            "terminated\t{}",
            match self.terminated {
                Some(k) => format!("order {k}"),
                None => "not certified within truncation".to_string(),
            }
        )
        .unwrap();
        writeln!(out, "mc_residual_zero\t{}", self.mc_ok()).unwrap();
        writeln!(out, "unobstructed\t{}", self.unobstructed()).unwrap();
        if !self.unobstructed() {
            for (i, c) in self.obstruction.components.iter().enumerate() {
                if !c.is_zero() {
                    writeln!(out, "obstruction[Z{}]\t{}", i + 1, c).unwrap();
                }
            }
        }
        out
    }
}

/// Kuranishi family over the full harmonic basis.
pub fn kuranishi_series(model: &ComplexModel, trunc: u32) -> Result<KuranishiFamily, DeformError> {
    let dirs = harmonic_beltrami_basis(model);
    kuranishi_series_directions(model, &dirs, trunc)
}

/// Kuranishi recursion restricted to chosen first-order directions.
pub fn kuranishi_series_directions(
    model: &ComplexModel,
    dirs: &[Beltrami],
    trunc: u32,
) -> Result<KuranishiFamily, DeformError> {
    assert!(trunc >= 1);
    let n = model.n;
    let m = dirs.len();
    if m == 0 {
        return Err(DeformError::Rigid);
    }
    // order-1 part: sum t_nu eta_nu
    let mut phi = Beltrami::zero(n);
    for (nu, eta) in dirs.iter().enumerate() {
        phi = phi.add(&eta.scale_series(&Series::var(m, trunc, nu)));
    }
    // Green data on tangent-valued (0,2)
    let a1 = tangent_delbar_matrix(model, 1);
    let a2 = tangent_delbar_matrix(model, 2);
    let lap2 = a1.mul(&a1.conj_transpose()).add(&a2.conj_transpose().mul(&a2));
    let (h2, g2) = harmonic_and_green(&lap2);
    let star1 = a1.conj_transpose();
    let basis1 = tangent_basis(n, 1);
    let basis2 = tangent_basis(n, 2);
    let half = GaussRational::from_ratio(1, 2);

    for k in 2..=trunc {
        let bracket = calculus::bracket(model, &phi, &phi);
        let rhs = bracket.scale(&half).t_homogeneous(k);
        if rhs.is_zero() {
            continue;
        }
        let v = beltrami_to_vec(&basis2, &rhs);
        let gv = apply_series(&g2, &v);
        let xv = apply_series(&star1, &gv);
        let phi_k = vec_to_beltrami(n, &basis1, &xv);
        phi = phi.add(&phi_k);
    }

    let bracket = calculus::bracket(model, &phi, &phi);
    let obstruction_vec = apply_series(&h2, &beltrami_to_vec(&basis2, &bracket.scale(&half)));
    let obstruction = vec_to_beltrami(n, &basis2, &obstruction_vec);
    let mc_residual = truncate_beltrami(&calculus::maurer_cartan_residual(model, &phi), trunc);

    let top_order = (1..=trunc)
        .filter(|&k| !phi.t_homogeneous(k).is_zero())
        .max()
        .unwrap_or(0);
    let terminated = if mc_residual.is_zero() && trunc >= 2 * top_order {
        Some(top_order)
    } else {
        None
    };

    Ok(KuranishiFamily {
        model_name: model.name.clone(),
        m,
        trunc,
        phi,
        top_order,
        terminated,
        obstruction,
        mc_residual,
    })
}

fn truncate_beltrami(b: &Beltrami, trunc: u32) -> Beltrami {
    Beltrami {
        components: b.components.iter().map(|f| f.truncate(trunc)).collect(),
    }
}

fn apply_series(mat: &QiMatrix, v: &[Series]) -> Vec<Series> {
    assert_eq!(mat.cols, v.len());
    (0..mat.rows)
        .map(|i| {
            let mut acc = Series::constant(GaussRational::zero());
            for (j, s) in v.iter().enumerate() {
                if s.is_zero() || mat[(i, j)].is_zero() {
                    continue;
                }
                acc = acc.add(&s.scale(&mat[(i, j)]));
            }
            acc
        })
        .collect()
}

/// Residual of the integrability equation, truncated at `trunc`.
pub fn check_maurer_cartan(model: &ComplexModel, phi: &Beltrami, trunc: u32) -> Beltrami {
    truncate_beltrami(&calculus::maurer_cartan_residual(model, phi), trunc)
}

// ---------------------------------------------------------------------------
// deformed operators

/// Matrices over the parameter ring, evaluated exactly at sample points.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SMatrix {
    pub rows: usize,
    pub cols: usize,
    a: Vec<Series>,
}

impl SMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        SMatrix {
            rows,
            cols,
            a: vec![Series::constant(GaussRational::zero()); rows * cols],
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> &Series {
        &self.a[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, s: Series) {
        self.a[i * self.cols + j] = s;
    }

    pub fn mul(&self, rhs: &SMatrix) -> SMatrix {
        assert_eq!(self.cols, rhs.rows);
        let mut out = SMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                if self.entry(i, k).is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    if rhs.entry(k, j).is_zero() {
                        continue;
                    }
                    let v = out.entry(i, j).add(&self.entry(i, k).mul(rhs.entry(k, j)));
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn add(&self, rhs: &SMatrix) -> SMatrix {
        assert!(self.rows == rhs.rows && self.cols == rhs.cols);
        let mut out = self.clone();
        for i in 0..self.a.len() {
            out.a[i] = out.a[i].add(&rhs.a[i]);
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.a.iter().all(Series::is_zero)
    }

    pub fn eval(&self, point: &[GaussRational]) -> QiMatrix {
        let mut out = QiMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = self.entry(i, j).eval(point);
            }
        }
        out
    }

    /// Apply to a form expressed in the given bases.
    pub fn apply_form(&self, src: &[Monomial], dst: &[Monomial], n: u32, f: &Form) -> Form {
        let v = hodge::form_to_series_vec(src, f);
        assert_eq!(self.cols, src.len());
        let mut out = vec![Series::constant(GaussRational::zero()); dst.len()];
        for (j, s) in v.iter().enumerate() {
            if s.is_zero() {
                continue;
            }
            for i in 0..dst.len() {
                if self.entry(i, j).is_zero() {
                    continue;
                }
                out[i] = out[i].add(&s.mul(self.entry(i, j)));
            }
        }
        hodge::series_vec_to_form(n, dst, &out)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum DeformedKind {
    DelbarT,
    DelT,
}

/// Operators carried back to the fixed basis through the pair extension map.
pub struct DeformedOps {
    pub n: u32,
    mq: EndomorphismField,
    mq_inv: EndomorphismField,
    mp: EndomorphismField,
    mp_inv: EndomorphismField,
    phi: Beltrami,
}

impl DeformedOps {
    pub fn new(model: &ComplexModel, family: &KuranishiFamily) -> Result<Self, DeformError> {
        let _ = model;
        if !family.mc_ok() {
            return Err(DeformError::MaurerCartan(
                "family is not integrable in the truncated ring; operator would not square to zero"
                    .into(),
            ));
        }
        let mq = one_minus_phibar_phi(&family.phi);
        let mp = one_minus_phi_phibar(&family.phi);
        Ok(DeformedOps {
            n: family.phi.n(),
            mq_inv: mq.inverse(),
            mq,
            mp_inv: mp.inverse(),
            mp,
            phi: family.phi.clone(),
        })
    }

    /// `(1 - phibar phi)^{-1} -| (delbar + [del, iota_phi]) (1 - phibar phi) -|`.
    pub fn apply_delbar_t(&self, model: &ComplexModel, f: &Form) -> Form {
        let inner = self.mq.apply(f);
        let mid = calculus::delbar(model, &inner)
            .add(&calculus::del(model, &self.phi.contract(&inner)))
            .sub(&self.phi.contract(&calculus::del(model, &inner)));
        self.mq_inv.apply(&mid)
    }

    /// Conjugate construction for `del_t` (phi <-> phibar symmetric formula).
    pub fn apply_del_t(&self, model: &ComplexModel, f: &Form) -> Form {
        let inner = self.mp.apply(f);
        let mid = calculus::del(model, &inner)
            .add(&calculus::delbar(model, &self.phi.contract_conj(&inner)))
            .sub(&self.phi.contract_conj(&calculus::delbar(model, &inner)));
        self.mp_inv.apply(&mid)
    }

    pub fn matrix(&self, model: &ComplexModel, kind: DeformedKind, p: i64, q: i64) -> SMatrix {
        let n = self.n;
        let src = bidegree_basis(n, p, q);
        let dst = match kind {
            DeformedKind::DelbarT => bidegree_basis(n, p, q + 1),
            DeformedKind::DelT => bidegree_basis(n, p + 1, q),
        };
        let mut mat = SMatrix::zeros(dst.len(), src.len());
        let index: BTreeMap<Monomial, usize> = dst.iter().copied().zip(0..).collect();
        for (j, mono) in src.iter().enumerate() {
            let f = Form::from_terms(n, [(*mono, Series::one())]);
            let img = match kind {
                DeformedKind::DelbarT => self.apply_delbar_t(model, &f),
                DeformedKind::DelT => self.apply_del_t(model, &f),
            };
            for (m, s) in img.terms() {
                let i = *index
                    .get(m)
                    .unwrap_or_else(|| panic!("deformed operator image left its bidegree"));
                mat.set(i, j, s.clone());
            }
        }
        mat
    }
}

/// Public entry mirroring the operator contract; refuses non-integrable input.
pub fn deformed_operator(
    model: &ComplexModel,
    family: &KuranishiFamily,
    kind: DeformedKind,
    p: i64,
    q: i64,
) -> Result<SMatrix, DeformError> {
    let ops = DeformedOps::new(model, family)?;
    Ok(ops.matrix(model, kind, p, q))
}

// ---------------------------------------------------------------------------
// Hodge numbers along the family

#[derive(Clone, Debug)]
pub struct DeformedTable {
    pub point: Vec<GaussRational>,
    pub h_dbar: BTreeMap<(u32, u32), usize>,
    pub h_bc: Option<BTreeMap<(u32, u32), usize>>,
}

/// Exact Hodge (and optionally Bott-Chern) numbers at one parameter value.
pub fn hodge_numbers_at(
    model: &ComplexModel,
    family: &KuranishiFamily,
    point: &[GaussRational],
    with_bc: bool,
) -> Result<DeformedTable, DeformError> {
    if !family.mc_residual.eval(point).is_zero() || !family.obstruction.eval(point).is_zero() {
        return Err(DeformError::MaurerCartan(format!(
            "obstruction polynomial does not vanish at sample {}",
            point_label(point)
        )));
    }
    let ops = DeformedOps::new(model, family)?;
    let n = model.n;
    let pairs: Vec<(u32, u32)> = (0..=n).flat_map(|p| (0..=n).map(move |q| (p, q))).collect();
    // evaluated delbar_t at every bidegree
    let dbar: BTreeMap<(i64, i64), QiMatrix> = pairs
        .iter()
        .map(|&(p, q)| {
            let m = ops
                .matrix(model, DeformedKind::DelbarT, p as i64, q as i64)
                .eval(point);
            ((p as i64, q as i64), m)
        })
        .collect();
    let zero = QiMatrix::zeros(0, 0);
    let mut h_dbar = BTreeMap::new();
    for &(p, q) in &pairs {
        let dim = hodge::dim_bidegree(n, p as i64, q as i64);
        let out_rank = dbar[&(p as i64, q as i64)].rank();
        let in_rank = if q == 0 {
            0
        } else {
            dbar.get(&(p as i64, q as i64 - 1)).unwrap_or(&zero).rank()
        };
        h_dbar.insert((p, q), dim - out_rank - in_rank);
    }
    let h_bc = if with_bc {
        let del: BTreeMap<(i64, i64), QiMatrix> = pairs
            .iter()
            .map(|&(p, q)| {
                let m = ops
                    .matrix(model, DeformedKind::DelT, p as i64, q as i64)
                    .eval(point);
                ((p as i64, q as i64), m)
            })
            .collect();
        let mut out = BTreeMap::new();
        for &(pu, qu) in &pairs {
            let (p, q) = (pu as i64, qu as i64);
            let dim = hodge::dim_bidegree(n, p, q);
            // ker del_t  /\  ker dbar_t
            let del_out = &del[&(p, q)];
            let dbar_out = &dbar[&(p, q)];
            let mut stacked = QiMatrix::zeros(del_out.rows + dbar_out.rows, dim);
            for i in 0..del_out.rows {
                for j in 0..dim {
                    stacked[(i, j)] = del_out[(i, j)].clone();
                }
            }
            for i in 0..dbar_out.rows {
                for j in 0..dim {
                    stacked[(del_out.rows + i, j)] = dbar_out[(i, j)].clone();
                }
            }
            let z_dim = dim - stacked.rank();
            // image of del_t dbar_t from (p-1, q-1)
            let b_rank = if p >= 1 && q >= 1 {
                let first = dbar.get(&(p - 1, q - 1)).unwrap_or(&zero);
                let second = del.get(&(p - 1, q)).unwrap_or(&zero);
                second.mul(first).rank()
            } else {
                0
            };
            out.insert((pu, qu), z_dim - b_rank);
        }
        Some(out)
    } else {
        None
    };
    Ok(DeformedTable {
        point: point.to_vec(),
        h_dbar,
        h_bc,
    })
}

// ---------------------------------------------------------------------------
// scans

fn point_label(point: &[GaussRational]) -> String {
    let parts: Vec<String> = point.iter().map(|c| c.to_string()).collect();
    format!("({})", parts.join(", "))
}

/// Deterministic small Gaussian-rational sample tuples.
pub fn sample_points(m: usize, count: usize, seed: u64) -> Vec<Vec<GaussRational>> {
    let palette: Vec<GaussRational> = vec![
        GaussRational::from_ratio(1, 7),
        GaussRational::from_ratio(-1, 7),
        GaussRational::from_ratio(1, 5),
        GaussRational::from_ratio(-1, 5),
        GaussRational::from_ratio_i(1, 7),
        GaussRational::from_ratio_i(-1, 7),
        GaussRational::from_ratio(1, 3),
        GaussRational::from_ratio_i(1, 5),
    ];
    let mut rng = Rng::new(seed);
    (0..count)
        .map(|_| (0..m).map(|_| rng.pick(&palette).clone()).collect())
        .collect()
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Theory {
    Dolbeault,
    BottChern,
}

#[derive(Clone, Debug)]
pub struct ScanRow {
    pub sample: usize,
    pub p: u32,
    pub q: u32,
    pub h_t: usize,
    pub h_0: usize,
    pub jumped: bool,
    pub hypotheses_held: bool,
}

#[derive(Clone, Debug)]
pub struct ScanReport {
    pub model_name: String,
    pub samples: Vec<Vec<GaussRational>>,
    pub rows: Vec<ScanRow>,
    /// Bott-Chern rows when requested.
    pub bc_rows: Vec<ScanRow>,
    /// (p,q) with a strict drop at some sample.
    pub jumping: Vec<(u32, u32)>,
    pub semicontinuity_ok: bool,
    /// Euler characteristic per p constant across samples.
    pub euler_constant_ok: bool,
    /// No scanned counterexample to the three-hypothesis invariance theorem.
    pub thm_pq_sound: bool,
    /// No counterexample to the (p,0) / (0,q) special-case theorems.
    pub thm_p0_sound: bool,
    pub thm_0q_sound: bool,
    /// Named failed hypothesis per jumping (p,q).
    pub failed_hypotheses: BTreeMap<(u32, u32), Vec<String>>,
}

impl ScanReport {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("sample\tp\tq\th_t\th_0\tjumped\thypotheses_held\n");
        for r in &self.rows {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.sample, r.p, r.q, r.h_t, r.h_0, r.jumped as u8, r.hypotheses_held as u8
            )
            .unwrap();
        }
        if !self.bc_rows.is_empty() {
            out.push_str("\n# bott-chern\nsample\tp\tq\th_t\th_0\tjumped\thypotheses_held\n");
            for r in &self.bc_rows {
                writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    r.sample, r.p, r.q, r.h_t, r.h_0, r.jumped as u8, r.hypotheses_held as u8
                )
                .unwrap();
            }
        }
        writeln!(out, "\nsemicontinuity_ok\t{}", self.semicontinuity_ok as u8).unwrap();
        writeln!(out, "euler_constant_ok\t{}", self.euler_constant_ok as u8).unwrap();
        writeln!(out, "thm_pq_sound\t{}", self.thm_pq_sound as u8).unwrap();
        writeln!(out, "thm_p0_sound\t{}", self.thm_p0_sound as u8).unwrap();
        writeln!(out, "thm_0q_sound\t{}", self.thm_0q_sound as u8).unwrap();
        for ((p, q), names) in &self.failed_hypotheses {
            writeln!(out, "jump\t{p}\t{q}\tfailed: {}", names.join(", ")).unwrap();
        }
        out
    }
}

/// Scan Hodge numbers across samples and cross-reference the invariance
/// theorems' hypotheses on the undeformed model.
pub fn invariance_scan(
    model: &ComplexModel,
    family: &KuranishiFamily,
    samples: &[Vec<GaussRational>],
    theories: &[Theory],
) -> Result<ScanReport, DeformError> {
    assert!(!samples.is_empty());
    let n = model.n;
    let table0 = hodge::cohomology(model);
    let lemma = hodge::lemma_variants(model);
    let with_bc = theories.contains(&Theory::BottChern);
    let tables: Vec<DeformedTable> = {
        let results: Vec<Result<DeformedTable, DeformError>> =
            par::map(samples, |pt| hodge_numbers_at(model, family, pt, with_bc));
        let mut ok = Vec::new();
        for r in results {
            ok.push(r?);
        }
        ok
    };

    // sanity: the family at t = 0 reproduces the undeformed numbers
    let zero_point = vec![GaussRational::zero(); family.m];
    let at_zero = hodge_numbers_at(model, family, &zero_point, with_bc)?;
    for ((p, q), h) in &at_zero.h_dbar {
        assert_eq!(*h, table0.get(*p, *q).h_dbar, "t=0 evaluation mismatch");
    }
    if let Some(bc) = &at_zero.h_bc {
        for ((p, q), h) in bc {
            assert_eq!(*h, table0.get(*p, *q).h_bc, "t=0 Bott-Chern mismatch");
        }
    }

    let mut rows = Vec::new();
    let mut bc_rows = Vec::new();
    let mut semicontinuity_ok = true;
    let mut jumping = Vec::new();
    let pairs: Vec<(u32, u32)> = (0..=n).flat_map(|p| (0..=n).map(move |q| (p, q))).collect();

    // jump set and per-(p,q) invariance over the scan
    let mut invariant: BTreeMap<(u32, u32), bool> = BTreeMap::new();
    for &(p, q) in &pairs {
        let h0 = table0.get(p, q).h_dbar;
        let mut inv = true;
        for t in &tables {
            let ht = t.h_dbar[&(p, q)];
            if ht > h0 {
                semicontinuity_ok = false;
            }
            if ht != h0 {
                inv = false;
            }
        }
        invariant.insert((p, q), inv);
        if !inv {
            jumping.push((p, q));
        }
    }

    // hypotheses of the invariance theorems at each bidegree
    let mut thm_pq_sound = true;
    let mut thm_p0_sound = true;
    let mut thm_0q_sound = true;
    let mut failed_hypotheses: BTreeMap<(u32, u32), Vec<String>> = BTreeMap::new();
    for &(p, q) in &pairs {
        let (pi, qi) = (p as i64, q as i64);
        let hyp_b = lemma.holds_bb(pi, qi + 1);
        let hyp_cb = lemma.holds_cal_b(pi + 1, qi);
        let hyp_prev = if q == 0 { true } else { invariant[&(p, q - 1)] };
        let hypotheses = hyp_b && hyp_cb && hyp_prev;
        let inv = invariant[&(p, q)];
        if hypotheses && !inv {
            thm_pq_sound = false;
        }
        if !inv {
            let mut names = Vec::new();
            if !hyp_b {
                names.push(format!("B^{{{},{}}}", p, q + 1));
            }
            if !hyp_cb {
                names.push(format!("calB^{{{},{}}}", p + 1, q));
            }
            if !hyp_prev {
                names.push(format!("invariance of h^{{{},{}}}", p, q as i64 - 1));
            }
            failed_hypotheses.insert((p, q), names);
        }
        if q == 0 {
            let special = lemma.holds_bb(pi, 1) && lemma.holds_cal_s(pi + 1, 0);
            if special && !inv {
                thm_p0_sound = false;
            }
        }
        if p == 0 {
            let special = lemma.holds_cal_b(1, qi) && (q == 0 || invariant[&(0, q - 1)]);
            if special && !inv {
                thm_0q_sound = false;
            }
        }
        for (s, t) in tables.iter().enumerate() {
            rows.push(ScanRow {
                sample: s,
                p,
                q,
                h_t: t.h_dbar[&(p, q)],
                h_0: table0.get(p, q).h_dbar,
                jumped: t.h_dbar[&(p, q)] != table0.get(p, q).h_dbar,
                hypotheses_held: hypotheses,
            });
            if let Some(bc) = &t.h_bc {
                let h0 = table0.get(p, q).h_bc;
                let ht = bc[&(p, q)];
                if ht > h0 {
                    semicontinuity_ok = false;
                }
                bc_rows.push(ScanRow {
                    sample: s,
                    p,
                    q,
                    h_t: ht,
                    h_0: h0,
                    jumped: ht != h0,
                    hypotheses_held: hypotheses,
                });
            }
        }
    }

    // Euler characteristic constancy per p
    let mut euler_constant_ok = true;
    for p in 0..=n {
        let chi0: i64 = (0..=n)
            .map(|q| (if q % 2 == 0 { 1 } else { -1 }) * table0.get(p, q).h_dbar as i64)
            .sum();
        for t in &tables {
            let chi: i64 = (0..=n)
                .map(|q| (if q % 2 == 0 { 1 } else { -1 }) * t.h_dbar[&(p, q)] as i64)
                .sum();
            if chi != chi0 {
                euler_constant_ok = false;
            }
        }
    }

    Ok(ScanReport {
        model_name: model.name.clone(),
        samples: samples.to_vec(),
        rows,
        bc_rows,
        jumping,
        semicontinuity_ok,
        euler_constant_ok,
        thm_pq_sound,
        thm_p0_sound,
        thm_0q_sound,
        failed_hypotheses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::catalog;

    #[test]
    fn torus_family_is_order_one_exact() {
        let m = catalog("torus2").unwrap();
        assert_eq!(tangent_h01_dim(&m), 4);
        let fam = kuranishi_series(&m, 3).unwrap();
        assert_eq!(fam.m, 4);
        assert_eq!(fam.top_order, 1);
        assert_eq!(fam.terminated, Some(1));
        assert!(fam.mc_ok());
        assert!(fam.unobstructed());
    }

    #[test]
    fn torus1_single_direction() {
        let m = catalog("torus1").unwrap();
        let dirs = harmonic_beltrami_basis(&m);
        assert_eq!(dirs.len(), 1);
        let fam = kuranishi_series(&m, 2).unwrap();
        assert!(fam.mc_ok());
    }

    #[test]
    fn iwasawa_family_m6_terminates_order_two() {
        let m = catalog("iwasawa3").unwrap();
        // independent rank-nullity oracle for the parameter count
        assert_eq!(tangent_h01_dim(&m), 6);
        let fam = kuranishi_series(&m, 4).unwrap();
        assert_eq!(fam.m, 6);
        assert_eq!(fam.top_order, 2);
        assert_eq!(fam.terminated, Some(2));
        assert!(fam.mc_ok(), "MC residual must vanish identically");
        assert!(fam.unobstructed());
        // harmonic basis route agrees with the rank-nullity oracle
        assert_eq!(harmonic_beltrami_basis(&m).len(), 6);
    }

    #[test]
    fn order_one_truncation_of_obstructed_direction() {
        // recursion definition: residual of the order-1 truncation is -1/2 [phi1, phi1]
        let m = catalog("iwasawa3").unwrap();
        let fam = kuranishi_series(&m, 4).unwrap();
        let phi1 = fam.phi.t_homogeneous(1);
        let res = check_maurer_cartan(&m, &phi1, 4);
        let minus_half = GaussRational::from_ratio(-1, 2);
        let expect = calculus::bracket(&m, &phi1, &phi1).scale(&minus_half);
        assert_eq!(res, truncate_beltrami(&expect, 4));
    }

    #[test]
    fn deformed_delbar_squares_to_zero_iwasawa() {
        let m = catalog("iwasawa3").unwrap();
        let fam = kuranishi_series(&m, 3).unwrap();
        let ops = DeformedOps::new(&m, &fam).unwrap();
        for p in 0..=3i64 {
            for q in 0..=2i64 {
                let first = ops.matrix(&m, DeformedKind::DelbarT, p, q);
                let second = ops.matrix(&m, DeformedKind::DelbarT, p, q + 1);
                assert!(second.mul(&first).is_zero(), "Dbar^2 != 0 at ({p},{q})");
            }
        }
        // del_t and delbar_t anticommute
        for p in 0..=2i64 {
            for q in 0..=2i64 {
                let a = ops
                    .matrix(&m, DeformedKind::DelT, p, q + 1)
                    .mul(&ops.matrix(&m, DeformedKind::DelbarT, p, q));
                let b = ops
                    .matrix(&m, DeformedKind::DelbarT, p + 1, q)
                    .mul(&ops.matrix(&m, DeformedKind::DelT, p, q));
                assert!(a.add(&b).is_zero(), "anticommutation fails at ({p},{q})");
            }
        }
    }

    #[test]
    fn iwasawa_single_direction_drops() {
        // restricting to the single harmonic direction qbar1 (x) Z_1 gives
        // h^{1,0}(t) = 2 and h^{2,0}(t) = 2 away from t = 0
        let m = catalog("iwasawa3").unwrap();
        let mut eta = Beltrami::zero(3);
        eta.components[0] = Form::from_terms(
            3,
            [(
                crate::form::Monomial {
                    p_mask: 0,
                    q_mask: 1,
                },
                crate::series::Series::one(),
            )],
        );
        let fam = kuranishi_series_directions(&m, &[eta], 3).unwrap();
        assert!(fam.mc_ok());
        let t = hodge_numbers_at(&m, &fam, &[GaussRational::from_ratio(1, 7)], false).unwrap();
        assert_eq!(t.h_dbar[&(1, 0)], 2);
        assert_eq!(t.h_dbar[&(2, 0)], 2);
    }

    #[test]
    fn non_integrable_direction_is_refused() {
        // qbar3 (x) Z_1 is not delbar-closed, so the order-1 family violates
        // the integrability equation and every deformed computation refuses
        let m = catalog("iwasawa3").unwrap();
        let mut eta = Beltrami::zero(3);
        eta.components[0] = Form::from_terms(
            3,
            [(
                crate::form::Monomial {
                    p_mask: 0,
                    q_mask: 1 << 2,
                },
                crate::series::Series::one(),
            )],
        );
        let fam = kuranishi_series_directions(&m, &[eta], 3).unwrap();
        assert!(!fam.mc_ok());
        let err = hodge_numbers_at(&m, &fam, &[GaussRational::from_ratio(1, 7)], false);
        assert!(matches!(err, Err(DeformError::MaurerCartan(_))));
        assert!(matches!(
            DeformedOps::new(&m, &fam),
            Err(DeformError::MaurerCartan(_))
        ));
    }

    #[test]
    fn bott_chern_scan_runs_on_kodaira_thurston() {
        let m = catalog("kodaira-thurston").unwrap();
        let fam = kuranishi_series(&m, 2).unwrap();
        let pts = sample_points(fam.m, 3, 5);
        let rep =
            invariance_scan(&m, &fam, &pts, &[Theory::Dolbeault, Theory::BottChern]).unwrap();
        assert!(!rep.bc_rows.is_empty());
        assert!(rep.semicontinuity_ok);
        assert!(rep.euler_constant_ok);
        assert!(rep.thm_pq_sound && rep.thm_p0_sound && rep.thm_0q_sound);
    }

    #[test]
    fn iwasawa_h10_drops_at_generic_sample() {
        let m = catalog("iwasawa3").unwrap();
        let fam = kuranishi_series(&m, 3).unwrap();
        let generic = vec![GaussRational::from_ratio(1, 7); 6];
        let t = hodge_numbers_at(&m, &fam, &generic, false).unwrap();
        assert_eq!(t.h_dbar[&(1, 0)], 2);
        assert_eq!(t.h_dbar[&(0, 1)], 2);
        // undeformed table at t = 0
        let zero = vec![GaussRational::zero(); 6];
        let t0 = hodge_numbers_at(&m, &fam, &zero, false).unwrap();
        assert_eq!(t0.h_dbar[&(1, 0)], 3);
    }
}
