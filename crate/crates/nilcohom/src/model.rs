//! Invariant complex models: structure equations, parsing, catalog.
//!
//! A model is `n` generator (1,0)-forms `p1..pn` with prescribed `d p_k`.
//! Validation enforces integrability (no (0,2) component) and `d^2 = 0`;
//! the dual frame brackets are derived once at construction.

use crate::calculus::{d, DiffKind};
use crate::form::{Form, Generator, Monomial};
use crate::scalar::GaussRational;
use crate::series::Series;
use num_bigint::BigInt;
use num_rational::BigRational;
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("syntax error at line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("integrability violation: d p{gen} has (0,2)-component {component}")]
    Integrability { gen: u32, component: String },
    #[error("d^2 != 0 on generator p{gen}: residual {residual}")]
    DSquared { gen: u32, residual: String },
    #[error("unknown catalog model `{0}`")]
    UnknownCatalog(String),
    #[error("cannot read model file: {0}")]
    Io(String),
}

/// One summand of a structure equation.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct StructureTerm {
    pub coefficient: GaussRational,
    pub factors: Vec<Generator>,
}

/// Parsed but not yet validated model data.
#[derive(Clone, Debug)]
pub struct RawModel {
    pub name: Option<String>,
    pub n: u32,
    pub d_lines: BTreeMap<u32, Vec<StructureTerm>>,
}

/// A validated invariant model. Immutable after construction.
#[derive(Clone, Debug)]
pub struct ComplexModel {
    pub name: String,
    pub n: u32,
    raw: RawModel,
    /// (2,0)-part of `d p_k`, per generator (0-based).
    d20: Vec<Form>,
    /// (1,1)-part of `d p_k`.
    d11: Vec<Form>,
    /// (0,2)-part of `d p_k`; nonzero only before validation.
    d02: Vec<Form>,
    /// Frame brackets: c[a][b] = coefficients of [X_a, X_b] in the frame,
    /// indices 0..n are Z_i, n..2n are conjugates.
    brackets: Vec<Vec<Vec<GaussRational>>>,
}

fn canonical_factor_key(g: &Generator) -> (u8, u32) {
    match g {
        Generator::Hol(i) => (0, *i),
        Generator::Antihol(j) => (1, *j),
    }
}

fn term_monomial(term: &StructureTerm) -> Monomial {
    let mut m = Monomial::ONE;
    for g in &term.factors {
        let f = match g {
            Generator::Hol(i) => Monomial {
                p_mask: 1 << i,
                q_mask: 0,
            },
            Generator::Antihol(j) => Monomial {
                p_mask: 0,
                q_mask: 1 << j,
            },
        };
        let (w, sign) = m.wedge(&f).expect("repeated factor survived parsing");
        debug_assert_eq!(sign, 1, "factors stored in canonical order");
        m = w;
    }
    m
}

impl ComplexModel {
    /// Build without the validity checks; used by diagnostics.
    pub fn new_unchecked(raw: RawModel) -> Self {
        let n = raw.n;
        let mut d20 = vec![Form::zero(n); n as usize];
        let mut d11 = vec![Form::zero(n); n as usize];
        let mut d02 = vec![Form::zero(n); n as usize];
        for (k, terms) in &raw.d_lines {
            for t in terms {
                let mono = term_monomial(t);
                let s = Series::constant(t.coefficient.clone());
                let target = match (mono.p_degree(), mono.q_degree()) {
                    (2, 0) => &mut d20,
                    (1, 1) => &mut d11,
                    (0, 2) => &mut d02,
                    _ => unreachable!("structure terms are 2-forms"),
                };
                target[(*k - 1) as usize].add_term(mono, &s);
            }
        }
        let name = raw.name.clone().unwrap_or_else(|| "unnamed".to_string());
        let mut model = ComplexModel {
            name,
            n,
            raw,
            d20,
            d11,
            d02,
            brackets: Vec::new(),
        };
        model.brackets = model.compute_brackets();
        model
    }

    pub fn new(raw: RawModel) -> Result<Self, ModelError> {
        let model = ComplexModel::new_unchecked(raw);
        for k in 0..model.n {
            if !model.d02[k as usize].is_zero() {
                return Err(ModelError::Integrability {
                    gen: k + 1,
                    component: model.d02[k as usize].to_string(),
                });
            }
        }
        for k in 0..model.n {
            let dk = model.d_generator(Generator::Hol(k), DiffKind::D);
            let dd = d(&model, &dk);
            if !dd.is_zero() {
                return Err(ModelError::DSquared {
                    gen: k + 1,
                    residual: dd.to_string(),
                });
            }
        }
        Ok(model)
    }

    pub fn raw(&self) -> &RawModel {
        &self.raw
    }

    /// `d`, `del`, or `delbar` image of one coframe generator.
    pub fn d_generator(&self, g: Generator, kind: DiffKind) -> Form {
        match g {
            Generator::Hol(i) => {
                let i = i as usize;
                match kind {
                    DiffKind::Del => self.d20[i].clone(),
                    DiffKind::Delbar => self.d11[i].clone(),
                    DiffKind::D => self.d20[i].add(&self.d11[i]).add(&self.d02[i]),
                }
            }
            Generator::Antihol(j) => {
                let j = j as usize;
                // d qbar^j = conj(d p^j)
                match kind {
                    DiffKind::Del => self.d11[j].conj(),
                    DiffKind::Delbar => self.d20[j].conj(),
                    DiffKind::D => self.d20[j].conj().add(&self.d11[j].conj()).add(&self.d02[j].conj()),
                }
            }
        }
    }

    fn compute_brackets(&self) -> Vec<Vec<Vec<GaussRational>>> {
        let n = self.n as usize;
        let dim = 2 * n;
        // d alpha (X, Y) = -alpha([X, Y]) for invariant one-forms
        let mut table = vec![vec![vec![GaussRational::zero(); dim]; dim]; dim];
        for a in 0..dim {
            for b in 0..dim {
                if a == b {
                    continue;
                }
                for k in 0..n {
                    let dk_hol = self.d_generator(Generator::Hol(k as u32), DiffKind::D);
                    let v = eval_two_form(&dk_hol, a, b, self.n);
                    table[a][b][k] = -v;
                    let dk_anti = self.d_generator(Generator::Antihol(k as u32), DiffKind::D);
                    let v = eval_two_form(&dk_anti, a, b, self.n);
                    table[a][b][n + k] = -v;
                }
            }
        }
        table
    }

    /// Coefficients of `[X_a, X_b]` in the frame (0..n holomorphic, n..2n conjugate).
    pub fn bracket_coeffs(&self, a: usize, b: usize) -> &[GaussRational] {
        &self.brackets[a][b]
    }

    /// The full table of dual-frame Lie brackets.
    pub fn frame_structure(&self) -> BracketTable {
        let dim = 2 * self.n as usize;
        let mut entries = Vec::new();
        for a in 0..dim {
            for b in a + 1..dim {
                let coeffs: Vec<(usize, GaussRational)> = self.brackets[a][b]
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| !c.is_zero())
                    .map(|(k, c)| (k, c.clone()))
                    .collect();
                if !coeffs.is_empty() {
                    entries.push((a, b, coeffs));
                }
            }
        }
        BracketTable { n: self.n, entries }
    }

    /// Data of `delbar Z_i = sum_j qbar^j (x) [Zbar_j, Z_i]^{1,0}`:
    /// triples `(j, k, c)` meaning a summand `c * qbar^{j+1} (x) Z_{k+1}`.
    pub fn delbar_frame(&self, i: u32) -> Vec<(u32, u32, GaussRational)> {
        let n = self.n as usize;
        let mut out = Vec::new();
        for j in 0..n {
            let coeffs = &self.brackets[n + j][i as usize];
            for (k, c) in coeffs.iter().take(n).enumerate() {
                if !c.is_zero() {
                    out.push((j as u32, k as u32, c.clone()));
                }
            }
        }
        out
    }

    /// True when no mixed brackets occur (complex-parallelizable case).
    pub fn is_complex_parallelizable(&self) -> bool {
        (0..self.n).all(|i| self.delbar_frame(i).is_empty())
    }

    /// Canonical model-file text; `parse . serialize = id`.
    pub fn serialize(&self) -> String {
        let mut out = format!("dim {}\n", self.n);
        out.push_str(&format!("name {}\n", self.name));
        for (k, terms) in &self.raw.d_lines {
            if terms.is_empty() {
                continue;
            }
            let rendered: Vec<String> = terms
                .iter()
                .map(|t| {
                    let factors: Vec<String> = t
                        .factors
                        .iter()
                        .map(|g| match g {
                            Generator::Hol(i) => format!("p{}", i + 1),
                            Generator::Antihol(j) => format!("q{}", j + 1),
                        })
                        .collect();
                    format!("{} * {}", coef_to_text(&t.coefficient), factors.join("^"))
                })
                .collect();
            out.push_str(&format!("d p{} = {}\n", k, rendered.join(" + ")));
        }
        out
    }
}

/// Nonzero dual-frame brackets; frame index `a < n` is `Z_{a+1}`, otherwise
/// the conjugate `Zbar_{a-n+1}`.
pub struct BracketTable {
    pub n: u32,
    pub entries: Vec<(usize, usize, Vec<(usize, GaussRational)>)>,
}

fn frame_name(n: u32, a: usize) -> String {
    if a < n as usize {
        format!("Z{}", a + 1)
    } else {
        format!("Zbar{}", a - n as usize + 1)
    }
}

impl fmt::Display for BracketTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.entries.is_empty() {
            return writeln!(f, "all frame brackets vanish");
        }
        for (a, b, coeffs) in &self.entries {
            let rhs: Vec<String> = coeffs
                .iter()
                .map(|(k, c)| {
                    if c.is_one() {
                        frame_name(self.n, *k)
                    } else {
                        format!("({c})*{}", frame_name(self.n, *k))
                    }
                })
                .collect();
            writeln!(
                f,
                "[{}, {}] = {}",
                frame_name(self.n, *a),
                frame_name(self.n, *b),
                rhs.join(" + ")
            )?;
        }
        Ok(())
    }
}

fn eval_one_form_on_frame(g: &Generator, frame_idx: usize, n: u32) -> bool {
    match g {
        Generator::Hol(i) => frame_idx == *i as usize,
        Generator::Antihol(j) => frame_idx == n as usize + *j as usize,
    }
}

/// Evaluate an invariant 2-form on a frame pair `(X_a, X_b)`.
fn eval_two_form(f: &Form, a: usize, b: usize, n: u32) -> GaussRational {
    let mut acc = GaussRational::zero();
    for (mono, s) in f.terms() {
        debug_assert_eq!(mono.degree(), 2);
        let fs = mono.factors();
        let (g1, g2) = (&fs[0], &fs[1]);
        let c = s.constant_part();
        // (g1 ^ g2)(X, Y) = g1(X) g2(Y) - g1(Y) g2(X)
        let mut v = GaussRational::zero();
        if eval_one_form_on_frame(g1, a, n) && eval_one_form_on_frame(g2, b, n) {
            v += &c;
        }
        if eval_one_form_on_frame(g1, b, n) && eval_one_form_on_frame(g2, a, n) {
            v -= &c;
        }
        acc += &v;
    }
    acc
}

// ---------------------------------------------------------------------------
// parsing

fn syntax(line: usize, col: usize, msg: impl Into<String>) -> ModelError {
    ModelError::Syntax {
        line,
        col,
        msg: msg.into(),
    }
}

/// Parse model-file text into raw data (grammar checks only).
pub fn parse_raw(text: &str) -> Result<RawModel, ModelError> {
    let mut name = None;
    let mut dim: Option<u32> = None;
    let mut d_lines: BTreeMap<u32, Vec<StructureTerm>> = BTreeMap::new();

    for (lineno, raw_line) in text.lines().enumerate() {
        let line = lineno + 1;
        let no_comment = match raw_line.find('#') {
            Some(p) => &raw_line[..p],
            None => raw_line,
        };
        for stmt in no_comment.split(';') {
            let s = stmt.trim();
            if s.is_empty() {
                continue;
            }
            let col = raw_line.find(s.chars().next().unwrap().to_string().as_str()).map(|p| p + 1).unwrap_or(1);
            if let Some(rest) = s.strip_prefix("dim") {
                let rest = rest.trim();
                let v: u32 = rest
                    .parse()
                    .map_err(|_| syntax(line, col, format!("bad dimension `{rest}`")))?;
                if v == 0 || v > 16 {
                    return Err(syntax(line, col, "dimension must be in 1..=16"));
                }
                if dim.replace(v).is_some() {
                    return Err(syntax(line, col, "duplicate dim statement"));
                }
            } else if let Some(rest) = s.strip_prefix("name") {
                name = Some(rest.trim().to_string());
            } else if let Some(rest) = s.strip_prefix("d") {
                let n = dim.ok_or_else(|| syntax(line, col, "d-line before dim"))?;
                let rest = rest.trim();
                let eq = rest
                    .find('=')
                    .ok_or_else(|| syntax(line, col, "d-line missing `=`"))?;
                let lhs = rest[..eq].trim();
                let rhs = rest[eq + 1..].trim();
                let gen = parse_generator(lhs, line, col)?;
                let Generator::Hol(i) = gen else {
                    return Err(syntax(line, col, "structure equations are given for p-generators"));
                };
                if i >= n {
                    return Err(syntax(line, col, format!("generator p{} out of range", i + 1)));
                }
                let terms = parse_terms(rhs, n, line, col)?;
                if d_lines.insert(i + 1, terms).is_some() {
                    return Err(syntax(line, col, format!("duplicate d-line for p{}", i + 1)));
                }
            } else {
                return Err(syntax(line, col, format!("unrecognized statement `{s}`")));
            }
        }
    }

    let n = dim.ok_or_else(|| syntax(1, 1, "missing `dim <n>` statement"))?;
    Ok(RawModel { name, n, d_lines })
}

fn parse_generator(tok: &str, line: usize, col: usize) -> Result<Generator, ModelError> {
    let tok = tok.trim();
    let (kind, digits) = tok
        .split_at_checked(1)
        .ok_or_else(|| syntax(line, col, "empty factor"))?;
    let idx: u32 = digits
        .parse()
        .map_err(|_| syntax(line, col, format!("bad generator `{tok}`")))?;
    if idx == 0 {
        return Err(syntax(line, col, "generator indices start at 1"));
    }
    match kind {
        "p" => Ok(Generator::Hol(idx - 1)),
        "q" => Ok(Generator::Antihol(idx - 1)),
        _ => Err(syntax(line, col, format!("bad generator `{tok}`"))),
    }
}

/// Split `a + b - c` into terms. A sign splits only once the current chunk
/// already contains its wedge `^`; before that it belongs to the coefficient
/// (the grammar allows `a/b + c/d i` coefficients).
fn split_signed_terms(rhs: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in rhs.chars() {
        if (ch == '+' || ch == '-') && cur.contains('^') {
            if !cur.trim().is_empty() {
                out.push(cur.trim().to_string());
            }
            cur = String::new();
            if ch == '-' {
                cur.push('-');
            }
        } else {
            cur.push(ch);
        }
    }
    if !cur.trim().is_empty() {
        out.push(cur.trim().to_string());
    }
    out
}

fn parse_terms(rhs: &str, n: u32, line: usize, col: usize) -> Result<Vec<StructureTerm>, ModelError> {
    let mut acc: BTreeMap<Vec<(u8, u32)>, GaussRational> = BTreeMap::new();
    for text in split_signed_terms(rhs) {
        let (coef_text, factor_text) = match text.find('*') {
            Some(p) => (Some(text[..p].trim().to_string()), text[p + 1..].trim().to_string()),
            None => (None, text),
        };
        let mut coef = GaussRational::one();
        let factor_text = match coef_text {
            Some(c) => {
                coef = parse_coefficient(&c, line, col)?;
                factor_text
            }
            None => {
                // bare factor term, possibly with a leading sign
                let t = factor_text.trim();
                if let Some(rest) = t.strip_prefix('-') {
                    coef = -coef;
                    rest.trim().to_string()
                } else if let Some(rest) = t.strip_prefix('+') {
                    rest.trim().to_string()
                } else {
                    t.to_string()
                }
            }
        };
        let mut factors = Vec::new();
        for tok in factor_text.split('^') {
            let g = parse_generator(tok, line, col)?;
            let idx = match g {
                Generator::Hol(i) | Generator::Antihol(i) => i,
            };
            if idx >= n {
                return Err(syntax(line, col, format!("factor `{}` out of range", tok.trim())));
            }
            factors.push(g);
        }
        if factors.len() != 2 {
            return Err(syntax(line, col, "each structure term must be a wedge of two factors"));
        }
        let mut keyed: Vec<(u8, u32)> = factors.iter().map(canonical_factor_key).collect();
        if keyed[0] == keyed[1] {
            return Err(syntax(line, col, "repeated factor makes the term syntactically zero"));
        }
        if keyed[0] > keyed[1] {
            keyed.swap(0, 1);
            coef = -coef;
        }
        let entry = acc.entry(keyed).or_insert_with(GaussRational::zero);
        *entry += &coef;
    }
    let mut terms = Vec::new();
    for (keyed, coef) in acc {
        if coef.is_zero() {
            continue;
        }
        let factors = keyed
            .iter()
            .map(|(kind, idx)| {
                if *kind == 0 {
                    Generator::Hol(*idx)
                } else {
                    Generator::Antihol(*idx)
                }
            })
            .collect();
        terms.push(StructureTerm {
            coefficient: coef,
            factors,
        });
    }
    Ok(terms)
}

fn parse_rational(tok: &str, line: usize, col: usize) -> Result<BigRational, ModelError> {
    let tok = tok.trim();
    let (num, den) = match tok.find('/') {
        Some(p) => (&tok[..p], &tok[p + 1..]),
        None => (tok, "1"),
    };
    let n: BigInt = num
        .trim()
        .parse()
        .map_err(|_| syntax(line, col, format!("bad rational `{tok}`")))?;
    let d: BigInt = den
        .trim()
        .parse()
        .map_err(|_| syntax(line, col, format!("bad rational `{tok}`")))?;
    if d <= BigInt::from(0) {
        return Err(syntax(line, col, "denominators must be positive"));
    }
    Ok(BigRational::new(n, d))
}

/// Coefficient grammar: `a/b`, `a/b + c/d i`, `c/d i`, `i`, `-i`,
/// with bare integers allowed in place of fractions.
pub fn parse_coefficient(text: &str, line: usize, col: usize) -> Result<GaussRational, ModelError> {
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if compact.is_empty() {
        return Err(syntax(line, col, "empty coefficient"));
    }
    // split into at most two signed components at a '+'/'-' that is not leading
    let mut parts: Vec<String> = Vec::new();
    let mut cur = String::new();
    for (i, ch) in compact.chars().enumerate() {
        if (ch == '+' || ch == '-') && i > 0 {
            parts.push(cur.clone());
            cur = String::new();
            if ch == '-' {
                cur.push('-');
            }
        } else {
            cur.push(ch);
        }
    }
    parts.push(cur);
    if parts.len() > 2 {
        return Err(syntax(line, col, format!("bad coefficient `{text}`")));
    }
    let mut re = BigRational::new(0.into(), 1.into());
    let mut im = re.clone();
    let mut seen_im = false;
    let mut seen_re = false;
    for p in parts {
        if let Some(body) = p.strip_suffix('i') {
            if seen_im {
                return Err(syntax(line, col, "two imaginary components"));
            }
            seen_im = true;
            im = if body.is_empty() || body == "+" {
                BigRational::new(1.into(), 1.into())
            } else if body == "-" {
                BigRational::new((-1).into(), 1.into())
            } else {
                parse_rational(body, line, col)?
            };
        } else {
            if seen_re {
                return Err(syntax(line, col, "two real components"));
            }
            seen_re = true;
            re = parse_rational(&p, line, col)?;
        }
    }
    Ok(GaussRational::new(re, im))
}

fn coef_to_text(c: &GaussRational) -> String {
    c.to_string()
}

/// Parse and fully validate a model file.
pub fn parse_model(text: &str) -> Result<ComplexModel, ModelError> {
    ComplexModel::new(parse_raw(text)?)
}

// ---------------------------------------------------------------------------
// diagnostics

/// Per-generator breakdown used by the `check_integrability` diagnostic.
pub struct IntegrabilityReport {
    pub per_gen: Vec<GenReport>,
    pub pass: bool,
}

pub struct GenReport {
    pub gen: u32,
    pub part20: Form,
    pub part11: Form,
    pub part02: Form,
    pub d2_residual: Form,
}

pub fn check_integrability(raw: &RawModel) -> IntegrabilityReport {
    let model = ComplexModel::new_unchecked(raw.clone());
    let mut per_gen = Vec::new();
    let mut pass = true;
    for k in 0..model.n {
        let full = model.d_generator(Generator::Hol(k), DiffKind::D);
        let part20 = full.bidegree_part(2, 0);
        let part11 = full.bidegree_part(1, 1);
        let part02 = full.bidegree_part(0, 2);
        let d2_residual = d(&model, &full);
        if !part02.is_zero() || !d2_residual.is_zero() {
            pass = false;
        }
        per_gen.push(GenReport {
            gen: k + 1,
            part20,
            part11,
            part02,
            d2_residual,
        });
    }
    IntegrabilityReport { per_gen, pass }
}

impl fmt::Display for IntegrabilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for g in &self.per_gen {
            writeln!(
                f,
                "d p{}: (2,0)={} (1,1)={} (0,2)={} d2={}",
                g.gen, g.part20, g.part11, g.part02, g.d2_residual
            )?;
        }
        writeln!(f, "integrable={}", if self.pass { "yes" } else { "no" })
    }
}

// ---------------------------------------------------------------------------
// catalog

const CATALOG: &[(&str, &str)] = &[
    ("iwasawa3", "dim 3\nname iwasawa3\nd p3 = -1 * p1^p2\n"),
    ("torus1", "dim 1\nname torus1\n"),
    ("torus2", "dim 2\nname torus2\n"),
    ("torus3", "dim 3\nname torus3\n"),
    ("kodaira-thurston", "dim 2\nname kodaira-thurston\nd p2 = 1 * p1^q1\n"),
];

/// Look up a built-in model, falling back to `$NILCOHOM_CATALOG_DIR/<name>.model`.
pub fn catalog(name: &str) -> Result<ComplexModel, ModelError> {
    for (key, text) in CATALOG {
        if *key == name {
            return parse_model(text);
        }
    }
    if let Ok(dir) = std::env::var("NILCOHOM_CATALOG_DIR") {
        let path = std::path::Path::new(&dir).join(format!("{name}.model"));
        if path.exists() {
            let text = std::fs::read_to_string(&path).map_err(|e| ModelError::Io(e.to_string()))?;
            return parse_model(&text);
        }
    }
    Err(ModelError::UnknownCatalog(name.to_string()))
}

pub fn catalog_names() -> Vec<&'static str> {
    CATALOG.iter().map(|(k, _)| *k).collect()
}

/// Load a model from a catalog name or a file path.
pub fn load_model(source: &str) -> Result<ComplexModel, ModelError> {
    if std::path::Path::new(source).exists() {
        let text = std::fs::read_to_string(source).map_err(|e| ModelError::Io(e.to_string()))?;
        return parse_model(&text);
    }
    catalog(source)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{self, delbar};

    #[test]
    fn parse_iwasawa() {
        let m = parse_model("dim 3; d p3 = -1 * p1^p2").unwrap();
        assert_eq!(m.n, 3);
        let d3 = m.d_generator(Generator::Hol(2), DiffKind::D);
        let expect = Form::generator(3, Generator::Hol(0))
            .wedge(&Form::generator(3, Generator::Hol(1)))
            .neg();
        assert_eq!(d3, expect);
    }

    #[test]
    fn torus_has_zero_d() {
        let m = catalog("torus2").unwrap();
        for k in 0..2 {
            assert!(m.d_generator(Generator::Hol(k), DiffKind::D).is_zero());
        }
    }

    #[test]
    fn mixed_term_model_validates() {
        // d p2 = p1^q1 has d^2 = 0 by expansion
        let m = parse_model("dim 2\nd p2 = p1^q1\n").unwrap();
        let d2 = m.d_generator(Generator::Hol(1), DiffKind::D);
        assert!(d(&m, &d2).is_zero());
    }

    #[test]
    fn rejects_02_component() {
        let err = parse_model("dim 2\nd p2 = q1^q2\n").unwrap_err();
        assert!(matches!(err, ModelError::Integrability { gen: 2, .. }));
    }

    #[test]
    fn rejects_repeated_factor() {
        let err = parse_model("dim 2\nd p2 = q1^q1\n").unwrap_err();
        assert!(matches!(err, ModelError::Syntax { .. }));
    }

    #[test]
    fn rejects_d_squared_violation() {
        // d p2 = p1^q2 is integrable but d(d p2) = p1^p2^q1 != 0
        let err = parse_model("dim 2\nd p2 = p1^q2\n").unwrap_err();
        assert!(matches!(err, ModelError::DSquared { gen: 2, .. }));
    }

    #[test]
    fn iwasawa_frame_bracket() {
        let m = catalog("iwasawa3").unwrap();
        // [Z1, Z2] = Z3
        let c = m.bracket_coeffs(0, 1);
        assert_eq!(c[2], GaussRational::one());
        assert!(c.iter().enumerate().all(|(k, v)| k == 2 || v.is_zero()));
        // no mixed brackets: complex parallelizable
        assert!(m.is_complex_parallelizable());
        let table = m.frame_structure().to_string();
        assert!(table.contains("[Z1, Z2] = Z3"));
        // torus: empty table
        assert!(catalog("torus2")
            .unwrap()
            .frame_structure()
            .to_string()
            .contains("all frame brackets vanish"));
    }

    #[test]
    fn kodaira_thurston_mixed_bracket() {
        let m = catalog("kodaira-thurston").unwrap();
        // [Z1, Zbar1] has a Z2-component (and the conjugate part)
        let c = m.bracket_coeffs(0, 2);
        assert!(!c[1].is_zero());
        assert!(!m.is_complex_parallelizable());
        // delbar Z1 has a qbar1 (x) Z2 term
        let df = m.delbar_frame(0);
        assert_eq!(df.len(), 1);
        assert_eq!((df[0].0, df[0].1), (0, 1));
    }

    #[test]
    fn conjugation_commutes_with_d() {
        for name in ["iwasawa3", "kodaira-thurston", "torus2"] {
            let m = catalog(name).unwrap();
            for k in 0..m.n {
                for g in [Generator::Hol(k), Generator::Antihol(k)] {
                    let f = Form::generator(m.n, g);
                    assert_eq!(d(&m, &f).conj(), d(&m, &f.conj()), "model {name}");
                }
            }
        }
    }

    #[test]
    fn d_squared_zero_on_generators() {
        for name in ["iwasawa3", "kodaira-thurston", "torus1", "torus2", "torus3"] {
            let m = catalog(name).unwrap();
            for k in 0..m.n {
                let f = Form::generator(m.n, Generator::Hol(k));
                assert!(d(&m, &d(&m, &f)).is_zero());
                assert!(delbar(&m, &delbar(&m, &f)).is_zero());
                let g = Form::generator(m.n, Generator::Antihol(k));
                assert!(d(&m, &d(&m, &g)).is_zero());
            }
        }
    }

    #[test]
    fn parse_serialize_roundtrip() {
        let m = parse_model("dim 2\nname demo\nd p2 = 1/2 * p1^q1 + -1/3+2/5i * p1^p2\n").unwrap();
        let text = m.serialize();
        let m2 = parse_model(&text).unwrap();
        assert_eq!(m2.serialize(), text);
        assert_eq!(m2.raw().d_lines, m.raw().d_lines);
    }

    #[test]
    fn integrability_report_shows_components() {
        let raw = parse_raw("dim 2\nd p2 = q1^q2\n").unwrap();
        let rep = check_integrability(&raw);
        assert!(!rep.pass);
        assert!(!rep.per_gen[1].part02.is_zero());
        let ok = parse_raw("dim 3\nd p3 = -1 * p1^p2\n").unwrap();
        assert!(check_integrability(&ok).pass);
        let torus = parse_raw("dim 1\n").unwrap();
        assert!(check_integrability(&torus).pass);
    }

    #[test]
    fn lemma_2_4_bracket_on_iwasawa() {
        let m = catalog("iwasawa3").unwrap();
        let n = m.n;
        let phi = {
            let mut b = calculus::Beltrami::zero(n);
            b.components[0] = Form::generator(n, Generator::Antihol(0));
            b
        };
        let psi = {
            let mut b = calculus::Beltrami::zero(n);
            b.components[1] = Form::generator(n, Generator::Antihol(1));
            b
        };
        let br = calculus::bracket(&m, &phi, &psi);
        // component along Z3 is qbar1 ^ qbar2
        let expect = Form::generator(n, Generator::Antihol(0))
            .wedge(&Form::generator(n, Generator::Antihol(1)));
        assert_eq!(br.components[2], expect);
        assert!(br.components[0].is_zero());
        assert!(br.components[1].is_zero());
        // symmetry for (0,1)-inputs
        let br2 = calculus::bracket(&m, &psi, &phi);
        assert_eq!(br, br2);
    }
}
