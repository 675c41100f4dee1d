//! Command-line front end: model ingestion, subcommand dispatch, and
//! deterministic report emission.
//!
//! Exit codes: 0 on success, 1 when a named hypothesis refuses an operation,
//! 2 on parse errors (command line or model file).

use clap::{Args, Parser, Subcommand};
use nilcohom::deform::{self, Theory};
use nilcohom::extend;
use nilcohom::form::Generator;
use nilcohom::hodge;
use nilcohom::identities;
use nilcohom::linalg::Subspace;
use nilcohom::model::{self, ComplexModel};
use nilcohom::par::ExecMode;
use nilcohom::{Form, GaussRational};

pub const EXIT_OK: i32 = 0;
pub const EXIT_HYPOTHESIS: i32 = 1;
pub const EXIT_PARSE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "nilcohom", version, about = "exact cohomology and deformation engine for invariant complex models")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct CommonOpts {
    /// Catalog name (iwasawa3, torus1..3, kodaira-thurston) or model-file path
    #[arg(long)]
    pub model: String,
    /// Write the report to a file instead of stdout
    #[arg(long)]
    pub out: Option<String>,
    /// Additionally print an aligned human-readable table
    #[arg(long)]
    pub pretty: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// All five cohomology families and Betti numbers (TSV)
    Cohomology {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// del-delbar-lemma variants, global lemma flag, AT defects (TSV)
    Lemma {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Kuranishi family summary: parameters, termination, obstruction
    Kuranishi {
        #[command(flatten)]
        common: CommonOpts,
        /// Truncation order for the deformation parameters
        #[arg(long, default_value_t = 4)]
        order: u32,
    },
    /// Hodge-number scan along the Kuranishi family (TSV)
    Scan {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long, default_value_t = 4)]
        order: u32,
        /// Number of exact sample points
        #[arg(long, default_value_t = 5)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also scan Bott-Chern numbers at each sample
        #[arg(long)]
        bottchern: bool,
    },
    /// d-closed extension of one Dolbeault class along the family
    Extend {
        #[command(flatten)]
        common: CommonOpts,
        /// Bidegree `p,q` of the class
        #[arg(long)]
        bidegree: String,
        /// Index of the class in the harmonic basis
        #[arg(long, default_value_t = 0)]
        class: usize,
        #[arg(long, default_value_t = 4)]
        order: u32,
    },
    /// p-Kahler stability pipeline for the standard form
    Pkahler {
        #[command(flatten)]
        common: CommonOpts,
        /// Bidegree `p,p` of the p-Kahler form
        #[arg(long)]
        bidegree: String,
        #[arg(long, default_value_t = 4)]
        order: u32,
        #[arg(long, default_value_t = 5)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Seeded operator-identity property suite
    Identities {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random cases per identity
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
}

enum CmdError {
    Parse(String),
    Hypothesis(String),
}

impl From<model::ModelError> for CmdError {
    fn from(e: model::ModelError) -> Self {
        CmdError::Parse(e.to_string())
    }
}

impl From<deform::DeformError> for CmdError {
    fn from(e: deform::DeformError) -> Self {
        CmdError::Hypothesis(e.to_string())
    }
}

impl From<extend::ExtendError> for CmdError {
    fn from(e: extend::ExtendError) -> Self {
        CmdError::Hypothesis(e.to_string())
    }
}

impl From<hodge::HodgeError> for CmdError {
    fn from(e: hodge::HodgeError) -> Self {
        CmdError::Hypothesis(e.to_string())
    }
}

fn parse_bidegree(text: &str) -> Result<(i64, i64), CmdError> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(CmdError::Parse(format!("bad bidegree `{text}`, expected `p,q`")));
    }
    let p = parts[0]
        .trim()
        .parse()
        .map_err(|_| CmdError::Parse(format!("bad bidegree `{text}`")))?;
    let q = parts[1]
        .trim()
        .parse()
        .map_err(|_| CmdError::Parse(format!("bad bidegree `{text}`")))?;
    Ok((p, q))
}

fn emit(common: &CommonOpts, text: &str) -> Result<(), CmdError> {
    match &common.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CmdError::Parse(format!("cannot write `{path}`: {e}"))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load(common: &CommonOpts) -> Result<ComplexModel, CmdError> {
    Ok(model::load_model(&common.model)?)
}

fn standard_kahler_power(n: u32, p: u32) -> Form {
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

fn dispatch(config: RunConfig) -> Result<(), CmdError> {
    match config.command {
        Command::Cohomology { common } => {
            let m = load(&common)?;
            let table = hodge::cohomology(&m);
            let mut text = table.to_tsv();
            if common.pretty {
                text.push('\n');
                text.push_str(&table.to_pretty());
            }
            emit(&common, &text)
        }
        Command::Lemma { common } => {
            let m = load(&common)?;
            let rep = hodge::lemma_variants(&m);
            let mut text = rep.to_tsv();
            if common.pretty {
                text.push('\n');
                text.push_str(&rep.to_pretty());
            }
            emit(&common, &text)
        }
        Command::Kuranishi { common, order } => {
            let m = load(&common)?;
            let fam = deform::kuranishi_series(&m, order)?;
            emit(&common, &fam.summary())
        }
        Command::Scan {
            common,
            order,
            samples,
            seed,
            bottchern,
        } => {
            let m = load(&common)?;
            let fam = deform::kuranishi_series(&m, order)?;
            let pts = deform::sample_points(fam.m, samples, seed);
            let theories = if bottchern {
                vec![Theory::Dolbeault, Theory::BottChern]
            } else {
                vec![Theory::Dolbeault]
            };
            let rep = deform::invariance_scan(&m, &fam, &pts, &theories)?;
            if !rep.semicontinuity_ok
                || !rep.euler_constant_ok
                || !rep.thm_pq_sound
                || !rep.thm_p0_sound
                || !rep.thm_0q_sound
            {
                emit(&common, &rep.to_tsv())?;
                return Err(CmdError::Hypothesis(
                    "scan invariants violated (see report)".into(),
                ));
            }
            emit(&common, &rep.to_tsv())
        }
        Command::Extend {
            common,
            bidegree,
            class,
            order,
        } => {
            let m = load(&common)?;
            let (p, q) = parse_bidegree(&bidegree)?;
            let fam = deform::kuranishi_series(&m, order)?;
            // harmonic basis of the Dolbeault classes at (p,q)
            let basis = hodge::bidegree_basis(m.n, p, q);
            let (h, _g) = hodge::harmonic_green(&m, hodge::LapKind::Delbar, p, q);
            let span = Subspace::from_vectors(basis.len(), &h.columns());
            if class >= span.dim() {
                return Err(CmdError::Parse(format!(
                    "class index {class} out of range: h^({p},{q}) = {}",
                    span.dim()
                )));
            }
            let rep_form = hodge::vec_to_form(m.n, &basis, &span.basis[class]);
            let gamma = hodge::canonical_representative(&m, &rep_form)?;
            let res = extend::extend_d_closed(&m, &gamma, &fam, order)?;
            let diag = extend::verify_extension(&m, &fam, &res);
            let mut text = res.report();
            text.push_str(&format!(
                "FILTRATION_OK={}\nRHO_MATCHES={}\n",
                diag.filtration_ok, diag.rho_matches
            ));
            emit(&common, &text)
        }
        Command::Pkahler {
            common,
            bidegree,
            order,
            samples,
            seed,
        } => {
            let m = load(&common)?;
            let (p, q) = parse_bidegree(&bidegree)?;
            if p != q || p < 1 {
                return Err(CmdError::Parse("pkahler needs a bidegree `p,p` with p >= 1".into()));
            }
            let fam = deform::kuranishi_series(&m, order)?;
            let pts = deform::sample_points(fam.m, samples, seed);
            let omega0 = standard_kahler_power(m.n, p as u32);
            let res = extend::p_kahler_extend(&m, &omega0, &fam, p as u32, &pts, order)?;
            emit(&common, &res.report())
        }
        Command::Identities {
            common,
            seed,
            samples,
        } => {
            let m = load(&common)?;
            let rep = identities::run_identity_suite(&m, seed, samples, ExecMode::Parallel);
            emit(&common, &rep.to_text())?;
            if !rep.all_pass() {
                return Err(CmdError::Hypothesis("identity suite recorded failures".into()));
            }
            Ok(())
        }
    }
}

/// Parse arguments and run; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let config = match RunConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            // keep clap's help/version on stdout with exit 0
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_PARSE,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(config) {
        Ok(()) => EXIT_OK,
        Err(CmdError::Hypothesis(msg)) => {
            eprintln!("refused: {msg}");
            EXIT_HYPOTHESIS
        }
        Err(CmdError::Parse(msg)) => {
            eprintln!("error: {msg}");
            EXIT_PARSE
        }
    }
}
