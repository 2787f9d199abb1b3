use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub const EXPERIMENTS: [&str; 9] = [
    "verify-algebra",
    "verify-nulllag",
    "structure",
    "jensen",
    "kr",
    "tightness",
    "minimize",
    "gap",
    "weak-minors",
];

/// Experiments on polyconvex integrands, null Lagrangians and Young measures.
///
/// Every parameter can also be set in a `--config` file of `key = value`
/// lines; flags win over the file.
#[derive(Parser, Debug)]
#[command(name = "polyvar", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Run-wide seed [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; 0 picks the number of cores [default: 0].
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output directory [default: polyvar-out/<experiment>].
    #[arg(long)]
    pub out: Option<String>,
    /// File of `key = value` lines.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Graph identity, Hodge sign law and Cauchy–Binet on random instances.
    VerifyAlgebra(VerifyAlgebraArgs),
    /// Vanishing of ∫F(t, u, du) for maps with free boundary values and
    /// compactly supported fields, with convergence orders.
    VerifyNulllag(VerifyNulllagArgs),
    /// Structure residual of a laminate.
    Structure(StructureArgs),
    /// Jensen gap ∫L dη − L(barycentre) over random rank-one laminates.
    Jensen(JensenArgs),
    /// Kantorovich–Rubinstein distance between two measure files.
    Kr(KrArgs),
    /// Tail profile of minimization iterates against the coercivity bound.
    Tightness(TightnessArgs),
    /// Direct-method minimization with a fixed boundary trace.
    Minimize(MinimizeArgs),
    /// Energy gap between t/|t| and discrete minimizers on the disc.
    Gap(GapArgs),
    /// Weak convergence of det du_i for stripe maps.
    WeakMinors(WeakMinorsArgs),
}

#[derive(Args, Debug)]
pub struct VerifyAlgebraArgs {
    /// Random instances per identity [default: 1000].
    #[arg(long)]
    pub trials: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct VerifyNulllagArgs {
    /// Random (χ, U, u) cases [default: 60].
    #[arg(long)]
    pub cases: Option<usize>,
    /// Quadrature order [default: 2].
    #[arg(long)]
    pub quadrature_order: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct StructureArgs {
    /// `rank1` (random rank-one pair) or `pmId` (Id and −Id) [default: rank1].
    #[arg(long)]
    pub laminate: Option<String>,
    /// Weight of the first matrix [default: 0.5].
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Domain and target dimension [default: 2].
    #[arg(long)]
    pub dim: Option<usize>,
    /// Box mesh divisions per axis [default: 2].
    #[arg(long)]
    pub divisions: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct JensenArgs {
    /// `example`, `polyconvex` (random per trial) or `negdet` (−|det v|) [default: example].
    #[arg(long = "L")]
    pub l: Option<String>,
    /// Number of laminates [default: 100].
    #[arg(long)]
    pub trials: Option<usize>,
    /// ε of the example integrand [default: 1e-3].
    #[arg(long)]
    pub eps: Option<f64>,
    /// p of the example integrand [default: 1.5].
    #[arg(long)]
    pub p: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct KrArgs {
    /// First measure file.
    #[arg(long)]
    pub a: Option<String>,
    /// Second measure file.
    #[arg(long)]
    pub b: Option<String>,
    /// `one` or `rk` [default: rk].
    #[arg(long)]
    pub weight: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct TightnessArgs {
    /// Disc mesh size [default: 0.1].
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    /// Number of iterates in the family [default: 5].
    #[arg(long)]
    pub iterates: Option<usize>,
    /// Descent steps between consecutive iterates [default: 10].
    #[arg(long)]
    pub stride: Option<usize>,
    /// Size of the interior perturbation of the starting map [default: 0.1].
    #[arg(long)]
    pub perturbation: Option<f64>,
    /// Number of radii [default: 41].
    #[arg(long)]
    pub radii: Option<usize>,
    /// Largest radius [default: 20].
    #[arg(long)]
    pub r_max: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct MinimizeArgs {
    /// `disc` or `box` [default: disc].
    #[arg(long)]
    pub mesh: Option<String>,
    /// Mesh size [default: 0.1].
    #[arg(long)]
    pub h: Option<f64>,
    /// `example` or `dirichlet` [default: example].
    #[arg(long = "L")]
    pub l: Option<String>,
    /// `plane` or `sphere` [default: plane].
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub quadrature_order: Option<usize>,
    #[arg(long)]
    pub starts: Option<usize>,
    /// Perturbation size of starts after the first [default: 0.05].
    #[arg(long)]
    pub perturbation: Option<f64>,
    /// Interior perturbation of the initial map [default: 0].
    #[arg(long)]
    pub init_perturbation: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct GapArgs {
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub starts: Option<usize>,
    #[arg(long)]
    pub quadrature_order: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct WeakMinorsArgs {
    /// Random rank-one pairs [default: 5].
    #[arg(long)]
    pub pairs: Option<usize>,
    /// Test functions per pair [default: 3].
    #[arg(long)]
    pub tests: Option<usize>,
    /// Largest stripe frequency, a power of two ≥ 4 [default: 64].
    #[arg(long)]
    pub i_max: Option<usize>,
    /// `tent` or `bump` [default: tent].
    #[arg(long)]
    pub psi: Option<String>,
    #[command(flatten)]
    pub common: Common,
}
