use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;

use polyvar::meshmaps::{build_box_mesh, interpolate, PwAffineMap};

use crate::cli::Common;
use crate::error::CliError;
use crate::output::Run;
use crate::params::Params;

pub mod algebra;
pub mod measures;
pub mod variational;

/// Resolve the common flags, let `configure` resolve the rest, then run
/// the job on a pool of the requested size and write the summary.
pub fn execute<F>(
    name: &str,
    common: &Common,
    configure: impl FnOnce(&mut Params, u64) -> Result<F, CliError>,
) -> Result<bool, CliError>
where
    F: FnOnce(&mut Run) -> Result<(), CliError> + Send,
{
    let start = Instant::now();
    let mut p = Params::load(common.config.as_deref())?;
    let seed = p.get("seed", common.seed, 0u64)?;
    let threads = p.get("threads", common.threads, 0usize)?;
    let out = p.get("out", common.out.clone(), format!("polyvar-out/{name}"))?;
    let job = configure(&mut p, seed)?;
    p.finish()?;
    let mut run = Run::new(Path::new(&out))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Validation(format!("thread pool: {e}")))?;
    pool.install(|| job(&mut run))?;
    run.finish(name, p.echo(), start.elapsed().as_secs_f64())
}

pub fn matrix(rng: &mut impl Rng, m: usize, n: usize, s: f64) -> DMatrix<f64> {
    DMatrix::from_fn(m, n, |_, _| rng.gen_range(-s..s))
}

/// `(A, A + a ⊗ b)` with random `A`, `a`, `b`.
pub fn rank_one_pair(rng: &mut impl Rng, m: usize, n: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let a = matrix(rng, m, n, 1.5);
    let col = matrix(rng, m, 1, 1.0);
    let row = matrix(rng, 1, n, 1.0);
    let b = &a + col * row;
    (a, b)
}

/// Random affine map on the unit box.
pub fn affine_base(rng: &mut impl Rng, n: usize, m: usize, divisions: usize) -> Result<PwAffineMap, CliError> {
    let mesh = Arc::new(build_box_mesh(n, divisions)?);
    let a = matrix(rng, m, n, 1.0);
    let b: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Ok(interpolate(move |t| (0..m).map(|i| b[i] + (0..n).map(|j| a[(i, j)] * t[j]).sum::<f64>()).collect(), mesh, m)?)
}

/// Add uniform noise of size `s` to interior nodal values.
pub fn perturb_interior(u: &PwAffineMap, rng: &mut impl Rng, s: f64) -> Result<PwAffineMap, CliError> {
    if s == 0.0 {
        return Ok(u.clone());
    }
    let mesh = u.mesh_arc().clone();
    let m = u.values().len() / mesh.num_vertices();
    let values = u
        .values()
        .iter()
        .enumerate()
        .map(|(k, x)| if mesh.is_boundary(k / m) { *x } else { x + rng.gen_range(-s..s) })
        .collect();
    Ok(u.with_values(values)?)
}

pub fn one_of<'a>(key: &str, value: &str, allowed: &[&'a str]) -> Result<&'a str, CliError> {
    allowed
        .iter()
        .find(|a| **a == value)
        .copied()
        .ok_or_else(|| CliError::Validation(format!("--{key} must be one of {}, got `{value}`", allowed.join(", "))))
}
