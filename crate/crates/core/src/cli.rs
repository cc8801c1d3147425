//! Command-line driver behind the `eocp` binary.
//!
//! Exit codes: 0 on success, 1 on invalid arguments or a failed `verify`
//! check, 2 when an active-set solve does not converge.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::analysis::{
    h1_seminorm_error, l2_error, run_convergence_study, solve_configuration, ConvergenceRow, LevelSolution,
    StudyOptions,
};
use crate::error::{invalid, Error, Result};
use crate::mesh::Mesh;
use crate::options::SolverOptions;
use crate::oracle;
use crate::output::{self, Location, Manifest};
use crate::problem::RhoChoice;
use crate::quadrature::QuadratureRule;
use crate::recovery::{control_dual_error, reconstruct_control, Reconstruction, OUTER_TOL};
use crate::targets::{preset_constraints, ConstraintSpec, Preset, Target, DEFAULT_K};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "eocp", version, about = "Energy-regularized optimal control solver")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve on one mesh and export the fields.
    Solve(RunArgs),
    /// Convergence table over several meshes.
    Study(RunArgs),
    /// Solve for the state, then recover the control on a coarse mesh.
    Reconstruct(RunArgs),
    /// Check the solvers against brute-force oracles on tiny meshes.
    Verify(RunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Vtk,
    Both,
}

impl Format {
    fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }

    fn vtk(self) -> bool {
        matches!(self, Format::Vtk | Format::Both)
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long, default_value = "u1")]
    pub target: String,
    /// Steepness of the plateau target u2.
    #[arg(long, default_value_t = DEFAULT_K)]
    pub k: f64,
    /// none, g1, g2, f1, f2, f3, f4 or f5.
    #[arg(long, default_value = "none")]
    pub constraints: String,
    /// Cells per side of the (fine) mesh.
    #[arg(long, conflicts_with = "levels")]
    pub n: Option<usize>,
    /// Comma-separated cells per side for `study`.
    #[arg(long, value_delimiter = ',')]
    pub levels: Option<Vec<usize>>,
    /// Cells per side of the coarse control mesh; defaults to n/4.
    #[arg(long)]
    pub n_coarse: Option<usize>,
    /// `h2` or a positive number.
    #[arg(long, default_value = "h2")]
    pub rho: String,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
    #[arg(long, default_value = "eocp-out")]
    pub out: PathBuf,
    /// Defaults to csv for `study` and both otherwise.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Record wall-clock times (makes outputs non-reproducible).
    #[arg(long)]
    pub timings: bool,
}

/// Parse and run; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let raw: Vec<String> = args
        .into_iter()
        .map(|a| a.into().to_string_lossy().into_owned())
        .collect();
    let cli = match Cli::try_parse_from(&raw) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let recorded: Vec<String> = raw.iter().skip(1).cloned().collect();
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a, &recorded, false),
        Command::Reconstruct(a) => cmd_solve(a, &recorded, true),
        Command::Study(a) => cmd_study(a, &recorded),
        Command::Verify(a) => cmd_verify(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("eocp: {e}");
            match e {
                Error::InvalidArgument(_) | Error::Unsupported(_) | Error::Io(_) => EXIT_INVALID,
                _ => EXIT_NOT_CONVERGED,
            }
        }
    }
}

struct Resolved {
    target: Target,
    preset: Option<Preset>,
    constraint: ConstraintSpec,
    rho: RhoChoice,
    solver: SolverOptions,
}

fn resolve(a: &RunArgs) -> Result<Resolved> {
    if !(a.k > 0.0 && a.k.is_finite()) {
        return Err(invalid(format!("--k must be positive, got {}", a.k)));
    }
    let target = Target::parse(&a.target, a.k)?;
    let preset = match a.constraints.as_str() {
        "none" => None,
        s => Some(s.parse::<Preset>()?),
    };
    let constraint = preset.map_or(ConstraintSpec::None, |p| preset_constraints(p, a.k));
    let rho = match a.rho.as_str() {
        "h2" => RhoChoice::HSquared,
        s => match s.parse::<f64>() {
            Ok(r) if r > 0.0 && r.is_finite() => RhoChoice::Fixed(r),
            _ => return Err(invalid(format!("--rho must be 'h2' or a positive number, got '{s}'"))),
        },
    };
    if !(a.c > 0.0 && a.c.is_finite()) {
        return Err(invalid(format!("--c must be positive, got {}", a.c)));
    }
    if !(a.tol > 0.0 && a.tol.is_finite()) {
        return Err(invalid(format!("--tol must be positive, got {}", a.tol)));
    }
    if a.max_iter == 0 {
        return Err(invalid("--max-iter must be at least 1"));
    }
    let solver = SolverOptions {
        c: a.c,
        tol: a.tol,
        max_iter: a.max_iter,
        subdivisions: target.default_subdivisions(),
        ..Default::default()
    };
    Ok(Resolved {
        target,
        preset,
        constraint,
        rho,
        solver,
    })
}

fn parameters(a: &RunArgs, r: &Resolved, format: Format, n_coarse: Option<usize>) -> serde_json::Value {
    json!({
        "target": r.target.name(),
        "k": a.k,
        "constraints": r.preset.map_or("none", |p| p.name()),
        "n": a.n,
        "levels": a.levels,
        "n_coarse": n_coarse,
        "rho": match r.rho { RhoChoice::HSquared => json!("h2"), RhoChoice::Fixed(x) => json!(x) },
        "solver": r.solver,
        "recovery_tol": OUTER_TOL,
        "format": format!("{format:?}").to_lowercase(),
        "seed": a.seed,
    })
}

fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn write_csv_file(dir: &Path, run_id: &str, rows: &[ConvergenceRow]) -> Result<PathBuf> {
    let path = dir.join(format!("{run_id}.csv"));
    let mut buf = Vec::new();
    output::write_csv(rows, &mut buf)?;
    fs::write(&path, buf)?;
    Ok(path)
}

fn display(p: &Path) -> String {
    p.file_name()
        .map_or_else(|| p.display().to_string(), |f| f.to_string_lossy().into_owned())
}

fn cmd_solve(a: &RunArgs, raw: &[String], always_reconstruct: bool) -> Result<i32> {
    let r = resolve(a)?;
    if a.levels.is_some() {
        return Err(invalid("--levels is only valid for study"));
    }
    let n = a.n.unwrap_or(32);
    let n_coarse = match (a.n_coarse, always_reconstruct) {
        (Some(nc), _) => Some(nc),
        (None, true) => Some(n / 4),
        (None, false) => None,
    };
    if let Some(nc) = n_coarse {
        if nc == 0 || n % nc != 0 || n / nc < 4 {
            return Err(invalid(format!(
                "--n-coarse {nc} must divide n = {n} with at least 4 fine cells per coarse cell"
            )));
        }
    }
    let format = a.format.unwrap_or(Format::Both);
    let start = Instant::now();
    let mesh = Mesh::structured(n)?;
    let rho = r.rho.resolve(&mesh);
    let field = r.target.as_field();
    let sol = solve_configuration(&mesh, rho, field.as_ref(), &r.constraint, &r.solver)?;

    let rule = QuadratureRule::degree5();
    let s = r.solver.subdivisions;
    let err_l2 = l2_error(&sol.u, &mesh, field.as_ref(), &rule, s);
    let err_h1 = match r.target {
        Target::U3 => f64::NAN,
        t => h1_seminorm_error(&sol.u, &mesh, &|x, y| t.gradient(x, y).unwrap_or([0.0; 2]), &rule, s),
    };

    let recovered = match n_coarse {
        Some(nc) => {
            let coarse = Mesh::structured(nc)?;
            let rec = reconstruct_control(&sol.u, &mesh, &coarse, OUTER_TOL)?;
            let err = match r.target.exact_control() {
                Ok(z) if matches!(r.constraint, ConstraintSpec::None) => {
                    Some(control_dual_error(&rec.z, &mesh, &coarse, z.as_ref(), s)?)
                }
                _ => None,
            };
            Some((coarse, rec, err))
        }
        None => None,
    };
    let wall_ms = if a.timings { start.elapsed().as_millis() } else { 0 };

    let command = if always_reconstruct { "reconstruct" } else { "solve" };
    let run_id = format!(
        "{command}_{}_{}_n{n}",
        r.target.name(),
        r.preset.map_or("none", |p| p.name())
    );
    prepare_out(&a.out)?;
    let mut outputs = Vec::new();
    let row = ConvergenceRow {
        level: 0,
        n,
        h: mesh.spacing(),
        rho,
        dofs: sol.interior.len(),
        err_l2,
        err_h1,
        eoc_l2: f64::NAN,
        eoc_h1: f64::NAN,
        newton_iters: sol.newton_iterations(),
        wall_ms,
        converged: sol.converged(),
        control_err: recovered.as_ref().and_then(|x| x.2),
        eoc_control: None,
        failure: None,
    };
    if format.csv() {
        outputs.push(display(&write_csv_file(&a.out, &run_id, std::slice::from_ref(&row))?));
    }
    if format.vtk() {
        outputs.extend(export_fields(
            &a.out,
            &run_id,
            &mesh,
            &sol,
            &r.constraint,
            recovered.as_ref(),
        )?);
    }
    let results = json!({
        "converged": sol.converged(),
        "dofs": sol.interior.len(),
        "rho": rho,
        "report": sol.report,
        "linear_iterations": sol.linear_iterations,
        "err_l2": finite_or_null(err_l2),
        "err_h1": finite_or_null(err_h1),
        "recovery": recovered.as_ref().map(|(coarse, rec, err)| json!({
            "n_coarse": coarse.n_per_side(),
            "coarse_elements": coarse.num_elements(),
            "outer_iterations": rec.outer_iterations,
            "relative_residual": rec.relative_residual,
            "control_dual_error": err,
        })),
        "wall_ms": wall_ms,
    });
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        command: command.to_string(),
        args: raw.to_vec(),
        run_id: run_id.clone(),
        parameters: parameters(a, &r, format, n_coarse),
        results,
        outputs: outputs.clone(),
    };
    manifest.write(&a.out)?;

    println!(
        "{run_id}: {} dofs, rho {}, L2 error {}, {} active-set iterations{}",
        sol.interior.len(),
        output::real(rho),
        output::real(err_l2),
        sol.newton_iterations(),
        if sol.converged() { "" } else { " (NOT CONVERGED)" }
    );
    if let Some((coarse, rec, _)) = &recovered {
        println!(
            "control recovered on {} coarse elements in {} CG iterations",
            coarse.num_elements(),
            rec.outer_iterations
        );
    }
    Ok(if sol.converged() { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

fn finite_or_null(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn export_fields(
    dir: &Path,
    run_id: &str,
    mesh: &Mesh,
    sol: &LevelSolution,
    constraint: &ConstraintSpec,
    recovered: Option<&(Mesh, Reconstruction, Option<f64>)>,
) -> Result<Vec<String>> {
    let mut out = vec![display(&output::write_vtk_file(
        dir,
        run_id,
        mesh,
        "state",
        &sol.u,
        Location::Point,
    )?)];
    if let Some(m) = &sol.multiplier {
        let name = match constraint {
            ConstraintSpec::Control { .. } => "w",
            _ => "lambda",
        };
        let full = crate::assembly::extend_by_zero(m, &sol.interior, mesh.num_nodes());
        out.push(display(&output::write_vtk_file(
            dir,
            run_id,
            mesh,
            name,
            &full,
            Location::Point,
        )?));
    }
    if let Some((coarse, rec, _)) = recovered {
        out.push(display(&output::write_vtk_file(
            dir,
            run_id,
            coarse,
            "control",
            &rec.z,
            Location::Cell,
        )?));
    }
    Ok(out)
}

fn cmd_study(a: &RunArgs, raw: &[String]) -> Result<i32> {
    let r = resolve(a)?;
    let levels = match (&a.levels, a.n) {
        (Some(l), _) => l.clone(),
        (None, Some(n)) => vec![n],
        (None, None) => vec![8, 16, 32, 64],
    };
    let format = a.format.unwrap_or(Format::Csv);
    if format.vtk() {
        return Err(invalid("study writes tables only; use --format csv"));
    }
    let coarse_ratio = match a.n_coarse {
        None => None,
        Some(nc) => {
            let first = levels[0];
            if nc == 0 || first % nc != 0 || first / nc != 4 {
                return Err(invalid("--n-coarse for study must equal the first level divided by 4"));
            }
            Some(4)
        }
    };
    let opts = StudyOptions {
        solver: r.solver,
        rho: r.rho,
        coarse_ratio,
        timings: a.timings,
    };
    let table = run_convergence_study(r.target, &r.constraint, &levels, &opts)?;
    let run_id = format!("study_{}_{}", r.target.name(), r.preset.map_or("none", |p| p.name()));
    prepare_out(&a.out)?;
    let csv = write_csv_file(&a.out, &run_id, &table.rows)?;
    print!("{}", output::table_csv(&table));
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        command: "study".into(),
        args: raw.to_vec(),
        run_id,
        parameters: parameters(a, &r, format, a.n_coarse),
        results: json!({
            "rows": table.rows.iter().map(|row| json!({
                "n": row.n,
                "converged": row.converged,
                "newton_iters": row.newton_iters,
                "control_err": row.control_err,
                "eoc_control": row.eoc_control,
                "failure": row.failure,
            })).collect::<Vec<_>>(),
        }),
        outputs: vec![display(&csv)],
    };
    manifest.write(&a.out)?;
    Ok(if table.all_converged() {
        EXIT_OK
    } else {
        EXIT_NOT_CONVERGED
    })
}

/// Instances per oracle check in `verify`.
pub const VERIFY_INSTANCES: usize = 20;
pub const VERIFY_NEWTON_INSTANCES: usize = 5;
pub const ORACLE_TOL: f64 = 1e-8;
pub const NEWTON_TOL: f64 = 1e-10;

fn cmd_verify(a: &RunArgs) -> Result<i32> {
    let n = a.n.unwrap_or(4);
    if (n - 1).pow(2) > oracle::MAX_ENUMERATION_DIM {
        return Err(invalid(format!("verify needs n <= 4, got {n}")));
    }
    let mesh = Mesh::structured(n)?;
    let rho = 1.0 / (n * n) as f64;
    let opts = SolverOptions {
        c: a.c,
        tol: a.tol,
        max_iter: a.max_iter,
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut ok = true;

    let mut worst = 0.0f64;
    for _ in 0..VERIFY_INSTANCES {
        let (t, lo, up) = oracle::random_state_instance(&mut rng);
        let d = oracle::check_state_instance(&mesh, rho, t.as_ref(), lo.as_ref(), up.as_ref(), &opts)?;
        worst = worst.max(d.state).max(d.multiplier / d.multiplier_scale);
    }
    ok &= report("state oracle", worst, ORACLE_TOL);

    let mut worst = 0.0f64;
    for _ in 0..VERIFY_INSTANCES {
        let (t, lo, up) = oracle::random_control_instance(&mut rng);
        let d = oracle::check_control_instance(&mesh, rho, t.as_ref(), lo.as_ref(), up.as_ref(), &opts)?;
        worst = worst.max(d.state).max(d.multiplier / d.multiplier_scale);
    }
    ok &= report("control oracle", worst, ORACLE_TOL);

    let mut worst = 0.0f64;
    for _ in 0..VERIFY_NEWTON_INSTANCES {
        worst = worst.max(oracle::check_newton_step(&mut rng, &mesh, rho)?);
    }
    ok &= report("newton step", worst, NEWTON_TOL);

    Ok(if ok { EXIT_OK } else { EXIT_INVALID })
}

fn report(name: &str, worst: f64, tol: f64) -> bool {
    let pass = worst <= tol;
    println!(
        "{} {name}: max deviation {} (tol {})",
        if pass { "PASS" } else { "FAIL" },
        output::real(worst),
        output::real(tol)
    );
    pass
}
