//! Command-line front end: load a configuration, run the selected
//! experiment, write the report and series files.
//!
//! Exit codes: 0 all checks pass, 1 a check failed or the numerics broke
//! down, 2 configuration problem, 3 could not read or write an artifact.
//! Reports are byte-identical across runs with the same configuration and
//! seed; progress and warnings go to stderr so stdout stays scriptable.

use crate::config::{parse_config, RunConfig, Theory};
use crate::lattice::ScalarField;
use crate::presym::{demo_regular, demo_two_step, pca_run, PcaOptions};
use crate::psigma::{
    boundary_hamiltonian as psm_hamiltonian, constraint_psi, psm_step, solve_constraint_momentum,
    PsmState,
};
use crate::report::{write_csv, CheckRecord, RunReport};
use crate::scalar::{boundary_step, cfl_number, energy, ScalarState};
use crate::verify::{self, smooth_covector};
use crate::yangmills::{
    cfl_margin, curvature, gauss_project, gauss_residual, ym_energy, ym_step, YmState,
};
use crate::{Error, Result};
use clap::{Args, Parser, Subcommand};
use std::fs;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "collar",
    version,
    about = "Boundary dynamics, constraint chains and certificates on periodic lattices"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; module defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for the report and series files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for random probes, overriding the configuration.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the hand-sized constraint-chain demonstrations.
    Pca(Common),
    /// Evolve the scalar boundary system and monitor its energy.
    Scalar(Common),
    /// Evolve the sigma-model boundary system and monitor the constraint.
    Psm(Common),
    /// Evolve the gauge boundary system and monitor energy and Gauss law.
    Ym(Common),
    /// Run the certification suite.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Run only criteria whose group name contains this string.
        #[arg(long)]
        check: Option<String>,
    },
}

pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    let outcome = match cli.cmd {
        Cmd::Pca(c) => load(&c, Theory::PcaDemo).and_then(run_pca),
        Cmd::Scalar(c) => load(&c, Theory::Scalar).and_then(run_scalar),
        Cmd::Psm(c) => load(&c, Theory::Psigma).and_then(run_psm),
        Cmd::Ym(c) => load(&c, Theory::Yangmills).and_then(run_ym),
        Cmd::Verify { common, check } => {
            load(&common, Theory::VerifyAll).and_then(|cfg| run_verify(cfg, check.as_deref()))
        }
    };
    match outcome {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("{e}");
            match e {
                Error::Config(_) => 2,
                Error::Numerical(_) => 1,
                Error::Io(_) | Error::Serialize(_) => 3,
            }
        }
    }
}

fn load(common: &Common, theory: Theory) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                Error::Io(std::io::Error::new(
                    e.kind(),
                    format!("{}: {e}", path.display()),
                ))
            })?;
            let cfg = parse_config(&text)?;
            if cfg.theory != theory {
                return Err(Error::Config(format!(
                    "configuration selects theory \"{}\" but this subcommand runs \"{}\"",
                    cfg.theory.name(),
                    theory.name()
                )));
            }
            cfg
        }
        None => RunConfig::defaults(theory),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.output_dir = Some(out.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(cfg: &RunConfig) -> PathBuf {
    cfg.output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("collar-out"))
}

/// Echo of the run semantics. The output directory is stripped so the
/// report bytes depend only on configuration, seed and build.
fn semantic_echo(cfg: &RunConfig) -> Result<String> {
    let mut c = cfg.clone();
    c.output_dir = None;
    c.echo()
}

fn finish(mut report: RunReport, dir: &PathBuf, name: &str, t0: std::time::Instant) -> Result<bool> {
    report.wall_clock_seconds = t0.elapsed().as_secs_f64();
    let path = report.write(dir, name)?;
    for c in &report.checks {
        println!(
            "{} {} = {:.6e} (tolerance {:.1e})",
            if c.pass { "[PASS]" } else { "[FAIL]" },
            c.name,
            c.value,
            c.tolerance
        );
    }
    println!(
        "{}: {} checks, report {}",
        if report.overall_pass { "PASS" } else { "FAIL" },
        report.checks.len(),
        path.display()
    );
    eprintln!("wall clock: {:.2}s", report.wall_clock_seconds);
    Ok(report.overall_pass)
}

fn run_pca(cfg: RunConfig) -> Result<bool> {
    let t0 = std::time::Instant::now();
    let dir = out_dir(&cfg);
    let mut report = RunReport::new(cfg.theory.name(), cfg.seed, semantic_echo(&cfg)?);
    report.extend(verify::pca_chains(cfg.seed)?);

    fs::create_dir_all(&dir)?;
    for (file, chain) in [
        ("pca_regular", {
            let (sys, witness) = demo_regular();
            pca_run(&sys, &witness, &PcaOptions::default())?
        }),
        ("pca_two_step", {
            let (sys, witness) = demo_two_step();
            pca_run(&sys, &witness, &PcaOptions::default())?
        }),
    ] {
        let json =
            serde_json::to_string_pretty(&chain).map_err(|e| Error::Serialize(e.to_string()))?;
        fs::write(dir.join(format!("{file}.json")), json + "\n")?;
        report.series.push(format!("{file}.json"));
    }
    finish(report, &dir, "pca_demo", t0)
}

fn run_scalar(cfg: RunConfig) -> Result<bool> {
    let t0 = std::time::Instant::now();
    let grid = cfg.grid.build()?;
    let pot = cfg.scalar.potential_spec()?;
    let n = grid.site_count();
    if 2 * cfg.scalar.mode >= grid.shape[0] {
        return Err(Error::Config(format!(
            "scalar.mode = {} is not resolvable on {} sites",
            cfg.scalar.mode, grid.shape[0]
        )));
    }
    let length = grid.shape[0] as f64 * grid.spacing[0];
    let k = 2.0 * std::f64::consts::PI * cfg.scalar.mode as f64 / length;
    let amp = cfg.scalar.amplitude;
    let mut st = ScalarState {
        phi: ScalarField::from_fn(&grid, 1, |x, _| amp * (k * x[0]).sin()),
        p: ScalarField::zeros(&grid, 1),
    };

    let cfl = cfl_number(&grid, cfg.collar.dt);
    if cfl > 1.0 {
        eprintln!("warning: CFL number {cfl:.3} exceeds 1; the step is unstable");
    }

    let e0 = energy(&grid, &pot, &st);
    let mut energy_rows = vec![vec![0.0, e0]];
    let mut trajectory = Vec::with_capacity((cfg.collar.steps + 1) * n);
    let record = |rows: &mut Vec<Vec<f64>>, t: f64, st: &ScalarState| {
        for s in 0..n {
            rows.push(vec![t, s as f64, st.phi.at(s, 0), st.p.at(s, 0)]);
        }
    };
    record(&mut trajectory, 0.0, &st);
    let mut drift = 0.0f64;
    for i in 0..cfg.collar.steps {
        st = boundary_step(&grid, &pot, &st, cfg.collar.dt)?;
        let t = (i + 1) as f64 * cfg.collar.dt;
        let e = energy(&grid, &pot, &st);
        drift = drift.max((e - e0).abs());
        energy_rows.push(vec![t, e]);
        record(&mut trajectory, t, &st);
    }

    let dir = out_dir(&cfg);
    let mut report = RunReport::new(cfg.theory.name(), cfg.seed, semantic_echo(&cfg)?);
    report.push(CheckRecord::measured("scalar.cfl_number", cfl, 1.0));
    report.push(CheckRecord::measured(
        "scalar.energy_drift",
        drift / (1.0 + e0.abs()),
        cfg.tolerance("energy_drift", 1e-3),
    ));
    write_csv(&dir, "scalar_trajectory", &["t", "site", "phi", "p"], &trajectory)?;
    report.series.push("scalar_trajectory.csv".into());
    write_csv(&dir, "scalar_energy", &["t", "energy"], &energy_rows)?;
    report.series.push("scalar_energy.csv".into());
    finish(report, &dir, "scalar", t0)
}

fn run_psm(cfg: RunConfig) -> Result<bool> {
    let t0 = std::time::Instant::now();
    let grid = cfg.grid.build()?;
    let ps = cfg.psigma.poisson_structure()?;
    let r = ps.target_dim();
    let length = grid.shape[0] as f64 * grid.spacing[0];
    let k = 2.0 * std::f64::consts::PI / length;

    // Built-in smooth target maps. For the Lie-Poisson structure a great
    // circle traversed at constant rate: phi . D phi vanishes identically
    // even at finite spacing, so the sitewise momentum solve is exact and
    // the run starts on the constraint surface to roundoff.
    let phi = if r == 3 {
        ScalarField::from_fn(&grid, r, |x, c| match c {
            0 => (k * x[0]).cos(),
            1 => (k * x[0]).sin(),
            _ => 0.0,
        })
    } else {
        ScalarField::from_fn(&grid, r, |x, c| {
            if c == 0 {
                (k * x[0]).sin()
            } else {
                0.5 * (k * x[0]).cos()
            }
        })
    };
    let (p, leftover) = solve_constraint_momentum(&grid, &ps, &phi)?;
    let mut st = PsmState { phi, p };

    let bamp = cfg.psigma.beta_amplitude;
    let beta = match cfg.psigma.beta_profile.as_str() {
        "zero" => ScalarField::zeros(&grid, r),
        "constant" => ScalarField::from_fn(&grid, r, |_x, _c| bamp),
        _ => ScalarField::from_fn(&grid, r, |x, c| bamp * (k * x[0] + 0.3 * c as f64).cos()),
    };

    let h0 = psm_hamiltonian(&grid, &ps, &st.phi, &st.p, &beta)?;
    let worst_psi = |st: &PsmState| -> Result<f64> {
        let psi = constraint_psi(&grid, &ps, &st.phi, &st.p)?;
        Ok(psi.data.iter().fold(0.0f64, |m, v| m.max(v.abs())))
    };
    let mut rows = vec![vec![0.0, worst_psi(&st)?, h0]];
    for i in 0..cfg.collar.steps {
        st = psm_step(&grid, &ps, &st, &beta, cfg.collar.dt)?;
        let t = (i + 1) as f64 * cfg.collar.dt;
        rows.push(vec![
            t,
            worst_psi(&st)?,
            psm_hamiltonian(&grid, &ps, &st.phi, &st.p, &beta)?,
        ]);
    }
    let final_psi = rows.last().map_or(0.0, |r| r[1]);

    let dir = out_dir(&cfg);
    let mut report = RunReport::new(cfg.theory.name(), cfg.seed, semantic_echo(&cfg)?);
    report.push(CheckRecord::measured("psm.initial_constraint", leftover, 1e-10));
    report.push(CheckRecord::measured(
        "psm.initial_hamiltonian",
        h0.abs(),
        1e-10,
    ));
    report.push(CheckRecord::measured(
        "psm.constraint_drift",
        final_psi,
        cfg.tolerance("constraint_drift", 0.05),
    ));
    write_csv(&dir, "psm_series", &["t", "constraint", "hamiltonian"], &rows)?;
    report.series.push("psm_series.csv".into());
    finish(report, &dir, "psm", t0)
}

fn run_ym(cfg: RunConfig) -> Result<bool> {
    let t0 = std::time::Instant::now();
    let grid = cfg.grid.build()?;
    let alg = cfg.yangmills.lie_algebra()?;
    let g = alg.dim;
    let amp = cfg.yangmills.amplitude;
    let mut st = YmState::zeros(&grid, &alg);
    st.a = smooth_covector(&grid, g, cfg.seed, "run-a", amp);
    let p_raw = smooth_covector(&grid, g, cfg.seed, "run-p", amp);
    st.p = if cfg.yangmills.project_gauss {
        gauss_project(&grid, &alg, &st.a, &p_raw)?
    } else {
        p_raw
    };
    let a0amp = cfg.yangmills.a0_amplitude;
    st.a0 = match cfg.yangmills.a0_profile.as_str() {
        "zero" => ScalarField::zeros(&grid, g),
        "constant" => ScalarField::from_fn(&grid, g, |_x, c| {
            if c == g - 1 {
                a0amp
            } else {
                0.0
            }
        }),
        _ => ScalarField::from_fn(&grid, g, |x, c| {
            if c == g - 1 {
                a0amp * (x[0] + x[1]).cos()
            } else {
                0.0
            }
        }),
    };
    st.beta = curvature(&grid, &alg, &st.a);
    for b in st.beta.data.iter_mut() {
        *b *= -2.0;
    }

    let margin = cfl_margin(&grid, cfg.collar.dt);
    if margin > 1.0 {
        eprintln!("warning: dt / h = {margin:.3} exceeds the advection margin; expect instability");
    }

    let e0 = ym_energy(&grid, &alg, &st)?;
    let (_, g0) = gauss_residual(&grid, &alg, &st)?;
    let mut rows = vec![vec![0.0, e0, g0]];
    let mut drift = 0.0f64;
    for i in 0..cfg.collar.steps {
        st = ym_step(&grid, &alg, &st, cfg.collar.dt)?;
        let t = (i + 1) as f64 * cfg.collar.dt;
        let e = ym_energy(&grid, &alg, &st)?;
        let (_, gres) = gauss_residual(&grid, &alg, &st)?;
        drift = drift.max((e - e0).abs());
        rows.push(vec![t, e, gres]);
    }
    let final_gauss = rows.last().map_or(0.0, |r| r[2]);

    let dir = out_dir(&cfg);
    let mut report = RunReport::new(cfg.theory.name(), cfg.seed, semantic_echo(&cfg)?);
    report.push(CheckRecord::measured("ym.cfl_margin", margin, 1.0));
    report.push(CheckRecord::measured(
        "ym.energy_drift",
        drift / (1.0 + e0.abs()),
        cfg.tolerance("energy_drift", 1e-3),
    ));
    // For su(2) the residual drifts at the O(h^2) discretization scale, so
    // this budget guards against instability rather than asserting
    // convergence; the certification suite measures the refinement order.
    report.push(CheckRecord::measured(
        "ym.gauss_drift",
        (final_gauss - g0).abs(),
        cfg.tolerance("gauss_drift", 0.25),
    ));
    write_csv(&dir, "ym_series", &["t", "energy", "gauss_residual"], &rows)?;
    report.series.push("ym_series.csv".into());
    for (name, field) in [("ym_a", &st.a), ("ym_p", &st.p)] {
        let mut snapshot = Vec::with_capacity(field.data.len());
        for s in 0..grid.site_count() {
            for k in 0..grid.dim {
                for c in 0..g {
                    snapshot.push(vec![s as f64, k as f64, c as f64, field.at(s, k, c)]);
                }
            }
        }
        write_csv(&dir, name, &["site", "direction", "algebra", "value"], &snapshot)?;
        report.series.push(format!("{name}.csv"));
    }
    finish(report, &dir, "ym", t0)
}

fn run_verify(cfg: RunConfig, check: Option<&str>) -> Result<bool> {
    let t0 = std::time::Instant::now();
    if let Some(flt) = check {
        if !verify::CRITERIA.iter().any(|(name, _)| name.contains(flt)) {
            return Err(Error::Config(format!(
                "--check \"{flt}\" selects no criterion; known groups: {}",
                verify::CRITERIA
                    .iter()
                    .map(|(name, _)| *name)
                    .collect::<Vec<_>>()
                    .join(", ")
            )));
        }
    }
    let mut report = verify::run_all(cfg.seed, check)?;
    report.config_echo = semantic_echo(&cfg)?;
    let dir = out_dir(&cfg);
    finish(report, &dir, "verify", t0)
}
