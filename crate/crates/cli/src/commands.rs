use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use cubedc::dac::{
    aggregate, partition, run_groups, truncation_diagnostic, AggregateReport, GroupEstimate,
    SliceSource, TruncationConfig,
};
use cubedc::estimators::{LocationEstimator, MEstimator, MaxScoreEstimator, ValueSearchEstimator};
use cubedc::harness::{
    rate_vs_group_count, rate_vs_group_size, read_table, run_cell, write_table, MonteCarloTable,
    RateReport,
};
use cubedc::limitproc::{estimate_limit_variance, location_limit_spec, simulate_argmax};
use cubedc::simgen::{Example, SimulationDesign};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::input::{read_location, read_maxscore, read_valuesearch};
use crate::{CliError, EstimateArgs, LimitVarArgs, RateCheckArgs, SimulateArgs, TableArgs};

/// Largest `log2 N` accepted without `--extended`.
const MAX_DEFAULT_N_EXP: u32 = 22;
const MAX_N_EXP: u32 = 40;

fn check_level(level: f64) -> Result<(), CliError> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "--level must lie in (0, 1), got {level}"
        )))
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", path.display())))
}

fn write_failed(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("cannot write {}: {e}", path.display()))
}

fn save_table(table: &MonteCarloTable, path: Option<&Path>) -> Result<(), CliError> {
    if let Some(path) = path {
        write_table(table, create(path)?).map_err(|e| write_failed(path, e))?;
    }
    Ok(())
}

pub fn estimate(args: &EstimateArgs) -> Result<(), CliError> {
    check_level(args.level)?;
    if args.groups < 2 && !args.no_se {
        return Err(CliError::Usage(format!(
            "{} (use --no-se for S = 1)",
            cubedc::Error::TooFewGroups
        )));
    }
    match args.example {
        Example::Location => estimate_with(&LocationEstimator, read_location(&args.input)?, args),
        Example::MaxScore => estimate_with(
            &MaxScoreEstimator::new(2),
            read_maxscore(&args.input)?,
            args,
        ),
        Example::ValueSearch => estimate_with(
            &ValueSearchEstimator::default(),
            read_valuesearch(&args.input)?,
            args,
        ),
    }
}

fn estimate_with<E>(
    estimator: &E,
    mut data: Vec<E::Sample>,
    args: &EstimateArgs,
) -> Result<(), CliError>
where
    E: MEstimator,
    E::Sample: Clone,
{
    let parts = partition(data.len(), args.groups).map_err(|e| CliError::Usage(e.to_string()))?;
    if let Some(w) = parts.warning() {
        eprintln!("warning: {w}");
    }
    if let Some(seed) = args.shuffle {
        data.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    let n = parts.group_size();
    let groups = run_groups(&SliceSource::new(&data), estimator, args.groups, n)?;
    print_groups(&groups);
    let config = TruncationConfig::default();
    let report = if args.no_se {
        let theta0 = aggregate(&groups)?;
        let (delta_n, exceed) = truncation_diagnostic(
            &groups,
            n,
            &TruncationConfig {
                center: Some(theta0.clone()),
                ..config
            },
        )?;
        println!("theta0   {}", join(&theta0));
        println!(
            "delta_n  {delta_n:.6}  groups beyond: {exceed} of {}",
            groups.len()
        );
        Report {
            theta0,
            se: None,
            ci: None,
            delta_n,
            exceed,
        }
    } else {
        let r = AggregateReport::from_estimates(&groups, n, args.level, &config)?;
        println!("theta0   {}", join(&r.theta0));
        println!("se       {}", join(&r.se));
        for (k, (lo, hi)) in r.ci.iter().enumerate() {
            println!(
                "ci[{}]    [{lo:.6}, {hi:.6}] at level {}",
                k + 1,
                args.level
            );
        }
        println!(
            "delta_n  {:.6}  groups beyond: {} of {}",
            r.delta_n,
            r.truncation_exceed_count,
            groups.len()
        );
        Report {
            theta0: r.theta0,
            se: Some(r.se),
            ci: Some(r.ci),
            delta_n: r.delta_n,
            exceed: r.truncation_exceed_count,
        }
    };
    if let Some(path) = &args.output {
        report
            .write(path, args.level, args.groups, n)
            .map_err(|e| write_failed(path, e))?;
    }
    Ok(())
}

struct Report {
    theta0: Vec<f64>,
    se: Option<Vec<f64>>,
    ci: Option<Vec<(f64, f64)>>,
    delta_n: f64,
    exceed: usize,
}

impl Report {
    fn write(
        &self,
        path: &Path,
        level: f64,
        groups: usize,
        n: usize,
    ) -> Result<(), Box<dyn std::error::Error>> {
        let mut w = csv::Writer::from_writer(create(path)?);
        w.write_record([
            "coord",
            "theta0",
            "se",
            "ci_lo",
            "ci_hi",
            "level",
            "S",
            "n",
            "delta_n",
            "truncation_exceed",
        ])?;
        let f = |x: f64| format!("{x:.16e}");
        for (k, t) in self.theta0.iter().enumerate() {
            let se = self.se.as_ref().map(|s| f(s[k])).unwrap_or_default();
            let (lo, hi) = self
                .ci
                .as_ref()
                .map(|c| (f(c[k].0), f(c[k].1)))
                .unwrap_or_default();
            w.write_record([
                (k + 1).to_string(),
                f(*t),
                se,
                lo,
                hi,
                level.to_string(),
                groups.to_string(),
                n.to_string(),
                f(self.delta_n),
                self.exceed.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v:.6}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn print_groups(groups: &[GroupEstimate]) {
    println!("{:>6} {:>8}  theta", "group", "n");
    for g in groups {
        println!(
            "{:>6} {:>8}  {}",
            g.group_index + 1,
            g.group_size,
            join(&g.theta)
        );
    }
}

fn check_sizes(n_exp: u32, s_exp: u32, extended: bool) -> Result<(), CliError> {
    if n_exp > MAX_N_EXP {
        return Err(CliError::Usage(format!("--n-exp {n_exp} is too large")));
    }
    if n_exp > MAX_DEFAULT_N_EXP && !extended {
        return Err(CliError::Usage(format!(
            "N = 2^{n_exp} exceeds 2^{MAX_DEFAULT_N_EXP}; pass --extended to run it"
        )));
    }
    if s_exp == 0 {
        return Err(CliError::Usage(
            "need at least two groups (--s-exp >= 1)".into(),
        ));
    }
    if s_exp > n_exp {
        return Err(CliError::Usage(format!(
            "S = 2^{s_exp} exceeds N = 2^{n_exp}"
        )));
    }
    Ok(())
}

pub fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    check_level(args.level)?;
    check_sizes(args.n_exp, args.s_exp, args.extended)?;
    let mut design = SimulationDesign::new(
        args.example,
        1 << args.n_exp,
        1 << args.s_exp,
        args.reps,
        args.seed,
    );
    design.ci_level = args.level;
    design
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let mut table = run_cell(&design, &args.example.truth(), args.pooled)?.table;
    if args.no_timing {
        table = table.without_runtime();
    }
    print!("{table}");
    save_table(&table, args.output.as_deref())
}

fn print_rate(r: &RateReport) {
    println!(
        "{:?}: grid {:?} slope {:.4} r2 {:.4}",
        r.axis, r.grid, r.slope, r.r2
    );
}

pub fn rate_check(args: &RateCheckArgs) -> Result<(), CliError> {
    let (table, reports) = match (args.s_exp, args.n_exp) {
        (Some(s_exp), None) => {
            for &n_exp in &args.n_exps {
                check_sizes(n_exp + s_exp, s_exp, args.extended)?;
            }
            let n_grid: Vec<usize> = args.n_exps.iter().map(|e| 1usize << e).collect();
            let (agg, pooled) = rate_vs_group_size(
                args.example,
                1 << s_exp,
                &n_grid,
                args.reps,
                args.seed,
                args.pooled,
            )
            .map_err(usage_if_invalid)?;
            (
                agg.table.clone(),
                std::iter::once(agg).chain(pooled).collect::<Vec<_>>(),
            )
        }
        (None, Some(n_exp)) => {
            if args.pooled {
                return Err(CliError::Usage(
                    "--pooled needs the --s-exp/--n-exps form".into(),
                ));
            }
            for &s_exp in &args.s_exps {
                check_sizes(n_exp + s_exp, s_exp, args.extended)?;
            }
            let s_grid: Vec<usize> = args.s_exps.iter().map(|e| 1usize << e).collect();
            let r = rate_vs_group_count(args.example, 1 << n_exp, &s_grid, args.reps, args.seed)
                .map_err(usage_if_invalid)?;
            (r.table.clone(), vec![r])
        }
        _ => {
            return Err(CliError::Usage(
                "give either --s-exp with --n-exps or --n-exp with --s-exps".into(),
            ))
        }
    };
    let table = if args.no_timing {
        table.without_runtime()
    } else {
        table
    };
    print!("{table}");
    reports.iter().for_each(print_rate);
    save_table(&table, args.output.as_deref())
}

fn usage_if_invalid(e: cubedc::Error) -> CliError {
    match e {
        cubedc::Error::InvalidArgument(m) => CliError::Usage(m),
        other => CliError::Numeric(other),
    }
}

pub fn limit_var(args: &LimitVarArgs) -> Result<(), CliError> {
    let mut spec = location_limit_spec();
    spec.reps = args.reps;
    spec.step = args.step;
    spec.half_width = args.half_width;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    spec.validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let samples = simulate_argmax(&spec)?;
    let v = estimate_limit_variance(&samples).map_err(usage_if_invalid)?;
    println!(
        "sigma2 {:.6}  V {:.6}  T {}  step {}  reps {}",
        spec.sigma2, spec.curvature, spec.half_width, spec.step, spec.reps
    );
    println!("A = {:.6} (MC s.e. {:.6})", v.variance, v.mc_se);
    if let Some(path) = &args.output {
        let write = || -> Result<(), Box<dyn std::error::Error>> {
            let mut w = csv::Writer::from_writer(create(path)?);
            w.write_record([
                "sigma2",
                "curvature",
                "half_width",
                "step",
                "reps",
                "variance",
                "mc_se",
            ])?;
            let f = |x: f64| format!("{x:.16e}");
            w.write_record([
                f(spec.sigma2),
                f(spec.curvature),
                f(spec.half_width),
                f(spec.step),
                spec.reps.to_string(),
                f(v.variance),
                f(v.mc_se),
            ])?;
            w.flush()?;
            Ok(())
        };
        write().map_err(|e| write_failed(path, e))?;
    }
    Ok(())
}

pub fn table(args: &TableArgs) -> Result<(), CliError> {
    let file = File::open(&args.input)
        .map_err(|e| CliError::Input(format!("cannot open {}: {e}", args.input.display())))?;
    let table =
        read_table(file).map_err(|e| CliError::Input(format!("{}: {e}", args.input.display())))?;
    let mut out = io::stdout().lock();
    write!(out, "{table}").map_err(|e| CliError::Usage(e.to_string()))
}
