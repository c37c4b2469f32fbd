use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use hivoc::dde::{fmt_full, integrate_horizon, DEFAULT_INTERVALS};
use hivoc::model::residual;
use hivoc::optimal::{
    sensitivities_with, solve_grid, solve_iop_with, verify_pmp, write_phi_csv, GridOptions,
    GridStatus, IopOptions, OptimumReport, SensitivityOptions,
};
use hivoc::stability::{classify, StabilityReport};
use hivoc::{ControlSchedule, Equilibrium, Error, State};

use crate::config::RunConfig;
use crate::{Common, Failure, Method};

fn load(common: &Common) -> Result<RunConfig, Failure> {
    RunConfig::load_or_default(common.config.as_deref())?.resolve(common.case, common.w)
}

/// Maps library errors: bad inputs are configuration failures, anything
/// else gets `runtime`.
fn classify_error(e: Error, runtime: u8) -> Failure {
    match e {
        Error::InvalidParams { .. }
        | Error::StepIncompatible { .. }
        | Error::GridMismatch { .. }
        | Error::EquilibriumAbsent(_) => Failure::config(e),
        other => Failure {
            code: runtime,
            message: other.to_string(),
        },
    }
}

struct Sink {
    dir: PathBuf,
}

impl Sink {
    fn new(dir: Option<&Path>) -> Result<Self, Failure> {
        let dir = dir.map_or_else(|| PathBuf::from("."), Path::to_path_buf);
        fs::create_dir_all(&dir)
            .map_err(|e| Failure::io(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self { dir })
    }

    fn write(
        &self,
        name: &str,
        body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    ) -> Result<(), Failure> {
        let path = self.dir.join(name);
        let fail = |e: std::io::Error| Failure::io(format!("cannot write {}: {e}", path.display()));
        let mut out = BufWriter::new(File::create(&path).map_err(fail)?);
        body(&mut out).and_then(|_| out.flush()).map_err(fail)?;
        println!("{}", path.display());
        Ok(())
    }

    fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), Failure> {
        self.write(name, |out| {
            serde_json::to_writer_pretty(&mut *out, value)?;
            writeln!(out)
        })
    }
}

/// JSON to stdout, or to `<out>/<name>` with its path on stdout.
fn emit_json<T: Serialize>(common: &Common, name: &str, value: &T) -> Result<(), Failure> {
    match &common.out {
        Some(dir) => Sink::new(Some(dir))?.json(name, value),
        None => {
            let text = serde_json::to_string_pretty(value).map_err(Failure::io)?;
            println!("{text}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct EquilibriumEntry {
    name: Equilibrium,
    state: State,
    residual: f64,
}

#[derive(Serialize)]
struct EquilibriaReport {
    #[serde(rename = "R0")]
    r0: f64,
    #[serde(rename = "R1")]
    r1: f64,
    equilibria: Vec<EquilibriumEntry>,
}

pub fn equilibria(common: &Common) -> Result<(), Failure> {
    let cfg = load(common)?;
    let eq = hivoc::equilibria(&cfg.params);
    let report = EquilibriaReport {
        r0: eq.r0,
        r1: eq.r1,
        equilibria: eq
            .present()
            .into_iter()
            .map(|(name, state)| EquilibriumEntry {
                name,
                state,
                residual: residual(state, &cfg.params),
            })
            .collect(),
    };
    emit_json(common, "equilibria.json", &report)
}

#[derive(Serialize)]
struct StabilityOutput {
    #[serde(rename = "R0")]
    r0: f64,
    #[serde(rename = "R1")]
    r1: f64,
    reports: Vec<StabilityReport>,
}

pub fn stability(common: &Common) -> Result<(), Failure> {
    let cfg = load(common)?;
    let eq = hivoc::equilibria(&cfg.params);
    let output = StabilityOutput {
        r0: eq.r0,
        r1: eq.r1,
        reports: classify(&cfg.params),
    };
    emit_json(common, "stability.json", &output)
}

/// Parses `off`, `const:<c>`, `bang:<t_s>` or `file:<path>`. File controls
/// also return their grid spacing.
fn parse_control(spec: &str, c_hist: f64) -> Result<(ControlSchedule, Option<f64>), Failure> {
    let number = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| Failure::config(format!("bad number `{s}` in control `{spec}`")))
    };
    let control = match spec.split_once(':') {
        None if spec == "off" => return Ok((ControlSchedule::off().with_history(c_hist), None)),
        Some(("const", c)) => ControlSchedule::constant(number(c)?),
        Some(("bang", t)) => ControlSchedule::bang_bang(number(t)?),
        Some(("file", path)) => {
            let (schedule, step) = read_control_csv(Path::new(path))?;
            return Ok((schedule.with_history(c_hist), Some(step)));
        }
        _ => {
            return Err(Failure::config(format!(
                "unknown control `{spec}`; expected off, const:<c>, bang:<t_s> or file:<path>"
            )))
        }
    };
    let control = control.with_history(c_hist);
    control.validate().map_err(Failure::config)?;
    Ok((control, None))
}

/// Reads a uniform grid control from a CSV with `t` and `c` columns.
fn read_control_csv(path: &Path) -> Result<(ControlSchedule, f64), Failure> {
    let bad = |msg: String| Failure::config(format!("{}: {msg}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let headers = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| bad(format!("missing `{name}` column")))
    };
    let (ti, ci) = (col("t")?, col("c")?);
    let mut t = Vec::new();
    let mut c = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let field = |k: usize| -> Result<f64, Failure> {
            record
                .get(k)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| bad(format!("row {}: not a number", row + 2)))
        };
        t.push(field(ti)?);
        c.push(field(ci)?);
    }
    if t.len() < 2 {
        return Err(bad("need at least two rows".into()));
    }
    let step = t[1] - t[0];
    let uniform = t
        .iter()
        .enumerate()
        .all(|(i, &ti)| (ti - i as f64 * step).abs() <= 1e-9 * step.max(1.0) * (i as f64 + 1.0));
    if !(step > 0.0 && uniform && t[0] == 0.0) {
        return Err(bad("times must start at 0 on a uniform grid".into()));
    }
    let schedule = ControlSchedule::grid(step, c);
    schedule.validate().map_err(|e| bad(e.to_string()))?;
    Ok((schedule, step))
}

pub fn simulate(
    common: &Common,
    horizon: Option<f64>,
    control: &str,
    paired: bool,
    step: Option<f64>,
) -> Result<(), Failure> {
    let cfg = load(common)?;
    let (schedule, file_step) = parse_control(control, cfg.init.c_hist)?;
    let step = step.or(cfg.step).or(file_step).unwrap_or_else(|| {
        cfg.params.t_f / cfg.grid_n.unwrap_or(DEFAULT_INTERVALS) as f64
    });
    let horizon = horizon.or(cfg.horizon).unwrap_or(cfg.params.t_f);
    let sink = Sink::new(common.out.as_deref())?;

    let runs: Vec<(String, hivoc::ModelParams)> = if paired {
        [0.0, 0.5]
            .iter()
            .map(|&tau| {
                let mut p = cfg.params;
                p.tau = tau;
                (format!("trajectory_tau{tau}.csv"), p)
            })
            .collect()
    } else {
        vec![("trajectory.csv".to_string(), cfg.params)]
    };
    for (name, params) in runs {
        let traj = integrate_horizon(&params, &cfg.init, &schedule, step, horizon)
            .map_err(|e| classify_error(e, Failure::INTEGRATION))?;
        sink.write(&name, |out| traj.write_csv(out))?;
    }
    Ok(())
}

pub fn optimize(common: &Common, method: Method, grid_n: Option<usize>) -> Result<(), Failure> {
    let cfg = load(common)?;
    let p = cfg.params;
    let intervals = grid_n.or(cfg.grid_n).unwrap_or(DEFAULT_INTERVALS);
    let solver = |e| classify_error(e, Failure::SOLVER);

    let (optimum, control, converged) = match method {
        Method::Iop => {
            let opts = IopOptions {
                intervals,
                ..IopOptions::default()
            };
            let o = solve_iop_with(&p, &cfg.init, &opts).map_err(solver)?;
            let c = ControlSchedule::bang_bang(o.t_s).with_history(cfg.init.c_hist);
            (o, c, true)
        }
        Method::Grid => {
            let opts = GridOptions {
                intervals,
                ..GridOptions::default()
            };
            let sol = solve_grid(&p, &cfg.init, &opts).map_err(solver)?;
            let ok = sol.status == GridStatus::Converged;
            (sol.optimum, sol.control, ok)
        }
    };
    let pmp = verify_pmp(&control, &optimum.phi, optimum.step);
    let report = OptimumReport::new(cfg.case_label(), &p, &optimum, &pmp);

    let sink = Sink::new(common.out.as_deref())?;
    sink.json("optimum.json", &report)?;
    sink.write("phi.csv", |out| write_phi_csv(out, &optimum.phi, &control, optimum.step))?;
    let traj = hivoc::integrate(&p, &cfg.init, &control, optimum.step).map_err(solver)?;
    sink.write("trajectory.csv", |out| traj.write_csv(out))?;

    if pmp.violations > 0 {
        return Err(Failure {
            code: Failure::SOLVER,
            message: format!("control law violated at {} nodes", pmp.violations),
        });
    }
    if !converged {
        return Err(Failure {
            code: Failure::SOLVER,
            message: "grid solver did not converge; best iterate written".into(),
        });
    }
    Ok(())
}

pub fn sensitivity(
    common: &Common,
    vary: &[String],
    grid_n: Option<usize>,
    control: Option<&str>,
) -> Result<(), Failure> {
    let cfg = load(common)?;
    for name in vary {
        if cfg.params.get(name).is_none() {
            return Err(Failure::config(format!(
                "unknown parameter `{name}`; expected one of {:?}",
                hivoc::ModelParams::FIELDS
            )));
        }
    }
    let mut opts = SensitivityOptions::default();
    if let Some(n) = grid_n.or(cfg.grid_n) {
        opts.iop.intervals = n;
    }
    if let Some(spec) = control {
        opts.fixed_control = Some(parse_control(spec, cfg.init.c_hist)?.0);
    }
    let targets: Vec<&str> = vary.iter().map(String::as_str).collect();
    let table = sensitivities_with(&cfg.params, &cfg.init, &targets, &opts)
        .map_err(|e| classify_error(e, Failure::SOLVER))?;

    let sink = Sink::new(common.out.as_deref())?;
    sink.write("sensitivity.csv", |out| {
        writeln!(out, "parameter,nominal,dt_s,dJ,dZ,dI,dV")?;
        for r in &table.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.parameter,
                fmt_full(r.nominal),
                fmt_full(r.dts),
                fmt_full(r.dj),
                fmt_full(r.dz),
                fmt_full(r.di),
                fmt_full(r.dv)
            )?;
        }
        Ok(())
    })
}
