use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use exitlab::decomp::{decomposition_probability, mc_integration_check, DecompositionInput, Variant};
use exitlab::empirical::{emit, load_prices, run_pipeline, Artifacts, Cell, Manifest, PipelineConfig, Table};
use exitlab::firstexit::{exit_density_closed, exit_density_numeric, ClosedOptions};
use exitlab::laplace::{exit_density_transform, invert, Method};
use exitlab::levy::ModelParams;
use exitlab::mc::{logreturn_exit_batch, simulate_logreturn, Batch};
use exitlab::{specfun, Error, InversionSettings};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::args::*;
use crate::error::CliError;

type Config = BTreeMap<String, Value>;

/// Where results go: files plus manifest under `--out`, or CSV on stdout.
pub struct Sink<'a> {
    pub out: Option<&'a Path>,
    pub seed: u64,
}

impl Sink<'_> {
    fn finish(&self, command: &str, seeded: bool, config: Config, tables: Vec<Table>) -> Result<(), CliError> {
        match self.out {
            Some(dir) => {
                let manifest = Manifest::new(command, seeded.then_some(self.seed), config);
                let artifacts = Artifacts { tables, ..Default::default() };
                let path = emit(&artifacts, dir, manifest)?;
                log::info!("wrote {}", path.display());
            }
            None => {
                let mut stdout = std::io::stdout().lock();
                for (i, t) in tables.iter().enumerate() {
                    if i > 0 {
                        writeln!(stdout)?;
                    }
                    stdout.write_all(t.to_csv().as_bytes())?;
                }
            }
        }
        Ok(())
    }
}

fn order_or_default(method: Method, order: Option<usize>) -> usize {
    order.unwrap_or_else(|| method.default_order())
}

pub fn density(args: &DensityArgs, sink: &Sink) -> Result<(), CliError> {
    let order = order_or_default(args.method, args.order);
    let opts = ClosedOptions { as_printed: args.as_printed, ..Default::default() };
    let numeric = || exit_density_numeric(&args.spec, args.level, args.grid, args.method, order);
    let mut used = "closed";
    let columns = match args.path {
        DensityPath::Closed => match exit_density_closed(&args.spec, args.level, args.grid, &opts) {
            Ok(c) => vec![c],
            Err(Error::ClosedFormUnavailable(why)) => {
                log::warn!("closed form unavailable ({why}); inverting numerically");
                used = "numeric";
                vec![numeric()?]
            }
            Err(e) => return Err(e.into()),
        },
        DensityPath::Numeric => {
            used = "numeric";
            vec![numeric()?]
        }
        DensityPath::Both => {
            used = "both";
            vec![exit_density_closed(&args.spec, args.level, args.grid, &opts)?, numeric()?]
        }
    };
    let header: &[&str] = if columns.len() == 2 { &["x", "h_closed", "h_numeric"] } else { &["x", "h"] };
    let mut table = Table::new("density", header);
    for (i, x) in args.grid.points().enumerate() {
        let mut row = vec![x.into()];
        row.extend(columns.iter().map(|c| Cell::from(c.values[i])));
        table.push(row);
    }
    let config = Config::from([
        ("spec".into(), json!(args.spec.to_string())),
        ("level".into(), json!(args.level)),
        ("grid".into(), json!(args.grid.to_string())),
        ("path".into(), json!(used)),
        ("as_printed".into(), json!(args.as_printed)),
        ("method".into(), json!(format!("{:?}", args.method))),
        ("order".into(), json!(order)),
    ]);
    sink.finish("density", false, config, vec![table])
}

pub fn invert_cmd(args: &InvertArgs, sink: &Sink) -> Result<(), CliError> {
    args.psi.validate()?;
    let order = order_or_default(args.method, args.order);
    let f = exit_density_transform(args.psi.laplace_exponent().shared(), args.x)?;
    let curve = invert(&f, &InversionSettings::new(args.method, order, args.grid)?)?;
    let mut table = Table::new("invert", &["t", "density"]);
    for (t, v) in curve.grid.points().zip(&curve.values) {
        table.push(vec![t.into(), (*v).into()]);
    }
    let config = Config::from([
        ("psi".into(), json!(args.psi.to_string())),
        ("x".into(), json!(args.x)),
        ("grid".into(), json!(args.grid.to_string())),
        ("method".into(), json!(format!("{:?}", args.method))),
        ("order".into(), json!(order)),
    ]);
    sink.finish("invert", false, config, vec![table])
}

pub fn decompose(args: &DecomposeArgs, sink: &Sink) -> Result<(), CliError> {
    let mut input = match args.variant {
        Variant::Basic => DecompositionInput::basic(args.a, args.b, args.spec),
        Variant::General => {
            let model = ModelParams { mu: args.mu, sigma: args.sigma, rho: args.rho, ..Default::default() };
            DecompositionInput::general(args.a, args.b, model, args.spec)
        }
    };
    input.time_box = args.time_box;
    input.epsilon_window = args.eps_window;
    input.max_panels = args.max_panels;
    let mut result = decomposition_probability(&input)?;
    if let Some(n) = args.mc_check {
        result.mc_check = Some(mc_integration_check(&input, n, sink.seed)?);
    }
    let mut body = serde_json::to_string_pretty(&result)?;
    body.push('\n');
    match sink.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join("decompose.json"), &body)?;
            let mut manifest = Manifest::new("decompose", args.mc_check.map(|_| sink.seed), Config::new());
            manifest.config.insert("input".into(), serde_json::to_value(input)?);
            let mut json = serde_json::to_string_pretty(&manifest)?;
            json.push('\n');
            std::fs::write(dir.join("manifest.json"), json)?;
        }
        None => print!("{body}"),
    }
    Ok(())
}

pub fn simulate(args: &SimulateArgs, sink: &Sink) -> Result<(), CliError> {
    let batch = Batch { paths: args.paths, dt: args.dt, horizon: args.horizon, seed: sink.seed };
    let mut config = Config::from([
        ("model".into(), json!(args.model.to_string())),
        ("spec".into(), json!(args.spec.to_string())),
        ("paths".into(), json!(args.paths)),
        ("dt".into(), json!(args.dt)),
        ("horizon".into(), json!(args.horizon)),
    ]);
    let table = match args.exit_level {
        Some(level) => {
            let dist = logreturn_exit_batch(&args.model, &args.spec, level, args.mode, &batch)?;
            config.insert("exit_level".into(), json!(level));
            config.insert("mode".into(), json!(args.mode));
            config.insert("censored".into(), json!(dist.censored_count));
            log::info!("{} of {} paths censored at the horizon", dist.censored_count, dist.paths());
            let mut t = Table::new("exit_times", &["exit_time"]);
            for x in dist.exit_times {
                t.push(vec![x.into()]);
            }
            t
        }
        None => {
            let rows = (0..args.paths)
                .into_par_iter()
                .map(|i| {
                    let p = simulate_logreturn(&args.model, &args.spec, args.horizon, args.dt, sink.seed, i as u64)?;
                    let (lo, hi) = p.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
                    Ok(vec![i.into(), (*p.values.last().unwrap_or(&0.0)).into(), lo.into(), hi.into()])
                })
                .collect::<Result<Vec<_>, Error>>()?;
            let mut t = Table::new("paths", &["path", "terminal", "min", "max"]);
            rows.into_iter().for_each(|r| t.push(r));
            t
        }
    };
    sink.finish("simulate", true, config, vec![table])
}

pub fn empirical(args: &EmpiricalArgs, sink: &Sink) -> Result<(), CliError> {
    let series = load_prices(&args.prices)?;
    let cfg = PipelineConfig {
        thresholds: args.threshold.clone(),
        mode: args.mode,
        stride: args.stride,
        gamma_lambda: args.estimate_gamma.then_some(args.lambda),
    };
    // the file name only, so that the manifest does not depend on where the data lives
    let name = args.prices.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let (tables, config) = run_pipeline(&series, &name, &cfg)?;
    sink.finish("empirical", false, config, tables)
}

pub fn specfun_eval(args: &SpecfunArgs) -> Result<String, CliError> {
    let xs: Vec<f64> = args
        .args
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| CliError::Usage(format!("argument `{s}` is not a number"))))
        .collect::<Result<_, _>>()?;
    let need = |n: usize| {
        if xs.len() == n {
            Ok(())
        } else {
            Err(CliError::Usage(format!("`{}` takes {n} argument(s), got {}", args.function, xs.len())))
        }
    };
    let v = match args.function.as_str() {
        "erf" => need(1).map(|_| specfun::erf(xs[0]))?,
        "erfc" => need(1).map(|_| specfun::erfc(xs[0]))?,
        "erfcx" => need(1).map(|_| specfun::erfcx(xs[0]))?,
        "norm_cdf" => need(1).map(|_| specfun::norm_cdf(xs[0]))?,
        "gamma" => need(1).map(|_| specfun::gamma(xs[0]))?,
        "ln_gamma" => need(1).map(|_| specfun::ln_gamma(xs[0]))?,
        "gamma_upper" => {
            need(2)?;
            specfun::gamma_upper(xs[0], xs[1])?
        }
        "gamma_p" => need(2).map(|_| specfun::gamma_p(xs[0], xs[1]))?,
        "gamma_q" => need(2).map(|_| specfun::gamma_q(xs[0], xs[1]))?,
        "e1" => {
            need(1)?;
            specfun::exp_integral_e1(xs[0])?
        }
        "i0" => {
            need(1)?;
            specfun::bessel_i0(xs[0])?
        }
        "i0_scaled" => {
            need(1)?;
            specfun::bessel_i0_scaled(xs[0])?
        }
        "i1_scaled" => {
            need(1)?;
            specfun::bessel_i1_scaled(xs[0])?
        }
        "hyp2f1_terminating" => {
            need(3)?;
            if !(xs[0] >= 0.0 && xs[0].fract() == 0.0) {
                return Err(CliError::Usage("the first argument of hyp2f1_terminating is a degree n >= 0".into()));
            }
            specfun::hyp2f1_terminating(xs[0] as u32, xs[1], xs[2])?
        }
        other => return Err(CliError::Usage(format!("unknown function `{other}`"))),
    };
    Ok(exitlab::empirical::fmt17(v))
}
