//! Subcommand implementations. Every command writes CSV files into an
//! output directory and prints a short summary; all output is built
//! deterministically so identical inputs give byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use clap::ValueEnum;

use floodopt_core::{
    annual_stats, combined_annual_benefit, estimate_abm, expected_damage, fit_mle,
    mc_project_value, option_value_single, parse_gauge_csv, premium, project_value, select_pathway,
    Error, LatticeSpec, ProtectionState, Result, ValuationResult,
};

use crate::scenario::Scenario;

/// Money in $B, two decimals as reported in the tables.
fn money(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x < 0.0 { "-inf".into() } else { "inf".into() };
    }
    let s = format!("{x:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

fn fmt_t(t: f64) -> String {
    format!("{t:.4}")
}

/// Shortest-roundtrip float text, so emitted sweep values re-parse exactly.
fn fmt_value(v: f64) -> String {
    format!("{v}")
}

fn sanitize(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect()
}

fn write_out(dir: &Path, name: &str, content: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), content)?;
    Ok(())
}

/// One evaluated build order: label "a-b", per-order totals, and whether
/// the pathway search picked it.
pub struct OrderRow {
    pub label: String,
    pub result: ValuationResult,
    pub selected: bool,
}

/// Run the pathway valuation for the scenario's project list: both orders
/// for a pair, the single row for one project.
pub fn evaluate_orders(sc: &Scenario, spec: &LatticeSpec) -> Result<Vec<OrderRow>> {
    let inputs = sc.inputs()?;
    let base = sc.base_state();
    match sc.projects.len() {
        0 => Err(Error::Config("no projects".into())),
        1 => {
            let p = &sc.projects[0];
            let result = option_value_single(sc.abm.alpha0, &base, p, &inputs, spec)?;
            Ok(vec![OrderRow { label: sanitize(&p.name), result, selected: true }])
        }
        2 => {
            let choice = select_pathway(&base, &sc.projects, &inputs, spec)?;
            Ok(choice
                .evaluations
                .iter()
                .enumerate()
                .map(|(k, (names, result))| OrderRow {
                    label: names.iter().map(|n| sanitize(n)).collect::<Vec<_>>().join("-"),
                    result: result.clone(),
                    selected: k == choice.selected,
                })
                .collect())
        }
        n => Err(Error::Config(format!("pathway search handles at most two projects, got {n}"))),
    }
}

fn ensure_finite(label: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::Numeric(format!("{label} is not finite: {x}")))
    }
}

pub fn cmd_value(
    sc: &Scenario,
    spec: &LatticeSpec,
    out: &Path,
    mc_paths: Option<usize>,
    seed: u64,
) -> Result<()> {
    let rows = evaluate_orders(sc, spec)?;

    let mut valuation = String::from("order,npv_total,option_total,difference,selected\n");
    let mut stages = String::from("order,stage,project,npv,option_value\n");
    for row in &rows {
        ensure_finite("option total", row.result.option_value)?;
        let diff = row.result.option_value - row.result.npv;
        let _ = writeln!(
            valuation,
            "{},{},{},{},{}",
            row.label,
            money(row.result.npv),
            money(row.result.option_value),
            money(diff),
            row.selected
        );
        for (i, st) in row.result.stages.iter().enumerate() {
            let _ = writeln!(
                stages,
                "{},{},{},{},{}",
                row.label,
                i + 1,
                sanitize(&st.name),
                money(st.npv),
                money(st.option_value)
            );
        }
        for curve in &row.result.boundaries {
            let mut b = String::from("t_yr,alpha_star_mm,water_level_m\n");
            for &(t, a) in &curve.points {
                let _ = writeln!(b, "{},{:.3},{:.6}", fmt_t(t), a, sc.plot_level_m(a));
            }
            write_out(out, &format!("boundary_{}_{}.csv", row.label, sanitize(&curve.name)), &b)?;
        }
    }
    write_out(out, "valuation.csv", &valuation)?;
    write_out(out, "stages.csv", &stages)?;

    if let Some(n_paths) = mc_paths {
        let inputs = sc.inputs()?;
        let base = sc.base_state();
        let mut mc = String::from("project,lattice_value,mc_value,mc_se\n");
        for p in &sc.projects {
            let v = project_value(sc.abm.alpha0, &base, p, &inputs, spec)?;
            let (est, se) =
                mc_project_value(sc.abm.alpha0, &base, p, &inputs, spec.horizon, n_paths, seed)?;
            let _ = writeln!(mc, "{},{v:.6},{est:.6},{se:.6}", sanitize(&p.name));
        }
        write_out(out, "mc.csv", &mc)?;
    }

    for row in &rows {
        println!(
            "{}: npv {} option {} difference {}",
            row.label,
            money(row.result.npv),
            money(row.result.option_value),
            money(row.result.option_value - row.result.npv)
        );
    }
    if let Some(sel) = rows.iter().find(|r| r.selected) {
        println!("selected: {}", sel.label);
    }
    Ok(())
}

pub fn cmd_damage(sc: &Scenario, out: &Path) -> Result<()> {
    let u = sc.curve.threshold();
    let tail = 1.0 - sc.dist.cdf(u);
    let bare_loss = expected_damage(u, &sc.dist, &sc.curve)?;
    let bare_premium = premium(u, 0.0, &sc.dist, &sc.premium, &sc.curve)?;

    // configurations: nothing, each measure alone, then all in declared order
    let mut configs: Vec<(String, ProtectionState)> =
        vec![("none".into(), ProtectionState::new(u))];
    for p in &sc.projects {
        configs.push((sanitize(&p.name), ProtectionState::new(u).with(p.clone())));
    }
    if sc.projects.len() > 1 {
        let mut all = ProtectionState::new(u);
        for p in &sc.projects {
            all = all.with(p.clone());
        }
        let label = sc.projects.iter().map(|p| sanitize(&p.name)).collect::<Vec<_>>().join("+");
        configs.push((label, all));
    }

    let mut table = String::from(
        "configuration,annual_expected_loss_usd_b,annual_premium_usd_b,benefit_vs_none_usd_b\n",
    );
    for (label, state) in &configs {
        let benefit = combined_annual_benefit(state, 0.0, &sc.dist, &sc.premium, &sc.curve)?;
        let prem = bare_premium - benefit;
        let loss = prem / (1.0 + sc.premium.loading);
        ensure_finite("premium", prem)?;
        let _ = writeln!(table, "{label},{loss:.4},{prem:.4},{benefit:.4}");
    }
    write_out(out, "damage.csv", &table)?;

    println!("threshold: {u:.1} mm, exceedance probability {tail:.4}");
    println!("expected annual loss unprotected: {bare_loss:.4} $B");
    println!("annual premium unprotected: {bare_premium:.4} $B");
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepParam {
    #[value(name = "r")]
    Rate,
    Mu,
    Sigma,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Rate => "r",
            SweepParam::Mu => "mu",
            SweepParam::Sigma => "sigma",
        }
    }

    fn apply(self, sc: &Scenario, v: f64) -> Scenario {
        let mut m = sc.clone();
        match self {
            SweepParam::Rate => m.rate = v,
            SweepParam::Mu => m.abm.mu = v,
            SweepParam::Sigma => m.abm.sigma = v,
        }
        m
    }
}

/// Long-format sweep table, one row per (value, order).
pub fn sweep_table(
    sc: &Scenario,
    spec: &LatticeSpec,
    param: SweepParam,
    values: &[f64],
) -> Result<String> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config("sweep values must be finite".into()));
    }
    let mut table = String::from("param,value,order,npv_total,option_total,difference,selected\n");
    for &v in values {
        let modified = param.apply(sc, v);
        let rows = evaluate_orders(&modified, spec)?;
        for row in &rows {
            let _ = writeln!(
                table,
                "{},{},{},{},{},{},{}",
                param.name(),
                fmt_value(v),
                row.label,
                money(row.result.npv),
                money(row.result.option_value),
                money(row.result.option_value - row.result.npv),
                row.selected
            );
        }
    }
    Ok(table)
}

pub fn cmd_sweep(
    sc: &Scenario,
    spec: &LatticeSpec,
    param: SweepParam,
    values: &[f64],
    out: &Path,
) -> Result<()> {
    let table = sweep_table(sc, spec, param, values)?;
    write_out(out, "sweep.csv", &table)?;
    for line in table.lines().skip(1).filter(|l| l.ends_with(",true")) {
        let mut f = line.split(',');
        let (p, v, order) =
            (f.next().unwrap_or(""), f.next().unwrap_or(""), f.next().unwrap_or(""));
        println!("{p}={v}: {order}");
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlotKind {
    #[value(name = "damage_curve")]
    DamageCurve,
    Boundary,
    Sweep,
}

pub fn cmd_plotdata(
    sc: &Scenario,
    spec: &LatticeSpec,
    kind: PlotKind,
    param: Option<SweepParam>,
    values: &[f64],
    order: &[String],
    out: &Path,
) -> Result<()> {
    match kind {
        PlotKind::DamageCurve => {
            // 2 mm grid in plain station-datum metres; the loss threshold
            // itself lands on a row
            let mut table = String::from("water_level_m,loss_usd_b\n");
            let mut mm = 0i64;
            while mm <= 6000 {
                let x = mm as f64;
                let _ = writeln!(table, "{:.3},{:.6}", x / 1000.0, sc.curve.eval(x));
                mm += 2;
            }
            write_out(out, "plot_damage_curve.csv", &table)?;
            println!("plot_damage_curve.csv: {} rows", 3001);
        }
        PlotKind::Boundary => {
            let rows = evaluate_orders(sc, spec)?;
            let row = if order.is_empty() {
                rows.iter()
                    .find(|r| r.selected)
                    .ok_or_else(|| Error::Config("no selected order".into()))?
            } else {
                let want = order.iter().map(|n| sanitize(n)).collect::<Vec<_>>().join("-");
                rows.iter()
                    .find(|r| r.label == want)
                    .ok_or_else(|| Error::Config(format!("no evaluated order named \"{want}\"")))?
            };

            // wide layout: one water-level column per stage, blank where a
            // stage has no exercising node at that step
            let curves = &row.result.boundaries;
            let mut header = String::from("t_yr");
            for c in curves {
                let _ = write!(header, ",{}_m", sanitize(&c.name));
            }
            let mut steps: Vec<i64> = curves
                .iter()
                .flat_map(|c| c.points.iter().map(|&(t, _)| (t / spec.dt).round() as i64))
                .collect();
            steps.sort_unstable();
            steps.dedup();

            let mut table = header;
            table.push('\n');
            for &s in &steps {
                let t = s as f64 * spec.dt;
                let _ = write!(table, "{}", fmt_t(t));
                for c in curves {
                    match c.points.iter().find(|&&(pt, _)| ((pt / spec.dt).round() as i64) == s) {
                        Some(&(_, a)) => {
                            let _ = write!(table, ",{:.6}", sc.plot_level_m(a));
                        }
                        None => table.push(','),
                    }
                }
                table.push('\n');
            }
            write_out(out, "plot_boundary.csv", &table)?;
            println!("plot_boundary.csv: order {}, {} rows", row.label, steps.len());
        }
        PlotKind::Sweep => {
            let param = param
                .ok_or_else(|| Error::Config("plotdata sweep needs --param and --values".into()))?;
            let table = sweep_table(sc, spec, param, values)?;
            write_out(out, "plot_sweep.csv", &table)?;
            println!("plot_sweep.csv: {} rows", table.lines().count() - 1);
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_fit(
    gauge: &Path,
    station: &str,
    mean_tide: f64,
    min_coverage: f64,
    sentinel: f64,
    out: &Path,
) -> Result<()> {
    let file = fs::File::open(gauge)
        .map_err(|e| Error::Config(format!("cannot read gauge {}: {e}", gauge.display())))?;
    let series = parse_gauge_csv(file, station, sentinel)?;
    let stats = annual_stats(&series, mean_tide, min_coverage)?;

    let mut annual = String::from("year,mean_mm,max_mm,max_surge_mm,n_obs\n");
    for a in &stats {
        let _ = writeln!(
            annual,
            "{},{:.3},{:.3},{:.3},{}",
            a.year, a.mean_level, a.max_level, a.max_surge, a.n_obs
        );
    }
    write_out(out, "annual.csv", &annual)?;
    println!(
        "{} rows parsed, {} dropped, {} usable years",
        series.records.len(),
        series.dropped_missing,
        stats.len()
    );

    let means: Vec<(i32, f64)> = stats.iter().map(|a| (a.year, a.mean_level)).collect();
    let (mu, sigma) = estimate_abm(&means)?;
    let mut abm = String::from("mu_mm_per_yr,sigma_mm_per_sqrt_yr,n_years\n");
    let _ = writeln!(abm, "{mu:.6},{sigma:.6},{}", means.len());
    write_out(out, "abm.csv", &abm)?;
    println!("sea-level drift: mu {mu:.3} mm/yr, sigma {sigma:.3} mm/sqrt(yr)");

    let maxima: Vec<f64> = stats.iter().map(|a| a.max_surge).collect();
    let fit = fit_mle(&maxima)?;
    let mut gev = String::from("location_mm,scale_mm,shape,loglik,converged,n_years\n");
    let _ = writeln!(
        gev,
        "{:.6},{:.6},{:.6},{:.6},{},{}",
        fit.params.location,
        fit.params.scale,
        fit.params.shape,
        fit.loglik,
        fit.converged,
        maxima.len()
    );
    write_out(out, "gev.csv", &gev)?;
    println!(
        "surge maxima fit: location {:.3} mm, scale {:.3} mm, shape {:.4}",
        fit.params.location, fit.params.scale, fit.params.shape
    );
    Ok(())
}
