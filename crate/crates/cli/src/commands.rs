use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use femtosim::clustering::ClusterAssignment;
use femtosim::geometry::Topology;
use femtosim::simkernel::adaptive::run_adaptation;
use femtosim::simkernel::compare::{compare_pair, comparison_csv};
use femtosim::simkernel::lut::{Lut, LutStat};
use femtosim::simkernel::metrics::{cdf_points, compensated_mean};
use femtosim::simkernel::{
    cluster, run_scenario_detailed, samples_csv, Algorithm, ScenarioConfig, ScenarioRun,
};
use femtosim::CSV_VERSION_LINE;

use crate::output::OutputDir;
use crate::{CliError, FileConfig};

pub const FIGURE_FILES: [&str; 8] = [
    "fig7.csv",
    "fig8.csv",
    "fig9.csv",
    "fig10.csv",
    "fig11.csv",
    "fig12.csv",
    "fig13.csv",
    "fig14.csv",
];

const CDF_POINTS: usize = 200;
const ALGORITHMS: [Algorithm; 2] = [Algorithm::Gvcf, Algorithm::Ncs];

fn header(columns: &str) -> String {
    format!("{CSV_VERSION_LINE}\n{columns}\n")
}

fn point_name(c: &ScenarioConfig) -> String {
    format!(
        "grid point algorithm={} n_faps={} channels={}",
        c.algorithm, c.n_faps, c.channels_available
    )
}

fn execute(cfg: &ScenarioConfig) -> Result<ScenarioRun, CliError> {
    run_scenario_detailed(cfg).map_err(CliError::sim(point_name(cfg)))
}

fn n_clusters(c: &ScenarioConfig) -> usize {
    c.n_clusters().unwrap_or(0)
}

fn key_columns(c: &ScenarioConfig) -> String {
    format!(
        "{},{},{},{}",
        c.algorithm,
        c.n_faps,
        c.channels_available,
        n_clusters(c)
    )
}

const KEY_HEADER: &str = "algorithm,n_faps,channels,n_clusters";

const SUMMARY_HEADER: &str = "algorithm,n_faps,channels,n_clusters,replicas,n_samples,\
p50_sinr_db,p90_sinr_db,x90_sinr_db,mean_sinr_db,p50_se_bpshz,p90_se_bpshz,x90_se_bpshz,mean_se_bpshz,\
failure_ratio,reserve_fraction,avg_min_cochannel_distance_m";

fn reserve_fraction(run: &ScenarioRun) -> f64 {
    let v: Vec<f64> = run.replicas.iter().map(|r| r.reserve_fraction).collect();
    compensated_mean(&v).unwrap_or(0.0)
}

fn summary_row(run: &ScenarioRun) -> String {
    let r = &run.report;
    let dist = r
        .avg_min_cochannel_distance_mean
        .map(|d| format!("{d:.6}"))
        .unwrap_or_default();
    format!(
        "{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{}\n",
        key_columns(&run.config),
        run.replicas.len(),
        r.n_samples,
        r.p50_sinr,
        r.p90_sinr,
        r.x90_sinr,
        r.mean_sinr,
        r.p50_se,
        r.p90_se,
        r.x90_se,
        r.mean_se,
        r.failure_ratio_mean,
        reserve_fraction(run),
        dist
    )
}

fn summary_csv<'a>(runs: impl IntoIterator<Item = &'a ScenarioRun>) -> String {
    let mut out = header(SUMMARY_HEADER);
    for run in runs {
        out.push_str(&summary_row(run));
    }
    out
}

fn report_written(paths: &[PathBuf]) {
    for p in paths {
        println!("{}", p.display());
    }
}

pub fn run(cfg: &FileConfig, out: &OutputDir) -> Result<Vec<PathBuf>, CliError> {
    out.check(["samples.csv", "summary.csv"])?;
    let run = execute(&cfg.scenario())?;
    let paths = out.write_all(&[
        ("samples.csv", samples_csv(&run)),
        ("summary.csv", summary_csv([&run])),
    ])?;
    report_written(&paths);
    Ok(paths)
}

/// Every (n_faps, channels, algorithm) point of the configured grid.
fn grid(cfg: &FileConfig) -> Vec<ScenarioConfig> {
    let base = cfg.scenario();
    let mut out = Vec::new();
    for &n in &cfg.sweep_n_faps {
        for &c in &cfg.sweep_channels {
            for alg in ALGORITHMS {
                out.push(ScenarioConfig {
                    n_faps: n,
                    ..base.with_channels(c).with_algorithm(alg)
                });
            }
        }
    }
    out
}

type Runs = BTreeMap<(usize, usize, Algorithm), ScenarioRun>;

fn run_grid(cfg: &FileConfig) -> Result<Runs, CliError> {
    let mut runs = BTreeMap::new();
    for point in grid(cfg) {
        let run = execute(&point)?;
        eprintln!("done: {}", point_name(&point));
        runs.insert(
            (point.n_faps, point.channels_available, point.algorithm),
            run,
        );
    }
    Ok(runs)
}

fn cdf_figure(
    runs: &Runs,
    channels: usize,
    column: &str,
    pick: fn(&ScenarioRun) -> Vec<f64>,
) -> String {
    let mut out = header(&format!("{KEY_HEADER},{column},cdf"));
    for (_, run) in runs.iter().filter(|((_, c, _), _)| *c == channels) {
        let mut v = pick(run);
        v.sort_by(f64::total_cmp);
        for (x, p) in cdf_points(&v, CDF_POINTS) {
            let _ = writeln!(out, "{},{x:.6},{p:.6}", key_columns(&run.config));
        }
    }
    out
}

fn stat_figure(runs: &Runs, columns: &str, row: impl Fn(&ScenarioRun) -> String) -> String {
    let mut out = header(&format!("{KEY_HEADER},{columns}"));
    for run in runs.values() {
        let _ = writeln!(out, "{},{}", key_columns(&run.config), row(run));
    }
    out
}

/// Per-figure data for a finished grid.
pub fn figure_files(runs: &Runs, cdf_channels: usize) -> Vec<(&'static str, String)> {
    vec![
        (
            "fig7.csv",
            cdf_figure(runs, cdf_channels, "sinr_db", |r| {
                r.replicas
                    .iter()
                    .flat_map(|x| x.sinr_db.iter().copied())
                    .collect()
            }),
        ),
        (
            "fig8.csv",
            cdf_figure(runs, cdf_channels, "se_bpshz", |r| {
                r.replicas
                    .iter()
                    .flat_map(|x| x.se.iter().copied())
                    .collect()
            }),
        ),
        (
            "fig9.csv",
            stat_figure(runs, "failure_ratio,reserve_fraction", |r| {
                format!(
                    "{:.6},{:.6}",
                    r.report.failure_ratio_mean,
                    reserve_fraction(r)
                )
            }),
        ),
        (
            "fig10.csv",
            stat_figure(runs, "avg_min_cochannel_distance_m", |r| {
                r.report
                    .avg_min_cochannel_distance_mean
                    .map(|d| format!("{d:.6}"))
                    .unwrap_or_default()
            }),
        ),
        (
            "fig11.csv",
            stat_figure(runs, "x90_sinr_db", |r| format!("{:.6}", r.report.x90_sinr)),
        ),
        (
            "fig12.csv",
            stat_figure(runs, "x90_se_bpshz", |r| format!("{:.6}", r.report.x90_se)),
        ),
        (
            "fig13.csv",
            stat_figure(runs, "p50_sinr_db,mean_sinr_db", |r| {
                format!("{:.6},{:.6}", r.report.p50_sinr, r.report.mean_sinr)
            }),
        ),
        (
            "fig14.csv",
            stat_figure(runs, "mean_se_bpshz,n_samples", |r| {
                format!("{:.6},{}", r.report.mean_se, r.report.n_samples)
            }),
        ),
    ]
}

pub fn sweep(cfg: &FileConfig, out: &OutputDir) -> Result<Vec<PathBuf>, CliError> {
    out.check(FIGURE_FILES.iter().copied().chain(["summary.csv"]))?;
    let runs = run_grid(cfg)?;
    // CDFs are drawn at the largest channel budget of the sweep
    let cdf_channels = *cfg
        .sweep_channels
        .iter()
        .max()
        .expect("validated non-empty");
    let mut files = figure_files(&runs, cdf_channels);
    files.push(("summary.csv", summary_csv(runs.values())));
    let paths = out.write_all(&files)?;
    report_written(&paths);
    Ok(paths)
}

fn grid_pairs(cfg: &FileConfig) -> Vec<(ScenarioConfig, ScenarioConfig)> {
    grid(cfg)
        .into_iter()
        .filter(|c| c.algorithm == Algorithm::Gvcf)
        .map(|c| {
            let ncs = c.with_algorithm(Algorithm::Ncs);
            (c, ncs)
        })
        .collect()
}

pub fn compare(cfg: &FileConfig, out: &OutputDir) -> Result<Vec<PathBuf>, CliError> {
    out.check(["comparison.csv"])?;
    let pairs = grid_pairs(cfg);
    let mut rows = Vec::with_capacity(pairs.len());
    for pair in &pairs {
        rows.push(compare_pair(&pair.0, &pair.1).map_err(CliError::sim(point_name(&pair.0)))?);
    }
    let paths = out.write_all(&[("comparison.csv", comparison_csv(&rows))])?;
    report_written(&paths);
    Ok(paths)
}

fn lut_for(cfg: &FileConfig, n_faps: &[usize], algorithms: &[Algorithm]) -> Result<Lut, CliError> {
    let mut runs = Vec::new();
    for point in grid(cfg)
        .into_iter()
        .filter(|c| n_faps.contains(&c.n_faps) && algorithms.contains(&c.algorithm))
    {
        runs.push((point.clone(), execute(&point)?));
    }
    Lut::from_reports(runs.iter().map(|(c, r)| (c, &r.report)))
        .map_err(CliError::sim("building look-up table"))
}

pub fn lut(cfg: &FileConfig, out: &OutputDir) -> Result<Vec<PathBuf>, CliError> {
    let query = cfg.se_target_bpshz.is_some() || cfg.sinr_target_db.is_some();
    let mut names = vec!["lut.csv"];
    if query {
        names.push("lut_query.csv");
    }
    out.check(names.iter().copied())?;
    let table = lut_for(cfg, &cfg.sweep_n_faps, &ALGORITHMS)?;
    let mut files = vec![("lut.csv", table.to_csv())];
    if query {
        let stat: LutStat = cfg.scenario().gvcf.percentile_for_targets.into();
        let mut q = header("algorithm,n_faps,stat,met,min_clusters,channels,sinr_db,se_bpshz");
        for &n in &cfg.sweep_n_faps {
            for alg in ALGORITHMS {
                match table.min_clusters(alg, n, stat, cfg.sinr_target_db, cfg.se_target_bpshz) {
                    Some(r) => {
                        let _ = writeln!(
                            q,
                            "{alg},{n},{stat},true,{},{},{:.6},{:.6}",
                            r.n_clusters, r.channels, r.sinr_db, r.se
                        );
                    }
                    None => {
                        let _ = writeln!(q, "{alg},{n},{stat},false,,,,");
                    }
                }
            }
        }
        files.push(("lut_query.csv", q));
    }
    let paths = out.write_all(&files)?;
    report_written(&paths);
    Ok(paths)
}

pub fn adapt(cfg: &FileConfig, out: &OutputDir) -> Result<Vec<PathBuf>, CliError> {
    out.check(["adaptation.csv"])?;
    let scenario = cfg.scenario().with_algorithm(Algorithm::Gvcf);
    let table = lut_for(cfg, &[cfg.n_faps], &[Algorithm::Gvcf])?;
    let result =
        run_adaptation(&scenario, &table, cfg.adapt_rounds).map_err(CliError::sim("adaptation"))?;
    let body = header("round,action,n_vc,pool_size") + &result.trace_text();
    eprintln!(
        "final: {} channels, {} clusters, converged={}",
        result.final_channels, result.final_n_vc, result.converged
    );
    let paths = out.write_all(&[("adaptation.csv", body)])?;
    report_written(&paths);
    Ok(paths)
}

fn read_topology(path: &Path, cfg: &ScenarioConfig) -> Result<Topology, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::MissingFile(format!("{}: {e}", path.display())))?;
    Topology::from_csv(&text, cfg.area)
        .map_err(|e| CliError::Malformed(format!("{}: {e}", path.display())))
}

/// Topology plus the raw GVCF and NCS labels of replica 0.
pub fn trace(
    cfg: &ScenarioConfig,
    topology: Option<&Path>,
) -> Result<(Topology, ClusterAssignment, ClusterAssignment), CliError> {
    let topo = match topology {
        Some(p) => read_topology(p, cfg)?,
        None => cfg
            .topology(0)
            .map_err(CliError::sim("generating topology"))?,
    };
    let cfg = ScenarioConfig {
        n_faps: topo.n_faps(),
        ..cfg.clone()
    };
    let d = topo
        .distance_matrix()
        .map_err(CliError::sim("distance matrix"))?;
    let gvcf = cluster(&cfg.with_algorithm(Algorithm::Gvcf), &d, 0)
        .map_err(CliError::sim("GVCF clustering"))?;
    let ncs = cluster(&cfg.with_algorithm(Algorithm::Ncs), &d, 0)
        .map_err(CliError::sim("NCS clustering"))?;
    Ok((topo, gvcf, ncs))
}

pub fn trace_cluster(
    cfg: &FileConfig,
    topology: Option<&Path>,
    out: &OutputDir,
) -> Result<Vec<PathBuf>, CliError> {
    out.check(["topology.csv", "assignment_gvcf.csv", "assignment_ncs.csv"])?;
    let (topo, gvcf, ncs) = trace(&cfg.scenario(), topology)?;
    let paths = out.write_all(&[
        ("topology.csv", topo.to_csv()),
        ("assignment_gvcf.csv", gvcf.to_csv()),
        ("assignment_ncs.csv", ncs.to_csv()),
    ])?;
    report_written(&paths);
    Ok(paths)
}
