//! Run configuration, command runners and output writing for the `vofrac`
//! binary.
//!
//! Every command is a pure function of the validated configuration and seed.
//! Outputs are rendered in memory and only written once the whole command has
//! succeeded, each file through a temporary name and a rename.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::covariance::cov_vo;
use crate::ctrw::{limit_experiment, CtrwConfig, JumpLaw};
use crate::error::{Error, Result};
use crate::kernels::{kernels, sonine_residual};
use crate::laplace::{ContourPlan, Method};
use crate::order::{log_grid, OrderFunction};
use crate::relaxation::solve;
use crate::renewal::{factorial_moment, pmf, pmf_table, simulate_counts, RenewalModel};
use crate::sampled::fmt12;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Command {
    #[serde(rename = "kernel")]
    Kernel,
    #[serde(rename = "relax")]
    Relax,
    #[serde(rename = "pmf")]
    Pmf,
    #[serde(rename = "moments")]
    Moments,
    #[serde(rename = "cov")]
    Cov,
    #[serde(rename = "simulate")]
    Simulate,
    #[serde(rename = "ctrw-limit")]
    CtrwLimit,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Kernel,
        Command::Relax,
        Command::Pmf,
        Command::Moments,
        Command::Cov,
        Command::Simulate,
        Command::CtrwLimit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Kernel => "kernel",
            Command::Relax => "relax",
            Command::Pmf => "pmf",
            Command::Moments => "moments",
            Command::Cov => "cov",
            Command::Simulate => "simulate",
            Command::CtrwLimit => "ctrw-limit",
        }
    }

    fn stem(self) -> &'static str {
        match self {
            Command::CtrwLimit => "ctrw_limit",
            other => other.name(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Log,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

impl GridSpec {
    pub fn points(&self) -> Vec<f64> {
        match self.spacing {
            Spacing::Log => log_grid(self.t_min, self.t_max, self.points),
            Spacing::Linear if self.points == 1 => vec![self.t_min],
            Spacing::Linear => {
                let h = (self.t_max - self.t_min) / (self.points - 1) as f64;
                (0..self.points)
                    .map(|i| if i + 1 == self.points { self.t_max } else { self.t_min + h * i as f64 })
                    .collect()
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.t_min > 0.0 && self.t_max >= self.t_min && self.t_max.is_finite()) {
            return Err(Error::Config(format!(
                "grid needs 0 < t_min <= t_max < inf, got ({}, {})",
                self.t_min, self.t_max
            )));
        }
        if self.points == 0 || self.points > 100_000 {
            return Err(Error::Config(format!("grid points must lie in 1..=100000, got {}", self.points)));
        }
        Ok(())
    }
}

/// Fields that replace the command's default [`ContourPlan`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_rel_err: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_window: Option<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spot_check: Option<bool>,
}

impl PlanOverrides {
    pub fn apply(&self, base: ContourPlan) -> ContourPlan {
        ContourPlan {
            method: self.method.unwrap_or(base.method),
            nodes: self.nodes.unwrap_or(base.nodes),
            target_rel_err: self.target_rel_err.unwrap_or(base.target_rel_err),
            t_window: self.t_window.unwrap_or(base.t_window),
            spot_check: self.spot_check.unwrap_or(base.spot_check),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PmfSection {
    /// Highest `k` in the table; when absent the table runs until the
    /// partial sums reach `1 − 1e−6`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentsSection {
    /// Factorial moments `r = 1..=r_max`.
    pub r_max: usize,
}

impl Default for MomentsSection {
    fn default() -> Self {
        Self { r_max: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovSection {
    /// Explicit `(t₁, t₂)` pairs; defaults to all pairs of grid points.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<Vec<(f64, f64)>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub paths: usize,
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self { paths: 1000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CtrwSection {
    pub beta: f64,
    pub jump: JumpLaw,
    #[serde(default = "default_ctrw_t")]
    pub t: f64,
    #[serde(default = "default_kappas")]
    pub kappas: Vec<f64>,
    #[serde(default = "default_ladder")]
    pub ladder: Vec<f64>,
    #[serde(default = "default_ctrw_paths")]
    pub paths: usize,
}

fn default_ctrw_t() -> f64 {
    1.0
}

fn default_kappas() -> Vec<f64> {
    (0..13).map(|i| 0.25 * i as f64).collect()
}

fn default_ladder() -> Vec<f64> {
    vec![1e2, 1e3, 1e4]
}

fn default_ctrw_paths() -> usize {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub order: OrderFunction,
    pub lambda: f64,
    pub grid: GridSpec,
    #[serde(default)]
    pub plan: PlanOverrides,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub format: Format,
    /// Output directory; `--out` takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pmf: Option<PmfSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moments: Option<MomentsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cov: Option<CovSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ctrw: Option<CtrwSection>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Base plan of `cmd` with the overrides applied.
    pub fn plan_for(&self, cmd: Command) -> ContourPlan {
        let base = match cmd {
            Command::Cov => ContourPlan::double_default(),
            _ => ContourPlan::default(),
        };
        self.plan.apply(base)
    }

    /// Checks everything `cmd` needs before any computation starts.
    pub fn validate(&self, cmd: Command) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!("lambda must be positive and finite, got {}", self.lambda)));
        }
        self.grid.validate()?;
        let plan = self.plan_for(cmd);
        plan.validate().map_err(|e| Error::Config(e.to_string()))?;
        let (lo, hi) = plan.t_window;
        let grid = self.grid.points();
        if cmd != Command::CtrwLimit && (grid[0] < lo || *grid.last().unwrap() > hi) {
            return Err(Error::Config(format!(
                "grid ({}, {}) leaves the plan window ({lo}, {hi})",
                self.grid.t_min, self.grid.t_max
            )));
        }
        match cmd {
            Command::Moments => {
                let r = self.moments.unwrap_or_default().r_max;
                if !(1..=20).contains(&r) {
                    return Err(Error::Config(format!("moments.r_max must lie in 1..=20, got {r}")));
                }
            }
            Command::Cov => {
                if let Some(pairs) = self.cov.as_ref().and_then(|c| c.pairs.as_ref()) {
                    if pairs.is_empty()
                        || pairs.iter().any(|&(a, b)| !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()))
                    {
                        return Err(Error::Config("cov.pairs must be non-empty with positive finite times".into()));
                    }
                }
            }
            Command::Simulate => {
                if self.simulate.unwrap_or_default().paths == 0 {
                    return Err(Error::Config("simulate.paths must be positive".into()));
                }
            }
            Command::CtrwLimit => {
                let sec =
                    self.ctrw.as_ref().ok_or_else(|| Error::Config("ctrw-limit needs a `ctrw` section".into()))?;
                self.ctrw_config(sec).map_err(|e| Error::Config(e.to_string()))?;
                if !(sec.t > 0.0 && sec.t.is_finite()) {
                    return Err(Error::Config(format!("ctrw.t must be positive, got {}", sec.t)));
                }
                if sec.paths == 0 || sec.kappas.is_empty() {
                    return Err(Error::Config("ctrw.paths and ctrw.kappas must be non-empty".into()));
                }
                if sec.ladder.is_empty()
                    || sec.ladder.iter().any(|&c| !(c > 0.0))
                    || sec.ladder.windows(2).any(|w| w[1] <= w[0])
                {
                    return Err(Error::Config("ctrw.ladder must be positive and strictly increasing".into()));
                }
            }
            _ => {}
        }
        Ok(())
    }

    fn ctrw_config(&self, sec: &CtrwSection) -> Result<CtrwConfig> {
        CtrwConfig::new(self.order, self.lambda, sec.beta, *sec.ladder.last().unwrap_or(&1.0), sec.jump)
    }

    /// SHA-256 of the effective configuration, excluding the output directory.
    pub fn digest(&self) -> String {
        let canonical = RunConfig { output: None, ..self.clone() };
        let bytes = serde_json::to_vec(&canonical).expect("config serialises");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// One rendered output file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub file_name: String,
    pub contents: String,
}

struct Provenance {
    command: Command,
    digest: String,
    seed: u64,
}

impl Provenance {
    fn csv_header(&self) -> String {
        format!(
            "# vofrac {VERSION}\n# command: {}\n# config_sha256: {}\n# seed: {}\n",
            self.command.name(),
            self.digest,
            self.seed
        )
    }

    fn json(&self) -> serde_json::Value {
        json!({
            "tool": "vofrac",
            "version": VERSION,
            "command": self.command.name(),
            "config_sha256": self.digest,
            "seed": self.seed,
        })
    }

    fn csv(&self, name: String, notes: &[String], body: &str) -> Artifact {
        let mut contents = self.csv_header();
        for n in notes {
            let _ = writeln!(contents, "# {n}");
        }
        contents.push_str(body);
        Artifact { file_name: name, contents }
    }

    fn json_file(&self, name: String, data: serde_json::Value) -> Artifact {
        let doc = json!({ "provenance": self.json(), "data": data });
        let mut contents = serde_json::to_string_pretty(&doc).expect("json serialises");
        contents.push('\n');
        Artifact { file_name: name, contents }
    }

    fn table(&self, format: Format, stem: &str, notes: &[String], csv: &str, data: serde_json::Value) -> Artifact {
        match format {
            Format::Csv => self.csv(format!("{stem}.csv"), notes, csv),
            Format::Json => self.json_file(format!("{stem}.json"), data),
        }
    }
}

/// Validates `cfg` and renders every output file of `cmd`.
pub fn run(cmd: Command, cfg: &RunConfig) -> Result<Vec<Artifact>> {
    cfg.validate(cmd)?;
    let prov = Provenance { command: cmd, digest: cfg.digest(), seed: cfg.seed };
    let plan = cfg.plan_for(cmd);
    let grid = cfg.grid.points();
    let fmt = cfg.format;
    let stem = cmd.stem();
    match cmd {
        Command::Kernel => {
            let pair = kernels(&cfg.order, &plan, &grid)?;
            let residuals: Vec<f64> = grid.iter().map(|&t| sonine_residual(&pair, t)).collect::<Result<_>>()?;
            let max_abs = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
            let table = prov.table(
                fmt,
                "kernels",
                &[],
                &pair.to_csv(),
                json!({ "t": grid, "phi": pair.phi.values(), "psi": pair.psi.values() }),
            );
            let summary = prov.json_file(
                "sonine.json".into(),
                json!({ "t": grid, "residual": residuals, "max_abs_residual": max_abs }),
            );
            Ok(vec![table, summary])
        }
        Command::Relax => {
            let sol = solve(&cfg.order, cfg.lambda, &plan, &grid)?;
            let notes: Vec<String> = sol.warnings.iter().map(|w| format!("warning: {w}")).collect();
            let data = json!({ "t": grid, "u": sol.u.values(), "du": sol.du.values(), "warnings": sol.warnings });
            Ok(vec![prov.table(fmt, stem, &notes, &sol.to_csv(), data)])
        }
        Command::Pmf => {
            let model = RenewalModel::with_defaults(&cfg.order, cfg.lambda)?;
            let rows: Vec<Vec<f64>> = match cfg.pmf.unwrap_or_default().k_max {
                Some(k_max) => {
                    (0..=k_max).map(|k| Ok(pmf(&model, k, &grid, &plan)?.values().to_vec())).collect::<Result<_>>()?
                }
                None => pmf_table(&model, &grid, 3, &plan)?.rows,
            };
            let mut csv = String::from("t");
            for k in 0..rows.len() {
                let _ = write!(csv, ",p{k}");
            }
            csv.push('\n');
            for (i, t) in grid.iter().enumerate() {
                csv.push_str(&fmt12(*t));
                for r in &rows {
                    csv.push(',');
                    csv.push_str(&fmt12(r[i]));
                }
                csv.push('\n');
            }
            Ok(vec![prov.table(fmt, stem, &[], &csv, json!({ "t": grid, "p": rows }))])
        }
        Command::Moments => {
            let model = RenewalModel::with_defaults(&cfg.order, cfg.lambda)?;
            let r_max = cfg.moments.unwrap_or_default().r_max;
            let moments: Vec<Vec<f64>> = (1..=r_max)
                .map(|r| Ok(factorial_moment(&model, r, &grid, &plan)?.values().to_vec()))
                .collect::<Result<_>>()?;
            let variance: Option<Vec<f64>> = (r_max >= 2).then(|| {
                (0..grid.len()).map(|i| moments[1][i] + moments[0][i] - moments[0][i] * moments[0][i]).collect()
            });
            let mut csv = String::from("t");
            for r in 1..=r_max {
                let _ = write!(csv, ",fm{r}");
            }
            if variance.is_some() {
                csv.push_str(",variance");
            }
            csv.push('\n');
            for (i, t) in grid.iter().enumerate() {
                csv.push_str(&fmt12(*t));
                for m in &moments {
                    csv.push(',');
                    csv.push_str(&fmt12(m[i]));
                }
                if let Some(v) = &variance {
                    csv.push(',');
                    csv.push_str(&fmt12(v[i]));
                }
                csv.push('\n');
            }
            let data = json!({ "t": grid, "factorial_moments": moments, "variance": variance });
            Ok(vec![prov.table(fmt, stem, &[], &csv, data)])
        }
        Command::Cov => {
            let pairs = match cfg.cov.as_ref().and_then(|c| c.pairs.clone()) {
                Some(p) => p,
                None => grid.iter().flat_map(|&a| grid.iter().map(move |&b| (a, b))).collect(),
            };
            let cov = cov_vo(&cfg.order, cfg.lambda, &pairs, &plan)?;
            let notes = vec![format!("min covariance: {}", fmt12(cov.min_value()))];
            let data = serde_json::to_value(&cov).expect("covariance serialises");
            Ok(vec![prov.table(fmt, stem, &notes, &cov.to_csv(), data)])
        }
        Command::Simulate => {
            let model = RenewalModel::with_defaults(&cfg.order, cfg.lambda)?;
            let paths = cfg.simulate.unwrap_or_default().paths;
            let counts = simulate_counts(&model, &grid, paths, cfg.seed)?;
            let n = paths as f64;
            let mut mean = vec![0.0; grid.len()];
            let mut variance = vec![0.0; grid.len()];
            for (j, (m, v)) in mean.iter_mut().zip(variance.iter_mut()).enumerate() {
                *m = counts.iter().map(|c| c[j] as f64).sum::<f64>() / n;
                *v = if paths > 1 {
                    counts.iter().map(|c| (c[j] as f64 - *m).powi(2)).sum::<f64>() / (n - 1.0)
                } else {
                    0.0
                };
            }
            let std_err: Vec<f64> = variance.iter().map(|v| (v / n).sqrt()).collect();
            let mut csv = String::from("t,mean,variance,std_err\n");
            for i in 0..grid.len() {
                let _ =
                    writeln!(csv, "{},{},{},{}", fmt12(grid[i]), fmt12(mean[i]), fmt12(variance[i]), fmt12(std_err[i]));
            }
            let notes = vec![format!("paths: {paths}")];
            let data = json!({ "t": grid, "paths": paths, "mean": mean, "variance": variance, "std_err": std_err });
            Ok(vec![prov.table(fmt, stem, &notes, &csv, data)])
        }
        Command::CtrwLimit => {
            let sec = cfg.ctrw.as_ref().expect("validated");
            let ctrw = cfg.ctrw_config(sec)?;
            let report = limit_experiment(&ctrw, sec.t, &sec.kappas, &sec.ladder, sec.paths, cfg.seed)?;
            let table = prov.table(
                fmt,
                stem,
                &[],
                &report.to_csv(),
                serde_json::to_value(&report.rows).expect("rows serialise"),
            );
            let summary = prov.json_file(
                "ctrw_limit_summary.json".into(),
                json!({
                    "t": report.t,
                    "n_paths": report.n_paths,
                    "sup_distance": report.sup_distance,
                    "noise_floor": report.noise_floor,
                    "non_increasing": report.non_increasing(),
                    "max_imaginary": report.max_imaginary(),
                }),
            );
            Ok(vec![table, summary])
        }
    }
}

/// Writes all artifacts into `dir`, or none of them.
pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut staged: Vec<(PathBuf, PathBuf)> = Vec::with_capacity(artifacts.len());
    let cleanup = |staged: &[(PathBuf, PathBuf)]| {
        for (tmp, _) in staged {
            let _ = fs::remove_file(tmp);
        }
    };
    for a in artifacts {
        let tmp = dir.join(format!(".{}.partial", a.file_name));
        if let Err(e) = fs::write(&tmp, &a.contents) {
            let _ = fs::remove_file(&tmp);
            cleanup(&staged);
            return Err(e.into());
        }
        staged.push((tmp, dir.join(&a.file_name)));
    }
    for (tmp, dest) in &staged {
        if let Err(e) = fs::rename(tmp, dest) {
            cleanup(&staged);
            return Err(e.into());
        }
    }
    Ok(staged.into_iter().map(|(_, d)| d).collect())
}

/// Process exit code for an error: 2 configuration, 3 numerical, 4 budget.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::InvalidParameter(_) | Error::DegenerateRates(_) => 2,
        Error::Budget(_) => 4,
        _ => 3,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> RunConfig {
        RunConfig::from_json(
            r#"{"order":{"kind":"constant","alpha":0.5},"lambda":1.0,
                "grid":{"t_min":0.1,"t_max":2.0,"points":4}}"#,
        )
        .unwrap()
    }

    #[test]
    fn rejects_unknown_keys() {
        let err = RunConfig::from_json(r#"{"order":{"kind":"constant","alpha":0.5},"lambda":1,"grid":{"t_min":0.1,"t_max":1,"points":3},"colour":1}"#)
            .unwrap_err();
        assert_eq!(exit_code(&err), 2);
        assert!(RunConfig::from_json(
            r#"{"order":{"kind":"constant","alpha":1.5},"lambda":1,"grid":{"t_min":0.1,"t_max":1,"points":3}}"#
        )
        .is_err());
    }

    #[test]
    fn digest_ignores_output_dir() {
        let a = base();
        let b = RunConfig { output: Some("elsewhere".into()), ..base() };
        assert_eq!(a.digest(), b.digest());
        let c = RunConfig { seed: 7, ..base() };
        assert_ne!(a.digest(), c.digest());
    }

    #[test]
    fn linear_grid_endpoints() {
        let g = GridSpec { t_min: 1.0, t_max: 2.0, points: 5, spacing: Spacing::Linear }.points();
        assert_eq!(g, vec![1.0, 1.25, 1.5, 1.75, 2.0]);
    }

    #[test]
    fn ctrw_needs_section() {
        assert!(matches!(base().validate(Command::CtrwLimit), Err(Error::Config(_))));
    }

    #[test]
    fn kernel_table_has_provenance() {
        let arts = run(Command::Kernel, &base()).unwrap();
        assert_eq!(arts[0].file_name, "kernels.csv");
        assert!(arts[0].contents.starts_with("# vofrac "));
        assert!(arts[0].contents.contains("\nt,phi,psi\n"));
        assert_eq!(arts[1].file_name, "sonine.json");
    }
}
