//! Run configuration, check orchestration and reports.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::framegeo::{connection_form_residuals, isotropy_order};
use crate::holo::HoloCurve;
use crate::isogen::{build_chain_surface, build_holomorphic_surface, surface_jet, ChainConfig, Surface};
use crate::presets::Preset;
use crate::ruled::{associated_pair_report, austere_report, nullity_alignment, ruling_coincidence, AustereOptions, AustereReport, MPoint};
use crate::sampling::{Sampler, SamplingSpec};
use crate::structcheck::{
    kaehler_parallelism_test, lagrangian_report, nonholomorphy_certificate, t_commutation_test, KaehlerOptions,
    LiftOptions, ResidualReport,
};

pub const REPORT_FORMAT: &str = "austere-report/1";
pub const CSV_FORMAT: &str = "austere-residuals/1";
/// Column order of the residual table.
pub const CSV_COLUMNS: [&str; 9] = ["check", "index", "u", "v", "t", "s", "residual", "pass", "breakdown"];

/// Where the surface comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SurfaceSpec {
    Chain(ChainConfig),
    Holomorphic { eta: HoloCurve },
    Preset { name: Preset },
}

impl SurfaceSpec {
    pub fn build(&self) -> Result<Surface> {
        match self {
            SurfaceSpec::Chain(c) => build_chain_surface(c),
            SurfaceSpec::Holomorphic { eta } => build_holomorphic_surface(eta),
            SurfaceSpec::Preset { name } => name.build(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    Conformal,
    Minimal,
    Isotropy,
    Austere,
    Nullity,
    Kaehler,
    Lemma,
    Lagrangian,
    Pair,
    ConnectionForms,
}

impl Check {
    pub const ALL: [Check; 10] = [
        Check::Conformal,
        Check::Minimal,
        Check::Isotropy,
        Check::Austere,
        Check::Nullity,
        Check::Kaehler,
        Check::Lemma,
        Check::Lagrangian,
        Check::Pair,
        Check::ConnectionForms,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::Conformal => "conformal",
            Check::Minimal => "minimal",
            Check::Isotropy => "isotropy",
            Check::Austere => "austere",
            Check::Nullity => "nullity",
            Check::Kaehler => "kaehler",
            Check::Lemma => "lemma",
            Check::Lagrangian => "lagrangian",
            Check::Pair => "pair",
            Check::ConnectionForms => "connection-forms",
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Check {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Check::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown check '{s}'")))
    }
}

fn all_checks() -> Vec<Check> {
    Check::ALL.to_vec()
}

/// Thresholds of every check. All must be positive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Circle test on exact-jet quantities.
    pub exact_jet: f64,
    /// Identities that rely on finite differences (Lemma, Kaehler, connection forms).
    pub finite_difference: f64,
    /// Relative singular-value threshold for the nullity space.
    pub eigen_zero: f64,
    pub conformal: f64,
    pub minimal: f64,
    /// Normalized odd power sums of shape spectra.
    pub austere_odd: f64,
    pub symplectic: f64,
    pub mean_curvature: f64,
    pub ruling_projector: f64,
    /// Second forms restricted to the deep ruling directions.
    pub nullity: f64,
    /// Minimum gap certifying that `F` is not holomorphic.
    pub nonholomorphy_gap: f64,
    /// Isotropy order the `isotropy` check requires.
    pub min_isotropy_order: usize,
    pub normal_directions: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            exact_jet: 1e-8,
            finite_difference: 1e-5,
            eigen_zero: 1e-6,
            conformal: 1e-12,
            minimal: 1e-10,
            austere_odd: 1e-5,
            symplectic: 1e-8,
            mean_curvature: 1e-4,
            ruling_projector: 1e-10,
            nullity: 1e-7,
            nonholomorphy_gap: 1e-2,
            min_isotropy_order: 2,
            normal_directions: 16,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("exact_jet", self.exact_jet),
            ("finite_difference", self.finite_difference),
            ("eigen_zero", self.eigen_zero),
            ("conformal", self.conformal),
            ("minimal", self.minimal),
            ("austere_odd", self.austere_odd),
            ("symplectic", self.symplectic),
            ("mean_curvature", self.mean_curvature),
            ("ruling_projector", self.ruling_projector),
            ("nullity", self.nullity),
            ("nonholomorphy_gap", self.nonholomorphy_gap),
        ];
        for (name, x) in named {
            if !(x.is_finite() && x > 0.0) {
                return Err(Error::InvalidInput(format!("tolerances.{name} must be positive, got {x}")));
            }
        }
        if self.normal_directions == 0 {
            return Err(Error::InvalidInput("tolerances.normal_directions must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surface: Option<SurfaceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling: Option<SamplingSpec>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "all_checks")]
    pub checks: Vec<Check>,
    #[serde(default)]
    pub outputs: Outputs,
}

impl RunConfig {
    pub fn new(sampling: SamplingSpec) -> Self {
        Self {
            surface: None,
            sampling: Some(sampling),
            tolerances: Tolerances::default(),
            checks: all_checks(),
            outputs: Outputs::default(),
        }
    }

    pub fn with_checks(mut self, checks: Vec<Check>) -> Self {
        self.checks = checks;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.tolerances.validate()?;
        match &self.sampling {
            Some(s) => s.validate()?,
            None => return Err(Error::InvalidInput("sampling (with a seed) is required".into())),
        }
        if self.checks.is_empty() {
            return Err(Error::InvalidInput("checks must not be empty".into()));
        }
        Ok(())
    }
}

/// One evaluated sample of one check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub index: usize,
    pub u: f64,
    pub v: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub t: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<[f64; 2]>,
    pub residual: f64,
    pub pass: bool,
    pub breakdown: BTreeMap<String, f64>,
}

impl Row {
    fn at_surface(index: usize, u: f64, v: f64, residual: f64, pass: bool) -> Self {
        Self {
            index,
            u,
            v,
            t: Vec::new(),
            s: None,
            residual,
            pass,
            breakdown: BTreeMap::new(),
        }
    }

    fn at(index: usize, p: &MPoint, residual: f64, pass: bool) -> Self {
        Self {
            t: p.t.clone(),
            ..Self::at_surface(index, p.u, p.v, residual, pass)
        }
    }

    fn with(mut self, key: &str, value: f64) -> Self {
        self.breakdown.insert(key.to_string(), value);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub check: Check,
    pub pass: bool,
    pub threshold: f64,
    pub worst_residual: Option<f64>,
    pub worst_sample: Option<usize>,
    pub degenerate_count: usize,
    pub detail: String,
    pub rows: Vec<Row>,
}

impl CheckSummary {
    fn from_rows(check: Check, threshold: f64, rows: Vec<Row>, degenerate_count: usize, detail: String) -> Self {
        let worst = rows.iter().max_by(|a, b| a.residual.total_cmp(&b.residual));
        Self {
            check,
            pass: !rows.is_empty() && rows.iter().all(|r| r.pass),
            threshold,
            worst_residual: worst.map(|r| r.residual),
            worst_sample: worst.map(|r| r.index),
            degenerate_count,
            detail,
            rows,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSummary {
    pub ambient_dim: usize,
    pub submanifold_dim: usize,
    pub normal_depth: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub format: String,
    pub version: String,
    pub config: RunConfig,
    pub surface: SurfaceSummary,
    pub pass: bool,
    pub checks: Vec<CheckSummary>,
}

impl RunReport {
    pub fn failed(&self) -> impl Iterator<Item = &CheckSummary> {
        self.checks.iter().filter(|c| !c.pass)
    }

    /// Residual table in the versioned CSV layout of [`CSV_COLUMNS`].
    pub fn csv_records(&self) -> Vec<Vec<String>> {
        let join = |xs: &[f64]| xs.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(";");
        let mut out = Vec::new();
        for c in &self.checks {
            for r in &c.rows {
                let breakdown = r
                    .breakdown
                    .iter()
                    .map(|(k, v)| format!("{k}={v:e}"))
                    .collect::<Vec<_>>()
                    .join(";");
                out.push(vec![
                    c.check.to_string(),
                    r.index.to_string(),
                    format!("{:e}", r.u),
                    format!("{:e}", r.v),
                    join(&r.t),
                    r.s.map(|s| join(&s)).unwrap_or_default(),
                    format!("{:e}", r.residual),
                    r.pass.to_string(),
                    breakdown,
                ]);
            }
        }
        out
    }
}

fn residual_rows(rep: &ResidualReport, pass: impl Fn(f64) -> bool) -> Vec<Row> {
    rep.rows
        .iter()
        .map(|r| {
            Row::at(r.index, &r.point, r.residual, pass(r.residual))
                .with("epsilon", r.signs.0)
                .with("delta", r.signs.1)
        })
        .collect()
}

fn austere_rows(rep: &AustereReport) -> Vec<Row> {
    rep.rows
        .iter()
        .map(|r| {
            Row::at(r.index, &r.point, r.spectral.odd_resid, r.pass)
                .with("pair_resid", r.spectral.pair_resid)
                .with("rank", r.spectral.rank as f64)
                .with("nullity", r.spectral.nullity as f64)
                .with("trace_resid", r.spectral.trace_resid)
        })
        .collect()
}

/// Degenerate-sampling outcomes are reported separately from check failures.
fn sweep_result<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(x) => Ok(Some(x)),
        Err(Error::AllDegenerate(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn all_degenerate(check: Check, threshold: f64, n: usize) -> CheckSummary {
    CheckSummary::from_rows(check, threshold, Vec::new(), n, "all samples degenerate".into())
}

/// Runs one check over the configured sampling.
pub fn run_check(s: &Surface, check: Check, cfg: &RunConfig) -> Result<CheckSummary> {
    let tol = &cfg.tolerances;
    let spec = cfg
        .sampling
        .clone()
        .ok_or_else(|| Error::InvalidInput("sampling (with a seed) is required".into()))?;
    let count = spec.count;
    let sampler = Sampler::new(s, spec)?;
    let austere_opts = AustereOptions {
        directions: tol.normal_directions,
        odd_tol: tol.austere_odd,
        eigen_zero: tol.eigen_zero,
        ..AustereOptions::default()
    };
    let n = s.submanifold_dim();
    if matches!(check, Check::Austere | Check::Nullity | Check::Lemma | Check::Lagrangian | Check::Pair) && n < 4 {
        return Err(Error::InvalidInput(format!("check {check} needs N >= 6, surface has N = {}", n + 2)));
    }
    if check == Check::Kaehler && (n % 2 != 0 || n < 4) {
        return Err(Error::InvalidInput(format!("check {check} needs even N >= 6, surface has N = {}", n + 2)));
    }
    let summary = match check {
        Check::Conformal => {
            let pts = sampler.surface_points(count);
            let rows = pts
                .iter()
                .enumerate()
                .map(|(i, &(u, v))| {
                    let j = surface_jet(s, u, v, 1);
                    let (gu, gv) = (j.partial(1, 0), j.partial(0, 1));
                    let dot = gu.dot(gv).abs() / j.lambda2;
                    let diff = (gu.norm_squared() - gv.norm_squared()).abs() / j.lambda2;
                    let r = dot.max(diff);
                    Row::at_surface(i, u, v, r, r < tol.conformal).with("dot", dot).with("norm_diff", diff)
                })
                .collect();
            CheckSummary::from_rows(check, tol.conformal, rows, count - pts.len(), String::new())
        }
        Check::Minimal => {
            let pts = sampler.surface_points(count);
            let rows = pts
                .iter()
                .enumerate()
                .map(|(i, &(u, v))| {
                    let j = surface_jet(s, u, v, 2);
                    let trace = (j.partial(2, 0) + j.partial(0, 2)).norm() / j.lambda2;
                    let r = trace / j.lambda2.sqrt();
                    Row::at_surface(i, u, v, r, r < tol.minimal)
                })
                .collect();
            CheckSummary::from_rows(check, tol.minimal, rows, count - pts.len(), String::new())
        }
        Check::Isotropy => {
            let pts = sampler.surface_points(count);
            let rep = isotropy_order(s, &pts, tol.exact_jet);
            let need = tol.min_isotropy_order;
            let rows = rep
                .rows
                .iter()
                .map(|r| {
                    let worst = r.ellipses.iter().take(need).map(|e| e.worst()).fold(0.0, f64::max);
                    let mut row = Row::at_surface(r.index, r.u, r.v, worst, r.order >= need).with("order", r.order as f64);
                    for e in &r.ellipses {
                        row = row
                            .with(&format!("e{}_dot", e.order), e.dot_resid)
                            .with(&format!("e{}_norm", e.order), e.norm_resid);
                    }
                    row
                })
                .collect();
            let detail = format!("measured order {} of {} (required {need})", rep.order, rep.max_order);
            let degenerate = count - pts.len() + rep.degenerate_count;
            CheckSummary::from_rows(check, tol.exact_jet, rows, degenerate, detail)
        }
        Check::Austere => {
            let pts = sampler.m_points(count);
            match sweep_result(austere_report(s, &pts, &austere_opts))? {
                Some(rep) => {
                    let detail = format!(
                        "worst pair residual {:e}, rank {} at {:.0}% of samples",
                        rep.worst_pair,
                        austere_opts.expected_rank,
                        100.0 * rep.rank_fraction
                    );
                    CheckSummary::from_rows(check, tol.austere_odd, austere_rows(&rep), count - pts.len() + rep.degenerate_count, detail)
                }
                None => all_degenerate(check, tol.austere_odd, count),
            }
        }
        Check::Nullity => {
            let pts = sampler.m_points(count);
            let mut rows = Vec::new();
            let mut degenerate = count - pts.len();
            for (i, p) in pts.iter().enumerate() {
                match nullity_alignment(s, p) {
                    Ok(a) => rows.push(Row::at(i, p, a.v0, a.v0 < tol.nullity).with("v1_min", a.v1)),
                    Err(e) if e.is_degenerate_sample() => degenerate += 1,
                    Err(e) => return Err(e),
                }
            }
            CheckSummary::from_rows(check, tol.nullity, rows, degenerate, String::new())
        }
        Check::Kaehler => {
            let pts = sampler.m_points(count);
            let opts = KaehlerOptions::default();
            let kaehler = sweep_result(kaehler_parallelism_test(s, &pts, &opts))?;
            let cert = sweep_result(nonholomorphy_certificate(s, &pts))?;
            match (kaehler, cert) {
                (Some(k), Some(c)) => {
                    let mut rows = residual_rows(&k, |r| r < tol.finite_difference);
                    let gaps: BTreeMap<usize, f64> = c.rows.iter().map(|r| (r.index, r.residual)).collect();
                    for row in &mut rows {
                        if let Some(&g) = gaps.get(&row.index) {
                            row.breakdown.insert("nonholomorphy_gap".into(), g);
                        }
                    }
                    let detail = format!(
                        "non-holomorphy gap min {:e} (certificate {} at threshold {:e})",
                        c.best,
                        if c.best > tol.nonholomorphy_gap { "holds" } else { "fails" },
                        tol.nonholomorphy_gap
                    );
                    CheckSummary::from_rows(check, tol.finite_difference, rows, count - pts.len() + k.degenerate_count, detail)
                }
                _ => all_degenerate(check, tol.finite_difference, count),
            }
        }
        Check::Lemma => {
            let pts = sampler.m_points(count);
            match sweep_result(t_commutation_test(s, &pts))? {
                Some(rep) => CheckSummary::from_rows(
                    check,
                    tol.finite_difference,
                    residual_rows(&rep, |r| r < tol.finite_difference),
                    count - pts.len() + rep.degenerate_count,
                    String::new(),
                ),
                None => all_degenerate(check, tol.finite_difference, count),
            }
        }
        Check::Lagrangian => {
            let pts = sampler.lift_points(count);
            match sweep_result(lagrangian_report(s, &pts, &LiftOptions::default()))? {
                Some(rep) => {
                    let rows = rep
                        .rows
                        .iter()
                        .map(|r| {
                            let pass = r.symplectic_resid < tol.symplectic && r.mean_curvature_resid < tol.mean_curvature;
                            let mut row = Row::at(r.index, &r.point, r.mean_curvature_resid, pass)
                                .with("symplectic", r.symplectic_resid)
                                .with("mean_curvature_ratio", r.mean_curvature_ratio);
                            row.s = Some(r.s);
                            row
                        })
                        .collect();
                    let detail = format!("worst symplectic residual {:e}", rep.worst_symplectic);
                    CheckSummary::from_rows(check, tol.mean_curvature, rows, count - pts.len() + rep.degenerate_count, detail)
                }
                None => all_degenerate(check, tol.mean_curvature, count),
            }
        }
        Check::Pair => {
            let pts = sampler.m_points(count);
            match sweep_result(associated_pair_report(s, &pts, std::f64::consts::FRAC_PI_4, &austere_opts))? {
                Some(rep) => {
                    let mut rows = austere_rows(&rep);
                    for row in &mut rows {
                        let c = ruling_coincidence(s, row.u, row.v)?;
                        row.pass &= c < tol.ruling_projector;
                        row.breakdown.insert("ruling_projector".into(), c);
                    }
                    CheckSummary::from_rows(check, tol.austere_odd, rows, count - pts.len() + rep.degenerate_count, "phi = pi/4".into())
                }
                None => all_degenerate(check, tol.austere_odd, count),
            }
        }
        Check::ConnectionForms => {
            let pts = sampler.surface_points(count);
            let mut rows = Vec::new();
            let mut degenerate = count - pts.len();
            for (i, &(u, v)) in pts.iter().enumerate() {
                match connection_form_residuals(s, u, v) {
                    Ok(rep) => {
                        let mut row = Row::at_surface(i, u, v, rep.max_residual, rep.max_residual < tol.finite_difference);
                        for r in &rep.rows {
                            row = row.with(&format!("tau{}", r.level), r.tau);
                        }
                        rows.push(row);
                    }
                    Err(e) if e.is_degenerate_sample() => degenerate += 1,
                    Err(e) => return Err(e),
                }
            }
            CheckSummary::from_rows(check, tol.finite_difference, rows, degenerate, String::new())
        }
    };
    Ok(summary)
}

/// Runs every configured check. Sample sweeps run on the current rayon pool.
pub fn run(s: &Surface, cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    let mut checks = cfg.checks.clone();
    checks.sort();
    checks.dedup();
    let summaries = checks
        .iter()
        .map(|&c| run_check(s, c, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(RunReport {
        format: REPORT_FORMAT.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: cfg.clone(),
        surface: SurfaceSummary {
            ambient_dim: s.ambient_dim(),
            submanifold_dim: s.submanifold_dim(),
            normal_depth: s.normal_depth(),
        },
        pass: summaries.iter().all(|c| c.pass),
        checks: summaries,
    })
}
