use std::collections::BTreeSet;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use dynpot::arith::{height_vanishing_scan, write_scan_csv, CertStatus, HeightOptions};
use dynpot::dynamics::{brolin_sample, BrolinParams, EmpiricalMeasure, GreenEvaluator, GreenStatus, GreenValue, PolyMap};
use dynpot::equidist::{
    default_test_points, fekete_energy, potential_discrepancy, preschwarzian, schwarzian, DiscrepancyReport, DivisorLabel,
    Predicted,
};
use dynpot::henon::{phi_n, slice_roots, HenonGreen, HenonMap, Line};
use dynpot::roots::{value_set_roots, vieta_sum_error, RootSet, RootSetHeader, RootStatus, SolveOptions};
use dynpot::{CRational, Precision};

use crate::config::{ConfigError, ExperimentConfig, Kind};
use crate::manifest::{sha256_hex, ArtifactWriter, RunManifest, StepRecord};

/// Overrides `output_dir` of every config.
pub const OUTPUT_DIR_ENV: &str = "DYNPOT_OUTPUT_DIR";

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] dynpot::Error),
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl RunError {
    /// 2 for rejected input, 3 for numeric failure, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        use dynpot::Error as E;
        match self {
            RunError::Config(_) => 2,
            RunError::Core(E::InvalidInput(_) | E::Parse(_) | E::Capacity { .. } | E::ZeroPolynomial(_) | E::Degenerate(_)) => 2,
            RunError::Core(E::Io(_)) => 1,
            RunError::Core(_) => 3,
            RunError::Io(_) | RunError::Csv(_) | RunError::Json(_) => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunStatus {
    Ok,
    /// Every artifact was written, but some value is only enclosed in an
    /// interval or was refused by a guard.
    Partial,
}

impl RunStatus {
    pub fn label(self) -> &'static str {
        match self {
            RunStatus::Ok => "ok",
            RunStatus::Partial => "partial",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Ok => 0,
            RunStatus::Partial => 4,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub manifest: PathBuf,
    pub status: RunStatus,
}

/// Runs into `output_dir`, or into `$DYNPOT_OUTPUT_DIR` when set.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutcome, RunError> {
    let dir = std::env::var_os(OUTPUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| cfg.output_dir.clone());
    run_in(cfg, &dir)
}

pub fn run_in(cfg: &ExperimentConfig, dir: &Path) -> Result<RunOutcome, RunError> {
    cfg.validate()?;
    let started = Instant::now();
    let mut ctx = Ctx {
        writer: ArtifactWriter::new(dir)?,
        steps: Vec::new(),
        precisions: BTreeSet::new(),
        partial: false,
    };
    match cfg.kind {
        Kind::Green => green(cfg, &mut ctx)?,
        Kind::Equidist => equidist(cfg, &mut ctx)?,
        Kind::Schwarzian => schwarzian_scan(cfg, &mut ctx)?,
        Kind::Fekete => fekete(cfg, &mut ctx)?,
        Kind::Height => height(cfg, &mut ctx)?,
        Kind::Henon => henon(cfg, &mut ctx)?,
    }
    let status = if ctx.partial { RunStatus::Partial } else { RunStatus::Ok };
    let manifest = RunManifest {
        kind: cfg.kind.name().to_string(),
        config_hash: sha256_hex(cfg.canonical_json().as_bytes()),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        precision_bits: ctx.precisions.into_iter().collect(),
        status: status.label().to_string(),
        wall_time_s: started.elapsed().as_secs_f64(),
        steps: ctx.steps,
        files: Vec::new(),
    };
    let path = ctx.writer.finish(manifest)?;
    Ok(RunOutcome {
        dir: dir.to_path_buf(),
        manifest: path,
        status,
    })
}

struct Ctx {
    writer: ArtifactWriter,
    steps: Vec<StepRecord>,
    precisions: BTreeSet<u32>,
    partial: bool,
}

impl Ctx {
    fn step(&mut self, name: String, status: &str, started: Instant) {
        if status != "ok" && status != "certified" {
            self.partial = true;
        }
        self.steps.push(StepRecord {
            name,
            status: status.to_string(),
            wall_time_s: started.elapsed().as_secs_f64(),
        });
    }

    fn roots(&mut self, rel: &str, set: &RootSet) -> Result<(), RunError> {
        let mut body = Vec::new();
        set.write_csv(&mut body)?;
        self.writer.write(rel, &body)?;
        self.precisions.insert(set.precision.bits());
        Ok(())
    }

    fn json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<(), RunError> {
        let mut body = serde_json::to_vec_pretty(value)?;
        body.push(b'\n');
        self.writer.write(rel, &body)?;
        Ok(())
    }
}

/// CSV with a fixed header; values are written already formatted.
struct Table {
    out: csv::Writer<Vec<u8>>,
}

impl Table {
    fn new(header: &[&str]) -> Result<Self, RunError> {
        let mut out = csv::Writer::from_writer(Vec::new());
        out.write_record(header)?;
        Ok(Table { out })
    }

    fn row(&mut self, cells: Vec<String>) -> Result<(), RunError> {
        self.out.write_record(&cells)?;
        Ok(())
    }

    fn finish(self, ctx: &mut Ctx, rel: &str) -> Result<(), RunError> {
        let body = self.out.into_inner().map_err(|e| io::Error::other(e.to_string()))?;
        ctx.writer.write(rel, &body)?;
        Ok(())
    }
}

fn e(x: f64) -> String {
    format!("{x:e}")
}

fn blank(k: usize) -> Vec<String> {
    vec![String::new(); k]
}

fn iterates(cfg: &ExperimentConfig) -> std::ops::RangeInclusive<u32> {
    let [lo, hi] = cfg.params.n.expect("validated");
    lo..=hi
}

fn parse_c(field: &str, s: &str) -> Result<CRational, ConfigError> {
    s.parse().map_err(|e: dynpot::Error| ConfigError {
        field: field.to_string(),
        message: e.to_string(),
    })
}

fn solve_options(cfg: &ExperimentConfig) -> Result<SolveOptions, RunError> {
    Ok(SolveOptions {
        tol: cfg.params.tol,
        max_sweeps: cfg.params.max_sweeps,
        start_precision: Precision::new(cfg.params.precision)?,
        ..SolveOptions::default()
    })
}

fn poly_map(cfg: &ExperimentConfig) -> Result<(PolyMap, GreenEvaluator), RunError> {
    let f = PolyMap::parse(&cfg.map.coeffs)?;
    let g = GreenEvaluator::new(f.clone(), cfg.params.max_iter, cfg.params.tol)?;
    Ok((f, g))
}

fn root_status(set: &RootSet) -> &'static str {
    match set.status {
        RootStatus::Certified => "certified",
        RootStatus::ExcludedValue => "excluded-value",
    }
}

fn green_label(v: &GreenValue) -> &'static str {
    match v.status {
        GreenStatus::Undecided => "undecided",
        _ if !v.is_certified() => "precision-limited",
        GreenStatus::Escaped => "escaped",
        GreenStatus::Trapped { .. } => "trapped",
    }
}

fn green(cfg: &ExperimentConfig, ctx: &mut Ctx) -> Result<(), RunError> {
    let t0 = Instant::now();
    let (f, g) = poly_map(cfg)?;
    let points: Vec<Complex64> = match &cfg.params.points {
        Some(p) => p.iter().map(|&[re, im]| Complex64::new(re, im)).collect(),
        None => default_test_points(&f),
    };
    let mut t = Table::new(&["re", "im", "value", "err", "lower", "upper", "status", "iterations"])?;
    let mut worst = "ok";
    for z in points {
        let v = g.green(z)?;
        let (lo, hi) = v.interval();
        let label = green_label(&v);
        if !v.is_certified() {
            worst = "partial";
        }
        t.row(vec![e(z.re), e(z.im), e(v.value), e(v.err), e(lo), e(hi), label.into(), v.iterations.to_string()])?;
    }
    t.finish(ctx, "green.csv")?;
    ctx.step("green".into(), worst, t0);
    Ok(())
}

#[derive(Serialize)]
struct EquidistRecord {
    report: DiscrepancyReport,
    roots: RootSetHeader,
}

fn equidist(cfg: &ExperimentConfig, ctx: &mut Ctx) -> Result<(), RunError> {
    let (f, g) = poly_map(cfg)?;
    let p = &cfg.params;
    let m = p.m.expect("validated");
    let a_str = p.a.clone().expect("validated");
    let a = parse_c("params.a", &a_str)?;
    let opts = solve_options(cfg)?;
    let tests = default_test_points(&f);
    let mut t = Table::new(&["n", "degree", "max_gap", "gap_err", "max_residual", "precision_bits", "status"])?;
    let mut records = Vec::new();
    for n in iterates(cfg) {
        let t0 = Instant::now();
        let roots = value_set_roots(&f, n, m, &a, &opts)?;
        let nu = EmpiricalMeasure::uniform(roots.points())?;
        let label = DivisorLabel { n, m, a: a_str.clone() };
        let rep = potential_discrepancy(label, &nu, &g, &tests)?;
        let gap_err = rep.errs.iter().copied().fold(0.0, f64::max);
        let status = root_status(&roots);
        t.row(vec![
            n.to_string(),
            roots.degree.to_string(),
            e(rep.max_gap),
            e(gap_err),
            e(roots.max_residual()),
            roots.precision.bits().to_string(),
            status.into(),
        ])?;
        ctx.roots(&format!("roots/n{n}.csv"), &roots)?;
        records.push(EquidistRecord {
            report: rep,
            roots: roots.header(),
        });
        ctx.step(format!("n={n}"), status, t0);
    }
    t.finish(ctx, "equidist.csv")?;
    ctx.json("reports.json", &records)
}

fn predicted_cells(r: &Predicted) -> Vec<String> {
    vec![
        e(r.value.re),
        e(r.value.im),
        e(r.predicted.re),
        e(r.predicted.im),
        e((r.ratio() - 1.0).norm()),
    ]
}

fn schwarzian_scan(cfg: &ExperimentConfig, ctx: &mut Ctx) -> Result<(), RunError> {
    let (_, g) = poly_map(cfg)?;
    let points: Vec<Complex64> = cfg.params.points.as_ref().expect("validated").iter().map(|&[re, im]| Complex64::new(re, im)).collect();
    let mut t = Table::new(&[
        "n", "re", "im", "s_re", "s_im", "s_pred_re", "s_pred_im", "s_ratio_dev", "t_re", "t_im", "t_pred_re", "t_pred_im",
        "t_ratio_dev", "status",
    ])?;
    for n in iterates(cfg) {
        let t0 = Instant::now();
        let mut worst = "ok";
        for &z in &points {
            let mut cells = vec![n.to_string(), e(z.re), e(z.im)];
            match (schwarzian(&g, n, z), preschwarzian(&g, n, z)) {
                (Ok(s), Ok(p)) => {
                    cells.extend(predicted_cells(&s));
                    cells.extend(predicted_cells(&p));
                    cells.push("ok".into());
                }
                (Err(err), _) | (_, Err(err)) => match err {
                    dynpot::Error::Guard(_) | dynpot::Error::Undecided { .. } => {
                        worst = "guard";
                        cells.extend(blank(10));
                        cells.push("guard".into());
                    }
                    other => return Err(other.into()),
                },
            }
            t.row(cells)?;
        }
        ctx.step(format!("n={n}"), worst, t0);
    }
    t.finish(ctx, "schwarzian.csv")
}

fn fekete(cfg: &ExperimentConfig, ctx: &mut Ctx) -> Result<(), RunError> {
    let (f, g) = poly_map(cfg)?;
    let p = &cfg.params;
    let m = p.m.expect("validated");
    let a_str = p.a.clone().expect("validated");
    let a = parse_c("params.a", &a_str)?;
    let opts = solve_options(cfg)?;
    let t0 = Instant::now();
    let mu = brolin_sample(&f, &BrolinParams::new(p.samples, p.seed.expect("validated")))?;
    ctx.step("brolin".into(), "ok", t0);
    let mut t = Table::new(&[
        "n", "atoms", "samples", "energy", "mu_self_energy", "mc_stderr", "mu_self_expected", "excluded_pairs", "total_pairs",
        "status",
    ])?;
    for n in iterates(cfg) {
        let t0 = Instant::now();
        let roots = value_set_roots(&f, n, m, &a, &opts)?;
        ctx.precisions.insert(roots.precision.bits());
        let nu = EmpiricalMeasure::uniform(roots.points())?;
        let rep = fekete_energy(DivisorLabel { n, m, a: a_str.clone() }, &nu, &g, &mu)?;
        let status = if rep.valid { root_status(&roots) } else { "invalid" };
        t.row(vec![
            n.to_string(),
            rep.nu_atoms.to_string(),
            rep.samples.to_string(),
            e(rep.energy),
            e(rep.mu_self_energy),
            e(rep.mc_stderr),
            e(rep.mu_self_expected),
            rep.excluded_pairs.to_string(),
            rep.total_pairs.to_string(),
            status.into(),
        ])?;
        ctx.step(format!("n={n}"), status, t0);
    }
    t.finish(ctx, "fekete.csv")
}

fn height(cfg: &ExperimentConfig, ctx: &mut Ctx) -> Result<(), RunError> {
    let f = PolyMap::parse(&cfg.map.coeffs)?;
    let p = &cfg.params;
    let a: rug::Integer = p.a.as_deref().expect("validated").trim().parse().map_err(|_| ConfigError {
        field: "params.a".into(),
        message: "must be an integer for height experiments".into(),
    })?;
    let defaults = HeightOptions::default();
    let opts = HeightOptions {
        tol: p.tol,
        solve: SolveOptions {
            tol: p.tol,
            max_sweeps: p.max_sweeps,
            start_precision: defaults.solve.start_precision.max(Precision::new(p.precision)?),
            ..defaults.solve
        },
        green_max_iter: p.max_iter,
    };
    let t0 = Instant::now();
    let rows = height_vanishing_scan(&f, p.m.expect("validated"), &a, iterates(cfg), &opts)?;
    for r in &rows {
        ctx.precisions.insert(r.roots.precision_bits);
        let n = r.provenance.as_ref().map_or(0, |p| p.n);
        ctx.steps.push(StepRecord {
            name: format!("n={n}"),
            status: r.status.label().to_string(),
            wall_time_s: 0.0,
        });
        if matches!(r.status, CertStatus::Partial { .. }) {
            ctx.partial = true;
        }
    }
    // the scan runs rows concurrently; only the total is timed
    ctx.step("scan".into(), "ok", t0);
    let mut body = Vec::new();
    write_scan_csv(&rows, &mut body)?;
    ctx.writer.write("height.csv", &body)?;
    ctx.json("heights.json", &rows)
}

fn henon(cfg: &ExperimentConfig, ctx: &mut Ctx) -> Result<(), RunError> {
    let p = &cfg.params;
    let h = HenonMap::parse(&cfg.map.coeffs, cfg.map.delta.as_deref().expect("validated"))?;
    let g = HenonGreen::new(h, p.max_iter, p.tol)?;
    let a = cfg.shift_matrix()?;
    if let Some(points) = &p.henon_points {
        let mut t = Table::new(&["n", "point", "z_re", "z_im", "w_re", "w_im", "phi", "green", "green_err", "gap", "status"])?;
        let pts: Vec<(Complex64, Complex64)> = points
            .iter()
            .map(|&[zr, zi, wr, wi]| (Complex64::new(zr, zi), Complex64::new(wr, wi)))
            .collect();
        let greens = pts.iter().map(|&pt| g.green_plus(pt)).collect::<Result<Vec<_>, _>>()?;
        for n in iterates(cfg) {
            let t0 = Instant::now();
            let mut worst = "ok";
            for (i, (&pt, gv)) in pts.iter().zip(&greens).enumerate() {
                let mut cells = vec![n.to_string(), i.to_string(), e(pt.0.re), e(pt.0.im), e(pt.1.re), e(pt.1.im)];
                let phi = match phi_n(&g, n, &a, pt) {
                    Ok(v) => Ok(v),
                    Err(dynpot::Error::Guard(_)) => Err("guard"),
                    Err(other) => return Err(other.into()),
                };
                let status = match (phi, gv.is_certified()) {
                    (Ok(phi), true) => {
                        cells.extend([e(phi), e(gv.value), e(gv.err), e((phi - gv.value).abs())]);
                        "ok"
                    }
                    (Ok(phi), false) => {
                        cells.extend([e(phi), String::new(), String::new(), String::new()]);
                        green_label(gv)
                    }
                    (Err(s), _) => {
                        cells.extend(blank(4));
                        s
                    }
                };
                if status != "ok" {
                    worst = status;
                }
                cells.push(status.into());
                t.row(cells)?;
            }
            ctx.step(format!("phi n={n}"), worst, t0);
        }
        t.finish(ctx, "henon_phi.csv")?;
    }
    if let Some(ls) = &p.line {
        let line = Line::new(
            [parse_c("params.line.base", &ls.base[0])?, parse_c("params.line.base", &ls.base[1])?],
            [parse_c("params.line.dir", &ls.dir[0])?, parse_c("params.line.dir", &ls.dir[1])?],
        )?;
        let r = p.test_radius.unwrap_or(10.0);
        let tests: Vec<Complex64> = (0..16)
            .map(|k| Complex64::from_polar(r, std::f64::consts::TAU * k as f64 / 16.0))
            .collect();
        let opts = solve_options(cfg)?;
        let mut t = Table::new(&["n", "degree", "max_gap", "gap_err", "max_residual", "vieta_error", "precision_bits", "status"])?;
        for n in iterates(cfg) {
            let t0 = Instant::now();
            let s = slice_roots(&g, n, &a, &line, &tests, &opts)?;
            let vieta = s.restriction.as_ref().map(|poly| e(vieta_sum_error(&s.roots, poly))).unwrap_or_default();
            let gap_err = s.report.errs.iter().copied().fold(0.0, f64::max);
            let status = root_status(&s.roots);
            t.row(vec![
                n.to_string(),
                s.degree.to_string(),
                e(s.report.max_gap),
                e(gap_err),
                e(s.roots.max_residual()),
                vieta,
                s.roots.precision.bits().to_string(),
                status.into(),
            ])?;
            ctx.roots(&format!("roots/slice_n{n}.csv"), &s.roots)?;
            ctx.step(format!("slice n={n}"), status, t0);
        }
        t.finish(ctx, "henon_slice.csv")?;
    }
    Ok(())
}
