//! End-to-end acceptance checks, one line per criterion.

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;

use dynpot::arith::{height_vanishing_scan, HeightOptions};
use dynpot::dynamics::{brolin_sample, BrolinParams, EmpiricalMeasure, GreenEvaluator, PolyMap};
use dynpot::equidist::{
    default_test_points, direct_potential, fekete_energy, potential_discrepancy, preschwarzian, schwarzian, DivisorLabel,
};
use dynpot::henon::{det_jacobian_shift, henon_iterate, phi_n, slice_roots, HenonGreen, HenonMap, Line, ShiftMatrix, Y_GUARD};
use dynpot::poly::{BiPoly, UniPoly};
use dynpot::roots::{value_set_roots, vieta_sum_error, RootSet, SolveOptions};
use dynpot::{CRational, Precision};
use dynpot_cli::run::run_in;
use dynpot_cli::ExperimentConfig;

type Outcome = Result<String, String>;
type Criterion = Box<dyn FnOnce(&mut Vec<Certificate>) -> Outcome>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn q(s: &str) -> CRational {
    s.parse().unwrap()
}

fn label(n: u32, m: usize) -> DivisorLabel {
    DivisorLabel { n, m, a: "1".into() }
}

/// A root set's residual bound and, when the polynomial is known exactly,
/// its Vieta sum error.
struct Certificate {
    name: String,
    max_residual: f64,
    vieta: Option<f64>,
}

impl Certificate {
    fn of(name: String, set: &RootSet, exact: Option<&UniPoly<CRational>>) -> Self {
        Certificate {
            name,
            max_residual: set.max_residual(),
            vieta: exact.map(|p| vieta_sum_error(set, p)),
        }
    }
}

fn green_exactness() -> Outcome {
    let start = Instant::now();
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let mut worst: f64 = 0.0;
    for d in [2usize, 3] {
        let mut coeffs = vec!["0"; d + 1];
        coeffs[d] = "1";
        let g = GreenEvaluator::with_defaults(PolyMap::parse(&format!("[{}]", coeffs.join(", "))).unwrap());
        for i in 0..100 {
            let mut r = 10f64.powf(-1.0 + 2.0 * (i as f64 + 0.5) / 100.0);
            if (r - 1.0).abs() < 0.06 {
                r = if r < 1.0 { 0.94 } else { 1.06 };
            }
            let z = Complex64::from_polar(r, golden * i as f64);
            let v = g.green(z).map_err(|e| e.to_string())?.certified(z).map_err(|e| e.to_string())?;
            worst = worst.max((v.value - r.ln().max(0.0)).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(worst <= 1e-10, || format!("max error {worst:e}"))?;
    ensure(secs < 1.0, || format!("took {secs:.2} s"))?;
    Ok(format!("max |g - log+|z|| = {worst:.1e} over 200 points, {secs:.2} s"))
}

fn potential_identity() -> Outcome {
    let start = Instant::now();
    let f = PolyMap::parse("[-1, 0, 1]").unwrap();
    let g = GreenEvaluator::with_defaults(f.clone());
    let mu = brolin_sample(&f, &BrolinParams::new(100_000, 7)).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for t in [c(3.0, 0.0), c(2.0, 2.0), c(-4.0, 0.0)] {
        let gt = g.green(t).unwrap().certified(t).unwrap().value;
        worst = worst.max((mu.log_potential(t).value - gt).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(worst <= 0.01, || format!("max gap {worst:e}"))?;
    ensure(secs < 30.0, || format!("took {secs:.1} s"))?;
    Ok(format!("max gap {worst:.2e} at N = 1e5, {secs:.1} s"))
}

fn equidistribution(certs: &mut Vec<Certificate>) -> Outcome {
    let f = PolyMap::parse("[0.3, 0, 1]").unwrap();
    let g = GreenEvaluator::with_defaults(f.clone());
    let tests = default_test_points(&f);
    let opts = SolveOptions {
        start_precision: Precision::new(256).unwrap(),
        ..SolveOptions::default()
    };
    let one = CRational::real(1);
    let mut summary = Vec::new();
    let mut slowest: f64 = 0.0;
    for m in [1usize, 2] {
        let mut gaps = Vec::new();
        for n in [6u32, 10] {
            let start = Instant::now();
            let roots = value_set_roots(&f, n, m, &one, &opts).map_err(|e| e.to_string())?;
            let secs = start.elapsed().as_secs_f64();
            if n == 10 {
                slowest = slowest.max(secs);
                ensure(roots.precision.bits() == 256, || format!("degree {} needed {} bits", roots.degree, roots.precision.bits()))?;
            }
            let exact = (n == 6).then(|| {
                let it = f.poly().iterate(n, 64).unwrap();
                it.derivative(m).sub(&UniPoly::constant(one.clone()))
            });
            certs.push(Certificate::of(format!("equidist n={n} m={m}"), &roots, exact.as_ref()));
            let nu = EmpiricalMeasure::uniform(roots.points()).unwrap();
            gaps.push(potential_discrepancy(label(n, m), &nu, &g, &tests).map_err(|e| e.to_string())?.max_gap);
        }
        let (g6, g10) = (gaps[0], gaps[1]);
        ensure(g10 < 0.02 && g10 < g6, || format!("m = {m}: gap(6) = {g6:e}, gap(10) = {g10:e}"))?;
        summary.push(format!("m={m}: gap(6) {g6:.2e}, gap(10) {g10:.2e}"));
    }
    ensure(slowest < 60.0, || format!("degree-1023 solve took {slowest:.1} s"))?;
    Ok(format!("{}; n=10 solve {slowest:.1} s", summary.join("; ")))
}

fn closed_form_potential() -> Outcome {
    let f = PolyMap::parse("[0, 0, 1]").unwrap();
    let v = direct_potential(&f, 8, 1, &CRational::real(1), c(2.0, 0.0)).map_err(|e| e.to_string())?;
    // log(2^263 - 1) = 263 log 2 + log(1 - 2^-263)
    let exact = (263.0 * 2f64.ln() + (-(2f64.powi(-263))).ln_1p()) / 255.0;
    let anchor = 263.0 / 255.0 * 2f64.ln();
    ensure((v.value - exact).abs() <= 1e-12, || format!("value {} vs {exact}", v.value))?;
    ensure((v.value - anchor).abs() <= 1e-9, || format!("value {} vs {anchor}", v.value))?;
    Ok(format!("{:.15} vs (263/255) log 2 = {anchor:.15}", v.value))
}

fn schwarzian_remark() -> Outcome {
    let g = GreenEvaluator::with_defaults(PolyMap::parse("[0, 0, 1]").unwrap());
    let z = c(2.0, 0.0);
    let s = schwarzian(&g, 3, z).map_err(|e| e.to_string())?;
    let t = preschwarzian(&g, 3, z).map_err(|e| e.to_string())?;
    let rel = (s.value - c(-7.875, 0.0)).norm() / 7.875;
    let ratio = (s.ratio() - 63.0 / 64.0).norm();
    let gap = (t.gap() + 0.5).norm();
    ensure(rel <= 1e-12, || format!("S = {}", s.value))?;
    ensure(ratio <= 1e-10, || format!("ratio {}", s.ratio()))?;
    ensure(gap <= 1e-10, || format!("pre-Schwarzian gap {}", t.gap()))?;
    Ok(format!("S = {}, ratio {:.12}, T gap {:.12}", s.value.re, s.ratio().re, t.gap().re))
}

fn fekete() -> Outcome {
    let f = PolyMap::parse("[0.3, 0, 1]").unwrap();
    let g = GreenEvaluator::with_defaults(f.clone());
    let mu = brolin_sample(&f, &BrolinParams::new(100_000, 7)).map_err(|e| e.to_string())?;
    let one = CRational::real(1);
    let mut energies = Vec::new();
    let mut last = None;
    for n in [6u32, 10] {
        let roots = value_set_roots(&f, n, 1, &one, &SolveOptions::default()).map_err(|e| e.to_string())?;
        let nu = EmpiricalMeasure::uniform(roots.points()).unwrap();
        let rep = fekete_energy(label(n, 1), &nu, &g, &mu).map_err(|e| e.to_string())?;
        rep.ensure_valid().map_err(|e| e.to_string())?;
        energies.push(rep.energy);
        last = Some(rep);
    }
    let (e6, e10) = (energies[0], energies[1]);
    ensure(e10.abs() < 0.05 && e10.abs() < e6.abs(), || format!("E6 = {e6:e}, E10 = {e10:e}"))?;
    let selfrep = fekete_energy(label(0, 0), &mu, &g, &mu).map_err(|e| e.to_string())?;
    ensure(selfrep.energy == 0.0, || format!("self-test energy {:e}", selfrep.energy))?;
    let rep = last.expect("two rows");
    let dev = (rep.mu_self_energy - rep.mu_self_expected).abs();
    ensure(dev <= 3.0 * rep.mc_stderr, || {
        format!("self-energy {:e} vs {:e}, 3 sigma = {:e}", rep.mu_self_energy, rep.mu_self_expected, 3.0 * rep.mc_stderr)
    })?;
    Ok(format!(
        "E6 {e6:.2e}, E10 {e10:.2e}, self-test 0, self-energy {:.2e} (3 sigma {:.2e})",
        rep.mu_self_energy,
        3.0 * rep.mc_stderr
    ))
}

fn height_vanishing(certs: &mut Vec<Certificate>) -> Outcome {
    let start = Instant::now();
    let opts = HeightOptions {
        tol: 1e-12,
        ..HeightOptions::default()
    };
    let one = rug::Integer::from(1);
    let z2 = PolyMap::parse("[0, 0, 1]").unwrap();
    let rows = height_vanishing_scan(&z2, 1, &one, 1..=10, &opts).map_err(|e| e.to_string())?;
    for (r, n) in rows.iter().zip(1..) {
        let want = n as f64 * 2f64.ln() / (2f64.powi(n) - 1.0);
        ensure((r.hhat - want).abs() <= 1e-12, || format!("z^2, n = {n}: {} vs {want}", r.hhat))?;
    }
    let z2p1 = PolyMap::parse("[1, 0, 1]").unwrap();
    let rows1 = height_vanishing_scan(&z2p1, 1, &one, 1..=9, &opts).map_err(|e| e.to_string())?;
    let h: Vec<f64> = rows1.iter().map(|r| r.hhat).collect();
    for (r, n) in rows1.iter().zip(1..) {
        ensure(r.hhat - r.hhat_err > 0.0, || format!("z^2+1, n = {n}: {} not positive", r.hhat))?;
    }
    for n in 4..9 {
        ensure(h[n] <= h[n - 1] + 1e-3, || format!("z^2+1: h({}) = {} > h({n}) = {}", n + 1, h[n], h[n - 1]))?;
    }
    ensure(h[8] < 0.05, || format!("z^2+1: h(9) = {}", h[8]))?;
    for (name, rows) in [("z^2", &rows), ("z^2+1", &rows1)] {
        for r in rows.iter() {
            let n = r.provenance.as_ref().map_or(0, |p| p.n);
            certs.push(Certificate {
                name: format!("height {name} n={n}"),
                max_residual: r.roots.max_residual,
                vieta: Some(r.vieta_error),
            });
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 300.0, || format!("took {secs:.0} s"))?;
    Ok(format!("z^2 closed form to 1e-12 for n <= 10; z^2+1: h(4) {:.4}, h(9) {:.4}; {secs:.1} s", h[3], h[8]))
}

fn henon_exactness() -> Outcome {
    let h = HenonMap::parse("[-1.1, 0, 1]", "0.3").unwrap();
    let a = ShiftMatrix::scalar(CRational::real(1)).unwrap();
    for n in 1..=6u32 {
        let pair = henon_iterate(&h, n).map_err(|e| e.to_string())?;
        ensure(pair.p.deg_z() == Some(1 << n), || format!("deg_z P_{n} = {:?}", pair.p.deg_z()))?;
        if n <= 5 {
            let want = BiPoly::constant(q("0.3").pow_u32(n));
            ensure(pair.jacobian() == want, || format!("Jacobian of f^{n} is not 0.3^{n}"))?;
        }
        let det = det_jacobian_shift(&h, n, &a).map_err(|e| e.to_string())?;
        ensure(det.total_degree() == Some((1 << n) - 1), || format!("deg det, n = {n}: {:?}", det.total_degree()))?;
    }
    Ok("deg_z P_n = 2^n (n <= 6), J = 0.3^n (n <= 5), deg det(Df^n - I) = 2^n - 1 (n <= 6)".into())
}

fn henon_convergence(certs: &mut Vec<Certificate>) -> Outcome {
    let g = HenonGreen::with_defaults(HenonMap::parse("[-1.1, 0, 1]", "0.3").unwrap());
    let a = ShiftMatrix::scalar(CRational::real(1)).unwrap();
    let pts: Vec<(Complex64, Complex64)> = (0..8)
        .map(|k| (Complex64::from_polar(3.0, std::f64::consts::TAU * k as f64 / 8.0 + 0.3), c(0.5, 0.0)))
        .collect();
    let mut greens = Vec::new();
    for &pt in &pts {
        let gv = g.green_plus(pt).map_err(|e| e.to_string())?;
        ensure(gv.is_certified() && gv.value > gv.err, || format!("{pt:?} is not a certified basin point"))?;
        let guard = g.y_locus_guard(&a, pt).map_err(|e| e.to_string())?;
        ensure(guard > Y_GUARD, || format!("guard {guard:e} at {pt:?}"))?;
        greens.push(gv.value);
    }
    let mut avg = Vec::new();
    let mut ratios = Vec::new();
    for n in 4..=8u32 {
        let mut s = 0.0;
        for (&pt, gv) in pts.iter().zip(&greens) {
            s += (phi_n(&g, n, &a, pt).map_err(|e| e.to_string())? - gv).abs();
        }
        let mean = s / pts.len() as f64;
        avg.push(mean);
        ratios.push(mean / (n as f64 * 2f64.powi(-(n as i32))));
    }
    let (a5, a8) = (avg[1], avg[4]);
    ensure(a8 < 0.05 && a8 < a5, || format!("mean gap n=5 {a5:e}, n=8 {a8:e}"))?;
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(0.0, f64::max);
    ensure(lo > 0.0 && hi / lo <= 10.0, || format!("ratio band [{lo:e}, {hi:e}]"))?;

    let circle: Vec<Complex64> = (0..16)
        .map(|k| Complex64::from_polar(10.0, std::f64::consts::TAU * k as f64 / 16.0))
        .collect();
    let slice = slice_roots(&g, 6, &a, &Line::w_zero(), &circle, &SolveOptions::default()).map_err(|e| e.to_string())?;
    certs.push(Certificate::of("henon slice n=6".into(), &slice.roots, slice.restriction.as_ref()));
    Ok(format!("mean gap n=5 {a5:.3e}, n=8 {a8:.3e}; ratio band [{lo:.3}, {hi:.3}]"))
}

fn root_certificates(certs: &[Certificate]) -> Outcome {
    ensure(!certs.is_empty(), || "no root sets were collected".into())?;
    let mut vieta_checked = 0;
    for c in certs {
        ensure(c.max_residual <= 1e-10, || format!("{}: residual {:e}", c.name, c.max_residual))?;
        if let Some(v) = c.vieta {
            ensure(v <= 1e-8, || format!("{}: Vieta error {v:e}", c.name))?;
            vieta_checked += 1;
        }
    }
    let worst = certs.iter().map(|c| c.max_residual).fold(0.0, f64::max);
    Ok(format!("{} root sets, worst residual {worst:.1e}, {vieta_checked} Vieta checks", certs.len()))
}

const REPRO_CONFIGS: &[&str] = &[
    r#"
kind = "green"
output_dir = "green"
[map]
coeffs = "[-1, 0, 1]"
"#,
    r#"
kind = "equidist"
output_dir = "equidist"
[map]
coeffs = "[0.3, 0, 1]"
[params]
n = [4, 8]
m = 2
a = "1"
"#,
    r#"
kind = "schwarzian"
output_dir = "schwarzian"
[map]
coeffs = "[0, 0, 1]"
[params]
n = [2, 6]
points = [[2.0, 0.0], [-1.5, 0.7]]
"#,
    r#"
kind = "fekete"
output_dir = "fekete"
[map]
coeffs = "[0.3, 0, 1]"
[params]
n = [4, 6]
m = 1
a = "1"
seed = 11
samples = 20000
"#,
    r#"
kind = "height"
output_dir = "height"
[map]
coeffs = "[1, 0, 1]"
[params]
n = [1, 6]
m = 1
a = "1"
"#,
    r#"
kind = "henon"
output_dir = "henon"
[map]
coeffs = "[-1.1, 0, 1]"
delta = "0.3"
[params]
n = [1, 7]
lambda = "1"
henon_points = [[3.0, 0.0, 0.5, 0.0], [0.0, 3.0, 0.5, 0.0]]
line = { base = ["0", "0"], dir = ["1", "0"] }
"#,
];

fn artifact_bodies(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let manifest: dynpot_cli::RunManifest = serde_json::from_slice(&fs::read(dir.join("manifest.json")).unwrap()).unwrap();
    manifest
        .files
        .iter()
        .map(|f| (f.path.clone(), fs::read(dir.join(&f.path)).unwrap()))
        .collect()
}

fn reproducibility() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut files = 0;
    for text in REPRO_CONFIGS {
        let cfg = ExperimentConfig::parse(text).map_err(|e| e.to_string())?;
        let kind = cfg.kind.name();
        let runs: Vec<_> = ["first", "second"]
            .iter()
            .map(|r| {
                let dir = tmp.path().join(r).join(kind);
                run_in(&cfg, &dir).map(|_| artifact_bodies(&dir))
            })
            .collect::<Result<_, _>>()
            .map_err(|e| format!("{kind}: {e}"))?;
        ensure(runs[0].len() == runs[1].len(), || format!("{kind}: file lists differ"))?;
        for ((pa, a), (pb, b)) in runs[0].iter().zip(&runs[1]) {
            ensure(pa == pb && a == b, || format!("{kind}: {pa} differs between runs"))?;
        }
        files += runs[0].len();
    }
    Ok(format!("{} configs, {files} artifacts byte-identical across two runs", REPRO_CONFIGS.len()))
}

fn main() -> ExitCode {
    let mut certs = Vec::new();
    let criteria: Vec<(&str, Criterion)> = vec![
        ("green exactness", Box::new(|_| green_exactness())),
        ("potential identity", Box::new(|_| potential_identity())),
        ("derivative equidistribution", Box::new(equidistribution)),
        ("closed-form direct potential", Box::new(|_| closed_form_potential())),
        ("Schwarzian asymptotics", Box::new(|_| schwarzian_remark())),
        ("Fekete energy", Box::new(|_| fekete())),
        ("height vanishing", Box::new(height_vanishing)),
        ("Hénon exactness", Box::new(|_| henon_exactness())),
        ("Hénon convergence", Box::new(henon_convergence)),
        ("root-solver certificates", Box::new(|c| root_certificates(c))),
        ("reproducibility", Box::new(|_| reproducibility())),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(|| check(&mut certs))).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} {name}: PASS [{secs:.1} s] {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL [{secs:.1} s] {why}", i + 1);
            }
        }
    }
    if failed == 0 {
        println!("acceptance: all 11 criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} of 11 criteria fail");
        ExitCode::FAILURE
    }
}
