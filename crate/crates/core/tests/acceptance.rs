//! End-to-end acceptance suite. Prints one line per criterion and exits nonzero if any fails.

use std::path::{Path, PathBuf};
use std::process::Command;

use num_complex::Complex64;
use tensor_heston::analytics::{char_v, char_y, empirical_char_v, empirical_char_y, exp_moment_bound};
use tensor_heston::filipovic::{forward_cov, inner_w, make_h, shift, CurveElement, FilipovicSpace, ForwardMc, KernelFrame};
use tensor_heston::harness::{parse_config, run_scenario, RunOptions};
use tensor_heston::mc::{combined_z, par_map, sample_covariance, ComplexEstimate, Estimate};
use tensor_heston::operator::{basis, tensor_square, Covariance, HVector, OperatorMatrix};
use tensor_heston::ou::{sample_y_exact, spectral_abscissa, OuSpec, TimeGrid};
use tensor_heston::projection::{cir_mean, cir_params, project, projected_path, terminal_v_proj};
use tensor_heston::rng::{Channel, NoiseStream};
use tensor_heston::variance::{
    drift_operator_form, drift_phi, frechet_check, gamma_factor, mean_consistency_error, sqrt_v, variance_of, UnitProcess,
};
use tensor_heston::vol_ou::{cond_char_x, cov_x, terminal_x, XSpec};

const Z_LIMIT: f64 = 4.0;
const EXACT: f64 = 1e-12;

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new() -> Self {
        Self {
            passed: true,
            detail: String::new(),
        }
    }

    fn record(&mut self, ok: bool, what: String) {
        self.passed &= ok;
        if !self.detail.is_empty() {
            self.detail.push_str("; ");
        }
        self.detail.push_str(&what);
        if !ok {
            self.detail.push_str(" [fail]");
        }
    }
}

struct Probe(NoiseStream);

impl Probe {
    fn new(seed: u64) -> Self {
        Self(NoiseStream::new(seed, 1 << 40, Channel::Exact))
    }

    fn vector(&mut self, n: usize) -> HVector {
        self.0.normal_vector(n)
    }

    fn unit(&mut self, n: usize) -> HVector {
        let v = self.vector(n);
        let norm = v.norm();
        v / norm
    }

    fn matrix(&mut self, n: usize) -> OperatorMatrix {
        OperatorMatrix::from_fn(n, n, |_, _| self.0.normal())
    }

    /// `0.4 G − 1.2 Id`, redrawn until the spectrum lies in the left half plane.
    fn stable_generator(&mut self, n: usize) -> OperatorMatrix {
        loop {
            let a = self.matrix(n) * 0.4 - OperatorMatrix::identity(n, n) * 1.2;
            if spectral_abscissa(&a) < -0.1 {
                return a;
            }
        }
    }
}

fn random_ou(seed: u64, n: usize, centred: bool) -> OuSpec {
    let mut p = Probe::new(seed);
    let a = p.stable_generator(n);
    let eta = OperatorMatrix::identity(n, n) + p.matrix(n) * 0.2;
    let l = p.matrix(n) * 0.5;
    let q = Covariance::new(&l * l.transpose() / n as f64 + OperatorMatrix::identity(n, n) * 0.2).unwrap();
    let y0 = if centred { HVector::zeros(n) } else { p.vector(n) * 0.5 };
    OuSpec::new(a, eta, q, y0).unwrap()
}

fn gaussian_law_of_driver() -> Outcome {
    let mut out = Outcome::new();
    let spec = random_ou(101, 4, false);
    let samples = sample_y_exact(&spec, 1.0, 100_000, 1, 200).unwrap();
    let mut p = Probe::new(102);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let f = p.vector(4) * 0.7;
        let est = empirical_char_y(&samples, &f);
        worst = worst.max(est.z_score(char_y(&spec, 1.0, &f, 200).unwrap()));
    }
    out.record(worst <= Z_LIMIT, format!("worst z {worst:.2} over 10 frequencies (limit {Z_LIMIT})"));
    out
}

fn variance_structure() -> Outcome {
    let mut out = Outcome::new();
    let n = 8;
    let mut p = Probe::new(201);
    let (mut sym, mut psd, mut norm, mut root, mut chol): (bool, bool, f64, f64, f64) = (true, true, 0.0, 0.0, 0.0);
    for _ in 0..1000 {
        let y = p.vector(n);
        let v = variance_of(&y);
        let m = v.matrix().clone();
        let scale = y.norm_squared();
        sym &= m == m.transpose();
        for _ in 0..3 {
            let f = p.vector(n);
            psd &= v.apply(&f).dot(&f) >= 0.0;
        }
        norm = norm.max((m.norm() - scale).abs() / scale);
        let r = sqrt_v(&v);
        root = root.max((&r * &r - &m).norm() / scale);
        for _ in 0..20 {
            let g = gamma_factor(&p.unit(n), &y).unwrap();
            chol = chol.max((&g * g.transpose() - &m).norm() / scale);
        }
    }
    out.record(sym, "symmetry exact".into());
    out.record(psd, "<Vf,f> >= 0".into());
    out.record(norm <= EXACT, format!("norm identity {norm:.1e}"));
    out.record(root <= EXACT, format!("square root {root:.1e}"));
    out.record(chol <= EXACT, format!("factor identity {chol:.1e}"));
    out
}

fn variance_characteristic_functional() -> Outcome {
    let mut out = Outcome::new();
    let spec = random_ou(301, 4, true);
    let samples = sample_y_exact(&spec, 1.0, 1_000_000, 3, 200).unwrap();
    let mut p = Probe::new(302);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let (f, g) = (p.vector(4) * 0.6, p.vector(4) * 0.6);
        let est = empirical_char_v(&samples, &f, &g);
        worst = worst.max(est.z_score(char_v(&spec, 1.0, &f, &g, 200).unwrap()));
    }
    out.record(worst <= Z_LIMIT, format!("worst z {worst:.2} over 20 pairs (limit {Z_LIMIT})"));
    out
}

fn fernique_bound() -> Outcome {
    let mut out = Outcome::new();
    let spec = random_ou(401, 4, false);
    let samples = sample_y_exact(&spec, 1.0, 100_000, 4, 200).unwrap();
    let k = exp_moment_bound(&spec, 1.0, 0.0, 200).unwrap().k;
    for s in [0.2, 0.4, 0.8] {
        let theta = s / (4.0 * k);
        let vals: Vec<f64> = samples.iter().map(|y| (theta * y.norm_squared()).exp()).collect();
        let est = Estimate::from_samples(&vals);
        let b = exp_moment_bound(&spec, 1.0, theta, 200).unwrap().bound;
        out.record(
            b - est.mean >= est.stderr,
            format!("theta={s}/(4k): mc {:.4} +- {:.4} <= bound {b:.4}", est.mean, est.stderr),
        );
    }
    out
}

fn three_factor(unit: UnitProcess) -> XSpec {
    let ou = OuSpec::new(
        OperatorMatrix::from_row_slice(3, 3, &[-1.0, 0.3, 0.0, 0.0, -0.8, 0.2, 0.1, 0.0, -1.5]),
        OperatorMatrix::from_diagonal(&HVector::from_vec(vec![0.8, 0.6, 1.0])),
        Covariance::identity(3),
        HVector::from_vec(vec![0.5, 1.0, -0.5]),
    )
    .unwrap();
    XSpec::new(
        OperatorMatrix::from_row_slice(3, 3, &[-0.5, 0.1, 0.0, 0.0, -1.0, 0.0, 0.2, 0.0, -0.7]),
        Covariance::diagonal(&[1.0, 0.5, 0.8]).unwrap(),
        HVector::from_vec(vec![0.2, -0.1, 0.4]),
        unit,
        ou,
    )
    .unwrap()
}

/// Midpoint rule on 10^6 cells for the scalar golden scenario.
fn scalar_cov_x_oracle() -> f64 {
    let n = 1_000_000;
    let h = 1.0 / n as f64;
    (0..n)
        .map(|i| {
            let s = (i as f64 + 0.5) * h;
            (-2.0 * (1.0 - s)).exp() * ((-2.0 * s).exp() + (1.0 - (-2.0 * s).exp()) / 2.0)
        })
        .sum::<f64>()
        * h
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn x_process_covariance() -> Outcome {
    let mut out = Outcome::new();
    let spec = three_factor(UnitProcess::constant(HVector::from_vec(vec![0.6, 0.0, 0.8])).unwrap());
    let grid = TimeGrid::new(1.0, 200).unwrap();
    let ends: Vec<HVector> = par_map(100_000, |p| terminal_x(&spec, &grid, 5, p as u64).x);
    let exact = cov_x(&spec, 1.0, 200).unwrap();
    let rel = (sample_covariance(&ends) - exact.matrix()).norm() / exact.matrix().norm();
    out.record(rel <= 0.05, format!("N=3 HS-relative error {rel:.4} (limit 0.05)"));

    let oracle = scalar_cov_x_oracle();
    let cfg = parse_config(&std::fs::read_to_string(golden("scalar.json")).unwrap()).unwrap();
    let records = run_scenario(&cfg, RunOptions { timing: false }).unwrap();
    let cov_x_rec = records.iter().find(|r| r.name == "cov_X").unwrap();
    let scenario = cov_x_rec.value["closed_form"][0][0].as_f64().unwrap();
    let err = (scenario - oracle).abs();
    out.record(err <= 1e-8, format!("scalar golden vs Riemann oracle {err:.1e} (limit 1e-8)"));
    let cov_y_rec = records.iter().find(|r| r.name == "cov_Y").unwrap();
    let q = cov_y_rec.value[0][0].as_f64().unwrap();
    out.record((q - 0.432332).abs() <= 1e-6, format!("scalar cov_Y {q:.6}"));
    out
}

fn conditional_characteristic_functional() -> Outcome {
    let mut out = Outcome::new();
    let spec = three_factor(UnitProcess::NormalizedY);
    let (t, steps, paths) = (1.0, 100, 20_000);
    let grid = TimeGrid::new(t, steps).unwrap();
    let ends: Vec<HVector> = par_map(paths, |p| terminal_x(&spec, &grid, 61, p as u64).x);
    let mut p = Probe::new(601);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let f = p.vector(3) * 0.8;
        let cond = cond_char_x(&spec, t, steps, &f, paths, 62).unwrap();
        let z: Vec<Complex64> = ends.iter().map(|x| Complex64::from_polar(1.0, x.dot(&f))).collect();
        let emp = ComplexEstimate::from_samples(&z);
        worst = worst.max(combined_z(&cond.re, &emp.re)).max(combined_z(&cond.im, &emp.im));
    }
    out.record(worst <= Z_LIMIT, format!("worst combined z {worst:.2} over 10 frequencies (limit {Z_LIMIT})"));
    out
}

fn ito_dynamics() -> Outcome {
    let mut out = Outcome::new();
    let spec = random_ou(701, 4, false);
    let mut p = Probe::new(702);
    let mut drift: f64 = 0.0;
    for _ in 0..100 {
        let y = p.vector(4);
        let phi = drift_phi(&spec, &y);
        drift = drift.max((&phi - drift_operator_form(&spec, &tensor_square(&y))).norm() / (1.0 + phi.norm()));
    }
    out.record(drift <= EXACT, format!("drift forms agree to {drift:.1e}"));

    let coarse = mean_consistency_error(&spec, &TimeGrid::new(1.0, 64).unwrap(), 100, 7);
    let fine = mean_consistency_error(&spec, &TimeGrid::new(1.0, 128).unwrap(), 100, 7);
    let ratio = coarse / fine;
    out.record(
        (ratio - 2.0).abs() <= 0.3,
        format!("self-consistency ratio {ratio:.3} under dt halving (expected 2 +- 0.3)"),
    );

    let (mut e1, mut e2): (f64, f64) = (0.0, 0.0);
    for _ in 0..50 {
        let (y, h) = (p.vector(4), p.vector(4));
        let probes: Vec<HVector> = (0..4).map(|_| p.vector(4)).collect();
        let e = frechet_check(&y, &h, &probes);
        e1 = e1.max((e.err1 - h.norm_squared()).abs() / h.norm_squared());
        e2 = e2.max(e.err2);
    }
    out.record(e1 <= EXACT && e2 <= EXACT, format!("Frechet err1 {e1:.1e}, err2 {e2:.1e}"));
    out
}

fn diagonal_ou(y0: HVector) -> OuSpec {
    OuSpec::new(
        OperatorMatrix::from_diagonal(&HVector::from_vec(vec![-1.0, -0.5, -2.0])),
        OperatorMatrix::from_diagonal(&HVector::from_vec(vec![1.0, 0.7, 0.4])),
        Covariance::diagonal(&[1.0, 0.5, 2.0]).unwrap(),
        y0,
    )
    .unwrap()
}

fn projection() -> Outcome {
    let mut out = Outcome::new();
    let spec = diagonal_ou(HVector::from_vec(vec![0.5, 0.9, -0.3]));
    let f = basis(3, 1);
    let grid = TimeGrid::new(1.0, 512).unwrap();
    let mut identity_ok = true;
    for path in 0..10 {
        let ys = tensor_heston::ou::euler_y_path(&spec, &grid, 8, path);
        let proj = projected_path(&spec, &f, &grid, 8, path).unwrap();
        for (s, y) in proj.iter().zip(&ys) {
            let exact = y.dot(&f).powi(2);
            identity_ok &= (s.identity - exact).abs() <= EXACT * (1.0 + exact) && s.identity >= 0.0;
            identity_ok &= (project(&tensor_square(y), &f) - exact).abs() <= EXACT * (1.0 + exact);
        }
    }
    out.record(identity_ok, "pathwise identity exact".into());

    let params = cir_params(&spec, &f, -0.5).unwrap();
    let ends = terminal_v_proj(&spec, &f, &grid, 10_000, 9).unwrap();
    let est = Estimate::from_samples(&ends.iter().map(|s| s.v).collect::<Vec<_>>());
    let allowance = grid.dt() * params.kappa.abs() * (params.b + params.kappa.abs() * params.v0);
    let gap = (est.mean - cir_mean(&params, 1.0)).abs();
    out.record(
        gap <= 3.0 * est.stderr + allowance,
        format!("CIR mean gap {gap:.4} (3 se {:.4} + dt allowance {allowance:.4})", 3.0 * est.stderr),
    );

    // long horizon measured in relaxation times of the fast direction
    let fast = basis(3, 2);
    let params = cir_params(&spec, &fast, -2.0).unwrap();
    let long = TimeGrid::new(2.0, 1024).unwrap();
    let ends = terminal_v_proj(&spec, &fast, &long, 10_000, 10).unwrap();
    let est = Estimate::from_samples(&ends.iter().map(|s| s.v).collect::<Vec<_>>());
    let stationary = -params.b / params.kappa;
    let gap = (est.mean - stationary).abs();
    out.record(
        gap <= 3.0 * est.stderr,
        format!(
            "stationary mean gap {gap:.4} vs -b/kappa = {stationary:.4} after {:.0} relaxation times (3 se {:.4})",
            -params.kappa * long.t_end(),
            3.0 * est.stderr
        ),
    );
    out
}

type Curve = (CurveElement, Box<dyn Fn(f64) -> f64>);

fn curve_family(s: &FilipovicSpace) -> Vec<Curve> {
    vec![
        (CurveElement::from_fn(s, 0.0, |y| (-y).exp()), Box::new(|y: f64| 1.0 - (-y).exp())),
        (CurveElement::from_fn(s, 0.2, |y| 0.5 * y.cos()), Box::new(|y: f64| 0.2 + 0.5 * y.sin())),
        (CurveElement::from_fn(s, 0.0, |y| 1.0 / (1.0 + y)), Box::new(|y: f64| (1.0 + y).ln())),
        (CurveElement::from_fn(s, 1.0, |y| y * (-y).exp()), Box::new(|y: f64| 2.0 - (1.0 + y) * (-y).exp())),
        (
            CurveElement::from_fn(s, 0.3, |y| 0.2 / (y - 1.0).cosh().powi(2)),
            Box::new(|y: f64| 0.3 + 0.2 * ((y - 1.0).tanh() + 1.0_f64.tanh())),
        ),
    ]
}

fn reproducing_error(s: &FilipovicSpace, xs: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for (curve, exact) in curve_family(s) {
        for &x in xs {
            let v = inner_w(s, &curve, &make_h(s, x).unwrap()).unwrap();
            worst = worst.max((v - exact(x)).abs());
        }
    }
    worst
}

fn filipovic_geometry() -> Outcome {
    let mut out = Outcome::new();
    let space = FilipovicSpace::with_default_grid(0.1).unwrap();
    let coarse = reproducing_error(&space, space.x_grid());
    let fine = reproducing_error(&space.refined(2), space.x_grid());
    out.record(coarse <= 1e-4, format!("reproducing error {coarse:.2e} (limit 1e-4)"));
    out.record(fine <= 0.5 * coarse, format!("refined error {fine:.2e}"));

    let mut adjoint: f64 = 0.0;
    for (curve, _) in curve_family(&space) {
        for (t, x) in [(0.25, 0.5), (0.5, 1.0), (1.0, 2.5), (1.37, 3.1), (2.0, 3.0)] {
            let lhs = inner_w(&space, &shift(&space, t, &curve).unwrap(), &make_h(&space, x).unwrap()).unwrap();
            let rhs = inner_w(&space, &curve, &make_h(&space, x + t).unwrap()).unwrap();
            adjoint = adjoint.max((lhs - rhs).abs());
        }
    }
    out.record(adjoint <= 1e-4, format!("shift adjoint error {adjoint:.2e} (limit 1e-4)"));

    let frame = KernelFrame::new(space, &[1.0, 3.0]).unwrap();
    let ou = OuSpec::new(
        OperatorMatrix::from_diagonal(&HVector::from_vec(vec![-1.0, -0.5])),
        OperatorMatrix::identity(2, 2),
        Covariance::diagonal(&[1.0, 0.5]).unwrap(),
        HVector::from_vec(vec![0.5, -0.3]),
    )
    .unwrap();
    let spec = XSpec::new(
        frame.shift_generator().unwrap(),
        Covariance::diagonal(&[0.8, 0.4]).unwrap(),
        HVector::zeros(2),
        UnitProcess::constant(HVector::from_vec(vec![0.6, 0.8])).unwrap(),
        ou,
    )
    .unwrap();
    let mc = ForwardMc {
        steps: 50,
        paths: 100_000,
        seed: 91,
        quad_steps: 200,
    };
    let cov = forward_cov(&spec, &frame, 1.0, 0.5, 2.0, &mc).unwrap();
    let z = cov.mc.z_score(cov.closed_form.unwrap());
    out.record(z <= Z_LIMIT, format!("forward_cov z {z:.2} (limit {Z_LIMIT})"));
    out
}

fn run_cli(command: &str, config: &Path, out: &Path, threads: usize) -> Vec<(String, Vec<u8>)> {
    let status = Command::new(env!("CARGO_BIN_EXE_tensor-heston"))
        .arg(command)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .arg("--threads")
        .arg(threads.to_string())
        .arg("--no-timing")
        .output()
        .unwrap()
        .status;
    assert!(status.code().is_some());
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(out)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let mut out = Outcome::new();
    let suite = [
        ("scalar.json", "analytics"),
        ("scalar.json", "project"),
        ("scalar.json", "simulate"),
        ("three_factor.json", "analytics"),
        ("three_factor.json", "simulate"),
        ("forward.json", "forward"),
        ("validate_default.json", "validate"),
    ];
    let tmp = tempfile::tempdir().unwrap();
    for (i, (file, command)) in suite.iter().enumerate() {
        let config = golden(file);
        let runs: Vec<_> = [1, 1, 4]
            .iter()
            .enumerate()
            .map(|(k, &threads)| run_cli(command, &config, &tmp.path().join(format!("{i}-{k}")), threads))
            .collect();
        let same = !runs[0].is_empty() && runs[0] == runs[1] && runs[0] == runs[2];
        out.record(same, format!("{command} {file}"));
    }
    out
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("Gaussian law of the driver", gaussian_law_of_driver),
        ("variance-process structure", variance_structure),
        ("characteristic functional of V", variance_characteristic_functional),
        ("exponential moment bound", fernique_bound),
        ("X-process covariance", x_process_covariance),
        ("conditional characteristic functional of X", conditional_characteristic_functional),
        ("Ito dynamics of V", ito_dynamics),
        ("projection and CIR case", projection),
        ("forward-curve geometry", filipovic_geometry),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (title, run)) in criteria.iter().enumerate() {
        let outcome = run();
        let tag = if outcome.passed { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {tag} {title}: {}", i + 1, outcome.detail);
        if !outcome.passed {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
