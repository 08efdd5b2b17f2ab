use std::f64::consts::PI;

use magscat_core::cgo::{limiting_amplitude, solve_cgo, CgoOptions};
use magscat_core::coeffs::{make_test_coefficients, CoefficientSet};
use magscat_core::direct::{far_field, sigma_matrix, PlaneWaveSum, ScatteringProblem, SphereGrid};
use magscat_core::faddeev::make_rho;
use magscat_core::grid::io::{Field, FieldMeta};
use magscat_core::recon::{default_shell, recover_V, recover_dA, ReconOptions, ShellRow};
use magscat_core::Error;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Component, RunConfig};
use crate::output::{cplx, num, Collector};
use crate::suite::{self, cauchy_trials, gauge_scale};
use crate::CliError;

const E1: [f64; 3] = [1.0, 0.0, 0.0];
const E2: [f64; 3] = [0.0, 1.0, 0.0];

/// What a command reports besides its files.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub passed: bool,
    pub summary: Vec<String>,
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn build(cfg: &RunConfig) -> Result<(CoefficientSet, CoefficientSet), CliError> {
    let grid = cfg.grid();
    Ok((make_test_coefficients(grid, cfg.gamma0, &cfg.coefficients)?, make_test_coefficients(grid, cfg.gamma0, &cfg.reference)?))
}

#[derive(Serialize)]
struct SigmaHeader {
    lambda: f64,
    n_polar: usize,
    n_azimuth: usize,
    nodes: usize,
    unitarity_defect: f64,
    reciprocity_defect: f64,
    distance_to_identity: f64,
    identity: bool,
    max_iterations: usize,
}

/// Scattering matrix, sphere nodes, far field of the constant density and,
/// for electric-only coefficients, the Born comparison.
pub fn cmd_direct(cfg: &RunConfig, out: &mut Collector) -> Result<Outcome, CliError> {
    let (coeffs, _) = build(cfg)?;
    let sphere = SphereGrid::new(cfg.lambda, cfg.sphere.n_polar, cfg.sphere.n_azimuth)?;
    let s = sigma_matrix(&coeffs, cfg.lambda, &sphere)?;
    let n = sphere.len();

    out.csv(
        "sphere.csv",
        &["q", "theta1", "theta2", "theta3", "weight"],
        (0..n).map(|q| {
            let d = sphere.directions()[q];
            vec![q.to_string(), num(d[0]), num(d[1]), num(d[2]), num(sphere.weights()[q])]
        }),
    )?;
    out.csv(
        "sigma.csv",
        &["q", "qp", "re", "im"],
        (0..n).flat_map(|q| {
            let row = &s.matrix[q];
            (0..n).map(move |p| {
                let [re, im] = cplx(row[p]);
                vec![q.to_string(), p.to_string(), re, im]
            })
        }),
    )?;
    let distance = s.distance_to_identity();
    let header = SigmaHeader {
        lambda: cfg.lambda,
        n_polar: cfg.sphere.n_polar,
        n_azimuth: cfg.sphere.n_azimuth,
        nodes: n,
        unitarity_defect: s.unitarity_defect,
        reciprocity_defect: s.reciprocity_defect(),
        distance_to_identity: distance,
        identity: distance == 0.0,
        max_iterations: s.max_iterations,
    };
    out.json("sigma.json", &header)?;

    let g = vec![Complex64::new(1.0, 0.0); n];
    let ff = far_field(&coeffs, cfg.lambda, &g, &sphere)?;
    out.csv(
        "farfield.csv",
        &["q", "re_outgoing", "im_outgoing", "re_incoming", "im_incoming"],
        (0..n).map(|q| {
            let [a, b] = cplx(ff.outgoing[q]);
            let [c, d] = cplx(ff.incoming[q]);
            vec![q.to_string(), a, b, c, d]
        }),
    )?;

    let tol = cfg.tolerances.get(cfg.tolerances.unitarity);
    let mut passed = s.unitarity_defect <= tol;
    let mut summary = vec![
        format!("unitarity defect {:.3e} (<= {tol:e}: {})", s.unitarity_defect, yes(passed)),
        format!("|S - I| = {distance:.3e}, identity: {}", yes(distance == 0.0)),
    ];
    if !coeffs.is_zero() && !coeffs.is_magnetic() {
        let (rows, max_dev) = born_matrix(&coeffs, cfg.lambda, &sphere, &s.matrix)?;
        out.csv(
            "born.csv",
            &["q", "qp", "re_sigma", "im_sigma", "re_born", "im_born", "rel_dev", "max_rel_dev"],
            rows.into_iter().map(|(q, p, a, b, d)| {
                let [ar, ai] = cplx(a);
                let [br, bi] = cplx(b);
                vec![q.to_string(), p.to_string(), ar, ai, br, bi, num(d), num(max_dev)]
            }),
        )?;
        let btol = cfg.tolerances.get(cfg.tolerances.direct_born);
        passed &= max_dev <= btol;
        summary.push(format!("Born max relative deviation {max_dev:.3e} (<= {btol:e}: {})", yes(max_dev <= btol)));
    }
    Ok(Outcome { passed, summary })
}

type BornRow = (usize, usize, Complex64, Complex64, f64);

/// First Born approximation of every entry, deviations relative to the
/// largest Born entry of `S − I`.
fn born_matrix(coeffs: &CoefficientSet, lambda: f64, sphere: &SphereGrid, sigma: &[Vec<Complex64>]) -> Result<(Vec<BornRow>, f64), Error> {
    let grid = *coeffs.grid();
    let problem = ScatteringProblem::new(coeffs, lambda)?;
    let m = sphere.measure();
    let n = sphere.len();
    let amp = Complex64::new(0.0, 1.0 / (4.0 * PI * PI));
    let cols: Vec<Result<Vec<Complex64>, Error>> = (0..n)
        .into_par_iter()
        .map(|p| {
            let wave = PlaneWaveSum { wavevectors: vec![sphere.point(p)], amplitudes: vec![amp] };
            problem.scattering_transform(&wave.sample(grid), sphere)
        })
        .collect();
    let mut born = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for (p, col) in cols.into_iter().enumerate() {
        let col = col?;
        for q in 0..n {
            born[q][p] = -col[q] * (m[q] * m[p]).sqrt();
        }
    }
    let scale = born.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
    let mut rows = Vec::with_capacity(n * n);
    let mut worst: f64 = 0.0;
    for q in 0..n {
        for p in 0..n {
            let id = if p == q { 1.0 } else { 0.0 };
            let b = born[q][p] + id;
            let d = (sigma[q][p] - b).norm() / scale;
            worst = worst.max(d);
            rows.push((q, p, sigma[q][p], b, d));
        }
    }
    Ok((rows, worst))
}

/// CGO solutions over the `h` sweep with their norms; on non-convergence
/// the residual history is written before the error is returned.
pub fn cmd_cgo(cfg: &RunConfig, out: &mut Collector) -> Result<Outcome, CliError> {
    let (coeffs, _) = build(cfg)?;
    let grid = cfg.grid();
    let opts = CgoOptions { max_iter: cfg.max_iter, ..CgoOptions::default() };
    let limit = limiting_amplitude(coeffs.a(), E1, E2)?;
    let half = 0.5 * grid.half_width();
    let mut rows: Vec<Vec<String>> = vec![];
    let (mut sums, mut amps) = (vec![], vec![]);
    for (i, &h) in cfg.sweeps.h.iter().enumerate() {
        let rho = make_rho(h, cfg.lambda, E1, E2)?;
        let s = match solve_cgo(&coeffs, &rho, &opts) {
            Ok(s) => s,
            Err(Error::NonConvergence { iterations, residual, history }) => {
                out.csv(
                    &format!("history_h{i}.csv"),
                    &["iteration", "residual"],
                    history.iter().enumerate().map(|(k, r)| vec![k.to_string(), num(*r)]),
                )?;
                write_norms(out, &rows)?;
                return Err(CliError::Core(Error::NonConvergence { iterations, residual, history }));
            }
            Err(e) => return Err(e.into()),
        };
        let sp = s.split.as_ref().expect("split requested");
        let sq: f64 = sp
            .a
            .data()
            .iter()
            .zip(limit.data())
            .enumerate()
            .filter(|(k, _)| grid.point(*k).iter().all(|x| x.abs() <= half))
            .map(|(_, (a, l))| (a - l).norm_sqr())
            .sum();
        let amp_err = (sq * grid.cell_volume()).sqrt();
        let (r, hgr) = (s.norms.r.unwrap_or(0.0), s.norms.h_grad_r.unwrap_or(0.0));
        let decreasing = sums.last().map_or(true, |p| r + hgr < *p);
        sums.push(r + hgr);
        amps.push(amp_err);
        rows.push(vec![
            num(h),
            num(rho.modulus()),
            s.iterations.to_string(),
            num(s.residual),
            num(s.norms.v),
            num(r),
            num(hgr),
            num(r + hgr),
            num(amp_err),
            (decreasing as u8).to_string(),
        ]);
        let meta = |what: &str| FieldMeta { lambda: Some(cfg.lambda), gamma0: Some(cfg.gamma0), description: format!("{what} at h = {h}") };
        out.field(&format!("v_h{i}.cgof"), &Field::Scalar(s.v.clone()), &meta("CGO remainder v"))?;
        out.field(&format!("r_h{i}.cgof"), &Field::Scalar(sp.r.clone()), &meta("CGO remainder r"))?;
    }
    write_norms(out, &rows)?;
    let flat = sums.iter().all(|s| *s == 0.0);
    let dec = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]);
    let passed = flat || (dec(&sums) && dec(&amps));
    Ok(Outcome {
        passed,
        summary: vec![format!(
            "{} solves; r-norm {}; amplitude error {}",
            sums.len(),
            if flat { "identically zero".to_string() } else { format!("strictly decreasing: {}", yes(dec(&sums))) },
            format_args!("strictly decreasing: {}", yes(flat || dec(&amps)))
        )],
    })
}

fn write_norms(out: &mut Collector, rows: &[Vec<String>]) -> Result<(), CliError> {
    out.csv(
        "norms.csv",
        &["h", "rho_modulus", "iterations", "residual", "v_norm", "r_norm", "h_grad_r_norm", "r_sum", "amplitude_error", "decreasing"],
        rows.iter().cloned(),
    )
}

/// The dbar solver on seeded random sources.
pub fn cmd_cauchy(cfg: &RunConfig, out: &mut Collector) -> Result<Outcome, CliError> {
    let trials = cauchy_trials(cfg.grid(), cfg.n_sources, cfg.seed)?;
    out.csv(
        "cauchy.csv",
        &["source", "gamma1", "gamma2", "c1", "c2", "c3", "width", "residual", "spectral_residual", "roundtrip_rel"],
        trials.iter().enumerate().map(|(i, t)| {
            let axis = |v: [f64; 3]| v.iter().map(|c| format!("{c}")).collect::<Vec<_>>().join(" ");
            vec![
                i.to_string(),
                axis(t.plane[0]),
                axis(t.plane[1]),
                num(t.center[0]),
                num(t.center[1]),
                num(t.center[2]),
                num(t.width),
                num(t.residual),
                num(t.spectral_residual),
                num(t.roundtrip),
            ]
        }),
    )?;
    let tol = &cfg.tolerances;
    let res = trials.iter().map(|t| t.residual).fold(0.0, f64::max);
    let rt = trials.iter().map(|t| t.roundtrip).fold(0.0, f64::max);
    let ok = res <= tol.get(tol.cauchy_residual) && rt <= tol.get(tol.cauchy_roundtrip);
    Ok(Outcome { passed: ok, summary: vec![format!("{} sources: max residual {res:.3e}, max round trip {rt:.3e}", trials.len())] })
}

fn shell_rows(rows: &[ShellRow]) -> impl Iterator<Item = Vec<String>> + '_ {
    rows.iter().map(|r| {
        let [a, b] = cplx(r.recovered);
        let [c, d] = cplx(r.reference);
        vec![num(r.xi[0]), num(r.xi[1]), num(r.xi[2]), r.component.clone(), a, b, c, d, num(r.rel_err), num(r.extrapolation_residual)]
    })
}

const SHELL_HEADER: [&str; 10] = [
    "xi1",
    "xi2",
    "xi3",
    "component",
    "re_recovered",
    "im_recovered",
    "re_reference",
    "im_reference",
    "rel_err",
    "extrapolation_residual",
];

/// `(dA)^` and `V̂` tables on the frequency shell.
pub fn cmd_reconstruct(cfg: &RunConfig, out: &mut Collector) -> Result<Outcome, CliError> {
    let (coeffs, reference) = build(cfg)?;
    let shell = default_shell(cfg.lambda, cfg.gamma0, cfg.shell_magnitudes);
    let opts = ReconOptions {
        t_values: cfg.sweeps.t.clone(),
        cgo: CgoOptions { split: false, max_iter: cfg.max_iter, ..CgoOptions::default() },
    };
    let tol = &cfg.tolerances;
    let mut passed = true;
    let mut summary = vec![];
    for comp in &cfg.recover {
        match comp {
            Component::DA => {
                let rows = recover_dA(&coeffs, &reference, cfg.lambda, cfg.gamma0, &shell, &opts)?;
                out.csv("dA.csv", &SHELL_HEADER, shell_rows(&rows))?;
                let diff = coeffs.a().sub(reference.a())?;
                let scale = |r: &ShellRow| gauge_scale(&diff, r.xi);
                let lim = tol.get(tol.pure_gauge);
                let trivial = rows.iter().all(|r| r.reference.norm() <= lim * scale(r));
                if trivial {
                    let worst = rows.iter().map(|r| r.recovered.norm() / scale(r)).fold(0.0, f64::max);
                    let ok = worst.is_nan() || worst <= lim;
                    passed &= ok;
                    summary.push(format!("dA: trivial magnetic field, max |recovered|/scale = {worst:.3e} (<= {lim:e}: {})", yes(ok)));
                } else {
                    let worst = rows.iter().map(|r| r.rel_err).fold(0.0, f64::max);
                    let lim = tol.get(tol.recon_da);
                    passed &= worst <= lim;
                    summary.push(format!("dA: max rel_err = {worst:.3e} (<= {lim:e}: {})", yes(worst <= lim)));
                }
            }
            Component::V => {
                let rows = recover_V(&coeffs, &reference, cfg.lambda, cfg.gamma0, &shell, &opts)?;
                out.csv("V.csv", &SHELL_HEADER, shell_rows(&rows))?;
                let worst = rows.iter().map(|r| r.rel_err).fold(0.0, f64::max);
                let lim = if coeffs.is_magnetic() { tol.get(tol.recon_v_shared) } else { tol.get(tol.recon_v) };
                passed &= worst <= lim;
                summary.push(format!("V: max rel_err = {worst:.3e} (<= {lim:e}: {})", yes(worst <= lim)));
            }
        }
    }
    Ok(Outcome { passed, summary })
}

/// The acceptance suite; one line per criterion.
pub fn cmd_verify(cfg: &RunConfig, out: &mut Collector) -> Result<Outcome, CliError> {
    let results = suite::run(cfg, |r| println!("{}", r.line()));
    out.csv(
        "suite.csv",
        &["criterion", "name", "check", "value", "bound", "status"],
        results.iter().flat_map(|r| {
            let mut rows: Vec<Vec<String>> = r
                .checks
                .iter()
                .map(|c| {
                    let status = if c.passed { "PASS" } else { "FAIL" };
                    vec![r.id.to_string(), r.name.to_string(), c.label.clone(), num(c.value), c.bound.clone(), status.to_string()]
                })
                .collect();
            if let Some(e) = &r.error {
                rows.push(vec![r.id.to_string(), r.name.to_string(), format!("error: {e}"), String::new(), String::new(), "FAIL".into()]);
            }
            rows
        }),
    )?;
    let lines: Vec<String> = results.iter().map(|r| r.line()).collect();
    out.text("report.txt", &lines)?;
    let failed = results.iter().filter(|r| !r.passed).count();
    let mut summary = lines;
    summary.push(format!("{} of {} criteria passed", results.len() - failed, results.len()));
    Ok(Outcome { passed: failed == 0, summary })
}
