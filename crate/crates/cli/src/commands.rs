//! Subcommand bodies. Each returns its checks and a JSON results object and
//! writes its tables through [`Artifacts`].

use std::f64::consts::PI;

use num_complex::Complex64;
use nyquist_core::fuchsian::{counting_ratio, enumerate_ball, GroupPresentation};
use nyquist_core::hyperbolic::{
    domain_area, hyp_distance, mu_integral, AreaMethod, GroupElement, HPoint, MuMethod,
};
use nyquist_core::kernel::{
    covariance_residual, kernel_consistency, maass_eigen_residual, rotation_covariance_residual, rotation_scale,
    rotation_residual_with, super_kernel, KernelSpec, SuperParams,
};
use nyquist_core::specfun::{gauss_laguerre, jacobi, laguerre, laguerre_norm_closed, quad_laguerre_norm, PolyParams};
use nyquist_core::spectra::{
    eigen_profile, gram_assemble, hermitian_eig, level_threshold, nyquist_report, nystrom_assemble,
    riesz_diagnostic, scalar_threshold, super_threshold, vanishing_witness, DuplicatePolicy, KernelParams,
};
use nyquist_core::wavelet::{admissibility_closed, norm_sq_closed, FreqFunction, WaveletParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::output::{num, Artifacts, Check, PlotSpec};
use crate::CliError;

pub struct Outcome {
    pub checks: Vec<Check>,
    pub results: Value,
}

/// Parameter grid shared by the normalization, diagonal and covariance checks.
pub const GRID_ALPHAS: [f64; 4] = [0.5, 1.0, 2.3, 4.0];
pub const GRID_MAX_N: usize = 6;
pub const SUPER_CASES: [(f64, usize); 4] = [(1.6, 1), (2.6, 1), (2.6, 2), (3.2, 3)];

/// Independent random stream per purpose, so adding draws to one check does
/// not shift the samples of another.
fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn random_point(r: &mut ChaCha8Rng) -> HPoint {
    HPoint {
        x: r.gen_range(-2.0..2.0),
        s: r.gen_range(-1.5f64..1.5).exp(),
    }
}

/// Alphabet of generators and inverses.
fn letters(group: &GroupPresentation) -> Vec<GroupElement> {
    let mut out = Vec::new();
    for g in group.generators() {
        out.push(*g);
        let inv = g.inverse();
        if g.canonical().max_entry_diff(&inv) > 1e-12 {
            out.push(inv);
        }
    }
    out
}

fn random_word(r: &mut ChaCha8Rng, alphabet: &[GroupElement], max_len: usize) -> GroupElement {
    let len = r.gen_range(0..=max_len);
    (0..len).fold(GroupElement::IDENTITY, |g, _| g.mul(&alphabet[r.gen_range(0..alphabet.len())]))
}

fn grid() -> impl Iterator<Item = WaveletParams> {
    (0..=GRID_MAX_N).flat_map(|n| GRID_ALPHAS.iter().map(move |&a| WaveletParams { n, alpha: a }))
}

/// `C_psi` and `||psi||^2` by Gauss-Laguerre quadrature alone.
pub fn normalization_quadrature(p: WaveletParams) -> Result<(f64, f64), CliError> {
    let poly = PolyParams::new(p.n, p.alpha)?;
    let two = std::f64::consts::LN_2;
    Ok((
        (-p.alpha * two).exp() * quad_laguerre_norm(poly, -1)?,
        (-(p.alpha + 1.0) * two).exp() * quad_laguerre_norm(poly, 0)?,
    ))
}

fn params_json(p: KernelParams) -> Value {
    serde_json::to_value(p).expect("params serialize")
}

// ---------------------------------------------------------------- selftest

pub fn selftest(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Outcome, CliError> {
    let mut checks = Vec::new();

    // Laguerre orthogonality for n, m <= 10.
    let mut orth = 0.0f64;
    for a in [0.5, 1.0, 2.3] {
        let rule = gauss_laguerre(48, a)?;
        for n in 0..=10 {
            for m in 0..=10 {
                let v = rule.integrate(|t| {
                    laguerre(PolyParams::new(n, a).expect("valid"), t).expect("t >= 0")
                        * laguerre(PolyParams::new(m, a).expect("valid"), t).expect("t >= 0")
                });
                let exact = if n == m { laguerre_norm_closed(PolyParams::new(n, a)?, 0) } else { 0.0 };
                orth = orth.max((v - exact).abs());
            }
        }
    }
    checks.push(Check::at_most("specfun.laguerre_orthogonality", orth, 1e-10));

    let mut jac = 0.0f64;
    for a in GRID_ALPHAS {
        for n in 0..=10 {
            let (v, _) = jacobi(PolyParams::jacobi(n, a, 0.0)?, -1.0)?;
            let want = if n % 2 == 0 { 1.0 } else { -1.0 };
            jac = jac.max(if v.signum() == want { (v - want).abs() } else { f64::INFINITY });
        }
    }
    checks.push(Check::at_most("specfun.jacobi_at_minus_one", jac, 1e-12));

    // Group axioms and the imaginary-part relation on random words.
    let psl = GroupPresentation::psl2z();
    let alphabet = letters(&psl);
    let mut r = rng(cfg.seed, 1);
    let (mut drift, mut inv_err, mut im_err, mut dist_err) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..1000 {
        let g = random_word(&mut r, &alphabet, 20);
        drift = drift.max((g.det() - 1.0).abs());
        let scale: f64 = g.entries().iter().map(|v| v * v).sum();
        inv_err = inv_err.max(g.mul(&g.inverse()).max_entry_diff(&GroupElement::IDENTITY) / scale);
        let z = random_point(&mut r);
        let w = random_point(&mut r);
        let gz = g.apply(z);
        let want = z.s / g.denominator(z).norm_sqr();
        im_err = im_err.max((gz.s - want).abs() / want);
        let d = hyp_distance(z, w);
        dist_err = dist_err.max((hyp_distance(gz, g.apply(w)) - d).abs() / (1.0 + d));
    }
    checks.push(Check::at_most("hyperbolic.det_drift", drift, 1e-10));
    checks.push(Check::at_most("hyperbolic.inverse_product", inv_err, 1e-8));
    checks.push(Check::at_most("hyperbolic.imaginary_part_relation", im_err, 1e-13));
    checks.push(Check::at_most("hyperbolic.distance_invariance", dist_err, 1e-8));

    // Orbit counts and closure under inverse.
    let z2 = HPoint { x: 0.0, s: 2.0 };
    let orbit = enumerate_ball(&psl, z2, 5.0, cfg.max_words)?;
    let counts: Vec<usize> = [3.0, 4.0, 5.0].iter().map(|&rr| orbit.restrict(rr).len()).collect();
    let count_err = counts
        .iter()
        .zip([58usize, 166, 450])
        .map(|(a, b)| a.abs_diff(b) as f64)
        .fold(0.0, f64::max);
    checks.push(Check::at_most("fuchsian.orbit_counts_2i", count_err, 0.0));
    let mut keys: Vec<[i64; 4]> = orbit
        .entries
        .iter()
        .map(|e| e.element.canonical().entries().map(|v| v.round() as i64))
        .collect();
    keys.sort_unstable();
    let missing = orbit
        .entries
        .iter()
        .filter(|e| {
            let k = e.element.inverse().entries().map(|v| v.round() as i64);
            keys.binary_search(&k).is_err()
        })
        .count();
    checks.push(Check::at_most("fuchsian.inverse_closure_missing", missing as f64, 0.0));

    // Normalization chain.
    let (mut ratio_err, mut quad_err) = (0.0f64, 0.0f64);
    for p in grid() {
        let (c, nsq) = (admissibility_closed(p)?, norm_sq_closed(p)?);
        ratio_err = ratio_err.max((c / nsq - 2.0 / p.alpha).abs());
        let (qc, qn) = normalization_quadrature(p)?;
        quad_err = quad_err.max(((qc - c) / c).abs()).max(((qn - nsq) / nsq).abs());
    }
    checks.push(Check::at_most("wavelet.norm_over_admissibility", ratio_err, 1e-10));
    checks.push(Check::at_most("wavelet.closed_vs_quadrature", quad_err, 1e-10));

    // Kernel diagonal and covariance.
    let mut r = rng(cfg.seed, 2);
    let (mut diag, mut cov) = (0.0f64, 0.0f64);
    for p in grid() {
        let k = KernelSpec { params: p };
        for _ in 0..20 {
            let z = random_point(&mut r);
            diag = diag.max((k.eval(z, z) - Complex64::new(0.5 * p.alpha, 0.0)).norm());
            let g = random_word(&mut r, &alphabet, 6);
            cov = cov.max(covariance_residual(&k, &g, z, random_point(&mut r)));
        }
    }
    checks.push(Check::at_most("kernel.diagonal", diag, 1e-12));
    checks.push(Check::at_most("kernel.covariance", cov, 1e-10));
    let mut sdiag = 0.0f64;
    for (b, n) in SUPER_CASES {
        let sp = SuperParams::new(b, n)?;
        let z = random_point(&mut r);
        sdiag = sdiag.max((super_kernel(&sp, z, z)?.re - sp.diagonal()).abs());
    }
    checks.push(Check::at_most("kernel.super_diagonal", sdiag, 1e-12));

    // Gram positivity on an orbit and threshold arithmetic.
    let kp = KernelParams::Scalar(WaveletParams::new(0, 4.0)?);
    let gram = gram_assemble(kp, &orbit.restrict(3.0), DuplicatePolicy::Keep)?;
    let spec = hermitian_eig(&gram.matrix)?;
    checks.push(Check::at_least("spectra.gram_psd", spec.min() / spec.max(), -1e-9));
    let arith = [
        (scalar_threshold(2.0), 1.0),
        (scalar_threshold(1.5), 4.0 / 3.0),
        (super_threshold(2.6, 2), 0.3125),
        (level_threshold(2.6, 1), 1.0 / 1.1),
    ]
    .iter()
    .map(|(a, b)| (a - b).abs())
    .fold(0.0, f64::max);
    checks.push(Check::at_most("spectra.threshold_arithmetic", arith, 1e-14));

    let rows: Vec<Vec<String>> = checks
        .iter()
        .map(|c| vec![c.name.clone(), num(c.value), c.relation.to_string(), num(c.bound), c.passed.to_string()])
        .collect();
    art.csv("selftest", &["check", "value", "relation", "bound", "passed"], &rows, None)?;
    Ok(Outcome {
        results: json!({ "checks_run": checks.len() }),
        checks,
    })
}

// ------------------------------------------------------------ kernel-check

pub fn kernel_check(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Outcome, CliError> {
    let p = cfg.wavelet_params()?;
    let k = KernelSpec { params: p };
    let group = cfg.group_presentation()?;
    let alphabet = letters(&group);
    let tol = &cfg.tolerances;
    let mut rows = Vec::new();

    let mut r = rng(cfg.seed, 10);
    let mut diag = 0.0f64;
    for i in 0..cfg.samples {
        let z = random_point(&mut r);
        let res = (k.eval(z, z) - Complex64::new(0.5 * p.alpha, 0.0)).norm();
        diag = diag.max(res);
        rows.push(vec!["diagonal".into(), i.to_string(), num(z.x), num(z.s), num(z.x), num(z.s), String::new(), num(res)]);
    }

    let mut r = rng(cfg.seed, 11);
    let mut cov = 0.0f64;
    for i in 0..cfg.samples {
        let g = random_word(&mut r, &alphabet, 6);
        let (z, w) = (random_point(&mut r), random_point(&mut r));
        let res = covariance_residual(&k, &g, z, w);
        cov = cov.max(res);
        let e = g.canonical().entries();
        rows.push(vec![
            "covariance".into(),
            i.to_string(),
            num(z.x),
            num(z.s),
            num(w.x),
            num(w.s),
            format!("{} {} {} {}", e[0], e[1], e[2], e[3]),
            num(res),
        ]);
    }

    let mut r = rng(cfg.seed, 12);
    let mut cons = 0.0f64;
    for i in 0..cfg.consistency_samples {
        let (z, w) = (random_point(&mut r), random_point(&mut r));
        let (closed, quad) = kernel_consistency(p, z, w)?;
        let res = (closed - quad).norm();
        cons = cons.max(res);
        rows.push(vec!["consistency".into(), i.to_string(), num(z.x), num(z.s), num(w.x), num(w.s), String::new(), num(res)]);
    }

    let mut checks = vec![
        Check::at_most("kernel.diagonal", diag, tol.diagonal),
        Check::at_most("kernel.covariance", cov, tol.covariance),
        Check::at_most("kernel.consistency", cons, tol.consistency),
    ];
    if let Some(sp) = cfg.super_wavelet {
        let mut r = rng(cfg.seed, 13);
        let mut sdiag = 0.0f64;
        for i in 0..cfg.samples {
            let z = random_point(&mut r);
            let res = (super_kernel(&sp, z, z)? - Complex64::new(sp.diagonal(), 0.0)).norm();
            sdiag = sdiag.max(res);
            rows.push(vec!["super-diagonal".into(), i.to_string(), num(z.x), num(z.s), num(z.x), num(z.s), String::new(), num(res)]);
        }
        checks.push(Check::at_most("kernel.super_diagonal", sdiag, tol.diagonal));
    }
    art.csv(
        "kernel-check",
        &["kind", "index", "x1", "s1", "x2", "s2", "element", "residual"],
        &rows,
        Some(PlotSpec {
            title: "kernel residuals".into(),
            x: 2,
            ys: vec![8],
            log_y: true,
        }),
    )?;
    Ok(Outcome {
        results: json!({
            "params": params_json(KernelParams::Scalar(p)),
            "admissibility": admissibility_closed(p)?,
            "max_diagonal_residual": diag,
            "max_covariance_residual": cov,
            "max_consistency_residual": cons,
        }),
        checks,
    })
}

// ------------------------------------------------------------- trace-check

pub fn trace_check(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Outcome, CliError> {
    let kp = cfg.kernel_params()?;
    let dom = cfg.domain_spec()?;
    let diag = kp.diagonal();
    let area = match dom.area() {
        Some(a) => a,
        None => {
            return Err(CliError::Config(format!(
                "domain {} has no known area; declare one in the config",
                dom.name()
            )))
        }
    };
    let cusped = dom.cusp_width().is_some();
    let truncate = cusped.then_some(cfg.truncate);
    let op = nystrom_assemble(kp, &dom, cfg.resolution, truncate)?;
    let (tr, tr2) = nyquist_core::spectra::nystrom_trace_moments(&op);
    let deficit = op.area_deficit.unwrap_or(0.0);
    let target = (area - deficit) * diag;
    let rel = (tr - target).abs() / target;
    let tol = if cusped { cfg.tolerances.trace_truncated } else { cfg.tolerances.trace };

    let mc = mu_integral(
        |z| kp.kernel(z, z),
        MuMethod::MonteCarlo {
            domain: &dom,
            samples: cfg.mc_samples,
            seed: cfg.seed,
        },
    );
    let mc_target = area * diag;
    let stderr = mc.stderr.unwrap_or(0.0);
    let mc_dev = (mc.value.re - mc_target).abs();
    // A constant integrand on a box-shaped domain has zero variance.
    let mc_sigma = if stderr > 0.0 {
        mc_dev / stderr
    } else if mc_dev <= 1e-12 * mc_target {
        0.0
    } else {
        f64::INFINITY
    };

    let rows = vec![
        vec!["nystrom".into(), num(tr), num(target), num(rel), String::new()],
        vec!["second-moment".into(), num(tr2), num(tr), String::new(), String::new()],
        vec![
            "monte-carlo".into(),
            num(mc.value.re),
            num(mc_target),
            num(mc_dev / mc_target),
            num(stderr),
        ],
    ];
    art.csv("trace-check", &["method", "value", "target", "relative_error", "stderr"], &rows, None)?;
    Ok(Outcome {
        checks: vec![
            Check::at_most("trace.nystrom_relative", rel, tol),
            Check::at_most("trace.monte_carlo_sigmas", mc_sigma, cfg.tolerances.mc_sigmas),
            Check::at_most("trace.second_moment_excess", tr2 - tr, 1e-9 * tr),
        ],
        results: json!({
            "domain": dom.name(),
            "params": params_json(kp),
            "area": area,
            "kernel_diagonal": diag,
            "resolution": cfg.resolution,
            "nodes": op.nodes.len(),
            "truncation": truncate,
            "area_deficit": deficit,
            "trace": tr,
            "trace_target": target,
            "trace_relative_error": rel,
            "trace_sq": tr2,
            "monte_carlo": { "value": mc.value.re, "stderr": stderr, "samples": mc.samples, "target": mc_target },
        }),
    })
}

// ----------------------------------------------------------- gram-spectrum

pub fn gram_spectrum(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Outcome, CliError> {
    let kp = cfg.kernel_params()?;
    let group = cfg.group_presentation()?;
    let z = cfg.base_point()?;
    let radius = *cfg.radii.last().expect("validated");
    let orbit = enumerate_ball(&group, z, radius, cfg.max_words)?;
    if orbit.truncated {
        return Err(nyquist_core::Error::Truncated {
            visited: orbit.visited,
            partial_count: orbit.len(),
        }
        .into());
    }
    let policy = if cfg.merge_duplicates { DuplicatePolicy::Merge } else { DuplicatePolicy::Keep };
    let gram = gram_assemble(kp, &orbit, policy)?;
    let spec = hermitian_eig(&gram.matrix)?;
    std::fs::write(art.dir().join("orbit.csv"), orbit.to_csv())?;
    let rows: Vec<Vec<String>> = spec
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, v)| vec![i.to_string(), num(*v)])
        .collect();
    art.csv(
        "gram-spectrum",
        &["index", "eigenvalue"],
        &rows,
        Some(PlotSpec {
            title: format!("Gram spectrum, {} orbit, r = {radius}", group.name()),
            x: 1,
            ys: vec![2],
            log_y: true,
        }),
    )?;
    let psd = spec.min() / spec.max();
    Ok(Outcome {
        checks: vec![
            Check::at_most(
                "gram.hermitian_defect",
                spec.hermitian_defect,
                1e-12 * gram.matrix.frobenius().max(1.0),
            ),
            Check::at_least("gram.psd_relative", psd, -cfg.tolerances.gram_psd),
        ],
        results: json!({
            "group": group.name(),
            "base_point": [z.x, z.s],
            "radius": radius,
            "params": params_json(kp),
            "dimension": gram.dim(),
            "duplicates": gram.duplicates.len(),
            "merged": cfg.merge_duplicates,
            "lambda_min": spec.min(),
            "lambda_max": spec.max(),
            "diagonal": gram.matrix[(0, 0)].re,
        }),
    })
}

// -------------------------------------------------------------- riesz-scan

pub fn riesz_scan(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Outcome, CliError> {
    let kp = cfg.kernel_params()?;
    let group = cfg.group_presentation()?;
    let z = cfg.base_point()?;
    let rows = riesz_diagnostic(kp, &group, z, &cfg.radii, cfg.max_words)?;
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![num(r.radius), r.count.to_string(), num(r.lambda_min), num(r.lambda_max)])
        .collect();
    art.csv(
        "riesz-scan",
        &["radius", "count", "lambda_min", "lambda_max"],
        &table,
        Some(PlotSpec {
            title: format!("extremal Gram eigenvalues, {} orbit", group.name()),
            x: 1,
            ys: vec![3, 4],
            log_y: true,
        }),
    )?;
    let strictly = rows.windows(2).all(|w| w[1].lambda_min < w[0].lambda_min);
    let first = rows.first().expect("non-empty");
    let last = rows.last().expect("non-empty");
    let decay = last.lambda_min / first.lambda_min;
    let worst_psd = rows
        .iter()
        .map(|r| r.lambda_min / r.lambda_max)
        .fold(f64::INFINITY, f64::min);

    let r_max = *cfg.radii.last().expect("validated");
    let orbit = enumerate_ball(&group, z, r_max, cfg.max_words)?;
    let witness = if orbit.len() >= 2 {
        match vanishing_witness(kp, &orbit) {
            Ok(w) => {
                let wrows: Vec<Vec<String>> = orbit
                    .entries
                    .iter()
                    .zip(&w.coefficients)
                    .enumerate()
                    .map(|(i, (e, c))| vec![i.to_string(), e.word.clone(), num(c.re), num(c.im)])
                    .collect();
                art.csv("witness", &["index", "word", "re", "im"], &wrows, None)?;
                json!({ "radius": r_max, "residual": w.residual, "relative": w.relative })
            }
            Err(nyquist_core::Error::Degenerate(msg)) => json!({ "skipped": msg }),
            Err(e) => return Err(e.into()),
        }
    } else {
        json!({ "skipped": "fewer than two orbit points" })
    };
    Ok(Outcome {
        checks: vec![Check::at_least("riesz.psd_relative", worst_psd, -cfg.tolerances.gram_psd)],
        results: json!({
            "group": group.name(),
            "base_point": [z.x, z.s],
            "params": params_json(kp),
            "rows": rows,
            "interlacing": "verified",
            "lambda_min_strictly_decreasing": strictly,
            "lambda_min_final_over_initial": decay,
            "witness": witness,
        }),
    })
}

// ---------------------------------------------------------- nyquist-report

pub fn nyquist(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Outcome, CliError> {
    let kp = cfg.kernel_params()?;
    let dom = cfg.domain_spec()?;
    let (area, stderr, method) = match dom.area() {
        Some(a) => (a, None, "exact"),
        None => {
            let est = domain_area(
                &dom,
                AreaMethod::MonteCarlo {
                    samples: cfg.mc_samples,
                    seed: cfg.seed,
                },
            )?;
            (est.value(), est.stderr(), "monte-carlo")
        }
    };
    let rep = nyquist_report(kp, area, stderr)?;
    let mut rows = vec![vec!["total".to_string(), String::new(), num(rep.threshold)]];
    for (n, t) in rep.level_thresholds.iter().enumerate() {
        rows.push(vec!["level".into(), n.to_string(), num(*t)]);
    }
    art.csv("nyquist-report", &["kind", "level", "threshold"], &rows, None)?;
    Ok(Outcome {
        checks: Vec::new(),
        results: json!({
            "domain": dom.name(),
            "area_method": method,
            "report": rep,
        }),
    })
}

// ----------------------------------------------------------- eigen-profile

pub fn eigen_profile_cmd(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Outcome, CliError> {
    let kp = cfg.kernel_params()?;
    let dom = cfg.domain_spec()?;
    let truncate = dom.cusp_width().is_some().then_some(cfg.truncate);
    let op = nystrom_assemble(kp, &dom, cfg.resolution, truncate)?;
    let prof = eigen_profile(&op)?;
    let rows: Vec<Vec<String>> = prof
        .cdf
        .iter()
        .enumerate()
        .map(|(i, (v, f))| vec![i.to_string(), num(*v), num(*f)])
        .collect();
    art.csv(
        "eigen-profile",
        &["index", "eigenvalue", "cdf"],
        &rows,
        Some(PlotSpec {
            title: format!("Nystrom eigenvalue CDF, {}", dom.name()),
            x: 2,
            ys: vec![3],
            log_y: false,
        }),
    )?;
    let eps = cfg.tolerances.confinement;
    let lmax = prof.eigenvalues.first().copied().unwrap_or(0.0);
    let lmin = prof.eigenvalues.last().copied().unwrap_or(0.0);
    Ok(Outcome {
        checks: vec![
            Check::at_most("nystrom.lambda_max", lmax, 1.0 + eps),
            Check::at_least("nystrom.lambda_min", lmin, -eps),
            Check::at_most("nystrom.second_moment_excess", prof.trace_sq - prof.trace, 1e-9 * prof.trace),
        ],
        results: json!({
            "domain": dom.name(),
            "params": params_json(kp),
            "resolution": cfg.resolution,
            "nodes": op.nodes.len(),
            "truncation": truncate,
            "area_deficit": op.area_deficit,
            "trace": prof.trace,
            "trace_sq": prof.trace_sq,
            "lambda_max": lmax,
            "lambda_min": lmin,
            "count_above_half": prof.count_above_half,
        }),
    })
}

// ------------------------------------------------------------- maass-check

pub fn maass(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Outcome, CliError> {
    let z0 = HPoint::new(cfg.maass.center[0], cfg.maass.center[1])?;
    let mut r = rng(cfg.seed, 20);
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    let mut cases = Vec::new();
    for c in &cfg.maass.cases {
        let mut case_worst = 0.0f64;
        let mut eigenvalue = 0.0;
        for _ in 0..cfg.maass.probes {
            let probe = HPoint {
                x: r.gen_range(-1.0..1.0),
                s: r.gen_range(0.5..2.0),
            };
            let m = maass_eigen_residual(c.b, c.n, z0, probe, cfg.maass.step)?;
            eigenvalue = m.eigenvalue;
            case_worst = case_worst.max(m.residual);
            rows.push(vec![
                num(c.b),
                c.n.to_string(),
                num(probe.x),
                num(probe.s),
                num(m.eigenvalue),
                num(m.residual),
                num(m.residual_unsigned),
            ]);
        }
        worst = worst.max(case_worst);
        cases.push(json!({ "B": c.b, "n": c.n, "eigenvalue": eigenvalue, "max_residual": case_worst }));
    }
    art.csv(
        "maass-check",
        &["B", "n", "probe_x", "probe_s", "eigenvalue", "residual", "residual_unsigned"],
        &rows,
        None,
    )?;
    Ok(Outcome {
        checks: vec![Check::at_most("maass.relative_residual", worst, cfg.tolerances.maass)],
        results: json!({
            "center": cfg.maass.center,
            "step": cfg.maass.step,
            "eigenvalue_convention": "-(B - n)(B - n - 1); the unsigned value is reported as residual_unsigned",
            "cases": cases,
        }),
    })
}

// ---------------------------------------------------------- rotation-check

pub fn rotation(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Outcome, CliError> {
    let p = cfg.wavelet_params()?;
    let mut r = rng(cfg.seed, 30);
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for _ in 0..cfg.rotation.samples {
        let theta = r.gen_range(0.0..2.0 * PI);
        let z = random_point(&mut r);
        let res = rotation_covariance_residual(p, theta, z)? / rotation_scale(p, z)?;
        worst = worst.max(res);
        rows.push(vec!["laguerre".into(), num(theta), num(z.x), num(z.s), num(res)]);
    }
    let rc = &cfg.rotation;
    let cz = HPoint::new(rc.control_point[0], rc.control_point[1])?;
    let control = rotation_residual_with(&FreqFunction::control_wavelet(), rc.control_weight, rc.control_theta, cz)?;
    rows.push(vec!["control".into(), num(rc.control_theta), num(cz.x), num(cz.s), num(control)]);
    art.csv("rotation-check", &["wavelet", "theta", "x", "s", "scaled_residual"], &rows, None)?;
    Ok(Outcome {
        checks: vec![
            Check::at_most("rotation.laguerre_scaled_residual", worst, cfg.tolerances.rotation),
            Check::at_least("rotation.control_residual", control, rc.control_floor),
        ],
        results: json!({
            "params": params_json(KernelParams::Scalar(p)),
            "weight": p.weight(),
            "max_scaled_residual": worst,
            "control_residual": control,
        }),
    })
}

// --------------------------------------------------------------- patterson

/// Least-squares slope of `ys` against `xs`.
pub fn lsq_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

pub fn patterson(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Outcome, CliError> {
    let group = cfg.group_presentation()?;
    let dom = cfg.domain_spec()?;
    let area = dom
        .area()
        .ok_or_else(|| CliError::Config(format!("domain {} has no known area", dom.name())))?;
    let z = cfg.base_point()?;
    let mut rows = Vec::new();
    let mut devs = Vec::new();
    for &radius in &cfg.patterson_radii {
        let ratio = counting_ratio(&group, z, z, radius, cfg.max_words)?;
        let dev = (ratio * area - 1.0).abs();
        devs.push(dev);
        rows.push(vec![num(radius), num(ratio), num(ratio * area), num(dev)]);
    }
    art.csv(
        "patterson",
        &["radius", "ratio", "ratio_times_area", "deviation"],
        &rows,
        Some(PlotSpec {
            title: format!("counting ratio, {}", group.name()),
            x: 1,
            ys: vec![3],
            log_y: false,
        }),
    )?;
    let slope = lsq_slope(&cfg.patterson_radii, &devs);
    Ok(Outcome {
        checks: Vec::new(),
        results: json!({
            "group": group.name(),
            "base_point": [z.x, z.s],
            "area": area,
            "deviation_slope": slope,
            "negative_slope": slope < 0.0,
            "note": "qualitative diagnostic; no tolerance is asserted",
        }),
    })
}
