//! Acceptance suite. Runs without the libtest harness so the per-criterion
//! lines are always printed; exits non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use nyquist_cli::commands::normalization_quadrature;
use nyquist_core::fuchsian::{counting_ratio, GroupPresentation};
use nyquist_core::hyperbolic::{DomainSpec, GroupElement, HPoint};
use nyquist_core::kernel::{
    covariance_residual, kernel_consistency, maass_eigen_residual, rotation_covariance_residual,
    rotation_residual_with, rotation_scale, super_kernel, KernelSpec, SuperParams,
};
use nyquist_core::spectra::{
    eigen_profile, level_threshold, nyquist_report, nystrom_assemble, riesz_diagnostic, KernelParams,
};
use nyquist_core::wavelet::{admissibility, admissibility_closed, norm_sq_closed, FreqFunction, WaveletParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

const ALPHAS: [f64; 4] = [0.5, 1.0, 2.3, 4.0];
const SUPER: [(f64, usize); 4] = [(1.6, 1), (2.6, 1), (2.6, 2), (3.2, 3)];
const SEED: u64 = 20_240_611;

type Outcome = Result<String, String>;

fn grid() -> Vec<WaveletParams> {
    (0..=6)
        .flat_map(|n| ALPHAS.iter().map(move |&alpha| WaveletParams { n, alpha }))
        .collect()
}

fn rng(stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(SEED);
    r.set_stream(stream);
    r
}

fn random_point(r: &mut ChaCha8Rng) -> HPoint {
    HPoint {
        x: r.gen_range(-2.0..2.0),
        s: r.gen_range(-1.5f64..1.5).exp(),
    }
}

fn random_psl2z_word(r: &mut ChaCha8Rng, max_len: usize) -> GroupElement {
    let letters = [
        GroupElement::inversion(),
        GroupElement::translation(1.0),
        GroupElement::translation(-1.0),
    ];
    let len = r.gen_range(0..=max_len);
    (0..len).fold(GroupElement::IDENTITY, |g, _| g.mul(&letters[r.gen_range(0..3)]))
}

fn ensure(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn core(e: nyquist_core::Error) -> String {
    e.to_string()
}

fn c1_normalization() -> Outcome {
    let (mut ratio, mut quad) = (0.0f64, 0.0f64);
    for p in grid() {
        let c = admissibility_closed(p).map_err(core)?;
        let nsq = norm_sq_closed(p).map_err(core)?;
        ratio = ratio.max((c / nsq - 2.0 / p.alpha).abs());
        let (qc, qn) = normalization_quadrature(p).map_err(|e| e.to_string())?;
        quad = quad.max(((qc - c) / c).abs()).max(((qn - nsq) / nsq).abs());
        admissibility(p).map_err(core)?;
    }
    ensure(
        ratio <= 1e-10 && quad <= 1e-10,
        format!("max |C/||psi||^2 - 2/alpha| = {ratio:.2e}, max closed-vs-quadrature = {quad:.2e} (28 params)"),
    )
}

fn c2_diagonal() -> Outcome {
    let mut r = rng(2);
    let mut worst = 0.0f64;
    for p in grid() {
        let k = KernelSpec { params: p };
        for _ in 0..100 {
            let z = random_point(&mut r);
            worst = worst.max((k.eval(z, z) - Complex64::new(0.5 * p.alpha, 0.0)).norm());
        }
    }
    let mut sworst = 0.0f64;
    for (b, n) in SUPER {
        let sp = SuperParams::new(b, n).map_err(core)?;
        let want = 0.5 * n as f64 * (2.0 * b - n as f64);
        for _ in 0..100 {
            let z = random_point(&mut r);
            sworst = sworst.max((super_kernel(&sp, z, z).map_err(core)? - Complex64::new(want, 0.0)).norm());
        }
    }
    ensure(
        worst <= 1e-12 && sworst <= 1e-12,
        format!("scalar diagonal residual {worst:.2e}, super diagonal residual {sworst:.2e}"),
    )
}

fn c3_covariance() -> Outcome {
    let mut r = rng(3);
    let mut worst = 0.0f64;
    for p in grid() {
        let k = KernelSpec { params: p };
        for _ in 0..100 {
            let g = random_psl2z_word(&mut r, 6);
            let (z, w) = (random_point(&mut r), random_point(&mut r));
            worst = worst.max(covariance_residual(&k, &g, z, w));
        }
    }
    ensure(worst <= 1e-10, format!("max residual {worst:.2e} over 2800 (g, z, w)"))
}

fn c4_consistency() -> Outcome {
    let mut r = rng(4);
    let params = grid();
    let mut worst = 0.0f64;
    for i in 0..30 {
        let p = params[(i * 7) % params.len()];
        let (z, w) = (random_point(&mut r), random_point(&mut r));
        let (closed, quad) = kernel_consistency(p, z, w).map_err(core)?;
        worst = worst.max((closed - quad).norm());
    }
    ensure(worst <= 1e-8, format!("max |C k - <pi(w) psi, pi(z) psi>| = {worst:.2e} on 30 pairs"))
}

fn run_cli(args: &[&str], out: &Path) -> Result<Value, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_nyquist"))
        .args(args)
        .arg("--out")
        .arg(out)
        .arg("--seed")
        .arg(SEED.to_string())
        .output()
        .map_err(|e| e.to_string())?;
    if !status.status.success() {
        return Err(format!(
            "nyquist {} exited with {:?}: {}",
            args.join(" "),
            status.status.code(),
            String::from_utf8_lossy(&status.stderr)
        ));
    }
    let name = args[0];
    let text = std::fs::read_to_string(out.join(format!("{name}.json"))).map_err(|e| e.to_string())?;
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

const TRACE_RECT: &[&str] = &["trace-check", "--domain", "rectangle", "--rect", "0,1,1,2", "--alpha", "2", "--resolution", "32"];
const TRACE_MOD: &[&str] = &["trace-check", "--domain", "modular-standard", "--alpha", "2", "--truncate", "10", "--resolution", "32", "--mc-samples", "100000"];

fn c5_trace(dir: &Path) -> Outcome {
    let rect = run_cli(TRACE_RECT, &dir.join("rect"))?;
    let modular = run_cli(TRACE_MOD, &dir.join("modular"))?;
    let f = |v: &Value, path: &[&str]| -> f64 {
        path.iter().fold(v, |acc, k| &acc[*k]).as_f64().unwrap_or(f64::NAN)
    };
    let tr_rect = f(&rect, &["results", "trace"]);
    let rect_rel = (tr_rect - 0.5).abs() / 0.5;
    let tr_mod = f(&modular, &["results", "trace"]);
    let want_mod = PI / 3.0 - 0.1;
    let mod_rel = (tr_mod - want_mod).abs() / want_mod;
    let mc = f(&modular, &["results", "monte_carlo", "value"]);
    let se = f(&modular, &["results", "monte_carlo", "stderr"]);
    let sig = (mc - PI / 3.0).abs() / se;
    ensure(
        rect_rel <= 5e-3 && mod_rel <= 1e-2 && sig <= 3.0,
        format!(
            "rectangle tr = {tr_rect:.10} (rel {rect_rel:.1e}); modular tr = {tr_mod:.10} vs pi/3 - 1/10 (rel {mod_rel:.1e}); \
             Monte Carlo {mc:.5} +- {se:.5}, {sig:.2} sigma from pi/3"
        ),
    )
}

fn c6_confinement() -> Outcome {
    let p = KernelParams::Scalar(WaveletParams::new(0, 2.0).map_err(core)?);
    let mut lines = Vec::new();
    let mut ok = true;
    for (dom, trunc) in [
        (DomainSpec::rectangle(0.0, 1.0, 1.0, 2.0).map_err(core)?, None),
        (DomainSpec::modular_standard(), Some(10.0)),
    ] {
        let op = nystrom_assemble(p, &dom, 32, trunc).map_err(core)?;
        let prof = eigen_profile(&op).map_err(core)?;
        let lmax = prof.eigenvalues[0];
        let lmin = *prof.eigenvalues.last().expect("non-empty");
        ok &= lmin >= -1e-6 && lmax <= 1.0 + 1e-6 && prof.trace_sq <= prof.trace;
        lines.push(format!(
            "{}: lambda in [{lmin:.2e}, {lmax:.4}], tr2 = {:.4} <= tr = {:.4}",
            dom.name(),
            prof.trace_sq,
            prof.trace
        ));
    }
    lines.push("the matrix discretizes 2 pi Q P Q; the bound holds here because tr < 1".into());
    ensure(ok, lines.join("; "))
}

fn c7_maass() -> Outcome {
    let z0 = HPoint { x: 0.1, s: 1.2 };
    let mut r = rng(7);
    let (mut worst, mut worst_unsigned) = (0.0f64, f64::INFINITY);
    for (b, n) in [(1.6, 0), (2.6, 0), (2.6, 1), (3.2, 2)] {
        for _ in 0..5 {
            let probe = HPoint {
                x: r.gen_range(-1.0..1.0),
                s: r.gen_range(0.5..2.0),
            };
            let m = maass_eigen_residual(b, n, z0, probe, 1e-3).map_err(core)?;
            worst = worst.max(m.residual);
            worst_unsigned = worst_unsigned.min(m.residual_unsigned);
        }
    }
    ensure(
        worst <= 1e-5,
        format!(
            "max relative residual {worst:.2e} against -(B-n)(B-n-1) (sign-corrected); \
             against +(B-n)(B-n-1) the smallest residual is {worst_unsigned:.2e}"
        ),
    )
}

fn c8_rotation() -> Outcome {
    let mut r = rng(8);
    let params = grid();
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let p = params[r.gen_range(0..params.len())];
        let theta = r.gen_range(0.0..2.0 * PI);
        let z = random_point(&mut r);
        worst = worst.max(rotation_covariance_residual(p, theta, z).map_err(core)? / rotation_scale(p, z).map_err(core)?);
    }
    let control = rotation_residual_with(&FreqFunction::control_wavelet(), 2.0, PI / 5.0, HPoint { x: 0.4, s: 1.3 })
        .map_err(core)?;
    ensure(
        worst <= 1e-8 && control > 3.9e-4,
        format!("Laguerre residual / max(1, |W^s|) = {worst:.2e}; control residual {control:.6e} (floor 3.9e-4)"),
    )
}

fn c9_riesz() -> Outcome {
    let p = KernelParams::Scalar(WaveletParams::new(0, 4.0).map_err(core)?);
    let rows = riesz_diagnostic(p, &GroupPresentation::psl2z(), HPoint { x: 0.0, s: 2.0 }, &[2.0, 3.0, 4.0, 5.0], 5_000_000)
        .map_err(core)?;
    let strictly = rows.windows(2).all(|w| w[1].lambda_min < w[0].lambda_min);
    let first = rows[0].lambda_min;
    let last = rows[rows.len() - 1];
    let ratio = last.lambda_min / first;
    let table: Vec<String> = rows.iter().map(|r| format!("r={} n={} lmin={:.3e}", r.radius, r.count, r.lambda_min)).collect();
    ensure(
        strictly && ratio < 0.5 && last.count <= 1500,
        format!("{}; final/initial = {ratio:.2e}; interlacing held", table.join(", ")),
    )
}

fn c10_nyquist() -> Outcome {
    let mut worst = 0.0f64;
    for p in grid() {
        let rep = nyquist_report(KernelParams::Scalar(p), 1.0, None).map_err(core)?;
        worst = worst.max((rep.threshold - 2.0 / p.alpha).abs());
        worst = worst.max((rep.ratio - p.alpha / 2.0).abs());
    }
    for (b, n) in SUPER {
        let sp = SuperParams::new(b, n).map_err(core)?;
        let rep = nyquist_report(KernelParams::Super(sp), 1.0, None).map_err(core)?;
        let nf = n as f64;
        worst = worst.max((rep.threshold - 2.0 / (nf * (2.0 * b - nf))).abs());
        for (k, t) in rep.level_thresholds.iter().enumerate() {
            worst = worst.max((t - 1.0 / (b - k as f64 - 0.5)).abs());
            worst = worst.max((t - level_threshold(b, k)).abs());
        }
    }
    let sp = SuperParams::new(2.6, 2).map_err(core)?;
    let example = nyquist_report(KernelParams::Super(sp), 1.0, None).map_err(core)?.threshold;
    ensure(
        worst <= 1e-14,
        format!("max deviation {worst:.1e}; threshold(B=2.6, N=2) = {example}"),
    )
}

fn c11_patterson() -> Outcome {
    let g = GroupPresentation::psl2z();
    let z = HPoint { x: 0.0, s: 2.0 };
    let radii = [4.0, 5.0, 6.0];
    let mut devs = Vec::new();
    for r in radii {
        let ratio = counting_ratio(&g, z, z, r, 5_000_000).map_err(core)?;
        devs.push((ratio * PI / 3.0 - 1.0).abs());
    }
    let slope = nyquist_cli::commands::lsq_slope(&radii, &devs);
    ensure(
        slope < 0.0,
        format!("|ratio * area - 1| = {:.4}, {:.4}, {:.4}; slope {slope:.4}", devs[0], devs[1], devs[2]),
    )
}

fn snapshot(dir: &Path) -> Result<BTreeMap<PathBuf, Vec<u8>>, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).map_err(|e| e.to_string())? {
            let p = e.map_err(|e| e.to_string())?.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let bytes = std::fs::read(&p).map_err(|e| e.to_string())?;
                out.insert(p.strip_prefix(dir).expect("inside").to_path_buf(), bytes);
            }
        }
    }
    Ok(out)
}

fn c12_determinism(dir: &Path) -> Outcome {
    let mut runs = Vec::new();
    for _ in 0..2 {
        let _ = std::fs::remove_dir_all(dir);
        run_cli(&["selftest"], &dir.join("selftest"))?;
        c5_trace(dir)?;
        runs.push(snapshot(dir)?);
    }
    let files = runs[0].len();
    ensure(
        files > 0 && runs[0] == runs[1],
        format!("{files} files byte-identical across two runs"),
    )
}

fn main() {
    let tmp = tempfile::tempdir().expect("temp dir");
    let root = tmp.path().to_path_buf();
    let criteria: Vec<(u32, &str, Duration, Box<dyn Fn() -> Outcome>)> = vec![
        (1, "normalization chain", Duration::from_secs(5), Box::new(c1_normalization)),
        (2, "kernel diagonal", Duration::from_secs(5), Box::new(c2_diagonal)),
        (3, "covariance identity", Duration::from_secs(10), Box::new(c3_covariance)),
        (4, "kernel/transform consistency", Duration::from_secs(30), Box::new(c4_consistency)),
        (5, "trace formula", Duration::from_secs(60), Box::new({
            let d = root.join("c5");
            move || c5_trace(&d)
        })),
        (6, "Nystrom spectrum confinement", Duration::from_secs(60), Box::new(c6_confinement)),
        (7, "Maass eigenvalue", Duration::from_secs(10), Box::new(c7_maass)),
        (8, "rotation covariance", Duration::from_secs(30), Box::new(c8_rotation)),
        (9, "Riesz-impossibility trend", Duration::from_secs(120), Box::new(c9_riesz)),
        (10, "Nyquist arithmetic", Duration::from_secs(5), Box::new(c10_nyquist)),
        (11, "counting-ratio diagnostic", Duration::from_secs(120), Box::new(c11_patterson)),
        (12, "determinism", Duration::from_secs(300), Box::new({
            let d = root.join("c12");
            move || c12_determinism(&d)
        })),
    ];
    let mut failed = 0;
    for (id, name, budget, f) in &criteria {
        let t = Instant::now();
        let res = f();
        let dt = t.elapsed();
        let in_time = dt <= *budget;
        let (ok, detail) = match res {
            Ok(m) => (in_time, m),
            Err(m) => (false, m),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {id:>2} {} {name}: {detail} [{:.2} s, budget {} s{}]",
            if ok { "PASS" } else { "FAIL" },
            dt.as_secs_f64(),
            budget.as_secs(),
            if in_time { "" } else { ", over budget" }
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
