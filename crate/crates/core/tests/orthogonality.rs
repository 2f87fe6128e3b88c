use num_complex::Complex64;
use nyquist_core::hyperbolic::{GroupElement, HPoint, HyperbolicRule};
use nyquist_core::kernel::{other_family_check, REPRODUCING_FACTOR};
use nyquist_core::wavelet::{
    admissibility_closed, inner_product_freq, mother, wavelet_transform, FreqFunction, WaveletParams,
};

fn rule() -> HyperbolicRule {
    HyperbolicRule::polar(HPoint::I, 18.0, 36, 12, 64).unwrap()
}

fn transform_on(rule: &HyperbolicRule, f: &FreqFunction, p: WaveletParams) -> Vec<Complex64> {
    rule.nodes.iter().map(|z| wavelet_transform(f, p, *z).unwrap()).collect()
}

// int W f1 conj(W f2) dmu = 2 pi C <f1, f2> under dmu = dx ds / s^2.
#[test]
fn orthogonality_relation_on_laguerre_family() {
    let p = WaveletParams::new(1, 2.0).unwrap();
    let c = admissibility_closed(p).unwrap();
    let rule = rule();
    let fs: Vec<FreqFunction> = (0..3).map(|m| mother(WaveletParams::new(m, 2.0).unwrap()).unwrap()).collect();
    let mixed = FreqFunction::Sum(vec![
        (Complex64::new(1.0, 0.0), fs[0].clone()),
        (Complex64::new(0.5, -0.25), fs[1].clone()),
    ]);
    let mut all = fs.clone();
    all.push(mixed);
    let wt: Vec<Vec<Complex64>> = all.iter().map(|f| transform_on(&rule, f, p)).collect();
    let norms: Vec<f64> = all.iter().map(|f| inner_product_freq(f, f).unwrap().re).collect();

    for j in 0..all.len() {
        for k in 0..all.len() {
            let lhs: Complex64 = rule
                .weights
                .iter()
                .zip(wt[j].iter().zip(&wt[k]))
                .map(|(w, (a, b))| *w * a * b.conj())
                .sum();
            let rhs = REPRODUCING_FACTOR * c * inner_product_freq(&all[j], &all[k]).unwrap();
            let scale = REPRODUCING_FACTOR * c * (norms[j] * norms[k]).sqrt();
            let rel = (lhs - rhs).norm() / scale;
            assert!(rel < 1e-3, "({j}, {k}): {lhs} vs {rhs}, rel {rel:.2e}");
        }
    }
}

#[test]
fn constant_without_two_pi_is_rejected() {
    let p = WaveletParams::new(0, 2.0).unwrap();
    let c = admissibility_closed(p).unwrap();
    let psi = mother(p).unwrap();
    let rule = rule();
    let lhs: f64 = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(z, w)| w * wavelet_transform(&psi, p, *z).unwrap().norm_sqr())
        .sum();
    let norm = inner_product_freq(&psi, &psi).unwrap().re;
    assert!((lhs / (c * norm) - REPRODUCING_FACTOR).abs() < 1e-3 * REPRODUCING_FACTOR);
}

#[test]
fn other_family_identity() {
    let p = WaveletParams::new(0, 2.0).unwrap();
    let gamma = GroupElement::new(1.0, 1.0, 1.0, 2.0).unwrap();
    // Smooth bump in geodesic distance from 1.5i.
    let centre = HPoint::new(0.0, 1.5).unwrap();
    let phi = move |w: HPoint| {
        let d = nyquist_core::hyperbolic::hyp_distance(w, centre);
        Complex64::new((-d * d).exp(), 0.3 * w.x * (-d * d).exp())
    };
    let rule = HyperbolicRule::polar(centre, 7.0, 14, 8, 48).unwrap();
    for z in [HPoint::new(0.2, 0.9).unwrap(), HPoint::new(-0.4, 1.6).unwrap()] {
        let chk = other_family_check(p, &gamma, phi, &rule, z).unwrap();
        let rel = chk.residual() / chk.projection_side.norm();
        assert!(rel < 1e-8, "{chk:?}");
    }
}
