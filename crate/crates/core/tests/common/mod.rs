//! Independent numerical oracles shared by the integration tests. Nothing
//! here calls into the crate under test.

#![allow(dead_code)]

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let d = r * XGK[i];
        let s = f(c - d) + f(c + d);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * r, ((k - g) * r).abs())
}

/// Globally adaptive G7-K15 quadrature of `f` over `[a, b]`: the interval
/// with the largest error estimate is bisected until the summed estimate
/// meets `rel_tol` or 4000 intervals are in use.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    let mut parts = vec![(a, b, kronrod(f, a, b))];
    loop {
        let value: f64 = parts.iter().map(|p| p.2 .0).sum();
        let error: f64 = parts.iter().map(|p| p.2 .1).sum();
        if error <= rel_tol * value.abs() || error == 0.0 || parts.len() >= 4000 {
            return value;
        }
        let worst = (0..parts.len())
            .max_by(|&i, &j| parts[i].2 .1.total_cmp(&parts[j].2 .1))
            .unwrap();
        let (lo, hi, _) = parts.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        parts.push((lo, mid, kronrod(f, lo, mid)));
        parts.push((mid, hi, kronrod(f, mid, hi)));
    }
}

/// `int_s^inf y^(-1-alpha) e^(-lambda y) dy` through `y = s e^v`, split
/// into unit pieces in `v` until the integrand is negligible.
pub fn tail_quadrature(alpha: f64, lambda: f64, s: f64) -> f64 {
    let g = |v: f64| s.powf(-alpha) * (-alpha * v - lambda * s * v.exp()).exp();
    let mut total = 0.0;
    let mut v = 0.0;
    loop {
        let piece = integrate(&g, v, v + 1.0, 1e-13);
        total += piece;
        v += 1.0;
        if piece < 1e-18 * total && lambda * s * v.exp() > 40.0 {
            return total;
        }
    }
}

/// `int_x^inf t^(a-1) e^-t dt` by the same substitution.
pub fn upper_gamma_quadrature(a: f64, x: f64) -> f64 {
    tail_quadrature(-a, 1.0, x)
}

/// `int_0^inf y^p e^(-lambda y) dy` through `y = e^v`.
pub fn moment_quadrature(p: f64, lambda: f64) -> f64 {
    let g = |v: f64| ((p + 1.0) * v - lambda * v.exp()).exp();
    let hi = (60.0 / lambda).ln() + 2.0;
    let lo = -60.0 / (p + 1.0);
    let mut total = 0.0;
    let mut v = lo;
    while v < hi {
        total += integrate(&g, v, (v + 1.0).min(hi), 1e-13);
        v += 1.0;
    }
    total
}

const BERNOULLI_2K: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

/// Riemann zeta by Euler–Maclaurin summation, valid for any real `s != 1`.
pub fn zeta_euler_maclaurin(s: f64) -> f64 {
    let n = 30.0_f64;
    let mut sum: f64 = (1..30).map(|k| (k as f64).powf(-s)).sum();
    sum += n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s);
    let mut rising = s;
    let mut fact = 2.0;
    for (k, b) in BERNOULLI_2K.iter().enumerate() {
        let k = k + 1;
        sum += b / fact * rising * n.powf(-s - 2.0 * k as f64 + 1.0);
        let j = 2.0 * k as f64;
        rising *= (s + j - 1.0) * (s + j);
        fact *= (j + 1.0) * (j + 2.0);
    }
    sum
}
