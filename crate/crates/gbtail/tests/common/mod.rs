#![allow(dead_code, clippy::excessive_precision)]
//! Adaptive Gauss-Kronrod (7/15) quadrature used as an independent oracle.

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let pair = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Integral of `f` over `[a, b]` to absolute accuracy about `tol`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let mut stack = vec![(a, b, tol)];
    let mut total = 0.0;
    let mut splits = 0;
    while let Some((lo, hi, t)) = stack.pop() {
        let (v, err) = gk15(f, lo, hi);
        if err <= t || splits > 20_000 || hi - lo < 1e-14 * (lo.abs() + hi.abs()) {
            total += v;
        } else {
            splits += 1;
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, 0.5 * t));
            stack.push((mid, hi, 0.5 * t));
        }
    }
    total
}

/// `∫_0^b f` for a density with an integrable singularity at `b`,
/// via `x = b (1 - v^4)`.
pub fn integrate_bounded(f: &dyn Fn(f64) -> f64, b: f64, tol: f64) -> f64 {
    let g = |v: f64| {
        let x = b * (1.0 - v.powi(4));
        if x >= b || x <= 0.0 {
            0.0
        } else {
            f(x) * 4.0 * b * v.powi(3)
        }
    };
    integrate(&g, 0.0, 1.0, tol)
}

/// `∫_0^∞ f` via `x = s t / (1 - t)`.
pub fn integrate_half_line(f: &dyn Fn(f64) -> f64, scale: f64, tol: f64) -> f64 {
    let g = |t: f64| {
        if t <= 0.0 || t >= 1.0 {
            return 0.0;
        }
        let x = scale * t / (1.0 - t);
        f(x) * scale / ((1.0 - t) * (1.0 - t))
    };
    integrate(&g, 0.0, 1.0, tol)
}
