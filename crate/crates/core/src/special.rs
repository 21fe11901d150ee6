//! Scalar special functions used by the loss and valuation layers.
//!
//! Everything here is hand-rolled to keep the dependency tree small and the
//! accuracy pinned by golden tests: log-gamma (Lanczos), the incomplete gamma
//! pair, and the exponential integral E1. Target accuracy is 1e-12 relative
//! over the argument ranges the damage formulas produce.

// coefficient tables keep guard digits beyond f64; the compiler rounds them
#![allow(clippy::excessive_precision)]

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Lanczos approximation, g = 7, 9 terms. Valid for x > 0.
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0, "ln_gamma domain: x > 0");
    if x < 0.5 {
        // reflection keeps the Lanczos argument away from 0
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Gamma function for x > 0.
pub fn gamma(x: f64) -> f64 {
    ln_gamma(x).exp()
}

const GAMMA_EPS: f64 = 1e-16;
const GAMMA_MAX_ITER: usize = 600;

/// Series for the regularized lower gamma, reliable for z < a + 1.
fn lower_series(a: f64, z: f64) -> f64 {
    let mut ap = a;
    let mut sum = 1.0 / a;
    let mut del = sum;
    for _ in 0..GAMMA_MAX_ITER {
        ap += 1.0;
        del *= z / ap;
        sum += del;
        if del.abs() < sum.abs() * GAMMA_EPS {
            break;
        }
    }
    // raw lower gamma(a, z) = sum * z^a e^-z
    sum * (a * z.ln() - z).exp()
}

/// Lentz continued fraction for the raw upper gamma, reliable for z >= a + 1.
fn upper_cf(a: f64, z: f64) -> f64 {
    let tiny = 1e-300;
    let mut b = z + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=GAMMA_MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < GAMMA_EPS {
            break;
        }
    }
    h * (a * z.ln() - z).exp()
}

/// Raw lower incomplete gamma, integral of t^(a-1) e^-t on [0, z]. Requires a > 0, z >= 0.
pub fn lower_gamma(a: f64, z: f64) -> f64 {
    debug_assert!(a > 0.0 && z >= 0.0);
    if z == 0.0 {
        return 0.0;
    }
    if z < a + 1.0 {
        lower_series(a, z)
    } else {
        gamma(a) - upper_cf(a, z)
    }
}

/// Raw upper incomplete gamma on [z, inf) for a > -1, z > 0.
///
/// For a in (-1, 0] the integral converges only with z > 0; it is reduced to
/// positive order via upper(a, z) = (upper(a+1, z) - z^a e^-z) / a, and the
/// a = 0 case is the exponential integral E1.
pub fn upper_gamma(a: f64, z: f64) -> f64 {
    debug_assert!(a > -1.0 && z > 0.0);
    if a == 0.0 {
        return exp_integral_e1(z);
    }
    if a < 0.0 {
        return (upper_gamma(a + 1.0, z) - (a * z.ln() - z).exp()) / a;
    }
    if z < a + 1.0 {
        gamma(a) - lower_series(a, z)
    } else {
        upper_cf(a, z)
    }
}

/// Exponential integral E1(z) for z > 0.
pub fn exp_integral_e1(z: f64) -> f64 {
    debug_assert!(z > 0.0);
    if z <= 1.0 {
        // alternating series around the log singularity
        let mut sum = -EULER_GAMMA - z.ln();
        let mut term = 1.0;
        for k in 1..=60 {
            term *= -z / k as f64;
            let contrib = -term / k as f64;
            sum += contrib;
            if contrib.abs() < sum.abs() * GAMMA_EPS {
                break;
            }
        }
        sum
    } else {
        // Lentz continued fraction e^-z / (z + 1 - 1/(z + 3 - 4/(z + 5 - ...)))
        let tiny = 1e-300;
        let mut b = z + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..=GAMMA_MAX_ITER {
            let an = -(i as f64) * (i as f64);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < GAMMA_EPS {
                break;
            }
        }
        h * (-z).exp()
    }
}

/// Physicists' Gauss-Hermite nodes and weights, 20 points.
/// Integrates f against e^(-x^2); E[f(Z)] for standard normal Z is
/// sum(w_i f(sqrt(2) x_i)) / sqrt(pi).
pub const GAUSS_HERMITE_20: [(f64, f64); 20] = [
    (-5.387480890011233, 2.2293936455341447e-13),
    (-4.603682449550744, 4.3993409922731747e-10),
    (-3.944764040115625, 1.0860693707692782e-7),
    (-3.3478545673832163, 7.80255647853206e-6),
    (-2.7888060584281305, 0.00022833863601635365),
    (-2.2549740020892757, 0.0032437733422378567),
    (-1.7385377121165861, 0.024810520887463643),
    (-1.234076215395323, 0.1090172060200233),
    (-0.7374737285453944, 0.28667550536283415),
    (-0.24534070830090124, 0.4622436696006101),
    (0.24534070830090124, 0.4622436696006101),
    (0.7374737285453944, 0.28667550536283415),
    (1.234076215395323, 0.1090172060200233),
    (1.7385377121165861, 0.024810520887463643),
    (2.2549740020892757, 0.0032437733422378567),
    (2.7888060584281305, 0.00022833863601635365),
    (3.3478545673832163, 7.80255647853206e-6),
    (3.944764040115625, 1.0860693707692782e-7),
    (4.603682449550744, 4.3993409922731747e-10),
    (5.387480890011233, 2.2293936455341447e-13),
];

/// Gauss-Laguerre nodes and weights, 20 points. Integrates f against e^-x on [0, inf).
pub const GAUSS_LAGUERRE_20: [(f64, f64); 20] = [
    (0.07053988969198874, 0.1687468018511337),
    (0.37212681800161157, 0.2912543620060606),
    (0.9165821024832738, 0.2666861028669966),
    (1.7073065310283435, 0.16600245326950186),
    (2.749199255309432, 0.07482606466879074),
    (4.048925313850888, 0.02496441730928259),
    (5.615174970861617, 0.0062025508445721095),
    (7.459017453671063, 0.0011449623864768774),
    (9.594392869581098, 0.00015574177302780828),
    (12.038802546964316, 1.5401440865224536e-5),
    (14.81429344263074, 1.086486366517955e-6),
    (17.948895520519375, 5.33012090955661e-8),
    (21.47878824028501, 1.7579811790505475e-9),
    (25.451702793186904, 3.725502402512163e-11),
    (29.93255463170061, 4.76752925157805e-13),
    (35.013434240479, 3.3728442433624615e-15),
    (40.83305705672857, 1.1550143395003684e-17),
    (47.6199940473465, 1.5395221405823035e-20),
    (55.810795750063896, 5.286442725568928e-24),
    (66.52441652561575, 1.6564566124990854e-28),
];
