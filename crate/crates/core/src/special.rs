//! Exponential integral `E1`, used by the closed-form Rayleigh ergodic capacity.

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `E1(x) = int_x^inf e^-t / t dt` for `x > 0`.
pub fn e1(x: f64) -> f64 {
    if x <= 1.0 {
        e1_series(x)
    } else {
        (-x).exp() * exp_e1_continued_fraction(x)
    }
}

/// `e^x * E1(x)`, evaluated without overflow for large `x`.
pub fn exp_e1(x: f64) -> f64 {
    if x <= 1.0 {
        x.exp() * e1_series(x)
    } else {
        exp_e1_continued_fraction(x)
    }
}

fn e1_series(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..200 {
        let k = k as f64;
        term *= -x / k;
        let add = term / k;
        sum += add;
        if add.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    -EULER_GAMMA - x.ln() - sum
}

// Modified Lentz evaluation of the continued fraction for e^x E1(x), x > 1.
fn exp_e1_continued_fraction(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}
