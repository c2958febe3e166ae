//! Special functions used by the harmonic model and the GP prior.
//!
//! Integer-order Bessel functions are evaluated with Miller's backward
//! recurrence normalised by the generating-function identities
//! `1 = J0 + 2ΣJ_2k` and `e^x = I0 + 2ΣI_k`, which keeps the absolute error
//! near machine precision for every argument size the model produces.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Bessel function of the first kind `J_m(x)` for any integer order.
///
/// Negative orders and arguments use `J_{-m} = (-1)^m J_m` and
/// `J_m(-x) = (-1)^m J_m(x)`. Returns NaN for non-finite `x`.
pub fn bessel_j<T: Scalar>(m: i32, x: T) -> T {
    if !x.is_finite() {
        return T::nan();
    }
    let order = m.unsigned_abs() as usize;
    let mut sign = if m < 0 && order % 2 == 1 { -T::one() } else { T::one() };
    if x < T::zero() && order % 2 == 1 {
        sign = -sign;
    }
    sign * bessel_j_nonneg(order, x.abs())
}

fn bessel_j_nonneg<T: Scalar>(order: usize, x: T) -> T {
    if x == T::zero() {
        return if order == 0 { T::one() } else { T::zero() };
    }
    if x < T::epsilon().sqrt() {
        // two-term power series; the recurrence would lose everything to rescaling
        let half = x / T::lit(2.0);
        let mut lead = T::one();
        for k in 1..=order {
            lead = lead * half / T::from_usize_lossy(k);
        }
        return lead * (T::one() - half * half / T::from_usize_lossy(order + 1));
    }

    let start = recurrence_start(order, x);
    let big = T::max_value().sqrt();
    let two = T::lit(2.0);

    let mut next = T::zero(); // J_{k+1}
    let mut cur = T::min_positive_value().sqrt(); // J_k, arbitrary seed
    let mut norm = T::zero();
    let mut wanted = T::zero();
    if start == order {
        wanted = cur;
    }
    for k in (1..=start).rev() {
        let prev = two * T::from_usize_lossy(k) / x * cur - next;
        next = cur;
        cur = prev;
        let idx = k - 1;
        if idx == order {
            wanted = cur;
        }
        if idx > 0 && idx % 2 == 0 {
            norm += two * cur;
        }
        if cur.abs() > big {
            let s = big.recip();
            cur *= s;
            next *= s;
            norm *= s;
            wanted *= s;
        }
    }
    norm += cur;
    wanted / norm
}

/// Exponentially scaled modified Bessel function `e^{-|x|} I_n(x)`.
pub fn bessel_i_scaled<T: Scalar>(n: i32, x: T) -> T {
    if !x.is_finite() {
        return T::nan();
    }
    let order = n.unsigned_abs() as usize;
    let ax = x.abs();
    let sign = if x < T::zero() && order % 2 == 1 {
        -T::one()
    } else {
        T::one()
    };
    if ax == T::zero() {
        return if order == 0 { T::one() } else { T::zero() };
    }
    let start = recurrence_start(order, ax);
    let big = T::max_value().sqrt();
    let two = T::lit(2.0);

    let mut next = T::zero();
    let mut cur = T::min_positive_value().sqrt();
    let mut norm = T::zero();
    let mut wanted = if start == order { cur } else { T::zero() };
    for k in (1..=start).rev() {
        // I_k enters the normalisation sum before it is replaced by I_{k-1}
        norm += two * cur;
        let prev = two * T::from_usize_lossy(k) / ax * cur + next;
        next = cur;
        cur = prev;
        if k - 1 == order {
            wanted = cur;
        }
        if cur > big {
            let s = big.recip();
            cur *= s;
            next *= s;
            norm *= s;
            wanted *= s;
        }
    }
    norm += cur;
    sign * wanted / norm
}

/// Modified Bessel function of the first kind `I_n(x)`.
pub fn bessel_i<T: Scalar>(n: i32, x: T) -> T {
    bessel_i_scaled(n, x) * x.abs().exp()
}

fn recurrence_start<T: Scalar>(order: usize, x: T) -> usize {
    let scale = x.to_f64().unwrap_or(0.0).max(order as f64);
    let n = scale.ceil() as usize + 24 + (40.0 * scale).sqrt().ceil() as usize;
    n + (n % 2)
}

/// Dilogarithm `Li2(x) = Σ x^k / k²` on `[0, 1]`.
///
/// Uses the power series below 1/2 and Euler's reflection
/// `Li2(x) = π²/6 − ln(x)ln(1−x) − Li2(1−x)` above.
pub fn dilog<T: Scalar>(x: T) -> Result<T> {
    if !(x >= T::zero() && x <= T::one()) {
        return Err(Error::Domain {
            function: "dilog",
            value: x.as_f64(),
            domain: "[0, 1]",
        });
    }
    let zeta2 = T::PI() * T::PI() / T::lit(6.0);
    if x == T::one() {
        return Ok(zeta2);
    }
    if x <= T::lit(0.5) {
        return Ok(dilog_series(x));
    }
    let y = T::one() - x;
    Ok(zeta2 - x.ln() * y.ln() - dilog_series(y))
}

fn dilog_series<T: Scalar>(x: T) -> T {
    let mut sum = T::zero();
    let mut power = x;
    let mut k = 1usize;
    while k < 200 {
        let kk = T::from_usize_lossy(k);
        let term = power / (kk * kk);
        sum += term;
        if term <= T::epsilon() * sum * T::lit(0.01) {
            break;
        }
        power *= x;
        k += 1;
    }
    sum
}
