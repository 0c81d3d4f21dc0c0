use super::Order;

/// Positive-term power series for `I / P`, returned as `(mantissa, log)` with
/// value `mantissa * exp(log)` so that large arguments cannot overflow.
fn positive_series(order: Order, x: f64) -> (f64, f64) {
    let (w, denom): (f64, Box<dyn Fn(u32) -> f64>) = match order {
        Order::Cylindrical(m) => (x * x / 4.0, Box::new(move |k| ((k + 1) as f64) * ((m + k + 1) as f64))),
        Order::Spherical(l) => (x * x / 2.0, Box::new(move |k| ((k + 1) as f64) * ((2 * l + 2 * k + 3) as f64))),
    };
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    let mut log = 0.0f64;
    for k in 0..200_000u32 {
        let ratio = w / denom(k);
        term *= ratio;
        sum += term;
        if sum > 1e280 {
            sum *= 1e-280;
            term *= 1e-280;
            log += 280.0 * std::f64::consts::LN_10;
        }
        if ratio < 0.5 && term <= 1e-17 * sum {
            break;
        }
    }
    (sum, log)
}

/// Exponentially scaled modified pair `(Î, Î')` with
/// `Î = e^{-x} I(x) / P(x)` and `Î' = e^{-x} I'(x) / P(x)`, for the
/// cylindrical `I_m` or the modified spherical `i_l`. `x > 0`; at `x = 0`
/// the value is 1 and the derivative is only finite for order zero.
///
/// The scale factor `e^x P(x)` is positive, so sign changes of any
/// determinant built from these are preserved.
pub fn scaled_i_pair(order: Order, x: f64) -> (f64, f64) {
    let (next, coupling) = match order {
        Order::Cylindrical(m) => (Order::Cylindrical(m + 1), x / (2.0 * (m + 1) as f64)),
        Order::Spherical(l) => (Order::Spherical(l + 1), x / ((2 * l + 3) as f64)),
    };
    let (s0, l0) = positive_series(order, x);
    let (s1, l1) = positive_series(next, x);
    let v0 = s0 * (l0 - x).exp();
    let v1 = s1 * (l1 - x).exp();
    let idx = order.index() as f64;
    // I_m' = (m/x) I_m + I_{m+1};  i_l' = (l/x) i_l + i_{l+1}
    let deriv = if idx == 0.0 { coupling * v1 } else { idx / x * v0 + coupling * v1 };
    (v0, deriv)
}
