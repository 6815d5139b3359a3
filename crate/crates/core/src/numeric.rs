//! Log-domain helpers for the large powers that appear with `p = ln T`.

/// `ln(exp(a) + exp(b))` without overflow.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `x^p` for `x >= 0`, computed as `exp(p ln x)` with `0^p = 0`.
pub fn pow_guarded(x: f64, p: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        (p * x.ln()).exp()
    }
}

/// `ln(exp(f) - 1)` for `f > 0`.
pub fn ln_expm1(f: f64) -> f64 {
    if f > 30.0 {
        f + (-(-f).exp()).ln_1p()
    } else {
        f.exp_m1().ln()
    }
}

/// `ln(1 + exp(v))`.
pub fn softplus(v: f64) -> f64 {
    if v > 30.0 {
        v + (-v).exp().ln_1p()
    } else {
        v.exp().ln_1p()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_add_exp_matches_direct_sum() {
        let got = log_add_exp(2.0_f64.ln(), 3.0_f64.ln());
        assert!((got - 5.0_f64.ln()).abs() < 1e-15);
        assert_eq!(log_add_exp(f64::NEG_INFINITY, 1.5), 1.5);
        assert!((log_add_exp(1000.0, 1000.0) - (1000.0 + 2.0_f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn helpers_agree_with_naive_forms() {
        assert_eq!(pow_guarded(0.0, 3.3), 0.0);
        assert!((pow_guarded(2.0, 3.0) - 8.0).abs() < 1e-12);
        assert!((ln_expm1(1.0) - (1.0_f64.exp() - 1.0).ln()).abs() < 1e-15);
        assert!((ln_expm1(40.0) - 40.0).abs() < 1e-15);
        assert!((softplus(0.5) - (1.0 + 0.5_f64.exp()).ln()).abs() < 1e-15);
    }
}
