//! Exact integer combinatorics.
//!
//! Everything is computed in `u128`, which is exact for every quantity used
//! with `n <= 28`. Conversion to floating point happens only at the final ratio.

/// Binomial coefficient C(n, k); zero when k > n.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Signed-argument binomial, zero for negative arguments.
pub fn binomial_i(n: i64, k: i64) -> u128 {
    if n < 0 || k < 0 || k > n {
        0
    } else {
        binomial(n as u64, k as u64)
    }
}

pub fn factorial(n: u64) -> u128 {
    (1..=n as u128).product()
}

/// Multinomial coefficient (sum parts)! / prod(part!).
pub fn multinomial(parts: &[u64]) -> u128 {
    let mut total = 0u64;
    let mut acc: u128 = 1;
    for &p in parts {
        total += p;
        acc *= binomial(total, p);
    }
    acc
}

/// Double factorial with the convention (-1)!! = 0!! = 1.
pub fn double_factorial(n: i64) -> u128 {
    let mut acc: u128 = 1;
    let mut m = n;
    while m > 1 {
        acc *= m as u128;
        m -= 2;
    }
    acc
}

/// Ratio of two exact integers as f64.
pub fn ratio(num: u128, den: u128) -> f64 {
    num as f64 / den as f64
}

/// Reduced fraction `num/den` (den > 0).
pub fn reduce(num: u128, den: u128) -> (u128, u128) {
    let g = gcd(num, den);
    if g == 0 {
        (num, den)
    } else {
        (num / g, den / g)
    }
}

pub fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}
