/// Smallest modulus used by the polynomial families.
const MIN_FIELD: u64 = 1 << 31;

/// 2^31 + 11, the smallest prime above 2^31.
const P31: u64 = 2_147_483_659;

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin, exact for every `u64`.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &p in &WITNESSES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut r = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        r += 1;
    }
    'witness: for &a in &WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..r {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Smallest prime strictly greater than `max(bound, 2^31)`.
pub fn field_modulus(bound: u64) -> u64 {
    if bound < MIN_FIELD {
        return P31;
    }
    let mut c = bound + 1;
    while !is_prime(c) {
        c += 1;
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial_division(n: u64) -> bool {
        if n < 2 {
            return false;
        }
        let mut d = 2;
        while d * d <= n {
            if n.is_multiple_of(d) {
                return false;
            }
            d += 1;
        }
        true
    }

    #[test]
    fn agrees_with_trial_division() {
        for n in 0..5000u64 {
            assert_eq!(is_prime(n), trial_division(n), "n = {n}");
        }
        for n in MIN_FIELD..MIN_FIELD + 200 {
            assert_eq!(is_prime(n), trial_division(n), "n = {n}");
        }
    }

    #[test]
    fn default_field_is_first_prime_above_2_31() {
        assert!(trial_division(P31));
        assert!((MIN_FIELD + 1..P31).all(|c| !trial_division(c)));
        assert_eq!(field_modulus(100), P31);
        assert_eq!(field_modulus(MIN_FIELD - 1), P31);
    }

    #[test]
    fn large_bounds_get_larger_primes() {
        let m = field_modulus(1 << 40);
        assert!(m > 1 << 40);
        assert!(is_prime(m));
        assert!(!is_prime(1 << 40));
    }
}
