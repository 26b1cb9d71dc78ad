use num_bigint::{BigInt, BigUint, RandBigInt, Sign};
use num_integer::Integer;
use num_prime::nt_funcs::is_prime;
use num_traits::{One, Zero};
use rand::{CryptoRng, RngCore};

/// Uniform value in `[0, bound)`.
pub fn random_below<R: RngCore + CryptoRng + ?Sized>(rng: &mut R, bound: &BigUint) -> BigUint {
    let mut rng = rng;
    RandBigInt::gen_biguint_below(&mut rng, bound)
}

/// Uniform unit of `Z_n`.
pub fn random_unit<R: RngCore + CryptoRng + ?Sized>(rng: &mut R, n: &BigUint) -> BigUint {
    loop {
        let r = random_below(rng, n);
        if !r.is_zero() && r.gcd(n).is_one() {
            return r;
        }
    }
}

/// Uniform value with exactly `bits` bits (top bit set).
pub fn random_bits<R: RngCore + CryptoRng + ?Sized>(rng: &mut R, bits: u64) -> BigUint {
    let mut rng = rng;
    let mut v = RandBigInt::gen_biguint(&mut rng, bits);
    v.set_bit(bits - 1, true);
    v
}

pub fn is_probable_prime(n: &BigUint) -> bool {
    is_prime(n, None).probably()
}

/// Random prime with the two top bits set, so products of two such primes
/// have exactly `2 * bits` bits.
pub fn random_prime<R: RngCore + CryptoRng + ?Sized>(rng: &mut R, bits: u64) -> BigUint {
    loop {
        let mut cand = random_bits(rng, bits);
        cand.set_bit(bits - 2, true);
        cand.set_bit(0, true);
        if is_probable_prime(&cand) {
            return cand;
        }
    }
}

pub fn mod_inverse(a: &BigUint, m: &BigUint) -> Option<BigUint> {
    a.modinv(m)
}

/// `(a - b) mod m` for `a, b` already reduced or not.
pub fn mod_sub(a: &BigUint, b: &BigUint, m: &BigUint) -> BigUint {
    let a = a % m;
    let b = b % m;
    if a >= b {
        a - b
    } else {
        m - (b - a)
    }
}

/// Reduces a signed integer into `[0, m)`.
pub fn reduce_signed(x: &BigInt, m: &BigUint) -> BigUint {
    let m_signed = BigInt::from_biguint(Sign::Plus, m.clone());
    let r = x.mod_floor(&m_signed);
    r.to_biguint().expect("mod_floor of a positive modulus is non-negative")
}

pub fn lcm(a: &BigUint, b: &BigUint) -> BigUint {
    a.lcm(b)
}

/// Smallest integer `r` with `r^k >= x`.
pub fn ceil_root(x: &BigUint, k: u32) -> BigUint {
    if x.is_zero() {
        return BigUint::zero();
    }
    let r = x.nth_root(k);
    if num_traits::pow(r.clone(), k as usize) == *x {
        r
    } else {
        r + 1u32
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn ceil_root_is_exact_on_perfect_powers() {
        assert_eq!(ceil_root(&BigUint::from(10_000u32), 2), BigUint::from(100u32));
        assert_eq!(ceil_root(&BigUint::from(64u32), 3), BigUint::from(4u32));
        assert_eq!(ceil_root(&BigUint::from(65u32), 3), BigUint::from(5u32));
        assert_eq!(ceil_root(&BigUint::from(1u32), 5), BigUint::from(1u32));
    }

    #[test]
    fn random_prime_has_requested_size() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let p = random_prime(&mut rng, 128);
        assert_eq!(p.bits(), 128);
        assert!(is_probable_prime(&p));
    }

    #[test]
    fn mod_sub_wraps() {
        let m = BigUint::from(11u32);
        assert_eq!(mod_sub(&BigUint::from(7u32), &BigUint::from(9u32), &m), BigUint::from(9u32));
        let neg = BigInt::from(-2);
        assert_eq!(reduce_signed(&neg, &m), BigUint::from(9u32));
    }
}
