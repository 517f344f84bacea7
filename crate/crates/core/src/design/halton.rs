/// The first 32 primes, one Halton base per dimension.
pub(crate) const PRIMES: [u64; 32] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
    97, 101, 103, 107, 109, 113, 127, 131,
];

/// Radical inverse of `index` in `base`, computed as one correctly rounded
/// division of the digit-reversed integer by `base^digits`.
pub(crate) fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let mut reversed: u64 = 0;
    let mut denom: u64 = 1;
    while index > 0 {
        reversed = reversed * base + index % base;
        denom *= base;
        index /= base;
    }
    reversed as f64 / denom as f64
}
