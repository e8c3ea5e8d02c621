//! Index coding: ζ-distribution codelengths and Elias-delta transport.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::samplers::SampleRecord;
use crate::INDEX_CONSTANT;

/// `λ = 1 + 1/(I + c)` with `c = e⁻¹log₂e + 1`.
pub fn select_lambda(i_bits: f64) -> Result<f64> {
    if !(i_bits >= 0.0) || i_bits.is_infinite() {
        return Err(domain("I_bits", i_bits, "[0, ∞)"));
    }
    Ok(1.0 + 1.0 / (i_bits + INDEX_CONSTANT))
}

/// An interval known to contain `ζ(λ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZetaBracket {
    pub lo: f64,
    pub hi: f64,
}

impl ZetaBracket {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

// B_2, B_4, ..., B_12
const BERNOULLI: [f64; 6] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
];
const EM_CUTOFF: u32 = 64;
const EM_TERMS: usize = 4;

/// Euler–Maclaurin evaluation of `ζ(s)` for `s > 1`.
///
/// Sums `n^{−s}` for `n < N`, adds the integral tail and `EM_TERMS`
/// Bernoulli corrections at `N`, and brackets the remainder by the first
/// omitted correction, which dominates it for real `s > 1`.
pub fn zeta_bracket(s: f64) -> Result<ZetaBracket> {
    if !(s > 1.0) || !s.is_finite() {
        return Err(domain("lambda", s, "(1, ∞)"));
    }
    let n = f64::from(EM_CUTOFF);
    // summing small terms first
    let partial: f64 = (1..EM_CUTOFF).rev().map(|k| f64::from(k).powf(-s)).sum();
    let mut est = partial + n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s);
    // rising factorial s(s+1)...(s+2j-2) / (2j)!, times N^{-s-2j+1}
    let mut coef = s / 2.0;
    let mut power = n.powf(-s - 1.0);
    let mut next = 0.0;
    for (j, b) in BERNOULLI.iter().enumerate().take(EM_TERMS + 1) {
        if j > 0 {
            let m = 2.0 * j as f64;
            coef *= (s + m - 1.0) * (s + m) / ((m + 1.0) * (m + 2.0));
            power /= n * n;
        }
        let term = b * coef * power;
        if j == EM_TERMS {
            next = term.abs();
        } else {
            est += term;
        }
    }
    let slack = next + 4.0 * f64::EPSILON * est;
    Ok(ZetaBracket {
        lo: est - slack,
        hi: est + slack,
    })
}

/// ζ-distribution code with exponent `λ`: `ℓ(n) = λ·log₂n + log₂ζ(λ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZetaCoder {
    lambda: f64,
    zeta: f64,
    bracket: ZetaBracket,
}

impl ZetaCoder {
    pub fn new(lambda: f64) -> Result<Self> {
        let bracket = zeta_bracket(lambda)?;
        Ok(Self {
            lambda,
            zeta: bracket.mid(),
            bracket,
        })
    }

    /// Coder tuned to information `I` (bits) via [`select_lambda`].
    pub fn for_information(i_bits: f64) -> Result<Self> {
        Self::new(select_lambda(i_bits)?)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn bracket(&self) -> ZetaBracket {
        self.bracket
    }

    pub fn log2_zeta(&self) -> f64 {
        self.zeta.log2()
    }

    /// Probability of `n` under the ζ-distribution.
    pub fn pmf(&self, n: u64) -> Result<f64> {
        check_index(n)?;
        Ok((n as f64).powf(-self.lambda) / self.zeta)
    }

    pub fn ideal_codelength(&self, n: u64) -> Result<f64> {
        check_index(n)?;
        Ok(self.lambda * (n as f64).log2() + self.log2_zeta())
    }
}

pub fn ideal_codelength(coder: &ZetaCoder, n: u64) -> Result<f64> {
    coder.ideal_codelength(n)
}

fn check_index(n: u64) -> Result<()> {
    if n == 0 {
        Err(domain("n", 0.0, "[1, ∞)"))
    } else {
        Ok(())
    }
}

/// Bits packed most-significant-bit first, zero padded to whole bytes.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BitString {
    bytes: Vec<u8>,
    len: usize,
}

impl BitString {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_bytes(bytes: Vec<u8>, len: usize) -> Result<Self> {
        if len > bytes.len() * 8 || bytes.len() > len.div_ceil(8) {
            return Err(Error::Decode {
                offset: len.min(bytes.len() * 8),
                reason: format!("{len} bits do not fit {} bytes", bytes.len()),
            });
        }
        Ok(Self { bytes, len })
    }

    /// Parses a string of `0`/`1` characters.
    pub fn parse(text: &str) -> Result<Self> {
        let mut out = Self::new();
        for (i, c) in text.chars().enumerate() {
            match c {
                '0' => out.push(false),
                '1' => out.push(true),
                other => {
                    return Err(Error::Decode {
                        offset: i,
                        reason: format!("unexpected character `{other}`"),
                    })
                }
            }
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn push(&mut self, bit: bool) {
        if self.len % 8 == 0 {
            self.bytes.push(0);
        }
        if bit {
            self.bytes[self.len / 8] |= 0x80 >> (self.len % 8);
        }
        self.len += 1;
    }

    fn push_bits(&mut self, value: u64, width: u32) {
        for i in (0..width).rev() {
            self.push((value >> i) & 1 == 1);
        }
    }

    pub fn extend(&mut self, other: &BitString) {
        for i in 0..other.len {
            self.push(other.get(i).expect("in range"));
        }
    }

    pub fn get(&self, i: usize) -> Option<bool> {
        (i < self.len).then(|| self.bytes[i / 8] & (0x80 >> (i % 8)) != 0)
    }

    pub fn to_hex(&self) -> String {
        self.bytes.iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.get(i) == Some(true) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Length of the Elias-delta codeword for `n ≥ 1`.
pub fn elias_delta_len(n: u64) -> Result<usize> {
    check_index(n)?;
    let l = 64 - n.leading_zeros();
    let ll = 31 - l.leading_zeros();
    Ok((2 * ll + l) as usize)
}

fn write_delta(out: &mut BitString, n: u64) {
    let l = 64 - n.leading_zeros();
    let ll = 31 - l.leading_zeros();
    out.push_bits(0, ll);
    out.push_bits(u64::from(l), ll + 1);
    out.push_bits(n, l - 1);
}

/// Elias-delta codeword of `n ≥ 1`.
pub fn encode_index(n: u64) -> Result<BitString> {
    check_index(n)?;
    let mut out = BitString::new();
    write_delta(&mut out, n);
    Ok(out)
}

/// Concatenated codewords of a sequence of indices.
pub fn encode_indices(ns: &[u64]) -> Result<BitString> {
    let mut out = BitString::new();
    for &n in ns {
        check_index(n)?;
        write_delta(&mut out, n);
    }
    Ok(out)
}

struct Reader<'a> {
    bits: &'a BitString,
    pos: usize,
}

impl Reader<'_> {
    fn bit(&mut self) -> Result<bool> {
        let b = self.bits.get(self.pos).ok_or_else(|| Error::Decode {
            offset: self.pos,
            reason: "unexpected end of input".into(),
        })?;
        self.pos += 1;
        Ok(b)
    }

    fn bits(&mut self, width: u32) -> Result<u64> {
        let mut v = 0u64;
        for _ in 0..width {
            v = (v << 1) | u64::from(self.bit()?);
        }
        Ok(v)
    }

    fn delta(&mut self) -> Result<u64> {
        let start = self.pos;
        let mut ll = 0u32;
        while !self.bit()? {
            ll += 1;
            if ll > 6 {
                return Err(Error::Decode {
                    offset: start,
                    reason: "length prefix exceeds 64-bit range".into(),
                });
            }
        }
        let l = (1u64 << ll) | self.bits(ll)?;
        if l > 64 {
            return Err(Error::Decode {
                offset: start,
                reason: format!("value length {l} exceeds 64 bits"),
            });
        }
        let l = l as u32;
        Ok((1u64 << (l - 1)) | self.bits(l - 1)?)
    }
}

/// Decodes a single codeword that spans the whole bitstring.
pub fn decode_index(bits: &BitString) -> Result<u64> {
    let mut r = Reader { bits, pos: 0 };
    let n = r.delta()?;
    if r.pos != bits.len() {
        return Err(Error::Decode {
            offset: r.pos,
            reason: format!("{} trailing bits", bits.len() - r.pos),
        });
    }
    Ok(n)
}

/// Decodes every codeword in a concatenated stream.
pub fn decode_indices(bits: &BitString) -> Result<Vec<u64>> {
    let mut r = Reader { bits, pos: 0 };
    let mut out = Vec::new();
    while r.pos < bits.len() {
        out.push(r.delta()?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub n: usize,
    pub i_bits: f64,
    pub lambda: f64,
    pub log2_zeta: f64,
    /// Plug-in entropy of the observed indices.
    pub entropy_bits: f64,
    pub mean_ideal_bits: f64,
    pub ideal_std_error: f64,
    pub mean_elias_bits: f64,
    /// `λ(I + c) + log₂ζ(λ)`.
    pub zeta_bound: f64,
    /// `I + log₂(I + 1) + 4`.
    pub rate_bound: f64,
    pub within_zeta_bound: bool,
    pub within_rate_bound: bool,
}

/// Plug-in entropy in bits of a sample of indices.
pub fn plugin_entropy(indices: &[u64]) -> f64 {
    let mut counts = BTreeMap::new();
    for &n in indices {
        *counts.entry(n).or_insert(0u64) += 1;
    }
    let total = indices.len() as f64;
    counts
        .values()
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.log2()
        })
        .sum::<f64>()
        .max(0.0)
}

pub fn rate_report<X>(records: &[SampleRecord<X>], i_bits: f64) -> Result<RateReport> {
    let indices: Vec<u64> = records.iter().map(|r| r.index).collect();
    rate_report_indices(&indices, i_bits)
}

pub fn rate_report_indices(indices: &[u64], i_bits: f64) -> Result<RateReport> {
    if indices.is_empty() {
        return Err(Error::Empty("records"));
    }
    let coder = ZetaCoder::for_information(i_bits)?;
    let n = indices.len();
    let mut lengths = Vec::with_capacity(n);
    let mut elias = 0usize;
    for &k in indices {
        lengths.push(coder.ideal_codelength(k)?);
        elias += elias_delta_len(k)?;
    }
    let mean = lengths.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        lengths.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    let se = (var / n as f64).sqrt();
    let zeta_bound = coder.lambda() * (i_bits + INDEX_CONSTANT) + coder.log2_zeta();
    let rate_bound = i_bits + (i_bits + 1.0).log2() + 4.0;
    Ok(RateReport {
        n,
        i_bits,
        lambda: coder.lambda(),
        log2_zeta: coder.log2_zeta(),
        entropy_bits: plugin_entropy(indices),
        mean_ideal_bits: mean,
        ideal_std_error: se,
        mean_elias_bits: elias as f64 / n as f64,
        zeta_bound,
        rate_bound,
        within_zeta_bound: mean <= zeta_bound + 3.0 * se,
        within_rate_bound: mean <= rate_bound + 3.0 * se,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn lambda_examples() {
        assert_abs_diff_eq!(select_lambda(0.0).unwrap(), 1.6532797, epsilon = 1e-7);
        assert_abs_diff_eq!(select_lambda(0.5310044064107189).unwrap(), 1.4850267, epsilon = 1e-7);
        let mut prev = f64::INFINITY;
        for i in [0.0, 1.0, 10.0, 1e3, 1e6] {
            let l = select_lambda(i).unwrap();
            assert!(l > 1.0 && l < prev);
            prev = l;
        }
        assert!(select_lambda(-0.1).is_err());
        assert!(select_lambda(f64::NAN).is_err());
    }

    #[test]
    fn zeta_known_values() {
        let b = zeta_bracket(2.0).unwrap();
        assert!(b.width() < 1e-12);
        assert!(b.lo <= PI * PI / 6.0 && PI * PI / 6.0 <= b.hi);
        let b4 = zeta_bracket(4.0).unwrap();
        assert_abs_diff_eq!(b4.mid(), PI.powi(4) / 90.0, epsilon = 1e-14);
        for s in [1.01, 1.2, 1.485, 1.6533, 3.0, 10.0] {
            assert!(zeta_bracket(s).unwrap().width() < 1e-12, "s={s}");
        }
        // near the pole the width is relative
        let b = zeta_bracket(1.0001).unwrap();
        assert!(b.width() / b.mid() < 1e-14);
        assert_abs_diff_eq!(b.mid(), 1.0 / 0.0001 + 0.5772156649, epsilon = 1e-3);
        assert!(zeta_bracket(1.0).is_err());
    }

    #[test]
    fn zeta_against_direct_series_bracket() {
        // partial sum ≤ ζ ≤ partial sum + tail integral
        for s in [1.4850267, 1.6532797, 2.5] {
            let cut = 200_000u32;
            let partial: f64 = (1..=cut).rev().map(|k| f64::from(k).powf(-s)).sum();
            let tail = f64::from(cut).powf(1.0 - s) / (s - 1.0);
            let z = ZetaCoder::new(s).unwrap().zeta();
            assert!(partial <= z && z <= partial + tail + 1e-12, "s={s}");
            assert!(((partial + tail) / z - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn codelength_examples() {
        let c = ZetaCoder::new(2.0).unwrap();
        assert_abs_diff_eq!(c.ideal_codelength(1).unwrap(), (PI * PI / 6.0).log2(), epsilon = 1e-12);
        assert_abs_diff_eq!(c.ideal_codelength(4).unwrap(), 4.0 + (PI * PI / 6.0).log2(), epsilon = 1e-12);
        assert_abs_diff_eq!(c.log2_zeta(), 0.7181, epsilon = 1e-4);
        assert!(c.ideal_codelength(0).is_err());
        let c = ZetaCoder::for_information(0.5310044064107189).unwrap();
        assert_eq!(ideal_codelength(&c, 1).unwrap(), c.log2_zeta());
        assert_abs_diff_eq!(c.log2_zeta(), 1.4185, epsilon = 1e-4);
    }

    #[test]
    fn elias_delta_examples() {
        assert_eq!(encode_index(1).unwrap().to_string(), "1");
        let c17 = encode_index(17).unwrap();
        assert_eq!(c17.to_string(), "001010001");
        assert_eq!(c17.len(), 9);
        assert_eq!(c17.as_bytes(), &[0b0010_1000, 0b1000_0000]);
        assert_eq!(decode_index(&c17).unwrap(), 17);
        assert_eq!(encode_index(2).unwrap().to_string(), "0100");
        assert_eq!(encode_index(4).unwrap().to_string(), "01100");
        assert!(encode_index(0).is_err());
        for n in [1u64, 2, 3, 1 << 32, u64::MAX] {
            let c = encode_index(n).unwrap();
            assert_eq!(c.len(), elias_delta_len(n).unwrap());
            assert_eq!(decode_index(&c).unwrap(), n);
        }
    }

    #[test]
    fn decode_errors_carry_offset() {
        match decode_index(&BitString::parse("0010").unwrap()) {
            Err(Error::Decode { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("{other:?}"),
        }
        match decode_index(&BitString::parse("11").unwrap()) {
            Err(Error::Decode { offset, .. }) => assert_eq!(offset, 1),
            other => panic!("{other:?}"),
        }
        match decode_index(&BitString::parse("00000001").unwrap()) {
            Err(Error::Decode { offset, .. }) => assert_eq!(offset, 0),
            other => panic!("{other:?}"),
        }
        assert!(decode_index(&BitString::new()).is_err());
        assert!(BitString::parse("01x").is_err());
    }

    #[test]
    fn stream_round_trip() {
        let ns = [1u64, 17, 5, 1, 1_000_000, 2];
        let bits = encode_indices(&ns).unwrap();
        assert_eq!(decode_indices(&bits).unwrap(), ns);
        let again = BitString::from_bytes(bits.as_bytes().to_vec(), bits.len()).unwrap();
        assert_eq!(again, bits);
    }

    #[test]
    fn random_round_trips_and_kraft() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut kraft = 0.0;
        let mut seen = std::collections::BTreeSet::new();
        for _ in 0..100_000 {
            let n = rng.random_range(1..=1u64 << 20);
            let c = encode_index(n).unwrap();
            assert_eq!(decode_index(&c).unwrap(), n);
            if seen.insert(n) {
                kraft += 2f64.powi(-(c.len() as i32));
            }
        }
        assert!(kraft <= 1.0);
    }

    #[test]
    fn rate_report_degenerate() {
        let r = rate_report_indices(&[1; 50], 0.3).unwrap();
        assert_eq!(r.entropy_bits, 0.0);
        assert_abs_diff_eq!(r.mean_ideal_bits, r.log2_zeta, epsilon = 1e-12);
        assert!(r.within_zeta_bound && r.within_rate_bound);
        assert_eq!(r.mean_elias_bits, 1.0);
        assert!(rate_report_indices(&[], 0.3).is_err());
        assert!(rate_report_indices(&[0], 0.3).is_err());
    }

    #[test]
    fn rate_bound_constant() {
        let r = rate_report_indices(&[1], 0.5310044064107189).unwrap();
        assert_abs_diff_eq!(r.rate_bound, 5.14548, epsilon = 1e-5);
    }

    proptest! {
        #[test]
        fn ideal_length_is_monotone(lambda in 1.001f64..5.0, n in 1u64..1_000_000) {
            let c = ZetaCoder::new(lambda).unwrap();
            prop_assert!(c.ideal_codelength(n + 1).unwrap() >= c.ideal_codelength(n).unwrap());
        }

        #[test]
        fn zeta_pmf_normalizes(lambda in 1.2f64..4.0) {
            let c = ZetaCoder::new(lambda).unwrap();
            let cut = 20_000u64;
            let partial: f64 = (1..=cut).rev().map(|k| c.pmf(k).unwrap()).sum();
            let tail = (cut as f64).powf(1.0 - lambda) / (lambda - 1.0) / c.zeta();
            prop_assert!(partial <= 1.0 + 1e-12);
            prop_assert!((partial + tail - 1.0).abs() <= tail + 1e-9);
        }

        #[test]
        fn delta_round_trip(n in 1u64..=u64::MAX) {
            let c = encode_index(n).unwrap();
            prop_assert_eq!(c.len(), elias_delta_len(n).unwrap());
            prop_assert_eq!(decode_index(&c).unwrap(), n);
        }
    }
}
