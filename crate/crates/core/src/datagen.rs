//! Seedable synthetic generators for thirteen identifier categories, each
//! with a hand-written validator.

use std::fmt;
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

const REGION_CODES_RAW: &str = include_str!("../data/region_codes.txt");

const PROVINCES: &[char] = &[
    '京', '津', '沪', '渝', '冀', '豫', '云', '辽', '黑', '湘', '皖', '鲁', '新', '苏', '浙', '赣',
    '鄂', '桂', '甘', '晋', '蒙', '陕', '吉', '闽', '贵', '粤', '青', '藏', '川', '宁', '琼',
];

const EMAIL_SUFFIXES: &[&str] = &["qq.com", "163.com", "gmail.com"];

const CERT_WEIGHTS: [u32; 17] = [7, 9, 10, 5, 8, 4, 2, 1, 6, 3, 7, 9, 10, 5, 8, 4, 2];
const CERT_CHECK: &[u8; 11] = b"10X98765432";

/// Largest allowed share of format-violating samples.
pub const MAX_NOISE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    Mac,
    Imei,
    Ip,
    InvoiceCode,
    InvoiceNumber,
    Mobile,
    HouseId,
    CarEngine,
    CompanyUnicode,
    Cert,
    CarLicense,
    Email,
    Bankcard,
}

/// Ordered pairs `(a, b)` where at least 1% of `a` samples also pass `b`'s
/// validator. A certificate number from a region starting with 62 and a
/// digit check character is an 18-digit string with a bank prefix.
pub const AMBIGUOUS_PAIRS: &[(Category, Category)] = &[(Category::Cert, Category::Bankcard)];

impl Category {
    pub const ALL: [Category; 13] = [
        Category::Mac,
        Category::Imei,
        Category::Ip,
        Category::InvoiceCode,
        Category::InvoiceNumber,
        Category::Mobile,
        Category::HouseId,
        Category::CarEngine,
        Category::CompanyUnicode,
        Category::Cert,
        Category::CarLicense,
        Category::Email,
        Category::Bankcard,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::Mac => "mac",
            Category::Imei => "imei",
            Category::Ip => "ip",
            Category::InvoiceCode => "invoice-code",
            Category::InvoiceNumber => "invoice-number",
            Category::Mobile => "mobile",
            Category::HouseId => "house-id",
            Category::CarEngine => "car-engine",
            Category::CompanyUnicode => "company-unicode",
            Category::Cert => "cert",
            Category::CarLicense => "car-license",
            Category::Email => "email",
            Category::Bankcard => "bankcard",
        }
    }

    fn index(self) -> u64 {
        Category::ALL.iter().position(|&c| c == self).unwrap() as u64
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum DatagenError {
    #[error("unknown category {0:?}")]
    UnknownCategory(String),
    #[error("count must be at least 1")]
    ZeroCount,
    #[error("noise fraction {0} is outside [0, {MAX_NOISE}]")]
    BadNoise(f64),
    #[error("mac pair count must be at least 1")]
    BadMacPairs,
}

impl FromStr for Category {
    type Err = DatagenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL
            .iter()
            .copied()
            .find(|c| c.name() == s)
            .ok_or_else(|| DatagenError::UnknownCategory(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub category: Category,
    pub count: usize,
    pub seed: u64,
    pub noise_fraction: f64,
    /// Hex pairs per MAC address.
    pub mac_pairs: usize,
}

impl DatasetSpec {
    pub fn new(category: Category, count: usize, seed: u64) -> Self {
        DatasetSpec {
            category,
            count,
            seed,
            noise_fraction: 0.0,
            mac_pairs: 8,
        }
    }

    pub fn with_noise(mut self, fraction: f64) -> Self {
        self.noise_fraction = fraction;
        self
    }

    pub fn validate(&self) -> Result<(), DatagenError> {
        if self.count == 0 {
            return Err(DatagenError::ZeroCount);
        }
        if !(0.0..=MAX_NOISE).contains(&self.noise_fraction) {
            return Err(DatagenError::BadNoise(self.noise_fraction));
        }
        if self.mac_pairs == 0 {
            return Err(DatagenError::BadMacPairs);
        }
        Ok(())
    }

    /// Number of samples replaced by noise.
    pub fn noise_count(&self) -> usize {
        (self.noise_fraction * self.count as f64).round() as usize
    }
}

pub fn region_codes() -> Vec<&'static str> {
    REGION_CODES_RAW
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect()
}

fn digits<R: Rng + ?Sized>(rng: &mut R, n: usize) -> String {
    (0..n)
        .map(|_| char::from(b'0' + rng.gen_range(0..10u8)))
        .collect()
}

fn from_alphabet<R: Rng + ?Sized>(rng: &mut R, alphabet: &[u8], n: usize) -> String {
    (0..n)
        .map(|_| char::from(*alphabet.choose(rng).unwrap()))
        .collect()
}

const UPPER_ALNUM: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
const LOWER_ALNUM: &[u8] = b"abcdefghijklmnopqrstuvwxyz0123456789";
const HEX: &[u8] = b"0123456789abcdef";

fn days_in_month(year: u32, month: u32) -> u32 {
    match month {
        2 if (year.is_multiple_of(4) && !year.is_multiple_of(100)) || year.is_multiple_of(400) => {
            29
        }
        2 => 28,
        4 | 6 | 9 | 11 => 30,
        _ => 31,
    }
}

/// Check character for the first 17 characters of a certificate number.
pub fn cert_check_char(body: &str) -> char {
    let sum: u32 = body
        .chars()
        .zip(CERT_WEIGHTS)
        .map(|(c, w)| c.to_digit(10).expect("digit body") * w)
        .sum();
    char::from(CERT_CHECK[(sum % 11) as usize])
}

fn gen_one<R: Rng + ?Sized>(cat: Category, rng: &mut R, mac_pairs: usize) -> String {
    match cat {
        Category::Mac => (0..mac_pairs)
            .map(|_| from_alphabet(rng, HEX, 2))
            .collect::<Vec<_>>()
            .join(":"),
        Category::Imei => format!("86{}", digits(rng, 13)),
        Category::Ip => (0..4)
            .map(|_| rng.gen_range(1..=255u32).to_string())
            .collect::<Vec<_>>()
            .join("."),
        Category::InvoiceCode => {
            let n = if rng.gen_bool(0.5) { 10 } else { 12 };
            digits(rng, n)
        }
        Category::InvoiceNumber => digits(rng, 8),
        Category::Mobile => format!("{}{}", ["13", "15"].choose(rng).unwrap(), digits(rng, 9)),
        Category::HouseId => format!("{}{}", ["17", "18"].choose(rng).unwrap(), digits(rng, 16)),
        Category::CarEngine => loop {
            let n = rng.gen_range(6..=17);
            let s = from_alphabet(rng, UPPER_ALNUM, n);
            if s.bytes().any(|b| b.is_ascii_alphabetic()) {
                break s;
            }
        },
        Category::CompanyUnicode => format!("91{}", from_alphabet(rng, UPPER_ALNUM, 16)),
        Category::Cert => {
            let region = *region_codes().choose(rng).unwrap();
            let year = rng.gen_range(1940..=2019u32);
            let month = rng.gen_range(1..=12u32);
            let day = rng.gen_range(1..=days_in_month(year, month));
            let body = format!("{region}{year}{month:02}{day:02}{}", digits(rng, 3));
            let check = cert_check_char(&body);
            format!("{body}{check}")
        }
        Category::CarLicense => format!(
            "{}{}",
            PROVINCES.choose(rng).unwrap(),
            from_alphabet(rng, UPPER_ALNUM, 6)
        ),
        Category::Email => {
            let n = rng.gen_range(3..=12);
            let first = char::from(rng.gen_range(b'a'..=b'z'));
            format!(
                "{first}{}@{}",
                from_alphabet(rng, LOWER_ALNUM, n - 1),
                EMAIL_SUFFIXES.choose(rng).unwrap()
            )
        }
        Category::Bankcard => {
            let prefix = *["62", "621", "622"].choose(rng).unwrap();
            let len = rng.gen_range(16..=19);
            format!("{prefix}{}", digits(rng, len - prefix.len()))
        }
    }
}

/// A random printable string that fails `cat`'s validator.
fn junk<R: Rng + ?Sized>(cat: Category, rng: &mut R, mac_pairs: usize) -> String {
    const PRINTABLE: &[u8] =
        b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789!#%&*+,-./:;=?@_~ ";
    loop {
        let n = rng.gen_range(3..=20);
        let s = from_alphabet(rng, PRINTABLE, n);
        if !validate_with(cat, &s, mac_pairs) {
            return s;
        }
    }
}

fn rng_for(spec: &DatasetSpec) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(spec.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ spec.category.index())
}

/// `spec.count` samples; `noise_count()` of them, at random positions, are
/// replaced by format-violating junk.
pub fn generate(spec: &DatasetSpec) -> Result<Vec<String>, DatagenError> {
    spec.validate()?;
    let mut rng = rng_for(spec);
    let mut out: Vec<String> = (0..spec.count)
        .map(|_| gen_one(spec.category, &mut rng, spec.mac_pairs))
        .collect();
    for i in index::sample(&mut rng, spec.count, spec.noise_count()).into_vec() {
        out[i] = junk(spec.category, &mut rng, spec.mac_pairs);
    }
    Ok(out)
}

/// `count` samples of `cat` with no noise.
pub fn samples(cat: Category, count: usize, seed: u64) -> Vec<String> {
    generate(&DatasetSpec::new(cat, count, seed)).expect("valid spec")
}

fn all_bytes(s: &str, n: usize, f: impl Fn(u8) -> bool) -> bool {
    s.len() == n && s.bytes().all(f)
}

fn is_digits(s: &str, n: usize) -> bool {
    all_bytes(s, n, |b| b.is_ascii_digit())
}

fn valid_cert(s: &str) -> bool {
    if s.len() != 18 || !is_digits(&s[..17], 17) {
        return false;
    }
    let (region, year, month, day) = (&s[..6], &s[6..10], &s[10..12], &s[12..14]);
    if !region_codes().contains(&region) || !(year.starts_with("19") || year.starts_with("20")) {
        return false;
    }
    let (y, m, d): (u32, u32, u32) = (
        year.parse().unwrap(),
        month.parse().unwrap(),
        day.parse().unwrap(),
    );
    if !(1..=12).contains(&m) || d == 0 || d > days_in_month(y, m) {
        return false;
    }
    s.chars().nth(17) == Some(cert_check_char(&s[..17]))
}

fn validate_with(cat: Category, s: &str, mac_pairs: usize) -> bool {
    match cat {
        Category::Mac => {
            let parts: Vec<&str> = s.split(':').collect();
            parts.len() == mac_pairs && parts.iter().all(|p| all_bytes(p, 2, |b| HEX.contains(&b)))
        }
        Category::Imei => is_digits(s, 15) && s.starts_with("86"),
        Category::Ip => {
            let parts: Vec<&str> = s.split('.').collect();
            parts.len() == 4
                && parts.iter().all(|p| {
                    !p.is_empty()
                        && p.len() <= 3
                        && !p.starts_with('0')
                        && p.bytes().all(|b| b.is_ascii_digit())
                        && (1..=255).contains(&p.parse::<u32>().unwrap())
                })
        }
        Category::InvoiceCode => is_digits(s, 10) || is_digits(s, 12),
        Category::InvoiceNumber => is_digits(s, 8),
        Category::Mobile => is_digits(s, 11) && (s.starts_with("13") || s.starts_with("15")),
        Category::HouseId => is_digits(s, 18) && (s.starts_with("17") || s.starts_with("18")),
        Category::CarEngine => {
            (6..=17).contains(&s.len())
                && s.bytes().all(|b| UPPER_ALNUM.contains(&b))
                && s.bytes().any(|b| b.is_ascii_alphabetic())
        }
        Category::CompanyUnicode => {
            s.starts_with("91") && all_bytes(s, 18, |b| UPPER_ALNUM.contains(&b))
        }
        Category::Cert => valid_cert(s),
        Category::CarLicense => {
            let mut it = s.chars();
            it.next().is_some_and(|c| PROVINCES.contains(&c))
                && all_bytes(it.as_str(), 6, |b| UPPER_ALNUM.contains(&b))
        }
        Category::Email => match s.split_once('@') {
            Some((local, domain)) => {
                EMAIL_SUFFIXES.contains(&domain)
                    && (3..=12).contains(&local.len())
                    && local.as_bytes()[0].is_ascii_lowercase()
                    && local.bytes().all(|b| LOWER_ALNUM.contains(&b))
            }
            None => false,
        },
        Category::Bankcard => {
            (16..=19).contains(&s.len())
                && s.bytes().all(|b| b.is_ascii_digit())
                && s.starts_with("62")
        }
    }
}

/// Whether `s` follows `cat`'s format rule (eight-pair MACs).
pub fn validate(cat: Category, s: &str) -> bool {
    validate_with(cat, s, 8)
}
