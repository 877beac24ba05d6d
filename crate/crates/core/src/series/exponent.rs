use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use smallvec::SmallVec;

/// Multidegree of a monomial. Ordered by total degree, then with larger
/// leading powers first (so `x² < xy < y²`).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Exponent {
    degree: u32,
    powers: SmallVec<[u16; 8]>,
}

impl Exponent {
    pub fn new(powers: &[u32]) -> Self {
        Self {
            degree: powers.iter().sum(),
            powers: powers.iter().map(|&p| u16::try_from(p).expect("exponent overflow")).collect(),
        }
    }

    pub fn zero(nvars: usize) -> Self {
        Self { degree: 0, powers: SmallVec::from_elem(0, nvars) }
    }

    pub fn unit(nvars: usize, i: usize) -> Self {
        let mut e = Self::zero(nvars);
        e.powers[i] = 1;
        e.degree = 1;
        e
    }

    pub fn nvars(&self) -> usize {
        self.powers.len()
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn get(&self, i: usize) -> u32 {
        u32::from(self.powers[i])
    }

    pub fn powers(&self) -> impl Iterator<Item = u32> + '_ {
        self.powers.iter().map(|&p| u32::from(p))
    }

    pub fn to_vec(&self) -> Vec<u32> {
        self.powers().collect()
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.nvars(), other.nvars());
        Self {
            degree: self.degree + other.degree,
            powers: self.powers.iter().zip(&other.powers).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn checked_sub(&self, other: &Self) -> Option<Self> {
        if !other.divides(self) {
            return None;
        }
        Some(Self {
            degree: self.degree - other.degree,
            powers: self.powers.iter().zip(&other.powers).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn bump(&self, i: usize) -> Self {
        let mut e = self.clone();
        e.powers[i] += 1;
        e.degree += 1;
        e
    }

    /// `self - e_i`, if the power of variable `i` is positive.
    pub fn drop_one(&self, i: usize) -> Option<Self> {
        if self.powers[i] == 0 {
            return None;
        }
        let mut e = self.clone();
        e.powers[i] -= 1;
        e.degree -= 1;
        Some(e)
    }

    /// Componentwise `self <= other`.
    pub fn divides(&self, other: &Self) -> bool {
        self.powers.iter().zip(&other.powers).all(|(a, b)| a <= b)
    }

    pub fn dot(&self, m: &[i64]) -> i64 {
        self.powers.iter().zip(m).map(|(&a, &b)| i64::from(a) * b).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.degree == 0
    }

    /// Index of the last variable with a positive power.
    pub fn last_nonzero(&self) -> Option<usize> {
        self.powers.iter().rposition(|&p| p > 0)
    }

    pub fn with_power(&self, i: usize, p: u32) -> Self {
        let mut v = self.to_vec();
        v[i] = p;
        Self::new(&v)
    }

    pub fn permuted(&self, perm: &[usize]) -> Self {
        let v: Vec<u32> = perm.iter().map(|&j| self.get(j)).collect();
        Self::new(&v)
    }
}

impl Ord for Exponent {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree.cmp(&other.degree).then_with(|| other.powers.cmp(&self.powers))
    }
}

impl PartialOrd for Exponent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.to_vec())
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_vec().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Vec::<u32>::deserialize(d)?;
        if v.iter().any(|&p| p > u32::from(u16::MAX)) {
            return Err(serde::de::Error::custom("exponent too large"));
        }
        Ok(Exponent::new(&v))
    }
}

/// All exponents in `nvars` variables of total degree exactly `degree`, in canonical order.
pub fn monomials_of_degree(nvars: usize, degree: u32) -> Vec<Exponent> {
    let mut out = Vec::new();
    let mut current = vec![0u32; nvars];
    fn rec(i: usize, left: u32, cur: &mut [u32], out: &mut Vec<Exponent>) {
        if i + 1 == cur.len() {
            cur[i] = left;
            out.push(Exponent::new(cur));
            return;
        }
        for p in (0..=left).rev() {
            cur[i] = p;
            rec(i + 1, left - p, cur, out);
        }
    }
    if nvars == 0 {
        if degree == 0 {
            out.push(Exponent::new(&[]));
        }
        return out;
    }
    rec(0, degree, &mut current, &mut out);
    out
}

/// All exponents with total degree in `lo..=hi`, in canonical order.
pub fn monomials_up_to(nvars: usize, lo: u32, hi: u32) -> Vec<Exponent> {
    (lo..=hi).flat_map(|d| monomials_of_degree(nvars, d)).collect()
}
