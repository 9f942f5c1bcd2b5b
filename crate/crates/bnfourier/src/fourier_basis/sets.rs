use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Subset of variables as a bitmask (bit v = variable v).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IndexSet(pub u64);

impl IndexSet {
    pub const EMPTY: IndexSet = IndexSet(0);

    pub fn from_indices<I: IntoIterator<Item = usize>>(it: I) -> Self {
        IndexSet(it.into_iter().fold(0u64, |m, v| m | (1u64 << v)))
    }
    pub fn singleton(v: usize) -> Self {
        IndexSet(1u64 << v)
    }
    pub fn mask(&self) -> u64 {
        self.0
    }
    pub fn contains(&self, v: usize) -> bool {
        (self.0 >> v) & 1 == 1
    }
    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }
    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }
    pub fn insert(&mut self, v: usize) {
        self.0 |= 1u64 << v;
    }
    pub fn union(&self, o: IndexSet) -> IndexSet {
        IndexSet(self.0 | o.0)
    }
    pub fn intersect(&self, o: IndexSet) -> IndexSet {
        IndexSet(self.0 & o.0)
    }
    pub fn minus(&self, o: IndexSet) -> IndexSet {
        IndexSet(self.0 & !o.0)
    }
    pub fn is_subset(&self, o: IndexSet) -> bool {
        self.0 & !o.0 == 0
    }
    pub fn max_index(&self) -> Option<usize> {
        (self.0 != 0).then(|| 63 - self.0.leading_zeros() as usize)
    }
    pub fn min_index(&self) -> Option<usize> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize)
    }
    pub fn iter(&self) -> impl Iterator<Item = usize> {
        let mut m = self.0;
        std::iter::from_fn(move || {
            if m == 0 {
                None
            } else {
                let v = m.trailing_zeros() as usize;
                m &= m - 1;
                Some(v)
            }
        })
    }
    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }
    /// Fits within variables 0..n.
    pub fn within(&self, n: usize) -> bool {
        n >= 64 || self.0 >> n == 0
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, v) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "}}")
    }
}

impl Serialize for IndexSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_vec().serialize(s)
    }
}

impl<'de> Deserialize<'de> for IndexSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v: Vec<usize> = Vec::deserialize(d)?;
        if let Some(&bad) = v.iter().find(|&&i| i >= 64) {
            return Err(serde::de::Error::custom(format!("index {bad} out of range")));
        }
        Ok(IndexSet::from_indices(v))
    }
}

/// Coefficients with magnitude below this are not stored.
pub const DROP_TOL: f64 = 1e-14;

/// Finite map from subsets to coefficients, ordered by mask.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseSpectrum {
    pub n: usize,
    entries: BTreeMap<u64, f64>,
}

#[derive(Serialize, Deserialize)]
struct Record {
    set: IndexSet,
    coef: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(rename = "SparseSpectrum")]
struct SpectrumFile {
    n: usize,
    entries: Vec<Record>,
}

impl SparseSpectrum {
    pub fn new(n: usize) -> Self {
        SparseSpectrum {
            n,
            entries: BTreeMap::new(),
        }
    }

    /// From a dense vector indexed by mask.
    pub fn from_dense(n: usize, dense: &[f64]) -> Self {
        let mut s = SparseSpectrum::new(n);
        for (m, &c) in dense.iter().enumerate() {
            s.set(IndexSet(m as u64), c);
        }
        s
    }

    /// Sets a coefficient; tiny values remove the entry.
    pub fn set(&mut self, s: IndexSet, c: f64) {
        if c.abs() < DROP_TOL {
            self.entries.remove(&s.0);
        } else {
            self.entries.insert(s.0, c);
        }
    }

    pub fn add(&mut self, s: IndexSet, c: f64) {
        let v = self.get(s) + c;
        self.set(s, v);
    }

    pub fn get(&self, s: IndexSet) -> f64 {
        self.entries.get(&s.0).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (IndexSet, f64)> + '_ {
        self.entries.iter().map(|(&m, &c)| (IndexSet(m), c))
    }

    pub fn sets(&self) -> Vec<IndexSet> {
        self.entries.keys().map(|&m| IndexSet(m)).collect()
    }

    pub fn l1(&self) -> f64 {
        self.entries.values().map(|c| c.abs()).sum()
    }

    pub fn l2_sq(&self) -> f64 {
        self.entries.values().map(|c| c * c).sum()
    }

    pub fn linf_distance(&self, o: &SparseSpectrum) -> f64 {
        let mut d = 0.0f64;
        for (s, c) in self.iter() {
            d = d.max((c - o.get(s)).abs());
        }
        for (s, c) in o.iter() {
            d = d.max((c - self.get(s)).abs());
        }
        d
    }

    pub fn retain(&mut self, mut keep: impl FnMut(IndexSet, f64) -> bool) {
        self.entries.retain(|&m, c| keep(IndexSet(m), *c));
    }

    fn to_file(&self) -> SpectrumFile {
        SpectrumFile {
            n: self.n,
            entries: self.iter().map(|(set, coef)| Record { set, coef }).collect(),
        }
    }

    fn from_file(f: SpectrumFile) -> Result<Self> {
        let mut out = SparseSpectrum::new(f.n);
        for r in f.entries {
            if !r.set.within(f.n) {
                return Err(Error::Shape(format!("set {} outside n = {}", r.set, f.n)));
            }
            out.set(r.set, r.coef);
        }
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("spectrum serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        SparseSpectrum::from_file(serde_json::from_str(s)?)
    }
}

impl Serialize for SparseSpectrum {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_file().serialize(s)
    }
}

impl<'de> Deserialize<'de> for SparseSpectrum {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        SparseSpectrum::from_file(SpectrumFile::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_set_ops() {
        let s = IndexSet::from_indices([1, 4, 6]);
        assert_eq!(s.len(), 3);
        assert_eq!(s.max_index(), Some(6));
        assert_eq!(s.min_index(), Some(1));
        assert_eq!(s.to_vec(), vec![1, 4, 6]);
        assert!(s.contains(4) && !s.contains(5));
        assert_eq!(IndexSet::EMPTY.max_index(), None);
        assert!(s.within(7) && !s.within(6));
        assert_eq!(format!("{s}"), "{1,4,6}");
    }

    #[test]
    fn spectrum_drops_tiny_and_round_trips() {
        let mut sp = SparseSpectrum::new(3);
        sp.set(IndexSet(0b101), 0.25);
        sp.set(IndexSet(0b010), 1e-16);
        sp.set(IndexSet(0), -0.5);
        assert_eq!(sp.len(), 2);
        assert_eq!(sp.l1(), 0.75);
        let back = SparseSpectrum::from_json(&sp.to_json()).unwrap();
        assert_eq!(back, sp);
        assert_eq!(sp.sets(), vec![IndexSet(0), IndexSet(0b101)]);
    }
}
