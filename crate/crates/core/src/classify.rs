//! Quadrant typing of signed-distance persistence pairs.
//!
//! With a signed distance filtration every critical value is nonzero, so a
//! pair sits in one quadrant of its diagram (SW: both ends negative, NW:
//! negative birth and positive death, NE: both positive). Dimension plus
//! quadrant determines one of seven types:
//!
//! | dim | SW  | NW | NE  |
//! |-----|-----|----|-----|
//! | 0   | I   | II | --  |
//! | 1   | III | IV | V   |
//! | 2   | --  | VI | VII |
//!
//! The dashed cells cannot occur for a generic shape; a pair landing there is
//! reported as [`Error::ForbiddenQuadrant`].

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cubical::{Diagram, PersistencePair};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PairType {
    I,
    II,
    III,
    IV,
    V,
    VI,
    VII,
    #[serde(rename = "ESS")]
    Essential,
}

impl PairType {
    pub const ALL: [PairType; 8] = [
        PairType::I,
        PairType::II,
        PairType::III,
        PairType::IV,
        PairType::V,
        PairType::VI,
        PairType::VII,
        PairType::Essential,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PairType::I => "I",
            PairType::II => "II",
            PairType::III => "III",
            PairType::IV => "IV",
            PairType::V => "V",
            PairType::VI => "VI",
            PairType::VII => "VII",
            PairType::Essential => "ESS",
        }
    }
}

impl fmt::Display for PairType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PairType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PairType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown pair type {s:?}")))
    }
}

pub fn classify_pair(pair: &PersistencePair) -> Result<PairType> {
    let (b, d) = (pair.birth, pair.death);
    if b == 0.0 || d == 0.0 {
        return Err(Error::ZeroCriticalValue(Box::new(pair.clone())));
    }
    let forbidden = || Error::ForbiddenQuadrant(Box::new(pair.clone()));
    if pair.is_essential() {
        return if pair.dim == 0 {
            Ok(PairType::Essential)
        } else {
            Err(forbidden())
        };
    }
    let ty = match (pair.dim, b < 0.0, d < 0.0) {
        (0, true, true) => PairType::I,
        (0, true, false) => PairType::II,
        (1, true, true) => PairType::III,
        (1, true, false) => PairType::IV,
        (1, false, false) => PairType::V,
        (2, true, false) => PairType::VI,
        (2, false, false) => PairType::VII,
        _ => return Err(forbidden()),
    };
    Ok(ty)
}

/// Keeps pairs with `death - birth >= min_pers`; essential pairs always stay.
pub fn filter_persistence(dgm: &Diagram, min_pers: f64) -> Diagram {
    Diagram {
        pairs: dgm
            .pairs
            .iter()
            .filter(|p| p.is_essential() || p.persistence() >= min_pers)
            .cloned()
            .collect(),
        meta: dgm.meta.clone(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextureSummary {
    pub counts: BTreeMap<PairType, usize>,
    pub n_components_estimate: usize,
    pub genus_estimate: usize,
    /// 25/50/75% persistence quantiles per finite pair type.
    pub persistence_quantiles: BTreeMap<PairType, [f64; 3]>,
    pub min_pers: f64,
}

impl TextureSummary {
    pub fn count(&self, ty: PairType) -> usize {
        self.counts.get(&ty).copied().unwrap_or(0)
    }
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn summarize(dgm: &Diagram, min_pers: f64) -> Result<TextureSummary> {
    let kept = filter_persistence(dgm, min_pers);
    let mut counts = BTreeMap::new();
    let mut pers: BTreeMap<PairType, Vec<f64>> = BTreeMap::new();
    for p in &kept.pairs {
        let ty = classify_pair(p)?;
        *counts.entry(ty).or_insert(0) += 1;
        if ty != PairType::Essential {
            pers.entry(ty).or_default().push(p.persistence());
        }
    }
    let persistence_quantiles = pers
        .into_iter()
        .map(|(ty, mut v)| {
            v.sort_by(f64::total_cmp);
            (ty, [0.25, 0.5, 0.75].map(|q| quantile(&v, q)))
        })
        .collect();
    let n_ii = counts.get(&PairType::II).copied().unwrap_or(0);
    let n_iv = counts.get(&PairType::IV).copied().unwrap_or(0);
    Ok(TextureSummary {
        counts,
        n_components_estimate: n_ii + 1,
        genus_estimate: n_iv,
        persistence_quantiles,
        min_pers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cubical::DiagramMeta;

    fn p(dim: u8, b: f64, d: f64) -> PersistencePair {
        PersistencePair::finite(dim, b, d)
    }

    #[test]
    fn documented_examples() {
        assert_eq!(classify_pair(&p(0, -2.0, -0.5)).unwrap(), PairType::I);
        assert_eq!(classify_pair(&p(1, -1.0, 3.0)).unwrap(), PairType::IV);
        assert_eq!(classify_pair(&p(2, 1.0, 4.0)).unwrap(), PairType::VII);
        assert_eq!(
            classify_pair(&PersistencePair::essential(0, -2.0)).unwrap(),
            PairType::Essential
        );
    }

    #[test]
    fn every_allowed_quadrant() {
        let cases = [
            (0, -2.0, 1.0, PairType::II),
            (1, -3.0, -1.0, PairType::III),
            (1, 1.0, 2.0, PairType::V),
            (2, -1.0, 2.0, PairType::VI),
        ];
        for (dim, b, d, ty) in cases {
            assert_eq!(classify_pair(&p(dim, b, d)).unwrap(), ty);
        }
    }

    #[test]
    fn forbidden_quadrants() {
        for pair in [
            p(0, 1.0, 2.0),
            p(2, -3.0, -1.0),
            p(1, 1.0, -1.0),
            PersistencePair::essential(1, -1.0),
        ] {
            assert!(matches!(
                classify_pair(&pair),
                Err(Error::ForbiddenQuadrant(_))
            ));
        }
    }

    #[test]
    fn zero_values_rejected() {
        assert!(matches!(
            classify_pair(&p(1, 0.0, 1.0)),
            Err(Error::ZeroCriticalValue(_))
        ));
    }

    #[test]
    fn filter_rules() {
        let dgm = Diagram::new(
            vec![
                PersistencePair::essential(0, -3.0),
                p(0, 1.0, 1.3),
                p(1, -1.0, 2.0),
            ],
            DiagramMeta::default(),
        );
        let f = filter_persistence(&dgm, 0.5);
        assert_eq!(f.pairs.len(), 2);
        assert!(f.pairs.iter().all(|q| q.birth != 1.0));
        assert_eq!(filter_persistence(&dgm, 0.0), dgm);
    }

    #[test]
    fn summary_counts_and_estimates() {
        let dgm = Diagram::new(
            vec![
                PersistencePair::essential(0, -5.0),
                p(0, -4.0, 2.0),
                p(0, -3.0, -2.9),
                p(1, -2.0, 1.0),
                p(1, -2.0, 3.0),
                p(1, -1.0, 0.5),
                p(2, -1.0, 6.0),
            ],
            DiagramMeta::default(),
        );
        let s = summarize(&dgm, 0.5).unwrap();
        assert_eq!(s.count(PairType::Essential), 1);
        assert_eq!(s.count(PairType::I), 0);
        assert_eq!(s.count(PairType::II), 1);
        assert_eq!(s.count(PairType::IV), 3);
        assert_eq!(s.n_components_estimate, 2);
        assert_eq!(s.genus_estimate, 3);
        assert_eq!(s.persistence_quantiles[&PairType::IV], [2.25, 3.0, 4.0]);
        let json = serde_json::to_string(&s).unwrap();
        assert!(json.contains("\"ESS\":1"));
    }

    #[test]
    fn quantiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile(&v, 0.25), 2.0);
        assert_eq!(quantile(&[7.0], 0.75), 7.0);
    }
}
