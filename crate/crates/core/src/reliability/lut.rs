use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use super::cdf::{mttf, quantile_with_doubling};
use super::chain::ChainParams;
use super::ReliabilityError;
use crate::model::ClassMix;
use crate::{Minutes, VuClass};

/// Frozen replacement time, chosen by [`calibrate_t_mttr`] over
/// [`T_MTTR_CANDIDATES`] against a three-VU SRT MTTF of about 2200 min.
pub const DEFAULT_T_MTTR: u32 = 5;
pub const T_MTTR_CANDIDATES: [u32; 5] = [5, 10, 15, 20, 30];
pub const CALIBRATION_TARGET_MTTF: f64 = 2200.0;

/// Redundancy range tabulated for one class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassRange {
    pub class: VuClass,
    pub mean_residency_min: f64,
    pub n_min: u32,
    pub n_max: u32,
}

impl ClassRange {
    /// Bounds used by the allocator: SRT 3..=5, MRT 2..=4, LRT 2..=3.
    pub fn default_bounds(class: VuClass) -> (u32, u32) {
        match class {
            VuClass::Srt => (3, 5),
            VuClass::Mrt => (2, 4),
            VuClass::Lrt => (2, 3),
        }
    }

    pub fn defaults_for(mix: &ClassMix) -> Vec<ClassRange> {
        VuClass::ALL
            .iter()
            .map(|&class| {
                let (n_min, n_max) = Self::default_bounds(class);
                ClassRange { class, mean_residency_min: mix.profile(class).mean_residency_min, n_min, n_max }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LutEntry {
    pub class: VuClass,
    pub n: u32,
    /// Quantile time of the failure CDF; MT99R when `q = 0.01`.
    pub mt99r_min: Minutes,
    pub params: ChainParams,
    pub q: f64,
}

/// `(class, n) → MT99R` table consulted for splitting and recruitment.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Lut {
    entries: BTreeMap<(VuClass, u32), LutEntry>,
}

const CSV_HEADER: &str = "class,n,mt99r_min,lambda,t_mttr,q";

impl Lut {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a hand-specified value, e.g. for tests or an externally
    /// supplied table.
    pub fn insert(&mut self, class: VuClass, n: u32, mt99r_min: Minutes, params: ChainParams, q: f64) {
        self.entries.insert((class, n), LutEntry { class, n, mt99r_min, params, q });
    }

    pub fn get(&self, class: VuClass, n: u32) -> Option<Minutes> {
        self.entries.get(&(class, n)).map(|e| e.mt99r_min)
    }

    pub fn mt99r(&self, class: VuClass, n: u32) -> Result<Minutes, ReliabilityError> {
        self.get(class, n).ok_or(ReliabilityError::MissingEntry { class, n })
    }

    pub fn entries(&self) -> impl Iterator<Item = &LutEntry> {
        self.entries.values()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn covers(&self, class: VuClass, n_min: u32, n_max: u32) -> bool {
        (n_min..=n_max).all(|n| self.entries.contains_key(&(class, n)))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for e in self.entries.values() {
            let _ =
                writeln!(out, "{},{},{},{},{},{}", e.class, e.n, e.mt99r_min, e.params.lambda, e.params.t_mttr, e.q);
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, ReliabilityError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == CSV_HEADER => {}
            _ => return Err(ReliabilityError::Parse { line: 1, msg: format!("expected header `{CSV_HEADER}`") }),
        }
        let mut lut = Lut::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let err = |msg: String| ReliabilityError::Parse { line: i + 1, msg };
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 6 {
                return Err(err(format!("expected 6 columns, found {}", cols.len())));
            }
            let class: VuClass = cols[0].parse().map_err(|e| err(format!("{e}")))?;
            let n: u32 = cols[1].parse().map_err(|_| err("bad n".into()))?;
            let mt: Minutes = cols[2].parse().map_err(|_| err("bad mt99r_min".into()))?;
            let lambda: f64 = cols[3].parse().map_err(|_| err("bad lambda".into()))?;
            let t_mttr: u32 = cols[4].parse().map_err(|_| err("bad t_mttr".into()))?;
            let q: f64 = cols[5].parse().map_err(|_| err("bad q".into()))?;
            lut.insert(class, n, mt, ChainParams { n, lambda, t_mttr, step_min: 1 }, q);
        }
        Ok(lut)
    }
}

/// Computes one quantile entry per `(class, n)` in the given ranges.
pub fn build_lut(ranges: &[ClassRange], t_mttr: u32, q: f64) -> Result<Lut, ReliabilityError> {
    let cells: Vec<(VuClass, u32, ChainParams)> = ranges
        .iter()
        .flat_map(|r| (r.n_min..=r.n_max).map(move |n| (r.class, n, ChainParams::new(n, r.mean_residency_min, t_mttr))))
        .collect();
    let computed: Vec<Result<LutEntry, ReliabilityError>> = cells
        .into_par_iter()
        .map(|(class, n, params)| {
            let t = quantile_with_doubling(&params, q)?;
            Ok(LutEntry { class, n, mt99r_min: t, params, q })
        })
        .collect();
    let mut lut = Lut::new();
    for entry in computed {
        let e = entry?;
        lut.entries.insert((e.class, e.n), e);
    }
    Ok(lut)
}

/// Picks the candidate whose three-VU MTTF for the given residency is
/// closest to `target` in log-ratio. Returns the choice and every MTTF tried.
pub fn calibrate_t_mttr(
    candidates: &[u32],
    mean_residency_min: f64,
    target: f64,
) -> Result<(u32, Vec<(u32, Minutes)>), ReliabilityError> {
    let mut tried = Vec::with_capacity(candidates.len());
    for &t in candidates {
        tried.push((t, mttf(&ChainParams::new(3, mean_residency_min, t))?));
    }
    let best = tried
        .iter()
        .min_by(|a, b| {
            let ea = (a.1 as f64 / target).ln().abs();
            let eb = (b.1 as f64 / target).ln().abs();
            ea.total_cmp(&eb)
        })
        .map(|(t, _)| *t)
        .ok_or_else(|| ReliabilityError::InvalidParams("no calibration candidates".into()))?;
    Ok((best, tried))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_lut() -> Lut {
        build_lut(&ClassRange::defaults_for(&ClassMix::default()), DEFAULT_T_MTTR, 0.01).unwrap()
    }

    #[test]
    fn default_ranges_give_eight_rows() {
        let lut = default_lut();
        assert_eq!(lut.len(), 8);
        assert!(lut.covers(VuClass::Srt, 3, 5));
        assert!(lut.covers(VuClass::Mrt, 2, 4));
        assert!(lut.covers(VuClass::Lrt, 2, 3));
        assert!(lut.get(VuClass::Srt, 2).is_none());
    }

    #[test]
    fn monotone_in_redundancy_and_residency() {
        let lut = default_lut();
        let m = |c, n| lut.get(c, n).unwrap();
        assert!(m(VuClass::Mrt, 2) < m(VuClass::Mrt, 3));
        assert!(m(VuClass::Mrt, 3) < m(VuClass::Mrt, 4));
        assert!(m(VuClass::Srt, 3) < m(VuClass::Srt, 4));
        assert!(m(VuClass::Lrt, 3) > m(VuClass::Srt, 3));
        assert!(m(VuClass::Lrt, 2) > m(VuClass::Mrt, 2));
    }

    #[test]
    fn csv_round_trip_is_stable() {
        let lut = default_lut();
        let text = lut.to_csv();
        assert!(text.starts_with("class,n,mt99r_min,lambda,t_mttr,q\n"));
        assert_eq!(text.lines().count(), 9);
        let back = Lut::from_csv(&text).unwrap();
        assert_eq!(back.to_csv(), text);
        assert_eq!(default_lut().to_csv(), text);
    }

    #[test]
    fn csv_errors_name_the_line() {
        let bad = "class,n,mt99r_min,lambda,t_mttr,q\nSRT,3,56,0.01,5,0.01\nXRT,3,1,1,1,1\n";
        assert_eq!(
            Lut::from_csv(bad).unwrap_err(),
            ReliabilityError::Parse { line: 3, msg: "unknown VU class `XRT`".into() }
        );
        assert!(matches!(Lut::from_csv("nope\n"), Err(ReliabilityError::Parse { line: 1, .. })));
    }

    #[test]
    fn calibration_selects_frozen_default() {
        let (best, tried) = calibrate_t_mttr(&T_MTTR_CANDIDATES, 120.0, CALIBRATION_TARGET_MTTF).unwrap();
        assert_eq!(best, DEFAULT_T_MTTR);
        assert_eq!(tried.len(), 5);
        // MTTF shrinks as recruitment slows down.
        assert!(tried.windows(2).all(|w| w[0].1 > w[1].1));
    }
}
