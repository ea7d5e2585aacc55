//! Overlap metrics: confusion counts, DSC and the normalized DSC.
//!
//! The normalized DSC rescales false positives by
//! `kappa = h (1 - r) / (r (1 - h))`, where `h` is the subject's positive-class
//! fraction and `r` a reference fraction (the mean over the subject's
//! structure/group cell). A subject whose structure is smaller than the
//! reference gets `kappa < 1`, so its false positives weigh less.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{BinaryMask, Fraction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn new(tp: u64, fp: u64, fn_: u64) -> Self {
        ConfusionCounts { tp, fp, fn_ }
    }

    pub fn reference_count(&self) -> u64 {
        self.tp + self.fn_
    }

    pub fn prediction_count(&self) -> u64 {
        self.tp + self.fp
    }
}

/// A metric value in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Score(pub f64);

impl Score {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// The false-positive weight of the normalized DSC.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ScaleFactor(pub f64);

pub fn confusion(reference: &BinaryMask, prediction: &BinaryMask) -> Result<ConfusionCounts> {
    if !reference.same_grid(prediction) {
        return Err(Error::GridMismatch(format!(
            "reference {:?} vs prediction {:?}",
            reference.dims().0,
            prediction.dims().0
        )));
    }
    let mut c = ConfusionCounts::default();
    for (&r, &p) in reference.bits().iter().zip(prediction.bits()) {
        match (r, p) {
            (true, true) => c.tp += 1,
            (false, true) => c.fp += 1,
            (true, false) => c.fn_ += 1,
            (false, false) => {}
        }
    }
    Ok(c)
}

/// `2 tp / (2 tp + fp + fn)`; two empty masks score 1.
pub fn dsc(counts: ConfusionCounts) -> Score {
    weighted_dice(counts, 1.0)
}

fn weighted_dice(c: ConfusionCounts, fp_weight: f64) -> Score {
    if c.tp == 0 {
        return Score(if c.fp == 0 && c.fn_ == 0 { 1.0 } else { 0.0 });
    }
    let tp2 = 2.0 * c.tp as f64;
    Score(tp2 / (tp2 + fp_weight * c.fp as f64 + c.fn_ as f64))
}

fn check_open_unit(f: Fraction) -> Result<f64> {
    let v = f.value();
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(Error::DegenerateFraction(v))
    }
}

pub fn kappa(h: Fraction, rbar: Fraction) -> Result<ScaleFactor> {
    let h = check_open_unit(h)?;
    let r = check_open_unit(rbar)?;
    Ok(ScaleFactor(h * (1.0 - r) / (r * (1.0 - h))))
}

/// `2 tp / (2 tp + kappa fp + fn)` with `kappa = kappa(h, rbar)`.
pub fn ndsc(counts: ConfusionCounts, h: Fraction, rbar: Fraction) -> Result<Score> {
    let k = kappa(h, rbar)?;
    Ok(weighted_dice(counts, k.0))
}
