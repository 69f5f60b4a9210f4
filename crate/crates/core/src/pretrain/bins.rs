use crate::error::{Error, Result};

/// Uniform distance bins over `[lo, hi)`; anything outside is clamped to
/// the first or last class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinSpec {
    pub classes: usize,
    pub lo: f64,
    pub hi: f64,
}

impl BinSpec {
    pub fn new(classes: usize, lo: f64, hi: f64) -> Result<Self> {
        if classes < 2 || !(lo < hi) {
            return Err(Error::InvalidConfig("bins need T >= 2 and lo < hi".into()));
        }
        Ok(Self { classes, lo, hi })
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.classes as f64
    }

    pub fn label(&self, d: f64) -> usize {
        let k = libm::floor((d - self.lo) / self.width());
        if k <= 0.0 {
            0
        } else {
            (k as usize).min(self.classes - 1)
        }
    }
}
