//! Piecewise-linear functions on `[0, 1]` with exact coefficients.

use crate::rational::Rational;
use num_traits::{One, Zero};
use std::fmt;

/// `intercept + slope·θ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Linear {
    pub intercept: Rational,
    pub slope: Rational,
}

impl Linear {
    pub fn new(intercept: Rational, slope: Rational) -> Self {
        Linear { intercept, slope }
    }

    pub fn constant(c: Rational) -> Self {
        Linear::new(c, Rational::zero())
    }

    pub fn eval(&self, theta: &Rational) -> Rational {
        self.intercept + self.slope * theta
    }

    pub fn scale(&self, k: &Rational) -> Self {
        Linear::new(self.intercept * k, self.slope * k)
    }

    pub fn sub(&self, other: &Linear) -> Self {
        Linear::new(self.intercept - other.intercept, self.slope - other.slope)
    }
}

impl fmt::Display for Linear {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.slope.is_zero() {
            write!(f, "{}", self.intercept)
        } else {
            write!(f, "{} + {}θ", self.intercept, self.slope)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LinearPiece {
    pub start: Rational,
    pub end: Rational,
    pub f: Linear,
}

/// Sorted, non-overlapping pieces `[start, end)`; gaps mean "undefined".
/// A piece ending at 1 also covers 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct PiecewiseLinearFn {
    pieces: Vec<LinearPiece>,
}

impl PiecewiseLinearFn {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends `[start, end)`; merges with the previous piece when it continues
    /// the same formula. Empty pieces are ignored.
    pub fn push(&mut self, start: Rational, end: Rational, f: Linear) {
        if start >= end {
            return;
        }
        if let Some(last) = self.pieces.last_mut() {
            assert!(last.end <= start, "pieces must be pushed in order");
            if last.end == start && last.f == f {
                last.end = end;
                return;
            }
        }
        self.pieces.push(LinearPiece { start, end, f });
    }

    pub fn pieces(&self) -> &[LinearPiece] {
        &self.pieces
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    /// The piece whose domain contains `theta`.
    pub fn piece_at(&self, theta: &Rational) -> Option<&LinearPiece> {
        let idx = self.pieces.partition_point(|p| p.end <= *theta);
        match self.pieces.get(idx) {
            Some(p) if p.start <= *theta => Some(p),
            _ => self.pieces.last().filter(|p| p.end == *theta && p.end.is_one()),
        }
    }

    pub fn eval(&self, theta: &Rational) -> Option<Rational> {
        self.piece_at(theta).map(|p| p.f.eval(theta))
    }

    /// All piece endpoints, sorted and deduplicated.
    pub fn breakpoints(&self) -> Vec<Rational> {
        let mut out: Vec<Rational> = self.pieces.iter().flat_map(|p| [p.start, p.end]).collect();
        out.dedup();
        out
    }

    pub fn scale(&self, k: &Rational) -> Self {
        PiecewiseLinearFn {
            pieces: self
                .pieces
                .iter()
                .map(|p| LinearPiece {
                    start: p.start,
                    end: p.end,
                    f: p.f.scale(k),
                })
                .collect(),
        }
    }

    /// True when the function is defined on all of `[0, 1]`.
    pub fn covers_unit_interval(&self) -> bool {
        let mut cursor = Rational::zero();
        for p in &self.pieces {
            if p.start != cursor {
                return false;
            }
            cursor = p.end;
        }
        cursor.is_one()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    #[test]
    fn evaluates_with_half_open_pieces() {
        let mut f = PiecewiseLinearFn::new();
        f.push(int(0), rat(1, 2), Linear::new(int(1), int(-2)));
        f.push(rat(1, 2), int(1), Linear::new(int(-1), int(2)));
        assert_eq!(f.eval(&rat(1, 4)), Some(rat(1, 2)));
        assert_eq!(f.eval(&rat(1, 2)), Some(int(0)));
        assert_eq!(f.eval(&int(1)), Some(int(1)));
        assert_eq!(f.breakpoints(), vec![int(0), rat(1, 2), int(1)]);
        assert!(f.covers_unit_interval());
    }

    #[test]
    fn merges_and_leaves_gaps() {
        let mut f = PiecewiseLinearFn::new();
        f.push(int(0), rat(1, 4), Linear::constant(int(2)));
        f.push(rat(1, 4), rat(1, 2), Linear::constant(int(2)));
        f.push(rat(3, 4), int(1), Linear::constant(int(5)));
        assert_eq!(f.pieces().len(), 2);
        assert_eq!(f.eval(&rat(5, 8)), None);
        assert_eq!(f.eval(&rat(1, 2)), None);
        assert!(!f.covers_unit_interval());
        assert_eq!(f.scale(&int(3)).eval(&rat(7, 8)), Some(int(15)));
    }
}
