//! Two-action symmetric games and the isolation-payoff shift.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

/// Row-player payoff matrix, indexed `[own action][partner action]`.
pub type Matrix2 = [[f64; 2]; 2];

/// Base game `B` together with the isolation payoff `C_I`.
///
/// The isolation payoff is kept apart from `B` so sweeps over `c_iso` never
/// touch the base game. [`effective_matrix`] folds it in.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PayoffSpec {
    pub b11: f64,
    pub b12: f64,
    pub b21: f64,
    pub b22: f64,
    pub c_iso: f64,
}

impl PayoffSpec {
    pub fn new(base: Matrix2, c_iso: f64) -> Result<Self> {
        let spec = Self {
            b11: base[0][0],
            b12: base[0][1],
            b21: base[1][0],
            b22: base[1][1],
            c_iso,
        };
        spec.check()?;
        Ok(spec)
    }

    pub fn base(&self) -> Matrix2 {
        [[self.b11, self.b12], [self.b21, self.b22]]
    }

    /// Same base game, different isolation payoff.
    pub fn with_isolation(&self, c_iso: f64) -> Self {
        Self { c_iso, ..*self }
    }

    /// Effective `a22 = b22 + C_I`, the pair payoff of mutual action 2.
    pub fn a22(&self) -> f64 {
        self.b22 + self.c_iso
    }

    pub fn reduced(&self) -> Result<ReducedGame> {
        reduce(&effective_matrix(self)?)
    }

    fn check(&self) -> Result<()> {
        let all = [self.b11, self.b12, self.b21, self.b22, self.c_iso];
        if all.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("non-finite payoff entry in {self:?}")))
        }
    }
}

/// Effective matrix `A = B + C_I`.
///
/// An isolated agent receives reward 0 in the dynamics; the isolation payoff
/// is accounted for entirely by this uniform shift.
pub fn effective_matrix(spec: &PayoffSpec) -> Result<Matrix2> {
    spec.check()?;
    let c = spec.c_iso;
    Ok([
        [spec.b11 + c, spec.b12 + c],
        [spec.b21 + c, spec.b22 + c],
    ])
}

/// The `(a, b, d)` parameters that drive every two-action flow.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducedGame {
    pub a: f64,
    pub b: f64,
    pub d: f64,
}

pub fn reduce(m: &Matrix2) -> Result<ReducedGame> {
    if !m.iter().flatten().all(|v| v.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite matrix {m:?}")));
    }
    let [[a11, a12], [a21, a22]] = *m;
    Ok(ReducedGame {
        a: a11 - a21 - a12 + a22,
        b: a12 - a22,
        d: a21 - a22,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GameClass {
    DominantAction,
    Coordination,
    AntiCoordination,
    /// `a = 0`, or `-b/a` sits exactly on 0 or 1.
    Degenerate,
}

impl fmt::Display for GameClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GameClass::DominantAction => "dominant-action",
            GameClass::Coordination => "coordination",
            GameClass::AntiCoordination => "anti-coordination",
            GameClass::Degenerate => "degenerate",
        };
        f.write_str(s)
    }
}

impl ReducedGame {
    pub fn new(a: f64, b: f64, d: f64) -> Self {
        Self { a, b, d }
    }

    /// Region of the `(a, b)` plane. Boundaries are decided by exact sign
    /// comparisons on the inputs, without dividing.
    pub fn classify(&self) -> GameClass {
        let (a, b) = (self.a, self.b);
        // -b/a == 0 or -b/a == 1
        if a == 0.0 || b == 0.0 || -b == a {
            return GameClass::Degenerate;
        }
        // -b/a < 0  <=>  a and b share a sign
        let negative_ratio = (a > 0.0) == (b > 0.0);
        // -b/a > 1  <=>  -b > a for a > 0, -b < a for a < 0
        let ratio_above_one = if a > 0.0 { -b > a } else { -b < a };
        if negative_ratio || ratio_above_one {
            GameClass::DominantAction
        } else if a > 0.0 {
            GameClass::Coordination
        } else {
            GameClass::AntiCoordination
        }
    }

    /// Interior mixed equilibrium `p* = -b/a`, if it lies in `(0, 1)`.
    pub fn mixed_ne(&self) -> Option<f64> {
        if self.a == 0.0 {
            return None;
        }
        let p = -self.b / self.a;
        (p > 0.0 && p < 1.0).then_some(p)
    }

    /// Expected pair payoff `a px py + b px + d py + a22` for the row agent.
    #[inline]
    pub fn pair_payoff(&self, px: f64, py: f64, a22: f64) -> f64 {
        self.a * px * py + self.b * px + self.d * py + a22
    }

    /// Payoff advantage of action 1 over action 2 against a partner playing `py`.
    #[inline]
    pub fn action_advantage(&self, py: f64) -> f64 {
        self.a * py + self.b
    }
}

pub fn classify(g: &ReducedGame) -> GameClass {
    g.classify()
}

pub fn mixed_ne(g: &ReducedGame) -> Option<f64> {
    g.mixed_ne()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn effective_matrix_shifts_uniformly() {
        let base = [[4.0, -2.0], [1.0, 0.0]];
        let zero = PayoffSpec::new(base, 0.0).unwrap();
        assert_eq!(effective_matrix(&zero).unwrap(), base);
        let one = PayoffSpec::new(base, 1.0).unwrap();
        assert_eq!(effective_matrix(&one).unwrap(), [[5.0, -1.0], [2.0, 1.0]]);
        let pd = PayoffSpec::new([[3.0, 0.0], [5.0, 1.0]], -0.5).unwrap();
        assert_eq!(effective_matrix(&pd).unwrap(), [[2.5, -0.5], [4.5, 0.5]]);
    }

    #[test]
    fn non_finite_payoff_rejected() {
        assert!(PayoffSpec::new([[f64::NAN, 0.0], [0.0, 0.0]], 0.0).is_err());
        let bad = PayoffSpec { b11: 1.0, b12: 0.0, b21: 0.0, b22: 0.0, c_iso: f64::INFINITY };
        assert!(matches!(effective_matrix(&bad), Err(Error::InvalidInput(_))));
        assert!(reduce(&[[1.0, f64::NAN], [0.0, 0.0]]).is_err());
    }

    #[test]
    fn reduce_examples() {
        assert_eq!(reduce(&[[4.0, -2.0], [1.0, 0.0]]).unwrap(), ReducedGame::new(5.0, -2.0, 1.0));
        assert_eq!(reduce(&[[2.5; 2]; 2]).unwrap(), ReducedGame::new(0.0, 0.0, 0.0));
        assert_eq!(reduce(&[[3.0, 0.0], [5.0, 1.0]]).unwrap(), ReducedGame::new(-1.0, -1.0, 4.0));
    }

    #[test]
    fn classify_examples() {
        assert_eq!(ReducedGame::new(5.0, -2.0, 1.0).classify(), GameClass::Coordination);
        assert_eq!(ReducedGame::new(-1.0, -1.0, 4.0).classify(), GameClass::DominantAction);
        assert_eq!(ReducedGame::new(-5.0, 2.0, 0.0).classify(), GameClass::AntiCoordination);
        // -b/a > 1 on both sides of a
        assert_eq!(ReducedGame::new(1.0, -3.0, 0.0).classify(), GameClass::DominantAction);
        assert_eq!(ReducedGame::new(-1.0, 3.0, 0.0).classify(), GameClass::DominantAction);
    }

    #[test]
    fn classify_boundaries_are_degenerate() {
        assert_eq!(ReducedGame::new(0.0, 1.0, 0.0).classify(), GameClass::Degenerate);
        assert_eq!(ReducedGame::new(2.0, 0.0, 0.0).classify(), GameClass::Degenerate);
        assert_eq!(ReducedGame::new(2.0, -2.0, 0.0).classify(), GameClass::Degenerate);
        assert_eq!(ReducedGame::new(-2.0, 2.0, 0.0).classify(), GameClass::Degenerate);
    }

    #[test]
    fn mixed_ne_examples() {
        assert_eq!(ReducedGame::new(5.0, -2.0, 1.0).mixed_ne(), Some(0.4));
        assert_eq!(ReducedGame::new(-1.0, -1.0, 4.0).mixed_ne(), None);
        assert_eq!(ReducedGame::new(0.0, 1.0, 0.0).mixed_ne(), None);
    }

    fn finite() -> impl Strategy<Value = f64> {
        -50.0f64..50.0
    }

    proptest! {
        #[test]
        fn reduction_is_shift_invariant(
            m in [[finite(), finite()], [finite(), finite()]],
            shift in -20.0f64..20.0,
        ) {
            let g = reduce(&m).unwrap();
            let shifted = reduce(&m.map(|row| row.map(|v| v + shift))).unwrap();
            prop_assert!((g.a - shifted.a).abs() < 1e-10);
            prop_assert!((g.b - shifted.b).abs() < 1e-10);
            prop_assert!((g.d - shifted.d).abs() < 1e-10);
        }

        #[test]
        fn prisoners_dilemma_is_dominant(
            b12 in -10.0f64..0.0, g1 in 0.01f64..5.0, g2 in 0.01f64..5.0, g3 in 0.01f64..5.0,
        ) {
            // b21 > b11 > b22 > b12
            let b22 = b12 + g1;
            let b11 = b22 + g2;
            let b21 = b11 + g3;
            let g = reduce(&[[b11, b12], [b21, b22]]).unwrap();
            prop_assert_eq!(g.classify(), GameClass::DominantAction);
        }

        #[test]
        fn mixed_ne_zeroes_strategy_drift(a in -10.0f64..10.0, b in -10.0f64..10.0) {
            let g = ReducedGame::new(a, b, 0.0);
            if let Some(p) = g.mixed_ne() {
                prop_assert!(g.action_advantage(p).abs() < 1e-12);
            }
        }
    }
}
