//! The uniformly connected network, where every link weighs `1/(n-1)` and
//! all agents share one strategy.

use nalgebra::Complex;

use crate::error::{Error, Result};
use crate::game::{GameClass, ReducedGame};
use crate::state::sigmoid;

/// Grid resolution for bracketing roots.
pub const ROOT_GRID: usize = 10_000;

/// Bracketing over `[lo, hi]` followed by bisection; returns every sign change
/// and exact grid zero in increasing order.
fn grid_roots<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> Vec<f64> {
    let step = (hi - lo) / ROOT_GRID as f64;
    let mut roots = Vec::new();
    let mut x0 = lo;
    let mut f0 = f(x0);
    if f0 == 0.0 {
        roots.push(x0);
    }
    for k in 1..=ROOT_GRID {
        let x1 = lo + step * k as f64;
        let f1 = f(x1);
        if f1 == 0.0 {
            roots.push(x1);
        } else if f0 != 0.0 && (f0 < 0.0) != (f1 < 0.0) {
            roots.push(bisect(&f, x0, x1, f0));
        }
        x0 = x1;
        f0 = f1;
    }
    roots
}

fn bisect<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64, f_lo: f64) -> f64 {
    let lo_negative = f_lo < 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Symmetric roots in logit coordinates `u = ln(p/(1-p))` for `T > 0`:
/// solutions of `(a sigma(u) + b)/(n-1) = T u`.
///
/// Working in `u` keeps low-temperature roots, which sit exponentially close
/// to `p = 0` or `p = 1`, resolvable. Any root satisfies
/// `|u| <= (|a| + |b|)/((n-1) T)`, which bounds the grid.
pub fn symmetric_roots_logit(g: &ReducedGame, n: usize, t: f64) -> Vec<f64> {
    if !(t > 0.0) || n < 2 {
        return Vec::new();
    }
    let k = (n - 1) as f64;
    let bound = (g.a.abs() + g.b.abs()) / (k * t) + 1.0;
    grid_roots(|u| (g.a * sigmoid(u) + g.b) / k - t * u, -bound, bound)
}

/// Common strategies `p` of the symmetric rest points, ascending.
///
/// For `T > 0` these solve `(a p + b)/(n-1) = T ln(p/(1-p))`. At `T = 0` the
/// vertices `0` and `1` are returned together with `-b/a` when it is interior.
pub fn symmetric_fixed_point(g: &ReducedGame, n: usize, t: f64) -> Vec<f64> {
    if t > 0.0 {
        return symmetric_roots_logit(g, n, t).into_iter().map(sigmoid).collect();
    }
    let mut roots = vec![0.0];
    roots.extend(g.mixed_ne());
    roots.push(1.0);
    roots
}

/// Temperature above which only one symmetric root remains.
///
/// A root is lost where the curve touches the line tangentially:
/// `a p (1-p)/(n-1) = T` together with the root equation. Substituting the
/// first into the second leaves a one-dimensional equation in `p`, solved by
/// the same bracketing. `None` unless the game has two pure symmetric
/// equilibria: only coordination games (`a > 0`) fold; anti-coordination and
/// dominant-action games have a single root at every `T > 0`.
pub fn critical_temperature(g: &ReducedGame, n: usize) -> Option<f64> {
    if g.classify() != GameClass::Coordination || n < 2 {
        return None;
    }
    let k = (n - 1) as f64;
    let tangency = |u: f64| {
        let p = sigmoid(u);
        let q = sigmoid(-u);
        g.a * p + g.b - g.a * p * q * u
    };
    grid_roots(tangency, -60.0, 60.0)
        .into_iter()
        .map(|u| g.a * sigmoid(u) * sigmoid(-u) / k)
        .fold(None, |best: Option<f64>, t| Some(best.map_or(t, |b| b.max(t))))
}

/// Closed-form spectrum of the three-player symmetric configuration at common
/// strategy `p`, in the order `lambda_1 ... lambda_6`.
///
/// The formulas hold where `p` is a rest point, i.e. `a p + b = 2 T logit(p)`
/// (or `a p + b = 0` at `T = 0`). For `T > 0` a root that rounds to exactly
/// 0 or 1 is accepted: the expressions are polynomial in `p` and continuous
/// there. At `T = 0` the vertices are excluded, since the rest condition the
/// formulas rely on fails at them.
pub fn jacobian_analytic_sym3(
    p: f64,
    g: &ReducedGame,
    b22: f64,
    c_iso: f64,
    t: f64,
) -> Result<[Complex<f64>; 6]> {
    let inside = if t > 0.0 { (0.0..=1.0).contains(&p) } else { p > 0.0 && p < 1.0 };
    if !inside {
        return Err(Error::InvalidInput(format!("strategy {p} outside the admissible range at T = {t}")));
    }
    let (a, b, d) = (g.a, g.b, g.d);
    let v = (a * p * p + b * p + d * p + b22 + c_iso) / 4.0;
    let m = (a * p + d) / 8.0;
    let gc = p * (1.0 - p) * (a * p + b) / 2.0;
    let k = a * p * (1.0 - p) / 4.0;
    let root = Complex::new(12.0 * gc * m + (k + v) * (k + v), 0.0).sqrt();
    let base = Complex::new(-k - 2.0 * t + v, 0.0);
    let lo = 0.5 * (base - root);
    let hi = 0.5 * (base + root);
    Ok([
        Complex::new(2.0 * k - t, 0.0),
        Complex::new(-t - 2.0 * v, 0.0),
        lo,
        lo,
        hi,
        hi,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    const COORD: ReducedGame = ReducedGame { a: 5.0, b: -2.0, d: 1.0 };

    #[test]
    fn root_counts_around_critical_temperature() {
        assert_eq!(symmetric_fixed_point(&COORD, 3, 0.2).len(), 3);
        assert_eq!(symmetric_fixed_point(&COORD, 3, 0.5).len(), 1);
        assert_eq!(symmetric_fixed_point(&COORD, 3, 0.0), vec![0.0, 0.4, 1.0]);
    }

    #[test]
    fn roots_satisfy_equation() {
        for t in [0.01, 0.1, 0.2, 0.35, 0.5, 2.0] {
            for u in symmetric_roots_logit(&COORD, 3, t) {
                let p = sigmoid(u);
                let lhs = (COORD.a * p + COORD.b) / 2.0;
                assert!((lhs - t * u).abs() < 1e-10, "T={t} u={u}");
            }
        }
    }

    #[test]
    fn constant_game_root_is_half() {
        let roots = symmetric_fixed_point(&ReducedGame::new(0.0, 0.0, 0.0), 4, 0.3);
        assert_eq!(roots.len(), 1);
        assert!((roots[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn critical_temperature_of_reference_game() {
        let tc = critical_temperature(&COORD, 3).unwrap();
        assert!((tc - 0.36).abs() < 0.01, "{tc}");
        // tangency strategy
        let disc: f64 = 1.0 - 4.0 * 2.0 * tc / COORD.a;
        let p = 0.5 * (1.0 - disc.sqrt());
        assert!((p - 0.174).abs() < 0.005, "{p}");
        assert_eq!(symmetric_fixed_point(&COORD, 3, tc - 0.005).len(), 3);
        assert_eq!(symmetric_fixed_point(&COORD, 3, tc + 0.005).len(), 1);
    }

    #[test]
    fn single_equilibrium_games_have_no_critical_temperature() {
        assert_eq!(critical_temperature(&ReducedGame::new(-1.0, -1.0, 4.0), 3), None);
        assert_eq!(critical_temperature(&ReducedGame::new(-5.0, 2.0, 0.0), 3), None);
    }

    #[test]
    fn symmetric_pitchfork_sits_at_quarter_a() {
        // b = -a/2 folds at p = 1/2 where T = a/(4(n-1))
        let g = ReducedGame::new(4.0, -2.0, 0.0);
        let tc = critical_temperature(&g, 5).unwrap();
        assert!((tc - 0.25).abs() < 1e-9, "{tc}");
    }

    #[test]
    fn analytic_reference_values() {
        let eig = jacobian_analytic_sym3(0.5, &COORD, 0.0, 0.0, 0.1).unwrap();
        assert!((eig[0].re - 0.525).abs() < 1e-12);
        assert!((eig[1].re - (-0.1 - 0.375)).abs() < 1e-12);
        assert!(jacobian_analytic_sym3(1.0, &COORD, 0.0, 0.0, 0.0).is_err());
        assert!(jacobian_analytic_sym3(1.5, &COORD, 0.0, 0.0, 0.1).is_err());
        // a root rounded onto the vertex at T > 0 is still admissible
        assert!(jacobian_analytic_sym3(1.0, &COORD, 0.0, 0.0, 0.1).is_ok());
    }

    #[test]
    fn mixed_point_is_unstable_at_zero_temperature() {
        let eig = jacobian_analytic_sym3(0.4, &COORD, 0.0, 0.0, 0.0).unwrap();
        assert!(eig[0].re > 0.0);
    }
}
