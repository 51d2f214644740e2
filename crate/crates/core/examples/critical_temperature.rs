//! Symmetric roots of the coordination game across the critical temperature.
//!
//! `cargo run --example critical_temperature`

use coevo::analysis::{critical_temperature, symmetric_fixed_point};
use coevo::ReducedGame;

fn main() {
    let game = ReducedGame::new(5.0, -2.0, 1.0);
    let tc = critical_temperature(&game, 3).expect("a coordination game folds");
    println!("game {:?} is {:?}; T_c = {tc:.6}", game, game.classify());
    for t in [0.0, 0.1, 0.2, 0.3, tc - 1e-3, tc + 1e-3, 0.5, 1.0] {
        let roots: Vec<String> = symmetric_fixed_point(&game, 3, t).iter().map(|p| format!("{p:.4}")).collect();
        println!("T = {t:.4}: {} root(s) [{}]", roots.len(), roots.join(", "));
    }
}
