//! Dumps a reweighted-ℓ1 iteration LP to the text format and reads it back.

use bsr::lp::{read_lp_text, solve_lp, write_lp_text, LpSettings};
use bsr::solver::{build_iteration_lp, BsrMode};
use faer::mat;

fn main() {
    let phi = mat![[1.0, -0.5], [0.2, 1.0], [-1.0, 0.3]];
    let y = [1, -1, -1];
    let lp = build_iteration_lp(phi.as_ref(), &y, &[1.0, 1.0], BsrMode::Noisy { beta: 0.5 }).unwrap();
    let text = write_lp_text(&lp);
    print!("{text}");
    let back = read_lp_text(&text).unwrap();
    let (a, b) = (solve_lp(&lp, &LpSettings::default()).unwrap(), solve_lp(&back, &LpSettings::default()).unwrap());
    println!("objective {:.6} / {:.6} after round trip", a.objective_value, b.objective_value);
}
