//! A small LP solved by both backends, with the KKT check.

use bsr::lp::{solve_lp, verify_kkt, LinearProgram, LpAlgorithm, LpSettings, VarBounds};
use faer::mat;

fn main() {
    // max x + 2y  s.t.  x + y ≤ 4,  x − y ≥ −2,  0 ≤ x ≤ 3,  y ≥ 0
    // written as min −x − 2y with G v ≥ h
    let g = mat![[-1.0, -1.0], [1.0, -1.0]];
    let lp = LinearProgram::builder(vec![-1.0, -2.0])
        .inequalities(g, vec![-4.0, -2.0])
        .bound(0, VarBounds::new(0.0, 3.0))
        .bound(1, VarBounds::new(0.0, f64::INFINITY))
        .build()
        .expect("well-formed LP");

    for algorithm in [LpAlgorithm::InteriorPoint, LpAlgorithm::Simplex] {
        let sol = solve_lp(&lp, &LpSettings { algorithm, ..LpSettings::default() }).expect("solvable");
        println!(
            "{algorithm:?}: {:?} x = {:.6?}, objective {:.6}, {} iterations, KKT {:.1e}",
            sol.status,
            sol.primal,
            sol.objective_value,
            sol.iterations,
            verify_kkt(&lp, &sol)
        );
    }
}
