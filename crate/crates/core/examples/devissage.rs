//! Verifying a centralizer-extension decomposition and the closed-surface case.
use lambda_forest::devissage::{
    centralizer_extension, check_acylindricity, check_betti_bounds, check_structure, n3_surface, principal_splitting_case,
    DEFAULT_RADIUS, DEFAULT_WINDOW,
};

fn main() {
    let g = centralizer_extension();
    let s = check_structure(&g).unwrap();
    println!("structure: {:?}", s.status);
    for c in &s.clauses {
        println!("  {} {}: {:?}", c.clause, c.subject, c.verdict);
    }
    let acyl = check_acylindricity(&g, DEFAULT_RADIUS, DEFAULT_WINDOW).unwrap();
    println!("acylindricity: {:?} over {} paths", acyl.status, acyl.paths_explored);
    let ambient = g.ambient().unwrap().unwrap();
    let b = check_betti_bounds(&g, &ambient, &g.max_abelian).unwrap();
    println!("b1 = {}, lower bound {}, slack {}", b.b1, b.lower_bound.unwrap_or_default(), b.slack.unwrap_or_default());
    println!("principal case: {:?}", principal_splitting_case(&g).unwrap());

    let n3 = n3_surface();
    println!("N3: {:?}", principal_splitting_case(&n3).unwrap());
    for r in check_structure(&n3).unwrap().remarks {
        println!("  {r}");
    }
}
