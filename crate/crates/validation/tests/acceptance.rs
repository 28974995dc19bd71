//! Runs every acceptance criterion in order, one line each. Exits non-zero
//! when any fails. Extra arguments select criteria by number or by a
//! substring of their name.

use std::process::ExitCode;
use winds_validation as v;

type Check = (usize, &'static str, fn() -> v::Verdict);

fn main() -> ExitCode {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let wanted = |n: usize, name: &str| {
        filters.is_empty() || filters.iter().any(|f| *f == n.to_string() || name.contains(f.as_str()))
    };

    let mut reference = None;
    let mut reference_run = || reference.get_or_insert_with(|| v::reference_run(2000)).clone();
    let mut failed = 0;
    let mut report = |n: usize, name: &str, verdict: v::Verdict| {
        let tag = if verdict.pass { "PASS" } else { "FAIL" };
        println!("criterion {n:>2} {tag} {name}: {}", verdict.detail);
        failed += usize::from(!verdict.pass);
    };

    if wanted(1, "divergence") {
        report(1, "divergence", v::divergence(&reference_run()));
    }
    if wanted(2, "impermeability") {
        report(2, "impermeability", v::impermeability(&reference_run()));
    }
    let rest: [Check; 8] = [
        (3, "coriolis_direction", v::coriolis_direction),
        (4, "southward_diversion", v::southward),
        (5, "trail_decay", v::trail_decay),
        (6, "repulse_monotonicity", v::repulse_monotonicity),
        (7, "meander_contrast", v::meander_contrast),
        (8, "determinism", v::determinism),
        (9, "frame_time", v::frame_time),
        (10, "small_grid_projection", v::small_grid_projection),
    ];
    for (n, name, check) in rest {
        if wanted(n, name) {
            report(n, name, check());
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
