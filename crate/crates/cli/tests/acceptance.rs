//! One line per acceptance criterion; exits nonzero if any fails.

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use moyal_cli::report::CheckItem;
use moyal_cli::suites;
use moyal_cli::{run_scenario, Registry, RunOptions, BUNDLED};

type Items = moyal_core::Result<Vec<CheckItem>>;
type Criterion = (&'static str, Box<dyn Fn() -> Items>);

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    out.sort();
    out
}

fn determinism() -> Items {
    let registry = Registry::builtin();
    let mut items = Vec::new();
    for (name, text) in BUNDLED {
        let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
        for d in &dirs {
            let opts = RunOptions {
                out: d.path().to_path_buf(),
                seed: None,
                plots: true,
                tolerance_scale: 1.0,
            };
            if let Err(e) = run_scenario(text, &registry, &opts) {
                items.push(CheckItem::holds(format!("{name} runs"), false, e.to_string()));
            }
        }
        let (a, b) = (files(dirs[0].path()), files(dirs[1].path()));
        let same = !a.is_empty() && a == b;
        items.push(CheckItem::holds(format!("{name}: two runs byte-identical"), same, format!("{} files", a.len())));
    }
    Ok(items)
}

fn main() -> ExitCode {
    let criteria: Vec<Criterion> = vec![
        ("canonical star identity, exact and on the grid", Box::new(|| suites::canonical_star(1.0))),
        ("classical limit of the {x³,p³} bracket", Box::new(|| suites::classical_limit(1.0))),
        ("Wigner marginals of 20 random superpositions", Box::new(|| suites::marginals_suite(1.0, suites::MARGINALS_SEED))),
        ("Weyl duality: characteristic function and expectations", Box::new(|| suites::weyl_duality(1.0))),
        ("guidance equivalence in both representations", Box::new(|| suites::guidance(1.0))),
        ("quantum Hamilton-Jacobi residual and refinement", Box::new(|| suites::qhj(1.0))),
        ("two-slit trajectories: non-crossing and transported density", Box::new(|| suites::trajectories(1.0))),
        ("shadow divergence: Gaussian small, cat large", Box::new(|| suites::shadow_divergence(1.0))),
        ("fractional Fourier group laws", Box::new(|| suites::frft_laws(1.0))),
        ("Clifford and groupoid identities", Box::new(suites::clifford_identities)),
        ("determinism of bundled scenario runs", Box::new(determinism)),
    ];
    let mut failed = 0;
    for (i, (desc, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, lines) = match run() {
            Ok(items) => (!items.is_empty() && items.iter().all(|c| c.passed), items.iter().map(|c| c.line()).collect()),
            Err(e) => (false, vec![format!("error: {e}")]),
        };
        if !ok {
            failed += 1;
        }
        println!("criterion {}: {} {desc} ({:.1} s)", i + 1, if ok { "PASS" } else { "FAIL" }, start.elapsed().as_secs_f64());
        for l in lines {
            println!("    {l}");
        }
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
