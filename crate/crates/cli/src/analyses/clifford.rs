use moyal_core::clifford::{generate_algebra, Multivector};
use moyal_core::exact::int;
use moyal_core::Result;

use crate::registry::{Analysis, Registry, RunContext};
use crate::report::{CheckItem, Outcome, Table};
use crate::scenario::{fail, Params, Scenario, System, ValidationError};

/// Blade table of `Cl(p, q)` with its exact laws.
pub struct CliffordDemo;

struct Settings {
    p: usize,
    q: usize,
    identities: bool,
}

fn settings(table: &toml::Table) -> std::result::Result<Settings, ValidationError> {
    let p = Params::new(table);
    let s = Settings {
        p: p.usize_or("p", 0)?,
        q: p.usize_or("q", 2)?,
        identities: p.bool_or("identities", true)?,
    };
    p.finish()?;
    Ok(s)
}

fn name(p: u32, q: u32, blade: u32) -> String {
    Multivector::blade(p, q, blade, int(1)).map(|m| m.to_string()).unwrap_or_default()
}

impl Analysis for CliffordDemo {
    fn name(&self) -> &'static str {
        "clifford-demo"
    }

    fn summary(&self) -> &'static str {
        "multiplication table of Cl(p,q) with associativity, signature and dimension laws"
    }

    fn validate(&self, table: &toml::Table, _scenario: &Scenario, _system: &System, _registry: &Registry) -> std::result::Result<(), ValidationError> {
        let s = settings(table)?;
        if s.p + s.q == 0 {
            return fail("q", "need at least one generator");
        }
        if s.p + s.q > 8 {
            return fail("q", format!("p + q = {} exceeds 8", s.p + s.q));
        }
        Ok(())
    }

    fn run(&self, table: &toml::Table, ctx: &RunContext) -> Result<Outcome> {
        let s = settings(table).expect("validated");
        let (p, q) = (s.p as u32, s.q as u32);
        let t = generate_algebra(p, q)?;
        let d = t.dimension() as u32;
        let mut out = Outcome::default();

        let failing = t.check_associativity(10_000, ctx.seed);
        let how = if p + q <= 4 { "every triple" } else { "10⁴ seeded triples" };
        out.checks.push(CheckItem::holds("associativity", failing.is_none(), format!("{how}; first failure {failing:?}")));
        let mut bad = 0;
        for i in 0..p + q {
            let (sign, blade) = t.product(1 << i, 1 << i);
            let want = if i < p { 1 } else { -1 };
            if blade != 0 || sign != want {
                bad += 1;
            }
            for j in 0..i {
                let (s1, b1) = t.product(1 << i, 1 << j);
                let (s2, b2) = t.product(1 << j, 1 << i);
                if b1 != b2 || s1 != -s2 {
                    bad += 1;
                }
            }
        }
        out.checks.push(CheckItem::exact("signature and anticommutation of generators", bad, ""));
        out.checks.push(CheckItem::holds("dimension 2^(p+q)", d == 1 << (p + q), format!("{d} blades")));
        if s.identities {
            out.checks.extend(crate::suites::clifford_identities()?);
        }
        out.metric("dimension", d as f64);

        let mut table = Table::new("table", &["a", "b", "product"]);
        for a in 0..d {
            for b in 0..d {
                let (sign, blade) = t.product(a, b);
                let prod = name(p, q, blade);
                table.push(vec![name(p, q, a), name(p, q, b), if sign < 0 { format!("-{prod}") } else { prod }]);
            }
        }
        out.tables.push(table);
        Ok(out)
    }
}
