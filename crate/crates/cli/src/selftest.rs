//! Built-in consistency suites. Golden values are compared bit for bit.

use serde::Serialize;

use krnorm::beckmann::{solve_beckmann, FlowNetwork};
use krnorm::density::rasterize_plan;
use krnorm::instances::{random_balanced, rng, unit_dipoles};
use krnorm::matchnorm::{brute_force_connection, dual_potential, minimal_connection};
use krnorm::{Domain, Grid, SignedAtomMeasure};

pub const SUITES: [&str; 3] = ["duality", "oracle", "raster"];

#[derive(Debug, Serialize)]
pub struct SuiteReport {
    pub name: &'static str,
    pub passed: bool,
    pub checks: usize,
    pub failures: Vec<String>,
}

struct Suite {
    name: &'static str,
    checks: usize,
    failures: Vec<String>,
    fault: bool,
}

impl Suite {
    fn new(name: &'static str, fault: bool) -> Self {
        Suite {
            name,
            checks: 0,
            failures: Vec::new(),
            fault,
        }
    }

    fn golden(&mut self, what: &str, computed: f64, golden: f64) {
        let golden = if self.fault {
            f64::from_bits(golden.to_bits() ^ 1)
        } else {
            golden
        };
        self.checks += 1;
        if computed.to_bits() != golden.to_bits() {
            self.failures
                .push(format!("{what}: computed {computed:?}, golden {golden:?}"));
        }
    }

    fn close(&mut self, what: String, a: f64, b: f64, rel: f64) {
        self.checks += 1;
        if (a - b).abs() > rel * a.abs().max(b.abs()) {
            self.failures.push(format!("{what}: {a:?} vs {b:?}"));
        }
    }

    fn run(&mut self, what: &str, r: krnorm::Result<()>) {
        if let Err(e) = r {
            self.checks += 1;
            self.failures.push(format!("{what}: {e}"));
        }
    }

    fn finish(self) -> SuiteReport {
        SuiteReport {
            name: self.name,
            passed: self.failures.is_empty(),
            checks: self.checks,
            failures: self.failures,
        }
    }
}

fn square() -> SignedAtomMeasure {
    SignedAtomMeasure::from_pairs([
        ([0.0, 0.0], 1.0),
        ([1.0, 1.0], 1.0),
        ([1.0, 0.0], -1.0),
        ([0.0, 1.0], -1.0),
    ])
    .expect("valid square")
}

fn duality(fault: bool) -> SuiteReport {
    let mut s = Suite::new("duality", fault);
    let r = (|| -> krnorm::Result<()> {
        let dipole = SignedAtomMeasure::dipole([0.0, 0.0], [1.0, 0.0])?;
        s.golden("unit dipole", minimal_connection(&dipole)?.cost, 1.0);
        s.golden("unit square", minimal_connection(&square())?.cost, 2.0);
        for seed in 0..20 {
            let f = random_balanced(&mut rng(seed), 20, 2);
            let w = minimal_connection(&f)?.cost;
            let (_, d) = dual_potential(&f)?;
            let b = solve_beckmann(&FlowNetwork::complete(&f)?)?.cost;
            s.close(format!("seed {seed} dual"), w, d, 1e-7);
            s.close(format!("seed {seed} flow"), w, b, 1e-7);
        }
        Ok(())
    })();
    s.run("solver", r);
    s.finish()
}

fn oracle(fault: bool) -> SuiteReport {
    let mut s = Suite::new("oracle", fault);
    let r = (|| -> krnorm::Result<()> {
        s.golden(
            "unit square brute force",
            brute_force_connection(&square())?,
            2.0,
        );
        for seed in 0..50 {
            let f = unit_dipoles(&mut rng(100 + seed), 6);
            let a = minimal_connection(&f)?.cost;
            let b = brute_force_connection(&f)?;
            s.close(format!("seed {seed}"), a, b, 0.0);
        }
        Ok(())
    })();
    s.run("solver", r);
    s.finish()
}

fn raster(fault: bool) -> SuiteReport {
    let mut s = Suite::new("raster", fault);
    let r = (|| -> krnorm::Result<()> {
        let g4 = Grid::new(Domain::unit_box(2), vec![4, 4])?;
        let dipole = SignedAtomMeasure::dipole([0.25, 0.5], [0.75, 0.5])?;
        let d = rasterize_plan(&minimal_connection(&dipole)?, &g4, false)?;
        s.golden("dipole density mass", d.total(), 0.5);
        let g = Grid::new(Domain::unit_box(2), vec![32, 32])?;
        for seed in 0..10 {
            let f = random_balanced(&mut rng(200 + seed), 20, 2);
            let gamma = minimal_connection(&f)?;
            let seq = rasterize_plan(&gamma, &g, false)?;
            let par = rasterize_plan(&gamma, &g, true)?;
            s.close(format!("seed {seed} mass"), seq.total(), gamma.cost, 1e-12);
            s.checks += 1;
            if seq != par {
                s.failures
                    .push(format!("seed {seed}: parallel density differs"));
            }
        }
        Ok(())
    })();
    s.run("rasterizer", r);
    s.finish()
}

pub fn run(filter: Option<&str>, fault: bool) -> Vec<SuiteReport> {
    SUITES
        .iter()
        .filter(|name| filter.is_none_or(|f| name.contains(f)))
        .map(|name| match *name {
            "duality" => duality(fault),
            "oracle" => oracle(fault),
            _ => raster(fault),
        })
        .collect()
}
