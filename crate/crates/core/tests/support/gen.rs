//! Random acyclic modules with an independent reference evaluator.
//!
//! The generator knows the dependency order by construction (a derived
//! variable only reads sources and earlier derived variables), so the oracle
//! simply recomputes everything in that order from the generator's own
//! expression trees. It shares no code with the compiler or solver.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::rngs::StdRng;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};

#[derive(Debug, Clone)]
pub enum GExpr {
    Num(f64),
    Var(String),
    Neg(Box<GExpr>),
    Bin(char, Box<GExpr>, Box<GExpr>),
    Min(Box<GExpr>, Box<GExpr>),
    Max(Box<GExpr>, Box<GExpr>),
    Abs(Box<GExpr>),
}

impl GExpr {
    /// Fully parenthesized source text.
    pub fn render(&self) -> String {
        match self {
            GExpr::Num(n) => format!("{n}"),
            GExpr::Var(v) => v.clone(),
            GExpr::Neg(e) => format!("-({})", e.render()),
            GExpr::Bin(op, a, b) => format!("({} {op} {})", a.render(), b.render()),
            GExpr::Min(a, b) => format!("Math.min({}, {})", a.render(), b.render()),
            GExpr::Max(a, b) => format!("Math.max({}, {})", a.render(), b.render()),
            GExpr::Abs(a) => format!("Math.abs({})", a.render()),
        }
    }

    pub fn eval(&self, env: &BTreeMap<String, f64>) -> f64 {
        match self {
            GExpr::Num(n) => *n,
            GExpr::Var(v) => env[v],
            GExpr::Neg(e) => -e.eval(env),
            GExpr::Bin(op, a, b) => {
                let (x, y) = (a.eval(env), b.eval(env));
                match op {
                    '+' => x + y,
                    '-' => x - y,
                    '*' => x * y,
                    _ => x / y,
                }
            }
            GExpr::Min(a, b) => ref_min(a.eval(env), b.eval(env)),
            GExpr::Max(a, b) => ref_max(a.eval(env), b.eval(env)),
            GExpr::Abs(a) => a.eval(env).abs(),
        }
    }

    pub fn vars(&self, out: &mut BTreeSet<String>) {
        match self {
            GExpr::Num(_) => {}
            GExpr::Var(v) => {
                out.insert(v.clone());
            }
            GExpr::Neg(e) | GExpr::Abs(e) => e.vars(out),
            GExpr::Bin(_, a, b) | GExpr::Min(a, b) | GExpr::Max(a, b) => {
                a.vars(out);
                b.vars(out);
            }
        }
    }
}

/// NaN-propagating minimum with -0 below +0.
pub fn ref_min(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else if a < b {
        a
    } else if b < a {
        b
    } else if a.is_sign_negative() {
        a
    } else {
        b
    }
}

pub fn ref_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else if a > b {
        a
    } else if b > a {
        b
    } else if a.is_sign_positive() {
        a
    } else {
        b
    }
}

#[derive(Debug, Clone)]
pub struct Guard {
    pub lhs: GExpr,
    pub op: &'static str,
    pub rhs: GExpr,
}

impl Guard {
    pub fn holds(&self, env: &BTreeMap<String, f64>) -> bool {
        let (l, r) = (self.lhs.eval(env), self.rhs.eval(env));
        match self.op {
            "<=" => l <= r,
            ">=" => l >= r,
            "<" => l < r,
            _ => l > r,
        }
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut s = BTreeSet::new();
        self.lhs.vars(&mut s);
        self.rhs.vars(&mut s);
        s
    }
}

#[derive(Debug, Clone)]
pub struct GenModule {
    pub sources: Vec<String>,
    /// Derived variables in dependency order.
    pub derived: Vec<(String, GExpr)>,
    /// Permutation of `derived` indices: the order constraints are written.
    pub decl_order: Vec<usize>,
    pub guards: Vec<Guard>,
    pub n_views: usize,
    pub text: String,
}

const GEOMETRY: [&str; 6] = ["X", "Y", "W", "H", "Rot", "Z"];

fn gen_expr(rng: &mut StdRng, readable: &[String], depth: u32) -> GExpr {
    if depth == 0 || rng.random_bool(0.3) {
        return if !readable.is_empty() && rng.random_bool(0.7) {
            GExpr::Var(readable[rng.random_range(0..readable.len())].clone())
        } else {
            GExpr::Num(f64::from(rng.random_range(-6..=6)) / 2.0)
        };
    }
    let sub = |rng: &mut StdRng| Box::new(gen_expr(rng, readable, depth - 1));
    match rng.random_range(0..8) {
        0 => GExpr::Neg(sub(rng)),
        1 => GExpr::Min(sub(rng), sub(rng)),
        2 => GExpr::Max(sub(rng), sub(rng)),
        3 => GExpr::Abs(sub(rng)),
        k => GExpr::Bin(['+', '-', '*', '/'][k - 4], sub(rng), sub(rng)),
    }
}

impl GenModule {
    /// At most 20 variables (sources plus derived) and 30 statements.
    /// Resamples until the defaults are admissible, so the module
    /// initializes.
    pub fn generate(seed: u64) -> GenModule {
        let mut rng = StdRng::seed_from_u64(seed);
        loop {
            let g = Self::attempt(&mut rng);
            let zeros = g.sources.iter().map(|s| (s.clone(), 0.0)).collect();
            if g.admissible(&g.oracle(&zeros)) {
                return g;
            }
        }
    }

    fn attempt(rng: &mut StdRng) -> GenModule {
        let rng = &mut *rng;
        let n_sources = rng.random_range(1..=5);
        let n_derived = rng.random_range(1..=(20 - n_sources));
        let n_views = rng.random_range(1..=3);
        let sources: Vec<String> = (0..n_sources).map(|i| format!("s{i}")).collect();

        let mut view_slots: Vec<String> = (0..n_views)
            .flat_map(|v| GEOMETRY.iter().map(move |p| format!("v{v}.{p}")))
            .collect();
        view_slots.shuffle(rng);

        let mut readable = sources.clone();
        let mut derived = Vec::new();
        for i in 0..n_derived {
            let name = if rng.random_bool(0.3) && !view_slots.is_empty() {
                view_slots.pop().unwrap()
            } else {
                format!("d{i}")
            };
            let e = gen_expr(rng, &readable, 3);
            readable.push(name.clone());
            derived.push((name, e));
        }
        let n_guards = rng.random_range(0..=(30 - n_derived).min(4));
        let guards = (0..n_guards)
            .map(|_| Guard {
                lhs: gen_expr(rng, &readable, 1),
                op: ["<=", ">=", "<", ">"][rng.random_range(0..4)],
                rhs: gen_expr(rng, &readable, 1),
            })
            .collect::<Vec<_>>();

        // Only sources something reads exist as variables.
        let mut read = BTreeSet::new();
        for (_, e) in &derived {
            e.vars(&mut read);
        }
        for g in &guards {
            read.extend(g.vars());
        }
        let mut sources: Vec<String> = sources.into_iter().filter(|s| read.contains(s)).collect();
        if sources.is_empty() {
            sources.push("s0".into());
            derived.push(("dz".into(), GExpr::Var("s0".into())));
        }
        let n_derived = derived.len();

        let mut decl_order: Vec<usize> = (0..n_derived).collect();
        decl_order.shuffle(rng);

        let mut text = String::from("@gui\n");
        for v in 0..n_views {
            text.push_str(&format!("  v{v}\n"));
        }
        text.push_str("@constraints\n");
        for &i in &decl_order {
            let (name, e) = &derived[i];
            text.push_str(&format!("  {name} << {}\n", e.render()));
        }
        for g in &guards {
            text.push_str(&format!("  {} {} {}\n", g.lhs.render(), g.op, g.rhs.render()));
        }
        text.push_str(&format!("@export {}\n", sources.join(", ")));

        GenModule {
            sources,
            derived,
            decl_order,
            guards,
            n_views,
            text,
        }
    }

    /// Full recompute of every derived variable from the given sources.
    /// View properties that are not derived keep their defaults.
    pub fn oracle(&self, sources: &BTreeMap<String, f64>) -> BTreeMap<String, f64> {
        let mut env = sources.clone();
        for v in 0..self.n_views {
            for p in GEOMETRY {
                env.insert(format!("v{v}.{p}"), 0.0);
            }
        }
        for (name, e) in &self.derived {
            let x = e.eval(&env);
            env.insert(name.clone(), x);
        }
        env
    }

    /// Whether a store computed by [`GenModule::oracle`] is acceptable.
    pub fn admissible(&self, env: &BTreeMap<String, f64>) -> bool {
        let nan_geometry = self
            .derived
            .iter()
            .any(|(name, _)| name.starts_with('v') && env[name].is_nan());
        !nan_geometry && self.guards.iter().all(|g| g.holds(env))
    }

    /// Names transitively downstream of `changed` (including themselves).
    pub fn downstream(&self, changed: &BTreeSet<String>) -> BTreeSet<String> {
        let mut out = changed.clone();
        for (name, e) in &self.derived {
            let mut reads = BTreeSet::new();
            e.vars(&mut reads);
            if reads.iter().any(|r| out.contains(r)) {
                out.insert(name.clone());
            }
        }
        out
    }

    pub fn random_assignment(&self, rng: &mut StdRng) -> Vec<(String, f64)> {
        let k = rng.random_range(1..=self.sources.len());
        self.sources
            .choose_multiple(rng, k)
            .map(|s| (s.clone(), f64::from(rng.random_range(-20..=20)) / 4.0))
            .collect()
    }
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Bit-level equality (NaN equals NaN, zeros keep their sign).
pub fn same(a: f64, b: f64) -> bool {
    a.to_bits() == b.to_bits()
}
