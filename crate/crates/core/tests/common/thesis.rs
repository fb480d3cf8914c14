//! Randomized procedure instances for the group-execution oracle: a
//! seeded generator of template bodies, a renderer to source text, and a
//! naive per-object interpreter.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rxo_core::oo::parser::parse_commands;
use rxo_core::value::{Oid, Value};
use rxo_core::Engine;

// --- tiny deterministic PRNG -------------------------------------------------

pub struct Rng(pub u64);

impl Rng {
    pub fn new(seed: u64) -> Rng {
        Rng(seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1))
    }

    pub fn next(&mut self) -> u64 {
        // xorshift64*
        let mut x = self.0;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.0 = x;
        x.wrapping_mul(0x2545F4914F6CDD1D)
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next() % n
    }

    pub fn int(&mut self, lo: i64, hi: i64) -> i64 {
        lo + (self.below((hi - lo + 1) as u64) as i64)
    }

    pub fn chance(&mut self, percent: u64) -> bool {
        self.below(100) < percent
    }
}

// --- procedure templates -------------------------------------------------------

#[derive(Debug, Clone)]
pub enum TExpr {
    Comp(usize),
    Param,
    Lit(i64),
    Add(Box<TExpr>, Box<TExpr>),
    Sub(Box<TExpr>, Box<TExpr>),
}

#[derive(Debug, Clone)]
pub enum TCond {
    Cmp(usize, &'static str, i64),
    IsNull(usize, bool),
}

#[derive(Debug, Clone)]
pub enum TStmt {
    Assign(usize, TExpr),
    If(TCond, Vec<TStmt>, Vec<TStmt>),
    /// `while (c > limit) { c := c - dec; extra… }`
    While {
        counter: usize,
        limit: i64,
        dec: i64,
        extra: Vec<TStmt>,
    },
    Return,
}

fn gen_expr(rng: &mut Rng, ncomps: usize, depth: usize) -> TExpr {
    match rng.below(if depth == 0 { 3 } else { 5 }) {
        0 => TExpr::Comp(rng.below(ncomps as u64) as usize),
        1 => TExpr::Param,
        2 => TExpr::Lit(rng.int(-3, 5)),
        3 => TExpr::Add(
            Box::new(gen_expr(rng, ncomps, depth - 1)),
            Box::new(gen_expr(rng, ncomps, depth - 1)),
        ),
        _ => TExpr::Sub(
            Box::new(gen_expr(rng, ncomps, depth - 1)),
            Box::new(gen_expr(rng, ncomps, depth - 1)),
        ),
    }
}

fn gen_cond(rng: &mut Rng, ncomps: usize) -> TCond {
    let c = rng.below(ncomps as u64) as usize;
    match rng.below(4) {
        0 => TCond::IsNull(c, false),
        1 => TCond::IsNull(c, true),
        2 => TCond::Cmp(c, "<", rng.int(-2, 5)),
        _ => TCond::Cmp(c, ">", rng.int(-2, 5)),
    }
}

fn gen_stmts(rng: &mut Rng, ncomps: usize, depth: usize, len: usize) -> Vec<TStmt> {
    let mut out = Vec::new();
    for _ in 0..len {
        let pick = if depth == 0 {
            rng.below(2)
        } else {
            rng.below(10)
        };
        match pick {
            0..=3 => out.push(TStmt::Assign(
                rng.below(ncomps as u64) as usize,
                gen_expr(rng, ncomps, 2),
            )),
            4..=6 => {
                let with_else = rng.chance(40);
                let else_len = 1 + rng.below(2) as usize;
                let else_body = if with_else {
                    gen_stmts(rng, ncomps, depth - 1, else_len)
                } else {
                    vec![]
                };
                let cond = gen_cond(rng, ncomps);
                let then_len = 1 + rng.below(2) as usize;
                let then_body = gen_stmts(rng, ncomps, depth - 1, then_len);
                out.push(TStmt::If(cond, then_body, else_body));
            }
            7 | 8 => {
                let counter = rng.below(ncomps as u64) as usize;
                let extra_len = rng.below(2) as usize;
                // extra statements must not touch the loop counter
                let extra = gen_stmts(rng, ncomps, 0, extra_len)
                    .into_iter()
                    .filter(|s| !matches!(s, TStmt::Assign(c, _) if *c == counter))
                    .collect();
                out.push(TStmt::While {
                    counter,
                    limit: rng.int(-1, 3),
                    dec: rng.int(1, 3),
                    extra,
                });
            }
            _ => {
                out.push(TStmt::Return);
                break; // statements after a bare return never run anyway
            }
        }
    }
    out
}

// --- rendering to source ---------------------------------------------------------

fn expr_src(e: &TExpr) -> String {
    match e {
        TExpr::Comp(i) => format!("c{i}"),
        TExpr::Param => "p".into(),
        TExpr::Lit(v) => {
            if *v < 0 {
                format!("(0 - {})", -v)
            } else {
                v.to_string()
            }
        }
        TExpr::Add(a, b) => format!("({} + {})", expr_src(a), expr_src(b)),
        TExpr::Sub(a, b) => format!("({} - {})", expr_src(a), expr_src(b)),
    }
}

fn cond_src(c: &TCond) -> String {
    match c {
        TCond::Cmp(i, op, k) => format!("c{i} {op} {k}"),
        TCond::IsNull(i, false) => format!("c{i} IS NULL"),
        TCond::IsNull(i, true) => format!("c{i} IS NOT NULL"),
    }
}

pub fn stmts_src(stmts: &[TStmt]) -> String {
    let mut out = String::new();
    for s in stmts {
        match s {
            TStmt::Assign(i, e) => out.push_str(&format!("c{i} := {};\n", expr_src(e))),
            TStmt::If(c, t, e) => {
                out.push_str(&format!(
                    "IF ({}) THEN BEGIN\n{}END",
                    cond_src(c),
                    stmts_src(t)
                ));
                if !e.is_empty() {
                    out.push_str(&format!(" ELSE BEGIN\n{}END", stmts_src(e)));
                }
                out.push('\n');
            }
            TStmt::While {
                counter,
                limit,
                dec,
                extra,
            } => {
                out.push_str(&format!(
                    "WHILE (c{counter} > {limit}) BEGIN\nc{counter} := c{counter} - {dec};\n{}END\n",
                    stmts_src(extra)
                ));
            }
            TStmt::Return => out.push_str("RETURN;\n"),
        }
    }
    out
}

// --- naive per-object interpreter -------------------------------------------------

pub type ObjState = Vec<Option<i64>>;

fn interp_expr(e: &TExpr, st: &ObjState, p: i64) -> Option<i64> {
    match e {
        TExpr::Comp(i) => st[*i],
        TExpr::Param => Some(p),
        TExpr::Lit(v) => Some(*v),
        TExpr::Add(a, b) => Some(interp_expr(a, st, p)?.checked_add(interp_expr(b, st, p)?)?),
        TExpr::Sub(a, b) => Some(interp_expr(a, st, p)?.checked_sub(interp_expr(b, st, p)?)?),
    }
}

fn interp_cond(c: &TCond, st: &ObjState) -> bool {
    match c {
        TCond::Cmp(i, op, k) => match st[*i] {
            None => false,
            Some(v) => match *op {
                "<" => v < *k,
                ">" => v > *k,
                _ => unreachable!(),
            },
        },
        TCond::IsNull(i, negated) => (st[*i].is_none()) != *negated,
    }
}

/// Runs the template on one object. `Returned` propagates like the group
/// translation's outthese: the object leaves the remaining statements.
pub fn interp_stmts(stmts: &[TStmt], st: &mut ObjState, p: i64) -> bool {
    for s in stmts {
        match s {
            TStmt::Assign(i, e) => st[*i] = interp_expr(e, st, p),
            TStmt::If(c, t, e) => {
                let done = if interp_cond(c, st) {
                    interp_stmts(t, st, p)
                } else {
                    interp_stmts(e, st, p)
                };
                if done {
                    return true;
                }
            }
            TStmt::While {
                counter,
                limit,
                dec,
                extra,
            } => {
                while st[*counter].map(|v| v > *limit).unwrap_or(false) {
                    st[*counter] = st[*counter].map(|v| v - dec);
                    if interp_stmts(extra, st, p) {
                        return true;
                    }
                }
            }
            TStmt::Return => return true,
        }
    }
    false
}

// --- the harness ---------------------------------------------------------------

pub struct Instance {
    pub ncomps: usize,
    pub body: Vec<TStmt>,
    pub objects: Vec<ObjState>,
    pub group: Vec<usize>,
    pub param: i64,
}

pub fn gen_instance(seed: u64) -> Instance {
    let mut rng = Rng::new(seed);
    let ncomps = 2 + rng.below(2) as usize;
    let body_len = 2 + rng.below(3) as usize;
    let body = gen_stmts(&mut rng, ncomps, 2, body_len);
    let nobjs = 1 + rng.below(5) as usize;
    let objects: Vec<ObjState> = (0..nobjs)
        .map(|_| {
            (0..ncomps)
                .map(|_| {
                    if rng.chance(15) {
                        None
                    } else {
                        Some(rng.int(-4, 8))
                    }
                })
                .collect()
        })
        .collect();
    // nonempty subgroup, shuffled
    let mut group: Vec<usize> = (0..nobjs).filter(|_| rng.chance(70)).collect();
    if group.is_empty() {
        group.push(rng.below(nobjs as u64) as usize);
    }
    for i in (1..group.len()).rev() {
        group.swap(i, rng.below((i + 1) as u64) as usize);
    }
    Instance {
        ncomps,
        body,
        objects,
        group,
        param: rng.int(-3, 5),
    }
}

/// Engine with the instance's class, method, and objects; returns the OIDs
/// in object order.
pub fn build_engine(inst: &Instance) -> (Engine, Vec<Oid>) {
    let mut e = Engine::new();
    let comps: Vec<String> = (0..inst.ncomps).map(|i| format!("c{i} INTEGER")).collect();
    let mut src = format!(
        "CLASS P ( {}, M(p INTEGER) );\nALTER P REALIZE {} AS STORED;\n",
        comps.join(", "),
        (0..inst.ncomps)
            .map(|i| format!("c{i}"))
            .collect::<Vec<_>>()
            .join(", ")
    );
    src.push_str(&format!(
        "ALTER P REALIZE M(p INTEGER) AS {{\n{}}};\n",
        stmts_src(&inst.body)
    ));
    for obj in &inst.objects {
        let sets: Vec<String> = obj
            .iter()
            .enumerate()
            .map(|(i, v)| match v {
                Some(x) if *x < 0 => format!(".c{i} := (0 - {})", -x),
                Some(x) => format!(".c{i} := {x}"),
                None => format!(".c{i} := NULL"),
            })
            .collect();
        src.push_str(&format!("NEW P WITH SET {};\n", sets.join(", ")));
    }
    for cmd in parse_commands(&src).unwrap_or_else(|err| panic!("{src}\n{err}")) {
        e.execute_command(&cmd)
            .unwrap_or_else(|err| panic!("setup failed: {cmd}\n{err}"));
    }
    let oids = e.group_oids("P").expect("members");
    assert_eq!(oids.len(), inst.objects.len());
    (e, oids)
}

pub fn read_states(e: &Engine, oids: &[Oid], ncomps: usize) -> Vec<ObjState> {
    let rel = e
        .db()
        .get(&rxo_core::machine::text::parse_rvalue_text("real_R_P").unwrap())
        .unwrap();
    let mut by_oid: BTreeMap<Oid, ObjState> = BTreeMap::new();
    for t in rel.iter() {
        let Value::Oid(o) = t.values()[0] else {
            panic!()
        };
        let st: ObjState = (0..ncomps)
            .map(|i| match &t.values()[i + 1] {
                Value::Null => None,
                Value::Integer(v) => Some(*v),
                other => panic!("unexpected {other:?}"),
            })
            .collect();
        by_oid.insert(o, st);
    }
    oids.iter().map(|o| by_oid[o].clone()).collect()
}

pub fn run_instance(seed: u64) {
    let inst = gen_instance(seed);
    let (mut group_engine, oids) = build_engine(&inst);
    let (mut singles_engine, oids2) = build_engine(&inst);
    assert_eq!(oids, oids2, "object creation must be deterministic");

    let group_oids: Vec<Oid> = inst.group.iter().map(|i| oids[*i]).collect();
    let args = [Value::Integer(inst.param)];

    group_engine
        .run_method_on("P", "M", &group_oids, &args)
        .unwrap_or_else(|e| panic!("seed {seed}: group run failed: {e}\n{:?}", inst.body));
    for oid in &group_oids {
        singles_engine
            .run_method_on("P", "M", &[*oid], &args)
            .unwrap_or_else(|e| panic!("seed {seed}: singleton run failed: {e}"));
    }

    // the Translation Thesis, testable form
    assert_eq!(
        group_engine.db(),
        singles_engine.db(),
        "seed {seed}: group and sequential execution diverged\nbody:\n{}",
        stmts_src(&inst.body)
    );
    // branch partitions were checked at every statement boundary
    assert!(
        group_engine.db().partition_checks > 0,
        "seed {seed}: no partition checks ran"
    );

    // independent oracle
    let mut expected = inst.objects.clone();
    for i in &inst.group {
        interp_stmts(&inst.body, &mut expected[*i], inst.param);
    }
    let got = read_states(&group_engine, &oids, inst.ncomps);
    assert_eq!(
        got,
        expected,
        "seed {seed}: interpreter oracle diverged\nbody:\n{}",
        stmts_src(&inst.body)
    );
}
