//! Shared test support: a naive reference interpreter for the feature
//! language and seeded generators for tables and expressions.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use refeat_core::bandit::ReasoningType;
use refeat_core::fexpr::{AggStat, BinOp, Call, Expr, UnaryFn};
use refeat_core::ledger::{CandidateRecord, Status};
use refeat_core::promptkit::PromptKind;
use refeat_core::tabular::{Column, ColumnData, Table};

/// Row values in the reference interpreter.
enum Rv {
    Num(Vec<f64>),
    Bool(Vec<Option<bool>>),
    Cat(Vec<String>),
    Str(String),
}

fn clean(x: f64) -> f64 {
    if x.is_finite() {
        x
    } else {
        f64::NAN
    }
}

fn to_num(v: Rv) -> Vec<f64> {
    match v {
        Rv::Num(v) => v,
        Rv::Bool(b) => b
            .into_iter()
            .map(|x| match x {
                Some(true) => 1.0,
                Some(false) => 0.0,
                None => f64::NAN,
            })
            .collect(),
        _ => panic!("reference: non-numeric operand in a well-typed expression"),
    }
}

/// The linear-interpolation quantile, written out from its definition.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = q * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    if h > lo as f64 {
        sorted[lo] + (sorted[lo + 1] - sorted[lo]) * (h - lo as f64)
    } else {
        sorted[lo]
    }
}

fn stat(s: AggStat, vals: &[f64]) -> f64 {
    let n = vals.len();
    let mut sum = 0.0;
    for v in vals {
        sum += v;
    }
    let r = match s {
        AggStat::Count => n as f64,
        AggStat::Sum => sum,
        _ if n == 0 => f64::NAN,
        AggStat::Mean => sum / n as f64,
        AggStat::Min => {
            let mut m = vals[0];
            for &v in vals {
                if v < m {
                    m = v;
                }
            }
            m
        }
        AggStat::Max => {
            let mut m = vals[0];
            for &v in vals {
                if v > m {
                    m = v;
                }
            }
            m
        }
        AggStat::Std if n < 2 => f64::NAN,
        AggStat::Std => {
            let mean = sum / n as f64;
            let mut ss = 0.0;
            for v in vals {
                ss += (v - mean) * (v - mean);
            }
            (ss / (n - 1) as f64).sqrt()
        }
    };
    clean(r)
}

fn labels(col: &Column) -> Vec<String> {
    (0..col.len()).map(|r| col.label(r).unwrap_or("").to_string()).collect()
}

fn ev(e: &Expr, train: &Table, t: &Table) -> Result<Rv, String> {
    let n = t.n_rows();
    Ok(match e {
        Expr::Column(name) => {
            let col = t.column(name).ok_or_else(|| format!("no column {name}"))?;
            match col.data() {
                ColumnData::Numeric(v) => Rv::Num(v.iter().map(|&x| clean(x)).collect()),
                ColumnData::Categorical { .. } => Rv::Cat(labels(col)),
            }
        }
        Expr::Number(x) => Rv::Num(vec![*x; n]),
        Expr::Str(s) => Rv::Str(s.clone()),
        Expr::Binary { op, lhs, rhs } => {
            let (l, r) = (ev(lhs, train, t)?, ev(rhs, train, t)?);
            match (op, l, r) {
                (BinOp::And | BinOp::Or, Rv::Bool(a), Rv::Bool(b)) => Rv::Bool(
                    (0..n)
                        .map(|i| match (a[i], b[i]) {
                            (Some(x), Some(y)) => Some(if *op == BinOp::And { x && y } else { x || y }),
                            _ => None,
                        })
                        .collect(),
                ),
                (BinOp::Eq | BinOp::Ne, Rv::Cat(c), Rv::Str(s)) | (BinOp::Eq | BinOp::Ne, Rv::Str(s), Rv::Cat(c)) => {
                    Rv::Bool(c.iter().map(|l| Some((*l == s) == (*op == BinOp::Eq))).collect())
                }
                (op, l, r) => {
                    let (a, b) = (to_num(l), to_num(r));
                    let mut nums = Vec::new();
                    let mut bools = Vec::new();
                    for i in 0..n {
                        let (x, y) = (a[i], b[i]);
                        let missing = x.is_nan() || y.is_nan();
                        match op {
                            BinOp::Add => nums.push(if missing { f64::NAN } else { clean(x + y) }),
                            BinOp::Sub => nums.push(if missing { f64::NAN } else { clean(x - y) }),
                            BinOp::Mul => nums.push(if missing { f64::NAN } else { clean(x * y) }),
                            BinOp::Div => nums.push(if missing || y == 0.0 { f64::NAN } else { clean(x / y) }),
                            BinOp::Gt => bools.push((!missing).then_some(x > y)),
                            BinOp::Ge => bools.push((!missing).then_some(x >= y)),
                            BinOp::Lt => bools.push((!missing).then_some(x < y)),
                            BinOp::Le => bools.push((!missing).then_some(x <= y)),
                            BinOp::Eq => bools.push((!missing).then_some(x == y)),
                            BinOp::Ne => bools.push((!missing).then_some(x != y)),
                            BinOp::And | BinOp::Or => panic!("reference: logical operator on non-booleans"),
                        }
                    }
                    if op.is_arithmetic() {
                        Rv::Num(nums)
                    } else {
                        Rv::Bool(bools)
                    }
                }
            }
        }
        Expr::Call(Call::Unary {
            func: UnaryFn::Flag,
            arg,
        }) => Rv::Num(to_num(ev(arg, train, t)?)),
        Expr::Call(Call::Unary {
            func: UnaryFn::Rank,
            arg,
        }) => {
            let fitted: Vec<f64> = to_num(ev(arg, train, train)?)
                .into_iter()
                .filter(|x| !x.is_nan())
                .collect();
            let v = to_num(ev(arg, train, t)?);
            Rv::Num(
                v.into_iter()
                    .map(|x| {
                        if x.is_nan() || fitted.is_empty() {
                            return f64::NAN;
                        }
                        let at_or_below = fitted.iter().filter(|&&f| f <= x).count();
                        at_or_below as f64 / fitted.len() as f64
                    })
                    .collect(),
            )
        }
        Expr::Call(Call::Unary { func, arg }) => {
            let v = to_num(ev(arg, train, t)?);
            Rv::Num(
                v.into_iter()
                    .map(|x| {
                        if x.is_nan() {
                            return f64::NAN;
                        }
                        clean(match func {
                            UnaryFn::Log1p if x < -1.0 => f64::NAN,
                            UnaryFn::Log1p => x.ln_1p(),
                            UnaryFn::Sqrt if x < 0.0 => f64::NAN,
                            UnaryFn::Sqrt => x.sqrt(),
                            UnaryFn::Square => x * x,
                            UnaryFn::Abs => x.abs(),
                            UnaryFn::Flag | UnaryFn::Rank => unreachable!(),
                        })
                    })
                    .collect(),
            )
        }
        Expr::Call(Call::Qcut { arg, bins }) => {
            let mut sorted: Vec<f64> = to_num(ev(arg, train, train)?)
                .into_iter()
                .filter(|x| !x.is_nan())
                .collect();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let k = *bins as usize;
            let mut edges: Vec<f64> = Vec::new();
            if !sorted.is_empty() {
                for i in 0..=k {
                    let q = quantile(&sorted, i as f64 / k as f64);
                    if edges.last() != Some(&q) {
                        edges.push(q);
                    }
                }
            }
            if edges.len() < 2 {
                return Err("degenerate qcut".into());
            }
            let interior = &edges[1..edges.len() - 1];
            let v = to_num(ev(arg, train, t)?);
            Rv::Num(
                v.into_iter()
                    .map(|x| {
                        if x.is_nan() {
                            f64::NAN
                        } else {
                            interior.iter().filter(|&&e| x > e).count() as f64
                        }
                    })
                    .collect(),
            )
        }
        Expr::Call(Call::GroupAgg { group, value, stat: s }) => {
            let keys = labels(train.column(group).ok_or("no group column")?);
            let vals = to_num(ev(value, train, train)?);
            let mut groups: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
            let mut all = Vec::new();
            for (k, v) in keys.iter().zip(&vals) {
                let slot = groups.entry(k.as_str()).or_default();
                if !v.is_nan() {
                    slot.push(*v);
                    all.push(*v);
                }
            }
            let global = stat(*s, &all);
            let rows = labels(t.column(group).ok_or("no group column")?);
            Rv::Num(
                rows.iter()
                    .map(|k| groups.get(k.as_str()).map_or(global, |g| stat(*s, g)))
                    .collect(),
            )
        }
    })
}

/// Fits stateful nodes on `train` and evaluates `e` on `table`, with boolean
/// results as 0/1. `Err` when a quantile cut is degenerate on train.
pub fn reference_eval(e: &Expr, train: &Table, table: &Table) -> Result<Vec<f64>, String> {
    Ok(to_num(ev(e, train, table)?))
}

/// Element-wise equality where missing equals missing.
pub fn same_values(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x == y || (x.is_nan() && y.is_nan()))
}

pub const NUM_COLS: [&str; 3] = ["A", "B", "C"];
pub const CAT_COLS: [&str; 2] = ["G", "H"];
pub const TARGET: &str = "y";

/// A random table with numeric A (one decimal, ties, missing), B (small
/// integers with zeros), C (continuous), categorical G and H, and target y.
/// `unseen_groups` adds a G label absent from typical train tables.
pub fn random_table<R: Rng>(rng: &mut R, n: usize, unseen_groups: bool) -> Table {
    let maybe = |rng: &mut R, p: f64, v: f64| if rng.gen_bool(p) { f64::NAN } else { v };
    let a: Vec<f64> = (0..n)
        .map(|_| {
            let v = (rng.gen_range(-50..=50) as f64) / 10.0;
            maybe(rng, 0.1, v)
        })
        .collect();
    let b: Vec<f64> = (0..n)
        .map(|_| {
            let v = rng.gen_range(0..5) as f64;
            maybe(rng, 0.1, v)
        })
        .collect();
    let c: Vec<f64> = (0..n)
        .map(|_| {
            let v = rng.gen_range(-100.0..100.0);
            maybe(rng, 0.05, v)
        })
        .collect();
    let g_pool: &[&str] = if unseen_groups {
        &["a", "b", "c", "d", "e"]
    } else {
        &["a", "b", "c", "d"]
    };
    let g: Vec<&str> = (0..n).map(|_| *g_pool.choose(rng).unwrap()).collect();
    let h: Vec<&str> = (0..n).map(|_| *["p", "q"].choose(rng).unwrap()).collect();
    let y: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
    Table::new(vec![
        Column::numeric("A", a),
        Column::numeric("B", b),
        Column::numeric("C", c),
        Column::categorical("G", &g),
        Column::categorical("H", &h),
        Column::numeric(TARGET, y),
    ])
    .unwrap()
}

fn number<R: Rng>(rng: &mut R) -> Expr {
    let pool = [-3.0, -1.0, 0.0, 0.5, 1.0, 2.0, 10.0];
    if rng.gen_bool(0.7) {
        Expr::Number(*pool.choose(rng).unwrap())
    } else {
        Expr::Number((rng.gen_range(-100..=100) as f64) / 8.0)
    }
}

fn arith<R: Rng>(rng: &mut R) -> BinOp {
    *[BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div].choose(rng).unwrap()
}

/// A well-typed numeric expression over the random-table schema.
pub fn gen_num<R: Rng>(rng: &mut R, depth: usize) -> Expr {
    if depth == 0 || rng.gen_bool(0.25) {
        return if rng.gen_bool(0.75) {
            Expr::column(*NUM_COLS.choose(rng).unwrap())
        } else {
            number(rng)
        };
    }
    let d = depth - 1;
    match rng.gen_range(0..10) {
        0..=3 => {
            let operand = |rng: &mut R| {
                if rng.gen_bool(0.1) {
                    gen_bool(rng, d)
                } else {
                    gen_num(rng, d)
                }
            };
            let (l, r) = (operand(rng), operand(rng));
            Expr::binary(arith(rng), l, r)
        }
        4 => {
            let f = *[UnaryFn::Log1p, UnaryFn::Sqrt, UnaryFn::Square, UnaryFn::Abs]
                .choose(rng)
                .unwrap();
            Expr::unary(f, gen_num(rng, d))
        }
        5 => Expr::unary(UnaryFn::Flag, gen_bool(rng, d)),
        6 => Expr::unary(UnaryFn::Rank, gen_num(rng, d)),
        7 => Expr::Call(Call::Qcut {
            arg: Box::new(gen_num(rng, d)),
            bins: rng.gen_range(2..=6),
        }),
        _ => Expr::Call(Call::GroupAgg {
            group: CAT_COLS.choose(rng).unwrap().to_string(),
            value: Box::new(gen_num(rng, d)),
            stat: *AggStat::ALL.choose(rng).unwrap(),
        }),
    }
}

/// A well-typed boolean expression over the random-table schema.
pub fn gen_bool<R: Rng>(rng: &mut R, depth: usize) -> Expr {
    let d = depth.saturating_sub(1);
    match rng.gen_range(0..6) {
        0..=2 => {
            let op = *[BinOp::Gt, BinOp::Ge, BinOp::Lt, BinOp::Le, BinOp::Eq, BinOp::Ne]
                .choose(rng)
                .unwrap();
            let l = gen_num(rng, d);
            let r = if rng.gen_bool(0.5) {
                number(rng)
            } else {
                gen_num(rng, d)
            };
            Expr::binary(op, l, r)
        }
        3 => {
            let op = if rng.gen_bool(0.5) { BinOp::Eq } else { BinOp::Ne };
            let col = Expr::column(*CAT_COLS.choose(rng).unwrap());
            let lit = Expr::Str(["a", "b", "p", "zz"].choose(rng).unwrap().to_string());
            if rng.gen_bool(0.8) {
                Expr::binary(op, col, lit)
            } else {
                Expr::binary(op, lit, col)
            }
        }
        _ if depth == 0 => Expr::binary(BinOp::Gt, Expr::column("A"), Expr::Number(0.0)),
        _ => {
            let op = if rng.gen_bool(0.5) { BinOp::And } else { BinOp::Or };
            Expr::binary(op, gen_bool(rng, d), gen_bool(rng, d))
        }
    }
}

/// A well-typed expression of either result type.
pub fn gen_expr<R: Rng>(rng: &mut R, depth: usize) -> Expr {
    if rng.gen_bool(0.8) {
        gen_num(rng, depth)
    } else {
        gen_bool(rng, depth)
    }
}

/// Swaps the operands of every commutative operator.
pub fn mirror(e: &Expr) -> Expr {
    match e {
        Expr::Binary { op, lhs, rhs } if op.is_commutative() => Expr::binary(*op, mirror(rhs), mirror(lhs)),
        Expr::Binary { op, lhs, rhs } => Expr::binary(*op, mirror(lhs), mirror(rhs)),
        Expr::Call(Call::Unary { func, arg }) => Expr::unary(*func, mirror(arg)),
        Expr::Call(Call::Qcut { arg, bins }) => Expr::Call(Call::Qcut {
            arg: Box::new(mirror(arg)),
            bins: *bins,
        }),
        Expr::Call(Call::GroupAgg { group, value, stat }) => Expr::Call(Call::GroupAgg {
            group: group.clone(),
            value: Box::new(mirror(value)),
            stat: *stat,
        }),
        leaf => leaf.clone(),
    }
}

/// `y = x1 * x2 + N(0, noise_std)` with four distractor columns.
pub fn product_table(n: usize, noise_std: f64, seed: u64) -> Table {
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, noise_std).expect("finite std");
    let mut draw = |lo: f64, hi: f64| (0..n).map(|_| rng.gen_range(lo..hi)).collect::<Vec<f64>>();
    let (x1, x2) = (draw(-2.0, 2.0), draw(-2.0, 2.0));
    let distractors: Vec<Vec<f64>> = (0..4).map(|_| draw(-1.0, 1.0)).collect();
    let y: Vec<f64> = x1
        .iter()
        .zip(&x2)
        .map(|(a, b)| a * b + noise.sample(&mut rng))
        .collect();
    let mut cols = vec![Column::numeric("x1", x1), Column::numeric("x2", x2)];
    cols.extend(
        distractors
            .into_iter()
            .enumerate()
            .map(|(i, d)| Column::numeric(format!("d{}", i + 1), d)),
    );
    cols.push(Column::numeric("y", y));
    Table::new(cols).expect("equal lengths")
}

/// A tagged response proposing `(name, code)` pairs.
pub fn response(features: &[(&str, &str)]) -> String {
    let items: Vec<serde_json::Value> = features
        .iter()
        .map(|(name, code)| serde_json::json!({"feature_name": name, "code": code}))
        .collect();
    format!(
        "<Thinking>scripted</Thinking>\n<Result>{}</Result>",
        serde_json::Value::Array(items)
    )
}

/// Keyed script answering the causal arm with the true interaction and every
/// other prompt with distractor transforms.
pub fn causal_script() -> BTreeMap<String, String> {
    BTreeMap::from([
        ("causal".to_string(), response(&[("x1_times_x2", "x1 * x2")])),
        (
            "*".to_string(),
            response(&[
                ("d1_squared", "square(d1)"),
                ("d2_plus_d3", "d2 + d3"),
                ("log_d4", "log1p(abs(d4))"),
            ]),
        ),
    ])
}

/// Seeded ledger with coarse gains so ties are common.
pub fn random_ledger(r: &mut ChaCha8Rng) -> Vec<CandidateRecord> {
    let exprs = [
        "A",
        "B",
        "A + B",
        "log1p(A)",
        "flag(A > 1)",
        "rank(C)",
        "A * B",
        "sqrt(B)",
    ];
    let statuses = [
        Status::Valid,
        Status::Valid,
        Status::Valid,
        Status::TypeError,
        Status::Degenerate,
        Status::ParseError,
    ];
    let iterations = r.gen_range(0..10);
    let mut out = Vec::new();
    for t in 0..iterations {
        let kind = PromptKind::Reasoning(*ReasoningType::ALL.choose(r).unwrap());
        for c in 0..r.gen_range(1..=3) {
            let status = *statuses.choose(r).unwrap();
            let expr = exprs.choose(r).unwrap().to_string();
            // Coarse gains so ties on gain are common.
            let gain = (status == Status::Valid).then(|| r.gen_range(-4..8) as f64 / 100.0);
            out.push(CandidateRecord {
                iteration: t,
                reasoning_type: kind,
                feature_name: format!("f{t}_{c}"),
                expression: expr.clone(),
                code: expr,
                status,
                gain,
                error_detail: if status == Status::Valid {
                    String::new()
                } else {
                    "rejected".into()
                },
            });
        }
    }
    out
}

/// Dedup by expression keeping the first ledger occurrence, then repeated
/// selection of the best remaining record.
pub fn top_k_oracle(ledger: &[CandidateRecord], k: usize) -> Vec<CandidateRecord> {
    let mut pool: Vec<CandidateRecord> = Vec::new();
    for r in ledger.iter().filter(|r| r.status == Status::Valid) {
        if !pool.iter().any(|p| p.expression == r.expression) {
            pool.push(r.clone());
        }
    }
    let better = |a: &CandidateRecord, b: &CandidateRecord| {
        let (ga, gb) = (a.gain.unwrap(), b.gain.unwrap());
        ga > gb
            || (ga == gb && (a.iteration < b.iteration || (a.iteration == b.iteration && a.expression < b.expression)))
    };
    let mut out = Vec::new();
    while out.len() < k && !pool.is_empty() {
        let mut best = 0;
        for i in 1..pool.len() {
            if better(&pool[i], &pool[best]) {
                best = i;
            }
        }
        out.push(pool.remove(best));
    }
    out
}
