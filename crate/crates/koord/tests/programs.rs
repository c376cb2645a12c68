use std::collections::HashMap;

use koord::ast::{BinOp, Expr, ExprKind, UnOp};
use koord::lower::LStmt;
use koord::*;
use proptest::prelude::*;

const APPS: &[(&str, &str)] = &[
    ("task", include_str!("../../core/apps/task.koord")),
    ("lineform", include_str!("../../core/apps/lineform.koord")),
    ("shapeform", include_str!("../../core/apps/shapeform.koord")),
    ("averaging", include_str!("../../core/apps/averaging.koord")),
];

fn app(name: &str) -> &'static str {
    APPS.iter().find(|(n, _)| *n == name).unwrap().1
}

/// Store-backed environment: shared cells keyed by (var, cell).
#[derive(Default)]
struct MapEnv {
    pid: usize,
    n: usize,
    locals: Vec<Value>,
    shared: HashMap<(VarId, Option<usize>), Value>,
    writes: Vec<(VarId, Option<usize>, Value)>,
}

impl Env for MapEnv {
    fn pid(&self) -> usize {
        self.pid
    }
    fn num_agents(&self) -> usize {
        self.n
    }
    fn local(&self, slot: usize) -> Value {
        self.locals[slot].clone()
    }
    fn set_local(&mut self, slot: usize, v: Value) {
        self.locals[slot] = v;
    }
    fn shared(&self, var: VarId, cell: Option<usize>) -> Value {
        self.shared.get(&(var, cell)).cloned().unwrap_or(Value::Int(0))
    }
    fn set_shared(&mut self, var: VarId, cell: Option<usize>, v: Value) {
        self.writes.push((var, cell, v.clone()));
        self.shared.insert((var, cell), v);
    }
    fn port(&self, _: Port) -> Value {
        Value::Bool(true)
    }
    fn actuate(&mut self, _: Actuator, _: Value) {}
    fn external(&mut self, _: Builtin, _: &[Value]) -> Result<Value, Fault> {
        Err(Fault::External("no planner".into()))
    }
}

#[test]
fn shipped_programs_compile_cleanly() {
    for (name, src) in APPS {
        let tokens = tokenize(src).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(tokens.last().unwrap().kind, koord::lexer::TokenKind::Eof);
        let (_, warnings) = compile(src, 3).unwrap_or_else(|e| panic!("{name}:\n{e}"));
        assert!(warnings.is_empty(), "{name}: {warnings:?}");
    }
}

#[test]
fn shipped_programs_survive_pretty_round_trip() {
    for (name, src) in APPS {
        let p = parse(&tokenize(src).unwrap()).unwrap();
        let printed = pretty(&p);
        let again = parse(&tokenize(&printed).unwrap()).unwrap_or_else(|e| panic!("{name}: {e}\n{printed}"));
        assert_eq!(p, again, "{name}");
        assert_eq!(printed, pretty(&again), "{name}");
    }
}

#[test]
fn task_program_leads_with_assign_then_complete() {
    let p = parse(&tokenize(app("task")).unwrap()).unwrap();
    let names: Vec<_> = p.events.iter().map(|e| e.name.as_str()).collect();
    assert_eq!(&names[..2], ["Assign", "Complete"]);
    let checked = check(&p, 3).unwrap();
    assert!(checked.warnings.is_empty());
    let table = lower(&checked).unwrap();
    assert!(table.events[0].atomic);
    assert!(!table.events[1].atomic);
}

#[test]
fn empty_program_lowers_to_empty_table() {
    let (table, warnings) = compile("", 2).unwrap();
    assert!(table.events.is_empty());
    assert_eq!(warnings[0].message, "no events");
}

#[test]
fn averaging_writes_the_neighbour_mean() {
    let (table, _) = compile(app("averaging"), 3).unwrap();
    let x = table.shared_id("x").unwrap();
    let mut env = MapEnv { pid: 1, n: 3, ..Default::default() };
    for (i, v) in [0.0, 3.0, 6.0].into_iter().enumerate() {
        env.shared.insert((x, Some(i)), Value::Float(v));
    }
    assert!(table.eval_pre(0, &mut env).unwrap());
    table.exec_eff(0, &mut env).unwrap();
    assert_eq!(env.writes, vec![(x, Some(1), Value::Float(3.0))]);
}

#[test]
fn averaging_ast_uses_pid_offsets() {
    let p = parse(&tokenize(app("averaging")).unwrap()).unwrap();
    let table = lower(&check(&p, 5).unwrap()).unwrap();
    let LStmt::SetCell(_, koord::lower::LExpr::Pid, _) = &table.events[0].eff[0] else {
        panic!("expected a write to x[pid]: {:?}", table.events[0].eff)
    };
}

#[test]
fn division_by_zero_faults() {
    let src = "local:\n  int a\n\nevent E {\n  pre: true\n  eff: {\n    a = 1 / a\n  }\n}\n";
    let (table, _) = compile(src, 1).unwrap();
    let mut env = MapEnv { n: 1, locals: vec![Value::Int(0)], ..Default::default() };
    assert_eq!(table.exec_eff(0, &mut env), Err(Fault::DivisionByZero));
}

#[test]
fn list_index_out_of_range_faults() {
    let src = "local:\n  list<pos> l = []\n  pos p\n\nevent E {\n  pre: true\n  eff: {\n    p = l[0]\n  }\n}\n";
    let (table, _) = compile(src, 1).unwrap();
    let mut env = MapEnv { n: 1, locals: table.locals.iter().map(|l| l.init.clone()).collect(), ..Default::default() };
    assert_eq!(table.exec_eff(0, &mut env), Err(Fault::IndexOutOfRange { index: 0, len: 0 }));
}

#[test]
fn assign_marks_owner_and_reports_claim() {
    let src = "allwrite:\n  list<pos> tasks\n\natomic event E {\n  pre: !allAssigned(tasks)\n  eff: {\n    assign(tasks, 1, pid)\n  }\n}\n";
    let (table, _) = compile(src, 4).unwrap();
    let mut env = MapEnv { pid: 2, n: 4, ..Default::default() };
    env.shared.insert((0, None), Value::path([Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0)]));
    table.exec_eff(0, &mut env).unwrap();
    let list = env.shared[&(0, None)].clone();
    let owners: Vec<_> = list.as_list().unwrap().iter().map(|e| e.owner).collect();
    assert_eq!(owners, [None, Some(2)]);
    assert!(table.eval_pre(0, &mut env).unwrap());
}

#[test]
fn constants_evaluate() {
    assert_eq!(constant("pos(1, 2.5, -3)").unwrap(), Value::Pos(Vec3::new(1.0, 2.5, -3.0)));
    assert_eq!(constant("7 / 2").unwrap(), Value::Int(3));
    assert!(constant("x + 1").is_err());
}

proptest! {
    /// `x[pid + k]` reads cell (pid + k) mod N.
    #[test]
    fn index_wraps_modulo_fleet_size(n in 1usize..9, pid_seed in 0usize..64, k in -20i64..20) {
        let pid = pid_seed % n;
        let src = format!(
            "allwrite:\n  int x[pid]\n\nlocal:\n  int out\n\nevent E {{\n  pre: true\n  eff: {{\n    out = x[pid + ({k})]\n  }}\n}}\n"
        );
        let (table, _) = compile(&src, n).unwrap();
        let mut env = MapEnv { pid, n, locals: vec![Value::Int(-1)], ..Default::default() };
        for i in 0..n {
            env.shared.insert((0, Some(i)), Value::Int(100 + i as i64));
        }
        table.exec_eff(0, &mut env).unwrap();
        let expect = (pid as i64 + k).rem_euclid(n as i64);
        prop_assert_eq!(env.locals[0].clone(), Value::Int(100 + expect));
    }

    /// Printed expressions re-parse to the same tree.
    #[test]
    fn expression_round_trip(e in arb_expr()) {
        let printed = koord::pretty::expr(&e);
        let tokens = tokenize(&printed).unwrap();
        let back = parse_expr(&tokens).unwrap();
        prop_assert_eq!(back, e, "{}", printed);
    }
}

fn arb_expr() -> impl Strategy<Value = Expr> {
    let span = Span::default();
    let leaf = prop_oneof![
        (0i64..1000).prop_map(ExprKind::Int),
        (0.0f64..100.0).prop_map(ExprKind::Float),
        any::<bool>().prop_map(ExprKind::Bool),
        prop::sample::select(vec!["a", "b", "pid"]).prop_map(|s| ExprKind::Var(s.into())),
        prop::sample::select(vec!["psn", "reached"]).prop_map(|s| ExprKind::Port(s.into())),
    ]
    .prop_map(move |k| Expr::new(k, span));
    leaf.prop_recursive(4, 32, 3, move |inner| {
        let ops = vec![
            BinOp::Or,
            BinOp::And,
            BinOp::Eq,
            BinOp::Ne,
            BinOp::Lt,
            BinOp::Le,
            BinOp::Gt,
            BinOp::Ge,
            BinOp::Add,
            BinOp::Sub,
            BinOp::Mul,
            BinOp::Div,
            BinOp::Rem,
        ];
        prop_oneof![
            (prop::sample::select(ops), inner.clone(), inner.clone())
                .prop_map(|(op, l, r)| ExprKind::Binary(op, Box::new(l), Box::new(r))),
            (prop::sample::select(vec![UnOp::Not, UnOp::Neg]), inner.clone())
                .prop_map(|(op, e)| ExprKind::Unary(op, Box::new(e))),
            (inner.clone(), inner.clone()).prop_map(|(b, i)| ExprKind::Index(Box::new(b), Box::new(i))),
            (inner.clone(), prop::sample::select(vec!["x", "y", "z"]))
                .prop_map(|(b, f)| ExprKind::Field(Box::new(b), f.into())),
            prop::collection::vec(inner.clone(), 0..3).prop_map(ExprKind::List),
            prop::collection::vec(inner, 0..3).prop_map(|a| ExprKind::Call("len".into(), a)),
        ]
        .prop_map(move |k| Expr::new(k, span))
    })
}
