//! A small arithmetic expression language for declaring vector fields.
//!
//! Variables: `t`, `x1`, `x2`, `eps`. Constants: `pi`, `e`.
//! Operators: `+ - * / ^` and unary minus (`^` binds tighter than unary
//! minus and is right associative). Functions: `sin cos exp log abs sign`
//! (one argument), `min max mod` (two arguments) and `tri`, the unit
//! amplitude triangle wave of period 2π in phase with `sin`.

use std::f64::consts::PI;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("empty expression")]
    Empty,
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { offset: usize, name: String },
    #[error("unknown function `{name}` at byte {offset}")]
    UnknownFunction { offset: usize, name: String },
    #[error("function `{name}` at byte {offset} takes {expected} argument(s), got {got}")]
    Arity {
        offset: usize,
        name: String,
        expected: usize,
        got: usize,
    },
}

impl ExprError {
    pub fn offset(&self) -> Option<usize> {
        match self {
            ExprError::Empty => None,
            ExprError::Syntax { offset, .. }
            | ExprError::UnknownIdentifier { offset, .. }
            | ExprError::UnknownFunction { offset, .. }
            | ExprError::Arity { offset, .. } => Some(*offset),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    T,
    X1,
    X2,
    Eps,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Constant {
    Pi,
    E,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Abs,
    Sign,
    Min,
    Max,
    Mod,
    Tri,
}

impl Func {
    fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "abs" => Func::Abs,
            "sign" => Func::Sign,
            "min" => Func::Min,
            "max" => Func::Max,
            "mod" => Func::Mod,
            "tri" => Func::Tri,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Abs => "abs",
            Func::Sign => "sign",
            Func::Min => "min",
            Func::Max => "max",
            Func::Mod => "mod",
            Func::Tri => "tri",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max | Func::Mod => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

/// Byte range of a node in the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone)]
pub enum ExprKind {
    Num(f64),
    Const(Constant),
    Var(Var),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

#[derive(Debug, Clone)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl Expr {
    fn new(kind: ExprKind, start: usize, end: usize) -> Self {
        Expr {
            kind,
            span: Span { start, end },
        }
    }

    /// Structural equality, ignoring source positions.
    pub fn same_tree(&self, other: &Expr) -> bool {
        match (&self.kind, &other.kind) {
            (ExprKind::Num(a), ExprKind::Num(b)) => a.to_bits() == b.to_bits(),
            (ExprKind::Const(a), ExprKind::Const(b)) => a == b,
            (ExprKind::Var(a), ExprKind::Var(b)) => a == b,
            (ExprKind::Neg(a), ExprKind::Neg(b)) => a.same_tree(b),
            (ExprKind::Binary(o1, a1, b1), ExprKind::Binary(o2, a2, b2)) => {
                o1 == o2 && a1.same_tree(a2) && b1.same_tree(b2)
            }
            (ExprKind::Call(f1, a1), ExprKind::Call(f2, a2)) => {
                f1 == f2 && a1.len() == a2.len() && a1.iter().zip(a2).all(|(x, y)| x.same_tree(y))
            }
            _ => false,
        }
    }

    fn visit_vars(&self, out: &mut Vec<Var>) {
        match &self.kind {
            ExprKind::Var(v) => {
                if !out.contains(v) {
                    out.push(*v)
                }
            }
            ExprKind::Neg(a) => a.visit_vars(out),
            ExprKind::Binary(_, a, b) => {
                a.visit_vars(out);
                b.visit_vars(out);
            }
            ExprKind::Call(_, args) => args.iter().for_each(|a| a.visit_vars(out)),
            ExprKind::Num(_) | ExprKind::Const(_) => {}
        }
    }

    pub fn eval(&self, env: &Env) -> f64 {
        match &self.kind {
            ExprKind::Num(v) => *v,
            ExprKind::Const(Constant::Pi) => PI,
            ExprKind::Const(Constant::E) => std::f64::consts::E,
            ExprKind::Var(Var::T) => env.t,
            ExprKind::Var(Var::X1) => env.x1,
            ExprKind::Var(Var::X2) => env.x2,
            ExprKind::Var(Var::Eps) => env.eps,
            ExprKind::Neg(a) => -a.eval(env),
            ExprKind::Binary(op, a, b) => {
                let (a, b) = (a.eval(env), b.eval(env));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => pow(a, b),
                }
            }
            ExprKind::Call(f, args) => {
                let a = args[0].eval(env);
                match f {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Exp => a.exp(),
                    Func::Log => a.ln(),
                    Func::Abs => a.abs(),
                    Func::Sign => sign(a),
                    Func::Tri => tri(a),
                    Func::Min => a.min(args[1].eval(env)),
                    Func::Max => a.max(args[1].eval(env)),
                    Func::Mod => {
                        let b = args[1].eval(env);
                        a - b * (a / b).floor()
                    }
                }
            }
        }
    }
}

fn pow(a: f64, b: f64) -> f64 {
    if b == b.trunc() && b.abs() <= 64.0 {
        a.powi(b as i32)
    } else {
        a.powf(b)
    }
}

fn sign(a: f64) -> f64 {
    if a > 0.0 {
        1.0
    } else if a < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Triangle wave of period 2π and amplitude 1, `tri(0) = 0`, `tri(π/2) = 1`.
pub fn tri(x: f64) -> f64 {
    let u = (x + 0.5 * PI).rem_euclid(2.0 * PI);
    1.0 - 2.0 * (u - PI).abs() / PI
}

impl fmt::Display for Expr {
    /// Fully parenthesised form; reparsing it yields the same tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ExprKind::Num(v) => write!(f, "{v:?}"),
            ExprKind::Const(Constant::Pi) => write!(f, "pi"),
            ExprKind::Const(Constant::E) => write!(f, "e"),
            ExprKind::Var(v) => write!(
                f,
                "{}",
                match v {
                    Var::T => "t",
                    Var::X1 => "x1",
                    Var::X2 => "x2",
                    Var::Eps => "eps",
                }
            ),
            ExprKind::Neg(a) => write!(f, "(-{a})"),
            ExprKind::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            ExprKind::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Variable bindings for evaluation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Env {
    pub t: f64,
    pub x1: f64,
    pub x2: f64,
    pub eps: f64,
}

/// A parsed expression together with its source text.
#[derive(Debug, Clone)]
pub struct ExpressionProgram {
    source: String,
    root: Expr,
}

impl ExpressionProgram {
    pub fn root(&self) -> &Expr {
        &self.root
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn eval(&self, env: &Env) -> f64 {
        self.root.eval(env)
    }

    pub fn unparse(&self) -> String {
        self.root.to_string()
    }

    /// Variables referenced by the expression, in first-use order.
    pub fn variables(&self) -> Vec<Var> {
        let mut out = Vec::new();
        self.root.visit_vars(&mut out);
        out
    }
}

pub fn parse_expression(src: &str) -> Result<ExpressionProgram, ExprError> {
    if src.trim().is_empty() {
        return Err(ExprError::Empty);
    }
    let tokens = lex(src)?;
    let mut p = Parser { tokens, pos: 0, src_len: src.len() };
    let root = p.expr()?;
    if let Some(tok) = p.peek() {
        return Err(ExprError::Syntax {
            offset: tok.start,
            message: format!("unexpected {}", tok.kind.describe()),
        });
    }
    Ok(ExpressionProgram {
        source: src.to_string(),
        root,
    })
}

#[derive(Debug, Clone, PartialEq)]
enum TokKind {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
}

impl TokKind {
    fn describe(&self) -> String {
        match self {
            TokKind::Num(v) => format!("number {v}"),
            TokKind::Ident(s) => format!("identifier `{s}`"),
            TokKind::Op(c) => format!("operator `{c}`"),
            TokKind::LParen => "`(`".into(),
            TokKind::RParen => "`)`".into(),
            TokKind::Comma => "`,`".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokKind,
    start: usize,
    end: usize,
}

fn lex(src: &str) -> Result<Vec<Token>, ExprError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || (c == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text = &src[start..i];
            let v: f64 = text.parse().map_err(|_| ExprError::Syntax {
                offset: start,
                message: format!("malformed number `{text}`"),
            })?;
            out.push(Token { kind: TokKind::Num(v), start, end: i });
        } else if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token {
                kind: TokKind::Ident(src[start..i].to_string()),
                start,
                end: i,
            });
        } else {
            let kind = match c {
                b'+' | b'-' | b'*' | b'/' | b'^' => TokKind::Op(c as char),
                b'(' => TokKind::LParen,
                b')' => TokKind::RParen,
                b',' => TokKind::Comma,
                _ => {
                    let ch = src[start..].chars().next().unwrap_or('?');
                    return Err(ExprError::Syntax {
                        offset: start,
                        message: format!("unexpected character `{ch}`"),
                    });
                }
            };
            i += 1;
            out.push(Token { kind, start, end: i });
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    src_len: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn eof_error(&self, what: &str) -> ExprError {
        ExprError::Syntax {
            offset: self.src_len,
            message: format!("unexpected end of input, expected {what}"),
        }
    }

    fn peek_op(&self, ops: &[char]) -> Option<char> {
        match self.peek() {
            Some(Token { kind: TokKind::Op(c), .. }) if ops.contains(c) => Some(*c),
            _ => None,
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        while let Some(c) = self.peek_op(&['+', '-']) {
            self.pos += 1;
            let rhs = self.term()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            let (s, e) = (lhs.span.start, rhs.span.end);
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), s, e);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        while let Some(c) = self.peek_op(&['*', '/']) {
            self.pos += 1;
            let rhs = self.unary()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            let (s, e) = (lhs.span.start, rhs.span.end);
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), s, e);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.peek_op(&['-']).is_some() {
            let start = self.next().map(|t| t.start).unwrap_or(0);
            let inner = self.unary()?;
            let end = inner.span.end;
            return Ok(Expr::new(ExprKind::Neg(Box::new(inner)), start, end));
        }
        if self.peek_op(&['+']).is_some() {
            self.pos += 1;
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.peek_op(&['^']).is_some() {
            self.pos += 1;
            let exp = self.unary()?;
            let (s, e) = (base.span.start, exp.span.end);
            return Ok(Expr::new(
                ExprKind::Binary(BinOp::Pow, Box::new(base), Box::new(exp)),
                s,
                e,
            ));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let tok = self.next().ok_or_else(|| self.eof_error("a value"))?;
        match tok.kind {
            TokKind::Num(v) => Ok(Expr::new(ExprKind::Num(v), tok.start, tok.end)),
            TokKind::LParen => {
                let inner = self.expr()?;
                match self.next() {
                    Some(Token { kind: TokKind::RParen, end, .. }) => {
                        Ok(Expr { kind: inner.kind, span: Span { start: tok.start, end } })
                    }
                    Some(t) => Err(ExprError::Syntax {
                        offset: t.start,
                        message: format!("expected `)`, found {}", t.kind.describe()),
                    }),
                    None => Err(self.eof_error("`)`")),
                }
            }
            TokKind::Ident(name) => {
                let is_call = matches!(self.peek(), Some(Token { kind: TokKind::LParen, .. }));
                if is_call {
                    let func = Func::lookup(&name).ok_or(ExprError::UnknownFunction {
                        offset: tok.start,
                        name: name.clone(),
                    })?;
                    self.pos += 1;
                    let mut args = Vec::new();
                    if matches!(self.peek(), Some(Token { kind: TokKind::RParen, .. })) {
                        self.pos += 1;
                    } else {
                        loop {
                            args.push(self.expr()?);
                            match self.next() {
                                Some(Token { kind: TokKind::Comma, .. }) => continue,
                                Some(Token { kind: TokKind::RParen, .. }) => break,
                                Some(t) => {
                                    return Err(ExprError::Syntax {
                                        offset: t.start,
                                        message: format!(
                                            "expected `,` or `)`, found {}",
                                            t.kind.describe()
                                        ),
                                    })
                                }
                                None => return Err(self.eof_error("`)`")),
                            }
                        }
                    }
                    if args.len() != func.arity() {
                        return Err(ExprError::Arity {
                            offset: tok.start,
                            name,
                            expected: func.arity(),
                            got: args.len(),
                        });
                    }
                    let end = self.tokens[self.pos - 1].end;
                    return Ok(Expr::new(ExprKind::Call(func, args), tok.start, end));
                }
                let kind = match name.as_str() {
                    "t" => ExprKind::Var(Var::T),
                    "x1" => ExprKind::Var(Var::X1),
                    "x2" => ExprKind::Var(Var::X2),
                    "eps" => ExprKind::Var(Var::Eps),
                    "pi" => ExprKind::Const(Constant::Pi),
                    "e" => ExprKind::Const(Constant::E),
                    _ if Func::lookup(&name).is_some() => {
                        return Err(ExprError::Syntax {
                            offset: tok.start,
                            message: format!("function `{name}` used without arguments"),
                        })
                    }
                    _ => {
                        return Err(ExprError::UnknownIdentifier {
                            offset: tok.start,
                            name,
                        })
                    }
                };
                Ok(Expr::new(kind, tok.start, tok.end))
            }
            other => Err(ExprError::Syntax {
                offset: tok.start,
                message: format!("unexpected {}", other.describe()),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn eval(src: &str, env: Env) -> f64 {
        parse_expression(src).unwrap().eval(&env)
    }

    #[test]
    fn documented_examples() {
        let v = eval("sin(t)*x1", Env { t: PI / 2.0, x1: 2.0, ..Env::default() });
        assert!((v - 2.0).abs() < 1e-14);
        let v = eval("abs(sin(t)) - 2/pi", Env::default());
        assert!((v + 2.0 / PI).abs() < 1e-14);
        let v = eval("x1 - x2 - x1*(x1^2+x2^2)", Env { x1: 1.0, ..Env::default() });
        assert_eq!(v, 0.0);
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(eval("-2^2", Env::default()), -4.0);
        assert_eq!(eval("2^3^2", Env::default()), 512.0);
        assert_eq!(eval("2^-1", Env::default()), 0.5);
        assert_eq!(eval("8/4/2", Env::default()), 1.0);
        assert_eq!(eval("1-2-3", Env::default()), -4.0);
        assert_eq!(eval("2*e", Env::default()), 2.0 * std::f64::consts::E);
        assert_eq!(eval("1.5e-3*1e3", Env::default()), 1.5);
    }

    #[test]
    fn functions() {
        let env = Env { t: -7.5, ..Env::default() };
        assert_eq!(eval("mod(t, 2)", env), 0.5);
        assert_eq!(eval("min(3, t)", env), -7.5);
        assert_eq!(eval("max(3, t)", env), 3.0);
        assert_eq!(eval("sign(t) + sign(0)", env), -1.0);
        assert!((eval("log(exp(1.25))", env) - 1.25).abs() < 1e-15);
        assert!(eval("tri(0)", env).abs() < 1e-15);
        assert!((eval("tri(pi/2)", env) - 1.0).abs() < 1e-15);
        assert!((eval("tri(-pi/2)", env) + 1.0).abs() < 1e-15);
        assert!((eval("tri(pi/4)", env) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn tri_is_antiperiodic_and_continuous() {
        for k in 0..1000 {
            let x = -20.0 + 0.04 * k as f64;
            assert!((tri(x + PI) + tri(x)).abs() < 1e-12);
            assert!((tri(x + 2.0 * PI) - tri(x)).abs() < 1e-12);
            assert!((tri(x + 1e-9) - tri(x)).abs() < 1e-8);
        }
    }

    #[test]
    fn errors_carry_offsets() {
        assert_eq!(parse_expression("  ").unwrap_err(), ExprError::Empty);
        let e = parse_expression("x1 + y").unwrap_err();
        assert_eq!(e, ExprError::UnknownIdentifier { offset: 5, name: "y".into() });
        let e = parse_expression("foo(t)").unwrap_err();
        assert!(matches!(e, ExprError::UnknownFunction { offset: 0, .. }));
        let e = parse_expression("1 + max(t)").unwrap_err();
        assert!(matches!(e, ExprError::Arity { offset: 4, expected: 2, got: 1, .. }));
        let e = parse_expression("(1 + 2").unwrap_err();
        assert_eq!(e.offset(), Some(6));
        let e = parse_expression("1 + * 2").unwrap_err();
        assert_eq!(e.offset(), Some(4));
        let e = parse_expression("1 $ 2").unwrap_err();
        assert_eq!(e.offset(), Some(2));
        let e = parse_expression("1 2").unwrap_err();
        assert_eq!(e.offset(), Some(2));
        assert!(parse_expression("sin").is_err());
    }

    #[test]
    fn spans_point_into_source() {
        let p = parse_expression("1 + cos(t)").unwrap();
        match &p.root().kind {
            ExprKind::Binary(_, _, rhs) => assert_eq!(rhs.span, Span { start: 4, end: 10 }),
            _ => panic!(),
        }
    }

    #[test]
    fn variables_listed() {
        let p = parse_expression("x2*cos(t) + eps").unwrap();
        assert_eq!(p.variables(), vec![Var::X2, Var::T, Var::Eps]);
    }

    fn arb_expr() -> impl Strategy<Value = String> {
        let leaf = prop_oneof![
            (0u32..1000, 0i32..4).prop_map(|(m, s)| format!("{:?}", m as f64 / 10f64.powi(s))),
            Just("t".to_string()),
            Just("x1".to_string()),
            Just("x2".to_string()),
            Just("eps".to_string()),
            Just("pi".to_string()),
            Just("e".to_string()),
        ];
        leaf.prop_recursive(5, 48, 3, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone(), prop::sample::select(vec!['+', '-', '*', '/', '^']))
                    .prop_map(|(a, b, op)| format!("{a} {op} {b}")),
                inner.clone().prop_map(|a| format!("-{a}")),
                inner.clone().prop_map(|a| format!("({a})")),
                (inner.clone(), prop::sample::select(vec!["sin", "cos", "exp", "abs", "tri", "sign", "log"]))
                    .prop_map(|(a, f)| format!("{f}({a})")),
                (inner.clone(), inner, prop::sample::select(vec!["min", "max", "mod"]))
                    .prop_map(|(a, b, f)| format!("{f}({a}, {b})")),
            ]
        })
    }

    proptest! {
        #[test]
        fn unparse_reparse_is_identity(src in arb_expr()) {
            let p = parse_expression(&src).unwrap();
            let text = p.unparse();
            let q = parse_expression(&text).unwrap();
            prop_assert!(p.root().same_tree(q.root()), "{src} -> {text}");
            prop_assert_eq!(q.unparse(), text);
            let env = Env { t: 0.3, x1: -1.1, x2: 0.7, eps: 0.01 };
            let (a, b) = (p.eval(&env), q.eval(&env));
            prop_assert!(a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()));
        }

        #[test]
        fn closed_arithmetic_matches(a in -100.0f64..100.0, b in 0.5f64..50.0, c in -3.0f64..3.0) {
            let src = format!("{a:?} * {b:?} + {c:?} / {b:?} - ({a:?})^2");
            let v = parse_expression(&src).unwrap().eval(&Env::default());
            let expect = a * b + c / b - a * a;
            prop_assert!((v - expect).abs() <= 1e-14 * (1.0 + expect.abs()));
        }
    }
}
