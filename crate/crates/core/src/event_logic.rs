//! Interval-tagged comparison events over trajectories.
//!
//! A primitive event `x OP_[lo,hi) e` holds when the comparison between
//! variable `x` and expression `e` is true at every grid point of the
//! half-open interval. Events combine with `&&`, `||` and `!`, where
//! negation applies to primitive events only and binds tightest, then
//! `&&`, then `||`. Expressions are a variable or constant on the left of
//! each arithmetic operator with the remainder on the right, as in
//! `sp + 5` or `speed * decay - 1`; a chain therefore nests to the right.
//!
//! Only `=` comparisons use the tolerance; order comparisons are exact.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trajectory::{TimeInterval, Trajectory, TrajectorySlice};

#[derive(Debug, Error)]
pub enum EventError {
    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("unknown variable {0}")]
    UnknownVariable(String),
    #[error("division by zero at t = {t}")]
    DivisionByZero { t: f64 },
    #[error("event interval [{lo}, {hi}) outside trajectory domain [{dlo}, {dhi})")]
    OutsideDomain { lo: f64, hi: f64, dlo: f64, dhi: f64 },
    #[error(transparent)]
    Trajectory(#[from] crate::trajectory::TrajectoryError),
}

type Result<T> = std::result::Result<T, EventError>;

/// Leaf of an expression: a named signal or a constant held over time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TrajRef {
    Var(String),
    Const(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Arithmetic over trajectories: a leaf, or a leaf combined with the rest
/// of the expression on the right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Expression {
    Leaf(TrajRef),
    Binary {
        lhs: TrajRef,
        op: ArithOp,
        rhs: Box<Expression>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CmpOp {
    Eq,
    Lt,
    Gt,
    Ge,
    Le,
}

impl CmpOp {
    fn token(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Lt => "<",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Le => "<=",
        }
    }
}

/// `lhs OP_[lo,hi) rhs`, universally quantified over grid points in the
/// interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimitiveEvent {
    pub lhs: String,
    pub op: CmpOp,
    pub interval: TimeInterval,
    pub rhs: Expression,
}

/// Boolean combination of primitive events; negation is restricted to
/// primitive events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum EventExpression {
    Prim(PrimitiveEvent),
    Not(PrimitiveEvent),
    And(Box<EventExpression>, Box<EventExpression>),
    Or(Box<EventExpression>, Box<EventExpression>),
}

impl EventExpression {
    /// Logical negation, pushed down so that `!` still applies to
    /// primitive events only.
    pub fn negated(&self) -> EventExpression {
        match self {
            EventExpression::Prim(p) => EventExpression::Not(p.clone()),
            EventExpression::Not(p) => EventExpression::Prim(p.clone()),
            EventExpression::And(a, b) => {
                EventExpression::Or(Box::new(a.negated()), Box::new(b.negated()))
            }
            EventExpression::Or(a, b) => {
                EventExpression::And(Box::new(a.negated()), Box::new(b.negated()))
            }
        }
    }

    /// Variables read by the event, without duplicates.
    pub fn variables(&self) -> Vec<String> {
        fn expr_vars(e: &Expression, out: &mut Vec<String>) {
            match e {
                Expression::Leaf(TrajRef::Var(v)) => push(out, v),
                Expression::Leaf(TrajRef::Const(_)) => {}
                Expression::Binary { lhs, rhs, .. } => {
                    if let TrajRef::Var(v) = lhs {
                        push(out, v);
                    }
                    expr_vars(rhs, out);
                }
            }
        }
        fn push(out: &mut Vec<String>, v: &str) {
            if !out.iter().any(|x| x == v) {
                out.push(v.to_string());
            }
        }
        fn walk(e: &EventExpression, out: &mut Vec<String>) {
            match e {
                EventExpression::Prim(p) | EventExpression::Not(p) => {
                    push(out, &p.lhs);
                    expr_vars(&p.rhs, out);
                }
                EventExpression::And(a, b) | EventExpression::Or(a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }
}

impl fmt::Display for TrajRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrajRef::Var(v) => write!(f, "{v}"),
            TrajRef::Const(c) => write!(f, "{c}"),
        }
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expression::Leaf(l) => write!(f, "{l}"),
            Expression::Binary { lhs, op, rhs } => {
                let op = match op {
                    ArithOp::Add => "+",
                    ArithOp::Sub => "-",
                    ArithOp::Mul => "*",
                    ArithOp::Div => "/",
                };
                write!(f, "{lhs} {op} {rhs}")
            }
        }
    }
}

impl fmt::Display for PrimitiveEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}_[{},{}) {}",
            self.lhs,
            self.op.token(),
            self.interval.lo,
            self.interval.hi,
            self.rhs
        )
    }
}

impl fmt::Display for EventExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventExpression::Prim(p) => write!(f, "{p}"),
            EventExpression::Not(p) => write!(f, "!{p}"),
            EventExpression::And(a, b) => {
                // Disjunctions bind loosest, so spell them out explicitly
                // inside a conjunction.
                for (i, side) in [a, b].into_iter().enumerate() {
                    if i > 0 {
                        write!(f, " && ")?;
                    }
                    if matches!(side.as_ref(), EventExpression::Or(..)) {
                        write!(f, "({side})")?;
                    } else {
                        write!(f, "{side}")?;
                    }
                }
                Ok(())
            }
            EventExpression::Or(a, b) => write!(f, "{a} || {b}"),
        }
    }
}

// ---------------------------------------------------------------------------
// Parsing

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    Cmp(CmpOp, TimeInterval),
    AndAnd,
    OrOr,
    Bang,
    LParen,
    RParen,
    Plus,
    Minus,
    Star,
    Slash,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src: src.as_bytes(), pos: 0, line: 1, col: 1 }
    }

    fn err(&self, msg: impl Into<String>) -> EventError {
        EventError::Parse { line: self.line, col: self.col, msg: msg.into() }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek()?;
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\r' | b'\n')) {
            self.bump();
        }
    }

    fn number(&mut self) -> Result<f64> {
        let start = self.pos;
        let (line, col) = (self.line, self.col);
        if self.peek() == Some(b'-') {
            self.bump();
        }
        while matches!(self.peek(), Some(b'0'..=b'9' | b'.')) {
            self.bump();
        }
        if matches!(self.peek(), Some(b'e' | b'E')) {
            self.bump();
            if matches!(self.peek(), Some(b'+' | b'-')) {
                self.bump();
            }
            while matches!(self.peek(), Some(b'0'..=b'9')) {
                self.bump();
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse::<f64>().map_err(|_| EventError::Parse {
            line,
            col,
            msg: format!("bad number {text:?}"),
        })
    }

    fn interval(&mut self) -> Result<TimeInterval> {
        if self.bump() != Some(b'_') {
            return Err(self.err("expected `_[lo,hi)` after comparison operator"));
        }
        if self.bump() != Some(b'[') {
            return Err(self.err("expected `[` opening the interval"));
        }
        self.skip_ws();
        let lo = self.number()?;
        self.skip_ws();
        if self.bump() != Some(b',') {
            return Err(self.err("expected `,` in interval"));
        }
        self.skip_ws();
        let hi = self.number()?;
        self.skip_ws();
        if self.bump() != Some(b')') {
            return Err(self.err("intervals are half-open: expected `)`"));
        }
        TimeInterval::new(lo, hi).map_err(|_| EventError::Parse {
            line: self.line,
            col: self.col,
            msg: format!("empty interval [{lo}, {hi})"),
        })
    }

    fn lex(mut self) -> Result<Vec<Spanned>> {
        let mut out = Vec::new();
        loop {
            self.skip_ws();
            let (line, col) = (self.line, self.col);
            let Some(c) = self.peek() else { break };
            let tok = match c {
                b'(' => {
                    self.bump();
                    Tok::LParen
                }
                b')' => {
                    self.bump();
                    Tok::RParen
                }
                b'+' => {
                    self.bump();
                    Tok::Plus
                }
                b'-' => {
                    self.bump();
                    Tok::Minus
                }
                b'*' => {
                    self.bump();
                    Tok::Star
                }
                b'/' => {
                    self.bump();
                    Tok::Slash
                }
                b'!' => {
                    self.bump();
                    Tok::Bang
                }
                b'&' => {
                    self.bump();
                    if self.bump() != Some(b'&') {
                        return Err(self.err("single `&`; conjunction is `&&`"));
                    }
                    Tok::AndAnd
                }
                b'|' => {
                    self.bump();
                    if self.bump() != Some(b'|') {
                        return Err(self.err("single `|`; disjunction is `||`"));
                    }
                    Tok::OrOr
                }
                b'=' => {
                    self.bump();
                    Tok::Cmp(CmpOp::Eq, self.interval()?)
                }
                b'<' | b'>' => {
                    self.bump();
                    let ge = self.peek() == Some(b'=');
                    if ge {
                        self.bump();
                    }
                    let op = match (c, ge) {
                        (b'<', false) => CmpOp::Lt,
                        (b'<', true) => CmpOp::Le,
                        (b'>', false) => CmpOp::Gt,
                        (b'>', true) => CmpOp::Ge,
                        _ => unreachable!(),
                    };
                    Tok::Cmp(op, self.interval()?)
                }
                b'0'..=b'9' | b'.' => Tok::Num(self.number()?),
                c if c.is_ascii_alphabetic() || c == b'_' => {
                    let start = self.pos;
                    while matches!(
                        self.peek(),
                        Some(b'a'..=b'z' | b'A'..=b'Z' | b'0'..=b'9' | b'_' | b'.')
                    ) {
                        self.bump();
                    }
                    let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                    Tok::Ident(s.to_string())
                }
                other => {
                    return Err(self.err(format!("unexpected character {:?}", other as char)))
                }
            };
            out.push(Spanned { tok, line, col });
        }
        Ok(out)
    }
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn err_at(&self, msg: impl Into<String>) -> EventError {
        let (line, col) = self
            .toks
            .get(self.pos)
            .map(|s| (s.line, s.col))
            .unwrap_or_else(|| {
                self.toks
                    .last()
                    .map(|s| (s.line, s.col + 1))
                    .unwrap_or((1, 1))
            });
        EventError::Parse { line, col, msg: msg.into() }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|s| s.tok.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn or_expr(&mut self) -> Result<EventExpression> {
        let mut lhs = self.and_expr()?;
        while self.peek() == Some(&Tok::OrOr) {
            self.bump();
            let rhs = self.and_expr()?;
            lhs = EventExpression::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<EventExpression> {
        let mut lhs = self.unary()?;
        while self.peek() == Some(&Tok::AndAnd) {
            self.bump();
            let rhs = self.unary()?;
            lhs = EventExpression::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<EventExpression> {
        match self.peek() {
            Some(Tok::Bang) => {
                self.bump();
                if !matches!(self.peek(), Some(Tok::Ident(_))) {
                    return Err(self.err_at("negation applies to primitive events only"));
                }
                Ok(EventExpression::Not(self.primitive()?))
            }
            Some(Tok::LParen) => {
                self.bump();
                let inner = self.or_expr()?;
                match self.bump() {
                    Some(Tok::RParen) => Ok(inner),
                    _ => Err(self.err_at("expected `)`")),
                }
            }
            Some(Tok::Ident(_)) => Ok(EventExpression::Prim(self.primitive()?)),
            Some(Tok::Num(_)) => Err(self.err_at(
                "event left-hand side must be a variable, not an expression",
            )),
            _ => Err(self.err_at("expected an event")),
        }
    }

    fn primitive(&mut self) -> Result<PrimitiveEvent> {
        let lhs = match self.bump() {
            Some(Tok::Ident(v)) => v,
            _ => return Err(self.err_at("expected a variable name")),
        };
        let (op, interval) = match self.bump() {
            Some(Tok::Cmp(op, iv)) => (op, iv),
            _ => {
                return Err(self.err_at(
                    "expected a comparison like `>=_[0,10)`; \
                     expressions are not allowed left of the comparison",
                ))
            }
        };
        let rhs = self.expression()?;
        Ok(PrimitiveEvent { lhs, op, interval, rhs })
    }

    fn expression(&mut self) -> Result<Expression> {
        let lhs = self.leaf()?;
        let op = match self.peek() {
            Some(Tok::Plus) => Some(ArithOp::Add),
            Some(Tok::Minus) => Some(ArithOp::Sub),
            Some(Tok::Star) => Some(ArithOp::Mul),
            Some(Tok::Slash) => Some(ArithOp::Div),
            _ => None,
        };
        match op {
            None => Ok(Expression::Leaf(lhs)),
            Some(op) => {
                self.bump();
                let rhs = self.expression()?;
                Ok(Expression::Binary { lhs, op, rhs: Box::new(rhs) })
            }
        }
    }

    fn leaf(&mut self) -> Result<TrajRef> {
        match self.bump() {
            Some(Tok::Ident(v)) => Ok(TrajRef::Var(v)),
            Some(Tok::Num(n)) => Ok(TrajRef::Const(n)),
            Some(Tok::Minus) => match self.bump() {
                Some(Tok::Num(n)) => Ok(TrajRef::Const(-n)),
                _ => {
                    self.pos -= 1;
                    Err(self.err_at("expected a number after unary `-`"))
                }
            },
            _ => {
                self.pos = self.pos.saturating_sub(1);
                Err(self.err_at("expected a variable or number"))
            }
        }
    }
}

/// Parses the surface syntax, e.g. `carPosition >=_[0,10) pedestrianPosition`
/// or `f >_[8,12) sp + 5`, with `!`, `&&`, `||` and parentheses.
pub fn parse(text: &str) -> Result<EventExpression> {
    let toks = Lexer::new(text).lex()?;
    let mut p = Parser { toks, pos: 0 };
    let e = p.or_expr()?;
    if p.pos != p.toks.len() {
        return Err(p.err_at("trailing input after event"));
    }
    Ok(e)
}

// ---------------------------------------------------------------------------
// Evaluation

fn leaf_values(r: &TrajRef, t: &Trajectory) -> Result<Vec<f64>> {
    match r {
        TrajRef::Var(v) => Ok(t
            .column(v)
            .map_err(|_| EventError::UnknownVariable(v.clone()))?
            .to_vec()),
        TrajRef::Const(c) => Ok(vec![*c; t.grid().count]),
    }
}

/// Pointwise evaluation of an expression over the trajectory's grid; the
/// result is a single derived signal named `expr`.
pub fn eval_expression(e: &Expression, t: &Trajectory) -> Result<Trajectory> {
    let vals = eval_values(e, t)?;
    Ok(Trajectory::new(*t.grid(), vec![("expr".to_string(), vals)])
        .expect("derived signal is finite"))
}

fn eval_values(e: &Expression, t: &Trajectory) -> Result<Vec<f64>> {
    match e {
        Expression::Leaf(r) => leaf_values(r, t),
        Expression::Binary { lhs, op, rhs } => {
            let a = leaf_values(lhs, t)?;
            let b = eval_values(rhs, t)?;
            let mut out = Vec::with_capacity(a.len());
            for (k, (x, y)) in a.iter().zip(&b).enumerate() {
                let v = match op {
                    ArithOp::Add => x + y,
                    ArithOp::Sub => x - y,
                    ArithOp::Mul => x * y,
                    ArithOp::Div => {
                        if *y == 0.0 {
                            return Err(EventError::DivisionByZero { t: t.grid().time(k) });
                        }
                        x / y
                    }
                };
                out.push(v);
            }
            Ok(out)
        }
    }
}

fn prim_pointwise(p: &PrimitiveEvent, t: &Trajectory, tol: f64) -> Result<(usize, usize, Vec<bool>)> {
    let dom = t.domain();
    let a = t.grid().snap(p.interval.lo).map_err(|_| EventError::OutsideDomain {
        lo: p.interval.lo,
        hi: p.interval.hi,
        dlo: dom.lo,
        dhi: dom.hi,
    })?;
    let b = t.grid().snap(p.interval.hi).map_err(|_| EventError::OutsideDomain {
        lo: p.interval.lo,
        hi: p.interval.hi,
        dlo: dom.lo,
        dhi: dom.hi,
    })?;
    if a >= b {
        return Err(EventError::OutsideDomain {
            lo: p.interval.lo,
            hi: p.interval.hi,
            dlo: dom.lo,
            dhi: dom.hi,
        });
    }
    let lhs = t
        .column(&p.lhs)
        .map_err(|_| EventError::UnknownVariable(p.lhs.clone()))?;
    let rhs = eval_values(&p.rhs, t)?;
    let mut out = Vec::with_capacity(b - a);
    for k in a..b {
        let (x, y) = (lhs[k], rhs[k]);
        let v = match p.op {
            CmpOp::Eq => (x - y).abs() <= tol,
            CmpOp::Lt => x < y,
            CmpOp::Gt => x > y,
            CmpOp::Ge => x >= y,
            CmpOp::Le => x <= y,
        };
        out.push(v);
    }
    Ok((a, b, out))
}

/// Satisfaction of an event on a trajectory. Primitive events quantify
/// universally over the grid points of their interval; `=` uses `tol`,
/// order comparisons are exact.
pub fn holds(phi: &EventExpression, t: &Trajectory, tol: f64) -> Result<bool> {
    match phi {
        EventExpression::Prim(p) => Ok(prim_pointwise(p, t, tol)?.2.iter().all(|b| *b)),
        EventExpression::Not(p) => Ok(!prim_pointwise(p, t, tol)?.2.iter().all(|b| *b)),
        EventExpression::And(x, y) => Ok(holds(x, t, tol)? && holds(y, t, tol)?),
        EventExpression::Or(x, y) => Ok(holds(x, t, tol)? || holds(y, t, tol)?),
    }
}

/// Earliest grid time witnessing that `phi` holds on `t`, or `None` when
/// it does not hold. A satisfied universal atom is witnessed at its
/// interval start; a satisfied negated atom at the first failing grid
/// point of the inner comparison; a conjunction when its last conjunct is
/// witnessed; a disjunction at its earliest satisfied branch.
pub fn witness_time(phi: &EventExpression, t: &Trajectory, tol: f64) -> Result<Option<f64>> {
    match phi {
        EventExpression::Prim(p) => {
            let (a, _, vs) = prim_pointwise(p, t, tol)?;
            Ok(vs.iter().all(|b| *b).then(|| t.grid().time(a)))
        }
        EventExpression::Not(p) => {
            let (a, _, vs) = prim_pointwise(p, t, tol)?;
            Ok(vs
                .iter()
                .position(|b| !*b)
                .map(|k| t.grid().time(a + k)))
        }
        EventExpression::And(x, y) => {
            match (witness_time(x, t, tol)?, witness_time(y, t, tol)?) {
                (Some(a), Some(b)) => Ok(Some(a.max(b))),
                _ => Ok(None),
            }
        }
        EventExpression::Or(x, y) => {
            match (witness_time(x, t, tol)?, witness_time(y, t, tol)?) {
                (Some(a), Some(b)) => Ok(Some(a.min(b))),
                (Some(a), None) => Ok(Some(a)),
                (None, Some(b)) => Ok(Some(b)),
                (None, None) => Ok(None),
            }
        }
    }
}

/// The event "the trajectory agrees with these slices": one equality
/// conjunct per slice, each over that slice's variables and interval.
#[derive(Debug, Clone, PartialEq)]
pub struct CauseEvent {
    slices: Vec<TrajectorySlice>,
}

impl CauseEvent {
    pub fn new(slices: Vec<TrajectorySlice>) -> Self {
        CauseEvent { slices }
    }

    pub fn slices(&self) -> &[TrajectorySlice] {
        &self.slices
    }

    /// True when every slice matches `t` on its interval within `tol`:
    /// the conjunction of the per-slice equality events.
    pub fn holds_on(&self, t: &Trajectory, tol: f64) -> Result<bool> {
        for s in &self.slices {
            let vars: Vec<&str> = s.vars().iter().map(String::as_str).collect();
            let proj = t.project(&vars)?;
            if !proj.equals_on(s.trajectory(), s.interval(), tol)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::TimeGrid;

    fn traj(cols: Vec<(&str, Vec<f64>)>) -> Trajectory {
        let n = cols[0].1.len();
        let grid = TimeGrid::new(0.0, 0.01, n).unwrap();
        Trajectory::new(
            grid,
            cols.into_iter().map(|(n, c)| (n.to_string(), c)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn parses_collision_event() {
        let e = parse("carPosition >=_[0,10) pedestrianPosition").unwrap();
        match e {
            EventExpression::Prim(p) => {
                assert_eq!(p.lhs, "carPosition");
                assert_eq!(p.op, CmpOp::Ge);
                assert_eq!(p.interval, TimeInterval::new(0.0, 10.0).unwrap());
                assert_eq!(
                    p.rhs,
                    Expression::Leaf(TrajRef::Var("pedestrianPosition".into()))
                );
            }
            other => panic!("expected primitive, got {other:?}"),
        }
    }

    #[test]
    fn parses_connectives_with_precedence() {
        let e = parse("a =_[0,1) 1 || b =_[0,1) 2 && !c =_[0,1) 3").unwrap();
        match e {
            EventExpression::Or(lhs, rhs) => {
                assert!(matches!(*lhs, EventExpression::Prim(_)));
                match *rhs {
                    EventExpression::And(l, r) => {
                        assert!(matches!(*l, EventExpression::Prim(_)));
                        assert!(matches!(*r, EventExpression::Not(_)));
                    }
                    other => panic!("expected conjunction, got {other:?}"),
                }
            }
            other => panic!("expected disjunction, got {other:?}"),
        }
    }

    #[test]
    fn rejects_expression_lhs_and_bad_negation() {
        let err = parse("x + 1 >_[0,1) y").unwrap_err();
        assert!(err.to_string().contains("left of the comparison"), "{err}");
        let err = parse("1 >_[0,1) y").unwrap_err();
        assert!(err.to_string().contains("must be a variable"), "{err}");
        let err = parse("!(a =_[0,1) 1 && b =_[0,1) 2)").unwrap_err();
        assert!(err.to_string().contains("primitive events only"), "{err}");
        let err = parse("x <_[0,1)").unwrap_err();
        assert!(err.to_string().contains("expected a variable or number"), "{err}");
    }

    #[test]
    fn parse_error_reports_position() {
        let err = parse("x >_
[0,1) ?").unwrap_err();
        match err {
            EventError::Parse { line, .. } => assert!(line >= 1),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn display_round_trips_through_the_parser() {
        for text in [
            "x <_[0,10) 80",
            "!carPosition <_[0,10) pedestrianPosition",
            "f >_[8,12) sp + 5",
            "dist >_[0,10) 0 && c =_[0,10) 0",
            "a =_[0,1) 1 || b <=_[2,3.5) c * 2 - 1",
        ] {
            let parsed = parse(text).unwrap();
            let printed = parsed.to_string();
            assert_eq!(parse(&printed).unwrap(), parsed, "via {printed:?}");
        }
    }

    #[test]
    fn expression_chain_nests_right() {
        // a - b + c parses as a - (b + c)
        let e = parse("x =_[0,0.05) a - b + c").unwrap();
        let EventExpression::Prim(p) = e else { panic!() };
        let t = traj(vec![
            ("x", vec![-4.0; 5]),
            ("a", vec![1.0; 5]),
            ("b", vec![2.0; 5]),
            ("c", vec![3.0; 5]),
        ]);
        let v = eval_expression(&p.rhs, &t).unwrap();
        assert_eq!(v.column("expr").unwrap()[0], 1.0 - (2.0 + 3.0));
        assert!(holds(&EventExpression::Prim(p), &t, 1e-6).unwrap());
    }

    #[test]
    fn division_by_zero_reports_time() {
        let e = parse("x =_[0,0.05) a / b").unwrap();
        let EventExpression::Prim(p) = e else { panic!() };
        let t = traj(vec![
            ("x", vec![0.0; 5]),
            ("a", vec![1.0; 5]),
            ("b", vec![1.0, 1.0, 0.0, 1.0, 1.0]),
        ]);
        let err = eval_expression(&p.rhs, &t).unwrap_err();
        match err {
            EventError::DivisionByZero { t } => assert!((t - 0.02).abs() < 1e-12),
            other => panic!("expected division error, got {other:?}"),
        }
    }

    #[test]
    fn equality_uses_tolerance_order_is_exact() {
        let t = traj(vec![("x", vec![1.0 + 5e-7; 10]), ("y", vec![1.0; 10])]);
        let eq = parse("x =_[0,0.1) y").unwrap();
        assert!(holds(&eq, &t, 1e-6).unwrap());
        assert!(!holds(&eq, &t, 1e-8).unwrap());
        let gt = parse("x >_[0,0.1) y").unwrap();
        assert!(holds(&gt, &t, 1e-6).unwrap());
        let le = parse("x <=_[0,0.1) y").unwrap();
        assert!(!holds(&le, &t, 1e-6).unwrap());
    }

    #[test]
    fn universal_semantics_and_negation() {
        let mut col = vec![0.0; 100];
        col[80] = 2.0; // single excursion
        let t = traj(vec![("x", col)]);
        let below = parse("x <_[0,1) 1").unwrap();
        assert!(!holds(&below, &t, 1e-6).unwrap());
        let not_below = below.negated();
        assert!(holds(&not_below, &t, 1e-6).unwrap());
        // witness is the first failing point of the inner atom
        let w = witness_time(&not_below, &t, 1e-6).unwrap();
        assert_eq!(w, Some(0.80));
    }

    #[test]
    fn interval_outside_domain_errors() {
        let t = traj(vec![("x", vec![0.0; 10])]);
        let e = parse("x <_[0,5) 1").unwrap();
        assert!(matches!(
            holds(&e, &t, 1e-6),
            Err(EventError::OutsideDomain { .. })
        ));
    }

    #[test]
    fn cause_event_matches_conjunction_of_equalities() {
        let t = traj(vec![
            ("a", (0..100).map(|k| k as f64).collect()),
            ("b", (0..100).map(|k| 2.0 * k as f64).collect()),
        ]);
        let sa = t
            .project(&["a"])
            .unwrap()
            .slice(TimeInterval::new(0.2, 0.4).unwrap())
            .unwrap();
        let sb = t
            .project(&["b"])
            .unwrap()
            .slice(TimeInterval::new(0.5, 0.9).unwrap())
            .unwrap();
        let ce = CauseEvent::new(vec![sa.clone(), sb.clone()]);
        assert!(ce.holds_on(&t, 1e-6).unwrap());
        // semantic desugaring: conjunction of per-slice equality checks
        let desugared = t
            .project(&["a"])
            .unwrap()
            .equals_on(sa.trajectory(), sa.interval(), 1e-6)
            .unwrap()
            && t.project(&["b"])
                .unwrap()
                .equals_on(sb.trajectory(), sb.interval(), 1e-6)
                .unwrap();
        assert!(desugared);
        // perturb one sample beyond tol: the cause event no longer holds
        let mut col: Vec<f64> = t.column("a").unwrap().to_vec();
        col[25] += 1e-3;
        let t2 = traj(vec![
            ("a", col),
            ("b", t.column("b").unwrap().to_vec()),
        ]);
        assert!(!ce.holds_on(&t2, 1e-6).unwrap());
    }
}
