//! Arithmetic formulas and guard conditions for structural equations.
//!
//! This is a separate, richer grammar than the event language: standard
//! operator precedence with parentheses, unary minus, the reserved symbol
//! `t` for simulation time, and `der(x)` for the backward finite
//! difference of `x`. Formulas arrive as strings inside model files and
//! are compiled once against the model's variable order so evaluation in
//! the integration loop is a slot lookup, not a name lookup.

use std::collections::HashMap;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EquationError {
    #[error("formula parse error at column {col}: {msg}")]
    Parse { col: usize, msg: String },
    #[error("formula references unknown variable {0}")]
    UnknownVariable(String),
}

/// Division by zero during evaluation; the simulator attaches the time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("division by zero")]
pub struct DivisionByZero;

type Result<T> = std::result::Result<T, EquationError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Ast {
    Num(f64),
    Var(String),
    Time,
    Der(String),
    Neg(Box<Ast>),
    Bin { op: BinOp, lhs: Box<Ast>, rhs: Box<Ast> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GuardCmp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Guard {
    True,
    Cmp { lhs: Ast, op: GuardCmp, rhs: Ast },
    Not(Box<Guard>),
    And(Box<Guard>, Box<Guard>),
    Or(Box<Guard>, Box<Guard>),
}

impl Ast {
    /// Names read directly (same-step value) and via `der` (previous
    /// steps), in encounter order without duplicates.
    pub fn references(&self, direct: &mut Vec<String>, der: &mut Vec<String>) {
        match self {
            Ast::Num(_) | Ast::Time => {}
            Ast::Var(v) => push_unique(direct, v),
            Ast::Der(v) => push_unique(der, v),
            Ast::Neg(a) => a.references(direct, der),
            Ast::Bin { lhs, rhs, .. } => {
                lhs.references(direct, der);
                rhs.references(direct, der);
            }
        }
    }
}

impl Guard {
    pub fn references(&self, direct: &mut Vec<String>, der: &mut Vec<String>) {
        match self {
            Guard::True => {}
            Guard::Cmp { lhs, rhs, .. } => {
                lhs.references(direct, der);
                rhs.references(direct, der);
            }
            Guard::Not(g) => g.references(direct, der),
            Guard::And(a, b) | Guard::Or(a, b) => {
                a.references(direct, der);
                b.references(direct, der);
            }
        }
    }
}

fn push_unique(out: &mut Vec<String>, v: &str) {
    if !out.iter().any(|x| x == v) {
        out.push(v.to_string());
    }
}

// ---------------------------------------------------------------------------
// Parsing

struct P<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> P<'a> {
    fn new(src: &'a str) -> Self {
        P { src: src.as_bytes(), pos: 0 }
    }

    fn err(&self, msg: impl Into<String>) -> EquationError {
        EquationError::Parse { col: self.pos + 1, msg: msg.into() }
    }

    fn skip_ws(&mut self) {
        while matches!(self.src.get(self.pos), Some(b' ' | b'\t' | b'\r' | b'\n')) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_str(&mut self, s: &str) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(s.as_bytes()) {
            self.pos += s.len();
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Option<String> {
        self.skip_ws();
        let start = self.pos;
        match self.src.get(self.pos) {
            Some(c) if c.is_ascii_alphabetic() || *c == b'_' => {}
            _ => return None,
        }
        while matches!(
            self.src.get(self.pos),
            Some(b'a'..=b'z' | b'A'..=b'Z' | b'0'..=b'9' | b'_')
        ) {
            self.pos += 1;
        }
        Some(std::str::from_utf8(&self.src[start..self.pos]).unwrap().to_string())
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        while matches!(self.src.get(self.pos), Some(b'0'..=b'9' | b'.')) {
            self.pos += 1;
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            while matches!(self.src.get(self.pos), Some(b'0'..=b'9')) {
                self.pos += 1;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse::<f64>()
            .map_err(|_| EquationError::Parse { col: start + 1, msg: format!("bad number {text:?}") })
    }

    // expr := term (('+'|'-') term)*
    fn expr(&mut self) -> Result<Ast> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Ast::Bin { op, lhs: Box::new(lhs), rhs: Box::new(rhs) };
        }
        Ok(lhs)
    }

    // term := factor (('*'|'/') factor)*
    fn term(&mut self) -> Result<Ast> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = Ast::Bin { op, lhs: Box::new(lhs), rhs: Box::new(rhs) };
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Ast> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(Ast::Neg(Box::new(self.factor()?)))
            }
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.err("expected `)`"));
                }
                Ok(inner)
            }
            Some(b'0'..=b'9' | b'.') => Ok(Ast::Num(self.number()?)),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let name = self.ident().unwrap();
                if name == "t" {
                    return Ok(Ast::Time);
                }
                if name == "der" {
                    if !self.eat(b'(') {
                        return Err(self.err("`der` takes a variable: der(x)"));
                    }
                    let v = self
                        .ident()
                        .ok_or_else(|| self.err("`der` takes a variable name"))?;
                    if !self.eat(b')') {
                        return Err(self.err("expected `)` after der argument"));
                    }
                    return Ok(Ast::Der(v));
                }
                Ok(Ast::Var(name))
            }
            Some(c) => Err(self.err(format!("unexpected character {:?}", c as char))),
            None => Err(self.err("unexpected end of formula")),
        }
    }

    // gexpr := gterm ('||' gterm)*
    fn gexpr(&mut self) -> Result<Guard> {
        let mut lhs = self.gterm()?;
        while {
            self.skip_ws();
            self.eat_str("||")
        } {
            let rhs = self.gterm()?;
            lhs = Guard::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    // gterm := gfactor ('&&' gfactor)*
    fn gterm(&mut self) -> Result<Guard> {
        let mut lhs = self.gfactor()?;
        while {
            self.skip_ws();
            self.eat_str("&&")
        } {
            let rhs = self.gfactor()?;
            lhs = Guard::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn gfactor(&mut self) -> Result<Guard> {
        self.skip_ws();
        if self.src.get(self.pos) == Some(&b'!')
            && self.src.get(self.pos + 1) != Some(&b'=')
        {
            self.pos += 1;
            return Ok(Guard::Not(Box::new(self.gfactor()?)));
        }
        // `(` may open a nested guard or an arithmetic subterm; try the
        // guard reading first and fall back on comparison parsing.
        if self.src.get(self.pos) == Some(&b'(') {
            let save = self.pos;
            self.pos += 1;
            if let Ok(inner) = self.gexpr() {
                if self.eat(b')') {
                    self.skip_ws();
                    // a trailing comparison means `(` opened arithmetic
                    if !matches!(self.src.get(self.pos), Some(b'<' | b'>' | b'=' | b'!')) {
                        return Ok(inner);
                    }
                }
            }
            self.pos = save;
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<Guard> {
        let lhs = self.expr()?;
        self.skip_ws();
        let op = if self.eat_str("<=") {
            GuardCmp::Le
        } else if self.eat_str(">=") {
            GuardCmp::Ge
        } else if self.eat_str("!=") {
            GuardCmp::Ne
        } else if self.eat_str("==") || self.eat_str("=") {
            GuardCmp::Eq
        } else if self.eat_str("<") {
            GuardCmp::Lt
        } else if self.eat_str(">") {
            GuardCmp::Gt
        } else {
            return Err(self.err("expected a comparison operator"));
        };
        let rhs = self.expr()?;
        Ok(Guard::Cmp { lhs, op, rhs })
    }

    fn finish(&mut self) -> Result<()> {
        self.skip_ws();
        if self.pos != self.src.len() {
            return Err(self.err("trailing input after formula"));
        }
        Ok(())
    }
}

pub fn parse_formula(text: &str) -> Result<Ast> {
    let mut p = P::new(text);
    let a = p.expr()?;
    p.finish()?;
    Ok(a)
}

pub fn parse_guard(text: &str) -> Result<Guard> {
    let mut p = P::new(text);
    let g = p.gexpr()?;
    p.finish()?;
    Ok(g)
}

// ---------------------------------------------------------------------------
// Compilation to slot-indexed form

/// Formula with variable names resolved to state-vector indices.
#[derive(Debug, Clone)]
pub enum CompiledExpr {
    Num(f64),
    Slot(usize),
    DerSlot(usize),
    Time,
    Neg(Box<CompiledExpr>),
    Bin { op: BinOp, lhs: Box<CompiledExpr>, rhs: Box<CompiledExpr> },
}

#[derive(Debug, Clone)]
pub enum CompiledGuard {
    True,
    Cmp { lhs: CompiledExpr, op: GuardCmp, rhs: CompiledExpr },
    Not(Box<CompiledGuard>),
    And(Box<CompiledGuard>, Box<CompiledGuard>),
    Or(Box<CompiledGuard>, Box<CompiledGuard>),
}

pub fn compile_expr(ast: &Ast, slots: &HashMap<String, usize>) -> Result<CompiledExpr> {
    Ok(match ast {
        Ast::Num(n) => CompiledExpr::Num(*n),
        Ast::Time => CompiledExpr::Time,
        Ast::Var(v) => CompiledExpr::Slot(
            *slots
                .get(v)
                .ok_or_else(|| EquationError::UnknownVariable(v.clone()))?,
        ),
        Ast::Der(v) => CompiledExpr::DerSlot(
            *slots
                .get(v)
                .ok_or_else(|| EquationError::UnknownVariable(v.clone()))?,
        ),
        Ast::Neg(a) => CompiledExpr::Neg(Box::new(compile_expr(a, slots)?)),
        Ast::Bin { op, lhs, rhs } => CompiledExpr::Bin {
            op: *op,
            lhs: Box::new(compile_expr(lhs, slots)?),
            rhs: Box::new(compile_expr(rhs, slots)?),
        },
    })
}

pub fn compile_guard(g: &Guard, slots: &HashMap<String, usize>) -> Result<CompiledGuard> {
    Ok(match g {
        Guard::True => CompiledGuard::True,
        Guard::Cmp { lhs, op, rhs } => CompiledGuard::Cmp {
            lhs: compile_expr(lhs, slots)?,
            op: *op,
            rhs: compile_expr(rhs, slots)?,
        },
        Guard::Not(g) => CompiledGuard::Not(Box::new(compile_guard(g, slots)?)),
        Guard::And(a, b) => CompiledGuard::And(
            Box::new(compile_guard(a, slots)?),
            Box::new(compile_guard(b, slots)?),
        ),
        Guard::Or(a, b) => CompiledGuard::Or(
            Box::new(compile_guard(a, slots)?),
            Box::new(compile_guard(b, slots)?),
        ),
    })
}

impl CompiledExpr {
    /// Evaluates against a state vector and a matching vector of backward
    /// finite differences.
    pub fn eval(
        &self,
        state: &[f64],
        ders: &[f64],
        t: f64,
    ) -> std::result::Result<f64, DivisionByZero> {
        Ok(match self {
            CompiledExpr::Num(n) => *n,
            CompiledExpr::Slot(i) => state[*i],
            CompiledExpr::DerSlot(i) => ders[*i],
            CompiledExpr::Time => t,
            CompiledExpr::Neg(a) => -a.eval(state, ders, t)?,
            CompiledExpr::Bin { op, lhs, rhs } => {
                let a = lhs.eval(state, ders, t)?;
                let b = rhs.eval(state, ders, t)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(DivisionByZero);
                        }
                        a / b
                    }
                }
            }
        })
    }
}

impl CompiledGuard {
    /// Guard equality is exact; guards describe mode boundaries, not
    /// measurement comparisons.
    pub fn eval(
        &self,
        state: &[f64],
        ders: &[f64],
        t: f64,
    ) -> std::result::Result<bool, DivisionByZero> {
        Ok(match self {
            CompiledGuard::True => true,
            CompiledGuard::Cmp { lhs, op, rhs } => {
                let a = lhs.eval(state, ders, t)?;
                let b = rhs.eval(state, ders, t)?;
                match op {
                    GuardCmp::Eq => a == b,
                    GuardCmp::Ne => a != b,
                    GuardCmp::Lt => a < b,
                    GuardCmp::Le => a <= b,
                    GuardCmp::Gt => a > b,
                    GuardCmp::Ge => a >= b,
                }
            }
            CompiledGuard::Not(g) => !g.eval(state, ders, t)?,
            CompiledGuard::And(a, b) => a.eval(state, ders, t)? && b.eval(state, ders, t)?,
            CompiledGuard::Or(a, b) => a.eval(state, ders, t)? || b.eval(state, ders, t)?,
        })
    }
}
