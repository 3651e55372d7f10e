//! A small expression language for the concrete formulas in problem files.
//!
//! Grammar (standard precedence, `^` binds tighter than unary minus and is
//! right-associative):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?
//! atom   := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'
//!         | 'piecewise' '{' '[' bound ',' bound ']' ':' expr (';' ...)* '}'
//! ```
//!
//! Built-in functions: `abs`, `ln`, `exp`, `sqrt`, `min`, `max`. Named
//! constants: `e`, `pi`, `inf` (the last only makes sense as a piece bound).
//! `abs`, `min`, `max` and `piecewise` are the nonsmooth primitives; their
//! kinks are what the Clarke machinery consumes. Piece guards always test the
//! first declared variable.

use std::fmt;

use thiserror::Error;

/// Syntax or name-resolution error with a 1-based source position.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Abs,
    Ln,
    Exp,
    Sqrt,
    Min,
    Max,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "abs" => Func::Abs,
            "ln" => Func::Ln,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Abs => "abs",
            Func::Ln => "ln",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }
}

/// One guarded branch of a `piecewise{…}` node, active on `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub body: Node,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Var(usize),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
    Piecewise(Vec<Piece>),
}

/// Which one-sided limit to take at a kink.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    fn sign(self) -> f64 {
        match self {
            Side::Left => -1.0,
            Side::Right => 1.0,
        }
    }
}

/// Value and derivative carried through forward-mode evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub v: f64,
    pub d: f64,
}

impl Dual {
    fn cst(v: f64) -> Dual {
        Dual { v, d: 0.0 }
    }
}

/// A parsed expression together with the names of its variables.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprFn {
    root: Node,
    vars: Vec<String>,
}

impl ExprFn {
    /// Parse an expression in the single variable `x`.
    pub fn parse(text: &str) -> Result<ExprFn, ParseError> {
        Self::parse_with_vars(text, &["x"])
    }

    /// Parse an expression in the variables `x` and `u` (η and β maps).
    pub fn parse_pair(text: &str) -> Result<ExprFn, ParseError> {
        Self::parse_with_vars(text, &["x", "u"])
    }

    pub fn parse_with_vars(text: &str, vars: &[&str]) -> Result<ExprFn, ParseError> {
        let vars: Vec<String> = vars.iter().map(|s| s.to_string()).collect();
        let tokens = lex(text)?;
        let mut p = Parser { text, tokens, pos: 0, vars: &vars };
        let root = p.expr()?;
        if let Some(t) = p.peek() {
            return Err(p.error_at(t.start, format!("unexpected {}", t.kind.describe())));
        }
        Ok(ExprFn { root, vars })
    }

    /// Build directly from a tree.
    pub fn from_node(root: Node, vars: &[&str]) -> ExprFn {
        ExprFn { root, vars: vars.iter().map(|s| s.to_string()).collect() }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    /// `scale * self + shift`, keeping the variable list.
    pub fn affine(&self, scale: f64, shift: f64) -> ExprFn {
        let scaled = Node::Bin(BinOp::Mul, Box::new(Node::Num(scale)), Box::new(self.root.clone()));
        ExprFn {
            root: Node::Bin(BinOp::Add, Box::new(scaled), Box::new(Node::Num(shift))),
            vars: self.vars.clone(),
        }
    }

    /// Plain evaluation. Returns NaN outside every piece of a piecewise node.
    pub fn eval(&self, args: &[f64]) -> f64 {
        eval(&self.root, args)
    }

    /// One-sided forward-mode evaluation in the first variable; remaining
    /// variables are held at `rest`.
    ///
    /// At a kink of `abs`/`min`/`max` or at a piece boundary, the branch is the
    /// one active immediately to the requested side, so `d` is the exact
    /// one-sided derivative of a piecewise-C¹ function. NaN when the requested
    /// side lies outside every piece.
    pub fn eval_sided(&self, x: f64, rest: &[f64], side: Side) -> Dual {
        let mut args = Vec::with_capacity(1 + rest.len());
        args.push(x);
        args.extend_from_slice(rest);
        eval_dual(&self.root, &args, side)
    }

    /// Kinks declared by the expression itself: interior piece boundaries and
    /// zeros of affine arguments to `abs` / affine differences in `min`/`max`.
    pub fn declared_kinks(&self) -> Vec<f64> {
        let mut out = Vec::new();
        collect_kinks(&self.root, &mut out);
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }
}

impl fmt::Display for ExprFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(f, &self.root, &self.vars)
    }
}

fn eval(node: &Node, args: &[f64]) -> f64 {
    match node {
        Node::Num(c) => *c,
        Node::Var(i) => args.get(*i).copied().unwrap_or(f64::NAN),
        Node::Neg(a) => -eval(a, args),
        Node::Bin(op, a, b) => {
            let (a, b) = (eval(a, args), eval(b, args));
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => a / b,
                BinOp::Pow => a.powf(b),
            }
        }
        Node::Call(func, xs) => {
            let a = eval(&xs[0], args);
            match func {
                Func::Abs => a.abs(),
                Func::Ln => a.ln(),
                Func::Exp => a.exp(),
                Func::Sqrt => a.sqrt(),
                Func::Min => a.min(eval(&xs[1], args)),
                Func::Max => a.max(eval(&xs[1], args)),
            }
        }
        Node::Piecewise(pieces) => {
            let x = args.first().copied().unwrap_or(f64::NAN);
            pieces
                .iter()
                .find(|p| p.lo <= x && x <= p.hi)
                .map_or(f64::NAN, |p| eval(&p.body, args))
        }
    }
}

fn eval_dual(node: &Node, args: &[f64], side: Side) -> Dual {
    match node {
        Node::Num(c) => Dual::cst(*c),
        Node::Var(i) => Dual {
            v: args.get(*i).copied().unwrap_or(f64::NAN),
            d: if *i == 0 { 1.0 } else { 0.0 },
        },
        Node::Neg(a) => {
            let a = eval_dual(a, args, side);
            Dual { v: -a.v, d: -a.d }
        }
        Node::Bin(op, a, b) => {
            let a = eval_dual(a, args, side);
            let b = eval_dual(b, args, side);
            match op {
                BinOp::Add => Dual { v: a.v + b.v, d: a.d + b.d },
                BinOp::Sub => Dual { v: a.v - b.v, d: a.d - b.d },
                BinOp::Mul => Dual { v: a.v * b.v, d: a.d * b.v + a.v * b.d },
                BinOp::Div => Dual { v: a.v / b.v, d: (a.d * b.v - a.v * b.d) / (b.v * b.v) },
                BinOp::Pow => {
                    let v = a.v.powf(b.v);
                    if b.d == 0.0 {
                        // constant exponent: valid for negative bases too
                        let d = if a.d == 0.0 { 0.0 } else { b.v * a.v.powf(b.v - 1.0) * a.d };
                        Dual { v, d }
                    } else {
                        Dual { v, d: v * (b.d * a.v.ln() + b.v * a.d / a.v) }
                    }
                }
            }
        }
        Node::Call(func, xs) => {
            let a = eval_dual(&xs[0], args, side);
            match func {
                Func::Abs => {
                    if a.v > 0.0 {
                        a
                    } else if a.v < 0.0 {
                        Dual { v: -a.v, d: -a.d }
                    } else {
                        Dual { v: 0.0, d: side.sign() * a.d.abs() }
                    }
                }
                Func::Ln => Dual { v: a.v.ln(), d: a.d / a.v },
                Func::Exp => {
                    let e = a.v.exp();
                    Dual { v: e, d: e * a.d }
                }
                Func::Sqrt => {
                    let s = a.v.sqrt();
                    Dual { v: s, d: a.d / (2.0 * s) }
                }
                Func::Min | Func::Max => {
                    let b = eval_dual(&xs[1], args, side);
                    let want_min = *func == Func::Min;
                    if a.v != b.v {
                        if (a.v < b.v) == want_min {
                            a
                        } else {
                            b
                        }
                    } else {
                        // tie: the branch that stays smaller (resp. larger) on this side
                        let right_pick_smaller_d = want_min == (side == Side::Right);
                        let d = if right_pick_smaller_d { a.d.min(b.d) } else { a.d.max(b.d) };
                        Dual { v: a.v, d }
                    }
                }
            }
        }
        Node::Piecewise(pieces) => {
            let x = args.first().copied().unwrap_or(f64::NAN);
            let piece = match side {
                Side::Right => pieces.iter().find(|p| p.lo <= x && x < p.hi),
                Side::Left => pieces.iter().find(|p| p.lo < x && x <= p.hi),
            };
            piece.map_or(Dual { v: f64::NAN, d: f64::NAN }, |p| eval_dual(&p.body, args, side))
        }
    }
}

/// `(slope, intercept)` when the node is affine in the first variable.
fn affine_in_x(node: &Node) -> Option<(f64, f64)> {
    match node {
        Node::Num(c) => Some((0.0, *c)),
        Node::Var(0) => Some((1.0, 0.0)),
        Node::Var(_) => None,
        Node::Neg(a) => affine_in_x(a).map(|(s, c)| (-s, -c)),
        Node::Bin(op, a, b) => {
            let (sa, ca) = affine_in_x(a)?;
            let (sb, cb) = affine_in_x(b)?;
            match op {
                BinOp::Add => Some((sa + sb, ca + cb)),
                BinOp::Sub => Some((sa - sb, ca - cb)),
                BinOp::Mul if sa == 0.0 => Some((ca * sb, ca * cb)),
                BinOp::Mul if sb == 0.0 => Some((sa * cb, ca * cb)),
                BinOp::Div if sb == 0.0 && cb != 0.0 => Some((sa / cb, ca / cb)),
                _ => None,
            }
        }
        _ => None,
    }
}

fn collect_kinks(node: &Node, out: &mut Vec<f64>) {
    match node {
        Node::Num(_) | Node::Var(_) => {}
        Node::Neg(a) => collect_kinks(a, out),
        Node::Bin(_, a, b) => {
            collect_kinks(a, out);
            collect_kinks(b, out);
        }
        Node::Call(func, xs) => {
            for x in xs {
                collect_kinks(x, out);
            }
            let arg = match func {
                Func::Abs => affine_in_x(&xs[0]),
                Func::Min | Func::Max => match (affine_in_x(&xs[0]), affine_in_x(&xs[1])) {
                    (Some((s1, c1)), Some((s2, c2))) => Some((s1 - s2, c1 - c2)),
                    _ => None,
                },
                _ => None,
            };
            if let Some((s, c)) = arg {
                if s != 0.0 {
                    out.push(-c / s);
                }
            }
        }
        Node::Piecewise(pieces) => {
            for w in pieces.windows(2) {
                out.push(w[0].hi);
            }
            for p in pieces {
                collect_kinks(&p.body, out);
            }
        }
    }
}

// ---------------------------------------------------------------- printing

fn prec(node: &Node) -> u8 {
    match node {
        Node::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
        Node::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
        Node::Neg(_) => 3,
        Node::Bin(BinOp::Pow, ..) => 4,
        _ => 5,
    }
}

fn write_num(f: &mut fmt::Formatter<'_>, c: f64) -> fmt::Result {
    if c.is_infinite() {
        write!(f, "{}", if c > 0.0 { "inf" } else { "-inf" })
    } else {
        write!(f, "{c:?}")
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, node: &Node, min_prec: u8, vars: &[String]) -> fmt::Result {
    if prec(node) < min_prec || matches!(node, Node::Num(c) if c.is_sign_negative()) {
        write!(f, "(")?;
        write_node(f, node, vars)?;
        write!(f, ")")
    } else {
        write_node(f, node, vars)
    }
}

fn write_node(f: &mut fmt::Formatter<'_>, node: &Node, vars: &[String]) -> fmt::Result {
    match node {
        Node::Num(c) => write_num(f, *c),
        Node::Var(i) => write!(f, "{}", vars.get(*i).map_or("?", String::as_str)),
        Node::Neg(a) => {
            write!(f, "-")?;
            write_child(f, a, 3, vars)
        }
        Node::Bin(op, a, b) => {
            let (sym, lp, rp) = match op {
                BinOp::Add => (" + ", 1, 2),
                BinOp::Sub => (" - ", 1, 2),
                BinOp::Mul => (" * ", 2, 3),
                BinOp::Div => (" / ", 2, 3),
                BinOp::Pow => ("^", 5, 3),
            };
            write_child(f, a, lp, vars)?;
            write!(f, "{sym}")?;
            write_child(f, b, rp, vars)
        }
        Node::Call(func, xs) => {
            write!(f, "{}(", func.name())?;
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write_node(f, x, vars)?;
            }
            write!(f, ")")
        }
        Node::Piecewise(pieces) => {
            write!(f, "piecewise{{ ")?;
            for (i, p) in pieces.iter().enumerate() {
                if i > 0 {
                    write!(f, "; ")?;
                }
                write!(f, "[")?;
                write_num(f, p.lo)?;
                write!(f, ", ")?;
                write_num(f, p.hi)?;
                write!(f, "]: ")?;
                write_node(f, &p.body, vars)?;
            }
            write!(f, " }}")
        }
    }
}

// ---------------------------------------------------------------- lexing

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(n) => format!("number {n}"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Sym(c) => format!("`{c}`"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: Tok,
    start: usize,
}

fn position(text: &str, byte: usize) -> (usize, usize) {
    let before = &text[..byte.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == '.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            let start = i;
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
            let lit = &text[start..i];
            let v = lit.parse::<f64>().map_err(|_| {
                let (line, column) = position(text, start);
                ParseError { line, column, message: format!("malformed number `{lit}`") }
            })?;
            out.push(Token { kind: Tok::Num(v), start });
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token { kind: Tok::Ident(text[start..i].to_string()), start });
        } else if "+-*/^(),;:[]{}".contains(c) {
            out.push(Token { kind: Tok::Sym(c), start: i });
            i += 1;
        } else {
            let (line, column) = position(text, i);
            let ch = text[i..].chars().next().unwrap_or(c);
            return Err(ParseError { line, column, message: format!("unexpected character `{ch}`") });
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------- parsing

struct Parser<'a> {
    text: &'a str,
    tokens: Vec<Token>,
    pos: usize,
    vars: &'a [String],
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_sym(&self, c: char) -> bool {
        matches!(self.peek(), Some(Token { kind: Tok::Sym(s), .. }) if *s == c)
    }

    fn error_at(&self, byte: usize, message: String) -> ParseError {
        let (line, column) = position(self.text, byte);
        ParseError { line, column, message }
    }

    fn end_error(&self, what: &str) -> ParseError {
        self.error_at(self.text.len(), format!("unexpected end of input, expected {what}"))
    }

    fn expect_sym(&mut self, c: char) -> Result<(), ParseError> {
        match self.peek() {
            Some(Token { kind: Tok::Sym(s), .. }) if *s == c => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => Err(self.error_at(t.start, format!("expected `{c}`, found {}", t.kind.describe()))),
            None => Err(self.end_error(&format!("`{c}`"))),
        }
    }

    /// Parse a right operand of the binary operator token at `op_start`.
    fn operand<F>(&mut self, op: char, op_start: usize, f: F) -> Result<Node, ParseError>
    where
        F: FnOnce(&mut Self) -> Result<Node, ParseError>,
    {
        let starts_operand = match self.peek() {
            None => false,
            Some(Token { kind: Tok::Sym(s), .. }) => matches!(s, '(' | '-'),
            Some(_) => true,
        };
        if !starts_operand {
            return Err(self.error_at(op_start, format!("operator `{op}` is missing its right operand")));
        }
        f(self)
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        while let Some(Token { kind: Tok::Sym(c @ ('+' | '-')), start }) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.operand(c, start, Self::term)?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(Token { kind: Tok::Sym(c @ ('*' | '/')), start }) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.operand(c, start, Self::unary)?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if self.peek_sym('-') {
            let start = self.peek().map_or(0, |t| t.start);
            self.pos += 1;
            let inner = self.operand('-', start, Self::unary)?;
            return Ok(Node::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.atom()?;
        if let Some(Token { kind: Tok::Sym('^'), start }) = self.peek().cloned() {
            self.pos += 1;
            let exp = self.operand('^', start, Self::unary)?;
            return Ok(Node::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        let tok = match self.peek().cloned() {
            Some(t) => t,
            None => return Err(self.end_error("an operand")),
        };
        self.pos += 1;
        match tok.kind {
            Tok::Num(v) => Ok(Node::Num(v)),
            Tok::Sym('(') => {
                let inner = self.expr()?;
                self.expect_sym(')')?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                if name == "piecewise" {
                    return self.piecewise(tok.start);
                }
                if let Some(i) = self.vars.iter().position(|v| *v == name) {
                    return Ok(Node::Var(i));
                }
                if self.peek_sym('(') {
                    let func = Func::from_name(&name)
                        .ok_or_else(|| self.error_at(tok.start, format!("unknown function `{name}`")))?;
                    self.pos += 1;
                    let mut args = vec![self.expr()?];
                    while self.peek_sym(',') {
                        self.pos += 1;
                        args.push(self.expr()?);
                    }
                    self.expect_sym(')')?;
                    if args.len() != func.arity() {
                        return Err(self.error_at(
                            tok.start,
                            format!("`{name}` takes {} argument(s), got {}", func.arity(), args.len()),
                        ));
                    }
                    return Ok(Node::Call(func, args));
                }
                match name.as_str() {
                    "e" => Ok(Node::Num(std::f64::consts::E)),
                    "pi" => Ok(Node::Num(std::f64::consts::PI)),
                    "inf" => Ok(Node::Num(f64::INFINITY)),
                    _ => Err(self.error_at(tok.start, format!("unknown identifier `{name}`"))),
                }
            }
            other => Err(self.error_at(tok.start, format!("unexpected {}", other.describe()))),
        }
    }

    fn bound(&mut self) -> Result<f64, ParseError> {
        let start = self.peek().map_or(self.text.len(), |t| t.start);
        let node = self.expr()?;
        let v = eval(&node, &[]);
        if v.is_nan() || contains_var(&node) {
            return Err(self.error_at(start, "piece bounds must be constants".to_string()));
        }
        Ok(v)
    }

    fn piecewise(&mut self, start: usize) -> Result<Node, ParseError> {
        self.expect_sym('{')?;
        let mut pieces: Vec<Piece> = Vec::new();
        loop {
            if self.peek_sym('}') {
                self.pos += 1;
                break;
            }
            let piece_start = self.peek().map_or(self.text.len(), |t| t.start);
            self.expect_sym('[')?;
            let lo = self.bound()?;
            self.expect_sym(',')?;
            let hi = self.bound()?;
            self.expect_sym(']')?;
            self.expect_sym(':')?;
            let body = self.expr()?;
            if !(lo < hi) {
                return Err(self.error_at(piece_start, format!("empty piece [{lo}, {hi}]")));
            }
            if let Some(prev) = pieces.last() {
                if lo != prev.hi {
                    let what = if lo < prev.hi { "overlaps" } else { "leaves a gap after" };
                    return Err(self.error_at(
                        piece_start,
                        format!("piece [{lo}, {hi}] {what} the previous piece ending at {}", prev.hi),
                    ));
                }
            }
            pieces.push(Piece { lo, hi, body });
            if self.peek_sym(';') {
                self.pos += 1;
            } else if !self.peek_sym('}') {
                return match self.peek() {
                    Some(t) => Err(self.error_at(t.start, format!("expected `;` or `}}`, found {}", t.kind.describe()))),
                    None => Err(self.end_error("`}`")),
                };
            }
        }
        if pieces.is_empty() {
            return Err(self.error_at(start, "piecewise needs at least one piece".to_string()));
        }
        Ok(Node::Piecewise(pieces))
    }
}

fn contains_var(node: &Node) -> bool {
    match node {
        Node::Var(_) => true,
        Node::Num(_) => false,
        Node::Neg(a) => contains_var(a),
        Node::Bin(_, a, b) => contains_var(a) || contains_var(b),
        Node::Call(_, xs) => xs.iter().any(contains_var),
        Node::Piecewise(_) => true,
    }
}

/// Parse a single-variable expression; convenience wrapper over [`ExprFn::parse`].
pub fn parse_expression(text: &str) -> Result<ExprFn, ParseError> {
    ExprFn::parse(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * (1.0 + b.abs())
    }

    #[test]
    fn shape_function_value() {
        let s = parse_expression("ln(x^2 + abs(x) + 1) + 1").unwrap();
        assert_eq!(s.eval(&[0.0]), 1.0);
        assert!(close(s.eval(&[1.0]), 1.0 + 3f64.ln()));
        assert_eq!(s.declared_kinks(), vec![0.0]);
    }

    #[test]
    fn precedence() {
        let e = parse_expression("-x^2").unwrap();
        assert_eq!(e.eval(&[3.0]), -9.0);
        let e = parse_expression("2^3^2").unwrap();
        assert_eq!(e.eval(&[0.0]), 512.0);
        let e = parse_expression("1 - 2 - 3").unwrap();
        assert_eq!(e.eval(&[0.0]), -4.0);
        let e = parse_expression("x^-1").unwrap();
        assert_eq!(e.eval(&[4.0]), 0.25);
        let e = parse_expression("2e-3 * x").unwrap();
        assert!(close(e.eval(&[1.0]), 0.002));
    }

    #[test]
    fn piecewise_g2() {
        let g = parse_expression("piecewise{ [-1,0]: -3*x^2; [0,1]: x }").unwrap();
        assert_eq!(g.eval(&[-1.0]), -3.0);
        assert_eq!(g.eval(&[0.5]), 0.5);
        assert!(g.eval(&[2.0]).is_nan());
        assert_eq!(g.eval_sided(0.0, &[], Side::Left).d, 0.0);
        assert_eq!(g.eval_sided(0.0, &[], Side::Right).d, 1.0);
        assert!(g.eval_sided(1.0, &[], Side::Right).v.is_nan());
        assert_eq!(g.declared_kinks(), vec![0.0]);
    }

    #[test]
    fn syntax_error_position() {
        let err = parse_expression("x +* 2").unwrap_err();
        assert_eq!((err.line, err.column), (1, 3));
        let err = parse_expression("y + 1").unwrap_err();
        assert!(err.message.contains("unknown identifier `y`"));
        let err = parse_expression("(x + 1").unwrap_err();
        assert!(err.message.contains("end of input"));
        let err = parse_expression("min(x)").unwrap_err();
        assert!(err.message.contains("2 argument"));
        let err = parse_expression("piecewise{ [0,1]: x; [2,3]: x }").unwrap_err();
        assert!(err.message.contains("gap"));
        let err = parse_expression("x\n + $").unwrap_err();
        assert_eq!((err.line, err.column), (2, 4));
    }

    #[test]
    fn one_sided_abs_and_minmax() {
        let a = parse_expression("abs(x)").unwrap();
        assert_eq!(a.eval_sided(0.0, &[], Side::Left).d, -1.0);
        assert_eq!(a.eval_sided(0.0, &[], Side::Right).d, 1.0);
        let a = parse_expression("abs(2 - 4*x)").unwrap();
        assert_eq!(a.eval_sided(0.5, &[], Side::Left).d, -4.0);
        assert_eq!(a.eval_sided(0.5, &[], Side::Right).d, 4.0);
        assert_eq!(a.declared_kinks(), vec![0.5]);
        let m = parse_expression("max(x, -x)").unwrap();
        assert_eq!(m.eval_sided(0.0, &[], Side::Left).d, -1.0);
        assert_eq!(m.eval_sided(0.0, &[], Side::Right).d, 1.0);
        let m = parse_expression("min(x, 0)").unwrap();
        assert_eq!(m.eval_sided(0.0, &[], Side::Left).d, 1.0);
        assert_eq!(m.eval_sided(0.0, &[], Side::Right).d, 0.0);
    }

    #[test]
    fn pair_variables() {
        let eta = ExprFn::parse_pair("ln(x^2+abs(x)+1) - ln(u^2+abs(u)+1)").unwrap();
        assert_eq!(eta.eval(&[0.0, 0.0]), 0.0);
        assert!(close(eta.eval(&[1.0, 0.0]), 3f64.ln()));
    }

    #[test]
    fn printing_reparses() {
        for src in [
            "ln(x^2 + abs(x) + 1) + 1",
            "-x^2 - (x - 1)",
            "(-x)^2",
            "x / (2 * x) / 3",
            "2^3^2",
            "(2^3)^2",
            "piecewise{ [-inf, 0]: -3*x^2; [0, inf]: x }",
            "max(x, -x) * -1.5e-7",
        ] {
            let e = parse_expression(src).unwrap();
            let again = parse_expression(&e.to_string()).unwrap();
            assert_eq!(e, again, "{src} -> {e}");
        }
    }
}
