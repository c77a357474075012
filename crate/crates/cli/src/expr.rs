//! Arithmetic expressions in the variables `x` and `t`, with exact
//! symbolic derivatives.
//!
//! Grammar:
//!
//! ```text
//! expr     := term (('+' | '-') term)*
//! term     := unary (('*' | '/') unary)*
//! unary    := '-' unary | factor
//! factor   := base ('^' exponent)?
//! base     := number | 'x' | 't' | function '(' expr ')' | '(' expr ')'
//! function := sin | cos | exp | sqrt | abs | tanh
//! ```
//!
//! Exponents are numeric literals (optionally signed), so powers always
//! differentiate by the power rule. Prefix minus parses as `0 - operand`.
//! Every node remembers the byte offset it started at; evaluation errors
//! (division by zero, square root of a negative, powers leaving the real
//! line) point back at the offending operator.

use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Var {
    X,
    T,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Abs,
    Tanh,
    /// Only produced by differentiation of `abs`; not parseable.
    Sign,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Tanh => "tanh",
            Func::Sign => "sign",
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "tanh" => Func::Tanh,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Clone, Debug)]
pub struct Ast {
    /// Byte offset of the node's first token in the source.
    pub offset: usize,
    pub kind: Kind,
}

#[derive(Clone, Debug)]
pub enum Kind {
    Num(f64),
    Var(Var),
    Bin(Op, Box<Ast>, Box<Ast>),
    /// Constant-exponent power.
    Pow(Box<Ast>, f64),
    Call(Func, Box<Ast>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntaxError {
    pub offset: usize,
    pub expected: Vec<&'static str>,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "syntax error at offset {}: expected {}",
            self.offset,
            self.expected.join(" or ")
        )
    }
}

impl std::error::Error for SyntaxError {}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalError {
    pub offset: usize,
    pub message: String,
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "evaluation error at offset {}: {}", self.offset, self.message)
    }
}

impl std::error::Error for EvalError {}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

#[derive(Clone, Copy, Debug)]
struct Token {
    tok: Tok,
    offset: usize,
    len: usize,
}

fn tokenize(src: &str) -> Result<Vec<Token>, SyntaxError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        let simple = match b {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(tok) = simple {
            out.push(Token { tok, offset: i, len: 1 });
            i += 1;
            continue;
        }
        if b.is_ascii_digit() || b == b'.' {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &src[start..i];
            let value: f64 = text.parse().map_err(|_| SyntaxError {
                offset: start,
                expected: vec!["number"],
            })?;
            out.push(Token {
                tok: Tok::Num(value),
                offset: start,
                len: i - start,
            });
            continue;
        }
        if b.is_ascii_alphabetic() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_alphanumeric() {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Ident,
                offset: start,
                len: i - start,
            });
            continue;
        }
        return Err(SyntaxError {
            offset: i,
            expected: vec!["number", "variable", "function", "'('", "operator"],
        });
    }
    out.push(Token {
        tok: Tok::End,
        offset: src.len(),
        len: 0,
    });
    Ok(out)
}

struct Parser<'a> {
    src: &'a str,
    tokens: Vec<Token>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Token {
        self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos];
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn text(&self, t: Token) -> &'a str {
        &self.src[t.offset..t.offset + t.len]
    }

    fn expr(&mut self) -> Result<Ast, SyntaxError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().tok {
                Tok::Plus => Op::Add,
                Tok::Minus => Op::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            let offset = lhs.offset;
            lhs = Ast {
                offset,
                kind: Kind::Bin(op, Box::new(lhs), Box::new(rhs)),
            };
        }
    }

    fn term(&mut self) -> Result<Ast, SyntaxError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().tok {
                Tok::Star => Op::Mul,
                Tok::Slash => Op::Div,
                _ => return Ok(lhs),
            };
            let op_tok = self.bump();
            let rhs = self.unary()?;
            let offset = lhs.offset;
            // Division faults are reported at the slash.
            let offset = if op == Op::Div { op_tok.offset } else { offset };
            lhs = Ast {
                offset,
                kind: Kind::Bin(op, Box::new(lhs), Box::new(rhs)),
            };
        }
    }

    fn unary(&mut self) -> Result<Ast, SyntaxError> {
        if self.peek().tok == Tok::Minus {
            let minus = self.bump();
            let inner = self.unary()?;
            return Ok(Ast {
                offset: minus.offset,
                kind: Kind::Bin(
                    Op::Sub,
                    Box::new(Ast {
                        offset: minus.offset,
                        kind: Kind::Num(0.0),
                    }),
                    Box::new(inner),
                ),
            });
        }
        self.factor()
    }

    fn factor(&mut self) -> Result<Ast, SyntaxError> {
        let base = self.base()?;
        if self.peek().tok != Tok::Caret {
            return Ok(base);
        }
        let caret = self.bump();
        let negate = if self.peek().tok == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        match self.peek().tok {
            Tok::Num(value) => {
                self.bump();
                let e = if negate { -value } else { value };
                Ok(Ast {
                    offset: caret.offset,
                    kind: Kind::Pow(Box::new(base), e),
                })
            }
            _ => Err(SyntaxError {
                offset: self.peek().offset,
                expected: vec!["number"],
            }),
        }
    }

    fn base(&mut self) -> Result<Ast, SyntaxError> {
        let t = self.peek();
        match t.tok {
            Tok::Num(value) => {
                self.bump();
                Ok(Ast {
                    offset: t.offset,
                    kind: Kind::Num(value),
                })
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                if self.peek().tok != Tok::RParen {
                    return Err(SyntaxError {
                        offset: self.peek().offset,
                        expected: vec!["')'"],
                    });
                }
                self.bump();
                Ok(Ast {
                    offset: t.offset,
                    kind: inner.kind,
                })
            }
            Tok::Ident => {
                let name = self.text(t);
                if name == "x" {
                    self.bump();
                    return Ok(Ast {
                        offset: t.offset,
                        kind: Kind::Var(Var::X),
                    });
                }
                if name == "t" {
                    self.bump();
                    return Ok(Ast {
                        offset: t.offset,
                        kind: Kind::Var(Var::T),
                    });
                }
                if let Some(func) = Func::from_name(name) {
                    self.bump();
                    if self.peek().tok != Tok::LParen {
                        return Err(SyntaxError {
                            offset: self.peek().offset,
                            expected: vec!["'('"],
                        });
                    }
                    self.bump();
                    let arg = self.expr()?;
                    if self.peek().tok != Tok::RParen {
                        return Err(SyntaxError {
                            offset: self.peek().offset,
                            expected: vec!["')'"],
                        });
                    }
                    self.bump();
                    return Ok(Ast {
                        offset: t.offset,
                        kind: Kind::Call(func, Box::new(arg)),
                    });
                }
                Err(SyntaxError {
                    offset: t.offset,
                    expected: vec!["number", "'x'", "'t'", "function", "'('"],
                })
            }
            _ => Err(SyntaxError {
                offset: t.offset,
                expected: vec!["number", "'x'", "'t'", "function", "'('"],
            }),
        }
    }
}

/// Parsed expression with its two symbolic derivatives.
#[derive(Clone, Debug)]
pub struct Parsed {
    pub ast: Ast,
    pub dx: Ast,
    pub dt: Ast,
    /// `abs` appears somewhere: the field is only Lipschitz and the
    /// derivative uses sign(0) = 0.
    pub uses_abs: bool,
}

pub fn parse_expression(src: &str) -> Result<Parsed, SyntaxError> {
    let tokens = tokenize(src)?;
    let mut p = Parser { src, tokens, pos: 0 };
    let ast = p.expr()?;
    if p.peek().tok != Tok::End {
        return Err(SyntaxError {
            offset: p.peek().offset,
            expected: vec!["operator", "end of input"],
        });
    }
    let dx = differentiate(&ast, Var::X);
    let dt = differentiate(&ast, Var::T);
    let uses_abs = uses_func(&ast, Func::Abs);
    Ok(Parsed { ast, dx, dt, uses_abs })
}

pub fn eval(ast: &Ast, x: f64, t: f64) -> Result<f64, EvalError> {
    match &ast.kind {
        Kind::Num(v) => Ok(*v),
        Kind::Var(Var::X) => Ok(x),
        Kind::Var(Var::T) => Ok(t),
        Kind::Bin(op, a, b) => {
            let (va, vb) = (eval(a, x, t)?, eval(b, x, t)?);
            match op {
                Op::Add => Ok(va + vb),
                Op::Sub => Ok(va - vb),
                Op::Mul => Ok(va * vb),
                Op::Div => {
                    if vb == 0.0 {
                        return Err(EvalError {
                            offset: ast.offset,
                            message: "division by zero".into(),
                        });
                    }
                    Ok(va / vb)
                }
            }
        }
        Kind::Pow(base, e) => {
            let vb = eval(base, x, t)?;
            let v = vb.powf(*e);
            if v.is_nan() && !vb.is_nan() {
                return Err(EvalError {
                    offset: ast.offset,
                    message: format!("{vb} cannot be raised to the power {e}"),
                });
            }
            Ok(v)
        }
        Kind::Call(func, arg) => {
            let va = eval(arg, x, t)?;
            let v = match func {
                Func::Sin => va.sin(),
                Func::Cos => va.cos(),
                Func::Exp => va.exp(),
                Func::Sqrt => {
                    if va < 0.0 {
                        return Err(EvalError {
                            offset: ast.offset,
                            message: format!("square root of negative number {va}"),
                        });
                    }
                    va.sqrt()
                }
                Func::Abs => va.abs(),
                Func::Tanh => va.tanh(),
                Func::Sign => {
                    if va == 0.0 {
                        0.0
                    } else {
                        va.signum()
                    }
                }
            };
            Ok(v)
        }
    }
}

fn num(offset: usize, v: f64) -> Ast {
    Ast { offset, kind: Kind::Num(v) }
}

fn as_num(a: &Ast) -> Option<f64> {
    match a.kind {
        Kind::Num(v) => Some(v),
        _ => None,
    }
}

/// Folding constructors keep derivative trees readable; they only fold
/// literal zeros and ones, which cannot change values or error locations
/// reachable on the real line.
fn add(a: Ast, b: Ast) -> Ast {
    match (as_num(&a), as_num(&b)) {
        (Some(x), Some(y)) => num(a.offset, x + y),
        (Some(0.0), _) => b,
        (_, Some(0.0)) => a,
        _ => {
            let offset = a.offset;
            Ast { offset, kind: Kind::Bin(Op::Add, Box::new(a), Box::new(b)) }
        }
    }
}

fn sub(a: Ast, b: Ast) -> Ast {
    match (as_num(&a), as_num(&b)) {
        (Some(x), Some(y)) => num(a.offset, x - y),
        (_, Some(0.0)) => a,
        _ => {
            let offset = a.offset;
            Ast { offset, kind: Kind::Bin(Op::Sub, Box::new(a), Box::new(b)) }
        }
    }
}

fn mul(a: Ast, b: Ast) -> Ast {
    match (as_num(&a), as_num(&b)) {
        (Some(x), Some(y)) => num(a.offset, x * y),
        (Some(0.0), _) | (_, Some(0.0)) => num(a.offset, 0.0),
        (Some(1.0), _) => b,
        (_, Some(1.0)) => a,
        _ => {
            let offset = a.offset;
            Ast { offset, kind: Kind::Bin(Op::Mul, Box::new(a), Box::new(b)) }
        }
    }
}

fn div(a: Ast, b: Ast) -> Ast {
    match (as_num(&a), as_num(&b)) {
        (Some(0.0), _) => num(a.offset, 0.0),
        (_, Some(1.0)) => a,
        _ => {
            let offset = a.offset;
            Ast { offset, kind: Kind::Bin(Op::Div, Box::new(a), Box::new(b)) }
        }
    }
}

fn call(func: Func, arg: Ast) -> Ast {
    let offset = arg.offset;
    Ast { offset, kind: Kind::Call(func, Box::new(arg)) }
}

pub fn differentiate(ast: &Ast, var: Var) -> Ast {
    let off = ast.offset;
    match &ast.kind {
        Kind::Num(_) => num(off, 0.0),
        Kind::Var(v) => num(off, if *v == var { 1.0 } else { 0.0 }),
        Kind::Bin(op, a, b) => {
            let (da, db) = (differentiate(a, var), differentiate(b, var));
            match op {
                Op::Add => add(da, db),
                Op::Sub => sub(da, db),
                Op::Mul => add(mul(da, (**b).clone()), mul((**a).clone(), db)),
                Op::Div => {
                    // (a' b - a b') / b^2
                    let numer = sub(mul(da, (**b).clone()), mul((**a).clone(), db));
                    let denom = Ast {
                        offset: b.offset,
                        kind: Kind::Pow(Box::new((**b).clone()), 2.0),
                    };
                    div(numer, denom)
                }
            }
        }
        Kind::Pow(base, e) => {
            if *e == 0.0 {
                return num(off, 0.0);
            }
            let db = differentiate(base, var);
            let inner = if *e == 1.0 {
                num(off, 1.0)
            } else if *e == 2.0 {
                mul(num(off, 2.0), (**base).clone())
            } else {
                let lowered = Ast {
                    offset: off,
                    kind: Kind::Pow(Box::new((**base).clone()), e - 1.0),
                };
                mul(num(off, *e), lowered)
            };
            mul(inner, db)
        }
        Kind::Call(func, arg) => {
            let da = differentiate(arg, var);
            let a = (**arg).clone();
            let outer = match func {
                Func::Sin => call(Func::Cos, a),
                Func::Cos => sub(num(off, 0.0), call(Func::Sin, a)),
                Func::Exp => call(Func::Exp, a),
                Func::Sqrt => {
                    // 1 / (2 sqrt(a))
                    div(num(off, 1.0), mul(num(off, 2.0), call(Func::Sqrt, a)))
                }
                Func::Abs => call(Func::Sign, a),
                Func::Tanh => {
                    // 1 - tanh(a)^2
                    let th = call(Func::Tanh, a);
                    let sq = Ast {
                        offset: off,
                        kind: Kind::Pow(Box::new(th), 2.0),
                    };
                    sub(num(off, 1.0), sq)
                }
                Func::Sign => return num(off, 0.0),
            };
            mul(outer, da)
        }
    }
}

pub fn uses_func(ast: &Ast, func: Func) -> bool {
    match &ast.kind {
        Kind::Num(_) | Kind::Var(_) => false,
        Kind::Bin(_, a, b) => uses_func(a, func) || uses_func(b, func),
        Kind::Pow(a, _) => uses_func(a, func),
        Kind::Call(f, a) => *f == func || uses_func(a, func),
    }
}

pub fn uses_var(ast: &Ast, var: Var) -> bool {
    match &ast.kind {
        Kind::Num(_) => false,
        Kind::Var(v) => *v == var,
        Kind::Bin(_, a, b) => uses_var(a, var) || uses_var(b, var),
        Kind::Pow(a, _) => uses_var(a, var),
        Kind::Call(_, a) => uses_var(a, var),
    }
}

impl fmt::Display for Ast {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            Kind::Num(v) => write!(f, "{v}"),
            Kind::Var(Var::X) => write!(f, "x"),
            Kind::Var(Var::T) => write!(f, "t"),
            Kind::Bin(op, a, b) => {
                let sym = match op {
                    Op::Add => "+",
                    Op::Sub => "-",
                    Op::Mul => "*",
                    Op::Div => "/",
                };
                write!(f, "({a} {sym} {b})")
            }
            Kind::Pow(a, e) => write!(f, "({a}^{e})"),
            Kind::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}
