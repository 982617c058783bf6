//! Exact arithmetic expressions for knowledge-base conditions and ranges.
//!
//! Grammar, loosest first: `||`, `&&`, `!`, comparisons (`== != < <= > >=`),
//! `+ -`, `* / %`, unary `-`, `^` (right associative), atoms. Atoms are
//! integer literals, variables, parenthesized expressions and calls of
//! `floor ceil min max log2floor binom`. Booleans are 0 and 1.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExprError {
    #[error("syntax error in `{src}` at offset {at}: {msg}")]
    Syntax { src: String, at: usize, msg: String },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("{0}")]
    Domain(String),
}

pub type Vars = BTreeMap<String, BigRational>;

/// Runtime hooks for functions that depend on the variety, e.g. `special_at`.
pub trait Env {
    fn var(&self, name: &str) -> Option<BigRational>;
    fn call(&self, _name: &str, _args: &[BigRational]) -> Option<Result<BigRational, ExprError>> {
        None
    }
}

impl Env for Vars {
    fn var(&self, name: &str) -> Option<BigRational> {
        self.get(name).cloned()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Num(BigInt),
    Var(String),
    Not(Box<Expr>),
    Neg(Box<Expr>),
    Bin(Op, Box<Expr>, Box<Expr>),
    Call(String, Vec<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Pow,
}

const BUILTINS: [&str; 6] = ["floor", "ceil", "min", "max", "log2floor", "binom"];

impl Expr {
    pub fn parse(src: &str) -> Result<Expr, ExprError> {
        let mut p = Parser { src, toks: lex(src)?, pos: 0 };
        let e = p.or()?;
        if p.pos != p.toks.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(e)
    }

    /// Variables referenced anywhere in the expression.
    pub fn variables(&self, out: &mut Vec<String>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(v) => out.push(v.clone()),
            Expr::Not(e) | Expr::Neg(e) => e.variables(out),
            Expr::Bin(_, a, b) => {
                a.variables(out);
                b.variables(out);
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.variables(out)),
        }
    }

    /// Function names referenced anywhere in the expression.
    pub fn functions(&self, out: &mut Vec<String>) {
        match self {
            Expr::Num(_) | Expr::Var(_) => {}
            Expr::Not(e) | Expr::Neg(e) => e.functions(out),
            Expr::Bin(_, a, b) => {
                a.functions(out);
                b.functions(out);
            }
            Expr::Call(f, args) => {
                out.push(f.clone());
                args.iter().for_each(|a| a.functions(out));
            }
        }
    }

    pub fn eval(&self, env: &dyn Env) -> Result<BigRational, ExprError> {
        let truth = |b: bool| if b { BigRational::one() } else { BigRational::zero() };
        Ok(match self {
            Expr::Num(n) => BigRational::from_integer(n.clone()),
            Expr::Var(v) => env.var(v).ok_or_else(|| ExprError::UnknownVariable(v.clone()))?,
            Expr::Not(e) => truth(e.eval(env)?.is_zero()),
            Expr::Neg(e) => -e.eval(env)?,
            Expr::Bin(op, a, b) => {
                let x = a.eval(env)?;
                // short-circuit so guards can protect partial expressions
                match op {
                    Op::And if x.is_zero() => return Ok(truth(false)),
                    Op::Or if !x.is_zero() => return Ok(truth(true)),
                    _ => {}
                }
                let y = b.eval(env)?;
                match op {
                    Op::Or | Op::And => truth(!y.is_zero()),
                    Op::Eq => truth(x == y),
                    Op::Ne => truth(x != y),
                    Op::Lt => truth(x < y),
                    Op::Le => truth(x <= y),
                    Op::Gt => truth(x > y),
                    Op::Ge => truth(x >= y),
                    Op::Add => x + y,
                    Op::Sub => x - y,
                    Op::Mul => x * y,
                    Op::Div => {
                        if y.is_zero() {
                            return Err(ExprError::Domain("division by zero".into()));
                        }
                        x / y
                    }
                    Op::Rem => {
                        if !x.is_integer() || !y.is_integer() || y.is_zero() {
                            return Err(ExprError::Domain("% needs integers and a nonzero modulus".into()));
                        }
                        BigRational::from_integer(x.to_integer().mod_floor(&y.to_integer()))
                    }
                    Op::Pow => pow(&x, &y)?,
                }
            }
            Expr::Call(f, args) => {
                let vals = args.iter().map(|a| a.eval(env)).collect::<Result<Vec<_>, _>>()?;
                if let Some(r) = env.call(f, &vals) {
                    return r;
                }
                builtin(f, &vals)?
            }
        })
    }

    /// Evaluates to an integer; non-integers are an error.
    pub fn eval_int(&self, env: &dyn Env) -> Result<BigInt, ExprError> {
        let v = self.eval(env)?;
        if v.is_integer() {
            Ok(v.to_integer())
        } else {
            Err(ExprError::Domain(format!("{self} evaluates to the non-integer {v}")))
        }
    }

    pub fn eval_bool(&self, env: &dyn Env) -> Result<bool, ExprError> {
        Ok(!self.eval(env)?.is_zero())
    }
}

pub(crate) fn is_builtin(name: &str) -> bool {
    BUILTINS.contains(&name)
}

fn pow(x: &BigRational, y: &BigRational) -> Result<BigRational, ExprError> {
    if !y.is_integer() || y.is_negative() {
        return Err(ExprError::Domain("exponent must be a nonnegative integer".into()));
    }
    let e = y
        .to_integer()
        .to_u32()
        .filter(|&e| e <= 1 << 16)
        .ok_or_else(|| ExprError::Domain("exponent too large".into()))?;
    Ok(num_traits::pow(x.clone(), e as usize))
}

fn builtin(f: &str, v: &[BigRational]) -> Result<BigRational, ExprError> {
    let arity = |k: usize| {
        if v.len() == k {
            Ok(())
        } else {
            Err(ExprError::Domain(format!("{f} takes {k} arguments, got {}", v.len())))
        }
    };
    Ok(match f {
        "floor" => {
            arity(1)?;
            v[0].floor()
        }
        "ceil" => {
            arity(1)?;
            v[0].ceil()
        }
        "min" => {
            arity(2)?;
            v[0].clone().min(v[1].clone())
        }
        "max" => {
            arity(2)?;
            v[0].clone().max(v[1].clone())
        }
        "log2floor" => {
            arity(1)?;
            let x = v[0].floor().to_integer();
            if !x.is_positive() {
                return Err(ExprError::Domain("log2floor of a value below 1".into()));
            }
            BigRational::from_integer(BigInt::from(x.bits() - 1))
        }
        "binom" => {
            arity(2)?;
            let (n, k) = (v[0].to_integer(), v[1].to_integer());
            let (Some(n), Some(k)) = (n.to_u64(), k.to_u64()) else {
                return Err(ExprError::Domain("binom arguments must be small nonnegative integers".into()));
            };
            BigRational::from_integer(BigInt::from(crate::geometry::binomial(n, k)))
        }
        _ => return Err(ExprError::UnknownFunction(f.to_string())),
    })
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(n) => write!(f, "{n}"),
            Expr::Var(v) => f.write_str(v),
            Expr::Not(e) => write!(f, "!({e})"),
            Expr::Neg(e) => write!(f, "-({e})"),
            Expr::Bin(op, a, b) => {
                let s = match op {
                    Op::Or => "||",
                    Op::And => "&&",
                    Op::Eq => "==",
                    Op::Ne => "!=",
                    Op::Lt => "<",
                    Op::Le => "<=",
                    Op::Gt => ">",
                    Op::Ge => ">=",
                    Op::Add => "+",
                    Op::Sub => "-",
                    Op::Mul => "*",
                    Op::Div => "/",
                    Op::Rem => "%",
                    Op::Pow => "^",
                };
                write!(f, "({a} {s} {b})")
            }
            Expr::Call(name, args) => {
                write!(f, "{name}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Num(BigInt),
    Ident(String),
    Sym(&'static str),
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ExprError> {
    const SYMS: [&str; 19] =
        ["||", "&&", "==", "!=", "<=", ">=", "<", ">", "!", "+", "-", "*", "/", "%", "^", "(", ")", ",", "="];
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            out.push((start, Tok::Num(src[start..i].parse().expect("digits"))));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(src[start..i].to_string())));
        } else if let Some(s) = SYMS.iter().find(|s| src[i..].starts_with(**s)) {
            if *s == "=" {
                return Err(ExprError::Syntax { src: src.into(), at: i, msg: "use == for equality".into() });
            }
            out.push((i, Tok::Sym(s)));
            i += s.len();
        } else {
            return Err(ExprError::Syntax { src: src.into(), at: i, msg: format!("unexpected character `{c}`") });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> ExprError {
        let at = self.toks.get(self.pos).map(|t| t.0).unwrap_or(self.src.len());
        ExprError::Syntax { src: self.src.into(), at, msg: msg.into() }
    }

    fn peek_sym(&self) -> Option<&'static str> {
        match self.toks.get(self.pos) {
            Some((_, Tok::Sym(s))) => Some(s),
            _ => None,
        }
    }

    fn eat(&mut self, s: &str) -> bool {
        if self.peek_sym() == Some(s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn binary(
        &mut self,
        ops: &[(&str, Op)],
        next: fn(&mut Self) -> Result<Expr, ExprError>,
    ) -> Result<Expr, ExprError> {
        let mut lhs = next(self)?;
        'outer: loop {
            for (s, op) in ops {
                if self.eat(s) {
                    let rhs = next(self)?;
                    lhs = Expr::Bin(*op, Box::new(lhs), Box::new(rhs));
                    continue 'outer;
                }
            }
            return Ok(lhs);
        }
    }

    fn or(&mut self) -> Result<Expr, ExprError> {
        self.binary(&[("||", Op::Or)], Self::and)
    }

    fn and(&mut self) -> Result<Expr, ExprError> {
        self.binary(&[("&&", Op::And)], Self::not)
    }

    fn not(&mut self) -> Result<Expr, ExprError> {
        if self.eat("!") {
            return Ok(Expr::Not(Box::new(self.not()?)));
        }
        self.cmp()
    }

    fn cmp(&mut self) -> Result<Expr, ExprError> {
        let lhs = self.sum()?;
        let ops = [("==", Op::Eq), ("!=", Op::Ne), ("<=", Op::Le), (">=", Op::Ge), ("<", Op::Lt), (">", Op::Gt)];
        for (s, op) in ops {
            if self.eat(s) {
                let rhs = self.sum()?;
                return Ok(Expr::Bin(op, Box::new(lhs), Box::new(rhs)));
            }
        }
        Ok(lhs)
    }

    fn sum(&mut self) -> Result<Expr, ExprError> {
        self.binary(&[("+", Op::Add), ("-", Op::Sub)], Self::product)
    }

    fn product(&mut self) -> Result<Expr, ExprError> {
        self.binary(&[("*", Op::Mul), ("/", Op::Div), ("%", Op::Rem)], Self::unary)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat("-") {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat("!") {
            return Ok(Expr::Not(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.eat("^") {
            let exp = self.unary()?;
            return Ok(Expr::Bin(Op::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let Some((_, tok)) = self.toks.get(self.pos).cloned() else {
            return Err(self.err("unexpected end of expression"));
        };
        self.pos += 1;
        match tok {
            Tok::Num(n) => Ok(Expr::Num(n)),
            Tok::Ident(name) => {
                if !self.eat("(") {
                    return Ok(Expr::Var(name));
                }
                let mut args = Vec::new();
                if !self.eat(")") {
                    loop {
                        args.push(self.or()?);
                        if self.eat(")") {
                            break;
                        }
                        if !self.eat(",") {
                            return Err(self.err("expected `,` or `)`"));
                        }
                    }
                }
                Ok(Expr::Call(name, args))
            }
            Tok::Sym("(") => {
                let e = self.or()?;
                if !self.eat(")") {
                    return Err(self.err("expected `)`"));
                }
                Ok(e)
            }
            Tok::Sym(_) => {
                self.pos -= 1;
                Err(self.err("expected a number, variable or `(`"))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vars(pairs: &[(&str, i64)]) -> Vars {
        pairs.iter().map(|(k, v)| (k.to_string(), BigRational::from_integer(BigInt::from(*v)))).collect()
    }

    fn ev(src: &str, v: &Vars) -> BigRational {
        Expr::parse(src).unwrap().eval(v).unwrap()
    }

    #[test]
    fn precedence_and_associativity() {
        let v = vars(&[("n", 3), ("k", 2)]);
        assert_eq!(ev("1 + 2 * 3", &v), BigRational::from_integer(7.into()));
        assert_eq!(ev("2 ^ 3 ^ 2", &v), BigRational::from_integer(512.into()));
        assert_eq!(ev("-2 ^ 2", &v), BigRational::from_integer((-4).into()));
        assert_eq!(ev("10 - 3 - 2", &v), BigRational::from_integer(5.into()));
        assert_eq!(ev("(n + 1) / (k + 1)", &v), BigRational::new(4.into(), 3.into()));
        assert_eq!(ev("7 % 3", &v), BigRational::one());
        assert!(Expr::parse("n >= 2 && !(k == 3) || 0").unwrap().eval_bool(&v).unwrap());
    }

    #[test]
    fn builtins_are_exact() {
        let v = vars(&[("n", 250), ("k", 4)]);
        let e = "floor(((n + 1) / (k + 1)) ^ log2floor(k))";
        assert_eq!(ev(e, &v), BigRational::from_integer(2520.into()));
        assert_eq!(ev("binom(6, 2)", &v), BigRational::from_integer(15.into()));
        assert_eq!(ev("min(3, max(1, 2))", &v), BigRational::from_integer(2.into()));
        assert_eq!(ev("ceil(7 / 2)", &v), BigRational::from_integer(4.into()));
    }

    #[test]
    fn and_short_circuits() {
        // right side would divide by zero
        let v = vars(&[("r", 0)]);
        assert!(!Expr::parse("r > 0 && 1 / r > 0").unwrap().eval_bool(&v).unwrap());
    }

    #[test]
    fn reports_errors() {
        assert!(matches!(Expr::parse("n = 2"), Err(ExprError::Syntax { .. })));
        assert!(matches!(Expr::parse("(n"), Err(ExprError::Syntax { .. })));
        assert!(matches!(Expr::parse("n $ 2"), Err(ExprError::Syntax { .. })));
        let v = Vars::new();
        assert_eq!(Expr::parse("q + 1").unwrap().eval(&v), Err(ExprError::UnknownVariable("q".into())));
        assert!(matches!(Expr::parse("frob(1)").unwrap().eval(&v), Err(ExprError::UnknownFunction(_))));
        assert!(Expr::parse("1 / 0").unwrap().eval(&v).is_err());
    }

    #[test]
    fn display_round_trips() {
        let e = Expr::parse("floor(s / 2) - delta >= 2 * n || !special_at(h)").unwrap();
        assert_eq!(Expr::parse(&e.to_string()).unwrap(), e);
    }
}
