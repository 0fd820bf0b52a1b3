//! Arithmetic expressions over `x, y, z, t`: `+ - * / ^`, parentheses,
//! numbers, the constants `pi` and `e`, and the functions `pos` (positive
//! part), `exp`, `cos`, `sin`, `sqrt`, `abs`, `min`, `max`.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub struct ExprError {
    /// Byte offset in the source.
    pub pos: usize,
    pub msg: String,
}

impl fmt::Display for ExprError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (at offset {})", self.msg, self.pos)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Func {
    Pos,
    Exp,
    Cos,
    Sin,
    Sqrt,
    Abs,
    Min,
    Max,
}

impl Func {
    fn lookup(name: &str) -> Option<(Func, usize)> {
        Some(match name {
            "pos" => (Func::Pos, 1),
            "exp" => (Func::Exp, 1),
            "cos" => (Func::Cos, 1),
            "sin" => (Func::Sin, 1),
            "sqrt" => (Func::Sqrt, 1),
            "abs" => (Func::Abs, 1),
            "min" => (Func::Min, 2),
            "max" => (Func::Max, 2),
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Coord(usize),
    Time,
    Neg(Box<Node>),
    Bin(char, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

/// A parsed expression. Evaluation is pure and deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
    source: String,
    /// Highest coordinate index used, plus one.
    pub dims_used: usize,
    pub uses_time: bool,
}

impl Expr {
    pub fn parse(src: &str) -> Result<Self, ExprError> {
        let mut p = Parser {
            src: src.as_bytes(),
            pos: 0,
            dims_used: 0,
            uses_time: false,
        };
        let root = p.expr()?;
        p.skip_ws();
        if p.pos < p.src.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(Expr {
            root,
            source: src.to_string(),
            dims_used: p.dims_used,
            uses_time: p.uses_time,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Value at `(x, t)`; coordinates beyond `x.len()` read as 0.
    pub fn eval(&self, x: &[f64], t: f64) -> f64 {
        eval(&self.root, x, t)
    }
}

fn eval(n: &Node, x: &[f64], t: f64) -> f64 {
    match n {
        Node::Num(v) => *v,
        Node::Coord(i) => x.get(*i).copied().unwrap_or(0.0),
        Node::Time => t,
        Node::Neg(a) => -eval(a, x, t),
        Node::Bin(op, a, b) => {
            let (a, b) = (eval(a, x, t), eval(b, x, t));
            match op {
                '+' => a + b,
                '-' => a - b,
                '*' => a * b,
                '/' => a / b,
                _ => a.powf(b),
            }
        }
        Node::Call(f, args) => {
            let a = eval(&args[0], x, t);
            match f {
                Func::Pos => a.max(0.0),
                Func::Exp => a.exp(),
                Func::Cos => a.cos(),
                Func::Sin => a.sin(),
                Func::Sqrt => a.sqrt(),
                Func::Abs => a.abs(),
                Func::Min => a.min(eval(&args[1], x, t)),
                Func::Max => a.max(eval(&args[1], x, t)),
            }
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    dims_used: usize,
    uses_time: bool,
}

impl Parser<'_> {
    fn err(&self, msg: impl Into<String>) -> ExprError {
        ExprError {
            pos: self.pos,
            msg: msg.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<(), ExprError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected '{}'", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Node::Bin(c as char, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.unary()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Node::Bin(c as char, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node, ExprError> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(Node::Neg(Box::new(self.unary()?)))
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node, ExprError> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Node::Bin('^', Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ExprError> {
        match self.peek() {
            None => Err(self.err("unexpected end of expression")),
            Some(b'(') => {
                self.pos += 1;
                let n = self.expr()?;
                self.expect(b')')?;
                Ok(n)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.ident(),
            Some(c) => Err(self.err(format!("unexpected character '{}'", c as char))),
        }
    }

    fn number(&mut self) -> Result<Node, ExprError> {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'.') {
            self.pos += 1;
        }
        if self.pos < self.src.len() && matches!(self.src[self.pos], b'e' | b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.src.len() && matches!(self.src[self.pos], b'+' | b'-') {
                self.pos += 1;
            }
            let digits = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if self.pos == digits {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse::<f64>().map(Node::Num).map_err(|_| ExprError {
            pos: start,
            msg: format!("bad number '{text}'"),
        })
    }

    fn ident(&mut self) -> Result<Node, ExprError> {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let coord = |i: usize, p: &mut Self| {
            p.dims_used = p.dims_used.max(i + 1);
            Ok(Node::Coord(i))
        };
        match name {
            "x" | "x1" => return coord(0, self),
            "y" | "x2" => return coord(1, self),
            "z" | "x3" => return coord(2, self),
            "t" => {
                self.uses_time = true;
                return Ok(Node::Time);
            }
            "pi" => return Ok(Node::Num(std::f64::consts::PI)),
            "e" => return Ok(Node::Num(std::f64::consts::E)),
            _ => {}
        }
        let (f, arity) = Func::lookup(name).ok_or(ExprError {
            pos: start,
            msg: format!("unknown name '{name}'"),
        })?;
        self.expect(b'(')?;
        let mut args = vec![self.expr()?];
        while self.peek() == Some(b',') {
            self.pos += 1;
            args.push(self.expr()?);
        }
        self.expect(b')')?;
        if args.len() != arity {
            return Err(ExprError {
                pos: start,
                msg: format!("{name} takes {arity} argument(s), got {}", args.len()),
            });
        }
        Ok(Node::Call(f, args))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_and_functions() {
        let e = Expr::parse("pos(1 - x^2)^2 * (1 + 0.6*x)").unwrap();
        let x: f64 = 0.3;
        let want = (1.0 - x * x).powi(2) * (1.0 + 0.6 * x);
        assert!((e.eval(&[x], 0.0) - want).abs() < 1e-15);
        assert_eq!(e.dims_used, 1);
        assert!(!e.uses_time);
        assert_eq!(Expr::parse("-2^2").unwrap().eval(&[], 0.0), -4.0);
        assert_eq!(Expr::parse("2^3^2").unwrap().eval(&[], 0.0), 512.0);
        assert_eq!(Expr::parse("1e-2 + max(t, y)").unwrap().eval(&[0.0, 3.0], 1.0), 3.01);
    }

    #[test]
    fn errors_carry_offsets() {
        assert_eq!(Expr::parse("1 + foo(x)").unwrap_err().pos, 4);
        assert!(Expr::parse("(1 + x").is_err());
        assert!(Expr::parse("min(1)").is_err());
        assert!(Expr::parse("1 2").is_err());
    }
}
