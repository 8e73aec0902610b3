//! Recursive descent parser for the expression grammar.
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor ('*' factor)*
//! factor := number | coord | coord '^' int | ('cos'|'sin') '(' linarg ')' | '(' expr ')'
//! linarg := (int '*')? coord (('+'|'-') (int '*')? coord)* (('+'|'-') number)?
//! ```
//! A leading unary minus is accepted on any term.

use super::Expr;
use crate::chart::Chart;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64, bool),
    Ident(String),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
}

fn lex(s: &str) -> Result<Vec<(usize, Tok)>> {
    let b = s.as_bytes();
    let mut i = 0;
    let mut out = Vec::new();
    while i < b.len() {
        let c = b[i] as char;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '^' => Tok::Caret,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            _ if c.is_ascii_digit() || c == '.' => {
                while i < b.len() && ((b[i] as char).is_ascii_digit() || b[i] == b'.') {
                    i += 1;
                }
                if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
                    let mut j = i + 1;
                    if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
                        j += 1;
                    }
                    if j < b.len() && (b[j] as char).is_ascii_digit() {
                        i = j;
                        while i < b.len() && (b[i] as char).is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let txt = &s[start..i];
                let v: f64 = txt
                    .parse()
                    .map_err(|_| Error::Parse { pos: start, msg: format!("bad number `{txt}`") })?;
                let is_int = !txt.contains(['.', 'e', 'E']);
                out.push((start, Tok::Num(v, is_int)));
                continue;
            }
            _ if c.is_alphabetic() || c == '_' => {
                while i < b.len() && ((b[i] as char).is_alphanumeric() || b[i] == b'_') {
                    i += 1;
                }
                out.push((start, Tok::Ident(s[start..i].to_string())));
                continue;
            }
            _ => return Err(Error::Parse { pos: i, msg: format!("unexpected character `{c}`") }),
        };
        out.push((start, tok));
        i += 1;
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    chart: &'a Chart,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.1)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map(|t| t.0).unwrap_or(self.end)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse { pos: self.here(), msg: msg.into() })
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.1.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<()> {
        if self.peek() == Some(&t) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn coord(&self, name: &str) -> Result<usize> {
        self.chart.index_of(name).ok_or_else(|| Error::UnknownCoordinate(name.to_string()))
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut acc = self.signed_term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?);
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    acc = acc.sub(&self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn signed_term(&mut self) -> Result<Expr> {
        if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            return Ok(self.term()?.neg());
        }
        self.term()
    }

    fn term(&mut self) -> Result<Expr> {
        let mut acc = self.factor()?;
        while self.peek() == Some(&Tok::Star) {
            self.pos += 1;
            acc = acc.mul(&self.factor()?);
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Expr> {
        match self.bump() {
            Some(Tok::Num(v, _)) => Ok(Expr::constant(v)),
            Some(Tok::Minus) => Ok(self.factor()?.neg()),
            Some(Tok::LParen) => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Some(Tok::Ident(name)) if (name == "cos" || name == "sin") && self.peek() == Some(&Tok::LParen) => {
                self.pos += 1;
                let (freq, phase) = self.linarg()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(if name == "cos" { Expr::cos(&freq, phase) } else { Expr::sin(&freq, phase) })
            }
            Some(Tok::Ident(name)) => {
                let i = self.coord(&name)?;
                if self.peek() == Some(&Tok::Caret) {
                    self.pos += 1;
                    let neg = if self.peek() == Some(&Tok::Minus) {
                        self.pos += 1;
                        true
                    } else {
                        false
                    };
                    match self.bump() {
                        Some(Tok::Num(v, true)) => {
                            let p = if neg { -(v as i32) } else { v as i32 };
                            Ok(Expr::monomial(1.0, &[(i, p)]))
                        }
                        _ => {
                            self.pos -= 1;
                            self.err("expected integer exponent")
                        }
                    }
                } else {
                    Ok(Expr::var(i))
                }
            }
            Some(_) => {
                self.pos -= 1;
                self.err("expected a factor")
            }
            None => self.err("unexpected end of input"),
        }
    }

    fn linarg(&mut self) -> Result<(Vec<(usize, i64)>, f64)> {
        let mut freq: Vec<(usize, i64)> = Vec::new();
        let mut phase = 0.0;
        let mut sign = 1.0;
        let mut first = true;
        loop {
            if !first || self.peek() == Some(&Tok::Minus) {
                match self.peek() {
                    Some(Tok::Plus) => sign = 1.0,
                    Some(Tok::Minus) => sign = -1.0,
                    _ => break,
                }
                self.pos += 1;
            }
            first = false;
            match self.bump() {
                Some(Tok::Num(v, is_int)) => {
                    if self.peek() == Some(&Tok::Star) {
                        self.pos += 1;
                        let at = self.here();
                        let name = match self.bump() {
                            Some(Tok::Ident(n)) => n,
                            _ => return Err(Error::Parse { pos: at, msg: "expected coordinate".into() }),
                        };
                        let i = self.coord(&name)?;
                        if !is_int || v.fract() != 0.0 {
                            return Err(Error::NonIntegerFrequency { coord: name, freq: sign * v });
                        }
                        self.trig_allowed(i, &name, at)?;
                        push_freq(&mut freq, i, (sign * v) as i64);
                    } else {
                        // the constant must close the argument
                        phase += sign * v;
                        if matches!(self.peek(), Some(Tok::Plus) | Some(Tok::Minus)) {
                            return self.err("constant must come last in a trigonometric argument");
                        }
                        break;
                    }
                }
                Some(Tok::Ident(name)) => {
                    let at = self.toks[self.pos - 1].0;
                    let i = self.coord(&name)?;
                    self.trig_allowed(i, &name, at)?;
                    push_freq(&mut freq, i, sign as i64);
                }
                _ => {
                    self.pos -= 1;
                    return self.err("expected coordinate or number in trigonometric argument");
                }
            }
        }
        if freq.is_empty() {
            return self.err("trigonometric argument needs a coordinate");
        }
        Ok((freq, phase))
    }

    fn trig_allowed(&self, i: usize, name: &str, at: usize) -> Result<()> {
        if self.chart.coords[i].allows_trig() {
            Ok(())
        } else {
            Err(Error::Parse { pos: at, msg: format!("coordinate `{name}` cannot appear in a trigonometric argument") })
        }
    }
}

fn push_freq(freq: &mut Vec<(usize, i64)>, i: usize, f: i64) {
    match freq.iter_mut().find(|q| q.0 == i) {
        Some(q) => q.1 += f,
        None => freq.push((i, f)),
    }
}

/// Parses `text` over the coordinates of `chart`.
pub fn parse_expr(text: &str, chart: &Chart) -> Result<Expr> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, end: text.len(), chart };
    if p.toks.is_empty() {
        return p.err("empty expression");
    }
    let e = p.expr()?;
    if p.pos < p.toks.len() {
        return p.err("trailing input");
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::Chart;
    use crate::expr::Mode;

    fn chart() -> Chart {
        Chart::builder("binding")
            .angular("x")
            .angular("y")
            .radial("r", 0.0, 1.0)
            .angular("phi")
            .build()
            .unwrap()
    }

    #[test]
    fn power_literal() {
        let e = parse_expr("r^2", &chart()).unwrap();
        assert_eq!(e.terms().len(), 1);
        assert_eq!(e.terms()[0].powers, vec![(2, 2)]);
        assert_eq!(e.terms()[0].mode, Mode::Const);
    }

    #[test]
    fn trig_literal() {
        let e = parse_expr("cos(2*phi+3*y)", &chart()).unwrap();
        assert_eq!(e.terms().len(), 1);
        assert_eq!(e.terms()[0].mode, Mode::Cos);
        assert_eq!(e.terms()[0].freq, vec![(1, 3), (3, 2)]);
    }

    #[test]
    fn non_integer_frequency() {
        let r = parse_expr("cos(0.5*phi)", &chart());
        assert!(matches!(r, Err(Error::NonIntegerFrequency { .. })));
    }

    #[test]
    fn unknown_coordinate_and_syntax() {
        assert!(matches!(parse_expr("z + 1", &chart()), Err(Error::UnknownCoordinate(_))));
        assert!(matches!(parse_expr("r +* 1", &chart()), Err(Error::Parse { pos: 3, .. })));
        assert!(matches!(parse_expr("cos(r)", &chart()), Err(Error::Parse { .. })));
    }

    #[test]
    fn negative_powers_and_phases() {
        let c = chart();
        let e = parse_expr("-r^-2*r^2 + sin(phi - y - 0.25)", &c).unwrap();
        let p = [0.1, 0.7, 0.4, 2.0];
        assert!((e.eval(&p) - (-1.0 + (2.0f64 - 0.7 - 0.25).sin())).abs() < 1e-12);
    }
}
