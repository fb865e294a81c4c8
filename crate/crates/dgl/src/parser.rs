//! Parser for the Lie expression grammar:
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := [coef "*"] factor
//! factor := IDENT | "[" expr "," expr "]" | "(" expr ")"
//! coef   := ["-"] INT ["/" POSINT]
//! ```
//!
//! Whitespace is insignificant. `IDENT = [A-Za-z_][A-Za-z0-9_@]*`, optionally
//! followed by one balanced `{...}` group so that product-model generators
//! like `s{x@1,x@2}` are single tokens.

use num::bigint::BigInt;

use crate::error::{Error, Result};
use crate::lie::{GenSet, LieExpr};
use crate::rational::Q;

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    gs: &'a GenSet,
}

pub fn parse(text: &str, gs: &GenSet) -> Result<LieExpr> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        gs,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.err("unexpected trailing input"));
    }
    // homogeneity check happens here; unknown generators already rejected
    e.degree(gs)?;
    Ok(e)
}

impl<'a> Parser<'a> {
    fn err(&self, msg: &str) -> Error {
        Error::Syntax {
            offset: self.pos,
            msg: msg.to_string(),
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

    fn eat(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected `{}`", c as char)))
        }
    }

    fn expr(&mut self) -> Result<LieExpr> {
        let mut terms = vec![self.term(true)?];
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    terms.push(self.term(true)?);
                }
                Some(b'-') => {
                    self.pos += 1;
                    let t = self.term(false)?;
                    terms.push(LieExpr::Scale(Q::from_integer((-1).into()), Box::new(t)));
                }
                _ => break,
            }
        }
        if terms.len() == 1 {
            Ok(terms.pop().unwrap())
        } else {
            Ok(LieExpr::Sum(terms))
        }
    }

    /// `allow_neg` permits a leading sign on the coefficient (first term or
    /// after `+`); after a binary `-` the sign is already consumed.
    fn term(&mut self, allow_neg: bool) -> Result<LieExpr> {
        let c = self.peek().ok_or_else(|| self.err("expected a term"))?;
        if c.is_ascii_digit() || (allow_neg && c == b'-') {
            let k = self.coef()?;
            self.eat(b'*')?;
            let f = self.factor()?;
            Ok(LieExpr::Scale(k, Box::new(f)))
        } else {
            self.factor()
        }
    }

    fn coef(&mut self) -> Result<Q> {
        self.skip_ws();
        let neg = if self.src.get(self.pos) == Some(&b'-') {
            self.pos += 1;
            true
        } else {
            false
        };
        let num = self.integer()?;
        let den = if self.src.get(self.pos) == Some(&b'/') {
            self.pos += 1;
            let d = self.integer()?;
            if d <= BigInt::from(0) {
                return Err(self.err("denominator must be positive"));
            }
            d
        } else {
            BigInt::from(1)
        };
        let num = if neg { -num } else { num };
        Ok(Q::new(num, den))
    }

    fn integer(&mut self) -> Result<BigInt> {
        let start = self.pos;
        while self
            .src
            .get(self.pos)
            .map(|c| c.is_ascii_digit())
            .unwrap_or(false)
        {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected an integer"));
        }
        let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        Ok(s.parse().unwrap())
    }

    fn factor(&mut self) -> Result<LieExpr> {
        match self.peek() {
            Some(b'[') => {
                self.pos += 1;
                let a = self.expr()?;
                self.eat(b',')?;
                let b = self.expr()?;
                self.eat(b']')?;
                Ok(LieExpr::Bracket(Box::new(a), Box::new(b)))
            }
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.eat(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let id = self.ident()?;
                match self.gs.idx(&id) {
                    Some(i) => Ok(LieExpr::Gen(i)),
                    None => Err(Error::UnknownGenerator(id)),
                }
            }
            _ => Err(self.err("expected an identifier, `[` or `(`")),
        }
    }

    fn ident(&mut self) -> Result<String> {
        self.skip_ws();
        let start = self.pos;
        while self
            .src
            .get(self.pos)
            .map(|&c| c.is_ascii_alphanumeric() || c == b'_' || c == b'@')
            .unwrap_or(false)
        {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected an identifier"));
        }
        // one balanced brace group for product-model generator names
        if self.src.get(self.pos) == Some(&b'{') {
            let mut depth = 0usize;
            loop {
                match self.src.get(self.pos) {
                    Some(b'{') => depth += 1,
                    Some(b'}') => {
                        depth -= 1;
                        if depth == 0 {
                            self.pos += 1;
                            break;
                        }
                    }
                    Some(_) => {}
                    None => return Err(self.err("unclosed `{` in identifier")),
                }
                self.pos += 1;
            }
        }
        Ok(std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .to_string())
    }
}

/// True when `id` conforms to the identifier syntax accepted by [`parse`].
pub fn valid_ident(id: &str) -> bool {
    let bytes = id.as_bytes();
    if bytes.is_empty() || !(bytes[0].is_ascii_alphabetic() || bytes[0] == b'_') {
        return false;
    }
    let mut i = 0;
    while i < bytes.len()
        && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'@')
    {
        i += 1;
    }
    if i == bytes.len() {
        return true;
    }
    if bytes[i] != b'{' || bytes[bytes.len() - 1] != b'}' {
        return false;
    }
    let mut depth = 0i64;
    for &c in &bytes[i..] {
        match c {
            b'{' => depth += 1,
            b'}' => depth -= 1,
            _ => {}
        }
        if depth < 0 {
            return false;
        }
    }
    depth == 0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::{GenInfo, LieExpr};
    use crate::rational::{q, q_ratio};

    fn gs() -> GenSet {
        GenSet::from_gens(vec![GenInfo::new("x", 1), GenInfo::new("y", 3)]).unwrap()
    }

    #[test]
    fn simple_bracket() {
        let e = parse("[x,x]", &gs()).unwrap();
        assert_eq!(
            e,
            LieExpr::Bracket(Box::new(LieExpr::Gen(0)), Box::new(LieExpr::Gen(0)))
        );
    }

    #[test]
    fn coefficients_and_sums() {
        let e = parse("2*[x,[x,y]] - 1/2*[y,[x,x]]", &gs()).unwrap();
        match e {
            LieExpr::Sum(ts) => {
                assert_eq!(ts.len(), 2);
                match &ts[0] {
                    LieExpr::Scale(k, _) => assert_eq!(k, &q(2)),
                    _ => panic!("expected scale"),
                }
                match &ts[1] {
                    LieExpr::Scale(k, inner) => {
                        assert_eq!(k, &q(-1));
                        match inner.as_ref() {
                            LieExpr::Scale(k2, _) => assert_eq!(k2, &q_ratio(1, 2)),
                            _ => panic!("expected inner scale"),
                        }
                    }
                    _ => panic!("expected scale"),
                }
            }
            _ => panic!("expected sum"),
        }
    }

    #[test]
    fn syntax_error_with_offset() {
        match parse("[x,", &gs()) {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 3),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_generator() {
        assert!(matches!(
            parse("[x,z]", &gs()),
            Err(Error::UnknownGenerator(_))
        ));
    }

    #[test]
    fn mixed_degree_sum_rejected() {
        assert!(matches!(parse("x + y", &gs()), Err(Error::MixedDegree(_, _))));
    }

    #[test]
    fn braced_identifiers() {
        let gs = GenSet::from_gens(vec![
            GenInfo::new("x@1", 1),
            GenInfo::new("s{x@1,x@2}", 3),
        ])
        .unwrap();
        let e = parse("[x@1, s{x@1,x@2}] + 2*s{x@1,x@2}", &gs);
        assert!(e.is_err()); // mixed degree 4 vs 3
        let e = parse("2*s{x@1,x@2}", &gs).unwrap();
        assert_eq!(e, LieExpr::Scale(q(2), Box::new(LieExpr::Gen(1))));
        assert!(valid_ident("s{x@1,x@2}"));
        assert!(!valid_ident("s{x@1"));
        assert!(!valid_ident("1x"));
    }

    #[test]
    fn negative_leading_coefficient() {
        let e = parse("-1*x", &gs()).unwrap();
        assert_eq!(e, LieExpr::Scale(q(-1), Box::new(LieExpr::Gen(0))));
    }
}
