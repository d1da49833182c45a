use super::{BinOp, ExprError, Func, Node, PerturbationExpr, Var};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ExprError> {
    let bytes = src.as_bytes();
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
            let text = &src[start..i];
            let x = text.parse::<f64>().map_err(|_| ExprError::Syntax {
                pos: start,
                msg: format!("malformed number `{text}`"),
            })?;
            out.push((start, Tok::Num(x)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(src[start..i].to_string())));
        } else {
            let tok = match c {
                '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                _ => {
                    return Err(ExprError::Syntax {
                        pos: i,
                        msg: format!("unexpected character `{c}`"),
                    })
                }
            };
            out.push((i, tok));
            i += c.len_utf8();
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |(p, _)| *p)
    }

    fn eat_op(&mut self, ops: &[char]) -> Option<char> {
        match self.peek() {
            Some(Tok::Op(c)) if ops.contains(c) => {
                let c = *c;
                self.at += 1;
                Some(c)
            }
            _ => None,
        }
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ExprError> {
        if self.peek() == Some(&want) {
            self.at += 1;
            Ok(())
        } else {
            Err(ExprError::Syntax {
                pos: self.pos(),
                msg: format!("expected {what}"),
            })
        }
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.term()?;
        while let Some(op) = self.eat_op(&['+', '-']) {
            let rhs = self.term()?;
            let op = if op == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Node::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.eat_op(&['*', '/']) {
            let rhs = self.unary()?;
            let op = if op == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Node::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node, ExprError> {
        if self.eat_op(&['-']).is_some() {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ExprError> {
        let base = self.primary()?;
        if self.eat_op(&['^']).is_some() {
            let exp = self.unary()?;
            return Ok(Node::binary(BinOp::Pow, base, exp));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node, ExprError> {
        let pos = self.pos();
        let Some((_, tok)) = self.toks.get(self.at).cloned() else {
            return Err(ExprError::Syntax {
                pos,
                msg: "unexpected end of input".into(),
            });
        };
        self.at += 1;
        match tok {
            Tok::Num(x) => Ok(Node::Num(x)),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                let var = match name.as_str() {
                    "t" => Some(Var::T),
                    "r" => Some(Var::R),
                    "u" => Some(Var::U),
                    "v" => Some(Var::V),
                    "w" => Some(Var::W),
                    _ => None,
                };
                if let Some(v) = var {
                    return Ok(Node::Var(v));
                }
                if name == "i" {
                    return Ok(Node::ImagUnit);
                }
                let Some(func) = Func::ALL.into_iter().find(|f| f.name() == name) else {
                    return Err(ExprError::UnknownIdent { pos, name });
                };
                self.expect(Tok::LParen, "`(` after function name")?;
                let arg = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(Node::Call(func, Box::new(arg)))
            }
            Tok::Op(c) => Err(ExprError::Syntax {
                pos,
                msg: format!("unexpected operator `{c}`"),
            }),
            Tok::RParen => Err(ExprError::Syntax {
                pos,
                msg: "unexpected `)`".into(),
            }),
        }
    }
}

/// Parses an expression in the perturbation grammar.
pub fn parse(source: &str) -> Result<PerturbationExpr, ExprError> {
    let toks = lex(source)?;
    let mut p = Parser {
        toks,
        at: 0,
        end: source.len(),
    };
    let root = p.expr()?;
    if p.at != p.toks.len() {
        return Err(ExprError::Syntax {
            pos: p.pos(),
            msg: "trailing input".into(),
        });
    }
    Ok(PerturbationExpr::new(root))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_variable() {
        assert_eq!(parse("u").unwrap().root(), &Node::Var(Var::U));
    }

    #[test]
    fn random_example_shape() {
        let e = parse("t^5*exp(i*t + r^2)*u*v + u^6").unwrap();
        let Node::Binary(BinOp::Add, lhs, rhs) = e.root() else {
            panic!("expected a sum, got {e}");
        };
        assert!(matches!(**lhs, Node::Binary(BinOp::Mul, ..)));
        assert!(matches!(**rhs, Node::Binary(BinOp::Pow, ..)));
    }

    #[test]
    fn unbalanced_paren_reports_position() {
        assert_eq!(
            parse("u*(").unwrap_err(),
            ExprError::Syntax {
                pos: 3,
                msg: "unexpected end of input".into()
            }
        );
        assert!(matches!(parse("(u"), Err(ExprError::Syntax { pos: 2, .. })));
        assert!(matches!(parse("u)"), Err(ExprError::Syntax { pos: 1, .. })));
    }

    #[test]
    fn unknown_identifier() {
        assert_eq!(
            parse("x + 1").unwrap_err(),
            ExprError::UnknownIdent {
                pos: 0,
                name: "x".into()
            }
        );
        assert!(matches!(parse("log(u)"), Err(ExprError::UnknownIdent { .. })));
    }

    #[test]
    fn scientific_literals() {
        let e = parse("1.5e-3*u").unwrap();
        assert_eq!(e.to_string(), "0.0015*u");
        assert!(parse("2*e").is_err());
    }
}
