//! Quantifier-free formulas over the base signature.
//!
//! Grammar (ASCII, precedence `!` > `&` > `|`, binary operators associate
//! to the left):
//!
//! ```text
//! formula := conj ('|' conj)*
//! conj    := unary ('&' unary)*
//! unary   := '!' unary | atom | '(' formula ')' | 'true' | 'false'
//! atom    := name '(' var (',' var)* ')' | var '<' var | var '=' var
//! var     := 'x' digits            (x1 .. xk)
//! ```
//!
//! `<` is sugar for the order symbol of the signature.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::age::{BaseStructure, Signature};
use crate::types::{type_table, TypeRep};

/// Variables are 0-based internally; `x1` is variable 0.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Ast {
    Atom { symbol: usize, args: Vec<usize> },
    Eq(usize, usize),
    Not(Box<Ast>),
    And(Box<Ast>, Box<Ast>),
    Or(Box<Ast>, Box<Ast>),
    True,
    False,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum FormulaError {
    #[error("parse error at {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("unknown symbol `{name}` at {pos}")]
    UnknownSymbol { name: String, pos: usize },
    #[error("`{name}` at {pos} takes {expected} arguments, got {found}")]
    ArityMismatch {
        name: String,
        expected: usize,
        found: usize,
        pos: usize,
    },
    #[error("variable x{var} at {pos} exceeds arity {arity}")]
    VariableOutOfRange { var: usize, arity: usize, pos: usize },
}

impl FormulaError {
    pub fn position(&self) -> usize {
        match self {
            FormulaError::Parse { pos, .. }
            | FormulaError::UnknownSymbol { pos, .. }
            | FormulaError::ArityMismatch { pos, .. }
            | FormulaError::VariableOutOfRange { pos, .. } => *pos,
        }
    }
}

impl Ast {
    pub fn not(a: Ast) -> Ast {
        Ast::Not(Box::new(a))
    }

    pub fn and(a: Ast, b: Ast) -> Ast {
        Ast::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Ast, b: Ast) -> Ast {
        Ast::Or(Box::new(a), Box::new(b))
    }

    /// Largest variable index mentioned plus one.
    pub fn var_bound(&self) -> usize {
        match self {
            Ast::Atom { args, .. } => args.iter().map(|v| v + 1).max().unwrap_or(0),
            Ast::Eq(a, b) => a.max(b) + 1,
            Ast::Not(a) => a.var_bound(),
            Ast::And(a, b) | Ast::Or(a, b) => a.var_bound().max(b.var_bound()),
            Ast::True | Ast::False => 0,
        }
    }

    /// Substitutes variable `v` by `map[v]`.
    pub fn rename(&self, map: &[usize]) -> Ast {
        match self {
            Ast::Atom { symbol, args } => Ast::Atom {
                symbol: *symbol,
                args: args.iter().map(|&v| map[v]).collect(),
            },
            Ast::Eq(a, b) => Ast::Eq(map[*a], map[*b]),
            Ast::Not(a) => Ast::not(a.rename(map)),
            Ast::And(a, b) => Ast::and(a.rename(map), b.rename(map)),
            Ast::Or(a, b) => Ast::or(a.rename(map), b.rename(map)),
            Ast::True => Ast::True,
            Ast::False => Ast::False,
        }
    }

    pub fn display<'a>(&'a self, sig: &'a Signature) -> AstDisplay<'a> {
        AstDisplay { ast: self, sig }
    }
}

pub struct AstDisplay<'a> {
    ast: &'a Ast,
    sig: &'a Signature,
}

impl fmt::Display for AstDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(a: &Ast, sig: &Signature, prec: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match a {
                Ast::Atom { symbol, args } => {
                    if *symbol == sig.order() {
                        write!(f, "x{} < x{}", args[0] + 1, args[1] + 1)
                    } else {
                        let vs: Vec<String> = args.iter().map(|v| format!("x{}", v + 1)).collect();
                        write!(f, "{}({})", sig.name(*symbol), vs.join(","))
                    }
                }
                Ast::Eq(a, b) => write!(f, "x{} = x{}", a + 1, b + 1),
                Ast::Not(a) => {
                    write!(f, "!")?;
                    go(a, sig, 3, f)
                }
                Ast::And(a, b) => {
                    if prec > 2 {
                        write!(f, "(")?;
                    }
                    go(a, sig, 2, f)?;
                    write!(f, " & ")?;
                    go(b, sig, 3, f)?;
                    if prec > 2 {
                        write!(f, ")")?;
                    }
                    Ok(())
                }
                Ast::Or(a, b) => {
                    if prec > 1 {
                        write!(f, "(")?;
                    }
                    go(a, sig, 1, f)?;
                    write!(f, " | ")?;
                    go(b, sig, 2, f)?;
                    if prec > 1 {
                        write!(f, ")")?;
                    }
                    Ok(())
                }
                Ast::True => write!(f, "true"),
                Ast::False => write!(f, "false"),
            }
        }
        go(self.ast, self.sig, 0, f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Var(usize),
    LParen,
    RParen,
    Comma,
    Lt,
    Eq,
    Not,
    And,
    Or,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, FormulaError> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        match c {
            c if c.is_whitespace() => {
                i += 1;
            }
            '(' | ')' | ',' | '<' | '=' | '!' | '&' | '|' => {
                let tok = match c {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    ',' => Tok::Comma,
                    '<' => Tok::Lt,
                    '=' => Tok::Eq,
                    '!' => Tok::Not,
                    '&' => Tok::And,
                    _ => Tok::Or,
                };
                out.push((tok, pos));
                i += 1;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].1.is_ascii_alphanumeric() || chars[i].1 == '_') {
                    i += 1;
                }
                let word: String = chars[start..i].iter().map(|&(_, c)| c).collect();
                if matches!(word.as_str(), "exists" | "forall") {
                    return Err(FormulaError::Parse {
                        pos,
                        msg: format!("quantifier `{word}` is not allowed"),
                    });
                }
                let tok = match word.strip_prefix('x') {
                    Some(d) if !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()) => {
                        let v: usize = d.parse().map_err(|_| FormulaError::Parse {
                            pos,
                            msg: format!("bad variable `{word}`"),
                        })?;
                        if v == 0 {
                            return Err(FormulaError::Parse {
                                pos,
                                msg: "variables are numbered from x1".into(),
                            });
                        }
                        Tok::Var(v)
                    }
                    _ => Tok::Ident(word),
                };
                out.push((tok, pos));
            }
            '∃' | '∀' => {
                return Err(FormulaError::Parse {
                    pos,
                    msg: format!("quantifier `{c}` is not allowed"),
                })
            }
            _ => {
                return Err(FormulaError::Parse {
                    pos,
                    msg: format!("unexpected character `{c}`"),
                })
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    at: usize,
    end: usize,
    sig: &'a Signature,
    arity: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(t, _)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |&(_, p)| p)
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), FormulaError> {
        if self.peek() == Some(&tok) {
            self.at += 1;
            Ok(())
        } else {
            Err(FormulaError::Parse {
                pos: self.pos(),
                msg: format!("expected {what}"),
            })
        }
    }

    fn var(&mut self) -> Result<usize, FormulaError> {
        let pos = self.pos();
        match self.peek() {
            Some(&Tok::Var(v)) => {
                self.at += 1;
                if v > self.arity {
                    return Err(FormulaError::VariableOutOfRange {
                        var: v,
                        arity: self.arity,
                        pos,
                    });
                }
                Ok(v - 1)
            }
            _ => Err(FormulaError::Parse {
                pos,
                msg: "expected a variable".into(),
            }),
        }
    }

    fn disjunction(&mut self) -> Result<Ast, FormulaError> {
        let mut lhs = self.conjunction()?;
        while self.peek() == Some(&Tok::Or) {
            self.at += 1;
            lhs = Ast::or(lhs, self.conjunction()?);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Ast, FormulaError> {
        let mut lhs = self.unary()?;
        while self.peek() == Some(&Tok::And) {
            self.at += 1;
            lhs = Ast::and(lhs, self.unary()?);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Ast, FormulaError> {
        let pos = self.pos();
        match self.peek().cloned() {
            Some(Tok::Not) => {
                self.at += 1;
                Ok(Ast::not(self.unary()?))
            }
            Some(Tok::LParen) => {
                self.at += 1;
                let inner = self.disjunction()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Some(Tok::Var(_)) => {
                let a = self.var()?;
                match self.peek() {
                    Some(Tok::Lt) => {
                        self.at += 1;
                        let b = self.var()?;
                        Ok(Ast::Atom {
                            symbol: self.sig.order(),
                            args: vec![a, b],
                        })
                    }
                    Some(Tok::Eq) => {
                        self.at += 1;
                        let b = self.var()?;
                        Ok(Ast::Eq(a, b))
                    }
                    _ => Err(FormulaError::Parse {
                        pos: self.pos(),
                        msg: "expected `<` or `=`".into(),
                    }),
                }
            }
            Some(Tok::Ident(name)) => {
                self.at += 1;
                match name.as_str() {
                    "true" => return Ok(Ast::True),
                    "false" => return Ok(Ast::False),
                    _ => {}
                }
                let symbol = self
                    .sig
                    .index_of(&name)
                    .ok_or(FormulaError::UnknownSymbol { name: name.clone(), pos })?;
                self.expect(Tok::LParen, "`(`")?;
                let mut args = vec![self.var()?];
                while self.peek() == Some(&Tok::Comma) {
                    self.at += 1;
                    args.push(self.var()?);
                }
                self.expect(Tok::RParen, "`)`")?;
                let expected = self.sig.arity(symbol);
                if args.len() != expected {
                    return Err(FormulaError::ArityMismatch {
                        name,
                        expected,
                        found: args.len(),
                        pos,
                    });
                }
                Ok(Ast::Atom { symbol, args })
            }
            _ => Err(FormulaError::Parse {
                pos,
                msg: "expected a formula".into(),
            }),
        }
    }
}

/// Parses `text` as a quantifier-free formula in variables `x1..x{arity}`.
pub fn parse(text: &str, sig: &Signature, arity: usize) -> Result<Ast, FormulaError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        at: 0,
        end: text.len(),
        sig,
        arity,
    };
    let ast = p.disjunction()?;
    if p.at != p.toks.len() {
        return Err(FormulaError::Parse {
            pos: p.pos(),
            msg: "trailing input".into(),
        });
    }
    Ok(ast)
}

/// Truth of `ast` on any tuple of type `t`.
pub fn eval(ast: &Ast, t: &TypeRep) -> bool {
    match ast {
        Ast::Atom { symbol, args } => t.holds(*symbol, args),
        Ast::Eq(a, b) => t.equal(*a, *b),
        Ast::Not(a) => !eval(a, t),
        Ast::And(a, b) => eval(a, t) && eval(b, t),
        Ast::Or(a, b) => eval(a, t) || eval(b, t),
        Ast::True => true,
        Ast::False => false,
    }
}

/// The `k`-types satisfying `ast`.
pub fn types_of(ast: &Ast, k: usize, base: &BaseStructure) -> BTreeSet<TypeRep> {
    type_table(base, k)
        .types()
        .iter()
        .filter(|t| eval(ast, t))
        .cloned()
        .collect()
}

/// A named relation defined by a quantifier-free formula, with its set of
/// satisfying types.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationDef {
    name: String,
    arity: usize,
    ast: Ast,
    type_set: BTreeSet<TypeRep>,
}

impl RelationDef {
    pub fn new(name: impl Into<String>, arity: usize, ast: Ast, base: &BaseStructure) -> Self {
        let type_set = types_of(&ast, arity, base);
        RelationDef {
            name: name.into(),
            arity,
            ast,
            type_set,
        }
    }

    /// Parses and evaluates in one step.
    pub fn parse(
        name: impl Into<String>,
        arity: usize,
        text: &str,
        base: &BaseStructure,
    ) -> Result<Self, FormulaError> {
        let ast = parse(text, base.signature(), arity)?;
        Ok(RelationDef::new(name, arity, ast, base))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn ast(&self) -> &Ast {
        &self.ast
    }

    pub fn type_set(&self) -> &BTreeSet<TypeRep> {
        &self.type_set
    }

    pub fn contains(&self, t: &TypeRep) -> bool {
        self.type_set.contains(t)
    }

    pub fn renamed(&self, name: impl Into<String>) -> Self {
        RelationDef {
            name: name.into(),
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::age::{builtin, FinStruct};

    fn dlo() -> BaseStructure {
        builtin("dense_linear_order").unwrap()
    }

    fn chain_type(base: &BaseStructure, vals: &[usize]) -> TypeRep {
        let size = vals.iter().max().map_or(0, |m| m + 1);
        let chain = FinStruct::chain(base.signature(), size);
        TypeRep::of_tuple(&chain, base.signature().order(), vals)
    }

    #[test]
    fn parse_precedence() {
        let b = dlo();
        let sig = b.signature();
        let a = parse("x1 < x2 | x1 = x2", sig, 2).unwrap();
        assert_eq!(
            a,
            Ast::or(
                Ast::Atom {
                    symbol: 0,
                    args: vec![0, 1]
                },
                Ast::Eq(0, 1)
            )
        );
        let a = parse("!(x1 = x2) & x1 < x2", sig, 2).unwrap();
        assert_eq!(
            a,
            Ast::and(
                Ast::not(Ast::Eq(0, 1)),
                Ast::Atom {
                    symbol: 0,
                    args: vec![0, 1]
                }
            )
        );
        let a = parse("less(x1,x2) | x1=x2 & !true", sig, 2).unwrap();
        assert_eq!(
            a,
            Ast::or(
                Ast::Atom {
                    symbol: 0,
                    args: vec![0, 1]
                },
                Ast::and(Ast::Eq(0, 1), Ast::not(Ast::True))
            )
        );
    }

    #[test]
    fn parse_errors() {
        let b = dlo();
        let sig = b.signature();
        assert!(matches!(
            parse("exists x3. x1<x3", sig, 2),
            Err(FormulaError::Parse { pos: 0, .. })
        ));
        assert!(matches!(
            parse("edge(x1,x2)", sig, 2),
            Err(FormulaError::UnknownSymbol { .. })
        ));
        assert!(matches!(
            parse("less(x1)", sig, 2),
            Err(FormulaError::ArityMismatch { .. })
        ));
        assert!(matches!(
            parse("x1 < x3", sig, 2),
            Err(FormulaError::VariableOutOfRange { var: 3, .. })
        ));
        let e = parse("x1 < x2 &", sig, 2).unwrap_err();
        assert_eq!(e.position(), 9);
        assert!(parse("x1 < x2)", sig, 2).is_err());
    }

    #[test]
    fn display_reparses() {
        let b = dlo();
        let sig = b.signature();
        for text in ["x1 < x2 | x1 = x2", "!(x1 = x2 | x2 < x1) & true", "(x1<x2 | x2<x3) & x1=x3"] {
            let a = parse(text, sig, 3).unwrap();
            let shown = a.display(sig).to_string();
            assert_eq!(parse(&shown, sig, 3).unwrap(), a, "{shown}");
        }
    }

    #[test]
    fn evaluation() {
        let b = dlo();
        let le = parse("x1 < x2 | x1 = x2", b.signature(), 2).unwrap();
        assert!(!eval(&le, &chain_type(&b, &[1, 0])));
        assert!(eval(&le, &chain_type(&b, &[0, 0])));
        let lt = parse("x1 < x2", b.signature(), 3).unwrap();
        assert!(eval(&lt, &chain_type(&b, &[0, 1, 2])));
    }

    #[test]
    fn type_sets() {
        let b = dlo();
        let sig = b.signature();
        let le = types_of(&parse("x1<x2 | x1=x2", sig, 2).unwrap(), 2, &b);
        let expect: BTreeSet<TypeRep> =
            [chain_type(&b, &[0, 1]), chain_type(&b, &[0, 0])].into_iter().collect();
        assert_eq!(le, expect);
        assert!(types_of(&parse("x1<x1", sig, 1).unwrap(), 1, &b).is_empty());
        assert_eq!(types_of(&parse("x1=x1", sig, 1).unwrap(), 1, &b).len(), 1);
    }
}
