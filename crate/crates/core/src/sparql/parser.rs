use std::collections::HashMap;

use super::{CmpOp, Literal, Modifier, ParseError, ParsedQuery, QueryForm, Term, TriplePattern, RDF_TYPE, XSD};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    /// Bare word: keyword, prefixed name, `a`, `true`/`false`.
    Word(String),
    Var(String),
    IriRef(String),
    Str(String),
    LangTag(String),
    Number(String),
    Punct(&'static str),
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    offset: usize,
}

const PUNCT: &[&str] = &[
    "^^", "&&", "||", "<=", ">=", "!=", "{", "}", "(", ")", ".", ";", ",", "*", "=", "<", ">", "/", "|", "^", "+", "!",
    "-",
];

fn lex(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'#' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        match c {
            b'?' | b'$' => {
                i += 1;
                let name_start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                if i == name_start {
                    return Err(ParseError::new(start, "expected variable name"));
                }
                out.push(Spanned {
                    tok: Tok::Var(text[name_start..i].to_string()),
                    offset: start,
                });
            }
            b'<' => {
                // An IRI reference never contains whitespace; otherwise this is a comparison.
                let rest = &text[i + 1..];
                let end = rest.find(|ch: char| ch == '>' || ch.is_whitespace() || ch == '<' || ch == '"');
                match end {
                    Some(e) if rest[e..].starts_with('>') => {
                        out.push(Spanned {
                            tok: Tok::IriRef(rest[..e].to_string()),
                            offset: start,
                        });
                        i += e + 2;
                    }
                    _ => {
                        let p = if rest.starts_with('=') { "<=" } else { "<" };
                        i += p.len();
                        out.push(Spanned {
                            tok: Tok::Punct(p),
                            offset: start,
                        });
                    }
                }
            }
            b'"' | b'\'' => {
                let (s, next) = lex_string(text, i)?;
                out.push(Spanned {
                    tok: Tok::Str(s),
                    offset: start,
                });
                i = next;
            }
            b'@' => {
                i += 1;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'-') {
                    i += 1;
                }
                out.push(Spanned {
                    tok: Tok::LangTag(text[start + 1..i].to_string()),
                    offset: start,
                });
            }
            b'0'..=b'9' => {
                while i < bytes.len()
                    && (bytes[i].is_ascii_digit() || bytes[i] == b'.' || bytes[i] == b'e' || bytes[i] == b'E')
                {
                    // a trailing '.' terminates a triple rather than a decimal
                    if bytes[i] == b'.' && !bytes.get(i + 1).is_some_and(u8::is_ascii_digit) {
                        break;
                    }
                    i += 1;
                }
                out.push(Spanned {
                    tok: Tok::Number(text[start..i].to_string()),
                    offset: start,
                });
            }
            c if c.is_ascii_alphabetic() || c == b':' || c == b'_' || c >= 0x80 => {
                while i < bytes.len() {
                    let b = bytes[i];
                    // a dot only continues a name when more name follows
                    let inner_dot = b == b'.'
                        && bytes
                            .get(i + 1)
                            .is_some_and(|n| n.is_ascii_alphanumeric() || matches!(n, b'_' | b'\\'));
                    if b.is_ascii_alphanumeric() || matches!(b, b'_' | b'-' | b':' | b'%') || b >= 0x80 || inner_dot {
                        i += 1;
                    } else if b == b'\\' && i + 1 < bytes.len() {
                        i += 2;
                    } else {
                        break;
                    }
                }
                out.push(Spanned {
                    tok: Tok::Word(text[start..i].to_string()),
                    offset: start,
                });
            }
            _ => {
                let p = PUNCT.iter().find(|p| text[i..].starts_with(**p)).ok_or_else(|| {
                    ParseError::new(
                        start,
                        format!("unexpected character {:?}", text[i..].chars().next().unwrap()),
                    )
                })?;
                i += p.len();
                out.push(Spanned {
                    tok: Tok::Punct(p),
                    offset: start,
                });
            }
        }
    }
    Ok(out)
}

fn lex_string(text: &str, start: usize) -> Result<(String, usize), ParseError> {
    let quote = text.as_bytes()[start] as char;
    let mut out = String::new();
    let mut chars = text[start + 1..].char_indices();
    while let Some((off, c)) = chars.next() {
        match c {
            c if c == quote => return Ok((out, start + 1 + off + 1)),
            '\\' => {
                let (_, esc) = chars
                    .next()
                    .ok_or_else(|| ParseError::new(start, "unterminated string"))?;
                out.push(match esc {
                    'n' => '\n',
                    't' => '\t',
                    'r' => '\r',
                    other => other,
                });
            }
            c => out.push(c),
        }
    }
    Err(ParseError::new(start, "unterminated string"))
}

const UNSUPPORTED: &[&str] = &[
    "UNION",
    "OPTIONAL",
    "GRAPH",
    "MINUS",
    "SERVICE",
    "BIND",
    "VALUES",
    "GROUP",
    "HAVING",
    "CONSTRUCT",
    "DESCRIBE",
    "FROM",
    "OFFSET",
    "NOT",
    "EXISTS",
];

struct Parser<'a> {
    toks: Vec<Spanned>,
    pos: usize,
    len: usize,
    prefixes: HashMap<String, String>,
    base: Option<String>,
    _text: &'a str,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.len, |s| s.offset)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|s| s.tok.clone());
        self.pos += 1;
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::new(self.offset(), msg))
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Word(w)) if w.eq_ignore_ascii_case(kw))
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.is_keyword(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            self.err(format!("expected {kw}"))
        }
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Some(Tok::Punct(q)) if *q == p)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> Result<(), ParseError> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            self.err(format!("expected '{p}'"))
        }
    }

    fn reject_unsupported(&self) -> Result<(), ParseError> {
        if let Some(Tok::Word(w)) = self.peek() {
            if let Some(kw) = UNSUPPORTED.iter().find(|k| w.eq_ignore_ascii_case(k)) {
                return self.err(format!("unsupported construct {kw}"));
            }
        }
        Ok(())
    }

    fn expect_var(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Var(v)) => {
                let v = v.clone();
                self.pos += 1;
                Ok(v)
            }
            _ => self.err("expected variable"),
        }
    }

    fn resolve_iri(&self, iri: &str) -> String {
        match &self.base {
            Some(base) if !iri.contains(':') => format!("{base}{iri}"),
            _ => iri.to_string(),
        }
    }

    fn expand_prefixed(&self, word: &str, offset: usize) -> Result<String, ParseError> {
        let (prefix, local) = word
            .split_once(':')
            .ok_or_else(|| ParseError::new(offset, format!("unexpected word {word:?}")))?;
        let ns = self
            .prefixes
            .get(prefix)
            .ok_or_else(|| ParseError::new(offset, format!("undeclared prefix {prefix:?}")))?;
        let mut local_unescaped = String::with_capacity(local.len());
        let mut chars = local.chars();
        while let Some(c) = chars.next() {
            if c == '\\' {
                if let Some(n) = chars.next() {
                    local_unescaped.push(n);
                }
            } else {
                local_unescaped.push(c);
            }
        }
        Ok(format!("{ns}{local_unescaped}"))
    }

    fn prolog(&mut self) -> Result<(), ParseError> {
        loop {
            if self.eat_keyword("PREFIX") {
                let off = self.offset();
                let name = match self.next() {
                    Some(Tok::Word(w)) if w.ends_with(':') => w[..w.len() - 1].to_string(),
                    _ => return Err(ParseError::new(off, "expected prefix name")),
                };
                let off = self.offset();
                let iri = match self.next() {
                    Some(Tok::IriRef(iri)) => iri,
                    _ => return Err(ParseError::new(off, "expected IRI")),
                };
                self.prefixes.insert(name, iri);
            } else if self.eat_keyword("BASE") {
                let off = self.offset();
                match self.next() {
                    Some(Tok::IriRef(iri)) => self.base = Some(iri),
                    _ => return Err(ParseError::new(off, "expected IRI")),
                }
            } else {
                return Ok(());
            }
        }
    }

    fn query(&mut self) -> Result<ParsedQuery, ParseError> {
        self.prolog()?;
        self.reject_unsupported()?;
        let mut modifiers = Vec::new();
        let mut projection = Vec::new();
        let mut projection_offsets = Vec::new();
        let form = if self.eat_keyword("SELECT") {
            let _ = self.eat_keyword("DISTINCT") || self.eat_keyword("REDUCED");
            loop {
                match self.peek() {
                    Some(Tok::Var(_)) => {
                        projection_offsets.push(self.offset());
                        projection.push(self.expect_var()?);
                    }
                    Some(Tok::Punct("(")) => {
                        if !projection.is_empty() {
                            return self.err("COUNT must be the only projection");
                        }
                        self.pos += 1;
                        self.expect_keyword("COUNT")?;
                        self.expect_punct("(")?;
                        let _ = self.eat_keyword("DISTINCT");
                        if self.is_punct("*") {
                            return self.err("COUNT(*) is not supported");
                        }
                        projection_offsets.push(self.offset());
                        let var = self.expect_var()?;
                        self.expect_punct(")")?;
                        self.expect_keyword("AS")?;
                        self.expect_var()?;
                        self.expect_punct(")")?;
                        modifiers.push(Modifier::Count { variable: var.clone() });
                        projection.push(var);
                        break;
                    }
                    Some(Tok::Punct("*")) => return self.err("SELECT * is not supported"),
                    _ => break,
                }
            }
            if projection.is_empty() {
                return self.err("SELECT needs at least one projected variable");
            }
            QueryForm::Select
        } else if self.eat_keyword("ASK") {
            QueryForm::Ask
        } else {
            self.reject_unsupported()?;
            return self.err("expected SELECT or ASK");
        };
        self.reject_unsupported()?;
        let _ = self.eat_keyword("WHERE");
        let patterns = self.group(&mut modifiers)?;
        self.solution_modifiers(&mut modifiers)?;
        if self.pos < self.toks.len() {
            self.reject_unsupported()?;
            return self.err("unexpected trailing input");
        }
        for (var, off) in projection.iter().zip(&projection_offsets) {
            if !patterns.iter().any(|p| p.variables().any(|v| v == var)) {
                return Err(ParseError::new(
                    *off,
                    format!("projected variable ?{var} does not occur in the pattern"),
                ));
            }
        }
        Ok(ParsedQuery {
            form,
            projection,
            patterns,
            modifiers,
        })
    }

    fn group(&mut self, modifiers: &mut Vec<Modifier>) -> Result<Vec<TriplePattern>, ParseError> {
        self.expect_punct("{")?;
        let mut patterns = Vec::new();
        loop {
            self.reject_unsupported()?;
            if self.eat_punct("}") {
                return Ok(patterns);
            }
            if self.eat_punct(".") {
                continue;
            }
            if self.is_punct("{") {
                return self.err("nested groups and subqueries are not supported");
            }
            if self.eat_keyword("FILTER") {
                self.filter(modifiers)?;
                continue;
            }
            if self.peek().is_none() {
                return self.err("unterminated group");
            }
            self.triples(&mut patterns)?;
        }
    }

    fn triples(&mut self, out: &mut Vec<TriplePattern>) -> Result<(), ParseError> {
        let subject = self.term(false)?;
        loop {
            let predicate = self.verb()?;
            loop {
                let object = self.term(false)?;
                out.push(TriplePattern::new(subject.clone(), predicate.clone(), object));
                if !self.eat_punct(",") {
                    break;
                }
            }
            if self.eat_punct(";") {
                // a trailing ';' before '.' or '}' is legal
                if self.is_punct(".") || self.is_punct("}") {
                    return Ok(());
                }
                continue;
            }
            return Ok(());
        }
    }

    fn verb(&mut self) -> Result<Term, ParseError> {
        if self.is_punct("^") || self.is_punct("!") || self.is_punct("(") {
            return self.err("property paths are not supported");
        }
        let off = self.offset();
        let t = if self.is_keyword("a") {
            self.pos += 1;
            Term::Iri(RDF_TYPE.to_string())
        } else {
            self.term(true)?
        };
        if matches!(t, Term::Literal(_)) {
            return Err(ParseError::new(off, "a predicate cannot be a literal"));
        }
        if self.is_punct("/") || self.is_punct("|") || self.is_punct("*") || self.is_punct("+") {
            return self.err("property paths are not supported");
        }
        Ok(t)
    }

    fn term(&mut self, predicate: bool) -> Result<Term, ParseError> {
        let off = self.offset();
        let tok = self
            .next()
            .ok_or_else(|| ParseError::new(off, "unexpected end of query"))?;
        match tok {
            Tok::Var(v) => Ok(Term::Variable(v)),
            Tok::IriRef(iri) => Ok(Term::Iri(self.resolve_iri(&iri))),
            Tok::Word(w) if !predicate && (w == "true" || w == "false") => {
                Ok(Term::Literal(Literal::typed(w, format!("{XSD}boolean"))))
            }
            Tok::Word(w) => {
                if let Some(kw) = UNSUPPORTED.iter().find(|k| w.eq_ignore_ascii_case(k)) {
                    return Err(ParseError::new(off, format!("unsupported construct {kw}")));
                }
                Ok(Term::Iri(self.expand_prefixed(&w, off)?))
            }
            Tok::Str(s) => {
                let lit = match self.peek() {
                    Some(Tok::LangTag(lang)) => {
                        let lang = lang.clone();
                        self.pos += 1;
                        Literal {
                            lexical: s,
                            datatype: None,
                            language: Some(lang),
                        }
                    }
                    Some(Tok::Punct("^^")) => {
                        self.pos += 1;
                        let off = self.offset();
                        let dt = match self.next() {
                            Some(Tok::IriRef(iri)) => self.resolve_iri(&iri),
                            Some(Tok::Word(w)) => self.expand_prefixed(&w, off)?,
                            _ => return Err(ParseError::new(off, "expected datatype IRI")),
                        };
                        Literal::typed(s, dt)
                    }
                    _ => Literal::plain(s),
                };
                Ok(Term::Literal(lit))
            }
            Tok::Number(n) => Ok(Term::Literal(number_literal(&n))),
            Tok::Punct("-") | Tok::Punct("+") => match self.next() {
                Some(Tok::Number(n)) => {
                    let signed = if tok == Tok::Punct("-") { format!("-{n}") } else { n };
                    Ok(Term::Literal(number_literal(&signed)))
                }
                _ => Err(ParseError::new(off, "expected number after sign")),
            },
            Tok::Punct("(") => Err(ParseError::new(off, "blank nodes and collections are not supported")),
            other => Err(ParseError::new(off, format!("unexpected token {other:?}"))),
        }
    }

    fn filter(&mut self, modifiers: &mut Vec<Modifier>) -> Result<(), ParseError> {
        self.expect_punct("(")?;
        loop {
            let parenthesized = self.eat_punct("(");
            if matches!(self.peek(), Some(Tok::Word(w)) if w != "true" && w != "false" && !w.contains(':')) {
                return self.err("FILTER functions are not supported");
            }
            let left = self.term(false)?;
            let op = match self.next() {
                Some(Tok::Punct("<")) => CmpOp::Lt,
                Some(Tok::Punct("<=")) => CmpOp::Le,
                Some(Tok::Punct(">")) => CmpOp::Gt,
                Some(Tok::Punct(">=")) => CmpOp::Ge,
                Some(Tok::Punct("=")) => CmpOp::Eq,
                Some(Tok::Punct("!=")) => CmpOp::Ne,
                _ => {
                    self.pos -= 1;
                    return self.err("expected comparison operator");
                }
            };
            let right = self.term(false)?;
            if parenthesized {
                self.expect_punct(")")?;
            }
            modifiers.push(Modifier::Filter { left, op, right });
            if self.eat_punct("&&") {
                continue;
            }
            if self.is_punct("||") {
                return self.err("disjunctive filters are not supported");
            }
            return self.expect_punct(")");
        }
    }

    fn solution_modifiers(&mut self, modifiers: &mut Vec<Modifier>) -> Result<(), ParseError> {
        loop {
            self.reject_unsupported()?;
            if self.eat_keyword("ORDER") {
                self.expect_keyword("BY")?;
                let mut any = false;
                loop {
                    let descending = if self.eat_keyword("DESC") {
                        true
                    } else if self.eat_keyword("ASC") {
                        false
                    } else if let Some(Tok::Var(_)) = self.peek() {
                        let variable = self.expect_var()?;
                        modifiers.push(Modifier::OrderBy {
                            variable,
                            descending: false,
                        });
                        any = true;
                        continue;
                    } else {
                        break;
                    };
                    self.expect_punct("(")?;
                    let variable = self.expect_var()?;
                    self.expect_punct(")")?;
                    modifiers.push(Modifier::OrderBy { variable, descending });
                    any = true;
                }
                if !any {
                    return self.err("expected ordering condition");
                }
            } else if self.eat_keyword("LIMIT") {
                let off = self.offset();
                match self.next() {
                    Some(Tok::Number(n)) => {
                        let n = n.parse().map_err(|_| ParseError::new(off, "invalid LIMIT"))?;
                        modifiers.push(Modifier::Limit(n));
                    }
                    _ => return Err(ParseError::new(off, "expected integer after LIMIT")),
                }
            } else {
                return Ok(());
            }
        }
    }
}

fn number_literal(n: &str) -> Literal {
    let dt = if n.contains(['e', 'E']) {
        "double"
    } else if n.contains('.') {
        "decimal"
    } else {
        "integer"
    };
    Literal::typed(n, format!("{XSD}{dt}"))
}

/// Parses a query in the supported subset. Prefixed names are expanded to
/// full IRIs.
pub fn parse_query(text: &str) -> Result<ParsedQuery, ParseError> {
    let toks = lex(text)?;
    let mut parser = Parser {
        toks,
        pos: 0,
        len: text.len(),
        prefixes: HashMap::new(),
        base: None,
        _text: text,
    };
    parser.query()
}
