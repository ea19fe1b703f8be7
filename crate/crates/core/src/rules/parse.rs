use super::{InferenceRule, RuleError, RuleErrorKind, RulePattern, RuleSet, Term};
use crate::model::{is_ident, InformationType, TypeTable};

/// Parses a rule file. Type declarations must precede the rules using them.
///
/// ```text
/// type NAME/ARITY [dim D] [sym [(i,j,...)]]
/// head <- [coeff*]atom ((+|-) [coeff*]atom)* [(+|-) offset]
/// ```
///
/// `coeff` is a signed decimal or a fraction like `1/3`; `sym` marks
/// argument positions (1-based, all when omitted) whose order is irrelevant.
pub fn parse_rules(text: &str) -> Result<RuleSet, RuleError> {
    let mut types = TypeTable::default();
    let mut rules = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.split('#').next().unwrap_or("");
        if line.trim().is_empty() {
            continue;
        }
        let mut cur = Cursor::new(line, line_no);
        cur.skip_ws();
        if cur.peek_word() == Some("type") {
            let itype = cur.type_decl()?;
            let col = cur.col();
            types
                .insert(itype)
                .map_err(|e| RuleError::at(line_no, col, e.into()))?;
        } else {
            let rule = cur.rule()?;
            super::compile(&types, &rule).map_err(|mut e| {
                e.line = line_no;
                e.column = 1;
                e
            })?;
            rules.push(rule);
        }
    }
    RuleSet::new(types, rules)
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str, line: usize) -> Self {
        Cursor { src, pos: 0, line }
    }

    fn col(&self) -> usize {
        self.src[..self.pos].chars().count() + 1
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, RuleError> {
        Err(RuleError::at(self.line, self.col(), RuleErrorKind::Syntax(msg.into())))
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos == self.src.len()
    }

    fn peek_char(&mut self) -> Option<char> {
        self.skip_ws();
        self.rest().chars().next()
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, token: &str) -> Result<(), RuleError> {
        if self.eat(token) {
            Ok(())
        } else {
            self.err(format!("expected `{token}`"))
        }
    }

    fn peek_word(&mut self) -> Option<&'a str> {
        self.skip_ws();
        let rest = self.rest();
        let end = rest
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(rest.len());
        (end > 0).then(|| &rest[..end])
    }

    fn word(&mut self) -> Result<&'a str, RuleError> {
        match self.peek_word() {
            Some(w) if w.chars().next().is_some_and(|c| c.is_ascii_alphabetic()) => {
                self.pos += w.len();
                Ok(w)
            }
            _ => self.err("expected a name"),
        }
    }

    fn integer(&mut self) -> Result<usize, RuleError> {
        self.skip_ws();
        let rest = self.rest();
        let end = rest.find(|c: char| !c.is_ascii_digit()).unwrap_or(rest.len());
        if end == 0 {
            return self.err("expected an integer");
        }
        let v = rest[..end].parse().or_else(|_| self.err("integer out of range"))?;
        self.pos += end;
        Ok(v)
    }

    fn type_decl(&mut self) -> Result<InformationType, RuleError> {
        self.expect("type")?;
        let name = self.word()?;
        if !is_ident(name) {
            return self.err("invalid type name");
        }
        self.expect("/")?;
        let arity = self.integer()?;
        if arity == 0 {
            return self.err("arity must be at least 1");
        }
        let mut itype = InformationType::new(name, arity, 2);
        while !self.at_end() {
            match self.word()? {
                "dim" => {
                    itype.value_dim = self.integer()?;
                    if itype.value_dim == 0 {
                        return self.err("dimension must be at least 1");
                    }
                }
                "sym" => {
                    let positions = if self.eat("(") {
                        let mut ps = vec![self.integer()?];
                        while self.eat(",") {
                            ps.push(self.integer()?);
                        }
                        self.expect(")")?;
                        if ps.iter().any(|&p| p == 0 || p > arity) || ps.len() < 2 {
                            return self.err("symmetric positions must name at least two arguments");
                        }
                        ps.into_iter().map(|p| p - 1).collect()
                    } else {
                        (0..arity).collect()
                    };
                    itype = itype.with_symmetric(positions);
                }
                other => return self.err(format!("unexpected `{other}` in type declaration")),
            }
        }
        Ok(itype)
    }

    fn pattern(&mut self) -> Result<RulePattern, RuleError> {
        let name = self.word()?;
        self.expect("(")?;
        let mut slots = vec![self.variable()?];
        while self.eat(",") {
            slots.push(self.variable()?);
        }
        self.expect(")")?;
        Ok(RulePattern::new(name, slots))
    }

    fn variable(&mut self) -> Result<String, RuleError> {
        let w = self.word()?;
        if !w.chars().next().is_some_and(|c| c.is_ascii_uppercase()) {
            return self.err("variables start with an uppercase letter");
        }
        Ok(w.to_string())
    }

    fn number(&mut self) -> Result<Option<f64>, RuleError> {
        self.skip_ws();
        let rest = self.rest();
        let end = rest
            .find(|c: char| !(c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E'))
            .unwrap_or(rest.len());
        if end == 0 || !rest.starts_with(|c: char| c.is_ascii_digit() || c == '.') {
            return Ok(None);
        }
        let Ok(mut value) = rest[..end].parse::<f64>() else {
            return self.err(format!("invalid number `{}`", &rest[..end]));
        };
        self.pos += end;
        if self.eat("/") {
            let Some(den) = self.number()? else {
                return self.err("expected a denominator");
            };
            if den == 0.0 {
                return self.err("division by zero");
            }
            value /= den;
        }
        Ok(Some(value))
    }

    // [sign] (coeff ["*" atom] | atom)
    fn term(&mut self, mut sign: f64) -> Result<(Option<RulePattern>, f64), RuleError> {
        while let Some(c @ ('-' | '+')) = self.peek_char() {
            self.pos += 1;
            if c == '-' {
                sign = -sign;
            }
        }
        match self.number()? {
            Some(v) => {
                if self.eat("*") {
                    Ok((Some(self.pattern()?), sign * v))
                } else {
                    Ok((None, sign * v))
                }
            }
            None => Ok((Some(self.pattern()?), sign)),
        }
    }

    fn rule(&mut self) -> Result<InferenceRule, RuleError> {
        let rhs = self.pattern()?;
        self.expect("<-")?;
        let mut lhs = Vec::new();
        let mut offset = 0.0;
        let mut sign = 1.0;
        loop {
            self.skip_ws();
            let col = self.col();
            let (pattern, coefficient) = self.term(sign)?;
            match pattern {
                Some(pattern) => {
                    if coefficient == 0.0 {
                        return Err(RuleError::at(
                            self.line,
                            col,
                            RuleErrorKind::ZeroCoefficient(pattern.to_string()),
                        ));
                    }
                    lhs.push(Term {
                        coefficient,
                        pattern,
                    });
                }
                None => offset += coefficient,
            }
            if self.at_end() {
                break;
            }
            sign = if self.eat("+") {
                1.0
            } else if self.eat("-") {
                -1.0
            } else {
                return self.err("expected `+`, `-` or end of line");
            };
        }
        if lhs.is_empty() {
            return Err(RuleError::at(self.line, 1, RuleErrorKind::NoPremises));
        }
        Ok(InferenceRule { lhs, rhs, offset })
    }
}
