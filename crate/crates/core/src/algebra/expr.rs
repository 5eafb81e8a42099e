//! A small textual grammar for building processes from the shell.
//!
//! ```text
//! expr  := leaf | mix(w:expr, ...) | bmix(w:expr, ...) | scale(c, expr)
//!        | stop(expr @ rule) | stitch(expr @ rule -> expr) | max(expr, expr)
//! leaf  := lr(p1, p0) | brier(p1, p0) | logscore(p1, p0)
//!        | kt(p0) | laplace(p0) | ml(p0) | nmlseq(p0)
//!        | bf({w:p, ...}, {w:p, ...}) | bet_heads | bet_tails
//! rule  := never | t=N | e>=B
//! ```
//!
//! Probabilities are Bernoulli parameters. `bet_heads` is `lr(1, 0.5)` and
//! `bet_tails` is `lr(0, 0.5)`. `nmlseq` is the horizon-renormalized NML
//! code tabulated to depth [`MAX_CHECK_DEPTH`].

use std::sync::Arc;

use super::combinators::{bayes_mix, convex_mix, pointwise_max, scale, stitch_shared, stop_shared};
use super::rules::{AtStep, EvidenceAtLeast, Never, SharedRule};
use super::validity::MAX_CHECK_DEPTH;
use crate::codes::{code_to_e, nml_sequence_family};
use crate::eprocess::{
    bayes_factor_process, lr_process, ml_plugin_process, prequential_process, scoring_rule_process,
    DiscretePrior, EvidenceProcess, Smoothing, Template,
};
use crate::error::{EvidenceError, Result};
use crate::prob::Distribution;
use crate::scoring::ScoringRule;

type Process = Box<dyn EvidenceProcess<f64>>;

/// Parses and builds a process over the binary alphabet.
pub fn parse_process(src: &str) -> Result<Process> {
    let mut p = Parser { src, pos: 0 };
    let e = p.expr()?;
    p.ws();
    if p.pos != src.len() {
        return Err(p.err("trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, message: impl Into<String>) -> EvidenceError {
        EvidenceError::Parse {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn rest(&self) -> &str {
        &self.src[self.pos..]
    }

    fn ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.ws();
        if self.rest().starts_with(tok) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &str) -> Result<()> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{tok}`")))
        }
    }

    fn ident(&mut self) -> Result<&str> {
        self.ws();
        let len = self
            .rest()
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(self.rest().len());
        if len == 0 {
            return Err(self.err("expected a name"));
        }
        let start = self.pos;
        self.pos += len;
        Ok(&self.src[start..start + len])
    }

    fn number(&mut self) -> Result<f64> {
        self.ws();
        let len = self
            .rest()
            .find(|c: char| !(c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '-' | '+')))
            .unwrap_or(self.rest().len());
        let text = &self.rest()[..len];
        let v = text
            .parse::<f64>()
            .map_err(|_| self.err(format!("bad number `{text}`")))?;
        self.pos += len;
        Ok(v)
    }

    fn bern(&mut self) -> Result<Distribution<f64>> {
        let at = self.pos;
        let p = self.number()?;
        Distribution::bernoulli(p).map_err(|e| EvidenceError::Parse {
            offset: at,
            message: e.to_string(),
        })
    }

    fn build<T>(&self, at: usize, r: Result<T>) -> Result<T> {
        r.map_err(|e| match e {
            EvidenceError::Parse { .. } => e,
            other => EvidenceError::Parse {
                offset: at,
                message: other.to_string(),
            },
        })
    }

    fn expr(&mut self) -> Result<Process> {
        self.ws();
        let at = self.pos;
        let name = self.ident()?.to_string();
        match name.as_str() {
            "bet_heads" => return self.build(at, Ok(Box::new(lr_process(bern(1.0), bern(0.5))?))),
            "bet_tails" => return self.build(at, Ok(Box::new(lr_process(bern(0.0), bern(0.5))?))),
            _ => {}
        }
        self.expect("(")?;
        let out: Process = match name.as_str() {
            "lr" | "brier" | "logscore" => {
                let p1 = self.bern()?;
                self.expect(",")?;
                let p0 = self.bern()?;
                match name.as_str() {
                    "lr" => Box::new(self.build(at, lr_process(p1, p0))?),
                    "brier" => {
                        Box::new(self.build(at, scoring_rule_process(ScoringRule::Brier, p1, p0))?)
                    }
                    _ => Box::new(self.build(at, scoring_rule_process(ScoringRule::Log, p1, p0))?),
                }
            }
            "kt" | "laplace" => {
                let p0 = self.bern()?;
                let s = if name == "kt" {
                    Smoothing::KrichevskyTrofimov
                } else {
                    Smoothing::Laplace
                };
                Box::new(self.build(at, prequential_process(s, p0))?)
            }
            "ml" => {
                let p0 = self.bern()?;
                Box::new(self.build(at, ml_plugin_process(p0))?)
            }
            "nmlseq" => {
                let p0 = self.bern()?;
                let fam = self.build(at, nml_sequence_family::<f64>(MAX_CHECK_DEPTH))?;
                Box::new(self.build(at, code_to_e(Arc::new(fam), p0))?)
            }
            "bf" => {
                let prior1 = self.prior()?;
                self.expect(",")?;
                let prior0 = self.prior()?;
                Box::new(self.build(at, bayes_factor_process(prior1, prior0))?)
            }
            "mix" | "bmix" => {
                let mut weights = Vec::new();
                let mut children = Vec::new();
                loop {
                    weights.push(self.number()?);
                    self.expect(":")?;
                    children.push(self.expr()?);
                    if !self.eat(",") {
                        break;
                    }
                }
                if name == "mix" {
                    Box::new(self.build(at, convex_mix(children, weights))?)
                } else {
                    Box::new(self.build(at, bayes_mix(children, weights))?)
                }
            }
            "scale" => {
                let c = self.number()?;
                self.expect(",")?;
                let child = self.expr()?;
                Box::new(self.build(at, scale(child, c))?)
            }
            "stop" => {
                let child = self.expr()?;
                self.expect("@")?;
                let rule = self.rule()?;
                Box::new(stop_shared(child, rule))
            }
            "stitch" => {
                let first = self.expr()?;
                self.expect("@")?;
                let rule = self.rule()?;
                self.expect("->")?;
                let second = self.expr()?;
                self.build(at, first.alphabet().check_same(second.alphabet()))?;
                Box::new(stitch_shared(first, Arc::new(Template(second)), rule))
            }
            "max" => {
                let a = self.expr()?;
                self.expect(",")?;
                let b = self.expr()?;
                Box::new(self.build(at, pointwise_max(a, b))?)
            }
            _ => {
                self.pos = at;
                return Err(self.err(format!("unknown process `{name}`")));
            }
        };
        self.expect(")")?;
        Ok(out)
    }

    fn prior(&mut self) -> Result<DiscretePrior<f64>> {
        self.expect("{")?;
        let at = self.pos;
        let mut atoms = Vec::new();
        loop {
            let w = self.number()?;
            self.expect(":")?;
            atoms.push((self.bern()?, w));
            if !self.eat(",") {
                break;
            }
        }
        self.expect("}")?;
        self.build(at, DiscretePrior::new(atoms))
    }

    fn rule(&mut self) -> Result<SharedRule<f64>> {
        self.ws();
        if self.eat("never") {
            return Ok(Arc::new(Never));
        }
        if self.eat("t") {
            self.expect("=")?;
            let at = self.pos;
            let t = self.number()?;
            if t < 0.0 || t.fract() != 0.0 {
                self.pos = at;
                return Err(self.err("stopping step must be a nonnegative integer"));
            }
            return Ok(Arc::new(AtStep(t as usize)));
        }
        if self.eat("e") {
            self.expect(">=")?;
            let b = self.number()?;
            return Ok(Arc::new(EvidenceAtLeast(b)));
        }
        Err(self.err("expected a rule: never, t=N or e>=B"))
    }
}

fn bern(p: f64) -> Distribution<f64> {
    Distribution::bernoulli(p).expect("literal parameter")
}
