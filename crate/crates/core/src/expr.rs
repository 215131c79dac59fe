//! A small expression language for contact Hamiltonians on `S^{2n-1}`.
//!
//! ```text
//! expr   := ['+'|'-'] term (('+'|'-') term)*
//! term   := factor ('*' factor)*
//! factor := number
//!         | ('x'|'y') index ['^' power]
//!         | 'bump' '(' 'rho' ';' number ',' number ')'
//!         | 'ball' '(' number {',' number} ';' number ')'
//!         | '(' expr ')'
//! ```
//!
//! `bump(rho; a, b)` is a smooth profile of the angle ratio `rho = v/u`
//! equal to 1 for `rho <= a` and 0 for `rho >= b`. `ball(p; R)` is the bump
//! `exp(1 - 1/(1 - |theta - p|^2/R^2))` around the (normalised) point `p`.
//! Expressions are evaluated on unit vectors.

use std::fmt;

use crate::contact::hamiltonian::SphereFunction;
use crate::error::{Error, Result};
use crate::geometry::{normalize, split_uv};

pub const MAX_DIM: usize = 16;

/// Value together with its ambient gradient.
#[derive(Clone, Copy)]
struct Dual {
    v: f64,
    g: [f64; MAX_DIM],
}

impl Dual {
    fn constant(v: f64) -> Self {
        Self { v, g: [0.0; MAX_DIM] }
    }

    fn mul(self, other: Dual, dim: usize) -> Dual {
        let mut g = [0.0; MAX_DIM];
        for i in 0..dim {
            g[i] = self.g[i] * other.v + self.v * other.g[i];
        }
        Dual { v: self.v * other.v, g }
    }

    fn add_scaled(&mut self, other: &Dual, c: f64, dim: usize) {
        self.v += c * other.v;
        for i in 0..dim {
            self.g[i] += c * other.g[i];
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Factor {
    Const(f64),
    /// Coordinate `index` (0-based into `(x, y)`) raised to `power`.
    Var { index: usize, power: u32 },
    Bump { rho_a: f64, rho_b: f64 },
    Ball { center: Vec<f64>, radius: f64 },
    Group(Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coef: f64,
    pub factors: Vec<Factor>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub terms: Vec<Term>,
    n: usize,
    k: usize,
}

fn smooth_unit(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

fn smooth_unit_deriv(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp() / (t * t)
    }
}

/// `C^inf` step from 0 (t <= 0) to 1 (t >= 1) and its derivative.
pub(crate) fn smoothstep(t: f64) -> (f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0);
    }
    if t >= 1.0 {
        return (1.0, 0.0);
    }
    let (a, b) = (smooth_unit(t), smooth_unit(1.0 - t));
    let (da, db) = (smooth_unit_deriv(t), -smooth_unit_deriv(1.0 - t));
    let s = a + b;
    (a / s, (da * s - a * (da + db)) / (s * s))
}

/// Ball profile `exp(1 - 1/(1-q))` on `q < 1` and its derivative in `q`.
pub(crate) fn ball_profile(q: f64) -> (f64, f64) {
    if q >= 1.0 {
        return (0.0, 0.0);
    }
    let w = 1.0 - q;
    let b = (1.0 - 1.0 / w).exp();
    (b, -b / (w * w))
}

impl Expr {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn parse(text: &str, n: usize, k: usize) -> Result<Expr> {
        if n == 0 || 2 * n > MAX_DIM {
            return Err(Error::InvalidParameter(format!("expressions support 1 <= n <= {}", MAX_DIM / 2)));
        }
        crate::geometry::check_k(n, k)?;
        let mut p = Parser { src: text.as_bytes(), pos: 0, n };
        let terms = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.err("unexpected trailing input"));
        }
        let mut e = Expr { terms, n, k };
        set_k(&mut e, k);
        Ok(e)
    }

    fn eval_dual(&self, theta: &[f64]) -> Dual {
        let dim = 2 * self.n;
        let mut acc = Dual::constant(0.0);
        for term in &self.terms {
            let mut prod = Dual::constant(1.0);
            for f in &term.factors {
                let d = self.eval_factor(f, theta);
                if d.v == 0.0 && d.g[..dim].iter().all(|g| *g == 0.0) {
                    prod = Dual::constant(0.0);
                    break;
                }
                prod = prod.mul(d, dim);
            }
            acc.add_scaled(&prod, term.coef, dim);
        }
        acc
    }

    fn eval_value(&self, theta: &[f64]) -> f64 {
        let mut acc = 0.0;
        for term in &self.terms {
            let mut prod = term.coef;
            for f in &term.factors {
                if prod == 0.0 {
                    break;
                }
                prod *= self.factor_value(f, theta);
            }
            acc += prod;
        }
        acc
    }

    fn factor_value(&self, f: &Factor, theta: &[f64]) -> f64 {
        match f {
            Factor::Const(c) => *c,
            Factor::Var { index, power } => theta[*index].powi(*power as i32),
            Factor::Bump { rho_a, rho_b } => {
                let (u, v) = split_uv(theta, self.k);
                if v >= rho_b * u {
                    return 0.0;
                }
                let rho = v / u;
                1.0 - smoothstep((rho - rho_a) / (rho_b - rho_a)).0
            }
            Factor::Ball { center, radius } => {
                let d2: f64 = theta.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                ball_profile(d2 / (radius * radius)).0
            }
            Factor::Group(e) => e.eval_value(theta),
        }
    }

    fn eval_factor(&self, f: &Factor, theta: &[f64]) -> Dual {
        let dim = 2 * self.n;
        match f {
            Factor::Const(c) => Dual::constant(*c),
            Factor::Var { index, power } => {
                let x = theta[*index];
                let mut d = Dual::constant(x.powi(*power as i32));
                if *power > 0 {
                    d.g[*index] = *power as f64 * x.powi(*power as i32 - 1);
                }
                d
            }
            Factor::Bump { rho_a, rho_b } => {
                let (u, v) = split_uv(theta, self.k);
                if v >= rho_b * u {
                    return Dual::constant(0.0);
                }
                let rho = v / u;
                let width = rho_b - rho_a;
                let (s, ds) = smoothstep((rho - rho_a) / width);
                let mut d = Dual::constant(1.0 - s);
                if ds != 0.0 {
                    let scale = -ds / width / u;
                    let n = self.n;
                    for i in 0..dim {
                        let in_v = i >= n + (n - self.k);
                        let grad_u = if in_v { 0.0 } else { 2.0 * theta[i] };
                        let grad_v = if in_v { 2.0 * theta[i] } else { 0.0 };
                        d.g[i] = scale * (grad_v - rho * grad_u);
                    }
                }
                d
            }
            Factor::Ball { center, radius } => {
                let r2 = radius * radius;
                let d2: f64 = theta.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                let (b, db) = ball_profile(d2 / r2);
                let mut d = Dual::constant(b);
                if db != 0.0 {
                    for i in 0..dim {
                        d.g[i] = db * 2.0 * (theta[i] - center[i]) / r2;
                    }
                }
                d
            }
            Factor::Group(e) => e.eval_dual(theta),
        }
    }

    fn term_outside(&self, term: &Term, theta: &[f64]) -> bool {
        term.coef == 0.0
            || term.factors.iter().any(|f| match f {
                Factor::Const(c) => *c == 0.0,
                Factor::Bump { rho_b, .. } => {
                    let (u, v) = split_uv(theta, self.k);
                    v >= rho_b * u
                }
                Factor::Ball { center, radius } => {
                    let d2: f64 = theta.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                    d2 >= radius * radius
                }
                Factor::Group(e) => e.outside(theta),
                Factor::Var { .. } => false,
            })
    }

    fn outside(&self, theta: &[f64]) -> bool {
        self.terms.iter().all(|t| self.term_outside(t, theta))
    }

    fn rho_bound(&self) -> Option<f64> {
        let mut worst: f64 = 0.0;
        for term in &self.terms {
            let b = term
                .factors
                .iter()
                .filter_map(|f| match f {
                    Factor::Const(c) if *c == 0.0 => Some(0.0),
                    Factor::Bump { rho_b, .. } => Some(*rho_b),
                    Factor::Ball { center, radius } => ball_rho_bound(center, *radius, self.n, self.k),
                    Factor::Group(e) => e.rho_bound(),
                    _ => None,
                })
                .fold(None, |acc: Option<f64>, b| Some(acc.map_or(b, |a| a.min(b))));
            worst = worst.max(b?);
        }
        Some(worst)
    }

    fn balls(&self, out: &mut Vec<(Vec<f64>, f64)>) {
        for term in &self.terms {
            for f in &term.factors {
                match f {
                    Factor::Ball { center, radius } => out.push((center.clone(), *radius)),
                    Factor::Group(e) => e.balls(out),
                    _ => {}
                }
            }
        }
    }
}

/// Largest angle ratio on the spherical cap `|theta - p| < R`, if the cap
/// stays away from `Pi_k`.
fn ball_rho_bound(center: &[f64], radius: f64, n: usize, k: usize) -> Option<f64> {
    let (_, v) = split_uv(center, k);
    let _ = n;
    let sv = v.sqrt() + radius;
    if sv >= 1.0 {
        return None;
    }
    let vmax = sv * sv;
    Some(vmax / (1.0 - vmax))
}

impl SphereFunction for Expr {
    fn dim(&self) -> usize {
        2 * self.n
    }

    fn value(&self, theta: &[f64]) -> f64 {
        self.eval_value(theta)
    }

    fn gradient(&self, theta: &[f64], out: &mut [f64]) {
        let d = self.eval_dual(theta);
        out.copy_from_slice(&d.g[..2 * self.n]);
    }

    fn value_and_gradient(&self, theta: &[f64], out: &mut [f64]) -> f64 {
        let d = self.eval_dual(theta);
        out.copy_from_slice(&d.g[..2 * self.n]);
        d.v
    }

    fn outside_support(&self, theta: &[f64]) -> bool {
        self.outside(theta)
    }

    fn support_rho_bound(&self) -> Option<f64> {
        self.rho_bound()
    }

    fn sample_hints(&self) -> Vec<(Vec<f64>, f64)> {
        let mut out = Vec::new();
        self.balls(&mut out);
        out
    }

    fn expression(&self) -> Option<String> {
        Some(self.to_string())
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Factor::Const(c) => write!(f, "{c:?}"),
            Factor::Var { index, power } => {
                // Display needs n; Expr::fmt handles Var directly.
                write!(f, "v{index}^{power}")
            }
            Factor::Bump { rho_a, rho_b } => write!(f, "bump(rho; {rho_a:?}, {rho_b:?})"),
            Factor::Ball { center, radius } => {
                let c: Vec<String> = center.iter().map(|c| format!("{c:?}")).collect();
                write!(f, "ball({}; {radius:?})", c.join(", "))
            }
            Factor::Group(e) => write!(f, "({e})"),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, term) in self.terms.iter().enumerate() {
            if i == 0 {
                write!(f, "{:?}", term.coef)?;
            } else if term.coef.is_sign_negative() {
                write!(f, " - {:?}", -term.coef)?;
            } else {
                write!(f, " + {:?}", term.coef)?;
            }
            for factor in &term.factors {
                match factor {
                    Factor::Var { index, power } => {
                        let (c, j) = if *index < self.n { ('x', index + 1) } else { ('y', index - self.n + 1) };
                        write!(f, " * {c}{j}^{power}")?;
                    }
                    other => write!(f, " * {other}")?,
                }
            }
        }
        Ok(())
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    n: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Parse { pos: self.pos, msg: msg.to_owned() }
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

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(&format!("expected '{}'", c as char)))
        }
    }

    fn ident(&mut self) -> String {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphabetic() {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn uint(&mut self) -> Result<u32> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| self.err("expected an integer"))
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        if matches!(self.src.get(self.pos), Some(b'-') | Some(b'+')) {
            self.pos += 1;
        }
        while self.pos < self.src.len() {
            let c = self.src[self.pos];
            let exp_sign = matches!(c, b'-' | b'+') && matches!(self.src[self.pos - 1], b'e' | b'E');
            if c.is_ascii_digit() || c == b'.' || c == b'e' || c == b'E' || exp_sign {
                self.pos += 1;
            } else {
                break;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let v: f64 = text.parse().map_err(|_| Error::Parse { pos: start, msg: format!("bad number {text:?}") })?;
        if !v.is_finite() {
            return Err(Error::Parse { pos: start, msg: "non-finite number".into() });
        }
        Ok(v)
    }

    fn expr(&mut self) -> Result<Vec<Term>> {
        let mut terms = Vec::new();
        let mut sign = 1.0;
        if self.eat(b'-') {
            sign = -1.0;
        } else {
            self.eat(b'+');
        }
        loop {
            let mut t = self.term()?;
            t.coef *= sign;
            terms.push(t);
            if self.eat(b'+') {
                sign = 1.0;
            } else if self.eat(b'-') {
                sign = -1.0;
            } else {
                return Ok(terms);
            }
        }
    }

    fn term(&mut self) -> Result<Term> {
        let mut term = Term { coef: 1.0, factors: Vec::new() };
        loop {
            match self.factor()? {
                Factor::Const(c) => term.coef *= c,
                f => term.factors.push(f),
            }
            if !self.eat(b'*') {
                return Ok(term);
            }
        }
    }

    fn factor(&mut self) -> Result<Factor> {
        match self.peek() {
            None => Err(self.err("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let terms = self.expr()?;
                self.expect(b')')?;
                Ok(Factor::Group(Expr { terms, n: self.n, k: 0 }))
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => Ok(Factor::Const(self.number()?)),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                let name = self.ident();
                match name.as_str() {
                    "x" | "y" => {
                        let idx = self.uint()? as usize;
                        if idx == 0 || idx > self.n {
                            return Err(Error::Parse { pos: start, msg: format!("coordinate index {idx} out of 1..={}", self.n) });
                        }
                        let index = if name == "x" { idx - 1 } else { self.n + idx - 1 };
                        let power = if self.eat(b'^') { self.uint()? } else { 1 };
                        Ok(Factor::Var { index, power })
                    }
                    "bump" => {
                        self.expect(b'(')?;
                        if self.ident() != "rho" {
                            return Err(self.err("bump expects 'rho' as its argument"));
                        }
                        self.expect(b';')?;
                        let rho_a = self.number()?;
                        self.expect(b',')?;
                        let rho_b = self.number()?;
                        self.expect(b')')?;
                        if !(0.0 <= rho_a && rho_a < rho_b) {
                            return Err(Error::Parse { pos: start, msg: "bump needs 0 <= a < b".into() });
                        }
                        Ok(Factor::Bump { rho_a, rho_b })
                    }
                    "ball" => {
                        self.expect(b'(')?;
                        let mut center = vec![self.number()?];
                        while self.eat(b',') {
                            center.push(self.number()?);
                        }
                        self.expect(b';')?;
                        let radius = self.number()?;
                        self.expect(b')')?;
                        if center.len() != 2 * self.n {
                            return Err(Error::Parse { pos: start, msg: format!("ball center needs {} coordinates", 2 * self.n) });
                        }
                        if center.iter().all(|c| *c == 0.0) || radius <= 0.0 {
                            return Err(Error::Parse { pos: start, msg: "ball needs a nonzero center and a positive radius".into() });
                        }
                        normalize(&mut center);
                        Ok(Factor::Ball { center, radius })
                    }
                    other => Err(Error::Parse { pos: start, msg: format!("unknown identifier {other:?}") }),
                }
            }
            Some(c) => Err(self.err(&format!("unexpected character '{}'", c as char))),
        }
    }
}

/// Groups are parsed before `k` is known; fix it up recursively.
fn set_k(expr: &mut Expr, k: usize) {
    expr.k = k;
    for t in &mut expr.terms {
        for f in &mut t.factors {
            if let Factor::Group(e) = f {
                set_k(e, k);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Expr {
        Expr::parse(s, 2, 1).unwrap()
    }

    fn fd_gradient(e: &Expr, theta: &[f64]) -> Vec<f64> {
        let h = 1e-6;
        (0..theta.len())
            .map(|i| {
                let mut p = theta.to_vec();
                let mut m = theta.to_vec();
                p[i] += h;
                m[i] -= h;
                (e.value(&p) - e.value(&m)) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn parses_and_evaluates() {
        let e = parse("0.5*bump(rho;1,3) + 0.5*bump(rho;1,3)*x1^2");
        assert_eq!(e.value(&[1.0, 0.0, 0.0, 0.0]), 1.0);
        assert_eq!(e.value(&[0.0, 1.0, 0.0, 0.0]), 0.5);
        assert_eq!(e.value(&[0.0, 0.0, 0.0, 1.0]), 0.0);
        let e = parse("-2 * x1 * y2 + 3");
        assert_eq!(e.value(&[0.5, 0.0, 0.0, 0.5]), 2.5);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let e = parse("2*bump(rho; 0.5, 2) * (1 + x1^2 - 0.3*y1) + 0.7*ball(0.5, 0.5, 0.5, 0.5; 0.6)");
        let theta = [0.5, 0.3, 0.6, 0.4];
        let mut g = vec![0.0; 4];
        e.gradient(&theta, &mut g);
        for (a, b) in g.iter().zip(fd_gradient(&e, &theta)) {
            assert!((a - b).abs() < 1e-7, "{a} vs {b}");
        }
    }

    #[test]
    fn display_round_trips() {
        let e = parse("0.1*bump(rho; 0.25, 3) * x1^2 + ball(1, 0, 0, 0; 0.3) - 2*y2");
        let again = parse(&e.to_string());
        assert_eq!(e, again);
    }

    #[test]
    fn parse_errors() {
        for bad in ["", "x3", "bump(u;1,2)", "bump(rho;2,1)", "ball(1,0;0.3)", "1 +", "foo", "x1 ^", "(x1"] {
            assert!(matches!(Expr::parse(bad, 2, 1), Err(Error::Parse { .. })), "{bad}");
        }
    }

    #[test]
    fn support_queries() {
        let e = parse("bump(rho; 1, 3)*x1^2 + ball(1, 0, 0, 0; 0.3)");
        assert_eq!(e.rho_bound(), Some(3.0));
        assert!(e.outside(&[0.0, 0.0, 0.0, 1.0]));
        assert!(!e.outside(&[1.0, 0.0, 0.0, 0.0]));
        assert_eq!(parse("x1^2").rho_bound(), None);
    }
}
