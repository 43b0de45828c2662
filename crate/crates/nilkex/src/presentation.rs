//! Nilpotent presentations and their file format.
//!
//! A presentation declares generators x1..xn, a sequence of relative
//! orders (finite or `inf`), and triangular power / conjugation relations:
//!
//! ```text
//! ngens 3
//! orders inf inf inf
//! conj 1 2 : 3^-1        # x1^-1 x2 x1 = x2 x3^-1
//! conjinv 1 2 : 3^1      # x1 x2 x1^-1 = x2 x3
//! ```
//!
//! Every right-hand side may involve only generators with strictly larger
//! index, which is what makes collection terminate. Omitted conj/conjinv
//! lines mean the generators commute; an omitted pow line for a finite
//! order s_i means x_i^{s_i} = 1.
//!
//! Generator indices are 1-based in files and error messages, 0-based in
//! the API.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};
use std::fmt;
use thiserror::Error;

/// Right-hand-side tail: a normal-form word over generators with larger
/// index, stored as (generator, exponent) with strictly ascending indices.
pub type Tail = Vec<(usize, BigInt)>;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum RelativeOrder {
    Finite(BigUint),
    Infinite,
}

impl RelativeOrder {
    pub fn finite(&self) -> Option<&BigUint> {
        match self {
            RelativeOrder::Finite(s) => Some(s),
            RelativeOrder::Infinite => None,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PresentationError {
    #[error("a presentation needs at least one generator")]
    NoGenerators,
    #[error("relative order of x{0} must be at least 1")]
    ZeroOrder(usize),
    #[error("non-triangular relation: right-hand side for x{gen} involves x{offender} (index must exceed {gen})")]
    NonTriangular { gen: usize, offender: usize },
    #[error("right-hand side exponent {exp} of x{offender} is outside [0, {order}) in relation for x{gen}")]
    ExponentOutOfRange {
        gen: usize,
        offender: usize,
        exp: BigInt,
        order: BigUint,
    },
    #[error("x{offender} appears twice on a right-hand side for x{gen}")]
    DuplicateTerm { gen: usize, offender: usize },
    #[error("power relation given for x{0}, whose relative order is infinite")]
    PowerForInfinite(usize),
    #[error("generator index {0} out of range (1..={1})")]
    GeneratorOutOfRange(usize, usize),
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}, col {col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

/// A consistent nilpotent presentation defines a finitely generated
/// nilpotent group; construction validates only the relation shape, while
/// consistency itself is checked by `check_consistency`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NilpotentPresentation {
    n: usize,
    orders: Vec<RelativeOrder>,
    pow_tails: Vec<Tail>,
    /// conj_tails[i][j] for j < i: x_j^-1 x_i x_j = x_i * tail
    conj_tails: Vec<Vec<Tail>>,
    /// conj_inv_tails[i][j] for j < i: x_j x_i x_j^-1 = x_i * tail
    conj_inv_tails: Vec<Vec<Tail>>,
    /// conjugation by x_j is trivial on every higher generator
    trivial_conjugator: Vec<bool>,
}

impl NilpotentPresentation {
    pub fn new(
        orders: Vec<RelativeOrder>,
        pow_tails: Vec<Tail>,
        conj_tails: Vec<Vec<Tail>>,
        conj_inv_tails: Vec<Vec<Tail>>,
    ) -> Result<Self, PresentationError> {
        let n = orders.len();
        if n == 0 {
            return Err(PresentationError::NoGenerators);
        }
        for (i, o) in orders.iter().enumerate() {
            if let RelativeOrder::Finite(s) = o {
                if s.is_zero() {
                    return Err(PresentationError::ZeroOrder(i + 1));
                }
            }
        }
        let mut pres = NilpotentPresentation {
            n,
            orders,
            pow_tails,
            conj_tails,
            conj_inv_tails,
            trivial_conjugator: vec![true; n],
        };
        pres.pow_tails.resize(n, Vec::new());
        pres.conj_tails.resize(n, Vec::new());
        pres.conj_inv_tails.resize(n, Vec::new());
        for i in 0..n {
            pres.conj_tails[i].resize(i, Vec::new());
            pres.conj_inv_tails[i].resize(i, Vec::new());
        }
        for i in 0..n {
            if !pres.pow_tails[i].is_empty() && pres.orders[i].finite().is_none() {
                return Err(PresentationError::PowerForInfinite(i + 1));
            }
            pres.pow_tails[i] =
                validate_tail(&pres.orders, i, std::mem::take(&mut pres.pow_tails[i]))?;
            for j in 0..i {
                pres.conj_tails[i][j] =
                    validate_tail(&pres.orders, i, std::mem::take(&mut pres.conj_tails[i][j]))?;
                pres.conj_inv_tails[i][j] = validate_tail(
                    &pres.orders,
                    i,
                    std::mem::take(&mut pres.conj_inv_tails[i][j]),
                )?;
            }
        }
        for j in 0..n {
            pres.trivial_conjugator[j] = (j + 1..n)
                .all(|i| pres.conj_tails[i][j].is_empty() && pres.conj_inv_tails[i][j].is_empty());
        }
        Ok(pres)
    }

    pub fn n_gens(&self) -> usize {
        self.n
    }

    pub fn order(&self, i: usize) -> &RelativeOrder {
        &self.orders[i]
    }

    pub fn orders(&self) -> &[RelativeOrder] {
        &self.orders
    }

    pub(crate) fn pow_tail(&self, i: usize) -> &Tail {
        &self.pow_tails[i]
    }

    pub(crate) fn conj_tail(&self, i: usize, j: usize) -> &Tail {
        &self.conj_tails[i][j]
    }

    pub(crate) fn conj_inv_tail(&self, i: usize, j: usize) -> &Tail {
        &self.conj_inv_tails[i][j]
    }

    pub(crate) fn trivial_conjugator(&self, j: usize) -> bool {
        self.trivial_conjugator[j]
    }

    /// True when every relative order is infinite; such groups are
    /// poly-(infinite cyclic) and in particular torsion-free.
    pub fn torsion_free(&self) -> bool {
        self.orders
            .iter()
            .all(|o| matches!(o, RelativeOrder::Infinite))
    }

    /// Group order: the product of the relative orders when all are finite.
    pub fn group_order(&self) -> Option<BigUint> {
        self.orders
            .iter()
            .map(|o| o.finite().cloned())
            .product::<Option<BigUint>>()
    }

    /// The Heisenberg group: three infinite-order generators with
    /// [x1, x2] = x3 central.
    pub fn heisenberg() -> Self {
        let inf = RelativeOrder::Infinite;
        NilpotentPresentation::new(
            vec![inf.clone(), inf.clone(), inf],
            vec![],
            vec![
                vec![],
                vec![vec![(2, BigInt::from(-1))]],
                vec![vec![], vec![]],
            ],
            vec![
                vec![],
                vec![vec![(2, BigInt::from(1))]],
                vec![vec![], vec![]],
            ],
        )
        .expect("built-in presentation is well-formed")
    }

    /// Cyclic group of order m on a single generator.
    pub fn cyclic(m: BigUint) -> Self {
        NilpotentPresentation::new(vec![RelativeOrder::Finite(m)], vec![vec![]], vec![], vec![])
            .expect("built-in presentation is well-formed")
    }

    /// Heisenberg group over Z_p: the relations of `heisenberg` plus
    /// x_i^p = 1. Consistent for every prime p (order p^3).
    pub fn heisenberg_mod(p: BigUint) -> Self {
        let o = RelativeOrder::Finite(p.clone());
        let minus_one = BigInt::from(p) - 1;
        NilpotentPresentation::new(
            vec![o.clone(), o.clone(), o],
            vec![vec![], vec![], vec![]],
            vec![vec![], vec![vec![(2, minus_one)]], vec![vec![], vec![]]],
            vec![vec![], vec![vec![(2, BigInt::one())]], vec![vec![], vec![]]],
        )
        .expect("built-in presentation is well-formed")
    }

    /// Parse the presentation file format.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut ngens: Option<usize> = None;
        let mut orders: Option<Vec<RelativeOrder>> = None;
        let mut pow_tails: Vec<Tail> = Vec::new();
        let mut conj_tails: Vec<Vec<Tail>> = Vec::new();
        let mut conj_inv_tails: Vec<Vec<Tail>> = Vec::new();
        let mut pow_seen: Vec<bool> = Vec::new();
        let mut conj_seen: Vec<Vec<bool>> = Vec::new();
        let mut conj_inv_seen: Vec<Vec<bool>> = Vec::new();
        let mut last_line = 0;

        for (lineno, raw) in text.lines().enumerate() {
            let lineno = lineno + 1;
            last_line = lineno;
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            };
            let toks = tokens_with_cols(line);
            if toks.is_empty() {
                continue;
            }
            let (head, head_col) = toks[0];
            let err = |col: usize, msg: String| ParseError {
                line: lineno,
                col,
                msg,
            };
            match head {
                "ngens" => {
                    if ngens.is_some() {
                        return Err(err(head_col, "duplicate ngens line".into()));
                    }
                    let (tok, col) = *toks
                        .get(1)
                        .ok_or_else(|| err(head_col, "expected `ngens <n>`".into()))?;
                    let n: usize = tok
                        .parse()
                        .map_err(|_| err(col, format!("bad generator count `{tok}`")))?;
                    if n == 0 {
                        return Err(err(col, "generator count must be positive".into()));
                    }
                    ngens = Some(n);
                    pow_tails = vec![Vec::new(); n];
                    conj_tails = (0..n).map(|i| vec![Vec::new(); i]).collect();
                    conj_inv_tails = (0..n).map(|i| vec![Vec::new(); i]).collect();
                    pow_seen = vec![false; n];
                    conj_seen = (0..n).map(|i| vec![false; i]).collect();
                    conj_inv_seen = (0..n).map(|i| vec![false; i]).collect();
                }
                "orders" => {
                    let n = ngens.ok_or_else(|| err(head_col, "orders before ngens".into()))?;
                    if orders.is_some() {
                        return Err(err(head_col, "duplicate orders line".into()));
                    }
                    if toks.len() != n + 1 {
                        return Err(err(
                            head_col,
                            format!("expected {n} relative orders, got {}", toks.len() - 1),
                        ));
                    }
                    let mut parsed = Vec::with_capacity(n);
                    for &(tok, col) in &toks[1..] {
                        if tok == "inf" {
                            parsed.push(RelativeOrder::Infinite);
                        } else {
                            let s: BigUint = tok
                                .parse()
                                .map_err(|_| err(col, format!("bad relative order `{tok}`")))?;
                            if s.is_zero() {
                                return Err(err(col, "relative order must be positive".into()));
                            }
                            parsed.push(RelativeOrder::Finite(s));
                        }
                    }
                    orders = Some(parsed);
                }
                "pow" | "conj" | "conjinv" => {
                    let n = ngens.ok_or_else(|| err(head_col, "relation before ngens".into()))?;
                    let ords = orders
                        .as_ref()
                        .ok_or_else(|| err(head_col, "relation before orders".into()))?;
                    let index_args = if head == "pow" { 1 } else { 2 };
                    if toks.len() < index_args + 2 || toks[index_args + 1].0 != ":" {
                        return Err(err(
                            head_col,
                            format!(
                                "expected `{head} {} : <terms>`",
                                if head == "pow" { "i" } else { "j i" }
                            ),
                        ));
                    }
                    let mut idx = [0usize; 2];
                    for a in 0..index_args {
                        let (tok, col) = toks[a + 1];
                        let v: usize = tok
                            .parse()
                            .map_err(|_| err(col, format!("bad generator index `{tok}`")))?;
                        if v == 0 || v > n {
                            return Err(err(
                                col,
                                format!("generator index {v} out of range 1..={n}"),
                            ));
                        }
                        idx[a] = v;
                    }
                    let mut tail: Tail = Vec::new();
                    for &(tok, col) in &toks[index_args + 2..] {
                        let (g, e) = parse_term(tok).map_err(|msg| err(col, msg))?;
                        if g == 0 || g > n {
                            return Err(err(
                                col,
                                format!("generator index {g} out of range 1..={n}"),
                            ));
                        }
                        tail.push((g - 1, e));
                    }
                    match head {
                        "pow" => {
                            let i = idx[0] - 1;
                            if ords[i].finite().is_none() {
                                return Err(err(
                                    toks[1].1,
                                    format!("pow relation for x{} but its order is inf", idx[0]),
                                ));
                            }
                            if pow_seen[i] {
                                return Err(err(
                                    head_col,
                                    format!("duplicate pow relation for x{}", idx[0]),
                                ));
                            }
                            pow_seen[i] = true;
                            pow_tails[i] = tail;
                        }
                        _ => {
                            let (j, i) = (idx[0] - 1, idx[1] - 1);
                            if j >= i {
                                return Err(err(
                                    toks[1].1,
                                    format!(
                                        "non-triangular relation: conjugator index {} must be below {}",
                                        idx[0], idx[1]
                                    ),
                                ));
                            }
                            let (seen, tails) = if head == "conj" {
                                (&mut conj_seen, &mut conj_tails)
                            } else {
                                (&mut conj_inv_seen, &mut conj_inv_tails)
                            };
                            if seen[i][j] {
                                return Err(err(
                                    head_col,
                                    format!(
                                        "duplicate {head} relation for pair {} {}",
                                        idx[0], idx[1]
                                    ),
                                ));
                            }
                            seen[i][j] = true;
                            tails[i][j] = tail;
                        }
                    }
                }
                other => {
                    return Err(err(head_col, format!("unknown directive `{other}`")));
                }
            }
        }

        let Some(_) = ngens else {
            return Err(ParseError {
                line: last_line.max(1),
                col: 1,
                msg: "missing ngens line".into(),
            });
        };
        let Some(orders) = orders else {
            return Err(ParseError {
                line: last_line.max(1),
                col: 1,
                msg: "missing orders line".into(),
            });
        };
        NilpotentPresentation::new(orders, pow_tails, conj_tails, conj_inv_tails).map_err(|e| {
            ParseError {
                line: last_line.max(1),
                col: 1,
                msg: e.to_string(),
            }
        })
    }

    /// Deterministic canonical emitter: header, orders, then pow / conj /
    /// conjinv lines with nontrivial right-hand sides, sorted by (i, j).
    pub fn emit(&self) -> String {
        let mut out = format!("ngens {}\n", self.n);
        out.push_str("orders");
        for o in &self.orders {
            match o {
                RelativeOrder::Infinite => out.push_str(" inf"),
                RelativeOrder::Finite(s) => out.push_str(&format!(" {s}")),
            }
        }
        out.push('\n');
        for i in 0..self.n {
            if !self.pow_tails[i].is_empty() {
                out.push_str(&format!(
                    "pow {} :{}\n",
                    i + 1,
                    emit_tail(&self.pow_tails[i])
                ));
            }
        }
        for i in 0..self.n {
            for j in 0..i {
                if !self.conj_tails[i][j].is_empty() {
                    out.push_str(&format!(
                        "conj {} {} :{}\n",
                        j + 1,
                        i + 1,
                        emit_tail(&self.conj_tails[i][j])
                    ));
                }
            }
        }
        for i in 0..self.n {
            for j in 0..i {
                if !self.conj_inv_tails[i][j].is_empty() {
                    out.push_str(&format!(
                        "conjinv {} {} :{}\n",
                        j + 1,
                        i + 1,
                        emit_tail(&self.conj_inv_tails[i][j])
                    ));
                }
            }
        }
        out
    }
}

fn validate_tail(
    orders: &[RelativeOrder],
    gen: usize,
    mut tail: Tail,
) -> Result<Tail, PresentationError> {
    let n = orders.len();
    tail.retain(|(_, e)| !e.is_zero());
    tail.sort_by_key(|(k, _)| *k);
    for w in tail.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(PresentationError::DuplicateTerm {
                gen: gen + 1,
                offender: w[0].0 + 1,
            });
        }
    }
    for (k, e) in &tail {
        if *k >= n {
            return Err(PresentationError::GeneratorOutOfRange(k + 1, n));
        }
        if *k <= gen {
            return Err(PresentationError::NonTriangular {
                gen: gen + 1,
                offender: k + 1,
            });
        }
        if let RelativeOrder::Finite(s) = &orders[*k] {
            if e.is_negative() || e.magnitude() >= s {
                return Err(PresentationError::ExponentOutOfRange {
                    gen: gen + 1,
                    offender: k + 1,
                    exp: e.clone(),
                    order: s.clone(),
                });
            }
        }
    }
    Ok(tail)
}

fn emit_tail(tail: &Tail) -> String {
    let mut s = String::new();
    for (k, e) in tail {
        s.push_str(&format!(" {}^{}", k + 1, e));
    }
    s
}

fn parse_term(tok: &str) -> Result<(usize, BigInt), String> {
    let (gen, exp) = match tok.split_once('^') {
        Some((g, e)) => (g, Some(e)),
        None => (tok, None),
    };
    let g: usize = gen
        .parse()
        .map_err(|_| format!("bad term `{tok}` (expected k^e)"))?;
    let e = match exp {
        Some(e) => e
            .parse::<BigInt>()
            .map_err(|_| format!("bad exponent in `{tok}`"))?,
        None => BigInt::one(),
    };
    Ok((g, e))
}

fn tokens_with_cols(line: &str) -> Vec<(&str, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for (pos, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((&line[s..pos], s + 1));
            }
        } else if start.is_none() {
            start = Some(pos);
        }
    }
    if let Some(s) = start {
        out.push((&line[s..], s + 1));
    }
    out
}

/// Normal-form exponent vector of a group element with respect to a
/// presentation: g = x1^e1 ... xn^en.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ExponentVector {
    exps: Vec<BigInt>,
}

impl ExponentVector {
    pub fn new(exps: Vec<BigInt>) -> Self {
        ExponentVector { exps }
    }

    pub fn zero(n: usize) -> Self {
        ExponentVector {
            exps: vec![BigInt::zero(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn exponent(&self, i: usize) -> &BigInt {
        &self.exps[i]
    }

    pub fn exponents(&self) -> &[BigInt] {
        &self.exps
    }

    pub fn is_identity(&self) -> bool {
        self.exps.iter().all(|e| e.is_zero())
    }
}

impl fmt::Display for ExponentVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.exps.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

/// An unreduced word over the generators: a sequence of syllables
/// x_i^e with arbitrary integer exponents. Input syntax for collection.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Word {
    syllables: Vec<(usize, BigInt)>,
}

impl Word {
    /// Zero-exponent syllables are dropped on construction.
    pub fn new(syllables: Vec<(usize, BigInt)>) -> Self {
        Word {
            syllables: syllables
                .into_iter()
                .filter(|(_, e)| !e.is_zero())
                .collect(),
        }
    }

    pub fn empty() -> Self {
        Word::default()
    }

    pub fn push(&mut self, gen: usize, exp: BigInt) {
        if !exp.is_zero() {
            self.syllables.push((gen, exp));
        }
    }

    pub fn syllables(&self) -> &[(usize, BigInt)] {
        &self.syllables
    }

    /// The word spelling a normal form left to right.
    pub fn from_vector(v: &ExponentVector) -> Self {
        Word::new(
            v.exponents()
                .iter()
                .enumerate()
                .map(|(i, e)| (i, e.clone()))
                .collect(),
        )
    }

    /// Formal inverse: reversed syllables with negated exponents.
    pub fn inverse(&self) -> Self {
        Word {
            syllables: self.syllables.iter().rev().map(|(g, e)| (*g, -e)).collect(),
        }
    }
}
