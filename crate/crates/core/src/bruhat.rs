//! Valued fields ℚ (p-adic), ℚ(t) (t-adic) and ℚ(s,t) (rank 2), and SL₂
//! translation lengths on the associated Bruhat–Tits trees.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::groups::{Alphabet, GroupError, Letter, Word};
use crate::isometry::{certify_free_on_ball, Certificate, LengthOracle, TrivialityOracle};
use crate::ordgroup::{format_rat, parse_rat, LexValue, OrdError, Rat};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BruhatError {
    #[error("determinant is {0}, expected 1")]
    Determinant(String),
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("entry {0:?} does not belong to the field {1}")]
    WrongField(String, Field),
    #[error("malformed entry: {0}")]
    BadEntry(String),
    #[error("generator {0:?} is undefined")]
    UnknownGenerator(String),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Ord(#[from] OrdError),
}

/// Monomial `t^t s^s`. Ordering is lexicographic with `t` dominant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mono {
    pub t: i64,
    pub s: i64,
}

impl Mono {
    pub const ONE: Mono = Mono { t: 0, s: 0 };

    fn mul(self, o: Mono) -> Mono {
        Mono { t: self.t + o.t, s: self.s + o.s }
    }

    fn divides(self, o: Mono) -> bool {
        self.t <= o.t && self.s <= o.s
    }

    fn div(self, o: Mono) -> Mono {
        Mono { t: self.t - o.t, s: self.s - o.s }
    }

    fn min(self, o: Mono) -> Mono {
        Mono { t: self.t.min(o.t), s: self.s.min(o.s) }
    }

    fn key(self) -> String {
        let part = |v: &str, e: i64| match e {
            0 => None,
            1 => Some(v.to_string()),
            _ => Some(format!("{v}^{e}")),
        };
        let parts: Vec<String> = [part("s", self.s), part("t", self.t)].into_iter().flatten().collect();
        if parts.is_empty() {
            "1".into()
        } else {
            parts.join(" ")
        }
    }

    fn parse(key: &str) -> Result<Mono, BruhatError> {
        let mut m = Mono::ONE;
        for f in key.split(|c: char| c.is_whitespace() || c == '*').filter(|f| !f.is_empty()) {
            if f == "1" {
                continue;
            }
            let (var, exp) = match f.split_once('^') {
                Some((v, e)) => (v, e.parse::<i64>().map_err(|_| BruhatError::BadEntry(key.into()))?),
                None => (f, 1),
            };
            match var {
                "t" => m.t += exp,
                "s" => m.s += exp,
                _ => return Err(BruhatError::BadEntry(key.into())),
            }
        }
        Ok(m)
    }
}

/// Sparse polynomial over ℚ in `s, t`; exponents may be negative.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Poly(BTreeMap<Mono, Rat>);

impl Poly {
    pub fn zero() -> Self {
        Poly(BTreeMap::new())
    }

    pub fn constant(c: Rat) -> Self {
        Self::term(Mono::ONE, c)
    }

    pub fn term(m: Mono, c: Rat) -> Self {
        let mut p = BTreeMap::new();
        if !c.is_zero() {
            p.insert(m, c);
        }
        Poly(p)
    }

    pub fn t() -> Self {
        Self::term(Mono { t: 1, s: 0 }, Rat::one())
    }

    pub fn s() -> Self {
        Self::term(Mono { t: 0, s: 1 }, Rat::one())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mono, &Rat)> {
        self.0.iter()
    }

    pub fn leading(&self) -> Option<(Mono, &Rat)> {
        self.0.last_key_value().map(|(m, c)| (*m, c))
    }

    /// Lowest monomial in the `t`-dominant order.
    pub fn lowest(&self) -> Option<Mono> {
        self.0.first_key_value().map(|(m, _)| *m)
    }

    pub fn as_constant(&self) -> Option<Rat> {
        match self.0.len() {
            0 => Some(Rat::zero()),
            1 => self.0.get(&Mono::ONE).cloned(),
            _ => None,
        }
    }

    pub fn uses_s(&self) -> bool {
        self.0.keys().any(|m| m.s != 0)
    }

    fn add_term(&mut self, m: Mono, c: Rat) {
        let e = self.0.entry(m).or_insert_with(Rat::zero);
        *e += c;
        if e.is_zero() {
            self.0.remove(&m);
        }
    }

    fn scale(&self, c: &Rat) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly(self.0.iter().map(|(m, x)| (*m, x * c)).collect())
    }

    fn shift(&self, by: Mono) -> Poly {
        Poly(self.0.iter().map(|(m, x)| (m.mul(by), x.clone())).collect())
    }

    fn min_mono(&self) -> Option<Mono> {
        self.0.keys().copied().reduce(Mono::min)
    }

    fn t_degree(&self) -> i64 {
        self.0.keys().map(|m| m.t).max().unwrap_or(0)
    }

    /// Coefficient of `t^k` as a polynomial in `s`.
    fn t_coeff(&self, k: i64) -> Poly {
        Poly(self.0.iter().filter(|(m, _)| m.t == k).map(|(m, c)| (Mono { t: 0, s: m.s }, c.clone())).collect())
    }

    fn monic(&self) -> Poly {
        match self.leading() {
            None => Poly::zero(),
            Some((_, c)) => self.scale(&(Rat::one() / c)),
        }
    }

    /// Division in the `t`-dominant lexicographic order; exponents must be non-negative.
    fn divrem(&self, b: &Poly) -> (Poly, Poly) {
        let (lm, lc) = b.leading().expect("division by zero polynomial");
        let lc = lc.clone();
        let mut p = self.clone();
        let mut q = Poly::zero();
        let mut r = Poly::zero();
        while let Some((m, c)) = p.leading() {
            let c = c.clone();
            if lm.divides(m) {
                let f = Poly::term(m.div(lm), &c / &lc);
                p = &p - &(&f * b);
                q = &q + &f;
            } else {
                p.add_term(m, -c.clone());
                r.add_term(m, c);
            }
        }
        (q, r)
    }

    fn div_exact(&self, b: &Poly) -> Poly {
        let (q, r) = self.divrem(b);
        debug_assert!(r.is_zero(), "inexact polynomial division");
        q
    }

    fn gcd_s(a: &Poly, b: &Poly) -> Poly {
        let (mut a, mut b) = (a.clone(), b.clone());
        while !b.is_zero() {
            let r = a.divrem(&b).1;
            a = b;
            b = r;
        }
        a.monic()
    }

    fn content_t(&self) -> Poly {
        let mut g = Poly::zero();
        for k in 0..=self.t_degree() {
            let c = self.t_coeff(k);
            if !c.is_zero() {
                g = Self::gcd_s(&g, &c);
            }
        }
        g
    }

    fn primitive_t(&self) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        self.div_exact(&self.content_t())
    }

    /// Primitive part of the pseudo-remainder of `f` by `g` in `t`.
    fn prem_t(f: &Poly, g: &Poly) -> Poly {
        let dg = g.t_degree();
        let lg = g.t_coeff(dg);
        let mut r = f.clone();
        while !r.is_zero() && r.t_degree() >= dg {
            let dr = r.t_degree();
            let lr = r.t_coeff(dr);
            // rescaling by elements of Q[s] leaves the primitive part of the remainder unchanged
            r = (&(&r * &lg) - (&(&lr * g).shift(Mono { t: dr - dg, s: 0 }))).primitive_t();
        }
        r
    }

    fn eval_s(&self, s0: &Rat) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.0 {
            out.add_term(Mono { t: m.t, s: 0 }, c * s0.pow(m.s as i32));
        }
        out
    }

    /// Sufficient test for `gcd(f, g)` to be free of `t`: a common factor of positive
    /// `t`-degree survives any specialization of `s` that keeps both leading coefficients.
    fn coprime_by_specialization(f: &Poly, g: &Poly) -> bool {
        let (lf, lg) = (f.t_coeff(f.t_degree()), g.t_coeff(g.t_degree()));
        for k in 1..=12i64 {
            let s0 = Rat::from_integer(BigInt::from(k));
            if lf.eval_s(&s0).is_zero() || lg.eval_s(&s0).is_zero() {
                continue;
            }
            let h = Self::gcd_s(&f.eval_s(&s0), &g.eval_s(&s0));
            return h.t_degree() == 0;
        }
        false
    }

    /// Monic gcd of polynomials with non-negative exponents.
    pub fn gcd(a: &Poly, b: &Poly) -> Poly {
        if a.is_zero() {
            return b.monic();
        }
        if b.is_zero() {
            return a.monic();
        }
        if a.t_degree() == 0 && b.t_degree() == 0 {
            return Self::gcd_s(a, b);
        }
        let c = Self::gcd_s(&a.content_t(), &b.content_t());
        let (mut f, mut g) = (a.primitive_t(), b.primitive_t());
        if Self::coprime_by_specialization(&f, &g) {
            return c;
        }
        if f.t_degree() < g.t_degree() {
            std::mem::swap(&mut f, &mut g);
        }
        while !g.is_zero() {
            let r = Self::prem_t(&f, &g).primitive_t();
            f = g;
            g = r;
        }
        (&c * &f.primitive_t()).monic()
    }

    fn to_map(&self) -> BTreeMap<String, String> {
        self.0.iter().map(|(m, c)| (m.key(), format_rat(c))).collect()
    }

    fn from_map(map: &serde_json::Map<String, Value>) -> Result<Poly, BruhatError> {
        let mut p = Poly::zero();
        for (k, v) in map {
            let c = match v {
                Value::String(s) => parse_rat(s)?,
                Value::Number(n) => parse_rat(&n.to_string())?,
                _ => return Err(BruhatError::BadEntry(v.to_string())),
            };
            p.add_term(Mono::parse(k)?, c);
        }
        Ok(p)
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, o: &Poly) -> Poly {
        let mut p = self.clone();
        for (m, c) in &o.0 {
            p.add_term(*m, c.clone());
        }
        p
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, o: &Poly) -> Poly {
        let mut p = self.clone();
        for (m, c) in &o.0 {
            p.add_term(*m, -c.clone());
        }
        p
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, o: &Poly) -> Poly {
        let mut p = Poly::zero();
        for (m1, c1) in &self.0 {
            for (m2, c2) in &o.0 {
                p.add_term(m1.mul(*m2), c1 * c2);
            }
        }
        p
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|(m, c)| if *m == Mono::ONE { format_rat(c) } else { format!("{}*{}", format_rat(c), m.key()) })
            .collect();
        f.write_str(&parts.join(" + "))
    }
}

/// Reduced fraction `num / den`: coprime, non-negative exponents, monic denominator.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Frac {
    num: Poly,
    den: Poly,
}

impl Frac {
    pub fn new(num: Poly, den: Poly) -> Result<Self, BruhatError> {
        if den.is_zero() {
            return Err(BruhatError::ZeroDenominator);
        }
        if num.is_zero() {
            return Ok(Frac { num, den: Poly::constant(Rat::one()) });
        }
        let lo = num.min_mono().unwrap().min(den.min_mono().unwrap());
        let lift = Mono { t: -lo.t, s: -lo.s };
        let (mut num, mut den) = (num.shift(lift), den.shift(lift));
        if den.0.len() == 1 {
            // monomial denominator: cancel the common monomial only
            let common = num.min_mono().unwrap().min(den.min_mono().unwrap());
            let drop = Mono { t: -common.t, s: -common.s };
            num = num.shift(drop);
            den = den.shift(drop);
        } else {
            let g = Poly::gcd(&num, &den);
            num = num.div_exact(&g);
            den = den.div_exact(&g);
        }
        let lc = den.leading().unwrap().1.clone();
        let inv = Rat::one() / lc;
        Ok(Frac { num: num.scale(&inv), den: den.scale(&inv) })
    }

    pub fn from_poly(p: Poly) -> Self {
        Self::new(p, Poly::constant(Rat::one())).unwrap()
    }

    pub fn rational(q: Rat) -> Self {
        Frac { num: Poly::constant(q), den: Poly::constant(Rat::one()) }
    }

    pub fn int(n: i64) -> Self {
        Self::rational(Rat::from_integer(BigInt::from(n)))
    }

    pub fn zero() -> Self {
        Self::int(0)
    }

    pub fn one() -> Self {
        Self::int(1)
    }

    /// `c · t^t · s^s`.
    pub fn monomial(c: i64, t: i64, s: i64) -> Self {
        Self::from_poly(Poly::term(Mono { t, s }, Rat::from_integer(BigInt::from(c))))
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn as_rational(&self) -> Option<Rat> {
        Some(self.num.as_constant()? / self.den.as_constant()?)
    }

    pub fn uses_s(&self) -> bool {
        self.num.uses_s() || self.den.uses_s()
    }

    pub fn uses_t(&self) -> bool {
        self.num.0.keys().chain(self.den.0.keys()).any(|m| m.t != 0)
    }

    pub fn recip(&self) -> Result<Frac, BruhatError> {
        Frac::new(self.den.clone(), self.num.clone())
    }

    /// Laurent polynomial form, when the denominator is a monomial.
    pub fn as_laurent(&self) -> Option<Poly> {
        if self.den.0.len() != 1 {
            return None;
        }
        let (m, c) = self.den.leading().unwrap();
        Some(self.num.shift(Mono { t: -m.t, s: -m.s }).scale(&(Rat::one() / c)))
    }

    pub fn to_json(&self) -> Value {
        if let Some(q) = self.as_rational() {
            return Value::String(format_rat(&q));
        }
        match self.as_laurent() {
            Some(p) => serde_json::to_value(p.to_map()).unwrap(),
            None => serde_json::json!({ "num": self.num.to_map(), "den": self.den.to_map() }),
        }
    }

    pub fn from_json(v: &Value) -> Result<Frac, BruhatError> {
        match v {
            Value::String(s) => Ok(Frac::rational(parse_rat(s)?)),
            Value::Number(n) => Ok(Frac::rational(parse_rat(&n.to_string())?)),
            Value::Object(map) if map.contains_key("num") => {
                let part = |k: &str| match map.get(k) {
                    Some(Value::Object(m)) => Poly::from_map(m),
                    None if k == "den" => Ok(Poly::constant(Rat::one())),
                    _ => Err(BruhatError::BadEntry(v.to_string())),
                };
                Frac::new(part("num")?, part("den")?)
            }
            Value::Object(map) => Ok(Frac::from_poly(Poly::from_map(map)?)),
            _ => Err(BruhatError::BadEntry(v.to_string())),
        }
    }
}

impl Add for &Frac {
    type Output = Frac;
    fn add(self, o: &Frac) -> Frac {
        Frac::new(&(&self.num * &o.den) + &(&o.num * &self.den), &self.den * &o.den).unwrap()
    }
}

impl Sub for &Frac {
    type Output = Frac;
    fn sub(self, o: &Frac) -> Frac {
        Frac::new(&(&self.num * &o.den) - &(&o.num * &self.den), &self.den * &o.den).unwrap()
    }
}

impl Mul for &Frac {
    type Output = Frac;
    fn mul(self, o: &Frac) -> Frac {
        Frac::new(&self.num * &o.num, &self.den * &o.den).unwrap()
    }
}

impl Neg for &Frac {
    type Output = Frac;
    fn neg(self) -> Frac {
        Frac { num: self.num.scale(&-Rat::one()), den: self.den.clone() }
    }
}

impl fmt::Display for Frac {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.as_constant().is_some_and(|c| c.is_one()) {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({}) / ({})", self.num, self.den)
        }
    }
}

/// Field together with its valuation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Field {
    /// ℚ with the p-adic valuation.
    Qp(u64),
    /// ℚ(t) with the t-adic valuation.
    Qt,
    /// ℚ(s,t) with `v = (ord_t, ord_s of the lowest t-coefficient)`.
    Qst,
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Qp(p) => write!(f, "Q_{p}"),
            Field::Qt => f.write_str("Q(t)"),
            Field::Qst => f.write_str("Q(s,t)"),
        }
    }
}

impl Field {
    pub fn qp(p: u64) -> Result<Self, BruhatError> {
        let prime = p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| !p.is_multiple_of(d));
        if prime {
            Ok(Field::Qp(p))
        } else {
            Err(BruhatError::NotPrime(p))
        }
    }

    pub fn rank(&self) -> usize {
        match self {
            Field::Qst => 2,
            _ => 1,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Field::Qp(_) => "Qp",
            Field::Qt => "Qt",
            Field::Qst => "Qst",
        }
    }

    pub fn admits(&self, x: &Frac) -> bool {
        match self {
            Field::Qp(_) => x.as_rational().is_some(),
            Field::Qt => !x.uses_s(),
            Field::Qst => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Valuation {
    Finite(LexValue),
    Infinity,
}

impl Valuation {
    pub fn finite(&self) -> Option<&LexValue> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::Infinity => None,
        }
    }
}

impl PartialOrd for Valuation {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Valuation {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        use std::cmp::Ordering::*;
        match (self, other) {
            (Valuation::Infinity, Valuation::Infinity) => Equal,
            (Valuation::Infinity, _) => Greater,
            (_, Valuation::Infinity) => Less,
            (Valuation::Finite(a), Valuation::Finite(b)) => a.cmp(b),
        }
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(v) => write!(f, "{v}"),
            Valuation::Infinity => f.write_str("inf"),
        }
    }
}

fn padic_order(n: &BigInt, p: u64) -> i64 {
    let p = BigInt::from(p);
    let mut n = n.abs();
    let mut k = 0;
    while (&n % &p).is_zero() {
        n /= &p;
        k += 1;
    }
    k
}

/// An element of one of the supported valued fields.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValuedElement {
    pub field: Field,
    pub value: Frac,
}

impl ValuedElement {
    pub fn new(field: Field, value: Frac) -> Result<Self, BruhatError> {
        if !field.admits(&value) {
            return Err(BruhatError::WrongField(value.to_string(), field));
        }
        Ok(ValuedElement { field, value })
    }

    pub fn valuation(&self) -> Valuation {
        valuation(self.field, &self.value)
    }
}

pub fn valuation(field: Field, x: &Frac) -> Valuation {
    if x.is_zero() {
        return Valuation::Infinity;
    }
    match field {
        Field::Qp(p) => {
            let q = x.as_rational().expect("p-adic elements are rational");
            let v = padic_order(q.numer(), p) - padic_order(q.denom(), p);
            Valuation::Finite(LexValue::ints(&[v]))
        }
        Field::Qt => {
            let v = x.num.lowest().unwrap().t - x.den.lowest().unwrap().t;
            Valuation::Finite(LexValue::ints(&[v]))
        }
        Field::Qst => {
            let (a, b) = (x.num.lowest().unwrap(), x.den.lowest().unwrap());
            Valuation::Finite(LexValue::ints(&[a.t - b.t, a.s - b.s]))
        }
    }
}

/// Determinant-one 2×2 matrix `[[a, b], [c, d]]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mat2 {
    field: Field,
    e: [Frac; 4],
}

impl Mat2 {
    pub fn new(field: Field, a: Frac, b: Frac, c: Frac, d: Frac) -> Result<Self, BruhatError> {
        for x in [&a, &b, &c, &d] {
            if !field.admits(x) {
                return Err(BruhatError::WrongField(x.to_string(), field));
            }
        }
        let det = &(&a * &d) - &(&b * &c);
        if det != Frac::one() {
            return Err(BruhatError::Determinant(det.to_string()));
        }
        Ok(Mat2 { field, e: [a, b, c, d] })
    }

    pub fn ints(field: Field, m: [[i64; 2]; 2]) -> Result<Self, BruhatError> {
        Self::new(field, Frac::int(m[0][0]), Frac::int(m[0][1]), Frac::int(m[1][0]), Frac::int(m[1][1]))
    }

    pub fn identity(field: Field) -> Self {
        Mat2 { field, e: [Frac::one(), Frac::zero(), Frac::zero(), Frac::one()] }
    }

    /// `diag(x, x⁻¹)`.
    pub fn diagonal(field: Field, x: Frac) -> Result<Self, BruhatError> {
        let inv = x.recip()?;
        Self::new(field, x, Frac::zero(), Frac::zero(), inv)
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn entries(&self) -> &[Frac; 4] {
        &self.e
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        let [a, b, c, d] = &self.e;
        let [p, q, r, s] = &o.e;
        Mat2 {
            field: self.field,
            e: [&(a * p) + &(b * r), &(a * q) + &(b * s), &(c * p) + &(d * r), &(c * q) + &(d * s)],
        }
    }

    pub fn inverse(&self) -> Mat2 {
        let [a, b, c, d] = &self.e;
        Mat2 { field: self.field, e: [d.clone(), -b, -c, a.clone()] }
    }

    pub fn pow(&self, k: i64) -> Mat2 {
        let base = if k < 0 { self.inverse() } else { self.clone() };
        (0..k.unsigned_abs()).fold(Mat2::identity(self.field), |acc, _| acc.mul(&base))
    }

    pub fn trace(&self) -> Frac {
        &self.e[0] + &self.e[3]
    }

    pub fn is_identity(&self) -> bool {
        *self == Mat2::identity(self.field)
    }

    pub fn to_json(&self) -> Value {
        let [a, b, c, d] = &self.e;
        serde_json::json!([[a.to_json(), b.to_json()], [c.to_json(), d.to_json()]])
    }
}

/// `max(0, -2 v(Tr m))`; a zero trace gives 0.
pub fn bt_translation_length(m: &Mat2) -> LexValue {
    let rank = m.field.rank();
    match valuation(m.field, &m.trace()) {
        Valuation::Infinity => LexValue::zero(rank),
        Valuation::Finite(v) => {
            let l = &(-&v) + &(-&v);
            l.max(LexValue::zero(rank))
        }
    }
}

/// Labelled generators in SL₂ of a common field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatrixGroup {
    field: Field,
    alphabet: Alphabet,
    gens: Vec<Mat2>,
    invs: Vec<Mat2>,
}

impl MatrixGroup {
    pub fn new(field: Field, alphabet: Alphabet, gens: Vec<Mat2>) -> Result<Self, BruhatError> {
        if gens.len() != alphabet.len() {
            return Err(BruhatError::BadEntry("one matrix per generator label".into()));
        }
        if let Some(m) = gens.iter().find(|m| m.field != field) {
            return Err(BruhatError::WrongField(m.trace().to_string(), field));
        }
        let invs = gens.iter().map(Mat2::inverse).collect();
        Ok(MatrixGroup { field, alphabet, gens, invs })
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn generators(&self) -> &[Mat2] {
        &self.gens
    }

    pub fn evaluate(&self, w: &Word) -> Mat2 {
        w.letters().iter().fold(Mat2::identity(self.field), |acc, l| {
            acc.mul(if l.inv { &self.invs[l.gen] } else { &self.gens[l.gen] })
        })
    }

    pub fn is_trivial(&self, w: &Word) -> bool {
        self.evaluate(w).is_identity()
    }

    pub fn length(&self, w: &Word) -> LexValue {
        bt_translation_length(&self.evaluate(w))
    }

    pub fn to_doc(&self) -> MatrixGroupDoc {
        MatrixGroupDoc {
            schema: Some(crate::cli::SCHEMA.to_string()),
            field: self.field.name().to_string(),
            p: match self.field {
                Field::Qp(p) => Some(p),
                _ => None,
            },
            generators: self
                .alphabet
                .labels()
                .iter()
                .zip(&self.gens)
                .map(|(c, m)| (c.to_string(), m.to_json()))
                .collect(),
        }
    }
}

/// `{"field": "Qp"|"Qt"|"Qst", "p": ..., "generators": {"a": [[..],[..]], ...}}`.
/// Generator labels are single characters, ordered alphabetically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixGroupDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    pub field: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<u64>,
    pub generators: BTreeMap<String, Value>,
}

impl MatrixGroupDoc {
    pub fn field(&self) -> Result<Field, BruhatError> {
        match self.field.as_str() {
            "Qp" => Field::qp(self.p.ok_or_else(|| BruhatError::BadEntry("field Qp needs \"p\"".into()))?),
            "Qt" => Ok(Field::Qt),
            "Qst" => Ok(Field::Qst),
            other => Err(BruhatError::BadEntry(format!("unknown field {other:?}"))),
        }
    }

    pub fn build(&self) -> Result<MatrixGroup, BruhatError> {
        let field = self.field()?;
        let labels: Vec<&str> = self.generators.keys().map(String::as_str).collect();
        let alphabet = Alphabet::from_strs(&labels)?;
        let mut gens = Vec::new();
        for (label, v) in &self.generators {
            let rows = v.as_array().filter(|r| r.len() == 2).ok_or_else(|| BruhatError::BadEntry(label.clone()))?;
            let mut e = Vec::new();
            for row in rows {
                let row = row.as_array().filter(|r| r.len() == 2).ok_or_else(|| BruhatError::BadEntry(label.clone()))?;
                for x in row {
                    e.push(Frac::from_json(x)?);
                }
            }
            let [a, b, c, d]: [Frac; 4] = e.try_into().unwrap();
            gens.push(Mat2::new(field, a, b, c, d)?);
        }
        MatrixGroup::new(field, alphabet, gens)
    }
}

/// Translation lengths and triviality of words in a matrix group.
///
/// Products over a ball can be precomputed with [`BtOracle::with_ball`]; other words are
/// evaluated on demand.
pub struct BtOracle<'a> {
    group: &'a MatrixGroup,
    ball: HashMap<Word, Mat2>,
}

impl<'a> BtOracle<'a> {
    pub fn new(group: &'a MatrixGroup) -> Self {
        BtOracle { group, ball: HashMap::new() }
    }

    /// Every reduced word of length at most `n`, each product built from its prefix.
    pub fn with_ball(group: &'a MatrixGroup, n: usize) -> Self {
        let mut ball = HashMap::new();
        let mut frontier = vec![(Word::empty(), Mat2::identity(group.field))];
        for _ in 0..n {
            let mut next = Vec::new();
            for (w, m) in &frontier {
                for g in 0..group.gens.len() {
                    for inv in [false, true] {
                        let l = Letter { gen: g, inv };
                        if w.letters().last().is_some_and(|x| x.gen == g && x.inv != inv) {
                            continue;
                        }
                        let mut v = w.letters().to_vec();
                        v.push(l);
                        let step = if inv { &group.invs[g] } else { &group.gens[g] };
                        next.push((Word(v), m.mul(step)));
                    }
                }
            }
            ball.extend(frontier);
            frontier = next;
        }
        ball.extend(frontier);
        BtOracle { group, ball }
    }

    pub fn evaluate(&self, w: &Word) -> Mat2 {
        match self.ball.get(w) {
            Some(m) => m.clone(),
            None => self.group.evaluate(w),
        }
    }
}

impl LengthOracle for BtOracle<'_> {
    fn rank(&self) -> usize {
        self.group.field.rank()
    }

    fn length(&self, w: &Word) -> Result<LexValue, String> {
        Ok(bt_translation_length(&self.evaluate(w)))
    }
}

impl TrivialityOracle for BtOracle<'_> {
    fn is_trivial(&self, w: &Word) -> bool {
        self.evaluate(w).is_identity()
    }
}

pub fn bt_length_oracle(g: &MatrixGroup) -> BtOracle<'_> {
    BtOracle::new(g)
}

/// Ball certification plus the trace valuations encountered.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BtCertificate {
    #[serde(flatten)]
    pub certificate: Certificate,
    pub trace_valuations: Vec<String>,
    /// ℚ-rank of the group generated by the finite trace valuations.
    pub value_group_rank: usize,
}

pub fn certify_free_bt(g: &MatrixGroup, n: usize) -> BtCertificate {
    let oracle = BtOracle::with_ball(g, n);
    let certificate = certify_free_on_ball(&oracle, &oracle, g.alphabet(), n);
    let mut vals = BTreeSet::new();
    for (w, m) in &oracle.ball {
        if !w.is_empty() {
            vals.insert(valuation(g.field, &m.trace()));
        }
    }
    let finite: Vec<LexValue> = vals.iter().filter_map(|v| v.finite().cloned()).collect();
    BtCertificate {
        certificate,
        trace_valuations: vals.iter().map(|v| v.to_string()).collect(),
        value_group_rank: rational_span_rank(&finite),
    }
}

fn rational_span_rank(vs: &[LexValue]) -> usize {
    let Some(first) = vs.first() else { return 0 };
    let cols = first.rank();
    let mut rows: Vec<Vec<Rat>> = vs.iter().map(|v| v.coords().to_vec()).collect();
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..rows.len()).find(|&i| !rows[i][c].is_zero()) else { continue };
        rows.swap(rank, p);
        for i in 0..rows.len() {
            if i != rank && !rows[i][c].is_zero() {
                let f = &rows[i][c] / &rows[rank][c];
                for j in 0..cols {
                    let sub = &f * &rows[rank][j];
                    rows[i][j] -= sub;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// `a = diag(t, t⁻¹)`, `c = [[1,1],[1,2]]`; generators `a^k` and `c a^k c⁻¹`.
pub fn schottky_pair(k: i64) -> MatrixGroup {
    let a = Mat2::diagonal(Field::Qt, Frac::monomial(1, 1, 0)).unwrap().pow(k);
    let c = Mat2::ints(Field::Qt, [[1, 1], [1, 2]]).unwrap();
    let b = c.mul(&a).mul(&c.inverse());
    MatrixGroup::new(Field::Qt, Alphabet::standard(2), vec![a, b]).unwrap()
}

/// Exponent of the shipped Schottky preset; the smallest `k <= 3` certified at radius 6.
pub const SCHOTTKY_K: i64 = 1;
pub const SCHOTTKY_RADIUS: usize = 6;

/// `a = diag(s, s⁻¹)`, `b = diag(t, t⁻¹)` over ℚ(s,t).
pub fn z2_diagonal() -> MatrixGroup {
    let a = Mat2::diagonal(Field::Qst, Frac::monomial(1, 0, 1)).unwrap();
    let b = Mat2::diagonal(Field::Qst, Frac::monomial(1, 1, 0)).unwrap();
    MatrixGroup::new(Field::Qst, Alphabet::standard(2), vec![a, b]).unwrap()
}

/// The unipotent `[[1,1],[0,1]]` over ℚ(t).
pub fn unipotent() -> MatrixGroup {
    let u = Mat2::ints(Field::Qt, [[1, 1], [0, 1]]).unwrap();
    MatrixGroup::new(Field::Qt, Alphabet::standard(1), vec![u]).unwrap()
}

/// Matrix-group presets by catalog name.
pub fn matrix_preset(name: &str) -> Option<MatrixGroup> {
    match name {
        "schottky-qt" => Some(schottky_pair(SCHOTTKY_K)),
        "z2-diagonal" => Some(z2_diagonal()),
        "unipotent-fail" => Some(unipotent()),
        _ => None,
    }
}

/// Hand-derived length of `diag(s^a t^b, s^-a t^-b)` for `b != 0`.
pub fn diagonal_length_law(a: i64, b: i64) -> LexValue {
    if b == 0 {
        LexValue::ints(&[0, 2 * a.abs()])
    } else {
        LexValue::ints(&[2 * b.abs(), 2 * a * b.signum()])
    }
}

pub fn lex_to_i64(v: &LexValue) -> Option<Vec<i64>> {
    v.coords().iter().map(|c| if c.is_integer() { c.numer().to_i64() } else { None }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isometry::CertStatus;
    use crate::ordgroup::rat;

    fn q(n: i64, d: i64) -> Frac {
        Frac::rational(rat(n, d))
    }

    #[test]
    fn valuation_examples() {
        assert_eq!(valuation(Field::qp(2).unwrap(), &q(8, 3)), Valuation::Finite(LexValue::ints(&[3])));
        assert_eq!(valuation(Field::Qp(3), &q(8, 9)), Valuation::Finite(LexValue::ints(&[-2])));
        let x = &Frac::monomial(1, 2, 0) + &Frac::monomial(1, 3, 0);
        assert_eq!(valuation(Field::Qt, &x), Valuation::Finite(LexValue::ints(&[2])));
        let y = &Frac::monomial(1, -1, -1) + &Frac::one();
        assert_eq!(valuation(Field::Qst, &y), Valuation::Finite(LexValue::ints(&[-1, -1])));
        assert_eq!(valuation(Field::Qt, &Frac::zero()), Valuation::Infinity);
        assert!(Field::qp(9).is_err());
    }

    #[test]
    fn translation_length_examples() {
        assert_eq!(bt_translation_length(&Mat2::identity(Field::Qt)), LexValue::ints(&[0]));
        assert_eq!(bt_translation_length(&Mat2::identity(Field::Qp(2))), LexValue::ints(&[0]));
        let d = Mat2::diagonal(Field::Qt, Frac::monomial(1, 1, 0)).unwrap();
        assert_eq!(bt_translation_length(&d), LexValue::ints(&[2]));
        assert_eq!(bt_translation_length(&d.pow(2)), LexValue::ints(&[4]));
        assert_eq!(bt_translation_length(&unipotent().generators()[0]), LexValue::ints(&[0]));
        assert!(matches!(Mat2::ints(Field::Qt, [[2, 0], [0, 1]]), Err(BruhatError::Determinant(_))));
        let rot = Mat2::ints(Field::Qt, [[0, -1], [1, 0]]).unwrap();
        assert_eq!(bt_translation_length(&rot), LexValue::ints(&[0]));
    }

    #[test]
    fn rank_two_diagonal_law() {
        for a in -3..=3 {
            for b in -3..=3 {
                if (a, b) == (0, 0) {
                    continue;
                }
                let m = Mat2::diagonal(Field::Qst, Frac::monomial(1, b, a)).unwrap();
                assert_eq!(bt_translation_length(&m), diagonal_length_law(a, b), "a={a} b={b}");
            }
        }
    }

    #[test]
    fn oracle_words() {
        let g = schottky_pair(1);
        let al = g.alphabet().clone();
        assert!(g.is_trivial(&al.parse("aa'").unwrap()));
        let z = bt_length_oracle(&g);
        assert_eq!(z.length(&al.parse("a^2").unwrap()).unwrap(), LexValue::ints(&[4]));
    }

    #[test]
    fn certify_examples() {
        let single = MatrixGroup::new(
            Field::Qt,
            Alphabet::standard(1),
            vec![Mat2::diagonal(Field::Qt, Frac::monomial(1, 1, 0)).unwrap()],
        )
        .unwrap();
        let c = certify_free_bt(&single, 6);
        assert_eq!(c.certificate.status, CertStatus::FreeOnBall);
        assert_eq!(c.trace_valuations, (1..=6).rev().map(|k| format!("(-{k})")).collect::<Vec<_>>());
        let u = certify_free_bt(&unipotent(), 1);
        assert_eq!(u.certificate.status, CertStatus::Counterexample);
        assert_eq!(u.certificate.counterexample.as_deref(), Some("a"));
    }

    #[test]
    fn schottky_exponent_is_the_first_passing() {
        let passing: Vec<i64> = (1..=3)
            .filter(|&k| certify_free_bt(&schottky_pair(k), SCHOTTKY_RADIUS).certificate.status == CertStatus::FreeOnBall)
            .collect();
        assert_eq!(passing.first(), Some(&SCHOTTKY_K));
        let c = certify_free_bt(&schottky_pair(SCHOTTKY_K), SCHOTTKY_RADIUS);
        assert!(c.value_group_rank <= 2);
    }

    #[test]
    fn gcd_and_normal_form() {
        let t = Poly::t();
        let s = Poly::s();
        let one = Poly::constant(Rat::one());
        // (t^2 - 1) / (t - 1) = t + 1
        let num = &(&t * &t) - &one;
        let f = Frac::new(num, &t - &one).unwrap();
        assert_eq!(f, Frac::from_poly(&t + &one));
        // (s t + s^2) / (s^2 + s t) = 1
        let a = &(&s * &t) + &(&s * &s);
        let b = &(&s * &s) + &(&t * &s);
        assert_eq!(Frac::new(a, b).unwrap(), Frac::one());
        // (s + t)^2 / ((s + t)(s - t)) = (s + t) / (s - t)
        let p = &s + &t;
        let m = &s - &t;
        let f = Frac::new(&p * &p, &p * &m).unwrap();
        assert_eq!(&f * &Frac::from_poly(m.clone()), Frac::from_poly(p.clone()));
        assert_eq!(Poly::gcd(&(&p * &m), &(&p * &p)), p.monic());
        // Laurent input
        let laurent = Frac::new(Poly::term(Mono { t: -2, s: 0 }, Rat::one()), one.clone()).unwrap();
        assert_eq!(laurent.as_laurent().unwrap(), Poly::term(Mono { t: -2, s: 0 }, Rat::one()));
    }

    #[test]
    fn doc_round_trip() {
        for g in [schottky_pair(1), z2_diagonal(), unipotent()] {
            let doc = g.to_doc();
            let json = serde_json::to_string(&doc).unwrap();
            let back: MatrixGroupDoc = serde_json::from_str(&json).unwrap();
            assert_eq!(back.build().unwrap(), g);
        }
        let json = r#"{"field":"Qt","generators":{"a":[[{"t":"1"},"0"],["0",{"t^-1":"1"}]]}}"#;
        let g: MatrixGroupDoc = serde_json::from_str(json).unwrap();
        assert_eq!(g.build().unwrap().generators()[0], Mat2::diagonal(Field::Qt, Frac::monomial(1, 1, 0)).unwrap());
        let bad = r#"{"field":"Qt","generators":{"a":[[{"s":"1"},"0"],["0",{"s^-1":"1"}]]}}"#;
        let g: MatrixGroupDoc = serde_json::from_str(bad).unwrap();
        assert!(matches!(g.build(), Err(BruhatError::WrongField(..))));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn frac_strategy() -> impl Strategy<Value = Frac> {
            let poly = prop::collection::vec((-2i64..=2, -2i64..=2, -3i64..=3), 1..4).prop_map(|ts| {
                let mut p = Poly::zero();
                for (t, s, c) in ts {
                    p.add_term(Mono { t, s }, Rat::from_integer(BigInt::from(c)));
                }
                p
            });
            (poly.clone(), poly)
                .prop_filter("nonzero denominator", |(_, d)| !d.is_zero())
                .prop_map(|(n, d)| Frac::new(n, d).unwrap())
        }

        fn mat_strategy() -> impl Strategy<Value = Mat2> {
            (-2i64..=2, -2i64..=2, -2i64..=2, -2i64..=2).prop_map(|(b, a, x, y)| {
                let d = Mat2::diagonal(Field::Qst, Frac::monomial(1, b, a)).unwrap();
                let u = Mat2::new(Field::Qst, Frac::one(), Frac::monomial(x, 1, 0), Frac::zero(), Frac::one()).unwrap();
                let l = Mat2::new(Field::Qst, Frac::one(), Frac::zero(), Frac::monomial(y, 0, -1), Frac::one()).unwrap();
                u.mul(&d).mul(&l)
            })
        }

        proptest! {
            #[test]
            fn valuation_axioms(x in frac_strategy(), y in frac_strategy()) {
                let f = Field::Qst;
                let (vx, vy) = (valuation(f, &x), valuation(f, &y));
                if let (Valuation::Finite(a), Valuation::Finite(b)) = (&vx, &vy) {
                    prop_assert_eq!(valuation(f, &(&x * &y)), Valuation::Finite(a + b));
                }
                let vs = valuation(f, &(&x + &y));
                prop_assert!(vs >= vx.clone().min(vy.clone()));
                if vx != vy {
                    prop_assert_eq!(vs, vx.min(vy));
                }
            }

            #[test]
            fn length_is_a_class_function(m in mat_strategy(), g in mat_strategy()) {
                let l = bt_translation_length(&m);
                prop_assert_eq!(bt_translation_length(&m.inverse()), l.clone());
                prop_assert_eq!(bt_translation_length(&g.mul(&m).mul(&g.inverse())), l);
            }

            #[test]
            fn diagonal_scaling(a in -3i64..=3, b in -3i64..=3, k in -3i64..=3) {
                let m = Mat2::diagonal(Field::Qst, Frac::monomial(1, b, a)).unwrap();
                let l = bt_translation_length(&m);
                prop_assert_eq!(bt_translation_length(&m.pow(k)), crate::ordgroup::scale(&l, &rat(k.abs(), 1)));
            }

            #[test]
            fn padic_valuation_axioms(a in -200i64..200, b in 1i64..200, c in -200i64..200, d in 1i64..200) {
                let f = Field::Qp(3);
                let (x, y) = (q(a, b), q(c, d));
                let (vx, vy) = (valuation(f, &x), valuation(f, &y));
                if let (Valuation::Finite(u), Valuation::Finite(v)) = (&vx, &vy) {
                    prop_assert_eq!(valuation(f, &(&x * &y)), Valuation::Finite(u + v));
                }
                prop_assert!(valuation(f, &(&x + &y)) >= vx.min(vy));
            }
        }
    }
}
