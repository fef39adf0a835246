use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::linalg::{Modulus, QMatrix, Rational, ZpMatrix};

use super::descriptor::{BlockForm, BlockKind};
use super::GroupError;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CharKind {
    Det,
    Similitude,
    /// Determinant of the principal sub-block `start..start + len` of the block.
    /// Only a character on Levi subgroups containing that sub-block.
    Minor { start: usize, len: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CharTerm {
    pub block: usize,
    pub kind: CharKind,
    #[serde(default = "one")]
    pub exp: i64,
}

fn one() -> i64 {
    1
}

/// A product `prod chi_k^{e_k}` of determinant, similitude and minor
/// characters of individual blocks. The empty product is the trivial character.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Character {
    pub terms: Vec<CharTerm>,
}

impl Character {
    pub fn trivial() -> Self {
        Character { terms: Vec::new() }
    }

    pub fn term(block: usize, kind: CharKind, exp: i64) -> Self {
        Character { terms: vec![CharTerm { block, kind, exp }] }
    }

    pub fn det(block: usize) -> Self {
        Self::term(block, CharKind::Det, 1)
    }

    pub fn similitude(block: usize) -> Self {
        Self::term(block, CharKind::Similitude, 1)
    }

    pub fn minor(block: usize, start: usize, len: usize) -> Self {
        Self::term(block, CharKind::Minor { start, len }, 1)
    }

    pub fn times(mut self, other: &Character) -> Self {
        self.terms.extend(other.terms.iter().cloned());
        self
    }

    pub fn inverse(&self) -> Self {
        Character { terms: self.terms.iter().map(|t| CharTerm { exp: -t.exp, ..t.clone() }).collect() }
    }

    pub fn shift_blocks(&self, by: usize) -> Self {
        Character { terms: self.terms.iter().map(|t| CharTerm { block: t.block + by, ..t.clone() }).collect() }
    }
}

/// Entry of the form where the similitude is read off: the first nonzero entry
/// of smallest height.
fn similitude_slot(form: &QMatrix) -> (usize, usize) {
    let n = form.rows();
    let mut best: Option<(usize, usize)> = None;
    for a in 0..n {
        for b in 0..n {
            let x = &form[(a, b)];
            if x.is_zero() {
                continue;
            }
            let better = match best {
                None => true,
                Some(s) => {
                    let y = &form[s];
                    let h = |q: &Rational| q.numer().magnitude().clone() * q.denom().magnitude();
                    h(x) < h(y)
                }
            };
            if better {
                best = Some((a, b));
            }
        }
    }
    best.expect("form is zero")
}

impl BlockForm {
    pub fn validate_character(&self, chi: &Character) -> Result<(), GroupError> {
        for t in &chi.terms {
            let b = self.blocks.get(t.block).ok_or_else(|| {
                GroupError::InvalidDescriptor(format!("character refers to block {} of {}", t.block, self.blocks.len()))
            })?;
            match t.kind {
                CharKind::Det => {}
                CharKind::Similitude => {
                    if !matches!(b.kind, BlockKind::Gsp(_)) {
                        return Err(GroupError::InvalidDescriptor(format!(
                            "similitude requested on block {} which is not GSp",
                            t.block
                        )));
                    }
                }
                CharKind::Minor { start, len } => {
                    if len == 0 || start + len > b.size {
                        return Err(GroupError::InvalidDescriptor(format!(
                            "minor {start}..{} outside block {} of size {}",
                            start + len,
                            t.block,
                            b.size
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn term_indices(&self, t: &CharTerm) -> Vec<usize> {
        let b = &self.blocks[t.block];
        match t.kind {
            CharKind::Minor { start, len } => (b.offset + start..b.offset + start + len).collect(),
            _ => (b.offset..b.offset + b.size).collect(),
        }
    }

    /// Value of `chi` on an ambient matrix; `None` if a factor with negative
    /// exponent vanishes.
    pub fn eval_character(&self, chi: &Character, g: &QMatrix) -> Option<Rational> {
        let mut acc = Rational::one();
        for t in &chi.terms {
            let v = match &t.kind {
                CharKind::Similitude => {
                    let b = &self.blocks[t.block];
                    let BlockKind::Gsp(form) = &b.kind else { unreachable!("validated") };
                    let idx: Vec<usize> = (b.offset..b.offset + b.size).collect();
                    let gb = g.principal(&idx);
                    let (a, c) = similitude_slot(form);
                    let gjg = gb.transpose().mul(form).mul(&gb);
                    &gjg[(a, c)] / &form[(a, c)]
                }
                _ => g.principal(&self.term_indices(t)).det(),
            };
            if t.exp < 0 && v.is_zero() {
                return None;
            }
            let mut f = Rational::one();
            for _ in 0..t.exp.unsigned_abs() {
                f *= &v;
            }
            if t.exp < 0 {
                acc /= f;
            } else {
                acc *= f;
            }
        }
        Some(acc)
    }

    /// Value of `chi` modulo `p^N`; `None` if a factor with negative exponent is
    /// not a unit.
    pub fn eval_character_mod(&self, chi: &Character, g: &ZpMatrix) -> Option<u64> {
        let md: Modulus = g.modulus();
        let mut acc = 1 % md.m;
        for t in &chi.terms {
            let v = match &t.kind {
                CharKind::Similitude => {
                    let b = &self.blocks[t.block];
                    let BlockKind::Gsp(form) = &b.kind else { unreachable!("validated") };
                    let idx: Vec<usize> = (b.offset..b.offset + b.size).collect();
                    let gb = g.principal(&idx);
                    let j = ZpMatrix::reduce(form, md).ok()?;
                    let (a, c) = similitude_slot(form);
                    let gjg = gb.transpose().mul(&j).ok()?.mul(&gb).ok()?;
                    md.mul(gjg[(a, c)], md.inv(j[(a, c)])?)
                }
                _ => g.principal(&self.term_indices(t)).det(),
            };
            let base = if t.exp < 0 { md.inv(v)? } else { v };
            acc = md.mul(acc, md.pow(base, t.exp.unsigned_abs()));
        }
        Some(acc)
    }

    /// Derivative of `chi` at the identity as a functional on flattened
    /// `n x n` matrices.
    pub fn character_differential(&self, chi: &Character) -> Vec<Rational> {
        let n = self.size;
        let mut f = vec![Rational::zero(); n * n];
        for t in &chi.terms {
            let e = Rational::from_integer(t.exp.into());
            match &t.kind {
                CharKind::Similitude => {
                    let b = &self.blocks[t.block];
                    let BlockKind::Gsp(form) = &b.kind else { unreachable!("validated") };
                    let (a, c) = similitude_slot(form);
                    let scale = &e / &form[(a, c)];
                    for (k, l, coeff) in symmetric_form_terms(form, a, c) {
                        f[(b.offset + k) * n + b.offset + l] += &scale * coeff;
                    }
                }
                _ => {
                    for i in self.term_indices(t) {
                        f[i * n + i] += &e;
                    }
                }
            }
        }
        f
    }
}

/// Coefficients of `(X^T J + J X)_{ab}` in the entries `X_{kl}` (block-local).
pub(crate) fn symmetric_form_terms(form: &QMatrix, a: usize, b: usize) -> Vec<(usize, usize, Rational)> {
    let n = form.rows();
    let mut out = Vec::new();
    for k in 0..n {
        // (X^T J)_{ab} = sum_k X_{ka} J_{kb}
        if !form[(k, b)].is_zero() {
            out.push((k, a, form[(k, b)].clone()));
        }
        // (J X)_{ab} = sum_k J_{ak} X_{kb}
        if !form[(a, k)].is_zero() {
            out.push((k, b, form[(a, k)].clone()));
        }
    }
    out
}
