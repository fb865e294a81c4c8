//! Free graded Lie algebras over Q on positively graded generators.
//!
//! The canonical normal form of a Lie element is its image in the tensor
//! algebra under the embedding `[a,b] = a(x)b - (-1)^{|a||b|} b(x)a`. All
//! identities (antisymmetry, Jacobi, Leibniz) become literal tensor
//! cancellations, which keeps the graded signs honest.
//!
//! Degree-wise components split further by the letter multiset of a word
//! ("class"); bases are computed per class from left-normed brackets, which
//! keeps the linear algebra small.

use std::collections::{BTreeMap, BTreeSet};

use num::traits::Zero;

use crate::error::{Error, Result};
use crate::linalg::{RowReducer, SparseMatrix};
use crate::rational::{sign, Q};

pub type GenIdx = u32;
pub type Word = Vec<GenIdx>;
/// A letter multiset, stored as a sorted word.
pub type Class = Vec<GenIdx>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenInfo {
    pub id: String,
    pub degree: usize,
    /// Marks a V (domain) generator in a map model; everything else is W.
    pub domain: bool,
    /// Explicit cone-length stage tag; inferred greedily when absent.
    pub stage: Option<usize>,
}

impl GenInfo {
    pub fn new(id: &str, degree: usize) -> Self {
        GenInfo {
            id: id.to_string(),
            degree,
            domain: false,
            stage: None,
        }
    }

    pub fn domain(mut self) -> Self {
        self.domain = true;
        self
    }
}

/// An ordered, finite set of free-Lie generators with unique ids.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GenSet {
    gens: Vec<GenInfo>,
    by_id: BTreeMap<String, GenIdx>,
}

impl GenSet {
    pub fn new() -> Self {
        Default::default()
    }

    pub fn from_gens(gens: Vec<GenInfo>) -> Result<Self> {
        let mut gs = GenSet::new();
        for g in gens {
            gs.push(g)?;
        }
        Ok(gs)
    }

    pub fn push(&mut self, g: GenInfo) -> Result<GenIdx> {
        if g.degree < 1 {
            return Err(Error::BadDegree {
                id: g.id.clone(),
                degree: g.degree as isize,
            });
        }
        if self.by_id.contains_key(&g.id) {
            return Err(Error::DuplicateGenerator(g.id.clone()));
        }
        let idx = self.gens.len() as GenIdx;
        self.by_id.insert(g.id.clone(), idx);
        self.gens.push(g);
        Ok(idx)
    }

    pub fn len(&self) -> usize {
        self.gens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gens.is_empty()
    }

    pub fn idx(&self, id: &str) -> Option<GenIdx> {
        self.by_id.get(id).copied()
    }

    pub fn info(&self, i: GenIdx) -> &GenInfo {
        &self.gens[i as usize]
    }

    pub fn degree(&self, i: GenIdx) -> usize {
        self.gens[i as usize].degree
    }

    pub fn id(&self, i: GenIdx) -> &str {
        &self.gens[i as usize].id
    }

    pub fn iter(&self) -> impl Iterator<Item = (GenIdx, &GenInfo)> {
        self.gens.iter().enumerate().map(|(i, g)| (i as GenIdx, g))
    }

    pub fn indices(&self) -> impl Iterator<Item = GenIdx> {
        0..self.gens.len() as GenIdx
    }

    pub fn word_degree(&self, w: &[GenIdx]) -> usize {
        w.iter().map(|&g| self.degree(g)).sum()
    }

    pub fn word_string(&self, w: &[GenIdx]) -> String {
        w.iter()
            .map(|&g| self.id(g))
            .collect::<Vec<_>>()
            .join("(x)")
    }
}

/// A rational combination of tensor words; the normal form for Lie elements.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Tensor {
    terms: BTreeMap<Word, Q>,
}

impl Tensor {
    pub fn zero() -> Self {
        Default::default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn gen(i: GenIdx) -> Self {
        Tensor::from_term(vec![i], Q::from_integer(1.into()))
    }

    pub fn from_term(word: Word, coeff: Q) -> Self {
        let mut t = Tensor::zero();
        t.add_term(word, coeff);
        t
    }

    pub fn add_term(&mut self, word: Word, coeff: Q) {
        if coeff.is_zero() {
            return;
        }
        let entry = self.terms.entry(word);
        match entry {
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += coeff;
                if e.get().is_zero() {
                    e.remove();
                }
            }
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(coeff);
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Word, &Q)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, word: &[GenIdx]) -> Q {
        self.terms.get(word).cloned().unwrap_or_else(Q::zero)
    }

    pub fn add(&self, other: &Tensor) -> Tensor {
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.add_term(w.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Tensor) -> Tensor {
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.add_term(w.clone(), -c.clone());
        }
        out
    }

    pub fn neg(&self) -> Tensor {
        self.scale(&Q::from_integer((-1).into()))
    }

    pub fn scale(&self, k: &Q) -> Tensor {
        if k.is_zero() {
            return Tensor::zero();
        }
        Tensor {
            terms: self
                .terms
                .iter()
                .map(|(w, c)| (w.clone(), c * k))
                .collect(),
        }
    }

    /// Tensor-algebra product (word concatenation, no sign).
    pub fn concat(&self, other: &Tensor) -> Tensor {
        let mut out = Tensor::zero();
        for (w1, c1) in &self.terms {
            for (w2, c2) in &other.terms {
                let mut w = w1.clone();
                w.extend_from_slice(w2);
                out.add_term(w, c1 * c2);
            }
        }
        out
    }

    /// Degree of a homogeneous element; `Ok(None)` for zero.
    pub fn degree(&self, gs: &GenSet) -> Result<Option<usize>> {
        let mut deg = None;
        for w in self.terms.keys() {
            let d = gs.word_degree(w);
            match deg {
                None => deg = Some(d),
                Some(e) if e != d => return Err(Error::MixedDegree(e, d)),
                _ => {}
            }
        }
        Ok(deg)
    }

    /// Graded commutator `[a,b] = ab - (-1)^{|a||b|} ba` of homogeneous elements.
    pub fn bracket(&self, other: &Tensor, gs: &GenSet) -> Result<Tensor> {
        let da = match self.degree(gs)? {
            Some(d) => d,
            None => return Ok(Tensor::zero()),
        };
        let db = match other.degree(gs)? {
            Some(d) => d,
            None => return Ok(Tensor::zero()),
        };
        let fwd = self.concat(other);
        let bwd = other.concat(self).scale(&sign(da * db));
        Ok(fwd.sub(&bwd))
    }

    /// The word-length-1 component.
    pub fn linear_part(&self) -> Tensor {
        Tensor {
            terms: self
                .terms
                .iter()
                .filter(|(w, _)| w.len() == 1)
                .map(|(w, c)| (w.clone(), c.clone()))
                .collect(),
        }
    }

    /// Splits off the terms whose word contains a letter satisfying `pred`.
    pub fn split_by_letter<F: Fn(GenIdx) -> bool>(&self, pred: F) -> (Tensor, Tensor) {
        let mut with = Tensor::zero();
        let mut without = Tensor::zero();
        for (w, c) in &self.terms {
            if w.iter().any(|&g| pred(g)) {
                with.add_term(w.clone(), c.clone());
            } else {
                without.add_term(w.clone(), c.clone());
            }
        }
        (with, without)
    }

    /// Letter multisets occurring in this element.
    pub fn classes(&self) -> BTreeSet<Class> {
        self.terms.keys().map(|w| word_class(w)).collect()
    }

    /// Restriction to the terms of one class.
    pub fn class_component(&self, class: &Class) -> Tensor {
        Tensor {
            terms: self
                .terms
                .iter()
                .filter(|(w, _)| &word_class(w) == class)
                .map(|(w, c)| (w.clone(), c.clone()))
                .collect(),
        }
    }

    /// Component of fixed word length.
    pub fn length_component(&self, len: usize) -> Tensor {
        Tensor {
            terms: self
                .terms
                .iter()
                .filter(|(w, _)| w.len() == len)
                .map(|(w, c)| (w.clone(), c.clone()))
                .collect(),
        }
    }

    pub fn word_lengths(&self) -> BTreeSet<usize> {
        self.terms.keys().map(|w| w.len()).collect()
    }

    pub fn max_letter(&self) -> Option<GenIdx> {
        self.terms.keys().flat_map(|w| w.iter().copied()).max()
    }

    /// True when every letter of every word satisfies `pred`.
    pub fn letters_all<F: Fn(GenIdx) -> bool>(&self, pred: F) -> bool {
        self.terms.keys().all(|w| w.iter().all(|&g| pred(g)))
    }
}

pub fn word_class(w: &[GenIdx]) -> Class {
    let mut c = w.to_vec();
    c.sort_unstable();
    c
}

/// Formal Lie expression tree, as produced by the parser.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LieExpr {
    Gen(GenIdx),
    Bracket(Box<LieExpr>, Box<LieExpr>),
    Scale(Q, Box<LieExpr>),
    Sum(Vec<LieExpr>),
}

impl LieExpr {
    /// Degree of a homogeneous expression; errors on mixed-degree sums.
    pub fn degree(&self, gs: &GenSet) -> Result<Option<usize>> {
        match self {
            LieExpr::Gen(i) => Ok(Some(gs.degree(*i))),
            LieExpr::Bracket(a, b) => match (a.degree(gs)?, b.degree(gs)?) {
                (Some(x), Some(y)) => Ok(Some(x + y)),
                _ => Ok(None),
            },
            LieExpr::Scale(k, e) => {
                if k.is_zero() {
                    Ok(None)
                } else {
                    e.degree(gs)
                }
            }
            LieExpr::Sum(es) => {
                let mut deg = None;
                for e in es {
                    if let Some(d) = e.degree(gs)? {
                        match deg {
                            None => deg = Some(d),
                            Some(x) if x != d => return Err(Error::MixedDegree(x, d)),
                            _ => {}
                        }
                    }
                }
                Ok(deg)
            }
        }
    }

    /// Canonical tensor normal form via the commutator expansion.
    pub fn expand(&self, gs: &GenSet) -> Result<Tensor> {
        self.degree(gs)?; // homogeneity check
        self.expand_unchecked(gs)
    }

    fn expand_unchecked(&self, gs: &GenSet) -> Result<Tensor> {
        Ok(match self {
            LieExpr::Gen(i) => Tensor::gen(*i),
            LieExpr::Bracket(a, b) => {
                let ta = a.expand_unchecked(gs)?;
                let tb = b.expand_unchecked(gs)?;
                ta.bracket(&tb, gs)?
            }
            LieExpr::Scale(k, e) => e.expand_unchecked(gs)?.scale(k),
            LieExpr::Sum(es) => {
                let mut t = Tensor::zero();
                for e in es {
                    t = t.add(&e.expand_unchecked(gs)?);
                }
                t
            }
        })
    }
}

pub fn is_zero(e: &LieExpr, gs: &GenSet) -> Result<bool> {
    Ok(e.expand(gs)?.is_zero())
}

/// Expansion of the left-normed bracket `[[..[w0,w1],..],wk]`.
pub fn left_normed(word: &[GenIdx], gs: &GenSet) -> Tensor {
    assert!(!word.is_empty());
    let mut t = Tensor::gen(word[0]);
    for &g in &word[1..] {
        t = t
            .bracket(&Tensor::gen(g), gs)
            .expect("generators are homogeneous");
    }
    t
}

pub fn left_normed_string(word: &[GenIdx], gs: &GenSet) -> String {
    let mut s = gs.id(word[0]).to_string();
    for &g in &word[1..] {
        s = format!("[{},{}]", s, gs.id(g));
    }
    s
}

/// All distinct arrangements of a letter multiset, in lexicographic order.
pub fn class_words(class: &Class) -> Vec<Word> {
    let mut out = Vec::new();
    let mut remaining: Vec<(GenIdx, usize)> = Vec::new();
    for &g in class {
        match remaining.last_mut() {
            Some((h, n)) if *h == g => *n += 1,
            _ => remaining.push((g, 1)),
        }
    }
    let mut cur = Vec::with_capacity(class.len());
    fn rec(
        remaining: &mut Vec<(GenIdx, usize)>,
        cur: &mut Word,
        total: usize,
        out: &mut Vec<Word>,
    ) {
        if cur.len() == total {
            out.push(cur.clone());
            return;
        }
        for i in 0..remaining.len() {
            if remaining[i].1 == 0 {
                continue;
            }
            remaining[i].1 -= 1;
            cur.push(remaining[i].0);
            rec(remaining, cur, total, out);
            cur.pop();
            remaining[i].1 += 1;
        }
    }
    rec(&mut remaining, &mut cur, class.len(), &mut out);
    out
}

/// Basis of one multiset component of the free graded Lie algebra:
/// independent left-normed brackets, words in lexicographic order.
#[derive(Clone, Debug)]
pub struct ClassBasis {
    pub class: Class,
    /// All tensor words of the class, lexicographic; the coordinate space.
    pub words: Vec<Word>,
    /// Words whose left-normed brackets form the basis.
    pub basis_words: Vec<Word>,
    /// Tensor expansions of the basis brackets.
    pub elems: Vec<Tensor>,
}

impl ClassBasis {
    pub fn dim(&self) -> usize {
        self.elems.len()
    }

    /// Coordinates of a tensor element (supported on this class) in the
    /// basis, or `None` when it is outside the Lie span.
    pub fn coords(&self, t: &Tensor) -> Option<Vec<Q>> {
        if self.elems.is_empty() {
            return if t.is_zero() { Some(vec![]) } else { None };
        }
        let word_idx: BTreeMap<&Word, usize> =
            self.words.iter().enumerate().map(|(i, w)| (w, i)).collect();
        let mut m = SparseMatrix::new(self.words.len(), self.elems.len());
        for (j, e) in self.elems.iter().enumerate() {
            for (w, c) in e.iter() {
                m.set(word_idx[w], j, c.clone());
            }
        }
        let mut b = vec![Q::zero(); self.words.len()];
        for (w, c) in t.iter() {
            b[*word_idx.get(w)?] = c.clone();
        }
        m.solve(&b).map(|(x, _)| x)
    }
}

pub fn class_basis(gs: &GenSet, class: &Class) -> ClassBasis {
    let words = class_words(class);
    let word_idx: BTreeMap<&Word, usize> =
        words.iter().enumerate().map(|(i, w)| (w, i)).collect();
    let mut reducer = RowReducer::new();
    let mut basis_words = Vec::new();
    let mut elems = Vec::new();
    for w in &words {
        let t = left_normed(w, gs);
        let row: BTreeMap<usize, Q> = t
            .iter()
            .map(|(word, c)| (word_idx[word], c.clone()))
            .collect();
        if reducer.offer(row) {
            basis_words.push(w.clone());
            elems.push(t);
        }
    }
    ClassBasis {
        class: class.clone(),
        words,
        basis_words,
        elems,
    }
}

/// Enumerates the letter multisets over `allowed` generators with total
/// degree `degree` and at most `max_len` letters, in deterministic order
/// (length, then lexicographic).
pub fn enumerate_classes(
    gs: &GenSet,
    allowed: &[GenIdx],
    degree: usize,
    max_len: usize,
) -> Vec<Class> {
    let mut out = Vec::new();
    let mut cur: Class = Vec::new();
    fn rec(
        gs: &GenSet,
        allowed: &[GenIdx],
        start: usize,
        degree_left: usize,
        len_left: usize,
        cur: &mut Class,
        out: &mut Vec<Class>,
    ) {
        if degree_left == 0 {
            if !cur.is_empty() {
                out.push(cur.clone());
            }
            return;
        }
        if len_left == 0 {
            return;
        }
        for i in start..allowed.len() {
            let g = allowed[i];
            let d = gs.degree(g);
            if d <= degree_left {
                cur.push(g);
                rec(gs, allowed, i, degree_left - d, len_left - 1, cur, out);
                cur.pop();
            }
        }
    }
    rec(gs, allowed, 0, degree, max_len, &mut cur, &mut out);
    out.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
    out
}

/// Degree-wise basis of the free graded Lie algebra: the concatenation of
/// the class bases, classes in canonical order.
#[derive(Clone, Debug)]
pub struct DegreeBasis {
    pub degree: usize,
    pub classes: Vec<ClassBasis>,
    /// Offset of each class in the concatenated coordinate vector.
    pub offsets: Vec<usize>,
    pub dim: usize,
}

impl DegreeBasis {
    pub fn build(gs: &GenSet, allowed: &[GenIdx], degree: usize, max_len: usize) -> Self {
        let classes: Vec<ClassBasis> = enumerate_classes(gs, allowed, degree, max_len)
            .iter()
            .map(|c| class_basis(gs, c))
            .filter(|cb| cb.dim() > 0)
            .collect();
        let mut offsets = Vec::with_capacity(classes.len());
        let mut dim = 0;
        for cb in &classes {
            offsets.push(dim);
            dim += cb.dim();
        }
        DegreeBasis {
            degree,
            classes,
            offsets,
            dim,
        }
    }

    pub fn elems(&self) -> impl Iterator<Item = &Tensor> {
        self.classes.iter().flat_map(|cb| cb.elems.iter())
    }

    pub fn elem(&self, i: usize) -> &Tensor {
        let k = self
            .offsets
            .partition_point(|&o| o <= i)
            .saturating_sub(1);
        &self.classes[k].elems[i - self.offsets[k]]
    }

    pub fn elem_string(&self, i: usize, gs: &GenSet) -> String {
        let k = self
            .offsets
            .partition_point(|&o| o <= i)
            .saturating_sub(1);
        left_normed_string(&self.classes[k].basis_words[i - self.offsets[k]], gs)
    }

    /// Coordinates of a homogeneous Lie element in this basis.
    pub fn coords(&self, t: &Tensor) -> Option<Vec<Q>> {
        let mut out = vec![Q::zero(); self.dim];
        for class in t.classes() {
            let comp = t.class_component(&class);
            let k = self.classes.iter().position(|cb| cb.class == class)?;
            let coords = self.classes[k].coords(&comp)?;
            for (j, c) in coords.into_iter().enumerate() {
                out[self.offsets[k] + j] = c;
            }
        }
        Some(out)
    }

    /// Linear combination of basis elements.
    pub fn combine(&self, coeffs: &[Q]) -> Tensor {
        let mut t = Tensor::zero();
        for (i, c) in coeffs.iter().enumerate() {
            if !c.is_zero() {
                t = t.add(&self.elem(i).scale(c));
            }
        }
        t
    }
}

/// Renders a Lie element as a parseable expression: a sum of explicit
/// coefficients times left-normed brackets, classes in canonical order.
/// `None` when the tensor is outside the Lie span.
pub fn lie_string(t: &Tensor, gs: &GenSet) -> Option<String> {
    if t.is_zero() {
        return Some("0".to_string());
    }
    let mut classes: Vec<Class> = t.classes().into_iter().collect();
    classes.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
    let mut parts = Vec::new();
    for class in &classes {
        let cb = class_basis(gs, class);
        let coords = cb.coords(&t.class_component(class))?;
        for (w, c) in cb.basis_words.iter().zip(coords) {
            if !c.is_zero() {
                parts.push(format!(
                    "{}*{}",
                    crate::rational::fmt_q(&c),
                    left_normed_string(w, gs)
                ));
            }
        }
    }
    Some(parts.join(" + "))
}

/// Spanning left-normed bracket basis for degree `d`, optional word-length
/// cap (`None` means unbounded, which is finite anyway since degrees are
/// positive).
pub fn lie_basis(gs: &GenSet, degree: usize, max_len: Option<usize>) -> DegreeBasis {
    let allowed: Vec<GenIdx> = gs.indices().collect();
    DegreeBasis::build(gs, &allowed, degree, max_len.unwrap_or(degree))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn gens(list: &[(&str, usize)]) -> GenSet {
        GenSet::from_gens(list.iter().map(|(id, d)| GenInfo::new(id, *d)).collect()).unwrap()
    }

    fn bra(a: LieExpr, b: LieExpr) -> LieExpr {
        LieExpr::Bracket(Box::new(a), Box::new(b))
    }

    #[test]
    fn odd_square_doubles() {
        let gs = gens(&[("v", 1)]);
        let v = LieExpr::Gen(0);
        let t = bra(v.clone(), v).expand(&gs).unwrap();
        assert_eq!(t, Tensor::from_term(vec![0, 0], q(2)));
    }

    #[test]
    fn even_square_vanishes() {
        let gs = gens(&[("v", 2)]);
        let v = LieExpr::Gen(0);
        assert!(bra(v.clone(), v).expand(&gs).unwrap().is_zero());
    }

    #[test]
    fn sign_rule_expansion() {
        // [x,[x,y]] with |x|=1, |y|=3: the inner bracket is x(x)y + y(x)x,
        // the outer sign is (-1)^{1*4} = +1, leaving x(x)x(x)y - y(x)x(x)x.
        let gs = gens(&[("x", 1), ("y", 3)]);
        let x = LieExpr::Gen(0);
        let y = LieExpr::Gen(1);
        let t = bra(x.clone(), bra(x, y)).expand(&gs).unwrap();
        let mut expected = Tensor::zero();
        expected.add_term(vec![0, 0, 1], q(1));
        expected.add_term(vec![1, 0, 0], q(-1));
        assert_eq!(t, expected);
    }

    #[test]
    fn brute_force_expander_agrees() {
        // independent recursive expander over (word, coeff) lists
        fn brute(e: &LieExpr, gs: &GenSet) -> Vec<(Word, Q)> {
            match e {
                LieExpr::Gen(i) => vec![(vec![*i], q(1))],
                LieExpr::Scale(k, e) => brute(e, gs)
                    .into_iter()
                    .map(|(w, c)| (w, c * k))
                    .collect(),
                LieExpr::Sum(es) => es.iter().flat_map(|e| brute(e, gs)).collect(),
                LieExpr::Bracket(a, b) => {
                    let ta = brute(a, gs);
                    let tb = brute(b, gs);
                    let da: usize = ta
                        .first()
                        .map(|(w, _)| gs.word_degree(w))
                        .unwrap_or(0);
                    let db: usize = tb
                        .first()
                        .map(|(w, _)| gs.word_degree(w))
                        .unwrap_or(0);
                    let mut out = Vec::new();
                    for (wa, ca) in &ta {
                        for (wb, cb) in &tb {
                            let mut fwd = wa.clone();
                            fwd.extend_from_slice(wb);
                            out.push((fwd, ca * cb));
                            let mut bwd = wb.clone();
                            bwd.extend_from_slice(wa);
                            out.push((bwd, ca * cb * sign(da * db) * q(-1)));
                        }
                    }
                    out
                }
            }
        }
        let gs = gens(&[("x", 1), ("y", 3)]);
        let x = LieExpr::Gen(0);
        let y = LieExpr::Gen(1);
        let e = bra(x.clone(), bra(x, y));
        let mut collected = Tensor::zero();
        for (w, c) in brute(&e, &gs) {
            collected.add_term(w, c);
        }
        assert_eq!(collected, e.expand(&gs).unwrap());
    }

    #[test]
    fn jacobi_triple_vanishes() {
        let gs = gens(&[("v", 1)]);
        let v = LieExpr::Gen(0);
        let e = bra(v.clone(), bra(v.clone(), v));
        assert!(is_zero(&e, &gs).unwrap());
    }

    #[test]
    fn antisymmetry_combination_vanishes() {
        let gs = gens(&[("x", 1), ("y", 3)]);
        let x = LieExpr::Gen(0);
        let y = LieExpr::Gen(1);
        // [x,y] + (-1)^{|x||y|}[y,x]
        let e = LieExpr::Sum(vec![
            bra(x.clone(), y.clone()),
            LieExpr::Scale(sign(3), Box::new(bra(y, x))),
        ]);
        assert!(is_zero(&e, &gs).unwrap());
    }

    #[test]
    fn nonzero_mixed_bracket() {
        let gs = gens(&[("v", 1), ("w", 2)]);
        let e = bra(LieExpr::Gen(0), LieExpr::Gen(1));
        assert!(!is_zero(&e, &gs).unwrap());
    }

    #[test]
    fn mixed_degree_sum_rejected() {
        let gs = gens(&[("v", 1), ("w", 2)]);
        let e = LieExpr::Sum(vec![LieExpr::Gen(0), LieExpr::Gen(1)]);
        assert!(e.degree(&gs).is_err());
    }

    #[test]
    fn one_generator_basis_dims() {
        let gs = gens(&[("v", 1)]);
        assert_eq!(lie_basis(&gs, 1, None).dim, 1);
        assert_eq!(lie_basis(&gs, 2, None).dim, 1); // [v,v]
        assert_eq!(lie_basis(&gs, 3, None).dim, 0); // [v,[v,v]] = 0
        assert_eq!(lie_basis(&gs, 4, None).dim, 0);
    }

    #[test]
    fn even_generator_square_basis_empty() {
        let gs = gens(&[("v", 2)]);
        assert_eq!(lie_basis(&gs, 4, None).dim, 0);
    }

    #[test]
    fn rank_two_even_dims() {
        let gs = gens(&[("x", 2), ("y", 2)]);
        assert_eq!(lie_basis(&gs, 2, None).dim, 2);
        assert_eq!(lie_basis(&gs, 4, None).dim, 1);
        assert_eq!(lie_basis(&gs, 6, None).dim, 2);
    }

    #[test]
    fn basis_coords_roundtrip() {
        let gs = gens(&[("x", 1), ("y", 3)]);
        let basis = lie_basis(&gs, 5, None);
        assert!(basis.dim > 0);
        let mut coeffs = vec![Q::zero(); basis.dim];
        for (i, c) in coeffs.iter_mut().enumerate() {
            *c = q(i as i64 + 1);
        }
        let t = basis.combine(&coeffs);
        assert_eq!(basis.coords(&t).unwrap(), coeffs);
    }
}
