//! Model constructions for products, powers, diagonals and fat wedges,
//! plus cofibration replacement of an arbitrary morphism.
//!
//! The binary product model is built by the cone-length stage induction:
//! for each pair (v, w) a correction of [v,w] is assembled from solves in
//! acyclic kernels so that d^2 = 0 holds and the projection onto the two
//! factors is a quasi-isomorphism. Everything is deterministic: pairs are
//! processed in stage order and every solve sets free variables to zero.

use std::collections::BTreeMap;

use num::traits::Zero;

use crate::dgl::{check_quasi_iso, preimage_in_kernel, Dgl, DglMorphism, Projection, Report, ReportItem};
use crate::error::{Error, Result};
use crate::lie::{class_basis, left_normed, GenIdx, GenInfo, GenSet, Tensor, Word};
use crate::rational::{sign, Q};

/// Provenance of one generator of a product/power model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PowerGen {
    /// Word length j of the suspension word.
    pub length: usize,
    /// Strictly increasing copy indices, 1-based.
    pub copies: Vec<usize>,
    /// Base generator ids, parallel to `copies`.
    pub base: Vec<String>,
}

impl PowerGen {
    pub fn degree(&self, base_gens: &GenSet) -> usize {
        let s: usize = self
            .base
            .iter()
            .map(|id| base_gens.degree(base_gens.idx(id).unwrap()))
            .sum();
        s + self.length - 1
    }
}

/// Stage data of one generator of a binary product model.
#[derive(Clone, Debug)]
pub enum Role {
    X { stage: usize },
    Y { stage: usize },
    S { v: GenIdx, w: GenIdx, sv: usize, sw: usize },
}

#[derive(Clone, Debug)]
pub struct ProductModel {
    pub dgl: Dgl,
    /// The factor dgls (copies of the base for power models).
    pub factors: Vec<Dgl>,
    /// phi components: letter maps onto each factor.
    pub projections: Vec<Projection>,
    /// Letter inclusions of each factor's generators.
    pub inclusions: Vec<Projection>,
    pub info: Vec<PowerGen>,
    /// Binary stage metadata (present for binary_product output).
    pub roles: Option<Vec<Role>>,
    /// Names of suspension generators omitted by the degree cap.
    pub omitted: Vec<String>,
    pub cutoff: usize,
}

impl ProductModel {
    pub fn phi_components(&self) -> Result<Vec<DglMorphism>> {
        self.projections
            .iter()
            .zip(&self.factors)
            .map(|(p, f)| {
                let m = p.to_morphism(&self.dgl, f);
                DglMorphism::new(m.source, m.target, m.assign)
            })
            .collect()
    }

    pub fn check_quasi_iso(&self, n: usize) -> Result<Report> {
        let comps = self.phi_components()?;
        let refs: Vec<&DglMorphism> = comps.iter().collect();
        check_quasi_iso(&refs, n)
    }

    fn is_long(&self, g: GenIdx) -> bool {
        self.info[g as usize].length >= 2
    }

    /// Structural invariants: (i) copy differentials, (iii) the shape of
    /// phi, (iv) the correction of [z_i,z_j] lies in the length->=2 ideal,
    /// (v) the word-length profile of higher differentials, and absence of
    /// linear parts.
    pub fn check_properties(&self) -> Report {
        let gs = self.dgl.gens();
        let mut items = Vec::new();
        for (gi, pinfo) in self.info.iter().enumerate() {
            let g = gi as GenIdx;
            if pinfo.length == 1 {
                let copy = pinfo.copies[0];
                let factor = &self.factors[copy - 1];
                let orig = factor.gens().idx(&format!("{}", gs.id(g))).or_else(|| {
                    // factor ids coincide with product ids for length-1 gens
                    factor.gens().idx(gs.id(g))
                });
                let ok = match orig {
                    Some(o) => {
                        self.dgl.diff(g) == &self.inclusions[copy - 1].apply(factor.diff(o))
                    }
                    None => false,
                };
                items.push(ReportItem {
                    label: format!("(i) D({}) is the factor differential", gs.id(g)),
                    passed: ok,
                    detail: String::new(),
                });
                // (iii): phi_i(z_i) = z, phi_j(z_i) = 0 for j != i
                let phi_ok = self.projections.iter().enumerate().all(|(j, p)| {
                    if j + 1 == copy {
                        p.map[g as usize].is_some()
                    } else {
                        p.map[g as usize].is_none()
                    }
                });
                items.push(ReportItem {
                    label: format!("(iii) phi on {}", gs.id(g)),
                    passed: phi_ok,
                    detail: String::new(),
                });
            } else {
                let killed = self.projections.iter().all(|p| p.map[g as usize].is_none());
                items.push(ReportItem {
                    label: format!("(iii) phi kills {}", gs.id(g)),
                    passed: killed,
                    detail: String::new(),
                });
            }
            if pinfo.length == 2 {
                // (iv): D(s(z_i (x) z_j)) - [z_i, z_j] in the ideal of long gens
                let (i, j) = (pinfo.copies[0], pinfo.copies[1]);
                let lift = |copy: usize, id: &str| -> Option<GenIdx> {
                    let fgens = self.factors[copy - 1].gens();
                    let o = fgens
                        .idx(id)
                        .or_else(|| fgens.idx(&format!("{}@{}", id, copy)))?;
                    self.inclusions[copy - 1].map[o as usize]
                };
                let zi = lift(i, &pinfo.base[0]);
                let zj = lift(j, &pinfo.base[1]);
                let ok = match (zi, zj) {
                    (Some(zi), Some(zj)) => {
                        let bracket = Tensor::gen(zi).bracket(&Tensor::gen(zj), gs).unwrap();
                        let xi = self.dgl.diff(g).sub(&bracket);
                        let ok = xi
                            .iter()
                            .all(|(w, _)| w.iter().any(|&l| self.is_long(l)));
                        ok
                    }
                    _ => false,
                };
                items.push(ReportItem {
                    label: format!("(iv) D({}) = bracket + xi in the long ideal", gs.id(g)),
                    passed: ok,
                    detail: String::new(),
                });
            }
            if pinfo.length >= 3 {
                // (v): every word has a letter of length l-1 or l; other
                // letters have length <= l-2
                let l = pinfo.length;
                let ok = self.dgl.diff(g).iter().all(|(w, _)| {
                    let lens: Vec<usize> =
                        w.iter().map(|&x| self.info[x as usize].length).collect();
                    let hi: Vec<usize> =
                        lens.iter().copied().filter(|&x| x >= l - 1).collect();
                    hi.len() == 1 && hi[0] <= l
                });
                items.push(ReportItem {
                    label: format!("(v) word-length profile of D({})", gs.id(g)),
                    passed: ok,
                    detail: String::new(),
                });
            }
            let lin = self.dgl.diff(g).linear_part();
            items.push(ReportItem {
                label: format!("no linear part in D({})", gs.id(g)),
                passed: lin.is_zero(),
                detail: String::new(),
            });
        }
        Report::new("product model properties".to_string(), self.cutoff, items)
    }

    /// Stage containment: for v in V_n, w in W_m every letter of
    /// D(s(v(x)w)) lies in V_{<=n} + W_{<=m} + s(V_{<n}(x)W_{<=m}) +
    /// s(V_{<=n}(x)W_{<m}). Binary models only.
    pub fn check_stage_containment(&self) -> Report {
        let roles = self.roles.as_ref().expect("binary product metadata");
        let gs = self.dgl.gens();
        let mut items = Vec::new();
        for (g, role) in roles.iter().enumerate() {
            if let Role::S { sv: n, sw: m, .. } = role {
                let ok = self.dgl.diff(g as GenIdx).iter().all(|(word, _)| {
                    word.iter().all(|&l| match &roles[l as usize] {
                        Role::X { stage } => stage <= n,
                        Role::Y { stage } => stage <= m,
                        Role::S { sv, sw, .. } => {
                            (sv < n && sw <= m) || (sv <= n && sw < m)
                        }
                    })
                });
                items.push(ReportItem {
                    label: format!("stage containment of D({})", gs.id(g as GenIdx)),
                    passed: ok,
                    detail: String::new(),
                });
            }
        }
        Report::new("stage containment".to_string(), self.cutoff, items)
    }
}

// ---------------------------------------------------------------------------
// binary product
// ---------------------------------------------------------------------------

struct BinaryCtx {
    dgl: Dgl,
    roles: Vec<Role>,
    p_x: Projection,
    p_y: Projection,
    s_map: BTreeMap<(GenIdx, GenIdx), GenIdx>,
}

impl BinaryCtx {
    fn is_s(&self, g: GenIdx) -> bool {
        matches!(self.roles[g as usize], Role::S { .. })
    }

    fn is_x(&self, g: GenIdx) -> bool {
        matches!(self.roles[g as usize], Role::X { .. })
    }

    fn allowed(&self, fx: impl Fn(usize) -> bool, fy: impl Fn(usize) -> bool) -> Vec<GenIdx> {
        let fs = |sv: usize, sw: usize| -> bool { fx(sv) && fy(sw) };
        self.dgl
            .gens()
            .indices()
            .filter(|&g| match self.roles[g as usize] {
                Role::X { stage } => fx(stage),
                Role::Y { stage } => fy(stage),
                Role::S { sv, sw, .. } => fs(sv, sw),
            })
            .collect()
    }

    /// beta of a mixed Lie element: an I_s element whose differential is
    /// the input plus an I_s correction. Returns (beta, correction).
    fn beta(&self, xi: &Tensor) -> Result<(Tensor, Tensor)> {
        let gs = self.dgl.gens();
        for (w, _) in xi.iter() {
            let has_x = w.iter().any(|&g| self.is_x(g));
            let has_y = w.iter().any(|&g| !self.is_x(g) && !self.is_s(g));
            if !has_x || !has_y || w.iter().any(|&g| self.is_s(g)) {
                return Err(Error::NotMixed(gs.word_string(w)));
            }
        }
        let mut beta = Tensor::zero();
        let mut dplus = Tensor::zero();
        for class in xi.classes() {
            let cb = class_basis(gs, &class);
            let coords = cb
                .coords(&xi.class_component(&class))
                .ok_or_else(|| Error::Invalid("beta input is not a Lie element".into()))?;
            for (word, c) in cb.basis_words.iter().zip(coords) {
                if c.is_zero() {
                    continue;
                }
                let (b, d) = self.beta_left_normed(word)?;
                beta = beta.add(&b.scale(&c));
                dplus = dplus.add(&d.scale(&c));
            }
        }
        Ok((beta, dplus))
    }

    fn beta_base(&self, a: GenIdx, b: GenIdx) -> Result<(Tensor, Tensor)> {
        let gs = self.dgl.gens();
        let (v, w, flip) = if self.is_x(a) { (a, b, false) } else { (b, a, true) };
        let s = *self.s_map.get(&(v, w)).ok_or_else(|| {
            Error::Invalid(format!(
                "missing suspension generator for ({}, {})",
                gs.id(v),
                gs.id(w)
            ))
        })?;
        let bracket = Tensor::gen(v).bracket(&Tensor::gen(w), gs)?;
        let d = self.dgl.diff(s).sub(&bracket);
        let coeff = if flip {
            // [w,v] = -(-1)^{|w||v|} [v,w]
            sign(gs.degree(a) * gs.degree(b) + 1)
        } else {
            Q::from_integer(1.into())
        };
        Ok((Tensor::gen(s).scale(&coeff), d.scale(&coeff)))
    }

    /// beta of a single left-normed bracket whose word mixes both sides.
    fn beta_left_normed(&self, word: &[GenIdx]) -> Result<(Tensor, Tensor)> {
        let gs = self.dgl.gens();
        let k = word.len();
        assert!(k >= 2);
        if k == 2 {
            return self.beta_base(word[0], word[1]);
        }
        let g = word[k - 1];
        let prefix = &word[..k - 1];
        let pre_mixes = prefix.iter().any(|&x| self.is_x(x))
            && prefix.iter().any(|&x| !self.is_x(x));
        if pre_mixes {
            // [beta(p), g] with correction [D+(p), g] +- [beta(p), dg]
            let (bp, dp) = self.beta_left_normed(prefix)?;
            let pdeg = gs.word_degree(prefix);
            let gt = Tensor::gen(g);
            let b = bp.bracket(&gt, gs)?;
            let d = dp
                .bracket(&gt, gs)?
                .add(&bp.bracket(self.dgl.diff(g), gs)?.scale(&sign(pdeg + 1)));
            return Ok((b, d));
        }
        // pure prefix [p', h]: Jacobi moves the mixing letter g inward:
        // [[p',h],g] = -(-1)^{|p'|(|h|+|g|)} [[h,g],p'] + (-1)^{|h||g|} [[p',g],h]
        let h = word[k - 2];
        let p2 = &word[..k - 2];
        let p2deg = gs.word_degree(p2);
        let hdeg = gs.degree(h);
        let gdeg = gs.degree(g);
        let c_a = sign(p2deg * (hdeg + gdeg) + 1);
        let c_b = sign(hdeg * gdeg);
        // term A: [h,g] is mixed, bracket the prefix back on
        let (bhg, dhg) = self.beta_base(h, g)?;
        let p2t = left_normed(p2, gs);
        let b_a = bhg.bracket(&p2t, gs)?;
        let d_a = dhg
            .bracket(&p2t, gs)?
            .add(&bhg.bracket(&self.dgl.d(&p2t), gs)?.scale(&sign(hdeg + gdeg + 1)));
        // term B: shorter mixed left-normed word, recurse
        let mut wb: Word = p2.to_vec();
        wb.push(g);
        let (bb, db) = self.beta_left_normed(&wb)?;
        let ht = Tensor::gen(h);
        let b_b = bb.bracket(&ht, gs)?;
        let d_b = db
            .bracket(&ht, gs)?
            .add(&bb.bracket(self.dgl.diff(h), gs)?.scale(&sign(p2deg + gdeg + 1)));
        Ok((
            b_a.scale(&c_a).add(&b_b.scale(&c_b)),
            d_a.scale(&c_a).add(&d_b.scale(&c_b)),
        ))
    }

    /// Finds omega in the suspension ideal with D(omega) = c, for a cycle c
    /// in the kernel of phi: preimage in the kernel, then push the
    /// suspension-free part into the ideal with beta.
    fn solve_in_ideal(&self, allowed: &[GenIdx], c: &Tensor, context: &str) -> Result<Tensor> {
        if c.is_zero() {
            return Ok(Tensor::zero());
        }
        let tau = preimage_in_kernel(&self.dgl, allowed, &[&self.p_x, &self.p_y], c, context)?;
        let (_, tau_prime) = tau.split_by_letter(|g| self.is_s(g));
        if tau_prime.is_zero() {
            return Ok(tau);
        }
        let (b, _) = self.beta(&tau_prime)?;
        let omega = tau.sub(&self.dgl.d(&b));
        debug_assert!(omega.iter().all(|(w, _)| w.iter().any(|&g| self.is_s(g))));
        debug_assert_eq!(self.dgl.d(&omega), *c);
        Ok(omega)
    }
}

fn require_minimal(l: &Dgl) -> Result<()> {
    if let Some(v) = l.minimality_violations().into_iter().next() {
        return Err(Error::NotMinimal(v));
    }
    Ok(())
}

/// Core of the stage induction; `namer` picks the suspension generator ids.
fn binary_core(
    lx: &Dgl,
    ly: &Dgl,
    nmax: usize,
    namer: &dyn Fn(GenIdx, GenIdx) -> String,
) -> Result<(BinaryCtx, Vec<(GenIdx, GenIdx)>)> {
    require_minimal(lx)?;
    require_minimal(ly)?;
    let stages_x = lx.stages();
    let stages_y = ly.stages();
    let mut gens = GenSet::new();
    let mut diffs = Vec::new();
    let nx = lx.gens().len() as GenIdx;
    let mut roles = Vec::new();
    for (i, g) in lx.gens().iter() {
        gens.push(g.clone())?;
        diffs.push(lx.diff(i).clone());
        roles.push(Role::X { stage: stages_x[i as usize] });
    }
    for (i, g) in ly.gens().iter() {
        gens.push(g.clone())?;
        // shift letters into the product index space
        let mut t = Tensor::zero();
        for (w, c) in ly.diff(i).iter() {
            t.add_term(w.iter().map(|&x| x + nx).collect(), c.clone());
        }
        diffs.push(t);
        roles.push(Role::Y { stage: stages_y[i as usize] });
    }
    let name = format!("{}*{}", lx.name, ly.name);
    let dgl = Dgl::new(&name, gens, diffs)?;
    let mut ctx = BinaryCtx {
        p_x: Projection {
            map: (0..dgl.gens().len() as GenIdx)
                .map(|g| if g < nx { Some(g) } else { None })
                .collect(),
        },
        p_y: Projection {
            map: (0..dgl.gens().len() as GenIdx)
                .map(|g| if g >= nx { Some(g - nx) } else { None })
                .collect(),
        },
        dgl,
        roles,
        s_map: BTreeMap::new(),
    };
    // pairs in stage order: W stage, then V stage, then generator order
    let mut pairs: Vec<(usize, usize, GenIdx, GenIdx)> = Vec::new();
    for (vi, _) in lx.gens().iter() {
        for (wi, _) in ly.gens().iter() {
            pairs.push((stages_y[wi as usize], stages_x[vi as usize], wi, vi));
        }
    }
    pairs.sort();
    let mut omitted = Vec::new();
    for (m, n, wi, vi) in pairs {
        let v = vi; // product index of v (X block is unshifted)
        let w = wi + nx;
        let gs = ctx.dgl.gens();
        let sdeg = gs.degree(v) + gs.degree(w) + 1;
        if sdeg > nmax {
            omitted.push((v, w));
            continue;
        }
        let dv = ctx.dgl.diff(v).clone();
        let dw = ctx.dgl.diff(w).clone();
        let vdeg = ctx.dgl.gens().degree(v);
        let ctx_name = format!("s({},{})", ctx.dgl.gens().id(v), ctx.dgl.gens().id(w));
        // psi in ker phi_{n,m} with D(psi) = [dv, dw]
        let psi = if dv.is_zero() || dw.is_zero() {
            Tensor::zero()
        } else {
            let c = dv.bracket(&dw, ctx.dgl.gens())?;
            let allowed = ctx.allowed(|s| s < n, |s| s < m);
            preimage_in_kernel(&ctx.dgl, &allowed, &[&ctx.p_x, &ctx.p_y], &c, &ctx_name)?
        };
        // omega in I_s^{n,m+1} with D(omega) = [dv, w] + (-1)^{|v|} psi
        let c_omega = dv
            .bracket(&Tensor::gen(w), ctx.dgl.gens())?
            .add(&psi.scale(&sign(vdeg)));
        let allowed = ctx.allowed(|s| s < n, |s| s <= m);
        let omega = ctx.solve_in_ideal(&allowed, &c_omega, &ctx_name)?;
        // pi in I_s^{n+1,m} with D(pi) = [v, dw] - psi
        let c_pi = Tensor::gen(v).bracket(&dw, ctx.dgl.gens())?.sub(&psi);
        let allowed = ctx.allowed(|s| s <= n, |s| s < m);
        let pi = ctx.solve_in_ideal(&allowed, &c_pi, &ctx_name)?;
        let bracket = Tensor::gen(v).bracket(&Tensor::gen(w), ctx.dgl.gens())?;
        let ds = bracket.sub(&omega).sub(&pi.scale(&sign(vdeg)));
        let idx = ctx
            .dgl
            .push_gen(GenInfo::new(&namer(vi, wi), sdeg), ds)?;
        ctx.roles.push(Role::S { v, w, sv: n, sw: m });
        ctx.p_x.map.push(None);
        ctx.p_y.map.push(None);
        ctx.s_map.insert((v, w), idx);
    }
    Ok((ctx, omitted))
}

/// The product model of two minimal dgls: generators V + W + s(V(x)W) with
/// the differential from the stage induction. Suspension generators above
/// the degree cap are omitted and recorded.
pub fn binary_product(lx: &Dgl, ly: &Dgl, nmax: usize) -> Result<ProductModel> {
    let namer = |vi: GenIdx, wi: GenIdx| {
        format!("s{{{},{}}}", lx.gens().id(vi), ly.gens().id(wi))
    };
    let (ctx, omitted_pairs) = binary_core(lx, ly, nmax, &namer)?;
    let nx = lx.gens().len() as GenIdx;
    let info: Vec<PowerGen> = ctx
        .roles
        .iter()
        .map(|r| match *r {
            Role::X { .. } => PowerGen { length: 1, copies: vec![1], base: vec![] },
            Role::Y { .. } => PowerGen { length: 1, copies: vec![2], base: vec![] },
            Role::S { v, w, .. } => PowerGen {
                length: 2,
                copies: vec![1, 2],
                base: vec![
                    ctx.dgl.gens().id(v).to_string(),
                    ctx.dgl.gens().id(w).to_string(),
                ],
            },
        })
        .collect();
    let mut info = info;
    for (g, r) in ctx.roles.iter().enumerate() {
        match *r {
            Role::X { .. } | Role::Y { .. } => {
                info[g].base = vec![ctx.dgl.gens().id(g as GenIdx).to_string()];
            }
            _ => {}
        }
    }
    let incl_x = Projection {
        map: lx.gens().indices().map(Some).collect(),
    };
    let incl_y = Projection {
        map: ly.gens().indices().map(|g| Some(g + nx)).collect(),
    };
    let omitted = omitted_pairs
        .iter()
        .map(|&(v, w)| {
            format!(
                "s{{{},{}}}",
                ctx.dgl.gens().id(v),
                ctx.dgl.gens().id(w)
            )
        })
        .collect();
    Ok(ProductModel {
        factors: vec![lx.clone(), ly.clone()],
        projections: vec![ctx.p_x.clone(), ctx.p_y.clone()],
        inclusions: vec![incl_x, incl_y],
        info,
        roles: Some(ctx.roles),
        omitted,
        cutoff: nmax,
        dgl: ctx.dgl,
    })
}

/// The n-fold power model, built by iterating the binary construction and
/// flattening nested suspensions into suspension words `s{g@i1,...,g@ij}`.
pub fn power_model(l: &Dgl, n: usize, nmax: usize) -> Result<ProductModel> {
    assert!(n >= 1);
    require_minimal(l)?;
    if n == 1 {
        let id = Projection {
            map: l.gens().indices().map(Some).collect(),
        };
        let info = l
            .gens()
            .iter()
            .map(|(_, g)| PowerGen { length: 1, copies: vec![1], base: vec![g.id.clone()] })
            .collect();
        return Ok(ProductModel {
            dgl: l.clone(),
            factors: vec![l.clone()],
            projections: vec![id.clone()],
            inclusions: vec![id],
            info,
            roles: None,
            omitted: Vec::new(),
            cutoff: nmax,
        });
    }
    let copy = |k: usize| -> Result<Dgl> {
        l.rename(&format!("{}@{}", l.name, k), |g| format!("{}@{}", g.id, k))
    };
    fn member_str(m: &PowerGen) -> Vec<String> {
        m.base
            .iter()
            .zip(&m.copies)
            .map(|(b, c)| format!("{}@{}", b, c))
            .collect()
    }
    let mut cur = copy(1)?;
    let mut cur_info: Vec<PowerGen> = l
        .gens()
        .iter()
        .map(|(_, g)| PowerGen { length: 1, copies: vec![1], base: vec![g.id.clone()] })
        .collect();
    let mut projections: Vec<Projection> = vec![Projection {
        map: l.gens().indices().map(Some).collect(),
    }];
    let mut factors = vec![copy(1)?];
    let mut omitted: Vec<String> = Vec::new();
    for k in 2..=n {
        let ck = copy(k)?;
        let cur_info_ref = &cur_info;
        let l_ref = l;
        let namer = move |vi: GenIdx, wi: GenIdx| {
            let mut members = member_str(&cur_info_ref[vi as usize]);
            members.push(format!("{}@{}", l_ref.gens().id(wi), k));
            format!("s{{{}}}", members.join(","))
        };
        let (ctx, omitted_pairs) = binary_core(&cur, &ck, nmax, &namer)?;
        let ncur = cur.gens().len() as GenIdx;
        // bookkeeping for the new index space
        let mut info: Vec<PowerGen> = Vec::with_capacity(ctx.dgl.gens().len());
        for r in &ctx.roles {
            info.push(match *r {
                Role::X { .. } => cur_info[info.len()].clone(),
                Role::Y { .. } => {
                    let wi = info.len() as GenIdx - ncur;
                    PowerGen {
                        length: 1,
                        copies: vec![k],
                        base: vec![l.gens().id(wi).to_string()],
                    }
                }
                Role::S { v, w, .. } => {
                    let mut pg = cur_info[v as usize].clone();
                    pg.length += 1;
                    pg.copies.push(k);
                    pg.base.push(l.gens().id(w - ncur).to_string());
                    pg
                }
            });
        }
        for &(v, w) in &omitted_pairs {
            let mut members = member_str(&cur_info[v as usize]);
            members.push(format!("{}@{}", l.gens().id(w - ncur), k));
            omitted.push(format!("s{{{}}}", members.join(",")));
        }
        projections = projections
            .iter()
            .map(|p| Projection::compose(p, &ctx.p_x))
            .collect();
        projections.push(ctx.p_y.clone());
        factors.push(copy(k)?);
        cur = ctx.dgl;
        cur = cur.rename(&format!("{}^{}", l.name, k), |g| g.id.clone())?;
        cur_info = info;
    }
    // the projection target index spaces are the copies; factor i uses ids g@i
    let inclusions: Vec<Projection> = (1..=n)
        .map(|i| {
            let factor = &factors[i - 1];
            let mut incl = vec![None; factor.gens().len()];
            for (g, pg) in cur_info.iter().enumerate() {
                if pg.length == 1 && pg.copies[0] == i {
                    let fid = format!("{}@{}", pg.base[0], i);
                    incl[factor.gens().idx(&fid).unwrap() as usize] = Some(g as GenIdx);
                }
            }
            Projection { map: incl }
        })
        .collect();
    Ok(ProductModel {
        dgl: cur,
        factors,
        projections,
        inclusions,
        info: cur_info,
        roles: None,
        omitted,
        cutoff: nmax,
    })
}

/// Expected number of power-model generators in each degree, by direct
/// enumeration of suspension words (independent of the construction).
pub fn power_degree_census(l: &Dgl, n: usize, nmax: usize) -> BTreeMap<usize, usize> {
    let mut out: BTreeMap<usize, usize> = BTreeMap::new();
    let gens: Vec<usize> = l.gens().iter().map(|(_, g)| g.degree).collect();
    // choose j copies, then any word of base generators of length j
    fn rec(gens: &[usize], j: usize, pos: usize, acc: usize, out: &mut Vec<usize>) {
        if pos == j {
            out.push(acc);
            return;
        }
        for d in gens {
            rec(gens, j, pos + 1, acc + d, out);
        }
    }
    for j in 1..=n {
        let mut sums = Vec::new();
        rec(&gens, j, 0, 0, &mut sums);
        let subsets = binomial(n, j);
        for s in sums {
            let deg = s + j - 1;
            if deg <= nmax {
                *out.entry(deg).or_insert(0) += subsets;
            }
        }
    }
    out
}

fn binomial(n: usize, k: usize) -> usize {
    let mut r = 1usize;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

// ---------------------------------------------------------------------------
// diagonal
// ---------------------------------------------------------------------------

/// The diagonal L -> power_model(L, n): z maps to z@1 + ... + z@n plus a
/// correction in the ideal of suspension generators, solved degree by
/// degree so that the result is a chain map.
pub fn diagonal_model(l: &Dgl, n: usize, nmax: usize) -> Result<(DglMorphism, ProductModel)> {
    let power = power_model(l, n, nmax)?;
    if n == 1 {
        return Ok((DglMorphism::identity(l), power));
    }
    let long: Vec<bool> = power.info.iter().map(|pg| pg.length >= 2).collect();
    let mut assign: Vec<Tensor> = vec![Tensor::zero(); l.gens().len()];
    let mut order: Vec<GenIdx> = l.gens().indices().collect();
    order.sort_by_key(|&g| (l.gens().degree(g), g));
    for z in order {
        let deg = l.gens().degree(z);
        let mut linear = Tensor::zero();
        for incl in &power.inclusions {
            linear = linear.add(&incl.apply(&Tensor::gen(z)));
        }
        // rhs for the correction: delta(dz) - D(linear part)
        let dz = l.diff(z);
        let mut delta_dz = Tensor::zero();
        for (w, c) in dz.iter() {
            let mut t = Tensor::from_term(vec![], c.clone());
            for &g in w {
                t = t.concat(&assign[g as usize]);
            }
            delta_dz = delta_dz.add(&t);
        }
        let rhs = delta_dz.sub(&power.dgl.d(&linear));
        let xi = if rhs.is_zero() {
            Tensor::zero()
        } else {
            let mut solver = crate::dgl::DSolve::new(&power.dgl);
            let long = &long;
            solver.class_filter = Some(Box::new(move |c: &Vec<GenIdx>| {
                c.iter().any(|&g| long[g as usize])
            }));
            match solver.solve(deg, &rhs)? {
                Some(out) => out.particular,
                None => {
                    return Err(Error::LiftFailure {
                        degree: deg,
                        gen: l.gens().id(z).to_string(),
                    })
                }
            }
        };
        assign[z as usize] = linear.add(&xi);
    }
    let delta = DglMorphism::new(l.clone(), power.dgl.clone(), assign)?;
    Ok((delta, power))
}

// ---------------------------------------------------------------------------
// fat wedge
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct FatWedge {
    /// Power model of the full map model over n+1 copies.
    pub power: ProductModel,
    /// Sub-dgl on the kept generators.
    pub sub: Dgl,
    /// Letter inclusion of `sub` into the power model.
    pub incl: Projection,
    /// Indices (in `sub`) of the relative generators U (kept, length >= 2).
    pub u_gens: Vec<GenIdx>,
    /// n+1.
    pub copies: usize,
    pub removed: Vec<String>,
}

/// The fat-wedge sub-model: all power generators except the top-length
/// suspension words built entirely from relative (non-domain) generators.
/// For n = 0 the model degenerates to the domain sub-dgl.
pub fn fat_wedge_model(m: &Dgl, n: usize, nmax: usize) -> Result<FatWedge> {
    let power = power_model(m, n + 1, nmax)?;
    let is_domain = |id: &str| -> bool {
        m.gens()
            .idx(id)
            .map(|g| m.gens().info(g).domain)
            .unwrap_or(false)
    };
    let keep: Vec<bool> = power
        .info
        .iter()
        .map(|pg| {
            if n == 0 {
                pg.length == 1 && is_domain(&pg.base[0])
            } else {
                !(pg.length == n + 1 && pg.base.iter().all(|b| !is_domain(b)))
            }
        })
        .collect();
    let removed: Vec<String> = power
        .dgl
        .gens()
        .iter()
        .filter(|(g, _)| !keep[*g as usize])
        .map(|(_, info)| info.id.clone())
        .collect();
    // sub-dgl on kept generators, verifying closure of the differential
    let mut back = vec![None; power.dgl.gens().len()];
    let mut gens = GenSet::new();
    let mut fwd = Vec::new();
    for (g, info) in power.dgl.gens().iter() {
        if keep[g as usize] {
            let idx = gens.push(info.clone())?;
            back[g as usize] = Some(idx);
            fwd.push(g);
        }
    }
    let mut diffs = Vec::new();
    for &g in &fwd {
        let mut t = Tensor::zero();
        for (w, c) in power.dgl.diff(g).iter() {
            let mapped: Option<Word> = w.iter().map(|&x| back[x as usize]).collect();
            match mapped {
                Some(word) => t.add_term(word, c.clone()),
                None => {
                    let witness = w
                        .iter()
                        .find(|&&x| back[x as usize].is_none())
                        .unwrap();
                    return Err(Error::ClosureViolation {
                        gen: power.dgl.gens().id(g).to_string(),
                        witness: power.dgl.gens().id(*witness).to_string(),
                    });
                }
            }
        }
        diffs.push(t);
    }
    let sub = Dgl::new(&format!("T{}({})", n + 1, m.name), gens, diffs)?;
    let u_gens: Vec<GenIdx> = sub
        .gens()
        .indices()
        .filter(|&g| power.info[fwd[g as usize] as usize].length >= 2)
        .collect();
    Ok(FatWedge {
        incl: Projection {
            map: fwd.iter().map(|&g| Some(g)).collect(),
        },
        sub,
        u_gens,
        copies: n + 1,
        removed,
        power,
    })
}

// ---------------------------------------------------------------------------
// cofibration replacement
// ---------------------------------------------------------------------------

/// Factors `f` as an inclusion L(V) -> L(V + W) followed by a
/// quasi-isomorphism rho onto f's target, adjoining W degree by degree to
/// surject onto target homology and kill excess classes.
///
/// Returns the extended dgl (source generators flagged as domain) and rho.
pub fn cofibration_replacement(f: &DglMorphism, nmax: usize) -> Result<(Dgl, DglMorphism)> {
    if let Some(r) = free_extension_shortcut(f)? {
        return Ok(r);
    }
    // start from the source with domain flags
    let mut gens = GenSet::new();
    for (_, g) in f.source.gens().iter() {
        let mut g2 = g.clone();
        g2.domain = true;
        gens.push(g2)?;
    }
    let mut r = Dgl::new(
        &format!("cof({})", f.target.name),
        gens,
        (0..f.source.gens().len())
            .map(|i| f.source.diff(i as GenIdx).clone())
            .collect(),
    )?;
    let mut rho_assign: Vec<Tensor> = f.assign.clone();
    let target = &f.target;
    let mut fresh = 0usize;
    let mut fresh_name = |gens: &GenSet| -> String {
        loop {
            fresh += 1;
            let id = format!("w{}", fresh);
            if gens.idx(&id).is_none() {
                return id;
            }
        }
    };
    for d in 1..=nmax {
        // surjectivity: adjoin cycles hitting unhit target classes
        {
            let rho = DglMorphism::new(r.clone(), target.clone(), rho_assign.clone())?;
            let mut tctx = crate::dgl::HomologyCtx::new(target);
            let mut rctx = crate::dgl::HomologyCtx::new(&r);
            let tdim = tctx.basis(d).dim;
            let mut reducer = crate::linalg::RowReducer::new();
            for b in tctx.boundaries(d) {
                reducer.offer(sparse_row(&b));
            }
            let r_cycles = rctx.cycles(d);
            for z in &r_cycles {
                let elem = rctx.elem_from_coords(d, z);
                let img = rho.apply(&elem);
                if let Some(coords) = tctx.basis(d).coords(&img) {
                    reducer.offer(sparse_row(&coords));
                } else {
                    return Err(Error::Invalid("rho image outside the Lie span".into()));
                }
            }
            let _ = tdim;
            let mut missing = Vec::new();
            for z in tctx.cycles(d) {
                if reducer.offer(sparse_row(&z)) {
                    missing.push(tctx.elem_from_coords(d, &z));
                }
            }
            for t in missing {
                let id = fresh_name(r.gens());
                r.push_gen(GenInfo::new(&id, d), Tensor::zero())?;
                rho_assign.push(t);
            }
        }
        // injectivity: kill homology classes with boundary images
        {
            let rho = DglMorphism::new(r.clone(), target.clone(), rho_assign.clone())?;
            let mut tctx = crate::dgl::HomologyCtx::new(target);
            let mut rctx = crate::dgl::HomologyCtx::new(&r);
            // homology basis representatives of R in degree d
            let mut reducer = crate::linalg::RowReducer::new();
            for b in rctx.boundaries(d) {
                reducer.offer(sparse_row(&b));
            }
            let mut reps: Vec<Tensor> = Vec::new();
            for z in rctx.cycles(d) {
                if reducer.offer(sparse_row(&z)) {
                    reps.push(rctx.elem_from_coords(d, &z));
                }
            }
            if reps.is_empty() {
                continue;
            }
            // kernel of the induced map: combos of reps with boundary image
            let tdim = tctx.basis(d).dim;
            let boundaries = tctx.boundaries(d);
            let cols = boundaries.len() + reps.len();
            let mut m = crate::linalg::SparseMatrix::new(tdim, cols);
            for (j, b) in boundaries.iter().enumerate() {
                for (i, v) in b.iter().enumerate() {
                    m.set(i, j, v.clone());
                }
            }
            for (j, rep) in reps.iter().enumerate() {
                let img = rho.apply(rep);
                let coords = tctx
                    .basis(d)
                    .coords(&img)
                    .ok_or_else(|| Error::Invalid("rho image outside the Lie span".into()))?;
                for (i, v) in coords.into_iter().enumerate() {
                    m.set(i, boundaries.len() + j, v);
                }
            }
            let mut excess_reducer = crate::linalg::RowReducer::new();
            let mut excess: Vec<Tensor> = Vec::new();
            for k in m.kernel_basis() {
                let c_part: Vec<Q> = k[boundaries.len()..].to_vec();
                if c_part.iter().all(|v| v.is_zero()) {
                    continue;
                }
                if excess_reducer.offer(sparse_row(&c_part)) {
                    let mut z = Tensor::zero();
                    for (rep, c) in reps.iter().zip(&c_part) {
                        if !c.is_zero() {
                            z = z.add(&rep.scale(c));
                        }
                    }
                    excess.push(z);
                }
            }
            for z in excess {
                // rho(killer) must bound rho(z) in the target
                let img = rho.apply(&z);
                let t = if img.is_zero() {
                    Tensor::zero()
                } else {
                    let solver = crate::dgl::DSolve::new(target);
                    solver
                        .solve(d + 1, &img)?
                        .ok_or_else(|| Error::StabilizationFailure(nmax))?
                        .particular
                };
                let id = fresh_name(r.gens());
                r.push_gen(GenInfo::new(&id, d + 1), z)?;
                rho_assign.push(t);
            }
        }
    }
    // best-effort minimality: drop acyclic pairs (u, w) with dw = c*u when
    // neither occurs in any other differential
    loop {
        let candidate = find_acyclic_pair(&r);
        let (wi, ui) = match candidate {
            Some(p) => p,
            None => break,
        };
        let (r2, assign2) = drop_pair(&r, &rho_assign, wi, ui)?;
        r = r2;
        rho_assign = assign2;
    }
    let rho = DglMorphism::new(r.clone(), target.clone(), rho_assign)?;
    let quism = check_quasi_iso(&[&rho], nmax)?;
    if !quism.passed {
        return Err(Error::StabilizationFailure(nmax));
    }
    Ok((r, rho))
}

fn sparse_row(v: &[Q]) -> BTreeMap<usize, Q> {
    v.iter()
        .enumerate()
        .filter(|(_, x)| !num::traits::Zero::is_zero(*x))
        .map(|(i, x)| (i, x.clone()))
        .collect()
}

/// When `f` is already a letter-wise inclusion of a sub-dgl, reuse the
/// target: flag the image generators as the domain and take rho = id.
fn free_extension_shortcut(f: &DglMorphism) -> Result<Option<(Dgl, DglMorphism)>> {
    let mut image: Vec<Option<GenIdx>> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for t in &f.assign {
        let mut terms = t.iter();
        match (terms.next(), terms.next()) {
            (Some((w, c)), None) if w.len() == 1 && crate::rational::is_one(c) => {
                if !seen.insert(w[0]) {
                    return Ok(None);
                }
                image.push(Some(w[0]));
            }
            _ => return Ok(None),
        }
    }
    if !f.check_chain_map(usize::MAX - 1).passed {
        return Ok(None);
    }
    let image_set: std::collections::BTreeSet<GenIdx> =
        image.iter().flatten().copied().collect();
    // the image must be closed under the target differential
    for &g in &image_set {
        if !f.target.diff(g).letters_all(|x| image_set.contains(&x)) {
            return Ok(None);
        }
    }
    let mut gens = GenSet::new();
    for (i, g) in f.target.gens().iter() {
        let mut g2 = g.clone();
        g2.domain = image_set.contains(&i);
        gens.push(g2)?;
    }
    let r = Dgl::new(
        &f.target.name,
        gens,
        (0..f.target.gens().len())
            .map(|i| f.target.diff(i as GenIdx).clone())
            .collect(),
    )?;
    let rho = DglMorphism::identity(&f.target);
    let rho = DglMorphism::new(r.clone(), f.target.clone(), rho.assign)?;
    Ok(Some((r, rho)))
}

fn find_acyclic_pair(r: &Dgl) -> Option<(GenIdx, GenIdx)> {
    for (w, winfo) in r.gens().iter() {
        if winfo.domain {
            continue;
        }
        let dw = r.diff(w);
        let mut terms = dw.iter();
        let (word, _) = match (terms.next(), terms.next()) {
            (Some(t), None) if t.0.len() == 1 => t,
            _ => continue,
        };
        let u = word[0];
        if r.gens().info(u).domain {
            continue;
        }
        let free = r.gens().indices().all(|g| {
            g == w || r.diff(g).letters_all(|x| x != u && x != w)
        });
        if free {
            return Some((w, u));
        }
    }
    None
}

fn drop_pair(
    r: &Dgl,
    rho_assign: &[Tensor],
    wi: GenIdx,
    ui: GenIdx,
) -> Result<(Dgl, Vec<Tensor>)> {
    let mut back = vec![None; r.gens().len()];
    let mut gens = GenSet::new();
    let mut keep = Vec::new();
    for (g, info) in r.gens().iter() {
        if g != wi && g != ui {
            back[g as usize] = Some(gens.push(info.clone())?);
            keep.push(g);
        }
    }
    let mut diffs = Vec::new();
    for &g in &keep {
        let mut t = Tensor::zero();
        for (w, c) in r.diff(g).iter() {
            let word: Option<Word> = w.iter().map(|&x| back[x as usize]).collect();
            t.add_term(word.expect("pair letters unused elsewhere"), c.clone());
        }
        diffs.push(t);
    }
    let dgl = Dgl::new(&r.name, gens, diffs)?;
    let assign = keep
        .iter()
        .map(|&g| rho_assign[g as usize].clone())
        .collect();
    Ok((dgl, assign))
}

// ---------------------------------------------------------------------------
// tests
// ---------------------------------------------------------------------------
