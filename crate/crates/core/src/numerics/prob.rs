use rug::Float;

use super::binomial::binomial_row;
use super::{PrecisionContext, RadAngle, Real};
use crate::error::{domain, Result};

/// Which measurement basis a success probability belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Component {
    Cos,
    Sin,
}

/// Probability of a one and of a zero, each computed directly so that values
/// near 0 or 1 keep full relative accuracy.
#[derive(Clone, Debug, PartialEq)]
pub struct Bernoulli {
    pub p: Real,
    pub q: Real,
}

impl Bernoulli {
    /// `p = (1 + cos α)/2 = cos²(α/2)`.
    pub fn from_cos(alpha: &Real) -> Self {
        let half = Float::with_val(alpha.prec(), alpha / 2u32);
        let c = half.clone().cos();
        let s = half.sin();
        Bernoulli {
            p: c.square(),
            q: s.square(),
        }
    }

    /// `p = (1 + sin α)/2 = cos²(π/4 − α/2)`.
    pub fn from_sin(alpha: &Real) -> Self {
        let prec = alpha.prec();
        let quarter = Float::with_val(prec, rug::float::Constant::Pi) / 4u32;
        let t = quarter - Float::with_val(prec, alpha / 2u32);
        let c = t.clone().cos();
        let s = t.sin();
        Bernoulli {
            p: c.square(),
            q: s.square(),
        }
    }

    pub fn from_angle(alpha: &Real, component: Component) -> Self {
        match component {
            Component::Cos => Self::from_cos(alpha),
            Component::Sin => Self::from_sin(alpha),
        }
    }

    pub fn from_p(p: &Real) -> Self {
        let q = Float::with_val(p.prec(), 1 - p);
        Bernoulli { p: p.clone(), q }
    }

    pub fn prec(&self) -> u32 {
        self.p.prec()
    }

    /// `C(n,k) p^k q^(n-k)` for `k = 0..=n`.
    pub fn pmf(&self, n: u32) -> Vec<Real> {
        let prec = self.prec();
        let row = binomial_row(n);
        let powers = |x: &Real| {
            let mut v = Vec::with_capacity(n as usize + 1);
            let mut acc = Float::with_val(prec, 1);
            v.push(acc.clone());
            for _ in 0..n {
                acc *= x;
                v.push(acc.clone());
            }
            v
        };
        let pp = powers(&self.p);
        let qq = powers(&self.q);
        (0..=n as usize)
            .map(|k| {
                let mut t = Float::with_val(prec, &pp[k] * &qq[n as usize - k]);
                t *= &row[k];
                t
            })
            .collect()
    }

    /// Mass outside `[lo, hi]`; an empty interval (`lo > hi`) gives 1.
    pub fn outside_mass(&self, n: u32, lo: i64, hi: i64) -> Real {
        let prec = self.prec();
        let (lo_c, hi_c) = (lo.max(0), hi.min(n as i64));
        if lo_c > hi_c {
            return Float::with_val(prec, 1);
        }
        let pmf = self.pmf(n);
        let mut s = Float::new(prec);
        for t in &pmf[..lo_c as usize] {
            s += t;
        }
        for t in &pmf[hi_c as usize + 1..] {
            s += t;
        }
        s
    }
}

/// `p_x(α) = (1 + cos α)/2` or `p_y(α) = (1 + sin α)/2` at context precision.
pub fn p_from_angle(alpha: &RadAngle, component: Component, ctx: PrecisionContext) -> Real {
    Bernoulli::from_angle(&alpha.to_real(ctx), component).p
}

/// Index set `K ⊆ {0..n}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuccessSet1D {
    n: u32,
    members: Vec<u32>,
}

impl SuccessSet1D {
    pub fn new(n: u32, members: impl IntoIterator<Item = u32>) -> Result<Self> {
        let mut members: Vec<u32> = members.into_iter().collect();
        members.sort_unstable();
        members.dedup();
        if let Some(&m) = members.last() {
            if m > n {
                return domain(format!("member {m} outside [0, {n}]"));
            }
        }
        Ok(SuccessSet1D { n, members })
    }

    /// `{lo..=hi} ∩ {0..n}`; empty when `lo > hi`.
    pub fn interval(n: u32, lo: i64, hi: i64) -> Self {
        let (lo, hi) = (lo.max(0), hi.min(n as i64));
        let members = if lo > hi {
            Vec::new()
        } else {
            (lo as u32..=hi as u32).collect()
        };
        SuccessSet1D { n, members }
    }

    pub fn full(n: u32) -> Self {
        SuccessSet1D {
            n,
            members: (0..=n).collect(),
        }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn members(&self) -> &[u32] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, k: u32) -> bool {
        self.members.binary_search(&k).is_ok()
    }

    pub fn complement(&self) -> Self {
        let members = (0..=self.n).filter(|k| !self.contains(*k)).collect();
        SuccessSet1D { n: self.n, members }
    }
}

/// Index set `K ⊆ {0..n}²`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuccessSet2D {
    n: u32,
    members: Vec<(u32, u32)>,
}

impl SuccessSet2D {
    pub fn new(n: u32, members: impl IntoIterator<Item = (u32, u32)>) -> Result<Self> {
        let mut members: Vec<(u32, u32)> = members.into_iter().collect();
        members.sort_unstable();
        members.dedup();
        if let Some(&(i, j)) = members.iter().find(|(i, j)| *i > n || *j > n) {
            return domain(format!("member ({i}, {j}) outside [0, {n}]²"));
        }
        Ok(SuccessSet2D { n, members })
    }

    pub fn from_predicate(n: u32, mut keep: impl FnMut(u32, u32) -> bool) -> Self {
        let mut members = Vec::new();
        for i in 0..=n {
            for j in 0..=n {
                if keep(i, j) {
                    members.push((i, j));
                }
            }
        }
        SuccessSet2D { n, members }
    }

    pub fn full(n: u32) -> Self {
        Self::from_predicate(n, |_, _| true)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// Members in lexicographic order.
    pub fn members(&self) -> &[(u32, u32)] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, i: u32, j: u32) -> bool {
        self.members.binary_search(&(i, j)).is_ok()
    }

    pub fn complement(&self) -> Self {
        Self::from_predicate(self.n, |i, j| !self.contains(i, j))
    }

    pub fn is_subset(&self, other: &SuccessSet2D) -> bool {
        self.members.iter().all(|&(i, j)| other.contains(i, j))
    }
}

pub fn success_prob_1d_with(set: &SuccessSet1D, b: &Bernoulli) -> Real {
    let pmf = b.pmf(set.n);
    let mut s = Float::new(b.prec());
    for &k in &set.members {
        s += &pmf[k as usize];
    }
    s
}

/// `Σ_{k∈K} C(n,k) p^k (1−p)^(n−k)` at the precision of `p`.
pub fn success_prob_1d(set: &SuccessSet1D, p: &Real) -> Real {
    success_prob_1d_with(set, &Bernoulli::from_p(p))
}

pub fn success_prob_2d_with(set: &SuccessSet2D, bx: &Bernoulli, by: &Bernoulli) -> Real {
    let px = bx.pmf(set.n);
    let py = by.pmf(set.n);
    let prec = bx.prec().max(by.prec());
    let mut s = Float::new(prec);
    for &(i, j) in &set.members {
        s += Float::with_val(prec, &px[i as usize] * &py[j as usize]);
    }
    s
}

pub fn success_prob_2d(set: &SuccessSet2D, p_x: &Real, p_y: &Real) -> Real {
    success_prob_2d_with(set, &Bernoulli::from_p(p_x), &Bernoulli::from_p(p_y))
}

/// `Pr(X ≤ k)` for `X ~ Binomial(n, p)`.
pub fn binom_tail_leq(n: u32, k: u32, p: &Real) -> Result<Real> {
    binom_tail_leq_with(n, k, &Bernoulli::from_p(p))
}

pub fn binom_tail_leq_with(n: u32, k: u32, b: &Bernoulli) -> Result<Real> {
    if k > n {
        return domain(format!("k = {k} outside [0, {n}]"));
    }
    let pmf = b.pmf(n);
    let mut s = Float::new(b.prec());
    for t in &pmf[..=k as usize] {
        s += t;
    }
    Ok(s)
}
