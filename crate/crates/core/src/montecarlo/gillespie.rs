//! Exact continuous-time simulation of the jump models.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use super::logseries::sample_log_series;
use super::sumtree::SumTree;
use crate::error::{Error, Result};
use crate::models::{pile_block_rate, Model, ModelSpec};

/// Switches for [`simulate_jump_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JumpOptions {
    /// Reservoir injections and removals; off gives the closed bulk
    /// dynamics, which conserves the particle number.
    pub reservoirs: bool,
}

impl Default for JumpOptions {
    fn default() -> Self {
        JumpOptions { reservoirs: true }
    }
}

/// Cumulative block-size rates `Σ_{i≤j} h_α(i, m)`, built per `m` on demand.
#[derive(Debug, Clone)]
struct BlockTable {
    alpha: u32,
    rows: Vec<Vec<f64>>,
}

impl BlockTable {
    fn new(alpha: u32) -> Self {
        BlockTable {
            alpha,
            rows: vec![Vec::new()],
        }
    }

    fn row(&mut self, m: u32) -> &[f64] {
        let m = m as usize;
        if self.rows.len() <= m {
            self.rows.resize(m + 1, Vec::new());
        }
        if self.rows[m].is_empty() && m > 0 {
            let mut acc = 0.0;
            self.rows[m] = (1..=m as u32)
                .map(|j| {
                    acc += pile_block_rate(self.alpha, j, m as u32);
                    acc
                })
                .collect();
        }
        &self.rows[m]
    }

    fn total(&mut self, m: u32) -> f64 {
        self.row(m).last().copied().unwrap_or(0.0)
    }

    fn sample<R: Rng + ?Sized>(&mut self, m: u32, rng: &mut R) -> u32 {
        let row = self.row(m);
        let u = rng.random::<f64>() * row[row.len() - 1];
        row.partition_point(|&c| c <= u).min(row.len() - 1) as u32 + 1
    }
}

enum Kind {
    Rate {
        c: f64,
        d: f64,
        cap: Option<u32>,
        lm: f64,
        lp: f64,
        rm: f64,
        rp: f64,
    },
    Piles {
        table: BlockTable,
        inject: [f64; 2],
        beta: [f64; 2],
    },
}

struct Sim<'a> {
    kind: Kind,
    eta: &'a mut [u32],
    tree: SumTree,
    reservoirs: bool,
}

impl Sim<'_> {
    fn m(&self) -> usize {
        self.eta.len()
    }

    /// Rate of a single particle leaving site index `i` towards `j`
    /// (`None` for the reservoir on that side).
    fn hop(&self, i: usize, j: Option<usize>, left: bool) -> f64 {
        let Kind::Rate {
            c, d, cap, lm, lp, rm, rp,
        } = self.kind
        else {
            unreachable!()
        };
        let e = self.eta[i] as f64;
        if e == 0.0 {
            return 0.0;
        }
        match j {
            Some(j) => {
                if cap.is_some_and(|k| self.eta[j] >= k) {
                    0.0
                } else {
                    (e * (c + d * self.eta[j] as f64)).max(0.0)
                }
            }
            None if !self.reservoirs => 0.0,
            None => {
                let (l, r) = if left { (lm, rm) } else { (lp, rp) };
                (l * e * (c + d * r)).max(0.0)
            }
        }
    }

    fn neighbours(&self, i: usize) -> (Option<usize>, Option<usize>) {
        let l = i.checked_sub(1);
        let r = if i + 1 < self.m() { Some(i + 1) } else { None };
        (l, r)
    }

    fn refresh_site(&mut self, i: usize) {
        let v = match &mut self.kind {
            Kind::Rate { .. } => {
                let (l, r) = self.neighbours(i);
                self.hop(i, l, true) + self.hop(i, r, false)
            }
            Kind::Piles { table, .. } => {
                let edge = i == 0 || i + 1 == self.eta.len();
                let t = table.total(self.eta[i]);
                // exits into a reservoir are bulk moves for the closed variant
                if edge && !self.reservoirs {
                    if self.eta.len() == 1 {
                        0.0
                    } else {
                        t
                    }
                } else {
                    2.0 * t
                }
            }
        };
        self.tree.set(i, v);
    }

    fn refresh_injections(&mut self) {
        let m = self.m();
        let (a, b) = match self.kind {
            _ if !self.reservoirs => (0.0, 0.0),
            Kind::Rate {
                c, d, cap, lm, lp, rm, rp,
            } => {
                let inj = |lam: f64, rho: f64, e: u32| {
                    if cap.is_some_and(|k| e >= k) {
                        0.0
                    } else {
                        (lam * rho * (c + d * e as f64)).max(0.0)
                    }
                };
                (inj(lm, rm, self.eta[0]), inj(lp, rp, self.eta[m - 1]))
            }
            Kind::Piles { inject, .. } => (inject[0], inject[1]),
        };
        self.tree.set(m, a);
        self.tree.set(m + 1, b);
    }

    fn refresh_around(&mut self, sites: &[usize]) {
        let m = self.m();
        let mut seen = [usize::MAX; 6];
        let mut k = 0;
        for &s in sites {
            for i in s.saturating_sub(1)..=(s + 1).min(m - 1) {
                if !seen[..k].contains(&i) {
                    seen[k] = i;
                    k += 1;
                    self.refresh_site(i);
                }
            }
        }
        self.refresh_injections();
    }

    fn fire<R: Rng + ?Sized>(&mut self, ch: usize, rng: &mut R) {
        let m = self.m();
        if ch >= m {
            let site = if ch == m { 0 } else { m - 1 };
            let k = match &self.kind {
                Kind::Rate { .. } => 1,
                Kind::Piles { beta, .. } => sample_log_series(beta[ch - m], rng) as u32,
            };
            self.eta[site] += k;
            self.refresh_around(&[site]);
            return;
        }
        let i = ch;
        let (l, r) = self.neighbours(i);
        match &mut self.kind {
            Kind::Rate { .. } => {
                let a = self.hop(i, l, true);
                let b = self.hop(i, r, false);
                let go_left = rng.random::<f64>() * (a + b) < a;
                let dest = if go_left { l } else { r };
                self.eta[i] -= 1;
                if let Some(j) = dest {
                    self.eta[j] += 1;
                    self.refresh_around(&[i, j]);
                } else {
                    self.refresh_around(&[i]);
                }
            }
            Kind::Piles { table, .. } => {
                let j = table.sample(self.eta[i], rng);
                let dest = match (l, r, self.reservoirs) {
                    (None, Some(r), false) => Some(r),
                    (Some(l), None, false) => Some(l),
                    _ => {
                        if rng.random::<bool>() {
                            l
                        } else {
                            r
                        }
                    }
                };
                self.eta[i] -= j;
                if let Some(d) = dest {
                    self.eta[d] += j;
                }
                self.refresh_around(&[i]);
                if let Some(d) = dest {
                    self.refresh_around(&[d]);
                }
            }
        }
    }
}

/// Run the jump process from `eta0` for macroscopic time `t`.
pub fn simulate_jump<R: Rng + ?Sized>(spec: &ModelSpec, eta0: &[u32], t: f64, rng: &mut R) -> Result<Vec<u32>> {
    simulate_jump_with(spec, eta0, t, rng, JumpOptions::default())
}

pub fn simulate_jump_with<R: Rng + ?Sized>(
    spec: &ModelSpec,
    eta0: &[u32],
    t: f64,
    rng: &mut R,
    opts: JumpOptions,
) -> Result<Vec<u32>> {
    if !(t >= 0.0) {
        return Err(Error::Usage(format!("time must be non-negative, got {t}")));
    }
    if eta0.len() != spec.n - 1 {
        return Err(Error::Usage(format!(
            "configuration has {} sites, expected {}",
            eta0.len(),
            spec.n - 1
        )));
    }
    if let Some(cap) = spec.max_occupation() {
        if let Some(v) = eta0.iter().find(|&&v| v > cap) {
            return Err(Error::Domain(format!("occupation {v} exceeds the cap {cap}")));
        }
    }
    let kind = match spec.model {
        Model::RateFamily {
            c,
            d,
            lambda_minus,
            lambda_plus,
            rho_minus,
            rho_plus,
            ..
        } => Kind::Rate {
            c,
            d,
            cap: spec.max_occupation(),
            lm: lambda_minus,
            lp: lambda_plus,
            rm: rho_minus,
            rp: rho_plus,
        },
        Model::Piles {
            alpha,
            beta_minus,
            beta_plus,
        } => Kind::Piles {
            table: BlockTable::new(alpha),
            inject: [-(-beta_minus).ln_1p(), -(-beta_plus).ln_1p()],
            beta: [beta_minus, beta_plus],
        },
        _ => return Err(Error::Usage(format!("{} is not a jump model", spec.name()))),
    };
    let mut eta = eta0.to_vec();
    let m = eta.len();
    let scale = (spec.n * spec.n) as f64;
    let horizon = t * scale;
    let mut sim = Sim {
        kind,
        eta: &mut eta,
        tree: SumTree::new(m + 2),
        reservoirs: opts.reservoirs,
    };
    for i in 0..m {
        sim.refresh_site(i);
    }
    sim.refresh_injections();
    let mut now = 0.0;
    loop {
        let total = sim.tree.total();
        if total <= 0.0 {
            break;
        }
        let e: f64 = Exp1.sample(rng);
        now += e / total;
        if now > horizon {
            break;
        }
        let mut ch = sim.tree.find(rng.random::<f64>() * total);
        if sim.tree.get(ch) <= 0.0 {
            // rounding at an interval edge; take the last live channel
            ch = (0..m + 2).rev().find(|&k| sim.tree.get(k) > 0.0).unwrap();
        }
        sim.fire(ch, rng);
    }
    Ok(eta)
}
