//! Berliant-Fujita knowledge-creation technology and its rotation steady state.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BfParams {
    a: f64,
    b: f64,
    theta: f64,
}

impl BfParams {
    pub fn new(a: f64, b: f64, theta: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::domain(format!("isolation productivity a must be positive, got {a}")));
        }
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::domain(format!("collaboration productivity b must be positive, got {b}")));
        }
        check_theta(theta)?;
        Ok(BfParams { a, b, theta })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::domain(format!("theta must lie in (0, 1), got {theta}")));
    }
    Ok(())
}

fn check_share(delta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::domain(format!("time share {delta} outside [0, 1]")));
    }
    Ok(())
}

fn check_stock(name: &str, k: f64) -> Result<()> {
    if !(k >= 0.0 && k.is_finite()) {
        return Err(Error::domain(format!("{name} must be finite and non-negative, got {k}")));
    }
    Ok(())
}

/// `delta * a * k` for an agent working alone.
pub fn isolated_output(params: &BfParams, delta_ii: f64, k_own: f64) -> Result<f64> {
    check_share(delta_ii)?;
    check_stock("own stock", k_own)?;
    if delta_ii == 0.0 {
        return Ok(0.0);
    }
    Ok(delta_ii * params.a * k_own)
}

/// `delta * b * kC^theta * (kDij * kDji)^((1 - theta) / 2)` for a pair.
pub fn pair_output(params: &BfParams, delta_ij: f64, k_c: f64, k_d_ij: f64, k_d_ji: f64) -> Result<f64> {
    check_share(delta_ij)?;
    check_stock("common stock", k_c)?;
    check_stock("differentiated stock", k_d_ij)?;
    check_stock("differentiated stock", k_d_ji)?;
    if delta_ij == 0.0 {
        return Ok(0.0);
    }
    let e = (1.0 - params.theta) / 2.0;
    Ok(delta_ij * params.b * k_c.powf(params.theta) * k_d_ij.powf(e) * k_d_ji.powf(e))
}

/// Component size `1 + 1/theta` and per-partner time share `1 / (1 + 1/theta)`.
pub fn steady_state_targets(theta: f64) -> Result<(f64, f64)> {
    check_theta(theta)?;
    let size = 1.0 + 1.0 / theta;
    Ok((size, 1.0 / size))
}

/// Steady-state component size as an integer, if `1 + 1/theta` is one.
pub fn integer_component_size(theta: f64) -> Result<usize> {
    let (size, _) = steady_state_targets(theta)?;
    let m = size.round();
    if (size - m).abs() > 1e-9 * size {
        return Err(Error::domain(format!("1 + 1/theta = {size} is not an integer; no exact rotation exists")));
    }
    Ok(m as usize)
}

/// Time shares `delta[i][j]`, diagonal included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeAllocation {
    delta: Vec<Vec<f64>>,
}

impl TimeAllocation {
    pub fn new(delta: Vec<Vec<f64>>) -> Result<Self> {
        let n = delta.len();
        for (i, row) in delta.iter().enumerate() {
            if row.len() != n {
                return Err(Error::domain("time allocation must be square"));
            }
            for &d in row {
                check_share(d)?;
            }
            let s: f64 = row.iter().sum();
            if s > 1.0 + 1e-12 {
                return Err(Error::domain(format!("agent {i} allocates {s} > 1 of its time")));
            }
        }
        Ok(TimeAllocation { delta })
    }

    pub fn agents(&self) -> usize {
        self.delta.len()
    }

    pub fn share(&self, i: usize, j: usize) -> f64 {
        self.delta[i][j]
    }

    /// Sizes of the connected components of the graph with an edge wherever
    /// `delta[i][j] > 0`, sorted.
    pub fn component_sizes(&self) -> Vec<usize> {
        let n = self.agents();
        let mut seen = vec![false; n];
        let mut sizes = Vec::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut stack = vec![s];
            let mut size = 0;
            while let Some(u) = stack.pop() {
                size += 1;
                for v in 0..n {
                    if !seen[v] && (self.delta[u][v] > 0.0 || self.delta[v][u] > 0.0) {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
            sizes.push(size);
        }
        sizes.sort_unstable();
        sizes
    }
}

/// One round of a rotation: disjoint pairs, everyone else alone.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Round {
    pub pairs: Vec<(usize, usize)>,
    pub alone: Vec<usize>,
}

/// Rotation over groups of `m` agents in which every pair inside a group
/// meets in exactly one round and every agent spends exactly one round
/// alone, so each of those `m` activities takes a `1/m` share of time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRobinSchedule {
    group_size: usize,
    groups: usize,
    rounds: Vec<Round>,
}

impl RoundRobinSchedule {
    pub fn new(group_size: usize, groups: usize) -> Result<Self> {
        if group_size < 2 {
            return Err(Error::domain("a rotation needs at least two agents per group"));
        }
        if groups == 0 {
            return Err(Error::domain("a rotation needs at least one group"));
        }
        let m = group_size;
        let mut local: Vec<Round> = Vec::with_capacity(m);
        if m % 2 == 1 {
            // Circle method on m slots: in round r agent r sits out and the
            // others pair up as (r + d, r - d).
            for r in 0..m {
                let mut pairs = Vec::new();
                for d in 1..=(m - 1) / 2 {
                    let (x, y) = ((r + d) % m, (r + m - d) % m);
                    pairs.push((x.min(y), x.max(y)));
                }
                local.push(Round { pairs, alone: vec![r] });
            }
        } else {
            // Circle method with a fixed agent, plus one round where all work alone.
            let k = m - 1;
            for r in 0..k {
                let mut pairs = vec![(r.min(k), r.max(k))];
                for d in 1..m / 2 {
                    let (x, y) = ((r + d) % k, (r + k - d) % k);
                    pairs.push((x.min(y), x.max(y)));
                }
                local.push(Round { pairs, alone: Vec::new() });
            }
            local.push(Round { pairs: Vec::new(), alone: (0..m).collect() });
        }
        let rounds = local
            .into_iter()
            .map(|r| {
                let mut pairs = Vec::new();
                let mut alone = Vec::new();
                for g in 0..groups {
                    let o = g * m;
                    pairs.extend(r.pairs.iter().map(|(x, y)| (x + o, y + o)));
                    alone.extend(r.alone.iter().map(|x| x + o));
                }
                Round { pairs, alone }
            })
            .collect();
        Ok(RoundRobinSchedule { group_size, groups, rounds })
    }

    /// Schedule realizing the steady state for `theta`.
    pub fn for_theta(theta: f64, groups: usize) -> Result<Self> {
        Self::new(integer_component_size(theta)?, groups)
    }

    pub fn agents(&self) -> usize {
        self.group_size * self.groups
    }

    pub fn rounds(&self) -> &[Round] {
        &self.rounds
    }

    /// Time shares implied by one full cycle of equally long rounds.
    pub fn allocation(&self) -> TimeAllocation {
        let n = self.agents();
        let mut counts = vec![vec![0usize; n]; n];
        for r in &self.rounds {
            for &(i, j) in &r.pairs {
                counts[i][j] += 1;
                counts[j][i] += 1;
            }
            for &i in &r.alone {
                counts[i][i] += 1;
            }
        }
        let len = self.rounds.len();
        let delta = counts.into_iter().map(|row| row.into_iter().map(|c| c as f64 / len as f64).collect()).collect();
        TimeAllocation { delta }
    }
}

/// Initial stocks; the steady state requires enough common knowledge, which
/// the model leaves unspecified, so they are configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InitialStocks {
    pub common: f64,
    pub differentiated: f64,
    pub own: f64,
}

impl Default for InitialStocks {
    fn default() -> Self {
        InitialStocks { common: 10.0, differentiated: 10.0, own: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeState {
    k_c: Vec<Vec<f64>>,
    k_d: Vec<Vec<f64>>,
    k_own: Vec<f64>,
}

impl KnowledgeState {
    pub fn new(agents: usize, init: InitialStocks) -> Result<Self> {
        check_stock("initial common stock", init.common)?;
        check_stock("initial differentiated stock", init.differentiated)?;
        check_stock("initial own stock", init.own)?;
        let mut k_c = vec![vec![init.common; agents]; agents];
        let mut k_d = vec![vec![init.differentiated; agents]; agents];
        for i in 0..agents {
            k_c[i][i] = 0.0;
            k_d[i][i] = 0.0;
        }
        Ok(KnowledgeState { k_c, k_d, k_own: vec![init.own; agents] })
    }

    pub fn agents(&self) -> usize {
        self.k_own.len()
    }

    pub fn common(&self, i: usize, j: usize) -> f64 {
        self.k_c[i][j]
    }

    pub fn differentiated(&self, i: usize, j: usize) -> f64 {
        self.k_d[i][j]
    }

    pub fn own(&self, i: usize) -> f64 {
        self.k_own[i]
    }

    /// Plays one round lasting `duration` of the period. Joint output is
    /// common to the pair and differentiates both from everyone else;
    /// solo output differentiates the agent from everyone.
    pub fn step(&mut self, params: &BfParams, round: &Round, duration: f64) -> Result<f64> {
        let n = self.agents();
        let mut outputs = Vec::with_capacity(round.pairs.len() + round.alone.len());
        for &(i, j) in &round.pairs {
            let y = pair_output(params, duration, self.k_c[i][j], self.k_d[i][j], self.k_d[j][i])?;
            outputs.push((i, Some(j), y));
        }
        for &i in &round.alone {
            outputs.push((i, None, isolated_output(params, duration, self.k_own[i])?));
        }
        let mut total = 0.0;
        for (i, partner, y) in outputs {
            total += y;
            match partner {
                Some(j) => {
                    self.k_c[i][j] += y;
                    self.k_c[j][i] += y;
                    for k in 0..n {
                        if k != i && k != j {
                            self.k_d[i][k] += y;
                            self.k_d[j][k] += y;
                        }
                    }
                    self.k_own[i] += y;
                    self.k_own[j] += y;
                }
                None => {
                    for k in 0..n {
                        if k != i {
                            self.k_d[i][k] += y;
                        }
                    }
                    self.k_own[i] += y;
                }
            }
        }
        Ok(total)
    }

    pub fn is_valid(&self) -> bool {
        let n = self.agents();
        (0..n).all(|i| {
            self.k_own[i].is_finite()
                && self.k_own[i] >= 0.0
                && (0..n).all(|j| {
                    self.k_c[i][j] == self.k_c[j][i]
                        && self.k_c[i][j].is_finite()
                        && self.k_c[i][j] >= 0.0
                        && self.k_d[i][j].is_finite()
                        && self.k_d[i][j] >= 0.0
                })
        })
    }
}

/// Outcome of running a rotation for several cycles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationRun {
    pub allocation: TimeAllocation,
    pub component_sizes: Vec<usize>,
    pub output_per_cycle: Vec<f64>,
    pub state: KnowledgeState,
}

/// Runs the steady-state rotation for `theta` over `groups` groups.
pub fn simulate_rotation(params: &BfParams, groups: usize, cycles: usize, init: InitialStocks) -> Result<RotationRun> {
    let schedule = RoundRobinSchedule::for_theta(params.theta, groups)?;
    let mut state = KnowledgeState::new(schedule.agents(), init)?;
    let duration = 1.0 / schedule.rounds().len() as f64;
    let mut output_per_cycle = Vec::with_capacity(cycles);
    for _ in 0..cycles {
        let mut y = 0.0;
        for r in schedule.rounds() {
            y += state.step(params, r, duration)?;
        }
        output_per_cycle.push(y);
    }
    let allocation = schedule.allocation();
    let component_sizes = allocation.component_sizes();
    Ok(RotationRun { allocation, component_sizes, output_per_cycle, state })
}
