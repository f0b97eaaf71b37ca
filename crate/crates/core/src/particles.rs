//! Sticky-particle realization of the piston problem.
//!
//! Each gas state is cut into equal-mass particles at cell centres; every
//! collision is perfectly inelastic. Between collisions all clusters move
//! ballistically, so the simulation is a sequence of exact events driven by
//! a priority queue of adjacent-pair collision times.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::closed_form::solve;
use crate::error::{Error, Result};
use crate::model::{classify, CaseTag, RiemannSetup};
use crate::scalar::{format_number, Real};
use crate::trajectory::{uniform_grid, Contact, KinkNode, Side, Trajectory};

const NONE: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Cluster<T> {
    mass: T,
    momentum: T,
    velocity: T,
    x_ref: T,
    t_ref: T,
    width: T,
    from_left: T,
    from_right: T,
    prev: usize,
    next: usize,
    alive: bool,
    version: u32,
}

impl<T: Real> Cluster<T> {
    fn position(&self, t: T) -> T {
        self.x_ref + self.velocity * (t - self.t_ref)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Pending<T> {
    time: T,
    left: usize,
    right: usize,
    versions: (u32, u32),
}

impl<T: PartialOrd> Eq for Pending<T> {}

impl<T: PartialOrd> PartialOrd for Pending<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: PartialOrd> Ord for Pending<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time.partial_cmp(&other.time).unwrap_or(Ordering::Equal).then(self.left.cmp(&other.left))
    }
}

/// Which face the particles absorbed in one event came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EventSide {
    Left,
    Right,
    Both,
    /// Gas clusters merged away from the piston.
    Gas,
}

impl EventSide {
    pub fn as_str(self) -> &'static str {
        match self {
            EventSide::Left => "left",
            EventSide::Right => "right",
            EventSide::Both => "both",
            EventSide::Gas => "gas",
        }
    }
}

/// Piston state right after one (possibly multi-way) merge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventRecord<T> {
    pub t: T,
    pub side: EventSide,
    pub piston_mass: T,
    pub piston_velocity: T,
    pub piston_x1: T,
}

/// Accreted masses `m1`, `m2` sampled at `t = 0` and after each event.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AccretionRecord<T> {
    pub t: Vec<T>,
    pub m1: Vec<T>,
    pub m2: Vec<T>,
}

impl<T: Real> AccretionRecord<T> {
    /// Accreted masses at time `t` (piecewise constant between events).
    pub fn at(&self, t: T) -> (T, T) {
        let idx = self.t.partition_point(|&s| s <= t).saturating_sub(1);
        (self.m1[idx], self.m2[idx])
    }
}

/// Sticky-particle state: clusters ordered left to right in a linked list.
#[derive(Debug, Clone)]
pub struct ParticleSystem<T> {
    clusters: Vec<Cluster<T>>,
    queue: BinaryHeap<Reverse<Pending<T>>>,
    piston_index: usize,
    time: T,
    n_per_side: usize,
    half_width: T,
    setup: RiemannSetup<T>,
    event_count: usize,
}

/// Builds the particle system for `setup` with `n_per_side` particles over
/// a gas extent `half_width` on each side.
pub fn discretize<T: Real>(setup: &RiemannSetup<T>, n_per_side: usize, half_width: T) -> Result<ParticleSystem<T>> {
    setup.validate()?;
    if n_per_side == 0 {
        return Err(Error::Precondition("n_per_side must be at least 1".into()));
    }
    if !(half_width > T::zero()) || !half_width.is_finite() {
        return Err(Error::Precondition(format!("gas extent L must be positive ({half_width})")));
    }
    let s = setup.normalized();
    let n = T::lit(n_per_side as f64);
    let h = half_width / n;
    let particle = |mass: T, velocity: T, x: T, left: bool| Cluster {
        mass,
        momentum: mass * velocity,
        velocity,
        x_ref: x,
        t_ref: T::zero(),
        width: T::zero(),
        from_left: if left { mass } else { T::zero() },
        from_right: if left { T::zero() } else { mass },
        prev: NONE,
        next: NONE,
        alive: true,
        version: 0,
    };

    let mut clusters = Vec::with_capacity(2 * n_per_side + 1);
    if s.rho_left > T::zero() {
        let mass = s.rho_left * half_width / n;
        // written as mirror images of the right-side centres
        for k in (0..n_per_side).rev() {
            clusters.push(particle(mass, s.u_left, -((T::lit(k as f64) + T::half()) * h), true));
        }
    }
    let piston_index = clusters.len();
    clusters.push(Cluster {
        mass: s.m0,
        momentum: s.m0 * s.u0,
        velocity: s.u0,
        x_ref: T::zero(),
        t_ref: T::zero(),
        width: s.l,
        from_left: T::zero(),
        from_right: T::zero(),
        prev: NONE,
        next: NONE,
        alive: true,
        version: 0,
    });
    if s.rho_right > T::zero() {
        let mass = s.rho_right * half_width / n;
        for k in 0..n_per_side {
            clusters.push(particle(mass, s.u_right, s.l + (T::lit(k as f64) + T::half()) * h, false));
        }
    }
    let count = clusters.len();
    for (i, c) in clusters.iter_mut().enumerate() {
        c.prev = if i == 0 { NONE } else { i - 1 };
        c.next = if i + 1 == count { NONE } else { i + 1 };
    }

    let mut system = ParticleSystem {
        clusters,
        queue: BinaryHeap::new(),
        piston_index,
        time: T::zero(),
        n_per_side,
        half_width,
        setup: s,
        event_count: 0,
    };
    for i in 0..count.saturating_sub(1) {
        system.schedule(i);
    }
    Ok(system)
}

impl<T: Real> ParticleSystem<T> {
    pub fn time(&self) -> T {
        self.time
    }

    pub fn n_per_side(&self) -> usize {
        self.n_per_side
    }

    pub fn half_width(&self) -> T {
        self.half_width
    }

    pub fn event_count(&self) -> usize {
        self.event_count
    }

    /// Number of live clusters, piston included.
    pub fn cluster_count(&self) -> usize {
        self.clusters.iter().filter(|c| c.alive).count()
    }

    pub fn piston_mass(&self) -> T {
        self.clusters[self.piston_index].mass
    }

    pub fn piston_velocity(&self) -> T {
        self.clusters[self.piston_index].velocity
    }

    pub fn piston_position(&self, t: T) -> T {
        self.clusters[self.piston_index].position(t)
    }

    /// `(m1, m2)`: gas mass absorbed through the left and right faces.
    pub fn accreted(&self) -> (T, T) {
        let p = &self.clusters[self.piston_index];
        (p.from_left, p.from_right)
    }

    pub fn total_mass(&self) -> T {
        self.live().map(|c| c.mass).sum()
    }

    pub fn total_momentum(&self) -> T {
        self.live().map(|c| c.momentum).sum()
    }

    /// Sum of `|momentum|` over clusters; scale for relative drift.
    pub fn momentum_scale(&self) -> T {
        self.live().map(|c| c.momentum.abs()).sum()
    }

    /// Left edges of live clusters at the current time, left to right.
    pub fn positions(&self) -> Vec<T> {
        self.live().map(|c| c.position(self.time)).collect()
    }

    fn live(&self) -> impl Iterator<Item = &Cluster<T>> {
        self.clusters.iter().filter(|c| c.alive)
    }

    /// Gas extent needed so no face runs out of gas before `t_end`.
    pub fn required_half_width(setup: &RiemannSetup<T>, t_end: T) -> T {
        let s = setup.normalized();
        let mut lo = s.u0;
        let mut hi = s.u0;
        for (rho, u) in [(s.rho_left, s.u_left), (s.rho_right, s.u_right)] {
            if rho > T::zero() {
                lo = lo.min(u);
                hi = hi.max(u);
            }
        }
        (hi - lo) * t_end
    }

    fn schedule(&mut self, left: usize) {
        let right = self.clusters[left].next;
        if right == NONE {
            return;
        }
        let (a, b) = (&self.clusters[left], &self.clusters[right]);
        let closing = a.velocity - b.velocity;
        if !(closing > T::zero()) {
            return;
        }
        let gap = (b.position(self.time) - a.position(self.time) - a.width).max(T::zero());
        let time = self.time + gap / closing;
        self.queue.push(Reverse(Pending { time, left, right, versions: (a.version, b.version) }));
    }

    fn is_current(&self, p: &Pending<T>) -> bool {
        let (a, b) = (&self.clusters[p.left], &self.clusters[p.right]);
        a.alive && b.alive && a.next == p.right && (a.version, b.version) == p.versions
    }

    fn pop_current(&mut self, t_end: T) -> Option<Pending<T>> {
        while let Some(Reverse(p)) = self.queue.peek().copied() {
            if !self.is_current(&p) {
                self.queue.pop();
                continue;
            }
            if p.time > t_end {
                return None;
            }
            self.queue.pop();
            return Some(p);
        }
        None
    }

    /// Processes the next collision batch at or before `t_end`.
    ///
    /// Collisions closer than `1e-14 * max(1, t)` in time are merged in one
    /// pass, chain by chain from left to right. Returns `None` once no
    /// further collision happens before `t_end`.
    pub fn step(&mut self, t_end: T) -> Result<Option<EventRecord<T>>> {
        let Some(first) = self.pop_current(t_end) else { return Ok(None) };
        let slack = T::lit(1e-14) * self.time.abs().max(T::one());
        if first.time < self.time - slack {
            return Err(Error::NegativeEventTime { t: self.time.as_f64(), next: first.time.as_f64() });
        }
        let t_event = first.time.max(self.time);
        let window = T::lit(1e-14) * t_event.abs().max(T::one());
        let mut batch = vec![first];
        while let Some(Reverse(p)) = self.queue.peek().copied() {
            if p.time > t_event + window {
                break;
            }
            self.queue.pop();
            if self.is_current(&p) {
                batch.push(p);
            }
        }
        batch.sort_by_key(|p| p.left);
        self.time = t_event;

        let mut side = EventSide::Gas;
        let mut chain: Vec<usize> = Vec::new();
        let mut survivors = Vec::new();
        for p in &batch {
            if chain.last() != Some(&p.left) {
                if !chain.is_empty() {
                    survivors.push(self.merge(&chain, &mut side));
                }
                chain.clear();
                chain.push(p.left);
            }
            chain.push(p.right);
        }
        survivors.push(self.merge(&chain, &mut side));

        for s in survivors {
            let prev = self.clusters[s].prev;
            if prev != NONE {
                self.schedule(prev);
            }
            self.schedule(s);
        }
        self.event_count += 1;
        let p = &self.clusters[self.piston_index];
        Ok(Some(EventRecord {
            t: self.time,
            side,
            piston_mass: p.mass,
            piston_velocity: p.velocity,
            piston_x1: p.position(self.time),
        }))
    }

    /// Merges consecutive clusters into one, keeping the piston's identity.
    fn merge(&mut self, chain: &[usize], side: &mut EventSide) -> usize {
        let t = self.time;
        let survivor = if chain.contains(&self.piston_index) { self.piston_index } else { chain[0] };
        let (mut mass, mut momentum, mut from_left, mut from_right, mut width) =
            (T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
        for &i in chain {
            let c = &self.clusters[i];
            mass += c.mass;
            momentum += c.momentum;
            from_left += c.from_left;
            from_right += c.from_right;
            width += c.width;
        }
        if survivor == self.piston_index {
            let left = chain[0] < self.piston_index;
            let right = chain[chain.len() - 1] > self.piston_index;
            let this = match (left, right) {
                (true, true) => EventSide::Both,
                (true, false) => EventSide::Left,
                (false, true) => EventSide::Right,
                (false, false) => EventSide::Gas,
            };
            *side = match (*side, this) {
                (EventSide::Gas, s) => s,
                (EventSide::Left, EventSide::Right) | (EventSide::Right, EventSide::Left) => EventSide::Both,
                (s, _) => s,
            };
        }
        let x = self.clusters[survivor].position(t);
        let first = chain[0];
        let last = chain[chain.len() - 1];
        let (prev, next) = (self.clusters[first].prev, self.clusters[last].next);
        for &i in chain {
            if i != survivor {
                self.clusters[i].alive = false;
            }
        }
        let velocity = if mass > T::zero() { momentum / mass } else { self.clusters[survivor].velocity };
        let c = &mut self.clusters[survivor];
        c.mass = mass;
        c.momentum = momentum;
        c.velocity = velocity;
        c.x_ref = x;
        c.t_ref = t;
        c.width = width;
        c.from_left = from_left;
        c.from_right = from_right;
        c.prev = prev;
        c.next = next;
        c.version = c.version.wrapping_add(1);
        if prev != NONE {
            self.clusters[prev].next = survivor;
        }
        if next != NONE {
            self.clusters[next].prev = survivor;
        }
        survivor
    }
}

/// Outcome of a particle run.
#[derive(Debug, Clone)]
pub struct ParticleRun<T> {
    pub trajectory: Trajectory<T>,
    pub accretion: AccretionRecord<T>,
    pub events: Vec<EventRecord<T>>,
    /// Largest `|P(t) - P(0)| / sum |p_i|` over the sampled events and the end state.
    pub momentum_drift: T,
}

/// Runs the simulation to `t_end`.
///
/// The gas extent must exceed the spread of the velocities present times
/// `t_end`; otherwise a face could run out of gas and the run is refused.
pub fn run<T: Real>(mut system: ParticleSystem<T>, t_end: T) -> Result<ParticleRun<T>> {
    let required = ParticleSystem::required_half_width(&system.setup, t_end);
    if system.half_width <= required {
        return Err(Error::DomainTooSmall {
            half_width: system.half_width.as_f64(),
            t_end: t_end.as_f64(),
            required: required.as_f64(),
        });
    }
    let p0 = system.total_momentum();
    // a full recount is O(N); sampling it keeps long runs linear
    let stride = (system.clusters.len() / 256).max(1);
    let scale = system.momentum_scale().max(T::min_positive_value());
    let mut drift = T::zero();

    let s = system.setup;
    let mut nodes = vec![KinkNode { t: T::zero(), x: T::zero(), v: system.piston_velocity() }];
    let mut accretion = AccretionRecord { t: vec![T::zero()], m1: vec![T::zero()], m2: vec![T::zero()] };
    let mut events = Vec::new();
    let mut contact = Contact::default();
    while let Some(record) = system.step(t_end)? {
        if system.event_count.is_multiple_of(stride) {
            drift = drift.max((system.total_momentum() - p0).abs() / scale);
        }
        if record.side != EventSide::Gas {
            let (m1, m2) = system.accreted();
            if m1 > T::zero() && contact.left.is_none() {
                contact.left = Some(record.t);
            }
            if m2 > T::zero() && contact.right.is_none() {
                contact.right = Some(record.t);
            }
            nodes.push(KinkNode { t: record.t, x: record.piston_x1, v: record.piston_velocity });
            accretion.t.push(record.t);
            accretion.m1.push(m1);
            accretion.m2.push(m2);
        }
        events.push(record);
    }
    drift = drift.max((system.total_momentum() - p0).abs() / scale);
    system.time = t_end;

    let case = classify(&s)?;
    let limit = solve(&s).ok().and_then(|t| t.limit_velocity());
    let trajectory = Trajectory::from_polyline(case, s.l, contact, nodes, t_end).with_limit_velocity(limit);
    Ok(ParticleRun { trajectory, accretion, events, momentum_drift: drift })
}

/// Gas extent used when the caller does not fix one.
pub fn default_half_width<T: Real>(setup: &RiemannSetup<T>, t_end: T) -> T {
    let required = ParticleSystem::required_half_width(setup, t_end);
    (required * T::lit(1.01)).max(T::lit(1e-3) * t_end.max(T::one()))
}

/// Event log CSV: `t,event_side,piston_mass,piston_velocity,piston_x1`.
pub fn event_log_csv<T: Real>(events: &[EventRecord<T>]) -> String {
    let mut out = String::from("t,event_side,piston_mass,piston_velocity,piston_x1\n");
    for e in events {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            format_number(e.t.as_f64()),
            e.side.as_str(),
            format_number(e.piston_mass.as_f64()),
            format_number(e.piston_velocity.as_f64()),
            format_number(e.piston_x1.as_f64())
        );
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceStudy {
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of `-log(error)` against `log(n)`; `None` when
    /// fewer than two errors are nonzero.
    pub order: Option<f64>,
}

const CONVERGENCE_SAMPLES: usize = 401;

/// Sup-norm error of the piston position on [0, `t_probe`] for each `n`.
pub fn convergence_study<T: Real>(setup: &RiemannSetup<T>, n_list: &[usize], t_probe: T) -> Result<ConvergenceStudy> {
    let case = classify(setup)?;
    if matches!(case.tag, CaseTag::Case4 | CaseTag::Case5) {
        return Err(Error::Precondition("convergence study expects Cases 1-3 or 6; reflect first".into()));
    }
    let exact = solve(setup)?;
    // a lone probe can land on a collision time shared by every lattice,
    // where the error stops shrinking; the sup over a grid does not
    let grid = uniform_grid(t_probe, CONVERGENCE_SAMPLES);
    let target: Vec<T> = grid.iter().map(|&t| exact.position(t)).collect();
    let half_width = default_half_width(setup, t_probe);
    let rows = n_list
        .par_iter()
        .map(|&n| {
            let outcome = run(discretize(setup, n, half_width)?, t_probe)?;
            let error =
                grid.iter().zip(&target).map(|(&t, &x)| (outcome.trajectory.position(t) - x).abs().as_f64()).fold(0.0, f64::max);
            Ok(ConvergenceRow { n, error })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceStudy { order: fitted_order(&rows), rows })
}

fn fitted_order(rows: &[ConvergenceRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows.iter().filter(|r| r.error > 0.0).map(|r| ((r.n as f64).ln(), -r.error.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
    let (mx, my) = (sx / k, sy / k);
    let (num, den) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + (p.0 - mx) * (p.1 - my), b + (p.0 - mx).powi(2)));
    (den > 0.0).then(|| num / den)
}

impl<T: Real> ParticleRun<T> {
    pub fn event_log_csv(&self) -> String {
        event_log_csv(&self.events)
    }

    /// Largest `|m_side(t) - rho (u t - x1)|`-type gap between particle and
    /// continuum accretion at the given times, for the face `side`.
    pub fn accretion_gap(&self, setup: &RiemannSetup<T>, side: Side, times: &[T]) -> T {
        let s = setup.normalized();
        let c = self.trajectory.contact();
        times
            .iter()
            .map(|&t| {
                let x = self.trajectory.position(t);
                let (m1, m2) = self.accretion.at(t);
                let (measured, expected) = match side {
                    Side::Left => (m1, if c.active(Side::Left, t) { s.rho_left * (s.u_left * t - x) } else { T::zero() }),
                    Side::Right => (m2, if c.active(Side::Right, t) { s.rho_right * (x - s.u_right * t) } else { T::zero() }),
                };
                (measured - expected.max(T::zero())).abs()
            })
            .fold(T::zero(), T::max)
    }
}
