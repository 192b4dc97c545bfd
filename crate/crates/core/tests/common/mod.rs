//! Instance generators and brute-force oracles shared by the property tests
//! and the acceptance target. Instances are built from a seed so proptest
//! and fixed-count loops can use the same code.

#![allow(dead_code)]

use std::collections::VecDeque;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use roadwatch::ec::{Engine, EventInstance, Interval, IntervalSet, RuleSet, WindowConfig};
use roadwatch::obs::{CameraModel, GroundRect, Mat3};
use roadwatch::wpm::{CnfFormula, DependencyGraph, Lit};

pub const ENTITY: &str = "a";

/// Body literal of a generated rule.
#[derive(Debug, Clone)]
pub enum GenLit {
    Event(usize),
    /// Fluent index (`0` is the input fluent `g`, `k` is derived `f{k-1}`), negated?
    Holds(usize, bool),
}

#[derive(Debug, Clone)]
pub struct GenRule {
    pub initiates: bool,
    /// Derived fluent index, 1-based (fluent slot).
    pub head: usize,
    pub body: Vec<GenLit>,
}

/// A random stratified rule set over one entity plus a trace for it.
#[derive(Debug, Clone)]
pub struct EcInstance {
    pub n_events: usize,
    pub n_derived: usize,
    pub rules: Vec<GenRule>,
    pub frames: u64,
    /// Event occurrence times, per event.
    pub events: Vec<Vec<u64>>,
    /// Input fluent intervals.
    pub input: Vec<Interval>,
}

fn fluent_name(slot: usize) -> String {
    if slot == 0 {
        "g".to_string()
    } else {
        format!("f{}", slot - 1)
    }
}

impl EcInstance {
    pub fn generate(seed: u64, max_rules: usize, max_frames: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_events = rng.random_range(1..=4);
        let n_derived = rng.random_range(1..=4);
        let n_rules = rng.random_range(1..=max_rules.max(1));
        let mut rules = Vec::with_capacity(n_rules);
        for _ in 0..n_rules {
            let head = rng.random_range(1..=n_derived);
            let len = rng.random_range(1..=3);
            let body = (0..len)
                .map(|_| {
                    // Bodies may read the input fluent and lower derived fluents.
                    if rng.random_bool(0.5) {
                        GenLit::Event(rng.random_range(0..n_events))
                    } else {
                        GenLit::Holds(rng.random_range(0..head), rng.random_bool(0.3))
                    }
                })
                .collect();
            rules.push(GenRule { initiates: rng.random_bool(0.55), head, body });
        }
        let frames = rng.random_range(50..=max_frames.max(50));
        let events = (0..n_events)
            .map(|_| {
                let rate = rng.random_range(0.002..0.05);
                (0..frames).filter(|_| rng.random_bool(rate)).collect()
            })
            .collect();
        let mut input = Vec::new();
        let mut t = rng.random_range(0..frames / 4 + 1);
        while t < frames {
            let len = rng.random_range(1..frames / 5 + 2);
            input.push(Interval::new(t, (t + len).min(frames)));
            t += len + rng.random_range(1..frames / 5 + 2);
        }
        EcInstance { n_events, n_derived, rules, frames, events, input }
    }

    pub fn program(&self) -> String {
        let mut s = String::new();
        let evs: Vec<String> = (0..self.n_events).map(|e| format!("e{e}")).collect();
        let fls: Vec<String> = (0..=self.n_derived).map(fluent_name).collect();
        s.push_str(&format!("event({}).\nfluent({}).\n", evs.join(", "), fls.join(", ")));
        for r in &self.rules {
            let head = if r.initiates { "inA" } else { "tA" };
            let body: Vec<String> = r
                .body
                .iter()
                .map(|l| match l {
                    GenLit::Event(e) => format!("hA(e{e}(V),T)"),
                    GenLit::Holds(f, neg) => {
                        format!("{}hoA({}(V)=true,T)", if *neg { "not " } else { "" }, fluent_name(*f))
                    }
                })
                .collect();
            s.push_str(&format!("{head}({}(V)=true, T) :- {}.\n", fluent_name(r.head), body.join(", ")));
        }
        s
    }

    /// Pointwise truth of every fluent slot over `[0, frames)`:
    /// `h(t) = init(t) or (h(t-1) and not term(t))`.
    pub fn brute_force(&self) -> Vec<Vec<bool>> {
        let n = self.frames as usize;
        let mut val = vec![vec![false; n]; self.n_derived + 1];
        for iv in &self.input {
            for t in iv.start..iv.end {
                val[0][t as usize] = true;
            }
        }
        let mut happens = vec![vec![false; n]; self.n_events];
        for (e, ts) in self.events.iter().enumerate() {
            for &t in ts {
                happens[e][t as usize] = true;
            }
        }
        for slot in 1..=self.n_derived {
            let mut prev = false;
            for t in 0..n {
                let body_holds = |r: &GenRule| {
                    r.body.iter().all(|l| match l {
                        GenLit::Event(e) => happens[*e][t],
                        GenLit::Holds(f, neg) => val[*f][t] != *neg,
                    })
                };
                let mine = self.rules.iter().filter(|r| r.head == slot);
                let (mut init, mut term) = (false, false);
                for r in mine {
                    if body_holds(r) {
                        if r.initiates {
                            init = true;
                        } else {
                            term = true;
                        }
                    }
                }
                let h = init || (prev && !term);
                val[slot][t] = h;
                prev = h;
            }
        }
        val
    }

    /// Runs the engine with `window` and checks every derived fluent of
    /// every window against the pointwise oracle. Returns a description of
    /// the first mismatch.
    pub fn check(&self, window: WindowConfig) -> Result<(), String> {
        let rules = Arc::new(RuleSet::parse(&self.program()).map_err(|e| format!("{e}\n{}", self.program()))?);
        let mut engine = Engine::new(rules, Default::default(), window).map_err(|e| e.to_string())?;
        engine.register_entity(ENTITY);
        engine.assert_happens_for("g", ENTITY, self.input.iter().copied()).map_err(|e| e.to_string())?;
        let oracle = self.brute_force();
        let mut fed_until = 0;
        loop {
            let w = engine.window();
            for (e, ts) in self.events.iter().enumerate() {
                for &t in ts.iter().filter(|t| **t >= fed_until && **t < w.end) {
                    engine
                        .assert_happens_at(&EventInstance::new(&format!("e{e}"), ENTITY, t))
                        .map_err(|e| e.to_string())?;
                }
            }
            fed_until = w.end;
            engine.evaluate();
            let visible = Interval::new(w.start, w.end.min(self.frames));
            for slot in 1..=self.n_derived {
                let got = engine.holds_for(&fluent_name(slot), ENTITY, true).map_err(|e| e.to_string())?;
                let want = IntervalSet::from_points(
                    (visible.start..visible.end).filter(|t| oracle[slot][*t as usize]),
                );
                if got.clip(visible) != want {
                    return Err(format!(
                        "fluent {} in window {:?}: engine {:?} oracle {:?}\n{}",
                        fluent_name(slot),
                        w,
                        got.as_slice(),
                        want.as_slice(),
                        self.program()
                    ));
                }
            }
            if w.end >= self.frames {
                return Ok(());
            }
            engine.advance_window([]).map_err(|e| e.to_string())?;
        }
    }
}

/// Random weighted partial MaxSAT formula with integer soft weights.
pub fn random_formula(seed: u64, max_vars: usize) -> CnfFormula {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=max_vars.max(1));
    let mut f = CnfFormula::with_vars(n);
    let clauses = rng.random_range(1..=3 * n + 2);
    for _ in 0..clauses {
        let len = rng.random_range(1..=3.min(n));
        let lits: Vec<Lit> = (0..len).map(|_| Lit::new(rng.random_range(1..=n), rng.random_bool(0.5))).collect();
        if rng.random_bool(0.3) {
            f.add_hard(lits);
        } else {
            f.add_soft(lits, rng.random_range(1..=9) as f64).unwrap();
        }
    }
    f
}

/// Minimum violated soft weight over all assignments satisfying the hard
/// clauses, or `None` when the hard part is unsatisfiable.
pub fn enumerate_optimum(f: &CnfFormula) -> Option<f64> {
    let n = f.num_vars();
    let mut best: Option<f64> = None;
    let mut a = vec![false; n + 1];
    for mask in 0u64..(1u64 << n) {
        for (v, slot) in a.iter_mut().enumerate().skip(1) {
            *slot = mask >> (v - 1) & 1 == 1;
        }
        if f.hard_satisfied(&a) {
            let w = f.violated_weight(&a);
            if best.is_none_or(|b| w < b) {
                best = Some(w);
            }
        }
    }
    best
}

/// Random digraph as an edge list.
pub fn random_digraph(seed: u64, max_vertices: usize) -> (usize, Vec<(usize, usize)>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=max_vertices.max(1));
    let p = rng.random_range(0.0..0.15);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if rng.random_bool(p) {
                edges.push((i, j));
            }
        }
    }
    (n, edges)
}

/// `reach[i][j]` iff a non-empty path leads from `i` to `j`, by BFS.
pub fn bfs_reachability(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut adj = vec![Vec::new(); n];
    for &(i, j) in edges {
        adj[i].push(j);
    }
    (0..n)
        .map(|s| {
            let mut seen = vec![false; n];
            let mut q: VecDeque<usize> = adj[s].iter().copied().collect();
            while let Some(v) = q.pop_front() {
                if !seen[v] {
                    seen[v] = true;
                    q.extend(adj[v].iter().copied());
                }
            }
            seen
        })
        .collect()
}

pub fn closure_matches_bfs(n: usize, edges: &[(usize, usize)]) -> bool {
    let c = DependencyGraph::from_edges(n, edges.iter().copied()).transitive_closure();
    let r = bfs_reachability(n, edges);
    (0..n).all(|i| (0..n).all(|j| c.has_edge(i, j) == r[i][j]))
}

/// Random well-conditioned homography: a camera-like ground map.
pub fn random_homography(seed: u64) -> Mat3 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let mut m = [[0.0; 3]; 3];
        for row in m.iter_mut() {
            for v in row.iter_mut() {
                *v = rng.random_range(-1.0..1.0);
            }
        }
        m[0][0] += 3.0;
        m[1][1] += 3.0;
        m[2][2] += 3.0;
        let h = Mat3(m);
        if h.det().abs() > 0.5 {
            return h;
        }
    }
}

/// Worst relative error of ground -> image -> ground over sample points
/// in front of the camera.
pub fn ipm_roundtrip_error(seed: u64) -> f64 {
    let h = random_homography(seed);
    let rect = GroundRect { x_min: -1e3, x_max: 1e3, y_min: -1e3, y_max: 1e3 };
    let cam = CameraModel::new(h, 30.0, rect).expect("invertible");
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut worst: f64 = 0.0;
    let mut tried = 0;
    while tried < 20 {
        let p = (rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
        let w = h.mul_vec([p.0, p.1, 1.0])[2];
        if w.abs() < 0.05 {
            // Near the horizon line the projection is ill-conditioned.
            continue;
        }
        tried += 1;
        let img = cam.project_to_image(p).expect("projects");
        let back = cam.ipm_to_ground(img).expect("maps back");
        let scale = p.0.hypot(p.1).max(1.0);
        worst = worst.max((back.0 - p.0).hypot(back.1 - p.1) / scale);
    }
    worst
}
