//! Cost models, commutation-aware list scheduling and resource reports.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::angle::DyadicAngle;
use crate::circuit::{Circuit, Ctl, Gate, GateKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ModelKind {
    EqualLatency,
    FaultTolerant,
    /// Counts only Toffoli-class gates (CCX, CSWAP), one unit each.
    Toffoli,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::EqualLatency, ModelKind::FaultTolerant, ModelKind::Toffoli];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::EqualLatency => "equal_latency",
            ModelKind::FaultTolerant => "fault_tolerant",
            ModelKind::Toffoli => "toffoli",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        ModelKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| format!("unknown model `{s}`"))
    }
}

/// Latency per gate kind. Costs are kept as multiples of 1/1000 internally.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub kind: ModelKind,
    pub n: usize,
    /// Rotation synthesis accuracy; `1 / (2 n^2)` when unset.
    pub epsilon: Option<f64>,
}

const TICKS: f64 = 1000.0;

impl CostModel {
    pub fn new(kind: ModelKind, n: usize) -> CostModel {
        CostModel { kind, n, epsilon: None }
    }

    pub fn equal_latency() -> CostModel {
        CostModel::new(ModelKind::EqualLatency, 0)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon.unwrap_or_else(|| 1.0 / (2.0 * (self.n.max(1) as f64).powi(2)))
    }

    pub fn t_cost(&self) -> f64 {
        10.0
    }

    pub fn h_cost(&self) -> f64 {
        1.0
    }

    /// Cost of an arbitrary single-qubit rotation: `33 log2(1/eps)`.
    pub fn ry_cost(&self) -> f64 {
        33.0 * (1.0 / self.epsilon()).log2()
    }

    pub fn cost(&self, k: GateKind) -> f64 {
        use GateKind::*;
        match self.kind {
            ModelKind::EqualLatency => 1.0,
            ModelKind::Toffoli => match k {
                CCX | CSWAP => 1.0,
                _ => 0.0,
            },
            ModelKind::FaultTolerant => match k {
                X | CX => 1.0,
                SWAP => 3.0,
                CCX => 40.0,
                CSWAP => 42.0,
                RY => self.ry_cost(),
                CRY => self.ry_cost() + 2.0,
            },
        }
    }

    fn ticks(&self, k: GateKind) -> u64 {
        (self.cost(k) * TICKS).round() as u64
    }
}

/// How a gate acts on one of its qubits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Role {
    /// Control: diagonal in the computational basis.
    Z,
    /// Target of X, CX or CCX.
    X,
    /// Target of a Y rotation.
    Y,
    /// SWAP or CSWAP target; commutes with nothing.
    S,
}

fn roles(g: &Gate) -> impl Iterator<Item = (u32, Role)> + '_ {
    let t = match g.kind() {
        GateKind::X | GateKind::CX | GateKind::CCX => Role::X,
        GateKind::RY | GateKind::CRY => Role::Y,
        GateKind::SWAP | GateKind::CSWAP => Role::S,
    };
    g.controls().map(|c| (c.q, Role::Z)).chain(g.targets().iter().map(move |&q| (q, t)))
}

/// Structural commutation test: disjoint gates commute, and so do gates that
/// act the same way (both as controls, both as X targets or both as Y targets)
/// on every shared qubit.
pub fn commutes(a: &Gate, b: &Gate) -> bool {
    let ra: Vec<(u32, Role)> = roles(a).collect();
    roles(b).all(|(q, r)| match ra.iter().find(|(p, _)| *p == q) {
        None => true,
        Some((_, s)) => *s == r && r != Role::S,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    /// Start time of every gate.
    pub start: Vec<f64>,
    pub depth: f64,
    pub size: f64,
}

#[derive(Default)]
struct Lane {
    role: Option<Role>,
    /// Nothing in the current epoch may start before this.
    barrier: u64,
    /// Latest end of any gate placed on this qubit.
    end: u64,
    /// Busy intervals `start -> end` within the current epoch.
    busy: BTreeMap<u64, u64>,
}

impl Lane {
    /// First conflicting interval end for `[s, s + d)`, if any.
    fn conflict(&self, s: u64, d: u64) -> Option<u64> {
        let (_, &e) = self.busy.range(..s + d).next_back()?;
        (e > s).then_some(e)
    }
}

/// Greedy list schedule: each gate goes into the earliest slot that keeps it
/// after every earlier gate it does not commute with.
pub fn schedule(c: &Circuit, model: &CostModel) -> Schedule {
    let mut lanes: Vec<Lane> = (0..c.qubit_count).map(|_| Lane::default()).collect();
    let mut start = Vec::with_capacity(c.gates.len());
    let mut size = 0u64;
    let mut depth = 0u64;
    let mut rs: Vec<(u32, Role)> = Vec::with_capacity(3);
    for g in &c.gates {
        let d = model.ticks(g.kind());
        size += d;
        rs.clear();
        rs.extend(roles(g));
        let mut lb = 0;
        for &(q, r) in &rs {
            let lane = &mut lanes[q as usize];
            if lane.role != Some(r) || r == Role::S {
                lane.role = Some(r);
                lane.barrier = lane.end;
                lane.busy.clear();
            }
            lb = lb.max(lane.barrier);
        }
        let mut s = lb;
        if d > 0 {
            loop {
                let mut moved = false;
                for &(q, _) in &rs {
                    if let Some(e) = lanes[q as usize].conflict(s, d) {
                        s = e;
                        moved = true;
                    }
                }
                if !moved {
                    break;
                }
            }
        }
        for &(q, _) in &rs {
            let lane = &mut lanes[q as usize];
            if d > 0 {
                lane.busy.insert(s, s + d);
            }
            lane.end = lane.end.max(s + d);
        }
        depth = depth.max(s + d);
        start.push(s as f64 / TICKS);
    }
    Schedule { start, depth: depth as f64 / TICKS, size: size as f64 / TICKS }
}

/// The circuit with gates sorted by scheduled start time (ties keep the
/// original order). Metadata ranges no longer apply and are dropped.
pub fn reorder(c: &Circuit, s: &Schedule) -> Circuit {
    let mut idx: Vec<usize> = (0..c.gates.len()).collect();
    idx.sort_by(|&a, &b| s.start[a].total_cmp(&s.start[b]).then(a.cmp(&b)));
    let mut out = c.clone();
    out.gates = idx.into_iter().map(|i| c.gates[i].clone()).collect();
    out.meta.stages.clear();
    out.meta.transforms.clear();
    out.meta.marks.clear();
    out
}

/// Replaces every CRY by `CX, RY(-a/2), CX` plus a free-floating `RY(a/2)` on the
/// target; the floating halves merge with neighbouring rotations on that qubit.
pub fn decompose_cry(c: &Circuit) -> Circuit {
    let mut out = c.clone();
    out.gates.clear();
    out.meta.stages.clear();
    out.meta.transforms.clear();
    out.meta.marks.clear();
    let mut pending: HashMap<u32, DyadicAngle> = HashMap::new();
    let push = |out: &mut Circuit, g: Gate| out.push(g).expect("same qubits");
    let flush = |out: &mut Circuit, pending: &mut HashMap<u32, DyadicAngle>, q: u32| {
        if let Some(a) = pending.remove(&q) {
            if !a.is_zero() {
                push(out, Gate::new(GateKind::RY, &[], &[q], Some(a)).expect("rotation"));
            }
        }
    };
    for g in &c.gates {
        match g.kind() {
            GateKind::RY => {
                let t = g.targets()[0];
                let a = g.angle().expect("rotation angle");
                let acc = pending.remove(&t).unwrap_or_else(DyadicAngle::zero);
                pending.insert(t, acc.add(a));
            }
            GateKind::CRY => {
                let ctl: Ctl = g.controls().next().expect("one control");
                let t = g.targets()[0];
                flush(&mut out, &mut pending, ctl.q);
                let half = g.angle().expect("rotation angle").half().expect("denominator within limits");
                push(&mut out, Gate::new(GateKind::CX, &[ctl], &[t], None).unwrap());
                push(&mut out, Gate::new(GateKind::RY, &[], &[t], Some(half.neg())).unwrap());
                push(&mut out, Gate::new(GateKind::CX, &[ctl], &[t], None).unwrap());
                let acc = pending.remove(&t).unwrap_or_else(DyadicAngle::zero);
                pending.insert(t, acc.add(&half));
            }
            _ => {
                for &q in g.qubits() {
                    flush(&mut out, &mut pending, q);
                }
                push(&mut out, g.clone());
            }
        }
    }
    let mut rest: Vec<u32> = pending.keys().copied().collect();
    rest.sort_unstable();
    for q in rest {
        flush(&mut out, &mut pending, q);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub name: String,
    pub gates: usize,
    pub size: f64,
    /// Scheduled time from the first start to the last finish within the stage.
    pub span: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResourceReport {
    pub design: Option<String>,
    pub backend: Option<String>,
    pub model: ModelKind,
    pub n: Option<u32>,
    pub qubits: u32,
    pub data_qubits: u32,
    pub gates: usize,
    pub size: f64,
    pub depth: f64,
    pub stages: Vec<StageReport>,
    pub histogram: BTreeMap<String, usize>,
}

pub fn report(c: &Circuit, model: &CostModel) -> ResourceReport {
    let s = schedule(c, model);
    report_with(c, model, &s)
}

pub fn report_with(c: &Circuit, model: &CostModel, s: &Schedule) -> ResourceReport {
    let stages = c
        .meta
        .stages
        .iter()
        .map(|st| {
            let r = st.start..st.end;
            let size = c.gates[r.clone()].iter().map(|g| model.cost(g.kind())).sum();
            let first = r.clone().map(|i| s.start[i]).fold(f64::INFINITY, f64::min);
            let last = r.clone().map(|i| s.start[i] + model.cost(c.gates[i].kind())).fold(0.0, f64::max);
            StageReport { name: st.name.clone(), gates: r.len(), size, span: (last - first).max(0.0) }
        })
        .collect();
    ResourceReport {
        design: c.meta.design.clone(),
        backend: c.meta.backend.clone(),
        model: model.kind,
        n: c.meta.n,
        qubits: c.qubit_count,
        data_qubits: c.data_qubits(),
        gates: c.gates.len(),
        size: s.size,
        depth: s.depth,
        stages,
        histogram: c.histogram().into_iter().map(|(k, v)| (k.name().to_string(), v)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builder::Builder;
    use crate::circuit::Role as RegRole;

    fn g(kind: GateKind, ctl: &[u32], tgt: &[u32]) -> Gate {
        let ctl: Vec<Ctl> = ctl.iter().map(|&q| Ctl::pos(q)).collect();
        let a = kind.has_angle().then(|| DyadicAngle::from_i64(1, 3).unwrap());
        Gate::new(kind, &ctl, tgt, a).unwrap()
    }

    #[test]
    fn commutation_rules() {
        assert!(commutes(&g(GateKind::CX, &[0], &[1]), &g(GateKind::CX, &[0], &[2])));
        assert!(!commutes(&g(GateKind::CX, &[0], &[1]), &g(GateKind::CX, &[1], &[2])));
        assert!(commutes(&g(GateKind::CRY, &[0], &[5]), &g(GateKind::CRY, &[1], &[5])));
        assert!(commutes(&g(GateKind::CX, &[0], &[2]), &g(GateKind::CCX, &[0, 1], &[2])));
        assert!(!commutes(&g(GateKind::RY, &[], &[2]), &g(GateKind::X, &[], &[2])));
        assert!(!commutes(&g(GateKind::SWAP, &[], &[1, 2]), &g(GateKind::SWAP, &[], &[1, 2])));
        assert!(commutes(&g(GateKind::X, &[], &[1]), &g(GateKind::X, &[], &[2])));
    }

    #[test]
    fn depth_of_simple_circuits() {
        let mut b = Builder::new();
        let q = b.reg("q", 4, RegRole::Input);
        let m = CostModel::equal_latency();
        assert_eq!(schedule(b.circuit(), &m).depth, 0.0);
        b.ccx(q[0], q[1], q[2]);
        assert_eq!(schedule(b.circuit(), &m).depth, 1.0);
        let mut b = Builder::new();
        let q = b.reg("q", 4, RegRole::Input);
        for &x in &q {
            b.ry(x, DyadicAngle::from_i64(1, 2).unwrap());
        }
        assert_eq!(schedule(b.circuit(), &m).depth, 1.0);
    }

    #[test]
    fn commuting_gates_fill_gaps() {
        // CX(0->1), CX(2->3), CX(0->3): the third shares only controls with the
        // first and a target with the second, so it lands at time 1
        let mut b = Builder::new();
        let q = b.reg("q", 4, RegRole::Input);
        b.cx(q[0], q[1]);
        b.cx(q[2], q[3]);
        b.cx(q[0], q[3]);
        b.cx(q[1], q[2]);
        let s = schedule(b.circuit(), &CostModel::equal_latency());
        assert_eq!(s.start, vec![0.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn fault_tolerant_costs() {
        let m = CostModel::new(ModelKind::FaultTolerant, 1024);
        assert_eq!(m.ry_cost().round(), 693.0);
        assert_eq!(m.cost(GateKind::CCX), 40.0);
        assert_eq!(m.t_cost(), 10.0);
        assert_eq!(m.cost(GateKind::CRY).round(), 695.0);
    }

    #[test]
    fn cry_decomposition_merges_rotations() {
        let mut b = Builder::new();
        let c = b.reg("c", 3, RegRole::Input);
        let t = b.reg("t", 1, RegRole::Output)[0];
        for (i, &q) in c.iter().enumerate() {
            b.cry(q, t, DyadicAngle::from_i64(1, i as u32 + 2).unwrap());
        }
        let d = decompose_cry(&b.finish());
        assert_eq!(d.count(GateKind::CX), 6);
        assert_eq!(d.count(GateKind::RY), 4);
        assert_eq!(d.count(GateKind::CRY), 0);
    }
}
