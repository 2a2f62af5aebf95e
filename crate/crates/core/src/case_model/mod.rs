//! Grid data model: buses, generators, branches in per-unit, plus the
//! nodal admittance structure derived from them.
//!
//! Indices: `Bus::id` keeps the number from the source file; everything
//! else (`Gen::bus`, `Branch::from`, `Branch::to`, `Network::slack_bus`)
//! uses 0-based positions into `Network::buses`. The serialized JSON form
//! mirrors these structs field-for-field, so parse -> JSON -> parse is
//! lossless.

mod admittance;
mod parse;

pub use admittance::{build_admittance, AdmEntry, Admittance, AdmittanceError, BranchAdm};
pub use parse::{parse_case, ParseError};

use serde::{Deserialize, Serialize};

use crate::scalar::{real, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus<F> {
    /// Bus number in the source file.
    pub id: usize,
    /// Voltage magnitude bounds, p.u.
    pub v_min: F,
    pub v_max: F,
    /// Load, p.u. on the system base.
    pub p_load: F,
    pub q_load: F,
    /// Shunt conductance/susceptance, p.u.
    pub gs: F,
    pub bs: F,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gen<F> {
    /// Position of the host bus in `Network::buses`.
    pub bus: usize,
    /// Dispatch bounds, p.u.
    pub p_min: F,
    pub p_max: F,
    pub q_min: F,
    pub q_max: F,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch<F> {
    pub from: usize,
    pub to: usize,
    /// Series impedance, p.u.
    pub r: F,
    pub x: F,
    /// Total line-charging susceptance, p.u.
    pub b_charge: F,
    /// Off-nominal tap ratio (1 = none).
    pub tap: F,
    /// Phase-shift angle, rad.
    pub shift: F,
    /// Apparent-power limit, p.u.; 0 means unconstrained.
    pub s_max: F,
    /// Symmetric bound on the angle difference across the branch, rad.
    pub angle_diff_max: F,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network<F> {
    pub name: String,
    /// System MVA base the per-unit data is scaled on.
    pub base_mva: F,
    /// Position of the slack (reference) bus in `buses`.
    pub slack_bus: usize,
    pub buses: Vec<Bus<F>>,
    pub gens: Vec<Gen<F>>,
    pub branches: Vec<Branch<F>>,
}

impl<F: Scalar> Network<F> {
    pub fn n_buses(&self) -> usize {
        self.buses.len()
    }

    pub fn n_gens(&self) -> usize {
        self.gens.len()
    }

    /// Distinct buses hosting at least one generator, ascending.
    pub fn gen_buses(&self) -> Vec<usize> {
        let mut b: Vec<usize> = self.gens.iter().map(|g| g.bus).collect();
        b.sort_unstable();
        b.dedup();
        b
    }

    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("network serializes")
    }

    pub fn from_canonical_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

/// What a validation check found, and where.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Entity {
    Network,
    Bus(usize),
    Gen(usize),
    Branch(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub entity: Entity,
    pub detail: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.entity {
            Entity::Network => write!(f, "network: {}", self.detail),
            Entity::Bus(i) => write!(f, "bus[{}]: {}", i, self.detail),
            Entity::Gen(i) => write!(f, "gen[{}]: {}", i, self.detail),
            Entity::Branch(i) => write!(f, "branch[{}]: {}", i, self.detail),
        }
    }
}

/// Structural checks on a parsed network. Returns every violation found
/// rather than stopping at the first.
pub fn validate<F: Scalar>(net: &Network<F>) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = net.buses.len();
    let viol = |e: Entity, d: String| Violation { entity: e, detail: d };

    if n == 0 {
        out.push(viol(Entity::Network, "no buses".into()));
        return out;
    }
    if net.slack_bus >= n {
        out.push(viol(Entity::Network, format!("slack bus index {} out of range", net.slack_bus)));
    }
    if !(net.base_mva > F::zero()) {
        out.push(viol(Entity::Network, format!("base MVA must be positive, got {}", net.base_mva)));
    }

    for (i, bus) in net.buses.iter().enumerate() {
        if !(bus.v_min > F::zero()) {
            out.push(viol(Entity::Bus(i), format!("v_min must be positive, got {}", bus.v_min)));
        }
        if bus.v_min > bus.v_max {
            out.push(viol(
                Entity::Bus(i),
                format!("v_min {} exceeds v_max {}", bus.v_min, bus.v_max),
            ));
        }
    }

    for (i, gen) in net.gens.iter().enumerate() {
        if gen.bus >= n {
            out.push(viol(Entity::Gen(i), format!("bus index {} out of range", gen.bus)));
        }
        if gen.p_min > gen.p_max {
            out.push(viol(Entity::Gen(i), format!("p_min {} exceeds p_max {}", gen.p_min, gen.p_max)));
        }
        if gen.q_min > gen.q_max {
            out.push(viol(Entity::Gen(i), format!("q_min {} exceeds q_max {}", gen.q_min, gen.q_max)));
        }
    }

    for (i, br) in net.branches.iter().enumerate() {
        if br.from >= n || br.to >= n {
            out.push(viol(Entity::Branch(i), "endpoint bus index out of range".into()));
            continue;
        }
        if br.from == br.to {
            out.push(viol(Entity::Branch(i), "self-loop".into()));
        }
        if br.r == F::zero() && br.x == F::zero() {
            out.push(viol(Entity::Branch(i), "zero series impedance".into()));
        }
        if !(br.tap > F::zero()) {
            out.push(viol(Entity::Branch(i), format!("tap must be positive, got {}", br.tap)));
        }
        if br.s_max < F::zero() {
            out.push(viol(Entity::Branch(i), format!("negative flow limit {}", br.s_max)));
        }
        if !(br.angle_diff_max > F::zero()) || br.angle_diff_max > real::<F>(std::f64::consts::PI) {
            out.push(viol(
                Entity::Branch(i),
                format!("angle-difference bound {} outside (0, pi]", br.angle_diff_max),
            ));
        }
    }

    // Connectivity from the slack bus over in-service branches.
    if net.slack_bus < n {
        let mut seen = vec![false; n];
        let mut stack = vec![net.slack_bus];
        seen[net.slack_bus] = true;
        while let Some(i) = stack.pop() {
            for br in &net.branches {
                if br.from >= n || br.to >= n {
                    continue;
                }
                let other = if br.from == i {
                    br.to
                } else if br.to == i {
                    br.from
                } else {
                    continue;
                };
                if !seen[other] {
                    seen[other] = true;
                    stack.push(other);
                }
            }
        }
        for (i, ok) in seen.iter().enumerate() {
            if !ok {
                out.push(viol(Entity::Bus(i), "unreachable from the slack bus".into()));
            }
        }
    }

    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Network<f64> {
        Network {
            name: "toy".into(),
            base_mva: 100.0,
            slack_bus: 0,
            buses: vec![
                Bus { id: 1, v_min: 0.9, v_max: 1.1, p_load: 0.0, q_load: 0.0, gs: 0.0, bs: 0.0 },
                Bus { id: 2, v_min: 0.9, v_max: 1.1, p_load: 0.5, q_load: 0.1, gs: 0.0, bs: 0.0 },
            ],
            gens: vec![Gen { bus: 0, p_min: 0.0, p_max: 2.0, q_min: -1.0, q_max: 1.0 }],
            branches: vec![Branch {
                from: 0,
                to: 1,
                r: 0.01,
                x: 0.1,
                b_charge: 0.0,
                tap: 1.0,
                shift: 0.0,
                s_max: 2.0,
                angle_diff_max: 0.5,
            }],
        }
    }

    #[test]
    fn valid_toy_passes() {
        assert!(validate(&toy()).is_empty());
    }

    #[test]
    fn inverted_voltage_band_is_reported() {
        let mut net = toy();
        net.buses[1].v_min = 1.2;
        let v = validate(&net);
        assert!(v.iter().any(|x| x.entity == Entity::Bus(1) && x.detail.contains("v_min")));
    }

    #[test]
    fn zero_impedance_branch_is_reported() {
        let mut net = toy();
        net.branches[0].r = 0.0;
        net.branches[0].x = 0.0;
        let v = validate(&net);
        assert!(v.iter().any(|x| x.entity == Entity::Branch(0)));
    }

    #[test]
    fn disconnected_bus_is_reported() {
        let mut net = toy();
        net.buses.push(Bus { id: 3, v_min: 0.9, v_max: 1.1, p_load: 0.0, q_load: 0.0, gs: 0.0, bs: 0.0 });
        let v = validate(&net);
        assert!(v.iter().any(|x| x.entity == Entity::Bus(2) && x.detail.contains("unreachable")));
    }

    #[test]
    fn json_round_trip_is_identical() {
        let net = toy();
        let json = net.to_canonical_json();
        let back = Network::from_canonical_json(&json).unwrap();
        assert_eq!(net, back);
    }

    #[test]
    fn gen_buses_dedupes_and_sorts() {
        let mut net = toy();
        net.gens.push(Gen { bus: 0, p_min: 0.0, p_max: 1.0, q_min: 0.0, q_max: 1.0 });
        net.gens.push(Gen { bus: 1, p_min: 0.0, p_max: 1.0, q_min: 0.0, q_max: 1.0 });
        assert_eq!(net.gen_buses(), vec![0, 1]);
    }
}
