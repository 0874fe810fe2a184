//! Plain-text and JSON circuit formats.
//!
//! Text layout, one item per line:
//!
//! ```text
//! qubits 6
//! reg y input 0 1 2
//! meta {"n":3}
//! CCX !0 1 ; 5
//! CRY 2 ; 4 ; 3/2^4
//! ```

use std::fmt::Write as _;

use thiserror::Error;

use crate::angle::DyadicAngle;
use crate::circuit::{Circuit, Ctl, Gate, GateKind, Register, Role};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Circuit(#[from] crate::circuit::CircuitError),
}

pub fn to_text(c: &Circuit) -> String {
    let mut s = String::with_capacity(c.gates.len() * 16);
    writeln!(s, "qubits {}", c.qubit_count).unwrap();
    for r in &c.registers {
        let role = serde_json::to_value(r.role).unwrap();
        write!(s, "reg {} {}", r.name, role.as_str().unwrap()).unwrap();
        for q in &r.qubits {
            write!(s, " {q}").unwrap();
        }
        s.push('\n');
    }
    writeln!(s, "meta {}", serde_json::to_string(&c.meta).unwrap()).unwrap();
    for g in &c.gates {
        writeln!(s, "{g}").unwrap();
    }
    s
}

pub fn from_text(text: &str) -> Result<Circuit, FormatError> {
    let mut c = Circuit::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let err = |msg: &str| FormatError::Syntax { line: i + 1, msg: msg.to_string() };
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (head, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        match head {
            "qubits" => c.qubit_count = rest.trim().parse().map_err(|_| err("bad qubit count"))?,
            "reg" => {
                let mut toks = rest.split_whitespace();
                let name = toks.next().ok_or_else(|| err("missing register name"))?;
                let role = toks.next().ok_or_else(|| err("missing register role"))?;
                let role: Role = serde_json::from_value(serde_json::Value::String(role.into()))
                    .map_err(|_| err("unknown role"))?;
                let qubits = toks
                    .map(|t| t.parse::<u32>().map_err(|_| err("bad qubit index")))
                    .collect::<Result<_, _>>()?;
                c.registers.push(Register { name: name.into(), qubits, role });
            }
            "meta" => c.meta = serde_json::from_str(rest)?,
            _ => {
                let kind = GateKind::from_name(head).ok_or_else(|| err("unknown gate"))?;
                let g = parse_gate(kind, rest).map_err(|m| err(&m))?;
                c.push(g)?;
            }
        }
    }
    c.validate()?;
    Ok(c)
}

fn parse_gate(kind: GateKind, rest: &str) -> Result<Gate, String> {
    let mut parts: Vec<&str> = rest.split(';').map(str::trim).collect();
    let angle = if kind.has_angle() {
        let a = parts.pop().ok_or("missing angle")?;
        Some(a.parse::<DyadicAngle>().map_err(|e| e.to_string())?)
    } else {
        None
    };
    let (ctl_part, tgt_part) = match (kind.num_controls(), parts.as_slice()) {
        (0, [t]) => ("", *t),
        (_, [c, t]) => (*c, *t),
        _ => return Err("wrong number of `;` sections".into()),
    };
    let controls = ctl_part
        .split_whitespace()
        .map(|t| match t.strip_prefix('!') {
            Some(q) => q.parse().map(Ctl::neg),
            None => t.parse().map(Ctl::pos),
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| "bad control")?;
    let targets = tgt_part
        .split_whitespace()
        .map(str::parse)
        .collect::<Result<Vec<u32>, _>>()
        .map_err(|_| "bad target")?;
    Gate::new(kind, &controls, &targets, angle).map_err(|e| e.to_string())
}

pub fn to_json(c: &Circuit) -> String {
    serde_json::to_string(c).expect("circuit serialises")
}

pub fn from_json(s: &str) -> Result<Circuit, FormatError> {
    let c: Circuit = serde_json::from_str(s)?;
    c.validate()?;
    Ok(c)
}
