//! Random (hypergraph, sheaf) instances for property suites, with a plain
//! text form so a failing instance can be pasted back and replayed.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::hypergraph::{DirectedHypergraph, Hyperedge};
use crate::io::{format_hypergraph, parse_hypergraph};
use crate::sheaf::{build_fixed_sheaf, MapShape, SheafAssignment, SheafConfig};

pub const CHARGES: [f64; 4] = [0.0, 0.05, 0.1, 0.25];

#[derive(Debug, Clone)]
pub struct Instance {
    pub h: DirectedHypergraph,
    pub sheaf: SheafAssignment,
}

/// Ranges for [`random_instance`].
#[derive(Debug, Clone, Copy)]
pub struct InstanceSpec {
    pub vertices: (usize, usize),
    pub edges: (usize, usize),
    pub max_stalk: usize,
    pub max_edge_size: usize,
}

impl Default for InstanceSpec {
    fn default() -> Self {
        InstanceSpec {
            vertices: (4, 16),
            edges: (2, 12),
            max_stalk: 4,
            max_edge_size: 6,
        }
    }
}

/// Random hypergraph in which every vertex lies on at least one hyperedge.
/// Each hyperedge is directed with probability `p_directed`.
pub fn random_hypergraph<R: Rng>(
    rng: &mut R,
    n: usize,
    m: usize,
    max_edge_size: usize,
    p_directed: f64,
) -> DirectedHypergraph {
    let verts: Vec<usize> = (0..n).collect();
    let mut parts: Vec<(Vec<usize>, Vec<usize>)> = (0..m)
        .map(|_| {
            let size = rng.gen_range(2..=max_edge_size.min(n).max(2));
            let mut members: Vec<usize> = verts.choose_multiple(rng, size).copied().collect();
            if rng.gen_bool(p_directed) {
                let cut = rng.gen_range(1..size);
                let head = members.split_off(cut);
                (members, head)
            } else {
                (members, Vec::new())
            }
        })
        .collect();
    let mut covered = vec![false; n];
    for (t, hd) in &parts {
        t.iter().chain(hd).for_each(|&u| covered[u] = true);
    }
    for u in (0..n).filter(|&u| !covered[u]) {
        let e = rng.gen_range(0..m);
        parts[e].0.push(u);
    }
    let edges = parts.into_iter().map(|(t, hd)| Hyperedge::new(t, hd)).collect();
    DirectedHypergraph::new(n, edges).expect("generated hypergraph is valid")
}

pub fn random_instance<R: Rng>(rng: &mut R, spec: &InstanceSpec) -> Instance {
    let n = rng.gen_range(spec.vertices.0..=spec.vertices.1);
    let m = rng.gen_range(spec.edges.0..=spec.edges.1);
    let h = random_hypergraph(rng, n, m, spec.max_edge_size, 0.5);
    let d = rng.gen_range(1..=spec.max_stalk);
    let q = *CHARGES.choose(rng).unwrap();
    let shape = *[MapShape::Trivial, MapShape::Diagonal, MapShape::Full].choose(rng).unwrap();
    let config = SheafConfig::new(q, d, shape).expect("valid sheaf config");
    let sheaf = build_fixed_sheaf(&h, config, rng.gen()).expect("sheaf matches hypergraph");
    Instance { h, sheaf }
}

/// Text form: a header line, the hypergraph file, then one line of `d²`
/// map entries per incidence.
pub fn format_instance(inst: &Instance) -> String {
    let c = inst.sheaf.config();
    let mut s = format!("instance q={} d={} shape={}\n", c.q, c.d, c.shape);
    s.push_str(&format_hypergraph(&inst.h));
    s.push_str("maps\n");
    for m in inst.sheaf.maps() {
        let row: Vec<String> = m.iter().map(|x| x.to_string()).collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    let bad = |line: usize, message: &str| Error::Parse {
        line,
        message: message.to_string(),
    };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad(1, "empty instance"))?;
    let mut q = None;
    let mut d = None;
    let mut shape = None;
    for tok in header.split_whitespace().skip(1) {
        match tok.split_once('=') {
            Some(("q", v)) => q = v.parse::<f64>().ok(),
            Some(("d", v)) => d = v.parse::<usize>().ok(),
            Some(("shape", v)) => shape = v.parse::<MapShape>().ok(),
            _ => return Err(bad(1, "unknown header field")),
        }
    }
    let (Some(q), Some(d), Some(shape)) = (q, d, shape) else {
        return Err(bad(1, "header needs q, d and shape"));
    };
    let rest: Vec<&str> = lines.collect();
    let split = rest
        .iter()
        .position(|l| l.trim() == "maps")
        .ok_or_else(|| bad(1, "missing maps section"))?;
    let h = parse_hypergraph(&rest[..split].join("\n"))?;
    let maps = rest[split + 1..]
        .iter()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|_| bad(split + i + 3, "bad map entry")))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let sheaf = SheafAssignment::from_maps(&h, SheafConfig::new(q, d, shape)?, maps)?;
    Ok(Instance { h, sheaf })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn every_vertex_is_covered() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let inst = random_instance(&mut rng, &InstanceSpec::default());
            assert!(inst.h.incidence_counts().iter().all(|&c| c > 0));
        }
    }

    #[test]
    fn text_round_trip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let inst = random_instance(&mut rng, &InstanceSpec::default());
            let back = parse_instance(&format_instance(&inst)).unwrap();
            assert_eq!(back.h, inst.h);
            assert_eq!(back.sheaf, inst.sheaf);
        }
    }
}
