//! Directed hypergraph cellular sheaves.
//!
//! Every incidence `(u, e)` carries a real d×d restriction map `F`. Direction
//! enters only through the unit-modulus coefficient `S^(q)`: 1 on head
//! members and `exp(-2πiq)` on tail members. The complex restriction map is
//! `S^(q) · F`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hypergraph::{DirectedHypergraph, Role};

/// Structural constraint on the restriction maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MapShape {
    Trivial,
    Diagonal,
    Full,
}

impl FromStr for MapShape {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trivial" => Ok(MapShape::Trivial),
            "diagonal" => Ok(MapShape::Diagonal),
            "full" => Ok(MapShape::Full),
            other => Err(Error::Config(format!("unknown map shape `{other}`"))),
        }
    }
}

impl fmt::Display for MapShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MapShape::Trivial => "trivial",
            MapShape::Diagonal => "diagonal",
            MapShape::Full => "full",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SheafConfig {
    /// Charge parameter. Any finite value is accepted here.
    pub q: f64,
    /// Stalk dimension.
    pub d: usize,
    pub shape: MapShape,
}

impl SheafConfig {
    pub fn new(q: f64, d: usize, shape: MapShape) -> Result<Self> {
        if d == 0 {
            return Err(Error::Config("stalk dimension must be at least 1".into()));
        }
        if !q.is_finite() {
            return Err(Error::Config("charge parameter must be finite".into()));
        }
        Ok(SheafConfig { q, d, shape })
    }
}

/// `exp(-2πiq)`, the tail coefficient.
pub fn tail_phase(q: f64) -> Complex64 {
    Complex64::from_polar(1.0, -2.0 * PI * q)
}

/// Coefficient of a vertex playing `role`.
pub fn role_coefficient(role: Role, q: f64) -> Complex64 {
    match role {
        Role::Head => Complex64::new(1.0, 0.0),
        Role::Tail => tail_phase(q),
    }
}

/// `S^(q)_{u⊴e}`: 1 for head members, `exp(-2πiq)` for tail members, 0 otherwise.
pub fn directional_coefficient(h: &DirectedHypergraph, u: usize, e: usize, q: f64) -> Result<Complex64> {
    Ok(match h.edge(e)?.role_of(u) {
        Some(role) => role_coefficient(role, q),
        None => Complex64::new(0.0, 0.0),
    })
}

/// `conj(S_first) · S_second` for two members of the same hyperedge.
///
/// Equal roles give 1; a tail paired with a head gives `exp(+2πiq)` and the
/// reverse gives `exp(-2πiq)`.
pub fn phase_product(first: Role, second: Role, q: f64) -> Complex64 {
    role_coefficient(first, q).conj() * role_coefficient(second, q)
}

/// Real restriction maps for every incidence of a hypergraph.
///
/// Maps are stored in [`DirectedHypergraph::incidences`] order as row-major
/// d×d blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct SheafAssignment {
    config: SheafConfig,
    maps: Vec<Vec<f64>>,
    offsets: Vec<usize>,
}

impl SheafAssignment {
    /// Wraps explicit maps, checking count, block size and shape constraints.
    pub fn from_maps(h: &DirectedHypergraph, config: SheafConfig, maps: Vec<Vec<f64>>) -> Result<Self> {
        let d = config.d;
        if maps.len() != h.num_incidences() {
            return Err(Error::SheafMismatch(format!(
                "{} maps for {} incidences",
                maps.len(),
                h.num_incidences()
            )));
        }
        for (k, m) in maps.iter().enumerate() {
            if m.len() != d * d {
                return Err(Error::SheafMismatch(format!(
                    "map {k} has {} entries, expected {}",
                    m.len(),
                    d * d
                )));
            }
            let ok = match config.shape {
                MapShape::Trivial => (0..d * d).all(|i| m[i] == if i % (d + 1) == 0 { 1.0 } else { 0.0 }),
                MapShape::Diagonal => (0..d * d).all(|i| i % (d + 1) == 0 || m[i] == 0.0),
                MapShape::Full => true,
            };
            if !ok {
                return Err(Error::SheafMismatch(format!(
                    "map {k} violates the {} shape",
                    config.shape
                )));
            }
        }
        Ok(SheafAssignment {
            config,
            maps,
            offsets: h.incidence_offsets(),
        })
    }

    /// Identity maps on every incidence.
    pub fn trivial(h: &DirectedHypergraph, q: f64, d: usize) -> Result<Self> {
        let config = SheafConfig::new(q, d, MapShape::Trivial)?;
        build_fixed_sheaf(h, config, 0)
    }

    pub fn config(&self) -> SheafConfig {
        self.config
    }

    pub fn d(&self) -> usize {
        self.config.d
    }

    pub fn q(&self) -> f64 {
        self.config.q
    }

    /// Maps in incidence order.
    pub fn maps(&self) -> &[Vec<f64>] {
        &self.maps
    }

    /// Position of incidence `(u, e)` in incidence order.
    pub fn incidence_index(&self, h: &DirectedHypergraph, u: usize, e: usize) -> Result<usize> {
        self.check(h)?;
        let edge = h.edge(e)?;
        let pos = edge
            .members()
            .position(|(v, _)| v == u)
            .ok_or(Error::NotIncident { vertex: u, edge: e })?;
        Ok(self.offsets[e] + pos)
    }

    /// Real map `F_{u⊴e}`.
    pub fn map(&self, h: &DirectedHypergraph, u: usize, e: usize) -> Result<&[f64]> {
        Ok(&self.maps[self.incidence_index(h, u, e)?])
    }

    /// `S^(q)_{u⊴e} · F_{u⊴e}`.
    pub fn directed_restriction(&self, h: &DirectedHypergraph, u: usize, e: usize) -> Result<Vec<Complex64>> {
        let k = self.incidence_index(h, u, e)?;
        let role = h.edges()[e].role_of(u).expect("incidence exists");
        let s = role_coefficient(role, self.config.q);
        Ok(self.maps[k].iter().map(|&x| s * x).collect())
    }

    /// Same sheaf with a different charge parameter.
    pub fn with_q(&self, q: f64) -> Self {
        let mut out = self.clone();
        out.config.q = q;
        out
    }

    pub(crate) fn check(&self, h: &DirectedHypergraph) -> Result<()> {
        if self.maps.len() != h.num_incidences() || self.offsets.len() != h.num_edges() + 1 {
            return Err(Error::SheafMismatch(format!(
                "sheaf covers {} incidences, hypergraph has {}",
                self.maps.len(),
                h.num_incidences()
            )));
        }
        Ok(())
    }
}

/// Non-learned sheaf. Trivial shape gives identities; diagonal and full
/// shapes draw entries uniformly from [-1, 1] with a ChaCha generator seeded
/// by `seed`.
pub fn build_fixed_sheaf(h: &DirectedHypergraph, config: SheafConfig, seed: u64) -> Result<SheafAssignment> {
    let d = config.d;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let maps = (0..h.num_incidences())
        .map(|_| {
            let mut m = vec![0.0; d * d];
            match config.shape {
                MapShape::Trivial => (0..d).for_each(|i| m[i * d + i] = 1.0),
                MapShape::Diagonal => (0..d).for_each(|i| m[i * d + i] = rng.gen_range(-1.0..=1.0)),
                MapShape::Full => m.iter_mut().for_each(|x| *x = rng.gen_range(-1.0..=1.0)),
            }
            m
        })
        .collect();
    SheafAssignment::from_maps(h, config, maps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypergraph::Hyperedge;

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-15
    }

    fn directed_pair() -> DirectedHypergraph {
        DirectedHypergraph::new(2, vec![Hyperedge::new(vec![0], vec![1])]).unwrap()
    }

    #[test]
    fn coefficients() {
        let h = directed_pair();
        assert_eq!(directional_coefficient(&h, 1, 0, 0.17).unwrap(), Complex64::new(1.0, 0.0));
        assert!(close(directional_coefficient(&h, 0, 0, 0.0).unwrap(), Complex64::new(1.0, 0.0)));
        assert!(close(directional_coefficient(&h, 0, 0, 0.25).unwrap(), Complex64::new(0.0, -1.0)));
        let h3 = DirectedHypergraph::new(3, vec![Hyperedge::new(vec![0], vec![1])]).unwrap();
        assert_eq!(directional_coefficient(&h3, 2, 0, 0.1).unwrap(), Complex64::new(0.0, 0.0));
        assert!(directional_coefficient(&h3, 0, 4, 0.1).is_err());
    }

    #[test]
    fn phase_products() {
        assert!(close(phase_product(Role::Head, Role::Head, 0.17), Complex64::new(1.0, 0.0)));
        assert!(close(phase_product(Role::Tail, Role::Head, 0.25), Complex64::new(0.0, 1.0)));
        let expect = Complex64::from_polar(1.0, -0.2 * PI);
        assert!(close(phase_product(Role::Head, Role::Tail, 0.1), expect));
    }

    #[test]
    fn fixed_sheaf_shapes() {
        let h = DirectedHypergraph::new(4, vec![Hyperedge::new(vec![0, 1], vec![2, 3])]).unwrap();
        let t = build_fixed_sheaf(&h, SheafConfig::new(0.1, 1, MapShape::Trivial).unwrap(), 3).unwrap();
        assert!(t.maps().iter().all(|m| m == &vec![1.0]));

        let dg = build_fixed_sheaf(&h, SheafConfig::new(0.1, 3, MapShape::Diagonal).unwrap(), 3).unwrap();
        for m in dg.maps() {
            for i in 0..3 {
                for j in 0..3 {
                    if i != j {
                        assert_eq!(m[i * 3 + j], 0.0);
                    }
                }
            }
        }

        let cfg = SheafConfig::new(0.1, 2, MapShape::Full).unwrap();
        let a = build_fixed_sheaf(&h, cfg, 7).unwrap();
        let b = build_fixed_sheaf(&h, cfg, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.maps().iter().flatten().all(|x| (-1.0..=1.0).contains(x)));
    }

    #[test]
    fn directed_restrictions() {
        let h = directed_pair();
        let t = SheafAssignment::trivial(&h, 0.25, 1).unwrap();
        let tail = t.directed_restriction(&h, 0, 0).unwrap();
        assert!(close(tail[0], Complex64::new(0.0, -1.0)));

        let cfg = SheafConfig::new(0.3, 2, MapShape::Full).unwrap();
        let a = build_fixed_sheaf(&h, cfg, 1).unwrap();
        let head = a.directed_restriction(&h, 1, 0).unwrap();
        for (z, &x) in head.iter().zip(a.map(&h, 1, 0).unwrap()) {
            assert_eq!(*z, Complex64::new(x, 0.0));
        }
        let a0 = a.with_q(0.0);
        let tail = a0.directed_restriction(&h, 0, 0).unwrap();
        for (z, &x) in tail.iter().zip(a0.map(&h, 0, 0).unwrap()) {
            assert!(close(*z, Complex64::new(x, 0.0)));
        }

        let h3 = DirectedHypergraph::new(3, vec![Hyperedge::new(vec![0], vec![1])]).unwrap();
        let t3 = SheafAssignment::trivial(&h3, 0.1, 1).unwrap();
        assert!(matches!(
            t3.directed_restriction(&h3, 2, 0),
            Err(Error::NotIncident { vertex: 2, edge: 0 })
        ));
    }

    #[test]
    fn rejects_wrong_shape() {
        let h = directed_pair();
        let cfg = SheafConfig::new(0.0, 2, MapShape::Diagonal).unwrap();
        let bad = vec![vec![1.0, 0.5, 0.0, 1.0], vec![1.0, 0.0, 0.0, 1.0]];
        assert!(SheafAssignment::from_maps(&h, cfg, bad).is_err());
        assert!(SheafConfig::new(f64::NAN, 1, MapShape::Full).is_err());
        assert!(SheafConfig::new(0.0, 0, MapShape::Full).is_err());
    }
}
