//! Candidate point grids and their neighbourhood structure.
//!
//! Indices in this module are 0-based: candidate `j` of the formulas in the
//! documentation is stored at position `j − 1`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Interval01,
    Interval11,
    Square,
    Triangle,
    Disk,
    Sphere,
}

impl Domain {
    pub fn dim(self) -> usize {
        match self {
            Domain::Interval01 | Domain::Interval11 => 1,
            Domain::Square | Domain::Triangle | Domain::Disk => 2,
            Domain::Sphere => 3,
        }
    }

    /// Membership test with absolute tolerance `tol`.
    pub fn contains(self, x: &[f64], tol: f64) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        let in_box = |v: f64| (-1.0 - tol..=1.0 + tol).contains(&v);
        match self {
            Domain::Interval01 => (-tol..=1.0 + tol).contains(&x[0]),
            Domain::Interval11 => in_box(x[0]),
            Domain::Square => x.iter().all(|&v| in_box(v)),
            Domain::Triangle => x.iter().all(|&v| in_box(v)) && x[0] + x[1] >= -tol,
            Domain::Disk => x[0] * x[0] + x[1] * x[1] <= 1.0 + tol,
            Domain::Sphere => ((x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt() - 1.0).abs() <= tol,
        }
    }
}

/// Lattice domains accepted by [`lattice_candidates`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeDomain {
    Square,
    Triangle,
    Disk,
}

impl From<LatticeDomain> for Domain {
    fn from(d: LatticeDomain) -> Self {
        match d {
            LatticeDomain::Square => Domain::Square,
            LatticeDomain::Triangle => Domain::Triangle,
            LatticeDomain::Disk => Domain::Disk,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub points: Vec<Vec<f64>>,
    /// Sorted 0-based neighbour indices of each point.
    pub neighbors: Vec<Vec<usize>>,
    pub domain: Domain,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Checks index range, irreflexivity, symmetry and domain membership.
    pub fn validate(&self) -> Result<()> {
        let m = self.points.len();
        if self.neighbors.len() != m {
            return Err(Error::Shape {
                expected: m,
                got: self.neighbors.len(),
            });
        }
        for (j, nb) in self.neighbors.iter().enumerate() {
            for &k in nb {
                if k >= m || k == j {
                    return Err(Error::Index {
                        index: k,
                        valid: format!("0..{m} excluding {j}"),
                    });
                }
                if !self.neighbors[k].contains(&j) {
                    return Err(Error::Parameter(format!("neighbourhood not symmetric: {k} in N({j}) but not vice versa")));
                }
            }
        }
        if let Some(j) = self.points.iter().position(|x| !self.domain.contains(x, 1e-12)) {
            return Err(Error::Domain(format!("candidate {j} = {:?} is outside {:?}", self.points[j], self.domain)));
        }
        Ok(())
    }
}

fn finish(points: Vec<Vec<f64>>, mut neighbors: Vec<Vec<usize>>, domain: Domain) -> CandidateSet {
    for nb in &mut neighbors {
        nb.sort_unstable();
        nb.dedup();
    }
    CandidateSet { points, neighbors, domain }
}

/// Equispaced points on `[0, 1]` (`domain = Interval01`) or `[−1, 1]`
/// (`domain = Interval11`) with neighbours `{j − 1, j + 1}`.
pub fn interval_candidates(m: usize, domain: Domain) -> Result<CandidateSet> {
    if m < 2 {
        return Err(Error::Parameter(format!("need m ≥ 2 candidates, got {m}")));
    }
    let (lo, width) = match domain {
        Domain::Interval01 => (0.0, 1.0),
        Domain::Interval11 => (-1.0, 2.0),
        other => return Err(Error::Parameter(format!("{other:?} is not an interval"))),
    };
    let points = (0..m).map(|j| vec![lo + width * j as f64 / (m - 1) as f64]).collect();
    let neighbors = (0..m)
        .map(|j| {
            let mut nb = Vec::with_capacity(2);
            if j > 0 {
                nb.push(j - 1);
            }
            if j + 1 < m {
                nb.push(j + 1);
            }
            nb
        })
        .collect();
    Ok(finish(points, neighbors, domain))
}

/// Latitude–longitude grid on `S²` with `m = (k − 1)(k − 2) + 2` points: the north
/// pole, `k − 2` rings of `k − 1` points, and the south pole.
///
/// Interior points link to their left and right ring neighbours (wrapping around)
/// and to the points directly above and below; rings next to a pole link to it.
pub fn sphere_candidates(k: usize) -> Result<CandidateSet> {
    if k < 3 {
        return Err(Error::Parameter(format!("need k ≥ 3 for the sphere grid, got {k}")));
    }
    let ring = k - 1;
    let m = ring * (k - 2) + 2;
    let theta = |p: usize| PI * (p - 1) as f64 / (k - 1) as f64;
    let phi = |q: usize| 2.0 * PI * (q - 1) as f64 / (k - 1) as f64;

    let mut points = Vec::with_capacity(m);
    let mut neighbors = Vec::with_capacity(m);
    for j in 1..=m {
        if j == 1 {
            points.push(vec![0.0, 0.0, 1.0]);
            neighbors.push((2..=k).map(|i| i - 1).collect());
            continue;
        }
        if j == m {
            points.push(vec![0.0, 0.0, -1.0]);
            neighbors.push((m - ring..m).map(|i| i - 1).collect());
            continue;
        }
        let p = (j - 2) / ring + 2;
        let r = (j - 2) % ring;
        let q = r + 1;
        let (st, ct) = theta(p).sin_cos();
        let (sp, cp) = phi(q).sin_cos();
        points.push(vec![st * cp, st * sp, ct]);

        let left = if r != 0 { j - 1 } else { j + (k - 2) };
        let right = if r != k - 2 { j + 1 } else { j - (k - 2) };
        let up = if p > 2 { j - ring } else { 1 };
        let down = if p < k - 1 { j + ring } else { m };
        neighbors.push([left, right, up, down].iter().map(|i| i - 1).collect());
    }
    Ok(finish(points, neighbors, Domain::Sphere))
}

/// `(−1 + 2(p − 1)/(k − 1), −1 + 2(q − 1)/(k − 1))` for `p, q = 1..k`, intersected
/// with the domain, in row-major order (`p` outer). Neighbours are the retained
/// points at the four lattice offsets.
///
/// Membership is decided with zero tolerance on the coordinates as computed in
/// floating point.
pub fn lattice_candidates(k: usize, domain: LatticeDomain) -> Result<CandidateSet> {
    if k < 2 {
        return Err(Error::Parameter(format!("need k ≥ 2 lattice points per side, got {k}")));
    }
    let coord = |i: usize| -1.0 + (2 * i) as f64 / (k - 1) as f64;
    let dom = Domain::from(domain);
    let mut slot = vec![None; k * k];
    let mut points = Vec::new();
    for p in 0..k {
        for q in 0..k {
            let x = vec![coord(p), coord(q)];
            if dom.contains(&x, 0.0) {
                slot[p * k + q] = Some(points.len());
                points.push(x);
            }
        }
    }
    let mut neighbors = vec![Vec::new(); points.len()];
    for p in 0..k {
        for q in 0..k {
            let Some(j) = slot[p * k + q] else { continue };
            let mut add = |pp: usize, qq: usize| {
                if let Some(i) = slot[pp * k + qq] {
                    neighbors[j].push(i);
                }
            };
            if p > 0 {
                add(p - 1, q);
            }
            if p + 1 < k {
                add(p + 1, q);
            }
            if q > 0 {
                add(p, q - 1);
            }
            if q + 1 < k {
                add(p, q + 1);
            }
        }
    }
    Ok(finish(points, neighbors, dom))
}
