//! Planar-code geometry, its classical-spin lattice and the contraction
//! schedule.
//!
//! Index layout, fixed here and used everywhere else:
//!
//! * Qubit `h(r, j)` with `r < rows`, `j < d` has id `r·d + j`. It is the
//!   horizontal edge of vertex row `r` left of vertex column `j` (`j = 0`
//!   ends on the left rough boundary, `j = d − 1` on the right one).
//! * Qubit `v(r, c)` with `r < rows − 1`, `c < d − 1` has id
//!   `rows·d + r·(d − 1) + c`. It joins vertex `(r, c)` to `(r + 1, c)`.
//! * Spins of the primal lattice are the interior vertices `(r, c)` with id
//!   `r·(d − 1) + c`, followed by the glued left spin σ₀ and right spin σ_d.
//! * Spins of the dual lattice are the faces `f(r, j)` between vertex rows
//!   `r` and `r + 1` with id `r·d + j`, followed by the glued top and bottom
//!   spins.
//!
//! Qubit ids and drawing coordinates are shared by a lattice and its dual;
//! only orientations, spins and the schedule change.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::{Result, TelecodeError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Horizontal,
    Vertical,
}

impl Orientation {
    pub fn swapped(self) -> Self {
        match self {
            Orientation::Horizontal => Orientation::Vertical,
            Orientation::Vertical => Orientation::Horizontal,
        }
    }
}

/// Which pair of sides carries the rough (e-condensing) boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoughSides {
    LeftRight,
    TopBottom,
}

impl RoughSides {
    pub fn swapped(self) -> Self {
        match self {
            RoughSides::LeftRight => RoughSides::TopBottom,
            RoughSides::TopBottom => RoughSides::LeftRight,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QubitSite {
    pub id: usize,
    pub row: usize,
    pub col: usize,
    pub orientation: Orientation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spin {
    Interior { row: usize, col: usize },
    /// Glued boundary spin at the start of the transfer chain (σ₀).
    First,
    /// Glued boundary spin at the end of the transfer chain (σ_d).
    Last,
}

/// The two spins joined by a qubit's classical bond.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
}

/// One gate in the contraction schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduledGate {
    pub site: usize,
    /// Role in the transfer direction: horizontal gates couple neighbouring
    /// spins of one slice, vertical gates propagate a spin to the next slice.
    pub role: Orientation,
    /// Left chain site; the gate acts on `(chain_left, chain_left + 1)`.
    pub chain_left: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanarCodeLattice {
    pub d: usize,
    pub rows: usize,
    pub rough: RoughSides,
    pub qubit_sites: Vec<QubitSite>,
    pub classical_spins: Vec<Spin>,
    pub bonds: Vec<Bond>,
    pub slice_width: usize,
    /// Layers of mutually commuting gates, in contraction order.
    pub contraction_rows: Vec<Vec<ScheduledGate>>,
}

/// Square distance-`d` planar code with rough left and right boundaries.
pub fn build_planar_code(d: usize) -> Result<PlanarCodeLattice> {
    build_planar_strip(d, d)
}

/// Planar code with `d` columns and `rows` vertex rows.
///
/// Only square lattices are codes of distance `d`; taller strips serve as
/// deep networks for steady boundary states.
pub fn build_planar_strip(d: usize, rows: usize) -> Result<PlanarCodeLattice> {
    if d < 2 {
        return Err(TelecodeError::InvalidDistance(d));
    }
    if rows < 2 {
        return Err(TelecodeError::InvalidDistance(rows));
    }
    Ok(build(d, rows, RoughSides::LeftRight))
}

/// Kramers-Wannier dual: spins move to faces, orientations and rough sides
/// swap.
pub fn dual_lattice(lat: &PlanarCodeLattice) -> PlanarCodeLattice {
    build(lat.d, lat.rows, lat.rough.swapped())
}

fn build(d: usize, rows: usize, rough: RoughSides) -> PlanarCodeLattice {
    let n_h = rows * d;
    let n_v = (rows - 1) * (d - 1);
    let h_id = |r: usize, j: usize| r * d + j;
    let v_id = |r: usize, c: usize| n_h + r * (d - 1) + c;
    let dual = rough == RoughSides::TopBottom;
    let orient = |o: Orientation| if dual { o.swapped() } else { o };

    let mut qubit_sites = Vec::with_capacity(n_h + n_v);
    for r in 0..rows {
        for j in 0..d {
            qubit_sites.push(QubitSite {
                id: h_id(r, j),
                row: r,
                col: j,
                orientation: orient(Orientation::Horizontal),
            });
        }
    }
    for r in 0..rows - 1 {
        for c in 0..d - 1 {
            qubit_sites.push(QubitSite {
                id: v_id(r, c),
                row: r,
                col: c,
                orientation: orient(Orientation::Vertical),
            });
        }
    }

    let mut classical_spins = Vec::new();
    let mut bonds = alloc::vec![Bond { a: 0, b: 0 }; n_h + n_v];
    let mut contraction_rows = Vec::new();
    let slice_width;

    if !dual {
        let vert = |r: usize, c: usize| r * (d - 1) + c;
        for r in 0..rows {
            for c in 0..d - 1 {
                classical_spins.push(Spin::Interior { row: r, col: c });
            }
        }
        let first = classical_spins.len();
        classical_spins.push(Spin::First);
        classical_spins.push(Spin::Last);
        for r in 0..rows {
            for j in 0..d {
                let a = if j == 0 { first } else { vert(r, j - 1) };
                let b = if j == d - 1 { first + 1 } else { vert(r, j) };
                bonds[h_id(r, j)] = Bond { a, b };
            }
        }
        for r in 0..rows - 1 {
            for c in 0..d - 1 {
                bonds[v_id(r, c)] = Bond {
                    a: vert(r, c),
                    b: vert(r + 1, c),
                };
            }
        }
        for r in 0..rows {
            contraction_rows.push(
                (0..d)
                    .map(|j| ScheduledGate {
                        site: h_id(r, j),
                        role: Orientation::Horizontal,
                        chain_left: 2 * j + 1,
                    })
                    .collect(),
            );
            if r + 1 < rows {
                contraction_rows.push(
                    (0..d - 1)
                        .rev()
                        .map(|c| ScheduledGate {
                            site: v_id(r, c),
                            role: Orientation::Vertical,
                            chain_left: 2 * c + 2,
                        })
                        .collect(),
                );
            }
        }
        slice_width = 2 * d + 2;
    } else {
        let face = |r: usize, j: usize| r * d + j;
        for r in 0..rows - 1 {
            for j in 0..d {
                classical_spins.push(Spin::Interior { row: r, col: j });
            }
        }
        let first = classical_spins.len();
        classical_spins.push(Spin::First);
        classical_spins.push(Spin::Last);
        for r in 0..rows {
            for j in 0..d {
                let a = if r == 0 { first } else { face(r - 1, j) };
                let b = if r == rows - 1 { first + 1 } else { face(r, j) };
                bonds[h_id(r, j)] = Bond { a, b };
            }
        }
        for r in 0..rows - 1 {
            for c in 0..d - 1 {
                bonds[v_id(r, c)] = Bond {
                    a: face(r, c),
                    b: face(r, c + 1),
                };
            }
        }
        for j in 0..d {
            contraction_rows.push(
                (0..rows)
                    .map(|r| ScheduledGate {
                        site: h_id(r, j),
                        role: Orientation::Horizontal,
                        chain_left: 2 * r + 1,
                    })
                    .collect(),
            );
            if j + 1 < d {
                contraction_rows.push(
                    (0..rows - 1)
                        .rev()
                        .map(|r| ScheduledGate {
                            site: v_id(r, j),
                            role: Orientation::Vertical,
                            chain_left: 2 * r + 2,
                        })
                        .collect(),
                );
            }
        }
        slice_width = 2 * rows + 2;
    }

    PlanarCodeLattice {
        d,
        rows,
        rough,
        qubit_sites,
        classical_spins,
        bonds,
        slice_width,
        contraction_rows,
    }
}

impl PlanarCodeLattice {
    pub fn n_qubits(&self) -> usize {
        self.qubit_sites.len()
    }

    pub fn n_spins(&self) -> usize {
        self.classical_spins.len()
    }

    /// Chain sites in the transfer slice, excluding the two dangling ends.
    pub fn chain_spins(&self) -> usize {
        self.slice_width / 2
    }

    /// Schedule flattened into contraction order.
    pub fn schedule(&self) -> impl Iterator<Item = &ScheduledGate> + '_ {
        self.contraction_rows.iter().flatten()
    }

    /// Qubit id of `h(r, j)`.
    pub fn h_site(&self, r: usize, j: usize) -> usize {
        r * self.d + j
    }

    /// Qubit id of `v(r, c)`.
    pub fn v_site(&self, r: usize, c: usize) -> usize {
        self.rows * self.d + r * (self.d - 1) + c
    }

    /// Qubit supports of the X-type star stabilizers (interior vertices of
    /// the primal drawing).
    pub fn vertex_stars(&self) -> Vec<Vec<usize>> {
        let (d, rows) = (self.d, self.rows);
        let mut out = Vec::new();
        for r in 0..rows {
            for c in 0..d - 1 {
                let mut s = alloc::vec![self.h_site(r, c), self.h_site(r, c + 1)];
                if r > 0 {
                    s.push(self.v_site(r - 1, c));
                }
                if r + 1 < rows {
                    s.push(self.v_site(r, c));
                }
                s.sort_unstable();
                out.push(s);
            }
        }
        out
    }

    /// Qubit supports of the Z-type plaquette stabilizers (faces of the
    /// primal drawing).
    pub fn plaquettes(&self) -> Vec<Vec<usize>> {
        let (d, rows) = (self.d, self.rows);
        let mut out = Vec::new();
        for r in 0..rows - 1 {
            for j in 0..d {
                let mut s = alloc::vec![self.h_site(r, j), self.h_site(r + 1, j)];
                if j > 0 {
                    s.push(self.v_site(r, j - 1));
                }
                if j + 1 < d {
                    s.push(self.v_site(r, j));
                }
                s.sort_unstable();
                out.push(s);
            }
        }
        out
    }

    /// Support of the logical Z string joining the rough boundaries of the
    /// primal drawing.
    pub fn logical_z_support(&self) -> Vec<usize> {
        (0..self.d).map(|j| self.h_site(0, j)).collect()
    }

    /// Support of the logical X string joining the smooth boundaries of the
    /// primal drawing.
    pub fn logical_x_support(&self) -> Vec<usize> {
        (0..self.rows).map(|r| self.h_site(r, 0)).collect()
    }

    /// Bonds incident to each spin.
    pub fn incidence(&self) -> Vec<Vec<usize>> {
        let mut inc = alloc::vec![Vec::new(); self.n_spins()];
        for (q, b) in self.bonds.iter().enumerate() {
            inc[b.a].push(q);
            inc[b.b].push(q);
        }
        inc
    }

    /// Human-readable site and bond tables.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "# planar code d={} rows={} rough={:?} qubits={} spins={} slice_width={}",
            self.d,
            self.rows,
            self.rough,
            self.n_qubits(),
            self.n_spins(),
            self.slice_width
        );
        let _ = writeln!(s, "# sites: id row col orientation spin_a spin_b");
        for (q, b) in self.qubit_sites.iter().zip(&self.bonds) {
            let _ = writeln!(
                s,
                "{} {} {} {} {} {}",
                q.id,
                q.row,
                q.col,
                match q.orientation {
                    Orientation::Horizontal => "h",
                    Orientation::Vertical => "v",
                },
                self.spin_label(b.a),
                self.spin_label(b.b)
            );
        }
        let _ = writeln!(s, "# schedule: layer site role chain_left");
        for (k, layer) in self.contraction_rows.iter().enumerate() {
            for g in layer {
                let _ = writeln!(
                    s,
                    "{} {} {} {}",
                    k,
                    g.site,
                    match g.role {
                        Orientation::Horizontal => "h",
                        Orientation::Vertical => "v",
                    },
                    g.chain_left
                );
            }
        }
        s
    }

    fn spin_label(&self, id: usize) -> String {
        match self.classical_spins[id] {
            Spin::Interior { row, col } => format!("({row},{col})"),
            Spin::First => String::from("first"),
            Spin::Last => String::from("last"),
        }
    }
}
