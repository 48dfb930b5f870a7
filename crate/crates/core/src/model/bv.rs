//! Radial functions of locally bounded variation.
//!
//! A profile stores the absolutely continuous part of `df` as samples on a
//! sorted node list (linear interpolation in between) and the singular part as
//! a sorted list of atoms. Atom locations are always nodes, and the one-sided
//! limits of `f` at an atom live in the atom record. When a profile carries
//! values, the sample at an atom node is the right limit.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Relative tolerance used to decide that two radii coincide.
const LOCATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub r: f64,
    pub mass: f64,
    pub left: f64,
    pub right: f64,
}

impl Atom {
    /// Atom of a pure measure (one-sided values are not meaningful and set to 0).
    pub fn point_mass(r: f64, mass: f64) -> Self {
        Atom { r, mass, left: 0.0, right: 0.0 }
    }

    /// Jump of a function from `left` to `right` at `r`.
    pub fn jump(r: f64, left: f64, right: f64) -> Self {
        Atom { r, mass: right - left, left, right }
    }

    pub fn average(&self) -> f64 {
        0.5 * (self.left + self.right)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BvProfile {
    nodes: Vec<f64>,
    density: Vec<f64>,
    values: Option<Vec<f64>>,
    atoms: Vec<Atom>,
}

fn same_location(a: f64, b: f64) -> bool {
    (a - b).abs() <= LOCATION_TOL * a.abs().max(b.abs()).max(1.0)
}

fn lerp(x0: f64, y0: f64, x1: f64, y1: f64, x: f64) -> f64 {
    if x1 == x0 {
        return y0;
    }
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

impl BvProfile {
    /// Builds a profile from samples. Atoms of zero mass are dropped, atom
    /// locations missing from `nodes` are inserted (density interpolated,
    /// value set to the atom's right limit).
    pub fn new(
        nodes: Vec<f64>,
        density: Vec<f64>,
        values: Option<Vec<f64>>,
        atoms: Vec<Atom>,
    ) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::Domain("a profile needs at least two nodes".into()));
        }
        if density.len() != nodes.len() || values.as_ref().is_some_and(|v| v.len() != nodes.len()) {
            return Err(Error::Domain("sample vectors must match the node count".into()));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) || nodes.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("nodes must be finite and strictly increasing".into()));
        }
        let (a, b) = (nodes[0], nodes[nodes.len() - 1]);
        let mut atoms: Vec<Atom> = atoms.into_iter().filter(|at| at.mass != 0.0).collect();
        atoms.sort_by(|x, y| x.r.total_cmp(&y.r));
        for at in &atoms {
            if !(at.r > a && at.r < b) || same_location(at.r, a) || same_location(at.r, b) {
                return Err(Error::Domain(format!(
                    "atom at r = {} is not interior to ({a}, {b})",
                    at.r
                )));
            }
        }
        if atoms.windows(2).any(|w| same_location(w[0].r, w[1].r)) {
            return Err(Error::Domain("two atoms share a location".into()));
        }
        if values.is_some() {
            for at in &atoms {
                let jump = at.right - at.left;
                if (at.mass - jump).abs() > 1e-10 * at.mass.abs().max(jump.abs()).max(1.0) {
                    return Err(Error::Domain(format!(
                        "atom at r = {} has mass {} but jump {}",
                        at.r, at.mass, jump
                    )));
                }
            }
        }

        let mut profile = BvProfile { nodes, density, values, atoms: Vec::new() };
        for at in atoms {
            profile.insert_node(at.r, Some(at.right));
            profile.atoms.push(at);
        }
        Ok(profile)
    }

    /// Samples `density` (and optionally `value`) on `cells + 1` uniform nodes of `[a, b]`.
    pub fn from_fn(
        a: f64,
        b: f64,
        cells: usize,
        density: &dyn Fn(f64) -> f64,
        value: Option<&dyn Fn(f64) -> f64>,
        atoms: Vec<Atom>,
    ) -> Result<Self> {
        if !(b > a) || cells == 0 {
            return Err(Error::Domain(format!("bad interval [{a}, {b}] with {cells} cells")));
        }
        let nodes: Vec<f64> = (0..=cells)
            .map(|i| if i == cells { b } else { a + (b - a) * i as f64 / cells as f64 })
            .collect();
        Self::from_nodes(nodes, density, value, atoms)
    }

    /// Samples `density` (and optionally `value`) on the given nodes. At an atom
    /// node the value is taken from the atom's right limit.
    pub fn from_nodes(
        nodes: Vec<f64>,
        density: &dyn Fn(f64) -> f64,
        value: Option<&dyn Fn(f64) -> f64>,
        atoms: Vec<Atom>,
    ) -> Result<Self> {
        let dens = nodes.iter().map(|&x| density(x)).collect();
        let vals = value.map(|f| nodes.iter().map(|&x| f(x)).collect::<Vec<_>>());
        let mut profile = Self::new(nodes, dens, vals, atoms)?;
        if let Some(vals) = profile.values.as_mut() {
            for at in &profile.atoms {
                let i = profile.nodes.partition_point(|&x| x < at.r - LOCATION_TOL * at.r.max(1.0));
                vals[i] = at.right;
            }
        }
        Ok(profile)
    }

    fn insert_node(&mut self, x: f64, value_at_x: Option<f64>) {
        let i = self.nodes.partition_point(|&n| n < x);
        if i < self.nodes.len() && same_location(self.nodes[i], x) {
            if let (Some(v), Some(vals)) = (value_at_x, self.values.as_mut()) {
                vals[i] = v;
            }
            return;
        }
        if i > 0 && same_location(self.nodes[i - 1], x) {
            if let (Some(v), Some(vals)) = (value_at_x, self.values.as_mut()) {
                vals[i - 1] = v;
            }
            return;
        }
        let d = lerp(self.nodes[i - 1], self.density[i - 1], self.nodes[i], self.density[i], x);
        let v_interp = self
            .values
            .as_ref()
            .map(|vals| lerp(self.nodes[i - 1], vals[i - 1], self.nodes[i], vals[i], x));
        self.nodes.insert(i, x);
        self.density.insert(i, d);
        if let Some(vals) = self.values.as_mut() {
            vals.insert(i, value_at_x.or(v_interp).unwrap_or(0.0));
        }
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.nodes[0], self.nodes[self.nodes.len() - 1])
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn values(&self) -> Option<&[f64]> {
        self.values.as_deref()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn atom_at(&self, r: f64) -> Option<&Atom> {
        self.atoms.iter().find(|at| same_location(at.r, r))
    }

    fn check_inside(&self, x: f64) -> Result<()> {
        let (a, b) = self.domain();
        let tol = LOCATION_TOL * a.abs().max(b.abs()).max(1.0);
        if x < a - tol || x > b + tol || x.is_nan() {
            return Err(Error::Domain(format!("r = {x} outside [{a}, {b}]")));
        }
        Ok(())
    }

    /// Index `i` with `nodes[i] <= x < nodes[i + 1]` (clamped to the last cell).
    fn cell(&self, x: f64) -> usize {
        let i = self.nodes.partition_point(|&n| n <= x);
        i.saturating_sub(1).min(self.nodes.len() - 2)
    }

    /// Density of the absolutely continuous part, linearly interpolated.
    pub fn density_at(&self, x: f64) -> Result<f64> {
        self.check_inside(x)?;
        let i = self.cell(x);
        Ok(lerp(self.nodes[i], self.density[i], self.nodes[i + 1], self.density[i + 1], x))
    }

    /// Right-continuous representative `f^R(x)`.
    pub fn value_at(&self, x: f64) -> Result<f64> {
        let vals = self
            .values
            .as_ref()
            .ok_or_else(|| Error::Domain("profile carries no values".into()))?;
        self.check_inside(x)?;
        let i = self.cell(x);
        if same_location(self.nodes[i], x) {
            return Ok(vals[i]);
        }
        if same_location(self.nodes[i + 1], x) {
            return Ok(vals[i + 1]);
        }
        let right_end = match self.atom_at(self.nodes[i + 1]) {
            Some(at) => at.left,
            None => vals[i + 1],
        };
        Ok(lerp(self.nodes[i], vals[i], self.nodes[i + 1], right_end, x))
    }

    /// Left limit, right limit and their average at an interior radius.
    pub fn lra(&self, r: f64) -> Result<(f64, f64, f64)> {
        let (a, b) = self.domain();
        if !(r > a && r < b) || same_location(r, a) || same_location(r, b) {
            return Err(Error::Domain(format!("r = {r} is not interior to ({a}, {b})")));
        }
        if self.values.is_none() {
            return Err(Error::Domain("profile carries no values".into()));
        }
        if let Some(at) = self.atom_at(r) {
            return Ok((at.left, at.right, at.average()));
        }
        let v = self.value_at(r)?;
        Ok((v, v, v))
    }

    /// `∫_{(a,b]} df`: exact integral of the interpolated density plus atoms in `(a, b]`.
    pub fn integrate(&self, a: f64, b: f64) -> Result<f64> {
        self.check_inside(a)?;
        self.check_inside(b)?;
        if b < a {
            return Err(Error::Domain(format!("empty interval ({a}, {b}]")));
        }
        let mut total = 0.0;
        let mut i = self.cell(a);
        let mut x = a;
        while x < b && i + 1 < self.nodes.len() {
            let x_end = self.nodes[i + 1].min(b);
            if x_end > x {
                let fx = lerp(self.nodes[i], self.density[i], self.nodes[i + 1], self.density[i + 1], x);
                let fe = lerp(self.nodes[i], self.density[i], self.nodes[i + 1], self.density[i + 1], x_end);
                total += 0.5 * (x_end - x) * (fx + fe);
            }
            x = x_end;
            i += 1;
        }
        let atoms: f64 = self
            .atoms
            .iter()
            .filter(|at| at.r > a && !same_location(at.r, a) && (at.r <= b || same_location(at.r, b)))
            .map(|at| at.mass)
            .sum();
        Ok(total + atoms)
    }

    /// Total variation of `df` over `(a, b]` (trapezoid of |density| plus |atoms|).
    pub fn total_variation(&self, a: f64, b: f64) -> Result<f64> {
        let abs = BvProfile {
            nodes: self.nodes.clone(),
            density: self.density.iter().map(|d| d.abs()).collect(),
            values: None,
            atoms: self.atoms.iter().map(|at| Atom::point_mass(at.r, at.mass.abs())).collect(),
        };
        abs.integrate(a, b)
    }

    fn with_nodes(&self, nodes: &[f64]) -> Result<BvProfile> {
        let density = nodes.iter().map(|&x| self.density_at(x)).collect::<Result<Vec<_>>>()?;
        let values = match self.values {
            Some(_) => Some(nodes.iter().map(|&x| self.value_at(x)).collect::<Result<Vec<_>>>()?),
            None => None,
        };
        Ok(BvProfile { nodes: nodes.to_vec(), density, values, atoms: self.atoms.clone() })
    }

    /// Measure of the product `fg`: `d(fg) = f^A dg + g^A df`.
    pub fn product(&self, other: &BvProfile) -> Result<BvProfile> {
        let (a1, b1) = self.domain();
        let (a2, b2) = other.domain();
        if !same_location(a1, a2) || !same_location(b1, b2) {
            return Err(Error::Domain(format!("domains [{a1}, {b1}] and [{a2}, {b2}] differ")));
        }
        if self.values.is_none() || other.values.is_none() {
            return Err(Error::Domain("both factors need values".into()));
        }
        let mut nodes: Vec<f64> = self.nodes.iter().chain(other.nodes.iter()).copied().collect();
        nodes.sort_by(f64::total_cmp);
        nodes.dedup_by(|x, y| same_location(*x, *y));
        let f = self.with_nodes(&nodes)?;
        let g = other.with_nodes(&nodes)?;
        let (fv, gv) = (f.values.as_ref().unwrap(), g.values.as_ref().unwrap());
        let density = (0..nodes.len()).map(|j| fv[j] * g.density[j] + gv[j] * f.density[j]).collect();
        let values = (0..nodes.len()).map(|j| fv[j] * gv[j]).collect();

        let one_sided = |p: &BvProfile, r: f64| -> Result<(f64, f64)> {
            match p.atom_at(r) {
                Some(at) => Ok((at.left, at.right)),
                None => {
                    let v = p.value_at(r)?;
                    Ok((v, v))
                }
            }
        };
        let mut locations: Vec<f64> = self.atoms.iter().chain(other.atoms.iter()).map(|at| at.r).collect();
        locations.sort_by(f64::total_cmp);
        locations.dedup_by(|x, y| same_location(*x, *y));
        let mut atoms = Vec::with_capacity(locations.len());
        for r in locations {
            let (fl, fr) = one_sided(self, r)?;
            let (gl, gr) = one_sided(other, r)?;
            let fa = 0.5 * (fl + fr);
            let ga = 0.5 * (gl + gr);
            let mass = fa * (gr - gl) + ga * (fr - fl);
            atoms.push(Atom { r, mass, left: fl * gl, right: fr * gr });
        }
        let atoms = atoms.into_iter().filter(|at| at.mass != 0.0).collect();
        Ok(BvProfile { nodes, density, values: Some(values), atoms })
    }

    /// Measure of `e^f`: density `e^f f'`, atoms `e^{f^R} − e^{f^L}`.
    pub fn exp(&self) -> Result<BvProfile> {
        let vals = self
            .values
            .as_ref()
            .ok_or_else(|| Error::Domain("profile carries no values".into()))?;
        let ev: Vec<f64> = vals.iter().map(|v| v.exp()).collect();
        let density = ev.iter().zip(&self.density).map(|(e, d)| e * d).collect();
        let atoms = self
            .atoms
            .iter()
            .map(|at| Atom::jump(at.r, at.left.exp(), at.right.exp()))
            .collect();
        Ok(BvProfile { nodes: self.nodes.clone(), density, values: Some(ev), atoms })
    }

    /// Writes `r,density[,value]` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        match &self.values {
            Some(vals) => {
                writeln!(out, "r,density,value")?;
                for ((r, d), v) in self.nodes.iter().zip(&self.density).zip(vals) {
                    writeln!(out, "{r},{d},{v}")?;
                }
            }
            None => {
                writeln!(out, "r,density")?;
                for (r, d) in self.nodes.iter().zip(&self.density) {
                    writeln!(out, "{r},{d}")?;
                }
            }
        }
        Ok(())
    }

    /// Writes the companion atom table `r,mass,left_value,right_value`.
    pub fn write_atoms_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "r,mass,left_value,right_value")?;
        for at in &self.atoms {
            writeln!(out, "{},{},{},{}", at.r, at.mass, at.left, at.right)?;
        }
        Ok(())
    }

    /// Reads the two tables written by [`write_csv`](Self::write_csv) and
    /// [`write_atoms_csv`](Self::write_atoms_csv).
    pub fn read_csv<R: BufRead, S: BufRead>(profile: R, atoms: S) -> Result<BvProfile> {
        let rows = read_numeric_table(profile)?;
        let (header, rows) = rows;
        let with_values = match header.as_slice() {
            [r, d] if r == "r" && d == "density" => false,
            [r, d, v] if r == "r" && d == "density" && v == "value" => true,
            _ => return Err(Error::Parse(format!("unexpected profile header {header:?}"))),
        };
        let nodes = rows.iter().map(|row| row[0]).collect();
        let density = rows.iter().map(|row| row[1]).collect();
        let values = with_values.then(|| rows.iter().map(|row| row[2]).collect());
        let (atom_header, atom_rows) = read_numeric_table(atoms)?;
        if atom_header != ["r", "mass", "left_value", "right_value"] {
            return Err(Error::Parse(format!("unexpected atom header {atom_header:?}")));
        }
        let atoms = atom_rows
            .iter()
            .map(|row| Atom { r: row[0], mass: row[1], left: row[2], right: row[3] })
            .collect();
        BvProfile::new(nodes, density, values, atoms)
    }
}

fn read_numeric_table<R: BufRead>(input: R) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = input.lines();
    let header = match lines.next() {
        Some(line) => line.map_err(|e| Error::Parse(e.to_string()))?,
        None => return Err(Error::Parse("empty table".into())),
    };
    let header: Vec<String> = header.trim().split(',').map(|s| s.trim().to_string()).collect();
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::Parse(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse(format!("line {}: {e}", k + 2)))?;
        if row.len() != header.len() {
            return Err(Error::Parse(format!("line {}: expected {} fields", k + 2, header.len())));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn zero(_: f64) -> f64 {
        0.0
    }

    #[test]
    fn atom_counting() {
        let f = BvProfile::from_fn(0.0, 3.0, 30, &zero, None, vec![Atom::point_mass(1.0, 2.0)]).unwrap();
        assert_eq!(f.integrate(0.5, 1.5).unwrap(), 2.0);
        assert_eq!(f.integrate(1.0, 1.5).unwrap(), 0.0);
        assert_eq!(f.integrate(0.5, 1.0).unwrap(), 2.0);
    }

    #[test]
    fn constant_density() {
        let f = BvProfile::from_fn(0.0, 3.0, 7, &|_| 1.0, None, vec![]).unwrap();
        assert!((f.integrate(0.0, 3.0).unwrap() - 3.0).abs() < 1e-14);
        assert!(f.integrate(-1.0, 1.0).is_err());
    }

    #[test]
    fn lra_at_step() {
        let f = BvProfile::from_fn(
            0.0,
            2.0,
            10,
            &zero,
            Some(&|r| if r < 1.0 { 0.0 } else { 1.0 }),
            vec![Atom::jump(1.0, 0.0, 1.0)],
        )
        .unwrap();
        assert_eq!(f.lra(1.0).unwrap(), (0.0, 1.0, 0.5));
        assert_eq!(f.lra(0.5).unwrap(), (0.0, 0.0, 0.0));
        assert!(f.lra(0.0).is_err());
        // Just left of the jump the interpolant uses the stored left limit.
        assert_eq!(f.value_at(0.95).unwrap(), 0.0);
    }

    #[test]
    fn product_atom_matches_direct_jump() {
        let step = |lo: f64, hi: f64| move |r: f64| if r < 1.0 { lo } else { hi };
        let f = BvProfile::from_fn(0.0, 2.0, 8, &zero, Some(&step(1.0, 3.0)), vec![Atom::jump(1.0, 1.0, 3.0)])
            .unwrap();
        let g = BvProfile::from_fn(0.0, 2.0, 8, &zero, Some(&step(2.0, 4.0)), vec![Atom::jump(1.0, 2.0, 4.0)])
            .unwrap();
        let fg = f.product(&g).unwrap();
        let at = fg.atom_at(1.0).unwrap();
        assert_eq!(at.mass, 10.0);
        assert_eq!(at.right - at.left, 3.0 * 4.0 - 1.0 * 2.0);
    }

    #[test]
    fn product_with_unit_factor_is_identity() {
        let one = BvProfile::from_fn(0.0, 2.0, 20, &zero, Some(&|_| 1.0), vec![]).unwrap();
        let g = BvProfile::from_fn(
            0.0,
            2.0,
            20,
            &|r| (3.0 * r).cos() * 3.0,
            Some(&|r| (3.0 * r).sin() + if r < 0.7 { 0.0 } else { 0.25 }),
            vec![Atom::jump(0.7, (2.1f64).sin(), (2.1f64).sin() + 0.25)],
        )
        .unwrap();
        let p = one.product(&g).unwrap();
        assert_eq!(p.density(), g.density());
        assert_eq!(p.atoms(), g.atoms());
    }

    #[test]
    fn product_rule_polynomials_exact_at_nodes() {
        let f = BvProfile::from_fn(0.0, 2.0, 16, &|r| 2.0 * r + 1.0, Some(&|r| r * r + r), vec![]).unwrap();
        let g = BvProfile::from_fn(0.0, 2.0, 16, &|r| 3.0 * r * r, Some(&|r| r * r * r - 1.0), vec![]).unwrap();
        let p = f.product(&g).unwrap();
        for (r, d) in p.nodes().iter().zip(p.density()) {
            // d/dr[(r²+r)(r³−1)] = 5r⁴ + 4r³ − 2r − 1
            let exact = 5.0 * r.powi(4) + 4.0 * r.powi(3) - 2.0 * r - 1.0;
            assert!((d - exact).abs() <= 1e-13 * exact.abs().max(1.0));
        }
    }

    #[test]
    fn exp_chain_rule_integrates_to_difference() {
        let f = |r: f64| (2.0 * r).sin() + 0.3 * r * r;
        let df = |r: f64| 2.0 * (2.0 * r).cos() + 0.6 * r;
        let p = BvProfile::from_fn(0.0, 2.0, 40_000, &df, Some(&f), vec![]).unwrap();
        let e = p.exp().unwrap();
        for &(a, b) in &[(0.0, 2.0), (0.3, 1.1), (1.5, 1.9)] {
            let lhs = e.integrate(a, b).unwrap();
            assert!((lhs - (f(b).exp() - f(a).exp())).abs() < 1e-8);
        }
    }

    #[test]
    fn zero_mass_atoms_dropped() {
        let f = BvProfile::from_fn(0.0, 1.0, 4, &zero, None, vec![Atom::point_mass(0.5, 0.0)]).unwrap();
        assert!(f.atoms().is_empty());
    }

    #[test]
    fn atoms_off_grid_become_nodes() {
        let f = BvProfile::from_fn(0.0, 1.0, 4, &|_| 1.0, None, vec![Atom::point_mass(0.3, 1.5)]).unwrap();
        assert!(f.nodes().iter().any(|&x| x == 0.3));
        assert!((f.integrate(0.0, 1.0).unwrap() - 2.5).abs() < 1e-14);
    }

    fn arb_profile() -> impl Strategy<Value = BvProfile> {
        (
            prop::collection::vec(-2.0f64..2.0, 12),
            prop::collection::vec((0.05f64..0.95, -1.0f64..1.0), 0..4),
        )
            .prop_filter_map("distinct atoms", |(dens, atoms)| {
                let nodes: Vec<f64> = (0..12).map(|i| i as f64 / 11.0).collect();
                let atoms = atoms.into_iter().map(|(r, m)| Atom::point_mass(r, m)).collect();
                BvProfile::new(nodes, dens, None, atoms).ok()
            })
    }

    proptest! {
        #[test]
        fn integrate_is_additive(p in arb_profile(), mut cuts in prop::collection::vec(0.0f64..1.0, 1..6)) {
            cuts.push(0.0);
            cuts.push(1.0);
            cuts.sort_by(f64::total_cmp);
            let whole = p.integrate(0.0, 1.0).unwrap();
            let parts: f64 = cuts.windows(2).map(|w| p.integrate(w[0], w[1]).unwrap()).sum();
            prop_assert!((whole - parts).abs() <= 1e-12 * (1.0 + whole.abs()));
        }

        #[test]
        fn lra_average_is_midpoint(l in -5.0f64..5.0, jump in 0.1f64..5.0, r in 0.1f64..0.9) {
            let right = l + jump;
            let f = BvProfile::from_fn(0.0, 1.0, 9, &zero, Some(&|x| if x < r { l } else { right }),
                vec![Atom::jump(r, l, right)]).unwrap();
            let (lo, hi, avg) = f.lra(r).unwrap();
            prop_assert_eq!(avg, 0.5 * (lo + hi));
        }

        #[test]
        fn csv_round_trip(p in arb_profile()) {
            let mut table = Vec::new();
            let mut atoms = Vec::new();
            p.write_csv(&mut table).unwrap();
            p.write_atoms_csv(&mut atoms).unwrap();
            let q = BvProfile::read_csv(&table[..], &atoms[..]).unwrap();
            prop_assert_eq!(p, q);
        }
    }
}
