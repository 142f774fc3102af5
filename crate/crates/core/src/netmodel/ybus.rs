use super::NetworkModel;
use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::collections::BTreeMap;

/// Sparse bus admittance matrix.
///
/// Branch contributions are kept in an ordered triplet map. Fault shunts are
/// held separately so that a fault can be cleared exactly: applying `y` and
/// then `-y` at the same bus removes the shunt and leaves the matrix
/// bit-identical to the original.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmittanceMatrix {
    n: usize,
    entries: BTreeMap<(usize, usize), Complex64>,
    fault_shunts: BTreeMap<usize, Complex64>,
}

impl AdmittanceMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            entries: BTreeMap::new(),
            fault_shunts: BTreeMap::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Adds `y` to entry `(i, j)`.
    pub fn add(&mut self, i: usize, j: usize, y: Complex64) {
        assert!(i < self.n && j < self.n, "admittance index out of range");
        *self.entries.entry((i, j)).or_default() += y;
    }

    /// Effective entry including any fault shunt.
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        let base = self.entries.get(&(i, j)).copied().unwrap_or_default();
        if i == j {
            if let Some(s) = self.fault_shunts.get(&i) {
                return base + s;
            }
        }
        base
    }

    pub fn fault_shunt(&self, bus: usize) -> Complex64 {
        self.fault_shunts.get(&bus).copied().unwrap_or_default()
    }

    /// Non-zero pattern positions, in row-major order.
    pub fn pattern(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.entries.keys().copied()
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (&(i, j), &y) in &self.entries {
            m[(i, j)] = y;
        }
        for (&i, &s) in &self.fault_shunts {
            m[(i, i)] += s;
        }
        m
    }

    /// Largest entry-wise modulus of `Y - Yᵀ`.
    pub fn asymmetry(&self) -> f64 {
        self.entries
            .keys()
            .map(|&(i, j)| (self.get(i, j) - self.get(j, i)).norm())
            .fold(0.0, f64::max)
    }

    fn add_fault_shunt(&mut self, bus: usize, y: Complex64) {
        let total = self.fault_shunt(bus) + y;
        if total == Complex64::default() {
            self.fault_shunts.remove(&bus);
        } else {
            self.fault_shunts.insert(bus, total);
        }
    }
}

/// Assembles the bus admittance matrix with taps and line charging.
pub fn build_ybus(net: &NetworkModel) -> Result<AdmittanceMatrix> {
    for (k, br) in net.branches.iter().enumerate() {
        net.check_branch(k, br)?;
    }
    let islands = net.islands();
    if islands.len() > 1 {
        return Err(Error::Disconnected { islands });
    }
    let mut y = AdmittanceMatrix::zeros(net.n_bus());
    for br in &net.branches {
        let ys = br.series_admittance();
        let half_b = Complex64::new(0.0, br.b_shunt / 2.0);
        let (f, t, tap) = (br.from_bus, br.to_bus, br.tap);
        y.add(f, f, (ys + half_b) / (tap * tap));
        y.add(t, t, ys + half_b);
        y.add(f, t, -ys / tap);
        y.add(t, f, -ys / tap);
    }
    Ok(y)
}

/// Returns a copy of `y` with a shunt fault admittance at `bus`.
pub fn apply_fault(
    y: &AdmittanceMatrix,
    bus: usize,
    fault_admittance: Complex64,
) -> Result<AdmittanceMatrix> {
    if bus >= y.n() {
        return Err(Error::InvalidNetwork(format!(
            "fault bus {bus} does not exist"
        )));
    }
    if !(fault_admittance.re.is_finite() && fault_admittance.im.is_finite()) {
        return Err(Error::InvalidNetwork(
            "fault admittance must be finite".into(),
        ));
    }
    let mut out = y.clone();
    if fault_admittance != Complex64::default() {
        out.add_fault_shunt(bus, fault_admittance);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::{wscc9, Branch, Bus, BusRole};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn two_bus(x: f64) -> NetworkModel {
        let bus = |id| Bus {
            id,
            name: format!("b{id}"),
            base_kv: 1.0,
            load_p: 0.0,
            load_q: 0.0,
            init_role: if id == 0 { BusRole::Slack } else { BusRole::Pq },
        };
        NetworkModel {
            buses: vec![bus(0), bus(1)],
            branches: vec![Branch::line(0, 1, 0.0, x, 0.0)],
        }
    }

    #[test]
    fn two_bus_hand_assembly() {
        let y = build_ybus(&two_bus(0.1)).unwrap();
        let close = |a: Complex64, b: Complex64| (a - b).norm() < 1e-12;
        assert!(close(y.get(0, 0), c(0.0, -10.0)));
        assert!(close(y.get(0, 1), c(0.0, 10.0)));
        assert!(close(y.get(1, 0), c(0.0, 10.0)));
        assert!(close(y.get(1, 1), c(0.0, -10.0)));
    }

    #[test]
    fn single_bus_is_zero() {
        let mut net = two_bus(0.1);
        net.buses.truncate(1);
        net.branches.clear();
        let y = build_ybus(&net).unwrap();
        assert_eq!(y.n(), 1);
        assert_eq!(y.get(0, 0), Complex64::default());
    }

    #[test]
    fn disconnected_network_lists_islands() {
        let mut net = wscc9::network();
        // isolate bus 3 by dropping its transformer
        net.branches.retain(|b| !(b.from_bus == 2 || b.to_bus == 2));
        match build_ybus(&net) {
            Err(Error::Disconnected { islands }) => {
                assert_eq!(islands.len(), 2);
                assert!(islands.contains(&vec![2]));
            }
            other => panic!("expected disconnected error, got {other:?}"),
        }
    }

    #[test]
    fn fault_is_additive_and_exactly_removable() {
        let y = build_ybus(&wscc9::network()).unwrap();
        let bus6 = wscc9::bus(6);
        let yf = c(1e6, 0.0);

        assert_eq!(apply_fault(&y, bus6, Complex64::default()).unwrap(), y);

        let faulted = apply_fault(&y, bus6, yf).unwrap();
        assert_eq!(faulted.fault_shunt(bus6), yf);
        let dense = faulted.to_dense();
        let base = y.to_dense();
        for i in 0..y.n() {
            for j in 0..y.n() {
                if (i, j) != (bus6, bus6) {
                    assert_eq!(dense[(i, j)], base[(i, j)]);
                }
            }
        }
        assert!((dense[(bus6, bus6)] - base[(bus6, bus6)] - yf).norm() < 1e-9);

        let cleared = apply_fault(&faulted, bus6, -yf).unwrap();
        assert_eq!(cleared, y);
        assert_eq!(cleared.to_dense(), y.to_dense());
    }

    #[test]
    fn fault_on_missing_bus_rejected() {
        let y = build_ybus(&wscc9::network()).unwrap();
        assert!(apply_fault(&y, 42, c(1.0, 0.0)).is_err());
        assert!(apply_fault(&y, 0, c(f64::NAN, 0.0)).is_err());
    }
}
