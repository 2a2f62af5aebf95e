//! Nodal admittance structure. Each branch is a two-port
//!
//! ```text
//!   [I_f]   [y_ff  y_ft] [V_f]        y_ff = (y + j b_c/2) / tap^2
//!   [I_t] = [y_tf  y_tt] [V_t]        y_ft = -y / (tap e^{-j shift})
//!                                     y_tf = -y / (tap e^{+j shift})
//!                                     y_tt =  y + j b_c/2
//! ```
//!
//! with series admittance y = 1/(r + jx). Bus rows collect the two-port
//! contributions of incident branches plus bus shunts; the neighbor set of
//! bus i is exactly the buses sharing a branch with i, plus i itself.

use std::collections::BTreeMap;

use thiserror::Error;

use super::Network;
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum AdmittanceError {
    #[error("branch {0}: zero series impedance")]
    ZeroImpedance(usize),
    #[error("branch {0}: non-positive tap ratio")]
    BadTap(usize),
    #[error("branch {0}: endpoint bus out of range")]
    BadEndpoint(usize),
}

/// One nonzero of a bus row: conductance/susceptance toward `bus`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmEntry<F> {
    pub bus: usize,
    pub g: F,
    pub b: F,
}

/// Real/imaginary parts of a branch two-port.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchAdm<F> {
    pub from: usize,
    pub to: usize,
    pub g_ff: F,
    pub b_ff: F,
    pub g_ft: F,
    pub b_ft: F,
    pub g_tf: F,
    pub b_tf: F,
    pub g_tt: F,
    pub b_tt: F,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Admittance<F> {
    pub n: usize,
    /// Row i: entries sorted by bus index, diagonal always present.
    pub rows: Vec<Vec<AdmEntry<F>>>,
    /// Two-port parameters per in-service branch, aligned with `Network::branches`.
    pub branches: Vec<BranchAdm<F>>,
}

impl<F: Scalar> Admittance<F> {
    /// Neighbor set of bus i (includes i).
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.rows[i].iter().map(|e| e.bus)
    }

    pub fn entry(&self, i: usize, k: usize) -> Option<&AdmEntry<F>> {
        self.rows[i].iter().find(|e| e.bus == k)
    }
}

#[derive(Clone, Copy)]
struct C<F> {
    re: F,
    im: F,
}

impl<F: Scalar> C<F> {
    fn new(re: F, im: F) -> Self {
        C { re, im }
    }
    fn add(self, o: Self) -> Self {
        C::new(self.re + o.re, self.im + o.im)
    }
    fn neg(self) -> Self {
        C::new(-self.re, -self.im)
    }
    fn mul(self, o: Self) -> Self {
        C::new(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)
    }
    fn scale(self, s: F) -> Self {
        C::new(self.re * s, self.im * s)
    }
    fn inv(self) -> Self {
        let d = self.re * self.re + self.im * self.im;
        C::new(self.re / d, -self.im / d)
    }
}

pub fn build_admittance<F: Scalar>(net: &Network<F>) -> Result<Admittance<F>, AdmittanceError> {
    let n = net.buses.len();
    let two = F::one() + F::one();
    let mut rows: Vec<BTreeMap<usize, C<F>>> = vec![BTreeMap::new(); n];
    for (i, bus) in net.buses.iter().enumerate() {
        rows[i].insert(i, C::new(bus.gs, bus.bs));
    }

    let mut branch_adm = Vec::with_capacity(net.branches.len());
    for (bi, br) in net.branches.iter().enumerate() {
        if br.from >= n || br.to >= n {
            return Err(AdmittanceError::BadEndpoint(bi));
        }
        if br.r == F::zero() && br.x == F::zero() {
            return Err(AdmittanceError::ZeroImpedance(bi));
        }
        if !(br.tap > F::zero()) {
            return Err(AdmittanceError::BadTap(bi));
        }
        let y = C::new(br.r, br.x).inv();
        let y_sh = C::new(F::zero(), br.b_charge / two);
        let rot = C::new(br.shift.cos(), br.shift.sin());
        let tap2 = br.tap * br.tap;

        let y_tt = y.add(y_sh);
        let y_ff = y_tt.scale(F::one() / tap2);
        // -y / conj(tap e^{j shift}) = -y e^{j shift} / tap
        let y_ft = y.neg().mul(rot).scale(F::one() / br.tap);
        // -y / (tap e^{j shift}) = -y e^{-j shift} / tap
        let y_tf = y.neg().mul(C::new(rot.re, -rot.im)).scale(F::one() / br.tap);

        branch_adm.push(BranchAdm {
            from: br.from,
            to: br.to,
            g_ff: y_ff.re,
            b_ff: y_ff.im,
            g_ft: y_ft.re,
            b_ft: y_ft.im,
            g_tf: y_tf.re,
            b_tf: y_tf.im,
            g_tt: y_tt.re,
            b_tt: y_tt.im,
        });

        let acc = |slot: &mut BTreeMap<usize, C<F>>, k: usize, v: C<F>| {
            let e = slot.entry(k).or_insert_with(|| C::new(F::zero(), F::zero()));
            *e = e.add(v);
        };
        acc(&mut rows[br.from], br.from, y_ff);
        acc(&mut rows[br.from], br.to, y_ft);
        acc(&mut rows[br.to], br.from, y_tf);
        acc(&mut rows[br.to], br.to, y_tt);
    }

    let rows = rows
        .into_iter()
        .map(|row| row.into_iter().map(|(bus, y)| AdmEntry { bus, g: y.re, b: y.im }).collect())
        .collect();

    Ok(Admittance { n, rows, branches: branch_adm })
}
