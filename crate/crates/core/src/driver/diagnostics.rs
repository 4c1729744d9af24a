use std::fmt::Write as _;

use crate::scheme::{SnapshotStats, TERMS};

/// Rows of the `q,t,term,norm,value` table.
#[derive(Debug, Clone, Default)]
pub struct Diagnostics {
    rows: Vec<(usize, f64, String, &'static str, f64)>,
}

impl Diagnostics {
    pub fn push(&mut self, q: usize, t: f64, term: &str, norm: &'static str, value: f64) {
        self.rows.push((q, t, term.to_string(), norm, value));
    }

    /// The seven defect terms and the step quantities of one snapshot.
    pub fn push_snapshot(&mut self, q: usize, s: &SnapshotStats) {
        for (name, v) in TERMS.iter().zip(s.terms) {
            self.push(q, s.t, name, "L1", v);
        }
        self.push(q, s.t, "R0", "L1", s.r0_l1);
        self.push(q, s.t, "R1", "L1", s.r1_l1);
        self.push(q, s.t, "rho_change", "L1", s.rho_change_l1);
        self.push(q, s.t, "u_change", "C0", s.w_c0);
        self.push(q, s.t, "u_change", "W1p", s.w_w1p);
        self.push(q, s.t, "psi", "value", s.psi);
        self.push(q, s.t, "quadr_closure", "L1", s.closure_l1[0]);
        self.push(q, s.t, "transport_closure", "L1", s.closure_l1[1]);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("q,t,term,norm,value\n");
        for (q, t, term, norm, v) in &self.rows {
            writeln!(out, "{q},{t:.17e},{term},{norm},{v:.17e}").expect("string write");
        }
        out
    }
}
