use serde::Serialize;

use crate::antidiv::{ImprovedAccumulator, OscillatoryFactor};
use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::flow::{CharacteristicMaps, Diffeo, DiffeoSnapshot};
use crate::grid::Grid;
use crate::interp::OffGrid;
use crate::mikado::{build_family, measure_constants, MikadoConstants, MikadoPair};
use crate::norms::{ck_vec, lp, lp_vec, w1p_vec};
use crate::ops::{dilate_onto, dilate_vector_onto};
use crate::scheme::cutoffs::{defect_cutoff, DefectCutoff, TimePartition};
use crate::scheme::params::{choose_exponents, Exponents, Ladder, SchemeParams};
use crate::scheme::tau::{c0_norm, flow_margins, interval_flows, search_tau, TauCandidate};
use crate::spectral::{divergence, gradient, std_antidiv_centered};
use crate::time::{TimeField, TimeGrid};

/// Names of the seven defect terms, in report order.
pub const TERMS: [&str; 7] = ["interaction", "flow", "psi", "quadr", "transport", "nash", "corr"];

/// `(rho, u, R)` on a common grid and time lattice.
#[derive(Debug, Clone)]
pub struct DefectTriple {
    pub rho: TimeField<ScalarField>,
    pub u: TimeField<VectorField>,
    pub r: TimeField<VectorField>,
}

/// `|d_t rho + div(rho u + R)|_{L^1}` given `d_t rho` and the flux divergence.
fn continuity_l1(drho: &ScalarField, flux_div: &ScalarField) -> f64 {
    lp(&drho.add(flux_div), 1.0)
}

fn flux_divergence(rho: &ScalarField, u: &VectorField, r: &VectorField) -> ScalarField {
    divergence(&u.scale_by(rho).add(r))
}

impl DefectTriple {
    pub fn new(rho: TimeField<ScalarField>, u: TimeField<VectorField>, r: TimeField<VectorField>) -> Result<Self> {
        let times = rho.times();
        if u.times() != times || r.times() != times {
            return Err(Error::Grid("density, velocity and defect must share the time lattice".into()));
        }
        let grid = rho.at(0).grid();
        let same = rho.snaps().iter().all(|s| s.grid() == grid)
            && u.snaps().iter().all(|s| s.grid() == grid)
            && r.snaps().iter().all(|s| s.grid() == grid);
        if !same {
            return Err(Error::Grid("all snapshots must share one grid".into()));
        }
        Ok(DefectTriple { rho, u, r })
    }

    pub fn grid(&self) -> Grid {
        self.rho.at(0).grid()
    }

    pub fn times(&self) -> TimeGrid {
        self.rho.times()
    }

    /// `|d_t rho + div(rho u) + div R|_{L^1}` at every snapshot.
    pub fn pde_residuals(&self) -> Vec<f64> {
        (0..self.times().len())
            .map(|k| continuity_l1(&self.rho.dt_at(k), &flux_divergence(self.rho.at(k), self.u.at(k), self.r.at(k))))
            .collect()
    }

    pub fn pde_residual(&self) -> f64 {
        self.pde_residuals().into_iter().fold(0.0, f64::max)
    }

    pub fn max_divergence(&self) -> f64 {
        self.u.snaps().iter().fold(0.0f64, |m, u| m.max(divergence(u).max_abs()))
    }
}

/// Mikado pairs of one parity on the coarse lattice `n / lambda`, with the
/// potentials the improved antidivergence needs.
struct Family {
    lambda: usize,
    pairs: Vec<MikadoPair>,
    theta_pot: Vec<VectorField>,
    /// `Theta_j W_j - mean`
    quad: Vec<ScalarField>,
    quad_mean: Vec<f64>,
    quad_pot: Vec<VectorField>,
}

impl Family {
    fn build(lambda: usize, mu: f64, grid: Grid) -> Result<Family> {
        let coarse = grid.coarsen(lambda)?;
        let d = grid.d() as i32;
        let pairs = build_family(mu, coarse, (d - 1, 0))?;
        let theta_pot = pairs.iter().map(|p| std_antidiv_centered(&p.theta)).collect();
        let prods: Vec<ScalarField> = pairs.iter().map(|p| p.theta_w()).collect();
        let quad_mean: Vec<f64> = prods.iter().map(|q| q.mean()).collect();
        let quad: Vec<ScalarField> = prods.iter().map(|q| q.subtract_mean()).collect();
        let quad_pot = quad.iter().map(std_antidiv_centered).collect();
        Ok(Family { lambda, pairs, theta_pot, quad, quad_mean, quad_pot })
    }
}

/// `Theta^j(lambda Phi)`, `(DPhi)^{-1} W^j(lambda Phi)` and the two oscillatory factors.
struct Piece {
    theta: ScalarField,
    w: VectorField,
    theta_factor: OscillatoryFactor,
    quad_factor: OscillatoryFactor,
}

fn build_piece(fam: &Family, j: usize, phi: &DiffeoSnapshot) -> Result<Piece> {
    let grid = phi.grid();
    let lambda = fam.lambda;
    let pair = &fam.pairs[j];
    if phi.is_identity() {
        let theta = dilate_onto(&pair.theta, lambda, grid)?;
        let wj = dilate_onto(pair.w_axis(), lambda, grid)?;
        let theta_factor =
            OscillatoryFactor::from_composed(lambda, theta.clone(), dilate_vector_onto(&fam.theta_pot[j], lambda, grid)?);
        let quad_factor = OscillatoryFactor::from_composed(
            lambda,
            dilate_onto(&fam.quad[j], lambda, grid)?,
            dilate_vector_onto(&fam.quad_pot[j], lambda, grid)?,
        );
        return Ok(Piece { theta, w: VectorField::along(&wj, j), theta_factor, quad_factor });
    }
    let d = grid.d();
    let pts = phi.points(lambda as f64);
    let mut th = vec![0.0; grid.len()];
    let mut wv = vec![0.0; grid.len()];
    for (p, x) in pts.chunks(d).enumerate() {
        let (a, b) = pair.shape.eval(x);
        th[p] = a;
        wv[p] = b;
    }
    let quad: Vec<f64> = th.iter().zip(&wv).map(|(a, b)| a * b - fam.quad_mean[j]).collect();
    let theta = ScalarField::from_vec(grid, th)?;
    let wj = ScalarField::from_vec(grid, wv)?;
    let refs: Vec<&ScalarField> = fam.theta_pot[j].comps().iter().chain(fam.quad_pot[j].comps()).collect();
    let mut vals = OffGrid::new(&refs).eval(&pts).into_iter();
    let mut take = || -> Result<VectorField> {
        VectorField::new(
            (0..d)
                .map(|_| ScalarField::from_vec(grid, vals.next().expect("2d fields")))
                .collect::<Result<Vec<_>>>()?,
        )
    };
    let theta_pot = take()?;
    let quad_pot = take()?;
    let inv = phi.inverse_jacobian_ref().expect("non-identity flow");
    let w = VectorField::new((0..d).map(|a| inv.entry(a, j).mul(&wj)).collect())?;
    Ok(Piece {
        theta_factor: OscillatoryFactor::from_composed(lambda, theta.clone(), inv.apply(&theta_pot)),
        quad_factor: OscillatoryFactor::from_composed(lambda, ScalarField::from_vec(grid, quad)?, inv.apply(&quad_pot)),
        theta,
        w,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LadderSource {
    /// set explicitly by the caller
    Fixed,
    /// `(lambda, lambda^alpha, lambda^beta, lambda^gamma)`
    Exponents,
    /// largest ladder the lattice carries; the exponent ladder did not fit
    Budget,
}

#[derive(Debug, Clone, Serialize)]
pub struct TauReport {
    pub tau: f64,
    pub chosen: bool,
    pub passed: bool,
    pub max_inverse_norm: f64,
    pub max_inverse_deviation: f64,
    pub flow_defect: f64,
    pub candidates: Vec<TauCandidate>,
}

/// Per-snapshot measurements.
#[derive(Debug, Clone, Serialize)]
pub struct SnapshotStats {
    pub k: usize,
    pub t: f64,
    pub psi: f64,
    pub dpsi: f64,
    pub active: Vec<usize>,
    /// `L^1` norms in the order of [`TERMS`]
    pub terms: [f64; 7],
    pub r0_l1: f64,
    pub r1_l1: f64,
    pub theta_l1: f64,
    pub theta_c: f64,
    pub w_c0: f64,
    pub w_w1p: f64,
    pub rho_change_l1: f64,
    pub div_u1: f64,
    pub mean_shift: f64,
    /// `|theta w - diagonal - R^interaction|_inf`, relative
    pub interaction_reassembly: f64,
    /// `|div R^quadr - target|_inf` and the same for `R^transport`
    pub antidiv_residual: [f64; 2],
    /// `L^1` norms of the lattice closures inside `R^quadr` and `R^transport`
    pub closure_l1: [f64; 2],
    /// `L^1` norms of the improved antidivergences alone
    pub improved_l1: [f64; 2],
    pub max_inverse_norm: f64,
}

pub struct SnapshotOutput {
    pub rho: ScalarField,
    pub u: VectorField,
    pub r: VectorField,
    /// `div(rho u + R)` of the outputs
    pub flux_div: ScalarField,
    pub stats: SnapshotStats,
}

/// Everything fixed before the snapshots are assembled.
pub struct StepContext<'a> {
    input: &'a DefectTriple,
    params: SchemeParams,
    pub exponents: Exponents,
    pub psi: DefectCutoff,
    pub partition: TimePartition,
    pub flows: Vec<Diffeo>,
    pub tau: TauReport,
    pub ladder: Ladder,
    pub ladder_source: LadderSource,
    pub constants: MikadoConstants,
    pub b_residual: f64,
    pub notes: Vec<String>,
    families: [Family; 2],
}

fn ladder_fits(l: &Ladder, grid: Grid) -> bool {
    l.check(grid).is_ok()
}

/// Exponent ladders `lambda = 2, 4, ...` the lattice can carry.
pub fn admissible_ladders(e: &Exponents, grid: Grid) -> Vec<Ladder> {
    let mut out = Vec::new();
    let mut lambda = 2;
    while lambda <= grid.n() {
        let l = Ladder::from_base(lambda, e, grid.n());
        if ladder_fits(&l, grid) {
            out.push(l);
        }
        lambda *= 2;
    }
    out
}

/// First admissible exponent ladder, or the budget ladder when none fits.
pub fn default_ladder(e: &Exponents, grid: Grid) -> Result<(Ladder, LadderSource)> {
    match admissible_ladders(e, grid).first() {
        Some(l) => Ok((*l, LadderSource::Exponents)),
        None => Ok((Ladder::budget(grid)?, LadderSource::Budget)),
    }
}

/// Measured Mikado constants of both families of `ladder`.
pub fn ladder_constants(ladder: Ladder, grid: Grid) -> Result<MikadoConstants> {
    ladder.check(grid)?;
    StepContext::families(ladder, grid).map(|(_, c)| c)
}

fn unfit_reason(e: &Exponents, grid: Grid) -> String {
    let l = Ladder::from_base(2, e, grid.n());
    let raw = (2.0f64.powf(e.beta), 2.0f64.powf(e.gamma));
    match l.check(grid) {
        Err(err) => format!(
            "resolution: exponent ladder at lambda = 2 is ({}, {}, {}, {}) before rounding; {err}",
            2,
            2.0f64.powf(e.alpha),
            raw.0,
            raw.1
        ),
        Ok(()) => "resolution: no exponent ladder fits the lattice".into(),
    }
}

impl<'a> StepContext<'a> {
    /// Choose `tau` (or take the fixed one), compute the flows, check them and
    /// build the Mikado families for `ladder` (or the first admissible one).
    pub fn new(input: &'a DefectTriple, params: &SchemeParams) -> Result<Self> {
        params.validate()?;
        let grid = input.grid();
        let times = input.times();
        let exponents = choose_exponents(params.p, grid.d(), params.margin)?;
        let psi = defect_cutoff(&input.r, params.delta)?;
        let mut notes = Vec::new();
        let opts = params.flow_options();
        let maps = CharacteristicMaps::new(&input.u, (0, times.steps()), opts)?;
        let (partition, flows, tau) = match params.tau {
            Some(tau) => {
                let partition = TimePartition::new(tau)?;
                let flows = interval_flows(&maps, &partition, opts)?;
                let (inv, dev) = flow_margins(&flows);
                let defect = c0_norm(&input.r) * dev;
                let report = TauReport {
                    tau,
                    chosen: false,
                    passed: inv <= 2.0 && defect <= params.delta / 4.0,
                    max_inverse_norm: inv,
                    max_inverse_deviation: dev,
                    flow_defect: defect,
                    candidates: Vec::new(),
                };
                (partition, flows, report)
            }
            None => {
                let choice = search_tau(&maps, c0_norm(&input.r), params.delta, opts)?;
                let last = choice.candidates.iter().rev().find(|c| c.tau == choice.tau).expect("candidate").clone();
                if !choice.passed {
                    notes.push(format!(
                        "time resolution: tau stopped at {} with max |DPhi^-1| = {:.3e}, |R0| |Id - DPhi^-1| = {:.3e}",
                        choice.tau, last.max_inverse_norm, last.flow_defect
                    ));
                }
                let report = TauReport {
                    tau: choice.tau,
                    chosen: true,
                    passed: choice.passed,
                    max_inverse_norm: last.max_inverse_norm,
                    max_inverse_deviation: last.max_inverse_deviation,
                    flow_defect: last.flow_defect,
                    candidates: choice.candidates,
                };
                (TimePartition::new(choice.tau)?, choice.flows, report)
            }
        };
        let u_c1 = input.u.snaps().iter().fold(0.0f64, |m, u| m.max(ck_vec(u, 1)));
        let b_residual = flows.iter().fold(0.0f64, |m, f| m.max(f.transport_residual(&input.u)));
        if b_residual > params.flow_tolerance * u_c1 {
            return Err(Error::FlowAccuracy(format!(
                "transport residual of the flow maps {b_residual:.3e} exceeds {:.1e} |u0|_C1 = {:.3e}",
                params.flow_tolerance,
                params.flow_tolerance * u_c1
            )));
        }
        let (ladder, ladder_source) = match params.ladder {
            Some(l) => {
                l.check(grid)?;
                (l, LadderSource::Fixed)
            }
            None => {
                let (l, source) = default_ladder(&exponents, grid)?;
                if source == LadderSource::Budget {
                    notes.push(unfit_reason(&exponents, grid));
                }
                (l, source)
            }
        };
        let (families, constants) = Self::families(ladder, grid)?;
        Ok(StepContext {
            input,
            params: params.clone(),
            exponents,
            psi,
            partition,
            flows,
            tau,
            ladder,
            ladder_source,
            constants,
            b_residual,
            notes,
            families,
        })
    }

    fn families(ladder: Ladder, grid: Grid) -> Result<([Family; 2], MikadoConstants)> {
        let primary = Family::build(ladder.lambda1, ladder.mu1, grid)?;
        let secondary = Family::build(ladder.lambda2, ladder.mu2, grid)?;
        let all: Vec<MikadoPair> = primary.pairs.iter().chain(&secondary.pairs).cloned().collect();
        let constants = measure_constants(&all)?;
        Ok(([primary, secondary], constants))
    }

    /// Stats of the listed snapshots only.
    pub fn run_selected(&self, ks: &[usize]) -> Result<Vec<SnapshotStats>> {
        ks.iter().map(|&k| self.snapshot(k).map(|o| o.stats)).collect()
    }

    /// Rebuild the Mikado families for another ladder.
    pub fn set_ladder(&mut self, ladder: Ladder, source: LadderSource) -> Result<()> {
        let grid = self.input.grid();
        ladder.check(grid)?;
        let (families, constants) = Self::families(ladder, grid)?;
        self.families = families;
        self.constants = constants;
        self.ladder = ladder;
        self.ladder_source = source;
        Ok(())
    }

    pub fn params(&self) -> &SchemeParams {
        &self.params
    }

    pub fn input(&self) -> &DefectTriple {
        self.input
    }

    /// The measured Mikado constant `M`.
    pub fn m(&self) -> f64 {
        self.constants.m
    }

    fn family(&self, i: usize) -> &Family {
        &self.families[if self.partition.is_primary(i) { 0 } else { 1 }]
    }

    /// Assemble `rho1, u1, R1` at snapshot `k`.
    pub fn snapshot(&self, k: usize) -> Result<SnapshotOutput> {
        let input = self.input;
        let grid = input.grid();
        let d = grid.d();
        let t = input.times().t(k);
        let rho0 = input.rho.at(k);
        let u0 = input.u.at(k);
        let r0 = input.r.at(k);
        let psi = self.psi.values[k];
        let dpsi = self.psi.derivative[k];
        let r0_l1 = lp_vec(r0, 1.0);
        if psi == 0.0 {
            let mut terms = [0.0; 7];
            terms[2] = r0_l1;
            let stats = SnapshotStats {
                k,
                t,
                psi,
                dpsi,
                active: Vec::new(),
                terms,
                r0_l1,
                r1_l1: r0_l1,
                theta_l1: 0.0,
                theta_c: 0.0,
                w_c0: 0.0,
                w_w1p: 0.0,
                rho_change_l1: 0.0,
                div_u1: divergence(u0).max_abs(),
                mean_shift: 0.0,
                interaction_reassembly: 0.0,
                antidiv_residual: [0.0; 2],
                closure_l1: [0.0; 2],
                improved_l1: [0.0; 2],
                max_inverse_norm: 1.0,
            };
            return Ok(SnapshotOutput {
                flux_div: flux_divergence(rho0, u0, r0),
                rho: rho0.clone(),
                u: u0.clone(),
                r: r0.clone(),
                stats,
            });
        }
        let eta = self.params.eta;
        let active = self.partition.active(t);
        let dr0 = input.r.dt_at(k);
        let grad_r0: Vec<Option<VectorField>> = r0
            .comps()
            .iter()
            .map(|c| if c.max_abs() == 0.0 { None } else { Some(gradient(c)) })
            .collect();

        let mut quadr = ImprovedAccumulator::new(grid);
        let mut transport = ImprovedAccumulator::new(grid);
        let mut diag = VectorField::zeros(grid);
        let mut flow_term = VectorField::zeros(grid);
        let mut parts: Vec<(f64, ScalarField, VectorField)> = Vec::new();
        let mut max_inv = 1.0f64;
        for &i in &active {
            let (a, da) = self.partition.alpha(i, t);
            let phi = self.flows[i].snapshot(k);
            max_inv = max_inv.max(phi.inverse_jacobian_norm());
            let inv = phi.inverse_jacobian_ref();
            let fam = self.family(i);
            let mut ti = ScalarField::zeros(grid);
            let mut vi = VectorField::zeros(grid);
            for j in 0..d {
                let piece = build_piece(fam, j, &phi)?;
                let r0j = r0.comp(j);
                ti.axpy(1.0, &r0j.mul(&piece.theta));
                vi.axpy(1.0, &piece.w);
                diag.axpy(psi * psi * a * a, &piece.w.scale_by(&r0j.mul(&piece.theta)));
                if let Some(g) = &grad_r0[j] {
                    // grad R0_j . (DPhi^{-1}) e_j
                    let f = match inv {
                        None => g.comp(j).clone(),
                        Some(m) => {
                            let col = VectorField::new((0..d).map(|b| m.entry(b, j).clone()).collect())?;
                            g.dot(&col)
                        }
                    };
                    if f.max_abs() > 0.0 {
                        quadr.add(psi * psi * a * a, &f, &gradient(&f), &piece.quad_factor);
                    }
                }
                // A_ij = eta [(psi' alpha + psi alpha') R0_j + psi alpha (d_t R0_j + grad R0_j . u0)]
                let mut aij = r0j.scale(eta * (dpsi * a + psi * da));
                aij.axpy(eta * psi * a, dr0.comp(j));
                if let Some(g) = &grad_r0[j] {
                    aij.axpy(eta * psi * a, &g.dot(u0));
                }
                if aij.max_abs() > 0.0 {
                    transport.add(1.0, &aij, &gradient(&aij), &piece.theta_factor);
                }
            }
            // -(Id - DPhi^{-1}) R0
            if let Some(m) = inv {
                flow_term.axpy(-psi * psi * a * a, &r0.sub(&m.apply(r0)));
            }
            parts.push((a, ti, vi));
        }

        let mut theta = ScalarField::zeros(grid);
        let mut w = VectorField::zeros(grid);
        for (a, ti, vi) in &parts {
            theta.axpy(eta * psi * a, ti);
            w.axpy(psi / eta * a, vi);
        }
        let theta_c = -theta.mean();
        let interaction = if parts.len() == 2 {
            let (a1, t1, v1) = &parts[0];
            let (a2, t2, v2) = &parts[1];
            v2.scale_by(t1).add(&v1.scale_by(t2)).scale(psi * psi * a1 * a2)
        } else {
            VectorField::zeros(grid)
        };
        let reassembly = {
            let prod = w.scale_by(&theta);
            let scale = (theta.max_abs() * w.max_abs()).max(1.0);
            prod.sub(&diag).sub(&interaction).max_abs() / scale
        };
        let r_psi = r0.scale(-(1.0 - psi * psi));
        let quadr = quadr.finish_closed();
        let transport = transport.finish_closed();
        let antidiv_residual = [quadr.residual, transport.residual];
        let closure_l1 = [lp_vec(&quadr.closure, 1.0), lp_vec(&transport.closure, 1.0)];
        let improved_l1 = [lp_vec(&quadr.improved, 1.0), lp_vec(&transport.improved, 1.0)];
        let r_quadr = quadr.improved.add(&quadr.closure);
        let r_transport = transport.improved.add(&transport.closure);
        let r_nash = w.scale_by(rho0);
        let r_corr = w.scale(theta_c);
        let terms_f = [&interaction, &flow_term, &r_psi, &r_quadr, &r_transport, &r_nash, &r_corr];
        let mut r1 = VectorField::zeros(grid);
        let mut terms = [0.0; 7];
        for (slot, term) in terms.iter_mut().zip(terms_f) {
            r1.axpy(-1.0, term);
            *slot = lp_vec(term, 1.0);
        }
        let mut rho1 = rho0.clone();
        rho1.axpy(1.0, &theta);
        rho1.data_mut().iter_mut().for_each(|v| *v += theta_c);
        let u1 = u0.add(&w);
        let stats = SnapshotStats {
            k,
            t,
            psi,
            dpsi,
            active: active.clone(),
            terms,
            r0_l1,
            r1_l1: lp_vec(&r1, 1.0),
            theta_l1: lp(&theta, 1.0),
            theta_c: theta_c.abs(),
            w_c0: w.max_abs(),
            w_w1p: w1p_vec(&w, self.params.p),
            rho_change_l1: lp(&rho1.sub(rho0), 1.0),
            div_u1: divergence(&u1).max_abs(),
            mean_shift: (rho1.mean() - rho0.mean()).abs(),
            interaction_reassembly: reassembly,
            antidiv_residual,
            closure_l1,
            improved_l1,
            max_inverse_norm: max_inv,
        };
        Ok(SnapshotOutput { flux_div: flux_divergence(&rho1, &u1, &r1), rho: rho1, u: u1, r: r1, stats })
    }

    /// Every snapshot; keeps the output fields when `keep` is set, otherwise
    /// only the density and flux divergence needed for the PDE residual.
    pub fn run(&self, keep: bool) -> Result<StepRun> {
        let times = self.input.times();
        let mut rho = Vec::with_capacity(times.len());
        let mut flux = Vec::with_capacity(times.len());
        let mut u = Vec::new();
        let mut r = Vec::new();
        let mut stats = Vec::with_capacity(times.len());
        for k in 0..times.len() {
            let out = self.snapshot(k)?;
            rho.push(out.rho);
            flux.push(out.flux_div);
            stats.push(out.stats);
            if keep {
                u.push(out.u);
                r.push(out.r);
            }
        }
        let rho = TimeField::new(times, rho)?;
        let residuals: Vec<f64> = (0..times.len()).map(|k| continuity_l1(&rho.dt_at(k), &flux[k])).collect();
        let output = if keep {
            Some(DefectTriple::new(rho, TimeField::new(times, u)?, TimeField::new(times, r)?)?)
        } else {
            None
        };
        let conclusions = Conclusions::measure(&stats, self.m(), &self.params);
        Ok(StepRun { output, stats, residuals, conclusions })
    }
}

pub struct StepRun {
    pub output: Option<DefectTriple>,
    pub stats: Vec<SnapshotStats>,
    /// `|d_t rho1 + div(rho1 u1) + div R1|_{L^1}` per snapshot
    pub residuals: Vec<f64>,
    pub conclusions: Conclusions,
}

impl StepRun {
    pub fn pde_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Worst value of one conclusion over time, against its bound.
#[derive(Debug, Clone, Serialize)]
pub struct ConclusionCheck {
    pub name: &'static str,
    pub worst: f64,
    pub bound_at_worst: f64,
    pub worst_t: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Conclusions {
    pub checks: Vec<ConclusionCheck>,
}

impl Conclusions {
    pub fn measure(stats: &[SnapshotStats], m: f64, params: &SchemeParams) -> Conclusions {
        let eta = params.eta;
        let delta = params.delta;
        type Pick = fn(&SnapshotStats) -> f64;
        let rows: [(&'static str, Pick, Box<dyn Fn(&SnapshotStats) -> f64>); 4] = [
            ("rho_l1", |s| s.rho_change_l1, Box::new(move |s| m * eta * s.r0_l1)),
            ("u_c0", |s| s.w_c0, Box::new(move |_| m / eta)),
            ("u_w1p", |s| s.w_w1p, Box::new(move |_| delta)),
            ("r1_l1", |s| s.r1_l1, Box::new(move |_| delta)),
        ];
        let checks = rows
            .into_iter()
            .map(|(name, value, bound)| {
                let mut worst = ConclusionCheck { name, worst: 0.0, bound_at_worst: 0.0, worst_t: 0.0, holds: true };
                let mut ratio = f64::NEG_INFINITY;
                for s in stats {
                    let (v, b) = (value(s), bound(s));
                    let r = if b > 0.0 { v / b } else if v > 0.0 { f64::INFINITY } else { 0.0 };
                    worst.holds &= v <= b;
                    if r > ratio {
                        ratio = r;
                        worst.worst = v;
                        worst.bound_at_worst = b;
                        worst.worst_t = s.t;
                    }
                }
                worst
            })
            .collect();
        Conclusions { checks }
    }

    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }

    pub fn failing(&self) -> Vec<String> {
        self.checks
            .iter()
            .filter(|c| !c.holds)
            .map(|c| format!("{} = {:.3e} > {:.3e} at t = {}", c.name, c.worst, c.bound_at_worst, c.worst_t))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum StepStatus {
    Complete,
    Partial,
}

#[derive(Debug, Clone, Serialize)]
pub struct AttemptSummary {
    pub ladder: Ladder,
    pub conclusions: Conclusions,
}

#[derive(Debug, Clone, Serialize)]
pub struct StepReport {
    pub status: StepStatus,
    pub binding: Vec<String>,
    pub exponents: Exponents,
    pub ladder: Ladder,
    pub ladder_source: LadderSource,
    pub attempts: Vec<AttemptSummary>,
    pub tau: TauReport,
    pub m0: f64,
    pub m1: f64,
    pub m: f64,
    pub mikado_sums_within_quarter_m: bool,
    pub psi: DefectCutoff,
    pub b_residual: f64,
    pub input_pde_residual: f64,
    pub pde_residual: f64,
    pub max_div_u1: f64,
    pub max_mean_shift: f64,
    pub max_interaction_reassembly: f64,
    pub conclusions: Conclusions,
    pub snapshots: Vec<SnapshotStats>,
}

pub struct StepOutcome {
    pub output: DefectTriple,
    pub report: StepReport,
}

/// One step: choose `tau` and the ladder, then raise `lambda` through the
/// admissible exponent ladders until the four conclusions hold. When the
/// lattice runs out first the last attempt is returned as PARTIAL.
pub fn perturb_step(input: &DefectTriple, params: &SchemeParams) -> Result<StepOutcome> {
    let grid = input.grid();
    if params.p >= (grid.d() - 1) as f64 {
        return Err(Error::Infeasible(format!("p = {} must be below d - 1 = {}", params.p, grid.d() - 1)));
    }
    let mut ctx = StepContext::new(input, params)?;
    let ladders: Vec<Ladder> = match ctx.ladder_source {
        LadderSource::Exponents => admissible_ladders(&ctx.exponents, grid),
        _ => vec![ctx.ladder],
    };
    let mut attempts = Vec::new();
    let mut last = None;
    for (n, ladder) in ladders.iter().enumerate() {
        if n > 0 {
            ctx.set_ladder(*ladder, LadderSource::Exponents)?;
        }
        let run = ctx.run(true)?;
        attempts.push(AttemptSummary { ladder: *ladder, conclusions: run.conclusions.clone() });
        let done = run.conclusions.all_hold();
        last = Some(run);
        if done {
            break;
        }
    }
    let run = last.expect("at least one ladder");
    let mut binding = ctx.notes.clone();
    binding.extend(run.conclusions.failing());
    let status = if binding.is_empty() { StepStatus::Complete } else { StepStatus::Partial };
    let fold = |f: fn(&SnapshotStats) -> f64| run.stats.iter().map(f).fold(0.0, f64::max);
    let report = StepReport {
        status,
        binding,
        exponents: ctx.exponents,
        ladder: ctx.ladder,
        ladder_source: ctx.ladder_source,
        attempts,
        tau: ctx.tau.clone(),
        m0: ctx.constants.m0,
        m1: ctx.constants.m1,
        m: ctx.constants.m,
        mikado_sums_within_quarter_m: ctx.constants.sums_within_quarter_m,
        psi: ctx.psi.clone(),
        b_residual: ctx.b_residual,
        input_pde_residual: input.pde_residual(),
        pde_residual: run.pde_residual(),
        max_div_u1: fold(|s| s.div_u1),
        max_mean_shift: fold(|s| s.mean_shift),
        max_interaction_reassembly: fold(|s| s.interaction_reassembly),
        conclusions: run.conclusions.clone(),
        snapshots: run.stats,
    };
    Ok(StepOutcome { output: run.output.expect("kept"), report })
}
