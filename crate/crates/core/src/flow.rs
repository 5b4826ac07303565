//! Trajectory integration with side-pairing continuation.
//!
//! States are `[f64; 4]`: the first three coordinates live in a
//! `FundamentalDomain` (either the upper half-space or a Euclidean box) and
//! the fourth is a passenger coordinate that pairings leave untouched (the
//! pendulum's angular-velocity slot; zero for hyperbolic fields).
//!
//! Steps come from the Dormand-Prince 4(5) embedded pair with standard
//! proportional step control. When an accepted step lands beyond a face of
//! the current cell, the crossing time is bisected to the face tolerance,
//! the stored pairing map carries the point to the partner face, and
//! integration continues there; each crossing appends the face's letter to
//! the segment word, so a trajectory is a list of segments labeled by where
//! the curve sits in the tiling.

use crate::domain::{FundamentalDomain, PairingMap};
use crate::error::{Error, Result};
use crate::group::GroupWord;

/// Phase-space point: three domain coordinates plus one passenger.
pub type State = [f64; 4];

#[derive(Clone, Copy, Debug)]
pub struct IntegrationParams {
    pub rtol: f64,
    pub atol: f64,
    /// Cap on step attempts (accepted plus rejected) before giving up.
    pub max_steps: u64,
    /// A face is considered crossed when its constraint exceeds this.
    pub face_tol: f64,
    /// Field magnitude below which the point counts as an equilibrium.
    pub equilibrium_tol: f64,
    pub initial_step: Option<f64>,
}

impl Default for IntegrationParams {
    fn default() -> Self {
        IntegrationParams {
            rtol: 1e-9,
            atol: 1e-9,
            max_steps: 1_000_000,
            face_tol: 1e-10,
            equilibrium_tol: 1e-12,
            initial_step: None,
        }
    }
}

/// Why integration ended.
#[derive(Clone, Debug, PartialEq)]
pub enum StopReason {
    /// Reached `t_end`.
    Completed,
    /// Field magnitude fell below the equilibrium threshold.
    Equilibrium { t: f64, speed: f64 },
    /// The field reported a pole (or kept failing as the step shrank).
    PoleHit { t: f64, message: String },
    BudgetExceeded { t: f64, steps: u64 },
    /// Exited through an unpaired (absorbing) side.
    LeftDomain { t: f64, side: String },
    /// A crossing re-entered on a face through which the field immediately
    /// points outward again: both one-sided flows leave the identified
    /// face, so the classical trajectory ends in a sliding arrest. This is
    /// how truncation error in an almost-covariant field shows up when the
    /// flow runs nearly parallel to a seam.
    SlidingSeam { t: f64, side: String, outward_rate: f64 },
}

/// A maximal piece of trajectory between crossings, tagged with the
/// accumulated face word.
#[derive(Clone, Debug)]
pub struct Segment {
    pub word: GroupWord,
    pub samples: Vec<(f64, State)>,
}

/// One face crossing: the exit side, the point just past the face, and its
/// image under the applied pairing map.
#[derive(Clone, Debug)]
pub struct CrossingEvent {
    pub t: f64,
    pub side: usize,
    pub side_label: String,
    pub map: PairingMap,
    pub incoming: State,
    pub outgoing: State,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub segments: Vec<Segment>,
    pub events: Vec<CrossingEvent>,
    pub stop: StopReason,
}

impl Trajectory {
    pub fn final_sample(&self) -> (f64, State) {
        let seg = self.segments.last().expect("trajectory has at least one segment");
        *seg.samples.last().expect("segment has at least one sample")
    }

    pub fn crossing_count(&self) -> usize {
        self.events.len()
    }

    pub fn sample_count(&self) -> usize {
        self.segments.iter().map(|s| s.samples.len()).sum()
    }
}

/// Spherical-pendulum parameters: gravity over length, and the constant
/// precession rate fed to the third coordinate.
#[derive(Clone, Copy, Debug)]
pub struct PendulumParams {
    pub g_over_l: f64,
    pub k: f64,
}

impl PendulumParams {
    pub fn new(g_over_l: f64, k: f64) -> Result<PendulumParams> {
        if !(g_over_l > 0.0) {
            return Err(Error::Invalid(format!("g_over_l must be positive, got {g_over_l}")));
        }
        Ok(PendulumParams { g_over_l, k })
    }
}

impl Default for PendulumParams {
    fn default() -> Self {
        PendulumParams { g_over_l: 9.8, k: 0.0 }
    }
}

/// Pendulum right-hand side:
/// `(x2, x4^2 sin x1 cos x1 - (g/l) sin x1, k, 0)`.
pub fn pendulum_field(x: &State, params: &PendulumParams) -> State {
    let (s, c) = x[0].sin_cos();
    [x[1], x[3] * x[3] * s * c - params.g_over_l * s, params.k, 0.0]
}

/// Planar pendulum energy `E2 = x2^2/2 - (g/l) cos x1`, conserved when the
/// passenger coordinate is zero.
pub fn pendulum_energy(x: &State, params: &PendulumParams) -> f64 {
    0.5 * x[1] * x[1] - params.g_over_l * x[0].cos()
}

/// The solid-Klein-bottle box: angles `x1, x3` in `[-pi, pi]`, momentum
/// `x2` truncated to `[-x2_max, x2_max]` as an absorbing range. The `x1`
/// faces are glued by translation; the `x3` faces by the involution
/// `(x1, x2, x3) -> (-x1, -x2, -x3)`, which reverses orientation.
pub fn klein_bottle_domain(x2_max: f64) -> FundamentalDomain {
    use crate::domain::{box_domain, AxisPairing};
    use std::f64::consts::PI;
    let flip = PairingMap::Euclidean {
        linear: [[-1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]],
        translation: [0.0, 0.0, 0.0],
    };
    box_domain(
        [-PI, -x2_max, -PI],
        [PI, x2_max, PI],
        [
            AxisPairing::Translation,
            AxisPairing::Open,
            AxisPairing::Custom(flip.clone(), flip),
        ],
    )
    .expect("box construction is structurally valid")
}

const DP_A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Difference between the fifth- and fourth-order weights.
const DP_E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn axpy(x: &State, k: &[State], row: &[f64], dt: f64) -> State {
    let mut out = *x;
    for (ki, c) in k.iter().zip(row) {
        if *c != 0.0 {
            for d in 0..4 {
                out[d] += dt * c * ki[d];
            }
        }
    }
    out
}

/// One Dormand-Prince step: returns the fifth-order endpoint and the
/// embedded error estimate.
fn rk_step<F>(field: &F, x: &State, dt: f64) -> Result<(State, State)>
where
    F: Fn(&State) -> Result<State>,
{
    let mut k = Vec::with_capacity(7);
    k.push(field(x)?);
    for stage in 0..6 {
        let xs = axpy(x, &k, &DP_A[stage][..=stage], dt);
        k.push(field(&xs)?);
    }
    let x_new = axpy(x, &k[..6], &DP_A[5], dt);
    let mut err = [0.0; 4];
    for (ki, c) in k.iter().zip(DP_E) {
        for d in 0..4 {
            err[d] += dt * c * ki[d];
        }
    }
    Ok((x_new, err))
}

fn error_norm(err: &State, x: &State, x_new: &State, params: &IntegrationParams) -> f64 {
    let mut acc = 0.0;
    for d in 0..4 {
        let scale = params.atol + params.rtol * x[d].abs().max(x_new[d].abs());
        let e = err[d] / scale;
        acc += e * e;
    }
    (acc / 4.0).sqrt()
}

fn speed(v: &State) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

fn xyz(x: &State) -> [f64; 3] {
    [x[0], x[1], x[2]]
}

/// Sides of `cell` whose constraint exceeds `face_tol` at `x`, in side-index
/// order.
fn violated_sides(d: &FundamentalDomain, cell: usize, x: &State, face_tol: f64) -> Vec<usize> {
    d.cell_sides(cell).filter(|&s| d.side_value(s, xyz(x)) > face_tol).collect()
}

struct Walker<'a> {
    domain: &'a FundamentalDomain,
    cell: usize,
    segments: Vec<Segment>,
    events: Vec<CrossingEvent>,
}

impl<'a> Walker<'a> {
    /// Crosses the given side at `(t, x)`: applies the partner's stored map,
    /// starts a new segment with the extended word, and records the event.
    /// Returns the outgoing state, or the absorbing stop if the side is
    /// unpaired.
    /// On success returns the continuation state together with the index of
    /// the side it re-entered through (the partner face).
    fn cross(&mut self, side: usize, t: f64, x: State) -> Result<std::result::Result<(State, usize), StopReason>> {
        let label = self.domain.sides()[side].label.clone();
        let Some(partner) = self.domain.partner_index(side) else {
            self.push_sample(t, x);
            return Ok(Err(StopReason::LeftDomain { t, side: label }));
        };
        let map = self
            .domain
            .sides()[partner]
            .pairing
            .as_ref()
            .expect("mutual pairing")
            .map
            .clone();
        let image = map.apply(xyz(&x))?;
        // the pairing carries the face to the face, but an epsilon-outside
        // point may land epsilon-outside the partner (orientation-reversing
        // maps do); snap onto the entry face so integration resumes on it
        let image = self.domain.project_onto_side(partner, image).unwrap_or(image);
        let out = [image[0], image[1], image[2], x[3]];
        self.push_sample(t, x);
        let word = match self.domain.side_letter(side) {
            Some(letter) => self.segments.last().unwrap().word.appended_reduced(letter),
            None => self.segments.last().unwrap().word.clone(),
        };
        self.events.push(CrossingEvent {
            t,
            side,
            side_label: label,
            map,
            incoming: x,
            outgoing: out,
        });
        self.cell = self.domain.sides()[partner].cell;
        self.segments.push(Segment { word, samples: vec![(t, out)] });
        Ok(Ok((out, partner)))
    }

    fn push_sample(&mut self, t: f64, x: State) {
        self.segments.last_mut().unwrap().samples.push((t, x));
    }
}

/// Integrates `x' = field(x)` from `p0` for time `t_end` inside the
/// fundamental domain, continuing across paired faces.
pub fn integrate_wrapped<F>(
    field: F,
    p0: State,
    t_end: f64,
    d: &FundamentalDomain,
    params: &IntegrationParams,
) -> Result<Trajectory>
where
    F: Fn(&State) -> Result<State>,
{
    if !t_end.is_finite() || t_end <= 0.0 {
        return Err(Error::Invalid(format!("t_end must be positive, got {t_end}")));
    }
    let cell = d
        .cell_of(xyz(&p0), crate::domain::FACE_TOL)
        .ok_or_else(|| Error::LocateFailed { x: p0[0], y: p0[1], r: p0[2] })?;

    let mut walker = Walker {
        domain: d,
        cell,
        segments: vec![Segment { word: GroupWord::identity(), samples: vec![(0.0, p0)] }],
        events: Vec::new(),
    };

    let finish = |walker: Walker, stop: StopReason| Trajectory {
        segments: walker.segments,
        events: walker.events,
        stop,
    };

    let f0 = field(&p0)?;
    if speed(&f0) < params.equilibrium_tol {
        let stop = StopReason::Equilibrium { t: 0.0, speed: speed(&f0) };
        return Ok(finish(walker, stop));
    }

    // a continuation point whose field still pushes outward through the face
    // it just re-entered would bounce across the identification forever; the
    // trajectory slides along the seam instead of crossing it, and we stop.
    let sliding = |t: f64, entry: usize, x: &State| -> std::result::Result<(), StopReason> {
        let v = match field(x) {
            Ok(v) => v,
            Err(e) => return Err(StopReason::PoleHit { t, message: e.to_string() }),
        };
        let g = d.side_gradient(entry, xyz(x));
        let rate = g[0] * v[0] + g[1] * v[1] + g[2] * v[2];
        if rate > 1e-9 * (1.0 + speed(&v)) {
            return Err(StopReason::SlidingSeam {
                t,
                side: d.sides()[entry].label.clone(),
                outward_rate: rate,
            });
        }
        Ok(())
    };

    let mut t = 0.0;
    let mut x = p0;
    let mut dt = params
        .initial_step
        .unwrap_or_else(|| (0.01 * (1.0 + speed(&x)) / (1.0 + speed(&f0))).min(t_end / 10.0))
        .min(t_end);
    let t_done = t_end * (1.0 - 1e-12);
    let mut steps: u64 = 0;
    let mut pending_entry: Option<usize> = None;

    loop {
        // chains of instantaneous crossings (corner passages, entry overshoot)
        let mut chain = 0;
        loop {
            let bad = violated_sides(d, walker.cell, &x, params.face_tol);
            let Some(&side) = bad.first() else { break };
            chain += 1;
            if chain > 16 {
                return Err(Error::Invalid(format!(
                    "stuck crossing faces at t={t}, point ({}, {}, {})",
                    x[0], x[1], x[2]
                )));
            }
            match walker.cross(side, t, x)? {
                Ok((out, entry)) => {
                    x = out;
                    pending_entry = Some(entry);
                }
                Err(stop) => return Ok(finish(walker, stop)),
            }
        }

        if t >= t_done {
            return Ok(finish(walker, StopReason::Completed));
        }
        if let Some(entry) = pending_entry.take() {
            if let Err(stop) = sliding(t, entry, &x) {
                return Ok(finish(walker, stop));
            }
        }
        dt = dt.min(t_end - t);
        steps += 1;
        if steps > params.max_steps {
            return Ok(finish(walker, StopReason::BudgetExceeded { t, steps: params.max_steps }));
        }

        let (x_new, err) = match rk_step(&field, &x, dt) {
            Ok(pair) => pair,
            Err(e) => {
                dt *= 0.5;
                if dt < 1e-13 * t_end.max(1.0) {
                    return Ok(finish(walker, StopReason::PoleHit { t, message: e.to_string() }));
                }
                continue;
            }
        };
        let en = error_norm(&err, &x, &x_new, params);
        let fac = if en > 0.0 { 0.9 * en.powf(-0.2) } else { 5.0 };
        if en > 1.0 {
            dt *= fac.clamp(0.2, 0.9);
            continue;
        }

        let crossed = !violated_sides(d, walker.cell, &x_new, params.face_tol).is_empty();
        if !crossed {
            t += dt;
            x = x_new;
            walker.push_sample(t, x);
            dt *= fac.clamp(0.2, 5.0);
            let v = field(&x)?;
            if speed(&v) < params.equilibrium_tol {
                return Ok(finish(walker, StopReason::Equilibrium { t, speed: speed(&v) }));
            }
            continue;
        }

        // bisect the sub-step length to land just past the earliest face;
        // each probe is a full embedded step and is charged to the budget
        let mut lo = 0.0;
        let mut hi = dt;
        let mut x_hi = x_new;
        for _ in 0..100 {
            let done = violated_sides(d, walker.cell, &x_hi, params.face_tol)
                .iter()
                .map(|&s| d.side_value(s, xyz(&x_hi)))
                .fold(f64::NEG_INFINITY, f64::max)
                <= 2.0 * params.face_tol;
            if done || (hi - lo) <= f64::EPSILON * dt {
                break;
            }
            steps += 1;
            if steps > params.max_steps {
                return Ok(finish(walker, StopReason::BudgetExceeded { t, steps: params.max_steps }));
            }
            let mid = 0.5 * (lo + hi);
            match rk_step(&field, &x, mid) {
                Ok((xm, _)) => {
                    if violated_sides(d, walker.cell, &xm, params.face_tol).is_empty() {
                        lo = mid;
                    } else {
                        hi = mid;
                        x_hi = xm;
                    }
                }
                Err(_) => hi = mid,
            }
        }
        let tc = t + hi;
        let bad = violated_sides(d, walker.cell, &x_hi, params.face_tol);
        let side = *bad.first().expect("bisection preserves a violated side");
        t = tc;
        match walker.cross(side, tc, x_hi)? {
            Ok((out, entry)) => {
                x = out;
                pending_entry = Some(entry);
            }
            Err(stop) => return Ok(finish(walker, stop)),
        }
    }
}

/// Worst relative mismatch, over all crossing events, between the pairing
/// differential applied to the incoming field vector and the field at the
/// outgoing point. Near zero exactly when the field descends to the glued
/// manifold.
pub fn continuity_residual<F>(traj: &Trajectory, field: F) -> Result<f64>
where
    F: Fn(&State) -> Result<State>,
{
    if traj.events.is_empty() {
        return Err(Error::Invalid("trajectory has no crossing events".into()));
    }
    let mut worst: f64 = 0.0;
    for ev in &traj.events {
        let v_in = field(&ev.incoming)?;
        let v_out = field(&ev.outgoing)?;
        let pushed = ev.map.differential(xyz(&ev.incoming), xyz(&v_in))?;
        let mut num = 0.0;
        for dim in 0..3 {
            num += (pushed[dim] - v_out[dim]).powi(2);
        }
        num += (v_in[3] - v_out[3]).powi(2);
        worst = worst.max(num.sqrt() / (1.0 + speed(&v_out)));
    }
    Ok(worst)
}
