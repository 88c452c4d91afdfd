use std::cell::RefCell;

use ode_solvers::{Dop853, OutputType, SVector, System};

use super::{ModeState, SolverOptions, Trajectory};
use crate::coeffs::{Coefficient, CoefficientProfile};
use crate::linalg::C64;
use crate::{Error, Result};

type State = SVector<f64, 5>;

const MAX_STEPS: u32 = 200_000_000;

// û'' = -λ² b²(t) û for the state [Re û, Im û, Re û', Im û', t]. Time is
// carried as a component: the stage times of the Dop853 implementation are
// inaccurate for non-autonomous systems.
struct ModeSystem<'a> {
    b: &'a dyn Coefficient,
    lambda_sq: f64,
    failure: &'a RefCell<Option<Error>>,
}

impl System<f64, State> for ModeSystem<'_> {
    fn system(&self, _t: f64, y: &State, dy: &mut State) {
        let b2 = match self.b.b_squared(y[4]) {
            Ok(v) => v,
            Err(e) => {
                self.failure.borrow_mut().get_or_insert(e);
                0.0
            }
        };
        let k = -self.lambda_sq * b2;
        dy[0] = y[2];
        dy[1] = y[3];
        dy[2] = k * y[0];
        dy[3] = k * y[1];
        dy[4] = 1.0;
    }

    fn solout(&mut self, _t: f64, _y: &State, _dy: &State) -> bool {
        self.failure.borrow().is_some()
    }
}

/// Solves `û'' + λ² b²(t) û = 0` from `init.t` to `t1` (either direction)
/// with an adaptive Dormand–Prince 8(5,3) method, recording every accepted
/// step.
pub fn integrate_mode(
    profile: &CoefficientProfile,
    lambda: f64,
    t1: f64,
    init: &ModeState,
    opts: &SolverOptions,
) -> Result<Trajectory> {
    integrate_coefficient(profile.coefficient(), profile.c2(), lambda, t1, init, opts)
}

/// As [`integrate_mode`], for a bare coefficient with upper bound `c2`.
pub fn integrate_coefficient(
    b: &dyn Coefficient,
    c2: f64,
    lambda: f64,
    t1: f64,
    init: &ModeState,
    opts: &SolverOptions,
) -> Result<Trajectory> {
    let mut states = vec![*init];
    drive(b, c2, lambda, init, t1, opts, &mut |s| states.push(s))?;
    Ok(Trajectory { lambda, states })
}

/// Final state only.
pub fn propagate(
    b: &dyn Coefficient,
    c2: f64,
    lambda: f64,
    init: &ModeState,
    t1: f64,
    opts: &SolverOptions,
) -> Result<ModeState> {
    drive(b, c2, lambda, init, t1, opts, &mut |_| {})
}

/// States at the given times, which must be ordered in the direction of
/// integration starting from `init.t`.
pub fn sample_states(
    b: &dyn Coefficient,
    c2: f64,
    lambda: f64,
    init: &ModeState,
    times: &[f64],
    opts: &SolverOptions,
) -> Result<Vec<ModeState>> {
    let mut out = Vec::with_capacity(times.len());
    let mut state = *init;
    for &t in times {
        state = propagate(b, c2, lambda, &state, t, opts)?;
        out.push(state);
    }
    Ok(out)
}

// Integrates piecewise, breaking at the ends of refined intervals so that the
// step control never straddles a localized feature of `b`.
fn drive(
    b: &dyn Coefficient,
    c2: f64,
    lambda: f64,
    init: &ModeState,
    t1: f64,
    opts: &SolverOptions,
    sink: &mut dyn FnMut(ModeState),
) -> Result<ModeState> {
    opts.validate()?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::OutOfRange { what: "lambda", value: lambda, range: "(0, inf)".into() });
    }
    if !(c2 > 0.0 && c2.is_finite()) {
        return Err(Error::OutOfRange { what: "C2", value: c2, range: "(0, inf)".into() });
    }
    let t0 = init.t;
    let (lo, hi) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
    let mut breaks: Vec<f64> = b
        .refined_intervals()
        .iter()
        .flat_map(|r| [r.start, r.end])
        .filter(|&x| x > lo && x < hi)
        .collect();
    breaks.sort_by(f64::total_cmp);
    if t1 < t0 {
        breaks.reverse();
    }
    breaks.push(t1);

    let mut state = *init;
    state.lambda = lambda;
    for target in breaks {
        if target == state.t {
            continue;
        }
        state = segment(b, c2, lambda, &state, target, opts, sink)?;
    }
    Ok(state)
}

fn segment(
    b: &dyn Coefficient,
    c2: f64,
    lambda: f64,
    init: &ModeState,
    t1: f64,
    opts: &SolverOptions,
    sink: &mut dyn FnMut(ModeState),
) -> Result<ModeState> {
    let span = t1 - init.t;
    let h0 = (0.1 / (lambda * c2)).min(span.abs()) * span.signum();
    let failure = RefCell::new(None);
    let system = ModeSystem { b, lambda_sq: lambda * lambda, failure: &failure };
    let y0 = State::from([init.u.re, init.u.im, init.ut.re, init.ut.im, init.t]);
    let mut solver = Dop853::from_param(
        system,
        init.t,
        t1,
        0.0,
        y0,
        opts.rel_tol,
        opts.abs_tol,
        0.9,
        0.0,
        0.333,
        6.0,
        span.abs(),
        h0,
        MAX_STEPS,
        u32::MAX,
        OutputType::Sparse,
    );
    let outcome = solver.integrate();
    let (ts, ys) = solver.results().get();
    let last_t = ts.last().copied().unwrap_or(init.t);
    if let Some(e) = failure.borrow_mut().take() {
        return Err(e);
    }
    outcome.map_err(|e| Error::Integration { t: last_t, reason: e.to_string() })?;
    let mut last = *init;
    for (t, y) in ts.iter().zip(ys).skip(1) {
        let s = ModeState { t: *t, u: C64::new(y[0], y[1]), ut: C64::new(y[2], y[3]), lambda };
        if !s.is_finite() {
            return Err(Error::Integration { t: *t, reason: "state is not finite".into() });
        }
        sink(s);
        last = s;
    }
    if (last.t - t1).abs() > 1e-12 * t1.abs().max(span.abs()) {
        return Err(Error::Integration { t: last.t, reason: format!("stopped before reaching {t1}") });
    }
    last.t = t1;
    Ok(last)
}
