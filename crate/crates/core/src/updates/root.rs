//! Bracketed secant iteration with bisection fallback.

/// Scalar root problem on a bracket.
#[derive(Debug, Clone, Copy)]
pub struct RootProblem<G> {
    pub g: G,
    pub lo: f64,
    pub hi: f64,
    /// Stop once the bracket is narrower than this.
    pub tol_s: f64,
    /// Stop once `|g(s)|` is at most this.
    pub tol_g: f64,
    pub max_iter: u32,
}

impl<G: FnMut(f64) -> f64> RootProblem<G> {
    /// Unit bracket with `tol_s = 1e-12` and 50 iterations.
    pub fn unit(g: G, tol_g: f64) -> Self {
        RootProblem { g, lo: 0.0, hi: 1.0, tol_s: 1e-12, tol_g, max_iter: 50 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RootOutcome {
    Root(f64),
    /// Iteration budget ran out; carries the bracket midpoint.
    Exhausted(f64),
    /// `g` does not change sign on the bracket, or returned a non-finite value.
    NoRoot,
}

impl RootOutcome {
    pub fn value(self) -> Option<f64> {
        match self {
            RootOutcome::Root(s) | RootOutcome::Exhausted(s) => Some(s),
            RootOutcome::NoRoot => None,
        }
    }
}

pub fn hybrid_root<G: FnMut(f64) -> f64>(mut p: RootProblem<G>) -> RootOutcome {
    let glo = (p.g)(p.lo);
    let ghi = (p.g)(p.hi);
    hybrid_root_bracketed(&mut p.g, (p.lo, glo), (p.hi, ghi), p.tol_s, p.tol_g, p.max_iter)
}

/// Same as [`hybrid_root`] with `g` already evaluated at both ends.
pub(crate) fn hybrid_root_bracketed<G: FnMut(f64) -> f64>(
    g: &mut G,
    (mut a, mut ga): (f64, f64),
    (mut b, mut gb): (f64, f64),
    tol_s: f64,
    tol_g: f64,
    max_iter: u32,
) -> RootOutcome {
    if !(ga.is_finite() && gb.is_finite()) {
        return RootOutcome::NoRoot;
    }
    if ga == 0.0 {
        return RootOutcome::Root(a);
    }
    if gb == 0.0 {
        return RootOutcome::Root(b);
    }
    if ga.signum() == gb.signum() {
        return RootOutcome::NoRoot;
    }

    // Secant runs on the two latest iterates; the bracket [a, b] is kept
    // separately and always contains a sign change.
    let (mut xp, mut gp) = (a, ga);
    let (mut xc, mut gc) = (b, gb);
    let mut widths = [b - a, b - a];
    let mut force_bisect = false;

    for _ in 0..max_iter {
        if b - a <= tol_s {
            return RootOutcome::Root(if ga.abs() <= gb.abs() { a } else { b });
        }
        let mut x = if gc != gp { xc - gc * (xc - xp) / (gc - gp) } else { f64::NAN };
        if force_bisect || !(x > a && x < b) {
            x = 0.5 * (a + b);
        }
        let gx = g(x);
        if !gx.is_finite() {
            return RootOutcome::NoRoot;
        }
        if gx.abs() <= tol_g {
            return RootOutcome::Root(x);
        }
        if gx.signum() == ga.signum() {
            a = x;
            ga = gx;
        } else {
            b = x;
            gb = gx;
        }
        xp = xc;
        gp = gc;
        xc = x;
        gc = gx;
        // Stalled if the bracket did not halve over the last two steps.
        let w = b - a;
        force_bisect = w > 0.5 * widths[0];
        widths = [widths[1], w];
    }
    RootOutcome::Exhausted(0.5 * (a + b))
}
