//! Brute-force reference computations for the noisy-label EM model.
//!
//! Everything here works on plain slices and enumerates the full label space
//! where the production code relies on factorization. Nothing in this crate
//! calls into `nem`; the two code paths must stay independent so that one can
//! check the other.

/// Largest relation count enumerated by default.
pub const DEFAULT_MAX_RELATIONS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationBudget {
    pub max_relations: usize,
}

impl Default for EnumerationBudget {
    fn default() -> Self {
        EnumerationBudget {
            max_relations: DEFAULT_MAX_RELATIONS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OracleError {
    BudgetExceeded { relations: usize, max: usize },
    LengthMismatch,
    NonFinite { coordinate: usize },
    BadStep,
}

impl std::fmt::Display for OracleError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OracleError::BudgetExceeded { relations, max } => {
                write!(f, "{relations} relations exceeds enumeration budget of {max}")
            }
            OracleError::LengthMismatch => write!(f, "input lengths disagree"),
            OracleError::NonFinite { coordinate } => {
                write!(f, "non-finite loss while perturbing coordinate {coordinate}")
            }
            OracleError::BadStep => write!(f, "finite-difference step must be positive"),
        }
    }
}

impl std::error::Error for OracleError {}

/// A noise channel in the raw `(phi0, phi1)` form.
#[derive(Debug, Clone)]
pub struct RawChannel<'a> {
    /// P(z=1 | y=0) per relation.
    pub phi0: &'a [f64],
    /// P(z=0 | y=1) per relation.
    pub phi1: &'a [f64],
}

fn check(
    ch: &RawChannel<'_>,
    prior: &[f64],
    z: &[bool],
    budget: EnumerationBudget,
) -> Result<usize, OracleError> {
    let n = prior.len();
    if ch.phi0.len() != n || ch.phi1.len() != n || z.len() != n {
        return Err(OracleError::LengthMismatch);
    }
    if n > budget.max_relations {
        return Err(OracleError::BudgetExceeded {
            relations: n,
            max: budget.max_relations,
        });
    }
    Ok(n)
}

/// Bit `r` of the enumeration index `mask`.
pub fn bit(mask: usize, r: usize) -> bool {
    (mask >> r) & 1 == 1
}

/// Joint p(y, z | x) for one full label vector `y` encoded as a bitmask.
fn joint(ch: &RawChannel<'_>, prior: &[f64], z: &[bool], mask: usize) -> f64 {
    let mut p = 1.0;
    for r in 0..prior.len() {
        let y = bit(mask, r);
        let py = if y { prior[r] } else { 1.0 - prior[r] };
        let pz = match (y, z[r]) {
            (false, true) => ch.phi0[r],
            (false, false) => 1.0 - ch.phi0[r],
            (true, false) => ch.phi1[r],
            (true, true) => 1.0 - ch.phi1[r],
        };
        p *= py * pz;
    }
    p
}

/// p(z | x) = sum over all 2^R label vectors y of p(y | x) p(z | y).
pub fn exact_marginal(
    ch: &RawChannel<'_>,
    prior: &[f64],
    z: &[bool],
    budget: EnumerationBudget,
) -> Result<f64, OracleError> {
    let n = check(ch, prior, z, budget)?;
    Ok((0..1usize << n).map(|m| joint(ch, prior, z, m)).sum())
}

/// p(y | x, z) for every y, indexed by bitmask (bit r = y[r]).
pub fn exact_posterior(
    ch: &RawChannel<'_>,
    prior: &[f64],
    z: &[bool],
    budget: EnumerationBudget,
) -> Result<Vec<f64>, OracleError> {
    let n = check(ch, prior, z, budget)?;
    let mut post: Vec<f64> = (0..1usize << n).map(|m| joint(ch, prior, z, m)).collect();
    let total: f64 = post.iter().sum();
    for p in &mut post {
        *p /= total;
    }
    Ok(post)
}

/// Per-relation marginals P(y[r]=1 | x, z) of a joint posterior over bitmasks.
pub fn posterior_marginals(joint_post: &[f64], relations: usize) -> Vec<f64> {
    let mut out = vec![0.0; relations];
    for (m, &p) in joint_post.iter().enumerate() {
        for (r, o) in out.iter_mut().enumerate() {
            if bit(m, r) {
                *o += p;
            }
        }
    }
    out
}

/// Variational bound evaluated by enumerating every label vector under a
/// fully factorized Q.
pub fn enumerated_bound(
    ch: &RawChannel<'_>,
    prior: &[f64],
    z: &[bool],
    q: &[f64],
    budget: EnumerationBudget,
) -> Result<f64, OracleError> {
    let n = check(ch, prior, z, budget)?;
    if q.len() != n {
        return Err(OracleError::LengthMismatch);
    }
    let mut total = 0.0;
    for m in 0..1usize << n {
        let mut qm = 1.0;
        for (r, &qr) in q.iter().enumerate() {
            qm *= if bit(m, r) { qr } else { 1.0 - qr };
        }
        if qm > 0.0 {
            total += qm * (joint(ch, prior, z, m).ln() - qm.ln());
        }
    }
    Ok(total)
}

/// Central-difference gradient of `loss` at `params`.
///
/// `coords` selects the coordinates to perturb; `None` means all of them.
/// The parameters are restored before returning.
pub fn fd_gradient<F>(
    mut loss: F,
    params: &mut [f64],
    step: f64,
    coords: Option<&[usize]>,
) -> Result<Vec<(usize, f64)>, OracleError>
where
    F: FnMut(&[f64]) -> f64,
{
    if !(step > 0.0) {
        return Err(OracleError::BadStep);
    }
    let all: Vec<usize>;
    let coords = match coords {
        Some(c) => c,
        None => {
            all = (0..params.len()).collect();
            &all
        }
    };
    let mut out = Vec::with_capacity(coords.len());
    for &i in coords {
        let orig = params[i];
        params[i] = orig + step;
        let up = loss(params);
        params[i] = orig - step;
        let down = loss(params);
        params[i] = orig;
        if !up.is_finite() || !down.is_finite() {
            return Err(OracleError::NonFinite { coordinate: i });
        }
        out.push((i, (up - down) / (2.0 * step)));
    }
    Ok(out)
}
