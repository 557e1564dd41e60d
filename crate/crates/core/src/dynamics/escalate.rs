//! Fock-cutoff convergence loop.

use super::{DynamicsError, SolverConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct Escalation<T> {
    /// Result at the chosen cutoff.
    pub value: T,
    pub cutoff: usize,
    pub fidelity: f64,
    /// `(cutoff, fidelity)` for every run, in order.
    pub history: Vec<(usize, f64)>,
}

/// Runs `run(cutoff)` from `cfg.fock_cutoff` upwards in steps of
/// `cfg.cutoff_escalation.step` until two consecutive fidelities differ by
/// less than the threshold, and returns the lower of the two. With
/// escalation disabled the initial cutoff is used as is.
pub fn escalate_cutoff<T, E, F>(cfg: &SolverConfig, mut run: F) -> Result<Escalation<T>, E>
where
    E: From<DynamicsError>,
    F: FnMut(usize) -> Result<(f64, T), E>,
{
    let esc = cfg.cutoff_escalation;
    let mut cutoff = cfg.fock_cutoff;
    let (mut fidelity, mut value) = run(cutoff)?;
    let mut history = vec![(cutoff, fidelity)];
    if !esc.enabled {
        return Ok(Escalation { value, cutoff, fidelity, history });
    }
    loop {
        let next = cutoff + esc.step;
        if next > esc.max_cutoff {
            let delta = history.windows(2).last().map_or(f64::NAN, |w| (w[1].1 - w[0].1).abs());
            return Err(DynamicsError::CutoffNotConverged { max: esc.max_cutoff, delta }.into());
        }
        let (f_next, v_next) = run(next)?;
        history.push((next, f_next));
        if (f_next - fidelity).abs() < esc.fidelity_delta_threshold {
            return Ok(Escalation { value, cutoff, fidelity, history });
        }
        cutoff = next;
        fidelity = f_next;
        value = v_next;
    }
}
