//! Channel reconstruction from master-equation runs.

use rayon::prelude::*;

use crate::algebra::{coherent_state, dagger, identity, kron, outer, Matrix, Subsystem, C64, ONE};
use crate::dynamics::{
    build_model, escalate_cutoff, propagate_operator, Diagnostics, DynamicsError, LindbladModel, ModelKind,
    SolverConfig,
};
use crate::model::{GateSchedule, SystemParams};

use super::{
    apply_z_corrections, average_gate_fidelity, ptm_from_matrix_units, ChannelMetadata, FidelityReport, GateChannel,
    Result,
};

#[derive(Debug, Clone)]
pub struct Tomography {
    pub channel: GateChannel,
    /// Merged diagnostics of the ten propagations.
    pub diagnostics: Diagnostics,
}

/// Initial state of every oscillator factor: `|α₀⟩⟨α₀|` each.
fn oscillator_state(model: &LindbladModel, alpha0: C64) -> Result<Matrix> {
    let mut rho = identity(1);
    for f in model.space().factors().iter().skip(2) {
        let Subsystem::Oscillator { dim: cutoff } = *f else {
            return Err(DynamicsError::Unsupported("qubits must precede oscillators".into()).into());
        };
        let psi = coherent_state(cutoff, alpha0).map_err(DynamicsError::from)?;
        rho = kron(&rho, &outer(&psi, &psi));
    }
    Ok(rho)
}

/// Propagates `|i⟩⟨j| ⊗ ρ_osc` for `i ≤ j`, reduces to the qubits at the final
/// time and fills `j > i` by adjoints (the generator preserves hermiticity).
pub fn channel_tomography(
    model: &LindbladModel,
    cfg: &SolverConfig,
    alpha0: C64,
    schedule: Option<&GateSchedule>,
) -> Result<Tomography> {
    cfg.validate()?;
    let rho_osc = oscillator_state(model, alpha0)?;
    let pairs: Vec<(usize, usize)> = (0..4).flat_map(|i| (i..4).map(move |j| (i, j))).collect();
    let results: Vec<Result<(Matrix, Diagnostics)>> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let mut unit = Matrix::zeros((4, 4));
            unit[[i, j]] = ONE;
            let x0 = kron(&unit, &rho_osc);
            let (x, diag) = propagate_operator(model, &x0, cfg)?;
            Ok((model.reduce_to_qubits(&x)?, diag))
        })
        .collect();
    let mut images: [[Matrix; 4]; 4] = std::array::from_fn(|_| std::array::from_fn(|_| Matrix::zeros((4, 4))));
    let mut diagnostics = Diagnostics::default();
    for (&(i, j), r) in pairs.iter().zip(results) {
        let (img, diag) = r?;
        diagnostics.max_trace_deviation = diagnostics.max_trace_deviation.max(diag.max_trace_deviation);
        diagnostics.checkpoints += diag.checkpoints;
        diagnostics.block_mode |= diag.block_mode;
        diagnostics.methods.extend(diag.methods);
        diagnostics.rk.merge(&diag.rk);
        if i != j {
            images[j][i] = dagger(&img);
        }
        images[i][j] = img;
    }
    let cutoff = model.space().factors().iter().find_map(|f| match f {
        Subsystem::Oscillator { dim } => Some(*dim),
        _ => None,
    });
    let metadata = ChannelMetadata {
        schedule: schedule.cloned(),
        solver: Some(*cfg),
        cutoff,
        frame: model.frame.label().into(),
        model: model.frame.label().into(),
        corrections_applied: 0,
    };
    let channel = GateChannel::new(ptm_from_matrix_units(&images), metadata)?;
    channel.validate()?;
    Ok(Tomography { channel, diagnostics })
}

#[derive(Debug, Clone)]
pub struct GateEvaluation {
    /// Channel before Z corrections.
    pub raw: GateChannel,
    pub corrected: GateChannel,
    pub report: FidelityReport,
    /// Cutoff at which the fidelity converged.
    pub cutoff: usize,
    pub cutoff_history: Vec<(usize, f64)>,
    pub diagnostics: Diagnostics,
}

/// Builds the model at increasing cutoffs, reconstructs the corrected channel
/// and scores it against `diag(1, 1, 1, e^{iθ'})`.
pub fn evaluate_gate(
    p: &SystemParams,
    schedule: &GateSchedule,
    kind: ModelKind,
    cfg: &SolverConfig,
    alpha0: C64,
) -> Result<GateEvaluation> {
    let target = schedule.target_unitary();
    let esc = escalate_cutoff(cfg, |cutoff| -> Result<_> {
        let model = build_model(p, schedule, kind, cutoff)?;
        let run_cfg = cfg.with_cutoff(cutoff);
        let tomo = channel_tomography(&model, &run_cfg, alpha0, Some(schedule))?;
        let mut raw = tomo.channel;
        raw.metadata.model = kind.label().into();
        let corrected = apply_z_corrections(&raw, schedule);
        let report = average_gate_fidelity(&corrected, &target);
        Ok((report.f_avg, (raw, corrected, report, tomo.diagnostics)))
    })?;
    let (raw, corrected, report, diagnostics) = esc.value;
    Ok(GateEvaluation { raw, corrected, report, cutoff: esc.cutoff, cutoff_history: esc.history, diagnostics })
}
