//! Plain gradient descent directly on a per-instance logit grid. No momentum
//! or weight decay: the point is to watch what the loss landscape alone does
//! to the mask, with the composite objective and its warmup schedule applied
//! step by step.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{enumerate_edges, qualify_color_edges, qualify_depth_edges, NeighborhoodSpec};
use crate::grid::{Grid, LogitGrid, ProbMask};
use crate::objective::{total_loss_and_gradient, InstanceInputs, LossTerms, ObjectiveConfig};
use crate::projection::BoxProjections;
use crate::scene::{binarize, evaluate, Metrics, Scene};

/// Mask binarization threshold stamped into every recorded metric.
pub const BINARIZE_THRESHOLD: f64 = 0.5;

/// Gradient-descent run parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Number of descent steps.
    pub steps: usize,
    /// Step size in logit units per unit gradient.
    pub step_size: f64,
    /// Half-width of the uniform logit initialization noise. Breaks
    /// projection-max ties; zero starts from an exactly uncommitted mask.
    pub init_noise: f64,
    pub seed: u64,
    /// Record a trace row every this many steps (the final state is always
    /// recorded).
    pub record_every: usize,
    /// Keep mask snapshots in the trace records.
    #[serde(default)]
    pub record_masks: bool,
    pub objective: ObjectiveConfig,
    #[serde(default)]
    pub neighborhood: NeighborhoodSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            steps: 500,
            step_size: 20.0,
            init_noise: 1e-3,
            seed: 0,
            record_every: 50,
            record_masks: false,
            objective: ObjectiveConfig::default(),
            neighborhood: NeighborhoodSpec::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0) || !self.step_size.is_finite() {
            return Err(Error::InvalidConfig("step_size must be > 0".into()));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidConfig("record_every must be >= 1".into()));
        }
        if self.init_noise < 0.0 {
            return Err(Error::InvalidConfig("init_noise must be >= 0".into()));
        }
        self.objective.validate()
    }
}

/// One recorded state of a run.
#[derive(Clone, Debug)]
pub struct TraceRecord {
    pub step: usize,
    pub terms: LossTerms,
    pub metrics: Metrics,
    pub mask: Option<ProbMask>,
}

/// Recorded history of one optimization run.
#[derive(Clone, Debug, Default)]
pub struct RunTrace {
    pub records: Vec<TraceRecord>,
}

impl RunTrace {
    pub fn final_record(&self) -> &TraceRecord {
        self.records.last().expect("trace cannot be empty")
    }
}

/// Build the per-instance objective inputs: enumerate the dilated edges once,
/// qualify them for each enabled modality, and take the instance's own box as
/// the supervision target.
pub fn prepare_instance(scene: &Scene, instance: usize, cfg: &RunConfig) -> Result<InstanceInputs> {
    let inst = scene
        .instances
        .get(instance)
        .ok_or_else(|| Error::InvalidConfig(format!("no instance {instance} in scene")))?;
    let boxes = [inst.bbox];
    let edges = enumerate_edges(scene.height(), scene.width(), cfg.neighborhood);
    let color_edges = if cfg.objective.enable_color {
        Some(qualify_color_edges(
            &edges,
            &scene.lab,
            cfg.objective.color.tau,
            &boxes,
        ))
    } else {
        None
    };
    let depth_edges = if cfg.objective.enable_depth {
        Some(qualify_depth_edges(
            &edges,
            &scene.depth,
            cfg.objective.depth.tau,
            &boxes,
        ))
    } else {
        None
    };
    Ok(InstanceInputs {
        color_edges,
        depth_edges,
        projections: BoxProjections::from_boxes(scene.height(), scene.width(), &boxes),
    })
}

fn init_logits(height: usize, width: usize, cfg: &RunConfig) -> LogitGrid {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let data = (0..height * width)
        .map(|_| {
            if cfg.init_noise > 0.0 {
                rng.gen_range(-cfg.init_noise..=cfg.init_noise)
            } else {
                0.0
            }
        })
        .collect();
    LogitGrid(Grid::from_vec(height, width, data))
}

/// Optimize one instance's logit grid under the composite objective.
/// Deterministic for a fixed seed; aborts if the loss turns non-finite.
pub fn optimize_instance(
    scene: &Scene,
    instance: usize,
    cfg: &RunConfig,
) -> Result<(LogitGrid, RunTrace)> {
    cfg.validate()?;
    let inputs = prepare_instance(scene, instance, cfg)?;
    let inst = &scene.instances[instance];
    let mut logits = init_logits(scene.height(), scene.width(), cfg);
    let mut trace = RunTrace::default();

    let record = |logits: &LogitGrid, step: usize, terms: LossTerms, trace: &mut RunTrace| {
        let mask = logits.probabilities();
        let metrics = evaluate(&binarize(&mask, BINARIZE_THRESHOLD), inst);
        trace.records.push(TraceRecord {
            step,
            terms,
            metrics,
            mask: cfg.record_masks.then_some(mask),
        });
    };

    for step in 0..cfg.steps {
        let (terms, grad) = total_loss_and_gradient(&logits, &inputs, &cfg.objective, step)?;
        if !terms.total.is_finite() {
            return Err(Error::NonFiniteLoss { step });
        }
        if step % cfg.record_every == 0 {
            record(&logits, step, terms, &mut trace);
        }
        for i in 0..logits.0.len() {
            logits.0.data_mut()[i] -= cfg.step_size * grad.data()[i];
        }
    }

    // Final state, evaluated after the last update.
    let (terms, _) = total_loss_and_gradient(&logits, &inputs, &cfg.objective, cfg.steps)?;
    if !terms.total.is_finite() {
        return Err(Error::NonFiniteLoss { step: cfg.steps });
    }
    record(&logits, cfg.steps, terms, &mut trace);

    Ok((logits, trace))
}

/// Which affinity modality a sweep varies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Color,
    Depth,
}

impl std::fmt::Display for Modality {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Modality::Color => write!(f, "color"),
            Modality::Depth => write!(f, "depth"),
        }
    }
}

/// Mean final IoU per (δ, γ) cell.
#[derive(Clone, Debug)]
pub struct SweepTable {
    pub modality: Modality,
    pub deltas: Vec<f64>,
    pub gammas: Vec<f64>,
    /// mean_iou[gi][di] for gamma index gi and delta index di.
    pub mean_iou: Vec<Vec<f64>>,
}

impl SweepTable {
    pub fn cell(&self, delta: f64, gamma: f64) -> Option<f64> {
        let di = self.deltas.iter().position(|&d| d == delta)?;
        let gi = self.gammas.iter().position(|&g| g == gamma)?;
        Some(self.mean_iou[gi][di])
    }
}

/// Configure one sweep cell: only the swept modality is enabled and its δ/γ
/// are replaced by the cell values.
fn cell_config(base: &RunConfig, modality: Modality, delta: f64, gamma: f64) -> RunConfig {
    let mut cfg = base.clone();
    match modality {
        Modality::Color => {
            cfg.objective.enable_color = true;
            cfg.objective.enable_depth = false;
            cfg.objective.symmetric_mode_color = false;
            cfg.objective.color.delta = delta;
            cfg.objective.color.gamma = gamma;
        }
        Modality::Depth => {
            cfg.objective.enable_depth = true;
            cfg.objective.enable_color = false;
            cfg.objective.symmetric_mode_depth = false;
            cfg.objective.depth.delta = delta;
            cfg.objective.depth.gamma = gamma;
        }
    }
    cfg
}

/// Run the δ×γ grid over all instances of all scenes, averaging final IoU.
pub fn sweep(
    scenes: &[Scene],
    deltas: &[f64],
    gammas: &[f64],
    modality: Modality,
    base: &RunConfig,
) -> Result<SweepTable> {
    for &g in gammas {
        if g >= std::f64::consts::E {
            return Err(Error::InvalidConfig(format!(
                "sweep gamma {g} is outside [0, e)"
            )));
        }
    }
    let mut mean_iou = vec![vec![0.0; deltas.len()]; gammas.len()];
    for (gi, &gamma) in gammas.iter().enumerate() {
        for (di, &delta) in deltas.iter().enumerate() {
            let cfg = cell_config(base, modality, delta, gamma);
            let mut sum = 0.0;
            let mut runs = 0usize;
            for scene in scenes {
                for instance in 0..scene.instances.len() {
                    let (_, trace) = optimize_instance(scene, instance, &cfg)?;
                    sum += trace.final_record().metrics.iou_gt;
                    runs += 1;
                }
            }
            if runs == 0 {
                return Err(Error::InvalidConfig("sweep needs at least one scene".into()));
            }
            mean_iou[gi][di] = sum / runs as f64;
        }
    }
    Ok(SweepTable {
        modality,
        deltas: deltas.to_vec(),
        gammas: gammas.to_vec(),
        mean_iou,
    })
}
