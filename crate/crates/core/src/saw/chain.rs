use rand::{Rng, RngCore};

use super::{KernelError, KernelParams, SardonicsSampler};
use crate::model::{IsingModel, SpinState};

/// Supplies the kernel parameters for each transition. A fixed parameter set
/// always returns itself; a learned policy draws one of its candidates.
pub trait ParamSource {
    fn draw(&self, rng: &mut dyn RngCore) -> &KernelParams;

    /// Checks every parameter set the source can return.
    fn validate(&self, num_spins: usize) -> Result<(), KernelError>;
}

impl ParamSource for KernelParams {
    fn draw(&self, _rng: &mut dyn RngCore) -> &KernelParams {
        self
    }

    fn validate(&self, num_spins: usize) -> Result<(), KernelError> {
        KernelParams::validate(self, num_spins)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    /// 1-based transition count.
    pub step: usize,
    /// Energy after the transition.
    pub energy: f64,
    pub accepted: bool,
    /// Total flips proposed (zero for samplers without walks).
    pub walk_length: usize,
}

pub trait TraceSink {
    fn record(&mut self, rec: &StepRecord) -> std::io::Result<()>;
}

impl TraceSink for Vec<StepRecord> {
    fn record(&mut self, rec: &StepRecord) -> std::io::Result<()> {
        self.push(*rec);
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainSummary {
    pub steps: usize,
    pub acceptance_rate: f64,
    pub final_state: SpinState,
}

/// Runs `steps` SARDONICS transitions from `initial`, streaming one record
/// per step into `sink`.
pub fn run_chain<R: Rng + ?Sized>(
    model: &IsingModel,
    initial: SpinState,
    source: &dyn ParamSource,
    steps: usize,
    rng: &mut R,
    sink: &mut dyn TraceSink,
) -> Result<ChainSummary, KernelError> {
    source.validate(model.num_spins())?;
    let mut sampler = SardonicsSampler::new(model, initial)?;
    let mut accepted = 0usize;
    for step in 1..=steps {
        let params = source.draw(&mut RngAdapter(rng));
        let out = sampler.step(params, rng);
        accepted += usize::from(out.accepted);
        sink.record(&StepRecord {
            step,
            energy: sampler.energy(),
            accepted: out.accepted,
            walk_length: out.walk_length,
        })?;
    }
    Ok(ChainSummary {
        steps,
        acceptance_rate: if steps == 0 { 0.0 } else { accepted as f64 / steps as f64 },
        final_state: sampler.state().clone(),
    })
}

/// Lets a possibly unsized generic RNG be passed as `&mut dyn RngCore`.
struct RngAdapter<'a, R: ?Sized>(&'a mut R);

impl<R: RngCore + ?Sized> RngCore for RngAdapter<'_, R> {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}
