//! A common stepping interface over SARDONICS and the baseline kernels, so
//! comparisons can drive every sampler the same way.

use rand::RngCore;

use crate::model::SpinState;
use crate::saw::{KernelError, ParamSource, SardonicsSampler, StepRecord, TraceSink};

pub trait Sampler {
    /// One transition. Kernels without a rejection step report `accepted = true`.
    fn step(&mut self, rng: &mut dyn RngCore) -> StepOutput;
    fn state(&self) -> &SpinState;
    fn energy(&self) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepOutput {
    pub accepted: bool,
    pub walk_length: usize,
}

/// SARDONICS with its parameter source.
pub struct SardonicsChain<'m, S: ParamSource + ?Sized> {
    inner: SardonicsSampler<'m>,
    source: &'m S,
}

impl<'m, S: ParamSource + ?Sized> SardonicsChain<'m, S> {
    pub fn new(
        model: &'m crate::model::IsingModel,
        initial: SpinState,
        source: &'m S,
    ) -> Result<Self, KernelError> {
        source.validate(model.num_spins())?;
        Ok(SardonicsChain {
            inner: SardonicsSampler::new(model, initial)?,
            source,
        })
    }
}

impl<S: ParamSource + ?Sized> Sampler for SardonicsChain<'_, S> {
    fn step(&mut self, rng: &mut dyn RngCore) -> StepOutput {
        let params = self.source.draw(rng);
        let out = self.inner.step(params, rng);
        StepOutput {
            accepted: out.accepted,
            walk_length: out.walk_length,
        }
    }

    fn state(&self) -> &SpinState {
        self.inner.state()
    }

    fn energy(&self) -> f64 {
        self.inner.energy()
    }
}

/// Runs `steps` transitions, recording the energy after each.
pub fn run_sampler(
    sampler: &mut dyn Sampler,
    steps: usize,
    rng: &mut dyn RngCore,
    sink: &mut dyn TraceSink,
) -> std::io::Result<()> {
    for step in 1..=steps {
        let out = sampler.step(rng);
        sink.record(&StepRecord {
            step,
            energy: sampler.energy(),
            accepted: out.accepted,
            walk_length: out.walk_length,
        })?;
    }
    Ok(())
}
