//! Augmented density tensor and its step-by-step propagation.
//!
//! The tensor holds one amplitude per path segment over a window of the most
//! recent `min(k, Δk_max) + 1` time points (see [`PathIndexer`] for the
//! layout). While the window is shorter than `Δk_max + 1` each step appends a
//! point; afterwards each step appends the newest point and sums out the oldest.
//!
//! Influence factors are applied with interior (or initial) η classes as
//! points enter the window. Terminal classes are applied only at readout, as
//! ratio corrections, so the propagated tensor never depends on the horizon.
//!
//! Every output element is computed by the same arithmetic in the same order
//! whether the work runs serially or on a thread pool, and reductions use a
//! fixed chunking, so results are bit-identical for any thread count.

use std::sync::OnceLock;

use num_complex::Complex64;
use rayon::prelude::*;

use super::indexer::PathIndexer;
use super::influence::{pair_table, self_table};
use super::primary_memory_cost;
use crate::error::{Error, Result};
use crate::eta::EtaTable;
use crate::system::{CMatrix, PropagatorPair, SystemSpec};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Output elements handed to one task (multiplied by M²).
const STEP_CHUNK_ROWS: usize = 1024;
/// Terms per partial sum in readout.
const READOUT_CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// Window still shorter than Δk_max + 1.
    Growing,
    /// Window at full length; each step contracts the oldest point.
    Sliding,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedTensor {
    amplitudes: Vec<Complex64>,
    step: usize,
    window: usize,
    phase: Phase,
}

impl AugmentedTensor {
    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Latest physical time index represented.
    pub fn step(&self) -> usize {
        self.step
    }

    /// Number of time points in the window.
    pub fn window(&self) -> usize {
        self.window
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Parallelism {
    Serial,
    /// Dedicated pool with this many worker threads.
    Threads(usize),
    /// rayon's global pool.
    #[default]
    Auto,
}

/// Full-window factor tables for the sliding phase, addressed by output flat index.
struct SlidingTables {
    propagator: Vec<Complex64>,
    influence: Vec<Complex64>,
}

/// Precomputed factors and the step/readout kernels for one run.
pub struct Engine {
    m: usize,
    d: usize,
    dk_max: usize,
    rho0: Vec<Complex64>,
    /// `prop[new * d + old] = K[new⁺, old⁺] · conj(K[new⁻, old⁻])`
    prop: Vec<Complex64>,
    initial_self: Vec<Complex64>,
    interior_self: Vec<Complex64>,
    offdiag: Vec<Vec<Complex64>>,
    initial_edge: Vec<Vec<Complex64>>,
    terminal_self_corr: Vec<Complex64>,
    terminal_edge_corr: Vec<Vec<Complex64>>,
    terminal_initial_corr: Vec<Vec<Complex64>>,
    sliding: OnceLock<SlidingTables>,
    pool: Option<rayon::ThreadPool>,
    serial: bool,
}

fn capacity_error(m: usize, dk_max: usize, len: usize) -> Error {
    Error::Capacity {
        required_bytes: len as u128 * 16,
        pmc_bytes: primary_memory_cost(m, dk_max).unwrap_or(u128::MAX),
        budget: None,
    }
}

impl Engine {
    pub fn new(
        spec: &SystemSpec,
        eta: &EtaTable,
        propagators: &PropagatorPair,
        dk_max: usize,
        parallelism: Parallelism,
    ) -> Result<Self> {
        spec.validate()?;
        if eta.dk_max < dk_max {
            return Err(Error::validation(
                "eta_lags",
                format!("η table holds {} lags, {dk_max} needed", eta.dk_max),
            ));
        }
        let m = spec.dim();
        let d = m * m;
        if (d as u128)
            .checked_pow(dk_max as u32 + 1)
            .is_none_or(|n| n > usize::MAX as u128 / 16)
        {
            return Err(capacity_error(m, dk_max, usize::MAX / 16));
        }
        let s = &spec.coordinates;
        let k = &propagators.forward;

        let mut prop = Vec::with_capacity(d * d);
        for new in 0..d {
            for old in 0..d {
                prop.push(k[(new / m, old / m)] * k[(new % m, old % m)].conj());
            }
        }
        let rho0 = (0..d).map(|dg| spec.rho0[(dg / m, dg % m)]).collect();
        let lags = 1..=dk_max;

        let pool = match parallelism {
            Parallelism::Threads(n) => Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n.max(1))
                    .build()
                    .map_err(|e| Error::Domain(format!("thread pool: {e}")))?,
            ),
            _ => None,
        };

        Ok(Engine {
            m,
            d,
            dk_max,
            rho0,
            prop,
            initial_self: self_table(eta.initial_self, s),
            interior_self: self_table(eta.interior_self, s),
            offdiag: lags
                .clone()
                .map(|l| pair_table(eta.interior_offdiag[l - 1], s))
                .collect(),
            initial_edge: lags
                .clone()
                .map(|l| pair_table(eta.initial_edge[l - 1], s))
                .collect(),
            terminal_self_corr: self_table(eta.terminal_self - eta.interior_self, s),
            terminal_edge_corr: lags
                .clone()
                .map(|l| pair_table(eta.terminal_edge[l - 1] - eta.interior_offdiag[l - 1], s))
                .collect(),
            terminal_initial_corr: lags
                .map(|l| pair_table(eta.terminal_initial[l - 1] - eta.initial_edge[l - 1], s))
                .collect(),
            sliding: OnceLock::new(),
            pool,
            serial: parallelism == Parallelism::Serial,
        })
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn dk_max(&self) -> usize {
        self.dk_max
    }

    /// Number of amplitudes in a full window, M^{2(Δk_max+1)}.
    pub fn full_len(&self) -> usize {
        self.d.pow(self.dk_max as u32 + 1)
    }

    fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        match &self.pool {
            Some(pool) => pool.install(f),
            None => f(),
        }
    }

    fn alloc(&self, len: usize) -> Result<Vec<Complex64>> {
        let mut v = Vec::new();
        v.try_reserve_exact(len)
            .map_err(|_| capacity_error(self.m, self.dk_max, len))?;
        v.resize(len, ZERO);
        Ok(v)
    }

    fn phase_for(&self, window: usize) -> Phase {
        if window < self.dk_max + 1 {
            Phase::Growing
        } else {
            Phase::Sliding
        }
    }

    /// Tensor at k = 0: ρ(0) with the initial self factor.
    pub fn initial_tensor(&self) -> AugmentedTensor {
        let amplitudes = self
            .rho0
            .iter()
            .zip(&self.initial_self)
            .map(|(r, f)| r * f)
            .collect();
        AugmentedTensor {
            amplitudes,
            step: 0,
            window: 1,
            phase: self.phase_for(1),
        }
    }

    /// Tensor at k = 1: the initial window with the first propagator pair.
    pub fn initialize(&self) -> Result<AugmentedTensor> {
        self.propagate_step(&self.initial_tensor())
    }

    pub fn propagate_step(&self, tensor: &AugmentedTensor) -> Result<AugmentedTensor> {
        let mut out = tensor.clone();
        let mut scratch = Vec::new();
        self.advance(&mut out, &mut scratch)?;
        Ok(out)
    }

    /// Advances `tensor` by one step in place, using `scratch` as the next buffer.
    pub fn advance(
        &self,
        tensor: &mut AugmentedTensor,
        scratch: &mut Vec<Complex64>,
    ) -> Result<()> {
        let d = self.d;
        let window = tensor.window;
        let (new_window, new_len) = if window < self.dk_max + 1 {
            (window + 1, tensor.len() * d)
        } else {
            (window, tensor.len())
        };
        if scratch.len() != new_len {
            if scratch.capacity() < new_len {
                let mut fresh = self.alloc(new_len)?;
                std::mem::swap(scratch, &mut fresh);
            } else {
                scratch.resize(new_len, ZERO);
            }
        }

        if window < self.dk_max + 1 {
            self.grow_into(tensor, scratch);
        } else if self.dk_max == 0 {
            self.markov_into(tensor, scratch);
        } else {
            let tables = self.sliding_tables()?;
            self.slide_into(tensor, scratch, tables);
        }

        std::mem::swap(&mut tensor.amplitudes, scratch);
        tensor.step += 1;
        tensor.window = new_window;
        tensor.phase = self.phase_for(new_window);
        Ok(())
    }

    /// Builds the sliding-phase factor tables now rather than on the first
    /// full-window step. Idempotent.
    pub fn prepare_sliding(&self) -> Result<()> {
        if self.dk_max > 0 {
            self.sliding_tables()?;
        }
        Ok(())
    }

    fn sliding_tables(&self) -> Result<&SlidingTables> {
        if let Some(t) = self.sliding.get() {
            return Ok(t);
        }
        let len = self.full_len();
        let mut propagator = self.alloc(len)?;
        let mut influence = self.alloc(len)?;
        let d = self.d;
        let rest_points = self.dk_max;
        let fill = |(chunk_idx, (pc, ic)): (usize, (&mut [Complex64], &mut [Complex64]))| {
            let base = chunk_idx * STEP_CHUNK_ROWS * d;
            let mut digits = vec![0usize; rest_points];
            for (i, (p, f)) in pc.iter_mut().zip(ic.iter_mut()).enumerate() {
                let o = base + i;
                let new = o % d;
                decode_into(o / d, d, &mut digits);
                *p = self.prop[new * d + digits[rest_points - 1]];
                // position q sits Δk_max − q steps before the new point
                let mut acc = Complex64::new(1.0, 0.0);
                for (q, &dg) in digits.iter().enumerate() {
                    acc *= self.offdiag[rest_points - q - 1][new * d + dg];
                }
                *f = acc * self.interior_self[new];
            }
        };
        let chunk = STEP_CHUNK_ROWS * d;
        self.install(|| {
            if self.serial {
                propagator
                    .chunks_mut(chunk)
                    .zip(influence.chunks_mut(chunk))
                    .enumerate()
                    .for_each(fill);
            } else {
                propagator
                    .par_chunks_mut(chunk)
                    .zip(influence.par_chunks_mut(chunk))
                    .enumerate()
                    .for_each(fill);
            }
        });
        let _ = self.sliding.set(SlidingTables {
            propagator,
            influence,
        });
        Ok(self.sliding.get().expect("tables just set"))
    }

    fn for_each_chunk<F>(&self, out: &mut [Complex64], chunk: usize, f: F)
    where
        F: Fn(usize, &mut [Complex64]) + Sync + Send,
    {
        self.install(|| {
            if self.serial {
                out.chunks_mut(chunk)
                    .enumerate()
                    .for_each(|(i, c)| f(i * chunk, c));
            } else {
                out.par_chunks_mut(chunk)
                    .enumerate()
                    .for_each(|(i, c)| f(i * chunk, c));
            }
        })
    }

    /// Appends a point without contraction. The window always starts at time 0 here.
    fn grow_into(&self, tensor: &AugmentedTensor, out: &mut [Complex64]) {
        let d = self.d;
        let w = tensor.window;
        let new_time = tensor.step + 1;
        let src = &tensor.amplitudes;
        self.for_each_chunk(out, STEP_CHUNK_ROWS * d, |base, chunk| {
            let mut digits = vec![0usize; w];
            for (i, slot) in chunk.iter_mut().enumerate() {
                let o = base + i;
                let (old, new) = (o / d, o % d);
                decode_into(old, d, &mut digits);
                let mut v = src[old] * self.prop[new * d + digits[w - 1]];
                for (p, &dg) in digits.iter().enumerate() {
                    let lag = new_time - p;
                    let table = if p == 0 {
                        &self.initial_edge[lag - 1]
                    } else {
                        &self.offdiag[lag - 1]
                    };
                    v *= table[new * d + dg];
                }
                *slot = v * self.interior_self[new];
            }
        });
    }

    /// Full-window step: sum out the oldest point, then apply the new point's factors.
    fn slide_into(&self, tensor: &AugmentedTensor, out: &mut [Complex64], tables: &SlidingTables) {
        let d = self.d;
        let src = &tensor.amplitudes;
        let stride = src.len() / d;
        self.for_each_chunk(out, STEP_CHUNK_ROWS * d, |base, chunk| {
            // sum out the oldest point block-wise: d sequential reads instead
            // of d power-of-two-strided reads per element
            let r0 = base / d;
            let rows = chunk.len() / d;
            let mut sums = [ZERO; STEP_CHUNK_ROWS];
            for oldest in 0..d {
                let start = oldest * stride + r0;
                for (acc, a) in sums[..rows].iter_mut().zip(&src[start..start + rows]) {
                    *acc += a;
                }
            }
            for (row_i, (row, sum)) in chunk.chunks_mut(d).zip(&sums).enumerate() {
                let o = (r0 + row_i) * d;
                for (new, slot) in row.iter_mut().enumerate() {
                    *slot = sum * tables.propagator[o + new] * tables.influence[o + new];
                }
            }
        });
    }

    /// Δk_max = 0: the window is a single point and the step is a matrix-vector product.
    fn markov_into(&self, tensor: &AugmentedTensor, out: &mut [Complex64]) {
        let d = self.d;
        let src = &tensor.amplitudes;
        for (new, slot) in out.iter_mut().enumerate() {
            let mut sum = ZERO;
            for (old, a) in src.iter().enumerate() {
                sum += self.prop[new * d + old] * a;
            }
            *slot = sum * self.interior_self[new];
        }
    }

    /// ρ(t_k) for k = `tensor.step()`, treating k as the final time. Does not
    /// modify the tensor.
    pub fn readout(&self, tensor: &AugmentedTensor) -> CMatrix {
        let d = self.d;
        let m = self.m;
        let k = tensor.step;
        let w = tensor.window;
        let src = &tensor.amplitudes;
        let rest_len = src.len() / d;
        let first_time = k + 1 - w;

        // correction tables per retained position; none at k = 0
        let corr: Vec<&[Complex64]> = (0..w - 1)
            .map(|q| {
                let time = first_time + q;
                let lag = k - time;
                if time == 0 {
                    self.terminal_initial_corr[lag - 1].as_slice()
                } else {
                    self.terminal_edge_corr[lag - 1].as_slice()
                }
            })
            .collect();

        let chunks_per_elem = rest_len.div_ceil(READOUT_CHUNK);
        let partial = |job: usize| -> Complex64 {
            let (new, c) = (job / chunks_per_elem, job % chunks_per_elem);
            let start = c * READOUT_CHUNK;
            let end = (start + READOUT_CHUNK).min(rest_len);
            let mut digits = vec![0usize; w - 1];
            decode_into(start, d, &mut digits);
            let mut acc = ZERO;
            for rest in start..end {
                let mut v = src[rest * d + new];
                for (table, &dg) in corr.iter().zip(&digits) {
                    v *= table[new * d + dg];
                }
                acc += v;
                increment(&mut digits, d);
            }
            acc
        };

        let jobs = d * chunks_per_elem;
        let partials: Vec<Complex64> = self.install(|| {
            if self.serial {
                (0..jobs).map(partial).collect()
            } else {
                (0..jobs).into_par_iter().map(partial).collect()
            }
        });

        let mut rho = CMatrix::zeros(m, m);
        for new in 0..d {
            let mut total = ZERO;
            for p in &partials[new * chunks_per_elem..(new + 1) * chunks_per_elem] {
                total += p;
            }
            if k > 0 {
                total *= self.terminal_self_corr[new];
            }
            rho[(new / m, new % m)] = total;
        }
        rho
    }

    pub fn indexer(&self, tensor: &AugmentedTensor) -> PathIndexer {
        PathIndexer::new(self.m, tensor.window)
    }
}

/// Base-`d` digits of `flat`, most significant first.
fn decode_into(mut flat: usize, d: usize, digits: &mut [usize]) {
    for slot in digits.iter_mut().rev() {
        *slot = flat % d;
        flat /= d;
    }
}

fn increment(digits: &mut [usize], d: usize) {
    for slot in digits.iter_mut().rev() {
        *slot += 1;
        if *slot < d {
            return;
        }
        *slot = 0;
    }
}
