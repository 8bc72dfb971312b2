use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::metrics::{summarize, MetricsSeries, RunSummary};
use super::run::{pool, run_series};
use crate::agents::AgentKind;
use crate::{Result, SimError};

/// Axes of a parameter sweep. An empty axis keeps the base value.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepGrid {
    pub m_channels: Vec<usize>,
    pub n_devices: Vec<usize>,
    pub lambda: Vec<f64>,
    /// `[hidden_layers, hidden_size]` pairs.
    pub hidden: Vec<[usize; 2]>,
    pub agents: Vec<AgentKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub index: usize,
    pub config: RunConfig,
    pub summary: RunSummary,
    /// Present when traces were kept.
    pub runs: Vec<MetricsSeries>,
}

impl SweepGrid {
    /// Cell configurations, config-major and agent-minor. Axes nest in the
    /// order M, N, λ, hidden shape.
    pub fn cells(&self, base: &RunConfig) -> Vec<RunConfig> {
        fn axis<T: Clone>(values: &[T], base: T) -> Vec<T> {
            if values.is_empty() {
                vec![base]
            } else {
                values.to_vec()
            }
        }
        let mut out = Vec::new();
        for m in axis(&self.m_channels, base.m_channels) {
            for n in axis(&self.n_devices, base.n_devices) {
                for lambda in axis(&self.lambda, base.lambda) {
                    for [layers, size] in axis(&self.hidden, [base.hidden_layers, base.hidden_size]) {
                        for agent in axis(&self.agents, base.agent) {
                            out.push(RunConfig {
                                m_channels: m,
                                n_devices: n,
                                lambda,
                                hidden_layers: layers,
                                hidden_size: size,
                                agent,
                                ..base.clone()
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

/// Parses a config file: flat run settings plus an optional `[grid]` table.
pub fn parse_config_text(text: &str) -> Result<(RunConfig, Option<SweepGrid>)> {
    let mut table: toml::Table =
        toml::from_str(text).map_err(|e| SimError::Config(vec![e.message().to_string()]))?;
    let grid = table
        .remove("grid")
        .map(|g| g.try_into::<SweepGrid>())
        .transpose()
        .map_err(|e| SimError::Config(vec![format!("grid: {}", e.message())]))?;
    let config: RunConfig = table
        .try_into()
        .map_err(|e: toml::de::Error| SimError::Config(vec![e.message().to_string()]))?;
    Ok((config, grid))
}

/// Runs every cell of the grid. Cells and runs share one worker pool; results
/// come back in cell order with runs in index order. Without `keep_traces`
/// only the summaries survive.
pub fn sweep(base: &RunConfig, grid: &SweepGrid, jobs: usize, keep_traces: bool) -> Result<Vec<SweepCell>> {
    let configs = grid.cells(base);
    let mut problems = Vec::new();
    for (i, c) in configs.iter().enumerate() {
        problems.extend(c.problems().into_iter().map(|p| format!("cell {i}: {p}")));
    }
    if !problems.is_empty() {
        return Err(SimError::Config(problems));
    }
    let jobs_list: Vec<(usize, usize)> = configs
        .iter()
        .enumerate()
        .flat_map(|(c, cfg)| (0..cfg.n_runs).map(move |r| (c, r)))
        .collect();
    let results = pool(jobs)?.install(|| {
        jobs_list
            .par_iter()
            .map(|&(c, r)| {
                let mut series = run_series(&configs[c], r)?;
                if !keep_traces {
                    drop_traces(&mut series);
                }
                Ok(series)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut results = results.into_iter();
    Ok(configs
        .into_iter()
        .enumerate()
        .map(|(index, config)| {
            let runs: Vec<MetricsSeries> = results.by_ref().take(config.n_runs).collect();
            SweepCell {
                index,
                summary: summarize(&runs),
                runs: if keep_traces { runs } else { Vec::new() },
                config,
            }
        })
        .collect())
}

/// Keeps the scalar results, frees the per-event traces.
fn drop_traces(series: &mut MetricsSeries) {
    series.success = Vec::new();
    series.n_active = Vec::new();
    series.epsilon = Vec::new();
    series.mse_sys = Vec::new();
    series.rolling_success = Vec::new();
}
