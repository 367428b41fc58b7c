#pragma once

// Rank-normalised split R-hat and effective sample size.
//
// Each chain is split in half. R-hat is the larger of the bulk value (on rank-normalised draws)
// and the tail value (on rank-normalised |x - median|). Bulk ESS uses rank-normalised draws and
// Geyer's initial monotone sequence on the multi-chain autocorrelation.

#include <vector>

namespace nhmm {

using ChainDraws = std::vector<std::vector<double>>;  // [chain][iteration]

/// Returns +inf when within-chain variance is zero but chains differ; NaN with fewer than 2 chains.
double split_rhat(const ChainDraws& chains);

/// Bulk effective sample size, at least 1.
double ess_bulk(const ChainDraws& chains);

/// ESS of the raw (not rank-normalised) draws, for Monte Carlo standard errors of the mean.
double ess_mean(const ChainDraws& chains);

/// Standard error of the pooled mean: sd / sqrt(ess_mean).
double mcse_mean(const ChainDraws& chains);

}  // namespace nhmm
