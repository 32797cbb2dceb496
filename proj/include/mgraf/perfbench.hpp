#pragma once

// Runtime-scaling harness. Times CISE iterations (steps (I)+(II) only, after
// a warm-up iteration) on Erdos-Renyi(0.5) stacks over grids in n, V and K,
// then fits log-log slopes per axis. Timing runs single threaded with the
// partial (Lanczos) eigensolver, which is the complexity-relevant
// configuration; parallel speedups would distort the slopes.

#include <array>
#include <chrono>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mgraf/cise.hpp"
#include "mgraf/parallel.hpp"
#include "mgraf/simulate.hpp"
#include "mgraf/stats.hpp"
#include "mgraf/types.hpp"

namespace mgraf {

struct ScalingGrid {
  int base_networks = 48;
  int base_nodes = 72;
  int base_rank = 4;
  std::vector<int> networks_axis{24, 48, 96, 192};
  std::vector<int> nodes_axis{48, 80, 128, 192};
  std::vector<int> rank_axis{4, 8, 16, 32};
};

struct ScalingCell {
  std::string axis;
  int networks = 0;
  int nodes = 0;
  int rank = 0;
  int repetitions = 0;
  double mean_iter_seconds = 0.0;
  bool timed_out = false;
};

struct ScalingReport {
  std::vector<ScalingCell> cells;
  double slope_networks = 0.0;
  double slope_nodes = 0.0;
  double slope_rank = 0.0;
};

namespace detail {

inline CiseOptions bench_options(int rank) {
  CiseOptions opts;
  opts.backend = EigenBackend::Lanczos;
  // Fixed inner budget and fixed work per sweep: both the sweep count and
  // the per-step evaluation count of the logistic solver adapt to the
  // instance's conditioning, which varies with (n, V, K) and would
  // contaminate the slopes. Six fixed-work sweeps per step (I) pin the timed
  // quantity to the per-iteration cost model.
  opts.logit_max_iter = 6;
  opts.logit_tol = 1e-300;
  opts.bench_fixed_work = true;
  // Lean Krylov budget, linear in the number of requested pairs.
  opts.lanczos.max_steps = 2 * rank + 12;
  return opts;
}

// Times one axis with repetitions interleaved across its cells, so clock
// drift and scheduler noise hit every cell evenly.
inline double time_axis(const std::string& axis, const std::vector<int>& values,
                        std::vector<ScalingCell>& out, int repetitions, int warmup_iters,
                        int measured_iters, std::uint64_t seed, double budget_seconds,
                        const std::function<std::array<int, 3>(int)>& shape) {
  using clock = std::chrono::steady_clock;
  std::vector<std::vector<double>> samples(values.size());
  std::vector<int> reps_done(values.size(), 0);
  const auto axis_start = clock::now();
  bool timed_out = false;
  for (int rep = 0; rep < repetitions && !timed_out; ++rep) {
    for (std::size_t c = 0; c < values.size(); ++c) {
      const auto [n, V, K] = shape(values[c]);
      const NetworkStack stack = sample_er(
          V, 0.5, n, Rng::derive(seed, 1000 * static_cast<std::uint64_t>(c) + rep));
      CiseState state(stack, Variant::FullLambda, K, bench_options(K));
      for (int it = 0; it < warmup_iters + measured_iters; ++it) {
        const auto t0 = clock::now();
        state.step_logistic();
        state.step_q();
        const auto t1 = clock::now();
        if (it >= warmup_iters) {
          samples[c].push_back(std::chrono::duration<double>(t1 - t0).count());
        }
      }
      reps_done[c] = rep + 1;
      if (std::chrono::duration<double>(clock::now() - axis_start).count() >
          budget_seconds * static_cast<double>(values.size())) {
        timed_out = rep + 1 < repetitions;
        break;
      }
    }
  }
  std::vector<double> xs, ys;
  for (std::size_t c = 0; c < values.size(); ++c) {
    const auto [n, V, K] = shape(values[c]);
    ScalingCell cell;
    cell.axis = axis;
    cell.networks = n;
    cell.nodes = V;
    cell.rank = K;
    cell.repetitions = reps_done[c];
    cell.timed_out = timed_out;
    // Median across interleaved samples: robust against frequency spikes.
    cell.mean_iter_seconds = median_of(samples[c]);
    xs.push_back(static_cast<double>(values[c]));
    ys.push_back(cell.mean_iter_seconds);
    out.push_back(std::move(cell));
  }
  return loglog_slope(xs, ys);
}

}  // namespace detail

inline ScalingReport run_scaling(const ScalingGrid& grid, int repetitions, std::uint64_t seed,
                                 int measured_iters = 3, int warmup_iters = 1,
                                 double cell_budget_seconds = 120.0) {
  require(repetitions >= 1 && measured_iters >= 1, "run_scaling: bad repetition counts");
  const int saved_threads = max_threads();
  set_max_threads(1);
  ScalingReport report;

  report.slope_networks = detail::time_axis(
      "n", grid.networks_axis, report.cells, repetitions, warmup_iters, measured_iters,
      Rng::derive(seed, 1), cell_budget_seconds,
      [&](int v) { return std::array<int, 3>{v, grid.base_nodes, grid.base_rank}; });
  report.slope_nodes = detail::time_axis(
      "V", grid.nodes_axis, report.cells, repetitions, warmup_iters, measured_iters,
      Rng::derive(seed, 2), cell_budget_seconds,
      [&](int v) { return std::array<int, 3>{grid.base_networks, v, grid.base_rank}; });
  report.slope_rank = detail::time_axis(
      "K", grid.rank_axis, report.cells, repetitions, warmup_iters, measured_iters,
      Rng::derive(seed, 3), cell_budget_seconds,
      [&](int v) { return std::array<int, 3>{grid.base_networks, grid.base_nodes, v}; });

  set_max_threads(saved_threads);
  return report;
}

}  // namespace mgraf
