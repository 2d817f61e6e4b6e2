#include "pgland/inventory.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "pgland/parallel.hpp"

namespace pgland {

namespace {

constexpr double kKinkTol = 1e-12;
constexpr long kChunk = 2048;
constexpr int kMaxRedrawsPerPath = 100;

void require_policy(const InventoryProblem& prob, const BaseStock& policy) {
  if (policy.theta.size() != prob.horizon) {
    throw DimensionError("base-stock policy needs one threshold per period (" +
                         std::to_string(prob.horizon) + ")");
  }
  if (!policy.theta.allFinite()) throw InvalidArgument("thresholds must be finite");
  if ((policy.theta.array() < 0.0).any()) throw InvalidArgument("thresholds must be nonnegative");
}

struct PathDraw {
  double s1 = 0.0;
  Vector demands;
};

void draw_path(const InventoryProblem& prob, Rng& rng, PathDraw& out) {
  out.s1 = prob.init_state.sample(rng);
  out.demands.resize(prob.horizon);
  for (int t = 0; t < prob.horizon; ++t) out.demands(t) = prob.demand_max * rng.uniform();
}

double episode_cost(const InventoryProblem& prob, const Vector& theta, const Eigen::Ref<const Vector>& demands,
                    double s1) {
  double s = s1;
  double total = 0.0;
  for (int t = 0; t < prob.horizon; ++t) {
    const double order = std::max(0.0, theta(t) - s);
    const double end = s + order - demands(t);
    total += prob.stage_cost(order, end);
    s = end;
  }
  return total;
}

template <typename PerPath>
McEstimate mc_scalar(const InventoryProblem& prob, long n_paths, std::uint64_t seed, int threads,
                     PerPath per_path) {
  if (n_paths < 1) throw InvalidArgument("n_paths must be at least 1");
  const long n_chunks = (n_paths + kChunk - 1) / kChunk;
  std::vector<RunningMoments> partial(static_cast<std::size_t>(n_chunks));
  for_each_chunk(n_paths, kChunk, threads, [&](long chunk, long begin, long end) {
    RunningMoments m;
    PathDraw draw;
    for (long i = begin; i < end; ++i) {
      Rng rng(substream_seed(seed, static_cast<std::uint64_t>(i)));
      draw_path(prob, rng, draw);
      m.add(per_path(draw));
    }
    partial[static_cast<std::size_t>(chunk)] = m;
  });
  RunningMoments total;
  for (const auto& m : partial) total.merge(m);
  return {total.mean, total.std_err()};
}

}  // namespace

void InventoryProblem::validate() const {
  if (horizon < 1) throw InvalidArgument("horizon must be at least 1");
  if (!(order_cost > 0.0 && holding_cost > 0.0 && backlog_cost > 0.0)) {
    throw InvalidArgument("order, holding and backlog costs must be positive");
  }
  if (!(backlog_cost > order_cost)) throw InvalidArgument("backlog cost p must exceed order cost c");
  if (!(demand_max >= 0.0) || !std::isfinite(demand_max)) throw InvalidArgument("demand_max must be >= 0");
  if (!(init_state.lo <= init_state.hi) || !std::isfinite(init_state.lo) || !std::isfinite(init_state.hi)) {
    throw InvalidArgument("initial state law must be a finite interval");
  }
}

double InventoryProblem::stage_cost(double order, double end_inventory) const {
  return order_cost * order + backlog_cost * std::max(0.0, -end_inventory) +
         holding_cost * std::max(0.0, end_inventory);
}

double InventoryProblem::holding_backlog_slope(double x) const {
  if (x > 0.0) return holding_cost;
  if (x < 0.0) return -backlog_cost;
  return 0.0;
}

EpisodePath simulate_episode(const InventoryProblem& prob, const BaseStock& policy, const Vector& demands,
                             double s1) {
  prob.validate();
  require_policy(prob, policy);
  if (demands.size() != prob.horizon) throw DimensionError("need one demand per period");
  for (int t = 0; t < prob.horizon; ++t) {
    if (!(demands(t) >= 0.0 && demands(t) <= prob.demand_max)) {
      throw InvalidArgument("demand " + std::to_string(demands(t)) + " in period " + std::to_string(t + 1) +
                            " lies outside [0, demand_max]");
    }
  }
  EpisodePath path;
  path.states.resize(prob.horizon + 1);
  path.orders.resize(prob.horizon);
  path.demands = demands;
  path.states(0) = s1;
  for (int t = 0; t < prob.horizon; ++t) {
    const double s = path.states(t);
    path.orders(t) = std::max(0.0, policy.theta(t) - s);
    path.states(t + 1) = s + path.orders(t) - demands(t);
    path.total_cost += prob.stage_cost(path.orders(t), path.states(t + 1));
  }
  return path;
}

Vector pathwise_gradient(const InventoryProblem& prob, const BaseStock& policy, const Vector& demands,
                         double s1) {
  const EpisodePath path = simulate_episode(prob, policy, demands, s1);
  const int H = prob.horizon;
  std::vector<bool> orders(static_cast<std::size_t>(H));
  for (int t = 0; t < H; ++t) {
    if (std::abs(path.states(t) - policy.theta(t)) <= kKinkTol) {
      throw KinkError("inventory equals the threshold in period " + std::to_string(t + 1));
    }
    orders[static_cast<std::size_t>(t)] = path.states(t) < policy.theta(t);
  }
  for (int h = 1; h <= H; ++h) {
    if (std::abs(path.states(h)) <= kKinkTol) {
      throw KinkError("inventory is exactly zero entering period " + std::to_string(h + 1));
    }
  }
  Vector grad = Vector::Zero(H);
  for (int i = 0; i < H; ++i) {
    if (!orders[static_cast<std::size_t>(i)]) continue;
    double g = 0.0;
    int h = i + 1;
    for (; h < H; ++h) {
      g += prob.holding_backlog_slope(path.states(h));
      if (orders[static_cast<std::size_t>(h)]) break;
    }
    if (h >= H) {
      // No later order: the extra unit is paid for and carried to the end.
      g += prob.order_cost + prob.holding_backlog_slope(path.states(H));
    }
    grad(i) = g;
  }
  return grad;
}

McEstimate mc_cost(const InventoryProblem& prob, const BaseStock& policy, long n_paths, std::uint64_t seed,
                   int threads) {
  prob.validate();
  require_policy(prob, policy);
  return mc_scalar(prob, n_paths, seed, threads, [&](const PathDraw& d) {
    return episode_cost(prob, policy.theta, d.demands, d.s1);
  });
}

McEstimate mc_cost_difference(const InventoryProblem& prob, const BaseStock& a, const BaseStock& b,
                              long n_paths, std::uint64_t seed, int threads) {
  prob.validate();
  require_policy(prob, a);
  require_policy(prob, b);
  return mc_scalar(prob, n_paths, seed, threads, [&](const PathDraw& d) {
    return episode_cost(prob, a.theta, d.demands, d.s1) - episode_cost(prob, b.theta, d.demands, d.s1);
  });
}

namespace {

// `first_draw(i, draw)` fills path i's first draw; kinked paths are redrawn
// from Rng(substream_seed(seed, i)) after discarding that first draw.
template <typename FirstDraw>
McGradient chunked_gradient(const InventoryProblem& prob, const BaseStock& policy, long n_paths,
                            std::uint64_t seed, int threads, FirstDraw first_draw) {
  const int H = prob.horizon;
  const long n_chunks = (n_paths + kChunk - 1) / kChunk;
  std::vector<std::vector<RunningMoments>> partial(static_cast<std::size_t>(n_chunks));
  std::vector<long> redraws(static_cast<std::size_t>(n_chunks), 0);
  for_each_chunk(n_paths, kChunk, threads, [&](long chunk, long begin, long end) {
    std::vector<RunningMoments> m(static_cast<std::size_t>(H));
    PathDraw draw;
    long local_redraws = 0;
    for (long i = begin; i < end; ++i) {
      first_draw(i, draw);
      std::optional<Rng> rng;
      for (int attempt = 0;; ++attempt) {
        try {
          const Vector g = pathwise_gradient(prob, policy, draw.demands, draw.s1);
          for (int t = 0; t < H; ++t) m[static_cast<std::size_t>(t)].add(g(t));
          break;
        } catch (const KinkError&) {
          ++local_redraws;
          if (attempt + 1 >= kMaxRedrawsPerPath) {
            throw NumericalError("every redraw of path " + std::to_string(i) +
                                 " hits a kink; the demand law is degenerate");
          }
          if (!rng) {
            rng.emplace(substream_seed(seed, static_cast<std::uint64_t>(i)));
            draw_path(prob, *rng, draw);
          }
          draw_path(prob, *rng, draw);
        }
      }
    }
    partial[static_cast<std::size_t>(chunk)] = std::move(m);
    redraws[static_cast<std::size_t>(chunk)] = local_redraws;
  });
  McGradient out;
  out.mean.resize(H);
  out.std_err.resize(H);
  for (int t = 0; t < H; ++t) {
    RunningMoments total;
    for (const auto& chunk : partial) total.merge(chunk[static_cast<std::size_t>(t)]);
    out.mean(t) = total.mean;
    out.std_err(t) = total.std_err();
  }
  for (long r : redraws) out.resampled += r;
  if (static_cast<double>(out.resampled) > 1e-3 * static_cast<double>(n_paths + out.resampled)) {
    throw NumericalError("kink rate " + std::to_string(out.resampled) + "/" +
                         std::to_string(n_paths + out.resampled) + " exceeds 0.1%");
  }
  return out;
}

}  // namespace

McGradient mc_gradient(const InventoryProblem& prob, const BaseStock& policy, long n_paths, std::uint64_t seed,
                       int threads) {
  prob.validate();
  require_policy(prob, policy);
  if (n_paths < 1) throw InvalidArgument("n_paths must be at least 1");
  return chunked_gradient(prob, policy, n_paths, seed, threads, [&](long i, PathDraw& draw) {
    Rng rng(substream_seed(seed, static_cast<std::uint64_t>(i)));
    draw_path(prob, rng, draw);
  });
}

PathSample draw_paths(const InventoryProblem& prob, long n_paths, std::uint64_t seed, int threads) {
  prob.validate();
  if (n_paths < 1) throw InvalidArgument("n_paths must be at least 1");
  PathSample sample;
  sample.seed = seed;
  sample.s1.resize(n_paths);
  sample.demands.resize(prob.horizon, n_paths);
  for_each_chunk(n_paths, kChunk, threads, [&](long, long begin, long end) {
    PathDraw draw;
    for (long i = begin; i < end; ++i) {
      Rng rng(substream_seed(seed, static_cast<std::uint64_t>(i)));
      draw_path(prob, rng, draw);
      sample.s1(i) = draw.s1;
      sample.demands.col(i) = draw.demands;
    }
  });
  return sample;
}

namespace {

void require_sample(const InventoryProblem& prob, const PathSample& sample) {
  if (sample.size() < 1) throw InvalidArgument("path sample is empty");
  if (sample.demands.rows() != prob.horizon || sample.demands.cols() != sample.size()) {
    throw DimensionError("path sample does not match the horizon");
  }
}

}  // namespace

McEstimate sample_cost(const InventoryProblem& prob, const BaseStock& policy, const PathSample& sample,
                       int threads) {
  prob.validate();
  require_policy(prob, policy);
  require_sample(prob, sample);
  const long n = sample.size();
  const long n_chunks = (n + kChunk - 1) / kChunk;
  std::vector<RunningMoments> partial(static_cast<std::size_t>(n_chunks));
  for_each_chunk(n, kChunk, threads, [&](long chunk, long begin, long end) {
    RunningMoments m;
    for (long i = begin; i < end; ++i) m.add(episode_cost(prob, policy.theta, sample.demands.col(i), sample.s1(i)));
    partial[static_cast<std::size_t>(chunk)] = m;
  });
  RunningMoments total;
  for (const auto& m : partial) total.merge(m);
  return {total.mean, total.std_err()};
}

McGradient sample_gradient(const InventoryProblem& prob, const BaseStock& policy, const PathSample& sample,
                           int threads) {
  prob.validate();
  require_policy(prob, policy);
  require_sample(prob, sample);
  return chunked_gradient(prob, policy, sample.size(), sample.seed, threads, [&](long i, PathDraw& draw) {
    draw.s1 = sample.s1(i);
    draw.demands = sample.demands.col(i);
  });
}

double golden_section(const std::function<double(double)>& f, double lo, double hi, double tol) {
  if (!(lo < hi)) throw InvalidArgument("golden_section needs lo < hi");
  if (!(tol > 0.0)) throw InvalidArgument("golden_section needs tol > 0");
  const double inv_phi = std::numbers::phi - 1.0;
  auto eval = [&](double x) {
    const double v = f(x);
    if (!std::isfinite(v)) throw NumericalError("objective is not finite at x = " + std::to_string(x));
    return v;
  };
  double a = lo;
  double b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = eval(c);
  double fd = eval(d);
  while (b - a > 2.0 * tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = eval(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = eval(d);
    }
  }
  return 0.5 * (a + b);
}

BaseStock optimal_basestock(const InventoryProblem& prob, const BaseStockOracleOptions& options) {
  prob.validate();
  const int H = prob.horizon;
  const long n = options.paths_per_eval;
  if (n < 1) throw InvalidArgument("paths_per_eval must be at least 1");
  BaseStock best{Vector::Zero(H)};
  // Entering inventory below the bracket, so every candidate level is ordered up to.
  const double entry = -1.0;

  for (int stage = H - 1; stage >= 0; --stage) {
    const int len = H - stage;
    Matrix demands(n, len);
    for (long i = 0; i < n; ++i) {
      Rng rng(substream_seed(options.seed + static_cast<std::uint64_t>(stage) * 0x9e37ULL,
                             static_cast<std::uint64_t>(i)));
      for (int t = 0; t < len; ++t) demands(i, t) = prob.demand_max * rng.uniform();
    }
    const long n_chunks = (n + kChunk - 1) / kChunk;
    auto stage_cost = [&](double level) {
      std::vector<double> partial(static_cast<std::size_t>(n_chunks), 0.0);
      for_each_chunk(n, kChunk, options.threads, [&](long chunk, long begin, long end) {
        double sum = 0.0;
        for (long i = begin; i < end; ++i) {
          double s = entry;
          for (int t = 0; t < len; ++t) {
            const double target = t == 0 ? level : best.theta(stage + t);
            const double order = std::max(0.0, target - s);
            const double next = s + order - demands(i, t);
            sum += prob.stage_cost(order, next);
            s = next;
          }
        }
        partial[static_cast<std::size_t>(chunk)] = sum;
      });
      double total = 0.0;
      for (double v : partial) total += v;
      return total / static_cast<double>(n);
    };

    double upper = std::max(prob.demand_max * H, 1.0);
    double level = golden_section(stage_cost, 0.0, upper, options.tol);
    if (level > upper - 2.0 * options.tol) {
      upper *= 2.0;
      level = golden_section(stage_cost, 0.0, upper, options.tol);
      if (level > upper - 2.0 * options.tol) {
        throw NumericalError("optimal base-stock level for period " + std::to_string(stage + 1) +
                             " lies at the bracket edge " + std::to_string(upper));
      }
    }
    best.theta(stage) = level;
  }
  return best;
}

}  // namespace pgland
