#include "pgland/tools/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "pgland/error.hpp"
#include "pgland/random.hpp"
#include "pgland/version.hpp"

namespace pgland::tools {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Vector flatten(const Matrix& m) {
  const RowMajor rm = m;
  return Eigen::Map<const Vector>(rm.data(), rm.size());
}

Matrix unflatten(const Vector& v, int rows, int cols) {
  return Eigen::Map<const RowMajor>(v.data(), rows, cols);
}

DescentRun descend(const Objective& obj, const Vector& theta0, const ExperimentConfig& cfg,
                   const IterateObserver& observe = {}, bool exhaustion_ends_run = false,
                   double grad_tol_scale = -1.0) {
  const LineSearchConfig ls{cfg.real("beta"), static_cast<int>(cfg.integer("max_halvings"))};
  const StopRule stop{grad_tol_scale > 0.0 ? grad_tol_scale : cfg.real("grad_tol"),
                      static_cast<int>(cfg.integer("max_iters"))};
  DescentRun run;
  run.initial_theta = theta0;
  if (obj.oracle_optimum) run.oracle_loss = *obj.oracle_optimum;
  try {
    run.result = gradient_descent(obj, theta0, ls, stop, observe);
    run.status = run.result.converged ? "converged" : "max_iters";
  } catch (const DescentFailure& e) {
    run.result = e.partial();
    run.status = exhaustion_ends_run ? "line_search_exhausted" : "line_search_failed";
    run.failure = e.what();
    run.ok = exhaustion_ends_run;
  }
  const auto& rows = run.result.record.rows;
  run.meta.set("result.status", run.status);
  if (!run.failure.empty()) run.meta.set("result.failure", run.failure);
  run.meta.set("result.iterations", static_cast<long>(rows.empty() ? 0 : rows.back().iteration));
  if (!rows.empty()) {
    run.meta.set("result.initial_loss", rows.front().loss);
    run.meta.set("result.final_loss", rows.back().loss);
    run.meta.set("result.final_grad_norm", rows.back().grad_norm);
    run.meta.set("result.initial_gap", run.initial_gap());
    run.meta.set("result.final_gap", run.final_gap());
    run.meta.set("result.gap_ratio", run.final_gap() / run.initial_gap());
  }
  run.meta.set("result.theta", format_vector(run.result.theta.transpose()));
  return run;
}

}  // namespace

double DescentRun::initial_gap() const {
  return result.record.rows.empty() ? kNaN : result.record.rows.front().optimality_gap;
}

double DescentRun::final_gap() const {
  return result.record.rows.empty() ? kNaN : result.record.rows.back().optimality_gap;
}

DescentRun run_tabular(const ExperimentConfig& cfg) {
  const int S = static_cast<int>(cfg.integer("n_states"));
  const int A = static_cast<int>(cfg.integer("n_actions"));
  const FiniteMdp mdp = random_mdp(S, A, cfg.seed(), {cfg.real("gamma"), std::nullopt});
  const PolicyIterationResult oracle = policy_iteration(mdp);
  const double optimum = mdp.rho().dot(oracle.values.values);

  Objective obj;
  obj.dim = S * A;
  obj.loss = [&](const Vector& th) { return average_cost(mdp, softmax_policy(SoftmaxParams::from_flat(th, S, A))); };
  obj.gradient = [&](const Vector& th) { return exact_policy_gradient(mdp, SoftmaxParams::from_flat(th, S, A)).gradient; };
  obj.oracle_optimum = optimum;

  DescentRun run = descend(obj, Vector::Zero(S * A), cfg);
  run.meta.set("oracle.method", "policy iteration on the exact MDP, loss = rho^T J*");
  run.meta.set("oracle.loss", optimum);
  run.meta.set("oracle.policy_iterations", oracle.iterations);
  std::string actions;
  for (int a : oracle.policy.modal_actions()) actions += (actions.empty() ? "" : " ") + std::to_string(a);
  run.meta.set("oracle.actions", actions);
  return run;
}

DescentRun run_stopping(const ExperimentConfig& cfg) {
  const StoppingProblem p = random_stopping_problem(static_cast<int>(cfg.integer("n_contexts")),
                                                    static_cast<int>(cfg.integer("n_offers")), cfg.seed(),
                                                    cfg.real("gamma"));
  const StoppingMdp built = build_stopping_mdp(p);
  const StoppingOptimum opt = solve_stopping(p, built);

  Objective obj;
  obj.dim = 2 * p.n_contexts();
  obj.loss = [&](const Vector& th) { return evaluate_threshold(p, ThresholdParams{th}, false).cost_loss; };
  obj.gradient = [&](const Vector& th) { return evaluate_threshold(p, ThresholdParams{th}).gradient; };
  obj.oracle_optimum = opt.cost_loss;

  DescentRun run = descend(obj, Vector::Zero(obj.dim), cfg);
  run.meta.set("oracle.method",
               "policy iteration on the (X x Y) + terminal MDP; loss is the cost encoding y_max - reward");
  run.meta.set("oracle.loss", opt.cost_loss);
  run.meta.set("oracle.reward", built.decode_objective(opt.cost_loss));
  run.meta.set("oracle.thresholds",
               format_vector(Eigen::Map<const Vector>(opt.thresholds.data(), static_cast<Eigen::Index>(opt.thresholds.size())).transpose()));
  run.meta.set("oracle.up_closed", opt.up_closed);
  run.meta.set("encoding.y_max", built.reward_offset);
  if (!run.result.record.rows.empty()) {
    run.meta.set("result.final_reward", built.decode_objective(run.result.record.rows.back().loss));
  }
  return run;
}

LqrRun run_lqr(const ExperimentConfig& cfg) {
  const int n = static_cast<int>(cfg.integer("n"));
  const int k = static_cast<int>(cfg.integer("k"));
  const LqrSystem sys = random_lqr_system(n, k, cfg.seed(), cfg.real("gamma"), cfg.real("noise_scale"));
  LqrRun out;
  out.optimum = optimal_gain(sys);
  const double optimum = lqr_cost(sys, out.optimum);

  Rng rng(substream_seed(cfg.seed(), 1));
  const double scale = cfg.real("init_scale");
  LinearGain init{Matrix::Zero(k, n)};
  bool found = false;
  for (int attempt = 0; attempt < 10'000 && !found; ++attempt) {
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < n; ++j) init.theta(i, j) = rng.uniform(-scale, scale);
    }
    found = is_stable(sys, init);
  }
  if (!found) throw NumericalError("no stable initial gain found in 10000 draws; lower init_scale");

  Objective obj;
  obj.dim = n * k;
  obj.loss = [&](const Vector& th) { return lqr_cost(sys, LinearGain{unflatten(th, k, n)}); };
  obj.gradient = [&](const Vector& th) { return flatten(lqr_gradient(sys, LinearGain{unflatten(th, k, n)})); };
  obj.oracle_optimum = optimum;

  auto observe = [&](int, const Vector& th) {
    const LinearGain g{unflatten(th, k, n)};
    out.all_iterates_stable = out.all_iterates_stable && is_stable(sys, g);
    const Eigen::JacobiSVD<Matrix> svd(closed_loop(sys, g));
    out.max_operator_norm = std::max(out.max_operator_norm, svd.singularValues()(0));
  };
  out.run = descend(obj, flatten(init.theta), cfg, observe);
  out.final_gain = LinearGain{unflatten(out.run.result.theta, k, n)};
  out.distance_to_optimum = (out.final_gain.theta - out.optimum.theta).norm();

  Sidecar& m = out.run.meta;
  m.set("oracle.method", "policy iteration on gains (Riccati-style), started from 0 or -pinv(B) A");
  m.set("oracle.loss", optimum);
  m.set("oracle.theta", format_vector(out.optimum.theta));
  m.set("init.theta", format_vector(init.theta));
  m.set("result.distance_to_optimum", out.distance_to_optimum);
  m.set("result.all_iterates_stable", out.all_iterates_stable);
  m.set("result.max_operator_norm", out.max_operator_norm);
  return out;
}

InventoryProblem inventory_problem(const ExperimentConfig& cfg) {
  InventoryProblem prob;
  prob.horizon = static_cast<int>(cfg.integer("horizon"));
  prob.order_cost = cfg.real("order_cost");
  prob.holding_cost = cfg.real("holding_cost");
  prob.backlog_cost = cfg.real("backlog_cost");
  prob.demand_max = cfg.real("demand_max");
  prob.init_state = UniformLaw{cfg.real("init_lo"), cfg.real("init_hi")};
  prob.validate();
  return prob;
}

InventoryRun run_inventory(const ExperimentConfig& cfg) {
  const InventoryProblem prob = inventory_problem(cfg);
  const int threads = static_cast<int>(cfg.integer("threads"));
  const long train = cfg.integer("train_paths");
  const std::uint64_t train_seed = substream_seed(cfg.seed(), 2);
  const std::uint64_t eval_seed = substream_seed(cfg.seed(), 3);

  InventoryRun out;
  out.optimum = optimal_basestock(
      prob, {cfg.integer("oracle_paths"), substream_seed(cfg.seed(), 1), cfg.real("oracle_tol"), threads});

  Objective obj;
  obj.dim = prob.horizon;
  const PathSample sample = draw_paths(prob, train, train_seed, threads);
  obj.loss = [&](const Vector& th) { return sample_cost(prob, BaseStock{th}, sample, threads).mean; };
  obj.gradient = [&](const Vector& th) { return sample_gradient(prob, BaseStock{th}, sample, threads).mean; };
  obj.projection = [](Vector th) { return Vector(th.cwiseMax(0.0)); };
  obj.oracle_optimum = sample_cost(prob, out.optimum, sample, threads).mean;

  out.run = descend(obj, Vector::Constant(prob.horizon, cfg.real("theta0")), cfg, {}, true);
  out.final_theta = BaseStock{out.run.result.theta};
  const long n_eval = cfg.integer("n_paths");
  out.final_cost = mc_cost(prob, out.final_theta, n_eval, eval_seed, threads);
  out.optimum_cost = mc_cost(prob, out.optimum, n_eval, eval_seed, threads);
  out.combined_std_err = std::hypot(out.final_cost.std_err, out.optimum_cost.std_err);

  Sidecar& m = out.run.meta;
  m.set("oracle.method",
        "backward induction over periods; golden-section search on Monte Carlo stage cost plus "
        "simulated continuation under the fixed later thresholds, common random numbers per period");
  m.set("oracle.theta", format_vector(out.optimum.theta.transpose()));
  m.set("oracle.loss_on_training_paths", *obj.oracle_optimum);
  m.set("eval.paths", n_eval);
  m.set("eval.final_mean", out.final_cost.mean);
  m.set("eval.final_std_err", out.final_cost.std_err);
  m.set("eval.optimum_mean", out.optimum_cost.mean);
  m.set("eval.optimum_std_err", out.optimum_cost.std_err);
  m.set("eval.combined_std_err", out.combined_std_err);
  m.set("eval.within_3_std_err", out.within(3.0));
  return out;
}

std::vector<DescentCase> run_verify_descent(const ExperimentConfig& cfg) {
  const long n = cfg.integer("n");
  const int max_states = static_cast<int>(cfg.integer("max_states"));
  const int max_actions = static_cast<int>(cfg.integer("max_actions"));
  std::vector<DescentCase> cases;
  for (long i = 0; i < n; ++i) {
    Rng rng(substream_seed(cfg.seed(), static_cast<std::uint64_t>(2 * i)));
    DescentCase c;
    c.index = i;
    c.n_states = std::min(max_states, 1 + static_cast<int>(rng.uniform() * max_states));
    c.n_actions = std::min(max_actions, 2 + static_cast<int>(rng.uniform() * (max_actions - 1)));
    c.mdp_seed = substream_seed(cfg.seed(), static_cast<std::uint64_t>(2 * i + 1));
    const FiniteMdp mdp = random_mdp(c.n_states, c.n_actions, c.mdp_seed, {cfg.real("gamma"), std::nullopt});
    SoftmaxParams theta = SoftmaxParams::zeros(c.n_states, c.n_actions);
    for (int s = 0; s < c.n_states; ++s) {
      for (int a = 0; a < c.n_actions; ++a) theta.theta(s, a) = rng.normal();
    }
    c.report = verify_descent(mdp, theta);
    cases.push_back(std::move(c));
  }
  return cases;
}

std::vector<ApproximationCase> run_verify_approximation(const ExperimentConfig& cfg) {
  const int S = static_cast<int>(cfg.integer("n_states"));
  const int A = static_cast<int>(cfg.integer("n_actions"));
  const double grad_tol = cfg.real("grad_tol");
  std::vector<int> block_counts = {1, 2, S};
  block_counts.erase(std::unique(block_counts.begin(), block_counts.end()), block_counts.end());

  std::vector<ApproximationCase> cases;
  for (int j = 0; j < cfg.integer("n_mdps"); ++j) {
    const std::uint64_t mdp_seed = substream_seed(cfg.seed(), static_cast<std::uint64_t>(j));
    const FiniteMdp mdp = random_mdp(S, A, mdp_seed, {cfg.real("gamma"), std::nullopt});
    for (int m : block_counts) {
      const Aggregation agg = Aggregation::contiguous(S, m);
      Objective obj;
      obj.dim = m * A;
      obj.loss = [&](const Vector& th) { return average_cost(mdp, aggregated_softmax(unflatten(th, m, A), agg)); };
      obj.gradient = [&](const Vector& th) { return aggregated_policy_gradient(mdp, unflatten(th, m, A), agg).gradient; };
      // Stop rule becomes ||grad|| <= grad_tol.
      const Vector theta0 = Vector::Zero(m * A);
      const double scale = grad_tol / (1.0 + std::abs(obj.loss(theta0)));
      const DescentRun run = descend(obj, theta0, cfg, {}, true, scale);

      ApproximationCase c;
      c.mdp = j;
      c.mdp_seed = mdp_seed;
      c.n_states = S;
      c.n_blocks = m;
      c.iterations = run.result.record.rows.empty() ? 0 : run.result.record.rows.back().iteration;
      c.report = verify_approximation(mdp, agg, unflatten(run.result.theta, m, A),
                                      std::numeric_limits<double>::infinity());
      c.stationary = c.report.grad_norm <= grad_tol;
      cases.push_back(std::move(c));
    }
  }
  return cases;
}

std::vector<SoftPiCase> run_verify_softpi(const ExperimentConfig& cfg) {
  const int S = static_cast<int>(cfg.integer("n_states"));
  const int A = static_cast<int>(cfg.integer("n_actions"));
  std::vector<FiniteMdp> mdps;
  for (int j = 0; j < cfg.integer("n_mdps"); ++j) {
    mdps.push_back(random_mdp(S, A, substream_seed(cfg.seed(), static_cast<std::uint64_t>(j)),
                              {cfg.real("gamma"), std::nullopt}));
  }
  std::vector<SoftPiCase> cases;
  for (long i = 0; i < cfg.integer("n"); ++i) {
    Rng rng(substream_seed(cfg.seed(), static_cast<std::uint64_t>(1'000'000 + i)));
    Matrix probs(S, A);
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) probs(s, a) = rng.uniform();
      probs.row(s) /= probs.row(s).sum();
    }
    const double alpha = rng.uniform(1e-6, 1.0 - 1e-6);
    SoftPiCase c;
    c.index = i;
    c.mdp = static_cast<int>(i % static_cast<long>(mdps.size()));
    c.report = verify_soft_pi(mdps[static_cast<std::size_t>(c.mdp)], StochasticPolicy(probs), alpha);
    cases.push_back(std::move(c));
  }
  return cases;
}

FiniteHorizonBatch run_verify_finite_horizon(const ExperimentConfig& cfg) {
  const InventoryProblem prob = inventory_problem(cfg);
  const int threads = static_cast<int>(cfg.integer("threads"));
  FiniteHorizonBatch batch;
  batch.optimum = optimal_basestock(
      prob, {cfg.integer("oracle_paths"), substream_seed(cfg.seed(), 0), cfg.real("oracle_tol"), threads});
  for (long i = 0; i < cfg.integer("n"); ++i) {
    Rng rng(substream_seed(cfg.seed(), static_cast<std::uint64_t>(1 + 2 * i)));
    FiniteHorizonCase c;
    c.index = i;
    c.theta.theta.resize(prob.horizon);
    for (int t = 0; t < prob.horizon; ++t) c.theta.theta(t) = rng.uniform(0.0, prob.demand_max);
    FiniteHorizonOptions options;
    options.n_paths = cfg.integer("n_paths");
    options.seed = substream_seed(cfg.seed(), static_cast<std::uint64_t>(2 + 2 * i));
    options.stage_tol = cfg.real("stage_tol");
    options.step = cfg.real("step");
    options.threads = threads;
    c.report = verify_finite_horizon(prob, c.theta, batch.optimum, options);
    batch.cases.push_back(std::move(c));
  }
  return batch;
}

ReinforceBatch run_reinforce_check(const ExperimentConfig& cfg) {
  const int S = static_cast<int>(cfg.integer("n_states"));
  const int A = static_cast<int>(cfg.integer("n_actions"));
  const int threads = static_cast<int>(cfg.integer("threads"));
  ReinforceBatch batch;
  double num = 0.0;
  double den = 0.0;
  double var = 0.0;
  for (int j = 0; j < cfg.integer("n_mdps"); ++j) {
    const FiniteMdp mdp = random_mdp(S, A, substream_seed(cfg.seed(), static_cast<std::uint64_t>(j)),
                                     {cfg.real("gamma"), std::nullopt});
    for (int t = 0; t < cfg.integer("n_thetas"); ++t) {
      const std::uint64_t id = 1000 + 100 * static_cast<std::uint64_t>(j) + static_cast<std::uint64_t>(t);
      Rng rng(substream_seed(cfg.seed(), 2 * id));
      SoftmaxParams theta = SoftmaxParams::zeros(S, A);
      for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) theta.theta(s, a) = rng.normal();
      }
      ReinforceCase c;
      c.mdp = j;
      c.theta_index = t;
      c.exact = exact_policy_gradient(mdp, theta).gradient;
      c.estimate = reinforce_estimate(mdp, theta, cfg.integer("n_samples"), substream_seed(cfg.seed(), 2 * id + 1), threads);
      num += c.exact.dot(c.estimate.mean);
      den += c.exact.squaredNorm();
      var += c.exact.cwiseProduct(c.estimate.std_err).squaredNorm();
      batch.cases.push_back(std::move(c));
    }
  }
  batch.proportionality = den > 0.0 ? num / den : kNaN;
  batch.proportionality_std_err = den > 0.0 ? std::sqrt(var) / den : kNaN;
  return batch;
}

namespace {

void write_run(const std::string& path, const RunRecord& record) {
  CsvWriter csv(path, kRunHeader);
  for (const RunRow& r : record.rows) {
    csv.row({format_number(static_cast<long>(r.iteration)), format_number(r.loss), format_number(r.optimality_gap),
             format_number(r.grad_norm), format_number(r.step_size), format_number(r.wall_time_s)});
  }
}

void merge(Sidecar& into, const Sidecar& from) {
  for (const auto& [k, v] : from.entries()) into.set(k, v);
}

std::string u64(std::uint64_t v) { return std::to_string(v); }

int finish_batch(Sidecar& meta, long checks, long failures, std::ostream& log) {
  meta.set("result.checks", checks);
  meta.set("result.failures", failures);
  log << (checks - failures) << " of " << checks << " checks hold\n";
  return 0;
}

}  // namespace

int run(const ExperimentConfig& cfg, std::ostream& log) {
  const std::string& out_path = cfg.text("output");
  const std::string meta_path = out_path + ".meta";
  const std::string& e = cfg.experiment();

  Sidecar meta;
  meta.set("experiment", e);
  meta.set("library_version", kVersion);
  for (const auto& [k, v] : cfg.values()) meta.set("config." + k, v);

  int code = 0;
  try {
    if (e == "tabular" || e == "stopping") {
      const DescentRun r = e == "tabular" ? run_tabular(cfg) : run_stopping(cfg);
      write_run(out_path, r.result.record);
      merge(meta, r.meta);
      code = r.ok ? 0 : 2;
      log << e << ": " << r.status << ", gap " << format_number(r.initial_gap()) << " -> "
          << format_number(r.final_gap()) << '\n';
    } else if (e == "lqr") {
      const LqrRun r = run_lqr(cfg);
      write_run(out_path, r.run.result.record);
      merge(meta, r.run.meta);
      code = r.run.ok ? 0 : 2;
      log << "lqr: " << r.run.status << ", ||theta - theta*||_F = " << format_number(r.distance_to_optimum)
          << ", all iterates stable: " << (r.all_iterates_stable ? "yes" : "no") << '\n';
    } else if (e == "inventory") {
      const InventoryRun r = run_inventory(cfg);
      write_run(out_path, r.run.result.record);
      merge(meta, r.run.meta);
      code = r.run.ok ? 0 : 2;
      log << "inventory: " << r.run.status << ", cost " << format_number(r.final_cost.mean) << " vs optimum "
          << format_number(r.optimum_cost.mean) << " (combined std err " << format_number(r.combined_std_err)
          << ")\n";
    } else if (e == "verify-descent") {
      CsvWriter csv(out_path, {"case", "mdp_seed", "n_states", "n_actions", "directional_derivative", "bound",
                               "slack", "scale", "holds"});
      long failures = 0;
      const auto cases = run_verify_descent(cfg);
      for (const DescentCase& c : cases) {
        const DescentReport& r = c.report;
        failures += r.holds() ? 0 : 1;
        csv.row({format_number(c.index), u64(c.mdp_seed), format_number(static_cast<long>(c.n_states)),
                 format_number(static_cast<long>(c.n_actions)), format_number(r.directional_derivative),
                 format_number(r.bound), format_number(r.slack), format_number(r.scale), format_flag(r.holds())});
      }
      meta.set("check", "slack >= -1e-6 * scale");
      code = finish_batch(meta, static_cast<long>(cases.size()), failures, log);
    } else if (e == "verify-approximation") {
      CsvWriter csv(out_path, {"mdp", "mdp_seed", "n_states", "n_blocks", "iterations", "grad_norm", "stationary",
                               "bellman_error_eta", "approx_error", "bellman_tol", "bellman_holds", "c_rho", "gap",
                               "bound_rhs", "gap_tol", "gap_holds"});
      long failures = 0;
      const auto cases = run_verify_approximation(cfg);
      for (const ApproximationCase& c : cases) {
        const ApproximationReport& r = c.report;
        const bool ok = r.bellman_bound_holds() && r.gap_bound_holds();
        failures += ok ? 0 : 1;
        csv.row({format_number(static_cast<long>(c.mdp)), u64(c.mdp_seed), format_number(static_cast<long>(c.n_states)),
                 format_number(static_cast<long>(c.n_blocks)), format_number(static_cast<long>(c.iterations)),
                 format_number(r.grad_norm), format_flag(c.stationary), format_number(r.bellman_error_eta),
                 format_number(r.approx_error), format_number(r.bellman_tol), format_flag(r.bellman_bound_holds()),
                 format_number(r.c_rho), format_number(r.gap), format_number(r.bound_rhs), format_number(r.gap_tol),
                 format_flag(r.gap_bound_holds())});
      }
      meta.set("check", "bellman_error_eta <= approx_error + bellman_tol and gap <= bound_rhs + gap_tol");
      meta.set("c_rho.method", "upper bound 1 / min_s rho(s)");
      code = finish_batch(meta, static_cast<long>(cases.size()), failures, log);
    } else if (e == "verify-softpi") {
      CsvWriter csv(out_path, {"case", "mdp", "alpha", "improvement", "rhs", "lambda", "chain_violation_upper",
                               "chain_violation_lower", "improvement_holds", "chain_holds"});
      long failures = 0;
      const auto cases = run_verify_softpi(cfg);
      for (const SoftPiCase& c : cases) {
        const SoftPiReport& r = c.report;
        failures += (r.improvement_holds() && r.chain_holds()) ? 0 : 1;
        csv.row({format_number(c.index), format_number(static_cast<long>(c.mdp)), format_number(r.alpha),
                 format_number(r.improvement), format_number(r.rhs), format_number(r.lambda),
                 format_number(r.chain_violation_upper), format_number(r.chain_violation_lower),
                 format_flag(r.improvement_holds()), format_flag(r.chain_holds())});
      }
      if (!cases.empty()) meta.set("instantiation", cases.front().report.instantiation);
      meta.set("check", "improvement >= rhs - 1e-10 and the elementwise chain within 1e-10");
      code = finish_batch(meta, static_cast<long>(cases.size()), failures, log);
    } else if (e == "verify-finite-horizon") {
      CsvWriter csv(out_path, {"case", "theta", "stage", "theta_stage", "optimum_stage", "directional_derivative",
                               "std_err", "within_noise", "vacuous", "descends"});
      long failures = 0;
      long vacuous = 0;
      const FiniteHorizonBatch batch = run_verify_finite_horizon(cfg);
      for (const FiniteHorizonCase& c : batch.cases) {
        const FiniteHorizonReport& r = c.report;
        failures += (r.vacuous || r.descends()) ? 0 : 1;
        vacuous += r.vacuous ? 1 : 0;
        const double th = r.stage >= 0 ? c.theta.theta(r.stage) : kNaN;
        const double opt = r.stage >= 0 ? batch.optimum.theta(r.stage) : kNaN;
        csv.row({format_number(c.index), format_vector(c.theta.theta.transpose()),
                 format_number(static_cast<long>(r.stage + 1)), format_number(th), format_number(opt),
                 format_number(r.directional_derivative), format_number(r.std_err),
                 format_number(static_cast<long>(r.within_noise)), format_flag(r.vacuous), format_flag(r.descends())});
      }
      meta.set("result.vacuous", vacuous);
      meta.set("oracle.method", "backward induction with golden-section search on Monte Carlo stage costs");
      meta.set("oracle.theta", format_vector(batch.optimum.theta.transpose()));
      meta.set("check",
               "the last stage whose move is beyond 3 std err of zero descends, unless vacuous; stages are "
               "numbered from 1");
      code = finish_batch(meta, static_cast<long>(batch.cases.size()), failures, log);
    } else if (e == "reinforce-check") {
      CsvWriter csv(out_path, {"mdp", "theta", "component", "exact", "estimate", "std_err", "z_score"});
      const ReinforceBatch batch = run_reinforce_check(cfg);
      long checks = 0;
      long failures = 0;
      for (const ReinforceCase& c : batch.cases) {
        for (Eigen::Index i = 0; i < c.exact.size(); ++i) {
          const double expected = kReinforceProportionality * c.exact(i);
          const double z = (c.estimate.mean(i) - expected) / c.estimate.std_err(i);
          ++checks;
          failures += std::abs(z) <= 4.0 ? 0 : 1;
          csv.row({format_number(static_cast<long>(c.mdp)), format_number(static_cast<long>(c.theta_index)),
                   format_number(static_cast<long>(i)), format_number(c.exact(i)), format_number(c.estimate.mean(i)),
                   format_number(c.estimate.std_err(i)), format_number(z)});
        }
      }
      meta.set("proportionality.documented", kReinforceProportionality);
      meta.set("proportionality.measured", batch.proportionality);
      meta.set("proportionality.std_err", batch.proportionality_std_err);
      meta.set("check", "|estimate - exact| <= 4 std_err componentwise");
      code = finish_batch(meta, checks, failures, log);
    } else {
      throw ConfigError("unknown experiment '" + e + "'");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& ex) {
    meta.set("result.status", "error");
    meta.set("result.failure", ex.what());
    meta.write(meta_path);
    log << e << " failed: " << ex.what() << '\n';
    return 2;
  }
  meta.write(meta_path);
  return code;
}

}  // namespace pgland::tools
