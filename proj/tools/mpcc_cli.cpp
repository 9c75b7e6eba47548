// Command-line front end: solve single MPCC instances, tune SVM
// hyperparameters over a multistart grid, run benchmark experiments from a
// config file, emit performance profiles, and generate synthetic datasets.
//
// Exit codes: 0 success, 1 run failures present, 2 usage error.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <mpcc/bench.hpp>
#include <mpcc/cq.hpp>
#include <mpcc/detail/json.hpp>
#include <mpcc/dfo.hpp>
#include <mpcc/errors.hpp>
#include <mpcc/hypertune.hpp>
#include <mpcc/toys.hpp>

namespace {

using namespace mpcc;

int env_workers() {
  const char* raw = std::getenv("MPCC_WORKERS");
  if (!raw) return 1;
  const int n = std::atoi(raw);
  return n > 0 ? n : 1;
}

Vector parse_point(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string field;
  while (std::getline(ss, field, ',')) values.push_back(std::stod(field));
  Vector z(static_cast<Eigen::Index>(values.size()));
  for (size_t i = 0; i < values.size(); ++i)
    z[static_cast<Eigen::Index>(i)] = values[i];
  return z;
}

bool is_synthetic_name(const std::string& name) {
  try {
    parse_synthetic_kind(name);
    return true;
  } catch (...) {
    return false;
  }
}

Dataset resolve_dataset(const std::string& spec, int n, int d, double noise,
                        std::uint64_t seed, const std::string& preprocess) {
  DatasetConfig config;
  config.name = std::filesystem::path(spec).stem().string();
  if (is_synthetic_name(spec)) {
    config.synthetic = spec;
    config.name = spec;
    config.n = n;
    config.d = d;
    config.noise = noise;
    config.seed = seed;
  } else {
    config.path = spec;
    config.preprocess = preprocess;
  }
  return dataset_from_config(config);
}

void print_trace(const SolveTrace& trace) {
  std::printf("%5s %12s %10s %7s %12s %12s %10s\n", "round", "param", "eps",
              "inner", "kkt", "comp", "time[s]");
  for (const auto& rec : trace.records)
    std::printf("%5d %12.4e %10.1e %7d %12.4e %12.4e %10.3f\n", rec.outer,
                rec.param, rec.eps, rec.inner_iterations, rec.kkt.max(),
                rec.comp_violation, rec.wall_time);
  std::printf("status=%s f=%.6g complementarity=%.3e final_param=%.3e "
              "time=%.3fs\n",
              to_string(trace.status), trace.objective,
              trace.records.empty() ? 0.0
                                    : trace.records.back().comp_violation,
              trace.final_param, trace.wall_time);
}

SolveTrace dispatch_solve(const MpccProblem& problem, const Vector& z0,
                          TuneMethod method, const PenalisationParams& pen,
                          const RelaxationParams& relax, const SsnParams& ssn,
                          double pi_exact, double tau_exact,
                          double exact_eps) {
  switch (method) {
    case TuneMethod::PenSeq:
      return solve_sequential_penalisation(problem, z0, pen);
    case TuneMethod::PenExact:
      return solve_exact_penalisation(problem, z0, pi_exact, exact_eps, pen);
    case TuneMethod::RelaxSeq:
      return solve_sequential_relaxation(problem, z0, relax);
    case TuneMethod::RelaxExact:
      return solve_exact_relaxation(problem, z0, tau_exact, exact_eps, relax);
    case TuneMethod::Ssn: {
      Vector x0 = Vector::Zero(problem.n_vars + problem.n_ineq +
                               problem.n_eq + 2 * problem.n_comp);
      x0.head(problem.n_vars) = z0;
      return solve_semismooth_newton(problem, x0, ssn);
    }
  }
  return {};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MPCC solver toolkit: penalisation and relaxation homotopies, "
               "a semismooth Newton method, constraint-qualification "
               "certifiers and SVM hyperparameter tuning"};
  app.require_subcommand(1);

  // --- solve ---------------------------------------------------------------
  auto* solve = app.add_subcommand(
      "solve", "Solve one MPCC instance (a named toy or a tuning model)");
  std::string solve_problem = "cubic-axes";
  std::string solve_dataset, solve_preprocess, solve_start;
  std::string solve_method = "pen-seq", solve_init = "centre";
  PenalisationParams pen;
  RelaxationParams relax;
  SsnParams ssn;
  double pi_exact = 1e6, tau_exact = 1e-6, exact_eps = 1e-6;
  int solve_n = 54, solve_d = 2, solve_folds = 3;
  double solve_noise = 0.2, solve_test_fraction = 0.1;
  std::uint64_t solve_seed = 7;
  solve->add_option("--problem", solve_problem,
                    "Named instance: linear-axes or cubic-axes");
  solve->add_option("--dataset", solve_dataset,
                    "Tune-model instance instead: synthetic kind or file");
  solve->add_option("--preprocess", solve_preprocess,
                    "Sidecar preprocessing spec for file datasets");
  solve->add_option("--method", solve_method,
                    "pen-seq|pen-exact|relax-seq|relax-exact|ssn");
  solve->add_option("--start", solve_start,
                    "Comma-separated start (toy: z0; dataset: C0,gamma0)");
  solve->add_option("--init", solve_init, "zero|centre|feasible");
  solve->add_option("--pi0", pen.pi0, "Initial penalty parameter");
  solve->add_option("--tau0", relax.tau0, "Initial relaxation parameter");
  solve->add_option("--pi", pi_exact, "Fixed parameter for pen-exact");
  solve->add_option("--tau", tau_exact, "Fixed parameter for relax-exact");
  solve->add_option("--eps-exit", pen.eps_exit, "Complementarity exit tol");
  solve->add_option("--max-outer", pen.max_outer, "Outer round cap");
  solve->add_option("--n", solve_n, "Synthetic dataset size");
  solve->add_option("--d", solve_d, "Synthetic dataset dimension");
  solve->add_option("--noise", solve_noise, "Synthetic noise level");
  solve->add_option("--folds", solve_folds, "Cross-validation folds");
  solve->add_option("--test-fraction", solve_test_fraction, "Test share");
  solve->add_option("--seed", solve_seed, "Split / generator seed");

  // --- tune ----------------------------------------------------------------
  auto* tune_cmd = app.add_subcommand(
      "tune", "Multistart hyperparameter tuning on one dataset");
  std::string tune_dataset = "moons", tune_preprocess, tune_out;
  std::string tune_method = "pen-seq", tune_init = "centre";
  int tune_n = 54, tune_d = 2;
  double tune_noise = 0.2;
  std::uint64_t tune_data_seed = 7;
  TuneParams tune_params;
  std::vector<int> tune_grid;
  tune_cmd->add_option("--dataset", tune_dataset,
                       "Synthetic kind or dataset file");
  tune_cmd->add_option("--preprocess", tune_preprocess,
                       "Sidecar preprocessing spec");
  tune_cmd->add_option("--n", tune_n, "Synthetic dataset size");
  tune_cmd->add_option("--d", tune_d, "Synthetic dataset dimension");
  tune_cmd->add_option("--noise", tune_noise, "Synthetic noise level");
  tune_cmd->add_option("--data-seed", tune_data_seed, "Generator seed");
  tune_cmd->add_option("--folds", tune_params.folds, "Folds (default 3)");
  tune_cmd->add_option("--test-fraction", tune_params.test_fraction,
                       "Held-out test share (default 0.1)");
  tune_cmd->add_option("--method", tune_method,
                       "pen-seq|pen-exact|relax-seq|relax-exact|ssn");
  tune_cmd
      ->add_option("--grid", tune_grid,
                   "Decade exponents: c_lo c_hi gamma_lo gamma_hi")
      ->expected(4);
  tune_cmd->add_option("--init", tune_init, "zero|centre|feasible");
  tune_cmd->add_option("--seed", tune_params.seed, "Split seed");
  tune_cmd->add_option("--out", tune_out, "Write per-run records here");

  // --- bench ---------------------------------------------------------------
  auto* bench =
      app.add_subcommand("bench", "Run an experiment from a JSON config");
  std::string bench_config;
  bench->add_option("--config", bench_config, "Experiment config file")
      ->required();

  // --- profile ---------------------------------------------------------------
  auto* profile = app.add_subcommand(
      "profile", "Restart-adjusted performance profile from records");
  std::string profile_records, profile_targets, profile_out;
  profile->add_option("--records", profile_records, "records.jsonl path")
      ->required();
  profile
      ->add_option("--targets", profile_targets,
                   "JSON map dataset -> target test accuracy")
      ->required();
  profile->add_option("--out", profile_out, "Output table (default stdout)");

  // --- datagen ---------------------------------------------------------------
  auto* datagen =
      app.add_subcommand("datagen", "Generate a synthetic dataset file");
  std::string datagen_kind = "moons", datagen_out = "dataset.csv";
  int datagen_n = 54, datagen_d = 2;
  double datagen_noise = 0.2;
  std::uint64_t datagen_seed = 7;
  datagen->add_option("--kind", datagen_kind,
                      "circles|moons|xor|linear|swiss_roll|hastie");
  datagen->add_option("--n", datagen_n, "Number of examples");
  datagen->add_option("--d", datagen_d, "Feature dimension");
  datagen->add_option("--noise", datagen_noise, "Noise level");
  datagen->add_option("--seed", datagen_seed, "Generator seed");
  datagen->add_option("--out", datagen_out, "Output file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*solve) {
      relax.eps_exit = pen.eps_exit;
      relax.max_outer = pen.max_outer;
      const TuneMethod method = parse_tune_method(solve_method);
      if (!solve_dataset.empty()) {
        const Dataset data =
            resolve_dataset(solve_dataset, solve_n, solve_d, solve_noise,
                            solve_seed, solve_preprocess);
        const FoldPlan folds =
            make_folds(data, solve_folds, solve_test_fraction, solve_seed);
        const ModelM model(folds);
        double c0 = 1.0, gamma0 = 1.0;
        if (!solve_start.empty()) {
          const Vector start = parse_point(solve_start);
          if (start.size() != 2)
            throw ContractError("--start must be C0,gamma0 for datasets");
          c0 = start[0];
          gamma0 = start[1];
        }
        const Vector z0 =
            init_point(model, parse_init_strategy(solve_init), c0, gamma0);
        const SolveTrace trace =
            dispatch_solve(model.problem(), z0, method, pen, relax, ssn,
                           pi_exact, tau_exact, exact_eps);
        print_trace(trace);
        std::printf("C=%.6g gamma=%.6g hinge=%.6g validation_acc=%.3f\n",
                    trace.z[0], trace.z[1], model.hinge_objective(trace.z),
                    model.validation_accuracy(trace.z));
        return trace.status == SolveStatus::Converged ? 0 : 1;
      }
      MpccProblem problem;
      Vector z0(2);
      if (solve_problem == "linear-axes") {
        problem = toys::linear_axes();
        z0 << 1.0, 1.0;
      } else if (solve_problem == "cubic-axes") {
        problem = toys::cubic_axes();
        z0 << 0.5, 2.5;
      } else {
        throw ContractError("unknown --problem: " + solve_problem);
      }
      if (!solve_start.empty()) z0 = parse_point(solve_start);
      const SolveTrace trace = dispatch_solve(
          problem, z0, method, pen, relax, ssn, pi_exact, tau_exact,
          exact_eps);
      print_trace(trace);
      return trace.status == SolveStatus::Converged ? 0 : 1;
    }

    if (*tune_cmd) {
      const Dataset data =
          resolve_dataset(tune_dataset, tune_n, tune_d, tune_noise,
                          tune_data_seed, tune_preprocess);
      tune_params.init = parse_init_strategy(tune_init);
      tune_params.workers = env_workers();
      if (!tune_grid.empty())
        tune_params.grid = {tune_grid[0], tune_grid[1], tune_grid[2],
                            tune_grid[3]};
      const TuneResult result =
          tune(data, parse_tune_method(tune_method), tune_params);

      int failures = 0;
      std::vector<RunRecord> records;
      for (const auto& run : result.runs) {
        if (!run.error.empty()) ++failures;
        RunRecord rec;
        rec.dataset = data.name;
        rec.method = tune_method;
        rec.seed = tune_params.seed;
        rec.C0 = run.C0;
        rec.gamma0 = run.gamma0;
        rec.C = run.C;
        rec.gamma = run.gamma;
        rec.objective = run.objective;
        rec.validation_accuracy = run.validation_accuracy;
        rec.test_accuracy = run.test_accuracy;
        rec.wall_time = run.wall_time;
        rec.status = run.error.empty() ? to_string(run.status) : "Error";
        rec.final_param = run.final_param;
        rec.mpcc_feasibility = run.mpcc_feasibility;
        rec.iterations = run.inner_iterations;
        records.push_back(rec);
      }
      if (!tune_out.empty()) write_records(records, tune_out);

      std::printf("dataset=%s method=%s starts=%zu failures=%d\n",
                  data.name.c_str(), tune_method.c_str(), result.runs.size(),
                  failures);
      std::printf("runtime   q1/q2/q3 = %.3f/%.3f/%.3f s\n",
                  result.runtime_q.q1, result.runtime_q.q2,
                  result.runtime_q.q3);
      std::printf("objective q1/q2/q3 = %.4f/%.4f/%.4f\n",
                  result.objective_q.q1, result.objective_q.q2,
                  result.objective_q.q3);
      std::printf("best: objective=%.4f validation_acc=%.3f test_acc=%.3f "
                  "C=%.4g gamma=%.4g\n",
                  result.best_objective, result.best_validation_accuracy,
                  result.best_test_accuracy, result.best_C,
                  result.best_gamma);
      return failures > 0 ? 1 : 0;
    }

    if (*bench) {
      ExperimentConfig config =
          ExperimentConfig::from_json_file(bench_config);
      if (config.tune.workers <= 1) config.tune.workers = env_workers();
      const ExperimentOutcome outcome = run_experiment(config);
      std::cout << outcome.summary;
      std::printf("records=%zu failures=%d out=%s\n", outcome.records.size(),
                  outcome.failures, config.out.c_str());
      return outcome.failures > 0 ? 1 : 0;
    }

    if (*profile) {
      const auto records = read_records(profile_records);
      std::ifstream in(profile_targets);
      if (!in) throw ParseError("cannot open targets: " + profile_targets);
      std::stringstream buf;
      buf << in.rdbuf();
      std::map<std::string, double> targets;
      const auto parsed = nlohmann::json::parse(buf.str());
      for (const auto& [key, value] : parsed.items())
        targets[key] = value.get<double>();
      const auto points = performance_profile(records, targets);
      std::ostream* os = &std::cout;
      std::ofstream file;
      if (!profile_out.empty()) {
        file.open(profile_out);
        os = &file;
      }
      *os << "method\tadjusted_runtime\tsolved_fraction\n";
      for (const auto& point : points)
        *os << point.method << "\t" << point.adjusted_runtime << "\t"
            << point.solved_fraction << "\n";
      return 0;
    }

    if (*datagen) {
      const Dataset data =
          generate_synthetic(parse_synthetic_kind(datagen_kind), datagen_n,
                             datagen_d, datagen_noise, datagen_seed);
      save_dataset(data, datagen_out);
      std::printf("wrote %d examples with %d features to %s\n", data.n(),
                  data.d(), datagen_out.c_str());
      return 0;
    }
  } catch (const ContractError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
