// ictsurf command-line front end.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "ictsurf.hpp"

namespace {

using namespace ictsurf;

struct ModelFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> m;
  std::optional<std::string> scheme;
  std::optional<std::string> encoder;
  std::optional<std::size_t> risks;
  std::optional<std::size_t> max_epochs;

  void attach(CLI::App* app, bool with_grid = true) {
    app->add_option("--config", config_path, "JSON training configuration");
    app->add_option("--seed", seed, "random seed");
    if (with_grid) {
      app->add_option("--m", m, "grid points per sample");
      app->add_option("--scheme", scheme, "discretization scheme: A (per-sample) or B (global)");
    }
    app->add_option("--encoder", encoder, "time encoding: raw, pe or t2v");
    app->add_option("--risks", risks, "number of risks K");
    app->add_option("--max-epochs", max_epochs, "epoch limit");
  }

  TrainConfig resolve(const Schema& schema) const {
    TrainConfig c;
    c.risks = schema.risks;
    if (!config_path.empty()) c = TrainConfig::from_json(read_json(config_path), c);
    if (seed) c.seed = *seed;
    if (m) c.grid_points = *m;
    if (scheme) c.scheme = parse_scheme(*scheme);
    if (encoder) c.encoding = parse_encoding(*encoder);
    if (risks) c.risks = *risks;
    if (max_epochs) c.max_epochs = *max_epochs;
    c.validate();
    return c;
  }
};

template <class T, class F>
std::vector<T> split_list(const std::string& text, F parse) {
  std::vector<T> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = text.find(',', pos);
    out.push_back(parse(text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos)));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::size_t parse_count(const std::string& s) {
  const auto v = parse_number(s);
  if (!v || *v < 1 || *v != std::floor(*v)) throw InputError("expected a positive integer, got '" + s + "'");
  return static_cast<std::size_t>(*v);
}

}  // namespace

int main(int argc, char** argv) {
  tune_allocator();
  CLI::App app{"Continuous-time neural survival analysis with numerical integration"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::string data, schema, out, model, kind = "nonlinear", mesh = "101:1", m_list, scheme_list = "A,B";
  std::size_t n = 1000, row = 0, folds = 5;
  std::uint64_t sim_seed = 0;
  bool parallel = false;

  auto* sim = app.add_subcommand("simulate", "generate a synthetic dataset");
  sim->add_option("--kind", kind, "nonlinear or competing");
  sim->add_option("--n", n, "number of samples")->check(CLI::PositiveNumber);
  sim->add_option("--seed", sim_seed, "random seed");
  sim->add_option("--out", out, "output CSV")->required();
  sim->add_option("--schema", schema, "schema output path (default <out>.schema.json)");

  ModelFlags train_flags;
  auto* tr = app.add_subcommand("train", "train with the holdout protocol");
  tr->add_option("--data", data, "CSV dataset")->required();
  tr->add_option("--schema", schema, "schema JSON")->required();
  tr->add_option("--out", out, "checkpoint path")->required();
  train_flags.attach(tr);

  auto* ev = app.add_subcommand("evaluate", "score a checkpoint on a dataset");
  ev->add_option("--model", model, "checkpoint")->required();
  ev->add_option("--data", data, "CSV dataset")->required();
  ev->add_option("--schema", schema, "schema JSON")->required();
  ev->add_option("--out", out, "metric report JSON")->required();

  auto* pr = app.add_subcommand("predict", "survival / incidence curves for one covariate row");
  pr->add_option("--model", model, "checkpoint")->required();
  pr->add_option("--data", data, "CSV with the covariate columns")->required();
  pr->add_option("--row", row, "0-based row of --data");
  pr->add_option("--mesh", mesh, "count:max or a comma-separated list starting at 0");
  pr->add_option("--out", out, "output table")->required();

  ModelFlags cv_flags;
  auto* cv = app.add_subcommand("cv", "holdout + k-fold cross-validation");
  cv->add_option("--data", data, "CSV dataset")->required();
  cv->add_option("--schema", schema, "schema JSON")->required();
  cv->add_option("--out", out, "summary table")->required();
  cv->add_option("--folds", folds, "number of folds")->check(CLI::Range(2, 1000));
  cv->add_flag("--parallel", parallel, "train folds concurrently");
  cv_flags.attach(cv);

  ModelFlags ex_flags;
  auto* ex = app.add_subcommand("experiment", "Ctd across grid sizes and discretization schemes");
  ex->add_option("--data", data, "CSV dataset")->required();
  ex->add_option("--schema", schema, "schema JSON")->required();
  ex->add_option("--out", out, "results table")->required();
  ex->add_option("--m", m_list, "comma-separated grid sizes (default 3,5,10,30,50,100)");
  ex->add_option("--scheme", scheme_list, "comma-separated schemes");
  ex->add_option("--folds", folds, "number of folds")->check(CLI::Range(2, 1000));
  ex->add_flag("--parallel", parallel, "train folds concurrently");
  ex_flags.attach(ex, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (sim->parsed()) {
      cmd_simulate(parse_simulation_kind(kind), n, sim_seed, out, schema);
    } else if (tr->parsed()) {
      cmd_train(data, schema, train_flags.resolve(load_schema(schema)), out);
    } else if (ev->parsed()) {
      cmd_evaluate(model, data, schema, out);
    } else if (pr->parsed()) {
      cmd_predict(model, data, row, mesh, out);
    } else if (cv->parsed()) {
      CvOptions options;
      options.folds = folds;
      options.parallel = parallel;
      cmd_cv(data, schema, cv_flags.resolve(load_schema(schema)), out, options);
    } else if (ex->parsed()) {
      CvOptions options;
      options.folds = folds;
      options.parallel = parallel;
      const std::vector<std::size_t> sizes =
          m_list.empty() ? default_experiment_grid_sizes() : split_list<std::size_t>(m_list, parse_count);
      const std::vector<GridScheme> schemes =
          split_list<GridScheme>(scheme_list, [](const std::string& s) { return parse_scheme(s); });
      cmd_experiment(data, schema, ex_flags.resolve(load_schema(schema)), sizes, schemes, out, options);
    }
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
