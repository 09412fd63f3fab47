#include "geosteer/commands.hpp"

#include <CLI11.hpp>

#include <functional>
#include <iostream>
#include <map>

using namespace geosteer;

int main(int argc, char** argv) {
  CLI::App app{"Geometry-aware activation steering on fitted manifolds"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  RunConfig flags;
  std::string config_file;
  double alpha = 0.0;

  // Each flag copies itself onto the effective config when given explicitly.
  std::map<std::string, std::function<void(RunConfig&)>> copy;
  auto opt = [&](const std::string& name, auto member, const std::string& help) {
    app.add_option(name, flags.*member, help);
    copy[name] = [&flags, member](RunConfig& c) { c.*member = flags.*member; };
  };
  app.add_option("--config", config_file, "JSON file with any of the flag settings")->check(CLI::ExistingFile);
  opt("--kind", &RunConfig::kind, "cyclic, sequential, grid or cylinder");
  opt("--labels", &RunConfig::labels, "label count for cyclic and sequential spaces");
  opt("--rows", &RunConfig::rows, "rows of a grid or cylinder");
  opt("--cols", &RunConfig::cols, "columns of a grid or cylinder");
  opt("--period", &RunConfig::period, "period of the cyclic axis (0 = one unit per label)");
  opt("--seed", &RunConfig::seed, "random seed");
  opt("--noise", &RunConfig::noise, "activation noise sigma");
  opt("--ambient-dim", &RunConfig::ambient_dim, "surrogate activation dimension");
  opt("--samples", &RunConfig::samples, "samples per label");
  opt("--out", &RunConfig::out, "output directory");
  opt("--dataset", &RunConfig::dataset, "dataset file (default <out>/dataset.json)");
  opt("--manifolds", &RunConfig::manifolds, "manifold file (default <out>/manifolds.json)");
  opt("--pca-dim", &RunConfig::pca_dim, "PCA dimensions for the activation manifold");
  opt("--interior", &RunConfig::interior, "interior points per centroid pair (-1 = automatic)");
  opt("--waypoints", &RunConfig::waypoints, "steering path waypoints K");
  opt("--pairs", &RunConfig::pairs, "maximum number of label pairs");
  opt("--bases", &RunConfig::bases, "base inputs averaged per waypoint");
  opt("--base-sigma", &RunConfig::base_sigma, "scale of the base-input contexts");
  opt("--norm-reg", &RunConfig::norm_reg, "pullback norm regulariser weight");
  app.add_option("--strategies", flags.strategies, "steering strategies (linear, manifold)")->delimiter(',');
  copy["--strategies"] = [&flags](RunConfig& c) { c.strategies = flags.strategies; };
  app.add_option("--alpha", alpha, "conformal target strength for pullback");
  copy["--alpha"] = [&alpha](RunConfig& c) { c.alpha = alpha; };
  app.add_flag("--quiet", flags.quiet, "suppress progress output");
  copy["--quiet"] = [&flags](RunConfig& c) { c.quiet = flags.quiet; };

  const std::map<std::string, std::function<int(const RunConfig&, std::ostream&)>> verbs{
      {"generate", cmd_generate}, {"fit", cmd_fit},           {"isometry", cmd_isometry},
      {"steer", cmd_steer},       {"pullback", cmd_pullback}, {"report", cmd_report}};
  const std::map<std::string, std::string> help{
      {"generate", "write a surrogate dataset"},
      {"fit", "fit activation and behavior manifolds"},
      {"isometry", "distance correlations and MDS between the manifolds"},
      {"steer", "score linear and manifold steering paths"},
      {"pullback", "recover activation paths from behavior targets"},
      {"report", "bundle the report sections in <out>"}};
  for (const auto& [name, fn] : verbs) app.add_subcommand(name, help.at(name));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    RunConfig cfg;
    if (!config_file.empty()) cfg = apply_config(cfg, read_json(config_file));
    for (const auto& [name, fn] : copy) {
      if (app.count(name) > 0) fn(cfg);
    }
    const std::string verb = app.get_subcommands().front()->get_name();
    const int warnings = verbs.at(verb)(cfg, std::cout);
    if (warnings > 0 && !cfg.quiet) std::cerr << verb << ": " << warnings << " warning(s)\n";
    return 0;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
