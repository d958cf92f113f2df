#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "coalcount/errors.hpp"
#include "coalcount/estimator.hpp"
#include "coalcount/incidence.hpp"
#include "coalcount/kingman_sampler.hpp"
#include "coalcount/oracle.hpp"
#include "coalcount/phylogeny.hpp"
#include "coalcount/rng.hpp"
#include "coalcount/simulator.hpp"
#include "coalcount/tajima_sampler.hpp"
#include "coalcount/version.hpp"

namespace {

using coalcount::Resolution;
using ordered_json = nlohmann::ordered_json;

constexpr std::uint64_t progress_every = 10'000;

struct RunConfig {
  std::string input;
  std::string output;
  std::uint64_t n_draws = 10'000;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int workers = 1;
  std::vector<std::string> resolution_names;
  bool filter_ism = false;
  std::uint64_t backtrack_budget = 100'000'000;
  std::uint64_t enum_budget = 10'000'000;
  std::string format = "json";
  // simulate
  int n = 0;
  double mu = 0.0;
  // phylogeny
  std::string variant = "tajima";
};

std::string read_input(const std::string& path) {
  std::ostringstream buffer;
  if (path == "-") {
    buffer << std::cin.rdbuf();
  } else {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw coalcount::ConfigError("cannot open input file '" + path + "'");
    buffer << in.rdbuf();
  }
  return buffer.str();
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw coalcount::ConfigError("cannot open output file '" + path + "'");
  out << text;
}

coalcount::MatrixFormat sniff_format(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (line.find(',') != std::string::npos) return coalcount::MatrixFormat::csv;
    // A plain row is a 0/1 run, optionally preceded by a label and a tab.
    // Anything else (e.g. a bare label column from a zero-site matrix) is csv.
    std::string bits = line;
    if (const auto tab = line.find('\t'); tab != std::string::npos)
      bits = line.substr(tab + 1);
    const auto b = bits.find_first_not_of(" \t\r");
    const auto e = bits.find_last_not_of(" \t\r");
    const bool plain = b != std::string::npos &&
                       bits.substr(b, e - b + 1).find_first_not_of("01") ==
                           std::string::npos;
    return plain ? coalcount::MatrixFormat::plain01 : coalcount::MatrixFormat::csv;
  }
  return coalcount::MatrixFormat::csv;
}

std::uint64_t resolve_seed(const RunConfig& config) {
  if (config.seed_given) return config.seed;
  if (const char* env = std::getenv("COALCOUNT_SEED")) {
    try {
      std::size_t used = 0;
      const std::string text(env);
      const std::uint64_t seed = std::stoull(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
      return seed;
    } catch (const std::exception&) {
      throw coalcount::ConfigError("COALCOUNT_SEED is not a valid 64-bit seed");
    }
  }
  return 0;
}

std::vector<Resolution> resolve_resolutions(const RunConfig& config) {
  if (config.resolution_names.empty())
    return {Resolution::kingman, Resolution::tajima, Resolution::labeled, Resolution::shape};
  std::vector<Resolution> out;
  for (const auto& name : config.resolution_names) {
    const Resolution r = coalcount::resolution_from_name(name);
    if (std::find(out.begin(), out.end(), r) == out.end()) out.push_back(r);
  }
  return out;
}

std::string format_double(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.12g", value);
  return buffer;
}

// Matrix loading shared by count/enumerate/phylogeny: parse, then either
// reject incompatible sites (exit 3) or filter them out.
struct LoadedData {
  coalcount::IncidenceMatrix matrix;
  std::vector<std::string> removed_sites;
};

LoadedData load_matrix(const RunConfig& config) {
  const std::string text = read_input(config.input);
  coalcount::IncidenceMatrix matrix = parse_matrix(text, sniff_format(text));
  const auto conflicts = coalcount::ism_conflicts(matrix);
  if (conflicts.empty()) return {std::move(matrix), {}};
  if (!config.filter_ism) {
    std::cerr << "error: " << conflicts.size()
              << " site pair(s) are incompatible with a perfect phylogeny:\n";
    for (const auto& [a, b] : conflicts) std::cerr << "  " << a << " x " << b << '\n';
    throw coalcount::IsmViolation("incompatible sites (rerun with --filter-ism)",
                                  conflicts.front().first, conflicts.front().second);
  }
  auto filtered = coalcount::filter_to_ism(matrix);
  std::cerr << "note: removed " << filtered.removed_sites.size()
            << " site(s) to restore compatibility\n";
  return {std::move(filtered.matrix), std::move(filtered.removed_sites)};
}

struct DrawOut {
  double log_q = 0.0;
  double log_coefficient = 0.0;
  bool failed = false;
};

struct SideResult {
  coalcount::WeightAccumulator base;
  coalcount::WeightAccumulator projected;
  std::uint64_t failures = 0;
  std::uint64_t elapsed_ms = 0;
};

// Runs draw_fn for indices 0..n_draws-1 and folds the weights in index order,
// so results do not depend on the worker count. One worker streams directly
// into the accumulators; several workers fill per-draw buffers first.
template <typename DrawFn>
SideResult run_side(const char* tag, std::uint64_t n_draws, int workers,
                    Resolution base_resolution, bool want_projection,
                    Resolution projected_resolution, DrawFn&& draw_fn) {
  const auto start = std::chrono::steady_clock::now();
  SideResult side;

  auto fold = [&](const DrawOut& out) {
    if (out.failed) {
      ++side.failures;
      return;
    }
    side.base.add(coalcount::combine(base_resolution, out.log_q, 0.0));
    if (want_projection)
      side.projected.add(
          coalcount::combine(projected_resolution, out.log_q, out.log_coefficient));
  };

  if (workers <= 1) {
    for (std::uint64_t i = 0; i < n_draws; ++i) {
      fold(draw_fn(i));
      if ((i + 1) % progress_every == 0)
        std::cerr << tag << ": " << (i + 1) << "/" << n_draws
                  << " draws, log10 estimate " << format_double(side.base.log_mean() / std::log(10.0))
                  << ", cv2 " << format_double(side.base.cv2()) << '\n';
    }
  } else {
    std::vector<DrawOut> buffer(n_draws);
    std::atomic<std::uint64_t> next{0};
    std::atomic<std::uint64_t> done{0};
    auto work = [&] {
      for (;;) {
        const std::uint64_t begin = next.fetch_add(64);
        if (begin >= n_draws) return;
        const std::uint64_t end = std::min(begin + 64, n_draws);
        for (std::uint64_t i = begin; i < end; ++i) buffer[i] = draw_fn(i);
        const std::uint64_t d = done.fetch_add(end - begin) + (end - begin);
        if (d / progress_every != (d - (end - begin)) / progress_every)
          std::cerr << tag << ": " << d / progress_every * progress_every << "/" << n_draws
                    << " draws\n";
      }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    for (const auto& out : buffer) fold(out);
  }

  side.elapsed_ms = static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() -
                                                            start)
          .count());
  return side;
}

ordered_json estimate_json(const coalcount::CountEstimate& estimate, std::uint64_t seed,
                           std::uint64_t elapsed_ms) {
  ordered_json row;
  row["resolution"] = coalcount::resolution_name(estimate.resolution);
  row["n_draws"] = estimate.n_draws;
  row["estimate"] = estimate.estimate;
  row["log10_estimate"] = estimate.log10_estimate;
  row["std_error"] = estimate.std_error;
  row["rse"] = estimate.rse;
  row["cv2"] = estimate.cv2;
  row["ess"] = estimate.ess;
  row["q_n"] = estimate.q_n;
  row["seed"] = seed;
  row["elapsed_ms"] = elapsed_ms;
  return row;
}

std::string estimates_csv(const std::vector<std::pair<coalcount::CountEstimate, std::uint64_t>>& rows,
                          std::uint64_t seed) {
  std::ostringstream out;
  out << "resolution,n_draws,estimate,log10_estimate,std_error,rse,cv2,ess,q_n,seed,"
         "elapsed_ms\n";
  for (const auto& [estimate, elapsed_ms] : rows) {
    out << coalcount::resolution_name(estimate.resolution) << ',' << estimate.n_draws << ','
        << estimate.estimate << ',' << format_double(estimate.log10_estimate) << ','
        << estimate.std_error << ',' << format_double(estimate.rse) << ','
        << format_double(estimate.cv2) << ',' << format_double(estimate.ess) << ','
        << format_double(estimate.q_n) << ',' << seed << ',' << elapsed_ms << '\n';
  }
  return out.str();
}

int cmd_count(const RunConfig& config) {
  if (config.n_draws < 2) throw coalcount::ConfigError("--n-draws must be at least 2");
  if (config.workers < 1) throw coalcount::ConfigError("--workers must be at least 1");
  if (config.format != "json" && config.format != "csv")
    throw coalcount::ConfigError("--format must be json or csv");

  const std::uint64_t seed = resolve_seed(config);
  const auto resolutions = resolve_resolutions(config);
  auto wanted = [&](Resolution r) {
    return std::find(resolutions.begin(), resolutions.end(), r) != resolutions.end();
  };
  const bool kingman_side = wanted(Resolution::kingman) || wanted(Resolution::labeled);
  const bool tajima_side = wanted(Resolution::tajima) || wanted(Resolution::shape);

  LoadedData loaded = load_matrix(config);
  const coalcount::HaplotypeData data = coalcount::deduplicate(loaded.matrix);
  const coalcount::PerfectPhylogeny phylogeny = coalcount::build_perfect_phylogeny(data);

  SideResult kingman_result, tajima_result;
  if (kingman_side) {
    const coalcount::KingmanPhylogeny tree = coalcount::to_kingman(phylogeny, data);
    const coalcount::StreamFamily family(seed, coalcount::stream_domain::kingman);
    const bool want_labeled = wanted(Resolution::labeled);
    kingman_result = run_side(
        "kingman", config.n_draws, config.workers, Resolution::kingman, want_labeled,
        Resolution::labeled, [&](std::uint64_t i) {
          coalcount::SplitMix64 rng = family.stream(i);
          const coalcount::SampleDraw draw = coalcount::sample_kingman(tree, rng);
          DrawOut out;
          out.log_q = draw.log_q;
          if (want_labeled)
            out.log_coefficient = coalcount::project_to_labeled(draw.topology).log_rankings;
          return out;
        });
  }
  if (tajima_side) {
    const coalcount::TajimaPhylogeny tree = coalcount::to_tajima(phylogeny, data);
    const coalcount::StreamFamily family(seed, coalcount::stream_domain::tajima);
    const bool want_shape = wanted(Resolution::shape);
    tajima_result = run_side(
        "tajima", config.n_draws, config.workers, Resolution::tajima, want_shape,
        Resolution::shape, [&](std::uint64_t i) {
          coalcount::SplitMix64 rng = family.stream(i);
          const coalcount::TajimaDraw draw = coalcount::sample_tajima(tree, rng);
          DrawOut out;
          try {
            out.log_q = coalcount::backtrack_q(tree, draw.chain, config.backtrack_budget).log_q;
          } catch (const coalcount::BudgetExceeded&) {
            out.failed = true;
            return out;
          }
          if (want_shape)
            out.log_coefficient = coalcount::project_to_shape(draw.chain).log_rankings;
          return out;
        });
  }
  const std::uint64_t failures = kingman_result.failures + tajima_result.failures;
  if (failures > 0) {
    std::cerr << "error: " << failures << " of " << config.n_draws
              << " draws exceeded the ordering budget of " << config.backtrack_budget << '\n';
    throw coalcount::BudgetExceeded("ordering budget exhausted during sampling",
                                    config.backtrack_budget);
  }

  std::vector<std::pair<coalcount::CountEstimate, std::uint64_t>> rows;
  for (const Resolution r : {Resolution::kingman, Resolution::tajima, Resolution::labeled,
                             Resolution::shape}) {
    if (!wanted(r)) continue;
    const bool from_kingman = r == Resolution::kingman || r == Resolution::labeled;
    const SideResult& side = from_kingman ? kingman_result : tajima_result;
    const coalcount::WeightAccumulator& acc =
        (r == Resolution::kingman || r == Resolution::tajima) ? side.base : side.projected;
    rows.emplace_back(coalcount::finalize(acc, r), side.elapsed_ms);
  }

  if (config.format == "csv") {
    write_output(config.output, estimates_csv(rows, seed));
    return 0;
  }
  ordered_json doc;
  doc["command"] = "count";
  doc["version"] = coalcount::version_string;
  doc["input"] = config.input;
  doc["n"] = data.n();
  doc["sites"] = loaded.matrix.n_sites();
  doc["haplotypes"] = data.k();
  doc["seed"] = seed;
  doc["n_draws"] = config.n_draws;
  doc["filter_ism"] = config.filter_ism;
  doc["removed_sites"] = ordered_json(loaded.removed_sites);
  doc["backtrack_budget"] = config.backtrack_budget;
  doc["results"] = ordered_json::array();
  for (const auto& [estimate, elapsed_ms] : rows)
    doc["results"].push_back(estimate_json(estimate, seed, elapsed_ms));
  write_output(config.output, doc.dump(2) + "\n");
  return 0;
}

int cmd_simulate(const RunConfig& config) {
  if (config.n < 2) throw coalcount::ConfigError("--n must be at least 2");
  const std::uint64_t seed = resolve_seed(config);
  const coalcount::SimulatedData sim = coalcount::simulate_matrix(config.n, config.mu, seed);

  ordered_json meta;
  meta["n"] = config.n;
  meta["mu"] = config.mu;
  meta["seed"] = seed;
  meta["m"] = sim.n_mutations;
  meta["k"] = coalcount::deduplicate(sim.matrix).k();
  meta["L"] = sim.tree_length;

  const std::string csv = coalcount::write_csv(sim.matrix);
  if (config.output.empty() || config.output == "-") {
    std::cout << csv;
    std::cerr << meta.dump(2) << '\n';
  } else {
    write_output(config.output, csv);
    write_output(config.output + ".meta.json", meta.dump(2) + "\n");
  }
  return 0;
}

int cmd_enumerate(const RunConfig& config) {
  if (config.format != "json" && config.format != "csv")
    throw coalcount::ConfigError("--format must be json or csv");
  LoadedData loaded = load_matrix(config);
  const coalcount::HaplotypeData data = coalcount::deduplicate(loaded.matrix);
  const coalcount::PerfectPhylogeny phylogeny = coalcount::build_perfect_phylogeny(data);
  const coalcount::KingmanPhylogeny tree = coalcount::to_kingman(phylogeny, data);

  coalcount::ExactCounts counts;
  try {
    counts = coalcount::enumerate_compatible(tree, config.enum_budget);
  } catch (const coalcount::BudgetExceeded& e) {
    std::cerr << "error: exact count unavailable within --enum-budget ("
              << config.enum_budget << "): " << e.what() << '\n';
    throw;
  }

  if (config.format == "csv") {
    std::ostringstream out;
    out << "resolution,count\n"
        << "kingman," << counts.kingman.str() << "\n"
        << "tajima," << counts.tajima.str() << "\n"
        << "labeled," << counts.labeled.str() << "\n"
        << "shape," << counts.shape.str() << "\n";
    write_output(config.output, out.str());
    return 0;
  }
  ordered_json doc;
  doc["command"] = "enumerate";
  doc["version"] = coalcount::version_string;
  doc["input"] = config.input;
  doc["n"] = data.n();
  doc["haplotypes"] = data.k();
  doc["removed_sites"] = ordered_json(loaded.removed_sites);
  doc["counts"]["kingman"] = counts.kingman.str();
  doc["counts"]["tajima"] = counts.tajima.str();
  doc["counts"]["labeled"] = counts.labeled.str();
  doc["counts"]["shape"] = counts.shape.str();
  write_output(config.output, doc.dump(2) + "\n");
  return 0;
}

int cmd_unconstrained(const RunConfig& config) {
  if (config.n < 1) throw coalcount::ConfigError("--n must be at least 1");
  if (config.format != "json" && config.format != "csv")
    throw coalcount::ConfigError("--format must be json or csv");
  const coalcount::ExactCounts counts = coalcount::closed_form_unconstrained(config.n);
  if (config.format == "csv") {
    std::ostringstream out;
    out << "resolution,count\n"
        << "kingman," << counts.kingman.str() << "\n"
        << "tajima," << counts.tajima.str() << "\n"
        << "labeled," << counts.labeled.str() << "\n"
        << "shape," << counts.shape.str() << "\n";
    write_output(config.output, out.str());
    return 0;
  }
  ordered_json doc;
  doc["command"] = "unconstrained";
  doc["version"] = coalcount::version_string;
  doc["n"] = config.n;
  doc["counts"]["kingman"] = counts.kingman.str();
  doc["counts"]["tajima"] = counts.tajima.str();
  doc["counts"]["labeled"] = counts.labeled.str();
  doc["counts"]["shape"] = counts.shape.str();
  write_output(config.output, doc.dump(2) + "\n");
  return 0;
}

int cmd_phylogeny(const RunConfig& config) {
  if (config.format != "json" && config.format != "dot")
    throw coalcount::ConfigError("--format must be json or dot");
  LoadedData loaded = load_matrix(config);
  const coalcount::HaplotypeData data = coalcount::deduplicate(loaded.matrix);
  const coalcount::PerfectPhylogeny phylogeny = coalcount::build_perfect_phylogeny(data);
  const coalcount::TreeFormat format =
      config.format == "dot" ? coalcount::TreeFormat::dot : coalcount::TreeFormat::json;

  std::string text;
  if (config.variant == "perfect") {
    text = coalcount::export_phylogeny(phylogeny, format);
  } else if (config.variant == "kingman") {
    text = coalcount::export_phylogeny(coalcount::to_kingman(phylogeny, data), format);
  } else if (config.variant == "tajima") {
    text = coalcount::export_phylogeny(coalcount::to_tajima(phylogeny, data), format);
  } else {
    throw coalcount::ConfigError("--variant must be perfect, kingman, or tajima");
  }
  write_output(config.output, text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Topology counting for constrained genealogies"};
  app.require_subcommand(1);
  app.set_version_flag("--version", coalcount::version_string);

  RunConfig config;

  auto add_io = [&](CLI::App* cmd, bool input_required) {
    auto* input = cmd->add_option("--input", config.input, "Matrix file, or - for stdin");
    if (input_required) input->required();
    cmd->add_option("--output", config.output, "Output file (default stdout)");
  };
  auto add_seed = [&](CLI::App* cmd) {
    cmd->add_option("--seed", config.seed, "64-bit seed (default: $COALCOUNT_SEED, then 0)")
        ->each([&](const std::string&) { config.seed_given = true; });
  };

  CLI::App* count = app.add_subcommand("count", "Estimate topology counts by importance sampling");
  add_io(count, true);
  add_seed(count);
  count->add_option("--n-draws", config.n_draws, "Sample size per chain (default 10000)");
  count->add_option("--workers", config.workers, "Sampling threads (default 1)");
  count->add_option("--resolutions", config.resolution_names,
                    "Comma-separated subset of kingman,tajima,labeled,shape (default all)")
      ->delimiter(',');
  count->add_flag("--filter-ism", config.filter_ism,
                  "Drop conflicting sites instead of failing");
  count->add_option("--backtrack-budget", config.backtrack_budget,
                    "Ordering-search expansions per draw (default 1e8)");
  count->add_option("--format", config.format, "json or csv (default json)");

  CLI::App* simulate = app.add_subcommand("simulate", "Simulate a binary incidence matrix");
  simulate->add_option("--n", config.n, "Sample size")->required();
  simulate->add_option("--mu", config.mu, "Mutation rate")->required();
  add_seed(simulate);
  simulate->add_option("--output", config.output,
                       "CSV path; metadata goes to <output>.meta.json");

  CLI::App* enumerate = app.add_subcommand("enumerate", "Exact counts by exhaustive enumeration");
  add_io(enumerate, true);
  enumerate->add_flag("--filter-ism", config.filter_ism,
                      "Drop conflicting sites instead of failing");
  enumerate->add_option("--enum-budget", config.enum_budget,
                        "Maximum enumerated sequences (default 1e7)");
  enumerate->add_option("--format", config.format, "json or csv (default json)");

  CLI::App* unconstrained =
      app.add_subcommand("unconstrained", "Closed-form counts without data constraints");
  unconstrained->add_option("--n", config.n, "Sample size")->required();
  unconstrained->add_option("--output", config.output, "Output file (default stdout)");
  unconstrained->add_option("--format", config.format, "json or csv (default json)");

  CLI::App* phylogeny = app.add_subcommand("phylogeny", "Build and export the data's phylogeny");
  add_io(phylogeny, true);
  phylogeny->add_flag("--filter-ism", config.filter_ism,
                      "Drop conflicting sites instead of failing");
  phylogeny->add_option("--variant", config.variant, "perfect, kingman, or tajima (default)");
  phylogeny->add_option("--format", config.format, "json or dot (default json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 5;
  }

  try {
    if (count->parsed()) return cmd_count(config);
    if (simulate->parsed()) return cmd_simulate(config);
    if (enumerate->parsed()) return cmd_enumerate(config);
    if (unconstrained->parsed()) return cmd_unconstrained(config);
    if (phylogeny->parsed()) return cmd_phylogeny(config);
  } catch (const coalcount::ParseError& e) {
    std::cerr << "error: " << e.what();
    if (e.line > 0) std::cerr << " (line " << e.line << (e.column > 0 ? ", column " + std::to_string(e.column) : "") << ")";
    std::cerr << '\n';
    return 2;
  } catch (const coalcount::IsmViolation& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const coalcount::BudgetExceeded& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const coalcount::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 5;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
