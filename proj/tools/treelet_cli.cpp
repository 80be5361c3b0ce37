// Command-line front end: data generation, treelet fitting, transforms,
// cross-validated model selection, screening pipelines, method benchmarks,
// and bootstrap stability, all with reproducible seeded runs and plot-ready
// CSV output.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <algorithm>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "treelet/treelet_all.hpp"

namespace fs = std::filesystem;
using namespace treelet;

namespace {

std::size_t default_threads() {
  if (const char* env = std::getenv("TREELET_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<std::size_t>(v);
  }
  return 1;
}

std::vector<std::size_t> parse_size_list(const std::string& text, const char* what) {
  std::vector<std::size_t> out;
  std::istringstream in(text);
  std::string field;
  while (std::getline(in, field, ',')) {
    char* end = nullptr;
    const long v = std::strtol(field.c_str(), &end, 10);
    if (end == field.c_str() || *end != '\0' || v < 0)
      throw config_error(std::string(what) + ": bad list entry '" + field + "'");
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw config_error(std::string(what) + ": empty list");
  return out;
}

/// Block layout flag: either "KxS" (K blocks of size S) or a comma list.
std::vector<std::size_t> parse_blocks(const std::string& text) {
  const auto x = text.find('x');
  if (x != std::string::npos) {
    const long count = std::strtol(text.substr(0, x).c_str(), nullptr, 10);
    const long size = std::strtol(text.substr(x + 1).c_str(), nullptr, 10);
    if (count < 1 || size < 1) throw config_error("blocks: bad KxS form '" + text + "'");
    return std::vector<std::size_t>(static_cast<std::size_t>(count),
                                    static_cast<std::size_t>(size));
  }
  return parse_size_list(text, "blocks");
}

SimilarityKind parse_similarity(const std::string& text) {
  if (text == "correlation" || text == "abs_correlation")
    return SimilarityKind::abs_correlation;
  if (text == "covariance" || text == "abs_covariance")
    return SimilarityKind::abs_covariance;
  throw config_error("similarity: expected correlation or covariance");
}

std::string join_sizes(const std::vector<std::size_t>& v) {
  std::ostringstream out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out << ',';
    out << v[i];
  }
  return out.str();
}

/// Every run drops its fully-resolved settings next to its outputs.
void write_config(const std::string& path, const std::string& subcommand,
                  std::map<std::string, std::string> entries) {
  entries["subcommand"] = subcommand;
  write_metadata(path, entries);
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw io_error("cannot create directory: " + dir);
}

// ---------------------------------------------------------------------------
// gen

struct GenArgs {
  std::string blocks = "1x2";
  std::string config;
  std::size_t p = 0;  // 0: sum of block sizes
  double rho = 0.0;
  double across = 0.0;
  double var = 1.0;
  std::size_t n = 100;
  std::uint64_t seed = 0;
  std::string out;
};

int run_gen(const GenArgs& args) {
  BlockCovSpec spec;
  spec.block_sizes = parse_blocks(args.blocks);
  std::size_t total = 0;
  for (std::size_t s : spec.block_sizes) total += s;
  spec.p = args.p == 0 ? total : args.p;
  spec.within_corr = args.rho;
  spec.across_corr = args.across;
  spec.noise_var = args.var;

  const SymMatrix sigma = gen_block_cov(spec);
  const DataMatrix x = mvn_sample(sigma, args.n, args.seed);
  write_matrix(args.out, x);

  std::ostringstream spec_text;
  spec_text << "blocks=" << join_sizes(spec.block_sizes) << ";p=" << spec.p
            << ";rho=" << args.rho << ";across=" << args.across
            << ";var=" << args.var << ";n=" << args.n;
  write_metadata(args.out + ".meta", {{"generator", kGeneratorName},
                                      {"seed", std::to_string(args.seed)},
                                      {"spec", spec_text.str()}});
  write_config(args.out + ".config", "gen",
               {{"blocks", args.blocks},
                {"p", std::to_string(spec.p)},
                {"rho", detail::format_double(args.rho)},
                {"across", detail::format_double(args.across)},
                {"var", detail::format_double(args.var)},
                {"n", std::to_string(args.n)},
                {"seed", std::to_string(args.seed)},
                {"out", args.out}});
  return 0;
}

// ---------------------------------------------------------------------------
// fit

struct FitArgs {
  std::string in;
  std::string config;
  std::int64_t level = -1;  // -1: completion (p-1)
  std::string similarity = "correlation";
  std::string out;
};

int run_fit(const FitArgs& args) {
  const NamedMatrix input = read_matrix(args.in);
  const std::size_t p = input.data.cols();
  const std::size_t level =
      args.level < 0 ? p - 1 : static_cast<std::size_t>(args.level);
  const TreeletModel model = fit(input.data, level, parse_similarity(args.similarity));
  save_model(model, args.out);
  write_config(args.out + ".config", "fit",
               {{"in", args.in},
                {"level", std::to_string(level)},
                {"similarity", to_string(model.similarity_kind())},
                {"out", args.out}});
  return 0;
}

// ---------------------------------------------------------------------------
// transform / inverse

struct TransformArgs {
  std::string model;
  std::string config;
  std::string in;
  std::int64_t level = -1;  // -1: the model's full height
  std::size_t k = 0;        // 0: keep all coefficients
  std::string out;
};

int run_transform(const TransformArgs& args) {
  const TreeletModel model = load_model(args.model);
  const NamedMatrix input = read_matrix(args.in);
  if (input.data.cols() != model.p())
    throw shape_error("transform: input has " + std::to_string(input.data.cols()) +
                      " columns but the model expects " + std::to_string(model.p()));
  const std::size_t level =
      args.level < 0 ? model.max_level() : static_cast<std::size_t>(args.level);

  const DataMatrix coeffs = forward(model, level, input.data);
  if (args.k == 0) {
    std::vector<std::string> names(model.p());
    for (std::size_t j = 0; j < model.p(); ++j) names[j] = "c" + std::to_string(j);
    write_matrix(args.out, coeffs, names);
  } else {
    const OrthonormalBasis best = best_k_basis(model, input.data, level, args.k);
    DataMatrix selected(coeffs.rows(), args.k);
    std::vector<std::string> names(args.k);
    std::ostringstream indices;
    indices << "index,kind,level\n";
    for (std::size_t j = 0; j < args.k; ++j) {
      const BasisVectorLabel& label = best.labels[j];
      for (std::size_t i = 0; i < coeffs.rows(); ++i)
        selected(i, j) = coeffs(i, label.coord);
      names[j] = "c" + std::to_string(label.coord);
      indices << label.coord << ','
              << (label.kind == BasisVectorKind::sum ? "sum" : "difference") << ','
              << label.level << '\n';
    }
    write_matrix(args.out, selected, names);
    write_file(args.out + ".indices", indices.str());
  }
  write_config(args.out + ".config", "transform",
               {{"model", args.model},
                {"in", args.in},
                {"level", std::to_string(level)},
                {"k", std::to_string(args.k)},
                {"out", args.out}});
  return 0;
}

struct InverseArgs {
  std::string model;
  std::string config;
  std::string in;
  std::int64_t level = -1;
  std::string out;
};

int run_inverse(const InverseArgs& args) {
  const TreeletModel model = load_model(args.model);
  const NamedMatrix coeffs = read_matrix(args.in);
  if (coeffs.data.cols() != model.p())
    throw shape_error("inverse: need all " + std::to_string(model.p()) +
                      " coefficient columns");
  const std::size_t level =
      args.level < 0 ? model.max_level() : static_cast<std::size_t>(args.level);
  write_matrix(args.out, inverse(model, level, coeffs.data));
  write_config(args.out + ".config", "inverse",
               {{"model", args.model},
                {"in", args.in},
                {"level", std::to_string(level)},
                {"out", args.out}});
  return 0;
}

// ---------------------------------------------------------------------------
// select

std::vector<double> read_outcome(const std::string& path, std::size_t n) {
  const NamedMatrix m = read_matrix(path);
  if (m.data.cols() != 1 || m.data.rows() != n)
    throw shape_error("outcome file must hold exactly one column of length " +
                      std::to_string(n));
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = m.data(i, 0);
  return y;
}

struct SelectArgs {
  std::string in;
  std::string config;
  std::string outcome;
  std::string criterion = "energy";
  std::string levels;  // empty: p-1 only
  std::string ks;      // empty: 1..min(p, 10)
  std::size_t folds = 5;
  std::uint64_t seed = 0;
  std::string predictor = "ridge";
  double lambda = 1e-3;
  std::size_t knn_k = 5;
  std::string similarity = "correlation";
  std::size_t threads = default_threads();
  std::string out;
};

GridSpec make_grid(const SelectArgs& args, std::size_t p) {
  GridSpec grid;
  grid.levels = args.levels.empty() ? std::vector<std::size_t>{p - 1}
                                    : parse_size_list(args.levels, "levels");
  if (args.ks.empty()) {
    for (std::size_t k = 1; k <= std::min<std::size_t>(p, 10); ++k)
      grid.ks.push_back(k);
  } else {
    grid.ks = parse_size_list(args.ks, "ks");
  }
  grid.folds = args.folds;
  grid.seed = args.seed;
  return grid;
}

int run_select(const SelectArgs& args) {
  const NamedMatrix input = read_matrix(args.in);
  const GridSpec grid = make_grid(args, input.data.cols());
  const SimilarityKind kind = parse_similarity(args.similarity);

  SelectionReport report;
  if (args.criterion == "energy") {
    report = cv_energy(input.data, grid, kind, args.threads);
  } else if (args.criterion == "risk") {
    if (args.outcome.empty())
      throw config_error("select: --criterion risk requires --outcome");
    const std::vector<double> y = read_outcome(args.outcome, input.data.rows());
    const PredictorKind predictor =
        args.predictor == "knn" ? PredictorKind::knn : PredictorKind::ridge;
    PredictorParams params;
    params.ridge_lambda = args.lambda;
    params.knn_k = args.knn_k;
    report = cv_risk(input.data, y, grid, predictor, kind, params, args.threads);
  } else {
    throw config_error("select: criterion must be energy or risk");
  }

  write_file(args.out, report_to_csv(report));
  write_config(args.out + ".config", "select",
               {{"in", args.in},
                {"outcome", args.outcome},
                {"criterion", args.criterion},
                {"levels", join_sizes(grid.levels)},
                {"ks", join_sizes(grid.ks)},
                {"folds", std::to_string(grid.folds)},
                {"seed", std::to_string(grid.seed)},
                {"predictor", args.predictor},
                {"lambda", detail::format_double(args.lambda)},
                {"knn_k", std::to_string(args.knn_k)},
                {"similarity", to_string(kind)},
                {"chosen_L", std::to_string(report.chosen_level)},
                {"chosen_K", std::to_string(report.chosen_k)},
                {"out", args.out}});
  return 0;
}

// ---------------------------------------------------------------------------
// reduce

struct ReduceArgs {
  std::string in;
  std::string config;
  std::string outcome;
  std::size_t m = 0;
  std::string levels;
  std::string ks;
  std::size_t folds = 5;
  std::uint64_t seed = 0;
  std::string predictor = "ridge";
  double lambda = 1e-3;
  std::size_t knn_k = 5;
  std::string similarity = "correlation";
  std::size_t threads = default_threads();
  std::string out_dir;
};

int run_reduce(const ReduceArgs& args) {
  const NamedMatrix input = read_matrix(args.in);
  const std::size_t p = input.data.cols();
  if (args.m < 1 || args.m > p)
    throw treelet::range_error("reduce: m must be in [1, p]");
  const std::vector<double> y = read_outcome(args.outcome, input.data.rows());
  ensure_dir(args.out_dir);

  // 1. univariate screen down to m variables (kept in screen rank order)
  const std::vector<std::size_t> picked = univariate_screen(input.data, y, args.m);
  DataMatrix reduced(input.data.rows(), args.m);
  std::vector<std::string> reduced_names(args.m);
  std::ostringstream screen_csv;
  screen_csv << "rank,index,name\n";
  for (std::size_t j = 0; j < args.m; ++j) {
    for (std::size_t i = 0; i < input.data.rows(); ++i)
      reduced(i, j) = input.data(i, picked[j]);
    reduced_names[j] = input.names[picked[j]];
    screen_csv << j << ',' << picked[j] << ',' << input.names[picked[j]] << '\n';
  }
  write_file(args.out_dir + "/screened.csv", screen_csv.str());

  // 2. choose (L, K) by cross-validated prediction risk on the reduced data
  SelectArgs select_args;
  select_args.levels = args.levels;
  select_args.ks = args.ks;
  select_args.folds = args.folds;
  select_args.seed = args.seed;
  const GridSpec grid = make_grid(select_args, args.m);
  const SimilarityKind kind = parse_similarity(args.similarity);
  const PredictorKind predictor =
      args.predictor == "knn" ? PredictorKind::knn : PredictorKind::ridge;
  PredictorParams params;
  params.ridge_lambda = args.lambda;
  params.knn_k = args.knn_k;
  const SelectionReport report =
      cv_risk(reduced, y, grid, predictor, kind, params, args.threads);
  write_file(args.out_dir + "/selection.csv", report_to_csv(report));

  // 3. refit on all rows at the chosen cell and emit the K features
  const TreeletModel model = fit(reduced, report.chosen_level, kind);
  const OrthonormalBasis best =
      best_k_basis(model, reduced, report.chosen_level, report.chosen_k);
  const DataMatrix coeffs = forward(model, report.chosen_level, reduced);
  DataMatrix features(reduced.rows(), report.chosen_k);
  std::vector<std::string> feature_names(report.chosen_k);
  for (std::size_t j = 0; j < report.chosen_k; ++j) {
    for (std::size_t i = 0; i < reduced.rows(); ++i)
      features(i, j) = coeffs(i, best.labels[j].coord);
    feature_names[j] = "f" + std::to_string(best.labels[j].coord);
  }
  write_matrix(args.out_dir + "/features.csv", features, feature_names);
  save_model(model, args.out_dir + "/model.txt");

  write_config(args.out_dir + "/run.config", "reduce",
               {{"in", args.in},
                {"outcome", args.outcome},
                {"m", std::to_string(args.m)},
                {"levels", join_sizes(grid.levels)},
                {"ks", join_sizes(grid.ks)},
                {"folds", std::to_string(grid.folds)},
                {"seed", std::to_string(grid.seed)},
                {"predictor", args.predictor},
                {"lambda", detail::format_double(args.lambda)},
                {"knn_k", std::to_string(args.knn_k)},
                {"similarity", to_string(kind)},
                {"chosen_L", std::to_string(report.chosen_level)},
                {"chosen_K", std::to_string(report.chosen_k)},
                {"out_dir", args.out_dir}});
  return 0;
}

// ---------------------------------------------------------------------------
// bench

struct BenchArgs {
  std::string config;
  std::size_t k0 = 4;
  std::size_t block_size = 5;
  std::size_t p = 50;
  double noise_sd = 0.7;
  double amplitude = std::sqrt(5.0);  // per-variable planted loading of 1
  std::string n_list = "25,50,100";
  std::size_t seeds = 30;
  std::uint64_t seed = 0;
  std::string similarity = "correlation";
  std::size_t threads = default_threads();
  std::string out;
};

int run_bench(const BenchArgs& args) {
  const std::vector<std::size_t> n_values = parse_size_list(args.n_list, "n-list");
  const SimilarityKind kind = parse_similarity(args.similarity);

  LoadingPattern pattern;
  pattern.block_sizes.assign(args.k0, args.block_size);
  pattern.amplitudes.assign(args.k0, args.amplitude);
  pattern.validate(args.p);

  struct Row {
    std::string method;
    std::size_t n, seed;
    double angle;
  };
  const std::size_t cells = n_values.size() * args.seeds;
  std::vector<std::array<Row, 2>> rows(cells);

  parallel_for(cells, args.threads, [&](std::size_t cell) {
    const std::size_t ni = cell / args.seeds;
    const std::size_t s = cell % args.seeds;
    const std::size_t n = n_values[ni];
    const std::uint64_t data_seed = args.seed + 1009 * s + n;
    const LatentFactorData data =
        gen_latent_factor(n, args.p, pattern, args.noise_sd, data_seed);

    const TreeletModel model = fit(data.x, args.p - 1, kind);
    const OrthonormalBasis best = best_k_basis(model, data.x, args.p - 1, args.k0);
    const double treelet_angle = subspace_angle(best.vectors, data.loadings);

    const PcaResult pc = pca(data.x);
    DataMatrix top(args.p, args.k0);
    for (std::size_t i = 0; i < args.p; ++i)
      for (std::size_t k = 0; k < args.k0; ++k) top(i, k) = pc.eigenvectors(i, k);
    const double pca_angle = subspace_angle(top, data.loadings);

    rows[cell] = {Row{"treelet", n, s, treelet_angle}, Row{"pca", n, s, pca_angle}};
  });

  std::ostringstream csv;
  csv << "method,n,seed,angle\n";
  for (const auto& pair : rows)
    for (const Row& row : pair)
      csv << row.method << ',' << row.n << ',' << row.seed << ','
          << detail::format_double(row.angle) << '\n';
  write_file(args.out, csv.str());

  write_config(args.out + ".config", "bench",
               {{"k0", std::to_string(args.k0)},
                {"block_size", std::to_string(args.block_size)},
                {"p", std::to_string(args.p)},
                {"noise_sd", detail::format_double(args.noise_sd)},
                {"amplitude", detail::format_double(args.amplitude)},
                {"n_list", args.n_list},
                {"seeds", std::to_string(args.seeds)},
                {"seed", std::to_string(args.seed)},
                {"similarity", to_string(kind)},
                {"generator", kGeneratorName},
                {"data_seed_rule", "seed + 1009*replicate + n"},
                {"level", "completion"},
                {"out", args.out}});
  return 0;
}

// ---------------------------------------------------------------------------
// stability

struct StabilityArgs {
  std::string in;
  std::string config;
  std::size_t replicates = 100;
  std::int64_t level = -1;
  std::uint64_t seed = 0;
  std::string similarity = "correlation";
  std::size_t threads = default_threads();
  std::string out_dir;
};

int run_stability(const StabilityArgs& args) {
  const NamedMatrix input = read_matrix(args.in);
  const std::size_t p = input.data.cols();
  const std::size_t level =
      args.level < 0 ? p - 1 : static_cast<std::size_t>(args.level);
  const SimilarityKind kind = parse_similarity(args.similarity);
  ensure_dir(args.out_dir);

  const StabilityReport report =
      bootstrap_stability(input.data, args.replicates, level, args.seed, kind,
                          args.threads);

  std::ostringstream agreement;
  agreement << "level,agreement\n";
  for (std::size_t l = 0; l < report.agreement.size(); ++l)
    agreement << (l + 1) << ',' << detail::format_double(report.agreement[l]) << '\n';
  write_file(args.out_dir + "/agreement.csv", agreement.str());

  std::ostringstream comerge;
  comerge << "i,j,frequency\n";
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i + 1; j < p; ++j)
      comerge << i << ',' << j << ',' << detail::format_double(report.co_merge(i, j))
              << '\n';
  write_file(args.out_dir + "/comerge.csv", comerge.str());

  write_config(args.out_dir + "/run.config", "stability",
               {{"in", args.in},
                {"replicates", std::to_string(args.replicates)},
                {"level", std::to_string(level)},
                {"seed", std::to_string(args.seed)},
                {"similarity", to_string(kind)},
                {"out_dir", args.out_dir}});
  return 0;
}

void add_config_flag(CLI::App* sub, std::string& config_path) {
  sub->add_option("--config", config_path,
                  "flat key=value config file; explicit flags override");
}

void add_threads_and_config(CLI::App* sub, std::size_t& threads,
                            std::string& config_path) {
  sub->add_option("--threads", threads, "worker thread cap");
  add_config_flag(sub, config_path);
}

/// Expands `--config FILE` into flags inserted right after the subcommand.
/// Keys already given explicitly on the command line are skipped, so flags
/// always win over the file.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::string config_path;
  std::size_t sub_pos = std::string::npos;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (sub_pos == std::string::npos && !args[i].empty() && args[i][0] != '-') {
      sub_pos = i;
      continue;
    }
    if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
  }
  if (config_path.empty() || sub_pos == std::string::npos) return args;

  std::set<std::string> given;
  for (const std::string& arg : args) {
    if (arg.rfind("--", 0) != 0) continue;
    const auto eq = arg.find('=');
    given.insert(eq == std::string::npos ? arg.substr(2) : arg.substr(2, eq - 2));
  }

  std::vector<std::string> expanded(args.begin(), args.begin() + sub_pos + 1);
  for (const auto& [key, value] : read_metadata(config_path)) {
    if (key == "config" || given.count(key)) continue;
    expanded.push_back("--" + key);
    expanded.push_back(value);
  }
  expanded.insert(expanded.end(), args.begin() + sub_pos + 1, args.end());
  return expanded;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"treelet: multiscale orthonormal transforms for unordered data"};
  app.require_subcommand(1);

  GenArgs gen_args;
  CLI::App* cmd_gen = app.add_subcommand("gen", "generate block-covariance Gaussian data");
  cmd_gen->add_option("--blocks", gen_args.blocks, "block layout: KxS or comma list")->required();
  cmd_gen->add_option("--p", gen_args.p, "total variables (default: sum of blocks)");
  cmd_gen->add_option("--rho", gen_args.rho, "within-block correlation");
  cmd_gen->add_option("--across", gen_args.across, "across-block correlation");
  cmd_gen->add_option("--var", gen_args.var, "per-variable variance");
  cmd_gen->add_option("--n", gen_args.n, "sample count");
  cmd_gen->add_option("--seed", gen_args.seed, "random seed");
  cmd_gen->add_option("--out", gen_args.out, "output matrix (.csv or binary)")->required();
  add_config_flag(cmd_gen, gen_args.config);

  FitArgs fit_args;
  CLI::App* cmd_fit = app.add_subcommand("fit", "fit a treelet model");
  cmd_fit->add_option("--in", fit_args.in, "input matrix")->required();
  cmd_fit->add_option("--level", fit_args.level, "merge count L (default: p-1)");
  cmd_fit->add_option("--similarity", fit_args.similarity, "correlation | covariance");
  cmd_fit->add_option("--out", fit_args.out, "output model file")->required();
  add_config_flag(cmd_fit, fit_args.config);

  TransformArgs transform_args;
  CLI::App* cmd_transform = app.add_subcommand("transform", "project data onto the treelet basis");
  cmd_transform->add_option("--model", transform_args.model, "model file")->required();
  cmd_transform->add_option("--in", transform_args.in, "input matrix")->required();
  cmd_transform->add_option("--level", transform_args.level, "tree height (default: model height)");
  cmd_transform->add_option("--k", transform_args.k, "keep only the best K coefficients");
  cmd_transform->add_option("--out", transform_args.out, "output coefficient matrix")->required();
  add_config_flag(cmd_transform, transform_args.config);

  InverseArgs inverse_args;
  CLI::App* cmd_inverse = app.add_subcommand("inverse", "map coefficients back to data space");
  cmd_inverse->add_option("--model", inverse_args.model, "model file")->required();
  cmd_inverse->add_option("--in", inverse_args.in, "coefficient matrix")->required();
  cmd_inverse->add_option("--level", inverse_args.level, "tree height (default: model height)");
  cmd_inverse->add_option("--out", inverse_args.out, "output matrix")->required();
  add_config_flag(cmd_inverse, inverse_args.config);

  SelectArgs select_args;
  CLI::App* cmd_select = app.add_subcommand("select", "choose (L, K) by cross-validation");
  cmd_select->add_option("--in", select_args.in, "input matrix")->required();
  cmd_select->add_option("--outcome", select_args.outcome, "outcome column (for --criterion risk)");
  cmd_select->add_option("--criterion", select_args.criterion, "energy | risk");
  cmd_select->add_option("--levels", select_args.levels, "comma list of L values");
  cmd_select->add_option("--ks", select_args.ks, "comma list of K values");
  cmd_select->add_option("--folds", select_args.folds, "fold count");
  cmd_select->add_option("--seed", select_args.seed, "fold-assignment seed");
  cmd_select->add_option("--predictor", select_args.predictor, "ridge | knn");
  cmd_select->add_option("--lambda", select_args.lambda, "ridge penalty");
  cmd_select->add_option("--knn-k", select_args.knn_k, "neighbor count for knn");
  cmd_select->add_option("--similarity", select_args.similarity, "correlation | covariance");
  cmd_select->add_option("--out", select_args.out, "report CSV")->required();
  add_threads_and_config(cmd_select, select_args.threads, select_args.config);

  ReduceArgs reduce_args;
  CLI::App* cmd_reduce = app.add_subcommand(
      "reduce", "screen variables, fit treelet, select (L, K), emit features");
  cmd_reduce->add_option("--in", reduce_args.in, "input matrix")->required();
  cmd_reduce->add_option("--outcome", reduce_args.outcome, "outcome column")->required();
  cmd_reduce->add_option("--m", reduce_args.m, "variables kept by the screen")->required();
  cmd_reduce->add_option("--levels", reduce_args.levels, "comma list of L values");
  cmd_reduce->add_option("--ks", reduce_args.ks, "comma list of K values");
  cmd_reduce->add_option("--folds", reduce_args.folds, "fold count");
  cmd_reduce->add_option("--seed", reduce_args.seed, "fold-assignment seed");
  cmd_reduce->add_option("--predictor", reduce_args.predictor, "ridge | knn");
  cmd_reduce->add_option("--lambda", reduce_args.lambda, "ridge penalty");
  cmd_reduce->add_option("--knn-k", reduce_args.knn_k, "neighbor count for knn");
  cmd_reduce->add_option("--similarity", reduce_args.similarity, "correlation | covariance");
  cmd_reduce->add_option("--out-dir", reduce_args.out_dir, "output directory")->required();
  add_threads_and_config(cmd_reduce, reduce_args.threads, reduce_args.config);

  BenchArgs bench_args;
  CLI::App* cmd_bench = app.add_subcommand(
      "bench", "treelet vs PCA subspace recovery on planted-structure data");
  cmd_bench->add_option("--k0", bench_args.k0, "planted factor count");
  cmd_bench->add_option("--block-size", bench_args.block_size, "variables per block");
  cmd_bench->add_option("--p", bench_args.p, "total variables");
  cmd_bench->add_option("--noise-sd", bench_args.noise_sd, "noise standard deviation");
  cmd_bench->add_option("--amplitude", bench_args.amplitude,
                        "per-block loading amplitude (default sqrt(block size))");
  cmd_bench->add_option("--n-list", bench_args.n_list, "comma list of sample sizes");
  cmd_bench->add_option("--seeds", bench_args.seeds, "replicates per sample size");
  cmd_bench->add_option("--seed", bench_args.seed, "base seed");
  cmd_bench->add_option("--similarity", bench_args.similarity, "correlation | covariance");
  cmd_bench->add_option("--out", bench_args.out, "long-format CSV (method,n,seed,angle)")->required();
  add_threads_and_config(cmd_bench, bench_args.threads, bench_args.config);

  StabilityArgs stability_args;
  CLI::App* cmd_stability = app.add_subcommand(
      "stability", "bootstrap reproducibility of the merge sequence");
  cmd_stability->add_option("--in", stability_args.in, "input matrix")->required();
  cmd_stability->add_option("--replicates", stability_args.replicates, "bootstrap replicates");
  cmd_stability->add_option("--level", stability_args.level, "tree height (default: p-1)");
  cmd_stability->add_option("--seed", stability_args.seed, "resampling seed");
  cmd_stability->add_option("--similarity", stability_args.similarity, "correlation | covariance");
  cmd_stability->add_option("--out-dir", stability_args.out_dir, "output directory")->required();
  add_threads_and_config(cmd_stability, stability_args.threads, stability_args.config);

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    args = expand_config(args);
  } catch (const io_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  std::reverse(args.begin(), args.end());
  try {
    app.parse(std::move(args));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the message
    return 2;
  }

  try {
    if (app.got_subcommand(cmd_gen)) return run_gen(gen_args);
    if (app.got_subcommand(cmd_fit)) return run_fit(fit_args);
    if (app.got_subcommand(cmd_transform)) return run_transform(transform_args);
    if (app.got_subcommand(cmd_inverse)) return run_inverse(inverse_args);
    if (app.got_subcommand(cmd_select)) return run_select(select_args);
    if (app.got_subcommand(cmd_reduce)) return run_reduce(reduce_args);
    if (app.got_subcommand(cmd_bench)) return run_bench(bench_args);
    if (app.got_subcommand(cmd_stability)) return run_stability(stability_args);
  } catch (const config_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const treelet::range_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const shape_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const data_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
