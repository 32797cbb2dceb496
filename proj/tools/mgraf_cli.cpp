// mgraf: batch CLI for fitting M-GRAF models to stacks of binary networks
// and running the associated simulation, model-selection, classification,
// identification, goodness-of-fit, edge-testing and scaling studies.
//
// Conventions
//   * every run writes manifest.json (resolved config, seed, input digests)
//     into the output directory, enough to re-run the command bit-identically;
//   * reports are JSON, tabular data CSV, matrices in the stack formats;
//   * progress goes to stderr, data only to files;
//   * exit 0 on success (convergence warnings allowed unless --strict),
//     2 on invalid input/config, 1 on runtime failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mgraf/baselines.hpp"
#include "mgraf/cise.hpp"
#include "mgraf/gof.hpp"
#include "mgraf/metrics.hpp"
#include "mgraf/netdata.hpp"
#include "mgraf/parallel.hpp"
#include "mgraf/penlogit.hpp"
#include "mgraf/perfbench.hpp"
#include "mgraf/serialize.hpp"
#include "mgraf/simulate.hpp"
#include "mgraf/variants.hpp"

namespace fs = std::filesystem;
using mgraf::Json;
using mgraf::Matrix;
using mgraf::Vector;

namespace {

constexpr const char* kVersion = "0.1.0";

// Thrown while validating/loading inputs; maps to exit code 2.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) throw InputError("cannot read " + path);
  std::uint64_t h = 1469598103934665603ULL;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream ss;
  ss << std::hex << v;
  return ss.str();
}

struct RunContext {
  std::string command;
  std::string out_dir;
  std::uint64_t seed = 0;
  int threads = 0;
  bool strict = false;
  Json config = Json::object();
  Json inputs = Json::array();
  bool warned = false;

  void note_input(const std::string& path) {
    Json entry{{"path", path}};
    if (fs::is_directory(path)) {
      Json files = Json::array();
      std::vector<fs::path> sorted;
      for (const auto& e : fs::directory_iterator(path)) {
        if (e.is_regular_file()) sorted.push_back(e.path());
      }
      std::sort(sorted.begin(), sorted.end());
      for (const auto& f : sorted) {
        files.push_back(Json{{"path", f.string()}, {"fnv1a64", hex64(fnv1a64_file(f.string()))}});
      }
      entry["files"] = std::move(files);
    } else {
      entry["fnv1a64"] = hex64(fnv1a64_file(path));
    }
    inputs.push_back(std::move(entry));
  }

  void warn(const std::string& msg) {
    warned = true;
    std::cerr << "[mgraf] warning: " << msg << "\n";
  }

  fs::path out(const std::string& name) const { return fs::path(out_dir) / name; }

  void write_manifest(const std::vector<std::string>& outputs) const {
    Json m{{"tool", "mgraf"},     {"version", kVersion}, {"command", command},
           {"seed", seed},        {"threads", threads},  {"strict", strict},
           {"config", config},    {"inputs", inputs},    {"outputs", outputs}};
    std::ofstream f(out("manifest.json"));
    f << m.dump(1) << "\n";
  }
};

void write_json(const fs::path& path, const Json& j) {
  std::ofstream f(path);
  if (!f.good()) throw std::runtime_error("cannot open " + path.string());
  f << j.dump(1) << "\n";
}

void progress(const std::string& msg) { std::cerr << "[mgraf] " << msg << "\n"; }

// "2,5,8" or "1..8" -> list of ints
std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  const auto dots = text.find("..");
  if (dots != std::string::npos) {
    const int lo = std::stoi(text.substr(0, dots));
    const int hi = std::stoi(text.substr(dots + 2));
    if (hi < lo) throw InputError("bad range '" + text + "'");
    for (int v = lo; v <= hi; ++v) out.push_back(v);
    return out;
  }
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stoi(tok));
  }
  if (out.empty()) throw InputError("empty list '" + text + "'");
  return out;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stod(tok));
  }
  if (out.empty()) throw InputError("empty list '" + text + "'");
  return out;
}

mgraf::StackFormat parse_format(const std::string& f) {
  if (f == "matrix") return mgraf::StackFormat::Matrix;
  if (f == "edgelist") return mgraf::StackFormat::EdgeList;
  throw InputError("unknown format '" + f + "' (matrix|edgelist)");
}

mgraf::NetworkStack load_input_stack(RunContext& ctx, const std::string& input,
                                     const std::string& format, const std::string& labels) {
  if (input.empty()) throw InputError("missing --input");
  if (!fs::exists(input)) throw InputError("no such file or directory: " + input);
  ctx.note_input(input);
  mgraf::NetworkStack stack;
  try {
    stack = mgraf::load_stack(input, parse_format(format));
  } catch (const std::exception& e) {
    throw InputError(e.what());
  }
  if (!labels.empty()) {
    if (!fs::exists(labels)) throw InputError("no such labels file: " + labels);
    ctx.note_input(labels);
    try {
      mgraf::attach_labels(stack, mgraf::load_labels(labels));
    } catch (const std::exception& e) {
      throw InputError(e.what());
    }
  }
  progress("loaded " + std::to_string(stack.size()) + " networks on " +
           std::to_string(stack.nodes()) + " nodes");
  return stack;
}

// Labels as 0-based class ids in lexicographic label order.
std::vector<int> class_ids(const mgraf::NetworkStack& stack) {
  if (stack.labels.empty()) throw InputError("this command needs --labels");
  std::vector<std::string> uniq = stack.labels;
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  std::vector<int> ids;
  for (const auto& l : stack.labels) {
    ids.push_back(static_cast<int>(std::lower_bound(uniq.begin(), uniq.end(), l) - uniq.begin()));
  }
  return ids;
}

struct FitFlags {
  int K = 3;
  std::string gamma = "1";
  double epsilon = 0.01;
  int max_iter = 50;
  std::string variant = "full";
  int cv_folds = 5;
};

void add_fit_flags(CLI::App* cmd, FitFlags& f, bool with_k = true) {
  if (with_k) cmd->add_option("--K", f.K, "latent dimension");
  cmd->add_option("--gamma", f.gamma,
                  "prior precision factor, or cv:g1,g2,... for cross-validation");
  cmd->add_option("--epsilon", f.epsilon, "relative log-likelihood stopping threshold");
  cmd->add_option("--max-iter", f.max_iter, "maximum CISE iterations");
  cmd->add_option("--variant", f.variant, "full | shared-lambda | shared-q");
  cmd->add_option("--cv-folds", f.cv_folds, "folds for gamma cross-validation");
}

// Resolves --gamma, running CV when requested. Returns (gamma, cv report).
std::pair<double, Json> resolve_gamma(const FitFlags& flags, const mgraf::NetworkStack& stack,
                                      std::uint64_t seed) {
  if (flags.gamma.rfind("cv:", 0) != 0) return {std::stod(flags.gamma), Json()};
  const auto grid = parse_double_list(flags.gamma.substr(3));
  progress("cross-validating gamma over " + std::to_string(grid.size()) + " values");
  const auto res = mgraf::select_gamma_cv(stack, mgraf::variant_from_name(flags.variant), flags.K,
                                          grid, flags.cv_folds, seed);
  Json report{{"grid", grid}, {"mean_heldout_ll", res.mean_heldout_ll}, {"chosen", res.gamma}};
  return {res.gamma, report};
}

std::pair<mgraf::MgrafModel, mgraf::FitReport> run_fit(const mgraf::NetworkStack& stack,
                                                       const FitFlags& flags, double gamma,
                                                       std::uint64_t seed) {
  mgraf::CiseOptions opts;
  opts.gamma = gamma;
  opts.epsilon = flags.epsilon;
  opts.max_iter = flags.max_iter;
  opts.seed = seed;
  return mgraf::fit_mgraf(stack, mgraf::variant_from_name(flags.variant), flags.K, opts);
}

void check_convergence(RunContext& ctx, const mgraf::FitReport& report, const std::string& what) {
  if (!report.converged) ctx.warn(what + ": stopped at the iteration cap before convergence");
  if (!report.logistic_all_converged) {
    ctx.warn(what + ": a penalized-logistic step hit its iteration cap");
  }
}

std::string csv_num(double v) {
  if (std::isnan(v)) return "";
  std::ostringstream ss;
  ss.precision(12);
  ss << v;
  return ss.str();
}

// ---------------------------------------------------------------------------
// Subcommand bodies

int cmd_fit(RunContext& ctx, const FitFlags& flags, const std::string& input,
            const std::string& format, bool save_probs) {
  const auto stack = load_input_stack(ctx, input, format, "");
  const auto [gamma, cv_report] = resolve_gamma(flags, stack, ctx.seed);
  ctx.config["resolved_gamma"] = gamma;
  progress("fitting " + flags.variant + " variant at K=" + std::to_string(flags.K) +
           ", gamma=" + std::to_string(gamma));
  const auto [model, report] = run_fit(stack, flags, gamma, ctx.seed);
  check_convergence(ctx, report, "fit");

  fs::create_directories(ctx.out_dir);
  std::vector<std::string> outputs{"model.json", "fit_report.json", "deviations.csv"};
  mgraf::save_model(model, ctx.out("model.json").string(), &report);
  write_json(ctx.out("fit_report.json"), mgraf::report_to_json(report));
  {
    std::ofstream csv(ctx.out("deviations.csv"));
    csv << "network,id,positive_loadings,frobenius_norm";
    for (int k = 0; k < model.rank; ++k) csv << ",lambda" << k + 1;
    csv << "\n";
    for (int i = 0; i < model.num_networks; ++i) {
      const Vector& lam = model.lambda_of(i);
      int pos = 0;
      for (int k = 0; k < model.rank; ++k) pos += lam[k] > 0.0 ? 1 : 0;
      csv << i << "," << stack.ids[static_cast<std::size_t>(i)] << "," << pos << ","
          << csv_num(model.deviation(i).norm());
      for (int k = 0; k < model.rank; ++k) csv << "," << csv_num(lam[k]);
      csv << "\n";
    }
  }
  if (!cv_report.is_null()) {
    write_json(ctx.out("gamma_cv.json"), cv_report);
    outputs.push_back("gamma_cv.json");
  }
  if (save_probs) {
    std::vector<Matrix> pis;
    for (int i = 0; i < model.num_networks; ++i) pis.push_back(mgraf::edge_prob_matrix(model, i));
    mgraf::save_real_stack(pis, ctx.out("pihat.txt").string());
    outputs.push_back("pihat.txt");
  }
  ctx.write_manifest(outputs);
  return 0;
}

int cmd_simulate(RunContext& ctx, const std::string& kind, const mgraf::SimulationSpec& spec,
                 double er_p, double spread) {
  fs::create_directories(ctx.out_dir);
  std::vector<std::string> outputs{"stack.txt"};
  if (kind == "er") {
    const auto stack = mgraf::sample_er(spec.nodes, er_p, spec.networks, spec.seed);
    mgraf::save_stack(stack, ctx.out("stack.txt").string());
  } else if (kind == "mgraf") {
    const auto truth = mgraf::make_truth(spec);
    const auto stack = mgraf::sample_mgraf(truth.Z0, truth.D0, mgraf::Rng::derive(spec.seed, 1));
    mgraf::save_stack(stack, ctx.out("stack.txt").string());
    Json tj{{"Z0", mgraf::matrix_to_json(truth.Z0)}, {"rank", truth.rank}};
    Json ds = Json::array();
    for (const auto& d : truth.D0) ds.push_back(mgraf::matrix_to_json(d));
    tj["D0"] = std::move(ds);
    write_json(ctx.out("truth.json"), tj);
    outputs.push_back("truth.json");
  } else if (kind == "scan-rescan") {
    const auto data = mgraf::sample_scan_rescan(spec, spread, spec.seed);
    mgraf::save_stack(data.stack, ctx.out("stack.txt").string());
    std::ofstream labels(ctx.out("labels.csv"));
    labels << "id,label\n";
    for (int i = 0; i < data.stack.size(); ++i) {
      labels << data.stack.ids[static_cast<std::size_t>(i)] << ","
             << data.stack.labels[static_cast<std::size_t>(i)] << "\n";
    }
    outputs.push_back("labels.csv");
    Json tj{{"Z0", mgraf::matrix_to_json(data.truth.Z0)}, {"rank", data.truth.rank}};
    Json ds = Json::array();
    for (const auto& d : data.truth.D0) ds.push_back(mgraf::matrix_to_json(d));
    tj["D0"] = std::move(ds);
    write_json(ctx.out("truth.json"), tj);
    outputs.push_back("truth.json");
  } else {
    throw InputError("unknown --kind '" + kind + "' (er|mgraf|scan-rescan)");
  }
  const auto reread = mgraf::load_stack(ctx.out("stack.txt").string(), mgraf::StackFormat::Matrix);
  progress("wrote " + std::to_string(reread.size()) + " networks");
  ctx.write_manifest(outputs);
  return 0;
}

int cmd_elbow(RunContext& ctx, const FitFlags& flags, const std::string& input,
              const std::string& format, const std::string& k_grid_text, int reps,
              const mgraf::SimulationSpec& spec) {
  const auto k_grid = parse_int_list(k_grid_text);
  mgraf::CiseOptions opts;
  opts.gamma = std::stod(flags.gamma);
  opts.epsilon = flags.epsilon;
  opts.max_iter = flags.max_iter;
  mgraf::ElbowScan scan;
  if (!input.empty()) {
    const auto stack = load_input_stack(ctx, input, format, "");
    if (reps > 1) ctx.warn("fixed input stack: repetitions forced to 1");
    scan = mgraf::elbow_scan_stack(stack, k_grid, mgraf::variant_from_name(flags.variant), opts);
  } else {
    progress("resampling " + std::to_string(reps) + " stacks from the simulation spec");
    scan = mgraf::elbow_scan_resampled(spec, k_grid, reps,
                                       mgraf::variant_from_name(flags.variant), opts);
  }
  if (scan.failed_fits > 0) {
    ctx.warn(std::to_string(scan.failed_fits) + " per-K fits failed");
  }

  fs::create_directories(ctx.out_dir);
  {
    std::ofstream csv(ctx.out("elbow.csv"));
    csv << "K,mean_ll,lo,hi\n";
    for (std::size_t j = 0; j < scan.k_grid.size(); ++j) {
      csv << scan.k_grid[j] << "," << csv_num(scan.mean_ll[j]) << "," << csv_num(scan.lo[j])
          << "," << csv_num(scan.hi[j]) << "\n";
    }
  }
  Json j{{"k_grid", scan.k_grid}, {"mean_ll", scan.mean_ll},
         {"lo", scan.lo},         {"hi", scan.hi},
         {"aic", scan.aic},       {"bic", scan.bic},
         {"failed_fits", scan.failed_fits}};
  j["suggested_k"] = scan.suggested_k ? Json(*scan.suggested_k) : Json();
  Json per_rep = Json::array();
  for (Eigen::Index r = 0; r < scan.per_rep.rows(); ++r) {
    std::vector<double> row;
    for (Eigen::Index c = 0; c < scan.per_rep.cols(); ++c) row.push_back(scan.per_rep(r, c));
    per_rep.push_back(row);
  }
  j["per_repetition_ll"] = std::move(per_rep);
  write_json(ctx.out("elbow.json"), j);
  if (scan.suggested_k) progress("suggested K = " + std::to_string(*scan.suggested_k));
  ctx.write_manifest({"elbow.csv", "elbow.json"});
  return 0;
}

int cmd_classify(RunContext& ctx, const FitFlags& flags, const std::string& input,
                 const std::string& format, const std::string& labels, int folds, int repeats) {
  const auto stack = load_input_stack(ctx, input, format, labels);
  const auto ids = class_ids(stack);
  const auto [gamma, cv_report] = resolve_gamma(flags, stack, ctx.seed);
  const auto [model, report] = run_fit(stack, flags, gamma, ctx.seed);
  check_convergence(ctx, report, "classify fit");
  const Matrix dist = mgraf::pairwise_distance(model);
  const auto res = mgraf::repeated_kfold_classification(dist, ids, folds, repeats, ctx.seed);

  fs::create_directories(ctx.out_dir);
  write_json(ctx.out("classify.json"),
             Json{{"variant", flags.variant},
                  {"K", flags.K},
                  {"gamma", gamma},
                  {"folds", folds},
                  {"repeats", repeats},
                  {"accuracy_mean", res.mean},
                  {"accuracy_sd", res.sd},
                  {"per_repeat", res.per_repeat}});
  {
    std::ofstream csv(ctx.out("classify_repeats.csv"));
    csv << "repeat,accuracy\n";
    for (std::size_t r = 0; r < res.per_repeat.size(); ++r) {
      csv << r << "," << csv_num(res.per_repeat[r]) << "\n";
    }
  }
  progress("accuracy " + std::to_string(res.mean) + " +- " + std::to_string(res.sd));
  ctx.write_manifest({"classify.json", "classify_repeats.csv"});
  return 0;
}

int cmd_identify(RunContext& ctx, const FitFlags& flags, const std::string& input,
                 const std::string& format, const std::string& labels,
                 const std::string& k_list_text, const std::string& methods_text,
                 const mgraf::SimulationSpec& spec, double spread, bool synthetic) {
  mgraf::NetworkStack stack;
  if (synthetic) {
    progress("generating synthetic scan-rescan data");
    stack = mgraf::sample_scan_rescan(spec, spread, spec.seed).stack;
  } else {
    stack = load_input_stack(ctx, input, format, labels);
    if (stack.labels.empty()) throw InputError("identify needs --labels with subject ids");
  }
  const auto k_list = parse_int_list(k_list_text);
  std::vector<std::string> methods;
  {
    std::stringstream ss(methods_text);
    std::string tok;
    while (std::getline(ss, tok, ',')) methods.push_back(tok);
  }
  if (methods.empty()) throw InputError("empty --methods");

  fs::create_directories(ctx.out_dir);
  std::ofstream csv(ctx.out("identify.csv"));
  csv << "K";
  for (const auto& m : methods) csv << "," << m;
  csv << "\n";
  Json cells = Json::array();
  for (int K : k_list) {
    csv << K;
    for (const auto& method : methods) {
      progress("identify: method=" + method + " K=" + std::to_string(K));
      Matrix dist;
      if (method == "separate") {
        dist = mgraf::baseline_distance(mgraf::fit_separate(stack, K));
      } else if (method == "mgraf1" || method == "mgraf2") {
        FitFlags f = flags;
        f.K = K;
        f.variant = method == "mgraf1" ? "full" : "shared-lambda";
        const auto [gamma, cv] = resolve_gamma(f, stack, ctx.seed);
        const auto [model, report] = run_fit(stack, f, gamma, ctx.seed);
        check_convergence(ctx, report, "identify fit " + method + " K=" + std::to_string(K));
        dist = mgraf::pairwise_distance(model);
      } else {
        throw InputError("unknown method '" + method + "' (mgraf1|mgraf2|separate)");
      }
      const double acc = mgraf::loocv_identification(dist, stack.labels);
      csv << "," << csv_num(acc);
      cells.push_back(Json{{"method", method}, {"K", K}, {"accuracy", acc}});
    }
    csv << "\n";
  }
  write_json(ctx.out("identify.json"), Json{{"cells", cells}});
  ctx.write_manifest({"identify.csv", "identify.json"});
  return 0;
}

int cmd_gof(RunContext& ctx, const std::string& input, const std::string& format,
            const std::string& model_path, const std::string& pihat_path, int replicates) {
  const auto stack = load_input_stack(ctx, input, format, "");
  std::vector<Matrix> pis;
  if (!model_path.empty()) {
    if (!fs::exists(model_path)) throw InputError("no such model archive: " + model_path);
    ctx.note_input(model_path);
    const auto model = mgraf::load_model(model_path);
    if (model.num_nodes != stack.nodes() || model.num_networks != stack.size()) {
      throw InputError("model dimensions do not match the input stack");
    }
    for (int i = 0; i < stack.size(); ++i) pis.push_back(mgraf::edge_prob_matrix(model, i));
  } else if (!pihat_path.empty()) {
    if (!fs::exists(pihat_path)) throw InputError("no such probability stack: " + pihat_path);
    ctx.note_input(pihat_path);
    pis = mgraf::load_real_stack(pihat_path);
    if (static_cast<int>(pis.size()) != stack.size() || pis[0].rows() != stack.nodes()) {
      throw InputError("probability stack does not match the input stack");
    }
  } else {
    throw InputError("gof needs --model or --pihat");
  }

  const auto auc = mgraf::auc_rss(stack, pis);
  const auto topo = mgraf::predictive_topology_check(pis, stack, replicates, ctx.seed);

  fs::create_directories(ctx.out_dir);
  {
    std::ofstream csv(ctx.out("auc_rss.csv"));
    csv << "network,id,auc,rss\n";
    for (int i = 0; i < stack.size(); ++i) {
      const auto& r = auc.per_network[static_cast<std::size_t>(i)];
      csv << i << "," << stack.ids[static_cast<std::size_t>(i)] << ","
          << (r.auc_defined ? csv_num(r.auc) : "") << "," << csv_num(r.rss) << "\n";
    }
  }
  {
    std::ofstream csv(ctx.out("topology.csv"));
    csv << "subject,measure,observed,pred_mean,lo,hi\n";
    for (int i = 0; i < stack.size(); ++i) {
      for (int m = 0; m < mgraf::kTopologyMeasures; ++m) {
        csv << stack.ids[static_cast<std::size_t>(i)] << "," << mgraf::topology_measure_name(m)
            << "," << csv_num(topo.observed(i, m)) << "," << csv_num(topo.pred_mean(i, m)) << ","
            << csv_num(topo.lo(i, m)) << "," << csv_num(topo.hi(i, m)) << "\n";
      }
    }
  }
  write_json(ctx.out("gof.json"), Json{{"auc_mean", auc.auc_mean},
                                       {"auc_sd", auc.auc_sd},
                                       {"auc_defined_count", auc.auc_defined_count},
                                       {"rss_mean", auc.rss_mean},
                                       {"rss_sd", auc.rss_sd},
                                       {"replicates", replicates}});
  progress("AUC " + std::to_string(auc.auc_mean) + ", RSS " + std::to_string(auc.rss_mean));
  ctx.write_manifest({"auc_rss.csv", "topology.csv", "gof.json"});
  return 0;
}

int cmd_edgetest(RunContext& ctx, const FitFlags& flags, const std::string& input,
                 const std::string& format, const std::string& labels,
                 const std::string& model_path, double fdr) {
  const auto stack = load_input_stack(ctx, input, format, labels);
  const auto ids = class_ids(stack);
  int max_id = 0;
  for (int c : ids) max_id = std::max(max_id, c);
  if (max_id != 1) throw InputError("edgetest needs exactly two label groups");

  std::vector<Matrix> devs;
  if (!model_path.empty()) {
    if (!fs::exists(model_path)) throw InputError("no such model archive: " + model_path);
    ctx.note_input(model_path);
    const auto model = mgraf::load_model(model_path);
    if (model.num_networks != stack.size()) {
      throw InputError("model does not match the input stack");
    }
    devs = mgraf::deviance_matrices(model);
  } else {
    const auto [gamma, cv] = resolve_gamma(flags, stack, ctx.seed);
    const auto [model, report] = run_fit(stack, flags, gamma, ctx.seed);
    check_convergence(ctx, report, "edgetest fit");
    devs = mgraf::deviance_matrices(model);
  }

  const auto rep = mgraf::edge_group_ttest(devs, ids, fdr);
  fs::create_directories(ctx.out_dir);
  int rejected = 0;
  {
    std::ofstream csv(ctx.out("edgetest.csv"));
    csv << "u,v,t,p,reject\n";
    for (std::size_t l = 0; l < rep.p.size(); ++l) {
      const auto [u, v] = mgraf::tri_pair(static_cast<std::int64_t>(l), rep.nodes);
      csv << u + 1 << "," << v + 1 << "," << csv_num(rep.t[l]) << "," << csv_num(rep.p[l]) << ","
          << int(rep.reject[l]) << "\n";
      rejected += rep.reject[l];
    }
  }
  write_json(ctx.out("edgetest.json"),
             Json{{"fdr_level", fdr},
                  {"edges", rep.p.size()},
                  {"rejected", rejected}});
  progress(std::to_string(rejected) + " edges rejected at FDR <= " + std::to_string(fdr));
  ctx.write_manifest({"edgetest.csv", "edgetest.json"});
  return 0;
}

int cmd_baseline(RunContext& ctx, const std::string& input, const std::string& format, int K) {
  const auto stack = load_input_stack(ctx, input, format, "");
  const auto fit = mgraf::fit_separate(stack, K);
  std::vector<Matrix> raw, clamped;
  for (int i = 0; i < stack.size(); ++i) {
    raw.push_back(fit.pi_hat(i));
    clamped.push_back(fit.pi_hat_clamped(i));
  }
  const auto auc_raw = mgraf::auc_rss(stack, raw);
  const auto auc_clamped = mgraf::auc_rss(stack, clamped);
  const Matrix dist = mgraf::baseline_distance(fit);

  fs::create_directories(ctx.out_dir);
  mgraf::save_real_stack(raw, ctx.out("pihat.txt").string());
  {
    std::ofstream csv(ctx.out("distances.csv"));
    for (int i = 0; i < dist.rows(); ++i) {
      for (int j = 0; j < dist.cols(); ++j) {
        csv << csv_num(dist(i, j)) << (j + 1 < dist.cols() ? "," : "");
      }
      csv << "\n";
    }
  }
  write_json(ctx.out("baseline.json"),
             Json{{"K", K},
                  {"auc_mean_raw", auc_raw.auc_mean},
                  {"auc_sd_raw", auc_raw.auc_sd},
                  {"rss_mean_raw", auc_raw.rss_mean},
                  {"rss_sd_raw", auc_raw.rss_sd},
                  {"auc_mean_clamped", auc_clamped.auc_mean},
                  {"auc_sd_clamped", auc_clamped.auc_sd},
                  {"rss_mean_clamped", auc_clamped.rss_mean},
                  {"rss_sd_clamped", auc_clamped.rss_sd}});
  ctx.write_manifest({"pihat.txt", "distances.csv", "baseline.json"});
  return 0;
}

int cmd_bench(RunContext& ctx, const mgraf::ScalingGrid& grid, int reps, int measured, int warmup,
              double budget) {
  progress("running scaling study (single-threaded timing)");
  const auto report = mgraf::run_scaling(grid, reps, ctx.seed, measured, warmup, budget);
  fs::create_directories(ctx.out_dir);
  {
    std::ofstream csv(ctx.out("scaling.csv"));
    csv << "axis,n,V,K,repetitions,mean_iter_seconds,timed_out\n";
    for (const auto& c : report.cells) {
      csv << c.axis << "," << c.networks << "," << c.nodes << "," << c.rank << ","
          << c.repetitions << "," << csv_num(c.mean_iter_seconds) << "," << int(c.timed_out)
          << "\n";
    }
  }
  write_json(ctx.out("scaling.json"), Json{{"slope_n", report.slope_networks},
                                           {"slope_V", report.slope_nodes},
                                           {"slope_K", report.slope_rank}});
  progress("slopes: n " + std::to_string(report.slope_networks) + ", V " +
           std::to_string(report.slope_nodes) + ", K " + std::to_string(report.slope_rank));
  ctx.write_manifest({"scaling.csv", "scaling.json"});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"M-GRAF: common and individual structure of replicated binary networks"};
  app.set_config("--config", "", "config file with the same keys as the flags");
  app.require_subcommand(1);

  std::string out_dir = ".";
  std::uint64_t seed = 0;
  int threads = 0;
  bool strict = false;
  app.add_option("--out", out_dir, "output directory")->envname("MGRAF_OUTDIR");
  app.add_option("--seed", seed, "master seed; all randomness derives from it");
  app.add_option("--threads", threads, "worker thread cap (0 = all cores)");
  app.add_flag("--strict", strict, "treat convergence warnings as failures");

  std::string input, format = "matrix", labels, model_path, pihat_path, kind = "mgraf";
  std::string k_list = "2,5,8", methods = "mgraf1,mgraf2,separate", k_grid = "1..6";
  FitFlags fit_flags;
  int folds = 10, repeats = 30, replicates = 100, elbow_reps = 1, baseline_k = 3;
  double fdr = 0.15, er_p = 0.5, spread = 1.0;
  bool synthetic = false, save_probs = false;
  mgraf::SimulationSpec spec;
  mgraf::ScalingGrid grid;
  int bench_reps = 10, bench_measured = 3, bench_warmup = 1;
  double bench_budget = 120.0;
  std::string grid_n, grid_v, grid_k;

  auto add_spec_flags = [&](CLI::App* cmd) {
    cmd->add_option("--V", spec.nodes, "nodes");
    cmd->add_option("--n", spec.networks, "networks (or subjects for scan-rescan)");
    cmd->add_option("--rank", spec.rank, "true latent dimension of the generator");
    cmd->add_option("--within", spec.within_block_logit, "within-community logit");
    cmd->add_option("--between", spec.between_block_logit, "between-community logit");
    cmd->add_option("--scale", spec.deviation_scale, "deviation loading scale (units of V)");
    cmd->add_option("--perturb", spec.perturb_fraction, "Z perturbation fraction per replicate");
  };

  CLI::App* fit = app.add_subcommand("fit", "estimate an M-GRAF model from a stack");
  fit->add_option("--input", input, "stack file or directory")->required();
  fit->add_option("--format", format, "matrix | edgelist");
  add_fit_flags(fit, fit_flags);
  fit->add_flag("--save-probs", save_probs, "also write the fitted edge-probability stack");

  CLI::App* simulate = app.add_subcommand("simulate", "generate synthetic network stacks");
  simulate->add_option("--kind", kind, "er | mgraf | scan-rescan");
  simulate->add_option("--p", er_p, "edge probability for er");
  simulate->add_option("--spread", spread, "between-subject deviation spread for scan-rescan");
  add_spec_flags(simulate);

  CLI::App* elbow = app.add_subcommand("elbow", "joint log-likelihood vs K scan");
  elbow->add_option("--input", input, "stack file or directory (fixed-stack mode)");
  elbow->add_option("--format", format, "matrix | edgelist");
  elbow->add_option("--K", k_grid, "K grid, e.g. 1..8 or 1,2,4");
  elbow->add_option("--reps", elbow_reps, "repetitions (resampled mode)");
  add_fit_flags(elbow, fit_flags, false);
  add_spec_flags(elbow);

  CLI::App* classify = app.add_subcommand("classify", "repeated k-fold proximity classification");
  classify->add_option("--input", input, "stack file or directory")->required();
  classify->add_option("--format", format, "matrix | edgelist");
  classify->add_option("--labels", labels, "CSV id,label")->required();
  classify->add_option("--folds", folds, "folds");
  classify->add_option("--repeats", repeats, "repetitions");
  add_fit_flags(classify, fit_flags);

  CLI::App* identify = app.add_subcommand("identify", "LOOCV scan-rescan identification table");
  identify->add_option("--input", input, "stack file or directory");
  identify->add_option("--format", format, "matrix | edgelist");
  identify->add_option("--labels", labels, "CSV id,label with subject ids");
  identify->add_option("--K", k_list, "comma list of K values");
  identify->add_option("--methods", methods, "comma list: mgraf1,mgraf2,separate");
  identify->add_flag("--synthetic", synthetic, "generate synthetic paired data instead of --input");
  identify->add_option("--spread", spread, "synthetic between-subject spread");
  add_fit_flags(identify, fit_flags, false);
  add_spec_flags(identify);

  CLI::App* gof = app.add_subcommand("gof", "edge-prediction and topology goodness-of-fit");
  gof->add_option("--input", input, "stack file or directory")->required();
  gof->add_option("--format", format, "matrix | edgelist");
  gof->add_option("--model", model_path, "fitted model archive");
  gof->add_option("--pihat", pihat_path, "externally computed probability stack");
  gof->add_option("--replicates", replicates, "predictive replicates per subject");

  CLI::App* edgetest = app.add_subcommand("edgetest", "per-edge group t-tests with BH control");
  edgetest->add_option("--input", input, "stack file or directory")->required();
  edgetest->add_option("--format", format, "matrix | edgelist");
  edgetest->add_option("--labels", labels, "CSV id,label with two groups")->required();
  edgetest->add_option("--model", model_path, "fitted model archive (otherwise fits here)");
  edgetest->add_option("--fdr", fdr, "FDR level q");
  add_fit_flags(edgetest, fit_flags);

  CLI::App* baseline = app.add_subcommand("baseline", "separate-factorization baseline");
  baseline->add_option("--input", input, "stack file or directory")->required();
  baseline->add_option("--format", format, "matrix | edgelist");
  baseline->add_option("--K", baseline_k, "rank of the truncated factorization");

  CLI::App* bench = app.add_subcommand("bench", "runtime scaling study");
  bench->add_option("--base-n", grid.base_networks, "base network count");
  bench->add_option("--base-V", grid.base_nodes, "base node count");
  bench->add_option("--base-K", grid.base_rank, "base latent dimension");
  bench->add_option("--n-axis", grid_n, "comma list for the n axis");
  bench->add_option("--V-axis", grid_v, "comma list for the V axis");
  bench->add_option("--K-axis", grid_k, "comma list for the K axis");
  bench->add_option("--reps", bench_reps, "stacks per cell");
  bench->add_option("--measured", bench_measured, "timed iterations per stack");
  bench->add_option("--warmup", bench_warmup, "warm-up iterations per stack");
  bench->add_option("--budget", bench_budget, "per-cell time budget in seconds");

  CLI11_PARSE(app, argc, argv);

  RunContext ctx;
  ctx.out_dir = out_dir;
  ctx.seed = seed;
  ctx.threads = threads;
  ctx.strict = strict;
  if (threads > 0) mgraf::set_max_threads(threads);
  spec.seed = seed;

  try {
    int rc = 1;
    if (app.got_subcommand(fit)) {
      ctx.command = "fit";
      ctx.config = Json{{"input", input},     {"format", format},
                        {"K", fit_flags.K},   {"gamma", fit_flags.gamma},
                        {"epsilon", fit_flags.epsilon}, {"max_iter", fit_flags.max_iter},
                        {"variant", fit_flags.variant}, {"cv_folds", fit_flags.cv_folds},
                        {"save_probs", save_probs}};
      rc = cmd_fit(ctx, fit_flags, input, format, save_probs);
    } else if (app.got_subcommand(simulate)) {
      ctx.command = "simulate";
      ctx.config = Json{{"kind", kind},       {"V", spec.nodes},
                        {"n", spec.networks}, {"rank", spec.rank},
                        {"p", er_p},          {"spread", spread},
                        {"within", spec.within_block_logit},
                        {"between", spec.between_block_logit},
                        {"scale", spec.deviation_scale}};
      rc = cmd_simulate(ctx, kind, spec, er_p, spread);
    } else if (app.got_subcommand(elbow)) {
      ctx.command = "elbow";
      ctx.config = Json{{"input", input}, {"K_grid", k_grid},      {"reps", elbow_reps},
                        {"gamma", fit_flags.gamma}, {"epsilon", fit_flags.epsilon},
                        {"variant", fit_flags.variant}, {"V", spec.nodes},
                        {"n", spec.networks},           {"rank", spec.rank}};
      rc = cmd_elbow(ctx, fit_flags, input, format, k_grid, elbow_reps, spec);
    } else if (app.got_subcommand(classify)) {
      ctx.command = "classify";
      ctx.config = Json{{"input", input},   {"labels", labels},  {"K", fit_flags.K},
                        {"gamma", fit_flags.gamma}, {"variant", fit_flags.variant},
                        {"folds", folds},   {"repeats", repeats}};
      rc = cmd_classify(ctx, fit_flags, input, format, labels, folds, repeats);
    } else if (app.got_subcommand(identify)) {
      ctx.command = "identify";
      ctx.config = Json{{"input", input},     {"labels", labels}, {"K_list", k_list},
                        {"methods", methods}, {"synthetic", synthetic},
                        {"spread", spread},   {"V", spec.nodes},  {"subjects", spec.networks},
                        {"rank", spec.rank},  {"gamma", fit_flags.gamma}};
      rc = cmd_identify(ctx, fit_flags, input, format, labels, k_list, methods, spec, spread,
                        synthetic);
    } else if (app.got_subcommand(gof)) {
      ctx.command = "gof";
      ctx.config = Json{{"input", input},
                        {"model", model_path},
                        {"pihat", pihat_path},
                        {"replicates", replicates}};
      rc = cmd_gof(ctx, input, format, model_path, pihat_path, replicates);
    } else if (app.got_subcommand(edgetest)) {
      ctx.command = "edgetest";
      ctx.config = Json{{"input", input}, {"labels", labels}, {"model", model_path},
                        {"fdr", fdr},     {"K", fit_flags.K}, {"variant", fit_flags.variant},
                        {"gamma", fit_flags.gamma}};
      rc = cmd_edgetest(ctx, fit_flags, input, format, labels, model_path, fdr);
    } else if (app.got_subcommand(baseline)) {
      ctx.command = "baseline";
      ctx.config = Json{{"input", input}, {"K", baseline_k}};
      rc = cmd_baseline(ctx, input, format, baseline_k);
    } else if (app.got_subcommand(bench)) {
      ctx.command = "bench";
      if (!grid_n.empty()) grid.networks_axis = parse_int_list(grid_n);
      if (!grid_v.empty()) grid.nodes_axis = parse_int_list(grid_v);
      if (!grid_k.empty()) grid.rank_axis = parse_int_list(grid_k);
      ctx.config = Json{{"base_n", grid.base_networks}, {"base_V", grid.base_nodes},
                        {"base_K", grid.base_rank},     {"n_axis", grid.networks_axis},
                        {"V_axis", grid.nodes_axis},    {"K_axis", grid.rank_axis},
                        {"reps", bench_reps},           {"measured", bench_measured},
                        {"warmup", bench_warmup},       {"budget", bench_budget}};
      rc = cmd_bench(ctx, grid, bench_reps, bench_measured, bench_warmup, bench_budget);
    }
    if (rc == 0 && ctx.warned && ctx.strict) {
      std::cout << Json{{"error", "convergence warnings with --strict"}}.dump() << "\n";
      return 1;
    }
    return rc;
  } catch (const InputError& e) {
    std::cout << Json{{"error", e.what()}, {"kind", "input"}}.dump() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cout << Json{{"error", e.what()}, {"kind", "input"}}.dump() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cout << Json{{"error", e.what()}, {"kind", "runtime"}}.dump() << "\n";
    return 1;
  }
}
